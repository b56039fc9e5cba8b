//! The two-site tight-binding (position-based) qubit.
//!
//! Position basis `[|x1⟩, |x2⟩]`, Hamiltonian
//! `H = [[Ep1, t_s], [t_s*, Ep2]]` with `t_s = |t_s|·e^{iα}`.

use crate::error::{Error, Result};
use crate::linalg::{
    self, check_interval, fix_phase, inner, time_ordered_propagator, two_level, BasisLabel,
    ComplexMatrix, StateVector, C64,
};
use crate::quad::adaptive_simpson;
use crate::signal::DriveSignal;

/// Absolute tolerance for eigenphase integrals done by quadrature.
const PHASE_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct QubitParams {
    pub ep1: DriveSignal,
    pub ep2: DriveSignal,
    pub ts_mag: DriveSignal,
    pub ts_phase: DriveSignal,
}

impl QubitParams {
    pub fn constant(ep1: f64, ep2: f64, ts_mag: f64, ts_phase: f64) -> Self {
        Self {
            ep1: ep1.into(),
            ep2: ep2.into(),
            ts_mag: ts_mag.into(),
            ts_phase: ts_phase.into(),
        }
    }

    /// `Ep1 = Ep2 = ep`, real positive hopping `t`.
    pub fn symmetric(ep: f64, t: f64) -> Self {
        Self::constant(ep, ep, t, 0.0)
    }

    /// Builds the parameters from the real and imaginary hopping parts.
    pub fn from_cartesian(ep1: f64, ep2: f64, t_sr: f64, t_si: f64) -> Self {
        Self::constant(ep1, ep2, t_sr.hypot(t_si), t_si.atan2(t_sr))
    }

    pub fn is_constant(&self) -> bool {
        self.ep1.is_constant()
            && self.ep2.is_constant()
            && self.ts_mag.is_constant()
            && self.ts_phase.is_constant()
    }

    /// Complex hopping `t_s(t)`.
    pub fn hopping(&self, t: f64) -> C64 {
        C64::from_polar(self.ts_mag.evaluate(t), self.ts_phase.evaluate(t))
    }

    /// Checks the signals and `|t_s| ≥ 0` on 257 samples of `[t0, t1]`.
    pub fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        for s in [&self.ep1, &self.ep2, &self.ts_mag, &self.ts_phase] {
            s.validate()?;
        }
        if self.ts_mag.sampled_min(t0, t1, 257) < 0.0 {
            return Err(Error::InvalidParameter(
                "hopping magnitude must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Half-splitting `R = √((Ep1−Ep2)²/4 + |t_s|²)`.
    pub fn half_gap(&self, t: f64) -> f64 {
        let d = 0.5 * (self.ep1.evaluate(t) - self.ep2.evaluate(t));
        d.hypot(self.ts_mag.evaluate(t))
    }

    /// Mean on-site energy `(Ep1+Ep2)/2`.
    pub fn mean_energy(&self, t: f64) -> f64 {
        0.5 * (self.ep1.evaluate(t) + self.ep2.evaluate(t))
    }
}

pub fn build_qubit_hamiltonian(p: &QubitParams, t: f64) -> ComplexMatrix {
    let ts = p.hopping(t);
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            linalg::re(p.ep1.evaluate(t)),
            ts,
            ts.conj(),
            linalg::re(p.ep2.evaluate(t)),
        ],
    )
}

#[derive(Clone, Debug)]
pub struct QubitEigen {
    pub e1: f64,
    pub e2: f64,
    /// Ground state in the position basis.
    pub v1: StateVector,
    /// Excited state in the position basis.
    pub v2: StateVector,
}

/// Closed-form eigensystem, `E1 ≤ E2`, vectors phase-fixed.
pub fn qubit_eigensystem(p: &QubitParams, t: f64) -> Result<QubitEigen> {
    let (ep1, ep2) = (p.ep1.evaluate(t), p.ep2.evaluate(t));
    let ts = p.hopping(t);
    if ts.norm() == 0.0 && ep1 == ep2 {
        return Err(Error::Degenerate("equal site energies with zero hopping"));
    }
    let tl = two_level(ep1, ep2, ts);
    let (mut v1, mut v2) = (tl.lower_vec.to_vec(), tl.upper_vec.to_vec());
    fix_phase(&mut v1);
    fix_phase(&mut v2);
    Ok(QubitEigen {
        e1: tl.lower,
        e2: tl.upper,
        v1: StateVector::new(v1, BasisLabel::QubitPosition)?,
        v2: StateVector::new(v2, BasisLabel::QubitPosition)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PropagatorMode {
    /// Diagonal in the instantaneous eigenbasis with accumulated eigenphases.
    Adiabatic,
    /// Time-ordered product of midpoint exponentials.
    Stepped,
}

/// Default stepped-mode step: `max(1e-3, (t1 − t0)/1e6)`.
pub fn default_dt(t0: f64, t1: f64) -> f64 {
    f64::max(1e-3, (t1 - t0) / 1e6)
}

/// `(∫E1 dt, ∫E2 dt)` over `[t0, t1]`.
pub fn eigenphase_integrals(p: &QubitParams, t0: f64, t1: f64) -> (f64, f64) {
    let mean = 0.5 * (p.ep1.integral(t0, t1) + p.ep2.integral(t0, t1));
    let root = if p.is_constant() {
        p.half_gap(t0) * (t1 - t0)
    } else {
        adaptive_simpson(|t| p.half_gap(t), t0, t1, PHASE_TOL)
    };
    (mean - root, mean + root)
}

/// Propagator in the position basis.
///
/// Adiabatic mode returns `Σ_k e^{−i∫E_k}·|E_k(t1)⟩⟨E_k(t0)|`, exact when the
/// eigenbasis does not move. `dt` is only used by the stepped mode and
/// defaults to [`default_dt`].
pub fn qubit_propagator(
    p: &QubitParams,
    t0: f64,
    t1: f64,
    mode: PropagatorMode,
    dt: Option<f64>,
) -> Result<ComplexMatrix> {
    check_interval(t0, t1)?;
    if t1 == t0 {
        return Ok(ComplexMatrix::identity(2));
    }
    match mode {
        PropagatorMode::Adiabatic => {
            let start = qubit_eigensystem(p, t0)?;
            let end = qubit_eigensystem(p, t1)?;
            let (phi1, phi2) = eigenphase_integrals(p, t0, t1);
            let term = |v_end: &StateVector, v_start: &StateVector, phi: f64| {
                ComplexMatrix::outer(v_end.amplitudes(), v_start.amplitudes())
                    .scale(C64::from_polar(1.0, -phi))
            };
            Ok(term(&end.v1, &start.v1, phi1) + term(&end.v2, &start.v2, phi2))
        }
        PropagatorMode::Stepped => {
            let dt = dt.unwrap_or_else(|| default_dt(t0, t1));
            time_ordered_propagator(2, t0, t1, dt, p.is_constant(), |t| {
                Ok(build_qubit_hamiltonian(p, t))
            })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OccupancyBasis {
    Position,
    /// Instantaneous eigenbasis `[|E1(t)⟩, |E2(t)⟩]`.
    Energy,
}

/// Occupation probabilities of a qubit state.
///
/// States tagged [`BasisLabel::QubitEnergy`] hold `(c_E1, c_E2)` at time `t`;
/// anything else is read as position amplitudes.
pub fn occupancy(
    state: &StateVector,
    basis: OccupancyBasis,
    p: &QubitParams,
    t: f64,
) -> Result<(f64, f64)> {
    if state.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: state.dim(),
        });
    }
    let amps = state.amplitudes();
    let stored_in_energy = state.basis() == BasisLabel::QubitEnergy;
    if stored_in_energy == (basis == OccupancyBasis::Energy) {
        return Ok((amps[0].norm_sqr(), amps[1].norm_sqr()));
    }
    let eig = qubit_eigensystem(p, t)?;
    let (v1, v2) = (eig.v1.amplitudes(), eig.v2.amplitudes());
    if stored_in_energy {
        let x1 = amps[0] * v1[0] + amps[1] * v2[0];
        let x2 = amps[0] * v1[1] + amps[1] * v2[1];
        Ok((x1.norm_sqr(), x2.norm_sqr()))
    } else {
        Ok((inner(v1, amps).norm_sqr(), inner(v2, amps).norm_sqr()))
    }
}
