//! The 4×4 qubit–cavity (Jaynes–Cummings) system in the rotating-wave form.
//!
//! Basis `[|Eφ1,g⟩, |Eφ1,e⟩, |Eφ2,g⟩, |Eφ2,e⟩]`; amplitudes `γ1..γ4`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    check_interval, fix_phase, time_ordered_propagator, two_level, BasisLabel, ComplexMatrix,
    StateVector, C64, ZERO,
};
use crate::qubit::{eigenphase_integrals, qubit_eigensystem, QubitParams};
use crate::signal::DriveSignal;

#[derive(Clone, Debug, PartialEq)]
pub enum QubitLevels {
    /// `E_g(t)`, `E_e(t)` given directly.
    Direct { e_g: DriveSignal, e_e: DriveSignal },
    /// Eigenenergies of a tight-binding qubit.
    FromQubit(QubitParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoupledSystem {
    pub qubit: QubitLevels,
    /// `(Eφ1, Eφ2)`, time independent.
    pub cavity: (f64, f64),
    /// `|g(t)|`.
    pub coupling: DriveSignal,
    /// Constant phase of `g`.
    pub coupling_phase: f64,
}

impl CoupledSystem {
    pub fn constant(e_g: f64, e_e: f64, e_phi1: f64, e_phi2: f64, g: f64) -> Self {
        Self {
            qubit: QubitLevels::Direct {
                e_g: e_g.into(),
                e_e: e_e.into(),
            },
            cavity: (e_phi1, e_phi2),
            coupling: g.into(),
            coupling_phase: 0.0,
        }
    }

    /// `(E_g(t), E_e(t))`.
    pub fn qubit_levels(&self, t: f64) -> Result<(f64, f64)> {
        match &self.qubit {
            QubitLevels::Direct { e_g, e_e } => Ok((e_g.evaluate(t), e_e.evaluate(t))),
            QubitLevels::FromQubit(p) => {
                let eig = qubit_eigensystem(p, t)?;
                Ok((eig.e1, eig.e2))
            }
        }
    }

    /// `(∫E_g, ∫E_e)` over `[t0, t1]`.
    pub fn level_integrals(&self, t0: f64, t1: f64) -> (f64, f64) {
        match &self.qubit {
            QubitLevels::Direct { e_g, e_e } => (e_g.integral(t0, t1), e_e.integral(t0, t1)),
            QubitLevels::FromQubit(p) => eigenphase_integrals(p, t0, t1),
        }
    }

    /// Complex coupling `g(t)`.
    pub fn coupling_at(&self, t: f64) -> C64 {
        C64::from_polar(self.coupling.evaluate(t), self.coupling_phase)
    }

    /// `G = ∫g dt` over `[t0, t1]`.
    pub fn coupling_integral(&self, t0: f64, t1: f64) -> C64 {
        C64::from_polar(1.0, self.coupling_phase) * self.coupling.integral(t0, t1)
    }

    pub fn is_constant(&self) -> bool {
        let levels = match &self.qubit {
            QubitLevels::Direct { e_g, e_e } => e_g.is_constant() && e_e.is_constant(),
            QubitLevels::FromQubit(p) => p.is_constant(),
        };
        levels && self.coupling.is_constant()
    }

    /// Checks `Eφ2 > Eφ1` and `E_e > E_g` on 257 samples of `[t0, t1]`.
    pub fn validate(&self, t0: f64, t1: f64) -> Result<()> {
        let (p1, p2) = self.cavity;
        if !(p1.is_finite() && p2.is_finite() && p2 > p1) {
            return Err(Error::InvalidParameter(format!(
                "cavity energies must satisfy Eφ2 > Eφ1 (got {p1}, {p2})"
            )));
        }
        if let QubitLevels::FromQubit(p) = &self.qubit {
            p.validate(t0, t1)?;
        }
        self.coupling.validate()?;
        for k in 0..257 {
            let t = t0 + (t1 - t0) * k as f64 / 256.0;
            let (g, e) = self.qubit_levels(t)?;
            if !(e > g) {
                return Err(Error::InvalidParameter(format!(
                    "qubit levels must satisfy E_e > E_g (t = {t}: {g}, {e})"
                )));
            }
        }
        Ok(())
    }
}

pub fn build_jc_hamiltonian(sys: &CoupledSystem, t: f64) -> Result<ComplexMatrix> {
    let (eg, ee) = sys.qubit_levels(t)?;
    let (p1, p2) = sys.cavity;
    let mut h = ComplexMatrix::from_real_diagonal(&[eg + p1, ee + p1, eg + p2, ee + p2]);
    let g = sys.coupling_at(t);
    h[(1, 2)] = g;
    h[(2, 1)] = g.conj();
    Ok(h)
}

/// Eigenpairs in the labelling `E1 = E_g+Eφ1`, `E2 = E_e+Eφ2` (product
/// states) and `E3 ≤ E4` (the entangled pair).
#[derive(Clone, Debug)]
pub struct JcEigen {
    pub energies: [f64; 4],
    pub vectors: [StateVector; 4],
}

pub fn jc_eigensystem(sys: &CoupledSystem, t: f64) -> Result<JcEigen> {
    let (eg, ee) = sys.qubit_levels(t)?;
    let (p1, p2) = sys.cavity;
    let tl = two_level(ee + p1, eg + p2, sys.coupling_at(t));
    let embed = |pair: [C64; 2]| {
        let mut v = vec![ZERO, pair[0], pair[1], ZERO];
        fix_phase(&mut v);
        StateVector::new(v, BasisLabel::CavityQubitEnergy)
    };
    let b = |k| StateVector::basis_state(4, k, BasisLabel::CavityQubitEnergy);
    Ok(JcEigen {
        energies: [eg + p1, ee + p2, tl.lower, tl.upper],
        vectors: [b(0), b(3), embed(tl.lower_vec)?, embed(tl.upper_vec)?],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JcMode {
    /// Closed form from time-integrated energies and coupling.
    ClosedForm,
    /// Time-ordered product of midpoint exponentials.
    Stepped,
}

/// `sin(x)/x`, continuous at zero.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Integrated quantities of the central block over `[t0, t1]`.
struct BlockIntegrals {
    /// `∫(E_e + Eφ1)`
    a: f64,
    /// `∫(E_g + Eφ2)`
    b: f64,
    /// `∫g`
    g: C64,
    /// `∫E_g + Eφ1·Δt`
    u11: f64,
    /// `∫E_e + Eφ2·Δt`
    u44: f64,
}

fn block_integrals(sys: &CoupledSystem, t0: f64, t1: f64) -> BlockIntegrals {
    let dt = t1 - t0;
    let (ig, ie) = sys.level_integrals(t0, t1);
    let (p1, p2) = sys.cavity;
    BlockIntegrals {
        a: ie + p1 * dt,
        b: ig + p2 * dt,
        g: sys.coupling_integral(t0, t1),
        u11: ig + p1 * dt,
        u44: ie + p2 * dt,
    }
}

/// Propagator `U(t1, t0)`.
///
/// Closed-form mode: `U11`, `U44` are pure phases; the central block is the exact
/// exponential of `−i[[a, G], [G*, b]]` with `a = ∫(E_e+Eφ1)`,
/// `b = ∫(E_g+Eφ2)`, `G = ∫g`; every other entry is exactly zero.
/// Stepped mode uses `dt` (default `max(1e-3, (t1−t0)/1e6)`).
pub fn jc_propagator(
    sys: &CoupledSystem,
    t0: f64,
    t1: f64,
    mode: JcMode,
    dt: Option<f64>,
) -> Result<ComplexMatrix> {
    check_interval(t0, t1)?;
    match mode {
        JcMode::ClosedForm => {
            let q = block_integrals(sys, t0, t1);
            let mean = 0.5 * (q.a + q.b);
            let half = 0.5 * (q.a - q.b);
            let omega = half.hypot(q.g.norm());
            let (cos, s) = (omega.cos(), sinc(omega));
            let phase = C64::from_polar(1.0, -mean);
            let mut u = ComplexMatrix::zeros(4, 4);
            u[(0, 0)] = C64::from_polar(1.0, -q.u11);
            u[(3, 3)] = C64::from_polar(1.0, -q.u44);
            u[(1, 1)] = phase * C64::new(cos, -half * s);
            u[(2, 2)] = phase * C64::new(cos, half * s);
            u[(1, 2)] = phase * C64::new(0.0, -s) * q.g;
            u[(2, 1)] = phase * C64::new(0.0, -s) * q.g.conj();
            Ok(u)
        }
        JcMode::Stepped => {
            let dt = dt.unwrap_or_else(|| crate::qubit::default_dt(t0, t1));
            time_ordered_propagator(4, t0, t1, dt, sys.is_constant(), |t| {
                build_jc_hamiltonian(sys, t)
            })
        }
    }
}

/// `(p_qubit_excited, p_cavity_excited) = (|γ2|²+|γ4|², |γ3|²+|γ4|²)`.
pub fn excitation_from_amplitudes(state: &StateVector) -> Result<(f64, f64)> {
    if state.dim() != 4 {
        return Err(Error::DimMismatch {
            expected: 4,
            found: state.dim(),
        });
    }
    let p = state.probabilities();
    Ok((p[1] + p[3], p[2] + p[3]))
}

/// Excitation probabilities at `t` for `state0` given at `t0`, using the
/// closed-form propagator.
pub fn excitation_probabilities(
    sys: &CoupledSystem,
    state0: &StateVector,
    t0: f64,
    t: f64,
) -> Result<(f64, f64)> {
    if state0.dim() != 4 {
        return Err(Error::DimMismatch {
            expected: 4,
            found: state0.dim(),
        });
    }
    let u = jc_propagator(sys, t0, t, JcMode::ClosedForm, None)?;
    excitation_from_amplitudes(&state0.evolved(&u)?)
}

/// `|U32|² = |G|²·sin²Ω/Ω²` with `Ω = ½√(D² + 4|G|²)`, `D = ∫(Δ_q − Δ_EC)`.
pub fn energy_transfer_coefficient(sys: &CoupledSystem, t0: f64, t1: f64) -> Result<f64> {
    check_interval(t0, t1)?;
    let q = block_integrals(sys, t0, t1);
    let d = q.a - q.b;
    let g2 = q.g.norm_sqr();
    let omega = 0.5 * (d * d + 4.0 * g2).sqrt();
    Ok((g2 * sinc(omega).powi(2)).clamp(0.0, 1.0))
}

/// Detuning schedules `Δ_q − Δ_EC` of the seven energy-transfer scenarios.
pub fn transfer_detunings() -> Vec<DriveSignal> {
    vec![
        DriveSignal::constant(0.0),
        DriveSignal::constant(0.1),
        DriveSignal::constant(0.2),
        DriveSignal::constant(0.3),
        DriveSignal::Sum(vec![
            DriveSignal::constant(0.1),
            DriveSignal::cosine(2.0, 20.0, 0.0),
        ]),
        DriveSignal::linear(0.2, 0.2),
        DriveSignal::quadratic(0.3, 0.0, 0.3),
    ]
}

/// System with `Eφ1 = 1`, `Eφ2 = 2`, `E_g = 0`, `E_e = 1 + Δ(t)` and coupling
/// magnitude `g`, so that `Δ_q − Δ_EC = Δ(t)`.
pub fn transfer_system(detuning: &DriveSignal, g: f64) -> CoupledSystem {
    CoupledSystem {
        qubit: QubitLevels::Direct {
            e_g: DriveSignal::constant(0.0),
            e_e: DriveSignal::constant(1.0).plus(detuning),
        },
        cavity: (1.0, 2.0),
        coupling: g.into(),
        coupling_phase: 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferRow {
    /// One-based scenario index.
    pub scenario: usize,
    pub t: f64,
    pub coefficient: f64,
}

/// Evenly spaced grid of `samples` points on `[t0, t1]`.
pub fn time_grid(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    let n = samples.max(2);
    (0..n)
        .map(|k| {
            if k + 1 == n {
                t1
            } else {
                t0 + (t1 - t0) * k as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Energy-transfer curves for the given detunings, scenarios evaluated in
/// parallel and returned in scenario order.
pub fn run_transfer_scenarios(
    detunings: &[DriveSignal],
    g: f64,
    t0: f64,
    t1: f64,
    samples: usize,
) -> Result<Vec<TransferRow>> {
    if samples < 2 {
        return Err(Error::InvalidParameter("samples must be at least 2".into()));
    }
    check_interval(t0, t1)?;
    let grid = time_grid(t0, t1, samples);
    let per: Vec<Result<Vec<TransferRow>>> = detunings
        .par_iter()
        .enumerate()
        .map(|(i, det)| {
            let sys = transfer_system(det, g);
            grid.iter()
                .map(|&t| {
                    Ok(TransferRow {
                        scenario: i + 1,
                        t,
                        coefficient: energy_transfer_coefficient(&sys, t0, t)?,
                    })
                })
                .collect()
        })
        .collect();
    let mut rows = Vec::with_capacity(detunings.len() * grid.len());
    for r in per {
        rows.extend(r?);
    }
    Ok(rows)
}

/// The seven standard scenarios on `[0, 10]`.
pub fn run_detuning_scenarios(g: f64, samples: usize) -> Result<Vec<TransferRow>> {
    run_transfer_scenarios(&transfer_detunings(), g, 0.0, 10.0, samples)
}

/// `|Eφ1,e⟩`, the qubit excited with the cavity in its lower mode.
pub fn qubit_excited_state() -> StateVector {
    StateVector::basis_state(4, 1, BasisLabel::CavityQubitEnergy)
}

/// Basis transform into the mixed cavity ⊗ qubit-position basis
/// `[|Eφ1,x1⟩, |Eφ1,x2⟩, |Eφ2,x1⟩, |Eφ2,x2⟩]`: columns are the energy basis
/// vectors `|Eφk⟩|g⟩`, `|Eφk⟩|e⟩` expressed in positions.
pub fn energy_to_mixed_basis(ground: &[C64], excited: &[C64]) -> ComplexMatrix {
    let mut t = ComplexMatrix::zeros(4, 4);
    for k in 0..2 {
        for i in 0..2 {
            t[(2 * k + i, 2 * k)] = ground[i];
            t[(2 * k + i, 2 * k + 1)] = excited[i];
        }
    }
    t
}

/// `E_e(t) − E_g(t)` for diagnostics.
pub fn qubit_splitting(sys: &CoupledSystem, t: f64) -> Result<f64> {
    let (g, e) = sys.qubit_levels(t)?;
    Ok(e - g)
}
