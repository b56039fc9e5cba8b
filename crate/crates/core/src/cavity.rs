//! Two-mode quantum electromagnetic cavity.
//!
//! A cavity state is a [`StateVector`] tagged [`BasisLabel::CavityModes`]
//! holding the coefficients `(c1, c2)` of the time-dependent mode kets
//! `|Eφ1⟩_t`, `|Eφ2⟩_t`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{c, re, BasisLabel, ComplexMatrix, StateVector, C64, ONE, ZERO};
use crate::quad::adaptive_simpson;

/// Absolute quadrature tolerance for window probabilities.
pub const WINDOW_TOL: f64 = 1e-10;
/// Outcomes below this probability cannot be collapsed onto.
pub const MIN_PROBABILITY: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    Line { length: f64 },
    Box { lengths: [f64; 3] },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModeEnergies {
    /// `(Eφ1, Eφ2)` given directly.
    Stored([f64; 2]),
    /// Per-axis contributions of each mode in a box, summed per mode.
    PerAxis([[f64; 3]; 2]),
    /// Harmonic ladder `ω(½ + k)`.
    Oscillator { omega: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CavitySpec {
    pub geometry: Geometry,
    pub energies: ModeEnergies,
    /// `E_ox,k` per mode.
    pub field_amplitudes: [f64; 2],
    /// Oscillation amplitude `u0` of the field operators.
    pub field_oscillation: f64,
    /// `(p1, p2)`.
    pub mode_phases: [f64; 2],
}

impl CavitySpec {
    pub fn line(length: f64, e_phi1: f64, e_phi2: f64) -> Result<Self> {
        let spec = Self {
            geometry: Geometry::Line { length },
            energies: ModeEnergies::Stored([e_phi1, e_phi2]),
            field_amplitudes: [1.0, 1.0],
            field_oscillation: 1.0,
            mode_phases: [0.0, 0.0],
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let lengths: &[f64] = match &self.geometry {
            Geometry::Line { length } => std::slice::from_ref(length),
            Geometry::Box { lengths } => lengths,
        };
        if lengths.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::InvalidParameter(
                "cavity lengths must be positive".into(),
            ));
        }
        if matches!(self.energies, ModeEnergies::Oscillator { omega } if !(omega > 0.0)) {
            return Err(Error::InvalidParameter(
                "oscillator frequency must be positive".into(),
            ));
        }
        let (e1, e2) = (self.mode_energy(0)?, self.mode_energy(1)?);
        if !(e1.is_finite() && e2.is_finite() && e2 > e1) {
            return Err(Error::InvalidParameter(format!(
                "cavity energies must satisfy Eφ2 > Eφ1 (got {e1}, {e2})"
            )));
        }
        Ok(())
    }

    /// Energy of mode `k` (zero-based). Stored and per-axis energies only
    /// know modes 0 and 1.
    pub fn mode_energy(&self, k: usize) -> Result<f64> {
        match &self.energies {
            ModeEnergies::Oscillator { omega } => Ok(omega * (0.5 + k as f64)),
            ModeEnergies::Stored(e) => e.get(k).copied().ok_or(Error::UnknownMode(k)),
            ModeEnergies::PerAxis(e) => e
                .get(k)
                .map(|axes| axes.iter().sum())
                .ok_or(Error::UnknownMode(k)),
        }
    }

    /// `(Eφ1, Eφ2)`.
    pub fn levels(&self) -> Result<(f64, f64)> {
        Ok((self.mode_energy(0)?, self.mode_energy(1)?))
    }

    fn line_length(&self) -> Result<f64> {
        match self.geometry {
            Geometry::Line { length } => Ok(length),
            Geometry::Box { .. } => Err(Error::InvalidParameter(
                "operation defined for one-dimensional cavities only".into(),
            )),
        }
    }
}

fn check_inside(x: f64, length: f64) -> Result<()> {
    let half = 0.5 * length;
    if !(x.abs() <= half) {
        return Err(Error::OutOfCavity {
            coordinate: x,
            half_width: half,
        });
    }
    Ok(())
}

/// Spatial profile of mode 1 or 2 along one axis, with the stated prefactors
/// `√(π/2L)` and `√(2/L)`.
fn axis_profile(mode: usize, x: f64, length: f64) -> f64 {
    if mode == 1 {
        (PI / (2.0 * length)).sqrt() * (PI * x / length).cos()
    } else {
        (2.0 / length).sqrt() * (2.0 * PI * x / length).sin()
    }
}

/// Mode function `ψ_mode(r, t)`; `position` has one entry for a line and
/// three for a box.
pub fn mode_wavefunction(spec: &CavitySpec, mode: usize, position: &[f64], t: f64) -> Result<C64> {
    if mode != 1 && mode != 2 {
        return Err(Error::UnknownMode(mode));
    }
    let energy = spec.mode_energy(mode - 1)?;
    let lengths: Vec<f64> = match &spec.geometry {
        Geometry::Line { length } => vec![*length],
        Geometry::Box { lengths } => lengths.to_vec(),
    };
    if position.len() != lengths.len() {
        return Err(Error::DimMismatch {
            expected: lengths.len(),
            found: position.len(),
        });
    }
    let mut amp = 1.0;
    for (&x, &l) in position.iter().zip(&lengths) {
        check_inside(x, l)?;
        amp *= axis_profile(mode, x, l);
    }
    Ok(C64::from_polar(amp, -energy * t))
}

/// `∫|ψ_mode(x, t)|² dx` over a line cavity.
pub fn mode_norm_squared(spec: &CavitySpec, mode: usize, t: f64) -> Result<f64> {
    let l = spec.line_length()?;
    if mode != 1 && mode != 2 {
        return Err(Error::UnknownMode(mode));
    }
    let energy = spec.mode_energy(mode - 1)?;
    let phase = C64::from_polar(1.0, -energy * t);
    Ok(adaptive_simpson(
        |x| (phase * axis_profile(mode, x, l)).norm_sqr(),
        -0.5 * l,
        0.5 * l,
        1e-13,
    ))
}

/// `|Eφ2⟩⟨Eφ1| + |Eφ1⟩⟨Eφ2|` in the `[|Eφ1⟩, |Eφ2⟩]` basis.
fn sigma_x() -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

/// Field operators `(E_op, B_op)` at position `x` and time `t`:
///
/// `E_op = r(x)·o1(t)/√2·(a† + a)`, `B_op = i·r(x)·o2(t)/√2·(a† − a)`,
/// with `r(x) = E_ox,1·cos(2πx/L)`, `o1 = u0·sin(Eφ1·t + p1)`,
/// `o2 = u0·cos(Eφ1·t + p1)`.
pub fn field_operators(
    spec: &CavitySpec,
    x: f64,
    t: f64,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let l = spec.line_length()?;
    check_inside(x, l)?;
    let e1 = spec.mode_energy(0)?;
    let r = spec.field_amplitudes[0] * (2.0 * PI * x / l).cos();
    let arg = e1 * t + spec.mode_phases[0];
    let o1 = spec.field_oscillation * arg.sin();
    let o2 = spec.field_oscillation * arg.cos();
    let e_op = sigma_x().scale_real(r * o1 * FRAC_1_SQRT_2);
    // i(a† − a) with a† = |Eφ2⟩⟨Eφ1|
    let b_shape = ComplexMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]);
    let b_op = b_shape.scale_real(r * o2 * FRAC_1_SQRT_2);
    Ok((e_op, b_op))
}

/// `f1·|Eφ2⟩⟨Eφ1| + f2·|Eφ1⟩⟨Eφ2|`; Hermitian only when `f1 = f2*`.
pub fn dissipation_hamiltonian(f1: C64, f2: C64) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(2, 2, &[ZERO, f2, f1, ZERO])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CavityMeasurement {
    /// Energy outcome for mode `1` or `2`.
    Energy(usize),
    /// Photon found inside `(a, b)`.
    Window(f64, f64),
}

/// Born probability and collapsed state of a cavity measurement at time `t`.
///
/// Window probabilities use the unit-normalized mode profiles; the collapsed
/// state is the window-projected state restricted to the two-mode span and
/// renormalized.
pub fn cavity_measure(
    state: &StateVector,
    kind: CavityMeasurement,
    spec: &CavitySpec,
    t: f64,
) -> Result<(f64, StateVector)> {
    if state.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: state.dim(),
        });
    }
    let amps = state.amplitudes();
    match kind {
        CavityMeasurement::Energy(k) => {
            if k != 1 && k != 2 {
                return Err(Error::UnknownMode(k));
            }
            let p = amps[k - 1].norm_sqr();
            if p < MIN_PROBABILITY {
                return Err(Error::ZeroProbability(p));
            }
            Ok((
                p,
                StateVector::basis_state(2, k - 1, BasisLabel::CavityModes),
            ))
        }
        CavityMeasurement::Window(a, b) => {
            let l = spec.line_length()?;
            check_inside(a, l)?;
            check_inside(b, l)?;
            if !(a < b) {
                return Err(Error::InvalidParameter(format!("empty window ({a}, {b})")));
            }
            let (e1, e2) = spec.levels()?;
            let ph = [C64::from_polar(1.0, -e1 * t), C64::from_polar(1.0, -e2 * t)];
            let unit = |k: usize, x: f64| -> f64 {
                let base = if k == 0 {
                    (PI * x / l).cos()
                } else {
                    (2.0 * PI * x / l).sin()
                };
                (2.0 / l).sqrt() * base
            };
            let psi = |x: f64| amps[0] * ph[0] * unit(0, x) + amps[1] * ph[1] * unit(1, x);
            let p = adaptive_simpson(|x| psi(x).norm_sqr(), a, b, WINDOW_TOL);
            if p < MIN_PROBABILITY {
                return Err(Error::ZeroProbability(p));
            }
            let overlap =
                |j: usize, k: usize| adaptive_simpson(|x| unit(j, x) * unit(k, x), a, b, 1e-13);
            let m = [
                [overlap(0, 0), overlap(0, 1)],
                [overlap(0, 1), overlap(1, 1)],
            ];
            let moving = [amps[0] * ph[0], amps[1] * ph[1]];
            let d: Vec<C64> = (0..2)
                .map(|j| moving[0] * m[j][0] + moving[1] * m[j][1])
                .collect();
            // back to coefficients of the time-dependent mode kets
            let coeffs = vec![d[0] * ph[0].conj(), d[1] * ph[1].conj()];
            Ok((
                p.clamp(0.0, 1.0),
                StateVector::normalized(coeffs, BasisLabel::CavityModes)?,
            ))
        }
    }
}

/// Convenience: equal-weight cavity state `(|Eφ1⟩ + |Eφ2⟩)/√2`.
pub fn equal_superposition() -> StateVector {
    StateVector::new(
        vec![re(FRAC_1_SQRT_2), re(FRAC_1_SQRT_2)],
        BasisLabel::CavityModes,
    )
    .expect("normalized")
}
