//! Two qubits sharing one two-mode cavity (8×8).
//!
//! Every 8-dimensional object uses index `4c + 2a + b` with `c` the cavity
//! level and `a`, `b` the states of qubit A and qubit B (`g`/`x1` = 0,
//! `e`/`x2` = 1). The energy basis is `|Eφc⟩|q_A⟩|q_B⟩`; the position basis
//! replaces `g`, `e` by the dot positions `x1`, `x2`.

use crate::error::{Error, Result};
use crate::linalg::{
    check_interval, re, time_ordered_propagator, BasisLabel, ComplexMatrix, StateVector, C64,
    NORM_TOL, ONE, ZERO,
};
use crate::qubit::{default_dt, qubit_eigensystem, QubitParams};
use crate::signal::DriveSignal;

/// Relative tolerance for the equal-energy constraint of the simplified form.
const CONSTRAINT_TOL: f64 = 1e-9;

/// Index of `|c, a, b⟩`.
pub fn network_index(cavity: usize, a: usize, b: usize) -> usize {
    4 * cavity + 2 * a + b
}

/// Coulomb repulsion between the two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct CoulombCoupling {
    pub charge: f64,
    /// `[d(1,1'), d(1,2'), d(2,1'), d(2,2')]`.
    pub distances: [f64; 4],
}

impl Default for CoulombCoupling {
    fn default() -> Self {
        Self {
            charge: 0.0,
            distances: [1.0; 4],
        }
    }
}

impl CoulombCoupling {
    pub fn validate(&self) -> Result<()> {
        if !self.charge.is_finite() {
            return Err(Error::InvalidParameter(
                "Coulomb charge must be finite".into(),
            ));
        }
        if self.distances.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(Error::InvalidParameter(
                "Coulomb distances must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Diagonal `q²/d` in slot order: pairs of entries per distance.
    pub fn diagonal(&self) -> [f64; 8] {
        let q2 = self.charge * self.charge;
        std::array::from_fn(|i| q2 / self.distances[i / 2])
    }
}

/// Integrand used for the mutual (Aharonov–Bohm) hopping imprint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ImprintIntegrand {
    /// `|t_s|`.
    #[default]
    Hopping,
    /// `√|t_s|`.
    SqrtHopping,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PhaseImprints {
    /// Strength of qubit A's imprint on qubit B.
    pub s_a: f64,
    /// Strength of qubit B's imprint on qubit A.
    pub s_b: f64,
    /// Strength of the cavity field imprint on the hopping.
    pub s_0: f64,
    pub integrand: ImprintIntegrand,
}

/// Cavity-induced renormalization of one qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct Renormalization {
    /// Linear hopping renormalization constant `c0`.
    pub c0: f64,
    /// Effective-potential amplitudes `Va1..Va4` (node 1 / mode 1, node 1 /
    /// mode 2, node 2 / mode 1, node 2 / mode 2) and the barrier amplitude
    /// `Va5`.
    pub va: [f64; 5],
    /// Oscillation phases `p1`, `p2` of the two modes.
    pub mode_phases: [f64; 2],
    /// Field amplitudes `E'ox,1`, `E'ox,2` entering the barrier factor.
    pub field_amplitudes: [f64; 2],
    /// Diagonal field expectations `⟨Eφk|E_f|Eφk⟩(t)`.
    pub diagonal_field: [DriveSignal; 2],
    /// Dipole–field scale in `u = ½(c*a − d*b)·scale`.
    pub dipole_scale: C64,
}

impl Default for Renormalization {
    fn default() -> Self {
        Self {
            c0: 0.0,
            va: [0.0; 5],
            mode_phases: [0.0; 2],
            field_amplitudes: [1.0; 2],
            diagonal_field: [DriveSignal::constant(0.0), DriveSignal::constant(0.0)],
            dipole_scale: ZERO,
        }
    }
}

impl Renormalization {
    pub fn validate(&self) -> Result<()> {
        let finite = self.c0.is_finite()
            && self.va.iter().all(|v| v.is_finite())
            && self.mode_phases.iter().all(|v| v.is_finite())
            && self.field_amplitudes.iter().all(|v| v.is_finite())
            && self.dipole_scale.re.is_finite()
            && self.dipole_scale.im.is_finite();
        if !finite {
            return Err(Error::NonFinite("renormalization parameters"));
        }
        for s in &self.diagonal_field {
            s.validate()?;
        }
        Ok(())
    }

    fn mode_sine(&self, cavity: (f64, f64), k: usize, t: f64) -> f64 {
        let e = if k == 0 { cavity.0 } else { cavity.1 };
        (e * t + self.mode_phases[k]).sin()
    }

    /// Effective on-site potential at `node` while the cavity is in mode `k`.
    pub fn potential(&self, cavity: (f64, f64), k: usize, node: usize, t: f64) -> f64 {
        self.va[2 * node + k] * self.mode_sine(cavity, k, t)
    }

    /// Linear barrier factor `P_k(t)`.
    pub fn barrier_factor(&self, cavity: (f64, f64), k: usize, t: f64) -> f64 {
        (-self.c0 * self.va[4] * self.field_amplitudes[k] * self.mode_sine(cavity, k, t)).exp()
    }

    /// Field imprint phase `s0·∫₀ᵗ⟨Eφk|E_f|Eφk⟩dt′`.
    pub fn field_phase(&self, s0: f64, k: usize, t: f64) -> f64 {
        if s0 == 0.0 {
            return 0.0;
        }
        s0 * self.diagonal_field[k].integral(0.0, t)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSystem {
    pub qubit_a: QubitParams,
    pub qubit_b: QubitParams,
    /// `(Eφ1, Eφ2)`.
    pub cavity: (f64, f64),
    pub g1: f64,
    pub g2: f64,
    /// Phase offsets `d1(t)`, `d2(t)` in radians.
    pub d1: DriveSignal,
    pub d2: DriveSignal,
    /// Coupling envelope `f1(t)`.
    pub f1: DriveSignal,
    pub waveguide_length: f64,
    pub signal_speed: f64,
    pub coulomb: CoulombCoupling,
    pub imprints: PhaseImprints,
    pub renorm_a: Renormalization,
    pub renorm_b: Renormalization,
}

impl NetworkSystem {
    /// Equal-energy system: `Eφ1 = E_g`, `Eφ2 = 2E_g`, both qubits with
    /// levels `E_g`, `2E_g`.
    pub fn simplified(e_g: f64, g1: f64, g2: f64, d1: f64, d2: f64) -> Result<Self> {
        if !(e_g.is_finite() && e_g > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "E_g must be positive (got {e_g})"
            )));
        }
        let qubit = QubitParams::symmetric(1.5 * e_g, 0.5 * e_g);
        Ok(Self {
            qubit_a: qubit.clone(),
            qubit_b: qubit,
            cavity: (e_g, 2.0 * e_g),
            g1,
            g2,
            d1: d1.into(),
            d2: d2.into(),
            f1: DriveSignal::constant(1.0),
            waveguide_length: 0.0,
            signal_speed: 1.0,
            coulomb: CoulombCoupling::default(),
            imprints: PhaseImprints::default(),
            renorm_a: Renormalization::default(),
            renorm_b: Renormalization::default(),
        })
    }

    /// Waveguide delay `Δt = L/c`.
    pub fn delay(&self) -> f64 {
        self.waveguide_length / self.signal_speed
    }

    pub fn validate(&self) -> Result<()> {
        let (p1, p2) = self.cavity;
        if !(p1.is_finite() && p2.is_finite() && p2 > p1) {
            return Err(Error::InvalidParameter(format!(
                "cavity energies must satisfy Eφ2 > Eφ1 (got {p1}, {p2})"
            )));
        }
        if !(self.g1.is_finite() && self.g2.is_finite()) {
            return Err(Error::NonFinite("network couplings"));
        }
        if !(self.waveguide_length.is_finite() && self.waveguide_length >= 0.0) {
            return Err(Error::InvalidParameter(
                "waveguide length must be non-negative".into(),
            ));
        }
        if !(self.signal_speed.is_finite() && self.signal_speed > 0.0) {
            return Err(Error::InvalidParameter(
                "signal speed must be positive".into(),
            ));
        }
        for s in [&self.d1, &self.d2, &self.f1] {
            s.validate()?;
        }
        self.coulomb.validate()?;
        self.renorm_a.validate()?;
        self.renorm_b.validate()
    }

    pub fn is_constant(&self) -> bool {
        self.qubit_a.is_constant()
            && self.qubit_b.is_constant()
            && self.d1.is_constant()
            && self.d2.is_constant()
            && self.f1.is_constant()
    }

    /// `E_g` of the simplified form, or `ConstraintViolated`.
    pub fn simplified_energy(&self, t: f64) -> Result<f64> {
        let e_g = self.cavity.0;
        let tol = CONSTRAINT_TOL * e_g.abs().max(1.0);
        let close = |x: f64, y: f64| (x - y).abs() <= tol;
        if !close(self.cavity.1, 2.0 * e_g) {
            return Err(Error::ConstraintViolated(format!(
                "simplified form needs Eφ2 = 2Eφ1 (got {}, {})",
                self.cavity.0, self.cavity.1
            )));
        }
        for (name, q) in [("A", &self.qubit_a), ("B", &self.qubit_b)] {
            let eig = qubit_eigensystem(q, t).map_err(|_| {
                Error::ConstraintViolated(format!("qubit {name} has degenerate levels"))
            })?;
            if !(close(eig.e1, e_g) && close(eig.e2, 2.0 * e_g)) {
                return Err(Error::ConstraintViolated(format!(
                    "simplified form needs qubit {name} levels (E_g, 2E_g) = ({e_g}, {}), got ({}, {})",
                    2.0 * e_g,
                    eig.e1,
                    eig.e2
                )));
            }
        }
        Ok(e_g)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkForm {
    General,
    Simplified,
}

fn place_couplings(h: &mut ComplexMatrix, w1: C64, w2: C64) {
    // w1 couples through qubit A, w2 through qubit B; both lower the cavity.
    for (i, j, w) in [(1, 4, w2), (2, 4, w1), (3, 5, w1), (3, 6, w2)] {
        h[(i, j)] = w;
        h[(j, i)] = w.conj();
    }
}

pub fn build_network_hamiltonian(
    sys: &NetworkSystem,
    t: f64,
    form: NetworkForm,
) -> Result<ComplexMatrix> {
    let phase1 = C64::from_polar(1.0, -sys.d1.evaluate(t));
    let phase2 = C64::from_polar(1.0, -sys.d2.evaluate(t));
    match form {
        NetworkForm::Simplified => {
            let e_g = sys.simplified_energy(t)?;
            let diag: Vec<f64> = [3.0, 4.0, 4.0, 5.0, 4.0, 5.0, 5.0, 6.0]
                .iter()
                .map(|k| k * e_g)
                .collect();
            let mut h = ComplexMatrix::from_real_diagonal(&diag);
            place_couplings(&mut h, phase1 * sys.g1, phase2 * sys.g2);
            Ok(h)
        }
        NetworkForm::General => {
            let a = qubit_eigensystem(&sys.qubit_a, t)?;
            let b = qubit_eigensystem(&sys.qubit_b, t)?;
            let (la, lb) = ([a.e1, a.e2], [b.e1, b.e2]);
            let phi = [sys.cavity.0, sys.cavity.1];
            let diag: Vec<f64> = (0..8)
                .map(|i| phi[i / 4] + la[(i / 2) % 2] + lb[i % 2])
                .collect();
            let mut h = ComplexMatrix::from_real_diagonal(&diag);
            let w1 = phase1 * (sys.g1 * sys.f1.evaluate(t));
            let w2 = phase2 * (sys.g2 * sys.f1.evaluate(t + sys.delay()));
            place_couplings(&mut h, w1, w2);
            Ok(h)
        }
    }
}

/// Analytic eigensystem of the simplified form in the labelling `E1..E8`:
/// `3E_g, 4E_g, 5E_g, 6E_g, 4E_g−r, 5E_g−r, 4E_g+r, 5E_g+r`,
/// `r = √(g1² + g2²)`.
#[derive(Clone, Debug)]
pub struct NetworkEigen {
    pub energies: [f64; 8],
    /// Unit-norm eigenvectors in the network energy basis.
    pub vectors: Vec<StateVector>,
    /// `N_k = 1/‖v_k‖` of the unnormalized vectors with unit last entry.
    pub norms: [f64; 8],
    /// Whether `|E_k⟩` is a product state across every bipartition.
    pub product: [bool; 8],
}

pub fn network_eigensystem(sys: &NetworkSystem, t: f64) -> Result<NetworkEigen> {
    let e_g = sys.simplified_energy(t)?;
    let (g1, g2) = (sys.g1, sys.g2);
    if g1 == 0.0 || g2 == 0.0 {
        return Err(Error::ConstraintViolated(
            "analytic eigenstates need g1 ≠ 0 and g2 ≠ 0".into(),
        ));
    }
    let (d1, d2) = (sys.d1.evaluate(t), sys.d2.evaluate(t));
    let r = g1.hypot(g2);
    let rel = C64::from_polar(1.0, d1 - d2);
    let beta1 = C64::from_polar(g2, -d2);
    let beta2 = C64::from_polar(g1, -d1);
    let sparse = |entries: &[(usize, C64)]| {
        let mut v = vec![ZERO; 8];
        for &(i, z) in entries {
            v[i] = z;
        }
        v
    };
    let raw = [
        sparse(&[(0, ONE)]),
        sparse(&[(1, -rel * (g1 / g2)), (2, ONE)]),
        sparse(&[(5, -rel * (g2 / g1)), (6, ONE)]),
        sparse(&[(7, ONE)]),
        sparse(&[(1, -beta1 / r), (2, -beta2 / r), (4, ONE)]),
        sparse(&[
            (3, -C64::from_polar(r / g2, -d2)),
            (5, rel * (g1 / g2)),
            (6, ONE),
        ]),
        sparse(&[(1, beta1 / r), (2, beta2 / r), (4, ONE)]),
        sparse(&[
            (3, C64::from_polar(r / g2, -d2)),
            (5, rel * (g1 / g2)),
            (6, ONE),
        ]),
    ];
    let mut norms = [0.0; 8];
    let mut vectors = Vec::with_capacity(8);
    for (k, v) in raw.into_iter().enumerate() {
        let n = crate::linalg::norm_sqr(&v).sqrt();
        norms[k] = 1.0 / n;
        vectors.push(StateVector::new(
            v.into_iter().map(|z| z / n).collect(),
            BasisLabel::NetworkEnergy,
        )?);
    }
    Ok(NetworkEigen {
        energies: [
            3.0 * e_g,
            4.0 * e_g,
            5.0 * e_g,
            6.0 * e_g,
            4.0 * e_g - r,
            5.0 * e_g - r,
            4.0 * e_g + r,
            5.0 * e_g + r,
        ],
        vectors,
        norms,
        product: [true, false, false, true, false, false, false, false],
    })
}

/// `Σ_k c_k·e^{−iE_k(t1−t0)}·|E_k⟩` with the eigenvectors taken at `t1`.
pub fn network_evolve(
    sys: &NetworkSystem,
    coeffs: &[C64],
    t0: f64,
    t1: f64,
) -> Result<StateVector> {
    if coeffs.len() != 8 {
        return Err(Error::DimMismatch {
            expected: 8,
            found: coeffs.len(),
        });
    }
    let n2 = crate::linalg::norm_sqr(coeffs);
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n2));
    }
    check_interval(t0, t1)?;
    sys.simplified_energy(t0)?;
    let eig = network_eigensystem(sys, t1)?;
    let mut out = vec![ZERO; 8];
    for k in 0..8 {
        let w = coeffs[k] * C64::from_polar(1.0, -eig.energies[k] * (t1 - t0));
        for (o, v) in out.iter_mut().zip(eig.vectors[k].amplitudes()) {
            *o += w * v;
        }
    }
    StateVector::new(out, BasisLabel::NetworkEnergy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetworkMode {
    /// `Σ_k e^{−iE_kΔt}|E_k(t1)⟩⟨E_k(t0)|` from the analytic eigensystem.
    Eigen,
    Stepped,
}

/// Propagator in the network energy basis.
pub fn network_propagator(
    sys: &NetworkSystem,
    t0: f64,
    t1: f64,
    form: NetworkForm,
    mode: NetworkMode,
    dt: Option<f64>,
) -> Result<ComplexMatrix> {
    check_interval(t0, t1)?;
    if t1 == t0 {
        return Ok(ComplexMatrix::identity(8));
    }
    match mode {
        NetworkMode::Eigen => {
            let start = network_eigensystem(sys, t0)?;
            let end = network_eigensystem(sys, t1)?;
            let mut u = ComplexMatrix::zeros(8, 8);
            for k in 0..8 {
                let phase = C64::from_polar(1.0, -start.energies[k] * (t1 - t0));
                u = u + ComplexMatrix::outer(
                    end.vectors[k].amplitudes(),
                    start.vectors[k].amplitudes(),
                )
                .scale(phase);
            }
            Ok(u)
        }
        NetworkMode::Stepped => {
            let dt = dt.unwrap_or_else(|| default_dt(t0, t1));
            time_ordered_propagator(8, t0, t1, dt, sys.is_constant(), |t| {
                build_network_hamiltonian(sys, t, form)
            })
        }
    }
}

/// Energy eigenvectors of a qubit in the position basis,
/// `|E_g⟩ = a|x1⟩ + b|x2⟩`, `|E_e⟩ = c|x1⟩ + d|x2⟩`, and the dipole
/// matrix element `u`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitEnergyCoeffs {
    pub a: C64,
    pub b: C64,
    pub c: C64,
    pub d: C64,
    pub u: C64,
}

impl QubitEnergyCoeffs {
    pub fn ground(&self) -> [C64; 2] {
        [self.a, self.b]
    }

    pub fn excited(&self) -> [C64; 2] {
        [self.c, self.d]
    }
}

/// `a, b, c, d` with `b ≤ 0` and `d ≥ 0` real, and
/// `u = ½(c*a − d*b)·dipole_scale`.
pub fn abcd_coefficients(p: &QubitParams, t: f64, dipole_scale: C64) -> Result<QubitEnergyCoeffs> {
    let ts = p.ts_mag.evaluate(t).abs();
    if ts == 0.0 {
        return Err(Error::Degenerate("zero hopping"));
    }
    let alpha = p.ts_phase.evaluate(t);
    let half = 0.5 * (p.ep2.evaluate(t) - p.ep1.evaluate(t));
    let root = half.hypot(ts);
    let (lo, hi) = if half >= 0.0 {
        (half + root, ts * ts / (half + root))
    } else {
        (ts * ts / (root - half), root - half)
    };
    let ng = lo.hypot(ts);
    let ne = hi.hypot(ts);
    let phase = C64::from_polar(1.0, alpha);
    let a = phase * (lo / ng);
    let b = re(-ts / ng);
    let c = phase * (hi / ne);
    let d = re(ts / ne);
    let u = (c.conj() * a - d.conj() * b) * 0.5 * dipole_scale;
    Ok(QubitEnergyCoeffs { a, b, c, d, u })
}

/// Position-basis block `H_s = u·(c*a − d*b)·|E_e⟩⟨E_g|`, written out
/// entry by entry.
pub fn interaction_block_hs(k: &QubitEnergyCoeffs) -> ComplexMatrix {
    let (a, b, c, d, u) = (k.a, k.b, k.c, k.d, k.u);
    let (na, nb, nc, nd) = (a.norm_sqr(), b.norm_sqr(), c.norm_sqr(), d.norm_sqr());
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            u * (na * nc - a.conj() * d.conj() * b * c),
            u * (a * b.conj() * nc - c * d.conj() * nb),
            u * (d * na * c.conj() - nd * b * a.conj()),
            u * (-nb * nd + b.conj() * c.conj() * a * d),
        ],
    )
}

/// Single qubit in the cavity with its renormalizations.
#[derive(Clone, Debug, PartialEq)]
pub struct RenormalizedJc {
    pub qubit: QubitParams,
    pub cavity: (f64, f64),
    pub renorm: Renormalization,
    pub s0: f64,
}

fn hopping_block(p: &QubitParams, t: f64, hop: C64, extra: [f64; 2]) -> ComplexMatrix {
    ComplexMatrix::from_row_slice(
        2,
        2,
        &[
            re(p.ep1.evaluate(t) + extra[0]),
            hop,
            hop.conj(),
            re(p.ep2.evaluate(t) + extra[1]),
        ],
    )
}

fn coupling_block(p: &QubitParams, r: &Renormalization, t: f64) -> Result<ComplexMatrix> {
    if r.dipole_scale == ZERO {
        return Ok(ComplexMatrix::zeros(2, 2));
    }
    Ok(interaction_block_hs(&abcd_coefficients(
        p,
        t,
        r.dipole_scale,
    )?))
}

/// Renormalized qubit–cavity Hamiltonian in the mixed basis
/// `[|Eφ1,x1⟩, |Eφ1,x2⟩, |Eφ2,x1⟩, |Eφ2,x2⟩]`.
pub fn build_renormalized_jc_hamiltonian(sys: &RenormalizedJc, t: f64) -> Result<ComplexMatrix> {
    let r = &sys.renorm;
    let mut h = ComplexMatrix::zeros(4, 4);
    for k in 0..2 {
        let e_phi = if k == 0 { sys.cavity.0 } else { sys.cavity.1 };
        let hop = sys.qubit.hopping(t)
            * r.barrier_factor(sys.cavity, k, t)
            * C64::from_polar(1.0, r.field_phase(sys.s0, k, t));
        let v = [
            r.potential(sys.cavity, k, 0, t),
            r.potential(sys.cavity, k, 1, t),
        ];
        let block = hopping_block(&sys.qubit, t, hop, [e_phi + v[0], e_phi + v[1]]);
        h.set_block(2 * k, 2 * k, &block);
    }
    let hs = coupling_block(&sys.qubit, r, t)?;
    h.set_block(0, 2, &hs);
    h.set_block(2, 0, &hs.adjoint());
    Ok(h)
}

fn imprint_integral(p: &QubitParams, kind: ImprintIntegrand, t: f64) -> f64 {
    let f = |s: f64| match kind {
        ImprintIntegrand::Hopping => p.ts_mag.evaluate(s).abs(),
        ImprintIntegrand::SqrtHopping => p.ts_mag.evaluate(s).abs().sqrt(),
    };
    if t == 0.0 {
        return 0.0;
    }
    if p.ts_mag.is_constant() {
        return f(0.0) * t;
    }
    let (lo, hi) = if t > 0.0 { (0.0, t) } else { (t, 0.0) };
    let v = crate::quad::adaptive_simpson(f, lo, hi, 1e-12);
    if t > 0.0 {
        v
    } else {
        -v
    }
}

/// Renormalized two-qubit–cavity Hamiltonian in the network position basis.
pub fn build_renormalized_network_hamiltonian(
    sys: &NetworkSystem,
    t: f64,
) -> Result<ComplexMatrix> {
    let im = &sys.imprints;
    let ab_phase_a = if im.s_b == 0.0 {
        0.0
    } else {
        im.s_b * imprint_integral(&sys.qubit_b, im.integrand, t)
    };
    let ab_phase_b = if im.s_a == 0.0 {
        0.0
    } else {
        im.s_a * imprint_integral(&sys.qubit_a, im.integrand, t)
    };
    let coulomb = sys.coulomb.diagonal();
    let mut h = ComplexMatrix::zeros(8, 8);
    for k in 0..2 {
        let e_phi = if k == 0 { sys.cavity.0 } else { sys.cavity.1 };
        for i in 0..4 {
            let idx = 4 * k + i;
            let (xa, xb) = (i / 2, i % 2);
            h[(idx, idx)] = re(e_phi
                + coulomb[idx]
                + sys.renorm_a.potential(sys.cavity, k, xa, t)
                + sys.renorm_b.potential(sys.cavity, k, xb, t));
        }
        h[(4 * k, 4 * k)] += re(sys.qubit_a.ep1.evaluate(t) + sys.qubit_b.ep1.evaluate(t));
        h[(4 * k + 1, 4 * k + 1)] += re(sys.qubit_a.ep1.evaluate(t) + sys.qubit_b.ep2.evaluate(t));
        h[(4 * k + 2, 4 * k + 2)] += re(sys.qubit_a.ep2.evaluate(t) + sys.qubit_b.ep1.evaluate(t));
        h[(4 * k + 3, 4 * k + 3)] += re(sys.qubit_a.ep2.evaluate(t) + sys.qubit_b.ep2.evaluate(t));

        let hop_a = sys.qubit_a.hopping(t)
            * sys.renorm_a.barrier_factor(sys.cavity, k, t)
            * C64::from_polar(1.0, sys.renorm_a.field_phase(im.s_0, k, t) + ab_phase_a);
        let hop_b = sys.qubit_b.hopping(t)
            * sys.renorm_b.barrier_factor(sys.cavity, k, t)
            * C64::from_polar(1.0, sys.renorm_b.field_phase(im.s_0, k, t) + ab_phase_b);
        for x in 0..2 {
            let (i, j) = (network_index(k, 0, x), network_index(k, 1, x));
            h[(i, j)] += hop_a;
            h[(j, i)] += hop_a.conj();
            let (i, j) = (network_index(k, x, 0), network_index(k, x, 1));
            h[(i, j)] += hop_b;
            h[(j, i)] += hop_b.conj();
        }
    }
    let hs_a = coupling_block(&sys.qubit_a, &sys.renorm_a, t)?;
    let hs_b = coupling_block(&sys.qubit_b, &sys.renorm_b, t)?;
    for x in 0..2 {
        for y in 0..2 {
            for spectator in 0..2 {
                let (i, j) = (
                    network_index(0, x, spectator),
                    network_index(1, y, spectator),
                );
                h[(i, j)] += hs_a[(x, y)];
                h[(j, i)] += hs_a[(x, y)].conj();
                let (i, j) = (
                    network_index(0, spectator, x),
                    network_index(1, spectator, y),
                );
                h[(i, j)] += hs_b[(x, y)];
                h[(j, i)] += hs_b[(x, y)].conj();
            }
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jc::{build_jc_hamiltonian, energy_to_mixed_basis, CoupledSystem, QubitLevels};
    use crate::linalg::{c, hermitian_eig, residual, tensor_all, HERMITIAN_TOL};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v
    }

    fn lcg(mut seed: u64) -> impl FnMut() -> f64 {
        move || {
            seed = seed
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn simplified_zero_coupling_is_diagonal() {
        let sys = NetworkSystem::simplified(1.0, 0.0, 0.0, 0.0, 0.0).unwrap();
        let h = build_network_hamiltonian(&sys, 0.0, NetworkForm::Simplified).unwrap();
        let expected = ComplexMatrix::from_real_diagonal(&[3.0, 4.0, 4.0, 5.0, 4.0, 5.0, 5.0, 6.0]);
        assert!(h.max_abs_diff(&expected) < 1e-14);
    }

    #[test]
    fn simplified_rejects_unequal_energies() {
        let mut sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        sys.cavity.1 = 2.5;
        assert!(matches!(
            build_network_hamiltonian(&sys, 0.0, NetworkForm::Simplified),
            Err(Error::ConstraintViolated(_))
        ));
        let mut sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        sys.qubit_b = QubitParams::symmetric(1.5, 0.7);
        assert!(matches!(
            network_eigensystem(&sys, 0.0),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn eigenvalue_table() {
        let sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        let eig = network_eigensystem(&sys, 0.0).unwrap();
        let expected = [3.0, 3.5, 4.0, 4.5, 4.5, 5.0, 5.5, 6.0];
        for (x, y) in sorted(eig.energies.to_vec()).iter().zip(expected) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_vectors_are_eigenvectors() {
        let mut next = lcg(11);
        for _ in 0..50 {
            let e_g = 0.2 + 2.0 * next();
            let g1 = (next() - 0.5) * 2.0;
            let g2 = 0.05 + next();
            let sys =
                NetworkSystem::simplified(e_g, g1 + 0.01, g2, 6.0 * next(), 6.0 * next()).unwrap();
            let h = build_network_hamiltonian(&sys, 0.0, NetworkForm::Simplified).unwrap();
            let eig = network_eigensystem(&sys, 0.0).unwrap();
            for k in 0..8 {
                assert!(residual(&h, eig.energies[k], eig.vectors[k].amplitudes()) < 1e-10);
            }
            let numeric = hermitian_eig(&h).unwrap();
            for (x, y) in sorted(eig.energies.to_vec()).iter().zip(&numeric.values) {
                assert!((x - y).abs() < 1e-10);
            }
            for i in 0..8 {
                for j in 0..8 {
                    let ip = eig.vectors[i].inner(&eig.vectors[j]);
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((ip - re(want)).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_coupling_norm() {
        let sys = NetworkSystem::simplified(1.0, 0.3, 0.3, 0.4, 1.1).unwrap();
        let eig = network_eigensystem(&sys, 0.0).unwrap();
        assert!((eig.norms[1] - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(eig.product[0] && eig.product[3]);
        assert_eq!(eig.product.iter().filter(|p| **p).count(), 2);
    }

    #[test]
    fn eigensystem_needs_both_couplings() {
        let sys = NetworkSystem::simplified(1.0, 0.0, 0.3, 0.0, 0.0).unwrap();
        assert!(matches!(
            network_eigensystem(&sys, 0.0),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn general_form_reduces_to_simplified() {
        let mut sys = NetworkSystem::simplified(1.3, 0.2, 0.45, 0.7, -0.4).unwrap();
        sys.d1 = DriveSignal::linear(0.7, 0.3);
        let t = 0.9;
        let general = build_network_hamiltonian(&sys, t, NetworkForm::General).unwrap();
        let simple = build_network_hamiltonian(&sys, t, NetworkForm::Simplified).unwrap();
        assert!(general.max_abs_diff(&simple) < 1e-12);
    }

    #[test]
    fn general_form_uses_delayed_envelope() {
        let mut sys = NetworkSystem::simplified(1.0, 0.2, 0.3, 0.0, 0.0).unwrap();
        sys.f1 = DriveSignal::linear(1.0, 0.5);
        sys.waveguide_length = 3.0;
        sys.signal_speed = 2.0;
        assert_eq!(sys.delay(), 1.5);
        let h = build_network_hamiltonian(&sys, 1.0, NetworkForm::General).unwrap();
        assert!((h[(2, 4)] - re(0.2 * 1.5)).norm() < 1e-14);
        assert!((h[(1, 4)] - re(0.3 * 2.25)).norm() < 1e-14);
        assert!(h.is_hermitian(HERMITIAN_TOL));
    }

    #[test]
    fn hermitian_for_random_phases() {
        let mut next = lcg(5);
        for _ in 0..20 {
            let sys = NetworkSystem::simplified(1.0, next(), next(), 10.0 * next(), 10.0 * next())
                .unwrap();
            for form in [NetworkForm::General, NetworkForm::Simplified] {
                let h = build_network_hamiltonian(&sys, next(), form).unwrap();
                assert_eq!(h.hermiticity_deviation(), 0.0);
            }
        }
    }

    #[test]
    fn evolve_single_eigenstate_keeps_probabilities() {
        let sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.2, 0.5).unwrap();
        let eig = network_eigensystem(&sys, 0.0).unwrap();
        let mut coeffs = vec![ZERO; 8];
        coeffs[4] = ONE;
        let out = network_evolve(&sys, &coeffs, 0.0, 7.3).unwrap();
        let overlap = eig.vectors[4].inner(&out);
        assert!((overlap.norm() - 1.0).abs() < 1e-12);
        for (p, q) in out
            .probabilities()
            .iter()
            .zip(eig.vectors[4].probabilities())
        {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn evolve_relative_phase_rate() {
        let sys = NetworkSystem::simplified(1.7, 0.3, 0.4, 0.0, 0.0).unwrap();
        let eig = network_eigensystem(&sys, 0.0).unwrap();
        let mut coeffs = vec![ZERO; 8];
        coeffs[1] = re(FRAC_1_SQRT_2);
        coeffs[2] = re(FRAC_1_SQRT_2);
        let t = 0.83;
        let out = network_evolve(&sys, &coeffs, 0.0, t).unwrap();
        let c2 = eig.vectors[1].inner(&out);
        let c3 = eig.vectors[2].inner(&out);
        let rel = (c2 * c3.conj()).arg();
        let expected = (1.7 * t + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI)
            - std::f64::consts::PI;
        assert!((rel - expected).abs() < 1e-12);
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolve_zero_interval_and_bad_norm() {
        let sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        let eig = network_eigensystem(&sys, 0.0).unwrap();
        let coeffs = vec![re(0.5); 4]
            .into_iter()
            .chain(vec![ZERO; 4])
            .collect::<Vec<_>>();
        let out = network_evolve(&sys, &coeffs, 2.0, 2.0).unwrap();
        for k in 0..8 {
            assert!((eig.vectors[k].inner(&out) - coeffs[k]).norm() < 1e-12);
        }
        let bad = vec![re(0.5); 8];
        assert!(matches!(
            network_evolve(&sys, &bad, 0.0, 1.0),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn eigen_and_stepped_propagators_agree() {
        let sys = NetworkSystem::simplified(1.0, 0.3, 0.25, 0.4, 0.9).unwrap();
        let a = network_propagator(
            &sys,
            0.0,
            3.0,
            NetworkForm::Simplified,
            NetworkMode::Eigen,
            None,
        )
        .unwrap();
        let b = network_propagator(
            &sys,
            0.0,
            3.0,
            NetworkForm::Simplified,
            NetworkMode::Stepped,
            Some(0.5),
        )
        .unwrap();
        assert!(a.max_abs_diff(&b) < 1e-10);
        assert!(a.unitarity_deviation() < 1e-12);
    }

    #[test]
    fn abcd_symmetric_magnitudes() {
        let p = QubitParams::symmetric(0.4, 0.7);
        let k = abcd_coefficients(&p, 0.0, ONE).unwrap();
        for z in [k.a, k.b, k.c, k.d] {
            assert!((z.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let eig = qubit_eigensystem(&p, 0.0).unwrap();
        let h = crate::qubit::build_qubit_hamiltonian(&p, 0.0);
        assert!(residual(&h, eig.e1, &k.ground()) < 1e-14);
        assert!(residual(&h, eig.e2, &k.excited()) < 1e-14);
    }

    #[test]
    fn abcd_random_draws_are_normalized_eigenvectors() {
        let mut next = lcg(99);
        for _ in 0..100 {
            let p = QubitParams::constant(
                4.0 * next() - 2.0,
                4.0 * next() - 2.0,
                0.01 + next(),
                6.0 * next() - 3.0,
            );
            let k = abcd_coefficients(&p, 0.0, ONE).unwrap();
            assert!((k.a.norm_sqr() + k.b.norm_sqr() - 1.0).abs() < 1e-12);
            assert!((k.c.norm_sqr() + k.d.norm_sqr() - 1.0).abs() < 1e-12);
            assert_eq!(k.b.im, 0.0);
            assert_eq!(k.d.im, 0.0);
            let eig = qubit_eigensystem(&p, 0.0).unwrap();
            let h = crate::qubit::build_qubit_hamiltonian(&p, 0.0);
            assert!(residual(&h, eig.e1, &k.ground()) < 1e-12);
            assert!(residual(&h, eig.e2, &k.excited()) < 1e-12);
        }
    }

    #[test]
    fn abcd_needs_hopping() {
        let p = QubitParams::constant(0.0, 1.0, 0.0, 0.0);
        assert!(matches!(
            abcd_coefficients(&p, 0.0, ONE),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn u_is_conjugate_of_dipole_element() {
        let p = QubitParams::constant(0.3, -0.2, 0.6, 1.1);
        let k = abcd_coefficients(&p, 0.0, re(0.8)).unwrap();
        // ⟨E_g| ½·0.8·diag(1, −1) |E_e⟩
        let dipole = ComplexMatrix::from_real_diagonal(&[0.4, -0.4]);
        let ge = crate::linalg::inner(&k.ground(), &dipole.mul_slice(&k.excited()));
        assert!((k.u - ge.conj()).norm() < 1e-15);
    }

    #[test]
    fn hs_zero_when_u_zero() {
        let p = QubitParams::constant(0.3, -0.2, 0.6, 1.1);
        let k = abcd_coefficients(&p, 0.0, ZERO).unwrap();
        assert_eq!(interaction_block_hs(&k).max_abs(), 0.0);
    }

    #[test]
    fn hs_symmetric_matches_basis_change() {
        let p = QubitParams::symmetric(0.0, 0.5);
        let k = abcd_coefficients(&p, 0.0, c(0.3, 0.2)).unwrap();
        let hs = interaction_block_hs(&k);
        // |Eφ1,e⟩ u ⟨Eφ2,g| + h.c. transformed into the mixed basis
        let mut energy = ComplexMatrix::zeros(4, 4);
        energy[(1, 2)] = k.u;
        energy[(2, 1)] = k.u.conj();
        let t = energy_to_mixed_basis(&k.ground(), &k.excited());
        let mixed = &(&t * &energy) * &t.adjoint();
        assert!(mixed.block(0, 2, 2, 2).max_abs_diff(&hs) < 1e-15);
    }

    #[test]
    fn hs_general_equals_factored_form() {
        let p = QubitParams::constant(0.9, -0.4, 0.35, 2.0);
        let k = abcd_coefficients(&p, 0.0, c(1.0, -0.5)).unwrap();
        let scale = k.u * (k.c.conj() * k.a - k.d.conj() * k.b);
        let expected = ComplexMatrix::outer(&k.excited(), &k.ground()).scale(scale);
        assert!(interaction_block_hs(&k).max_abs_diff(&expected) < 1e-15);
    }

    fn jc_sys(renorm: Renormalization, s0: f64) -> RenormalizedJc {
        RenormalizedJc {
            qubit: QubitParams::constant(0.2, 0.5, 0.3, 0.4),
            cavity: (1.0, 2.0),
            renorm,
            s0,
        }
    }

    #[test]
    fn renormalized_jc_reduces_to_jc() {
        let renorm = Renormalization {
            dipole_scale: c(0.1, 0.05),
            ..Renormalization::default()
        };
        let sys = jc_sys(renorm, 0.0);
        let h = build_renormalized_jc_hamiltonian(&sys, 0.7).unwrap();
        assert!(h.is_hermitian(HERMITIAN_TOL));
        let k = abcd_coefficients(&sys.qubit, 0.7, sys.renorm.dipole_scale).unwrap();
        let g = k.u * (k.c.conj() * k.a - k.d.conj() * k.b);
        let jc = CoupledSystem {
            qubit: QubitLevels::FromQubit(sys.qubit.clone()),
            cavity: sys.cavity,
            coupling: g.norm().into(),
            coupling_phase: g.arg(),
        };
        let energy = build_jc_hamiltonian(&jc, 0.7).unwrap();
        let t = energy_to_mixed_basis(&k.ground(), &k.excited());
        let mixed = &(&t * &energy) * &t.adjoint();
        assert!(h.max_abs_diff(&mixed) < 1e-14);
    }

    #[test]
    fn field_imprint_is_pure_phase() {
        let mut renorm = Renormalization::default();
        renorm.diagonal_field = [
            DriveSignal::constant(0.8),
            DriveSignal::cosine(0.5, 2.0, 0.1),
        ];
        let base = build_renormalized_jc_hamiltonian(&jc_sys(renorm.clone(), 0.0), 1.3).unwrap();
        let imprinted = build_renormalized_jc_hamiltonian(&jc_sys(renorm, 0.9), 1.3).unwrap();
        assert!((base[(0, 1)].norm() - imprinted[(0, 1)].norm()).abs() < 1e-15);
        assert!((base[(2, 3)].norm() - imprinted[(2, 3)].norm()).abs() < 1e-15);
        assert!(((imprinted[(0, 1)] / base[(0, 1)]).arg() - 0.9 * 0.8 * 1.3).abs() < 1e-12);
    }

    #[test]
    fn effective_potential_oscillation() {
        let renorm = Renormalization {
            va: [0.1, 0.0, 0.0, 0.0, 0.0],
            ..Renormalization::default()
        };
        let sys = jc_sys(renorm, 0.0);
        for t in [0.0, 0.4, 1.9, 3.3] {
            let h = build_renormalized_jc_hamiltonian(&sys, t).unwrap();
            let expected = 1.0 + 0.2 + 0.1 * (1.0 * t).sin();
            assert!((h[(0, 0)].re - expected).abs() < 1e-15);
            assert!((h[(1, 1)].re - 1.5).abs() < 1e-15);
        }
    }

    #[test]
    fn barrier_factor_scales_hopping() {
        let renorm = Renormalization {
            c0: 0.5,
            va: [0.0, 0.0, 0.0, 0.0, 0.4],
            mode_phases: [0.3, 0.0],
            ..Renormalization::default()
        };
        let sys = jc_sys(renorm, 0.0);
        let t = 0.6;
        let h = build_renormalized_jc_hamiltonian(&sys, t).unwrap();
        let factor = (-0.5 * 0.4 * (t + 0.3).sin()).exp();
        assert!((h[(0, 1)].norm() - 0.3 * factor).abs() < 1e-15);
    }

    #[test]
    fn coulomb_slot_order() {
        let coulomb = CoulombCoupling {
            charge: 1.0,
            distances: [1.0, 2.0, 2.0, 1.0],
        };
        assert_eq!(coulomb.diagonal(), [1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 1.0, 1.0]);
    }

    #[test]
    fn renormalized_network_bare_structure() {
        let mut sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        sys.qubit_a = QubitParams::constant(0.1, 0.3, 0.25, 0.7);
        sys.qubit_b = QubitParams::constant(-0.2, 0.4, 0.15, -0.3);
        sys.coulomb = CoulombCoupling {
            charge: 1.0,
            distances: [1.0, 2.0, 2.0, 1.0],
        };
        let h = build_renormalized_network_hamiltonian(&sys, 0.5).unwrap();
        let i2 = ComplexMatrix::identity(2);
        let cav = ComplexMatrix::from_real_diagonal(&[1.0, 2.0]);
        let ha = crate::qubit::build_qubit_hamiltonian(&sys.qubit_a, 0.5);
        let hb = crate::qubit::build_qubit_hamiltonian(&sys.qubit_b, 0.5);
        let expected = tensor_all(&[&cav, &i2, &i2])
            + tensor_all(&[&i2, &ha, &i2])
            + tensor_all(&[&i2, &i2, &hb])
            + ComplexMatrix::from_real_diagonal(&sys.coulomb.diagonal());
        assert!(h.max_abs_diff(&expected) < 1e-14);
    }

    fn loaded_network(next: &mut impl FnMut() -> f64) -> NetworkSystem {
        let mut sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        sys.qubit_a = QubitParams::constant(next(), next(), 0.1 + next(), next());
        sys.qubit_b = QubitParams {
            ts_mag: DriveSignal::linear(0.2, next()),
            ..QubitParams::constant(next(), next(), 0.0, next())
        };
        sys.coulomb = CoulombCoupling {
            charge: next(),
            distances: [1.0 + next(), 1.0 + next(), 1.0 + next(), 1.0 + next()],
        };
        for r in [&mut sys.renorm_a, &mut sys.renorm_b] {
            r.c0 = next();
            r.va = [next(), next(), next(), next(), next()];
            r.mode_phases = [next(), next()];
            r.diagonal_field = [
                DriveSignal::constant(next()),
                DriveSignal::cosine(next(), 3.0, 0.0),
            ];
            r.dipole_scale = c(next(), next());
        }
        sys
    }

    #[test]
    fn renormalized_network_hermitian_random() {
        let mut next = lcg(2024);
        for _ in 0..25 {
            let mut sys = loaded_network(&mut next);
            sys.imprints = PhaseImprints {
                s_a: next(),
                s_b: next(),
                s_0: next(),
                integrand: ImprintIntegrand::SqrtHopping,
            };
            let h = build_renormalized_network_hamiltonian(&sys, 2.0 * next()).unwrap();
            assert!(h.hermiticity_deviation() <= 1e-12);
        }
    }

    #[test]
    fn imprints_preserve_magnitudes() {
        let mut next = lcg(7);
        for _ in 0..20 {
            let sys = loaded_network(&mut next);
            let t = 1.0 + next();
            let plain = build_renormalized_network_hamiltonian(&sys, t).unwrap();
            let mut imprinted = sys.clone();
            imprinted.imprints = PhaseImprints {
                s_a: 3.0 * next(),
                s_b: 3.0 * next(),
                s_0: 3.0 * next(),
                integrand: ImprintIntegrand::Hopping,
            };
            let h = build_renormalized_network_hamiltonian(&imprinted, t).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    assert!((plain[(i, j)].norm() - h[(i, j)].norm()).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn ab_imprint_uses_other_qubit_hopping() {
        let mut sys = NetworkSystem::simplified(1.0, 0.3, 0.4, 0.0, 0.0).unwrap();
        sys.qubit_a = QubitParams::constant(0.0, 0.0, 0.5, 0.0);
        sys.qubit_b = QubitParams::constant(0.0, 0.0, 0.2, 0.0);
        sys.imprints.s_b = 2.0;
        let t = 1.5;
        let h = build_renormalized_network_hamiltonian(&sys, t).unwrap();
        let want = C64::from_polar(0.5, 2.0 * 0.2 * t);
        assert!((h[(network_index(0, 0, 0), network_index(0, 1, 0))] - want).norm() < 1e-14);
        assert!((h[(network_index(1, 0, 1), network_index(1, 1, 1))] - want).norm() < 1e-14);
        sys.imprints.integrand = ImprintIntegrand::SqrtHopping;
        let h = build_renormalized_network_hamiltonian(&sys, t).unwrap();
        let want = C64::from_polar(0.5, 2.0 * 0.2f64.sqrt() * t);
        assert!((h[(0, 2)] - want).norm() < 1e-14);
    }
}
