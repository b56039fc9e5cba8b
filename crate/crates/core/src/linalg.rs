//! Dense complex linear algebra for the small (≤ 64×64) operators used by the
//! models: Hermitian eigendecomposition, matrix exponential, Kronecker
//! products and partial traces.
//!
//! Storage is backed by `nalgebra`; everything above the raw eigen-solver
//! (ordering, degenerate-subspace canonicalisation, phase convention, the
//! exponential routes) lives here.

use std::cmp::Ordering;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Absolute Hermiticity tolerance, scaled by `max(1, max|A_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues closer than this are treated as one degenerate cluster.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Normalization tolerance for [`StateVector`] construction.
pub const NORM_TOL: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Dense complex matrix, row/column indexed from zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            data: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            data: DMatrix::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            data: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Builds a matrix from row-major entries. Panics if the entry count does
    /// not equal `rows * cols`.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Self {
        assert_eq!(
            entries.len(),
            rows * cols,
            "entry count must equal rows*cols"
        );
        Self {
            data: DMatrix::from_row_slice(rows, cols, entries),
        }
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, |r| r.len());
        Self::from_fn(n, m, |i, j| re(rows[i][j]))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| if i == j { re(diag[i]) } else { ZERO })
    }

    /// The outer product `|u⟩⟨v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn from_nalgebra(data: DMatrix<C64>) -> Self {
        Self { data }
    }

    pub fn as_nalgebra(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            data: self.data.adjoint(),
        }
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            data: &self.data * s,
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(re(s))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows(), self.cols()), (other.rows(), other.cols()));
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |A - A†|`, or infinity for non-square input.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// `max |U†U - I|`.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = &self.adjoint() * self;
        prod.max_abs_diff(&Self::identity(self.cols()))
    }

    pub fn block(&self, r0: usize, c0: usize, nrows: usize, ncols: usize) -> Self {
        Self {
            data: self.data.view((r0, c0), (nrows, ncols)).into_owned(),
        }
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, block: &ComplexMatrix) {
        for i in 0..block.rows() {
            for j in 0..block.cols() {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        self.data.column(j).iter().copied().collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.data.diagonal().iter().copied().collect()
    }

    /// Matrix-vector product on a raw amplitude slice.
    pub fn mul_slice(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(
            v.len(),
            self.cols(),
            "vector length must match column count"
        );
        (0..self.rows())
            .map(|i| (0..self.cols()).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    /// `⟨ψ|A|ψ⟩` for a raw amplitude slice.
    pub fn expectation(&self, v: &[C64]) -> C64 {
        let av = self.mul_slice(v);
        v.iter().zip(av.iter()).map(|(a, b)| a.conj() * b).sum()
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.data[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.data[idx]
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $op:tt) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { data: &self.data $op &rhs.data }
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { data: self.data $op rhs.data }
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $method(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                ComplexMatrix { data: self.data $op &rhs.data }
            }
        }
    };
}

forward_binop!(Add, add, +);
forward_binop!(Sub, sub, -);
forward_binop!(Mul, mul, *);

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix { data: -self.data }
    }
}

/// Which tensor basis a state's amplitudes refer to.
///
/// Orderings (first factor most significant):
/// * `QubitPosition`: `[|x1⟩, |x2⟩]`
/// * `QubitEnergy`: `[|E1⟩, |E2⟩]` (ground, excited)
/// * `CavityModes`: `[|Eφ1⟩, |Eφ2⟩]`
/// * `CavityQubitEnergy`: `[|Eφ1,g⟩, |Eφ1,e⟩, |Eφ2,g⟩, |Eφ2,e⟩]`
/// * `CavityQubitPosition`: `[|Eφ1,x1⟩, |Eφ1,x2⟩, |Eφ2,x1⟩, |Eφ2,x2⟩]`
/// * `NetworkEnergy`: `|Eφi⟩|q_A⟩|q_B⟩` with `q ∈ {g, e}`, index `4i + 2a + b`
/// * `NetworkPosition`: `|Eφi⟩|x_A⟩|x_B⟩`, same index rule
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BasisLabel {
    QubitPosition,
    QubitEnergy,
    CavityModes,
    CavityQubitEnergy,
    CavityQubitPosition,
    NetworkEnergy,
    NetworkPosition,
    Generic,
}

/// A normalized vector of complex amplitudes tagged with its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    basis: BasisLabel,
}

impl StateVector {
    /// Validates normalization (`|Σ|a|² − 1| ≤ 1e-10`) and finiteness.
    pub fn new(amplitudes: Vec<C64>, basis: BasisLabel) -> Result<Self> {
        Self::with_tolerance(amplitudes, basis, NORM_TOL)
    }

    fn with_tolerance(amplitudes: Vec<C64>, basis: BasisLabel, tol: f64) -> Result<Self> {
        if amplitudes
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("state amplitudes"));
        }
        let n2 = norm_sqr(&amplitudes);
        if (n2 - 1.0).abs() > tol {
            return Err(Error::NotNormalized(n2));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Rescales arbitrary (non-zero) amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, basis: BasisLabel) -> Result<Self> {
        let n2 = norm_sqr(&amplitudes);
        if !(n2.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        if n2 <= f64::MIN_POSITIVE {
            return Err(Error::NotNormalized(n2));
        }
        let inv = 1.0 / n2.sqrt();
        Self::new(amplitudes.into_iter().map(|z| z * inv).collect(), basis)
    }

    pub fn basis_state(dim: usize, index: usize, basis: BasisLabel) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amplitudes = vec![ZERO; dim];
        amplitudes[index] = ONE;
        Self { amplitudes, basis }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> BasisLabel {
        self.basis
    }

    pub fn with_basis(mut self, basis: BasisLabel) -> Self {
        self.basis = basis;
        self
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn density_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }

    /// Applies a (unitary) operator. The result is not renormalized; it must
    /// stay normalized within 1e-9.
    pub fn evolved(&self, u: &ComplexMatrix) -> Result<StateVector> {
        if u.cols() != self.dim() {
            return Err(Error::DimMismatch {
                expected: u.cols(),
                found: self.dim(),
            });
        }
        Self::with_tolerance(u.mul_slice(&self.amplitudes), self.basis, 1e-9)
    }
}

pub fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// `⟨u|v⟩`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Kronecker product with row-major blocks: `(A⊗B)[i·p+k, j·q+l] = A[i,j]·B[k,l]`.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix {
        data: a.data.kronecker(&b.data),
    }
}

/// Kronecker product of several factors, leftmost most significant.
pub fn tensor_all(factors: &[&ComplexMatrix]) -> ComplexMatrix {
    let mut it = factors.iter();
    let first = it.next().expect("at least one factor");
    it.fold((*first).clone(), |acc, f| tensor_product(&acc, f))
}

/// Kronecker product of amplitude vectors.
pub fn tensor_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter()
        .flat_map(|x| b.iter().map(move |y| x * y))
        .collect()
}

/// Ascending eigenvalues with orthonormal eigenvectors stored as columns.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.vectors.column(k)
    }

    /// `max_k ‖H v_k − λ_k v_k‖`.
    pub fn max_residual(&self, h: &ComplexMatrix) -> f64 {
        (0..self.values.len())
            .map(|k| residual(h, self.values[k], &self.vector(k)))
            .fold(0.0, f64::max)
    }
}

/// `‖H v − λ v‖₂`.
pub fn residual(h: &ComplexMatrix, lambda: f64, v: &[C64]) -> f64 {
    h.mul_slice(v)
        .iter()
        .zip(v)
        .map(|(hv, x)| (hv - x * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

fn hermitian_scale(h: &ComplexMatrix) -> f64 {
    HERMITIAN_TOL * h.max_abs().max(1.0)
}

/// Multiplies `v` by a global phase so that its largest-modulus component
/// (the last one among ties) is real and positive.
pub fn fix_phase(v: &mut [C64]) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let tie = max * (1.0 - 1e-9);
    let k = v.iter().rposition(|z| z.norm() >= tie).expect("non-empty");
    let phase = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
    v[k] = re(v[k].norm());
}

fn rounded_key(v: &[C64]) -> Vec<(i64, i64)> {
    v.iter()
        .map(|z| ((z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64))
        .collect()
}

/// Hermitian eigendecomposition.
///
/// Eigenvalues ascend; every eigenvector is phase-fixed with [`fix_phase`].
/// Inside a cluster of eigenvalues closer than [`DEGENERACY_TOL`] the
/// eigenvectors are replaced by the canonical basis obtained by projecting
/// the standard basis vectors onto the cluster subspace (Gram–Schmidt in
/// index order), and ordered by their rounded components.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEigen> {
    if !h.is_square() {
        return Err(Error::DimMismatch {
            expected: h.rows(),
            found: h.cols(),
        });
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("Hermitian eigenproblem input"));
    }
    let deviation = h.hermiticity_deviation();
    if deviation > hermitian_scale(h) {
        return Err(Error::NotHermitian { deviation });
    }
    let n = h.rows();
    if n == 0 {
        return Ok(HermitianEigen {
            values: vec![],
            vectors: ComplexMatrix::zeros(0, 0),
        });
    }
    let sym = (h + &h.adjoint()).scale_real(0.5);
    let eig = sym.data.clone().symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(Ordering::Equal)
    });
    let sorted_vals: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let sorted_vecs: Vec<Vec<C64>> = order
        .iter()
        .map(|&k| eig.eigenvectors.column(k).iter().copied().collect())
        .collect();

    let mut values = Vec::with_capacity(n);
    let mut vectors: Vec<Vec<C64>> = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && sorted_vals[end] - sorted_vals[end - 1] < DEGENERACY_TOL {
            end += 1;
        }
        if end - start == 1 {
            let mut v = sorted_vecs[start].clone();
            fix_phase(&mut v);
            values.push(sorted_vals[start]);
            vectors.push(v);
        } else {
            let mut cluster = canonical_cluster_basis(&sorted_vecs[start..end], n);
            for v in cluster.iter_mut() {
                fix_phase(v);
            }
            cluster.sort_by(|a, b| rounded_key(a).cmp(&rounded_key(b)));
            let mut pairs: Vec<(f64, Vec<C64>)> = cluster
                .into_iter()
                .map(|v| (sym.expectation(&v).re, v))
                .collect();
            // values stay ascending; the cluster spread is below DEGENERACY_TOL
            let mut vals: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            for (slot, val) in pairs.iter_mut().zip(vals) {
                slot.0 = val;
            }
            for (val, v) in pairs {
                values.push(val);
                vectors.push(v);
            }
        }
        start = end;
    }

    let vectors = ComplexMatrix::from_fn(n, n, |i, j| vectors[j][i]);
    Ok(HermitianEigen { values, vectors })
}

/// Orthonormal basis of span(`basis`) built from projected standard vectors.
fn canonical_cluster_basis(basis: &[Vec<C64>], n: usize) -> Vec<Vec<C64>> {
    let m = basis.len();
    let mut chosen: Vec<Vec<C64>> = Vec::with_capacity(m);
    for j in 0..n {
        if chosen.len() == m {
            break;
        }
        // P e_j = Σ_k q_k (q_k)_j*
        let mut w: Vec<C64> = vec![ZERO; n];
        for q in basis {
            let coef = q[j].conj();
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi += qi * coef;
            }
        }
        for u in &chosen {
            let proj = inner(u, &w);
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= ui * proj;
            }
        }
        let nrm = norm_sqr(&w).sqrt();
        if nrm > 1e-6 {
            chosen.push(w.into_iter().map(|z| z / nrm).collect());
        }
    }
    // fall back to the raw basis if projection lost rank (should not happen)
    if chosen.len() < m {
        return basis.to_vec();
    }
    chosen
}

/// `V f(Λ) V†` for a Hermitian matrix given its eigendecomposition.
fn spectral_map(eig: &HermitianEigen, f: impl Fn(f64) -> C64) -> ComplexMatrix {
    let n = eig.values.len();
    let fv: Vec<C64> = eig.values.iter().map(|&l| f(l)).collect();
    let v = &eig.vectors;
    ComplexMatrix::from_fn(n, n, |i, j| {
        (0..n).map(|k| v[(i, k)] * fv[k] * v[(j, k)].conj()).sum()
    })
}

/// Matrix exponential.
///
/// Anti-Hermitian and Hermitian inputs go through the spectral route; any
/// other matrix falls back to scaling-and-squaring with a Padé approximant.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() {
        return Err(Error::DimMismatch {
            expected: a.rows(),
            found: a.cols(),
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix exponential input"));
    }
    let tol = hermitian_scale(a);
    let anti = (a + &a.adjoint()).max_abs();
    if anti <= tol {
        // A = -iH with H = iA Hermitian
        let h = a.scale(I);
        let eig = hermitian_eig(&h)?;
        return Ok(spectral_map(&eig, |l| C64::from_polar(1.0, -l)));
    }
    if a.hermiticity_deviation() <= tol {
        let eig = hermitian_eig(a)?;
        return Ok(spectral_map(&eig, |l| re(l.exp())));
    }
    Ok(ComplexMatrix { data: a.data.exp() })
}

/// `exp(−i·s·H)` for Hermitian `H`.
pub fn evolution_operator(h: &ComplexMatrix, s: f64) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    Ok(spectral_map(&eig, |l| C64::from_polar(1.0, -l * s)))
}

/// Reduced density matrix of subsystem `keep` for a multipartite `rho`
/// whose subsystem dimensions are `dims` (first factor most significant).
pub fn partial_trace(rho: &ComplexMatrix, dims: &[usize], keep: usize) -> Result<ComplexMatrix> {
    let total: usize = dims.iter().product();
    if !rho.is_square() || rho.rows() != total {
        return Err(Error::DimMismatch {
            expected: total,
            found: rho.rows(),
        });
    }
    if keep >= dims.len() {
        return Err(Error::DimMismatch {
            expected: dims.len(),
            found: keep,
        });
    }
    let tr = rho.trace();
    if (tr - ONE).norm() > NORM_TOL {
        return Err(Error::NotNormalized(tr.re));
    }
    let dk = dims[keep];
    let left: usize = dims[..keep].iter().product();
    let right: usize = dims[keep + 1..].iter().product();
    let idx = |l: usize, i: usize, r: usize| (l * dk + i) * right + r;
    Ok(ComplexMatrix::from_fn(dk, dk, |i, j| {
        let mut acc = ZERO;
        for l in 0..left {
            for r in 0..right {
                acc += rho[(idx(l, i, r), idx(l, j, r))];
            }
        }
        acc
    }))
}

/// Eigenpairs of `[[a, w], [w*, b]]` in closed form.
#[derive(Clone, Copy, Debug)]
pub struct TwoLevel {
    pub lower: f64,
    pub upper: f64,
    pub lower_vec: [C64; 2],
    pub upper_vec: [C64; 2],
}

/// Closed-form eigensystem of the 2×2 Hermitian matrix `[[a, w], [w*, b]]`.
///
/// Energies are `(a+b)/2 ∓ ½√((a−b)² + 4|w|²)`. For each vector the
/// algebraically equivalent form without cancellation is chosen. When the
/// matrix is a multiple of the identity the standard basis is returned.
pub fn two_level(a: f64, b: f64, w: C64) -> TwoLevel {
    let delta = a - b;
    let s = (delta * delta + 4.0 * w.norm_sqr()).sqrt();
    let mean = 0.5 * (a + b);
    let lower = mean - 0.5 * s;
    let upper = mean + 0.5 * s;
    if s == 0.0 {
        return TwoLevel {
            lower,
            upper,
            lower_vec: [ONE, ZERO],
            upper_vec: [ZERO, ONE],
        };
    }
    let lower_raw = if delta >= 0.0 {
        [w, re(-0.5 * (delta + s))]
    } else {
        [re(0.5 * (delta - s)), w.conj()]
    };
    let upper_raw = if delta <= 0.0 {
        [w, re(0.5 * (s - delta))]
    } else {
        [re(0.5 * (delta + s)), w.conj()]
    };
    let unit = |v: [C64; 2]| {
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        [v[0] / n, v[1] / n]
    };
    TwoLevel {
        lower,
        upper,
        lower_vec: unit(lower_raw),
        upper_vec: unit(upper_raw),
    }
}

/// Rejects non-finite times and `t1 < t0`.
pub fn check_interval(t0: f64, t1: f64) -> Result<()> {
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::BadTimeRange { t0, t1 });
    }
    Ok(())
}

/// Number of equal steps no longer than `dt` covering `[t0, t1]`.
pub fn step_count(t0: f64, t1: f64, dt: f64) -> Result<usize> {
    check_interval(t0, t1)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::BadTimeStep(dt));
    }
    Ok(((t1 - t0) / dt).ceil().max(0.0) as usize)
}

/// Time-ordered product `Π exp(−i·h·H(t_mid))` over equal midpoint steps,
/// later steps multiplied on the left. With `constant` set, `H` is
/// evaluated once and the single-step operator reused.
pub fn time_ordered_propagator(
    dim: usize,
    t0: f64,
    t1: f64,
    dt: f64,
    constant: bool,
    hamiltonian: impl Fn(f64) -> Result<ComplexMatrix>,
) -> Result<ComplexMatrix> {
    let n = step_count(t0, t1, dt)?;
    let mut u = ComplexMatrix::identity(dim);
    if n == 0 {
        return Ok(u);
    }
    let h = (t1 - t0) / n as f64;
    if constant {
        let step = evolution_operator(&hamiltonian(t0 + 0.5 * h)?, h)?;
        for _ in 0..n {
            u = &step * &u;
        }
        return Ok(u);
    }
    for k in 0..n {
        let tm = t0 + (k as f64 + 0.5) * h;
        u = &evolution_operator(&hamiltonian(tm)?, h)? * &u;
    }
    Ok(u)
}
