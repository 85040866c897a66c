//! Dense complex-matrix kernel.
//!
//! Everything the verifier needs reduces to a handful of primitives on small
//! dense matrices: Hermitian validation, extremal eigenpairs, positivity and
//! trace distance. Matrices are `nalgebra` column-major `DMatrix<Complex64>`
//! wrapped in newtypes that carry the invariants.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QdpError, Result};
use crate::tol;

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub(crate) fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Square dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() == 0 || m.nrows() != m.ncols() {
            return Err(QdpError::InvalidMatrix(format!(
                "expected a non-empty square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Self(m))
    }

    /// Builds a matrix from row-major rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(QdpError::InvalidMatrix("rows must form a square array".into()));
        }
        Self::new(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&x| real(x)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &DVector<C64>, b: &DVector<C64>) -> Self {
        Self(a * b.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Self {
        Self(&self.0 * &other.0)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn add(&self, other: &ComplexMatrix) -> Self {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Self {
        Self(&self.0 - &other.0)
    }

    /// Kronecker product `self ⊗ other`; `self` is the left (more significant) factor.
    pub fn kron(&self, other: &ComplexMatrix) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    /// `max_{i,j} |M[i][j] - conj(M[j][i])|`.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Row-major copy of the entries.
    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect()).collect()
    }
}

/// Complex matrix known to be Hermitian within [`tol::HERMITIAN`].
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        let defect = m.hermitian_defect();
        if defect > tol::HERMITIAN {
            return Err(QdpError::InvalidMatrix(format!(
                "not Hermitian (max asymmetry {defect:e})"
            )));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(ComplexMatrix::identity(dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(ComplexMatrix::zeros(dim))
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        Self(ComplexMatrix(DMatrix::from_fn(n, n, |i, j| if i == j { real(values[i]) } else { ZERO })))
    }

    /// Projector `|v><v|` (the vector is used as given, not normalized).
    pub fn projector(v: &DVector<C64>) -> Self {
        let mut m = ComplexMatrix::outer(v, v);
        symmetrize_in_place(&mut m.0);
        Self(m)
    }

    pub(crate) fn from_raw_unchecked(m: DMatrix<C64>) -> Self {
        Self(ComplexMatrix(m))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0 .0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn add(&self, other: &HermitianMatrix) -> Self {
        Self(self.0.add(&other.0))
    }

    pub fn sub(&self, other: &HermitianMatrix) -> Self {
        Self(self.0.sub(&other.0))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(real(s)))
    }

    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        Self(self.0.kron(&other.0))
    }

    /// Real trace.
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `tr(self * other)` for Hermitian operands (real up to rounding).
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        let a = self.inner();
        let b = other.inner();
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += (a[(i, j)] * b[(j, i)]).re;
            }
        }
        acc
    }

    /// `<v| M |v>` for a (not necessarily normalized) vector.
    pub fn expectation(&self, v: &DVector<C64>) -> f64 {
        (v.adjoint() * self.inner() * v)[(0, 0)].re
    }

    /// All eigenvalues in ascending order (full decomposition).
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut vals: Vec<f64> = self.inner().clone().symmetric_eigenvalues().iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    }
}

impl AsRef<HermitianMatrix> for HermitianMatrix {
    fn as_ref(&self) -> &HermitianMatrix {
        self
    }
}

fn symmetrize_in_place(m: &mut DMatrix<C64>) {
    let n = m.nrows();
    for j in 0..n {
        m[(j, j)].im = 0.0;
        for i in 0..j {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            m[(i, j)] = avg;
            m[(j, i)] = avg.conj();
        }
    }
}

/// Returns `(M + M^dag) / 2`, refusing inputs whose asymmetry exceeds
/// [`tol::HERMITIZE_GUARD`].
pub fn hermitize(m: ComplexMatrix) -> Result<HermitianMatrix> {
    let defect = m.hermitian_defect();
    if defect > tol::HERMITIZE_GUARD {
        return Err(QdpError::InvalidMatrix(format!(
            "asymmetry {defect:e} exceeds guard {:e}",
            tol::HERMITIZE_GUARD
        )));
    }
    let mut inner = m.0;
    symmetrize_in_place(&mut inner);
    Ok(HermitianMatrix::from_raw_unchecked(inner))
}

/// Largest and smallest eigenpairs of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenExtremes {
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub vec_max: DVector<C64>,
    pub vec_min: DVector<C64>,
    /// Largest `||M v - lambda v||_2` over the two returned pairs.
    pub residual: f64,
}

/// Matrices up to this size always use the full decomposition.
const DIRECT_MAX_DIM: usize = 64;
/// Krylov dimension cap before giving up on Lanczos.
const LANCZOS_MAX_STEPS: usize = 400;
/// Largest size the dense fallback will attempt.
const DIRECT_FALLBACK_MAX_DIM: usize = 4096;

/// Extremal eigenpairs with `||M v - lambda v|| <= tol` for both pairs.
///
/// Small matrices go through a full Hermitian decomposition; larger ones use
/// Lanczos with full reorthogonalization and fall back to the full
/// decomposition if the Krylov iteration stalls. When the two extremes
/// coincide (`M = lambda I`) the returned vectors are still orthonormal.
pub fn extremal_eigenpairs(m: &HermitianMatrix, tol: f64) -> Result<EigenExtremes> {
    if !(tol > 0.0) {
        return Err(QdpError::InvalidInput(format!("eigen tolerance must be positive, got {tol}")));
    }
    let defect = m.matrix().hermitian_defect();
    if defect > tol::HERMITIAN {
        return Err(QdpError::InvalidMatrix(format!("not Hermitian (max asymmetry {defect:e})")));
    }
    let n = m.dim();
    let mut best_residual = f64::INFINITY;
    if n > DIRECT_MAX_DIM {
        match lanczos_extremes(m.inner(), tol) {
            Ok(ext) => return finish(m.inner(), ext, tol),
            Err(r) => best_residual = r,
        }
        if n > DIRECT_FALLBACK_MAX_DIM {
            return Err(QdpError::ConvergenceFailure { residual: best_residual });
        }
    }
    let ext = direct_extremes(m.inner()).ok_or(QdpError::ConvergenceFailure { residual: best_residual })?;
    finish(m.inner(), ext, tol)
}

fn finish(m: &DMatrix<C64>, mut ext: EigenExtremes, tol: f64) -> Result<EigenExtremes> {
    let n = m.nrows();
    if n >= 2 && ext.vec_max.dotc(&ext.vec_min).norm() > 1e-6 {
        // Only possible when the spectrum collapses to a point; any vector
        // orthogonal to vec_max is then an eigenvector too.
        ext.vec_min = orthogonal_unit(&ext.vec_max);
    }
    let r_max = residual(m, &ext.vec_max, ext.lambda_max);
    let r_min = residual(m, &ext.vec_min, ext.lambda_min);
    ext.residual = r_max.max(r_min);
    if !(ext.residual <= tol) {
        return Err(QdpError::ConvergenceFailure { residual: ext.residual });
    }
    Ok(ext)
}

fn orthogonal_unit(v: &DVector<C64>) -> DVector<C64> {
    let n = v.len();
    // Use the basis vector least aligned with v.
    let k = (0..n).min_by(|&a, &b| v[a].norm().total_cmp(&v[b].norm())).unwrap_or(0);
    let mut e = DVector::from_element(n, ZERO);
    e[k] = ONE;
    let proj = v.dotc(&e);
    let mut w = e - v * proj;
    let nrm = w.norm();
    w /= real(nrm);
    w
}

fn residual(m: &DMatrix<C64>, v: &DVector<C64>, lambda: f64) -> f64 {
    (m * v - v * real(lambda)).norm()
}

fn direct_extremes(m: &DMatrix<C64>) -> Option<EigenExtremes> {
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)?;
    let (mut imax, mut imin) = (0, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v > eig.eigenvalues[imax] {
            imax = i;
        }
        if v < eig.eigenvalues[imin] {
            imin = i;
        }
    }
    if imax == imin && m.nrows() > 1 {
        imin = if imax == 0 { 1 } else { 0 };
    }
    let vec_max = eig.eigenvectors.column(imax).into_owned();
    let vec_min = eig.eigenvectors.column(imin).into_owned();
    Some(EigenExtremes {
        lambda_max: eig.eigenvalues[imax],
        lambda_min: eig.eigenvalues[imin],
        vec_max: vec_max.normalize(),
        vec_min: vec_min.normalize(),
        residual: 0.0,
    })
}

/// Lanczos with full reorthogonalization. On failure returns the best
/// residual seen.
fn lanczos_extremes(m: &DMatrix<C64>, tol: f64) -> std::result::Result<EigenExtremes, f64> {
    let n = m.nrows();
    let max_steps = n.min(LANCZOS_MAX_STEPS);
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2005);
    let start = DVector::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let mut basis: Vec<DVector<C64>> = vec![start.normalize()];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;

    loop {
        let k = basis.len() - 1;
        let q = &basis[k];
        let mut w = m * q;
        let alpha = q.dotc(&w).re;
        alphas.push(alpha);
        // Two Gram-Schmidt passes against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c = b.dotc(&w);
                w.axpy(-c, b, ONE);
            }
        }
        let beta = w.norm();
        let breakdown = beta <= 1e-13 * scale;
        let steps = alphas.len();
        let check = breakdown || steps == max_steps || steps % 8 == 0;
        if check {
            if let Some((ext, est)) = ritz_extremes(&basis, &alphas, &betas, beta, breakdown) {
                if est <= 0.5 * tol || breakdown || steps == max_steps {
                    let r = residual(m, &ext.vec_max, ext.lambda_max).max(residual(m, &ext.vec_min, ext.lambda_min));
                    best = best.min(r);
                    if r <= tol {
                        return Ok(ext);
                    }
                }
            }
        }
        if breakdown || steps == max_steps {
            return Err(best);
        }
        betas.push(beta);
        basis.push(w / real(beta));
    }
}

/// Ritz pairs for the extremes of the current tridiagonal projection, with the
/// Lanczos residual estimate `|beta_k * s_k|`.
fn ritz_extremes(
    basis: &[DVector<C64>],
    alphas: &[f64],
    betas: &[f64],
    next_beta: f64,
    breakdown: bool,
) -> Option<(EigenExtremes, f64)> {
    let k = alphas.len();
    let t = DMatrix::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::try_new(t, f64::EPSILON, 0)?;
    let (mut imax, mut imin) = (0, 0);
    for (i, &v) in eig.eigenvalues.iter().enumerate() {
        if v > eig.eigenvalues[imax] {
            imax = i;
        }
        if v < eig.eigenvalues[imin] {
            imin = i;
        }
    }
    let lift = |col: usize| -> DVector<C64> {
        let s = eig.eigenvectors.column(col);
        let mut v = DVector::from_element(basis[0].len(), ZERO);
        for (i, b) in basis.iter().enumerate() {
            v.axpy(real(s[i]), b, ONE);
        }
        v.normalize()
    };
    let beta = if breakdown { 0.0 } else { next_beta };
    let est = (beta * eig.eigenvectors[(k - 1, imax)]).abs().max((beta * eig.eigenvectors[(k - 1, imin)]).abs());
    Some((
        EigenExtremes {
            lambda_max: eig.eigenvalues[imax],
            lambda_min: eig.eigenvalues[imin],
            vec_max: lift(imax),
            vec_min: lift(imin),
            residual: est,
        },
        est,
    ))
}

/// True iff `lambda_min(M) >= -tol`.
pub fn is_psd(m: &HermitianMatrix, tol: f64) -> bool {
    min_eigenvalue(m) >= -tol
}

pub(crate) fn min_eigenvalue(m: &HermitianMatrix) -> f64 {
    if m.dim() <= DIRECT_MAX_DIM {
        m.eigenvalues()[0]
    } else {
        match extremal_eigenpairs(m, tol::EIGEN_RESIDUAL) {
            Ok(e) => e.lambda_min,
            Err(_) => m.eigenvalues()[0],
        }
    }
}

/// `½ Σ|μ_i|` over the eigenvalues of `a - b`.
pub fn trace_distance<A: AsRef<HermitianMatrix>, B: AsRef<HermitianMatrix>>(a: &A, b: &B) -> Result<f64> {
    let (a, b) = (a.as_ref(), b.as_ref());
    if a.dim() != b.dim() {
        return Err(QdpError::DimensionMismatch { expected: a.dim(), actual: b.dim() });
    }
    let diff = a.sub(b);
    Ok(0.5 * diff.eigenvalues().iter().map(|x| x.abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rand_hermitian(n: usize, seed: u64) -> HermitianMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        hermitize(ComplexMatrix::new(&a + a.adjoint()).unwrap()).unwrap()
    }

    #[test]
    fn identity_extremes() {
        let e = extremal_eigenpairs(&HermitianMatrix::identity(4), 1e-8).unwrap();
        assert!((e.lambda_max - 1.0).abs() < 1e-12);
        assert!((e.lambda_min - 1.0).abs() < 1e-12);
        assert!(e.vec_max.dotc(&e.vec_min).norm() < 1e-10);
    }

    #[test]
    fn scaled_identity_third() {
        let m = HermitianMatrix::identity(4).scale(1.0 / 3.0);
        let e = extremal_eigenpairs(&m, 1e-8).unwrap();
        assert!((e.lambda_max - 1.0 / 3.0).abs() < 1e-12);
        assert!((e.lambda_min - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn diagonal_extremes_and_vectors() {
        let m = HermitianMatrix::diagonal(&[2.0, 0.5, 0.5, 0.1]);
        let e = extremal_eigenpairs(&m, 1e-8).unwrap();
        assert!((e.lambda_max - 2.0).abs() < 1e-12);
        assert!((e.lambda_min - 0.1).abs() < 1e-12);
        assert!((e.vec_max[0].norm() - 1.0).abs() < 1e-10);
        assert!((e.vec_min[3].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut a = DMatrix::from_element(2, 2, ZERO);
        a[(0, 1)] = ONE;
        let h = HermitianMatrix::from_raw_unchecked(a);
        assert!(matches!(extremal_eigenpairs(&h, 1e-8), Err(QdpError::InvalidMatrix(_))));
        assert!(HermitianMatrix::new(ComplexMatrix::identity(2).add(&ComplexMatrix::from_real_rows(&[vec![0.0, 1e-6], vec![0.0, 0.0]]).unwrap())).is_err());
    }

    #[test]
    fn lanczos_matches_direct_on_large_matrices() {
        for (n, seed) in [(65usize, 1u64), (128, 2), (200, 3)] {
            let m = rand_hermitian(n, seed);
            let vals = m.eigenvalues();
            let e = extremal_eigenpairs(&m, 1e-8).unwrap();
            assert!((e.lambda_max - vals[n - 1]).abs() < 1e-8, "n={n}");
            assert!((e.lambda_min - vals[0]).abs() < 1e-8, "n={n}");
            assert!(e.residual <= 1e-8);
        }
    }

    #[test]
    fn lanczos_handles_highly_degenerate_spectrum() {
        // diag(1,...,1, 0.25, ..., 0.25) rotated by nothing: breakdown after two steps.
        let n = 256;
        let vals: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.25 } else { 1.0 }).collect();
        let e = extremal_eigenpairs(&HermitianMatrix::diagonal(&vals), 1e-8).unwrap();
        assert!((e.lambda_max - 1.0).abs() < 1e-10);
        assert!((e.lambda_min - 0.25).abs() < 1e-10);
        let flat = HermitianMatrix::identity(100).scale(0.5);
        let e = extremal_eigenpairs(&flat, 1e-8).unwrap();
        assert!(e.vec_max.dotc(&e.vec_min).norm() < 1e-10);
    }

    #[test]
    fn psd_checks() {
        assert!(is_psd(&HermitianMatrix::identity(3), tol::PSD_SLACK));
        assert!(!is_psd(&HermitianMatrix::diagonal(&[1.0, -0.01]), 1e-9));
        assert!(is_psd(&HermitianMatrix::diagonal(&[1.0, -1e-12]), 1e-9));
    }

    #[test]
    fn hermitize_behaviour() {
        let h = rand_hermitian(4, 9);
        let same = hermitize(h.matrix().clone()).unwrap();
        assert!(same.matrix().max_abs_diff(h.matrix()) < 1e-15);

        let mut p = h.inner().clone();
        p[(0, 1)] += C64::new(1e-12, 0.0);
        let sym = hermitize(ComplexMatrix::new(p).unwrap()).unwrap();
        assert!(sym.matrix().hermitian_defect() == 0.0);
        let expected = h.matrix().get(0, 1) + C64::new(0.5e-12, 0.0);
        assert!((sym.matrix().get(0, 1) - expected).norm() < 1e-15);

        let mut q = h.inner().clone();
        q[(1, 2)] += C64::new(1e-6, 0.0);
        assert!(matches!(hermitize(ComplexMatrix::new(q).unwrap()), Err(QdpError::InvalidMatrix(_))));
    }

    #[test]
    fn trace_distance_basics() {
        let zero = HermitianMatrix::diagonal(&[1.0, 0.0]);
        let one = HermitianMatrix::diagonal(&[0.0, 1.0]);
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-15);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            trace_distance(&zero, &HermitianMatrix::identity(4)),
            Err(QdpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn trace_distance_bit_flip_mixture() {
        // Oracle: eigenvalues of diag(p, -p) are ±p, so D = p.
        let p = 0.3;
        let a = HermitianMatrix::diagonal(&[1.0, 0.0]);
        let b = HermitianMatrix::diagonal(&[1.0 - p, p]);
        let diff_vals = a.sub(&b).eigenvalues();
        assert!((diff_vals[0] + p).abs() < 1e-15 && (diff_vals[1] - p).abs() < 1e-15);
        assert!((trace_distance(&a, &b).unwrap() - p).abs() < 1e-14);
    }
}
