//! Operators acting on a subset of qubits.
//!
//! Qubit ordering is big-endian: qubit 0 is the leftmost tensor factor and
//! carries index weight `2^(n-1)`. For a local operator on `targets`, the
//! first target is the most significant bit of the operator's own index.

use nalgebra::DMatrix;

use crate::error::{QdpError, Result};
use crate::linalg::{ComplexMatrix, C64, ZERO};

pub(crate) fn check_targets(targets: &[usize], n: usize) -> Result<()> {
    if targets.is_empty() {
        return Err(QdpError::InvalidTarget("no target qubits".into()));
    }
    for (i, &t) in targets.iter().enumerate() {
        if t >= n {
            return Err(QdpError::InvalidTarget(format!("qubit {t} out of range for {n} qubits")));
        }
        if targets[..i].contains(&t) {
            return Err(QdpError::InvalidTarget(format!("qubit {t} listed twice")));
        }
    }
    Ok(())
}

/// Index layout of a local operator inside the full register.
struct Layout {
    /// Full-register offset for each local index.
    scatter: Vec<usize>,
    /// Every full-register index with all target bits cleared.
    bases: Vec<usize>,
}

impl Layout {
    fn new(targets: &[usize], n: usize) -> Self {
        let k = targets.len();
        let scatter: Vec<usize> = (0..1usize << k)
            .map(|s| {
                targets
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| (s >> (k - 1 - i)) & 1 == 1)
                    .map(|(_, &t)| 1usize << (n - 1 - t))
                    .sum()
            })
            .collect();
        let target_mask: usize = targets.iter().map(|&t| 1usize << (n - 1 - t)).sum();
        let bases = (0..1usize << n).filter(|i| i & target_mask == 0).collect();
        Self { scatter, bases }
    }
}

/// Dense `2^n x 2^n` matrix of `op` acting on `targets`, identity elsewhere.
pub fn lift_operator(op: &ComplexMatrix, targets: &[usize], n: usize) -> Result<ComplexMatrix> {
    check_targets(targets, n)?;
    if op.dim() != 1 << targets.len() {
        return Err(QdpError::DimensionMismatch { expected: 1 << targets.len(), actual: op.dim() });
    }
    let dim = 1usize << n;
    let layout = Layout::new(targets, n);
    let mut full = DMatrix::from_element(dim, dim, ZERO);
    for &b in &layout.bases {
        for (r, &sr) in layout.scatter.iter().enumerate() {
            for (c, &sc) in layout.scatter.iter().enumerate() {
                full[(b | sr, b | sc)] = op.get(r, c);
            }
        }
    }
    ComplexMatrix::new(full)
}

/// `lift(op) * m` without materializing the lifted operator.
pub(crate) fn left_mul(op: &DMatrix<C64>, targets: &[usize], n: usize, m: &DMatrix<C64>) -> DMatrix<C64> {
    let layout = Layout::new(targets, n);
    let d = op.nrows();
    let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    let mut gathered = vec![ZERO; d];
    for c in 0..m.ncols() {
        for &b in &layout.bases {
            for (s, &off) in layout.scatter.iter().enumerate() {
                gathered[s] = m[(b | off, c)];
            }
            for (r, &off) in layout.scatter.iter().enumerate() {
                let mut acc = ZERO;
                for (s, g) in gathered.iter().enumerate() {
                    acc += op[(r, s)] * g;
                }
                out[(b | off, c)] = acc;
            }
        }
    }
    out
}

/// `m * lift(op)` without materializing the lifted operator.
pub(crate) fn right_mul(m: &DMatrix<C64>, op: &DMatrix<C64>, targets: &[usize], n: usize) -> DMatrix<C64> {
    let layout = Layout::new(targets, n);
    let mut out = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    for &b in &layout.bases {
        for (c, &offc) in layout.scatter.iter().enumerate() {
            let col = b | offc;
            for (s, &offs) in layout.scatter.iter().enumerate() {
                let w = op[(s, c)];
                if w == ZERO {
                    continue;
                }
                let src = b | offs;
                for r in 0..m.nrows() {
                    out[(r, col)] += m[(r, src)] * w;
                }
            }
        }
    }
    out
}

/// `sum_k lift(K_k) m lift(K_k)^dag`.
pub(crate) fn forward_sandwich(kraus: &[ComplexMatrix], targets: &[usize], n: usize, m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut acc = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    for k in kraus {
        let right = right_mul(m, &k.inner().adjoint(), targets, n);
        acc += left_mul(k.inner(), targets, n, &right);
    }
    acc
}

/// `sum_k lift(K_k)^dag m lift(K_k)`.
pub(crate) fn dual_sandwich(kraus: &[ComplexMatrix], targets: &[usize], n: usize, m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut acc = DMatrix::from_element(m.nrows(), m.ncols(), ZERO);
    for k in kraus {
        let right = right_mul(m, k.inner(), targets, n);
        acc += left_mul(&k.inner().adjoint(), targets, n, &right);
    }
    acc
}
