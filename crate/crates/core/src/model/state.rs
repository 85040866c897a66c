use nalgebra::DVector;

use crate::error::{QdpError, Result};
use crate::linalg::{self, hermitize, ComplexMatrix, HermitianMatrix, C64, ONE, ZERO};
use crate::tol;

pub(crate) fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(QdpError::InvalidState(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

/// Unit state vector `|psi>` on `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amplitudes: DVector<C64>,
}

impl PureState {
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let n_qubits = qubits_for_dim(amplitudes.len())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol::NORM {
            return Err(QdpError::InvalidState(format!("amplitude norm {norm} is not 1")));
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Normalizes `amplitudes` first. Fails on the zero vector.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(QdpError::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(amplitudes / C64::new(norm, 0.0))
    }

    /// Computational basis state `|index>`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(QdpError::InvalidState(format!("basis index {index} out of range")));
        }
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Self::new(v)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: HermitianMatrix::projector(&self.amplitudes),
        }
    }
}

/// Mixed state: Hermitian, PSD within [`tol::PSD_SLACK`], unit trace within [`tol::TRACE`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: HermitianMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: HermitianMatrix) -> Result<Self> {
        let n_qubits = qubits_for_dim(matrix.dim())?;
        let tr = matrix.trace();
        if (tr - 1.0).abs() > tol::TRACE {
            return Err(QdpError::InvalidState(format!("trace {tr} is not 1")));
        }
        let lmin = linalg::min_eigenvalue(&matrix);
        if lmin < -tol::PSD_SLACK {
            return Err(QdpError::InvalidState(format!("negative eigenvalue {lmin:e}")));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Validates after symmetrizing (tolerates accumulated rounding).
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        Self::new(hermitize(m)?)
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Ok(PureState::basis(n_qubits, index)?.to_density())
    }

    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self { n_qubits, matrix: HermitianMatrix::identity(dim).scale(1.0 / dim as f64) }
    }

    /// `t * a + (1 - t) * b` for `t` in `[0, 1]`.
    pub fn mix(t: f64, a: &DensityMatrix, b: &DensityMatrix) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return Err(QdpError::InvalidInput(format!("mixing weight {t} outside [0, 1]")));
        }
        if a.dim() != b.dim() {
            return Err(QdpError::DimensionMismatch { expected: a.dim(), actual: b.dim() });
        }
        Ok(Self { n_qubits: a.n_qubits, matrix: a.matrix.scale(t).add(&b.matrix.scale(1.0 - t)) })
    }

    /// Tensor product `self ⊗ other`.
    pub fn kron(&self, other: &DensityMatrix) -> Self {
        Self { n_qubits: self.n_qubits + other.n_qubits, matrix: self.matrix.kron(&other.matrix) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    /// `tr(rho^2)`.
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix)
    }
}

impl AsRef<HermitianMatrix> for DensityMatrix {
    fn as_ref(&self) -> &HermitianMatrix {
        &self.matrix
    }
}

/// `D(rho, sigma) = ½ tr|rho - sigma|`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    linalg::trace_distance(rho, sigma)
}
