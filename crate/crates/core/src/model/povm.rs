use nalgebra::DMatrix;

use super::state::qubits_for_dim;
use crate::error::{QdpError, Result};
use crate::linalg::{is_psd, ComplexMatrix, HermitianMatrix, ZERO};
use crate::tol;

/// Measurement `{M_k}` keyed by outcome labels; elements PSD and summing to `I`.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    n_qubits: usize,
    labels: Vec<String>,
    elements: Vec<HermitianMatrix>,
}

impl Povm {
    pub fn new(labels: Vec<String>, elements: Vec<HermitianMatrix>) -> Result<Self> {
        let first = elements.first().ok_or_else(|| QdpError::InvalidPovm("no measurement elements".into()))?;
        let dim = first.dim();
        let n_qubits = qubits_for_dim(dim).map_err(|_| QdpError::InvalidPovm(format!("dimension {dim} is not 2^n")))?;
        if labels.len() != elements.len() {
            return Err(QdpError::InvalidPovm(format!("{} labels for {} elements", labels.len(), elements.len())));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QdpError::InvalidPovm(format!("duplicate outcome label `{l}`")));
            }
        }
        let mut sum = DMatrix::from_element(dim, dim, ZERO);
        for (l, m) in labels.iter().zip(&elements) {
            if m.dim() != dim {
                return Err(QdpError::DimensionMismatch { expected: dim, actual: m.dim() });
            }
            if !is_psd(m, tol::PSD_SLACK) {
                return Err(QdpError::InvalidPovm(format!("element `{l}` is not positive semi-definite")));
            }
            sum += m.inner();
        }
        let defect = ComplexMatrix::new(sum)?.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > tol::COMPLETENESS {
            return Err(QdpError::InvalidPovm(format!("elements sum to identity only within {defect:e}")));
        }
        Ok(Self { n_qubits, labels, elements })
    }

    /// Labels `"0", "1", ...` in element order.
    pub fn with_default_labels(elements: Vec<HermitianMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|i| i.to_string()).collect();
        Self::new(labels, elements)
    }

    /// The single-outcome measurement `{I}`.
    pub fn trivial(n_qubits: usize) -> Self {
        Self { n_qubits, labels: vec!["0".into()], elements: vec![HermitianMatrix::identity(1 << n_qubits)] }
    }

    /// Projectors onto the bitstrings of `qubits` (identity on the rest).
    /// Labels are the bitstrings, most significant listed qubit first.
    pub fn computational(n_qubits: usize, qubits: &[usize]) -> Result<Self> {
        super::local::check_targets(qubits, n_qubits)?;
        let dim = 1usize << n_qubits;
        let q = qubits.len();
        let mut labels = Vec::with_capacity(1 << q);
        let mut elements = Vec::with_capacity(1 << q);
        for outcome in 0..1usize << q {
            let diag: Vec<f64> = (0..dim)
                .map(|idx| {
                    let hit = qubits.iter().enumerate().all(|(i, &t)| {
                        let want = (outcome >> (q - 1 - i)) & 1;
                        let have = (idx >> (n_qubits - 1 - t)) & 1;
                        want == have
                    });
                    if hit {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            labels.push(format!("{outcome:0q$b}"));
            elements.push(HermitianMatrix::diagonal(&diag));
        }
        Ok(Self { n_qubits, labels, elements })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn elements(&self) -> &[HermitianMatrix] {
        &self.elements
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// `sum_{k in labels} M_k`.
    pub fn subset_sum(&self, labels: &[String]) -> Result<HermitianMatrix> {
        let mut acc = HermitianMatrix::zeros(self.dim());
        for l in labels {
            let i = self.index_of(l).ok_or_else(|| QdpError::InvalidInput(format!("unknown outcome label `{l}`")))?;
            acc = acc.add(&self.elements[i]);
        }
        Ok(acc)
    }
}
