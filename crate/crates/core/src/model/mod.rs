//! Quantum states, gates, circuits, noise channels and POVM measurements.

mod channel;
mod circuit;
mod gates;
mod local;
mod povm;
mod state;

pub use channel::{
    compose_channels, default_kraus_cap, noise_channel, noise_kraus, Channel, KrausChannel, LayeredChannel, LocalOp,
    NoiseKind,
};
pub use circuit::{circuit_to_channel, circuit_to_layered, Circuit, NoiseInjection, NoisePlacement};
pub use gates::{gate_matrix, lift_gate, GateKind, GateSpec};
pub use local::lift_operator;
pub use povm::Povm;
pub use state::{trace_distance, DensityMatrix, PureState};

use crate::error::{QdpError, Result};
use crate::linalg::HermitianMatrix;

/// `E(rho) = sum_k E_k rho E_k^dag`.
pub fn apply_channel(e: &Channel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    e.apply(rho)
}

/// Heisenberg-picture map `E^dag(M) = sum_k E_k^dag M E_k`.
pub fn dual_apply(e: &Channel, m: &HermitianMatrix) -> Result<HermitianMatrix> {
    e.dual_apply(m)
}

/// A quantum algorithm `(E, {M_k})`: noisy circuit followed by a measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumAlgorithm {
    channel: Channel,
    povm: Povm,
}

impl QuantumAlgorithm {
    pub fn new(channel: impl Into<Channel>, povm: Povm) -> Result<Self> {
        let channel = channel.into();
        if channel.n_qubits() != povm.n_qubits() {
            return Err(QdpError::DimensionMismatch { expected: channel.dim(), actual: povm.dim() });
        }
        Ok(Self { channel, povm })
    }

    pub fn channel(&self) -> &Channel {
        &self.channel
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn n_qubits(&self) -> usize {
        self.channel.n_qubits()
    }

    /// `p_k = tr(M_k E(rho))` for every outcome.
    pub fn measure_distribution(&self, rho: &DensityMatrix) -> Result<OutcomeDistribution> {
        measure_distribution(self, rho)
    }
}

/// Outcome probabilities, in the POVM's label order.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution {
    pub labels: Vec<String>,
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn get(&self, label: &str) -> Option<f64> {
        self.labels.iter().position(|l| l == label).map(|i| self.probs[i])
    }

    /// Total probability of a set of outcome labels; unknown labels are an error.
    pub fn mass(&self, labels: &[String]) -> Result<f64> {
        labels
            .iter()
            .map(|l| self.get(l).ok_or_else(|| QdpError::InvalidInput(format!("unknown outcome label `{l}`"))))
            .sum()
    }
}

/// Measurement statistics of `A` on input `rho`. Tiny negative values from
/// rounding are clamped to zero.
pub fn measure_distribution(a: &QuantumAlgorithm, rho: &DensityMatrix) -> Result<OutcomeDistribution> {
    if rho.dim() != a.channel.dim() {
        return Err(QdpError::DimensionMismatch { expected: a.channel.dim(), actual: rho.dim() });
    }
    let out = a.channel.apply(rho)?;
    let probs: Vec<f64> = a.povm.elements().iter().map(|m| m.trace_product(out.matrix()).max(0.0)).collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > crate::tol::COMPLETENESS {
        return Err(QdpError::InvalidState(format!("outcome probabilities sum to {total}")));
    }
    Ok(OutcomeDistribution { labels: a.povm.labels().to_vec(), probs })
}
