use serde::{Deserialize, Serialize};

use super::channel::{compose_channels, noise_kraus, KrausChannel, LayeredChannel, LocalOp, NoiseKind};
use super::gates::{gate_matrix, GateSpec};
use crate::error::{QdpError, Result};

/// Gate sequence `U = U_d ... U_1`, stored first gate first.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateSpec>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<GateSpec>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QdpError::InvalidInput("circuit needs at least one qubit".into()));
        }
        for g in &gates {
            g.validate(n_qubits)?;
        }
        Ok(Self { n_qubits, gates })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateSpec] {
        &self.gates
    }
}

/// Where noise channels are inserted when a circuit is turned into a channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoisePlacement {
    /// After every gate, on each qubit that gate touched.
    AfterEachGateOnTouchedQubits,
    /// One noise channel per qubit after the last gate.
    #[default]
    OncePerQubitAtEnd,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseInjection {
    pub kind: NoiseKind,
    pub p: f64,
    #[serde(default)]
    pub placement: NoisePlacement,
}

impl NoiseInjection {
    pub fn none() -> Self {
        Self { kind: NoiseKind::Depolarizing, p: 0.0, placement: NoisePlacement::None }
    }

    pub fn at_end(kind: NoiseKind, p: f64) -> Self {
        Self { kind, p, placement: NoisePlacement::OncePerQubitAtEnd }
    }

    pub fn after_each_gate(kind: NoiseKind, p: f64) -> Self {
        Self { kind, p, placement: NoisePlacement::AfterEachGateOnTouchedQubits }
    }
}

impl Default for NoiseInjection {
    fn default() -> Self {
        Self::none()
    }
}

/// Noisy circuit as a sequence of local operations (gates as singleton
/// channels, noise per `noise.placement`).
pub fn circuit_to_layered(c: &Circuit, noise: &NoiseInjection) -> Result<LayeredChannel> {
    let noise_ops = if noise.placement == NoisePlacement::None { None } else { Some(noise_kraus(noise.kind, noise.p)?) };
    let mut ops = Vec::new();
    for g in &c.gates {
        ops.push(LocalOp::new(g.targets.clone(), vec![gate_matrix(g)?])?);
        if let (Some(k), NoisePlacement::AfterEachGateOnTouchedQubits) = (&noise_ops, noise.placement) {
            for &t in &g.targets {
                ops.push(LocalOp::new(vec![t], k.clone())?);
            }
        }
    }
    if let (Some(k), NoisePlacement::OncePerQubitAtEnd) = (&noise_ops, noise.placement) {
        for q in 0..c.n_qubits {
            ops.push(LocalOp::new(vec![q], k.clone())?);
        }
    }
    LayeredChannel::new(c.n_qubits, ops)
}

/// Noisy circuit flattened into a single Kraus list.
///
/// Gates contribute singleton channels, so the noiseless case yields one
/// Kraus operator (the circuit unitary). Fails with `ResourceLimit` when the
/// unreduced list would exceed `cap`.
pub fn circuit_to_channel(c: &Circuit, noise: &NoiseInjection, cap: usize) -> Result<KrausChannel> {
    let layered = circuit_to_layered(c, noise)?;
    let mut acc = KrausChannel::identity(c.n_qubits);
    for op in layered.ops() {
        let lifted = op
            .kraus()
            .iter()
            .map(|k| super::local::lift_operator(k, op.targets(), c.n_qubits))
            .collect::<Result<Vec<_>>>()?;
        acc = compose_channels(&KrausChannel::new(lifted)?, &acc, cap)?;
    }
    Ok(acc)
}
