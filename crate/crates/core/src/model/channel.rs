use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::gates::{pauli_x, pauli_y, pauli_z};
use super::local::{check_targets, dual_sandwich, forward_sandwich, lift_operator};
use super::state::{qubits_for_dim, DensityMatrix};
use crate::error::{QdpError, Result};
use crate::linalg::{hermitize, real, ComplexMatrix, HermitianMatrix, C64, ZERO};
use crate::tol;

fn completeness_defect(kraus: &[ComplexMatrix]) -> f64 {
    let dim = kraus[0].dim();
    let mut sum = DMatrix::from_element(dim, dim, ZERO);
    for k in kraus {
        sum += k.inner().adjoint() * k.inner();
    }
    ComplexMatrix::new(sum).expect("square").max_abs_diff(&ComplexMatrix::identity(dim))
}

/// Completely positive trace-preserving map in Kraus form on the whole register.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    n_qubits: usize,
    kraus: Vec<ComplexMatrix>,
}

impl KrausChannel {
    /// Validates shapes and `sum_k E_k^dag E_k = I` within [`tol::COMPLETENESS`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus.first().ok_or_else(|| QdpError::InvalidChannel("empty Kraus list".into()))?;
        let dim = first.dim();
        let n_qubits = qubits_for_dim(dim).map_err(|_| QdpError::InvalidChannel(format!("dimension {dim} is not 2^n")))?;
        if let Some(k) = kraus.iter().find(|k| k.dim() != dim) {
            return Err(QdpError::DimensionMismatch { expected: dim, actual: k.dim() });
        }
        let defect = completeness_defect(&kraus);
        if defect > tol::COMPLETENESS {
            return Err(QdpError::InvalidChannel(format!("Kraus completeness violated by {defect:e}")));
        }
        Ok(Self { n_qubits, kraus })
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { n_qubits, kraus: vec![ComplexMatrix::identity(1 << n_qubits)] }
    }

    /// Singleton channel `{U}`.
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.apply_matrix(rho.matrix().matrix())?)
    }

    /// `sum_k E_k X E_k^dag` for an arbitrary square `X`.
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(x.dim())?;
        let mut acc = DMatrix::from_element(x.dim(), x.dim(), ZERO);
        for k in &self.kraus {
            acc += k.inner() * x.inner() * k.inner().adjoint();
        }
        ComplexMatrix::new(acc)
    }

    /// `sum_k E_k^dag M E_k`.
    pub fn dual_apply(&self, m: &HermitianMatrix) -> Result<HermitianMatrix> {
        self.check_dim(m.dim())?;
        let mut acc = DMatrix::from_element(m.dim(), m.dim(), ZERO);
        for k in &self.kraus {
            acc += k.inner().adjoint() * m.inner() * k.inner();
        }
        hermitize(ComplexMatrix::new(acc)?)
    }

    /// Kraus list `{E1_i ⊗ E2_j}` of the parallel channel.
    pub fn tensor(&self, other: &KrausChannel) -> KrausChannel {
        let kraus = self.kraus.iter().flat_map(|a| other.kraus.iter().map(move |b| a.kron(b))).collect();
        KrausChannel { n_qubits: self.n_qubits + other.n_qubits, kraus }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(QdpError::DimensionMismatch { expected: self.dim(), actual: dim });
        }
        Ok(())
    }
}

/// Default Kraus-list cap for an `n`-qubit channel: `4^n`.
pub fn default_kraus_cap(n_qubits: usize) -> usize {
    1usize.checked_shl(2 * n_qubits as u32).unwrap_or(usize::MAX)
}

/// `second ∘ first` with the unreduced product list `{F_j E_i}`; errors
/// rather than truncating when the list would exceed `cap`.
pub fn compose_channels(second: &KrausChannel, first: &KrausChannel, cap: usize) -> Result<KrausChannel> {
    if second.dim() != first.dim() {
        return Err(QdpError::DimensionMismatch { expected: first.dim(), actual: second.dim() });
    }
    let count = second.kraus.len().saturating_mul(first.kraus.len());
    if count > cap {
        return Err(QdpError::ResourceLimit(format!("composition needs {count} Kraus operators (cap {cap})")));
    }
    let kraus = first.kraus.iter().flat_map(|e| second.kraus.iter().map(move |f| f.mul(e))).collect();
    Ok(KrausChannel { n_qubits: first.n_qubits, kraus })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    BitFlip,
    PhaseFlip,
    BitPhaseFlip,
    Depolarizing,
}

/// Single-qubit Kraus operators of a noise family.
pub fn noise_kraus(kind: NoiseKind, p: f64) -> Result<Vec<ComplexMatrix>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QdpError::InvalidProbability(p));
    }
    let keep = ComplexMatrix::identity(2).scale(real((1.0 - p).sqrt()));
    Ok(match kind {
        NoiseKind::BitFlip => vec![keep, pauli_x().scale(real(p.sqrt()))],
        NoiseKind::PhaseFlip => vec![keep, pauli_z().scale(real(p.sqrt()))],
        NoiseKind::BitPhaseFlip => vec![keep, pauli_y().scale(real(p.sqrt()))],
        NoiseKind::Depolarizing => {
            let w = real((p / 3.0).sqrt());
            vec![keep, pauli_x().scale(w), pauli_y().scale(w), pauli_z().scale(w)]
        }
    })
}

/// Noise channel on qubit `target`, lifted to an `n`-qubit register.
pub fn noise_channel(kind: NoiseKind, p: f64, target: usize, n: usize) -> Result<KrausChannel> {
    let local = noise_kraus(kind, p)?;
    let kraus = local.iter().map(|k| lift_operator(k, &[target], n)).collect::<Result<Vec<_>>>()?;
    KrausChannel::new(kraus)
}

/// Kraus operators acting on a few qubits of a larger register.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOp {
    targets: Vec<usize>,
    kraus: Vec<ComplexMatrix>,
}

impl LocalOp {
    pub fn new(targets: Vec<usize>, kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let local = KrausChannel::new(kraus)?;
        if local.n_qubits != targets.len() {
            return Err(QdpError::DimensionMismatch { expected: 1 << targets.len(), actual: local.dim() });
        }
        check_targets(&targets, 64)?;
        Ok(Self { targets, kraus: local.kraus })
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    fn shifted(&self, offset: usize) -> LocalOp {
        LocalOp { targets: self.targets.iter().map(|t| t + offset).collect(), kraus: self.kraus.clone() }
    }
}

/// A channel stored as a sequence of local Kraus operations, first to last.
///
/// This is how circuits are kept: the dual map is applied gate by gate
/// without ever materializing full-register Kraus lists.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredChannel {
    n_qubits: usize,
    ops: Vec<LocalOp>,
}

impl LayeredChannel {
    pub fn new(n_qubits: usize, ops: Vec<LocalOp>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(QdpError::InvalidInput("register must have at least one qubit".into()));
        }
        for op in &ops {
            check_targets(&op.targets, n_qubits)?;
        }
        Ok(Self { n_qubits, ops })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn ops(&self) -> &[LocalOp] {
        &self.ops
    }

    pub fn push(&mut self, op: LocalOp) -> Result<()> {
        check_targets(&op.targets, self.n_qubits)?;
        self.ops.push(op);
        Ok(())
    }

    fn apply_raw(&self, x: &DMatrix<C64>) -> DMatrix<C64> {
        self.ops.iter().fold(x.clone(), |acc, op| forward_sandwich(&op.kraus, &op.targets, self.n_qubits, &acc))
    }

    fn dual_raw(&self, m: &DMatrix<C64>) -> DMatrix<C64> {
        self.ops.iter().rev().fold(m.clone(), |acc, op| dual_sandwich(&op.kraus, &op.targets, self.n_qubits, &acc))
    }

    /// Number of full-register Kraus operators of the flattened channel.
    pub fn flat_kraus_count(&self) -> usize {
        self.ops.iter().fold(1usize, |acc, op| acc.saturating_mul(op.kraus.len()))
    }

    /// Flattens into a single full-register Kraus list.
    pub fn to_kraus(&self, cap: usize) -> Result<KrausChannel> {
        let count = self.flat_kraus_count();
        if count > cap {
            return Err(QdpError::ResourceLimit(format!("flattening needs {count} Kraus operators (cap {cap})")));
        }
        let mut acc = KrausChannel::identity(self.n_qubits);
        for op in &self.ops {
            let lifted = op.kraus.iter().map(|k| lift_operator(k, &op.targets, self.n_qubits)).collect::<Result<Vec<_>>>()?;
            acc = compose_channels(&KrausChannel { n_qubits: self.n_qubits, kraus: lifted }, &acc, cap)?;
        }
        Ok(acc)
    }

    pub fn tensor(&self, other: &LayeredChannel) -> LayeredChannel {
        let mut ops = self.ops.clone();
        ops.extend(other.ops.iter().map(|op| op.shifted(self.n_qubits)));
        LayeredChannel { n_qubits: self.n_qubits + other.n_qubits, ops }
    }
}

/// Either representation of a channel; both expose the same actions.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    Kraus(KrausChannel),
    Layered(LayeredChannel),
}

impl Channel {
    pub fn n_qubits(&self) -> usize {
        match self {
            Channel::Kraus(k) => k.n_qubits(),
            Channel::Layered(l) => l.n_qubits(),
        }
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_matrix(self.apply_matrix(rho.matrix().matrix())?)
    }

    /// Forward action on an arbitrary square matrix (linear extension).
    pub fn apply_matrix(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self {
            Channel::Kraus(k) => k.apply_matrix(x),
            Channel::Layered(l) => {
                self.check_dim(x.dim())?;
                ComplexMatrix::new(l.apply_raw(x.inner()))
            }
        }
    }

    pub fn dual_apply(&self, m: &HermitianMatrix) -> Result<HermitianMatrix> {
        match self {
            Channel::Kraus(k) => k.dual_apply(m),
            Channel::Layered(l) => {
                self.check_dim(m.dim())?;
                hermitize(ComplexMatrix::new(l.dual_raw(m.inner()))?)
            }
        }
    }

    pub fn to_kraus(&self, cap: usize) -> Result<KrausChannel> {
        match self {
            Channel::Kraus(k) => {
                if k.kraus.len() > cap {
                    return Err(QdpError::ResourceLimit(format!("{} Kraus operators exceed cap {cap}", k.kraus.len())));
                }
                Ok(k.clone())
            }
            Channel::Layered(l) => l.to_kraus(cap),
        }
    }

    /// As a layered channel; a full-register Kraus channel becomes one op on all qubits.
    pub fn to_layered(&self) -> LayeredChannel {
        match self {
            Channel::Layered(l) => l.clone(),
            Channel::Kraus(k) => LayeredChannel {
                n_qubits: k.n_qubits,
                ops: vec![LocalOp { targets: (0..k.n_qubits).collect(), kraus: k.kraus.clone() }],
            },
        }
    }

    /// Parallel composition `self ⊗ other`.
    pub fn tensor(&self, other: &Channel) -> Channel {
        match (self, other) {
            (Channel::Kraus(a), Channel::Kraus(b)) => Channel::Kraus(a.tensor(b)),
            _ => Channel::Layered(self.to_layered().tensor(&other.to_layered())),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if dim != self.dim() {
            return Err(QdpError::DimensionMismatch { expected: self.dim(), actual: dim });
        }
        Ok(())
    }
}

impl From<KrausChannel> for Channel {
    fn from(k: KrausChannel) -> Self {
        Channel::Kraus(k)
    }
}

impl From<LayeredChannel> for Channel {
    fn from(l: LayeredChannel) -> Self {
        Channel::Layered(l)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis_matrix(dim: usize, i: usize, j: usize) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(dim).into_inner();
        m[(i, j)] = C64::new(1.0, 0.0);
        ComplexMatrix::new(m).unwrap()
    }

    /// Channels are equal iff they agree on every matrix unit |i><j|.
    fn same_action(a: &Channel, b: &Channel) -> f64 {
        let d = a.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                let e = basis_matrix(d, i, j);
                worst = worst.max(a.apply_matrix(&e).unwrap().max_abs_diff(&b.apply_matrix(&e).unwrap()));
            }
        }
        worst
    }

    #[test]
    fn rejects_incomplete_kraus() {
        assert!(matches!(KrausChannel::new(vec![]), Err(QdpError::InvalidChannel(_))));
        let half = ComplexMatrix::identity(2).scale(real(0.5));
        assert!(matches!(KrausChannel::new(vec![half]), Err(QdpError::InvalidChannel(_))));
    }

    #[test]
    fn identity_channel_leaves_state() {
        let rho = DensityMatrix::basis(2, 3).unwrap();
        let out = KrausChannel::identity(2).apply(&rho).unwrap();
        assert!(out.matrix().matrix().max_abs_diff(rho.matrix().matrix()) < 1e-15);
    }

    #[test]
    fn bit_flip_on_zero() {
        // (1-p)|0><0| + p X|0><0|X = diag(1-p, p).
        for p in [0.0, 0.3, 1.0] {
            let ch = noise_channel(NoiseKind::BitFlip, p, 0, 1).unwrap();
            let out = ch.apply(&DensityMatrix::basis(1, 0).unwrap()).unwrap();
            let expected = HermitianMatrix::diagonal(&[1.0 - p, p]);
            assert!(out.matrix().matrix().max_abs_diff(expected.matrix()) < 1e-15, "p={p}");
        }
        assert!(same_action(&noise_channel(NoiseKind::BitFlip, 0.0, 0, 2).unwrap().into(), &KrausChannel::identity(2).into()) < 1e-15);
        assert!(matches!(noise_channel(NoiseKind::BitFlip, 1.2, 0, 1), Err(QdpError::InvalidProbability(_))));
        assert!(matches!(noise_channel(NoiseKind::Depolarizing, -0.1, 0, 1), Err(QdpError::InvalidProbability(_))));
    }

    #[test]
    fn depolarizing_fixes_maximally_mixed() {
        let ch = noise_channel(NoiseKind::Depolarizing, 0.37, 0, 1).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1);
        let out = ch.apply(&mixed).unwrap();
        assert!(out.matrix().matrix().max_abs_diff(mixed.matrix().matrix()) < 1e-15);
    }

    #[test]
    fn dual_of_identity_is_identity() {
        for kind in [NoiseKind::BitFlip, NoiseKind::PhaseFlip, NoiseKind::BitPhaseFlip, NoiseKind::Depolarizing] {
            let ch = noise_channel(kind, 0.2, 1, 2).unwrap();
            let out = ch.dual_apply(&HermitianMatrix::identity(4)).unwrap();
            assert!(out.matrix().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-14);
        }
    }

    #[test]
    fn compose_bit_flips_convolves() {
        // Oracle: flipping twice with prob p each flips with prob 2p(1-p).
        let p = 0.15;
        let once = noise_channel(NoiseKind::BitFlip, p, 0, 1).unwrap();
        let twice = compose_channels(&once, &once, 16).unwrap();
        let q = 2.0 * p * (1.0 - p);
        let expected = noise_channel(NoiseKind::BitFlip, q, 0, 1).unwrap();
        assert!(same_action(&twice.into(), &expected.into()) < 1e-14);
        assert!(matches!(compose_channels(&once, &once, 3), Err(QdpError::ResourceLimit(_))));
    }

    #[test]
    fn compose_with_identity() {
        let e = noise_channel(NoiseKind::Depolarizing, 0.1, 0, 2).unwrap();
        let c = compose_channels(&KrausChannel::identity(2), &e, 64).unwrap();
        assert!(same_action(&c.into(), &e.clone().into()) < 1e-15);
        assert!(matches!(
            compose_channels(&KrausChannel::identity(1), &e, 64),
            Err(QdpError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn layered_matches_flattened() {
        let h = super::super::gates::gate_matrix(&super::super::gates::GateSpec::fixed(super::super::gates::GateKind::H, &[0])).unwrap();
        let ops = vec![
            LocalOp::new(vec![1], vec![h.clone()]).unwrap(),
            LocalOp::new(vec![0], noise_kraus(NoiseKind::Depolarizing, 0.2).unwrap()).unwrap(),
            LocalOp::new(vec![1], noise_kraus(NoiseKind::BitFlip, 0.1).unwrap()).unwrap(),
        ];
        let layered = LayeredChannel::new(2, ops).unwrap();
        let flat = layered.to_kraus(64).unwrap();
        assert_eq!(flat.kraus().len(), 8);
        let a = Channel::Layered(layered.clone());
        let b = Channel::Kraus(flat);
        assert!(same_action(&a, &b) < 1e-14);
        let m = HermitianMatrix::diagonal(&[0.9, 0.1, 0.3, 0.2]);
        assert!(a.dual_apply(&m).unwrap().matrix().max_abs_diff(b.dual_apply(&m).unwrap().matrix()) < 1e-14);
        assert!(matches!(layered.to_kraus(4), Err(QdpError::ResourceLimit(_))));
    }
}
