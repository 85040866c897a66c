//! Exact `(ε, δ)`- and `ε`-differential-privacy verification.
//!
//! For an algorithm `(E, {M_k})` every outcome subset `S` gets the dualized
//! matrix `M_S = sum_{k in S} E^dag(M_k)`. The algorithm is `(ε, δ)`-private
//! within `η` iff `δ >= max_S δ_S` with
//! `δ_S = η λ_max(M_S) - (e^ε + η - 1) λ_min(M_S)`, and `ε`-private iff
//! `ε >= ln[(κ* - 1) η + 1]` where `κ*` is the largest condition number
//! `λ_max / λ_min` over all subsets. When the property fails, the extremal
//! eigenvectors `ψ`, `φ` of the worst subset give the counterexample
//! `γ = η |ψ><ψ| + (1 - η) |φ><φ|` against `|φ><φ|`.
//!
//! Ties between subsets are broken towards the lexicographically first
//! subset of sorted outcome labels, so verdicts and witnesses are
//! deterministic regardless of how the subset map is scheduled.

use rayon::prelude::*;

use crate::error::{QdpError, Result};
use crate::linalg::{extremal_eigenpairs, HermitianMatrix};
use crate::model::{Channel, DensityMatrix, Povm, PureState, QuantumAlgorithm};
use crate::tol;

/// Largest outcome set enumerated by default (2^16 - 1 subsets).
pub const DEFAULT_SUBSET_CAP: usize = 16;
/// Slack applied in favour of privacy when comparing `δ` with `δ*` and `ε` with `ε*`.
pub const DECISION_SLACK: f64 = 1e-9;
/// Serialized reports keep this many subsets (largest `δ_S` first).
pub const REPORT_TOP_K: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DpParams {
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
}

impl DpParams {
    pub fn new(epsilon: f64, delta: f64, eta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(QdpError::InvalidInput(format!("epsilon must be a finite value >= 0, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(QdpError::InvalidInput(format!("delta must lie in [0, 1], got {delta}")));
        }
        check_eta(eta)?;
        Ok(Self { epsilon, delta, eta })
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(QdpError::InvalidInput(format!("eta must lie in (0, 1], got {eta}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Maximum number of outcomes whose subsets are enumerated.
    pub subset_cap: usize,
    /// Residual bound handed to the eigen solver.
    pub eigen_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { subset_cap: DEFAULT_SUBSET_CAP, eigen_tol: tol::EIGEN_RESIDUAL }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetReport {
    /// Outcome labels, sorted.
    pub subset: Vec<String>,
    /// `M_S`; dropped for large enumerations to bound memory.
    pub m_matrix: Option<HermitianMatrix>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub delta_s: f64,
    /// `λ_max / λ_min`, or `+inf` when `λ_min` is below the zero threshold.
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub gamma: DensityMatrix,
    pub phi: DensityMatrix,
    pub witness_subset: Vec<String>,
    /// `δ_{S*} - δ`: how far the pair overshoots the allowed bound.
    pub violation_amount: f64,
    pub eta_used: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub private: bool,
    pub delta_star: f64,
    /// Largest condition number over all subsets.
    pub kappa_star: f64,
    pub witness: Option<Counterexample>,
    /// Every nonempty subset, in lexicographic order of sorted labels.
    pub per_subset: Vec<SubsetReport>,
}

impl Verdict {
    /// Up to `k` reports with the largest `δ_S` (ties keep lexicographic order).
    pub fn top_subsets(&self, k: usize) -> Vec<&SubsetReport> {
        let mut refs: Vec<&SubsetReport> = self.per_subset.iter().collect();
        refs.sort_by(|a, b| b.delta_s.total_cmp(&a.delta_s));
        refs.truncate(k);
        refs
    }
}

/// `W_k = E^dag(M_k)` for every outcome, in POVM order.
pub fn subset_matrices(a: &QuantumAlgorithm) -> Result<Vec<(String, HermitianMatrix)>> {
    a.povm()
        .labels()
        .iter()
        .zip(a.povm().elements())
        .map(|(l, m)| Ok((l.clone(), a.channel().dual_apply(m)?)))
        .collect()
}

/// `δ_S = η λ_max - (e^ε + η - 1) λ_min`.
pub fn delta_s(lambda_max: f64, lambda_min: f64, eps: f64, eta: f64) -> f64 {
    eta * lambda_max - (eps.exp() + eta - 1.0) * lambda_min
}

/// `λ_max / λ_min`, with `λ_min <= 1e-9 max(1, λ_max)` treated as zero.
///
/// A subset whose matrix vanishes (`λ_max <= 1e-9`) is never observed, so like
/// the empty subset it gets `κ = 1`.
pub fn condition_number(lambda_max: f64, lambda_min: f64) -> f64 {
    if lambda_max <= tol::KAPPA_ZERO {
        1.0
    } else if lambda_min <= tol::KAPPA_ZERO * lambda_max.max(1.0) {
        f64::INFINITY
    } else {
        lambda_max / lambda_min
    }
}

/// `ε* = ln[(κ* - 1) η + 1]`; `+inf` maps to `+inf`.
pub fn optimal_epsilon(kappa_star: f64, eta: f64) -> f64 {
    if kappa_star.is_infinite() {
        f64::INFINITY
    } else {
        ((kappa_star - 1.0) * eta).ln_1p()
    }
}

/// Dualized outcome matrices plus everything needed to enumerate subsets.
struct SubsetSpace {
    /// `W_k` permuted into sorted-label order.
    sorted: Vec<(String, HermitianMatrix)>,
    keep_matrices: bool,
}

impl SubsetSpace {
    fn build(a: &QuantumAlgorithm, opts: &VerifyOptions) -> Result<Self> {
        let m = a.povm().len();
        if m > opts.subset_cap {
            return Err(QdpError::ResourceLimit(format!(
                "{m} outcomes exceed the subset-enumeration cap of {}",
                opts.subset_cap
            )));
        }
        if m >= usize::BITS as usize - 1 {
            return Err(QdpError::ResourceLimit(format!("{m} outcomes cannot be enumerated")));
        }
        let mut sorted = subset_matrices(a)?;
        sorted.sort_by(|x, y| x.0.cmp(&y.0));
        let dim = a.channel().dim();
        let entries = (dim * dim).saturating_mul((1usize << m) - 1);
        Ok(Self { sorted, keep_matrices: entries <= 1 << 24 })
    }

    fn masks(&self) -> std::ops::Range<usize> {
        1..1usize << self.sorted.len()
    }

    fn labels(&self, mask: usize) -> Vec<String> {
        (0..self.sorted.len()).filter(|i| mask >> i & 1 == 1).map(|i| self.sorted[i].0.clone()).collect()
    }

    fn matrix(&self, mask: usize) -> HermitianMatrix {
        let dim = self.sorted[0].1.dim();
        (0..self.sorted.len())
            .filter(|i| mask >> i & 1 == 1)
            .fold(HermitianMatrix::zeros(dim), |acc, i| acc.add(&self.sorted[i].1))
    }

    fn mask_of(&self, labels: &[String]) -> usize {
        labels
            .iter()
            .map(|l| 1usize << self.sorted.iter().position(|(x, _)| x == l).expect("label from this space"))
            .sum()
    }

    /// Spectral report for every nonempty subset, sorted lexicographically.
    fn reports(&self, eps: f64, eta: f64, opts: &VerifyOptions) -> Result<Vec<SubsetReport>> {
        let mut reports = self
            .masks()
            .into_par_iter()
            .map(|mask| {
                let m_s = self.matrix(mask);
                let ext = extremal_eigenpairs(&m_s, opts.eigen_tol)?;
                Ok(SubsetReport {
                    subset: self.labels(mask),
                    m_matrix: self.keep_matrices.then_some(m_s),
                    lambda_max: ext.lambda_max,
                    lambda_min: ext.lambda_min,
                    delta_s: delta_s(ext.lambda_max, ext.lambda_min, eps, eta),
                    kappa: condition_number(ext.lambda_max, ext.lambda_min),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        reports.sort_by(|a, b| a.subset.cmp(&b.subset));
        Ok(reports)
    }

    /// Extremal mixture pair for a subset: `(η ψ + (1 - η) φ, φ)`.
    fn witness_pair(&self, subset: &[String], eta: f64, opts: &VerifyOptions) -> Result<(DensityMatrix, DensityMatrix)> {
        let m_s = self.matrix(self.mask_of(subset));
        let ext = extremal_eigenpairs(&m_s, opts.eigen_tol)?;
        let psi = PureState::normalized(ext.vec_max)?.to_density();
        let phi = PureState::normalized(ext.vec_min)?.to_density();
        Ok((DensityMatrix::mix(eta, &psi, &phi)?, phi))
    }
}

/// First report (in lexicographic order) whose key is within tie tolerance of the maximum.
fn argmax_by<F: Fn(&SubsetReport) -> f64>(reports: &[SubsetReport], key: F, relative: bool) -> Option<&SubsetReport> {
    let best = reports.iter().map(&key).fold(f64::NEG_INFINITY, f64::max);
    reports.iter().find(|r| {
        let v = key(r);
        if best.is_infinite() {
            v == best
        } else {
            let slack = if relative { tol::TIE * best.abs().max(1.0) } else { tol::TIE };
            v >= best - slack
        }
    })
}

fn kappa_star_of(reports: &[SubsetReport]) -> f64 {
    reports.iter().map(|r| r.kappa).fold(1.0, f64::max)
}

/// Decides `(ε, δ)`-differential privacy within `η`.
pub fn verify_dp(a: &QuantumAlgorithm, p: &DpParams, opts: &VerifyOptions) -> Result<Verdict> {
    let space = SubsetSpace::build(a, opts)?;
    let per_subset = space.reports(p.epsilon, p.eta, opts)?;
    // The empty subset contributes δ_∅ = 0.
    let worst = argmax_by(&per_subset, |r| r.delta_s, false).filter(|r| r.delta_s > 0.0);
    let delta_star = worst.map_or(0.0, |r| r.delta_s);
    let private = p.delta >= delta_star - DECISION_SLACK;
    let witness = match worst {
        Some(r) if !private => {
            let (gamma, phi) = space.witness_pair(&r.subset, p.eta, opts)?;
            Some(Counterexample {
                gamma,
                phi,
                witness_subset: r.subset.clone(),
                violation_amount: r.delta_s - p.delta,
                eta_used: p.eta,
            })
        }
        _ => None,
    };
    Ok(Verdict { private, delta_star, kappa_star: kappa_star_of(&per_subset), witness, per_subset })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaResult {
    pub kappa_star: f64,
    pub report: SubsetReport,
    /// Extremal-mixture pair of the worst subset at `eta_for_witness`. Its
    /// `violation_amount` is the `(0, 0)`-DP overshoot `η (λ_max - λ_min)`,
    /// which is zero when `κ* = 1`.
    pub witness: Counterexample,
    pub per_subset: Vec<SubsetReport>,
}

/// Largest condition number over all nonempty outcome subsets, with the
/// counterexample pair built from the maximizing subset.
pub fn max_condition_number(a: &QuantumAlgorithm, eta_for_witness: f64, opts: &VerifyOptions) -> Result<KappaResult> {
    check_eta(eta_for_witness)?;
    let space = SubsetSpace::build(a, opts)?;
    let per_subset = space.reports(0.0, eta_for_witness, opts)?;
    let report = argmax_by(&per_subset, |r| r.kappa, true).expect("at least one outcome").clone();
    let (gamma, phi) = space.witness_pair(&report.subset, eta_for_witness, opts)?;
    let witness = Counterexample {
        gamma,
        phi,
        witness_subset: report.subset.clone(),
        violation_amount: delta_s(report.lambda_max, report.lambda_min, 0.0, eta_for_witness),
        eta_used: eta_for_witness,
    };
    Ok(KappaResult { kappa_star: report.kappa, report, witness, per_subset })
}

/// Decides `ε`-differential privacy within `η` through `κ*`.
pub fn verify_eps_dp(a: &QuantumAlgorithm, eps: f64, eta: f64, opts: &VerifyOptions) -> Result<Verdict> {
    let params = DpParams::new(eps, 0.0, eta)?;
    let kappa = max_condition_number(a, eta, opts)?;
    let eps_star = optimal_epsilon(kappa.kappa_star, eta);
    let private = eps >= eps_star - DECISION_SLACK;
    let per_subset: Vec<SubsetReport> = kappa
        .per_subset
        .into_iter()
        .map(|mut r| {
            r.delta_s = delta_s(r.lambda_max, r.lambda_min, params.epsilon, params.eta);
            r
        })
        .collect();
    let delta_star = per_subset.iter().map(|r| r.delta_s).fold(0.0, f64::max);
    let witness = (!private).then(|| {
        let mut w = kappa.witness;
        w.violation_amount = delta_s(kappa.report.lambda_max, kappa.report.lambda_min, eps, eta);
        w
    });
    Ok(Verdict { private, delta_star, kappa_star: kappa.kappa_star, witness, per_subset })
}

/// `ε*(η)` on a grid, with `κ*` computed once.
pub fn epsilon_curve(a: &QuantumAlgorithm, etas: &[f64], opts: &VerifyOptions) -> Result<Vec<(f64, f64)>> {
    for &eta in etas {
        check_eta(eta)?;
    }
    let kappa = max_condition_number(a, 1.0, opts)?.kappa_star;
    epsilon_curve_for_kappa(kappa, etas)
}

pub fn epsilon_curve_for_kappa(kappa_star: f64, etas: &[f64]) -> Result<Vec<(f64, f64)>> {
    if !(kappa_star >= 1.0) {
        return Err(QdpError::InvalidInput(format!("kappa* must be >= 1, got {kappa_star}")));
    }
    etas.iter()
        .map(|&eta| {
            check_eta(eta)?;
            Ok((eta, optimal_epsilon(kappa_star, eta)))
        })
        .collect()
}

/// Parallel composition `A1_{S1} ⊗ A2_{S2}`: channel `E1 ⊗ E2`, two-outcome
/// measurement `{M_{1,S1} ⊗ M_{2,S2}, I - M_{1,S1} ⊗ M_{2,S2}}` labelled
/// `"0"` (joint event) and `"1"` (complement).
pub fn compose_parallel(a1: &QuantumAlgorithm, s1: &[String], a2: &QuantumAlgorithm, s2: &[String]) -> Result<QuantumAlgorithm> {
    let m1 = a1.povm().subset_sum(s1)?;
    let m2 = a2.povm().subset_sum(s2)?;
    let joint = m1.kron(&m2);
    let rest = HermitianMatrix::identity(joint.dim()).sub(&joint);
    let povm = Povm::new(vec!["0".into(), "1".into()], vec![joint, rest])?;
    let channel: Channel = a1.channel().tensor(a2.channel());
    QuantumAlgorithm::new(channel, povm)
}
