//! Sampling validator that checks the differential-privacy inequality
//! directly on state pairs, without any of the verifier's spectral machinery.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QdpError, Result};
use crate::linalg::{ComplexMatrix, HermitianMatrix, C64};
use crate::model::{measure_distribution, trace_distance, DensityMatrix, PureState, QuantumAlgorithm};
use crate::verifier::{check_eta, Counterexample, DpParams};

/// A sampled margin must exceed this before it counts as a violation.
pub const WITNESS_SLACK: f64 = 1e-9;
const REPLAY_TOL: f64 = 1e-8;

/// Seeded generators for states, channels, measurements and circuits.
pub mod random {
    use super::*;
    use crate::model::{Circuit, GateKind, GateSpec, KrausChannel, Povm};
    use rand_distr::StandardNormal;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
        C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    }

    pub(crate) fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<C64> {
        DVector::from_fn(dim, |_, _| gaussian(rng))
    }

    fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
        DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
    }

    /// `S^{-1/2}` for a positive-definite Hermitian `S`.
    pub(crate) fn inv_sqrt(s: &DMatrix<C64>) -> DMatrix<C64> {
        let eig = SymmetricEigen::new(s.clone());
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
        &eig.eigenvectors * d * eig.eigenvectors.adjoint()
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn pure_state<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize) -> PureState {
        PureState::normalized(gaussian_vector(rng, 1 << n_qubits)).expect("gaussian vector is nonzero")
    }

    /// Random mixture of `rank` pure states with uniform-then-normalized weights.
    pub fn mixed_state<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, rank: usize) -> DensityMatrix {
        let weights: Vec<f64> = (0..rank.max(1)).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = weights.iter().sum();
        let dim = 1 << n_qubits;
        let mut acc = HermitianMatrix::zeros(dim);
        for w in weights {
            let psi = pure_state(rng, n_qubits);
            acc = acc.add(&HermitianMatrix::projector(psi.amplitudes()).scale(w / total));
        }
        DensityMatrix::new(acc).expect("convex mixture of pure states")
    }

    /// Haar unitary from the QR decomposition of a Ginibre matrix.
    pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
        let qr = ginibre(rng, dim, dim).qr();
        let r = qr.r();
        let phases = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| {
            let z = r[(i, i)];
            if z.norm() > 0.0 {
                z / z.norm()
            } else {
                C64::new(1.0, 0.0)
            }
        }));
        ComplexMatrix::new(qr.q() * phases).expect("square")
    }

    /// `K_i = G_i S^{-1/2}` with `S = sum_i G_i^dag G_i`, for Gaussian `G_i`.
    pub fn channel<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, n_kraus: usize) -> KrausChannel {
        let dim = 1 << n_qubits;
        let gs: Vec<DMatrix<C64>> = (0..n_kraus.max(1)).map(|_| ginibre(rng, dim, dim)).collect();
        let s = gs.iter().fold(DMatrix::zeros(dim, dim), |acc, g| acc + g.adjoint() * g);
        let norm = inv_sqrt(&s);
        let kraus = gs.iter().map(|g| ComplexMatrix::new(g * &norm).expect("square")).collect();
        KrausChannel::new(kraus).expect("normalized Kraus family")
    }

    /// `M_k = S^{-1/2} A_k S^{-1/2}` with `A_k = G_k G_k^dag`, labels "0", "1", ...
    pub fn povm<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, n_outcomes: usize) -> Povm {
        let dim = 1 << n_qubits;
        let a: Vec<DMatrix<C64>> = (0..n_outcomes.max(1))
            .map(|_| {
                let g = ginibre(rng, dim, dim);
                &g * g.adjoint()
            })
            .collect();
        let s = a.iter().fold(DMatrix::zeros(dim, dim), |acc, x| acc + x);
        let norm = inv_sqrt(&s);
        let elements = a
            .iter()
            .map(|x| crate::linalg::hermitize(ComplexMatrix::new(&norm * x * &norm).expect("square")).expect("hermitian"))
            .collect();
        Povm::with_default_labels(elements).expect("normalized POVM")
    }

    /// Random positive semi-definite matrix `G G^dag` scaled to unit trace.
    pub fn psd_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianMatrix {
        let g = ginibre(rng, dim, dim);
        let m = crate::linalg::hermitize(ComplexMatrix::new(&g * g.adjoint()).expect("square")).expect("hermitian");
        let t = m.trace();
        m.scale(1.0 / t)
    }

    /// Random channel followed by a random measurement.
    pub fn algorithm<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, n_outcomes: usize, n_kraus: usize) -> QuantumAlgorithm {
        let e = channel(rng, n_qubits, n_kraus);
        let m = povm(rng, n_qubits, n_outcomes);
        QuantumAlgorithm::new(e, m).expect("matching dimensions")
    }

    /// `depth` layers, each a random-axis rotation on every qubit followed by
    /// CZ on alternating neighbour pairs.
    pub fn circuit<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, depth: usize) -> Circuit {
        let axes = [GateKind::Rx, GateKind::Ry, GateKind::Rz];
        let mut gates = Vec::new();
        for layer in 0..depth {
            for q in 0..n_qubits {
                let kind = axes[rng.random_range(0..3)];
                let theta = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
                gates.push(GateSpec::rotation(kind, theta, &[q]));
            }
            let mut q = layer % 2;
            while q + 1 < n_qubits {
                gates.push(GateSpec::fixed(GateKind::Cz, &[q, q + 1]));
                q += 2;
            }
        }
        Circuit::new(n_qubits, gates).expect("targets in range")
    }
}

/// `(t ψ + (1 - t) σ, σ)` with random mixed `σ`, random pure `ψ` and `t ~ U[0, η]`.
pub fn sample_neighbor_pair(n_qubits: usize, eta: f64, seed: u64) -> Result<(DensityMatrix, DensityMatrix)> {
    check_eta(eta)?;
    let mut rng = random::rng(seed);
    Ok(neighbor_pair(&mut rng, n_qubits, eta))
}

fn neighbor_pair<R: Rng + ?Sized>(rng: &mut R, n_qubits: usize, eta: f64) -> (DensityMatrix, DensityMatrix) {
    let rank = rng.random_range(1..=1usize << n_qubits);
    let sigma = random::mixed_state(rng, n_qubits, rank);
    let psi = random::pure_state(rng, n_qubits).to_density();
    let t = rng.random::<f64>() * eta;
    let rho = DensityMatrix::mix(t, &psi, &sigma).expect("t in [0, 1]");
    (rho, sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViolationWitness {
    pub rho: DensityMatrix,
    pub sigma: DensityMatrix,
    pub subset: Vec<String>,
    /// `sum_S p(ρ) - e^ε sum_S p(σ) - δ`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    /// First violating pair by trial index.
    pub witness: Option<ViolationWitness>,
    /// Largest `sum_S p(ρ) - e^ε sum_S p(σ)` seen over all trials and subsets
    /// (the empty subset contributes 0). Comparable to the verifier's `δ*`.
    pub best_excess: f64,
    pub trials: usize,
}

/// First sampled violation of the privacy inequality, if any.
pub fn violation_search(a: &QuantumAlgorithm, p: &DpParams, trials: usize, seed: u64) -> Result<Option<ViolationWitness>> {
    Ok(search(a, p, trials, seed, true, true)?.witness)
}

/// Full search: keeps sampling after the first witness to estimate the supremum.
pub fn violation_search_report(
    a: &QuantumAlgorithm,
    p: &DpParams,
    trials: usize,
    seed: u64,
    extremal: bool,
) -> Result<SearchReport> {
    search(a, p, trials, seed, extremal, false)
}

/// `W_k[j, i] = tr(M_k E(|i><j|))`, built from forward channel actions only.
fn dualized_by_probing(a: &QuantumAlgorithm) -> Result<Vec<DMatrix<C64>>> {
    let dim = a.channel().dim();
    let mut out = vec![DMatrix::zeros(dim, dim); a.povm().len()];
    for i in 0..dim {
        for j in 0..dim {
            let mut unit = DMatrix::zeros(dim, dim);
            unit[(i, j)] = C64::new(1.0, 0.0);
            let image = a.channel().apply_matrix(&ComplexMatrix::new(unit)?)?;
            for (w, m) in out.iter_mut().zip(a.povm().elements()) {
                w[(j, i)] = (m.inner() * image.inner()).trace();
            }
        }
    }
    Ok(out)
}

/// Random unit vector inside the span of `cols`.
fn random_in_span<R: Rng + ?Sized>(rng: &mut R, cols: &[DVector<C64>]) -> DVector<C64> {
    let mut v = cols.iter().fold(DVector::zeros(cols[0].len()), |acc, c| acc + c * random::gaussian_vector(rng, 1)[0]);
    let n = v.norm();
    v /= C64::new(n, 0.0);
    v
}

/// Extremal mixture for subset `mask`: `(η ψ + (1 - η) φ, φ)` with `ψ`, `φ`
/// top and bottom eigenvectors of `sum_{k in mask} W_k`. With `rng`, the
/// vectors are drawn at random from the (possibly degenerate) eigenspaces.
fn extremal_pair(
    w: &[DMatrix<C64>],
    mask: usize,
    eta: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(DensityMatrix, DensityMatrix)> {
    let dim = w[0].nrows();
    let m = (0..w.len()).filter(|k| mask >> k & 1 == 1).fold(DMatrix::zeros(dim, dim), |acc, k| acc + &w[k]);
    let m = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(m);
    let vals = eig.eigenvalues.as_slice();
    let (imax, imin) = (0..dim).fold((0, 0), |(hi, lo), i| {
        (if vals[i] > vals[hi] { i } else { hi }, if vals[i] < vals[lo] { i } else { lo })
    });
    let (lmax, lmin) = (vals[imax], vals[imin]);
    let col = |i: usize| eig.eigenvectors.column(i).into_owned();
    let (psi, phi) = match rng {
        None => {
            let psi = col(imax);
            let phi = if imax == imin { col((imax + 1) % dim) } else { col(imin) };
            (psi, phi)
        }
        Some(rng) => {
            let top: Vec<_> = (0..dim).filter(|&i| vals[i] >= lmax - 1e-9).map(col).collect();
            let bottom: Vec<_> = (0..dim).filter(|&i| vals[i] <= lmin + 1e-9).map(col).collect();
            let psi = random_in_span(rng, &top);
            let mut phi = random_in_span(rng, &bottom);
            if lmax - lmin <= 1e-9 {
                // One eigenspace: take φ orthogonal to ψ.
                let overlap = psi.dotc(&phi);
                phi -= &psi * overlap;
                let n = phi.norm();
                phi /= C64::new(n, 0.0);
            }
            (psi, phi)
        }
    };
    let psi = PureState::normalized(psi)?.to_density();
    let phi = PureState::normalized(phi)?.to_density();
    Ok((DensityMatrix::mix(eta, &psi, &phi)?, phi))
}

fn search(a: &QuantumAlgorithm, p: &DpParams, trials: usize, seed: u64, extremal: bool, stop_early: bool) -> Result<SearchReport> {
    if trials == 0 {
        return Err(QdpError::InvalidInput("at least one trial is required".into()));
    }
    let n_out = a.povm().len();
    if n_out >= 24 {
        return Err(QdpError::ResourceLimit(format!("{n_out} outcomes are too many to search")));
    }
    let n = a.n_qubits();
    let mut rng = random::rng(seed);
    let w = if extremal { Some(dualized_by_probing(a)?) } else { None };
    let n_subsets = (1usize << n_out) - 1;
    let labels = a.povm().labels();
    let scale = p.epsilon.exp();

    let mut report = SearchReport { witness: None, best_excess: 0.0, trials: 0 };
    for t in 0..trials {
        let (rho, sigma) = match &w {
            Some(w) if t < n_subsets => extremal_pair(w, t + 1, p.eta, None)?,
            Some(w) if t % 2 == 1 => {
                let mask = rng.random_range(1..=n_subsets);
                extremal_pair(w, mask, p.eta, Some(&mut rng))?
            }
            _ => neighbor_pair(&mut rng, n, p.eta),
        };
        let pr = measure_distribution(a, &rho)?.probs;
        let ps = measure_distribution(a, &sigma)?.probs;
        report.trials = t + 1;
        let mut trial_best: Option<(f64, usize, bool)> = None;
        for mask in 1..=n_subsets {
            let (mut sr, mut ss) = (0.0, 0.0);
            for k in (0..n_out).filter(|k| mask >> k & 1 == 1) {
                sr += pr[k];
                ss += ps[k];
            }
            for (excess, swapped) in [(sr - scale * ss, false), (ss - scale * sr, true)] {
                report.best_excess = report.best_excess.max(excess);
                if trial_best.is_none_or(|(b, _, _)| excess > b) {
                    trial_best = Some((excess, mask, swapped));
                }
            }
        }
        if report.witness.is_none() {
            if let Some((excess, mask, swapped)) = trial_best {
                let margin = excess - p.delta;
                if margin > WITNESS_SLACK {
                    let subset = (0..n_out).filter(|k| mask >> k & 1 == 1).map(|k| labels[k].clone()).collect();
                    let (rho, sigma) = if swapped { (sigma, rho) } else { (rho, sigma) };
                    report.witness = Some(ViolationWitness { rho, sigma, subset, margin });
                    if stop_early {
                        break;
                    }
                }
            }
        }
    }
    Ok(report)
}

/// Replays a counterexample from scratch: trace distance equals `eta_used`
/// and stays within `p.eta`, `φ` is pure, and the measured margin on the
/// witness subset is positive and matches `violation_amount`.
pub fn check_counterexample(a: &QuantumAlgorithm, c: &Counterexample, p: &DpParams) -> Result<bool> {
    for s in [&c.gamma, &c.phi] {
        if s.dim() != a.channel().dim() {
            return Err(QdpError::DimensionMismatch { expected: a.channel().dim(), actual: s.dim() });
        }
    }
    let distance = trace_distance(&c.gamma, &c.phi)?;
    if distance > p.eta + REPLAY_TOL || (distance - c.eta_used).abs() > REPLAY_TOL {
        return Ok(false);
    }
    if (c.phi.purity() - 1.0).abs() > 1e-9 {
        return Ok(false);
    }
    let pg = measure_distribution(a, &c.gamma)?.mass(&c.witness_subset)?;
    let pf = measure_distribution(a, &c.phi)?.mass(&c.witness_subset)?;
    let margin = pg - p.epsilon.exp() * pf - p.delta;
    Ok(margin > 0.0 && (margin - c.violation_amount).abs() <= REPLAY_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KrausChannel, Povm};
    use crate::verifier::{verify_dp, VerifyOptions};

    #[test]
    fn neighbour_pairs_are_close_and_reproducible() {
        for seed in 0..200 {
            let (r, s) = sample_neighbor_pair(2, 0.3, seed).unwrap();
            assert!(trace_distance(&r, &s).unwrap() <= 0.3 + 1e-9);
        }
        assert_eq!(sample_neighbor_pair(2, 0.3, 7).unwrap(), sample_neighbor_pair(2, 0.3, 7).unwrap());
        let (r, s) = sample_neighbor_pair(1, 1e-12, 3).unwrap();
        assert!(trace_distance(&r, &s).unwrap() < 1e-11);
        assert!(sample_neighbor_pair(1, 0.0, 3).is_err());
        assert!(sample_neighbor_pair(1, 1.5, 3).is_err());
    }

    #[test]
    fn random_objects_are_valid() {
        let mut rng = random::rng(11);
        for _ in 0..20 {
            let e = random::channel(&mut rng, 2, 3);
            assert_eq!(e.kraus().len(), 3);
            let m = random::povm(&mut rng, 2, 4);
            assert_eq!(m.len(), 4);
            let u = random::unitary(&mut rng, 4);
            assert!(u.adjoint().mul(&u).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-10);
            let rho = random::mixed_state(&mut rng, 2, 3);
            assert!(rho.purity() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn probing_matches_dual_map() {
        let mut rng = random::rng(5);
        let a = random::algorithm(&mut rng, 2, 3, 2);
        let probed = dualized_by_probing(&a).unwrap();
        for (w, m) in probed.iter().zip(a.povm().elements()) {
            let dual = a.channel().dual_apply(m).unwrap();
            assert!((w - dual.inner()).iter().all(|z| z.norm() < 1e-12));
        }
    }

    #[test]
    fn delta_one_never_violates() {
        let mut rng = random::rng(9);
        let a = random::algorithm(&mut rng, 1, 2, 2);
        let p = DpParams::new(0.0, 1.0, 1.0).unwrap();
        assert!(violation_search(&a, &p, 500, 1).unwrap().is_none());
    }

    #[test]
    fn identity_pair_is_not_a_counterexample() {
        let a = QuantumAlgorithm::new(KrausChannel::identity(1), Povm::computational(1, &[0]).unwrap()).unwrap();
        let rho = DensityMatrix::basis(1, 0).unwrap();
        let c = Counterexample {
            gamma: rho.clone(),
            phi: rho,
            witness_subset: vec!["0".into()],
            violation_amount: 0.0,
            eta_used: 0.0,
        };
        assert!(!check_counterexample(&a, &c, &DpParams::new(0.0, 0.0, 1.0).unwrap()).unwrap());
    }

    #[test]
    fn projective_measurement_is_caught_and_replays() {
        let a = QuantumAlgorithm::new(KrausChannel::identity(1), Povm::computational(1, &[0]).unwrap()).unwrap();
        let p = DpParams::new(0.5, 0.0, 0.4).unwrap();
        let w = violation_search(&a, &p, 100, 2).unwrap().unwrap();
        assert!(trace_distance(&w.rho, &w.sigma).unwrap() <= p.eta + 1e-8);
        let pr = measure_distribution(&a, &w.rho).unwrap().mass(&w.subset).unwrap();
        let ps = measure_distribution(&a, &w.sigma).unwrap().mass(&w.subset).unwrap();
        assert!((pr - p.epsilon.exp() * ps - p.delta - w.margin).abs() < 1e-12);

        let v = verify_dp(&a, &p, &VerifyOptions::default()).unwrap();
        let c = v.witness.unwrap();
        assert!(check_counterexample(&a, &c, &p).unwrap());
        let tampered = Counterexample { phi: c.gamma.clone(), ..c };
        assert!(!check_counterexample(&a, &tampered, &p).unwrap());
        let wrong_dim = Counterexample { gamma: DensityMatrix::maximally_mixed(2), ..tampered };
        assert!(matches!(check_counterexample(&a, &wrong_dim, &p), Err(QdpError::DimensionMismatch { .. })));
    }
}
