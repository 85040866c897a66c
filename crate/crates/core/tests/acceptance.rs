//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, SymmetricEigen};
use qdp::cli::{AlgorithmFile, GateRecord, MeasurementRecord, ReportFile, SCHEMA_VERSION};
use qdp::encoding::{angle_encode, encoded_neighbor_distance, Axis, ClassicalVector};
use qdp::linalg::{ComplexMatrix, HermitianMatrix, C64};
use qdp::model::{
    circuit_to_layered, compose_channels, trace_distance, DensityMatrix, KrausChannel, NoiseInjection, NoiseKind, Povm,
    QuantumAlgorithm,
};
use qdp::oracle::{check_counterexample, random, violation_search_report};
use qdp::verifier::{
    compose_parallel, epsilon_curve, max_condition_number, optimal_epsilon, subset_matrices, verify_dp, verify_eps_dp,
    DpParams, VerifyOptions,
};
use rand::Rng;
use rayon::prelude::*;

type Check = std::result::Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn opts() -> VerifyOptions {
    VerifyOptions::default()
}

fn column_op(scale: f64, entries: &[(usize, f64)], c: usize) -> ComplexMatrix {
    let mut m = DMatrix::from_element(4, 4, C64::new(0.0, 0.0));
    for &(r, v) in entries {
        m[(r, c)] = C64::new(v * scale, 0.0);
    }
    ComplexMatrix::new(m).unwrap()
}

/// Each basis state spread over three outputs with fixed weights.
fn spread() -> KrausChannel {
    let a = 1.0 / 3f64.sqrt();
    let b = 1.0 / 6f64.sqrt();
    KrausChannel::new(vec![
        column_op(a, &[(0, 1.0), (2, 1.0), (3, 1.0)], 0),
        column_op(a, &[(1, 1.0), (2, 1.0), (3, 1.0)], 1),
        column_op(b, &[(0, 1.0), (1, 1.0), (2, 2.0)], 2),
        column_op(b, &[(0, 1.0), (1, 1.0), (3, 2.0)], 3),
    ])
    .unwrap()
}

/// `|00> -> |00>`, `|01> -> |10>`, `|10> -> |10>`, `|11> -> |11>`.
fn collapse() -> KrausChannel {
    KrausChannel::new(vec![
        column_op(1.0, &[(0, 1.0)], 0),
        column_op(1.0, &[(2, 1.0)], 1),
        column_op(1.0, &[(2, 1.0)], 2),
        column_op(1.0, &[(3, 1.0)], 3),
    ])
    .unwrap()
}

fn first_qubit_povm() -> Povm {
    Povm::with_default_labels(vec![
        HermitianMatrix::diagonal(&[1.0, 1.0, 0.0, 0.0]),
        HermitianMatrix::diagonal(&[0.0, 0.0, 1.0, 1.0]),
    ])
    .unwrap()
}

fn spectrum(m: &HermitianMatrix) -> (f64, f64) {
    let e = SymmetricEigen::new(m.inner().clone()).eigenvalues;
    (e.iter().copied().fold(f64::INFINITY, f64::min), e.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

fn golden_uniform() -> Check {
    let a = QuantumAlgorithm::new(spread(), first_qubit_povm()).unwrap();
    let w = subset_matrices(&a).map_err(|e| e.to_string())?;
    let third = HermitianMatrix::identity(4).scale(1.0 / 3.0);
    let d0 = w[0].1.matrix().max_abs_diff(third.matrix());
    let d1 = w[1].1.matrix().max_abs_diff(third.scale(2.0).matrix());
    ensure(d0 <= 1e-10 && d1 <= 1e-10, || format!("dual matrices off by {d0:e}, {d1:e}"))?;
    let k = max_condition_number(&a, 1.0, &opts()).map_err(|e| e.to_string())?.kappa_star;
    ensure((k - 1.0).abs() <= 1e-10, || format!("kappa* = {k}"))?;
    let eps = optimal_epsilon(k, 1.0);
    ensure(eps.abs() <= 1e-10, || format!("eps* = {eps}"))?;
    Ok(format!("kappa* = {k}, eps* = {eps}"))
}

fn golden_violation() -> Check {
    let fe = compose_channels(&collapse(), &spread(), 16).unwrap();
    let a = QuantumAlgorithm::new(fe, first_qubit_povm()).unwrap();
    let w = subset_matrices(&a).map_err(|e| e.to_string())?;
    let (lmin, lmax) = spectrum(&w[0].1);
    ensure((lmax - 1.0 / 3.0).abs() <= 1e-10, || format!("lambda_max = {lmax}"))?;
    ensure(lmin.abs() <= 1e-9, || format!("lambda_min = {lmin}"))?;
    let k = max_condition_number(&a, 0.5, &opts()).map_err(|e| e.to_string())?.kappa_star;
    ensure(k.is_infinite(), || format!("kappa* = {k}"))?;
    let p = DpParams::new(0.0, 0.0, 0.5).unwrap();
    let v = verify_dp(&a, &p, &opts()).map_err(|e| e.to_string())?;
    ensure(!v.private, || "reported private".into())?;
    let c = v.witness.ok_or("no witness")?;
    ensure(check_counterexample(&a, &c, &p).unwrap(), || "witness does not replay".into())?;
    let s00 = DensityMatrix::basis(2, 0).unwrap();
    let s01 = DensityMatrix::basis(2, 1).unwrap();
    let gamma = DensityMatrix::mix(0.5, &s00, &s01).unwrap();
    let dg = trace_distance(&c.gamma, &gamma).unwrap();
    let dp = trace_distance(&c.phi, &s01).unwrap();
    ensure(dg <= 1e-8 && dp <= 1e-8, || format!("witness off by {dg:e} / {dp:e}"))?;
    Ok(format!("delta* = {}, S* = {:?}", v.delta_star, c.witness_subset))
}

fn oracle_agreement() -> Check {
    let outcomes: Vec<std::result::Result<(f64, f64), String>> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = random::rng(0xacc0_0000 + i);
            let n_out = rng.random_range(2..=4);
            let n_kraus = rng.random_range(1..=4);
            let a = random::algorithm(&mut rng, 2, n_out, n_kraus);
            let p = DpParams::new(rng.random_range(0.0..0.5), rng.random_range(0.0..0.1), rng.random_range(0.05..=1.0))
                .unwrap();
            let v = verify_dp(&a, &p, &opts()).map_err(|e| e.to_string())?;
            let r = violation_search_report(&a, &p, 10_000, i, true).map_err(|e| e.to_string())?;
            if r.witness.is_some() && v.private {
                return Err(format!("instance {i}: oracle violation but verifier says private"));
            }
            if !v.private && r.witness.is_none() {
                return Err(format!("instance {i}: verifier violation but oracle found none"));
            }
            Ok((r.best_excess - v.delta_star, v.delta_star - r.best_excess))
        })
        .collect();
    let mut worst_over = f64::NEG_INFINITY;
    let mut worst_gap = 0.0f64;
    for o in outcomes {
        let (over, gap) = o?;
        worst_over = worst_over.max(over);
        worst_gap = worst_gap.max(gap);
    }
    ensure(worst_over <= 1e-8, || format!("sampled excess above delta* by {worst_over:e}"))?;
    ensure(worst_gap <= 1e-6, || format!("supremum not attained, gap {worst_gap:e}"))?;
    Ok(format!("0 disagreements, max overshoot {worst_over:.1e}, attainment gap {worst_gap:.1e}"))
}

fn dual_spectrum_containment() -> Check {
    let mut rng = random::rng(4);
    for i in 0..500 {
        let n = rng.random_range(1..=3);
        let k = rng.random_range(1..=4);
        let e = random::channel(&mut rng, n, k);
        let m = random::psd_matrix(&mut rng, 1 << n);
        let d = e.dual_apply(&m).unwrap();
        let (mlo, mhi) = spectrum(&m);
        let (dlo, dhi) = spectrum(&d);
        ensure(mlo <= dlo + 1e-8 && dlo <= dhi + 1e-8 && dhi <= mhi + 1e-8, || {
            format!("pair {i}: [{mlo}, {mhi}] vs [{dlo}, {dhi}]")
        })?;
    }
    Ok("500 pairs".into())
}

fn noise_monotonicity() -> Check {
    let mut lines = Vec::new();
    for (i, n) in [4usize, 5, 6, 4, 5].into_iter().enumerate() {
        let mut rng = random::rng(500 + i as u64);
        let circuit = random::circuit(&mut rng, n, 8);
        let measured = [rng.random_range(0..n / 2), n / 2 + rng.random_range(0..n - n / 2)];
        let povm = Povm::computational(n, &measured).unwrap();
        for kind in [NoiseKind::Depolarizing, NoiseKind::BitFlip] {
            let kappa = |p: f64| {
                let ch = circuit_to_layered(&circuit, &NoiseInjection::at_end(kind, p)).unwrap();
                let a = QuantumAlgorithm::new(ch, povm.clone()).unwrap();
                max_condition_number(&a, 1.0, &opts()).unwrap().kappa_star
            };
            let (strong, weak) = (kappa(0.01), kappa(0.001));
            ensure(strong < weak, || format!("circuit {i} ({kind:?}): {strong} !< {weak}"))?;
            lines.push(format!("{strong:.1}<{weak:.1}"));
        }
    }
    Ok(lines.join(" "))
}

fn curve_shape() -> Check {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let etas: Vec<f64> = (1..=50).map(|i| i as f64 / 50.0).collect();
    let mut checked = Vec::new();
    let mut names: Vec<_> = std::fs::read_dir(&dir).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    for path in names {
        let a = AlgorithmFile::load(&path).unwrap().to_algorithm(16).unwrap();
        let k = max_condition_number(&a, 1.0, &opts()).unwrap().kappa_star;
        if !(k.is_finite() && k > 1.0 + 1e-9) {
            continue;
        }
        let curve = epsilon_curve(&a, &etas, &opts()).unwrap();
        for w in curve.windows(2) {
            ensure(w[1].1 > w[0].1, || format!("{}: not increasing at eta {}", path.display(), w[1].0))?;
        }
        for w in curve.windows(3) {
            let second = w[2].1 - 2.0 * w[1].1 + w[0].1;
            ensure(second <= 1e-9, || format!("{}: second difference {second}", path.display()))?;
        }
        checked.push(path.file_name().unwrap().to_string_lossy().into_owned());
    }
    ensure(!checked.is_empty(), || "no fixture with finite kappa* > 1".into())?;
    Ok(checked.join(", "))
}

fn composition() -> Check {
    let mut rng = random::rng(7);
    for i in 0..50 {
        let o1 = rng.random_range(2..=3);
        let a1 = random::algorithm(&mut rng, 1, o1, 2);
        let o2 = rng.random_range(2..=3);
        let a2 = random::algorithm(&mut rng, 1, o2, 2);
        let s1: Vec<String> = a1.povm().labels()[..rng.random_range(1..=o1)].to_vec();
        let s2: Vec<String> = a2.povm().labels()[..rng.random_range(1..=o2)].to_vec();
        let c = compose_parallel(&a1, &s1, &a2, &s2).unwrap();
        let (eta1, eta2) = (rng.random_range(0.05..=1.0), rng.random_range(0.05..=1.0));

        let e1 = optimal_epsilon(max_condition_number(&a1, eta1, &opts()).unwrap().kappa_star, eta1);
        let e2 = optimal_epsilon(max_condition_number(&a2, eta2, &opts()).unwrap().kappa_star, eta2);
        let components = verify_eps_dp(&a1, e1, eta1, &opts()).unwrap().private
            && verify_eps_dp(&a2, e2, eta2, &opts()).unwrap().private;
        if components {
            ensure(verify_eps_dp(&c, e1 + e2, eta1 * eta2, &opts()).unwrap().private, || {
                format!("pair {i}: eps-only transfer fails")
            })?;
        }

        let (x1, x2) = (rng.random_range(0.0..0.5), rng.random_range(0.0..0.5));
        let d1 = verify_dp(&a1, &DpParams::new(x1, 0.0, eta1).unwrap(), &opts()).unwrap().delta_star;
        let d2 = verify_dp(&a2, &DpParams::new(x2, 0.0, eta2).unwrap(), &opts()).unwrap().delta_star;
        let p = DpParams::new(x1 + x2, (d1 + d2).min(1.0), eta1 * eta2).unwrap();
        ensure(verify_dp(&c, &p, &opts()).unwrap().private, || format!("pair {i}: (eps, delta) transfer fails"))?;
    }
    Ok("50 pairs".into())
}

fn encoding() -> Check {
    let v = ClassicalVector::uniform(vec![0.0, 1.0, 1.0, 0.0], Axis::Y).unwrap();
    let w = ClassicalVector::uniform(vec![0.0, 1.0, 0.0, 0.0], Axis::Y).unwrap();
    let d = encoded_neighbor_distance(&v, &w).unwrap();
    ensure((d - 0.5f64.sin()).abs() <= 1e-10, || format!("binary neighbours at {d}"))?;
    let mut rng = random::rng(8);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let len = rng.random_range(1..=4);
        let axis = [Axis::X, Axis::Y, Axis::Z][rng.random_range(0..3)];
        let values: Vec<f64> = (0..len).map(|_| rng.random_range(-PI..PI)).collect();
        let mut other = values.clone();
        let j = rng.random_range(0..len);
        other[j] += rng.random_range(0.01..2.0);
        let v = ClassicalVector::uniform(values, axis).unwrap();
        let w = ClassicalVector::uniform(other, axis).unwrap();
        let formula = encoded_neighbor_distance(&v, &w).unwrap();
        let direct = trace_distance(&angle_encode(&v).unwrap(), &angle_encode(&w).unwrap()).unwrap();
        worst = worst.max((formula - direct).abs());
    }
    ensure(worst <= 1e-8, || format!("formula vs direct off by {worst:e}"))?;
    Ok(format!("sin(1/2) within {:.1e}, 100 pairs within {worst:.1e}", (d - 0.5f64.sin()).abs()))
}

fn post_processing() -> Check {
    let mut rng = random::rng(9);
    for i in 0..100 {
        let n = rng.random_range(1..=2);
        let circuit = random::circuit(&mut rng, n, 3);
        let u = qdp::model::circuit_to_channel(&circuit, &NoiseInjection::none(), 1).unwrap();
        let n_out = rng.random_range(2..=4);
        let m = random::povm(&mut rng, n, n_out);
        let n_kraus = rng.random_range(1..=4);
        let f = random::channel(&mut rng, n, n_kraus);
        let before = max_condition_number(&QuantumAlgorithm::new(u.clone(), m.clone()).unwrap(), 1.0, &opts())
            .unwrap()
            .kappa_star;
        let fu = compose_channels(&f, &u, 64).unwrap();
        let after = max_condition_number(&QuantumAlgorithm::new(fu, m).unwrap(), 1.0, &opts()).unwrap().kappa_star;
        ensure(after <= before + 1e-8, || format!("triple {i}: {after} > {before}"))?;
    }
    Ok("100 triples".into())
}

fn performance() -> Check {
    let mut rng = random::rng(10);
    let circuit = random::circuit(&mut rng, 10, 20);
    let gates = circuit
        .gates()
        .iter()
        .map(|g| GateRecord { name: g.name.name().to_string(), params: g.params.clone(), targets: g.targets.clone() })
        .collect();
    let file = AlgorithmFile {
        schema_version: SCHEMA_VERSION.into(),
        n_qubits: 10,
        gates,
        noise: NoiseInjection::at_end(NoiseKind::Depolarizing, 0.01),
        stages: Vec::new(),
        measurement: MeasurementRecord::Computational { qubits: vec![3, 7] },
    };
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("wide.json");
    let out = dir.path().join("report.json");
    std::fs::write(&input, file.to_json_string()).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_qdpv"))
        .args(["kappa", input.to_str().unwrap(), "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    ensure(status.status.code() == Some(0), || String::from_utf8_lossy(&status.stderr).into_owned())?;
    let report = ReportFile::load(&out).unwrap();
    // Depolarizing at the end on the two measured qubits: ((1 - 2p/3) / (2p/3))^2.
    let q: f64 = 2.0 * 0.01 / 3.0;
    let expect = ((1.0 - q) / q).powi(2);
    ensure((report.kappa_star - expect).abs() <= 1e-6 * expect, || {
        format!("kappa* = {} (expected {expect})", report.kappa_star)
    })?;
    Ok(format!("kappa* = {:.3}, 1024x1024 subsets", report.kappa_star))
}

fn main() {
    let criteria: Vec<(&str, Duration, fn() -> Check)> = vec![
        ("golden dual matrices and kappa* = 1", Duration::from_secs(1), golden_uniform),
        ("golden violation and witness pair", Duration::from_secs(1), golden_violation),
        ("oracle agreement on 100 random algorithms", Duration::from_secs(300), oracle_agreement),
        ("dual spectrum containment on 500 pairs", Duration::from_secs(60), dual_spectrum_containment),
        ("noise monotonicity of kappa*", Duration::from_secs(600), noise_monotonicity),
        ("eps*(eta) increasing and concave", Duration::from_secs(10), curve_shape),
        ("parallel composition transfer", Duration::from_secs(120), composition),
        ("angle-encoding neighbour distance", Duration::from_secs(10), encoding),
        ("post-processing does not raise kappa*", Duration::from_secs(120), post_processing),
        ("10-qubit depth-20 kappa via CLI", Duration::from_secs(300), performance),
    ];
    let mut failed = 0;
    for (i, (name, budget, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; over budget {budget:?}")),
            other => other,
        };
        match result {
            Ok(detail) => println!("PASS [{:>2}] {name} ({elapsed:.2?}): {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{:>2}] {name} ({elapsed:.2?}): {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
