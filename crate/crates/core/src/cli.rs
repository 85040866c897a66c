//! File formats and subcommands behind the `qdpv` binary.
//!
//! Exit codes: 0 success (private / no violation), 2 violation found, 1 error.
//! Errors are reported on stderr as `{"error": {"code": ..., "message": ...}}`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{QdpError, Result};
use crate::linalg::{hermitize, ComplexMatrix, C64};
use crate::model::{
    circuit_to_layered, Circuit, DensityMatrix, GateKind, GateSpec, LayeredChannel, LocalOp, NoiseInjection, NoiseKind,
    NoisePlacement, Povm, QuantumAlgorithm,
};
use crate::oracle::{check_counterexample, violation_search_report, ViolationWitness};
use crate::verifier::{
    compose_parallel, epsilon_curve_for_kappa, max_condition_number, optimal_epsilon, verify_dp, Counterexample, DpParams,
    SubsetReport, Verdict, VerifyOptions, DEFAULT_SUBSET_CAP, REPORT_TOP_K,
};

pub const SCHEMA_VERSION: &str = "1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;

/// `η` values always tabulated in reports, next to the requested one.
const ETA_TABLE: [f64; 8] = [0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0];

/// Dense complex matrix, row-major, entries as `[re, im]`.
pub type MatrixRecord = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_record(m: &ComplexMatrix) -> MatrixRecord {
    m.to_rows().iter().map(|row| row.iter().map(|z| [z.re, z.im]).collect()).collect()
}

pub fn matrix_from_record(rows: &MatrixRecord) -> Result<ComplexMatrix> {
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect();
    ComplexMatrix::from_rows(&rows)
}

/// Reals that may be infinite or undefined, written as numbers, `"inf"` or `"nan"`.
mod ext_real {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if x.is_nan() {
            s.serialize_str("nan")
        } else if x.is_infinite() {
            s.serialize_str(if *x > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(t) => match t.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number or \"inf\", got `{other}`"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub params: Vec<f64>,
    pub targets: Vec<usize>,
}

impl GateRecord {
    fn to_spec(&self) -> Result<GateSpec> {
        Ok(GateSpec::new(self.name.parse::<GateKind>()?, self.params.clone(), self.targets.clone()))
    }
}

/// Explicit Kraus operators acting on `targets`, applied after the circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub targets: Vec<usize>,
    pub operators: Vec<MatrixRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MeasurementRecord {
    Computational {
        qubits: Vec<usize>,
    },
    Explicit {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        elements: Vec<MatrixRecord>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmFile {
    pub schema_version: String,
    pub n_qubits: usize,
    #[serde(default)]
    pub gates: Vec<GateRecord>,
    #[serde(default)]
    pub noise: NoiseInjection,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages: Vec<StageRecord>,
    pub measurement: MeasurementRecord,
}

impl AlgorithmFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: Self = serde_json::from_str(s).map_err(|e| QdpError::Parse(e.to_string()))?;
        if f.schema_version != SCHEMA_VERSION {
            return Err(QdpError::Parse(format!("unsupported schema_version `{}`", f.schema_version)));
        }
        Ok(f)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&read_text(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn circuit(&self) -> Result<Circuit> {
        let gates = self.gates.iter().map(GateRecord::to_spec).collect::<Result<Vec<_>>>()?;
        Circuit::new(self.n_qubits, gates)
    }

    pub fn channel(&self) -> Result<LayeredChannel> {
        let mut layered = circuit_to_layered(&self.circuit()?, &self.noise)?;
        for stage in &self.stages {
            let ops = stage.operators.iter().map(matrix_from_record).collect::<Result<Vec<_>>>()?;
            layered.push(LocalOp::new(stage.targets.clone(), ops)?)?;
        }
        Ok(layered)
    }

    pub fn povm(&self, subset_cap: usize) -> Result<Povm> {
        let povm = match &self.measurement {
            MeasurementRecord::Computational { qubits } => {
                let q = qubits.len();
                if q >= usize::BITS as usize || 1usize << q > subset_cap {
                    return Err(QdpError::ResourceLimit(format!(
                        "measuring {q} qubits gives 2^{q} outcomes, above the subset cap {subset_cap}; raise --subset-cap"
                    )));
                }
                Povm::computational(self.n_qubits, qubits)?
            }
            MeasurementRecord::Explicit { labels, elements } => {
                let elements = elements
                    .iter()
                    .map(|m| hermitize(matrix_from_record(m)?))
                    .collect::<Result<Vec<_>>>()?;
                match labels {
                    Some(l) => Povm::new(l.clone(), elements)?,
                    None => Povm::with_default_labels(elements)?,
                }
            }
        };
        if povm.len() > subset_cap {
            return Err(QdpError::ResourceLimit(format!(
                "{} outcomes exceed the subset cap {subset_cap}; raise --subset-cap",
                povm.len()
            )));
        }
        Ok(povm)
    }

    pub fn to_algorithm(&self, subset_cap: usize) -> Result<QuantumAlgorithm> {
        QuantumAlgorithm::new(self.channel()?, self.povm(subset_cap)?)
    }

    /// File describing an arbitrary algorithm: no gates, the channel as
    /// explicit stages and the measurement as explicit elements.
    pub fn from_algorithm(a: &QuantumAlgorithm) -> Self {
        let stages = a
            .channel()
            .to_layered()
            .ops()
            .iter()
            .map(|op| StageRecord { targets: op.targets().to_vec(), operators: op.kraus().iter().map(matrix_to_record).collect() })
            .collect();
        let elements = a.povm().elements().iter().map(|m| matrix_to_record(m.matrix())).collect();
        Self {
            schema_version: SCHEMA_VERSION.into(),
            n_qubits: a.n_qubits(),
            gates: Vec::new(),
            noise: NoiseInjection::none(),
            stages,
            measurement: MeasurementRecord::Explicit { labels: Some(a.povm().labels().to_vec()), elements },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsRecord {
    pub epsilon: f64,
    pub delta: f64,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub subset: Vec<String>,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub delta_s: f64,
    #[serde(with = "ext_real")]
    pub kappa: f64,
}

impl From<&SubsetReport> for SubsetRecord {
    fn from(r: &SubsetReport) -> Self {
        Self {
            subset: r.subset.clone(),
            lambda_max: r.lambda_max,
            lambda_min: r.lambda_min,
            delta_s: r.delta_s,
            kappa: r.kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsStarRow {
    pub eta: f64,
    #[serde(with = "ext_real")]
    pub eps_star: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub gamma: MatrixRecord,
    pub phi: MatrixRecord,
    pub witness_subset: Vec<String>,
    pub violation_amount: f64,
    pub eta_used: f64,
}

impl WitnessRecord {
    pub fn from_counterexample(c: &Counterexample) -> Self {
        Self {
            gamma: matrix_to_record(c.gamma.matrix().matrix()),
            phi: matrix_to_record(c.phi.matrix().matrix()),
            witness_subset: c.witness_subset.clone(),
            violation_amount: c.violation_amount,
            eta_used: c.eta_used,
        }
    }

    pub fn to_counterexample(&self) -> Result<Counterexample> {
        Ok(Counterexample {
            gamma: DensityMatrix::from_matrix(matrix_from_record(&self.gamma)?)?,
            phi: DensityMatrix::from_matrix(matrix_from_record(&self.phi)?)?,
            witness_subset: self.witness_subset.clone(),
            violation_amount: self.violation_amount,
            eta_used: self.eta_used,
        })
    }
}

/// A sampled violating pair from the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPairRecord {
    pub rho: MatrixRecord,
    pub sigma: MatrixRecord,
    pub subset: Vec<String>,
    pub margin: f64,
}

impl From<&ViolationWitness> for SampledPairRecord {
    fn from(w: &ViolationWitness) -> Self {
        Self {
            rho: matrix_to_record(w.rho.matrix().matrix()),
            sigma: matrix_to_record(w.sigma.matrix().matrix()),
            subset: w.subset.clone(),
            margin: w.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheckRecord {
    pub trials: usize,
    pub seed: u64,
    pub oracle_violation: bool,
    pub best_excess: f64,
    pub agrees: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input_sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: String,
    pub command: String,
    pub params: ParamsRecord,
    /// Absent for commands that do not decide privacy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub private: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_star: Option<f64>,
    #[serde(with = "ext_real")]
    pub kappa_star: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_subset: Option<Vec<String>>,
    pub eps_star: Vec<EpsStarRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled_violation: Option<SampledPairRecord>,
    /// Largest-`δ_S` subsets, at most 32.
    #[serde(default)]
    pub per_subset: Vec<SubsetRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cross_check: Option<CrossCheckRecord>,
    pub provenance: Provenance,
}

impl ReportFile {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| QdpError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json_str(&read_text(path)?)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn dp_params(&self) -> Result<DpParams> {
        DpParams::new(self.params.epsilon, self.params.delta, self.params.eta)
    }

    /// Replays the stored witness against `a`. `None` when there is no witness.
    pub fn replay(&self, a: &QuantumAlgorithm) -> Result<Option<bool>> {
        match &self.witness {
            None => Ok(None),
            Some(w) => Ok(Some(check_counterexample(a, &w.to_counterexample()?, &self.dp_params()?)?)),
        }
    }
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| QdpError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| QdpError::Io(format!("{}: {e}", path.display())))
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn eps_star_table(kappa_star: f64, extra_eta: f64) -> Vec<EpsStarRow> {
    let mut etas: Vec<f64> = ETA_TABLE.to_vec();
    if !etas.contains(&extra_eta) {
        etas.push(extra_eta);
    }
    etas.sort_by(f64::total_cmp);
    etas.into_iter().map(|eta| EpsStarRow { eta, eps_star: optimal_epsilon(kappa_star, eta) }).collect()
}

/// Parses `a,b,c` or `start:stop:count` (inclusive, evenly spaced).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = |why: &str| QdpError::InvalidInput(format!("bad eta grid `{spec}`: {why}"));
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad(&format!("`{t}` is not a number")));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, count] => {
            let (a, b) = (num(start)?, num(stop)?);
            let n: usize = count.trim().parse().map_err(|_| bad("count must be a positive integer"))?;
            match n {
                0 => return Err(bad("count must be a positive integer")),
                1 => vec![a],
                _ => (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect(),
            }
        }
        [_] => spec.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected a comma list or start:stop:count")),
    };
    if grid.is_empty() {
        return Err(bad("empty"));
    }
    Ok(grid)
}

fn parse_labels(spec: &str) -> Vec<String> {
    spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn fmt_real(x: f64) -> String {
    if x.is_infinite() {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn fmt_subset(s: &[String]) -> String {
    format!("{{{}}}", s.join(","))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseFlag {
    Depolarizing,
    #[value(name = "bit_flip")]
    BitFlip,
}

impl From<NoiseFlag> for NoiseKind {
    fn from(n: NoiseFlag) -> Self {
        match n {
            NoiseFlag::Depolarizing => NoiseKind::Depolarizing,
            NoiseFlag::BitFlip => NoiseKind::BitFlip,
        }
    }
}

#[derive(Debug, Clone, clap::Args)]
pub struct InputArgs {
    /// Algorithm file (JSON).
    pub input: PathBuf,

    /// Maximum number of measurement outcomes to enumerate subsets over.
    #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
    pub subset_cap: usize,

    /// Override the file's noise family.
    #[arg(long, value_enum, requires = "p")]
    pub noise: Option<NoiseFlag>,

    /// Noise probability for --noise.
    #[arg(long)]
    pub p: Option<f64>,
}

impl InputArgs {
    fn load(&self) -> Result<(AlgorithmFile, QuantumAlgorithm, String)> {
        let text = read_text(&self.input)?;
        let mut file = AlgorithmFile::from_json_str(&text)?;
        if let Some(kind) = self.noise {
            let placement = match file.noise.placement {
                NoisePlacement::None => NoisePlacement::default(),
                other => other,
            };
            file.noise = NoiseInjection { kind: kind.into(), p: self.p.unwrap_or(0.0), placement };
        } else if self.p.is_some() {
            return Err(QdpError::InvalidInput("--p needs --noise".into()));
        }
        let alg = file.to_algorithm(self.subset_cap)?;
        Ok((file, alg, sha256_hex(text.as_bytes())))
    }

    fn options(&self) -> VerifyOptions {
        VerifyOptions { subset_cap: self.subset_cap, ..VerifyOptions::default() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "qdpv", version, about = "Differential-privacy verifier for noisy quantum algorithms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide (ε, δ)-differential privacy within η.
    Verify {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        /// Report file (JSON).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also run the sampling oracle and record whether it agrees.
        #[arg(long)]
        cross_check: bool,
        #[arg(long, default_value_t = 10_000)]
        oracle_trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximum condition number κ* and its witness pair.
    Kappa {
        #[command(flatten)]
        input: InputArgs,
        /// Neighbourhood used to build the witness pair.
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Optimal ε*(η) on a grid, as `eta,eps_star` CSV.
    Curve {
        #[command(flatten)]
        input: InputArgs,
        /// Comma list (`0.1,0.5,1`) or `start:stop:count`.
        #[arg(long, default_value = "0.02:1:50")]
        grid: String,
        /// CSV file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parallel composition of two algorithms on chosen outcome subsets.
    Compose {
        first: PathBuf,
        second: PathBuf,
        /// Comma-separated outcome labels of the first algorithm.
        #[arg(long)]
        s1: String,
        /// Comma-separated outcome labels of the second algorithm.
        #[arg(long)]
        s2: String,
        #[arg(long, default_value_t = DEFAULT_SUBSET_CAP)]
        subset_cap: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Randomized search for a violating state pair.
    Search {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.0)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit code plus the text destined for stdout.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

pub fn execute(cmd: &Command) -> Result<Outcome> {
    let started = Instant::now();
    let provenance = |digest: String, seed: Option<u64>| Provenance {
        input_sha256: digest,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    match cmd {
        Command::Verify { input, eps, delta, eta, out, cross_check, oracle_trials, seed } => {
            let p = DpParams::new(*eps, *delta, *eta)?;
            let (_, alg, digest) = input.load()?;
            let v = verify_dp(&alg, &p, &input.options())?;
            let cross = if *cross_check {
                let r = violation_search_report(&alg, &p, *oracle_trials, *seed, true)?;
                let found = r.witness.is_some();
                Some(CrossCheckRecord {
                    trials: r.trials,
                    seed: *seed,
                    oracle_violation: found,
                    best_excess: r.best_excess,
                    agrees: !(found && v.private),
                })
            } else {
                None
            };
            let mut text = verdict_summary(&v);
            if let Some(c) = &cross {
                let _ = writeln!(
                    text,
                    "oracle: {} after {} trials (best excess {}), {}",
                    if c.oracle_violation { "violation" } else { "no violation" },
                    c.trials,
                    c.best_excess,
                    if c.agrees { "agrees" } else { "DISAGREES" }
                );
            }
            let report = ReportFile {
                schema_version: SCHEMA_VERSION.into(),
                command: "verify".into(),
                params: ParamsRecord { epsilon: p.epsilon, delta: p.delta, eta: p.eta },
                private: Some(v.private),
                delta_star: Some(v.delta_star),
                kappa_star: v.kappa_star,
                kappa_subset: None,
                eps_star: eps_star_table(v.kappa_star, p.eta),
                witness: v.witness.as_ref().map(WitnessRecord::from_counterexample),
                sampled_violation: None,
                per_subset: v.top_subsets(REPORT_TOP_K).into_iter().map(SubsetRecord::from).collect(),
                cross_check: cross.clone(),
                provenance: provenance(digest, cross.map(|_| *seed)),
            };
            if let Some(path) = out {
                write_text(path, &report.to_json_string())?;
            }
            Ok(Outcome { code: if v.private { EXIT_OK } else { EXIT_VIOLATION }, stdout: text })
        }
        Command::Kappa { input, eta, out } => {
            let (_, alg, digest) = input.load()?;
            let k = max_condition_number(&alg, *eta, &input.options())?;
            let mut text = String::new();
            let _ = writeln!(text, "kappa*: {}", fmt_real(k.kappa_star));
            let _ = writeln!(text, "subset: {}", fmt_subset(&k.report.subset));
            let _ = writeln!(text, "eps*(eta={eta}): {}", fmt_real(optimal_epsilon(k.kappa_star, *eta)));
            let mut per: Vec<&SubsetReport> = k.per_subset.iter().collect();
            per.sort_by(|a, b| b.kappa.total_cmp(&a.kappa));
            per.truncate(REPORT_TOP_K);
            let report = ReportFile {
                schema_version: SCHEMA_VERSION.into(),
                command: "kappa".into(),
                params: ParamsRecord { epsilon: 0.0, delta: 0.0, eta: *eta },
                private: None,
                delta_star: None,
                kappa_star: k.kappa_star,
                kappa_subset: Some(k.report.subset.clone()),
                eps_star: eps_star_table(k.kappa_star, *eta),
                witness: Some(WitnessRecord::from_counterexample(&k.witness)),
                sampled_violation: None,
                per_subset: per.into_iter().map(SubsetRecord::from).collect(),
                cross_check: None,
                provenance: provenance(digest, None),
            };
            if let Some(path) = out {
                write_text(path, &report.to_json_string())?;
            }
            Ok(Outcome { code: EXIT_OK, stdout: text })
        }
        Command::Curve { input, grid, out } => {
            let etas = parse_grid(grid)?;
            let (_, alg, _) = input.load()?;
            let kappa = max_condition_number(&alg, 1.0, &input.options())?.kappa_star;
            let mut csv = String::from("eta,eps_star\n");
            for (eta, eps) in epsilon_curve_for_kappa(kappa, &etas)? {
                let _ = writeln!(csv, "{eta},{}", fmt_real(eps));
            }
            match out {
                Some(path) => {
                    write_text(path, &csv)?;
                    Ok(Outcome { code: EXIT_OK, stdout: format!("kappa*: {}\n", fmt_real(kappa)) })
                }
                None => Ok(Outcome { code: EXIT_OK, stdout: csv }),
            }
        }
        Command::Compose { first, second, s1, s2, subset_cap, out } => {
            let a1 = AlgorithmFile::load(first)?.to_algorithm(*subset_cap)?;
            let a2 = AlgorithmFile::load(second)?.to_algorithm(*subset_cap)?;
            let c = compose_parallel(&a1, &parse_labels(s1), &a2, &parse_labels(s2))?;
            write_text(out, &AlgorithmFile::from_algorithm(&c).to_json_string())?;
            Ok(Outcome { code: EXIT_OK, stdout: format!("composed {} qubits, 2 outcomes\n", c.n_qubits()) })
        }
        Command::Search { input, eps, delta, eta, seed, trials, out } => {
            let p = DpParams::new(*eps, *delta, *eta)?;
            let (_, alg, digest) = input.load()?;
            let r = violation_search_report(&alg, &p, *trials, *seed, true)?;
            let mut text = String::new();
            match &r.witness {
                Some(w) => {
                    let _ = writeln!(text, "violation on {} with margin {}", fmt_subset(&w.subset), w.margin);
                }
                None => {
                    let _ = writeln!(text, "no violation in {} trials", r.trials);
                }
            }
            let _ = writeln!(text, "best excess: {}", r.best_excess);
            if let Some(path) = out {
                let report = ReportFile {
                    schema_version: SCHEMA_VERSION.into(),
                    command: "search".into(),
                    params: ParamsRecord { epsilon: p.epsilon, delta: p.delta, eta: p.eta },
                    private: None,
                    delta_star: None,
                    kappa_star: f64::NAN,
                    kappa_subset: None,
                    eps_star: Vec::new(),
                    witness: None,
                    sampled_violation: r.witness.as_ref().map(SampledPairRecord::from),
                    per_subset: Vec::new(),
                    cross_check: None,
                    provenance: provenance(digest, Some(*seed)),
                };
                write_text(path, &report.to_json_string())?;
            }
            Ok(Outcome { code: if r.witness.is_some() { EXIT_VIOLATION } else { EXIT_OK }, stdout: text })
        }
    }
}

fn verdict_summary(v: &Verdict) -> String {
    let mut text = String::new();
    let _ = writeln!(text, "private: {}", v.private);
    let _ = writeln!(text, "delta*: {}", v.delta_star);
    let _ = writeln!(text, "kappa*: {}", fmt_real(v.kappa_star));
    if let Some(c) = &v.witness {
        let _ = writeln!(text, "S*: {}", fmt_subset(&c.witness_subset));
        let _ = writeln!(
            text,
            "witness: gamma = eta psi + (1 - eta) phi with eta = {}, {}x{} states, violation {}",
            c.eta_used,
            c.gamma.dim(),
            c.gamma.dim(),
            c.violation_amount
        );
    }
    text
}

/// Machine-readable error record for stderr.
pub fn error_record(e: &QdpError) -> String {
    serde_json::json!({ "error": { "code": e.code(), "message": e.to_string() } }).to_string()
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            eprintln!("{}", error_record(&QdpError::InvalidInput(e.to_string().trim().to_string())));
            return EXIT_ERROR;
        }
    };
    match execute(&cli.command) {
        Ok(o) => {
            print!("{}", o.stdout);
            o.code
        }
        Err(e) => {
            eprintln!("{}", error_record(&e));
            EXIT_ERROR
        }
    }
}
