//! Pipeline drivers behind the `mdm` command-line tool.
//!
//! The binary is a thin argument parser; everything it does lives here so
//! that integration tests can call the same code paths in-process. Three
//! entry points mirror the three subcommands:
//!
//! * [`execute_active_set`]: truncation threshold and active-set census for
//!   one `(beta, epsilon)` pair, the rows of a census table.
//! * [`execute_run`]: the full pipeline (tolerance, active set, point
//!   budgets, levels, coefficient tables, engine) for any of the seven
//!   methods, reporting the estimate, the evaluation count, the total error
//!   against a reference value, and per-stage timings.
//! * [`execute_reference`]: a randomized lattice estimate of the integral
//!   restricted to the first `dims` variables, used to produce reference
//!   values where no published constant applies.
//!
//! Reports are plain serde structs with a `schema` version tag; they are
//! written as JSON (one object per file) and optionally appended as flat
//! rows to a CSV for plotting. Both formats round-trip: parsing a report
//! and re-emitting it reproduces the bytes. Every field of a [`RunReport`]
//! except the wall-clock [`Timings`] is a deterministic function of the
//! [`RunSpec`], so two runs of the same spec agree bitwise after
//! [`RunReport::without_timings`].

use std::fs::OpenOptions;
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::iter::{IntoParallelIterator, ParallelIterator};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use mdm_core::active_set::{build_active_set, ActiveSet, DEFAULT_CARDINALITY_CAP};
use mdm_core::coeff_tables::{build_combination_tables, build_qmc_tables, build_smolyak_tables};
use mdm_core::decomposition::AnchoredIntegrand;
use mdm_core::integrands::{point_budget, qmc_levels, smolyak_levels, NormModel, TestIntegrand};
use mdm_core::kahan;
use mdm_core::lattice::{
    default_generating_vector, tent, LatticeSequence, Shift, DEFAULT_M_CAP,
};
use mdm_core::mdm::{
    mean_and_std_error, run_naive, run_qmc, run_rqmc, run_smolyak_combination, run_smolyak_direct,
    NaiveMethod,
};
use mdm_core::quad1d::Rule1dFamily;
use mdm_core::setkit::VarSet;
use mdm_core::tolerance::{compute_tolerance, ToleranceParams, ToleranceResult};
use mdm_core::Error as CoreError;

/// Version tag stamped into every emitted report.
pub const SCHEMA_VERSION: u32 = 1;

/// Published reference value of the benchmark integral at `beta = 3`.
pub const REFERENCE_BETA3: f64 = 1.1011984577041;

/// Parameters of the fallback reference run used when no reference value is
/// configured and no published constant applies: `2^16` lattice points over
/// the first 600 variables, averaged over 8 random shifts.
pub const AUTO_REFERENCE_M: u32 = 16;
pub const AUTO_REFERENCE_DIMS: usize = 600;
pub const AUTO_REFERENCE_SHIFTS: u32 = 8;

/// Driver-level error: either a failure surfaced from the computation
/// modules or an artifact problem (argument combination, file, format).
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("invalid arguments: {0}")]
    Invalid(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// Process exit code: 2 for validation and artifact errors, 3 when a
    /// numeric or capacity limit was hit during an otherwise valid run.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(
                CoreError::SetTooLarge
                | CoreError::NoAdmissibleAlpha
                | CoreError::EmptyActiveSet
                | CoreError::CardinalityCapHit
                | CoreError::LevelCapExceeded(_)
                | CoreError::CoefficientOverflow
                | CoreError::LatticeExhausted
                | CoreError::GeneratingVectorExhausted
                | CoreError::AnchoredTermTooLarge(_),
            ) => 3,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// The seven runnable methods. The three `naive-*` variants expand every
/// decomposition term by its alternating subset sum; they exist to check
/// the efficient engines and to measure the efficiency gap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Qmc,
    Rqmc,
    SmolyakDirect,
    SmolyakCt,
    NaiveQmc,
    NaiveSmolyakDirect,
    NaiveSmolyakCt,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Qmc => "qmc",
            Method::Rqmc => "rqmc",
            Method::SmolyakDirect => "smolyak-direct",
            Method::SmolyakCt => "smolyak-ct",
            Method::NaiveQmc => "naive-qmc",
            Method::NaiveSmolyakDirect => "naive-smolyak-direct",
            Method::NaiveSmolyakCt => "naive-smolyak-ct",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything a `run` invocation needs. Defaults mirror the CLI flags:
/// 16 shifts, seed 0, one thread (reproducibility first), series length
/// 1000, split 0.5, a 100-point grid for the threshold maximization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub method: Method,
    pub beta: f64,
    pub epsilon: f64,
    pub shifts: u32,
    pub seed: u64,
    pub threads: usize,
    pub s: u32,
    pub t: f64,
    pub alpha_grid: u32,
    /// Reference value for the total-error column; `None` selects the
    /// published constant at `beta = 3` and a fresh reference run otherwise.
    pub reference: Option<f64>,
}

impl RunSpec {
    pub fn new(method: Method, beta: f64, epsilon: f64) -> Self {
        RunSpec {
            method,
            beta,
            epsilon,
            shifts: 16,
            seed: 0,
            threads: 1,
            s: 1000,
            t: 0.5,
            alpha_grid: 100,
            reference: None,
        }
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.beta > 1.0 && self.beta.is_finite()) {
            return Err(CliError::Invalid("beta must exceed 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(CliError::Invalid("epsilon must be positive".into()));
        }
        if self.method == Method::Rqmc && self.shifts == 0 {
            return Err(CliError::Invalid(
                "the randomized method needs at least one shift".into(),
            ));
        }
        if self.threads == 0 {
            return Err(CliError::Invalid("threads must be at least 1".into()));
        }
        if let Some(r) = self.reference {
            if !r.is_finite() {
                return Err(CliError::Invalid("reference must be finite".into()));
            }
        }
        self.tolerance_params().validate()?;
        Ok(())
    }

    fn tolerance_params(&self) -> ToleranceParams {
        ToleranceParams {
            epsilon: self.epsilon,
            s: self.s,
            t: self.t,
            alpha_grid_size: self.alpha_grid,
        }
    }
}

/// Inputs of the `active-set` subcommand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetSpec {
    pub beta: f64,
    pub epsilon: f64,
    pub s: u32,
    pub t: f64,
    pub alpha_grid: u32,
}

impl ActiveSetSpec {
    pub fn new(beta: f64, epsilon: f64) -> Self {
        ActiveSetSpec {
            beta,
            epsilon,
            s: 1000,
            t: 0.5,
            alpha_grid: 100,
        }
    }
}

/// Wall-clock seconds per pipeline stage: active-set construction,
/// extension and table building, engine run. Excluded from the
/// reproducibility contract; everything else in a report is deterministic.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub t_act: f64,
    pub t_ext: f64,
    pub t_run: f64,
}

/// Census row for one `(beta, epsilon)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActiveSetReport {
    pub schema: u32,
    pub beta: f64,
    pub epsilon: f64,
    pub s: u32,
    pub t: f64,
    pub alpha_grid: u32,
    pub alpha_star: f64,
    pub sum_bound: f64,
    #[serde(rename = "T")]
    pub threshold: f64,
    /// Number of active sets including the empty set.
    pub total_sets: usize,
    pub d_sup: usize,
    pub tau: Vec<u32>,
    pub tau_star: u32,
    /// Sets per cardinality, `counts[l-1]` for cardinality `l`.
    pub counts: Vec<usize>,
    pub t_act: f64,
}

/// Full result of one `run` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub method: String,
    pub beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shifts: Option<u32>,
    pub threads: usize,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_shift: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
    pub eval_count: u64,
    pub reference: f64,
    pub total_error: f64,
    pub active_sets: usize,
    pub d_sup: usize,
    pub tau_star: u32,
    #[serde(rename = "T")]
    pub threshold: f64,
    pub alpha_star: f64,
    pub timings: Timings,
}

impl RunReport {
    /// Copy with the wall-clock fields zeroed, for comparing two runs of
    /// the same spec bitwise.
    pub fn without_timings(&self) -> RunReport {
        RunReport {
            timings: Timings::default(),
            ..self.clone()
        }
    }
}

/// Result of one `reference` invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceReport {
    pub schema: u32,
    pub beta: f64,
    pub m: u32,
    pub dims: usize,
    pub shifts: u32,
    pub seed: u64,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
    pub eval_count: u64,
    pub wall_time_s: f64,
}

/// Tolerance threshold and active set for one parameter pair, timed.
fn stage_active_set(
    beta: f64,
    tp: &ToleranceParams,
) -> CliResult<(ToleranceResult, ActiveSet, f64)> {
    tp.validate()?;
    let start = Instant::now();
    let nm = NormModel::new(beta)?;
    let weights = nm.pod_weights()?;
    let tol = compute_tolerance(&weights, tp)?;
    let active = build_active_set(&weights, tol.threshold, DEFAULT_CARDINALITY_CAP)?;
    Ok((tol, active, start.elapsed().as_secs_f64()))
}

/// Build the census row for one `(beta, epsilon)` pair. Returns the
/// constructed active set as well so callers can dump or reuse it.
pub fn execute_active_set(spec: &ActiveSetSpec) -> CliResult<(ActiveSetReport, ActiveSet)> {
    let tp = ToleranceParams {
        epsilon: spec.epsilon,
        s: spec.s,
        t: spec.t,
        alpha_grid_size: spec.alpha_grid,
    };
    let (tol, active, t_act) = stage_active_set(spec.beta, &tp)?;
    let summary = active.summary();
    let report = ActiveSetReport {
        schema: SCHEMA_VERSION,
        beta: spec.beta,
        epsilon: spec.epsilon,
        s: spec.s,
        t: spec.t,
        alpha_grid: spec.alpha_grid,
        alpha_star: tol.alpha_star,
        sum_bound: tol.sum_bound,
        threshold: tol.threshold,
        total_sets: summary.total_sets,
        d_sup: summary.d_sup,
        tau: summary.tau,
        tau_star: summary.tau_star,
        counts: summary.counts,
        t_act,
    };
    Ok((report, active))
}

/// Run the full pipeline for one spec inside a thread pool of the
/// requested size (1 by default, so results never depend on the machine).
pub fn execute_run(spec: &RunSpec) -> CliResult<RunReport> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.threads)
        .build()
        .map_err(|e| CliError::Invalid(format!("thread pool: {e}")))?;
    pool.install(|| execute_run_in_pool(spec))
}

fn execute_run_in_pool(spec: &RunSpec) -> CliResult<RunReport> {
    let (tol, active, t_act) = stage_active_set(spec.beta, &spec.tolerance_params())?;

    let stage = Instant::now();
    let nm = NormModel::new(spec.beta)?;
    let budgets = point_budget(&nm, &active, spec.epsilon)?;
    let integrand = TestIntegrand::new(spec.beta, active.tau_star().max(1))?;
    let fam = Rule1dFamily::trapezoidal();
    let seq = LatticeSequence::standard();
    // Lattice methods shift every coordinate the extension can reach; the
    // same seed therefore produces the same points in the efficient run and
    // in its naive counterpart.
    let shift = Shift::generate(spec.seed, 0, active.tau_star() as usize);

    let (engine, t_ext) = match spec.method {
        Method::SmolyakDirect => {
            let levels = smolyak_levels(&budgets, &fam)?;
            let tables = build_smolyak_tables(&active, &levels)?;
            let t_ext = stage.elapsed().as_secs_f64();
            (run_smolyak_direct(&tables, &fam, &integrand)?, t_ext)
        }
        Method::SmolyakCt => {
            let levels = smolyak_levels(&budgets, &fam)?;
            let tables = build_combination_tables(&active, &levels)?;
            let t_ext = stage.elapsed().as_secs_f64();
            (run_smolyak_combination(&tables, &fam, &integrand)?, t_ext)
        }
        Method::Qmc => {
            let levels = qmc_levels(&budgets, seq.m_cap())?;
            let tables = build_qmc_tables(&active, &levels)?;
            let t_ext = stage.elapsed().as_secs_f64();
            (run_qmc(&tables, &seq, &integrand, Some(&shift))?, t_ext)
        }
        Method::Rqmc => {
            let levels = qmc_levels(&budgets, seq.m_cap())?;
            let tables = build_qmc_tables(&active, &levels)?;
            let t_ext = stage.elapsed().as_secs_f64();
            (
                run_rqmc(&tables, &seq, &integrand, spec.shifts, spec.seed)?,
                t_ext,
            )
        }
        Method::NaiveSmolyakDirect => {
            let levels = smolyak_levels(&budgets, &fam)?;
            let t_ext = stage.elapsed().as_secs_f64();
            (
                run_naive(NaiveMethod::SmolyakDirect(&fam), &active, &levels, &integrand)?,
                t_ext,
            )
        }
        Method::NaiveSmolyakCt => {
            let levels = smolyak_levels(&budgets, &fam)?;
            let t_ext = stage.elapsed().as_secs_f64();
            (
                run_naive(
                    NaiveMethod::SmolyakCombination(&fam),
                    &active,
                    &levels,
                    &integrand,
                )?,
                t_ext,
            )
        }
        Method::NaiveQmc => {
            let levels = qmc_levels(&budgets, seq.m_cap())?;
            let t_ext = stage.elapsed().as_secs_f64();
            (
                run_naive(
                    NaiveMethod::Qmc(&seq, Some(&shift)),
                    &active,
                    &levels,
                    &integrand,
                )?,
                t_ext,
            )
        }
    };

    let reference = match spec.reference {
        Some(v) => v,
        None if spec.beta == 3.0 => REFERENCE_BETA3,
        None => {
            execute_reference(
                spec.beta,
                AUTO_REFERENCE_M,
                AUTO_REFERENCE_DIMS,
                AUTO_REFERENCE_SHIFTS,
                spec.seed,
            )?
            .estimate
        }
    };

    Ok(RunReport {
        schema: SCHEMA_VERSION,
        method: engine.method.clone(),
        beta: spec.beta,
        epsilon: spec.epsilon,
        seed: spec.seed,
        shifts: engine.config.shifts,
        threads: spec.threads,
        estimate: engine.estimate,
        per_shift: engine.per_shift.clone(),
        std_error: engine.std_error,
        eval_count: engine.eval_count,
        reference,
        total_error: (engine.estimate - reference).abs(),
        active_sets: active.len(),
        d_sup: active.d_sup(),
        tau_star: active.tau_star(),
        threshold: tol.threshold,
        alpha_star: tol.alpha_star,
        timings: Timings {
            t_act,
            t_ext,
            t_run: engine.wall_time_s,
        },
    })
}

/// Generating vector for a reference run. Up to 20 coordinates this is the
/// published vector; beyond that it is extended with odd multipliers drawn
/// from a dedicated stream (`u64::MAX`, never used for shifts) of the run's
/// seed, so a fixed seed fixes the whole lattice.
fn reference_lattice(dims: usize, seed: u64) -> LatticeSequence {
    let mut z = default_generating_vector();
    if dims > z.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX);
        while z.len() < dims {
            z.push(2 * rng.random_range(0..1u64 << (DEFAULT_M_CAP - 1)) + 1);
        }
    }
    LatticeSequence::new(z, DEFAULT_M_CAP).expect("odd multipliers are positive")
}

/// Randomized lattice estimate of the integral restricted to the first
/// `dims` variables: `2^m` points, `shifts` independent random shifts,
/// plain averages in 64-bit arithmetic. With `dims = 0` the restriction is
/// the constant `f(0) = 1` and the estimate is exactly 1.
pub fn execute_reference(
    beta: f64,
    m: u32,
    dims: usize,
    shifts: u32,
    seed: u64,
) -> CliResult<ReferenceReport> {
    if m > DEFAULT_M_CAP {
        return Err(CliError::Core(CoreError::LatticeExhausted));
    }
    if shifts == 0 {
        return Err(CliError::Invalid("at least one shift is required".into()));
    }
    if dims > u32::MAX as usize {
        return Err(CliError::Invalid("dims exceeds the index range".into()));
    }
    let start = Instant::now();
    let integrand = TestIntegrand::new(beta, dims as u32)?;
    let seq = reference_lattice(dims, seed);
    let full = VarSet::first_n(dims as u32);
    let n = 1u64 << m;
    let per_shift: Vec<f64> = (0..shifts)
        .into_par_iter()
        .map(|q| {
            let sh = Shift::generate(seed, u64::from(q), dims);
            let delta = sh.delta();
            let mut x = vec![0.0; dims];
            let mut sum = kahan::Sum::new();
            for i in 0..n {
                for (j, xj) in x.iter_mut().enumerate() {
                    *xj = tent((seq.coordinate(i, j) + delta[j]).fract());
                }
                sum.add(integrand.eval(&full, &x));
            }
            sum.value() / n as f64
        })
        .collect();
    let (estimate, std_error) = mean_and_std_error(&per_shift);
    Ok(ReferenceReport {
        schema: SCHEMA_VERSION,
        beta,
        m,
        dims,
        shifts,
        seed,
        estimate,
        std_error,
        eval_count: u64::from(shifts) * n,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Flat CSV projection of a [`RunReport`]; the variable-length `per_shift`
/// column stays in the JSON report only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub schema: u32,
    pub method: String,
    pub beta: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub shifts: Option<u32>,
    pub threads: usize,
    pub estimate: f64,
    pub std_error: Option<f64>,
    pub eval_count: u64,
    pub reference: f64,
    pub total_error: f64,
    pub active_sets: usize,
    pub d_sup: usize,
    pub tau_star: u32,
    #[serde(rename = "T")]
    pub threshold: f64,
    pub alpha_star: f64,
    pub t_act: f64,
    pub t_ext: f64,
    pub t_run: f64,
}

impl From<&RunReport> for CsvRow {
    fn from(r: &RunReport) -> Self {
        CsvRow {
            schema: r.schema,
            method: r.method.clone(),
            beta: r.beta,
            epsilon: r.epsilon,
            seed: r.seed,
            shifts: r.shifts,
            threads: r.threads,
            estimate: r.estimate,
            std_error: r.std_error,
            eval_count: r.eval_count,
            reference: r.reference,
            total_error: r.total_error,
            active_sets: r.active_sets,
            d_sup: r.d_sup,
            tau_star: r.tau_star,
            threshold: r.threshold,
            alpha_star: r.alpha_star,
            t_act: r.timings.t_act,
            t_ext: r.timings.t_ext,
            t_run: r.timings.t_run,
        }
    }
}

/// Append one row to a CSV file, writing the header only when the file is
/// new or empty.
pub fn append_csv(path: &Path, report: &RunReport) -> CliResult<()> {
    let header = match std::fs::metadata(path) {
        Ok(md) => md.len() == 0,
        Err(_) => true,
    };
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(header)
        .from_writer(file);
    w.serialize(CsvRow::from(report))?;
    w.flush()?;
    Ok(())
}

/// Parse every row of a run CSV.
pub fn read_csv(path: &Path) -> CliResult<Vec<CsvRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let rows = rdr
        .deserialize()
        .collect::<std::result::Result<Vec<CsvRow>, _>>()?;
    Ok(rows)
}

/// Re-emit rows exactly as [`append_csv`] writes them (header first).
pub fn csv_to_string(rows: &[CsvRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Invalid(format!("csv buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Write a report as pretty JSON with a trailing newline.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_are_the_cli_spellings() {
        let all = [
            (Method::Qmc, "qmc"),
            (Method::Rqmc, "rqmc"),
            (Method::SmolyakDirect, "smolyak-direct"),
            (Method::SmolyakCt, "smolyak-ct"),
            (Method::NaiveQmc, "naive-qmc"),
            (Method::NaiveSmolyakDirect, "naive-smolyak-direct"),
            (Method::NaiveSmolyakCt, "naive-smolyak-ct"),
        ];
        for (m, name) in all {
            assert_eq!(m.as_str(), name);
            assert_eq!(m.to_string(), name);
            // clap's value parsing and serde agree on the spelling.
            let v: Method = serde_json::from_str(&format!("\"{name}\"")).unwrap();
            assert_eq!(v, m);
        }
    }

    #[test]
    fn exit_codes_distinguish_validation_from_capacity() {
        assert_eq!(CliError::from(CoreError::LatticeExhausted).exit_code(), 3);
        assert_eq!(CliError::from(CoreError::EmptyActiveSet).exit_code(), 3);
        assert_eq!(
            CliError::from(CoreError::AnchoredTermTooLarge(31)).exit_code(),
            3
        );
        assert_eq!(
            CliError::from(CoreError::InvalidParameter("x".into())).exit_code(),
            2
        );
        assert_eq!(CliError::Invalid("x".into()).exit_code(), 2);
    }

    #[test]
    fn run_spec_validation_catches_bad_inputs() {
        let good = RunSpec::new(Method::Qmc, 3.0, 1e-1);
        good.validate().unwrap();
        let mut bad = good;
        bad.beta = 1.0;
        assert!(bad.validate().is_err());
        bad = good;
        bad.epsilon = 0.0;
        assert!(bad.validate().is_err());
        bad = good;
        bad.method = Method::Rqmc;
        bad.shifts = 0;
        assert!(bad.validate().is_err());
        bad = good;
        bad.threads = 0;
        assert!(bad.validate().is_err());
        bad = good;
        bad.t = 1.0;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn reference_with_no_variables_is_exactly_one() {
        let rep = execute_reference(3.0, 5, 0, 4, 9).unwrap();
        assert_eq!(rep.estimate, 1.0);
        assert_eq!(rep.std_error, Some(0.0));
        assert_eq!(rep.eval_count, 4 * 32);
    }

    #[test]
    fn reference_in_one_variable_matches_the_log_antiderivative() {
        // The restriction to the first variable integrates 1/(1+x) over
        // [-1/2, 1/2], whose exact value is ln 3.
        let rep = execute_reference(3.0, 20, 1, 16, 0).unwrap();
        assert!((rep.estimate - 3f64.ln()).abs() <= 1e-9, "{}", rep.estimate);
        assert!(rep.std_error.unwrap() < 1e-9);
        assert_eq!(rep.eval_count, 16 << 20);
    }

    #[test]
    fn reference_lattice_extension_is_odd_and_seed_stable() {
        let a = reference_lattice(40, 5);
        let b = reference_lattice(40, 5);
        let c = reference_lattice(40, 6);
        assert_eq!(a.generating_vector(), b.generating_vector());
        assert_ne!(a.generating_vector(), c.generating_vector());
        assert_eq!(
            &a.generating_vector()[..20],
            default_generating_vector().as_slice()
        );
        for &z in &a.generating_vector()[20..] {
            assert_eq!(z % 2, 1);
            assert!(z < 1 << DEFAULT_M_CAP);
        }
    }

    #[test]
    fn csv_rows_round_trip_through_text() {
        let rows = vec![
            CsvRow {
                schema: SCHEMA_VERSION,
                method: "rqmc".into(),
                beta: 3.0,
                epsilon: 1e-2,
                seed: 42,
                shifts: Some(16),
                threads: 2,
                estimate: 1.1011976,
                std_error: Some(1.7e-5),
                eval_count: 148_949,
                reference: REFERENCE_BETA3,
                total_error: 7.8e-7,
                active_sets: 5111,
                d_sup: 6,
                tau_star: 418,
                threshold: 3.5738654285374746e-8,
                alpha_star: 2.0,
                t_act: 0.01,
                t_ext: 0.02,
                t_run: 0.33,
            },
            CsvRow {
                schema: SCHEMA_VERSION,
                method: "smolyak-direct".into(),
                beta: 4.0,
                epsilon: 1e-1,
                seed: 0,
                shifts: None,
                threads: 1,
                estimate: 1.05,
                std_error: None,
                eval_count: 99,
                reference: 1.05,
                total_error: 0.0,
                active_sets: 27,
                d_sup: 3,
                tau_star: 10,
                threshold: 1.404175655819543e-4,
                alpha_star: 2.35,
                t_act: 0.0,
                t_ext: 0.0,
                t_run: 0.0,
            },
        ];
        let text = csv_to_string(&rows).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let back: Vec<CsvRow> = rdr.deserialize().map(|r| r.unwrap()).collect();
        assert_eq!(back, rows);
        assert_eq!(csv_to_string(&back).unwrap(), text);
    }

    #[test]
    fn run_reports_round_trip_through_json() {
        let spec = RunSpec::new(Method::Rqmc, 3.0, 1e-1);
        let report = execute_run(&spec).unwrap();
        let text = serde_json::to_string_pretty(&report).unwrap();
        let back: RunReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(serde_json::to_string_pretty(&back).unwrap(), text);
    }

    #[test]
    fn same_spec_reproduces_bitwise_up_to_timings() {
        let mut spec = RunSpec::new(Method::Rqmc, 3.0, 1e-1);
        spec.seed = 11;
        spec.shifts = 4;
        let a = execute_run(&spec).unwrap();
        let b = execute_run(&spec).unwrap();
        assert_eq!(a.without_timings(), b.without_timings());
        // A different seed must move the randomized estimate.
        spec.seed = 12;
        let c = execute_run(&spec).unwrap();
        assert_ne!(a.estimate, c.estimate);
    }

    #[test]
    fn run_report_carries_census_and_reference_fields() {
        let mut spec = RunSpec::new(Method::Qmc, 3.0, 1e-1);
        spec.seed = 7;
        let report = execute_run(&spec).unwrap();
        assert_eq!(report.schema, SCHEMA_VERSION);
        assert_eq!(report.method, "qmc");
        assert_eq!(report.active_sets, 564);
        assert_eq!(report.d_sup, 5);
        assert_eq!(report.tau_star, 86);
        assert_eq!(report.reference, REFERENCE_BETA3);
        assert_eq!(
            report.total_error,
            (report.estimate - REFERENCE_BETA3).abs()
        );
        assert!(report.shifts.is_none());
        assert!(report.per_shift.is_none());
        // The override takes precedence over the published constant.
        spec.reference = Some(1.5);
        let with_ref = execute_run(&spec).unwrap();
        assert_eq!(with_ref.reference, 1.5);
        assert_eq!(with_ref.estimate, report.estimate);
    }
}
