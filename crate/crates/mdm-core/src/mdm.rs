//! The decomposition-method engines.
//!
//! Every engine estimates the same quantity: the sum over the active set of
//! the integrals of the anchored terms. The efficient engines never expand
//! an anchored term; they regroup the alternating subset sums into the
//! precomputed coefficient tables, so each quadrature rule (sparse-grid
//! engines) or each lattice block sum (lattice engines) is evaluated once
//! and shared by every active set it serves:
//!
//! * [`run_smolyak_direct`]: `c_empty f(0) + sum c(v,m) Q(v,m)` with `Q`
//!   the nested sparse-grid rule.
//! * [`run_smolyak_combination`]: same with the top combination layer
//!   `Q~(v,m)` and the matching collapsed coefficients.
//! * [`run_qmc`]: `c_empty f(0) + sum c(v,w,m) S(v,w,m) / 2^m_max`, where
//!   `S` sums the integrand over one dyadic block of the lattice, reading
//!   lattice coordinates at the positions `w` and (optionally) shifting by
//!   a vector indexed by the variable indices `v`.
//! * [`run_rqmc`]: the mean of independent randomly shifted lattice runs,
//!   with the standard error of the mean in the centered form.
//!
//! The naive oracle [`run_naive`] evaluates the decomposition term by term,
//! expanding each term by its alternating subset sum at every quadrature
//! node, with the very same rules, point streams, and shifts as the
//! matching efficient engine; estimates agree to rounding while evaluation
//! counts differ by the efficiency factor.
//!
//! All accumulation is compensated 64-bit arithmetic. Work items (one per
//! coefficient-table entry, one per active term for the naive oracle) are
//! processed in parallel but collected in a fixed deterministic order and
//! reduced sequentially, so results are bitwise reproducible for a given
//! seed regardless of thread count.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::active_set::ActiveSet;
use crate::coeff_tables::{CombinationTables, LevelAssignment, MTable, QmcTables, SmolyakTables};
use crate::decomposition::{anchored_term, AnchoredIntegrand, Counting, MAX_TERM_CARDINALITY};
use crate::kahan;
use crate::lattice::{block_range, tent, LatticeSequence, Shift};
use crate::quad1d::Rule1dFamily;
use crate::setkit::{SetStore, VarSet};
use crate::smolyak::{combination_assembly, combination_rule, smolyak_direct};
use crate::{Error, Result};

/// Echo of the run parameters, carried inside [`MdmReport`]. Engines fill
/// what they know (seed and shift count for the randomized engine); the
/// caller may fill the rest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub epsilon: Option<f64>,
    /// Work/accuracy exponent of the point-budget model.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    /// Number of random shifts `r` (randomized engine only).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub shifts: Option<u32>,
}

/// Result of one engine run.
///
/// For the randomized engine, `estimate` is the mean of `per_shift` and
/// `std_error` is `sqrt(sum (A_q - mean)^2 / (r (r-1)))`; both are absent
/// or `None` elsewhere (`std_error` also when `r < 2`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MdmReport {
    pub method: String,
    pub estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub per_shift: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
    /// Number of integrand evaluations performed.
    pub eval_count: u64,
    pub wall_time_s: f64,
    pub config: ReportConfig,
}

/// Mean and standard error of the mean in the numerically safe centered
/// form `sqrt(sum (x - mean)^2 / (r (r-1)))`; the error is `None` for
/// fewer than two samples.
pub fn mean_and_std_error(values: &[f64]) -> (f64, Option<f64>) {
    let r = values.len();
    let mean = kahan::sum(values.iter().copied()) / r as f64;
    if r < 2 {
        return (mean, None);
    }
    let ss = kahan::sum(values.iter().map(|&v| (v - mean) * (v - mean)));
    (mean, Some((ss / (r as f64 * (r - 1) as f64)).sqrt()))
}

fn finish<F: AnchoredIntegrand + ?Sized>(
    method: &str,
    estimate: f64,
    counting: &Counting<'_, F>,
    start: Instant,
) -> MdmReport {
    MdmReport {
        method: method.to_owned(),
        estimate,
        per_shift: None,
        std_error: None,
        eval_count: counting.count(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: ReportConfig::default(),
    }
}

/// Nonzero coefficient entries in deterministic order: cardinality, then
/// insertion order of the extension, then level.
fn sparse_grid_items(ext: &SetStore<MTable>) -> Vec<(&VarSet, u32, i64)> {
    let mut items = Vec::new();
    for (v, table) in ext.iter() {
        if v.is_empty() {
            continue;
        }
        for (&m, &c) in table {
            if c != 0 {
                items.push((v, m, c));
            }
        }
    }
    items
}

fn sparse_grid_engine<F: AnchoredIntegrand + ?Sized>(
    ext: &SetStore<MTable>,
    c_empty: i64,
    fam: &Rule1dFamily,
    f: &F,
    top_layer_only: bool,
    method: &str,
) -> Result<MdmReport> {
    let start = Instant::now();
    let counting = Counting::new(f);
    let anchor = c_empty as f64 * counting.eval(&VarSet::empty(), &[]);
    let items = sparse_grid_items(ext);
    let partials = items
        .par_iter()
        .map(|&(v, m, c)| {
            let g = |t: &[f64]| counting.eval(v, t);
            let quad = if top_layer_only {
                combination_rule(fam, v.cardinality(), m, g)
            } else {
                smolyak_direct(fam, v.cardinality(), m, g)
            }?;
            Ok(c as f64 * quad)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut total = kahan::Sum::new();
    total.add(anchor);
    for p in partials {
        total.add(p);
    }
    Ok(finish(method, total.value(), &counting, start))
}

/// Direct sparse-grid engine: each quadrature `Q(v,m)` with a nonzero
/// coefficient is evaluated exactly once on the nested rule family.
pub fn run_smolyak_direct<F: AnchoredIntegrand + ?Sized>(
    tables: &SmolyakTables,
    fam: &Rule1dFamily,
    f: &F,
) -> Result<MdmReport> {
    sparse_grid_engine(
        tables.ext(),
        tables.c_empty(),
        fam,
        f,
        false,
        "smolyak-direct",
    )
}

/// Combination-technique engine: evaluates only top tensor layers
/// `Q~(v,m)`, whose coefficients already absorb the assembly alternation.
pub fn run_smolyak_combination<F: AnchoredIntegrand + ?Sized>(
    tables: &CombinationTables,
    fam: &Rule1dFamily,
    f: &F,
) -> Result<MdmReport> {
    sparse_grid_engine(tables.ext(), tables.c_empty(), fam, f, true, "smolyak-ct")
}

/// Largest variable index over the extension (0 when only the empty set is
/// present); random shift vectors must cover this many coordinates.
fn max_variable_index<P>(ext: &SetStore<P>) -> u32 {
    let mut max = 0;
    for (v, _) in ext.iter() {
        if let Some(last) = v.last() {
            max = max.max(last);
        }
    }
    max
}

struct QmcItem<'a> {
    v: &'a VarSet,
    w: &'a VarSet,
    m: u32,
    c: i64,
}

/// One dyadic block of the tent-transformed lattice, summed for the
/// evaluation set `v` with coordinates read at positions `w`. The shift is
/// indexed by variable indices and applied before the tent map.
fn qmc_block_sum<F: AnchoredIntegrand + ?Sized>(
    seq: &LatticeSequence,
    item: &QmcItem<'_>,
    shift: Option<&Shift>,
    f: &F,
) -> f64 {
    let d = item.v.cardinality();
    let mut x = vec![0.0; d];
    let mut s = kahan::Sum::new();
    for i in block_range(item.m) {
        for (k, (&vk, &wk)) in item
            .v
            .indices()
            .iter()
            .zip(item.w.indices())
            .enumerate()
        {
            let mut t = seq.coordinate(i, wk as usize - 1);
            if let Some(sh) = shift {
                t = (t + sh.delta()[vk as usize - 1]).fract();
            }
            x[k] = tent(t);
        }
        s.add(f.eval(item.v, &x));
    }
    s.value()
}

/// Lattice engine. With no shift the points are the tent-transformed
/// lattice; with one, each coordinate is shifted modulo 1 first. Every
/// block sum `S(v,w,m)` with a nonzero coefficient is evaluated once.
pub fn run_qmc<F: AnchoredIntegrand + ?Sized>(
    tables: &QmcTables,
    seq: &LatticeSequence,
    f: &F,
    shift: Option<&Shift>,
) -> Result<MdmReport> {
    let start = Instant::now();
    if tables.m_max() > seq.m_cap() {
        return Err(Error::LatticeExhausted);
    }
    if let Some(sh) = shift {
        let needed = max_variable_index(tables.ext()) as usize;
        if sh.len() < needed {
            return Err(Error::InvalidParameter(format!(
                "shift covers {} coordinates but the extension reaches index {needed}",
                sh.len()
            )));
        }
    }
    let mut items = Vec::new();
    let mut max_position = 0usize;
    for (v, positions) in tables.ext().iter() {
        if v.is_empty() {
            continue;
        }
        for (w, table) in positions {
            for (&m, &c) in table {
                if c != 0 {
                    items.push(QmcItem { v, w, m, c });
                }
            }
        }
    }
    for item in &items {
        max_position = max_position.max(item.w.last().unwrap_or(0) as usize);
    }
    if max_position > seq.dimension() {
        return Err(Error::GeneratingVectorExhausted);
    }
    let counting = Counting::new(f);
    let anchor = tables.c_empty() as f64 * counting.eval(&VarSet::empty(), &[]);
    let scale = 2f64.powi(tables.m_max() as i32);
    let partials: Vec<f64> = items
        .par_iter()
        .map(|item| item.c as f64 * qmc_block_sum(seq, item, shift, &counting) / scale)
        .collect();
    let mut total = kahan::Sum::new();
    total.add(anchor);
    for p in partials {
        total.add(p);
    }
    Ok(finish("qmc", total.value(), &counting, start))
}

/// Randomized lattice engine: `r` independent runs with shifts drawn from
/// per-shift seeded streams (`stream = shift index`), so a fixed seed gives
/// a bitwise-reproducible report. Each shift vector covers every variable
/// index reachable through the extension.
pub fn run_rqmc<F: AnchoredIntegrand + ?Sized>(
    tables: &QmcTables,
    seq: &LatticeSequence,
    f: &F,
    r: u32,
    seed: u64,
) -> Result<MdmReport> {
    let start = Instant::now();
    if r == 0 {
        return Err(Error::InvalidParameter(
            "the randomized engine needs at least one shift".into(),
        ));
    }
    let needed = max_variable_index(tables.ext()) as usize;
    let shifts: Vec<Shift> = (0..r)
        .map(|q| Shift::generate(seed, u64::from(q), needed))
        .collect();
    let runs = shifts
        .par_iter()
        .map(|sh| run_qmc(tables, seq, f, Some(sh)))
        .collect::<Result<Vec<MdmReport>>>()?;
    let per_shift: Vec<f64> = runs.iter().map(|run| run.estimate).collect();
    let (estimate, std_error) = mean_and_std_error(&per_shift);
    Ok(MdmReport {
        method: "rqmc".to_owned(),
        estimate,
        per_shift: Some(per_shift),
        std_error,
        eval_count: runs.iter().map(|run| run.eval_count).sum(),
        wall_time_s: start.elapsed().as_secs_f64(),
        config: ReportConfig {
            seed: Some(seed),
            shifts: Some(r),
            ..ReportConfig::default()
        },
    })
}

/// Which quadrature the naive oracle applies to each expanded term.
#[derive(Clone, Copy)]
pub enum NaiveMethod<'a> {
    SmolyakDirect(&'a Rule1dFamily),
    SmolyakCombination(&'a Rule1dFamily),
    Qmc(&'a LatticeSequence, Option<&'a Shift>),
}

impl NaiveMethod<'_> {
    fn tag(&self) -> &'static str {
        match self {
            NaiveMethod::SmolyakDirect(_) => "naive-smolyak-direct",
            NaiveMethod::SmolyakCombination(_) => "naive-smolyak-ct",
            NaiveMethod::Qmc(..) => "naive-qmc",
        }
    }
}

/// Term-by-term oracle: for every active set `u`, expands the anchored
/// term by its alternating subset sum at each node of the same rule the
/// efficient engine uses (same levels, same lattice blocks, same shift),
/// then adds the plain anchor term. Estimates match the efficient engines
/// to rounding; the evaluation count is larger by the efficiency factor.
pub fn run_naive<F: AnchoredIntegrand + ?Sized>(
    method: NaiveMethod<'_>,
    active: &ActiveSet,
    levels: &LevelAssignment,
    f: &F,
) -> Result<MdmReport> {
    let start = Instant::now();
    if active.d_sup() > MAX_TERM_CARDINALITY {
        return Err(Error::AnchoredTermTooLarge(active.d_sup()));
    }
    let mut items = Vec::new();
    for u in active.iter() {
        if u.is_empty() {
            continue;
        }
        let m = levels.level(u).ok_or_else(|| {
            Error::InvalidParameter(format!("missing quadrature level for {u}"))
        })?;
        match method {
            NaiveMethod::SmolyakDirect(_) | NaiveMethod::SmolyakCombination(_) => {
                if m < 1 {
                    return Err(Error::LevelTooSmall);
                }
            }
            NaiveMethod::Qmc(seq, shift) => {
                if m > seq.m_cap() {
                    return Err(Error::LatticeExhausted);
                }
                if u.cardinality() > seq.dimension() {
                    return Err(Error::GeneratingVectorExhausted);
                }
                if let Some(sh) = shift {
                    let needed = u.last().unwrap_or(0) as usize;
                    if sh.len() < needed {
                        return Err(Error::InvalidParameter(format!(
                            "shift covers {} coordinates but the active set reaches index {needed}",
                            sh.len()
                        )));
                    }
                }
            }
        }
        items.push((u, m));
    }
    let counting = Counting::new(f);
    let anchor = counting.eval(&VarSet::empty(), &[]);
    let partials: Vec<f64> = items
        .par_iter()
        .map(|&(u, m)| {
            let d = u.cardinality();
            let g = |t: &[f64]| {
                anchored_term(&counting, u, t).expect("dimensions validated up front")
            };
            match method {
                NaiveMethod::SmolyakDirect(fam) => {
                    smolyak_direct(fam, d, m, g).expect("levels validated up front")
                }
                NaiveMethod::SmolyakCombination(fam) => {
                    combination_assembly(fam, d, m, g).expect("levels validated up front")
                }
                NaiveMethod::Qmc(seq, shift) => {
                    let mut x = vec![0.0; d];
                    let mut s = kahan::Sum::new();
                    for i in 0..(1u64 << m) {
                        for (k, &uk) in u.indices().iter().enumerate() {
                            let mut t = seq.coordinate(i, k);
                            if let Some(sh) = shift {
                                t = (t + sh.delta()[uk as usize - 1]).fract();
                            }
                            x[k] = tent(t);
                        }
                        s.add(g(&x));
                    }
                    s.value() / 2f64.powi(m as i32)
                }
            }
        })
        .collect();
    let mut total = kahan::Sum::new();
    total.add(anchor);
    for p in partials {
        total.add(p);
    }
    Ok(finish(method.tag(), total.value(), &counting, start))
}
