//! Sparse-grid quadrature assembled from a one-dimensional rule family.
//!
//! The level-`m` rule in dimension `d` combines tensor products of the
//! one-dimensional levels over composite indices `i` with `|i| <= d+m-1`.
//! Three equivalent evaluation strategies are provided:
//!
//! * **nested direct**: with a nested family every node of a finer level
//!   contains the coarser ones, so each distinct node is visited exactly
//!   once, at the level that introduces it, with a combined weight summed
//!   over all admissible tensor blocks. This is the cheapest form.
//! * **non-nested direct**: the literal tensor sign-sum; every block within
//!   budget is evaluated in full, including blocks whose combination
//!   coefficient is zero. Works for any family; serves as an oracle for the
//!   nested form.
//! * **plain tensor layer** ([`combination_rule`]): the single top layer
//!   `|i| = d+m-1` of full tensor products. The classical combination
//!   identity ([`combination_assembly`]) recovers the sparse rule as an
//!   alternating binomial sum of such layers; the table-driven engine
//!   caches layers across sets, which is why this form is exposed
//!   separately.
//!
//! Evaluation order is deterministic (lexicographic in the composite index,
//! odometer order within a block) and all accumulation is compensated, so
//! results are bitwise reproducible.

use std::sync::Arc;

use crate::kahan;
use crate::quad1d::{Level, Rule1dFamily};
use crate::setkit::{position_map, project_point, VarSet};
use crate::{Error, Result};

/// Which evaluation strategy a count refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SmolyakVariant {
    NestedDirect,
    NonNestedDirect,
    Combination,
}

fn validate(d: usize, m: u32) -> Result<()> {
    if m < 1 {
        return Err(Error::LevelTooSmall);
    }
    if d < 1 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Visit every `i` in `N^d` with `i_j >= 1` and `|i| <= total` (or
/// `|i| = total` when `exact`), in lexicographic order.
fn visit_composites(d: usize, total: u32, exact: bool, visitor: &mut dyn FnMut(&[u32])) {
    fn rec(
        cur: &mut Vec<u32>,
        pos: usize,
        remaining: u32,
        exact: bool,
        visitor: &mut dyn FnMut(&[u32]),
    ) {
        let d = cur.len();
        if pos == d {
            visitor(cur);
            return;
        }
        let slots_after = (d - pos - 1) as u32;
        let hi = remaining - slots_after;
        let lo = if exact && pos == d - 1 { hi } else { 1 };
        for i in lo..=hi {
            cur[pos] = i;
            rec(cur, pos + 1, remaining - i, exact, visitor);
        }
    }
    if total >= d as u32 {
        let mut cur = vec![0u32; d];
        rec(&mut cur, 0, total, exact, visitor);
    }
}

/// Full tensor product rule over the given levels, odometer order.
fn tensor_rule(levels: &[Arc<Level>], g: &mut dyn FnMut(&[f64]) -> f64) -> f64 {
    let d = levels.len();
    if levels.iter().any(|l| l.points.is_empty()) {
        return 0.0;
    }
    let mut idx = vec![0usize; d];
    let mut point = vec![0f64; d];
    let mut total = kahan::Sum::new();
    loop {
        let mut w = 1.0;
        for j in 0..d {
            point[j] = levels[j].points[idx[j]];
            w *= levels[j].weights[idx[j]];
        }
        total.add(w * g(&point));
        let mut j = d;
        loop {
            if j == 0 {
                return total.value();
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < levels[j].points.len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// Immutable inputs of the nested-weight recursion: per-level weight
/// increments, the level at which each axis index is born, suffix minima
/// of the birth levels, and the node's per-axis point indices.
struct WeightCtx<'a> {
    diff: &'a [Vec<f64>],
    birth: &'a [u32],
    suffix_min: &'a [u32],
    k: &'a [usize],
}

/// Combined weight of one nested node: sum over tensor blocks `q >= birth`
/// within budget of the per-level weight increments.
fn nested_weight(ctx: &WeightCtx<'_>, pos: usize, remaining: u32, prod: f64, out: &mut f64) {
    if pos == ctx.birth.len() {
        *out += prod;
        return;
    }
    let hi = remaining - ctx.suffix_min[pos + 1];
    for q in ctx.birth[pos]..=hi {
        let w = ctx.diff[q as usize - 1][ctx.k[pos]];
        if w != 0.0 {
            nested_weight(ctx, pos + 1, remaining - q, prod * w, out);
        }
    }
}

fn nested_direct(
    fam: &Rule1dFamily,
    d: usize,
    m: u32,
    g: &mut dyn FnMut(&[f64]) -> f64,
) -> f64 {
    let budget = d as u32 + m - 1;
    let levels: Vec<Arc<Level>> = (1..=m as usize).map(|q| fam.level(q)).collect();
    // diff[q-1][k] = W(q,k) - W(q-1,k); zero weight for k not yet born.
    let diff: Vec<Vec<f64>> = (1..=m as usize)
        .map(|q| {
            let cur = &levels[q - 1];
            let prev = fam.n(q - 1);
            (0..cur.points.len())
                .map(|k| {
                    let older = if k < prev { levels[q - 2].weights[k] } else { 0.0 };
                    cur.weights[k] - older
                })
                .collect()
        })
        .collect();

    let mut total = kahan::Sum::new();
    visit_composites(d, budget, false, &mut |birth| {
        let ranges: Vec<std::ops::Range<usize>> = birth
            .iter()
            .map(|&i| fam.n(i as usize - 1)..fam.n(i as usize))
            .collect();
        if ranges.iter().any(|r| r.is_empty()) {
            return;
        }
        let mut suffix_min = vec![0u32; d + 1];
        for j in (0..d).rev() {
            suffix_min[j] = suffix_min[j + 1] + birth[j];
        }
        let mut k: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        let mut point = vec![0f64; d];
        loop {
            for j in 0..d {
                point[j] = levels[birth[j] as usize - 1].points[k[j]];
            }
            let mut w = 0.0;
            let ctx = WeightCtx {
                diff: &diff,
                birth,
                suffix_min: &suffix_min,
                k: &k,
            };
            nested_weight(&ctx, 0, budget, 1.0, &mut w);
            total.add(w * g(&point));
            let mut j = d;
            loop {
                if j == 0 {
                    return;
                }
                j -= 1;
                k[j] += 1;
                if k[j] < ranges[j].end {
                    break;
                }
                k[j] = ranges[j].start;
            }
        }
    });
    total.value()
}

/// The sparse rule by the literal tensor sign-sum: every block `|i| <= d+m-1`
/// is evaluated in full and scaled by its alternating-subset coefficient,
/// even when that coefficient is zero. Valid for any rule family.
pub fn smolyak_non_nested<G: FnMut(&[f64]) -> f64>(
    fam: &Rule1dFamily,
    d: usize,
    m: u32,
    mut g: G,
) -> Result<f64> {
    validate(d, m)?;
    let budget = d as u32 + m - 1;
    let mut total = kahan::Sum::new();
    visit_composites(d, budget, false, &mut |i| {
        let sum_i: u32 = i.iter().sum();
        // c_i = sum over p in {0,1}^d with |i| + |p| <= budget of (-1)^|p|.
        let mut c = 0i64;
        for p in 0u64..(1u64 << d) {
            let ones = p.count_ones();
            if sum_i + ones <= budget {
                c += if ones % 2 == 0 { 1 } else { -1 };
            }
        }
        let levels: Vec<Arc<Level>> = i.iter().map(|&q| fam.level(q as usize)).collect();
        let val = tensor_rule(&levels, &mut g);
        total.add(c as f64 * val);
    });
    Ok(total.value())
}

/// The level-`m` sparse rule in dimension `d`. Dispatches to the
/// once-per-node nested evaluation when the family is nested, otherwise to
/// the tensor sign-sum.
pub fn smolyak_direct<G: FnMut(&[f64]) -> f64>(
    fam: &Rule1dFamily,
    d: usize,
    m: u32,
    mut g: G,
) -> Result<f64> {
    validate(d, m)?;
    if fam.nested() {
        Ok(nested_direct(fam, d, m, &mut g))
    } else {
        smolyak_non_nested(fam, d, m, g)
    }
}

/// The plain tensor layer `|i| = d+m-1` with product weights.
pub fn combination_rule<G: FnMut(&[f64]) -> f64>(
    fam: &Rule1dFamily,
    d: usize,
    m: u32,
    mut g: G,
) -> Result<f64> {
    validate(d, m)?;
    let budget = d as u32 + m - 1;
    let mut total = kahan::Sum::new();
    visit_composites(d, budget, true, &mut |i| {
        let levels: Vec<Arc<Level>> = i.iter().map(|&q| fam.level(q as usize)).collect();
        total.add(tensor_rule(&levels, &mut g));
    });
    Ok(total.value())
}

/// Exact binomial coefficient for the small arguments used here (`n <= 63`).
pub(crate) fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut acc = 1i128;
    for j in 0..k.min(n - k) {
        acc = acc * (n - j) as i128 / (j + 1) as i128;
    }
    i64::try_from(acc).expect("binomial exceeds i64 range")
}

/// Recover the sparse rule from plain tensor layers:
/// `Q_(d,m) = sum_(r=max(m-d+1,1))^m (-1)^(m-r) binom(d-1, m-r) Qtilde_(d,r)`.
pub fn combination_assembly<G: FnMut(&[f64]) -> f64>(
    fam: &Rule1dFamily,
    d: usize,
    m: u32,
    mut g: G,
) -> Result<f64> {
    validate(d, m)?;
    let r_lo = (m as i64 - d as i64 + 1).max(1) as u32;
    let mut total = kahan::Sum::new();
    for r in r_lo..=m {
        let sign = if (m - r).is_multiple_of(2) { 1.0 } else { -1.0 };
        let coeff = sign * binomial(d - 1, (m - r) as usize) as f64;
        total.add(coeff * combination_rule(fam, d, r, &mut g)?);
    }
    Ok(total.value())
}

/// Number of integrand evaluations each strategy performs, saturating at
/// `u64::MAX`.
pub fn count_evals(
    fam: &Rule1dFamily,
    d: usize,
    m: u32,
    variant: SmolyakVariant,
) -> Result<u64> {
    validate(d, m)?;
    let budget = d as u32 + m - 1;
    let exact = variant == SmolyakVariant::Combination;
    let mut total: u128 = 0;
    visit_composites(d, budget, exact, &mut |i| {
        let mut block: u128 = 1;
        for &q in i {
            let factor = match variant {
                SmolyakVariant::NestedDirect => {
                    fam.n(q as usize).saturating_sub(fam.n(q as usize - 1))
                }
                _ => fam.n(q as usize),
            };
            block = block.saturating_mul(factor as u128);
        }
        total = total.saturating_add(block);
    });
    Ok(u64::try_from(total).unwrap_or(u64::MAX))
}

/// Test harness for the projection identity: a sparse rule over `u` applied
/// to a function of the `v`-coordinates only (`v` a subset of `u`) equals
/// the sparse rule over `v`. Returns both values.
pub fn smolyak_projection_check<G: FnMut(&[f64]) -> f64>(
    fam: &Rule1dFamily,
    u: &VarSet,
    v: &VarSet,
    m: u32,
    mut g: G,
) -> Result<(f64, f64)> {
    let w = position_map(u, v)?;
    let over_u = smolyak_direct(fam, u.cardinality(), m, |y| {
        let yv = project_point(y, &w).expect("positions lie within u");
        g(&yv)
    })?;
    let over_v = smolyak_direct(fam, v.cardinality(), m, g)?;
    Ok((over_u, over_v))
}
