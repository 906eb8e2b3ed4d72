//! The benchmark integrand family and its cost model.
//!
//! The family is `f(x) = 1 / (1 + sum over j of x_j / j^beta)` over the box
//! `[-1/2, 1/2]` in every coordinate. For `beta` with `zeta(beta) < 2` the
//! denominator stays uniformly positive, all anchored evaluations are well
//! defined, and the norms of the decomposition terms admit the explicit
//! bound `B_u` used here. Combined with the per-term operator norm
//! `C_u = 12^(-|u|/2)`, the product `C_u B_u` is exactly a POD weight model
//! with `b1 = 1`, `b2 = beta`, which ties the error analysis of the active
//! set to this concrete integrand.
//!
//! Given an active set, a Lagrange-style balance of work against accuracy
//! yields one point budget `h_u` per term ([`point_budget`]); quadrature
//! levels are then the smallest level whose evaluation count reaches the
//! budget, on the lattice side `2^m >= h_u` ([`qmc_levels`]) and on the
//! sparse-grid side via the nested evaluation count ([`smolyak_levels`]).

use std::collections::HashMap;

use crate::active_set::ActiveSet;
use crate::coeff_tables::LevelAssignment;
use crate::decomposition::AnchoredIntegrand;
use crate::kahan;
use crate::pod_weights::PodWeights;
use crate::quad1d::Rule1dFamily;
use crate::setkit::{SetStore, VarSet};
use crate::smolyak::{count_evals, SmolyakVariant};
use crate::{Error, Result};

/// Riemann zeta for real `s > 1`, via 64 explicit terms and an
/// Euler-Maclaurin tail with three Bernoulli corrections; absolute accuracy
/// is far below 1e-14 for `s >= 2`.
pub fn zeta(s: f64) -> f64 {
    let n = 64.0f64;
    let mut total = kahan::Sum::new();
    for k in 1..=64u32 {
        total.add(f64::from(k).powf(-s));
    }
    total.add(n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s));
    total.add(s * n.powf(-s - 1.0) / 12.0);
    total.add(-s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0);
    total.add(s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0);
    total.value()
}

/// `f(x) = 1 / (1 + sum x_j / j^beta)` with a precomputed table of the
/// coefficient decay `j^(-beta)` up to `max_index` (indices beyond the
/// table fall back to a direct power).
#[derive(Clone, Debug)]
pub struct TestIntegrand {
    beta: f64,
    inv_pow: Vec<f64>,
}

impl TestIntegrand {
    pub fn new(beta: f64, max_index: u32) -> Result<Self> {
        if beta.is_nan() || beta <= 1.0 {
            return Err(Error::InvalidParameter("beta must exceed 1".into()));
        }
        Ok(TestIntegrand {
            beta,
            inv_pow: (1..=max_index).map(|j| f64::from(j).powf(-beta)).collect(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn decay(&self, j: u32) -> f64 {
        self.inv_pow
            .get(j as usize - 1)
            .copied()
            .unwrap_or_else(|| f64::from(j).powf(-self.beta))
    }
}

impl AnchoredIntegrand for TestIntegrand {
    fn eval(&self, v: &VarSet, x: &[f64]) -> f64 {
        debug_assert_eq!(v.cardinality(), x.len());
        let mut s = 0.0;
        for (k, &j) in v.indices().iter().enumerate() {
            s += x[k] * self.decay(j);
        }
        1.0 / (1.0 + s)
    }
}

/// Work/accuracy model of the benchmark integrand: per-term norm bounds,
/// operator norms, and the evaluation cost exponent.
#[derive(Clone, Copy, Debug)]
pub struct NormModel {
    beta: f64,
    zeta_beta: f64,
    /// `-ln(1 - zeta(beta)/2)`, the positive log of the norm base.
    ln_base: f64,
}

impl NormModel {
    /// Work exponent: evaluation error decays like `points^(-q)`.
    pub const Q: f64 = 2.0;

    /// Norm scale factor of the budget formula.
    pub const G: f64 = 1.0;

    pub fn new(beta: f64) -> Result<Self> {
        if beta.is_nan() || beta <= 1.0 {
            return Err(Error::InvalidWeights("beta must exceed 1".into()));
        }
        let zeta_beta = zeta(beta);
        if zeta_beta >= 2.0 {
            return Err(Error::InvalidWeights(
                "zeta(beta) must stay below 2 for a positive norm base".into(),
            ));
        }
        Ok(NormModel {
            beta,
            zeta_beta,
            ln_base: -(1.0 - zeta_beta / 2.0).ln(),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn zeta_beta(&self) -> f64 {
        self.zeta_beta
    }

    /// `ln B_u` for `B_u = (1 - zeta/2)^(-(|u|+1)) |u|! prod j^(-beta)`.
    pub fn ln_b(&self, u: &VarSet) -> f64 {
        let l = u.cardinality();
        let mut acc = (l + 1) as f64 * self.ln_base;
        for k in 2..=l {
            acc += (k as f64).ln();
        }
        for &j in u.indices() {
            acc -= self.beta * f64::from(j).ln();
        }
        acc
    }

    pub fn b(&self, u: &VarSet) -> f64 {
        self.ln_b(u).exp()
    }

    /// Operator norm `12^(-l/2)` of an `l`-variable term.
    pub fn c_norm(l: usize) -> f64 {
        (-(l as f64) / 2.0 * 12f64.ln()).exp()
    }

    /// Evaluation cost `max(2^l * l, 1)` of a point touching `l` variables.
    pub fn cost(l: usize) -> f64 {
        (2f64.powi(l as i32) * l as f64).max(1.0)
    }

    /// The POD weight model `w(u) = C_u B_u`: `c1 = (1 - zeta/2)^(-1)`,
    /// `c2 = c1 / sqrt(12)`, `b1 = 1`, `b2 = beta`.
    pub fn pod_weights(&self) -> Result<PodWeights> {
        let c1 = self.ln_base.exp();
        PodWeights::new(c1, c1 / 12f64.sqrt(), 1.0, self.beta)
    }
}

/// Point budget `h_u` per active term:
///
/// `h_u = ((2/eps) sum over v in U of cost(|v|)^(q/(q+1)) (G B_v)^(1/(q+1)))^(1/q)
///        * (G B_u / cost(|u|))^(1/(q+1))`.
///
/// The sum runs over the whole active set including the empty set. Budgets
/// are returned for every member (the empty set's is unused downstream:
/// its term is the single anchor evaluation).
pub fn point_budget(
    nm: &NormModel,
    active: &ActiveSet,
    epsilon: f64,
) -> Result<SetStore<f64>> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let q = NormModel::Q;
    let ln_g = NormModel::G.ln();
    let mut sum = kahan::Sum::new();
    for v in active.iter() {
        let ln_cost = NormModel::cost(v.cardinality()).ln();
        sum.add((q / (q + 1.0) * ln_cost + (ln_g + nm.ln_b(v)) / (q + 1.0)).exp());
    }
    let lead = (2.0 / epsilon * sum.value()).powf(1.0 / q);
    let mut budgets = SetStore::new();
    for u in active.iter() {
        let ln_cost = NormModel::cost(u.cardinality()).ln();
        let h = lead * ((ln_g + nm.ln_b(u) - ln_cost) / (q + 1.0)).exp();
        budgets.insert(u.clone(), h);
    }
    Ok(budgets)
}

/// Lattice levels: `m_u = max(ceil(log2 h_u), 0)`, so `2^m_u >= h_u`
/// whenever `h_u >= 1`. Any level beyond `m_cap` exhausts the sequence.
pub fn qmc_levels(budget: &SetStore<f64>, m_cap: u32) -> Result<LevelAssignment> {
    let mut store = SetStore::new();
    for (u, &h) in budget.iter() {
        if u.is_empty() {
            continue;
        }
        if !h.is_finite() {
            return Err(Error::InvalidParameter("point budget must be finite".into()));
        }
        let m = if h > 1.0 { h.log2().ceil() as u32 } else { 0 };
        if m > m_cap {
            return Err(Error::LatticeExhausted);
        }
        store.insert(u.clone(), m);
    }
    LevelAssignment::new(store)
}

/// Sparse-grid levels: the smallest `m >= 1` whose nested evaluation count
/// reaches the budget. The combination-technique engine reuses the same
/// levels.
pub fn smolyak_levels(budget: &SetStore<f64>, fam: &Rule1dFamily) -> Result<LevelAssignment> {
    let mut memo: HashMap<(usize, u32), u64> = HashMap::new();
    let mut store = SetStore::new();
    for (u, &h) in budget.iter() {
        if u.is_empty() {
            continue;
        }
        if !h.is_finite() {
            return Err(Error::InvalidParameter("point budget must be finite".into()));
        }
        let d = u.cardinality();
        let mut m = 1u32;
        loop {
            let count = match memo.get(&(d, m)) {
                Some(&c) => c,
                None => {
                    let c = count_evals(fam, d, m, SmolyakVariant::NestedDirect)?;
                    memo.insert((d, m), c);
                    c
                }
            };
            if count as f64 >= h {
                break;
            }
            m += 1;
        }
        store.insert(u.clone(), m);
    }
    LevelAssignment::new(store)
}
