//! Product-and-order-dependent (POD) significance weights.
//!
//! Each variable subset `u` gets the weight
//! `w(u) = c1 * (|u|!)^b1 * prod_{j in u} c2 * j^(-b2)`,
//! a product of an order factor in the cardinality and one decay factor per
//! member variable. All comparisons against a threshold happen in log space:
//! thresholds reach 1e-11 in the benchmark models and members multiply ten
//! and more tiny factors, which underflows long before it becomes inaccurate
//! in logs.

use crate::setkit::VarSet;
use crate::{Error, Result};

/// How far the decay requirement is checked at construction.
const MONOTONICITY_HORIZON: usize = 200;

/// Cumulative table of `ln(k!)` for `k = 0..=n_max`.
pub(crate) fn ln_factorial_table(n_max: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n_max + 1);
    table.push(0.0);
    for k in 1..=n_max {
        table.push(table[k - 1] + (k as f64).ln());
    }
    table
}

/// POD weight model with parameters `(c1, c2, b1, b2)`.
#[derive(Clone, Debug)]
pub struct PodWeights {
    c1: f64,
    c2: f64,
    b1: f64,
    b2: f64,
    ln_c1: f64,
    ln_c2: f64,
    ln_fact: Vec<f64>,
}

impl PodWeights {
    /// Validate parameters and the decay requirement
    /// `Omega_(l+1) * omega_(l+1) <= Omega_l` up to a fixed horizon.
    ///
    /// The requirement reduces to `c2 <= (l+1)^(b2-b1)` and is tightest at
    /// `l = 0`; it guarantees that prepending the next unused variable never
    /// increases a weight, which the active-set walk relies on to terminate.
    pub fn new(c1: f64, c2: f64, b1: f64, b2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c1.is_finite()) || !(c2 > 0.0 && c2.is_finite()) {
            return Err(Error::InvalidWeights("c1 and c2 must be positive".into()));
        }
        if b1.is_nan() || b2.is_nan() || b1 < 0.0 || b2 <= 1.0 || b2 <= b1 {
            return Err(Error::InvalidWeights(
                "need b1 >= 0, b2 > 1, b2 > b1".into(),
            ));
        }
        let ln_c2 = c2.ln();
        for l in 0..MONOTONICITY_HORIZON {
            if ln_c2 > (b2 - b1) * ((l + 1) as f64).ln() {
                return Err(Error::WeightMonotonicity(l));
            }
        }
        Ok(PodWeights {
            c1,
            c2,
            b1,
            b2,
            ln_c1: c1.ln(),
            ln_c2,
            ln_fact: ln_factorial_table(MONOTONICITY_HORIZON.max(64)),
        })
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    pub fn b2(&self) -> f64 {
        self.b2
    }

    fn ln_factorial(&self, n: usize) -> f64 {
        if n < self.ln_fact.len() {
            return self.ln_fact[n];
        }
        let mut acc = *self.ln_fact.last().expect("table is never empty");
        for k in self.ln_fact.len()..=n {
            acc += (k as f64).ln();
        }
        acc
    }

    /// `ln w(u)`, the form every threshold comparison uses.
    pub fn weight_log(&self, u: &VarSet) -> f64 {
        self.weight_log_indices(u.indices())
    }

    /// Same on a raw index slice, for generate-and-check loops that mutate
    /// a candidate in place.
    pub(crate) fn weight_log_indices(&self, indices: &[u32]) -> f64 {
        let mut acc = self.ln_c1 + self.b1 * self.ln_factorial(indices.len());
        for &j in indices {
            acc += self.ln_c2 - self.b2 * f64::from(j).ln();
        }
        acc
    }

    /// `w(u)` itself; the empty set gets `c1`.
    pub fn weight(&self, u: &VarSet) -> f64 {
        self.weight_log(u).exp()
    }
}
