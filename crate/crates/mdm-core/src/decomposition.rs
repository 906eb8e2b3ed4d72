//! Anchored decomposition of an integrand over variable subsets.
//!
//! An integrand over infinitely many variables is accessed only through
//! evaluations `f(x_v; 0)`: the variables in a finite set `v` carry the
//! coordinates `x`, every other variable sits at the anchor 0. The
//! decomposition term attached to a set `u` is the alternating sum
//!
//! `f_u(x) = sum over v subset of u of (-1)^(|u|-|v|) f(x_v; 0)`,
//!
//! which vanishes whenever any coordinate of `u` is at the anchor and
//! telescopes back to `f(x_u; 0)` when summed over all subsets of `u`.
//! Expanding `f_u` costs `2^|u|` evaluations, so [`anchored_term`] exists
//! for oracle and reference use; the production engines regroup those sums
//! into coefficient tables and never form a term explicitly.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::kahan;
use crate::setkit::VarSet;
use crate::{Error, Result};

/// Largest cardinality [`anchored_term`] will expand (`2^30` evaluations).
pub const MAX_TERM_CARDINALITY: usize = 30;

/// An integrand presented through anchored evaluations.
///
/// Implementations must be pure: the engines evaluate from worker threads
/// and rely on a fixed value per `(v, x)` for reproducibility.
pub trait AnchoredIntegrand: Sync {
    /// `f(x_v; 0)`: coordinate `x[k]` belongs to variable `v.indices()[k]`,
    /// all variables outside `v` are 0. `x.len()` must equal `|v|`.
    fn eval(&self, v: &VarSet, x: &[f64]) -> f64;

    /// Cost of one evaluation touching `l` variables, `max(2^l * l, 1)`.
    fn cost(&self, l: usize) -> f64 {
        (2f64.powi(l as i32) * l as f64).max(1.0)
    }
}

/// Wrapper that counts evaluations, so naive and efficient runs of the
/// same integrand report comparable work.
pub struct Counting<'a, F: AnchoredIntegrand + ?Sized> {
    inner: &'a F,
    evals: AtomicU64,
}

impl<'a, F: AnchoredIntegrand + ?Sized> Counting<'a, F> {
    pub fn new(inner: &'a F) -> Self {
        Counting {
            inner,
            evals: AtomicU64::new(0),
        }
    }

    /// Evaluations so far.
    pub fn count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

impl<F: AnchoredIntegrand + ?Sized> AnchoredIntegrand for Counting<'_, F> {
    fn eval(&self, v: &VarSet, x: &[f64]) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.inner.eval(v, x)
    }

    fn cost(&self, l: usize) -> f64 {
        self.inner.cost(l)
    }
}

/// The decomposition term `f_u(x)` by explicit alternating expansion over
/// all `2^|u|` subsets. `x` pairs positionally with `u.indices()`.
pub fn anchored_term<F: AnchoredIntegrand + ?Sized>(
    f: &F,
    u: &VarSet,
    x: &[f64],
) -> Result<f64> {
    let l = u.cardinality();
    if x.len() != l {
        return Err(Error::InvalidParameter(
            "point length must match set cardinality".into(),
        ));
    }
    if l > MAX_TERM_CARDINALITY {
        return Err(Error::AnchoredTermTooLarge(l));
    }
    let mut total = kahan::Sum::new();
    let mut vi: Vec<u32> = Vec::with_capacity(l);
    let mut xv: Vec<f64> = Vec::with_capacity(l);
    for mask in 0u64..(1u64 << l) {
        vi.clear();
        xv.clear();
        for (k, (&j, &xk)) in u.indices().iter().zip(x).enumerate() {
            if mask >> k & 1 == 1 {
                vi.push(j);
                xv.push(xk);
            }
        }
        let sign = if (l - vi.len()).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        let v = VarSet::from_sorted(vi.clone());
        total.add(sign * f.eval(&v, &xv));
    }
    Ok(total.value())
}
