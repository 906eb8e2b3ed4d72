//! Threshold computation for the active set.
//!
//! The error request `epsilon` is split in half: one half pays for truncating
//! the decomposition to the active set, which requires the threshold
//!
//! `T = ((epsilon/2) / S)^(alpha/(alpha-1))`
//!
//! where `S` is any upper bound on `sum_u [w(u)]^(1/alpha)` over all finite
//! subsets. For POD weights that infinite sum is bounded by a single series
//! over cardinalities, truncated at `s` terms plus an explicit tail bound
//! `E_(s,t)` controlled by a Hoelder split parameter `t`. The exponent
//! `alpha` is free within `alpha >= 1`, `b1 < alpha < b2`; `T` is maximized
//! over an equispaced grid on that interval.
//!
//! Everything is evaluated in log space: the series involves `(l!)^(b1/alpha)`
//! up to `l = 1000`, far outside double range in linear form. Grid points
//! whose bound overflows to infinity simply yield `T = 0` and lose the
//! maximization, so a diverging parameter corner degrades gracefully.

use serde::Serialize;

use crate::kahan;
use crate::pod_weights::{ln_factorial_table, PodWeights};
use crate::{Error, Result};

/// Inputs of the threshold computation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ToleranceParams {
    /// Total error request.
    pub epsilon: f64,
    /// Truncation length of the cardinality series.
    pub s: u32,
    /// Hoelder split parameter in (0,1) of the tail bound.
    pub t: f64,
    /// Number of grid points for the maximization over alpha.
    pub alpha_grid_size: u32,
}

impl ToleranceParams {
    /// Defaults: `s = 1000`, `t = 0.5`, grid of 100 points.
    pub fn new(epsilon: f64) -> Self {
        ToleranceParams {
            epsilon,
            s: 1000,
            t: 0.5,
            alpha_grid_size: 100,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        if self.s < 1 {
            return Err(Error::InvalidParameter("s must be at least 1".into()));
        }
        if !(self.t > 0.0 && self.t < 1.0) {
            return Err(Error::InvalidParameter("t must lie in (0,1)".into()));
        }
        if self.alpha_grid_size < 2 {
            return Err(Error::InvalidParameter(
                "alpha grid needs at least 2 points".into(),
            ));
        }
        Ok(())
    }
}

/// One grid point of the maximization, kept for diagnostics.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct AlphaSample {
    pub alpha: f64,
    pub sum_bound: f64,
    #[serde(rename = "T")]
    pub threshold: f64,
}

/// The chosen threshold and the grid scan that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct ToleranceResult {
    pub epsilon: f64,
    pub alpha_star: f64,
    pub sum_bound: f64,
    #[serde(rename = "T")]
    pub threshold: f64,
    pub per_alpha: Vec<AlphaSample>,
}

fn check_alpha(p: &PodWeights, alpha: f64) -> Result<()> {
    if alpha >= 1.0 && alpha > p.b1() && alpha < p.b2() {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange)
    }
}

/// Tail bound `E_(s,t)` of the truncated cardinality series, log-space.
fn pod_tail(a: f64, c: f64, z: f64, s: u32, t: f64, ln_fact_s: f64) -> f64 {
    let ln_c = c.ln();
    let y = c * z / t;
    let ln_y = y.ln();
    let s_f = f64::from(s);
    let ln_e = if a > 0.0 {
        let t_pow = (t.ln() / a).exp();
        let ln3 = (s_f / a) * t.ln() - (1.0 - t_pow).ln() + (s_f + 1.0 / (1.0 - t_pow)).ln();
        let ln4 = (ln_y / (1.0 - a)).exp() + (s_f / (1.0 - a) * ln_y).min(0.0) - ln_fact_s;
        ln_c + (z / (s_f + 1.0)).ln_1p() + a * ln3 + (1.0 - a) * ln4
    } else {
        ln_c + (z / (s_f + 1.0)).ln_1p() + s_f * t.ln() + y + (s_f * ln_y).min(0.0) - ln_fact_s
    };
    ln_e.exp()
}

/// Upper bound on `sum_u [w(u)]^(1/alpha)` for a POD model.
///
/// With `a = b1/alpha`, `b = b2/alpha`, `c = c2^(1/alpha)` and
/// `z = (2/3)^(b-1) / (b-1)` the bound is
///
/// `c1^(1/alpha) * (1 + sum_(l=1)^s (l!)^a c^l z^(l-1)/(l-1)! (1 + z/l) + E_(s,t))`.
///
/// Returns infinity when a term overflows; callers treat that as an
/// inadmissible grid point.
pub fn sum_bound_pod(p: &PodWeights, alpha: f64, s: u32, t: f64) -> Result<f64> {
    check_alpha(p, alpha)?;
    if s < 1 || !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidParameter(
            "need s >= 1 and t in (0,1)".into(),
        ));
    }
    let a = p.b1() / alpha;
    let b = p.b2() / alpha;
    let c = p.c2().powf(1.0 / alpha);
    let z = (2.0f64 / 3.0).powf(b - 1.0) / (b - 1.0);
    let ln_c = c.ln();
    let ln_z = z.ln();
    let ln_fact = ln_factorial_table(s as usize);

    let mut series = kahan::Sum::new();
    series.add(1.0);
    for l in 1..=s as usize {
        let lf = l as f64;
        let ln_term = a * ln_fact[l] + lf * ln_c + (lf - 1.0) * ln_z - ln_fact[l - 1];
        let term = ln_term.exp() * (1.0 + z / lf);
        if !term.is_finite() {
            return Ok(f64::INFINITY);
        }
        series.add(term);
    }
    let tail = pod_tail(a, c, z, s, t, ln_fact[s as usize]);
    Ok(p.c1().powf(1.0 / alpha) * (series.value() + tail))
}

/// Sharper bound available when `b1 = 0` and the weights are of product form:
///
/// `c1^(1/alpha) * exp(c / ((b-1)(s+1/2)^(b-1))) * prod_(j=1)^s (1 + c j^(-b))`.
pub fn sum_bound_product(p: &PodWeights, alpha: f64, s: u32) -> Result<f64> {
    if p.b1() != 0.0 {
        return Err(Error::ProductFormNeedsB1Zero);
    }
    check_alpha(p, alpha)?;
    let b = p.b2() / alpha;
    let c = p.c2().powf(1.0 / alpha);
    let s_f = f64::from(s);
    let tail = (c / ((b - 1.0) * (s_f + 0.5).powf(b - 1.0))).exp();
    let mut ln_prod = kahan::Sum::new();
    for j in 1..=s as usize {
        ln_prod.add((c * (j as f64).powf(-b)).ln_1p());
    }
    Ok(p.c1().powf(1.0 / alpha) * tail * ln_prod.value().exp())
}

/// `T = ((epsilon/2) / s_bound)^(alpha/(alpha-1))`; larger bounds give
/// smaller thresholds. An infinite bound yields `T = 0`.
fn threshold_from(epsilon: f64, alpha: f64, s_bound: f64) -> f64 {
    if !s_bound.is_finite() {
        return 0.0;
    }
    ((epsilon / 2.0) / s_bound).powf(alpha / (alpha - 1.0))
}

/// Maximize `T(alpha)` over an equispaced grid on `(max(1,b1), b2)`.
///
/// Grid points are `alpha_k = lo + k (hi - lo) / grid` for `k = 1..=grid`;
/// the upper endpoint, where the bound diverges, is excluded, as is any
/// point whose bound overflows. Ties keep the smaller alpha. Uses the
/// product-form bound when `b1 = 0`, the general POD bound otherwise.
pub fn compute_tolerance(p: &PodWeights, tp: &ToleranceParams) -> Result<ToleranceResult> {
    tp.validate()?;
    let lo = p.b1().max(1.0);
    let hi = p.b2();
    let grid = f64::from(tp.alpha_grid_size);
    let mut per_alpha = Vec::new();
    let mut best: Option<AlphaSample> = None;
    for k in 1..=tp.alpha_grid_size {
        let alpha = lo + f64::from(k) * (hi - lo) / grid;
        if !(alpha > lo && alpha < hi) {
            continue;
        }
        let s_bound = if p.b1() == 0.0 {
            sum_bound_product(p, alpha, tp.s)?
        } else {
            sum_bound_pod(p, alpha, tp.s, tp.t)?
        };
        let sample = AlphaSample {
            alpha,
            sum_bound: s_bound,
            threshold: threshold_from(tp.epsilon, alpha, s_bound),
        };
        per_alpha.push(sample);
        if sample.threshold > 0.0
            && sample.threshold.is_finite()
            && best.is_none_or(|b| sample.threshold > b.threshold)
        {
            best = Some(sample);
        }
    }
    let best = best.ok_or(Error::NoAdmissibleAlpha)?;
    Ok(ToleranceResult {
        epsilon: tp.epsilon,
        alpha_star: best.alpha,
        sum_bound: best.sum_bound,
        threshold: best.threshold,
        per_alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrands::zeta;

    fn beta_model(beta: f64) -> PodWeights {
        let c1 = 1.0 / (1.0 - zeta(beta) / 2.0);
        let c2 = c1 / 12f64.sqrt();
        PodWeights::new(c1, c2, 1.0, beta).unwrap()
    }

    /// Truncated weight-power sum over `u` within `{1..=j_max}`, `|u| <= l_max`,
    /// via elementary symmetric polynomials in `x_j = (c2 j^(-b2))^(1/alpha)`:
    /// the sum over sets of fixed cardinality `l` is `(l!)^(b1/alpha) e_l(x)`.
    fn brute_force_sum(p: &PodWeights, alpha: f64, j_max: usize, l_max: usize) -> f64 {
        let x: Vec<f64> = (1..=j_max)
            .map(|j| (p.c2() * (j as f64).powf(-p.b2())).powf(1.0 / alpha))
            .collect();
        let mut e = vec![0.0f64; l_max + 1];
        e[0] = 1.0;
        for &xj in &x {
            for l in (1..=l_max).rev() {
                e[l] += xj * e[l - 1];
            }
        }
        let a = p.b1() / alpha;
        let mut total = kahan::Sum::new();
        let mut ln_fact = 0.0;
        total.add(e[0]);
        for (l, &el) in e.iter().enumerate().skip(1) {
            ln_fact += (l as f64).ln();
            total.add((a * ln_fact).exp() * el);
        }
        p.c1().powf(1.0 / alpha) * total.value()
    }

    #[test]
    fn table_thresholds_beta_4() {
        let p = beta_model(4.0);
        let cases = [
            (1e-1, 1.404_175_655_819_543e-4, 2.35),
            (1e-2, 2.803_638_274_950_312_4e-6, 2.50),
            (1e-3, 6.359_231_253_314_809e-8, 2.59),
        ];
        for (eps, t_expected, alpha_expected) in cases {
            let r = compute_tolerance(&p, &ToleranceParams::new(eps)).unwrap();
            assert!(
                (r.threshold - t_expected).abs() < 1e-12 * t_expected,
                "eps {eps}: T {} vs {t_expected}",
                r.threshold
            );
            assert!((r.alpha_star - alpha_expected).abs() < 1e-12);
        }
    }

    #[test]
    fn table_thresholds_beta_3_and_2_5() {
        let cases = [
            (3.0, 1e-1, 4.046_945_204_465_327e-6, 1.90),
            (3.0, 1e-2, 3.573_865_428_537_474_6e-8, 2.00),
            (3.0, 1e-3, 3.780_543_504_071_284_7e-10, 2.06),
            (2.5, 1e-1, 1.452_151_080_496_272e-8, 1.645),
            (2.5, 1e-2, 4.857_453_509_680_52e-11, 1.705),
        ];
        for (beta, eps, t_expected, alpha_expected) in cases {
            let p = beta_model(beta);
            let r = compute_tolerance(&p, &ToleranceParams::new(eps)).unwrap();
            assert!(
                (r.threshold - t_expected).abs() < 1e-12 * t_expected,
                "beta {beta} eps {eps}: T {} vs {t_expected}",
                r.threshold
            );
            assert!((r.alpha_star - alpha_expected).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_dominates_truncated_sums() {
        let p = beta_model(3.0);
        for alpha in [1.5, 2.0, 2.5] {
            let bound = sum_bound_pod(&p, alpha, 1000, 0.5).unwrap();
            let brute = brute_force_sum(&p, alpha, 2000, 6);
            assert!(
                bound >= brute,
                "alpha {alpha}: bound {bound} below truncated sum {brute}"
            );
        }
        let tiny = PodWeights::new(1.0, 1.0, 0.0, 4.0).unwrap();
        for alpha in [1.0, 1.5, 2.0] {
            let bound = sum_bound_pod(&tiny, alpha, 2, 0.5).unwrap();
            let brute = brute_force_sum(&tiny, alpha, 2000, 3);
            assert!(bound >= brute, "alpha {alpha}: {bound} < {brute}");
        }
    }

    #[test]
    fn alpha_one_needs_b1_below_one() {
        let p = beta_model(3.0); // b1 = 1
        assert!(matches!(
            sum_bound_pod(&p, 1.0, 10, 0.5),
            Err(Error::AlphaOutOfRange)
        ));
        assert!(sum_bound_pod(&p, 1.01, 10, 0.5).is_ok());
        let free = PodWeights::new(1.0, 0.9, 0.5, 3.0).unwrap();
        assert!(sum_bound_pod(&free, 1.0, 10, 0.5).is_ok());
        assert!(matches!(
            sum_bound_pod(&free, 3.0, 10, 0.5),
            Err(Error::AlphaOutOfRange)
        ));
    }

    #[test]
    fn tail_is_nonnegative_and_shrinks_with_s() {
        let p = beta_model(3.0);
        let alpha = 2.0;
        let a = p.b1() / alpha;
        let b = p.b2() / alpha;
        let c = p.c2().powf(1.0 / alpha);
        let z = (2.0f64 / 3.0).powf(b - 1.0) / (b - 1.0);
        let mut last = f64::INFINITY;
        for s in [10u32, 100, 1000] {
            let table = ln_factorial_table(s as usize);
            let e = pod_tail(a, c, z, s, 0.5, table[s as usize]);
            assert!(e >= 0.0);
            assert!(e < last, "tail must shrink as s grows");
            last = e;
        }
    }

    #[test]
    fn larger_bound_means_smaller_threshold() {
        let t1 = threshold_from(1e-2, 2.0, 10.0);
        let t2 = threshold_from(1e-2, 2.0, 20.0);
        assert!(t2 < t1);
        assert_eq!(threshold_from(1e-2, 2.0, f64::INFINITY), 0.0);
    }

    #[test]
    fn product_form_bound() {
        let p = PodWeights::new(1.0, 1.0, 0.0, 4.0).unwrap();
        // Degenerate c2 -> 0 limit collapses to c1^(1/alpha).
        let degenerate = PodWeights::new(1.0, 1e-300, 0.0, 4.0).unwrap();
        let b = sum_bound_product(&degenerate, 2.0, 10).unwrap();
        assert!((b - 1.0).abs() < 1e-10);

        for alpha in [1.0, 1.5, 2.0] {
            let bound = sum_bound_product(&p, alpha, 10).unwrap();
            let brute = brute_force_sum(&p, alpha, 500, 4);
            assert!(bound >= brute, "alpha {alpha}: {bound} < {brute}");
        }
        // Longer truncation tightens the bound.
        let coarse = sum_bound_product(&p, 1.0, 100).unwrap();
        let fine = sum_bound_product(&p, 1.0, 1000).unwrap();
        assert!(fine <= coarse);

        let pod = beta_model(3.0);
        assert!(matches!(
            sum_bound_product(&pod, 2.0, 10),
            Err(Error::ProductFormNeedsB1Zero)
        ));
    }

    #[test]
    fn product_bound_used_on_the_grid_when_b1_is_zero() {
        let p = PodWeights::new(1.0, 1.0, 0.0, 4.0).unwrap();
        let r = compute_tolerance(&p, &ToleranceParams::new(1e-2)).unwrap();
        let direct = sum_bound_product(&p, r.alpha_star, 1000).unwrap();
        assert!((r.sum_bound - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn divergent_corner_reports_no_admissible_alpha() {
        // b2 barely above 1 makes the series overflow at every grid point.
        let p = PodWeights::new(2.0, 0.5, 1.0, 1.0 + 1e-6).unwrap();
        assert!(matches!(
            compute_tolerance(&p, &ToleranceParams::new(1e-2)),
            Err(Error::NoAdmissibleAlpha)
        ));
    }

    #[test]
    fn rejects_bad_params() {
        let p = beta_model(3.0);
        let mut tp = ToleranceParams::new(1e-2);
        tp.t = 1.0;
        assert!(compute_tolerance(&p, &tp).is_err());
        let mut tp = ToleranceParams::new(-1.0);
        assert!(compute_tolerance(&p, &tp).is_err());
        tp = ToleranceParams::new(1e-2);
        tp.alpha_grid_size = 1;
        assert!(compute_tolerance(&p, &tp).is_err());
    }
}
