//! One-dimensional quadrature rule families for sparse grids.
//!
//! A family is a sequence of rules `U_1, U_2, ...` on `[-1/2, 1/2]`, each a
//! point/weight list, with `U_0` defined as the zero algorithm. The shipped
//! family is the nested composite trapezoidal hierarchy: level 1 is the
//! single midpoint, level `i >= 2` has `2^(i-1) + 1` points, and each level
//! lists the previous level's points first so that sparse-grid code can
//! enumerate only the new points of a level. Custom families, nested or not,
//! plug in through [`Rule1dFamily::custom`].

use std::sync::{Arc, Mutex};

use crate::kahan;

/// Points and weights of one rule level.
#[derive(Clone, Debug)]
pub struct Level {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// A sequence of one-dimensional rules with cached levels.
pub struct Rule1dFamily {
    nested: bool,
    count: fn(usize) -> usize,
    build: fn(usize) -> Level,
    cache: Mutex<Vec<Option<Arc<Level>>>>,
}

/// Trapezoid node for global index `k`; independent of the level.
///
/// The hierarchy orders nodes as 0, +1/2, -1/2, +1/4, -1/4, +1/8, -1/8,
/// +3/8, -3/8, ... For odd `k >= 3` the node is `k/2^p - 1/2` with `p` the
/// bit length of `k`; the following even index is its mirror image. The
/// formula has no valid `p` for `k = 1`, so the two endpoints are pinned
/// explicitly, matching the stated ordering.
fn trapezoid_node(k: usize) -> f64 {
    match k {
        0 => 0.0,
        1 => 0.5,
        2 => -0.5,
        k if k % 2 == 1 => {
            let p = usize::BITS - k.leading_zeros();
            k as f64 / f64::powi(2.0, p as i32) - 0.5
        }
        k => -trapezoid_node(k - 1),
    }
}

fn trapezoid_count(i: usize) -> usize {
    match i {
        0 => 0,
        1 => 1,
        i => (1 << (i - 1)) + 1,
    }
}

fn trapezoid_level(i: usize) -> Level {
    assert!(i >= 1, "levels start at 1");
    let n = trapezoid_count(i);
    let points: Vec<f64> = (0..n).map(trapezoid_node).collect();
    let weights = if i == 1 {
        vec![1.0]
    } else {
        // 1/2^(i-1) at interior points, 1/2^i at the endpoints +-1/2.
        let interior = f64::powi(2.0, -(i as i32 - 1));
        let endpoint = f64::powi(2.0, -(i as i32));
        (0..n)
            .map(|k| if k == 1 || k == 2 { endpoint } else { interior })
            .collect()
    };
    Level { points, weights }
}

impl Rule1dFamily {
    /// The nested composite trapezoidal hierarchy on `[-1/2, 1/2]`.
    pub fn trapezoidal() -> Self {
        Self::custom(true, trapezoid_count, trapezoid_level)
    }

    /// Any rule family given its point count and level builder.
    ///
    /// `nested` promises that level `i` lists the points of level `i - 1`
    /// first; sparse-grid code uses that to visit each point once.
    pub fn custom(nested: bool, count: fn(usize) -> usize, build: fn(usize) -> Level) -> Self {
        Rule1dFamily {
            nested,
            count,
            build,
            cache: Mutex::new(Vec::new()),
        }
    }

    pub fn nested(&self) -> bool {
        self.nested
    }

    /// Number of points of level `i`; `n(0) = 0`.
    pub fn n(&self, i: usize) -> usize {
        (self.count)(i)
    }

    /// Points and weights of level `i >= 1`, built once and shared.
    pub fn level(&self, i: usize) -> Arc<Level> {
        assert!(i >= 1, "levels start at 1");
        let mut cache = self.cache.lock().expect("rule cache poisoned");
        if cache.len() < i {
            cache.resize(i, None);
        }
        cache[i - 1]
            .get_or_insert_with(|| Arc::new((self.build)(i)))
            .clone()
    }

    /// Apply rule `i` to `g`; level 0 is the zero algorithm.
    pub fn apply(&self, i: usize, mut g: impl FnMut(f64) -> f64) -> f64 {
        if i == 0 {
            return 0.0;
        }
        let level = self.level(i);
        kahan::sum(
            level
                .points
                .iter()
                .zip(&level.weights)
                .map(|(&t, &w)| w * g(t)),
        )
    }
}
