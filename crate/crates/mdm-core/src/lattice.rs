//! Extensible rank-1 lattice points, tent transform, and random shifts.
//!
//! The point stream enumerates a rank-1 lattice in radical-inverse (base-2
//! van der Corput) order: point `i` is `{phi2(i) * z mod 1}` with `phi2`
//! scaled to the fixed modulus `2^m_cap`. In this ordering every prefix of
//! `2^m` points is exactly the `2^m`-point lattice `{i z / 2^m}`, so a rule
//! can be extended by doubling: level `m` adds the blocks of indices
//! `[2^(m-1), 2^m)`, and partial sums over blocks can be shared between
//! rules of different levels.
//!
//! Coordinates are computed in exact integer arithmetic (`2^m_cap` divides
//! a 64-bit word) before the single final division, so the same `(i, j)`
//! always yields the identical floating-point value.
//!
//! Integration over `[-1/2, 1/2]` boxes composes three steps: an optional
//! random shift modulo 1, the tent map that folds `[0,1)` onto itself to
//! restore first-order convergence for non-periodic integrands, and the
//! translation by `-1/2`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{Error, Result};

/// The 20 generating-vector components of the reference rule. The repeat at
/// positions 17 and 18 is transcribed from the published table verbatim.
pub const GENERATING_VECTOR: [u64; 20] = [
    1, 756581, 694385, 178383, 437131, 945527, 62405, 1079809, 991997, 750785, 187845, 1666795,
    491701, 1092667, 1279469, 817683, 1946073, 1946073, 1530387, 686611,
];

/// Power cap of the standard sequence: indices run below `2^25`.
pub const DEFAULT_M_CAP: u32 = 25;

/// The published generating vector, all 20 components.
pub fn default_generating_vector() -> Vec<u64> {
    GENERATING_VECTOR.to_vec()
}

/// An extensible rank-1 lattice in radical-inverse block ordering.
#[derive(Clone, Debug)]
pub struct LatticeSequence {
    z: Vec<u64>,
    z_mod: Vec<u64>,
    m_cap: u32,
}

impl LatticeSequence {
    /// The published 20-dimensional sequence with cap 25.
    pub fn standard() -> Self {
        Self::new(default_generating_vector(), DEFAULT_M_CAP).expect("standard vector is valid")
    }

    pub fn new(z: Vec<u64>, m_cap: u32) -> Result<Self> {
        if !(1..=62).contains(&m_cap) {
            return Err(Error::InvalidParameter(
                "lattice power cap must lie in 1..=62".into(),
            ));
        }
        if z.is_empty() || z.contains(&0) {
            return Err(Error::InvalidParameter(
                "generating vector components must be positive".into(),
            ));
        }
        let modulus = 1u64 << m_cap;
        let z_mod = z.iter().map(|&c| c & (modulus - 1)).collect();
        Ok(LatticeSequence { z, z_mod, m_cap })
    }

    pub fn m_cap(&self) -> u32 {
        self.m_cap
    }

    /// Number of coordinates available.
    pub fn dimension(&self) -> usize {
        self.z.len()
    }

    pub fn generating_vector(&self) -> &[u64] {
        &self.z
    }

    /// Coordinate `j` (0-based) of point `i`; exact dyadic in `[0,1)`.
    /// Callers must keep `i < 2^m_cap` and `j < dimension()`.
    pub fn coordinate(&self, i: u64, j: usize) -> f64 {
        debug_assert!(i < 1u64 << self.m_cap, "point index beyond capacity");
        let rev = i.reverse_bits() >> (64 - self.m_cap);
        let modulus = 1u64 << self.m_cap;
        ((rev * self.z_mod[j]) & (modulus - 1)) as f64 / modulus as f64
    }

    /// First `d` coordinates of point `i`.
    pub fn point(&self, i: u64, d: usize) -> Result<Vec<f64>> {
        if i >= 1u64 << self.m_cap {
            return Err(Error::IndexOutOfRange);
        }
        if d > self.z.len() {
            return Err(Error::GeneratingVectorExhausted);
        }
        Ok((0..d).map(|j| self.coordinate(i, j)).collect())
    }

    /// Shifted, folded, translated point: componentwise
    /// `tent((point + delta) mod 1)` in `[-1/2, 1/2]`. `delta` must already
    /// be restricted to the first `d` coordinates.
    pub fn shifted_point(&self, i: u64, d: usize, delta: &[f64]) -> Result<Vec<f64>> {
        if delta.len() != d {
            return Err(Error::InvalidParameter(
                "shift must have one component per coordinate".into(),
            ));
        }
        let raw = self.point(i, d)?;
        Ok(raw
            .iter()
            .zip(delta)
            .map(|(&x, &s)| tent((x + s).fract()))
            .collect())
    }
}

/// Fold-and-translate map: `(1 - |2x - 1|) - 1/2`, taking `[0,1]` onto
/// `[-1/2, 1/2]` with both endpoints at `-1/2`.
pub fn tent(x: f64) -> f64 {
    (1.0 - (2.0 * x - 1.0).abs()) - 0.5
}

/// Componentwise [`tent`].
pub fn tent_translate(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&c| tent(c)).collect()
}

/// Index block a level contributes: level 0 is the origin point, level
/// `m >= 1` adds `[2^(m-1), 2^m)`.
pub fn block_range(m: u32) -> std::ops::Range<u64> {
    if m == 0 {
        0..1
    } else {
        (1u64 << (m - 1))..(1u64 << m)
    }
}

/// Number of points in [`block_range`].
pub fn block_size(m: u32) -> u64 {
    if m == 0 {
        1
    } else {
        1u64 << (m - 1)
    }
}

/// A random shift: one offset in `[0,1)` per variable index.
#[derive(Clone, Debug, Serialize)]
pub struct Shift {
    delta: Vec<f64>,
}

impl Shift {
    pub fn new(delta: Vec<f64>) -> Result<Self> {
        if delta.iter().any(|&s| !(0.0..1.0).contains(&s)) {
            return Err(Error::InvalidParameter(
                "shift components must lie in [0,1)".into(),
            ));
        }
        Ok(Shift { delta })
    }

    /// The identity shift.
    pub fn zeros(len: usize) -> Self {
        Shift {
            delta: vec![0.0; len],
        }
    }

    /// Deterministic shift stream: one independent stream per shift index,
    /// components drawn in coordinate order, so the same `(seed, stream)`
    /// yields the same shift regardless of how evaluations are scheduled.
    pub fn generate(seed: u64, stream: u64, len: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Shift {
            delta: (0..len).map(|_| rng.random::<f64>()).collect(),
        }
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}
