//! Integer coefficient tables that regroup the decomposition sums.
//!
//! Expanding every decomposition term `f_u` costs `2^|u|` evaluations of the
//! integrand. Summed over the active set those expansions share almost all
//! of their evaluation sets, so the double sum over `(u, v subset of u)` is
//! regrouped into a single sum over the subset-closure `U_ext` with integer
//! coefficients attached to each member `v`:
//!
//! * **direct sparse-grid**: `c(v, m)` counts, with alternating sign, the
//!   active supersets of `v` assigned level `m`; the engine then evaluates
//!   one level-`m` rule per nonzero entry.
//! * **combination technique**: `ct(v, m)` additionally folds in the
//!   alternating binomial weights that assemble a sparse rule from plain
//!   tensor layers, so the engine only ever evaluates single layers.
//! * **lattice**: per `v`, supersets act through the *position* `w` their
//!   variables of `v` occupy; coefficients `c(v, w, m)` carry the exact
//!   power-of-two rescaling `2^(m_max - m_u)` so that every block sum is
//!   combined by integer arithmetic and divided once by `2^m_max` at the
//!   end.
//!
//! The scalar `c_empty` collects the alternating count of all active sets
//! and multiplies the single anchor evaluation `f(0)`.

use indexmap::IndexMap;
use std::collections::BTreeMap;

use crate::active_set::ActiveSet;
use crate::setkit::{position_map, subsets_of, SetStore, VarSet};
use crate::smolyak::binomial;
use crate::{Error, Result};

/// Quadrature level per nonempty active set.
#[derive(Clone, Debug)]
pub struct LevelAssignment {
    store: SetStore<u32>,
    m_max: u32,
}

/// Hard cap on any level: `2^m_max` must stay inside a signed 64-bit value
/// with room for the alternating sums on top.
pub const LEVEL_CAP: u32 = 62;

impl LevelAssignment {
    /// Wrap a per-set level map. Rejects an entry for the empty set (the
    /// anchor term is a single evaluation, never a quadrature) and any
    /// level above [`LEVEL_CAP`].
    pub fn new(store: SetStore<u32>) -> Result<Self> {
        let mut m_max = 0;
        for (v, &m) in store.iter() {
            if v.is_empty() {
                return Err(Error::InvalidParameter(
                    "the empty set takes no quadrature level".into(),
                ));
            }
            if m > LEVEL_CAP {
                return Err(Error::LevelCapExceeded(m));
            }
            m_max = m_max.max(m);
        }
        Ok(LevelAssignment { store, m_max })
    }

    /// Same level for every nonempty set of `a` (test helper).
    pub fn uniform(a: &ActiveSet, m: u32) -> Result<Self> {
        let mut store = SetStore::new();
        for u in a.iter().filter(|u| !u.is_empty()) {
            store.insert(u.clone(), m);
        }
        LevelAssignment::new(store)
    }

    pub fn level(&self, u: &VarSet) -> Option<u32> {
        self.store.get(u).copied()
    }

    /// Largest assigned level; 0 when no set has one.
    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarSet, u32)> {
        self.store.iter().map(|(v, &m)| (v, m))
    }

    /// Every nonempty set of `a` has a level.
    pub(crate) fn check_covers(&self, a: &ActiveSet) -> Result<()> {
        for u in a.iter() {
            if !u.is_empty() && self.store.get(u).is_none() {
                return Err(Error::InvalidParameter(format!(
                    "missing quadrature level for {u}"
                )));
            }
        }
        Ok(())
    }
}

/// Sparse map `m -> coefficient`.
pub type MTable = BTreeMap<u32, i64>;

/// Coefficients for the direct sparse-grid engine.
#[derive(Clone, Debug)]
pub struct SmolyakTables {
    ext: SetStore<MTable>,
    c_empty: i64,
}

/// Coefficients for the combination-technique engine.
#[derive(Clone, Debug)]
pub struct CombinationTables {
    ext: SetStore<MTable>,
    c_empty: i64,
}

/// Coefficients for the lattice engine: per set, per position, per level.
#[derive(Clone, Debug)]
pub struct QmcTables {
    ext: SetStore<IndexMap<VarSet, MTable>>,
    c_empty: i64,
    m_max: u32,
}

fn sign_of(parity: usize) -> i64 {
    if parity.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// `sum over u in U of (-1)^|u|`, the weight of the anchor evaluation.
fn alternating_count(a: &ActiveSet) -> i64 {
    let mut c = 0i64;
    for u in a.iter() {
        c += sign_of(u.cardinality());
    }
    c
}

/// Seed a store with one (empty-payload) entry per subset-closure member,
/// so the extension is identical across the three builders.
fn closure_store<P: Default>(a: &ActiveSet) -> Result<SetStore<P>> {
    let mut ext = SetStore::new();
    for u in a.iter() {
        for v in subsets_of(u)? {
            ext.entry_or_insert_with(&v, P::default);
        }
    }
    Ok(ext)
}

impl SmolyakTables {
    pub fn c_empty(&self) -> i64 {
        self.c_empty
    }

    pub fn ext(&self) -> &SetStore<MTable> {
        &self.ext
    }

    pub fn coefficient(&self, v: &VarSet, m: u32) -> i64 {
        self.ext
            .get(v)
            .and_then(|table| table.get(&m).copied())
            .unwrap_or(0)
    }
}

impl CombinationTables {
    pub fn c_empty(&self) -> i64 {
        self.c_empty
    }

    pub fn ext(&self) -> &SetStore<MTable> {
        &self.ext
    }

    pub fn coefficient(&self, v: &VarSet, m: u32) -> i64 {
        self.ext
            .get(v)
            .and_then(|table| table.get(&m).copied())
            .unwrap_or(0)
    }
}

impl QmcTables {
    pub fn c_empty(&self) -> i64 {
        self.c_empty
    }

    /// The common denominator level: block sums carry integer coefficients
    /// scaled by `2^(m_max - m_u)` and are divided by `2^m_max` once.
    pub fn m_max(&self) -> u32 {
        self.m_max
    }

    pub fn ext(&self) -> &SetStore<IndexMap<VarSet, MTable>> {
        &self.ext
    }

    pub fn coefficient(&self, v: &VarSet, w: &VarSet, m: u32) -> i64 {
        self.ext
            .get(v)
            .and_then(|positions| positions.get(w))
            .and_then(|table| table.get(&m).copied())
            .unwrap_or(0)
    }
}

/// `c(v, m) = sum over active u containing v with m_u = m of (-1)^(|u|-|v|)`.
pub fn build_smolyak_tables(a: &ActiveSet, levels: &LevelAssignment) -> Result<SmolyakTables> {
    levels.check_covers(a)?;
    let mut ext: SetStore<MTable> = closure_store(a)?;
    for u in a.iter().filter(|u| !u.is_empty()) {
        let m_u = levels.level(u).expect("coverage checked");
        let lu = u.cardinality();
        for v in subsets_of(u)?.filter(|v| !v.is_empty()) {
            let sign = sign_of(lu - v.cardinality());
            let table = ext.get_mut(&v).expect("closure contains every subset");
            let slot = table.entry(m_u).or_insert(0);
            *slot = slot.checked_add(sign).ok_or(Error::CoefficientOverflow)?;
        }
    }
    Ok(SmolyakTables {
        ext,
        c_empty: alternating_count(a),
    })
}

/// Combination-technique variant: the level entry `m_u` spreads over
/// `m in max(m_u - |v| + 1, 1) ..= m_u` with alternating binomial weights.
pub fn build_combination_tables(
    a: &ActiveSet,
    levels: &LevelAssignment,
) -> Result<CombinationTables> {
    levels.check_covers(a)?;
    let mut ext: SetStore<MTable> = closure_store(a)?;
    for u in a.iter().filter(|u| !u.is_empty()) {
        let m_u = levels.level(u).expect("coverage checked");
        let lu = u.cardinality();
        for v in subsets_of(u)?.filter(|v| !v.is_empty()) {
            let lv = v.cardinality();
            let base_sign = sign_of(lu - lv);
            let m_lo = (m_u as i64 - lv as i64 + 1).max(1) as u32;
            let table = ext.get_mut(&v).expect("closure contains every subset");
            for m in m_lo..=m_u {
                let offset = (m_u - m) as usize;
                let term = base_sign * sign_of(offset) * binomial(lv - 1, offset);
                let slot = table.entry(m).or_insert(0);
                *slot = slot.checked_add(term).ok_or(Error::CoefficientOverflow)?;
            }
        }
    }
    Ok(CombinationTables {
        ext,
        c_empty: alternating_count(a),
    })
}

/// Lattice variant: supersets contribute through the position map, levels
/// run from 0 to `m_u`, and each contribution carries the exact scaling
/// `2^(m_max - m_u)`.
pub fn build_qmc_tables(a: &ActiveSet, levels: &LevelAssignment) -> Result<QmcTables> {
    levels.check_covers(a)?;
    let m_max = levels.m_max();
    // Alternating sums stack at most |U| scaled contributions; keep the
    // total strictly inside i64.
    let capacity = 1i64 << (LEVEL_CAP - m_max);
    if a.len() as i64 >= capacity {
        return Err(Error::CoefficientOverflow);
    }
    let mut ext: SetStore<IndexMap<VarSet, MTable>> = closure_store(a)?;
    for u in a.iter().filter(|u| !u.is_empty()) {
        let m_u = levels.level(u).expect("coverage checked");
        let lu = u.cardinality();
        let scaled = 1i64 << (m_max - m_u);
        for v in subsets_of(u)?.filter(|v| !v.is_empty()) {
            let term = sign_of(lu - v.cardinality()) * scaled;
            let w = position_map(u, &v)?;
            let positions = ext.get_mut(&v).expect("closure contains every subset");
            let table = positions.entry(w).or_default();
            for m in 0..=m_u {
                let slot = table.entry(m).or_insert(0);
                *slot = slot.checked_add(term).ok_or(Error::CoefficientOverflow)?;
            }
        }
    }
    Ok(QmcTables {
        ext,
        c_empty: alternating_count(a),
        m_max,
    })
}
