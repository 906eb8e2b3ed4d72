//! Finite variable subsets and a cardinality-indexed set store.
//!
//! A [`VarSet`] is a finite subset of the positive integers kept as a
//! strictly increasing vector; it is the key type of the whole crate. The
//! module also provides subset enumeration, the position map `u|v` that
//! locates a subset's elements inside its superset, point projection through
//! such a map, and [`SetStore`], an array of insertion-ordered hash maps
//! indexed by cardinality.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A finite subset of the positive integers, stored in increasing order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct VarSet(Vec<u32>);

impl VarSet {
    /// The empty set.
    pub fn empty() -> Self {
        VarSet(Vec::new())
    }

    /// Build from a vector; indices must be `>= 1` and strictly increasing.
    pub fn new(indices: Vec<u32>) -> Result<Self> {
        let ok = indices.first().is_none_or(|&j| j >= 1)
            && indices.windows(2).all(|w| w[0] < w[1]);
        if !ok {
            return Err(Error::InvalidParameter(
                "set indices must be positive and strictly increasing".into(),
            ));
        }
        Ok(VarSet(indices))
    }

    /// The set `{1, ..., n}`.
    pub fn first_n(n: u32) -> Self {
        VarSet((1..=n).collect())
    }

    /// Internal constructor for callers that guarantee the ordering invariant.
    pub(crate) fn from_sorted(indices: Vec<u32>) -> Self {
        debug_assert!(indices.first().is_none_or(|&j| j >= 1));
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        VarSet(indices)
    }

    /// The indices in increasing order.
    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    /// Number of elements.
    pub fn cardinality(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest element, or `None` for the empty set.
    pub fn last(&self) -> Option<u32> {
        self.0.last().copied()
    }

    pub fn contains(&self, j: u32) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    /// Subset test against `other`.
    pub fn is_subset_of(&self, other: &VarSet) -> bool {
        // Both sides are sorted; a single merge pass suffices.
        let mut it = other.0.iter();
        'outer: for &j in &self.0 {
            for &k in it.by_ref() {
                if k == j {
                    continue 'outer;
                }
                if k > j {
                    return false;
                }
            }
            return false;
        }
        true
    }
}

impl From<VarSet> for Vec<u32> {
    fn from(v: VarSet) -> Vec<u32> {
        v.0
    }
}

impl TryFrom<Vec<u32>> for VarSet {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<VarSet> {
        VarSet::new(v)
    }
}

impl std::fmt::Display for VarSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (k, j) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{j}")?;
        }
        write!(f, ")")
    }
}

/// Iterate over all `2^|u|` subsets of `u` in increasing bitmask order.
///
/// Mask bit `k` selects the `k`-th smallest element, so the empty set comes
/// first and `u` itself last; the order is deterministic, which keeps every
/// coefficient table built from it reproducible.
pub fn subsets_of(u: &VarSet) -> Result<impl Iterator<Item = VarSet> + '_> {
    let n = u.cardinality();
    if n > 64 {
        return Err(Error::SetTooLarge);
    }
    let total: u128 = 1u128 << n;
    Ok((0..total).map(move |mask| {
        let picked = (0..n)
            .filter(|&k| mask >> k & 1 == 1)
            .map(|k| u.0[k])
            .collect();
        VarSet::from_sorted(picked)
    }))
}

/// Positions of `v`'s elements inside `u`, 1-based.
///
/// For `u = (1,5,7)` and `v = (1,7)` the result is `(1,3)`: the first and
/// third entries of `u` carry `v`.
pub fn position_map(u: &VarSet, v: &VarSet) -> Result<VarSet> {
    let mut w = Vec::with_capacity(v.cardinality());
    let mut from = 0usize;
    for &j in &v.0 {
        match u.0[from..].binary_search(&j) {
            Ok(k) => {
                w.push((from + k + 1) as u32);
                from += k + 1;
            }
            Err(_) => return Err(Error::NotASubset),
        }
    }
    Ok(VarSet::from_sorted(w))
}

/// Select the coordinates of `t` listed by the 1-based position set `w`.
pub fn project_point(t: &[f64], w: &VarSet) -> Result<Vec<f64>> {
    w.0.iter()
        .map(|&k| {
            t.get(k as usize - 1)
                .copied()
                .ok_or(Error::IndexOutOfRange)
        })
        .collect()
}

/// Map from [`VarSet`] to payload `P`, bucketed by cardinality.
///
/// Buckets are insertion-ordered maps, so iterating the store visits sets by
/// increasing cardinality and, within one cardinality, in the order they were
/// inserted. All builders insert deterministically, which makes every
/// downstream iteration deterministic too.
#[derive(Clone, Debug)]
pub struct SetStore<P> {
    tables: Vec<IndexMap<VarSet, P>>,
}

impl<P> Default for SetStore<P> {
    fn default() -> Self {
        Self::new()
    }
}

impl<P> SetStore<P> {
    pub fn new() -> Self {
        SetStore { tables: Vec::new() }
    }

    /// Insert or replace; returns the previous payload if any.
    pub fn insert(&mut self, v: VarSet, payload: P) -> Option<P> {
        let card = v.cardinality();
        while self.tables.len() <= card {
            self.tables.push(IndexMap::new());
        }
        self.tables[card].insert(v, payload)
    }

    pub fn get(&self, v: &VarSet) -> Option<&P> {
        self.tables.get(v.cardinality())?.get(v)
    }

    pub fn get_mut(&mut self, v: &VarSet) -> Option<&mut P> {
        self.tables.get_mut(v.cardinality())?.get_mut(v)
    }

    /// Payload of `v`, inserting `default()` first when absent.
    pub fn entry_or_insert_with(&mut self, v: &VarSet, default: impl FnOnce() -> P) -> &mut P {
        let card = v.cardinality();
        while self.tables.len() <= card {
            self.tables.push(IndexMap::new());
        }
        self.tables[card]
            .entry(v.clone())
            .or_insert_with(default)
    }

    pub fn contains(&self, v: &VarSet) -> bool {
        self.get(v).is_some()
    }

    /// Total number of stored sets.
    pub fn len(&self) -> usize {
        self.tables.iter().map(IndexMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.iter().all(IndexMap::is_empty)
    }

    /// Largest cardinality with at least one stored set (0 when empty).
    pub fn max_cardinality(&self) -> usize {
        self.tables
            .iter()
            .enumerate()
            .rev()
            .find(|(_, t)| !t.is_empty())
            .map_or(0, |(card, _)| card)
    }

    /// Stored sets per cardinality, index = cardinality.
    pub fn counts(&self) -> Vec<usize> {
        let top = self.max_cardinality();
        (0..=top)
            .map(|card| self.tables.get(card).map_or(0, IndexMap::len))
            .collect()
    }

    /// Iterate by increasing cardinality, then insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&VarSet, &P)> {
        self.tables.iter().flat_map(IndexMap::iter)
    }

    /// Iterate the sets of one cardinality in insertion order.
    pub fn iter_cardinality(&self, card: usize) -> impl Iterator<Item = (&VarSet, &P)> {
        self.tables.get(card).into_iter().flat_map(IndexMap::iter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vs(indices: &[u32]) -> VarSet {
        VarSet::new(indices.to_vec()).unwrap()
    }

    #[test]
    fn rejects_unordered_and_zero_indices() {
        assert!(VarSet::new(vec![0]).is_err());
        assert!(VarSet::new(vec![2, 2]).is_err());
        assert!(VarSet::new(vec![3, 1]).is_err());
        assert!(VarSet::new(vec![1, 5, 7]).is_ok());
    }

    #[test]
    fn subsets_of_empty_set_is_just_empty() {
        let u = VarSet::empty();
        let all: Vec<_> = subsets_of(&u).unwrap().collect();
        assert_eq!(all, vec![VarSet::empty()]);
    }

    #[test]
    fn subsets_of_singleton() {
        let u = vs(&[3]);
        let all: Vec<_> = subsets_of(&u).unwrap().collect();
        assert_eq!(all, vec![VarSet::empty(), vs(&[3])]);
    }

    #[test]
    fn subsets_of_triple_has_eight_members() {
        let u = vs(&[1, 5, 7]);
        let all: Vec<_> = subsets_of(&u).unwrap().collect();
        assert_eq!(all.len(), 8);
        assert!(all.contains(&vs(&[1, 7])));
        assert!(all.contains(&vs(&[5])));
        assert!(all.contains(&u));
    }

    #[test]
    fn oversized_set_is_rejected() {
        let u = VarSet::new((1..=65).collect()).unwrap();
        assert!(matches!(subsets_of(&u), Err(Error::SetTooLarge)));
    }

    #[test]
    fn position_map_known_values() {
        assert_eq!(
            position_map(&vs(&[1, 5, 7]), &vs(&[1, 7])).unwrap(),
            vs(&[1, 3])
        );
        assert_eq!(
            position_map(&vs(&[2, 4]), &vs(&[2, 4])).unwrap(),
            vs(&[1, 2])
        );
        assert_eq!(
            position_map(&vs(&[1, 4, 7, 13]), &vs(&[1, 7])).unwrap(),
            vs(&[1, 3])
        );
    }

    #[test]
    fn position_map_rejects_non_subset() {
        assert!(matches!(
            position_map(&vs(&[1, 5, 7]), &vs(&[2])),
            Err(Error::NotASubset)
        ));
    }

    #[test]
    fn project_point_selects_coordinates() {
        let t = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(project_point(&t, &vs(&[1, 3])).unwrap(), vec![0.1, 0.3]);
        assert_eq!(project_point(&t, &vs(&[2, 4])).unwrap(), vec![0.2, 0.4]);
        assert!(project_point(&t[..1], &vs(&[2])).is_err());
    }

    #[test]
    fn store_groups_by_cardinality() {
        let mut store = SetStore::new();
        store.insert(VarSet::empty(), 0);
        store.insert(vs(&[2]), 1);
        store.insert(vs(&[1, 9]), 2);
        store.insert(vs(&[4]), 3);
        assert_eq!(store.len(), 4);
        assert_eq!(store.max_cardinality(), 2);
        assert_eq!(store.counts(), vec![1, 2, 1]);
        let order: Vec<_> = store.iter().map(|(v, _)| v.clone()).collect();
        assert_eq!(order, vec![VarSet::empty(), vs(&[2]), vs(&[4]), vs(&[1, 9])]);
    }

    #[test]
    fn store_round_trips_a_hundred_thousand_payloads() {
        let mut store = SetStore::new();
        let mut keys = Vec::new();
        for a in 1u32..=450 {
            for b in (a + 1)..=450 {
                keys.push(vs(&[a, b]));
            }
        }
        assert!(keys.len() > 100_000);
        for (i, k) in keys.iter().enumerate() {
            store.insert(k.clone(), i);
        }
        for (i, k) in keys.iter().enumerate() {
            assert_eq!(store.get(k), Some(&i));
        }
    }

    #[test]
    fn varset_json_round_trip_validates() {
        let v = vs(&[1, 5, 7]);
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, "[1,5,7]");
        let back: VarSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<VarSet>("[5,1]").is_err());
    }

    proptest! {
        #[test]
        fn subsets_are_distinct_and_complete(raw in proptest::collection::btree_set(1u32..60, 0..=10)) {
            let u = VarSet::new(raw.into_iter().collect()).unwrap();
            let all: Vec<_> = subsets_of(&u).unwrap().collect();
            prop_assert_eq!(all.len(), 1usize << u.cardinality());
            let distinct: std::collections::HashSet<_> = all.iter().cloned().collect();
            prop_assert_eq!(distinct.len(), all.len());
            for v in &all {
                prop_assert!(v.is_subset_of(&u));
            }
        }

        #[test]
        fn position_map_recovers_the_subset(raw in proptest::collection::btree_set(1u32..60, 1..=10), mask in 0u64..1024) {
            let u = VarSet::new(raw.into_iter().collect()).unwrap();
            let picked: Vec<u32> = u
                .indices()
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .map(|(_, &j)| j)
                .collect();
            let v = VarSet::new(picked).unwrap();
            let w = position_map(&u, &v).unwrap();
            prop_assert_eq!(w.cardinality(), v.cardinality());
            for (k, &pos) in w.indices().iter().enumerate() {
                prop_assert_eq!(u.indices()[pos as usize - 1], v.indices()[k]);
            }
        }

        #[test]
        fn store_round_trips_random_batches(keys in proptest::collection::hash_set(
            proptest::collection::btree_set(1u32..40, 0..=6), 1..200)) {
            let mut store = SetStore::new();
            let keys: Vec<VarSet> = keys
                .into_iter()
                .map(|s| VarSet::new(s.into_iter().collect()).unwrap())
                .collect();
            for (i, k) in keys.iter().enumerate() {
                store.insert(k.clone(), i);
            }
            for (i, k) in keys.iter().enumerate() {
                prop_assert_eq!(store.get(k), Some(&i));
            }
            prop_assert_eq!(store.len(), keys.len());
        }
    }
}
