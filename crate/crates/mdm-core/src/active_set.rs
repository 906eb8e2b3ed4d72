//! Construction of the active set `U = {u : w(u) > T}`.
//!
//! POD weights decay both in the variable indices and in the cardinality, so
//! the set of subsets above a positive threshold is finite and can be walked
//! without enumerating the full powerset. The generator keeps one candidate
//! `u = (u_1 < ... < u_l)` per cardinality `l` and an attention index `i`:
//! a candidate above the threshold is stored and the last element advances;
//! a failing candidate moves attention one position left, bumps that element
//! and rewrites the tail to the smallest admissible ascending run. When
//! attention falls off the left edge the cardinality is exhausted; when a
//! whole cardinality yields nothing, no larger one can succeed (weights only
//! shrink when variables are added) and construction stops.
//!
//! Alongside the sets the build records the census used by the cost model:
//! `d_sup` (largest cardinality present), `tau_l` (largest variable index
//! among sets of cardinality `l`) and `tau_star = max_l tau_l`, the number
//! of variables any evaluation can touch.

use std::io::{BufRead, Write};

use serde::Serialize;

use crate::pod_weights::PodWeights;
use crate::setkit::{SetStore, VarSet};
use crate::{Error, Result};

/// Cardinality cap of [`build_active_set`]. Hitting it is an error rather
/// than a truncation: a clipped active set would silently void the error
/// request the threshold was derived from.
pub const DEFAULT_CARDINALITY_CAP: u32 = 64;

/// The sets above the threshold, with their dimension statistics.
#[derive(Clone, Debug)]
pub struct ActiveSet {
    store: SetStore<()>,
    threshold: f64,
    d_sup: usize,
    tau: Vec<u32>,
    tau_star: u32,
    counts: Vec<usize>,
}

/// Census row: threshold and dimension statistics of one active set.
#[derive(Clone, Debug, Serialize)]
pub struct ActiveSetSummary {
    #[serde(rename = "T")]
    pub threshold: f64,
    pub total_sets: usize,
    pub d_sup: usize,
    pub tau: Vec<u32>,
    pub tau_star: u32,
    pub counts: Vec<usize>,
}

/// Build `{u : w(u) > T}` by the incremental generate-and-check walk.
///
/// `ell_threshold` caps the cardinality ([`DEFAULT_CARDINALITY_CAP`] is the
/// standard choice); reaching it while sets are still being found is an
/// error, as is a threshold at or above `w(empty)`.
pub fn build_active_set(
    p: &PodWeights,
    threshold: f64,
    ell_threshold: u32,
) -> Result<ActiveSet> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidParameter(
            "threshold must be positive and finite".into(),
        ));
    }
    if ell_threshold < 1 {
        return Err(Error::InvalidParameter(
            "cardinality cap must be at least 1".into(),
        ));
    }
    let ln_t = threshold.ln();
    if p.weight_log(&VarSet::empty()) <= ln_t {
        return Err(Error::EmptyActiveSet);
    }
    let mut store = SetStore::new();
    store.insert(VarSet::empty(), ());
    for ell in 1..=ell_threshold {
        let ell_us = ell as usize;
        let mut u: Vec<u32> = (1..=ell).collect();
        let mut i = ell_us;
        let mut found = 0usize;
        loop {
            if p.weight_log_indices(&u) > ln_t {
                i = ell_us;
                store.insert(VarSet::from_sorted(u.clone()), ());
                found += 1;
            } else {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            // Bump position i and rewrite the tail as consecutive indices.
            let base = u[i - 1];
            for j in i..=ell_us {
                u[j - 1] = base + (j - i) as u32 + 1;
            }
        }
        if found == 0 {
            break;
        }
        if ell == ell_threshold {
            return Err(Error::CardinalityCapHit);
        }
    }
    Ok(finish(store, threshold))
}

fn finish(store: SetStore<()>, threshold: f64) -> ActiveSet {
    let d_sup = store.max_cardinality();
    let mut tau = vec![0u32; d_sup];
    let mut counts = vec![0usize; d_sup];
    for card in 1..=d_sup {
        for (set, ()) in store.iter_cardinality(card) {
            counts[card - 1] += 1;
            let last = set.last().expect("nonempty by construction");
            if last > tau[card - 1] {
                tau[card - 1] = last;
            }
        }
    }
    let tau_star = tau.iter().copied().max().unwrap_or(0);
    ActiveSet {
        store,
        threshold,
        d_sup,
        tau,
        tau_star,
        counts,
    }
}

impl ActiveSet {
    /// Rebuild from an explicit list of sets (the import path). The empty
    /// set must be present; duplicates are rejected.
    pub fn from_sets(sets: Vec<VarSet>, threshold: f64) -> Result<Self> {
        let mut store = SetStore::new();
        let mut has_empty = false;
        for set in sets {
            has_empty |= set.is_empty();
            if store.insert(set, ()).is_some() {
                return Err(Error::InvalidParameter("duplicate set".into()));
            }
        }
        if !has_empty {
            return Err(Error::InvalidParameter(
                "active set must contain the empty set".into(),
            ));
        }
        Ok(finish(store, threshold))
    }

    /// All sets, by increasing cardinality and in generation order within
    /// each cardinality (which is lexicographic).
    pub fn iter(&self) -> impl Iterator<Item = &VarSet> {
        self.store.iter().map(|(set, ())| set)
    }

    pub fn contains(&self, u: &VarSet) -> bool {
        self.store.contains(u)
    }

    /// Number of sets including the empty set; at least 1.
    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Largest cardinality present; 0 when only the empty set survived.
    pub fn d_sup(&self) -> usize {
        self.d_sup
    }

    /// Largest variable index among sets of cardinality `l`, at `tau()[l-1]`.
    pub fn tau(&self) -> &[u32] {
        &self.tau
    }

    /// Largest variable index any stored set touches; 0 when only the empty
    /// set survived.
    pub fn tau_star(&self) -> u32 {
        self.tau_star
    }

    /// Sets per cardinality, at `counts()[l-1]`; excludes the empty set.
    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// `(d_sup, tau per cardinality, tau_star)` in one call.
    pub fn dimension_stats(&self) -> (usize, &[u32], u32) {
        (self.d_sup, &self.tau, self.tau_star)
    }

    pub fn summary(&self) -> ActiveSetSummary {
        ActiveSetSummary {
            threshold: self.threshold,
            total_sets: self.len(),
            d_sup: self.d_sup,
            tau: self.tau.clone(),
            tau_star: self.tau_star,
            counts: self.counts.clone(),
        }
    }

    /// One JSON array of indices per line, in iteration order.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for set in self.iter() {
            serde_json::to_writer(&mut out, set)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Inverse of [`ActiveSet::write_jsonl`]; blank lines are ignored and
    /// each parsed line is re-validated.
    pub fn read_jsonl<R: BufRead>(reader: R, threshold: f64) -> Result<Self> {
        let mut sets = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            sets.push(serde_json::from_str::<VarSet>(&line)?);
        }
        Self::from_sets(sets, threshold)
    }
}
