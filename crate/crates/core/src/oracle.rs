//! Exhaustive ground truth for small instances.
//!
//! Nothing here reuses the decoder: candidates are enumerated directly and
//! their outcomes recomputed from the rows of `T`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constructions::binomial;
use crate::error::{Error, Result};
use crate::matrix::{BitMatrix, BitVector, DefectiveSet};

/// Default cap on the number of candidate sets enumerated.
pub const DEFAULT_ENUMERATION_LIMIT: u128 = 5_000_000;

/// Every defective set of size at most `d` whose simulated outcome lies
/// within `mismatch_budget` flips of the observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencySet {
    pub candidates: Vec<DefectiveSet>,
    pub mismatch_budget: usize,
    pub enumerated: u64,
}

impl ConsistencySet {
    pub fn contains(&self, dset: &DefectiveSet) -> bool {
        self.candidates.contains(dset)
    }

    /// The only consistent candidate, if there is exactly one.
    pub fn unique(&self) -> Option<&DefectiveSet> {
        match self.candidates.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}

/// Enumerates all sets of at most `d` items in lexicographic order of their
/// sorted index tuples (the empty set first).
///
/// Requires `cols(t) <= 64`; the enumeration size must not exceed `limit`.
pub fn brute_force_decode(
    t: &BitMatrix,
    y: &BitVector,
    d: usize,
    u: usize,
    budget: usize,
    limit: u128,
) -> Result<ConsistencySet> {
    let n = t.cols();
    if n > 64 {
        return Err(Error::Parameter(format!(
            "brute-force oracle supports at most 64 items, got {n}"
        )));
    }
    if t.rows() != y.len() {
        return Err(Error::dim("oracle outcome length", t.rows(), y.len()));
    }
    if u == 0 {
        return Err(Error::Parameter("threshold must be at least 1".into()));
    }
    let d = d.min(n);
    let needed: u128 = (0..=d).map(|s| binomial(n, s)).sum();
    if needed > limit {
        return Err(Error::Budget { needed, limit });
    }

    // Identical (row, observed bit) pairs contribute identically.
    let mut grouped: BTreeMap<(u64, bool), usize> = BTreeMap::new();
    for r in 0..t.rows() {
        let mask = (0..n)
            .filter(|&c| t.get(r, c))
            .fold(0u64, |m, c| m | 1 << c);
        *grouped.entry((mask, y.get(r))).or_insert(0) += 1;
    }
    let rows: Vec<(u64, bool, usize)> = grouped.into_iter().map(|((m, b), c)| (m, b, c)).collect();

    let consistent = |set: u64| -> bool {
        let mut mismatches = 0usize;
        for &(mask, bit, count) in &rows {
            let positive = (mask & set).count_ones() as usize >= u;
            if positive != bit {
                mismatches += count;
                if mismatches > budget {
                    return false;
                }
            }
        }
        true
    };

    fn walk(
        set: u64,
        size: usize,
        next: usize,
        n: usize,
        d: usize,
        check: &(dyn Fn(u64) -> bool + Sync),
        out: &mut Vec<u64>,
    ) {
        if check(set) {
            out.push(set);
        }
        if size == d {
            return;
        }
        for c in next..n {
            walk(set | 1 << c, size + 1, c + 1, n, d, check, out);
        }
    }

    let mut found = Vec::new();
    if consistent(0) {
        found.push(0u64);
    }
    if d > 0 {
        let branches: Vec<Vec<u64>> = (0..n)
            .into_par_iter()
            .map(|first| {
                let mut out = Vec::new();
                walk(1 << first, 1, first + 1, n, d, &consistent, &mut out);
                out
            })
            .collect();
        found.extend(branches.into_iter().flatten());
    }

    let candidates = found
        .into_iter()
        .map(|set| (0..n).filter(|&c| set >> c & 1 == 1).collect())
        .collect();
    Ok(ConsistencySet {
        candidates,
        mismatch_budget: budget,
        enumerated: needed as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub false_positives: DefectiveSet,
    pub false_negatives: DefectiveSet,
    pub exact: bool,
}

pub fn cross_check(decoded: &DefectiveSet, truth: &DefectiveSet) -> CrossCheck {
    let false_positives: DefectiveSet = decoded.iter().filter(|&j| !truth.contains(j)).collect();
    let false_negatives: DefectiveSet = truth.iter().filter(|&j| !decoded.contains(j)).collect();
    CrossCheck {
        exact: false_positives.is_empty() && false_negatives.is_empty(),
        false_positives,
        false_negatives,
    }
}
