//! Builders and verifiers for the combinatorial objects behind a scheme.
//!
//! * `M`, a (d+1)-disjunct matrix: every column has a row where it is 1
//!   while any d other columns are all 0. Built from i.i.d. Bernoulli rows
//!   and certified per instance.
//! * `G`, a good measurement matrix for a defective set `D`: there are rows
//!   meeting `D` in exactly `u` items, they jointly cover `D`, and every
//!   defective appears in more than `e` of them. Built from layered random
//!   rows and validated on sampled (or all) defective sets.
//! * Threshold (d, u; e)-disjunct matrices, which imply goodness; verified
//!   exhaustively at small scale.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use itertools::Itertools;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{popcount_and, BitMatrix, BitVector, DefectiveSet};
use crate::semantics::SchemeParams;
use crate::serde_util::{one_based, one_based_counts, one_based_opt, one_based_vec};
use crate::SeededRng;

/// Default work limit for exhaustive verifiers.
pub const DEFAULT_BUDGET: u128 = 50_000_000;

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// How `verify_disjunct` explores the (column, d-subset) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    /// Enumerates every d-subset for every column.
    Exhaustive,
    /// Exact branch-and-bound search for a cover of each column by at most
    /// d others. Same verdict as `Exhaustive`, far fewer nodes.
    Search,
    /// Uniformly random (column, d-subset) draws.
    Sampled { trials: u64, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyMethod {
    Exhaustive,
    Search,
    Sampled,
}

/// A column whose support is covered by the union of `cover`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjunctWitness {
    #[serde(with = "one_based")]
    pub column: usize,
    #[serde(with = "one_based_vec")]
    pub cover: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisjunctCertificate {
    pub d: usize,
    pub verified: bool,
    pub method: VerifyMethod,
    /// Subsets examined (exhaustive), search nodes (search) or draws (sampled).
    pub trials: u64,
    pub witness: Option<DisjunctWitness>,
}

/// Work units an exhaustive check of order `d` on `cols` columns needs.
pub fn exhaustive_work(cols: usize, d: usize) -> u128 {
    binomial(cols.saturating_sub(1), d).saturating_mul(cols as u128)
}

pub fn verify_disjunct(
    m: &BitMatrix,
    d: usize,
    mode: VerifyMode,
    budget: u128,
) -> Result<DisjunctCertificate> {
    let n = m.cols();
    if d >= n {
        return Err(Error::Parameter(format!(
            "disjunctness order {d} needs more than {d} columns, matrix has {n}"
        )));
    }
    let columns = m.transpose();
    match mode {
        VerifyMode::Exhaustive => {
            let needed = exhaustive_work(n, d);
            if needed > budget {
                return Err(Error::Budget {
                    needed,
                    limit: budget,
                });
            }
            let found: Vec<Option<Vec<usize>>> = (0..n)
                .into_par_iter()
                .map(|j| enumerate_covers(&columns, j, d))
                .collect();
            Ok(certificate(
                d,
                VerifyMethod::Exhaustive,
                needed as u64,
                first_witness(found),
            ))
        }
        VerifyMode::Search => {
            let nodes = AtomicU64::new(0);
            let found: Vec<Option<Vec<usize>>> = (0..n)
                .into_par_iter()
                .map(|j| search_cover(m, &columns, j, d, &nodes, budget))
                .collect::<Result<_>>()?;
            let nodes = nodes.load(Ordering::Relaxed);
            let witness = first_witness(found).map(|mut w| {
                pad_cover(&mut w.cover, w.column, d, n);
                w
            });
            Ok(certificate(d, VerifyMethod::Search, nodes, witness))
        }
        VerifyMode::Sampled { trials, seed } => {
            let mut rng = SeededRng::seed_from_u64(seed);
            let mut witness = None;
            let mut done = 0;
            for _ in 0..trials {
                done += 1;
                let j = rng.random_range(0..n);
                let cover: Vec<usize> = index::sample(&mut rng, n - 1, d)
                    .into_iter()
                    .map(|c| if c >= j { c + 1 } else { c })
                    .sorted()
                    .collect();
                if covers(&columns, j, &cover) {
                    witness = Some(DisjunctWitness { column: j, cover });
                    break;
                }
            }
            Ok(certificate(d, VerifyMethod::Sampled, done, witness))
        }
    }
}

fn certificate(
    d: usize,
    method: VerifyMethod,
    trials: u64,
    witness: Option<DisjunctWitness>,
) -> DisjunctCertificate {
    DisjunctCertificate {
        d,
        verified: witness.is_none(),
        method,
        trials,
        witness,
    }
}

fn first_witness(found: Vec<Option<Vec<usize>>>) -> Option<DisjunctWitness> {
    found
        .into_iter()
        .enumerate()
        .find_map(|(column, c)| c.map(|cover| DisjunctWitness { column, cover }))
}

fn covers(columns: &BitMatrix, j: usize, cover: &[usize]) -> bool {
    let target = columns.row_words(j);
    let mut union = vec![0u64; target.len()];
    for &c in cover {
        for (u, w) in union.iter_mut().zip(columns.row_words(c)) {
            *u |= w;
        }
    }
    target.iter().zip(&union).all(|(t, u)| t & !u == 0)
}

/// Lexicographically first d-subset of the other columns whose union covers
/// column `j`, if any.
fn enumerate_covers(columns: &BitMatrix, j: usize, d: usize) -> Option<Vec<usize>> {
    let n = columns.rows();
    let others: Vec<usize> = (0..n).filter(|&c| c != j).collect();
    let target = columns.row_words(j);
    let words = target.len();
    // unions[k] = OR of the first k chosen columns
    let mut unions = vec![vec![0u64; words]; d + 1];
    let mut chosen = Vec::with_capacity(d);

    fn rec(
        columns: &BitMatrix,
        others: &[usize],
        target: &[u64],
        d: usize,
        start: usize,
        unions: &mut [Vec<u64>],
        chosen: &mut Vec<usize>,
    ) -> bool {
        let depth = chosen.len();
        if depth == d {
            return target.iter().zip(&unions[depth]).all(|(t, u)| t & !u == 0);
        }
        let need = d - depth;
        for i in start..=others.len() - need {
            let c = others[i];
            let (lo, hi) = unions.split_at_mut(depth + 1);
            for ((next, prev), w) in hi[0].iter_mut().zip(&lo[depth]).zip(columns.row_words(c)) {
                *next = prev | w;
            }
            chosen.push(c);
            if rec(columns, others, target, d, i + 1, unions, chosen) {
                return true;
            }
            chosen.pop();
        }
        false
    }

    rec(columns, &others, target, d, 0, &mut unions, &mut chosen).then_some(chosen)
}

/// Branch-and-bound: some covering set must contain a column hitting any
/// still-uncovered row, so branch on the uncovered row with fewest
/// candidates.
fn search_cover(
    rows: &BitMatrix,
    columns: &BitMatrix,
    j: usize,
    d: usize,
    nodes: &AtomicU64,
    budget: u128,
) -> Result<Option<Vec<usize>>> {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        rows: &BitMatrix,
        columns: &BitMatrix,
        j: usize,
        uncovered: &[u64],
        left: usize,
        chosen: &mut Vec<usize>,
        nodes: &AtomicU64,
        budget: u128,
    ) -> Result<bool> {
        let seen = nodes.fetch_add(1, Ordering::Relaxed) as u128 + 1;
        if seen > budget {
            return Err(Error::Budget {
                needed: seen,
                limit: budget,
            });
        }
        if uncovered.iter().all(|&w| w == 0) {
            return Ok(true);
        }
        if left == 0 {
            return Ok(false);
        }
        let uncovered_rows = BitVector::from_words(rows.rows(), uncovered.to_vec());
        let mut best: Option<(usize, usize)> = None;
        for r in uncovered_rows.support() {
            let mut cands = rows.row(r).weight();
            if rows.get(r, j) {
                cands -= 1;
            }
            if best.is_none_or(|(_, b)| cands < b) {
                best = Some((r, cands));
                if cands == 0 {
                    return Ok(false);
                }
            }
        }
        let (r, _) = best.expect("uncovered row exists");
        for c in rows.row(r).support() {
            if c == j {
                continue;
            }
            let next: Vec<u64> = uncovered
                .iter()
                .zip(columns.row_words(c))
                .map(|(u, w)| u & !w)
                .collect();
            chosen.push(c);
            if rec(rows, columns, j, &next, left - 1, chosen, nodes, budget)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }

    let mut chosen = Vec::new();
    let found = rec(
        rows,
        columns,
        j,
        columns.row_words(j),
        d,
        &mut chosen,
        nodes,
        budget,
    )?;
    Ok(found.then(|| {
        chosen.sort_unstable();
        chosen
    }))
}

fn pad_cover(cover: &mut Vec<usize>, j: usize, d: usize, n: usize) {
    let mut c = 0;
    while cover.len() < d {
        if c != j && !cover.contains(&c) {
            cover.push(c);
        }
        c += 1;
    }
    debug_assert!(c <= n);
    cover.sort_unstable();
}

/// Settings for the random (d+1)-disjunct construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisjunctConfig {
    /// Row-count constant: `k = ceil(c (d+2)^2 ln n)`.
    pub c: f64,
    pub max_attempts: usize,
    pub budget: u128,
    /// Draws used when neither exact verifier fits in `budget`.
    pub sampled_trials: u64,
}

impl Default for DisjunctConfig {
    fn default() -> Self {
        Self {
            c: 3.0,
            max_attempts: 50,
            budget: DEFAULT_BUDGET,
            sampled_trials: 200_000,
        }
    }
}

pub fn disjunct_rows(n: usize, d: usize, c: f64) -> usize {
    let s = (d + 2) as f64;
    (c * s * s * (n as f64).ln()).ceil().max(1.0) as usize
}

/// Builds a k×n matrix certified (d+1)-disjunct.
///
/// Verification is exhaustive when it fits in the budget, otherwise the
/// exact cover search, and sampled only if the search also overruns.
pub fn construct_disjunct<R: Rng + ?Sized>(
    n: usize,
    d: usize,
    config: &DisjunctConfig,
    rng: &mut R,
) -> Result<(BitMatrix, DisjunctCertificate)> {
    let order = d + 1;
    if order >= n {
        return Err(Error::Parameter(format!(
            "a {order}-disjunct matrix needs more than {order} items, got n = {n}"
        )));
    }
    if config.c <= 0.0 {
        return Err(Error::Parameter("constant c must be positive".into()));
    }
    let k = disjunct_rows(n, d, config.c);
    let density = 1.0 / (d + 2) as f64;
    let mut last = String::from("no attempt made");
    for _ in 0..config.max_attempts {
        let m = BitMatrix::from_fn(k, n, |_, _| rng.random_bool(density));
        let cert = if exhaustive_work(n, order) <= config.budget {
            verify_disjunct(&m, order, VerifyMode::Exhaustive, config.budget)?
        } else {
            match verify_disjunct(&m, order, VerifyMode::Search, config.budget) {
                Err(Error::Budget { .. }) => {
                    let seed = rng.random();
                    let mode = VerifyMode::Sampled {
                        trials: config.sampled_trials,
                        seed,
                    };
                    verify_disjunct(&m, order, mode, config.budget)?
                }
                other => other?,
            }
        };
        if cert.verified {
            return Ok((m, cert));
        }
        if let Some(w) = &cert.witness {
            last = format!(
                "column {} covered by {:?}",
                w.column + 1,
                w.cover.iter().map(|c| c + 1).collect::<Vec<_>>()
            );
        }
    }
    Err(Error::Construction {
        attempts: config.max_attempts,
        witness: last,
    })
}

/// A (critical set, zero set, distinguished column) with too few satisfying rows.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdWitness {
    #[serde(with = "one_based_vec")]
    pub critical: Vec<usize>,
    #[serde(with = "one_based_vec")]
    pub zero: Vec<usize>,
    #[serde(with = "one_based")]
    pub distinguished: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdDisjunctReport {
    pub d: usize,
    pub u: usize,
    pub e: usize,
    pub verified: bool,
    /// Fewest rows u-satisfying any (j, S, Z); `None` if no triple exists.
    pub min_count: Option<usize>,
    pub triples_checked: u64,
    /// The minimizing triple when verification fails.
    pub witness: Option<ThresholdWitness>,
}

/// Checks threshold (d, u; e)-disjunctness by enumeration.
///
/// Only maximal zero sets (`|Z| = min(|S|, n - |S|)`) are enumerated: enlarging
/// `Z` can only remove satisfying rows, so they attain the minimum.
pub fn verify_threshold_disjunct(
    g: &BitMatrix,
    d: usize,
    u: usize,
    e: usize,
    budget: u128,
) -> Result<ThresholdDisjunctReport> {
    let n = g.cols();
    if u == 0 || u > d || d > n {
        return Err(Error::Parameter(format!(
            "need 0 < u <= d <= n, got u = {u}, d = {d}, n = {n}"
        )));
    }
    let needed: u128 = (u..=d)
        .map(|s| {
            binomial(n, s)
                .saturating_mul(binomial(n - s, s.min(n - s)))
                .saturating_mul(s as u128)
        })
        .fold(0u128, |a, b| a.saturating_add(b));
    if needed > budget {
        return Err(Error::Budget {
            needed,
            limit: budget,
        });
    }

    let columns = g.transpose();
    let words = g.rows().div_ceil(64);
    let mut best: Option<ThresholdWitness> = None;
    let mut checked = 0u64;
    for s in u..=d {
        for critical in (0..n).combinations(s) {
            let mask = BitVector::from_support(n, &critical)?;
            let exact_u: Vec<u64> = {
                let bits = BitVector::from_fn(g.rows(), |r| g.row_intersection(r, &mask) == u);
                bits.words().to_vec()
            };
            let rest: Vec<usize> = (0..n).filter(|c| !mask.get(*c)).collect();
            let zmax = s.min(rest.len());
            for zero in rest.iter().copied().combinations(zmax) {
                let mut hit = vec![0u64; words];
                for &z in &zero {
                    for (h, w) in hit.iter_mut().zip(columns.row_words(z)) {
                        *h |= w;
                    }
                }
                let base: Vec<u64> = exact_u.iter().zip(&hit).map(|(a, h)| a & !h).collect();
                for &j in &critical {
                    checked += 1;
                    let count = popcount_and(&base, columns.row_words(j));
                    if best.as_ref().is_none_or(|b| count < b.count) {
                        best = Some(ThresholdWitness {
                            critical: critical.clone(),
                            zero: zero.clone(),
                            distinguished: j,
                            count,
                        });
                    }
                }
            }
        }
    }
    let min_count = best.as_ref().map(|b| b.count);
    let verified = min_count.is_none_or(|c| c > e);
    Ok(ThresholdDisjunctReport {
        d,
        u,
        e,
        verified,
        min_count,
        triples_checked: checked,
        witness: if verified { None } else { best },
    })
}

/// Per-instance goodness of `G` for a fixed defective set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub defective_set: DefectiveSet,
    pub u: usize,
    pub e: usize,
    /// Rows meeting the defective set in exactly `u` items.
    #[serde(with = "one_based_vec")]
    pub qualifying_rows: Vec<usize>,
    /// Occurrences of each defective across the qualifying rows.
    #[serde(with = "one_based_counts")]
    pub per_item_counts: BTreeMap<usize, usize>,
    pub is_good: bool,
}

impl GoodnessReport {
    pub fn min_count(&self) -> usize {
        self.per_item_counts.values().copied().min().unwrap_or(0)
    }
}

pub fn is_good_for(
    g: &BitMatrix,
    dset: &DefectiveSet,
    u: usize,
    e: usize,
) -> Result<GoodnessReport> {
    let x = dset.to_vector(g.cols())?;
    let qualifying_rows: Vec<usize> = (0..g.rows())
        .filter(|&r| g.row_intersection(r, &x) == u)
        .collect();
    let mut per_item_counts: BTreeMap<usize, usize> = dset.iter().map(|j| (j, 0)).collect();
    for &r in &qualifying_rows {
        for j in dset.iter() {
            if g.get(r, j) {
                *per_item_counts.get_mut(&j).expect("item of D") += 1;
            }
        }
    }
    let is_good = dset.len() >= u && per_item_counts.values().all(|&c| c > e);
    Ok(GoodnessReport {
        defective_set: dset.clone(),
        u,
        e,
        qualifying_rows,
        per_item_counts,
        is_good,
    })
}

/// Settings for the layered good-matrix construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodConfig {
    /// Row-count constant: `h = ceil(c_g d0^2 ln(n/d0) / (1-p)^2)`.
    pub c_g: f64,
    pub max_attempts: usize,
    /// Defective sets checked per cardinality; a cardinality with no more
    /// sets than this is checked exhaustively.
    pub validation_sets: usize,
}

impl Default for GoodConfig {
    fn default() -> Self {
        Self {
            c_g: 8.0,
            max_attempts: 50,
            validation_sets: 200,
        }
    }
}

pub fn good_rows(params: &SchemeParams, c_g: f64) -> usize {
    let d0 = params.d0() as f64;
    let shrink = (1.0 - params.p).powi(2);
    (c_g * d0 * d0 * (params.n as f64 / d0).ln() / shrink)
        .ceil()
        .max(1.0) as usize
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodLayer {
    /// Target defective count the layer is tuned for.
    pub cardinality: usize,
    pub rows: usize,
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodCertificate {
    pub h: usize,
    pub c_g: f64,
    /// Goodness budget the matrix was validated at (2e).
    pub budget: usize,
    pub layers: Vec<GoodLayer>,
    pub sets_checked: u64,
    /// Cardinalities for which every defective set was checked.
    pub exhaustive_cardinalities: Vec<usize>,
    pub attempts: usize,
}

/// Builds an h×n matrix whose rows come in one layer per cardinality
/// `s = u..=d`, each entry 1 with probability `u/s`, then validates it as
/// good at budget `2e`. Retries with fresh randomness on failure.
pub fn construct_good<R: Rng + ?Sized>(
    params: &SchemeParams,
    config: &GoodConfig,
    rng: &mut R,
) -> Result<(BitMatrix, GoodCertificate)> {
    params.validate()?;
    if config.c_g <= 0.0 {
        return Err(Error::Parameter("constant c_g must be positive".into()));
    }
    let SchemeParams { n, d, u, e, .. } = *params;
    let h = good_rows(params, config.c_g);
    let nlayers = d - u + 1;
    let layers: Vec<GoodLayer> = (u..=d)
        .enumerate()
        .map(|(i, s)| GoodLayer {
            cardinality: s,
            rows: h / nlayers + usize::from(i < h % nlayers),
            density: u as f64 / s as f64,
        })
        .collect();
    let row_density: Vec<f64> = layers
        .iter()
        .flat_map(|l| std::iter::repeat_n(l.density, l.rows))
        .collect();

    let mut last = String::from("no attempt made");
    for attempt in 1..=config.max_attempts {
        let g = BitMatrix::from_fn(h, n, |r, _| rng.random_bool(row_density[r]));
        let mut checked = 0u64;
        let mut exhaustive = Vec::new();
        let mut failure = None;
        'outer: for s in u..=d {
            let total = binomial(n, s);
            let sets: Box<dyn Iterator<Item = Vec<usize>>> =
                if total <= config.validation_sets as u128 {
                    exhaustive.push(s);
                    Box::new((0..n).combinations(s))
                } else {
                    let draws: Vec<Vec<usize>> = (0..config.validation_sets)
                        .map(|_| index::sample(rng, n, s).into_vec())
                        .collect();
                    Box::new(draws.into_iter())
                };
            for set in sets {
                checked += 1;
                let dset = DefectiveSet::new(set);
                if !good_at(&g, &dset, u, 2 * e) {
                    failure = Some(dset);
                    break 'outer;
                }
            }
        }
        match failure {
            None => {
                return Ok((
                    g,
                    GoodCertificate {
                        h,
                        c_g: config.c_g,
                        budget: 2 * e,
                        layers,
                        sets_checked: checked,
                        exhaustive_cardinalities: exhaustive,
                        attempts: attempt,
                    },
                ))
            }
            Some(dset) => {
                last = format!("|D| = {} failed at D = {dset}", dset.len());
            }
        }
    }
    Err(Error::Construction {
        attempts: config.max_attempts,
        witness: last,
    })
}

/// Allocation-light goodness test used inside construction loops.
fn good_at(g: &BitMatrix, dset: &DefectiveSet, u: usize, budget: usize) -> bool {
    if dset.len() < u {
        return false;
    }
    let x = dset.to_vector(g.cols()).expect("indices in range");
    let mut counts = vec![0usize; dset.len()];
    for r in 0..g.rows() {
        if g.row_intersection(r, &x) == u {
            for (slot, j) in counts.iter_mut().zip(dset.iter()) {
                if g.get(r, j) {
                    *slot += 1;
                }
            }
        }
    }
    counts.iter().all(|&c| c > budget)
}

/// A critical set with its zero set and optional distinguished column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalZeroPair {
    #[serde(with = "one_based_vec")]
    pub critical: Vec<usize>,
    #[serde(with = "one_based_vec")]
    pub zero: Vec<usize>,
    #[serde(with = "one_based_opt")]
    pub distinguished: Option<usize>,
}

/// The (critical, zero) pairs that reduce goodness for `dset` to threshold
/// (max(u, d-u), u; e)-disjunctness.
///
/// * `d <= 2u`: two u-subsets covering `D`, each with the rest of `D` as zero set.
/// * `d >= 2u + 1`, `|D| >= d - u`: per item `j`, `S = {j}` plus the next
///   `d - u - 1` items of `D` (cyclically), `Z` = the rest of `D` padded with
///   the lowest non-defectives to size `u + 1`.
/// * `d >= 2u + 1`, `|D| < d - u`: `S = D` itself (a legal critical set since
///   `u <= |D| <= d - u`) with an empty zero set, per item `j`. Padding `S`
///   with non-defectives instead would allow rows meeting `D` in fewer than
///   `u` items.
pub fn lemma1_partition(
    dset: &DefectiveSet,
    n: usize,
    d: usize,
    u: usize,
) -> Result<Vec<CriticalZeroPair>> {
    let size = dset.len();
    if u == 0 || u > d || d >= n {
        return Err(Error::Parameter(format!(
            "need 0 < u <= d < n, got u = {u}, d = {d}, n = {n}"
        )));
    }
    if size < u || size > d {
        return Err(Error::Parameter(format!(
            "defective set size {size} outside [{u}, {d}]"
        )));
    }
    if let Some(&last) = dset.indices().last() {
        if last >= n {
            return Err(Error::Parameter(format!(
                "item {} exceeds n = {n}",
                last + 1
            )));
        }
    }
    let items = dset.indices();
    let minus =
        |s: &[usize]| -> Vec<usize> { items.iter().copied().filter(|i| !s.contains(i)).collect() };

    if d <= 2 * u {
        let first = items[..u].to_vec();
        let second = items[size - u..].to_vec();
        return Ok(vec![
            CriticalZeroPair {
                zero: minus(&first),
                critical: first,
                distinguished: None,
            },
            CriticalZeroPair {
                zero: minus(&second),
                critical: second,
                distinguished: None,
            },
        ]);
    }

    let span = d - u;
    if size < span {
        return Ok(items
            .iter()
            .map(|&j| CriticalZeroPair {
                critical: items.to_vec(),
                zero: Vec::new(),
                distinguished: Some(j),
            })
            .collect());
    }
    Ok((0..size)
        .map(|l| {
            let mut critical: Vec<usize> = (0..span).map(|o| items[(l + o) % size]).collect();
            critical.sort_unstable();
            let mut zero = minus(&critical);
            let mut c = 0;
            while zero.len() < u + 1 {
                if !dset.contains(c) {
                    zero.push(c);
                }
                c += 1;
            }
            zero.sort_unstable();
            CriticalZeroPair {
                critical,
                zero,
                distinguished: Some(items[l]),
            }
        })
        .collect())
}

/// Result of replaying the critical/zero-set reduction on a concrete matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lemma1Check {
    pub pairs: Vec<CriticalZeroPair>,
    /// Rows u-satisfying each pair (and its distinguished column, if any).
    pub satisfying_rows: Vec<Vec<usize>>,
    /// Every pair has more than `e` satisfying rows.
    pub pairs_satisfied: bool,
    /// Every satisfying row meets `D` in exactly `u` items.
    pub rows_meet_u_defectives: bool,
    /// Each defective appears more than `e` times across the satisfying rows.
    pub implies_good: bool,
}

pub fn lemma1_check(
    g: &BitMatrix,
    dset: &DefectiveSet,
    d: usize,
    u: usize,
    e: usize,
) -> Result<Lemma1Check> {
    let n = g.cols();
    let pairs = lemma1_partition(dset, n, d, u)?;
    let x = dset.to_vector(n)?;
    let mut satisfying_rows = Vec::with_capacity(pairs.len());
    let mut counts: BTreeMap<usize, usize> = dset.iter().map(|j| (j, 0)).collect();
    let mut rows_meet_u_defectives = true;
    for pair in &pairs {
        let s = BitVector::from_support(n, &pair.critical)?;
        let z = BitVector::from_support(n, &pair.zero)?;
        let rows: Vec<usize> = (0..g.rows())
            .filter(|&r| {
                g.row_intersection(r, &s) == u
                    && g.row_intersection(r, &z) == 0
                    && pair.distinguished.is_none_or(|j| g.get(r, j))
            })
            .collect();
        for &r in &rows {
            if g.row_intersection(r, &x) != u {
                rows_meet_u_defectives = false;
            }
            for j in dset.iter().filter(|&j| g.get(r, j)) {
                *counts.get_mut(&j).expect("item of D") += 1;
            }
        }
        satisfying_rows.push(rows);
    }
    let pairs_satisfied = satisfying_rows.iter().all(|r| r.len() > e);
    // Distinct pairs can share rows, so count each row once.
    let distinct: Vec<usize> = satisfying_rows
        .iter()
        .flatten()
        .copied()
        .sorted()
        .dedup()
        .collect();
    let mut distinct_counts: BTreeMap<usize, usize> = dset.iter().map(|j| (j, 0)).collect();
    for r in distinct {
        for j in dset.iter().filter(|&j| g.get(r, j)) {
            *distinct_counts.get_mut(&j).expect("item of D") += 1;
        }
    }
    let implies_good = rows_meet_u_defectives && distinct_counts.values().all(|&c| c > e);
    debug_assert!(counts
        .values()
        .zip(distinct_counts.values())
        .all(|(a, b)| a >= b));
    Ok(Lemma1Check {
        pairs,
        satisfying_rows,
        pairs_satisfied,
        rows_meet_u_defectives,
        implies_good,
    })
}
