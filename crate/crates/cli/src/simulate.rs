//! Randomized trials: sample D, encode, corrupt, decode, cross-check.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tgt_core::{
    brute_force_decode, cross_check, encode, flatten, inject_errors, is_good_for, split_blocks,
    BlockOutcome, BlockVerdict, DecodeStatus, Decoder, DefectiveSet, FlipMode, SeededRng,
    DEFAULT_ENUMERATION_LIMIT,
};

use crate::bundle::Bundle;
use crate::config::trial_rng;
use crate::error::{CliError, Result};

/// Where the injected flips go.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Exactly `e` uniformly random positions.
    #[default]
    Random,
    /// A uniformly random count in `0..=e`, then random positions.
    UpTo,
    /// Turns off the indicator of blocks that would vote for the true
    /// defective with the fewest votes.
    Suppress,
    /// All flips inside one positive block.
    Concentrate,
}

impl Placement {
    pub const ALL: [Placement; 4] = [
        Placement::Random,
        Placement::UpTo,
        Placement::Suppress,
        Placement::Concentrate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Placement::Random => "random",
            Placement::UpTo => "up-to",
            Placement::Suppress => "suppress",
            Placement::Concentrate => "concentrate",
        }
    }
}

impl fmt::Display for Placement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Placement {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        Placement::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown flip placement {s:?} (expected random, up-to, suppress or concentrate)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationOptions {
    pub trials: usize,
    pub seed: u64,
    /// Flips injected per trial.
    pub errors: usize,
    pub placement: Placement,
    /// Inclusive range of `|D|`.
    pub min_size: usize,
    pub max_size: usize,
    /// Run the brute-force oracle on every trial.
    pub oracle: bool,
}

impl SimulationOptions {
    /// `|D|` uniform in `[u, d]`, exactly `e` random flips, `e` taken from the bundle.
    pub fn for_bundle(bundle: &Bundle, trials: usize, seed: u64) -> Self {
        let params = bundle.manifest.params;
        Self {
            trials,
            seed,
            errors: params.e,
            placement: Placement::Random,
            min_size: params.u,
            max_size: params.d,
            oracle: false,
        }
    }

    fn check(&self, bundle: &Bundle) -> Result<()> {
        let params = bundle.manifest.params;
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.min_size > self.max_size || self.max_size > params.d {
            return Err(CliError::Usage(format!(
                "defective-set sizes {}..={} must lie within 0..={}",
                self.min_size, self.max_size, params.d
            )));
        }
        if self.errors > bundle.scheme.tests() {
            return Err(CliError::Usage(format!(
                "cannot inject {} flips into {} outcomes",
                self.errors,
                bundle.scheme.tests()
            )));
        }
        if self.placement == Placement::Concentrate && self.errors > bundle.scheme.block_len() {
            return Err(CliError::Usage(format!(
                "cannot concentrate {} flips in a block of {} tests",
                self.errors,
                bundle.scheme.block_len()
            )));
        }
        Ok(())
    }
}

/// Oracle findings for one trial.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleFinding {
    pub candidates: usize,
    pub contains_truth: bool,
    /// `Some(agrees)` when the consistency set is a singleton.
    pub singleton_agrees: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub size: usize,
    pub defectives: DefectiveSet,
    /// Flipped outcome positions, 1-based.
    pub flips: Vec<usize>,
    pub decoded: DefectiveSet,
    /// `D` when `|D| >= u`, otherwise the empty set.
    pub expected: DefectiveSet,
    pub exact: bool,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub status: DecodeStatus,
    pub positive_blocks: usize,
    pub accepted_blocks: usize,
    pub rejected_blocks: usize,
    /// `|R*|`, the multiset size.
    pub multiset_total: usize,
    /// Fewest votes any true defective received.
    pub min_true_count: Option<usize>,
    /// `G` is good for this `D` at its certified budget.
    pub g_good: bool,
    /// Flip count within the certified error budget.
    pub certified: bool,
    pub oracle: Option<OracleFinding>,
    pub t: usize,
    pub h: usize,
    pub k: usize,
    /// Wall-clock timings are kept out of the serialized record so it is
    /// reproducible; `timings.csv` carries them.
    #[serde(skip, default)]
    pub encode_ns: u64,
    #[serde(skip, default)]
    pub decode_ns: u64,
}

pub fn run(bundle: &Bundle, opts: &SimulationOptions) -> Result<Vec<TrialRecord>> {
    opts.check(bundle)?;
    (0..opts.trials as u64)
        .into_par_iter()
        .map(|trial| run_trial(bundle, opts, trial))
        .collect()
}

/// `|D|` uniform in `min..=max`, then `D` uniform among sets of that size.
pub fn sample_defectives(rng: &mut SeededRng, n: usize, min: usize, max: usize) -> DefectiveSet {
    let size = rng.random_range(min..=max);
    DefectiveSet::new(index::sample(rng, n, size).into_vec())
}

pub fn run_trial(bundle: &Bundle, opts: &SimulationOptions, trial: u64) -> Result<TrialRecord> {
    let scheme = &bundle.scheme;
    let params = bundle.manifest.params;
    let mut rng = trial_rng(opts.seed, trial);
    let dset = sample_defectives(&mut rng, params.n, opts.min_size, opts.max_size);
    let x = dset.to_vector(params.n)?;

    let started = Instant::now();
    let clean = encode(scheme, &x)?;
    let encode_ns = started.elapsed().as_nanos() as u64;

    let flips = place_flips(bundle, &clean, opts, &mut rng)?;
    let observed = flatten(&clean).with_flipped(&flips)?;
    let blocks = split_blocks(&observed, scheme.h(), scheme.k())?;

    let started = Instant::now();
    let output = Decoder::new(scheme).run(&blocks)?;
    let decoded = output.voted(opts.errors);
    let decode_ns = started.elapsed().as_nanos() as u64;

    let expected = if dset.len() >= params.u {
        dset.clone()
    } else {
        DefectiveSet::empty()
    };
    let check = cross_check(&decoded, &expected);
    let min_true_count = dset.iter().map(|j| output.multiset.count(j)).min();
    let g_good = dset.len() >= params.u
        && is_good_for(scheme.g(), &dset, params.u, bundle.manifest.good.budget)?.is_good;
    let oracle = if opts.oracle {
        let cs = brute_force_decode(
            scheme.t(),
            &observed,
            params.d,
            params.u,
            flips.len(),
            DEFAULT_ENUMERATION_LIMIT,
        )?;
        Some(OracleFinding {
            candidates: cs.candidates.len(),
            contains_truth: cs.contains(&dset),
            singleton_agrees: cs.unique().map(|only| *only == decoded),
        })
    } else {
        None
    };

    Ok(TrialRecord {
        trial,
        size: dset.len(),
        flips: flips.iter().map(|f| f + 1).collect(),
        exact: check.exact,
        false_positives: check.false_positives.len(),
        false_negatives: check.false_negatives.len(),
        status: output.status,
        positive_blocks: blocks.iter().filter(|b| b.indicator).count(),
        accepted_blocks: output.accepted_blocks(),
        rejected_blocks: output.rejected_blocks(),
        multiset_total: output.multiset.total(),
        min_true_count,
        g_good,
        certified: flips.len() <= bundle.manifest.certified_errors(),
        oracle,
        t: scheme.tests(),
        h: scheme.h(),
        k: scheme.k(),
        encode_ns,
        decode_ns,
        defectives: dset,
        decoded,
        expected,
    })
}

/// Picks the 0-based outcome positions to flip for one trial.
pub fn place_flips(
    bundle: &Bundle,
    clean: &[BlockOutcome],
    opts: &SimulationOptions,
    rng: &mut SeededRng,
) -> Result<Vec<usize>> {
    let e = opts.errors;
    let block_len = bundle.scheme.block_len();
    let flat = flatten(clean);
    let mut flips = match opts.placement {
        Placement::Random => inject_errors(&flat, e, FlipMode::Exact, rng)?.1,
        Placement::UpTo => inject_errors(&flat, e, FlipMode::UpTo, rng)?.1,
        Placement::Suppress => {
            let output = Decoder::new(&bundle.scheme).run(clean)?;
            let target = output
                .multiset
                .counts()
                .iter()
                .min_by_key(|&(&j, &c)| (c, j))
                .map(|(&j, _)| j);
            let mut voters: Vec<usize> = match target {
                Some(j) => output
                    .trace
                    .iter()
                    .filter(|t| match &t.verdict {
                        BlockVerdict::Accepted { items } => items.contains(j),
                        _ => false,
                    })
                    .map(|t| t.block)
                    .collect(),
                None => Vec::new(),
            };
            voters.shuffle(rng);
            let mut chosen: BTreeSet<usize> =
                voters.into_iter().take(e).map(|b| b * block_len).collect();
            while chosen.len() < e {
                chosen.insert(rng.random_range(0..flat.len()));
            }
            chosen.into_iter().collect()
        }
        Placement::Concentrate => {
            let positive: Vec<usize> = (0..clean.len()).filter(|&i| clean[i].indicator).collect();
            let block = if positive.is_empty() {
                rng.random_range(0..clean.len())
            } else {
                positive[rng.random_range(0..positive.len())]
            };
            index::sample(rng, block_len, e)
                .into_iter()
                .map(|o| block * block_len + o)
                .collect()
        }
    };
    flips.sort_unstable();
    Ok(flips)
}

/// Aggregate over a set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub trials: usize,
    pub exact: usize,
    pub recovery_rate: f64,
    pub decodable_trials: usize,
    pub decodable_exact: usize,
    /// Trials with `|D| < u`, where the expected output is empty.
    pub undecodable_trials: usize,
    pub undecodable_exact: usize,
    pub max_multiset_total: usize,
    /// `u * h`.
    pub multiset_bound: usize,
    pub certified: bool,
    pub uncertified_trials: usize,
    pub oracle_trials: usize,
    pub oracle_contains_truth: usize,
    pub oracle_singletons: usize,
    pub oracle_singleton_agreements: usize,
    pub mean_encode_ns: f64,
    pub mean_decode_ns: f64,
}

pub fn summarize(bundle: &Bundle, records: &[TrialRecord]) -> Summary {
    let u = bundle.manifest.params.u;
    let count = |f: &dyn Fn(&TrialRecord) -> bool| records.iter().filter(|r| f(r)).count();
    let mean = |f: &dyn Fn(&TrialRecord) -> u64| {
        if records.is_empty() {
            0.0
        } else {
            records.iter().map(|r| f(r) as f64).sum::<f64>() / records.len() as f64
        }
    };
    let exact = count(&|r| r.exact);
    let uncertified = count(&|r| !r.certified);
    Summary {
        trials: records.len(),
        exact,
        recovery_rate: if records.is_empty() {
            0.0
        } else {
            exact as f64 / records.len() as f64
        },
        decodable_trials: count(&|r| r.size >= u),
        decodable_exact: count(&|r| r.size >= u && r.exact),
        undecodable_trials: count(&|r| r.size < u),
        undecodable_exact: count(&|r| r.size < u && r.exact),
        max_multiset_total: records.iter().map(|r| r.multiset_total).max().unwrap_or(0),
        multiset_bound: u * bundle.scheme.h(),
        certified: uncertified == 0,
        uncertified_trials: uncertified,
        oracle_trials: count(&|r| r.oracle.is_some()),
        oracle_contains_truth: count(&|r| r.oracle.as_ref().is_some_and(|o| o.contains_truth)),
        oracle_singletons: count(&|r| {
            r.oracle
                .as_ref()
                .is_some_and(|o| o.singleton_agrees.is_some())
        }),
        oracle_singleton_agreements: count(&|r| {
            r.oracle
                .as_ref()
                .is_some_and(|o| o.singleton_agrees == Some(true))
        }),
        mean_encode_ns: mean(&|r| r.encode_ns),
        mean_decode_ns: mean(&|r| r.decode_ns),
    }
}

/// One CSV line per trial. Timings are left out so the file is reproducible;
/// they go to `timings.csv`.
#[derive(Debug, Serialize)]
struct CsvRow<'a> {
    trial: u64,
    size: usize,
    defectives: String,
    flips: String,
    decoded: String,
    exact: bool,
    false_positives: usize,
    false_negatives: usize,
    status: &'a str,
    positive_blocks: usize,
    accepted_blocks: usize,
    rejected_blocks: usize,
    multiset_total: usize,
    min_true_count: Option<usize>,
    g_good: bool,
    certified: bool,
    oracle_candidates: Option<usize>,
    oracle_contains_truth: Option<bool>,
    t: usize,
    h: usize,
    k: usize,
}

fn joined(items: impl IntoIterator<Item = usize>) -> String {
    items
        .into_iter()
        .map(|i| i.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn status_str(s: DecodeStatus) -> &'static str {
    match s {
        DecodeStatus::Decoded => "decoded",
        DecodeStatus::NoPositiveTests => "no_positive_tests",
        DecodeStatus::AllBlocksRejected => "all_blocks_rejected",
    }
}

pub fn trials_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(CsvRow {
            trial: r.trial,
            size: r.size,
            defectives: joined(r.defectives.one_based()),
            flips: joined(r.flips.iter().copied()),
            decoded: joined(r.decoded.one_based()),
            exact: r.exact,
            false_positives: r.false_positives,
            false_negatives: r.false_negatives,
            status: status_str(r.status),
            positive_blocks: r.positive_blocks,
            accepted_blocks: r.accepted_blocks,
            rejected_blocks: r.rejected_blocks,
            multiset_total: r.multiset_total,
            min_true_count: r.min_true_count,
            g_good: r.g_good,
            certified: r.certified,
            oracle_candidates: r.oracle.as_ref().map(|o| o.candidates),
            oracle_contains_truth: r.oracle.as_ref().map(|o| o.contains_truth),
            t: r.t,
            h: r.h,
            k: r.k,
        })?;
    }
    w.into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))
}

fn timings_csv(records: &[TrialRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["trial", "encode_ns", "decode_ns"])?;
    for r in records {
        w.write_record([
            r.trial.to_string(),
            r.encode_ns.to_string(),
            r.decode_ns.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| CliError::Csv(e.into_error().into()))
}

/// Writes `trials.csv`, `trials.jsonl` (records without timings), `timings.csv` and
/// `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, records: &[TrialRecord], summary: &Summary) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
    let put = |name: &str, bytes: Vec<u8>| -> Result<()> {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::file(&path, e))
    };
    put("trials.csv", trials_csv(records)?)?;
    let mut jsonl = String::new();
    for r in records {
        jsonl.push_str(&serde_json::to_string(r)?);
        jsonl.push('\n');
    }
    put("trials.jsonl", jsonl.into_bytes())?;
    put("timings.csv", timings_csv(records)?)?;
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    put("summary.json", text.into_bytes())
}
