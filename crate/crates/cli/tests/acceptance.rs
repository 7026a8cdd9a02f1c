//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rand::Rng;
use tgt_cli::bundle::{generate, Bundle};
use tgt_cli::config::{trial_rng, ExperimentConfig};
use tgt_cli::simulate::{self, place_flips, sample_defectives, Placement, SimulationOptions};
use tgt_core::{
    brute_force_decode, construct_disjunct, construct_good, dec_natgt, encode,
    find_defectives_multiset, flatten, is_good_for, lemma1_check, recover_yprime, rng_from_seed,
    split_blocks, verify_disjunct, verify_threshold_disjunct, BitMatrix, BitVector, BlockOutcome,
    DefectiveSet, DisjunctConfig, GoodConfig, SchemeParams, VerifyMode, DEFAULT_ENUMERATION_LIMIT,
};

const GRID: [(usize, usize, usize); 5] =
    [(16, 3, 2), (32, 4, 2), (32, 4, 3), (64, 5, 2), (64, 5, 4)];
const TRIALS: usize = 500;
const SEED: u64 = 20_161_016;

/// Row inflation used for each error budget.
fn p_for(e: usize) -> f64 {
    match e {
        0 => 0.0,
        1 => 0.3,
        _ => 0.5,
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

fn secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}

fn bundle_for(n: usize, d: usize, u: usize, e: usize, seed: u64) -> Bundle {
    let config = ExperimentConfig {
        n,
        d,
        u,
        e,
        p: p_for(e),
        seed,
        ..ExperimentConfig::default()
    };
    generate(&config).unwrap_or_else(|err| panic!("bundle ({n},{d},{u},e={e}): {err}"))
}

/// OR outcome by the definition, one row at a time.
fn or_by_rows(m: &BitMatrix, support: &[usize]) -> BitVector {
    BitVector::from_fn(m.rows(), |r| support.iter().any(|&j| m.get(r, j)))
}

/// Threshold outcome by the definition.
fn threshold_by_rows(m: &BitMatrix, support: &[usize], u: usize) -> BitVector {
    BitVector::from_fn(m.rows(), |r| {
        support.iter().filter(|&&j| m.get(r, j)).count() >= u
    })
}

fn criterion_1() -> Outcome {
    let started = Instant::now();
    let mut rng = rng_from_seed(SEED ^ 1);
    let blocks = 12_000;
    let mut agree = 0;
    for _ in 0..blocks {
        let n = rng.random_range(8..=64);
        let u = rng.random_range(2..=6);
        let k = rng.random_range(4..=48);
        let density = rng.random_range(0.05..0.6);
        let m = BitMatrix::from_fn(k, n, |_, _| rng.random_bool(density));
        let m_bar = BitMatrix::from_fn(k, n, |r, c| !m.get(r, c));
        let support = rand::seq::index::sample(&mut rng, n, u).into_vec();
        let block = BlockOutcome::new(
            true,
            threshold_by_rows(&m, &support, u),
            threshold_by_rows(&m_bar, &support, u),
        )
        .unwrap();
        if recover_yprime(&block) == or_by_rows(&m, &support) {
            agree += 1;
        }
    }
    let elapsed = started.elapsed();
    Outcome::new(
        agree == blocks && elapsed < Duration::from_secs(10),
        format!(
            "{agree}/{blocks} blocks match the direct OR outcome in {}",
            secs(elapsed)
        ),
    )
}

/// Statistics shared with the multiset criterion.
#[derive(Default)]
struct MultisetStats {
    trials: usize,
    over_bound: usize,
    error_free_trials: usize,
    low_counts: usize,
}

fn record_multiset(
    stats: &mut MultisetStats,
    bundle: &Bundle,
    blocks: &[BlockOutcome],
    dset: &DefectiveSet,
    error_free: bool,
) {
    let u = bundle.manifest.params.u;
    let multiset = find_defectives_multiset(&bundle.scheme, blocks).unwrap();
    stats.trials += 1;
    if multiset.total() > u * bundle.scheme.h() {
        stats.over_bound += 1;
    }
    if error_free {
        stats.error_free_trials += 1;
        let budget = bundle.manifest.good.budget;
        if dset.iter().any(|j| multiset.count(j) <= budget) {
            stats.low_counts += 1;
        }
    }
}

fn dims_ok(bundle: &Bundle) -> bool {
    let (t, k, h) = (
        bundle.scheme.t(),
        bundle.scheme.m().rows(),
        bundle.scheme.g().rows(),
    );
    t.rows() == (2 * k + 1) * h && bundle.manifest.t == t.rows()
}

fn criterion_2(bundles: &mut Vec<Bundle>, stats: &mut MultisetStats) -> Outcome {
    let started = Instant::now();
    let mut total = 0;
    let mut exact = 0;
    let mut failures = Vec::new();
    for (i, &(n, d, u)) in GRID.iter().enumerate() {
        let bundle = bundle_for(n, d, u, 0, SEED + i as u64);
        for trial in 0..TRIALS as u64 {
            let mut rng = trial_rng(SEED, trial);
            let dset = sample_defectives(&mut rng, n, u, d);
            let blocks = encode(&bundle.scheme, &dset.to_vector(n).unwrap()).unwrap();
            let multiset = find_defectives_multiset(&bundle.scheme, &blocks).unwrap();
            total += 1;
            if multiset.collapse() == dset {
                exact += 1;
            } else if failures.len() < 3 {
                failures.push(format!(
                    "({n},{d},{u}) D={dset} got {}",
                    multiset.collapse()
                ));
            }
            record_multiset(stats, &bundle, &blocks, &dset, true);
        }
        bundles.push(bundle);
    }
    let elapsed = started.elapsed();
    Outcome::new(
        exact == total && elapsed < Duration::from_secs(300),
        format!(
            "{exact}/{total} exact over 5 grid points in {}{}",
            secs(elapsed),
            if failures.is_empty() {
                String::new()
            } else {
                format!("; {}", failures.join("; "))
            }
        ),
    )
}

fn criterion_3(bundles: &mut Vec<Bundle>, stats: &mut MultisetStats) -> Outcome {
    let started = Instant::now();
    let mut total = 0;
    let mut exact = 0;
    let mut failures = Vec::new();
    let placements = [
        Placement::Random,
        Placement::Suppress,
        Placement::Concentrate,
    ];
    for e in [1, 2] {
        for (i, &(n, d, u)) in GRID.iter().enumerate() {
            let bundle = bundle_for(n, d, u, e, SEED + 10 * e as u64 + i as u64);
            for placement in placements {
                let opts = SimulationOptions {
                    placement,
                    ..SimulationOptions::for_bundle(&bundle, TRIALS, SEED)
                };
                for trial in 0..TRIALS as u64 {
                    let mut rng = trial_rng(SEED, trial);
                    let dset = sample_defectives(&mut rng, n, u, d);
                    let clean = encode(&bundle.scheme, &dset.to_vector(n).unwrap()).unwrap();
                    let flips = place_flips(&bundle, &clean, &opts, &mut rng).unwrap();
                    assert_eq!(flips.len(), e);
                    let observed = flatten(&clean).with_flipped(&flips).unwrap();
                    let blocks =
                        split_blocks(&observed, bundle.scheme.h(), bundle.scheme.k()).unwrap();
                    let decoded = dec_natgt(&bundle.scheme, &blocks, e).unwrap();
                    total += 1;
                    if decoded == dset {
                        exact += 1;
                    } else if failures.len() < 3 {
                        failures.push(format!(
                            "({n},{d},{u}) e={e} {placement} D={dset} got {decoded}"
                        ));
                    }
                    record_multiset(stats, &bundle, &blocks, &dset, false);
                    if placement == Placement::Random {
                        record_multiset(stats, &bundle, &clean, &dset, true);
                    }
                }
            }
            bundles.push(bundle);
        }
    }
    let elapsed = started.elapsed();
    Outcome::new(
        exact == total && elapsed < Duration::from_secs(600),
        format!(
            "{exact}/{total} exact for e in {{1,2}} with random, suppress and concentrate flips in {}{}",
            secs(elapsed),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn criterion_5(stats: &MultisetStats) -> Outcome {
    Outcome::new(
        stats.over_bound == 0 && stats.low_counts == 0 && stats.error_free_trials > 0,
        format!(
            "|R*| <= u*h in {}/{} trials; every true count > 2e in {}/{} error-free trials",
            stats.trials - stats.over_bound,
            stats.trials,
            stats.error_free_trials - stats.low_counts,
            stats.error_free_trials
        ),
    )
}

fn criterion_6(bundles: &mut Vec<Bundle>) -> Outcome {
    let started = Instant::now();
    let points = [(12, 3, 2), (16, 3, 2), (20, 4, 2), (20, 4, 3)];
    let trials = 60;
    let (mut total, mut contains, mut singletons, mut agree) = (0, 0, 0, 0);
    for e in [0, 1, 2] {
        for (i, &(n, d, u)) in points.iter().enumerate() {
            let bundle = bundle_for(n, d, u, e, SEED + 100 + 10 * e as u64 + i as u64);
            let opts = SimulationOptions::for_bundle(&bundle, trials, SEED);
            for trial in 0..trials as u64 {
                let mut rng = trial_rng(SEED ^ 0x6, trial);
                let dset = sample_defectives(&mut rng, n, u, d);
                let clean = encode(&bundle.scheme, &dset.to_vector(n).unwrap()).unwrap();
                let flips = place_flips(&bundle, &clean, &opts, &mut rng).unwrap();
                let observed = flatten(&clean).with_flipped(&flips).unwrap();
                let blocks = split_blocks(&observed, bundle.scheme.h(), bundle.scheme.k()).unwrap();
                let decoded = dec_natgt(&bundle.scheme, &blocks, e).unwrap();
                let cs = brute_force_decode(
                    bundle.scheme.t(),
                    &observed,
                    d,
                    u,
                    e,
                    DEFAULT_ENUMERATION_LIMIT,
                )
                .unwrap();
                total += 1;
                contains += usize::from(cs.contains(&dset));
                if let Some(only) = cs.unique() {
                    singletons += 1;
                    agree += usize::from(*only == decoded);
                }
            }
            bundles.push(bundle);
        }
    }
    let elapsed = started.elapsed();
    Outcome::new(
        contains == total && agree == singletons && elapsed < Duration::from_secs(600),
        format!(
            "truth in consistency set {contains}/{total}; decoder matches {agree}/{singletons} singletons; {}",
            secs(elapsed)
        ),
    )
}

/// Reads the definition directly: some row has `j` and misses every column of `others`.
fn naive_disjunct(m: &BitMatrix, d: usize) -> bool {
    (0..m.cols()).all(|j| {
        let rest: Vec<usize> = (0..m.cols()).filter(|&c| c != j).collect();
        rest.iter().combinations(d).all(|others| {
            (0..m.rows()).any(|r| m.get(r, j) && others.iter().all(|&&i| !m.get(r, i)))
        })
    })
}

fn criterion_7() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let identity_ok = (2..=12).all(|n| {
        verify_disjunct(
            &BitMatrix::identity(n),
            n - 1,
            VerifyMode::Exhaustive,
            u128::MAX,
        )
        .map(|c| c.verified)
        .unwrap_or(false)
    });
    pass &= identity_ok;
    notes.push(format!("identity n=2..12 (n-1)-disjunct: {identity_ok}"));

    let mut constructed = 0;
    let mut constructed_ok = 0;
    for n in [8, 12, 16] {
        for d in 1..=3 {
            let config = DisjunctConfig {
                budget: u128::MAX,
                ..DisjunctConfig::default()
            };
            let (m, _) = construct_disjunct(
                n,
                d,
                &config,
                &mut rng_from_seed(SEED + n as u64 * 7 + d as u64),
            )
            .unwrap_or_else(|err| panic!("M ({n},{d}): {err}"));
            let cert = verify_disjunct(&m, d + 1, VerifyMode::Exhaustive, u128::MAX).unwrap();
            constructed += 1;
            if cert.verified && naive_disjunct(&m, d + 1) {
                constructed_ok += 1;
            }
        }
    }
    pass &= constructed_ok == constructed;
    notes.push(format!(
        "constructed M (d+1)-disjunct {constructed_ok}/{constructed}"
    ));

    // Reduction check: threshold disjunctness of G implies goodness
    // for every D. Layered good matrices rarely meet the premise (their
    // s = u layer is all ones), so dense Bernoulli(1/2) matrices are tried too.
    let instances = [
        (10, 3, 2, 0),
        (12, 4, 2, 0),
        (12, 5, 2, 0),
        (12, 4, 3, 0),
        (10, 3, 2, 1),
        (12, 5, 2, 1),
    ];
    let (mut attempted, mut premise, mut implied, mut sets) = (0, 0, 0, 0);
    for (i, &(n, d, u, e)) in instances.iter().enumerate() {
        let params = SchemeParams::new(n, d, u, e, p_for(e)).unwrap();
        let mut rng = rng_from_seed(SEED + 300 + i as u64);
        let config = GoodConfig {
            c_g: 16.0,
            ..GoodConfig::default()
        };
        let (layered, _) = construct_good(&params, &config, &mut rng)
            .unwrap_or_else(|err| panic!("G {params:?}: {err}"));
        let dense = BitMatrix::from_fn(1200, n, |_, _| rng.random_bool(0.5));
        for g in [layered, dense] {
            attempted += 1;
            let report = verify_threshold_disjunct(&g, params.d0(), u, e, u128::MAX).unwrap();
            if !report.verified {
                continue;
            }
            premise += 1;
            let mut all_good = true;
            for s in u..=d {
                for set in (0..n).combinations(s) {
                    let dset = DefectiveSet::new(set);
                    sets += 1;
                    let good = is_good_for(&g, &dset, u, e).unwrap().is_good;
                    let check = lemma1_check(&g, &dset, d, u, e).unwrap();
                    all_good &= good && check.pairs_satisfied && check.implies_good;
                }
            }
            implied += usize::from(all_good);
        }
    }
    pass &= premise > 0 && implied == premise;
    notes.push(format!(
        "reduction to goodness holds on {implied}/{premise} threshold-disjunct G ({attempted} attempted, {sets} defective sets)"
    ));
    Outcome::new(pass, notes.join("; "))
}

fn criterion_4(bundles: &[Bundle]) -> Outcome {
    let ok = bundles.iter().filter(|b| dims_ok(b)).count();
    let dir = tempfile::tempdir().unwrap();
    let reread = bundles.iter().take(5).all(|b| {
        b.write(dir.path()).unwrap();
        Bundle::read(dir.path())
            .map(|r| dims_ok(&r))
            .unwrap_or(false)
    });
    Outcome::new(
        ok == bundles.len() && reread,
        format!(
            "rows(T) = (2k+1)h for {ok}/{} bundles; re-read from disk: {reread}",
            bundles.len()
        ),
    )
}

/// Bundle files by name, then `trials.csv` and `trials.jsonl`.
type RunFiles = (Vec<(String, Vec<u8>)>, Vec<u8>, Vec<u8>);

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|entry| entry.unwrap().path())
        .filter(|path| path.is_file())
        .map(|path| {
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn criterion_8(bundles: &mut Vec<Bundle>) -> Outcome {
    let mut identical = true;
    let mut compared = 0;
    for &(n, d, u, e) in &[(32, 4, 2, 1), (16, 3, 2, 0)] {
        let runs: Vec<RunFiles> = (0..2)
            .map(|_| {
                let dir = tempfile::tempdir().unwrap();
                let bundle = bundle_for(n, d, u, e, 99);
                bundle.write(dir.path()).unwrap();
                let opts = SimulationOptions::for_bundle(&bundle, 50, 99);
                let records = simulate::run(&bundle, &opts).unwrap();
                let summary = simulate::summarize(&bundle, &records);
                let out = dir.path().join("sim");
                simulate::write_outputs(&out, &records, &summary).unwrap();
                let files = read_all(dir.path());
                let csv = fs::read(out.join("trials.csv")).unwrap();
                let jsonl = fs::read(out.join("trials.jsonl")).unwrap();
                bundles.push(bundle);
                (files, csv, jsonl)
            })
            .collect();
        compared += runs[0].0.len() + 2;
        identical &= runs[0] == runs[1];
    }
    let other = {
        let a = bundle_for(16, 3, 2, 0, 99);
        let b = bundle_for(16, 3, 2, 0, 100);
        a.scheme.t() != b.scheme.t()
    };
    Outcome::new(
        identical && other,
        format!("{compared} files byte-identical across repeated runs: {identical}; different seed differs: {other}"),
    )
}

fn main() -> ExitCode {
    let mut bundles = Vec::new();
    let mut stats = MultisetStats::default();
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();

    let mut report = |id: u32, name: &'static str, outcome: Outcome| {
        println!(
            "criterion {id} [{}] {name}: {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        results.push((id, name, outcome));
    };

    report(1, "rule-table soundness", criterion_1());
    report(7, "definition-level verification", criterion_7());
    report(
        2,
        "error-free exact recovery",
        criterion_2(&mut bundles, &mut stats),
    );
    report(
        3,
        "error-tolerant recovery",
        criterion_3(&mut bundles, &mut stats),
    );
    report(5, "multiset bound", criterion_5(&stats));
    report(6, "oracle agreement", criterion_6(&mut bundles));
    report(8, "determinism", criterion_8(&mut bundles));
    report(4, "dimension identity", criterion_4(&bundles));

    let failed = results.iter().filter(|(_, _, o)| !o.pass).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
