use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tgt_core::{
    encode, flatten, split_blocks, verify_disjunct, verify_threshold_disjunct, BitVector, Decoder,
    DefectiveSet, MatrixKind, VerifyMode,
};

use tgt_cli::bench::{grid, report_csv, run_grid};
use tgt_cli::bundle::{generate, read_matrix_file, Bundle};
use tgt_cli::config::{stream_rng, ExperimentConfig, TRIAL_STREAM};
use tgt_cli::error::{CliError, Result};
use tgt_cli::simulate::{self, place_flips, Placement, SimulationOptions};

#[derive(Parser)]
#[command(
    name = "tgt",
    version,
    about = "Non-adaptive threshold group testing toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Construct and certify a scheme bundle.
    Gen(GenArgs),
    /// Re-run a verifier on a matrix file or bundle.
    Verify(VerifyArgs),
    /// Compute the outcome vector for a defective set.
    Encode(EncodeArgs),
    /// Decode an outcome vector against a bundle.
    Decode(DecodeArgs),
    /// Run seeded randomized trials.
    Simulate(SimulateArgs),
    /// Measure a grid of parameter points.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct SchemeArgs {
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    d: usize,
    #[arg(long, default_value_t = 2)]
    u: usize,
    /// Error tolerance; G is certified at budget 2e.
    #[arg(long, default_value_t = 0)]
    e: usize,
    /// Row inflation: h grows by 1/(1-p)^2.
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    c: f64,
    #[arg(long = "c-g", default_value_t = 8.0)]
    c_g: f64,
    /// Work cap for exhaustive verification.
    #[arg(long, env = "TGT_BUDGET", default_value_t = tgt_core::constructions::DEFAULT_BUDGET)]
    budget: u128,
}

impl SchemeArgs {
    fn config(&self, trials: usize, out: Option<PathBuf>) -> ExperimentConfig {
        ExperimentConfig {
            n: self.n,
            d: self.d,
            u: self.u,
            e: self.e,
            p: self.p,
            trials,
            seed: self.seed,
            c: self.c,
            c_g: self.c_g,
            budget: self.budget,
            out,
        }
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyModeArg {
    Exhaustive,
    Search,
    Sampled,
}

#[derive(Clone, Copy, ValueEnum)]
enum Check {
    /// Plain d-disjunctness.
    Disjunct,
    /// Threshold (d, u; e)-disjunctness.
    Threshold,
}

#[derive(Args)]
struct VerifyArgs {
    /// A `.mat` file or a bundle directory.
    path: PathBuf,
    /// Disjunctness order; defaults to the header's `order`, or d+1 for a bundle.
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    u: Option<usize>,
    #[arg(long)]
    e: Option<usize>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: VerifyModeArg,
    #[arg(long, value_enum, default_value = "disjunct")]
    check: Check,
    /// Draws for sampled mode.
    #[arg(long, default_value_t = 200_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, env = "TGT_BUDGET", default_value_t = tgt_core::constructions::DEFAULT_BUDGET)]
    budget: u128,
    /// Where to write the certificate; stdout otherwise.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EncodeArgs {
    #[arg(long)]
    bundle: PathBuf,
    /// Comma-separated 1-based item indices.
    #[arg(long, value_delimiter = ',')]
    defectives: Vec<usize>,
    /// Flips to inject.
    #[arg(long, default_value_t = 0)]
    e: usize,
    #[arg(long, default_value = "random")]
    mode: Placement,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Outcome vector file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    outcome: PathBuf,
    /// Vote threshold is e+1; defaults to the bundle's e.
    #[arg(long)]
    e: Option<usize>,
    /// Per-block trace as JSON lines.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Use an existing bundle instead of generating one.
    #[arg(long)]
    bundle: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value = "random")]
    mode: Placement,
    /// Flips per trial; defaults to e.
    #[arg(long)]
    flips: Option<usize>,
    /// Draw |D| from 0..=d instead of u..=d.
    #[arg(long)]
    allow_small: bool,
    /// Cross-check every trial with the brute-force oracle.
    #[arg(long)]
    oracle: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long = "grid-n", value_delimiter = ',', default_values_t = [32, 64, 128])]
    grid_n: Vec<usize>,
    #[arg(long = "grid-d", value_delimiter = ',', default_values_t = [4])]
    grid_d: Vec<usize>,
    #[arg(long = "grid-u", value_delimiter = ',', default_values_t = [2])]
    grid_u: Vec<usize>,
    #[arg(long = "grid-e", value_delimiter = ',', default_values_t = [0])]
    grid_e: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    p: f64,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3.0)]
    c: f64,
    #[arg(long = "c-g", default_value_t = 8.0)]
    c_g: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::file(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::file(path, e))
}

fn print_json(value: &impl serde::Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let config = args.scheme.config(1, Some(args.out.clone()));
    config.validate()?;
    let bundle = generate(&config)?;
    bundle.write(&args.out)?;
    let m = &bundle.manifest;
    eprintln!(
        "wrote {}: k={} h={} t={} (M {}-disjunct via {:?})",
        args.out.display(),
        m.k,
        m.h,
        m.t,
        m.disjunct.d,
        m.disjunct.method
    );
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    let (matrix, order, stored, g_params) = if args.path.is_dir() {
        let bundle = Bundle::read(&args.path)?;
        let params = bundle.manifest.params;
        match args.check {
            Check::Disjunct => (
                bundle.scheme.m().clone(),
                args.d.unwrap_or(params.d + 1),
                Some(bundle.manifest.disjunct.verified),
                None,
            ),
            Check::Threshold => (
                bundle.scheme.g().clone(),
                args.d.unwrap_or(params.d0()),
                None,
                Some((params.u, params.e)),
            ),
        }
    } else {
        let file = read_matrix_file(&args.path)?;
        let header = |key: &str| {
            file.params
                .get(key)
                .and_then(|v| v.as_u64())
                .map(|v| v as usize)
        };
        let order = args
            .d
            .or_else(|| header("order"))
            .or_else(|| {
                (file.kind == MatrixKind::Disjunct)
                    .then(|| header("d").map(|d| d + 1))
                    .flatten()
            })
            .ok_or_else(|| CliError::Usage("pass --d: the header records no order".into()))?;
        (file.matrix, order, None, None)
    };

    match args.check {
        Check::Disjunct => {
            let mode = match args.mode {
                VerifyModeArg::Exhaustive => VerifyMode::Exhaustive,
                VerifyModeArg::Search => VerifyMode::Search,
                VerifyModeArg::Sampled => VerifyMode::Sampled {
                    trials: args.trials,
                    seed: args.seed,
                },
            };
            let cert = verify_disjunct(&matrix, order, mode, args.budget).map_err(|e| {
                if matches!(e, tgt_core::Error::Budget { .. }) {
                    eprintln!(
                        "hint: retry with --mode search or --mode sampled, or raise TGT_BUDGET"
                    );
                }
                e
            })?;
            emit(&cert, args.out.as_deref())?;
            if let Some(stored) = stored {
                if stored != cert.verified {
                    return Err(CliError::Verification(
                        "result disagrees with the bundle's stored certificate".into(),
                    ));
                }
            }
            if !cert.verified {
                return Err(CliError::Verification(format!(
                    "matrix is not {order}-disjunct"
                )));
            }
        }
        Check::Threshold => {
            let (u, e) = match g_params {
                Some((u, e)) => (args.u.unwrap_or(u), args.e.unwrap_or(e)),
                None => (
                    args.u.ok_or_else(|| CliError::Usage("pass --u".into()))?,
                    args.e.unwrap_or(0),
                ),
            };
            let report = verify_threshold_disjunct(&matrix, order, u, e, args.budget)?;
            emit(&report, args.out.as_deref())?;
            if !report.verified {
                return Err(CliError::Verification(format!(
                    "matrix is not threshold ({order}, {u}; {e})-disjunct"
                )));
            }
        }
    }
    Ok(())
}

fn emit(value: &impl serde::Serialize, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut text = serde_json::to_string_pretty(value)?;
            text.push('\n');
            write(path, text)
        }
        None => print_json(value),
    }
}

fn cmd_encode(args: EncodeArgs) -> Result<()> {
    let bundle = Bundle::read(&args.bundle)?;
    let n = bundle.manifest.params.n;
    let dset = DefectiveSet::from_one_based(&args.defectives)?;
    let clean = encode(&bundle.scheme, &dset.to_vector(n)?)?;
    let opts = SimulationOptions {
        errors: args.e,
        placement: args.mode,
        ..SimulationOptions::for_bundle(&bundle, 1, args.seed)
    };
    let flips = place_flips(
        &bundle,
        &clean,
        &opts,
        &mut stream_rng(args.seed, TRIAL_STREAM),
    )?;
    let y = flatten(&clean).with_flipped(&flips)?;
    write(&args.out, y.to_text())?;
    print_json(&json!({
        "defectives": dset,
        "tests": y.len(),
        "weight": y.weight(),
        "flips": flips.iter().map(|f| f + 1).collect::<Vec<_>>(),
    }))
}

fn cmd_decode(args: DecodeArgs) -> Result<()> {
    let bundle = Bundle::read(&args.bundle)?;
    let path = &args.outcome;
    let text = fs::read_to_string(path).map_err(|e| CliError::file(path, e))?;
    let y = BitVector::from_text(&text)?;
    let blocks = split_blocks(&y, bundle.scheme.h(), bundle.scheme.k())?;
    let output = Decoder::new(&bundle.scheme).run(&blocks)?;
    let e = args.e.unwrap_or(bundle.manifest.params.e);
    if let Some(out) = &args.out {
        let mut lines = String::new();
        for t in &output.trace {
            lines.push_str(&serde_json::to_string(t)?);
            lines.push('\n');
        }
        write(out, lines)?;
    }
    print_json(&json!({
        "decoded": output.voted(e),
        "status": output.status,
        "vote_threshold": e + 1,
        "counts": output.multiset,
        "accepted_blocks": output.accepted_blocks(),
        "rejected_blocks": output.rejected_blocks(),
    }))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let config = args.scheme.config(args.trials, args.out.clone());
    let bundle = match &args.bundle {
        Some(dir) => Bundle::read(dir)?,
        None => {
            config.validate()?;
            let bundle = generate(&config)?;
            if let Some(out) = &args.out {
                bundle.write(&out.join("bundle"))?;
            }
            bundle
        }
    };
    let params = bundle.manifest.params;
    let opts = SimulationOptions {
        trials: args.trials,
        seed: config.seed,
        errors: args.flips.unwrap_or(config.e),
        placement: args.mode,
        min_size: if args.allow_small { 0 } else { params.u },
        max_size: params.d,
        oracle: args.oracle,
    };
    let records = simulate::run(&bundle, &opts)?;
    let summary = simulate::summarize(&bundle, &records);
    if let Some(out) = &args.out {
        simulate::write_outputs(out, &records, &summary)?;
    }
    if !summary.certified {
        eprintln!(
            "warning: {} flips exceed the certified budget of {}; results are uncertified",
            opts.errors,
            bundle.manifest.certified_errors()
        );
    }
    print_json(&summary)
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let points = grid(
        &args.grid_n,
        &args.grid_d,
        &args.grid_u,
        &args.grid_e,
        args.p,
    );
    let base = ExperimentConfig {
        trials: args.trials,
        seed: args.seed,
        c: args.c,
        c_g: args.c_g,
        ..ExperimentConfig::default()
    };
    let report = run_grid(&points, &base)?;
    match &args.out {
        Some(dir) => {
            write(&dir.join("bench.csv"), report_csv(&report)?)?;
            let mut text = serde_json::to_string_pretty(&report)?;
            text.push('\n');
            write(&dir.join("bench.json"), text)?;
            eprintln!("note: {}", report.note);
        }
        None => print_json(&report)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Encode(a) => cmd_encode(a),
        Command::Decode(a) => cmd_decode(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
