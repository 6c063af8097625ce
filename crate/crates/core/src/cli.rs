//! Command-line entry point. Every subcommand prints its resolved
//! configuration (seed included) before doing any work, so stdout doubles
//! as a reproduction recipe. Exit codes: 0 success, 1 usage error, 2
//! data/model error, 3 gradient-check failure.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::bptt::{grad_check, BpttMode};
use crate::cells::SequencePair;
use crate::error::{Error, Result};
use crate::evaluator::{evaluate_with, observation_curve_with, ScoreMode};
use crate::model::{Model, ModelFamily};
use crate::numkernel::{DenseVector, Prng};
use crate::persist::{load_checkpoint, save_checkpoint};
use crate::synthdata::{generate_dataset, header_json, read_dataset, write_dataset, GenConfig};
use crate::trainer::{train_with_state, TrainConfig};

#[derive(Parser)]
#[command(
    name = "colstsm",
    about = "Paired-sequence interaction classification lab",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic paired-stream dataset
    Gen(GenArgs),
    /// Train a model and write a checkpoint plus history CSV
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split
    Eval(EvalArgs),
    /// Accuracy against observation ratio (10 points)
    Curve(CurveArgs),
    /// Compare analytic gradients against finite differences
    Gradcheck(GradcheckArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output stem; writes <out>.train.jsonl and <out>.test.jsonl
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 4)]
    classes: usize,
    #[arg(long, default_value_t = 200)]
    train_per_class: usize,
    #[arg(long, default_value_t = 50)]
    test_per_class: usize,
    #[arg(long, default_value_t = 30)]
    seq_len: usize,
    #[arg(long, default_value_t = 4)]
    input_dim: usize,
    #[arg(long, default_value_t = 8)]
    motif_pool: usize,
    #[arg(long, default_value_t = 3)]
    lag: usize,
    #[arg(long, default_value_t = 0.1)]
    noise: f64,
    /// Integer seed, or "auto" to draw one from the clock
    #[arg(long, default_value = "42")]
    seed: String,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset stem as produced by `gen`
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint output path
    #[arg(long)]
    checkpoint: PathBuf,
    /// History CSV path (defaults to <checkpoint>.history.csv)
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, default_value = "colstsm")]
    model: String,
    #[arg(long, default_value_t = 32)]
    hidden: usize,
    #[arg(long, default_value_t = 60)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-2)]
    lr: f64,
    #[arg(long, default_value_t = 0.9)]
    momentum: f64,
    #[arg(long, default_value_t = 0.95)]
    decay: f64,
    #[arg(long, default_value_t = 16)]
    batch_size: usize,
    /// Backpropagation mode: full or truncated
    #[arg(long, default_value = "full")]
    bptt: String,
    /// Optional max-norm gradient clip
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long, default_value = "42")]
    seed: String,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Which split to evaluate: test or train
    #[arg(long, default_value = "test")]
    split: String,
    /// Scoring rule: last (final observed step) or mean (average over steps)
    #[arg(long, default_value = "last")]
    score: String,
    /// Optional machine-readable confusion CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    split: String,
    #[arg(long, default_value = "last")]
    score: String,
    /// Optional CSV output path (the curve always prints to stdout)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GradcheckArgs {
    #[arg(long, default_value = "colstsm")]
    model: String,
    /// Comma-separated n,m,k,T
    #[arg(long, default_value = "2,3,2,4")]
    dims: String,
    #[arg(long, default_value_t = 1e-5)]
    eps: f64,
    #[arg(long, default_value_t = 1e-5)]
    tol: f64,
    #[arg(long, default_value = "42")]
    seed: String,
    /// Optional per-tensor CSV report
    #[arg(long)]
    csv: Option<PathBuf>,
}

/// Exit code for a library error: flag-level problems are usage errors,
/// everything else is a data/model error.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_) => 1,
        _ => 2,
    }
}

fn parse_seed(s: &str) -> Result<u64> {
    if s == "auto" {
        let nanos = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_nanos() as u64)
            .unwrap_or(0);
        return Ok(nanos);
    }
    s.parse::<u64>()
        .map_err(|_| Error::InvalidConfig(format!("seed must be an integer or \"auto\", got \"{s}\"")))
}

fn parse_family(s: &str) -> Result<ModelFamily> {
    ModelFamily::parse(s).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "unknown model \"{s}\" (expected one of rnn, one-lstm, two-lstm, pooled, colstsm)"
        ))
    })
}

fn parse_score(s: &str) -> Result<ScoreMode> {
    ScoreMode::parse(s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown score mode \"{s}\" (expected last or mean)")))
}

fn cmd_gen(args: &GenArgs) -> Result<()> {
    let seed = parse_seed(&args.seed)?;
    let cfg = GenConfig {
        classes: args.classes,
        train_per_class: args.train_per_class,
        test_per_class: args.test_per_class,
        seq_len: args.seq_len,
        input_dim: args.input_dim,
        motif_pool: args.motif_pool,
        lag: args.lag,
        noise_sigma: args.noise,
        seed,
    };
    println!(
        "config: cmd=gen classes={} train_per_class={} test_per_class={} seq_len={} input_dim={} motif_pool={} lag={} noise={} seed={} out={}",
        cfg.classes, cfg.train_per_class, cfg.test_per_class, cfg.seq_len, cfg.input_dim,
        cfg.motif_pool, cfg.lag, cfg.noise_sigma, cfg.seed, args.out.display()
    );
    let ds = generate_dataset(&cfg)?;
    write_dataset(&ds, &args.out)?;
    println!("header: {}", header_json(&cfg, "train"));
    println!(
        "wrote {} training and {} test records under {}.{{train,test}}.jsonl",
        ds.train.len(),
        ds.test.len(),
        args.out.display()
    );
    Ok(())
}

fn default_history_path(checkpoint: &PathBuf) -> PathBuf {
    PathBuf::from(format!("{}.history.csv", checkpoint.display()))
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let seed = parse_seed(&args.seed)?;
    let family = parse_family(&args.model)?;
    let bptt_mode = BpttMode::parse(&args.bptt)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown bptt mode \"{}\"", args.bptt)))?;
    let cfg = TrainConfig {
        family,
        hidden: args.hidden,
        learning_rate: args.lr,
        momentum: args.momentum,
        decay: args.decay,
        epochs: args.epochs,
        batch_size: args.batch_size,
        bptt_mode,
        clip_norm: args.clip,
        seed,
    };
    cfg.validate()?;
    let history_path = args.history.clone().unwrap_or_else(|| default_history_path(&args.checkpoint));
    println!(
        "config: cmd=train data={} model={} hidden={} epochs={} lr={} momentum={} decay={} batch_size={} bptt={} clip={} seed={} checkpoint={} history={}",
        args.data.display(), family, cfg.hidden, cfg.epochs, cfg.learning_rate, cfg.momentum,
        cfg.decay, cfg.batch_size, cfg.bptt_mode.tag(),
        cfg.clip_norm.map_or("none".to_string(), |c| c.to_string()),
        cfg.seed, args.checkpoint.display(), history_path.display()
    );

    let ds = read_dataset(&args.data)?;
    let (model, opt, history) = train_with_state(&ds, &cfg)?;
    save_checkpoint(&model, Some(&opt), &cfg, &args.checkpoint)?;
    std::fs::write(&history_path, history.to_csv())?;

    if let Some(last) = history.epochs.last() {
        println!(
            "trained {} epochs: final loss {:.6}, train accuracy {:.6}",
            history.epochs.len(),
            last.loss,
            last.train_accuracy
        );
    } else {
        println!("trained 0 epochs: checkpoint holds the initialization");
    }
    println!("checkpoint written to {}", args.checkpoint.display());
    Ok(())
}

fn load_split<'a>(ds: &'a crate::synthdata::Dataset, split: &str) -> Result<&'a [SequencePair]> {
    match split {
        "test" => Ok(&ds.test),
        "train" => Ok(&ds.train),
        other => Err(Error::InvalidConfig(format!(
            "unknown split \"{other}\" (expected test or train)"
        ))),
    }
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let score = parse_score(&args.score)?;
    println!(
        "config: cmd=eval data={} checkpoint={} split={} score={}",
        args.data.display(),
        args.checkpoint.display(),
        args.split,
        score.tag()
    );
    let ds = read_dataset(&args.data)?;
    let (model, _, _) = load_checkpoint(&args.checkpoint)?;
    let pairs = load_split(&ds, &args.split)?;
    let metrics = evaluate_with(&model, pairs, score)?;
    print!("{}", metrics.text_table());
    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, metrics.to_csv())?;
        println!("confusion CSV written to {}", csv_path.display());
    }
    Ok(())
}

fn cmd_curve(args: &CurveArgs) -> Result<()> {
    let score = parse_score(&args.score)?;
    println!(
        "config: cmd=curve data={} checkpoint={} split={} score={}",
        args.data.display(),
        args.checkpoint.display(),
        args.split,
        score.tag()
    );
    let ds = read_dataset(&args.data)?;
    let (model, _, _) = load_checkpoint(&args.checkpoint)?;
    let pairs = load_split(&ds, &args.split)?;
    let curve = observation_curve_with(&model, pairs, score)?;
    print!("{}", curve.to_csv());
    if let Some(out) = &args.out {
        std::fs::write(out, curve.to_csv())?;
        println!("curve CSV written to {}", out.display());
    }
    Ok(())
}

/// Random tiny model and pair for the gradient check; label and features
/// come from the same seeded stream as the parameters.
fn gradcheck_fixture(family: ModelFamily, dims: (usize, usize, usize, usize), seed: u64)
    -> Result<(Model, SequencePair)>
{
    let (n, m, k, t_len) = dims;
    let mut prng = Prng::new(seed);
    let mk = |prng: &mut Prng| {
        (0..t_len)
            .map(|_| DenseVector::from_vec((0..n).map(|_| prng.gaussian()).collect()))
            .collect::<Vec<_>>()
    };
    let a = mk(&mut prng);
    let b = mk(&mut prng);
    let label = prng.below(k);
    let pair = SequencePair::new(a, b, label)?;
    let model = Model::new(family, n, m, k, &mut prng);
    Ok((model, pair))
}

fn parse_dims(s: &str) -> Result<(usize, usize, usize, usize)> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(Error::InvalidConfig(format!(
            "dims must be n,m,k,T (four integers), got \"{s}\""
        )));
    }
    let mut vals = [0usize; 4];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part.trim().parse().map_err(|_| {
            Error::InvalidConfig(format!("dims component \"{part}\" is not a positive integer"))
        })?;
    }
    if vals.iter().any(|&v| v == 0) || vals[2] < 2 {
        return Err(Error::InvalidConfig(format!(
            "dims n,m,k,T must be positive with k >= 2, got \"{s}\""
        )));
    }
    Ok((vals[0], vals[1], vals[2], vals[3]))
}

/// Returns the process exit code instead of calling exit, so tests can
/// drive it directly.
fn cmd_gradcheck(args: &GradcheckArgs) -> Result<i32> {
    let seed = parse_seed(&args.seed)?;
    let family = parse_family(&args.model)?;
    let dims = parse_dims(&args.dims)?;
    if args.eps <= 0.0 || args.tol <= 0.0 {
        return Err(Error::InvalidConfig("eps and tol must be positive".into()));
    }
    println!(
        "config: cmd=gradcheck model={} dims=n={},m={},k={},T={} eps={} tol={} seed={}",
        family, dims.0, dims.1, dims.2, dims.3, args.eps, args.tol, seed
    );
    let (model, pair) = gradcheck_fixture(family, dims, seed)?;
    let report = grad_check(&model, &pair, args.eps, args.tol)?;
    print!("{}", report.text_table());
    if let Some(csv_path) = &args.csv {
        std::fs::write(csv_path, report.to_csv())?;
        println!("report CSV written to {}", csv_path.display());
    }
    Ok(if report.passed() { 0 } else { 3 })
}

/// Parses and runs a full command line (including argv\[0\]); returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders help/version as "errors"; keep their exit code 0
            if e.use_stderr() {
                eprint!("{e}");
                return 1;
            }
            print!("{e}");
            return 0;
        }
    };
    let outcome = match &cli.cmd {
        Cmd::Gen(a) => cmd_gen(a).map(|()| 0),
        Cmd::Train(a) => cmd_train(a).map(|()| 0),
        Cmd::Eval(a) => cmd_eval(a).map(|()| 0),
        Cmd::Curve(a) => cmd_curve(a).map(|()| 0),
        Cmd::Gradcheck(a) => cmd_gradcheck(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
