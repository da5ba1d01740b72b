//! Command-line surface: `synth`, `train`, `eval {corr,align,zeroshot}`,
//! `retrieve` and `inspect`.
//!
//! Exit codes: 0 on success, 1 on a runtime failure, 2 on a usage error.
//! Every command that takes `--out` also writes `run.json`, a
//! reproducibility record with the effective config, seed and format
//! versions.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::evaluation::{
    alignment_summary, baseline_correspondence, correspondence_accuracy, multi_hot, nearest_neighbors,
    simulated_random_alignment, video_map, zero_shot_video, ClosureEmbedder, CorrespondenceResult, FrameEmbedder,
    RandomEmbedder, RawFeatures,
};
use crate::io::{load_checkpoint, load_dataset, save_checkpoint, write_csv, write_jsonl, KeyValueConfig, RunRecord};
use crate::sampling::{enumerate_test_triplets, FrameId, Modality, PairIndex};
use crate::synth::{generate_synthetic, read_truth, write_dataset, SyntheticConfig, TRUTH_FILE};
use crate::training::{TrainConfig, TrainState};

pub const CHECKPOINT_FILE: &str = "checkpoint.aock";
pub const RUN_RECORD_FILE: &str = "run.json";

#[derive(Debug, Parser)]
#[command(name = "firstthird", version, about = "Selector-weighted first/third-person embedding learning")]
struct Cli {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the config file
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a planted synthetic dataset
    Synth,
    /// Train on a manifest and write a checkpoint
    Train(TrainArgs),
    /// Evaluate a checkpoint
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Nearest first-person frames for a third-person query frame
    Retrieve(RetrieveArgs),
    /// Dump checkpoint metadata as JSON
    Inspect(InspectArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    /// Add the classification head and labeled third-person frames
    #[arg(long)]
    mixed: bool,
    /// Continue from this checkpoint instead of initializing
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Split {
    Test,
    Train,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbedderKind {
    /// The checkpoint's trained model
    Model,
    /// Raw ingested features
    Raw,
    /// Seeded Gaussian embeddings
    Random,
    /// Planted latents from the synthetic ground-truth sidecar
    Oracle,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Required for the `model` embedder and for split selection
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    split: Split,
    #[arg(long, value_enum, default_value = "model")]
    embedder: EmbedderKind,
    /// Ground-truth sidecar for the oracle embedder (default: next to the manifest)
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum EvalCommand {
    /// Triplet correspondence accuracy with selector-ranked subsets
    Corr {
        #[command(flatten)]
        common: EvalArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 0.5, 0.1, 0.05])]
        fractions: Vec<f64>,
    },
    /// One-second moment alignment error
    Align {
        #[command(flatten)]
        common: EvalArgs,
        #[arg(long, default_value_t = 1.0)]
        moment_seconds: f64,
    },
    /// Zero-shot first-person video classification
    Zeroshot {
        #[command(flatten)]
        common: EvalArgs,
    },
}

#[derive(Debug, Args)]
struct RetrieveArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    checkpoint: PathBuf,
    /// Pair id of the third-person query frame
    #[arg(long)]
    pair: String,
    #[arg(long)]
    frame: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
}

#[derive(Debug, Args)]
struct InspectArgs {
    #[arg(long)]
    checkpoint: PathBuf,
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code. Human-readable output goes to `stdout`.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn load_kv(path: &Option<PathBuf>) -> anyhow::Result<KeyValueConfig> {
    match path {
        Some(p) => KeyValueConfig::load(p).with_context(|| format!("reading config {}", p.display())),
        None => Ok(KeyValueConfig::default()),
    }
}

fn require_out(out: &Option<PathBuf>) -> anyhow::Result<&Path> {
    out.as_deref().context("--out is required for this command")
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let kv = load_kv(&cli.config)?;
    match cli.command {
        Command::Synth => {
            let out = require_out(&cli.out)?;
            let mut cfg = SyntheticConfig::default();
            kv.apply_synth(&mut cfg)?;
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            let ds = generate_synthetic(&cfg)?;
            write_dataset(&ds, out)?;
            RunRecord::new("synth", cfg.seed, serde_json::to_value(&cfg)?).write(&out.join(RUN_RECORD_FILE))?;
            writeln!(stdout, "wrote {} pairs to {}", ds.index.len(), out.display())?;
        }
        Command::Train(args) => train(&kv, cli.seed, require_out(&cli.out)?, &args, stdout)?,
        Command::Eval(cmd) => eval(cmd, cli.seed, cli.out.as_deref(), stdout)?,
        Command::Retrieve(args) => retrieve(&args, cli.out.as_deref(), stdout)?,
        Command::Inspect(args) => {
            let state = load_checkpoint(&args.checkpoint)
                .with_context(|| format!("loading {}", args.checkpoint.display()))?;
            let dump = serde_json::to_string_pretty(&inspect_dump(&state))?;
            writeln!(stdout, "{dump}")?;
            if let Some(out) = &cli.out {
                crate::io::atomic_write(&out.join("inspect.json"), format!("{dump}\n").as_bytes())?;
            }
        }
    }
    Ok(())
}

fn train(kv: &KeyValueConfig, seed: Option<u64>, out: &Path, args: &TrainArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let index = load_dataset(&args.manifest, None).with_context(|| format!("loading {}", args.manifest.display()))?;
    let mut state = match &args.resume {
        Some(path) => {
            let mut s = load_checkpoint(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(e) = args.epochs {
                s.config.epochs = e;
            }
            s
        }
        None => {
            let mut cfg = TrainConfig::default();
            kv.apply_train(&mut cfg)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = args.epochs {
                cfg.epochs = e;
            }
            cfg.mixed_mode |= args.mixed;
            TrainState::initialize(cfg, &index)?
        }
    };
    while state.optimizer.epoch < state.config.epochs {
        let e = state.run_epoch(&index)?;
        writeln!(
            stdout,
            "epoch {:>3}  lr {:.3e}  loss {:.5}  weighted {:.5}  running {:.5}",
            e.epoch, e.learning_rate, e.mean_loss, e.weighted_loss, e.running_loss
        )?;
    }
    save_checkpoint(&out.join(CHECKPOINT_FILE), &state)?;
    write_jsonl(&out.join("history.jsonl"), &state.history)?;
    let rows: Vec<Vec<String>> = state
        .history
        .iter()
        .map(|h| vec![h.epoch.to_string(), h.learning_rate.to_string(), h.mean_loss.to_string(), h.weighted_loss.to_string()])
        .collect();
    write_csv(&out.join("history.csv"), &["epoch", "learning_rate", "mean_loss", "weighted_loss"], &rows)?;
    RunRecord::new("train", state.config.seed, serde_json::to_value(&state.config)?).write(&out.join(RUN_RECORD_FILE))?;
    if !state.skipped_pairs.is_empty() {
        writeln!(stdout, "skipped {} infeasible pairs", state.skipped_pairs.len())?;
    }
    writeln!(stdout, "checkpoint written to {}", out.join(CHECKPOINT_FILE).display())?;
    Ok(())
}

/// Everything evaluation needs: the data, an optional checkpoint and the
/// pairs selected by `--split`.
struct EvalContext {
    index: PairIndex,
    state: Option<TrainState>,
    pairs: Vec<usize>,
}

fn eval_context(args: &EvalArgs) -> anyhow::Result<EvalContext> {
    let index = load_dataset(&args.manifest, None).with_context(|| format!("loading {}", args.manifest.display()))?;
    let state = args
        .checkpoint
        .as_ref()
        .map(|p| load_checkpoint(p).with_context(|| format!("loading {}", p.display())))
        .transpose()?;
    let ids: Vec<String> = match (&state, args.split) {
        (_, Split::All) => index.pairs.iter().map(|p| p.id.clone()).collect(),
        (Some(s), Split::Test) => s.split.test.clone(),
        (Some(s), Split::Train) => s.split.train.clone(),
        (None, _) => bail!("--split test/train needs --checkpoint; use --split all"),
    };
    let mut pairs = ids
        .iter()
        .map(|id| index.position(id).with_context(|| format!("pair {id} from the split is not in the manifest")))
        .collect::<anyhow::Result<Vec<_>>>()?;
    pairs.sort_unstable();
    if pairs.is_empty() {
        bail!("no pairs selected for evaluation");
    }
    Ok(EvalContext { index, state, pairs })
}

fn with_embedder<R>(
    ctx: &EvalContext,
    args: &EvalArgs,
    seed: u64,
    f: &mut dyn FnMut(&dyn FrameEmbedder) -> anyhow::Result<R>,
) -> anyhow::Result<R> {
    match args.embedder {
        EmbedderKind::Model => {
            let state = ctx.state.as_ref().context("the model embedder needs --checkpoint")?;
            f(&state.model)
        }
        EmbedderKind::Raw => f(&RawFeatures),
        EmbedderKind::Random => f(&RandomEmbedder {
            dim: ctx.index.feature_dim().unwrap_or(1),
            seed,
        }),
        EmbedderKind::Oracle => {
            let path = args.truth.clone().unwrap_or_else(|| {
                args.manifest.parent().unwrap_or(Path::new(".")).join(TRUTH_FILE)
            });
            let truth = read_truth(&path).with_context(|| format!("reading {}", path.display()))?;
            let by_id: std::collections::HashMap<&str, &crate::synth::PairTruth> =
                truth.iter().map(|t| (t.pair_id.as_str(), t)).collect();
            for p in &ctx.pairs {
                if !by_id.contains_key(ctx.index.pairs[*p].id.as_str()) {
                    bail!("no ground truth for pair {}", ctx.index.pairs[*p].id);
                }
            }
            let oracle = ClosureEmbedder::new(|ix: &PairIndex, id: FrameId| {
                by_id.get(ix.pairs[id.pair].id.as_str()).map_or_else(Vec::new, |t| t.latent(id.modality, id.frame).to_vec())
            });
            f(&oracle)
        }
    }
}

#[derive(Serialize)]
struct CorrRow<'a> {
    row: &'a str,
    #[serde(flatten)]
    result: &'a CorrespondenceResult,
}

fn eval(cmd: EvalCommand, seed: Option<u64>, out: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let seed = seed.unwrap_or(0);
    match cmd {
        EvalCommand::Corr { common, fractions } => {
            let ctx = eval_context(&common)?;
            let sampler = ctx.state.as_ref().map(|s| s.config.sampler()).unwrap_or_default();
            let mut triplets = Vec::new();
            let mut skipped = Vec::new();
            for &p in &ctx.pairs {
                match enumerate_test_triplets(&ctx.index, p, &sampler) {
                    Ok(t) => triplets.extend(t),
                    Err(crate::Error::InfeasiblePair(_)) => skipped.push(ctx.index.pairs[p].id.clone()),
                    Err(e) => return Err(e.into()),
                }
            }
            let rows = with_embedder(&ctx, &common, seed, &mut |m| {
                Ok(vec![
                    ("selector", correspondence_accuracy(m, &ctx.index, &triplets, &fractions)?),
                    ("margin_raw_features", baseline_correspondence(m, &RawFeatures, &ctx.index, &triplets, &fractions)?),
                    ("margin_embeddings", baseline_correspondence(m, m, &ctx.index, &triplets, &fractions)?),
                ])
            })?;
            writeln!(stdout, "{} triplets from {} pairs ({} skipped)", triplets.len(), ctx.pairs.len(), skipped.len())?;
            write!(stdout, "{:<22}", "ranking")?;
            for f in &fractions {
                write!(stdout, "{:>9}", format!("{}%", f * 100.0))?;
            }
            writeln!(stdout)?;
            for (name, r) in &rows {
                write!(stdout, "{name:<22}")?;
                for s in &r.accuracy_at {
                    write!(stdout, "{:>9.4}", s.accuracy)?;
                }
                writeln!(stdout)?;
            }
            if let Some(out) = out {
                let records: Vec<CorrRow> = rows.iter().map(|(row, result)| CorrRow { row, result }).collect();
                write_jsonl(&out.join("corr.jsonl"), &records)?;
                let csv_rows: Vec<Vec<String>> = rows
                    .iter()
                    .flat_map(|(name, r)| {
                        r.accuracy_at
                            .iter()
                            .map(|s| vec![name.to_string(), s.fraction.to_string(), s.accuracy.to_string(), s.n_selected.to_string()])
                    })
                    .collect();
                write_csv(&out.join("corr.csv"), &["ranking", "fraction", "accuracy", "n_selected"], &csv_rows)?;
                let cfg = json!({ "embedder": format!("{:?}", common.embedder), "split": format!("{:?}", common.split), "fractions": fractions });
                RunRecord::new("eval corr", seed, cfg).write(&out.join(RUN_RECORD_FILE))?;
            }
        }
        EvalCommand::Align { common, moment_seconds } => {
            let ctx = eval_context(&common)?;
            let r = with_embedder(&ctx, &common, seed, &mut |m| Ok(alignment_summary(m, &ctx.index, &ctx.pairs, moment_seconds)?))?;
            let random = simulated_random_alignment(&ctx.index, &ctx.pairs, moment_seconds, 1000, seed)?;
            writeln!(stdout, "median alignment error {:.3} s (mean {:.3} s) over {} pairs", r.median_error, r.mean_error, ctx.pairs.len())?;
            writeln!(stdout, "random-moment baseline median {random:.3} s")?;
            if let Some(out) = out {
                write_jsonl(&out.join("align.jsonl"), std::slice::from_ref(&r))?;
                let rows: Vec<Vec<String>> =
                    r.pair_ids.iter().zip(&r.per_pair_error).map(|(id, e)| vec![id.clone(), e.to_string()]).collect();
                write_csv(&out.join("align.csv"), &["pair", "error_seconds"], &rows)?;
                let cfg = json!({ "embedder": format!("{:?}", common.embedder), "split": format!("{:?}", common.split), "moment_seconds": moment_seconds });
                RunRecord::new("eval align", seed, cfg).write(&out.join(RUN_RECORD_FILE))?;
            }
        }
        EvalCommand::Zeroshot { common } => {
            let ctx = eval_context(&common)?;
            let state = ctx.state.as_ref().context("zero-shot evaluation needs --checkpoint")?;
            let n_classes = state.model.config.n_classes.context("checkpoint has no classifier; train with --mixed")?;
            let scores = ctx
                .pairs
                .iter()
                .map(|&p| zero_shot_video(&state.model, &ctx.index, p))
                .collect::<crate::Result<Vec<_>>>()?;
            let labels: Vec<Vec<usize>> = ctx.pairs.iter().map(|&p| ctx.index.pairs[p].labels.clone()).collect();
            let r = video_map(&scores, &multi_hot(&labels, n_classes)?)?;
            writeln!(stdout, "video mAP {:.4} over {} videos", r.map, ctx.pairs.len())?;
            if let Some(out) = out {
                write_jsonl(&out.join("zeroshot.jsonl"), std::slice::from_ref(&r))?;
                let rows: Vec<Vec<String>> = r
                    .per_class_ap
                    .iter()
                    .enumerate()
                    .map(|(c, ap)| vec![c.to_string(), ap.map_or_else(String::new, |v| v.to_string())])
                    .collect();
                write_csv(&out.join("zeroshot.csv"), &["class", "ap"], &rows)?;
                let cfg = json!({ "split": format!("{:?}", common.split) });
                RunRecord::new("eval zeroshot", seed, cfg).write(&out.join(RUN_RECORD_FILE))?;
            }
        }
    }
    Ok(())
}

fn retrieve(args: &RetrieveArgs, out: Option<&Path>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let index = load_dataset(&args.manifest, None)?;
    let state = load_checkpoint(&args.checkpoint)?;
    let pair = index.position(&args.pair).with_context(|| format!("unknown pair {}", args.pair))?;
    if args.frame >= index.pairs[pair].third.len() {
        bail!("pair {} has only {} third-person frames", args.pair, index.pairs[pair].third.len());
    }
    let query = FrameId { pair, modality: Modality::ThirdPerson, frame: args.frame };
    // gallery: first-person frames of the training pairs
    let gallery: Vec<FrameId> = state
        .split
        .train
        .iter()
        .filter_map(|id| index.position(id))
        .flat_map(|p| (0..index.pairs[p].ego.len()).map(move |frame| FrameId { pair: p, modality: Modality::FirstPerson, frame }))
        .collect();
    let hits = nearest_neighbors(&state.model, &index, query, &gallery, args.k)?;
    #[derive(Serialize)]
    struct Hit<'a> {
        rank: usize,
        pair: &'a str,
        frame: usize,
        timestamp: f64,
        distance: f64,
    }
    let records: Vec<Hit> = hits
        .iter()
        .enumerate()
        .map(|(rank, (id, d))| Hit {
            rank: rank + 1,
            pair: &index.pairs[id.pair].id,
            frame: id.frame,
            timestamp: index.frame(*id).timestamp,
            distance: *d,
        })
        .collect();
    for h in &records {
        writeln!(stdout, "{:>3}  {}  frame {:>4}  t={:.3}s  d={:.5}", h.rank, h.pair, h.frame, h.timestamp, h.distance)?;
    }
    if let Some(out) = out {
        write_jsonl(&out.join("retrieve.jsonl"), &records)?;
        let cfg = json!({ "pair": args.pair, "frame": args.frame, "k": args.k });
        RunRecord::new("retrieve", state.config.seed, cfg).write(&out.join(RUN_RECORD_FILE))?;
    }
    Ok(())
}

/// Checkpoint metadata: configs, layout, optimizer position and split sizes.
pub fn inspect_dump(state: &TrainState) -> serde_json::Value {
    let groups: Vec<serde_json::Value> = state
        .model
        .layout()
        .groups()
        .iter()
        .map(|g| json!({ "name": g.name, "offset": g.offset, "len": g.len }))
        .collect();
    json!({
        "format": { "magic": "AOCK", "version": crate::io::CHECKPOINT_VERSION },
        "train_config": state.config,
        "model_config": state.model.config,
        "parameter_count": state.model.param_count(),
        "parameter_groups": groups,
        "selector_scales": state.model.scales(),
        "optimizer": {
            "epoch": state.optimizer.epoch,
            "steps": state.optimizer.steps,
            "learning_rate": state.optimizer.learning_rate,
            "momentum": state.optimizer.momentum,
        },
        "running_loss": { "loss": state.running.loss, "count": state.running.count, "k": state.running.k },
        "accumulators": { "videos": state.accumulators.videos.len(), "k": state.accumulators.k },
        "split": { "train": state.split.train.len(), "test": state.split.test.len() },
        "history": state.history,
    })
}
