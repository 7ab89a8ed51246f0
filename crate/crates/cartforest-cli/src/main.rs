//! Batch CLI for training, evaluating, and applying CART trees and forests.
//!
//! Every command is a pure function of its resolved configuration, the input
//! files, and the seeds: re-running produces byte-identical artifacts, for
//! any `--workers` setting.
//!
//! Exit codes: 0 success, 2 bad arguments/usage, 3 parse error in a data
//! file, 4 schema/model mismatch, 5 degenerate data, 6 I/O failure.

mod commands;
mod util;

use cartforest::cart::SelectionRule;
use cartforest::ensemble::ForestParams;
use cartforest::error::Error;
use cartforest::scale::PartitionStrategy;
use cartforest::select::SelectionReps;
use clap::{Args, Parser, Subcommand};
use commands::SelectScope;
use std::path::PathBuf;
use std::process::ExitCode;
use util::Resolver;

#[derive(Parser)]
#[command(
    name = "cartforest",
    version,
    about = "CART trees and random forests: train, prune, evaluate, select variables"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Grow a maximal CART tree, prune it, and select a subtree by
    /// cross-validation
    Tree(TreeArgs),
    /// Train a bagging / random-input / extra-randomized forest
    Forest(ForestArgs),
    /// Replicated permutation variable importance
    Importance(ImportanceArgs),
    /// Two-step variable selection (threshold, interpretation, prediction)
    Select(SelectArgs),
    /// Partitioned map/reduce-style forest training over data blocks
    Partition(PartitionArgs),
    /// Bag-of-little-bootstraps forest training
    Blb(BlbArgs),
    /// Predict with a saved tree or forest model
    Predict(PredictArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Training data CSV (header row, '.' decimal separator)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Schema file: one `name:numeric|categorical` per line
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Target column name
    #[arg(long)]
    target: Option<String>,
    /// Separate test CSV (same schema)
    #[arg(long)]
    test: Option<PathBuf>,
    /// Split the data file instead: this many rows train, the rest test
    #[arg(long)]
    split_train: Option<usize>,
    /// Master seed; every random draw derives from it
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core); never affects results
    #[arg(long)]
    workers: Option<usize>,
    /// Optional `key = value` config file; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ForestOpts {
    /// Number of trees
    #[arg(long)]
    ntree: Option<usize>,
    /// Candidate variables per node (default: √p classification, p/3
    /// regression)
    #[arg(long)]
    mtry: Option<usize>,
    /// Do not split nodes smaller than this (default: 1 classification, 5
    /// regression)
    #[arg(long)]
    nodesize: Option<u64>,
    /// bootstrap | identity | subsample:<k> | blb:<m>
    #[arg(long)]
    resample: Option<String>,
    /// exhaustive | extra:<S>
    #[arg(long)]
    split_mode: Option<String>,
}

#[derive(Args)]
struct TreeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Cross-validation folds
    #[arg(long)]
    folds: Option<usize>,
    /// min | one-se
    #[arg(long)]
    rule: Option<String>,
    /// Do not split nodes with fewer rows than this
    #[arg(long)]
    min_node_size: Option<u64>,
    /// Children below this size are inadmissible
    #[arg(long)]
    min_child_size: Option<u64>,
    /// Surrogate splits kept per internal node
    #[arg(long)]
    max_surrogates: Option<usize>,
}

#[derive(Args)]
struct ForestArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    forest: ForestOpts,
}

#[derive(Args)]
struct ImportanceArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    forest: ForestOpts,
    /// Forest replications for the VI spread
    #[arg(long)]
    nrep: Option<usize>,
    /// Optional groups file: `name: var,var,...` per line
    #[arg(long)]
    groups: Option<PathBuf>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    forest: ForestOpts,
    /// Forest replications for the VI ranking
    #[arg(long)]
    nrep_ranking: Option<usize>,
    /// Forest replications per nested model
    #[arg(long)]
    nrep_models: Option<usize>,
    /// threshold | interpretation | full
    #[arg(long)]
    step: Option<String>,
}

#[derive(Args)]
struct PartitionArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    forest: ForestOpts,
    /// Number of data blocks
    #[arg(long)]
    blocks: Option<usize>,
    /// contiguous | random | stratified
    #[arg(long)]
    block_strategy: Option<String>,
}

#[derive(Args)]
struct BlbArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    forest: ForestOpts,
    /// Distinct rows per bootstrap (m << n)
    #[arg(long)]
    blb_m: Option<usize>,
    /// Number of BLB subsamples
    #[arg(long)]
    subsamples: Option<usize>,
}

#[derive(Args)]
struct PredictArgs {
    /// Saved model file
    #[arg(long)]
    model: Option<PathBuf>,
    /// Data CSV to predict (model feature columns matched by name)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

struct ResolvedCommon {
    data: util::LoadedData,
    seed: u64,
    out: PathBuf,
    workers: usize,
}

fn resolve_common(resolver: &mut Resolver, args: CommonArgs) -> Result<ResolvedCommon, Error> {
    let data: PathBuf = resolver.require_path("data", args.data)?;
    let schema: PathBuf = resolver.require_path("schema", args.schema)?;
    let target: String = resolver.require("target", args.target)?;
    let test: Option<PathBuf> = resolver.get_opt_path("test", args.test)?;
    let split_train: Option<usize> = resolver.get_opt("split-train", args.split_train)?;
    let seed: u64 = resolver.get("seed", args.seed, 1)?;
    let out: PathBuf = resolver.require_path("out", args.out)?;
    let workers: usize = resolver.get("workers", args.workers, 0)?;
    let loaded = util::load_data(&data, &schema, &target, test.as_deref(), split_train, seed)?;
    Ok(ResolvedCommon {
        data: loaded,
        seed,
        out,
        workers,
    })
}

fn resolve_forest_params(
    resolver: &mut Resolver,
    opts: ForestOpts,
    seed: u64,
) -> Result<ForestParams, Error> {
    let ntree = resolver.get("ntree", opts.ntree, 500)?;
    let mtry = resolver.get_opt("mtry", opts.mtry)?;
    let nodesize = resolver.get_opt("nodesize", opts.nodesize)?;
    let resample = resolver
        .get_opt("resample", opts.resample)?
        .map(|s| util::parse_resample(&s))
        .transpose()?;
    let split_mode = resolver
        .get("split-mode", opts.split_mode, "exhaustive".to_string())
        .and_then(|s| util::parse_split_mode(&s))?;
    Ok(ForestParams {
        ntree,
        mtry,
        nodesize,
        resample,
        split_mode,
        seed,
    })
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Tree(args) => {
            let mut resolver = Resolver::new(args.common.config.clone().as_deref())?;
            let common = resolve_common(&mut resolver, args.common)?;
            let folds = resolver.get("folds", args.folds, 10)?;
            if folds < 2 {
                return Err(Error::Argument(format!(
                    "need at least 2 folds, got {folds}"
                )));
            }
            let rule = match resolver
                .get("rule", args.rule, "one-se".to_string())?
                .as_str()
            {
                "min" => SelectionRule::Min,
                "one-se" => SelectionRule::OneSe,
                other => return Err(Error::Argument(format!("unknown rule '{other}'"))),
            };
            let cfg = commands::TreeConfig {
                folds,
                rule,
                min_node_size: resolver.get("min-node-size", args.min_node_size, 5)?,
                min_child_size: resolver.get("min-child-size", args.min_child_size, 1)?,
                max_surrogates: resolver.get("max-surrogates", args.max_surrogates, 5)?,
                seed: common.seed,
            };
            let resolved = resolver.finish("tree")?;
            let out = util::ensure_out_dir(&common.out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(common.workers, || {
                commands::cmd_tree(&common.data.train, common.data.test.as_ref(), &cfg, &out)
            })
        }
        Command::Forest(args) => {
            let mut resolver = Resolver::new(args.common.config.clone().as_deref())?;
            let common = resolve_common(&mut resolver, args.common)?;
            let params = resolve_forest_params(&mut resolver, args.forest, common.seed)?;
            let resolved = resolver.finish("forest")?;
            let out = util::ensure_out_dir(&common.out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(common.workers, || {
                commands::cmd_forest(&common.data.train, common.data.test.as_ref(), &params, &out)
            })
        }
        Command::Importance(args) => {
            let mut resolver = Resolver::new(args.common.config.clone().as_deref())?;
            let common = resolve_common(&mut resolver, args.common)?;
            let params = resolve_forest_params(&mut resolver, args.forest, common.seed)?;
            let nrep = resolver.get("nrep", args.nrep, 50)?;
            let groups: Option<PathBuf> = resolver.get_opt_path("groups", args.groups)?;
            let resolved = resolver.finish("importance")?;
            let out = util::ensure_out_dir(&common.out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(common.workers, || {
                commands::cmd_importance(
                    &common.data.train,
                    &params,
                    nrep,
                    groups.as_deref(),
                    common.seed,
                    &out,
                )
            })
        }
        Command::Select(args) => {
            let mut resolver = Resolver::new(args.common.config.clone().as_deref())?;
            let common = resolve_common(&mut resolver, args.common)?;
            let params = resolve_forest_params(&mut resolver, args.forest, common.seed)?;
            let reps = SelectionReps {
                ranking: resolver.get("nrep-ranking", args.nrep_ranking, 50)?,
                models: resolver.get("nrep-models", args.nrep_models, 25)?,
            };
            let scope = match resolver
                .get("step", args.step, "full".to_string())?
                .as_str()
            {
                "threshold" => SelectScope::ThresholdOnly,
                "interpretation" => SelectScope::ThroughInterpretation,
                "full" => SelectScope::Full,
                other => return Err(Error::Argument(format!("unknown step '{other}'"))),
            };
            let resolved = resolver.finish("select")?;
            let out = util::ensure_out_dir(&common.out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(common.workers, || {
                commands::cmd_select(
                    &common.data.train,
                    common.data.test.as_ref(),
                    &params,
                    reps,
                    scope,
                    common.seed,
                    &out,
                )
            })
        }
        Command::Partition(args) => {
            let mut resolver = Resolver::new(args.common.config.clone().as_deref())?;
            let common = resolve_common(&mut resolver, args.common)?;
            let params = resolve_forest_params(&mut resolver, args.forest, common.seed)?;
            let blocks = resolver.require("blocks", args.blocks)?;
            let strategy = match resolver
                .get("block-strategy", args.block_strategy, "random".to_string())?
                .as_str()
            {
                "contiguous" => PartitionStrategy::Contiguous,
                "random" => PartitionStrategy::Random,
                "stratified" => PartitionStrategy::StratifiedY,
                other => {
                    return Err(Error::Argument(format!(
                        "unknown block strategy '{other}'"
                    )))
                }
            };
            let resolved = resolver.finish("partition")?;
            let out = util::ensure_out_dir(&common.out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(common.workers, || {
                commands::cmd_partition(
                    &common.data.train,
                    common.data.test.as_ref(),
                    &params,
                    blocks,
                    strategy,
                    common.seed,
                    &out,
                )
            })
        }
        Command::Blb(args) => {
            let mut resolver = Resolver::new(args.common.config.clone().as_deref())?;
            let common = resolve_common(&mut resolver, args.common)?;
            let params = resolve_forest_params(&mut resolver, args.forest, common.seed)?;
            let m = resolver.require("blb-m", args.blb_m)?;
            let subsamples = resolver.get("subsamples", args.subsamples, 10)?;
            let resolved = resolver.finish("blb")?;
            let out = util::ensure_out_dir(&common.out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(common.workers, || {
                commands::cmd_blb(
                    &common.data.train,
                    common.data.test.as_ref(),
                    &params,
                    m,
                    subsamples,
                    &out,
                )
            })
        }
        Command::Predict(args) => {
            let mut resolver = Resolver::new(args.config.as_deref())?;
            let model: PathBuf = resolver.require_path("model", args.model)?;
            let data: PathBuf = resolver.require_path("data", args.data)?;
            let out: PathBuf = resolver.require_path("out", args.out)?;
            let workers: usize = resolver.get("workers", args.workers, 0)?;
            let resolved = resolver.finish("predict")?;
            let out = util::ensure_out_dir(&out)?;
            util::write_run_config(&out, &resolved)?;
            cartforest::with_workers(workers, || commands::cmd_predict(&model, &data, &out))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Argument(_) => 2,
        Error::Parse { .. } | Error::TargetMissing { .. } => 3,
        Error::Schema(_) | Error::Model(_) => 4,
        Error::Degenerate(_) => 5,
        Error::Io(_) => 6,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
