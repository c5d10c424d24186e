//! `svreid`: trajectory extraction and object re-identification for short videos.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svreid_core::Error;

#[derive(Parser, Debug)]
#[command(name = "svreid", version, about = "Trajectory extraction and object re-identification for short videos")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Flat `key = value` config file; unknown keys are rejected
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Single config override, repeatable (`--set tau=4`)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,

    /// Seed for synthetic data
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Videos processed in parallel
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    /// Also write detections, shots and attention maps
    #[arg(long, global = true)]
    dump_intermediates: bool,

    /// Detection fusion; `off` feeds the raw candidates (after NMS) to the tracker
    #[arg(long, global = true, value_enum)]
    fusion: Option<Switch>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Switch {
    On,
    Off,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic video (frames file) and its ground truth
    Simulate(commands::SimulateArgs),
    /// Fuse detections over a frames file
    Fuse(commands::FuseArgs),
    /// Track fused detections shot by shot
    Track(commands::TrackArgs),
    /// Link tracklets into trajectories and pick major objects
    Reid(commands::ReidArgs),
    /// Rank gallery videos against query videos
    Retrieve(commands::RetrieveArgs),
    /// CLEAR-MOT metrics of a tracks file against ground truth
    EvalMot(commands::EvalMotArgs),
    /// Detection mAP against ground truth
    EvalMap(commands::EvalMapArgs),
    /// Rank-k accuracy of labeled features
    EvalRank(commands::EvalRankArgs),
    /// Run every stage on one or more videos, or replay a manifest
    Pipeline(commands::PipelineArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) | Error::Contract(_) | Error::Io(_) => 2,
        Error::Format { .. } => 3,
        Error::Dimension(_) | Error::Degenerate(_) | Error::Numerical(_) => 4,
        Error::Stage { .. } => unreachable!("root() looks through stages"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match &cli.command {
        Command::Simulate(a) => commands::simulate(g, a),
        Command::Fuse(a) => commands::fuse(g, a),
        Command::Track(a) => commands::track(g, a),
        Command::Reid(a) => commands::reid(g, a),
        Command::Retrieve(a) => commands::retrieve(g, a),
        Command::EvalMot(a) => commands::eval_mot(g, a),
        Command::EvalMap(a) => commands::eval_map(g, a),
        Command::EvalRank(a) => commands::eval_rank(g, a),
        Command::Pipeline(a) => commands::pipeline(g, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("svreid: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
