//! `panoptic` — command-line front end for the post-processing pipeline.
//!
//! Four subcommands: `fuse` runs occlusion resolution plus heuristic fusion
//! over a dataset, `evaluate` scores a prediction against ground truth,
//! `bench` times the restoration kernels, and `kernel-demo` renders the
//! visual crop/restore comparison for one image.
//!
//! Logs go to standard error; reports and per-image summaries go to
//! standard output; datasets go to files. Every subcommand is deterministic
//! given its inputs, flags, and seed — `--jobs` changes wall time only.
//!
//! Exit codes: 0 success, 1 bad input or usage, 2 internal invariant
//! violation (a bug in the pipeline, never the user's fault).

mod bench;
mod demo;
mod evaluate;
mod fuse;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "panoptic", version, about = "Panoptic segmentation post-processing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Resolve occlusions and fuse instance + semantic predictions into
    /// panoptic maps.
    Fuse(fuse::FuseArgs),
    /// Match predicted against ground-truth segments and report PQ/SQ/RQ.
    Evaluate(evaluate::EvaluateArgs),
    /// Time patch restoration by interpolation vs by scatter.
    Bench(bench::BenchArgs),
    /// Crop a box from an image and restore it with all three kernels.
    KernelDemo(demo::DemoArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests arrive here too; only real usage
            // errors exit nonzero.
            let code = i32::from(err.use_stderr());
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Fuse(args) => fuse::run(&args),
        Command::Evaluate(args) => evaluate::run(&args),
        Command::Bench(args) => bench::run(&args),
        Command::KernelDemo(args) => demo::run(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(if err.is_internal() { 2 } else { 1 });
    }
}
