//! The `bench` subcommand: the inlay-vs-upsample timing sweep.

use std::path::PathBuf;

use clap::Args;
use panoptic_core::roi::bench::{bench_kernels, default_grid, BenchConfig};
use panoptic_core::{Error, Result};

#[derive(Args)]
pub struct BenchArgs {
    /// Configurations as `objects,object_size,output_size` triples separated
    /// by semicolons, e.g. `50,28,300;100,128,300`. Defaults to the
    /// five-configuration sweep.
    #[arg(long, value_name = "O,S,OUT[;...]")]
    pub grid: Option<String>,

    /// Feature channels per object.
    #[arg(long, default_value_t = 64)]
    pub channels: usize,

    /// Timing repetitions per configuration; the median is reported.
    #[arg(long, default_value_t = 5)]
    pub reps: usize,

    /// Workload seed; identical seeds give identical workloads.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Optional path for the machine-readable JSON report.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

fn parse_grid(spec: &str) -> Result<Vec<BenchConfig>> {
    let bad = |reason: String| Error::MalformedFile {
        path: PathBuf::from("--grid"),
        reason,
    };
    spec.split(';')
        .filter(|part| !part.trim().is_empty())
        .map(|part| {
            let fields: Vec<usize> = part
                .split(',')
                .map(|f| f.trim().parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(format!("{part:?}: {e}")))?;
            match fields[..] {
                [objects, object_size, output_size] => Ok(BenchConfig {
                    objects,
                    object_size,
                    output_size,
                }),
                _ => Err(bad(format!(
                    "{part:?}: expected objects,object_size,output_size"
                ))),
            }
        })
        .collect()
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let grid = match &args.grid {
        Some(spec) => parse_grid(spec)?,
        None => default_grid(),
    };
    eprintln!(
        "timing {} configuration(s), {} channel(s), {} repetition(s)",
        grid.len(),
        args.channels,
        args.reps
    );
    let report = bench_kernels(&grid, args.channels, args.reps, args.seed)?;
    print!("{}", report.text_table());
    if let Some(out) = &args.out {
        if let Some(parent) = out.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut body = serde_json::to_string_pretty(&report)?;
        body.push('\n');
        std::fs::write(out, body)?;
        eprintln!("wrote {}", out.display());
    }
    Ok(())
}
