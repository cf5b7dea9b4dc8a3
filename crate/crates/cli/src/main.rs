use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use posebench_core::hands::{default_thresholds, YAxis};
use posebench_core::occlusion::DEFAULT_IOU_THRESHOLD;
use posebench_core::preprocess::PipelineOptions;
use posebench_core::scheme::Region;
use posebench_core::SchemeRegistry;

mod commands;
mod inputs;

const SCHEME_DIR_ENV: &str = "POSEBENCH_SCHEME_DIR";

#[derive(Parser)]
#[command(
    name = "posebench",
    version,
    about = "Pose-quality diagnostics for keypoint sequences"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print header and confidence summary of each input.
    Info(Common),
    /// Temporal stability metrics; writes aggregates.csv and sequences.csv.
    Stability {
        #[command(flatten)]
        common: Common,
        /// Regions to evaluate.
        #[arg(long, value_delimiter = ',', default_value = "all,hands,face")]
        regions: Vec<Region>,
    },
    /// Missing-hand threshold sweep per estimator; writes hands.csv and hands.json.
    Hands {
        #[command(flatten)]
        common: Common,
        /// `START..END:STEP` or a comma-separated list.
        #[arg(long, value_parser = parse_thresholds)]
        thresholds: Option<Thresholds>,
        /// Treat larger y as higher in the image.
        #[arg(long)]
        y_up: bool,
    },
    /// Leg removal, normalization, masking and flattening per file.
    Preprocess {
        #[command(flatten)]
        common: Common,
        /// Keep leg and foot keypoints.
        #[arg(long)]
        keep_legs: bool,
    },
    /// Hand/hand and hand/face box overlaps; writes occlusion.csv.
    Occlusion {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        iou: f64,
    },
    /// Print a scheme descriptor, or list the known schemes.
    DumpScheme {
        #[command(flatten)]
        schemes: SchemeArgs,
        names: Vec<String>,
    },
}

#[derive(Args)]
struct SchemeArgs {
    /// Scheme id or alias.
    #[arg(long, conflicts_with = "scheme_file")]
    scheme: Option<String>,
    /// Descriptor file to register and use.
    #[arg(long)]
    scheme_file: Option<PathBuf>,
}

#[derive(Args)]
struct Common {
    #[command(flatten)]
    schemes: SchemeArgs,
    /// Frame rate assigned to JSON inputs.
    #[arg(long, default_value_t = 25.0)]
    fps: f32,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Files or directories (searched recursively for .spc and .json).
    inputs: Vec<PathBuf>,
}

#[derive(Clone, Debug)]
struct Thresholds(Vec<f64>);

/// Rounds away the drift of repeated decimal steps so `0.1..1.0:0.1` gives
/// exactly the same values as typing them out.
fn tidy(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

fn parse_thresholds(s: &str) -> Result<Thresholds, String> {
    let values = if let Some((range, step)) = s.split_once(':') {
        let (start, end) = range
            .split_once("..")
            .ok_or_else(|| format!("expected START..END:STEP, got `{s}`"))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if step.is_nan() || step <= 0.0 || end < start {
            return Err(format!("empty threshold range `{s}`"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n).map(|i| tidy(start + i as f64 * step)).collect()
    } else {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
            .collect::<Result<Vec<_>, _>>()?
    };
    Ok(Thresholds(values))
}

fn registry(args: &SchemeArgs) -> Result<(SchemeRegistry, Option<String>)> {
    let mut reg = SchemeRegistry::builtin();
    if let Some(dirs) = std::env::var_os(SCHEME_DIR_ENV) {
        let dirs: Vec<PathBuf> = std::env::split_paths(&dirs).collect();
        inputs::load_scheme_dirs(&mut reg, &dirs)?;
    }
    let chosen = if let Some(path) = &args.scheme_file {
        Some(reg.load_file(path)?.id().to_string())
    } else {
        args.scheme.clone()
    };
    if let Some(name) = &chosen {
        reg.get(name)?;
    }
    Ok((reg, chosen))
}

enum Outcome {
    Done(commands::Failures),
    NoInputs,
}

fn run(cli: Cli) -> Result<Outcome> {
    let (common, schemes) = match &cli.command {
        Command::DumpScheme { schemes, names } => {
            let (reg, _) = registry(schemes)?;
            commands::dump_scheme(&reg, names)?;
            return Ok(Outcome::Done(Vec::new()));
        }
        Command::Info(c)
        | Command::Stability { common: c, .. }
        | Command::Hands { common: c, .. }
        | Command::Preprocess { common: c, .. }
        | Command::Occlusion { common: c, .. } => (c, &c.schemes),
    };
    let (reg, chosen) = registry(schemes)?;
    let explicit = chosen.as_deref().map(|n| reg.get(n)).transpose()?;
    let files = inputs::discover(&common.inputs)?;
    if files.is_empty() {
        return Ok(Outcome::NoInputs);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(common.jobs)
        .build()
        .context("starting worker pool")?;
    let ctx = commands::Ctx {
        registry: &reg,
        explicit,
        fps: common.fps,
    };
    let out = &common.out;
    let failures = pool.install(|| -> Result<_> {
        Ok(match &cli.command {
            Command::Info(_) => commands::info(&ctx, &files),
            Command::Stability { regions, .. } => {
                if regions.is_empty() {
                    bail!("no regions given");
                }
                commands::stability(&ctx, &files, regions, out)?
            }
            Command::Hands {
                thresholds, y_up, ..
            } => {
                let t = thresholds.clone().map_or_else(default_thresholds, |t| t.0);
                let axis = if *y_up { YAxis::Up } else { YAxis::Down };
                commands::hands(&ctx, &files, &t, axis, out)?
            }
            Command::Preprocess { keep_legs, .. } => commands::preprocess(
                &ctx,
                &files,
                PipelineOptions {
                    drop_legs: !keep_legs,
                },
                out,
            ),
            Command::Occlusion { iou, .. } => commands::occlusion(&ctx, &files, *iou, out)?,
            Command::DumpScheme { .. } => unreachable!("handled above"),
        })
    })?;
    Ok(Outcome::Done(failures))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Done(failures)) if failures.is_empty() => ExitCode::SUCCESS,
        Ok(Outcome::Done(failures)) => {
            eprintln!("failures:");
            for (path, msg) in &failures {
                eprintln!("  {path}: {msg}");
            }
            ExitCode::from(1)
        }
        Ok(Outcome::NoInputs) => {
            eprintln!("error: no inputs");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_range_matches_defaults() {
        assert_eq!(
            parse_thresholds("0.1..1.0:0.1").unwrap().0,
            default_thresholds()
        );
        assert_eq!(parse_thresholds("0.5, 0.25").unwrap().0, vec![0.5, 0.25]);
        assert!(parse_thresholds("1..0:0.1").is_err());
        assert!(parse_thresholds("0..1:0").is_err());
    }

    #[test]
    fn grammar() {
        Cli::try_parse_from(["posebench", "stability", "--regions", "all,hands", "x"]).unwrap();
        Cli::try_parse_from(["posebench", "hands", "--y-up", "--thresholds", "0.5", "x"]).unwrap();
        assert!(Cli::try_parse_from(["posebench", "stability", "--regions", "arms", "x"]).is_err());
        assert!(Cli::try_parse_from([
            "posebench",
            "info",
            "--scheme",
            "a",
            "--scheme-file",
            "b",
            "x"
        ])
        .is_err());
    }
}
