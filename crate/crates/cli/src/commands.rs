//! One function per subcommand. Each returns the per-file failures; fatal
//! problems come back as errors.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use posebench_core::hands::{SweepCounts, YAxis};
use posebench_core::occlusion::screen_occlusions;
use posebench_core::preprocess::{run_pipeline_with, PipelineOptions};
use posebench_core::report;
use posebench_core::scheme::{builtin_descriptor, Region};
use posebench_core::stability::stability_report;
use posebench_core::{KeypointScheme, PoseSequence, SchemeRegistry};
use rayon::prelude::*;

use crate::inputs::{read_sequence, resolve, InputFile};

pub type Failures = Vec<(String, String)>;

pub struct Ctx<'a> {
    pub registry: &'a SchemeRegistry,
    pub explicit: Option<&'a KeypointScheme>,
    pub fps: f32,
}

impl Ctx<'_> {
    fn load(&self, file: &InputFile) -> Result<(PoseSequence, &KeypointScheme)> {
        let seq = read_sequence(&file.path, self.explicit, self.fps)?;
        resolve(seq, self.registry, self.explicit)
            .with_context(|| format!("{}", file.path.display()))
    }
}

fn failure(file: &InputFile, err: anyhow::Error) -> (String, String) {
    (file.path.display().to_string(), format!("{err:#}"))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn info(ctx: &Ctx<'_>, files: &[InputFile]) -> Failures {
    let results: Vec<Result<String>> = files
        .par_iter()
        .map(|file| {
            let seq = read_sequence(&file.path, ctx.explicit, ctx.fps)?;
            let layout = match resolve(seq.clone(), ctx.registry, ctx.explicit) {
                Ok((_, scheme)) => format!("matches {}", scheme.id()),
                Err(e) => format!("{e:#}"),
            };
            let stats = seq.confidence_stats();
            let size = seq
                .image_size()
                .map_or("none".to_string(), |s| format!("{}x{}", s.width, s.height));
            Ok(format!(
                "{}\n  scheme: {}\n  layout: {layout}\n  frames: {}\n  keypoints: {}\n  dims: {}\n  fps: {}\n  image_size: {size}\n  confidence: min={} mean={} zero_fraction={}\n",
                file.path.display(),
                seq.scheme_id(),
                seq.frames(),
                seq.keypoints(),
                seq.dims(),
                report::fmt_sig6(f64::from(seq.fps())),
                report::fmt_sig6(stats.min),
                report::fmt_sig6(stats.mean),
                report::fmt_sig6(stats.zero_fraction),
            ))
        })
        .collect();
    let mut failures = Vec::new();
    for (file, r) in files.iter().zip(results) {
        match r {
            Ok(text) => print!("{text}"),
            Err(e) => failures.push(failure(file, e)),
        }
    }
    failures
}

/// All inputs form one corpus on a single scheme: the explicit one, or the
/// scheme of the first readable file.
pub fn stability(
    ctx: &Ctx<'_>,
    files: &[InputFile],
    regions: &[Region],
    out: &Path,
) -> Result<Failures> {
    let loaded: Vec<_> = files.par_iter().map(|f| ctx.load(f)).collect();
    let mut failures = Vec::new();
    let mut corpus = Vec::new();
    let mut corpus_scheme: Option<&KeypointScheme> = None;
    for (file, r) in files.iter().zip(loaded) {
        match r {
            Ok((seq, scheme)) => {
                let expected = *corpus_scheme.get_or_insert(scheme);
                if expected.id() != scheme.id() {
                    failures.push(failure(
                        file,
                        anyhow::anyhow!(
                            "scheme `{}` differs from corpus scheme `{}`",
                            scheme.id(),
                            expected.id()
                        ),
                    ));
                    continue;
                }
                corpus.push((file.sequence_id(), seq));
            }
            Err(e) => failures.push(failure(file, e)),
        }
    }
    let Some(scheme) = corpus_scheme else {
        return Ok(failures);
    };
    let rep = stability_report(&corpus, scheme, regions)?;
    write(
        &out.join("aggregates.csv"),
        &report::stability_aggregates_csv(&rep.aggregates),
    )?;
    write(
        &out.join("sequences.csv"),
        &report::stability_sequences_csv(&rep.sequences),
    )?;
    Ok(failures)
}

/// Frames are pooled per estimator directory before percentages are taken.
pub fn hands(
    ctx: &Ctx<'_>,
    files: &[InputFile],
    thresholds: &[f64],
    axis: YAxis,
    out: &Path,
) -> Result<Failures> {
    SweepCounts::empty(thresholds)?;
    let counted: Vec<Result<SweepCounts>> = files
        .par_iter()
        .map(|file| {
            let (seq, scheme) = ctx.load(file)?;
            SweepCounts::count(&seq, scheme, thresholds, axis)
                .with_context(|| format!("{}", file.path.display()))
        })
        .collect();
    let mut failures = Vec::new();
    let mut pooled: BTreeMap<&str, SweepCounts> = BTreeMap::new();
    for (file, r) in files.iter().zip(counted) {
        match r {
            Ok(c) => pooled
                .entry(file.estimator.as_str())
                .or_insert_with(|| SweepCounts::empty(thresholds).expect("validated"))
                .merge(&c),
            Err(e) => failures.push(failure(file, e)),
        }
    }
    let mut reports = Vec::new();
    for (estimator, counts) in pooled {
        match counts.report() {
            Ok(r) => reports.push((estimator.to_string(), r)),
            Err(e) => failures.push((format!("estimator {estimator}"), e.to_string())),
        }
    }
    write(&out.join("hands.csv"), &report::hands_csv(&reports))?;
    write(&out.join("hands.json"), &report::hands_json(&reports))?;
    Ok(failures)
}

/// Writes `<relative stem>.features.csv` and `<relative stem>.meta.json`
/// under `out`, mirroring the input layout.
pub fn preprocess(
    ctx: &Ctx<'_>,
    files: &[InputFile],
    options: PipelineOptions,
    out: &Path,
) -> Failures {
    let results: Vec<Result<()>> = files
        .par_iter()
        .map(|file| {
            let (seq, scheme) = ctx.load(file)?;
            let m = run_pipeline_with(&seq, scheme, options)
                .with_context(|| format!("{}", file.path.display()))?;
            let stem = out.join(file.relative.with_extension(""));
            let with = |suffix: &str| {
                let mut name = stem.clone().into_os_string();
                name.push(suffix);
                std::path::PathBuf::from(name)
            };
            write(&with(".features.csv"), &report::features_csv(&m))?;
            write(
                &with(".meta.json"),
                &report::features_metadata_json(&m, &seq),
            )
        })
        .collect();
    files
        .iter()
        .zip(results)
        .filter_map(|(file, r)| r.err().map(|e| failure(file, e)))
        .collect()
}

pub fn occlusion(ctx: &Ctx<'_>, files: &[InputFile], iou: f64, out: &Path) -> Result<Failures> {
    let screened: Vec<Result<_>> = files
        .par_iter()
        .map(|file| {
            let (seq, scheme) = ctx.load(file)?;
            screen_occlusions(&seq, scheme, iou).with_context(|| format!("{}", file.path.display()))
        })
        .collect();
    let mut failures = Vec::new();
    let mut rows = Vec::new();
    for (file, r) in files.iter().zip(screened) {
        match r {
            Ok(c) => rows.push((file.sequence_id(), c)),
            Err(e) => failures.push(failure(file, e)),
        }
    }
    write(&out.join("occlusion.csv"), &report::occlusion_csv(&rows))?;
    Ok(failures)
}

/// Prints the named descriptors, or the registered scheme ids and aliases
/// when none are named.
pub fn dump_scheme(registry: &SchemeRegistry, names: &[String]) -> Result<()> {
    if names.is_empty() {
        for s in registry.iter() {
            if s.aliases().is_empty() {
                println!("{}", s.id());
            } else {
                println!("{} ({})", s.id(), s.aliases().join(", "));
            }
        }
        return Ok(());
    }
    let builtin = SchemeRegistry::builtin();
    for name in names {
        let scheme = registry.get(name)?;
        match builtin_descriptor(scheme.id()) {
            Some(text) if builtin.get(scheme.id()) == Ok(scheme) => print!("{text}"),
            _ => print!("{}", scheme.to_descriptor()),
        }
    }
    Ok(())
}
