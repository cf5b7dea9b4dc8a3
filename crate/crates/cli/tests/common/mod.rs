#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use posebench_core::container::write_pose;
use posebench_core::{synth, SchemeRegistry};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn posebench() -> Command {
    Command::new(env!("CARGO_BIN_EXE_posebench"))
}

pub fn run(args: &[&str]) -> Output {
    posebench()
        .args(args)
        .env_remove("POSEBENCH_SCHEME_DIR")
        .output()
        .expect("binary runs")
}

#[derive(Clone, Copy)]
pub enum Dropout {
    None,
    Binary(f64),
    Partial,
}

/// Writes `n` jittered SPC1 sequences for one estimator directory and
/// returns their paths.
pub fn write_estimator(
    root: &Path,
    estimator: &str,
    scheme_id: &str,
    n: usize,
    dropout: Dropout,
    seed: u64,
) -> Vec<PathBuf> {
    let reg = SchemeRegistry::builtin();
    let scheme = reg.get(scheme_id).unwrap();
    let dir = root.join(estimator);
    fs::create_dir_all(&dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let seq = synth::jittered_sequence(scheme, 12 + i % 5, 3.0, &mut rng);
            let seq = match dropout {
                Dropout::None => seq,
                Dropout::Binary(p) => synth::binary_dropout(&seq, scheme, p, &mut rng),
                Dropout::Partial => synth::partial_dropout(&seq, scheme, &mut rng),
            };
            let path = dir.join(format!("clip_{i:02}.spc"));
            fs::write(&path, write_pose(&seq)).unwrap();
            path
        })
        .collect()
}

/// Twenty COCO-WholeBody clips split over two estimator directories.
pub fn twenty_file_corpus(root: &Path) {
    write_estimator(root, "mmpose", "coco_wholebody", 10, Dropout::Partial, 1);
    write_estimator(
        root,
        "sdpose",
        "coco_wholebody",
        10,
        Dropout::Binary(0.3),
        2,
    );
}

pub fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}
