//! Input discovery, format detection and scheme resolution.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use posebench_core::{import_json, read_pose, KeypointScheme, PoseSequence, SchemeRegistry};
use walkdir::WalkDir;

/// One file to process.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InputFile {
    pub path: PathBuf,
    /// Path relative to the directory it was found under (the file name for
    /// explicitly listed files). Used as the sequence id.
    pub relative: PathBuf,
    /// First subdirectory under the input root, or the containing
    /// directory's name.
    pub estimator: String,
}

impl InputFile {
    pub fn sequence_id(&self) -> String {
        self.relative
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }
}

fn is_pose_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("spc") || e.eq_ignore_ascii_case("json"))
}

fn dir_name(path: &Path) -> String {
    let named = path.file_name().map(|n| n.to_string_lossy().into_owned());
    named
        .or_else(|| {
            fs::canonicalize(path)
                .ok()
                .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        })
        .unwrap_or_else(|| "default".to_string())
}

/// Expands files and directories (recursively) into `.spc` / `.json` inputs,
/// sorted by path with duplicates removed.
pub fn discover(inputs: &[PathBuf]) -> Result<Vec<InputFile>> {
    let mut files = Vec::new();
    for root in inputs {
        if root.is_dir() {
            for entry in WalkDir::new(root).sort_by_file_name() {
                let entry = entry.with_context(|| format!("walking {}", root.display()))?;
                if !entry.file_type().is_file() || !is_pose_file(entry.path()) {
                    continue;
                }
                let relative = entry.path().strip_prefix(root)?.to_path_buf();
                let mut parts = relative.components();
                let first = parts.next();
                let estimator = match (first, parts.next()) {
                    (Some(dir), Some(_)) => dir.as_os_str().to_string_lossy().into_owned(),
                    _ => dir_name(root),
                };
                files.push(InputFile {
                    path: entry.path().to_path_buf(),
                    relative,
                    estimator,
                });
            }
        } else if root.is_file() {
            let parent = root.parent().filter(|p| !p.as_os_str().is_empty());
            files.push(InputFile {
                path: root.clone(),
                relative: PathBuf::from(root.file_name().ok_or_else(|| anyhow!("bad path"))?),
                estimator: dir_name(parent.unwrap_or(Path::new("."))),
            });
        } else {
            bail!("no such input: {}", root.display());
        }
    }
    files.sort_by(|a, b| a.path.cmp(&b.path));
    files.dedup_by(|a, b| a.path == b.path);
    Ok(files)
}

fn looks_like_json(path: &Path, bytes: &[u8]) -> bool {
    if bytes.starts_with(b"SPC1") {
        return false;
    }
    let ext_json = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    ext_json || bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'[')
}

/// Reads a file as SPC1 or JSON interchange. JSON carries no header, so it
/// needs an explicit scheme.
pub fn read_sequence(
    path: &Path,
    explicit: Option<&KeypointScheme>,
    fps: f32,
) -> Result<PoseSequence> {
    let bytes = fs::read(path).with_context(|| format!("{}", path.display()))?;
    if looks_like_json(path, &bytes) {
        let scheme =
            explicit.ok_or_else(|| anyhow!("{}: JSON input needs --scheme", path.display()))?;
        let text = std::str::from_utf8(&bytes)
            .with_context(|| format!("{}: not UTF-8", path.display()))?;
        import_json(text, scheme, fps).with_context(|| format!("{}", path.display()))
    } else {
        read_pose(&bytes).with_context(|| format!("{}", path.display()))
    }
}

/// Picks the scheme for a loaded sequence and returns the sequence tagged
/// with that scheme's canonical id. An explicit scheme that is a view cut
/// from the stored scheme projects the sequence onto the view.
pub fn resolve<'r>(
    seq: PoseSequence,
    registry: &'r SchemeRegistry,
    explicit: Option<&'r KeypointScheme>,
) -> Result<(PoseSequence, &'r KeypointScheme)> {
    let stored = registry.get(seq.scheme_id()).ok();
    let scheme = match (explicit, stored) {
        (Some(want), Some(have)) if want.id() != have.id() => match want.projection() {
            Some(p) if registry.get(&p.parent).map(|s| s.id()) == Ok(have.id()) => {
                have.check_layout(seq.keypoints(), seq.dims())?;
                let view = seq.select_keypoints(want.id(), &p.indices)?;
                return Ok((view, want));
            }
            _ => bail!(
                "sequence is `{}`, which does not match --scheme `{}`",
                have.id(),
                want.id()
            ),
        },
        (Some(want), _) => want,
        (None, Some(have)) => have,
        (None, None) => bail!("unknown scheme `{}` in header", seq.scheme_id()),
    };
    scheme.check_layout(seq.keypoints(), seq.dims())?;
    if seq.scheme_id() == scheme.id() {
        return Ok((seq, scheme));
    }
    let all: Vec<usize> = (0..seq.keypoints()).collect();
    Ok((seq.select_keypoints(scheme.id(), &all)?, scheme))
}

/// Registers every `*.toml` descriptor in the given directories, replacing
/// any scheme with the same id. Derived descriptors may precede their
/// parent, so loading repeats until no further descriptor resolves.
pub fn load_scheme_dirs(registry: &mut SchemeRegistry, dirs: &[PathBuf]) -> Result<()> {
    let mut pending = Vec::new();
    for dir in dirs {
        let Ok(entries) = fs::read_dir(dir) else {
            continue;
        };
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "toml"))
            .collect();
        paths.sort();
        for p in paths {
            let text = fs::read_to_string(&p).with_context(|| format!("{}", p.display()))?;
            pending.push((p, text));
        }
    }
    while !pending.is_empty() {
        let before = pending.len();
        let mut failed = Vec::new();
        let mut last_err = None;
        for (p, text) in pending {
            match registry.parse(&text) {
                Ok(scheme) => {
                    registry
                        .replace(scheme)
                        .with_context(|| format!("{}", p.display()))?;
                }
                Err(e) => {
                    last_err = Some(anyhow!("{}: {e}", p.display()));
                    failed.push((p, text));
                }
            }
        }
        if failed.len() == before {
            return Err(last_err.expect("at least one failure"));
        }
        pending = failed;
    }
    Ok(())
}
