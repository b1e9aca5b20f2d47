//! Input discovery, frame pairing by stem, and atomic output.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

/// Multi-part suffixes first so `a.stx.csv` has stem `a`.
const SUFFIXES: &[&str] = &[
    ".stx.csv",
    ".contacts.csv",
    ".sxhm",
    ".bin",
    ".ppm",
    ".txt",
    ".toml",
    ".csv",
];

pub fn frame_stem(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    for s in SUFFIXES {
        if let Some(stem) = name.strip_suffix(s) {
            if !stem.is_empty() {
                return stem.to_string();
            }
        }
    }
    path.file_stem()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or(name)
}

/// Expands directories into their files ending in one of `suffixes`, keeps
/// plain files as given, and keys everything by frame stem.
pub fn collect_frames(inputs: &[PathBuf], suffixes: &[&str]) -> Result<BTreeMap<String, PathBuf>> {
    let mut frames = BTreeMap::new();
    for input in inputs {
        let meta = std::fs::metadata(input).with_context(|| format!("cannot read {}", input.display()))?;
        let files = if meta.is_dir() {
            let mut v = Vec::new();
            for entry in std::fs::read_dir(input).with_context(|| format!("listing {}", input.display()))? {
                let p = entry?.path();
                let name = p
                    .file_name()
                    .map(|n| n.to_string_lossy().into_owned())
                    .unwrap_or_default();
                if p.is_file() && suffixes.iter().any(|s| name.ends_with(s)) {
                    v.push(p);
                }
            }
            v
        } else {
            vec![input.clone()]
        };
        for f in files {
            let stem = frame_stem(&f);
            if let Some(prev) = frames.insert(stem.clone(), f.clone()) {
                bail!("frame {stem:?} given twice: {} and {}", prev.display(), f.display());
            }
        }
    }
    Ok(frames)
}

/// Pairs two frame sets; they must hold exactly the same stems.
pub fn pair_frames(
    gt: BTreeMap<String, PathBuf>,
    mut pred: BTreeMap<String, PathBuf>,
) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if let Some(stem) = gt.keys().find(|k| !pred.contains_key(*k)) {
        bail!("frame {stem:?} has ground truth but no prediction");
    }
    if let Some(stem) = pred.keys().find(|k| !gt.contains_key(*k)) {
        bail!("frame {stem:?} has a prediction but no ground truth");
    }
    Ok(gt
        .into_iter()
        .map(|(stem, g)| {
            let p = pred.remove(&stem).expect("key sets checked equal");
            (stem, g, p)
        })
        .collect())
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
