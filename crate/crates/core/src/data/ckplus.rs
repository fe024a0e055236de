use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::dataset::{Dataset, Sample, Source};
use super::image::{resize_bilinear, CANONICAL_SIDE};
use super::label::EmotionLabel;
use super::pgm::read_pgm;
use crate::error::{Error, Result};

/// Loads pre-extracted CK+ frames from `<root>/<emotion>/*.pgm`.
///
/// Every image is resized to 48×48. Items are ordered lexicographically by
/// path. Plain files directly under `root` and non-`.pgm` files inside the
/// emotion directories are ignored.
pub fn load_ckplus_dir(root: &Path) -> Result<Dataset> {
    let mut files: Vec<(PathBuf, EmotionLabel)> = Vec::new();
    for entry in read_dir_sorted(root)? {
        if !entry.is_dir() {
            continue;
        }
        let name = entry
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let label: EmotionLabel = name.parse()?;
        for file in read_dir_sorted(&entry)? {
            let is_pgm = file
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
            if file.is_file() && is_pgm {
                files.push((file, label));
            }
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));

    let items = files
        .par_iter()
        .map(|(path, label)| {
            let img = read_pgm(path)?;
            let img = resize_bilinear(&img, CANONICAL_SIDE, CANONICAL_SIDE)?;
            Ok(Sample::new(img, *label))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(items, Source::Ckplus)
}

fn read_dir_sorted(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    paths.sort();
    Ok(paths)
}
