//! Loading corpora from directories and converting RGB sources.

use std::fs;
use std::path::{Path, PathBuf};

use itnn_core::frame::{Corpus, CorpusEntry};

use crate::error::{Error, Result};
use crate::pnm;

/// Netpbm files in `dir` (not recursive), sorted by name.
pub fn image_files(dir: &Path, extensions: &[&str]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(Error::io(dir))? {
        let path = entry.map_err(Error::io(dir))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && ext.is_some_and(|e| extensions.contains(&e.as_str())) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn image_id(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Every `.pgm` in `dir`, identified by file stem.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    let files = image_files(dir, &["pgm"])?;
    let entries = files
        .iter()
        .map(|p| {
            Ok(CorpusEntry {
                id: image_id(p),
                plane: pnm::load_pgm(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus::new(entries)?)
}

/// Converts every `.ppm`/`.pgm` in `input` to a PGM in `output`. Returns
/// the number of files written.
pub fn ingest(input: &Path, output: &Path) -> Result<usize> {
    let files = image_files(input, &["ppm", "pgm", "pnm"])?;
    fs::create_dir_all(output).map_err(Error::io(output))?;
    let mut seen = std::collections::BTreeSet::new();
    for path in &files {
        let id = image_id(path);
        if !seen.insert(id.clone()) {
            return Err(Error::format(path, "two input files share this stem"));
        }
        let plane = pnm::load_image(path)?;
        pnm::save_pgm(&output.join(format!("{id}.pgm")), &plane)?;
    }
    Ok(files.len())
}
