//! Image file plumbing: advisory locking and atomic replacement.

use std::ffi::OsString;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tempfile::NamedTempFile;

/// Holds `<image>.lock` for as long as it lives.
pub struct ImageLock {
    path: PathBuf,
}

impl ImageLock {
    pub fn acquire(image: &Path) -> Result<Self> {
        let mut name = OsString::from(image.as_os_str());
        name.push(".lock");
        let path = PathBuf::from(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                // best effort, only informative
                let _ = writeln!(f, "{}", std::process::id());
                Ok(ImageLock { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(anyhow::anyhow!(
                "{} is locked by another writer (remove {} if stale)",
                image.display(),
                path.display()
            )),
            Err(e) => Err(e).with_context(|| format!("creating {}", path.display())),
        }
    }
}

impl Drop for ImageLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

pub fn read_image(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes `text` next to `path` and renames it into place, so readers see
/// either the old image or the new one.
pub fn replace_image(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp =
        NamedTempFile::new_in(dir).with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error).with_context(|| format!("replacing {}", path.display()))?;
    Ok(())
}
