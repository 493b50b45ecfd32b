use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub const META_FILE: &str = "meta.json";

/// Output directory for one run. Files are written through a temporary in the
/// same directory and renamed into place.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    /// Creates `root` if needed. Without `force`, refuses when any of `names`
    /// or the metadata file already exists.
    pub fn prepare(root: &Path, names: &[&str], force: bool) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        if !force {
            for n in names.iter().chain([&META_FILE]) {
                let p = root.join(n);
                if p.exists() {
                    return Err(CliError::Exists(p));
                }
            }
        }
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.root).map_err(|e| CliError::io(&self.root, e))?;
        tmp.write_all(contents.as_bytes()).map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.persist(&path).map_err(|e| CliError::io(&path, e.error))?;
        if name != META_FILE {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).expect("output serialises");
        s.push('\n');
        self.write(name, &s)
    }
}

/// SHA-256 of the compact JSON form of `value`. Struct fields serialise in
/// declaration order, so equal inputs hash equally.
pub fn inputs_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("inputs serialise");
    hex::encode(Sha256::digest(&bytes))
}
