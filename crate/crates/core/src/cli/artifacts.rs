//! Atomic artifact writes and the line-delimited run manifest.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.log";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Keeps file names portable.
pub fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(bytes).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub struct ArtifactWriter {
    out_dir: PathBuf,
    config_hash: String,
    input_sha: String,
}

impl ArtifactWriter {
    pub fn new(out_dir: &Path, config_hash: &str, input_sha: &str) -> Result<Self> {
        fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
        Ok(ArtifactWriter {
            out_dir: out_dir.to_path_buf(),
            config_hash: config_hash.to_string(),
            input_sha: input_sha.to_string(),
        })
    }

    pub fn config_hash(&self) -> &str {
        &self.config_hash
    }

    /// `<stem>-<config hash>.<ext>`
    pub fn file_name(&self, stem: &str, ext: &str) -> String {
        format!("{}-{}.{ext}", file_safe(stem), self.config_hash)
    }

    /// Promotes the artifact atomically, then appends its manifest record.
    pub fn write(&self, stage: &str, stem: &str, ext: &str, params: &str, bytes: &[u8]) -> Result<PathBuf> {
        let name = self.file_name(stem, ext);
        let path = self.out_dir.join(&name);
        write_atomic(&path, bytes)?;
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let params: String = params.chars().map(|c| if c.is_whitespace() { '_' } else { c }).collect();
        let line = format!(
            "stage={stage} artifact={name} artifact_sha256={} input_sha256={} config_sha256={} params={params} timestamp={timestamp}\n",
            sha256_hex(bytes),
            self.input_sha,
            self.config_hash
        );
        let manifest = self.out_dir.join(MANIFEST);
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&manifest)
            .map_err(|e| Error::io(&manifest, e))?;
        f.write_all(line.as_bytes()).map_err(|e| Error::io(&manifest, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}
