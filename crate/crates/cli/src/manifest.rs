use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub bytes: u64,
    pub sha256: String,
}

pub fn digest(path: &Path) -> std::io::Result<FileDigest> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut bytes = 0u64;
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        bytes += n as u64;
    }
    Ok(FileDigest { path: path.to_path_buf(), bytes, sha256: hex::encode(hasher.finalize()) })
}

/// Written next to a command's main output as `<output>.manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool_version: &'static str,
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<PathBuf>,
}

impl<'a> RunManifest<'a> {
    pub fn new(command: &'a str, config: &'a RunConfig) -> Self {
        RunManifest { tool_version: env!("CARGO_PKG_VERSION"), command, config, inputs: Vec::new(), outputs: Vec::new() }
    }

    pub fn input(&mut self, path: &Path) -> anyhow::Result<()> {
        self.inputs.push(digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Also digests every split file the config names.
    pub fn config_inputs(&mut self) -> anyhow::Result<()> {
        let paths: Vec<PathBuf> = [&self.config.tagset, &self.config.train_ids, &self.config.valid_ids, &self.config.test_ids]
            .into_iter()
            .flatten()
            .cloned()
            .collect();
        for p in paths {
            self.input(&p)?;
        }
        Ok(())
    }

    pub fn write_next_to(&self, output: &Path) -> anyhow::Result<PathBuf> {
        let path = sibling(output, "manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(path)
    }
}

/// `<path>.<suffix>`
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        std::fs::write(&p, b"abc").unwrap();
        let d = digest(&p).unwrap();
        assert_eq!(d.bytes, 3);
        assert_eq!(d.sha256, "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn sibling_appends() {
        assert_eq!(sibling(Path::new("out/m.ckpt"), "history.csv"), PathBuf::from("out/m.ckpt.history.csv"));
    }
}
