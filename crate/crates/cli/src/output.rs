//! Output directory bookkeeping. Every file written through [`Outputs`] is
//! listed with its digest in `manifest.json`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct Artifact {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub files: Vec<Artifact>,
    pub timings: Vec<Timing>,
}

pub struct Outputs {
    root: PathBuf,
    files: Vec<Artifact>,
    timings: Vec<Timing>,
    started: Instant,
}

impl Outputs {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(root).map_err(|e| io(root, e))?;
        Ok(Outputs {
            root: root.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
            started: Instant::now(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `content` to `rel` under the output root.
    pub fn write(&mut self, rel: &str, content: &str) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        std::fs::write(&path, content).map_err(|e| io(&path, e))?;
        self.files.retain(|a| a.path != rel);
        self.files.push(Artifact {
            path: rel.to_string(),
            bytes: content.len(),
            sha256: hex::encode(Sha256::digest(content.as_bytes())),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(polyreg::Error::from)?;
        text.push('\n');
        self.write(rel, &text)
    }

    /// Runs `f` and records its wall-clock time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.push(Timing {
            stage: stage.to_string(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn files(&self) -> &[Artifact] {
        &self.files
    }

    pub fn finish(mut self, command: &str, cfg: &ExperimentConfig) -> Result<RunManifest, CliError> {
        self.timings.push(Timing {
            stage: "total".into(),
            seconds: self.started.elapsed().as_secs_f64(),
        });
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            files: self.files,
            timings: self.timings,
        };
        let path = self.root.join(MANIFEST);
        let mut text = serde_json::to_string_pretty(&manifest).map_err(polyreg::Error::from)?;
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        Ok(manifest)
    }
}

fn io(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_every_write() {
        let dir = std::env::temp_dir().join(format!("polyreg-out-{}", std::process::id()));
        let mut out = Outputs::create(&dir).unwrap();
        out.write("a.csv", "x\n1\n").unwrap();
        out.write("sub/b.json", "{}").unwrap();
        out.write("a.csv", "x\n2\n").unwrap();
        let m = out.finish("test", &ExperimentConfig::default()).unwrap();
        let paths: Vec<&str> = m.files.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(paths, ["sub/b.json", "a.csv"]);
        assert_eq!(std::fs::read_to_string(dir.join("a.csv")).unwrap(), "x\n2\n");
        assert!(dir.join(MANIFEST).exists());
        std::fs::remove_dir_all(dir).unwrap();
    }
}
