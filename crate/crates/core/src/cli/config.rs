//! Reproducible run configuration and artifact writing.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::bodies::{BodyDescriptor, BodySpec};
use crate::error::{Error, Result};
use crate::moments::EvaluatorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Bin,
}

/// Everything that determines a run's data. Thread count and output paths
/// are kept out of the hash since they do not change the payloads.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub body: BodyDescriptor,
    pub n: usize,
    pub seed: u64,
    pub samples: usize,
    pub c0: f64,
    #[serde(rename = "C0")]
    pub c_outer: f64,
    pub eps: f64,
    pub beta: f64,
    pub evaluator: EvaluatorKind,
    pub budget: Option<usize>,
    #[serde(skip)]
    pub threads: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub format: Option<Format>,
}

impl RunConfig {
    /// Hex SHA-256 of the canonical JSON of the hashed fields.
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    pub fn build_body(&self) -> Result<BodySpec> {
        self.body.build()
    }

    /// Header block embedded in every JSON artifact.
    pub fn stamp(&self) -> serde_json::Value {
        serde_json::json!({
            "config_hash": self.hash(),
            "seed": self.seed,
            "config": self,
        })
    }

    /// First line of every CSV artifact.
    pub fn csv_comment(&self) -> String {
        format!("# config_hash={} seed={}\n", self.hash(), self.seed)
    }
}

/// Resolves `--body`: a path to a JSON descriptor, or a kind name. `--n`
/// overrides the descriptor's dimension.
pub fn resolve_body(body: Option<&str>, n: Option<usize>) -> Result<BodyDescriptor> {
    let spec = body.unwrap_or("cube");
    let path = Path::new(spec);
    let mut d = if path.is_file() {
        BodyDescriptor::parse(&fs::read_to_string(path)?)?
    } else if spec.trim_start().starts_with('{') {
        BodyDescriptor::parse(spec)?
    } else {
        let n = n.ok_or_else(|| Error::invalid("--n is required when --body names a kind"))?;
        BodyDescriptor::new(spec, n)
    };
    if let Some(n) = n {
        d.n = n;
    }
    Ok(d)
}

/// Writes `name` under the output directory.
pub fn write_artifact(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    Ok(path)
}

/// `meta.json`: the parts of a run that legitimately vary between runs.
pub fn write_meta(dir: &Path, cfg: &RunConfig, command: &str) -> Result<()> {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let meta = serde_json::json!({
        "command": command,
        "config_hash": cfg.hash(),
        "seed": cfg.seed,
        "unix_time": secs,
        "threads": rayon::current_num_threads(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    write_artifact(
        dir,
        "meta.json",
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig {
            body: BodyDescriptor::new("cube", 4),
            n: 4,
            seed: 1,
            samples: 1000,
            c0: 0.25,
            c_outer: 4.0,
            eps: 0.05,
            beta: 0.9,
            evaluator: EvaluatorKind::Auto,
            budget: None,
            threads: None,
            out: None,
            format: None,
        }
    }

    #[test]
    fn hash_ignores_threads_and_paths() {
        let a = cfg();
        let mut b = cfg();
        b.threads = Some(8);
        b.out = Some(PathBuf::from("/tmp/x"));
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn body_resolution() {
        assert_eq!(
            resolve_body(Some("ball"), Some(3)).unwrap(),
            BodyDescriptor::new("ball", 3)
        );
        assert!(resolve_body(Some("ball"), None).is_err());
        let d = resolve_body(
            Some(r#"{"kind": "lp_ball", "n": 5, "params": {"p": 1}}"#),
            None,
        )
        .unwrap();
        assert_eq!(d.n, 5);
        assert!(resolve_body(Some("{not json"), None).is_err());
    }
}
