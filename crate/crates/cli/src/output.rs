//! Output directory: CSV tables with headers, JSON tagged with the config
//! hash, SVG figures.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use polychain::config::ExperimentConfig;

use crate::svg::Plot;

pub struct Output {
    dir: PathBuf,
    pub hash: String,
    written: Vec<PathBuf>,
}

/// SHA-256 of the canonical JSON form of the effective configuration. The
/// output directory is left out so reruns elsewhere hash the same.
pub fn config_hash(cfg: &ExperimentConfig) -> Result<String> {
    let json = serde_json::to_vec(&ExperimentConfig { out: String::new(), ..cfg.clone() })?;
    Ok(hex::encode(Sha256::digest(&json)))
}

impl Output {
    pub fn create(dir: &Path, cfg: &ExperimentConfig) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut out = Output { dir: dir.to_path_buf(), hash: config_hash(cfg)?, written: vec![] };
        let text = toml::to_string(cfg).context("serializing the effective config")?;
        out.write_text("config.toml", &text)?;
        Ok(out)
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.push(p.clone());
        p
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    pub fn csv<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `value` (a JSON object) with a `config_hash` field added.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let Some(obj) = v.as_object_mut() {
            obj.insert("config_hash".into(), self.hash.clone().into());
        }
        let text = serde_json::to_string_pretty(&v)?;
        self.write_text(name, &text)
    }

    pub fn svg(&mut self, name: &str, plot: &Plot) -> Result<()> {
        self.write_text(name, &plot.render())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }
}
