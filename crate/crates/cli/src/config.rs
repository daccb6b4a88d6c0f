use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use convex_brackets::entropy::{eps_sweep, ExperimentConfig};
use convex_brackets::schedule::UMode;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsSweep {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SamplerSection {
    pub n_pieces: Option<usize>,
    pub slope_scale: Option<f64>,
    pub probes: Option<usize>,
    pub batches: Option<usize>,
    pub resamples: Option<usize>,
}

/// Contents of a run configuration file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub polytope: PathBuf,
    #[serde(rename = "B")]
    pub b: f64,
    pub p: f64,
    pub eps: EpsSweep,
    #[serde(default = "default_mode")]
    pub mode: UMode,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub sampler: SamplerSection,
}

fn default_mode() -> UMode {
    UMode::Empirical
}
fn default_seed() -> u64 {
    1
}
fn default_samples() -> usize {
    1000
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    /// Parses `path`; relative paths inside resolve against its directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.polytope.is_relative() {
            cfg.polytope = base.join(&cfg.polytope);
        }
        if cfg.out.is_relative() {
            cfg.out = base.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.polytope.exists() {
            bail!("polytope file {} does not exist", self.polytope.display());
        }
        if !(self.eps.min < self.eps.max) {
            bail!("eps.min must be below eps.max");
        }
        if self.eps.steps < 2 {
            bail!("eps.steps must be at least 2");
        }
        if !(self.b > 0.0) || !(self.p >= 1.0) {
            bail!("need B > 0 and p ≥ 1");
        }
        Ok(())
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let s = &self.sampler;
        Ok(ExperimentConfig {
            b: self.b,
            p: self.p,
            eps: eps_sweep(self.eps.min, self.eps.max, self.eps.steps)?,
            mode: self.mode,
            seed: self.seed,
            n_samples: self.samples,
            n_pieces: s.n_pieces.unwrap_or(d.n_pieces),
            slope_scale: s.slope_scale.unwrap_or(d.slope_scale),
            probes: s.probes.unwrap_or(d.probes),
            batches: s.batches.unwrap_or(d.batches),
            resamples: s.resamples.unwrap_or(d.resamples),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_resolves_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sq.json"), "{}").unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "polytope = \"sq.json\"\nB = 1.0\np = 2.0\nseed = 4\n[eps]\nmin = 0.0625\nmax = 0.25\nsteps = 3\n[sampler]\nn_pieces = 3\n",
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.polytope, dir.path().join("sq.json"));
        let e = cfg.experiment().unwrap();
        assert_eq!(e.eps, vec![0.25, 0.125, 0.0625]);
        assert_eq!((e.seed, e.n_pieces, e.n_samples), (4, 3, 1000));
    }

    #[test]
    fn rejects_bad_sweep() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("sq.json"), "{}").unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "polytope = \"sq.json\"\nB = 1.0\np = 2.0\n[eps]\nmin = 0.5\nmax = 0.25\nsteps = 3\n",
        )
        .unwrap();
        assert!(RunConfig::load(&path).unwrap().validate().is_err());
    }
}
