//! Run configuration: a flat TOML file overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chipnet::{RatePolicy, SeedShape, SigmaChoice};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Constant,
    Uniform,
}

/// Every knob of a run. Keys in the config file use these field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed_shape: SeedShape,
    pub policy: PolicyKind,
    /// Rate of the constant policy.
    pub p: f64,
    /// Lower end of the uniform policy.
    pub delta: f64,
    /// Upper end of the uniform policy.
    pub pmax: f64,
    /// Chipping depth; also the generation whose edge net is box counted.
    pub depth: usize,
    pub rng_seed: u64,
    pub sigma: SigmaChoice,
    /// Box sizes are `diameter · 2^-k` for each `k` listed.
    pub scales: Vec<i32>,
    pub pressure_depths: Vec<usize>,
    /// Bisection tolerance of the pressure root.
    pub tol: f64,
    pub out: PathBuf,
    /// Constant rates at which the spectral checks run.
    pub spectral_p: Vec<f64>,
    /// Word depth for the contraction and tetrahedron checks of `verify`.
    pub word_depth: usize,
    /// Word depth for the pairwise projection check of `verify`.
    pub disjoint_depth: usize,
    /// Word depth of the CSV written by `export`.
    pub export_word_depth: usize,
    /// Replaces the first generation-0 rate in `verify`, as a fault probe.
    pub inject_rate: Option<f64>,
    /// Run the pressure estimator on equal diagonal words with this factor.
    pub synthetic_c: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed_shape: SeedShape::Cube,
            policy: PolicyKind::Constant,
            p: 0.25,
            delta: 0.05,
            pmax: 0.4,
            depth: 4,
            rng_seed: 0,
            sigma: SigmaChoice::Sorted,
            scales: vec![3, 4, 5, 6, 7],
            pressure_depths: vec![6, 8, 10],
            tol: 1e-4,
            out: PathBuf::from("chipnet-out"),
            spectral_p: vec![0.2, 0.25, 0.4],
            word_depth: 5,
            disjoint_depth: 3,
            export_word_depth: 2,
            inject_rate: None,
            synthetic_c: None,
        }
    }
}

/// Deepest chipping or word depth accepted; `8 · 3^14` vertices is already
/// several gigabytes of geometry.
pub const MAX_DEPTH: usize = 14;

impl RunConfig {
    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn rate_policy(&self) -> chipnet::Result<RatePolicy> {
        match self.policy {
            PolicyKind::Constant => RatePolicy::constant(self.p),
            PolicyKind::Uniform => RatePolicy::uniform(self.delta, self.pmax),
        }
    }

    /// Checks every constraint the library would otherwise reject mid-run.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.rate_policy()?;
        if self.depth > MAX_DEPTH {
            bail!("depth {} exceeds the maximum {MAX_DEPTH}", self.depth);
        }
        if self.scales.len() < 3 {
            bail!("need at least 3 box-count scales, got {}", self.scales.len());
        }
        if self.scales.windows(2).any(|w| w[1] <= w[0]) || self.scales.iter().any(|&k| !(0..=20).contains(&k)) {
            bail!("scales must be strictly increasing exponents in 0..=20, got {:?}", self.scales);
        }
        if self.pressure_depths.is_empty() || self.pressure_depths.iter().any(|&d| d == 0 || d > MAX_DEPTH) {
            bail!("pressure depths must be non-empty and within 1..={MAX_DEPTH}, got {:?}", self.pressure_depths);
        }
        if !(self.tol > 0.0 && self.tol < 0.1) {
            bail!("tol must lie in (0, 0.1), got {}", self.tol);
        }
        if let Some(p) = self.spectral_p.iter().find(|&&p| !(p > 0.0 && p < 0.5)) {
            bail!("spectral rates must lie in (0, 1/2), got {p}");
        }
        for (name, d, cap) in [
            ("word_depth", self.word_depth, 8),
            ("disjoint_depth", self.disjoint_depth, 5),
            ("export_word_depth", self.export_word_depth, 8),
        ] {
            if d > cap {
                bail!("{name} {d} exceeds the maximum {cap}");
            }
        }
        if let Some(x) = self.inject_rate {
            if !(x > 0.0 && x < 1.0) {
                bail!("inject_rate must lie in (0, 1), got {x}");
            }
        }
        if let Some(c) = self.synthetic_c {
            // The closed-form root log 3 / log(1/c) must fall inside (0, 3).
            if !(c > 0.0 && c < 3f64.powf(-1.0 / 3.0)) {
                bail!("synthetic_c must lie in (0, 3^(-1/3)), got {c}");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form. The output directory is left out,
    /// so the same experiment hashes alike wherever it is written.
    pub fn hash(&self) -> String {
        let mut echo = serde_json::to_value(self).expect("config serialises");
        echo.as_object_mut().expect("object").remove("out");
        hex::encode(Sha256::digest(echo.to_string().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn flat_keys_parse() {
        let cfg: RunConfig = toml::from_str(
            "seed_shape = \"tetrahedron\"\npolicy = \"uniform\"\ndelta = 0.1\npmax = 0.3\nscales = [2, 3, 4]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed_shape, SeedShape::Tetrahedron);
        assert_eq!(cfg.rate_policy().unwrap(), RatePolicy::uniform(0.1, 0.3).unwrap());
        assert_eq!(cfg.depth, 4);
        assert!(toml::from_str::<RunConfig>("colour = 3\n").is_err());
    }

    #[test]
    fn bad_values_are_rejected() {
        let bad = [
            RunConfig { p: 0.5, ..Default::default() },
            RunConfig { scales: vec![3, 3, 4], ..Default::default() },
            RunConfig { pressure_depths: vec![], ..Default::default() },
            RunConfig { depth: 20, ..Default::default() },
            RunConfig { spectral_p: vec![0.6], ..Default::default() },
            RunConfig { synthetic_c: Some(0.9), ..Default::default() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let b = RunConfig { out: "elsewhere".into(), ..Default::default() };
        let c = RunConfig { rng_seed: 1, ..Default::default() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }
}
