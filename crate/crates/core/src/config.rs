//! Engine configuration and its layering: built-in defaults, then config
//! files, then the `MVE_SEED` environment variable, then command-line flags.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::kmeans::{DEFAULT_ITERATIONS, DEFAULT_SAMPLE_FRACTION};
use crate::retrieval::{IndexParams, PruningConfig, Strategy};

pub const SEED_ENV: &str = "MVE_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EngineConfig {
    pub dim: usize,
    pub q_len: usize,
    pub k: usize,
    pub k_prime: usize,
    /// `None` means `max(1, floor(sqrt(num_embeddings)))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_list: Option<usize>,
    pub n_probe: usize,
    pub sample_fraction: f64,
    pub iterations: usize,
    pub seed: u64,
    pub strategy: Strategy,
    /// `None` means `q_len` (no pruning).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dim: 16,
            q_len: 32,
            k: 1000,
            k_prime: 1000,
            n_list: None,
            n_probe: 10,
            sample_fraction: DEFAULT_SAMPLE_FRACTION,
            iterations: DEFAULT_ITERATIONS,
            seed: 42,
            strategy: Strategy::Icf,
            p: None,
        }
    }
}

/// A partial configuration; unset fields leave lower layers untouched.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub dim: Option<usize>,
    pub q_len: Option<usize>,
    pub k: Option<usize>,
    pub k_prime: Option<usize>,
    pub n_list: Option<usize>,
    pub n_probe: Option<usize>,
    pub sample_fraction: Option<f64>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub strategy: Option<Strategy>,
    pub p: Option<usize>,
}

impl ConfigLayer {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    /// Layer for the value of `MVE_SEED`, if set.
    pub fn from_seed_env(value: Option<&str>) -> Result<Self> {
        match value {
            Some(v) => {
                let seed = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::config(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
                Ok(ConfigLayer {
                    seed: Some(seed),
                    ..ConfigLayer::default()
                })
            }
            None => Ok(ConfigLayer::default()),
        }
    }

    pub fn apply(&self, cfg: &mut EngineConfig) {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        set!(
            dim,
            q_len,
            k,
            k_prime,
            n_probe,
            sample_fraction,
            iterations,
            seed,
            strategy
        );
        if self.n_list.is_some() {
            cfg.n_list = self.n_list;
        }
        if self.p.is_some() {
            cfg.p = self.p;
        }
    }
}

impl EngineConfig {
    pub fn resolve<'a>(layers: impl IntoIterator<Item = &'a ConfigLayer>) -> Result<Self> {
        let mut cfg = EngineConfig::default();
        for layer in layers {
            layer.apply(&mut cfg);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::config(msg));
        if self.dim == 0 {
            return fail("dim must be >= 1".into());
        }
        if self.q_len < 2 {
            return fail(format!("q_len must be >= 2 (got {})", self.q_len));
        }
        if self.k == 0 {
            return fail("k must be >= 1".into());
        }
        if self.k_prime == 0 {
            return fail("k_prime must be >= 1".into());
        }
        if self.n_probe == 0 {
            return fail("n_probe must be >= 1".into());
        }
        if self.n_list == Some(0) {
            return fail("n_list must be >= 1".into());
        }
        if !(self.sample_fraction > 0.0 && self.sample_fraction <= 1.0) {
            return fail(format!(
                "sample_fraction must be in (0, 1] (got {})",
                self.sample_fraction
            ));
        }
        if self.iterations == 0 {
            return fail("iterations must be >= 1".into());
        }
        if let Some(p) = self.p {
            if p == 0 || p > self.q_len {
                return fail(format!(
                    "p must satisfy p >= 1 and p <= q_len = {} (got {p})",
                    self.q_len
                ));
            }
        }
        Ok(())
    }

    pub fn effective_p(&self) -> usize {
        self.p.unwrap_or(self.q_len)
    }

    pub fn pruning(&self) -> PruningConfig {
        PruningConfig {
            strategy: self.strategy,
            p: self.effective_p(),
            k_prime: self.k_prime,
            n_probe: self.n_probe,
        }
    }

    pub fn index_params(&self) -> IndexParams {
        IndexParams {
            sample_fraction: self.sample_fraction,
            n_list: self.n_list,
            iterations: self.iterations,
            seed: self.seed,
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: EngineConfig = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = EngineConfig::default();
        cfg.validate().unwrap();
        assert_eq!((cfg.q_len, cfg.k_prime, cfg.n_probe), (32, 1000, 10));
        assert_eq!(cfg.sample_fraction, 0.05);
        assert_eq!(cfg.effective_p(), 32);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = EngineConfig {
            n_list: Some(64),
            p: Some(3),
            strategy: Strategy::Idf,
            ..EngineConfig::default()
        };
        assert_eq!(EngineConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
        let plain = EngineConfig::default();
        assert_eq!(EngineConfig::from_toml(&plain.to_toml()).unwrap(), plain);
    }

    #[test]
    fn later_layers_win() {
        let file: ConfigLayer = toml::from_str("seed = 5\np = 4\nstrategy = \"first\"").unwrap();
        let flags = ConfigLayer {
            p: Some(2),
            ..ConfigLayer::default()
        };
        let cfg = EngineConfig::resolve([&file, &flags]).unwrap();
        assert_eq!((cfg.seed, cfg.p, cfg.strategy), (5, Some(2), Strategy::First));
    }

    #[test]
    fn rejects_invalid_values() {
        let bad = ConfigLayer {
            p: Some(0),
            ..ConfigLayer::default()
        };
        let err = EngineConfig::resolve([&bad]).unwrap_err().to_string();
        assert!(err.contains("p >= 1"), "{err}");
        assert!(toml::from_str::<ConfigLayer>("bogus = 1").is_err());
    }
}
