use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::AdversarySpec;
use crate::protocol::ProtocolConfig;

/// Where the per-iteration updates come from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum UpdateSource {
    /// Benign updates around a hidden direction, poisoned per the adversary.
    #[default]
    Synthetic,
    /// JSON array of update sets, each `N` vectors of length `d`; cycled over
    /// iterations. Used as given: no poisoning is applied.
    File { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputNames {
    #[serde(default = "default_metrics")]
    pub metrics: String,
    #[serde(default = "default_timings")]
    pub timings: String,
    #[serde(default = "default_transcript")]
    pub transcript: String,
}

fn default_metrics() -> String {
    "metrics.jsonl".into()
}

fn default_timings() -> String {
    "timings.jsonl".into()
}

fn default_transcript() -> String {
    "transcript.bin".into()
}

impl Default for OutputNames {
    fn default() -> Self {
        Self {
            metrics: default_metrics(),
            timings: default_timings(),
            transcript: default_transcript(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_iterations")]
    pub iterations: u64,
    /// Run the users of a round on the thread pool.
    #[serde(default = "default_parallel")]
    pub parallel: bool,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub adversary: AdversarySpec,
    #[serde(default)]
    pub updates: UpdateSource,
    #[serde(default)]
    pub output: OutputNames,
}

fn default_iterations() -> u64 {
    1
}

fn default_parallel() -> bool {
    true
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("io on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Protocol(#[from] crate::protocol::ProtocolError),
    #[error("rejected transcript: {0}")]
    RejectTranscript(String),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl ExperimentConfig {
    pub fn new(protocol: ProtocolConfig) -> Self {
        Self {
            seed: 0,
            iterations: 1,
            parallel: true,
            protocol,
            adversary: AdversarySpec::default(),
            updates: UpdateSource::default(),
            output: OutputNames::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.protocol
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        let n = self.protocol.n;
        let adv = &self.adversary;
        if let Some(bad) = adv.corrupted.iter().find(|&&i| i >= n) {
            return Err(HarnessError::Config(format!("corrupted user {bad} is not below N = {n}")));
        }
        let mut sorted = adv.corrupted.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != adv.corrupted.len() {
            return Err(HarnessError::Config("corrupted users listed twice".into()));
        }
        if self.iterations == 0 {
            return Err(HarnessError::Config("iterations must be at least 1".into()));
        }
        if u32::try_from(self.iterations).is_err() {
            return Err(HarnessError::Config("iterations must fit in 32 bits".into()));
        }
        Ok(())
    }

    /// Hex sha256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        hex_digest(self.to_toml().as_bytes())
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Hash of an adversary block, stamped into every metrics record.
pub fn adversary_hash(spec: &AdversarySpec) -> String {
    hex_digest(toml::to_string(spec).expect("spec serializes").as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"
seed = 9
iterations = 3

[protocol]
n = 10
d = 16
k = 4
t = 3
robust_alg = "rlr"
rlr_mode = "rlr-orig"

[adversary]
corrupted = [0, 1, 2]
value_attack = { kind = "scale", c = -10.0 }
protocol_attack = { kind = "drop", round = 2 }
"#;

    #[test]
    fn parses_and_roundtrips() {
        let cfg = ExperimentConfig::from_toml(EXAMPLE).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.adversary.corrupted, vec![0, 1, 2]);
        assert_eq!(cfg.updates, UpdateSource::Synthetic);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
    }

    #[test]
    fn rejects_invariant_violations() {
        let bad = EXAMPLE.replace("corrupted = [0, 1, 2]", "corrupted = [0, 10]");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = EXAMPLE.replace("k = 4", "k = 7");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = EXAMPLE.replace("iterations = 3", "iterations = 0");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
        let bad = format!("{EXAMPLE}\nunknown = 1\n");
        assert!(ExperimentConfig::from_toml(&bad).is_err());
    }
}
