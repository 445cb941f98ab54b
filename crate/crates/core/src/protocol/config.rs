use serde::{Deserialize, Serialize};

use crate::field::FieldParams;
use crate::lcc::DecodeMode;
use crate::quantize::CLIP_EPSILON;
use crate::robust::{RlrMode, RobustAlg, RFA_MIN_NORM};

/// Who generates the Beaver triples used by the identity tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeaverSource {
    /// Trusted dealer, one triple per prover and iteration.
    #[default]
    Dealer,
    /// Each prover deals its own triple inside its share bundles.
    #[serde(rename = "self")]
    SelfDealt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolConfig {
    pub n: usize,
    pub d: usize,
    /// Defaults to `ceil(0.3 N)`.
    #[serde(default)]
    pub t: Option<usize>,
    /// Defaults to `floor(0.7 N) - 1`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub field: FieldParams,
    #[serde(default)]
    pub robust_alg: RobustAlg,
    #[serde(default)]
    pub rlr_mode: RlrMode,
    /// Reconstruction of the aggregate shares.
    #[serde(default)]
    pub decode_mode: DecodeMode,
    #[serde(default)]
    pub beaver: BeaverSource,
    /// Bit-decomposition range check on the RFA residuals.
    #[serde(default)]
    pub range_check: bool,
    /// Largest update norm the RFA tolerance and range check account for;
    /// defaults to `sqrt(d)`.
    #[serde(default)]
    pub rfa_norm_bound: Option<f64>,
    /// Overrides the RFA residual tolerance.
    #[serde(default)]
    pub rfa_tau: Option<f64>,
    #[serde(default = "default_min_norm")]
    pub rfa_min_norm: f64,
    /// Round-2 executions allowed per iteration; defaults to `T + 2`.
    #[serde(default)]
    pub max_passes: Option<usize>,
    #[serde(default = "default_clip")]
    pub clip_epsilon: f64,
}

fn default_min_norm() -> f64 {
    RFA_MIN_NORM
}

fn default_clip() -> f64 {
    CLIP_EPSILON
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid protocol config: {0}")]
pub struct ConfigError(pub String);

impl ProtocolConfig {
    pub fn new(n: usize, d: usize) -> Self {
        Self {
            n,
            d,
            t: None,
            k: None,
            field: FieldParams::default(),
            robust_alg: RobustAlg::default(),
            rlr_mode: RlrMode::default(),
            decode_mode: DecodeMode::default(),
            beaver: BeaverSource::default(),
            range_check: false,
            rfa_norm_bound: None,
            rfa_tau: None,
            rfa_min_norm: RFA_MIN_NORM,
            max_passes: None,
            clip_epsilon: CLIP_EPSILON,
        }
    }

    pub fn with_threshold(mut self, k: usize, t: usize) -> Self {
        self.k = Some(k);
        self.t = Some(t);
        self
    }

    pub fn with_alg(mut self, alg: RobustAlg) -> Self {
        self.robust_alg = alg;
        self
    }

    pub fn t(&self) -> usize {
        self.t.unwrap_or((3 * self.n).div_ceil(10))
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(((7 * self.n) / 10).saturating_sub(1))
    }

    /// Packing width actually used for sharing. RFA needs cross-slot sums,
    /// so it always shares with one slot.
    pub fn k_eff(&self) -> usize {
        match self.robust_alg {
            RobustAlg::Rlr => self.k(),
            RobustAlg::Rfa => 1,
        }
    }

    pub fn norm_bound(&self) -> f64 {
        self.rfa_norm_bound.unwrap_or((self.d as f64).sqrt())
    }

    /// `4 N (B + 2) / p`
    pub fn tau(&self, n: usize) -> f64 {
        self.rfa_tau
            .unwrap_or(4.0 * n as f64 * (self.norm_bound() + 2.0) / self.field.p as f64)
    }

    pub fn max_passes(&self) -> usize {
        self.max_passes.unwrap_or(self.t() + 2)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.n < 2 {
            return err(format!("N = {} must be at least 2", self.n));
        }
        if self.d == 0 {
            return err("d must be at least 1".into());
        }
        let (k, t) = (self.k_eff(), self.t());
        if k == 0 {
            return err("K must be at least 1".into());
        }
        if k + t >= self.n {
            return err(format!("K + T = {} must be below N = {}", k + t, self.n));
        }
        if self.robust_alg == RobustAlg::Rlr && self.k() == 0 {
            return err("K must be at least 1".into());
        }
        self.field.validate(self.n).map_err(|e| ConfigError(e.to_string()))?;
        if (2 * self.n + k + t) as u64 >= self.field.q {
            return err("field too small for the evaluation points".into());
        }
        if !(self.clip_epsilon > 0.0 && self.clip_epsilon < 1.0) {
            return err("clip_epsilon must lie in (0, 1)".into());
        }
        if self.norm_bound().partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return err("rfa_norm_bound must be positive".into());
        }
        if self.max_passes() == 0 {
            return err("max_passes must be at least 1".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_thresholds() {
        let c = ProtocolConfig::new(10, 8);
        assert_eq!((c.t(), c.k()), (3, 6));
        assert_eq!(c.max_passes(), 5);
        c.validate().unwrap();
        let c = ProtocolConfig::new(6, 8);
        assert_eq!((c.t(), c.k()), (2, 3));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_threshold() {
        assert!(ProtocolConfig::new(6, 4).with_threshold(3, 3).validate().is_err());
        assert!(ProtocolConfig::new(6, 4).with_threshold(0, 1).validate().is_err());
        assert!(ProtocolConfig::new(6, 0).validate().is_err());
    }

    #[test]
    fn toml_uses_documented_names() {
        let c: ProtocolConfig = toml::from_str(
            "n = 6\nd = 4\nrobust_alg = \"rfa\"\nrlr_mode = \"paper\"\nbeaver = \"self\"\ndecode_mode = \"error_correcting\"\n",
        )
        .unwrap();
        assert_eq!(c.robust_alg, RobustAlg::Rfa);
        assert_eq!(c.rlr_mode, RlrMode::Paper);
        assert_eq!(c.beaver, BeaverSource::SelfDealt);
        assert_eq!(c.decode_mode, DecodeMode::ErrorCorrecting);
        assert!(toml::from_str::<ProtocolConfig>("n = 6\nd = 4\nbogus = 1\n").is_err());
    }
}
