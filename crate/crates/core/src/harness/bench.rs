//! Overhead scaling over a grid of honest runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{io_err, HarnessError};
use crate::adversary::{synthetic_updates, AdversarySpec};
use crate::protocol::{run_iteration, Envelope, ProtocolConfig, RunOptions, Setup, SERVER};
use crate::rng::stream;
use crate::robust::RobustAlg;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchGrid {
    pub dims: Vec<usize>,
    pub ns: Vec<usize>,
    /// Privacy thresholds; empty means the default for each `N`.
    #[serde(default)]
    pub ts: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_alg")]
    pub alg: RobustAlg,
}

fn default_repeats() -> usize {
    3
}

fn default_alg() -> RobustAlg {
    RobustAlg::Rlr
}

impl BenchGrid {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let g: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        if g.dims.is_empty() || g.ns.is_empty() || g.repeats == 0 {
            return Err(HarnessError::Config("bench grid needs dims, ns and repeats >= 1".into()));
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    fn configs(&self) -> Result<Vec<ProtocolConfig>, HarnessError> {
        let mut out = Vec::new();
        for &n in &self.ns {
            let ts: Vec<Option<usize>> = if self.ts.is_empty() {
                vec![None]
            } else {
                self.ts.iter().copied().map(Some).collect()
            };
            for t in ts {
                for &d in &self.dims {
                    let mut cfg = ProtocolConfig::new(n, d).with_alg(self.alg);
                    cfg.t = t;
                    cfg.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
                    out.push(cfg);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub d: usize,
    /// Fastest mean per-user time over the repeats, in seconds.
    pub user_round1_s: f64,
    pub user_round2_s: f64,
    pub server_s: f64,
    /// Mean bytes sent per user.
    pub user_round1_bytes: f64,
    pub user_round2_bytes: f64,
    pub server_bytes: u64,
    /// Messages the server sends, indexed by round.
    pub server_messages: [usize; 4],
}

/// Growth when `d` doubles at fixed `N` and `T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRatio {
    pub n: usize,
    pub t: usize,
    pub d_from: usize,
    pub d_to: usize,
    pub user_round1_time: f64,
    pub user_bytes: f64,
    /// Predicted user compute growth `N^2 d/K + (N d/K) log N`.
    pub predicted_time: f64,
    /// Predicted user communication growth `N d/K`.
    pub predicted_bytes: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub ratios: Vec<BenchRatio>,
}

fn server_messages(envs: &[Envelope]) -> [usize; 4] {
    let mut out = [0; 4];
    for e in envs.iter().filter(|e| e.sender == SERVER) {
        out[e.kind.round() as usize] += 1;
    }
    out
}

fn measure(cfg: &ProtocolConfig, grid: &BenchGrid, index: u64) -> Result<BenchRow, HarnessError> {
    let setup = Setup::generate(cfg, grid.seed)?;
    let (n, d) = (cfg.n, cfg.d);
    let updates = synthetic_updates(n, d, &mut stream(grid.seed, "updates", index, 0)).1;
    let mut row = BenchRow {
        n,
        t: cfg.t(),
        k: cfg.k(),
        d,
        user_round1_s: f64::INFINITY,
        user_round2_s: f64::INFINITY,
        server_s: f64::INFINITY,
        user_round1_bytes: 0.0,
        user_round2_bytes: 0.0,
        server_bytes: 0,
        server_messages: [0; 4],
    };
    for rep in 0..grid.repeats {
        let mut envs = Vec::new();
        let out = run_iteration(
            &setup,
            grid.seed,
            rep as u64,
            &updates,
            &AdversarySpec::honest(),
            RunOptions { parallel: false },
            &mut envs,
        )?;
        row.user_round1_s = row.user_round1_s.min(out.timings.user_round1);
        row.user_round2_s = row.user_round2_s.min(out.timings.user_round2);
        row.server_s = row.server_s.min(out.timings.server);
        let b = &out.report.bytes;
        row.user_round1_bytes = b.user_round1.iter().sum::<u64>() as f64 / n as f64;
        row.user_round2_bytes = b.user_round2.iter().sum::<u64>() as f64 / n as f64;
        row.server_bytes = b.server;
        row.server_messages = server_messages(&envs);
    }
    Ok(row)
}

fn predicted(n: usize, k: usize, d: usize) -> (f64, f64) {
    let (n, k, d) = (n as f64, k as f64, d as f64);
    (n * n * d / k + n * d / k * n.log2(), n * d / k)
}

/// Runs the grid sequentially; each cell is an honest iteration repeated
/// `repeats` times.
pub fn bench_scaling(grid: &BenchGrid) -> Result<BenchReport, HarnessError> {
    let mut rows = Vec::new();
    for (idx, cfg) in grid.configs()?.iter().enumerate() {
        rows.push(measure(cfg, grid, idx as u64)?);
    }
    let mut ratios = Vec::new();
    for a in &rows {
        for b in &rows {
            if a.n == b.n && a.t == b.t && b.d == 2 * a.d {
                let (ta, ba) = predicted(a.n, a.k, a.d);
                let (tb, bb) = predicted(b.n, b.k, b.d);
                ratios.push(BenchRatio {
                    n: a.n,
                    t: a.t,
                    d_from: a.d,
                    d_to: b.d,
                    user_round1_time: b.user_round1_s / a.user_round1_s,
                    user_bytes: (b.user_round1_bytes + b.user_round2_bytes) / (a.user_round1_bytes + a.user_round2_bytes),
                    predicted_time: tb / ta,
                    predicted_bytes: bb / ba,
                });
            }
        }
    }
    Ok(BenchReport { rows, ratios })
}
