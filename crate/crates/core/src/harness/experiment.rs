use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{adversary_hash, io_err, ExperimentConfig, HarnessError, UpdateSource};
use super::transcript::Transcript;
use crate::adversary::{poison_updates, synthetic_updates, ValueAttack};
use crate::field::{Fe, Field};
use crate::protocol::{
    messages::encode, run_iteration, Envelope, Exclusion, IterationReport, MsgKind, ProtocolConfig, Residuals,
    RunOptions, Setup, Verdict, SERVER,
};
use crate::quantize::{clip, dequantize};
use crate::rng::stream;
use crate::robust::{l2, rfa_aggregate, rlr_aggregate, rlr_mask, RobustAlg};

/// One iteration's updates plus the benign reference point.
#[derive(Clone, Debug)]
pub struct UpdateSet {
    pub updates: Vec<Vec<f64>>,
    /// Mean of the benign users' updates.
    pub benign_mean: Vec<f64>,
}

fn mean(xs: &[&Vec<f64>], d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d];
    for x in xs {
        for (a, v) in m.iter_mut().zip(x.iter()) {
            *a += v;
        }
    }
    let n = xs.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

/// Synthetic updates for one iteration; corrupted users submit poisoned
/// updates unless the value attack is `none`.
pub fn synthetic_set(cfg: &ExperimentConfig, iteration: u64) -> UpdateSet {
    let (n, d) = (cfg.protocol.n, cfg.protocol.d);
    let adv = &cfg.adversary;
    let (_, mut updates) = synthetic_updates(n, d, &mut stream(cfg.seed, "updates", iteration, 0));
    let honest: Vec<usize> = (0..n).filter(|i| !adv.is_corrupted(*i)).collect();
    let benign: Vec<Vec<f64>> = honest.iter().map(|&i| updates[i].clone()).collect();
    let benign_mean = mean(&benign.iter().collect::<Vec<_>>(), d);
    if adv.value_attack != ValueAttack::None && !adv.corrupted.is_empty() {
        let mut rng = stream(cfg.seed, "poison", iteration, 0);
        let poisoned = poison_updates(&benign, adv.corrupted.len(), &adv.value_attack, &mut rng);
        for (&i, x) in adv.corrupted.iter().zip(poisoned) {
            updates[i] = x;
        }
    }
    UpdateSet { updates, benign_mean }
}

fn load_file(path: &Path, cfg: &ProtocolConfig) -> Result<Vec<Vec<Vec<f64>>>, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let sets: Vec<Vec<Vec<f64>>> =
        serde_json::from_str(&text).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    if sets.is_empty()
        || sets
            .iter()
            .any(|s| s.len() != cfg.n || s.iter().any(|x| x.len() != cfg.d))
    {
        return Err(HarnessError::Config(format!(
            "{}: expected update sets of {} vectors of length {}",
            path.display(),
            cfg.n,
            cfg.d
        )));
    }
    Ok(sets)
}

/// The plaintext aggregate over `contributors`' quantized updates.
pub fn plaintext_aggregate(cfg: &ProtocolConfig, quantized: &[Option<Vec<Fe>>], contributors: &[usize]) -> Option<Vec<f64>> {
    let f = Field::new(cfg.field.q).ok()?;
    let xs: Vec<&Vec<Fe>> = contributors.iter().map(|&i| quantized[i].as_ref()).collect::<Option<_>>()?;
    match cfg.robust_alg {
        RobustAlg::Rlr => Some(dequantize(&f, &plaintext_rlr(cfg, &xs)?, cfg.field.p)),
        RobustAlg::Rfa => {
            let real: Vec<Vec<f64>> = xs.iter().map(|x| dequantize(&f, x, cfg.field.p)).collect();
            rfa_aggregate(&real, cfg.rfa_min_norm).ok()
        }
    }
}

/// Masked sum in the field.
pub fn plaintext_rlr(cfg: &ProtocolConfig, xs: &[&Vec<Fe>]) -> Option<Vec<Fe>> {
    let f = Field::new(cfg.field.q).ok()?;
    let d = cfg.d;
    let sums: Vec<u64> = (0..d)
        .map(|k| xs.iter().filter(|x| f.centered(x[k]) >= 0).count() as u64)
        .collect();
    let mask = rlr_mask(&sums, xs.len(), cfg.t(), cfg.rlr_mode);
    let total: Vec<Fe> = (0..d).map(|k| f.sum(xs.iter().map(|x| x[k]))).collect();
    Some(rlr_aggregate(&f, &total, &mask))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ByteSummary {
    pub user_round1_mean: f64,
    pub user_round2_mean: f64,
    pub server: u64,
}

/// One line of `metrics.jsonl`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub iteration: u64,
    pub verdict: Verdict,
    pub malicious_count: usize,
    pub malicious_set: Vec<usize>,
    pub exclusions: Vec<Exclusion>,
    pub passes: usize,
    pub abort_reason: Option<String>,
    /// Distances from the plaintext aggregate over the same contributors.
    pub oracle_l2: Option<f64>,
    pub oracle_linf: Option<f64>,
    /// RFA only: distance of the output, and of the naive mean of all
    /// clipped updates, from the benign mean.
    pub benign_mean_l2: Option<f64>,
    pub naive_mean_l2: Option<f64>,
    pub residuals: Residuals,
    pub bytes: ByteSummary,
    pub config_hash: String,
    pub adversary_hash: String,
}

/// One line of the wall-clock sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub iteration: u64,
    pub user_round1_s: f64,
    pub user_round2_s: f64,
    pub server_s: f64,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub records: Vec<MetricsRecord>,
    pub timings: Vec<TimingRecord>,
    pub reports: Vec<IterationReport>,
    pub transcript: Transcript,
}

fn dist(a: &[f64], b: &[f64]) -> (f64, f64) {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    (l2(&diffs), diffs.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

fn record(
    cfg: &ExperimentConfig,
    report: &IterationReport,
    quantized: &[Option<Vec<Fe>>],
    set: &UpdateSet,
    hashes: (&str, &str),
) -> MetricsRecord {
    let pc = &cfg.protocol;
    let oracle = report
        .aggregate
        .as_ref()
        .and_then(|_| plaintext_aggregate(pc, quantized, &report.contributors));
    let (oracle_l2, oracle_linf) = match (&report.aggregate, &oracle) {
        (Some(a), Some(o)) => {
            let (x, y) = dist(a, o);
            (Some(x), Some(y))
        }
        _ => (None, None),
    };
    let (benign_mean_l2, naive_mean_l2) = match (&report.aggregate, pc.robust_alg) {
        (Some(a), RobustAlg::Rfa) => {
            let clipped: Vec<Vec<f64>> = set
                .updates
                .iter()
                .map(|x| {
                    let mut x = x.clone();
                    clip(&mut x, pc.clip_epsilon);
                    x
                })
                .collect();
            let naive = mean(&clipped.iter().collect::<Vec<_>>(), pc.d);
            (Some(dist(a, &set.benign_mean).0), Some(dist(&naive, &set.benign_mean).0))
        }
        _ => (None, None),
    };
    let n = pc.n as f64;
    MetricsRecord {
        iteration: report.iteration,
        verdict: report.verdict,
        malicious_count: report.excluded.len(),
        malicious_set: report.malicious_set(),
        exclusions: report.excluded.clone(),
        passes: report.passes,
        abort_reason: report.abort_reason.clone(),
        oracle_l2,
        oracle_linf,
        benign_mean_l2,
        naive_mean_l2,
        residuals: report.residuals.clone(),
        bytes: ByteSummary {
            user_round1_mean: report.bytes.user_round1.iter().sum::<u64>() as f64 / n,
            user_round2_mean: report.bytes.user_round2.iter().sum::<u64>() as f64 / n,
            server: report.bytes.server,
        },
        config_hash: hashes.0.to_string(),
        adversary_hash: hashes.1.to_string(),
    }
}

/// Runs every iteration of the experiment in memory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    cfg.validate()?;
    let setup = Setup::generate(&cfg.protocol, cfg.seed)?;
    let file_sets = match &cfg.updates {
        UpdateSource::Synthetic => None,
        UpdateSource::File { path } => Some(load_file(path, &cfg.protocol)?),
    };
    let hashes = (cfg.hash(), adversary_hash(&cfg.adversary));
    let mut envelopes = vec![Envelope {
        iteration: 0,
        pass: 0,
        sender: SERVER,
        recipient: SERVER,
        kind: MsgKind::Setup,
        payload: encode(&setup.public),
    }];
    let mut result = ExperimentResult {
        records: Vec::new(),
        timings: Vec::new(),
        reports: Vec::new(),
        transcript: Transcript {
            config: cfg.clone(),
            envelopes: Vec::new(),
        },
    };
    let options = RunOptions {
        parallel: cfg.parallel,
    };
    for it in 0..cfg.iterations {
        let set = match &file_sets {
            None => synthetic_set(cfg, it),
            Some(sets) => {
                let updates = sets[(it as usize) % sets.len()].clone();
                let benign: Vec<&Vec<f64>> = (0..cfg.protocol.n)
                    .filter(|i| !cfg.adversary.is_corrupted(*i))
                    .map(|i| &updates[i])
                    .collect();
                let benign_mean = mean(&benign, cfg.protocol.d);
                UpdateSet { updates, benign_mean }
            }
        };
        let out = run_iteration(&setup, cfg.seed, it, &set.updates, &cfg.adversary, options, &mut envelopes)?;
        result.records.push(record(cfg, &out.report, &out.quantized, &set, (&hashes.0, &hashes.1)));
        result.timings.push(TimingRecord {
            iteration: it,
            user_round1_s: out.timings.user_round1,
            user_round2_s: out.timings.user_round2,
            server_s: out.timings.server,
        });
        result.reports.push(out.report);
    }
    result.transcript.envelopes = envelopes;
    Ok(result)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(row).expect("record serializes");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Writes metrics, timings and the transcript into `dir`.
pub fn write_outputs(cfg: &ExperimentConfig, result: &ExperimentResult, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    write_jsonl(&dir.join(&cfg.output.metrics), &result.records)?;
    write_jsonl(&dir.join(&cfg.output.timings), &result.timings)?;
    result.transcript.write(&dir.join(&cfg.output.transcript))
}
