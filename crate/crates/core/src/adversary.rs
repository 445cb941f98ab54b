//! Attack library: poisoned updates and protocol-level misbehavior.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::quantize::{clip, CLIP_EPSILON};
use crate::robust::l2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValueAttack {
    #[default]
    None,
    Gaussian { sigma: f64 },
    Scale { c: f64 },
    Minmax,
    Minsum,
    SignSkew { fraction: f64 },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProtocolAttack {
    #[default]
    None,
    /// Perturbs the share sent to one victim; commitments stay honest. By
    /// default the corrupted users pick distinct honest victims.
    BadShare {
        #[serde(default)]
        victim: Option<usize>,
    },
    /// Commits to a different data vector than the one shared.
    BadCommitPair,
    /// Perturbs one proof coefficient before sharing and committing.
    CheatCircuit,
    /// Tags honest users; defaults to the `T + 1` lowest honest indices.
    FalseTag {
        #[serde(default)]
        targets: Option<Vec<usize>>,
    },
    /// Submits random sigma shares as a verifier.
    BadSigma,
    /// Sends nothing from the given round on (1 or 2).
    Drop { round: u8 },
}

impl ProtocolAttack {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::BadShare { .. } => "bad_share",
            Self::BadCommitPair => "bad_commit_pair",
            Self::CheatCircuit => "cheat_circuit",
            Self::FalseTag { .. } => "false_tag",
            Self::BadSigma => "bad_sigma",
            Self::Drop { .. } => "drop",
        }
    }

    /// Whether the behavior is a protocol deviation that must be caught.
    pub fn is_detectable(&self) -> bool {
        !matches!(self, Self::None)
    }
}

impl ValueAttack {
    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Gaussian { .. } => "gaussian",
            Self::Scale { .. } => "scale",
            Self::Minmax => "minmax",
            Self::Minsum => "minsum",
            Self::SignSkew { .. } => "sign_skew",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdversarySpec {
    #[serde(default)]
    pub corrupted: Vec<usize>,
    #[serde(default)]
    pub value_attack: ValueAttack,
    #[serde(default)]
    pub protocol_attack: ProtocolAttack,
}

impl AdversarySpec {
    pub fn honest() -> Self {
        Self::default()
    }

    pub fn is_corrupted(&self, i: usize) -> bool {
        self.corrupted.contains(&i)
    }
}

fn mean(xs: &[Vec<f64>]) -> Vec<f64> {
    let d = xs.first().map_or(0, Vec::len);
    let mut m = vec![0.0; d];
    for x in xs {
        for (a, v) in m.iter_mut().zip(x) {
            *a += v;
        }
    }
    let n = xs.len().max(1) as f64;
    m.iter_mut().for_each(|v| *v /= n);
    m
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Largest `gamma >= 0` with `ok(mean + gamma * dir)`, by doubling then 30
/// bisection steps.
fn search_gamma(ok: impl Fn(f64) -> bool) -> f64 {
    if !ok(0.0) {
        return 0.0;
    }
    let mut hi = 1.0;
    let mut rounds = 0;
    while ok(hi) && rounds < 60 {
        hi *= 2.0;
        rounds += 1;
    }
    let mut lo = 0.0;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Builds the shared malicious update for Min-Max or Min-Sum.
fn optimize(benign: &[Vec<f64>], sum_rule: bool) -> Vec<f64> {
    let m = mean(benign);
    let norm = l2(&m);
    if norm == 0.0 {
        return m;
    }
    let dir: Vec<f64> = m.iter().map(|v| -v / norm).collect();
    let at = |g: f64| -> Vec<f64> { m.iter().zip(&dir).map(|(a, b)| a + g * b).collect() };
    let gamma = if sum_rule {
        let bound = benign
            .iter()
            .map(|xi| benign.iter().map(|xj| dist(xi, xj).powi(2)).sum::<f64>())
            .fold(0.0, f64::max);
        search_gamma(|g| {
            let xm = at(g);
            benign.iter().map(|xi| dist(&xm, xi).powi(2)).sum::<f64>() <= bound
        })
    } else {
        let bound = benign
            .iter()
            .flat_map(|xi| benign.iter().map(move |xj| dist(xi, xj)))
            .fold(0.0, f64::max);
        search_gamma(|g| {
            let xm = at(g);
            benign.iter().map(|xi| dist(&xm, xi)).fold(0.0, f64::max) <= bound
        })
    };
    at(gamma)
}

/// Returns the updates of the `count` corrupted users given every benign
/// update. Not clipped; callers clip before quantizing.
pub fn poison_updates<R: Rng + ?Sized>(
    benign: &[Vec<f64>],
    count: usize,
    attack: &ValueAttack,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let m = mean(benign);
    match *attack {
        ValueAttack::None => Vec::new(),
        ValueAttack::Gaussian { sigma } => {
            let normal = Normal::new(0.0, sigma.abs()).expect("finite sigma");
            (0..count)
                .map(|_| m.iter().map(|v| v + normal.sample(rng)).collect())
                .collect()
        }
        ValueAttack::Scale { c } => vec![m.iter().map(|v| c * v).collect(); count],
        ValueAttack::Minmax => vec![optimize(benign, false); count],
        ValueAttack::Minsum => vec![optimize(benign, true); count],
        ValueAttack::SignSkew { fraction } => {
            let flip = ((fraction.clamp(0.0, 1.0) * m.len() as f64).ceil()) as usize;
            let x: Vec<f64> = m
                .iter()
                .enumerate()
                .map(|(k, v)| if k < flip { -v } else { *v })
                .collect();
            vec![x; count]
        }
    }
}

/// Synthetic benign updates around a hidden direction `g` with `||g|| = 0.5`:
/// user updates are `g + N(0, 0.01 I)`, clipped. Returns `(g, updates)`.
pub fn synthetic_updates<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> (Vec<f64>, Vec<Vec<f64>>) {
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut g: Vec<f64> = (0..d).map(|_| std.sample(rng)).collect();
    let gn = l2(&g).max(f64::MIN_POSITIVE);
    g.iter_mut().for_each(|v| *v *= 0.5 / gn);
    let noise = Normal::new(0.0, 0.1).expect("finite std");
    let updates = (0..n)
        .map(|_| {
            let mut x: Vec<f64> = g.iter().map(|v| v + noise.sample(rng)).collect();
            clip(&mut x, CLIP_EPSILON);
            x
        })
        .collect();
    (g, updates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn benign(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        synthetic_updates(n, d, &mut ChaCha20Rng::seed_from_u64(seed)).1
    }

    #[test]
    fn unit_scale_returns_the_mean() {
        let b = benign(5, 8, 1);
        let out = poison_updates(&b, 2, &ValueAttack::Scale { c: 1.0 }, &mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(out.len(), 2);
        let m = mean(&b);
        for (a, v) in out[0].iter().zip(&m) {
            assert!((a - v).abs() < 1e-15);
        }
    }

    #[test]
    fn minmax_with_one_benign_user_is_the_mean() {
        let b = benign(1, 8, 2);
        let out = poison_updates(&b, 1, &ValueAttack::Minmax, &mut ChaCha20Rng::seed_from_u64(0));
        assert_eq!(out[0], b[0]);
    }

    #[test]
    fn minmax_and_minsum_hit_their_constraints() {
        for seed in 0..10 {
            let b = benign(5, 16, 10 + seed);
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let mm = &poison_updates(&b, 1, &ValueAttack::Minmax, &mut rng)[0];
            let bound = b.iter().flat_map(|x| b.iter().map(move |y| dist(x, y))).fold(0.0, f64::max);
            let worst = b.iter().map(|x| dist(mm, x)).fold(0.0, f64::max);
            assert!(worst <= bound * (1.0 + 1e-12));
            assert!((worst - bound).abs() <= 1e-6 * bound, "{worst} vs {bound}");

            let ms = &poison_updates(&b, 1, &ValueAttack::Minsum, &mut rng)[0];
            let bound = b.iter().map(|x| b.iter().map(|y| dist(x, y).powi(2)).sum::<f64>()).fold(0.0, f64::max);
            let total: f64 = b.iter().map(|x| dist(ms, x).powi(2)).sum();
            assert!(total <= bound * (1.0 + 1e-12));
            assert!((total - bound).abs() <= 1e-6 * bound, "{total} vs {bound}");
        }
    }

    #[test]
    fn sign_skew_flips_the_requested_share() {
        let b = benign(3, 10, 3);
        let out = poison_updates(&b, 1, &ValueAttack::SignSkew { fraction: 0.3 }, &mut ChaCha20Rng::seed_from_u64(0));
        let m = mean(&b);
        for k in 0..10 {
            let expected = if k < 3 { -m[k] } else { m[k] };
            assert_eq!(out[0][k], expected);
        }
    }

    #[test]
    fn synthetic_updates_are_clipped_and_centered() {
        let (g, ups) = synthetic_updates(50, 64, &mut ChaCha20Rng::seed_from_u64(4));
        assert!((l2(&g) - 0.5).abs() < 1e-12);
        assert!(ups.iter().flatten().all(|v| v.abs() < 1.0));
        let m = mean(&ups);
        assert!(dist(&m, &g) < 0.2);
    }

    #[test]
    fn spec_roundtrips_through_toml() {
        let spec = AdversarySpec {
            corrupted: vec![1, 4],
            value_attack: ValueAttack::Scale { c: -10.0 },
            protocol_attack: ProtocolAttack::Drop { round: 2 },
        };
        let text = toml::to_string(&spec).unwrap();
        assert_eq!(toml::from_str::<AdversarySpec>(&text).unwrap(), spec);
    }
}
