//! Robust aggregation rules and the circuits that certify their statistics.
//!
//! RLR votes on coordinate signs and flips the summed update wherever the vote
//! is not decisive. RFA takes an inverse-norm weighted mean. The sign circuit
//! proves `e = [x >= 0]` per coordinate; the RFA circuit proves that the
//! claimed norm `n` and weight `omega` are consistent with `x` up to rounding.

use serde::{Deserialize, Serialize};

use crate::circuit::{Affine, Circuit, Gate, Wire};
use crate::field::{Fe, Field};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum RlrMode {
    /// `+1` iff `max(S, N - S) >= theta`.
    #[serde(rename = "paper")]
    Paper,
    /// `+1` iff `|2S - N| >= theta`.
    #[default]
    #[serde(rename = "rlr-orig")]
    RlrOrig,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RobustAlg {
    #[default]
    Rlr,
    Rfa,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RobustError {
    #[error("update {0} has norm below the minimum")]
    Norm(usize),
    #[error("no updates to aggregate")]
    Empty,
}

/// Per-coordinate learning-rate mask from the positive-sign counts `sums`.
/// The threshold is `theta = T + 1`.
pub fn rlr_mask(sums: &[u64], n: usize, t: usize, mode: RlrMode) -> Vec<i8> {
    let n = n as i64;
    let theta = t as i64 + 1;
    sums.iter()
        .map(|&s| {
            let s = s as i64;
            let keep = match mode {
                RlrMode::Paper => s.max(n - s) >= theta,
                RlrMode::RlrOrig => (2 * s - n).abs() >= theta,
            };
            if keep {
                1
            } else {
                -1
            }
        })
        .collect()
}

/// `mask ⊙ sum` in the field, with `-1` lifted to `q - 1`.
pub fn rlr_aggregate(f: &Field, sum: &[Fe], mask: &[i8]) -> Vec<Fe> {
    assert_eq!(sum.len(), mask.len(), "mask dimension");
    sum.iter()
        .zip(mask)
        .map(|(&v, &m)| if m >= 0 { v } else { f.neg(v) })
        .collect()
}

/// Default lower bound on update norms accepted by [`rfa_aggregate`].
pub const RFA_MIN_NORM: f64 = 1e-8;

pub fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `sum_i w_i x_i / sum_i w_i` with `w_i = 1 / ||x_i||`.
pub fn rfa_aggregate(updates: &[Vec<f64>], min_norm: f64) -> Result<Vec<f64>, RobustError> {
    let d = updates.first().ok_or(RobustError::Empty)?.len();
    let mut num = vec![0.0; d];
    let mut den = 0.0;
    for (i, x) in updates.iter().enumerate() {
        let norm = l2(x);
        if norm <= min_norm {
            return Err(RobustError::Norm(i));
        }
        let w = 1.0 / norm;
        den += w;
        for (acc, v) in num.iter_mut().zip(x) {
            *acc += w * v;
        }
    }
    Ok(num.into_iter().map(|v| v / den).collect())
}

/// Bits needed to write any magnitude up to `p`.
pub fn sign_bits(p: u64) -> usize {
    (64 - p.leading_zeros()) as usize
}

// Sign circuit wire layout. Inputs: x, then the witness [e, inv, b_0..b_{B-1}].
pub const SIGN_IN_X: usize = 0;
pub const SIGN_IN_E: usize = 1;
pub const SIGN_IN_INV: usize = 2;
pub const SIGN_IN_BITS: usize = 3;
// Outputs: e, then residuals.
pub const SIGN_OUT_E: usize = 0;
pub const SIGN_OUT_BOOL: usize = 1;
pub const SIGN_OUT_CONSISTENCY: usize = 2;
pub const SIGN_OUT_NONZERO: usize = 3;
pub const SIGN_OUT_BITS: usize = 4;

/// Per-coordinate sign circuit with `bits`-bit magnitude decomposition.
///
/// Gates: `e(e-1)`, `b_j(b_j-1)`, `(2e-1)x`, `t = x inv`, `(1-e)(t-1)`.
/// The last two force `x != 0` when `e = 0`, so `sign(0) = +1` is the only
/// accepted reading of zero.
pub fn build_sign_circuit_bits(bits: usize) -> Circuit {
    let e = Wire::Input(SIGN_IN_E);
    let x = Wire::Input(SIGN_IN_X);
    let mut gates = vec![Gate {
        left: Affine::wire(e),
        right: Affine::wire(e).plus_const(-1),
    }];
    for j in 0..bits {
        let b = Wire::Input(SIGN_IN_BITS + j);
        gates.push(Gate {
            left: Affine::wire(b),
            right: Affine::wire(b).plus_const(-1),
        });
    }
    let g_signed = gates.len();
    gates.push(Gate {
        left: Affine::constant(-1).plus(e, 2),
        right: Affine::wire(x),
    });
    let g_t = gates.len();
    gates.push(Gate {
        left: Affine::wire(x),
        right: Affine::input(SIGN_IN_INV),
    });
    let g_nz = gates.len();
    gates.push(Gate {
        left: Affine::constant(1).plus(e, -1),
        right: Affine::gate(g_t).plus_const(-1),
    });
    let mut consistency = Affine::gate(g_signed);
    for j in 0..bits {
        consistency = consistency.plus(Wire::Input(SIGN_IN_BITS + j), -(1i64 << j));
    }
    let mut outputs = vec![
        Affine::wire(e),
        Affine::gate(0),
        consistency,
        Affine::gate(g_nz),
    ];
    outputs.extend((0..bits).map(|j| Affine::gate(1 + j)));
    Circuit {
        name: format!("sign-b{bits}"),
        num_inputs: SIGN_IN_BITS + bits,
        gates,
        outputs,
    }
}

pub fn build_sign_circuit(p: u64) -> Circuit {
    build_sign_circuit_bits(sign_bits(p))
}

/// Honest witness `[e, inv, bits]` for one quantized coordinate.
pub fn sign_witness(f: &Field, x: Fe, bits: usize) -> Vec<Fe> {
    let c = f.centered(x);
    let e = c >= 0;
    let inv = if e { Fe::ZERO } else { f.inv(x) };
    let mag = c.unsigned_abs();
    let mut out = Vec::with_capacity(2 + bits);
    out.push(if e { Fe::ONE } else { Fe::ZERO });
    out.push(inv);
    out.extend((0..bits).map(|j| f.elem((mag >> j) & 1)));
    out
}

/// RFA circuit layout for dimension `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RfaShape {
    pub d: usize,
    pub p: u64,
    /// Bits per residual in the optional range check.
    pub range_bits: Option<usize>,
}

// Output layout of the RFA circuit.
pub const RFA_OUT_E1: usize = 0;
pub const RFA_OUT_E2: usize = 1;
pub const RFA_OUT_RANGE: usize = 2;

impl RfaShape {
    pub fn in_norm(&self) -> usize {
        self.d
    }

    pub fn in_weight(&self) -> usize {
        self.d + 1
    }

    pub fn witness_len(&self) -> usize {
        2 + 2 * self.range_bits.unwrap_or(0)
    }

    /// Residual bit width covering honest witnesses for updates of norm up to
    /// `norm_bound`, with one extra bit for the sign offset.
    pub fn range_bits_for(p: u64, norm_bound: f64) -> usize {
        let max_r = (p as f64 * norm_bound).ceil() as u64 + 2;
        sign_bits(max_r) + 1
    }
}

/// Gates: `x_k^2` for every k, `n^2`, `omega n`, then `r1^2`, `r2^2` with
/// `r1 = n^2 - sum x_k^2` and `r2 = omega n - p^2`. With a range check, the
/// residuals are also decomposed into bits after adding `2^(B-1)`.
pub fn build_rfa_circuit(shape: &RfaShape) -> Circuit {
    let d = shape.d;
    let mut gates: Vec<Gate> = (0..d)
        .map(|k| Gate {
            left: Affine::input(k),
            right: Affine::input(k),
        })
        .collect();
    let n = Wire::Input(shape.in_norm());
    let w = Wire::Input(shape.in_weight());
    let g_nn = gates.len();
    gates.push(Gate {
        left: Affine::wire(n),
        right: Affine::wire(n),
    });
    let g_wn = gates.len();
    gates.push(Gate {
        left: Affine::wire(w),
        right: Affine::wire(n),
    });
    let mut r1 = Affine::gate(g_nn);
    for k in 0..d {
        r1 = r1.plus(Wire::Gate(k), -1);
    }
    let p2 = (shape.p as i64) * (shape.p as i64);
    let r2 = Affine::gate(g_wn).plus_const(-p2);
    let g_e1 = gates.len();
    gates.push(Gate {
        left: r1.clone(),
        right: r1.clone(),
    });
    let g_e2 = gates.len();
    gates.push(Gate {
        left: r2.clone(),
        right: r2.clone(),
    });
    let mut outputs = vec![Affine::gate(g_e1), Affine::gate(g_e2)];
    if let Some(bits) = shape.range_bits {
        let base = shape.in_weight() + 1;
        let first_bool = gates.len();
        for j in 0..2 * bits {
            let b = Wire::Input(base + j);
            gates.push(Gate {
                left: Affine::wire(b),
                right: Affine::wire(b).plus_const(-1),
            });
        }
        let offset = 1i64 << (bits - 1);
        for (which, r) in [r1, r2].into_iter().enumerate() {
            let mut c = r.plus_const(offset);
            for j in 0..bits {
                c = c.plus(Wire::Input(base + which * bits + j), -(1i64 << j));
            }
            outputs.push(c);
        }
        outputs.extend((0..2 * bits).map(|j| Affine::gate(first_bool + j)));
    }
    Circuit {
        name: format!(
            "rfa-d{d}-p{}-r{}",
            shape.p,
            shape.range_bits.unwrap_or(0)
        ),
        num_inputs: d + 2 + 2 * shape.range_bits.unwrap_or(0),
        gates,
        outputs,
    }
}

/// Honest RFA witnesses for quantized `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RfaWitness {
    /// `[n, omega, range bits]`
    pub aux: Vec<Fe>,
    pub norm: i64,
    pub weight: i64,
    pub r1: i64,
    pub r2: i64,
}

/// `n` minimizes `|n^2 - s|` (at least 1), `omega = round(p^2 / n)`.
pub fn rfa_witness(f: &Field, x: &[Fe], shape: &RfaShape) -> RfaWitness {
    let s: i64 = x.iter().map(|&v| f.centered(v).pow(2)).sum();
    let mut n = (s as f64).sqrt() as i64;
    while n * n > s {
        n -= 1;
    }
    while (n + 1) * (n + 1) <= s {
        n += 1;
    }
    if (n + 1) * (n + 1) - s < s - n * n {
        n += 1;
    }
    let n = n.max(1);
    let p2 = (shape.p as i64).pow(2);
    let weight = (p2 + n / 2) / n;
    rfa_witness_from(f, s, n, weight, shape)
}

/// Witness with caller-chosen `n` and `omega` (cheating provers included).
pub fn rfa_witness_from(f: &Field, s: i64, n: i64, weight: i64, shape: &RfaShape) -> RfaWitness {
    let p2 = (shape.p as i64).pow(2);
    let r1 = n * n - s;
    let r2 = weight * n - p2;
    let mut aux = vec![f.from_i64(n), f.from_i64(weight)];
    if let Some(bits) = shape.range_bits {
        let offset = 1i64 << (bits - 1);
        for r in [r1, r2] {
            // Out-of-range residuals cannot be decomposed; the low bits are
            // sent and the consistency residual exposes the gap.
            let v = (r + offset).rem_euclid(1i64 << bits) as u64;
            aux.extend((0..bits).map(|j| f.elem((v >> j) & 1)));
        }
    }
    RfaWitness {
        aux,
        norm: n,
        weight,
        r1,
        r2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_Q;
    use crate::quantize::{dequantize, quantize};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn mask_modes_on_spec_cases() {
        assert_eq!(rlr_mask(&[3], 5, 1, RlrMode::Paper), vec![1]);
        assert_eq!(rlr_mask(&[3], 5, 1, RlrMode::RlrOrig), vec![-1]);
        assert_eq!(rlr_mask(&[5], 5, 1, RlrMode::Paper), vec![1]);
        assert_eq!(rlr_mask(&[5], 5, 1, RlrMode::RlrOrig), vec![1]);
        assert_eq!(rlr_mask(&[0], 5, 1, RlrMode::RlrOrig), vec![1]);
    }

    #[test]
    fn mask_is_scale_invariant() {
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..50 {
            let updates: Vec<Vec<f64>> = (0..7).map(|_| (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let c = rng.gen_range(0.01..100.0);
            let count = |u: &[Vec<f64>]| -> Vec<u64> {
                (0..16).map(|k| u.iter().filter(|x| x[k] >= 0.0).count() as u64).collect()
            };
            let scaled: Vec<Vec<f64>> = updates.iter().map(|x| x.iter().map(|v| v * c).collect()).collect();
            for mode in [RlrMode::Paper, RlrMode::RlrOrig] {
                assert_eq!(rlr_mask(&count(&updates), 7, 2, mode), rlr_mask(&count(&scaled), 7, 2, mode));
            }
        }
    }

    #[test]
    fn rlr_aggregate_cases() {
        let f = Field::new(DEFAULT_Q).unwrap();
        let sum = vec![f.elem(5), f.from_i64(-3), f.elem(0)];
        assert_eq!(rlr_aggregate(&f, &sum, &[1, 1, 1]), sum);
        assert_eq!(
            rlr_aggregate(&f, &sum, &[-1, -1, -1]),
            vec![f.from_i64(-5), f.elem(3), f.elem(0)]
        );
        let mask = [1, -1, -1];
        let out = rlr_aggregate(&f, &sum, &mask);
        for k in 0..3 {
            assert_eq!(f.centered(out[k]), mask[k] as i64 * f.centered(sum[k]));
        }
    }

    #[test]
    fn rfa_hand_cases() {
        let out = rfa_aggregate(&[vec![1.0, 0.0], vec![0.0, 2.0]], RFA_MIN_NORM).unwrap();
        assert!((out[0] - 2.0 / 3.0).abs() < 1e-12 && (out[1] - 2.0 / 3.0).abs() < 1e-12);
        let same = vec![vec![0.3, -0.2, 0.1]; 4];
        let out = rfa_aggregate(&same, RFA_MIN_NORM).unwrap();
        for (a, b) in out.iter().zip(&same[0]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(rfa_aggregate(&[vec![0.0, 0.0]], RFA_MIN_NORM), Err(RobustError::Norm(0)));
    }

    #[test]
    fn rfa_matches_direct_formula_and_is_permutation_invariant() {
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        for _ in 0..20 {
            let xs: Vec<Vec<f64>> = (0..7).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let out = rfa_aggregate(&xs, RFA_MIN_NORM).unwrap();
            for k in 0..5 {
                let mut num = 0.0;
                let mut den = 0.0;
                for x in &xs {
                    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    num += x[k] / n;
                    den += 1.0 / n;
                }
                assert!((out[k] - num / den).abs() < 1e-12);
                let lo = xs.iter().map(|x| x[k]).fold(f64::INFINITY, f64::min);
                let hi = xs.iter().map(|x| x[k]).fold(f64::NEG_INFINITY, f64::max);
                assert!(out[k] >= lo - 1e-12 && out[k] <= hi + 1e-12);
            }
            let mut rev = xs.clone();
            rev.reverse();
            let out2 = rfa_aggregate(&rev, RFA_MIN_NORM).unwrap();
            for (a, b) in out.iter().zip(&out2) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn sign_outputs(f: &Field, p: u64, x: i64, e: u64, mag: u64) -> Vec<i64> {
        let bits = sign_bits(p);
        let c = build_sign_circuit(p);
        let xf = f.from_i64(x);
        let inv = if xf.is_zero() { Fe::ZERO } else { f.inv(xf) };
        let mut inputs = vec![xf, f.elem(e), inv];
        inputs.extend((0..bits).map(|j| f.elem((mag >> j) & 1)));
        c.eval(f, &inputs).outputs.iter().map(|&v| f.centered(v)).collect()
    }

    #[test]
    fn sign_circuit_examples() {
        let f = Field::new(DEFAULT_Q).unwrap();
        let out = sign_outputs(&f, 1000, 3, 1, 3);
        assert!(out[1..].iter().all(|&r| r == 0));
        let out = sign_outputs(&f, 1000, -2, 0, 2);
        assert!(out[1..].iter().all(|&r| r == 0));
        let out = sign_outputs(&f, 1000, 3, 0, 3);
        assert_eq!(out[SIGN_OUT_CONSISTENCY], -6);
        let w = sign_witness(&f, f.from_i64(-2), sign_bits(1000));
        assert_eq!(w[0], Fe::ZERO);
        assert_eq!(f.mul(w[1], f.from_i64(-2)), Fe::ONE);
    }

    #[test]
    fn sign_circuit_accepts_exactly_the_true_sign_and_bits() {
        let f = Field::new(DEFAULT_Q).unwrap();
        for p in 1..=64u64 {
            let bits = sign_bits(p);
            let c = build_sign_circuit(p);
            for x in -(p as i64)..=(p as i64) {
                let xf = f.from_i64(x);
                for e in 0..2u64 {
                    for inv in [Fe::ZERO, f.try_inv(xf).unwrap_or(Fe::ZERO)] {
                        for mag in 0..(1u64 << bits) {
                            let mut inputs = vec![xf, f.elem(e), inv];
                            inputs.extend((0..bits).map(|j| f.elem((mag >> j) & 1)));
                            let ok = c.eval(&f, &inputs).outputs[1..].iter().all(|v| v.is_zero());
                            let truth = e == u64::from(x >= 0) && mag == x.unsigned_abs();
                            if truth && inv == f.try_inv(xf).unwrap_or(Fe::ZERO) {
                                assert!(ok, "p={p} x={x} rejected");
                            }
                            if ok {
                                assert!(truth, "p={p} x={x} e={e} mag={mag} accepted");
                            }
                        }
                    }
                }
            }
        }
    }

    fn rfa_outputs(f: &Field, x: &[Fe], shape: &RfaShape, w: &RfaWitness) -> Vec<i64> {
        let c = build_rfa_circuit(shape);
        let mut inputs = x.to_vec();
        inputs.extend(&w.aux);
        c.eval(f, &inputs).outputs.iter().map(|&v| f.centered(v)).collect()
    }

    #[test]
    fn rfa_exact_case() {
        let f = Field::new(DEFAULT_Q).unwrap();
        let shape = RfaShape { d: 2, p: 1000, range_bits: None };
        let x = [f.elem(600), f.elem(800)];
        let w = rfa_witness(&f, &x, &shape);
        assert_eq!((w.norm, w.weight), (1000, 1000));
        assert_eq!(rfa_outputs(&f, &x, &shape, &w), vec![0, 0]);
    }

    #[test]
    fn rfa_residual_bounds_hold_for_random_updates() {
        let f = Field::new(DEFAULT_Q).unwrap();
        let p = 1000u64;
        let shape = RfaShape { d: 8, p, range_bits: None };
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let pf = p as f64;
        for _ in 0..10_000 {
            let real: Vec<f64> = (0..8).map(|_| rng.gen_range(-0.99..0.99)).collect();
            let x = quantize(&f, &real, p, &mut rng).unwrap().0;
            let norm = l2(&dequantize(&f, &x, p));
            if norm == 0.0 {
                continue;
            }
            let w = rfa_witness(&f, &x, &shape);
            let out = rfa_outputs(&f, &x, &shape, &w);
            assert_eq!(out[0], w.r1 * w.r1);
            assert_eq!(out[1], w.r2 * w.r2);
            let r1 = w.r1.abs() as f64 / (pf * pf);
            let r2 = w.r2.abs() as f64 / (pf * pf);
            assert!(r1 <= 2.0 * norm / pf + 1.0 / (pf * pf), "r1 {r1}");
            assert!(r2 <= (norm + 1.0 / norm) / pf + 1.0 / (pf * pf), "r2 {r2}");
        }
    }

    #[test]
    fn doubled_weight_blows_up_the_residual() {
        let f = Field::new(DEFAULT_Q).unwrap();
        let p = 1000u64;
        let bits = RfaShape::range_bits_for(p, 2.0);
        let shape = RfaShape { d: 3, p, range_bits: Some(bits) };
        let x = [f.elem(300), f.from_i64(-400), f.elem(120)];
        let honest = rfa_witness(&f, &x, &shape);
        let out = rfa_outputs(&f, &x, &shape, &honest);
        assert!(out[RFA_OUT_RANGE..].iter().all(|&v| v == 0));
        let s = 300 * 300 + 400 * 400 + 120 * 120;
        let cheat = rfa_witness_from(&f, s, honest.norm, 2 * honest.weight, &shape);
        assert!(cheat.r2 as f64 / 1e6 > 0.9);
        let out = rfa_outputs(&f, &x, &shape, &cheat);
        assert_ne!(out[RFA_OUT_RANGE + 1], 0);
    }
}
