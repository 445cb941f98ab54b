//! Reed-Solomon decoding with Gao's algorithm.
//!
//! Given `n` evaluations of a polynomial of degree `< k` at distinct points,
//! of which at most `(n - k) / 2` are wrong, recovers the polynomial:
//!
//! 1. `g0 = prod_j (x - a_j)`, `g1` = interpolant through all `n` points.
//! 2. Run the extended Euclidean algorithm on `(g0, g1)` and stop at the first
//!    remainder `g` with `deg g < (n + k) / 2`; let `v` be the cofactor of `g1`.
//! 3. `f = g / v`. If the division leaves a remainder, or `deg f >= k`,
//!    there is no codeword within the decoding radius.

use crate::field::{Fe, Field};
use crate::poly::{self, Poly};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decoded {
    /// Message polynomial, padded to exactly `k` coefficients.
    pub message: Poly,
    /// Indices (into the input slices) whose value disagreed with the codeword.
    pub error_positions: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum DecodeError {
    #[error("need at least {needed} evaluations, got {got}")]
    Insufficient { needed: usize, got: usize },
    #[error("no codeword within the decoding radius")]
    TooManyErrors,
}

/// Decodes a `[n, k]` Reed-Solomon word. With `n == k` this is plain
/// interpolation and never reports errors.
pub fn gao_decode(
    f: &Field,
    points: &[Fe],
    values: &[Fe],
    k: usize,
) -> Result<Decoded, DecodeError> {
    assert_eq!(points.len(), values.len());
    let n = points.len();
    if n < k || k == 0 {
        return Err(DecodeError::Insufficient { needed: k.max(1), got: n });
    }
    let g1 = poly::trim(poly::interpolate(f, points, values));
    if poly::degree(&g1).is_none_or(|d| d < k) {
        // Already a codeword (including the zero word).
        let mut message = g1;
        message.resize(k, Fe::ZERO);
        return Ok(Decoded {
            message,
            error_positions: Vec::new(),
        });
    }
    let g0 = poly::from_roots(f, points);
    let stop = (n + k).div_ceil(2);

    // Invariant: r_i = s_i * g0 + v_i * g1; only the v-cofactors are tracked.
    let (mut r_prev, mut r_cur) = (g0, g1);
    let (mut v_prev, mut v_cur): (Poly, Poly) = (Vec::new(), vec![Fe::ONE]);
    while poly::degree(&r_cur).is_some_and(|d| d >= stop) {
        let (quot, rem) = poly::divrem(f, &r_prev, &r_cur);
        let v_next = poly::sub(f, &v_prev, &poly::mul(f, &quot, &v_cur));
        r_prev = std::mem::replace(&mut r_cur, rem);
        v_prev = std::mem::replace(&mut v_cur, v_next);
    }
    if poly::degree(&v_cur).is_none() {
        return Err(DecodeError::TooManyErrors);
    }
    let (message, rem) = poly::divrem(f, &r_cur, &v_cur);
    if !rem.is_empty() || poly::degree(&message).is_some_and(|d| d >= k) {
        return Err(DecodeError::TooManyErrors);
    }
    let mut message = message;
    message.resize(k, Fe::ZERO);
    let error_positions: Vec<usize> = points
        .iter()
        .zip(values)
        .enumerate()
        .filter(|(_, (&x, &y))| poly::eval(f, &message, x) != y)
        .map(|(i, _)| i)
        .collect();
    if 2 * error_positions.len() > n - k {
        return Err(DecodeError::TooManyErrors);
    }
    Ok(Decoded {
        message,
        error_positions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{seq::SliceRandom, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn setup(n: usize, k: usize, seed: u64) -> (Field, Vec<Fe>, Poly, Vec<Fe>) {
        let f = Field::new(10_007).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let points: Vec<Fe> = (1..=n as u64).map(|v| f.elem(v * 13)).collect();
        let msg = f.random_vec(&mut rng, k);
        let values = points.iter().map(|&x| poly::eval(&f, &msg, x)).collect();
        (f, points, msg, values)
    }

    #[test]
    fn decodes_clean_words() {
        let (f, pts, msg, vals) = setup(9, 4, 1);
        let d = gao_decode(&f, &pts, &vals, 4).unwrap();
        assert_eq!(d.message, msg);
        assert!(d.error_positions.is_empty());
    }

    #[test]
    fn corrects_up_to_radius_and_reports_positions() {
        for seed in 0..50 {
            let (f, pts, msg, mut vals) = setup(11, 3, seed);
            let mut rng = ChaCha20Rng::seed_from_u64(seed + 1000);
            let mut idx: Vec<usize> = (0..11).collect();
            idx.shuffle(&mut rng);
            let mut bad = idx[..4].to_vec();
            for &i in &bad {
                vals[i] = f.add(vals[i], f.elem(1 + seed));
            }
            let d = gao_decode(&f, &pts, &vals, 3).unwrap();
            assert_eq!(d.message, msg);
            bad.sort();
            assert_eq!(d.error_positions, bad);
        }
    }

    /// Exhaustive oracle: for a short code, search every message for the
    /// nearest codeword and compare with the decoder's verdict.
    #[test]
    fn agrees_with_brute_force_nearest_codeword() {
        let f = Field::new(7).unwrap();
        let pts: Vec<Fe> = (0..6).map(|v| f.elem(v)).collect();
        let k = 2;
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..200 {
            let word = f.random_vec(&mut rng, 6);
            let mut best: Option<(usize, Poly)> = None;
            for a in 0..7 {
                for b in 0..7 {
                    let m = vec![f.elem(a), f.elem(b)];
                    let dist = pts
                        .iter()
                        .zip(&word)
                        .filter(|(&x, &y)| poly::eval(&f, &m, x) != y)
                        .count();
                    if best.as_ref().is_none_or(|(bd, _)| dist < *bd) {
                        best = Some((dist, m));
                    }
                }
            }
            let (dist, m) = best.unwrap();
            match gao_decode(&f, &pts, &word, k) {
                Ok(d) => {
                    assert!(dist <= 2);
                    assert_eq!(d.message, m);
                }
                Err(_) => assert!(dist > 2),
            }
        }
    }

    #[test]
    fn too_few_points() {
        let (f, pts, _, vals) = setup(3, 3, 2);
        assert_eq!(
            gao_decode(&f, &pts[..2], &vals[..2], 3),
            Err(DecodeError::Insufficient { needed: 3, got: 2 })
        );
    }
}
