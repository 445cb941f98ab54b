//! Stochastic rounding of real updates into `F_q` and back.

use rand::Rng;

use crate::field::{Fe, Field, FieldError};

/// Default clip margin applied to raw updates before quantization.
pub const CLIP_EPSILON: f64 = 1e-6;

/// A quantized update; centered representatives have magnitude at most `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedVector(pub Vec<Fe>);

impl QuantizedVector {
    pub fn entries(&self) -> &[Fe] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Clips every coordinate into `(-1 + eps, 1 - eps)`; returns the number of
/// coordinates that were moved. Non-finite entries are mapped to zero.
pub fn clip(x: &mut [f64], eps: f64) -> usize {
    let hi = 1.0 - eps;
    let mut moved = 0;
    for v in x.iter_mut() {
        let c = if v.is_finite() { v.clamp(-hi, hi) } else { 0.0 };
        if c != *v {
            moved += 1;
            *v = c;
        }
    }
    moved
}

/// Rounds `p * v` down with probability `1 - frac` and up with probability
/// `frac`, where `frac` is the fractional part.
pub fn stochastic_round<R: Rng + ?Sized>(scaled: f64, rng: &mut R) -> i64 {
    let floor = scaled.floor();
    let frac = scaled - floor;
    let up = rng.gen::<f64>() < frac;
    floor as i64 + i64::from(up)
}

pub fn quantize<R: Rng + ?Sized>(
    field: &Field,
    x: &[f64],
    p: u64,
    rng: &mut R,
) -> Result<QuantizedVector, FieldError> {
    if p == 0 {
        return Err(FieldError::Param("amplifier p must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(x.len());
    for &v in x {
        if !(v.is_finite() && v.abs() < 1.0) {
            return Err(FieldError::Domain(v));
        }
        out.push(field.from_i64(stochastic_round(p as f64 * v, rng)));
    }
    Ok(QuantizedVector(out))
}

pub fn dequantize(field: &Field, v: &[Fe], p: u64) -> Vec<f64> {
    v.iter()
        .map(|&e| field.centered(e) as f64 / p as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::DEFAULT_Q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn field() -> Field {
        Field::new(DEFAULT_Q).unwrap()
    }

    #[test]
    fn exact_multiples_are_deterministic() {
        let f = field();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        for _ in 0..100 {
            let q = quantize(&f, &[0.5], 100, &mut rng).unwrap();
            assert_eq!(q.0, vec![f.elem(50)]);
        }
        assert_eq!(dequantize(&f, &q_of(&f, 50), 100), vec![0.5]);
    }

    fn q_of(f: &Field, v: i64) -> Vec<Fe> {
        vec![f.from_i64(v)]
    }

    #[test]
    fn negative_values_wrap_to_top_of_field() {
        let f = field();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let q = quantize(&f, &[-0.25], 4, &mut rng).unwrap();
        assert_eq!(q.0[0].value(), DEFAULT_Q - 1);
        assert_eq!(dequantize(&f, &q.0, 4), vec![-0.25]);
        assert_eq!(dequantize(&f, &[Fe::ZERO], 4), vec![0.0]);
    }

    #[test]
    fn rounding_frequency_follows_fraction() {
        let f = field();
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let draws = 100_000;
        let mut ups = 0usize;
        for _ in 0..draws {
            let q = quantize(&f, &[0.1234], 100, &mut rng).unwrap();
            match f.centered(q.0[0]) {
                12 => {}
                13 => ups += 1,
                other => panic!("unexpected rounding {other}"),
            }
        }
        let freq = ups as f64 / draws as f64;
        assert!((freq - 0.34).abs() <= 0.01, "freq {freq}");
    }

    #[test]
    fn out_of_range_is_a_domain_error() {
        let f = field();
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        assert_eq!(
            quantize(&f, &[1.0], 10, &mut rng),
            Err(FieldError::Domain(1.0))
        );
        assert!(quantize(&f, &[f64::NAN], 10, &mut rng).is_err());
    }

    #[test]
    fn dequantize_of_quantize_is_unbiased() {
        let f = field();
        let p = 1000u64;
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let x = [0.37251, -0.80013, 0.0004];
        let draws = 100_000;
        let mut mean = [0.0f64; 3];
        for _ in 0..draws {
            let q = quantize(&f, &x, p, &mut rng).unwrap();
            for (m, v) in mean.iter_mut().zip(dequantize(&f, &q.0, p)) {
                *m += v;
            }
        }
        let tol = 3.0 / (p as f64 * (draws as f64).sqrt());
        for (m, v) in mean.iter().zip(x) {
            let err = (m / draws as f64 - v).abs();
            assert!(err <= tol, "mean error {err} > {tol}");
        }
    }

    #[test]
    fn clipping_moves_only_out_of_range_entries() {
        let mut x = vec![0.2, 1.5, -3.0, f64::INFINITY, -0.999];
        assert_eq!(clip(&mut x, CLIP_EPSILON), 3);
        assert_eq!(x[0], 0.2);
        assert_eq!(x[1], 1.0 - CLIP_EPSILON);
        assert_eq!(x[2], -(1.0 - CLIP_EPSILON));
        assert_eq!(x[3], 0.0);
    }
}
