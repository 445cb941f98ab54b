//! Prime-field arithmetic over `F_q` for word-sized moduli.
//!
//! Elements are stored canonically in `[0, q)`. The modulus is restricted to
//! `q < 2^32` so that a product of two reduced elements fits in a `u64`
//! before reduction; every arithmetic routine relies on this.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::group::Group;

/// Largest modulus accepted by [`Field::new`].
pub const MAX_MODULUS: u64 = 1 << 32;

/// Default 31-bit modulus used by the desk-scale configuration.
pub const DEFAULT_Q: u64 = 2_147_483_659;
/// Prime order of the ambient group for commitments; `DEFAULT_Q | DEFAULT_LAMBDA - 1`.
pub const DEFAULT_LAMBDA: u64 = 4_611_686_097_884_283_167;
/// Element of order `DEFAULT_Q` modulo `DEFAULT_LAMBDA`.
pub const DEFAULT_G: u64 = 3_275_279_164_859_703_424;
/// Default quantization amplifier.
pub const DEFAULT_P: u64 = 1_000;

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("value {0} is outside the open interval (-1, 1)")]
    Domain(f64),
    #[error("invalid field parameters: {0}")]
    Param(String),
}

/// An element of `F_q`, always reduced.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Fe(u64);

impl Fe {
    pub const ZERO: Fe = Fe(0);
    pub const ONE: Fe = Fe(1);

    #[inline]
    pub fn value(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::fmt::Display for Fe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arithmetic context for a prime field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Field {
    q: u64,
}

impl Field {
    pub fn new(q: u64) -> Result<Self, FieldError> {
        if !(3..MAX_MODULUS).contains(&q) {
            return Err(FieldError::Param(format!(
                "modulus {q} must lie in [3, 2^32)"
            )));
        }
        if !is_prime(q) {
            return Err(FieldError::Param(format!("modulus {q} is not prime")));
        }
        Ok(Self { q })
    }

    #[inline]
    pub fn modulus(&self) -> u64 {
        self.q
    }

    /// Reduces an arbitrary integer into the field.
    #[inline]
    pub fn elem(&self, v: u64) -> Fe {
        Fe(v % self.q)
    }

    /// Accepts a value already known to be canonical.
    #[inline]
    pub fn checked_elem(&self, v: u64) -> Option<Fe> {
        (v < self.q).then_some(Fe(v))
    }

    #[inline]
    pub fn from_i64(&self, v: i64) -> Fe {
        let q = self.q as i128;
        Fe((v as i128).rem_euclid(q) as u64)
    }

    /// Centered representative in `(-(q-1)/2, (q-1)/2]`.
    #[inline]
    pub fn centered(&self, a: Fe) -> i64 {
        if a.0 > (self.q - 1) / 2 {
            a.0 as i64 - self.q as i64
        } else {
            a.0 as i64
        }
    }

    #[inline]
    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        let s = a.0 + b.0;
        Fe(if s >= self.q { s - self.q } else { s })
    }

    #[inline]
    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        Fe(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.q - b.0
        })
    }

    #[inline]
    pub fn neg(&self, a: Fe) -> Fe {
        if a.0 == 0 {
            a
        } else {
            Fe(self.q - a.0)
        }
    }

    #[inline]
    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        Fe(a.0 * b.0 % self.q)
    }

    pub fn pow(&self, a: Fe, mut e: u64) -> Fe {
        let mut base = a;
        let mut acc = Fe::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn try_inv(&self, a: Fe) -> Option<Fe> {
        if a.is_zero() {
            return None;
        }
        // Extended Euclid on signed integers; q < 2^32 so i64 never overflows.
        let (mut r0, mut r1) = (self.q as i64, a.0 as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let quot = r0 / r1;
            (r0, r1) = (r1, r0 - quot * r1);
            (t0, t1) = (t1, t0 - quot * t1);
        }
        debug_assert_eq!(r0, 1);
        Some(self.from_i64(t0))
    }

    /// Inverse of a nonzero element.
    ///
    /// Panics on zero; callers only invert differences of distinct points.
    #[inline]
    pub fn inv(&self, a: Fe) -> Fe {
        self.try_inv(a).expect("inverse of zero")
    }

    #[inline]
    pub fn div(&self, a: Fe, b: Fe) -> Fe {
        self.mul(a, self.inv(b))
    }

    pub fn random<R: Rng + ?Sized>(&self, rng: &mut R) -> Fe {
        Fe(rng.gen_range(0..self.q))
    }

    pub fn random_vec<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<Fe> {
        (0..len).map(|_| self.random(rng)).collect()
    }

    /// `acc[i] += x[i]`
    pub fn add_assign(&self, acc: &mut [Fe], x: &[Fe]) {
        debug_assert_eq!(acc.len(), x.len());
        for (a, b) in acc.iter_mut().zip(x) {
            *a = self.add(*a, *b);
        }
    }

    /// `acc[i] += s * x[i]`
    pub fn axpy(&self, acc: &mut [Fe], s: Fe, x: &[Fe]) {
        debug_assert_eq!(acc.len(), x.len());
        if s.is_zero() {
            return;
        }
        for (a, b) in acc.iter_mut().zip(x) {
            *a = Fe((a.0 + s.0 * b.0) % self.q);
        }
    }

    pub fn dot(&self, a: &[Fe], b: &[Fe]) -> Fe {
        debug_assert_eq!(a.len(), b.len());
        // Products are < 2^64; a u128 accumulator absorbs 2^64 of them.
        let acc: u128 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x.0 * y.0) as u128)
            .sum();
        Fe((acc % self.q as u128) as u64)
    }

    pub fn sum(&self, xs: impl IntoIterator<Item = Fe>) -> Fe {
        xs.into_iter().fold(Fe::ZERO, |a, b| self.add(a, b))
    }

    /// Inverts every element with one field inversion (Montgomery's trick).
    pub fn batch_inv(&self, xs: &[Fe]) -> Vec<Fe> {
        let mut prefix = Vec::with_capacity(xs.len());
        let mut acc = Fe::ONE;
        for &x in xs {
            prefix.push(acc);
            acc = self.mul(acc, x);
        }
        let mut inv = self.inv(acc);
        let mut out = vec![Fe::ZERO; xs.len()];
        for i in (0..xs.len()).rev() {
            out[i] = self.mul(inv, prefix[i]);
            inv = self.mul(inv, xs[i]);
        }
        out
    }
}

/// Public parameters tying the share field, the commitment group and the
/// quantization amplifier together.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldParams {
    pub q: u64,
    pub lambda: u64,
    pub g: u64,
    pub p: u64,
}

impl Default for FieldParams {
    fn default() -> Self {
        Self {
            q: DEFAULT_Q,
            lambda: DEFAULT_LAMBDA,
            g: DEFAULT_G,
            p: DEFAULT_P,
        }
    }
}

impl FieldParams {
    /// Derives a commitment group for an arbitrary prime `q`: the smallest
    /// prime `lambda = m q + 1` with `m >= 2` and a generator of the order-`q`
    /// subgroup.
    pub fn for_modulus(q: u64, p: u64) -> Result<Self, FieldError> {
        Field::new(q)?;
        let mut m = 2u64;
        let lambda = loop {
            let cand = m
                .checked_mul(q)
                .and_then(|v| v.checked_add(1))
                .filter(|v| *v < 1 << 63)
                .ok_or_else(|| FieldError::Param(format!("no group prime found for q={q}")))?;
            if is_prime(cand) {
                break cand;
            }
            m += 2;
        };
        let g = (2..)
            .map(|h| mod_pow_u64(h, (lambda - 1) / q, lambda))
            .find(|&g| g != 1)
            .expect("some base generates the subgroup");
        Ok(Self { q, lambda, g, p })
    }

    pub fn field(&self) -> Result<Field, FieldError> {
        Field::new(self.q)
    }

    pub fn group(&self) -> Result<Group, FieldError> {
        Group::new(self.lambda, self.q, self.g)
    }

    /// Checks every invariant, including the no-wraparound bound for `n` users.
    pub fn validate(&self, n: usize) -> Result<(), FieldError> {
        self.field()?;
        if self.lambda >= 1 << 63 || !is_prime(self.lambda) {
            return Err(FieldError::Param(format!(
                "lambda {} must be a prime below 2^63",
                self.lambda
            )));
        }
        if !(self.lambda - 1).is_multiple_of(self.q) {
            return Err(FieldError::Param("q must divide lambda - 1".into()));
        }
        if self.g <= 1 || self.g >= self.lambda || mod_pow_u64(self.g, self.q, self.lambda) != 1 {
            return Err(FieldError::Param(format!(
                "g={} does not have order q modulo lambda",
                self.g
            )));
        }
        if self.p == 0 {
            return Err(FieldError::Param("amplifier p must be at least 1".into()));
        }
        let bound = 2u128 * self.p as u128 * n as u128 * self.p as u128;
        if bound >= self.q as u128 {
            return Err(FieldError::Param(format!(
                "2*p*N*p = {bound} must be below q = {}",
                self.q
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn mul_mod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn mod_pow_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod_u64(acc, b, m);
        }
        b = mul_mod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = mod_pow_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn default_params_are_valid() {
        FieldParams::default().validate(10).unwrap();
    }

    #[test]
    fn wraparound_bound_is_enforced() {
        let params = FieldParams {
            p: 10_000,
            ..FieldParams::default()
        };
        params.validate(10).unwrap();
        assert!(params.validate(11).is_err());
    }

    #[test]
    fn small_group_derivation() {
        let params = FieldParams::for_modulus(11, 1).unwrap();
        assert_eq!((params.lambda - 1) % 11, 0);
        assert_eq!(mod_pow_u64(params.g, 11, params.lambda), 1);
        params.validate(0).unwrap();
    }

    #[test]
    fn rejects_composite_modulus() {
        assert!(Field::new(15).is_err());
        assert!(Field::new(1 << 32).is_err());
    }

    #[test]
    fn centered_representatives() {
        let f = Field::new(17).unwrap();
        assert_eq!(f.centered(f.from_i64(-3)), -3);
        assert_eq!(f.centered(Fe(8)), 8);
        assert_eq!(f.centered(Fe(9)), -8);
    }

    #[test]
    fn field_axioms_hold_on_random_triples() {
        let f = Field::new(DEFAULT_Q).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (a, b, c) = (f.random(&mut rng), f.random(&mut rng), f.random(&mut rng));
            assert_eq!(f.add(f.add(a, b), c), f.add(a, f.add(b, c)));
            assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            if !a.is_zero() {
                assert_eq!(f.mul(a, f.inv(a)), Fe::ONE);
            }
        }
    }

    #[test]
    fn batch_inversion_matches_single() {
        let f = Field::new(10_007).unwrap();
        let xs: Vec<Fe> = (1..50).map(|v| f.elem(v * 37)).collect();
        let inv = f.batch_inv(&xs);
        for (x, i) in xs.iter().zip(&inv) {
            assert_eq!(*i, f.inv(*x));
        }
    }

    #[test]
    fn primality_spot_checks() {
        assert!(is_prime(DEFAULT_Q));
        assert!(is_prime(DEFAULT_LAMBDA));
        assert!(!is_prime(DEFAULT_LAMBDA - 2));
        assert!(is_prime(10_007));
        assert!(!is_prime(561));
    }
}
