//! The order-`q` subgroup of `Z_lambda^*` used for share commitments.
//!
//! Arithmetic runs in Montgomery form with `R = 2^64`, which requires
//! `lambda < 2^63` so that the REDC intermediate fits in a `u128`.

use serde::{Deserialize, Serialize};

use crate::field::{mod_pow_u64, Fe, FieldError};

/// A group element in canonical (non-Montgomery) form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupElement(u64);

impl GroupElement {
    pub fn value(self) -> u64 {
        self.0
    }
}

/// Montgomery-form element; only meaningful together with its [`Group`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MontElement(u64);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    lambda: u64,
    q: u64,
    g: u64,
    neg_inv: u64,
    r2: u64,
    one: MontElement,
}

impl Group {
    pub fn new(lambda: u64, q: u64, g: u64) -> Result<Self, FieldError> {
        if lambda.is_multiple_of(2) || !(3..1 << 63).contains(&lambda) {
            return Err(FieldError::Param(format!(
                "lambda {lambda} must be odd and below 2^63"
            )));
        }
        // Newton iteration for lambda^{-1} mod 2^64.
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(lambda.wrapping_mul(inv)));
        }
        debug_assert_eq!(lambda.wrapping_mul(inv), 1);
        let r = ((1u128 << 64) % lambda as u128) as u64;
        let r2 = ((r as u128 * r as u128) % lambda as u128) as u64;
        Ok(Self {
            lambda,
            q,
            g,
            neg_inv: inv.wrapping_neg(),
            r2,
            one: MontElement(r),
        })
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn order(&self) -> u64 {
        self.q
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g)
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(1)
    }

    /// Accepts a raw residue, rejecting values outside `[1, lambda)`.
    pub fn element(&self, v: u64) -> Option<GroupElement> {
        (v >= 1 && v < self.lambda).then_some(GroupElement(v))
    }

    /// Membership in the order-`q` subgroup.
    pub fn in_subgroup(&self, a: GroupElement) -> bool {
        a.0 >= 1 && a.0 < self.lambda && mod_pow_u64(a.0, self.q, self.lambda) == 1
    }

    #[inline]
    fn redc(&self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.neg_inv);
        let u = ((t + m as u128 * self.lambda as u128) >> 64) as u64;
        if u >= self.lambda {
            u - self.lambda
        } else {
            u
        }
    }

    #[inline]
    pub fn mont_mul(&self, a: MontElement, b: MontElement) -> MontElement {
        MontElement(self.redc(a.0 as u128 * b.0 as u128))
    }

    #[inline]
    pub fn to_mont(&self, a: GroupElement) -> MontElement {
        MontElement(self.redc(a.0 as u128 * self.r2 as u128))
    }

    #[inline]
    pub fn from_mont(&self, a: MontElement) -> GroupElement {
        GroupElement(self.redc(a.0 as u128))
    }

    pub fn mont_one(&self) -> MontElement {
        self.one
    }

    pub fn mul(&self, a: GroupElement, b: GroupElement) -> GroupElement {
        self.from_mont(self.mont_mul(self.to_mont(a), self.to_mont(b)))
    }

    fn mont_pow(&self, base: MontElement, mut e: u64) -> MontElement {
        let mut acc = self.one;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mont_mul(acc, b);
            }
            b = self.mont_mul(b, b);
            e >>= 1;
        }
        acc
    }

    pub fn exp(&self, base: GroupElement, e: Fe) -> GroupElement {
        self.from_mont(self.mont_pow(self.to_mont(base), e.value()))
    }

    /// `prod_i bases[i]^exps[i]`, bases given in Montgomery form.
    ///
    /// Uses a bucketed (Pippenger) evaluation once the input is large enough
    /// to amortize the buckets.
    pub fn multi_exp(&self, bases: &[MontElement], exps: &[Fe]) -> GroupElement {
        assert_eq!(bases.len(), exps.len(), "multi_exp length mismatch");
        let n = bases.len();
        if n < 16 {
            let acc = bases
                .iter()
                .zip(exps)
                .fold(self.one, |acc, (b, e)| {
                    self.mont_mul(acc, self.mont_pow(*b, e.value()))
                });
            return self.from_mont(acc);
        }
        let bits = 64 - (self.q - 1).leading_zeros() as usize;
        let c = match n {
            0..=63 => 3,
            64..=255 => 4,
            256..=1023 => 5,
            1024..=4095 => 7,
            _ => 9,
        };
        let windows = bits.div_ceil(c);
        let mask = (1u64 << c) - 1;
        let mut buckets = vec![self.one; (1 << c) - 1];
        let mut result = self.one;
        for w in (0..windows).rev() {
            for _ in 0..c {
                result = self.mont_mul(result, result);
            }
            buckets.fill(self.one);
            let shift = w * c;
            for (b, e) in bases.iter().zip(exps) {
                let idx = (e.value() >> shift) & mask;
                if idx != 0 {
                    let slot = &mut buckets[idx as usize - 1];
                    *slot = self.mont_mul(*slot, *b);
                }
            }
            let mut running = self.one;
            let mut acc = self.one;
            for bucket in buckets.iter().rev() {
                running = self.mont_mul(running, *bucket);
                acc = self.mont_mul(acc, running);
            }
            result = self.mont_mul(result, acc);
        }
        self.from_mont(result)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Field, FieldParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy() -> (Group, Field) {
        (Group::new(23, 11, 4).unwrap(), Field::new(11).unwrap())
    }

    #[test]
    fn toy_group_examples() {
        let (grp, f) = toy();
        let g = grp.generator();
        assert_eq!(grp.exp(g, Fe::ZERO), grp.identity());
        assert_eq!(grp.exp(g, f.elem(2)).value(), 16);
        // g^q == 1, expressed through the field-reduced exponent path
        assert_eq!(mod_pow_u64(g.value(), 11, 23), 1);
        assert_eq!(grp.mul(GroupElement(16), GroupElement(18)).value(), 12);
    }

    #[test]
    fn exponent_homomorphism() {
        let params = FieldParams::default();
        let grp = params.group().unwrap();
        let f = params.field().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let g = grp.generator();
        for _ in 0..200 {
            let (a, b) = (f.random(&mut rng), f.random(&mut rng));
            assert_eq!(
                grp.mul(grp.exp(g, a), grp.exp(g, b)),
                grp.exp(g, f.add(a, b))
            );
        }
        assert!(grp.in_subgroup(grp.exp(g, f.elem(12345))));
    }

    #[test]
    fn multi_exp_matches_naive() {
        let params = FieldParams::default();
        let grp = params.group().unwrap();
        let f = params.field().unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        for n in [1usize, 5, 16, 40, 100, 300] {
            let bases: Vec<GroupElement> = (0..n)
                .map(|_| grp.exp(grp.generator(), f.random(&mut rng)))
                .collect();
            let exps = f.random_vec(&mut rng, n);
            let naive = bases
                .iter()
                .zip(&exps)
                .fold(grp.identity(), |acc, (b, e)| grp.mul(acc, grp.exp(*b, *e)));
            let mont: Vec<MontElement> = bases.iter().map(|b| grp.to_mont(*b)).collect();
            assert_eq!(grp.multi_exp(&mont, &exps), naive, "n={n}");
        }
    }
}
