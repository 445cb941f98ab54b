//! Constant-size commitments to LCC sharings.
//!
//! A trusted setup publishes `B = [g^{gamma^0}, ..., g^{gamma^{L-1}}]` and
//! forgets `gamma`. Each encoded block `w` is committed as
//! `c = prod_p B[p]^{w[p]} = g^{W(gamma)}` with `W(t) = sum_p w[p] t^p`, so a
//! sharing of any length costs `K + T` group elements. A share
//! `s = sum_k L_k(alpha_j) w_k` is checked in the exponent:
//! `prod_p B[p]^{s[p]} == prod_k c_k^{L_k(alpha_j)}`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::{Fe, FieldParams};
use crate::group::{Group, GroupElement, MontElement};
use crate::lcc::{Lcc, LccError, Share};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommitmentVector {
    pub owner: usize,
    pub elements: Vec<GroupElement>,
}

/// Public output of the trusted setup.
#[derive(Clone, Debug)]
pub struct CommitSetup {
    group: Group,
    bases: Vec<GroupElement>,
    bases_mont: Vec<MontElement>,
}

impl CommitSetup {
    /// Runs the trusted setup. `gamma` lives only inside this call.
    pub fn generate<R: Rng + ?Sized>(
        params: &FieldParams,
        len: usize,
        rng: &mut R,
    ) -> Result<Self, crate::field::FieldError> {
        let field = params.field()?;
        let gamma = loop {
            let g = field.random(rng);
            if !g.is_zero() {
                break g;
            }
        };
        Self::from_secret(params, gamma, len)
    }

    /// Deterministic setup from a known `gamma`; for tests and vectors only.
    pub fn from_secret(
        params: &FieldParams,
        gamma: Fe,
        len: usize,
    ) -> Result<Self, crate::field::FieldError> {
        let field = params.field()?;
        let group = params.group()?;
        let mut power = Fe::ONE;
        let mut bases = Vec::with_capacity(len);
        for _ in 0..len {
            bases.push(group.exp(group.generator(), power));
            power = field.mul(power, gamma);
        }
        Ok(Self::from_public(group, bases))
    }

    /// Rebuilds the setup from its published vector `B`.
    pub fn from_public(group: Group, bases: Vec<GroupElement>) -> Self {
        let bases_mont = bases.iter().map(|b| group.to_mont(*b)).collect();
        Self {
            group,
            bases,
            bases_mont,
        }
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn bases(&self) -> &[GroupElement] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    fn check_len(&self, len: usize) -> Result<(), LccError> {
        if len > self.bases.len() {
            return Err(LccError::Param(format!(
                "vector of length {len} exceeds commitment basis of length {}",
                self.bases.len()
            )));
        }
        Ok(())
    }

    /// `prod_p B[p]^{w[p]}`
    pub fn commit_block(&self, block: &[Fe]) -> Result<GroupElement, LccError> {
        self.check_len(block.len())?;
        Ok(self.group.multi_exp(&self.bases_mont[..block.len()], block))
    }

    pub fn commit_blocks(&self, owner: usize, blocks: &[Vec<Fe>]) -> Result<CommitmentVector, LccError> {
        let elements = blocks
            .iter()
            .map(|b| self.commit_block(b))
            .collect::<Result<_, _>>()?;
        Ok(CommitmentVector { owner, elements })
    }

    /// Checks one share against its owner's commitment.
    pub fn verify(&self, lcc: &Lcc, share: &Share, commitment: &CommitmentVector) -> bool {
        self.verify_payload(lcc, share.holder, &share.payload, commitment)
    }

    pub fn verify_payload(
        &self,
        lcc: &Lcc,
        holder: usize,
        payload: &[Fe],
        commitment: &CommitmentVector,
    ) -> bool {
        if commitment.elements.len() != lcc.params().width()
            || payload.len() > self.bases.len()
            || holder >= lcc.n()
        {
            return false;
        }
        if commitment
            .elements
            .iter()
            .any(|c| !self.group.in_subgroup(*c))
        {
            return false;
        }
        let lhs = self.group.multi_exp(&self.bases_mont[..payload.len()], payload);
        let c_mont: Vec<MontElement> = commitment
            .elements
            .iter()
            .map(|c| self.group.to_mont(*c))
            .collect();
        let rhs = self
            .group
            .multi_exp(&c_mont, lcc.lagrange_at_holder(holder));
        lhs == rhs
    }
}

/// Commits to the sharing of `secret` with the given noise blocks.
pub fn lcc_commit(
    lcc: &Lcc,
    setup: &CommitSetup,
    owner: usize,
    secret: &[Fe],
    noise: &[Vec<Fe>],
) -> Result<CommitmentVector, LccError> {
    let blocks = lcc.blocks(secret, noise)?;
    setup.commit_blocks(owner, &blocks)
}

/// Longest vector the setup must support for a field of size `q`; helper for
/// callers sizing `B`.
pub fn required_len(piece_lens: impl IntoIterator<Item = usize>) -> usize {
    piece_lens.into_iter().max().unwrap_or(1).max(1)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcc::LccParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn toy_params() -> FieldParams {
        FieldParams {
            q: 11,
            lambda: 23,
            g: 4,
            p: 1,
        }
    }

    #[test]
    fn hand_computed_commitment() {
        let params = toy_params();
        let f = params.field().unwrap();
        let setup = CommitSetup::from_secret(&params, f.elem(3), 2).unwrap();
        // B = [4^1, 4^3] = [4, 18]
        assert_eq!(setup.bases()[0].value(), 4);
        assert_eq!(setup.bases()[1].value(), 18);
        let c = setup.commit_block(&[f.elem(2), f.elem(1)]).unwrap();
        assert_eq!(c.value(), 12);
    }

    #[test]
    fn zero_and_unit_blocks() {
        let params = FieldParams::default();
        let f = params.field().unwrap();
        let setup = CommitSetup::generate(&params, 4, &mut ChaCha20Rng::seed_from_u64(1)).unwrap();
        let group = setup.group().clone();
        assert_eq!(setup.commit_block(&[Fe::ZERO; 4]).unwrap(), group.identity());
        let unit = [Fe::ONE, Fe::ZERO, Fe::ZERO];
        assert_eq!(setup.commit_block(&unit).unwrap(), group.generator());
        assert!(setup.commit_block(&f.random_vec(&mut ChaCha20Rng::seed_from_u64(2), 5)).is_err());
    }

    fn fixture() -> (Lcc, CommitSetup, ChaCha20Rng) {
        let params = FieldParams::default();
        let f = params.field().unwrap();
        let lcc = Lcc::new(f, LccParams::standard(&f, 6, 2, 2).unwrap());
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        let setup = CommitSetup::generate(&params, 8, &mut rng).unwrap();
        (lcc, setup, rng)
    }

    #[test]
    fn honest_shares_verify() {
        let (lcc, setup, mut rng) = fixture();
        let f = *lcc.field();
        for _ in 0..50 {
            let secret = f.random_vec(&mut rng, 15);
            let sharing = lcc.share(3, &secret, &mut rng).unwrap();
            let c = lcc_commit(&lcc, &setup, 3, &secret, &sharing.noise).unwrap();
            for s in &sharing.shares {
                assert!(setup.verify(&lcc, s, &c));
            }
        }
    }

    #[test]
    fn tampered_share_or_foreign_commitment_fails() {
        let (lcc, setup, mut rng) = fixture();
        let f = *lcc.field();
        let secret = f.random_vec(&mut rng, 15);
        let sharing = lcc.share(0, &secret, &mut rng).unwrap();
        let c = lcc_commit(&lcc, &setup, 0, &secret, &sharing.noise).unwrap();
        let mut bad = sharing.shares[2].clone();
        bad.payload[4] = f.add(bad.payload[4], Fe::ONE);
        assert!(!setup.verify(&lcc, &bad, &c));

        let other = f.random_vec(&mut rng, 15);
        let other_sharing = lcc.share(0, &other, &mut rng).unwrap();
        let c_other = lcc_commit(&lcc, &setup, 0, &other, &other_sharing.noise).unwrap();
        assert!(!setup.verify(&lcc, &sharing.shares[2], &c_other));

        let mut short = c.clone();
        short.elements.pop();
        assert!(!setup.verify(&lcc, &sharing.shares[2], &short));
    }
}
