//! Lagrange Coded Computing secret sharing.
//!
//! A secret vector is zero-padded to `K * ceil(d/K)`, cut into `K` pieces and
//! extended with `T` uniformly random noise blocks. The encoding polynomial
//! `f` of degree `K + T - 1` satisfies `f(beta_k) = block_k`; holder `j`
//! receives `f(alpha_j)`. Any `K + T` shares determine `f`, any `T` reveal
//! nothing about the pieces.
//!
//! Shares of different secrets under the same parameters add coordinate-wise,
//! and the sum reconstructs to the sum of the secrets.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::{Fe, Field};
use crate::poly;
use crate::reed_solomon::{gao_decode, DecodeError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LccError {
    #[error("invalid LCC parameters: {0}")]
    Param(String),
    #[error("need {needed} shares to reconstruct, got {got}")]
    InsufficientShares { needed: usize, got: usize },
    #[error("shares are not within decoding distance of a codeword")]
    DecodeFailure,
}

impl From<DecodeError> for LccError {
    fn from(e: DecodeError) -> Self {
        match e {
            DecodeError::Insufficient { needed, got } => LccError::InsufficientShares { needed, got },
            DecodeError::TooManyErrors => LccError::DecodeFailure,
        }
    }
}

/// How `recon` treats the supplied shares.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    /// Interpolate through the first `K + T` shares.
    #[default]
    Erasure,
    /// Gao-decode every coordinate, correcting up to `(n' - K - T) / 2` errors.
    ErrorCorrecting,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LccParams {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub alphas: Vec<Fe>,
    pub betas: Vec<Fe>,
}

impl LccParams {
    pub fn new(
        field: &Field,
        n: usize,
        k: usize,
        t: usize,
        alphas: Vec<Fe>,
        betas: Vec<Fe>,
    ) -> Result<Self, LccError> {
        if k == 0 {
            return Err(LccError::Param("K must be at least 1".into()));
        }
        if k + t >= n {
            return Err(LccError::Param(format!(
                "K + T = {} must be below N = {n}",
                k + t
            )));
        }
        if alphas.len() != n || betas.len() != k + t {
            return Err(LccError::Param(format!(
                "expected {n} alphas and {} betas, got {} and {}",
                k + t,
                alphas.len(),
                betas.len()
            )));
        }
        let mut all: Vec<u64> = alphas.iter().chain(&betas).map(|v| v.value()).collect();
        if all.iter().any(|&v| v >= field.modulus()) {
            return Err(LccError::Param("evaluation point outside the field".into()));
        }
        all.sort_unstable();
        all.dedup();
        if all.len() != n + k + t {
            return Err(LccError::Param("evaluation points must be pairwise distinct".into()));
        }
        Ok(Self {
            n,
            k,
            t,
            alphas,
            betas,
        })
    }

    /// `alpha_i = i` for `i = 1..=N`, `beta_k = N + k` for `k = 1..=K+T`.
    pub fn standard(field: &Field, n: usize, k: usize, t: usize) -> Result<Self, LccError> {
        if (n + k + t) as u64 >= field.modulus() {
            return Err(LccError::Param(format!(
                "field of size {} too small for {} evaluation points",
                field.modulus(),
                n + k + t
            )));
        }
        let alphas = (1..=n as u64).map(|v| field.elem(v)).collect();
        let betas = (1..=(k + t) as u64).map(|v| field.elem(n as u64 + v)).collect();
        Self::new(field, n, k, t, alphas, betas)
    }

    /// Number of encoded blocks, `K + T`.
    pub fn width(&self) -> usize {
        self.k + self.t
    }

    /// Piece length `ceil(d / K)`.
    pub fn piece_len(&self, d: usize) -> usize {
        d.div_ceil(self.k)
    }
}

/// `[x_i]_j`: the evaluation of owner `i`'s encoding polynomial at `alpha_j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Share {
    pub owner: usize,
    pub holder: usize,
    pub payload: Vec<Fe>,
}

/// Output of [`Lcc::share`]: one share per holder plus the noise blocks
/// (needed to commit to the sharing).
#[derive(Clone, Debug)]
pub struct Sharing {
    pub shares: Vec<Share>,
    pub noise: Vec<Vec<Fe>>,
}

/// Precomputed encoder/decoder for one parameter set.
#[derive(Clone, Debug)]
pub struct Lcc {
    field: Field,
    params: LccParams,
    /// `enc[j][k] = L_k(alpha_j)` over the anchors `beta`.
    enc: Vec<Vec<Fe>>,
    /// `public[j][k]`: degree-(K-1) basis over `beta_1..beta_K` at `alpha_j`,
    /// used to embed public packed vectors.
    public: Vec<Vec<Fe>>,
}

impl Lcc {
    pub fn new(field: Field, params: LccParams) -> Self {
        let enc = params
            .alphas
            .iter()
            .map(|&a| poly::lagrange_weights(&field, &params.betas, a))
            .collect();
        let data_anchors = &params.betas[..params.k];
        let public = params
            .alphas
            .iter()
            .map(|&a| poly::lagrange_weights(&field, data_anchors, a))
            .collect();
        Self {
            field,
            params,
            enc,
            public,
        }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn params(&self) -> &LccParams {
        &self.params
    }

    pub fn n(&self) -> usize {
        self.params.n
    }

    /// `L_k(alpha_holder)` for every anchor `k`.
    pub fn lagrange_at_holder(&self, holder: usize) -> &[Fe] {
        &self.enc[holder]
    }

    /// Splits `secret` into the `K` zero-padded pieces followed by `noise`.
    pub fn blocks(&self, secret: &[Fe], noise: &[Vec<Fe>]) -> Result<Vec<Vec<Fe>>, LccError> {
        let len = self.params.piece_len(secret.len()).max(1);
        if noise.len() != self.params.t || noise.iter().any(|z| z.len() != len) {
            return Err(LccError::Param(format!(
                "expected {} noise blocks of length {len}",
                self.params.t
            )));
        }
        let mut blocks: Vec<Vec<Fe>> = (0..self.params.k)
            .map(|k| {
                let mut piece: Vec<Fe> = secret.iter().skip(k * len).take(len).copied().collect();
                piece.resize(len, Fe::ZERO);
                piece
            })
            .collect();
        blocks.extend(noise.iter().cloned());
        Ok(blocks)
    }

    pub fn draw_noise<R: Rng + ?Sized>(&self, d: usize, rng: &mut R) -> Vec<Vec<Fe>> {
        let len = self.params.piece_len(d).max(1);
        (0..self.params.t)
            .map(|_| self.field.random_vec(rng, len))
            .collect()
    }

    /// Evaluates the encoding polynomial defined by `blocks` at `alpha_holder`.
    pub fn encode_for(&self, blocks: &[Vec<Fe>], holder: usize) -> Vec<Fe> {
        let len = blocks.first().map_or(0, Vec::len);
        let mut out = vec![Fe::ZERO; len];
        for (coef, block) in self.enc[holder].iter().zip(blocks) {
            self.field.axpy(&mut out, *coef, block);
        }
        out
    }

    pub fn share_with_noise(
        &self,
        owner: usize,
        secret: &[Fe],
        noise: &[Vec<Fe>],
    ) -> Result<Vec<Share>, LccError> {
        let blocks = self.blocks(secret, noise)?;
        Ok((0..self.params.n)
            .map(|holder| Share {
                owner,
                holder,
                payload: self.encode_for(&blocks, holder),
            })
            .collect())
    }

    pub fn share<R: Rng + ?Sized>(
        &self,
        owner: usize,
        secret: &[Fe],
        rng: &mut R,
    ) -> Result<Sharing, LccError> {
        let noise = self.draw_noise(secret.len(), rng);
        let shares = self.share_with_noise(owner, secret, &noise)?;
        Ok(Sharing { shares, noise })
    }

    /// Share of a public packed vector: `values[k]` is the content of slot `k`
    /// (all of equal length). Adding it to a sharing of `s` yields a sharing
    /// of `s + values` without raising the degree.
    pub fn public_share(&self, values: &[Vec<Fe>], holder: usize) -> Vec<Fe> {
        debug_assert_eq!(values.len(), self.params.k);
        let len = values.first().map_or(0, Vec::len);
        let mut out = vec![Fe::ZERO; len];
        for (coef, v) in self.public[holder].iter().zip(values) {
            self.field.axpy(&mut out, *coef, v);
        }
        out
    }

    /// Recovers all `K + T` blocks from the given `(holder, payload)` pairs.
    pub fn decode_blocks(
        &self,
        shares: &[(usize, &[Fe])],
        mode: DecodeMode,
    ) -> Result<(Vec<Vec<Fe>>, Vec<usize>), LccError> {
        let width = self.params.width();
        if shares.len() < width {
            return Err(LccError::InsufficientShares {
                needed: width,
                got: shares.len(),
            });
        }
        let len = shares[0].1.len();
        if shares.iter().any(|(_, p)| p.len() != len) {
            return Err(LccError::Param("share payloads differ in length".into()));
        }
        let f = &self.field;
        match mode {
            DecodeMode::Erasure => {
                let used = &shares[..width];
                let xs: Vec<Fe> = used.iter().map(|(h, _)| self.params.alphas[*h]).collect();
                let mut blocks = Vec::with_capacity(width);
                for &beta in &self.params.betas {
                    let w = poly::lagrange_weights(f, &xs, beta);
                    let mut block = vec![Fe::ZERO; len];
                    for (coef, (_, payload)) in w.iter().zip(used) {
                        f.axpy(&mut block, *coef, payload);
                    }
                    blocks.push(block);
                }
                Ok((blocks, Vec::new()))
            }
            DecodeMode::ErrorCorrecting => {
                let xs: Vec<Fe> = shares.iter().map(|(h, _)| self.params.alphas[*h]).collect();
                let mut blocks = vec![vec![Fe::ZERO; len]; width];
                let mut bad = std::collections::BTreeSet::new();
                let mut column = vec![Fe::ZERO; shares.len()];
                for pos in 0..len {
                    for (c, (_, payload)) in column.iter_mut().zip(shares) {
                        *c = payload[pos];
                    }
                    let decoded = gao_decode(f, &xs, &column, width)?;
                    for (block, &beta) in blocks.iter_mut().zip(&self.params.betas) {
                        block[pos] = poly::eval(f, &decoded.message, beta);
                    }
                    bad.extend(decoded.error_positions.iter().map(|&i| shares[i].0));
                }
                if 2 * bad.len() > shares.len() - width {
                    return Err(LccError::DecodeFailure);
                }
                Ok((blocks, bad.into_iter().collect()))
            }
        }
    }

    /// Reconstructs the first `d` entries of the shared secret.
    pub fn recon(
        &self,
        shares: &[(usize, &[Fe])],
        d: usize,
        mode: DecodeMode,
    ) -> Result<Vec<Fe>, LccError> {
        let (blocks, _) = self.decode_blocks(shares, mode)?;
        let mut out: Vec<Fe> = blocks
            .into_iter()
            .take(self.params.k)
            .flatten()
            .collect();
        out.truncate(d);
        Ok(out)
    }

    /// Convenience wrapper over [`Share`] values.
    pub fn recon_shares(&self, shares: &[Share], d: usize, mode: DecodeMode) -> Result<Vec<Fe>, LccError> {
        let pairs: Vec<(usize, &[Fe])> = shares.iter().map(|s| (s.holder, &s.payload[..])).collect();
        self.recon(&pairs, d, mode)
    }

    /// Decodes a scalar sharing under the hypothesis that every data slot is
    /// zero: the polynomial is `Z(x) g(x)` with `Z = prod_{k<=K}(x - beta_k)`
    /// and `deg g < T`. Returns the holders whose values disagree with the
    /// decoded codeword, or `DecodeFailure` if no zero-slot codeword is within
    /// `(n - T) / 2` of the word.
    pub fn decode_zero(&self, shares: &[(usize, Fe)]) -> Result<Vec<usize>, LccError> {
        let f = &self.field;
        let t = self.params.t;
        let n = shares.len();
        let anchors = &self.params.betas[..self.params.k];
        let zs: Vec<Fe> = shares
            .iter()
            .map(|(h, _)| {
                let a = self.params.alphas[*h];
                anchors.iter().fold(Fe::ONE, |acc, &b| f.mul(acc, f.sub(a, b)))
            })
            .collect();
        let z_inv = f.batch_inv(&zs);
        let reduced: Vec<Fe> = shares
            .iter()
            .zip(&z_inv)
            .map(|((_, v), zi)| f.mul(*v, *zi))
            .collect();
        if t == 0 {
            let bad: Vec<usize> = shares
                .iter()
                .filter(|(_, v)| !v.is_zero())
                .map(|(h, _)| *h)
                .collect();
            return if 2 * bad.len() <= n && n > 0 {
                Ok(bad)
            } else {
                Err(LccError::DecodeFailure)
            };
        }
        if n < t {
            return Err(LccError::InsufficientShares { needed: t, got: n });
        }
        let xs: Vec<Fe> = shares.iter().map(|(h, _)| self.params.alphas[*h]).collect();
        let decoded = gao_decode(f, &xs, &reduced, t)?;
        Ok(decoded
            .error_positions
            .into_iter()
            .map(|i| shares[i].0)
            .collect())
    }

    /// Residual of exact interpolation: number of shares that disagree with
    /// the degree-(K+T-1) polynomial through the first `K + T` of them.
    pub fn inconsistent_count(&self, shares: &[(usize, Fe)]) -> usize {
        let width = self.params.width();
        if shares.len() <= width {
            return 0;
        }
        let f = &self.field;
        let xs: Vec<Fe> = shares[..width].iter().map(|(h, _)| self.params.alphas[*h]).collect();
        let ys: Vec<Fe> = shares[..width].iter().map(|(_, v)| *v).collect();
        let coeffs = poly::interpolate(f, &xs, &ys);
        shares[width..]
            .iter()
            .filter(|(h, v)| poly::eval(f, &coeffs, self.params.alphas[*h]) != *v)
            .count()
    }
}
