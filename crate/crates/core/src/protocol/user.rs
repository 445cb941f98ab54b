use rand_chacha::ChaCha20Rng;

use super::context::{deal_for_prover, HolderTriples, Setup};
use super::messages::{
    decode, encode, Bundle, ChallengeMsg, Commitments, Forward, Opening, Openings, PassStart, Relayed,
    Reveal, RevealRequest, Round1, Round2a, Round2b,
};
use super::ProtocolError;
use crate::adversary::ProtocolAttack;
use crate::beaver;
use crate::commit::lcc_commit;
use crate::crypto::{ae_dec, ae_enc, nonce_for};
use crate::field::Fe;
use crate::quantize::{clip, quantize};
use crate::robust::{rfa_witness, sign_witness};
use crate::snip::{sigma_share, Challenge, HolderView};

/// What a user does beyond the honest protocol.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Behavior {
    pub attack: ProtocolAttack,
    /// Every corrupted index; used to pick default victims among the honest.
    pub corrupted: Vec<usize>,
}

impl Behavior {
    pub fn honest() -> Self {
        Self::default()
    }

    fn first_honest(&self, n: usize, me: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(move |i| *i != me && !self.corrupted.contains(i))
    }

    /// The `r`-th honest user for the `r`-th corrupted one, wrapping around.
    fn own_victim(&self, n: usize, me: usize) -> Option<usize> {
        let honest: Vec<usize> = self.first_honest(n, me).collect();
        let rank = self.corrupted.iter().filter(|&&c| c < me).count();
        (!honest.is_empty()).then(|| honest[rank % honest.len()])
    }
}

/// One user's state across the rounds of a single iteration.
pub struct User<'a> {
    setup: &'a Setup,
    id: usize,
    iteration: u64,
    rng: ChaCha20Rng,
    behavior: Behavior,
    /// Quantized update, length `d`.
    quantized: Option<Vec<Fe>>,
    sent: Vec<Bundle>,
    received: Vec<Option<Bundle>>,
    verified: Vec<Option<bool>>,
    dealer: Option<Vec<HolderTriples>>,
    commitments: Vec<Option<Commitments>>,
    challenge: Option<(Challenge, Fe)>,
    active: Vec<usize>,
    views: Vec<Option<HolderView>>,
}

impl<'a> User<'a> {
    pub fn new(
        setup: &'a Setup,
        id: usize,
        iteration: u64,
        rng: ChaCha20Rng,
        behavior: Behavior,
        dealer: Option<Vec<HolderTriples>>,
    ) -> Self {
        let n = setup.ctx.n();
        Self {
            setup,
            id,
            iteration,
            rng,
            behavior,
            quantized: None,
            sent: Vec::new(),
            received: vec![None; n],
            verified: vec![None; n],
            dealer,
            commitments: vec![None; n],
            challenge: None,
            active: Vec::new(),
            views: vec![None; n],
        }
    }

    pub fn id(&self) -> usize {
        self.id
    }

    /// The quantized update this user shared, if it got that far.
    pub fn quantized(&self) -> Option<&[Fe]> {
        self.quantized.as_deref()
    }

    fn silent_from(&self, round: u8) -> bool {
        matches!(self.behavior.attack, ProtocolAttack::Drop { round: r } if r <= round)
    }

    fn nonce(&self, sender: usize, recipient: usize) -> [u8; 12] {
        nonce_for(self.iteration as u32, sender as u32, recipient as u32)
    }

    /// Quantize, prove, share, commit and encrypt one bundle per recipient.
    pub fn round1(&mut self, update: &[f64]) -> Result<Option<Vec<u8>>, ProtocolError> {
        if self.silent_from(1) {
            return Ok(None);
        }
        let ctx = &self.setup.ctx;
        let f = ctx.field;
        let lcc = &ctx.lcc;
        let n = ctx.n();
        if update.len() != ctx.cfg.d {
            return Err(ProtocolError::Input(format!(
                "user {} update has length {}, expected {}",
                self.id,
                update.len(),
                ctx.cfg.d
            )));
        }
        let mut x = update.to_vec();
        clip(&mut x, ctx.cfg.clip_epsilon);
        let xq = quantize(&f, &x, ctx.cfg.field.p, &mut self.rng)?.0;

        let mut data = xq.clone();
        let aux: Vec<Fe> = match &ctx.rfa {
            Some(shape) => rfa_witness(&f, &xq, shape).aux,
            None => {
                data.resize(ctx.layout.data_len(), Fe::ZERO);
                let bits = ctx.layout.aux_inputs - 2;
                data.iter().flat_map(|v| sign_witness(&f, *v, bits)).collect()
            }
        };
        let mut h = ctx.key.prove(&ctx.layout, &data, &aux);
        if self.behavior.attack == ProtocolAttack::CheatCircuit {
            h[0] = f.add(h[0], Fe::ONE);
        }

        let sx = lcc.share(self.id, &data, &mut self.rng)?;
        let sa = lcc.share(self.id, &aux, &mut self.rng)?;
        let sh = lcc.share(self.id, &h, &mut self.rng)?;
        let committed_x = if self.behavior.attack == ProtocolAttack::BadCommitPair {
            let mut other = data.clone();
            other[0] = f.add(other[0], Fe::ONE);
            other
        } else {
            data.clone()
        };
        let commit = &self.setup.commit;
        let commitments = Commitments {
            x: lcc_commit(lcc, commit, self.id, &committed_x, &sx.noise)?,
            aux: lcc_commit(lcc, commit, self.id, &aux, &sa.noise)?,
            h: lcc_commit(lcc, commit, self.id, &h, &sh.noise)?,
        };

        let own_triples = match ctx.cfg.beaver {
            super::BeaverSource::SelfDealt => Some(deal_for_prover(ctx, &mut self.rng)?),
            super::BeaverSource::Dealer => None,
        };
        let victim = match &self.behavior.attack {
            ProtocolAttack::BadShare { victim } => {
                victim.or_else(|| self.behavior.own_victim(n, self.id))
            }
            _ => None,
        };
        let mut sent = Vec::with_capacity(n);
        let mut ciphertexts = Vec::with_capacity(n);
        for j in 0..n {
            let mut bundle = Bundle {
                x: sx.shares[j].payload.clone(),
                aux: sa.shares[j].payload.clone(),
                h: sh.shares[j].payload.clone(),
                triples: own_triples.as_ref().map(|t| t[j].clone()),
            };
            if victim == Some(j) {
                bundle.x[0] = f.add(bundle.x[0], Fe::ONE);
            }
            let key = self.setup.session(self.id, j);
            ciphertexts.push(ae_enc(key, &self.nonce(self.id, j), &encode(&bundle)));
            sent.push(bundle);
        }
        self.sent = sent;
        self.quantized = Some(xq);
        Ok(Some(encode(&Round1 {
            commitments,
            ciphertexts,
        })))
    }

    /// Takes the challenge broadcast and the relayed ciphertexts.
    pub fn receive(&mut self, challenge: &[u8], relayed: &[Relayed]) {
        let ctx = &self.setup.ctx;
        let Some(msg) = decode::<ChallengeMsg>(challenge) else {
            return;
        };
        let Ok(ch) = ctx.key.challenge(msg.r) else {
            return;
        };
        self.challenge = Some((ch, msg.rho));
        self.commitments = msg.commitments;
        self.commitments.resize(ctx.n(), None);
        for r in relayed {
            if r.sender >= ctx.n() {
                continue;
            }
            let key = self.setup.session(self.id, r.sender);
            self.received[r.sender] = ae_dec(key, &self.nonce(r.sender, self.id), &r.ciphertext)
                .and_then(|pt| decode::<Bundle>(&pt))
                .filter(|b| b.is_reduced(ctx.field.modulus()));
            self.verified[r.sender] = None;
        }
    }

    fn triples_for(&self, prover: usize) -> Option<&HolderTriples> {
        match &self.dealer {
            Some(d) => d.get(prover),
            None => self.received[prover].as_ref()?.triples.as_ref(),
        }
    }

    fn check(&self, prover: usize) -> bool {
        let ctx = &self.setup.ctx;
        let (Some(b), Some(c)) = (&self.received[prover], &self.commitments[prover]) else {
            return false;
        };
        if b.x.len() != ctx.x_share_len() || b.aux.len() != ctx.aux_share_len() || b.h.len() != ctx.h_share_len() {
            return false;
        }
        if !triples_fit(ctx, self.triples_for(prover)) {
            return false;
        }
        let commit = &self.setup.commit;
        commit.verify_payload(&ctx.lcc, self.id, &b.x, &c.x)
            && commit.verify_payload(&ctx.lcc, self.id, &b.aux, &c.aux)
            && commit.verify_payload(&ctx.lcc, self.id, &b.h, &c.h)
    }

    /// `m1` plus the Beaver openings for every prover that verified.
    pub fn round2a(&mut self, start: &[u8], forwards: &[Vec<u8>]) -> Option<Vec<u8>> {
        let ctx = &self.setup.ctx;
        let f = ctx.field;
        for fw in forwards {
            if let Some(fw) = decode::<Forward>(fw) {
                let p = fw.prover as usize;
                if p < ctx.n() && fw.bundle.is_reduced(f.modulus()) {
                    self.received[p] = Some(fw.bundle);
                    self.verified[p] = None;
                }
            }
        }
        let start = decode::<PassStart>(start)?;
        self.active = start.active.iter().map(|&v| v as usize).filter(|&v| v < ctx.n()).collect();
        if self.silent_from(2) {
            return None;
        }
        let (ch, _) = self.challenge.clone()?;
        let mut tags = Vec::new();
        let mut openings = Vec::new();
        self.views = vec![None; ctx.n()];
        for &j in &self.active.clone() {
            let ok = match self.verified[j] {
                Some(v) => v,
                None => {
                    let v = self.check(j);
                    self.verified[j] = Some(v);
                    v
                }
            };
            if !ok {
                tags.push(j as u32);
                continue;
            }
            let b = self.received[j].as_ref().expect("verified bundle");
            let view = ctx
                .key
                .replay(&ch, &ctx.layout, &b.x, &b.aux, &b.h)
                .expect("lengths checked");
            let t = self.triples_for(j).expect("verified triples");
            let (d, e) = beaver::mask(&ctx.lcc, &t.packed, &view.u, &view.v);
            let scale = t.scale.as_ref().map(|s| {
                let dw = f.sub(b.aux[1], s.a);
                let ex = b.x.iter().zip(&s.b).map(|(x, bb)| f.sub(*x, *bb)).collect();
                (dw, ex)
            });
            openings.push(Opening {
                prover: j as u32,
                d,
                e,
                scale,
            });
            self.views[j] = Some(view);
        }
        if let ProtocolAttack::FalseTag { targets } = &self.behavior.attack {
            let extra: Vec<usize> = match targets {
                Some(t) => t.clone(),
                None => self
                    .behavior
                    .first_honest(ctx.n(), self.id)
                    .filter(|i| self.active.contains(i))
                    .take(ctx.t() + 1)
                    .collect(),
            };
            for v in extra {
                if !tags.contains(&(v as u32)) {
                    tags.push(v as u32);
                }
            }
            tags.sort_unstable();
        }
        Some(encode(&Round2a { tags, openings }))
    }

    /// Public reveal of the bundle sent to a holder.
    pub fn reveal(&self, request: &[u8]) -> Option<Vec<u8>> {
        if self.silent_from(2) {
            return None;
        }
        let req = decode::<RevealRequest>(request)?;
        let bundle = self.sent.get(req.holder as usize)?.clone();
        Some(encode(&Reveal {
            holder: req.holder,
            bundle,
        }))
    }

    /// `m2`, `m3`, `m4` from the opened Beaver values.
    pub fn round2b(&mut self, openings: &[u8]) -> Option<Vec<u8>> {
        if self.silent_from(2) {
            return None;
        }
        let ctx = &self.setup.ctx;
        let f = ctx.field;
        let lcc = &ctx.lcc;
        let opened = decode::<Openings>(openings)?;
        let (_, rho) = self.challenge.clone()?;
        let m = ctx.layout.per_slot;
        let out_len = m * ctx.key.circuit().num_outputs();
        let mut outputs = vec![Fe::ZERO; out_len];
        let agg_len = if ctx.is_rfa() { ctx.cfg.d + 1 } else { ctx.x_share_len() };
        let mut aggregate = vec![Fe::ZERO; agg_len];
        let junk = if self.behavior.attack == ProtocolAttack::BadSigma {
            Some(f.random_vec(&mut self.rng, self.active.len()))
        } else {
            None
        };
        let mut sigma = Vec::with_capacity(self.active.len());
        for (pos, &j) in self.active.iter().enumerate() {
            let (Some(view), Some(op)) = (
                self.views[j].as_ref(),
                opened.provers.iter().find(|o| o.prover as usize == j),
            ) else {
                sigma.push(Fe::ZERO);
                continue;
            };
            let t = self.triples_for(j).expect("verified triples");
            let s = match &junk {
                Some(v) => v[pos],
                None => sigma_share(lcc, self.id, view, &t.packed, &op.d, &op.e, rho),
            };
            sigma.push(s);
            f.add_assign(&mut outputs, &view.outputs);
            let b = self.received[j].as_ref().expect("verified bundle");
            match (&t.scale, &op.scale) {
                (Some(st), Some((dw, ex))) => {
                    let wx = beaver::combine_scale(lcc, st, *dw, ex);
                    f.add_assign(&mut aggregate[..ctx.cfg.d], &wx);
                    aggregate[ctx.cfg.d] = f.add(aggregate[ctx.cfg.d], b.aux[1]);
                }
                _ => f.add_assign(&mut aggregate, &b.x),
            }
        }
        Some(encode(&Round2b {
            sigma,
            outputs,
            aggregate,
        }))
    }
}

/// Shape check of a holder's triple material.
pub(crate) fn triples_fit(ctx: &super::Context, t: Option<&HolderTriples>) -> bool {
    let Some(t) = t else {
        return false;
    };
    let m = ctx.layout.per_slot;
    let k = ctx.lcc.params().k;
    let p = &t.packed;
    let packed_ok = p.a.len() == m
        && p.b.len() == m
        && p.c.len() == m
        && p.a_units.len() == k
        && p.b_units.len() == k
        && p.a_units.iter().chain(&p.b_units).all(|u| u.len() == m);
    let scale_ok = match (&t.scale, ctx.is_rfa()) {
        (Some(s), true) => s.b.len() == ctx.cfg.d && s.c.len() == ctx.cfg.d,
        (None, false) => true,
        _ => false,
    };
    packed_ok && scale_ok
}
