use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ConfigError, ProtocolConfig};
use super::ProtocolError;
use crate::beaver::{self, ScaleTripleShare, TripleShare};
use crate::commit::CommitSetup;
use crate::crypto::{ka_agree, ka_gen, KeyPair, SessionKey, PUBLIC_KEY_LEN};
use crate::field::Field;
use crate::group::GroupElement;
use crate::lcc::{Lcc, LccParams};
use crate::rng::stream;
use crate::robust::{build_rfa_circuit, build_sign_circuit, sign_bits, RfaShape, RobustAlg, SIGN_IN_BITS};
use crate::snip::{Layout, SnipKey};

/// Everything derived from the config alone.
#[derive(Clone, Debug)]
pub struct Context {
    pub cfg: ProtocolConfig,
    pub field: Field,
    pub lcc: Lcc,
    pub key: SnipKey,
    pub layout: Layout,
    pub rfa: Option<RfaShape>,
}

impl Context {
    pub fn new(cfg: &ProtocolConfig) -> Result<Self, ProtocolError> {
        cfg.validate()?;
        let field = cfg.field.field().map_err(|e| ConfigError(e.to_string()))?;
        let (k, t) = (cfg.k_eff(), cfg.t());
        let lcc = Lcc::new(field, LccParams::standard(&field, cfg.n, k, t)?);
        let p = cfg.field.p;
        let (circuit, layout, rfa) = match cfg.robust_alg {
            RobustAlg::Rlr => {
                let layout = Layout {
                    slots: k,
                    per_slot: cfg.d.div_ceil(k),
                    data_inputs: 1,
                    aux_inputs: SIGN_IN_BITS - 1 + sign_bits(p),
                };
                (build_sign_circuit(p), layout, None)
            }
            RobustAlg::Rfa => {
                let shape = RfaShape {
                    d: cfg.d,
                    p,
                    range_bits: cfg
                        .range_check
                        .then(|| RfaShape::range_bits_for(p, cfg.norm_bound())),
                };
                let layout = Layout {
                    slots: 1,
                    per_slot: 1,
                    data_inputs: cfg.d,
                    aux_inputs: shape.witness_len(),
                };
                (build_rfa_circuit(&shape), layout, Some(shape))
            }
        };
        let key = SnipKey::new(field, circuit)?;
        Ok(Self {
            cfg: cfg.clone(),
            field,
            lcc,
            key,
            layout,
            rfa,
        })
    }

    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn t(&self) -> usize {
        self.cfg.t()
    }

    /// Per-holder share lengths of the data, witness and proof vectors.
    pub fn x_share_len(&self) -> usize {
        self.layout.per_slot * self.layout.data_inputs
    }

    pub fn aux_share_len(&self) -> usize {
        self.layout.per_slot * self.layout.aux_inputs
    }

    pub fn h_share_len(&self) -> usize {
        self.layout.per_slot * self.key.h_len()
    }

    /// Length of the commitment basis.
    pub fn commit_len(&self) -> usize {
        self.x_share_len()
            .max(self.aux_share_len())
            .max(self.h_share_len())
    }

    pub fn is_rfa(&self) -> bool {
        self.rfa.is_some()
    }
}

/// Published part of the setup: the commitment basis and every user's
/// key-agreement public key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicSetup {
    pub bases: Vec<GroupElement>,
    pub public_keys: Vec<[u8; PUBLIC_KEY_LEN]>,
}

/// Setup shared by every iteration of an experiment.
#[derive(Debug)]
pub struct Setup {
    pub ctx: Context,
    pub commit: CommitSetup,
    pub keys: Vec<KeyPair>,
    pub public: PublicSetup,
    /// `sessions[i][j]`: user `i`'s key for the channel with `j`.
    sessions: Vec<Vec<SessionKey>>,
}

impl Setup {
    pub fn generate(cfg: &ProtocolConfig, seed: u64) -> Result<Self, ProtocolError> {
        let ctx = Context::new(cfg)?;
        let commit = CommitSetup::generate(&cfg.field, ctx.commit_len(), &mut stream(seed, "setup", 0, 0))
            .map_err(|e| ConfigError(e.to_string()))?;
        let keys: Vec<KeyPair> = (0..cfg.n)
            .map(|i| ka_gen(&mut stream(seed, "keys", 0, i as u64)))
            .collect();
        let public = PublicSetup {
            bases: commit.bases().to_vec(),
            public_keys: keys.iter().map(|k| k.public).collect(),
        };
        let sessions = keys
            .iter()
            .map(|own| public.public_keys.iter().map(|pk| ka_agree(pk, own)).collect())
            .collect();
        Ok(Self {
            ctx,
            commit,
            keys,
            public,
            sessions,
        })
    }

    pub fn session(&self, own: usize, other: usize) -> &SessionKey {
        &self.sessions[own][other]
    }

    /// Server-side view rebuilt from published values only.
    pub fn server_view(cfg: &ProtocolConfig, public: &PublicSetup) -> Result<(Context, CommitSetup), ProtocolError> {
        let ctx = Context::new(cfg)?;
        let group = cfg.field.group().map_err(|e| ConfigError(e.to_string()))?;
        if public.bases.len() < ctx.commit_len() || public.public_keys.len() != cfg.n {
            return Err(ProtocolError::Setup("published setup does not match the config".into()));
        }
        Ok((ctx, CommitSetup::from_public(group, public.bases.clone())))
    }
}

/// One holder's triple material for one prover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HolderTriples {
    pub packed: TripleShare,
    /// Scalar-times-vector triple for the RFA weighted sum.
    pub scale: Option<ScaleTripleShare>,
}

/// Deals one prover's triples; entry `i` goes to holder `i`.
pub fn deal_for_prover<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> Result<Vec<HolderTriples>, ProtocolError> {
    let packed = beaver::deal(&ctx.lcc, ctx.layout.per_slot, rng)?;
    let scale = if ctx.is_rfa() {
        Some(beaver::deal_scale(&ctx.lcc, ctx.cfg.d, rng)?)
    } else {
        None
    };
    Ok(packed
        .into_iter()
        .enumerate()
        .map(|(i, p)| HolderTriples {
            packed: p,
            scale: scale.as_ref().map(|s| s[i].clone()),
        })
        .collect())
}

/// Trusted-dealer output for one iteration, indexed `[holder][prover]`.
pub fn deal_iteration(ctx: &Context, seed: u64, iteration: u64) -> Result<Vec<Vec<HolderTriples>>, ProtocolError> {
    let n = ctx.n();
    let mut by_holder: Vec<Vec<HolderTriples>> = vec![Vec::with_capacity(n); n];
    for prover in 0..n {
        let mut rng = stream(seed, "dealer", iteration, prover as u64);
        for (holder, t) in deal_for_prover(ctx, &mut rng)?.into_iter().enumerate() {
            by_holder[holder].push(t);
        }
    }
    Ok(by_holder)
}
