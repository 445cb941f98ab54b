//! Wire messages and their canonical encoding.
//!
//! Payloads are encoded with bincode's fixed-width little-endian layout:
//! integers and field elements as 8-byte words, sequences prefixed by a
//! `u64` length, `Option` by one tag byte.

use bincode::Options;
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::context::HolderTriples;
use crate::commit::CommitmentVector;
use crate::field::Fe;

/// Recipient value for messages addressed to the server or broadcast by it.
pub const SERVER: u32 = u32::MAX;

const MAX_PAYLOAD: u64 = 1 << 30;

fn options() -> impl Options {
    bincode::DefaultOptions::new()
        .with_fixint_encoding()
        .with_little_endian()
        .reject_trailing_bytes()
}

pub fn encode<T: Serialize>(msg: &T) -> Vec<u8> {
    options().serialize(msg).expect("in-memory encoding cannot fail")
}

pub fn decode<T: DeserializeOwned>(bytes: &[u8]) -> Option<T> {
    options().with_limit(MAX_PAYLOAD).deserialize(bytes).ok()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum MsgKind {
    Setup = 0,
    Round1 = 1,
    Challenge = 2,
    PassStart = 3,
    Forward = 4,
    Round2a = 5,
    RevealRequest = 6,
    Reveal = 7,
    Openings = 8,
    Round2b = 9,
    Outcome = 10,
}

impl MsgKind {
    pub fn from_u8(v: u8) -> Option<Self> {
        use MsgKind::*;
        [
            Setup,
            Round1,
            Challenge,
            PassStart,
            Forward,
            Round2a,
            RevealRequest,
            Reveal,
            Openings,
            Round2b,
            Outcome,
        ]
        .into_iter()
        .find(|k| *k as u8 == v)
    }

    /// Protocol round the message belongs to.
    pub fn round(self) -> u8 {
        match self {
            MsgKind::Setup => 0,
            MsgKind::Round1 | MsgKind::Challenge => 1,
            MsgKind::PassStart
            | MsgKind::Forward
            | MsgKind::Round2a
            | MsgKind::RevealRequest
            | MsgKind::Reveal
            | MsgKind::Openings
            | MsgKind::Round2b => 2,
            MsgKind::Outcome => 3,
        }
    }
}

/// One recorded message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Envelope {
    pub iteration: u32,
    pub pass: u32,
    pub sender: u32,
    pub recipient: u32,
    pub kind: MsgKind,
    pub payload: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitments {
    pub x: CommitmentVector,
    pub aux: CommitmentVector,
    pub h: CommitmentVector,
}

/// Plaintext a prover sends to one holder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bundle {
    pub x: Vec<Fe>,
    pub aux: Vec<Fe>,
    pub h: Vec<Fe>,
    /// Present only when provers deal their own triples.
    pub triples: Option<HolderTriples>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round1 {
    pub commitments: Commitments,
    /// Indexed by recipient.
    pub ciphertexts: Vec<Vec<u8>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChallengeMsg {
    pub r: Fe,
    pub rho: Fe,
    pub commitments: Vec<Option<Commitments>>,
}

/// Ciphertext relayed from `sender`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relayed {
    pub sender: usize,
    pub ciphertext: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassStart {
    pub pass: u32,
    pub active: Vec<u32>,
    pub excluded: Vec<u32>,
}

/// A publicly revealed bundle forwarded to its holder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Forward {
    pub prover: u32,
    pub bundle: Bundle,
}

/// One holder's masked Beaver inputs for one prover.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Opening {
    pub prover: u32,
    pub d: Vec<Fe>,
    pub e: Vec<Fe>,
    /// `[omega] - [a]` and `[x] - [b]` for the weighted sum.
    pub scale: Option<(Fe, Vec<Fe>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round2a {
    /// `m1`: provers this holder could not verify.
    pub tags: Vec<u32>,
    pub openings: Vec<Opening>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealRequest {
    pub holder: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reveal {
    pub holder: u32,
    pub bundle: Bundle,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenedProver {
    pub prover: u32,
    pub d: Vec<Fe>,
    pub e: Vec<Fe>,
    pub scale: Option<(Fe, Vec<Fe>)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Openings {
    pub pass: u32,
    pub provers: Vec<OpenedProver>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Round2b {
    /// `m2`, one entry per active prover, in the order of `PassStart::active`.
    pub sigma: Vec<Fe>,
    /// `m3`: sum of output shares over active provers.
    pub outputs: Vec<Fe>,
    /// `m4`: summed data shares, or summed weighted shares then summed weights.
    pub aggregate: Vec<Fe>,
}

/// Every field element is a reduced representative.
pub fn reduced(q: u64, v: &[Fe]) -> bool {
    v.iter().all(|e| e.value() < q)
}

impl Bundle {
    pub fn is_reduced(&self, q: u64) -> bool {
        let t = self.triples.as_ref().is_none_or(|t| {
            let p = &t.packed;
            reduced(q, &p.a)
                && reduced(q, &p.b)
                && reduced(q, &p.c)
                && p.a_units.iter().chain(&p.b_units).all(|u| reduced(q, u))
                && t.scale.as_ref().is_none_or(|s| {
                    s.a.value() < q && reduced(q, &s.b) && reduced(q, &s.c)
                })
        });
        t && reduced(q, &self.x) && reduced(q, &self.aux) && reduced(q, &self.h)
    }
}

impl Opening {
    pub fn is_reduced(&self, q: u64) -> bool {
        reduced(q, &self.d)
            && reduced(q, &self.e)
            && self
                .scale
                .as_ref()
                .is_none_or(|(a, b)| a.value() < q && reduced(q, b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_fixed_width_little_endian() {
        let m = PassStart {
            pass: 1,
            active: vec![2, 3],
            excluded: vec![],
        };
        let b = encode(&m);
        assert_eq!(
            b,
            [
                &[1, 0, 0, 0][..],
                &[2, 0, 0, 0, 0, 0, 0, 0],
                &[2, 0, 0, 0, 3, 0, 0, 0],
                &[0, 0, 0, 0, 0, 0, 0, 0],
            ]
            .concat()
        );
        assert_eq!(decode::<PassStart>(&b), Some(m));
        let mut extra = b.clone();
        extra.push(0);
        assert_eq!(decode::<PassStart>(&extra), None);
        assert_eq!(decode::<PassStart>(&b[..b.len() - 1]), None);
    }

    #[test]
    fn huge_length_prefix_is_rejected() {
        let mut b = vec![0u8; 4];
        b.extend(u64::MAX.to_le_bytes());
        assert_eq!(decode::<PassStart>(&b), None);
    }

    #[test]
    fn kinds_roundtrip() {
        for v in 0..=10u8 {
            assert_eq!(MsgKind::from_u8(v).unwrap() as u8, v);
        }
        assert_eq!(MsgKind::from_u8(11), None);
    }
}
