//! Binary transcript: the experiment config, the published setup and every
//! envelope the server sent or received, sealed with a sha256 trailer.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "PRAGTX01"
//! config   u64 length, then the config as TOML
//! envelope iteration u32, pass u32, sender u32, recipient u32,
//!          round u8, kind u8, payload length u64, payload
//! ...
//! trailer  sha256 of everything before it
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use super::config::{io_err, ExperimentConfig, HarnessError};
use crate::protocol::{Envelope, MsgKind};

pub const MAGIC: &[u8; 8] = b"PRAGTX01";

#[derive(Clone, Debug, PartialEq)]
pub struct Transcript {
    pub config: ExperimentConfig,
    pub envelopes: Vec<Envelope>,
}

fn put_envelope(out: &mut Vec<u8>, e: &Envelope) {
    out.extend(e.iteration.to_le_bytes());
    out.extend(e.pass.to_le_bytes());
    out.extend(e.sender.to_le_bytes());
    out.extend(e.recipient.to_le_bytes());
    out.push(e.kind.round());
    out.push(e.kind as u8);
    out.extend((e.payload.len() as u64).to_le_bytes());
    out.extend(&e.payload);
}

impl Transcript {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend(MAGIC);
        let cfg = self.config.to_toml();
        out.extend((cfg.len() as u64).to_le_bytes());
        out.extend(cfg.as_bytes());
        for e in &self.envelopes {
            put_envelope(&mut out, e);
        }
        let digest = Sha256::digest(&out);
        out.extend(digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, HarnessError> {
        let reject = |m: &str| HarnessError::RejectTranscript(m.to_string());
        if bytes.len() < MAGIC.len() + 8 + 32 {
            return Err(reject("too short"));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != trailer {
            return Err(reject("hash mismatch"));
        }
        if &body[..8] != MAGIC {
            return Err(reject("bad magic"));
        }
        let mut r = Reader { buf: body, pos: 8 };
        let cfg_len = r.u64().ok_or_else(|| reject("truncated config"))? as usize;
        let cfg_bytes = r.take(cfg_len).ok_or_else(|| reject("truncated config"))?;
        let text = std::str::from_utf8(cfg_bytes).map_err(|_| reject("config is not UTF-8"))?;
        let config = ExperimentConfig::from_toml(text).map_err(|e| reject(&e.to_string()))?;
        let mut envelopes = Vec::new();
        while r.pos < body.len() {
            let bad = || reject("truncated envelope");
            let iteration = r.u32().ok_or_else(bad)?;
            let pass = r.u32().ok_or_else(bad)?;
            let sender = r.u32().ok_or_else(bad)?;
            let recipient = r.u32().ok_or_else(bad)?;
            let round = r.u8().ok_or_else(bad)?;
            let kind = MsgKind::from_u8(r.u8().ok_or_else(bad)?).ok_or_else(|| reject("unknown message kind"))?;
            if kind.round() != round {
                return Err(reject("round does not match message kind"));
            }
            let len = r.u64().ok_or_else(bad)? as usize;
            let payload = r.take(len).ok_or_else(bad)?.to_vec();
            envelopes.push(Envelope {
                iteration,
                pass,
                sender,
                recipient,
                kind,
                payload,
            });
        }
        Ok(Self { config, envelopes })
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        std::fs::write(path, self.to_bytes()).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, HarnessError> {
        let bytes = std::fs::read(path).map_err(io_err(path))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let s = self.buf.get(self.pos..end)?;
        self.pos = end;
        Some(s)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{ProtocolConfig, SERVER};

    fn sample() -> Transcript {
        Transcript {
            config: ExperimentConfig::new(ProtocolConfig::new(6, 4)),
            envelopes: vec![
                Envelope {
                    iteration: 0,
                    pass: 0,
                    sender: 3,
                    recipient: SERVER,
                    kind: MsgKind::Round1,
                    payload: vec![1, 2, 3],
                },
                Envelope {
                    iteration: 0,
                    pass: 1,
                    sender: SERVER,
                    recipient: SERVER,
                    kind: MsgKind::Openings,
                    payload: vec![],
                },
            ],
        }
    }

    #[test]
    fn roundtrip() {
        let t = sample();
        assert_eq!(Transcript::from_bytes(&t.to_bytes()).unwrap(), t);
    }

    #[test]
    fn any_flipped_byte_is_rejected() {
        let bytes = sample().to_bytes();
        for pos in 0..bytes.len() {
            let mut b = bytes.clone();
            b[pos] ^= 0x01;
            assert!(
                matches!(Transcript::from_bytes(&b), Err(HarnessError::RejectTranscript(_))),
                "byte {pos}"
            );
        }
        assert!(Transcript::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
