//! Re-runs the server against the recorded user messages and checks that it
//! emits the recorded transcript again.

use std::path::Path;

use super::config::HarnessError;
use super::transcript::Transcript;
use crate::field::Fe;
use crate::protocol::messages::{decode, ChallengeMsg, Openings, PassStart, Relayed, Reveal, RevealRequest};
use crate::protocol::{run_server, Envelope, IterationReport, MsgKind, Participants, PublicSetup, Setup, SERVER};
use crate::rng::stream;

/// Users played back from one iteration's envelopes.
struct ReplayUsers<'a> {
    n: usize,
    envelopes: &'a [Envelope],
    pass: u32,
}

impl ReplayUsers<'_> {
    fn sent_by(&self, kind: MsgKind, pass: u32) -> Vec<Option<Vec<u8>>> {
        let mut out = vec![None; self.n];
        for e in self.envelopes {
            if e.kind == kind && e.pass == pass && e.sender != SERVER && (e.sender as usize) < self.n {
                out[e.sender as usize] = Some(e.payload.clone());
            }
        }
        out
    }
}

impl Participants for ReplayUsers<'_> {
    fn round1(&mut self) -> Vec<Option<Vec<u8>>> {
        self.sent_by(MsgKind::Round1, 0)
    }

    fn recorded_challenge(&mut self) -> Option<(Fe, Fe)> {
        let e = self.envelopes.iter().find(|e| e.kind == MsgKind::Challenge)?;
        decode::<ChallengeMsg>(&e.payload).map(|c| (c.r, c.rho))
    }

    fn deliver(&mut self, _: &[u8], _: Vec<Vec<Relayed>>) {}

    fn round2a(&mut self, start: &[u8], _: &[Vec<Vec<u8>>]) -> Vec<Option<Vec<u8>>> {
        let Some(start) = decode::<PassStart>(start) else {
            return vec![None; self.n];
        };
        self.pass = start.pass;
        self.sent_by(MsgKind::Round2a, start.pass)
    }

    fn reveal(&mut self, requests: &[(usize, Vec<u8>)]) -> Vec<Option<Vec<u8>>> {
        requests
            .iter()
            .map(|(prover, req)| {
                let holder = decode::<RevealRequest>(req)?.holder;
                self.envelopes
                    .iter()
                    .find(|e| {
                        e.kind == MsgKind::Reveal
                            && e.pass == self.pass
                            && e.sender as usize == *prover
                            && decode::<Reveal>(&e.payload).is_some_and(|r| r.holder == holder)
                    })
                    .map(|e| e.payload.clone())
            })
            .collect()
    }

    fn round2b(&mut self, openings: &[u8]) -> Vec<Option<Vec<u8>>> {
        match decode::<Openings>(openings) {
            Some(o) => self.sent_by(MsgKind::Round2b, o.pass),
            None => vec![None; self.n],
        }
    }
}

fn reject(msg: impl Into<String>) -> HarnessError {
    HarnessError::RejectTranscript(msg.into())
}

/// Replays every iteration of `t`. Any divergence between the recomputed
/// server messages and the recorded ones rejects the transcript.
pub fn replay(t: &Transcript) -> Result<Vec<IterationReport>, HarnessError> {
    let cfg = &t.config;
    let (first, rest) = t.envelopes.split_first().ok_or_else(|| reject("empty transcript"))?;
    if first.kind != MsgKind::Setup {
        return Err(reject("transcript does not start with the setup"));
    }
    let public: PublicSetup = decode(&first.payload).ok_or_else(|| reject("undecodable setup"))?;
    let (ctx, commit) = Setup::server_view(&cfg.protocol, &public).map_err(|e| reject(e.to_string()))?;
    let mut reports = Vec::new();
    let mut pos = 0;
    for it in 0..cfg.iterations {
        let end = pos + rest[pos..].iter().take_while(|e| e.iteration as u64 == it).count();
        let recorded = &rest[pos..end];
        if recorded.is_empty() {
            return Err(reject(format!("iteration {it} missing")));
        }
        if !recorded.iter().any(|e| e.kind == MsgKind::Challenge) {
            return Err(reject(format!("iteration {it} has no challenge")));
        }
        let mut users = ReplayUsers {
            n: ctx.n(),
            envelopes: recorded,
            pass: 0,
        };
        let mut emitted: Vec<Envelope> = Vec::with_capacity(recorded.len());
        // The challenge is taken from the transcript; this stream is never drawn.
        let mut rng = stream(cfg.seed, "replay", it, 0);
        let report = run_server(&ctx, &commit, it, &mut rng, &mut users, &mut emitted);
        if emitted.as_slice() != recorded {
            let at = emitted.iter().zip(recorded).take_while(|(a, b)| a == b).count();
            return Err(reject(format!("iteration {it} diverges at message {at}")));
        }
        reports.push(report);
        pos = end;
    }
    if pos != rest.len() {
        return Err(reject("trailing messages after the last iteration"));
    }
    Ok(reports)
}

pub fn replay_file(path: &Path) -> Result<Vec<IterationReport>, HarnessError> {
    replay(&Transcript::read(path)?)
}
