//! Server logic: tag rules, dispute resolution, Beaver openings, the
//! identity tests and the final robust aggregate, with round-2 re-execution
//! whenever the malicious set grows.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::context::Context;
use super::messages::{
    decode, encode, reduced, Bundle, ChallengeMsg, Commitments, Envelope, Forward, MsgKind, OpenedProver, Openings,
    PassStart, Relayed, Reveal, RevealRequest, Round1, Round2a, Round2b, SERVER,
};
use super::user::triples_fit;
use crate::commit::CommitSetup;
use crate::field::Fe;
use crate::lcc::{DecodeMode, LccError};
use crate::robust::{rlr_aggregate, rlr_mask, RFA_OUT_E1, RFA_OUT_E2, RFA_OUT_RANGE, SIGN_OUT_E};
use crate::snip::{sigma_check, SigmaVerdict};

/// The users as seen from the server: every method returns one optional
/// payload per user (or per request); `None` means silence.
pub trait Participants {
    fn round1(&mut self) -> Vec<Option<Vec<u8>>>;

    /// Replayed runs return the recorded `(r, rho)`; live runs draw fresh.
    fn recorded_challenge(&mut self) -> Option<(Fe, Fe)> {
        None
    }

    fn deliver(&mut self, challenge: &[u8], relayed: Vec<Vec<Relayed>>);

    /// `forwards[i]` holds the revealed bundles forwarded to user `i`.
    fn round2a(&mut self, start: &[u8], forwards: &[Vec<Vec<u8>>]) -> Vec<Option<Vec<u8>>>;

    /// One reply per `(prover, request payload)`.
    fn reveal(&mut self, requests: &[(usize, Vec<u8>)]) -> Vec<Option<Vec<u8>>>;

    fn round2b(&mut self, openings: &[u8]) -> Vec<Option<Vec<u8>>>;
}

pub trait Recorder {
    fn record(&mut self, env: Envelope);
}

impl Recorder for Vec<Envelope> {
    fn record(&mut self, env: Envelope) {
        self.push(env);
    }
}

/// Discards everything.
pub struct NoRecord;

impl Recorder for NoRecord {
    fn record(&mut self, _: Envelope) {}
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Done,
    Rerun,
    Abort,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reason {
    /// Tagged by more than `T` users.
    Tagged { count: usize },
    /// Tagged more than `T` users.
    OverTagging { count: usize },
    Silent { round: u8 },
    Malformed { round: u8 },
    FailedReveal { holder: usize },
    BadOpening,
    SigmaCheat,
    SigmaUndecodable,
    BadSigmaShare,
    BadAggregateShare,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub user: usize,
    pub pass: usize,
    pub reason: Reason,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    /// Sign circuit: nonzero aggregated residual entries.
    pub sign_nonzero: Option<usize>,
    /// RFA: raw aggregated `sum (r1^2 + r2^2)` as a field value.
    pub rfa_raw: Option<u64>,
    /// RFA: the raw value divided by `p^4`.
    pub rfa_scaled: Option<f64>,
    pub rfa_tau: Option<f64>,
    /// RFA range check: nonzero aggregated consistency or booleanity entries.
    pub range_nonzero: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ByteCounts {
    /// Bytes sent by each user in round 1.
    pub user_round1: Vec<u64>,
    /// Bytes sent by each user in round 2, over all passes.
    pub user_round2: Vec<u64>,
    /// Bytes sent by the server, relays included.
    pub server: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: u64,
    pub verdict: Verdict,
    /// `U_A` with the reason each user entered it.
    pub excluded: Vec<Exclusion>,
    /// Round-2 executions.
    pub passes: usize,
    /// Per pass, how many active users tagged each user.
    pub tag_counts: Vec<Vec<usize>>,
    /// RLR: the masked sum in the field.
    pub aggregate_field: Option<Vec<Fe>>,
    /// Dequantized aggregate.
    pub aggregate: Option<Vec<f64>>,
    /// Users whose shares form the aggregate.
    pub contributors: Vec<usize>,
    /// RLR: positive-sign counts per coordinate.
    pub sign_sums: Option<Vec<u64>>,
    pub residuals: Residuals,
    pub abort_reason: Option<String>,
    pub bytes: ByteCounts,
}

impl IterationReport {
    pub fn malicious_set(&self) -> Vec<usize> {
        self.excluded.iter().map(|e| e.user).collect()
    }
}

struct Run<'a, P: Participants, R: Recorder> {
    ctx: &'a Context,
    commit: &'a CommitSetup,
    iteration: u64,
    users: &'a mut P,
    rec: &'a mut R,
    excluded: BTreeMap<usize, Exclusion>,
    report: IterationReport,
}

enum Step {
    Rerun,
    Abort(String),
    Final,
}

impl<'a, P: Participants, R: Recorder> Run<'a, P, R> {
    fn n(&self) -> usize {
        self.ctx.n()
    }

    fn log(&mut self, pass: usize, sender: u32, recipient: u32, kind: MsgKind, payload: &[u8]) {
        let len = payload.len() as u64;
        if sender == SERVER {
            self.report.bytes.server += len;
        } else if kind == MsgKind::Round1 {
            self.report.bytes.user_round1[sender as usize] += len;
        } else {
            self.report.bytes.user_round2[sender as usize] += len;
        }
        self.rec.record(Envelope {
            iteration: self.iteration as u32,
            pass: pass as u32,
            sender,
            recipient,
            kind,
            payload: payload.to_vec(),
        });
    }

    fn exclude(&mut self, user: usize, pass: usize, reason: Reason) -> bool {
        if self.excluded.contains_key(&user) {
            return false;
        }
        self.excluded.insert(user, Exclusion { user, pass, reason });
        true
    }

    fn active(&self) -> Vec<usize> {
        (0..self.n()).filter(|i| !self.excluded.contains_key(i)).collect()
    }

    fn over_budget(&self) -> bool {
        self.excluded.len() > self.ctx.t()
    }

    /// Checks a publicly revealed bundle against the prover's commitments.
    fn bundle_valid(&self, holder: usize, b: &Bundle, c: &Commitments) -> bool {
        let ctx = self.ctx;
        if !b.is_reduced(ctx.field.modulus())
            || b.x.len() != ctx.x_share_len()
            || b.aux.len() != ctx.aux_share_len()
            || b.h.len() != ctx.h_share_len()
        {
            return false;
        }
        if ctx.cfg.beaver == super::BeaverSource::SelfDealt && !triples_fit(ctx, b.triples.as_ref()) {
            return false;
        }
        self.commit.verify_payload(&ctx.lcc, holder, &b.x, &c.x)
            && self.commit.verify_payload(&ctx.lcc, holder, &b.aux, &c.aux)
            && self.commit.verify_payload(&ctx.lcc, holder, &b.h, &c.h)
    }

    fn commitments_fit(&self, c: &Commitments) -> bool {
        let w = self.ctx.lcc.params().width();
        [&c.x, &c.aux, &c.h].iter().all(|v| v.elements.len() == w)
    }

    /// Opens one packed quantity from the active holders. Error positions are
    /// returned when there is slack to find them.
    fn open(&self, shares: &[(usize, &[Fe])]) -> Result<(Vec<Vec<Fe>>, Vec<usize>), LccError> {
        let mode = if shares.len() > self.ctx.lcc.params().width() {
            DecodeMode::ErrorCorrecting
        } else {
            DecodeMode::Erasure
        };
        self.ctx.lcc.decode_blocks(shares, mode)
    }

    fn data_slots(&self, blocks: Vec<Vec<Fe>>) -> Vec<Fe> {
        blocks.into_iter().take(self.ctx.lcc.params().k).flatten().collect()
    }

    fn pass(
        &mut self,
        pass: usize,
        commitments: &[Option<Commitments>],
        forwards: &mut Vec<Vec<Vec<u8>>>,
        resolved: &mut BTreeSet<(usize, usize)>,
    ) -> Step {
        let ctx = self.ctx;
        let n = self.n();
        let t = ctx.t();
        let q = ctx.field.modulus();
        let active = self.active();
        let start = PassStart {
            pass: pass as u32,
            active: active.iter().map(|&v| v as u32).collect(),
            excluded: self.excluded.keys().map(|&v| v as u32).collect(),
        };
        let start_bytes = encode(&start);
        self.log(pass, SERVER, SERVER, MsgKind::PassStart, &start_bytes);
        let fw = std::mem::replace(forwards, vec![Vec::new(); n]);
        for (i, list) in fw.iter().enumerate() {
            for f in list {
                self.log(pass, SERVER, i as u32, MsgKind::Forward, f);
            }
        }
        let replies = self.users.round2a(&start_bytes, &fw);

        // Tag matrix over the active users.
        let mut msgs: Vec<Option<Round2a>> = vec![None; n];
        let mut changed = false;
        for &i in &active {
            let parsed = replies.get(i).cloned().flatten().map(|b| {
                self.log(pass, i as u32, SERVER, MsgKind::Round2a, &b);
                decode::<Round2a>(&b)
            });
            match parsed {
                None => changed |= self.exclude(i, pass, Reason::Silent { round: 2 }),
                Some(None) => changed |= self.exclude(i, pass, Reason::Malformed { round: 2 }),
                Some(Some(m)) => msgs[i] = Some(m),
            }
        }
        let mut tagged_by = vec![BTreeSet::new(); n];
        let mut tagging = vec![0usize; n];
        for &i in &active {
            match &msgs[i] {
                Some(m) => {
                    let mine: BTreeSet<usize> = m
                        .tags
                        .iter()
                        .map(|&v| v as usize)
                        .filter(|v| *v != i && active.contains(v))
                        .collect();
                    tagging[i] = mine.len();
                    for j in mine {
                        tagged_by[j].insert(i);
                    }
                }
                // A silent user counts as tagged by everyone.
                None => {
                    for &j in &active {
                        if j != i {
                            tagged_by[i].insert(j);
                        }
                    }
                }
            }
        }
        self.report.tag_counts.push(tagged_by.iter().map(BTreeSet::len).collect());
        for &j in &active {
            if tagged_by[j].len() > t {
                changed |= self.exclude(j, pass, Reason::Tagged { count: tagged_by[j].len() });
            }
        }
        for &i in &active {
            if tagging[i] > t {
                changed |= self.exclude(i, pass, Reason::OverTagging { count: tagging[i] });
            }
        }
        if changed {
            return self.after_change();
        }

        // Remaining tags are disputes settled by a public reveal.
        let mut requests = Vec::new();
        for &j in &active {
            for &i in &tagged_by[j] {
                if !resolved.contains(&(i, j)) {
                    requests.push((j, i));
                }
            }
        }
        if !requests.is_empty() {
            let payloads: Vec<(usize, Vec<u8>)> = requests
                .iter()
                .map(|&(j, i)| (j, encode(&RevealRequest { holder: i as u32 })))
                .collect();
            for (j, p) in &payloads {
                self.log(pass, SERVER, *j as u32, MsgKind::RevealRequest, p);
            }
            let replies = self.users.reveal(&payloads);
            for (idx, &(j, i)) in requests.iter().enumerate() {
                let reply = replies.get(idx).cloned().flatten();
                if let Some(b) = &reply {
                    self.log(pass, j as u32, SERVER, MsgKind::Reveal, b);
                }
                let ok = reply
                    .and_then(|b| decode::<Reveal>(&b))
                    .filter(|r| r.holder as usize == i)
                    .filter(|r| {
                        commitments[j]
                            .as_ref()
                            .is_some_and(|c| self.bundle_valid(i, &r.bundle, c))
                    });
                match ok {
                    Some(r) => {
                        resolved.insert((i, j));
                        forwards[i].push(encode(&Forward {
                            prover: j as u32,
                            bundle: r.bundle,
                        }));
                    }
                    None => {
                        self.exclude(j, pass, Reason::FailedReveal { holder: i });
                    }
                }
            }
            return self.after_change();
        }

        // Beaver openings: every active holder must open for every active prover.
        let m = ctx.layout.per_slot;
        let rfa = ctx.is_rfa();
        let d = ctx.cfg.d;
        let mut table: Vec<Vec<Option<&super::messages::Opening>>> = vec![vec![None; n]; n];
        let mut bad = Vec::new();
        for &i in &active {
            let msg = msgs[i].as_ref().expect("active users replied");
            for op in &msg.openings {
                let j = op.prover as usize;
                if j >= n || !active.contains(&j) {
                    continue;
                }
                let shape_ok = op.d.len() == m
                    && op.e.len() == m
                    && op.is_reduced(q)
                    && match &op.scale {
                        Some((_, ex)) => rfa && ex.len() == d,
                        None => !rfa,
                    };
                if !shape_ok {
                    bad.push(i);
                    break;
                }
                table[j][i] = Some(op);
            }
            if active.iter().any(|&j| table[j][i].is_none()) {
                bad.push(i);
            }
        }
        bad.sort_unstable();
        bad.dedup();
        if !bad.is_empty() {
            for i in bad {
                self.exclude(i, pass, Reason::Malformed { round: 2 });
            }
            return self.after_change();
        }
        let mut opened = Vec::with_capacity(active.len());
        let mut bad_holders = BTreeSet::new();
        for &j in &active {
            let col = |sel: &dyn Fn(&super::messages::Opening) -> &[Fe]| -> Vec<(usize, Vec<Fe>)> {
                active
                    .iter()
                    .map(|&i| (i, sel(table[j][i].expect("checked")).to_vec()))
                    .collect()
            };
            let mut pieces: Vec<Vec<(usize, Vec<Fe>)>> = vec![col(&|o| &o.d), col(&|o| &o.e)];
            if rfa {
                pieces.push(
                    active
                        .iter()
                        .map(|&i| {
                            let s = table[j][i].expect("checked").scale.as_ref().expect("checked");
                            let mut v = vec![s.0];
                            v.extend_from_slice(&s.1);
                            (i, v)
                        })
                        .collect(),
                );
            }
            let mut decoded = Vec::new();
            for piece in &pieces {
                let refs: Vec<(usize, &[Fe])> = piece.iter().map(|(i, v)| (*i, &v[..])).collect();
                match self.open(&refs) {
                    Ok((blocks, errs)) => {
                        bad_holders.extend(errs);
                        decoded.push(blocks);
                    }
                    Err(e) => return Step::Abort(format!("Beaver openings for user {j} do not decode: {e}")),
                }
            }
            let mut it = decoded.into_iter();
            let dd = self.data_slots(it.next().expect("d"));
            let ee = self.data_slots(it.next().expect("e"));
            let scale = it.next().map(|blocks| {
                let v = self.data_slots(blocks);
                (v[0], v[1..].to_vec())
            });
            opened.push(OpenedProver {
                prover: j as u32,
                d: dd,
                e: ee,
                scale,
            });
        }
        if !bad_holders.is_empty() {
            for i in bad_holders {
                self.exclude(i, pass, Reason::BadOpening);
            }
            return self.after_change();
        }
        let openings = encode(&Openings {
            pass: pass as u32,
            provers: opened,
        });
        self.log(pass, SERVER, SERVER, MsgKind::Openings, &openings);
        let replies = self.users.round2b(&openings);

        let out_len = m * ctx.key.circuit().num_outputs();
        let agg_len = if rfa { d + 1 } else { ctx.x_share_len() };
        let mut second: Vec<Option<Round2b>> = vec![None; n];
        let mut changed = false;
        for &i in &active {
            let parsed = replies.get(i).cloned().flatten().map(|b| {
                self.log(pass, i as u32, SERVER, MsgKind::Round2b, &b);
                decode::<Round2b>(&b)
            });
            match parsed {
                None => changed |= self.exclude(i, pass, Reason::Silent { round: 2 }),
                Some(Some(r))
                    if r.sigma.len() == active.len()
                        && r.outputs.len() == out_len
                        && r.aggregate.len() == agg_len
                        && reduced(q, &r.sigma)
                        && reduced(q, &r.outputs)
                        && reduced(q, &r.aggregate) =>
                {
                    second[i] = Some(r)
                }
                Some(_) => changed |= self.exclude(i, pass, Reason::Malformed { round: 2 }),
            }
        }
        if changed {
            return self.after_change();
        }

        // Identity tests, one per prover.
        for (pos, &j) in active.iter().enumerate() {
            let shares: Vec<(usize, Fe)> = active
                .iter()
                .map(|&i| (i, second[i].as_ref().expect("checked").sigma[pos]))
                .collect();
            match sigma_check(&ctx.lcc, &shares) {
                SigmaVerdict::Honest { bad_verifiers } => {
                    for v in bad_verifiers {
                        changed |= self.exclude(v, pass, Reason::BadSigmaShare);
                    }
                }
                SigmaVerdict::Cheat => changed |= self.exclude(j, pass, Reason::SigmaCheat),
                SigmaVerdict::Undecodable => changed |= self.exclude(j, pass, Reason::SigmaUndecodable),
            }
        }
        if changed {
            return self.after_change();
        }

        self.finalize(pass, &active, &second)
    }

    fn after_change(&self) -> Step {
        if self.over_budget() {
            Step::Abort(format!(
                "{} users excluded, more than T = {}",
                self.excluded.len(),
                self.ctx.t()
            ))
        } else {
            Step::Rerun
        }
    }

    fn finalize(&mut self, pass: usize, active: &[usize], second: &[Option<Round2b>]) -> Step {
        let ctx = self.ctx;
        let f = ctx.field;
        let mode = ctx.cfg.decode_mode;
        let decode = |sel: &dyn Fn(&Round2b) -> &[Fe]| {
            let refs: Vec<(usize, &[Fe])> = active
                .iter()
                .map(|&i| (i, sel(second[i].as_ref().expect("checked"))))
                .collect();
            ctx.lcc.decode_blocks(&refs, mode)
        };
        let (out_blocks, out_bad) = match decode(&|r| &r.outputs) {
            Ok(v) => v,
            Err(e) => return Step::Abort(format!("aggregate outputs: {e}")),
        };
        let (agg_blocks, agg_bad) = match decode(&|r| &r.aggregate) {
            Ok(v) => v,
            Err(e) => return Step::Abort(format!("aggregate update: {e}")),
        };
        let mut changed = false;
        for i in out_bad.into_iter().chain(agg_bad) {
            changed |= self.exclude(i, pass, Reason::BadAggregateShare);
        }
        if changed {
            return self.after_change();
        }
        let outputs = self.data_slots(out_blocks);
        let agg = self.data_slots(agg_blocks);
        let n_active = active.len();
        let o = ctx.key.circuit().num_outputs();
        let p = ctx.cfg.field.p as f64;
        self.report.contributors = active.to_vec();

        match &ctx.rfa {
            None => {
                let d = ctx.cfg.d;
                let instances = ctx.layout.instances();
                let nonzero = (0..instances)
                    .flat_map(|idx| (1..o).map(move |w| idx * o + w))
                    .filter(|&pos| !outputs[pos].is_zero())
                    .count();
                self.report.residuals.sign_nonzero = Some(nonzero);
                if nonzero > 0 {
                    return Step::Abort(format!("{nonzero} aggregated sign residuals are nonzero"));
                }
                let mut sums = Vec::with_capacity(d);
                for idx in 0..d {
                    let s = outputs[idx * o + SIGN_OUT_E].value();
                    if s > n_active as u64 {
                        return Step::Abort(format!("sign count {s} exceeds {n_active} users"));
                    }
                    sums.push(s);
                }
                let mask = rlr_mask(&sums, n_active, ctx.t(), ctx.cfg.rlr_mode);
                let field_agg = rlr_aggregate(&f, &agg[..d], &mask);
                self.report.aggregate = Some(crate::quantize::dequantize(&f, &field_agg, ctx.cfg.field.p));
                self.report.aggregate_field = Some(field_agg);
                self.report.sign_sums = Some(sums);
            }
            Some(shape) => {
                if shape.range_bits.is_some() {
                    let nonzero = outputs[RFA_OUT_RANGE..o].iter().filter(|v| !v.is_zero()).count();
                    self.report.residuals.range_nonzero = Some(nonzero);
                    if nonzero > 0 {
                        return Step::Abort(format!("{nonzero} aggregated range residuals are nonzero"));
                    }
                }
                let raw = f.add(outputs[RFA_OUT_E1], outputs[RFA_OUT_E2]).value();
                let scaled = raw as f64 / p.powi(4);
                let tau = ctx.cfg.tau(n_active);
                self.report.residuals.rfa_raw = Some(raw);
                self.report.residuals.rfa_scaled = Some(scaled);
                self.report.residuals.rfa_tau = Some(tau);
                if scaled > tau {
                    return Step::Abort(format!("RFA residual {scaled} exceeds tolerance {tau}"));
                }
                let d = ctx.cfg.d;
                let den = f.centered(agg[d]) as f64 / p;
                if den <= 0.0 {
                    return Step::Abort("aggregated RFA weight is not positive".into());
                }
                let p2 = p * p;
                self.report.aggregate = Some(agg[..d].iter().map(|v| f.centered(*v) as f64 / p2 / den).collect());
            }
        }
        Step::Final
    }
}

/// Runs the server for one iteration against `users`.
pub fn run_server<P: Participants, R: Recorder, G: Rng + ?Sized>(
    ctx: &Context,
    commit: &CommitSetup,
    iteration: u64,
    rng: &mut G,
    users: &mut P,
    rec: &mut R,
) -> IterationReport {
    let n = ctx.n();
    let mut run = Run {
        ctx,
        commit,
        iteration,
        users,
        rec,
        excluded: BTreeMap::new(),
        report: IterationReport {
            iteration,
            verdict: Verdict::Abort,
            excluded: Vec::new(),
            passes: 0,
            tag_counts: Vec::new(),
            aggregate_field: None,
            aggregate: None,
            contributors: Vec::new(),
            sign_sums: None,
            residuals: Residuals::default(),
            abort_reason: None,
            bytes: ByteCounts {
                user_round1: vec![0; n],
                user_round2: vec![0; n],
                server: 0,
            },
        },
    };

    // Round 1: commitments and ciphertexts.
    let replies = run.users.round1();
    let mut commitments: Vec<Option<Commitments>> = vec![None; n];
    let mut relays: Vec<Vec<Relayed>> = vec![Vec::new(); n];
    for i in 0..n {
        let Some(bytes) = replies.get(i).cloned().flatten() else {
            continue;
        };
        run.log(0, i as u32, SERVER, MsgKind::Round1, &bytes);
        let Some(msg) = decode::<Round1>(&bytes) else {
            continue;
        };
        if msg.ciphertexts.len() != n || !run.commitments_fit(&msg.commitments) {
            continue;
        }
        commitments[i] = Some(msg.commitments);
        for (j, ct) in msg.ciphertexts.into_iter().enumerate() {
            relays[j].push(Relayed {
                sender: i,
                ciphertext: ct,
            });
        }
    }

    let (r, rho) = match run.users.recorded_challenge() {
        Some(v) => v,
        None => (ctx.key.random_challenge(rng).r, ctx.field.random(rng)),
    };
    let challenge = encode(&ChallengeMsg {
        r,
        rho,
        commitments: commitments.clone(),
    });
    run.log(0, SERVER, SERVER, MsgKind::Challenge, &challenge);
    run.report.bytes.server += relays
        .iter()
        .flatten()
        .map(|r| r.ciphertext.len() as u64)
        .sum::<u64>();
    run.users.deliver(&challenge, relays);

    let mut forwards = vec![Vec::new(); n];
    let mut resolved = BTreeSet::new();
    let verdict = if ctx.key.challenge(r).is_err() || r.value() >= ctx.field.modulus() {
        run.report.abort_reason = Some("invalid challenge".into());
        Verdict::Abort
    } else {
        let mut verdict = Verdict::Abort;
        run.report.abort_reason = Some("pass budget exhausted".into());
        for pass in 0..ctx.cfg.max_passes() {
            run.report.passes = pass + 1;
            match run.pass(pass, &commitments, &mut forwards, &mut resolved) {
                Step::Rerun => continue,
                Step::Abort(why) => {
                    run.report.abort_reason = Some(why);
                    break;
                }
                Step::Final => {
                    run.report.abort_reason = None;
                    verdict = if run.excluded.is_empty() {
                        Verdict::Done
                    } else {
                        Verdict::Rerun
                    };
                    break;
                }
            }
        }
        verdict
    };
    run.report.verdict = verdict;
    if verdict == Verdict::Abort {
        run.report.aggregate = None;
        run.report.aggregate_field = None;
    }
    run.report.excluded = run.excluded.values().cloned().collect();
    let outcome = encode(&(verdict, run.report.malicious_set()));
    let last = run.report.passes.saturating_sub(1);
    run.log(last, SERVER, SERVER, MsgKind::Outcome, &outcome);
    run.report
}
