use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::context::{deal_iteration, Setup};
use super::messages::Relayed;
use super::server::{run_server, IterationReport, Participants, Recorder};
use super::user::{Behavior, User};
use super::{BeaverSource, ProtocolError};
use crate::adversary::AdversarySpec;
use crate::field::Fe;
use crate::rng::stream;

/// Wall-clock seconds per phase; kept out of the deterministic report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Mean per-user round-1 time.
    pub user_round1: f64,
    /// Mean per-user round-2 time over all passes.
    pub user_round2: f64,
    /// Server time, user work excluded.
    pub server: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Run users of a round on the rayon pool.
    pub parallel: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: true }
    }
}

/// Simulated users driven in-process.
pub struct LiveUsers<'a> {
    users: Vec<User<'a>>,
    updates: &'a [Vec<f64>],
    parallel: bool,
    r1: Vec<f64>,
    r2: Vec<f64>,
    error: Option<ProtocolError>,
}

impl<'a> LiveUsers<'a> {
    pub fn new(
        setup: &'a Setup,
        seed: u64,
        iteration: u64,
        updates: &'a [Vec<f64>],
        adversary: &AdversarySpec,
        parallel: bool,
    ) -> Result<Self, ProtocolError> {
        let n = setup.ctx.n();
        if updates.len() != n {
            return Err(ProtocolError::Input(format!("{} updates for {n} users", updates.len())));
        }
        if let Some(&bad) = adversary.corrupted.iter().find(|&&i| i >= n) {
            return Err(ProtocolError::Input(format!("corrupted user {bad} out of range")));
        }
        let mut dealt = match setup.ctx.cfg.beaver {
            BeaverSource::Dealer => Some(deal_iteration(&setup.ctx, seed, iteration)?.into_iter()),
            BeaverSource::SelfDealt => None,
        };
        let users = (0..n)
            .map(|i| {
                let behavior = if adversary.is_corrupted(i) {
                    Behavior {
                        attack: adversary.protocol_attack.clone(),
                        corrupted: adversary.corrupted.clone(),
                    }
                } else {
                    Behavior::honest()
                };
                User::new(
                    setup,
                    i,
                    iteration,
                    stream(seed, "user", iteration, i as u64),
                    behavior,
                    dealt.as_mut().and_then(Iterator::next),
                )
            })
            .collect();
        Ok(Self {
            users,
            updates,
            parallel,
            r1: vec![0.0; n],
            r2: vec![0.0; n],
            error: None,
        })
    }

    fn each<T: Send>(&mut self, f: impl Fn(&mut User<'a>) -> T + Sync + Send) -> Vec<(T, f64)> {
        let timed = |u: &mut User<'a>| {
            let t0 = Instant::now();
            let out = f(u);
            (out, t0.elapsed().as_secs_f64())
        };
        if self.parallel {
            self.users.par_iter_mut().map(timed).collect()
        } else {
            self.users.iter_mut().map(timed).collect()
        }
    }

    fn add_r2<T>(&mut self, out: Vec<(T, f64)>) -> Vec<T> {
        out.into_iter()
            .enumerate()
            .map(|(i, (v, dt))| {
                self.r2[i] += dt;
                v
            })
            .collect()
    }

    pub fn quantized(&self) -> Vec<Option<Vec<Fe>>> {
        self.users.iter().map(|u| u.quantized().map(<[Fe]>::to_vec)).collect()
    }

    pub fn timings(&self) -> (f64, f64) {
        let n = self.users.len() as f64;
        (self.r1.iter().sum::<f64>() / n, self.r2.iter().sum::<f64>() / n)
    }
}

impl Participants for LiveUsers<'_> {
    fn round1(&mut self) -> Vec<Option<Vec<u8>>> {
        let updates = self.updates;
        let out = self.each(|u| u.round1(&updates[u.id()]));
        out.into_iter()
            .enumerate()
            .map(|(i, (res, dt))| {
                self.r1[i] += dt;
                match res {
                    Ok(v) => v,
                    Err(e) => {
                        self.error.get_or_insert(e);
                        None
                    }
                }
            })
            .collect()
    }

    fn deliver(&mut self, challenge: &[u8], relayed: Vec<Vec<Relayed>>) {
        let out = self.each(|u| u.receive(challenge, &relayed[u.id()]));
        self.add_r2(out);
    }

    fn round2a(&mut self, start: &[u8], forwards: &[Vec<Vec<u8>>]) -> Vec<Option<Vec<u8>>> {
        let out = self.each(|u| u.round2a(start, &forwards[u.id()]));
        self.add_r2(out)
    }

    fn reveal(&mut self, requests: &[(usize, Vec<u8>)]) -> Vec<Option<Vec<u8>>> {
        requests
            .iter()
            .map(|(j, req)| self.users.get(*j).and_then(|u| u.reveal(req)))
            .collect()
    }

    fn round2b(&mut self, openings: &[u8]) -> Vec<Option<Vec<u8>>> {
        let out = self.each(|u| u.round2b(openings));
        self.add_r2(out)
    }
}

/// Report plus what only the simulation knows.
#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub report: IterationReport,
    /// Each user's quantized update; `None` for users silent in round 1.
    pub quantized: Vec<Option<Vec<Fe>>>,
    pub timings: Timings,
}

/// Runs one iteration: dealer, users' rounds, server rounds and reruns.
pub fn run_iteration<R: Recorder>(
    setup: &Setup,
    seed: u64,
    iteration: u64,
    updates: &[Vec<f64>],
    adversary: &AdversarySpec,
    options: RunOptions,
    recorder: &mut R,
) -> Result<IterationOutcome, ProtocolError> {
    let mut users = LiveUsers::new(setup, seed, iteration, updates, adversary, options.parallel)?;
    let mut rng = stream(seed, "server", iteration, 0);
    let t0 = Instant::now();
    let report = run_server(&setup.ctx, &setup.commit, iteration, &mut rng, &mut users, recorder);
    let total = t0.elapsed().as_secs_f64();
    if let Some(e) = users.error.take() {
        return Err(e);
    }
    let (r1, r2) = users.timings();
    let user_work: f64 = users.r1.iter().chain(&users.r2).sum();
    let user_wall = if options.parallel {
        // Parallel rounds overlap; count each round's slowest user instead.
        users.r1.iter().cloned().fold(0.0, f64::max) + users.r2.iter().cloned().fold(0.0, f64::max)
    } else {
        user_work
    };
    Ok(IterationOutcome {
        report,
        quantized: users.quantized(),
        timings: Timings {
            user_round1: r1,
            user_round2: r2,
            server: (total - user_wall).max(0.0),
        },
    })
}
