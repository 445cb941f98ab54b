//! Secret-shared non-interactive proofs over LCC shares.
//!
//! For a circuit with `P` multiplication gates the prover interpolates `f_u`
//! and `f_v` of degree `P - 1` through the left and right gate inputs at the
//! nodes `1..=P` and shares the `2P - 1` coefficients of `h = f_u f_v`.
//! A verifier holding shares of the inputs and of `h` replays the circuit,
//! taking `[f_h](p)` as the share of gate `p`'s output, and evaluates
//! `[f_u(r)]`, `[f_v(r)]`, `[f_h(r)]` at a public challenge `r` outside the
//! nodes. One Beaver multiplication yields `[f_u(r) f_v(r)]`, and
//! `sigma = f_u(r) f_v(r) - f_h(r)` vanishes for an honest prover. A prover
//! that lies about any gate gets `sigma = 0` for at most `2P - 2` values of
//! `r`.
//!
//! Repeated circuits run packed: instance `(k, m)` sits in slot `k` of the
//! LCC sharing at offset `m`, so `K * M` copies cost one packed sharing. The
//! `M` identity tests of a slot are folded with public powers of `rho`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::beaver::{self, TripleShare};
use crate::circuit::{Circuit, CircuitError, Evaluation};
use crate::field::{Fe, Field};
use crate::lcc::{DecodeMode, Lcc, LccError};
use crate::poly::{self, Poly};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SnipError {
    #[error("{what} share has length {got}, expected {expected}")]
    ShareLength {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("challenge r = {0} collides with a gate node")]
    BadChallenge(u64),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Lcc(#[from] LccError),
}

/// How instances and their inputs are laid out in the packed sharings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    /// `K`
    pub slots: usize,
    /// `M`
    pub per_slot: usize,
    /// Circuit inputs taken from the shared data vector, per instance.
    pub data_inputs: usize,
    /// Circuit inputs taken from the shared witness vector, per instance.
    pub aux_inputs: usize,
}

impl Layout {
    pub fn instances(&self) -> usize {
        self.slots * self.per_slot
    }

    pub fn data_len(&self) -> usize {
        self.instances() * self.data_inputs
    }

    pub fn aux_len(&self) -> usize {
        self.instances() * self.aux_inputs
    }

    /// Inputs of instance `idx = k M + m` from the plaintext vectors; `data`
    /// may be shorter than [`Layout::data_len`] and is zero-padded.
    pub fn instance_inputs(&self, data: &[Fe], aux: &[Fe], idx: usize) -> Vec<Fe> {
        let mut out = Vec::with_capacity(self.data_inputs + self.aux_inputs);
        for w in 0..self.data_inputs {
            out.push(data.get(idx * self.data_inputs + w).copied().unwrap_or(Fe::ZERO));
        }
        out.extend_from_slice(&aux[idx * self.aux_inputs..(idx + 1) * self.aux_inputs]);
        out
    }
}

/// Circuit-specific precomputation shared by prover and verifiers.
#[derive(Clone, Debug)]
pub struct SnipKey {
    field: Field,
    circuit: Circuit,
    /// Lagrange basis over the nodes `1..=P`, as coefficient vectors.
    basis: Vec<Poly>,
    /// `vander[p][c] = (p + 1)^c` for `c < 2P - 1`.
    vander: Vec<Vec<Fe>>,
}

/// Per-challenge precomputation.
#[derive(Clone, Debug)]
pub struct Challenge {
    pub r: Fe,
    lag: Vec<Fe>,
    r_pows: Vec<Fe>,
}

/// Replay results for one instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceReplay {
    pub u_r: Fe,
    pub v_r: Fe,
    pub h_r: Fe,
    pub outputs: Vec<Fe>,
}

/// One holder's replay of one prover's `M` instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HolderView {
    pub u: Vec<Fe>,
    pub v: Vec<Fe>,
    pub h_r: Vec<Fe>,
    /// Instance-major, `M * outputs`.
    pub outputs: Vec<Fe>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigmaShare {
    pub prover: usize,
    pub holder: usize,
    pub value: Fe,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaVerdict {
    /// Decoded to zero; `bad_verifiers` submitted shares off the codeword.
    Honest { bad_verifiers: Vec<usize> },
    Cheat,
    Undecodable,
}

impl SnipKey {
    pub fn new(field: Field, circuit: Circuit) -> Result<Self, SnipError> {
        circuit.validate()?;
        let p = circuit.num_gates();
        let nodes = poly::integer_nodes(&field, p);
        let basis = (0..p)
            .map(|i| {
                let mut ys = vec![Fe::ZERO; p];
                ys[i] = Fe::ONE;
                poly::interpolate(&field, &nodes, &ys)
            })
            .collect();
        let vander = nodes
            .iter()
            .map(|&x| {
                let mut row = Vec::with_capacity(2 * p - 1);
                let mut pw = Fe::ONE;
                for _ in 0..2 * p - 1 {
                    row.push(pw);
                    pw = field.mul(pw, x);
                }
                row
            })
            .collect();
        Ok(Self {
            field,
            circuit,
            basis,
            vander,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn gates(&self) -> usize {
        self.circuit.num_gates()
    }

    /// `2P - 1` coefficients per instance.
    pub fn h_len(&self) -> usize {
        2 * self.gates() - 1
    }

    fn wire_poly(&self, values: &[Fe]) -> Poly {
        let mut out = vec![Fe::ZERO; values.len()];
        for (v, b) in values.iter().zip(&self.basis) {
            self.field.axpy(&mut out, *v, b);
        }
        out
    }

    /// Proof polynomial coefficients for one instance, plus the evaluation.
    pub fn prove_instance(&self, inputs: &[Fe]) -> (Vec<Fe>, Evaluation) {
        let ev = self.circuit.eval(&self.field, inputs);
        let fu = self.wire_poly(&ev.left);
        let fv = self.wire_poly(&ev.right);
        let mut h = poly::mul_exact(&self.field, &fu, &fv);
        h.resize(self.h_len(), Fe::ZERO);
        (h, ev)
    }

    /// Flat proof for every instance of `layout`, instance-major.
    pub fn prove(&self, layout: &Layout, data: &[Fe], aux: &[Fe]) -> Vec<Fe> {
        let mut h = Vec::with_capacity(layout.instances() * self.h_len());
        for idx in 0..layout.instances() {
            h.extend(self.prove_instance(&layout.instance_inputs(data, aux, idx)).0);
        }
        h
    }

    /// Claimed outputs of every instance, instance-major.
    pub fn outputs(&self, layout: &Layout, data: &[Fe], aux: &[Fe]) -> Vec<Fe> {
        (0..layout.instances())
            .flat_map(|idx| {
                self.circuit
                    .eval(&self.field, &layout.instance_inputs(data, aux, idx))
                    .outputs
            })
            .collect()
    }

    pub fn challenge(&self, r: Fe) -> Result<Challenge, SnipError> {
        let p = self.gates() as u64;
        if (1..=p).contains(&r.value()) {
            return Err(SnipError::BadChallenge(r.value()));
        }
        let nodes = poly::integer_nodes(&self.field, self.gates());
        let lag = poly::lagrange_weights(&self.field, &nodes, r);
        let mut r_pows = Vec::with_capacity(self.h_len());
        let mut pw = Fe::ONE;
        for _ in 0..self.h_len() {
            r_pows.push(pw);
            pw = self.field.mul(pw, r);
        }
        Ok(Challenge { r, lag, r_pows })
    }

    /// Draws a challenge uniformly from `F_q` minus the gate nodes.
    pub fn random_challenge<R: Rng + ?Sized>(&self, rng: &mut R) -> Challenge {
        loop {
            if let Ok(ch) = self.challenge(self.field.random(rng)) {
                return ch;
            }
        }
    }

    /// Replays one instance on any linear representation (plain values or
    /// shares) of its inputs and proof coefficients.
    pub fn replay_instance(&self, ch: &Challenge, inputs: &[Fe], h: &[Fe]) -> InstanceReplay {
        let f = &self.field;
        let p = self.gates();
        let mut gates = Vec::with_capacity(p);
        let mut u_r = Fe::ZERO;
        let mut v_r = Fe::ZERO;
        for (i, gate) in self.circuit.gates.iter().enumerate() {
            let l = gate.left.eval(f, inputs, &gates);
            let r = gate.right.eval(f, inputs, &gates);
            u_r = f.add(u_r, f.mul(ch.lag[i], l));
            v_r = f.add(v_r, f.mul(ch.lag[i], r));
            gates.push(f.dot(&self.vander[i], h));
        }
        let outputs = self
            .circuit
            .outputs
            .iter()
            .map(|o| o.eval(f, inputs, &gates))
            .collect();
        InstanceReplay {
            u_r,
            v_r,
            h_r: f.dot(&ch.r_pows, h),
            outputs,
        }
    }

    /// Holder-side replay over one prover's shares.
    pub fn replay(
        &self,
        ch: &Challenge,
        layout: &Layout,
        data: &[Fe],
        aux: &[Fe],
        h: &[Fe],
    ) -> Result<HolderView, SnipError> {
        let m = layout.per_slot;
        let check = |what, got: usize, expected: usize| {
            if got == expected {
                Ok(())
            } else {
                Err(SnipError::ShareLength { what, got, expected })
            }
        };
        check("data", data.len(), m * layout.data_inputs)?;
        check("witness", aux.len(), m * layout.aux_inputs)?;
        check("proof", h.len(), m * self.h_len())?;
        let hl = self.h_len();
        let mut view = HolderView {
            u: Vec::with_capacity(m),
            v: Vec::with_capacity(m),
            h_r: Vec::with_capacity(m),
            outputs: Vec::with_capacity(m * self.circuit.num_outputs()),
        };
        let mut inputs = Vec::with_capacity(layout.data_inputs + layout.aux_inputs);
        for i in 0..m {
            inputs.clear();
            inputs.extend_from_slice(&data[i * layout.data_inputs..(i + 1) * layout.data_inputs]);
            inputs.extend_from_slice(&aux[i * layout.aux_inputs..(i + 1) * layout.aux_inputs]);
            let rep = self.replay_instance(ch, &inputs, &h[i * hl..(i + 1) * hl]);
            view.u.push(rep.u_r);
            view.v.push(rep.v_r);
            view.h_r.push(rep.h_r);
            view.outputs.extend(rep.outputs);
        }
        Ok(view)
    }
}

/// `sum_m rho^m ([f_u f_v](r)_m - [f_h(r)]_m)` from the Beaver output.
pub fn sigma_share(
    lcc: &Lcc,
    holder: usize,
    view: &HolderView,
    triple: &TripleShare,
    d: &[Fe],
    e: &[Fe],
    rho: Fe,
) -> Fe {
    let f = lcc.field();
    let z = beaver::combine(lcc, holder, triple, d, e);
    let mut acc = Fe::ZERO;
    let mut pw = Fe::ONE;
    for (zm, hm) in z.iter().zip(&view.h_r) {
        acc = f.add(acc, f.mul(pw, f.sub(*zm, *hm)));
        pw = f.mul(pw, rho);
    }
    acc
}

/// Decides a prover's identity test from the verifiers' sigma shares.
///
/// The shares are first decoded against the zero-slot subcode, which corrects
/// up to `(n - T) / 2` bad verifier shares. Otherwise a full decode tells a
/// nonzero (cheating) sigma apart from an undecodable word.
pub fn sigma_check(lcc: &Lcc, shares: &[(usize, Fe)]) -> SigmaVerdict {
    let (n, k, t) = (shares.len(), lcc.params().k, lcc.params().t);
    // A nonzero sigma is at distance >= n - K - T + 1 from the subcode; only
    // trust the larger subcode radius when that distance exceeds it.
    let radius = if n + 2 > 2 * k + t {
        n.saturating_sub(t) / 2
    } else {
        n.saturating_sub(k + t) / 2
    };
    if let Ok(bad_verifiers) = lcc.decode_zero(shares) {
        if bad_verifiers.len() <= radius {
            return SigmaVerdict::Honest { bad_verifiers };
        }
    }
    let cols: Vec<Vec<Fe>> = shares.iter().map(|(_, v)| vec![*v]).collect();
    let pairs: Vec<(usize, &[Fe])> = shares.iter().zip(&cols).map(|((h, _), c)| (*h, &c[..])).collect();
    match lcc.decode_blocks(&pairs, DecodeMode::ErrorCorrecting) {
        Ok(_) => SigmaVerdict::Cheat,
        Err(_) => SigmaVerdict::Undecodable,
    }
}

/// Result of running one proof through every verifier in a single process.
#[derive(Clone, Debug)]
pub struct LocalOutcome {
    pub sigma: Vec<(usize, Fe)>,
    /// Per holder, instance-major output shares.
    pub outputs: Vec<Vec<Fe>>,
    pub verdict: SigmaVerdict,
}

/// Shares `data`, `aux` and the proof `h`, deals a triple, and runs every
/// holder's verification. Used by tests and benchmarks; the protocol drives
/// the same steps through its message rounds.
#[allow(clippy::too_many_arguments)]
pub fn run_local<R: Rng + ?Sized>(
    lcc: &Lcc,
    key: &SnipKey,
    layout: &Layout,
    data: &[Fe],
    aux: &[Fe],
    h: &[Fe],
    ch: &Challenge,
    rho: Fe,
    rng: &mut R,
) -> Result<LocalOutcome, SnipError> {
    let n = lcc.n();
    let mut share = |v: &[Fe]| -> Result<Vec<Vec<Fe>>, LccError> {
        if v.is_empty() {
            return Ok(vec![Vec::new(); n]);
        }
        Ok(lcc.share(0, v, rng)?.shares.into_iter().map(|s| s.payload).collect())
    };
    let sd = share(data)?;
    let sa = share(aux)?;
    let sh = share(h)?;
    let triples = beaver::deal(lcc, layout.per_slot, rng)?;
    let mut views = Vec::with_capacity(n);
    for j in 0..n {
        views.push(key.replay(ch, layout, &sd[j], &sa[j], &sh[j])?);
    }
    let masked: Vec<(Vec<Fe>, Vec<Fe>)> = (0..n)
        .map(|j| beaver::mask(lcc, &triples[j], &views[j].u, &views[j].v))
        .collect();
    let ds: Vec<(usize, &[Fe])> = masked.iter().enumerate().map(|(j, x)| (j, &x.0[..])).collect();
    let es: Vec<(usize, &[Fe])> = masked.iter().enumerate().map(|(j, x)| (j, &x.1[..])).collect();
    let (d, _) = beaver::open(lcc, &ds)?;
    let (e, _) = beaver::open(lcc, &es)?;
    let sigma: Vec<(usize, Fe)> = (0..n)
        .map(|j| (j, sigma_share(lcc, j, &views[j], &triples[j], &d, &e, rho)))
        .collect();
    let verdict = sigma_check(lcc, &sigma);
    Ok(LocalOutcome {
        sigma,
        outputs: views.into_iter().map(|v| v.outputs).collect(),
        verdict,
    })
}
