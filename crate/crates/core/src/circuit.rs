//! Arithmetic circuits with explicit multiplication gates.
//!
//! Every gate multiplies two affine combinations of circuit inputs and the
//! outputs of earlier gates. Outputs are affine combinations as well, so
//! anyone holding linear shares of the inputs and of the gate outputs can
//! replay the whole circuit locally.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::field::{Fe, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Wire {
    Input(usize),
    Gate(usize),
}

/// `constant + sum coef * wire`, coefficients as signed integers lifted into the field.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Affine {
    pub constant: i64,
    pub terms: Vec<(Wire, i64)>,
}

impl Affine {
    pub fn wire(w: Wire) -> Self {
        Self {
            constant: 0,
            terms: vec![(w, 1)],
        }
    }

    pub fn input(i: usize) -> Self {
        Self::wire(Wire::Input(i))
    }

    pub fn gate(g: usize) -> Self {
        Self::wire(Wire::Gate(g))
    }

    pub fn constant(c: i64) -> Self {
        Self {
            constant: c,
            terms: Vec::new(),
        }
    }

    pub fn plus(mut self, w: Wire, coef: i64) -> Self {
        self.terms.push((w, coef));
        self
    }

    pub fn plus_const(mut self, c: i64) -> Self {
        self.constant += c;
        self
    }

    pub fn scaled(mut self, s: i64) -> Self {
        self.constant *= s;
        for t in &mut self.terms {
            t.1 *= s;
        }
        self
    }

    /// Works on plain values and on LCC shares alike: a public constant added
    /// to every share of a packed sharing adds it to every slot.
    pub fn eval(&self, f: &Field, inputs: &[Fe], gates: &[Fe]) -> Fe {
        let mut acc = f.from_i64(self.constant);
        for &(w, c) in &self.terms {
            let v = match w {
                Wire::Input(i) => inputs[i],
                Wire::Gate(g) => gates[g],
            };
            acc = f.add(acc, f.mul(f.from_i64(c), v));
        }
        acc
    }

    fn canonical(&self) -> String {
        let mut s = format!("{}", self.constant);
        for (w, c) in &self.terms {
            match w {
                Wire::Input(i) => s.push_str(&format!(" {c:+}*x{i}")),
                Wire::Gate(g) => s.push_str(&format!(" {c:+}*g{g}")),
            }
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub left: Affine,
    pub right: Affine,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    pub name: String,
    pub num_inputs: usize,
    pub gates: Vec<Gate>,
    pub outputs: Vec<Affine>,
}

/// Every intermediate value of one plaintext evaluation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub left: Vec<Fe>,
    pub right: Vec<Fe>,
    pub gates: Vec<Fe>,
    pub outputs: Vec<Fe>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CircuitError {
    #[error("gate {gate} reads wire {wire:?}, which is not available yet")]
    Order { gate: usize, wire: Wire },
    #[error("output {output} reads unknown wire {wire:?}")]
    Output { output: usize, wire: Wire },
    #[error("circuit has no multiplication gates")]
    Empty,
}

impl Circuit {
    pub fn num_gates(&self) -> usize {
        self.gates.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Checks topological order: gate `p` may read only inputs and gates `< p`.
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.gates.is_empty() {
            return Err(CircuitError::Empty);
        }
        let ok = |w: Wire, limit: usize| match w {
            Wire::Input(i) => i < self.num_inputs,
            Wire::Gate(g) => g < limit,
        };
        for (p, gate) in self.gates.iter().enumerate() {
            for &(w, _) in gate.left.terms.iter().chain(&gate.right.terms) {
                if !ok(w, p) {
                    return Err(CircuitError::Order { gate: p, wire: w });
                }
            }
        }
        for (o, out) in self.outputs.iter().enumerate() {
            for &(w, _) in &out.terms {
                if !ok(w, self.gates.len()) {
                    return Err(CircuitError::Output { output: o, wire: w });
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, f: &Field, inputs: &[Fe]) -> Evaluation {
        assert_eq!(inputs.len(), self.num_inputs, "circuit {} input count", self.name);
        let p = self.gates.len();
        let mut ev = Evaluation {
            left: Vec::with_capacity(p),
            right: Vec::with_capacity(p),
            gates: Vec::with_capacity(p),
            outputs: Vec::with_capacity(self.outputs.len()),
        };
        for gate in &self.gates {
            let l = gate.left.eval(f, inputs, &ev.gates);
            let r = gate.right.eval(f, inputs, &ev.gates);
            ev.left.push(l);
            ev.right.push(r);
            ev.gates.push(f.mul(l, r));
        }
        for out in &self.outputs {
            ev.outputs.push(out.eval(f, inputs, &ev.gates));
        }
        ev
    }

    /// One line per gate and output; stable across runs and platforms.
    pub fn canonical_text(&self) -> String {
        let mut s = format!("circuit {} inputs {}\n", self.name, self.num_inputs);
        for (p, g) in self.gates.iter().enumerate() {
            s.push_str(&format!("g{p} = ({}) * ({})\n", g.left.canonical(), g.right.canonical()));
        }
        for (o, out) in self.outputs.iter().enumerate() {
            s.push_str(&format!("out{o} = {}\n", out.canonical()));
        }
        s
    }

    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.canonical_text().as_bytes()).into()
    }
}
