//! Dense univariate polynomials over `F_q`, coefficients lowest degree first.

use crate::field::{Fe, Field};

pub type Poly = Vec<Fe>;

/// Drops trailing zero coefficients. The zero polynomial becomes empty.
pub fn trim(mut a: Poly) -> Poly {
    while a.last().is_some_and(|c| c.is_zero()) {
        a.pop();
    }
    a
}

/// Degree of a trimmed polynomial; `None` for zero.
pub fn degree(a: &[Fe]) -> Option<usize> {
    a.iter().rposition(|c| !c.is_zero())
}

pub fn eval(f: &Field, a: &[Fe], x: Fe) -> Fe {
    a.iter().rev().fold(Fe::ZERO, |acc, &c| f.add(f.mul(acc, x), c))
}

pub fn add(f: &Field, a: &[Fe], b: &[Fe]) -> Poly {
    let mut out = vec![Fe::ZERO; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(Fe::ZERO);
        let y = b.get(i).copied().unwrap_or(Fe::ZERO);
        *o = f.add(x, y);
    }
    trim(out)
}

pub fn sub(f: &Field, a: &[Fe], b: &[Fe]) -> Poly {
    let mut out = vec![Fe::ZERO; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(Fe::ZERO);
        let y = b.get(i).copied().unwrap_or(Fe::ZERO);
        *o = f.sub(x, y);
    }
    trim(out)
}

pub fn mul(f: &Field, a: &[Fe], b: &[Fe]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let q = f.modulus() as u128;
    let mut acc = vec![0u128; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            acc[i + j] += (x.value() * y.value()) as u128;
        }
    }
    acc.into_iter().map(|v| f.elem((v % q) as u64)).collect()
}

/// Full product without trimming: `len = a.len() + b.len() - 1`.
pub fn mul_exact(f: &Field, a: &[Fe], b: &[Fe]) -> Poly {
    let mut out = mul(f, a, b);
    if !a.is_empty() && !b.is_empty() {
        out.resize(a.len() + b.len() - 1, Fe::ZERO);
    }
    out
}

/// Euclidean division; panics if `b` is zero.
pub fn divrem(f: &Field, a: &[Fe], b: &[Fe]) -> (Poly, Poly) {
    let b = trim(b.to_vec());
    let db = degree(&b).expect("division by the zero polynomial");
    let mut r = trim(a.to_vec());
    if r.len() <= db {
        return (Vec::new(), r);
    }
    let lead_inv = f.inv(b[db]);
    let mut quot = vec![Fe::ZERO; r.len() - db];
    while let Some(dr) = degree(&r) {
        if dr < db {
            break;
        }
        let coef = f.mul(r[dr], lead_inv);
        quot[dr - db] = coef;
        for (i, &bc) in b.iter().enumerate() {
            r[dr - db + i] = f.sub(r[dr - db + i], f.mul(coef, bc));
        }
        r = trim(r);
    }
    (trim(quot), r)
}

/// `prod_i (x - roots[i])`
pub fn from_roots(f: &Field, roots: &[Fe]) -> Poly {
    let mut out = vec![Fe::ONE];
    for &r in roots {
        let mut next = vec![Fe::ZERO; out.len() + 1];
        for (i, &c) in out.iter().enumerate() {
            next[i + 1] = f.add(next[i + 1], c);
            next[i] = f.sub(next[i], f.mul(c, r));
        }
        out = next;
    }
    out
}

/// Coefficients of the unique polynomial of degree `< xs.len()` through the
/// points; the result always has exactly `xs.len()` coefficients.
pub fn interpolate(f: &Field, xs: &[Fe], ys: &[Fe]) -> Poly {
    assert_eq!(xs.len(), ys.len(), "interpolation length mismatch");
    let n = xs.len();
    if n == 0 {
        return Vec::new();
    }
    // Newton divided differences.
    let mut dd = ys.to_vec();
    for level in 1..n {
        let denoms: Vec<Fe> = (level..n).map(|i| f.sub(xs[i], xs[i - level])).collect();
        let inv = f.batch_inv(&denoms);
        for i in (level..n).rev() {
            dd[i] = f.mul(f.sub(dd[i], dd[i - 1]), inv[i - level]);
        }
    }
    // Expand the Newton form with Horner's scheme.
    let mut coeffs = vec![Fe::ZERO; n];
    coeffs[0] = dd[n - 1];
    let mut len = 1;
    for i in (0..n - 1).rev() {
        // coeffs = coeffs * (x - xs[i]) + dd[i]
        for j in (0..len).rev() {
            let c = coeffs[j];
            coeffs[j + 1] = f.add(coeffs[j + 1], c);
            coeffs[j] = f.neg(f.mul(c, xs[i]));
        }
        len += 1;
        coeffs[0] = f.add(coeffs[0], dd[i]);
    }
    coeffs
}

/// Lagrange weights `w` with `P(target) = sum_i w[i] * P(xs[i])` for every
/// polynomial of degree `< xs.len()`.
pub fn lagrange_weights(f: &Field, xs: &[Fe], target: Fe) -> Vec<Fe> {
    let n = xs.len();
    if let Some(i) = xs.iter().position(|&x| x == target) {
        let mut w = vec![Fe::ZERO; n];
        w[i] = Fe::ONE;
        return w;
    }
    let diffs: Vec<Fe> = xs.iter().map(|&x| f.sub(target, x)).collect();
    let full = diffs.iter().fold(Fe::ONE, |acc, &d| f.mul(acc, d));
    let mut denoms = Vec::with_capacity(n);
    for i in 0..n {
        let mut d = diffs[i];
        for j in 0..n {
            if i != j {
                d = f.mul(d, f.sub(xs[i], xs[j]));
            }
        }
        denoms.push(d);
    }
    f.batch_inv(&denoms)
        .into_iter()
        .map(|inv| f.mul(full, inv))
        .collect()
}

/// Nodes `1, 2, ..., n` as field elements.
pub fn integer_nodes(f: &Field, n: usize) -> Vec<Fe> {
    (1..=n as u64).map(|v| f.elem(v)).collect()
}
