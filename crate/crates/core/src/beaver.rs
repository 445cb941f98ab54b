//! Beaver multiplication on LCC shares.
//!
//! A packed triple holds `a, b` uniform and `c = a * b` slot-wise, each a
//! `K`-slot vector of length `M` per slot. Opening `D = u - a` and `E = v - b`
//! is safe because `a, b` are uniform masks. The product then follows from
//! `uv = c + D b + E a + D E`. A public slot-varying vector times a packed
//! share is not a local operation, so the dealer also shares `a e_k` and
//! `b e_k` (the triple restricted to slot `k`), turning `D b` into
//! `sum_k D_k [b e_k]`. Every result stays on a degree-(K+T-1) polynomial.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::field::Fe;
use crate::lcc::{DecodeMode, Lcc, LccError};

/// One holder's view of a packed triple. All vectors have length `M`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TripleShare {
    pub a: Vec<Fe>,
    pub b: Vec<Fe>,
    pub c: Vec<Fe>,
    pub a_units: Vec<Vec<Fe>>,
    pub b_units: Vec<Vec<Fe>>,
}

/// Deals a packed triple with `m` entries per slot; returns one share per holder.
pub fn deal<R: Rng + ?Sized>(lcc: &Lcc, m: usize, rng: &mut R) -> Result<Vec<TripleShare>, LccError> {
    let f = lcc.field();
    let k = lcc.params().k;
    let a = f.random_vec(rng, k * m);
    let b = f.random_vec(rng, k * m);
    let c: Vec<Fe> = a.iter().zip(&b).map(|(x, y)| f.mul(*x, *y)).collect();
    let share_all = |v: &[Fe], rng: &mut R| -> Result<Vec<Vec<Fe>>, LccError> {
        Ok(lcc
            .share(0, v, rng)?
            .shares
            .into_iter()
            .map(|s| s.payload)
            .collect())
    };
    let unit = |v: &[Fe], slot: usize| -> Vec<Fe> {
        let mut out = vec![Fe::ZERO; k * m];
        out[slot * m..(slot + 1) * m].copy_from_slice(&v[slot * m..(slot + 1) * m]);
        out
    };
    let sa = share_all(&a, rng)?;
    let sb = share_all(&b, rng)?;
    let sc = share_all(&c, rng)?;
    let mut ua = Vec::with_capacity(k);
    let mut ub = Vec::with_capacity(k);
    for slot in 0..k {
        ua.push(share_all(&unit(&a, slot), rng)?);
        ub.push(share_all(&unit(&b, slot), rng)?);
    }
    Ok((0..lcc.n())
        .map(|j| TripleShare {
            a: sa[j].clone(),
            b: sb[j].clone(),
            c: sc[j].clone(),
            a_units: ua.iter().map(|s| s[j].clone()).collect(),
            b_units: ub.iter().map(|s| s[j].clone()).collect(),
        })
        .collect())
}

/// `([u] - [a], [v] - [b])`
pub fn mask(lcc: &Lcc, t: &TripleShare, u: &[Fe], v: &[Fe]) -> (Vec<Fe>, Vec<Fe>) {
    let f = lcc.field();
    let d = u.iter().zip(&t.a).map(|(x, y)| f.sub(*x, *y)).collect();
    let e = v.iter().zip(&t.b).map(|(x, y)| f.sub(*x, *y)).collect();
    (d, e)
}

/// Opens a packed value from holder shares; returns the `K * M` slot-major vector.
/// Error-correcting decoding is used whenever there is slack for it.
pub fn open(lcc: &Lcc, shares: &[(usize, &[Fe])]) -> Result<(Vec<Fe>, Vec<usize>), LccError> {
    let mode = if shares.len() > lcc.params().width() {
        DecodeMode::ErrorCorrecting
    } else {
        DecodeMode::Erasure
    };
    let (blocks, bad) = lcc.decode_blocks(shares, mode)?;
    Ok((blocks.into_iter().take(lcc.params().k).flatten().collect(), bad))
}

/// Share of `u * v` given the opened `D` and `E` (slot-major, length `K * M`).
pub fn combine(lcc: &Lcc, holder: usize, t: &TripleShare, d: &[Fe], e: &[Fe]) -> Vec<Fe> {
    let f = lcc.field();
    let k = lcc.params().k;
    let m = t.c.len();
    let mut z = t.c.clone();
    for slot in 0..k {
        let ds = &d[slot * m..(slot + 1) * m];
        let es = &e[slot * m..(slot + 1) * m];
        for i in 0..m {
            let term = f.add(
                f.mul(ds[i], t.b_units[slot][i]),
                f.mul(es[i], t.a_units[slot][i]),
            );
            z[i] = f.add(z[i], term);
        }
    }
    let de: Vec<Vec<Fe>> = (0..k)
        .map(|slot| (0..m).map(|i| f.mul(d[slot * m + i], e[slot * m + i])).collect())
        .collect();
    f.add_assign(&mut z, &lcc.public_share(&de, holder));
    z
}

/// Triple for a shared scalar times a shared vector under `K = 1`:
/// `a` scalar, `b` of length `len`, `c = a b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleTripleShare {
    pub a: Fe,
    pub b: Vec<Fe>,
    pub c: Vec<Fe>,
}

pub fn deal_scale<R: Rng + ?Sized>(
    lcc: &Lcc,
    len: usize,
    rng: &mut R,
) -> Result<Vec<ScaleTripleShare>, LccError> {
    assert_eq!(lcc.params().k, 1, "scalar-vector triples need K = 1");
    let f = lcc.field();
    let a = f.random(rng);
    let b = f.random_vec(rng, len);
    let c: Vec<Fe> = b.iter().map(|x| f.mul(a, *x)).collect();
    let sa = lcc.share(0, &[a], rng)?.shares;
    let sb = lcc.share(0, &b, rng)?.shares;
    let sc = lcc.share(0, &c, rng)?.shares;
    Ok((0..lcc.n())
        .map(|j| ScaleTripleShare {
            a: sa[j].payload[0],
            b: sb[j].payload.clone(),
            c: sc[j].payload.clone(),
        })
        .collect())
}

/// Share of `w * x` from the opened `D = w - a` and `E = x - b`.
pub fn combine_scale(lcc: &Lcc, t: &ScaleTripleShare, d: Fe, e: &[Fe]) -> Vec<Fe> {
    let f = lcc.field();
    t.c.iter()
        .zip(&t.b)
        .zip(e)
        .map(|((c, b), ek)| {
            let v = f.add(*c, f.mul(d, *b));
            let v = f.add(v, f.mul(*ek, t.a));
            f.add(v, f.mul(d, *ek))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::lcc::LccParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn lcc(n: usize, k: usize, t: usize) -> Lcc {
        let f = Field::new(crate::field::DEFAULT_Q).unwrap();
        Lcc::new(f, LccParams::standard(&f, n, k, t).unwrap())
    }

    #[test]
    fn packed_product_is_slotwise_and_keeps_degree() {
        let lcc = lcc(9, 3, 2);
        let f = *lcc.field();
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let m = 4;
        let u = f.random_vec(&mut rng, 3 * m);
        let v = f.random_vec(&mut rng, 3 * m);
        let su = lcc.share(0, &u, &mut rng).unwrap().shares;
        let sv = lcc.share(0, &v, &mut rng).unwrap().shares;
        let triples = deal(&lcc, m, &mut rng).unwrap();
        let masked: Vec<(Vec<Fe>, Vec<Fe>)> = (0..9)
            .map(|j| mask(&lcc, &triples[j], &su[j].payload, &sv[j].payload))
            .collect();
        let ds: Vec<(usize, &[Fe])> = masked.iter().enumerate().map(|(j, x)| (j, &x.0[..])).collect();
        let es: Vec<(usize, &[Fe])> = masked.iter().enumerate().map(|(j, x)| (j, &x.1[..])).collect();
        let (d, _) = open(&lcc, &ds).unwrap();
        let (e, _) = open(&lcc, &es).unwrap();
        let z: Vec<Vec<Fe>> = (0..9).map(|j| combine(&lcc, j, &triples[j], &d, &e)).collect();
        let pairs: Vec<(usize, &[Fe])> = z.iter().enumerate().map(|(j, v)| (j, &v[..])).collect();
        let prod = lcc.recon(&pairs, 3 * m, DecodeMode::Erasure).unwrap();
        let expected: Vec<Fe> = u.iter().zip(&v).map(|(a, b)| f.mul(*a, *b)).collect();
        assert_eq!(prod, expected);
        for pos in 0..m {
            let col: Vec<(usize, Fe)> = z.iter().enumerate().map(|(j, v)| (j, v[pos])).collect();
            assert_eq!(lcc.inconsistent_count(&col), 0);
        }
    }

    #[test]
    fn scalar_vector_product() {
        let lcc = lcc(5, 1, 2);
        let f = *lcc.field();
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let w = f.random(&mut rng);
        let x = f.random_vec(&mut rng, 6);
        let sw = lcc.share(0, &[w], &mut rng).unwrap().shares;
        let sx = lcc.share(0, &x, &mut rng).unwrap().shares;
        let t = deal_scale(&lcc, 6, &mut rng).unwrap();
        let ds: Vec<Vec<Fe>> = (0..5).map(|j| vec![f.sub(sw[j].payload[0], t[j].a)]).collect();
        let es: Vec<Vec<Fe>> = (0..5)
            .map(|j| sx[j].payload.iter().zip(&t[j].b).map(|(a, b)| f.sub(*a, *b)).collect())
            .collect();
        let d = lcc.recon(&ds.iter().enumerate().map(|(j, v)| (j, &v[..])).collect::<Vec<_>>(), 1, DecodeMode::Erasure).unwrap()[0];
        let e = lcc.recon(&es.iter().enumerate().map(|(j, v)| (j, &v[..])).collect::<Vec<_>>(), 6, DecodeMode::Erasure).unwrap();
        let z: Vec<Vec<Fe>> = (0..5).map(|j| combine_scale(&lcc, &t[j], d, &e)).collect();
        let out = lcc
            .recon(&z.iter().enumerate().map(|(j, v)| (j, &v[..])).collect::<Vec<_>>(), 6, DecodeMode::Erasure)
            .unwrap();
        let expected: Vec<Fe> = x.iter().map(|v| f.mul(w, *v)).collect();
        assert_eq!(out, expected);
    }
}
