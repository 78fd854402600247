//! Seeded generators shared by the property suite and the acceptance gate.
#![allow(dead_code)]

use gps::transforms::{ElementaryTransform, Lambda, Sign, TransformKind};
use gps::{q, qr, MultiExponent, Series, Signature, Q};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// x-exponents drawn from `{0, 1/2, 1, 3/2, 2, 3}` when `fractional`, else `{0, …, 3}`.
fn x_exponent(r: &mut ChaCha8Rng, fractional: bool) -> Q {
    if fractional {
        [q(0), qr(1, 2), q(1), qr(3, 2), q(2), q(3)][r.gen_range(0..6)].clone()
    } else {
        q(r.gen_range(0..4))
    }
}

fn coefficient(r: &mut ChaCha8Rng) -> Q {
    let num = r.gen_range(1..6) * if r.gen_bool(0.5) { 1 } else { -1 };
    qr(num, r.gen_range(1..4))
}

/// A random series with at most `terms` terms, all of degree below `prec`.
pub fn series(r: &mut ChaCha8Rng, sig: Signature, prec: i64, terms: usize, fractional: bool) -> Series {
    let p = q(prec);
    let mut out = Vec::new();
    for _ in 0..terms {
        let x: Vec<Q> = (0..sig.m).map(|_| x_exponent(r, fractional)).collect();
        let y: Vec<u32> = (0..sig.n).map(|_| r.gen_range(0..3)).collect();
        let e = MultiExponent::new(x, y).unwrap();
        if *e.degree() < p {
            out.push((e, coefficient(r)));
        }
    }
    Series::from_terms(sig, out, p).unwrap()
}

/// Like [`series`] but never zero.
pub fn nonzero_series(r: &mut ChaCha8Rng, sig: Signature, prec: i64, terms: usize, fractional: bool) -> Series {
    loop {
        let s = series(r, sig, prec, terms, fractional);
        if !s.is_zero() {
            return s;
        }
    }
}

fn lambda(r: &mut ChaCha8Rng, signed: bool) -> Lambda {
    match r.gen_range(0..5) {
        0 => Lambda::zero(),
        1 => Lambda::PosInf,
        2 if signed => Lambda::NegInf,
        _ => {
            let l = [qr(1, 2), q(1), q(2)][r.gen_range(0..3)].clone();
            Lambda::Finite(if signed && r.gen_bool(0.5) { -l } else { l })
        }
    }
}

fn sign(r: &mut ChaCha8Rng) -> Sign {
    if r.gen_bool(0.5) {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

/// One transform of each variant family on `sig` (which needs `m, n ≥ 2`),
/// with every chart parameter kind represented.
pub fn variant_catalogue(sig: Signature) -> Vec<ElementaryTransform> {
    let h = Series::from_terms(
        Signature::new(sig.m, 1),
        [
            (MultiExponent::new(vec![q(1); sig.m], vec![0]).unwrap(), q(1)),
            (MultiExponent::new(vec![q(0); sig.m], vec![2]).unwrap(), qr(-1, 2)),
        ],
        q(8),
    )
    .unwrap();
    let kinds = vec![
        TransformKind::BlowUpXX { i: 2, j: 1, lambda: Lambda::Finite(q(1)) },
        TransformKind::BlowUpXX { i: 1, j: 2, lambda: Lambda::zero() },
        TransformKind::BlowUpXX { i: 1, j: 2, lambda: Lambda::PosInf },
        TransformKind::BlowUpYX { i: 1, j: 2, lambda: Lambda::Finite(qr(-1, 2)) },
        TransformKind::BlowUpYX { i: 2, j: 1, lambda: Lambda::zero() },
        TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::PosInf },
        TransformKind::BlowUpYX { i: 2, j: 2, lambda: Lambda::NegInf },
        TransformKind::BlowUpYY { i: 2, j: 1, lambda: Lambda::Finite(q(2)) },
        TransformKind::BlowUpYY { i: 1, j: 2, lambda: Lambda::zero() },
        TransformKind::BlowUpYY { i: 1, j: 2, lambda: Lambda::PosInf },
        TransformKind::Tschirnhausen { i: 2, h },
        TransformKind::Linear { i: 2, c: vec![q(3)] },
        TransformKind::RamifyX { i: 1, gamma: q(2) },
        TransformKind::RamifyX { i: 2, gamma: qr(3, 2) },
        TransformKind::RamifyX { i: 1, gamma: qr(1, 2) },
        TransformKind::RamifyY { i: 1, d: 2, sign: Sign::Plus },
        TransformKind::RamifyY { i: 2, d: 3, sign: Sign::Minus },
        TransformKind::SignChart { i: 1, sign: Sign::Plus },
        TransformKind::SignChart { i: 2, sign: Sign::Minus },
    ];
    kinds.into_iter().map(|k| ElementaryTransform::new(k, sig).unwrap()).collect()
}

/// A random valid transform on `sig` (`m, n ≥ 2`), paired with whether the
/// series fed to it may carry fractional x-exponents.
pub fn transform(r: &mut ChaCha8Rng, sig: Signature) -> (ElementaryTransform, bool) {
    let (m, n) = (sig.m, sig.n);
    let two = |r: &mut ChaCha8Rng, k: usize| -> (usize, usize) {
        let i = r.gen_range(1..=k);
        let mut j = r.gen_range(1..=k);
        while j == i {
            j = r.gen_range(1..=k);
        }
        (i, j)
    };
    let kind = match r.gen_range(0..8) {
        0 => {
            let (i, j) = two(r, m);
            let l = lambda(r, false);
            let l = if j >= i && matches!(&l, Lambda::Finite(v) if *v != q(0)) { Lambda::zero() } else { l };
            let natural = matches!(&l, Lambda::Finite(v) if *v != q(0));
            return (ElementaryTransform::new(TransformKind::BlowUpXX { i, j, lambda: l }, sig).unwrap(), !natural);
        }
        1 => TransformKind::BlowUpYX { i: r.gen_range(1..=n), j: r.gen_range(1..=m), lambda: lambda(r, true) },
        2 => {
            let (i, j) = two(r, n);
            let l = match lambda(r, false) {
                Lambda::NegInf => Lambda::PosInf,
                l => l,
            };
            TransformKind::BlowUpYY { i, j, lambda: l }
        }
        3 => {
            let i = r.gen_range(1..=n);
            let mut h = series(r, Signature::new(m, i - 1), 8, 3, true);
            let c0 = h.constant_term();
            h = h.sub(&Series::constant(h.sig(), c0, q(8))).unwrap();
            TransformKind::Tschirnhausen { i, h }
        }
        4 => {
            let i = r.gen_range(1..=n);
            TransformKind::Linear { i, c: (1..i).map(|_| q(r.gen_range(-2..3))).collect() }
        }
        5 => TransformKind::RamifyX { i: r.gen_range(1..=m), gamma: [qr(1, 2), q(2), qr(3, 2), q(3)][r.gen_range(0..4)].clone() },
        6 => TransformKind::RamifyY { i: r.gen_range(1..=n), d: r.gen_range(1..4), sign: sign(r) },
        _ => TransformKind::SignChart { i: r.gen_range(1..=n), sign: sign(r) },
    };
    (ElementaryTransform::new(kind, sig).unwrap(), true)
}

/// Uniform point of the box of radius `r`, x-coordinates nonnegative.
pub fn point(rng: &mut ChaCha8Rng, sig: Signature, r: f64) -> Vec<f64> {
    (0..sig.dim()).map(|k| if k < sig.m { rng.gen_range(0.0..r) } else { rng.gen_range(-r..r) }).collect()
}

/// Rounding allowance of an `f64` evaluation of `s` at `p`.
pub fn float_slack(s: &Series, p: &[f64]) -> f64 {
    let norm = p.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let deg: f64 = num_traits::ToPrimitive::to_f64(&s.max_degree()).unwrap_or(0.0);
    1e-10 * (1.0 + s.coefficient_mass() * norm.powf(deg.max(0.0)))
}
