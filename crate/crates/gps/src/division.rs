//! Formal Weierstrass division, implicit functions, unit roots and
//! Tschirnhausen centres.

use std::collections::HashSet;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{GpsError, Result};
use crate::series::{rational_root, MultiExponent, Regularity, Series, Signature, Q};

/// `F = G·Q + R` with `R = Σ_{i<d} B_i v^i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeierstrassResult {
    pub quotient: Series,
    /// `B_0, …, B_{d-1}`, series without the distinguished variable.
    pub remainder: Vec<Series>,
    /// Distinguished y-variable.
    pub var: usize,
    /// Regularity order of the divisor.
    pub order: u32,
}

impl WeierstrassResult {
    /// `R` as a series over the dividend's signature.
    pub fn remainder_series(&self) -> Series {
        let sig = self.quotient.sig();
        let mut r: Option<Series> = None;
        for (i, b) in self.remainder.iter().enumerate() {
            let term = b.insert_y(self.var).mul_monomial(&MultiExponent::y_power(sig, self.var, i as u32), &Q::one());
            r = Some(match r {
                None => term,
                Some(acc) => acc.add(&term).expect("same signature"),
            });
        }
        r.unwrap_or_else(|| Series::zero(sig, self.quotient.precision().clone()))
    }
}

fn drop_y(sig: Signature) -> Signature {
    Signature::new(sig.m, sig.n - 1)
}

/// `G(…, v ← A, …)` by Horner's rule in `v`; `A` lives on the remaining variables.
pub fn compose(g: &Series, v: usize, a: &Series) -> Result<Series> {
    g.sig().check_y(v)?;
    if a.sig() != drop_y(g.sig()) {
        return Err(GpsError::SignatureMismatch(a.sig(), drop_y(g.sig())));
    }
    let coeffs = g.y_coefficients(v)?;
    let Some(&top) = coeffs.keys().next_back() else {
        return Ok(Series::zero(a.sig(), g.precision().clone()));
    };
    let mut acc = coeffs[&top].clone();
    for k in (0..top).rev() {
        acc = acc.mul(a)?;
        acc = match coeffs.get(&k) {
            Some(c) => acc.add(c)?,
            None => acc.truncate(&(g.precision() - Q::from_integer(k.into()))),
        };
    }
    Ok(acc)
}

/// The series `A` with `A(0) = 0` and `G(·, A) ≡ 0` modulo the returned
/// precision, by Newton iteration. Needs `G(0) = 0` and `∂G/∂v(0) ≠ 0`.
pub fn solve_implicit(g: &Series, v: usize) -> Result<Series> {
    g.sig().check_y(v)?;
    let sig = g.sig();
    if !g.constant_term().is_zero() || g.coeff(&MultiExponent::y_power(sig, v, 1)).is_zero() {
        return Err(GpsError::NotRegular(v));
    }
    let dg = g.partial_y(v)?;
    let work = g.precision().clone();
    let mut a = Series::zero(drop_y(sig), work.clone());
    for _ in 0..64 {
        let r = compose(g, v, &a)?;
        if r.is_zero() {
            return Ok(a.truncate(r.precision()));
        }
        let slope = compose(&dg, v, &a)?.inverse()?;
        let next = a.sub(&r.mul(&slope)?)?.truncate(&work).assume_exact_to(work.clone());
        if next == a {
            return Err(GpsError::PrecisionExhausted(format!("Newton iteration stalled with residual {r}")));
        }
        a = next;
    }
    Err(GpsError::PrecisionExhausted("Newton iteration did not converge".into()))
}

/// `V` with `V^k = U` and `V(0) = U(0)^{1/k} > 0`: Newton iteration on
/// `(1 + Y)^k = U/U(0)` written in `V = U(0)^{1/k}(1 + Y)`.
pub fn unit_root(u: &Series, k: u32) -> Result<Series> {
    if k == 0 {
        return Err(GpsError::Invalid("root degree must be positive".into()));
    }
    let u0 = u.constant_term();
    if !u0.is_positive() {
        return Err(GpsError::NotAUnit);
    }
    let c = rational_root(&u0, k).ok_or_else(|| GpsError::IrrationalPower { base: u0.to_string(), exponent: format!("1/{k}") })?;
    let prec = u.precision().clone();
    let kq = Q::from_integer(k.into());
    let mut v = Series::constant(u.sig(), c, prec.clone());
    for _ in 0..64 {
        let r = v.pow(k)?.sub(u)?;
        if r.is_zero() {
            return Ok(v);
        }
        let slope = v.pow(k - 1)?.scale(&kq).inverse()?;
        let next = v.sub(&r.mul(&slope)?)?.truncate(&prec);
        if next == v {
            return Err(GpsError::PrecisionExhausted(format!("unit root iteration stalled with residual {r}")));
        }
        v = next;
    }
    Err(GpsError::PrecisionExhausted("unit root iteration did not converge".into()))
}

/// `B` with `∂^{d−1}G/∂v^{d−1}(·, B) = 0`; translating `v ← v + B` kills the
/// `v^{d−1}` coefficient.
pub fn tschirnhausen_center(g: &Series, v: usize, d: u32) -> Result<Series> {
    match g.order_in_y(v) {
        Regularity::Order(o) if o == d && d >= 2 => {}
        Regularity::Order(o) => return Err(GpsError::Invalid(format!("expected order {d} ≥ 2 in y{v}, found {o}"))),
        Regularity::NotRegular => return Err(GpsError::NotRegular(v)),
    }
    solve_implicit(&g.partial_y_n(v, d - 1)?, v)
}

fn split_at_degree(h: &Series, v: usize, d: u32) -> (Series, Series) {
    let sig = h.sig();
    let (hi, lo): (Vec<_>, Vec<_>) = h.terms().map(|(e, c)| (e.clone(), c.clone())).partition(|(e, _)| e.y()[v - 1] >= d);
    let p = h.precision().clone();
    (
        Series::from_terms(sig, hi, p.clone()).expect("same signature"),
        Series::from_terms(sig, lo, p).expect("same signature"),
    )
}

/// Division of `F` by `G`, regular of order `d` in `y_v`.
///
/// Works on the truncations below `δ = min(δ_F, δ_G)` as exact polynomials, so
/// `F − G·Q − R` has no term of degree `< δ` for the truncations and hence
/// for the series themselves.
pub fn weierstrass_divide(f: &Series, g: &Series, v: usize) -> Result<WeierstrassResult> {
    if f.sig() != g.sig() {
        return Err(GpsError::SignatureMismatch(f.sig(), g.sig()));
    }
    g.sig().check_y(v)?;
    let d = match g.order_in_y(v) {
        Regularity::Order(d) => d,
        Regularity::NotRegular => return Err(GpsError::NotRegular(v)),
    };
    let sig = f.sig();
    let delta = f.precision().clone().min(g.precision().clone());
    let dq = Q::from_integer(d.into());
    let wide = &delta + &dq;
    let vd = MultiExponent::y_power(sig, v, d);
    let g_exact = g.truncate(&delta).assume_exact_to(wide.clone());
    let (g_hi, p) = split_at_degree(&g_exact, v, d);
    let e_inv = g_hi.div_monomial(&vd).expect("divisible by v^d").truncate(&delta).assume_exact_to(delta.clone()).inverse()?;
    let mut h = f.truncate(&delta).assume_exact_to(wide.clone());
    let mut quotient = Series::zero(sig, delta.clone());
    let mut rem = Series::zero(sig, delta.clone());
    for _ in 0..100_000 {
        let (h_hi, h_lo) = split_at_degree(&h, v, d);
        rem = rem.add(&h_lo.truncate(&delta))?;
        if h_hi.is_zero() {
            let remainder = (0..d)
                .map(|i| rem.y_coefficient(v, i).unwrap_or_else(|_| Series::zero(drop_y(sig), delta.clone())))
                .collect();
            return Ok(WeierstrassResult { quotient, remainder, var: v, order: d });
        }
        let hd = h_hi.div_monomial(&vd).expect("divisible by v^d").assume_exact_to(delta.clone());
        let q = hd.mul(&e_inv)?.truncate(&delta).assume_exact_to(delta.clone());
        quotient = quotient.add(&q)?;
        h = p.mul(&q)?.neg().truncate(&wide).assume_exact_to(wide.clone());
    }
    Err(GpsError::CapExceeded("Weierstrass iteration".into()))
}

/// `F − (G·Q + R)` computed exactly from the stored terms.
pub fn exact_residual(f: &Series, g: &Series, res: &WeierstrassResult) -> Result<Series> {
    let r = res.remainder_series();
    let top = f.max_degree() + g.max_degree() + res.quotient.max_degree() + r.max_degree() + f.precision() + g.precision();
    let ex = |s: &Series| s.assume_exact_to(top.clone());
    ex(f).sub(&ex(g).mul(&ex(&res.quotient))?)?.sub(&ex(&r))
}

/// Whether every exponent of `Q` and `R`, projected away from `v`, lies in
/// the monoid generated by the projected supports of `F` and `G`.
pub fn supports_in_monoid(f: &Series, g: &Series, res: &WeierstrassResult) -> bool {
    let v = res.var;
    let proj = |e: &MultiExponent| -> Vec<Q> {
        let mut c = e.coords();
        c.remove(f.sig().m + v - 1);
        c
    };
    let mut gens: Vec<Vec<Q>> = f.terms().chain(g.terms()).map(|(e, _)| proj(e)).filter(|c| c.iter().any(|a| !a.is_zero())).collect();
    gens.sort();
    gens.dedup();
    let r = res.remainder_series();
    let targets: Vec<Vec<Q>> = res.quotient.terms().chain(r.terms()).map(|(e, _)| proj(e)).collect();
    let mut seen = HashSet::new();
    targets.iter().all(|t| in_monoid(t, &gens, &mut seen))
}

fn in_monoid(t: &[Q], gens: &[Vec<Q>], seen: &mut HashSet<Vec<Q>>) -> bool {
    if t.iter().all(|a| a.is_zero()) {
        return true;
    }
    if seen.contains(t) {
        return false;
    }
    for g in gens {
        if g.iter().zip(t).all(|(a, b)| a <= b) {
            let rest: Vec<Q> = t.iter().zip(g).map(|(a, b)| a - b).collect();
            if in_monoid(&rest, gens, seen) {
                return true;
            }
        }
    }
    seen.insert(t.to_vec());
    false
}

/// Minimal degree of a series' stored terms as `f64`, `∞` when zero.
pub fn min_degree(s: &Series) -> f64 {
    s.ord().map_or(f64::INFINITY, |o| o.to_f64().unwrap_or(f64::NAN))
}
