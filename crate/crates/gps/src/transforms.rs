//! Elementary transformations and their pullback action on series.
//!
//! Points are laid out x-coordinates first. A transform maps target
//! coordinates `(x', y')` to source coordinates `(x, y)`; its pullback sends a
//! series over the source signature to one over the target signature.
//!
//! Precision of a pullback: `γ·δ` for `RamifyX` with `γ < 1`,
//! `δ·min(1, ord h)` for a Tschirnhausen translation by `h`, and `δ` otherwise.

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{GpsError, Result};
use crate::series::{rational_pow, MultiExponent, Series, Signature, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn to_q(self) -> Q {
        match self {
            Sign::Plus => Q::one(),
            Sign::Minus => -Q::one(),
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "+" => Ok(Sign::Plus),
            "-" => Ok(Sign::Minus),
            _ => Err(GpsError::Invalid(format!("bad sign '{s}'"))),
        }
    }
}

/// Chart parameter: a rational or one of the infinite charts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Lambda {
    Finite(Q),
    PosInf,
    NegInf,
}

impl Lambda {
    pub fn zero() -> Self {
        Lambda::Finite(Q::zero())
    }

    fn is_zero(&self) -> bool {
        matches!(self, Lambda::Finite(l) if l.is_zero())
    }

    fn is_infinite(&self) -> bool {
        !matches!(self, Lambda::Finite(_))
    }

    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }

    fn from_json(v: &Value) -> Result<Self> {
        match v.as_str() {
            Some("inf") => Ok(Lambda::PosInf),
            Some("-inf") => Ok(Lambda::NegInf),
            Some(s) => Ok(Lambda::Finite(parse_q(s)?)),
            None => Err(GpsError::Invalid("lambda must be a string".into())),
        }
    }
}

impl fmt::Display for Lambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lambda::Finite(l) => write!(f, "{l}"),
            Lambda::PosInf => write!(f, "inf"),
            Lambda::NegInf => write!(f, "-inf"),
        }
    }
}

pub(crate) fn parse_q(s: &str) -> Result<Q> {
    s.trim().parse::<Q>().map_err(|_| GpsError::Invalid(format!("bad rational '{s}'")))
}

/// The variants of elementary transformation. Indices are 1-based; x-index
/// parameters refer to x-variables and y-index parameters to y-variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TransformKind {
    /// `x_i = x'_j(λ + y'_1)` for `λ > 0` (`j < i`), `x_i = x'_j x'_i` for
    /// `λ = 0`, `x_j = x'_i x'_j` for `λ = ∞`.
    BlowUpXX { i: usize, j: usize, lambda: Lambda },
    /// `y_i = x'_j(λ + y'_i)`; at `±∞`, `x_j = x'_{m+1} x'_j` and `y_i = ±x'_{m+1}`.
    BlowUpYX { i: usize, j: usize, lambda: Lambda },
    /// `y_i = y'_j(λ + y'_i)`; at `∞`, `y_j = y'_i y'_j`.
    BlowUpYY { i: usize, j: usize, lambda: Lambda },
    /// `y_i = y'_i + h(x', y'_1, …, y'_{i-1})` with `h(0) = 0`.
    Tschirnhausen { i: usize, h: Series },
    /// `y_k = y'_k + c_k y'_i` for `k < i`.
    Linear { i: usize, c: Vec<Q> },
    /// `x_i = x'_i^γ`.
    RamifyX { i: usize, gamma: Q },
    /// `y_i = ±y'_i^d`.
    RamifyY { i: usize, d: u32, sign: Sign },
    /// `y_i = ±x'_{m+1}` with the new x-variable placed last.
    SignChart { i: usize, sign: Sign },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryTransform {
    kind: TransformKind,
    source: Signature,
}

enum Image {
    Mono(MultiExponent, Q),
    Poly(Series),
}

fn invalid(msg: impl Into<String>) -> GpsError {
    GpsError::InvalidTransform(msg.into())
}

impl ElementaryTransform {
    pub fn new(kind: TransformKind, source: Signature) -> Result<Self> {
        let (m, n) = (source.m, source.n);
        let in_x = |k: usize| k >= 1 && k <= m;
        let in_y = |k: usize| k >= 1 && k <= n;
        match &kind {
            TransformKind::BlowUpXX { i, j, lambda } => {
                if !in_x(*i) || !in_x(*j) || i == j {
                    return Err(invalid(format!("x-chart indices ({i}, {j}) invalid for m = {m}")));
                }
                match lambda {
                    Lambda::Finite(l) if l.is_negative() => return Err(invalid("x-chart needs λ ≥ 0")),
                    Lambda::Finite(l) if l.is_positive() && j >= i => {
                        return Err(invalid(format!("x-chart with λ > 0 needs j < i, got ({i}, {j})")))
                    }
                    Lambda::NegInf => return Err(invalid("x-chart has no -∞ member")),
                    _ => {}
                }
            }
            TransformKind::BlowUpYX { i, j, .. } => {
                if !in_y(*i) || !in_x(*j) {
                    return Err(invalid(format!("yx-chart indices ({i}, {j}) invalid for {source:?}")));
                }
            }
            TransformKind::BlowUpYY { i, j, lambda } => {
                if !in_y(*i) || !in_y(*j) || i == j {
                    return Err(invalid(format!("yy-chart indices ({i}, {j}) invalid for n = {n}")));
                }
                if *lambda == Lambda::NegInf {
                    return Err(invalid("yy-chart has no -∞ member"));
                }
            }
            TransformKind::Tschirnhausen { i, h } => {
                if !in_y(*i) {
                    return Err(invalid(format!("translation of y{i} invalid for n = {n}")));
                }
                if h.sig() != Signature::new(m, i - 1) {
                    return Err(GpsError::SignatureMismatch(h.sig(), Signature::new(m, i - 1)));
                }
                if !h.constant_term().is_zero() {
                    return Err(invalid("translation needs h(0) = 0"));
                }
            }
            TransformKind::Linear { i, c } => {
                if !in_y(*i) || c.len() + 1 != *i {
                    return Err(invalid(format!("linear map on y{i} needs {} coefficients", i.saturating_sub(1))));
                }
            }
            TransformKind::RamifyX { i, gamma } => {
                if !in_x(*i) || !gamma.is_positive() {
                    return Err(invalid(format!("ramification of x{i} with exponent {gamma}")));
                }
            }
            TransformKind::RamifyY { i, d, .. } => {
                if !in_y(*i) || *d == 0 {
                    return Err(invalid(format!("ramification of y{i} with degree {d}")));
                }
            }
            TransformKind::SignChart { i, .. } => {
                if !in_y(*i) {
                    return Err(invalid(format!("sign chart on y{i} invalid for n = {n}")));
                }
            }
        }
        Ok(ElementaryTransform { kind, source })
    }

    pub fn kind(&self) -> &TransformKind {
        &self.kind
    }

    pub fn source(&self) -> Signature {
        self.source
    }

    pub fn target(&self) -> Signature {
        let Signature { m, n } = self.source;
        match &self.kind {
            TransformKind::BlowUpXX { lambda: Lambda::Finite(l), .. } if l.is_positive() => Signature::new(m - 1, n + 1),
            TransformKind::BlowUpYX { lambda, .. } if lambda.is_infinite() => Signature::new(m + 1, n - 1),
            TransformKind::SignChart { .. } => Signature::new(m + 1, n - 1),
            _ => self.source,
        }
    }

    /// The same transform on a signature with `extra` further y-variables
    /// appended, on which it acts trivially.
    pub fn lift(&self, extra: usize) -> Self {
        ElementaryTransform { kind: self.kind.clone(), source: Signature::new(self.source.m, self.source.n + extra) }
    }

    /// Whether pullbacks of polynomials are polynomials computed without
    /// binomial expansion.
    pub fn is_exact_output(&self) -> bool {
        match &self.kind {
            TransformKind::BlowUpXX { lambda, .. } | TransformKind::BlowUpYX { lambda, .. } | TransformKind::BlowUpYY { lambda, .. } => {
                lambda.is_zero() || lambda.is_infinite()
            }
            TransformKind::RamifyX { gamma, .. } => gamma.is_integer(),
            TransformKind::RamifyY { .. } | TransformKind::Linear { .. } | TransformKind::SignChart { .. } => true,
            TransformKind::Tschirnhausen { .. } => false,
        }
    }

    /// Precision of `pullback(f)` for `f` at precision `delta`.
    pub fn propagate_precision(&self, delta: &Q) -> Q {
        match &self.kind {
            TransformKind::RamifyX { gamma, .. } if *gamma < Q::one() => delta * gamma,
            TransformKind::Tschirnhausen { h, .. } => delta * h.ord_bound().min(Q::one()),
            _ => delta.clone(),
        }
    }

    /// For each source coordinate (x first), the componentwise least
    /// exponent and the least degree over the support of its image: every
    /// term of the pullback of `x^e` lies above `Σ e_k·lo_k` with degree at
    /// least `Σ e_k·deg_k`.
    pub fn image_bounds(&self) -> Vec<(Vec<Q>, Q)> {
        let t = self.target();
        let wide = Q::from_integer(1_000_000.into());
        self.images(&wide)
            .into_iter()
            .map(|img| match img {
                Image::Mono(e, _) => (e.coords(), e.degree().clone()),
                Image::Poly(p) => {
                    let lo = p.terms().fold(None::<Vec<Q>>, |acc, (e, _)| {
                        let c = e.coords();
                        Some(match acc {
                            None => c,
                            Some(a) => a.iter().zip(&c).map(|(u, v)| u.min(v).clone()).collect(),
                        })
                    });
                    (lo.unwrap_or_else(|| vec![Q::zero(); t.dim()]), p.ord().unwrap_or_else(Q::zero))
                }
            })
            .collect()
    }

    fn images(&self, prec: &Q) -> Vec<Image> {
        let s = self.source;
        let t = self.target();
        let xm = |k: usize| MultiExponent::x_power(t, k, Q::one());
        let ym = |k: usize| MultiExponent::y_power(t, k, 1);
        let mono = |e: MultiExponent| Image::Mono(e, Q::one());
        let same = s == t;
        let mut xs: Vec<Image> = if same { (1..=s.m).map(|k| mono(xm(k))).collect() } else { Vec::new() };
        let mut ys: Vec<Image> = if same { (1..=s.n).map(|k| mono(ym(k))).collect() } else { Vec::new() };
        let poly_chart = |outer: MultiExponent, l: &Q, inner: usize| {
            let mut p = Series::monomial(outer.mul(&ym(inner)), Q::one(), prec.clone());
            if !l.is_zero() {
                p = p.add(&Series::monomial(outer, l.clone(), prec.clone())).expect("same signature");
            }
            Image::Poly(p)
        };
        match &self.kind {
            TransformKind::BlowUpXX { i, j, lambda } => match lambda {
                Lambda::Finite(l) if l.is_positive() => {
                    xs = (1..=s.m)
                        .map(|k| if k < *i { mono(xm(k)) } else if k == *i { poly_chart(xm(*j), l, 1) } else { mono(xm(k - 1)) })
                        .collect();
                    ys = (1..=s.n).map(|k| mono(ym(k + 1))).collect();
                }
                Lambda::PosInf => xs[j - 1] = mono(xm(*i).mul(&xm(*j))),
                _ => xs[i - 1] = mono(xm(*j).mul(&xm(*i))),
            },
            TransformKind::BlowUpYX { i, j, lambda } => match lambda {
                Lambda::Finite(l) => ys[i - 1] = poly_chart(xm(*j), l, *i),
                _ => {
                    let sign = if *lambda == Lambda::PosInf { Q::one() } else { -Q::one() };
                    xs = (1..=s.m).map(|k| mono(xm(k))).collect();
                    xs[j - 1] = mono(xm(s.m + 1).mul(&xm(*j)));
                    ys = (1..=s.n)
                        .map(|k| match k.cmp(i) {
                            std::cmp::Ordering::Less => mono(ym(k)),
                            std::cmp::Ordering::Equal => Image::Mono(xm(s.m + 1), sign.clone()),
                            std::cmp::Ordering::Greater => mono(ym(k - 1)),
                        })
                        .collect();
                }
            },
            TransformKind::BlowUpYY { i, j, lambda } => match lambda {
                Lambda::Finite(l) => ys[i - 1] = poly_chart(ym(*j), l, *i),
                _ => ys[j - 1] = mono(ym(*i).mul(&ym(*j))),
            },
            TransformKind::Tschirnhausen { i, h } => {
                // The chart translates by the stored terms of `h`, exactly.
                let shift = h.embed_y_prefix(s.n).assume_exact_to(prec.clone());
                ys[i - 1] = Image::Poly(Series::y(t, *i, prec.clone()).add(&shift).expect("same signature"));
            }
            TransformKind::Linear { i, c } => {
                for (k, ck) in c.iter().enumerate() {
                    if ck.is_zero() {
                        continue;
                    }
                    let p = Series::y(t, k + 1, prec.clone())
                        .add(&Series::monomial(ym(*i), ck.clone(), prec.clone()))
                        .expect("same signature");
                    ys[k] = Image::Poly(p);
                }
            }
            TransformKind::RamifyX { i, gamma } => xs[i - 1] = mono(MultiExponent::x_power(t, *i, gamma.clone())),
            TransformKind::RamifyY { i, d, sign } => ys[i - 1] = Image::Mono(MultiExponent::y_power(t, *i, *d), sign.to_q()),
            TransformKind::SignChart { i, sign } => {
                xs = (1..=s.m).map(|k| mono(xm(k))).collect();
                ys = (1..=s.n)
                    .map(|k| match k.cmp(i) {
                        std::cmp::Ordering::Less => mono(ym(k)),
                        std::cmp::Ordering::Equal => Image::Mono(xm(s.m + 1), sign.to_q()),
                        std::cmp::Ordering::Greater => mono(ym(k - 1)),
                    })
                    .collect();
            }
        }
        xs.extend(ys);
        xs
    }

    /// `f ∘ ν` truncated at the propagated precision.
    pub fn pullback(&self, f: &Series) -> Result<Series> {
        if f.sig() != self.source {
            return Err(GpsError::SignatureMismatch(f.sig(), self.source));
        }
        let t = self.target();
        let prec = self.propagate_precision(f.precision());
        let images = self.images(&prec);
        let mut out = Series::zero(t, prec.clone());
        let mut powers: HashMap<(usize, u32), Series> = HashMap::new();
        for (e, c) in f.terms() {
            let mut mono = MultiExponent::zero(t);
            let mut coeff = c.clone();
            let mut polys: Vec<(usize, u32)> = Vec::new();
            for (var, a) in e.coords().iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                match &images[var] {
                    Image::Mono(me, s) => {
                        mono = mono.mul(&me.scale(a).ok_or_else(|| GpsError::NonNaturalPower(a.to_string()))?);
                        if !s.is_one() {
                            let k = a.to_integer().to_i32().filter(|_| a.is_integer()).ok_or_else(|| GpsError::NonNaturalPower(a.to_string()))?;
                            coeff *= num_traits::pow::Pow::pow(s, k);
                        }
                    }
                    Image::Poly(_) => {
                        if !a.is_integer() {
                            return Err(GpsError::NonNaturalPower(format!("({a}) of the image of coordinate {}", var + 1)));
                        }
                        polys.push((var, a.to_integer().to_u32().expect("small exponent")));
                    }
                }
            }
            if *mono.degree() >= prec {
                continue;
            }
            let room = &prec - mono.degree();
            let mut acc = Series::constant(t, coeff, room.clone());
            for (var, k) in polys {
                let p = match powers.get(&(var, k)) {
                    Some(p) => p.clone(),
                    None => {
                        let Image::Poly(base) = &images[var] else { unreachable!() };
                        let p = base.pow(k)?.truncate(&prec);
                        powers.insert((var, k), p.clone());
                        p
                    }
                };
                acc = acc.mul(&p.truncate(&room))?.truncate(&room);
            }
            out = out.add(&acc.mul_monomial(&mono, &Q::one()))?;
        }
        Ok(out)
    }

    fn forward_generic<S: Scalar>(&self, p: &[S]) -> Result<Vec<S>> {
        let t = self.target();
        if p.len() != t.dim() {
            return Err(GpsError::PointArity { got: p.len(), expected: t.dim() });
        }
        let s = self.source;
        let (xp, yp) = p.split_at(t.m);
        let mut xs: Vec<S> = Vec::with_capacity(s.m);
        let mut ys: Vec<S> = Vec::with_capacity(s.n);
        match &self.kind {
            TransformKind::BlowUpXX { i, j, lambda: Lambda::Finite(l) } if l.is_positive() => {
                for k in 1..=s.m {
                    xs.push(match k.cmp(i) {
                        std::cmp::Ordering::Less => xp[k - 1].clone(),
                        std::cmp::Ordering::Equal => xp[j - 1].mul(&S::from_q(l).add(&yp[0])),
                        std::cmp::Ordering::Greater => xp[k - 2].clone(),
                    });
                }
                ys.extend(yp[1..].iter().cloned());
            }
            TransformKind::BlowUpXX { i, j, lambda } => {
                xs.extend(xp.iter().cloned());
                ys.extend(yp.iter().cloned());
                if *lambda == Lambda::PosInf {
                    xs[j - 1] = xp[i - 1].mul(&xp[j - 1]);
                } else {
                    xs[i - 1] = xp[j - 1].mul(&xp[i - 1]);
                }
            }
            TransformKind::BlowUpYX { i, j, lambda } => match lambda {
                Lambda::Finite(l) => {
                    xs.extend(xp.iter().cloned());
                    ys.extend(yp.iter().cloned());
                    ys[i - 1] = xp[j - 1].mul(&S::from_q(l).add(&yp[i - 1]));
                }
                _ => {
                    let new = &xp[s.m];
                    xs.extend(xp[..s.m].iter().cloned());
                    xs[j - 1] = new.mul(&xp[j - 1]);
                    let v = if *lambda == Lambda::PosInf { new.clone() } else { new.neg() };
                    ys.extend(yp[..i - 1].iter().cloned());
                    ys.push(v);
                    ys.extend(yp[i - 1..].iter().cloned());
                }
            },
            TransformKind::BlowUpYY { i, j, lambda } => {
                xs.extend(xp.iter().cloned());
                ys.extend(yp.iter().cloned());
                match lambda {
                    Lambda::Finite(l) => ys[i - 1] = yp[j - 1].mul(&S::from_q(l).add(&yp[i - 1])),
                    _ => ys[j - 1] = yp[i - 1].mul(&yp[j - 1]),
                }
            }
            TransformKind::Tschirnhausen { i, h } => {
                xs.extend(xp.iter().cloned());
                ys.extend(yp.iter().cloned());
                let mut arg: Vec<S> = xp.to_vec();
                arg.extend(yp[..i - 1].iter().cloned());
                ys[i - 1] = yp[i - 1].add(&S::eval(h, &arg)?);
            }
            TransformKind::Linear { i, c } => {
                xs.extend(xp.iter().cloned());
                ys.extend(yp.iter().cloned());
                for (k, ck) in c.iter().enumerate() {
                    ys[k] = yp[k].add(&S::from_q(ck).mul(&yp[i - 1]));
                }
            }
            TransformKind::RamifyX { i, gamma } => {
                xs.extend(xp.iter().cloned());
                ys.extend(yp.iter().cloned());
                xs[i - 1] = xp[i - 1].powq(gamma, *i)?;
            }
            TransformKind::RamifyY { i, d, sign } => {
                xs.extend(xp.iter().cloned());
                ys.extend(yp.iter().cloned());
                ys[i - 1] = S::from_q(&sign.to_q()).mul(&yp[i - 1].powu(*d));
            }
            TransformKind::SignChart { i, sign } => {
                xs.extend(xp[..s.m].iter().cloned());
                ys.extend(yp[..i - 1].iter().cloned());
                ys.push(S::from_q(&sign.to_q()).mul(&xp[s.m]));
                ys.extend(yp[i - 1..].iter().cloned());
            }
        }
        xs.extend(ys);
        Ok(xs)
    }

    /// Image in source coordinates of a target point.
    pub fn forward_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.forward_generic(p)
    }

    /// Exact image; fails when a ramification leaves the rationals.
    pub fn forward_point_exact(&self, p: &[Q]) -> Result<Vec<Q>> {
        self.forward_generic(p)
    }

    /// All target points mapping to the source point `p`, in closed form.
    pub fn preimages(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let s = self.source;
        if p.len() != s.dim() {
            return Vec::new();
        }
        let (x, y) = p.split_at(s.m);
        let one = |xs: Vec<f64>, ys: Vec<f64>| {
            let mut v = xs;
            v.extend(ys);
            if v.iter().all(|c| c.is_finite()) {
                vec![v]
            } else {
                Vec::new()
            }
        };
        let (mut xs, mut ys) = (x.to_vec(), y.to_vec());
        match &self.kind {
            TransformKind::BlowUpXX { i, j, lambda: Lambda::Finite(l) } if l.is_positive() => {
                if x[j - 1] == 0.0 {
                    return Vec::new();
                }
                let u = x[i - 1] / x[j - 1] - l.to_f64().unwrap_or(f64::NAN);
                xs.remove(i - 1);
                ys.insert(0, u);
                one(xs, ys)
            }
            TransformKind::BlowUpXX { i, j, lambda } => {
                let (a, b) = if *lambda == Lambda::PosInf { (*j, *i) } else { (*i, *j) };
                if x[b - 1] == 0.0 {
                    return Vec::new();
                }
                xs[a - 1] = x[a - 1] / x[b - 1];
                one(xs, ys)
            }
            TransformKind::BlowUpYX { i, j, lambda } => match lambda {
                Lambda::Finite(l) => {
                    if x[j - 1] == 0.0 {
                        return Vec::new();
                    }
                    ys[i - 1] = y[i - 1] / x[j - 1] - l.to_f64().unwrap_or(f64::NAN);
                    one(xs, ys)
                }
                _ => {
                    let new = if *lambda == Lambda::PosInf { y[i - 1] } else { -y[i - 1] };
                    if new <= 0.0 {
                        return Vec::new();
                    }
                    xs[j - 1] = x[j - 1] / new;
                    xs.push(new);
                    ys.remove(i - 1);
                    one(xs, ys)
                }
            },
            TransformKind::BlowUpYY { i, j, lambda } => {
                match lambda {
                    Lambda::Finite(l) => {
                        if y[j - 1] == 0.0 {
                            return Vec::new();
                        }
                        ys[i - 1] = y[i - 1] / y[j - 1] - l.to_f64().unwrap_or(f64::NAN);
                    }
                    _ => {
                        if y[i - 1] == 0.0 {
                            return Vec::new();
                        }
                        ys[j - 1] = y[j - 1] / y[i - 1];
                    }
                }
                one(xs, ys)
            }
            TransformKind::Tschirnhausen { i, h } => {
                let mut arg = x.to_vec();
                arg.extend(&y[..i - 1]);
                match h.evaluate_f64(&arg) {
                    Ok((v, _)) => {
                        ys[i - 1] = y[i - 1] - v;
                        one(xs, ys)
                    }
                    Err(_) => Vec::new(),
                }
            }
            TransformKind::Linear { i, c } => {
                for (k, ck) in c.iter().enumerate() {
                    ys[k] = y[k] - ck.to_f64().unwrap_or(f64::NAN) * y[i - 1];
                }
                one(xs, ys)
            }
            TransformKind::RamifyX { i, gamma } => {
                if x[i - 1] < 0.0 {
                    return Vec::new();
                }
                xs[i - 1] = x[i - 1].powf(1.0 / gamma.to_f64().unwrap_or(f64::NAN));
                one(xs, ys)
            }
            TransformKind::RamifyY { i, d, sign } => {
                let v = sign.to_f64() * y[i - 1];
                let inv = 1.0 / f64::from(*d);
                if d % 2 == 1 {
                    ys[i - 1] = v.signum() * v.abs().powf(inv);
                    return one(xs, ys);
                }
                if v < 0.0 {
                    return Vec::new();
                }
                let r = v.powf(inv);
                let mut out = Vec::new();
                for root in if r == 0.0 { vec![0.0] } else { vec![r, -r] } {
                    ys[i - 1] = root;
                    out.extend(one(xs.clone(), ys.clone()));
                }
                out
            }
            TransformKind::SignChart { i, sign } => {
                let v = sign.to_f64() * y[i - 1];
                if v < 0.0 {
                    return Vec::new();
                }
                xs.push(v);
                ys.remove(i - 1);
                one(xs, ys)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let params = match &self.kind {
            TransformKind::BlowUpXX { i, j, lambda } | TransformKind::BlowUpYX { i, j, lambda } | TransformKind::BlowUpYY { i, j, lambda } => {
                json!({"i": i, "j": j, "lambda": lambda.to_json()})
            }
            TransformKind::Tschirnhausen { i, h } => {
                json!({"i": i, "h": h.render(), "precision": h.precision().to_string()})
            }
            TransformKind::Linear { i, c } => json!({"i": i, "c": c.iter().map(|v| v.to_string()).collect::<Vec<_>>()}),
            TransformKind::RamifyX { i, gamma } => json!({"i": i, "gamma": gamma.to_string()}),
            TransformKind::RamifyY { i, d, sign } => json!({"i": i, "d": d, "sign": sign.symbol()}),
            TransformKind::SignChart { i, sign } => json!({"i": i, "sign": sign.symbol()}),
        };
        json!({"kind": self.tag(), "params": params, "source": [self.source.m, self.source.n]})
    }

    pub fn tag(&self) -> &'static str {
        match &self.kind {
            TransformKind::BlowUpXX { .. } => "blowup_xx",
            TransformKind::BlowUpYX { .. } => "blowup_yx",
            TransformKind::BlowUpYY { .. } => "blowup_yy",
            TransformKind::Tschirnhausen { .. } => "tschirnhausen",
            TransformKind::Linear { .. } => "linear",
            TransformKind::RamifyX { .. } => "ramify_x",
            TransformKind::RamifyY { .. } => "ramify_y",
            TransformKind::SignChart { .. } => "sign_chart",
        }
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = || GpsError::Invalid(format!("malformed transform descriptor {v}"));
        let src = v.get("source").and_then(Value::as_array).ok_or_else(bad)?;
        let dims: Vec<usize> = src.iter().filter_map(Value::as_u64).map(|d| d as usize).collect();
        if dims.len() != 2 {
            return Err(bad());
        }
        let source = Signature::new(dims[0], dims[1]);
        let p = v.get("params").ok_or_else(bad)?;
        let idx = |k: &str| p.get(k).and_then(Value::as_u64).map(|x| x as usize).ok_or_else(bad);
        let text = |k: &str| p.get(k).and_then(Value::as_str).ok_or_else(bad);
        let kind = match v.get("kind").and_then(Value::as_str).ok_or_else(bad)? {
            "blowup_xx" => TransformKind::BlowUpXX { i: idx("i")?, j: idx("j")?, lambda: Lambda::from_json(p.get("lambda").ok_or_else(bad)?)? },
            "blowup_yx" => TransformKind::BlowUpYX { i: idx("i")?, j: idx("j")?, lambda: Lambda::from_json(p.get("lambda").ok_or_else(bad)?)? },
            "blowup_yy" => TransformKind::BlowUpYY { i: idx("i")?, j: idx("j")?, lambda: Lambda::from_json(p.get("lambda").ok_or_else(bad)?)? },
            "tschirnhausen" => {
                let i = idx("i")?;
                let prec = parse_q(text("precision")?)?;
                let h = crate::parser::parse_series(text("h")?, Signature::new(source.m, i - 1), &prec)?;
                TransformKind::Tschirnhausen { i, h }
            }
            "linear" => {
                let c = p.get("c").and_then(Value::as_array).ok_or_else(bad)?;
                let c = c.iter().map(|x| x.as_str().ok_or_else(bad).and_then(parse_q)).collect::<Result<Vec<_>>>()?;
                TransformKind::Linear { i: idx("i")?, c }
            }
            "ramify_x" => TransformKind::RamifyX { i: idx("i")?, gamma: parse_q(text("gamma")?)? },
            "ramify_y" => TransformKind::RamifyY { i: idx("i")?, d: idx("d")? as u32, sign: Sign::parse(text("sign")?)? },
            "sign_chart" => TransformKind::SignChart { i: idx("i")?, sign: Sign::parse(text("sign")?)? },
            _ => return Err(bad()),
        };
        ElementaryTransform::new(kind, source)
    }
}

impl fmt::Display for ElementaryTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.source.m;
        match &self.kind {
            TransformKind::BlowUpXX { i, j, lambda } => write!(f, "pi[{i},{j}]^{lambda}"),
            TransformKind::BlowUpYX { i, j, lambda } => write!(f, "pi[{},{j}]^{lambda}", m + i),
            TransformKind::BlowUpYY { i, j, lambda } => write!(f, "pi[{},{}]^{lambda}", m + i, m + j),
            TransformKind::Tschirnhausen { i, h } => write!(f, "tau[y{i}]({h})"),
            TransformKind::Linear { i, c } => {
                let c: Vec<String> = c.iter().map(|v| v.to_string()).collect();
                write!(f, "L[{i}]({})", c.join(","))
            }
            TransformKind::RamifyX { i, gamma } => write!(f, "r[{i}]^({gamma})"),
            TransformKind::RamifyY { i, d, sign } => write!(f, "r[{}]^({d},{})", m + i, sign.symbol()),
            TransformKind::SignChart { i, sign } => write!(f, "sigma[{}]^{}", m + i, sign.symbol()),
        }
    }
}

/// Scalars the coordinate formulas can be evaluated in.
trait Scalar: Clone {
    fn from_q(q: &Q) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn powu(&self, d: u32) -> Self;
    fn powq(&self, g: &Q, coord: usize) -> Result<Self>;
    fn eval(h: &Series, p: &[Self]) -> Result<Self>;
}

impl Scalar for f64 {
    fn from_q(q: &Q) -> Self {
        q.to_f64().unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powu(&self, d: u32) -> Self {
        self.powi(d as i32)
    }
    fn powq(&self, g: &Q, coord: usize) -> Result<Self> {
        if g.is_integer() {
            return Ok(self.powi(g.to_integer().to_i32().expect("small exponent")));
        }
        if *self < 0.0 {
            return Err(GpsError::NegativeFractionalBase(coord));
        }
        Ok(self.powf(g.to_f64().unwrap_or(f64::NAN)))
    }
    fn eval(h: &Series, p: &[Self]) -> Result<Self> {
        Ok(h.evaluate_f64(p)?.0)
    }
}

impl Scalar for Q {
    fn from_q(q: &Q) -> Self {
        q.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn powu(&self, d: u32) -> Self {
        num_traits::pow::Pow::pow(self, d)
    }
    fn powq(&self, g: &Q, coord: usize) -> Result<Self> {
        if g.is_integer() {
            return Ok(num_traits::pow::Pow::pow(self, g.to_integer().to_i32().expect("small exponent")));
        }
        if self.is_zero() {
            return Ok(Q::zero());
        }
        if self.is_negative() {
            return Err(GpsError::NegativeFractionalBase(coord));
        }
        rational_pow(self, g)
    }
    fn eval(h: &Series, p: &[Self]) -> Result<Self> {
        h.evaluate(p)?.exact.ok_or_else(|| GpsError::Invalid("translation is not exactly evaluable here".into()))
    }
}

/// A chain `ν_1, …, ν_N` with `target(ν_k) = source(ν_{k+1})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdmissibleTransform {
    source: Signature,
    steps: Vec<ElementaryTransform>,
}

impl AdmissibleTransform {
    pub fn identity(sig: Signature) -> Self {
        AdmissibleTransform { source: sig, steps: Vec::new() }
    }

    pub fn from_steps(source: Signature, steps: Vec<ElementaryTransform>) -> Result<Self> {
        let mut t = Self::identity(source);
        for s in steps {
            t.push(s)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, step: ElementaryTransform) -> Result<()> {
        if step.source() != self.target() {
            return Err(GpsError::SignatureMismatch(step.source(), self.target()));
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn then(&self, other: &AdmissibleTransform) -> Result<Self> {
        let mut t = self.clone();
        for s in &other.steps {
            t.push(s.clone())?;
        }
        Ok(t)
    }

    pub fn source(&self) -> Signature {
        self.source
    }

    pub fn target(&self) -> Signature {
        self.steps.last().map_or(self.source, ElementaryTransform::target)
    }

    pub fn steps(&self) -> &[ElementaryTransform] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn lift(&self, extra: usize) -> Self {
        AdmissibleTransform {
            source: Signature::new(self.source.m, self.source.n + extra),
            steps: self.steps.iter().map(|s| s.lift(extra)).collect(),
        }
    }

    pub fn forward_point(&self, p: &[f64]) -> Result<Vec<f64>> {
        let mut v = p.to_vec();
        for (k, s) in self.steps.iter().enumerate().rev() {
            v = s.forward_point(&v).map_err(|e| at_step(k, e))?;
        }
        Ok(v)
    }

    pub fn forward_point_exact(&self, p: &[Q]) -> Result<Vec<Q>> {
        let mut v = p.to_vec();
        for (k, s) in self.steps.iter().enumerate().rev() {
            v = s.forward_point_exact(&v).map_err(|e| at_step(k, e))?;
        }
        Ok(v)
    }

    /// Preimages of a source point, inverting step by step.
    pub fn preimages(&self, p: &[f64]) -> Vec<Vec<f64>> {
        let mut current = vec![p.to_vec()];
        for s in &self.steps {
            current = current.iter().flat_map(|q| s.preimages(q)).collect();
            if current.is_empty() {
                break;
            }
        }
        current
    }

    pub fn to_json(&self) -> Value {
        Value::Array(self.steps.iter().map(ElementaryTransform::to_json).collect())
    }

    pub fn from_json(source: Signature, v: &Value) -> Result<Self> {
        let steps = v.as_array().ok_or_else(|| GpsError::Invalid("chain must be an array".into()))?;
        Self::from_steps(source, steps.iter().map(ElementaryTransform::from_json).collect::<Result<_>>()?)
    }
}

impl fmt::Display for AdmissibleTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.steps.is_empty() {
            return write!(f, "id");
        }
        let parts: Vec<String> = self.steps.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" . "))
    }
}

fn at_step(step: usize, e: GpsError) -> GpsError {
    GpsError::AtStep { step, source: Box::new(e) }
}

pub fn pullback(t: &ElementaryTransform, f: &Series) -> Result<Series> {
    t.pullback(f)
}

/// `f ∘ ν_1 ∘ … ∘ ν_N`; errors carry the failing step index.
pub fn pullback_chain(rho: &AdmissibleTransform, f: &Series) -> Result<Series> {
    let mut g = f.clone();
    for (k, s) in rho.steps.iter().enumerate() {
        g = s.pullback(&g).map_err(|e| at_step(k, e))?;
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_series;
    use crate::series::{q, qr};

    fn et(kind: TransformKind, m: usize, n: usize) -> ElementaryTransform {
        ElementaryTransform::new(kind, Signature::new(m, n)).unwrap()
    }

    fn ser(t: &str, m: usize, n: usize) -> Series {
        parse_series(t, Signature::new(m, n), &q(8)).unwrap()
    }

    #[test]
    fn yx_chart_on_difference_of_squares() {
        let t = et(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::Finite(q(1)) }, 1, 1);
        let g = t.pullback(&ser("y1^2 - x1^2", 1, 1)).unwrap();
        assert_eq!(g, ser("x1^2*y1*(2 + y1)", 1, 1));
    }

    #[test]
    fn ramification_scales_exponents() {
        let t = et(TransformKind::RamifyX { i: 1, gamma: q(2) }, 1, 0);
        assert_eq!(t.pullback(&ser("x1^(1/2)", 1, 0)).unwrap().render(), "x1");
        let slow = et(TransformKind::RamifyX { i: 1, gamma: qr(1, 2) }, 1, 0);
        assert_eq!(slow.pullback(&ser("x1^3", 1, 0)).unwrap().precision(), &q(4));
        assert_eq!(t.forward_point(&[1.0 / 3.0]).unwrap(), vec![1.0 / 9.0]);
        assert_eq!(t.forward_point_exact(&[qr(1, 3)]).unwrap(), vec![qr(1, 9)]);
    }

    #[test]
    fn chart_forward_formula() {
        let t = et(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::Finite(q(1)) }, 1, 1);
        assert_eq!(t.forward_point_exact(&[qr(1, 2), qr(1, 4)]).unwrap(), vec![qr(1, 2), qr(5, 8)]);
    }

    #[test]
    fn units_map_to_units() {
        let sig = Signature::new(2, 2);
        let one = Series::one(sig, q(5));
        let h = ser("x1 + x2^(1/2)", 2, 1);
        let kinds = vec![
            TransformKind::Linear { i: 2, c: vec![q(3)] },
            TransformKind::Tschirnhausen { i: 2, h },
            TransformKind::BlowUpXX { i: 2, j: 1, lambda: Lambda::Finite(q(2)) },
            TransformKind::SignChart { i: 1, sign: Sign::Minus },
        ];
        for k in kinds {
            let t = ElementaryTransform::new(k, sig).unwrap();
            assert_eq!(t.pullback(&one).unwrap().constant_term(), q(1));
        }
    }

    #[test]
    fn two_step_chain() {
        let sig = Signature::new(1, 1);
        let chain = AdmissibleTransform::from_steps(
            sig,
            vec![
                et(TransformKind::RamifyX { i: 1, gamma: q(2) }, 1, 1),
                et(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::zero() }, 1, 1),
            ],
        )
        .unwrap();
        let g = pullback_chain(&chain, &ser("x1^(1/2) - y1", 1, 1)).unwrap();
        assert_eq!(g.render(), "x1 - x1*y1");
        assert_eq!(pullback_chain(&AdmissibleTransform::identity(sig), &g).unwrap(), g);
    }

    #[test]
    fn zero_charts_compose() {
        let sig = Signature::new(2, 0);
        let step = et(TransformKind::BlowUpXX { i: 1, j: 2, lambda: Lambda::zero() }, 2, 0);
        let chain = AdmissibleTransform::from_steps(sig, vec![step.clone(), step]).unwrap();
        assert_eq!(pullback_chain(&chain, &ser("x1*x2", 2, 0)).unwrap().render(), "x1*x2^3");
    }

    #[test]
    fn fractional_power_of_binomial_rejected() {
        let t = et(TransformKind::BlowUpXX { i: 2, j: 1, lambda: Lambda::Finite(q(1)) }, 2, 0);
        match t.pullback(&ser("x2^(1/2)", 2, 0)) {
            Err(GpsError::NonNaturalPower(_)) => {}
            other => panic!("{other:?}"),
        }
        let chain = AdmissibleTransform::from_steps(Signature::new(2, 0), vec![t]).unwrap();
        assert!(matches!(pullback_chain(&chain, &ser("x2^(1/2)", 2, 0)), Err(GpsError::AtStep { step: 0, .. })));
    }

    #[test]
    fn infinite_charts_and_inverses() {
        let t = et(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::NegInf }, 1, 2);
        assert_eq!(t.target(), Signature::new(2, 1));
        let g = t.pullback(&ser("y1 + x1*y2", 1, 2)).unwrap();
        assert_eq!(g.render(), "-x2 + x1*x2*y1");
        let p = [0.3, 0.2, -0.7];
        let q0 = t.forward_point(&p).unwrap();
        assert_eq!(q0, vec![0.3 * 0.2, -0.2, -0.7]);
        let back = t.preimages(&q0);
        assert_eq!(back.len(), 1);
        assert!(back[0].iter().zip(&p).all(|(a, b)| (a - b).abs() < 1e-12));
        let r = et(TransformKind::RamifyY { i: 1, d: 2, sign: Sign::Plus }, 0, 1);
        assert_eq!(r.preimages(&[0.25]), vec![vec![0.5], vec![-0.5]]);
        assert!(r.preimages(&[-0.25]).is_empty());
    }

    #[test]
    fn json_round_trip() {
        let h = ser("x1 - 2*y1^2", 1, 1);
        let kinds = vec![
            TransformKind::Tschirnhausen { i: 2, h },
            TransformKind::BlowUpYY { i: 2, j: 1, lambda: Lambda::PosInf },
            TransformKind::Linear { i: 2, c: vec![qr(-1, 3)] },
            TransformKind::RamifyY { i: 1, d: 2, sign: Sign::Minus },
        ];
        for k in kinds {
            let t = et(k, 1, 2);
            assert_eq!(ElementaryTransform::from_json(&t.to_json()).unwrap(), t);
        }
    }
}
