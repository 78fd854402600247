//! Truncated generalized power series with exact rational coefficients.
//!
//! A [`Series`] in the signature `(m, n)` has x-variables `X1..Xm` carrying
//! nonnegative rational exponents and y-variables `Y1..Yn` carrying natural
//! exponents. It stores finitely many nonzero terms together with a precision
//! `δ`: the represented series is known modulo terms of total degree `≥ δ`,
//! and no stored term reaches that degree. Variable indices are 1-based.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{GpsError, Result};

/// Exact rational scalar used for coefficients, exponents and precisions.
pub type Q = BigRational;

/// Integer as a rational.
pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// The rational `n/d`.
pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Numbers of x- and y-variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Signature {
    pub m: usize,
    pub n: usize,
}

impl Signature {
    pub fn new(m: usize, n: usize) -> Self {
        Signature { m, n }
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    pub(crate) fn check_x(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.m {
            return Err(GpsError::IndexOutOfRange { index: i, bound: self.m });
        }
        Ok(())
    }

    pub(crate) fn check_y(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.n {
            return Err(GpsError::IndexOutOfRange { index: j, bound: self.n });
        }
        Ok(())
    }
}

/// Exponent of a mixed monomial `X^α Y^N`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MultiExponent {
    x: Vec<Q>,
    y: Vec<u32>,
    deg: Q,
}

impl MultiExponent {
    pub fn new(x: Vec<Q>, y: Vec<u32>) -> Result<Self> {
        if let Some(bad) = x.iter().find(|a| a.is_negative()) {
            return Err(GpsError::NegativeExponent(bad.to_string()));
        }
        Ok(Self::from_parts(x, y))
    }

    pub(crate) fn from_parts(x: Vec<Q>, y: Vec<u32>) -> Self {
        let mut deg: Q = x.iter().sum();
        deg += Q::from_integer(BigInt::from(y.iter().map(|&b| b as u64).sum::<u64>()));
        MultiExponent { x, y, deg }
    }

    pub fn zero(sig: Signature) -> Self {
        MultiExponent { x: vec![Q::zero(); sig.m], y: vec![0; sig.n], deg: Q::zero() }
    }

    /// `X_i^a`.
    pub fn x_power(sig: Signature, i: usize, a: Q) -> Self {
        let mut x = vec![Q::zero(); sig.m];
        x[i - 1] = a;
        Self::from_parts(x, vec![0; sig.n])
    }

    /// `Y_j^b`.
    pub fn y_power(sig: Signature, j: usize, b: u32) -> Self {
        let mut y = vec![0; sig.n];
        y[j - 1] = b;
        Self::from_parts(vec![Q::zero(); sig.m], y)
    }

    pub fn x(&self) -> &[Q] {
        &self.x
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn degree(&self) -> &Q {
        &self.deg
    }

    pub fn sig(&self) -> Signature {
        Signature::new(self.x.len(), self.y.len())
    }

    pub fn is_zero(&self) -> bool {
        self.deg.is_zero()
    }

    /// Exponent of the product of the two monomials.
    pub fn mul(&self, other: &Self) -> Self {
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a + b).collect();
        let y = self.y.iter().zip(&other.y).map(|(a, b)| a + b).collect();
        MultiExponent { x, y, deg: &self.deg + &other.deg }
    }

    /// Componentwise `self ≤ other`, i.e. `X^self` divides `X^other`.
    pub fn divides(&self, other: &Self) -> bool {
        self.x.iter().zip(&other.x).all(|(a, b)| a <= b)
            && self.y.iter().zip(&other.y).all(|(a, b)| a <= b)
    }

    pub fn comparable(&self, other: &Self) -> bool {
        self.divides(other) || other.divides(self)
    }

    /// `self − other` when `other` divides `self`.
    pub fn checked_div(&self, other: &Self) -> Option<Self> {
        if !other.divides(self) {
            return None;
        }
        let x = self.x.iter().zip(&other.x).map(|(a, b)| a - b).collect();
        let y = self.y.iter().zip(&other.y).map(|(a, b)| a - b).collect();
        Some(MultiExponent { x, y, deg: &self.deg - &other.deg })
    }

    /// Exponent vector scaled by a nonnegative rational; `None` when a y-entry
    /// would leave the naturals.
    pub fn scale(&self, c: &Q) -> Option<Self> {
        let x = self.x.iter().map(|a| a * c).collect();
        let mut y = Vec::with_capacity(self.y.len());
        for &b in &self.y {
            let v = Q::from_integer(BigInt::from(b)) * c;
            if !v.is_integer() {
                return None;
            }
            y.push(v.to_integer().to_u32()?);
        }
        Some(Self::from_parts(x, y))
    }

    /// All coordinates, x first, as rationals.
    pub fn coords(&self) -> Vec<Q> {
        self.x
            .iter()
            .cloned()
            .chain(self.y.iter().map(|&b| Q::from_integer(BigInt::from(b))))
            .collect()
    }

    pub fn is_integral(&self) -> bool {
        self.x.iter().all(|a| a.is_integer())
    }
}

impl Ord for MultiExponent {
    /// Graded order: total degree ascending, then lexicographically descending.
    fn cmp(&self, other: &Self) -> Ordering {
        self.deg
            .cmp(&other.deg)
            .then_with(|| other.x.cmp(&self.x))
            .then_with(|| other.y.cmp(&self.y))
    }
}

impl PartialOrd for MultiExponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn fmt_power(f: &mut fmt::Formatter<'_>, name: &str, e: &Q) -> fmt::Result {
    if e.is_one() {
        write!(f, "{name}")
    } else if e.is_integer() {
        write!(f, "{name}^{e}")
    } else {
        write!(f, "{name}^({e})")
    }
}

impl fmt::Display for MultiExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, a) in self.x.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            fmt_power(f, &format!("x{}", i + 1), a)?;
        }
        for (j, &b) in self.y.iter().enumerate() {
            if b == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            fmt_power(f, &format!("y{}", j + 1), &q(b as i64))?;
        }
        Ok(())
    }
}

/// Regularity order of a series in a distinguished y-variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regularity {
    Order(u32),
    NotRegular,
}

/// Value of a series at a point plus the truncation tail bound `C·‖p‖^δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    /// Exact value when every exponent and coordinate allowed it.
    pub exact: Option<Q>,
    pub value: f64,
    pub tail: f64,
}

/// A truncated generalized power series.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    sig: Signature,
    terms: BTreeMap<MultiExponent, Q>,
    prec: Q,
}

impl Series {
    pub fn zero(sig: Signature, prec: Q) -> Self {
        assert!(prec.is_positive(), "precision must be positive");
        Series { sig, terms: BTreeMap::new(), prec }
    }

    pub fn constant(sig: Signature, c: Q, prec: Q) -> Self {
        Self::monomial(MultiExponent::zero(sig), c, prec)
    }

    pub fn one(sig: Signature, prec: Q) -> Self {
        Self::constant(sig, Q::one(), prec)
    }

    pub fn monomial(e: MultiExponent, c: Q, prec: Q) -> Self {
        let sig = e.sig();
        let mut s = Self::zero(sig, prec);
        s.add_term(e, c);
        s
    }

    /// The variable `X_i`.
    pub fn x(sig: Signature, i: usize, prec: Q) -> Self {
        Self::monomial(MultiExponent::x_power(sig, i, Q::one()), Q::one(), prec)
    }

    /// The variable `Y_j`.
    pub fn y(sig: Signature, j: usize, prec: Q) -> Self {
        Self::monomial(MultiExponent::y_power(sig, j, 1), Q::one(), prec)
    }

    /// Sum of the given terms, truncated and canonicalized.
    pub fn from_terms<I>(sig: Signature, terms: I, prec: Q) -> Result<Self>
    where
        I: IntoIterator<Item = (MultiExponent, Q)>,
    {
        let mut s = Self::zero(sig, prec);
        for (e, c) in terms {
            if e.sig() != sig {
                return Err(GpsError::SignatureMismatch(e.sig(), sig));
            }
            s.add_term(e, c);
        }
        Ok(s)
    }

    /// Adds `c·X^e`, dropping it when it reaches the precision.
    pub(crate) fn add_term(&mut self, e: MultiExponent, c: Q) {
        if c.is_zero() || e.deg >= self.prec {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn precision(&self) -> &Q {
        &self.prec
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiExponent, &Q)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &MultiExponent) -> Q {
        self.terms.get(e).cloned().unwrap_or_else(Q::zero)
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&MultiExponent::zero(self.sig))
    }

    pub fn is_unit(&self) -> bool {
        !self.constant_term().is_zero()
    }

    /// Minimal total degree of a stored term; `None` for the zero series.
    pub fn ord(&self) -> Option<Q> {
        self.terms.keys().next().map(|e| e.deg.clone())
    }

    /// Lower bound on the order of the represented series.
    pub fn ord_bound(&self) -> Q {
        self.ord().unwrap_or_else(|| self.prec.clone())
    }

    /// Maximal degree of a stored term (zero for the zero series).
    pub fn max_degree(&self) -> Q {
        self.terms.keys().next_back().map(|e| e.deg.clone()).unwrap_or_else(Q::zero)
    }

    /// Lowers the precision to `min(self.precision, p)`.
    pub fn truncate(&self, p: &Q) -> Self {
        if *p >= self.prec {
            return self.clone();
        }
        let terms = self.terms.iter().filter(|(e, _)| e.deg < *p).map(|(e, c)| (e.clone(), c.clone())).collect();
        Series { sig: self.sig, terms, prec: p.clone() }
    }

    /// Declares the stored terms to be the whole series below `p`.
    ///
    /// Only meaningful for series whose stored terms are exact, such as
    /// polynomials entered by the user.
    pub fn assume_exact_to(&self, p: Q) -> Self {
        assert!(p.is_positive(), "precision must be positive");
        let mut s = Series { sig: self.sig, terms: BTreeMap::new(), prec: p };
        for (e, c) in &self.terms {
            s.add_term(e.clone(), c.clone());
        }
        s
    }

    /// Equality of all terms of degree `< p`.
    pub fn eq_mod(&self, other: &Self, p: &Q) -> bool {
        let a = self.terms.iter().filter(|(e, _)| e.deg < *p);
        let b = other.terms.iter().filter(|(e, _)| e.deg < *p);
        self.sig == other.sig && a.eq(b)
    }

    /// Equality modulo the smaller of the two precisions.
    pub fn eq_mod_precision(&self, other: &Self) -> bool {
        let p = self.prec.clone().min(other.prec.clone());
        self.eq_mod(other, &p)
    }

    fn check_sig(&self, other: &Self) -> Result<()> {
        if self.sig != other.sig {
            return Err(GpsError::SignatureMismatch(self.sig, other.sig));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_sig(other)?;
        let prec = self.prec.clone().min(other.prec.clone());
        let mut s = self.truncate(&prec);
        for (e, c) in &other.terms {
            s.add_term(e.clone(), c.clone());
        }
        Ok(s)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&-Q::one())
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut s = Self::zero(self.sig, self.prec.clone());
        if c.is_zero() {
            return s;
        }
        s.terms = self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect();
        s
    }

    /// Product; precision `min(a.δ + ord b, b.δ + ord a)` with orders bounded by
    /// the precisions.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_sig(other)?;
        let prec = (&self.prec + other.ord_bound()).min(&other.prec + self.ord_bound());
        let mut s = Self::zero(self.sig, prec);
        let Some(bmin) = other.terms.keys().next().map(|e| e.deg.clone()) else {
            return Ok(s);
        };
        for (ea, ca) in &self.terms {
            if &ea.deg + &bmin >= s.prec {
                break;
            }
            for (eb, cb) in &other.terms {
                if &ea.deg + &eb.deg >= s.prec {
                    break;
                }
                s.add_term(ea.mul(eb), ca * cb);
            }
        }
        Ok(s)
    }

    /// Multiplication by the monomial `c·X^e`.
    pub fn mul_monomial(&self, e: &MultiExponent, c: &Q) -> Self {
        let mut s = Self::zero(self.sig, &self.prec + &e.deg);
        if c.is_zero() {
            return s;
        }
        s.terms = self.terms.iter().map(|(f, a)| (f.mul(e), a * c)).collect();
        s
    }

    /// `self / X^e` when every stored term is divisible by `X^e`.
    pub fn div_monomial(&self, e: &MultiExponent) -> Option<Self> {
        let prec = &self.prec - &e.deg;
        if !prec.is_positive() {
            return None;
        }
        let mut terms = BTreeMap::new();
        for (f, c) in &self.terms {
            terms.insert(f.checked_div(e)?, c.clone());
        }
        Some(Series { sig: self.sig, terms, prec })
    }

    pub fn pow(&self, k: u32) -> Result<Self> {
        let mut result = Self::one(self.sig, self.prec.clone() + Q::from_integer(BigInt::from(k)) * self.ord_bound());
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = result.mul(&base)?;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(result)
    }

    /// Multiplicative inverse of a unit.
    pub fn inverse(&self) -> Result<Self> {
        let c0 = self.constant_term();
        if c0.is_zero() {
            return Err(GpsError::NotAUnit);
        }
        let inv0 = c0.recip();
        // Newton iteration V ← V(2 − U V) converges on truncated units.
        let two = Self::constant(self.sig, q(2), self.prec.clone());
        let mut v = Self::constant(self.sig, inv0, self.prec.clone());
        for _ in 0..256 {
            let next = v.mul(&two.sub(&self.mul(&v)?)?)?.truncate(&self.prec);
            if next == v {
                return Ok(v);
            }
            v = next;
        }
        Err(GpsError::PrecisionExhausted("unit inverse did not stabilize".into()))
    }

    /// Componentwise-minimal exponents of the support, in graded order.
    pub fn min_support(&self) -> Vec<MultiExponent> {
        minimal_elements(self.terms.keys())
    }

    /// Formal `∂/∂Y_j`; precision drops by one.
    pub fn partial_y(&self, j: usize) -> Result<Self> {
        self.sig.check_y(j)?;
        let mut s = Self::zero(self.sig, &self.prec - Q::one());
        if !s.prec.is_positive() {
            return Err(GpsError::PrecisionExhausted(format!("derivative in y{j} of a series at precision {}", self.prec)));
        }
        for (e, c) in &self.terms {
            let b = e.y[j - 1];
            if b == 0 {
                continue;
            }
            let mut y = e.y.clone();
            y[j - 1] -= 1;
            s.add_term(MultiExponent::from_parts(e.x.clone(), y), c * Q::from_integer(BigInt::from(b)));
        }
        Ok(s)
    }

    /// `k`-fold `∂/∂Y_j`.
    pub fn partial_y_n(&self, j: usize, k: u32) -> Result<Self> {
        let mut s = self.clone();
        for _ in 0..k {
            s = s.partial_y(j)?;
        }
        Ok(s)
    }

    /// `∂_i`: each term is multiplied by its `X_i` exponent.
    pub fn log_derivative_x(&self, i: usize) -> Result<Self> {
        self.sig.check_x(i)?;
        let mut s = Self::zero(self.sig, self.prec.clone());
        for (e, c) in &self.terms {
            s.add_term(e.clone(), c * &e.x[i - 1]);
        }
        Ok(s)
    }

    /// Drops terms involving `X_i` and removes the variable.
    pub fn set_x_to_zero(&self, i: usize) -> Result<Self> {
        self.sig.check_x(i)?;
        let sig = Signature::new(self.sig.m - 1, self.sig.n);
        let mut s = Self::zero(sig, self.prec.clone());
        for (e, c) in &self.terms {
            if e.x[i - 1].is_zero() {
                let mut x = e.x.clone();
                x.remove(i - 1);
                s.add_term(MultiExponent::from_parts(x, e.y.clone()), c.clone());
            }
        }
        Ok(s)
    }

    /// Drops terms involving `Y_j` and removes the variable.
    pub fn set_y_to_zero(&self, j: usize) -> Result<Self> {
        Ok(self.y_coefficients(j)?.remove(&0).unwrap_or_else(|| {
            Self::zero(Signature::new(self.sig.m, self.sig.n - 1), self.prec.clone())
        }))
    }

    /// Restriction to `X = 0`, a series in the y-variables only.
    pub fn at_x_zero(&self) -> Self {
        let sig = Signature::new(0, self.sig.n);
        let mut s = Self::zero(sig, self.prec.clone());
        for (e, c) in &self.terms {
            if e.x.iter().all(|a| a.is_zero()) {
                s.add_term(MultiExponent::from_parts(vec![], e.y.clone()), c.clone());
            }
        }
        s
    }

    /// Coefficients `G_k` with `self = Σ_k G_k · Y_j^k`, as series without `Y_j`.
    ///
    /// The coefficient of `Y_j^k` is known to precision `δ − k`.
    pub fn y_coefficients(&self, j: usize) -> Result<BTreeMap<u32, Self>> {
        self.sig.check_y(j)?;
        let sig = Signature::new(self.sig.m, self.sig.n - 1);
        let mut out: BTreeMap<u32, Self> = BTreeMap::new();
        for (e, c) in &self.terms {
            let k = e.y[j - 1];
            let mut y = e.y.clone();
            y.remove(j - 1);
            let prec = &self.prec - Q::from_integer(BigInt::from(k));
            out.entry(k)
                .or_insert_with(|| Self::zero(sig, prec))
                .add_term(MultiExponent::from_parts(e.x.clone(), y), c.clone());
        }
        Ok(out)
    }

    /// The coefficient of `Y_j^k`, a series without `Y_j`.
    pub fn y_coefficient(&self, j: usize, k: u32) -> Result<Self> {
        let sig = Signature::new(self.sig.m, self.sig.n - 1);
        let prec = &self.prec - Q::from_integer(BigInt::from(k));
        if !prec.is_positive() {
            return Err(GpsError::PrecisionExhausted(format!("coefficient of y{j}^{k} beyond precision {}", self.prec)));
        }
        Ok(self.y_coefficients(j)?.remove(&k).unwrap_or_else(|| Self::zero(sig, prec)))
    }

    /// Reinserts `Y_j` (with exponent zero everywhere), the inverse of taking a
    /// coefficient.
    pub fn insert_y(&self, j: usize) -> Self {
        let sig = Signature::new(self.sig.m, self.sig.n + 1);
        assert!(j >= 1 && j <= sig.n, "y index out of range");
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut y = e.y.clone();
                y.insert(j - 1, 0);
                (MultiExponent::from_parts(e.x.clone(), y), c.clone())
            })
            .collect();
        Series { sig, terms, prec: self.prec.clone() }
    }

    /// Embeds a series over `(m, k)` into `(m, n)`, `k ≤ n`, as a function of
    /// the first `k` y-variables.
    pub fn embed_y_prefix(&self, n: usize) -> Self {
        assert!(n >= self.sig.n);
        let sig = Signature::new(self.sig.m, n);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut y = e.y.clone();
                y.resize(n, 0);
                (MultiExponent::from_parts(e.x.clone(), y), c.clone())
            })
            .collect();
        Series { sig, terms, prec: self.prec.clone() }
    }

    /// Whether every stored term involves at most the variable `var`
    /// (1-based over all coordinates, x first).
    pub fn depends_only_on(&self, var: usize) -> bool {
        self.terms.keys().all(|e| {
            e.coords().iter().enumerate().all(|(k, a)| k + 1 == var || a.is_zero())
        })
    }

    /// Regularity order in `Y_j`: the order of `self(0, …, 0, Y_j, 0, …)`.
    pub fn order_in_y(&self, j: usize) -> Regularity {
        if self.sig.check_y(j).is_err() {
            return Regularity::NotRegular;
        }
        self.terms
            .keys()
            .filter(|e| e.x.iter().all(|a| a.is_zero()) && e.y.iter().enumerate().all(|(k, b)| k + 1 == j || *b == 0))
            .map(|e| e.y[j - 1])
            .min()
            .map_or(Regularity::NotRegular, Regularity::Order)
    }

    /// Value at `point` (x-coordinates first). Exact when every exponent is
    /// integral, otherwise in `f64`.
    pub fn evaluate(&self, point: &[Q]) -> Result<Evaluation> {
        self.check_point(point.len())?;
        let integral = self.terms.keys().all(|e| e.is_integral());
        for (i, p) in point.iter().take(self.sig.m).enumerate() {
            if p.is_negative() && self.terms.keys().any(|e| !e.x[i].is_integer()) {
                return Err(GpsError::NegativeFractionalBase(i + 1));
            }
        }
        let norm = point.iter().map(|p| p.abs()).max().unwrap_or_else(Q::zero);
        let tail = self.tail_bound(norm.to_f64().unwrap_or(f64::INFINITY));
        if integral {
            let mut v = Q::zero();
            for (e, c) in &self.terms {
                let mut t = c.clone();
                for (k, a) in e.coords().iter().enumerate() {
                    let a = a.to_integer().to_i32().expect("exponent fits i32");
                    if a != 0 {
                        t *= num_traits::pow::Pow::pow(&point[k], a);
                    }
                }
                v += t;
            }
            let value = v.to_f64().unwrap_or(f64::NAN);
            return Ok(Evaluation { exact: Some(v), value, tail });
        }
        let fp: Vec<f64> = point.iter().map(|p| p.to_f64().unwrap_or(f64::NAN)).collect();
        let (value, _) = self.evaluate_f64(&fp)?;
        Ok(Evaluation { exact: None, value, tail })
    }

    /// Floating-point value and tail bound at `point`.
    pub fn evaluate_f64(&self, point: &[f64]) -> Result<(f64, f64)> {
        self.check_point(point.len())?;
        let m = self.sig.m;
        let mut v = 0.0;
        for (e, c) in &self.terms {
            let mut t = c.to_f64().unwrap_or(f64::NAN);
            for (i, a) in e.x.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                if a.is_integer() {
                    t *= point[i].powi(a.to_integer().to_i32().expect("exponent fits i32"));
                } else if point[i] < 0.0 {
                    return Err(GpsError::NegativeFractionalBase(i + 1));
                } else {
                    t *= point[i].powf(a.to_f64().unwrap_or(f64::NAN));
                }
            }
            for (j, &b) in e.y.iter().enumerate() {
                if b != 0 {
                    t *= point[m + j].powi(b as i32);
                }
            }
            v += t;
        }
        let norm = point.iter().fold(0.0f64, |acc, p| acc.max(p.abs()));
        Ok((v, self.tail_bound(norm)))
    }

    /// `C·‖p‖^δ` with `C` the sum of absolute coefficients.
    pub fn tail_bound(&self, norm: f64) -> f64 {
        if norm == 0.0 {
            return 0.0;
        }
        let c: f64 = self.terms.values().map(|a| a.abs().to_f64().unwrap_or(f64::INFINITY)).sum();
        c * norm.powf(self.prec.to_f64().unwrap_or(f64::INFINITY))
    }

    /// Sum of the absolute values of the coefficients.
    pub fn coefficient_mass(&self) -> f64 {
        self.terms.values().map(|a| a.abs().to_f64().unwrap_or(f64::INFINITY)).sum()
    }

    fn check_point(&self, len: usize) -> Result<()> {
        if len != self.sig.dim() {
            return Err(GpsError::PointArity { got: len, expected: self.sig.dim() });
        }
        Ok(())
    }

    /// Canonical text: terms in graded order, parseable by the DSL.
    pub fn render(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (e, c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let a = c.abs();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            if e.is_zero() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{e}")?;
            } else {
                write!(f, "{a}*{e}")?;
            }
        }
        Ok(())
    }
}

/// Componentwise-minimal elements of a set of exponents.
pub fn minimal_elements<'a, I>(exps: I) -> Vec<MultiExponent>
where
    I: IntoIterator<Item = &'a MultiExponent>,
{
    // Graded order lists every divisor of an exponent before the exponent.
    let mut mins: Vec<MultiExponent> = Vec::new();
    for e in exps {
        if !mins.iter().any(|m| m.divides(e)) {
            mins.push(e.clone());
        }
    }
    mins.sort();
    mins
}

/// `k`-th root of a rational when it is rational.
pub fn rational_root(a: &Q, k: u32) -> Option<Q> {
    if k == 0 {
        return None;
    }
    if a.is_negative() {
        return if k % 2 == 1 { rational_root(&-a, k).map(|r| -r) } else { None };
    }
    let root_int = |n: &BigInt| {
        let r = n.nth_root(k);
        if num_traits::pow::Pow::pow(&r, k) == *n {
            Some(r)
        } else {
            None
        }
    };
    Some(Q::new(root_int(a.numer())?, root_int(a.denom())?))
}

/// `base^e` for positive `base` when the result is rational.
pub fn rational_pow(base: &Q, e: &Q) -> Result<Q> {
    if !base.is_positive() {
        return Err(GpsError::NonPositiveBase(base.to_string()));
    }
    let den = e.denom().to_u32().ok_or_else(|| GpsError::IrrationalPower { base: base.to_string(), exponent: e.to_string() })?;
    let root = rational_root(base, den).ok_or_else(|| GpsError::IrrationalPower { base: base.to_string(), exponent: e.to_string() })?;
    let num = e.numer().to_i32().ok_or_else(|| GpsError::Invalid(format!("exponent {e} too large")))?;
    Ok(num_traits::pow::Pow::pow(&root, num))
}

/// Generalized binomial coefficient `(α choose i)`.
pub fn binomial(alpha: &Q, i: u32) -> Q {
    let mut c = Q::one();
    for t in 0..i {
        c = c * (alpha - q(t as i64)) / q(t as i64 + 1);
    }
    c
}

/// `(Y + λ)^α = λ^α Σ (α choose i)(Y/λ)^i` over the signature `(0, 1)`,
/// truncated at `δ`. Requires `λ > 0` and `λ^α` rational.
pub fn binomial_series(lambda: &Q, alpha: &Q, prec: &Q) -> Result<Series> {
    let lead = rational_pow(lambda, alpha)?;
    let sig = Signature::new(0, 1);
    let mut s = Series::zero(sig, prec.clone());
    let mut scale = lead;
    let inv = lambda.recip();
    let mut i = 0u32;
    while q(i as i64) < *prec {
        s.add_term(MultiExponent::y_power(sig, 1, i), binomial(alpha, i) * &scale);
        scale *= &inv;
        i += 1;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sig11() -> Signature {
        Signature::new(1, 1)
    }

    fn xy(a: Q, b: u32) -> MultiExponent {
        MultiExponent::new(vec![a], vec![b]).unwrap()
    }

    #[test]
    fn cancellation_and_identity() {
        let p = q(8);
        let x = Series::x(sig11(), 1, p.clone());
        let y = Series::y(sig11(), 1, p.clone());
        let s = x.add(&y).unwrap().add(&x.sub(&y).unwrap()).unwrap();
        assert_eq!(s, x.scale(&q(2)));
        assert_eq!(x.add(&Series::zero(sig11(), p)).unwrap(), x);
    }

    #[test]
    fn fractional_exponents_add_and_multiply() {
        let p = q(8);
        let h = Series::monomial(xy(qr(1, 2), 0), q(1), p.clone());
        assert_eq!(h.add(&h).unwrap().render(), "2*x1^(1/2)");
        let t = Series::monomial(xy(qr(3, 2), 0), q(1), p.clone());
        assert_eq!(h.mul(&t).unwrap().render(), "x1^2");
    }

    #[test]
    fn product_of_conjugates() {
        let sig = Signature::new(0, 1);
        let p = q(8);
        let y = Series::y(sig, 1, p.clone());
        let one = Series::one(sig, p);
        let s = one.add(&y).unwrap().mul(&one.sub(&y).unwrap()).unwrap();
        assert_eq!(s.render(), "1 - y1^2");
    }

    #[test]
    fn min_support_matches_example() {
        let sig = Signature::new(2, 0);
        let e = |a: i64, b: i64| MultiExponent::new(vec![q(a), q(b)], vec![]).unwrap();
        let s = Series::from_terms(sig, [(e(1, 2), q(1)), (e(2, 1), q(1)), (e(3, 3), q(1))], q(10)).unwrap();
        assert_eq!(s.min_support(), vec![e(2, 1), e(1, 2)]);
        assert!(Series::zero(sig, q(3)).min_support().is_empty());
    }

    #[test]
    fn derivatives() {
        let p = q(8);
        let s = Series::from_terms(sig11(), [(xy(q(0), 3), q(1)), (xy(q(1), 1), q(1))], p.clone()).unwrap();
        assert_eq!(s.partial_y(1).unwrap().render(), "x1 + 3*y1^2");
        let s = Series::from_terms(sig11(), [(xy(q(2), 1), q(1)), (xy(q(1), 0), q(1))], p.clone()).unwrap();
        assert_eq!(s.log_derivative_x(1).unwrap().render(), "x1 + 2*x1^2*y1");
        let h = Series::monomial(xy(qr(1, 2), 0), q(1), p);
        assert_eq!(h.log_derivative_x(1).unwrap().render(), "1/2*x1^(1/2)");
        assert!(h.partial_y(1).unwrap().is_zero());
        assert!(h.partial_y(2).is_err());
    }

    #[test]
    fn setting_x_to_zero() {
        let sig = Signature::new(2, 0);
        let p = q(8);
        let s = Series::x(sig, 1, p.clone()).add(&Series::x(sig, 2, p.clone())).unwrap();
        assert_eq!(s.set_x_to_zero(1).unwrap().render(), "x1");
        let c = Series::constant(sig, q(3), p.clone())
            .add(&Series::x(sig, 1, p.clone()).mul(&Series::x(sig, 2, p)).unwrap())
            .unwrap();
        assert_eq!(c.set_x_to_zero(1).unwrap().render(), "3");
    }

    #[test]
    fn regularity_orders() {
        let p = q(8);
        let g = Series::from_terms(sig11(), [(xy(q(0), 2), q(1)), (xy(q(3), 0), q(-1))], p.clone()).unwrap();
        assert_eq!(g.order_in_y(1), Regularity::Order(2));
        let g = Series::from_terms(sig11(), [(xy(q(1), 1), q(1))], p).unwrap();
        assert_eq!(g.order_in_y(1), Regularity::NotRegular);
    }

    #[test]
    fn binomial_examples() {
        assert_eq!(binomial_series(&q(1), &q(2), &q(5)).unwrap().render(), "1 + 2*y1 + y1^2");
        assert_eq!(binomial_series(&q(1), &qr(1, 2), &q(3)).unwrap().render(), "1 + 1/2*y1 - 1/8*y1^2");
        assert_eq!(binomial_series(&q(4), &qr(1, 2), &q(2)).unwrap().render(), "2 + 1/4*y1");
        assert!(binomial_series(&q(0), &q(1), &q(2)).is_err());
        assert!(matches!(binomial_series(&q(2), &qr(1, 2), &q(2)), Err(GpsError::IrrationalPower { .. })));
    }

    #[test]
    fn evaluation_examples() {
        let sig = Signature::new(1, 0);
        let h = Series::monomial(MultiExponent::new(vec![qr(1, 2)], vec![]).unwrap(), q(1), q(8));
        let v = h.evaluate(&[qr(1, 4)]).unwrap();
        assert!((v.value - 0.5).abs() < 1e-15);
        assert!(h.evaluate(&[qr(-1, 4)]).is_err());
        let s = Series::from_terms(sig11(), [(xy(q(2), 1), q(1))], q(8)).unwrap();
        assert_eq!(s.evaluate(&[qr(1, 2), q(3)]).unwrap().exact, Some(qr(3, 4)));
        let _ = sig;
    }

    #[test]
    fn inverse_of_unit() {
        let sig = Signature::new(0, 1);
        let u = binomial_series(&q(1), &qr(1, 2), &q(6)).unwrap();
        let inv = u.inverse().unwrap();
        assert!(u.mul(&inv).unwrap().eq_mod_precision(&Series::one(sig, q(6))));
    }

    #[test]
    fn render_orders_by_degree() {
        let sig = Signature::new(2, 1);
        let e = |a: i64, b: i64, c: u32| MultiExponent::new(vec![q(a), q(b)], vec![c]).unwrap();
        let s = Series::from_terms(sig, [(e(0, 1, 0), q(1)), (e(1, 0, 0), q(-2)), (e(0, 0, 0), qr(1, 3))], q(5)).unwrap();
        assert_eq!(s.render(), "1/3 - 2*x1 + x2");
    }
}
