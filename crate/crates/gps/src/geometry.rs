//! Basic sets and their quadrant parametrisation.

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::{GpsError, Result};
use crate::monomialize::{float_allowance, normalize_family, NormalForm};
use crate::series::{Series, Signature};
use crate::transforms::AdmissibleTransform;
use crate::trees::{CoverageReport, INVERSION_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Relation {
    Eq0,
    Gt0,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub series: Series,
    pub relation: Relation,
}

/// A conjunction of sign conditions on series sharing one signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicSet {
    sig: Signature,
    conjuncts: Vec<Atom>,
}

impl BasicSet {
    pub fn new(sig: Signature, conjuncts: Vec<Atom>) -> Result<Self> {
        if conjuncts.is_empty() {
            return Err(GpsError::Invalid("a basic set needs at least one condition".into()));
        }
        if let Some(a) = conjuncts.iter().find(|a| a.series.sig() != sig) {
            return Err(GpsError::SignatureMismatch(a.series.sig(), sig));
        }
        Ok(BasicSet { sig, conjuncts })
    }

    pub fn sig(&self) -> Signature {
        self.sig
    }

    pub fn conjuncts(&self) -> &[Atom] {
        &self.conjuncts
    }
}

/// Three-valued answer of the membership oracle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tristate {
    True,
    False,
    Unknown,
}

impl Tristate {
    fn and(self, other: Tristate) -> Tristate {
        match (self, other) {
            (Tristate::False, _) | (_, Tristate::False) => Tristate::False,
            (Tristate::True, Tristate::True) => Tristate::True,
            _ => Tristate::Unknown,
        }
    }

    fn or(self, other: Tristate) -> Tristate {
        match (self, other) {
            (Tristate::True, _) | (_, Tristate::True) => Tristate::True,
            (Tristate::False, Tristate::False) => Tristate::False,
            _ => Tristate::Unknown,
        }
    }
}

/// `True` and `False` only when the float error plus the truncation tail
/// cannot change the answer; an equation counts as satisfied within the
/// float error alone.
pub fn atom_membership(atom: &Atom, p: &[f64]) -> Tristate {
    atom_membership_with_slack(atom, p, 0.0)
}

/// As [`atom_membership`] with the tail widened by `slack`.
pub fn atom_membership_with_slack(atom: &Atom, p: &[f64], slack: f64) -> Tristate {
    let Ok((v, tail)) = atom.series.evaluate_f64(p) else { return Tristate::Unknown };
    let tail = tail + slack;
    let err = float_allowance(&atom.series, p);
    if !v.is_finite() {
        return Tristate::Unknown;
    }
    match atom.relation {
        Relation::Eq0 if v.abs() <= err => Tristate::True,
        Relation::Eq0 if v.abs() <= err + tail => Tristate::Unknown,
        Relation::Eq0 => Tristate::False,
        Relation::Gt0 if v > err + tail => Tristate::True,
        Relation::Gt0 if v < -(err + tail) => Tristate::False,
        Relation::Gt0 => Tristate::Unknown,
    }
}

pub fn basic_membership(set: &BasicSet, p: &[f64]) -> Tristate {
    basic_membership_with_slack(set, p, 0.0)
}

fn basic_membership_with_slack(set: &BasicSet, p: &[f64], slack: f64) -> Tristate {
    set.conjuncts.iter().fold(Tristate::True, |acc, a| acc.and(atom_membership_with_slack(a, p, slack)))
}

/// Membership in a finite union of basic sets.
pub fn membership_oracle(union: &[BasicSet], p: &[f64]) -> Tristate {
    membership_with_slack(union, p, 0.0)
}

/// Membership with every tail widened by `slack`, the truncation error of a
/// parametrizing map at the preimage.
pub fn membership_with_slack(union: &[BasicSet], p: &[f64], slack: f64) -> Tristate {
    union.iter().fold(Tristate::False, |acc, b| acc.or(basic_membership_with_slack(b, p, slack)))
}

/// Sign of one coordinate on a sub-quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SignTag {
    Zero,
    Pos,
    Neg,
}

impl SignTag {
    fn symbol(self) -> &'static str {
        match self {
            SignTag::Zero => "0",
            SignTag::Pos => "+",
            SignTag::Neg => "-",
        }
    }
}

/// `{q : |q_k| < radius, sign(q_k) = signs[k]}`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubQuadrant {
    pub signs: Vec<SignTag>,
    pub radius: f64,
}

impl SubQuadrant {
    pub fn dimension(&self) -> usize {
        self.signs.iter().filter(|s| **s != SignTag::Zero).count()
    }

    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.signs
            .iter()
            .map(|s| match s {
                SignTag::Zero => 0.0,
                SignTag::Pos => rng.gen_range(0.0..self.radius).max(f64::MIN_POSITIVE),
                SignTag::Neg => -rng.gen_range(0.0..self.radius).max(f64::MIN_POSITIVE),
            })
            .collect()
    }

    /// Snaps near-zero coordinates of `q` onto the quadrant, or `None` when
    /// `q` lies outside it.
    pub fn project(&self, q: &[f64], tol: f64) -> Option<Vec<f64>> {
        let max = self.radius * (1.0 + tol);
        q.iter()
            .zip(&self.signs)
            .map(|(&v, s)| match s {
                SignTag::Zero => (v.abs() <= tol).then_some(0.0),
                SignTag::Pos => (v > 0.0 && v < max).then_some(v),
                SignTag::Neg => (v < 0.0 && -v < max).then_some(v),
            })
            .collect()
    }
}

/// One parametrizing map: the chain on the hyperplane piece where the x-variables
/// in `zero_x` vanish, restricted to a sub-quadrant.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadrantParam {
    /// Ambient x-indices fixed to zero, ascending.
    pub zero_x: Vec<usize>,
    pub chain: AdmissibleTransform,
    pub quadrant: SubQuadrant,
    /// Normal forms of the pulled-back conditions of the piece.
    pub forms: Vec<NormalForm>,
}

impl QuadrantParam {
    /// Largest truncation tail of the pulled-back conditions at `q`.
    pub fn slack(&self, q: &[f64]) -> f64 {
        let norm = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        self.forms.iter().map(|f| f.to_series().tail_bound(norm)).fold(0.0, f64::max)
    }

    fn embed(&self, ambient: Signature, p: Vec<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(ambient.dim());
        let mut it = p.into_iter();
        for i in 1..=ambient.m {
            out.push(if self.zero_x.contains(&i) { 0.0 } else { it.next().expect("restricted x") });
        }
        out.extend(it);
        out
    }

    pub fn forward(&self, ambient: Signature, q: &[f64]) -> Result<Vec<f64>> {
        Ok(self.embed(ambient, self.chain.forward_point(q)?))
    }

    /// Preimages of `p` under the chain, before snapping onto the quadrant.
    pub fn raw_preimages(&self, p: &[f64]) -> Vec<Vec<f64>> {
        if self.zero_x.iter().any(|&i| p[i - 1].abs() > INVERSION_TOL) {
            return Vec::new();
        }
        let restricted: Vec<f64> = p.iter().enumerate().filter(|(k, _)| !self.zero_x.contains(&(k + 1))).map(|(_, v)| *v).collect();
        self.chain.preimages(&restricted)
    }

    /// Points of the quadrant over `p` (after snapping onto it).
    pub fn preimages(&self, p: &[f64]) -> Vec<Vec<f64>> {
        self.raw_preimages(p).into_iter().filter_map(|q| self.quadrant.project(&q, INVERSION_TOL)).collect()
    }

    fn to_json(&self) -> Value {
        json!({
            "zero_x": self.zero_x,
            "chain": self.chain.to_json(),
            "target": [self.chain.target().m, self.chain.target().n],
            "signs": self.quadrant.signs.iter().map(|s| s.symbol()).collect::<Vec<_>>(),
            "radius": self.quadrant.radius,
            "dimension": self.quadrant.dimension(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Parametrization {
    pub sig: Signature,
    pub entries: Vec<QuadrantParam>,
    /// Radius `r*` of the box near the origin the entries are claimed to cover.
    pub radius: f64,
    /// Leaves examined across all hyperplane pieces.
    pub leaves: usize,
}

impl Parametrization {
    pub fn to_json(&self) -> Value {
        json!({
            "signature": [self.sig.m, self.sig.n],
            "radius": self.radius,
            "leaves": self.leaves,
            "quadrants": self.entries.iter().map(QuadrantParam::to_json).collect::<Vec<_>>(),
        })
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("{} quadrants from {} leaves, radius {}\n", self.entries.len(), self.leaves, self.radius);
        for (k, e) in self.entries.iter().enumerate() {
            let signs: Vec<&str> = e.quadrant.signs.iter().map(|s| s.symbol()).collect();
            let zero = if e.zero_x.is_empty() {
                String::new()
            } else {
                format!(" on {}", e.zero_x.iter().map(|i| format!("x{i}=0")).collect::<Vec<_>>().join(","))
            };
            let chain = if e.chain.is_empty() { "id".to_string() } else { e.chain.to_string() };
            out.push_str(&format!("q{}{zero}: {chain} on ({}) dim {}\n", k + 1, signs.join(","), e.quadrant.dimension()));
        }
        out
    }
}

/// Largest radius `1/2^k ≤ 1/2` on which every unit keeps the sign of its constant
/// term: `|U(0)|` exceeds the sum of the other terms plus the tail.
fn definite_radius(forms: &[NormalForm]) -> f64 {
    let mut r = 0.5f64;
    for _ in 0..60 {
        let ok = forms.iter().all(|f| {
            let u0 = f.unit.constant_term().abs().to_f64().unwrap_or(0.0);
            let rest: f64 = f
                .unit
                .terms()
                .filter(|(e, _)| !e.is_zero())
                .map(|(e, c)| c.abs().to_f64().unwrap_or(f64::INFINITY) * r.powf(e.degree().to_f64().unwrap_or(f64::INFINITY)))
                .sum();
            u0 > rest + f.unit.tail_bound(r)
        });
        if ok {
            return r;
        }
        r /= 2.0;
    }
    r
}

/// Sign of `X^α Y^β · U` on a quadrant: `0` when a variable of the monomial
/// vanishes there.
fn sign_on(form: &NormalForm, signs: &[SignTag]) -> i32 {
    let coords = form.monomial.coords();
    let mut s = if form.unit.constant_term().is_positive() { 1 } else { -1 };
    for (a, tag) in coords.iter().zip(signs) {
        if a.is_zero() {
            continue;
        }
        match tag {
            SignTag::Zero => return 0,
            SignTag::Pos => {}
            SignTag::Neg => {
                if a.to_integer().to_u64().is_some_and(|b| b % 2 == 1) {
                    s = -s;
                }
            }
        }
    }
    s
}

fn patterns(sig: Signature) -> Vec<Vec<SignTag>> {
    let mut out: Vec<Vec<SignTag>> = vec![Vec::new()];
    for k in 0..sig.dim() {
        let tags: &[SignTag] = if k < sig.m { &[SignTag::Zero, SignTag::Pos] } else { &[SignTag::Zero, SignTag::Pos, SignTag::Neg] };
        out = out.into_iter().flat_map(|v| tags.iter().map(move |t| [v.clone(), vec![*t]].concat())).collect();
    }
    out
}

struct Piece {
    zero_x: Vec<usize>,
    atoms: Vec<Atom>,
}

/// Restriction of a basic set to the piece where exactly the x-variables in
/// `zero_x` vanish; `None` when a condition fails identically.
fn restrict(set: &BasicSet, zero_x: &[usize]) -> Result<Option<Piece>> {
    let sig = set.sig;
    let prec = set.conjuncts[0].series.precision().clone();
    let mut atoms = Vec::new();
    let positive: Vec<Atom> = (1..=sig.m)
        .filter(|i| !zero_x.contains(i))
        .map(|i| Atom { series: Series::x(sig, i, prec.clone()), relation: Relation::Gt0 })
        .collect();
    for a in set.conjuncts.iter().chain(&positive) {
        let mut s = a.series.clone();
        for &i in zero_x.iter().rev() {
            s = s.set_x_to_zero(i)?;
        }
        if s.is_zero() {
            match a.relation {
                Relation::Eq0 => continue,
                Relation::Gt0 => return Ok(None),
            }
        }
        atoms.push(Atom { series: s, relation: a.relation });
    }
    Ok(Some(Piece { zero_x: zero_x.to_vec(), atoms }))
}

/// Sub-quadrants of the leaves of a normalizing tree on every hyperplane
/// piece whose images make up the set near the origin.
pub fn parametrize(union: &[BasicSet], cfg: &Config) -> Result<Parametrization> {
    let sig = union.first().ok_or_else(|| GpsError::Invalid("empty union".into()))?.sig;
    if let Some(b) = union.iter().find(|b| b.sig != sig) {
        return Err(GpsError::SignatureMismatch(b.sig, sig));
    }
    let mut pieces = Vec::new();
    for set in union {
        for mask in 0u32..(1 << sig.m) {
            let zero_x: Vec<usize> = (1..=sig.m).filter(|i| mask & (1 << (i - 1)) != 0).collect();
            if let Some(p) = restrict(set, &zero_x)? {
                pieces.push(p);
            }
        }
    }
    let results = pieces.par_iter().map(|p| parametrize_piece(p, cfg)).collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let mut leaves = 0;
    let mut radius = 0.5f64;
    for (e, l, r) in results {
        entries.extend(e);
        leaves += l;
        radius = radius.min(r);
    }
    Ok(Parametrization { sig, entries, radius, leaves })
}

fn parametrize_piece(piece: &Piece, cfg: &Config) -> Result<(Vec<QuadrantParam>, usize, f64)> {
    let series: Vec<Series> = piece.atoms.iter().map(|a| a.series.clone()).collect();
    let rsig = series[0].sig();
    if rsig.dim() == 0 {
        let holds = piece.atoms.iter().all(|a| match a.relation {
            Relation::Eq0 => a.series.is_zero(),
            Relation::Gt0 => a.series.constant_term().is_positive(),
        });
        let entry = QuadrantParam {
            zero_x: piece.zero_x.clone(),
            chain: AdmissibleTransform::identity(rsig),
            quadrant: SubQuadrant { signs: Vec::new(), radius: 1.0 },
            forms: Vec::new(),
        };
        return Ok((if holds { vec![entry] } else { Vec::new() }, 1, 1.0));
    }
    let tree = normalize_family(&series, cfg)?;
    let mut entries = Vec::new();
    let mut radius = 1.0f64;
    let branches = tree.branches();
    for (chain, forms) in &branches {
        let r = definite_radius(forms);
        radius = radius.min(r);
        for signs in patterns(chain.target()) {
            let holds = piece.atoms.iter().zip(forms.iter()).all(|(a, f)| {
                let s = sign_on(f, &signs);
                match a.relation {
                    Relation::Eq0 => s == 0,
                    Relation::Gt0 => s > 0,
                }
            });
            if holds {
                entries.push(QuadrantParam {
                    zero_x: piece.zero_x.clone(),
                    chain: chain.clone(),
                    quadrant: SubQuadrant { signs, radius: r },
                    forms: (*forms).clone(),
                });
            }
        }
    }
    Ok((entries, branches.len(), radius))
}

/// Outcome of pushing quadrant samples forward.
#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessReport {
    pub samples: usize,
    pub false_members: usize,
    pub unknown: usize,
}

/// Images of random quadrant points, tested against the set; a point is
/// undecided when the truncation of the map could account for a failure.
pub fn forward_soundness(param: &Parametrization, union: &[BasicSet], samples: usize, seed: u64) -> SoundnessReport {
    let mut report = SoundnessReport { samples: 0, false_members: 0, unknown: 0 };
    if param.entries.is_empty() {
        return report;
    }
    let per = samples.div_ceil(param.entries.len());
    let results: Vec<(usize, usize, usize)> = param
        .entries
        .par_iter()
        .enumerate()
        .map(|(k, e)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (k as u64 + 1).wrapping_mul(0xA24B_AED4_963E_E407));
            let (mut n, mut bad, mut unknown) = (0, 0, 0);
            for _ in 0..per {
                let q = e.quadrant.sample(&mut rng);
                let Ok(p) = e.forward(param.sig, &q) else { continue };
                n += 1;
                match membership_with_slack(union, &p, e.slack(&q)) {
                    Tristate::True => {}
                    Tristate::False => bad += 1,
                    Tristate::Unknown => unknown += 1,
                }
            }
            (n, bad, unknown)
        })
        .collect();
    for (n, bad, unknown) in results {
        report.samples += n;
        report.false_members += bad;
        report.unknown += unknown;
    }
    report
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid) > 0.0) == (fa > 0.0) {
            a = mid;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

fn depends_on(s: &Series, coord: usize) -> bool {
    s.terms().any(|(e, _)| !e.coords()[coord].is_zero())
}

/// Points of the set inside the box of radius `radius` with every x-coordinate
/// positive: uniform samples, or for a basic set with an equation, roots of
/// that equation along one coordinate found by a sign-change scan and
/// bisection. Only points the oracle accepts are returned.
pub fn member_samples(union: &[BasicSet], radius: f64, samples: usize, seed: u64) -> Vec<Vec<f64>> {
    const GRID: usize = 256;
    let Some(first) = union.first() else { return Vec::new() };
    let sig = first.sig;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < samples && attempts < 20 * samples.max(1) {
        // A set without members near the origin, such as a point, yields nothing.
        if attempts >= 1000 && out.is_empty() {
            break;
        }
        let set = &union[attempts % union.len()];
        attempts += 1;
        let mut p: Vec<f64> =
            (0..sig.dim()).map(|k| if k < sig.m { rng.gen_range(0.0..radius) } else { rng.gen_range(-radius..radius) }).collect();
        let eq = set.conjuncts.iter().find(|a| a.relation == Relation::Eq0);
        let candidates = match eq {
            None => vec![p],
            Some(a) => {
                let Some(coord) = (0..sig.dim()).rev().find(|&c| depends_on(&a.series, c)) else { continue };
                let lo = if coord < sig.m { 0.0 } else { -radius };
                let value = |t: f64| {
                    let mut v = p.clone();
                    v[coord] = t;
                    a.series.evaluate_f64(&v).map(|r| r.0).unwrap_or(f64::NAN)
                };
                let mut roots = Vec::new();
                let step = (radius - lo) / GRID as f64;
                let mut prev = (lo + 0.5 * step, value(lo + 0.5 * step));
                for k in 1..GRID {
                    let t = lo + (k as f64 + 0.5) * step;
                    let v = value(t);
                    if v == 0.0 {
                        roots.push(t);
                    } else if prev.1.is_finite() && v.is_finite() && (prev.1 > 0.0) != (v > 0.0) && prev.1 != 0.0 {
                        roots.push(bisect(&value, prev.0, t));
                    }
                    prev = (t, v);
                }
                roots
                    .into_iter()
                    .map(|t| {
                        p[coord] = t;
                        p.clone()
                    })
                    .collect()
            }
        };
        for c in candidates {
            if membership_oracle(union, &c) == Tristate::True && out.len() < samples {
                out.push(c);
            }
        }
    }
    out
}

/// Covering statistics of a parametrization.
#[derive(Clone, Debug, PartialEq)]
pub struct SetCoverage {
    /// Members with a preimage snapped onto a quadrant within
    /// [`INVERSION_TOL`] whose image round-trips within the same tolerance.
    pub strict: CoverageReport,
    /// Strictly uncovered members whose exact preimage misses a quadrant by
    /// no more than the truncation slack of its map.
    pub within_slack: usize,
}

impl SetCoverage {
    pub fn fraction(&self) -> f64 {
        self.strict.fraction()
    }

    pub fn fraction_with_slack(&self) -> f64 {
        if self.strict.samples == 0 {
            return 1.0;
        }
        (self.strict.covered + self.within_slack) as f64 / self.strict.samples as f64
    }
}

enum Hit {
    Strict(usize, f64),
    Slack,
    Miss,
}

/// Covering of sampled members of the set in the box of radius `r*`.
pub fn covering(param: &Parametrization, union: &[BasicSet], samples: usize, seed: u64) -> SetCoverage {
    let members = member_samples(union, param.radius, samples, seed);
    let hits: Vec<Hit> = members
        .par_iter()
        .map(|p| {
            let scale = p.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            let roundtrip = |e: &QuadrantParam, q: &[f64]| {
                e.forward(param.sig, q).ok().map(|back| back.iter().zip(p).fold(0.0f64, |a, (s, t)| a.max((s - t).abs())))
            };
            let mut slack_hit = false;
            for (k, e) in param.entries.iter().enumerate() {
                for q in e.raw_preimages(p) {
                    if let Some(snapped) = e.quadrant.project(&q, INVERSION_TOL) {
                        if let Some(err) = roundtrip(e, &snapped).filter(|err| *err <= INVERSION_TOL * scale) {
                            return Hit::Strict(k, err);
                        }
                    }
                    let exact = roundtrip(e, &q).is_some_and(|err| err <= INVERSION_TOL * scale);
                    slack_hit |= exact && e.quadrant.project(&q, INVERSION_TOL + e.slack(&q)).is_some();
                }
            }
            if slack_hit {
                Hit::Slack
            } else {
                Hit::Miss
            }
        })
        .collect();
    let mut strict = CoverageReport {
        samples: members.len(),
        covered: 0,
        uncovered: Vec::new(),
        witnesses: vec![0; param.entries.len()],
        max_roundtrip: 0.0,
    };
    let mut within_slack = 0;
    for (p, h) in members.into_iter().zip(hits) {
        match h {
            Hit::Strict(k, err) => {
                strict.covered += 1;
                strict.witnesses[k] += 1;
                strict.max_roundtrip = strict.max_roundtrip.max(err);
            }
            Hit::Slack => {
                within_slack += 1;
                strict.uncovered.push(p);
            }
            Hit::Miss => strict.uncovered.push(p),
        }
    }
    SetCoverage { strict, within_slack }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_basic_set;
    use crate::series::q;

    fn set(text: &str, m: usize, n: usize) -> Vec<BasicSet> {
        parse_basic_set(text, Signature::new(m, n), &q(8)).unwrap().union
    }

    #[test]
    fn half_diagonal_is_one_curve() {
        let a = set("y1^2 - x1^2 = 0 & x1 > 0 & y1 > 0", 1, 1);
        let p = parametrize(&a, &Config::default()).unwrap();
        assert_eq!(p.entries.len(), 1, "{}", p.render_text());
        assert_eq!(p.entries[0].quadrant.dimension(), 1);
        let s = forward_soundness(&p, &a, 2000, 1);
        assert_eq!(s.false_members, 0);
        let c = covering(&p, &a, 500, 2);
        assert_eq!(c.strict.samples, 500);
        assert_eq!(c.strict.covered, 500);
    }

    #[test]
    fn empty_and_full_sets() {
        let p = parametrize(&set("1 + y1^2 = 0", 1, 1), &Config::default()).unwrap();
        assert!(p.entries.is_empty());
        let p = parametrize(&set("x1 > 0", 1, 1), &Config::default()).unwrap();
        assert!(p.entries.iter().any(|e| e.quadrant.dimension() == 2));
        assert!(p.entries.iter().all(|e| e.zero_x.is_empty()));
    }

    #[test]
    fn oracle_is_three_valued() {
        let a = set("y1 - x1 = 0", 1, 1);
        assert_eq!(membership_oracle(&a, &[0.1, 0.1]), Tristate::True);
        assert_eq!(membership_oracle(&a, &[0.1, 0.2]), Tristate::False);
        let b = set("y1 > 0", 1, 1);
        assert_eq!(membership_oracle(&b, &[0.1, 0.0]), Tristate::Unknown);
    }
}
