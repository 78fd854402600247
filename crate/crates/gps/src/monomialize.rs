//! The normalization engine: admissible trees whose leaves pull the inputs
//! back to monomials times units.
//!
//! Each node recomputes the state of its series from scratch and emits one
//! action, a small tree of elementary transforms; the leaves of that action
//! are processed the same way. Actions, in order of precedence:
//!
//! 1. principalize the x-support of a non-normal series (x-blow-ups);
//! 2. make the lowest form regular in the last y-variable (`L_{n,c}`);
//! 3. order one: translate onto the implicit root;
//! 4. order `d > 1`: centre, normalize and order the coefficients of
//!    `Y_n^{d−i}` with weights `i`, then blow `Y_n` up against the leading
//!    variable of the minimal weighted exponent.
//!
//! Several inputs are normalized through their product, then arranged into a
//! division chain by blow-ups on incomparable pairs.
//!
//! Inputs carry a tail bound finer than one precision: a tail that a blow-up
//! made divisible by a monomial is not charged again by later charts. Leaf
//! certificates recompute the pullbacks with the same bound
//! ([`tracked_pullback`]).

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::Config;
use crate::division::{solve_implicit, tschirnhausen_center};
use crate::error::{GpsError, Result};
use crate::series::{MultiExponent, Regularity, Series, Signature, Q};
use crate::transforms::{pullback, AdmissibleTransform, ElementaryTransform, TransformKind};
use crate::trees::{ramify_y_pair, xx_family, yx_family, yy_family, AdmissibleTree, Tree};
use crate::tail::Tracked;

/// `f = X^α Y^β · unit`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalForm {
    pub monomial: MultiExponent,
    pub unit: Series,
}

impl NormalForm {
    pub fn to_series(&self) -> Series {
        self.unit.mul_monomial(&self.monomial, &Q::one())
    }
}

/// Normal form when the support has a single minimal element.
pub fn is_normal(f: &Series) -> Option<NormalForm> {
    let mins = f.min_support();
    if mins.len() != 1 {
        return None;
    }
    let unit = f.div_monomial(&mins[0])?;
    Some(NormalForm { monomial: mins[0].clone(), unit })
}

fn dominated(a: &[Q], b: &[Q]) -> bool {
    a.iter().zip(b).all(|(s, t)| s <= t)
}

/// Indices sorted so that each monomial divides the next, or `None` when two
/// of them are incomparable.
pub fn division_chain(monomials: &[MultiExponent]) -> Option<Vec<usize>> {
    let coords: Vec<Vec<Q>> = monomials.iter().map(|e| e.coords()).collect();
    weighted_chain(&coords)
}

fn weighted_chain(coords: &[Vec<Q>]) -> Option<Vec<usize>> {
    let mut idx: Vec<usize> = (0..coords.len()).collect();
    let total = |k: usize| coords[k].iter().sum::<Q>();
    idx.sort_by(|&a, &b| total(a).cmp(&total(b)));
    idx.windows(2).all(|w| dominated(&coords[w[0]], &coords[w[1]])).then_some(idx)
}

/// One decision of the order-reduction step: the regularity order and the
/// minimal weighted coefficient exponent it acted on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AuditEntry {
    pub order: u32,
    pub weight: Vec<Q>,
}

impl AuditEntry {
    /// Whether `next`, recorded later on the same branch, is smaller: either
    /// the order dropped, or it stayed and the weight decreased
    /// componentwise.
    pub fn precedes(&self, next: &AuditEntry) -> bool {
        next.order < self.order
            || (next.order == self.order
                && next.weight.len() == self.weight.len()
                && dominated(&next.weight, &self.weight)
                && next.weight != self.weight)
    }

    fn to_json(&self) -> Value {
        json!({"order": self.order, "weight": self.weight.iter().map(|w| w.to_string()).collect::<Vec<_>>()})
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Leaves are normal and form a weighted division chain.
    Ordered,
    /// Leaves are normal.
    NormalOnly,
}

/// Series carried through a run. Targets must become normal; passengers are
/// pulled back alongside so every chart sees all exponent denominators.
#[derive(Clone, Debug)]
struct RunState {
    targets: Vec<Series>,
    weights: Vec<Q>,
    passengers: Vec<Series>,
    /// Coefficient sub-run: targets that vanish to precision are dropped.
    sub: bool,
    /// Targets then passengers with their tail bounds; the series above are
    /// their views.
    tails: Vec<Tracked>,
}

impl RunState {
    fn new(targets: Vec<Series>, weights: Vec<Q>, passengers: Vec<Series>, sub: bool) -> RunState {
        let tails = targets.iter().chain(&passengers).map(Tracked::plain).collect();
        RunState { targets, weights, passengers, sub, tails }
    }

    fn pullback(&self, e: &ElementaryTransform) -> Result<RunState> {
        let mut tails = self.tails.iter().map(|t| t.pullback(e)).collect::<Result<Vec<_>>>()?;
        let mut weights = self.weights.clone();
        let k = self.targets.len();
        let vanished: Vec<bool> = tails[..k].iter().map(|t| t.view().is_zero()).collect();
        if self.sub && vanished.contains(&false) {
            let mut it = vanished.iter().chain(std::iter::repeat(&false));
            tails.retain(|_| !*it.next().expect("endless"));
            let mut it = vanished.iter();
            weights.retain(|_| !*it.next().expect("one flag per weight"));
        }
        let views: Vec<Series> = tails.iter().map(Tracked::view).collect();
        let passengers = views[weights.len()..].to_vec();
        let targets = views[..weights.len()].to_vec();
        Ok(RunState { targets, weights, passengers, sub: self.sub, tails })
    }
}

struct Action {
    tree: Tree<()>,
    audit: Option<AuditEntry>,
    principal: bool,
    /// Tried when the subtree of `tree` exhausts precision.
    fallback: Option<Box<Action>>,
}

impl Action {
    fn new(tree: Tree<()>) -> Self {
        Action { tree, audit: None, principal: false, fallback: None }
    }

    fn single(e: ElementaryTransform) -> Self {
        Action::new(Tree::behind(e, Tree::Leaf(())))
    }
}

fn family_node(family: Vec<ElementaryTransform>) -> Tree<()> {
    Tree::Node(family.into_iter().map(|t| (t, Tree::Leaf(()))).collect())
}

fn chain_then(prefix: Vec<ElementaryTransform>, tail: Tree<()>) -> Tree<()> {
    prefix.into_iter().rev().fold(tail, |t, e| Tree::behind(e, t))
}

/// State of a leaf after the run.
#[derive(Clone, Debug)]
pub(crate) struct EngineLeaf {
    pub targets: Vec<Series>,
    pub audit: Vec<AuditEntry>,
}

#[derive(Clone, Copy)]
struct Budget {
    depth: usize,
    princ: usize,
}

struct Engine<'a> {
    cfg: &'a Config,
}

fn x_parts(series: &[Series]) -> BTreeSet<Vec<Q>> {
    series.iter().flat_map(|s| s.terms().map(|(e, _)| e.x().to_vec())).collect()
}

fn minimal_vectors(set: &BTreeSet<Vec<Q>>) -> Vec<Vec<Q>> {
    let mut all: Vec<&Vec<Q>> = set.iter().collect();
    all.sort_by(|a, b| a.iter().sum::<Q>().cmp(&b.iter().sum::<Q>()).then_with(|| b.cmp(a)));
    let mut mins: Vec<Vec<Q>> = Vec::new();
    for v in all {
        if !mins.iter().any(|m| dominated(m, v)) {
            mins.push(v.clone());
        }
    }
    mins
}

/// Least common multiple of the denominators of the `x_i` exponents.
fn x_denominator_lcm(series: &[&Series], i: usize, scale: &Q) -> BigInt {
    let mut l = BigInt::one();
    for s in series {
        for (e, _) in s.terms() {
            l = l.lcm((&e.x()[i - 1] * scale).denom());
        }
    }
    l
}

fn ramify_x(sig: Signature, i: usize, gamma: Q) -> Result<ElementaryTransform> {
    ElementaryTransform::new(TransformKind::RamifyX { i, gamma }, sig)
}

fn q_int(v: BigInt) -> Q {
    Q::from_integer(v)
}

/// Nonzero rational roots of `Σ c_k t^k`.
pub fn rational_roots(coeffs: &[Q]) -> Vec<Q> {
    let mut c: Vec<Q> = coeffs.to_vec();
    while c.last().is_some_and(|v| v.is_zero()) {
        c.pop();
    }
    let lead = c.iter().position(|v| !v.is_zero());
    let Some(low) = lead else { return Vec::new() };
    let c = &c[low..];
    if c.len() < 2 {
        return Vec::new();
    }
    let den = c.iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<BigInt> = c.iter().map(|v| (v * q_int(den.clone())).to_integer()).collect();
    let (Some(p), Some(qd)) = (small_divisors(&ints[0]), small_divisors(ints.last().expect("nonempty"))) else {
        return Vec::new();
    };
    let mut roots = BTreeSet::new();
    for a in &p {
        for b in &qd {
            for s in [1i64, -1] {
                let r = Q::new(BigInt::from(*a) * s, BigInt::from(*b));
                let v = c.iter().rev().fold(Q::zero(), |acc, k| acc * &r + k);
                if v.is_zero() {
                    roots.insert(r);
                }
            }
        }
    }
    roots.into_iter().collect()
}

fn small_divisors(n: &BigInt) -> Option<Vec<u64>> {
    let n = n.abs().to_u64().filter(|&v| v > 0 && v <= 1_000_000_000_000)?;
    let mut out = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            if d * d != n {
                out.push(n / d);
            }
        }
        d += 1;
    }
    Some(out)
}

/// Integer vectors of max-norm exactly `r`, lexicographically.
fn shell(len: usize, r: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|v| (-r..=r).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    out.retain(|v| v.iter().map(|c| c.abs()).max().unwrap_or(0) == r);
    out
}

const LINEAR_SEARCH_RADIUS: i64 = 8;

impl<'a> Engine<'a> {
    fn drive(&self, state: RunState, mode: Mode, budget: Budget) -> Result<Tree<EngineLeaf>> {
        let Some(mut action) = self.multi_action(&state, mode, budget)? else {
            return Ok(Tree::Leaf(EngineLeaf { targets: state.targets, audit: Vec::new() }));
        };
        loop {
            let fallback = action.fallback.take();
            match (self.apply(action, &state, mode, budget), fallback) {
                (Err(GpsError::PrecisionExhausted(_)), Some(next)) => action = *next,
                (result, _) => return result,
            }
        }
    }

    fn apply(&self, action: Action, state: &RunState, mode: Mode, budget: Budget) -> Result<Tree<EngineLeaf>> {
        let princ = budget.princ + usize::from(action.principal);
        if princ > self.cfg.princ_cap {
            return Err(GpsError::CapExceeded(format!("more than {} principalization steps on one branch", self.cfg.princ_cap)));
        }
        let tree = self.descend(&action.tree, state.clone(), mode, Budget { depth: budget.depth, princ })?;
        Ok(match action.audit {
            Some(entry) => tree.map(&mut |mut leaf: EngineLeaf| {
                leaf.audit.insert(0, entry.clone());
                leaf
            }),
            None => tree,
        })
    }

    fn descend(&self, node: &Tree<()>, state: RunState, mode: Mode, budget: Budget) -> Result<Tree<EngineLeaf>> {
        match node {
            Tree::Leaf(()) => self.drive(state, mode, budget),
            Tree::Node(edges) => {
                if budget.depth + 1 > self.cfg.depth_cap {
                    return Err(GpsError::CapExceeded(format!("branch longer than {} steps", self.cfg.depth_cap)));
                }
                let next = Budget { depth: budget.depth + 1, ..budget };
                let children = edges
                    .par_iter()
                    .map(|(e, child)| Ok((e.clone(), self.descend(child, state.pullback(e)?, mode, next)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Tree::Node(children))
            }
        }
    }

    fn multi_action(&self, state: &RunState, mode: Mode, budget: Budget) -> Result<Option<Action>> {
        if let Some(k) = state.targets.iter().position(|t| t.is_zero()) {
            return Err(GpsError::PrecisionExhausted(if state.sub {
                "every coefficient of a sub-run vanished to its precision".to_string()
            } else {
                format!("pulled-back input {} vanished to its precision {}", k + 1, state.targets[k].precision())
            }));
        }
        let open: Vec<&Series> = state.targets.iter().filter(|t| is_normal(t).is_none()).collect();
        if !open.is_empty() {
            // A normal product of non-normal factors only happens through
            // truncation; fall back to a single factor then.
            let product_of = |factors: &[&Series]| -> Result<Series> {
                let p = factors[1..].iter().try_fold(factors[0].clone(), |acc, s| acc.mul(s))?;
                Ok(if is_normal(&p).is_none() && !p.is_zero() { p } else { open[0].clone() })
            };
            let context: Vec<&Series> = state.targets.iter().chain(&state.passengers).collect();
            let action = self.single_action(&product_of(&open)?, &context, budget)?;
            // Normal targets join the product when the step would undo their normality.
            if open.len() < state.targets.len() && self.breaks_normality(&action, state)? {
                let all: Vec<&Series> = state.targets.iter().collect();
                return self.single_action(&product_of(&all)?, &context, budget).map(Some);
            }
            return Ok(Some(action));
        }
        if mode == Mode::Ordered {
            return self.ordering_action(state);
        }
        Ok(None)
    }

    fn breaks_normality(&self, action: &Action, state: &RunState) -> Result<bool> {
        let Tree::Node(edges) = &action.tree else { return Ok(false) };
        let [(e, Tree::Leaf(()))] = edges.as_slice() else { return Ok(false) };
        if !matches!(e.kind(), TransformKind::Tschirnhausen { .. } | TransformKind::Linear { .. }) {
            return Ok(false);
        }
        for t in state.targets.iter().filter(|t| is_normal(t).is_some()) {
            if is_normal(&pullback(e, t)?).is_none() {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Blow-up family separating the first two minimal x-parts of `targets`,
    /// after equalizing the exponent gap and clearing denominators.
    fn principalize_action(&self, targets: &[&Series], context: &[&Series]) -> Result<Option<Action>> {
        let sig = targets[0].sig();
        let owned: Vec<Series> = targets.iter().map(|s| (*s).clone()).collect();
        let mins = minimal_vectors(&x_parts(&owned));
        if mins.len() < 2 {
            return Ok(None);
        }
        let diff: Vec<Q> = mins[0].iter().zip(&mins[1]).map(|(a, b)| a - b).collect();
        let all: Vec<&Series> = targets.iter().copied().chain(context.iter().copied()).collect();
        let tree = self.balanced_xx(sig, &diff, &all)?;
        Ok(Some(Action { tree, audit: None, principal: true, fallback: None }))
    }

    /// `π_{hi,lo}` behind ramifications that equalize the two gaps of the
    /// incomparable exponent difference `diff` and clear the denominators
    /// of `x_hi`, so that each chart makes the pair comparable.
    fn balanced_xx(&self, sig: Signature, diff: &[Q], all: &[&Series]) -> Result<Tree<()>> {
        let i = diff.iter().position(|d| d.is_positive()).expect("incomparable") + 1;
        let j = diff.iter().position(|d| d.is_negative()).expect("incomparable") + 1;
        let (a, b) = (diff[i - 1].clone(), -diff[j - 1].clone());
        let mut prefix = Vec::new();
        let mut scale_i = Q::one();
        let mut scale_j = Q::one();
        if a < b {
            scale_i = &b / &a;
            prefix.push(ramify_x(sig, i, scale_i.clone())?);
        } else if b < a {
            scale_j = &a / &b;
            prefix.push(ramify_x(sig, j, scale_j.clone())?);
        }
        let (hi, lo) = (i.max(j), i.min(j));
        let scale_hi = if hi == i { scale_i } else { scale_j };
        let l = x_denominator_lcm(all, hi, &scale_hi);
        if !l.is_one() {
            prefix.push(ramify_x(sig, hi, q_int(l.clone()))?);
            prefix.push(ramify_x(sig, lo, q_int(l))?);
        }
        Ok(chain_then(prefix, family_node(xx_family(sig, hi, lo, &self.cfg.palette)?)))
    }

    fn single_action(&self, g: &Series, context: &[&Series], budget: Budget) -> Result<Action> {
        if let Some(a) = self.principalize_action(&[g], context)? {
            return Ok(a);
        }
        let sig = g.sig();
        let mins = minimal_vectors(&x_parts(std::slice::from_ref(g)));
        let alpha = MultiExponent::new(mins[0].clone(), vec![0; sig.n])?;
        let big_g = g
            .div_monomial(&alpha)
            .ok_or_else(|| GpsError::PrecisionExhausted(format!("no precision left after factoring {alpha}")))?;
        let n = sig.n;
        if n == 0 {
            return Err(GpsError::Invalid("internal: principal series without y-variables is normal".into()));
        }
        let at_zero = big_g.at_x_zero();
        let low = at_zero.ord().expect("principal cofactor is nonzero at X = 0");
        let lowest = Series::from_terms(
            at_zero.sig(),
            at_zero.terms().filter(|(e, _)| *e.degree() == low).map(|(e, c)| (e.clone(), c.clone())),
            at_zero.precision().clone(),
        )?;
        let probe = |c: &[i64]| -> Result<bool> {
            let mut p: Vec<Q> = c.iter().map(|&v| Q::from_integer(v.into())).collect();
            p.push(Q::one());
            Ok(!lowest.evaluate(&p)?.exact.expect("integral exponents").is_zero())
        };
        if !probe(&vec![0; n - 1])? {
            for r in 1..=LINEAR_SEARCH_RADIUS {
                for c in shell(n - 1, r) {
                    if probe(&c)? {
                        let c = c.into_iter().map(|v| Q::from_integer(v.into())).collect();
                        return Ok(Action::single(ElementaryTransform::new(TransformKind::Linear { i: n, c }, sig)?));
                    }
                }
            }
            return Err(GpsError::CapExceeded(format!(
                "no linear change of max-norm ≤ {LINEAR_SEARCH_RADIUS} makes the series regular in y{n}"
            )));
        }
        let d = match big_g.order_in_y(n) {
            Regularity::Order(d) if d >= 1 => d,
            _ => return Err(GpsError::NotRegular(n)),
        };
        if d == 1 {
            let h = solve_implicit(&big_g, n)?;
            return Ok(Action::single(ElementaryTransform::new(TransformKind::Tschirnhausen { i: n, h }, sig)?));
        }
        let centre = tschirnhausen_center(&big_g, n, d)?;
        if !centre.is_zero() {
            return Ok(Action::single(ElementaryTransform::new(TransformKind::Tschirnhausen { i: n, h: centre }, sig)?));
        }
        let mut coeffs = Vec::new();
        let mut weights = Vec::new();
        for i in 2..=d {
            let c = big_g.y_coefficient(n, d - i)?;
            if !c.is_zero() {
                coeffs.push(c);
                weights.push(Q::from_integer(i.into()));
            }
        }
        if coeffs.is_empty() {
            return Err(GpsError::PrecisionExhausted(format!("order-{d} series without lower coefficients is not normal")));
        }
        let mut passengers = Vec::new();
        for s in std::iter::once(g).chain(context.iter().copied()) {
            if s.sig() == sig {
                passengers.extend(s.y_coefficients(n)?.into_values());
            }
        }
        let sub = self.drive(RunState::new(coeffs.clone(), weights.clone(), passengers, true), Mode::Ordered, budget)?;
        if sub.height() > 0 {
            return Ok(Action::new(sub.map(&mut |_| ()).lift(1)));
        }
        self.chart_action(&big_g, d, &coeffs, &weights, true)
    }

    /// Blow-up of `Y_n` against the leading variable of the minimal weighted
    /// coefficient exponent, ramified so that every term acquires the
    /// factor `v^d`. An x-weight above one divides the precision by that
    /// weight when ramified; the unramified family, whose zero chart lowers
    /// the weight by one at no precision cost, is then kept as a fallback.
    fn chart_action(&self, g: &Series, d: u32, coeffs: &[Series], weights: &[Q], ramify: bool) -> Result<Action> {
        let sig = g.sig();
        let (m, n) = (sig.m, sig.n);
        let scaled: Vec<Vec<Q>> = coeffs
            .iter()
            .zip(weights)
            .map(|(c, w)| is_normal(c).expect("normal coefficients").monomial.coords().into_iter().map(|a| a / w).collect())
            .collect();
        let order = weighted_chain(&scaled).expect("ordered coefficients");
        let first = &scaled[order[0]];
        let l = (0..scaled.len()).filter(|&k| scaled[k] == *first).map(|k| k).last().expect("nonempty");
        let w = scaled[l].clone();
        let k = w.iter().position(|a| a.is_positive()).ok_or_else(|| {
            GpsError::Invalid("internal: order-d series with a unit coefficient".into())
        })?;
        let mut ramifications: Vec<Option<ElementaryTransform>> = Vec::new();
        if k < m {
            let gamma = w[k].clone();
            ramifications.push(if gamma.is_one() || !ramify { None } else { Some(ramify_x(sig, k + 1, gamma.recip())?) });
        } else if w[k] < Q::one() {
            let r = w[k].recip().ceil().to_integer().to_u32().ok_or_else(|| GpsError::Invalid("ramification too large".into()))?;
            ramifications.extend(ramify_y_pair(sig, k - m + 1, r)?.into_iter().map(Some));
        } else {
            ramifications.push(None);
        }
        let fallback = if ramify && k < m && w[k] > Q::one() {
            Some(Box::new(self.chart_action(g, d, coeffs, weights, false)?))
        } else {
            None
        };
        let audit = Some(AuditEntry { order: d, weight: w.clone() });
        let mut edges = Vec::new();
        for r in ramifications {
            let g2 = match &r {
                Some(t) => pullback(t, g)?,
                None => g.clone(),
            };
            let s2 = g2.sig();
            let var_power = |i: u32| -> MultiExponent {
                let mut c = vec![Q::zero(); s2.m];
                let mut y = vec![0u32; s2.n];
                if k < m {
                    c[k] = Q::from_integer(i.into());
                } else {
                    y[k - m] = i;
                }
                y[n - 1] = d - i;
                MultiExponent::new(c, y).expect("nonnegative")
            };
            let mut poly = vec![Q::zero(); d as usize + 1];
            poly[d as usize] = g2.coeff(&var_power(0));
            for i in 2..=d {
                poly[(d - i) as usize] = g2.coeff(&var_power(i));
            }
            let roots = rational_roots(&poly);
            let palette = self.cfg.palette.with(roots.iter().map(|r| r.abs()));
            let family = if k < m { yx_family(s2, n, k + 1, &palette)? } else { yy_family(s2, n, k - m + 1, &palette)? };
            let node = family_node(family);
            edges.push(match r {
                Some(t) => (t, node),
                None => return Ok(Action { tree: node, audit, principal: false, fallback }),
            });
        }
        Ok(Action { tree: Tree::Node(edges), audit, principal: false, fallback })
    }

    /// Blow-up on the first incomparable pair of weighted monomials.
    fn ordering_action(&self, state: &RunState) -> Result<Option<Action>> {
        let sig = state.targets[0].sig();
        let m = sig.m;
        let scaled: Vec<Vec<Q>> = state
            .targets
            .iter()
            .zip(&state.weights)
            .map(|(t, w)| is_normal(t).expect("normal").monomial.coords().into_iter().map(|a| a / w).collect())
            .collect();
        if weighted_chain(&scaled).is_some() {
            return Ok(None);
        }
        let mut pair = None;
        'outer: for a in 0..scaled.len() {
            for b in a + 1..scaled.len() {
                if !dominated(&scaled[a], &scaled[b]) && !dominated(&scaled[b], &scaled[a]) {
                    pair = Some((a, b));
                    break 'outer;
                }
            }
        }
        let (a, b) = pair.expect("a broken chain has an incomparable pair");
        let diff: Vec<Q> = scaled[a].iter().zip(&scaled[b]).map(|(s, t)| s - t).collect();
        let p = diff.iter().position(|v| v.is_positive()).expect("incomparable");
        let q = diff.iter().position(|v| v.is_negative()).expect("incomparable");
        let palette = &self.cfg.palette;
        let tree = match (p < m, q < m) {
            (true, true) => {
                // Restrict the difference to the chosen pair of x-variables.
                let pair: Vec<Q> = (0..m).map(|k| if k == p || k == q { diff[k].clone() } else { Q::zero() }).collect();
                let all: Vec<&Series> = state.targets.iter().chain(&state.passengers).collect();
                self.balanced_xx(sig, &pair, &all)?
            }
            (false, true) | (true, false) => {
                let (x, y) = if p < m { (p, q) } else { (q, p) };
                // Equal gaps make every chart of the blow-up comparable; the
                // x-gap can only be widened without losing precision.
                let (gx, gy) = (diff[x].abs(), diff[y].abs());
                let family = family_node(yx_family(sig, y - m + 1, x + 1, palette)?);
                if gx < gy {
                    chain_then(vec![ramify_x(sig, x + 1, gy / gx)?], family)
                } else {
                    family
                }
            }
            (false, false) => {
                let (hi, lo) = (p.max(q) - m + 1, p.min(q) - m + 1);
                family_node(yy_family(sig, hi, lo, palette)?)
            }
        };
        Ok(Some(Action::new(tree)))
    }
}

fn check_inputs(fs: &[Series]) -> Result<Signature> {
    let first = fs.first().ok_or_else(|| GpsError::Invalid("at least one series required".into()))?;
    let sig = first.sig();
    for f in fs {
        if f.sig() != sig {
            return Err(GpsError::SignatureMismatch(f.sig(), sig));
        }
        if f.is_zero() {
            return Err(GpsError::Invalid("nonzero series required".into()));
        }
    }
    Ok(sig)
}

/// Precision to which an input's stored terms are carried: its terms are
/// exact, so only the cost of the pullbacks bounds it.
fn tail_cap(f: &Series) -> Q {
    f.precision() * Q::from_integer(3.into())
}

/// `f ∘ ρ` with the tail bound of [`Tracked`], as the engine computes it.
pub fn tracked_pullback(rho: &AdmissibleTransform, f: &Series) -> Result<Series> {
    let mut t = Tracked::input(f, tail_cap(f));
    for e in rho.steps() {
        t = t.pullback(e)?;
    }
    Ok(t.view())
}

pub(crate) fn run(fs: &[Series], mode: Mode, cfg: &Config) -> Result<AdmissibleTree<EngineLeaf>> {
    let sig = check_inputs(fs)?;
    let tails = fs.iter().map(|f| Tracked::input(f, tail_cap(f))).collect();
    let state = RunState { targets: fs.to_vec(), weights: vec![Q::one(); fs.len()], passengers: Vec::new(), sub: false, tails };
    let root = Engine { cfg }.drive(state, mode, Budget { depth: 0, princ: 0 })?;
    Ok(AdmissibleTree { source: sig, root })
}

/// Tree over which every input is normal, without ordering the monomials.
pub fn normalize_family(fs: &[Series], cfg: &Config) -> Result<AdmissibleTree<Vec<NormalForm>>> {
    let t = run(fs, Mode::NormalOnly, cfg)?;
    let root = t.root.map(&mut |leaf: EngineLeaf| {
        leaf.targets.iter().map(|s| is_normal(s).expect("engine leaves are normal")).collect()
    });
    Ok(AdmissibleTree { source: t.source, root })
}

/// Leaf of a principalization tree: `f_k ∘ ρ = X^α · cofactor_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrincipalLeaf {
    pub alpha: Vec<Q>,
    pub cofactors: Vec<Series>,
}

/// Tree over which a common x-monomial factors out of every input with at
/// least one cofactor nonzero at `X = 0`.
pub fn principalize_x(fs: &[Series], cfg: &Config) -> Result<AdmissibleTree<PrincipalLeaf>> {
    let sig = check_inputs(fs)?;
    fn go(e: &Engine, fs: Vec<Series>, depth: usize, princ: usize) -> Result<Tree<PrincipalLeaf>> {
        let refs: Vec<&Series> = fs.iter().collect();
        match e.principalize_action(&refs, &[])? {
            None => {
                let mins = minimal_vectors(&x_parts(&fs));
                let sig = fs[0].sig();
                let alpha = MultiExponent::new(mins[0].clone(), vec![0; sig.n])?;
                let cofactors = fs
                    .iter()
                    .map(|f| f.div_monomial(&alpha).ok_or_else(|| GpsError::PrecisionExhausted(format!("factor {alpha}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Tree::Leaf(PrincipalLeaf { alpha: mins[0].clone(), cofactors }))
            }
            Some(a) => {
                if princ + 1 > e.cfg.princ_cap {
                    return Err(GpsError::CapExceeded(format!("more than {} principalization steps", e.cfg.princ_cap)));
                }
                walk(e, &a.tree, fs, depth, princ + 1)
            }
        }
    }
    fn walk(e: &Engine, node: &Tree<()>, fs: Vec<Series>, depth: usize, princ: usize) -> Result<Tree<PrincipalLeaf>> {
        match node {
            Tree::Leaf(()) => go(e, fs, depth, princ),
            Tree::Node(edges) => {
                if depth + 1 > e.cfg.depth_cap {
                    return Err(GpsError::CapExceeded(format!("branch longer than {} steps", e.cfg.depth_cap)));
                }
                let children = edges
                    .par_iter()
                    .map(|(t, child)| {
                        let next = fs.iter().map(|f| pullback(t, f)).collect::<Result<Vec<_>>>()?;
                        Ok((t.clone(), walk(e, child, next, depth + 1, princ)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Tree::Node(children))
            }
        }
    }
    let root = go(&Engine { cfg }, fs.to_vec(), 0, 0)?;
    Ok(AdmissibleTree { source: sig, root })
}

/// Outcome of comparing `f ∘ ρ` with its normal form at sampled points.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleStats {
    pub samples: usize,
    pub max_residual: f64,
    /// Largest ratio of residual to its allowed bound.
    pub max_ratio: f64,
    pub pass: bool,
}

/// Certified data of one leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafReport {
    pub forms: Vec<NormalForm>,
    /// Input indices in division-chain order.
    pub chain_order: Option<Vec<usize>>,
    pub audit: Vec<AuditEntry>,
    /// The pullback recomputed from the inputs agrees with the engine state.
    pub exact_agrees: bool,
    /// Normality of the product agrees with normality of every factor.
    pub product_agrees: bool,
    pub oracle: OracleStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MonomialisationReport {
    pub inputs: Vec<Series>,
    pub tree: AdmissibleTree<LeafReport>,
}

fn sample_point(rng: &mut ChaCha8Rng, sig: Signature, r: f64) -> Vec<f64> {
    (0..sig.dim()).map(|k| if k < sig.m { rng.gen_range(0.0..r) } else { rng.gen_range(-r..r) }).collect()
}

fn leaf_seed(seed: u64, leaf: usize) -> u64 {
    seed ^ (leaf as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Float-evaluation allowance for a series at a point.
pub(crate) fn float_allowance(s: &Series, p: &[f64]) -> f64 {
    let norm = p.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let deg = s.max_degree().to_f64().unwrap_or(0.0);
    1e-10 * (1.0 + s.coefficient_mass() * norm.powf(deg.max(0.0)))
}

/// Tail of `h` at `q` measured with the coefficient mass of `f`.
fn mass_tail(f: &Series, h: &Series, q: &[f64]) -> f64 {
    let norm = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if norm == 0.0 {
        return 0.0;
    }
    f.coefficient_mass() * norm.powf(h.precision().to_f64().unwrap_or(f64::INFINITY))
}

fn run_oracle(fs: &[Series], chain: &AdmissibleTransform, forms: &[NormalForm], cfg: &Config, leaf: usize) -> OracleStats {
    let mut rng = ChaCha8Rng::seed_from_u64(leaf_seed(cfg.seed, leaf));
    let normal: Vec<Series> = forms.iter().map(NormalForm::to_series).collect();
    let mut stats = OracleStats { samples: 0, max_residual: 0.0, max_ratio: 0.0, pass: true };
    let mut attempts = 0;
    while stats.samples < cfg.oracle_samples && attempts < 4 * cfg.oracle_samples.max(1) {
        attempts += 1;
        let q = sample_point(&mut rng, chain.target(), cfg.oracle_radius);
        let Ok(p) = chain.forward_point(&q) else { continue };
        let mut values = Vec::with_capacity(fs.len());
        for (f, h) in fs.iter().zip(&normal) {
            match (f.evaluate_f64(&p), h.evaluate_f64(&q)) {
                (Ok((v1, t1)), Ok((v2, t2))) => {
                    // Terms pushed past the leaf precision keep the input's coefficients.
                    let t2 = t2.max(mass_tail(f, h, &q));
                    values.push(((v1 - v2).abs(), t1 + t2 + float_allowance(f, &p) + float_allowance(h, &q)))
                }
                _ => break,
            }
        }
        if values.len() < fs.len() {
            continue;
        }
        stats.samples += 1;
        for (res, bound) in values {
            stats.max_residual = stats.max_residual.max(res);
            stats.max_ratio = stats.max_ratio.max(res / bound);
            if !(res <= bound) {
                stats.pass = false;
            }
        }
    }
    if stats.samples == 0 {
        stats.pass = false;
    }
    stats
}

/// Normalizes `fs` and arranges their monomials into a division chain at
/// every leaf, then certifies each leaf against the inputs.
pub fn monomialize(fs: &[Series], cfg: &Config) -> Result<MonomialisationReport> {
    let tree = run(fs, Mode::Ordered, cfg)?;
    let branches: Vec<(AdmissibleTransform, &EngineLeaf)> = tree.branches();
    let reports = branches
        .par_iter()
        .enumerate()
        .map(|(idx, (chain, leaf))| certify(fs, chain, leaf, cfg, idx))
        .collect::<Result<Vec<_>>>()?;
    let mut it = reports.into_iter();
    let root = tree.root.map(&mut |_| it.next().expect("one report per leaf"));
    Ok(MonomialisationReport { inputs: fs.to_vec(), tree: AdmissibleTree { source: tree.source, root } })
}

fn certify(fs: &[Series], chain: &AdmissibleTransform, leaf: &EngineLeaf, cfg: &Config, idx: usize) -> Result<LeafReport> {
    let mut forms = Vec::new();
    let mut exact_agrees = true;
    for (f, state) in fs.iter().zip(&leaf.targets) {
        let h = tracked_pullback(chain, f)?;
        exact_agrees &= h.eq_mod_precision(state);
        let form = is_normal(&h).ok_or_else(|| GpsError::PrecisionExhausted(format!("recomputed pullback {h} is not normal")))?;
        exact_agrees &= form.to_series().eq_mod_precision(&h);
        forms.push(form);
    }
    let mut product = leaf.targets[0].clone();
    for s in &leaf.targets[1..] {
        product = product.mul(s)?;
    }
    let product_agrees = is_normal(&product).is_some();
    let monomials: Vec<MultiExponent> = forms.iter().map(|f| f.monomial.clone()).collect();
    let chain_order = division_chain(&monomials);
    let oracle = run_oracle(fs, chain, &forms, cfg, idx);
    Ok(LeafReport { forms, chain_order, audit: leaf.audit.clone(), exact_agrees, product_agrees, oracle })
}

impl LeafReport {
    pub fn certified(&self) -> bool {
        self.exact_agrees && self.product_agrees && self.chain_order.is_some() && self.oracle.pass
    }

    /// Whether the audit entries decrease along the branch.
    pub fn audit_decreasing(&self) -> bool {
        self.audit.windows(2).all(|w| w[0].precedes(&w[1]))
    }

    fn to_json(&self) -> Value {
        json!({
            "forms": self.forms.iter().map(|f| json!({
                "monomial": f.monomial.to_string(),
                "unit": f.unit.render(),
                "unit_constant": f.unit.constant_term().to_string(),
                "precision": f.unit.precision().to_string(),
            })).collect::<Vec<_>>(),
            "chain_order": self.chain_order.as_ref().map(|o| o.iter().map(|k| k + 1).collect::<Vec<_>>()),
            "audit": self.audit.iter().map(AuditEntry::to_json).collect::<Vec<_>>(),
            "exact_agrees": self.exact_agrees,
            "product_agrees": self.product_agrees,
            "oracle": {
                "samples": self.oracle.samples,
                "max_residual": self.oracle.max_residual,
                "max_ratio": self.oracle.max_ratio,
                "pass": self.oracle.pass,
            },
        })
    }
}

impl MonomialisationReport {
    pub fn leaves(&self) -> Vec<&LeafReport> {
        self.tree.root.leaves()
    }

    pub fn height(&self) -> usize {
        self.tree.height()
    }

    pub fn certified(&self) -> bool {
        self.leaves().iter().all(|l| l.certified())
    }

    pub fn to_json(&self) -> Value {
        let sig = self.tree.source;
        json!({
            "signature": [sig.m, sig.n],
            "inputs": self.inputs.iter().map(|s| s.render()).collect::<Vec<_>>(),
            "height": self.height(),
            "leaves": self.leaves().len(),
            "certified": self.certified(),
            "tree": self.tree.to_json(LeafReport::to_json),
        })
    }

    /// One block per leaf: the chain, then each normal form.
    pub fn render_text(&self) -> String {
        let mut out = format!("{} leaves, height {}, certified: {}\n", self.leaves().len(), self.height(), self.certified());
        for (k, (chain, leaf)) in self.tree.branches().into_iter().enumerate() {
            out.push_str(&format!("leaf {}: {}\n", k + 1, if chain.is_empty() { "id".to_string() } else { chain.to_string() }));
            for (i, f) in leaf.forms.iter().enumerate() {
                out.push_str(&format!("  f{} = {} * ({})  [unit constant {}]\n", i + 1, f.monomial, f.unit, f.unit.constant_term()));
            }
            let o = &leaf.oracle;
            out.push_str(&format!(
                "  oracle: {} points, max residual {:.3e}, max ratio {:.3}, {}\n",
                o.samples,
                o.max_residual,
                o.max_ratio,
                if leaf.certified() { "certified" } else { "NOT certified" }
            ));
        }
        out
    }
}
