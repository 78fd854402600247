//! Admissible trees, branch enumeration and the numeric covering check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::error::{GpsError, Result};
use crate::series::{Signature, Q};
use crate::transforms::{AdmissibleTransform, ElementaryTransform, Lambda, Sign, TransformKind};

/// Tolerance of the inversion round trip and of quadrant membership.
pub const INVERSION_TOL: f64 = 1e-9;

/// A finite tree whose edges are elementary transforms.
#[derive(Clone, Debug, PartialEq)]
pub enum Tree<L> {
    Leaf(L),
    Node(Vec<(ElementaryTransform, Tree<L>)>),
}

/// A tree rooted at a signature.
#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibleTree<L> {
    pub source: Signature,
    pub root: Tree<L>,
}

/// Values of `λ` instantiating the generic children of a blow-up family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaPalette(Vec<Q>);

impl LambdaPalette {
    /// Sorted, deduplicated positive values.
    pub fn new(values: impl IntoIterator<Item = Q>) -> Result<Self> {
        let mut v: Vec<Q> = values.into_iter().collect();
        if v.iter().any(|l| l <= &Q::from_integer(0.into())) {
            return Err(GpsError::Invalid("palette values must be positive".into()));
        }
        v.sort();
        v.dedup();
        Ok(LambdaPalette(v))
    }

    pub fn default_palette() -> Self {
        use crate::series::{q, qr};
        LambdaPalette(vec![qr(1, 2), q(1), q(2)])
    }

    pub fn values(&self) -> &[Q] {
        &self.0
    }

    pub fn with(&self, extra: impl IntoIterator<Item = Q>) -> Self {
        LambdaPalette::new(self.0.iter().cloned().chain(extra.into_iter().filter(|l| l > &Q::from_integer(0.into()))))
            .expect("positive values")
    }
}

/// Children of the x-family `π_{i,j}`: palette values, then `0` and `∞`.
pub fn xx_family(sig: Signature, i: usize, j: usize, palette: &LambdaPalette) -> Result<Vec<ElementaryTransform>> {
    let mut lambdas: Vec<Lambda> = if j < i { palette.values().iter().cloned().map(Lambda::Finite).collect() } else { Vec::new() };
    lambdas.push(Lambda::zero());
    lambdas.push(Lambda::PosInf);
    lambdas.into_iter().map(|lambda| ElementaryTransform::new(TransformKind::BlowUpXX { i, j, lambda }, sig)).collect()
}

/// Children of `π_{m+i,j}`: `±palette`, `0`, then `±∞`.
pub fn yx_family(sig: Signature, i: usize, j: usize, palette: &LambdaPalette) -> Result<Vec<ElementaryTransform>> {
    signed(palette, true)
        .into_iter()
        .map(|lambda| ElementaryTransform::new(TransformKind::BlowUpYX { i, j, lambda }, sig))
        .collect()
}

/// Children of `π_{m+i,m+j}`: `±palette`, `0`, then `∞`.
pub fn yy_family(sig: Signature, i: usize, j: usize, palette: &LambdaPalette) -> Result<Vec<ElementaryTransform>> {
    signed(palette, false)
        .into_iter()
        .map(|lambda| ElementaryTransform::new(TransformKind::BlowUpYY { i, j, lambda }, sig))
        .collect()
}

fn signed(palette: &LambdaPalette, both_infinities: bool) -> Vec<Lambda> {
    let mut out: Vec<Lambda> = palette.values().iter().rev().map(|l| Lambda::Finite(-l.clone())).collect();
    out.push(Lambda::zero());
    out.extend(palette.values().iter().cloned().map(Lambda::Finite));
    out.push(Lambda::PosInf);
    if both_infinities {
        out.push(Lambda::NegInf);
    }
    out
}

/// `r^{d,+}` and `r^{d,−}` on `y_i`.
pub fn ramify_y_pair(sig: Signature, i: usize, d: u32) -> Result<Vec<ElementaryTransform>> {
    [Sign::Plus, Sign::Minus].into_iter().map(|sign| ElementaryTransform::new(TransformKind::RamifyY { i, d, sign }, sig)).collect()
}

/// `σ^+` and `σ^−` on `y_i`.
pub fn sign_pair(sig: Signature, i: usize) -> Result<Vec<ElementaryTransform>> {
    [Sign::Plus, Sign::Minus].into_iter().map(|sign| ElementaryTransform::new(TransformKind::SignChart { i, sign }, sig)).collect()
}

impl<L> Tree<L> {
    pub fn height(&self) -> usize {
        match self {
            Tree::Leaf(_) => 0,
            Tree::Node(edges) => 1 + edges.iter().map(|(_, t)| t.height()).max().unwrap_or(0),
        }
    }

    pub fn leaves(&self) -> Vec<&L> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a L>) {
        match self {
            Tree::Leaf(l) => out.push(l),
            Tree::Node(edges) => edges.iter().for_each(|(_, t)| t.collect_leaves(out)),
        }
    }

    /// Prepends one transform with a single child.
    pub fn behind(step: ElementaryTransform, child: Tree<L>) -> Tree<L> {
        Tree::Node(vec![(step, child)])
    }

    /// Replaces every leaf by a subtree.
    pub fn graft<M>(self, f: &mut impl FnMut(L) -> Tree<M>) -> Tree<M> {
        match self {
            Tree::Leaf(l) => f(l),
            Tree::Node(edges) => Tree::Node(edges.into_iter().map(|(e, t)| (e, t.graft(f))).collect()),
        }
    }

    pub fn map<M>(self, f: &mut impl FnMut(L) -> M) -> Tree<M> {
        self.graft(&mut |l| Tree::Leaf(f(l)))
    }

    /// Every edge acting on `extra` further trailing y-variables.
    pub fn lift(self, extra: usize) -> Tree<L> {
        match self {
            Tree::Leaf(l) => Tree::Leaf(l),
            Tree::Node(edges) => Tree::Node(edges.into_iter().map(|(e, t)| (e.lift(extra), t.lift(extra))).collect()),
        }
    }
}

impl<L> AdmissibleTree<L> {
    pub fn leaf(source: Signature, data: L) -> Self {
        AdmissibleTree { source, root: Tree::Leaf(data) }
    }

    pub fn height(&self) -> usize {
        self.root.height()
    }

    /// Root-to-leaf chains, left to right.
    pub fn branches(&self) -> Vec<(AdmissibleTransform, &L)> {
        let mut out = Vec::new();
        walk(&self.root, AdmissibleTransform::identity(self.source), &mut out);
        out
    }

    pub fn chains(&self) -> Vec<AdmissibleTransform> {
        self.branches().into_iter().map(|(c, _)| c).collect()
    }
}

fn walk<'a, L>(t: &'a Tree<L>, prefix: AdmissibleTransform, out: &mut Vec<(AdmissibleTransform, &'a L)>) {
    match t {
        Tree::Leaf(l) => out.push((prefix, l)),
        Tree::Node(edges) => {
            for (e, child) in edges {
                let mut p = prefix.clone();
                p.push(e.clone()).expect("tree edges chain");
                walk(child, p, out);
            }
        }
    }
}

/// Free-function form of [`AdmissibleTree::branches`].
pub fn branches<L>(t: &AdmissibleTree<L>) -> Vec<AdmissibleTransform> {
    t.chains()
}

fn node_json<L>(t: &Tree<L>, kind: Value, params: Value, leaf_json: &impl Fn(&L) -> Value) -> Value {
    let mut obj = Map::new();
    obj.insert("kind".into(), kind);
    obj.insert("params".into(), params);
    match t {
        Tree::Leaf(l) => {
            obj.insert("children".into(), Value::Array(Vec::new()));
            obj.insert("result".into(), leaf_json(l));
        }
        Tree::Node(edges) => {
            let children = edges
                .iter()
                .map(|(e, child)| {
                    let d = e.to_json();
                    let mut params = d["params"].clone();
                    params["source"] = d["source"].clone();
                    node_json(child, d["kind"].clone(), params, leaf_json)
                })
                .collect();
            obj.insert("children".into(), Value::Array(children));
        }
    }
    Value::Object(obj)
}

impl<L> AdmissibleTree<L> {
    /// `{kind, params, children}`; each non-root node is labelled by the
    /// transform on its incoming edge, leaves carry `result`.
    pub fn to_json(&self, leaf_json: impl Fn(&L) -> Value) -> Value {
        node_json(&self.root, json!("root"), json!({"source": [self.source.m, self.source.n]}), &leaf_json)
    }

    pub fn from_json(v: &Value, leaf_from: impl Fn(&Value) -> Result<L>) -> Result<Self> {
        let bad = || GpsError::Invalid("malformed tree".into());
        let src = v["params"]["source"].as_array().ok_or_else(bad)?;
        let dims: Vec<usize> = src.iter().filter_map(Value::as_u64).map(|d| d as usize).collect();
        if v["kind"] != "root" || dims.len() != 2 {
            return Err(bad());
        }
        fn parse<L>(v: &Value, from: &impl Fn(&Value) -> Result<L>) -> Result<Tree<L>> {
            let children = v["children"].as_array().ok_or_else(|| GpsError::Invalid("tree node without children".into()))?;
            if children.is_empty() {
                return Ok(Tree::Leaf(from(&v["result"])?));
            }
            let mut edges = Vec::new();
            for c in children {
                let mut params = c["params"].clone();
                let source = params.as_object_mut().and_then(|o| o.remove("source")).unwrap_or(Value::Null);
                let e = ElementaryTransform::from_json(&json!({"kind": c["kind"], "params": params, "source": source}))?;
                edges.push((e, parse(c, from)?));
            }
            Ok(Tree::Node(edges))
        }
        Ok(AdmissibleTree { source: Signature::new(dims[0], dims[1]), root: parse(v, &leaf_from)? })
    }
}

/// Outcome of a sampled covering check.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub samples: usize,
    pub covered: usize,
    /// Points with no accepted preimage.
    pub uncovered: Vec<Vec<f64>>,
    /// Covering points per branch (first witness wins).
    pub witnesses: Vec<usize>,
    /// Worst round-trip error over accepted preimages.
    pub max_roundtrip: f64,
}

impl CoverageReport {
    pub fn fraction(&self) -> f64 {
        if self.samples == 0 {
            1.0
        } else {
            self.covered as f64 / self.samples as f64
        }
    }
}

/// First branch with a preimage `q` of `p` accepted by `accept` whose forward
/// image returns to `p`; returns `(branch index, q, round-trip error)`.
pub fn find_preimage(
    branches: &[AdmissibleTransform],
    p: &[f64],
    accept: &(impl Fn(usize, &[f64]) -> bool + ?Sized),
) -> Option<(usize, Vec<f64>, f64)> {
    for (b, chain) in branches.iter().enumerate() {
        for q in chain.preimages(p) {
            if !accept(b, &q) {
                continue;
            }
            let Ok(back) = chain.forward_point(&q) else { continue };
            let err = back.iter().zip(p).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            if err <= INVERSION_TOL {
                return Some((b, q, err));
            }
        }
    }
    None
}

/// Preimages must lie in `Î` of their target with polyradius `target_radius`:
/// x-coordinates in `[0, R)`, y-coordinates in `(-R, R)`.
pub fn in_target_box(sig: Signature, q: &[f64], target_radius: f64) -> bool {
    q.iter().enumerate().all(|(k, v)| v.abs() < target_radius && (k >= sig.m || *v >= -INVERSION_TOL))
}

/// Covering of explicit points, parallel over points with ordered merge.
pub fn covering_of_points(
    branches: &[AdmissibleTransform],
    points: &[Vec<f64>],
    accept: &(impl Fn(usize, &[f64]) -> bool + Sync),
) -> CoverageReport {
    let found: Vec<Option<(usize, Vec<f64>, f64)>> = points.par_iter().map(|p| find_preimage(branches, p, accept)).collect();
    let mut report = CoverageReport { samples: points.len(), covered: 0, uncovered: Vec::new(), witnesses: vec![0; branches.len()], max_roundtrip: 0.0 };
    for (p, f) in points.iter().zip(found) {
        match f {
            Some((b, _, err)) => {
                report.covered += 1;
                report.witnesses[b] += 1;
                report.max_roundtrip = report.max_roundtrip.max(err);
            }
            None => report.uncovered.push(p.clone()),
        }
    }
    report
}

/// Uniform points of `Î_{m,n,r}`: `x_i ∈ (0, r_i)`, `y_j ∈ (−r, r)`.
pub fn sample_box(sig: Signature, radii: &[f64], samples: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..samples)
        .map(|_| {
            (0..sig.dim())
                .map(|k| {
                    let r = radii[k.min(radii.len() - 1)];
                    if k < sig.m {
                        rng.gen_range(0.0..r)
                    } else {
                        rng.gen_range(-r..r)
                    }
                })
                .collect()
        })
        .collect()
}

/// Samples the box around the origin and searches each branch for a preimage
/// inside its target box of radius `target_radius`.
pub fn covering_check(
    branches: &[AdmissibleTransform],
    radii: &[f64],
    samples: usize,
    seed: u64,
    target_radius: f64,
) -> Result<CoverageReport> {
    let Some(first) = branches.first() else {
        return Err(GpsError::Invalid("covering check needs at least one branch".into()));
    };
    let sig = first.source();
    if branches.iter().any(|b| b.source() != sig) {
        return Err(GpsError::Invalid("branches must share their source signature".into()));
    }
    let points = sample_box(sig, radii, samples, seed);
    let targets: Vec<Signature> = branches.iter().map(AdmissibleTransform::target).collect();
    Ok(covering_of_points(branches, &points, &|b, q| in_target_box(targets[b], q, target_radius)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{q, qr};

    fn sig11() -> Signature {
        Signature::new(1, 1)
    }

    fn family_tree(palette: &LambdaPalette) -> AdmissibleTree<()> {
        let edges = yx_family(sig11(), 1, 1, palette).unwrap().into_iter().map(|e| (e, Tree::Leaf(()))).collect();
        AdmissibleTree { source: sig11(), root: Tree::Node(edges) }
    }

    #[test]
    fn branch_shapes() {
        let id = AdmissibleTree::leaf(sig11(), ());
        assert_eq!(id.chains(), vec![AdmissibleTransform::identity(sig11())]);
        let pair = ramify_y_pair(sig11(), 1, 2).unwrap();
        assert_eq!(pair.len(), 2);
        let xx = xx_family(Signature::new(2, 0), 2, 1, &LambdaPalette::new([q(1)]).unwrap()).unwrap();
        assert_eq!(xx.len(), 3);
        assert_eq!(xx.iter().map(|e| e.to_string()).collect::<Vec<_>>(), vec!["pi[2,1]^1", "pi[2,1]^0", "pi[2,1]^inf"]);
    }

    #[test]
    fn sign_charts_cover() {
        let chains: Vec<AdmissibleTransform> = sign_pair(Signature::new(0, 1), 1)
            .unwrap()
            .into_iter()
            .map(|e| AdmissibleTransform::from_steps(Signature::new(0, 1), vec![e]).unwrap())
            .collect();
        let r = covering_check(&chains, &[1.0], 500, 7, 1.0).unwrap();
        assert_eq!(r.fraction(), 1.0);
    }

    #[test]
    fn sparse_palette_leaves_gaps() {
        let narrow = family_tree(&LambdaPalette::new([q(1)]).unwrap());
        let r = covering_check(&narrow.chains(), &[0.4, 0.4], 2000, 3, 0.5).unwrap();
        assert!(r.fraction() < 1.0);
        // Charts λ ∈ {0, ±1, ±∞} with target radius 1/2 miss exactly 3/2 ≤ |y/x| ≤ 2.
        for p in &r.uncovered {
            let ratio = (p[1] / p[0]).abs();
            assert!((1.5 - 1e-9..=2.0 + 1e-9).contains(&ratio), "{p:?}");
        }
        assert!(r.max_roundtrip <= INVERSION_TOL);
        let wide = family_tree(&LambdaPalette::new([q(1), qr(7, 4)]).unwrap());
        let r2 = covering_check(&wide.chains(), &[0.4, 0.4], 2000, 3, 0.5).unwrap();
        assert!(r2.covered >= r.covered);
    }


    #[test]
    fn json_round_trip() {
        let t = family_tree(&LambdaPalette::default_palette());
        let v = t.to_json(|_| json!(null));
        let back = AdmissibleTree::from_json(&v, |_| Ok(())).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_json(|_| json!(null)), v);
    }
}
