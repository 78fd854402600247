//! Tail bounds sharper than a single precision.
//!
//! The unknown part of a pulled-back input is kept inside a union of
//! shifted simplices `β + {e ≥ 0 : |e| ≥ p}`. Pullbacks move each simplex by
//! the least exponents of the coordinate images, so a tail that a blow-up
//! has made divisible by a monomial stays divisible through later charts,
//! where a single total-degree precision would forget it.

use num_traits::Zero;

use crate::error::Result;
use crate::series::{Series, Q};
use crate::transforms::ElementaryTransform;

#[derive(Clone, Debug, PartialEq)]
struct Region {
    beta: Vec<Q>,
    p: Q,
}

impl Region {
    fn reach(&self) -> Q {
        self.beta.iter().sum::<Q>() + &self.p
    }

    fn contains(&self, other: &Region) -> bool {
        other.beta.iter().zip(&self.beta).all(|(a, b)| a >= b) && other.reach() >= self.reach()
    }

    fn pullback(&self, bounds: &[(Vec<Q>, Q)]) -> Region {
        let dim = bounds[0].0.len();
        let floor: Vec<Q> = (0..dim).map(|c| bounds.iter().map(|(lo, _)| lo[c].clone()).min().expect("coordinates")).collect();
        let least = bounds.iter().map(|(_, d)| d.clone()).min().expect("coordinates");
        let mut beta: Vec<Q> = floor.iter().map(|f| f * &self.p).collect();
        let mut reach = &least * &self.p;
        for (b, (lo, d)) in self.beta.iter().zip(bounds) {
            if b.is_zero() {
                continue;
            }
            for (acc, l) in beta.iter_mut().zip(lo) {
                *acc += b * l;
            }
            reach += b * d;
        }
        let p = reach - beta.iter().sum::<Q>();
        Region { beta, p }
    }
}

/// A series whose stored terms are exact below their precision except on
/// the tail regions.
#[derive(Clone, Debug)]
pub(crate) struct Tracked {
    known: Series,
    regions: Vec<Region>,
}

impl Tracked {
    /// An input known below its precision, stored exactly up to `cap`.
    pub fn input(f: &Series, cap: Q) -> Tracked {
        let regions = vec![Region { beta: vec![Q::zero(); f.sig().dim()], p: f.precision().clone() }];
        Tracked { known: f.assume_exact_to(cap.max(f.precision().clone())), regions }
    }

    /// A series with no more than its own precision.
    pub fn plain(f: &Series) -> Tracked {
        Tracked { known: f.clone(), regions: Vec::new() }
    }

    /// Least degree the tail can reach.
    pub fn reach(&self) -> Q {
        self.regions.iter().map(Region::reach).fold(self.known.precision().clone(), |a, r| a.min(r))
    }

    /// The terms certainly known, at precision [`Tracked::reach`].
    pub fn view(&self) -> Series {
        self.known.truncate(&self.reach())
    }

    pub fn pullback(&self, e: &ElementaryTransform) -> Result<Tracked> {
        let known = e.pullback(&self.known)?;
        let bounds = e.image_bounds();
        let mut regions: Vec<Region> = Vec::new();
        for r in self.regions.iter().map(|r| r.pullback(&bounds)) {
            if r.reach() >= *known.precision() || regions.iter().any(|s| s.contains(&r)) {
                continue;
            }
            regions.retain(|s| !r.contains(s));
            regions.push(r);
        }
        Ok(Tracked { known, regions })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_series;
    use crate::series::{q, Signature};
    use crate::transforms::{Lambda, TransformKind};

    const SIG: Signature = Signature { m: 1, n: 1 };

    fn chart(kind: TransformKind, sig: Signature) -> ElementaryTransform {
        ElementaryTransform::new(kind, sig).unwrap()
    }

    #[test]
    fn blow_ups_keep_the_tail_divisible() {
        let f = parse_series("y1^2 - x1^6", SIG, &q(8)).unwrap();
        let mut t = Tracked::input(&f, q(24));
        for _ in 0..2 {
            t = t.pullback(&chart(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::zero() }, SIG)).unwrap();
        }
        // Every tail term of degree ≥ 8 became a multiple of x1^8.
        assert_eq!(t.reach(), q(8));
        let inf = chart(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::PosInf }, SIG);
        let t = t.pullback(&inf).unwrap();
        assert_eq!(t.reach(), q(16));
        assert_eq!(t.view(), parse_series("x1^4*x2^6 - x1^6*x2^6", Signature::new(2, 0), &q(16)).unwrap());
    }

    #[test]
    fn plain_series_match_scalar_pullback() {
        let f = parse_series("y1^2 - x1^3 + x1*y1^3", SIG, &q(6)).unwrap();
        let r = chart(TransformKind::RamifyX { i: 1, gamma: q(1) / q(3) }, SIG);
        let t = Tracked::plain(&f).pullback(&r).unwrap();
        assert_eq!(t.view(), r.pullback(&f).unwrap());
    }
}
