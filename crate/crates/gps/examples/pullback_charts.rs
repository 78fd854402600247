//! Pulling a series back along elementary charts and a composed chain.

use gps::parser::parse_series;
use gps::transforms::{pullback, pullback_chain, AdmissibleTransform, ElementaryTransform, Lambda, TransformKind};
use gps::{q, Result, Signature};

fn main() -> Result<()> {
    let sig = Signature::new(1, 1);
    let f = parse_series("y1^2 - x1^3", sig, &q(8))?;

    let charts = [
        TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::Finite(q(1)) },
        TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::PosInf },
        TransformKind::RamifyX { i: 1, gamma: q(2) },
    ];
    for kind in charts {
        let t = ElementaryTransform::new(kind, sig)?;
        println!("{t}: {}", pullback(&t, &f)?);
    }

    // x = s^2 followed by y = s (1 + y') turns the cusp into a monomial times a unit.
    let rho = AdmissibleTransform::from_steps(
        sig,
        vec![
            ElementaryTransform::new(TransformKind::RamifyX { i: 1, gamma: q(2) }, sig)?,
            ElementaryTransform::new(TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::Finite(q(1)) }, sig)?,
        ],
    )?;
    println!("chain {rho}");
    println!("  pulls back to {}", pullback_chain(&rho, &f)?);
    let image = rho.forward_point(&[0.25, 0.1])?;
    println!("  maps (0.25, 0.1) to ({:.4}, {:.4})", image[0], image[1]);
    Ok(())
}
