//! A one-level blow-up tree and a sampled check that its charts cover a box.

use gps::transforms::AdmissibleTransform;
use gps::trees::{covering_check, yx_family, LambdaPalette};
use gps::{Result, Signature};

fn main() -> Result<()> {
    let sig = Signature::new(1, 1);
    let family = yx_family(sig, 1, 1, &LambdaPalette::default_palette())?;
    println!("{} charts of y1 against x1:", family.len());
    for t in &family {
        println!("  {t}");
    }

    let branches: Vec<AdmissibleTransform> =
        family.into_iter().map(|t| AdmissibleTransform::from_steps(sig, vec![t])).collect::<Result<_>>()?;
    let report = covering_check(&branches, &[0.05], 4000, 7, 0.5)?;
    println!("covered {} of {} points ({:.4})", report.covered, report.samples, report.fraction());
    println!("points per chart: {:?}", report.witnesses);
    println!("worst round trip: {:.2e}", report.max_roundtrip);
    Ok(())
}
