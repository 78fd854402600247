//! Weierstrass division, the implicit function and unit roots.

use gps::division::{exact_residual, solve_implicit, unit_root, weierstrass_divide};
use gps::parser::parse_series;
use gps::{q, Result, Signature};

fn main() -> Result<()> {
    let sig = Signature::new(1, 1);
    let prec = q(8);
    let f = parse_series("y1^3 + x1^(1/2)*y1 + 1", sig, &prec)?;
    let g = parse_series("y1^2 - x1 + x1*y1^3", sig, &prec)?;

    let res = weierstrass_divide(&f, &g, 1)?;
    println!("order {} in y{}", res.order, res.var);
    println!("Q = {}", res.quotient);
    for (i, b) in res.remainder.iter().enumerate() {
        println!("B_{i} = {b}");
    }
    // The residual only carries terms at or above the precision of the quotient.
    let residual = exact_residual(&f, &g, &res)?;
    let low = residual.ord().map_or("none".to_string(), |d| d.to_string());
    println!("F - Q*G - R: lowest degree {low}, precision {}", res.quotient.precision());

    let h = parse_series("y1 - x1 - x1*y1^2", sig, &prec)?;
    println!("y1 = {} solves {h} = 0", solve_implicit(&h, 1)?);

    let u = parse_series("1 + x1 + y1", sig, &prec)?;
    let v = unit_root(&u, 2)?;
    println!("sqrt({u}) = {v}");
    println!("squared back: {}", v.pow(2)?);
    Ok(())
}
