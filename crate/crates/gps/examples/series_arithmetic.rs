//! Truncated arithmetic with fractional x-exponents.
//!
//! Run with `cargo run --example series_arithmetic`.

use gps::parser::parse_series;
use gps::{q, qr, Result, Signature};

fn main() -> Result<()> {
    let sig = Signature::new(1, 1);
    let prec = q(6);
    let a = parse_series("1 + x1^(1/2) - 2*y1", sig, &prec)?;
    let b = parse_series("x1^(3/2) + y1^2", sig, &prec)?;

    println!("a       = {a}");
    println!("b       = {b}");
    println!("a + b   = {}", a.add(&b)?);
    // A product is only known below the smaller of the two shifted precisions.
    let ab = a.mul(&b)?;
    println!("a * b   = {ab}   (precision {})", ab.precision());
    println!("a^3     = {}", a.pow(3)?);
    println!("1 / a   = {}", a.inverse()?);
    println!("d/dy1 b = {}", b.partial_y(1)?);

    // Integral exponents evaluate exactly; fractional ones fall back to f64.
    let at = [qr(1, 4), qr(1, 10)];
    let b_at = b.evaluate(&at)?;
    println!("b(1/4, 1/10) ~ {:.6}, tail bound {:.2e}", b_at.value, b_at.tail);
    let c = parse_series("x1^2 - 3*x1*y1", sig, &prec)?;
    println!("c(1/4, 1/10) = {}", c.evaluate(&at)?.exact.expect("integral exponents"));
    Ok(())
}
