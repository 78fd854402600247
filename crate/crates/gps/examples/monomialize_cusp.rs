//! Monomialising the cusp together with a coordinate, then reading a leaf.

use gps::config::Config;
use gps::monomialize::monomialize;
use gps::parser::parse_series_file;
use gps::{q, Result};

fn main() -> Result<()> {
    let (_, fs) = parse_series_file("vars x:1 y:1\ny1^2 - x1^3;\nx1;\n", &q(8))?;
    let report = monomialize(&fs, &Config::default())?;
    let text = report.render_text();
    println!("{}", text.lines().next().unwrap_or(""));

    let leaf = report.leaves()[0];
    println!("first leaf:");
    for (f, form) in fs.iter().zip(&leaf.forms) {
        println!("  {f}  ->  [{}] * ({})", form.monomial, form.unit);
    }
    println!("  oracle: {} samples, worst ratio {:.3}", leaf.oracle.samples, leaf.oracle.max_ratio);
    println!("all {} leaves certified: {}", report.leaves().len(), report.certified());
    Ok(())
}
