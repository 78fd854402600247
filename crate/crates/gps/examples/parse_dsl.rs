//! The text formats read by the `gps` binary.

use gps::parser::{parse_basic_set, parse_series_file};
use gps::{q, Result, Signature};

const SERIES_FILE: &str = "\
vars x:2 y:1
# one series per statement
y1^2 - x1^3*x2;
x1^(1/2)*y1 + 3/2*x2;
";

fn main() -> Result<()> {
    let (sig, fs) = parse_series_file(SERIES_FILE, &q(8))?;
    println!("signature m={} n={}", sig.m, sig.n);
    for (k, f) in fs.iter().enumerate() {
        println!("series {}: {f}  ({} terms)", k + 1, f.len());
    }

    let set = parse_basic_set("y1^2 - x1^2 = 0 & x1 > 0 & y1 > 0 | -y1 > 0 & x1 = 0", Signature::new(1, 1), &q(8))?;
    println!("set is a union of {} basic sets", set.union.len());

    match parse_series_file("vars x:1 y:1\ny1^2 + ;\n", &q(8)) {
        Ok(_) => unreachable!("dangling operator"),
        Err(e) => println!("malformed input: {e}"),
    }
    Ok(())
}
