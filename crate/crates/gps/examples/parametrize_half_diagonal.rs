//! Quadrant parametrization of the open half-diagonal `y = x > 0`.

use gps::config::Config;
use gps::geometry::{covering, forward_soundness, membership_oracle, parametrize};
use gps::parser::parse_set_file;
use gps::{q, Result};

fn main() -> Result<()> {
    let set = parse_set_file("vars x:1 y:1\ny1^2 - x1^2 = 0 & x1 > 0 & y1 > 0;\n", &q(8))?;
    println!("(0.1, 0.1) in set: {:?}", membership_oracle(&set.union, &[0.1, 0.1]));
    println!("(0.1, -0.1) in set: {:?}", membership_oracle(&set.union, &[0.1, -0.1]));

    let cfg = Config::default();
    let param = parametrize(&set.union, &cfg)?;
    print!("{}", param.render_text());

    let sound = forward_soundness(&param, &set.union, 2000, cfg.seed);
    println!("soundness: {} of {} images outside the set", sound.false_members, sound.samples);
    let cover = covering(&param, &set.union, 2000, cfg.seed);
    println!("covering: {:.4} of {} sampled members", cover.fraction(), cover.strict.samples);
    Ok(())
}
