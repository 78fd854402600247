//! Engine configuration and its `key=value` file format.

use crate::error::{GpsError, Result};
use crate::series::{q, Q};
use crate::transforms::parse_q;
use crate::trees::LambdaPalette;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    /// Truncation precision of parsed inputs.
    pub precision: Q,
    pub palette: LambdaPalette,
    /// Elementary steps allowed per branch.
    pub depth_cap: usize,
    /// Principalization blow-ups allowed per branch.
    pub princ_cap: usize,
    /// Oracle points per leaf.
    pub oracle_samples: usize,
    /// Radius of the box the leaf oracle samples from.
    pub oracle_radius: f64,
    /// Sample count of covering checks.
    pub covering_samples: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the hardware count.
    pub threads: Option<usize>,
    pub format: OutputFormat,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            precision: q(8),
            palette: LambdaPalette::default_palette(),
            depth_cap: 64,
            princ_cap: 32,
            oracle_samples: 100,
            oracle_radius: 0.125,
            covering_samples: 10_000,
            seed: 0,
            threads: None,
            format: OutputFormat::Text,
        }
    }
}

fn bad(key: &str, value: &str) -> GpsError {
    GpsError::Invalid(format!("bad value '{value}' for '{key}'"))
}

fn parse_count(key: &str, value: &str) -> Result<usize> {
    value.trim().parse().map_err(|_| bad(key, value))
}

/// Comma-separated rationals.
pub fn parse_palette(value: &str) -> Result<LambdaPalette> {
    let values = value.split(',').filter(|s| !s.trim().is_empty()).map(parse_q).collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(bad("lambda", value));
    }
    LambdaPalette::new(values)
}

impl Config {
    /// Applies one setting; keys match the long command-line flags.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key.trim() {
            "precision" => {
                let p = parse_q(value)?;
                if p <= Q::from_integer(0.into()) {
                    return Err(bad(key, value));
                }
                self.precision = p;
            }
            "lambda" => self.palette = parse_palette(value)?,
            "max-depth" | "max_depth" => self.depth_cap = parse_count(key, value)?,
            "princ-cap" | "princ_cap" => self.princ_cap = parse_count(key, value)?,
            "samples" => self.oracle_samples = parse_count(key, value)?,
            "covering-samples" | "covering_samples" => self.covering_samples = parse_count(key, value)?,
            "oracle-radius" | "oracle_radius" => {
                let r: f64 = value.trim().parse().map_err(|_| bad(key, value))?;
                if !(r > 0.0 && r < 1.0) {
                    return Err(bad(key, value));
                }
                self.oracle_radius = r;
            }
            "seed" => self.seed = value.trim().parse().map_err(|_| bad(key, value))?,
            "threads" => self.threads = Some(parse_count(key, value)?).filter(|&t| t > 0),
            "format" => {
                self.format = match value.trim() {
                    "text" => OutputFormat::Text,
                    "json" => OutputFormat::Json,
                    _ => return Err(bad(key, value)),
                }
            }
            other => return Err(GpsError::Invalid(format!("unknown config key '{other}'"))),
        }
        if self.depth_cap == 0 || self.princ_cap == 0 {
            return Err(bad(key, value));
        }
        Ok(())
    }

    /// Reads `key=value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| GpsError::Parse { line: no + 1, col: 1, msg: "expected key=value".into() })?;
            self.set(k, v).map_err(|e| GpsError::Parse { line: no + 1, col: 1, msg: e.to_string() })?;
        }
        Ok(())
    }
}
