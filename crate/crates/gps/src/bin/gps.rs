use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use gps::config::{Config, OutputFormat};
use gps::division::{exact_residual, weierstrass_divide};
use gps::geometry::{covering, forward_soundness, parametrize};
use gps::monomialize::monomialize;
use gps::parser::{parse_series_file, parse_set_file};
use gps::{GpsError, Result, Series};

#[derive(Parser)]
#[command(name = "gps", version, about = "Generalized power series: monomialisation, division, parametrization")]
struct Cli {
    #[command(flatten)]
    opts: Opts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Opts {
    /// key=value file applied before the flags below.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Truncation precision of the inputs.
    #[arg(long, global = true)]
    precision: Option<String>,
    /// Comma-separated blow-up constants.
    #[arg(long, global = true)]
    lambda: Option<String>,
    #[arg(long, global = true)]
    max_depth: Option<String>,
    #[arg(long, global = true)]
    princ_cap: Option<String>,
    /// Oracle points per leaf.
    #[arg(long, global = true)]
    samples: Option<String>,
    /// Sample count of the soundness and covering checks.
    #[arg(long, global = true)]
    covering_samples: Option<String>,
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Worker threads; defaults to the hardware count.
    #[arg(long, global = true)]
    threads: Option<String>,
    /// Stdout format: text or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Also write the JSON report to this path.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Monomialise the series of a file and certify every leaf.
    Monomialize { input: PathBuf },
    /// Weierstrass division of F by G in a y-variable.
    Divide {
        dividend: PathBuf,
        divisor: PathBuf,
        /// Distinguished variable, `y<j>` or `<j>`.
        var: String,
    },
    /// Quadrant parametrization of a semialgebraic germ.
    Parametrize { input: PathBuf },
}

fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| GpsError::Invalid(format!("{}: {e}", path.display())))
}

fn build_config(opts: &Opts) -> Result<Config> {
    let mut cfg = Config::default();
    if let Some(path) = &opts.config {
        cfg.apply_file(&read(path)?).map_err(|e| GpsError::Invalid(format!("{}: {e}", path.display())))?;
    }
    let flags = [
        ("precision", &opts.precision),
        ("lambda", &opts.lambda),
        ("max-depth", &opts.max_depth),
        ("princ-cap", &opts.princ_cap),
        ("samples", &opts.samples),
        ("covering-samples", &opts.covering_samples),
        ("seed", &opts.seed),
        ("threads", &opts.threads),
        ("format", &opts.format),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    Ok(cfg)
}

fn parse_var(text: &str) -> Result<usize> {
    let digits = text.strip_prefix('y').unwrap_or(text);
    digits.parse::<usize>().ok().filter(|&j| j > 0).ok_or_else(|| GpsError::Invalid(format!("bad variable '{text}', expected y<j>")))
}

fn single_series(path: &PathBuf, cfg: &Config) -> Result<Series> {
    let (_, mut fs) = parse_series_file(&read(path)?, &cfg.precision)?;
    match fs.len() {
        1 => Ok(fs.remove(0)),
        k => Err(GpsError::Invalid(format!("{}: expected one series, found {k}", path.display()))),
    }
}

struct Outcome {
    text: String,
    json: Value,
    /// Exit code when the run completed without an error.
    code: u8,
    /// Diagnostic for stderr accompanying a nonzero `code`.
    note: Option<String>,
}

/// Attaches the offending input to a precision failure.
fn blame(label: String, e: GpsError) -> GpsError {
    match e {
        GpsError::PrecisionExhausted(msg) => GpsError::PrecisionExhausted(format!("{label}: {msg}")),
        e if e.exit_code() == 2 => GpsError::PrecisionExhausted(format!("{label}: {e}")),
        e => e,
    }
}

fn cmd_monomialize(path: &PathBuf, cfg: &Config) -> Result<Outcome> {
    let text = read(path)?;
    let (_, fs) = parse_series_file(&text, &cfg.precision)?;
    if let Some(k) = fs.iter().position(Series::is_zero) {
        // Nonzero input that truncates to zero: the precision is too small.
        let wide = &cfg.precision * gps::q(2) + gps::q(8);
        let (_, wider) = parse_series_file(&text, &wide)?;
        if !wider[k].is_zero() {
            return Err(GpsError::PrecisionExhausted(format!(
                "series {} ({}) vanishes below precision {}",
                k + 1,
                wider[k],
                cfg.precision
            )));
        }
    }
    let report = match monomialize(&fs, cfg) {
        Ok(r) => r,
        Err(e) if e.exit_code() == 2 => {
            let culprit = if fs.len() == 1 {
                Some(0)
            } else {
                fs.iter().position(|f| monomialize(std::slice::from_ref(f), cfg).is_err())
            };
            return Err(match culprit {
                Some(k) => blame(format!("series {} ({})", k + 1, fs[k]), e),
                None => blame(format!("joint run of all {} series", fs.len()), e),
            });
        }
        Err(e) => return Err(e),
    };
    let failed = report.leaves().iter().filter(|l| !l.certified()).count();
    let (code, note) = if failed == 0 {
        (0, None)
    } else {
        (2, Some(format!("precision exhausted: {failed} leaves failed certification; raise --precision")))
    };
    Ok(Outcome { text: report.render_text(), json: report.to_json(), code, note })
}

fn cmd_divide(f_path: &PathBuf, g_path: &PathBuf, var: &str, cfg: &Config) -> Result<Outcome> {
    let f = single_series(f_path, cfg)?;
    let g = single_series(g_path, cfg)?;
    let v = parse_var(var)?;
    let res = weierstrass_divide(&f, &g, v)?;
    let residual = exact_residual(&f, &g, &res)?;
    let min_degree = residual.ord().map(|o| o.to_string());
    let mut text = format!("order {} in y{v}\nQ = {}\n", res.order, res.quotient);
    for (i, b) in res.remainder.iter().enumerate() {
        text.push_str(&format!("B_{i} = {b}\n"));
    }
    text.push_str(&format!("R = {}\n", res.remainder_series()));
    let precision = res.quotient.precision().to_string();
    match &min_degree {
        Some(d) => text.push_str(&format!("residual min degree {d} (precision {precision})\n")),
        None => text.push_str(&format!("residual is zero (precision {precision})\n")),
    }
    let json = json!({
        "var": v,
        "order": res.order,
        "precision": precision,
        "quotient": res.quotient.render(),
        "remainder": res.remainder.iter().map(Series::render).collect::<Vec<_>>(),
        "residual_min_degree": min_degree,
    });
    Ok(Outcome { text, json, code: 0, note: None })
}

fn cmd_parametrize(path: &PathBuf, cfg: &Config) -> Result<Outcome> {
    let set = parse_set_file(&read(path)?, &cfg.precision)?;
    let param = parametrize(&set.union, cfg)?;
    let sound = forward_soundness(&param, &set.union, cfg.covering_samples, cfg.seed);
    let cover = covering(&param, &set.union, cfg.covering_samples, cfg.seed);
    let mut text = param.render_text();
    text.push_str(&format!(
        "soundness: {} samples, {} false, {} unknown\n",
        sound.samples, sound.false_members, sound.unknown
    ));
    text.push_str(&format!(
        "covered: {:.4} of {} members ({:.4} within truncation slack)\n",
        cover.fraction(),
        cover.strict.samples,
        cover.fraction_with_slack()
    ));
    let mut json = param.to_json();
    json["soundness"] = json!({ "samples": sound.samples, "false_members": sound.false_members, "unknown": sound.unknown });
    json["covering"] = json!({
        "samples": cover.strict.samples,
        "covered": cover.strict.covered,
        "fraction": cover.fraction(),
        "fraction_with_slack": cover.fraction_with_slack(),
    });
    let (code, note) = if sound.false_members == 0 {
        (0, None)
    } else {
        (2, Some(format!("precision exhausted: {} sampled quadrant points fall outside the set", sound.false_members)))
    };
    Ok(Outcome { text, json, code, note })
}

fn execute(cli: &Cli) -> Result<(Outcome, Config)> {
    let cfg = build_config(&cli.opts)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cfg.threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().map_err(|e| GpsError::Invalid(format!("thread pool: {e}")))?;
    let outcome = pool.install(|| match &cli.command {
        Command::Monomialize { input } => cmd_monomialize(input, &cfg),
        Command::Divide { dividend, divisor, var } => cmd_divide(dividend, divisor, var, &cfg),
        Command::Parametrize { input } => cmd_parametrize(input, &cfg),
    })?;
    Ok((outcome, cfg))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok((out, cfg)) => {
            let pretty = serde_json::to_string_pretty(&out.json).expect("json values serialize");
            match cfg.format {
                OutputFormat::Text => print!("{}", out.text),
                OutputFormat::Json => println!("{pretty}"),
            }
            if let Some(path) = &cli.opts.json {
                if let Err(e) = std::fs::write(path, format!("{pretty}\n")) {
                    eprintln!("error: {}: {e}", path.display());
                    return ExitCode::from(1);
                }
            }
            if let Some(note) = &out.note {
                eprintln!("error: {note}");
            }
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
