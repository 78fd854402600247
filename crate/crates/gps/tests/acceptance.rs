//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

mod common;

use std::time::{Duration, Instant};

use common::{float_slack, nonzero_series, point, rng, series, transform, variant_catalogue};
use gps::config::Config;
use gps::division::{compose, exact_residual, solve_implicit, unit_root, weierstrass_divide};
use gps::geometry::{covering, forward_soundness, parametrize};
use gps::monomialize::{monomialize, MonomialisationReport};
use gps::parser::{parse_basic_set, parse_series};
use gps::transforms::{pullback, ElementaryTransform, Lambda, Sign, TransformKind};
use gps::{q, MultiExponent, Regularity, Series, Signature};
use num_traits::{Pow, Zero};
use rand::Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn timed(id: usize, title: &str, limit: Duration, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= limit;
    let pass = v.pass && in_time;
    println!(
        "[{}] criterion {id}: {title}: {} ({:.2}s of {}s)",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

const SIG: Signature = Signature { m: 2, n: 2 };

fn homomorphism() -> Verdict {
    let mut r = rng(101);
    let mut failures = 0;
    for _ in 0..1000 {
        let (t, fractional) = transform(&mut r, SIG);
        let prec = r.gen_range(4..9);
        let f = series(&mut r, SIG, prec, 5, fractional);
        let g = series(&mut r, SIG, prec, 5, fractional);
        let ok = (|| -> gps::Result<bool> {
            let (pf, pg) = (pullback(&t, &f)?, pullback(&t, &g)?);
            Ok(pullback(&t, &f.mul(&g)?)?.eq_mod_precision(&pf.mul(&pg)?) && pullback(&t, &f.add(&g)?)?.eq_mod_precision(&pf.add(&pg)?))
        })();
        if ok != Ok(true) {
            failures += 1;
        }
    }
    verdict(failures == 0, format!("1000 cases, {failures} failures"))
}

fn composition_oracle() -> Verdict {
    let catalogue = variant_catalogue(SIG);
    let mut r = rng(202);
    let corpus: Vec<Series> = (0..50).map(|_| nonzero_series(&mut r, SIG, 8, 6, true)).collect();
    let natural: Vec<Series> = (0..50).map(|_| nonzero_series(&mut r, SIG, 8, 6, false)).collect();
    let (mut checks, mut failures, mut worst) = (0usize, 0usize, 0.0f64);
    for t in &catalogue {
        let needs_natural = matches!(t.kind(), TransformKind::BlowUpXX { lambda: Lambda::Finite(l), .. } if *l != q(0));
        for f in if needs_natural { &natural } else { &corpus } {
            let h = pullback(t, f).expect("valid pullback");
            for _ in 0..100 {
                let qp = point(&mut r, t.target(), 0.25);
                let p = t.forward_point(&qp).expect("forward map");
                let ((v1, t1), (v2, t2)) = (h.evaluate_f64(&qp).unwrap(), f.evaluate_f64(&p).unwrap());
                // Terms the pullback pushed past its precision keep their coefficients,
                // so the pulled-back tail is measured with the larger coefficient mass.
                let t1 = t1.max(pulled_tail(&h, f, &qp));
                let bound = t1 + t2 + float_slack(&h, &qp) + float_slack(f, &p);
                checks += 1;
                worst = worst.max((v1 - v2).abs() / bound);
                if (v1 - v2).abs() > bound {
                    failures += 1;
                }
            }
        }
    }
    verdict(
        failures == 0,
        format!("{} variants x 50 series x 100 points = {checks} checks, {failures} over bound, worst ratio {worst:.3}", catalogue.len()),
    )
}

fn pulled_tail(h: &Series, f: &Series, q: &[f64]) -> f64 {
    let norm = q.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let delta: f64 = num_traits::ToPrimitive::to_f64(h.precision()).unwrap_or(f64::INFINITY);
    f.coefficient_mass() * norm.powf(delta)
}

/// `G = c·v^d + X·(lower terms) + higher terms`, regular of order `d` in `v`.
fn regular_divisor(r: &mut rand_chacha::ChaCha8Rng, v: usize, d: u32, prec: i64) -> Series {
    let noise = series(r, SIG, prec, 5, true);
    let x1 = MultiExponent::x_power(SIG, 1, q(1));
    let lead = MultiExponent::y_power(SIG, v, d);
    let c = q(r.gen_range(1..4));
    let g = noise.mul_monomial(&x1, &q(1)).add(&Series::monomial(lead.clone(), c, q(prec))).unwrap();
    let high = series(r, SIG, prec, 2, false).mul_monomial(&lead, &q(1));
    g.add(&high.mul_monomial(&MultiExponent::y_power(SIG, v, 1), &q(1)).truncate(&q(prec))).unwrap()
}

fn weierstrass() -> Verdict {
    let mut r = rng(303);
    let mut failures = Vec::new();
    for case in 0..500 {
        let v = r.gen_range(1..=2);
        let d = r.gen_range(1..=4);
        let prec = r.gen_range(5..9);
        let g = regular_divisor(&mut r, v, d, prec);
        assert_eq!(g.order_in_y(v), Regularity::Order(d));
        let f = series(&mut r, SIG, prec, 6, true);
        let ok = weierstrass_divide(&f, &g, v).and_then(|res| {
            let residual = exact_residual(&f, &g, &res)?;
            let low = residual.terms().all(|(e, _)| *e.degree() >= q(prec));
            let degree_ok = res.remainder.len() == d as usize
                && res.remainder_series().terms().all(|(e, _)| e.y()[v - 1] < d);
            Ok(low && degree_ok)
        });
        if ok != Ok(true) {
            failures.push(case);
        }
    }
    verdict(failures.is_empty(), format!("500 divisions, d <= 4, failing cases {failures:?}"))
}

fn named_corpus() -> Vec<(&'static str, Series)> {
    let p = q(8);
    let parse = |t: &str, m: usize, n: usize| parse_series(t, Signature::new(m, n), &p).unwrap();
    vec![
        ("Y^2-X^2", parse("y1^2 - x1^2", 1, 1)),
        ("Y^2-X^3", parse("y1^2 - x1^3", 1, 1)),
        ("Y^2-X^2Y-X^3", parse("y1^2 - x1^2*y1 - x1^3", 1, 1)),
        ("X^(1/2)+X^(2/3)Y", parse("x1^(1/2) + x1^(2/3)*y1", 1, 1)),
        ("X1^2X2+X1X2^3", parse("x1^2*x2 + x1*x2^3", 2, 0)),
        ("(1+Y)X^(5/2)", parse("(1 + y1)*x1^(5/2)", 1, 1)),
    ]
}

/// Sparse series: two or three terms, at least one involving y.
/// `half` draws x-exponents from `{0, 1/2, …, 3}` instead of `{0, 1, 2, 3}`.
fn random_sparse(count: usize, half: bool, seed: u64) -> Vec<(String, Series)> {
    let mut r = rng(seed);
    let shapes = [Signature::new(1, 1), Signature::new(2, 1), Signature::new(1, 2)];
    let mut out = Vec::new();
    while out.len() < count {
        let sig = shapes[r.gen_range(0..shapes.len())];
        let terms: Vec<(MultiExponent, gps::Q)> = (0..r.gen_range(2..4))
            .map(|_| {
                let x = (0..sig.m).map(|_| if half { gps::qr(r.gen_range(0..7), 2) } else { q(r.gen_range(0..4)) }).collect();
                let y = (0..sig.n).map(|_| r.gen_range(0..3)).collect();
                (MultiExponent::new(x, y).unwrap(), q(r.gen_range(1..4) * if r.gen_bool(0.5) { 1 } else { -1 }))
            })
            .collect();
        let s = Series::from_terms(sig, terms, q(8)).unwrap();
        if s.is_zero() || s.terms().all(|(e, _)| e.y().iter().all(|&b| b == 0)) {
            continue;
        }
        out.push((format!("random {}", out.len() + 1), s));
    }
    out
}

/// Half-integer stress set: reported, not gated.
fn fractional_stress() {
    let series = random_sparse(10, true, 404);
    let mut line = Vec::new();
    for prec in [8, 24] {
        let cfg = Config { precision: q(prec), ..Config::default() };
        let ok = series
            .iter()
            .filter(|(_, s)| {
                let s = parse_series(&s.render(), s.sig(), &cfg.precision).unwrap();
                monomialize(&[s], &cfg).map_or(false, |r| r.certified())
            })
            .count();
        line.push(format!("{ok}/10 certified at precision {prec}"));
    }
    println!("[INFO] half-integer sparse stress set: {}", line.join(", "));
}

fn corpus4() -> Vec<(String, Series)> {
    named_corpus().into_iter().map(|(n, s)| (n.to_string(), s)).chain(random_sparse(10, false, 404)).collect()
}

fn monomialisation() -> Verdict {
    let cfg = Config::default();
    let mut bad = Vec::new();
    let mut leaves = 0;
    for (name, s) in corpus4() {
        match monomialize(std::slice::from_ref(&s), &cfg) {
            Ok(rep) => {
                leaves += rep.leaves().len();
                let ok = rep.leaves().iter().all(|l| {
                    l.exact_agrees && l.oracle.pass && l.oracle.samples == 100 && l.forms.iter().all(|f| !f.unit.constant_term().is_zero())
                });
                if !ok || !rep.certified() {
                    let failed: Vec<String> = rep
                        .leaves()
                        .iter()
                        .filter(|l| !l.certified())
                        .map(|l| format!("exact {} product {} oracle ratio {:.2}", l.exact_agrees, l.product_agrees, l.oracle.max_ratio))
                        .collect();
                    bad.push(format!("{name} ({s}): uncertified leaves {failed:?}"));
                }
            }
            Err(e) => bad.push(format!("{name} ({s}): {e}")),
        }
    }
    verdict(bad.is_empty(), format!("16 series, {leaves} leaves, problems {bad:?}"))
}

fn multi_input_corpus() -> Vec<(Vec<Series>, i64)> {
    let parse = |t: &str, m: usize, n: usize, p: i64| parse_series(t, Signature::new(m, n), &q(p)).unwrap();
    vec![
        (vec![parse("y1^2 - x1^2", 1, 1, 8), parse("x1", 1, 1, 8)], 8),
        (vec![parse("y1 - x1", 1, 1, 8), parse("y1", 1, 1, 8)], 8),
        (vec![parse("x1", 2, 0, 8), parse("x2", 2, 0, 8)], 8),
        (vec![parse("x1^(1/2) + x1^(2/3)*y1", 1, 1, 8), parse("x1 + y1", 1, 1, 8)], 8),
        (vec![parse("y1^2 - x1^2", 1, 1, 16), parse("y1^2 - x1^3", 1, 1, 16)], 16),
        (vec![parse("x1^2*x2 + x1*x2^3", 2, 0, 16), parse("x1 + x2", 2, 0, 16)], 16),
    ]
}

fn division_chains() -> Verdict {
    let cfg = Config::default();
    let (mut leaves, mut bad) = (0, Vec::new());
    for (k, (fs, prec)) in multi_input_corpus().into_iter().enumerate() {
        match monomialize(&fs, &cfg) {
            Ok(rep) => {
                for leaf in rep.leaves() {
                    leaves += 1;
                    let ms: Vec<&MultiExponent> = leaf.forms.iter().map(|f| &f.monomial).collect();
                    let pairwise = ms.iter().all(|a| ms.iter().all(|b| a.comparable(b)));
                    if !pairwise || leaf.chain_order.is_none() || !leaf.certified() {
                        bad.push(format!("run {} leaf", k + 1));
                    }
                }
            }
            Err(e) => bad.push(format!("run {} at precision {prec}: {e}", k + 1)),
        }
    }
    verdict(bad.is_empty(), format!("6 multi-input runs, {leaves} leaves, problems {bad:?}"))
}

fn exact_output_charts(sig: Signature) -> Vec<ElementaryTransform> {
    let kinds = vec![
        TransformKind::BlowUpXX { i: 1, j: 2, lambda: Lambda::zero() },
        TransformKind::BlowUpXX { i: 2, j: 1, lambda: Lambda::PosInf },
        TransformKind::BlowUpYX { i: 1, j: 1, lambda: Lambda::zero() },
        TransformKind::BlowUpYX { i: 2, j: 1, lambda: Lambda::PosInf },
        TransformKind::BlowUpYX { i: 1, j: 2, lambda: Lambda::NegInf },
        TransformKind::BlowUpYY { i: 1, j: 2, lambda: Lambda::zero() },
        TransformKind::BlowUpYY { i: 2, j: 1, lambda: Lambda::PosInf },
        TransformKind::RamifyX { i: 1, gamma: q(2) },
        TransformKind::RamifyY { i: 2, d: 2, sign: Sign::Plus },
        TransformKind::RamifyY { i: 1, d: 3, sign: Sign::Minus },
        TransformKind::Linear { i: 2, c: vec![q(-2)] },
        TransformKind::SignChart { i: 1, sign: Sign::Plus },
        TransformKind::SignChart { i: 2, sign: Sign::Minus },
    ];
    kinds.into_iter().map(|k| ElementaryTransform::new(k, sig).unwrap()).collect()
}

fn injectivity() -> Verdict {
    let charts = exact_output_charts(SIG);
    assert!(charts.iter().all(ElementaryTransform::is_exact_output));
    let mut r = rng(606);
    let mut zeros = 0;
    for _ in 0..200 {
        let f = nonzero_series(&mut r, SIG, 8, 6, false).assume_exact_to(q(64));
        for t in &charts {
            if pullback(t, &f).map_or(true, |h| h.is_zero()) {
                zeros += 1;
            }
        }
    }
    verdict(zeros == 0, format!("200 polynomials x {} exact charts, {zeros} zero pullbacks", charts.len()))
}

fn quadrants() -> Verdict {
    let cfg = Config::default();
    let sig = Signature::new(1, 1);
    let mut parts = Vec::new();
    let mut pass = true;
    for text in ["y1^2 - x1^2 = 0 & x1 > 0 & y1 > 0", "y1^2 - x1^3 = 0 & x1 > 0"] {
        let set = parse_basic_set(text, sig, &cfg.precision).unwrap();
        let param = parametrize(&set.union, &cfg).unwrap();
        let sound = forward_soundness(&param, &set.union, 10_000, 7);
        let cover = covering(&param, &set.union, 10_000, 8);
        pass &= sound.false_members == 0 && sound.samples >= 10_000 && cover.strict.samples == 10_000 && cover.fraction() >= 0.99;
        parts.push(format!(
            "{{{text}}}: {} quadrants, {} false of {}, covered {:.4}",
            param.entries.len(),
            sound.false_members,
            sound.samples,
            cover.fraction()
        ));
    }
    verdict(pass, parts.join("; "))
}

fn newton_and_roots() -> Verdict {
    let mut r = rng(808);
    let mut failures = 0;
    for case in 0..100 {
        let ok = if case % 2 == 0 {
            let v = r.gen_range(1..=2);
            let rest = series(&mut r, SIG, 7, 6, true);
            let rest = rest.sub(&Series::constant(SIG, rest.constant_term(), q(7))).unwrap();
            let lin = Series::y(SIG, v, q(7)).scale(&q(r.gen_range(1..4)));
            let rest = rest.sub(&Series::y(SIG, v, q(7)).scale(&rest.coeff(&MultiExponent::y_power(SIG, v, 1)))).unwrap();
            let g = lin.add(&rest).unwrap();
            solve_implicit(&g, v).and_then(|a| compose(&g, v, &a)).map_or(false, |s| s.is_zero())
        } else {
            let k = r.gen_range(1..4);
            let c = q(r.gen_range(1..4)).pow(k as i32);
            let h = series(&mut r, SIG, 7, 6, true);
            let u = h.sub(&Series::constant(SIG, h.constant_term() - c, q(7))).unwrap();
            unit_root(&u, k).and_then(|v| v.pow(k)?.sub(&u)).map_or(false, |d| d.is_zero())
        };
        if !ok {
            failures += 1;
        }
    }
    verdict(failures == 0, format!("50 implicit functions + 50 unit roots, {failures} failures"))
}

fn corpus_json(threads: usize) -> Vec<u8> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let reports: Vec<serde_json::Value> = corpus4()
            .into_iter()
            .map(|(_, s)| monomialize(&[s], &Config::default()).map(|r: MonomialisationReport| r.to_json()).unwrap_or_default())
            .collect();
        serde_json::to_vec_pretty(&reports).unwrap()
    })
}

fn determinism() -> Verdict {
    let runs: Vec<Vec<u8>> = [1, 2, 4, 4].iter().map(|&t| corpus_json(t)).collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    verdict(same, format!("threads 1, 2, 4, 4: {} bytes each, identical {same}", runs[0].len()))
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        timed(1, "pullback is a ring homomorphism", s(30), homomorphism),
        timed(2, "numeric composition oracle", s(60), composition_oracle),
        timed(3, "Weierstrass division", s(60), weierstrass),
        timed(4, "monomialisation corpus", s(300), monomialisation),
        timed(5, "division chains on multi-input runs", s(300), division_chains),
        timed(6, "injectivity of exact-output charts", s(10), injectivity),
        timed(7, "quadrant parametrisation", s(120), quadrants),
        timed(8, "implicit functions and unit roots", s(30), newton_and_roots),
        timed(9, "determinism under thread counts", s(300), determinism),
    ];
    fractional_stress();
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
