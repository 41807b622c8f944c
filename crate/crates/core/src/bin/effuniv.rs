//! Command-line front end: lemma verification suites, bound calculators,
//! the approximation pipeline, and orbit scans, all emitting the shared
//! JSON report schema with append-only audit files named by config hash.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use effuniv::arith_sums::{self, ScanRange, TauSieve};
use effuniv::bounds::{
    a_of_r, corollary5_density, corollary5_setup, error_budget, measure_lower_bound, validate,
    Mode, UniversalityParams,
};
use effuniv::characters::{enumerate_characters, verify_orthogonality};
use effuniv::equidist::{koksma_deviation_bound, phase_perturbation_bound, tau_scan, KoksmaBox};
use effuniv::lfunc::linearize_log_factors;
use effuniv::meanvalue::{area_mean_bound, dirichlet_meansquare};
use effuniv::polydisc::{prop1_pipeline, push_to_boundary, taylor_truncate};
use effuniv::primes::{scan_pi_bound, scan_theta_bound, PrimeTable, PI_BOUND_MIN_X};
use effuniv::report::{Check, Provenance, Report};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::f64::consts::TAU;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "effuniv", version, about = "Effective-universality verification toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// seed for the single ChaCha8 generator behind all randomness
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// range ceiling (suite-specific default)
    #[arg(long)]
    max: Option<u64>,
    /// number of random trials (suite-specific default)
    #[arg(long)]
    trials: Option<usize>,
    /// report file or directory (append-only JSONL named by config hash)
    #[arg(long)]
    json: Option<PathBuf>,
    /// enforce theorem hypotheses
    #[arg(long, conflicts_with = "relaxed")]
    strict: bool,
    /// desk-scale mode: hypotheses reported but not enforced
    #[arg(long)]
    relaxed: bool,
    /// worker threads for range scans
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one lemma verification suite.
    Verify {
        /// pi-bound, theta-bound, arith, fractional, divisor, divisor-square,
        /// delta-error, meansquare, area-mean, linearize, phase-perturbation,
        /// taylor, boundary-push, koksma
        lemma: String,
        /// comma-separated moduli for the arithmetic suites
        #[arg(long, default_value = "1,3,5,7")]
        q: String,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate parameter validation, the error budget, and measure bounds.
    Bound {
        /// TOML parameter file (defaults to the built-in preset)
        #[arg(long)]
        config: Option<PathBuf>,
        /// built-in preset: corollary16 or hurwitz
        #[arg(long, default_value = "corollary16")]
        preset: String,
        #[command(flatten)]
        common: Common,
    },
    /// Run the approximation pipeline and write the phase file.
    Approximate {
        /// target preset: zero, or poly with --coeffs
        #[arg(long, default_value = "zero")]
        preset: String,
        /// real polynomial coefficients c0,c1,... for --preset poly
        #[arg(long)]
        coeffs: Option<String>,
        #[arg(long, default_value_t = 500_000.0)]
        rho: f64,
        /// modulus of the character (prime or 1)
        #[arg(long, default_value_t = 1)]
        q: u64,
        /// character index within the modulus
        #[arg(long, default_value_t = 0)]
        chi: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Scan tau orbits against a target box and the Koksma bound.
    Scan {
        /// comma-separated frequencies alpha_l
        #[arg(long, default_value = "0.11031862")]
        freq: String,
        /// comma-separated box centers (mod 1)
        #[arg(long, default_value = "0.5")]
        center: String,
        /// comma-separated half-widths
        #[arg(long, default_value = "0.25")]
        width: String,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long, default_value_t = 1.0e5)]
        t1: f64,
        #[arg(long, default_value_t = 1.0e-3)]
        grid_step: f64,
        /// Koksma smoothing parameter H per coordinate
        #[arg(long, default_value_t = 100.0)]
        smoothing: f64,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(all_passed) => {
            if all_passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Verify { lemma, q, common } => cmd_verify(&lemma, &q, &common),
        Cmd::Bound { config, preset, common } => cmd_bound(config.as_deref(), &preset, &common),
        Cmd::Approximate { preset, coeffs, rho, q, chi, common } => {
            cmd_approximate(&preset, coeffs.as_deref(), rho, q, chi, &common)
        }
        Cmd::Scan { freq, center, width, t0, t1, grid_step, smoothing, common } => {
            cmd_scan(&freq, &center, &width, (t0, t1), grid_step, smoothing, &common)
        }
    }
}

// ---------------------------------------------------------------------------
// plumbing
// ---------------------------------------------------------------------------

fn config_hash(desc: &str, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(desc.as_bytes());
    h.update(seed.to_le_bytes());
    let digest = h.finalize();
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

/// Print the report and append it as one JSON line to the audit file.
fn emit(report: &Report, json: &Option<PathBuf>) -> Result<bool> {
    println!("{}", serde_json::to_string_pretty(report)?);
    let line = serde_json::to_string(report)?;
    let path = match json {
        Some(p) if p.extension().is_some() => p.clone(),
        Some(dir) => dir.join(format!("report-{}.jsonl", report.provenance.config_hash)),
        None => PathBuf::from(format!("report-{}.jsonl", report.provenance.config_hash)),
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(&path)?;
    writeln!(f, "{line}")?;
    Ok(report.all_passed())
}

/// Sieve to `limit`, going through the EU_SIEVE_CACHE directory when set.
fn table(limit: u64) -> Result<PrimeTable> {
    if let Ok(dir) = std::env::var("EU_SIEVE_CACHE") {
        let path = Path::new(&dir).join(format!("sieve-{limit}.bin"));
        if let Ok(t) = PrimeTable::load_cache(&path) {
            return Ok(t);
        }
        let t = PrimeTable::sieve(limit)?;
        std::fs::create_dir_all(&dir).ok();
        t.save_cache(&path).ok();
        return Ok(t);
    }
    Ok(PrimeTable::sieve(limit)?)
}

/// All characters mod q, with q = 1 meaning just the trivial character.
fn chars_for(q: u64) -> Result<Vec<effuniv::Character>> {
    if q == 1 {
        Ok(vec![effuniv::Character::principal(1)?])
    } else {
        Ok(enumerate_characters(q)?)
    }
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| anyhow!("bad {what} entry: {s}")))
        .collect()
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(lemma: &str, q_list: &str, c: &Common) -> Result<bool> {
    let qs: Vec<u64> = parse_list(q_list, "modulus")?;
    let seed = c.seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sieve_limit = 0u64;
    let cases: Vec<Check> = match lemma {
        "pi-bound" => {
            let max = c.max.unwrap_or(10_000_000);
            sieve_limit = max;
            let t = table(max)?;
            let lo = PI_BOUND_MIN_X;
            let hi = max as f64;
            let threads = c.threads.max(1).min(32);
            if threads == 1 {
                vec![scan_pi_bound(&t, lo, hi)?]
            } else {
                let step = (hi - lo) / threads as f64;
                std::thread::scope(|s| {
                    let handles: Vec<_> = (0..threads)
                        .map(|i| {
                            let (a, b) = (lo + i as f64 * step, lo + (i + 1) as f64 * step);
                            let t = &t;
                            s.spawn(move || scan_pi_bound(t, a, b))
                        })
                        .collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("scan thread"))
                        .collect::<Vec<_>>()
                })
                .into_iter()
                .collect::<Result<Vec<_>, _>>()?
            }
        }
        "theta-bound" => {
            let max = c.max.unwrap_or(10_000_000);
            sieve_limit = max;
            vec![scan_theta_bound(&table(max)?, max as f64)?]
        }
        "arith" => {
            let range = scan_range(c, 100_000, 1_000_000);
            let mut out = Vec::new();
            for &q in &qs {
                out.push(arith_sums::scan_coprime_harmonic(q, &range));
                if q > 1 {
                    let exact = arith_sums::mobius_identities_exact(q);
                    out.push(Check::new(
                        format!("mobius-exact-q{q}"),
                        if exact { 0.0 } else { 1.0 },
                        0.0,
                    ));
                }
                if effuniv::characters::is_prime(q) {
                    out.push(verify_orthogonality(q)?);
                }
            }
            out
        }
        "fractional" => {
            let range = scan_range(c, 100_000, 1_000_000);
            let sieve = TauSieve::new(range.x_grid_max);
            qs.iter().map(|&q| arith_sums::scan_fractional_sum(q, &range, &sieve)).collect()
        }
        "divisor" => {
            let range = scan_range(c, 100_000, 1_000_000);
            let sieve = TauSieve::new(range.x_grid_max);
            qs.iter().map(|&q| arith_sums::scan_divisor_summatory(q, &range, &sieve)).collect()
        }
        "divisor-square" => {
            let range = scan_range(c, 100_000, 1_000_000);
            let sieve = TauSieve::new(range.x_grid_max);
            qs.iter().map(|&q| arith_sums::scan_divisor_square(q, &range, &sieve)).collect()
        }
        "delta-error" => {
            let max = c.max.unwrap_or(1_000_000);
            let sieve = TauSieve::new(max);
            vec![arith_sums::scan_delta(5560, max, &sieve)]
        }
        "meansquare" => {
            let trials = c.trials.unwrap_or(500);
            (0..trials)
                .map(|i| {
                    let n = rng.gen_range(1..=50usize);
                    let t = rng.gen_range(100.0..1.0e4);
                    let coeffs: Vec<Complex64> = (0..n)
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect();
                    let ms = dirichlet_meansquare(&coeffs, t);
                    Check::new(
                        format!("meansquare-{i}"),
                        (ms.exact_integral - ms.main_term).abs(),
                        ms.allowed_deviation,
                    )
                })
                .collect()
        }
        "area-mean" => {
            let trials = c.trials.unwrap_or(200);
            (0..trials)
                .map(|_| {
                    let deg = rng.gen_range(0..=8usize);
                    let big_r = rng.gen_range(0.2..1.0);
                    let small_r = big_r * rng.gen_range(0.1..0.9);
                    let coeffs: Vec<Complex64> = (0..=deg)
                        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                        .collect();
                    area_mean_bound(&coeffs, big_r, small_r)
                })
                .collect()
        }
        "linearize" => {
            let rho = 400_000.0;
            let lambda = 355_991.0;
            sieve_limit = rho as u64;
            let t = table(rho as u64)?;
            let n_primes = t.range(lambda, rho).len();
            let mut out = Vec::new();
            for &q in &qs {
                for chi in chars_for(q)? {
                    let phases: Vec<f64> =
                        (0..n_primes).map(|_| rng.gen_range(0.0..1.0)).collect();
                    for _ in 0..c.trials.unwrap_or(5) {
                        let s = Complex64::new(rng.gen_range(0.6..1.2), rng.gen_range(-5.0..5.0));
                        let lf = linearize_log_factors(s, &chi, lambda, rho, &phases, &t)?;
                        out.push(
                            Check::new("linearize", lf.exact_remainder.norm(), lf.remainder_bound)
                                .with_inputs(serde_json::json!({
                                    "q": q, "chi": chi.index(), "sigma": s.re, "t": s.im
                                })),
                        );
                    }
                }
            }
            out
        }
        "phase-perturbation" => {
            let m = 360_000.0;
            sieve_limit = m as u64;
            let t = table(m as u64)?;
            let base: Vec<(u64, f64)> =
                t.primes().iter().map(|&p| (p, rng.gen_range(0.0..1.0))).collect();
            let mut out = Vec::new();
            for &q in &qs {
                for chi in chars_for(q)? {
                    let pairs: Vec<(u64, f64, f64)> = base
                        .iter()
                        .map(|&(p, l)| (p, l, l + 1e-3 * rng.gen_range(-1.0..1.0)))
                        .collect();
                    out.push(phase_perturbation_bound(m, 0.0001, &pairs, &chi, &t));
                }
            }
            out
        }
        "taylor" => {
            let trials = c.trials.unwrap_or(50);
            (0..trials)
                .map(|_| {
                    let deg = rng.gen_range(0..=6usize);
                    let cs: Vec<Complex64> = (0..=deg)
                        .map(|_| Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)))
                        .collect();
                    let f = |s: Complex64| {
                        cs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * s + a)
                            + s.exp() * 0.1
                    };
                    let k = rng.gen_range(0..=6usize);
                    let model = taylor_truncate(&f, 0.06, 0.01, k)?;
                    Ok(model.check())
                })
                .collect::<Result<Vec<_>, effuniv::polydisc::PolydiscError>>()?
        }
        "boundary-push" => {
            let trials = c.trials.unwrap_or(100);
            let mut out = Vec::new();
            for i in 0..trials {
                let k = rng.gen_range(0..=5usize);
                let l = rng.gen_range((k + 1).max(2)..=12usize);
                let a = DMatrix::from_fn(k, l, |_, _| {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                });
                let z0 = DVector::from_fn(l, |_, _| {
                    Complex64::from_polar(rng.gen_range(0.0..0.95), rng.gen_range(0.0..TAU))
                });
                let b = &a * &z0;
                let res = push_to_boundary(&a, &b, &z0)?;
                let max_res = res.residuals.iter().cloned().fold(0.0, f64::max);
                out.push(Check::new(format!("boundary-residual-{i}"), max_res, 1e-8).with_inputs(
                    serde_json::json!({ "K": k, "L": l }),
                ));
                out.push(Check::new(
                    format!("boundary-unimodular-{i}"),
                    (l - k) as f64,
                    res.unimodular_count as f64,
                ));
            }
            out
        }
        "koksma" => {
            let trials = c.trials.unwrap_or(50);
            let freqs = [2f64.ln() / TAU, 3f64.ln() / TAU];
            let mut out = Vec::new();
            for i in 0..trials {
                let l = rng.gen_range(1..=2usize);
                let (mut a, mut b, mut al, mut h) = (vec![], vec![], vec![], vec![]);
                for j in 0..l {
                    let w = rng.gen_range(0.05..0.5);
                    let ctr = rng.gen_range(0.0..1.0);
                    a.push(ctr - w);
                    b.push(ctr + w);
                    al.push(freqs[j]);
                    h.push(rng.gen_range(10.0..60.0));
                }
                let bx = KoksmaBox::new(a.clone(), b.clone(), al.clone(), h)?;
                let t_big = [1.0e4, 1.0e5, 1.0e6][i % 3];
                let dev = koksma_deviation_bound(&bx, t_big);
                let centers: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
                let widths: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (y - x)).collect();
                let scan = tau_scan(&al, &centers, &widths, (0.0, t_big), 1e-3)?;
                out.push(
                    Check::new(
                        format!("koksma-{i}"),
                        (scan.density - bx.volume()).abs(),
                        dev.bound,
                    )
                    .with_inputs(serde_json::json!({ "L": l, "T": t_big })),
                );
            }
            out
        }
        other => bail!("unknown lemma id: {other}"),
    };
    let desc = format!("verify:{lemma}:q={q_list}:max={:?}:trials={:?}:threads={}", c.max, c.trials, c.threads);
    let report = Report::new(
        format!("verify-{lemma}"),
        cases,
        Provenance { config_hash: config_hash(&desc, seed), sieve_limit, seed },
    );
    emit(&report, &c.json)
}

fn scan_range(c: &Common, exhaustive_default: u64, grid_default: u64) -> ScanRange {
    let grid_max = c.max.unwrap_or(grid_default);
    ScanRange {
        x_lo: 3,
        x_exhaustive: exhaustive_default.min(grid_max),
        x_grid_max: grid_max,
        grid_factor: 1.02,
    }
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

fn corollary16_preset() -> UniversalityParams {
    // the corollary's parameter shape at the smallest rho where every
    // hypothesis (including the M-cap) is simultaneously satisfiable
    let rho = 552f64.exp();
    UniversalityParams {
        q: 3,
        r: 0.0001,
        big_r: 0.06,
        beta: 0.039,
        epsilon: 1.0,
        epsilon1: 0.25,
        rho,
        v: (rho / rho.ln()).sqrt(),
        theta_q: 0.0,
        max_g: 0.0,
        mode: Mode::Strict,
        log_q_override: Some(2.0 * rho / (0.25 - 0.0001) + 100.0),
    }
}

fn cmd_bound(config: Option<&Path>, preset: &str, c: &Common) -> Result<bool> {
    if preset == "hurwitz" && config.is_none() {
        return cmd_bound_hurwitz(c);
    }
    let (params, desc) = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            (UniversalityParams::from_toml_str(&text)?, text)
        }
        None => (corollary16_preset(), "preset:corollary16".into()),
    };
    let sieve_limit = 1_000_000u64;
    let t = table(sieve_limit)?;
    let mut cases = validate(&params, &t);

    let mut payload = serde_json::json!({ "params": params });
    if let Ok(da) = params.delta_alpha() {
        payload["delta_alpha"] = serde_json::to_value(da)?;
        if let Ok(budget) = error_budget(&params) {
            payload["budget"] = serde_json::to_value(&budget)?;
            let non_eps = budget.total - budget.epsilon_term;
            cases.push(
                Check::new("budget-half-epsilon", non_eps, params.epsilon / 2.0)
                    .with_tolerance(1e-6),
            );
        }
        let a = a_of_r(params.r, da.delta);
        payload["a_of_r"] = serde_json::to_value(a)?;
    }
    let log_t = params.log_t_threshold();
    payload["log_t_threshold"] = serde_json::json!({
        "level": log_t.level(), "mantissa": log_t.mantissa()
    });
    let mb = measure_lower_bound(&params, &t);
    payload["measure"] = serde_json::json!({
        "v_term_ln": mb.v_term.ln_f64(),
        "j_term_ln": mb.j_term.ln_f64(),
        "positive": mb.positive,
        "density_ln": mb.density.as_ref().and_then(|d| d.ln_f64()),
    });
    // the corollary's floor eps1 e^{-(q-1) rho} in log space
    let claimed = params.epsilon1.ln() - (params.q - 1) as f64 * params.rho;
    if let Some(actual) = mb.v_term.ln_f64() {
        cases.push(
            Check::new("corollary-density-floor", claimed, actual)
                .with_inputs(serde_json::json!({ "log_density": claimed })),
        );
    }
    println!("{}", serde_json::to_string_pretty(&payload)?);

    let report = Report::new(
        "bound",
        cases,
        Provenance { config_hash: config_hash(&desc, c.seed), sieve_limit, seed: c.seed },
    );
    emit(&report, &c.json)
}

fn cmd_bound_hurwitz(c: &Common) -> Result<bool> {
    // Hurwitz preset: constant target 0.5 on the disc, alpha = 2/5
    let (q, p, eps, r) = (5u64, 2u64, 1e-4, 0.0001);
    let setup = corollary5_setup(&|_| Complex64::new(0.5, 0.0), p, q, eps, r)
        .map_err(|e| anyhow!("hurwitz setup: {e}"))?;
    let rho = 8.0e6;
    let density = corollary5_density(&setup, rho);
    let payload = serde_json::json!({
        "q": q, "p": p, "epsilon": eps, "r": r, "rho": rho,
        "C": setup.c,
        "epsilon1": setup.epsilon1,
        "epsilon2": setup.epsilon2,
        "targets": setup.targets.len(),
        "log_q": density.log_q,
        "log_density": density.log_density,
    });
    println!("{}", serde_json::to_string_pretty(&payload)?);
    let cases = vec![
        Check::new("epsilon2-le-1", setup.epsilon2, 1.0),
        setup.nonvanishing.clone(),
        setup.reconstruction.clone(),
    ];
    let report = Report::new(
        "bound-hurwitz",
        cases,
        Provenance {
            config_hash: config_hash("preset:hurwitz", c.seed),
            sieve_limit: 0,
            seed: c.seed,
        },
    );
    emit(&report, &c.json)
}

// ---------------------------------------------------------------------------
// approximate
// ---------------------------------------------------------------------------

fn cmd_approximate(
    preset: &str,
    coeffs: Option<&str>,
    rho: f64,
    q: u64,
    chi_index: usize,
    c: &Common,
) -> Result<bool> {
    let cs: Vec<f64> = match (preset, coeffs) {
        ("zero", _) => vec![],
        ("poly", Some(text)) => parse_list(text, "coefficient")?,
        ("poly", None) => bail!("--preset poly needs --coeffs"),
        (other, _) => bail!("unknown target preset: {other}"),
    };
    let g = move |s: Complex64| {
        cs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * s + a)
    };
    let mode = if c.strict { Mode::Strict } else { Mode::Relaxed };
    let chars = chars_for(q)?;
    let chi = chars
        .get(chi_index)
        .ok_or_else(|| anyhow!("character index {chi_index} out of range for q={q}"))?;
    let sieve_limit = rho as u64;
    let t = table(sieve_limit)?;
    let max_g = (0..64)
        .map(|i| g(Complex64::from_polar(0.06, TAU * i as f64 / 64.0)).norm())
        .fold(0.0, f64::max);
    let params = UniversalityParams {
        q,
        r: 0.0001,
        big_r: 0.06,
        beta: 0.039,
        epsilon: 1.0,
        epsilon1: 0.25,
        rho,
        v: (rho / rho.ln()).sqrt().max(50.0),
        theta_q: 0.0,
        max_g,
        mode,
        log_q_override: Some(2.0 * rho / 0.2499 + 100.0),
    };
    if mode == Mode::Strict {
        let failed: Vec<String> = validate(&params, &t)
            .into_iter()
            .filter(|ck| !ck.pass)
            .map(|ck| ck.id)
            .collect();
        if !failed.is_empty() {
            bail!("strict mode refused; violated hypotheses: {}", failed.join(", "));
        }
    }
    let result = prop1_pipeline(&g, chi, &params, &t).map_err(|e| anyhow!("pipeline: {e}"))?;

    let desc = format!("approximate:{preset}:{coeffs:?}:rho={rho}:q={q}:chi={chi_index}:{mode:?}");
    let hash = config_hash(&desc, c.seed);
    let phase_path = match &c.json {
        Some(p) if p.extension().is_none() => p.join(format!("phases-{hash}.json")),
        _ => PathBuf::from(format!("phases-{hash}.json")),
    };
    if let Some(parent) = phase_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(
        &phase_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "schema": 1,
            "rho": rho,
            "lambda": result.lambda,
            "K": result.k,
            "phases": result.phases,
        }))?,
    )?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "empirical_defect": result.empirical_defect,
            "theoretical_bound": result.theoretical_bound,
            "bound_terms": result.bound_terms,
            "hypothesis_k": result.hypothesis_k,
            "hypothesis_w": result.hypothesis_w,
            "phase_file": phase_path,
        }))?
    );

    let mut cases = vec![
        result.taylor.check(),
        result.alternating.a_q_check.clone(),
        result.dyadic.check.clone(),
    ];
    if let Some(strict) = &result.strict_check {
        cases.push(strict.clone());
    } else {
        cases.push(
            Check::new("prop1-defect-relaxed", result.empirical_defect, f64::MAX).with_inputs(
                serde_json::json!({ "theoretical_bound": result.theoretical_bound }),
            ),
        );
    }
    let report = Report::new(
        "approximate",
        cases,
        Provenance { config_hash: hash, sieve_limit, seed: c.seed },
    );
    emit(&report, &c.json)
}

// ---------------------------------------------------------------------------
// scan
// ---------------------------------------------------------------------------

fn cmd_scan(
    freq: &str,
    center: &str,
    width: &str,
    t_range: (f64, f64),
    grid_step: f64,
    smoothing: f64,
    c: &Common,
) -> Result<bool> {
    let freqs: Vec<f64> = parse_list(freq, "frequency")?;
    let centers: Vec<f64> = parse_list(center, "center")?;
    let widths: Vec<f64> = parse_list(width, "width")?;
    let scan = tau_scan(&freqs, &centers, &widths, t_range, grid_step)?;

    let desc = format!("scan:{freq}:{center}:{width}:{t_range:?}:{grid_step}:{smoothing}");
    let hash = config_hash(&desc, c.seed);
    let interval_path = match &c.json {
        Some(p) if p.extension().is_none() => p.join(format!("intervals-{hash}.json")),
        _ => PathBuf::from(format!("intervals-{hash}.json")),
    };
    if let Some(parent) = interval_path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(
        &interval_path,
        serde_json::to_string_pretty(&serde_json::json!({
            "schema": 1,
            "intervals": scan.intervals,
            "total_measure": scan.total_measure,
            "density": scan.density,
            "expected": scan.expected,
            "best_tau": scan.best_tau,
        }))?,
    )?;
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({
            "hits": scan.intervals.len(),
            "density": scan.density,
            "expected": scan.expected,
            "interval_file": interval_path,
        }))?
    );

    let cases = if widths.iter().any(|&w| w <= 0.0) {
        // degenerate box: empty hit set, nothing further to bound
        vec![Check::new("scan-empty", scan.total_measure, 0.0)]
    } else {
        let a: Vec<f64> = centers.iter().zip(&widths).map(|(c, w)| c - w).collect();
        let b: Vec<f64> = centers.iter().zip(&widths).map(|(c, w)| c + w).collect();
        let bx = KoksmaBox::new(a, b, freqs.clone(), vec![smoothing; freqs.len()])?;
        let dev = koksma_deviation_bound(&bx, t_range.1 - t_range.0);
        vec![Check::new("scan-koksma", (scan.density - bx.volume()).abs(), dev.bound)
            .with_inputs(serde_json::json!({ "truncated": dev.truncated }))]
    };
    let report = Report::new(
        "scan",
        cases,
        Provenance { config_hash: hash, sieve_limit: 0, seed: c.seed },
    );
    emit(&report, &c.json)
}
