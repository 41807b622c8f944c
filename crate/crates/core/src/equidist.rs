//! Quantitative equidistribution machinery: the smoothed Koksma/Weyl
//! box-hitting bound, the target-box layout of the measure proposition,
//! the exponential-integral inequality, the phase-perturbation bound, and
//! an exact desk-scale tau-scanner.

use crate::characters::Character;
use crate::magnitude::Magnitude;
use crate::primes::PrimeTable;
use crate::report::Check;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EquidistError {
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("phase table size mismatch: {0}")]
    SizeMismatch(String),
    #[error("grid step {step} too coarse; need <= {need}")]
    GridTooCoarse { step: f64, need: f64 },
}

/// A smoothed box for the Koksma-type bound: target intervals [a_l, b_l]
/// (mod 1) with widths in (0, 1], frequencies alpha_l, and smoothing
/// parameters H_l > 1.
#[derive(Debug, Clone)]
pub struct KoksmaBox {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub alpha: Vec<f64>,
    pub h: Vec<f64>,
}

impl KoksmaBox {
    pub fn new(a: Vec<f64>, b: Vec<f64>, alpha: Vec<f64>, h: Vec<f64>) -> Result<KoksmaBox, EquidistError> {
        let l = a.len();
        if b.len() != l || alpha.len() != l || h.len() != l {
            return Err(EquidistError::SizeMismatch(format!(
                "a/b/alpha/H lengths {l}/{}/{}/{}",
                b.len(),
                alpha.len(),
                h.len()
            )));
        }
        for i in 0..l {
            if !(b[i] > a[i] && b[i] - a[i] <= 1.0) {
                return Err(EquidistError::Domain(format!("need 0 < b-a <= 1 at {i}")));
            }
            if h[i] <= 1.0 {
                return Err(EquidistError::Domain(format!("need H > 1 at {i}")));
            }
        }
        Ok(KoksmaBox { a, b, alpha, h })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn volume(&self) -> f64 {
        self.a.iter().zip(&self.b).map(|(a, b)| b - a).product()
    }

    /// gamma_{h,l}: b-a + 75/H at h = 0, else min(gamma_0, 30/|h|).
    pub fn gamma(&self, h: i64, l: usize) -> f64 {
        let g0 = self.b[l] - self.a[l] + 75.0 / self.h[l];
        if h == 0 {
            g0
        } else {
            g0.min(30.0 / h.abs() as f64)
        }
    }

    /// primed-sum range: |h_l| <= H_l (1 + min(log H_l, log L)).
    pub fn h_cap(&self, l: usize) -> i64 {
        let ll = (self.len() as f64).ln();
        (self.h[l] * (1.0 + self.h[l].ln().min(ll).max(0.0))).floor() as i64
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KoksmaDeviation {
    /// prod(b-a) (prod(1 + 75/(H_l (b_l - a_l))) - 1)
    pub smoothing_term: f64,
    /// (1/T) sum' min(|pi sum alpha_l h_l|^{-1}, T) prod gamma
    pub sum_term: f64,
    pub bound: f64,
    /// true when the primed sum had to be truncated
    pub truncated: bool,
    /// crude overestimate of the dropped part (weight <= T, gamma tails)
    pub remainder_estimate: f64,
}

const ENUM_LIMIT: f64 = 2.0e7;

/// Full right-hand side of the smoothed box-hitting lemma. The primed sum
/// is enumerated exactly for L <= 3 with per-coordinate ranges <= 10^4 and
/// a total term count within budget; otherwise ranges are capped and the
/// dropped tail is over-estimated by T times the gamma-product excess.
pub fn koksma_deviation_bound(bx: &KoksmaBox, t: f64) -> KoksmaDeviation {
    assert!(t > 0.0);
    let l = bx.len();
    let vol = bx.volume();
    let smoothing_term = vol
        * ((0..l).map(|i| 1.0 + 75.0 / (bx.h[i] * (bx.b[i] - bx.a[i]))).product::<f64>() - 1.0);

    let caps: Vec<i64> = (0..l).map(|i| bx.h_cap(i)).collect();
    let total: f64 = caps.iter().map(|&c| 2.0 * c as f64 + 1.0).product();
    let exact = l <= 3 && caps.iter().all(|&c| c <= 10_000) && total <= ENUM_LIMIT;
    let used: Vec<i64> = if exact {
        caps.clone()
    } else {
        // shrink uniformly until the odometer fits the budget
        let mut f = (ENUM_LIMIT / total).powf(1.0 / l as f64);
        if f > 1.0 {
            f = 1.0;
        }
        caps.iter().map(|&c| ((c as f64 * f) as i64).max(1).min(10_000)).collect()
    };

    // odometer over h in prod [-used_l, used_l], skipping h = 0
    let mut h = vec![0i64; l];
    for i in 0..l {
        h[i] = -used[i];
    }
    let mut sum = 0.0f64;
    'outer: loop {
        if h.iter().any(|&x| x != 0) {
            let dot: f64 = h.iter().zip(&bx.alpha).map(|(&hh, &a)| hh as f64 * a).sum();
            let weight = if dot == 0.0 { t } else { (1.0 / (PI * dot).abs()).min(t) };
            let prod: f64 = (0..l).map(|i| bx.gamma(h[i], i)).product();
            sum += weight * prod;
        }
        let mut i = 0;
        loop {
            if i == l {
                break 'outer;
            }
            h[i] += 1;
            if h[i] <= used[i] {
                break;
            }
            h[i] = -used[i];
            i += 1;
        }
    }
    let sum_term = sum / t;

    let remainder_estimate = if exact {
        0.0
    } else {
        let full: f64 = (0..l)
            .map(|i| {
                bx.gamma(0, i) + 2.0 * (1..=caps[i]).map(|hh| bx.gamma(hh, i)).sum::<f64>()
            })
            .product();
        let kept: f64 = (0..l)
            .map(|i| {
                bx.gamma(0, i) + 2.0 * (1..=used[i]).map(|hh| bx.gamma(hh, i)).sum::<f64>()
            })
            .product();
        (full - kept).max(0.0)
    };
    KoksmaDeviation {
        smoothing_term,
        sum_term,
        bound: smoothing_term + sum_term + remainder_estimate,
        truncated: !exact,
        remainder_estimate,
    }
}

// ---------------------------------------------------------------------------
// Target-box layout
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TargetBox {
    pub koksma: KoksmaBox,
    pub j: u64,
    /// 1 iff q <= rho
    pub n_rho: u32,
    /// (q-1)(pi(rho) - n(rho)) character-phase coordinates, width 1/V
    pub char_coords: usize,
    /// pi(Q) - pi(rho) - 1 + n(rho) coordinates for (rho, Q], width 1/J
    pub mid_coords: usize,
}

/// The exact coordinate layout of the measure proposition's target box:
/// per-character phase targets for p <= rho (width 1/V), theta-targets for
/// the primes in (rho, Q] other than q (width 1/J with
/// J = floor(V (Q/rho)^{1/4+r})), and the final theta_q coordinate of
/// width epsilon_1. Frequencies are log p/(2 pi) in prime order;
/// H = 217 (q-1) J Q with H_l = H/log Q except H_L = H/(eps1 J log Q).
#[allow(clippy::too_many_arguments)]
pub fn build_target_box(
    q: u64,
    rho: f64,
    big_q: f64,
    v: f64,
    r: f64,
    eps1: f64,
    lambda_phases: &[Vec<f64>],
    theta_phases: &[f64],
    theta_q: f64,
    table: &PrimeTable,
) -> Result<TargetBox, EquidistError> {
    if !(rho < big_q && big_q <= table.limit() as f64) {
        return Err(EquidistError::Domain(format!("need rho < Q <= sieve limit, got {rho}, {big_q}")));
    }
    if !(0.0..1.0).contains(&theta_q) {
        return Err(EquidistError::Domain(format!("theta_q {theta_q} outside [0,1)")));
    }
    let j = (v * (big_q / rho).powf(0.25 + r)).floor() as u64;
    if j < 1 {
        return Err(EquidistError::Domain("J < 1".into()));
    }
    let n_rho: u32 = if (q as f64) <= rho { 1 } else { 0 };
    let small: Vec<u64> =
        table.range(1.0, rho).iter().cloned().filter(|&p| p != q).collect();
    let mid: Vec<u64> =
        table.range(rho, big_q).iter().cloned().filter(|&p| p != q).collect();
    let pi_rho = table.pi(rho) as usize;
    let pi_q_big = table.pi(big_q) as usize;
    if small.len() != pi_rho - n_rho as usize {
        return Err(EquidistError::SizeMismatch("small-prime count".into()));
    }
    if mid.len() != pi_q_big - pi_rho - 1 + n_rho as usize {
        return Err(EquidistError::SizeMismatch("mid-prime count".into()));
    }
    if lambda_phases.len() != (q - 1) as usize
        || lambda_phases.iter().any(|v| v.len() != small.len())
    {
        return Err(EquidistError::SizeMismatch(format!(
            "need {} lambda-phase vectors of length {}",
            q - 1,
            small.len()
        )));
    }
    if theta_phases.len() != mid.len() {
        return Err(EquidistError::SizeMismatch(format!(
            "need {} theta-phases, got {}",
            mid.len(),
            theta_phases.len()
        )));
    }
    let l_total = (q - 1) as usize * small.len() + mid.len() + 1;
    let mut a = Vec::with_capacity(l_total);
    let mut b = Vec::with_capacity(l_total);
    let mut alpha = Vec::with_capacity(l_total);
    for phases in lambda_phases {
        for (m, &p) in small.iter().enumerate() {
            a.push(phases[m] - 0.5 / v);
            b.push(phases[m] + 0.5 / v);
            alpha.push((p as f64).ln() / TAU);
        }
    }
    for (m, &p) in mid.iter().enumerate() {
        a.push(theta_phases[m] - 0.5 / j as f64);
        b.push(theta_phases[m] + 0.5 / j as f64);
        alpha.push((p as f64).ln() / TAU);
    }
    a.push(theta_q - eps1 / 2.0);
    b.push(theta_q + eps1 / 2.0);
    alpha.push((q as f64).ln() / TAU);

    let h_big = 217.0 * (q - 1) as f64 * j as f64 * big_q;
    let mut h = vec![h_big / big_q.ln(); l_total - 1];
    h.push(h_big / (eps1 * j as f64 * big_q.ln()));
    Ok(TargetBox {
        koksma: KoksmaBox::new(a, b, alpha, h)?,
        j,
        n_rho,
        char_coords: (q - 1) as usize * small.len(),
        mid_coords: mid.len(),
    })
}

// ---------------------------------------------------------------------------
// Exponential integral
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct EiUpper {
    /// e^x/x (1 + 1/x + 3/x^2)
    pub value: Magnitude,
    /// the lemma asserts the inequality for x >= e^13
    pub inequality_applies: bool,
}

/// The claimed upper bound on Ei(x), in tower space (x may exceed 709).
pub fn ei_upper(x: f64) -> EiUpper {
    assert!(x >= 1.0);
    EiUpper {
        value: Magnitude::from_ln(x - x.ln() + (1.0 / x + 3.0 / (x * x)).ln_1p()),
        inequality_applies: x >= 13f64.exp(),
    }
}

/// Ei(x) for 0 < x <= 700 by the regularization
/// Ei(x) = gamma + log x + int_0^x (e^t - 1)/t dt (composite Simpson).
pub fn ei_numeric(x: f64) -> f64 {
    assert!(x > 0.0 && x <= 700.0);
    let n = 40_000; // even
    let f = |t: f64| if t == 0.0 { 1.0 } else { t.exp_m1() / t };
    let h = x / n as f64;
    let mut s = f(0.0) + f(x);
    for i in 1..n {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    crate::arith_sums::EULER_GAMMA + x.ln() + s * h / 3.0
}

/// Asymptotic series e^x/x sum k!/x^k truncated at its smallest term;
/// returns (value, remainder bound = first omitted term).
pub fn ei_asymptotic(x: f64) -> (f64, f64) {
    assert!(x >= 50.0 && x <= 708.0);
    let lead = x.exp() / x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 1.0f64;
    loop {
        let next = term * k / x;
        if next >= term || k > 40.0 {
            return (lead * sum, lead * next);
        }
        sum += next;
        term = next;
        k += 1.0;
    }
}

/// Ei(x) against its claimed bound on a numerically feasible x.
pub fn ei_check(x: f64) -> Check {
    let measured = ei_numeric(x);
    let bound = x.exp() / x * (1.0 + 1.0 / x + 3.0 / (x * x));
    Check::new("ei-upper", measured, bound).with_inputs(serde_json::json!({ "x": x }))
}

// ---------------------------------------------------------------------------
// Phase perturbation
// ---------------------------------------------------------------------------

/// circle distance ||x|| to the nearest integer
fn circle_norm(x: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    f.min(1.0 - f)
}

/// Perturbation lemma: two log-Euler sums over p <= M whose phase tables
/// differ by at most max||lambda_p - lambda'_p|| stay within
/// 184 M^{1/4+r}/log M times that distance, on |s| <= r.
pub fn phase_perturbation_bound(
    m: f64,
    r: f64,
    pairs: &[(u64, f64, f64)],
    chi: &Character,
    _table: &PrimeTable,
) -> Check {
    let max_delta = pairs
        .iter()
        .map(|&(_, l1, l2)| circle_norm(l1 - l2))
        .fold(0.0, f64::max);
    let mut grid = vec![Complex64::new(0.0, 0.0)];
    for i in 0..16 {
        grid.push(Complex64::from_polar(r, TAU * i as f64 / 16.0));
    }
    let measured = grid
        .iter()
        .map(|&s| {
            let mut d = Complex64::new(0.0, 0.0);
            for &(p, l1, l2) in pairs {
                let pw = ((-s - 0.75) * (p as f64).ln()).exp();
                let x1 = chi.value(p) * Complex64::from_polar(1.0, -TAU * l1) * pw;
                let x2 = chi.value(p) * Complex64::from_polar(1.0, -TAU * l2) * pw;
                d += (Complex64::new(1.0, 0.0) - x1).ln() - (Complex64::new(1.0, 0.0) - x2).ln();
            }
            d.norm()
        })
        .fold(0.0, f64::max);
    let bound = 184.0 * m.powf(0.25 + r) / m.ln() * max_delta;
    Check::new("phase-perturbation", measured, bound).with_inputs(
        serde_json::json!({ "M": m, "r": r, "max_delta": max_delta, "primes": pairs.len() }),
    )
}

// ---------------------------------------------------------------------------
// Tau scan
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct TauScan {
    /// maximal hit intervals, ordered by start
    pub intervals: Vec<(f64, f64)>,
    pub total_measure: f64,
    /// total measure / |T_range|
    pub density: f64,
    /// prod 2 w_l
    pub expected: f64,
    pub best_tau: Option<f64>,
}

/// intervals of tau in [t0, t1] with ||tau alpha - c|| <= w, sorted
fn coordinate_intervals(alpha: f64, c: f64, w: f64, t0: f64, t1: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let k_lo = (t0 * alpha - c - w).floor() as i64 - 1;
    let k_hi = (t1 * alpha - c + w).ceil() as i64 + 1;
    for k in k_lo..=k_hi {
        let lo = ((k as f64 + c - w) / alpha).max(t0);
        let hi = ((k as f64 + c + w) / alpha).min(t1);
        if hi > lo {
            out.push((lo, hi));
        }
    }
    out
}

fn intersect(xs: &[(f64, f64)], ys: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        let lo = xs[i].0.max(ys[j].0);
        let hi = xs[i].1.min(ys[j].1);
        if hi > lo {
            out.push((lo, hi));
        }
        if xs[i].1 < ys[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

/// All maximal intervals of {tau in T_range : ||tau alpha_l - c_l|| <= w_l
/// for every l}, by exact per-coordinate interval enumeration and sweep
/// intersection (the grid step is only validated as the Lipschitz guard the
/// caller asked for; the enumeration itself cannot skip hits).
pub fn tau_scan(
    frequencies: &[f64],
    centers: &[f64],
    half_widths: &[f64],
    t_range: (f64, f64),
    grid_step: f64,
) -> Result<TauScan, EquidistError> {
    let l = frequencies.len();
    if centers.len() != l || half_widths.len() != l || l == 0 {
        return Err(EquidistError::SizeMismatch("frequencies/centers/widths".into()));
    }
    if l > 12 {
        return Err(EquidistError::Domain(format!("L = {l} > 12")));
    }
    let (t0, t1) = t_range;
    if !(t1 > t0) {
        return Err(EquidistError::Domain("empty T range".into()));
    }
    let expected: f64 = half_widths.iter().map(|w| 2.0 * w).product();
    if half_widths.iter().any(|&w| w <= 0.0) {
        return Ok(TauScan {
            intervals: vec![],
            total_measure: 0.0,
            density: 0.0,
            expected,
            best_tau: None,
        });
    }
    let max_alpha = frequencies.iter().cloned().fold(0.0, f64::max);
    let need = half_widths.iter().cloned().fold(f64::INFINITY, f64::min) / (TAU * max_alpha);
    if grid_step > need {
        return Err(EquidistError::GridTooCoarse { step: grid_step, need });
    }
    let mut hits = coordinate_intervals(frequencies[0], centers[0], half_widths[0], t0, t1);
    for i in 1..l {
        let next = coordinate_intervals(frequencies[i], centers[i], half_widths[i], t0, t1);
        hits = intersect(&hits, &next);
        if hits.is_empty() {
            break;
        }
    }
    let total_measure: f64 = hits.iter().map(|(a, b)| b - a).sum();
    let best_tau = hits
        .iter()
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))
        .map(|&(a, b)| 0.5 * (a + b));
    Ok(TauScan {
        intervals: hits,
        total_measure,
        density: total_measure / (t1 - t0),
        expected,
        best_tau,
    })
}
