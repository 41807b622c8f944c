//! Parameter validation, error-budget assembly, and log-space measure
//! bounds for the main effective-universality theorem and its corollaries,
//! including the Hurwitz (rational-parameter) application setup.

use crate::characters::{enumerate_characters, is_prime};
use crate::magnitude::Magnitude;
use crate::primes::PrimeTable;
use crate::report::Check;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("domain violation: {0}")]
    Domain(String),
    #[error("config parse error: {0}")]
    Config(#[from] toml::de::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Strict,
    Relaxed,
}

impl Default for Mode {
    fn default() -> Mode {
        Mode::Strict
    }
}

/// Full parameter set of the main theorem. `max_g` is the sup of the
/// target functions on |s| <= R (the theorem's M subtracts its additive
/// constant); Q defaults to its minimal admissible value exp(q^8).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UniversalityParams {
    pub q: u64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub rho: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(default)]
    pub theta_q: f64,
    #[serde(default)]
    pub max_g: f64,
    #[serde(default)]
    pub mode: Mode,
    /// natural log of Q; None means the minimal choice q^8.
    #[serde(default)]
    pub log_q_override: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeltaAlpha {
    pub delta: f64,
    pub alpha: f64,
    pub alpha_positive: bool,
    /// the admissible ceiling delta e^{-1 - 1/(4 delta)} on r
    pub r_ceiling: f64,
    pub r_ok: bool,
}

/// delta = (1/4 - R - beta)/log(e/(2R)) and alpha = delta log(delta/(e r)) - 1/4.
pub fn derive_delta_alpha(big_r: f64, beta: f64, r: f64) -> Result<DeltaAlpha, BoundsError> {
    if !(0.0 < r && r < big_r && big_r < 0.25) {
        return Err(BoundsError::Domain(format!("need 0 < r < R < 1/4, got r={r}, R={big_r}")));
    }
    if !(beta > 0.0 && beta + big_r < 0.25) {
        return Err(BoundsError::Domain(format!("need 0 < beta, beta + R < 1/4, got beta={beta}")));
    }
    let delta = (0.25 - big_r - beta) / (E / (2.0 * big_r)).ln();
    let alpha = delta * (delta / (E * r)).ln() - 0.25;
    let r_ceiling = delta * (-1.0 - 1.0 / (4.0 * delta)).exp();
    Ok(DeltaAlpha { delta, alpha, alpha_positive: alpha > 0.0, r_ceiling, r_ok: r < r_ceiling })
}

impl UniversalityParams {
    pub fn from_toml_str(text: &str) -> Result<UniversalityParams, BoundsError> {
        Ok(toml::from_str(text)?)
    }

    pub fn delta_alpha(&self) -> Result<DeltaAlpha, BoundsError> {
        derive_delta_alpha(self.big_r, self.beta, self.r)
    }

    /// M = max|g| + 1.5 + 3.42/(1 - 4R).
    pub fn m(&self) -> f64 {
        self.max_g + 1.5 + 3.42 / (1.0 - 4.0 * self.big_r)
    }

    /// K = floor(delta log rho).
    pub fn k(&self) -> u32 {
        let delta = self.delta_alpha().map(|d| d.delta).unwrap_or(0.0);
        (delta * self.rho.ln()).floor().max(0.0) as u32
    }

    /// lambda = rho e^{-4K}.
    pub fn lambda(&self) -> f64 {
        self.rho * (-4.0 * self.k() as f64).exp()
    }

    pub fn q_magnitude(&self) -> Magnitude {
        match self.log_q_override {
            Some(l) => Magnitude::from_ln(l),
            None => Magnitude::from_ln((self.q as f64).powi(8)),
        }
    }

    /// The two-branch log T threshold. The second branch's lower-order
    /// scalar terms (the 434 log q and 217 log log q pieces) are dropped
    /// when Q itself overflows doubles; they are then below the mantissa's
    /// resolution anyway.
    pub fn log_t_threshold(&self) -> Magnitude {
        log_t_threshold(self.q, self.r, self.epsilon1, self.rho, self.v, &self.q_magnitude())
    }
}

pub fn log_t_threshold(
    q: u64,
    r: f64,
    epsilon1: f64,
    rho: f64,
    v: f64,
    q_mag: &Magnitude,
) -> Magnitude {
    let branch1 = q_mag
        .add_f64(-872.0)
        .scale(1.02 * (0.75 + r) / (0.25 - r))
        .add(&Magnitude::from_value(PI.ln()));
    let qm1 = (q - 1) as f64;
    let scalar = if q >= 3 {
        434.0 * (1.0 / epsilon1 - qm1) * (q as f64).ln()
            + 217.0 * (q as f64 - 2.0) * (q as f64).ln().ln()
    } else {
        434.0 * (1.0 / epsilon1 - qm1) * (q as f64).ln()
    };
    let inner = match q_mag.to_f64() {
        Some(qv) => Magnitude::from_value((241.0 * qm1 * qv + scalar).max(f64::MIN_POSITIVE)),
        None => q_mag.scale(241.0 * qm1),
    };
    let branch2 = q_mag
        .div(&Magnitude::from_value(rho))
        .powf(0.5)
        .scale(v * qm1)
        .mul(q_mag)
        .mul(&inner);
    if branch1 >= branch2 {
        branch1
    } else {
        branch2
    }
}

/// pi(rho) as an interval: exact from the sieve in range, otherwise
/// x/log x < pi(x) (x >= 17) below and 1.094 x/log x above (x >= 355991).
pub fn pi_rho_interval(rho: f64, table: &PrimeTable) -> (f64, f64) {
    if rho <= table.limit() as f64 {
        let exact = table.pi(rho) as f64;
        (exact, exact)
    } else {
        (rho / rho.ln(), 1.094 * rho / rho.ln())
    }
}

/// Every hypothesis of the main theorem as a pass/fail check with slack.
pub fn validate(params: &UniversalityParams, table: &PrimeTable) -> Vec<Check> {
    let mut out = Vec::new();
    let p = params;
    out.push(Check::new("q-prime", if is_prime(p.q) { 0.0 } else { 1.0 }, 0.0)
        .with_inputs(serde_json::json!({ "q": p.q })));
    out.push(Check::new("epsilon-le-1", p.epsilon, 1.0));
    out.push(Check::new("epsilon1-cap", 1.003 * p.epsilon1, 1.0));
    out.push(Check::new("r-lt-R", p.r, p.big_r - f64::EPSILON));
    out.push(Check::new("R-lt-quarter", p.big_r, 0.25 - f64::EPSILON));
    out.push(Check::new("beta-plus-R", p.beta + p.big_r, 0.25 - f64::EPSILON));
    match p.delta_alpha() {
        Ok(da) => {
            out.push(Check::new("r-ceiling", p.r, da.r_ceiling)
                .with_inputs(serde_json::json!({ "delta": da.delta, "ceiling": da.r_ceiling })));
            out.push(Check::new("alpha-positive", 0.0, da.alpha)
                .with_inputs(serde_json::json!({ "alpha": da.alpha })));
            let rho_min = 355991f64.powf(1.0 / (1.0 - 4.0 * da.delta));
            out.push(Check::new("rho-min", rho_min, p.rho)
                .with_inputs(serde_json::json!({ "rho_min": rho_min, "rho": p.rho })));
            let m_cap = p.rho.powf(p.beta) / (5.0 * E * da.delta.powi(3) * p.rho.ln().powi(4));
            out.push(Check::new("m-cap", p.m(), m_cap)
                .with_inputs(serde_json::json!({ "M": p.m(), "cap": m_cap })));
        }
        Err(e) => out.push(
            Check::new("delta-domain", 1.0, 0.0).with_inputs(serde_json::json!(e.to_string())),
        ),
    }
    out.push(Check::new("V-lo", 50.0, p.v));
    out.push(Check::new("V-le-rho", p.v, p.rho));
    let q_mag = p.q_magnitude();
    let q_min = Magnitude::from_ln((p.q as f64).powi(8));
    out.push(
        Check::new("Q-exp-q8", if q_mag >= q_min { 0.0 } else { 1.0 }, 0.0)
            .with_inputs(serde_json::json!({ "log_Q_min": (p.q as f64).powi(8) })),
    );
    out.push(Check::new(
        "rho-lt-Q",
        if Magnitude::from_value(p.rho) < q_mag { 0.0 } else { 1.0 },
        0.0,
    ));
    let (lo, hi) = pi_rho_interval(p.rho, table);
    out.push(Check::new("pi-rho-interval", lo, hi)
        .with_inputs(serde_json::json!({ "rho": p.rho, "pi_lo": lo, "pi_hi": hi })));
    out
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorBudget {
    pub taylor_term: f64,
    pub alpha_term: f64,
    pub tail_term: f64,
    pub square_term: f64,
    pub epsilon_term: f64,
    pub weyl_term: f64,
    pub block_term: f64,
    pub total: f64,
}

impl ErrorBudget {
    pub fn terms(&self) -> [f64; 7] {
        [
            self.taylor_term,
            self.alpha_term,
            self.tail_term,
            self.square_term,
            self.epsilon_term,
            self.weyl_term,
            self.block_term,
        ]
    }
}

/// The seven-term error display of the main theorem's conclusion.
pub fn error_budget(params: &UniversalityParams) -> Result<ErrorBudget, BoundsError> {
    let da = params.delta_alpha()?;
    let (rho, r, big_r) = (params.rho, params.r, params.big_r);
    let lg = rho.ln();
    let taylor_term = params.m() / ((big_r / r - 1.0) * rho.powf(da.delta * (big_r / r).ln()));
    let alpha_term = 3.0 / (rho.powf(da.alpha) * lg);
    let tail_term = 3.0 * lg / rho.powf((1.0 - 4.0 * da.delta) * (0.75 - r));
    let square_term = 3.0 / (rho.powf((1.0 - 4.0 * da.delta) * (0.5 - 2.0 * r)) * lg);
    let epsilon_term = params.epsilon;
    let weyl_term = 188.0 * rho.powf(0.25 + r) / (params.v * lg);
    let block_term = (3.0 - 4.0 * r) / (1.0 - 4.0 * r) * 16.0 / (rho.powf(0.25 - r) * lg.sqrt());
    let b = ErrorBudget {
        taylor_term,
        alpha_term,
        tail_term,
        square_term,
        epsilon_term,
        weyl_term,
        block_term,
        total: taylor_term + alpha_term + tail_term + square_term + epsilon_term + weyl_term
            + block_term,
    };
    Ok(b)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct AOfR {
    pub terms: [f64; 5],
    pub total: f64,
}

/// The corollary's budget constant a(r):
/// (1-4d)^4 (1/4-r)^4/(47920 e d^3) + 3 + (9/2)(1-4d)(1/4-r)
/// + 188 sqrt((1-4d)(1/4-r)/2) + 16 (3-4r)/(1-4r) sqrt((1-4d)(1/4-r)/2).
pub fn a_of_r(r: f64, delta: f64) -> AOfR {
    let u = 1.0 - 4.0 * delta;
    let w = 0.25 - r;
    let root = (u * w / 2.0).sqrt();
    let terms = [
        u.powi(4) * w.powi(4) / (47920.0 * E * delta.powi(3)),
        3.0,
        4.5 * u * w,
        188.0 * root,
        16.0 * (3.0 - 4.0 * r) / (1.0 - 4.0 * r) * root,
    ];
    AOfR { terms, total: terms.iter().sum() }
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureBound {
    /// epsilon1 V^{-(q-1) pi(rho)}
    pub v_term: Magnitude,
    /// 1.02 (q-1) phi^4/q^4 log^2 Q/(eps^2 (0.25-r)^5 Q^{0.25-r})
    pub j_term: Magnitude,
    pub positive: bool,
    /// (1/2)(v_term - j_term) when positive: measure on [T, 2T] divided by T
    pub density: Option<Magnitude>,
}

/// The theorem's concluding measure bound, per unit T, in tower space.
/// Uses the upper end of the pi(rho) interval so the bound stays a bound.
pub fn measure_lower_bound(params: &UniversalityParams, table: &PrimeTable) -> MeasureBound {
    let p = params;
    let (_, pi_hi) = pi_rho_interval(p.rho, table);
    let v_term =
        Magnitude::from_ln(p.epsilon1.ln() - (p.q - 1) as f64 * pi_hi * p.v.ln());
    let q_mag = p.q_magnitude();
    let phi4 = (crate::arith_sums::euler_phi(p.q) as f64 / p.q as f64).powi(4);
    let j_term = Magnitude::from_value(
        1.02 * (p.q - 1) as f64 * phi4 / (p.epsilon * p.epsilon * (0.25 - p.r).powi(5)),
    )
    .mul(&q_mag.ln_mag().expect("Q > 1").powf(2.0))
    .div(&q_mag.powf(0.25 - p.r));
    let positive = v_term > j_term;
    let density = positive.then(|| {
        let ratio = j_term.div(&v_term).to_f64().unwrap_or(0.0);
        v_term.scale(0.5 * (1.0 - ratio).max(f64::MIN_POSITIVE))
    });
    MeasureBound { v_term, j_term, positive, density }
}

/// One per-character Hurwitz target g(s, chi_k) = chi_k(p)(g(s)q^{-s} + sign*C).
#[derive(Debug, Clone)]
pub struct CharTarget {
    pub chi_index: u64,
    pub chi_p: Complex64,
    pub sign: f64,
}

#[derive(Debug, Clone)]
pub struct Corollary5Setup {
    pub q: u64,
    pub p: u64,
    pub r: f64,
    pub c: f64,
    pub max_g: f64,
    /// max_k max_{|s|<=r} |g(s, chi_k)|
    pub max_gk: f64,
    pub epsilon: f64,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub epsilon_ok: bool,
    pub targets: Vec<CharTarget>,
    pub nonvanishing: Check,
    pub reconstruction: Check,
}

impl Corollary5Setup {
    /// g(s, chi_k) for target index i at point s, given the base function.
    pub fn target_value<F: Fn(Complex64) -> Complex64>(
        &self,
        g: &F,
        i: usize,
        s: Complex64,
    ) -> Complex64 {
        let t = &self.targets[i];
        let qs = (-s * (self.q as f64).ln()).exp();
        t.chi_p * (g(s) * qs + t.sign * self.c)
    }
}

fn disc_grid(r: f64) -> Vec<Complex64> {
    let mut pts = vec![Complex64::new(0.0, 0.0)];
    for i in 0..64 {
        pts.push(Complex64::from_polar(r, 2.0 * PI * i as f64 / 64.0));
    }
    pts
}

/// Hurwitz application setup: splits g into q-1 non-vanishing per-character
/// targets with the +-C trick; C = 1.1 max|g| q^r (1.0 when g vanishes
/// identically, where any positive C works).
pub fn corollary5_setup<F: Fn(Complex64) -> Complex64>(
    g: &F,
    p: u64,
    q: u64,
    epsilon: f64,
    r: f64,
) -> Result<Corollary5Setup, BoundsError> {
    if !is_prime(q) || q == 2 {
        return Err(BoundsError::Domain(format!("q must be an odd prime, got {q}")));
    }
    if p % q == 0 {
        return Err(BoundsError::Domain(format!("need gcd(p, q) = 1, got p={p}, q={q}")));
    }
    let grid = disc_grid(r);
    let max_g = grid.iter().map(|&s| g(s).norm()).fold(0.0, f64::max);
    let qr = (q as f64).powf(r);
    let c = if max_g > 0.0 { 1.1 * max_g * qr } else { 1.0 };
    let chars = enumerate_characters(q).map_err(|e| BoundsError::Domain(e.to_string()))?;
    let half = (q - 1) / 2;
    let targets: Vec<CharTarget> = chars
        .iter()
        .enumerate()
        .map(|(i, chi)| CharTarget {
            chi_index: chi.index(),
            chi_p: chi.value(p),
            sign: if (i as u64) < half { 1.0 } else { -1.0 },
        })
        .collect();

    // grid sweeps: sup and inf of |g q^{-s} +- C|, and the reconstruction
    // (1/(q-1)) sum_k conj(chi_k(p)) g(s, chi_k) = g(s) q^{-s}
    let lnq = (q as f64).ln();
    let mut max_gk = 0.0f64;
    let mut min_abs = f64::INFINITY;
    let mut recon_defect = 0.0f64;
    for &s in &grid {
        let base = g(s) * (-s * lnq).exp();
        for sign in [1.0, -1.0] {
            let v = (base + sign * c).norm();
            max_gk = max_gk.max(v);
            min_abs = min_abs.min(v);
        }
        let recon: Complex64 = targets
            .iter()
            .map(|t| t.chi_p.conj() * t.chi_p * (base + t.sign * c))
            .sum::<Complex64>()
            / (q - 1) as f64;
        recon_defect = recon_defect.max((recon - base).norm());
    }
    let epsilon1 = epsilon / (4.0 * PI * qr * max_gk);
    let epsilon2 = epsilon / (4.0 * qr * max_gk);
    // non-vanishing holds with margin: sup|g q^{-s}| <= max_g q^r < C
    let nonvanishing = Check::new("hurwitz-nonvanishing", max_g * qr, c)
        .with_inputs(serde_json::json!({ "min_target_abs": min_abs, "C": c }));
    let reconstruction = Check::new("hurwitz-reconstruction", recon_defect, 1e-12)
        .with_inputs(serde_json::json!({ "q": q, "p": p }));
    Ok(Corollary5Setup {
        q,
        p,
        r,
        c,
        max_g,
        max_gk,
        epsilon,
        epsilon1,
        epsilon2,
        epsilon_ok: epsilon2 <= 1.0,
        targets,
        nonvanishing,
        reconstruction,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Corollary5Density {
    /// natural log of Q, from the displayed max
    pub log_q: f64,
    pub q_branch1_dominates: bool,
    pub log_t: Magnitude,
    /// log density = log(2 epsilon1) - rho
    pub log_density: f64,
    pub density: Magnitude,
}

/// Density and thresholds of the Hurwitz corollary: Q solves
/// Q^{1/4-r} = max{(1.02)^2(q-1)^2 e^{2 rho}/((0.25-r)^10 eps2^4 sqrt(2 eps1)),
/// exp((1/4-r) q^8)}, V = sqrt(rho/log rho), density = 2 eps1 e^{-rho}.
pub fn corollary5_density(setup: &Corollary5Setup, rho: f64) -> Corollary5Density {
    let (q, r) = (setup.q, setup.r);
    let w = 0.25 - r;
    let branch1 = (2.0 * rho
        + (1.02f64.powi(2) * ((q - 1) as f64).powi(2)).ln()
        - 10.0 * w.ln()
        - 4.0 * setup.epsilon2.ln()
        - 0.5 * (2.0 * setup.epsilon1).ln())
        / w;
    let branch2 = (q as f64).powi(8);
    let log_q = branch1.max(branch2);
    let v = (rho / rho.ln()).sqrt();
    let log_t = log_t_threshold(q, r, setup.epsilon1, rho, v, &Magnitude::from_ln(log_q));
    let log_density = (2.0 * setup.epsilon1).ln() - rho;
    Corollary5Density {
        log_q,
        q_branch1_dominates: branch1 >= branch2,
        log_t,
        log_density,
        density: Magnitude::from_ln(log_density),
    }
}
