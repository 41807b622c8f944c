//! Dirichlet L-functions: truncated series with explicit error, Hurwitz
//! zeta oracle, finite Euler products and their factor-wise logarithms.
//!
//! "log L" throughout means the factor-wise Dirichlet-series branch
//! sum_p sum_k chi(p)^k/(k p^{ks}) -- the only branch the estimates use.

use crate::characters::{enumerate_characters, Character, CharacterError};
use crate::primes::PrimeTable;
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LfuncError {
    #[error("pole at s = 1 for a principal character")]
    PoleAtOne,
    #[error("sigma = {0} out of range (need sigma > {1})")]
    SigmaTooSmall(f64, f64),
    #[error("x = {x} too small: need x >= max(1, |t|/pi) = {min}")]
    XTooSmall { x: f64, min: f64 },
    #[error("lambda = {0} below the lemma threshold 355991")]
    LambdaTooSmall(f64),
    #[error(transparent)]
    Character(#[from] CharacterError),
}

#[derive(Debug, Clone)]
pub struct TruncationResult {
    pub value: Complex64,
    pub error_bound: f64,
    pub terms_used: u64,
}

#[derive(Debug, Clone)]
pub struct EulerProductValue {
    pub q_limit: u64,
    pub log_value: Complex64,
    pub value: Complex64,
}

/// n^{-s} for integer n >= 1.
fn int_pow(n: u64, s: Complex64) -> Complex64 {
    (-s * (n as f64).ln()).exp()
}

/// Truncated L-series with the explicit error term:
/// L(s, chi) = sum_{n <= qx} chi(n)/n^s + E0(chi) x^{1-s}/(s-1) + Theta(...),
/// error = (phi(q)(7 sqrt(2)/pi + 4)/q^sigma + c1(q)) x^{-sigma}.
pub fn l_truncated(s: Complex64, chi: &Character, x: f64) -> Result<TruncationResult, LfuncError> {
    if s.re <= 0.0 {
        return Err(LfuncError::SigmaTooSmall(s.re, 0.0));
    }
    let min_x = (s.im.abs() / PI).max(1.0);
    if x < min_x {
        return Err(LfuncError::XTooSmall { x, min: min_x });
    }
    let q = chi.modulus();
    if chi.is_principal() && (s - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
        return Err(LfuncError::PoleAtOne);
    }
    let n_max = (q as f64 * x).floor() as u64;
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 1..=n_max {
        let c = chi.value(n);
        if c.norm_sqr() > 0.0 {
            sum += c * int_pow(n, s);
        }
    }
    let phi = crate::arith_sums::euler_phi(q) as f64;
    if chi.is_principal() {
        // main term phi(q) q^{-s} x^{1-s}/(s-1); the coefficient is 1 at
        // q = 1 and is what the truncated coprime sum actually leaves over
        // for prime q (E0 = 1 with plain x^{1-s} misses by O(1) there)
        let one = Complex64::new(1.0, 0.0);
        sum += phi * int_pow(q, s) * ((one - s) * x.ln()).exp() / (s - one);
    }
    let c1 = if q == 1 { 1.0 } else { phi / 2.0 };
    let error_bound =
        (phi * (7.0 * 2f64.sqrt() / PI + 4.0) / (q as f64).powf(s.re) + c1) * x.powf(-s.re);
    Ok(TruncationResult { value: sum, error_bound, terms_used: n_max })
}

// Bernoulli numbers B_2, B_4, ..., B_16 for the Euler-Maclaurin tail.
const BERNOULLI: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta via Euler-Maclaurin: 50 direct terms (more when |t| is
/// large, to keep the tail below 1e-12), boundary terms, and eight
/// Bernoulli corrections. Valid for sigma > 0, s != 1.
pub fn hurwitz_zeta(s: Complex64, a: f64) -> Result<Complex64, LfuncError> {
    assert!(a > 0.0 && a <= 1.0, "parameter must lie in (0, 1], got {a}");
    if s.re <= 0.0 {
        return Err(LfuncError::SigmaTooSmall(s.re, 0.0));
    }
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
        return Err(LfuncError::PoleAtOne);
    }
    let shift = 50usize.max((3.0 * s.im.abs()).ceil() as usize);
    let mut sum = Complex64::new(0.0, 0.0);
    for n in 0..shift {
        sum += (-s * (n as f64 + a).ln()).exp();
    }
    let m = shift as f64 + a;
    let one = Complex64::new(1.0, 0.0);
    let m_pow = |e: Complex64| (e * m.ln()).exp();
    sum += m_pow(one - s) / (s - one);
    sum += m_pow(-s) / 2.0;
    // sum_j B_2j/(2j)! * s(s+1)...(s+2j-2) * m^{-s-2j+1}
    let mut rising = s; // s(s+1)...(s+2j-2), updated per j
    let mut factorial = 1.0f64;
    for (j, b) in BERNOULLI.iter().enumerate() {
        let two_j = 2 * (j + 1);
        factorial *= (two_j - 1) as f64 * two_j as f64;
        sum += *b / factorial * rising * m_pow(-s - Complex64::new((two_j - 1) as f64, 0.0));
        rising *= (s + Complex64::new((two_j - 1) as f64, 0.0))
            * (s + Complex64::new(two_j as f64, 0.0));
    }
    Ok(sum)
}

/// High-precision L(s, chi) oracle via the Hurwitz decomposition
/// L(s, chi) = q^{-s} sum_{a=1}^{q} chi(a) zeta(s, a/q).
pub fn l_reference(s: Complex64, chi: &Character) -> Result<Complex64, LfuncError> {
    let q = chi.modulus();
    if q == 1 {
        return hurwitz_zeta(s, 1.0);
    }
    if chi.is_principal() && (s - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
        return Err(LfuncError::PoleAtOne);
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for a in 1..=q {
        let c = chi.value(a);
        if c.norm_sqr() > 0.0 {
            sum += c * hurwitz_zeta(s, a as f64 / q as f64)?;
        }
    }
    Ok((-s * (q as f64).ln()).exp() * sum)
}

/// Principal branch of -log(1 - w) for |w| < 1, by power series.
/// Terms below 1e-18 are dropped; here |w| <= 2^{-sigma} < 1 always.
pub fn neg_log1m(w: Complex64) -> Complex64 {
    let mut term = w;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut k = 1.0f64;
    loop {
        sum += term / k;
        if (term.norm()) / (k + 1.0) < 1e-18 {
            return sum;
        }
        term *= w;
        k += 1.0;
    }
}

/// Factor-wise log of the finite Euler product over p <= Q.
pub fn log_euler_product(
    s: Complex64,
    chi: &Character,
    q_limit: u64,
    table: &PrimeTable,
) -> Result<EulerProductValue, LfuncError> {
    if s.re <= 0.0 {
        return Err(LfuncError::SigmaTooSmall(s.re, 0.0));
    }
    assert!(q_limit <= table.limit());
    let mut log_value = Complex64::new(0.0, 0.0);
    for &p in table.range(1.0, q_limit as f64) {
        let c = chi.value(p);
        if c.norm_sqr() > 0.0 {
            log_value += neg_log1m(c * int_pow(p, s));
        }
    }
    Ok(EulerProductValue { q_limit, log_value, value: log_value.exp() })
}

#[derive(Debug, Clone)]
pub struct LinearizedFactors {
    pub linear_term: Complex64,
    pub exact_remainder: Complex64,
    pub remainder_bound: f64,
}

/// Linearization of the log-Euler factors over lambda < p <= rho:
/// -sum log(1 - chi(p)e^{-2 pi i theta_p} p^{-s})
///   = sum chi(p)e^{-2 pi i theta_p} p^{-s}
///   + Theta(1.11 sigma/(2 sigma - 1) lambda^{1-2 sigma}/log lambda).
/// `phases` is aligned with `table.range(lambda, rho)`.
pub fn linearize_log_factors(
    s: Complex64,
    chi: &Character,
    lambda: f64,
    rho: f64,
    phases: &[f64],
    table: &PrimeTable,
) -> Result<LinearizedFactors, LfuncError> {
    if s.re <= 0.5 {
        return Err(LfuncError::SigmaTooSmall(s.re, 0.5));
    }
    if lambda < 355991.0 {
        return Err(LfuncError::LambdaTooSmall(lambda));
    }
    let primes = table.range(lambda, rho);
    assert_eq!(primes.len(), phases.len(), "one phase per prime in (lambda, rho]");
    let mut linear = Complex64::new(0.0, 0.0);
    let mut full = Complex64::new(0.0, 0.0);
    for (&p, &theta) in primes.iter().zip(phases) {
        let c = chi.value(p);
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let w = c * Complex64::from_polar(1.0, -2.0 * PI * theta) * int_pow(p, s);
        linear += w;
        full += neg_log1m(w);
    }
    let sigma = s.re;
    let remainder_bound =
        1.11 * sigma / (2.0 * sigma - 1.0) * lambda.powf(1.0 - 2.0 * sigma) / lambda.ln();
    Ok(LinearizedFactors { linear_term: linear, exact_remainder: full - linear, remainder_bound })
}

/// zeta(s, p/q) reconstructed from L-functions:
/// (q^s/phi(q)) sum_chi conj(chi(p)) L(s, chi). Must agree with
/// [`hurwitz_zeta`] -- the identity behind the Hurwitz application.
pub fn hurwitz_from_characters(s: Complex64, p: u64, q: u64) -> Result<Complex64, LfuncError> {
    assert!(p >= 1 && p < q, "need 1 <= p < q");
    if (s - Complex64::new(1.0, 0.0)).norm() < 1e-14 {
        return Err(LfuncError::PoleAtOne);
    }
    let chars = enumerate_characters(q)?;
    let mut sum = Complex64::new(0.0, 0.0);
    for chi in &chars {
        sum += chi.value(p).conj() * l_reference(s, chi)?;
    }
    let phi = crate::arith_sums::euler_phi(q) as f64;
    Ok((s * (q as f64).ln()).exp() / phi * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const ZETA2: f64 = PI * PI / 6.0;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn hurwitz_classical_values() {
        let z = hurwitz_zeta(c(2.0, 0.0), 1.0).unwrap();
        assert!((z - c(ZETA2, 0.0)).norm() < 1e-13);
        let z = hurwitz_zeta(c(2.0, 0.0), 0.5).unwrap();
        assert!((z - c(PI * PI / 2.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn hurwitz_matches_direct_series() {
        // s = 3, a = 1/4: direct series converges fast enough to compare;
        // summed smallest-first to keep rounding below the tolerance
        let mut direct = Complex64::new(0.0, 0.0);
        for n in (0..4_000_000u64).rev() {
            direct += c((n as f64 + 0.25).powi(-3), 0.0);
        }
        let z = hurwitz_zeta(c(3.0, 0.0), 0.25).unwrap();
        assert!((z - direct).norm() < 1e-10, "defect {}", (z - direct).norm());

        // complex s with sigma = 4
        let s = c(4.0, 1.0);
        let mut direct = Complex64::new(0.0, 0.0);
        for n in (0..200_000u64).rev() {
            direct += (-s * (n as f64 + 0.7f64).ln()).exp();
        }
        let z = hurwitz_zeta(s, 0.7).unwrap();
        assert!((z - direct).norm() < 1e-11);
    }

    #[test]
    fn hurwitz_pole_and_domain() {
        assert!(hurwitz_zeta(c(1.0, 0.0), 0.5).is_err());
        assert!(hurwitz_zeta(c(-0.5, 0.0), 0.5).is_err());
    }

    #[test]
    fn truncated_zeta2() {
        let chi = Character::principal(1).unwrap();
        let r = l_truncated(c(2.0, 0.0), &chi, 1e3).unwrap();
        assert!((r.value - c(ZETA2, 0.0)).norm() <= r.error_bound);
    }

    #[test]
    fn truncated_against_reference() {
        let chars = enumerate_characters(5).unwrap();
        let s = c(0.75, 5.0);
        let r = l_truncated(s, &chars[1], 1e4).unwrap();
        let reference = l_reference(s, &chars[1]).unwrap();
        assert!((r.value - reference).norm() <= r.error_bound);

        let chi0 = Character::principal(3).unwrap();
        let s = c(0.9, 0.0);
        let r = l_truncated(s, &chi0, 1e5).unwrap();
        let reference = l_reference(s, &chi0).unwrap();
        assert!((r.value - reference).norm() <= r.error_bound);
    }

    #[test]
    fn reference_against_direct_series() {
        // non-principal real character mod 3: L(2) = sum chi(n)/n^2
        let chars = enumerate_characters(3).unwrap();
        let mut direct = Complex64::new(0.0, 0.0);
        for n in 1..2_000_000u64 {
            direct += chars[1].value(n) * c((n as f64).powi(-2), 0.0);
        }
        let l = l_reference(c(2.0, 0.0), &chars[1]).unwrap();
        assert!((l - direct).norm() < 1e-10);
    }

    #[test]
    fn euler_product_empty_and_zeta() {
        let chi = Character::principal(1).unwrap();
        let table = PrimeTable::sieve(100_000).unwrap();
        let e = log_euler_product(c(2.0, 0.0), &chi, 1, &table).unwrap();
        assert_eq!(e.log_value, Complex64::new(0.0, 0.0));
        assert_eq!(e.value, Complex64::new(1.0, 0.0));

        let e = log_euler_product(c(2.0, 0.0), &chi, 100_000, &table).unwrap();
        assert!((e.value - c(ZETA2, 0.0)).norm() < 1e-4);
    }

    #[test]
    fn euler_product_matches_direct_factors() {
        let chars = enumerate_characters(5).unwrap();
        let table = PrimeTable::sieve(1000).unwrap();
        let s = c(0.75, 1.0);
        let e = log_euler_product(s, &chars[1], 100, &table).unwrap();
        let mut direct = Complex64::new(1.0, 0.0);
        for &p in table.range(1.0, 100.0) {
            let w = chars[1].value(p) * (-s * (p as f64).ln()).exp();
            direct /= Complex64::new(1.0, 0.0) - w;
        }
        assert!((e.value - direct).norm() < 1e-12);
    }

    #[test]
    fn linearize_remainder_within_bound() {
        let table = PrimeTable::sieve(800_000).unwrap();
        let chi = Character::principal(1).unwrap();
        let lambda = 355991.0;
        for (rho, s) in [(2.0 * lambda, c(0.75, 0.0)), (400_000.0, c(0.8, 2.0))] {
            let n = table.range(lambda, rho).len();
            let phases: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).fract()).collect();
            let r = linearize_log_factors(s, &chi, lambda, rho, &phases, &table).unwrap();
            assert!(r.exact_remainder.norm() <= r.remainder_bound);
        }
        // empty range
        let r = linearize_log_factors(c(0.75, 0.0), &chi, lambda, lambda, &[], &table).unwrap();
        assert_eq!(r.linear_term, Complex64::new(0.0, 0.0));
        assert_eq!(r.exact_remainder, Complex64::new(0.0, 0.0));
    }

    #[test]
    fn character_decomposition_matches_hurwitz() {
        for (s, p, q) in [(c(2.0, 0.0), 1, 2), (c(2.0, 0.0), 1, 3), (c(3.0, 1.0), 2, 5)] {
            let lhs = hurwitz_from_characters(s, p, q).unwrap();
            let rhs = hurwitz_zeta(s, p as f64 / q as f64).unwrap();
            assert!((lhs - rhs).norm() < 1e-10, "p={p} q={q}: {}", (lhs - rhs).norm());
        }
    }
}
