//! Tower representation for positive reals far beyond floating-point range.
//!
//! A [`Magnitude`] stores `(level, mantissa)` and denotes the value obtained
//! by applying `exp` to the mantissa `level` times. Level 0 is the value
//! itself. Quantities like `exp(q^8)` and the T-thresholds of the measure
//! bounds (whose logarithms themselves overflow a double) stay comparable
//! and multipliable in this form.

use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::fmt;

/// Promotion threshold: a mantissa at or above this moves one level up.
const LIMIT: f64 = 700.0;
/// Demotion threshold: `exp` of anything below this stays under `LIMIT`.
const LN_LIMIT: f64 = 6.551;
/// Below this, `exp` underflows to zero; demotion must stop.
const UNDERFLOW_LN: f64 = -700.0;

/// A positive real number `exp(exp(...(mantissa)))` with `level` nested exps.
///
/// Canonical form: level 0 with value in `(0, 700)`, or level >= 1 with
/// mantissa in `[LN_LIMIT, 700)`. Values below `exp(-700)` are kept at
/// level 1 with a (large negative) mantissa equal to their natural log.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Magnitude {
    level: u32,
    mantissa: f64,
}

impl Magnitude {
    pub fn from_value(v: f64) -> Magnitude {
        assert!(v > 0.0 && v.is_finite(), "Magnitude requires a positive finite value, got {v}");
        Magnitude { level: 0, mantissa: v }.canonical()
    }

    /// Construct from a natural logarithm (the value is `e^l`).
    pub fn from_ln(l: f64) -> Magnitude {
        assert!(l.is_finite(), "Magnitude::from_ln requires a finite log, got {l}");
        Magnitude { level: 1, mantissa: l }.canonical()
    }

    pub fn one() -> Magnitude {
        Magnitude { level: 0, mantissa: 1.0 }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    fn canonical(mut self) -> Magnitude {
        while self.mantissa >= LIMIT {
            self.mantissa = self.mantissa.ln();
            self.level += 1;
        }
        while self.level >= 1 && self.mantissa < LN_LIMIT && self.mantissa > UNDERFLOW_LN {
            self.mantissa = self.mantissa.exp();
            self.level -= 1;
        }
        self
    }

    /// The value as an `f64`, when representable.
    pub fn to_f64(&self) -> Option<f64> {
        let mut m = self.mantissa;
        for _ in 0..self.level {
            if m >= 709.0 {
                return None;
            }
            m = m.exp();
        }
        Some(m)
    }

    /// The natural log of the value as an `f64`, when representable.
    pub fn ln_f64(&self) -> Option<f64> {
        if self.level == 0 {
            return Some(self.mantissa.ln());
        }
        let mut m = self.mantissa;
        for _ in 0..self.level - 1 {
            if m >= 709.0 {
                return None;
            }
            m = m.exp();
        }
        Some(m)
    }

    /// Natural log as a `Magnitude`; requires value > 1.
    pub fn ln_mag(&self) -> Option<Magnitude> {
        if self.level == 0 {
            if self.mantissa > 1.0 {
                Some(Magnitude::from_value(self.mantissa.ln()))
            } else {
                None
            }
        } else if self.mantissa > 0.0 {
            if self.level == 1 {
                Some(Magnitude::from_value(self.mantissa))
            } else {
                Some(Magnitude { level: self.level - 1, mantissa: self.mantissa }.canonical())
            }
        } else {
            None
        }
    }

    /// `e^self`.
    pub fn exp(&self) -> Magnitude {
        if let Some(v) = self.to_f64() {
            Magnitude::from_ln(v)
        } else {
            Magnitude { level: self.level + 1, mantissa: self.mantissa }.canonical()
        }
    }

    /// Add a signed double. A no-op (below mantissa precision) when the value
    /// is not representable as an `f64`.
    pub fn add_f64(&self, d: f64) -> Magnitude {
        match self.to_f64() {
            Some(v) if v + d > 0.0 => Magnitude::from_value(v + d),
            _ => *self,
        }
    }

    pub fn mul(&self, rhs: &Magnitude) -> Magnitude {
        if let (Some(a), Some(b)) = (self.ln_f64(), rhs.ln_f64()) {
            return Magnitude::from_ln(a + b);
        }
        let (big, small) = if self >= rhs { (self, rhs) } else { (rhs, self) };
        let big_ln = big.ln_mag().expect("value with non-f64 log is > 1");
        match small.ln_f64() {
            Some(b) => big_ln.add_f64(b).exp(),
            None => big_ln.add(&small.ln_mag().expect("huge value")).exp(),
        }
    }

    pub fn div(&self, rhs: &Magnitude) -> Magnitude {
        if let (Some(a), Some(b)) = (self.ln_f64(), rhs.ln_f64()) {
            return Magnitude::from_ln(a - b);
        }
        let big_ln = self.ln_mag().expect("value with non-f64 log is > 1");
        match rhs.ln_f64() {
            Some(b) => big_ln.add_f64(-b).exp(),
            // both logs beyond f64: the quotient is dominated by the larger
            // tower; mantissa precision cannot resolve the correction
            None => *self,
        }
    }

    pub fn add(&self, rhs: &Magnitude) -> Magnitude {
        let (big, small) = if self >= rhs { (self, rhs) } else { (rhs, self) };
        if let (Some(a), Some(b)) = (big.ln_f64(), small.ln_f64()) {
            if b - a > -745.0 {
                return Magnitude::from_ln(a + (b - a).exp().ln_1p());
            }
        }
        *big
    }

    /// Multiply by a positive scalar.
    pub fn scale(&self, c: f64) -> Magnitude {
        assert!(c > 0.0 && c.is_finite());
        self.mul(&Magnitude::from_value(c))
    }

    /// Raise to a positive real power.
    pub fn powf(&self, k: f64) -> Magnitude {
        assert!(k > 0.0 && k.is_finite());
        if let Some(l) = self.ln_f64() {
            Magnitude::from_ln(l * k)
        } else {
            self.ln_mag().expect("huge value").scale(k).exp()
        }
    }

    fn ord_key(&self) -> (i64, f64) {
        if self.level >= 1 && self.mantissa <= UNDERFLOW_LN {
            // tiny value kept in log form
            (-1, self.mantissa)
        } else {
            (self.level as i64, self.mantissa)
        }
    }
}

impl PartialEq for Magnitude {
    fn eq(&self, other: &Self) -> bool {
        self.ord_key() == other.ord_key()
    }
}

impl PartialOrd for Magnitude {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.ord_key().partial_cmp(&other.ord_key())
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            0 => write!(f, "{}", self.mantissa),
            1 => write!(f, "exp({})", self.mantissa),
            n => write!(f, "exp^{}({})", n, self.mantissa),
        }
    }
}
