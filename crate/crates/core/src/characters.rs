//! Dirichlet characters modulo a prime q.
//!
//! The full group is realized through a primitive root g mod q:
//! chi_k(g^j) = e^{2 pi i jk/(q-1)}. Values are stored as exact
//! root-of-unity exponents plus cached complex doubles, so group-law tests
//! compare integers, never floats.

use crate::report::Check;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CharacterError {
    #[error("modulus {0} is not prime")]
    NotPrime(u64),
    #[error("character index {index} out of range for modulus {modulus}")]
    IndexOutOfRange { modulus: u64, index: u64 },
}

/// A Dirichlet character mod a prime q (or the trivial character mod 1).
#[derive(Debug, Clone)]
pub struct Character {
    modulus: u64,
    index: u64,
    /// group order: q - 1 for prime q, 1 for q = 1.
    order: u64,
    /// exponent on e^{2 pi i / order} per residue; None off coprime residues.
    unit_exponent: Vec<Option<u64>>,
    values: Vec<Complex64>,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest primitive root mod prime q, by trial with order checks against
/// the prime factorization of q - 1.
pub fn primitive_root(q: u64) -> Result<u64, CharacterError> {
    if !is_prime(q) {
        return Err(CharacterError::NotPrime(q));
    }
    if q == 2 {
        return Ok(1);
    }
    let phi = q - 1;
    let mut factors = Vec::new();
    let mut m = phi;
    let mut d = 2;
    while d * d <= m {
        if m % d == 0 {
            factors.push(d);
            while m % d == 0 {
                m /= d;
            }
        }
        d += 1;
    }
    if m > 1 {
        factors.push(m);
    }
    'outer: for g in 2..q {
        for &f in &factors {
            if pow_mod(g, phi / f, q) == 1 {
                continue 'outer;
            }
        }
        return Ok(g);
    }
    unreachable!("every prime has a primitive root");
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u128;
    let mut bb = (b % m) as u128;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * bb % m as u128;
        }
        bb = bb * bb % m as u128;
        e >>= 1;
    }
    b = acc as u64;
    b
}

impl Character {
    fn build(modulus: u64, index: u64, generator: u64) -> Character {
        if modulus == 1 {
            return Character {
                modulus: 1,
                index: 0,
                order: 1,
                unit_exponent: vec![Some(0)],
                values: vec![Complex64::new(1.0, 0.0)],
            };
        }
        let order = modulus - 1;
        let mut unit_exponent = vec![None; modulus as usize];
        // discrete log table from powers of the generator
        let mut pow = 1u64;
        for j in 0..order {
            unit_exponent[pow as usize] = Some(j * index % order);
            pow = pow * generator % modulus;
        }
        let values = unit_exponent
            .iter()
            .map(|e| match e {
                Some(j) => Complex64::from_polar(1.0, TAU * *j as f64 / order as f64),
                None => Complex64::new(0.0, 0.0),
            })
            .collect();
        Character { modulus, index, order, unit_exponent, values }
    }

    /// The principal character chi_0 mod q (q = 1 or prime).
    pub fn principal(q: u64) -> Result<Character, CharacterError> {
        if q == 1 {
            return Ok(Character::build(1, 0, 1));
        }
        let g = primitive_root(q)?;
        Ok(Character::build(q, 0, g))
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn is_principal(&self) -> bool {
        self.index == 0
    }

    /// chi(n), for any n >= 0 (reduced mod q).
    pub fn value(&self, n: u64) -> Complex64 {
        self.values[(n % self.modulus) as usize]
    }

    /// Root-of-unity exponent of chi(n), None when gcd(n, q) > 1.
    pub fn exponent(&self, n: u64) -> Option<u64> {
        self.unit_exponent[(n % self.modulus) as usize]
    }

    pub fn conj(&self) -> Character {
        let index = if self.index == 0 { 0 } else { self.order - self.index };
        let g = if self.modulus == 1 { 1 } else { primitive_root(self.modulus).unwrap() };
        Character::build(self.modulus, index, g)
    }
}

impl PartialEq for Character {
    fn eq(&self, other: &Self) -> bool {
        self.modulus == other.modulus && self.index == other.index
    }
}
impl Eq for Character {}

/// All q-1 characters mod prime q, ordered by index; index 0 is principal.
pub fn enumerate_characters(q: u64) -> Result<Vec<Character>, CharacterError> {
    if !is_prime(q) {
        return Err(CharacterError::NotPrime(q));
    }
    let g = primitive_root(q)?;
    Ok((0..q - 1).map(|k| Character::build(q, k, g)).collect())
}

/// Row and column orthogonality of the character table; reports max defect.
pub fn verify_orthogonality(q: u64) -> Result<Check, CharacterError> {
    let chars = enumerate_characters(q)?;
    let mut max_defect = 0.0f64;
    // sum over residues vanishes for non-principal chi
    for chi in chars.iter().skip(1) {
        let s: Complex64 = (0..q).map(|n| chi.value(n)).sum();
        max_defect = max_defect.max(s.norm());
    }
    // sum over characters detects a = b on coprime residues
    for a in 1..q {
        for b in 1..q {
            let s: Complex64 = chars.iter().map(|chi| chi.value(a) * chi.value(b).conj()).sum();
            let expect = if a == b { (q - 1) as f64 } else { 0.0 };
            max_defect = max_defect.max((s - expect).norm());
        }
    }
    Ok(Check::new("orthogonality", max_defect, 1e-12)
        .with_inputs(serde_json::json!({ "q": q })))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q2_single_principal() {
        let chars = enumerate_characters(2).unwrap();
        assert_eq!(chars.len(), 1);
        assert!(chars[0].is_principal());
        assert_eq!(chars[0].value(1), Complex64::new(1.0, 0.0));
        assert_eq!(chars[0].value(2), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn q3_nonprincipal_value() {
        let chars = enumerate_characters(3).unwrap();
        assert_eq!(chars.len(), 2);
        assert!((chars[1].value(2) - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn q5_index1_table() {
        // generator 2: chi(2) = i, chi(4) = -1, chi(3) = -i
        assert_eq!(primitive_root(5).unwrap(), 2);
        let chars = enumerate_characters(5).unwrap();
        let chi = &chars[1];
        let i = Complex64::new(0.0, 1.0);
        assert!((chi.value(2) - i).norm() < 1e-15);
        assert!((chi.value(4) + Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((chi.value(3) + i).norm() < 1e-15);
        // 8 = 3 mod 5
        assert!((chi.value(8) + i).norm() < 1e-15);
    }

    #[test]
    fn principal_examples() {
        let chi0 = Character::principal(5).unwrap();
        assert_eq!(chi0.value(7), Complex64::new(1.0, 0.0));
        assert_eq!(chi0.value(10), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn rejects_composites() {
        assert!(enumerate_characters(6).is_err());
        assert!(enumerate_characters(1).is_err());
    }

    #[test]
    fn orthogonality_small_moduli() {
        for q in [3, 7, 13] {
            let check = verify_orthogonality(q).unwrap();
            assert!(check.pass, "q = {q}: defect {}", check.measured);
        }
    }

    #[test]
    fn complete_multiplicativity_exhaustive() {
        for q in [2u64, 3, 5, 7, 11, 13, 31, 61, 101] {
            for chi in enumerate_characters(q).unwrap() {
                for m in 0..q {
                    for n in 0..q {
                        let lhs = chi.value(m * n % q);
                        let rhs = chi.value(m) * chi.value(n);
                        assert!((lhs - rhs).norm() < 1e-12, "q={q} m={m} n={n}");
                    }
                }
            }
        }
    }

    #[test]
    fn group_closure_by_exponent() {
        for q in [3u64, 5, 7, 11, 13, 17, 19, 23, 29, 31] {
            let chars = enumerate_characters(q).unwrap();
            // pairwise distinct
            for a in 0..chars.len() {
                for b in a + 1..chars.len() {
                    assert_ne!(chars[a], chars[b]);
                }
            }
            // pointwise product of chi_a and chi_b is chi_{(a+b) mod (q-1)},
            // checked on exact exponents
            for a in 0..chars.len() {
                for b in 0..chars.len() {
                    let c = (a + b) % chars.len();
                    for n in 1..q {
                        let ea = chars[a].exponent(n).unwrap();
                        let eb = chars[b].exponent(n).unwrap();
                        let ec = chars[c].exponent(n).unwrap();
                        assert_eq!((ea + eb) % (q - 1), ec);
                    }
                }
            }
        }
    }
}
