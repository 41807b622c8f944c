//! Numerical verification toolkit for effective hybrid joint universality of
//! Dirichlet L-functions with prime moduli.
//!
//! The crate evaluates every explicit construction that goes into the
//! lower-density bound in log space and verifies every constant-bearing
//! inequality at desk scale: prime-counting bounds, divisor summatory
//! estimates, Dirichlet-polynomial mean values, the polydisc moment-system
//! pipeline, quantitative Koksma box-hitting bounds, and the final error
//! budget and measure calculators.

pub mod arith_sums;
pub mod bounds;
pub mod characters;
pub mod equidist;
pub mod lfunc;
pub mod magnitude;
pub mod meanvalue;
pub mod polydisc;
pub mod primes;
pub mod report;

pub use characters::Character;
pub use magnitude::Magnitude;
pub use primes::PrimeTable;
