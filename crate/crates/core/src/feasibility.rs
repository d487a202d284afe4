//! Necessary conditions on the rank and the classical denominator bounds.

use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{Natural, PrimeSet};

/// Outcome of the necessary-condition checks for a rank over a prime set.
///
/// Admissibility is necessary, not sufficient: `{2,11}` is admissible at
/// rank 5 yet has no solutions there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub gcd_value: u64,
    pub rank: usize,
    pub gcd_ok: bool,
    pub min_prime_ok: bool,
    pub admissible: bool,
}

/// `gcd(p - 1)` over all primes of the set.
pub fn gcd_condition(set: &PrimeSet) -> u64 {
    set.primes().iter().fold(0u64, |g, &p| g.gcd(&(p - 1))).max(1)
}

/// Checks `gcd(p_j - 1) | R - 1` and `min(S) <= R`.
pub fn is_admissible(set: &PrimeSet, rank: usize) -> AdmissibilityReport {
    let g = gcd_condition(set);
    let gcd_ok = (rank as u64).saturating_sub(1).is_multiple_of(g);
    // Non-strict: [3,3,3] over {3} is a rank-3 solution with p == R.
    let min_prime_ok = set.min() <= rank as u64;
    AdmissibilityReport {
        gcd_value: g,
        rank,
        gcd_ok,
        min_prime_ok,
        admissible: gcd_ok && min_prime_ok,
    }
}

/// First `n` Sylvester numbers: 2, 3, 7, 43, 1807, ...
pub fn sylvester(n: usize) -> Vec<Natural> {
    let mut out: Vec<Natural> = Vec::with_capacity(n);
    for i in 0..n {
        let next = match i {
            0 => Natural::from(2u32),
            _ => {
                let s = &out[i - 1];
                s * (s - 1u32) + 1u32
            }
        };
        out.push(next);
    }
    out
}

/// `u_1 = 1`, `u_i = u_{i-1} (u_{i-1} + 1)`.
pub fn u_sequence(n: usize) -> Vec<Natural> {
    let mut out: Vec<Natural> = Vec::with_capacity(n);
    for i in 0..n {
        let next = match i {
            0 => Natural::one(),
            _ => {
                let u = &out[i - 1];
                u * (u + 1u32)
            }
        };
        out.push(next);
    }
    out
}

/// Largest exponent of `p` in any rank-`R` solution using only powers of `p`:
/// `(R - 1) / (p - 1)`. Fails when `p - 1` does not divide `R - 1`, since no
/// such solutions exist then.
pub fn one_prime_cap(p: u64, rank: usize) -> Result<u32> {
    if rank == 0 {
        return Err(Error::RankTooSmall { rank, min: 1 });
    }
    if !crate::numeric::is_prime_u64(p) {
        return Err(Error::NotPrime(p.to_string()));
    }
    let r = rank as u64 - 1;
    if !r.is_multiple_of(p - 1) {
        return Err(Error::NotAdmissible { p, rank });
    }
    Ok((r / (p - 1)) as u32)
}
