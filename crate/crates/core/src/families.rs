//! Closed-form solution families and the exact verification check.
//!
//! Every constructor verifies its own output with [`verify_solution`] before
//! returning it, so a construction that does not sum to 1 is an error rather
//! than a wrong answer.

use num_traits::{One, Zero};

use crate::enumerate::Solution;
use crate::error::{Error, Result};
use crate::feasibility::one_prime_cap;
use crate::numeric::{factor_over, is_prime, is_prime_u64, unit_fraction, Natural, PrimeSet, Rational, SmoothNumber};

/// The known Fermat primes `F_0..F_4`.
pub const FERMAT_PRIMES: [u64; 5] = [3, 5, 17, 257, 65537];

/// Result of checking a candidate against the definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    /// Exact sum of the reciprocals.
    pub sum: Rational,
    pub sum_is_one: bool,
    pub sorted: bool,
    /// Per-denominator factorization over the requested prime set (`None`
    /// entries are not smooth). Absent when no set was given.
    pub smooth_over: Option<Vec<Option<SmoothNumber>>>,
    /// Whether every prime of the set divides some denominator. Absent when
    /// no set was given.
    pub all_primes_used: Option<bool>,
    pub require_all_primes: bool,
    pub rank_matches: bool,
}

impl VerificationReport {
    pub fn all_smooth(&self) -> Option<bool> {
        self.smooth_over.as_ref().map(|f| f.iter().all(Option::is_some))
    }

    /// All requested checks hold.
    pub fn passed(&self) -> bool {
        self.sum_is_one
            && self.sorted
            && self.rank_matches
            && self.all_smooth().unwrap_or(true)
            && (!self.require_all_primes || self.all_primes_used.unwrap_or(true))
    }
}

pub fn verify_solution(
    sol: &Solution,
    set: Option<&PrimeSet>,
    rank: Option<usize>,
    require_all_primes: bool,
) -> VerificationReport {
    let d = sol.denominators();
    let sum = d.iter().fold(Rational::zero(), |acc, x| acc + unit_fraction(x));
    let smooth_over = set.map(|s| d.iter().map(|x| factor_over(s, x)).collect::<Vec<_>>());
    let all_primes_used = set.map(|s| {
        s.primes().iter().all(|&p| {
            let p = Natural::from(p);
            d.iter().any(|x| (x % &p).is_zero())
        })
    });
    VerificationReport {
        sum_is_one: sum.is_one(),
        sum,
        sorted: d.windows(2).all(|w| w[0] <= w[1]),
        smooth_over,
        all_primes_used,
        require_all_primes,
        rank_matches: rank.is_none_or(|r| r == d.len()),
    }
}

fn verified(denoms: Vec<Natural>, set: &PrimeSet, rank: usize, what: &str) -> Result<Solution> {
    let mut denoms = denoms;
    denoms.sort();
    let sol = Solution::new(denoms)?;
    let report = verify_solution(&sol, Some(set), Some(rank), false);
    if report.passed() {
        Ok(sol)
    } else {
        Err(Error::InvalidSolution(format!(
            "{what} construction gave {sol} with reciprocal sum {}",
            report.sum
        )))
    }
}

fn pow(base: u64, e: u32) -> Natural {
    Natural::from(base).pow(e)
}

/// `p - 1` copies of each of `p, p^2, ..., p^N` plus one more `p^N`, where
/// `N = (R - 1)/(p - 1)`.
pub fn canonical_one_prime(p: u64, rank: usize) -> Result<Solution> {
    let top = one_prime_cap(p, rank)?;
    let mut d = Vec::with_capacity(rank);
    for k in 1..=top {
        d.extend(std::iter::repeat_n(pow(p, k), p as usize - 1));
    }
    d.push(pow(p, top));
    verified(d, &PrimeSet::single(p)?, rank, "one-prime")
}

/// Replaces the last denominator `x` by two copies of `2x`, raising the rank
/// by one.
pub fn double_last(sol: &Solution) -> Result<Solution> {
    let report = verify_solution(sol, None, None, false);
    if !report.passed() {
        return Err(Error::InvalidSolution(format!(
            "{sol} sums to {} (sorted: {})",
            report.sum, report.sorted
        )));
    }
    let mut d = sol.denominators().to_vec();
    let last = d.pop().expect("nonempty");
    let doubled = last * 2u32;
    d.push(doubled.clone());
    d.push(doubled);
    Solution::new(d)
}

/// `[2, 4, ..., 2^k, p, p^2, ..., p^(R-k-1), 2^k p^(R-k-1)]` over `{2, p}`
/// with `p = F_n = 2^k + 1`, `k = 2^n`, for `R >= k + 2`.
pub fn fermat_family(n: u32, rank: usize) -> Result<Solution> {
    let Some(&p) = FERMAT_PRIMES.get(n as usize) else {
        return Err(Error::InvalidArgument(format!(
            "only F_0..F_4 are known Fermat primes, got n = {n}"
        )));
    };
    let k = 1usize << n;
    if rank < k + 2 {
        return Err(Error::RankTooSmall { rank, min: k + 2 });
    }
    let top = (rank - k - 1) as u32;
    let mut d: Vec<Natural> = (1..=k as u32).map(|i| pow(2, i)).collect();
    d.extend((1..=top).map(|j| pow(p, j)));
    d.push(pow(2, k as u32) * pow(p, top));
    verified(d, &PrimeSet::new([2, p])?, rank, "Fermat")
}

/// Family over `{2, p}` with `p = 2^q - 1` prime, for `R >= 2q - 1`:
/// `2, ..., 2^(q-1)`, then `p, 2p, ..., 2^(q-2) p`, then
/// `2^(2q-1), ..., 2^(Kq-1)` and finally `2^(Kq-1) p`, with `K = R - 2q + 2`.
pub fn mersenne_family(q: u32, rank: usize) -> Result<Solution> {
    if q < 2 {
        return Err(Error::NotPrime(format!("2^{q} - 1")));
    }
    let p_big = (Natural::one() << q) - 1u32;
    if !is_prime(&p_big) {
        return Err(Error::NotPrime(format!("2^{q} - 1 = {p_big}")));
    }
    let p: u64 =
        u64::try_from(&p_big).map_err(|_| Error::InvalidArgument(format!("2^{q} - 1 does not fit in 64 bits")))?;
    let min_rank = 2 * q as usize - 1;
    if rank < min_rank {
        return Err(Error::RankTooSmall { rank, min: min_rank });
    }
    let big_k = (rank - min_rank + 1) as u32;
    let mut d: Vec<Natural> = (1..q).map(|i| pow(2, i)).collect();
    d.push(p_big.clone());
    d.extend((1..=q.saturating_sub(2)).map(|i| pow(2, i) * &p_big));
    d.extend((2..=big_k).map(|k| pow(2, k * q - 1)));
    d.push(pow(2, big_k * q - 1) * &p_big);
    verified(d, &PrimeSet::new([2, p])?, rank, "Mersenne")
}

/// Tries `[2, 4, ..., 2^(R-3), p, 2^(R-l-3) p, 2^(R-3) p]` for every
/// `l` in `0..=R-4` and returns the first candidate that sums to 1 exactly.
/// That happens precisely when `p = 2^(R-3) + 2^l + 1`.
pub fn pow2_gap_family(p: u64, rank: usize) -> Option<Solution> {
    if rank < 5 || !is_prime_u64(p) {
        return None;
    }
    let top = (rank - 3) as u32;
    if top >= 64 || (1u64 << top) >= p {
        return None;
    }
    let set = PrimeSet::new([2, p]).ok()?;
    (0..=rank as u32 - 4).find_map(|l| {
        let mut d: Vec<Natural> = (1..=top).map(|i| pow(2, i)).collect();
        d.push(Natural::from(p));
        d.push(pow(2, top - l) * p);
        d.push(pow(2, top) * p);
        verified(d, &set, rank, "power-of-two gap").ok()
    })
}
