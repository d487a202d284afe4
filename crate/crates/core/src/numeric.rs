//! Exact arithmetic, primality testing and S-smooth integers.
//!
//! Integers and rationals are arbitrary precision (`num-bigint` /
//! `num-rational`); rationals are always kept in lowest terms with a positive
//! denominator. Prime sets are small and their members fit in a `u64`.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative integer.
pub type Natural = BigUint;

/// Arbitrary-precision rational in lowest terms.
pub type Rational = BigRational;

/// `1/d` as an exact rational.
pub fn unit_fraction(d: &Natural) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(d.clone()))
}

/// Smallest integer `>= x`.
pub fn ceil_rational(x: &Rational) -> BigInt {
    x.ceil().to_integer()
}

const TRIAL_DIVISION_LIMIT: u64 = 10_000_000;

// Deterministic for every n < 3.3 * 10^24, which covers all of u64.
const MR_WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

fn strong_probable_prime(n: u64, a: u64) -> bool {
    let mut d = n - 1;
    let mut s = 0;
    while d.is_multiple_of(2) {
        d /= 2;
        s += 1;
    }
    let mut x = pow_mod(a, d, n);
    if x == 1 || x == n - 1 {
        return true;
    }
    for _ in 1..s {
        x = mul_mod(x, x, n);
        if x == n - 1 {
            return true;
        }
    }
    false
}

/// Deterministic primality test for 64-bit inputs.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n.is_multiple_of(p) {
            return n == p;
        }
    }
    if n < TRIAL_DIVISION_LIMIT {
        let mut f = 41;
        while f * f <= n {
            if n.is_multiple_of(f) {
                return false;
            }
            f += 2;
        }
        return true;
    }
    MR_WITNESSES.iter().all(|&a| strong_probable_prime(n, a))
}

fn strong_probable_prime_big(n: &Natural, a: &Natural) -> bool {
    let one = Natural::one();
    let n_minus_1 = n - &one;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut x = a.modpow(&d, n);
    if x == one || x == n_minus_1 {
        return true;
    }
    for _ in 1..s {
        x = (&x * &x) % n;
        if x == n_minus_1 {
            return true;
        }
    }
    false
}

/// Primality test. Exact below 2^64; above that a strong-pseudoprime test to
/// the first twenty prime bases.
pub fn is_prime(n: &Natural) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    if n.is_even() {
        return false;
    }
    let bases = [
        2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71,
    ];
    bases.iter().all(|&a| strong_probable_prime_big(n, &Natural::from(a)))
}

/// A strictly increasing, nonempty list of distinct primes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct PrimeSet {
    primes: Vec<u64>,
}

impl PrimeSet {
    /// Validates and sorts the given primes.
    pub fn new(primes: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut primes: Vec<u64> = primes.into_iter().collect();
        if primes.is_empty() {
            return Err(Error::EmptyPrimeSet);
        }
        primes.sort_unstable();
        for w in primes.windows(2) {
            if w[0] == w[1] {
                return Err(Error::DuplicatePrime(w[0]));
            }
        }
        if let Some(&bad) = primes.iter().find(|&&p| !is_prime_u64(p)) {
            return Err(Error::NotPrime(bad.to_string()));
        }
        Ok(Self { primes })
    }

    pub fn single(p: u64) -> Result<Self> {
        Self::new([p])
    }

    pub fn primes(&self) -> &[u64] {
        &self.primes
    }

    pub fn len(&self) -> usize {
        self.primes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min(&self) -> u64 {
        self.primes[0]
    }

    pub fn contains(&self, p: u64) -> bool {
        self.primes.binary_search(&p).is_ok()
    }

    /// Whether `n` factors completely over this set.
    pub fn is_smooth(&self, n: &Natural) -> bool {
        factor_over(self, n).is_some()
    }
}

impl TryFrom<Vec<u64>> for PrimeSet {
    type Error = Error;

    fn try_from(v: Vec<u64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<PrimeSet> for Vec<u64> {
    fn from(s: PrimeSet) -> Self {
        s.primes
    }
}

impl fmt::Display for PrimeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, p) in self.primes.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "}}")
    }
}

impl FromStr for PrimeSet {
    type Err = Error;

    /// Parses a comma separated list such as `2,13`.
    fn from_str(s: &str) -> Result<Self> {
        let primes = s
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u64>()
                    .map_err(|_| Error::InvalidArgument(format!("not an integer: {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(primes)
    }
}

/// An S-smooth integer stored as its exponent vector over a [`PrimeSet`],
/// together with its value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SmoothNumber {
    exponents: Vec<u32>,
    value: Natural,
}

impl SmoothNumber {
    pub fn from_exponents(set: &PrimeSet, exponents: Vec<u32>) -> Result<Self> {
        if exponents.len() != set.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} exponents, got {}",
                set.len(),
                exponents.len()
            )));
        }
        let value = set
            .primes()
            .iter()
            .zip(&exponents)
            .fold(Natural::one(), |acc, (&p, &e)| acc * Natural::from(p).pow(e));
        Ok(Self { exponents, value })
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn value(&self) -> &Natural {
        &self.value
    }

    pub fn into_value(self) -> Natural {
        self.value
    }

    /// Nonzero `(prime, exponent)` pairs.
    pub fn factors(&self, set: &PrimeSet) -> Vec<(u64, u32)> {
        set.primes()
            .iter()
            .zip(&self.exponents)
            .filter(|(_, &e)| e > 0)
            .map(|(&p, &e)| (p, e))
            .collect()
    }

    /// Renders the factorization as `2^6*13`; `1` for the empty product.
    pub fn factorization_string(&self, set: &PrimeSet) -> String {
        let parts: Vec<String> = self
            .factors(set)
            .into_iter()
            .map(|(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
            .collect();
        if parts.is_empty() {
            "1".to_owned()
        } else {
            parts.join("*")
        }
    }
}

/// Exponent vector of `n` over `set`, or `None` if `n` has another prime
/// factor (or is zero).
pub fn factor_over(set: &PrimeSet, n: &Natural) -> Option<SmoothNumber> {
    if n.is_zero() {
        return None;
    }
    let mut rest = n.clone();
    let mut exponents = Vec::with_capacity(set.len());
    for &p in set.primes() {
        let p = Natural::from(p);
        let mut e = 0;
        loop {
            let (q, r) = rest.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        exponents.push(e);
    }
    rest.is_one().then(|| SmoothNumber {
        exponents,
        value: n.clone(),
    })
}

/// Every S-smooth value in `[lower, upper]` (1 included if in range), ascending.
pub(crate) fn smooth_values_in(set: &PrimeSet, lower: &Natural, upper: &Natural) -> Vec<Natural> {
    let primes: Vec<Natural> = set.primes().iter().map(|&p| Natural::from(p)).collect();
    let mut out = Vec::new();
    smooth_values_between(&primes, lower, upper, &mut out);
    out
}

/// Fills `out` with the smooth values in `[lower, upper]`, ascending. Walks
/// exponent vectors of all but the last prime and solves for the last
/// exponent's range directly.
pub(crate) fn smooth_values_between(primes: &[Natural], lower: &Natural, upper: &Natural, out: &mut Vec<Natural>) {
    out.clear();
    if lower > upper {
        return;
    }
    fn walk(primes: &[Natural], cur: Natural, lower: &Natural, upper: &Natural, out: &mut Vec<Natural>) {
        let (p, rest) = primes.split_first().expect("nonempty prime list");
        let mut v = cur;
        if rest.is_empty() {
            while &v < lower {
                v *= p;
            }
            while &v <= upper {
                out.push(v.clone());
                v *= p;
            }
        } else {
            while &v <= upper {
                walk(rest, v.clone(), lower, upper, out);
                v *= p;
            }
        }
    }
    walk(primes, Natural::one(), lower, upper, out);
    out.sort_unstable();
}

/// The S-smooth integers `v > 1` with `lower <= v <= upper`, ascending.
pub fn smooth_stream(set: &PrimeSet, lower: &Natural, upper: &Natural) -> SmoothStream {
    let two = Natural::from(2u32);
    let lower = if lower < &two { &two } else { lower };
    let values = smooth_values_in(set, lower, upper);
    SmoothStream {
        set: set.clone(),
        values: values.into_iter(),
    }
}

/// Iterator returned by [`smooth_stream`].
pub struct SmoothStream {
    set: PrimeSet,
    values: std::vec::IntoIter<Natural>,
}

impl Iterator for SmoothStream {
    type Item = SmoothNumber;

    fn next(&mut self) -> Option<SmoothNumber> {
        let v = self.values.next()?;
        Some(factor_over(&self.set, &v).expect("generated values are smooth"))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        self.values.size_hint()
    }
}

impl ExactSizeIterator for SmoothStream {}

/// Unbounded ascending stream of the S-smooth integers greater than 1.
///
/// Each value is pushed from exactly one parent: the one obtained by dividing
/// out its largest prime factor.
pub struct SmoothAscending {
    primes: Vec<Natural>,
    heap: BinaryHeap<Reverse<(Natural, usize, Vec<u32>)>>,
}

impl SmoothAscending {
    pub fn new(set: &PrimeSet) -> Self {
        let primes: Vec<Natural> = set.primes().iter().map(|&p| Natural::from(p)).collect();
        let mut heap = BinaryHeap::new();
        for (i, p) in primes.iter().enumerate() {
            let mut e = vec![0; primes.len()];
            e[i] = 1;
            heap.push(Reverse((p.clone(), i, e)));
        }
        Self { primes, heap }
    }
}

impl Iterator for SmoothAscending {
    type Item = SmoothNumber;

    fn next(&mut self) -> Option<SmoothNumber> {
        let Reverse((value, top, exponents)) = self.heap.pop()?;
        for j in top..self.primes.len() {
            let mut e = exponents.clone();
            e[j] += 1;
            self.heap.push(Reverse((&value * &self.primes[j], j, e)));
        }
        Some(SmoothNumber { exponents, value })
    }
}

/// The least S-smooth integer `v > 1` with `v >= x`.
pub fn next_smooth_geq(set: &PrimeSet, x: &Rational) -> SmoothNumber {
    let c = ceil_rational(x);
    let target = c.to_biguint().unwrap_or_default().max(Natural::from(2u32));
    let primes: Vec<Natural> = set.primes().iter().map(|&p| Natural::from(p)).collect();

    fn walk(
        primes: &[Natural],
        idx: usize,
        cur: Natural,
        exps: &mut Vec<u32>,
        target: &Natural,
        best: &mut Option<(Natural, Vec<u32>)>,
    ) {
        let p = &primes[idx];
        let mut v = cur;
        let mut e = 0;
        if idx + 1 == primes.len() {
            while &v < target {
                v *= p;
                e += 1;
            }
            if best.as_ref().is_none_or(|(b, _)| &v < b) {
                exps.push(e);
                *best = Some((v, exps.clone()));
                exps.pop();
            }
            return;
        }
        loop {
            exps.push(e);
            walk(primes, idx + 1, v.clone(), exps, target, best);
            exps.pop();
            if &v >= target {
                break;
            }
            v *= p;
            e += 1;
        }
    }

    let mut best = None;
    walk(&primes, 0, Natural::one(), &mut Vec::new(), &target, &mut best);
    let (value, exponents) = best.expect("some power of the smallest prime reaches the target");
    SmoothNumber { exponents, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(v: u64) -> Natural {
        Natural::from(v)
    }

    fn values(it: impl Iterator<Item = SmoothNumber>) -> Vec<u64> {
        it.map(|s| s.value().to_u64().unwrap()).collect()
    }

    #[test]
    fn primality_examples() {
        assert!(is_prime(&n(2)));
        assert!(is_prime(&n(65537)));
        assert!(!is_prime(&n(1)));
        assert!(!is_prime(&n(0)));
        assert!(!is_prime(&n(561)));
        assert!(is_prime(&n(18_446_744_073_709_551_557)));
        assert!(!is_prime(&n(3_215_031_751)));
        assert!(is_prime(&((Natural::one() << 89u32) - 1u32)));
        assert!(!is_prime(&((Natural::one() << 67u32) - 1u32)));
    }

    #[test]
    fn primality_matches_trial_division_below_20000() {
        for v in 0..20_000u64 {
            let brute = v >= 2 && (2..v).take_while(|d| d * d <= v).all(|d| v % d != 0);
            assert_eq!(is_prime_u64(v), brute, "{v}");
        }
    }

    #[test]
    fn prime_set_validation() {
        assert_eq!(PrimeSet::new([13, 2]).unwrap().primes(), &[2, 13]);
        assert!(matches!(PrimeSet::new([2, 9]), Err(Error::NotPrime(_))));
        assert!(matches!(PrimeSet::new([3, 3]), Err(Error::DuplicatePrime(3))));
        assert!(matches!(PrimeSet::new([]), Err(Error::EmptyPrimeSet)));
        assert_eq!("2, 7".parse::<PrimeSet>().unwrap().to_string(), "{2,7}");
        assert!("2,x".parse::<PrimeSet>().is_err());
    }

    #[test]
    fn smooth_stream_examples() {
        let s27 = PrimeSet::new([2, 7]).unwrap();
        assert_eq!(
            values(smooth_stream(&s27, &n(2), &n(32))),
            vec![2, 4, 7, 8, 14, 16, 28, 32]
        );
        let s3 = PrimeSet::single(3).unwrap();
        assert_eq!(values(smooth_stream(&s3, &n(2), &n(30))), vec![3, 9, 27]);
        let s25 = PrimeSet::new([2, 5]).unwrap();
        assert!(values(smooth_stream(&s25, &n(6), &n(6))).is_empty());
        // 1 is never part of the stream
        assert_eq!(values(smooth_stream(&s3, &n(1), &n(3))), vec![3]);
    }

    #[test]
    fn next_smooth_examples() {
        let s25 = PrimeSet::new([2, 5]).unwrap();
        let x = Rational::new(BigInt::from(64000), BigInt::from(3));
        assert_eq!(next_smooth_geq(&s25, &x).value(), &n(25000));
        let s27 = PrimeSet::new([2, 7]).unwrap();
        let x = Rational::from_integer(BigInt::from(1792));
        assert_eq!(next_smooth_geq(&s27, &x).value(), &n(1792));
        let s23 = PrimeSet::new([2, 3]).unwrap();
        let x = Rational::from_integer(BigInt::from(5));
        let v = next_smooth_geq(&s23, &x);
        assert_eq!(v.value(), &n(6));
        assert_eq!(v.exponents(), &[1, 1]);
    }

    #[test]
    fn factor_over_examples() {
        let s = PrimeSet::new([2, 13]).unwrap();
        let f = factor_over(&s, &n(832)).unwrap();
        assert_eq!(f.exponents(), &[6, 1]);
        assert_eq!(f.factorization_string(&s), "2^6*13");
        assert_eq!(factor_over(&s, &n(1)).unwrap().exponents(), &[0, 0]);
        assert!(factor_over(&PrimeSet::new([2, 5]).unwrap(), &n(21)).is_none());
    }

    #[test]
    fn ascending_stream_agrees_with_range_stream() {
        let s = PrimeSet::new([2, 3, 5]).unwrap();
        let asc: Vec<u64> = values(SmoothAscending::new(&s).take_while(|v| v.value() <= &n(5000)));
        assert_eq!(asc, values(smooth_stream(&s, &n(2), &n(5000))));
    }
}
