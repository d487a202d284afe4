//! The greedy maximum-denominator bound and its comparison with the true
//! maximum.
//!
//! Candidates are every S-smooth integer greater than 1 (any exponent may be
//! zero), visited in increasing order. The stated procedure is for two
//! primes; the same rule is applied unchanged to larger sets.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::enumerate::{search_restricted, EnumOptions, Solution, Tally};
use crate::error::{Error, Result};
use crate::numeric::{next_smooth_geq, unit_fraction, Natural, PrimeSet, Rational, SmoothAscending};

/// Output of one greedy run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyResult {
    /// The `R - 1` greedily accepted denominators, ascending.
    pub prefix: Vec<Natural>,
    /// Sum of the prefix reciprocals; always below 1.
    pub sigma: Rational,
    /// `1 / (1 - sigma)`.
    pub gamma: Rational,
    /// Least smooth integer `>= gamma`.
    pub bound: Natural,
    /// `sigma + 1/bound == 1`, i.e. `gamma` is itself a smooth integer.
    pub exact_completion: bool,
}

impl GreedyResult {
    /// The prefix followed by the bound. A solution only when
    /// `exact_completion` holds.
    pub fn completed(&self) -> Solution {
        let mut d = self.prefix.clone();
        d.push(self.bound.clone());
        Solution::new(d).expect("nonzero denominators")
    }
}

pub fn greedy_run(set: &PrimeSet, rank: usize) -> Result<GreedyResult> {
    if rank < 2 {
        return Err(Error::RankTooSmall { rank, min: 2 });
    }
    let one = Rational::one();
    let mut sigma = Rational::zero();
    let mut prefix = Vec::with_capacity(rank - 1);
    for candidate in SmoothAscending::new(set) {
        if prefix.len() == rank - 1 {
            break;
        }
        let next = &sigma + unit_fraction(candidate.value());
        if next < one {
            sigma = next;
            prefix.push(candidate.into_value());
        }
    }
    let gamma = (&one - &sigma).recip();
    let bound = next_smooth_geq(set, &gamma).into_value();
    let exact_completion = gamma == Rational::from_integer(BigInt::from(bound.clone()));
    Ok(GreedyResult {
        prefix,
        sigma,
        gamma,
        bound,
        exact_completion,
    })
}

/// How the greedy bound relates to the largest denominator that occurs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The true maximum equals the bound.
    Tight,
    /// Every denominator is below the bound.
    Slack,
    /// Some solution has a denominator above the bound.
    Failure,
    /// No solution uses every prime of the set.
    NoSolutions,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Tight => "TIGHT",
            Verdict::Slack => "SLACK",
            Verdict::Failure => "FAILURE",
            Verdict::NoSolutions => "NO_SOLUTIONS",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GreedyComparison {
    pub greedy: GreedyResult,
    /// Largest denominator over all solutions, including those that miss a
    /// prime.
    pub true_max: Option<Natural>,
    pub verdict: Verdict,
}

/// Classifies a bound against a tally of the full enumeration.
///
/// Tightness is judged against every solution, while emptiness is judged on
/// solutions that use all primes; a set whose only solutions avoid some
/// prime is reported as [`Verdict::NoSolutions`].
pub fn classify(bound: &Natural, tally: &Tally) -> Verdict {
    if tally.proper == 0 {
        return Verdict::NoSolutions;
    }
    let max = tally.max_denominator.as_ref().expect("proper > 0 implies a maximum");
    match max.cmp(bound) {
        std::cmp::Ordering::Equal => Verdict::Tight,
        std::cmp::Ordering::Less => Verdict::Slack,
        std::cmp::Ordering::Greater => Verdict::Failure,
    }
}

pub fn greedy_vs_actual(set: &PrimeSet, rank: usize) -> Result<GreedyComparison> {
    greedy_vs_actual_with(set, rank, &EnumOptions::default())
}

pub fn greedy_vs_actual_with(set: &PrimeSet, rank: usize, opts: &EnumOptions) -> Result<GreedyComparison> {
    let greedy = greedy_run(set, rank)?;
    let opts = EnumOptions {
        require_all_primes: false,
        ..opts.clone()
    };
    let tally: Tally = search_restricted(set, rank, &opts, None)?;
    let verdict = classify(&greedy.bound, &tally);
    Ok(GreedyComparison {
        greedy,
        true_max: tally.max_denominator,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::smooth_stream;

    fn set(p: &[u64]) -> PrimeSet {
        PrimeSet::new(p.iter().copied()).unwrap()
    }

    fn nat(v: u64) -> Natural {
        Natural::from(v)
    }

    fn nats(v: &[u64]) -> Vec<Natural> {
        v.iter().map(|&x| nat(x)).collect()
    }

    fn ratio(a: i64, b: i64) -> Rational {
        Rational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn worked_example_two_seven() {
        let g = greedy_run(&set(&[2, 7]), 7).unwrap();
        assert_eq!(g.prefix, nats(&[2, 4, 7, 14, 32, 256]));
        assert_eq!(g.sigma, ratio(1791, 1792));
        assert_eq!(g.bound, nat(1792));
        assert!(g.exact_completion);
    }

    #[test]
    fn worked_example_two_five() {
        let g = greedy_run(&set(&[2, 5]), 7).unwrap();
        assert_eq!(g.prefix, nats(&[2, 4, 5, 25, 125, 512]));
        assert_eq!(g.sigma, ratio(63997, 64000));
        assert_eq!(g.bound, nat(25000));
        assert!(!g.exact_completion);
    }

    #[test]
    fn rank_two() {
        let g = greedy_run(&set(&[2, 3]), 2).unwrap();
        assert_eq!(g.prefix, nats(&[2]));
        assert_eq!(g.bound, nat(2));
        assert!(g.exact_completion);
        assert!(greedy_run(&set(&[2, 3]), 1).is_err());
    }

    #[test]
    fn greedy_invariants_hold() {
        for ps in [[2u64, 3], [2, 5], [2, 7], [2, 13], [3, 5]] {
            for rank in 2..=9 {
                let s = set(&ps);
                let g = greedy_run(&s, rank).unwrap();
                assert_eq!(g.prefix.len(), rank - 1);
                assert!(g.prefix.windows(2).all(|w| w[0] <= w[1]));
                assert!(g.sigma < Rational::one());
                let last = Rational::from_integer(BigInt::from(g.prefix.last().unwrap().clone()));
                if ps[0] == 2 {
                    assert!(g.gamma >= last, "{ps:?} {rank}");
                }
                // each pick is the least smooth value above the previous pick
                // that keeps the sum below one
                let mut sigma = Rational::zero();
                let mut prev = nat(1);
                for d in &g.prefix {
                    let skipped = smooth_stream(&s, &prev, d);
                    for c in skipped.filter(|c| c.value() > &prev) {
                        if c.value() == d {
                            break;
                        }
                        assert!(&sigma + unit_fraction(c.value()) >= Rational::one());
                    }
                    sigma += unit_fraction(d);
                    prev = d.clone();
                }
            }
        }
    }

    #[test]
    fn comparisons() {
        let c = greedy_vs_actual(&set(&[2, 13]), 7).unwrap();
        assert_eq!(c.verdict, Verdict::Failure);
        assert_eq!(c.greedy.bound, nat(676));
        assert_eq!(c.true_max, Some(nat(832)));

        let c = greedy_vs_actual(&set(&[2, 23]), 8).unwrap();
        assert_eq!(
            (c.verdict, c.greedy.bound, c.true_max),
            (Verdict::Failure, nat(1472), Some(nat(2944)))
        );

        let c = greedy_vs_actual(&set(&[2, 7]), 7).unwrap();
        assert_eq!((c.verdict, c.greedy.bound), (Verdict::Tight, nat(1792)));

        assert_eq!(
            greedy_vs_actual(&set(&[2, 11]), 5).unwrap().verdict,
            Verdict::NoSolutions
        );
    }
}
