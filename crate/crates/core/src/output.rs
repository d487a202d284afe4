//! JSON, CSV and text encodings of solutions.
//!
//! Denominators are written as decimal strings so values beyond the range of
//! JSON numbers survive; each one is accompanied by its factorization as
//! `[[p, e], ...]`.

use std::io::{Read, Write};

use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::enumerate::{Solution, SolutionSet};
use crate::error::{Error, Result};
use crate::numeric::{factor_over, is_prime_u64, Natural, PrimeSet};

/// Full factorization by trial division. Only meant for denominators of the
/// small unrestricted ranks; values that do not fit in 64 bits are refused.
pub fn factorize(n: &Natural) -> Result<Vec<(u64, u32)>> {
    let mut rest = n
        .to_u64()
        .ok_or_else(|| Error::InvalidArgument(format!("{n} is too large to factor")))?;
    if rest == 0 {
        return Err(Error::InvalidArgument("cannot factor 0".into()));
    }
    let mut out = Vec::new();
    let mut push = |p: u64, rest: &mut u64| {
        let mut e = 0;
        while (*rest).is_multiple_of(p) {
            *rest /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut rest);
    push(3, &mut rest);
    let mut f = 5u64;
    while f.saturating_mul(f) <= rest {
        push(f, &mut rest);
        push(f + 2, &mut rest);
        f += 6;
    }
    if rest > 1 {
        debug_assert!(is_prime_u64(rest));
        out.push((rest, 1));
    }
    Ok(out)
}

/// One solution in the interchange schema.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub rank: usize,
    pub denominators: Vec<String>,
    pub factorizations: Vec<Vec<(u64, u32)>>,
}

impl SolutionRecord {
    /// Factorizations are taken over `set` when given, otherwise computed in
    /// full.
    pub fn from_solution(sol: &Solution, set: Option<&PrimeSet>) -> Result<Self> {
        let factorizations = sol
            .denominators()
            .iter()
            .map(|d| match set.and_then(|s| factor_over(s, d).map(|f| f.factors(s))) {
                Some(f) => Ok(f),
                None => factorize(d),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rank: sol.rank(),
            denominators: sol.denominators().iter().map(|d| d.to_string()).collect(),
            factorizations,
        })
    }

    /// Parses the denominators back and checks them against the stored
    /// factorizations.
    pub fn to_solution(&self) -> Result<Solution> {
        if self.denominators.len() != self.rank || self.factorizations.len() != self.rank {
            return Err(Error::InvalidArgument("record length does not match rank".into()));
        }
        let denoms = self
            .denominators
            .iter()
            .map(|s| parse_natural(s))
            .collect::<Result<Vec<_>>>()?;
        for (d, f) in denoms.iter().zip(&self.factorizations) {
            let v = f
                .iter()
                .fold(Natural::one(), |acc, &(p, e)| acc * Natural::from(p).pow(e));
            if &v != d {
                return Err(Error::InvalidArgument(format!(
                    "factorization does not multiply to {d}"
                )));
            }
        }
        Solution::new(denoms)
    }
}

pub fn parse_natural(s: &str) -> Result<Natural> {
    s.trim()
        .parse::<Natural>()
        .map_err(|_| Error::InvalidArgument(format!("not a nonnegative integer: {s:?}")))
}

/// A whole solution set in JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionSetRecord {
    pub rank: usize,
    /// Absent for unrestricted enumeration.
    pub primes: Option<Vec<u64>>,
    pub count: u64,
    pub max_denominator: Option<String>,
    pub solutions: Vec<SolutionRecord>,
}

impl SolutionSetRecord {
    pub fn from_set(set: &SolutionSet) -> Result<Self> {
        let solutions = set
            .iter()
            .map(|s| SolutionRecord::from_solution(s, set.prime_set.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            rank: set.rank,
            primes: set.prime_set.as_ref().map(|p| p.primes().to_vec()),
            count: set.stats.count,
            max_denominator: set.stats.max_denominator.as_ref().map(|d| d.to_string()),
            solutions,
        })
    }

    pub fn to_set(&self) -> Result<SolutionSet> {
        let prime_set = self.primes.clone().map(PrimeSet::new).transpose()?;
        let sols = self
            .solutions
            .iter()
            .map(SolutionRecord::to_solution)
            .collect::<Result<Vec<_>>>()?;
        Ok(SolutionSet::new(sols, prime_set, self.rank))
    }
}

pub fn to_json(set: &SolutionSet) -> Result<String> {
    Ok(serde_json::to_string_pretty(&SolutionSetRecord::from_set(set)?)?)
}

pub fn from_json(text: &str) -> Result<SolutionSet> {
    serde_json::from_str::<SolutionSetRecord>(text)?.to_set()
}

/// Header `x1,...,xR`, then one solution per row.
pub fn write_csv<W: Write>(rank: usize, solutions: &[Solution], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=rank).map(|i| format!("x{i}")))?;
    for s in solutions {
        w.write_record(s.denominators().iter().map(|d| d.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<Solution>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for row in r.records() {
        let row = row?;
        let denoms = row.iter().map(parse_natural).collect::<Result<Vec<_>>>()?;
        out.push(Solution::new(denoms)?);
    }
    Ok(out)
}

pub fn to_csv_string(set: &SolutionSet) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(set.rank, &set.solutions, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// One bracketed solution per line.
pub fn to_text(set: &SolutionSet) -> String {
    let mut s = String::new();
    for sol in set.iter() {
        s.push_str(&sol.to_string());
        s.push('\n');
    }
    s
}

/// `2^6*13` style rendering of a factorization.
pub fn factorization_string(f: &[(u64, u32)]) -> String {
    if f.is_empty() {
        return "1".into();
    }
    f.iter()
        .map(|&(p, e)| if e == 1 { p.to_string() } else { format!("{p}^{e}") })
        .collect::<Vec<_>>()
        .join("*")
}
