//! Complete enumeration of Egyptian fraction representations of 1.
//!
//! Three enumerators live here:
//!
//! * [`enumerate_restricted`]: denominators are S-smooth for a [`PrimeSet`]
//!   of any size. Depth-first over weakly increasing sequences; with residual
//!   `1 - sigma = m/n` and `s` denominators placed, the next denominator `d`
//!   ranges over smooth values with `d > n/m` and `d <= n (R - s) / m` (at
//!   least one of the remaining denominators must be no larger than their
//!   average). The final denominator is forced: it is `n` when `m == 1`.
//! * [`enumerate_one_prime`]: powers of a single prime, built level by level
//!   from multiplicities; integer arithmetic only.
//! * [`enumerate_unrestricted`]: every integer solution of a small rank,
//!   with position `j` bounded by `u_j (R - j + 1)`.
//!
//! Output is always in strictly increasing lexicographic order, so no
//! deduplication pass exists.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::time::Instant;

use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::feasibility::{is_admissible, one_prime_cap, u_sequence};
use crate::numeric::{factor_over, smooth_values_between, Natural, PrimeSet};

/// Default largest rank accepted by [`enumerate_unrestricted`] without `force`.
pub const UNRESTRICTED_RANK_LIMIT: usize = 6;

// Subtrees below this depth are fanned out when running in parallel.
const PARALLEL_DEPTH: usize = 2;

/// A candidate representation of 1: a list of denominators.
///
/// Solutions produced by the enumerators are weakly increasing and sum to 1
/// exactly; hand-built ones are checked with
/// [`verify_solution`](crate::families::verify_solution).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Solution {
    denominators: Vec<Natural>,
}

impl Solution {
    pub fn new(denominators: Vec<Natural>) -> Result<Self> {
        if denominators.is_empty() {
            return Err(Error::InvalidSolution("no denominators".into()));
        }
        if denominators.iter().any(Zero::is_zero) {
            return Err(Error::InvalidSolution("zero denominator".into()));
        }
        Ok(Self { denominators })
    }

    pub fn from_u64s(denominators: &[u64]) -> Result<Self> {
        Self::new(denominators.iter().map(|&d| Natural::from(d)).collect())
    }

    pub(crate) fn from_vec_unchecked(denominators: Vec<Natural>) -> Self {
        Self { denominators }
    }

    pub fn denominators(&self) -> &[Natural] {
        &self.denominators
    }

    pub fn rank(&self) -> usize {
        self.denominators.len()
    }

    pub fn last(&self) -> &Natural {
        self.denominators.last().expect("nonempty")
    }

    pub fn into_denominators(self) -> Vec<Natural> {
        self.denominators
    }
}

impl std::fmt::Display for Solution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for (i, d) in self.denominators.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, "]")
    }
}

/// Knobs for the restricted enumerator.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnumOptions {
    /// Keep only solutions in which every prime of the set divides some
    /// denominator.
    pub require_all_primes: bool,
    /// Report progress on stderr as top-level branches finish.
    pub emit_progress: bool,
    /// Worker threads; 0 runs sequentially. Never changes the result.
    pub parallel_width: usize,
    /// Compatibility mode: only exponents strictly below this cap are
    /// allowed, like a pregenerated candidate list.
    pub cap: Option<u32>,
}

impl EnumOptions {
    pub fn all_primes() -> Self {
        Self {
            require_all_primes: true,
            ..Self::default()
        }
    }

    pub fn with_parallel_width(mut self, width: usize) -> Self {
        self.parallel_width = width;
        self
    }
}

/// Summary numbers for a [`SolutionSet`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetStats {
    pub count: u64,
    pub max_denominator: Option<Natural>,
}

/// All solutions of one rank, lexicographically sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    pub solutions: Vec<Solution>,
    /// `None` for unrestricted enumeration.
    pub prime_set: Option<PrimeSet>,
    pub rank: usize,
    pub stats: SetStats,
}

impl SolutionSet {
    pub fn new(solutions: Vec<Solution>, prime_set: Option<PrimeSet>, rank: usize) -> Self {
        debug_assert!(solutions.windows(2).all(|w| w[0] < w[1]));
        let max_denominator = solutions.iter().map(|s| s.last().clone()).max();
        let stats = SetStats {
            count: solutions.len() as u64,
            max_denominator,
        };
        Self {
            solutions,
            prime_set,
            rank,
            stats,
        }
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Solution> {
        self.solutions.iter()
    }
}

/// Whether a sink wants more solutions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Receives solutions from the restricted search.
///
/// Sinks for disjoint subtrees are merged in subtree order, so a sink that
/// appends sees the same sequence whether or not the search ran in parallel.
pub trait Sink: Default + Send {
    /// `uses_all_primes` tells whether every prime of the set divides some
    /// denominator.
    fn accept(&mut self, denominators: &[Natural], uses_all_primes: bool) -> Flow;
    fn absorb(&mut self, later: Self);
}

/// Collects solutions in emission order.
#[derive(Default)]
pub struct Collect(pub Vec<Solution>);

impl Sink for Collect {
    fn accept(&mut self, denominators: &[Natural], _: bool) -> Flow {
        self.0.push(Solution::from_vec_unchecked(denominators.to_vec()));
        Flow::Continue
    }

    fn absorb(&mut self, later: Self) {
        self.0.extend(later.0);
    }
}

/// Counts solutions and tracks the largest denominator, split by whether all
/// primes are used.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub total: u64,
    pub proper: u64,
    pub max_denominator: Option<Natural>,
    pub proper_max_denominator: Option<Natural>,
}

fn keep_max(slot: &mut Option<Natural>, v: Option<Natural>) {
    if let Some(v) = v {
        if slot.as_ref().is_none_or(|m| &v > m) {
            *slot = Some(v);
        }
    }
}

impl Sink for Tally {
    fn accept(&mut self, denominators: &[Natural], uses_all_primes: bool) -> Flow {
        let last = denominators.last().expect("nonempty");
        self.total += 1;
        if self.max_denominator.as_ref().is_none_or(|m| last > m) {
            self.max_denominator = Some(last.clone());
        }
        if uses_all_primes {
            self.proper += 1;
            if self.proper_max_denominator.as_ref().is_none_or(|m| last > m) {
                self.proper_max_denominator = Some(last.clone());
            }
        }
        Flow::Continue
    }

    fn absorb(&mut self, later: Self) {
        self.total += later.total;
        self.proper += later.proper;
        keep_max(&mut self.max_denominator, later.max_denominator);
        keep_max(&mut self.proper_max_denominator, later.proper_max_denominator);
    }
}

/// Stops at the first solution.
#[derive(Default)]
pub struct First(pub Option<Solution>);

impl Sink for First {
    fn accept(&mut self, denominators: &[Natural], _: bool) -> Flow {
        if self.0.is_none() {
            self.0 = Some(Solution::from_vec_unchecked(denominators.to_vec()));
        }
        Flow::Stop
    }

    fn absorb(&mut self, later: Self) {
        if self.0.is_none() {
            self.0 = later.0;
        }
    }
}

struct Aborted;

struct RestrictedSearch<'a> {
    set: &'a PrimeSet,
    primes: Vec<Natural>,
    rank: usize,
    opts: &'a EnumOptions,
    deadline: Option<Instant>,
    stop: AtomicBool,
    nodes: AtomicU64,
    parallel: bool,
}

impl RestrictedSearch<'_> {
    fn within_cap(&self, d: &Natural) -> bool {
        match self.opts.cap {
            None => true,
            Some(cap) => factor_over(self.set, d).is_some_and(|f| f.exponents().iter().all(|&e| e < cap)),
        }
    }

    fn uses_all_primes(&self, path: &[Natural]) -> bool {
        self.primes.iter().all(|p| path.iter().any(|d| (d % p).is_zero()))
    }

    fn emit<K: Sink>(&self, path: &[Natural], sink: &mut K) -> Flow {
        let all = self.set.len() == 1 || self.uses_all_primes(path);
        if self.opts.require_all_primes && !all {
            return Flow::Continue;
        }
        sink.accept(path, all)
    }

    fn tick(&self) -> Result<(), Aborted> {
        if self.stop.load(Ordering::Relaxed) {
            return Err(Aborted);
        }
        let n = self.nodes.fetch_add(1, Ordering::Relaxed);
        if n.is_multiple_of(4096) {
            if let Some(deadline) = self.deadline {
                if Instant::now() > deadline {
                    self.stop.store(true, Ordering::Relaxed);
                    return Err(Aborted);
                }
            }
        }
        Ok(())
    }

    /// Smooth candidates for the next (non-final) position.
    fn candidates(&self, last: &Natural, m: &Natural, n: &Natural, remaining: usize) -> Vec<Natural> {
        let above = n / m + 1u32;
        let lower = if &above > last { above } else { last.clone() };
        let upper = (n * remaining) / m;
        let mut out = Vec::new();
        smooth_values_between(&self.primes, &lower, &upper, &mut out);
        if self.opts.cap.is_some() {
            out.retain(|d| self.within_cap(d));
        }
        out
    }

    fn child(m: &Natural, n: &Natural, d: &Natural) -> (Natural, Natural) {
        let num = m * d - n;
        let den = n * d;
        let g = num.gcd(&den);
        (num / &g, den / g)
    }

    fn run<K: Sink>(&self, path: &mut Vec<Natural>, m: &Natural, n: &Natural, sink: &mut K) -> Result<(), Aborted> {
        self.tick()?;
        let remaining = self.rank - path.len();
        let two = Natural::from(2u32);
        let last = path.last().unwrap_or(&two).clone();
        if remaining == 1 {
            if m.is_one() && n >= &last && self.within_cap(n) {
                path.push(n.clone());
                let flow = self.emit(path, sink);
                path.pop();
                if flow == Flow::Stop {
                    self.stop.store(true, Ordering::Relaxed);
                    return Err(Aborted);
                }
            }
            return Ok(());
        }
        let candidates = self.candidates(&last, m, n, remaining);
        if self.parallel && path.len() < PARALLEL_DEPTH && candidates.len() > 1 {
            let prefix = path.clone();
            let parts: Vec<(K, Result<(), Aborted>)> = candidates
                .par_iter()
                .map(|d| {
                    let mut sub = K::default();
                    let mut p = prefix.clone();
                    p.push(d.clone());
                    let (m2, n2) = Self::child(m, n, d);
                    let r = self.run(&mut p, &m2, &n2, &mut sub);
                    self.progress(&p, &sub);
                    (sub, r)
                })
                .collect();
            let mut status = Ok(());
            for (sub, r) in parts {
                sink.absorb(sub);
                if r.is_err() {
                    status = Err(Aborted);
                }
            }
            return status;
        }
        for d in &candidates {
            path.push(d.clone());
            let (m2, n2) = Self::child(m, n, d);
            let r = self.run(path, &m2, &n2, sink);
            if path.len() == 1 {
                self.progress(path, sink);
            }
            path.pop();
            r?;
        }
        Ok(())
    }

    fn progress<K: Sink>(&self, path: &[Natural], _sink: &K) {
        if self.opts.emit_progress && path.len() == 1 {
            eprintln!(
                "rank {} over {}: finished branch x1 = {} ({} nodes visited)",
                self.rank,
                self.set,
                path[0],
                self.nodes.load(Ordering::Relaxed)
            );
        }
    }
}

/// Runs the restricted search into an arbitrary sink. With a deadline, an
/// unfinished search fails with [`Error::BudgetExhausted`].
pub fn search_restricted<K: Sink>(
    set: &PrimeSet,
    rank: usize,
    opts: &EnumOptions,
    deadline: Option<Instant>,
) -> Result<K> {
    let mut sink = K::default();
    if rank == 0 {
        return Ok(sink);
    }
    let search = RestrictedSearch {
        set,
        primes: set.primes().iter().map(|&p| Natural::from(p)).collect(),
        rank,
        opts,
        deadline,
        stop: AtomicBool::new(false),
        nodes: AtomicU64::new(0),
        parallel: opts.parallel_width > 0,
    };
    let one = Natural::one();
    let outcome = if search.parallel {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(opts.parallel_width)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| search.run(&mut Vec::new(), &one, &one, &mut sink))
    } else {
        search.run(&mut Vec::new(), &one, &one, &mut sink)
    };
    match outcome {
        Ok(()) => Ok(sink),
        // A sink asking to stop is a normal early exit.
        Err(Aborted) if deadline.is_none_or(|d| Instant::now() <= d) => Ok(sink),
        Err(Aborted) => Err(Error::BudgetExhausted),
    }
}

/// All weakly increasing rank-`R` solutions with S-smooth denominators.
pub fn enumerate_restricted(set: &PrimeSet, rank: usize, opts: &EnumOptions) -> SolutionSet {
    let Collect(solutions) = search_restricted(set, rank, opts, None).expect("no deadline, cannot run out of budget");
    SolutionSet::new(solutions, Some(set.clone()), rank)
}

/// Solution counts with and without the every-prime requirement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RestrictedCount {
    pub total: u64,
    pub proper: u64,
}

pub fn count_restricted(set: &PrimeSet, rank: usize) -> RestrictedCount {
    count_restricted_with(set, rank, &EnumOptions::default())
}

pub fn count_restricted_with(set: &PrimeSet, rank: usize, opts: &EnumOptions) -> RestrictedCount {
    let opts = EnumOptions {
        require_all_primes: false,
        ..opts.clone()
    };
    let tally: Tally = search_restricted(set, rank, &opts, None).expect("no deadline");
    RestrictedCount {
        total: tally.total,
        proper: tally.proper,
    }
}

/// Walks one-prime solutions as multiplicity vectors: `counts[k]` copies of
/// `p^(k+1)`. At level `k` there are `avail` units of `1/p^(k+1)`; some are
/// kept as terms and the rest split into `p` units each at the next level.
fn one_prime_walk(p: u64, rank: u64, cap: u32, visit: &mut dyn FnMut(&[u64])) {
    fn go(p: u64, rank: u64, cap: u32, avail: u64, used: u64, counts: &mut Vec<u64>, visit: &mut dyn FnMut(&[u64])) {
        let level = counts.len() as u32 + 1;
        // Keep more terms first: that order is lexicographically ascending.
        for keep in (0..=avail).rev() {
            let used2 = used + keep;
            if used2 > rank {
                continue;
            }
            let rest = avail - keep;
            counts.push(keep);
            if rest == 0 {
                if used2 == rank {
                    visit(counts);
                }
            } else if level < cap && used2 + rest * p <= rank {
                go(p, rank, cap, rest * p, used2, counts, visit);
            }
            counts.pop();
        }
    }
    go(p, rank, cap, p, 0, &mut Vec::new(), visit);
}

/// All rank-`R` solutions whose denominators are powers of `p`.
pub fn enumerate_one_prime(p: u64, rank: usize) -> Result<SolutionSet> {
    let set = PrimeSet::single(p)?;
    let Ok(cap) = one_prime_cap(p, rank) else {
        return Ok(SolutionSet::new(Vec::new(), Some(set), rank));
    };
    if rank == 1 {
        let trivial = Solution::from_vec_unchecked(vec![Natural::one()]);
        return Ok(SolutionSet::new(vec![trivial], Some(set), rank));
    }
    let mut solutions = Vec::new();
    let pn = Natural::from(p);
    one_prime_walk(p, rank as u64, cap, &mut |counts| {
        let mut denoms = Vec::with_capacity(rank);
        let mut power = Natural::one();
        for &c in counts {
            power *= &pn;
            denoms.extend(std::iter::repeat_n(power.clone(), c as usize));
        }
        solutions.push(Solution::from_vec_unchecked(denoms));
    });
    Ok(SolutionSet::new(solutions, Some(set), rank))
}

/// Number of rank-`R` solutions using only powers of `p`.
pub fn count_one_prime(p: u64, rank: usize) -> Result<u64> {
    PrimeSet::single(p)?;
    let Ok(cap) = one_prime_cap(p, rank) else {
        return Ok(0);
    };
    if rank == 1 {
        return Ok(1);
    }
    let mut count = 0u64;
    one_prime_walk(p, rank as u64, cap, &mut |_| count += 1);
    Ok(count)
}

/// Every weakly increasing integer solution of rank `R`. Ranks above
/// [`UNRESTRICTED_RANK_LIMIT`] are refused unless `force` is set.
pub fn enumerate_unrestricted(rank: usize, force: bool) -> Result<SolutionSet> {
    if rank == 0 {
        return Err(Error::RankTooSmall { rank, min: 1 });
    }
    if rank > UNRESTRICTED_RANK_LIMIT && !force {
        return Err(Error::Intractable {
            rank,
            limit: UNRESTRICTED_RANK_LIMIT,
        });
    }
    if rank == 1 {
        return Ok(SolutionSet::new(
            vec![Solution::from_vec_unchecked(vec![Natural::one()])],
            None,
            1,
        ));
    }
    let u = u_sequence(rank);
    let mut out = Vec::new();
    unrestricted_walk(rank, &u, &mut Vec::new(), &Natural::one(), &Natural::one(), &mut out);
    Ok(SolutionSet::new(out, None, rank))
}

fn unrestricted_walk(
    rank: usize,
    u: &[Natural],
    path: &mut Vec<Natural>,
    m: &Natural,
    n: &Natural,
    out: &mut Vec<Solution>,
) {
    let j = path.len() + 1;
    let last = path.last().cloned().unwrap_or_else(Natural::one);
    if j == rank {
        // 1/f must be an integer no smaller than the previous entry.
        if m.is_one() && n >= &last {
            let mut sol = path.clone();
            sol.push(n.clone());
            out.push(Solution::from_vec_unchecked(sol));
        }
        return;
    }
    let remaining = rank - j + 1;
    let u_bound = &u[j - 1] * remaining;
    // sigma + 1/k < 1 means k > n/m; some remaining term is at most the
    // average n * remaining / m.
    let avg_bound = (n * remaining) / m;
    let upper = u_bound.min(avg_bound);
    let mut k = (n / m + 1u32).max(last).max(Natural::from(j as u64 + 1));
    while k <= upper {
        let num = m * &k - n;
        let den = n * &k;
        let g = num.gcd(&den);
        path.push(k.clone());
        unrestricted_walk(rank, u, path, &(num / &g), &(den / g), out);
        path.pop();
        k += 1u32;
    }
}

/// Largest denominator in the set, if any.
pub fn max_denominator(set: &SolutionSet) -> Option<Natural> {
    set.stats.max_denominator.clone()
}

/// Least admissible rank `R <= max_rank` with a solution using every prime
/// of the set.
pub fn lowest_rank(set: &PrimeSet, max_rank: usize) -> Option<usize> {
    lowest_rank_with(set, max_rank, &EnumOptions::default())
}

pub fn lowest_rank_with(set: &PrimeSet, max_rank: usize, opts: &EnumOptions) -> Option<usize> {
    let opts = EnumOptions {
        require_all_primes: true,
        ..opts.clone()
    };
    (1..=max_rank).find(|&rank| {
        is_admissible(set, rank).admissible
            && search_restricted::<First>(set, rank, &opts, None)
                .expect("no deadline")
                .0
                .is_some()
    })
}

/// `u64` view of small denominators, for tests and display.
pub fn as_u64s(sol: &Solution) -> Option<Vec<u64>> {
    sol.denominators().iter().map(|d| d.to_u64()).collect()
}
