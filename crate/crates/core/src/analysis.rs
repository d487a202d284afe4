//! Result tables, the lowest-rank log fit, reference-sequence checks and the
//! on-disk cell cache.
//!
//! A table cell is either a value, `N/C` (its search ran past the per-cell
//! wall-clock budget) or empty (no solution uses every prime). Cells are
//! independent and may be computed concurrently; the table is assembled by
//! coordinates, so the result does not depend on scheduling.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::enumerate::{count_one_prime, search_restricted, EnumOptions, First, Tally};
use crate::error::{Error, Result};
use crate::feasibility::is_admissible;
use crate::greedy::{classify, greedy_run, Verdict};
use crate::numeric::{factor_over, is_prime_u64, Natural, PrimeSet};
use crate::output::{factorization_string, parse_natural};

/// Default wall-clock ceiling per table cell.
pub const DEFAULT_CELL_BUDGET: Duration = Duration::from_secs(300);

/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "UNITFRAC_CACHE_DIR";

/// Lowest rank with a solution over `{2, p}` for the 54 primes `3..=257`,
/// as `p,rank` rows.
pub const LOWEST_RANK_DATA: &str = include_str!("../data/lowest_rank_2p.csv");

/// Reference one-prime counts `s_p((p-1)t + 1)` for `t = 1, 2, ...`.
pub const REFERENCE_ONE_PRIME_COUNTS: [(u64, &[u64]); 3] = [
    (3, &[1, 1, 2, 4, 7, 13, 25, 48, 92, 176]),
    (5, &[1, 1, 2, 4, 8, 16, 31, 61]),
    (7, &[1, 1, 2, 4, 8, 16, 32]),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    OnePrimeCounts,
    GreedyBounds,
    GreedyFailures,
    LowestRanks,
    MaxDenominators,
    PairCounts,
    ThabitMaxdenoms,
    Runtimes,
}

impl TableKind {
    pub const ALL: [TableKind; 8] = [
        TableKind::OnePrimeCounts,
        TableKind::GreedyBounds,
        TableKind::GreedyFailures,
        TableKind::LowestRanks,
        TableKind::MaxDenominators,
        TableKind::PairCounts,
        TableKind::ThabitMaxdenoms,
        TableKind::Runtimes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TableKind::OnePrimeCounts => "one_prime_counts",
            TableKind::GreedyBounds => "greedy_bounds",
            TableKind::GreedyFailures => "greedy_failures",
            TableKind::LowestRanks => "lowest_ranks",
            TableKind::MaxDenominators => "max_denominators",
            TableKind::PairCounts => "pair_counts",
            TableKind::ThabitMaxdenoms => "thabit_maxdenoms",
            TableKind::Runtimes => "runtimes",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        TableKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown table kind {s:?}")))
    }
}

fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&p| is_prime_u64(p)).collect()
}

/// What to tabulate. For the two-prime tables, `primes` lists the partner
/// of 2; `ranks` holds ranks, except for `one_prime_counts` where it holds
/// `t` in `R = (p-1)t + 1`, and `lowest_ranks` where its end is the search
/// horizon.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub kind: TableKind,
    pub primes: Vec<u64>,
    pub ranks: RangeInclusive<usize>,
    /// `None` means unlimited.
    pub budget: Option<Duration>,
    pub parallel_width: usize,
}

impl TableSpec {
    /// The standard parameter ranges for each table.
    pub fn default_for(kind: TableKind) -> Self {
        let (primes, ranks) = match kind {
            TableKind::OnePrimeCounts => (vec![3, 5, 7, 11, 13, 17], 1..=7),
            TableKind::GreedyBounds => (vec![3, 5, 7, 11, 13, 17, 19], 5..=8),
            TableKind::GreedyFailures => (primes_between(3, 107), 2..=10),
            TableKind::LowestRanks => (primes_between(3, 257), 1..=14),
            TableKind::MaxDenominators => (primes_between(3, 97), 5..=11),
            TableKind::PairCounts | TableKind::Runtimes => (vec![3, 5, 7, 11, 13, 17, 19], 3..=15),
            TableKind::ThabitMaxdenoms => (vec![23, 47, 191, 383, 97, 193, 769], 9..=19),
        };
        Self {
            kind,
            primes,
            ranks,
            budget: Some(DEFAULT_CELL_BUDGET),
            parallel_width: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cell {
    Value {
        value: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        factorization: Option<Vec<(u64, u32)>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        verdict: Option<Verdict>,
    },
    /// Exists but ran past the budget.
    NotComputed,
    /// No solution uses every prime.
    Empty,
}

impl Cell {
    pub fn plain(value: impl ToString) -> Self {
        Cell::Value {
            value: value.to_string(),
            factorization: None,
            verdict: None,
        }
    }

    fn denominator(value: &Natural, set: &PrimeSet, verdict: Option<Verdict>) -> Self {
        Cell::Value {
            value: value.to_string(),
            factorization: factor_over(set, value).map(|f| f.factors(set)),
            verdict,
        }
    }

    pub fn value(&self) -> Option<&str> {
        match self {
            Cell::Value { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn verdict(&self) -> Option<Verdict> {
        match self {
            Cell::Value { verdict, .. } => *verdict,
            _ => None,
        }
    }

    fn to_csv_field(&self) -> String {
        match self {
            Cell::NotComputed => "N/C".into(),
            Cell::Empty => "EMPTY".into(),
            Cell::Value {
                value,
                factorization,
                verdict,
            } => {
                let mut s = value.clone();
                if let Some(f) = factorization {
                    s.push_str(";f=");
                    s.push_str(&factorization_string(f));
                }
                if let Some(v) = verdict {
                    s.push_str(";v=");
                    s.push_str(&v.to_string());
                }
                s
            }
        }
    }

    fn from_csv_field(field: &str) -> Result<Self> {
        match field {
            "N/C" => return Ok(Cell::NotComputed),
            "EMPTY" => return Ok(Cell::Empty),
            _ => {}
        }
        let mut parts = field.split(';');
        let value = parts.next().unwrap_or_default().to_string();
        let mut factorization = None;
        let mut verdict = None;
        for part in parts {
            if let Some(f) = part.strip_prefix("f=") {
                factorization = Some(parse_factorization(f)?);
            } else if let Some(v) = part.strip_prefix("v=") {
                verdict = Some(serde_json::from_value(serde_json::Value::String(v.into()))?);
            } else {
                return Err(Error::InvalidArgument(format!("bad table cell {field:?}")));
            }
        }
        Ok(Cell::Value {
            value,
            factorization,
            verdict,
        })
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::NotComputed => f.write_str("N/C"),
            Cell::Empty => f.write_str("-"),
            Cell::Value {
                value,
                factorization,
                verdict,
            } => {
                f.write_str(value)?;
                if let Some(fz) = factorization {
                    write!(f, " ({})", factorization_string(fz))?;
                }
                if let Some(v) = verdict {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `2^6*13`.
pub fn parse_factorization(s: &str) -> Result<Vec<(u64, u32)>> {
    if s == "1" {
        return Ok(Vec::new());
    }
    s.split('*')
        .map(|t| {
            let bad = || Error::InvalidArgument(format!("bad factor {t:?}"));
            match t.split_once('^') {
                Some((p, e)) => Ok((p.parse().map_err(|_| bad())?, e.parse().map_err(|_| bad())?)),
                None => Ok((t.parse().map_err(|_| bad())?, 1)),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub cells: Vec<Cell>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub kind: TableKind,
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn row(&self, label: &str) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn cell(&self, row: &str, column: &str) -> Option<&Cell> {
        let c = self.columns.iter().position(|c| c == column)?;
        self.row(row)?.cells.get(c)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Header `<kind>,<columns...>`; each row starts with its label.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(std::iter::once(self.kind.name().to_string()).chain(self.columns.iter().cloned()))?;
        for r in &self.rows {
            w.write_record(std::iter::once(r.label.clone()).chain(r.cells.iter().map(Cell::to_csv_field)))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(s: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(s.as_bytes());
        let mut records = r.records();
        let header = records
            .next()
            .ok_or_else(|| Error::InvalidArgument("empty table csv".into()))??;
        let kind: TableKind = header.get(0).unwrap_or_default().parse()?;
        let columns = header.iter().skip(1).map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in records {
            let rec = rec?;
            let label = rec.get(0).unwrap_or_default().to_string();
            let cells = rec.iter().skip(1).map(Cell::from_csv_field).collect::<Result<_>>()?;
            rows.push(TableRow { label, cells });
        }
        Ok(Self { kind, columns, rows })
    }

    /// Aligned plain-text rendering.
    pub fn to_text(&self) -> String {
        let mut grid: Vec<Vec<String>> = vec![std::iter::once(self.kind.name().to_string())
            .chain(self.columns.iter().cloned())
            .collect()];
        for r in &self.rows {
            grid.push(
                std::iter::once(r.label.clone())
                    .chain(r.cells.iter().map(|c| c.to_string()))
                    .collect(),
            );
        }
        let ncol = grid.iter().map(Vec::len).max().unwrap_or(0);
        let widths: Vec<usize> = (0..ncol)
            .map(|c| {
                grid.iter()
                    .filter_map(|r| r.get(c))
                    .map(|s| s.chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for r in grid {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(i, s)| format!("{s:<w$}", w = widths[i]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Key of one cached computation.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CacheKey {
    pub algorithm: &'static str,
    pub primes: Vec<u64>,
    pub rank: usize,
    pub options: String,
}

impl CacheKey {
    fn file_name(&self) -> String {
        let primes: Vec<String> = self.primes.iter().map(u64::to_string).collect();
        format!(
            "{}_{}_r{}_{}.json",
            self.algorithm,
            primes.join("-"),
            self.rank,
            self.options
        )
    }
}

/// File-per-key JSON cache under a version directory. Writes go through a
/// temporary file and a rename, so readers never see partial entries.
#[derive(Clone, Debug, Default)]
pub struct Cache {
    root: Option<PathBuf>,
}

impl Cache {
    pub fn disabled() -> Self {
        Self { root: None }
    }

    pub fn at(dir: impl AsRef<Path>) -> Self {
        Self {
            root: Some(dir.as_ref().join(concat!("v", env!("CARGO_PKG_VERSION")))),
        }
    }

    /// Uses `UNITFRAC_CACHE_DIR` if set; otherwise nothing is persisted.
    pub fn from_env() -> Self {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) if !dir.is_empty() => Self::at(dir),
            _ => Self::disabled(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.root.is_some()
    }

    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let path = self.root.as_ref()?.join(key.file_name());
        let text = std::fs::read_to_string(path).ok()?;
        serde_json::from_str(&text).ok()
    }

    pub fn put<T: Serialize>(&self, key: &CacheKey, value: &T) -> Result<()> {
        let Some(root) = &self.root else {
            return Ok(());
        };
        std::fs::create_dir_all(root)?;
        let name = key.file_name();
        let nonce = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_nanos())
            .unwrap_or(0);
        let tmp = root.join(format!(".{name}.{}.{nonce}.tmp", std::process::id()));
        std::fs::write(&tmp, serde_json::to_vec(value)?)?;
        std::fs::rename(&tmp, root.join(name))?;
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
struct StoredTally {
    total: u64,
    proper: u64,
    max_denominator: Option<String>,
    proper_max_denominator: Option<String>,
}

impl From<&Tally> for StoredTally {
    fn from(t: &Tally) -> Self {
        Self {
            total: t.total,
            proper: t.proper,
            max_denominator: t.max_denominator.as_ref().map(|d| d.to_string()),
            proper_max_denominator: t.proper_max_denominator.as_ref().map(|d| d.to_string()),
        }
    }
}

impl StoredTally {
    fn into_tally(self) -> Result<Tally> {
        Ok(Tally {
            total: self.total,
            proper: self.proper,
            max_denominator: self.max_denominator.as_deref().map(parse_natural).transpose()?,
            proper_max_denominator: self.proper_max_denominator.as_deref().map(parse_natural).transpose()?,
        })
    }
}

/// Full restricted tally (all solutions, split by prime usage), read from
/// or written to the cache.
pub fn cached_tally(set: &PrimeSet, rank: usize, budget: Option<Duration>, cache: &Cache) -> Result<Tally> {
    let key = CacheKey {
        algorithm: "restricted-tally",
        primes: set.primes().to_vec(),
        rank,
        options: "any".into(),
    };
    if let Some(stored) = cache.get::<StoredTally>(&key) {
        return stored.into_tally();
    }
    let deadline = budget.map(|b| Instant::now() + b);
    let tally: Tally = search_restricted(set, rank, &EnumOptions::default(), deadline)?;
    cache.put(&key, &StoredTally::from(&tally))?;
    Ok(tally)
}

fn pair(q: u64) -> Result<PrimeSet> {
    PrimeSet::new([2, q])
}

fn budgeted(r: Result<Cell>) -> Result<Cell> {
    match r {
        Err(Error::BudgetExhausted) => Ok(Cell::NotComputed),
        other => other,
    }
}

fn run_cells<F>(jobs: Vec<(usize, usize)>, width: usize, f: F) -> Result<Vec<((usize, usize), Cell)>>
where
    F: Fn(usize, usize) -> Result<Cell> + Sync,
{
    let eval = |&(r, c): &(usize, usize)| budgeted(f(r, c)).map(|cell| ((r, c), cell));
    if width == 0 {
        jobs.iter().map(eval).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(width)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(eval).collect())
    }
}

fn grid<F>(spec: &TableSpec, columns: Vec<String>, f: F) -> Result<Table>
where
    F: Fn(u64, usize) -> Result<Cell> + Sync,
{
    let ranks: Vec<usize> = spec.ranks.clone().collect();
    let jobs = (0..spec.primes.len())
        .flat_map(|r| (0..ranks.len()).map(move |c| (r, c)))
        .collect();
    let cells = run_cells(jobs, spec.parallel_width, |r, c| f(spec.primes[r], ranks[c]))?;
    let mut rows: Vec<TableRow> = spec
        .primes
        .iter()
        .map(|p| TableRow {
            label: p.to_string(),
            cells: vec![Cell::Empty; ranks.len()],
        })
        .collect();
    for ((r, c), cell) in cells {
        rows[r].cells[c] = cell;
    }
    Ok(Table {
        kind: spec.kind,
        columns,
        rows,
    })
}

fn rank_columns(spec: &TableSpec) -> Vec<String> {
    spec.ranks.clone().map(|r| format!("R={r}")).collect()
}

/// Builds the table described by `spec`.
pub fn generate_table(spec: &TableSpec, cache: &Cache) -> Result<Table> {
    let budget = spec.budget;
    match spec.kind {
        TableKind::OnePrimeCounts => {
            let cols = spec.ranks.clone().map(|t| format!("t={t}")).collect();
            grid(spec, cols, |p, t| {
                let rank = (p as usize - 1) * t + 1;
                Ok(Cell::plain(count_one_prime(p, rank)?))
            })
        }
        TableKind::GreedyBounds => grid(spec, rank_columns(spec), |q, rank| {
            let set = pair(q)?;
            let g = greedy_run(&set, rank)?;
            let tally = cached_tally(&set, rank, budget, cache)?;
            Ok(match classify(&g.bound, &tally) {
                Verdict::NoSolutions => Cell::Empty,
                v => Cell::denominator(&g.bound, &set, Some(v)),
            })
        }),
        TableKind::MaxDenominators | TableKind::ThabitMaxdenoms => grid(spec, rank_columns(spec), |q, rank| {
            let set = pair(q)?;
            let tally = cached_tally(&set, rank, budget, cache)?;
            Ok(match (&tally.max_denominator, tally.proper) {
                (Some(max), p) if p > 0 => Cell::denominator(max, &set, None),
                _ => Cell::Empty,
            })
        }),
        TableKind::PairCounts => grid(spec, rank_columns(spec), |q, rank| {
            let tally = cached_tally(&pair(q)?, rank, budget, cache)?;
            Ok(if tally.proper == 0 {
                Cell::Empty
            } else {
                Cell::plain(tally.total)
            })
        }),
        TableKind::Runtimes => grid(spec, rank_columns(spec), |q, rank| {
            let set = pair(q)?;
            let start = Instant::now();
            let deadline = budget.map(|b| start + b);
            let tally: Tally = search_restricted(&set, rank, &EnumOptions::default(), deadline)?;
            let secs = start.elapsed().as_secs_f64();
            Ok(if tally.proper == 0 {
                Cell::Empty
            } else {
                Cell::plain(format!("{secs:.6}"))
            })
        }),
        TableKind::LowestRanks => {
            let horizon = *spec.ranks.end();
            let jobs = (0..spec.primes.len()).map(|r| (r, 0)).collect();
            let cells = run_cells(jobs, spec.parallel_width, |r, _| {
                let set = pair(spec.primes[r])?;
                let deadline = budget.map(|b| Instant::now() + b);
                let opts = EnumOptions::all_primes();
                for rank in 1..=horizon {
                    if !is_admissible(&set, rank).admissible {
                        continue;
                    }
                    let First(found) = search_restricted(&set, rank, &opts, deadline)?;
                    if found.is_some() {
                        return Ok(Cell::plain(rank));
                    }
                }
                Ok(Cell::NotComputed)
            })?;
            let mut rows: Vec<TableRow> = spec
                .primes
                .iter()
                .map(|p| TableRow {
                    label: p.to_string(),
                    cells: vec![Cell::NotComputed],
                })
                .collect();
            for ((r, _), cell) in cells {
                rows[r].cells[0] = cell;
            }
            Ok(Table {
                kind: spec.kind,
                columns: vec!["rank".into()],
                rows,
            })
        }
        TableKind::GreedyFailures => {
            let ranks: Vec<usize> = spec.ranks.clone().filter(|&r| r >= 2).collect();
            let jobs: Vec<(usize, usize)> = ranks
                .iter()
                .enumerate()
                .flat_map(|(ri, _)| (0..spec.primes.len()).map(move |qi| (ri, qi)))
                .collect();
            let cells = run_cells(jobs, spec.parallel_width, |ri, qi| {
                let set = pair(spec.primes[qi])?;
                let rank = ranks[ri];
                let g = greedy_run(&set, rank)?;
                let tally = cached_tally(&set, rank, budget, cache)?;
                Ok(match classify(&g.bound, &tally) {
                    Verdict::Failure => Cell::plain(format!(
                        "{}/{}",
                        g.bound,
                        tally.max_denominator.expect("failure implies a maximum")
                    )),
                    _ => Cell::Empty,
                })
            })?;
            let mut rows = Vec::new();
            for ((ri, qi), cell) in cells {
                let label = format!("R={},q={}", ranks[ri], spec.primes[qi]);
                match cell {
                    Cell::Empty => {}
                    Cell::NotComputed => rows.push(TableRow {
                        label,
                        cells: vec![
                            Cell::plain(ranks[ri]),
                            Cell::plain(spec.primes[qi]),
                            Cell::NotComputed,
                            Cell::NotComputed,
                        ],
                    }),
                    Cell::Value { value, .. } => {
                        let (bound, max) = value.split_once('/').expect("bound/max");
                        rows.push(TableRow {
                            label,
                            cells: vec![
                                Cell::plain(ranks[ri]),
                                Cell::plain(spec.primes[qi]),
                                Cell::plain(bound),
                                Cell::plain(max),
                            ],
                        });
                    }
                }
            }
            Ok(Table {
                kind: spec.kind,
                columns: ["rank", "q", "greedy_bound", "max_denominator"]
                    .map(String::from)
                    .to_vec(),
                rows,
            })
        }
    }
}

/// Least-squares fit of `rank ~ slope * ln(p) + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub residual_sum_squares: f64,
    pub points_used: usize,
}

impl FitResult {
    pub fn predict(&self, p: f64) -> f64 {
        self.slope * p.ln() + self.intercept
    }
}

/// Sum of squared residuals of a line through `(ln p, rank)` points.
pub fn residual_sum_squares(points: &[(f64, f64)], slope: f64, intercept: f64) -> f64 {
    points
        .iter()
        .map(|&(p, r)| {
            let e = r - (slope * p.ln() + intercept);
            e * e
        })
        .sum()
}

/// Fits the model by the normal equations. Needs at least two distinct `p`.
pub fn fit_log_model(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.iter().any(|&(p, _)| p.is_nan() || p <= 0.0) {
        return Err(Error::DegenerateFit("p must be positive".into()));
    }
    let n = points.len() as f64;
    let first = points.first().map(|&(p, _)| p);
    if points.len() < 2 || points.iter().all(|&(p, _)| Some(p) == first) {
        return Err(Error::DegenerateFit("need at least two distinct p values".into()));
    }
    let xs: Vec<f64> = points.iter().map(|&(p, _)| p.ln()).collect();
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, r)| r).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(points)
        .map(|(x, &(_, y))| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    Ok(FitResult {
        slope,
        intercept,
        residual_sum_squares: residual_sum_squares(points, slope, intercept),
        points_used: points.len(),
    })
}

/// Reads `p,rank` rows (header required).
pub fn read_fit_points<R: std::io::Read>(input: R) -> Result<Vec<(f64, f64)>> {
    let mut r = csv::Reader::from_reader(input);
    r.records()
        .map(|rec| {
            let rec = rec?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("bad fit row {rec:?}")))
            };
            Ok((field(0)?, field(1)?))
        })
        .collect()
}

/// The bundled lowest-rank dataset as `(p, rank)` pairs.
pub fn lowest_rank_reference() -> Vec<(u64, usize)> {
    read_fit_points(LOWEST_RANK_DATA.as_bytes())
        .expect("bundled data parses")
        .into_iter()
        .map(|(p, r)| (p as u64, r as usize))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosscheckEntry {
    pub p: u64,
    pub t: usize,
    pub rank: usize,
    pub expected: u64,
    pub computed: u64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrosscheckReport {
    pub entries: Vec<CrosscheckEntry>,
}

impl CrosscheckReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }
}

/// Recomputes the one-prime counts and compares them with the embedded
/// reference sequences.
pub fn reference_crosscheck() -> CrosscheckReport {
    let mut entries = Vec::new();
    for (p, expected) in REFERENCE_ONE_PRIME_COUNTS {
        for (i, &want) in expected.iter().enumerate() {
            let t = i + 1;
            let rank = (p as usize - 1) * t + 1;
            let computed = count_one_prime(p, rank).expect("p is prime");
            entries.push(CrosscheckEntry {
                p,
                t,
                rank,
                expected: want,
                computed,
                pass: computed == want,
            });
        }
    }
    CrosscheckReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(kind: TableKind, primes: &[u64], ranks: RangeInclusive<usize>) -> TableSpec {
        TableSpec {
            kind,
            primes: primes.to_vec(),
            ranks,
            budget: None,
            parallel_width: 0,
        }
    }

    fn values(t: &Table, row: &str) -> Vec<String> {
        t.row(row)
            .unwrap()
            .cells
            .iter()
            .map(|c| c.value().unwrap_or("").to_string())
            .collect()
    }

    #[test]
    fn max_denominator_row_for_three() {
        let t = generate_table(&spec(TableKind::MaxDenominators, &[3], 5..=8), &Cache::disabled()).unwrap();
        let row = &t.row("3").unwrap().cells;
        let f: Vec<String> = row
            .iter()
            .map(|c| match c {
                Cell::Value {
                    factorization: Some(f), ..
                } => factorization_string(f),
                other => panic!("{other:?}"),
            })
            .collect();
        assert_eq!(f, ["2^3*3^3", "2^3*3^5", "2^3*3^7", "2^10*3^6"]);
    }

    #[test]
    fn pair_counts_row_for_seven() {
        let t = generate_table(&spec(TableKind::PairCounts, &[7], 3..=8), &Cache::disabled()).unwrap();
        let row = &t.row("7").unwrap().cells;
        assert_eq!(row[0], Cell::Empty);
        assert_eq!(row[1], Cell::Empty);
        assert_eq!(values(&t, "7")[2..], ["5", "18", "68", "269"]);
    }

    #[test]
    fn greedy_bounds_mark_verdicts() {
        let t = generate_table(&spec(TableKind::GreedyBounds, &[13], 5..=7), &Cache::disabled()).unwrap();
        let row = &t.row("13").unwrap().cells;
        assert_eq!(row[0], Cell::Empty);
        assert_eq!((row[1].value(), row[1].verdict()), (Some("104"), Some(Verdict::Tight)));
        assert_eq!(
            (row[2].value(), row[2].verdict()),
            (Some("676"), Some(Verdict::Failure))
        );
    }

    #[test]
    fn exhausted_budget_gives_not_computed() {
        let mut s = spec(TableKind::PairCounts, &[3], 9..=9);
        s.budget = Some(Duration::ZERO);
        let t = generate_table(&s, &Cache::disabled()).unwrap();
        assert_eq!(t.row("3").unwrap().cells[0], Cell::NotComputed);
    }

    #[test]
    fn cached_cells_match_fresh_cells() {
        let dir = std::env::temp_dir().join(format!("unitfrac-cache-test-{}", std::process::id()));
        let cache = Cache::at(&dir);
        let s = spec(TableKind::MaxDenominators, &[5, 7], 5..=8);
        let fresh = generate_table(&s, &Cache::disabled()).unwrap();
        let first = generate_table(&s, &cache).unwrap();
        let second = generate_table(&s, &cache).unwrap();
        assert_eq!(fresh, first);
        assert_eq!(first, second);
        let entries = std::fs::read_dir(dir.join(concat!("v", env!("CARGO_PKG_VERSION"))))
            .unwrap()
            .count();
        assert_eq!(entries, 8);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn table_kind_names_round_trip() {
        for k in TableKind::ALL {
            assert_eq!(k.name().parse::<TableKind>().unwrap(), k);
        }
        assert_eq!("pair-counts".parse::<TableKind>().unwrap(), TableKind::PairCounts);
        assert!("nope".parse::<TableKind>().is_err());
    }

    #[test]
    fn fit_two_points() {
        let e = std::f64::consts::E;
        let f = fit_log_model(&[(e, 3.0), (e * e, 5.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!(f.residual_sum_squares < 1e-20);
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(fit_log_model(&[(3.0, 3.0), (3.0, 4.0)]).is_err());
        assert!(fit_log_model(&[(3.0, 3.0)]).is_err());
        assert!(fit_log_model(&[]).is_err());
    }

    #[test]
    fn fit_synthetic_log_data() {
        let pts: Vec<(f64, f64)> = primes_between(2, 100)
            .into_iter()
            .map(|p| (p as f64, (2.0 * (p as f64).ln() + 1.0).round()))
            .collect();
        let f = fit_log_model(&pts).unwrap();
        assert!((1.8..=2.2).contains(&f.slope), "{f:?}");
    }

    #[test]
    fn fit_is_a_least_squares_optimum() {
        let pts: Vec<(f64, f64)> = lowest_rank_reference()
            .iter()
            .map(|&(p, r)| (p as f64, r as f64))
            .collect();
        let f = fit_log_model(&pts).unwrap();
        for (da, db) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
            assert!(residual_sum_squares(&pts, f.slope + da, f.intercept + db) > f.residual_sum_squares);
        }
    }

    #[test]
    fn crosscheck_passes() {
        let r = reference_crosscheck();
        assert!(r.passed());
        assert_eq!(r.entries.len(), 25);
    }

    fn arb_cell() -> impl Strategy<Value = Cell> {
        prop_oneof![
            Just(Cell::NotComputed),
            Just(Cell::Empty),
            (
                1u64..u64::MAX,
                proptest::option::of(proptest::collection::vec((2u64..1000, 1u32..40), 1..4)),
                proptest::option::of(prop_oneof![
                    Just(Verdict::Tight),
                    Just(Verdict::Slack),
                    Just(Verdict::Failure)
                ]),
            )
                .prop_map(|(v, factorization, verdict)| Cell::Value {
                    value: v.to_string(),
                    factorization,
                    verdict
                }),
        ]
    }

    proptest! {
        #[test]
        fn table_json_and_csv_round_trip(
            kind in proptest::sample::select(TableKind::ALL.to_vec()),
            rows in proptest::collection::vec(proptest::collection::vec(arb_cell(), 3), 0..5),
        ) {
            let table = Table {
                kind,
                columns: vec!["R=5".into(), "R=6".into(), "R=7".into()],
                rows: rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, cells)| TableRow { label: format!("{}", 3 + 2 * i), cells })
                    .collect(),
            };
            prop_assert_eq!(Table::from_json(&table.to_json().unwrap()).unwrap(), table.clone());
            prop_assert_eq!(Table::from_csv(&table.to_csv().unwrap()).unwrap(), table);
        }
    }
}
