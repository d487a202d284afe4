use std::fs::File;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use unitfrac::analysis::{
    fit_log_model, generate_table, read_fit_points, reference_crosscheck, Cache, TableKind, TableSpec,
};
use unitfrac::enumerate::{
    count_one_prime, count_restricted_with, enumerate_one_prime, enumerate_restricted, enumerate_unrestricted,
    lowest_rank_with, search_restricted, Tally,
};
use unitfrac::families::{
    canonical_one_prime, double_last, fermat_family, mersenne_family, pow2_gap_family, verify_solution,
};
use unitfrac::greedy::{greedy_run, greedy_vs_actual_with};
use unitfrac::numeric::factor_over;
use unitfrac::output::{factorization_string, factorize, parse_natural, to_csv_string, to_json, to_text};
use unitfrac::{EnumOptions, Error, PrimeSet, Solution, SolutionSet};

const EXIT_INVALID: u8 = 2;
const EXIT_INTRACTABLE: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "unitfrac",
    version,
    about = "Egyptian fractions of 1 with smooth denominators"
)]
struct Cli {
    /// Worker threads for searches (0 = sequential).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Report search progress on stderr.
    #[arg(long, global = true)]
    progress: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// List every solution of a given rank.
    Enumerate {
        #[arg(long, conflicts_with = "prime")]
        primes: Option<PrimeSet>,
        /// Single-prime enumeration.
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long)]
        rank: usize,
        /// Keep only solutions that use every prime.
        #[arg(long)]
        all_primes: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Only allow exponents below this value.
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Count solutions.
    Count {
        #[arg(long, conflicts_with = "prime")]
        primes: Option<PrimeSet>,
        #[arg(long)]
        prime: Option<u64>,
        #[arg(long, conflicts_with = "t_range")]
        rank: Option<usize>,
        /// Inclusive range of t for ranks (p-1)t+1, e.g. 1..10.
        #[arg(long, value_parser = parse_range)]
        t_range: Option<RangeInclusive<usize>>,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Greedy maximum-denominator bound.
    Greedy {
        #[arg(long)]
        primes: PrimeSet,
        #[arg(long)]
        rank: usize,
        /// Also enumerate and compare with the true maximum.
        #[arg(long)]
        compare: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Largest denominator over all solutions.
    Maxdenom {
        #[arg(long)]
        primes: PrimeSet,
        #[arg(long)]
        rank: usize,
    },
    /// Least rank with a solution using every prime.
    LowestRank {
        #[arg(long)]
        primes: PrimeSet,
        #[arg(long)]
        max_rank: usize,
    },
    /// Unrestricted enumeration.
    All {
        #[arg(long)]
        rank: usize,
        /// Run past the tractability limit.
        #[arg(long)]
        force: bool,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Closed-form solution families.
    Family {
        #[command(subcommand)]
        family: FamilyCommand,
        /// Check the result and exit with status 4 if it fails.
        #[arg(long, global = true)]
        verify: bool,
        #[arg(long, global = true, value_enum, default_value = "text")]
        format: Format,
    },
    /// Regenerate a summary table.
    Table {
        #[arg(value_parser = parse_kind)]
        kind: TableKind,
        /// Partner primes (rows); defaults to the standard range.
        #[arg(long, value_delimiter = ',')]
        primes: Option<Vec<u64>>,
        /// Inclusive column range (ranks, or t for one_prime_counts).
        #[arg(long, value_parser = parse_range)]
        ranks: Option<RangeInclusive<usize>>,
        /// Per-cell wall-clock budget in seconds (0 = unlimited).
        #[arg(long, default_value_t = 300.0)]
        budget: f64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Fit rank ~ a ln p + b to a p,rank CSV file.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compare one-prime counts with the stored reference sequences.
    Crosscheck,
}

#[derive(Subcommand)]
enum FamilyCommand {
    /// Fermat-prime product family, n <= 4.
    Fermat {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        rank: usize,
    },
    /// Family built on the Mersenne prime 2^q - 1.
    Mersenne {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        rank: usize,
    },
    /// Canonical single-prime solution.
    Canonical {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        rank: usize,
    },
    /// Split the last denominator of a solution in two.
    Double {
        /// Comma-separated denominators.
        #[arg(long)]
        solution: String,
    },
    /// Solution over {2, p} for p = 2^(R-3) + 2^l + 1.
    Pow2gap {
        #[arg(long)]
        prime: u64,
        #[arg(long)]
        rank: usize,
    },
}

fn parse_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok(a..=b)
}

fn parse_kind(s: &str) -> Result<TableKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// Failure carrying its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Intractable { .. } | Error::BudgetExhausted => EXIT_INTRACTABLE,
            Error::InvalidSolution(_) => EXIT_VERIFY,
            _ => EXIT_INVALID,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure {
                code: 0,
                message: String::new(),
            };
        }
        Error::from(e).into()
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_INVALID,
        message: message.into(),
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> CliResult {
    let base = EnumOptions {
        emit_progress: cli.progress,
        parallel_width: cli.threads,
        ..EnumOptions::default()
    };
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Enumerate {
            primes,
            prime,
            rank,
            all_primes,
            format,
            cap,
        } => {
            let set = match (primes, prime) {
                (Some(set), None) => enumerate_restricted(
                    &set,
                    rank,
                    &EnumOptions {
                        require_all_primes: all_primes,
                        cap,
                        ..base
                    },
                ),
                (None, Some(p)) => enumerate_one_prime(p, rank)?,
                _ => return Err(invalid("give --primes or --prime")),
            };
            write_set(&mut out, &set, format)?;
        }
        Command::Count {
            primes,
            prime,
            rank,
            t_range,
            cap,
        } => match (primes, prime, rank, t_range) {
            (Some(set), None, Some(rank), None) => {
                let c = count_restricted_with(&set, rank, &EnumOptions { cap, ..base });
                writeln!(out, "total {}", c.total)?;
                writeln!(out, "all_primes {}", c.proper)?;
            }
            (None, Some(p), Some(rank), None) => writeln!(out, "{}", count_one_prime(p, rank)?)?,
            (None, Some(p), None, Some(ts)) => {
                writeln!(out, "t,rank,count")?;
                for t in ts {
                    let rank = (p as usize - 1) * t + 1;
                    writeln!(out, "{t},{rank},{}", count_one_prime(p, rank)?)?;
                }
            }
            _ => {
                return Err(invalid(
                    "use --primes S --rank R, --prime P --rank R or --prime P --t-range A..B",
                ))
            }
        },
        Command::Greedy {
            primes,
            rank,
            compare,
            format,
        } => greedy(&mut out, &primes, rank, compare, format, &base)?,
        Command::Maxdenom { primes, rank } => {
            let tally: Tally = search_restricted(&primes, rank, &base, None)?;
            if tally.proper == 0 {
                writeln!(out, "EMPTY")?;
            } else {
                let max = tally.max_denominator.expect("nonempty");
                let f = factor_over(&primes, &max)
                    .expect("smooth")
                    .factorization_string(&primes);
                writeln!(out, "{max} {f}")?;
            }
        }
        Command::LowestRank { primes, max_rank } => match lowest_rank_with(&primes, max_rank, &base) {
            Some(r) => writeln!(out, "{r}")?,
            None => writeln!(out, "none <= {max_rank}")?,
        },
        Command::All { rank, force, format } => {
            let set = enumerate_unrestricted(rank, force)?;
            write_set(&mut out, &set, format)?;
        }
        Command::Family { family, verify, format } => {
            let (sol, set, require_all) = match family {
                FamilyCommand::Fermat { n, rank } => {
                    let s = fermat_family(n, rank)?;
                    let primes =
                        std::iter::once(2).chain(unitfrac::families::FERMAT_PRIMES[..n as usize].iter().copied());
                    (s, Some(PrimeSet::new(primes)?), true)
                }
                FamilyCommand::Mersenne { q, rank } => {
                    let s = mersenne_family(q, rank)?;
                    (s, Some(PrimeSet::new([2, (1u64 << q) - 1])?), true)
                }
                FamilyCommand::Canonical { prime, rank } => {
                    (canonical_one_prime(prime, rank)?, Some(PrimeSet::single(prime)?), false)
                }
                FamilyCommand::Double { solution } => {
                    let d = solution.split(',').map(parse_natural).collect::<Result<Vec<_>, _>>()?;
                    (double_last(&Solution::new(d)?)?, None, false)
                }
                FamilyCommand::Pow2gap { prime, rank } => match pow2_gap_family(prime, rank) {
                    Some(s) => (s, Some(PrimeSet::new([2, prime])?), true),
                    None => return Err(invalid(format!("{prime} is not 2^{}+2^l+1", rank.saturating_sub(3)))),
                },
            };
            let rank = sol.rank();
            let result = SolutionSet::new(vec![sol.clone()], set.clone(), rank);
            write_set(&mut out, &result, format)?;
            if verify {
                let report = verify_solution(&sol, set.as_ref(), Some(rank), require_all);
                let verdict = if report.passed() { "PASS" } else { "FAIL" };
                eprintln!(
                    "verify: {verdict} (sum = {}, sorted = {}, smooth = {:?}, all primes = {:?})",
                    report.sum,
                    report.sorted,
                    report.all_smooth(),
                    report.all_primes_used
                );
                if !report.passed() {
                    return Err(Failure {
                        code: EXIT_VERIFY,
                        message: String::new(),
                    });
                }
            }
        }
        Command::Table {
            kind,
            primes,
            ranks,
            budget,
            format,
        } => {
            if budget.is_nan() || budget < 0.0 {
                return Err(invalid("budget must be nonnegative"));
            }
            let mut spec = TableSpec::default_for(kind);
            if let Some(p) = primes {
                spec.primes = p;
            }
            if let Some(r) = ranks {
                spec.ranks = r;
            }
            spec.budget = (budget > 0.0).then(|| Duration::from_secs_f64(budget));
            spec.parallel_width = cli.threads;
            let table = generate_table(&spec, &Cache::from_env())?;
            match format {
                Format::Json => writeln!(out, "{}", table.to_json()?)?,
                Format::Csv => write!(out, "{}", table.to_csv()?)?,
                Format::Text => write!(out, "{}", table.to_text())?,
            }
        }
        Command::Fit { input, format } => {
            let points = read_fit_points(File::open(&input)?)?;
            let fit = fit_log_model(&points)?;
            match format {
                Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&fit).map_err(Error::from)?)?,
                Format::Csv => {
                    writeln!(out, "p,rank,fitted")?;
                    for (p, r) in &points {
                        writeln!(out, "{p},{r},{:.6}", fit.predict(*p))?;
                    }
                }
                Format::Text => {
                    writeln!(out, "slope {:.6}", fit.slope)?;
                    writeln!(out, "intercept {:.6}", fit.intercept)?;
                    writeln!(out, "rss {:.6}", fit.residual_sum_squares)?;
                    writeln!(out, "points {}", fit.points_used)?;
                }
            }
        }
        Command::Crosscheck => {
            let report = reference_crosscheck();
            for e in &report.entries {
                let mark = if e.pass { "ok" } else { "MISMATCH" };
                writeln!(
                    out,
                    "p={} t={} R={} expected={} computed={} {mark}",
                    e.p, e.t, e.rank, e.expected, e.computed
                )?;
            }
            if !report.passed() {
                return Err(Failure {
                    code: EXIT_VERIFY,
                    message: "reference mismatch".into(),
                });
            }
        }
    }
    Ok(())
}

fn write_set(out: &mut impl Write, set: &SolutionSet, format: Format) -> CliResult {
    match format {
        Format::Json => writeln!(out, "{}", to_json(set)?)?,
        Format::Csv => write!(out, "{}", to_csv_string(set)?)?,
        Format::Text => {
            write!(out, "{}", to_text(set))?;
            eprintln!("{} solutions", set.len());
        }
    }
    Ok(())
}

fn greedy(
    out: &mut impl Write,
    set: &PrimeSet,
    rank: usize,
    compare: bool,
    format: Format,
    opts: &EnumOptions,
) -> CliResult {
    let (g, cmp) = if compare {
        let c = greedy_vs_actual_with(set, rank, opts)?;
        (c.greedy.clone(), Some(c))
    } else {
        (greedy_run(set, rank)?, None)
    };
    let bound_f = factor_over(set, &g.bound)
        .expect("bound is smooth")
        .factorization_string(set);
    match format {
        Format::Json | Format::Csv => {
            let mut v = json!({
                "primes": set.primes(),
                "rank": rank,
                "prefix": g.prefix.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
                "sigma": g.sigma.to_string(),
                "gamma": g.gamma.to_string(),
                "bound": g.bound.to_string(),
                "bound_factorization": bound_f,
                "exact_completion": g.exact_completion,
            });
            if let Some(c) = &cmp {
                v["true_max"] = json!(c.true_max.as_ref().map(|d| d.to_string()));
                v["verdict"] = json!(c.verdict);
            }
            writeln!(out, "{}", serde_json::to_string_pretty(&v).map_err(Error::from)?)?;
        }
        Format::Text => {
            let prefix: Vec<String> = g.prefix.iter().map(|d| d.to_string()).collect();
            writeln!(out, "prefix [{}]", prefix.join(","))?;
            writeln!(out, "sigma {}", g.sigma)?;
            writeln!(out, "gamma {}", g.gamma)?;
            writeln!(out, "bound {} {}", g.bound, bound_f)?;
            if let Some(c) = &cmp {
                match &c.true_max {
                    Some(m) => {
                        let f = factorize(m).map(|f| factorization_string(&f)).unwrap_or_default();
                        writeln!(out, "true_max {m} {f}")?;
                    }
                    None => writeln!(out, "true_max none")?,
                }
                writeln!(out, "verdict {}", c.verdict)?;
            }
        }
    }
    Ok(())
}
