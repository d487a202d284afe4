//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints one status line (PASS, FAIL or DEVIATION); the process fails if
//! any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use num_traits::One;
use unitfrac::analysis::{fit_log_model, generate_table, lowest_rank_reference, Cache, Cell, TableKind, TableSpec};
use unitfrac::enumerate::{
    as_u64s, count_one_prime, count_restricted, enumerate_restricted, enumerate_unrestricted, lowest_rank,
};
use unitfrac::families::{canonical_one_prime, double_last, fermat_family, mersenne_family, verify_solution};
use unitfrac::feasibility::is_admissible;
use unitfrac::greedy::{greedy_run, greedy_vs_actual, Verdict};
use unitfrac::numeric::factor_over;
use unitfrac::output::to_json;
use unitfrac::{EnumOptions, Natural, PrimeSet, Solution};

struct Criterion {
    id: u32,
    title: &'static str,
    limit: Duration,
    run: fn() -> Vec<Note>,
}

/// Extra output for a criterion. A deviation means part of the criterion is
/// unattainable as stated and was checked against the correct value.
enum Note {
    Info(String),
    Deviation(String),
}

fn info(s: impl Into<String>) -> Note {
    Note::Info(s.into())
}

fn deviation(s: impl Into<String>) -> Note {
    Note::Deviation(s.into())
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            title: "headline {2,13} rank 7",
            limit: secs(5),
            run: headline,
        },
        Criterion {
            id: 2,
            title: "one-prime counts",
            limit: secs(60),
            run: one_prime_counts,
        },
        Criterion {
            id: 3,
            title: "greedy bounds table",
            limit: secs(120),
            run: greedy_bounds,
        },
        Criterion {
            id: 4,
            title: "greedy failures",
            limit: secs(600),
            run: greedy_failures,
        },
        Criterion {
            id: 5,
            title: "max denominators",
            limit: secs(600),
            run: max_denominators,
        },
        Criterion {
            id: 6,
            title: "lowest ranks",
            limit: secs(600),
            run: lowest_ranks,
        },
        Criterion {
            id: 7,
            title: "pair counts",
            limit: secs(300),
            run: pair_counts,
        },
        Criterion {
            id: 8,
            title: "unrestricted low rank",
            limit: secs(1800),
            run: unrestricted,
        },
        Criterion {
            id: 9,
            title: "family verification",
            limit: secs(60),
            run: families,
        },
        Criterion {
            id: 10,
            title: "log fit",
            limit: secs(1),
            run: fit,
        },
        Criterion {
            id: 11,
            title: "property suite",
            limit: secs(600),
            run: properties,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run));
        let elapsed = start.elapsed();
        let (status, notes) = match outcome {
            Ok(_) if elapsed > c.limit => ("FAIL", vec![info(format!("over the {:?} limit", c.limit))]),
            Ok(notes) if notes.iter().any(|n| matches!(n, Note::Deviation(_))) => ("DEVIATION", notes),
            Ok(notes) => ("PASS", notes),
            Err(e) => {
                let msg = e
                    .downcast_ref::<String>()
                    .cloned()
                    .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                    .unwrap_or_default();
                ("FAIL", vec![info(msg)])
            }
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "criterion {:>2}: {status}  {} [{:.2} s, limit {} s]",
            c.id,
            c.title,
            elapsed.as_secs_f64(),
            c.limit.as_secs()
        );
        for n in notes {
            match n {
                Note::Info(s) => println!("    note: {s}"),
                Note::Deviation(s) => println!("    deviation: {s}"),
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

fn set(p: &[u64]) -> PrimeSet {
    PrimeSet::new(p.iter().copied()).unwrap()
}

fn nat(v: u64) -> Natural {
    Natural::from(v)
}

fn pow(p: u64, e: u32) -> Natural {
    num_traits::pow(nat(p), e as usize)
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_unitfrac"))
        .args(args)
        .output()
        .unwrap();
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).unwrap())
}

fn headline() -> Vec<Note> {
    let (code, text) = cli(&["enumerate", "--primes", "2,13", "--rank", "7", "--format", "csv"]);
    assert_eq!(code, 0);
    let rows: Vec<Vec<u64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|d| d.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 22);
    let max = rows.iter().flatten().max().copied().unwrap();
    assert_eq!(max, 832);
    assert_eq!(max, (1 << 6) * 13);

    let (code, text) = cli(&["greedy", "--primes", "2,13", "--rank", "7", "--compare"]);
    assert_eq!(code, 0);
    assert!(text.contains("bound 676 2^2*13^2"), "{text}");
    assert!(text.contains("true_max 832"), "{text}");
    assert!(text.contains("verdict FAILURE"), "{text}");
    vec![]
}

fn one_prime_counts() -> Vec<Note> {
    let table: [(u64, &[u64]); 3] = [
        (3, &[1, 1, 2, 4, 7, 13, 25, 48, 92, 176]),
        (5, &[1, 1, 2, 4, 8, 16, 31]),
        (7, &[1, 1, 2, 4, 8, 16, 32]),
    ];
    for (p, want) in table {
        for (i, &w) in want.iter().enumerate() {
            let rank = (p as usize - 1) * (i + 1) + 1;
            assert_eq!(count_one_prime(p, rank).unwrap(), w, "p={p} t={}", i + 1);
        }
    }
    vec![]
}

fn spec(kind: TableKind, primes: &[u64], ranks: std::ops::RangeInclusive<usize>) -> TableSpec {
    TableSpec {
        kind,
        primes: primes.to_vec(),
        ranks,
        budget: None,
        parallel_width: 0,
    }
}

fn greedy_bounds() -> Vec<Note> {
    // value, bold; 0 marks a pink cell
    let expected: [(u64, [(u64, bool); 4]); 7] = [
        (3, [(216, true), (1944, true), (39366, false), (1417176, false)]),
        (5, [(100, true), (500, true), (25000, false), (156250, false)]),
        (7, [(28, true), (224, true), (1792, true), (14336, true)]),
        (11, [(0, false), (352, true), (1331, false), (42592, true)]),
        (13, [(0, false), (104, true), (676, false), (3328, false)]),
        (17, [(0, false), (272, true), (4624, true), (78608, true)]),
        (19, [(0, false), (0, false), (512, false), (9728, false)]),
    ];
    let primes: Vec<u64> = expected.iter().map(|e| e.0).collect();
    let t = generate_table(&spec(TableKind::GreedyBounds, &primes, 5..=8), &Cache::disabled()).unwrap();
    let mut notes = Vec::new();
    for (q, row) in expected {
        for (i, (value, bold)) in row.into_iter().enumerate() {
            let rank = 5 + i;
            let cell = t.cell(&q.to_string(), &format!("R={rank}")).unwrap();
            if value == 0 {
                assert_eq!(cell, &Cell::Empty, "q={q} R={rank}");
                continue;
            }
            assert_eq!(cell.value(), Some(value.to_string().as_str()), "q={q} R={rank}");
            let tight = cell.verdict() == Some(Verdict::Tight);
            if bold {
                assert!(tight, "q={q} R={rank} should be tight");
            } else if tight {
                notes.push(info(format!(
                    "q={q} R={rank}: {value} is attained although the reference cell is not marked tight"
                )));
            }
        }
    }
    // witness for the unmarked tight cell
    let w = Solution::from_u64s(&[2, 4, 8, 16, 19, 128, 512, 9728]).unwrap();
    assert!(verify_solution(&w, Some(&set(&[2, 19])), Some(8), true).passed());
    notes
}

fn greedy_failures() -> Vec<Note> {
    let rows: [(usize, u64, u64, u64); 9] = [
        (8, 23, 1472, 2944),
        (9, 13, 43264, 140608),
        (9, 23, 5888, 11776),
        (10, 5, 15625000, 51200000),
        (10, 13, 262144, 346112),
        (10, 23, 47104, 94208),
        (10, 29, 24389, 29696),
        (10, 59, 1888, 7552),
        (10, 107, 3424, 27392),
    ];
    for (rank, q, bound, max) in rows {
        let c = greedy_vs_actual(&set(&[2, q]), rank).unwrap();
        assert_eq!(c.verdict, Verdict::Failure, "R={rank} q={q}");
        assert_eq!(c.greedy.bound, nat(bound), "R={rank} q={q}");
        assert_eq!(c.true_max, Some(nat(max)), "R={rank} q={q}");
    }
    // the expected 43624 is not {2,13}-smooth; the bound is 2^8 13^2
    assert!(factor_over(&set(&[2, 13]), &nat(43624)).is_none());
    assert_eq!(nat(43264), pow(2, 8) * pow(13, 2));

    // exhaustive scan of q <= 107, R <= 10
    let mut s = TableSpec::default_for(TableKind::GreedyFailures);
    s.budget = None;
    let t = generate_table(&s, &Cache::disabled()).unwrap();
    let found: BTreeSet<(usize, u64)> = t
        .rows
        .iter()
        .map(|r| {
            (
                r.cells[0].value().unwrap().parse().unwrap(),
                r.cells[1].value().unwrap().parse().unwrap(),
            )
        })
        .collect();
    let mut want: BTreeSet<(usize, u64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    want.insert((7, 13));
    want.insert((10, 53));
    assert_eq!(found, want);
    let w = Solution::from_u64s(&[2, 4, 8, 16, 32, 53, 106, 512, 1024, 54272]).unwrap();
    assert!(verify_solution(&w, Some(&set(&[2, 53])), Some(10), true).passed());
    vec![
        deviation("R=9 q=13 bound is 43264 = 2^8*13^2; the expected 43624 is not {2,13}-smooth"),
        info("scan also finds R=7 q=13 (676 vs 832) and R=10 q=53 (11236 vs 54272)"),
    ]
}

fn factor_cell(t: &unitfrac::analysis::Table, p: u64, rank: usize) -> Option<Vec<(u64, u32)>> {
    match t.cell(&p.to_string(), &format!("R={rank}")).unwrap() {
        Cell::Value { factorization, .. } => factorization.clone(),
        Cell::Empty => None,
        Cell::NotComputed => panic!("p={p} R={rank} not computed"),
    }
}

fn max_denominators() -> Vec<Note> {
    let t = generate_table(
        &spec(TableKind::MaxDenominators, &[3, 7, 17], 5..=11),
        &Cache::disabled(),
    )
    .unwrap();
    let p3 = [
        vec![(2, 3), (3, 3)],
        vec![(2, 3), (3, 5)],
        vec![(2, 3), (3, 7)],
        vec![(2, 10), (3, 6)],
    ];
    for (i, f) in p3.into_iter().enumerate() {
        assert_eq!(factor_cell(&t, 3, 5 + i), Some(f), "p=3 R={}", 5 + i);
    }
    assert_eq!(factor_cell(&t, 7, 10), Some(vec![(2, 10), (7, 4)]));
    assert_eq!(factor_cell(&t, 17, 5), None);
    for rank in 6..=11 {
        assert_eq!(
            factor_cell(&t, 17, rank),
            Some(vec![(2, 4), (17, rank as u32 - 5)]),
            "p=17 R={rank}"
        );
    }
    vec![]
}

fn lowest_ranks() -> Vec<Note> {
    let primes = [3, 5, 7, 11, 13, 17, 19, 23, 29];
    let want = [3, 4, 5, 6, 6, 6, 7, 8, 8];
    for (p, w) in primes.into_iter().zip(want) {
        assert_eq!(lowest_rank(&set(&[2, p]), 12), Some(w), "p={p}");
    }
    vec![]
}

fn pair_counts() -> Vec<Note> {
    // 0 marks a pink cell
    let expected: [(u64, [u64; 7]); 3] = [
        (3, [3, 10, 44, 227, 1343, 9082, 69394]),
        (5, [0, 4, 13, 45, 184, 848, 4420]),
        (7, [0, 0, 5, 18, 68, 269, 1155]),
    ];
    let t = generate_table(&spec(TableKind::PairCounts, &[3, 5, 7], 3..=9), &Cache::disabled()).unwrap();
    for (q, row) in expected {
        for (i, want) in row.into_iter().enumerate() {
            let cell = t.cell(&q.to_string(), &format!("R={}", 3 + i)).unwrap();
            if want == 0 {
                assert_eq!(cell, &Cell::Empty);
            } else {
                assert_eq!(cell.value(), Some(want.to_string().as_str()), "q={q} R={}", 3 + i);
            }
        }
    }
    vec![]
}

/// Brute force over the plain position bounds `j <= x_j <= u_j (R - j + 1)`,
/// pruning only on a nonpositive remainder.
fn brute_force(rank: usize) -> BTreeSet<Vec<u64>> {
    fn gcd(a: u128, b: u128) -> u128 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    fn go(rank: usize, u: &[u128], xs: &mut Vec<u64>, num: u128, den: u128, out: &mut BTreeSet<Vec<u64>>) {
        let j = xs.len() + 1;
        let prev = xs.last().copied().unwrap_or(1) as u128;
        if j == rank {
            if num != 0 && den.is_multiple_of(num) && den / num >= prev {
                let mut s = xs.clone();
                s.push((den / num) as u64);
                out.insert(s);
            }
            return;
        }
        let hi = u[j - 1] * (rank - j + 1) as u128;
        for x in prev.max(j as u128)..=hi {
            // remainder num/den - 1/x
            if num * x <= den {
                continue;
            }
            let n = num * x - den;
            let d = den * x;
            let g = gcd(n, d);
            xs.push(x as u64);
            go(rank, u, xs, n / g, d / g, out);
            xs.pop();
        }
    }
    let mut u = vec![1u128];
    while u.len() < rank {
        let l = *u.last().unwrap();
        u.push(l * (l + 1));
    }
    let mut out = BTreeSet::new();
    if rank == 1 {
        out.insert(vec![1]);
    } else {
        go(rank, &u, &mut Vec::new(), 1, 1, &mut out);
    }
    out
}

fn fixture(name: &str) -> BTreeSet<Vec<u64>> {
    let path = format!("{}/../core/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let mut v: Vec<u64> = l.split(',').map(|d| d.trim().parse().unwrap()).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

fn unrestricted_set(rank: usize) -> BTreeSet<Vec<u64>> {
    enumerate_unrestricted(rank, false)
        .unwrap()
        .iter()
        .map(|s| as_u64s(s).unwrap())
        .collect()
}

fn unrestricted() -> Vec<Note> {
    let start = Instant::now();
    let r3 = unrestricted_set(3);
    assert_eq!(r3, BTreeSet::from([vec![2, 3, 6], vec![2, 4, 4], vec![3, 3, 3]]));
    for rank in 3..=5 {
        assert_eq!(unrestricted_set(rank), brute_force(rank), "rank {rank}");
    }
    assert_eq!(unrestricted_set(4).len(), 14);
    let r5 = unrestricted_set(5);
    assert_eq!(r5.len(), 147);
    assert_eq!(r5, fixture("rank5_listing.txt"));
    let low = start.elapsed();
    assert!(low <= secs(30), "ranks <= 5 took {low:?}");

    let r6 = unrestricted_set(6);
    assert_eq!(r6.len(), 3462);
    assert_eq!(r6, fixture("rank6_listing.txt"));
    assert_eq!(r6, brute_force(6));
    vec![info(format!("ranks 3..5 in {:.2} s", low.as_secs_f64()))]
}

fn families() -> Vec<Note> {
    for p in [2, 3, 5, 7, 11, 13] {
        for t in 1..=4 {
            let rank = (p as usize - 1) * t + 1;
            let s = canonical_one_prime(p, rank).unwrap();
            assert!(verify_solution(&s, Some(&set(&[p])), Some(rank), false).passed());
        }
    }
    for n in 0..=4u32 {
        let k = 1usize << n;
        let p = unitfrac::families::FERMAT_PRIMES[n as usize];
        for rank in k + 2..=k + 4 {
            let s = fermat_family(n, rank).unwrap();
            assert!(
                verify_solution(&s, Some(&set(&[2, p])), Some(rank), true).passed(),
                "n={n} R={rank}"
            );
        }
    }
    for q in [2u32, 3, 5, 7] {
        let p = (1u64 << q) - 1;
        let min = 2 * q as usize - 1;
        for rank in min..=min + 2 {
            let s = mersenne_family(q, rank).unwrap();
            assert!(
                verify_solution(&s, Some(&set(&[2, p])), Some(rank), true).passed(),
                "q={q} R={rank}"
            );
        }
    }
    let mut s = Solution::from_u64s(&[2, 3, 6]).unwrap();
    for i in 0..100 {
        s = double_last(&s).unwrap();
        assert!(verify_solution(&s, Some(&set(&[2, 3])), Some(4 + i), true).passed());
    }
    // The greedy takes a pure power p^m whenever it undercuts the next
    // 2^(kq-1) of the family, so the two part ways there.
    let mut differ = Vec::new();
    for q in [2u32, 3, 5] {
        let p = (1u64 << q) - 1;
        for rank in 2 * q as usize - 1..=12 {
            let g = greedy_run(&set(&[2, p]), rank).unwrap();
            let fam = mersenne_family(q, rank).unwrap();
            if g.completed() == fam {
                assert!(g.exact_completion);
            } else {
                let d = g.completed();
                if g.exact_completion {
                    assert!(verify_solution(&d, Some(&set(&[2, p])), Some(rank), false).passed());
                }
                assert!(d
                    .denominators()
                    .iter()
                    .any(|x| factor_over(&set(&[p]), x).is_some() && !fam.denominators().contains(x)));
                differ.push((q, rank));
            }
        }
    }
    let want: Vec<(u32, usize)> = (5..=12).map(|r| (2, r)).chain((10..=12).map(|r| (3, r))).collect();
    assert_eq!(differ, want);
    let g = greedy_run(&set(&[2, 3]), 5).unwrap();
    assert_eq!(as_u64s(&g.completed()).unwrap(), [2, 3, 8, 27, 216]);
    let g = greedy_run(&set(&[2, 7]), 10).unwrap();
    assert_eq!(g.prefix[8], nat(117649));
    vec![deviation(
        "greedy output equals mersenne_family for q=5 (R<=12), q=3 (R<=9), q=2 (R<=4); \
         it differs for q=2 from R=5 (3^3 < 2^5) and q=3 from R=10 (7^6 < 2^17)",
    )]
}

fn fit() -> Vec<Note> {
    let points: Vec<(f64, f64)> = lowest_rank_reference()
        .iter()
        .map(|&(p, r)| (p as f64, r as f64))
        .collect();
    assert_eq!(points.len(), 54);
    let f = fit_log_model(&points).unwrap();
    assert!((f.slope - 2.07).abs() <= 0.05, "a = {}", f.slope);
    assert!((f.intercept - 0.88).abs() <= 0.15, "b = {}", f.intercept);
    vec![info(format!("a = {:.4}, b = {:.4}", f.slope, f.intercept))]
}

fn subsets() -> Vec<Vec<u64>> {
    let base = [2u64, 3, 5, 7];
    let mut out: Vec<Vec<u64>> = base.iter().map(|&p| vec![p]).collect();
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            out.push(vec![base[i], base[j]]);
        }
    }
    out
}

fn properties() -> Vec<Note> {
    // (a) every enumerated solution verifies
    for ps in subsets() {
        let s = set(&ps);
        for rank in 1..=7 {
            for sol in enumerate_restricted(&s, rank, &EnumOptions::default()).iter() {
                assert!(verify_solution(sol, Some(&s), Some(rank), false).passed(), "{sol}");
            }
        }
    }
    // (b) restricted = filtered unrestricted
    let unrestricted: Vec<Vec<Solution>> = (1..=6)
        .map(|r| enumerate_unrestricted(r, false).unwrap().solutions)
        .collect();
    for ps in subsets() {
        let s = set(&ps);
        for rank in 1..=6 {
            let filtered: Vec<&Solution> = unrestricted[rank - 1]
                .iter()
                .filter(|sol| sol.denominators().iter().all(|d| d > &Natural::one() && s.is_smooth(d)))
                .collect();
            let restricted = enumerate_restricted(&s, rank, &EnumOptions::default());
            assert_eq!(
                restricted.solutions.iter().collect::<Vec<_>>(),
                filtered,
                "{s} R={rank}"
            );
        }
    }
    // (c) solutions missing a prime are exactly the one-prime solutions
    for ps in subsets().into_iter().filter(|s| s.len() == 2) {
        let s = set(&ps);
        for rank in 2..=9 {
            let c = count_restricted(&s, rank);
            let singles = count_one_prime(ps[0], rank).unwrap() + count_one_prime(ps[1], rank).unwrap();
            assert_eq!(c.total - c.proper, singles, "{s} R={rank}");
        }
    }
    // (d) trivial upper bound on one-prime counts
    for p in [2u64, 3, 5, 7] {
        for rank in 1..=25 {
            let c = count_one_prime(p, rank).unwrap();
            assert!(
                (c as f64) <= 2f64.powf((rank - 1) as f64 / (p - 1) as f64),
                "p={p} R={rank}"
            );
        }
    }
    // (e) parallel output is byte-identical
    for ps in [[2u64, 3], [2, 5], [3, 5]] {
        let s = set(&ps);
        for rank in [6, 7] {
            let seq = to_json(&enumerate_restricted(&s, rank, &EnumOptions::default())).unwrap();
            let par = to_json(&enumerate_restricted(
                &s,
                rank,
                &EnumOptions::default().with_parallel_width(4),
            ))
            .unwrap();
            assert_eq!(seq, par, "{s} R={rank}");
        }
    }
    // (f) without 2 every even rank is empty
    for ps in [
        vec![3u64],
        vec![5],
        vec![7],
        vec![3, 5],
        vec![3, 7],
        vec![5, 7],
        vec![3, 5, 7],
    ] {
        let s = set(&ps);
        for rank in (2..=8).step_by(2) {
            assert!(!is_admissible(&s, rank).gcd_ok);
            assert!(
                enumerate_restricted(&s, rank, &EnumOptions::default()).is_empty(),
                "{s} R={rank}"
            );
        }
    }
    vec![info(
        "(c) checked for R >= 2; at R = 1 the one-prime count includes [1], which the pair search excludes",
    )]
}
