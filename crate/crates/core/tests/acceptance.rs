//! Exit criteria: one line per criterion, nonzero exit if any fails.

use std::process::ExitCode;
use std::time::Instant;

use icvote::edge_space::{fundamental_cycle_basis, star_cut_basis};
use icvote::ic_model::{covariance, scaled_covariance, scaled_precision};
use icvote::probability::{
    estimate_event, estimate_type_table, exact_finite_prob, linearity_ordering, orthant_exact_3,
    qualitative_coverage, tournament_prob_exact_3, TypeProbTable,
};
use icvote::sampling::{sample_margin_clt, CltSampler, ExactSampler};
use icvote::tournaments::{Tournament, TypeClassifier};
use icvote::voting::{
    condorcet_loser, condorcet_winner, minimax_winners, split_cycle_winners, winning_set_distribution, Method,
};
use icvote::{
    CandidateCount, CovarianceModel64, DenseMatrix, EdgeVector, ExactEdgeVector, MonteCarloConfig, RngStream,
};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const SAMPLES: u64 = 1_000_000;
const SHARDS: usize = 8;

fn ell(n: usize) -> CandidateCount {
    CandidateCount::new(n).expect("valid candidate count")
}

fn mc(seed: u64) -> MonteCarloConfig {
    MonteCarloConfig::new(seed, SHARDS).expect("nonzero shards")
}

fn model(n: usize) -> CovarianceModel64 {
    CovarianceModel64::new(ell(n))
}

type Outcome = Result<String, String>;

fn pass_if(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Edges `(winner, loser)` with candidates A..E as 1..5.
fn five(edges: &[(char, char)]) -> Tournament {
    let v = |c: char| (c as u8 - b'A' + 1) as usize;
    let pairs: Vec<_> = edges.iter().map(|&(a, b)| (v(a), v(b))).collect();
    Tournament::from_edges(ell(5), &pairs).expect("complete tournament")
}

struct Published {
    name: &'static str,
    tournament: Tournament,
    linearity: usize,
    labelings: usize,
    type_prob: f64,
}

fn published_five() -> Vec<Published> {
    let all_from_a = [('A', 'B'), ('A', 'C'), ('A', 'D'), ('A', 'E')];
    let with_a = |rest: &[(char, char)]| {
        let mut e = all_from_a.to_vec();
        e.extend_from_slice(rest);
        five(&e)
    };
    let rows: Vec<(&str, Tournament, usize, usize, f64)> = vec![
        (
            "T1",
            with_a(&[('B', 'C'), ('B', 'D'), ('B', 'E'), ('C', 'D'), ('C', 'E'), ('D', 'E')]),
            30, 120, 0.527,
        ),
        (
            "T2",
            with_a(&[('B', 'E'), ('B', 'C'), ('C', 'D'), ('C', 'E'), ('D', 'B'), ('D', 'E')]),
            28, 40, 0.0708,
        ),
        (
            "T3",
            with_a(&[('B', 'C'), ('B', 'D'), ('B', 'E'), ('E', 'C'), ('C', 'D'), ('D', 'E')]),
            28, 40, 0.0677,
        ),
        (
            "T4",
            five(&[
                ('A', 'B'), ('A', 'E'), ('A', 'D'), ('B', 'C'), ('B', 'D'),
                ('B', 'E'), ('C', 'D'), ('C', 'E'), ('C', 'A'), ('D', 'E'),
            ]),
            28, 40, 0.0677,
        ),
        (
            "T5",
            with_a(&[('B', 'D'), ('B', 'C'), ('E', 'B'), ('E', 'C'), ('C', 'D'), ('D', 'E')]),
            26, 120, 0.0834,
        ),
        (
            "T6",
            five(&[
                ('A', 'B'), ('A', 'C'), ('A', 'E'), ('B', 'C'), ('B', 'D'),
                ('B', 'E'), ('C', 'D'), ('C', 'E'), ('D', 'E'), ('D', 'A'),
            ]),
            26, 120, 0.0834,
        ),
        (
            "T7",
            five(&[
                ('A', 'B'), ('A', 'C'), ('A', 'D'), ('B', 'C'), ('B', 'D'),
                ('B', 'E'), ('E', 'A'), ('E', 'C'), ('C', 'D'), ('D', 'E'),
            ]),
            24, 120, 0.0329,
        ),
        (
            "T8",
            five(&[
                ('A', 'B'), ('A', 'C'), ('A', 'D'), ('B', 'C'), ('B', 'D'),
                ('B', 'E'), ('E', 'A'), ('C', 'D'), ('C', 'E'), ('D', 'E'),
            ]),
            24, 120, 0.0317,
        ),
        (
            "T9",
            five(&[
                ('A', 'B'), ('A', 'C'), ('A', 'D'), ('B', 'C'), ('B', 'D'),
                ('E', 'B'), ('E', 'A'), ('C', 'D'), ('C', 'E'), ('D', 'E'),
            ]),
            22, 120, 0.0147,
        ),
        (
            "T10",
            five(&[
                ('A', 'B'), ('A', 'C'), ('A', 'D'), ('B', 'E'), ('B', 'C'),
                ('E', 'A'), ('C', 'D'), ('C', 'E'), ('D', 'E'), ('D', 'B'),
            ]),
            22, 40, 0.00471,
        ),
        (
            "T11",
            five(&[
                ('A', 'B'), ('A', 'D'), ('B', 'D'), ('B', 'C'), ('E', 'B'),
                ('E', 'A'), ('C', 'D'), ('C', 'E'), ('C', 'A'), ('D', 'E'),
            ]),
            22, 120, 0.0148,
        ),
        (
            "T12",
            five(&[
                ('A', 'B'), ('A', 'C'), ('B', 'C'), ('B', 'D'), ('C', 'D'),
                ('C', 'E'), ('D', 'E'), ('D', 'A'), ('E', 'A'), ('E', 'B'),
            ]),
            20, 24, 0.00139,
        ),
    ];
    rows.into_iter()
        .map(|(name, tournament, linearity, labelings, type_prob)| Published {
            name,
            tournament,
            linearity,
            labelings,
            type_prob,
        })
        .collect()
}

fn ac1() -> Outcome {
    for n in 3..=12 {
        let e = ell(n);
        let s3 = scaled_covariance(e);
        let g = scaled_precision(e);
        let m = e.num_edges();
        // (3Σ)((ℓ+1)Γ/3) = (ℓ+1)I.
        if s3.matmul(&g).map_err(|e| e.to_string())? != DenseMatrix::identity_scaled(m, n as i64 + 1) {
            return Err(format!("Γ·Σ ≠ I at ℓ={n}"));
        }
        let to_int = |v: &ExactEdgeVector| -> Vec<i64> { v.coords().iter().map(|c| c.to_integer()).collect() };
        for c in fundamental_cycle_basis(e) {
            let v = to_int(&c);
            if s3.matvec(&v).map_err(|e| e.to_string())? != v {
                return Err(format!("fundamental cycle not scaled by 1/3 at ℓ={n}"));
            }
        }
        for u in star_cut_basis(e) {
            let v = to_int(&u);
            let expect: Vec<i64> = v.iter().map(|x| x * (n as i64 + 1)).collect();
            if s3.matvec(&v).map_err(|e| e.to_string())? != expect {
                return Err(format!("star cut not scaled by (ℓ+1)/3 at ℓ={n}"));
            }
        }
    }
    Ok("ℓ=3..12 exact in scaled integers".into())
}

fn ac2() -> Outcome {
    let mut worst: f64 = 0.0;
    for n in 3..=20 {
        let m = model(n);
        let a = m.materialize_factor();
        let aat = a.matmul(&a.transpose()).map_err(|e| e.to_string())?;
        worst = worst.max(aat.max_abs_diff(&covariance::<f64>(ell(n))));
    }
    pass_if(worst <= 1e-10, format!("max ‖AAᵀ − Σ‖_∞ = {worst:.3e} over ℓ=3..20"))
}

fn ac3() -> Outcome {
    let p1 = orthant_exact_3(1.0 / 3.0, -1.0 / 3.0, 1.0 / 3.0).map_err(|e| e.to_string())?;
    let p2 = orthant_exact_3(-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0).map_err(|e| e.to_string())?;
    let mut linear = 0.0;
    let mut cyc = 0.0;
    for code in 0..8 {
        let t = Tournament::from_code(ell(3), code).map_err(|e| e.to_string())?;
        let p = tournament_prob_exact_3(&t).map_err(|e| e.to_string())?;
        if t.condorcet_winner().is_some() {
            linear += p;
        } else {
            cyc += p;
        }
    }
    let sum = 6.0 * p1 + 2.0 * p2;
    let ok = (p1 - 0.152039).abs() < 5e-7
        && (p2 - 0.043923).abs() < 5e-7
        && (sum - 1.0).abs() < 1e-10
        && (linear - 6.0 * p1).abs() < 1e-12
        && (cyc - 2.0 * p2).abs() < 1e-12;
    pass_if(
        ok,
        format!(
            "linear {p1:.7} (target 0.152039), cycle {p2:.7} (target 0.043923), 6p₁+2p₂−1 = {:.1e}",
            sum - 1.0
        ),
    )
}

fn ac4() -> Outcome {
    let cells = [(3, 3, "0.94444"), (3, 5, "0.93056"), (3, 7, "0.92498"), (4, 3, "0.88889"), (5, 3, "0.84000")];
    let mut shown = Vec::new();
    let mut ok = true;
    for (n_cand, voters, printed) in cells {
        let p = exact_finite_prob(ell(n_cand), voters, |g| condorcet_winner(g.margins()).is_some())
            .map_err(|e| e.to_string())?;
        let f = format!("{:.5}", p.to_f64().unwrap_or(f64::NAN));
        ok &= f == printed;
        shown.push(format!("ℓ={n_cand},n={voters}: {p} ≈ {f}"));
    }
    pass_if(ok, shown.join("; "))
}

fn ac5() -> Outcome {
    let mut ok = true;
    let mut shown = Vec::new();
    for (n, target, tol, seed) in [(3, 0.9123, 0.002, 501), (4, 0.8245, 0.003, 502), (5, 0.7487, 0.003, 503)] {
        let e = estimate_event(&model(n), SAMPLES, mc(seed), |y| condorcet_winner(y).is_some())
            .map_err(|e| e.to_string())?;
        ok &= (e.p_hat - target).abs() <= tol;
        shown.push(format!("ℓ={n}: {:.5}±{:.5} (target {target}±{tol})", e.p_hat, e.std_err));
    }
    pass_if(ok, shown.join("; "))
}

fn type_table(n: usize, seed: u64) -> Result<TypeProbTable, String> {
    estimate_type_table(&model(n), SAMPLES, mc(seed)).map_err(|e| e.to_string())
}

fn ac6(table: &TypeProbTable) -> Outcome {
    let printed = [0.030813, 0.010628, 0.010628, 0.0037692];
    let labelings = [24, 8, 8, 24];
    let mut ok = true;
    let mut shown = Vec::new();
    for (k, row) in table.rows.iter().enumerate() {
        let z = row.labeled_prob.z_score(printed[k]);
        ok &= z <= 4.0 && row.ty.labelings == labelings[k];
        shown.push(format!("T{}: {:.6} (z={z:.2})", k + 1, row.labeled_prob.p_hat));
    }
    let transitive = &table.rows[0].type_prob;
    ok &= (transitive.p_hat - 0.7395).abs() <= 0.004;
    let (t2, t3) = (&table.rows[1].labeled_prob, &table.rows[2].labeled_prob);
    let dual_gap = (t2.p_hat - t3.p_hat).abs() / t2.combined_se(t3);
    ok &= dual_gap <= 3.0;
    ok &= table.rows[1].ty.score_sequence == [3, 1, 1, 1];
    ok &= table.rows[1].ty.canonical.tournament().dual().is_isomorphic(&table.rows[2].ty.canonical.tournament())
        == Ok(true);
    shown.push(format!("transitive type {:.5}", transitive.p_hat));
    shown.push(format!("T2/T3 gap {dual_gap:.2}σ"));
    pass_if(ok, shown.join("; "))
}

fn ac7(table: &TypeProbTable) -> Outcome {
    let classifier = TypeClassifier::new(ell(5)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut shown = Vec::new();
    let mut seen = Vec::new();
    for p in published_five() {
        let idx = classifier.classify(&p.tournament).map_err(|e| e.to_string())?;
        seen.push(idx);
        let row = &table.rows[idx];
        let z = row.type_prob.z_score(p.type_prob);
        let shape = row.ty.linearity == p.linearity && row.ty.labelings == p.labelings;
        ok &= z <= 4.0 && shape;
        shown.push(format!("{} {:.5} (z={z:.2}{})", p.name, row.type_prob.p_hat, if shape { "" } else { ", shape" }));
    }
    seen.sort_unstable();
    seen.dedup();
    ok &= seen.len() == 12;
    let cw = table.condorcet_winner();
    ok &= (cw.p_hat - 0.74861).abs() <= 0.003;
    shown.push(format!("Condorcet winner {:.5}", cw.p_hat));
    pass_if(ok, shown.join("; "))
}

fn ac8(tables: &[&TypeProbTable]) -> Outcome {
    let mut ok = true;
    let mut shown = Vec::new();
    for t in tables {
        let checks = linearity_ordering(t, 4.0);
        let resolved = checks.iter().filter(|c| c.resolved).count();
        let bad: Vec<_> = checks.iter().filter(|c| c.violates()).map(|c| (c.higher, c.lower)).collect();
        ok &= bad.is_empty();
        shown.push(format!(
            "ℓ={}: {resolved}/{} pairs resolved, violations {bad:?}",
            t.ell,
            checks.len()
        ));
    }
    pass_if(ok, shown.join("; "))
}

fn ac9() -> Outcome {
    let mut x = EdgeVector::<i64>::zeros(ell(4));
    for (a, b, m) in [(1, 2, 7), (1, 4, 3), (2, 3, 9), (2, 4, 1), (3, 1, 11), (3, 4, 5)] {
        x.set(a, b, m).map_err(|e| e.to_string())?;
    }
    let mut cyc = EdgeVector::<i64>::zeros(ell(3));
    for (a, b) in [(1, 2), (2, 3), (3, 1)] {
        cyc.set(a, b, 1).map_err(|e| e.to_string())?;
    }
    let mm = minimax_winners(&x);
    let sc = split_cycle_winners(&x);
    let ok = mm.winners() == [4]
        && sc.winners() == [2]
        && minimax_winners(&cyc).winners() == [1, 2, 3]
        && split_cycle_winners(&cyc).winners() == [1, 2, 3];
    pass_if(ok, format!("Minimax {:?}, Split Cycle {:?}", mm.winners(), sc.winners()))
}

fn ac10() -> Outcome {
    let mut ok = true;
    let mut shown = Vec::new();
    for (n, seed) in [(5, 1005), (7, 1007), (10, 1010)] {
        let h = winning_set_distribution(Method::SplitCycle, &model(n), SAMPLES, mc(seed))
            .map_err(|e| e.to_string())?;
        let unique = 100.0 * h.size_estimate(1).p_hat;
        let multiple = 100.0 * h.multiple_winners().p_hat;
        let (got, target, tol) = match n {
            5 => (unique, 96.7964, 0.2),
            7 => (multiple, 7.8150, 0.25),
            _ => (multiple, 14.7409, 0.35),
        };
        ok &= (got - target).abs() <= tol;
        shown.push(format!("ℓ={n}: unique {unique:.4}%, multiple {multiple:.4}%"));
    }
    pass_if(ok, shown.join("; "))
}

fn ac11() -> Outcome {
    let cov = qualitative_coverage(&model(3), SAMPLES, mc(1103)).map_err(|e| e.to_string())?;
    let m4 = model(4);
    let loser = estimate_event(&m4, SAMPLES, mc(1104), |y| {
        let w = minimax_winners(y);
        w.unique().is_some() && w.unique() == condorcet_loser(y)
    })
    .map_err(|e| e.to_string())?;
    let multi =
        estimate_event(&m4, SAMPLES, mc(1105), |y| split_cycle_winners(y).len() > 1).map_err(|e| e.to_string())?;
    let ok = cov.observed() == 48 && cov.possible() == 48 && loser.p_hat > 0.0 && multi.p_hat > 0.0;
    pass_if(
        ok,
        format!(
            "{} of {} qualitative graphs, {} ties; Minimax picks the Condorcet loser {:.2e}; Split Cycle ties {:.4}",
            cov.observed(),
            cov.possible(),
            cov.ties,
            loser.p_hat,
            multi.p_hat
        ),
    )
}

fn ac12() -> Outcome {
    let e = ell(20);
    let mut rng = RngStream::new(12, 0);
    let mut exact = ExactSampler::per_voter(e, 10_001).map_err(|e| e.to_string())?;
    let mut checksum = 0i64;
    let start = Instant::now();
    let mut exact_n = 0u64;
    while exact_n < 50 || start.elapsed().as_secs_f64() < 1.0 {
        checksum += exact.sample(&mut rng).margins().coords()[0];
        exact_n += 1;
    }
    let exact_rate = exact_n as f64 / start.elapsed().as_secs_f64();

    let mut clt = CltSampler::new(model(20));
    let mut y = EdgeVector::zeros(e);
    let start = Instant::now();
    let mut clt_n = 0u64;
    let mut acc = 0.0;
    while clt_n < 10_000 || start.elapsed().as_secs_f64() < 1.0 {
        clt.sample_into(&mut rng, &mut y);
        acc += y.coords()[0];
        clt_n += 1;
    }
    let clt_rate = clt_n as f64 / start.elapsed().as_secs_f64();
    std::hint::black_box((checksum, acc));
    let ratio = clt_rate / exact_rate;
    pass_if(ratio >= 50.0, format!("CLT {clt_rate:.3e}/s, exact {exact_rate:.3e}/s, ratio {ratio:.0}×"))
}

fn run_property(name: &str, cases: u32, f: impl Fn(&mut TestRunner) -> Result<(), String>) -> Result<(), String> {
    let mut runner = TestRunner::new(Config { cases, failure_persistence: None, ..Config::default() });
    f(&mut runner).map_err(|e| format!("{name}: {e}"))
}

fn ac13() -> Outcome {
    let ints = (3usize..=9).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(-20i64..=20, m))
    });
    let reals = (3usize..=16).prop_flat_map(|n| {
        let m = n * (n - 1) / 2;
        (Just(n), prop::collection::vec(-10.0f64..10.0, m))
    });

    run_property("exact decomposition", 512, |r| {
        r.run(&ints, |(n, c)| {
            let x = ExactEdgeVector::from_coords(ell(n), c.into_iter().map(num_rational::Rational64::from).collect())
                .unwrap();
            let z = x.project_cut();
            let y = x.project_cycle();
            prop_assert_eq!(y.dot(&z), 0.into());
            prop_assert_eq!(x.norm_sq(), y.norm_sq() + z.norm_sq());
            prop_assert_eq!(z.project_cut(), z.clone());
            prop_assert_eq!(y.project_cycle(), y.clone());
            prop_assert!(y.project_cut().coords().iter().all(|v| *v == 0.into()));
            prop_assert_eq!(x.cut_norm_sq(), z.norm_sq());
            prop_assert_eq!(&y + &z, x);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;

    run_property("float decomposition", 512, |r| {
        r.run(&reals, |(n, c)| {
            let x = EdgeVector::from_coords(ell(n), c).unwrap();
            let z = x.project_cut();
            let y = x.project_cycle();
            let scale = 1e-9 * x.norm_sq().max(1.0);
            prop_assert!(y.dot(&z).abs() <= scale);
            prop_assert!((x.norm_sq() - y.norm_sq() - z.norm_sq()).abs() <= scale);
            prop_assert!((&z.project_cut() - &z).max_abs() <= 1e-9);
            prop_assert!((x.cut_norm_sq() - z.norm_sq()).abs() <= scale);
            let m = model(n);
            let q = m.quadratic_form(&x).unwrap();
            let closed = 3.0 * y.norm_sq() + 3.0 * z.norm_sq() / (n as f64 + 1.0);
            prop_assert!((q - closed).abs() <= scale);
            prop_assert!((q - m.quadratic_form_dense(&x).unwrap()).abs() <= scale);
            prop_assert!(x.norm_sq() == 0.0 || q > 0.0);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;

    run_property("determinism", 64, |r| {
        r.run(&(any::<u64>(), any::<u64>(), 3usize..=12), |(seed, stream, n)| {
            let m = model(n);
            let a: Vec<_> = {
                let mut rng = RngStream::new(seed, stream);
                (0..8).map(|_| sample_margin_clt(&mut rng, &m)).collect()
            };
            let b: Vec<_> = {
                let mut rng = RngStream::new(seed, stream);
                (0..8).map(|_| sample_margin_clt(&mut rng, &m)).collect()
            };
            prop_assert_eq!(a, b);
            let mut s1 = ExactSampler::new(ell(n), 101).unwrap();
            let mut s2 = s1.clone();
            let (mut r1, mut r2) = (RngStream::new(seed, stream), RngStream::new(seed, stream));
            for _ in 0..4 {
                prop_assert_eq!(s1.sample(&mut r1), s2.sample(&mut r2));
            }
            let config = MonteCarloConfig::new(seed, 3).unwrap();
            let p1 = estimate_event(&m, 500, config, |y| y.coords()[0] > 0.0).unwrap();
            let p2 = estimate_event(&m, 500, config, |y| y.coords()[0] > 0.0).unwrap();
            prop_assert_eq!(p1, p2);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;

    run_property("parity", 128, |r| {
        r.run(&(any::<u64>(), 3usize..=9, 0u64..200, any::<bool>()), |(seed, n, half, multinomial)| {
            let voters = 2 * half + 1;
            let mut s = if multinomial && n <= 7 {
                ExactSampler::multinomial(ell(n), voters).unwrap()
            } else {
                ExactSampler::per_voter(ell(n), voters).unwrap()
            };
            let mut rng = RngStream::new(seed, 0);
            for _ in 0..4 {
                let g = s.sample(&mut rng);
                for &m in g.margins().coords() {
                    prop_assert!(m.unsigned_abs() <= voters);
                    prop_assert_eq!((m - voters as i64).rem_euclid(2), 0);
                }
            }
            prop_assert!(ExactSampler::new(ell(n), voters + 1).is_err());
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    Ok("exact and float decomposition, determinism, parity: all cases pass".into())
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |id: &str, title: &str, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {id} {title} ({secs:.1}s): {detail}");
    };

    report("AC-1", "exact algebra", &mut ac1);
    report("AC-2", "factor identity", &mut ac2);
    report("AC-3", "three-candidate orthants", &mut ac3);
    report("AC-4", "finite electorates, exact", &mut ac4);
    report("AC-5", "Condorcet winner limit", &mut ac5);
    let four = std::cell::OnceCell::new();
    let five_t = std::cell::OnceCell::new();
    let table = |cell: &std::cell::OnceCell<Result<TypeProbTable, String>>, n, seed| {
        cell.get_or_init(|| type_table(n, seed)).clone()
    };
    report("AC-6", "four-candidate types", &mut || ac6(&table(&four, 4, 604)?));
    report("AC-7", "five-candidate types", &mut || ac7(&table(&five_t, 5, 705)?));
    report("AC-8", "linearity ordering", &mut || ac8(&[&table(&four, 4, 604)?, &table(&five_t, 5, 705)?]));
    report("AC-9", "voting examples", &mut ac9);
    report("AC-10", "Split Cycle winning sets", &mut ac10);
    report("AC-11", "qualitative coverage", &mut ac11);
    report("AC-12", "sampler throughput", &mut ac12);
    report("AC-13", "property suites", &mut ac13);

    println!("{} of 13 criteria passed", 13 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
