//! Acceptance criteria 1-10. Each test prints one `PASS`/`FAIL` line.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestRunner};
use recipro::clustering::{analyze_limits, classify_persistence, doubling_horizons, scc, DEFAULT_THETA};
use recipro::dynamics::{
    check_phi_bounds, conserved_average, propagate, transition_matrix, TransitionMatrix, DEFAULT_TOL,
};
use recipro::reciprocity::{
    build_partition, cut_balance_ratio, interval_mass_bound, is_active, suggest_parameters, verify_condition_a,
    IntervalPartition,
};
use recipro::rendezvous::{check_reciprocity_instantiation, check_rendezvous, simulate, RobotScenario, STEP_DIVISOR};
use recipro::schedules::{Edge, Piece, ScheduleGenerator, WeightSchedule};
use recipro::AgentSet;

const TOL_CONV: f64 = 1e-3;
const TOL_CLUSTER: f64 = 1e-3;
const RANDOM_SCHEDULES: u64 = 100;
const ORACLE_SCHEDULES: u64 = 50;
const PROPERTY_CASES: u32 = 64;
const PROPERTY_SEED: u64 = 0x0dd5_eed5;

fn verdict(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} failed: {detail}");
}

fn clustered_run(generator: ScheduleGenerator) -> (Vec<Vec<usize>>, recipro::clustering::LimitReport, Duration) {
    let start = Instant::now();
    let horizon = 2000.0;
    let s = generator.materialize(horizon).unwrap();
    let traj = propagate(&s, &[0.0, 1.0, 2.0, 3.0], 0.0, horizon, DEFAULT_TOL).unwrap();
    let graph = classify_persistence(&s, &doubling_horizons(horizon, 4), DEFAULT_THETA).unwrap();
    let report = analyze_limits(&traj, &graph.components, TOL_CONV, TOL_CLUSTER).unwrap();
    (graph.components, report, start.elapsed())
}

#[test]
fn criterion_01_example1_clustering() {
    let (components, r, elapsed) = clustered_run(ScheduleGenerator::Example1);
    let gap = r.min_gap().unwrap_or(0.0);
    let pass = components == vec![vec![0, 3], vec![1, 2]]
        && r.passed()
        && gap > 0.1
        && elapsed < Duration::from_secs(5);
    verdict(
        1,
        "example1 clustering",
        pass,
        format!(
            "components {components:?}, spreads {:?}, cluster limits {:?}, gap {gap:.3e}, {elapsed:?}",
            r.spreads, r.cluster_limits
        ),
    );
}

#[test]
fn criterion_02_example2_clustering() {
    let (components, r, elapsed) = clustered_run(ScheduleGenerator::Example2);
    let pass = components == vec![vec![0], vec![1, 2, 3]]
        && r.spreads[1] <= TOL_CLUSTER
        && r.converged[0]
        && elapsed < Duration::from_secs(5);
    verdict(
        2,
        "example2 clustering",
        pass,
        format!(
            "components {components:?}, spread of {{2,3,4}} {:.3e}, agent 1 tail oscillation {:.3e}, {elapsed:?}",
            r.spreads[1], r.oscillation[0]
        ),
    );
}

#[test]
fn criterion_03_oscillator_does_not_converge() {
    let start = Instant::now();
    let cycles = 200;
    let horizon = 4.0 * cycles as f64;
    let generator = ScheduleGenerator::oscillator_default();
    let s = generator.materialize(horizon).unwrap();
    let traj = propagate(&s, &[0.0, 0.5, 1.0], 0.0, horizon, DEFAULT_TOL).unwrap();
    let at = |t: f64| traj.state_at(t).unwrap_or_else(|| panic!("no sample at {t}"));

    let mut min_spread = f64::INFINITY;
    let mut min_amplitude = f64::INFINITY;
    let mut max_recursion_error: f64 = 0.0;
    for p in 0..cycles {
        let t = 4.0 * p as f64;
        let x = at(t);
        if p >= 10 {
            min_spread = min_spread.min(x[2] - x[0]);
        }
        let cycle = (0..=4).map(|k| at(t + k as f64)[1]);
        let amplitude = cycle.clone().fold(f64::NEG_INFINITY, f64::max) - cycle.fold(f64::INFINITY, f64::min);
        min_amplitude = min_amplitude.min(amplitude);
        let rho = 3.0 + p as f64;
        let predicted = (1.0 - (-rho).exp()) * x[0] + (-rho).exp() * x[1];
        max_recursion_error = max_recursion_error.max((at(t + 1.0)[1] - predicted).abs());
    }
    let elapsed = start.elapsed();
    let pass = min_spread >= 0.8 && min_amplitude >= 0.5 && max_recursion_error <= 1e-6 && elapsed < Duration::from_secs(5);
    verdict(
        3,
        "oscillator non-convergence",
        pass,
        format!(
            "min x3-x1 (p>=10) {min_spread:.4}, min x2 amplitude {min_amplitude:.4}, recursion error {max_recursion_error:.2e}, {elapsed:?}"
        ),
    );
}

#[test]
fn criterion_04_example1_certification() {
    let s = ScheduleGenerator::Example1.materialize(2000.0).unwrap();
    let part = IntervalPartition::uniform(0.0, 2.0, 2000.0).unwrap();
    let k = cut_balance_ratio(&s, &part).unwrap().k();
    let m = interval_mass_bound(&s, &part).m;
    let pass = k.is_some_and(|k| (k - 1.0).abs() <= 1e-9) && m <= 2.0;
    verdict(4, "example1 K and M", pass, format!("K = {k:?}, M = {m}"));
}

/// Partition of a random schedule into intervals of 1 to 3 grid cells,
/// with `M` stored.
fn random_partition(s: &WeightSchedule, seed: u64) -> IntervalPartition {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut times = vec![s.start()];
    while *times.last().unwrap() < s.horizon() {
        let next = times.last().unwrap() + common::GRID * rng.random_range(1..=3) as f64;
        times.push(next.min(s.horizon()));
    }
    let mut part = IntervalPartition::new(times).unwrap();
    part.mass_bound = Some(interval_mass_bound(s, &part).m);
    part
}

#[test]
fn criterion_05_phi_cut_bounds() {
    let start = Instant::now();
    let n = 4;
    let mut checks = 0;
    let mut failures = Vec::new();
    for seed in 0..RANDOM_SCHEDULES {
        let s = common::random_schedule(n, 8, 2.0, seed);
        let part = random_partition(&s, seed);
        for p in 0..part.len() {
            for subset in AgentSet::proper_subsets(n) {
                let c = check_phi_bounds(&s, &part, subset, p).unwrap();
                checks += 1;
                if !c.holds() {
                    failures.push((seed, p, c.subset.clone(), c.g * c.cut_a, c.cut_phi, n as f64 * c.cut_a));
                }
            }
        }
    }
    let elapsed = start.elapsed();
    let subsets = AgentSet::proper_subsets(n).count();
    let pass = subsets == 14 && failures.is_empty() && elapsed < Duration::from_secs(30);
    verdict(
        5,
        "phi cut bounds",
        pass,
        format!("{checks} checks over {RANDOM_SCHEDULES} schedules and {subsets} subsets, failures {failures:?}, {elapsed:?}"),
    );
}

struct Worst {
    row_sum: f64,
    min_entry: f64,
    /// Smallest `phi_ii - exp(-n M)`.
    diagonal_margin: f64,
    count: usize,
}

impl Worst {
    fn new() -> Self {
        Worst { row_sum: 0.0, min_entry: f64::INFINITY, diagonal_margin: f64::INFINITY, count: 0 }
    }

    fn absorb(&mut self, tm: &TransitionMatrix, mass_bound: f64) {
        let n = tm.n() as f64;
        self.row_sum = self.row_sum.max(tm.row_sum_error());
        self.min_entry = self.min_entry.min(tm.min_entry());
        self.diagonal_margin = self.diagonal_margin.min(tm.min_diagonal() - (-n * mass_bound).exp());
        self.count += 1;
    }

    fn absorb_partition(&mut self, s: &WeightSchedule, part: &IntervalPartition) {
        let m = interval_mass_bound(s, part).m;
        for (u, v) in part.intervals() {
            self.absorb(&transition_matrix(s, u, v, DEFAULT_TOL).unwrap(), m);
        }
    }
}

#[test]
fn criterion_06_transition_matrix_invariants() {
    let mut w = Worst::new();
    for generator in [ScheduleGenerator::Example1, ScheduleGenerator::Example2] {
        let s = generator.materialize(2000.0).unwrap();
        w.absorb_partition(&s, &IntervalPartition::uniform(0.0, 2.0, 2000.0).unwrap());
    }
    let osc = ScheduleGenerator::oscillator_default().materialize(800.0).unwrap();
    w.absorb_partition(&osc, &IntervalPartition::uniform(0.0, 4.0, 800.0).unwrap());
    for seed in 0..RANDOM_SCHEDULES {
        let s = common::random_schedule(4, 8, 2.0, seed);
        w.absorb_partition(&s, &random_partition(&s, seed));
    }
    let pass = w.row_sum <= 1e-8 && w.min_entry >= -1e-10 && w.diagonal_margin >= -1e-9;
    verdict(
        6,
        "transition matrix invariants",
        pass,
        format!(
            "{} matrices, max row-sum error {:.2e}, min entry {:.2e}, min phi_ii - exp(-nM) {:.2e}",
            w.count, w.row_sum, w.min_entry, w.diagonal_margin
        ),
    );
}

#[test]
fn criterion_07_partition_contract() {
    let horizon = 40.0;
    let s = ScheduleGenerator::Example1.materialize(400.0).unwrap();
    let (eps, window) = suggest_parameters(&s, horizon).unwrap();
    let outcome = build_partition(&s, eps, window, horizon);
    let n = s.n();
    let pass;
    let detail;
    match outcome {
        Ok(part) => {
            let (m1, m2) = (part.m1.unwrap(), part.m2.unwrap());
            let max_gap = part.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
            let all_a = part.intervals().all(|(u, v)| verify_condition_a(&s, u, v, eps));
            let max_case2 = part.build_log.iter().map(|b| b.case2).max().unwrap_or(0);
            let max_case3 = part.build_log.iter().map(|b| b.case3).max().unwrap_or(0);
            let limit = n * (n - 1) / 2;
            pass = max_gap <= m1 + m2 && all_a && max_case2 <= limit && max_case3 <= limit;
            detail = format!(
                "eps {eps:.4e}, T {window}, times {:?}, max gap {max_gap} vs M1+M2 {}, A on all {all_a}, max case2 {max_case2}, max case3 {max_case3}",
                part.times,
                m1 + m2
            );
        }
        Err(e) => {
            pass = false;
            detail = format!("eps {eps:.4e}, T {window}: {e}");
        }
    }
    verdict(7, "partition contract", pass, detail);
}

#[test]
fn criterion_08_rendezvous() {
    let horizon = 500.0;
    let mut lines = Vec::new();
    let mut pass = true;
    for seed in 1..=5 {
        let start = Instant::now();
        let s = RobotScenario::robots8(seed);
        let step = s.delta_min / STEP_DIVISOR;
        let traj = simulate(&s, horizon, step).unwrap();
        let r = check_rendezvous(&traj, &s, 0.1).unwrap();
        let inst = check_reciprocity_instantiation(&traj, &s).unwrap();
        let elapsed = start.elapsed();
        let ok = r.pass && r.limit_exists && inst.is_clean() && elapsed < Duration::from_secs(60);
        pass &= ok;
        lines.push(format!(
            "seed {seed}: diameter {:.2} -> {:.4} (<= {:.3}), tail motion {:.1e}, eps {:.3e}, {} pair violations, {} ratio violations, {elapsed:?}",
            r.initial_diameter,
            r.final_diameter,
            r.threshold,
            r.tail_motion,
            inst.epsilon,
            inst.violations.len(),
            inst.ratio_bound_violations
        ));
    }
    verdict(8, "rendezvous", pass, lines.join("; "));
}

#[test]
fn criterion_09_oracle_equivalence() {
    let step = 1e-4;
    let mut worst: f64 = 0.0;
    for seed in 0..ORACLE_SCHEDULES {
        let s = common::random_schedule(3, 6, 3.0, 1000 + seed);
        let x0 = common::random_state(3, seed);
        let traj = propagate(&s, &x0, s.start(), s.horizon(), DEFAULT_TOL).unwrap();
        for (t, reference) in common::rk4_reference(&s, &x0, step) {
            let x = traj.state_at(t).unwrap();
            worst = worst.max((x - &reference).amax());
        }
    }
    verdict(9, "oracle equivalence", worst <= 1e-6, format!("{ORACLE_SCHEDULES} schedules, sup-norm gap {worst:.2e}"));
}

fn runner(offset: u64) -> TestRunner {
    TestRunner::new(Config {
        cases: PROPERTY_CASES,
        rng_seed: RngSeed::Fixed(PROPERTY_SEED + offset),
        failure_persistence: None,
        ..Config::default()
    })
}

fn symmetrized(s: &WeightSchedule) -> WeightSchedule {
    let pieces = s
        .pieces()
        .iter()
        .map(|p| Piece::new(p.t0, p.t1, &p.rates + p.rates.transpose()))
        .collect();
    WeightSchedule::new(s.n(), pieces).unwrap()
}

/// Reachability closure by repeated squaring of the adjacency relation.
fn closure(n: usize, edges: &BTreeSet<Edge>) -> DMatrix<bool> {
    let mut r = DMatrix::from_fn(n, n, |i, j| i == j || edges.contains(&Edge::new(i, j)));
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if r[(i, k)] && r[(k, j)] {
                    r[(i, j)] = true;
                }
            }
        }
    }
    r
}

#[test]
fn criterion_10_property_suite() {
    let schedule = (2usize..=5, any::<u64>());
    let mut results: Vec<(&str, Result<(), String>)> = Vec::new();

    results.push((
        "hull invariance",
        runner(1).run(&schedule, |(n, seed)| {
            let s = common::random_schedule(n, 8, 3.0, seed);
            let tr = propagate(&s, &common::random_state(n, seed), s.start(), s.horizon(), DEFAULT_TOL).unwrap();
            for w in tr.states.windows(2) {
                prop_assert!(w[1].max() <= w[0].max() + 1e-12);
                prop_assert!(w[1].min() >= w[0].min() - 1e-12);
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    results.push((
        "semigroup",
        runner(2).run(&(schedule.clone(), 0.0..1.0f64, 0.0..1.0f64), |((n, seed), a, b)| {
            let s = common::random_schedule(n, 8, 3.0, seed);
            let span = s.horizon() - s.start();
            let (t1, t2) = (s.start() + span * a.min(b), s.start() + span * a.max(b));
            let (t0, t3) = (s.start(), s.horizon());
            let whole = transition_matrix(&s, t0, t3, DEFAULT_TOL).unwrap();
            let parts = transition_matrix(&s, t0, t1, DEFAULT_TOL)
                .unwrap()
                .then(&transition_matrix(&s, t1, t2, DEFAULT_TOL).unwrap())
                .then(&transition_matrix(&s, t2, t3, DEFAULT_TOL).unwrap());
            prop_assert!((whole.phi - parts.phi).amax() <= 1e-8);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    results.push((
        "average conservation",
        runner(3).run(&schedule, |(n, seed)| {
            let s = symmetrized(&common::random_schedule(n, 8, 3.0, seed));
            let d = conserved_average(&s, &common::random_state(n, seed), s.start(), s.horizon()).unwrap();
            prop_assert!(d.is_symmetric);
            prop_assert!(d.drift <= 1e-9, "drift {}", d.drift);
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    results.push((
        "scc partition",
        runner(4).run(&(1usize..=8, prop::collection::vec((0usize..8, 0usize..8), 0..20)), |(n, raw)| {
            let edges: BTreeSet<Edge> = raw.into_iter().filter(|&(a, b)| a < n && b < n).map(|(a, b)| Edge::new(a, b)).collect();
            let comps = scc(n, &edges);
            let mut seen: Vec<usize> = comps.iter().flatten().copied().collect();
            seen.sort_unstable();
            prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
            let reach = closure(n, &edges);
            let mut owner = vec![0; n];
            for (c, members) in comps.iter().enumerate() {
                for &i in members {
                    owner[i] = c;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(owner[i] == owner[j], reach[(i, j)] && reach[(j, i)]);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string()),
    ));

    results.push((
        "activity monotonicity",
        runner(5).run(
            &(schedule, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64, 0.01..1.0f64),
            |((n, seed), a, b, c, d, eps)| {
                let s = common::random_schedule(n, 8, 3.0, seed);
                let span = s.horizon() - s.start();
                let mut ts = [a, b, c, d].map(|x| s.start() + span * x);
                ts.sort_by(f64::total_cmp);
                let [outer_lo, lo, hi, outer_hi] = ts;
                for i in 0..n {
                    for j in i + 1..n {
                        if is_active(&s, i, j, lo, hi, eps) {
                            prop_assert!(is_active(&s, i, j, outer_lo, outer_hi, eps));
                        }
                    }
                }
                Ok(())
            },
        )
        .map_err(|e| e.to_string()),
    ));

    let failed: Vec<String> =
        results.iter().filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}"))).collect();
    verdict(
        10,
        "property suite",
        failed.is_empty(),
        format!("{} properties x {PROPERTY_CASES} cases, failures {failed:?}", results.len()),
    );
}
