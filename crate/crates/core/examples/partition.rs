//! Inductive interval construction on Example 1 with calibrated parameters.

use recipro::reciprocity::{build_partition, check_pairwise, suggest_parameters, verify_condition_a};
use recipro::schedules::ScheduleGenerator;

fn main() -> recipro::Result<()> {
    let horizon = 120.0;
    let s = ScheduleGenerator::Example1.materialize(4.0 * horizon)?;
    let (eps, window) = suggest_parameters(&s, horizon).expect("schedule has activity");
    println!("eps = {eps:.5}, T = {window}");
    for r in check_pairwise(&s, eps, window, horizon) {
        println!("pair ({}, {}): {} violations", r.pair.0 + 1, r.pair.1 + 1, r.violations.len());
    }
    let part = build_partition(&s, eps, window, horizon)?;
    println!("M1 = {}, M2 = {}", part.m1.unwrap(), part.m2.unwrap());
    for step in &part.build_log {
        println!(
            "[{:>6.1}, {:>6.1}]  case 2: {}  case 3: {}  A: {}",
            step.t_k,
            step.t_next,
            step.case2,
            step.case3,
            verify_condition_a(&s, step.t_k, step.t_next, eps)
        );
    }
    Ok(())
}
