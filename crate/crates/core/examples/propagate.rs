//! Exact propagation on a piecewise-constant schedule, checked against the
//! two-agent closed form.

use nalgebra::DMatrix;
use recipro::dynamics::{propagate, transition_matrix, DEFAULT_TOL};
use recipro::schedules::{ScheduleGenerator, WeightSchedule};

fn main() -> recipro::Result<()> {
    let pair = WeightSchedule::constant(DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]), 1.0)?;
    let tr = propagate(&pair, &[0.0, 1.0], 0.0, 1.0, DEFAULT_TOL)?;
    let (_, x) = tr.last().unwrap();
    let e = (-2.0f64).exp();
    println!("two agents, rate 1, t = 1: x = {:?}, closed form ({}, {})", x.as_slice(), (1.0 - e) / 2.0, (1.0 + e) / 2.0);

    let ex1 = ScheduleGenerator::Example1.materialize(40.0)?;
    let tr = propagate(&ex1, &[0.0, 1.0, 2.0, 3.0], 0.0, 40.0, DEFAULT_TOL)?;
    for t in [0.0, 2.0, 4.0, 10.0, 20.0, 40.0] {
        println!("example1 t = {t:>4}: {:?}", tr.state_at(t).unwrap().as_slice());
    }
    let phi = transition_matrix(&ex1, 2.0, 4.0, DEFAULT_TOL)?;
    println!("phi(2, 4) = {:.6}", phi.phi);
    println!("row-sum error {:.1e}, smallest diagonal {:.4}", phi.row_sum_error(), phi.min_diagonal());
    Ok(())
}
