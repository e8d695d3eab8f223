//! Growing interval mass defeats convergence: x3 - x1 stays bounded away
//! from zero while agent 2 keeps swinging between them.

use recipro::dynamics::{propagate, DEFAULT_TOL};
use recipro::schedules::ScheduleGenerator;

fn main() -> recipro::Result<()> {
    let cycles = 200;
    let s = ScheduleGenerator::oscillator_default().materialize(4.0 * cycles as f64)?;
    let tr = propagate(&s, &[0.0, 0.5, 1.0], 0.0, 4.0 * cycles as f64, DEFAULT_TOL)?;
    println!("{:>4} {:>10} {:>10} {:>10} {:>12}", "p", "x1(4p)", "x2(4p)", "x3(4p)", "x2(4p+2)");
    for p in [0, 1, 2, 5, 10, 50, 100, 199] {
        let t = 4.0 * p as f64;
        let x = tr.state_at(t).unwrap();
        let mid = tr.state_at(t + 2.0).unwrap();
        println!("{p:>4} {:>10.6} {:>10.6} {:>10.6} {:>12.6}", x[0], x[1], x[2], mid[1]);
    }
    Ok(())
}
