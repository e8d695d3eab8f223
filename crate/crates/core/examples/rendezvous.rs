//! Eight robots with intermittent sensing reach practical rendezvous.
//! Usage: `cargo run --example rendezvous -- [seed]`

use recipro::rendezvous::{check_reciprocity_instantiation, check_rendezvous, simulate, Cause, RobotScenario, STEP_DIVISOR};

fn main() -> recipro::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let s = RobotScenario::robots8(seed);
    let step = s.delta_min / STEP_DIVISOR;
    let traj = simulate(&s, 500.0, step)?;
    for t in [0.0, 10.0, 25.0, 50.0, 100.0, 200.0, 500.0] {
        let m = traj.times.partition_point(|&u| u < t - 1e-9).min(traj.times.len() - 1);
        println!("t = {:>5}: diameter {:.4}", traj.times[m], traj.diameter(m));
    }
    let engages = traj.interaction_log.iter().filter(|e| e.b == 1 && e.cause == Cause::Engage).count();
    let reciprocations = traj.interaction_log.iter().filter(|e| e.b == 1 && e.cause == Cause::Reciprocate).count();
    println!("{engages} engagements, {reciprocations} reciprocations");
    println!("{:?}", check_rendezvous(&traj, &s, 0.1)?);
    let inst = check_reciprocity_instantiation(&traj, &s)?;
    println!("eps = {:.4e}, T = {}, violations {}, ratio-bound violations {}", inst.epsilon, inst.window, inst.violations.len(), inst.ratio_bound_violations);
    Ok(())
}
