//! Cut sums of sampled transition matrices against cut integrals:
//! `G cutA <= cutPhi <= n cutA` with `G = exp(-2nM)/n`.

use recipro::dynamics::check_phi_bounds;
use recipro::reciprocity::IntervalPartition;
use recipro::schedules::ScheduleGenerator;
use recipro::AgentSet;

fn main() -> recipro::Result<()> {
    let s = ScheduleGenerator::Example2.materialize(20.0)?;
    let mut part = IntervalPartition::uniform(0.0, 2.0, 20.0)?;
    part.certify(&s)?;
    println!("K = {:?}, M = {:?}", part.cut_balance, part.mass_bound);
    for p in [1, 2, 5] {
        for subset in AgentSet::proper_subsets(4) {
            let c = check_phi_bounds(&s, &part, subset, p)?;
            let ids: Vec<usize> = c.subset.iter().map(|i| i + 1).collect();
            println!(
                "{:?} S = {ids:?}: {:.3e} <= {:.3e} <= {:.3e}  {}",
                c.interval,
                c.g * c.cut_a,
                c.cut_phi,
                4.0 * c.cut_a,
                if c.holds() { "ok" } else { "VIOLATED" }
            );
        }
    }
    Ok(())
}
