//! Persistent-interaction graphs and local consensus of Examples 1 and 2.

use recipro::clustering::{analyze_limits, classify_persistence, doubling_horizons, reciprocal_path_check, DEFAULT_THETA};
use recipro::dynamics::{propagate, DEFAULT_TOL};
use recipro::schedules::ScheduleGenerator;

fn main() -> recipro::Result<()> {
    let horizon = 2000.0;
    for (name, generator) in [("example1", ScheduleGenerator::Example1), ("example2", ScheduleGenerator::Example2)] {
        let s = generator.materialize(horizon)?.without_hint();
        let graph = classify_persistence(&s, &doubling_horizons(horizon, 4), DEFAULT_THETA)?;
        println!("{name}");
        for e in &graph.evidence {
            println!(
                "  edge {} -> {}: increment {:.4}, persistent {}",
                e.edge.from + 1,
                e.edge.to + 1,
                e.increment,
                e.persistent
            );
        }
        println!("  path-reciprocal: {}", reciprocal_path_check(&graph).holds);
        let tr = propagate(&s, &[0.0, 1.0, 2.0, 3.0], 0.0, horizon, DEFAULT_TOL)?;
        let r = analyze_limits(&tr, &graph.components, 1e-3, 1e-3)?;
        for (c, members) in r.components.iter().enumerate() {
            let ids: Vec<usize> = members.iter().map(|i| i + 1).collect();
            println!("  cluster {ids:?}: limit {:.6}, spread {:.2e}", r.cluster_limits[c], r.spreads[c]);
        }
    }
    Ok(())
}
