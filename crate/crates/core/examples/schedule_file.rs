//! A custom periodic schedule written to JSON, reloaded and checked for
//! pairwise reciprocity.

use recipro::reciprocity::{check_pairwise, suggest_parameters};
use recipro::schedules::{PieceEntry, ScheduleGenerator, WeightSchedule};

fn main() -> recipro::Result<()> {
    // agent 1 listens to 2 first, then 2 listens back; 3 is told by 2 only
    let generator = ScheduleGenerator::Custom {
        n: 3,
        period: 3.0,
        pieces: vec![
            PieceEntry { t0: 0.0, t1: 1.0, entries: vec![(0, 1, 1.0)] },
            PieceEntry { t0: 1.0, t1: 2.0, entries: vec![(1, 0, 0.5)] },
            PieceEntry { t0: 2.0, t1: 3.0, entries: vec![(2, 1, 2.0)] },
        ],
    };
    let s = generator.materialize(30.0)?;
    let path = std::env::temp_dir().join("recipro_custom_schedule.json");
    s.save(&path)?;
    let back = WeightSchedule::load(&path)?;
    println!("wrote {} ({} pieces), reload identical: {}", path.display(), back.pieces().len(), back == s);

    // the one-way pair {2, 3} admits no reciprocity window, so no suggestion exists
    let (eps, window) = match suggest_parameters(&back, 30.0) {
        Some(p) => p,
        None => {
            println!("no (eps, T) makes every pair reciprocal; scanning with eps = 0.5, T = 3");
            (0.5, 3.0)
        }
    };
    for r in check_pairwise(&back, eps, window, 30.0) {
        println!("pair ({}, {}): violations {:?}", r.pair.0 + 1, r.pair.1 + 1, r.violations);
    }
    Ok(())
}
