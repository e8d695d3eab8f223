//! Cut-balance ratio, interval mass bound and pairwise reciprocity of the
//! builtin schedules.

use recipro::reciprocity::{certify_schedule, cut_balance_ratio, interval_mass_bound, IntervalPartition};
use recipro::schedules::ScheduleGenerator;

fn main() -> recipro::Result<()> {
    let ex1 = ScheduleGenerator::Example1.materialize(200.0)?;
    let part = IntervalPartition::uniform(0.0, 2.0, 200.0)?;
    println!("example1, t_p = 2p: {:?}", cut_balance_ratio(&ex1, &part)?);
    println!("example1, t_p = 2p: {:?}", interval_mass_bound(&ex1, &part));

    // aligned and misaligned partitions of the oscillator
    let osc = ScheduleGenerator::oscillator_default().materialize(48.0)?;
    for start in [0.0, 1.0, 2.0] {
        let part = IntervalPartition::uniform(start, 4.0, 40.0)?;
        println!("oscillator, t_p = 4p + {start}: K = {:?}", cut_balance_ratio(&osc, &part)?.k());
    }
    let m: Vec<f64> = [40.0, 80.0, 160.0]
        .iter()
        .map(|&h| {
            let s = ScheduleGenerator::oscillator_default().materialize(h).unwrap();
            interval_mass_bound(&s, &IntervalPartition::uniform(0.0, 4.0, h).unwrap()).m
        })
        .collect();
    println!("oscillator M over horizons 40, 80, 160: {m:?}");

    let report = certify_schedule(&ex1, 40.0, None)?;
    println!("{}", report.to_json()?);
    Ok(())
}
