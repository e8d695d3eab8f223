//! Inductive construction of `t_0 = 0 < t_1 < ...` such that every pair is
//! silent or active on each `[t_k, t_{k+1}]`.
//!
//! With `M2 = n(n-1)T + 1.5T` and `M1 = M2 + T`, the candidate `t̄` starts at
//! `t_k + M1` and advances by `T` while Condition A on `[t_k, t̄]` or
//! Condition B at `t̄` fails. Each pair can block each condition at most
//! once per step, so `t̄` never reaches `t_k + M1 + M2 - T`.

use serde::Serialize;

use super::{check_pairwise, verify_condition_a, IntervalPartition};
use crate::error::{Error, Result};
use crate::schedules::WeightSchedule;

/// Counters for one accepted interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuildStep {
    pub t_k: f64,
    pub t_next: f64,
    /// Candidates rejected because Condition A failed.
    pub case2: usize,
    /// Candidates rejected because Condition B failed with A holding.
    pub case3: usize,
}

/// Condition B at `t`: every pair silent on `[t, t + T]` in both
/// directions is exempt; every other pair must be active over `[t, t + M1]`.
pub fn condition_b(schedule: &WeightSchedule, t: f64, eps: f64, window: f64, m1: f64) -> bool {
    let n = schedule.n();
    let w = schedule.integral_matrix(t, t + m1);
    (0..n).all(|i| {
        (i + 1..n).all(|j| {
            let silent = schedule.is_zero_on(i, j, t, t + window) && schedule.is_zero_on(j, i, t, t + window);
            silent || (w[(i, j)] >= eps && w[(j, i)] >= eps)
        })
    })
}

/// Build the partition up to the first `t_k >= horizon`.
///
/// Requires pairwise reciprocity with `(eps, window)` on `[0, horizon]`
/// and a schedule that vanishes before 0.
pub fn build_partition(schedule: &WeightSchedule, eps: f64, window: f64, horizon: f64) -> Result<IntervalPartition> {
    if !(eps > 0.0 && window > 0.0 && horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("need eps, T, horizon > 0 (got {eps}, {window}, {horizon})")));
    }
    if schedule.pieces().iter().any(|p| p.t0 < 0.0 && !p.is_zero()) {
        return Err(Error::InvalidArgument("schedule must vanish before t = 0".into()));
    }
    let failing = check_pairwise(schedule, eps, window, horizon).iter().filter(|r| !r.is_clean()).count();
    if failing > 0 {
        return Err(Error::AssumptionViolated { pairs: failing });
    }

    let n = schedule.n() as f64;
    let m2 = n * (n - 1.0) * window + 1.5 * window;
    let m1 = m2 + window;
    let mut times = vec![0.0];
    let mut log = Vec::new();
    let mut t_k = 0.0;
    while t_k < horizon {
        let mut candidate = t_k + m1;
        let (mut case2, mut case3) = (0, 0);
        loop {
            if candidate >= t_k + m1 + m2 - window {
                return Err(Error::InternalCase0 { t_k, candidate });
            }
            if !verify_condition_a(schedule, t_k, candidate, eps) {
                case2 += 1;
            } else if !condition_b(schedule, candidate, eps, window, m1) {
                case3 += 1;
            } else {
                break;
            }
            candidate += window;
        }
        log::debug!("interval [{t_k}, {candidate}]: {case2} A-rejections, {case3} B-rejections");
        log.push(BuildStep { t_k, t_next: candidate, case2, case3 });
        times.push(candidate);
        t_k = candidate;
    }

    let mut part = IntervalPartition::new(times)?;
    part.condition_a = part.intervals().map(|(u, v)| verify_condition_a(schedule, u, v, eps)).collect();
    part.m1 = Some(m1);
    part.m2 = Some(m2);
    part.build_log = log;
    Ok(part)
}
