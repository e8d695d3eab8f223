//! Integral cut-balance, interval mass bounds and pairwise reciprocity on
//! weight schedules, plus the inductive interval-partition builder.
//!
//! All integrals here treat the schedule as zero outside its materialized
//! range, so partitions may end past the horizon.

mod pairwise;
mod partition;

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::cut_sum;
use crate::error::{Error, Result};
use crate::schedules::{Edge, WeightSchedule};
use crate::subset::AgentSet;

pub use pairwise::{check_pair, check_pairwise, suggest_parameters, PairActivityReport};
pub use partition::{build_partition, condition_b, BuildStep};

/// Cut enumeration is exhaustive over `2^n - 2` subsets.
pub const MAX_CUT_AGENTS: usize = 16;

/// Increasing times `t_0 < t_1 < ...` with the constants certified on them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalPartition {
    pub times: Vec<f64>,
    /// Certified cut-balance ratio `K`, or `None` if not certified or infeasible.
    pub cut_balance: Option<f64>,
    /// Certified interval mass bound `M`.
    pub mass_bound: Option<f64>,
    /// Condition A flag per interval (empty unless built or certified).
    pub condition_a: Vec<bool>,
    /// Builder constants, set by [`build_partition`].
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub build_log: Vec<BuildStep>,
}

impl IntervalPartition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidArgument("a partition needs at least two times".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("partition times must be finite and strictly increasing".into()));
        }
        Ok(IntervalPartition {
            times,
            cut_balance: None,
            mass_bound: None,
            condition_a: Vec::new(),
            m1: None,
            m2: None,
            build_log: Vec::new(),
        })
    }

    /// `t_p = start + p * period` up to the first time `>= end`.
    pub fn uniform(start: f64, period: f64, end: f64) -> Result<Self> {
        if !(period > 0.0) || !(end > start) {
            return Err(Error::InvalidArgument(format!("bad uniform partition: start {start}, period {period}, end {end}")));
        }
        let count = ((end - start) / period).ceil() as usize;
        Self::new((0..=count).map(|p| start + p as f64 * period).collect())
    }

    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn interval(&self, p: usize) -> Option<(f64, f64)> {
        Some((*self.times.get(p)?, *self.times.get(p + 1)?))
    }

    pub fn intervals(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.windows(2).map(|w| (w[0], w[1]))
    }

    /// Compute and store `K` and `M` for `schedule`.
    pub fn certify(&mut self, schedule: &WeightSchedule) -> Result<CutBalance> {
        let cb = cut_balance_ratio(schedule, self)?;
        self.cut_balance = cb.k();
        self.mass_bound = Some(interval_mass_bound(schedule, self).m);
        Ok(cb)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CutBalance {
    Bounded { k: f64, worst_subset: Vec<usize>, worst_interval: (f64, f64) },
    /// Some cut has positive forward mass and zero reverse mass.
    Infeasible { subset: Vec<usize>, interval: (f64, f64) },
}

impl CutBalance {
    pub fn k(&self) -> Option<f64> {
        match self {
            CutBalance::Bounded { k, .. } => Some(*k),
            CutBalance::Infeasible { .. } => None,
        }
    }
}

/// Worst ratio of one subset over all intervals: `(ratio, interval index)`,
/// with `ratio = inf` marking infeasibility.
fn worst_for_subset(integrals: &[nalgebra::DMatrix<f64>], s: AgentSet) -> (f64, usize) {
    let mut worst = (1.0, 0);
    for (p, w) in integrals.iter().enumerate() {
        let forward = cut_sum(w, s);
        let reverse = cut_sum(&w.transpose(), s);
        let ratio = match (forward > 0.0, reverse > 0.0) {
            (false, true) => 0.0,
            (false, false) => 1.0,
            (true, false) => f64::INFINITY,
            (true, true) => forward / reverse,
        };
        if ratio > worst.0 {
            worst = (ratio, p);
        }
        if ratio.is_infinite() {
            break;
        }
    }
    worst
}

/// Smallest `K >= 1` with `sum_{i in S, j notin S} int a_ij <= K sum_{i in S, j notin S} int a_ji`
/// for every non-empty proper `S` and every interval of `partition`.
pub fn cut_balance_ratio(schedule: &WeightSchedule, partition: &IntervalPartition) -> Result<CutBalance> {
    let n = schedule.n();
    if n > MAX_CUT_AGENTS {
        return Err(Error::TooManyAgents { n, max: MAX_CUT_AGENTS });
    }
    let integrals: Vec<_> = partition.intervals().map(|(u, v)| schedule.integral_matrix(u, v)).collect();
    let subsets: Vec<AgentSet> = AgentSet::proper_subsets(n).collect();
    let per_subset: Vec<(f64, usize)> = subsets.par_iter().map(|&s| worst_for_subset(&integrals, s)).collect();

    let mut best = (1.0, subsets[0], 0usize);
    for (&s, &(ratio, p)) in subsets.iter().zip(&per_subset) {
        if ratio > best.0 {
            best = (ratio, s, p);
        }
    }
    let (ratio, s, p) = best;
    let interval = partition.interval(p).expect("partition has at least one interval");
    Ok(if ratio.is_infinite() {
        CutBalance::Infeasible { subset: s.members(), interval }
    } else {
        CutBalance::Bounded { k: ratio, worst_subset: s.members(), worst_interval: interval }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MassBound {
    pub m: f64,
    /// Edge `j -> i` carrying the largest `int a_ij`; `None` for a zero schedule.
    pub worst_edge: Option<Edge>,
    pub worst_interval: Option<(f64, f64)>,
}

/// `M = max over (i, j, p) of int_{t_p}^{t_{p+1}} a_ij`.
pub fn interval_mass_bound(schedule: &WeightSchedule, partition: &IntervalPartition) -> MassBound {
    let n = schedule.n();
    let mut out = MassBound { m: 0.0, worst_edge: None, worst_interval: None };
    for (u, v) in partition.intervals() {
        let w = schedule.integral_matrix(u, v);
        for i in 0..n {
            for j in 0..n {
                if i != j && w[(i, j)] > out.m {
                    out = MassBound { m: w[(i, j)], worst_edge: Some(Edge::of_weight(i, j)), worst_interval: Some((u, v)) };
                }
            }
        }
    }
    out
}

/// `{i, j}` is active over `[u, v]` when both directed integrals reach `eps`.
pub fn is_active(schedule: &WeightSchedule, i: usize, j: usize, u: f64, v: f64, eps: f64) -> bool {
    let w = schedule.integral_matrix(u, v);
    w[(i, j)] >= eps && w[(j, i)] >= eps
}

/// Condition A on `[u, v]`: every pair is either silent in both directions
/// or active. Both ordered directions are tested for silence.
pub fn verify_condition_a(schedule: &WeightSchedule, u: f64, v: f64, eps: f64) -> bool {
    let n = schedule.n();
    let w = schedule.integral_matrix(u, v);
    (0..n).all(|i| {
        (i + 1..n).all(|j| {
            (schedule.is_zero_on(i, j, u, v) && schedule.is_zero_on(j, i, u, v)) || (w[(i, j)] >= eps && w[(j, i)] >= eps)
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assumption1Report {
    #[serde(rename = "K")]
    pub k: Option<f64>,
    pub infeasible: bool,
    pub worst_subset: Vec<usize>,
    pub worst_interval: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assumption2Report {
    #[serde(rename = "M")]
    pub m: f64,
    pub worst_edge: Option<Edge>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairViolations {
    pub pair: (usize, usize),
    pub intervals: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assumption3Report {
    pub epsilon: f64,
    #[serde(rename = "T")]
    pub t: f64,
    /// Support was scanned up to this time.
    pub horizon: f64,
    pub violations: Vec<PairViolations>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionReport {
    pub times: Vec<f64>,
    #[serde(rename = "M1")]
    pub m1: Option<f64>,
    #[serde(rename = "M2")]
    pub m2: Option<f64>,
    /// `"algorithm"` when built inductively, `"breakpoints"` when pairwise
    /// reciprocity failed and the piece grid was used instead.
    pub source: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationReport {
    pub assumption1: Assumption1Report,
    pub assumption2: Assumption2Report,
    pub assumption3: Assumption3Report,
    pub partition: PartitionReport,
}

impl CertificationReport {
    /// Pairwise reciprocity holds and the cut balance is finite.
    pub fn passed(&self) -> bool {
        self.assumption3.violations.is_empty() && !self.assumption1.infeasible
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Certify all three assumptions on `[start, horizon]`.
///
/// `params = None` uses [`suggest_parameters`]. When pairwise reciprocity
/// fails no inductive partition exists, and `K`, `M` are reported on the
/// piece grid.
pub fn certify_schedule(schedule: &WeightSchedule, horizon: f64, params: Option<(f64, f64)>) -> Result<CertificationReport> {
    let (eps, window) = match params.or_else(|| suggest_parameters(schedule, horizon)) {
        Some(p) => p,
        None => fallback_parameters(schedule, horizon),
    };
    let reports = check_pairwise(schedule, eps, window, horizon);
    let violations: Vec<PairViolations> = reports
        .iter()
        .filter(|r| !r.is_clean())
        .map(|r| PairViolations { pair: r.pair, intervals: r.violations.clone() })
        .collect();

    let (mut partition, source) = if violations.is_empty() {
        (build_partition(schedule, eps, window, horizon)?, "algorithm")
    } else {
        let grid: Vec<f64> = schedule.breakpoints().into_iter().filter(|&b| b <= horizon).collect();
        (IntervalPartition::new(grid)?, "breakpoints")
    };
    let cb = partition.certify(schedule)?;
    let mb = interval_mass_bound(schedule, &partition);
    let assumption1 = match cb {
        CutBalance::Bounded { k, worst_subset, worst_interval } => {
            Assumption1Report { k: Some(k), infeasible: false, worst_subset, worst_interval }
        }
        CutBalance::Infeasible { subset, interval } => {
            Assumption1Report { k: None, infeasible: true, worst_subset: subset, worst_interval: interval }
        }
    };
    log::info!("certified: K = {:?}, M = {}, {} pair(s) violating", assumption1.k, mb.m, violations.len());
    Ok(CertificationReport {
        assumption1,
        assumption2: Assumption2Report { m: mb.m, worst_edge: mb.worst_edge },
        assumption3: Assumption3Report { epsilon: eps, t: window, horizon, violations },
        partition: PartitionReport { times: partition.times, m1: partition.m1, m2: partition.m2, source: source.into() },
    })
}

/// Whole-span window and smallest positive per-piece mass.
fn fallback_parameters(schedule: &WeightSchedule, horizon: f64) -> (f64, f64) {
    let eps = schedule
        .pieces()
        .iter()
        .flat_map(|p| p.rates.iter().map(move |r| r * p.len()))
        .filter(|&m| m > 0.0)
        .fold(f64::INFINITY, f64::min);
    (if eps.is_finite() { eps } else { 1.0 }, horizon - schedule.start())
}
