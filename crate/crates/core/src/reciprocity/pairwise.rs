//! Pairwise reciprocity: whenever `a_ij(t) > 0` or `a_ji(t) > 0`, some
//! window of length at most `T` containing `t` carries mass `>= eps` in
//! both directions.
//!
//! For piecewise-constant weights the two window masses
//! `w -> int_w^{w+T} a_ij` are piecewise linear in the window start `w`,
//! with kinks only where `w` or `w + T` hits a breakpoint. Between kinks the
//! set of admissible starts is found by solving two linear inequalities,
//! so the scan is exact on this schedule class. Only windows of length
//! exactly `T` are scanned: longer windows are never needed because
//! activity is monotone under interval inclusion.

use serde::Serialize;

use crate::schedules::WeightSchedule;

/// Relative slack on `>= eps` comparisons made from prefix sums.
const MASS_SLACK: f64 = 1e-9;
/// Uncovered support shorter than this is ignored.
const MIN_VIOLATION: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairActivityReport {
    pub pair: (usize, usize),
    pub epsilon: f64,
    pub window: f64,
    /// Support times were scanned up to this time.
    pub horizon: f64,
    /// Maximal sub-intervals `[start, end]` of the support of
    /// `a_ij + a_ji` on which no qualifying window exists.
    pub violations: Vec<(f64, f64)>,
}

impl PairActivityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Merge sorted closed intervals that touch or overlap.
fn merge(mut v: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    v.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(v.len());
    for (a, b) in v {
        match out.last_mut() {
            Some(last) if a <= last.1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// `base \ cover` for merged, sorted interval lists.
fn subtract(base: &[(f64, f64)], cover: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a, b) in base {
        let mut cur = a;
        for &(c, d) in cover.iter().filter(|(c, d)| *d > a && *c < b) {
            if c > cur {
                out.push((cur, c.min(b)));
            }
            cur = cur.max(d);
            if cur >= b {
                break;
            }
        }
        if cur < b {
            out.push((cur, b));
        }
    }
    out.retain(|(a, b)| b - a > MIN_VIOLATION);
    out
}

/// Support of `a_ij + a_ji` on `[start, horizon]` as merged intervals.
fn support(schedule: &WeightSchedule, i: usize, j: usize, horizon: f64) -> Vec<(f64, f64)> {
    let raw = schedule
        .pieces()
        .iter()
        .filter(|p| p.t0 < horizon && (p.rates[(i, j)] > 0.0 || p.rates[(j, i)] > 0.0))
        .map(|p| (p.t0, p.t1.min(horizon)))
        .collect();
    merge(raw)
}

/// Window starts `w` such that both masses over `[w, w + window]` reach `eps`.
pub(crate) fn admissible_starts(
    schedule: &WeightSchedule,
    i: usize,
    j: usize,
    eps: f64,
    window: f64,
    lo: f64,
    hi: f64,
) -> Vec<(f64, f64)> {
    let target = eps * (1.0 - MASS_SLACK);
    let mut cands: Vec<f64> = schedule
        .breakpoints()
        .into_iter()
        .flat_map(|b| [b, b - window])
        .chain([lo, hi])
        .filter(|&w| w >= lo && w <= hi)
        .collect();
    cands.sort_by(f64::total_cmp);
    cands.dedup();
    let masses = |w: f64| (schedule.mass(i, j, w, w + window), schedule.mass(j, i, w, w + window));

    let mut good = Vec::new();
    let mut prev = masses(cands[0]);
    if cands.len() == 1 && prev.0 >= target && prev.1 >= target {
        good.push((cands[0], cands[0]));
    }
    for pair in cands.windows(2) {
        let (c0, c1) = (pair[0], pair[1]);
        let next = masses(c1);
        let r1 = linear_superlevel(c0, c1, prev.0, next.0, target);
        let r2 = linear_superlevel(c0, c1, prev.1, next.1, target);
        if let (Some((a1, b1)), Some((a2, b2))) = (r1, r2) {
            let (a, b) = (a1.max(a2), b1.min(b2));
            if a <= b {
                good.push((a, b));
            }
        }
        prev = next;
    }
    merge(good)
}

/// `{w in [c0, c1] : g(w) >= target}` for `g` linear between `(c0, g0)` and `(c1, g1)`.
fn linear_superlevel(c0: f64, c1: f64, g0: f64, g1: f64, target: f64) -> Option<(f64, f64)> {
    match (g0 >= target, g1 >= target) {
        (true, true) => Some((c0, c1)),
        (false, false) => None,
        (up_at_start, _) => {
            let cross = c0 + (target - g0) / (g1 - g0) * (c1 - c0);
            let cross = cross.clamp(c0, c1);
            Some(if up_at_start { (c0, cross) } else { (cross, c1) })
        }
    }
}

/// Scan one unordered pair.
pub fn check_pair(
    schedule: &WeightSchedule,
    i: usize,
    j: usize,
    eps: f64,
    window: f64,
    horizon: f64,
) -> PairActivityReport {
    let supp = support(schedule, i, j, horizon);
    let violations = if supp.is_empty() {
        Vec::new()
    } else {
        let lo = supp[0].0 - window;
        let hi = supp[supp.len() - 1].1;
        let starts = admissible_starts(schedule, i, j, eps, window, lo, hi);
        let covered: Vec<_> = merge(starts.into_iter().map(|(a, b)| (a, b + window)).collect());
        subtract(&supp, &covered)
    };
    PairActivityReport { pair: (i, j), epsilon: eps, window, horizon, violations }
}

/// One report per unordered pair `i < j`. Support is scanned on
/// `[start, horizon]`; windows may use schedule data past `horizon`, and the
/// schedule counts as zero outside its materialized range.
pub fn check_pairwise(schedule: &WeightSchedule, eps: f64, window: f64, horizon: f64) -> Vec<PairActivityReport> {
    use rayon::prelude::*;
    let n = schedule.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs.into_par_iter().map(|(i, j)| check_pair(schedule, i, j, eps, window, horizon)).collect()
}

/// Propose `(eps, T)`: `T` doubles from the shortest piece length until the
/// scan passes with `eps` = smallest positive directed mass over windows
/// of length `T` starting at breakpoints. `None` when nothing passes up to
/// the horizon.
pub fn suggest_parameters(schedule: &WeightSchedule, horizon: f64) -> Option<(f64, f64)> {
    let n = schedule.n();
    let has_support = schedule.pieces().iter().any(|p| p.t0 < horizon && !p.is_zero());
    if !has_support {
        return Some((1.0, 1.0));
    }
    let shortest = schedule.pieces().iter().map(|p| p.len()).fold(f64::INFINITY, f64::min);
    let span = horizon - schedule.start();
    let mut window = shortest;
    while window <= 2.0 * span {
        let mut eps = f64::INFINITY;
        for b in schedule.breakpoints().into_iter().filter(|&b| b < horizon) {
            let w = schedule.mass_matrix(b, b + window);
            for i in 0..n {
                for j in 0..n {
                    if i != j && w[(i, j)] > 0.0 {
                        eps = eps.min(w[(i, j)]);
                    }
                }
            }
        }
        if eps.is_finite() && check_pairwise(schedule, eps, window, horizon).iter().all(|r| r.is_clean()) {
            return Some((eps, window));
        }
        window *= 2.0;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{Piece, ScheduleGenerator};
    use nalgebra::DMatrix;

    #[test]
    fn zero_schedule_is_vacuous() {
        let s = WeightSchedule::zero(3, 10.0).unwrap();
        let reports = check_pairwise(&s, 0.1, 1.0, 10.0);
        assert_eq!(reports.len(), 3);
        assert!(reports.iter().all(|r| r.is_clean()));
    }

    #[test]
    fn example1_is_clean_with_calibrated_parameters() {
        let s = ScheduleGenerator::Example1.materialize(40.0).unwrap();
        let reports = check_pairwise(&s, 1.0 / 361.0, 2.0, 40.0);
        assert!(reports.iter().all(|r| r.is_clean()), "{reports:?}");
        // window too short to see both directions of {2,3}
        let short = check_pair(&s, 1, 2, 1.0 / 361.0, 1.0, 40.0);
        assert!(!short.is_clean());
    }

    #[test]
    fn suggestion_for_example1() {
        let s = ScheduleGenerator::Example1.materialize(40.0).unwrap();
        let (eps, t) = suggest_parameters(&s, 40.0).unwrap();
        assert_eq!(t, 2.0);
        assert!((eps - 1.0 / 361.0).abs() < 1e-15);
    }

    #[test]
    fn one_sided_burst_is_a_violation() {
        let mut r = DMatrix::zeros(2, 2);
        r[(0, 1)] = 1.0;
        let s = WeightSchedule::new(2, vec![Piece::zero(2, 0.0, 1.0), Piece::new(1.0, 2.0, r), Piece::zero(2, 2.0, 6.0)]).unwrap();
        let rep = check_pair(&s, 0, 1, 0.1, 2.0, 6.0);
        assert_eq!(rep.violations, vec![(1.0, 2.0)]);
    }

    #[test]
    fn crossing_of_two_masses_is_found() {
        // a_01 on [0,1), a_10 on [1,2): with T = 1 only w = 1 - 0.5 gives 0.5 each.
        let mut r1 = DMatrix::zeros(2, 2);
        r1[(0, 1)] = 1.0;
        let mut r2 = DMatrix::zeros(2, 2);
        r2[(1, 0)] = 1.0;
        let s = WeightSchedule::new(2, vec![Piece::new(0.0, 1.0, r1), Piece::new(1.0, 2.0, r2)]).unwrap();
        let starts = admissible_starts(&s, 0, 1, 0.5, 1.0, -1.0, 2.0);
        assert_eq!(starts.len(), 1);
        assert!((starts[0].0 - 0.5).abs() < 1e-6 && (starts[0].1 - 0.5).abs() < 1e-6, "{starts:?}");
        // covered set is [0.5, 1.5]; support [0, 2) leaves two gaps
        let rep = check_pair(&s, 0, 1, 0.5, 1.0, 2.0);
        assert_eq!(rep.violations.len(), 2);
        assert!(check_pair(&s, 0, 1, 0.5, 2.0, 2.0).is_clean());
    }

    #[test]
    fn subtract_and_merge() {
        assert_eq!(merge(vec![(3.0, 4.0), (0.0, 1.0), (1.0, 2.0)]), vec![(0.0, 2.0), (3.0, 4.0)]);
        assert_eq!(subtract(&[(0.0, 10.0)], &[(1.0, 2.0), (5.0, 12.0)]), vec![(0.0, 1.0), (2.0, 5.0)]);
        assert!(subtract(&[(0.0, 1.0)], &[(-1.0, 3.0)]).is_empty());
    }
}
