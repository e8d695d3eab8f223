//! Exact propagation of `x_i' = sum_j a_ij(t) (x_j - x_i)` on
//! piecewise-constant schedules, and sampled transition matrices.
//!
//! On a piece with constant rates the flow is `x -> exp(-L h) x`; the
//! transition matrix over several pieces is the ordered product of those
//! exponentials (latest piece on the left).

pub mod expm;
mod trajectory;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::reciprocity::IntervalPartition;
use crate::schedules::WeightSchedule;
use crate::subset::AgentSet;

pub use expm::{consensus_flow, laplacian};
pub use trajectory::Trajectory;

/// Default relative accuracy of each per-piece exponential.
pub const DEFAULT_TOL: f64 = 1e-12;
/// Entries of a transition matrix below this are a numerical fault.
pub const NEGATIVE_ENTRY_LIMIT: f64 = -1e-10;
/// Row-sum tolerance for row-stochasticity.
pub const ROW_SUM_TOL: f64 = 1e-8;
/// Slack on each side of the cut bounds.
pub const CUT_BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct SampleOptions {
    /// Relative accuracy of each matrix exponential.
    pub tol: f64,
    /// Largest gap between emitted samples; `None` samples only at breakpoints.
    pub max_spacing: Option<f64>,
}

impl Default for SampleOptions {
    fn default() -> Self {
        SampleOptions { tol: DEFAULT_TOL, max_spacing: None }
    }
}

/// Propagate from `x0` at `t0` to `t1`, emitting a sample at `t0`, at every
/// piece breakpoint in between, and at `t1`.
pub fn propagate(schedule: &WeightSchedule, x0: &[f64], t0: f64, t1: f64, tol: f64) -> Result<Trajectory> {
    propagate_with(schedule, x0, t0, t1, &SampleOptions { tol, max_spacing: None })
}

pub fn propagate_with(
    schedule: &WeightSchedule,
    x0: &[f64],
    t0: f64,
    t1: f64,
    opts: &SampleOptions,
) -> Result<Trajectory> {
    check_range(schedule, t0, t1)?;
    if x0.len() != schedule.n() {
        return Err(Error::InvalidArgument(format!(
            "initial state has {} entries, schedule has {} agents",
            x0.len(),
            schedule.n()
        )));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if let Some(s) = opts.max_spacing {
        if !(s > 0.0) {
            return Err(Error::InvalidArgument("max spacing must be positive".into()));
        }
    }
    let mut x = DVector::from_column_slice(x0);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t0 });
    }
    let mut times = vec![t0];
    let mut states = vec![x.clone()];
    for (rates, a, b) in segments(schedule, t0, t1) {
        let h = b - a;
        let steps = opts.max_spacing.map_or(1, |s| (h / s).ceil().max(1.0) as usize);
        let dt = h / steps as f64;
        let flow = consensus_flow(rates, dt, opts.tol);
        for k in 1..=steps {
            x = &flow * x;
            let t = if k == steps { b } else { a + dt * k as f64 };
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { t });
            }
            times.push(t);
            states.push(x.clone());
        }
    }
    Ok(Trajectory { times, states })
}

fn check_range(schedule: &WeightSchedule, t0: f64, t1: f64) -> Result<()> {
    if !(t0 <= t1) {
        return Err(Error::InvalidArgument(format!("interval [{t0}, {t1}] is reversed")));
    }
    for t in [t0, t1] {
        if t < schedule.start() || t > schedule.horizon() {
            return Err(Error::OutOfRange { t, start: schedule.start(), end: schedule.horizon() });
        }
    }
    Ok(())
}

/// Constant-rate segments `(rates, a, b)` covering `[t0, t1]`, positive length only.
fn segments<'a>(
    schedule: &'a WeightSchedule,
    t0: f64,
    t1: f64,
) -> impl Iterator<Item = (&'a DMatrix<f64>, f64, f64)> + 'a {
    schedule
        .pieces()
        .iter()
        .filter(move |p| p.t1 > t0 && p.t0 < t1)
        .map(move |p| (&p.rates, p.t0.max(t0), p.t1.min(t1)))
        .filter(|(_, a, b)| b > a)
}

/// Row-stochastic map `x(t_to) = phi x(t_from)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    pub t_from: f64,
    pub t_to: f64,
    pub phi: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn n(&self) -> usize {
        self.phi.nrows()
    }

    /// `max_i |sum_j phi_ij - 1|`
    pub fn row_sum_error(&self) -> f64 {
        self.phi.row_iter().map(|r| (r.sum() - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn min_entry(&self) -> f64 {
        self.phi.min()
    }

    pub fn min_diagonal(&self) -> f64 {
        self.phi.diagonal().min()
    }

    /// `sum_{i in S, j not in S} phi_ij`
    pub fn cut(&self, s: AgentSet) -> f64 {
        cut_sum(&self.phi, s)
    }

    pub fn is_row_stochastic(&self) -> bool {
        self.row_sum_error() <= ROW_SUM_TOL && self.min_entry() >= NEGATIVE_ENTRY_LIMIT
    }

    /// `x(t_to) = phi x(t_from)` for a composed interval: `later * self`.
    pub fn then(&self, later: &TransitionMatrix) -> TransitionMatrix {
        TransitionMatrix { t_from: self.t_from, t_to: later.t_to, phi: &later.phi * &self.phi }
    }
}

pub(crate) fn cut_sum(m: &DMatrix<f64>, s: AgentSet) -> f64 {
    let n = m.nrows();
    let outside = s.complement(n);
    let mut acc = 0.0;
    for i in s.members().into_iter().filter(|&i| i < n) {
        for j in outside.members() {
            acc += m[(i, j)];
        }
    }
    acc
}

/// Ordered product of per-piece exponentials over `[t_from, t_to]`.
///
/// Entries in `[-1e-10, 0)` are clamped to zero; anything more negative is
/// reported as [`Error::NegativeEntry`].
pub fn transition_matrix(schedule: &WeightSchedule, t_from: f64, t_to: f64, tol: f64) -> Result<TransitionMatrix> {
    check_range(schedule, t_from, t_to)?;
    let n = schedule.n();
    let mut phi = DMatrix::identity(n, n);
    for (rates, a, b) in segments(schedule, t_from, t_to) {
        phi = consensus_flow(rates, b - a, tol) * phi;
    }
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: t_to });
    }
    for i in 0..n {
        for j in 0..n {
            let v = phi[(i, j)];
            if v < NEGATIVE_ENTRY_LIMIT {
                return Err(Error::NegativeEntry { row: i, col: j, value: v });
            }
            if v < 0.0 {
                phi[(i, j)] = 0.0;
            }
        }
    }
    Ok(TransitionMatrix { t_from, t_to, phi })
}

/// Transition matrix with the schedule taken as zero outside its range
/// (identity flow there).
pub fn transition_matrix_extended(
    schedule: &WeightSchedule,
    t_from: f64,
    t_to: f64,
    tol: f64,
) -> Result<TransitionMatrix> {
    let a = t_from.clamp(schedule.start(), schedule.horizon());
    let b = t_to.clamp(schedule.start(), schedule.horizon());
    let mut tm = transition_matrix(schedule, a, b.max(a), tol)?;
    tm.t_from = t_from;
    tm.t_to = t_to;
    Ok(tm)
}

/// Outcome of the cut-bound check `G * cutA <= cutPhi <= n * cutA`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct PhiBoundCheck {
    pub subset: Vec<usize>,
    pub interval: (f64, f64),
    /// `sum_{i in S, j not in S} phi_ij`
    pub cut_phi: f64,
    /// `sum_{i in S, j not in S} int a_ij`
    pub cut_a: f64,
    /// `exp(-2 n M) / n`
    pub g: f64,
    pub mass_bound: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub min_diagonal: f64,
    pub row_sum_error: f64,
}

impl PhiBoundCheck {
    pub fn holds(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Compare the cut of the sampled transition matrix over interval `p` of
/// `partition` against the cut of the integrated weights.
pub fn check_phi_bounds(
    schedule: &WeightSchedule,
    partition: &IntervalPartition,
    subset: AgentSet,
    p: usize,
) -> Result<PhiBoundCheck> {
    let m = partition.mass_bound.ok_or(Error::PartitionNotCertified)?;
    let n = schedule.n();
    if !subset.is_proper(n) {
        return Err(Error::InvalidArgument(format!("{subset:?} is not a non-empty proper subset")));
    }
    let (u, v) = partition
        .interval(p)
        .ok_or_else(|| Error::InvalidArgument(format!("partition has no interval {p}")))?;
    let tm = transition_matrix_extended(schedule, u, v, DEFAULT_TOL)?;
    let cut_a = cut_sum(&schedule.integral_matrix(u, v), subset);
    let cut_phi = tm.cut(subset);
    let g = (-2.0 * n as f64 * m).exp() / n as f64;
    Ok(PhiBoundCheck {
        subset: subset.members(),
        interval: (u, v),
        cut_phi,
        cut_a,
        g,
        mass_bound: m,
        lower_ok: g * cut_a <= cut_phi + CUT_BOUND_SLACK,
        upper_ok: cut_phi <= n as f64 * cut_a + CUT_BOUND_SLACK,
        min_diagonal: tm.min_diagonal(),
        row_sum_error: tm.row_sum_error(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AverageDrift {
    pub is_symmetric: bool,
    pub drift: f64,
}

/// Drift of the state mean over `[t0, t1]`; symmetric weights conserve it.
pub fn conserved_average(schedule: &WeightSchedule, x0: &[f64], t0: f64, t1: f64) -> Result<AverageDrift> {
    let tr = propagate(schedule, x0, t0, t1, DEFAULT_TOL)?;
    let (_, end) = tr.last().expect("propagate emits at least one sample");
    let mean0 = x0.iter().sum::<f64>() / x0.len() as f64;
    Ok(AverageDrift { is_symmetric: schedule.is_symmetric_on(t0, t1), drift: (end.mean() - mean0).abs() })
}
