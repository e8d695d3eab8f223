//! Saturated planar consensus `x_i' = sat(sum_j b_ij (x_j - x_i))` with
//! intermittent sensing.
//!
//! Robot `i` wakes at its activation times `t_k`. At a wake-up it
//! * engages every `j` with `|x_i(t_k) - x_j(t_k)| >= d1`, setting
//!   `b_ij = 1` on `[t_k, t_k + delta_min)`;
//! * reciprocates towards every `j` that engaged `i` at some time in
//!   `[t_k - delta_max, t_k]`, setting `b_ij = 1` on `[t_k, t_k + delta_min)`
//!   for as long as `|x_i - x_j| >= d0`.
//!
//! Activations falling inside a step are applied at the next step start,
//! in time order, with positions interpolated to the activation time for
//! the distance snapshot. `b` is then held over the step and the state is
//! advanced by explicit Euler. Knowledge of a partner's engagement is
//! assumed instantaneous.

mod scenario;

use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, Vector2};
use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::reciprocity::{check_pairwise, PairActivityReport};
use crate::schedules::{Piece, WeightSchedule};

pub use scenario::{box_positions, ActivationPlan, RobotScenario, ScenarioFile};

/// `step <= delta_min / STEP_DIVISOR`.
pub const STEP_DIVISOR: f64 = 20.0;
/// Tail Cauchy tolerance for the existence of limits.
pub const CAUCHY_TOL: f64 = 1e-3;
/// Relative slack applied to `eps` when checking the reciprocity instantiation.
pub const INSTANTIATION_SLACK: f64 = 0.05;
/// Horizons shorter than this many `delta_max` are too short for a verdict.
pub const MIN_HORIZON_FACTOR: f64 = 100.0;

/// `mu v / |v|` if `|v| >= mu`, else `v`.
pub fn sat(v: Vector2<f64>, mu: f64) -> Vector2<f64> {
    let norm = v.norm();
    if norm >= mu {
        v * (mu / norm)
    } else {
        v
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Cause {
    Engage,
    Reciprocate,
}

/// A flip of `b_ij` at a step start.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InteractionEvent {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub b: u8,
    pub cause: Cause,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlanarTrajectory {
    pub times: Vec<f64>,
    pub positions: Vec<Vec<Vector2<f64>>>,
    /// `b` held over `[times[m], times[m + 1])`, row-major `n x n`.
    pub interactions: Vec<Vec<bool>>,
    pub interaction_log: Vec<InteractionEvent>,
    pub activations: Vec<Vec<f64>>,
    pub step: f64,
}

impl PlanarTrajectory {
    pub fn n(&self) -> usize {
        self.positions.first().map_or(0, |p| p.len())
    }

    pub fn b(&self, m: usize, i: usize, j: usize) -> bool {
        self.interactions[m][i * self.n() + j]
    }

    pub fn diameter(&self, m: usize) -> f64 {
        scenario::diameter(&self.positions[m])
    }

    pub fn final_diameter(&self) -> f64 {
        self.diameter(self.times.len() - 1)
    }

    /// Largest `|x_i(t + h) - x_i(t)| - mu h` over all steps and robots.
    pub fn speed_excess(&self, mu: f64) -> f64 {
        self.positions
            .windows(2)
            .zip(self.times.windows(2))
            .flat_map(|(p, t)| {
                let h = t[1] - t[0];
                p[0].iter().zip(&p[1]).map(move |(a, b)| (b - a).norm() - mu * h)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest increase of the diameter between consecutive samples.
    pub fn diameter_increase(&self) -> f64 {
        let d: Vec<f64> = (0..self.times.len()).map(|m| self.diameter(m)).collect();
        d.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Scalar trajectory of coordinate `c` (0 = x, 1 = y) of every robot.
    pub fn component(&self, c: usize) -> Trajectory {
        Trajectory {
            times: self.times.clone(),
            states: self.positions.iter().map(|p| nalgebra::DVector::from_iterator(p.len(), p.iter().map(|v| v[c]))).collect(),
        }
    }

    /// CSV with header `t,x1x,x1y,...,xnx,xny`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t".to_string()];
        for i in 1..=self.n() {
            header.push(format!("x{i}x"));
            header.push(format!("x{i}y"));
        }
        w.write_record(&header)?;
        for (t, ps) in self.times.iter().zip(&self.positions) {
            let mut row = vec![format!("{t:.16e}")];
            for p in ps {
                row.push(format!("{:.16e}", p.x));
                row.push(format!("{:.16e}", p.y));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// One JSON object per line: `{t, i, j, b, cause}` (0-based indices).
    pub fn write_log<W: Write>(&self, mut out: W) -> Result<()> {
        for ev in &self.interaction_log {
            serde_json::to_writer(&mut out, ev)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn save_log(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_log(&mut f)?;
        f.flush()?;
        Ok(())
    }
}

fn basic_checks(s: &RobotScenario, horizon: f64, step: f64) -> Result<()> {
    let limit = s.delta_min / STEP_DIVISOR;
    if !(step > 0.0) || step > limit * (1.0 + 1e-12) {
        return Err(Error::StepTooLarge { step, limit });
    }
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!("horizon {horizon} must be positive")));
    }
    if s.n < 2 || s.x0.len() != s.n || !(s.mu > 0.0) || !(s.d0 >= 0.0) || !(s.delta_min > 0.0) {
        return Err(Error::InfeasibleScenario("need n >= 2, mu > 0, d0 >= 0, delta_min > 0".into()));
    }
    Ok(())
}

/// Effective weights `a_ij = mu b_ij / |drive_i|` when `|drive_i| >= mu`,
/// else `a_ij = b_ij`.
fn weights_from(positions: &[Vector2<f64>], b: &[bool], mu: f64) -> DMatrix<f64> {
    let n = positions.len();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let drive: Vector2<f64> = (0..n).filter(|&j| b[i * n + j]).map(|j| positions[j] - positions[i]).sum();
        let norm = drive.norm();
        let scale = if norm >= mu { mu / norm } else { 1.0 };
        for j in (0..n).filter(|&j| b[i * n + j]) {
            a[(i, j)] = scale;
        }
    }
    a
}

/// Fixed-step simulation up to `horizon` (rounded up to a whole step).
///
/// Only structural parameters are checked here, so scenarios built with
/// [`RobotScenario::new_unchecked`] can be run.
pub fn simulate(s: &RobotScenario, horizon: f64, step: f64) -> Result<PlanarTrajectory> {
    basic_checks(s, horizon, step)?;
    let n = s.n;
    let steps = {
        let r = horizon / step;
        (if (r - r.round()).abs() < 1e-9 { r.round() } else { r.ceil() }) as usize
    };
    let activations = s.activation_times(horizon);
    let mut events: Vec<(f64, usize)> =
        activations.iter().enumerate().flat_map(|(i, ts)| ts.iter().map(move |&t| (t, i))).collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let idx = |i: usize, j: usize| i * n + j;
    let mut engage_until = vec![f64::NEG_INFINITY; n * n];
    let mut recip_until = vec![f64::NEG_INFINITY; n * n];
    // time at which i last engaged j
    let mut last_engage: Vec<Option<f64>> = vec![None; n * n];
    let mut prev_b = vec![false; n * n];
    let mut prev_cause = vec![Cause::Engage; n * n];

    let mut pos = s.x0.clone();
    let mut prev_pos = pos.clone();
    let mut times = Vec::with_capacity(steps + 1);
    let mut positions = Vec::with_capacity(steps + 1);
    let mut interactions = Vec::with_capacity(steps);
    let mut log = Vec::new();
    let mut cursor = 0;

    for m in 0..steps {
        let t = m as f64 * step;
        let t_prev = t - step;
        while cursor < events.len() && events[cursor].0 <= t + 1e-9 * step {
            let tk = events[cursor].0;
            let end = cursor + events[cursor..].iter().take_while(|e| e.0 == tk).count();
            let alpha = if m == 0 { 1.0 } else { ((tk - t_prev) / step).clamp(0.0, 1.0) };
            let snap: Vec<Vector2<f64>> = prev_pos.iter().zip(&pos).map(|(a, b)| a + (b - a) * alpha).collect();
            for &(_, i) in &events[cursor..end] {
                for j in (0..n).filter(|&j| j != i) {
                    if (snap[i] - snap[j]).norm() >= s.d1 {
                        engage_until[idx(i, j)] = tk + s.delta_min;
                        last_engage[idx(i, j)] = Some(tk);
                    }
                }
            }
            for &(_, i) in &events[cursor..end] {
                for j in (0..n).filter(|&j| j != i) {
                    if last_engage[idx(j, i)].is_some_and(|te| te >= tk - s.delta_max && te <= tk) {
                        recip_until[idx(i, j)] = tk + s.delta_min;
                    }
                }
            }
            cursor = end;
        }

        let mut b = vec![false; n * n];
        for i in 0..n {
            for j in (0..n).filter(|&j| j != i) {
                let k = idx(i, j);
                let engaged = t < engage_until[k];
                let reciprocating = t < recip_until[k] && (pos[i] - pos[j]).norm() >= s.d0;
                b[k] = engaged || reciprocating;
                if b[k] != prev_b[k] {
                    let cause = if b[k] {
                        if engaged { Cause::Engage } else { Cause::Reciprocate }
                    } else {
                        prev_cause[k]
                    };
                    log.push(InteractionEvent { t, i, j, b: u8::from(b[k]), cause });
                    prev_cause[k] = cause;
                }
            }
        }

        let velocity: Vec<Vector2<f64>> = (0..n)
            .map(|i| {
                let drive: Vector2<f64> = (0..n).filter(|&j| b[idx(i, j)]).map(|j| pos[j] - pos[i]).sum();
                sat(drive, s.mu)
            })
            .collect();
        times.push(t);
        positions.push(pos.clone());
        prev_pos.clone_from(&pos);
        for (p, v) in pos.iter_mut().zip(&velocity) {
            *p += v * step;
        }
        if pos.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::NonFinite { t: t + step });
        }
        prev_b.clone_from(&b);
        interactions.push(b);
    }
    times.push(steps as f64 * step);
    positions.push(pos);
    Ok(PlanarTrajectory { times, positions, interactions, interaction_log: log, activations, step })
}

/// Effective weight matrix at the latest sample `<= t`.
pub fn effective_weights(trajectory: &PlanarTrajectory, scenario: &RobotScenario, t: f64) -> DMatrix<f64> {
    let n = trajectory.n();
    if trajectory.interactions.is_empty() {
        return DMatrix::zeros(n, n);
    }
    let m = trajectory.times.partition_point(|&s| s <= t).saturating_sub(1).min(trajectory.interactions.len() - 1);
    weights_from(&trajectory.positions[m], &trajectory.interactions[m], scenario.mu)
}

/// Effective weights held constant over each step, as a schedule.
/// Consecutive steps with identical weights share a piece.
pub fn effective_schedule(trajectory: &PlanarTrajectory, scenario: &RobotScenario) -> Result<WeightSchedule> {
    let n = trajectory.n();
    let mut pieces: Vec<Piece> = Vec::new();
    for (m, b) in trajectory.interactions.iter().enumerate() {
        let a = weights_from(&trajectory.positions[m], b, scenario.mu);
        let (t0, t1) = (trajectory.times[m], trajectory.times[m + 1]);
        match pieces.last_mut() {
            Some(last) if last.rates == a => last.t1 = t1,
            _ => pieces.push(Piece::new(t0, t1, a)),
        }
    }
    WeightSchedule::new(n, pieces)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InstantiationReport {
    /// `min(delta_min mu / (n Delta(0)), delta_min)`.
    pub epsilon: f64,
    /// `epsilon` reduced by the numerical slack.
    pub tested_epsilon: f64,
    /// `2 delta_max`.
    pub window: f64,
    /// Support was scanned up to this time (later windows are truncated).
    pub scanned_until: f64,
    pub violations: Vec<PairActivityReport>,
    /// Steps where some `a_ij < b_ij min(mu / (n Delta(0)), 1)`.
    pub ratio_bound_violations: usize,
}

impl InstantiationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty() && self.ratio_bound_violations == 0
    }
}

/// Check pairwise reciprocity of the effective weights with the constants
/// `eps = min(delta_min mu / (n Delta(0)), delta_min)` and `T = 2 delta_max`.
/// Integrals are exact for the sample-and-hold weights; `eps` is relaxed
/// by 5% to absorb activation-to-step rounding.
pub fn check_reciprocity_instantiation(trajectory: &PlanarTrajectory, scenario: &RobotScenario) -> Result<InstantiationReport> {
    let n = trajectory.n() as f64;
    let delta0 = trajectory.diameter(0);
    let ratio = if delta0 > 0.0 { (scenario.mu / (n * delta0)).min(1.0) } else { 1.0 };
    let epsilon = scenario.delta_min * ratio;
    let tested_epsilon = epsilon * (1.0 - INSTANTIATION_SLACK);
    let window = 2.0 * scenario.delta_max;
    let t_end = *trajectory.times.last().expect("non-empty trajectory");
    let scanned_until = t_end - window;

    let mut ratio_bound_violations = 0;
    for (m, b) in trajectory.interactions.iter().enumerate() {
        let a = weights_from(&trajectory.positions[m], b, scenario.mu);
        let bad = b.iter().enumerate().any(|(k, &on)| on && a[(k / trajectory.n(), k % trajectory.n())] < ratio * (1.0 - 1e-12));
        ratio_bound_violations += usize::from(bad);
    }

    let violations = if trajectory.interactions.is_empty() || scanned_until <= trajectory.times[0] {
        Vec::new()
    } else {
        let schedule = effective_schedule(trajectory, scenario)?;
        check_pairwise(&schedule, tested_epsilon, window, scanned_until).into_iter().filter(|r| !r.is_clean()).collect()
    };
    Ok(InstantiationReport { epsilon, tested_epsilon, window, scanned_until, violations, ratio_bound_violations })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RendezvousReport {
    /// Every robot stays within [`CAUCHY_TOL`] of its final position over the tail.
    pub limit_exists: bool,
    /// `max_i max_{s in tail} |x_i(s) - x_i(t_end)|`.
    pub tail_motion: f64,
    pub initial_diameter: f64,
    pub final_diameter: f64,
    /// `d1 + 2 mu step`.
    pub threshold: f64,
    pub pass: bool,
}

pub fn check_rendezvous(trajectory: &PlanarTrajectory, scenario: &RobotScenario, tail_fraction: f64) -> Result<RendezvousReport> {
    let (t0, t_end) = match (trajectory.times.first(), trajectory.times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::TrajectoryTooShort("no samples".into())),
    };
    if t_end - t0 < MIN_HORIZON_FACTOR * scenario.delta_max {
        return Err(Error::TrajectoryTooShort(format!(
            "span {} is below {MIN_HORIZON_FACTOR} delta_max = {}",
            t_end - t0,
            MIN_HORIZON_FACTOR * scenario.delta_max
        )));
    }
    let cut = t_end - tail_fraction * (t_end - t0);
    let k = trajectory.times.partition_point(|&t| t < cut);
    if trajectory.times.len() - k < crate::clustering::MIN_TAIL_SAMPLES {
        return Err(Error::TrajectoryTooShort("tail window has fewer than 10 samples".into()));
    }
    let last = trajectory.positions.last().expect("non-empty");
    let tail_motion = trajectory.positions[k..]
        .iter()
        .flat_map(|ps| ps.iter().zip(last).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max);
    let final_diameter = trajectory.final_diameter();
    let threshold = scenario.d1 + 2.0 * scenario.mu * trajectory.step;
    Ok(RendezvousReport {
        limit_exists: tail_motion <= CAUCHY_TOL,
        tail_motion,
        initial_diameter: trajectory.diameter(0),
        final_diameter,
        threshold,
        pass: final_diameter <= threshold,
    })
}
