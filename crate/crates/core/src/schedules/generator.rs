use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{Edge, Persistence, Piece, PieceEntry, WeightSchedule};
use crate::error::{Error, Result};

/// Amplitudes `rho_p` of the three-agent oscillator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum RhoSequence {
    /// `rho_p = intercept + slope * p`
    Affine { intercept: f64, slope: f64 },
    /// Explicit values; the last one repeats.
    Values { values: Vec<f64> },
}

impl RhoSequence {
    pub fn get(&self, p: usize) -> f64 {
        match self {
            RhoSequence::Affine { intercept, slope } => intercept + slope * p as f64,
            RhoSequence::Values { values } => {
                values.get(p).or_else(|| values.last()).copied().unwrap_or(0.0)
            }
        }
    }
}

/// Closed-form weight families that can be materialized over any horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleGenerator {
    /// Two 2-agent subsystems `{2,3}` and `{1,4}` with alternating `1/p`
    /// attraction, weakly coupled through `1/p^2` weights. Starts at t = 2.
    Example1,
    /// Chain `1-2-3-4` attracted upwards on `[2p, 2p+1)` and downwards on
    /// `[2p+1, 2p+2)` with weights `1/p^2`, `1/p`, `1`. Starts at t = 2.
    Example2,
    /// Agent 2 alternately pulled by agents 1 and 3 with amplitude `rho_p`
    /// in four unit phases per cycle `[4p, 4p+4)`.
    Oscillator { rho: RhoSequence },
    /// One period of sparse pieces over `[0, period)`, repeated forever.
    Custom { n: usize, period: f64, pieces: Vec<PieceEntry> },
}

impl ScheduleGenerator {
    /// Oscillator with `rho_p = p + 3`.
    pub fn oscillator_default() -> Self {
        ScheduleGenerator::Oscillator { rho: RhoSequence::Affine { intercept: 3.0, slope: 1.0 } }
    }

    pub fn n(&self) -> usize {
        match self {
            ScheduleGenerator::Example1 | ScheduleGenerator::Example2 => 4,
            ScheduleGenerator::Oscillator { .. } => 3,
            ScheduleGenerator::Custom { n, .. } => *n,
        }
    }

    /// Rate matrix at `t >= 0` in closed form.
    pub fn rates_at(&self, t: f64) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        if t < 0.0 {
            return a;
        }
        match self {
            ScheduleGenerator::Example1 | ScheduleGenerator::Example2 if t < 2.0 => {}
            ScheduleGenerator::Example1 => {
                let p = (t / 2.0).floor();
                let first_half = t - 2.0 * p < 1.0;
                let weak = 1.0 / (p * p);
                for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
                    a[(i, j)] = weak;
                }
                let strong = 1.0 / p;
                if first_half {
                    a[(2, 1)] = strong;
                    a[(3, 0)] = strong;
                } else {
                    a[(1, 2)] = strong;
                    a[(0, 3)] = strong;
                }
            }
            ScheduleGenerator::Example2 => {
                let p = (t / 2.0).floor();
                let w = [1.0 / (p * p), 1.0 / p, 1.0];
                let first_half = t - 2.0 * p < 1.0;
                for (k, &wk) in w.iter().enumerate() {
                    if first_half {
                        a[(k, k + 1)] = wk;
                    } else {
                        a[(k + 1, k)] = wk;
                    }
                }
            }
            ScheduleGenerator::Oscillator { rho } => {
                let p = (t / 4.0).floor();
                let phase = ((t - 4.0 * p).floor() as usize).min(3);
                let r = rho.get(p as usize);
                let (i, j) = [(1, 0), (0, 1), (1, 2), (2, 1)][phase];
                a[(i, j)] = r;
            }
            ScheduleGenerator::Custom { period, pieces, .. } => {
                let tau = t.rem_euclid(*period);
                if let Some(piece) = pieces.iter().find(|p| p.t0 <= tau && tau < p.t1) {
                    for &(i, j, r) in &piece.entries {
                        if i != j {
                            a[(i, j)] = r;
                        }
                    }
                }
            }
        }
        a
    }

    /// Next piece boundary strictly after `t`.
    fn next_boundary(&self, t: f64) -> f64 {
        match self {
            ScheduleGenerator::Example1 | ScheduleGenerator::Example2 if t < 2.0 => 2.0,
            ScheduleGenerator::Example1
            | ScheduleGenerator::Example2
            | ScheduleGenerator::Oscillator { .. } => t.floor() + 1.0,
            ScheduleGenerator::Custom { period, pieces, .. } => {
                let k = (t / period).floor();
                let base = k * period;
                pieces
                    .iter()
                    .map(|p| base + p.t1)
                    .find(|&b| b > t)
                    .unwrap_or(base + period)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ScheduleGenerator::Oscillator { rho } => {
                if let RhoSequence::Values { values } = rho {
                    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        return Err(Error::InvalidSchedule("rho values must be finite and >= 0".into()));
                    }
                }
                if let RhoSequence::Affine { intercept, slope } = rho {
                    if !(intercept.is_finite() && slope.is_finite() && *intercept >= 0.0 && *slope >= 0.0) {
                        return Err(Error::InvalidSchedule("rho must be non-negative".into()));
                    }
                }
                Ok(())
            }
            ScheduleGenerator::Custom { n, period, pieces } => {
                if !(period.is_finite() && *period > 0.0) {
                    return Err(Error::InvalidSchedule(format!("bad period {period}")));
                }
                if pieces.is_empty() || pieces[0].t0 != 0.0 || pieces[pieces.len() - 1].t1 != *period {
                    return Err(Error::InvalidSchedule("custom pieces must tile [0, period)".into()));
                }
                // piece contiguity and rate checks are delegated to WeightSchedule::new
                let rebuilt: Result<Vec<Piece>> = pieces.iter().map(|p| p.to_piece(*n)).collect();
                WeightSchedule::new(*n, rebuilt?).map(|_| ())
            }
            _ => Ok(()),
        }
    }

    /// Piecewise-constant schedule on `[0, horizon]`; the last piece is
    /// truncated at the horizon.
    pub fn materialize(&self, horizon: f64) -> Result<WeightSchedule> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidArgument(format!("horizon must be positive, got {horizon}")));
        }
        self.validate()?;
        let mut pieces = Vec::new();
        let mut t = 0.0;
        while t < horizon {
            let next = self.next_boundary(t).min(horizon);
            pieces.push(Piece::new(t, next, self.rates_at(t)));
            t = next;
        }
        let schedule = WeightSchedule::new(self.n(), pieces)?.with_generator(self.clone());
        Ok(match self.declared_hint() {
            Some(hint) => schedule.with_hint(hint),
            None => schedule,
        })
    }

    /// Persistence of each interacting edge, where it is known in closed form.
    pub fn declared_hint(&self) -> Option<BTreeMap<Edge, Persistence>> {
        type Edges = &'static [(usize, usize)];
        let (persistent, transient): (Edges, Edges) = match self {
            ScheduleGenerator::Example1 => (
                &[(1, 2), (2, 1), (0, 3), (3, 0)],
                &[(0, 1), (1, 0), (2, 3), (3, 2)],
            ),
            ScheduleGenerator::Example2 => (&[(1, 2), (2, 1), (2, 3), (3, 2)], &[(0, 1), (1, 0)]),
            _ => return None,
        };
        let mut hint = BTreeMap::new();
        for &(from, to) in persistent {
            hint.insert(Edge::new(from, to), Persistence::Persistent);
        }
        for &(from, to) in transient {
            hint.insert(Edge::new(from, to), Persistence::Transient);
        }
        Some(hint)
    }
}
