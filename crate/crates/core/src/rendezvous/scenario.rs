use std::path::Path;

use nalgebra::Vector2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stream used for box-sampled initial positions; robot `i` draws its
/// activations from stream `i`.
const POSITION_STREAM: u64 = u64::MAX;
/// Slack on the activation-gap bounds of explicit plans.
const GAP_SLACK: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationPlan {
    /// Gaps uniform in `[delta_min, delta_max]`, first activation uniform
    /// in `[0, delta_max]`, drawn from the scenario seed.
    Seeded,
    /// Per-robot increasing activation times.
    Explicit { times: Vec<Vec<f64>> },
}

/// Planar robots with saturated consensus and intermittent sensing.
#[derive(Clone, Debug, PartialEq)]
pub struct RobotScenario {
    pub n: usize,
    /// Speed cap.
    pub mu: f64,
    /// Blind radius.
    pub d0: f64,
    /// Engage radius.
    pub d1: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub seed: u64,
    pub x0: Vec<Vector2<f64>>,
    pub activations: ActivationPlan,
}

impl RobotScenario {
    /// Validated constructor; rejects scenarios violating `4 delta_max mu <= d1 - d0`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: f64,
        d0: f64,
        d1: f64,
        delta_min: f64,
        delta_max: f64,
        seed: u64,
        x0: Vec<Vector2<f64>>,
        activations: ActivationPlan,
    ) -> Result<Self> {
        let s = Self::new_unchecked(mu, d0, d1, delta_min, delta_max, seed, x0, activations);
        s.validate()?;
        Ok(s)
    }

    /// No validation at all; for adversarial experiments.
    #[allow(clippy::too_many_arguments)]
    pub fn new_unchecked(
        mu: f64,
        d0: f64,
        d1: f64,
        delta_min: f64,
        delta_max: f64,
        seed: u64,
        x0: Vec<Vector2<f64>>,
        activations: ActivationPlan,
    ) -> Self {
        RobotScenario { n: x0.len(), mu, d0, d1, delta_min, delta_max, seed, x0, activations }
    }

    /// The 8-robot scenario: `mu = 1`, `d0 = 1`, `d1 = 9`,
    /// `delta_min = 0.5`, `delta_max = 2`, positions uniform in a 100 x 100 box.
    pub fn robots8(seed: u64) -> Self {
        let x0 = box_positions(8, 100.0, seed);
        Self::new(1.0, 1.0, 9.0, 0.5, 2.0, seed, x0, ActivationPlan::Seeded).expect("builtin scenario is feasible")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InfeasibleScenario(m));
        if self.n < 2 || self.x0.len() != self.n {
            return bad(format!("need n >= 2 positions, got {} for n = {}", self.x0.len(), self.n));
        }
        if self.x0.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return bad("non-finite initial position".into());
        }
        if !(self.mu > 0.0) {
            return bad(format!("mu = {} must be positive", self.mu));
        }
        if !(self.d0 > 0.0 && self.d1 > self.d0) {
            return bad(format!("need d1 > d0 > 0, got d0 = {}, d1 = {}", self.d0, self.d1));
        }
        if !(self.delta_min > 0.0 && self.delta_max > self.delta_min) {
            return bad(format!("need delta_max > delta_min > 0, got {}, {}", self.delta_min, self.delta_max));
        }
        if 4.0 * self.delta_max * self.mu > self.d1 - self.d0 {
            return bad(format!(
                "4 delta_max mu = {} exceeds d1 - d0 = {}",
                4.0 * self.delta_max * self.mu,
                self.d1 - self.d0
            ));
        }
        if let ActivationPlan::Explicit { times } = &self.activations {
            if times.len() != self.n {
                return bad(format!("{} activation lists for {} robots", times.len(), self.n));
            }
            for (i, ts) in times.iter().enumerate() {
                if ts.first().is_some_and(|&t| t < 0.0 || t > self.delta_max + GAP_SLACK) {
                    return bad(format!("robot {}: first activation outside [0, delta_max]", i + 1));
                }
                for w in ts.windows(2) {
                    let gap = w[1] - w[0];
                    if gap < self.delta_min - GAP_SLACK || gap > self.delta_max + GAP_SLACK {
                        return bad(format!("robot {}: activation gap {gap} outside [delta_min, delta_max]", i + 1));
                    }
                }
            }
        }
        Ok(())
    }

    /// Activation times of every robot in `[0, horizon)`.
    pub fn activation_times(&self, horizon: f64) -> Vec<Vec<f64>> {
        match &self.activations {
            ActivationPlan::Explicit { times } => {
                times.iter().map(|ts| ts.iter().copied().filter(|&t| t < horizon).collect()).collect()
            }
            ActivationPlan::Seeded => (0..self.n)
                .map(|i| {
                    let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                    rng.set_stream(i as u64);
                    let mut out = Vec::new();
                    let mut t = rng.random_range(0.0..=self.delta_max);
                    while t < horizon {
                        out.push(t);
                        t += rng.random_range(self.delta_min..=self.delta_max);
                    }
                    out
                })
                .collect(),
        }
    }

    /// Largest pairwise distance of the initial positions.
    pub fn initial_diameter(&self) -> f64 {
        diameter(&self.x0)
    }
}

pub(crate) fn diameter(points: &[Vector2<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (k, a) in points.iter().enumerate() {
        for b in &points[k + 1..] {
            d = d.max((a - b).norm());
        }
    }
    d
}

/// `n` points uniform in `[0, side]^2` from the position stream of `seed`.
pub fn box_positions(n: usize, side: f64, seed: u64) -> Vec<Vector2<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(POSITION_STREAM);
    (0..n).map(|_| Vector2::new(rng.random_range(0.0..=side), rng.random_range(0.0..=side))).collect()
}

/// Scenario configuration file. Either `x0` or `box` gives the initial
/// positions; `activations` defaults to seeded draws.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub n: usize,
    pub mu: f64,
    pub d0: f64,
    pub d1: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<[f64; 2]>>,
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_side: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub activations: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
}

impl ScenarioFile {
    pub fn from_scenario(s: &RobotScenario, horizon: Option<f64>, step: Option<f64>) -> Self {
        ScenarioFile {
            n: s.n,
            mu: s.mu,
            d0: s.d0,
            d1: s.d1,
            delta_min: s.delta_min,
            delta_max: s.delta_max,
            seed: s.seed,
            x0: Some(s.x0.iter().map(|p| [p.x, p.y]).collect()),
            box_side: None,
            activations: match &s.activations {
                ActivationPlan::Seeded => None,
                ActivationPlan::Explicit { times } => Some(times.clone()),
            },
            horizon,
            step,
        }
    }

    /// Resolve positions and validate.
    pub fn scenario(&self) -> Result<RobotScenario> {
        let x0 = match (&self.x0, self.box_side) {
            (Some(pts), _) => pts.iter().map(|p| Vector2::new(p[0], p[1])).collect(),
            (None, Some(side)) if side > 0.0 => box_positions(self.n, side, self.seed),
            _ => return Err(Error::InfeasibleScenario("scenario needs x0 or a positive box side".into())),
        };
        let activations = match &self.activations {
            Some(times) => ActivationPlan::Explicit { times: times.clone() },
            None => ActivationPlan::Seeded,
        };
        let s = RobotScenario::new_unchecked(self.mu, self.d0, self.d1, self.delta_min, self.delta_max, self.seed, x0, activations);
        if s.n != self.n {
            return Err(Error::InfeasibleScenario(format!("x0 has {} points, n = {}", s.n, self.n)));
        }
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}
