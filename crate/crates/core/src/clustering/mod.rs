//! Persistent-interaction graph, its strongly connected components, and
//! limit analysis of trajectories.
//!
//! Whether `int_0^inf a_ij = inf` cannot be decided from finite data. The
//! heuristic used here calls edge `j -> i` persistent when the increment
//! `int_{H/2}^{H} a_ij` over the last doubling of the horizon is at least
//! `theta`: a `1/p` weight adds about `ln 2` per doubling, a `1/p^2` weight
//! adds `O(1/H)`. Declared hints on the schedule take precedence.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use crate::dynamics::{transition_matrix_extended, Trajectory, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::reciprocity::IntervalPartition;
use crate::schedules::{Edge, Persistence, WeightSchedule};

pub const DEFAULT_THETA: f64 = 0.05;
/// Fraction of the time span used as the convergence tail.
pub const TAIL_FRACTION: f64 = 0.1;
pub const MIN_TAIL_SAMPLES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evidence {
    Hint,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeEvidence {
    pub edge: Edge,
    /// Mass accumulated from the start up to each horizon.
    pub cumulative: Vec<f64>,
    /// Mass over the last doubling `[H/2, H]`.
    pub increment: f64,
    pub persistent: bool,
    pub decided_by: Evidence,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersistenceGraph {
    pub n: usize,
    /// Persistent edges `from -> to`.
    pub edges: BTreeSet<Edge>,
    /// Strongly connected components, members ascending, ordered by smallest member.
    pub components: Vec<Vec<usize>>,
    pub horizons: Vec<f64>,
    pub theta: f64,
    /// One record per edge with positive mass anywhere up to the last horizon.
    pub evidence: Vec<EdgeEvidence>,
}

impl PersistenceGraph {
    /// Graph with the given edges and no evidence.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = Edge>) -> Self {
        let edges: BTreeSet<Edge> = edges.into_iter().collect();
        let components = scc(n, &edges);
        PersistenceGraph { n, edges, components, horizons: Vec::new(), theta: 0.0, evidence: Vec::new() }
    }

    /// Index of the component containing each agent.
    pub fn component_of(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for (c, members) in self.components.iter().enumerate() {
            for &i in members {
                out[i] = c;
            }
        }
        out
    }
}

/// `[H/2^(count-1), ..., H/2, H]`.
pub fn doubling_horizons(last: f64, count: usize) -> Vec<f64> {
    (0..count).rev().map(|k| last / 2f64.powi(k as i32)).collect()
}

fn check_horizons(schedule: &WeightSchedule, horizons: &[f64]) -> Result<f64> {
    let last = *horizons.last().ok_or_else(|| Error::InvalidArgument("no horizons given".into()))?;
    if horizons.windows(2).any(|w| w[0] >= w[1]) || horizons[0] <= 0.0 {
        return Err(Error::InvalidArgument("horizons must be positive and increasing".into()));
    }
    if last > schedule.horizon() {
        return Err(Error::OutOfRange { t: last, start: schedule.start(), end: schedule.horizon() });
    }
    Ok(last)
}

/// Classify every edge by the doubling-increment test, letting hints override.
pub fn classify_persistence(schedule: &WeightSchedule, horizons: &[f64], theta: f64) -> Result<PersistenceGraph> {
    let last = check_horizons(schedule, horizons)?;
    let n = schedule.n();
    let origin = schedule.start().min(0.0);
    let mut evidence = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let edge = Edge::of_weight(i, j);
            let cumulative: Vec<f64> = horizons.iter().map(|&h| schedule.mass(i, j, origin, h)).collect();
            let increment = schedule.mass(i, j, last / 2.0, last);
            let (persistent, decided_by) = match schedule.hint().get(&edge) {
                Some(Persistence::Persistent) => (true, Evidence::Hint),
                Some(Persistence::Transient) => (false, Evidence::Hint),
                _ => (increment >= theta, Evidence::Heuristic),
            };
            if persistent || cumulative.last().is_some_and(|&c| c > 0.0) {
                evidence.push(EdgeEvidence { edge, cumulative, increment, persistent, decided_by });
            }
        }
    }
    let edges: BTreeSet<Edge> = evidence.iter().filter(|e| e.persistent).map(|e| e.edge).collect();
    let components = scc(n, &edges);
    let graph = PersistenceGraph { n, edges, components, horizons: horizons.to_vec(), theta, evidence };
    if let Some((a, b)) = reciprocal_path_check(&graph).witness {
        log::warn!("persistent graph is not path-reciprocal: {} reaches {} but not back", a + 1, b + 1);
    }
    Ok(graph)
}

/// Same test on the sampled weights `phi_ij(p)` of `partition`: interval
/// `p` counts towards horizon `H` when it ends by `H`, and towards the
/// increment when it also starts at or after `H/2`. No hints are used.
pub fn classify_sampled_persistence(
    schedule: &WeightSchedule,
    partition: &IntervalPartition,
    horizons: &[f64],
    theta: f64,
) -> Result<PersistenceGraph> {
    let last = check_horizons(schedule, horizons)?;
    let n = schedule.n();
    let mut phis = Vec::new();
    for (u, v) in partition.intervals().filter(|&(_, v)| v <= last) {
        phis.push((u, v, transition_matrix_extended(schedule, u, v, DEFAULT_TOL)?.phi));
    }
    let mut evidence = Vec::new();
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let cumulative: Vec<f64> = horizons
                .iter()
                .map(|&h| phis.iter().filter(|(_, v, _)| *v <= h).map(|(_, _, phi)| phi[(i, j)]).sum())
                .collect();
            let increment: f64 = phis.iter().filter(|(u, _, _)| *u >= last / 2.0).map(|(_, _, phi)| phi[(i, j)]).sum();
            let persistent = increment >= theta;
            if persistent || cumulative.last().is_some_and(|&c| c > 0.0) {
                evidence.push(EdgeEvidence { edge: Edge::of_weight(i, j), cumulative, increment, persistent, decided_by: Evidence::Heuristic });
            }
        }
    }
    let edges: BTreeSet<Edge> = evidence.iter().filter(|e| e.persistent).map(|e| e.edge).collect();
    let components = scc(n, &edges);
    Ok(PersistenceGraph { n, edges, components, horizons: horizons.to_vec(), theta, evidence })
}

/// Strongly connected components of `({0..n}, edges)`, members ascending,
/// components ordered by smallest member.
pub fn scc(n: usize, edges: &BTreeSet<Edge>) -> Vec<Vec<usize>> {
    let mut g = DiGraph::<usize, ()>::with_capacity(n, edges.len());
    let nodes: Vec<_> = (0..n).map(|i| g.add_node(i)).collect();
    for e in edges {
        g.add_edge(nodes[e.from], nodes[e.to], ());
    }
    let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut m: Vec<usize> = c.into_iter().map(|ix| g[ix]).collect();
            m.sort_unstable();
            m
        })
        .collect();
    comps.sort_unstable_by_key(|c| c[0]);
    comps
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathReciprocity {
    pub holds: bool,
    /// `(a, b)` with a path `a -> b` and none back.
    pub witness: Option<(usize, usize)>,
}

/// Whether reachability is symmetric: `a` reaches `b` iff `b` reaches `a`.
pub fn reciprocal_path_check(graph: &PersistenceGraph) -> PathReciprocity {
    let n = graph.n;
    let mut adj = vec![Vec::new(); n];
    for e in &graph.edges {
        adj[e.from].push(e.to);
    }
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            let mut stack = vec![s];
            seen[s] = true;
            while let Some(u) = stack.pop() {
                for &v in &adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            seen
        })
        .collect();
    let witness = (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).find(|&(a, b)| reach[a][b] && !reach[b][a]);
    PathReciprocity { holds: witness.is_none(), witness }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterGap {
    pub between: (usize, usize),
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LimitReport {
    pub components: Vec<Vec<usize>>,
    /// Last sample of each agent.
    pub limits: Vec<f64>,
    /// `max - min` of each agent over the tail window.
    pub oscillation: Vec<f64>,
    pub converged: Vec<bool>,
    /// Largest difference of limits within each component.
    pub spreads: Vec<f64>,
    /// Mean limit of each component.
    pub cluster_limits: Vec<f64>,
    /// `|cluster_limits[a] - cluster_limits[b]|` for every pair of components.
    pub gaps: Vec<ClusterGap>,
    pub tail_start: f64,
    pub tol_conv: f64,
    pub tol_cluster: f64,
}

impl LimitReport {
    /// Every spread is within `tol_cluster`.
    pub fn passed(&self) -> bool {
        self.spreads.iter().all(|&s| s <= self.tol_cluster)
    }

    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.gaps.iter().map(|g| g.gap).reduce(f64::min)
    }
}

/// Index of the first sample in the convergence tail (last 10% of the time
/// span, at least 10 samples).
pub fn tail_start(times: &[f64]) -> Result<usize> {
    let (first, last) = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::TrajectoryTooShort("no samples".into())),
    };
    let cut = last - TAIL_FRACTION * (last - first);
    let k = times.partition_point(|&t| t < cut);
    if times.len() - k < MIN_TAIL_SAMPLES {
        return Err(Error::TrajectoryTooShort(format!(
            "{} samples in the tail window [{cut}, {last}], need {MIN_TAIL_SAMPLES}",
            times.len() - k
        )));
    }
    Ok(k)
}

pub fn analyze_limits(trajectory: &Trajectory, clusters: &[Vec<usize>], tol_conv: f64, tol_cluster: f64) -> Result<LimitReport> {
    let k = tail_start(&trajectory.times)?;
    let n = trajectory.n();
    if clusters.iter().flatten().any(|&i| i >= n) {
        return Err(Error::InvalidArgument("cluster member out of range".into()));
    }
    let tail = &trajectory.states[k..];
    let (_, last) = trajectory.last().expect("tail is non-empty");
    let limits: Vec<f64> = last.iter().copied().collect();
    let oscillation: Vec<f64> = (0..n)
        .map(|i| {
            let (lo, hi) = tail.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[i]), hi.max(s[i])));
            hi - lo
        })
        .collect();
    let converged = oscillation.iter().map(|&o| o <= tol_conv).collect();
    let spreads = clusters
        .iter()
        .map(|c| {
            let vals = c.iter().map(|&i| limits[i]);
            vals.clone().fold(f64::NEG_INFINITY, f64::max) - vals.fold(f64::INFINITY, f64::min)
        })
        .collect();
    let cluster_limits: Vec<f64> =
        clusters.iter().map(|c| c.iter().map(|&i| limits[i]).sum::<f64>() / c.len() as f64).collect();
    let mut gaps = Vec::new();
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            gaps.push(ClusterGap { between: (a, b), gap: (cluster_limits[a] - cluster_limits[b]).abs() });
        }
    }
    Ok(LimitReport {
        components: clusters.to_vec(),
        limits,
        oscillation,
        converged,
        spreads,
        cluster_limits,
        gaps,
        tail_start: trajectory.times[k],
        tol_conv,
        tol_cluster,
    })
}

/// Cluster report written by the CLI.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterReport {
    pub components: Vec<Vec<usize>>,
    pub limits: Vec<f64>,
    pub spreads: Vec<f64>,
    pub gaps: Vec<ClusterGap>,
    pub converged: Vec<bool>,
    pub persistent_edges: Vec<Edge>,
    pub path_reciprocal: bool,
    pub passed: bool,
    pub evidence: BTreeMap<String, f64>,
}

impl ClusterReport {
    pub fn new(graph: &PersistenceGraph, limits: &LimitReport) -> Self {
        let evidence = graph
            .evidence
            .iter()
            .map(|e| (format!("{}->{}", e.edge.from, e.edge.to), e.increment))
            .collect();
        ClusterReport {
            components: graph.components.clone(),
            limits: limits.limits.clone(),
            spreads: limits.spreads.clone(),
            gaps: limits.gaps.clone(),
            converged: limits.converged.clone(),
            persistent_edges: graph.edges.iter().copied().collect(),
            path_reciprocal: reciprocal_path_check(graph).holds,
            passed: limits.passed(),
            evidence,
        }
    }
}
