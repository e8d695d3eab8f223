//! Piecewise-constant interaction weights `a_ij(t)`.
//!
//! A [`WeightSchedule`] is an ordered list of contiguous half-open pieces
//! `[t0, t1)`, each carrying an `n x n` non-negative rate matrix. Entry
//! `(i, j)` is the weight with which agent `i` is attracted by agent `j`,
//! i.e. the directed edge `j -> i`. Diagonal entries are always stored as 0.
//!
//! Only piecewise-constant weights are supported; general measurable
//! weights have to be approximated by the caller before materialization.

mod file;
mod generator;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{HintEntry, PieceEntry, ScheduleFile};
pub use generator::{RhoSequence, ScheduleGenerator};

/// Directed interaction edge `from -> to`; present when `a_{to,from}` is positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
}

impl Edge {
    pub fn new(from: usize, to: usize) -> Self {
        Edge { from, to }
    }

    /// The edge carried by weight `a_ij` (agent `i` influenced by agent `j`).
    pub fn of_weight(i: usize, j: usize) -> Self {
        Edge { from: j, to: i }
    }

    /// `(i, j)` such that this edge is carried by `a_ij`.
    pub fn weight_index(self) -> (usize, usize) {
        (self.to, self.from)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Persistence {
    Persistent,
    Transient,
    Unknown,
}

/// Constant rates over `[t0, t1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub rates: DMatrix<f64>,
}

impl Piece {
    pub fn new(t0: f64, t1: f64, rates: DMatrix<f64>) -> Self {
        Piece { t0, t1, rates }
    }

    pub fn zero(n: usize, t0: f64, t1: f64) -> Self {
        Piece { t0, t1, rates: DMatrix::zeros(n, n) }
    }

    pub fn len(&self) -> f64 {
        self.t1 - self.t0
    }

    pub fn is_zero(&self) -> bool {
        self.rates.iter().all(|&r| r == 0.0)
    }
}

#[derive(Clone, Debug)]
pub struct WeightSchedule {
    n: usize,
    pieces: Vec<Piece>,
    hint: BTreeMap<Edge, Persistence>,
    generator: Option<ScheduleGenerator>,
    /// `cumulative[k]` = integral of the rates from `start` to `pieces[k].t0`.
    cumulative: Vec<DMatrix<f64>>,
}

impl PartialEq for WeightSchedule {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.pieces == other.pieces
            && self.hint == other.hint
            && self.generator == other.generator
    }
}

impl WeightSchedule {
    pub fn new(n: usize, mut pieces: Vec<Piece>) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidSchedule(format!("need at least 2 agents, got {n}")));
        }
        if pieces.is_empty() {
            return Err(Error::InvalidSchedule("no pieces".into()));
        }
        for (k, piece) in pieces.iter_mut().enumerate() {
            if !(piece.t0.is_finite() && piece.t1.is_finite() && piece.t0 < piece.t1) {
                return Err(Error::InvalidSchedule(format!(
                    "piece {k} has bad bounds [{}, {})",
                    piece.t0, piece.t1
                )));
            }
            if piece.rates.shape() != (n, n) {
                return Err(Error::InvalidSchedule(format!(
                    "piece {k} has shape {:?}, expected ({n}, {n})",
                    piece.rates.shape()
                )));
            }
            if let Some(bad) = piece.rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
                return Err(Error::InvalidSchedule(format!("piece {k} has rate {bad}")));
            }
            piece.rates.fill_diagonal(0.0);
        }
        for (k, w) in pieces.windows(2).enumerate() {
            if w[0].t1 != w[1].t0 {
                return Err(Error::InvalidSchedule(format!(
                    "pieces {k} and {} are not contiguous ({} != {})",
                    k + 1,
                    w[0].t1,
                    w[1].t0
                )));
            }
        }
        let mut cumulative = Vec::with_capacity(pieces.len() + 1);
        let mut acc = DMatrix::zeros(n, n);
        cumulative.push(acc.clone());
        for piece in &pieces {
            acc += &piece.rates * piece.len();
            cumulative.push(acc.clone());
        }
        Ok(WeightSchedule { n, pieces, hint: BTreeMap::new(), generator: None, cumulative })
    }

    /// The all-zero schedule on `[0, horizon]`.
    pub fn zero(n: usize, horizon: f64) -> Result<Self> {
        Self::new(n, vec![Piece::zero(n, 0.0, horizon)])
    }

    /// Constant rates on `[0, horizon]`.
    pub fn constant(rates: DMatrix<f64>, horizon: f64) -> Result<Self> {
        let n = rates.nrows();
        Self::new(n, vec![Piece::new(0.0, horizon, rates)])
    }

    pub fn with_hint(mut self, hint: BTreeMap<Edge, Persistence>) -> Self {
        self.hint = hint;
        self
    }

    pub fn with_generator(mut self, generator: ScheduleGenerator) -> Self {
        self.generator = Some(generator);
        self
    }

    pub fn without_hint(mut self) -> Self {
        self.hint.clear();
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn start(&self) -> f64 {
        self.pieces[0].t0
    }

    pub fn horizon(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].t1
    }

    pub fn hint(&self) -> &BTreeMap<Edge, Persistence> {
        &self.hint
    }

    pub fn generator(&self) -> Option<&ScheduleGenerator> {
        self.generator.as_ref()
    }

    /// Piece boundaries, including start and horizon.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.pieces.iter().map(|p| p.t0).collect();
        out.push(self.horizon());
        out
    }

    /// Restriction to `[t0, t1]`, keeping hints and generator.
    pub fn restrict(&self, t0: f64, t1: f64) -> Result<Self> {
        self.check_interval(t0, t1)?;
        if t0 == t1 {
            return Err(Error::InvalidArgument("empty restriction".into()));
        }
        let pieces = self
            .pieces
            .iter()
            .filter(|p| p.t1 > t0 && p.t0 < t1)
            .map(|p| Piece::new(p.t0.max(t0), p.t1.min(t1), p.rates.clone()))
            .collect();
        let mut out = Self::new(self.n, pieces)?;
        out.hint = self.hint.clone();
        out.generator = self.generator.clone();
        Ok(out)
    }

    fn index_at(&self, t: f64) -> Option<usize> {
        if t < self.start() || t > self.horizon() {
            return None;
        }
        let k = self.pieces.partition_point(|p| p.t1 <= t);
        Some(k.min(self.pieces.len() - 1))
    }

    /// Rate matrix at time `t`. Beyond the horizon the generator (if any)
    /// is evaluated in closed form.
    pub fn eval(&self, t: f64) -> Result<DMatrix<f64>> {
        if let Some(k) = self.index_at(t) {
            return Ok(self.pieces[k].rates.clone());
        }
        match &self.generator {
            Some(g) if t > self.horizon() => Ok(g.rates_at(t)),
            _ => Err(self.out_of_range(t)),
        }
    }

    pub fn rate(&self, i: usize, j: usize, t: f64) -> Result<f64> {
        Ok(self.eval(t)?[(i, j)])
    }

    fn out_of_range(&self, t: f64) -> Error {
        Error::OutOfRange { t, start: self.start(), end: self.horizon() }
    }

    fn check_interval(&self, t0: f64, t1: f64) -> Result<()> {
        if !(t0 <= t1) {
            return Err(Error::InvalidArgument(format!("interval [{t0}, {t1}] is reversed")));
        }
        if t0 < self.start() {
            return Err(self.out_of_range(t0));
        }
        if t1 > self.horizon() {
            return Err(self.out_of_range(t1));
        }
        Ok(())
    }

    fn overlapping(&self, t0: f64, t1: f64) -> impl Iterator<Item = (&Piece, f64)> {
        let first = self.pieces.partition_point(|p| p.t1 <= t0);
        self.pieces[first..]
            .iter()
            .take_while(move |p| p.t0 < t1)
            .map(move |p| (p, p.t1.min(t1) - p.t0.max(t0)))
            .filter(|(_, overlap)| *overlap > 0.0)
    }

    /// Integral of `a_ij` over `[t0, t1]`: rate times overlap, summed over
    /// pieces in increasing time order.
    pub fn integral_weight(&self, i: usize, j: usize, t0: f64, t1: f64) -> Result<f64> {
        self.check_interval(t0, t1)?;
        Ok(self.overlapping(t0, t1).map(|(p, h)| p.rates[(i, j)] * h).sum())
    }

    /// Same integral in exact rational arithmetic (every `f64` is a dyadic
    /// rational, so no rounding happens anywhere).
    pub fn integral_weight_exact(&self, i: usize, j: usize, t0: f64, t1: f64) -> Result<BigRational> {
        self.check_interval(t0, t1)?;
        let exact = |x: f64| BigRational::from_float(x).expect("finite value");
        let mut acc = BigRational::zero();
        for p in self.pieces.iter().filter(|p| p.t1 > t0 && p.t0 < t1) {
            let lo = exact(p.t0.max(t0));
            let hi = exact(p.t1.min(t1));
            acc += exact(p.rates[(i, j)]) * (hi - lo);
        }
        Ok(acc)
    }

    /// Cumulative integral of all rates from `start` to `t`, with the
    /// schedule treated as zero outside `[start, horizon]`.
    fn cumulative_at(&self, t: f64) -> DMatrix<f64> {
        if t <= self.start() {
            return DMatrix::zeros(self.n, self.n);
        }
        if t >= self.horizon() {
            return self.cumulative[self.pieces.len()].clone();
        }
        let k = self.pieces.partition_point(|p| p.t1 <= t);
        let p = &self.pieces[k];
        &self.cumulative[k] + &p.rates * (t - p.t0)
    }

    fn cumulative_entry(&self, i: usize, j: usize, t: f64) -> f64 {
        if t <= self.start() {
            return 0.0;
        }
        let last = self.pieces.len();
        if t >= self.horizon() {
            return self.cumulative[last][(i, j)];
        }
        let k = self.pieces.partition_point(|p| p.t1 <= t);
        let p = &self.pieces[k];
        self.cumulative[k][(i, j)] + p.rates[(i, j)] * (t - p.t0)
    }

    /// Integral of `a_ij` over `[u, v]` with zero extension outside the
    /// materialized range. Uses prefix sums, so it is `O(log pieces)`.
    pub fn mass(&self, i: usize, j: usize, u: f64, v: f64) -> f64 {
        if v <= u {
            return 0.0;
        }
        let m = self.cumulative_entry(i, j, v) - self.cumulative_entry(i, j, u);
        m.max(0.0)
    }

    /// All integrals `int_u^v a_ij` at once (zero-extended).
    pub fn mass_matrix(&self, u: f64, v: f64) -> DMatrix<f64> {
        if v <= u {
            return DMatrix::zeros(self.n, self.n);
        }
        (self.cumulative_at(v) - self.cumulative_at(u)).map(|x| x.max(0.0))
    }

    /// Exact integral matrix over `[u, v]` by direct piece summation
    /// (zero-extended). Slower than [`Self::mass_matrix`] but free of
    /// prefix-sum cancellation.
    pub fn integral_matrix(&self, u: f64, v: f64) -> DMatrix<f64> {
        let mut acc = DMatrix::zeros(self.n, self.n);
        if v <= u {
            return acc;
        }
        for (p, h) in self.overlapping(u, v) {
            acc += &p.rates * h;
        }
        acc
    }

    /// True when `a_ij` vanishes almost everywhere on `[u, v]` (zero-extended).
    pub fn is_zero_on(&self, i: usize, j: usize, u: f64, v: f64) -> bool {
        if v <= u {
            return true;
        }
        self.overlapping(u, v).all(|(p, _)| p.rates[(i, j)] == 0.0)
    }

    /// True when `a_ij(t) = a_ji(t)` for all pairs on every piece meeting `[u, v]`.
    pub fn is_symmetric_on(&self, u: f64, v: f64) -> bool {
        let check = |p: &Piece| p.rates == p.rates.transpose();
        if v <= u {
            return self.index_at(u).is_none_or(|k| check(&self.pieces[k]));
        }
        self.overlapping(u, v).all(|(p, _)| check(p))
    }

    /// Largest total outgoing rate `max_i sum_j a_ij` over all pieces.
    pub fn max_row_rate(&self) -> f64 {
        self.pieces
            .iter()
            .flat_map(|p| p.rates.row_iter().map(|r| r.sum()).collect::<Vec<_>>())
            .fold(0.0, f64::max)
    }
}

/// `BigRational` helper for tests and callers comparing exact integrals.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        let (num, den): (&BigInt, &BigInt) = (r.numer(), r.denom());
        num.to_f64().unwrap_or(f64::NAN) / den.to_f64().unwrap_or(f64::NAN)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ex1(h: f64) -> WeightSchedule {
        ScheduleGenerator::Example1.materialize(h).unwrap()
    }

    #[test]
    fn example1_eval_at_2_5() {
        let a = ex1(10.0).eval(2.5).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2), (2, 1), (3, 0)] {
            expected[(i, j)] = 1.0;
        }
        assert_eq!(a, expected);
    }

    #[test]
    fn zero_piece_evaluates_to_zero() {
        let s = WeightSchedule::zero(3, 5.0).unwrap();
        assert_eq!(s.eval(2.0).unwrap(), DMatrix::zeros(3, 3));
        assert_eq!(ex1(10.0).eval(1.0).unwrap(), DMatrix::zeros(4, 4));
    }

    #[test]
    fn oscillator_eval() {
        let s = ScheduleGenerator::oscillator_default().materialize(40.0).unwrap();
        let a = s.eval(4.5).unwrap();
        // phase [4p, 4p+1) with p = 1: only a_21 = rho_1 = 4
        let mut expected = DMatrix::zeros(3, 3);
        expected[(1, 0)] = 4.0;
        assert_eq!(a, expected);
    }

    #[test]
    fn eval_out_of_range() {
        let s = WeightSchedule::zero(2, 5.0).unwrap();
        assert!(matches!(s.eval(6.0), Err(Error::OutOfRange { .. })));
        assert!(matches!(s.eval(-1.0), Err(Error::OutOfRange { .. })));
        // with a generator the closed form takes over
        let g = ex1(10.0);
        assert_eq!(g.eval(12.5).unwrap()[(2, 1)], 1.0 / 6.0);
    }

    #[test]
    fn integral_examples() {
        let s = ex1(10.0);
        assert_eq!(s.integral_weight(2, 1, 4.0, 5.0).unwrap(), 0.5);
        assert_eq!(s.integral_weight(1, 2, 3.0, 3.0).unwrap(), 0.0);
        let s2 = ScheduleGenerator::Example2.materialize(10.0).unwrap();
        assert_eq!(s2.integral_weight(2, 3, 2.0, 4.0).unwrap(), 1.0);
        assert!(matches!(s.integral_weight(0, 1, 0.0, 11.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn rejects_bad_pieces() {
        let n = 2;
        let gap = vec![Piece::zero(n, 0.0, 1.0), Piece::zero(n, 1.5, 2.0)];
        assert!(WeightSchedule::new(n, gap).is_err());
        let mut neg = DMatrix::zeros(2, 2);
        neg[(0, 1)] = -1.0;
        assert!(WeightSchedule::new(n, vec![Piece::new(0.0, 1.0, neg)]).is_err());
        let mut nan = DMatrix::zeros(2, 2);
        nan[(0, 1)] = f64::NAN;
        assert!(WeightSchedule::new(n, vec![Piece::new(0.0, 1.0, nan)]).is_err());
        assert!(WeightSchedule::new(1, vec![Piece::zero(1, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn diagonal_is_dropped() {
        let s = WeightSchedule::constant(DMatrix::from_element(3, 3, 2.0), 1.0).unwrap();
        assert_eq!(s.eval(0.5).unwrap()[(1, 1)], 0.0);
    }

    #[test]
    fn example1_cut_integrals_balance_per_period() {
        let s = ex1(30.0);
        for p in 1..14 {
            let w = s.integral_matrix(2.0 * p as f64, 2.0 * p as f64 + 2.0);
            for set in crate::subset::AgentSet::proper_subsets(4) {
                let mut fwd = 0.0;
                let mut rev = 0.0;
                for i in set.members() {
                    for j in set.complement(4).members() {
                        fwd += w[(i, j)];
                        rev += w[(j, i)];
                    }
                }
                assert_eq!(fwd, rev, "p = {p}, S = {set:?}");
            }
        }
    }

    fn arb_schedule() -> impl Strategy<Value = WeightSchedule> {
        prop::collection::vec(
            (0.1f64..3.0, prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..4.0], 9)),
            1..6,
        )
        .prop_map(|raw| {
            let mut t = 0.0;
            let pieces = raw
                .into_iter()
                .map(|(len, entries)| {
                    let p = Piece::new(t, t + len, DMatrix::from_vec(3, 3, entries));
                    t += len;
                    p
                })
                .collect();
            WeightSchedule::new(3, pieces).unwrap()
        })
    }

    proptest! {
        #[test]
        fn integral_is_exactly_additive(s in arb_schedule(), fa in 0.0f64..1.0, fb in 0.0f64..1.0, fc in 0.0f64..1.0, i in 0usize..3, j in 0usize..3) {
            let mut ts = [fa, fb, fc].map(|f| f * s.horizon());
            ts.sort_by(f64::total_cmp);
            let [a, b, c] = ts;
            let whole = s.integral_weight_exact(i, j, a, c).unwrap();
            let split = s.integral_weight_exact(i, j, a, b).unwrap() + s.integral_weight_exact(i, j, b, c).unwrap();
            prop_assert_eq!(whole.clone(), split);
            let fast = s.integral_weight(i, j, a, c).unwrap();
            let exact = rational_to_f64(&whole);
            prop_assert!((fast - exact).abs() <= 1e-12 * (1.0 + exact));
            prop_assert!((s.mass(i, j, a, c) - exact).abs() <= 1e-12 * (1.0 + exact));
        }

        #[test]
        fn rates_are_finite_and_nonnegative(s in arb_schedule(), f in 0.0f64..1.0) {
            let a = s.eval(f * s.horizon()).unwrap();
            prop_assert!(a.iter().all(|x| x.is_finite() && *x >= 0.0));
        }
    }
}
