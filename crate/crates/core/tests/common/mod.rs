#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recipro::schedules::{Piece, WeightSchedule};

/// Piece boundaries of random schedules sit on this grid so that a fixed
/// reference step divides every piece exactly.
pub const GRID: f64 = 0.25;

/// Random piecewise-constant schedule on `[0, pieces * GRID * k)` with
/// piece lengths drawn from `{1, ..., 4} * GRID`, rates in `[0, max_rate)`
/// and roughly a third of the entries zero.
pub fn random_schedule(n: usize, pieces: usize, max_rate: f64, seed: u64) -> WeightSchedule {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(pieces);
    for _ in 0..pieces {
        let len = GRID * rng.random_range(1..=4) as f64;
        let mut rates = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.random_bool(0.65) {
                    rates[(i, j)] = rng.random_range(0.0..max_rate);
                }
            }
        }
        out.push(Piece::new(t, t + len, rates));
        t += len;
    }
    WeightSchedule::new(n, out).expect("random pieces are contiguous")
}

pub fn random_state(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn drift(rates: &DMatrix<f64>, x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(n, |i, _| (0..n).map(|j| rates[(i, j)] * (x[j] - x[i])).sum())
}

/// Classical RK4 with fixed step `h`, piece by piece. Returns the state at
/// the start of every piece and at the end of the last one.
pub fn rk4_reference(schedule: &WeightSchedule, x0: &[f64], h: f64) -> Vec<(f64, DVector<f64>)> {
    let mut x = DVector::from_column_slice(x0);
    let mut out = vec![(schedule.start(), x.clone())];
    for piece in schedule.pieces() {
        let steps = (piece.len() / h).round() as usize;
        assert!((steps as f64 * h - piece.len()).abs() < 1e-9, "step must divide piece length");
        let a = &piece.rates;
        for _ in 0..steps {
            let k1 = drift(a, &x);
            let k2 = drift(a, &(&x + &k1 * (h / 2.0)));
            let k3 = drift(a, &(&x + &k2 * (h / 2.0)));
            let k4 = drift(a, &(&x + &k3 * h));
            x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out.push((piece.t1, x.clone()));
    }
    out
}
