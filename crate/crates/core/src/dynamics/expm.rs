//! Consensus flow `exp(-L h)` by scaling and squaring.
//!
//! `-L h` has non-negative off-diagonal entries. Writing `-L h = N - c I`
//! with `c = max_i L_ii h`, the matrix `N` is entrywise non-negative, so
//! every Taylor term of `exp(N / 2^s)` is non-negative and no cancellation
//! occurs and a large scaled norm is safe. Fewer squarings means less
//! amplification of rounding error, which doubles with every squaring. The
//! scalar factor `exp(-c / 2^s)` is applied before squaring so nothing
//! overflows for large `c`.

use nalgebra::DMatrix;

/// Scaled 1-norm target before the Taylor series is evaluated.
const SCALED_NORM: f64 = 4.0;
const MAX_TERMS: usize = 80;
/// Truncation target floor; squaring multiplies it by `2^s`.
const TRUNCATION_FLOOR: f64 = 1e-300;

/// Laplacian of a rate matrix: `L_ii = sum_j a_ij`, `L_ij = -a_ij`.
pub fn laplacian(rates: &DMatrix<f64>) -> DMatrix<f64> {
    let n = rates.nrows();
    let mut l = -rates.clone();
    for i in 0..n {
        l[(i, i)] = 0.0;
        let row: f64 = (0..n).filter(|&j| j != i).map(|j| rates[(i, j)]).sum();
        l[(i, i)] = row;
    }
    l
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Number of Taylor terms so that the truncated tail of `exp(N)` with
/// `||N||_1 <= theta` is below `tol` relative to `exp(N) >= I`.
fn taylor_order(theta: f64, tol: f64) -> usize {
    let mut term = 1.0;
    for m in 1..MAX_TERMS {
        term *= theta / m as f64;
        let ratio = theta / (m as f64 + 2.0);
        if ratio >= 1.0 {
            continue;
        }
        // geometric bound on the remaining tail
        let tail = term * theta / (m as f64 + 1.0) / (1.0 - ratio);
        if tail <= tol {
            return m;
        }
    }
    MAX_TERMS
}

/// `exp(-L(rates) * h)` to relative accuracy `tol`.
pub fn consensus_flow(rates: &DMatrix<f64>, h: f64, tol: f64) -> DMatrix<f64> {
    let n = rates.nrows();
    let lap = laplacian(rates) * h;
    let shift = (0..n).map(|i| lap[(i, i)]).fold(0.0, f64::max);
    if shift == 0.0 {
        return DMatrix::identity(n, n);
    }
    let mut nonneg = -lap;
    for i in 0..n {
        nonneg[(i, i)] += shift;
    }
    let norm = norm1(&nonneg);
    let squarings = if norm > SCALED_NORM { (norm / SCALED_NORM).log2().ceil() as i32 } else { 0 };
    let scale = 2f64.powi(squarings);
    let scaled = nonneg / scale;
    // truncation relative to exp(N / 2^s) >= 1, kept below one ulp after squaring
    let target = (tol.min(f64::EPSILON) / scale).max(TRUNCATION_FLOOR);
    let order = taylor_order(norm / scale, target);

    // Horner: I + X (I + X/2 (I + X/3 (...)))
    let id = DMatrix::<f64>::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=order).rev() {
        acc = &id + (&scaled * acc) / k as f64;
    }
    acc *= (-shift / scale).exp();
    for _ in 0..squarings {
        acc = &acc * &acc;
    }
    acc
}
