//! Weighted ridge regression with an unpenalized intercept over sparse rows.
//!
//! Columns are centered with the weighted mean, then the penalized normal
//! equations are solved by Cholesky factorization. When there are more
//! features than samples the equivalent dual system (samples x samples) is
//! factored instead, so the dense solve never exceeds min(n, p) squared.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Sorted `(column, value)` pairs.
pub type SparseRow = Vec<(usize, f64)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RidgeSolver {
    #[default]
    Auto,
    Primal,
    Dual,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    /// One coefficient vector per target.
    pub coefs: Vec<Vec<f64>>,
    pub intercepts: Vec<f64>,
}

fn sparse_dot(a: &SparseRow, b: &SparseRow) -> f64 {
    let (mut i, mut j, mut acc) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                acc += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    acc
}

fn dense_dot(a: &SparseRow, dense: &[f64]) -> f64 {
    a.iter().map(|&(k, v)| v * dense[k]).sum()
}

/// Fits `targets.len()` ridge regressions sharing one design.
pub fn ridge_fit(
    rows: &[SparseRow],
    n_features: usize,
    targets: &[Vec<f64>],
    weights: &[f64],
    penalty: f64,
    solver: RidgeSolver,
) -> Result<RidgeFit> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::InvalidInput("ridge fit on empty design".into()));
    }
    if weights.len() != n || targets.iter().any(|t| t.len() != n) {
        return Err(Error::InvalidInput("ridge fit: length mismatch".into()));
    }
    if !(penalty >= 0.0) {
        return Err(Error::InvalidInput(format!("ridge penalty must be nonnegative, got {penalty}")));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput("sample weights must be positive".into()));
    }

    let total: f64 = weights.iter().sum();
    let mut x_mean = vec![0.0; n_features];
    for (row, &w) in rows.iter().zip(weights) {
        for &(k, v) in row {
            x_mean[k] += w * v / total;
        }
    }
    let y_means: Vec<f64> = targets
        .iter()
        .map(|t| t.iter().zip(weights).map(|(y, w)| y * w).sum::<f64>() / total)
        .collect();
    let sqrt_w: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();

    let use_dual = match solver {
        RidgeSolver::Auto => n_features > n,
        RidgeSolver::Primal => false,
        RidgeSolver::Dual => true,
    };

    let coefs = if use_dual {
        solve_dual(rows, n_features, targets, &y_means, &sqrt_w, &x_mean, penalty)?
    } else {
        solve_primal(rows, n_features, targets, &y_means, weights, &x_mean, penalty)?
    };

    let intercepts = coefs
        .iter()
        .zip(&y_means)
        .map(|(w, ym)| ym - w.iter().zip(&x_mean).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    Ok(RidgeFit { coefs, intercepts })
}

/// Cholesky factorization that also rejects numerically singular matrices.
pub(crate) fn factor(m: DMatrix<f64>, what: &str) -> Result<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>> {
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Degenerate(format!("{what} are not positive definite")))?;
    let diag = chol.l_dirty().diagonal();
    let max = diag.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = diag.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if max == 0.0 || min * min < 1e-12 * max * max {
        return Err(Error::Degenerate(format!("{what} are numerically singular")));
    }
    Ok(chol)
}

fn solve_primal(
    rows: &[SparseRow],
    p: usize,
    targets: &[Vec<f64>],
    y_means: &[f64],
    weights: &[f64],
    x_mean: &[f64],
    penalty: f64,
) -> Result<Vec<Vec<f64>>> {
    let total: f64 = weights.iter().sum();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    let mut rhs = DMatrix::<f64>::zeros(p, targets.len());
    for (i, (row, &w)) in rows.iter().zip(weights).enumerate() {
        for &(a, va) in row {
            for &(b, vb) in row {
                gram[(a, b)] += w * va * vb;
            }
            for (t, target) in targets.iter().enumerate() {
                rhs[(a, t)] += w * va * (target[i] - y_means[t]);
            }
        }
    }
    for a in 0..p {
        for b in 0..p {
            gram[(a, b)] -= total * x_mean[a] * x_mean[b];
        }
        gram[(a, a)] += penalty;
    }
    // x-bar terms vanish from the right-hand side because the targets are centered.
    let chol = factor(gram, "ridge normal equations")?;
    let sol = chol.solve(&rhs);
    Ok((0..targets.len()).map(|t| sol.column(t).iter().copied().collect()).collect())
}

fn solve_dual(
    rows: &[SparseRow],
    p: usize,
    targets: &[Vec<f64>],
    y_means: &[f64],
    sqrt_w: &[f64],
    x_mean: &[f64],
    penalty: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = rows.len();
    let mean_sq: f64 = x_mean.iter().map(|v| v * v).sum();
    let row_dot_mean: Vec<f64> = rows.iter().map(|r| dense_dot(r, x_mean)).collect();
    let mut kernel = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let centered = sparse_dot(&rows[i], &rows[j]) - row_dot_mean[i] - row_dot_mean[j] + mean_sq;
            let v = sqrt_w[i] * sqrt_w[j] * centered;
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
        kernel[(i, i)] += penalty;
    }
    let rhs = DMatrix::from_fn(n, targets.len(), |i, t| sqrt_w[i] * (targets[t][i] - y_means[t]));
    let chol = factor(kernel, "ridge dual system")?;
    let alpha = chol.solve(&rhs);

    let mut out = Vec::with_capacity(targets.len());
    for t in 0..targets.len() {
        let a: DVector<f64> = alpha.column(t).into_owned();
        let mut w = vec![0.0; p];
        let mut scale_sum = 0.0;
        for (i, row) in rows.iter().enumerate() {
            let s = a[i] * sqrt_w[i];
            scale_sum += s;
            for &(k, v) in row {
                w[k] += s * v;
            }
        }
        for (wk, m) in w.iter_mut().zip(x_mean) {
            *wk -= scale_sum * m;
        }
        out.push(w);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dense_rows(x: &[Vec<f64>]) -> Vec<SparseRow> {
        x.iter()
            .map(|r| r.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(k, v)| (k, *v)).collect())
            .collect()
    }

    /// OLS with intercept by explicit normal equations on [1, X].
    fn ols_oracle(x: &[Vec<f64>], y: &[f64]) -> (Vec<f64>, f64) {
        let n = x.len();
        let p = x[0].len() + 1;
        let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { x[i][j - 1] });
        let yv = DVector::from_column_slice(y);
        let xtx = design.transpose() * &design;
        let xty = design.transpose() * yv;
        let beta = xtx.try_inverse().unwrap() * xty;
        (beta.iter().skip(1).copied().collect(), beta[0])
    }

    #[test]
    fn zero_penalty_matches_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let x: Vec<Vec<f64>> = (0..12).map(|_| (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
            let y: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let fit = ridge_fit(&dense_rows(&x), 4, &[y.clone()], &[1.0; 12], 1e-12, RidgeSolver::Primal).unwrap();
            let (coef, intercept) = ols_oracle(&x, &y);
            for (a, b) in fit.coefs[0].iter().zip(&coef) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            assert!((fit.intercepts[0] - intercept).abs() < 1e-8);
        }
    }

    #[test]
    fn primal_and_dual_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<Vec<f64>> = (0..6).map(|_| (0..9).map(|_| if rng.gen_bool(0.4) { rng.gen_range(0.0..3.0f64).round() } else { 0.0 }).collect()).collect();
        let rows = dense_rows(&x);
        let targets = vec![(0..6).map(|_| rng.gen_range(1.0..6.0)).collect::<Vec<f64>>(), vec![1.0, -1.0, -1.0, 1.0, 1.0, -1.0]];
        let weights: Vec<f64> = (0..6).map(|_| rng.gen_range(0.5..2.0)).collect();
        let a = ridge_fit(&rows, 9, &targets, &weights, 0.7, RidgeSolver::Primal).unwrap();
        let b = ridge_fit(&rows, 9, &targets, &weights, 0.7, RidgeSolver::Dual).unwrap();
        for t in 0..2 {
            for (u, v) in a.coefs[t].iter().zip(&b.coefs[t]) {
                assert!((u - v).abs() < 1e-10);
            }
            assert!((a.intercepts[t] - b.intercepts[t]).abs() < 1e-10);
        }
    }

    #[test]
    fn duplicated_rows_equal_doubled_weights() {
        let x = vec![vec![1.0, 0.0, 2.0], vec![0.0, 1.0, 1.0], vec![3.0, 1.0, 0.0], vec![1.0, 1.0, 1.0]];
        let y = vec![2.0, 3.0, 5.0, 1.0];
        let mut xd = x.clone();
        xd.push(x[2].clone());
        let mut yd = y.clone();
        yd.push(y[2]);
        for solver in [RidgeSolver::Primal, RidgeSolver::Dual] {
            let dup = ridge_fit(&dense_rows(&xd), 3, &[yd.clone()], &[1.0; 5], 1.0, solver).unwrap();
            let wtd = ridge_fit(&dense_rows(&x), 3, &[y.clone()], &[1.0, 1.0, 2.0, 1.0], 1.0, solver).unwrap();
            for (a, b) in dup.coefs[0].iter().zip(&wtd.coefs[0]) {
                assert!((a - b).abs() < 1e-10);
            }
            assert!((dup.intercepts[0] - wtd.intercepts[0]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_without_penalty_is_an_error() {
        let x = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]];
        let r = ridge_fit(&dense_rows(&x), 2, &[vec![1.0, 2.0, 3.0]], &[1.0; 3], 0.0, RidgeSolver::Primal);
        assert!(r.is_err());
    }
}
