use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Weighted least-squares solution of `min sum_i w_i (y_i - x_i . b)^2`.
#[derive(Debug, Clone)]
pub(crate) struct LstsqFit {
    pub coef: Vec<f64>,
    pub full_rank: bool,
}

/// Solves weighted least squares by column-pivoted QR of the row-scaled design.
/// Rank-deficient systems fall back to the minimum-norm SVD solution.
pub(crate) fn weighted_lstsq(rows: &[Vec<f64>], y: &[f64], w: &[f64]) -> Result<LstsqFit> {
    let n = rows.len();
    let p = rows.first().map_or(0, Vec::len);
    if n == 0 || p == 0 {
        return Err(Error::SolverFailure("empty least-squares system".into()));
    }
    let sw: Vec<f64> = w.iter().map(|v| v.max(0.0).sqrt()).collect();
    let a = DMatrix::from_fn(n, p, |i, j| rows[i][j] * sw[i]);
    let b = DVector::from_fn(n, |i, _| y[i] * sw[i]);
    let tol_scale = (n.max(p) as f64) * f64::EPSILON;

    if n >= p {
        let qr = a.clone().col_piv_qr();
        let r = qr.r();
        let rmax = r[(0, 0)].abs();
        let rank = (0..p).filter(|&i| r[(i, i)].abs() > rmax * tol_scale).count();
        if rmax.is_finite() && rmax > 0.0 && rank == p {
            let mut x = qr.q().transpose() * &b;
            if !r.solve_upper_triangular_mut(&mut x) {
                return Err(Error::SolverFailure("singular triangular factor".into()));
            }
            qr.p().inv_permute_rows(&mut x);
            return finish(x.iter().copied().collect(), true);
        }
    }

    let svd = a.svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax.is_finite() && smax > 0.0) {
        return Err(Error::SolverFailure("design matrix has no usable singular values".into()));
    }
    let tol = smax * tol_scale;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    let x = svd.solve(&b, tol).map_err(|e| Error::SolverFailure(e.to_string()))?;
    finish(x.iter().copied().collect(), rank == p)
}

fn finish(coef: Vec<f64>, full_rank: bool) -> Result<LstsqFit> {
    if coef.iter().any(|c| !c.is_finite()) {
        return Err(Error::SolverFailure("non-finite least-squares solution".into()));
    }
    Ok(LstsqFit { coef, full_rank })
}

/// Design rows `[1, m_1, .., m_d]` for binary masks.
pub(crate) fn with_intercept(masks: &[Vec<bool>]) -> Vec<Vec<f64>> {
    masks
        .iter()
        .map(|m| std::iter::once(1.0).chain(m.iter().map(|&b| f64::from(u8::from(b)))).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_line() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![1.0, i as f64]).collect();
        let y: Vec<f64> = (0..5).map(|i| 2.0 - 3.0 * i as f64).collect();
        let fit = weighted_lstsq(&rows, &y, &[1.0, 2.0, 0.5, 1.0, 1.0]).unwrap();
        assert!(fit.full_rank);
        assert!((fit.coef[0] - 2.0).abs() < 1e-12 && (fit.coef[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn flags_rank_deficiency() {
        let rows = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]];
        let fit = weighted_lstsq(&rows, &[1.0, 1.0, 1.0], &[1.0; 3]).unwrap();
        assert!(!fit.full_rank);
    }

    #[test]
    fn binary_designs_are_solved_to_rounding() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> =
            (0..500).map(|_| (0..11).map(|j| if j == 0 || rng.gen_bool(0.5) { 1.0 } else { 0.0 }).collect()).collect();
        let beta: Vec<f64> = (0..11).map(|j| (j as f64 * 0.37).sin()).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum()).collect();
        let fit = weighted_lstsq(&rows, &y, &vec![1.0; 500]).unwrap();
        for (c, b) in fit.coef.iter().zip(&beta) {
            assert!((c - b).abs() < 1e-10);
        }
    }
}
