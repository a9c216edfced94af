//! Non-negative least squares (Lawson–Hanson) and Carathéodory support pruning.

use nalgebra::{DMatrix, DVector};

/// Least-squares solve restricted to the columns in `cols`.
fn restricted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, cols: &[usize]) -> DVector<f64> {
    let sub = a.select_columns(cols);
    let svd = sub.svd(true, true);
    svd.solve(b, 1e-13).unwrap_or_else(|_| DVector::zeros(cols.len()))
}

/// Minimises `|A x - b|` over `x >= 0`. Returns `x`; the positive entries form a
/// set of linearly independent columns, so `x` is a basic solution.
pub(crate) fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, max_iter: usize) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::<f64>::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * (1.0 + a.amax()) * (1.0 + b.amax());

    for _ in 0..max_iter {
        let w = a.transpose() * (b - a * &x);
        let candidate = (0..n)
            .filter(|&j| !passive[j])
            .max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = candidate else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;

        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let s = restricted_lstsq(a, b, &cols);
            if s.iter().all(|&v| v > 0.0) {
                x.fill(0.0);
                for (k, &i) in cols.iter().enumerate() {
                    x[i] = s[k];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (k, &i) in cols.iter().enumerate() {
                if s[k] <= 0.0 {
                    let denom = x[i] - s[k];
                    if denom > 0.0 {
                        alpha = alpha.min(x[i] / denom);
                    }
                }
            }
            if !alpha.is_finite() {
                alpha = 0.0;
            }
            for (k, &i) in cols.iter().enumerate() {
                x[i] += alpha * (s[k] - x[i]);
                if x[i] <= 1e-15 {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

/// Removes atoms from the support of `x` while keeping `A x` unchanged, until the
/// support columns are linearly independent (at most `A.nrows()` atoms).
pub(crate) fn caratheodory_prune(a: &DMatrix<f64>, x: &mut DVector<f64>) {
    let m = a.nrows();
    loop {
        let support: Vec<usize> = (0..x.len()).filter(|&i| x[i] > 0.0).collect();
        if support.len() <= m {
            return;
        }
        // m + 1 support columns always have a null vector
        let cols = &support[..m + 1];
        let mut sq = DMatrix::<f64>::zeros(m + 1, m + 1);
        sq.view_mut((0, 0), (m, m + 1)).copy_from(&a.select_columns(cols));
        let svd = sq.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let (imin, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty");
        let mut v: Vec<f64> = v_t.row(imin).iter().copied().collect();
        if !v.iter().any(|&t| t > 0.0) {
            v.iter_mut().for_each(|t| *t = -*t);
        }
        let (mut step, mut hit) = (f64::INFINITY, cols[0]);
        for (k, &i) in cols.iter().enumerate() {
            if v[k] > 0.0 {
                let t = x[i] / v[k];
                if t < step {
                    step = t;
                    hit = i;
                }
            }
        }
        for (k, &i) in cols.iter().enumerate() {
            x[i] -= step * v[k];
            if x[i] < 0.0 {
                x[i] = 0.0;
            }
        }
        x[hit] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_recovers_nonnegative_solution() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 1.0, 1.0, 0.0, 1.0, 2.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        let x = nnls(&a, &b, 100);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((&a * &x - &b).norm() < 1e-12);
    }

    #[test]
    fn nnls_clips_negative_direction() {
        let a = DMatrix::from_row_slice(1, 1, &[1.0]);
        let b = DVector::from_vec(vec![-1.0]);
        let x = nnls(&a, &b, 10);
        assert_eq!(x[0], 0.0);
    }

    #[test]
    fn prune_keeps_image_and_reduces_support() {
        let a = DMatrix::from_row_slice(2, 5, &[1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.25, 0.5, 0.75, 1.0]);
        let mut x = DVector::from_element(5, 0.2);
        let before = &a * &x;
        caratheodory_prune(&a, &mut x);
        assert!(x.iter().filter(|&&v| v > 0.0).count() <= 2);
        assert!((&a * &x - before).norm() < 1e-12);
    }
}
