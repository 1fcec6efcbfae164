//! Small dense helpers for instance construction. Dimensions here are tiny
//! (d ≤ a few hundred), so plain loops are fine.

use ndarray::{Array1, Array2};

/// Cholesky factor `L` with `L Lᵀ = a`, or `None` if `a` is not numerically
/// positive definite.
pub(crate) fn cholesky(a: &Array2<f64>) -> Option<Array2<f64>> {
    let n = a.nrows();
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[[i, j]];
            for k in 0..j {
                sum -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if !(sum > 1e-12 * a[[i, i]].abs().max(1e-300)) || !sum.is_finite() {
                    return None;
                }
                l[[i, j]] = sum.sqrt();
            } else {
                l[[i, j]] = sum / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` given the Cholesky factor.
pub(crate) fn cholesky_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut y = Array1::<f64>::zeros(n);
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[[i, k]] * y[k];
        }
        y[i] = s / l[[i, i]];
    }
    let mut x = Array1::<f64>::zeros(n);
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[[k, i]] * x[k];
        }
        x[i] = s / l[[i, i]];
    }
    x
}

/// Spectral norm by power iteration on `aᵀa`.
pub(crate) fn spectral_norm(a: &Array2<f64>) -> f64 {
    let d = a.ncols();
    if d == 0 || a.nrows() == 0 {
        return 0.0;
    }
    let ata = a.t().dot(a);
    let mut v = Array1::<f64>::from_elem(d, 1.0 / (d as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = ata.dot(&v);
        let n = w.dot(&w).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        let next = n;
        v = w / n;
        if (next - lambda).abs() <= 1e-14 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Orthonormal basis from the columns of `g` (modified Gram–Schmidt).
pub(crate) fn orthonormalize(mut g: Array2<f64>) -> Array2<f64> {
    let n = g.ncols();
    for j in 0..n {
        for k in 0..j {
            let proj = g.column(k).dot(&g.column(j));
            let ck = g.column(k).to_owned();
            let mut cj = g.column_mut(j);
            cj.scaled_add(-proj, &ck);
        }
        let norm = g.column(j).dot(&g.column(j)).sqrt();
        g.column_mut(j).mapv_inplace(|v| v / norm);
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = array![[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let b = array![1.0, -2.0, 0.5];
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &b);
        let r = a.dot(&x) - &b;
        assert!(r.dot(&r).sqrt() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular() {
        let a = array![[1.0, 1.0], [1.0, 1.0]];
        assert!(cholesky(&a).is_none());
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let a = array![[3.0, 0.0], [0.0, -5.0], [0.0, 0.0]];
        assert!((spectral_norm(&a) - 5.0).abs() < 1e-9);
    }

    #[test]
    fn gram_schmidt_is_orthonormal() {
        let g = array![[1.0, 2.0, 0.0], [0.5, 1.0, 1.0], [0.0, 1.0, 3.0]];
        let q = orthonormalize(g);
        let qtq = q.t().dot(&q);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[[i, j]] - want).abs() < 1e-12);
            }
        }
    }
}
