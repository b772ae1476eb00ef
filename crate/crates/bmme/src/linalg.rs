//! Small dense linear-algebra helpers: cyclic Jacobi eigendecomposition for
//! symmetric r x r matrices (r is a factorization rank, so small), and a few
//! norms used across the solvers.

use ndarray::{Array1, Array2, ArrayView2};

use crate::error::{Error, Result};

/// Eigendecomposition of a small symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` with `a = v * diag(w) * v^T`,
/// eigenvalues in ascending order. Iterates sweeps until the off-diagonal
/// Frobenius mass drops below `1e-12` times the matrix norm.
pub fn jacobi_eigh(a: &ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch {
            context: "jacobi_eigh",
            expected: "square matrix".into(),
            found: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    let mut m = a.to_owned();
    let mut v = Array2::<f64>::eye(n);
    if n <= 1 {
        return Ok((m.diag().to_owned(), v));
    }

    let norm = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-12 * norm;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[[p, q]] * m[[p, q]];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = m[[p, p]];
                let aqq = m[[q, q]];
                let theta = (aqq - app) / (2.0 * apq);
                // smaller-magnitude root for stability
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| m[[i, i]]).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let w = Array1::from_iter(order.iter().map(|&i| diag[i]));
    let mut vs = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        vs.column_mut(dst).assign(&v.column(src));
    }
    Ok((w, vs))
}

/// `log det(G + delta I)` for a symmetric positive semidefinite `G`.
pub fn logdet_shifted(g: &ArrayView2<f64>, delta: f64) -> Result<f64> {
    let (w, _) = jacobi_eigh(g)?;
    let mut acc = 0.0;
    for &lam in w.iter() {
        let shifted = lam + delta;
        if shifted <= 0.0 {
            return Err(Error::DomainViolation(format!(
                "log det argument has nonpositive eigenvalue {shifted}"
            )));
        }
        acc += shifted.ln();
    }
    Ok(acc)
}

/// Inverse of `G + delta I` for symmetric positive semidefinite `G`, plus the
/// smallest eigenvalue of `G` (used for the Lipschitz constant of the log-det
/// majorizer).
pub fn inv_shifted(g: &ArrayView2<f64>, delta: f64) -> Result<(Array2<f64>, f64)> {
    let (w, v) = jacobi_eigh(g)?;
    let lam_min = w[0];
    if lam_min + delta <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "matrix plus {delta} I is not positive definite (lambda_min = {lam_min})"
        )));
    }
    let n = g.nrows();
    let mut inv = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += v[[i, k]] * v[[j, k]] / (w[k] + delta);
            }
            inv[[i, j]] = acc;
        }
    }
    Ok((inv, lam_min))
}

/// Frobenius norm.
pub fn frob(a: &ArrayView2<f64>) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Frobenius inner product.
pub fn frob_dot(a: &ArrayView2<f64>, b: &ArrayView2<f64>) -> f64 {
    debug_assert_eq!(a.dim(), b.dim());
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// Componentwise power that routes the common exponents through cheap paths;
/// the listed cases cover beta in {1, 1.5, 2} in the update rules.
#[inline]
pub fn elem_pow(z: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        z
    } else if e == 0.5 {
        z.sqrt()
    } else if e == 2.0 {
        z * z
    } else if e == 1.5 {
        z * z.sqrt()
    } else if e == -0.5 {
        1.0 / z.sqrt()
    } else if e == -1.0 {
        1.0 / z
    } else {
        z.powf(e)
    }
}
