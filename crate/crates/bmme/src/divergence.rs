//! Beta-divergence values, gradients, and relative-error normalizations for
//! beta in [1, 2].
//!
//! For beta = 1 the divergence is Kullback-Leibler with the continuous
//! extension 0 * log(0/y) = 0; for beta in (1, 2] it is
//! (x^beta + (beta-1) y^beta - beta x y^(beta-1)) / (beta (beta-1)).

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::linalg::elem_pow;

/// Divergence exponent restricted to [1, 2].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beta(f64);

impl Beta {
    pub fn new(value: f64) -> Result<Self> {
        if !(1.0..=2.0).contains(&value) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [1, 2], got {value}"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    pub fn is_kl(&self) -> bool {
        self.0 == 1.0
    }
}

/// Scalar beta-divergence d_beta(x, y) for x >= 0, y > 0.
pub fn d_beta(x: f64, y: f64, beta: Beta) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::DomainViolation(format!(
            "d_beta needs x >= 0, got {x}"
        )));
    }
    if y <= 0.0 {
        return Err(Error::DomainViolation(format!(
            "d_beta needs y > 0, got {y}"
        )));
    }
    Ok(d_beta_raw(x, y, beta.value()))
}

// Both branches are nonnegative over the domain; the clamp only absorbs the
// cancellation noise near x = y.
#[inline]
pub(crate) fn d_beta_raw(x: f64, y: f64, b: f64) -> f64 {
    let v = if b == 1.0 {
        let xlog = if x == 0.0 { 0.0 } else { x * (x / y).ln() };
        xlog - x + y
    } else {
        (x.powf(b) + (b - 1.0) * y.powf(b) - b * x * elem_pow(y, b - 1.0)) / (b * (b - 1.0))
    };
    v.max(0.0)
}

/// First derivative of y -> d_beta(x, y): y^(beta-2) (y - x).
#[inline]
pub(crate) fn d_beta_dy(x: f64, y: f64, b: f64) -> f64 {
    elem_pow(y, b - 2.0) * (y - x)
}

/// Second derivative of y -> d_beta(x, y):
/// (beta-1) y^(beta-2) + (2-beta) x y^(beta-3).
#[inline]
pub(crate) fn d_beta_dyy(x: f64, y: f64, b: f64) -> f64 {
    (b - 1.0) * elem_pow(y, b - 2.0) + (2.0 - b) * x * elem_pow(y, b - 3.0)
}

fn check_shapes(x: &ArrayView2<f64>, w: &ArrayView2<f64>, h: &ArrayView2<f64>) -> Result<()> {
    if w.nrows() != x.nrows() || h.ncols() != x.ncols() || w.ncols() != h.nrows() {
        return Err(Error::ShapeMismatch {
            context: "D_beta",
            expected: format!("({0}x r) * (r x{1}) = {0}x{1}", x.nrows(), x.ncols()),
            found: format!(
                "({}x{}) * ({}x{})",
                w.nrows(),
                w.ncols(),
                h.nrows(),
                h.ncols()
            ),
        });
    }
    Ok(())
}

/// Sum of d_beta over all entries of X against the product WH.
pub fn big_d_beta(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    beta: Beta,
) -> Result<f64> {
    check_shapes(x, w, h)?;
    let wh = w.dot(h);
    big_d_beta_vs(x, &wh.view(), beta)
}

/// As [`big_d_beta`] but against a precomputed approximation matrix.
pub fn big_d_beta_vs(x: &ArrayView2<f64>, wh: &ArrayView2<f64>, beta: Beta) -> Result<f64> {
    if x.dim() != wh.dim() {
        return Err(Error::ShapeMismatch {
            context: "D_beta",
            expected: format!("{:?}", x.dim()),
            found: format!("{:?}", wh.dim()),
        });
    }
    let b = beta.value();
    let mut acc = 0.0;
    for (&xv, &yv) in x.iter().zip(wh.iter()) {
        if yv <= 0.0 {
            if xv == 0.0 && yv == 0.0 {
                // continuous extension d(0, 0) = 0 (zero rows of baselines)
                continue;
            }
            return Err(Error::DomainViolation(format!(
                "approximation entry must be positive, got {yv}"
            )));
        }
        acc += d_beta_raw(xv, yv, b);
    }
    Ok(acc)
}

/// Gradient of H -> D_beta(X, WH): W^T ((WH)^(beta-1) - X o (WH)^(beta-2)).
pub fn grad_h(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    beta: Beta,
) -> Result<Array2<f64>> {
    check_shapes(x, w, h)?;
    let wh = w.dot(h);
    Ok(w.t().dot(&residual_factor(x, &wh, beta)))
}

/// Gradient of W -> D_beta(X, WH): ((WH)^(beta-1) - X o (WH)^(beta-2)) H^T.
pub fn grad_w(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    beta: Beta,
) -> Result<Array2<f64>> {
    check_shapes(x, w, h)?;
    let wh = w.dot(h);
    Ok(residual_factor(x, &wh, beta).dot(&h.t()))
}

/// (WH)^(beta-1) - X o (WH)^(beta-2), the inner factor of both gradients.
pub(crate) fn residual_factor(x: &ArrayView2<f64>, wh: &Array2<f64>, beta: Beta) -> Array2<f64> {
    let b = beta.value();
    let mut out = Array2::<f64>::zeros(wh.dim());
    ndarray::Zip::from(&mut out)
        .and(x)
        .and(wh)
        .for_each(|o, &xv, &yv| {
            let p = elem_pow(yv, b - 1.0);
            *o = p - xv * p / yv;
        });
    out
}

/// Rank-one row-mean baseline (X e / n) e^T used by the relative errors.
pub fn rowmean_baseline(x: &ArrayView2<f64>) -> Array2<f64> {
    let n = x.ncols() as f64;
    let means: Vec<f64> = x.rows().into_iter().map(|r| r.sum() / n).collect();
    Array2::from_shape_fn(x.dim(), |(i, _)| means[i])
}

/// Relative min-vol objective:
/// (D_KL(X, WH) + lambda1 logdet(W^T W + delta I)) / D_KL(X, (Xe/n)e^T).
pub fn rel_error_minvol(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    lambda1: f64,
    delta: f64,
) -> Result<f64> {
    if lambda1 < 0.0 {
        return Err(Error::InvalidParameter("lambda1 must be >= 0".into()));
    }
    if delta <= 0.0 {
        return Err(Error::InvalidParameter("delta must be > 0".into()));
    }
    let kl = Beta::new(1.0)?;
    let denom = big_d_beta_vs(x, &rowmean_baseline(x).view(), kl)?;
    if denom == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    let fit = big_d_beta(x, w, h, kl)?;
    let gram = w.t().dot(w);
    let logdet = crate::linalg::logdet_shifted(&gram.view(), delta)?;
    Ok((fit + lambda1 * logdet) / denom)
}

/// D_beta(X, WH) normalized by the divergence to the row-mean baseline.
pub fn rel_objective_beta(
    x: &ArrayView2<f64>,
    w: &ArrayView2<f64>,
    h: &ArrayView2<f64>,
    beta: Beta,
) -> Result<f64> {
    let denom = big_d_beta_vs(x, &rowmean_baseline(x).view(), beta)?;
    if denom == 0.0 {
        return Err(Error::DegenerateBaseline);
    }
    Ok(big_d_beta(x, w, h, beta)? / denom)
}
