//! Minimum-volume KL-NMF: minimize D_KL(X, WH) + lambda1 logdet(W^T W + delta I)
//! over W >= eps with unit column sums and H >= eps.
//!
//! The H update is the KL multiplicative update. The W update minimizes the
//! separable majorizer (Jensen KL part plus the quadratic log-det majorizer)
//! under the simplex constraints: each entry has the closed form
//! W_jk = max(eps, psi_jk(mu_k)) where psi solves the scalar optimality
//! condition lambda1 L w^2 + b2(mu) w - b1 = 0, and mu_k is pinned by
//! bisection on the column-sum equation sum_j W_jk(mu_k) = 1.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::beta_nmf::{
    jensen_matrix_eval, jensen_matrix_grad, mu_step, pack_outcome, SolveOutcome,
};
use crate::divergence::{big_d_beta_vs, rowmean_baseline, Beta};
use crate::engine::{self, BlockProblem, RunConfig};
use crate::error::{Error, Result};
use crate::extrapolation::ExtrapolationConfig;
use crate::linalg::{frob_dot, logdet_shifted};
use crate::majorizer::{logdet_params, MajorizerKind, MajorizerSpec, Point};
use crate::matrixio::NonnegMatrix;

/// Initial bracket for the column-sum bisection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BracketStrategy {
    /// Bracket derived from psi(mu~_jk) = 1/m with the row count m; always a
    /// valid sign change up to rounding.
    #[default]
    Derived,
    /// An alternative heuristic bracket whose divisor and curvature constant
    /// differ from the scalar minimizer's; kept for comparison and backed by
    /// the geometric expansion.
    Heuristic,
}

#[derive(Debug, Clone)]
pub struct MinVolConfig {
    /// Direct min-vol weight; ignored when `lambda_tilde > 0`.
    pub lambda1: f64,
    /// When positive, lambda1 is resolved at the initial point as
    /// lambda_tilde * D_KL(X, W0 H0) / |logdet(W0^T W0 + delta I)|.
    pub lambda_tilde: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub rank: usize,
    pub seed: u64,
    pub bisection_tol: f64,
    pub bisection_max_iter: usize,
    pub bracket: BracketStrategy,
}

impl MinVolConfig {
    pub fn new(rank: usize, lambda_tilde: f64, delta: f64) -> Self {
        Self {
            lambda1: 0.0,
            lambda_tilde,
            delta,
            epsilon: f64::EPSILON,
            rank,
            seed: 0,
            bisection_tol: 1e-10,
            bisection_max_iter: 200,
            bracket: BracketStrategy::Derived,
        }
    }

    fn validate(&self, m: usize) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::InvalidParameter("rank must be >= 1".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter("delta must be > 0".into()));
        }
        if !(self.epsilon > 0.0) || self.epsilon >= 1.0 / m as f64 {
            return Err(Error::InvalidParameter(format!(
                "epsilon must lie in (0, 1/m) = (0, {}), got {}",
                1.0 / m as f64,
                self.epsilon
            )));
        }
        if !(self.bisection_tol > 0.0) || self.bisection_max_iter == 0 {
            return Err(Error::InvalidParameter(
                "bisection tolerance and iteration budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything the per-column bisection needs, assembled once per W update.
pub struct WUpdateWorkspace {
    /// Curvature L_phi1(What) = 2 / (lambda_min(What^T What) + delta) <= 2/delta.
    pub l_phi1: f64,
    /// Gradient of the log-det term at the anchor: 2 What (What^T What + delta I)^-1.
    pub a: Array2<f64>,
    /// B1 = (X / (What H)) H^T o What, the log coefficients (>= 0).
    pub b1: Array2<f64>,
    /// mu-independent part of B2: e e^T H^T + lambda1 (A - L What).
    pub b2_base: Array2<f64>,
    pub lambda1: f64,
    pub epsilon: f64,
}

impl WUpdateWorkspace {
    pub fn new(
        x: &Array2<f64>,
        w_hat: &Array2<f64>,
        h: &Array2<f64>,
        lambda1: f64,
        delta: f64,
        epsilon: f64,
    ) -> Result<Self> {
        if !(lambda1 > 0.0) {
            return Err(Error::InvalidParameter(
                "the min-vol update needs lambda1 > 0; use the beta-NMF solver with beta = 1 \
                 for the unregularized problem"
                    .into(),
            ));
        }
        let params = logdet_params(w_hat, delta, lambda1)?;
        let l = params.l_phi1;
        debug_assert!(l <= 2.0 / delta * (1.0 + 1e-12));
        let v_hat = w_hat.dot(h);
        let ratio = x / &v_hat;
        let b1 = &ratio.dot(&h.t()) * w_hat;
        let row_sums_h: Array1<f64> = h.rows().into_iter().map(|r| r.sum()).collect();
        let b2_base = Array2::from_shape_fn(w_hat.dim(), |(j, k)| {
            row_sums_h[k] + lambda1 * (params.a[[j, k]] - l * w_hat[[j, k]])
        });
        Ok(Self {
            l_phi1: l,
            a: params.a,
            b1,
            b2_base,
            lambda1,
            epsilon,
        })
    }
}

/// The scalar minimizer of -b1 log w + b2(mu) w + (lambda1 L / 2) w^2 over
/// w > 0: the positive root of lambda1 L w^2 + b2 w - b1 = 0. Strictly
/// decreasing in mu and tending to 0 as mu grows.
pub fn psi(j: usize, k: usize, mu_k: f64, ws: &WUpdateWorkspace) -> f64 {
    let b1 = ws.b1[[j, k]];
    let b2 = ws.b2_base[[j, k]] + ws.lambda1 * mu_k;
    let quad = ws.lambda1 * ws.l_phi1;
    let disc = (b2 * b2 + 4.0 * quad * b1).sqrt();
    if b2 <= 0.0 {
        (disc - b2) / (2.0 * quad)
    } else {
        // avoids cancellation for positive b2
        2.0 * b1 / (b2 + disc)
    }
}

fn column_sum_excess(k: usize, mu: f64, ws: &WUpdateWorkspace) -> f64 {
    let m = ws.b1.nrows();
    let mut sum = 0.0;
    for j in 0..m {
        sum += psi(j, k, mu, ws).max(ws.epsilon);
    }
    sum - 1.0
}

/// Finds the multiplier mu_k with |sum_j max(eps, psi_jk(mu_k)) - 1| <= tol by
/// bisection, bracketing from the per-row solutions of psi = 1/m and expanding
/// geometrically if the root function does not change sign on that interval.
pub fn solve_mu_k(
    k: usize,
    ws: &WUpdateWorkspace,
    tol: f64,
    max_iter: usize,
    bracket: BracketStrategy,
) -> Result<f64> {
    let m = ws.b1.nrows() as f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..ws.b1.nrows() {
        let target = match bracket {
            BracketStrategy::Derived => {
                // b2 solving psi = 1/m: b1 m - lambda1 L / m
                ws.b1[[j, k]] * m - ws.lambda1 * ws.l_phi1 / m
            }
            BracketStrategy::Heuristic => {
                4.0 * ws.lambda1 * ws.l_phi1 * ws.b1[[j, k]] * m - 1.0 / m
            }
        };
        let mu = (target - ws.b2_base[[j, k]]) / ws.lambda1;
        lo = lo.min(mu);
        hi = hi.max(mu);
    }
    let mut f_lo = column_sum_excess(k, lo, ws);
    let mut f_hi = column_sum_excess(k, hi, ws);
    if f_lo < 0.0 || f_hi > 0.0 {
        // expand the bracket by doubling its half-width
        let mut center = 0.5 * (lo + hi);
        let mut half = (0.5 * (hi - lo)).max(1.0);
        let mut expanded = false;
        for _ in 0..60 {
            half *= 2.0;
            lo = center - half;
            hi = center + half;
            f_lo = column_sum_excess(k, lo, ws);
            f_hi = column_sum_excess(k, hi, ws);
            if f_lo >= 0.0 && f_hi <= 0.0 {
                expanded = true;
                break;
            }
            center = 0.5 * (lo + hi);
        }
        if !expanded {
            return Err(Error::BisectionFailure {
                column: k,
                detail: format!(
                    "no sign change after 60 expansions (f_lo = {f_lo}, f_hi = {f_hi}); \
                     the lambda1/epsilon combination may be ill-posed"
                ),
            });
        }
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..max_iter {
        mid = 0.5 * (lo + hi);
        let f_mid = column_sum_excess(k, mid, ws);
        if f_mid.abs() <= tol {
            return Ok(mid);
        }
        if f_mid > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let f_mid = column_sum_excess(k, mid, ws);
    if f_mid.abs() <= tol {
        Ok(mid)
    } else {
        Err(Error::BisectionFailure {
            column: k,
            detail: format!("column-sum residual {f_mid} after {max_iter} bisection steps"),
        })
    }
}

/// KL multiplicative update for H (the beta = 1 instance of `mu_step`).
pub fn minvol_h_step(
    x: &Array2<f64>,
    w: &Array2<f64>,
    h_from: &Array2<f64>,
    epsilon: f64,
) -> Result<Array2<f64>> {
    mu_step(
        &x.view(),
        &w.view(),
        &h_from.view(),
        Beta::new(1.0).expect("1 is in range"),
        epsilon,
    )
}

/// Simplex-constrained W update anchored at the (possibly extrapolated)
/// point `w_from`, with `lambda1` already resolved. Every output column sums
/// to one within the bisection tolerance and all entries sit at or above the
/// floor.
pub fn minvol_w_step(
    x: &Array2<f64>,
    w_from: &Array2<f64>,
    h: &Array2<f64>,
    lambda1: f64,
    config: &MinVolConfig,
) -> Result<Array2<f64>> {
    let ws = WUpdateWorkspace::new(x, w_from, h, lambda1, config.delta, config.epsilon)?;
    let (m, r) = w_from.dim();
    let mut out = Array2::<f64>::zeros((m, r));
    for k in 0..r {
        let mu = solve_mu_k(
            k,
            &ws,
            config.bisection_tol,
            config.bisection_max_iter,
            config.bracket,
        )?;
        for j in 0..m {
            out[[j, k]] = psi(j, k, mu, &ws).max(config.epsilon);
        }
    }
    Ok(out)
}

/// Two-block min-vol problem for the engine; block 0 is W, block 1 is H.
pub struct MinVolProblem<'x> {
    x: &'x Array2<f64>,
    pub lambda1: f64,
    config: MinVolConfig,
    baseline: f64,
}

impl<'x> MinVolProblem<'x> {
    pub fn new(x: &'x Array2<f64>, lambda1: f64, config: &MinVolConfig) -> Result<Self> {
        if !(lambda1 > 0.0) {
            return Err(Error::InvalidParameter(
                "min-vol requires lambda1 > 0 (beta-NMF with beta = 1 covers lambda1 = 0)".into(),
            ));
        }
        let kl = Beta::new(1.0)?;
        let baseline = big_d_beta_vs(&x.view(), &rowmean_baseline(&x.view()).view(), kl)?;
        if baseline == 0.0 {
            return Err(Error::DegenerateBaseline);
        }
        Ok(Self {
            x,
            lambda1,
            config: config.clone(),
            baseline,
        })
    }

    fn logdet(&self, w: &Array2<f64>) -> f64 {
        let gram = w.t().dot(w);
        logdet_shifted(&gram.view(), self.config.delta).expect("delta-shifted gram is PD")
    }
}

impl BlockProblem for MinVolProblem<'_> {
    fn n_blocks(&self) -> usize {
        2
    }

    fn objective(&self, xs: &[Point]) -> f64 {
        let wh = xs[0].dot(&xs[1]);
        let kl = big_d_beta_vs(&self.x.view(), &wh.view(), Beta::new(1.0).unwrap())
            .expect("floored factors keep WH > 0");
        kl + self.lambda1 * self.logdet(&xs[0])
    }

    fn objective_scale(&self) -> f64 {
        self.baseline
    }

    fn block_majorizer<'a>(&'a self, i: usize, xs: &'a [Point]) -> Result<MajorizerSpec<'a>> {
        let x = self.x;
        let eps = self.config.epsilon;
        let lambda1 = self.lambda1;
        let delta = self.config.delta;
        match i {
            0 => {
                let h = &xs[1];
                let config = &self.config;
                Ok(MajorizerSpec::new(
                    MajorizerKind::JensenBeta,
                    Box::new(move |wp: &Point, wt: &Point| {
                        let jensen = jensen_matrix_eval(&x.t(), &h.t(), &wp.t(), &wt.t(), 1.0);
                        let p = logdet_params(wt, delta, lambda1).expect("anchor curvature");
                        let diff = wp - wt;
                        jensen
                            + lambda1
                                * (p.phi_at_anchor
                                    + frob_dot(&p.a.view(), &diff.view())
                                    + 0.5 * p.l_phi1 * frob_dot(&diff.view(), &diff.view()))
                    }),
                    Box::new(move |wp: &Point, wt: &Point| {
                        let jensen = jensen_matrix_grad(&x.t(), &h.t(), &wp.t(), &wt.t(), 1.0)
                            .reversed_axes()
                            .as_standard_layout()
                            .into_owned();
                        let p = logdet_params(wt, delta, lambda1).expect("anchor curvature");
                        &jensen + &(lambda1 * &(&p.a + &(p.l_phi1 * &(wp - wt))))
                    }),
                    Some(Box::new(move |anchor: &Point| {
                        minvol_w_step(x, anchor, h, lambda1, config)
                    })),
                ))
            }
            1 => {
                let w = &xs[0];
                let logdet_const = self.lambda1 * self.logdet(w);
                Ok(MajorizerSpec::new(
                    MajorizerKind::JensenBeta,
                    Box::new(move |hp: &Point, ht: &Point| {
                        jensen_matrix_eval(&x.view(), &w.view(), &hp.view(), &ht.view(), 1.0)
                            + logdet_const
                    }),
                    Box::new(move |hp: &Point, ht: &Point| {
                        jensen_matrix_grad(&x.view(), &w.view(), &hp.view(), &ht.view(), 1.0)
                    }),
                    Some(Box::new(move |anchor: &Point| {
                        minvol_h_step(x, w, anchor, eps)
                    })),
                ))
            }
            _ => Err(Error::InvalidParameter(format!("no block {i}"))),
        }
    }

    fn floor(&self, _i: usize) -> Option<f64> {
        Some(self.config.epsilon)
    }

    fn curvature_estimate(&self, xs: &[Point]) -> Option<f64> {
        // Jensen curvature of both KL blocks plus the quadratic term's
        // lambda1 L on the W block
        let v = xs[0].dot(&xs[1]);
        let mut t = v.clone();
        ndarray::Zip::from(&mut t).and(self.x).for_each(|tv, &xv| {
            *tv = xv / (*tv * *tv);
        });
        let vt = &v * &t;
        let dh = xs[0].t().dot(&vt);
        let dw = vt.dot(&xs[1].t());
        let max_h = dh
            .iter()
            .zip(xs[1].iter())
            .map(|(&num, &hv)| num / hv)
            .fold(0.0f64, f64::max);
        let max_w = dw
            .iter()
            .zip(xs[0].iter())
            .map(|(&num, &wv)| num / wv)
            .fold(0.0f64, f64::max);
        Some(max_h.max(max_w + self.lambda1 * 2.0 / self.config.delta))
    }
}

/// Resolves the min-vol weight from the initial-ratio parameterization.
pub fn resolve_lambda1(
    x: &Array2<f64>,
    w0: &Array2<f64>,
    h0: &Array2<f64>,
    config: &MinVolConfig,
) -> Result<f64> {
    if config.lambda_tilde > 0.0 {
        let wh = w0.dot(h0);
        let kl = big_d_beta_vs(&x.view(), &wh.view(), Beta::new(1.0)?)?;
        let gram = w0.t().dot(w0);
        let logdet = logdet_shifted(&gram.view(), config.delta)?;
        if logdet.abs() == 0.0 {
            return Err(Error::InvalidParameter(
                "initial logdet vanishes; cannot resolve lambda1 from lambda_tilde".into(),
            ));
        }
        Ok(config.lambda_tilde * kl / logdet.abs())
    } else {
        Ok(config.lambda1)
    }
}

/// Column-normalized nonnegative starting factors: W columns on the simplex,
/// H rescaled toward the data magnitude.
pub fn initial_factors_minvol(
    x: &Array2<f64>,
    config: &MinVolConfig,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let (m, n) = x.dim();
    let r = config.rank;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut w = Array2::from_shape_fn((m, r), |_| rng.gen_range(0.0f64..1.0).max(config.epsilon));
    for mut col in w.columns_mut() {
        let s = col.sum();
        col.mapv_inplace(|v| (v / s).max(config.epsilon));
    }
    let mut h = Array2::from_shape_fn((r, n), |_| rng.gen_range(0.0f64..1.0).max(config.epsilon));
    let wh = w.dot(&h);
    let num: f64 = x.iter().zip(wh.iter()).map(|(a, b)| a * b).sum();
    let den: f64 = wh.iter().map(|v| v * v).sum();
    let rho = num / den;
    h.mapv_inplace(|v| (rho * v).max(config.epsilon));
    Ok((w, h))
}

/// Runs min-vol KL-NMF; pass the zero schedule for the plain MM variant.
pub fn solve_minvol(
    x: &NonnegMatrix,
    config: &MinVolConfig,
    run: &RunConfig,
    extrapolation: &ExtrapolationConfig,
) -> Result<SolveOutcome> {
    let xa = x.as_array();
    config.validate(xa.nrows())?;
    let (w0, h0) = initial_factors_minvol(xa, config)?;
    let lambda1 = resolve_lambda1(xa, &w0, &h0, config)?;
    let problem = MinVolProblem::new(xa, lambda1, config)?;
    let outcome = engine::run(&problem, vec![w0, h0], None, run, extrapolation)?;
    Ok(pack_outcome(outcome))
}

/// Largest deviation of any W column sum from one.
pub fn max_simplex_violation(w: &Array2<f64>) -> f64 {
    w.columns()
        .into_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max)
}
