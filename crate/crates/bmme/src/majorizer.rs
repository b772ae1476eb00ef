//! Majorizer constructions and their validation oracles.
//!
//! A majorizer g of f satisfies (a) g(x, x) = f(x), (b) g(x, y) >= f(x), and
//! (c) grad_1 g(x, x) = grad f(x). The Jensen majorizer of the beta-divergence
//! column objective and the quadratic majorizer of the log-det regularizer
//! drive the solvers; the Lipschitz and Bregman builders exist as test
//! scaffolding for the validator.

use ndarray::{Array1, Array2, Axis};

use crate::divergence::{d_beta_dy, d_beta_dyy, d_beta_raw, Beta};
use crate::error::{Error, Result};
use crate::linalg::{elem_pow, frob_dot, inv_shifted, logdet_shifted};

/// Points handled by majorizers and the block engine. Vectors are n x 1.
pub type Point = Array2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MajorizerKind {
    JensenBeta,
    LogDetQuadratic,
    Lipschitz,
    Bregman,
}

type EvalFn<'a> = Box<dyn Fn(&Point, &Point) -> f64 + Send + Sync + 'a>;
type GradFn<'a> = Box<dyn Fn(&Point, &Point) -> Point + Send + Sync + 'a>;
type MinFn<'a> = Box<dyn Fn(&Point) -> Result<Point> + Send + Sync + 'a>;

/// A surrogate function bundle: evaluation, anchor gradient, and (when the
/// construction admits one) an exact constrained minimizer.
pub struct MajorizerSpec<'a> {
    kind: MajorizerKind,
    evaluate: EvalFn<'a>,
    gradient_at_first: GradFn<'a>,
    minimize: Option<MinFn<'a>>,
}

impl<'a> MajorizerSpec<'a> {
    pub fn new(
        kind: MajorizerKind,
        evaluate: EvalFn<'a>,
        gradient_at_first: GradFn<'a>,
        minimize: Option<MinFn<'a>>,
    ) -> Self {
        Self {
            kind,
            evaluate,
            gradient_at_first,
            minimize,
        }
    }

    pub fn kind(&self) -> MajorizerKind {
        self.kind
    }

    /// g(x, anchor).
    pub fn evaluate(&self, x: &Point, anchor: &Point) -> f64 {
        (self.evaluate)(x, anchor)
    }

    /// grad_1 g(x, anchor).
    pub fn gradient_at_first(&self, x: &Point, anchor: &Point) -> Point {
        (self.gradient_at_first)(x, anchor)
    }

    /// argmin_x g(x, anchor) over the feasible set baked into the builder.
    pub fn minimize(&self, anchor: &Point) -> Result<Point> {
        match &self.minimize {
            Some(f) => f(anchor),
            None => Err(Error::InvalidParameter(
                "this majorizer does not provide a minimizer".into(),
            )),
        }
    }

    pub fn has_minimizer(&self) -> bool {
        self.minimize.is_some()
    }
}

fn as_col(p: &Point) -> Array1<f64> {
    debug_assert_eq!(p.ncols(), 1, "expected a column point");
    p.column(0).to_owned()
}

fn to_point(v: Array1<f64>) -> Point {
    v.insert_axis(Axis(1))
}

/// Jensen majorizer of h -> D_beta(v, W h) over the floor set {h >= eps}.
///
/// g(h, ht) = sum_{i,k} (W_ik ht_k / vt_i) d_beta(v_i, vt_i h_k / ht_k) with
/// vt = W ht. Its exact floor-constrained minimizer is the clamped
/// multiplicative update.
pub fn jensen_beta_majorizer(
    v: &Array1<f64>,
    w: &Array2<f64>,
    beta: Beta,
    eps: f64,
) -> Result<MajorizerSpec<'static>> {
    if w.nrows() != v.len() {
        return Err(Error::ShapeMismatch {
            context: "jensen_beta_majorizer",
            expected: format!("W with {} rows", v.len()),
            found: format!("{} rows", w.nrows()),
        });
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if v.iter().any(|&x| x < 0.0) || w.iter().any(|&x| x < 0.0) {
        return Err(Error::DomainViolation(
            "jensen majorizer needs v >= 0 and W >= 0".into(),
        ));
    }
    let b = beta.value();
    let v_eval = v.clone();
    let w_eval = w.clone();
    let v_grad = v.clone();
    let w_grad = w.clone();
    let v_min = v.clone();
    let w_min = w.clone();

    let evaluate = move |h: &Point, ht: &Point| -> f64 {
        let h = h.column(0);
        let ht = ht.column(0);
        let vt = w_eval.dot(&ht);
        let mut acc = 0.0;
        for i in 0..v_eval.len() {
            for k in 0..ht.len() {
                let coeff = w_eval[[i, k]] * ht[k] / vt[i];
                if coeff == 0.0 {
                    continue;
                }
                acc += coeff * d_beta_raw(v_eval[i], vt[i] * h[k] / ht[k], b);
            }
        }
        acc
    };

    let gradient = move |h: &Point, ht: &Point| -> Point {
        let h = h.column(0);
        let ht = ht.column(0);
        let vt = w_grad.dot(&ht);
        let mut g = Array1::<f64>::zeros(ht.len());
        for k in 0..ht.len() {
            let mut acc = 0.0;
            for i in 0..v_grad.len() {
                acc += w_grad[[i, k]] * d_beta_dy(v_grad[i], vt[i] * h[k] / ht[k], b);
            }
            g[k] = acc;
        }
        to_point(g)
    };

    let minimize = move |ht: &Point| -> Result<Point> {
        let ht = as_col(ht);
        let vt = w_min.dot(&ht);
        // numerator W^T (v / vt^(2-beta)), denominator W^T vt^(beta-1)
        let scaled: Array1<f64> = v_min
            .iter()
            .zip(vt.iter())
            .map(|(&vi, &vti)| {
                let p = elem_pow(vti, b - 1.0);
                vi * p / vti
            })
            .collect();
        let powed: Array1<f64> = vt.iter().map(|&vti| elem_pow(vti, b - 1.0)).collect();
        let numer = w_min.t().dot(&scaled);
        let denom = w_min.t().dot(&powed);
        let out: Array1<f64> = ht
            .iter()
            .zip(numer.iter().zip(denom.iter()))
            .map(|(&hk, (&nu, &de))| (hk * nu / de).max(eps))
            .collect();
        Ok(to_point(out))
    };

    Ok(MajorizerSpec::new(
        MajorizerKind::JensenBeta,
        Box::new(evaluate),
        Box::new(gradient),
        Some(Box::new(minimize)),
    ))
}

/// Diagonal of the Hessian of the Jensen majorizer in its first argument:
/// sum_i (W_ik vt_i / ht_k) d''_beta(v_i, vt_i h_k / ht_k).
pub fn jensen_hessian_diag(
    v: &Array1<f64>,
    w: &Array2<f64>,
    h: &Array1<f64>,
    h_tilde: &Array1<f64>,
    beta: Beta,
) -> Result<Array1<f64>> {
    if w.nrows() != v.len() || w.ncols() != h.len() || h.len() != h_tilde.len() {
        return Err(Error::ShapeMismatch {
            context: "jensen_hessian_diag",
            expected: format!("W {}x{}", v.len(), h.len()),
            found: format!("W {}x{}", w.nrows(), w.ncols()),
        });
    }
    if h.iter().any(|&x| x <= 0.0) || h_tilde.iter().any(|&x| x <= 0.0) {
        return Err(Error::DomainViolation(
            "jensen_hessian_diag needs h > 0 and h_tilde > 0".into(),
        ));
    }
    let b = beta.value();
    let vt = w.dot(h_tilde);
    let mut out = Array1::<f64>::zeros(h.len());
    for k in 0..h.len() {
        let mut acc = 0.0;
        for i in 0..v.len() {
            if w[[i, k]] == 0.0 {
                continue;
            }
            acc += w[[i, k]] * vt[i] / h_tilde[k] * d_beta_dyy(v[i], vt[i] * h[k] / h_tilde[k], b);
        }
        out[k] = acc;
    }
    Ok(out)
}

/// Curvature data of the quadratic log-det majorizer at an anchor.
#[derive(Debug, Clone)]
pub struct LogDetMajorizerParams {
    pub delta: f64,
    pub lambda1: f64,
    /// L_phi1 = 2 / (lambda_min(Wt^T Wt) + delta), never above 2 / delta.
    pub l_phi1: f64,
    /// Gradient of phi1 at the anchor: 2 Wt (Wt^T Wt + delta I)^-1.
    pub a: Array2<f64>,
    /// phi1(Wt) = logdet(Wt^T Wt + delta I).
    pub phi_at_anchor: f64,
}

/// Computes the log-det majorizer curvature at `w_tilde`.
pub fn logdet_params(
    w_tilde: &Array2<f64>,
    delta: f64,
    lambda1: f64,
) -> Result<LogDetMajorizerParams> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter("delta must be > 0".into()));
    }
    let gram = w_tilde.t().dot(w_tilde);
    let (inv, lam_min) = inv_shifted(&gram.view(), delta)?;
    let l_phi1 = 2.0 / (lam_min.max(0.0) + delta);
    debug_assert!(l_phi1 <= 2.0 / delta + 1e-12 * (2.0 / delta));
    let a = 2.0 * w_tilde.dot(&inv);
    let phi_at_anchor = logdet_shifted(&gram.view(), delta)?;
    Ok(LogDetMajorizerParams {
        delta,
        lambda1,
        l_phi1,
        a,
        phi_at_anchor,
    })
}

/// Quadratic majorizer of phi1(W) = logdet(W^T W + delta I):
/// phi1(Wt) + <grad phi1(Wt), W - Wt> + L/2 ||W - Wt||^2 with
/// L = 2 / (lambda_min(Wt^T Wt) + delta).
///
/// The curvature is recomputed from each anchor argument; the `w_tilde`
/// parameter fixes the shape and provides the returned params.
pub fn logdet_majorizer(
    w_tilde: &Array2<f64>,
    delta: f64,
    lambda1: f64,
) -> Result<(MajorizerSpec<'static>, LogDetMajorizerParams)> {
    let params = logdet_params(w_tilde, delta, lambda1)?;

    let evaluate = move |x: &Point, anchor: &Point| -> f64 {
        let p = logdet_params(anchor, delta, 0.0).expect("anchor curvature");
        let diff = x - anchor;
        p.phi_at_anchor
            + frob_dot(&p.a.view(), &diff.view())
            + 0.5 * p.l_phi1 * frob_dot(&diff.view(), &diff.view())
    };
    let gradient = move |x: &Point, anchor: &Point| -> Point {
        let p = logdet_params(anchor, delta, 0.0).expect("anchor curvature");
        &p.a + &(p.l_phi1 * &(x - anchor))
    };
    let minimize = move |anchor: &Point| -> Result<Point> {
        let p = logdet_params(anchor, delta, 0.0)?;
        Ok(anchor - &(&p.a / p.l_phi1))
    };

    Ok((
        MajorizerSpec::new(
            MajorizerKind::LogDetQuadratic,
            Box::new(evaluate),
            Box::new(gradient),
            Some(Box::new(minimize)),
        ),
        params,
    ))
}

/// Lipschitz gradient majorizer f(y) + <grad f(y), x-y> + L/2 ||x-y||^2 with a
/// projected-gradient minimizer when a floor is given.
pub fn lipschitz_majorizer<'a, F, G>(
    f: F,
    grad: G,
    l: f64,
    floor: Option<f64>,
) -> Result<MajorizerSpec<'a>>
where
    F: Fn(&Point) -> f64 + Send + Sync + Clone + 'a,
    G: Fn(&Point) -> Point + Send + Sync + Clone + 'a,
{
    if !(l > 0.0) {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    let f_eval = f;
    let grad_eval = grad.clone();
    let grad_grad = grad.clone();
    let grad_min = grad;

    let evaluate = move |x: &Point, y: &Point| -> f64 {
        let diff = x - y;
        f_eval(y)
            + frob_dot(&grad_eval(y).view(), &diff.view())
            + 0.5 * l * frob_dot(&diff.view(), &diff.view())
    };
    let gradient = move |x: &Point, y: &Point| -> Point { &grad_grad(y) + &(l * &(x - y)) };
    let minimize = move |y: &Point| -> Result<Point> {
        let mut out = y - &(&grad_min(y) / l);
        if let Some(fl) = floor {
            out.mapv_inplace(|v| v.max(fl));
        }
        Ok(out)
    };

    Ok(MajorizerSpec::new(
        MajorizerKind::Lipschitz,
        Box::new(evaluate),
        Box::new(gradient),
        Some(Box::new(minimize)),
    ))
}

/// Bregman majorizer with kernel kappa:
/// f(y) + <grad f(y), x-y> + L (kappa(x) - kappa(y) - <grad kappa(y), x-y>).
/// Evaluation-only (no closed-form minimizer); used as validator scaffolding.
pub fn bregman_majorizer<'a, F, G, K, GK>(
    f: F,
    grad_f: G,
    kappa: K,
    grad_kappa: GK,
    l: f64,
) -> Result<MajorizerSpec<'a>>
where
    F: Fn(&Point) -> f64 + Send + Sync + 'a,
    G: Fn(&Point) -> Point + Send + Sync + Clone + 'a,
    K: Fn(&Point) -> f64 + Send + Sync + Clone + 'a,
    GK: Fn(&Point) -> Point + Send + Sync + Clone + 'a,
{
    if !(l > 0.0) {
        return Err(Error::InvalidParameter("L must be positive".into()));
    }
    let kappa_eval = kappa;
    let gk_eval = grad_kappa.clone();
    let gk_grad = grad_kappa;
    let gf_eval = grad_f.clone();
    let gf_grad = grad_f;

    let evaluate = move |x: &Point, y: &Point| -> f64 {
        let diff = x - y;
        f(y) + frob_dot(&gf_eval(y).view(), &diff.view())
            + l * (kappa_eval(x) - kappa_eval(y) - frob_dot(&gk_eval(y).view(), &diff.view()))
    };
    let gradient =
        move |x: &Point, y: &Point| -> Point { &gf_grad(y) + &(&(&gk_grad(x) - &gk_grad(y)) * l) };

    Ok(MajorizerSpec::new(
        MajorizerKind::Bregman,
        Box::new(evaluate),
        Box::new(gradient),
        None,
    ))
}

/// Outcome of sampling-based majorizer validation.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// max over samples of |g(xt, xt) - f(xt)|.
    pub max_tightness_violation: f64,
    /// min over sample pairs of g(x, xt) - f(x); negative means domination
    /// fails.
    pub min_domination_margin: f64,
    /// max over samples of ||grad_1 g(xt, xt) - grad f(xt)|| / (1 + ||grad f||),
    /// with grad f from central finite differences.
    pub max_gradient_mismatch: f64,
    pub samples: usize,
}

impl ValidationReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_tightness_violation <= tol
            && self.min_domination_margin >= -tol
            && self.max_gradient_mismatch <= tol
    }
}

fn fd_gradient(f: &dyn Fn(&Point) -> f64, x: &Point) -> Point {
    let mut g = Point::zeros(x.dim());
    let mut xp = x.clone();
    for idx in ndarray::indices(x.dim()) {
        let h = 1e-6 * (1.0 + x[idx].abs());
        let orig = x[idx];
        xp[idx] = orig + h;
        let fp = f(&xp);
        xp[idx] = orig - h;
        let fm = f(&xp);
        xp[idx] = orig;
        g[idx] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Checks tightness, domination, and gradient agreement of `spec` against `f`
/// on sampled feasible points.
pub fn validate_majorizer(
    spec: &MajorizerSpec,
    f: &dyn Fn(&Point) -> f64,
    sampler: &mut dyn FnMut() -> Point,
    n_samples: usize,
    _tol: f64,
) -> ValidationReport {
    let mut max_tight: f64 = 0.0;
    let mut min_dom = f64::INFINITY;
    let mut max_grad: f64 = 0.0;
    for _ in 0..n_samples {
        let anchor = sampler();
        let probe = sampler();

        let tight = (spec.evaluate(&anchor, &anchor) - f(&anchor)).abs();
        max_tight = max_tight.max(tight);

        let dom = spec.evaluate(&probe, &anchor) - f(&probe);
        min_dom = min_dom.min(dom);

        let g_spec = spec.gradient_at_first(&anchor, &anchor);
        let g_fd = fd_gradient(f, &anchor);
        let diff = &g_spec - &g_fd;
        let denom = 1.0 + frob_dot(&g_fd.view(), &g_fd.view()).sqrt();
        max_grad = max_grad.max(frob_dot(&diff.view(), &diff.view()).sqrt() / denom);
    }
    ValidationReport {
        max_tightness_violation: max_tight,
        min_domination_margin: min_dom,
        max_gradient_mismatch: max_grad,
        samples: n_samples,
    }
}

/// Three-point residual of the mirror-descent step defined by `spec` at
/// anchor `z`: with xi = g(., z), B its Bregman distance, and
/// z+ = argmin phi + B(., z),
/// returns [phi(u) + B(u, z)] - [phi(z+) + B(z+, z) + B(u, z+)].
/// Nonnegative (up to rounding) when the surrogate is convex.
pub fn three_point_check(
    spec: &MajorizerSpec,
    phi: &dyn Fn(&Point) -> f64,
    z: &Point,
    u: &Point,
) -> Result<f64> {
    let z_plus = spec.minimize(z)?;
    let xi = |a: &Point| spec.evaluate(a, z);
    let grad_xi = |a: &Point| spec.gradient_at_first(a, z);
    let bregman = |a: &Point, b: &Point| -> f64 {
        let diff = a - b;
        xi(a) - xi(b) - frob_dot(&grad_xi(b).view(), &diff.view())
    };
    let lhs = phi(u) + bregman(u, z);
    let rhs = phi(&z_plus) + bregman(&z_plus, z) + bregman(u, &z_plus);
    Ok(lhs - rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divergence::big_d_beta;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const EPS: f64 = f64::EPSILON;

    fn beta(v: f64) -> Beta {
        Beta::new(v).unwrap()
    }

    /// Golden-section minimizer, the independent 1-D oracle.
    fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;
        let mut c = hi - inv_phi * (hi - lo);
        let mut d = lo + inv_phi * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..200 {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - inv_phi * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + inv_phi * (hi - lo);
                fd = f(d);
            }
            if (hi - lo).abs() < 1e-13 * (1.0 + lo.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    fn objective_for(v: Array1<f64>, w: Array2<f64>, b: Beta) -> impl Fn(&Point) -> f64 {
        move |h: &Point| {
            let vm = v.view().insert_axis(Axis(1));
            big_d_beta(&vm, &w.view(), &h.view(), b).unwrap()
        }
    }

    #[test]
    fn jensen_is_tight_at_anchor() {
        let v = array![1.0, 2.0, 0.5];
        let w = array![[0.5, 1.0], [1.5, 0.2], [0.3, 0.9]];
        let ht = to_point(array![0.8, 1.2]);
        for b in [1.0, 1.25, 1.5, 2.0] {
            let spec = jensen_beta_majorizer(&v, &w, beta(b), EPS).unwrap();
            let f = objective_for(v.clone(), w.clone(), beta(b));
            let g = spec.evaluate(&ht, &ht);
            let fv = f(&ht);
            assert!(
                ((g - fv) / fv.abs().max(1.0)).abs() < 1e-12,
                "beta {b}: {g} vs {fv}"
            );
        }
    }

    #[test]
    fn jensen_minimize_scalar_kl_example() {
        // m = r = 1, v = 2, W = 1, ht = 1, beta = 1: the update lands on 2.
        let v = array![2.0];
        let w = array![[1.0]];
        let spec = jensen_beta_majorizer(&v, &w, beta(1.0), EPS).unwrap();
        let ht = to_point(array![1.0]);
        let h = spec.minimize(&ht).unwrap();
        assert!((h[[0, 0]] - 2.0).abs() < 1e-12);

        // independent 1-D minimization of g over [eps, 10]
        let g1d = |x: f64| spec.evaluate(&to_point(array![x]), &ht);
        let xmin = golden_min(&g1d, EPS, 10.0);
        assert!((xmin - 2.0).abs() < 1e-6, "golden got {xmin}");
    }

    #[test]
    fn jensen_minimize_scalar_least_squares_example() {
        // m = r = 1, W = 2, ht = 1, v = 6, beta = 2: W^T v / W^T W = 12 / 4.
        let v = array![6.0];
        let w = array![[2.0]];
        let spec = jensen_beta_majorizer(&v, &w, beta(2.0), EPS).unwrap();
        let ht = to_point(array![1.0]);
        let h = spec.minimize(&ht).unwrap();
        assert!((h[[0, 0]] - 3.0).abs() < 1e-12);
        let g1d = |x: f64| spec.evaluate(&to_point(array![x]), &ht);
        let xmin = golden_min(&g1d, EPS, 10.0);
        assert!((xmin - 3.0).abs() < 1e-6);
    }

    #[test]
    fn jensen_minimize_matches_coordinatewise_golden_section() {
        // The majorizer is separable in h, so per-coordinate golden section is
        // a global minimizer; compare objective values.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for b in [1.0, 1.25, 1.5, 2.0] {
            for _ in 0..10 {
                let m = rng.gen_range(2..=6);
                let r = rng.gen_range(1..=3);
                let v = Array1::from_shape_fn(m, |_| rng.gen_range(0.05..2.0));
                let w = Array2::from_shape_fn((m, r), |_| rng.gen_range(0.05..1.5));
                let ht_vec = Array1::from_shape_fn(r, |_| rng.gen_range(0.1..1.5));
                let ht = to_point(ht_vec.clone());
                let spec = jensen_beta_majorizer(&v, &w, beta(b), EPS).unwrap();
                let h_mu = spec.minimize(&ht).unwrap();

                let mut h_gs = ht_vec.clone();
                for k in 0..r {
                    let spec_ref = &spec;
                    let ht_ref = &ht;
                    let h_base = h_gs.clone();
                    let g1d = move |x: f64| {
                        let mut hv = h_base.clone();
                        hv[k] = x;
                        spec_ref.evaluate(&to_point(hv), ht_ref)
                    };
                    let hi = (3.0 * h_mu[[k, 0]]).max(10.0);
                    h_gs[k] = golden_min(&g1d, EPS, hi);
                }
                let g_mu = spec.evaluate(&h_mu, &ht);
                let g_gs = spec.evaluate(&to_point(h_gs), &ht);
                let gap = (g_mu - g_gs) / g_gs.abs().max(1.0);
                assert!(gap <= 1e-8, "beta {b}: MU {g_mu} vs golden {g_gs}");
            }
        }
    }

    #[test]
    fn hessian_diag_kl_scalar_example() {
        // beta = 1, m = r = 1, v = 2, W = 1, ht = 1, h = 1:
        // (W vt / ht) d''(v, vt h / ht) with d''_1(x, y) = x / y^2 gives 2.
        let v = array![2.0];
        let w = array![[1.0]];
        let h = array![1.0];
        let hd = jensen_hessian_diag(&v, &w, &h, &h, beta(1.0)).unwrap();
        assert!((hd[0] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn hessian_diag_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for b in [1.0, 1.5, 2.0] {
            let m = 4;
            let r = 3;
            let v = Array1::from_shape_fn(m, |_| rng.gen_range(0.1..2.0));
            let w = Array2::from_shape_fn((m, r), |_| rng.gen_range(0.1..1.5));
            let ht = Array1::from_shape_fn(r, |_| rng.gen_range(0.2..1.5));
            let h = Array1::from_shape_fn(r, |_| rng.gen_range(0.2..1.5));
            let spec = jensen_beta_majorizer(&v, &w, beta(b), EPS).unwrap();
            let hd = jensen_hessian_diag(&v, &w, &h, &ht, beta(b)).unwrap();
            let anchor = to_point(ht.clone());
            for k in 0..r {
                let step = 1e-5 * (1.0 + h[k]);
                let eval_at = |x: f64| {
                    let mut hv = h.clone();
                    hv[k] = x;
                    spec.evaluate(&to_point(hv), &anchor)
                };
                let fd = (eval_at(h[k] + step) - 2.0 * eval_at(h[k]) + eval_at(h[k] - step))
                    / (step * step);
                let rel = ((hd[k] - fd) / fd.abs().max(1e-6)).abs();
                assert!(rel <= 1e-4, "beta {b} coord {k}: {} vs {fd}", hd[k]);
            }
            assert!(hd.iter().all(|&x| x > 0.0));
        }
    }

    #[test]
    fn hessian_diag_positive_on_compact_box() {
        // implementable lower-bound check: strictly positive over the box
        // {eps <= h, ht <= B, eps <= W <= B} when v has positive entries
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut min_seen = f64::INFINITY;
        for _ in 0..500 {
            let v = Array1::from_shape_fn(3, |_| rng.gen_range(0.5..2.0));
            let w = Array2::from_shape_fn((3, 2), |_| rng.gen_range(0.1..3.0));
            let h = Array1::from_shape_fn(2, |_| rng.gen_range(0.1..3.0));
            let ht = Array1::from_shape_fn(2, |_| rng.gen_range(0.1..3.0));
            let hd = jensen_hessian_diag(&v, &w, &h, &ht, beta(1.5)).unwrap();
            min_seen = min_seen.min(hd.iter().cloned().fold(f64::INFINITY, f64::min));
        }
        assert!(min_seen > 1e-6, "min hessian entry {min_seen}");
    }

    #[test]
    fn logdet_l_constant_cases() {
        // zero anchor: (delta I)^-1 has spectral norm 1/delta, so L = 2/delta
        let w0 = Array2::<f64>::zeros((4, 2));
        let (_, params) = logdet_majorizer(&w0, 1.0, 0.0).unwrap();
        assert!((params.l_phi1 - 2.0).abs() < 1e-12);
        let (_, params) = logdet_majorizer(&w0, 0.1, 0.0).unwrap();
        assert!((params.l_phi1 - 20.0).abs() < 1e-10);
    }

    #[test]
    fn logdet_majorizer_dominates() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let wt = Array2::from_shape_fn((5, 3), |_| rng.gen_range(0.0..1.0));
        let delta = 1.0;
        let (spec, params) = logdet_majorizer(&wt, delta, 0.0).unwrap();
        assert!(params.l_phi1 <= 2.0 / delta + 1e-12);
        let phi = |w: &Point| {
            let gram = w.t().dot(w);
            logdet_shifted(&gram.view(), delta).unwrap()
        };
        for _ in 0..100 {
            let w = Array2::from_shape_fn((5, 3), |_| rng.gen_range(0.0..1.5));
            let g = spec.evaluate(&w, &wt);
            let f = phi(&w);
            assert!(g >= f - 1e-9, "majorizer {g} below objective {f}");
        }
        // tight at the anchor
        assert!((spec.evaluate(&wt, &wt) - phi(&wt)).abs() < 1e-10);
    }

    #[test]
    fn validator_accepts_jensen_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for b in [1.0, 1.25, 1.5, 2.0] {
            for _ in 0..13 {
                let m = rng.gen_range(2..=5);
                let r = rng.gen_range(1..=3);
                let v = Array1::from_shape_fn(m, |_| rng.gen_range(0.1..2.0));
                let w = Array2::from_shape_fn((m, r), |_| rng.gen_range(0.1..1.5));
                let spec = jensen_beta_majorizer(&v, &w, beta(b), EPS).unwrap();
                let f = objective_for(v.clone(), w.clone(), beta(b));
                let mut sampler_rng = ChaCha8Rng::seed_from_u64(rng.gen());
                let mut sampler = move || {
                    to_point(Array1::from_shape_fn(r, |_| {
                        sampler_rng.gen_range(0.2..2.0)
                    }))
                };
                let report = validate_majorizer(&spec, &f, &mut sampler, 15, 1e-6);
                assert!(
                    report.passes(1e-6),
                    "beta {b}: tight {} dom {} grad {}",
                    report.max_tightness_violation,
                    report.min_domination_margin,
                    report.max_gradient_mismatch
                );
            }
        }
    }

    #[test]
    fn validator_rejects_broken_surrogate() {
        let v = array![1.0, 2.0];
        let w = array![[0.5, 1.0], [1.5, 0.2]];
        let b = beta(1.5);
        let honest = jensen_beta_majorizer(&v, &w, b, EPS).unwrap();
        // shift the surrogate down by 0.1: domination must fail at the anchor
        let broken = MajorizerSpec::new(
            MajorizerKind::JensenBeta,
            Box::new(move |x: &Point, y: &Point| honest.evaluate(x, y) - 0.1),
            Box::new({
                let spec = jensen_beta_majorizer(&v, &w, b, EPS).unwrap();
                move |x: &Point, y: &Point| spec.gradient_at_first(x, y)
            }),
            None,
        );
        let f = objective_for(v.clone(), w.clone(), b);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut sampler = move || to_point(Array1::from_shape_fn(2, |_| rng.gen_range(0.2..2.0)));
        let report = validate_majorizer(&broken, &f, &mut sampler, 20, 1e-6);
        assert!(report.min_domination_margin < -1e-3);
        assert!(!report.passes(1e-6));
    }

    #[test]
    fn validator_accepts_logdet_quadratic() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let delta = 0.5;
        let wt = Array2::from_shape_fn((4, 2), |_| rng.gen_range(0.1..1.0));
        let (spec, _) = logdet_majorizer(&wt, delta, 0.0).unwrap();
        let f = move |w: &Point| {
            let gram = w.t().dot(w);
            logdet_shifted(&gram.view(), delta).unwrap()
        };
        let mut sampler = move || Array2::from_shape_fn((4, 2), |_| rng.gen_range(0.1..1.2));
        let report = validate_majorizer(&spec, &f, &mut sampler, 50, 1e-6);
        assert!(
            report.passes(1e-6),
            "tight {} dom {} grad {}",
            report.max_tightness_violation,
            report.min_domination_margin,
            report.max_gradient_mismatch
        );
    }

    #[test]
    fn lipschitz_majorizer_on_quadratic_is_exact_everywhere() {
        // f(x) = x^T x with L = 2: the majorizer equals f, margins are zero
        let f = |x: &Point| frob_dot(&x.view(), &x.view());
        let grad = |x: &Point| 2.0 * x;
        let spec = lipschitz_majorizer(f, grad, 2.0, None).unwrap();
        let x = to_point(array![1.0, -2.0]);
        let y = to_point(array![0.3, 0.7]);
        assert!((spec.evaluate(&x, &y) - f(&x)).abs() < 1e-12);
        let min = spec.minimize(&y).unwrap();
        assert!(min.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn bregman_majorizer_with_quadratic_kernel_dominates() {
        // f(x) = x^T x, kernel kappa = ||x||^2, L = 1 makes L kappa - f convex
        let f = |x: &Point| frob_dot(&x.view(), &x.view());
        let grad_f = |x: &Point| 2.0 * x;
        let kappa = |x: &Point| frob_dot(&x.view(), &x.view());
        let grad_kappa = |x: &Point| 2.0 * x;
        let spec = bregman_majorizer(f, grad_f, kappa, grad_kappa, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = to_point(array![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            let y = to_point(array![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)]);
            assert!(spec.evaluate(&x, &y) >= f(&x) - 1e-12);
            assert!((spec.evaluate(&y, &y) - f(&y)).abs() < 1e-12);
        }
        assert!(!spec.has_minimizer());
    }

    fn linearization_of(
        v: Array1<f64>,
        w: Array2<f64>,
        b: Beta,
        z: Point,
    ) -> impl Fn(&Point) -> f64 {
        // phi(u) = f(z) + <grad f(z), u - z>, the linear part of the mirror
        // descent step
        move |u: &Point| {
            let vm = v.view().insert_axis(Axis(1));
            let fz = big_d_beta(&vm, &w.view(), &z.view(), b).unwrap();
            let g = crate::divergence::grad_h(&vm, &w.view(), &z.view(), b).unwrap();
            let diff = u - &z;
            fz + frob_dot(&g.view(), &diff.view())
        }
    }

    #[test]
    fn three_point_residual_zero_at_minimizer() {
        let v = array![1.5, 0.7];
        let w = array![[0.8, 0.4], [0.2, 1.1]];
        let b = beta(1.5);
        let spec = jensen_beta_majorizer(&v, &w, b, EPS).unwrap();
        let z = to_point(array![0.9, 1.1]);
        let z_plus = spec.minimize(&z).unwrap();
        let phi = linearization_of(v.clone(), w.clone(), b, z.clone());
        let res = three_point_check(&spec, &phi, &z, &z_plus).unwrap();
        assert!(res.abs() < 1e-10, "residual {res}");
    }

    #[test]
    fn three_point_residual_nonnegative_on_random_jensen_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for b in [1.0, 1.5, 2.0] {
            for _ in 0..7 {
                let m = rng.gen_range(2..=5);
                let r = rng.gen_range(1..=3);
                let v = Array1::from_shape_fn(m, |_| rng.gen_range(0.1..2.0));
                let w = Array2::from_shape_fn((m, r), |_| rng.gen_range(0.1..1.5));
                let spec = jensen_beta_majorizer(&v, &w, beta(b), EPS).unwrap();
                let z = to_point(Array1::from_shape_fn(r, |_| rng.gen_range(0.3..1.5)));
                let u = to_point(Array1::from_shape_fn(r, |_| rng.gen_range(0.3..1.5)));
                let phi = linearization_of(v.clone(), w.clone(), beta(b), z.clone());
                let res = three_point_check(&spec, &phi, &z, &u).unwrap();
                assert!(res >= -1e-9, "beta {b}: residual {res}");
            }
        }
    }

    #[test]
    fn three_point_residual_at_u_equals_z() {
        let v = array![1.0, 2.0];
        let w = array![[0.5, 1.0], [1.5, 0.2]];
        let b = beta(1.0);
        let spec = jensen_beta_majorizer(&v, &w, b, EPS).unwrap();
        let z = to_point(array![0.8, 1.3]);
        let phi = linearization_of(v.clone(), w.clone(), b, z.clone());
        let res = three_point_check(&spec, &phi, &z, &z).unwrap();
        assert!(res >= -1e-12, "residual {res}");
    }
}
