//! Matrix ingestion/serialization, synthetic data generation, and trace
//! persistence for the benchmark harness.
//!
//! Matrices are dense and immutable after construction; all readers densify.

mod formats;
mod trace;

pub use formats::{read_matrix, write_matrix, MatrixFormat};
pub use trace::{read_trace, write_trace, ConvergenceTrace, TraceFormat, TraceRecord};

use ndarray::Array2;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};

/// Dense nonnegative real matrix. Every entry is finite and `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    data: Array2<f64>,
}

impl NonnegMatrix {
    /// Validates entries and wraps the array.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        for ((i, j), &v) in data.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteEntry { row: i, col: j });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
        Ok(Self { data })
    }

    /// Builds from a row-major buffer of length `rows * cols`.
    pub fn from_row_major(rows: usize, cols: usize, buf: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(
                "matrix dimensions must be positive".into(),
            ));
        }
        if buf.len() != rows * cols {
            return Err(Error::ShapeMismatch {
                context: "from_row_major",
                expected: format!("{} values", rows * cols),
                found: format!("{} values", buf.len()),
            });
        }
        let data = Array2::from_shape_vec((rows, cols), buf).expect("length checked above");
        Self::new(data)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn into_array(self) -> Array2<f64> {
        self.data
    }
}

/// Noise model applied to the synthetic product `W_true * H_true`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    None,
    Poisson,
    /// Additive Gaussian noise clipped at zero; the standard deviation is 5%
    /// of the mean of the clean product.
    GaussianClipped,
}

/// Parameters for synthetic low-rank data generation.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub m: usize,
    pub n: usize,
    pub r_true: usize,
    pub noise: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || self.r_true == 0 {
            return Err(Error::InvalidParameter(
                "synthetic dimensions must be positive".into(),
            ));
        }
        if self.r_true > self.m.min(self.n) {
            return Err(Error::InvalidParameter(format!(
                "r_true = {} exceeds min(m, n) = {}",
                self.r_true,
                self.m.min(self.n)
            )));
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        Ok(())
    }
}

/// Generates `(X, W_true, H_true)` with `X = noise(W_true * H_true)`.
///
/// Factor entries are drawn uniformly from `(0.1, 1] * scale` so that columns
/// stay away from zero and the KL terms remain well conditioned. Deterministic
/// for a fixed seed.
pub fn synth_lowrank(spec: &SyntheticSpec) -> Result<(NonnegMatrix, NonnegMatrix, NonnegMatrix)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let unif = Uniform::new(0.1, 1.0);
    let mut draw = |rows: usize, cols: usize| -> Array2<f64> {
        Array2::from_shape_fn((rows, cols), |_| unif.sample(&mut rng) * spec.scale)
    };
    let w = draw(spec.m, spec.r_true);
    let h = draw(spec.r_true, spec.n);
    let clean = w.dot(&h);

    let x = match spec.noise {
        NoiseKind::None => clean,
        NoiseKind::Poisson => {
            let mut noisy = clean.clone();
            for v in noisy.iter_mut() {
                let pois = Poisson::new(*v)
                    .map_err(|e| Error::InvalidParameter(format!("poisson rate {}: {e}", *v)))?;
                *v = pois.sample(&mut rng);
            }
            noisy
        }
        NoiseKind::GaussianClipped => {
            let sigma = 0.05 * clean.mean().unwrap_or(0.0);
            let gauss = rand_distr::Normal::new(0.0, sigma)
                .map_err(|e| Error::InvalidParameter(format!("gaussian sigma {sigma}: {e}")))?;
            let mut noisy = clean.clone();
            for v in noisy.iter_mut() {
                *v = (*v + gauss.sample(&mut rng)).max(0.0);
            }
            noisy
        }
    };

    Ok((
        NonnegMatrix::new(x)?,
        NonnegMatrix::new(w)?,
        NonnegMatrix::new(h)?,
    ))
}
