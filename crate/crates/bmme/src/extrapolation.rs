//! Extrapolation-parameter schedules, the summability safeguard, and the
//! nonnegative-part projection applied to iterate differences.
//!
//! The raw Nesterov sequence is eta_0 = 1, eta_t = (1 + sqrt(1 + 4 eta_{t-1}^2)) / 2,
//! alpha_t = (eta_{t-1} - 1) / eta_t. The safeguard caps alpha_t at
//! c / (t^(q/2) ||P(x_t - x_{t-1})||), which keeps the series
//! sum_t alpha_t^2 ||P(x_t - x_{t-1})||^2 below c^2 sum_t t^-q < infinity.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schedule {
    Nesterov,
    Classical,
    None,
}

/// Schedule choice plus safeguard constants, shared by every block of a run.
#[derive(Debug, Clone, Copy)]
pub struct ExtrapolationConfig {
    pub schedule: Schedule,
    /// Safeguard numerator; large values leave the raw schedule untouched in
    /// practice while keeping the series summable.
    pub c: f64,
    /// Safeguard exponent, must exceed 1.
    pub q: f64,
}

impl ExtrapolationConfig {
    pub fn new(schedule: Schedule, c: f64, q: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::InvalidParameter(format!("c must be > 0, got {c}")));
        }
        if !(q > 1.0) {
            return Err(Error::InvalidParameter(format!("q must be > 1, got {q}")));
        }
        Ok(Self { schedule, c, q })
    }

    pub fn none() -> Self {
        Self {
            schedule: Schedule::None,
            c: DEFAULT_C,
            q: DEFAULT_Q,
        }
    }
}

impl Default for ExtrapolationConfig {
    fn default() -> Self {
        Self {
            schedule: Schedule::Nesterov,
            c: DEFAULT_C,
            q: DEFAULT_Q,
        }
    }
}

pub const DEFAULT_C: f64 = 1e8;
pub const DEFAULT_Q: f64 = 1.5;

/// Per-block schedule state, advanced once per outer iteration.
#[derive(Debug, Clone)]
pub struct ExtrapolationState {
    config: ExtrapolationConfig,
    eta_prev: f64,
    t: u64,
}

impl ExtrapolationState {
    pub fn new(config: ExtrapolationConfig) -> Self {
        Self {
            config,
            eta_prev: 1.0,
            t: 0,
        }
    }

    pub fn iteration(&self) -> u64 {
        self.t
    }

    /// Advances the counter and returns the raw schedule value; Nesterov and
    /// classical both give 0 at t = 1.
    pub fn next_alpha_raw(&mut self) -> f64 {
        self.t += 1;
        match self.config.schedule {
            Schedule::Nesterov => {
                let eta = 0.5 * (1.0 + (1.0 + 4.0 * self.eta_prev * self.eta_prev).sqrt());
                let alpha = (self.eta_prev - 1.0) / eta;
                self.eta_prev = eta;
                alpha
            }
            Schedule::Classical => (self.t as f64 - 1.0) / self.t as f64,
            Schedule::None => 0.0,
        }
    }

    /// Advances the counter and returns min(raw, c / (t^(q/2) delta_norm)).
    /// A zero step norm leaves the raw value (the cap is +infinity there).
    pub fn safeguarded_alpha(&mut self, delta_norm: f64) -> f64 {
        let raw = self.next_alpha_raw();
        if delta_norm > 0.0 {
            let cap = self.config.c / ((self.t as f64).powf(self.config.q / 2.0) * delta_norm);
            raw.min(cap)
        } else {
            raw
        }
    }

    /// Upper bound c^2 / t^q on alpha_t^2 ||P(delta)||^2 at the current t.
    pub fn term_cap(&self) -> f64 {
        let t = self.t.max(1) as f64;
        self.config.c * self.config.c / t.powf(self.config.q)
    }
}

/// Elementwise max(0, curr - prev), the projection P used for beta-NMF.
pub fn project_nonneg_diff(curr: &ArrayView2<f64>, prev: &ArrayView2<f64>) -> Result<Array2<f64>> {
    if curr.dim() != prev.dim() {
        return Err(Error::ShapeMismatch {
            context: "project_nonneg_diff",
            expected: format!("{:?}", curr.dim()),
            found: format!("{:?}", prev.dim()),
        });
    }
    let mut out = Array2::<f64>::zeros(curr.dim());
    ndarray::Zip::from(&mut out)
        .and(curr)
        .and(prev)
        .for_each(|o, &c, &p| *o = (c - p).max(0.0));
    Ok(out)
}
