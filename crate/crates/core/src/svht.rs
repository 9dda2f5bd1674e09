//! Optimal singular value hard thresholding.
//!
//! For an `m x n` matrix with `beta = min(m, n) / max(m, n)`, the optimal hard
//! threshold under white noise of level `sigma` is
//! `lambda_star(beta) * sqrt(max(m, n)) * sigma`. When `sigma` is unknown it is
//! replaced by a median-based estimate, giving `omega(beta) * y_med` where
//! `omega(beta) = lambda_star(beta) / sqrt(mu_beta)` and `mu_beta` is the
//! median of the Marchenko–Pastur law with ratio `beta`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::linalg::median;
use crate::numeric::{brent, integrate};

/// Aspect ratio `beta` of an unfolding, always in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct AspectRatio(f64);

impl AspectRatio {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta <= 1.0 {
            Ok(AspectRatio(beta))
        } else {
            Err(Error::AspectRatio(beta))
        }
    }

    /// `min(m, n) / max(m, n)`; transpose-invariant.
    pub fn of_dims(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch(format!(
                "aspect ratio of a {m}x{n} matrix"
            )));
        }
        AspectRatio::new(m.min(n) as f64 / m.max(n) as f64)
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// How the per-unfolding threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    /// Noise level known in advance.
    KnownSigma(f64),
    /// Noise level estimated from the median observed singular value.
    MedianBased,
}

impl ThresholdRule {
    pub fn known_sigma(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(ThresholdRule::KnownSigma(sigma))
        } else {
            Err(Error::InvalidSigma(sigma))
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::KnownSigma(s) => ThresholdRule::known_sigma(s).map(|_| ()),
            ThresholdRule::MedianBased => Ok(()),
        }
    }
}

/// Optimal hard-threshold coefficient for known noise level.
pub fn lambda_star(beta: AspectRatio) -> f64 {
    let b = beta.0;
    let root = (b * b + 14.0 * b + 1.0).sqrt();
    (2.0 * (b + 1.0) + 8.0 * b / ((b + 1.0) + root)).sqrt()
}

/// Support edges `((1 - sqrt b)^2, (1 + sqrt b)^2)` of the Marchenko–Pastur law.
pub fn mp_support(beta: AspectRatio) -> (f64, f64) {
    let r = beta.0.sqrt();
    ((1.0 - r).powi(2), (1.0 + r).powi(2))
}

/// Marchenko–Pastur density
/// `sqrt((b+ - x)(x - b-)) / (2 pi beta x)` on its support, zero elsewhere.
pub fn mp_density(beta: AspectRatio, x: f64) -> f64 {
    let (lo, hi) = mp_support(beta);
    if x <= lo || x >= hi {
        return 0.0;
    }
    ((hi - x) * (x - lo)).sqrt() / (2.0 * PI * beta.0 * x)
}

const QUAD_TOL: f64 = 1e-14;

// With x = c - h cos(phi), c = 1 + beta, h = 2 sqrt(beta), the density times dx
// becomes h^2 sin^2(phi) / (2 pi beta x(phi)) dphi, which is smooth on [0, pi]
// (the square-root edges of the density disappear).
fn mp_angle_integrand(beta: f64) -> impl Fn(f64) -> f64 {
    let c = 1.0 + beta;
    let h = 2.0 * beta.sqrt();
    move |phi: f64| {
        let s = phi.sin();
        let x = c - h * phi.cos();
        if x <= 0.0 {
            // only reachable at phi = 0 when beta = 1, where the limit is 2 / (2 pi)
            return (1.0 + phi.cos()) / PI;
        }
        h * h * s * s / (2.0 * PI * beta * x)
    }
}

fn angle_of(beta: f64, x: f64) -> f64 {
    let c = 1.0 + beta;
    let h = 2.0 * beta.sqrt();
    ((c - x) / h).clamp(-1.0, 1.0).acos()
}

/// Marchenko–Pastur CDF by quadrature.
pub fn mp_cdf(beta: AspectRatio, x: f64) -> f64 {
    let (lo, hi) = mp_support(beta);
    if x <= lo {
        return 0.0;
    }
    if x >= hi {
        return 1.0;
    }
    integrate(mp_angle_integrand(beta.0), 0.0, angle_of(beta.0, x), QUAD_TOL)
}

fn median_cache() -> &'static Mutex<HashMap<u64, f64>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Median `mu_beta` of the Marchenko–Pastur law: the root of `CDF(mu) = 1/2`,
/// computed by quadrature and Brent's method. Results are memoized per `beta`.
pub fn mp_median(beta: AspectRatio) -> Result<f64> {
    let key = beta.0.to_bits();
    if let Some(&mu) = median_cache().lock().unwrap().get(&key) {
        return Ok(mu);
    }
    let b = beta.0;
    let integrand = mp_angle_integrand(b);
    let residual = |phi: f64| integrate(&integrand, 0.0, phi, QUAD_TOL) - 0.5;
    let phi = brent(residual, 0.0, PI, 1e-15, 1e-13, 200)?;
    let mu = 1.0 + b - 2.0 * b.sqrt() * phi.cos();
    let (lo, hi) = mp_support(beta);
    if !(mu > lo && mu < hi) {
        return Err(Error::RootFinding(format!(
            "median {mu} escaped the support ({lo}, {hi}) for beta = {b}"
        )));
    }
    median_cache().lock().unwrap().insert(key, mu);
    Ok(mu)
}

/// Median-based threshold multiplier `lambda_star(beta) / sqrt(mu_beta)`.
pub fn omega(beta: AspectRatio) -> Result<f64> {
    Ok(lambda_star(beta) / mp_median(beta)?.sqrt())
}

/// Threshold for an `m x n` unfolding with singular values `s`.
pub fn threshold_for_unfolding(m: usize, n: usize, rule: &ThresholdRule, s: &[f64]) -> Result<f64> {
    let beta = AspectRatio::of_dims(m, n)?;
    match *rule {
        ThresholdRule::KnownSigma(sigma) => {
            ThresholdRule::known_sigma(sigma)?;
            Ok(lambda_star(beta) * (m.max(n) as f64).sqrt() * sigma)
        }
        ThresholdRule::MedianBased => {
            let med = median(s).ok_or(Error::EmptySpectrum)?;
            Ok(omega(beta)? * med)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Thresholded {
    pub kept: Vec<f64>,
    pub rank: usize,
}

/// Hard thresholding: values `>= tau` pass unchanged, the rest become zero.
pub fn hard_threshold(s: &[f64], tau: f64) -> Thresholded {
    let kept: Vec<f64> = s.iter().map(|&v| if v >= tau { v } else { 0.0 }).collect();
    let rank = s.iter().filter(|&&v| v >= tau).count();
    Thresholded { kept, rank }
}

/// Soft thresholding `max(s - tau, 0)`; rank counts strictly positive outputs.
pub fn soft_threshold(s: &[f64], tau: f64) -> Thresholded {
    let kept: Vec<f64> = s.iter().map(|&v| (v - tau).max(0.0)).collect();
    let rank = kept.iter().filter(|&&v| v > 0.0).count();
    Thresholded { kept, rank }
}
