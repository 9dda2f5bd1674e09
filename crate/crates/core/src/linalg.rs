//! Thin SVD on top of nalgebra, plus the median helper used by the
//! data-driven threshold.
//!
//! Every call to [`svd`] bumps a thread-local counter so callers can verify
//! how many factorizations an algorithm performed (see [`count_svd_calls`]).

use std::cell::Cell;

use nalgebra::SVD;

use crate::error::{Error, Result};
use crate::tensor::Matrix;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

thread_local! {
    static SVD_CALLS: Cell<usize> = const { Cell::new(0) };
}

/// Thin SVD `m = u * diag(s) * vt` with `q = min(rows, cols)` triplets,
/// singular values sorted nonincreasing.
#[derive(Debug, Clone)]
pub struct SvdFactor {
    pub u: Matrix,
    pub s: Vec<f64>,
    pub vt: Matrix,
}

impl SvdFactor {
    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    /// First `k` left singular vectors as an `m x k` matrix.
    pub fn leading_left(&self, k: usize) -> Matrix {
        self.u.columns(0, k).into_owned()
    }

    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, &s) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * &self.vt
    }
}

pub fn svd(m: &Matrix) -> Result<SvdFactor> {
    SVD_CALLS.with(|c| c.set(c.get() + 1));
    let (rows, cols) = m.shape();
    let q = rows.min(cols);
    if q == 0 {
        return Ok(SvdFactor {
            u: Matrix::zeros(rows, 0),
            s: Vec::new(),
            vt: Matrix::zeros(0, cols),
        });
    }
    let raw = SVD::try_new(m.clone(), true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or(Error::SvdNonConvergence { rows, cols })?;
    let (u, vt) = match (raw.u, raw.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::SvdNonConvergence { rows, cols }),
    };
    let s = raw.singular_values;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::SvdNonConvergence { rows, cols });
    }

    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut su = Matrix::zeros(rows, q);
    let mut svt = Matrix::zeros(q, cols);
    let mut ss = Vec::with_capacity(q);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        svt.set_row(dst, &vt.row(src));
        ss.push(s[src].max(0.0));
    }
    Ok(SvdFactor { u: su, s: ss, vt: svt })
}

/// Number of [`svd`] calls made on the current thread so far.
pub fn svd_calls() -> usize {
    SVD_CALLS.with(Cell::get)
}

/// Runs `f` and reports how many SVDs it performed on this thread.
pub fn count_svd_calls<R>(f: impl FnOnce() -> R) -> (R, usize) {
    let before = svd_calls();
    let out = f();
    (out, svd_calls() - before)
}

/// Sample median; the mean of the two central values for even lengths.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

pub fn median_singular_value(f: &SvdFactor) -> Result<f64> {
    median(&f.s).ok_or(Error::EmptySpectrum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(rows: usize, cols: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    fn orthonormality_defect(q: &Matrix) -> f64 {
        let g = q.transpose() * q;
        (g - Matrix::identity(q.ncols(), q.ncols())).abs().max()
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let f = svd(&Matrix::identity(3, 3)).unwrap();
        for s in &f.s {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn rank_one_spectrum() {
        let a = nalgebra::DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let b = nalgebra::DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
        let m = &a * b.transpose() * 7.5;
        let f = svd(&m).unwrap();
        assert!((f.s[0] - 7.5).abs() < 1e-12);
        assert!(f.s[1..].iter().all(|&s| s.abs() < 1e-12));
    }

    #[test]
    fn random_wide_matrix_reconstructs() {
        let m = gaussian(10, 40, 7);
        let f = svd(&m).unwrap();
        assert_eq!(f.len(), 10);
        assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(f.s.iter().all(|&s| s >= 0.0));
        assert!(orthonormality_defect(&f.u) < 1e-10);
        assert!(orthonormality_defect(&f.vt.transpose()) < 1e-10);
        let err = (f.reconstruct() - &m).norm() / m.norm();
        assert!(err < 1e-10, "relative error {err}");
    }

    #[test]
    fn tall_matrix_is_thin() {
        let m = gaussian(30, 4, 3);
        let f = svd(&m).unwrap();
        assert_eq!(f.u.shape(), (30, 4));
        assert_eq!(f.vt.shape(), (4, 4));
        assert!((f.reconstruct() - &m).norm() / m.norm() < 1e-10);
    }

    #[test]
    fn zero_matrix_has_zero_spectrum() {
        let f = svd(&Matrix::zeros(5, 8)).unwrap();
        assert!(f.s.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn orthonormal_left_factor_preserves_spectrum() {
        let x = gaussian(6, 9, 11);
        let q = svd(&gaussian(15, 6, 12)).unwrap().u;
        let a = svd(&x).unwrap().s;
        let b = svd(&(&q * &x)).unwrap().s;
        for (p, r) in a.iter().zip(&b[..a.len()]) {
            assert!((p - r).abs() < 1e-10);
        }
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 2.0, 1.0]), Some(2.0));
        assert_eq!(median(&[4.0, 3.0, 2.0, 1.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn pure_noise_median_tracks_marchenko_pastur() {
        // median of s / sqrt(n) should sit near sqrt(mp_median(1)) = sqrt(0.6529...)
        let f = svd(&gaussian(200, 200, 5)).unwrap();
        let med = median_singular_value(&f).unwrap() / 200f64.sqrt();
        let target = crate::svht::mp_median(crate::svht::AspectRatio::new(1.0).unwrap()).unwrap().sqrt();
        assert!((med / target - 1.0).abs() < 0.05, "median {med} vs {target}");
    }

    #[test]
    fn svd_calls_are_counted() {
        let m = gaussian(4, 4, 1);
        let (_, n) = count_svd_calls(|| {
            svd(&m).unwrap();
            svd(&m).unwrap();
        });
        assert_eq!(n, 2);
    }
}
