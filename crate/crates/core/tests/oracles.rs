//! Hand-derived reference values checked against the library.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use tarst_core::linalg::{median, svd};
use tarst_core::metrics::{rrse, summarize};
use tarst_core::svht::{
    hard_threshold, lambda_star, mp_cdf, mp_median, omega, threshold_for_unfolding, ThresholdRule,
};
use tarst_core::{hosvd, reconstruct, tarst, AspectRatio, DenseTensor, Matrix, Shape};

fn beta(b: f64) -> AspectRatio {
    AspectRatio::new(b).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Median from a plain midpoint-rule CDF over the MP support.
fn mp_median_midpoint(b: f64) -> f64 {
    let (lo, hi) = ((1.0 - b.sqrt()).powi(2), (1.0 + b.sqrt()).powi(2));
    let density = |x: f64| ((hi - x) * (x - lo)).max(0.0).sqrt() / (2.0 * std::f64::consts::PI * b * x);
    let cdf = |t: f64| {
        let n = 200_000;
        let h = (t - lo) / n as f64;
        (0..n).map(|i| density(lo + (i as f64 + 0.5) * h)).sum::<f64>() * h
    };
    bisect(|t| cdf(t) - 0.5, lo, hi)
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
}

#[test]
fn lambda_star_closed_forms() {
    assert!((lambda_star(beta(1.0)) - 4.0 / 3f64.sqrt()).abs() < 1e-12);
    // beta -> 0 limit is sqrt(2)
    assert!((lambda_star(beta(1e-12)) - 2f64.sqrt()).abs() < 1e-6);
    // beta = 1/4: b^2 + 14b + 1 = 4.5625
    let expect = (2.0 * 1.25 + 2.0 / (1.25 + 4.5625f64.sqrt())).sqrt();
    assert!((lambda_star(beta(0.25)) - expect).abs() < 1e-12);
}

#[test]
fn mp_median_at_one_matches_angle_equation() {
    let theta = bisect(
        |t| 4.0 * t + 2.0 * (2.0 * t).sin() - std::f64::consts::PI,
        0.0,
        std::f64::consts::FRAC_PI_2,
    );
    let oracle = 4.0 * theta.sin().powi(2);
    let mu = mp_median(beta(1.0)).unwrap();
    assert!((mu - oracle).abs() < 1e-9, "{mu} vs {oracle}");
    assert!((mu - 0.652_776).abs() < 1e-6);
}

#[test]
fn mp_median_matches_midpoint_rule() {
    for b in [0.05, 0.1, 0.25, 0.5, 0.8] {
        let mu = mp_median(beta(b)).unwrap();
        let oracle = mp_median_midpoint(b);
        assert!((mu - oracle).abs() < 1e-5, "beta {b}: {mu} vs {oracle}");
        assert!((mp_cdf(beta(b), mu) - 0.5).abs() < 1e-10);
    }
}

#[test]
fn omega_at_one() {
    let w = omega(beta(1.0)).unwrap();
    let expect = 4.0 / 3f64.sqrt() / mp_median(beta(1.0)).unwrap().sqrt();
    assert!((w - expect).abs() < 1e-12);
    assert!((w - 2.8584).abs() < 1e-3);
}

#[test]
fn wide_noise_median_matches_marchenko_pastur() {
    // 100 x 400: beta = 1/4, eigenvalues of X X^T / 400 follow MP(1/4)
    let (m, n) = (100, 400);
    let mu = mp_median(beta(0.25)).unwrap();
    for seed in 0..3 {
        let s = svd(&gaussian_matrix(m, n, 40 + seed)).unwrap().s;
        let eig: Vec<f64> = s.iter().map(|v| v * v / n as f64).collect();
        let emp = median(&eig).unwrap();
        assert!((emp / mu - 1.0).abs() < 0.05, "seed {seed}: {emp} vs {mu}");
    }
}

#[test]
fn known_sigma_threshold_clears_pure_noise() {
    // top singular value of n x n noise is about 2 sqrt(n) sigma < (4/sqrt 3) sqrt(n) sigma
    let sigma = 0.5;
    let m = gaussian_matrix(100, 100, 3) * sigma;
    let s = svd(&m).unwrap().s;
    let tau = threshold_for_unfolding(100, 100, &ThresholdRule::KnownSigma(sigma), &s).unwrap();
    assert!((tau - 4.0 / 3f64.sqrt() * 10.0 * sigma).abs() < 1e-12);
    assert_eq!(hard_threshold(&s, tau).rank, 0);
}

#[test]
fn median_threshold_on_pure_noise_is_near_known_sigma_threshold() {
    let sigma = 2.0;
    let m = gaussian_matrix(200, 200, 9) * sigma;
    let s = svd(&m).unwrap().s;
    let known = threshold_for_unfolding(200, 200, &ThresholdRule::KnownSigma(sigma), &s).unwrap();
    let data = threshold_for_unfolding(200, 200, &ThresholdRule::MedianBased, &s).unwrap();
    assert!((data / known - 1.0).abs() < 0.05, "{data} vs {known}");
}

#[test]
fn mode_product_matches_explicit_sum() {
    let shape = Shape::new(vec![3, 4, 2]).unwrap();
    let t = DenseTensor::from_fn(shape, |i| (i[0] + 10 * i[1] + 100 * i[2]) as f64);
    let u = Matrix::from_fn(5, 4, |a, b| (a as f64) - 0.5 * b as f64);
    let p = t.mode_product(&u, 1).unwrap();
    assert_eq!(p.dims(), &[3, 5, 2]);
    for i in 0..3 {
        for a in 0..5 {
            for k in 0..2 {
                let expect: f64 = (0..4).map(|j| u[(a, j)] * t.get(&[i, j, k])).sum();
                assert_eq!(p.get(&[i, a, k]), expect);
            }
        }
    }
}

#[test]
fn unfolding_uses_first_index_fastest_columns() {
    let shape = Shape::new(vec![2, 3, 4]).unwrap();
    let t = DenseTensor::from_fn(shape, |i| (i[0] * 100 + i[1] * 10 + i[2]) as f64);
    let m1 = t.unfold(1).unwrap();
    for i0 in 0..2 {
        for i1 in 0..3 {
            for i2 in 0..4 {
                // column index of the remaining modes (0, 2), mode 0 fastest
                assert_eq!(m1[(i1, i0 + 2 * i2)], t.get(&[i0, i1, i2]));
            }
        }
    }
}

#[test]
fn rank_one_outer_product_is_recovered_exactly() {
    let (a, b, c) = ([1.0, -2.0, 0.5], [3.0, 1.0, 0.0, 2.0], [1.0, 4.0]);
    let t = DenseTensor::from_fn(Shape::new(vec![3, 4, 2]).unwrap(), |i| a[i[0]] * b[i[1]] * c[i[2]]);
    let est = reconstruct(&hosvd(&t, &[1, 1, 1]).unwrap()).unwrap();
    assert!(rrse(&est, &t).unwrap() < 1e-12);
    let rep = tarst(&t, &ThresholdRule::KnownSigma(1e-8)).unwrap();
    assert_eq!(rep.estimated_ranks, vec![1, 1, 1]);
    assert!(rrse(&rep.estimate().unwrap(), &t).unwrap() < 1e-12);
}

#[test]
fn student_t_interval_for_three_points() {
    // mean 2, sd 1, t(0.975, 2) = 4.302652729911275
    let s = summarize(&[1.0, 2.0, 3.0]).unwrap();
    assert_eq!(s.mean, 2.0);
    assert!((s.half_width() - 4.302_652_729_911_275 / 3f64.sqrt()).abs() < 1e-9);
}

#[test]
fn baseline_error_of_pure_noise_estimate() {
    // ||E|| / ||X|| with X = 1 everywhere and iid N(0, s^2) noise: about s
    let shape = Shape::new(vec![30, 30, 30]).unwrap();
    let x = DenseTensor::from_fn(shape, |_| 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y = x.map(|v| v + 0.3 * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
    let r = rrse(&y, &x).unwrap();
    assert!((r - 0.3).abs() < 0.01, "{r}");
}

#[test]
fn published_threshold_values() {
    let known = threshold_for_unfolding(100, 100, &ThresholdRule::KnownSigma(1.0), &[1.0; 100]).unwrap();
    assert!((known - 23.094).abs() < 1e-3);
    let data = threshold_for_unfolding(100, 100, &ThresholdRule::MedianBased, &[1.0; 100]).unwrap();
    assert!((data - 2.858).abs() < 1e-3);
    assert!((lambda_star(beta(1.0)) - 2.309).abs() < 1e-3);
    let boundary = hard_threshold(&[2.0, 2.0, 2.0], 2.0);
    assert_eq!((boundary.rank, boundary.kept), (3, vec![2.0, 2.0, 2.0]));
}
