//! Tucker decompositions: truncated HOSVD, HOOI, and the rank-free
//! thresholded decomposition ([`tarst`]).

use crate::error::{Error, Result};
use crate::linalg::{svd, SvdFactor};
use crate::svht::{hard_threshold, soft_threshold, threshold_for_unfolding, ThresholdRule};
use crate::tensor::{DenseTensor, Matrix, Shape};

const ORTHONORMAL_TOL: f64 = 1e-10;

/// `core x_1 U1 x_2 ... x_N UN` with orthonormal factor columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TuckerModel {
    core: DenseTensor,
    factors: Vec<Matrix>,
}

impl TuckerModel {
    pub fn new(core: DenseTensor, factors: Vec<Matrix>) -> Result<Self> {
        if factors.len() != core.order() {
            return Err(Error::DimensionMismatch(format!(
                "{} factors for an order-{} core",
                factors.len(),
                core.order()
            )));
        }
        for (k, u) in factors.iter().enumerate() {
            if u.ncols() != core.dims()[k] {
                return Err(Error::DimensionMismatch(format!(
                    "factor {k} has {} columns but core extent is {}",
                    u.ncols(),
                    core.dims()[k]
                )));
            }
            let defect = (u.transpose() * u - Matrix::identity(u.ncols(), u.ncols())).abs().max();
            if defect > ORTHONORMAL_TOL {
                return Err(Error::DimensionMismatch(format!(
                    "factor {k} columns are not orthonormal (defect {defect:e})"
                )));
            }
        }
        Ok(TuckerModel { core, factors })
    }

    pub fn core(&self) -> &DenseTensor {
        &self.core
    }

    pub fn factors(&self) -> &[Matrix] {
        &self.factors
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.core.dims().to_vec()
    }

    /// Shape of the full tensor this model represents.
    pub fn full_shape(&self) -> Shape {
        Shape::new(self.factors.iter().map(|u| u.nrows()).collect::<Vec<_>>())
            .expect("factor row counts are positive")
    }
}

/// Multiplies `t` along every mode by the corresponding matrix.
fn multi_mode_product(t: &DenseTensor, mats: &[Matrix]) -> Result<DenseTensor> {
    let mut out = t.clone();
    for (k, m) in mats.iter().enumerate() {
        out = out.mode_product(m, k)?;
    }
    Ok(out)
}

/// `y x_1 U1^T ... x_N UN^T`.
pub fn project_core(y: &DenseTensor, factors: &[Matrix]) -> Result<DenseTensor> {
    if factors.len() != y.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} factors for an order-{} tensor",
            factors.len(),
            y.order()
        )));
    }
    let transposed: Vec<Matrix> = factors.iter().map(|u| u.transpose()).collect();
    multi_mode_product(y, &transposed)
}

pub fn reconstruct(model: &TuckerModel) -> Result<DenseTensor> {
    multi_mode_product(&model.core, &model.factors)
}

fn check_ranks(y: &DenseTensor, ranks: &[usize]) -> Result<()> {
    if ranks.len() != y.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} ranks for an order-{} tensor",
            ranks.len(),
            y.order()
        )));
    }
    for (k, (&r, &d)) in ranks.iter().zip(y.dims()).enumerate() {
        if r == 0 || r > d {
            return Err(Error::RankOutOfRange {
                mode: k,
                rank: r,
                extent: d,
            });
        }
    }
    Ok(())
}

fn leading_vectors(m: &Matrix, rank: usize) -> Result<Matrix> {
    let f = svd(m)?;
    // a mode can have fewer singular vectors than its extent when the
    // unfolding is tall; pad with an orthonormal completion
    if rank <= f.len() {
        Ok(f.leading_left(rank))
    } else {
        Ok(complete_basis(&f.u, rank))
    }
}

/// Extends orthonormal columns `q` to `cols` orthonormal columns.
fn complete_basis(q: &Matrix, cols: usize) -> Matrix {
    let rows = q.nrows();
    let mut out = Matrix::zeros(rows, cols);
    out.columns_mut(0, q.ncols()).copy_from(q);
    let mut filled = q.ncols();
    for e in 0..rows {
        if filled == cols {
            break;
        }
        let mut v = nalgebra::DVector::zeros(rows);
        v[e] = 1.0;
        for _ in 0..2 {
            for j in 0..filled {
                let c = out.column(j);
                let proj = c.dot(&v);
                v -= c * proj;
            }
        }
        let n = v.norm();
        if n > 1e-8 {
            out.set_column(filled, &(v / n));
            filled += 1;
        }
    }
    out
}

/// Truncated HOSVD: leading left singular vectors of each unfolding,
/// core from the orthogonal projection.
pub fn hosvd(y: &DenseTensor, ranks: &[usize]) -> Result<TuckerModel> {
    check_ranks(y, ranks)?;
    let factors = ranks
        .iter()
        .enumerate()
        .map(|(k, &r)| leading_vectors(&y.unfold(k)?, r))
        .collect::<Result<Vec<_>>>()?;
    let core = project_core(y, &factors)?;
    Ok(TuckerModel { core, factors })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HooiOptions {
    /// Stop once the fit changes by less than this between sweeps.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for HooiOptions {
    fn default() -> Self {
        HooiOptions {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HooiOutcome {
    pub model: TuckerModel,
    /// `||core|| / ||y||`: the HOSVD initialization, then one entry per sweep.
    pub fits: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Higher-order orthogonal iteration, initialized from [`hosvd`].
pub fn hooi(y: &DenseTensor, ranks: &[usize], opts: &HooiOptions) -> Result<HooiOutcome> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidConfig(format!(
            "HOOI needs tol > 0 and max_iter >= 1, got {} and {}",
            opts.tol, opts.max_iter
        )));
    }
    let init = hosvd(y, ranks)?;
    let norm_y = y.frobenius_norm();
    let fit_of = |core: &DenseTensor| {
        if norm_y > 0.0 {
            core.frobenius_norm() / norm_y
        } else {
            1.0
        }
    };
    let mut fits = vec![fit_of(&init.core)];
    let mut factors = init.factors;
    let mut core = init.core;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iter {
        iterations += 1;
        for k in 0..y.order() {
            let mut partial = y.clone();
            for (j, u) in factors.iter().enumerate() {
                if j != k {
                    partial = partial.mode_product(&u.transpose(), j)?;
                }
            }
            factors[k] = leading_vectors(&partial.unfold(k)?, ranks[k])?;
        }
        core = project_core(y, &factors)?;
        let fit = fit_of(&core);
        let change = (fit - fits[fits.len() - 1]).abs();
        fits.push(fit);
        if change < opts.tol {
            converged = true;
            break;
        }
    }
    Ok(HooiOutcome {
        model: TuckerModel { core, factors },
        fits,
        iterations,
        converged,
    })
}

/// How singular values are shrunk when counting the retained rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Shrink {
    /// Keep values `>= tau` unchanged.
    #[default]
    Hard,
    /// `max(s - tau, 0)`; rank counts values strictly above `tau`.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TarstOptions {
    pub rule: ThresholdRule,
    pub shrink: Shrink,
}

impl TarstOptions {
    pub fn new(rule: ThresholdRule) -> Self {
        TarstOptions {
            rule,
            shrink: Shrink::Hard,
        }
    }
}

/// Per-mode outcome of thresholding one unfolding.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSummary {
    pub rows: usize,
    pub cols: usize,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
    /// Singular values after shrinkage.
    pub shrunk: Vec<f64>,
    pub retained: usize,
    pub discarded: usize,
}

#[derive(Debug, Clone)]
pub struct TarstReport {
    shape: Shape,
    /// `None` when some mode retained nothing; the estimate is then zero.
    pub model: Option<TuckerModel>,
    pub estimated_ranks: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub modes: Vec<ModeSummary>,
}

impl TarstReport {
    pub fn degenerate(&self) -> bool {
        self.model.is_none()
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// The denoised tensor.
    pub fn estimate(&self) -> Result<DenseTensor> {
        match &self.model {
            Some(m) => reconstruct(m),
            None => Ok(DenseTensor::zeros(self.shape.clone())),
        }
    }
}

/// Rank-free Tucker denoising: threshold the spectrum of every unfolding,
/// keep the surviving left singular vectors, project and reconstruct.
/// Performs exactly one SVD per mode.
pub fn tarst(y: &DenseTensor, rule: &ThresholdRule) -> Result<TarstReport> {
    tarst_with(y, &TarstOptions::new(*rule))
}

pub fn tarst_with(y: &DenseTensor, opts: &TarstOptions) -> Result<TarstReport> {
    opts.rule.validate()?;
    if !y.is_finite() {
        return Err(Error::DimensionMismatch("input tensor has non-finite entries".into()));
    }
    let mut factors = Vec::with_capacity(y.order());
    let mut modes = Vec::with_capacity(y.order());
    for k in 0..y.order() {
        let unfolded = y.unfold(k)?;
        let (rows, cols) = unfolded.shape();
        let f: SvdFactor = svd(&unfolded)?;
        let threshold = threshold_for_unfolding(rows, cols, &opts.rule, &f.s)?;
        let shrunk = match opts.shrink {
            Shrink::Hard => hard_threshold(&f.s, threshold),
            Shrink::Soft => soft_threshold(&f.s, threshold),
        };
        factors.push(f.leading_left(shrunk.rank));
        modes.push(ModeSummary {
            rows,
            cols,
            threshold,
            retained: shrunk.rank,
            discarded: f.len() - shrunk.rank,
            singular_values: f.s,
            shrunk: shrunk.kept,
        });
    }
    let estimated_ranks: Vec<usize> = modes.iter().map(|m| m.retained).collect();
    let thresholds = modes.iter().map(|m| m.threshold).collect();
    let model = if estimated_ranks.contains(&0) {
        None
    } else {
        let core = project_core(y, &factors)?;
        Some(TuckerModel { core, factors })
    };
    Ok(TarstReport {
        shape: y.shape().clone(),
        model,
        estimated_ranks,
        thresholds,
        modes,
    })
}
