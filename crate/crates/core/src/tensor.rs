//! Dense N-way tensors and the multilinear primitives built on them.
//!
//! Storage is first-index-fastest: the entry at multi-index `(i_1, ..., i_N)`
//! lives at `i_1 + I_1 * (i_2 + I_2 * (i_3 + ...))`. Matrices are
//! [`nalgebra::DMatrix`], which uses the same (column-major) convention.
//!
//! The mode-k unfolding is the `I_k x (P / I_k)` matrix whose column index
//! enumerates the remaining modes in their original order, first fastest:
//! with `left = I_1 ... I_{k-1}` and `l`, `r` the linear indices of the modes
//! before and after `k`, entry `(i_k, l + left * r)`.
//!
//! Modes are 0-based throughout the library API.

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Extents `(I_1, ..., I_N)` of a tensor; every extent is at least 1.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("a tensor needs at least one mode".into()));
        }
        if let Some(k) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("extent of mode {k} is zero")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape("element count overflows usize".into()))?;
        Ok(Shape(dims))
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn order(&self) -> usize {
        self.0.len()
    }

    pub fn numel(&self) -> usize {
        self.0.iter().product()
    }

    pub fn extent(&self, mode: usize) -> usize {
        self.0[mode]
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.order() {
            Ok(())
        } else {
            Err(Error::ModeOutOfRange {
                mode,
                order: self.order(),
            })
        }
    }

    /// `(left, extent, right)`: the products of extents before and after `mode`.
    fn split(&self, mode: usize) -> (usize, usize, usize) {
        let left = self.0[..mode].iter().product();
        let right = self.0[mode + 1..].iter().product();
        (left, self.0[mode], right)
    }

    fn with_extent(&self, mode: usize, extent: usize) -> Shape {
        let mut dims = self.0.clone();
        dims[mode] = extent;
        Shape(dims)
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        f.write_str(&parts.join("x"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn from_vec(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.numel() {
            return Err(Error::DimensionMismatch(format!(
                "shape {shape} holds {} values, got {}",
                shape.numel(),
                data.len()
            )));
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Shape) -> Self {
        let data = vec![0.0; shape.numel()];
        DenseTensor { shape, data }
    }

    pub fn from_fn(shape: Shape, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut idx = vec![0usize; shape.order()];
        let mut data = Vec::with_capacity(shape.numel());
        for _ in 0..shape.numel() {
            data.push(f(&idx));
            for (i, &d) in idx.iter_mut().zip(shape.dims()) {
                *i += 1;
                if *i < d {
                    break;
                }
                *i = 0;
            }
        }
        DenseTensor { shape, data }
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dims(&self) -> &[usize] {
        self.shape.dims()
    }

    pub fn order(&self) -> usize {
        self.shape.order()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn linear_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.order());
        idx.iter()
            .zip(self.dims())
            .rev()
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.linear_index(idx)]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> DenseTensor {
        DenseTensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Mode-`mode` unfolding; see the module docs for the column order.
    pub fn unfold(&self, mode: usize) -> Result<Matrix> {
        self.shape.check_mode(mode)?;
        let (left, mid, right) = self.shape.split(mode);
        let mut out = Matrix::zeros(mid, left * right);
        for r in 0..right {
            for i in 0..mid {
                let src = &self.data[left * (i + mid * r)..][..left];
                for (l, &v) in src.iter().enumerate() {
                    out[(i, l + left * r)] = v;
                }
            }
        }
        Ok(out)
    }

    /// `self x_mode u`: contracts mode `mode` with the columns of `u`.
    pub fn mode_product(&self, u: &Matrix, mode: usize) -> Result<DenseTensor> {
        self.shape.check_mode(mode)?;
        let (left, mid, right) = self.shape.split(mode);
        if u.ncols() != mid {
            return Err(Error::DimensionMismatch(format!(
                "mode-{mode} product needs {mid} matrix columns, got {}",
                u.ncols()
            )));
        }
        let rows = u.nrows();
        let shape = self.shape.with_extent(mode, rows);
        if rows == 0 {
            return Err(Error::DimensionMismatch(format!(
                "mode-{mode} product with a matrix of zero rows"
            )));
        }
        let ut = u.transpose();
        let mut data = vec![0.0; left * rows * right];
        // Each slab of fixed trailing index is a (left x mid) column-major block A;
        // its image is A * U^T.
        for r in 0..right {
            let a = DMatrixView::from_slice(&self.data[left * mid * r..][..left * mid], left, mid);
            let block = a * &ut;
            data[left * rows * r..][..left * rows].copy_from_slice(block.as_slice());
        }
        Ok(DenseTensor { shape, data })
    }

    /// Reorders modes so that mode `k` of the result is mode `perm[k]` of `self`.
    pub fn permute_modes(&self, perm: &[usize]) -> Result<DenseTensor> {
        let n = self.order();
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::DimensionMismatch(format!(
                "{perm:?} is not a permutation of {n} modes"
            )));
        }
        let dims: Vec<usize> = perm.iter().map(|&p| self.dims()[p]).collect();
        let shape = Shape::new(dims)?;
        let mut src = vec![0usize; n];
        Ok(DenseTensor::from_fn(shape, |idx| {
            for (k, &p) in perm.iter().enumerate() {
                src[p] = idx[k];
            }
            self.get(&src)
        }))
    }
}

/// Inverse of [`DenseTensor::unfold`].
pub fn fold(m: &Matrix, mode: usize, shape: &Shape) -> Result<DenseTensor> {
    shape.check_mode(mode)?;
    let (left, mid, right) = shape.split(mode);
    if m.nrows() != mid || m.ncols() != left * right {
        return Err(Error::DimensionMismatch(format!(
            "cannot fold a {}x{} matrix along mode {mode} into shape {shape}",
            m.nrows(),
            m.ncols()
        )));
    }
    let mut data = vec![0.0; shape.numel()];
    for r in 0..right {
        for i in 0..mid {
            let dst = &mut data[left * (i + mid * r)..][..left];
            for (l, v) in dst.iter_mut().enumerate() {
                *v = m[(i, l + left * r)];
            }
        }
    }
    Ok(DenseTensor {
        shape: shape.clone(),
        data,
    })
}

/// Elementwise `a * x + y`.
pub fn axpy(a: f64, x: &DenseTensor, y: &DenseTensor) -> Result<DenseTensor> {
    if x.shape != y.shape {
        return Err(Error::DimensionMismatch(format!(
            "axpy operands have shapes {} and {}",
            x.shape, y.shape
        )));
    }
    let data = x
        .data
        .iter()
        .zip(&y.data)
        .map(|(&xv, &yv)| a * xv + yv)
        .collect();
    Ok(DenseTensor {
        shape: x.shape.clone(),
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(dims: &[usize]) -> DenseTensor {
        let shape = Shape::new(dims.to_vec()).unwrap();
        let n = shape.numel();
        DenseTensor::from_vec(shape, (1..=n).map(|v| v as f64).collect()).unwrap()
    }

    #[test]
    fn shape_rejects_zero_and_empty() {
        assert!(Shape::new(vec![]).is_err());
        assert!(Shape::new(vec![3, 0, 2]).is_err());
        assert!(Shape::new(vec![usize::MAX, 3]).is_err());
    }

    #[test]
    fn unfold_is_a_bijection_on_entries() {
        let t = seq(&[2, 2, 2]);
        let m = t.unfold(0).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (2, 4));
        let mut vals: Vec<f64> = m.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        assert_eq!(vals, (1..=8).map(|v| v as f64).collect::<Vec<_>>());
    }

    #[test]
    fn unfold_column_order() {
        // t[i,j,k] = 1 + i + 2j + 4k; mode-2 columns run over (i, k), i fastest.
        let t = seq(&[2, 2, 2]);
        let m = t.unfold(1).unwrap();
        assert_eq!(m.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 2.0, 5.0, 6.0]);
        assert_eq!(m.row(1).iter().copied().collect::<Vec<_>>(), vec![3.0, 4.0, 7.0, 8.0]);
    }

    #[test]
    fn first_order_tensor_unfolds_to_column() {
        let t = seq(&[5]);
        let m = t.unfold(0).unwrap();
        assert_eq!((m.nrows(), m.ncols()), (5, 1));
        assert_eq!(m.as_slice(), t.as_slice());
    }

    #[test]
    fn unfold_mode_out_of_range() {
        let t = seq(&[2, 3]);
        assert!(matches!(t.unfold(2), Err(Error::ModeOutOfRange { mode: 2, order: 2 })));
    }

    #[test]
    fn fold_inverts_unfold() {
        let t = seq(&[2, 2, 2]);
        let m = t.unfold(0).unwrap();
        let back = fold(&m, 0, t.shape()).unwrap();
        assert_eq!(back.unfold(0).unwrap(), m);
        assert_eq!(back, t);
    }

    #[test]
    fn fold_dimension_mismatch() {
        let m = Matrix::zeros(3, 4);
        let shape = Shape::new(vec![2, 2, 2]).unwrap();
        assert!(matches!(fold(&m, 0, &shape), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn mode_product_identity_and_zero() {
        let t = seq(&[3, 4, 5]);
        for k in 0..3 {
            let d = t.dims()[k];
            assert_eq!(t.mode_product(&Matrix::identity(d, d), k).unwrap(), t);
            let z = t.mode_product(&Matrix::zeros(2, d), k).unwrap();
            assert_eq!(z.dims()[k], 2);
            assert!(z.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn mode_product_matches_elementwise_definition() {
        let t = seq(&[3, 4, 2]);
        let u = Matrix::from_fn(5, 4, |j, i| (j as f64) - 0.5 * (i as f64));
        let p = t.mode_product(&u, 1).unwrap();
        assert_eq!(p.dims(), &[3, 5, 2]);
        for a in 0..3 {
            for j in 0..5 {
                for c in 0..2 {
                    let expect: f64 = (0..4).map(|i| u[(j, i)] * t.get(&[a, i, c])).sum();
                    assert!((p.get(&[a, j, c]) - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mode_product_rejects_wrong_width() {
        let t = seq(&[3, 4]);
        assert!(t.mode_product(&Matrix::zeros(2, 3), 1).is_err());
    }

    #[test]
    fn frobenius_norm_cases() {
        let z = DenseTensor::zeros(Shape::new(vec![2, 3]).unwrap());
        assert_eq!(z.frobenius_norm(), 0.0);
        let ones = DenseTensor::from_vec(Shape::new(vec![2, 2, 2]).unwrap(), vec![1.0; 8]).unwrap();
        assert!((ones.frobenius_norm() - 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn axpy_cases() {
        let x = seq(&[2, 3]);
        let y = x.map(|v| 2.0 * v - 1.0);
        assert_eq!(axpy(0.0, &x, &y).unwrap(), y);
        let zero = DenseTensor::zeros(x.shape().clone());
        assert_eq!(axpy(1.0, &x, &zero).unwrap(), x);
        assert!(axpy(1.0, &x, &seq(&[3, 2])).is_err());
    }

    #[test]
    fn permute_modes_moves_entries() {
        let t = seq(&[2, 3, 4]);
        let p = t.permute_modes(&[2, 0, 1]).unwrap();
        assert_eq!(p.dims(), &[4, 2, 3]);
        assert_eq!(p.get(&[3, 1, 2]), t.get(&[1, 2, 3]));
        assert!(t.permute_modes(&[0, 0, 1]).is_err());
    }
}
