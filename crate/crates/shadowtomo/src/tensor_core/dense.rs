use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Row-major dense real tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let count: usize = shape.iter().product();
        if count != data.len() {
            return Err(Error::Dimension(format!(
                "shape {shape:?} needs {count} entries, got {}",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("DenseTensor::new"));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let count = shape.iter().product();
        Self {
            shape,
            data: vec![0.0; count],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    fn offset(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.shape.len(), "index rank mismatch");
        index.iter().zip(&self.shape).fold(0, |acc, (&i, &d)| {
            assert!(i < d, "index {i} out of range {d}");
            acc * d + i
        })
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::NonFinite("DenseTensor::set"));
        }
        let k = self.offset(index);
        self.data[k] = value;
        Ok(())
    }

    pub fn reshape(self, shape: Vec<usize>) -> Result<Self> {
        Self::new(shape, self.data)
    }

    /// Matricize by grouping the first `split` axes into rows.
    pub fn to_matrix(&self, split: usize) -> DMatrix<f64> {
        let rows: usize = self.shape[..split].iter().product();
        let cols: usize = self.shape[split..].iter().product();
        DMatrix::from_row_slice(rows, cols, &self.data)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            data.extend(m.row(r).iter().copied());
        }
        Self::new(vec![m.nrows(), m.ncols()], data)
    }

    /// Contract axis `a` of `self` with axis `b` of `other`; remaining axes keep their order.
    pub fn contract(&self, a: usize, other: &DenseTensor, b: usize) -> Result<DenseTensor> {
        if self.shape[a] != other.shape[b] {
            return Err(Error::Dimension(format!(
                "contracted extents {} and {} differ",
                self.shape[a], other.shape[b]
            )));
        }
        let lhs = self.move_axis_last(a);
        let rhs = other.move_axis_first(b);
        let k = self.shape[a];
        let m = lhs.data.len() / k;
        let n = rhs.data.len() / k;
        let lm = DMatrix::from_row_slice(m, k, &lhs.data);
        let rm = DMatrix::from_row_slice(k, n, &rhs.data);
        let prod = lm * rm;
        let mut shape: Vec<usize> = lhs.shape[..lhs.shape.len() - 1].to_vec();
        shape.extend_from_slice(&rhs.shape[1..]);
        let out = DenseTensor::from_matrix(&prod)?;
        out.reshape(shape)
    }

    fn permuted(&self, perm: &[usize]) -> DenseTensor {
        let shape: Vec<usize> = perm.iter().map(|&p| self.shape[p]).collect();
        let mut strides = vec![1usize; self.shape.len()];
        for i in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.shape[i + 1];
        }
        let mut data = Vec::with_capacity(self.data.len());
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..self.data.len() {
            let off: usize = idx.iter().zip(perm).map(|(&i, &p)| i * strides[p]).sum();
            data.push(self.data[off]);
            for ax in (0..shape.len()).rev() {
                idx[ax] += 1;
                if idx[ax] < shape[ax] {
                    break;
                }
                idx[ax] = 0;
            }
        }
        DenseTensor { shape, data }
    }

    fn move_axis_last(&self, a: usize) -> DenseTensor {
        let mut perm: Vec<usize> = (0..self.shape.len()).filter(|&i| i != a).collect();
        perm.push(a);
        self.permuted(&perm)
    }

    fn move_axis_first(&self, a: usize) -> DenseTensor {
        let mut perm = vec![a];
        perm.extend((0..self.shape.len()).filter(|&i| i != a));
        self.permuted(&perm)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_count_and_nan() {
        assert!(DenseTensor::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(DenseTensor::new(vec![1], vec![f64::NAN]).is_err());
    }

    #[test]
    fn contraction_matches_matrix_product() {
        let a = DenseTensor::new(vec![2, 3], (0..6).map(f64::from).collect()).unwrap();
        let b = DenseTensor::new(vec![3, 2], (0..6).map(|x| f64::from(x) * 0.5).collect()).unwrap();
        let c = a.contract(1, &b, 0).unwrap();
        let expect = a.to_matrix(1) * b.to_matrix(1);
        assert_eq!(c.shape(), &[2, 2]);
        for i in 0..2 {
            for j in 0..2 {
                assert!((c.get(&[i, j]) - expect[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn contraction_of_rank3_on_middle_axis() {
        let a = DenseTensor::new(vec![2, 3, 2], (0..12).map(f64::from).collect()).unwrap();
        let v = DenseTensor::new(vec![3], vec![1.0, -1.0, 2.0]).unwrap();
        let c = a.contract(1, &v, 0).unwrap();
        assert_eq!(c.shape(), &[2, 2]);
        for i in 0..2 {
            for k in 0..2 {
                let want: f64 = (0..3).map(|j| a.get(&[i, j, k]) * v.get(&[j])).sum();
                assert!((c.get(&[i, k]) - want).abs() < 1e-12);
            }
        }
    }
}
