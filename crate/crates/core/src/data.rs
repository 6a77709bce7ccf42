use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis, ShapeBuilder};

use crate::error::{check_dim, IrwError, Result};

/// Response vector and design matrix of a linear model `y = X beta + eps`.
///
/// The design is stored column-major so column sweeps (`X beta` for sparse
/// `beta`, `X^T r`) touch contiguous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: Array1<f64>,
    x: Array2<f64>,
    intercept: bool,
}

impl Dataset {
    pub fn new(y: Array1<f64>, x: Array2<f64>) -> Result<Self> {
        let (n, d) = x.dim();
        if n == 0 || d == 0 {
            return Err(IrwError::InvalidData(format!(
                "design must be non-empty, got {n}x{d}"
            )));
        }
        check_dim("response length", n, y.len())?;
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(IrwError::InvalidData("non-finite entry in data".into()));
        }
        let mut xf = Array2::zeros((n, d).f());
        xf.assign(&x);
        Ok(Dataset {
            y,
            x: xf,
            intercept: false,
        })
    }

    /// Prepend a column of ones that stays unpenalized during fitting.
    pub fn with_intercept(self) -> Self {
        if self.intercept {
            return self;
        }
        let (n, d) = self.x.dim();
        let mut x = Array2::zeros((n, d + 1).f());
        x.column_mut(0).fill(1.0);
        x.slice_mut(s![.., 1..]).assign(&self.x);
        Dataset {
            y: self.y,
            x,
            intercept: true,
        }
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn y(&self) -> ArrayView1<'_, f64> {
        self.y.view()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.x.view()
    }

    /// Whether column 0 is an unpenalized intercept.
    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    /// Residuals `y - X beta`, skipping zero coefficients.
    pub fn residuals(&self, beta: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim("coefficient length", self.d(), beta.len())?;
        let mut r = self.y.clone();
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                r.scaled_add(-b, &self.x.column(j));
            }
        }
        Ok(r)
    }

    /// `X^T v`.
    pub fn xt_dot(&self, v: ArrayView1<f64>) -> Array1<f64> {
        self.x.t().dot(&v)
    }

    /// Sub-dataset with the given rows.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            y: self.y.select(Axis(0), rows),
            x: owned_f(self.x.select(Axis(0), rows)),
            intercept: self.intercept,
        }
    }

    /// Sub-dataset with the given columns.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        Dataset {
            y: self.y.clone(),
            x: owned_f(self.x.select(Axis(1), cols)),
            intercept: self.intercept && cols.first() == Some(&0),
        }
    }

    /// Largest absolute design entry.
    pub fn max_abs_x(&self) -> f64 {
        self.x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Upper bound on the largest eigenvalue of `X^T X / n` (Frobenius bound).
    pub fn gram_norm_bound(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>() / self.n() as f64
    }
}

fn owned_f(a: Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(a.raw_dim().f());
    out.assign(&a);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_bad_shapes_and_values() {
        assert!(Dataset::new(array![1.0], Array2::zeros((1, 0))).is_err());
        assert!(Dataset::new(array![1.0, 2.0], Array2::zeros((1, 2))).is_err());
        assert!(Dataset::new(array![f64::NAN], Array2::zeros((1, 1))).is_err());
    }

    #[test]
    fn residuals_and_selection() {
        let data = Dataset::new(
            array![1.0, 2.0, 3.0],
            array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
        )
        .unwrap();
        let r = data.residuals(array![1.0, 2.0].view()).unwrap();
        assert_eq!(r, array![0.0, 0.0, 0.0]);
        assert!(data.residuals(array![1.0].view()).is_err());
        let sub = data.select_rows(&[2, 0]);
        assert_eq!(sub.y(), array![3.0, 1.0]);
        assert_eq!(sub.x(), array![[1.0, 1.0], [1.0, 0.0]]);
        let cols = data.select_columns(&[1]);
        assert_eq!(cols.x(), array![[0.0], [1.0], [1.0]]);
        assert_eq!(data.xt_dot(array![1.0, 1.0, 1.0].view()), array![2.0, 2.0]);
    }

    #[test]
    fn intercept_column() {
        let data = Dataset::new(array![1.0, 2.0], array![[3.0], [4.0]])
            .unwrap()
            .with_intercept();
        assert!(data.has_intercept());
        assert_eq!(data.x(), array![[1.0, 3.0], [1.0, 4.0]]);
    }
}
