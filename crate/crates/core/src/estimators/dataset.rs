use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{select_columns, Matrix, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnNames {
    pub outcome: String,
    pub treatment: String,
    pub tcp: Vec<String>,
    pub ocp: Vec<String>,
    pub covariates: Vec<String>,
}

impl ColumnNames {
    pub fn generic(p_z: usize, p_w: usize, p_x: usize) -> Self {
        let seq = |prefix: &str, k: usize| (1..=k).map(|j| format!("{prefix}{j}")).collect();
        ColumnNames {
            outcome: "Y".into(),
            treatment: "D".into(),
            tcp: seq("Z", p_z),
            ocp: seq("W", p_w),
            covariates: seq("X", p_x),
        }
    }
}

/// Outcome, treatment, candidate TCPs `Z`, candidate OCPs `W` and covariates `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vector,
    pub d: Vector,
    pub z: Matrix,
    pub w: Matrix,
    pub x: Matrix,
    pub names: ColumnNames,
}

impl Dataset {
    /// Validates shapes and finiteness; rank conditions are checked where used.
    pub fn new(y: Vector, d: Vector, z: Matrix, w: Matrix, x: Matrix) -> Result<Self> {
        let names = ColumnNames::generic(z.ncols(), w.ncols(), x.ncols());
        Self::with_names(y, d, z, w, x, names)
    }

    pub fn with_names(
        y: Vector,
        d: Vector,
        z: Matrix,
        w: Matrix,
        x: Matrix,
        names: ColumnNames,
    ) -> Result<Self> {
        let n = y.len();
        for (label, rows) in [
            ("D", d.len()),
            ("Z", z.nrows()),
            ("W", w.nrows()),
            ("X", x.nrows()),
        ] {
            if rows != n {
                return Err(Error::Dimension(format!(
                    "{label} has {rows} rows, Y has {n}"
                )));
            }
        }
        if z.ncols() == 0 {
            return Err(Error::InvalidInput(
                "at least one TCP column is required".into(),
            ));
        }
        if w.ncols() == 0 {
            return Err(Error::InvalidInput(
                "at least one OCP column is required".into(),
            ));
        }
        if names.tcp.len() != z.ncols()
            || names.ocp.len() != w.ncols()
            || names.covariates.len() != x.ncols()
        {
            return Err(Error::Dimension(
                "column names do not match block widths".into(),
            ));
        }
        let p = z.ncols() + w.ncols() + x.ncols() + 1;
        if n <= p {
            return Err(Error::InvalidInput(format!("need n > {p} rows, got {n}")));
        }
        let finite = y
            .iter()
            .chain(d.iter())
            .chain(z.iter())
            .chain(w.iter())
            .chain(x.iter());
        if finite.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("data contain non-finite values".into()));
        }
        Ok(Dataset {
            y,
            d,
            z,
            w,
            x,
            names,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p_z(&self) -> usize {
        self.z.ncols()
    }

    pub fn p_w(&self) -> usize {
        self.w.ncols()
    }

    pub fn p_x(&self) -> usize {
        self.x.ncols()
    }

    /// Covariates, with a trailing column of ones when `intercept` is set.
    pub fn covariates(&self, intercept: bool) -> Matrix {
        if !intercept {
            return self.x.clone();
        }
        let n = self.n();
        let mut out = self.x.clone().insert_column(self.p_x(), 1.0);
        out.column_mut(self.p_x()).fill(1.0);
        debug_assert_eq!(out.nrows(), n);
        out
    }

    /// Rows `rows` in the given order; no shape re-validation beyond lengths.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let pick = |m: &Matrix| Matrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
        Dataset {
            y: Vector::from_iterator(rows.len(), rows.iter().map(|&i| self.y[i])),
            d: Vector::from_iterator(rows.len(), rows.iter().map(|&i| self.d[i])),
            z: pick(&self.z),
            w: pick(&self.w),
            x: pick(&self.x),
            names: self.names.clone(),
        }
    }

    /// The same data with only OCP `k` kept.
    pub fn with_single_ocp(&self, k: usize) -> Result<Dataset> {
        if k >= self.p_w() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.p_w(),
            });
        }
        let mut names = self.names.clone();
        names.ocp = vec![names.ocp[k].clone()];
        Ok(Dataset {
            w: select_columns(&self.w, &[k]),
            names,
            ..self.clone()
        })
    }

    pub fn scale_outcome(&self, c: f64) -> Dataset {
        Dataset {
            y: &self.y * c,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(n: usize) -> Dataset {
        let y = Vector::from_fn(n, |i, _| i as f64);
        let d = Vector::from_fn(n, |i, _| (i * i) as f64);
        let z = Matrix::from_fn(n, 2, |i, j| (i + j) as f64);
        let w = Matrix::from_fn(n, 1, |i, _| (2 * i) as f64);
        Dataset::new(y, d, z, w, Matrix::zeros(n, 0)).unwrap()
    }

    #[test]
    fn rejects_short_or_mismatched_inputs() {
        let z = Matrix::zeros(4, 2);
        let w = Matrix::zeros(4, 1);
        let err = Dataset::new(
            Vector::zeros(4),
            Vector::zeros(4),
            z.clone(),
            w.clone(),
            Matrix::zeros(4, 0),
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
        let err = Dataset::new(
            Vector::zeros(4),
            Vector::zeros(3),
            z,
            w,
            Matrix::zeros(4, 0),
        );
        assert!(matches!(err, Err(Error::Dimension(_))));
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut y = Vector::zeros(6);
        y[2] = f64::NAN;
        let err = Dataset::new(
            y,
            Vector::zeros(6),
            Matrix::zeros(6, 1),
            Matrix::zeros(6, 1),
            Matrix::zeros(6, 0),
        );
        assert!(matches!(err, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn intercept_column_is_appended() {
        let data = tiny(6);
        assert_eq!(data.covariates(false).ncols(), 0);
        let x = data.covariates(true);
        assert_eq!(x.shape(), (6, 1));
        assert!(x.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn row_selection_keeps_rows_aligned() {
        let data = tiny(8);
        let sub = data.select_rows(&[5, 1, 7]);
        assert_eq!(sub.y.as_slice(), &[5.0, 1.0, 7.0]);
        assert_eq!(sub.d.as_slice(), &[25.0, 1.0, 49.0]);
        assert_eq!(sub.z[(2, 1)], 8.0);
        assert_eq!(sub.w[(0, 0)], 10.0);
    }
}
