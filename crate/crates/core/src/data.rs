//! Partially linear regression data: `y = X beta + f(t) + noise`.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::{check_unit, KnotGrid};

/// Design, spline covariate and response, rows sorted by `t`.
///
/// When `standardized` is set, every column of `x` has mean zero and
/// `sum_i x_ij^2 / n = 1`; `col_means` and `col_scales` hold the raw moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: DMatrix<f64>,
    t: KnotGrid,
    y: DVector<f64>,
    standardized: bool,
    col_means: Vec<f64>,
    col_scales: Vec<f64>,
}

impl Dataset {
    /// Sort rows by `t` and standardize the columns of `x`.
    pub fn new(x: DMatrix<f64>, t: Vec<f64>, y: DVector<f64>) -> Result<Self> {
        let (x, t, y) = sort_rows(x, t, y)?;
        let (x, col_means, col_scales) = standardize(x)?;
        Ok(Self {
            x,
            t: KnotGrid::new(t)?,
            y,
            standardized: true,
            col_means,
            col_scales,
        })
    }

    /// Sort rows by `t` but keep `x` as given.
    pub fn new_unstandardized(x: DMatrix<f64>, t: Vec<f64>, y: DVector<f64>) -> Result<Self> {
        let (x, t, y) = sort_rows(x, t, y)?;
        let d = x.ncols();
        Ok(Self {
            x,
            t: KnotGrid::new(t)?,
            y,
            standardized: false,
            col_means: alloc::vec![0.0; d],
            col_scales: alloc::vec![1.0; d],
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.y.len()
    }

    #[inline]
    pub fn d(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn t(&self) -> &KnotGrid {
        &self.t
    }

    pub fn y(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn is_standardized(&self) -> bool {
        self.standardized
    }

    pub fn col_means(&self) -> &[f64] {
        &self.col_means
    }

    pub fn col_scales(&self) -> &[f64] {
        &self.col_scales
    }

    /// Same rows and knots with a different response.
    pub fn with_response(&self, y: DVector<f64>) -> Result<Self> {
        if y.len() != self.n() {
            return Err(Error::Shape {
                what: "response length differs from dataset",
            });
        }
        Ok(Self { y, ..self.clone() })
    }

    /// Keep only the listed predictor columns.
    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self {
            x: self.x.select_columns(cols),
            col_means: cols.iter().map(|&j| self.col_means[j]).collect(),
            col_scales: cols.iter().map(|&j| self.col_scales[j]).collect(),
            ..self.clone()
        }
    }

    /// Apply the stored centering and scaling to raw rows.
    pub fn standardize_rows(&self, x_raw: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if x_raw.ncols() != self.d() {
            return Err(Error::Shape {
                what: "new design has a different number of columns",
            });
        }
        let mut out = x_raw.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            col.add_scalar_mut(-self.col_means[j]);
            col /= self.col_scales[j];
        }
        Ok(out)
    }

    /// Coefficients on the raw covariate scale: `beta_j / scale_j`.
    pub fn to_original_scale(&self, beta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            beta.len(),
            beta.iter().zip(&self.col_scales).map(|(&b, &s)| b / s),
        )
    }

    /// Inverse of [`Dataset::to_original_scale`].
    pub fn to_standardized_scale(&self, beta: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            beta.len(),
            beta.iter().zip(&self.col_scales).map(|(&b, &s)| b * s),
        )
    }

    /// Constant absorbed into `f` by centering: `sum_j mean_j * beta_raw_j`.
    pub fn intercept_shift(&self, beta_original: &DVector<f64>) -> f64 {
        beta_original
            .iter()
            .zip(&self.col_means)
            .map(|(b, m)| b * m)
            .sum()
    }
}

fn sort_rows(
    x: DMatrix<f64>,
    t: Vec<f64>,
    y: DVector<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>, DVector<f64>)> {
    let n = t.len();
    if y.len() != n || x.nrows() != n {
        return Err(Error::Shape {
            what: "x, t and y must have the same number of rows",
        });
    }
    for &v in &t {
        check_unit(v)?;
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter {
            what: "x and y must be finite",
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(a.cmp(&b)));
    if order.iter().enumerate().all(|(i, &o)| i == o) {
        return Ok((x, t, y));
    }
    let xs = x.select_rows(&order);
    let ts = order.iter().map(|&i| t[i]).collect();
    let ys = DVector::from_iterator(n, order.iter().map(|&i| y[i]));
    Ok((xs, ts, ys))
}

fn standardize(mut x: DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>, Vec<f64>)> {
    let n = x.nrows() as f64;
    let mut means = Vec::with_capacity(x.ncols());
    let mut scales = Vec::with_capacity(x.ncols());
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n;
        col.add_scalar_mut(-mean);
        let scale = libm::sqrt(col.norm_squared() / n);
        if !(scale > 0.0) {
            return Err(Error::InvalidParameter {
                what: "a predictor column is constant",
            });
        }
        col /= scale;
        means.push(mean);
        scales.push(scale);
    }
    Ok((x, means, scales))
}

/// Rows sharing a `t` value collapsed to their average.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapsedRows {
    pub x: DMatrix<f64>,
    pub t: Vec<f64>,
    pub y: DVector<f64>,
    pub multiplicity: Vec<usize>,
}

/// Merge rows with tied `t` by averaging `x` and `y`; output is sorted by `t`.
pub fn collapse_ties(x: &DMatrix<f64>, t: &[f64], y: &DVector<f64>) -> Result<CollapsedRows> {
    let n = t.len();
    if y.len() != n || x.nrows() != n {
        return Err(Error::Shape {
            what: "x, t and y must have the same number of rows",
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(a.cmp(&b)));

    let d = x.ncols();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match groups.last_mut() {
            Some(g) if t[g[0]] == t[i] => g.push(i),
            _ => groups.push(alloc::vec![i]),
        }
    }
    let k = groups.len();
    let mut out = CollapsedRows {
        x: DMatrix::zeros(k, d),
        t: Vec::with_capacity(k),
        y: DVector::zeros(k),
        multiplicity: Vec::with_capacity(k),
    };
    for (r, g) in groups.iter().enumerate() {
        let w = g.len() as f64;
        for &i in g {
            for j in 0..d {
                out.x[(r, j)] += x[(i, j)] / w;
            }
            out.y[r] += y[i] / w;
        }
        out.t.push(t[g[0]]);
        out.multiplicity.push(g.len());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn standardization_moments() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 10.0, 2.0, 30.0, 3.0, 20.0, 6.0, 0.0]);
        let ds = Dataset::new(x, vec![0.4, 0.1, 0.3, 0.2], DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]))
            .unwrap();
        for col in ds.x().column_iter() {
            assert!(col.sum().abs() < 1e-12);
            assert!((col.norm_squared() / 4.0 - 1.0).abs() < 1e-12);
        }
        assert_eq!(ds.t().as_slice(), &[0.1, 0.2, 0.3, 0.4]);
        // row with t=0.1 was the second input row
        assert_eq!(ds.y()[0], 2.0);
    }

    #[test]
    fn scale_round_trip() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 5.0, 2.0, 7.0, 4.0, 6.0]);
        let ds = Dataset::new(x, vec![0.0, 0.5, 1.0], DVector::zeros(3)).unwrap();
        let b = DVector::from_vec(vec![0.3, -1.7]);
        let back = ds.to_standardized_scale(&ds.to_original_scale(&b));
        assert!((back - b).amax() < 1e-12);
    }

    #[test]
    fn rejects_ties_and_constant_columns() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(matches!(
            Dataset::new(x.clone(), vec![0.2, 0.2, 0.5], DVector::zeros(3)),
            Err(Error::UnsortedKnots { .. })
        ));
        let c = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        assert!(Dataset::new(c, vec![0.1, 0.2, 0.5], DVector::zeros(3)).is_err());
        assert!(matches!(
            Dataset::new(x, vec![0.1, 0.2, 1.5], DVector::zeros(3)),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn collapse_averages_ties() {
        let x = DMatrix::from_row_slice(4, 1, &[1.0, 3.0, 5.0, 7.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0, 9.0]);
        let c = collapse_ties(&x, &[0.5, 0.1, 0.5, 0.9], &y).unwrap();
        assert_eq!(c.t, vec![0.1, 0.5, 0.9]);
        assert_eq!(c.multiplicity, vec![1, 2, 1]);
        assert_eq!(c.y.as_slice(), &[4.0, 4.0, 9.0]);
        assert_eq!(c.x.as_slice(), &[3.0, 3.0, 7.0]);
    }
}
