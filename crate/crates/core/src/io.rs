//! Realization JSON and shared numeric formatting.

use crate::descriptor::DescriptorRealization;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use nalgebra::{DMatrix, DVector, RowDVector};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// On-disk realization: dense row-major real matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationJson {
    pub order: usize,
    #[serde(rename = "E")]
    pub e: Vec<Vec<f64>>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

fn rows<T: Real>(m: &DMatrix<T>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)].to_f64()).collect()).collect()
}

fn matrix<T: Real>(name: &str, data: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<T>> {
    if data.len() != nrows || data.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!("{name} must be {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| lit(data[i][j])))
}

impl RealizationJson {
    pub fn from_realization<T: Real>(r: &DescriptorRealization<T>) -> Self {
        Self {
            order: r.order(),
            e: rows(r.e()),
            a: rows(r.a()),
            b: r.b().iter().map(|x| vec![x.to_f64()]).collect(),
            c: vec![r.c().iter().map(|x| x.to_f64()).collect()],
            d: vec![vec![r.d().to_f64()]],
        }
    }

    pub fn to_realization<T: Real>(&self) -> Result<DescriptorRealization<T>> {
        let n = self.order;
        let e = matrix::<T>("E", &self.e, n, n)?;
        let a = matrix::<T>("A", &self.a, n, n)?;
        let b = matrix::<T>("B", &self.b, n, 1)?;
        // An order-zero C is written as [[]].
        let c = if n == 0 && (self.c.is_empty() || self.c == vec![Vec::<f64>::new()]) {
            DMatrix::zeros(1, 0)
        } else {
            matrix::<T>("C", &self.c, 1, n)?
        };
        let d = matrix::<T>("D", &self.d, 1, 1)?;
        DescriptorRealization::new(e, a, DVector::from_column_slice(b.as_slice()), RowDVector::from_row_slice(c.as_slice()), d[(0, 0)])
    }
}

pub fn save_realization<T: Real>(path: impl AsRef<Path>, r: &DescriptorRealization<T>) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(file, &RealizationJson::from_realization(r))?;
    Ok(())
}

pub fn load_realization<T: Real>(path: impl AsRef<Path>) -> Result<DescriptorRealization<T>> {
    let json: RealizationJson = serde_json::from_reader(std::io::BufReader::new(std::fs::File::open(path)?))?;
    json.to_realization()
}
