use serde::Serialize;

use crate::error::{Error, Result};

/// An ordered, nonempty collection of finite data points of equal dimension.
///
/// Points are stored row-major. Duplicates are allowed and the original order
/// is preserved, so a `Sample` is a multiset with a stable enumeration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    dim: usize,
    values: Vec<f64>,
}

impl Sample {
    pub fn scalar(points: Vec<f64>) -> Result<Self> {
        Self::from_flat(1, points)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(Error::EmptySample)?;
        let mut values = Vec::with_capacity(dim * rows.len());
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(dim, values)
    }

    /// Builds a sample from `dim`-wide rows laid out contiguously.
    pub fn from_flat(dim: usize, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if dim == 0 || !values.len().is_multiple_of(dim) {
            return Err(Error::InvalidInput(format!(
                "{} values cannot be split into points of dimension {dim}",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: pos / dim,
                value: values[pos],
            });
        }
        Ok(Self { dim, values })
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    /// Always false; kept for the usual `len`/`is_empty` pairing.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.values[index * self.dim..(index + 1) * self.dim]
    }

    pub fn points(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The point values of a one-dimensional sample.
    pub fn scalars(&self) -> Result<&[f64]> {
        if self.dim == 1 {
            Ok(&self.values)
        } else {
            Err(Error::NotScalar(self.dim))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Concatenation of two samples of the same dimension.
    pub fn concat(&self, other: &Sample) -> Result<Sample> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(Sample { dim: self.dim, values })
    }
}
