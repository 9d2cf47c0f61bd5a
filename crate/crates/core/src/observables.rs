//! Monomial dictionaries.

use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SIZE_CAP: usize = 5000;

/// All monomials of total degree `<= degree` in `dimension` variables.
///
/// Ordered by total degree, then by descending exponent of `x1`, `x2`, ...
/// so that the constant is first and `x_i` sits at position `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dictionary {
    dimension: usize,
    degree: u32,
    exponents: Vec<Vec<u32>>,
}

/// The serialized form; the exponent list is rebuilt on load.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DictionarySpec {
    pub dim: usize,
    pub degree: u32,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Every exponent vector of length `dim` summing to exactly `total`, in
/// descending lexicographic order.
fn compositions(dim: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if prefix.len() + 1 == dim {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(dim, total - first, prefix, out);
        prefix.pop();
    }
}

impl Dictionary {
    pub fn new(dimension: usize, degree: u32) -> Result<Self> {
        Self::with_cap(dimension, degree, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(dimension: usize, degree: u32, cap: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidInput("dictionary dimension must be positive".into()));
        }
        let size = binomial(dimension as u128 + degree as u128, degree as u128);
        if size > cap as u128 {
            return Err(Error::Capacity {
                dimension,
                degree,
                size,
                cap,
            });
        }
        let mut exponents = Vec::with_capacity(size as usize);
        let mut prefix = Vec::with_capacity(dimension);
        for total in 0..=degree {
            compositions(dimension, total, &mut prefix, &mut exponents);
        }
        debug_assert_eq!(exponents.len() as u128, size);
        Ok(Dictionary {
            dimension,
            degree,
            exponents,
        })
    }

    pub fn from_spec(spec: DictionarySpec) -> Result<Self> {
        Self::new(spec.dim, spec.degree)
    }

    pub fn spec(&self) -> DictionarySpec {
        DictionarySpec {
            dim: self.dimension,
            degree: self.degree,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn size(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Writes the monomial values at `x` into `out`.
    ///
    /// Powers are tabulated once per coordinate so each monomial costs
    /// `dimension` multiplications.
    pub fn evaluate_into(&self, x: &[f64], out: &mut [f64]) {
        let deg = self.degree as usize;
        let mut powers = vec![1.0; self.dimension * (deg + 1)];
        for (i, &xi) in x.iter().enumerate() {
            let row = &mut powers[i * (deg + 1)..(i + 1) * (deg + 1)];
            for p in 1..=deg {
                row[p] = row[p - 1] * xi;
            }
        }
        for (slot, e) in out.iter_mut().zip(&self.exponents) {
            let mut v = 1.0;
            for (i, &p) in e.iter().enumerate() {
                v *= powers[i * (deg + 1) + p as usize];
            }
            *slot = v;
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut out = vec![0.0; self.size()];
        self.evaluate_into(x, &mut out);
        Ok(out)
    }

    /// Row `k` of the result is `evaluate(xs[k])`.
    pub fn evaluate_batch<P: AsRef<[f64]> + Sync>(&self, xs: &[P]) -> Result<Mat<f64>> {
        for x in xs {
            self.check(x.as_ref())?;
        }
        let n = self.size();
        let mut flat = vec![0.0; xs.len() * n];
        flat.par_chunks_mut(n.max(1))
            .zip(xs.par_iter())
            .for_each(|(row, x)| self.evaluate_into(x.as_ref(), row));
        Ok(Mat::from_fn(xs.len(), n, |i, j| flat[i * n + j]))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: x.len(),
            });
        }
        Ok(())
    }
}
