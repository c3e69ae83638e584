//! Dense symmetric kernel matrices.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Symmetric `n × n` matrix of kernel evaluations, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl GramMatrix {
    /// Builds the matrix from a symmetric entry function; only `i <= j` is evaluated.
    pub fn from_fn<F>(n: usize, f: F) -> Self
    where
        F: Fn(usize, usize) -> f64 + Sync,
    {
        let upper: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|i| (i..n).map(|j| f(i, j)).collect())
            .collect();
        let mut entries = vec![0.0; n * n];
        for (i, row) in upper.iter().enumerate() {
            for (offset, &v) in row.iter().enumerate() {
                let j = i + offset;
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self { n, entries }
    }

    /// Wraps row-major entries, checking shape, finiteness and exact symmetry.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite gram entry {bad}"
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if entries[i * n + j] != entries[j * n + i] {
                    return Err(Error::InvalidParameter(format!(
                        "gram is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { n, entries })
    }

    /// `K_∅ ≡ 1`.
    pub fn ones(n: usize) -> Self {
        Self {
            n,
            entries: vec![1.0; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Matrix with rows and columns jointly relabelled: `out[i][j] = self[π(i)][π(j)]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for &pi in perm {
            let row = &self.entries[pi * n..(pi + 1) * n];
            entries.extend(perm.iter().map(|&pj| row[pj]));
        }
        Self { n, entries }
    }

    /// Entrywise (Schur) product.
    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(Self {
            n: self.n,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }
}

/// Gram of the tensor-product kernel `K_A = ⊗_{i∈A} K_i`; the empty product is all ones.
pub fn product_gram(n: usize, grams: &[&GramMatrix]) -> Result<GramMatrix> {
    let mut out = GramMatrix::ones(n);
    for g in grams {
        if g.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: g.n(),
            });
        }
        for (o, v) in out.entries.iter_mut().zip(&g.entries) {
            *o *= v;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: f64) -> GramMatrix {
        GramMatrix::from_fn(n, |i, j| {
            1.0 + seed * ((i + 1) as f64 * (j + 1) as f64).sin()
        })
    }

    #[test]
    fn from_fn_is_symmetric() {
        let g = GramMatrix::from_fn(5, |i, j| (i * 10 + j) as f64);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(g.get(i, j), g.get(j, i));
            }
        }
        assert_eq!(g.get(1, 3), 13.0);
    }

    #[test]
    fn product_conventions() {
        let a = sample(4, 0.3);
        let b = sample(4, 0.7);
        assert_eq!(product_gram(4, &[]).unwrap(), GramMatrix::ones(4));
        assert_eq!(product_gram(4, &[&a]).unwrap(), a);
        let ab = product_gram(4, &[&a, &b]).unwrap();
        assert_eq!(ab.get(1, 2), a.get(1, 2) * b.get(1, 2));
        assert!(product_gram(5, &[&a]).is_err());
    }

    #[test]
    fn permutation_relabels_both_axes() {
        let g = GramMatrix::from_fn(3, |i, j| (i + j * j + i * j) as f64);
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.get(0, 1), g.get(2, 0));
        assert_eq!(p.get(1, 1), g.get(0, 0));
    }

    #[test]
    fn from_entries_validates() {
        assert!(GramMatrix::from_entries(2, vec![1.0, 0.5, 0.5, 1.0]).is_ok());
        assert!(GramMatrix::from_entries(2, vec![1.0, 0.5, 0.4, 1.0]).is_err());
        assert!(GramMatrix::from_entries(2, vec![1.0, 0.5, 0.5]).is_err());
        assert!(GramMatrix::from_entries(1, vec![f64::NAN]).is_err());
    }
}
