use nalgebra::{DMatrix, SymmetricEigen};

use super::Grid;
use crate::error::{Error, Result};

/// Gram matrix of a (possibly non-orthonormal) basis and its Cholesky factor.
///
/// `cholesky` is upper triangular with `gram = choleskyᵀ · cholesky`; for a
/// coefficient vector `c`, `cholesky · c` are the coordinates of the same
/// function in an orthonormal basis of the span.
#[derive(Debug, Clone, PartialEq)]
pub struct GramFactor {
    pub gram: DMatrix<f64>,
    pub cholesky: DMatrix<f64>,
    /// `log |cholesky|`, i.e. half the log-determinant of the Gram matrix.
    pub logdet: f64,
}

impl GramFactor {
    pub fn identity(k: usize) -> GramFactor {
        GramFactor { gram: DMatrix::identity(k, k), cholesky: DMatrix::identity(k, k), logdet: 0.0 }
    }

    pub fn from_gram(gram: DMatrix<f64>) -> Result<GramFactor> {
        let k = gram.nrows();
        if k == 0 || gram.ncols() != k {
            return Err(Error::dims("Gram matrix must be square and non-empty"));
        }
        let eig = SymmetricEigen::new(gram.clone()).eigenvalues;
        let largest = eig.max();
        let smallest = eig.min();
        if !(largest > 0.0) || smallest < 1e-12 * largest {
            return Err(Error::RankDeficient {
                what: "basis Gram matrix".into(),
                condition: if smallest > 0.0 { largest / smallest } else { f64::INFINITY },
            });
        }
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::RankDeficient { what: "basis Gram matrix".into(), condition: largest / smallest })?;
        let cholesky = chol.l().transpose();
        let logdet = cholesky.diagonal().iter().map(|d| d.ln()).sum();
        Ok(GramFactor { gram, cholesky, logdet })
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }
}

/// Gram matrix `⟨b_j, b_l⟩` of the rows of `basisfuns` and its Cholesky factor.
pub fn gram_factor(basisfuns: &DMatrix<f64>, grid: &Grid) -> Result<GramFactor> {
    if basisfuns.ncols() != grid.len() {
        return Err(Error::dims(format!(
            "basis functions have {} columns, grid has {} nodes",
            basisfuns.ncols(),
            grid.len()
        )));
    }
    let k = basisfuns.nrows();
    let w = grid.weights();
    let mut weighted = basisfuns.transpose();
    for (t, mut row) in weighted.row_iter_mut().enumerate() {
        row *= w[t];
    }
    let mut gram = basisfuns * weighted;
    // exact symmetry
    for j in 0..k {
        for l in 0..j {
            let v = 0.5 * (gram[(j, l)] + gram[(l, j)]);
            gram[(j, l)] = v;
            gram[(l, j)] = v;
        }
    }
    GramFactor::from_gram(gram)
}
