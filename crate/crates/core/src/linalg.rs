//! Dense symmetric eigensolver glue.
//!
//! Matrices live in nalgebra throughout the crate; the eigendecompositions
//! and the low-rank reconstructions that dominate solver time run in faer.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Eigenpairs of a symmetric matrix, eigenvalues in descending order.
pub(crate) struct SymEigen {
    pub values: Vec<f64>,
    pub vectors: faer::Mat<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn check_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// Full eigendecomposition; only the lower triangle of `m` is read.
pub(crate) fn sym_eigen(m: &DMatrix<f64>) -> Result<SymEigen> {
    check_finite(m)?;
    let n = m.nrows();
    let evd = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::Eigendecomposition)?;
    let s = evd.S().column_vector();
    let u = evd.U();
    // faer returns ascending order; flip.
    let values = (0..n).rev().map(|i| s[i]).collect();
    let vectors = faer::Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok(SymEigen { values, vectors })
}

/// Eigenvalues only, descending.
pub(crate) fn sym_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_finite(m)?;
    let mut values = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| Error::Eigendecomposition)?;
    values.reverse();
    Ok(values)
}

impl SymEigen {
    /// Column `j` as an nalgebra vector.
    #[cfg(test)]
    pub fn vector(&self, j: usize) -> DVector<f64> {
        let n = self.vectors.nrows();
        DVector::from_fn(n, |i, _| self.vectors[(i, j)])
    }

    /// The leading `k` eigenvectors as an `n x k` matrix.
    pub fn leading_vectors(&self, k: usize) -> DMatrix<f64> {
        let n = self.vectors.nrows();
        DMatrix::from_fn(n, k, |i, j| self.vectors[(i, j)])
    }

    /// Reassembles `sum_j new_values[j] v_j v_j^T`.
    ///
    /// `base` must be the matrix this decomposition came from. When most
    /// eigenvalues are unchanged it is cheaper to subtract the changed part
    /// from `base` than to rebuild the kept part, so the smaller update wins.
    pub fn reassemble(&self, base: &DMatrix<f64>, new_values: &[f64]) -> DMatrix<f64> {
        let n = self.values.len();
        let kept: Vec<usize> = (0..n).filter(|&j| new_values[j] != 0.0).collect();
        let changed: Vec<usize> = (0..n)
            .filter(|&j| new_values[j] != self.values[j])
            .collect();
        let out = if kept.len() <= changed.len() {
            let weights: Vec<f64> = kept.iter().map(|&j| new_values[j]).collect();
            from_faer(self.weighted_outer(&kept, &weights).as_ref())
        } else {
            let weights: Vec<f64> = changed
                .iter()
                .map(|&j| self.values[j] - new_values[j])
                .collect();
            base - from_faer(self.weighted_outer(&changed, &weights).as_ref())
        };
        symmetrized(out)
    }

    /// `sum_{j in cols} w_j v_j v_j^T` via one gemm.
    fn weighted_outer(&self, cols: &[usize], weights: &[f64]) -> faer::Mat<f64> {
        let n = self.vectors.nrows();
        if cols.is_empty() {
            return faer::Mat::zeros(n, n);
        }
        let left = faer::Mat::from_fn(n, cols.len(), |i, c| {
            self.vectors[(i, cols[c])] * weights[c]
        });
        let right = faer::Mat::from_fn(n, cols.len(), |i, c| self.vectors[(i, cols[c])]);
        &left * right.transpose()
    }
}

/// Averages `m` with its transpose so the result is exactly symmetric.
pub(crate) fn symmetrized(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Largest eigenvalue of a symmetric operator given by `matvec`, computed by
/// Lanczos with full reorthogonalization started from the all-ones vector.
///
/// For an entrywise nonnegative matrix the all-ones start overlaps the Perron
/// vector, so the returned value is the spectral radius.
pub(crate) fn lanczos_largest<F>(n: usize, matvec: F, rel_tol: f64) -> f64
where
    F: Fn(&DVector<f64>, &mut DVector<f64>),
{
    if n == 0 {
        return 0.0;
    }
    let mut basis: Vec<DVector<f64>> = vec![DVector::from_element(n, 1.0 / (n as f64).sqrt())];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = DVector::zeros(n);
    let mut ritz = 0.0;
    for j in 0..n {
        matvec(&basis[j], &mut w);
        let alpha = basis[j].dot(&w);
        alphas.push(alpha);
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&w);
                w.axpy(-c, q, 1.0);
            }
        }
        let beta = w.norm();

        let k = alphas.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alphas[i];
            if i + 1 < k {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        let (idx, &theta) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty tridiagonal");
        ritz = theta;
        let residual = beta * eig.eigenvectors[(k - 1, idx)].abs();
        if residual <= rel_tol * theta.abs().max(f64::MIN_POSITIVE)
            || beta <= 1e-14 * (1.0 + theta.abs())
        {
            break;
        }
        betas.push(beta);
        basis.push(&w / beta);
    }
    ritz
}
