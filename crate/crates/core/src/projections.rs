//! Exact Euclidean (Frobenius) projections onto the sets whose intersection
//! is the feasible region of the clustering programs.

use nalgebra::DMatrix;

use crate::linalg;
use crate::{Error, Result};

/// Eigenvalues in `(-EIGEN_FLOOR, 0)` are sign noise and clamp to zero like
/// any other negative eigenvalue; the constant also bounds PSD checks.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Dense real symmetric matrix. Construction accepts asymmetry up to
/// `1e-12` (relative to the largest entry, floored at 1) and symmetrizes.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix(DMatrix<f64>);

impl SymmetricMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} is not square",
                n,
                m.ncols()
            )));
        }
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let scale = m.amax().max(1.0);
        for j in 0..n {
            for i in 0..j {
                if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self(linalg::symmetrized(m)))
    }

    /// Symmetric part `(m + m^T) / 2` of an arbitrary square matrix.
    pub fn symmetric_part(m: &DMatrix<f64>) -> Self {
        Self(linalg::symmetrized(m.clone()))
    }

    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }
}

/// Nearest PSD matrix: eigendecompose, clamp negative eigenvalues to zero,
/// reassemble.
pub fn project_psd(m: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let eig = linalg::sym_eigen(m.as_matrix())?;
    let clamped: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v > 0.0 { v } else { 0.0 })
        .collect();
    Ok(SymmetricMatrix(eig.reassemble(m.as_matrix(), &clamped)))
}

/// Entrywise `max(m, 0)`.
pub fn project_nonneg(m: &SymmetricMatrix) -> SymmetricMatrix {
    SymmetricMatrix(m.as_matrix().map(|v| v.max(0.0)))
}

/// Nearest symmetric matrix with every row summing to 1 and, when
/// `trace_target` is set, trace equal to it.
///
/// Closed form from the KKT system: `X = M + 1 mu^T + mu 1^T + nu I`, with
/// the scalar `nu` fixed by the trace and the vector `mu` by the row sums.
/// The result is exactly symmetric whenever `M` is.
pub fn project_affine(m: &SymmetricMatrix, trace_target: Option<f64>) -> Result<SymmetricMatrix> {
    let n = m.dim();
    if n == 0 {
        return Ok(m.clone());
    }
    if n == 1 {
        if let Some(t) = trace_target {
            if t != 1.0 {
                return Err(Error::InvalidArgument(format!(
                    "a 1x1 row-stochastic matrix has trace 1, not {t}"
                )));
            }
        }
        return Ok(SymmetricMatrix(DMatrix::from_element(1, 1, 1.0)));
    }
    let nf = n as f64;
    let mm = m.as_matrix();
    let row_sums: Vec<f64> = (0..n).map(|i| mm.column(i).sum()).collect();
    let total: f64 = row_sums.iter().sum();
    let nu = match trace_target {
        Some(t) => (t - mm.trace() - 1.0 + total / nf) / (nf - 1.0),
        None => 0.0,
    };
    let s = (nf - total - nf * nu) / (2.0 * nf);
    let mu: Vec<f64> = row_sums
        .iter()
        .map(|&rs| (1.0 - rs - s - nu) / nf)
        .collect();
    let mut x = mm.clone();
    for j in 0..n {
        for i in 0..n {
            x[(i, j)] += mu[i] + mu[j];
        }
        x[(j, j)] += nu;
    }
    Ok(SymmetricMatrix(x))
}

/// Projection onto `{X PSD, X 1 = 1}` (and `trace X = t` when given).
///
/// Every such `X` is `11^T/n + W` with `W` PSD and `W 1 = 0`, so the
/// projection is `11^T/n` plus the PSD projection of `P M P`,
/// `P = I - 11^T/n`; with a trace target the eigenvalues of `P M P` on the
/// complement of `1` are projected onto the simplex of mass `t - 1` instead
/// of clamped. One eigendecomposition either way.
pub fn project_psd_affine(
    m: &SymmetricMatrix,
    trace_target: Option<f64>,
) -> Result<SymmetricMatrix> {
    let n = m.dim();
    if n == 0 {
        return Ok(m.clone());
    }
    if let Some(t) = trace_target {
        if !(t >= 1.0 && t <= n as f64) {
            return Err(Error::InvalidArgument(format!(
                "trace target {t} outside [1, {n}]"
            )));
        }
    }
    let nf = n as f64;
    let mm = m.as_matrix();
    let means: Vec<f64> = (0..n).map(|i| mm.column(i).sum() / nf).collect();
    let grand = means.iter().sum::<f64>() / nf;
    let mut centered = DMatrix::from_fn(n, n, |i, j| mm[(i, j)] - (means[i] + means[j]) + grand);

    // Push the all-ones direction (an exact null vector of P M P) far below
    // the rest of the spectrum so it is always the last eigenpair and is
    // always discarded.
    let shift = 1.0 + 2.0 * centered.norm() + trace_target.unwrap_or(0.0);
    centered.add_scalar_mut(-shift / nf);
    let eig = linalg::sym_eigen(&centered)?;
    let mut target: Vec<f64> = match trace_target {
        None => eig.values.iter().map(|&v| v.max(0.0)).collect(),
        Some(t) => project_simplex(&eig.values[..n - 1], t - 1.0)
            .into_iter()
            .chain(std::iter::once(0.0))
            .collect(),
    };
    target[n - 1] = 0.0;
    let mut x = eig.reassemble(&centered, &target);
    x.add_scalar_mut(1.0 / nf);
    Ok(SymmetricMatrix(x))
}

/// Euclidean projection of `v` onto `{x >= 0, sum x = mass}`.
fn project_simplex(v: &[f64], mass: f64) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = sorted[0] - mass;
    for (j, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - mass) / (j + 1) as f64;
        if u - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}
