//! Dual certificate for the planted clustering matrix.
//!
//! For a partition with clusters `S_1..S_r` (sizes `m_k`) and trace dual
//! `beta`, the witness is
//!
//! ```text
//! phi_k     = -(beta + 1' A_k 1 / m_k) / 2
//! alpha_Sk  = (A_k 1 + phi_k 1) / m_k
//! Lambda_kk = -A_k + 1 alpha_k' + alpha_k 1' + beta I
//! Lambda_kl = -(I - E/m_k) A_kl (I - E/m_l)
//! Gamma_kk  = 0
//! Gamma_kl  = -A_kl - Lambda_kl + 1 alpha_l' + alpha_k 1'
//! ```
//!
//! so that `-A - Lambda + 1 alpha' + alpha 1' + beta I - Gamma = 0` holds by
//! construction. The planted matrix is optimal when `Lambda` is PSD and
//! `Gamma` is entrywise nonnegative.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::linalg;
use crate::sbm::{ground_truth_matrix, AdjacencyMatrix, Partition};
use crate::{Error, Result};

/// Bound on the residual checks.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Floor for the smallest eigenvalue and the smallest `Gamma` entry.
pub const SIGN_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub lambda: DMatrix<f64>,
    pub gamma: DMatrix<f64>,
    pub alpha: DVector<f64>,
    pub phi: Vec<f64>,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    /// Max-abs entry of the first-order condition.
    pub stationarity_residual: f64,
    /// Max-abs entry of `Lambda X0`.
    pub lambda_x_residual: f64,
    /// Max-abs entry of `Gamma` on the diagonal blocks (`Gamma o X0`).
    pub gamma_x_residual: f64,
    /// Smallest eigenvalue of `Lambda` on the orthogonal complement of the
    /// cluster indicators (0 when the complement is trivial).
    pub min_eig_on_complement: f64,
    /// Smallest `Gamma` entry between different clusters (0 when `r = 1`).
    pub min_gamma_entry: f64,
    pub passes: bool,
}

fn check_shapes(a: &AdjacencyMatrix, partition: &Partition) -> Result<()> {
    if a.num_nodes() != partition.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, partition covers {}",
            a.num_nodes(),
            partition.num_nodes()
        )));
    }
    Ok(())
}

/// Degrees of every node into every cluster: `d[u][k] = sum_{v in S_k} A_uv`.
fn cluster_degrees(a: &AdjacencyMatrix, partition: &Partition) -> Vec<Vec<f64>> {
    let labels = partition.labels();
    (0..a.num_nodes())
        .map(|u| {
            let mut d = vec![0.0; partition.num_clusters()];
            for &v in a.neighbors(u) {
                d[labels[v]] += 1.0;
            }
            d
        })
        .collect()
}

/// Builds the witness for `partition` with trace dual `beta`.
pub fn build_certificate(
    a: &AdjacencyMatrix,
    partition: &Partition,
    beta: f64,
) -> Result<DualCertificate> {
    check_shapes(a, partition)?;
    if !beta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "beta must be finite, got {beta}"
        )));
    }
    let n = a.num_nodes();
    let labels = partition.labels();
    let sizes: Vec<f64> = partition.sizes().iter().map(|&m| m as f64).collect();
    let degrees = cluster_degrees(a, partition);

    let blocks = block_edges(&degrees, labels, sizes.len());
    let phi: Vec<f64> = (0..sizes.len())
        .map(|k| -0.5 * (beta + blocks[k][k] / sizes[k]))
        .collect();
    let alpha = DVector::from_fn(n, |u, _| {
        let k = labels[u];
        (degrees[u][k] + phi[k]) / sizes[k]
    });

    let am = a.as_matrix();
    let mut lambda = DMatrix::<f64>::zeros(n, n);
    let mut gamma = DMatrix::<f64>::zeros(n, n);
    for u in 0..n {
        let k = labels[u];
        for v in 0..n {
            let l = labels[v];
            if k == l {
                let diag = if u == v { beta } else { 0.0 };
                lambda[(u, v)] = -am[(u, v)] + alpha[u] + alpha[v] + diag;
            } else {
                // entry of (I - E/m_k) A_kl (I - E/m_l)
                let centered = am[(u, v)] - degrees[u][l] / sizes[l] - degrees[v][k] / sizes[k]
                    + blocks[k][l] / (sizes[k] * sizes[l]);
                lambda[(u, v)] = -centered;
                gamma[(u, v)] = -am[(u, v)] + centered + alpha[u] + alpha[v];
            }
        }
    }
    Ok(DualCertificate {
        lambda,
        gamma,
        alpha,
        phi,
        beta,
    })
}

/// Table of `1' A_kl 1` over cluster pairs.
fn block_edges(degrees: &[Vec<f64>], labels: &[usize], r: usize) -> Vec<Vec<f64>> {
    let mut table = vec![vec![0.0; r]; r];
    for (&k, d) in labels.iter().zip(degrees) {
        for l in 0..r {
            table[k][l] += d[l];
        }
    }
    table
}

/// Orthonormal basis of the complement of the cluster indicators, built
/// from Helmert contrasts inside each cluster.
fn indicator_complement(partition: &Partition) -> DMatrix<f64> {
    let n = partition.num_nodes();
    let members = partition.members();
    let cols = n - members.len();
    let mut q = DMatrix::<f64>::zeros(n, cols);
    let mut c = 0;
    for group in &members {
        for j in 1..group.len() {
            let norm = ((j * (j + 1)) as f64).sqrt();
            for &u in &group[..j] {
                q[(u, c)] = 1.0 / norm;
            }
            q[(group[j], c)] = -(j as f64) / norm;
            c += 1;
        }
    }
    q
}

/// Checks the optimality conditions of `cert` for the planted matrix of
/// `partition`.
pub fn verify(
    a: &AdjacencyMatrix,
    partition: &Partition,
    cert: &DualCertificate,
) -> Result<CertificateReport> {
    check_shapes(a, partition)?;
    let n = a.num_nodes();
    if cert.lambda.shape() != (n, n) || cert.gamma.shape() != (n, n) || cert.alpha.len() != n {
        return Err(Error::DimensionMismatch(
            "certificate does not match the graph".into(),
        ));
    }
    let labels = partition.labels();
    let x0 = ground_truth_matrix(partition).into_inner();

    let mut stationarity = -a.as_matrix() - &cert.lambda - &cert.gamma;
    for u in 0..n {
        for v in 0..n {
            stationarity[(u, v)] += cert.alpha[u] + cert.alpha[v];
        }
        stationarity[(u, u)] += cert.beta;
    }
    let stationarity_residual = stationarity.amax();
    let lambda_x_residual = (&cert.lambda * &x0).amax();

    let mut gamma_x_residual = 0.0f64;
    let mut min_gamma_entry = f64::INFINITY;
    for u in 0..n {
        for v in 0..n {
            let g = cert.gamma[(u, v)];
            if labels[u] == labels[v] {
                gamma_x_residual = gamma_x_residual.max(g.abs());
            } else {
                min_gamma_entry = min_gamma_entry.min(g);
            }
        }
    }
    if !min_gamma_entry.is_finite() {
        min_gamma_entry = 0.0;
    }

    let q = indicator_complement(partition);
    let min_eig_on_complement = if q.ncols() == 0 {
        0.0
    } else {
        let reduced = linalg::symmetrized(q.transpose() * &cert.lambda * &q);
        *linalg::sym_eigenvalues(&reduced)?
            .last()
            .expect("nonempty spectrum")
    };

    let passes = stationarity_residual <= RESIDUAL_TOLERANCE
        && lambda_x_residual <= RESIDUAL_TOLERANCE
        && gamma_x_residual <= RESIDUAL_TOLERANCE
        && min_eig_on_complement >= -SIGN_TOLERANCE
        && min_gamma_entry >= -SIGN_TOLERANCE;
    Ok(CertificateReport {
        stationarity_residual,
        lambda_x_residual,
        gamma_x_residual,
        min_eig_on_complement,
        min_gamma_entry,
        passes,
    })
}

/// Empirical-degree form of `Gamma_uv` for `u in S_k`, `v in S_l`, `k != l`:
///
/// ```text
/// d_u(S_k) - d_u(S_l) + d_v(S_l) - d_v(S_k)
///   + d(S_k S_l) - d(S_k S_k)/2 - d(S_l S_l)/2 - beta/(2 m_k) - beta/(2 m_l)
/// ```
///
/// where `d_u(S) = |N(u) in S| / |S|` and `d(S T) = 1' A_ST 1 / (|S| |T|)`
/// are edge densities. Equals the assembled `Gamma_uv` exactly.
pub fn gamma_entry_condition(
    a: &AdjacencyMatrix,
    partition: &Partition,
    beta: f64,
    u: usize,
    v: usize,
) -> Result<f64> {
    check_shapes(a, partition)?;
    let n = a.num_nodes();
    if u >= n || v >= n {
        return Err(Error::InvalidArgument(format!(
            "node out of range for {n} nodes"
        )));
    }
    let labels = partition.labels();
    let (k, l) = (labels[u], labels[v]);
    if k == l {
        return Err(Error::InvalidArgument(format!(
            "nodes {u} and {v} share cluster {k}"
        )));
    }
    let sizes: Vec<f64> = partition.sizes().iter().map(|&m| m as f64).collect();
    let degrees = cluster_degrees(a, partition);
    let avg = |w: usize, c: usize| degrees[w][c] / sizes[c];
    let blocks = block_edges(&degrees, labels, sizes.len());
    let density = |c: usize, e: usize| blocks[c][e] / (sizes[c] * sizes[e]);

    Ok(
        avg(u, k) - avg(u, l) + avg(v, l) - avg(v, k) + density(k, l)
            - 0.5 * density(k, k)
            - 0.5 * density(l, l)
            - beta / (2.0 * sizes[k])
            - beta / (2.0 * sizes[l]),
    )
}

/// Builds and verifies the witness with `beta = lambda`. A `true` result
/// proves the planted matrix optimal for the penalized program on `a`.
pub fn certify_recovery(a: &AdjacencyMatrix, partition: &Partition, lambda: f64) -> Result<bool> {
    let cert = build_certificate(a, partition, lambda)?;
    Ok(verify(a, partition, &cert)?.passes)
}
