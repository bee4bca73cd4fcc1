//! Label extraction, NMI, and spectral estimators of the number of blocks.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg;
use crate::sbm::{AdjacencyMatrix, ClusteringMatrix, Partition};
use crate::{Error, Result};

/// Restarts of k-means from independent seedings.
pub const KMEANS_RESTARTS: usize = 10;
/// Lloyd iterations per restart.
pub const KMEANS_MAX_ITER: usize = 100;
/// Default margin of the singular value threshold.
pub const USVT_DEFAULT_ETA: f64 = 0.01;

#[derive(Clone, Debug)]
pub struct LabelExtraction {
    pub labels: Partition,
    pub kmeans_inertia: f64,
    /// `sigma_r - sigma_{r+1}` of the clustering matrix.
    pub eigengap: f64,
}

/// Clusters the rows of the top-`r` eigenvectors of `x` with k-means.
pub fn extract_labels(x: &ClusteringMatrix, r: usize, seed: u64) -> Result<LabelExtraction> {
    let n = x.dim();
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("r = {r} outside [1, {n}]")));
    }
    let eig = linalg::sym_eigen(x.as_matrix())?;
    let next = eig.values.get(r).copied().unwrap_or(0.0);
    if eig.values[r - 1] <= 1e-8 * x.trace().max(1.0) {
        log::warn!(
            "eigenvalue {r} of the clustering matrix is {:.3e}; r exceeds its numerical rank",
            eig.values[r - 1]
        );
    }
    let embedding = eig.leading_vectors(r);
    let (labels, inertia) = kmeans(&embedding, r, seed)?;
    Ok(LabelExtraction {
        labels: Partition::canonical_from(&labels)?,
        kmeans_inertia: inertia,
        eigengap: eig.values[r - 1] - next,
    })
}

/// Spectral clustering of the adjacency matrix: k-means on the eigenvectors
/// of its `r` algebraically largest eigenvalues.
pub fn spectral_labels(a: &AdjacencyMatrix, r: usize, seed: u64) -> Result<Partition> {
    let n = a.num_nodes();
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("r = {r} outside [1, {n}]")));
    }
    let eig = linalg::sym_eigen(a.as_matrix())?;
    let (labels, _) = kmeans(&eig.leading_vectors(r), r, seed)?;
    Partition::canonical_from(&labels)
}

fn sq_dist(points: &DMatrix<f64>, i: usize, centers: &DMatrix<f64>, c: usize) -> f64 {
    (0..points.ncols())
        .map(|j| (points[(i, j)] - centers[(c, j)]).powi(2))
        .sum()
}

/// k-means++ seeding followed by Lloyd iterations, best of
/// [`KMEANS_RESTARTS`] runs. Rows of `points` are the observations. Every
/// returned cluster is nonempty: an emptied center is moved to the point
/// farthest from its own center.
pub(crate) fn kmeans(points: &DMatrix<f64>, k: usize, seed: u64) -> Result<(Vec<usize>, f64)> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("k = {k} outside [1, {n}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let run = lloyd(points, seed_centers(points, k, &mut rng), k);
        if best.as_ref().is_none_or(|(_, inertia)| run.1 < *inertia) {
            best = Some(run);
        }
    }
    let (labels, inertia) = best.expect("at least one restart");
    let found = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut used = vec![false; k];
    labels.iter().for_each(|&l| used[l] = true);
    if found != k || used.iter().any(|u| !u) {
        return Err(Error::DegenerateClustering {
            found: used.iter().filter(|u| **u).count(),
            requested: k,
        });
    }
    Ok((labels, inertia))
}

fn seed_centers(points: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, d) = points.shape();
    let mut centers = DMatrix::<f64>::zeros(k, d);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&points.row(first));
    let mut dist: Vec<f64> = (0..n).map(|i| sq_dist(points, i, &centers, 0)).collect();
    for c in 1..k {
        let total: f64 = dist.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in dist.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).copy_from(&points.row(pick));
        for (i, di) in dist.iter_mut().enumerate() {
            *di = di.min(sq_dist(points, i, &centers, c));
        }
    }
    centers
}

fn lloyd(points: &DMatrix<f64>, mut centers: DMatrix<f64>, k: usize) -> (Vec<usize>, f64) {
    let (n, d) = points.shape();
    let mut labels = vec![usize::MAX; n];
    let mut inertia = 0.0;
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        let mut own = vec![0.0; n];
        for i in 0..n {
            let (c, dist) = (0..k)
                .map(|c| (c, sq_dist(points, i, &centers, c)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("k >= 1");
            own[i] = dist;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }
        // refill empty clusters with the worst-fitted points
        let mut counts = vec![0usize; k];
        labels.iter().for_each(|&l| counts[l] += 1);
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| own[a].total_cmp(&own[b]))
                    .expect("more points than clusters");
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                own[far] = 0.0;
                changed = true;
            }
        }
        centers.fill(0.0);
        for i in 0..n {
            for j in 0..d {
                centers[(labels[i], j)] += points[(i, j)];
            }
        }
        for c in 0..k {
            let inv = 1.0 / counts[c] as f64;
            centers.row_mut(c).scale_mut(inv);
        }
        inertia = (0..n)
            .map(|i| sq_dist(points, i, &centers, labels[i]))
            .sum();
        if !changed {
            break;
        }
    }
    (labels, inertia)
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Normalized mutual information, `I(a; b)` over the arithmetic mean of the
/// two entropies.
///
/// Two single-cluster partitions score 1; otherwise a zero entropy on
/// either side scores 0.
pub fn nmi(a: &Partition, b: &Partition) -> Result<f64> {
    if a.num_nodes() != b.num_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "partitions cover {} and {} nodes",
            a.num_nodes(),
            b.num_nodes()
        )));
    }
    let n = a.num_nodes() as f64;
    let ha = entropy(a.sizes().into_iter(), n);
    let hb = entropy(b.sizes().into_iter(), n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut joint: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *joint.entry((x, y)).or_default() += 1;
    }
    let hab = entropy(joint.into_values(), n);
    let mutual = ha + hb - hab;
    Ok((2.0 * mutual / (ha + hb)).clamp(0.0, 1.0))
}

/// Number of adjacency eigenvalues above `(1 + eta) sqrt(n p)`, with `p` the
/// empirical edge density. An edgeless graph gives 0.
pub fn usvt_estimate_r(a: &AdjacencyMatrix, eta: f64) -> Result<usize> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "eta must be positive, got {eta}"
        )));
    }
    if a.num_edges() == 0 {
        return Ok(0);
    }
    let threshold = (1.0 + eta) * (a.num_nodes() as f64 * a.density()).sqrt();
    let values = linalg::sym_eigenvalues(a.as_matrix())?;
    Ok(values.iter().filter(|v| **v > threshold).count())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BetheHessianVariant {
    /// `zeta = sqrt(mean degree)`.
    Bh,
    /// `zeta = sqrt(sum d^2 / sum d - 1)`, better suited to uneven degrees.
    Bhac,
}

/// Number of negative eigenvalues of `H = (zeta^2 - 1) I - zeta A + D`.
pub fn bethe_hessian_estimate_r(
    a: &AdjacencyMatrix,
    variant: BetheHessianVariant,
) -> Result<usize> {
    if a.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    let degrees = a.degrees();
    let zeta = match variant {
        BetheHessianVariant::Bh => a.mean_degree().sqrt(),
        BetheHessianVariant::Bhac => {
            let s1: f64 = degrees.iter().sum();
            let s2: f64 = degrees.iter().map(|d| d * d).sum();
            (s2 / s1 - 1.0).max(0.0).sqrt()
        }
    };
    let mut h = a.as_matrix() * (-zeta);
    for (i, d) in degrees.iter().enumerate() {
        h[(i, i)] += zeta * zeta - 1.0 + d;
    }
    let values = linalg::sym_eigenvalues(&h)?;
    Ok(values.iter().filter(|v| **v < 0.0).count())
}
