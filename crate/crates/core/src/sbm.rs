//! Stochastic block models: parameters, partitions, sampled graphs and the
//! normalized clustering matrix.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg;
use crate::{Error, Result};

/// Block-model parameters: a symmetric `r x r` matrix of connection
/// probabilities and the `r` cluster sizes.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockModel {
    probabilities: DMatrix<f64>,
    sizes: Vec<usize>,
}

impl BlockModel {
    pub fn new(probabilities: DMatrix<f64>, sizes: Vec<usize>) -> Result<Self> {
        let r = sizes.len();
        if r == 0 {
            return Err(Error::InvalidModel(
                "at least one cluster is required".into(),
            ));
        }
        if probabilities.nrows() != r || probabilities.ncols() != r {
            return Err(Error::InvalidModel(format!(
                "probability matrix is {}x{} but there are {r} cluster sizes",
                probabilities.nrows(),
                probabilities.ncols()
            )));
        }
        if let Some(k) = sizes.iter().position(|&m| m == 0) {
            return Err(Error::InvalidModel(format!("cluster {k} has size 0")));
        }
        for i in 0..r {
            for j in 0..r {
                let p = probabilities[(i, j)];
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::InvalidModel(format!(
                        "B[{i},{j}] = {p} is outside [0, 1]"
                    )));
                }
                if p != probabilities[(j, i)] {
                    return Err(Error::InvalidModel(format!(
                        "B is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self {
            probabilities,
            sizes,
        })
    }

    /// Planted partition: `within` on the diagonal, `between` elsewhere.
    pub fn planted(sizes: Vec<usize>, within: f64, between: f64) -> Result<Self> {
        let r = sizes.len();
        let b = DMatrix::from_fn(r, r, |i, j| if i == j { within } else { between });
        Self::new(b, sizes)
    }

    /// `r` clusters of (nearly) equal size summing to `n`.
    pub fn balanced(n: usize, r: usize, within: f64, between: f64) -> Result<Self> {
        if r == 0 || n < r {
            return Err(Error::InvalidModel(format!(
                "cannot split {n} nodes into {r} clusters"
            )));
        }
        let sizes = (0..r).map(|k| n / r + usize::from(k < n % r)).collect();
        Self::planted(sizes, within, between)
    }

    pub fn probabilities(&self) -> &DMatrix<f64> {
        &self.probabilities
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn min_size(&self) -> usize {
        *self.sizes.iter().min().expect("nonempty")
    }

    pub fn max_size(&self) -> usize {
        *self.sizes.iter().max().expect("nonempty")
    }

    /// Largest entry of `B`.
    pub fn p_max(&self) -> f64 {
        self.probabilities.max()
    }

    /// Largest off-diagonal entry of `B`, 0 when `r = 1`.
    pub fn max_between(&self) -> f64 {
        let r = self.num_clusters();
        let mut best = 0.0f64;
        for k in 0..r {
            for l in 0..r {
                if k != l {
                    best = best.max(self.probabilities[(k, l)]);
                }
            }
        }
        best
    }

    /// The contiguous partition matching the cluster sizes.
    pub fn contiguous_partition(&self) -> Partition {
        Partition::from_sizes(&self.sizes).expect("sizes validated")
    }

    /// Expected adjacency `E[A]` for the given partition (zero diagonal).
    pub fn expected_adjacency(&self, partition: &Partition) -> Result<DMatrix<f64>> {
        self.check_partition(partition)?;
        let labels = partition.labels();
        let n = labels.len();
        Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                self.probabilities[(labels[i], labels[j])]
            }
        }))
    }

    fn check_partition(&self, partition: &Partition) -> Result<()> {
        if partition.sizes() != self.sizes {
            return Err(Error::DimensionMismatch(format!(
                "partition cluster sizes {:?} do not match model sizes {:?}",
                partition.sizes(),
                self.sizes
            )));
        }
        Ok(())
    }
}

/// Node-to-cluster assignment with cluster indices `0..r`, every index used.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
    num_clusters: usize,
}

impl Partition {
    /// Validates that `labels` uses exactly the indices `0..r` for some `r`.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("no nodes".into()));
        }
        let r = labels.iter().max().map_or(0, |&m| m + 1);
        let mut seen = vec![false; r];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(k) = seen.iter().position(|&s| !s) {
            return Err(Error::InvalidPartition(format!(
                "cluster {k} of {r} is empty"
            )));
        }
        Ok(Self {
            labels,
            num_clusters: r,
        })
    }

    /// Relabels arbitrary cluster ids into canonical form: clusters numbered
    /// by first appearance.
    pub fn canonical_from<T: Eq + std::hash::Hash + Clone>(raw: &[T]) -> Result<Self> {
        let mut ids = std::collections::HashMap::new();
        let labels = raw
            .iter()
            .map(|x| {
                let next = ids.len();
                *ids.entry(x.clone()).or_insert(next)
            })
            .collect();
        Self::new(labels)
    }

    /// Contiguous blocks of the given sizes.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.contains(&0) {
            return Err(Error::InvalidPartition("cluster of size 0".into()));
        }
        Self::new(
            sizes
                .iter()
                .enumerate()
                .flat_map(|(k, &m)| std::iter::repeat_n(k, m))
                .collect(),
        )
    }

    /// Inverse of [`Partition::membership_matrix`]: each row must hold a
    /// single 1.
    pub fn from_membership(z: &DMatrix<f64>) -> Result<Self> {
        let labels = z
            .row_iter()
            .enumerate()
            .map(|(i, row)| {
                let ones: Vec<usize> = (0..row.len()).filter(|&k| row[k] == 1.0).collect();
                let zeros = row.iter().filter(|&&v| v == 0.0).count();
                if ones.len() == 1 && zeros + 1 == row.len() {
                    Ok(ones[0])
                } else {
                    Err(Error::InvalidPartition(format!(
                        "row {i} is not a unit indicator"
                    )))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let p = Self::new(labels)?;
        if p.num_clusters != z.ncols() {
            return Err(Error::InvalidPartition(format!(
                "membership matrix has {} columns but only {} are used",
                z.ncols(),
                p.num_clusters
            )));
        }
        Ok(p)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.num_clusters
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut m = vec![0; self.num_clusters];
        for &l in &self.labels {
            m[l] += 1;
        }
        m
    }

    /// Node indices of each cluster, in increasing order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    /// The `n x r` 0/1 membership matrix `Z`; `Z^T Z = diag(m)`.
    pub fn membership_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.num_nodes(), self.num_clusters, |i, k| {
            if self.labels[i] == k {
                1.0
            } else {
                0.0
            }
        })
    }

    /// The same clustering with clusters renumbered by first appearance.
    pub fn canonical(&self) -> Partition {
        Self::canonical_from(&self.labels).expect("already valid")
    }

    /// Applies a node permutation: node `i` of the result is node
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Partition> {
        Partition::canonical_from(&perm.iter().map(|&p| self.labels[p]).collect::<Vec<_>>())
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(labels: Vec<usize>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

/// Symmetric 0/1 adjacency matrix with an empty diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    dense: DMatrix<f64>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyMatrix {
    /// Builds from undirected edges; duplicates collapse, self-loops are
    /// rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut dense = DMatrix::zeros(n, n);
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge ({u},{v}) out of range for {n} nodes"
                )));
            }
            if u == v {
                return Err(Error::InvalidArgument(format!("self-loop at node {u}")));
            }
            dense[(u, v)] = 1.0;
            dense[(v, u)] = 1.0;
        }
        Ok(Self::from_valid_dense(dense))
    }

    pub fn from_dense(dense: DMatrix<f64>) -> Result<Self> {
        let n = dense.nrows();
        if dense.ncols() != n {
            return Err(Error::DimensionMismatch(
                "adjacency matrix must be square".into(),
            ));
        }
        for i in 0..n {
            if dense[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "nonzero diagonal at node {i}"
                )));
            }
            for j in 0..n {
                let v = dense[(i, j)];
                if v != 0.0 && v != 1.0 {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({i},{j}) = {v} is not 0/1"
                    )));
                }
                if v != dense[(j, i)] {
                    return Err(Error::InvalidArgument(format!(
                        "not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self::from_valid_dense(dense))
    }

    fn from_valid_dense(dense: DMatrix<f64>) -> Self {
        let n = dense.nrows();
        let neighbors = (0..n)
            .map(|i| (0..n).filter(|&j| dense[(i, j)] != 0.0).collect())
            .collect();
        Self { dense, neighbors }
    }

    pub fn num_nodes(&self) -> usize {
        self.dense.nrows()
    }

    pub fn num_edges(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degrees(&self) -> Vec<f64> {
        self.neighbors.iter().map(|nb| nb.len() as f64).collect()
    }

    /// Mean degree `2|E| / n`.
    pub fn mean_degree(&self) -> f64 {
        let n = self.num_nodes();
        if n == 0 {
            0.0
        } else {
            2.0 * self.num_edges() as f64 / n as f64
        }
    }

    /// Edge density `2|E| / (n (n - 1))`.
    pub fn density(&self) -> f64 {
        let n = self.num_nodes() as f64;
        if n < 2.0 {
            0.0
        } else {
            2.0 * self.num_edges() as f64 / (n * (n - 1.0))
        }
    }

    /// Sparse product `y = A x`.
    pub fn matvec(&self, x: &DVector<f64>, y: &mut DVector<f64>) {
        for (i, nb) in self.neighbors.iter().enumerate() {
            y[i] = nb.iter().map(|&j| x[j]).sum();
        }
    }

    /// Relabels nodes: node `i` of the result is node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        if perm.len() != n {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        Ok(Self::from_valid_dense(DMatrix::from_fn(n, n, |i, j| {
            self.dense[(perm[i], perm[j])]
        })))
    }
}

/// Feasibility measurements of a candidate clustering matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Feasibility {
    pub min_eigenvalue: f64,
    pub min_entry: f64,
    pub max_row_sum_error: f64,
    pub max_asymmetry: f64,
}

impl Feasibility {
    pub fn within(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol
            && self.min_entry >= -tol
            && self.max_row_sum_error <= tol
            && self.max_asymmetry <= tol
    }
}

/// Dense symmetric relaxation variable `X`: ideally PSD, nonnegative and
/// row-stochastic.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusteringMatrix(DMatrix<f64>);

impl ClusteringMatrix {
    /// Wraps a square matrix; feasibility is measured, not enforced.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(
                "clustering matrix must be square".into(),
            ));
        }
        Ok(Self(m))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::sym_eigenvalues(&self.0)
    }

    pub fn feasibility(&self) -> Result<Feasibility> {
        let n = self.dim();
        let m = &self.0;
        let mut max_asymmetry = 0.0f64;
        for j in 0..n {
            for i in 0..j {
                max_asymmetry = max_asymmetry.max((m[(i, j)] - m[(j, i)]).abs());
            }
        }
        let max_row_sum_error = m
            .row_iter()
            .map(|row| (row.sum() - 1.0).abs())
            .fold(0.0, f64::max);
        Ok(Feasibility {
            min_eigenvalue: self.eigenvalues()?.last().copied().unwrap_or(0.0),
            min_entry: m.min(),
            max_row_sum_error,
            max_asymmetry,
        })
    }

    pub fn is_feasible(&self, tol: f64) -> Result<bool> {
        Ok(self.feasibility()?.within(tol))
    }
}

/// Samples `A ~ SBM(B, Z)`: for `i < j` in row-major order, one uniform draw
/// from a ChaCha8 stream seeded by `seed`, mirrored to `(j, i)`.
pub fn sample_sbm(model: &BlockModel, partition: &Partition, seed: u64) -> Result<AdjacencyMatrix> {
    model.check_partition(partition)?;
    let labels = partition.labels();
    let n = labels.len();
    let b = model.probabilities();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dense = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            if u < b[(labels[i], labels[j])] {
                dense[(i, j)] = 1.0;
                dense[(j, i)] = 1.0;
            }
        }
    }
    Ok(AdjacencyMatrix::from_valid_dense(dense))
}

/// `X_0 = Z diag(m)^{-1} Z^T`: block `(k, k)` filled with `1/m_k`, zero
/// across clusters.
pub fn ground_truth_matrix(partition: &Partition) -> ClusteringMatrix {
    let labels = partition.labels();
    let sizes = partition.sizes();
    let n = labels.len();
    ClusteringMatrix(DMatrix::from_fn(n, n, |i, j| {
        if labels[i] == labels[j] {
            1.0 / sizes[labels[i]] as f64
        } else {
            0.0
        }
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AssortativityClass {
    Strong,
    WeakOnly,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Assortativity {
    pub class: AssortativityClass,
    /// `min_k (B_kk - max_{l != k} B_kl)`.
    pub delta: f64,
}

/// Strong: `min_k B_kk > max_{k != l} B_kl`. Weak: every row's diagonal
/// beats that row's off-diagonal entries (`delta > 0`). With a single
/// cluster the off-diagonal maxima are taken as 0.
pub fn assortativity(model: &BlockModel) -> Assortativity {
    let b = model.probabilities();
    let r = model.num_clusters();
    let delta = (0..r)
        .map(|k| {
            let off = (0..r)
                .filter(|&l| l != k)
                .map(|l| b[(k, l)])
                .fold(0.0, f64::max);
            b[(k, k)] - off
        })
        .fold(f64::INFINITY, f64::min);
    let min_diag = (0..r).map(|k| b[(k, k)]).fold(f64::INFINITY, f64::min);
    let class = if min_diag - model.max_between() > 0.0 {
        AssortativityClass::Strong
    } else if delta > 0.0 {
        AssortativityClass::WeakOnly
    } else {
        AssortativityClass::None
    };
    Assortativity { class, delta }
}

/// Right-hand side of the separation condition:
/// `2 sqrt(6 log n) max_k sqrt(B_kk / m_k) + 6 max_{l != k} sqrt(B_kl log n / m_min)
///  + c sqrt(n p_max) / m_min`.
pub fn separation_threshold(model: &BlockModel, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "separation constant must be positive, got {c}"
        )));
    }
    let b = model.probabilities();
    let r = model.num_clusters();
    let n = model.num_nodes() as f64;
    let log_n = n.ln();
    let m_min = model.min_size() as f64;
    let within = (0..r)
        .map(|k| (b[(k, k)] / model.sizes()[k] as f64).sqrt())
        .fold(0.0, f64::max);
    let between = (model.max_between() * log_n / m_min).sqrt();
    Ok(
        2.0 * (6.0 * log_n).sqrt() * within
            + 6.0 * between
            + c * (n * model.p_max()).sqrt() / m_min,
    )
}

/// Whether `delta` meets the separation condition for constant `c`.
pub fn separation_holds(model: &BlockModel, c: f64) -> Result<bool> {
    let threshold = separation_threshold(model, c)?;
    Ok(assortativity(model).delta >= threshold)
}

/// Penalty range under which the penalized program provably returns `X_0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambdaInterval {
    pub lower: f64,
    pub upper: f64,
}

impl LambdaInterval {
    pub fn is_empty(&self) -> bool {
        self.lower > self.upper
    }

    pub fn contains(&self, lambda: f64) -> bool {
        self.lower <= lambda && lambda <= self.upper
    }
}

/// `lower = c1 max_k sqrt(m_k B_kk) + c2 sqrt(n max_{k != l} B_kl)`,
/// `upper = m_min (delta - max_{k,l} sqrt(B_kl log m_k / m_k))`.
/// An empty interval is a valid answer.
pub fn lambda_interval(model: &BlockModel, c1: f64, c2: f64) -> LambdaInterval {
    let b = model.probabilities();
    let r = model.num_clusters();
    let sizes = model.sizes();
    let n = model.num_nodes() as f64;
    let lower = c1
        * (0..r)
            .map(|k| (sizes[k] as f64 * b[(k, k)]).sqrt())
            .fold(0.0, f64::max)
        + c2 * (n * model.max_between()).sqrt();
    let fluctuation = (0..r)
        .flat_map(|k| (0..r).map(move |l| (k, l)))
        .map(|(k, l)| {
            let m = sizes[k] as f64;
            (b[(k, l)] * m.ln() / m).sqrt()
        })
        .fold(0.0, f64::max);
    let upper = model.min_size() as f64 * (assortativity(model).delta - fluctuation);
    LambdaInterval { lower, upper }
}
