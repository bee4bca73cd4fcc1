//! First-order splitting solver for the trace-penalized program
//!
//! ```text
//! max <A, X> - lambda trace(X)   s.t.  X PSD, X >= 0, X 1 = 1
//! ```
//!
//! and for the known-`r` program that replaces the penalty by the
//! constraint `trace(X) = r`.
//!
//! Both are solved by ADMM on `max <C, X>` over an intersection of convex
//! sets whose projections are exact. Two splittings are available:
//!
//! * [`Splitting::Paired`] (default): `X` lives in `{PSD, X1 = 1[, trace]}`,
//!   projected in closed form by [`project_psd_affine`], and is matched to a
//!   nonnegative copy `Y`.
//! * [`Splitting::Consensus`]: one copy per set (PSD, nonnegative, affine),
//!   averaged into a consensus variable. Needs several times more
//!   iterations; kept as an independent route for cross-checking.
//!
//! Residuals are Frobenius norms divided by `n`, i.e. root-mean-square per
//! entry, so tolerances do not drift with the problem size.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg;
use crate::projections::{project_affine, project_psd, project_psd_affine, SymmetricMatrix};
use crate::sbm::{AdjacencyMatrix, ClusteringMatrix};
use crate::{Error, Result};

/// Iterates whose primal residual is tracked for the reported solution.
const REPORT_WINDOW: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Splitting {
    Paired,
    Consensus,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Initial ADMM penalty.
    pub rho: f64,
    pub max_iter: usize,
    /// Tolerance on the RMS constraint mismatch between the copies.
    pub tol_primal: f64,
    /// Tolerance on `rho` times the RMS change of the iterate.
    pub tol_dual: f64,
    /// Relaxation factor in `[1, 1.9]`.
    pub over_relaxation: f64,
    /// `rho` doubles (halves) when the primal residual exceeds the dual one
    /// by this factor (or vice versa).
    pub adapt_ratio: f64,
    /// Iterations between `rho` updates.
    pub adapt_interval: usize,
    pub splitting: Splitting,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iter: 5000,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            over_relaxation: 1.6,
            adapt_ratio: 10.0,
            adapt_interval: 10,
            splitting: Splitting::Paired,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.rho > 0.0) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.tol_primal > 0.0) || !(self.tol_dual > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if !(1.0..=1.9).contains(&self.over_relaxation) {
            return bad(format!(
                "over_relaxation {} outside [1, 1.9]",
                self.over_relaxation
            ));
        }
        if !(self.adapt_ratio > 1.0) || self.adapt_interval == 0 {
            return bad("adapt_ratio must exceed 1 and adapt_interval must be positive".into());
        }
        Ok(())
    }
}

/// Which program to solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Program {
    /// Maximize `<A, X> - lambda trace(X)`.
    Penalized { lambda: f64 },
    /// Maximize `<A, X>` subject to `trace(X) = r`.
    KnownClusters { r: usize },
}

impl Program {
    fn trace_target(&self) -> Option<f64> {
        match *self {
            Program::Penalized { .. } => None,
            Program::KnownClusters { r } => Some(r as f64),
        }
    }

    fn cost(&self, a: &AdjacencyMatrix) -> DMatrix<f64> {
        let mut c = a.as_matrix().clone();
        if let Program::Penalized { lambda } = *self {
            for i in 0..c.nrows() {
                c[(i, i)] -= lambda;
            }
        }
        c
    }

    /// Objective value at `x`.
    pub fn objective(&self, a: &AdjacencyMatrix, x: &DMatrix<f64>) -> f64 {
        let linear = a.as_matrix().dot(x);
        match *self {
            Program::Penalized { lambda } => linear - lambda * x.trace(),
            Program::KnownClusters { .. } => linear,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Program::Penalized { lambda } if !(lambda >= 0.0) || !lambda.is_finite() => {
                Err(Error::InvalidArgument(format!(
                    "lambda must be finite and nonnegative, got {lambda}"
                )))
            }
            Program::KnownClusters { r } if r == 0 || r > n => {
                Err(Error::InvalidArgument(format!("r = {r} outside [1, {n}]")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverResult {
    pub x: ClusteringMatrix,
    /// `<A, X> - lambda trace(X)`, or `<A, X>` for the known-`r` program.
    pub objective: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Solves the trace-penalized program from the cold start `11^T / n`.
pub fn solve_sdp_lambda(
    a: &AdjacencyMatrix,
    lambda: f64,
    config: &SolverConfig,
) -> Result<SolverResult> {
    solve(a, Program::Penalized { lambda }, config, None)
}

/// Solves the known-`r` program from the cold start `11^T / n`.
pub fn solve_sdp_pw(a: &AdjacencyMatrix, r: usize, config: &SolverConfig) -> Result<SolverResult> {
    solve(a, Program::KnownClusters { r }, config, None)
}

/// Solves `program`, starting from the primal matrix `warm_start` when given.
///
/// Hitting `max_iter` is not an error: the result is returned with
/// `converged = false`.
pub fn solve(
    a: &AdjacencyMatrix,
    program: Program,
    config: &SolverConfig,
    warm_start: Option<&ClusteringMatrix>,
) -> Result<SolverResult> {
    let state = warm_start.map(|x| SolverState::from_primal(x.as_matrix().clone(), config));
    solve_resumable(a, program, config, state.as_ref()).map(|(res, _)| res)
}

/// Full iterate of the splitting method: primal copy, scaled duals and the
/// current penalty. Resuming from the state of a nearby program (e.g. the
/// previous point of a penalty sweep) keeps the dual information that a
/// primal-only warm start throws away.
#[derive(Clone, Debug)]
pub struct SolverState {
    primal: DMatrix<f64>,
    duals: Vec<DMatrix<f64>>,
    rho: f64,
}

impl SolverState {
    fn from_primal(primal: DMatrix<f64>, config: &SolverConfig) -> Self {
        Self {
            primal,
            duals: Vec::new(),
            rho: config.rho,
        }
    }

    fn dim(&self) -> usize {
        self.primal.nrows()
    }

    /// Dual copy `k`, or zeros when the state came from another splitting.
    fn dual(&self, k: usize, count: usize) -> DMatrix<f64> {
        let n = self.dim();
        if self.duals.len() == count {
            self.duals[k].clone()
        } else {
            DMatrix::zeros(n, n)
        }
    }
}

/// Like [`solve`], resuming from (and returning) the full solver state.
pub fn solve_resumable(
    a: &AdjacencyMatrix,
    program: Program,
    config: &SolverConfig,
    state: Option<&SolverState>,
) -> Result<(SolverResult, SolverState)> {
    config.validate()?;
    let n = a.num_nodes();
    if n == 0 {
        return Err(Error::InvalidArgument("empty graph (no nodes)".into()));
    }
    program.validate(n)?;
    let state = match state {
        Some(s) if s.dim() == n => s.clone(),
        Some(s) => {
            return Err(Error::DimensionMismatch(format!(
                "warm start is {0}x{0}, graph has {n} nodes",
                s.dim()
            )))
        }
        None => SolverState::from_primal(DMatrix::from_element(n, n, 1.0 / n as f64), config),
    };
    if !state.primal.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let cost = program.cost(a);
    let trace_target = program.trace_target();
    let (outcome, state) = match config.splitting {
        Splitting::Paired => paired(&cost, trace_target, state, config)?,
        Splitting::Consensus => consensus(&cost, trace_target, state, config)?,
    };

    let x = feasible_point(outcome.iterate, trace_target)?;
    let objective = program.objective(a, &x);
    let result = SolverResult {
        x: ClusteringMatrix::new(x)?,
        objective,
        primal_residual: outcome.primal,
        dual_residual: outcome.dual,
        iterations: outcome.iterations,
        converged: outcome.converged,
    };
    Ok((result, state))
}

/// Maps the final iterate into the feasible set, also after an early stop.
///
/// The PSD-affine projection is exact on the PSD and row-sum constraints.
/// Its negative entries are removed by mixing towards a PSD, stochastic,
/// entrywise positive `M = a I + b 11^T`, using the smallest weight that
/// clears every negative entry. Without a trace constraint `M = 11^T / n`,
/// which only shrinks the spectrum off the all-ones direction; with one,
/// `a` is set so that `M` has the target trace. When no such `M` exists
/// (trace `n`), entries are clipped.
fn feasible_point(iterate: DMatrix<f64>, trace_target: Option<f64>) -> Result<DMatrix<f64>> {
    let n = iterate.nrows();
    let p =
        project_psd_affine(&SymmetricMatrix::from_symmetric(iterate), trace_target)?.into_inner();
    let a = match trace_target {
        None => 0.0,
        Some(r) => (r - 1.0) / (n as f64 - 1.0),
    };
    if n < 2 || !(a < 1.0 - 1e-12) {
        return Ok(p.map(|v| v.max(0.0)));
    }
    let b = (1.0 - a) / n as f64;
    let mut t: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            let v = p[(i, j)];
            if v < 0.0 {
                let m = if i == j { a + b } else { b };
                t = t.max(-v / (m - v));
            }
        }
    }
    if t == 0.0 {
        return Ok(p);
    }
    let mut x = p * (1.0 - t);
    x.add_scalar_mut(t * b);
    for i in 0..n {
        x[(i, i)] += t * a;
    }
    Ok(x.map(|v| v.max(0.0)))
}

struct Outcome {
    iterate: DMatrix<f64>,
    primal: f64,
    dual: f64,
    iterations: usize,
    converged: bool,
}

/// Keeps the last few iterates and reports the one with the smallest primal
/// residual (among those meeting the dual tolerance on a converged exit).
struct Window {
    entries: VecDeque<(f64, f64, DMatrix<f64>)>,
}

impl Window {
    fn new() -> Self {
        Self {
            entries: VecDeque::with_capacity(REPORT_WINDOW),
        }
    }

    fn push(&mut self, primal: f64, dual: f64, iterate: &DMatrix<f64>) {
        let slot = if self.entries.len() == REPORT_WINDOW {
            let (_, _, mut m) = self.entries.pop_front().expect("full window");
            m.copy_from(iterate);
            m
        } else {
            iterate.clone()
        };
        self.entries.push_back((primal, dual, slot));
    }

    fn finish(mut self, iterations: usize, converged: bool, tol_dual: f64) -> Outcome {
        let best = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, (_, d, _))| !converged || *d <= tol_dual)
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i)
            .expect("window is nonempty");
        let (primal, dual, iterate) = self.entries.remove(best).expect("index in range");
        Outcome {
            iterate,
            primal,
            dual,
            iterations,
            converged,
        }
    }
}

/// `y = a x + b y`
fn axpby(y: &mut DMatrix<f64>, a: f64, x: &DMatrix<f64>, b: f64) {
    y.zip_apply(x, |yv, xv| *yv = a * xv + b * *yv);
}

fn rms(m: &DMatrix<f64>) -> f64 {
    m.norm() / m.nrows() as f64
}

/// Two-block ADMM: `X` in the PSD-affine set carrying the linear objective,
/// `Y` nonnegative, constraint `X = Y`, scaled dual `U`.
fn paired(
    cost: &DMatrix<f64>,
    trace_target: Option<f64>,
    state: SolverState,
    cfg: &SolverConfig,
) -> Result<(Outcome, SolverState)> {
    let alpha = cfg.over_relaxation;
    let mut u = state.dual(0, 1);
    let mut rho = state.rho;
    let mut y = state.primal;
    let mut window = Window::new();
    let mut scratch = y.clone();
    let mut diff = y.clone();

    let mut finished = None;
    for it in 1..=cfg.max_iter {
        // X = P(Y - U + C / rho)
        scratch.copy_from(&y);
        scratch -= &u;
        axpby(&mut scratch, 1.0 / rho, cost, 1.0);
        let x = project_psd_affine(
            &SymmetricMatrix::from_symmetric(scratch.clone()),
            trace_target,
        )?
        .into_inner();

        // relaxed X in `scratch`, then Y = max(X_hat + U, 0), U += X_hat - Y
        scratch.copy_from(&x);
        axpby(&mut scratch, 1.0 - alpha, &y, alpha);
        diff.copy_from(&y);
        y.zip_zip_apply(&scratch, &u, |yv, xh, uv| *yv = (xh + uv).max(0.0));
        u += &scratch;
        u -= &y;

        diff -= &y;
        let dual = rho * rms(&diff);
        diff.copy_from(&x);
        diff -= &y;
        let primal = rms(&diff);
        window.push(primal, dual, &y);

        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            finished = Some((it, true));
            break;
        }
        if it % cfg.adapt_interval == 0 {
            if primal > cfg.adapt_ratio * dual {
                rho *= 2.0;
                u /= 2.0;
            } else if dual > cfg.adapt_ratio * primal {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let (iterations, converged) = finished.unwrap_or((cfg.max_iter, false));
    let state = SolverState {
        primal: y,
        duals: vec![u],
        rho,
    };
    Ok((window.finish(iterations, converged, cfg.tol_dual), state))
}

/// Three-set consensus ADMM: copies for the PSD cone, the nonnegative
/// orthant and the affine set, a consensus average `Z` that absorbs the
/// objective as a drift `C / (3 rho)`, and a scaled dual per copy.
fn consensus(
    cost: &DMatrix<f64>,
    trace_target: Option<f64>,
    state: SolverState,
    cfg: &SolverConfig,
) -> Result<(Outcome, SolverState)> {
    let n = cost.nrows();
    let alpha = cfg.over_relaxation;
    let mut duals: Vec<DMatrix<f64>> = (0..3).map(|k| state.dual(k, 3)).collect();
    let mut rho = state.rho;
    let mut z = state.primal;
    let mut window = Window::new();

    let mut finished = None;
    for it in 1..=cfg.max_iter {
        let shifted = |k: usize| SymmetricMatrix::from_symmetric(&z - &duals[k]);
        let copies = [
            project_psd(&shifted(0))?.into_inner(),
            (&z - &duals[1]).map(|v| v.max(0.0)),
            project_affine(&shifted(2), trace_target)?.into_inner(),
        ];
        let relaxed: Vec<DMatrix<f64>> = copies
            .iter()
            .map(|c| c * alpha + &z * (1.0 - alpha))
            .collect();

        let mut z_next = cost / (3.0 * rho);
        for k in 0..3 {
            axpby(&mut z_next, 1.0 / 3.0, &relaxed[k], 1.0);
            axpby(&mut z_next, 1.0 / 3.0, &duals[k], 1.0);
        }
        let z_next = linalg::symmetrized(z_next);
        for k in 0..3 {
            duals[k] += &relaxed[k];
            duals[k] -= &z_next;
        }

        let primal = copies
            .iter()
            .map(|c| (c - &z_next).norm_squared())
            .sum::<f64>()
            .sqrt()
            / n as f64;
        let dual = rho * 3f64.sqrt() * rms(&(&z_next - &z));
        z = z_next;
        window.push(primal, dual, &z);

        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            finished = Some((it, true));
            break;
        }
        if it % cfg.adapt_interval == 0 {
            if primal > cfg.adapt_ratio * dual {
                rho *= 2.0;
                duals.iter_mut().for_each(|d| *d /= 2.0);
            } else if dual > cfg.adapt_ratio * primal {
                rho /= 2.0;
                duals.iter_mut().for_each(|d| *d *= 2.0);
            }
        }
    }
    let (iterations, converged) = finished.unwrap_or((cfg.max_iter, false));
    let state = SolverState {
        primal: z,
        duals,
        rho,
    };
    Ok((window.finish(iterations, converged, cfg.tol_dual), state))
}

/// Operator norm (largest singular value) of the adjacency matrix.
///
/// The matrix is symmetric and entrywise nonnegative, so this is its
/// largest eigenvalue; Lanczos with sparse products, relative tolerance
/// `1e-10` on the Ritz residual.
pub fn operator_norm(a: &AdjacencyMatrix) -> f64 {
    if a.num_edges() == 0 {
        return 0.0;
    }
    linalg::lanczos_largest(a.num_nodes(), |x, y| a.matvec(x, y), 1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbm::{ground_truth_matrix, sample_sbm, BlockModel, Partition};

    fn cliques(sizes: &[usize]) -> (AdjacencyMatrix, Partition) {
        let p = Partition::from_sizes(sizes).unwrap();
        let labels = p.labels();
        let n = labels.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                if labels[i] == labels[j] {
                    edges.push((i, j));
                }
            }
        }
        (AdjacencyMatrix::from_edges(n, &edges).unwrap(), p)
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            rho: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            over_relaxation: 2.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            max_iter: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let a = AdjacencyMatrix::from_edges(2, &[(0, 1)]).unwrap();
        assert!(solve_sdp_lambda(&a, -1.0, &SolverConfig::default()).is_err());
        assert!(solve_sdp_pw(&a, 3, &SolverConfig::default()).is_err());
    }

    #[test]
    fn two_node_closed_form() {
        // X = [[a, 1-a], [1-a, a]], a in [1/2, 1]: objective 2(1-a) - 2 lambda a,
        // maximized at a = 1/2 with value 1 - lambda = 0.5.
        let a = AdjacencyMatrix::from_edges(2, &[(0, 1)]).unwrap();
        let res = solve_sdp_lambda(&a, 0.5, &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert!((res.objective - 0.5).abs() < 1e-6);
        assert!((res.x.as_matrix() - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-6);
    }

    #[test]
    fn large_lambda_gives_uniform_matrix() {
        let model = BlockModel::balanced(40, 2, 0.5, 0.1).unwrap();
        let a = sample_sbm(&model, &model.contiguous_partition(), 3).unwrap();
        let lambda = operator_norm(&a) + 1.0;
        let res = solve_sdp_lambda(&a, lambda, &SolverConfig::default()).unwrap();
        let uniform = DMatrix::from_element(40, 40, 1.0 / 40.0);
        assert!((res.x.as_matrix() - uniform).norm() < 1e-4);
    }

    #[test]
    fn known_r_equal_n_beats_identity() {
        let model = BlockModel::balanced(12, 3, 0.7, 0.2).unwrap();
        let a = sample_sbm(&model, &model.contiguous_partition(), 9).unwrap();
        let res = solve_sdp_pw(&a, 12, &SolverConfig::default()).unwrap();
        let at_identity = a.as_matrix().trace();
        assert!(res.objective >= at_identity - 1e-6);
    }

    #[test]
    fn known_r_one_is_uniform() {
        let (a, _) = cliques(&[3, 4]);
        let res = solve_sdp_pw(&a, 1, &SolverConfig::default()).unwrap();
        assert!((res.x.as_matrix() - DMatrix::from_element(7, 7, 1.0 / 7.0)).amax() < 1e-6);
    }

    #[test]
    fn known_r_two_triangles() {
        let (a, p) = cliques(&[3, 3]);
        let res = solve_sdp_pw(&a, 2, &SolverConfig::default()).unwrap();
        assert!(res.converged);
        assert!((res.objective - 4.0).abs() < 1e-5);
        assert!((res.x.as_matrix() - ground_truth_matrix(&p).as_matrix()).amax() < 1e-5);
    }

    #[test]
    fn splittings_agree() {
        let model = BlockModel::balanced(24, 3, 0.8, 0.1).unwrap();
        let a = sample_sbm(&model, &model.contiguous_partition(), 5).unwrap();
        let lambda = a.mean_degree().sqrt();
        let paired = solve_sdp_lambda(&a, lambda, &SolverConfig::default()).unwrap();
        let cfg = SolverConfig {
            splitting: Splitting::Consensus,
            max_iter: 20000,
            ..Default::default()
        };
        let cons = solve_sdp_lambda(&a, lambda, &cfg).unwrap();
        assert!(paired.converged && cons.converged);
        assert!((paired.x.as_matrix() - cons.x.as_matrix()).norm() < 1e-3);
        assert!((paired.objective - cons.objective).abs() < 1e-3);
    }

    #[test]
    fn non_converged_result_still_feasible_enough() {
        let model = BlockModel::balanced(30, 3, 0.6, 0.1).unwrap();
        let a = sample_sbm(&model, &model.contiguous_partition(), 1).unwrap();
        let cfg = SolverConfig {
            max_iter: 3,
            ..Default::default()
        };
        let res = solve_sdp_lambda(&a, 1.0, &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        let x = res.x.as_matrix();
        assert!(x.min() >= 0.0);
        assert!(res.x.feasibility().unwrap().within(1e-10));
    }

    #[test]
    fn returned_matrix_is_feasible() {
        let cfg = SolverConfig::default();
        let tol = 10.0 * cfg.tol_primal;
        for seed in 0..4 {
            let model = BlockModel::balanced(60, 3, 0.5 + 0.1 * seed as f64, 0.1).unwrap();
            let a = sample_sbm(&model, &model.contiguous_partition(), 900 + seed).unwrap();
            let lam = solve_sdp_lambda(&a, a.mean_degree().sqrt(), &cfg).unwrap();
            let pw = solve_sdp_pw(&a, 3, &cfg).unwrap();
            assert!(
                lam.x.feasibility().unwrap().within(tol),
                "{:?}",
                lam.x.feasibility()
            );
            assert!(
                pw.x.feasibility().unwrap().within(tol),
                "{:?}",
                pw.x.feasibility()
            );
            assert!((pw.x.trace() - 3.0).abs() <= tol);
        }
        // trace n: the identity, no interior point to mix towards
        let a = AdjacencyMatrix::from_edges(3, &[(0, 1)]).unwrap();
        let res = solve_sdp_pw(&a, 3, &cfg).unwrap();
        assert!((res.x.as_matrix() - DMatrix::identity(3, 3)).amax() < 1e-6);
    }

    #[test]
    fn feasible_point_clears_negatives_exactly() {
        // PSD, rows summing to 1, one negative pair
        let p = DMatrix::from_row_slice(
            3,
            3,
            &[0.6, 0.45, -0.05, 0.45, 0.6, -0.05, -0.05, -0.05, 1.1],
        );
        for target in [None, Some(p.trace())] {
            let x = feasible_point(p.clone(), target).unwrap();
            let cm = ClusteringMatrix::new(x.clone()).unwrap();
            assert!(
                cm.feasibility().unwrap().within(1e-12),
                "{:?}",
                cm.feasibility()
            );
            assert!(x.min().abs() < 1e-15);
            if target.is_some() {
                assert!((x.trace() - p.trace()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn warm_start_dimension_checked() {
        let a = AdjacencyMatrix::from_edges(3, &[(0, 1)]).unwrap();
        let bad = ground_truth_matrix(&Partition::new(vec![0, 0]).unwrap());
        assert!(solve(
            &a,
            Program::Penalized { lambda: 0.1 },
            &SolverConfig::default(),
            Some(&bad)
        )
        .is_err());
    }

    #[test]
    fn operator_norm_examples() {
        let (k3, _) = cliques(&[3]);
        assert!((operator_norm(&k3) - 2.0).abs() < 1e-10);
        let empty = AdjacencyMatrix::from_edges(4, &[]).unwrap();
        assert_eq!(operator_norm(&empty), 0.0);
        // star K_{1,4}: sqrt(4)
        let star = AdjacencyMatrix::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!((operator_norm(&star) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn operator_norm_matches_dense() {
        let model = BlockModel::balanced(50, 2, 0.3, 0.1).unwrap();
        for seed in 0..3 {
            let a = sample_sbm(&model, &model.contiguous_partition(), seed).unwrap();
            let dense = linalg::sym_eigenvalues(a.as_matrix()).unwrap();
            let expected = dense[0].abs().max(dense.last().unwrap().abs());
            assert!((operator_norm(&a) - expected).abs() < 1e-6);
        }
    }
}
