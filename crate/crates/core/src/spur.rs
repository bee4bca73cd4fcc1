//! Penalty selection for the trace-penalized program.
//!
//! The program is solved over a grid of penalties. Each solution `X` is
//! scored by `theta = (sum of the r largest eigenvalues) / trace(X)` with
//! `r = round(trace(X))`, and the best-scoring penalty gives the estimate
//! `r_hat = round(trace(X_hat))`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::linalg;
use crate::sbm::{AdjacencyMatrix, ClusteringMatrix};
use crate::solver::{operator_norm, solve_resumable, Program, SolverConfig, SolverState};
use crate::{Error, Result};

/// Scores within this distance of the best one count as ties.
pub const TIE_TOLERANCE: f64 = 1e-6;

/// Traces farther than this from the nearest integer are flagged.
pub const LOW_CONFIDENCE_DISTANCE: f64 = 0.3;

/// Version tag written at the top of sweep CSV files.
pub const CSV_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridMode {
    /// `lambda_i = (1 + ||A||)^(i / T) - 1` for `i = 0..T`.
    Paper,
    /// `T` log-spaced points in `[0.1 sqrt(d), 2 sqrt(d)]`, `d` the mean degree.
    DegreeScaled,
}

#[derive(Clone, Debug)]
pub struct SpurOptions {
    pub grid_size: usize,
    pub mode: GridMode,
    /// Resume each solve from the previous (smaller) penalty. Without warm
    /// starts the grid points are solved independently and in parallel.
    pub warm_start: bool,
    pub solver: SolverConfig,
}

impl Default for SpurOptions {
    fn default() -> Self {
        Self {
            grid_size: 20,
            mode: GridMode::DegreeScaled,
            warm_start: true,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Score {
    pub r_lambda: usize,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub trace: f64,
    pub r_lambda: usize,
    pub theta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub low_confidence: bool,
}

#[derive(Clone, Debug)]
pub struct SpurResult {
    pub grid: Vec<GridPoint>,
    pub chosen_lambda: f64,
    pub r_hat: usize,
    pub x_hat: ClusteringMatrix,
    /// Whether the sweep ran sequentially with warm starts.
    pub warm_started: bool,
}

impl SpurResult {
    /// Grid entry of the chosen penalty.
    pub fn chosen(&self) -> &GridPoint {
        self.grid
            .iter()
            .find(|p| p.lambda == self.chosen_lambda)
            .expect("chosen penalty is on the grid")
    }
}

/// Penalty grid in increasing order.
pub fn lambda_grid(a: &AdjacencyMatrix, t: usize, mode: GridMode) -> Result<Vec<f64>> {
    if t < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid size must be at least 2, got {t}"
        )));
    }
    match mode {
        GridMode::Paper => {
            let top = (1.0 + operator_norm(a)).ln();
            Ok((0..t)
                .map(|i| (i as f64 / t as f64 * top).exp() - 1.0)
                .collect())
        }
        GridMode::DegreeScaled => {
            let d = a.mean_degree();
            if d <= 0.0 {
                return Err(Error::EmptyGraph);
            }
            let (lo, hi) = (0.1 * d.sqrt(), 2.0 * d.sqrt());
            let ratio = hi / lo;
            Ok((0..t)
                .map(|i| match i {
                    0 => lo,
                    _ if i == t - 1 => hi,
                    _ => lo * ratio.powf(i as f64 / (t - 1) as f64),
                })
                .collect())
        }
    }
}

/// Rounds half-up, as used for `r_lambda` and `r_hat`.
fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Leading-eigenvalue fraction of a solution.
pub fn score(x: &ClusteringMatrix) -> Result<Score> {
    let trace = x.trace();
    if !(trace > 0.5) {
        return Err(Error::DegenerateTrace(trace));
    }
    let n = x.dim();
    let r_lambda = (round_half_up(trace) as usize).clamp(1, n);
    let values = linalg::sym_eigenvalues(x.as_matrix())?;
    let top: f64 = values[..r_lambda].iter().sum();
    Ok(Score {
        r_lambda,
        theta: (top / trace).clamp(0.0, 1.0),
    })
}

struct Solved {
    point: GridPoint,
    x: ClusteringMatrix,
}

fn evaluate(
    a: &AdjacencyMatrix,
    lambda: f64,
    config: &SolverConfig,
    state: Option<&SolverState>,
) -> Result<(Solved, SolverState)> {
    let (res, state) = solve_resumable(a, Program::Penalized { lambda }, config, state)?;
    let trace = res.x.trace();
    let Score { r_lambda, theta } = score(&res.x)?;
    log::debug!(
        "lambda {lambda:.4}: trace {trace:.4}, theta {theta:.6}, {} iterations{}",
        res.iterations,
        if res.converged {
            ""
        } else {
            " (not converged)"
        }
    );
    let point = GridPoint {
        lambda,
        trace,
        r_lambda,
        theta,
        converged: res.converged,
        iterations: res.iterations,
        low_confidence: (trace - trace.round()).abs() > LOW_CONFIDENCE_DISTANCE,
    };
    Ok((Solved { point, x: res.x }, state))
}

/// Solves every grid point, in increasing penalty order when warm-starting.
fn sweep(
    a: &AdjacencyMatrix,
    grid: &[f64],
    config: &SolverConfig,
    warm_start: bool,
) -> Result<Vec<Solved>> {
    if a.num_edges() == 0 {
        return Err(Error::EmptyGraph);
    }
    if let Some(bad) = grid.iter().find(|l| !(**l >= 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid penalty {bad}")));
    }
    if !warm_start {
        return grid
            .par_iter()
            .map(|&l| evaluate(a, l, config, None).map(|(s, _)| s))
            .collect();
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&i, &j| grid[i].total_cmp(&grid[j]));
    let mut slots: Vec<Option<Solved>> = (0..grid.len()).map(|_| None).collect();
    let mut state = None;
    for i in order {
        let (solved, next) = evaluate(a, grid[i], config, state.as_ref())?;
        slots[i] = Some(solved);
        state = Some(next);
    }
    Ok(slots
        .into_iter()
        .map(|s| s.expect("every slot solved"))
        .collect())
}

/// Runs the grid search.
///
/// Only converged grid points compete, and low-confidence ones only when
/// nothing else is left. Among scores within [`TIE_TOLERANCE`] of the best,
/// the largest penalty wins.
pub fn spur(a: &AdjacencyMatrix, options: &SpurOptions) -> Result<SpurResult> {
    let grid = lambda_grid(a, options.grid_size, options.mode)?;
    let solved = sweep(a, &grid, &options.solver, options.warm_start)?;

    let converged: Vec<&Solved> = solved.iter().filter(|s| s.point.converged).collect();
    // A solution of rank at most round(trace) scores theta = 1 even when
    // its trace is far from an integer, so confident points go first.
    let confident: Vec<&Solved> = converged
        .iter()
        .copied()
        .filter(|s| !s.point.low_confidence)
        .collect();
    let converged = if confident.is_empty() {
        converged
    } else {
        confident
    };
    let best = converged
        .iter()
        .map(|s| s.point.theta)
        .fold(f64::NEG_INFINITY, f64::max);
    let chosen = converged
        .iter()
        .filter(|s| s.point.theta >= best - TIE_TOLERANCE)
        .max_by(|x, y| x.point.lambda.total_cmp(&y.point.lambda))
        .ok_or(Error::NoConvergedGridPoint(solved.len()))?;

    let x_hat = chosen.x.clone();
    let r_hat = (round_half_up(x_hat.trace()) as usize).clamp(1, x_hat.dim());
    let chosen_lambda = chosen.point.lambda;
    Ok(SpurResult {
        grid: solved.iter().map(|s| s.point.clone()).collect(),
        chosen_lambda,
        r_hat,
        x_hat,
        warm_started: options.warm_start,
    })
}

/// Full per-penalty trajectory over `grid`, in the order given.
pub fn lambda_sweep_report(
    a: &AdjacencyMatrix,
    grid: &[f64],
    config: &SolverConfig,
    warm_start: bool,
) -> Result<Vec<GridPoint>> {
    Ok(sweep(a, grid, config, warm_start)?
        .into_iter()
        .map(|s| s.point)
        .collect())
}

/// Writes sweep points as CSV with a schema comment and a header row.
pub fn write_sweep_csv<W: Write>(points: &[GridPoint], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
    writeln!(out, "lambda,trace,r_lambda,theta,converged,iterations")?;
    for p in points {
        writeln!(
            out,
            "{:?},{:?},{},{:?},{},{}",
            p.lambda, p.trace, p.r_lambda, p.theta, p.converged, p.iterations
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::projections::{project_psd_affine, SymmetricMatrix};
    use crate::sbm::{ground_truth_matrix, Partition};
    use nalgebra::DMatrix;

    fn cliques(sizes: &[usize]) -> AdjacencyMatrix {
        let p = Partition::from_sizes(sizes).unwrap();
        let labels = p.labels();
        let mut edges = Vec::new();
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                if labels[i] == labels[j] {
                    edges.push((i, j));
                }
            }
        }
        AdjacencyMatrix::from_edges(labels.len(), &edges).unwrap()
    }

    #[test]
    fn paper_grid_endpoints() {
        let a = cliques(&[3]);
        let grid = lambda_grid(&a, 4, GridMode::Paper).unwrap();
        assert_eq!(grid[0], 0.0);
        assert_eq!(grid.len(), 4);
        // (1 + 2)^(3/4) - 1, strictly below the operator norm
        assert!((grid[3] - (3f64.powf(0.75) - 1.0)).abs() < 1e-9);
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
        assert!(*grid.last().unwrap() < 2.0);
    }

    #[test]
    fn degree_grid_values() {
        // K_26 has mean degree 25
        let a = cliques(&[26]);
        assert!((a.mean_degree() - 25.0).abs() < 1e-12);
        let grid = lambda_grid(&a, 3, GridMode::DegreeScaled).unwrap();
        assert_eq!(grid[0], 0.5);
        assert!((grid[1] - 0.5 * 20f64.sqrt()).abs() < 1e-12);
        assert_eq!(grid[2], 10.0);
    }

    #[test]
    fn grid_errors() {
        let a = cliques(&[3]);
        assert!(lambda_grid(&a, 1, GridMode::Paper).is_err());
        let empty = AdjacencyMatrix::from_edges(4, &[]).unwrap();
        assert!(matches!(
            lambda_grid(&empty, 5, GridMode::DegreeScaled),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn score_of_ground_truth_and_uniform() {
        let p = Partition::from_sizes(&[3, 4, 5]).unwrap();
        let s = score(&ground_truth_matrix(&p)).unwrap();
        assert_eq!(s.r_lambda, 3);
        assert!((s.theta - 1.0).abs() < 1e-12);

        let u = ClusteringMatrix::new(DMatrix::from_element(6, 6, 1.0 / 6.0)).unwrap();
        let s = score(&u).unwrap();
        assert_eq!(s.r_lambda, 1);
        assert!((s.theta - 1.0).abs() < 1e-12);
    }

    #[test]
    fn score_of_perturbed_truth_matches_dense_eigenvalues() {
        let p = Partition::from_sizes(&[4, 4]).unwrap();
        let x0 = ground_truth_matrix(&p).into_inner();
        let mut noise = DMatrix::<f64>::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                noise[(i, j)] = ((i * 7 + j * 3) % 5) as f64 * 0.01;
            }
        }
        let perturbed =
            project_psd_affine(&SymmetricMatrix::symmetric_part(&(x0 + noise)), Some(2.0)).unwrap();
        let x = ClusteringMatrix::new(perturbed.into_inner()).unwrap();
        let s = score(&x).unwrap();
        let eig = x.as_matrix().clone().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let expected = (values[0] + values[1]) / x.trace();
        assert_eq!(s.r_lambda, 2);
        assert!(s.theta < 1.0);
        assert!((s.theta - expected).abs() < 1e-10);
    }

    #[test]
    fn degenerate_trace_is_an_error() {
        let x = ClusteringMatrix::new(DMatrix::from_element(3, 3, 0.1)).unwrap();
        assert!(matches!(score(&x), Err(Error::DegenerateTrace(_))));
    }

    #[test]
    fn two_cliques_give_two() {
        let a = cliques(&[10, 10]);
        let res = spur(&a, &SpurOptions::default()).unwrap();
        assert_eq!(res.r_hat, 2);
        assert!((res.chosen().theta - 1.0).abs() < 1e-6);
        let eigen_count = res
            .x_hat
            .eigenvalues()
            .unwrap()
            .iter()
            .filter(|v| **v > 0.5)
            .count();
        assert_eq!(eigen_count, res.r_hat);
    }

    #[test]
    fn parallel_and_sequential_cold_sweeps_agree() {
        let a = cliques(&[6, 6]);
        let grid = lambda_grid(&a, 4, GridMode::DegreeScaled).unwrap();
        let cfg = SolverConfig::default();
        let par = lambda_sweep_report(&a, &grid, &cfg, false).unwrap();
        let again = lambda_sweep_report(&a, &grid, &cfg, false).unwrap();
        assert_eq!(par, again);
        assert_eq!(par.len(), 4);
    }

    #[test]
    fn sentinel_above_operator_norm_has_unit_trace() {
        let a = cliques(&[5, 5]);
        let grid = vec![0.5, operator_norm(&a) + 0.5];
        let points = lambda_sweep_report(&a, &grid, &SolverConfig::default(), true).unwrap();
        assert!((points[1].trace - 1.0).abs() < 1e-4);
        assert_eq!(points[1].r_lambda, 1);
    }

    #[test]
    fn csv_has_schema_and_header() {
        let p = GridPoint {
            lambda: 0.5,
            trace: 2.0,
            r_lambda: 2,
            theta: 1.0,
            converged: true,
            iterations: 12,
            low_confidence: false,
        };
        let mut buf = Vec::new();
        write_sweep_csv(&[p], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# schema_version=1\nlambda,trace,r_lambda,theta,converged,iterations\n0.5,2.0,2,1.0,true,12\n"
        );
    }
}
