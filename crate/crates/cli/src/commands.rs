use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::Serialize;
use spur_core::io::{read_graph, read_labels, EdgeListGraph};
use spur_core::spur::{write_sweep_csv, CSV_SCHEMA_VERSION};
use spur_core::{
    bethe_hessian_estimate_r, build_certificate, extract_labels, lambda_grid, lambda_sweep_report,
    nmi, sample_sbm, spectral_labels, spur, usvt_estimate_r, verify, AdjacencyMatrix,
    BetheHessianVariant, GridMode, Partition, SolverConfig, SpurOptions,
};

use crate::config::ExperimentConfig;
use crate::{Cli, Command, Format, GridArgs};

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

type Outcome<T> = std::result::Result<T, Failure>;

fn usage(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

/// Input problems exit 2, anything the numerics gave up on exits 3.
fn core(error: spur_core::Error) -> Failure {
    use spur_core::Error as E;
    let code = match error {
        E::DimensionMismatch(_)
        | E::InvalidModel(_)
        | E::InvalidPartition(_)
        | E::InvalidArgument(_)
        | E::Parse { .. }
        | E::Io(_) => 2,
        _ => 3,
    };
    Failure {
        code,
        error: error.into(),
    }
}

fn io_failure(error: io::Error) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

pub fn run(cli: Cli) -> Outcome<u8> {
    let seed = cli.seed;
    match cli.command {
        Command::Simulate {
            config,
            print_config: true,
            ..
        } => {
            let cfg = ExperimentConfig::load(&config).map_err(usage)?;
            print!("{}", cfg.to_text());
            Ok(0)
        }
        Command::Simulate {
            config,
            grid,
            format,
            baselines,
            ..
        } => simulate(&config, seed, &grid, format, baselines).map(|_| 0),
        Command::Estimate {
            graph,
            grid,
            format,
            baselines,
            sweep,
            labels,
        } => estimate(
            &graph,
            seed.unwrap_or(0),
            &grid,
            format,
            baselines,
            sweep.as_deref(),
            labels.as_deref(),
        )
        .map(|_| 0),
        Command::Certify {
            graph,
            labels,
            lambda,
            format,
        } => certify(&graph, &labels, lambda, format),
        Command::Sweep {
            graph,
            grid,
            lambda,
            no_warm_start,
            format,
            output,
        } => sweep(
            &graph,
            &grid,
            &lambda,
            !no_warm_start,
            format,
            output.as_deref(),
        )
        .map(|_| 0),
    }
}

fn load_graph(path: &Path) -> Outcome<(EdgeListGraph, AdjacencyMatrix)> {
    let graph = read_graph(path)
        .map_err(|e| usage(anyhow!(e).context(format!("reading {}", path.display()))))?;
    let a = graph.adjacency().map_err(core)?;
    Ok((graph, a))
}

fn options(
    grid: &GridArgs,
    grid_size: usize,
    mode: GridMode,
    warm_start: bool,
    solver: SolverConfig,
) -> SpurOptions {
    SpurOptions {
        grid_size: grid.grid_size.unwrap_or(grid_size),
        mode: grid.grid_mode.map(Into::into).unwrap_or(mode),
        warm_start,
        solver,
    }
}

fn open_output(path: Option<&Path>) -> Outcome<Box<dyn Write>> {
    match path {
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) if p == Path::new("-") => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
        Some(p) => {
            let f = File::create(p)
                .with_context(|| format!("creating {}", p.display()))
                .map_err(usage)?;
            Ok(Box::new(BufWriter::new(f)))
        }
    }
}

fn write_json<T: Serialize>(value: &T, mut out: impl Write) -> Outcome<()> {
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| usage(anyhow!(e)))?;
    writeln!(out).and_then(|_| out.flush()).map_err(io_failure)
}

#[derive(Clone, Debug, Serialize)]
struct BaselineRun {
    usvt_r: usize,
    usvt_nmi: f64,
    bh_r: usize,
    bh_nmi: f64,
    bhac_r: usize,
    bhac_nmi: f64,
}

#[derive(Clone, Debug, Serialize)]
struct SeedRun {
    seed: u64,
    r_true: usize,
    r_hat: usize,
    correct: bool,
    nmi: f64,
    chosen_lambda: f64,
    theta: f64,
    iterations: usize,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    baselines: Option<BaselineRun>,
}

#[derive(Debug, Serialize)]
struct SimulationSummary {
    schema_version: u32,
    n: usize,
    r_true: usize,
    replicates: usize,
    mean_nmi: f64,
    fraction_correct: f64,
    mean_r_hat: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mean_baseline_nmi: Option<BaselineMeans>,
    runs: Vec<SeedRun>,
}

#[derive(Debug, Serialize)]
struct BaselineMeans {
    usvt: f64,
    bh: f64,
    bhac: f64,
}

fn baseline_labels(
    a: &AdjacencyMatrix,
    r: usize,
    seed: u64,
    truth: &Partition,
) -> spur_core::Result<f64> {
    let labels = spectral_labels(a, r.clamp(1, a.num_nodes()), seed)?;
    nmi(&labels, truth)
}

fn run_seed(
    cfg: &ExperimentConfig,
    opts: &SpurOptions,
    seed: u64,
    baselines: bool,
) -> spur_core::Result<SeedRun> {
    let model = cfg.model().expect("validated when the config was loaded");
    let truth = model.contiguous_partition();
    let a = sample_sbm(&model, &truth, seed)?;
    let result = spur(&a, opts)?;
    let labels = extract_labels(&result.x_hat, result.r_hat, seed)?.labels;
    let chosen = result.chosen();
    let baselines = if baselines {
        let usvt_r = usvt_estimate_r(&a, spur_core::metrics::USVT_DEFAULT_ETA)?;
        let bh_r = bethe_hessian_estimate_r(&a, BetheHessianVariant::Bh)?;
        let bhac_r = bethe_hessian_estimate_r(&a, BetheHessianVariant::Bhac)?;
        Some(BaselineRun {
            usvt_r,
            usvt_nmi: baseline_labels(&a, usvt_r, seed, &truth)?,
            bh_r,
            bh_nmi: baseline_labels(&a, bh_r, seed, &truth)?,
            bhac_r,
            bhac_nmi: baseline_labels(&a, bhac_r, seed, &truth)?,
        })
    } else {
        None
    };
    Ok(SeedRun {
        seed,
        r_true: model.num_clusters(),
        r_hat: result.r_hat,
        correct: result.r_hat == model.num_clusters(),
        nmi: nmi(&labels, &truth)?,
        chosen_lambda: result.chosen_lambda,
        theta: chosen.theta,
        iterations: result.grid.iter().map(|p| p.iterations).sum(),
        baselines,
    })
}

fn write_runs_csv(runs: &[SeedRun], mut out: impl Write) -> io::Result<()> {
    writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
    let with_baselines = runs.iter().any(|r| r.baselines.is_some());
    write!(
        out,
        "seed,r_true,r_hat,correct,nmi,chosen_lambda,theta,iterations"
    )?;
    if with_baselines {
        write!(out, ",usvt_r,usvt_nmi,bh_r,bh_nmi,bhac_r,bhac_nmi")?;
    }
    writeln!(out)?;
    for r in runs {
        write!(
            out,
            "{},{},{},{},{:?},{:?},{:?},{}",
            r.seed, r.r_true, r.r_hat, r.correct, r.nmi, r.chosen_lambda, r.theta, r.iterations
        )?;
        if let Some(b) = &r.baselines {
            write!(
                out,
                ",{},{:?},{},{:?},{},{:?}",
                b.usvt_r, b.usvt_nmi, b.bh_r, b.bh_nmi, b.bhac_r, b.bhac_nmi
            )?;
        }
        writeln!(out)?;
    }
    out.flush()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    sum / count.max(1) as f64
}

fn simulate(
    path: &Path,
    seed: Option<u64>,
    grid: &GridArgs,
    format: Format,
    baselines: bool,
) -> Outcome<()> {
    let mut cfg = ExperimentConfig::load(path).map_err(usage)?;
    if let Some(s) = seed {
        cfg.seeds = vec![s];
    }
    let baselines = baselines || cfg.baselines;
    let opts = options(
        grid,
        cfg.grid_size,
        cfg.grid_mode,
        cfg.warm_start,
        cfg.solver.clone(),
    );
    if opts.grid_size < 2 {
        return Err(usage(anyhow!("grid size must be at least 2")));
    }
    let model = cfg.model().map_err(usage)?;

    let runs: Vec<SeedRun> = cfg
        .seeds
        .par_iter()
        .map(|&s| run_seed(&cfg, &opts, s, baselines).map_err(|e| (s, e)))
        .collect::<Result<_, _>>()
        .map_err(|(s, e)| {
            let mut f = core(e);
            f.error = f.error.context(format!("seed {s}"));
            f
        })?;

    let summary = SimulationSummary {
        schema_version: CSV_SCHEMA_VERSION,
        n: model.num_nodes(),
        r_true: model.num_clusters(),
        replicates: runs.len(),
        mean_nmi: mean(runs.iter().map(|r| r.nmi)),
        fraction_correct: mean(runs.iter().map(|r| if r.correct { 1.0 } else { 0.0 })),
        mean_r_hat: mean(runs.iter().map(|r| r.r_hat as f64)),
        mean_baseline_nmi: baselines.then(|| BaselineMeans {
            usvt: mean(
                runs.iter()
                    .filter_map(|r| r.baselines.as_ref())
                    .map(|b| b.usvt_nmi),
            ),
            bh: mean(
                runs.iter()
                    .filter_map(|r| r.baselines.as_ref())
                    .map(|b| b.bh_nmi),
            ),
            bhac: mean(
                runs.iter()
                    .filter_map(|r| r.baselines.as_ref())
                    .map(|b| b.bhac_nmi),
            ),
        }),
        runs,
    };

    let base = path.parent().unwrap_or(Path::new("."));
    let resolve = |p: &PathBuf| {
        if p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };
    if let Some(p) = &cfg.out_csv {
        write_runs_csv(&summary.runs, open_output(Some(&resolve(p)))?).map_err(io_failure)?;
    }
    if let Some(p) = &cfg.out_json {
        write_json(&summary, open_output(Some(&resolve(p)))?)?;
    }
    match format {
        Format::Csv if cfg.out_csv.is_none() => {
            write_runs_csv(&summary.runs, open_output(None)?).map_err(io_failure)
        }
        Format::Json if cfg.out_json.is_none() => write_json(&summary, open_output(None)?),
        _ => Ok(()),
    }
}

#[derive(Debug, Serialize)]
struct EstimateReport {
    nodes: usize,
    edges: usize,
    spur: SpurEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    baselines: Option<BaselineEstimates>,
}

#[derive(Debug, Serialize)]
struct SpurEstimate {
    r_hat: usize,
    lambda: f64,
    theta: f64,
    trace: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    nmi: Option<f64>,
}

#[derive(Debug, Serialize)]
struct BaselineEstimates {
    usvt: usize,
    bh: usize,
    bhac: usize,
}

fn estimate(
    path: &Path,
    seed: u64,
    grid: &GridArgs,
    format: Format,
    baselines: bool,
    sweep_path: Option<&Path>,
    labels_path: Option<&Path>,
) -> Outcome<()> {
    let (graph, a) = load_graph(path)?;
    let truth = labels_path
        .map(|p| {
            read_labels(p, &graph)
                .map_err(|e| usage(anyhow!(e).context(format!("reading {}", p.display()))))
        })
        .transpose()?;
    let opts = options(
        grid,
        20,
        GridMode::DegreeScaled,
        true,
        SolverConfig::default(),
    );
    let result = spur(&a, &opts).map_err(core)?;
    let chosen = result.chosen();
    let nmi_value = match &truth {
        Some(t) => {
            let labels = extract_labels(&result.x_hat, result.r_hat, seed)
                .map_err(core)?
                .labels;
            Some(nmi(&labels, t).map_err(core)?)
        }
        None => None,
    };
    let baselines = if baselines {
        Some(BaselineEstimates {
            usvt: usvt_estimate_r(&a, spur_core::metrics::USVT_DEFAULT_ETA).map_err(core)?,
            bh: bethe_hessian_estimate_r(&a, BetheHessianVariant::Bh).map_err(core)?,
            bhac: bethe_hessian_estimate_r(&a, BetheHessianVariant::Bhac).map_err(core)?,
        })
    } else {
        None
    };
    if let Some(p) = sweep_path {
        let mut out = open_output(Some(p))?;
        write_sweep_csv(&result.grid, &mut out)
            .and_then(|_| out.flush())
            .map_err(io_failure)?;
    }
    let report = EstimateReport {
        nodes: graph.num_nodes(),
        edges: graph.num_edges(),
        spur: SpurEstimate {
            r_hat: result.r_hat,
            lambda: result.chosen_lambda,
            theta: chosen.theta,
            trace: chosen.trace,
            nmi: nmi_value,
        },
        baselines,
    };
    match format {
        Format::Json => write_json(&report, open_output(None)?),
        Format::Csv => {
            let mut out = open_output(None)?;
            let mut body = || -> io::Result<()> {
                writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
                writeln!(out, "method,r_hat")?;
                writeln!(out, "spur,{}", report.spur.r_hat)?;
                if let Some(b) = &report.baselines {
                    writeln!(out, "usvt,{}\nbh,{}\nbhac,{}", b.usvt, b.bh, b.bhac)?;
                }
                out.flush()
            };
            body().map_err(io_failure)
        }
    }
}

fn certify(graph_path: &Path, labels_path: &Path, lambda: f64, format: Format) -> Outcome<u8> {
    if !lambda.is_finite() {
        return Err(usage(anyhow!("lambda must be finite")));
    }
    let (graph, a) = load_graph(graph_path)?;
    let partition = read_labels(labels_path, &graph)
        .map_err(|e| usage(anyhow!(e).context(format!("reading {}", labels_path.display()))))?;
    let cert = build_certificate(&a, &partition, lambda).map_err(core)?;
    let report = verify(&a, &partition, &cert).map_err(core)?;
    let mut out = open_output(None)?;
    match format {
        Format::Json => write_json(&report, &mut out)?,
        Format::Csv => {
            let mut body = || -> io::Result<()> {
                writeln!(out, "# schema_version={CSV_SCHEMA_VERSION}")?;
                writeln!(
                    out,
                    "stationarity_residual,lambda_x_residual,gamma_x_residual,min_eig_on_complement,min_gamma_entry,passes"
                )?;
                writeln!(
                    out,
                    "{:?},{:?},{:?},{:?},{:?},{}",
                    report.stationarity_residual,
                    report.lambda_x_residual,
                    report.gamma_x_residual,
                    report.min_eig_on_complement,
                    report.min_gamma_entry,
                    report.passes
                )?;
                out.flush()
            };
            body().map_err(io_failure)?;
        }
    }
    Ok(if report.passes { 0 } else { 1 })
}

fn sweep(
    path: &Path,
    grid: &GridArgs,
    lambdas: &[f64],
    warm_start: bool,
    format: Format,
    output: Option<&Path>,
) -> Outcome<()> {
    let (_, a) = load_graph(path)?;
    let penalties = if lambdas.is_empty() {
        let opts = options(
            grid,
            20,
            GridMode::DegreeScaled,
            warm_start,
            SolverConfig::default(),
        );
        lambda_grid(&a, opts.grid_size, opts.mode).map_err(core)?
    } else {
        if lambdas.iter().any(|l| !l.is_finite() || *l < 0.0) {
            return Err(usage(anyhow!("penalties must be finite and nonnegative")));
        }
        let mut sorted = lambdas.to_vec();
        sorted.sort_by(f64::total_cmp);
        sorted
    };
    let points =
        lambda_sweep_report(&a, &penalties, &SolverConfig::default(), warm_start).map_err(core)?;
    let mut out = open_output(output)?;
    match format {
        Format::Csv => write_sweep_csv(&points, &mut out)
            .and_then(|_| out.flush())
            .map_err(io_failure),
        Format::Json => write_json(&points, out),
    }
}
