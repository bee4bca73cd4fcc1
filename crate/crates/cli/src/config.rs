//! `key = value` experiment files.
//!
//! ```text
//! # four balanced blocks
//! sizes = 50,50,50,50
//! within = 0.6          # or an explicit matrix: b = 0.6,0.1; 0.1,0.6
//! between = 0.1
//! seeds = 0..10         # or a list: 0,1,2
//! grid_size = 10
//! grid_mode = degree    # or paper
//! out_csv = runs.csv
//! out_json = summary.json
//! ```
//!
//! Solver keys: `rho`, `max_iter`, `tol_primal`, `tol_dual`,
//! `over_relaxation`, `adapt_ratio`, `adapt_interval`, `splitting`
//! (`paired` or `consensus`). Other keys: `warm_start`, `baselines`.
//! [`ExperimentConfig::to_text`] writes the explicit form, which loads back
//! to an identical config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::DMatrix;
use spur_core::{BlockModel, GridMode, SolverConfig, Splitting};

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub sizes: Vec<usize>,
    /// Row-major block probabilities.
    pub probabilities: Vec<Vec<f64>>,
    pub seeds: Vec<u64>,
    pub grid_size: usize,
    pub grid_mode: GridMode,
    pub warm_start: bool,
    pub baselines: bool,
    pub solver: SolverConfig,
    pub out_csv: Option<PathBuf>,
    pub out_json: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(value: &str, what: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<T>().map_err(|_| anyhow!("invalid {what} {t:?}"))
        })
        .collect()
}

fn parse_seeds(value: &str) -> Result<Vec<u64>> {
    if let Some((lo, hi)) = value.split_once("..") {
        let lo: u64 = lo
            .trim()
            .parse()
            .map_err(|_| anyhow!("invalid seed range start {lo:?}"))?;
        let hi: u64 = hi
            .trim()
            .parse()
            .map_err(|_| anyhow!("invalid seed range end {hi:?}"))?;
        if hi <= lo {
            bail!("empty seed range {value:?}");
        }
        return Ok((lo..hi).collect());
    }
    parse_list(value, "seed")
}

fn parse_matrix(value: &str) -> Result<Vec<Vec<f64>>> {
    value
        .split(';')
        .map(|row| parse_list(row, "probability"))
        .collect()
}

fn parse_mode(value: &str) -> Result<GridMode> {
    match value {
        "paper" => Ok(GridMode::Paper),
        "degree" => Ok(GridMode::DegreeScaled),
        other => bail!("unknown grid mode {other:?} (expected paper or degree)"),
    }
}

fn mode_name(mode: GridMode) -> &'static str {
    match mode {
        GridMode::Paper => "paper",
        GridMode::DegreeScaled => "degree",
    }
}

fn parse_bool(value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => bail!("expected true or false, got {other:?}"),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, key: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| anyhow!("invalid value {value:?} for {key}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| anyhow!("line {lineno}: expected `key = value`"))?;
            let key = key.trim().to_string();
            if entries
                .insert(key.clone(), (value.trim().to_string(), lineno))
                .is_some()
            {
                bail!("line {lineno}: duplicate key {key:?}");
            }
        }

        let mut take = |key: &str| entries.remove(key);
        let at = |line: usize| move || format!("line {line}");

        let (sizes, line) = take("sizes").ok_or_else(|| anyhow!("missing required key `sizes`"))?;
        let sizes: Vec<usize> = parse_list(&sizes, "size").with_context(at(line))?;
        let r = sizes.len();

        let probabilities = match (take("b"), take("within"), take("between")) {
            (Some((b, line)), None, None) => parse_matrix(&b).with_context(at(line))?,
            (None, Some((w, lw)), Some((bt, lb))) => {
                let w: f64 = parse_num(&w, "within").with_context(at(lw))?;
                let bt: f64 = parse_num(&bt, "between").with_context(at(lb))?;
                (0..r)
                    .map(|i| (0..r).map(|j| if i == j { w } else { bt }).collect())
                    .collect()
            }
            _ => bail!("give either `b` or both `within` and `between`"),
        };

        let seeds = match take("seeds") {
            Some((v, line)) => parse_seeds(&v).with_context(at(line))?,
            None => vec![0],
        };
        let mut solver = SolverConfig::default();
        let mut cfg = ExperimentConfig {
            sizes,
            probabilities,
            seeds,
            grid_size: 20,
            grid_mode: GridMode::DegreeScaled,
            warm_start: true,
            baselines: false,
            solver: solver.clone(),
            out_csv: None,
            out_json: None,
        };
        if let Some((v, line)) = take("grid_size") {
            cfg.grid_size = parse_num(&v, "grid_size").with_context(at(line))?;
        }
        if let Some((v, line)) = take("grid_mode") {
            cfg.grid_mode = parse_mode(&v).with_context(at(line))?;
        }
        if let Some((v, line)) = take("warm_start") {
            cfg.warm_start = parse_bool(&v).with_context(at(line))?;
        }
        if let Some((v, line)) = take("baselines") {
            cfg.baselines = parse_bool(&v).with_context(at(line))?;
        }
        if let Some((v, line)) = take("rho") {
            solver.rho = parse_num(&v, "rho").with_context(at(line))?;
        }
        if let Some((v, line)) = take("max_iter") {
            solver.max_iter = parse_num(&v, "max_iter").with_context(at(line))?;
        }
        if let Some((v, line)) = take("tol_primal") {
            solver.tol_primal = parse_num(&v, "tol_primal").with_context(at(line))?;
        }
        if let Some((v, line)) = take("tol_dual") {
            solver.tol_dual = parse_num(&v, "tol_dual").with_context(at(line))?;
        }
        if let Some((v, line)) = take("over_relaxation") {
            solver.over_relaxation = parse_num(&v, "over_relaxation").with_context(at(line))?;
        }
        if let Some((v, line)) = take("adapt_ratio") {
            solver.adapt_ratio = parse_num(&v, "adapt_ratio").with_context(at(line))?;
        }
        if let Some((v, line)) = take("adapt_interval") {
            solver.adapt_interval = parse_num(&v, "adapt_interval").with_context(at(line))?;
        }
        if let Some((v, line)) = take("splitting") {
            solver.splitting = match v.as_str() {
                "paired" => Splitting::Paired,
                "consensus" => Splitting::Consensus,
                other => bail!("line {line}: unknown splitting {other:?}"),
            };
        }
        cfg.out_csv = take("out_csv").map(|(v, _)| PathBuf::from(v));
        cfg.out_json = take("out_json").map(|(v, _)| PathBuf::from(v));
        cfg.solver = solver;

        if let Some((key, (_, line))) = entries.into_iter().next() {
            bail!("line {line}: unknown key {key:?}");
        }
        cfg.solver.validate()?;
        cfg.model()?;
        if cfg.grid_size < 2 {
            bail!("grid_size must be at least 2");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn model(&self) -> Result<BlockModel> {
        let r = self.probabilities.len();
        if self.probabilities.iter().any(|row| row.len() != r) {
            bail!("probability matrix must be square");
        }
        let flat: Vec<f64> = self.probabilities.iter().flatten().copied().collect();
        Ok(BlockModel::new(
            DMatrix::from_row_slice(r, r, &flat),
            self.sizes.clone(),
        )?)
    }

    /// Canonical text with every key spelled out.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>, sep: &str| v.join(sep);
        let mut out = String::new();
        let s = &self.solver;
        let rows: Vec<String> = self
            .probabilities
            .iter()
            .map(|row| join(row.iter().map(|p| p.to_string()).collect(), ","))
            .collect();
        let _ = writeln!(
            out,
            "sizes = {}",
            join(self.sizes.iter().map(|m| m.to_string()).collect(), ",")
        );
        let _ = writeln!(out, "b = {}", rows.join("; "));
        let _ = writeln!(
            out,
            "seeds = {}",
            join(self.seeds.iter().map(|m| m.to_string()).collect(), ",")
        );
        let _ = writeln!(out, "grid_size = {}", self.grid_size);
        let _ = writeln!(out, "grid_mode = {}", mode_name(self.grid_mode));
        let _ = writeln!(out, "warm_start = {}", self.warm_start);
        let _ = writeln!(out, "baselines = {}", self.baselines);
        let _ = writeln!(out, "rho = {}", s.rho);
        let _ = writeln!(out, "max_iter = {}", s.max_iter);
        let _ = writeln!(out, "tol_primal = {}", s.tol_primal);
        let _ = writeln!(out, "tol_dual = {}", s.tol_dual);
        let _ = writeln!(out, "over_relaxation = {}", s.over_relaxation);
        let _ = writeln!(out, "adapt_ratio = {}", s.adapt_ratio);
        let _ = writeln!(out, "adapt_interval = {}", s.adapt_interval);
        let splitting = match s.splitting {
            Splitting::Paired => "paired",
            Splitting::Consensus => "consensus",
        };
        let _ = writeln!(out, "splitting = {splitting}");
        if let Some(p) = &self.out_csv {
            let _ = writeln!(out, "out_csv = {}", p.display());
        }
        if let Some(p) = &self.out_json {
            let _ = writeln!(out, "out_json = {}", p.display());
        }
        out
    }
}
