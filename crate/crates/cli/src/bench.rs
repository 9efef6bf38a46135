//! Benchmark harness: configuration grids, per-configuration means, win
//! counts and CSV output.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use tbls_core::gen::{generate, GenConfig, TieLength};
use tbls_core::{tbls, Instance, Kind, RunReport, SolverParams};

use crate::{parse_kind, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Tbls,
    TblsE,
    /// Deferred acceptance after one random tie-breaking.
    Gs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Tbls, Algorithm::TblsE, Algorithm::Gs];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Tbls => "tbls",
            Algorithm::TblsE => "tbls-e",
            Algorithm::Gs => "gs",
        }
    }

    pub fn run(self, inst: &Instance, params: &SolverParams) -> Result<RunReport, CliError> {
        let params = match self {
            Algorithm::Tbls => params.clone(),
            Algorithm::TblsE => SolverParams {
                equity_mode: true,
                ..params.clone()
            },
            Algorithm::Gs => SolverParams {
                max_iters: 0,
                ..params.clone()
            },
        };
        Ok(tbls::run(inst, &params)?.report)
    }
}

impl std::str::FromStr for Algorithm {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                CliError::Input(format!(
                    "unknown algorithm `{s}` (expected tbls, tbls-e or gs)"
                ))
            })
    }
}

/// One `(n, m, p1, p2, g)` combination.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Configuration {
    pub kind: Kind,
    pub n: usize,
    pub m: usize,
    pub p1: f64,
    pub p2: f64,
    pub g: TieLength,
}

/// Cartesian product of parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub kind: Kind,
    pub n: Vec<usize>,
    pub m: Vec<usize>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub g: Vec<TieLength>,
}

impl Grid {
    pub fn configurations(&self) -> Vec<Configuration> {
        let ms: &[usize] = match self.kind {
            Kind::Smti => &[0],
            Kind::Hrt => &self.m,
        };
        let mut out = Vec::new();
        for &n in &self.n {
            for &m in ms {
                for &p1 in &self.p1 {
                    for &p2 in &self.p2 {
                        for &g in &self.g {
                            out.push(Configuration {
                                kind: self.kind,
                                n,
                                m,
                                p1,
                                p2,
                                g,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    /// Named grids for the four problem classes.
    pub fn preset(name: &str) -> Result<Grid, CliError> {
        let both = vec![TieLength::GeomP2, TieLength::GeomOneMinusP2];
        let p2 = steps(0.0, 1.0, 0.1);
        let grid = match name {
            "smti-small" => Grid { kind: Kind::Smti, n: vec![100], m: vec![], p1: steps(0.0, 0.9, 0.1), p2, g: both },
            "smti-large" => Grid { kind: Kind::Smti, n: vec![1000], m: vec![], p1: steps(0.95, 0.99, 0.01), p2, g: both },
            "hrt-small" => Grid { kind: Kind::Hrt, n: vec![100], m: vec![10], p1: steps(0.0, 0.9, 0.1), p2, g: both },
            "hrt-large" => Grid {
                kind: Kind::Hrt,
                n: vec![1000],
                m: vec![10, 20, 30, 40, 50],
                p1: vec![0.9],
                p2,
                g: both,
            },
            other => {
                return Err(CliError::Input(format!(
                    "unknown preset `{other}` (expected smti-small, smti-large, hrt-small or hrt-large)"
                )))
            }
        };
        Ok(grid)
    }
}

/// `from, from + step, ..., to`, rounded to six decimals.
pub fn steps(from: f64, to: f64, step: f64) -> Vec<f64> {
    let count = ((to - from) / step).round() as usize + 1;
    (0..count)
        .map(|k| ((from + k as f64 * step) * 1e6).round() / 1e6)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub grid: Grid,
    pub instances: usize,
    pub algorithms: Vec<Algorithm>,
    pub params: SolverParams,
    pub seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.algorithms.is_empty() {
            return Err(CliError::Input("no algorithms selected".into()));
        }
        if self.grid.kind == Kind::Hrt && self.algorithms.contains(&Algorithm::TblsE) {
            return Err(CliError::Input("equity mode requires SMTI".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Values<T> {
    One(T),
    List(Vec<T>),
    Range { from: f64, to: f64, step: f64 },
}

fn expand_f64(v: Values<f64>) -> Vec<f64> {
    match v {
        Values::One(x) => vec![x],
        Values::List(xs) => xs,
        Values::Range { from, to, step } => steps(from, to, step),
    }
}

fn expand_usize(v: Values<usize>) -> Vec<usize> {
    match v {
        Values::One(x) => vec![x],
        Values::List(xs) => xs,
        Values::Range { from, to, step } => steps(from, to, step)
            .into_iter()
            .map(|x| x as usize)
            .collect(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    preset: Option<String>,
    kind: Option<String>,
    n: Option<Values<usize>>,
    m: Option<Values<usize>>,
    p1: Option<Values<f64>>,
    p2: Option<Values<f64>>,
    g: Option<Vec<String>>,
    instances: Option<usize>,
    algorithms: Option<Vec<String>>,
    max_iters: Option<u64>,
    seed: Option<u64>,
}

impl BenchConfig {
    /// Reads a TOML configuration. Fields left out fall back to `preset`
    /// (if given), then to `smti-small`.
    pub fn from_toml(text: &str) -> Result<BenchConfig, CliError> {
        let file: ConfigFile =
            toml::from_str(text).map_err(|e| CliError::Input(format!("bench config: {e}")))?;
        let mut grid = Grid::preset(file.preset.as_deref().unwrap_or("smti-small"))?;
        if let Some(kind) = file.kind {
            grid.kind = parse_kind(&kind)?;
        }
        if let Some(n) = file.n {
            grid.n = expand_usize(n);
        }
        if let Some(m) = file.m {
            grid.m = expand_usize(m);
        }
        if let Some(p1) = file.p1 {
            grid.p1 = expand_f64(p1);
        }
        if let Some(p2) = file.p2 {
            grid.p2 = expand_f64(p2);
        }
        if let Some(g) = file.g {
            grid.g = g
                .iter()
                .map(|s| {
                    s.parse()
                        .map_err(|e: tbls_core::gen::GenError| CliError::Input(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
        }
        if grid.kind == Kind::Hrt && grid.m.is_empty() {
            grid.m = vec![10];
        }
        let algorithms = match file.algorithms {
            Some(a) => a.iter().map(|s| s.parse()).collect::<Result<_, _>>()?,
            None => default_algorithms(grid.kind),
        };
        let params = SolverParams {
            max_iters: file.max_iters.unwrap_or(SolverParams::default().max_iters),
            ..SolverParams::default()
        };
        let config = BenchConfig {
            grid,
            instances: file.instances.unwrap_or(100),
            algorithms,
            params,
            seed: file.seed.unwrap_or(0),
        };
        config.validate()?;
        Ok(config)
    }
}

pub fn default_algorithms(kind: Kind) -> Vec<Algorithm> {
    match kind {
        Kind::Smti => Algorithm::ALL.to_vec(),
        Kind::Hrt => vec![Algorithm::Tbls, Algorithm::Gs],
    }
}

/// Means of one algorithm over the instances of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellStats {
    pub size: f64,
    /// Singles for SMTI, unassigned hospital positions for HRT.
    pub unmatched: f64,
    /// `None` for HRT.
    pub secost: Option<f64>,
    pub time_ms: f64,
}

impl CellStats {
    pub fn from_runs(kind: Kind, runs: &[RunReport]) -> CellStats {
        let count = runs.len().max(1) as f64;
        let mean = |f: &dyn Fn(&RunReport) -> f64| runs.iter().map(f).sum::<f64>() / count;
        CellStats {
            size: mean(&|r| r.matching_size as f64),
            unmatched: mean(&|r| match kind {
                Kind::Smti => (r.unmatched_u + r.unmatched_w) as f64,
                Kind::Hrt => r.unassigned_positions as f64,
            }),
            secost: match kind {
                Kind::Smti => Some(mean(&|r| r.sex_equality_cost.unwrap_or(0) as f64)),
                Kind::Hrt => None,
            },
            time_ms: mean(&|r| r.elapsed.as_secs_f64() * 1000.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Size,
    Unmatched,
    SeCost,
    Time,
}

impl Metric {
    pub const ALL: [Metric; 4] = [
        Metric::Size,
        Metric::Unmatched,
        Metric::SeCost,
        Metric::Time,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Size => "size",
            Metric::Unmatched => "unmatched",
            Metric::SeCost => "secost",
            Metric::Time => "time_ms",
        }
    }

    fn higher_is_better(self) -> bool {
        self == Metric::Size
    }

    pub fn of(self, c: &CellStats) -> Option<f64> {
        match self {
            Metric::Size => Some(c.size),
            Metric::Unmatched => Some(c.unmatched),
            Metric::SeCost => c.secost,
            Metric::Time => Some(c.time_ms),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigResult {
    pub config: Configuration,
    pub instances: usize,
    /// Aligned with [`BenchReport::algorithms`].
    pub cells: Vec<CellStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub algorithms: Vec<Algorithm>,
    pub results: Vec<ConfigResult>,
}

const TIE_EPS: f64 = 1e-9;

impl BenchReport {
    /// Configurations in which each algorithm is not worse than any other.
    /// Ties credit every tied algorithm.
    pub fn wins(&self, metric: Metric) -> Vec<usize> {
        let mut wins = vec![0; self.algorithms.len()];
        for r in &self.results {
            let values: Vec<Option<f64>> = r.cells.iter().map(|c| metric.of(c)).collect();
            let best = values.iter().flatten().copied().reduce(|a, b| {
                if metric.higher_is_better() {
                    a.max(b)
                } else {
                    a.min(b)
                }
            });
            let Some(best) = best else { continue };
            for (i, v) in values.iter().enumerate() {
                if v.is_some_and(|v| (v - best).abs() <= TIE_EPS) {
                    wins[i] += 1;
                }
            }
        }
        wins
    }

    /// Mean over configurations of the per-configuration means, ignoring
    /// configurations where the metric is undefined.
    pub fn overall(&self, metric: Metric) -> Vec<Option<f64>> {
        (0..self.algorithms.len())
            .map(|i| {
                let vals: Vec<f64> = self
                    .results
                    .iter()
                    .filter_map(|r| metric.of(&r.cells[i]))
                    .collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record([
            "kind",
            "n",
            "m",
            "p1",
            "p2",
            "g",
            "algorithm",
            "instances",
            "mean_size",
            "mean_unmatched",
            "mean_secost",
            "mean_time_ms",
        ])
        .map_err(io)?;
        for r in &self.results {
            let c = &r.config;
            for (alg, cell) in self.algorithms.iter().zip(&r.cells) {
                w.write_record([
                    c.kind.to_string(),
                    c.n.to_string(),
                    c.m.to_string(),
                    c.p1.to_string(),
                    c.p2.to_string(),
                    c.g.name().to_string(),
                    alg.name().to_string(),
                    r.instances.to_string(),
                    format!("{:.4}", cell.size),
                    format!("{:.4}", cell.unmatched),
                    cell.secost.map(|s| format!("{s:.4}")).unwrap_or_default(),
                    format!("{:.3}", cell.time_ms),
                ])
                .map_err(io)?;
            }
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<(), CliError> {
        let file = std::fs::File::create(path)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn summary(&self) -> String {
        let names: Vec<_> = self.algorithms.iter().map(|a| a.name()).collect();
        let mut s = format!(
            "# {} configurations; algorithms run in fixed order per instance: {}\n",
            self.results.len(),
            names.join(", ")
        );
        s.push_str(&format!(
            "{:<10} {:<8} {:>6} {:>12}\n",
            "metric", "algo", "wins", "overall"
        ));
        for metric in Metric::ALL {
            let wins = self.wins(metric);
            for (i, overall) in self.overall(metric).into_iter().enumerate() {
                let Some(overall) = overall else { continue };
                s.push_str(&format!(
                    "{:<10} {:<8} {:>6} {:>12.4}\n",
                    metric.name(),
                    names[i],
                    wins[i],
                    overall
                ));
            }
        }
        s
    }
}

/// Generates every instance of every configuration and runs each selected
/// algorithm on it. Instance `i` of configuration `c` is generated and
/// solved with seed `seed + c * instances + i`.
pub fn run_bench(config: &BenchConfig) -> Result<BenchReport, CliError> {
    config.validate()?;
    let configurations = config.grid.configurations();
    let results = configurations
        .iter()
        .enumerate()
        .map(|(ci, c)| {
            let base = config.seed.wrapping_add((ci * config.instances) as u64);
            let gen = GenConfig {
                kind: c.kind,
                n: c.n,
                m: c.m,
                p1: c.p1,
                p2: c.p2,
                tie_length: c.g,
                seed: base,
                count: config.instances,
                allow_empty_lists: true,
            };
            let runs: Vec<Vec<RunReport>> = (0..config.instances)
                .into_par_iter()
                .map(|i| {
                    let inst = generate(&gen, i).map_err(|e| CliError::Input(e.to_string()))?;
                    let params = SolverParams {
                        seed: base.wrapping_add(i as u64),
                        ..config.params.clone()
                    };
                    let (k_u, k_w) = tbls::disruption_sizes(inst.kind(), inst.n_u());
                    let params = SolverParams { k_u, k_w, ..params };
                    config
                        .algorithms
                        .iter()
                        .map(|a| {
                            let started = Instant::now();
                            let mut report = a.run(&inst, &params)?;
                            report.elapsed = started.elapsed();
                            Ok(report)
                        })
                        .collect::<Result<Vec<_>, CliError>>()
                })
                .collect::<Result<_, _>>()?;
            let cells = (0..config.algorithms.len())
                .map(|a| {
                    let column: Vec<RunReport> = runs.iter().map(|r| r[a].clone()).collect();
                    CellStats::from_runs(c.kind, &column)
                })
                .collect();
            Ok(ConfigResult {
                config: *c,
                instances: config.instances,
                cells,
            })
        })
        .collect::<Result<_, CliError>>()?;
    Ok(BenchReport {
        algorithms: config.algorithms.clone(),
        results,
    })
}
