//! Experiment drivers behind the `analyze`, `sweep`, `train` and `topology` commands.
//!
//! Every driver is a pure function of its [`ExperimentConfig`]; the
//! `write_*` helpers turn results into CSV files with fixed headers.
//!
//! Seeds for sweep run `(k, r)` (k-th access probability, r-th replicate):
//! - data: `derive_seed(seed, [DATA_STREAM, r])`, shared by all `k` so that
//!   access probabilities are compared on identical datasets
//! - training: `derive_seed(seed, [TRAIN_STREAM, k, r])`
//!
//! `train` uses the coordinates `(0, 0)`.

mod config;
mod plot;

pub use config::{AccessProb, ExperimentConfig, TopologySpec};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::learning::{
    self, generate_classification_data, generate_regression_data, Channel, MetricRecord, MetricTrace, Problem,
    TaskKind, TaskSpec, TrainConfig,
};
use crate::mac::{expected_throughput, optimal_access_probability, AccessPolicy};
use crate::mixing::{base_weight_matrix, consensus_rate, default_epsilon, spectral_optimal_probability};
use crate::rng::derive_seed;
use crate::topology::Graph;

pub const SWEEP_HEADER: &str = "p,replicate,iteration,avg_test_loss,accuracy,consensus_distance";
pub const ANALYZE_HEADER: &str = "p,expected_throughput,consensus_rate";
pub const TRAIN_HEADER: &str = "iteration,avg_test_loss,accuracy,consensus_distance";
pub const SWEEP_ERRORS_HEADER: &str = "p,replicate,error";
pub const SWEEP_SUMMARY_HEADER: &str = "p,replicates,mean_final_loss,mean_final_accuracy,mean_final_consensus_distance";

const DATA_STREAM: u64 = 1;
const TRAIN_STREAM: u64 = 2;

/// Builds the configured graph. Also returns the number of Erdos-Renyi draws.
pub fn build_graph(spec: &TopologySpec) -> Result<(Graph, Option<usize>)> {
    match spec {
        TopologySpec::Ring { n } => Ok((Graph::ring(*n)?, None)),
        TopologySpec::Complete { n } => Ok((Graph::complete(*n)?, None)),
        TopologySpec::ErdosRenyi { n, edge_prob, seed } => {
            let (g, attempts) = Graph::erdos_renyi_with_attempts(*n, *edge_prob, *seed)?;
            Ok((g, Some(attempts)))
        }
        TopologySpec::EdgeList { path } => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            Ok((Graph::from_edge_list(&text)?, None))
        }
    }
}

fn epsilon_for(cfg: &ExperimentConfig, g: &Graph) -> Result<f64> {
    let eps = cfg.epsilon.unwrap_or_else(|| default_epsilon(g));
    base_weight_matrix(g, eps).map_err(|e| Error::config("epsilon", e.to_string()))?;
    Ok(eps)
}

/// Runs `f` on a rayon pool with `threads` workers (at least one).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Domain(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

// ---------------------------------------------------------------- analyze

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisRow {
    pub p: f64,
    pub expected_throughput: f64,
    pub consensus_rate: f64,
}

/// Throughput and consensus-rate curves over the access probability.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisReport {
    pub rows: Vec<AnalysisRow>,
    pub nodes: usize,
    pub edges: usize,
    pub epsilon: f64,
    pub throughput_optimal: f64,
    pub spectral_optimal: f64,
}

impl AnalysisReport {
    pub fn gap(&self) -> f64 {
        (self.throughput_optimal - self.spectral_optimal).abs()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{ANALYZE_HEADER}\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{}", r.p, r.expected_throughput, r.consensus_rate);
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "nodes = {}\nedges = {}\nepsilon = {}\nthroughput_optimal_p = {:.6}\nspectral_optimal_p = {:.6}\ngap = {:.6}\n",
            self.nodes,
            self.edges,
            self.epsilon,
            self.throughput_optimal,
            self.spectral_optimal,
            self.gap()
        )
    }
}

/// Evaluates both curves on the configured p-grid and locates both optimizers.
/// Grid points are evaluated on the current rayon pool.
pub fn analyze(cfg: &ExperimentConfig) -> Result<AnalysisReport> {
    let (g, _) = build_graph(&cfg.topology)?;
    analyze_graph(&g, cfg.epsilon, cfg.grid_step)
}

pub fn analyze_graph(g: &Graph, epsilon: Option<f64>, grid_step: f64) -> Result<AnalysisReport> {
    let eps = epsilon.unwrap_or_else(|| default_epsilon(g));
    base_weight_matrix(g, eps)?;
    let steps = (1.0 / grid_step).round() as usize;
    let rows = (0..=steps)
        .into_par_iter()
        .map(|k| {
            let p = k as f64 / steps as f64;
            Ok(AnalysisRow {
                p,
                expected_throughput: expected_throughput(g, p)?,
                consensus_rate: consensus_rate(g, eps, p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AnalysisReport {
        rows,
        nodes: g.n(),
        edges: g.edge_count(),
        epsilon: eps,
        throughput_optimal: optimal_access_probability(g),
        spectral_optimal: spectral_optimal_probability(g, eps)?,
    })
}

// ------------------------------------------------------------------ runs

fn make_problem(cfg: &ExperimentConfig, n: usize, data_seed: u64) -> Result<Problem> {
    let (task, data) = match cfg.task {
        TaskKind::Regression => {
            (TaskSpec::regression(), generate_regression_data(n, cfg.samples_per_node, cfg.noise_std, data_seed)?)
        }
        TaskKind::Classification => (
            TaskSpec::classification(cfg.class_bias),
            generate_classification_data(n, cfg.samples_per_node, cfg.cluster_variance, data_seed)?,
        ),
    };
    Ok(Problem { task, data })
}

fn resolve_probability(prob: AccessProb, g: &Graph, eps: f64) -> Result<f64> {
    match prob {
        AccessProb::Fixed(p) => Ok(p),
        AccessProb::ThroughputOptimal => Ok(optimal_access_probability(g)),
        AccessProb::SpectralOptimal => spectral_optimal_probability(g, eps),
    }
}

fn train_config(cfg: &ExperimentConfig, eps: f64, seed: u64) -> TrainConfig {
    TrainConfig {
        iterations: cfg.iterations,
        step_size: cfg.step_size,
        epsilon: Some(eps),
        batch_size: cfg.batch_size,
        seed,
        checkpoint_interval: cfg.checkpoint_interval,
    }
}

fn run_one(cfg: &ExperimentConfig, g: &Graph, eps: f64, p: f64, k: usize, r: usize) -> Result<MetricTrace> {
    let problem = make_problem(cfg, g.n(), derive_seed(cfg.seed, &[DATA_STREAM, r as u64]))?;
    let channel = Channel::RandomAccess(AccessPolicy::uniform(g.n(), p)?);
    let tc = train_config(cfg, eps, derive_seed(cfg.seed, &[TRAIN_STREAM, k as u64, r as u64]));
    learning::train(g, &channel, &problem, &tc)
}

// ------------------------------------------------------------------ train

/// Single training run at the one configured access probability.
pub fn train(cfg: &ExperimentConfig) -> Result<(f64, MetricTrace)> {
    if cfg.access_probs.len() != 1 {
        return Err(Error::config(
            "access_probs",
            format!("train needs exactly one access probability, got {}", cfg.access_probs.len()),
        ));
    }
    let (g, _) = build_graph(&cfg.topology)?;
    let eps = epsilon_for(cfg, &g)?;
    let p = resolve_probability(cfg.access_probs[0], &g, eps)?;
    Ok((p, run_one(cfg, &g, eps, p, 0, 0)?))
}

pub fn trace_to_csv(trace: &MetricTrace) -> String {
    let mut out = format!("{TRAIN_HEADER}\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{},{}", r.iteration, r.avg_test_loss, fmt_opt(r.accuracy), r.consensus_distance);
    }
    out
}

// ------------------------------------------------------------------ sweep

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    /// Position of `p` in [`SweepResult::probabilities`].
    pub p_index: usize,
    pub p: f64,
    pub replicate: usize,
    pub record: MetricRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepError {
    pub p: f64,
    pub replicate: usize,
    pub message: String,
}

/// Traces for every `(p, replicate)` pair, ordered by p-index, replicate, iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    /// Resolved access probabilities, in config order.
    pub probabilities: Vec<f64>,
    pub replicates: usize,
    pub rows: Vec<SweepRow>,
    pub errors: Vec<SweepError>,
}

/// Mean final metrics for one access probability.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummaryRow {
    pub p: f64,
    pub replicates: usize,
    pub mean_final_loss: f64,
    pub mean_final_accuracy: Option<f64>,
    pub mean_final_consensus_distance: f64,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_HEADER}\n");
        for row in &self.rows {
            let r = &row.record;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                row.p,
                row.replicate,
                r.iteration,
                r.avg_test_loss,
                fmt_opt(r.accuracy),
                r.consensus_distance
            );
        }
        out
    }

    pub fn errors_csv(&self) -> String {
        let mut out = format!("{SWEEP_ERRORS_HEADER}\n");
        for e in &self.errors {
            let _ = writeln!(out, "{},{},\"{}\"", e.p, e.replicate, e.message.replace('"', "'"));
        }
        out
    }

    /// Final checkpoint of each successful run, averaged over replicates.
    pub fn summary(&self) -> Vec<SweepSummaryRow> {
        let mut out = Vec::new();
        for (k, &p) in self.probabilities.iter().enumerate() {
            let finals: Vec<&MetricRecord> = (0..self.replicates)
                .filter_map(|r| {
                    self.rows
                        .iter()
                        .filter(|row| row.replicate == r && row.p_index == k)
                        .map(|row| &row.record)
                        .next_back()
                })
                .collect();
            if finals.is_empty() {
                continue;
            }
            let m = finals.len() as f64;
            let acc: Option<f64> = finals.iter().map(|f| f.accuracy).sum::<Option<f64>>().map(|a| a / m);
            out.push(SweepSummaryRow {
                p,
                replicates: finals.len(),
                mean_final_loss: finals.iter().map(|f| f.avg_test_loss).sum::<f64>() / m,
                mean_final_accuracy: acc,
                mean_final_consensus_distance: finals.iter().map(|f| f.consensus_distance).sum::<f64>() / m,
            });
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SWEEP_SUMMARY_HEADER}\n");
        for s in self.summary() {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.p,
                s.replicates,
                s.mean_final_loss,
                fmt_opt(s.mean_final_accuracy),
                s.mean_final_consensus_distance
            );
        }
        out
    }
}

/// Trains every `(p, replicate)` pair on the current rayon pool.
///
/// Runs are independent, so output does not depend on the pool size. A run
/// that fails is recorded in [`SweepResult::errors`] and the sweep continues.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let (g, _) = build_graph(&cfg.topology)?;
    let eps = epsilon_for(cfg, &g)?;
    let probabilities =
        cfg.access_probs.iter().map(|&a| resolve_probability(a, &g, eps)).collect::<Result<Vec<f64>>>()?;
    // surface data configuration problems before starting any run
    make_problem(cfg, g.n(), 0)?;

    let jobs: Vec<(usize, usize)> =
        (0..probabilities.len()).flat_map(|k| (0..cfg.replicates).map(move |r| (k, r))).collect();
    let outcomes: Vec<(usize, usize, Result<MetricTrace>)> =
        jobs.par_iter().map(|&(k, r)| (k, r, run_one(cfg, &g, eps, probabilities[k], k, r))).collect();

    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (k, r, outcome) in outcomes {
        let p = probabilities[k];
        match outcome {
            Ok(trace) => {
                rows.extend(trace.records.into_iter().map(|record| SweepRow { p_index: k, p, replicate: r, record }))
            }
            Err(e) => errors.push(SweepError { p, replicate: r, message: e.to_string() }),
        }
    }
    Ok(SweepResult { probabilities, replicates: cfg.replicates, rows, errors })
}

// --------------------------------------------------------------- topology

#[derive(Clone, Debug, PartialEq)]
pub struct TopologyReport {
    pub graph: Graph,
    pub er_attempts: Option<usize>,
    pub laplacian_spectrum: Vec<f64>,
}

impl TopologyReport {
    pub fn algebraic_connectivity(&self) -> f64 {
        self.laplacian_spectrum.get(1).copied().unwrap_or(0.0)
    }

    pub fn render(&self) -> String {
        let g = &self.graph;
        let mut out = format!("nodes = {}\nedges = {}\n", g.n(), g.edge_count());
        if let Some(a) = self.er_attempts {
            let _ = writeln!(out, "er_attempts = {a}");
        }
        let _ = writeln!(out, "algebraic_connectivity = {:.12}", self.algebraic_connectivity());
        let _ = writeln!(out, "degree_histogram:");
        for (d, c) in g.degrees().histogram() {
            let _ = writeln!(out, "  {d} {c}");
        }
        let spectrum: Vec<String> =
            self.laplacian_spectrum.iter().map(|&v| format!("{:.12}", if v.abs() < 5e-13 { 0.0 } else { v })).collect();
        let _ = writeln!(out, "laplacian_spectrum = {}", spectrum.join(" "));
        out
    }
}

pub fn topology(cfg: &ExperimentConfig) -> Result<TopologyReport> {
    let (graph, er_attempts) = build_graph(&cfg.topology)?;
    let laplacian_spectrum = graph.laplacian_spectrum()?;
    Ok(TopologyReport { graph, er_attempts, laplacian_spectrum })
}

// ------------------------------------------------------------------ output

/// Output files written by one command.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Written {
    pub files: Vec<PathBuf>,
}

impl Written {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<()> {
        write_file(&path, contents)?;
        self.files.push(path);
        Ok(())
    }
}

pub fn write_analysis(report: &AnalysisReport, out: &Path, plots: bool) -> Result<Written> {
    ensure_dir(out)?;
    let mut w = Written::default();
    w.write(out.join("analyze.csv"), &report.to_csv())?;
    w.write(out.join("analyze_summary.txt"), &report.summary())?;
    if plots {
        let ps: Vec<f64> = report.rows.iter().map(|r| r.p).collect();
        let tp: Vec<f64> = report.rows.iter().map(|r| r.expected_throughput).collect();
        let cr: Vec<f64> = report.rows.iter().map(|r| r.consensus_rate).collect();
        w.write(
            out.join("analyze_throughput.svg"),
            &plot::line_chart("Expected throughput", "p", "E[successful links]", &[("throughput", &ps, &tp)]),
        )?;
        w.write(
            out.join("analyze_consensus_rate.svg"),
            &plot::line_chart("Consensus rate", "p", "spectral radius", &[("rho", &ps, &cr)]),
        )?;
    }
    Ok(w)
}

pub fn write_sweep(result: &SweepResult, out: &Path, plots: bool) -> Result<Written> {
    ensure_dir(out)?;
    let mut w = Written::default();
    w.write(out.join("sweep.csv"), &result.to_csv())?;
    w.write(out.join("sweep_summary.csv"), &result.summary_csv())?;
    w.write(out.join("sweep_errors.csv"), &result.errors_csv())?;
    if plots {
        let summary = result.summary();
        let ps: Vec<f64> = summary.iter().map(|s| s.p).collect();
        let loss: Vec<f64> = summary.iter().map(|s| s.mean_final_loss).collect();
        w.write(
            out.join("sweep_final_loss.svg"),
            &plot::scatter_chart("Final test loss", "p", "mean final loss", &ps, &loss),
        )?;
    }
    Ok(w)
}

pub fn write_train(trace: &MetricTrace, out: &Path, plots: bool) -> Result<Written> {
    ensure_dir(out)?;
    let mut w = Written::default();
    w.write(out.join("train.csv"), &trace_to_csv(trace))?;
    if plots {
        let it: Vec<f64> = trace.records.iter().map(|r| r.iteration as f64).collect();
        let loss: Vec<f64> = trace.records.iter().map(|r| r.avg_test_loss).collect();
        w.write(
            out.join("train_loss.svg"),
            &plot::line_chart("Average test loss", "iteration", "loss", &[("loss", &it, &loss)]),
        )?;
    }
    Ok(w)
}

pub fn write_topology(report: &TopologyReport, out: &Path) -> Result<Written> {
    ensure_dir(out)?;
    let mut w = Written::default();
    w.write(out.join("topology.edges"), &report.graph.to_edge_list())?;
    w.write(out.join("topology_report.txt"), &report.render())?;
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::parse(text, Path::new(".")).unwrap()
    }

    #[test]
    fn analyze_ring_summary() {
        let report = analyze(&cfg("topology = ring\nnodes = 20")).unwrap();
        assert_eq!(report.rows.len(), 1001);
        assert!(report.rows.windows(2).all(|w| w[0].p < w[1].p));
        assert!((report.throughput_optimal - 1.0 / 3.0).abs() < 1e-4);
        assert!(report.gap() <= 1e-3);
        assert!(report.summary().contains("throughput_optimal_p = 0.333333"));
        let csv = report.to_csv();
        assert!(csv.starts_with("p,expected_throughput,consensus_rate\n0,0,"));
        assert!((report.rows[0].consensus_rate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn train_requires_single_probability() {
        let err = train(&cfg("access_probs = 0.1, 0.2")).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "access_probs"));
    }

    #[test]
    fn train_matches_first_sweep_run() {
        let c = cfg("nodes = 8\niterations = 20\naccess_probs = 0.3\nreplicates = 2");
        let (_, trace) = train(&c).unwrap();
        let s = sweep(&c).unwrap();
        let first: Vec<&MetricRecord> = s.rows.iter().filter(|r| r.replicate == 0).map(|r| &r.record).collect();
        assert_eq!(first, trace.records.iter().collect::<Vec<_>>());
    }

    #[test]
    fn t1_train_csv_has_one_row() {
        let (_, trace) = train(&cfg("nodes = 6\niterations = 1\naccess_probs = 0.3")).unwrap();
        let csv = trace_to_csv(&trace);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with(TRAIN_HEADER));
    }

    #[test]
    fn sweep_records_divergence_and_continues() {
        let c = cfg("nodes = 6\niterations = 300\nstep_size = 5\naccess_probs = 0, 0.3\nreplicates = 1");
        let s = sweep(&c).unwrap();
        assert_eq!(s.errors.len(), 2);
        assert!(s.rows.is_empty());
        assert!(s.errors_csv().lines().nth(1).unwrap().contains("diverged"));
    }

    #[test]
    fn sweep_grid_is_complete() {
        let c = cfg(
            "nodes = 8\niterations = 12\ncheckpoint_interval = 5\naccess_probs = 0, throughput_opt, 1\nreplicates = 2",
        );
        let s = sweep(&c).unwrap();
        assert_eq!(s.probabilities, vec![0.0, 1.0 / 3.0, 1.0]);
        // checkpoints 5, 10, 12 for each of 3 x 2 runs
        assert_eq!(s.rows.len(), 18);
        let summary = s.summary();
        assert_eq!(summary.len(), 3);
        assert!(summary.iter().all(|r| r.replicates == 2 && r.mean_final_accuracy.is_none()));
    }

    #[test]
    fn topology_report_contents() {
        let rep = topology(&cfg("topology = complete\nnodes = 5")).unwrap();
        assert_eq!(rep.graph.edge_count(), 10);
        assert!((rep.algebraic_connectivity() - 5.0).abs() < 1e-9);
        let text = rep.render();
        assert!(text.contains("edges = 10"));
        assert!(text.contains("degree_histogram:\n  4 5\n"));

        let er = topology(&cfg("topology = erdos_renyi\ngraph_seed = 7")).unwrap();
        assert!(er.er_attempts.is_some());
        assert!(er.algebraic_connectivity() > 0.0);
    }

    #[test]
    fn writers_create_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let c = cfg("nodes = 8\niterations = 5\naccess_probs = 0.3\nreplicates = 1");
        let (_, trace) = train(&c).unwrap();
        let w = write_train(&trace, dir.path(), true).unwrap();
        assert_eq!(w.files.len(), 2);
        let svg = fs::read_to_string(dir.path().join("train_loss.svg")).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));

        let s = sweep(&c).unwrap();
        write_sweep(&s, dir.path(), true).unwrap();
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().next().unwrap(), SWEEP_HEADER);
        assert_eq!(csv.lines().count(), 6);
    }
}
