//! D-SGD with random-access broadcast.
//!
//! Each iteration samples broadcast decisions, derives the slot's
//! transmission outcomes, builds the compensated mixing matrix and then
//! updates every node adapt-then-combine style:
//!
//! ```text
//! z_j       = x_j - eta * g_j(x_j)        (local step on node j's data)
//! x_i(t+1)  = sum_j Wbar_ij * z_j          (combine received half-steps)
//! ```
//!
//! A node only ever transmits one packet per slot, so what its neighbors
//! receive is its already-updated model `z_j`.

mod data;
mod task;

pub use data::{
    generate_classification_data, generate_regression_data, FederatedData, LocalDataset, TEST_SAMPLES_PER_NODE,
};
pub use task::{local_gradient, Sample, TaskKind, TaskSpec, FEATURE_DIM, NUM_CLASSES};

use rand::seq::index;

use crate::error::{Error, Result};
use crate::mac::{sample_broadcast, transmission_matrix, AccessPolicy, TransmissionMatrix};
use crate::mixing::{base_weight_matrix, default_epsilon, slot_mixing_matrix, Compensated, MixingMatrix};
use crate::rng::{rng_from_seed, SimRng};
use crate::topology::Graph;

/// Parameter magnitude treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e9;

/// How links behave during training.
#[derive(Clone, Debug, PartialEq)]
pub enum Channel {
    /// Random access with collisions.
    RandomAccess(AccessPolicy),
    /// Every edge delivers every slot.
    Perfect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub step_size: f64,
    /// `None` selects `1 / (d_max + 1)`.
    pub epsilon: Option<f64>,
    pub batch_size: usize,
    pub seed: u64,
    /// `None` selects every iteration up to 1000 iterations, every 10th beyond.
    pub checkpoint_interval: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { iterations: 200, step_size: 0.01, epsilon: None, batch_size: 100, seed: 0, checkpoint_interval: None }
    }
}

impl TrainConfig {
    pub fn effective_checkpoint_interval(&self) -> usize {
        self.checkpoint_interval.unwrap_or(if self.iterations <= 1000 { 1 } else { 10 }).max(1)
    }

    fn is_checkpoint(&self, t: usize) -> bool {
        t.is_multiple_of(self.effective_checkpoint_interval()) || t == self.iterations
    }
}

/// Per-node models plus the stream used for broadcasts and minibatches.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub params: Vec<Vec<f64>>,
    pub iteration: usize,
    pub step_size: f64,
    pub rng: SimRng,
}

impl TrainState {
    /// All nodes start from the zero vector.
    pub fn new(n_nodes: usize, dim: usize, step_size: f64, seed: u64) -> Self {
        Self { params: vec![vec![0.0; dim]; n_nodes], iteration: 0, step_size, rng: rng_from_seed(seed) }
    }

    pub fn n_nodes(&self) -> usize {
        self.params.len()
    }

    pub fn average(&self) -> Vec<f64> {
        let dim = self.params.first().map_or(0, Vec::len);
        let mut avg = vec![0.0; dim];
        for x in &self.params {
            for (a, v) in avg.iter_mut().zip(x) {
                *a += v;
            }
        }
        let n = self.n_nodes().max(1) as f64;
        avg.iter_mut().for_each(|a| *a /= n);
        avg
    }

    /// `sum_i ||x_i - xbar||^2`.
    pub fn consensus_distance(&self) -> f64 {
        let avg = self.average();
        self.params.iter().map(|x| x.iter().zip(&avg).map(|(v, a)| (v - a).powi(2)).sum::<f64>()).sum()
    }
}

/// One adapt-then-combine update with the given mixing matrix.
///
/// Batches larger than or equal to a node's dataset use the full dataset;
/// smaller batches are drawn without replacement from `state.rng`.
pub fn dsgd_step(
    state: &mut TrainState,
    w_bar: &MixingMatrix<Compensated>,
    datasets: &[LocalDataset],
    task: &TaskSpec,
    batch_size: usize,
) -> Result<()> {
    let n = state.n_nodes();
    if w_bar.n() != n {
        return Err(Error::dimension(format!("{n}x{n} mixing matrix"), w_bar.n()));
    }
    if datasets.len() != n {
        return Err(Error::dimension(format!("{n} local datasets"), datasets.len()));
    }
    if batch_size == 0 {
        return Err(Error::Domain("batch size must be positive".into()));
    }

    let mut half_steps = Vec::with_capacity(n);
    for (x, ds) in state.params.iter().zip(datasets) {
        let grad = if state.step_size == 0.0 {
            None
        } else if batch_size >= ds.len() {
            Some(task.gradient(x, &ds.samples)?)
        } else {
            let picks = index::sample(&mut state.rng, ds.len(), batch_size);
            let batch: Vec<Sample> = picks.iter().map(|k| ds.samples[k]).collect();
            Some(task.gradient(x, &batch)?)
        };
        half_steps.push(match grad {
            Some(g) => x.iter().zip(&g).map(|(v, gv)| v - state.step_size * gv).collect(),
            None => x.clone(),
        });
    }

    for (i, x) in state.params.iter_mut().enumerate() {
        x.iter_mut().for_each(|v| *v = 0.0);
        for (j, z) in half_steps.iter().enumerate() {
            let w = w_bar[(i, j)];
            if w != 0.0 {
                for (v, zv) in x.iter_mut().zip(z) {
                    *v += w * zv;
                }
            }
        }
    }
    state.iteration += 1;
    Ok(())
}

/// Metrics at one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricRecord {
    pub iteration: usize,
    /// Mean over nodes of each local model's loss on the test set.
    pub avg_test_loss: f64,
    /// Mean test accuracy over nodes; classification only.
    pub accuracy: Option<f64>,
    pub consensus_distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricTrace {
    pub records: Vec<MetricRecord>,
}

impl MetricTrace {
    pub fn last(&self) -> Option<&MetricRecord> {
        self.records.last()
    }
}

/// A task with its data.
#[derive(Clone, Debug)]
pub struct Problem {
    pub task: TaskSpec,
    pub data: FederatedData,
}

/// Average test loss and accuracy over all node models.
pub fn evaluate(state: &TrainState, problem: &Problem) -> Result<(f64, Option<f64>)> {
    let test = &problem.data.test.samples;
    let n = state.n_nodes() as f64;
    let mut loss = 0.0;
    let mut acc: Option<f64> = None;
    for x in &state.params {
        loss += problem.task.loss(x, test)?;
        if let Some(a) = problem.task.accuracy(x, test)? {
            *acc.get_or_insert(0.0) += a;
        }
    }
    Ok((loss / n, acc.map(|a| a / n)))
}

fn check_divergence(state: &TrainState) -> Result<()> {
    for (node, x) in state.params.iter().enumerate() {
        if let Some(v) = x.iter().find(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
            return Err(Error::Diverged { iteration: state.iteration, node, magnitude: v.abs() });
        }
    }
    Ok(())
}

/// Runs the full training loop and returns the checkpoint trace.
pub fn train(g: &Graph, channel: &Channel, problem: &Problem, config: &TrainConfig) -> Result<MetricTrace> {
    let n = g.n();
    if problem.data.local.len() != n {
        return Err(Error::dimension(format!("{n} local datasets"), problem.data.local.len()));
    }
    if let Channel::RandomAccess(policy) = channel {
        if policy.len() != n {
            return Err(Error::dimension(format!("{n} access probabilities"), policy.len()));
        }
    }
    if config.iterations == 0 {
        return Err(Error::config("iterations", "must be at least 1"));
    }
    let epsilon = config.epsilon.unwrap_or_else(|| default_epsilon(g));
    let w = base_weight_matrix(g, epsilon)?;
    let perfect = slot_mixing_matrix(&w, &TransmissionMatrix::all_links(g))?;

    let mut state = TrainState::new(n, problem.task.dim(), config.step_size, config.seed);
    let mut trace = MetricTrace::default();
    for t in 1..=config.iterations {
        let slot;
        let w_bar = match channel {
            Channel::RandomAccess(policy) => {
                let b = sample_broadcast(policy, &mut state.rng);
                slot = slot_mixing_matrix(&w, &transmission_matrix(g, &b)?)?;
                &slot
            }
            Channel::Perfect => &perfect,
        };
        dsgd_step(&mut state, w_bar, &problem.data.local, &problem.task, config.batch_size)?;
        check_divergence(&state)?;
        if config.is_checkpoint(t) {
            let (avg_test_loss, accuracy) = evaluate(&state, problem)?;
            trace.records.push(MetricRecord {
                iteration: t,
                avg_test_loss,
                accuracy,
                consensus_distance: state.consensus_distance(),
            });
        }
    }
    Ok(trace)
}
