//! Synthetic non-IID datasets.
//!
//! Regression: node `i` observes `b_i + w`, `b_i ~ U(-1, 5)`, `w ~ N(0, sigma^2)`.
//! Classification: four centers `c_j ~ U(-1, 1)^2`; node `i` holds only
//! class `i mod 4`, samples `c_j + w`, `w ~ N(0, v I)`.
//! Both test sets hold `100 N` samples split evenly across biases or classes.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::task::{Sample, FEATURE_DIM, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, SimRng};

/// Test samples contributed per node.
pub const TEST_SAMPLES_PER_NODE: usize = 100;

/// Samples held by one node (or the shared test set, with `node = None`).
#[derive(Clone, Debug, PartialEq)]
pub struct LocalDataset {
    pub node: Option<usize>,
    pub samples: Vec<Sample>,
}

impl LocalDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Per-node training sets plus the shared test set.
#[derive(Clone, Debug, PartialEq)]
pub struct FederatedData {
    pub local: Vec<LocalDataset>,
    pub test: LocalDataset,
    /// Per-node biases (regression) or per-class centers (classification).
    pub centers: Vec<Vec<f64>>,
}

fn gaussian(std: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, std).map_err(|e| Error::Domain(format!("noise scale {std}: {e}")))
}

fn check_counts(n_nodes: usize, samples_per_node: usize) -> Result<()> {
    if n_nodes == 0 {
        return Err(Error::config("nodes", "need at least one node"));
    }
    if samples_per_node == 0 {
        return Err(Error::config("samples_per_node", "need at least one sample per node"));
    }
    Ok(())
}

pub fn generate_regression_data(
    n_nodes: usize,
    samples_per_node: usize,
    noise_std: f64,
    seed: u64,
) -> Result<FederatedData> {
    check_counts(n_nodes, samples_per_node)?;
    let noise = gaussian(noise_std)?;
    let mut rng = rng_from_seed(seed);
    let biases: Vec<f64> = (0..n_nodes).map(|_| rng.random_range(-1.0..5.0)).collect();
    let draw = |b: f64, count: usize, rng: &mut SimRng| -> Vec<Sample> {
        (0..count).map(|_| Sample::Scalar { y: b + noise.sample(rng) }).collect()
    };
    let local = biases
        .iter()
        .enumerate()
        .map(|(i, &b)| LocalDataset { node: Some(i), samples: draw(b, samples_per_node, &mut rng) })
        .collect();
    let test = biases.iter().flat_map(|&b| draw(b, TEST_SAMPLES_PER_NODE, &mut rng)).collect();
    Ok(FederatedData {
        local,
        test: LocalDataset { node: None, samples: test },
        centers: biases.into_iter().map(|b| vec![b]).collect(),
    })
}

pub fn generate_classification_data(
    n_nodes: usize,
    samples_per_node: usize,
    cluster_variance: f64,
    seed: u64,
) -> Result<FederatedData> {
    check_counts(n_nodes, samples_per_node)?;
    if !n_nodes.is_multiple_of(NUM_CLASSES) {
        return Err(Error::config(
            "nodes",
            format!("classification needs a node count divisible by {NUM_CLASSES}, got {n_nodes}"),
        ));
    }
    if cluster_variance.is_nan() || cluster_variance < 0.0 {
        return Err(Error::config("cluster_variance", "must be nonnegative"));
    }
    let noise = gaussian(cluster_variance.sqrt())?;
    let mut rng = rng_from_seed(seed);
    let centers: Vec<[f64; FEATURE_DIM]> =
        (0..NUM_CLASSES).map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).collect();
    let draw = |class: usize, count: usize, rng: &mut SimRng| -> Vec<Sample> {
        let c = centers[class];
        (0..count).map(|_| Sample::Labeled { x: [c[0] + noise.sample(rng), c[1] + noise.sample(rng)], class }).collect()
    };
    let local = (0..n_nodes)
        .map(|i| LocalDataset { node: Some(i), samples: draw(i % NUM_CLASSES, samples_per_node, &mut rng) })
        .collect();
    let per_class = TEST_SAMPLES_PER_NODE * n_nodes / NUM_CLASSES;
    let test = (0..NUM_CLASSES).flat_map(|c| draw(c, per_class, &mut rng)).collect();
    Ok(FederatedData {
        local,
        test: LocalDataset { node: None, samples: test },
        centers: centers.iter().map(|c| c.to_vec()).collect(),
    })
}
