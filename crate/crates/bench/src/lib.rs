//! Shared fixtures for the criterion benches.

use radsgd_core::learning::{generate_classification_data, Problem, TaskSpec};
use radsgd_core::topology::Graph;

/// The 20-node Erdos-Renyi graph used across benches.
pub fn er20() -> Graph {
    Graph::erdos_renyi(20, 0.3, 7).expect("ER(20, 0.3) instance")
}

pub fn classification_problem(n: usize) -> Problem {
    Problem {
        task: TaskSpec::classification(true),
        data: generate_classification_data(n, 100, 0.05, 1).expect("classification data"),
    }
}
