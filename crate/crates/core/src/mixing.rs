//! Mixing matrices for consensus under lossy broadcast.
//!
//! A base matrix `W = I - eps L` is masked entrywise by the slot's
//! transmission outcomes, and the weight of every failed incoming link is
//! then returned to the receiver's own diagonal entry ("biased
//! compensation"). The result is row-stochastic but generally not
//! symmetric. Its expectation has a closed form because a receiver's link
//! outcomes depend only on its own neighborhood's broadcast decisions.

use std::marker::PhantomData;
use std::ops::Deref;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, subtract_uniform_projector, DenseMatrix};
use crate::mac::{link_success_unchecked, AccessPolicy, LinkOutcome};
use crate::optimize::golden_section_min;
use crate::topology::Graph;

/// Step of the p-grid used by [`spectral_optimal_probability`].
pub const SPECTRAL_GRID_STEP: f64 = 1e-3;

mod sealed {
    pub trait Sealed {}
}

/// Marker for the construction stage of a [`MixingMatrix`].
pub trait Stage: sealed::Sealed {
    const NAME: &'static str;
}

macro_rules! stage {
    ($(#[$doc:meta])* $ty:ident, $name:literal) => {
        $(#[$doc])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq)]
        pub struct $ty;
        impl sealed::Sealed for $ty {}
        impl Stage for $ty {
            const NAME: &'static str = $name;
        }
    };
}

stage!(
    /// `I - eps L`: symmetric and doubly stochastic.
    Base, "base"
);
stage!(
    /// Base weights with failed links zeroed; rows need not sum to one.
    Masked, "masked"
);
stage!(
    /// Masked weights with failed-link mass moved to the diagonal; row-stochastic.
    Compensated, "compensated"
);
stage!(
    /// Expectation of the compensated matrix over the broadcast distribution.
    Expected, "expected"
);

/// A square weight matrix tagged with how it was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix<S: Stage> {
    matrix: DenseMatrix,
    stage: PhantomData<S>,
}

impl<S: Stage> MixingMatrix<S> {
    fn wrap(matrix: DenseMatrix) -> Self {
        Self { matrix, stage: PhantomData }
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn stage(&self) -> &'static str {
        S::NAME
    }

    pub fn into_inner(self) -> DenseMatrix {
        self.matrix
    }
}

impl<S: Stage> Deref for MixingMatrix<S> {
    type Target = DenseMatrix;

    fn deref(&self) -> &DenseMatrix {
        &self.matrix
    }
}

impl MixingMatrix<Compensated> {
    pub fn identity(n: usize) -> Self {
        Self::wrap(DenseMatrix::identity(n))
    }

    /// Accepts an arbitrary row-stochastic, nonnegative matrix as a mixing step.
    pub fn from_row_stochastic(m: DenseMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::dimension("square matrix", format!("{}x{}", m.rows(), m.cols())));
        }
        if m.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("mixing weights must be nonnegative".into()));
        }
        if let Some((i, s)) = m.row_sums().into_iter().enumerate().find(|(_, s)| (s - 1.0).abs() > 1e-12) {
            return Err(Error::Domain(format!("row {i} sums to {s}, expected 1")));
        }
        Ok(Self::wrap(m))
    }
}

/// The default step size `1 / (d_max + 1)`.
pub fn default_epsilon(g: &Graph) -> f64 {
    1.0 / (g.max_degree() as f64 + 1.0)
}

/// `W = I - eps L` with `0 < eps < 1/d_max`.
pub fn base_weight_matrix(g: &Graph, epsilon: f64) -> Result<MixingMatrix<Base>> {
    let d_max = g.max_degree() as f64;
    if !(epsilon > 0.0 && epsilon * d_max < 1.0) {
        return Err(Error::Domain(format!(
            "epsilon must satisfy 0 < epsilon < 1/d_max = {}, got {epsilon}",
            1.0 / d_max
        )));
    }
    Ok(MixingMatrix::wrap(DenseMatrix::from_fn(g.n(), g.n(), |i, j| {
        if i == j {
            1.0 - epsilon * g.degree(i) as f64
        } else if g.has_edge(i, j) {
            epsilon
        } else {
            0.0
        }
    })))
}

fn check_outcome_dims(w: &DenseMatrix, t: &impl LinkOutcome) -> Result<()> {
    if w.rows() == t.n() {
        Ok(())
    } else {
        Err(Error::dimension(format!("{}x{} transmission matrix", w.rows(), w.rows()), t.n()))
    }
}

/// Hadamard product `W ⊙ T`.
pub fn mask_by_transmission(w: &MixingMatrix<Base>, t: &impl LinkOutcome) -> Result<MixingMatrix<Masked>> {
    check_outcome_dims(w, t)?;
    Ok(MixingMatrix::wrap(DenseMatrix::from_fn(w.n(), w.n(), |i, j| if t.delivered(i, j) { w[(i, j)] } else { 0.0 })))
}

/// Off-diagonal entries kept where the link delivered; the diagonal becomes
/// one minus the row's surviving off-diagonal mass.
pub fn compensate(masked: &MixingMatrix<Masked>, t: &impl LinkOutcome) -> Result<MixingMatrix<Compensated>> {
    check_outcome_dims(masked, t)?;
    let n = masked.n();
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for j in (0..n).filter(|&j| j != i && t.delivered(i, j)) {
            let v = masked[(i, j)];
            out.set(i, j, v);
            off += v;
        }
        out.set(i, i, 1.0 - off);
    }
    Ok(MixingMatrix::wrap(out))
}

/// Mask-then-compensate for one slot.
pub fn slot_mixing_matrix(w: &MixingMatrix<Base>, t: &impl LinkOutcome) -> Result<MixingMatrix<Compensated>> {
    compensate(&mask_by_transmission(w, t)?, t)
}

/// Closed-form `E[W̄]`: off-diagonal `W_ij * P(i decodes j)`, diagonal fills the row to one.
pub fn expected_weight_matrix(
    g: &Graph,
    w: &MixingMatrix<Base>,
    policy: &AccessPolicy,
) -> Result<MixingMatrix<Expected>> {
    let n = g.n();
    if w.n() != n {
        return Err(Error::dimension(format!("{n}x{n} base matrix"), w.n()));
    }
    if policy.len() != n {
        return Err(Error::dimension(format!("{n} access probabilities"), policy.len()));
    }
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        let mut off = 0.0;
        for &j in g.neighbors(i) {
            let v = w[(i, j)] * link_success_unchecked(g, policy.probs(), i, j);
            out.set(i, j, v);
            off += v;
        }
        out.set(i, i, 1.0 - off);
    }
    Ok(MixingMatrix::wrap(out))
}

/// `rho(E[W̄] - 11^T/N)` under a uniform access probability `p`.
pub fn consensus_rate(g: &Graph, epsilon: f64, p: f64) -> Result<f64> {
    let w = base_weight_matrix(g, epsilon)?;
    consensus_rate_with_base(g, &w, p)
}

fn consensus_rate_with_base(g: &Graph, w: &MixingMatrix<Base>, p: f64) -> Result<f64> {
    let policy = AccessPolicy::uniform(g.n(), p)?;
    let expected = expected_weight_matrix(g, w, &policy)?;
    spectral_radius(&subtract_uniform_projector(&expected)?)
}

/// Second largest eigenvalue modulus of the base matrix.
pub fn base_beta(w: &MixingMatrix<Base>) -> Result<f64> {
    spectral_radius(&subtract_uniform_projector(w)?)
}

/// Access probability minimizing [`consensus_rate`].
///
/// Scans `p` on a grid of step [`SPECTRAL_GRID_STEP`] (in parallel), then
/// refines around the best grid point by golden-section search to `1e-5`.
pub fn spectral_optimal_probability(g: &Graph, epsilon: f64) -> Result<f64> {
    let w = base_weight_matrix(g, epsilon)?;
    let steps = (1.0 / SPECTRAL_GRID_STEP).round() as usize;
    let rates = (0..=steps)
        .into_par_iter()
        .map(|k| consensus_rate_with_base(g, &w, k as f64 / steps as f64))
        .collect::<Result<Vec<f64>>>()?;
    let best = rates.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).expect("grid is nonempty");
    let lo = best.saturating_sub(1) as f64 / steps as f64;
    let hi = (best + 1).min(steps) as f64 / steps as f64;

    // keep the first evaluation error, if any, and report it
    let mut failure = None;
    let refined = golden_section_min(
        |p| match consensus_rate_with_base(g, &w, p) {
            Ok(r) => r,
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        },
        lo,
        hi,
        1e-5,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let refined_rate = consensus_rate_with_base(g, &w, refined)?;
    Ok(if refined_rate <= rates[best] { refined } else { best as f64 / steps as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::{transmission_matrix, BroadcastVector, TransmissionMatrix};

    fn fig1() -> Graph {
        Graph::from_edge_list("n 5\n0 1\n0 4\n3 2\n3 4\n").unwrap()
    }

    #[test]
    fn base_matrix_entries() {
        let tri = base_weight_matrix(&Graph::ring(3).unwrap(), 0.3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.4 } else { 0.3 };
                assert!((tri[(i, j)] - expect).abs() < 1e-15);
            }
        }
        let ring = base_weight_matrix(&Graph::ring(20).unwrap(), 1.0 / 3.0).unwrap();
        assert!((0..20).all(|i| (ring[(i, i)] - 1.0 / 3.0).abs() < 1e-15));
        assert_eq!(ring.stage(), "base");
    }

    #[test]
    fn base_matrix_rejects_boundary_epsilon() {
        let ring = Graph::ring(5).unwrap();
        assert!(matches!(base_weight_matrix(&ring, 0.5), Err(Error::Domain(_))));
        assert!(matches!(base_weight_matrix(&ring, 0.0), Err(Error::Domain(_))));
        assert!(base_weight_matrix(&ring, 0.4999).is_ok());
    }

    #[test]
    fn masking_extremes() {
        let g = Graph::erdos_renyi(8, 0.5, 2).unwrap();
        let w = base_weight_matrix(&g, default_epsilon(&g)).unwrap();
        let diag = mask_by_transmission(&w, &TransmissionMatrix::identity(8)).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(diag[(i, j)], if i == j { w[(i, j)] } else { 0.0 });
            }
        }
        let full = mask_by_transmission(&w, &TransmissionMatrix::all_links(&g)).unwrap();
        assert_eq!(*full, *w);
    }

    #[test]
    fn masking_collision_example() {
        let g = fig1();
        let w = base_weight_matrix(&g, 0.4).unwrap();
        let b = BroadcastVector::new(vec![true, false, false, true, false]);
        let t = transmission_matrix(&g, &b).unwrap();
        let m = mask_by_transmission(&w, &t).unwrap();
        assert_eq!(m[(1, 0)], 0.4);
        assert_eq!(m[(2, 3)], 0.4);
        assert_eq!((m[(4, 0)], m[(4, 3)]), (0.0, 0.0));
        assert_eq!((m[(0, 1)], m[(0, 4)], m[(3, 2)], m[(3, 4)]), (0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn compensation_extremes() {
        let g = Graph::ring(6).unwrap();
        let w = base_weight_matrix(&g, 0.3).unwrap();
        let id = TransmissionMatrix::identity(6);
        assert_eq!(*slot_mixing_matrix(&w, &id).unwrap(), DenseMatrix::identity(6));
        let all = TransmissionMatrix::all_links(&g);
        assert!(slot_mixing_matrix(&w, &all).unwrap().max_abs_diff(&w) < 1e-15);
    }

    #[test]
    fn compensation_on_path() {
        let g = Graph::path(3).unwrap();
        let w = base_weight_matrix(&g, 0.4).unwrap();
        // node 1 alone broadcasts: receivers 0 and 2 both decode it
        let t = transmission_matrix(&g, &BroadcastVector::new(vec![false, true, false])).unwrap();
        let c = slot_mixing_matrix(&w, &t).unwrap();
        assert_eq!(c.row(0), &[0.6, 0.4, 0.0]);
        assert_eq!(c.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(c.row(2), &[0.0, 0.4, 0.6]);
        assert!(!c.is_symmetric(1e-12));
    }

    #[test]
    fn compensation_single_receiver() {
        // only the link (receiver 0 <- sender 1) succeeded
        struct OneLink;
        impl LinkOutcome for OneLink {
            fn n(&self) -> usize {
                3
            }
            fn delivered(&self, r: usize, s: usize) -> bool {
                r == s || (r, s) == (0, 1)
            }
        }
        let g = Graph::path(3).unwrap();
        let w = base_weight_matrix(&g, 0.4).unwrap();
        let c = slot_mixing_matrix(&w, &OneLink).unwrap();
        assert_eq!(c.row(0), &[0.6, 0.4, 0.0]);
        assert_eq!(c.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(c.row(2), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn dimension_mismatches() {
        let w = base_weight_matrix(&Graph::ring(4).unwrap(), 0.3).unwrap();
        let t = TransmissionMatrix::identity(5);
        assert!(matches!(mask_by_transmission(&w, &t), Err(Error::Dimension { .. })));
        let masked = mask_by_transmission(&w, &TransmissionMatrix::identity(4)).unwrap();
        assert!(matches!(compensate(&masked, &t), Err(Error::Dimension { .. })));
        let g5 = Graph::ring(5).unwrap();
        let pol = AccessPolicy::uniform(5, 0.3).unwrap();
        assert!(expected_weight_matrix(&g5, &w, &pol).is_err());
    }

    #[test]
    fn expected_matrix_closed_form_on_ring() {
        let g = Graph::ring(6).unwrap();
        let eps = 1.0 / 3.0;
        let w = base_weight_matrix(&g, eps).unwrap();
        let e = expected_weight_matrix(&g, &w, &AccessPolicy::uniform(6, 1.0 / 3.0).unwrap()).unwrap();
        let off = eps * 4.0 / 27.0;
        for i in 0..6 {
            assert!((e[(i, (i + 1) % 6)] - off).abs() < 1e-15);
            assert!((e[(i, (i + 5) % 6)] - off).abs() < 1e-15);
            assert!((e[(i, i)] - (1.0 - 2.0 * 4.0 / 81.0)).abs() < 1e-15);
        }
        let zero = expected_weight_matrix(&g, &w, &AccessPolicy::uniform(6, 0.0).unwrap()).unwrap();
        assert_eq!(*zero, DenseMatrix::identity(6));
    }

    #[test]
    fn consensus_rate_endpoints() {
        let g = Graph::erdos_renyi(10, 0.4, 11).unwrap();
        let eps = default_epsilon(&g);
        for p in [0.0, 1.0] {
            assert!((consensus_rate(&g, eps, p).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ring_consensus_rate_matches_circulant_formula() {
        let n = 20;
        let g = Graph::ring(n).unwrap();
        let eps = 1.0 / 3.0;
        for p in [0.1, 0.25, 1.0 / 3.0, 0.6] {
            let q = p * (1.0 - p) * (1.0 - p);
            let expected = (1..n)
                .map(|k| {
                    let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                    (1.0 - 2.0 * eps * q * (1.0 - theta.cos())).abs()
                })
                .fold(0.0, f64::max);
            let got = consensus_rate(&g, eps, p).unwrap();
            assert!((got - expected).abs() < 1e-10, "p={p}: {got} vs {expected}");
        }
    }

    #[test]
    fn spectral_optimum_for_ring_and_complete() {
        let ring = Graph::ring(20).unwrap();
        let p = spectral_optimal_probability(&ring, 1.0 / 3.0).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-3, "{p}");
        let k8 = Graph::complete(8).unwrap();
        let p = spectral_optimal_probability(&k8, default_epsilon(&k8)).unwrap();
        assert!((p - 0.125).abs() < 1e-3, "{p}");
    }

    #[test]
    fn base_beta_below_one_for_connected_graphs() {
        let g = Graph::erdos_renyi(15, 0.3, 4).unwrap();
        let w = base_weight_matrix(&g, default_epsilon(&g)).unwrap();
        assert!(w.is_symmetric(0.0));
        assert!(w.row_sums().iter().chain(w.col_sums().iter()).all(|s| (s - 1.0).abs() < 1e-12));
        assert!(base_beta(&w).unwrap() < 1.0);
    }

    #[test]
    fn row_stochastic_constructor_validates() {
        let ok = DenseMatrix::from_rows(&[vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(MixingMatrix::from_row_stochastic(ok).is_ok());
        let bad = DenseMatrix::from_rows(&[vec![0.5, 0.4], vec![0.0, 1.0]]).unwrap();
        assert!(MixingMatrix::from_row_stochastic(bad).is_err());
        let neg = DenseMatrix::from_rows(&[vec![1.5, -0.5], vec![0.0, 1.0]]).unwrap();
        assert!(MixingMatrix::from_row_stochastic(neg).is_err());
    }
}
