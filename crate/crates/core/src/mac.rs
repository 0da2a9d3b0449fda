//! Random-access broadcast channel with success-or-collision reception.
//!
//! In each slot every node independently decides to broadcast. Node `i`
//! decodes node `j`'s packet iff `j` broadcasts, `i` is silent, and no other
//! neighbor of `i` broadcasts. A node therefore receives at most one packet
//! per slot.

use rand::Rng;

use crate::error::{Error, Result};
use crate::optimize::golden_section_max;
use crate::topology::Graph;

/// Largest graph accepted by [`brute_force_expected_throughput`].
pub const BRUTE_FORCE_MAX_NODES: usize = 20;

/// Per-node broadcast probabilities.
#[derive(Clone, Debug, PartialEq)]
pub struct AccessPolicy {
    probs: Vec<f64>,
}

impl AccessPolicy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        for &p in &probs {
            check_probability(p)?;
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::Domain(format!("probability must lie in [0, 1], got {p}")))
    }
}

/// Which nodes broadcast in one slot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BroadcastVector {
    bits: Vec<bool>,
}

impl BroadcastVector {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// Per-slot delivery outcomes: entry `(i, j)` is set when receiver `i`
/// decoded sender `j`. The diagonal is always set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransmissionMatrix {
    n: usize,
    /// Sender decoded by each receiver, if any.
    received_from: Vec<Option<usize>>,
}

impl TransmissionMatrix {
    pub fn identity(n: usize) -> Self {
        Self { n, received_from: vec![None; n] }
    }

    /// Every edge delivers, as with a perfect channel. This does not satisfy
    /// the one-packet-per-receiver rule and never arises from [`transmission_matrix`].
    pub fn all_links(g: &Graph) -> PerfectLinks<'_> {
        PerfectLinks { graph: g }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, receiver: usize, sender: usize) -> bool {
        receiver == sender || self.received_from[receiver] == Some(sender)
    }

    pub fn received_from(&self, receiver: usize) -> Option<usize> {
        self.received_from[receiver]
    }

    /// Number of successful off-diagonal deliveries.
    pub fn successes(&self) -> usize {
        self.received_from.iter().flatten().count()
    }

    /// Successful `(receiver, sender)` pairs in receiver order.
    pub fn links(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.received_from.iter().enumerate().filter_map(|(i, s)| s.map(|j| (i, j)))
    }

    pub fn is_identity(&self) -> bool {
        self.received_from.iter().all(Option::is_none)
    }
}

/// The all-links-succeed outcome for a graph. See [`TransmissionMatrix::all_links`].
#[derive(Clone, Copy, Debug)]
pub struct PerfectLinks<'a> {
    graph: &'a Graph,
}

/// Anything that marks which `(receiver, sender)` links delivered in a slot.
pub trait LinkOutcome {
    fn n(&self) -> usize;
    fn delivered(&self, receiver: usize, sender: usize) -> bool;
}

impl LinkOutcome for TransmissionMatrix {
    fn n(&self) -> usize {
        self.n
    }

    fn delivered(&self, receiver: usize, sender: usize) -> bool {
        self.get(receiver, sender)
    }
}

impl LinkOutcome for PerfectLinks<'_> {
    fn n(&self) -> usize {
        self.graph.n()
    }

    fn delivered(&self, receiver: usize, sender: usize) -> bool {
        receiver == sender || self.graph.has_edge(receiver, sender)
    }
}

/// Independent Bernoulli broadcast decisions.
pub fn sample_broadcast<R: Rng + ?Sized>(policy: &AccessPolicy, rng: &mut R) -> BroadcastVector {
    BroadcastVector { bits: policy.probs.iter().map(|&p| rng.random::<f64>() < p).collect() }
}

/// Applies the collision rule to one slot's broadcast decisions.
pub fn transmission_matrix(g: &Graph, b: &BroadcastVector) -> Result<TransmissionMatrix> {
    if b.len() != g.n() {
        return Err(Error::dimension(format!("{} broadcast bits", g.n()), b.len()));
    }
    let received_from = (0..g.n())
        .map(|i| {
            if b.bits[i] {
                return None;
            }
            let mut talking = g.neighbors(i).iter().copied().filter(|&k| b.bits[k]);
            match (talking.next(), talking.next()) {
                (Some(j), None) => Some(j),
                _ => None,
            }
        })
        .collect();
    Ok(TransmissionMatrix { n: g.n(), received_from })
}

/// Probability that `receiver` decodes `sender` in a slot:
/// `q_sender (1 - q_receiver) prod_{k in N(receiver) \ sender} (1 - q_k)`.
/// Under a uniform policy this is `p (1 - p)^{d_receiver}`.
pub fn link_success_prob(g: &Graph, policy: &AccessPolicy, receiver: usize, sender: usize) -> Result<f64> {
    check_policy(g, policy)?;
    if receiver >= g.n() || sender >= g.n() || !g.has_edge(receiver, sender) {
        return Err(Error::InvalidLink { receiver, sender });
    }
    Ok(link_success_unchecked(g, &policy.probs, receiver, sender))
}

pub(crate) fn link_success_unchecked(g: &Graph, probs: &[f64], receiver: usize, sender: usize) -> f64 {
    let others: f64 = g.neighbors(receiver).iter().filter(|&&k| k != sender).map(|&k| 1.0 - probs[k]).product();
    probs[sender] * (1.0 - probs[receiver]) * others
}

fn check_policy(g: &Graph, policy: &AccessPolicy) -> Result<()> {
    if policy.len() == g.n() {
        Ok(())
    } else {
        Err(Error::dimension(format!("{} access probabilities", g.n()), policy.len()))
    }
}

/// Expected number of successful directed deliveries per slot under a uniform
/// access probability: `p * sum_i d_i (1 - p)^{d_i}`.
pub fn expected_throughput(g: &Graph, p: f64) -> Result<f64> {
    check_probability(p)?;
    Ok(throughput_unchecked(g, p))
}

fn throughput_unchecked(g: &Graph, p: f64) -> f64 {
    p * (0..g.n())
        .map(|i| {
            let d = g.degree(i);
            d as f64 * (1.0 - p).powi(d as i32)
        })
        .sum::<f64>()
}

/// Expected throughput under an arbitrary per-node policy (sum of link success probabilities).
pub fn expected_throughput_policy(g: &Graph, policy: &AccessPolicy) -> Result<f64> {
    check_policy(g, policy)?;
    Ok((0..g.n())
        .flat_map(|i| g.neighbors(i).iter().map(move |&j| (i, j)))
        .map(|(i, j)| link_success_unchecked(g, &policy.probs, i, j))
        .sum())
}

/// Derivative of [`expected_throughput`] in `p`:
/// `sum_i d_i (1 - p)^{d_i - 1} (1 - p (1 + d_i))`.
pub fn throughput_derivative(g: &Graph, p: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Domain(format!("derivative needs p in [0, 1), got {p}")));
    }
    Ok((0..g.n())
        .map(|i| {
            let d = g.degree(i) as f64;
            d * (1.0 - p).powi(g.degree(i) as i32 - 1) * (1.0 - p * (1.0 + d))
        })
        .sum())
}

/// Access probability maximizing [`expected_throughput`].
///
/// Each summand `p d (1-p)^d` peaks at `1/(1+d)`, so the maximizer lies in
/// `[1/(1+d_max), 1/(1+d_min)]`; a golden-section search runs on that bracket.
pub fn optimal_access_probability(g: &Graph) -> f64 {
    let degrees = g.degrees();
    let lo = 1.0 / (1.0 + degrees.max() as f64);
    let hi = 1.0 / (1.0 + degrees.min() as f64);
    if degrees.max() == degrees.min() {
        return lo;
    }
    golden_section_max(|p| throughput_unchecked(g, p), lo, hi, 1e-10)
}

/// Exact expected throughput by enumerating all `2^n` broadcast vectors.
pub fn brute_force_expected_throughput(g: &Graph, policy: &AccessPolicy) -> Result<f64> {
    check_policy(g, policy)?;
    let n = g.n();
    if n > BRUTE_FORCE_MAX_NODES {
        return Err(Error::InvalidSize { n, reason: "enumeration limited to 20 nodes" });
    }
    let neighbor_masks: Vec<u32> = (0..n).map(|i| g.neighbors(i).iter().fold(0u32, |m, &j| m | (1 << j))).collect();
    let probs = &policy.probs;
    let mut total = 0.0;
    for mask in 0u32..(1u32 << n) {
        let weight: f64 = (0..n).map(|j| if mask & (1 << j) != 0 { probs[j] } else { 1.0 - probs[j] }).product();
        if weight == 0.0 {
            continue;
        }
        let successes =
            (0..n).filter(|&i| mask & (1 << i) == 0 && (mask & neighbor_masks[i]).count_ones() == 1).count();
        total += weight * successes as f64;
    }
    Ok(total)
}
