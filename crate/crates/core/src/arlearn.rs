//! Autoregressive trace learning over computation DAGs: tokenize circuit
//! evaluations (one bit per node in topological order), fit per-node
//! conditional tables over the bounded fan-in patterns, and chain the
//! fitted predictors to recover the circuit.
//!
//! Inputs are drawn uniformly; patterns that have probability zero under
//! the DAG semantics never occur at prediction time either, so they are
//! excluded from the coverage requirement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, NodeId};

#[derive(Debug, Error)]
pub enum ArlearnError {
    #[error("node {node} has no prediction for fan-in pattern {pattern:#b}")]
    UncoveredPattern { node: NodeId, pattern: usize },
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

/// Sequences of per-node bit values for sampled inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceDataset {
    pub circuit_name: String,
    pub node_count: usize,
    pub input_count: usize,
    /// One token (0/1) per node, in topological order.
    pub samples: Vec<Vec<u8>>,
    pub distribution: String,
    pub seed: u64,
}

impl TraceDataset {
    /// JSON lines: one token sequence per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            out.push_str(&serde_json::to_string(s).expect("token serialization cannot fail"));
            out.push('\n');
        }
        out
    }

    pub fn from_jsonl(
        name: &str,
        input_count: usize,
        seed: u64,
        text: &str,
    ) -> Result<TraceDataset, serde_json::Error> {
        let mut samples = Vec::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            samples.push(serde_json::from_str(line)?);
        }
        let node_count = samples.first().map_or(0, Vec::len);
        Ok(TraceDataset {
            circuit_name: name.to_string(),
            node_count,
            input_count,
            samples,
            distribution: "uniform".into(),
            seed,
        })
    }
}

/// Per-node conditional table over fan-in bit patterns (at most 4 of them).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GatePredictor {
    pub node: NodeId,
    pub arity: usize,
    /// counts[pattern][bit] over the dataset.
    pub counts: [[u64; 2]; 4],
    /// Majority label per pattern; `None` where the pattern never occurred.
    pub table: [Option<bool>; 4],
}

impl GatePredictor {
    pub fn pattern_count(&self) -> usize {
        1 << self.arity
    }

    pub fn uncovered_patterns(&self) -> Vec<usize> {
        (0..self.pattern_count())
            .filter(|&p| self.table[p].is_none())
            .collect()
    }
}

/// Sample uniform inputs and record every node's value per sample.
/// Deterministic for a fixed seed.
pub fn generate_dataset(c: &Circuit, num_samples: usize, seed: u64) -> TraceDataset {
    assert!(num_samples >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = c.input_count();
    let mut samples = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        let input: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let values = c.node_values(&input).expect("input arity matches");
        samples.push(values.into_iter().map(u8::from).collect());
    }
    TraceDataset {
        circuit_name: c.name.clone(),
        node_count: c.nodes.len(),
        input_count: n,
        samples,
        distribution: "uniform".into(),
        seed,
    }
}

/// Fit the per-node majority tables from trace counts. Input nodes carry no
/// predictor (their tokens are given); every other node gets one.
pub fn fit(c: &Circuit, dataset: &TraceDataset) -> Vec<GatePredictor> {
    assert!(!dataset.samples.is_empty(), "dataset must be nonempty");
    assert_eq!(dataset.node_count, c.nodes.len());
    let mut predictors = Vec::new();
    for (id, gate) in c.nodes.iter().enumerate() {
        if gate.kind == GateKind::Input {
            continue;
        }
        let mut counts = [[0u64; 2]; 4];
        for sample in &dataset.samples {
            let pattern = gate.fan_in.iter().enumerate().fold(0usize, |acc, (i, &f)| {
                acc | ((sample[f as usize] as usize) << i)
            });
            counts[pattern][sample[id] as usize] += 1;
        }
        let mut table = [None; 4];
        for (p, c2) in counts.iter().enumerate() {
            if c2[0] + c2[1] > 0 {
                table[p] = Some(c2[1] >= c2[0]);
            }
        }
        predictors.push(GatePredictor {
            node: id as NodeId,
            arity: gate.fan_in.len(),
            counts,
            table,
        });
    }
    predictors
}

/// Autoregressive pass in topological order: feed the input tokens, predict
/// every later token from its fan-in pattern, read off the output tokens.
pub fn chain_predict(
    c: &Circuit,
    predictors: &[GatePredictor],
    input: &[bool],
) -> Result<Vec<bool>, ArlearnError> {
    if input.len() != c.input_count() {
        return Err(crate::circuit::CircuitError::ArityMismatch {
            expected: c.input_count(),
            got: input.len(),
        }
        .into());
    }
    let mut by_node: Vec<Option<&GatePredictor>> = vec![None; c.nodes.len()];
    for p in predictors {
        by_node[p.node as usize] = Some(p);
    }
    let mut values = vec![false; c.nodes.len()];
    let mut next_input = 0;
    for (id, gate) in c.nodes.iter().enumerate() {
        if gate.kind == GateKind::Input {
            values[id] = input[next_input];
            next_input += 1;
            continue;
        }
        let p = by_node[id].expect("predictor list covers every non-input node");
        let pattern = gate.fan_in.iter().enumerate().fold(0usize, |acc, (i, &f)| {
            acc | (usize::from(values[f as usize]) << i)
        });
        values[id] = p.table[pattern].ok_or(ArlearnError::UncoveredPattern {
            node: id as NodeId,
            pattern,
        })?;
    }
    Ok(c.outputs.iter().map(|&o| values[o as usize]).collect())
}

/// Whether the chained predictors reproduce the circuit on every input
/// (exhaustive; needs n ≤ 24).
pub fn agrees_everywhere(c: &Circuit, predictors: &[GatePredictor]) -> Result<bool, ArlearnError> {
    let n = c.input_count();
    for idx in 0..(1u64 << n) {
        let input = crate::bits::index_to_bits(n, idx);
        match chain_predict(c, predictors, &input) {
            Ok(got) => {
                if got != c.evaluate(&input)? {
                    return Ok(false);
                }
            }
            Err(ArlearnError::UncoveredPattern { .. }) => return Ok(false),
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

/// The pinned sample count ⌈4s·ln(4s/δ)⌉ used by the recovery check.
pub fn coupon_sample_count(s: usize, delta: f64) -> usize {
    let s = s as f64;
    (4.0 * s * (4.0 * s / delta).ln()).ceil() as usize
}

/// Fraction of seeded trials in which `n_samples` training samples suffice
/// for exact recovery of the circuit.
pub fn recovery_rate(c: &Circuit, n_samples: usize, trials: usize, seed: u64) -> f64 {
    let mut ok = 0usize;
    for trial in 0..trials {
        let dataset = generate_dataset(c, n_samples, seed.wrapping_add(trial as u64));
        let predictors = fit(c, &dataset);
        if agrees_everywhere(c, &predictors).expect("corpus circuits are small") {
            ok += 1;
        }
    }
    ok as f64 / trials as f64
}

/// One row of the sample-complexity curve.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub delta: f64,
    /// Smallest ladder N with empirical recovery rate ≥ 1 − δ.
    pub n_min: usize,
    /// The s·ln(s/δ)-shaped reference value.
    pub reference: f64,
}

/// Empirical minimum sample counts across failure probabilities, measured
/// on one shared rate table so the column is monotone by construction.
pub fn sample_complexity_curve(
    c: &Circuit,
    deltas: &[f64],
    trials: usize,
    seed: u64,
) -> Vec<CurvePoint> {
    assert!(trials >= 10, "need at least 10 trials per point");
    let s = c.certify_sparsity().map(|cert| cert.s).unwrap_or(1).max(1);
    // Geometric ladder of candidate sample counts, with the pinned coupon
    // count as a guaranteed-covered ceiling.
    let cap = coupon_sample_count(s, deltas.iter().copied().fold(0.05, f64::min)).max(8);
    let mut ladder = vec![1usize, 2, 4];
    while *ladder.last().unwrap() < cap {
        ladder.push(ladder.last().unwrap() * 2);
    }
    let rates: Vec<f64> = ladder
        .iter()
        .map(|&n| recovery_rate(c, n, trials, seed))
        .collect();
    deltas
        .iter()
        .map(|&delta| {
            let n_min = ladder
                .iter()
                .zip(&rates)
                .find(|(_, &r)| r >= 1.0 - delta)
                .map_or(*ladder.last().unwrap(), |(&n, _)| n);
            CurvePoint {
                delta,
                n_min,
                reference: s as f64 * (s as f64 / delta).ln(),
            }
        })
        .collect()
}
