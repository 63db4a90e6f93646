//! Linear-threshold circuit form and the two conversions around it:
//! Boolean → LTF (gate-for-gate weight tables) and LTF → bounded-fan-in
//! Boolean via carry-save adder trees plus a constant comparator.
//!
//! Negative weights are handled by offsetting: compare
//! S′ = Σ w⁺ᵢxᵢ + Σ|w⁻ᵢ|(1−xᵢ) against θ′ = θ + Σ|w⁻ᵢ|, so the adder only
//! ever sums nonnegative terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, Equivalence, GateKind, NodeId, SparsityCertificate};
use crate::gadgets::{self, Sig, ONE, ZERO};

/// Default magnitude bound on weights and thresholds.
pub const W_MAX_DEFAULT: i64 = 1 << 15;

/// One threshold gate: fires iff Σ wᵢxᵢ ≥ θ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtfGate {
    pub weights: Vec<i64>,
    pub theta: i64,
    pub fan_in: Vec<NodeId>,
}

/// Node of a threshold circuit. Constants mirror the Boolean IR's
/// constants-as-gates convention so conversions stay total.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LtfNode {
    Input,
    Const0,
    Const1,
    Ltf(LtfGate),
}

/// DAG of threshold gates with the same interface conventions as [`Circuit`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LtfCircuit {
    #[serde(default)]
    pub name: String,
    pub nodes: Vec<LtfNode>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
    /// Declared magnitude bound on weights and thresholds.
    pub w_max: i64,
}

#[derive(Debug, Error)]
pub enum LtfError {
    #[error("expected {expected} input bits, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("gate weight sum {sum} exceeds the configured {word_bits}-bit word")]
    WeightOverflow { sum: u64, word_bits: u32 },
    #[error("invalid threshold circuit: {0}")]
    Invalid(String),
    #[error(transparent)]
    Circuit(#[from] crate::circuit::CircuitError),
}

/// Knobs of the threshold-to-Boolean lowering.
#[derive(Clone, Copy, Debug)]
pub struct LowerConfig {
    /// Adder word width; Σ|wᵢ| + |θ| must fit.
    pub word_bits: u32,
    /// Magnitudes below this are fed to the adder in unary; larger ones use
    /// binary-weighted wiring.
    pub unary_threshold: i64,
}

impl Default for LowerConfig {
    fn default() -> Self {
        LowerConfig {
            word_bits: 32,
            unary_threshold: 8,
        }
    }
}

impl LtfCircuit {
    /// Maximum gate fan-in.
    pub fn r_max(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n {
                LtfNode::Ltf(g) => g.fan_in.len(),
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn validate(&self) -> Result<(), LtfError> {
        for (id, node) in self.nodes.iter().enumerate() {
            if let LtfNode::Ltf(g) = node {
                if g.fan_in.is_empty() {
                    return Err(LtfError::Invalid(format!("gate {id} has fan-in 0")));
                }
                if g.fan_in.len() != g.weights.len() {
                    return Err(LtfError::Invalid(format!(
                        "gate {id}: {} weights for {} wires",
                        g.weights.len(),
                        g.fan_in.len()
                    )));
                }
                if g.weights.iter().any(|w| w.abs() > self.w_max) || g.theta.abs() > self.w_max {
                    return Err(LtfError::Invalid(format!(
                        "gate {id} breaks the declared magnitude bound {}",
                        self.w_max
                    )));
                }
                if g.fan_in.iter().any(|&f| f as usize >= id) {
                    return Err(LtfError::Invalid(format!(
                        "gate {id} is not in topological order"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Forward evaluation under threshold semantics.
    pub fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, LtfError> {
        if input.len() != self.inputs.len() {
            return Err(LtfError::ArityMismatch {
                expected: self.inputs.len(),
                got: input.len(),
            });
        }
        let mut values = vec![false; self.nodes.len()];
        let mut next_input = 0;
        for (id, node) in self.nodes.iter().enumerate() {
            values[id] = match node {
                LtfNode::Input => {
                    let v = input[next_input];
                    next_input += 1;
                    v
                }
                LtfNode::Const0 => false,
                LtfNode::Const1 => true,
                LtfNode::Ltf(g) => {
                    let sum: i64 = g
                        .weights
                        .iter()
                        .zip(&g.fan_in)
                        .map(|(&w, &f)| w * i64::from(values[f as usize]))
                        .sum();
                    sum >= g.theta
                }
            };
        }
        Ok(self.outputs.iter().map(|&o| values[o as usize]).collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ltf serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<LtfCircuit, LtfError> {
        let l: LtfCircuit =
            serde_json::from_str(s).map_err(|e| LtfError::Invalid(format!("bad JSON: {e}")))?;
        l.validate()?;
        Ok(l)
    }
}

/// Gate-for-gate replacement of Boolean gates by threshold gates:
/// AND(x,y) = 1{x+y ≥ 2}, OR(x,y) = 1{x+y ≥ 1}, NOT(x) = 1{−x ≥ 0}.
/// XOR is not linearly separable, so it is desugared first.
pub fn bool_to_ltf(c: &Circuit) -> LtfCircuit {
    let c = if c.nodes.iter().any(|g| g.kind == GateKind::Xor2) {
        c.desugar_xor()
    } else {
        c.clone()
    };
    let nodes = c
        .nodes
        .iter()
        .map(|gate| match gate.kind {
            GateKind::Input => LtfNode::Input,
            GateKind::Const0 => LtfNode::Const0,
            GateKind::Const1 => LtfNode::Const1,
            GateKind::And2 => LtfNode::Ltf(LtfGate {
                weights: vec![1, 1],
                theta: 2,
                fan_in: gate.fan_in.clone(),
            }),
            GateKind::Or2 => LtfNode::Ltf(LtfGate {
                weights: vec![1, 1],
                theta: 1,
                fan_in: gate.fan_in.clone(),
            }),
            // θ = 0, not 1: 1{−x ≥ 0} is the complement on {0,1} (the θ = 1
            // variant misfires at x = 0).
            GateKind::Not => LtfNode::Ltf(LtfGate {
                weights: vec![-1],
                theta: 0,
                fan_in: gate.fan_in.clone(),
            }),
            GateKind::Xor2 => unreachable!("xor desugared above"),
        })
        .collect();
    LtfCircuit {
        name: c.name.clone(),
        nodes,
        inputs: c.inputs.clone(),
        outputs: c.outputs.clone(),
        w_max: W_MAX_DEFAULT,
    }
}

/// Lower one threshold gate into adder + comparator logic over fan-in-2
/// gates. `xs` are the already-lowered fan-in signals.
fn lower_gate(
    b: &mut CircuitBuilder,
    gate: &LtfGate,
    xs: &[Sig],
    cfg: &LowerConfig,
) -> Result<Sig, LtfError> {
    let sum_magnitude: u64 = gate.weights.iter().map(|w| w.unsigned_abs()).sum();
    if cfg.word_bits < 63 && sum_magnitude + gate.theta.unsigned_abs() >= (1u64 << cfg.word_bits) {
        return Err(LtfError::WeightOverflow {
            sum: sum_magnitude,
            word_bits: cfg.word_bits,
        });
    }

    // Offset negative weights so every summand is nonnegative.
    let mut theta = gate.theta;
    let mut terms: Vec<(Sig, u64)> = Vec::new();
    for (&w, &x) in gate.weights.iter().zip(xs) {
        match w.cmp(&0) {
            std::cmp::Ordering::Greater => terms.push((x, w as u64)),
            std::cmp::Ordering::Less => {
                terms.push((gadgets::not(b, x), w.unsigned_abs()));
                theta += -w;
            }
            std::cmp::Ordering::Equal => {}
        }
    }
    if theta <= 0 {
        return Ok(ONE);
    }
    let theta = theta as u64;
    if theta > sum_magnitude {
        return Ok(ZERO);
    }
    if let [(lit, mag)] = terms[..] {
        // A single literal reduces to a wire.
        return Ok(if mag >= theta { lit } else { ZERO });
    }

    let mut columns: Vec<Vec<Sig>> = vec![Vec::new(); 64 - sum_magnitude.leading_zeros() as usize];
    for (lit, mag) in terms {
        if (mag as i64) < cfg.unary_threshold {
            for _ in 0..mag {
                columns[0].push(lit);
            }
        } else {
            for (j, col) in columns.iter_mut().enumerate() {
                if (mag >> j) & 1 == 1 {
                    col.push(lit);
                }
            }
        }
    }
    let sum = gadgets::column_sum(b, columns);
    Ok(gadgets::compare_ge_const(b, &sum, theta))
}

/// Replace every threshold gate by its adder + comparator subcircuit,
/// producing an equivalent fan-in-2 Boolean circuit.
pub fn ltf_to_bfi(l: &LtfCircuit, cfg: &LowerConfig) -> Result<Circuit, LtfError> {
    l.validate()?;
    let mut b = CircuitBuilder::new(&l.name);
    let mut map: Vec<Sig> = Vec::with_capacity(l.nodes.len());
    for node in &l.nodes {
        let sig = match node {
            LtfNode::Input => Sig::Node(b.input()),
            LtfNode::Const0 => ZERO,
            LtfNode::Const1 => ONE,
            LtfNode::Ltf(gate) => {
                let xs: Vec<Sig> = gate.fan_in.iter().map(|&f| map[f as usize]).collect();
                lower_gate(&mut b, gate, &xs, cfg)?
            }
        };
        map.push(sig);
    }
    for &o in &l.outputs {
        let id = gadgets::materialize(&mut b, map[o as usize]);
        b.mark_output(id);
    }
    Ok(b.finish())
}

/// Result of the Boolean → LTF → Boolean round trip on one circuit.
#[derive(Clone, Debug)]
pub struct RoundtripReport {
    pub verdict: Equivalence,
    pub original: SparsityCertificate,
    pub lowered: SparsityCertificate,
    pub size_factor: f64,
    pub depth_factor: f64,
}

/// Assert `c ≡ ltf_to_bfi(bool_to_ltf(c))` exhaustively and report the
/// size/depth inflation of the round trip.
pub fn roundtrip_check(c: &Circuit) -> Result<RoundtripReport, LtfError> {
    let lowered = ltf_to_bfi(&bool_to_ltf(c), &LowerConfig::default())?;
    let verdict = c.brute_force_equiv(&lowered)?;
    let original = c.certify_sparsity()?;
    let lowered_cert = lowered.certify_sparsity()?;
    Ok(RoundtripReport {
        verdict,
        original,
        lowered: lowered_cert,
        size_factor: lowered_cert.s as f64 / original.s.max(1) as f64,
        depth_factor: lowered_cert.l as f64 / original.l.max(1) as f64,
    })
}

/// A circuit holding a single threshold gate over fresh inputs; the unit
/// under test for lowering experiments.
pub fn single_gate_circuit(weights: &[i64], theta: i64) -> LtfCircuit {
    let r = weights.len();
    let mut nodes: Vec<LtfNode> = (0..r).map(|_| LtfNode::Input).collect();
    nodes.push(LtfNode::Ltf(LtfGate {
        weights: weights.to_vec(),
        theta,
        fan_in: (0..r as NodeId).collect(),
    }));
    LtfCircuit {
        name: "single".into(),
        nodes,
        inputs: (0..r as NodeId).collect(),
        outputs: vec![r as NodeId],
        w_max: W_MAX_DEFAULT,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::index_to_bits;
    use crate::corpus;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn maj3() -> LtfCircuit {
        single_gate_circuit(&[1, 1, 1], 2)
    }

    #[test]
    fn ltf_evaluate_majority() {
        let m = maj3();
        assert_eq!(m.evaluate(&[true, true, false]).unwrap(), vec![true]);
        assert_eq!(m.evaluate(&[true, false, false]).unwrap(), vec![false]);
    }

    #[test]
    fn ltf_evaluate_mixed_weights() {
        let g = single_gate_circuit(&[3, -2], 1);
        // 3 − 2 = 1 ≥ 1.
        assert_eq!(g.evaluate(&[true, true]).unwrap(), vec![true]);
        assert_eq!(g.evaluate(&[false, true]).unwrap(), vec![false]);
    }

    #[test]
    fn bool_to_ltf_gate_tables() {
        let adder = corpus::ripple_adder_circuit(2);
        let ltf = bool_to_ltf(&adder);
        for node in &ltf.nodes {
            if let LtfNode::Ltf(g) = node {
                assert!(matches!(
                    (g.weights.as_slice(), g.theta),
                    ([1, 1], 2) | ([1, 1], 1) | ([-1], 0)
                ));
            }
        }
        // Equivalence of the conversion itself, over all 16 inputs.
        for idx in 0..16u64 {
            let input = index_to_bits(4, idx);
            assert_eq!(
                adder.evaluate(&input).unwrap(),
                ltf.evaluate(&input).unwrap()
            );
        }
    }

    #[test]
    fn not_gate_truth_table_at_theta_zero() {
        let not = single_gate_circuit(&[-1], 0);
        assert_eq!(not.evaluate(&[false]).unwrap(), vec![true]);
        assert_eq!(not.evaluate(&[true]).unwrap(), vec![false]);
    }

    fn assert_lowering_equivalent(l: &LtfCircuit) {
        let c = ltf_to_bfi(l, &LowerConfig::default()).unwrap();
        assert!(c.validate().is_empty());
        let r = l.inputs.len();
        for idx in 0..(1u64 << r) {
            let input = index_to_bits(r, idx);
            assert_eq!(
                c.evaluate(&input).unwrap(),
                l.evaluate(&input).unwrap(),
                "input {idx:b}"
            );
        }
    }

    #[test]
    fn majority_lowers_to_equivalent_circuit() {
        assert_lowering_equivalent(&maj3());
    }

    #[test]
    fn identity_gate_lowers_to_a_wire() {
        let id = single_gate_circuit(&[1], 1);
        let c = ltf_to_bfi(&id, &LowerConfig::default()).unwrap();
        assert_eq!(c.certify_sparsity().unwrap().s, 0, "pure wire");
        assert_lowering_equivalent(&id);
    }

    #[test]
    fn random_wide_gate_lowers_exhaustively() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let weights: Vec<i64> = (0..10).map(|_| rng.gen_range(-7..=7)).collect();
        let theta = rng.gen_range(-10..=10);
        assert_lowering_equivalent(&single_gate_circuit(&weights, theta));
    }

    #[test]
    fn weight_overflow_detected() {
        // Σ|wᵢ| = 60000 does not fit a 14-bit word.
        let g = single_gate_circuit(&[20000, 20000, 20000], 1);
        let cfg = LowerConfig {
            word_bits: 14,
            unary_threshold: 8,
        };
        assert!(matches!(
            ltf_to_bfi(&g, &cfg),
            Err(LtfError::WeightOverflow { .. })
        ));
    }

    #[test]
    fn roundtrip_adder_and_not() {
        let report = roundtrip_check(&corpus::ripple_adder_circuit(2)).unwrap();
        assert_eq!(report.verdict, Equivalence::Equivalent);
        assert!(report.size_factor >= 1.0);

        let mut b = CircuitBuilder::new("not1");
        let x = b.input();
        let g = b.not(x);
        b.mark_output(g);
        let report = roundtrip_check(&b.finish()).unwrap();
        assert_eq!(report.verdict, Equivalence::Equivalent);
    }

    #[test]
    fn roundtrip_parity_tree() {
        let report = roundtrip_check(&corpus::parity_tree_circuit(6)).unwrap();
        assert_eq!(report.verdict, Equivalence::Equivalent);
    }

    #[test]
    fn lowering_depth_grows_logarithmically() {
        // Measured subcircuit depth against a·log2(r·W) + b for r up to 64.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let w_bound = 15i64;
        let mut xs = Vec::new();
        let mut depths = Vec::new();
        for r in [2usize, 4, 8, 16, 32, 64] {
            let weights: Vec<i64> = (0..r).map(|_| rng.gen_range(-w_bound..=w_bound)).collect();
            let theta = rng.gen_range(1..=(w_bound * r as i64 / 2));
            let g = single_gate_circuit(&weights, theta);
            let c = ltf_to_bfi(&g, &LowerConfig::default()).unwrap();
            xs.push(((r as f64) * (w_bound as f64)).log2());
            depths.push(c.certify_sparsity().unwrap().l as f64);
        }
        let (a, b) = crate::stats::envelope_fit(&xs, &depths);
        for (&x, &d) in xs.iter().zip(&depths) {
            assert!(d <= a * x + b + 1e-9);
        }
        assert!(
            a <= 16.0,
            "depth slope {a} vs log2(r·W) looks superlogarithmic"
        );
    }

    proptest! {
        /// Offsetting negative weights never changes the verdict.
        #[test]
        fn offset_invariance(
            weights in proptest::collection::vec(-15i64..=15, 1..8),
            theta in -40i64..=40,
            assignment in 0u64..256,
        ) {
            let r = weights.len();
            let xs: Vec<bool> = (0..r).map(|i| (assignment >> i) & 1 == 1).collect();
            let direct: i64 = weights
                .iter()
                .zip(&xs)
                .map(|(&w, &x)| w * i64::from(x))
                .sum();
            let offset: i64 = weights.iter().filter(|&&w| w < 0).map(|w| -w).sum();
            let shifted: i64 = weights
                .iter()
                .zip(&xs)
                .map(|(&w, &x)| {
                    if w >= 0 {
                        w * i64::from(x)
                    } else {
                        -w * i64::from(!x)
                    }
                })
                .sum();
            prop_assert_eq!(direct >= theta, shifted >= theta + offset);
        }

        /// The lowering agrees with threshold semantics on random gates.
        #[test]
        fn lowering_matches_semantics(
            weights in proptest::collection::vec(-9i64..=9, 1..7),
            theta in -20i64..=20,
        ) {
            let g = single_gate_circuit(&weights, theta);
            let c = ltf_to_bfi(&g, &LowerConfig::default()).unwrap();
            let r = weights.len();
            for idx in 0..(1u64 << r) {
                let input = index_to_bits(r, idx);
                prop_assert_eq!(
                    c.evaluate(&input).unwrap(),
                    g.evaluate(&input).unwrap()
                );
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let l = bool_to_ltf(&corpus::ripple_adder_circuit(2));
        let back = LtfCircuit::from_json(&l.to_json()).unwrap();
        assert_eq!(l, back);
    }
}
