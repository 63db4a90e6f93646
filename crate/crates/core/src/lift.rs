//! Smooth lift of a Boolean circuit to a polynomial map on [0,1]^n: every
//! gate is replaced by its multilinear extension, so the lifted DAG has the
//! same topology, matches the circuit exactly on hypercube vertices, and
//! keeps every intermediate value inside [0,1].

use thiserror::Error;

use crate::circuit::{Circuit, GateKind};

#[derive(Debug, Error)]
pub enum LiftError {
    #[error("expected {expected} coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("coordinate {value} outside [0,1]")]
    OutOfDomain { value: f64 },
    #[error("circuit is not well-formed: {0}")]
    InvalidCircuit(String),
}

/// The lifted evaluator; wraps the circuit whose topology it shares.
#[derive(Clone, Debug)]
pub struct LiftedDag {
    circuit: Circuit,
}

/// Replace each gate by its multilinear extension: NOT → 1−x, AND → x·y,
/// OR → x+y−x·y, XOR → x+y−2·x·y.
pub fn lift(c: &Circuit) -> Result<LiftedDag, LiftError> {
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(LiftError::InvalidCircuit(format!("{}", violations[0])));
    }
    Ok(LiftedDag { circuit: c.clone() })
}

impl LiftedDag {
    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn input_count(&self) -> usize {
        self.circuit.input_count()
    }

    /// Forward evaluation of every node's multilinear extension.
    pub fn node_values(&self, x: &[f64]) -> Result<Vec<f64>, LiftError> {
        if x.len() != self.circuit.inputs.len() {
            return Err(LiftError::DimensionMismatch {
                expected: self.circuit.inputs.len(),
                got: x.len(),
            });
        }
        if let Some(&bad) = x.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(LiftError::OutOfDomain { value: bad });
        }
        let mut values = vec![0.0f64; self.circuit.nodes.len()];
        let mut next_input = 0;
        for (id, gate) in self.circuit.nodes.iter().enumerate() {
            let a = gate.fan_in.first().map(|&f| values[f as usize]);
            let b = gate.fan_in.get(1).map(|&f| values[f as usize]);
            values[id] = match gate.kind {
                GateKind::Input => {
                    let v = x[next_input];
                    next_input += 1;
                    v
                }
                GateKind::Const0 => 0.0,
                GateKind::Const1 => 1.0,
                GateKind::Not => 1.0 - a.unwrap(),
                GateKind::And2 => a.unwrap() * b.unwrap(),
                GateKind::Or2 => {
                    let (a, b) = (a.unwrap(), b.unwrap());
                    a + b - a * b
                }
                GateKind::Xor2 => {
                    let (a, b) = (a.unwrap(), b.unwrap());
                    a + b - 2.0 * a * b
                }
            };
        }
        Ok(values)
    }

    /// Outputs of the lifted map at `x ∈ [0,1]^n`.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>, LiftError> {
        let values = self.node_values(x)?;
        Ok(self
            .circuit
            .outputs
            .iter()
            .map(|&o| values[o as usize])
            .collect())
    }

    /// Interval propagation with inputs in [0,1]. Every gate extension is
    /// multilinear, so its extremes over a box sit at the box corners.
    pub fn node_intervals(&self) -> Vec<(f64, f64)> {
        let mut iv: Vec<(f64, f64)> = vec![(0.0, 0.0); self.circuit.nodes.len()];
        for (id, gate) in self.circuit.nodes.iter().enumerate() {
            iv[id] = match gate.kind {
                GateKind::Input => (0.0, 1.0),
                GateKind::Const0 => (0.0, 0.0),
                GateKind::Const1 => (1.0, 1.0),
                GateKind::Not => {
                    let (lo, hi) = iv[gate.fan_in[0] as usize];
                    (1.0 - hi, 1.0 - lo)
                }
                GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => {
                    let (alo, ahi) = iv[gate.fan_in[0] as usize];
                    let (blo, bhi) = iv[gate.fan_in[1] as usize];
                    let f = |a: f64, b: f64| match gate.kind {
                        GateKind::And2 => a * b,
                        GateKind::Or2 => a + b - a * b,
                        _ => a + b - 2.0 * a * b,
                    };
                    let corners = [f(alo, blo), f(alo, bhi), f(ahi, blo), f(ahi, bhi)];
                    (
                        corners.iter().copied().fold(f64::INFINITY, f64::min),
                        corners.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                    )
                }
            };
        }
        iv
    }

    /// Certify that every node's value stays in [0,1] over the whole cube.
    pub fn range_certified(&self) -> bool {
        self.node_intervals()
            .iter()
            .all(|&(lo, hi)| lo >= -1e-12 && hi <= 1.0 + 1e-12)
    }
}

/// Standalone forward evaluation, mirroring the other per-structure ops.
pub fn lift_evaluate(lifted: &LiftedDag, x: &[f64]) -> Result<Vec<f64>, LiftError> {
    lifted.evaluate(x)
}

/// Measured deviation of the lift near vertices.
#[derive(Clone, Debug)]
pub struct NeighborhoodReport {
    pub epsilon: f64,
    pub samples: usize,
    /// max over samples of ‖lift(x) − F(round(x))‖∞.
    pub max_deviation: f64,
    /// max over samples of deviation / ‖x − round(x)‖∞.
    pub k_lift: f64,
    /// 2^L, the telescoping ceiling on k_lift for depth-L circuits.
    pub k_ceiling: f64,
}

/// Sample ε-perturbations of random vertices and measure the Lipschitz-style
/// deviation constant of the lift.
pub fn neighborhood_sweep(
    lifted: &LiftedDag,
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<NeighborhoodReport, LiftError> {
    use rand::{Rng, SeedableRng};
    assert!(epsilon > 0.0 && epsilon < 0.5);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = lifted.input_count();
    let depth = lifted
        .circuit
        .certify_sparsity()
        .map_err(|e| LiftError::InvalidCircuit(e.to_string()))?
        .l;
    let mut max_deviation: f64 = 0.0;
    let mut k_lift: f64 = 0.0;
    for _ in 0..samples {
        let vertex: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
        let x: Vec<f64> = vertex
            .iter()
            .map(|&b| (f64::from(b) + rng.gen_range(-epsilon..=epsilon)).clamp(0.0, 1.0))
            .collect();
        let dist = vertex
            .iter()
            .zip(&x)
            .map(|(&v, &xi)| (f64::from(v) - xi).abs())
            .fold(0.0, f64::max);
        let lifted_out = lifted.evaluate(&x)?;
        let exact = self_eval(lifted, &vertex);
        let deviation = lifted_out
            .iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        max_deviation = max_deviation.max(deviation);
        if dist > 1e-12 {
            k_lift = k_lift.max(deviation / dist);
        }
    }
    Ok(NeighborhoodReport {
        epsilon,
        samples,
        max_deviation,
        k_lift,
        k_ceiling: (2.0f64).powi(depth as i32),
    })
}

fn self_eval(lifted: &LiftedDag, vertex: &[bool]) -> Vec<f64> {
    lifted
        .circuit
        .evaluate(vertex)
        .expect("vertex arity matches")
        .into_iter()
        .map(|b| f64::from(u8::from(b)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::index_to_bits;
    use crate::circuit::CircuitBuilder;
    use crate::corpus;

    #[test]
    fn and_extension_values() {
        let mut b = CircuitBuilder::new("and");
        let x = b.input();
        let y = b.input();
        let g = b.and2(x, y);
        b.mark_output(g);
        let l = lift(&b.finish()).unwrap();
        assert_eq!(l.evaluate(&[1.0, 1.0]).unwrap(), vec![1.0]);
        assert_eq!(l.evaluate(&[0.5, 0.5]).unwrap(), vec![0.25]);
    }

    #[test]
    fn or_extension_value() {
        let mut b = CircuitBuilder::new("or");
        let x = b.input();
        let y = b.input();
        let g = b.or2(x, y);
        b.mark_output(g);
        let l = lift(&b.finish()).unwrap();
        let v = l.evaluate(&[0.3, 0.4]).unwrap()[0];
        assert!((v - 0.58).abs() < 1e-12);
    }

    #[test]
    fn identity_circuit_lifts_to_identity() {
        let mut b = CircuitBuilder::new("id");
        let x = b.input();
        let y = b.input();
        b.mark_output(x);
        b.mark_output(y);
        let l = lift(&b.finish()).unwrap();
        assert_eq!(l.evaluate(&[0.25, 0.75]).unwrap(), vec![0.25, 0.75]);
    }

    #[test]
    fn out_of_domain_rejected() {
        let l = lift(&corpus::parity_tree_circuit(3)).unwrap();
        assert!(matches!(
            l.evaluate(&[0.5, 1.5, 0.0]),
            Err(LiftError::OutOfDomain { .. })
        ));
    }

    fn assert_vertex_exact(c: &crate::circuit::Circuit) {
        let l = lift(c).unwrap();
        let n = c.input_count();
        for idx in 0..(1u64 << n) {
            let bits = index_to_bits(n, idx);
            let x: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
            let lifted = l.evaluate(&x).unwrap();
            let exact = c.evaluate(&bits).unwrap();
            for (a, b) in lifted.iter().zip(&exact) {
                assert_eq!(*a, f64::from(u8::from(*b)), "{} idx={idx}", c.name);
            }
        }
    }

    #[test]
    fn parity_circuit_vertex_exact() {
        assert_vertex_exact(&corpus::parity_tree_circuit(8));
    }

    #[test]
    fn adder_and_unrolled_machine_vertex_exact() {
        assert_vertex_exact(&corpus::ripple_adder_circuit(2));
        let m = corpus::parity_machine();
        let bound = m.time_bound_poly(3, 1).unwrap();
        assert_vertex_exact(&crate::unroll::unroll(&m, 3, bound).unwrap());
    }

    #[test]
    fn range_certified_for_corpus() {
        for c in [
            corpus::parity_tree_circuit(8),
            corpus::ripple_adder_circuit(3),
        ] {
            let l = lift(&c).unwrap();
            assert!(l.range_certified(), "{}", c.name);
        }
    }

    #[test]
    fn interior_values_stay_in_unit_interval() {
        use rand::{Rng, SeedableRng};
        let l = lift(&corpus::ripple_adder_circuit(2)).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen()).collect();
            for v in l.node_values(&x).unwrap() {
                assert!((-1e-12..=1.0 + 1e-12).contains(&v));
            }
        }
    }

    #[test]
    fn neighborhood_deviation_bounded() {
        let c = corpus::parity_tree_circuit(6);
        let l = lift(&c).unwrap();
        let cert = c.certify_sparsity().unwrap();
        let eps = 0.05;
        let report = neighborhood_sweep(&l, eps, 2000, 13).unwrap();
        // Per-gate Lipschitz ≤ 2 on the unit square telescopes to ≤ 2^L·ε,
        // and the coarse per-size bound 2·s·ε holds as well.
        assert!(report.k_lift <= report.k_ceiling, "{report:?}");
        assert!(report.max_deviation <= report.k_ceiling * eps);
        assert!(report.max_deviation <= 2.0 * cert.s as f64 * eps);
    }

    #[test]
    fn agreement_with_exact_relu_gadgets_on_vertices() {
        use crate::neuralize::{gate_gadget, GadgetMode};
        for kind in [GateKind::Not, GateKind::And2, GateKind::Or2, GateKind::Xor2] {
            let gadget = gate_gadget(kind, GadgetMode::Exact).unwrap();
            let mut b = CircuitBuilder::new("g");
            let out = match kind {
                GateKind::Not => {
                    let x = b.input();
                    b.not(x)
                }
                _ => {
                    let x = b.input();
                    let y = b.input();
                    match kind {
                        GateKind::And2 => b.and2(x, y),
                        GateKind::Or2 => b.or2(x, y),
                        _ => b.xor2(x, y),
                    }
                }
            };
            b.mark_output(out);
            let l = lift(&b.finish()).unwrap();
            let r = l.input_count();
            for idx in 0..(1u32 << r) {
                let x: Vec<f64> = (0..r).map(|i| f64::from((idx >> i) & 1)).collect();
                let a = l.evaluate(&x).unwrap()[0];
                let g = gadget.net.forward(&x).unwrap()[0];
                assert!((a - g).abs() < 1e-12, "{kind:?}");
            }
        }
    }
}
