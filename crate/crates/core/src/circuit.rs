//! Bounded-fan-in Boolean DAG: the central intermediate representation.
//!
//! Nodes are stored in topological order and referenced by index, so a gate
//! may only read nodes with strictly smaller ids. Every gate has fan-in ≤ 2.
//! Constants are ordinary gates, which keeps the lowering passes uniform.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Index of a node inside a [`Circuit`].
pub type NodeId = u32;

/// Gate kinds of the IR. Fan-in is fixed per kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateKind {
    Input,
    Const0,
    Const1,
    Not,
    And2,
    Or2,
    Xor2,
}

impl GateKind {
    /// Number of fan-in wires this kind reads.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Input | GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Not => 1,
            GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => 2,
        }
    }
}

/// A single node: kind plus fan-in ids (length must equal the kind's arity).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    #[serde(default)]
    pub fan_in: Vec<NodeId>,
}

/// Bounded-fan-in Boolean DAG with designated input and output nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Circuit {
    #[serde(default)]
    pub name: String,
    pub nodes: Vec<Gate>,
    pub inputs: Vec<NodeId>,
    pub outputs: Vec<NodeId>,
}

/// Fan-in / size / depth certificate recomputable from the circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparsityCertificate {
    /// Maximum fan-in over internal nodes.
    pub k: usize,
    /// Number of non-input nodes.
    pub s: usize,
    /// Longest input-to-output path length, in gate edges.
    pub l: usize,
    pub input_bits: usize,
    pub output_bits: usize,
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("expected {expected} input bits, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("circuit is not topologically ordered (node {0} reads a later node)")]
    CyclicGraph(NodeId),
    #[error("exhaustive check supports at most {max} inputs, circuit has {got}")]
    TooManyInputs { max: usize, got: usize },
    #[error("circuits have mismatched interfaces: {0}")]
    InterfaceMismatch(String),
}

/// A structural rule violation found by [`Circuit::validate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    /// A gate reads a node id that is not strictly smaller than its own.
    CycleOrOrderViolation(NodeId),
    /// Fan-in length does not match the gate kind's arity.
    ArityViolation(NodeId),
    /// A fan-in id points past the end of the node list.
    DanglingReference(NodeId),
    /// An output id references a nonexistent node.
    BadOutput(NodeId),
    /// The `inputs` list disagrees with the set of `Input` nodes.
    InputListMismatch(NodeId),
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Violation::CycleOrOrderViolation(n) => write!(f, "node {n}: cycle or order violation"),
            Violation::ArityViolation(n) => write!(f, "node {n}: fan-in arity mismatch"),
            Violation::DanglingReference(n) => write!(f, "node {n}: dangling fan-in reference"),
            Violation::BadOutput(n) => write!(f, "output {n}: no such node"),
            Violation::InputListMismatch(n) => write!(f, "node {n}: input list mismatch"),
        }
    }
}

/// Verdict of an exhaustive equivalence sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Equivalent,
    /// Lexicographically first input on which the two circuits differ.
    Counterexample(Vec<bool>),
}

impl Circuit {
    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluate under standard gate semantics. Returns output bits in order.
    pub fn evaluate(&self, input: &[bool]) -> Result<Vec<bool>, CircuitError> {
        let values = self.node_values(input)?;
        Ok(self.outputs.iter().map(|&o| values[o as usize]).collect())
    }

    /// Evaluate and return the value of every node, in node order.
    pub fn node_values(&self, input: &[bool]) -> Result<Vec<bool>, CircuitError> {
        if input.len() != self.inputs.len() {
            return Err(CircuitError::ArityMismatch {
                expected: self.inputs.len(),
                got: input.len(),
            });
        }
        let mut values = vec![false; self.nodes.len()];
        let mut next_input = 0;
        for (id, gate) in self.nodes.iter().enumerate() {
            values[id] = match gate.kind {
                GateKind::Input => {
                    let v = input[next_input];
                    next_input += 1;
                    v
                }
                GateKind::Const0 => false,
                GateKind::Const1 => true,
                GateKind::Not => !values[gate.fan_in[0] as usize],
                GateKind::And2 => values[gate.fan_in[0] as usize] & values[gate.fan_in[1] as usize],
                GateKind::Or2 => values[gate.fan_in[0] as usize] | values[gate.fan_in[1] as usize],
                GateKind::Xor2 => values[gate.fan_in[0] as usize] ^ values[gate.fan_in[1] as usize],
            };
        }
        Ok(values)
    }

    /// Check all structural invariants; the empty list means well-formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut violations = Vec::new();
        let n = self.nodes.len() as NodeId;
        for (id, gate) in self.nodes.iter().enumerate() {
            let id = id as NodeId;
            if gate.fan_in.len() != gate.kind.arity() {
                violations.push(Violation::ArityViolation(id));
            }
            for &src in &gate.fan_in {
                if src >= n {
                    violations.push(Violation::DanglingReference(id));
                } else if src >= id {
                    violations.push(Violation::CycleOrOrderViolation(id));
                }
            }
        }
        for &o in &self.outputs {
            if o >= n {
                violations.push(Violation::BadOutput(o));
            }
        }
        let declared: Vec<NodeId> = self.inputs.clone();
        let actual: Vec<NodeId> = self
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, g)| g.kind == GateKind::Input)
            .map(|(id, _)| id as NodeId)
            .collect();
        if declared != actual {
            let witness = declared
                .iter()
                .chain(actual.iter())
                .copied()
                .next()
                .unwrap_or(0);
            violations.push(Violation::InputListMismatch(witness));
        }
        violations
    }

    /// Compute the exact (k, s, L) certificate.
    pub fn certify_sparsity(&self) -> Result<SparsityCertificate, CircuitError> {
        for (id, gate) in self.nodes.iter().enumerate() {
            for &src in &gate.fan_in {
                if src as usize >= id {
                    return Err(CircuitError::CyclicGraph(id as NodeId));
                }
            }
        }
        let mut depth = vec![0usize; self.nodes.len()];
        let mut k = 0;
        let mut s = 0;
        for (id, gate) in self.nodes.iter().enumerate() {
            if gate.kind != GateKind::Input {
                s += 1;
                k = k.max(gate.fan_in.len());
            }
            depth[id] = match gate.kind.arity() {
                0 => 0,
                _ => {
                    1 + gate
                        .fan_in
                        .iter()
                        .map(|&f| depth[f as usize])
                        .max()
                        .unwrap()
                }
            };
        }
        let l = self
            .outputs
            .iter()
            .map(|&o| depth[o as usize])
            .max()
            .unwrap_or(0);
        Ok(SparsityCertificate {
            k,
            s,
            l,
            input_bits: self.inputs.len(),
            output_bits: self.outputs.len(),
        })
    }

    /// Depth of every node (0 for sources, 1 + max fan-in depth for gates).
    pub fn node_depths(&self) -> Vec<usize> {
        let mut depth = vec![0usize; self.nodes.len()];
        for (id, gate) in self.nodes.iter().enumerate() {
            if gate.kind.arity() > 0 {
                depth[id] = 1 + gate
                    .fan_in
                    .iter()
                    .map(|&f| depth[f as usize])
                    .max()
                    .unwrap();
            }
        }
        depth
    }

    /// Exhaustive equivalence check over all inputs, up to 24 input bits.
    pub fn brute_force_equiv(&self, other: &Circuit) -> Result<Equivalence, CircuitError> {
        if self.inputs.len() != other.inputs.len() || self.outputs.len() != other.outputs.len() {
            return Err(CircuitError::InterfaceMismatch(format!(
                "{}x{} vs {}x{}",
                self.inputs.len(),
                self.outputs.len(),
                other.inputs.len(),
                other.outputs.len()
            )));
        }
        let n = self.inputs.len();
        if n > 24 {
            return Err(CircuitError::TooManyInputs { max: 24, got: n });
        }
        for idx in 0..(1u64 << n) {
            let input = crate::bits::index_to_bits(n, idx);
            if self.evaluate(&input)? != other.evaluate(&input)? {
                return Ok(Equivalence::Counterexample(input));
            }
        }
        Ok(Equivalence::Equivalent)
    }

    /// Rewrite every XOR2 into OR(AND(a, ¬b), AND(¬a, b)). Needed by passes
    /// whose gate basis is {AND, OR, NOT}.
    pub fn desugar_xor(&self) -> Circuit {
        let mut b = CircuitBuilder::new(&self.name);
        let mut map = vec![0 as NodeId; self.nodes.len()];
        for (id, gate) in self.nodes.iter().enumerate() {
            let new_id = match gate.kind {
                GateKind::Input => b.input(),
                GateKind::Const0 => b.const0(),
                GateKind::Const1 => b.const1(),
                GateKind::Not => b.not(map[gate.fan_in[0] as usize]),
                GateKind::And2 => {
                    b.and2(map[gate.fan_in[0] as usize], map[gate.fan_in[1] as usize])
                }
                GateKind::Or2 => b.or2(map[gate.fan_in[0] as usize], map[gate.fan_in[1] as usize]),
                GateKind::Xor2 => {
                    let a = map[gate.fan_in[0] as usize];
                    let c = map[gate.fan_in[1] as usize];
                    let na = b.not(a);
                    let nc = b.not(c);
                    let left = b.and2(a, nc);
                    let right = b.and2(na, c);
                    b.or2(left, right)
                }
            };
            map[id] = new_id;
        }
        for &o in &self.outputs {
            b.mark_output(map[o as usize]);
        }
        b.finish()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Circuit, serde_json::Error> {
        serde_json::from_str(s)
    }
}

/// Incremental construction keeping nodes topologically ordered by design.
#[derive(Clone, Debug, Default)]
pub struct CircuitBuilder {
    name: String,
    nodes: Vec<Gate>,
    inputs: Vec<NodeId>,
    outputs: Vec<NodeId>,
}

impl CircuitBuilder {
    pub fn new(name: &str) -> Self {
        CircuitBuilder {
            name: name.to_string(),
            ..Default::default()
        }
    }

    fn push(&mut self, kind: GateKind, fan_in: Vec<NodeId>) -> NodeId {
        debug_assert!(fan_in.iter().all(|&f| (f as usize) < self.nodes.len()));
        let id = self.nodes.len() as NodeId;
        self.nodes.push(Gate { kind, fan_in });
        id
    }

    pub fn input(&mut self) -> NodeId {
        let id = self.push(GateKind::Input, vec![]);
        self.inputs.push(id);
        id
    }

    pub fn const0(&mut self) -> NodeId {
        self.push(GateKind::Const0, vec![])
    }

    pub fn const1(&mut self) -> NodeId {
        self.push(GateKind::Const1, vec![])
    }

    pub fn not(&mut self, a: NodeId) -> NodeId {
        self.push(GateKind::Not, vec![a])
    }

    pub fn and2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(GateKind::And2, vec![a, b])
    }

    pub fn or2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(GateKind::Or2, vec![a, b])
    }

    pub fn xor2(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(GateKind::Xor2, vec![a, b])
    }

    /// Balanced OR over any number of signals (empty ⇒ const 0).
    pub fn or_tree(&mut self, ids: &[NodeId]) -> NodeId {
        self.balanced_tree(ids, GateKind::Or2, false)
    }

    /// Balanced AND over any number of signals (empty ⇒ const 1).
    pub fn and_tree(&mut self, ids: &[NodeId]) -> NodeId {
        self.balanced_tree(ids, GateKind::And2, true)
    }

    /// Balanced XOR over any number of signals (empty ⇒ const 0).
    pub fn xor_tree(&mut self, ids: &[NodeId]) -> NodeId {
        self.balanced_tree(ids, GateKind::Xor2, false)
    }

    fn balanced_tree(&mut self, ids: &[NodeId], kind: GateKind, empty_value: bool) -> NodeId {
        match ids.len() {
            0 => {
                if empty_value {
                    self.const1()
                } else {
                    self.const0()
                }
            }
            1 => ids[0],
            _ => {
                let mut level: Vec<NodeId> = ids.to_vec();
                while level.len() > 1 {
                    let mut next = Vec::with_capacity(level.len() / 2 + 1);
                    for pair in level.chunks(2) {
                        if pair.len() == 2 {
                            next.push(self.push(kind, vec![pair[0], pair[1]]));
                        } else {
                            next.push(pair[0]);
                        }
                    }
                    level = next;
                }
                level[0]
            }
        }
    }

    pub fn mark_output(&mut self, id: NodeId) {
        self.outputs.push(id);
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn finish(self) -> Circuit {
        Circuit {
            name: self.name,
            nodes: self.nodes,
            inputs: self.inputs,
            outputs: self.outputs,
        }
    }
}
