//! Replace circuit gates by ReLU gadgets and wire them into a strictly
//! layered network; allocate per-gate accuracy from the telescoping error
//! bound; count exact linear regions of univariate networks.
//!
//! Exact gadgets: NOT(x) = 1 − x, AND(x,y) = relu(x+y−1),
//! OR(x,y) = x + y − relu(x+y−1), XOR(x,y) = x + y − 2·relu(x+y−1). All are
//! exact on Boolean vertices. Robust mode prepends a hardening unit
//! H_δ(t) = clamp₀¹((t−δ)/(1−2δ)), built from two relu units, to every
//! gadget input, which snaps δ-perturbed bits back to exact vertices.
//! Wires crossing layers ride along as identity-activation units; adjacent
//! affine layers are fused afterwards, so the layer count stays at circuit
//! depth plus a constant.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

/// One unit: a sparse affine form followed by its activation.
#[derive(Clone, Debug, PartialEq)]
pub struct Unit {
    /// (index into the previous layer's output, coefficient) pairs.
    pub terms: Vec<(usize, f64)>,
    pub bias: f64,
    pub act: Activation,
}

impl Unit {
    fn id(index: usize) -> Unit {
        Unit {
            terms: vec![(index, 1.0)],
            bias: 0.0,
            act: Activation::Identity,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub in_width: usize,
    pub units: Vec<Unit>,
}

impl Layer {
    /// Operator ∞-norm of the affine part (activations are 1-Lipschitz),
    /// an upper bound on the layer's Lipschitz constant.
    pub fn inf_norm(&self) -> f64 {
        self.units
            .iter()
            .map(|u| u.terms.iter().map(|(_, w)| w.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

/// A strictly layered network of affine + {relu, identity} units.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    pub input_width: usize,
    pub layers: Vec<Layer>,
}

#[derive(Debug, Error)]
pub enum NeuralizeError {
    #[error("expected input width {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("hardening needs delta < 1/2, got {delta}")]
    BadDelta { delta: f64 },
    #[error("no per-gate accuracy above machine epsilon satisfies L·K^(L−1)·eps <= {eps_total} at L={l}, K={k}")]
    BudgetInfeasible { l: usize, k: f64, eps_total: f64 },
    #[error("depth {depth} outside the supported range 1..=20")]
    DepthOutOfRange { depth: usize },
    #[error("region counting needs a univariate network, got input width {width}")]
    NotUnivariate { width: usize },
    #[error("invalid network: {0}")]
    Invalid(String),
}

impl ReluNetwork {
    pub fn output_width(&self) -> usize {
        self.layers
            .last()
            .map_or(self.input_width, |l| l.units.len())
    }

    /// Standard forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NeuralizeError> {
        if x.len() != self.input_width {
            return Err(NeuralizeError::DimensionMismatch {
                expected: self.input_width,
                got: x.len(),
            });
        }
        let mut v = x.to_vec();
        for layer in &self.layers {
            let mut next = Vec::with_capacity(layer.units.len());
            for unit in &layer.units {
                let mut acc = unit.bias;
                for &(j, w) in &unit.terms {
                    acc += w * v[j];
                }
                next.push(match unit.act {
                    Activation::Relu => acc.max(0.0),
                    Activation::Identity => acc,
                });
            }
            v = next;
        }
        Ok(v)
    }

    /// Per-layer ∞-norm bounds; their product bounds the network Lipschitz
    /// constant.
    pub fn layer_norms(&self) -> Vec<f64> {
        self.layers.iter().map(Layer::inf_norm).collect()
    }

    /// Fuse every non-final all-identity layer into its successor. The
    /// composed map is unchanged (affine ∘ affine is affine).
    pub fn fuse_affine(&mut self) {
        let mut i = 0;
        while i + 1 < self.layers.len() {
            let all_identity = self.layers[i]
                .units
                .iter()
                .all(|u| u.act == Activation::Identity);
            if !all_identity {
                i += 1;
                continue;
            }
            let lower = self.layers.remove(i);
            let upper = &mut self.layers[i];
            for unit in &mut upper.units {
                let mut terms: BTreeMap<usize, f64> = BTreeMap::new();
                let mut bias = unit.bias;
                for &(j, w) in &unit.terms {
                    let src = &lower.units[j];
                    bias += w * src.bias;
                    for &(jj, ww) in &src.terms {
                        *terms.entry(jj).or_insert(0.0) += w * ww;
                    }
                }
                unit.terms = terms.into_iter().collect();
                unit.bias = bias;
            }
            upper.in_width = lower.in_width;
        }
    }

    /// Compact on purpose: dense row-major weight blocks pretty-print into
    /// one line per float.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&NetworkFile::from(self)).expect("network serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<ReluNetwork, NeuralizeError> {
        let file: NetworkFile = serde_json::from_str(s)
            .map_err(|e| NeuralizeError::Invalid(format!("bad network JSON: {e}")))?;
        file.try_into()
    }
}

/// Standalone forward pass, mirroring the other per-structure operations.
pub fn net_evaluate(net: &ReluNetwork, x: &[f64]) -> Result<Vec<f64>, NeuralizeError> {
    net.forward(x)
}

/// On-disk network form: dense row-major weights per layer.
#[derive(Serialize, Deserialize)]
struct LayerFile {
    rows: usize,
    cols: usize,
    /// Row-major `rows × cols` weight matrix.
    weights: Vec<f64>,
    bias: Vec<f64>,
    mask: Vec<Activation>,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    input_width: usize,
    layers: Vec<LayerFile>,
}

impl From<&ReluNetwork> for NetworkFile {
    fn from(net: &ReluNetwork) -> NetworkFile {
        let layers = net
            .layers
            .iter()
            .map(|layer| {
                let rows = layer.units.len();
                let cols = layer.in_width;
                let mut weights = vec![0.0; rows * cols];
                let mut bias = Vec::with_capacity(rows);
                let mut mask = Vec::with_capacity(rows);
                for (r, unit) in layer.units.iter().enumerate() {
                    for &(j, w) in &unit.terms {
                        weights[r * cols + j] = w;
                    }
                    bias.push(unit.bias);
                    mask.push(unit.act);
                }
                LayerFile {
                    rows,
                    cols,
                    weights,
                    bias,
                    mask,
                }
            })
            .collect();
        NetworkFile {
            input_width: net.input_width,
            layers,
        }
    }
}

impl TryFrom<NetworkFile> for ReluNetwork {
    type Error = NeuralizeError;

    fn try_from(file: NetworkFile) -> Result<ReluNetwork, NeuralizeError> {
        let mut layers = Vec::with_capacity(file.layers.len());
        let mut width = file.input_width;
        for (i, lf) in file.layers.into_iter().enumerate() {
            if lf.cols != width {
                return Err(NeuralizeError::Invalid(format!(
                    "layer {i} expects {} inputs, previous width is {width}",
                    lf.cols
                )));
            }
            if lf.weights.len() != lf.rows * lf.cols
                || lf.bias.len() != lf.rows
                || lf.mask.len() != lf.rows
            {
                return Err(NeuralizeError::Invalid(format!(
                    "layer {i} has inconsistent shapes"
                )));
            }
            let units = (0..lf.rows)
                .map(|r| Unit {
                    terms: (0..lf.cols)
                        .filter_map(|c| {
                            let w = lf.weights[r * lf.cols + c];
                            (w != 0.0).then_some((c, w))
                        })
                        .collect(),
                    bias: lf.bias[r],
                    act: lf.mask[r],
                })
                .collect();
            layers.push(Layer {
                in_width: lf.cols,
                units,
            });
            width = lf.rows;
        }
        Ok(ReluNetwork {
            input_width: file.input_width,
            layers,
        })
    }
}

/// Gadget construction mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GadgetMode {
    /// Exact on Boolean vertices.
    Exact,
    /// Hardened against input perturbations up to `delta`; the residual
    /// error budget per gate is `eps_gate`.
    Robust { delta: f64, eps_gate: f64 },
}

/// Per-gate accuracy budget from the telescoping composition bound
/// L·K^(L−1)·eps_gate ≤ eps_total.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorBudget {
    pub l: usize,
    pub k: f64,
    pub eps_gate: f64,
    pub eps_total: f64,
}

impl ErrorBudget {
    /// Split `eps_total` across `l` layers of Lipschitz bound `k`, with
    /// equality in the telescoping inequality.
    pub fn allocate(l: usize, k: f64, eps_total: f64) -> Result<ErrorBudget, NeuralizeError> {
        let eps_gate = allocate_budget(l, k, eps_total)?;
        Ok(ErrorBudget {
            l,
            k,
            eps_gate,
            eps_total,
        })
    }

    pub fn holds(&self) -> bool {
        self.l >= 1
            && self.k >= 1.0
            && (self.l as f64) * self.k.powi(self.l as i32 - 1) * self.eps_gate
                <= self.eps_total * (1.0 + 1e-9)
    }
}

/// eps_gate = eps_total / (L·K^(L−1)).
pub fn allocate_budget(l: usize, k: f64, eps_total: f64) -> Result<f64, NeuralizeError> {
    if l < 1 || k < 1.0 || eps_total <= 0.0 {
        return Err(NeuralizeError::BudgetInfeasible { l, k, eps_total });
    }
    let eps_gate = eps_total / (l as f64 * k.powi(l as i32 - 1));
    if !eps_gate.is_finite() || eps_gate <= f64::EPSILON {
        return Err(NeuralizeError::BudgetInfeasible { l, k, eps_total });
    }
    Ok(eps_gate)
}

/// A constant-size subnetwork reproducing one gate.
#[derive(Clone, Debug)]
pub struct GateGadget {
    pub kind: GateKind,
    pub mode: GadgetMode,
    pub net: ReluNetwork,
}

impl GateGadget {
    /// Exhaustively check the gadget against the gate truth table on all
    /// Boolean vertices.
    pub fn matches_truth_table(&self) -> bool {
        let r = self.net.input_width;
        (0..(1u32 << r)).all(|idx| {
            let input: Vec<f64> = (0..r).map(|i| f64::from((idx >> i) & 1)).collect();
            let bits: Vec<bool> = input.iter().map(|&v| v == 1.0).collect();
            let out = self.net.forward(&input).unwrap()[0];
            (out - f64::from(truth(self.kind, &bits))).abs() < 1e-12
        })
    }
}

fn truth(kind: GateKind, input: &[bool]) -> bool {
    match kind {
        GateKind::Input => input[0],
        GateKind::Const0 => false,
        GateKind::Const1 => true,
        GateKind::Not => !input[0],
        GateKind::And2 => input[0] & input[1],
        GateKind::Or2 => input[0] | input[1],
        GateKind::Xor2 => input[0] ^ input[1],
    }
}

/// Build the gadget for a single gate kind.
pub fn gate_gadget(kind: GateKind, mode: GadgetMode) -> Result<GateGadget, NeuralizeError> {
    let mut b = crate::circuit::CircuitBuilder::new("gadget");
    let out = match kind {
        GateKind::Input => b.input(),
        GateKind::Const0 => b.const0(),
        GateKind::Const1 => b.const1(),
        GateKind::Not => {
            let x = b.input();
            b.not(x)
        }
        GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => {
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
    let circuit = b.finish();
    let budget = ErrorBudget {
        l: 1,
        k: 1.0,
        eps_gate: f64::EPSILON,
        eps_total: 1.0,
    };
    let net = neuralize_circuit(&circuit, mode, &budget)?;
    Ok(GateGadget { kind, mode, net })
}

/// Wire per-gate gadgets along the circuit DAG into a layered network.
/// On Boolean inputs the thresholded output equals circuit evaluation; in
/// robust mode the same holds on δ-perturbed Boolean inputs.
pub fn neuralize_circuit(
    c: &Circuit,
    mode: GadgetMode,
    budget: &ErrorBudget,
) -> Result<ReluNetwork, NeuralizeError> {
    if let GadgetMode::Robust { delta, .. } = mode {
        if !(0.0..0.5).contains(&delta) {
            return Err(NeuralizeError::BadDelta { delta });
        }
    }
    if !budget.holds() {
        return Err(NeuralizeError::BudgetInfeasible {
            l: budget.l,
            k: budget.k,
            eps_total: budget.eps_total,
        });
    }

    let depths = c.node_depths();
    // Backward reachability from the outputs.
    let mut needed = vec![false; c.nodes.len()];
    let mut stack: Vec<NodeId> = c.outputs.clone();
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut needed[id as usize], true) {
            continue;
        }
        stack.extend(c.nodes[id as usize].fan_in.iter().copied());
    }
    let max_depth = c
        .nodes
        .iter()
        .enumerate()
        .filter(|(id, _)| needed[*id])
        .map(|(id, _)| depths[id])
        .max()
        .unwrap_or(0);
    // Final stage index each node is still read at (outputs live to the end).
    let mut last_use = vec![0usize; c.nodes.len()];
    for (id, gate) in c.nodes.iter().enumerate() {
        if !needed[id] {
            continue;
        }
        for &f in &gate.fan_in {
            last_use[f as usize] = last_use[f as usize].max(depths[id]);
        }
    }
    for &o in &c.outputs {
        last_use[o as usize] = max_depth + 1;
    }

    const NONE: usize = usize::MAX;
    let mut pos = vec![NONE; c.nodes.len()];
    for (i, &inp) in c.inputs.iter().enumerate() {
        pos[inp as usize] = i;
    }
    let mut width = c.inputs.len();
    let mut layers: Vec<Layer> = Vec::new();

    // Value of node `f` as seen by the next affine form: a term plus a bias
    // contribution (constants fold into the bias).
    let source = |pos: &[usize], f: NodeId, kind: GateKind| -> (Option<usize>, f64) {
        match kind {
            GateKind::Const0 => (None, 0.0),
            GateKind::Const1 => (None, 1.0),
            _ => {
                debug_assert_ne!(pos[f as usize], NONE, "node {f} not live");
                (Some(pos[f as usize]), 0.0)
            }
        }
    };

    for stage in 1..=max_depth {
        let gates: Vec<NodeId> = (0..c.nodes.len() as NodeId)
            .filter(|&id| needed[id as usize] && depths[id as usize] == stage)
            .collect();
        let carried: Vec<NodeId> = (0..c.nodes.len() as NodeId)
            .filter(|&id| {
                needed[id as usize]
                    && pos[id as usize] != NONE
                    && depths[id as usize] < stage
                    && last_use[id as usize] > stage
            })
            .collect();

        // Optional hardening sublayer: two relu units per distinct non-const
        // fan-in node consumed at this stage.
        let mut hard: BTreeMap<NodeId, (usize, usize)> = BTreeMap::new();
        if let GadgetMode::Robust { delta, .. } = mode {
            let in_width = width;
            let mut units = Vec::new();
            for &g in &gates {
                for &f in &c.nodes[g as usize].fan_in {
                    let fk = c.nodes[f as usize].kind;
                    if matches!(fk, GateKind::Const0 | GateKind::Const1) || hard.contains_key(&f) {
                        continue;
                    }
                    let p = pos[f as usize];
                    units.push(Unit {
                        terms: vec![(p, 1.0)],
                        bias: -delta,
                        act: Activation::Relu,
                    });
                    units.push(Unit {
                        terms: vec![(p, 1.0)],
                        bias: -(1.0 - delta),
                        act: Activation::Relu,
                    });
                    hard.insert(f, (units.len() - 2, units.len() - 1));
                }
            }
            let mut carry_pos = Vec::new();
            for &n in &carried {
                carry_pos.push((n, units.len()));
                units.push(Unit::id(pos[n as usize]));
            }
            width = units.len();
            layers.push(Layer { in_width, units });
            for (n, p) in carry_pos {
                pos[n as usize] = p;
            }
        }

        // Fan-in term under the current mode: hardened inputs are read as
        // (r1 − r2)/(1 − 2δ).
        let fan_terms = |pos: &[usize], f: NodeId| -> (Vec<(usize, f64)>, f64) {
            let kind = c.nodes[f as usize].kind;
            if let GadgetMode::Robust { delta, .. } = mode {
                if let Some(&(p1, p2)) = hard.get(&f) {
                    let scale = 1.0 / (1.0 - 2.0 * delta);
                    return (vec![(p1, scale), (p2, -scale)], 0.0);
                }
            }
            match source(pos, f, kind) {
                (Some(p), _) => (vec![(p, 1.0)], 0.0),
                (None, bias) => (vec![], bias),
            }
        };

        // Sublayer A: gadget hidden units plus identity carries.
        let mut units_a = Vec::new();
        let mut hidden: BTreeMap<NodeId, (usize, Option<usize>)> = BTreeMap::new();
        for &g in &gates {
            let gate = &c.nodes[g as usize];
            match gate.kind {
                GateKind::Not => {
                    let (terms, bias) = fan_terms(&pos, gate.fan_in[0]);
                    units_a.push(Unit {
                        terms,
                        bias,
                        act: Activation::Identity,
                    });
                    hidden.insert(g, (units_a.len() - 1, None));
                }
                GateKind::And2 | GateKind::Or2 | GateKind::Xor2 => {
                    let (tx, bx) = fan_terms(&pos, gate.fan_in[0]);
                    let (ty, by) = fan_terms(&pos, gate.fan_in[1]);
                    let mut sum_terms = tx;
                    sum_terms.extend(ty);
                    let sum_bias = bx + by;
                    let a = Unit {
                        terms: sum_terms.clone(),
                        bias: sum_bias - 1.0,
                        act: Activation::Relu,
                    };
                    if gate.kind == GateKind::And2 {
                        units_a.push(a);
                        hidden.insert(g, (units_a.len() - 1, None));
                    } else {
                        units_a.push(Unit {
                            terms: sum_terms,
                            bias: sum_bias,
                            act: Activation::Identity,
                        });
                        units_a.push(a);
                        hidden.insert(g, (units_a.len() - 1, Some(units_a.len() - 2)));
                    }
                }
                GateKind::Input | GateKind::Const0 | GateKind::Const1 => {
                    unreachable!("sources have depth 0")
                }
            }
        }
        let mut carry_a = Vec::new();
        for &n in &carried {
            carry_a.push((n, units_a.len()));
            units_a.push(Unit::id(pos[n as usize]));
        }
        layers.push(Layer {
            in_width: width,
            units: units_a,
        });
        width = layers.last().unwrap().units.len();

        // Sublayer B: gate values plus carries; new positions take effect.
        let mut units_b = Vec::new();
        let mut pos_next = pos.clone();
        for &g in &gates {
            let gate = &c.nodes[g as usize];
            let (a_idx, s_idx) = hidden[&g];
            let unit = match gate.kind {
                GateKind::Not => Unit {
                    terms: vec![(a_idx, -1.0)],
                    bias: 1.0,
                    act: Activation::Identity,
                },
                GateKind::And2 => Unit::id(a_idx),
                GateKind::Or2 => Unit {
                    terms: vec![(s_idx.unwrap(), 1.0), (a_idx, -1.0)],
                    bias: 0.0,
                    act: Activation::Identity,
                },
                GateKind::Xor2 => Unit {
                    terms: vec![(s_idx.unwrap(), 1.0), (a_idx, -2.0)],
                    bias: 0.0,
                    act: Activation::Identity,
                },
                _ => unreachable!(),
            };
            pos_next[g as usize] = units_b.len();
            units_b.push(unit);
        }
        for (n, p) in carry_a {
            pos_next[n as usize] = units_b.len();
            units_b.push(Unit::id(p));
        }
        layers.push(Layer {
            in_width: width,
            units: units_b,
        });
        width = layers.last().unwrap().units.len();
        pos = pos_next;
    }

    // Output selection.
    let mut units = Vec::with_capacity(c.outputs.len());
    for &o in &c.outputs {
        let unit = match source(&pos, o, c.nodes[o as usize].kind) {
            (Some(p), _) => Unit::id(p),
            (None, bias) => Unit {
                terms: vec![],
                bias,
                act: Activation::Identity,
            },
        };
        units.push(unit);
    }
    layers.push(Layer {
        in_width: width,
        units,
    });

    let mut net = ReluNetwork {
        input_width: c.inputs.len(),
        layers,
    };
    net.fuse_affine();
    Ok(net)
}

/// Outcome of the depth-efficiency demo.
#[derive(Clone, Debug)]
pub struct TelgarskyDemo {
    pub network: ReluNetwork,
    /// Exact number of maximal linear pieces of the network on [0, 1].
    pub region_count: u64,
    /// Any single-hidden-layer network matching the piece count needs at
    /// least this many relu units (a width-W layer has ≤ W + 1 pieces).
    pub min_shallow_units: u64,
}

/// Maximal linear pieces a one-hidden-layer network of `units` relu units
/// can produce on an interval.
pub fn shallow_piece_ceiling(units: u64) -> u64 {
    units + 1
}

/// Build the depth-`l` composition of the tent map
/// t(x) = 2·relu(x) − 4·relu(x − 1/2) and count its linear pieces exactly.
pub fn telgarsky_demo(l: usize) -> Result<TelgarskyDemo, NeuralizeError> {
    if !(1..=20).contains(&l) {
        return Err(NeuralizeError::DepthOutOfRange { depth: l });
    }
    let mut layers = Vec::with_capacity(l + 1);
    layers.push(Layer {
        in_width: 1,
        units: vec![
            Unit {
                terms: vec![(0, 1.0)],
                bias: 0.0,
                act: Activation::Relu,
            },
            Unit {
                terms: vec![(0, 1.0)],
                bias: -0.5,
                act: Activation::Relu,
            },
        ],
    });
    for _ in 1..l {
        layers.push(Layer {
            in_width: 2,
            units: vec![
                Unit {
                    terms: vec![(0, 2.0), (1, -4.0)],
                    bias: 0.0,
                    act: Activation::Relu,
                },
                Unit {
                    terms: vec![(0, 2.0), (1, -4.0)],
                    bias: -0.5,
                    act: Activation::Relu,
                },
            ],
        });
    }
    layers.push(Layer {
        in_width: 2,
        units: vec![Unit {
            terms: vec![(0, 2.0), (1, -4.0)],
            bias: 0.0,
            act: Activation::Identity,
        }],
    });
    let network = ReluNetwork {
        input_width: 1,
        layers,
    };
    let region_count = count_linear_regions_1d(&network)?;
    Ok(TelgarskyDemo {
        network,
        region_count,
        min_shallow_units: region_count.saturating_sub(1),
    })
}

/// Exact count of maximal linear pieces of a univariate network on [0, 1],
/// by propagating breakpoints layer by layer.
pub fn count_linear_regions_1d(net: &ReluNetwork) -> Result<u64, NeuralizeError> {
    if net.input_width != 1 {
        return Err(NeuralizeError::NotUnivariate {
            width: net.input_width,
        });
    }
    // Breakpoint abscissas and the current vector value at each.
    let mut xs: Vec<f64> = vec![0.0, 1.0];
    let mut vals: Vec<Vec<f64>> = vec![vec![0.0], vec![1.0]];

    for layer in &net.layers {
        // Affine part at every breakpoint.
        let pre: Vec<Vec<f64>> = vals
            .iter()
            .map(|v| {
                layer
                    .units
                    .iter()
                    .map(|u| u.terms.iter().fold(u.bias, |acc, &(j, w)| acc + w * v[j]))
                    .collect()
            })
            .collect();
        // New breakpoints where a relu unit's preactivation crosses zero
        // strictly inside a segment.
        let mut augmented: Vec<(f64, Vec<f64>)> = Vec::with_capacity(xs.len());
        for i in 0..xs.len() {
            augmented.push((xs[i], pre[i].clone()));
            if i + 1 == xs.len() {
                break;
            }
            let mut crossings: Vec<(f64, usize)> = Vec::new();
            for (u, unit) in layer.units.iter().enumerate() {
                if unit.act != Activation::Relu {
                    continue;
                }
                let (a, b) = (pre[i][u], pre[i + 1][u]);
                if (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0) {
                    let t = a / (a - b);
                    crossings.push((xs[i] + t * (xs[i + 1] - xs[i]), u));
                }
            }
            crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
            for (x, u) in crossings {
                let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
                let mut v: Vec<f64> = pre[i]
                    .iter()
                    .zip(&pre[i + 1])
                    .map(|(&a, &b)| a + t * (b - a))
                    .collect();
                v[u] = 0.0;
                match augmented.last_mut() {
                    Some(last) if (last.0 - x).abs() <= 1e-12 => {
                        // Coincident crossing: merge, keeping the exact zero.
                        for (dst, src) in last.1.iter_mut().zip(&v) {
                            if src.abs() < dst.abs() {
                                *dst = *src;
                            }
                        }
                    }
                    _ => augmented.push((x, v)),
                }
            }
        }
        xs = augmented.iter().map(|(x, _)| *x).collect();
        vals = augmented
            .into_iter()
            .map(|(_, mut v)| {
                for (u, unit) in layer.units.iter().enumerate() {
                    if unit.act == Activation::Relu {
                        v[u] = v[u].max(0.0);
                    }
                }
                v
            })
            .collect();
    }

    // Merge segments whose slope vectors agree.
    let mut count = 0u64;
    let mut prev_slope: Option<Vec<f64>> = None;
    for i in 0..xs.len() - 1 {
        let dx = xs[i + 1] - xs[i];
        if dx <= 0.0 {
            continue;
        }
        let slope: Vec<f64> = vals[i + 1]
            .iter()
            .zip(&vals[i])
            .map(|(b, a)| (b - a) / dx)
            .collect();
        let same = prev_slope.as_ref().is_some_and(|p| {
            p.iter()
                .zip(&slope)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0))
        });
        if !same {
            count += 1;
        }
        prev_slope = Some(slope);
    }
    Ok(count.max(1))
}

/// Measured per-stage errors and Lipschitz bounds of a perturbed stack
/// against its exact counterpart, checked against the telescoping bound.
#[derive(Clone, Debug)]
pub struct StackBudgetReport {
    pub stages: usize,
    /// max(1, largest per-stage Lipschitz bound).
    pub k: f64,
    /// Largest measured per-stage sup error.
    pub eps_gate: f64,
    /// L·K^(L−1)·eps_gate.
    pub bound: f64,
    pub max_err: f64,
    pub pass: bool,
}

/// Compose `exact` and `approx` stage-by-stage over `points`, measuring the
/// telescoping bound's ingredients and verifying it end to end.
pub fn verify_stack_budget(
    exact: &[ReluNetwork],
    approx: &[ReluNetwork],
    points: &[Vec<f64>],
) -> Result<StackBudgetReport, NeuralizeError> {
    if exact.len() != approx.len() || exact.is_empty() {
        return Err(NeuralizeError::Invalid(
            "stage lists must match and be nonempty".into(),
        ));
    }
    let stages = exact.len();
    let mut k: f64 = 1.0;
    for stage in exact {
        k = k.max(stage.layer_norms().iter().product());
    }

    let mut eps_gate: f64 = 0.0;
    let mut max_err: f64 = 0.0;
    for x in points {
        let mut exact_v = x.clone();
        let mut approx_v = x.clone();
        for i in 0..stages {
            // Per-stage deviation on the exactly-propagated point.
            let stage_exact = exact[i].forward(&exact_v)?;
            let stage_approx_here = approx[i].forward(&exact_v)?;
            for (a, b) in stage_exact.iter().zip(&stage_approx_here) {
                eps_gate = eps_gate.max((a - b).abs());
            }
            approx_v = approx[i].forward(&approx_v)?;
            exact_v = stage_exact;
        }
        for (a, b) in exact_v.iter().zip(&approx_v) {
            max_err = max_err.max((a - b).abs());
        }
    }
    let bound = stages as f64 * k.powi(stages as i32 - 1) * eps_gate;
    Ok(StackBudgetReport {
        stages,
        k,
        eps_gate,
        bound,
        max_err,
        pass: max_err <= bound * (1.0 + 1e-9) + 1e-15,
    })
}
