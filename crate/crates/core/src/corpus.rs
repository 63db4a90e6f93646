//! Shared corpus of small machines, circuits, and bit programs used by the
//! CLI demos and the test suites.

use crate::circuit::{Circuit, CircuitBuilder, NodeId};
use crate::gadgets::{self, Sig};
use crate::precision::{BitProgram, Instr};
use crate::tm::{MachineFile, Move, TuringMachine};

/// Machine that halts immediately; with `output_cells = n` it computes the
/// identity on `n` bits.
pub fn identity_machine(n: usize) -> TuringMachine {
    TuringMachine::from_file(MachineFile {
        name: format!("identity{n}"),
        states: vec!["halt".into()],
        start: "halt".into(),
        halt_states: vec!["halt".into()],
        tape_alphabet: vec!["0".into(), "1".into(), "_".into()],
        transitions: vec![],
        output_cells: n,
        time_poly: Some(vec![1]),
    })
    .expect("identity machine is well-formed")
}

/// Three working states plus halt: sweep right to the end of the input,
/// then sweep left erasing cells while tracking parity; the wall bounce at
/// cell 0 turns the leftover blank into the answer cell. Runs in 2n + 2
/// steps on n input bits.
pub fn parity_machine() -> TuringMachine {
    let t = |a: &str, b: &str, c: &str, d: &str, mv: Move| {
        (
            a.to_string(),
            b.to_string(),
            c.to_string(),
            d.to_string(),
            mv,
        )
    };
    TuringMachine::from_file(MachineFile {
        name: "parity".into(),
        states: vec!["right".into(), "even".into(), "odd".into(), "halt".into()],
        start: "right".into(),
        halt_states: vec!["halt".into()],
        tape_alphabet: vec!["0".into(), "1".into(), "_".into()],
        transitions: vec![
            t("right", "0", "right", "0", Move::R),
            t("right", "1", "right", "1", Move::R),
            t("right", "_", "even", "_", Move::L),
            t("even", "0", "even", "_", Move::L),
            t("even", "1", "odd", "_", Move::L),
            t("even", "_", "halt", "0", Move::S),
            t("odd", "0", "odd", "_", Move::L),
            t("odd", "1", "even", "_", Move::L),
            t("odd", "_", "halt", "1", Move::S),
        ],
        output_cells: 1,
        time_poly: Some(vec![2, 2]),
    })
    .expect("parity machine is well-formed")
}

/// Machine that ignores its input and writes a single 1 at cell 0.
pub fn constant_machine() -> TuringMachine {
    let t = |a: &str, b: &str, c: &str, d: &str, mv: Move| {
        (
            a.to_string(),
            b.to_string(),
            c.to_string(),
            d.to_string(),
            mv,
        )
    };
    TuringMachine::from_file(MachineFile {
        name: "const1".into(),
        states: vec!["w".into(), "halt".into()],
        start: "w".into(),
        halt_states: vec!["halt".into()],
        tape_alphabet: vec!["0".into(), "1".into(), "_".into()],
        transitions: vec![
            t("w", "0", "halt", "1", Move::S),
            t("w", "1", "halt", "1", Move::S),
            t("w", "_", "halt", "1", Move::S),
        ],
        output_cells: 1,
        time_poly: Some(vec![1]),
    })
    .expect("constant machine is well-formed")
}

/// Build a machine computing an arbitrary `f: {0,1}^n -> {0,1}^m` by reading
/// the input into the finite control (a prefix tree of states), walking back
/// to cell 0, and writing the answer MSB first. Runs in 2n − 1 + m steps.
///
/// Input and output values are indexed MSB first, matching
/// [`crate::bits::index_to_bits`].
pub fn table_machine(n: usize, m: usize, name: &str, f: impl Fn(u64) -> u64) -> TuringMachine {
    assert!(n >= 1 && m >= 1 && n <= 16);
    let mut states: Vec<String> = Vec::new();
    let mut transitions: Vec<(String, String, String, String, Move)> = Vec::new();
    let rd = |i: usize, p: u64| format!("rd{i}_{p}");
    let bk = |y: u64, c: usize| format!("bk{y}_{c}");
    let wr = |y: u64, j: usize| format!("wr{y}_{j}");

    // Distinct output values actually reachable.
    let mut outputs: Vec<u64> = (0..(1u64 << n)).map(&f).collect();
    outputs.sort_unstable();
    outputs.dedup();

    for i in 0..n {
        for p in 0..(1u64 << i) {
            states.push(rd(i, p));
        }
    }
    for &y in &outputs {
        for c in 0..n.saturating_sub(1) {
            states.push(bk(y, c));
        }
        for j in 0..m {
            states.push(wr(y, j));
        }
    }
    states.push("halt".into());

    let sym = |b: u64| if b == 1 { "1" } else { "0" }.to_string();
    // Read phase: at cell i with prefix p, consume the bit and advance.
    for i in 0..n {
        for p in 0..(1u64 << i) {
            for b in 0..2u64 {
                let p2 = (p << 1) | b;
                let (next, mv) = if i + 1 < n {
                    (rd(i + 1, p2), Move::R)
                } else {
                    let y = f(p2);
                    if n >= 2 {
                        (bk(y, n - 2), Move::L)
                    } else {
                        (wr(y, 0), Move::S)
                    }
                };
                transitions.push((rd(i, p), sym(b), next, sym(b), mv));
            }
            // Blank under a read state only occurs on malformed tapes; bail out.
            transitions.push((rd(i, p), "_".into(), "halt".into(), "_".into(), Move::S));
        }
    }
    // Walk back to cell 0, then write the m output bits MSB first.
    for &y in &outputs {
        for c in 0..n.saturating_sub(1) {
            let (next, mv) = if c > 0 {
                (bk(y, c - 1), Move::L)
            } else {
                (wr(y, 0), Move::S)
            };
            for g in ["0", "1", "_"] {
                transitions.push((bk(y, c), g.into(), next.clone(), g.into(), mv));
            }
        }
        for j in 0..m {
            let bit = sym((y >> (m - 1 - j)) & 1);
            let (next, mv) = if j + 1 < m {
                (wr(y, j + 1), Move::R)
            } else {
                ("halt".into(), Move::S)
            };
            for g in ["0", "1", "_"] {
                transitions.push((wr(y, j), g.into(), next.clone(), bit.clone(), mv));
            }
        }
    }

    TuringMachine::from_file(MachineFile {
        name: name.into(),
        states,
        start: rd(0, 0),
        halt_states: vec!["halt".into()],
        tape_alphabet: vec!["0".into(), "1".into(), "_".into()],
        transitions,
        output_cells: m,
        time_poly: Some(vec![(2 * n + m) as u64]),
    })
    .expect("table machine is well-formed")
}

/// 2-bit adder as a machine: cells 0..=1 hold `a`, cells 2..=3 hold `b`
/// (both MSB first); the 3-bit sum replaces cells 0..=2.
pub fn adder_machine() -> TuringMachine {
    table_machine(4, 3, "add2", |x| {
        let a = x >> 2;
        let b = x & 0b11;
        a + b
    })
}

/// Ripple-carry adder over two `bits`-wide operands, MSB-first interfaces:
/// inputs `a` then `b`, output is the (bits + 1)-wide sum.
pub fn ripple_adder_circuit(bits: usize) -> Circuit {
    let mut b = CircuitBuilder::new(&format!("adder{bits}"));
    let a_in: Vec<NodeId> = (0..bits).map(|_| b.input()).collect();
    let b_in: Vec<NodeId> = (0..bits).map(|_| b.input()).collect();
    let mut carry = gadgets::ZERO;
    let mut sums = Vec::with_capacity(bits);
    for i in (0..bits).rev() {
        let (s, c) = gadgets::full_adder(&mut b, Sig::Node(a_in[i]), Sig::Node(b_in[i]), carry);
        sums.push(s);
        carry = c;
    }
    let mut out_msb_first = vec![carry];
    out_msb_first.extend(sums.into_iter().rev());
    for s in out_msb_first {
        let id = gadgets::materialize(&mut b, s);
        b.mark_output(id);
    }
    b.finish()
}

/// Balanced XOR tree computing the parity of `n` inputs.
pub fn parity_tree_circuit(n: usize) -> Circuit {
    let mut b = CircuitBuilder::new(&format!("parity{n}"));
    let xs: Vec<NodeId> = (0..n).map(|_| b.input()).collect();
    let root = b.xor_tree(&xs);
    b.mark_output(root);
    b.finish()
}

/// Program computing the identity on one coordinate.
pub fn identity_program() -> BitProgram {
    BitProgram {
        name: "identity".into(),
        dim: 1,
        instructions: vec![Instr::Load { coord: 0 }, Instr::Output { a: 0 }],
    }
}

/// Program computing x + x.
pub fn doubling_program() -> BitProgram {
    BitProgram {
        name: "double".into(),
        dim: 1,
        instructions: vec![
            Instr::Load { coord: 0 },
            Instr::Add { a: 0, b: 0 },
            Instr::Output { a: 1 },
        ],
    }
}

/// Program computing x².
pub fn squaring_program() -> BitProgram {
    BitProgram {
        name: "square".into(),
        dim: 1,
        instructions: vec![
            Instr::Load { coord: 0 },
            Instr::Mul { a: 0, b: 0 },
            Instr::Output { a: 1 },
        ],
    }
}

/// Two-coordinate adder program, used by the size/depth growth report.
pub fn ripple_program_for_report() -> BitProgram {
    BitProgram {
        name: "adder".into(),
        dim: 2,
        instructions: vec![
            Instr::Load { coord: 0 },
            Instr::Load { coord: 1 },
            Instr::Add { a: 0, b: 1 },
            Instr::Output { a: 2 },
        ],
    }
}

/// Program computing the constant 0.
pub fn zero_program() -> BitProgram {
    BitProgram {
        name: "zero".into(),
        dim: 1,
        instructions: vec![
            Instr::Const {
                mantissa: 0,
                frac_bits: 1,
            },
            Instr::Output { a: 0 },
        ],
    }
}
