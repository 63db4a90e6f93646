//! Gate-level building blocks: constant-folding signals, ripple and
//! carry-save adders, and constant comparators. Used by the threshold-gate
//! lowering, the bit-program compiler, and the tableau construction.

use crate::circuit::{CircuitBuilder, NodeId};

/// A wire that is either a known constant or a circuit node. Gate helpers
/// fold constants so that callers never emit dead logic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sig {
    Const(bool),
    Node(NodeId),
}

pub const ZERO: Sig = Sig::Const(false);
pub const ONE: Sig = Sig::Const(true);

impl Sig {
    pub fn as_const(self) -> Option<bool> {
        match self {
            Sig::Const(v) => Some(v),
            Sig::Node(_) => None,
        }
    }
}

pub fn materialize(b: &mut CircuitBuilder, s: Sig) -> NodeId {
    match s {
        Sig::Node(id) => id,
        Sig::Const(false) => b.const0(),
        Sig::Const(true) => b.const1(),
    }
}

pub fn not(b: &mut CircuitBuilder, x: Sig) -> Sig {
    match x {
        Sig::Const(v) => Sig::Const(!v),
        Sig::Node(id) => Sig::Node(b.not(id)),
    }
}

pub fn and(b: &mut CircuitBuilder, x: Sig, y: Sig) -> Sig {
    match (x, y) {
        (Sig::Const(false), _) | (_, Sig::Const(false)) => ZERO,
        (Sig::Const(true), other) | (other, Sig::Const(true)) => other,
        (Sig::Node(a), Sig::Node(c)) => Sig::Node(b.and2(a, c)),
    }
}

pub fn or(b: &mut CircuitBuilder, x: Sig, y: Sig) -> Sig {
    match (x, y) {
        (Sig::Const(true), _) | (_, Sig::Const(true)) => ONE,
        (Sig::Const(false), other) | (other, Sig::Const(false)) => other,
        (Sig::Node(a), Sig::Node(c)) => Sig::Node(b.or2(a, c)),
    }
}

pub fn xor(b: &mut CircuitBuilder, x: Sig, y: Sig) -> Sig {
    match (x, y) {
        (Sig::Const(false), other) | (other, Sig::Const(false)) => other,
        (Sig::Const(true), other) | (other, Sig::Const(true)) => not(b, other),
        (Sig::Node(a), Sig::Node(c)) => Sig::Node(b.xor2(a, c)),
    }
}

/// Balanced OR over a slice of signals; constants fold away.
pub fn or_tree(b: &mut CircuitBuilder, sigs: &[Sig]) -> Sig {
    if sigs.contains(&ONE) {
        return ONE;
    }
    let nodes: Vec<NodeId> = sigs
        .iter()
        .filter_map(|s| match s {
            Sig::Node(id) => Some(*id),
            Sig::Const(_) => None,
        })
        .collect();
    match nodes.len() {
        0 => ZERO,
        1 => Sig::Node(nodes[0]),
        _ => Sig::Node(b.or_tree(&nodes)),
    }
}

/// Balanced AND over a slice of signals; constants fold away.
pub fn and_tree(b: &mut CircuitBuilder, sigs: &[Sig]) -> Sig {
    if sigs.contains(&ZERO) {
        return ZERO;
    }
    let nodes: Vec<NodeId> = sigs
        .iter()
        .filter_map(|s| match s {
            Sig::Node(id) => Some(*id),
            Sig::Const(_) => None,
        })
        .collect();
    match nodes.len() {
        0 => ONE,
        1 => Sig::Node(nodes[0]),
        _ => Sig::Node(b.and_tree(&nodes)),
    }
}

/// sum = x ⊕ y, carry = x ∧ y.
pub fn half_adder(b: &mut CircuitBuilder, x: Sig, y: Sig) -> (Sig, Sig) {
    (xor(b, x, y), and(b, x, y))
}

/// sum = x ⊕ y ⊕ z, carry = majority(x, y, z).
pub fn full_adder(b: &mut CircuitBuilder, x: Sig, y: Sig, z: Sig) -> (Sig, Sig) {
    let t = xor(b, x, y);
    let s = xor(b, t, z);
    let c1 = and(b, x, y);
    let c2 = and(b, t, z);
    (s, or(b, c1, c2))
}

/// Sum a multiset of bits arranged by place value (`columns[j]` holds bits
/// worth 2^j). Carry-save levels compress every column to height ≤ 2, then a
/// final carry-propagate pass produces plain binary, LSB first.
pub fn column_sum(b: &mut CircuitBuilder, mut columns: Vec<Vec<Sig>>) -> Vec<Sig> {
    loop {
        let max_height = columns.iter().map(Vec::len).max().unwrap_or(0);
        if max_height <= 2 {
            break;
        }
        let mut next: Vec<Vec<Sig>> = vec![Vec::new(); columns.len() + 1];
        for (j, col) in columns.iter().enumerate() {
            let mut i = 0;
            while i + 3 <= col.len() {
                let (s, c) = full_adder(b, col[i], col[i + 1], col[i + 2]);
                push_bit(&mut next, j, s);
                push_bit(&mut next, j + 1, c);
                i += 3;
            }
            match col.len() - i {
                2 => {
                    let (s, c) = half_adder(b, col[i], col[i + 1]);
                    push_bit(&mut next, j, s);
                    push_bit(&mut next, j + 1, c);
                }
                1 => push_bit(&mut next, j, col[i]),
                _ => {}
            }
        }
        while next.last().is_some_and(Vec::is_empty) {
            next.pop();
        }
        columns = next;
    }
    // Final carry-propagate pass over columns of height ≤ 2.
    let mut out = Vec::with_capacity(columns.len() + 1);
    let mut carry = ZERO;
    for col in &columns {
        let (s, c) = match col.len() {
            0 => (carry, ZERO),
            1 => half_adder(b, col[0], carry),
            2 => full_adder(b, col[0], col[1], carry),
            _ => unreachable!("columns reduced to height <= 2"),
        };
        out.push(s);
        carry = c;
    }
    if carry != ZERO {
        out.push(carry);
    }
    out
}

fn push_bit(columns: &mut [Vec<Sig>], j: usize, s: Sig) {
    if s != ZERO {
        columns[j].push(s);
    }
}

/// 1{S ≥ theta} for a nonnegative constant theta and binary S (LSB first).
pub fn compare_ge_const(b: &mut CircuitBuilder, sum: &[Sig], theta: u64) -> Sig {
    if theta == 0 {
        return ONE;
    }
    let theta_width = (64 - theta.leading_zeros()) as usize;
    let width = sum.len().max(theta_width);
    let mut gt = ZERO;
    let mut eq = ONE;
    for j in (0..width).rev() {
        let s = sum.get(j).copied().unwrap_or(ZERO);
        if (theta >> j) & 1 == 1 {
            eq = and(b, eq, s);
        } else {
            let step = and(b, eq, s);
            gt = or(b, gt, step);
            let ns = not(b, s);
            eq = and(b, eq, ns);
        }
    }
    or(b, gt, eq)
}

/// Two's-complement interpretation helpers over LSB-first signal words.
pub mod word {
    use super::*;

    /// Sign-extend (or truncate) to `width` bits.
    pub fn sext(bits: &[Sig], width: usize) -> Vec<Sig> {
        let msb = bits.last().copied().unwrap_or(ZERO);
        (0..width)
            .map(|i| bits.get(i).copied().unwrap_or(msb))
            .collect()
    }

    /// Zero-extend (or truncate) to `width` bits.
    pub fn zext(bits: &[Sig], width: usize) -> Vec<Sig> {
        (0..width)
            .map(|i| bits.get(i).copied().unwrap_or(ZERO))
            .collect()
    }

    /// x + y mod 2^width.
    pub fn add_mod(b: &mut CircuitBuilder, x: &[Sig], y: &[Sig], width: usize) -> Vec<Sig> {
        let xs = sext(x, width);
        let ys = sext(y, width);
        let mut out = Vec::with_capacity(width);
        let mut carry = ZERO;
        for j in 0..width {
            let (s, c) = full_adder(b, xs[j], ys[j], carry);
            out.push(s);
            carry = c;
        }
        out
    }

    /// x − y mod 2^width (x + ¬y + 1).
    pub fn sub_mod(b: &mut CircuitBuilder, x: &[Sig], y: &[Sig], width: usize) -> Vec<Sig> {
        let xs = sext(x, width);
        let ys = sext(y, width);
        let mut out = Vec::with_capacity(width);
        let mut carry = ONE;
        for j in 0..width {
            let ny = not(b, ys[j]);
            let (s, c) = full_adder(b, xs[j], ny, carry);
            out.push(s);
            carry = c;
        }
        out
    }

    /// x · y mod 2^width via partial products and carry-save reduction.
    /// Sign extension to the full width makes the low bits of the product
    /// correct for two's complement.
    pub fn mul_mod(b: &mut CircuitBuilder, x: &[Sig], y: &[Sig], width: usize) -> Vec<Sig> {
        let xs = sext(x, width);
        let ys = sext(y, width);
        let mut columns: Vec<Vec<Sig>> = vec![Vec::new(); width];
        for i in 0..width {
            for j in 0..width - i {
                let p = and(b, xs[i], ys[j]);
                if p != ZERO {
                    columns[i + j].push(p);
                }
            }
        }
        let sum = column_sum(b, columns);
        zext(&sum, width)
    }
}
