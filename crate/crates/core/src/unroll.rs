//! Unroll a time-bounded machine run into a bounded-fan-in circuit.
//!
//! The tableau has `time_bound + 1` rows and `time_bound + n` cells. Each
//! cell group carries a one-hot symbol code, a head flag, and a one-hot
//! state code that is nonzero only under the head. Halting states get an
//! implicit self-loop (write the same symbol, stay), so once the machine
//! halts every later row copies the previous one; this makes the circuit
//! total for inputs that halt early. Row updates only read the three
//! neighboring cell groups of the previous row, and all window logic is
//! decomposed into balanced fan-in-2 trees.
//!
//! Every cell of every row materializes its update logic (the tableau is
//! rectangular, sizes statically known), so gate count grows as
//! Θ(T · T_max) for fixed machine parameters.

use serde::Serialize;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder, NodeId};
use crate::precision::SourceSpec;
use crate::stats;
use crate::tm::{Move, TuringMachine};

/// Pinned multiplier of the closed-form size bound
/// `s ≤ SIZE_COEFF · T · (T + n) · |Q| · |Γ|`.
pub const SIZE_COEFF: u64 = 8;
/// Pinned multiplier of the closed-form depth bound
/// `L ≤ DEPTH_COEFF · T · log2(|Q| · |Γ|)`.
pub const DEPTH_COEFF: f64 = 5.0;

#[derive(Debug, Error)]
pub enum UnrollError {
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
    #[error("invalid dimensions: {0}")]
    BadDimensions(String),
}

/// Signals of one tableau cell group.
#[derive(Clone)]
struct CellSigs {
    sym: Vec<NodeId>,
    head: NodeId,
    state: Vec<NodeId>,
}

/// Node ids of the live signals per (row, cell) group, for cone auditing.
/// The two shared constant nodes are omitted.
pub struct TableauLayout {
    pub rows: usize,
    pub cols: usize,
    pub groups: Vec<Vec<NodeId>>,
}

impl TableauLayout {
    pub fn group(&self, row: usize, col: usize) -> &[NodeId] {
        &self.groups[row * self.cols + col]
    }
}

/// Closed-form gate-count ceiling for the tableau construction.
pub fn size_bound(machine: &TuringMachine, n: usize, time_bound: usize) -> u64 {
    SIZE_COEFF
        * time_bound as u64
        * (time_bound + n) as u64
        * machine.state_count() as u64
        * machine.symbol_count() as u64
}

/// Closed-form depth ceiling for the tableau construction.
pub fn depth_bound(machine: &TuringMachine, time_bound: usize) -> f64 {
    let qg = (machine.state_count() * machine.symbol_count()) as f64;
    DEPTH_COEFF * time_bound as f64 * qg.log2()
}

struct Tableau<'a> {
    b: &'a mut CircuitBuilder,
    zero: NodeId,
    one: NodeId,
}

impl Tableau<'_> {
    fn constant(&self, v: bool) -> NodeId {
        if v {
            self.one
        } else {
            self.zero
        }
    }

    /// Balanced OR; the empty tree is the shared constant 0.
    fn or_many(&mut self, ids: &[NodeId]) -> NodeId {
        match ids.len() {
            0 => self.zero,
            1 => ids[0],
            _ => self.b.or_tree(ids),
        }
    }
}

/// Unroll `machine` on `n` input bits for `time_bound` steps.
pub fn unroll(
    machine: &TuringMachine,
    n: usize,
    time_bound: usize,
) -> Result<Circuit, UnrollError> {
    Ok(unroll_with_layout(machine, n, time_bound)?.0)
}

/// As [`unroll`], additionally reporting which circuit nodes carry each
/// tableau group's signals.
pub fn unroll_with_layout(
    machine: &TuringMachine,
    n: usize,
    time_bound: usize,
) -> Result<(Circuit, TableauLayout), UnrollError> {
    if n == 0 {
        return Err(UnrollError::BadDimensions("n must be at least 1".into()));
    }
    if time_bound == 0 {
        return Err(UnrollError::BadDimensions(
            "time_bound must be at least 1".into(),
        ));
    }
    let q_count = machine.state_count();
    let g_count = machine.symbol_count();
    if machine.output_cells > time_bound + n {
        return Err(UnrollError::InvalidMachine(format!(
            "output_cells {} exceeds tape length {}",
            machine.output_cells,
            time_bound + n
        )));
    }

    // Total transition function: halting states self-loop in place, which
    // realizes the halting latch.
    let delta = |q: u16, g: u16| -> (u16, u16, Move) {
        if machine.is_halt_state(q) {
            (q, g, Move::S)
        } else {
            machine
                .transition(q, g)
                .expect("transition table is total on non-halting states")
        }
    };

    let t_max = time_bound + n;
    let mut builder = CircuitBuilder::new(&format!("{}_unrolled_n{}", machine.name, n));
    let inputs: Vec<NodeId> = (0..n).map(|_| builder.input()).collect();
    let zero = builder.const0();
    let one = builder.const1();
    let mut tab = Tableau {
        b: &mut builder,
        zero,
        one,
    };

    // Row 0: the input configuration.
    let mut row: Vec<CellSigs> = Vec::with_capacity(t_max);
    for c in 0..t_max {
        let mut sym = vec![tab.zero; g_count];
        if let Some(&input) = inputs.get(c) {
            sym[machine.bit_symbol(true) as usize] = input;
            sym[machine.bit_symbol(false) as usize] = tab.b.not(input);
        } else {
            sym[machine.blank_symbol() as usize] = tab.one;
        }
        let head = tab.constant(c == 0);
        let mut state = vec![tab.zero; q_count];
        if c == 0 {
            state[machine.start_state() as usize] = tab.one;
        }
        row.push(CellSigs { sym, head, state });
    }

    let mut layout = TableauLayout {
        rows: time_bound + 1,
        cols: t_max,
        groups: Vec::with_capacity((time_bound + 1) * t_max),
    };
    let record = |layout: &mut TableauLayout, row: &[CellSigs], zero: NodeId, one: NodeId| {
        for cell in row {
            layout.groups.push(
                cell.sym
                    .iter()
                    .chain([&cell.head])
                    .chain(&cell.state)
                    .copied()
                    .filter(|&id| id != zero && id != one)
                    .collect(),
            );
        }
    };
    record(&mut layout, &row, zero, one);

    for _t in 0..time_bound {
        // Active (state, symbol) pair signals per cell.
        let pairs: Vec<Vec<Vec<NodeId>>> = row
            .iter()
            .map(|cell| {
                (0..q_count)
                    .map(|q| {
                        (0..g_count)
                            .map(|g| tab.b.and2(cell.state[q], cell.sym[g]))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let mut next: Vec<CellSigs> = Vec::with_capacity(t_max);
        for c in 0..t_max {
            // New state code: group incoming pairs by target state and the
            // direction they arrive from.
            let mut state = Vec::with_capacity(q_count);
            for q_new in 0..q_count as u16 {
                let mut from_left = Vec::new();
                let mut from_right = Vec::new();
                let mut staying = Vec::new();
                for q in 0..q_count as u16 {
                    for g in 0..g_count as u16 {
                        let (q2, _, mv) = delta(q, g);
                        if q2 != q_new {
                            continue;
                        }
                        match mv {
                            Move::R => {
                                if c > 0 {
                                    from_left.push(pairs[c - 1][q as usize][g as usize]);
                                }
                                // Right wall: a right move at the last cell stays.
                                if c == t_max - 1 {
                                    staying.push(pairs[c][q as usize][g as usize]);
                                }
                            }
                            Move::L => {
                                if c + 1 < t_max {
                                    from_right.push(pairs[c + 1][q as usize][g as usize]);
                                }
                                // Left wall: a left move at cell 0 stays.
                                if c == 0 {
                                    staying.push(pairs[0][q as usize][g as usize]);
                                }
                            }
                            Move::S => staying.push(pairs[c][q as usize][g as usize]),
                        }
                    }
                }
                let l = tab.or_many(&from_left);
                let s = tab.or_many(&staying);
                let r = tab.or_many(&from_right);
                let ls = tab.b.or2(l, s);
                state.push(tab.b.or2(ls, r));
            }
            let head = tab.or_many(&state);

            // New symbol code: the head cell takes the written symbol; other
            // cells keep theirs.
            let not_head = tab.b.not(row[c].head);
            let mut sym = Vec::with_capacity(g_count);
            for g_new in 0..g_count as u16 {
                let mut writes = Vec::new();
                for q in 0..q_count as u16 {
                    for g in 0..g_count as u16 {
                        let (_, g2, _) = delta(q, g);
                        if g2 == g_new {
                            writes.push(pairs[c][q as usize][g as usize]);
                        }
                    }
                }
                let written = tab.or_many(&writes);
                let kept = tab.b.and2(not_head, row[c].sym[g_new as usize]);
                sym.push(tab.b.or2(written, kept));
            }
            next.push(CellSigs { sym, head, state });
        }
        row = next;
        record(&mut layout, &row, zero, one);
    }

    // Output: a cell reads as 1 iff its final symbol is "1".
    let one_sym = machine.bit_symbol(true) as usize;
    for cell in row.iter().take(machine.output_cells) {
        builder.mark_output(cell.sym[one_sym]);
    }
    Ok((builder.finish(), layout))
}

/// One row of a build report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportRow {
    pub n: usize,
    pub m_out: usize,
    /// Time bound for machines; the precision scale n + m_out for programs.
    pub t: usize,
    pub s: usize,
    pub l: usize,
}

/// Size/depth growth across input precisions, with the fitted log-log slope
/// of s against t.
#[derive(Clone, Debug, Serialize)]
pub struct BuildReport {
    pub source: String,
    pub rows: Vec<ReportRow>,
    pub slope_s_vs_t: f64,
}

impl BuildReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,m_out,t,s,l\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.n, r.m_out, r.t, r.s, r.l));
        }
        out
    }
}

/// Build the circuit at each `n` and tabulate certificate growth.
/// `m_out` applies to program sources; machines use their `output_cells`.
pub fn build_report(
    source: &SourceSpec,
    ns: &[usize],
    m_out: u32,
) -> Result<BuildReport, UnrollError> {
    let mut rows = Vec::new();
    let name;
    match source {
        SourceSpec::Machine(m) => {
            name = m.name.clone();
            for &n in ns {
                let t = m
                    .time_bound_poly(n, m.output_cells)
                    .map_err(|e| UnrollError::InvalidMachine(e.to_string()))?;
                let c = unroll(m, n, t)?;
                let cert = c
                    .certify_sparsity()
                    .map_err(|e| UnrollError::InvalidMachine(e.to_string()))?;
                rows.push(ReportRow {
                    n,
                    m_out: m.output_cells,
                    t,
                    s: cert.s,
                    l: cert.l,
                });
            }
        }
        SourceSpec::Program(p) => {
            name = p.name.clone();
            for &n in ns {
                let c = crate::precision::compile_bitprogram(p, n as u32, m_out)
                    .map_err(|e| UnrollError::InvalidMachine(e.to_string()))?;
                let cert = c
                    .certify_sparsity()
                    .map_err(|e| UnrollError::InvalidMachine(e.to_string()))?;
                rows.push(ReportRow {
                    n,
                    m_out: m_out as usize,
                    t: n + m_out as usize,
                    s: cert.s,
                    l: cert.l,
                });
            }
        }
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
    let ss: Vec<f64> = rows.iter().map(|r| r.s as f64).collect();
    let slope = if rows.len() >= 2 {
        stats::log_log_slope(&ts, &ss)
    } else {
        0.0
    };
    Ok(BuildReport {
        source: name,
        rows,
        slope_s_vs_t: slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::index_to_bits;
    use crate::circuit::Equivalence;
    use crate::corpus;

    /// Exhaustively compare an unrolled circuit against direct simulation.
    fn assert_matches_simulation(machine: &TuringMachine, n: usize, bound: usize) {
        let circuit = unroll(machine, n, bound).unwrap();
        assert!(circuit.validate().is_empty());
        assert_eq!(circuit.input_count(), n);
        assert_eq!(circuit.output_count(), machine.output_cells);
        for idx in 0..(1u64 << n) {
            let input = index_to_bits(n, idx);
            let expected = machine.simulate(&input, bound).unwrap().output_bits;
            assert_eq!(
                circuit.evaluate(&input).unwrap(),
                expected,
                "{} n={n} idx={idx}",
                machine.name
            );
        }
    }

    #[test]
    fn identity_machine_unrolls_to_identity() {
        let m = corpus::identity_machine(3);
        assert_matches_simulation(&m, 3, 1);
    }

    #[test]
    fn parity_machine_unrolls_correctly() {
        let m = corpus::parity_machine();
        for n in 1..=6 {
            let bound = m.time_bound_poly(n, 1).unwrap();
            assert_matches_simulation(&m, n, bound);
        }
    }

    #[test]
    fn adder_machine_unrolls_correctly() {
        let m = corpus::adder_machine();
        let bound = m.time_bound_poly(4, 3).unwrap();
        assert_matches_simulation(&m, 4, bound);
    }

    #[test]
    fn certificate_within_closed_form_bounds() {
        for (m, ns) in [
            (corpus::parity_machine(), vec![2usize, 4, 6]),
            (corpus::identity_machine(5), vec![5]),
            (corpus::adder_machine(), vec![4]),
        ] {
            for n in ns {
                let bound = m.time_bound_poly(n, m.output_cells).unwrap();
                let c = unroll(&m, n, bound).unwrap();
                let cert = c.certify_sparsity().unwrap();
                assert!(cert.k <= 2);
                assert!(
                    (cert.s as u64) <= size_bound(&m, n, bound),
                    "{} n={n}: s={} bound={}",
                    m.name,
                    cert.s,
                    size_bound(&m, n, bound)
                );
                assert!(
                    (cert.l as f64) <= depth_bound(&m, bound),
                    "{} n={n}: l={} bound={}",
                    m.name,
                    cert.l,
                    depth_bound(&m, bound)
                );
            }
        }
    }

    #[test]
    fn next_row_cone_stays_in_three_cell_window() {
        use std::collections::{HashMap, HashSet};
        let m = corpus::parity_machine();
        let n = 3;
        let bound = m.time_bound_poly(n, 1).unwrap();
        let (c, layout) = unroll_with_layout(&m, n, bound).unwrap();

        // row_cells[node] = positions where the node carries a group signal.
        let mut row_cells: HashMap<NodeId, Vec<(usize, usize)>> = HashMap::new();
        for t in 0..layout.rows {
            for cell in 0..layout.cols {
                for &id in layout.group(t, cell) {
                    row_cells.entry(id).or_default().push((t, cell));
                }
            }
        }
        for t in 1..layout.rows {
            for cell in 0..layout.cols {
                for &bit in layout.group(t, cell) {
                    // Walk the cone down to the previous row's signals.
                    let mut stack = vec![bit];
                    let mut seen = HashSet::new();
                    while let Some(id) = stack.pop() {
                        if !seen.insert(id) {
                            continue;
                        }
                        let at_prev_row = id != bit
                            && row_cells
                                .get(&id)
                                .is_some_and(|ps| ps.iter().any(|&(r, _)| r == t - 1));
                        if at_prev_row {
                            let ok = row_cells[&id]
                                .iter()
                                .any(|&(r, cc)| r == t - 1 && cell.abs_diff(cc) <= 1);
                            assert!(ok, "row {t} cell {cell}: cone reaches {:?}", row_cells[&id]);
                            continue;
                        }
                        stack.extend(c.nodes[id as usize].fan_in.iter().copied());
                    }
                }
            }
        }
    }

    #[test]
    fn unrolled_parity_equals_direct_xor_tree() {
        let m = corpus::parity_machine();
        let bound = m.time_bound_poly(3, 1).unwrap();
        let c = unroll(&m, 3, bound).unwrap();
        let direct = corpus::parity_tree_circuit(3);
        assert_eq!(
            c.brute_force_equiv(&direct).unwrap(),
            Equivalence::Equivalent
        );
    }

    #[test]
    fn build_report_parity_grows_quadratically() {
        let report = build_report(
            &SourceSpec::Machine(corpus::parity_machine()),
            &[2, 3, 4, 5, 6, 7, 8],
            1,
        )
        .unwrap();
        assert!(
            (1.5..=2.5).contains(&report.slope_s_vs_t),
            "slope {}",
            report.slope_s_vs_t
        );
        assert!(report.rows.windows(2).all(|w| w[0].s < w[1].s));
    }

    #[test]
    fn build_report_constant_machine_stays_flat_in_t() {
        let report = build_report(
            &SourceSpec::Machine(corpus::constant_machine()),
            &[2, 4, 6, 8],
            1,
        )
        .unwrap();
        // T is constant; size varies only with the tape encoding overhead.
        assert!(report.rows.iter().all(|r| r.t == report.rows[0].t));
        let per_cell = SIZE_COEFF as usize
            * corpus::constant_machine().state_count()
            * corpus::constant_machine().symbol_count();
        let s_max = report.rows.iter().map(|r| r.s).max().unwrap();
        let s_min = report.rows.iter().map(|r| r.s).min().unwrap();
        assert!(
            s_max - s_min <= per_cell * 6,
            "encoding overhead only: {s_min}..{s_max}"
        );
    }

    #[test]
    fn build_report_program_columns_are_monotone() {
        let report = build_report(
            &SourceSpec::Program(corpus::ripple_program_for_report()),
            &[2, 3, 4, 5, 6],
            4,
        )
        .unwrap();
        assert!(report.rows.windows(2).all(|w| w[0].s <= w[1].s));
        assert!(report.rows.windows(2).all(|w| w[0].l <= w[1].l));
    }

    #[test]
    fn rejects_degenerate_dimensions() {
        let m = corpus::parity_machine();
        assert!(matches!(
            unroll(&m, 0, 5),
            Err(UnrollError::BadDimensions(_))
        ));
        assert!(matches!(
            unroll(&m, 3, 0),
            Err(UnrollError::BadDimensions(_))
        ));
    }
}
