//! Deterministic single-tape Turing machine model, interpreter, and trace
//! recorder.
//!
//! The tape model is one-way infinite to the right with a wall at cell 0:
//! a left move at cell 0 leaves the head in place. Machines carry their
//! time polynomial as explicit metadata. The tape is pre-allocated to
//! `time_bound + n` cells so a bounded run can never leave it, which also
//! keeps the unrolling tableau rectangular.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Head movement of a transition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
    S,
}

/// Internal state index.
pub type StateId = u16;
/// Internal tape-symbol index.
pub type SymbolId = u16;

/// On-disk machine description: `states`, `start`, `halt_states`,
/// `tape_alphabet` (must contain "0", "1", "_"), `transitions` as 5-tuples
/// `[state, read, next_state, write, move]`, `output_cells`, and the
/// optional `time_poly` coefficient array (lowest degree first).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MachineFile {
    #[serde(default)]
    pub name: String,
    pub states: Vec<String>,
    pub start: String,
    pub halt_states: Vec<String>,
    pub tape_alphabet: Vec<String>,
    pub transitions: Vec<(String, String, String, String, Move)>,
    pub output_cells: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time_poly: Option<Vec<u64>>,
}

/// The blank symbol's spelling in machine files.
pub const BLANK: &str = "_";

#[derive(Debug, Error)]
pub enum TmError {
    #[error("machine did not halt within {bound} steps")]
    TimeBoundExceeded { bound: usize },
    #[error("invalid input symbol {0:?} (inputs are over {{0,1}})")]
    InvalidSymbol(char),
    #[error("machine declares no time polynomial")]
    MissingPolynomial,
    #[error("invalid machine: {0}")]
    InvalidMachine(String),
}

/// A validated, index-resolved deterministic Turing machine.
#[derive(Clone, Debug)]
pub struct TuringMachine {
    pub name: String,
    state_names: Vec<String>,
    symbol_names: Vec<String>,
    start: StateId,
    is_halt: Vec<bool>,
    /// Dense transition table, `delta[state * symbols + symbol]`.
    delta: Vec<Option<(StateId, SymbolId, Move)>>,
    pub output_cells: usize,
    pub time_poly: Option<Vec<u64>>,
    blank: SymbolId,
    sym0: SymbolId,
    sym1: SymbolId,
}

/// Machine configuration at one time step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Configuration {
    pub step_index: usize,
    pub state: StateId,
    pub head: usize,
    pub tape: Vec<SymbolId>,
}

/// Full record of a bounded run.
#[derive(Clone, Debug)]
pub struct RunTrace {
    pub configurations: Vec<Configuration>,
    pub halted: bool,
    pub steps_used: usize,
    pub output_bits: Vec<bool>,
}

impl RunTrace {
    /// Check the locality invariant: consecutive configurations differ only
    /// at the previous head cell, the head position, and the state.
    pub fn check_locality(&self) -> bool {
        self.configurations.windows(2).all(|w| {
            let (prev, next) = (&w[0], &w[1]);
            prev.tape
                .iter()
                .zip(&next.tape)
                .enumerate()
                .all(|(c, (a, b))| c == prev.head || a == b)
                && next.head.abs_diff(prev.head) <= 1
        })
    }
}

impl TuringMachine {
    /// Validate a machine file and resolve names to dense indices.
    pub fn from_file(file: MachineFile) -> Result<TuringMachine, TmError> {
        let bad = |msg: String| TmError::InvalidMachine(msg);

        let mut state_index = BTreeMap::new();
        for (i, s) in file.states.iter().enumerate() {
            if state_index.insert(s.clone(), i as StateId).is_some() {
                return Err(bad(format!("duplicate state {s:?}")));
            }
        }
        let mut symbol_index = BTreeMap::new();
        for (i, s) in file.tape_alphabet.iter().enumerate() {
            if symbol_index.insert(s.clone(), i as SymbolId).is_some() {
                return Err(bad(format!("duplicate tape symbol {s:?}")));
            }
            if state_index.contains_key(s) {
                return Err(bad(format!("{s:?} is both a state and a tape symbol")));
            }
        }
        for required in ["0", "1", BLANK] {
            if !symbol_index.contains_key(required) {
                return Err(bad(format!("tape alphabet must contain {required:?}")));
            }
        }
        let start = *state_index
            .get(&file.start)
            .ok_or_else(|| bad(format!("unknown start state {:?}", file.start)))?;
        let mut is_halt = vec![false; file.states.len()];
        for h in &file.halt_states {
            let id = *state_index
                .get(h)
                .ok_or_else(|| bad(format!("unknown halt state {h:?}")))?;
            is_halt[id as usize] = true;
        }
        if file.output_cells == 0 {
            return Err(bad("output_cells must be at least 1".into()));
        }

        let symbols = file.tape_alphabet.len();
        let mut delta = vec![None; file.states.len() * symbols];
        for (from, read, to, write, mv) in &file.transitions {
            let q = *state_index
                .get(from)
                .ok_or_else(|| bad(format!("unknown state {from:?} in transition")))?;
            let g = *symbol_index
                .get(read)
                .ok_or_else(|| bad(format!("unknown symbol {read:?} in transition")))?;
            let q2 = *state_index
                .get(to)
                .ok_or_else(|| bad(format!("unknown state {to:?} in transition")))?;
            let g2 = *symbol_index
                .get(write)
                .ok_or_else(|| bad(format!("unknown symbol {write:?} in transition")))?;
            if is_halt[q as usize] {
                return Err(bad(format!(
                    "halting state {from:?} has an outgoing transition"
                )));
            }
            let slot = &mut delta[q as usize * symbols + g as usize];
            if slot.is_some() {
                return Err(bad(format!("duplicate transition on ({from:?}, {read:?})")));
            }
            *slot = Some((q2, g2, *mv));
        }
        for (q, halting) in is_halt.iter().enumerate() {
            if *halting {
                continue;
            }
            for g in 0..symbols {
                if delta[q * symbols + g].is_none() {
                    return Err(bad(format!(
                        "transition table not total: missing ({:?}, {:?})",
                        file.states[q], file.tape_alphabet[g]
                    )));
                }
            }
        }

        Ok(TuringMachine {
            name: file.name,
            start,
            is_halt,
            delta,
            output_cells: file.output_cells,
            time_poly: file.time_poly,
            blank: symbol_index[BLANK],
            sym0: symbol_index["0"],
            sym1: symbol_index["1"],
            state_names: file.states,
            symbol_names: file.tape_alphabet,
        })
    }

    pub fn from_json(s: &str) -> Result<TuringMachine, TmError> {
        let file: MachineFile = serde_json::from_str(s)
            .map_err(|e| TmError::InvalidMachine(format!("bad machine JSON: {e}")))?;
        TuringMachine::from_file(file)
    }

    /// Reconstruct the on-disk form.
    pub fn to_file(&self) -> MachineFile {
        let mut transitions = Vec::new();
        let symbols = self.symbol_names.len();
        for q in 0..self.state_names.len() {
            for g in 0..symbols {
                if let Some((q2, g2, mv)) = self.delta[q * symbols + g] {
                    transitions.push((
                        self.state_names[q].clone(),
                        self.symbol_names[g].clone(),
                        self.state_names[q2 as usize].clone(),
                        self.symbol_names[g2 as usize].clone(),
                        mv,
                    ));
                }
            }
        }
        MachineFile {
            name: self.name.clone(),
            states: self.state_names.clone(),
            start: self.state_names[self.start as usize].clone(),
            halt_states: self
                .state_names
                .iter()
                .enumerate()
                .filter(|(i, _)| self.is_halt[*i])
                .map(|(_, s)| s.clone())
                .collect(),
            tape_alphabet: self.symbol_names.clone(),
            transitions,
            output_cells: self.output_cells,
            time_poly: self.time_poly.clone(),
        }
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn symbol_count(&self) -> usize {
        self.symbol_names.len()
    }

    pub fn start_state(&self) -> StateId {
        self.start
    }

    pub fn is_halt_state(&self, q: StateId) -> bool {
        self.is_halt[q as usize]
    }

    pub fn blank_symbol(&self) -> SymbolId {
        self.blank
    }

    pub fn bit_symbol(&self, bit: bool) -> SymbolId {
        if bit {
            self.sym1
        } else {
            self.sym0
        }
    }

    pub fn transition(&self, q: StateId, g: SymbolId) -> Option<(StateId, SymbolId, Move)> {
        self.delta[q as usize * self.symbol_names.len() + g as usize]
    }

    /// Evaluate the declared time polynomial at `n + m_out`. Saturates
    /// instead of overflowing on absurd coefficient files.
    pub fn time_bound_poly(&self, n: usize, m_out: usize) -> Result<usize, TmError> {
        let coeffs = self.time_poly.as_ref().ok_or(TmError::MissingPolynomial)?;
        let t = (n + m_out) as u64;
        let mut value: u64 = 0;
        let mut power: u64 = 1;
        for &c in coeffs {
            value = value.saturating_add(c.saturating_mul(power));
            power = power.saturating_mul(t);
        }
        Ok(usize::try_from(value).unwrap_or(usize::MAX))
    }

    /// Run the machine for at most `time_bound` steps, recording every
    /// configuration. Fails with `TimeBoundExceeded` when no halting state
    /// is reached in time.
    pub fn simulate(&self, input: &[bool], time_bound: usize) -> Result<RunTrace, TmError> {
        assert!(time_bound >= 1, "time_bound must be at least 1");
        let t_max = time_bound + input.len();
        if self.output_cells > t_max {
            return Err(TmError::InvalidMachine(format!(
                "output_cells {} exceeds the {t_max}-cell tape of this run",
                self.output_cells
            )));
        }
        let mut tape: Vec<SymbolId> = vec![self.blank; t_max];
        for (i, &bit) in input.iter().enumerate() {
            tape[i] = self.bit_symbol(bit);
        }
        let mut state = self.start;
        let mut head = 0usize;
        let mut configurations = vec![Configuration {
            step_index: 0,
            state,
            head,
            tape: tape.clone(),
        }];
        let mut steps_used = 0;
        let halted = loop {
            if self.is_halt[state as usize] {
                break true;
            }
            if steps_used == time_bound {
                break false;
            }
            let (q2, g2, mv) = self
                .transition(state, tape[head])
                .expect("transition table is total on non-halting states");
            tape[head] = g2;
            state = q2;
            head = match mv {
                Move::L => head.saturating_sub(1),
                Move::R => (head + 1).min(t_max - 1),
                Move::S => head,
            };
            steps_used += 1;
            configurations.push(Configuration {
                step_index: steps_used,
                state,
                head,
                tape: tape.clone(),
            });
        };
        if !halted {
            return Err(TmError::TimeBoundExceeded { bound: time_bound });
        }
        let output_bits = tape[..self.output_cells]
            .iter()
            .map(|&g| g == self.sym1)
            .collect();
        Ok(RunTrace {
            configurations,
            halted,
            steps_used,
            output_bits,
        })
    }
}

/// Parse a CLI input string over "0"/"1" into bits.
pub fn parse_input(s: &str) -> Result<Vec<bool>, TmError> {
    crate::bits::parse_bits(s).map_err(TmError::InvalidSymbol)
}
