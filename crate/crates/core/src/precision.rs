//! Fixed-precision encoding/decoding, the fixed-point bit-program DSL, and
//! the end-to-end accuracy check for the compiled pipeline.
//!
//! Inputs are quantized by flooring onto the n-bit grid (clamped at 1.0),
//! which makes the 2^−n quantization bound exact. Registers are signed
//! two's-complement words with 4 integer bits above a per-register binary
//! point; arithmetic wraps at the register width. Outputs are truncated to
//! `m_out` fractional bits with 2 integer bits.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitBuilder};
use crate::gadgets::{self, word, Sig};
use crate::neuralize::{self, ErrorBudget, GadgetMode};
use crate::tm::TuringMachine;
use crate::unroll;

/// Integer bits (including sign) carried above every register's binary point.
const REG_INT_BITS: u32 = 4;
/// Integer bits (including sign) of the pipeline output format.
pub const OUT_INT_BITS: u32 = 2;

/// A fixed-point interpretation of a bit field.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPointFormat {
    pub int_bits: u32,
    pub frac_bits: u32,
    pub signed: bool,
}

impl FixedPointFormat {
    pub fn width(&self) -> u32 {
        self.int_bits + self.frac_bits
    }

    /// Standard pipeline output format: signed, two integer bits.
    pub fn output(m_out: u32) -> FixedPointFormat {
        FixedPointFormat {
            int_bits: OUT_INT_BITS,
            frac_bits: m_out,
            signed: true,
        }
    }

    /// Unsigned fraction of `n` bits, as produced by [`encode`].
    pub fn unsigned_fraction(n: u32) -> FixedPointFormat {
        FixedPointFormat {
            int_bits: 0,
            frac_bits: n,
            signed: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum PrecisionError {
    #[error("coordinate {value} outside [0, 1]")]
    OutOfRange { value: f64 },
    #[error("bit vector length {got} is not a multiple of format width {width}")]
    WidthMismatch { got: usize, width: u32 },
    #[error("register width {width} exceeds the supported maximum of 62 bits")]
    WidthOverflow { width: u32 },
    #[error("program is ill-formed: {0}")]
    BadProgram(String),
    #[error("{stage} stage failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

/// Quantize each coordinate of `x ∈ [0,1]^d` to `n` bits (floor, clamped at
/// 2^n − 1), MSB first, concatenated in coordinate order.
pub fn encode(x: &[f64], n: u32) -> Result<Vec<bool>, PrecisionError> {
    if n == 0 || n > 62 {
        return Err(PrecisionError::WidthOverflow { width: n });
    }
    let mut bits = Vec::with_capacity(x.len() * n as usize);
    for &xi in x {
        if !(0.0..=1.0).contains(&xi) {
            return Err(PrecisionError::OutOfRange { value: xi });
        }
        let scaled = (xi * (1u64 << n) as f64).floor() as u64;
        let v = scaled.min((1u64 << n) - 1);
        for j in (0..n).rev() {
            bits.push((v >> j) & 1 == 1);
        }
    }
    Ok(bits)
}

/// Grid value (the integer ⌊x·2^n⌋, clamped) for each coordinate.
pub fn encode_grid(x: &[f64], n: u32) -> Result<Vec<u64>, PrecisionError> {
    if n == 0 || n > 62 {
        return Err(PrecisionError::WidthOverflow { width: n });
    }
    x.iter()
        .map(|&xi| {
            if !(0.0..=1.0).contains(&xi) {
                return Err(PrecisionError::OutOfRange { value: xi });
            }
            Ok(((xi * (1u64 << n) as f64).floor() as u64).min((1u64 << n) - 1))
        })
        .collect()
}

/// Interpret `y` as consecutive fixed-point words (MSB first) under `fmt`.
pub fn decode(y: &[bool], fmt: &FixedPointFormat) -> Result<Vec<f64>, PrecisionError> {
    let w = fmt.width() as usize;
    if w == 0 || w > 62 || !y.len().is_multiple_of(w) {
        return Err(PrecisionError::WidthMismatch {
            got: y.len(),
            width: fmt.width(),
        });
    }
    let scale = (1u64 << fmt.frac_bits) as f64;
    Ok(y.chunks(w)
        .map(|word| {
            let raw = crate::bits::bits_to_index(word) as i64;
            let value = if fmt.signed && word[0] {
                raw - (1i64 << w)
            } else {
                raw
            };
            value as f64 / scale
        })
        .collect())
}

/// One instruction of the fixed-point DSL. Instruction `i` defines
/// register `i`; operands refer to earlier registers only.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Instr {
    /// Read input coordinate `coord` as an unsigned n-bit fraction.
    Load {
        coord: usize,
    },
    /// Fixed constant `mantissa / 2^frac_bits`.
    Const {
        mantissa: i64,
        frac_bits: u32,
    },
    Add {
        a: usize,
        b: usize,
    },
    Sub {
        a: usize,
        b: usize,
    },
    Mul {
        a: usize,
        b: usize,
    },
    /// `by > 0` drops `by` low fractional bits (truncation toward −∞);
    /// `by < 0` appends zero fractional bits.
    Shift {
        a: usize,
        by: i32,
    },
    /// Emit register `a`, converted to the output format.
    Output {
        a: usize,
    },
}

/// A straight-line fixed-point program over `dim` input coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitProgram {
    #[serde(default)]
    pub name: String,
    pub dim: usize,
    pub instructions: Vec<Instr>,
}

impl BitProgram {
    pub fn output_count(&self) -> usize {
        self.instructions
            .iter()
            .filter(|i| matches!(i, Instr::Output { .. }))
            .count()
    }

    /// Static checks: operand indices strictly decrease, coordinates exist,
    /// at least one output.
    pub fn validate(&self) -> Result<(), PrecisionError> {
        let bad = |m: String| Err(PrecisionError::BadProgram(m));
        for (i, instr) in self.instructions.iter().enumerate() {
            let refs: Vec<usize> = match instr {
                Instr::Load { coord } => {
                    if *coord >= self.dim {
                        return bad(format!("instruction {i}: no input coordinate {coord}"));
                    }
                    vec![]
                }
                Instr::Const { frac_bits, .. } => {
                    if *frac_bits == 0 {
                        return bad(format!("instruction {i}: constant needs frac_bits >= 1"));
                    }
                    vec![]
                }
                Instr::Add { a, b } | Instr::Sub { a, b } | Instr::Mul { a, b } => vec![*a, *b],
                Instr::Shift { a, .. } | Instr::Output { a } => vec![*a],
            };
            for r in refs {
                if r >= i {
                    return bad(format!(
                        "instruction {i} reads register {r} (not yet defined)"
                    ));
                }
            }
        }
        if self.output_count() == 0 {
            return bad("program has no OUTPUT instruction".into());
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<BitProgram, PrecisionError> {
        let p: BitProgram = serde_json::from_str(s)
            .map_err(|e| PrecisionError::BadProgram(format!("bad program JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("program serialization cannot fail")
    }
}

fn wrap(v: i128, width: u32) -> i128 {
    let shift = 128 - width;
    (v << shift) >> shift
}

/// Exact integer semantics of a program: the reference the compiled circuit
/// is tested against. `grid` holds ⌊x·2^n⌋ per coordinate. Returns one
/// two's-complement mantissa per output in the `m_out + 2`-bit output format.
pub fn eval_bitprogram(
    p: &BitProgram,
    grid: &[u64],
    n: u32,
    m_out: u32,
) -> Result<Vec<i64>, PrecisionError> {
    p.validate()?;
    let mut regs: Vec<(i128, u32)> = Vec::with_capacity(p.instructions.len());
    let mut outputs = Vec::new();
    for instr in &p.instructions {
        let (value, frac) = match *instr {
            Instr::Load { coord } => (grid[coord] as i128, n),
            Instr::Const {
                mantissa,
                frac_bits,
            } => (mantissa as i128, frac_bits),
            Instr::Add { a, b } => {
                let (va, fa) = regs[a];
                let (vb, fb) = regs[b];
                check_align(fa, fb)?;
                (va + vb, fa)
            }
            Instr::Sub { a, b } => {
                let (va, fa) = regs[a];
                let (vb, fb) = regs[b];
                check_align(fa, fb)?;
                (va - vb, fa)
            }
            Instr::Mul { a, b } => {
                let (va, fa) = regs[a];
                let (vb, fb) = regs[b];
                (va * vb, fa + fb)
            }
            Instr::Shift { a, by } => {
                let (va, fa) = regs[a];
                let f2 = shifted_frac(fa, by)?;
                if by >= 0 {
                    (va >> by, f2)
                } else {
                    (va << -by, f2)
                }
            }
            Instr::Output { a } => {
                let (va, fa) = regs[a];
                let mantissa = if fa >= m_out {
                    va >> (fa - m_out)
                } else {
                    va << (m_out - fa)
                };
                outputs.push(wrap(mantissa, m_out + OUT_INT_BITS) as i64);
                (va, fa)
            }
        };
        let width = reg_width(frac)?;
        regs.push((wrap(value, width), frac));
    }
    Ok(outputs)
}

fn check_align(fa: u32, fb: u32) -> Result<(), PrecisionError> {
    if fa != fb {
        return Err(PrecisionError::BadProgram(format!(
            "ADD/SUB operands have different binary points ({fa} vs {fb}); align with SHIFT"
        )));
    }
    Ok(())
}

fn shifted_frac(frac: u32, by: i32) -> Result<u32, PrecisionError> {
    let f2 = frac as i64 - by as i64;
    if !(1..=60).contains(&f2) {
        return Err(PrecisionError::BadProgram(format!(
            "SHIFT by {by} leaves {f2} fractional bits"
        )));
    }
    Ok(f2 as u32)
}

fn reg_width(frac: u32) -> Result<u32, PrecisionError> {
    let width = frac + REG_INT_BITS;
    if width > 62 {
        return Err(PrecisionError::WidthOverflow { width });
    }
    Ok(width)
}

/// Compile a program into a bounded-fan-in circuit with `dim·n` input bits
/// and `outputs·(m_out + 2)` output bits (MSB first per word). The circuit
/// computes exactly the semantics of [`eval_bitprogram`].
pub fn compile_bitprogram(p: &BitProgram, n: u32, m_out: u32) -> Result<Circuit, PrecisionError> {
    p.validate()?;
    let mut b = CircuitBuilder::new(&p.name);
    let input_ids: Vec<Vec<Sig>> = (0..p.dim)
        .map(|_| (0..n).map(|_| Sig::Node(b.input())).collect())
        .collect();

    let mut regs: Vec<(Vec<Sig>, u32)> = Vec::with_capacity(p.instructions.len());
    let mut out_words: Vec<Vec<Sig>> = Vec::new();
    for instr in &p.instructions {
        let (bits, frac) = match *instr {
            Instr::Load { coord } => {
                // MSB-first input bits to an LSB-first unsigned word.
                let mut lsb: Vec<Sig> = input_ids[coord].iter().rev().copied().collect();
                lsb = word::zext(&lsb, reg_width(n)? as usize);
                (lsb, n)
            }
            Instr::Const {
                mantissa,
                frac_bits,
            } => {
                let width = reg_width(frac_bits)?;
                let bits = (0..width)
                    .map(|j| Sig::Const((mantissa >> j.min(63)) & 1 == 1))
                    .collect();
                (bits, frac_bits)
            }
            Instr::Add { a, b: rb } => {
                let (xa, fa) = regs[a].clone();
                let (xb, fb) = regs[rb].clone();
                check_align(fa, fb)?;
                let width = reg_width(fa)?;
                (word::add_mod(&mut b, &xa, &xb, width as usize), fa)
            }
            Instr::Sub { a, b: rb } => {
                let (xa, fa) = regs[a].clone();
                let (xb, fb) = regs[rb].clone();
                check_align(fa, fb)?;
                let width = reg_width(fa)?;
                (word::sub_mod(&mut b, &xa, &xb, width as usize), fa)
            }
            Instr::Mul { a, b: rb } => {
                let (xa, fa) = regs[a].clone();
                let (xb, fb) = regs[rb].clone();
                let frac = fa + fb;
                let width = reg_width(frac)?;
                (word::mul_mod(&mut b, &xa, &xb, width as usize), frac)
            }
            Instr::Shift { a, by } => {
                let (xa, fa) = regs[a].clone();
                let f2 = shifted_frac(fa, by)?;
                let shifted: Vec<Sig> = if by >= 0 {
                    xa[(by as usize).min(xa.len())..].to_vec()
                } else {
                    let mut v = vec![gadgets::ZERO; (-by) as usize];
                    v.extend(xa);
                    v
                };
                (word::sext(&shifted, reg_width(f2)? as usize), f2)
            }
            Instr::Output { a } => {
                let (xa, fa) = regs[a].clone();
                let aligned: Vec<Sig> = if fa >= m_out {
                    word::sext(
                        &xa[((fa - m_out) as usize).min(xa.len())..],
                        (m_out + OUT_INT_BITS) as usize,
                    )
                } else {
                    let mut v = vec![gadgets::ZERO; (m_out - fa) as usize];
                    v.extend(xa);
                    word::sext(&v, (m_out + OUT_INT_BITS) as usize)
                };
                out_words.push(aligned);
                regs[a].clone()
            }
        };
        regs.push((bits, frac));
    }
    for word_bits in out_words {
        for sig in word_bits.iter().rev() {
            let id = gadgets::materialize(&mut b, *sig);
            b.mark_output(id);
        }
    }
    Ok(b.finish())
}

/// The computation source behind a precision family.
#[derive(Clone, Debug)]
pub enum SourceSpec {
    Machine(TuringMachine),
    Program(BitProgram),
}

/// A discrete family member: a source pinned at precisions (n, m_out).
#[derive(Clone, Debug)]
pub struct PrecisionFamily {
    pub source: SourceSpec,
    pub n: u32,
    pub m_out: u32,
}

impl PrecisionFamily {
    pub fn program(p: BitProgram, n: u32, m_out: u32) -> PrecisionFamily {
        PrecisionFamily {
            source: SourceSpec::Program(p),
            n,
            m_out,
        }
    }

    pub fn machine(m: TuringMachine, n: u32, m_out: u32) -> PrecisionFamily {
        PrecisionFamily {
            source: SourceSpec::Machine(m),
            n,
            m_out,
        }
    }

    pub fn input_dim(&self) -> usize {
        match &self.source {
            SourceSpec::Machine(_) => 1,
            SourceSpec::Program(p) => p.dim,
        }
    }

    pub fn output_format(&self) -> FixedPointFormat {
        match &self.source {
            SourceSpec::Machine(_) => FixedPointFormat::unsigned_fraction(self.m_out),
            SourceSpec::Program(_) => FixedPointFormat::output(self.m_out),
        }
    }

    /// Build the member's circuit (program compiler or tableau unrolling).
    pub fn circuit(&self) -> Result<Circuit, PrecisionError> {
        match &self.source {
            SourceSpec::Program(p) => compile_bitprogram(p, self.n, self.m_out),
            SourceSpec::Machine(m) => {
                let n_bits = self.n as usize;
                let bound = m.time_bound_poly(n_bits, m.output_cells).map_err(|e| {
                    PrecisionError::Stage {
                        stage: "machine",
                        message: e.to_string(),
                    }
                })?;
                unroll::unroll(m, n_bits, bound).map_err(|e| PrecisionError::Stage {
                    stage: "unroll",
                    message: e.to_string(),
                })
            }
        }
    }
}

/// Result of one end-to-end accuracy sweep.
#[derive(Clone, Debug, Serialize)]
pub struct EndToEndReport {
    pub n: u32,
    pub m_out: u32,
    pub samples: usize,
    pub seed: u64,
    pub max_err: f64,
    /// 2^−m_out + L_f · 2^−n.
    pub bound: f64,
    pub pass: bool,
    pub circuit_size: usize,
    pub circuit_depth: usize,
    pub network_layers: usize,
}

/// Compile, neuralize, and sweep: the measured sup-error of the full chain
/// against `f_reference`, compared to the 2^−m_out + L_f·2^−n bound.
pub fn end_to_end_check(
    fam: &PrecisionFamily,
    f_reference: &dyn Fn(&[f64]) -> Vec<f64>,
    lip: f64,
    samples: usize,
    seed: u64,
) -> Result<EndToEndReport, PrecisionError> {
    use rand::{Rng, SeedableRng};
    let circuit = fam.circuit()?;
    let cert = circuit
        .certify_sparsity()
        .map_err(|e| PrecisionError::Stage {
            stage: "certify",
            message: e.to_string(),
        })?;
    let budget = ErrorBudget::allocate(cert.l.max(1), 1.0, (0.5f64).powi(fam.m_out as i32))
        .map_err(|e| PrecisionError::Stage {
            stage: "budget",
            message: e.to_string(),
        })?;
    let net = neuralize::neuralize_circuit(&circuit, GadgetMode::Exact, &budget).map_err(|e| {
        PrecisionError::Stage {
            stage: "neuralize",
            message: e.to_string(),
        }
    })?;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let fmt = fam.output_format();
    let d = fam.input_dim();
    let mut max_err: f64 = 0.0;
    for _ in 0..samples {
        let x: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let bits = encode(&x, fam.n)?;
        let reals: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
        let out = net.forward(&reals).map_err(|e| PrecisionError::Stage {
            stage: "forward",
            message: e.to_string(),
        })?;
        let out_bits: Vec<bool> = out.iter().map(|&v| v >= 0.5).collect();
        let decoded = decode(&out_bits, &fmt)?;
        let expected = f_reference(&x);
        for (got, want) in decoded.iter().zip(&expected) {
            max_err = max_err.max((got - want).abs());
        }
    }
    let bound = (0.5f64).powi(fam.m_out as i32) + lip * (0.5f64).powi(fam.n as i32);
    Ok(EndToEndReport {
        n: fam.n,
        m_out: fam.m_out,
        samples,
        seed,
        max_err,
        bound,
        pass: max_err <= bound + 1e-12,
        circuit_size: cert.s,
        circuit_depth: cert.l,
        network_layers: net.layers.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::{format_bits, index_to_bits, parse_bits};
    use crate::circuit::Equivalence;
    use crate::corpus;
    use rand::{Rng, SeedableRng};

    #[test]
    fn encode_examples() {
        assert_eq!(format_bits(&encode(&[0.625], 3).unwrap()), "101");
        assert_eq!(format_bits(&encode(&[0.0], 4).unwrap()), "0000");
        // Clamp at the top of the range.
        assert_eq!(format_bits(&encode(&[1.0], 3).unwrap()), "111");
        assert!(matches!(
            encode(&[1.5], 3),
            Err(PrecisionError::OutOfRange { .. })
        ));
    }

    #[test]
    fn decode_examples() {
        let fmt = FixedPointFormat::unsigned_fraction(3);
        assert_eq!(
            decode(&parse_bits("101").unwrap(), &fmt).unwrap(),
            vec![0.625]
        );
        assert_eq!(
            decode(&parse_bits("000").unwrap(), &fmt).unwrap(),
            vec![0.0]
        );
        assert!(matches!(
            decode(&parse_bits("10").unwrap(), &fmt),
            Err(PrecisionError::WidthMismatch { .. })
        ));
        // Signed: 1101 at int 2 / frac 2 is −3/4.
        let signed = FixedPointFormat {
            int_bits: 2,
            frac_bits: 2,
            signed: true,
        };
        assert_eq!(
            decode(&parse_bits("1101").unwrap(), &signed).unwrap(),
            vec![-0.75]
        );
    }

    #[test]
    fn quantization_error_below_ulp() {
        // |x − decode(encode(x))| < 2^−n for 1000 seeded points.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for n in [3u32, 6, 10] {
            let fmt = FixedPointFormat::unsigned_fraction(n);
            for _ in 0..1000 {
                let x: f64 = rng.gen();
                let back = decode(&encode(&[x], n).unwrap(), &fmt).unwrap()[0];
                let err = (x - back).abs();
                assert!(err < (0.5f64).powi(n as i32), "n={n} x={x} err={err}");
                assert!(back <= x, "floor quantization is one-sided");
            }
        }
    }

    /// Evaluate a compiled program circuit on a grid point.
    fn run_circuit(c: &Circuit, grid: &[u64], n: u32) -> Vec<bool> {
        let mut bits = Vec::new();
        for &g in grid {
            bits.extend(index_to_bits(n as usize, g));
        }
        c.evaluate(&bits).unwrap()
    }

    #[test]
    fn identity_program_compiles_to_identity() {
        let p = corpus::identity_program();
        let (n, m_out) = (4u32, 4u32);
        let c = compile_bitprogram(&p, n, m_out).unwrap();
        assert!(c.validate().is_empty());
        let fmt = FixedPointFormat::output(m_out);
        for g in 0..16u64 {
            let out = decode(&run_circuit(&c, &[g], n), &fmt).unwrap()[0];
            assert_eq!(out, g as f64 / 16.0);
        }
    }

    #[test]
    fn doubling_program_matches_integer_oracle() {
        let p = corpus::doubling_program();
        let (n, m_out) = (3u32, 4u32);
        let c = compile_bitprogram(&p, n, m_out).unwrap();
        let fmt = FixedPointFormat::output(m_out);
        for g in 0..8u64 {
            let out = decode(&run_circuit(&c, &[g], n), &fmt).unwrap()[0];
            assert_eq!(out, 2.0 * g as f64 / 8.0, "g={g}");
        }
    }

    #[test]
    fn squaring_program_error_within_bound_on_grid() {
        // Exact rational oracle on the grid: x = k/16, x² = k²/256; with
        // m_out = 8 the product is exactly representable.
        let p = corpus::squaring_program();
        let (n, m_out) = (4u32, 8u32);
        let c = compile_bitprogram(&p, n, m_out).unwrap();
        let fmt = FixedPointFormat::output(m_out);
        for k in 0..16u64 {
            let out = decode(&run_circuit(&c, &[k], n), &fmt).unwrap()[0];
            let exact = (k * k) as f64 / 256.0;
            assert!((out - exact).abs() <= (0.5f64).powi(4), "k={k}");
            assert_eq!(out, exact, "k²/256 is representable at m_out=8");
        }
    }

    #[test]
    fn circuit_agrees_with_integer_semantics_everywhere() {
        for (p, n, m_out) in [
            (corpus::squaring_program(), 5u32, 4u32),
            (corpus::doubling_program(), 4, 6),
            (corpus::zero_program(), 3, 3),
        ] {
            let c = compile_bitprogram(&p, n, m_out).unwrap();
            let width = (m_out + OUT_INT_BITS) as usize;
            for g in 0..(1u64 << n) {
                let got = run_circuit(&c, &[g], n);
                let want = eval_bitprogram(&p, &[g], n, m_out).unwrap();
                let got_ints: Vec<i64> = got
                    .chunks(width)
                    .map(|wbits| {
                        let raw = crate::bits::bits_to_index(wbits) as i64;
                        if wbits[0] {
                            raw - (1 << width)
                        } else {
                            raw
                        }
                    })
                    .collect();
                assert_eq!(got_ints, want, "{} g={g}", p.name);
            }
        }
    }

    #[test]
    fn sub_and_shift_instructions() {
        // (x − x/2) via SHIFT alignment: shift x right by 1 zero-extends the
        // point; align by shifting the halved value's point back.
        let p = BitProgram {
            name: "half".into(),
            dim: 1,
            instructions: vec![
                Instr::Load { coord: 0 },
                Instr::Shift { a: 0, by: -1 }, // same value, finer point
                Instr::Shift { a: 0, by: 0 },
                Instr::Sub { a: 1, b: 1 },
                Instr::Output { a: 3 },
            ],
        };
        let c = compile_bitprogram(&p, 4, 5).unwrap();
        let fmt = FixedPointFormat::output(5);
        for g in 0..16u64 {
            let out = decode(&run_circuit(&c, &[g], 4), &fmt).unwrap()[0];
            assert_eq!(out, 0.0);
        }
    }

    #[test]
    fn program_validation_rejects_bad_refs() {
        let p = BitProgram {
            name: "bad".into(),
            dim: 1,
            instructions: vec![Instr::Add { a: 0, b: 1 }, Instr::Output { a: 0 }],
        };
        assert!(matches!(p.validate(), Err(PrecisionError::BadProgram(_))));
        let p = BitProgram {
            name: "wide".into(),
            dim: 1,
            instructions: vec![Instr::Load { coord: 0 }, Instr::Output { a: 0 }],
        };
        assert!(matches!(
            compile_bitprogram(&p, 60, 4),
            Err(PrecisionError::WidthOverflow { .. })
        ));
    }

    #[test]
    fn program_json_round_trip() {
        let p = corpus::squaring_program();
        let back = BitProgram::from_json(&p.to_json()).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn machine_source_builds_equivalent_circuit() {
        let fam = PrecisionFamily::machine(corpus::parity_machine(), 3, 1);
        let c = fam.circuit().unwrap();
        let direct = corpus::parity_tree_circuit(3);
        assert_eq!(
            c.brute_force_equiv(&direct).unwrap(),
            Equivalence::Equivalent
        );
    }

    #[test]
    fn end_to_end_squaring_within_lipschitz_bound() {
        let fam = PrecisionFamily::program(corpus::squaring_program(), 6, 4);
        let report = end_to_end_check(&fam, &|x| vec![x[0] * x[0]], 2.0, 1000, 11).unwrap();
        assert!(
            report.pass,
            "measured {} > bound {}",
            report.max_err, report.bound
        );
    }

    #[test]
    fn end_to_end_constant_zero_is_exact() {
        let fam = PrecisionFamily::program(corpus::zero_program(), 5, 4);
        let report = end_to_end_check(&fam, &|_| vec![0.0], 0.0, 200, 3).unwrap();
        assert_eq!(report.max_err, 0.0);
    }

    #[test]
    fn end_to_end_machine_source_identity_within_quantization_bound() {
        // Machine path: the immediate-halt identity machine echoes the grid
        // bits, so the decoded value is the floor-quantized x.
        let fam = PrecisionFamily::machine(corpus::identity_machine(4), 4, 4);
        let report = end_to_end_check(&fam, &|x| vec![x[0]], 1.0, 300, 21).unwrap();
        assert!(report.pass, "measured {} > bound {}", report.max_err, report.bound);
        assert!(report.max_err <= 2.0 * (0.5f64).powi(4));
    }

    #[test]
    fn end_to_end_identity_within_quantization_bound() {
        let fam = PrecisionFamily::program(corpus::identity_program(), 5, 5);
        let report = end_to_end_check(&fam, &|x| vec![x[0]], 1.0, 500, 5).unwrap();
        // ε + L_f 2^−n = 2·2^−n at n = m_out.
        assert!(report.pass);
        assert!(report.max_err <= 2.0 * (0.5f64).powi(5));
    }

    #[test]
    fn error_is_monotone_in_m_out_on_fixed_samples() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(19);
        let xs: Vec<f64> = (0..200).map(|_| rng.gen()).collect();
        let n = 6u32;
        let mut prev = f64::INFINITY;
        for m_out in [3u32, 4, 5, 6, 8] {
            let p = corpus::squaring_program();
            let c = compile_bitprogram(&p, n, m_out).unwrap();
            let fmt = FixedPointFormat::output(m_out);
            let mut max_err: f64 = 0.0;
            for &x in &xs {
                let g = encode_grid(&[x], n).unwrap();
                let out = decode(&run_circuit(&c, &g, n), &fmt).unwrap()[0];
                max_err = max_err.max((out - x * x).abs());
            }
            assert!(max_err <= prev + 1e-15, "m_out={m_out}: {max_err} > {prev}");
            prev = max_err;
        }
    }
}
