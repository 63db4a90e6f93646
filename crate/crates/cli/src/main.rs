//! `sparsec`: compile time-bounded computations into bounded-fan-in
//! circuits, threshold circuits, and ReLU networks, and run the companion
//! verifications (Fourier composition, smooth lift, trace learning, the
//! depth-efficiency demo).
//!
//! Exit codes: 0 ok, 1 check failure, 2 input error, 3 infeasible
//! configuration. `SPARSEC_SEED` supplies the default seed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use sparsec_core::circuit::{Circuit, Equivalence};
use sparsec_core::ltf::{self, LowerConfig, LtfCircuit};
use sparsec_core::neuralize::{self, ErrorBudget, GadgetMode};
use sparsec_core::pipeline::{run_pipeline, PipelineError, PipelineParams};
use sparsec_core::precision::{BitProgram, SourceSpec};
use sparsec_core::tm::TuringMachine;
use sparsec_core::{arlearn, bits, fourier, lift, unroll};

type CmdResult = Result<(), PipelineError>;

#[derive(Parser)]
#[command(name = "sparsec", version, about = "bounded-fan-in circuit pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a machine on an input.
    Tm {
        #[command(subcommand)]
        cmd: TmCmd,
    },
    /// Unroll a machine run into a circuit.
    Unroll(UnrollArgs),
    /// Evaluate, validate, certify, or compare circuits.
    Circuit {
        #[command(subcommand)]
        cmd: CircuitCmd,
    },
    /// Threshold-circuit conversions.
    Ltf {
        #[command(subcommand)]
        cmd: LtfCmd,
    },
    /// Compile a circuit into a ReLU network.
    Neuralize(NeuralizeArgs),
    /// Run the full source → circuit → network chain with checks.
    Pipeline(PipelineArgs),
    /// Sparse Fourier composition tools.
    Fourier {
        #[command(subcommand)]
        cmd: FourierCmd,
    },
    /// Evaluate the multilinear lift of a circuit.
    Lift(LiftArgs),
    /// Trace datasets and autoregressive predictors.
    Arlearn {
        #[command(subcommand)]
        cmd: ArlearnCmd,
    },
    /// Built-in demonstrations.
    Demo {
        #[command(subcommand)]
        cmd: DemoCmd,
    },
}

#[derive(Subcommand)]
enum TmCmd {
    /// Run a machine and print its trace summary and output bits.
    Simulate {
        #[arg(long)]
        machine: PathBuf,
        #[arg(long)]
        input: String,
        /// Step bound; "auto" evaluates the machine's time polynomial.
        #[arg(long, default_value = "auto")]
        bound: String,
    },
}

#[derive(Args)]
struct UnrollArgs {
    #[arg(long)]
    machine: PathBuf,
    #[arg(long)]
    n: usize,
    /// Step bound; "auto" evaluates the machine's time polynomial.
    #[arg(long, default_value = "auto")]
    bound: String,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a growth report across n = 1..=n.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CircuitCmd {
    Eval {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        input: String,
    },
    Validate {
        #[arg(long)]
        circuit: PathBuf,
    },
    Certify {
        #[arg(long)]
        circuit: PathBuf,
    },
    Equiv {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
    },
}

#[derive(Subcommand)]
enum LtfCmd {
    /// Gate-for-gate Boolean → threshold conversion.
    FromBool {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lower a threshold circuit to fan-in-2 Boolean gates.
    Lower {
        #[arg(long)]
        ltf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a threshold circuit.
    Eval {
        #[arg(long)]
        ltf: PathBuf,
        #[arg(long)]
        input: String,
    },
    /// Check circuit ≡ lower(from_bool(circuit)) exhaustively.
    Roundtrip {
        #[arg(long)]
        circuit: PathBuf,
    },
}

#[derive(Args)]
struct NeuralizeArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Total error budget (defaults to 2^-8).
    #[arg(long, default_value_t = 0.00390625)]
    eps: f64,
    #[arg(long, default_value = "exact")]
    mode: String,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    program: Option<PathBuf>,
    #[arg(long)]
    machine: Option<PathBuf>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    mout: Option<u32>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Run stage checks (config may also set "check").
    #[arg(long)]
    check: bool,
}

#[derive(Subcommand)]
enum FourierCmd {
    /// Compose f with inner polynomials g (repeat --g in order).
    Compose {
        #[arg(long)]
        f: PathBuf,
        #[arg(long = "g", required = true)]
        gs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compose and check the degree/sparsity bounds.
    Check {
        #[arg(long)]
        f: PathBuf,
        #[arg(long = "g", required = true)]
        gs: Vec<PathBuf>,
    },
    /// Randomized composition sweep.
    Sweep {
        #[arg(long, default_value_t = 100)]
        instances: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct LiftArgs {
    #[arg(long)]
    circuit: PathBuf,
    /// Comma-separated coordinates in [0,1].
    #[arg(long)]
    eval: String,
}

#[derive(Subcommand)]
enum ArlearnCmd {
    /// Generate a trace dataset (JSON lines).
    Gen {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit per-node tables and report pattern coverage.
    Fit {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Fit, then compare the chained predictor against the circuit on all
    /// inputs.
    Eval {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Empirical sample-complexity curve.
    Curve {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, default_value = "0.05,0.1,0.2")]
        deltas: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Subcommand)]
enum DemoCmd {
    /// Depth-L tent composition and its exact linear-region count.
    Telgarsky {
        #[arg(long, default_value_t = 10)]
        depth: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    // Die quietly when stdout closes early (e.g. piped into `head`) instead
    // of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input(e.to_string())
}

fn check_err(e: impl std::fmt::Display) -> PipelineError {
    PipelineError::CheckFailed(e.to_string())
}

fn read(path: &PathBuf) -> Result<String, PipelineError> {
    std::fs::read_to_string(path)
        .map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))
}

fn write_out(path: &Option<PathBuf>, content: &str, what: &str) -> CmdResult {
    match path {
        Some(p) => {
            std::fs::write(p, content)
                .map_err(|e| input_err(format!("cannot write {}: {e}", p.display())))?;
            println!("{what} written to {}", p.display());
            Ok(())
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn env_seed() -> u64 {
    std::env::var("SPARSEC_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(0)
}

fn load_machine(path: &PathBuf) -> Result<TuringMachine, PipelineError> {
    TuringMachine::from_json(&read(path)?).map_err(input_err)
}

fn load_circuit(path: &PathBuf) -> Result<Circuit, PipelineError> {
    let c = Circuit::from_json(&read(path)?)
        .map_err(|e| input_err(format!("bad circuit JSON: {e}")))?;
    let violations = c.validate();
    if !violations.is_empty() {
        return Err(input_err(format!("invalid circuit: {}", violations[0])));
    }
    Ok(c)
}

fn resolve_bound(m: &TuringMachine, n: usize, bound: &str) -> Result<usize, PipelineError> {
    if bound == "auto" {
        m.time_bound_poly(n, m.output_cells).map_err(input_err)
    } else {
        bound
            .parse()
            .map_err(|e| input_err(format!("bad --bound {bound:?}: {e}")))
    }
}

fn dispatch(cmd: Command) -> CmdResult {
    match cmd {
        Command::Tm { cmd } => run_tm(cmd),
        Command::Unroll(args) => run_unroll(args),
        Command::Circuit { cmd } => run_circuit(cmd),
        Command::Ltf { cmd } => run_ltf(cmd),
        Command::Neuralize(args) => run_neuralize(args),
        Command::Pipeline(args) => run_pipeline_cmd(args),
        Command::Fourier { cmd } => run_fourier(cmd),
        Command::Lift(args) => run_lift(args),
        Command::Arlearn { cmd } => run_arlearn(cmd),
        Command::Demo { cmd } => run_demo(cmd),
    }
}

fn run_tm(cmd: TmCmd) -> CmdResult {
    let TmCmd::Simulate {
        machine,
        input,
        bound,
    } = cmd;
    let m = load_machine(&machine)?;
    let input = sparsec_core::tm::parse_input(&input).map_err(input_err)?;
    let bound = resolve_bound(&m, input.len(), &bound)?;
    let trace = m.simulate(&input, bound).map_err(check_err)?;
    println!("machine: {}", m.name);
    println!(
        "halted: {} in {} steps (bound {bound})",
        trace.halted, trace.steps_used
    );
    println!("output: {}", bits::format_bits(&trace.output_bits));
    Ok(())
}

fn run_unroll(args: UnrollArgs) -> CmdResult {
    let m = load_machine(&args.machine)?;
    let bound = resolve_bound(&m, args.n, &args.bound)?;
    let circuit = unroll::unroll(&m, args.n, bound).map_err(input_err)?;
    let cert = circuit.certify_sparsity().map_err(check_err)?;
    println!(
        "unrolled {} at n={} T={bound}: k={} s={} l={}",
        m.name, args.n, cert.k, cert.s, cert.l
    );
    let s_bound = unroll::size_bound(&m, args.n, bound);
    let l_bound = unroll::depth_bound(&m, bound);
    println!("closed-form bounds: s <= {s_bound}, l <= {l_bound:.1}");
    if cert.s as u64 > s_bound || cert.l as f64 > l_bound {
        return Err(check_err("certificate exceeds the closed-form bound"));
    }
    if let Some(out) = &args.out {
        std::fs::write(out, circuit.to_json()).map_err(input_err)?;
        println!("circuit written to {}", out.display());
    }
    if let Some(report_path) = &args.report {
        let ns: Vec<usize> = (1..=args.n).collect();
        let report = unroll::build_report(&SourceSpec::Machine(m), &ns, 1).map_err(input_err)?;
        std::fs::write(report_path, report.to_csv()).map_err(input_err)?;
        println!(
            "report written to {} (log-log slope {:.2})",
            report_path.display(),
            report.slope_s_vs_t
        );
    }
    Ok(())
}

fn run_circuit(cmd: CircuitCmd) -> CmdResult {
    match cmd {
        CircuitCmd::Eval { circuit, input } => {
            let c = load_circuit(&circuit)?;
            let input = bits::parse_bits(&input)
                .map_err(|ch| input_err(format!("bad input bit {ch:?}")))?;
            let out = c.evaluate(&input).map_err(input_err)?;
            println!("{}", bits::format_bits(&out));
            Ok(())
        }
        CircuitCmd::Validate { circuit } => {
            let c = Circuit::from_json(&read(&circuit)?)
                .map_err(|e| input_err(format!("bad circuit JSON: {e}")))?;
            let violations = c.validate();
            if violations.is_empty() {
                println!("ok: {} nodes", c.nodes.len());
                Ok(())
            } else {
                for v in &violations {
                    println!("violation: {v}");
                }
                Err(check_err(format!("{} violations", violations.len())))
            }
        }
        CircuitCmd::Certify { circuit } => {
            let c = load_circuit(&circuit)?;
            let cert = c.certify_sparsity().map_err(check_err)?;
            println!(
                "k={} s={} l={} inputs={} outputs={}",
                cert.k, cert.s, cert.l, cert.input_bits, cert.output_bits
            );
            Ok(())
        }
        CircuitCmd::Equiv { a, b } => {
            let ca = load_circuit(&a)?;
            let cb = load_circuit(&b)?;
            match ca.brute_force_equiv(&cb).map_err(input_err)? {
                Equivalence::Equivalent => {
                    println!("equivalent over all {} inputs", 1u64 << ca.input_count());
                    Ok(())
                }
                Equivalence::Counterexample(x) => {
                    println!("counterexample: {}", bits::format_bits(&x));
                    Err(check_err("circuits differ"))
                }
            }
        }
    }
}

fn run_ltf(cmd: LtfCmd) -> CmdResult {
    match cmd {
        LtfCmd::FromBool { circuit, out } => {
            let c = load_circuit(&circuit)?;
            let l = ltf::bool_to_ltf(&c);
            println!("{} threshold nodes, r_max={}", l.nodes.len(), l.r_max());
            write_out(&out, &l.to_json(), "threshold circuit")
        }
        LtfCmd::Lower { ltf: ltf_path, out } => {
            let l = LtfCircuit::from_json(&read(&ltf_path)?).map_err(input_err)?;
            let c = ltf::ltf_to_bfi(&l, &LowerConfig::default()).map_err(input_err)?;
            let cert = c.certify_sparsity().map_err(check_err)?;
            println!("lowered: k={} s={} l={}", cert.k, cert.s, cert.l);
            write_out(&out, &c.to_json(), "circuit")
        }
        LtfCmd::Eval {
            ltf: ltf_path,
            input,
        } => {
            let l = LtfCircuit::from_json(&read(&ltf_path)?).map_err(input_err)?;
            let input = bits::parse_bits(&input)
                .map_err(|ch| input_err(format!("bad input bit {ch:?}")))?;
            let out = l.evaluate(&input).map_err(input_err)?;
            println!("{}", bits::format_bits(&out));
            Ok(())
        }
        LtfCmd::Roundtrip { circuit } => {
            let c = load_circuit(&circuit)?;
            let report = ltf::roundtrip_check(&c).map_err(input_err)?;
            println!(
                "size x{:.2} ({} -> {}), depth x{:.2} ({} -> {})",
                report.size_factor,
                report.original.s,
                report.lowered.s,
                report.depth_factor,
                report.original.l,
                report.lowered.l
            );
            match report.verdict {
                Equivalence::Equivalent => {
                    println!("round trip equivalent");
                    Ok(())
                }
                Equivalence::Counterexample(x) => {
                    println!("counterexample: {}", bits::format_bits(&x));
                    Err(check_err("round trip diverged"))
                }
            }
        }
    }
}

fn run_neuralize(args: NeuralizeArgs) -> CmdResult {
    let c = load_circuit(&args.circuit)?;
    let cert = c.certify_sparsity().map_err(check_err)?;
    let budget = ErrorBudget::allocate(cert.l.max(1), 1.0, args.eps)
        .map_err(|e| PipelineError::Infeasible(e.to_string()))?;
    let mode = match args.mode.as_str() {
        "exact" => GadgetMode::Exact,
        "robust" => GadgetMode::Robust {
            delta: args.delta,
            eps_gate: budget.eps_gate,
        },
        other => return Err(input_err(format!("unknown mode {other:?}"))),
    };
    let net = neuralize::neuralize_circuit(&c, mode, &budget)
        .map_err(|e| PipelineError::Infeasible(e.to_string()))?;
    let k = net.layer_norms().iter().copied().fold(0.0, f64::max);
    println!(
        "network: {} layers, max width {}, K={k:.2}, eps_gate={:.3e}",
        net.layers.len(),
        net.layers.iter().map(|l| l.units.len()).max().unwrap_or(0),
        budget.eps_gate
    );
    write_out(&args.out, &net.to_json(), "network")
}

#[derive(Deserialize, Default)]
struct PipelineFile {
    source: Option<PipelineSourceFile>,
    n: Option<u32>,
    m_out: Option<u32>,
    mode: Option<String>,
    eps_total: Option<f64>,
    delta: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
    check: Option<bool>,
    out_dir: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum PipelineSourceFile {
    Program { path: PathBuf },
    Machine { path: PathBuf },
}

fn run_pipeline_cmd(args: PipelineArgs) -> CmdResult {
    let file: PipelineFile = match &args.config {
        Some(path) => {
            serde_json::from_str(&read(path)?).map_err(|e| input_err(format!("bad config: {e}")))?
        }
        None => PipelineFile::default(),
    };
    // Flags win over config fields.
    let source = if let Some(p) = &args.program {
        SourceSpec::Program(BitProgram::from_json(&read(p)?).map_err(input_err)?)
    } else if let Some(m) = &args.machine {
        SourceSpec::Machine(load_machine(m)?)
    } else {
        match &file.source {
            Some(PipelineSourceFile::Program { path }) => {
                SourceSpec::Program(BitProgram::from_json(&read(path)?).map_err(input_err)?)
            }
            Some(PipelineSourceFile::Machine { path }) => SourceSpec::Machine(load_machine(path)?),
            None => return Err(input_err("no source: pass --program/--machine or a config")),
        }
    };
    let n = args.n.or(file.n).ok_or_else(|| input_err("missing --n"))?;
    let m_out = args
        .mout
        .or(file.m_out)
        .ok_or_else(|| input_err("missing --mout"))?;
    let mode = args.mode.or(file.mode).unwrap_or_else(|| "exact".into());
    let robust = match mode.as_str() {
        "exact" => false,
        "robust" => true,
        other => return Err(input_err(format!("unknown mode {other:?}"))),
    };
    let params = PipelineParams {
        n,
        m_out,
        robust,
        delta: args.delta.or(file.delta).unwrap_or(0.1),
        eps_total: args.eps.or(file.eps_total),
        samples: args.samples.or(file.samples).unwrap_or(200),
        check: args.check || file.check.unwrap_or(true),
        seed: args.seed.or(file.seed).unwrap_or_else(env_seed),
    };
    let out_dir = args
        .out_dir
        .or(file.out_dir)
        .unwrap_or_else(|| PathBuf::from("sparsec-out"));
    let summary = run_pipeline(&source, &params, &out_dir)?;
    println!(
        "circuit: k={} s={} l={}",
        summary.certificate.k, summary.certificate.s, summary.certificate.l
    );
    println!(
        "network: {} layers, max width {}, K={:.2}",
        summary.network_layers, summary.network_max_width, summary.k_measured
    );
    println!(
        "checks: {} mismatches, max net err {:.3e} (budget {:.3e})",
        summary.mismatches, summary.max_net_err, summary.eps_total
    );
    println!("artifacts: {}", out_dir.display());
    Ok(())
}

fn load_poly(path: &PathBuf) -> Result<fourier::FourierPoly, PipelineError> {
    fourier::FourierPoly::from_json(&read(path)?).map_err(input_err)
}

fn run_fourier(cmd: FourierCmd) -> CmdResult {
    match cmd {
        FourierCmd::Compose { f, gs, out } => {
            let f = load_poly(&f)?;
            let gs: Result<Vec<_>, _> = gs.iter().map(load_poly).collect();
            let h = fourier::compose(&f, &gs?).map_err(input_err)?;
            println!("h: sparsity {} degree {}", h.sparsity(), h.degree());
            write_out(&out, &h.to_json(), "composition")
        }
        FourierCmd::Check { f, gs } => {
            let f = load_poly(&f)?;
            let gs: Result<Vec<_>, _> = gs.iter().map(load_poly).collect();
            let gs = gs?;
            let h = fourier::compose(&f, &gs).map_err(input_err)?;
            let report = fourier::check_bounds(&f, &gs, &h);
            println!(
                "deg(h)={} <= {} : {}",
                report.deg_h, report.deg_bound, report.deg_ok
            );
            println!(
                "s(h)={} <= min({}, {}) : {}",
                report.sparsity_h, report.bound_product, report.bound_binomial, report.sparsity_ok
            );
            if report.pass() {
                Ok(())
            } else {
                Err(check_err("composition bounds violated"))
            }
        }
        FourierCmd::Sweep { instances, seed } => {
            let seed = seed.unwrap_or_else(env_seed);
            let sweep = fourier::composition_sweep(instances, seed);
            let violations = sweep
                .iter()
                .filter(|i| !i.pointwise_ok || !i.bounds.pass())
                .count();
            let max_ratio = sweep.iter().map(|i| i.tightness).fold(0.0, f64::max);
            println!(
                "{instances} instances (seed {seed}): {violations} violations, max s(h)/bound = {max_ratio:.3}"
            );
            if violations == 0 {
                Ok(())
            } else {
                Err(check_err(format!("{violations} violating instances")))
            }
        }
    }
}

fn run_lift(args: LiftArgs) -> CmdResult {
    let c = load_circuit(&args.circuit)?;
    let lifted = lift::lift(&c).map_err(input_err)?;
    let x: Result<Vec<f64>, _> = args
        .eval
        .split(',')
        .map(str::trim)
        .map(str::parse)
        .collect();
    let x = x.map_err(|e| input_err(format!("bad --eval: {e}")))?;
    let out = lifted.evaluate(&x).map_err(input_err)?;
    println!(
        "{}",
        out.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    );
    Ok(())
}

fn run_arlearn(cmd: ArlearnCmd) -> CmdResult {
    match cmd {
        ArlearnCmd::Gen {
            circuit,
            samples,
            seed,
            out,
        } => {
            let c = load_circuit(&circuit)?;
            let seed = seed.unwrap_or_else(env_seed);
            let dataset = arlearn::generate_dataset(&c, samples, seed);
            println!(
                "{} sequences of length {} (seed {seed})",
                dataset.samples.len(),
                dataset.node_count
            );
            write_out(&out, &dataset.to_jsonl(), "dataset")
        }
        ArlearnCmd::Fit { circuit, data } => {
            let c = load_circuit(&circuit)?;
            let dataset =
                arlearn::TraceDataset::from_jsonl(&c.name, c.input_count(), 0, &read(&data)?)
                    .map_err(|e| input_err(format!("bad dataset: {e}")))?;
            let predictors = arlearn::fit(&c, &dataset);
            let uncovered: usize = predictors
                .iter()
                .map(|p| p.uncovered_patterns().len())
                .sum();
            println!(
                "{} predictors fitted from {} samples; {} uncovered patterns",
                predictors.len(),
                dataset.samples.len(),
                uncovered
            );
            Ok(())
        }
        ArlearnCmd::Eval { circuit, data } => {
            let c = load_circuit(&circuit)?;
            let dataset =
                arlearn::TraceDataset::from_jsonl(&c.name, c.input_count(), 0, &read(&data)?)
                    .map_err(|e| input_err(format!("bad dataset: {e}")))?;
            let predictors = arlearn::fit(&c, &dataset);
            if arlearn::agrees_everywhere(&c, &predictors).map_err(check_err)? {
                println!("chained predictor matches the circuit on all inputs");
                Ok(())
            } else {
                Err(check_err("chained predictor diverges from the circuit"))
            }
        }
        ArlearnCmd::Curve {
            circuit,
            deltas,
            trials,
            seed,
        } => {
            let c = load_circuit(&circuit)?;
            let deltas: Result<Vec<f64>, _> =
                deltas.split(',').map(str::trim).map(str::parse).collect();
            let deltas = deltas.map_err(|e| input_err(format!("bad --deltas: {e}")))?;
            let seed = seed.unwrap_or_else(env_seed);
            let curve = arlearn::sample_complexity_curve(&c, &deltas, trials, seed);
            println!("delta,n_min,reference");
            for p in curve {
                println!("{},{},{:.1}", p.delta, p.n_min, p.reference);
            }
            Ok(())
        }
    }
}

fn run_demo(cmd: DemoCmd) -> CmdResult {
    let DemoCmd::Telgarsky { depth, out } = cmd;
    let demo = neuralize::telgarsky_demo(depth).map_err(|e| input_err(e.to_string()))?;
    println!(
        "depth {depth}: {} linear pieces on [0,1]; a single hidden layer needs >= {} units to match",
        demo.region_count, demo.min_shallow_units
    );
    if let Some(out) = out {
        std::fs::write(&out, demo.network.to_json()).map_err(input_err)?;
        println!("network written to {}", out.display());
    }
    Ok(())
}
