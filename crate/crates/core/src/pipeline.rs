//! Full-chain orchestration: source → circuit → certificate → network,
//! with self-checks, machine-readable artifacts, and a flat CSV report.
//! Reruns with identical parameters and seed produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bits::index_to_bits;
use crate::circuit::SparsityCertificate;
use crate::neuralize::{self, ErrorBudget, GadgetMode};
use crate::precision::{self, SourceSpec};

#[derive(Debug, Error)]
pub enum PipelineError {
    /// Malformed inputs or unreadable files (exit code 2).
    #[error("input error: {0}")]
    Input(String),
    /// No feasible configuration, e.g. an unsatisfiable budget (exit 3).
    #[error("infeasible configuration: {0}")]
    Infeasible(String),
    /// A stage self-check failed (exit 1).
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::CheckFailed(_) => 1,
            PipelineError::Input(_) => 2,
            PipelineError::Infeasible(_) => 3,
        }
    }
}

/// Resolved run parameters (the CLI merges config file, flags, and the
/// SPARSEC_SEED environment variable into this).
#[derive(Clone, Debug)]
pub struct PipelineParams {
    pub n: u32,
    pub m_out: u32,
    pub robust: bool,
    pub delta: f64,
    /// Total error budget; defaults to 2^−m_out.
    pub eps_total: Option<f64>,
    pub samples: usize,
    pub check: bool,
    pub seed: u64,
}

impl PipelineParams {
    pub fn new(n: u32, m_out: u32) -> PipelineParams {
        PipelineParams {
            n,
            m_out,
            robust: false,
            delta: 0.1,
            eps_total: None,
            samples: 200,
            check: true,
            seed: 0,
        }
    }
}

/// What a pipeline run produced and measured.
#[derive(Clone, Debug)]
pub struct PipelineSummary {
    pub certificate: SparsityCertificate,
    pub network_layers: usize,
    pub network_max_width: usize,
    /// Largest per-layer ∞-norm of the network.
    pub k_measured: f64,
    pub eps_total: f64,
    pub eps_gate: f64,
    /// Sampled max |network output − circuit bit|.
    pub max_net_err: f64,
    /// Sampled circuit-vs-source disagreements (must be 0).
    pub mismatches: usize,
    pub pass: bool,
    pub circuit_path: PathBuf,
    pub net_path: PathBuf,
    pub report_path: PathBuf,
}

/// Run the chain on `source`, writing `circuit.json`, `net.json`, and
/// `report.csv` under `out_dir`.
pub fn run_pipeline(
    source: &SourceSpec,
    params: &PipelineParams,
    out_dir: &Path,
) -> Result<PipelineSummary, PipelineError> {
    let family = precision::PrecisionFamily {
        source: source.clone(),
        n: params.n,
        m_out: params.m_out,
    };
    let circuit = family.circuit().map_err(|e| match e {
        precision::PrecisionError::WidthOverflow { .. } => PipelineError::Infeasible(e.to_string()),
        other => PipelineError::Input(other.to_string()),
    })?;
    let violations = circuit.validate();
    if !violations.is_empty() {
        return Err(PipelineError::CheckFailed(format!(
            "circuit validation: {}",
            violations[0]
        )));
    }
    let cert = circuit
        .certify_sparsity()
        .map_err(|e| PipelineError::CheckFailed(e.to_string()))?;

    let eps_total = params
        .eps_total
        .unwrap_or((0.5f64).powi(params.m_out as i32));
    let budget = ErrorBudget::allocate(cert.l.max(1), 1.0, eps_total)
        .map_err(|e| PipelineError::Infeasible(e.to_string()))?;
    let mode = if params.robust {
        GadgetMode::Robust {
            delta: params.delta,
            eps_gate: budget.eps_gate,
        }
    } else {
        GadgetMode::Exact
    };
    let net = neuralize::neuralize_circuit(&circuit, mode, &budget)
        .map_err(|e| PipelineError::Infeasible(e.to_string()))?;

    // Stage checks over seeded samples: the circuit against the source
    // semantics, and the network against the circuit.
    let mut mismatches = 0usize;
    let mut max_net_err: f64 = 0.0;
    if params.check {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for _ in 0..params.samples {
            let (input_bits, expected) = match source {
                SourceSpec::Program(p) => {
                    let grid: Vec<u64> = (0..p.dim)
                        .map(|_| rng.gen_range(0..(1u64 << params.n)))
                        .collect();
                    let mut bits = Vec::new();
                    for &g in &grid {
                        bits.extend(index_to_bits(params.n as usize, g));
                    }
                    let ints = precision::eval_bitprogram(p, &grid, params.n, params.m_out)
                        .map_err(|e| PipelineError::Input(e.to_string()))?;
                    let width = (params.m_out + precision::OUT_INT_BITS) as usize;
                    let mut expected = Vec::with_capacity(ints.len() * width);
                    for v in ints {
                        for j in (0..width).rev() {
                            expected.push((v >> j) & 1 == 1);
                        }
                    }
                    (bits, expected)
                }
                SourceSpec::Machine(m) => {
                    let bits: Vec<bool> = (0..params.n).map(|_| rng.gen()).collect();
                    let bound = m
                        .time_bound_poly(params.n as usize, m.output_cells)
                        .map_err(|e| PipelineError::Input(e.to_string()))?;
                    let trace = m
                        .simulate(&bits, bound)
                        .map_err(|e| PipelineError::CheckFailed(e.to_string()))?;
                    (bits, trace.output_bits)
                }
            };
            let got = circuit
                .evaluate(&input_bits)
                .map_err(|e| PipelineError::CheckFailed(e.to_string()))?;
            if got != expected {
                mismatches += 1;
            }
            let reals: Vec<f64> = input_bits.iter().map(|&b| f64::from(u8::from(b))).collect();
            let out = net
                .forward(&reals)
                .map_err(|e| PipelineError::CheckFailed(e.to_string()))?;
            for (o, &bit) in out.iter().zip(&got) {
                max_net_err = max_net_err.max((o - f64::from(u8::from(bit))).abs());
            }
        }
    }
    let pass = mismatches == 0 && max_net_err <= eps_total;

    let k_measured = net.layer_norms().iter().copied().fold(0.0, f64::max);
    let network_max_width = net.layers.iter().map(|l| l.units.len()).max().unwrap_or(0);

    std::fs::create_dir_all(out_dir)
        .map_err(|e| PipelineError::Input(format!("cannot create {}: {e}", out_dir.display())))?;
    let circuit_path = out_dir.join("circuit.json");
    let net_path = out_dir.join("net.json");
    let report_path = out_dir.join("report.csv");

    let mut report = String::from("stage,metric,value\n");
    let source_name = match source {
        SourceSpec::Program(p) => format!("program:{}", p.name),
        SourceSpec::Machine(m) => format!("machine:{}", m.name),
    };
    let rows: Vec<(&str, &str, String)> = vec![
        ("config", "source", source_name),
        ("config", "n", params.n.to_string()),
        ("config", "m_out", params.m_out.to_string()),
        (
            "config",
            "mode",
            if params.robust {
                "robust".into()
            } else {
                "exact".into()
            },
        ),
        ("config", "seed", params.seed.to_string()),
        ("config", "samples", params.samples.to_string()),
        ("config", "check", params.check.to_string()),
        ("circuit", "inputs", cert.input_bits.to_string()),
        ("circuit", "outputs", cert.output_bits.to_string()),
        ("circuit", "k", cert.k.to_string()),
        ("circuit", "s", cert.s.to_string()),
        ("circuit", "l", cert.l.to_string()),
        ("budget", "eps_total", format!("{eps_total:e}")),
        ("budget", "eps_gate", format!("{:e}", budget.eps_gate)),
        ("network", "layers", net.layers.len().to_string()),
        ("network", "max_width", network_max_width.to_string()),
        ("network", "k_measured", format!("{k_measured}")),
        ("check", "mismatches", mismatches.to_string()),
        ("check", "max_net_err", format!("{max_net_err:e}")),
        ("check", "pass", pass.to_string()),
    ];
    for (stage, metric, value) in rows {
        let _ = writeln!(report, "{stage},{metric},{value}");
    }

    std::fs::write(&circuit_path, circuit.to_json())
        .map_err(|e| PipelineError::Input(e.to_string()))?;
    std::fs::write(&net_path, net.to_json()).map_err(|e| PipelineError::Input(e.to_string()))?;
    std::fs::write(&report_path, report).map_err(|e| PipelineError::Input(e.to_string()))?;

    let summary = PipelineSummary {
        certificate: cert,
        network_layers: net.layers.len(),
        network_max_width,
        k_measured,
        eps_total,
        eps_gate: budget.eps_gate,
        max_net_err,
        mismatches,
        pass,
        circuit_path,
        net_path,
        report_path,
    };
    if !pass {
        return Err(PipelineError::CheckFailed(format!(
            "{mismatches} circuit mismatches, max net err {max_net_err:e} vs budget {eps_total:e}"
        )));
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn squaring_pipeline_passes_checks() {
        let dir = tempfile::tempdir().unwrap();
        let source = SourceSpec::Program(corpus::squaring_program());
        let mut params = PipelineParams::new(6, 4);
        params.seed = 42;
        let summary = run_pipeline(&source, &params, dir.path()).unwrap();
        assert!(summary.pass);
        assert_eq!(summary.mismatches, 0);
        assert!(summary.circuit_path.exists());
        assert!(summary.net_path.exists());
        assert!(summary.report_path.exists());
    }

    #[test]
    fn machine_pipeline_passes_checks() {
        let dir = tempfile::tempdir().unwrap();
        let source = SourceSpec::Machine(corpus::parity_machine());
        let mut params = PipelineParams::new(4, 1);
        params.seed = 7;
        let summary = run_pipeline(&source, &params, dir.path()).unwrap();
        assert!(summary.pass);
    }

    #[test]
    fn rerun_is_byte_identical() {
        let source = SourceSpec::Program(corpus::squaring_program());
        let mut params = PipelineParams::new(5, 3);
        params.seed = 1234;
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        run_pipeline(&source, &params, dir_a.path()).unwrap();
        run_pipeline(&source, &params, dir_b.path()).unwrap();
        for file in ["circuit.json", "net.json", "report.csv"] {
            let a = std::fs::read(dir_a.path().join(file)).unwrap();
            let b = std::fs::read(dir_b.path().join(file)).unwrap();
            assert_eq!(a, b, "{file}");
        }
    }

    #[test]
    fn infeasible_width_reports_exit_code_3() {
        let dir = tempfile::tempdir().unwrap();
        let source = SourceSpec::Program(corpus::squaring_program());
        let params = PipelineParams::new(40, 30);
        let err = run_pipeline(&source, &params, dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }
}
