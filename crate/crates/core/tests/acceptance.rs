//! Acceptance suite: one test per exit criterion, each printing a PASS/FAIL
//! line (run with `cargo test --test acceptance -- --nocapture` to see them).
//! Every tolerance is pinned here, not configurable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparsec_core::bits::index_to_bits;
use sparsec_core::circuit::{Circuit, CircuitBuilder, Equivalence, GateKind};
use sparsec_core::ltf::{self, LowerConfig};
use sparsec_core::neuralize::{self, gate_gadget, telgarsky_demo, GadgetMode};
use sparsec_core::pipeline::{run_pipeline, PipelineParams};
use sparsec_core::precision::{self, PrecisionFamily, SourceSpec};
use sparsec_core::tm::TuringMachine;
use sparsec_core::{arlearn, corpus, fourier, lift, stats, unroll};

fn report(criterion: u32, title: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:2} ({title}): {} — {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

/// The corpus machines with the input widths each supports.
fn machine_corpus(max_n: usize) -> Vec<(TuringMachine, Vec<usize>)> {
    let mut corpus_list = Vec::new();
    corpus_list.push((corpus::parity_machine(), (1..=max_n).collect::<Vec<_>>()));
    for n in 1..=max_n {
        corpus_list.push((corpus::identity_machine(n), vec![n]));
    }
    corpus_list.push((corpus::adder_machine(), vec![4]));
    corpus_list
}

#[test]
fn criterion_01_tm_to_circuit_equivalence() {
    let mut checked = 0u64;
    let mut pass = true;
    for (machine, ns) in machine_corpus(10) {
        for n in ns {
            let bound = machine.time_bound_poly(n, machine.output_cells).unwrap();
            let circuit = unroll::unroll(&machine, n, bound).unwrap();
            for idx in 0..(1u64 << n) {
                let input = index_to_bits(n, idx);
                let expected = machine.simulate(&input, bound).unwrap().output_bits;
                if circuit.evaluate(&input).unwrap() != expected {
                    pass = false;
                }
                checked += 1;
            }
        }
    }
    report(
        1,
        "machine-to-circuit equivalence",
        pass,
        &format!("{checked} exhaustive input evaluations, exact match required"),
    );
}

#[test]
fn criterion_02_sparsity_certificates_and_growth() {
    let mut pass = true;
    let mut details = String::new();
    for (machine, ns) in machine_corpus(8) {
        for n in ns {
            let bound = machine.time_bound_poly(n, machine.output_cells).unwrap();
            let circuit = unroll::unroll(&machine, n, bound).unwrap();
            let cert = circuit.certify_sparsity().unwrap();
            let s_bound = unroll::size_bound(&machine, n, bound);
            let l_bound = unroll::depth_bound(&machine, bound);
            if cert.k > 2 || cert.s as u64 > s_bound || cert.l as f64 > l_bound {
                pass = false;
                details = format!(
                    "{} n={n}: cert {:?} vs s<={s_bound} l<={l_bound}",
                    machine.name, cert
                );
            }
        }
    }
    let growth = unroll::build_report(
        &SourceSpec::Machine(corpus::parity_machine()),
        &[2, 3, 4, 5, 6, 7, 8],
        1,
    )
    .unwrap();
    let slope_ok = (1.5..=2.5).contains(&growth.slope_s_vs_t);
    if details.is_empty() {
        details = format!(
            "k<=2 and closed-form bounds hold; parity log-log slope {:.2} in [1.5, 2.5]",
            growth.slope_s_vs_t
        );
    }
    report(2, "sparsity certificates", pass && slope_ok, &details);
}

#[test]
fn criterion_03_threshold_roundtrip() {
    // Corpus circuits through the full Boolean -> LTF -> Boolean loop.
    let parity_machine = corpus::parity_machine();
    let bound = parity_machine.time_bound_poly(3, 1).unwrap();
    let corpus_circuits: Vec<Circuit> = vec![
        corpus::ripple_adder_circuit(2),
        corpus::parity_tree_circuit(8),
        {
            let mut b = CircuitBuilder::new("not1");
            let x = b.input();
            let g = b.not(x);
            b.mark_output(g);
            b.finish()
        },
        unroll::unroll(&parity_machine, 3, bound).unwrap(),
    ];
    let mut pass = true;
    for c in &corpus_circuits {
        let rt = ltf::roundtrip_check(c).unwrap();
        if rt.verdict != Equivalence::Equivalent {
            pass = false;
        }
    }

    // 100 random threshold gates, r <= 12, |w| <= 15, lowered and compared
    // exhaustively over all 2^r inputs.
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut xs = Vec::new();
    let mut depths = Vec::new();
    for _ in 0..100 {
        let r = rng.gen_range(2..=12usize);
        let weights: Vec<i64> = (0..r).map(|_| rng.gen_range(-15i64..=15)).collect();
        let theta = rng.gen_range(-30i64..=30);
        let gate = ltf::single_gate_circuit(&weights, theta);
        let lowered = ltf::ltf_to_bfi(&gate, &LowerConfig::default()).unwrap();
        for idx in 0..(1u64 << r) {
            let input = index_to_bits(r, idx);
            if lowered.evaluate(&input).unwrap() != gate.evaluate(&input).unwrap() {
                pass = false;
            }
        }
        xs.push(((r as f64) * 15.0).log2());
        depths.push(lowered.certify_sparsity().unwrap().l as f64);
    }
    // Fitted depth envelope against a·log2(r·W) + b.
    let (a, b) = stats::envelope_fit(&xs, &depths);
    let depth_ok = xs.iter().zip(&depths).all(|(&x, &d)| d <= a * x + b + 1e-9) && a <= 16.0;
    report(
        3,
        "threshold round trip",
        pass && depth_ok,
        &format!("corpus + 100 random gates exact; depth <= {a:.2}·log2(r·W) + {b:.2}"),
    );
}

#[test]
fn criterion_04_gadget_exactness() {
    let kinds = [GateKind::Not, GateKind::And2, GateKind::Or2, GateKind::Xor2];
    let mut pass = true;
    for kind in kinds {
        let g = gate_gadget(kind, GadgetMode::Exact).unwrap();
        if !g.matches_truth_table() {
            pass = false;
        }
    }
    // Robust mode: delta = 0.1, a 10^4-point sweep of each vertex
    // neighborhood per gate kind, error at most eps_gate.
    let delta = 0.1;
    let eps_gate = 1e-9;
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let mut max_err: f64 = 0.0;
    for kind in kinds {
        let g = gate_gadget(kind, GadgetMode::Robust { delta, eps_gate }).unwrap();
        let r = g.net.input_width;
        let exact = gate_gadget(kind, GadgetMode::Exact).unwrap();
        let sweeps = 10_000;
        for idx in 0..(1u32 << r) {
            let vertex: Vec<f64> = (0..r).map(|i| f64::from((idx >> i) & 1)).collect();
            let want = exact.net.forward(&vertex).unwrap()[0];
            for _ in 0..sweeps {
                let x: Vec<f64> = vertex
                    .iter()
                    .map(|&v| (v + rng.gen_range(-delta..=delta)).clamp(0.0, 1.0))
                    .collect();
                let out = g.net.forward(&x).unwrap()[0];
                max_err = max_err.max((out - want).abs());
            }
        }
    }
    let robust_ok = max_err <= eps_gate;
    report(
        4,
        "gadget exactness",
        pass && robust_ok,
        &format!("all truth tables exact on vertices; robust sweep max err {max_err:.2e} <= {eps_gate:.0e}"),
    );
}

#[test]
fn criterion_05_budget_soundness() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let points: Vec<Vec<f64>> = (0..=200).map(|i| vec![i as f64 / 200.0]).collect();
    let eps = 1e-3;
    let mut pass = true;
    let mut detail = String::new();
    for l in 2..=10usize {
        let mut exact = Vec::new();
        let mut approx = Vec::new();
        for _ in 0..l {
            let stage = telgarsky_demo(1).unwrap().network;
            let mut shifted = stage.clone();
            let sign: f64 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            shifted.layers.last_mut().unwrap().units[0].bias += sign * eps;
            exact.push(stage);
            approx.push(shifted);
        }
        let r = neuralize::verify_stack_budget(&exact, &approx, &points).unwrap();
        if !r.pass {
            pass = false;
        }
        if l == 10 {
            detail = format!(
                "L=2..10 stacks: measured err <= L·K^(L-1)·eps_gate everywhere (L=10: {:.2e} <= {:.2e})",
                r.max_err, r.bound
            );
        }
    }
    report(5, "telescoping budget", pass, &detail);
}

#[test]
fn criterion_06_end_to_end_squaring() {
    let mut pass = true;
    let mut worst = f64::NEG_INFINITY;
    for n in 4..=8u32 {
        for m_out in 3..=6u32 {
            let fam = PrecisionFamily::program(corpus::squaring_program(), n, m_out);
            let r =
                precision::end_to_end_check(&fam, &|x| vec![x[0] * x[0]], 2.0, 1000, 60).unwrap();
            if !r.pass {
                pass = false;
            }
            worst = worst.max(r.max_err - r.bound);
        }
    }
    report(
        6,
        "end-to-end squaring",
        pass,
        &format!(
            "(n, m_out) in 4..=8 x 3..=6, 1000 samples each; worst err-bound gap {worst:.2e} <= 0"
        ),
    );
}

#[test]
fn criterion_07_depth_efficiency_demo() {
    let mut pass = true;
    for l in 1..=16usize {
        let demo = telgarsky_demo(l).unwrap();
        if demo.region_count != 1u64 << l {
            pass = false;
        }
    }
    let demo10 = telgarsky_demo(10).unwrap();
    let ceiling_ok = demo10.min_shallow_units == 1023
        && neuralize::shallow_piece_ceiling(1022) < demo10.region_count
        && neuralize::shallow_piece_ceiling(1023) >= demo10.region_count;
    report(
        7,
        "depth-efficiency demo",
        pass && ceiling_ok,
        "region count 2^L exact for L <= 16; matching L=10 needs >= 1023 shallow units",
    );
}

#[test]
fn criterion_08_fourier_composition_bounds() {
    let sweep = fourier::composition_sweep(100, 80);
    let violations = sweep
        .iter()
        .filter(|i| !i.pointwise_ok || !i.bounds.pass())
        .count();

    // The 8-variable binary-tree product example.
    let mul2 = fourier::FourierPoly::variable(2, 0).mul(&fourier::FourierPoly::variable(2, 1));
    let leaves: Vec<_> = (0..8)
        .map(|i| fourier::FourierPoly::variable(8, i))
        .collect();
    let l1: Vec<_> = leaves
        .chunks(2)
        .map(|p| fourier::compose(&mul2, p).unwrap())
        .collect();
    let l2: Vec<_> = l1
        .chunks(2)
        .map(|p| fourier::compose(&mul2, p).unwrap())
        .collect();
    let h = fourier::compose(&mul2, &l2).unwrap();
    let tree_ok = h.sparsity() == 1 && h.degree() == 8;

    report(
        8,
        "fourier composition bounds",
        violations == 0 && tree_ok,
        &format!(
            "100 random instances, {violations} violations; 8-variable tree product has sparsity {} degree {}",
            h.sparsity(),
            h.degree()
        ),
    );
}

#[test]
fn criterion_09_smooth_lift() {
    let parity_machine = corpus::parity_machine();
    let bound = parity_machine.time_bound_poly(4, 1).unwrap();
    let corpus_circuits = vec![
        corpus::parity_tree_circuit(12),
        corpus::ripple_adder_circuit(2),
        unroll::unroll(&parity_machine, 4, bound).unwrap(),
    ];
    let mut pass = true;
    let mut k_info = String::new();
    for c in &corpus_circuits {
        let lifted = lift::lift(c).unwrap();
        // Vertex exactness, exhaustive.
        let n = c.input_count();
        for idx in 0..(1u64 << n) {
            let bits = index_to_bits(n, idx);
            let x: Vec<f64> = bits.iter().map(|&b| f64::from(u8::from(b))).collect();
            let got = lifted.evaluate(&x).unwrap();
            let want = c.evaluate(&bits).unwrap();
            if got
                .iter()
                .zip(&want)
                .any(|(a, b)| *a != f64::from(u8::from(*b)))
            {
                pass = false;
            }
        }
        // Per-node range containment via interval arithmetic.
        if !lifted.range_certified() {
            pass = false;
        }
        // Neighborhood deviation against the measured constant.
        let eps = 0.05;
        let sweep = lift::neighborhood_sweep(&lifted, eps, 2000, 90).unwrap();
        if sweep.max_deviation > sweep.k_lift * eps + 1e-12 || sweep.k_lift > sweep.k_ceiling {
            pass = false;
        }
        k_info = format!(
            "last K_lift {:.2} <= 2^L {:.0}",
            sweep.k_lift, sweep.k_ceiling
        );
    }
    report(
        9,
        "smooth lift",
        pass,
        &format!(
            "vertex-exact, interval-certified range, bounded neighborhood deviation; {k_info}"
        ),
    );
}

#[test]
fn criterion_10_trace_learning() {
    let c = corpus::parity_tree_circuit(8);
    let s = c.certify_sparsity().unwrap().s;
    let n_samples = arlearn::coupon_sample_count(s, 0.05);
    let rate = arlearn::recovery_rate(&c, n_samples, 100, 100);
    let rate_ok = rate >= 0.95;

    // Sample-complexity growth across the corpus, fitted on log-log axes.
    let mut ss = Vec::new();
    let mut ns = Vec::new();
    for width in [2usize, 4, 8, 12] {
        let c = corpus::parity_tree_circuit(width);
        let s = c.certify_sparsity().unwrap().s;
        let curve = arlearn::sample_complexity_curve(&c, &[0.1], 20, 101);
        ss.push(s as f64);
        ns.push(curve[0].n_min as f64);
    }
    let slope = stats::log_log_slope(&ss, &ns);
    let subquadratic = slope < 2.0;
    report(
        10,
        "trace learning",
        rate_ok && subquadratic,
        &format!(
            "N={n_samples} recovers parity in {:.0}% of 100 trials (>=95%); N-vs-s slope {slope:.2} < 2",
            rate * 100.0
        ),
    );
}

#[test]
fn criterion_11_pipeline_determinism() {
    let source = SourceSpec::Program(corpus::squaring_program());
    let mut params = PipelineParams::new(6, 4);
    params.seed = 4242;
    params.samples = 300;
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_pipeline(&source, &params, dir_a.path()).unwrap();
    run_pipeline(&source, &params, dir_b.path()).unwrap();
    let mut pass = true;
    for file in ["circuit.json", "net.json", "report.csv"] {
        let a = std::fs::read(dir_a.path().join(file)).unwrap();
        let b = std::fs::read(dir_b.path().join(file)).unwrap();
        if a != b {
            pass = false;
        }
    }
    report(
        11,
        "pipeline determinism",
        pass,
        "identical config + seed produce byte-identical circuit.json, net.json, report.csv",
    );
}
