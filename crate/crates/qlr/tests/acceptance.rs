//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL line;
//! run with `--nocapture` to see them on success.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use num_complex::Complex;
use rand::Rng;

use qlr::bench::{default_sweep_tim, RATIO_SLACK};
use qlr::evc::{reconstruct_state, solve_evc};
use qlr::exact::{
    dense_lowest, enumerate_covers, ground_energy_full, ground_energy_nullspace,
    ground_energy_tvc,
};
use qlr::gadgets::{gadget_convergence, pxp_instance, reduce_degree};
use qlr::generate::{generate_instance, random_diagonal_psi, rng_for, GenConfig, GraphShape};
use qlr::localratio::{lr_tpcvc, lr_tvc, ALPHA_TPCVC, ALPHA_TVC};
use qlr::state::{evaluate, feasibility};
use qlr::{BlochProjector, Edge, Instance, Kind, LocalTerm, Psi};

const SQRT2: f64 = std::f64::consts::SQRT_2;

fn minus_x_edge(penalty: Option<f64>) -> Instance {
    let kind = if penalty.is_some() { Kind::Pcvc } else { Kind::Tvc };
    let mut inst = Instance::new(kind, 2);
    for t in inst.terms.iter_mut() {
        *t = LocalTerm::new(1.0, BlochProjector::new(-1.0, 0.0, 0.0), 0.0);
    }
    inst.add_edge(match penalty {
        Some(p) => Edge::with_penalty(0, 1, p),
        None => Edge::new(0, 1),
    });
    inst
}

// 1. Single hardest edge: algorithm value 1, exact 1 - sqrt(2)/2,
// ratio 2 + sqrt(2).
fn worst_case_tvc() {
    let inst = minus_x_edge(None);
    let (state, _cert) = lr_tvc(&inst).unwrap();
    let energy = evaluate(&inst, &state).unwrap();
    let exact = ground_energy_tvc(&inst).unwrap().ground_energy().unwrap();
    assert!((energy - 1.0).abs() < 1e-9, "algo energy {}", energy);
    assert!(
        (exact - (1.0 - SQRT2 / 2.0)).abs() < 1e-9,
        "exact energy {}",
        exact
    );
    let ratio = energy / exact;
    assert!(
        (ratio - (2.0 + SQRT2)).abs() <= 1e-6,
        "ratio {} vs {}",
        ratio,
        2.0 + SQRT2
    );
}

// 2. 200 random instances: output feasible, ratio within the proven bound.
fn tvc_ratio_soundness() {
    for id in 0..200u64 {
        let mut params = rng_for(71, (1u64 << 33) + id);
        let n = params.gen_range(2..=10);
        let density = 0.2 + 0.6 * params.gen::<f64>();
        let inst = generate_instance(&GenConfig::new(Kind::Tvc, n, density), 71, id).unwrap();
        let (state, _cert) = lr_tvc(&inst).unwrap();
        assert!(
            feasibility(&inst, &state, 1e-9).unwrap(),
            "instance {} produced an infeasible state",
            id
        );
        let energy = evaluate(&inst, &state).unwrap();
        let exact = ground_energy_tvc(&inst).unwrap().ground_energy().unwrap();
        assert!(
            energy <= ALPHA_TVC * exact + RATIO_SLACK,
            "instance {}: {} > {} * {}",
            id,
            energy,
            ALPHA_TVC,
            exact
        );
    }
}

// 3. Diagonal projectors recover the classical factor-2 guarantee.
fn classical_specialization() {
    for id in 0..200u64 {
        let mut params = rng_for(72, (1u64 << 33) + id);
        let n = params.gen_range(2..=12);
        let density = 0.2 + 0.6 * params.gen::<f64>();
        let mut cfg = GenConfig::new(Kind::Tvc, n, density);
        cfg.diagonal = true;
        let inst = generate_instance(&cfg, 72, id).unwrap();
        let (state, _cert) = lr_tvc(&inst).unwrap();
        let energy = evaluate(&inst, &state).unwrap();
        let exact = ground_energy_tvc(&inst).unwrap().ground_energy().unwrap();
        assert!(
            energy <= 2.0 * exact + 1e-9,
            "instance {}: {} > 2 * {}",
            id,
            energy,
            exact
        );
    }
}

// 4. Penalty-4 hardest edge hits the 4.19387 ratio (root of
// u^3 + 4u^2 - u - 2 via independent Newton iteration); random ensemble
// stays under 4.194.
fn tpcvc_worst_and_ensemble() {
    let inst = minus_x_edge(Some(4.0));
    let (state, _cert) = lr_tpcvc(&inst).unwrap();
    let energy = evaluate(&inst, &state).unwrap();
    assert!((energy - 1.0).abs() < 1e-9, "algo energy {}", energy);
    let exact = ground_energy_full(&inst).unwrap().ground_energy().unwrap();

    let mut u = 0.7f64;
    for _ in 0..60 {
        let f = u * u * u + 4.0 * u * u - u - 2.0;
        let df = 3.0 * u * u + 8.0 * u - 1.0;
        u -= f / df;
    }
    assert!(
        (exact - (1.0 - u)).abs() < 1e-9,
        "exact {} vs cubic-root prediction {}",
        exact,
        1.0 - u
    );
    let ratio = energy / exact;
    assert!((ratio - 4.19387).abs() <= 2e-3, "ratio {}", ratio);
    assert!(ratio <= 4.194, "ratio {}", ratio);

    for id in 0..200u64 {
        let mut params = rng_for(73, (1u64 << 33) + id);
        let n = params.gen_range(2..=10);
        let density = 0.2 + 0.6 * params.gen::<f64>();
        let inst = generate_instance(&GenConfig::new(Kind::Pcvc, n, density), 73, id).unwrap();
        let (state, _cert) = lr_tpcvc(&inst).unwrap();
        let energy = evaluate(&inst, &state).unwrap();
        let exact = ground_energy_full(&inst).unwrap().ground_energy().unwrap();
        assert!(
            energy <= ALPHA_TPCVC * exact + RATIO_SLACK,
            "instance {}: {} > {} * {}",
            id,
            energy,
            ALPHA_TPCVC,
            exact
        );
    }
}

/// Expectation of the shared rank-1 constraint on edge `(u, v)` in a full
/// `2^n` state vector.
fn edge_expectation(s: &[Complex<f64>], n: usize, u: usize, v: usize, psi: &Psi) -> f64 {
    let amps = psi.amplitudes();
    let (bu, bv) = (1usize << (n - 1 - u), 1usize << (n - 1 - v));
    let mut total = 0.0;
    for base in 0..s.len() {
        if base & bu != 0 || base & bv != 0 {
            continue;
        }
        let mut inner = Complex::new(0.0, 0.0);
        for a in 0..2 {
            for b in 0..2 {
                let word = base | if a == 1 { bu } else { 0 } | if b == 1 { bv } else { 0 };
                inner += Complex::new(amps[2 * a + b], 0.0) * s[word];
            }
        }
        total += inner.norm_sqr();
    }
    total
}

// 5. 100 instances per structural case: solver equals the nullspace
// oracle, reconstructed states are feasible, reduced dimension <= n + 2.
fn evc_oracle_equivalence() {
    for case in 0..3usize {
        for id in 0..100u64 {
            let mut params = rng_for(80 + case as u64, (1u64 << 33) + id);
            let n = params.gen_range(if case == 2 { 3 } else { 2 }..=9);
            let density = 0.2 + 0.6 * params.gen::<f64>();
            let mut cfg = GenConfig::new(Kind::Evc, n, density);
            cfg.psi = Some(if case == 1 {
                Psi::Singlet
            } else {
                random_diagonal_psi(&mut params)
            });
            cfg.shape = match case {
                0 => GraphShape::Bipartite,
                1 => GraphShape::Any,
                _ => GraphShape::NonBipartite,
            };
            let inst = generate_instance(&cfg, 80 + case as u64, id).unwrap();
            let rep = solve_evc(&inst).unwrap();
            let exact = ground_energy_nullspace(&inst)
                .unwrap()
                .ground_energy()
                .expect("generated instance must be feasible");
            assert!(
                (rep.energy - exact).abs() <= 1e-8,
                "case {} instance {}: solver {} oracle {}",
                case,
                id,
                rep.energy,
                exact
            );
            for comp in &rep.components {
                assert!(
                    comp.dim <= comp.vertices.len() + 2,
                    "case {} instance {}: dim {} > {} + 2",
                    case,
                    id,
                    comp.dim,
                    comp.vertices.len()
                );
            }
            assert_eq!(rep.components.len(), 1, "generator yields connected graphs");
            let s = reconstruct_state(&rep.components[0], n).unwrap();
            let norm: f64 = s.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-8, "reconstruction norm {}", norm);
            let psi = inst.psi.as_ref().unwrap();
            for e in &inst.edges {
                let x = edge_expectation(&s, n, e.u, e.v, psi);
                assert!(
                    x <= 1e-8,
                    "case {} instance {}: edge ({},{}) expectation {}",
                    case,
                    id,
                    e.u,
                    e.v,
                    x
                );
            }
        }
    }
}

// 6. Gap errors of the transverse-field gadget shrink monotonically in
// the pinning strength and end below 5e-2.
fn gadget_convergence_ladder() {
    let report =
        gadget_convergence(&default_sweep_tim(), &[8.0, 16.0, 32.0, 64.0], 4).unwrap();
    assert!(
        report.monotone,
        "errors {:?}",
        report.rows.iter().map(|r| r.max_gap_error).collect::<Vec<_>>()
    );
    let last = report.rows.last().unwrap().max_gap_error;
    assert!(last <= 5e-2, "final error {}", last);
}

// 7. Degree-4 star: splitting the center shrinks the ground-energy error
// by 1.5x-3x per doubling of the gadget strength.
fn degree_reduction_convergence() {
    let weights = [0.6, 1.0, 0.9, 1.1, 0.8];
    let mut inst = Instance::new(Kind::Tvc, weights.len());
    for (i, &w) in weights.iter().enumerate() {
        let az = -0.8f64;
        let ax = -(1.0 - az * az).sqrt();
        inst.terms[i] = LocalTerm::new(w, BlochProjector::new(ax, 0.0, az), 0.0);
    }
    for v in 1..weights.len() {
        inst.add_edge(Edge::new(0, v));
    }
    let exact = ground_energy_tvc(&inst).unwrap().ground_energy().unwrap();
    let mut errors = Vec::new();
    for &delta in &[16.0, 32.0, 64.0] {
        let red = reduce_degree(&inst, delta).unwrap();
        let e = ground_energy_tvc(&red).unwrap().ground_energy().unwrap();
        errors.push((e - exact).abs());
    }
    for w in errors.windows(2) {
        let factor = w[0] / w[1];
        assert!(
            (1.5..=3.0).contains(&factor),
            "shrink factor {} from errors {:?}",
            factor,
            errors
        );
    }
}

// 8. Blockade chain: toolkit construction equals the directly built
// restricted -sum X.
fn pxp_consistency() {
    let n = 8;
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    let inst = pxp_instance(n, &edges, &vec![1.0; n]).unwrap();
    let projected = ground_energy_tvc(&inst).unwrap().ground_energy().unwrap();

    let covers = enumerate_covers(n, &edges, 24).unwrap();
    let index: std::collections::HashMap<u64, usize> =
        covers.iter().enumerate().map(|(i, &b)| (b, i)).collect();
    let mut m = nalgebra::DMatrix::<f64>::zeros(covers.len(), covers.len());
    for (row, &word) in covers.iter().enumerate() {
        for i in 0..n {
            let flipped = word ^ (1u64 << (n - 1 - i));
            if let Some(&col) = index.get(&flipped) {
                m[(row, col)] -= 1.0;
            }
        }
    }
    let direct = dense_lowest(&m, 1)[0];
    assert!(
        (projected - direct).abs() < 1e-10,
        "projected {} direct {}",
        projected,
        direct
    );
}

// 9. The benchmark command is byte-deterministic for a fixed seed.
fn bench_determinism() {
    let run = || {
        let out = std::process::Command::new(env!("CARGO_BIN_EXE_qlr"))
            .args(["bench", "--suite", "tvc-small", "--trials", "20", "--seed", "13"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let a = run();
    let b = run();
    assert!(!a.is_empty());
    assert_eq!(a, b, "benchmark CSV differs between identical runs");
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, Option<f64>, fn())> = vec![
        ("worst-case tvc tightness", Some(1.0), worst_case_tvc),
        ("tvc ratio soundness (200 instances)", Some(60.0), tvc_ratio_soundness),
        ("classical specialization (200 diagonal)", None, classical_specialization),
        ("tpcvc worst case + ensemble", None, tpcvc_worst_and_ensemble),
        ("evc oracle equivalence (300 instances)", Some(120.0), evc_oracle_equivalence),
        ("gadget convergence ladder", None, gadget_convergence_ladder),
        ("degree reduction convergence", None, degree_reduction_convergence),
        ("pxp chain consistency", None, pxp_consistency),
        ("bench determinism", None, bench_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, deadline, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        let secs = start.elapsed().as_secs_f64();
        let in_time = deadline.map_or(true, |d| secs < d);
        let verdict = if ok && in_time { "PASS" } else { "FAIL" };
        println!("[{}] criterion {}: {} ({:.2}s)", verdict, i + 1, name, secs);
        if !(ok && in_time) {
            failed.push(format!(
                "criterion {} ({}): {}",
                i + 1,
                name,
                if ok { "deadline exceeded" } else { "assertion failed" }
            ));
        }
    }
    assert!(failed.is_empty(), "{}", failed.join("; "));
}
