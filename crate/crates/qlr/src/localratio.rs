//! Local-ratio approximation algorithms: classical vertex cover, the
//! transverse (constrained) variant, and the prize-collecting variant,
//! each returning a decomposition certificate.

use serde::{Deserialize, Serialize};

use crate::bloch::BlochProjector;
use crate::error::{QlrError, Result};
use crate::instance::{Instance, Kind};
use crate::state::{self, ProductState};

/// Approximation guarantee of the transverse algorithm.
pub const ALPHA_TVC: f64 = 2.0 + std::f64::consts::SQRT_2;
/// Approximation guarantee of the prize-collecting algorithm (the exact
/// worst-case ratio is 4.19387.., rounded up here).
pub const ALPHA_TPCVC: f64 = 4.194;
/// Weights at or below this threshold are clamped to zero.
pub const WEIGHT_THRESHOLD: f64 = 1e-12;

/// One subtraction round: the selected edge, the weight taken off both
/// endpoints, the penalty multiplier (prize-collecting only), and the
/// local constrained minimum of the subtracted term.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Round {
    pub edge: (usize, usize),
    pub w: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    pub mu_star: f64,
}

/// The decomposition `H = R + sum_e w_e H_e` produced by a solver run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub rounds: Vec<Round>,
    /// Remainder vertex weights `r_i >= 0`, original vertex order.
    pub residual: Vec<f64>,
    /// Remainder edge penalties (prize-collecting), aligned with the
    /// instance edge list; empty otherwise.
    pub residual_penalties: Vec<f64>,
    /// Vertices assigned `|1><1|` (the cover for classical instances).
    pub selected: Vec<usize>,
    /// Theoretical ratio bound of the algorithm that produced this.
    pub alpha: f64,
}

/// Minimum of `Tr[(phi_i + phi_j) rho]` over the covering subspace
/// `span{|01>, |10>, |11>}`, as a closed form in the two z-components.
pub fn edge_restricted_min(az_i: f64, az_j: f64) -> Result<f64> {
    for &a in &[az_i, az_j] {
        if !(-1.0 - 1e-9..=1e-9).contains(&a) {
            return Err(QlrError::InvalidParameter(format!(
                "az = {} outside [-1, 0]",
                a
            )));
        }
    }
    let alpha = az_i.clamp(-1.0, 0.0);
    let k = 0.5 * (alpha + az_j.clamp(-1.0, 0.0));
    Ok(0.5 * (-(2.0 * alpha * alpha - 4.0 * alpha * k + k * k + 2.0).sqrt() - k + 2.0))
}

/// Smallest eigenvalue of the 4x4 prize-collecting edge term
/// `phi_i + phi_j + lambda |00><00|` for canonical (real) projectors.
pub fn pc_edge_min(pi: &BlochProjector, pj: &BlochProjector, lambda: f64) -> f64 {
    let single = |p: &BlochProjector| {
        [
            [0.5 * (1.0 + p.az), 0.5 * p.ax],
            [0.5 * p.ax, 0.5 * (1.0 - p.az)],
        ]
    };
    let (a, b) = (single(pi), single(pj));
    let mut h = nalgebra::DMatrix::<f64>::zeros(4, 4);
    for r in 0..4 {
        let (ra, rb) = (r >> 1, r & 1);
        for c in 0..4 {
            let (ca, cb) = (c >> 1, c & 1);
            let mut v = 0.0;
            if rb == cb {
                v += a[ra][ca];
            }
            if ra == ca {
                v += b[rb][cb];
            }
            h[(r, c)] = v;
        }
    }
    h[(0, 0)] += lambda;
    crate::exact::dense_lowest(&h, 1)[0]
}

#[derive(Clone, Copy, PartialEq)]
enum Assign {
    Unset,
    Selected,
    Leftover,
}

struct RunOutput {
    assign: Vec<Assign>,
    rounds: Vec<Round>,
    residual: Vec<f64>,
    residual_penalties: Vec<f64>,
}

/// Shared driver for both algorithms, operating on a canonical instance.
fn run_local_ratio(canon: &Instance, prize_collecting: bool) -> RunOutput {
    let n = canon.n;
    let mut c: Vec<f64> = canon.terms.iter().map(|t| t.weight).collect();
    let mut pen: Vec<f64> = if prize_collecting {
        canon.edges.iter().map(|e| e.penalty()).collect()
    } else {
        Vec::new()
    };
    let mut assign = vec![Assign::Unset; n];
    let mut degree = vec![0usize; n];
    for e in &canon.edges {
        degree[e.u] += 1;
        degree[e.v] += 1;
    }

    // step 1: zero-weight vertices incident to an (uncovered) edge
    for i in 0..n {
        if c[i] <= WEIGHT_THRESHOLD && degree[i] > 0 {
            c[i] = 0.0;
            assign[i] = Assign::Selected;
        }
    }

    let mut rounds = Vec::new();
    for (ei, e) in canon.edges.iter().enumerate() {
        let (u, v) = (e.u, e.v);
        if !prize_collecting && (assign[u] == Assign::Selected || assign[v] == Assign::Selected) {
            continue; // edge already covered
        }
        let lambda = if prize_collecting {
            2.0 / (1.0 - canon.terms[u].projector.az) + 2.0 / (1.0 - canon.terms[v].projector.az)
        } else {
            0.0
        };
        let w = if prize_collecting {
            c[u].min(c[v]).min(pen[ei] / lambda)
        } else {
            c[u].min(c[v])
        };
        if w <= WEIGHT_THRESHOLD {
            continue;
        }
        c[u] -= w;
        c[v] -= w;
        if prize_collecting {
            pen[ei] -= lambda * w;
            if pen[ei] <= WEIGHT_THRESHOLD {
                pen[ei] = 0.0;
            }
        }
        let mu_star = if prize_collecting {
            pc_edge_min(&canon.terms[u].projector, &canon.terms[v].projector, lambda)
        } else {
            edge_restricted_min(canon.terms[u].projector.az, canon.terms[v].projector.az)
                .expect("canonical instance has az in range")
        };
        rounds.push(Round {
            edge: (u, v),
            w,
            lambda: prize_collecting.then_some(lambda),
            mu_star,
        });
        // endpoints zeroed while incident to this edge go to |1><1|
        for &q in &[u, v] {
            if c[q] <= WEIGHT_THRESHOLD {
                c[q] = 0.0;
                assign[q] = Assign::Selected;
            }
        }
    }

    for a in assign.iter_mut() {
        if *a == Assign::Unset {
            *a = Assign::Leftover;
        }
    }
    RunOutput {
        assign,
        rounds,
        residual: c,
        residual_penalties: pen,
    }
}

fn assemble_state(canon: &Instance, assign: &[Assign]) -> ProductState {
    ProductState::new(
        assign
            .iter()
            .enumerate()
            .map(|(i, a)| match a {
                Assign::Selected => [0.0, 0.0, -1.0],
                _ => {
                    let p = canon.terms[i].projector.complement();
                    [p.ax, p.ay, p.az]
                }
            })
            .collect(),
    )
}

fn finish(
    inst: &Instance,
    canon: &Instance,
    log: &[crate::instance::QubitRotation],
    out: RunOutput,
    alpha: f64,
) -> (ProductState, Certificate) {
    let state = assemble_state(canon, &out.assign).rotate_back(log);
    let selected = out
        .assign
        .iter()
        .enumerate()
        .filter(|(_, a)| **a == Assign::Selected)
        .map(|(i, _)| i)
        .collect();
    let _ = inst;
    (
        state,
        Certificate {
            rounds: out.rounds,
            residual: out.residual,
            residual_penalties: out.residual_penalties,
            selected,
            alpha,
        },
    )
}

/// Algorithm for the constrained transverse problem. Returns a feasible
/// product state and the local-ratio certificate, in the original frame.
pub fn lr_tvc(inst: &Instance) -> Result<(ProductState, Certificate)> {
    if inst.kind != Kind::Tvc {
        return Err(QlrError::KindMismatch("expected a tvc instance".into()));
    }
    let (canon, log) = inst.canonicalize()?;
    let out = run_local_ratio(&canon, false);
    Ok(finish(inst, &canon, &log, out, ALPHA_TVC))
}

/// Algorithm for the unconstrained prize-collecting problem.
pub fn lr_tpcvc(inst: &Instance) -> Result<(ProductState, Certificate)> {
    if inst.kind != Kind::Pcvc {
        return Err(QlrError::KindMismatch("expected a pcvc instance".into()));
    }
    let (canon, log) = inst.canonicalize()?;
    let out = run_local_ratio(&canon, true);
    Ok(finish(inst, &canon, &log, out, ALPHA_TPCVC))
}

/// Classical weighted vertex cover via the same machinery. Requires all
/// projectors diagonal; returns the cover and the certificate.
pub fn lr_classical_vc(inst: &Instance) -> Result<(Vec<usize>, Certificate)> {
    if inst.kind != Kind::Tvc {
        return Err(QlrError::KindMismatch("expected a tvc instance".into()));
    }
    if !inst.terms.iter().all(|t| t.projector.is_diagonal()) {
        return Err(QlrError::InvalidInstance(
            "classical solver requires diagonal projectors".into(),
        ));
    }
    let (_, cert) = lr_tvc(inst)?;
    Ok((cert.selected.clone(), cert))
}

/// Independent re-validation of a certificate against its instance and
/// output state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertReport {
    pub nonneg_ok: bool,
    pub reconstruction_ok: bool,
    pub ratio_ok: bool,
    pub residual_zero_ok: bool,
    pub alpha_effective: f64,
    pub failures: Vec<String>,
    pub pass: bool,
}

pub fn certify(inst: &Instance, st: &ProductState, cert: &Certificate) -> Result<CertReport> {
    let (canon, log) = inst.canonicalize()?;
    let rho = st.rotate(&log);
    let mut failures: Vec<String> = Vec::new();

    // (a) nonnegativity of the decomposition
    let mut nonneg_ok = true;
    for r in &cert.rounds {
        if r.w < 0.0 {
            nonneg_ok = false;
            failures.push(format!("edge ({},{}): negative round weight {}", r.edge.0, r.edge.1, r.w));
        }
    }
    for (i, &r) in cert.residual.iter().enumerate() {
        if r < 0.0 {
            nonneg_ok = false;
            failures.push(format!("vertex {}: negative residual weight {}", i, r));
        }
    }
    for (ei, &p) in cert.residual_penalties.iter().enumerate() {
        if p < 0.0 {
            nonneg_ok = false;
            failures.push(format!("edge index {}: negative residual penalty {}", ei, p));
        }
    }

    // (b) coefficient-wise reconstruction of the input
    let mut recon_c = cert.residual.clone();
    recon_c.resize(canon.n, 0.0);
    let mut recon_pen = cert.residual_penalties.clone();
    recon_pen.resize(canon.edges.len(), 0.0);
    for r in &cert.rounds {
        recon_c[r.edge.0] += r.w;
        recon_c[r.edge.1] += r.w;
        if let Some(l) = r.lambda {
            if let Some(ei) = canon
                .edges
                .iter()
                .position(|e| (e.u, e.v) == (r.edge.0, r.edge.1))
            {
                recon_pen[ei] += l * r.w;
            } else {
                failures.push(format!("edge ({},{}): not in instance", r.edge.0, r.edge.1));
            }
        }
    }
    let mut reconstruction_ok = true;
    for i in 0..canon.n {
        if (recon_c[i] - canon.terms[i].weight).abs() > 1e-10 {
            reconstruction_ok = false;
            failures.push(format!(
                "vertex {}: reconstructed weight {} vs {}",
                i, recon_c[i], canon.terms[i].weight
            ));
        }
    }
    if canon.kind == Kind::Pcvc {
        for (ei, e) in canon.edges.iter().enumerate() {
            if (recon_pen[ei] - e.penalty()).abs() > 1e-10 {
                reconstruction_ok = false;
                failures.push(format!(
                    "edge ({},{}): reconstructed penalty {} vs {}",
                    e.u,
                    e.v,
                    recon_pen[ei],
                    e.penalty()
                ));
            }
        }
    }

    // (c) per-edge local ratios
    let mut ratio_ok = true;
    let mut alpha_effective = 0.0f64;
    for r in &cert.rounds {
        let (u, v) = r.edge;
        let mut num = canon.terms[u].projector.expectation(rho.bloch[u])
            + canon.terms[v].projector.expectation(rho.bloch[v]);
        if let Some(l) = r.lambda {
            num += l * 0.25 * (1.0 + rho.bloch[u][2]) * (1.0 + rho.bloch[v][2]);
        }
        if r.mu_star <= 0.0 {
            ratio_ok = false;
            failures.push(format!("edge ({},{}): nonpositive mu_star {}", u, v, r.mu_star));
            continue;
        }
        let local_ratio = num / r.mu_star;
        alpha_effective = alpha_effective.max(local_ratio);
        if local_ratio > cert.alpha + 1e-7 {
            ratio_ok = false;
            failures.push(format!(
                "edge ({},{}): local ratio {} exceeds {}",
                u, v, local_ratio, cert.alpha
            ));
        }
    }

    // (d) zero cost on the remainder
    let mut remainder = 0.0;
    for (i, &rw) in cert.residual.iter().enumerate() {
        remainder += rw * canon.terms[i].projector.expectation(rho.bloch[i]);
    }
    for (ei, &rp) in cert.residual_penalties.iter().enumerate() {
        let e = &canon.edges[ei];
        remainder += rp * 0.25 * (1.0 + rho.bloch[e.u][2]) * (1.0 + rho.bloch[e.v][2]);
    }
    let residual_zero_ok = remainder.abs() <= 1e-9;
    if !residual_zero_ok {
        failures.push(format!("remainder cost {} exceeds 1e-9", remainder));
    }
    // feasibility for the constrained kind folds into (d)-style checks
    if canon.kind == Kind::Tvc && !state::feasibility(inst, st, 1e-9)? {
        failures.push("output state violates an edge constraint".into());
    }

    let pass = nonneg_ok && reconstruction_ok && ratio_ok && residual_zero_ok && failures.is_empty();
    Ok(CertReport {
        nonneg_ok,
        reconstruction_ok,
        ratio_ok,
        residual_zero_ok,
        alpha_effective,
        failures,
        pass,
    })
}

/// Per-round local ratios of a solution (numerators evaluated on `st`).
pub fn local_ratios(inst: &Instance, st: &ProductState, cert: &Certificate) -> Result<Vec<f64>> {
    let (canon, log) = inst.canonicalize()?;
    let rho = st.rotate(&log);
    Ok(cert
        .rounds
        .iter()
        .map(|r| {
            let (u, v) = r.edge;
            let mut num = canon.terms[u].projector.expectation(rho.bloch[u])
                + canon.terms[v].projector.expectation(rho.bloch[v]);
            if let Some(l) = r.lambda {
                num += l * 0.25 * (1.0 + rho.bloch[u][2]) * (1.0 + rho.bloch[v][2]);
            }
            num / r.mu_star
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::LocalTerm;
    use crate::instance::Edge;
    use crate::state::evaluate;

    fn classical(n: usize, c: &[f64], edges: &[(usize, usize)]) -> Instance {
        let mut inst = Instance::new(Kind::Tvc, n);
        for (i, &ci) in c.iter().enumerate() {
            inst.terms[i] = LocalTerm::new(ci, BlochProjector::ket1(), 0.0);
        }
        for &(u, v) in edges {
            inst.add_edge(Edge::new(u, v));
        }
        inst
    }

    #[test]
    fn edge_restricted_min_examples() {
        let m = edge_restricted_min(0.0, 0.0).unwrap();
        assert!((m - (1.0 - std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-12);
        assert!((edge_restricted_min(-1.0, -1.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((edge_restricted_min(-1.0, 0.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(edge_restricted_min(0.5, 0.0).is_err());
    }

    #[test]
    fn edge_restricted_min_matches_eigensolver_on_grid() {
        for iu in 0..=8 {
            for iv in 0..=8 {
                let (a, b) = (-(iu as f64) / 8.0, -(iv as f64) / 8.0);
                let k = 0.5 * (a + b);
                let (sa, sb) = ((1.0 - a * a).sqrt(), (1.0 - b * b).sqrt());
                let m = nalgebra::DMatrix::from_row_slice(
                    3,
                    3,
                    &[
                        1.0 + a - k,
                        0.0,
                        -sa / 2.0,
                        0.0,
                        1.0 + k - a,
                        -sb / 2.0,
                        -sa / 2.0,
                        -sb / 2.0,
                        1.0 - k,
                    ],
                );
                let brute = crate::exact::dense_lowest(&m, 1)[0];
                let closed = edge_restricted_min(a, b).unwrap();
                assert!((brute - closed).abs() < 1e-12, "({}, {})", a, b);
            }
        }
    }

    #[test]
    fn classical_path_cover() {
        let inst = classical(3, &[1.0, 1.0, 1.0], &[(0, 1), (1, 2)]);
        let (cover, cert) = lr_classical_vc(&inst).unwrap();
        assert_eq!(cover, vec![0, 1]);
        assert_eq!(cert.rounds.len(), 1);
        assert!((cert.rounds[0].w - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_star_with_free_center() {
        let inst = classical(4, &[0.0, 1.0, 1.0, 1.0], &[(0, 1), (0, 2), (0, 3)]);
        let (cover, cert) = lr_classical_vc(&inst).unwrap();
        assert_eq!(cover, vec![0]);
        assert!(cert.rounds.is_empty());
    }

    #[test]
    fn classical_single_edge_unequal() {
        let inst = classical(2, &[3.0, 1.0], &[(0, 1)]);
        let (cover, cert) = lr_classical_vc(&inst).unwrap();
        assert_eq!(cover, vec![1]);
        assert!((cert.rounds[0].w - 1.0).abs() < 1e-12);
        assert!((cert.residual[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tvc_worst_case_edge() {
        let mut inst = Instance::new(Kind::Tvc, 2);
        inst.terms[0] = LocalTerm::new(1.0, BlochProjector::minus_x(), 0.0);
        inst.terms[1] = LocalTerm::new(1.0, BlochProjector::minus_x(), 0.0);
        inst.add_edge(Edge::new(0, 1));
        let (st, cert) = lr_tvc(&inst).unwrap();
        let e = evaluate(&inst, &st).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        assert_eq!(st.bloch, vec![[0.0, 0.0, -1.0]; 2]);
        let rep = certify(&inst, &st, &cert).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
        assert!((rep.alpha_effective - ALPHA_TVC).abs() < 1e-9);
    }

    #[test]
    fn tvc_classical_edge_selects_both() {
        let inst = classical(2, &[1.0, 1.0], &[(0, 1)]);
        let (st, _) = lr_tvc(&inst).unwrap();
        let e = evaluate(&inst, &st).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tvc_triangle_classical_optimal() {
        let inst = classical(3, &[1.0, 1.0, 1.0], &[(0, 1), (0, 2), (1, 2)]);
        let (st, _) = lr_tvc(&inst).unwrap();
        assert!((evaluate(&inst, &st).unwrap() - 2.0).abs() < 1e-12);
        assert!(state::feasibility(&inst, &st, 1e-9).unwrap());
    }

    #[test]
    fn corrupted_certificate_fails() {
        let inst = classical(2, &[1.0, 1.0], &[(0, 1)]);
        let (st, mut cert) = lr_tvc(&inst).unwrap();
        cert.rounds[0].w = -1.0;
        let rep = certify(&inst, &st, &cert).unwrap();
        assert!(!rep.nonneg_ok);
        assert!(!rep.pass);
        assert!(rep.failures.iter().any(|f| f.contains("(0,1)")));
    }

    #[test]
    fn infeasible_state_fails_certification() {
        let inst = classical(2, &[1.0, 1.0], &[(0, 1)]);
        let (_, cert) = lr_tvc(&inst).unwrap();
        let zeros = ProductState::from_bits(&[0, 0]);
        let rep = certify(&inst, &zeros, &cert).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn tpcvc_worst_case_edge() {
        let mut inst = Instance::new(Kind::Pcvc, 2);
        inst.terms[0] = LocalTerm::new(1.0, BlochProjector::minus_x(), 0.0);
        inst.terms[1] = LocalTerm::new(1.0, BlochProjector::minus_x(), 0.0);
        inst.add_edge(Edge::with_penalty(0, 1, 4.0));
        let (st, cert) = lr_tpcvc(&inst).unwrap();
        assert_eq!(st.bloch, vec![[0.0, 0.0, -1.0]; 2]);
        assert!((evaluate(&inst, &st).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cert.rounds.len(), 1);
        let r = &cert.rounds[0];
        assert!((r.lambda.unwrap() - 4.0).abs() < 1e-12);
        assert!((r.w - 1.0).abs() < 1e-12);
        let rep = certify(&inst, &st, &cert).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
        assert!(rep.alpha_effective <= ALPHA_TPCVC);
        assert!((rep.alpha_effective - 4.19387).abs() < 1e-3);
    }

    #[test]
    fn tpcvc_zero_penalty_edge_ignored() {
        let mut inst = Instance::new(Kind::Pcvc, 2);
        inst.terms[0] = LocalTerm::new(1.0, BlochProjector::minus_x(), 0.0);
        inst.terms[1] = LocalTerm::new(1.0, BlochProjector::minus_x(), 0.0);
        inst.add_edge(Edge::with_penalty(0, 1, 0.0));
        let (st, cert) = lr_tpcvc(&inst).unwrap();
        assert!(cert.rounds.is_empty());
        assert!(evaluate(&inst, &st).unwrap().abs() < 1e-12);
    }

    #[test]
    fn tpcvc_classical_edge_pays_penalty() {
        let mut inst = Instance::new(Kind::Pcvc, 2);
        inst.terms[0] = LocalTerm::new(3.0, BlochProjector::ket1(), 0.0);
        inst.terms[1] = LocalTerm::new(1.0, BlochProjector::ket1(), 0.0);
        inst.add_edge(Edge::with_penalty(0, 1, 1.0));
        let (st, cert) = lr_tpcvc(&inst).unwrap();
        let r = &cert.rounds[0];
        assert!((r.lambda.unwrap() - 2.0).abs() < 1e-12);
        assert!((r.w - 0.5).abs() < 1e-12);
        assert_eq!(st.bloch, vec![[0.0, 0.0, 1.0]; 2]);
        assert!((evaluate(&inst, &st).unwrap() - 1.0).abs() < 1e-12);
        let rep = certify(&inst, &st, &cert).unwrap();
        assert!(rep.pass, "{:?}", rep.failures);
    }
}
