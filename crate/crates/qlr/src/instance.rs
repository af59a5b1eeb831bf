//! Problem instances: a constraint graph, one weighted projector per vertex,
//! and the per-kind constraint data.

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochProjector, LocalTerm, UNIT_TOL};
use crate::error::{QlrError, Result};

/// Which constraint family the instance carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    /// Hard covering constraints `Tr[|00><00|_{ij} rho] = 0`.
    Tvc,
    /// Per-edge penalty `c_ij (I+Z)(I+Z)/4` added to the objective.
    Pcvc,
    /// Shared SWAP-invariant 2-qubit constraint state `psi` per edge.
    Evc,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Tvc => "tvc",
            Kind::Pcvc => "pcvc",
            Kind::Evc => "evc",
        }
    }
}

/// Canonical form of the shared EVC constraint state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "lowercase")]
pub enum Psi {
    /// `alpha |00> + beta |11>` with `alpha, beta >= 0`, normalized.
    Diagonal { alpha: f64, beta: f64 },
    /// `(|01> - |10>) / sqrt(2)`.
    Singlet,
}

impl Psi {
    /// Amplitudes `(psi_00, psi_01, psi_10, psi_11)`, normalized.
    pub fn amplitudes(&self) -> [f64; 4] {
        match *self {
            Psi::Diagonal { alpha, beta } => [alpha, 0.0, 0.0, beta],
            Psi::Singlet => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                [0.0, s, -s, 0.0]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    /// TPCVC penalty weight; ignored for other kinds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
}

impl Edge {
    pub fn new(u: usize, v: usize) -> Self {
        Self {
            u: u.min(v),
            v: u.max(v),
            penalty: None,
        }
    }

    pub fn with_penalty(u: usize, v: usize, penalty: f64) -> Self {
        Self {
            u: u.min(v),
            v: u.max(v),
            penalty: Some(penalty),
        }
    }

    pub fn penalty(&self) -> f64 {
        self.penalty.unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub kind: Kind,
    pub n: usize,
    pub terms: Vec<LocalTerm>,
    pub edges: Vec<Edge>,
    pub psi: Option<Psi>,
    pub global_offset: f64,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<String>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Per-qubit record of the canonicalizing rotation: a Z-axis rotation angle
/// followed by an optional Z conjugation (`Z X Z = -X`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitRotation {
    pub z_angle: f64,
    pub z_conjugate: bool,
}

impl QubitRotation {
    pub fn identity() -> Self {
        Self {
            z_angle: 0.0,
            z_conjugate: false,
        }
    }

    /// Apply the rotation to a Bloch vector (instance frame -> canonical frame).
    pub fn apply(&self, r: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.z_angle.sin_cos();
        let mut out = [r[0] * c - r[1] * s, r[0] * s + r[1] * c, r[2]];
        if self.z_conjugate {
            out[0] = -out[0];
            out[1] = -out[1];
        }
        out
    }

    /// Undo the rotation (canonical frame -> instance frame).
    pub fn apply_inverse(&self, r: [f64; 3]) -> [f64; 3] {
        let mut v = r;
        if self.z_conjugate {
            v[0] = -v[0];
            v[1] = -v[1];
        }
        let (s, c) = (-self.z_angle).sin_cos();
        [v[0] * c - v[1] * s, v[0] * s + v[1] * c, v[2]]
    }
}

impl Instance {
    pub fn new(kind: Kind, n: usize) -> Self {
        Self {
            kind,
            n,
            terms: vec![LocalTerm::new(0.0, BlochProjector::ket1(), 0.0); n],
            edges: Vec::new(),
            psi: None,
            global_offset: 0.0,
        }
    }

    /// Add an edge, merging duplicates: covering constraints are idempotent,
    /// TPCVC penalties sum.
    pub fn add_edge(&mut self, edge: Edge) {
        let (u, v) = (edge.u.min(edge.v), edge.u.max(edge.v));
        if let Some(existing) = self.edges.iter_mut().find(|e| e.u == u && e.v == v) {
            if self.kind == Kind::Pcvc {
                existing.penalty = Some(existing.penalty() + edge.penalty());
            }
            return;
        }
        self.edges.push(Edge {
            u,
            v,
            penalty: edge.penalty,
        });
    }

    pub fn sort_edges(&mut self) {
        self.edges.sort_by_key(|e| (e.u, e.v));
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.u == v || e.v == v).count()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    /// Sum of all identity contributions (per-term offsets plus global).
    pub fn total_offset(&self) -> f64 {
        self.global_offset + self.terms.iter().map(|t| t.offset).sum::<f64>()
    }

    /// Report-style validation of all structural invariants.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.terms.len() != self.n {
            report
                .violations
                .push(format!("expected {} terms, found {}", self.n, self.terms.len()));
            return report;
        }
        for (i, t) in self.terms.iter().enumerate() {
            if t.weight < 0.0 {
                report.violations.push(format!("negative weight c_{} = {}", i, t.weight));
            }
            if !t.projector.is_unit() {
                report.violations.push(format!(
                    "vertex {}: Bloch vector norm {} is not 1",
                    i,
                    t.projector.norm()
                ));
            }
            if matches!(self.kind, Kind::Tvc | Kind::Pcvc) && t.projector.az > UNIT_TOL {
                report
                    .violations
                    .push(format!("vertex {}: Tr[Z phi] > 0 (az = {})", i, t.projector.az));
            }
            if !t.weight.is_finite() || !t.offset.is_finite() {
                report.violations.push(format!("vertex {}: non-finite term", i));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &self.edges {
            if e.u == e.v {
                report.violations.push(format!("self-loop at vertex {}", e.u));
            }
            if e.u >= self.n || e.v >= self.n {
                report
                    .violations
                    .push(format!("edge ({}, {}) out of range", e.u, e.v));
                continue;
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                report
                    .violations
                    .push(format!("duplicate edge ({}, {})", e.u, e.v));
            }
            if self.kind == Kind::Pcvc && e.penalty() < 0.0 {
                report.violations.push(format!(
                    "negative penalty c_{{{},{}}} = {}",
                    e.u,
                    e.v,
                    e.penalty()
                ));
            }
        }
        match (self.kind, &self.psi) {
            (Kind::Evc, Some(Psi::Diagonal { alpha, beta })) => {
                if *alpha < 0.0 || *beta < 0.0 {
                    report
                        .violations
                        .push("psi coefficients must be non-negative".into());
                }
                if (alpha * alpha + beta * beta - 1.0).abs() > UNIT_TOL {
                    report.violations.push("psi is not normalized".into());
                }
            }
            (Kind::Evc, Some(Psi::Singlet)) => {}
            (Kind::Evc, None) => report.violations.push("EVC instance without psi".into()),
            (_, Some(_)) => report
                .violations
                .push("psi present on a non-EVC instance".into()),
            _ => {}
        }
        report
    }

    /// Rotate every projector into the stoquastic canonical frame
    /// (`ay = 0`, `ax <= 0`), returning the rotated instance together with
    /// the per-qubit rotation log. Diagonal (Z-basis) constraints are
    /// unaffected by these rotations.
    pub fn canonicalize(&self) -> Result<(Instance, Vec<QubitRotation>)> {
        if self.kind == Kind::Evc {
            return Err(QlrError::KindMismatch(
                "canonicalize applies to diagonal-constraint kinds (tvc, pcvc)".into(),
            ));
        }
        let mut out = self.clone();
        let mut log = Vec::with_capacity(self.n);
        for (i, term) in self.terms.iter().enumerate() {
            let p = term.projector;
            if p.az > UNIT_TOL {
                return Err(QlrError::InvalidInstance(format!(
                    "vertex {}: Tr[Z phi] = {} > 0",
                    i, p.az
                )));
            }
            let t = (p.ax * p.ax + p.ay * p.ay).sqrt();
            let rot = if t <= 1e-15 {
                QubitRotation::identity()
            } else {
                QubitRotation {
                    // rotate (ax, ay) onto (+t, 0), then flip the sign with Z
                    z_angle: -p.ay.atan2(p.ax),
                    z_conjugate: true,
                }
            };
            let canon = BlochProjector::new(if t <= 1e-15 { 0.0 } else { -t }, 0.0, p.az.min(0.0));
            out.terms[i].projector = canon;
            log.push(rot);
        }
        Ok((out, log))
    }

    /// True when every projector is already in canonical stoquastic form.
    pub fn is_canonical(&self) -> bool {
        self.terms
            .iter()
            .all(|t| t.projector.ay.abs() <= UNIT_TOL && t.projector.ax <= UNIT_TOL && t.projector.az <= UNIT_TOL)
    }

    /// True when every projector equals `|1><1|` (classical Vertex Cover).
    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.projector.is_diagonal())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_edge_classical() -> Instance {
        let mut inst = Instance::new(Kind::Tvc, 2);
        inst.terms[0] = LocalTerm::new(1.0, BlochProjector::ket1(), 0.0);
        inst.terms[1] = LocalTerm::new(1.0, BlochProjector::ket1(), 0.0);
        inst.add_edge(Edge::new(0, 1));
        inst
    }

    #[test]
    fn classical_instance_passes() {
        assert!(single_edge_classical().validate().passed());
    }

    #[test]
    fn negative_weight_fails() {
        let mut inst = single_edge_classical();
        inst.terms[0].weight = -1.0;
        let rep = inst.validate();
        assert!(rep.violations.iter().any(|v| v.contains("negative weight")));
    }

    #[test]
    fn positive_az_fails_for_tvc() {
        let mut inst = single_edge_classical();
        inst.terms[1].projector = BlochProjector::new((0.75f64).sqrt(), 0.0, 0.5);
        let rep = inst.validate();
        assert!(rep.violations.iter().any(|v| v.contains("Tr[Z phi] > 0")));
    }

    #[test]
    fn duplicate_edges_merge() {
        let mut inst = Instance::new(Kind::Pcvc, 2);
        inst.add_edge(Edge::with_penalty(0, 1, 1.5));
        inst.add_edge(Edge::with_penalty(1, 0, 0.5));
        assert_eq!(inst.edges.len(), 1);
        assert!((inst.edges[0].penalty() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn canonicalize_examples() {
        let mut inst = Instance::new(Kind::Tvc, 3);
        inst.terms[0].projector = BlochProjector::ket1();
        inst.terms[1].projector = BlochProjector::new(1.0, 0.0, 0.0);
        inst.terms[2].projector = BlochProjector::new(0.6, 0.8, 0.0);
        let (canon, log) = inst.canonicalize().unwrap();
        assert_eq!(canon.terms[0].projector, BlochProjector::ket1());
        assert_eq!(log[0], QubitRotation::identity());
        let p1 = canon.terms[1].projector;
        assert!((p1.ax + 1.0).abs() < 1e-12 && p1.ay.abs() < 1e-12);
        let p2 = canon.terms[2].projector;
        assert!((p2.ax + 1.0).abs() < 1e-12 && p2.ay.abs() < 1e-12 && p2.az.abs() < 1e-12);
    }

    #[test]
    fn canonicalize_rejects_positive_az() {
        let mut inst = Instance::new(Kind::Tvc, 1);
        inst.terms[0].projector = BlochProjector::new(0.0, 0.0, 1.0);
        assert!(inst.canonicalize().is_err());
    }

    #[test]
    fn rotation_round_trip() {
        let rot = QubitRotation {
            z_angle: 1.234,
            z_conjugate: true,
        };
        let r = [0.3, -0.4, 0.5];
        let back = rot.apply_inverse(rot.apply(r));
        for k in 0..3 {
            assert!((back[k] - r[k]).abs() < 1e-14);
        }
    }
}
