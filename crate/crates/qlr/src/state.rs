//! Product-state ansatz and closed-form energy / feasibility evaluation.

use crate::error::{QlrError, Result};
use crate::instance::{Instance, Kind, QubitRotation};

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-9;

/// A product state `rho = prod_i (I + r_i . sigma) / 2` given by one Bloch
/// vector per qubit, `|r_i| <= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    pub bloch: Vec<[f64; 3]>,
}

impl ProductState {
    pub fn new(bloch: Vec<[f64; 3]>) -> Self {
        Self { bloch }
    }

    pub fn len(&self) -> usize {
        self.bloch.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bloch.is_empty()
    }

    /// All qubits in `|1>`.
    pub fn all_ones(n: usize) -> Self {
        Self::new(vec![[0.0, 0.0, -1.0]; n])
    }

    /// Basis state from bits (`bit = 1` maps to `|1>`, Bloch z = -1).
    pub fn from_bits(bits: &[u8]) -> Self {
        Self::new(
            bits.iter()
                .map(|&b| [0.0, 0.0, if b == 1 { -1.0 } else { 1.0 }])
                .collect(),
        )
    }

    pub fn is_valid(&self) -> bool {
        self.bloch.iter().all(|r| {
            let n2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            n2.sqrt() <= 1.0 + 1e-12
        })
    }

    /// Apply the per-qubit canonicalization rotations (instance -> canonical frame).
    pub fn rotate(&self, log: &[QubitRotation]) -> Self {
        Self::new(
            self.bloch
                .iter()
                .zip(log)
                .map(|(r, rot)| rot.apply(*r))
                .collect(),
        )
    }

    /// Undo the per-qubit canonicalization rotations (canonical -> instance frame).
    pub fn rotate_back(&self, log: &[QubitRotation]) -> Self {
        Self::new(
            self.bloch
                .iter()
                .zip(log)
                .map(|(r, rot)| rot.apply_inverse(*r))
                .collect(),
        )
    }
}

/// `Tr[|00><00| rho_u x rho_v]` for Bloch vectors `u`, `v`.
fn edge_zero_zero_expectation(u: [f64; 3], v: [f64; 3]) -> f64 {
    0.25 * (1.0 + u[2]) * (1.0 + v[2])
}

/// `<psi| rho_u x rho_v |psi>` for a real 2-qubit state `psi` given by
/// amplitudes `(00, 01, 10, 11)`.
fn psi_expectation(psi: [f64; 4], u: [f64; 3], v: [f64; 3]) -> f64 {
    use num_complex::Complex64;
    let rho = |r: [f64; 3]| -> [[Complex64; 2]; 2] {
        [
            [
                Complex64::new(0.5 * (1.0 + r[2]), 0.0),
                Complex64::new(0.5 * r[0], -0.5 * r[1]),
            ],
            [
                Complex64::new(0.5 * r[0], 0.5 * r[1]),
                Complex64::new(0.5 * (1.0 - r[2]), 0.0),
            ],
        ]
    };
    let (ra, rb) = (rho(u), rho(v));
    let mut total = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    total += psi[2 * a + b] * ra[a][c] * rb[b][d] * psi[2 * c + d];
                }
            }
        }
    }
    total.re
}

/// Exact closed-form energy `Tr[H rho]` of a product state.
pub fn evaluate(inst: &Instance, state: &ProductState) -> Result<f64> {
    if state.len() != inst.n {
        return Err(QlrError::DimensionMismatch {
            expected: inst.n,
            got: state.len(),
        });
    }
    let mut energy = inst.global_offset;
    for (term, r) in inst.terms.iter().zip(&state.bloch) {
        energy += term.energy(*r);
    }
    if inst.kind == Kind::Pcvc {
        for e in &inst.edges {
            energy +=
                e.penalty() * edge_zero_zero_expectation(state.bloch[e.u], state.bloch[e.v]);
        }
    }
    Ok(energy)
}

/// Per-edge constraint expectations (TVC: `|00><00|`, EVC: `|psi><psi|`).
pub fn constraint_expectations(inst: &Instance, state: &ProductState) -> Result<Vec<f64>> {
    if state.len() != inst.n {
        return Err(QlrError::DimensionMismatch {
            expected: inst.n,
            got: state.len(),
        });
    }
    let psi = match inst.kind {
        Kind::Tvc => None,
        Kind::Evc => Some(
            inst.psi
                .ok_or_else(|| QlrError::InvalidInstance("EVC instance without psi".into()))?
                .amplitudes(),
        ),
        Kind::Pcvc => {
            return Err(QlrError::KindMismatch(
                "pcvc instances are unconstrained".into(),
            ))
        }
    };
    Ok(inst
        .edges
        .iter()
        .map(|e| {
            let (u, v) = (state.bloch[e.u], state.bloch[e.v]);
            match psi {
                None => edge_zero_zero_expectation(u, v),
                Some(p) => psi_expectation(p, u, v),
            }
        })
        .collect())
}

/// True iff every edge constraint expectation is `<= tol`.
pub fn feasibility(inst: &Instance, state: &ProductState, tol: f64) -> Result<bool> {
    Ok(constraint_expectations(inst, state)?
        .iter()
        .all(|&x| x <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::{BlochProjector, LocalTerm};
    use crate::instance::{Edge, Psi};

    fn tvc_edge(projector: BlochProjector) -> Instance {
        let mut inst = Instance::new(Kind::Tvc, 2);
        inst.terms[0] = LocalTerm::new(1.0, projector, 0.0);
        inst.terms[1] = LocalTerm::new(1.0, projector, 0.0);
        inst.add_edge(Edge::new(0, 1));
        inst
    }

    #[test]
    fn transverse_edge_on_ones() {
        let inst = tvc_edge(BlochProjector::minus_x());
        let e = evaluate(&inst, &ProductState::all_ones(2)).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classical_path_counts_selected() {
        let mut inst = Instance::new(Kind::Tvc, 3);
        for t in inst.terms.iter_mut() {
            *t = LocalTerm::new(1.0, BlochProjector::ket1(), 0.0);
        }
        inst.add_edge(Edge::new(0, 1));
        inst.add_edge(Edge::new(1, 2));
        let e = evaluate(&inst, &ProductState::from_bits(&[1, 1, 0])).unwrap();
        assert!((e - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pcvc_penalty_on_plus_states() {
        let mut inst = Instance::new(Kind::Pcvc, 2);
        inst.terms[0] = LocalTerm::new(0.0, BlochProjector::minus_x(), 0.0);
        inst.terms[1] = LocalTerm::new(0.0, BlochProjector::minus_x(), 0.0);
        inst.add_edge(Edge::with_penalty(0, 1, 4.0));
        let plus = ProductState::new(vec![[1.0, 0.0, 0.0]; 2]);
        let e = evaluate(&inst, &plus).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feasibility_examples() {
        let inst = tvc_edge(BlochProjector::ket1());
        assert!(feasibility(&inst, &ProductState::from_bits(&[1, 1]), 1e-9).unwrap());
        assert!(feasibility(&inst, &ProductState::from_bits(&[0, 1]), 1e-9).unwrap());
        // |0+> violates with expectation 1/2
        let zero_plus = ProductState::new(vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]);
        let exps = constraint_expectations(&inst, &zero_plus).unwrap();
        assert!((exps[0] - 0.5).abs() < 1e-12);
        assert!(!feasibility(&inst, &zero_plus, 1e-9).unwrap());
    }

    #[test]
    fn evc_singlet_expectation() {
        let mut inst = Instance::new(Kind::Evc, 2);
        inst.psi = Some(Psi::Singlet);
        inst.add_edge(Edge::new(0, 1));
        // |01> has overlap 1/2 with the singlet
        let exps =
            constraint_expectations(&inst, &ProductState::from_bits(&[0, 1])).unwrap();
        assert!((exps[0] - 0.5).abs() < 1e-12);
        // |11> is orthogonal to it
        assert!(feasibility(&inst, &ProductState::from_bits(&[1, 1]), 1e-9).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let inst = tvc_edge(BlochProjector::ket1());
        assert!(evaluate(&inst, &ProductState::all_ones(3)).is_err());
    }
}
