//! Single-qubit projectors in Bloch form and weighted 1-local terms.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Tolerance below which a Bloch vector is considered non-unit.
pub const UNIT_TOL: f64 = 1e-9;

/// A rank-1 single-qubit projector `phi = (I + ax X + ay Y + az Z) / 2`.
///
/// The Bloch vector `(ax, ay, az)` must have unit norm for `phi` to be a
/// rank-1 projector. Stoquastic (canonical) instances additionally require
/// `ay = 0` and `ax <= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochProjector {
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl BlochProjector {
    pub fn new(ax: f64, ay: f64, az: f64) -> Self {
        Self { ax, ay, az }
    }

    /// `|1><1| = (I - Z)/2`.
    pub fn ket1() -> Self {
        Self::new(0.0, 0.0, -1.0)
    }

    /// `(I - X)/2`, the fully transverse stoquastic projector.
    pub fn minus_x() -> Self {
        Self::new(-1.0, 0.0, 0.0)
    }

    pub fn norm(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }

    pub fn is_unit(&self) -> bool {
        (self.norm() - 1.0).abs() <= UNIT_TOL
    }

    /// True when the projector is diagonal in the computational basis,
    /// i.e. `phi = |1><1|` (up to tolerance).
    pub fn is_diagonal(&self) -> bool {
        self.ax.abs() <= UNIT_TOL && self.ay.abs() <= UNIT_TOL
    }

    /// The antipodal projector `I - phi`.
    pub fn complement(&self) -> Self {
        Self::new(-self.ax, -self.ay, -self.az)
    }

    /// Dense 2x2 matrix, row-major `[ [00, 01], [10, 11] ]`.
    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        let half = 0.5;
        [
            [
                Complex64::new(half * (1.0 + self.az), 0.0),
                Complex64::new(half * self.ax, -half * self.ay),
            ],
            [
                Complex64::new(half * self.ax, half * self.ay),
                Complex64::new(half * (1.0 - self.az), 0.0),
            ],
        ]
    }

    /// `Tr[phi rho]` for a density operator with Bloch vector `r`.
    pub fn expectation(&self, r: [f64; 3]) -> f64 {
        0.5 * (1.0 + self.ax * r[0] + self.ay * r[1] + self.az * r[2])
    }
}

/// A weighted 1-local term `c * phi + offset * I` with `c >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTerm {
    pub weight: f64,
    pub projector: BlochProjector,
    pub offset: f64,
}

impl LocalTerm {
    pub fn new(weight: f64, projector: BlochProjector, offset: f64) -> Self {
        Self {
            weight,
            projector,
            offset,
        }
    }

    /// Energy of the term on a state with Bloch vector `r`.
    pub fn energy(&self, r: [f64; 3]) -> f64 {
        self.weight * self.projector.expectation(r) + self.offset
    }

    /// Expand back to Pauli field coefficients `(hx, hy, hz, e)`.
    pub fn to_fields(&self) -> (f64, f64, f64, f64) {
        let half_c = 0.5 * self.weight;
        (
            half_c * self.projector.ax,
            half_c * self.projector.ay,
            half_c * self.projector.az,
            half_c + self.offset,
        )
    }
}

/// Factor the field Hamiltonian `hx X + hy Y + hz Z + e I` into
/// `c * phi + offset * I` with `c >= 0` and `phi` a rank-1 projector.
///
/// The decomposition is exact: `c = 2 |h|`, `phi` has Bloch vector `h / |h|`,
/// and `offset = e - |h|`. A zero field yields `c = 0` with the fixed
/// convention `phi = |1><1|`.
pub fn assemble_local_term(hx: f64, hy: f64, hz: f64, e: f64) -> LocalTerm {
    let r = (hx * hx + hy * hy + hz * hz).sqrt();
    if r == 0.0 {
        return LocalTerm::new(0.0, BlochProjector::ket1(), e);
    }
    LocalTerm::new(
        2.0 * r,
        BlochProjector::new(hx / r, hy / r, hz / r),
        e - r,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assemble_pure_z_field() {
        // -(7/2) Z = 7 (I - Z)/2 - 7/2
        let t = assemble_local_term(0.0, 0.0, -3.5, 0.0);
        assert!((t.weight - 7.0).abs() < 1e-12);
        assert_eq!(t.projector, BlochProjector::ket1());
        assert!((t.offset + 3.5).abs() < 1e-12);
    }

    #[test]
    fn assemble_transverse_field() {
        let t = assemble_local_term(-0.5, 0.0, 0.0, 0.5);
        assert!((t.weight - 1.0).abs() < 1e-12);
        assert_eq!(t.projector, BlochProjector::minus_x());
        assert!(t.offset.abs() < 1e-12);
    }

    #[test]
    fn assemble_zero_field() {
        let t = assemble_local_term(0.0, 0.0, 0.0, 0.0);
        assert_eq!(t.weight, 0.0);
        assert_eq!(t.offset, 0.0);
        assert_eq!(t.projector, BlochProjector::ket1());
    }

    #[test]
    fn field_round_trip() {
        let cases = [
            (0.3, -0.2, -1.4, 0.7),
            (-1.0, 0.0, 0.0, 0.0),
            (0.0, 0.0, -3.5, 0.25),
            (1e-8, 2e-9, -5e-8, 1.0),
        ];
        for &(hx, hy, hz, e) in &cases {
            let t = assemble_local_term(hx, hy, hz, e);
            let (gx, gy, gz, ge) = t.to_fields();
            assert!((gx - hx).abs() < 1e-12, "hx mismatch for {:?}", (hx, hy, hz, e));
            assert!((gy - hy).abs() < 1e-12);
            assert!((gz - hz).abs() < 1e-12);
            assert!((ge - e).abs() < 1e-12);
        }
    }

    #[test]
    fn term_energy_range() {
        let t = assemble_local_term(-0.4, 0.1, -0.9, 0.2);
        // energy on any pure state lies in [offset, offset + c]
        for &r in &[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [-1.0, 0.0, 0.0], [0.6, 0.0, 0.8]] {
            let en = t.energy(r);
            assert!(en >= t.offset - 1e-12);
            assert!(en <= t.offset + t.weight + 1e-12);
        }
    }
}
