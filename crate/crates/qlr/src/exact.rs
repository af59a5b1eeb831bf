//! Desk-scale exact oracles: covering-subspace diagonalization for TVC,
//! full-space diagonalization for TPCVC, and constraint-nullspace
//! diagonalization for EVC.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QlrError, Result};
use crate::instance::{Instance, Kind};

/// Default cap on qubit count for cover enumeration.
pub const DEFAULT_COVER_CAP: usize = 24;
/// Dense eigensolver is used up to this dimension; Lanczos above.
pub const DENSE_EIG_CAP: usize = 2048;
/// Oracles switch to Lanczos above this subspace dimension.
const ORACLE_DENSE_CAP: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Covering,
    Full,
    Nullspace,
}

/// Output of an exact oracle: subspace dimension, the `k` lowest
/// eigenvalues in ascending order, and which basis was diagonalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub dim: usize,
    pub eigs: Vec<f64>,
    pub basis: BasisKind,
    pub infeasible: bool,
}

impl SpectrumReport {
    pub fn ground_energy(&self) -> Option<f64> {
        if self.infeasible {
            None
        } else {
            self.eigs.first().copied()
        }
    }
}

// ---------------------------------------------------------------------------
// Eigensolvers
// ---------------------------------------------------------------------------

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(QlrError::InvalidParameter("matrix is not square".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    if worst > 1e-10 {
        return Err(QlrError::NonHermitian(worst));
    }
    Ok(())
}

/// Smallest eigenvalue of a real symmetric matrix. Dense up to
/// [`DENSE_EIG_CAP`], deterministic restarted Lanczos above.
pub fn smallest_eigenvalue(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    check_symmetric(m)?;
    let dim = m.nrows();
    if dim == 0 {
        return Err(QlrError::InvalidParameter("empty matrix".into()));
    }
    if dim <= DENSE_EIG_CAP {
        Ok(dense_lowest(m, 1)[0])
    } else {
        let op = |x: &[f64], y: &mut [f64]| {
            let xv = DVector::from_column_slice(x);
            let yv = m * xv;
            y.copy_from_slice(yv.as_slice());
        };
        Ok(lanczos_lowest(&op, dim, 1, tol)?[0])
    }
}

/// Smallest eigenvalue of a complex Hermitian matrix (dense only).
pub fn smallest_eigenvalue_hermitian(m: &DMatrix<Complex64>, _tol: f64) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() || n == 0 {
        return Err(QlrError::InvalidParameter("matrix is not square".into()));
    }
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if worst > 1e-10 {
        return Err(QlrError::NonHermitian(worst));
    }
    let eig = m.clone().symmetric_eigen();
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// All-`k` lowest eigenvalues of a real symmetric matrix via dense solve.
pub fn dense_lowest(m: &DMatrix<f64>, k: usize) -> Vec<f64> {
    let eig = m.clone().symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.truncate(k);
    vals
}

/// Deterministic start vector: all-equal entries plus a fixed perturbation.
fn start_vector(dim: usize, sweep: usize) -> Vec<f64> {
    (0..dim)
        .map(|i| 1.0 + 1e-3 * ((i + 1) as f64 * 0.6180339887498949 + sweep as f64 * 0.25).fract())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Lowest `k` eigenvalues of a symmetric operator given by its
/// matrix-vector product, via Lanczos with full reorthogonalization,
/// deterministic restarts, and locking of converged Ritz pairs.
pub fn lanczos_lowest(
    op: &dyn Fn(&[f64], &mut [f64]),
    dim: usize,
    k: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    let k = k.min(dim);
    if dim <= 64 {
        // materialize: cheaper and exact at this size
        let mut m = DMatrix::<f64>::zeros(dim, dim);
        let mut e = vec![0.0; dim];
        let mut col = vec![0.0; dim];
        for j in 0..dim {
            e[j] = 1.0;
            op(&e, &mut col);
            for i in 0..dim {
                m[(i, j)] = col[i];
            }
            e[j] = 0.0;
        }
        return Ok(dense_lowest(&m, k));
    }

    let mut locked: Vec<(f64, Vec<f64>)> = Vec::new();
    let mut norm_est = 1.0f64;
    let max_sweeps = 60;
    for sweep in 0..max_sweeps {
        let m_steps = (dim - locked.len()).min(40 + 10 * sweep + 6 * k);
        let mut v = start_vector(dim, sweep);
        // project out locked eigenvectors
        for (_, u) in &locked {
            let c = dot(&v, u);
            for i in 0..dim {
                v[i] -= c * u[i];
            }
        }
        let nv = norm(&v);
        if nv < 1e-14 {
            continue;
        }
        for x in v.iter_mut() {
            *x /= nv;
        }

        let mut basis: Vec<Vec<f64>> = vec![v];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        let mut w = vec![0.0; dim];
        let mut invariant = false;
        for j in 0..m_steps {
            op(&basis[j], &mut w);
            let alpha = dot(&w, &basis[j]);
            alphas.push(alpha);
            // full reorthogonalization against locked and current basis, two passes
            for _ in 0..2 {
                for (_, u) in &locked {
                    let c = dot(&w, u);
                    for i in 0..dim {
                        w[i] -= c * u[i];
                    }
                }
                for b in &basis {
                    let c = dot(&w, b);
                    for i in 0..dim {
                        w[i] -= c * b[i];
                    }
                }
            }
            let beta = norm(&w);
            norm_est = norm_est.max(alpha.abs() + 2.0 * beta);
            if beta < 1e-12 * norm_est.max(1.0) {
                invariant = true;
                break;
            }
            if j + 1 == m_steps {
                betas.push(beta);
                break;
            }
            betas.push(beta);
            basis.push(w.iter().map(|x| x / beta).collect());
            w.iter_mut().for_each(|x| *x = 0.0);
        }

        let m = alphas.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alphas[i];
            if i + 1 < m {
                t[(i, i + 1)] = betas[i];
                t[(i + 1, i)] = betas[i];
            }
        }
        let eig = t.symmetric_eigen();
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

        let beta_last = if invariant { 0.0 } else { betas.last().copied().unwrap_or(0.0) };
        let conv_tol = tol.max(1e-14) * norm_est.max(1.0);
        let mut progressed = false;
        for &idx in &order {
            if locked.len() >= k {
                break;
            }
            let theta = eig.eigenvalues[idx];
            let s = eig.eigenvectors.column(idx);
            let residual = beta_last * s[m - 1].abs();
            if residual <= conv_tol || invariant {
                // assemble the Ritz vector and lock it
                let mut y = vec![0.0; dim];
                for (j, b) in basis.iter().enumerate() {
                    let c = s[j];
                    for i in 0..dim {
                        y[i] += c * b[i];
                    }
                }
                for (_, u) in &locked {
                    let c = dot(&y, u);
                    for i in 0..dim {
                        y[i] -= c * u[i];
                    }
                }
                let ny = norm(&y);
                if ny > 1e-10 {
                    for x in y.iter_mut() {
                        *x /= ny;
                    }
                    locked.push((theta, y));
                    progressed = true;
                }
            } else {
                break; // Ritz values converge in order; stop at the first miss
            }
        }
        if locked.len() >= k {
            let mut vals: Vec<f64> = locked.iter().map(|(e, _)| *e).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
            vals.truncate(k);
            return Ok(vals);
        }
        let _ = progressed;
    }
    Err(QlrError::NoConvergence {
        residual: f64::NAN,
        iterations: max_sweeps,
    })
}

// ---------------------------------------------------------------------------
// Cover enumeration and the TVC oracle
// ---------------------------------------------------------------------------

/// Bit of qubit `i` in the lexicographic string convention (`x_0` is the
/// leftmost / most significant character).
#[inline]
fn bit(word: u64, i: usize, n: usize) -> u64 {
    (word >> (n - 1 - i)) & 1
}

/// All computational basis states whose 0-set is an independent set of the
/// graph, in lexicographic order.
pub fn enumerate_covers(n: usize, edges: &[(usize, usize)], cap: usize) -> Result<Vec<u64>> {
    if n > cap {
        return Err(QlrError::CapExceeded(format!(
            "n = {} exceeds cover-enumeration cap {}",
            n, cap
        )));
    }
    let mut masks: Vec<u64> = Vec::with_capacity(edges.len());
    for &(u, v) in edges {
        masks.push((1u64 << (n - 1 - u)) | (1u64 << (n - 1 - v)));
    }
    let mut covers = Vec::new();
    for word in 0..(1u64 << n) {
        if masks.iter().all(|&m| word & m != 0) {
            covers.push(word);
        }
    }
    Ok(covers)
}

/// Sparse covering-subspace Hamiltonian of a canonical TVC instance.
struct CoveringHamiltonian {
    basis: Vec<u64>,
    index: std::collections::HashMap<u64, usize>,
    diag: Vec<f64>,
    /// per-qubit off-diagonal amplitude `c_i * ax_i / 2`
    offdiag: Vec<f64>,
    n: usize,
}

impl CoveringHamiltonian {
    fn build(inst: &Instance, basis: Vec<u64>) -> Self {
        let n = inst.n;
        let index: std::collections::HashMap<u64, usize> =
            basis.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let offset = inst.total_offset();
        let diag: Vec<f64> = basis
            .iter()
            .map(|&word| {
                let mut e = offset;
                for (i, t) in inst.terms.iter().enumerate() {
                    let z = if bit(word, i, n) == 0 { 1.0 } else { -1.0 };
                    e += t.weight * 0.5 * (1.0 + t.projector.az * z);
                }
                e
            })
            .collect();
        let offdiag: Vec<f64> = inst
            .terms
            .iter()
            .map(|t| t.weight * 0.5 * t.projector.ax)
            .collect();
        Self {
            basis,
            index,
            diag,
            offdiag,
            n,
        }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (row, &word) in self.basis.iter().enumerate() {
            let mut acc = self.diag[row] * x[row];
            for i in 0..self.n {
                if self.offdiag[i] == 0.0 {
                    continue;
                }
                let flipped = word ^ (1u64 << (self.n - 1 - i));
                if let Some(&col) = self.index.get(&flipped) {
                    acc += self.offdiag[i] * x[col];
                }
            }
            y[row] = acc;
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let d = self.basis.len();
        let mut m = DMatrix::zeros(d, d);
        for (row, &word) in self.basis.iter().enumerate() {
            m[(row, row)] = self.diag[row];
            for i in 0..self.n {
                if self.offdiag[i] == 0.0 {
                    continue;
                }
                let flipped = word ^ (1u64 << (self.n - 1 - i));
                if let Some(&col) = self.index.get(&flipped) {
                    m[(row, col)] += self.offdiag[i];
                }
            }
        }
        m
    }
}

fn lowest_of(h: &CoveringHamiltonian, k: usize, tol: f64) -> Result<Vec<f64>> {
    let dim = h.basis.len();
    if dim <= ORACLE_DENSE_CAP {
        Ok(dense_lowest(&h.dense(), k))
    } else {
        lanczos_lowest(&|x, y| h.matvec(x, y), dim, k.min(dim), tol)
    }
}

/// Smallest `k` eigenvalues of the TVC Hamiltonian restricted to the
/// covering subspace.
pub fn ground_energy_tvc_k(inst: &Instance, k: usize) -> Result<SpectrumReport> {
    if inst.kind != Kind::Tvc {
        return Err(QlrError::KindMismatch("expected a tvc instance".into()));
    }
    let (canon, _) = inst.canonicalize()?;
    let edges: Vec<(usize, usize)> = canon.edges.iter().map(|e| (e.u, e.v)).collect();
    let basis = enumerate_covers(canon.n, &edges, DEFAULT_COVER_CAP)?;
    if basis.is_empty() {
        return Ok(SpectrumReport {
            dim: 0,
            eigs: Vec::new(),
            basis: BasisKind::Covering,
            infeasible: true,
        });
    }
    if basis.len() > (1 << 20) {
        return Err(QlrError::CapExceeded(format!(
            "covering subspace dimension {} exceeds 2^20",
            basis.len()
        )));
    }
    let h = CoveringHamiltonian::build(&canon, basis);
    let eigs = lowest_of(&h, k, 1e-11)?;
    Ok(SpectrumReport {
        dim: h.basis.len(),
        eigs,
        basis: BasisKind::Covering,
        infeasible: false,
    })
}

pub fn ground_energy_tvc(inst: &Instance) -> Result<SpectrumReport> {
    ground_energy_tvc_k(inst, 1)
}

// ---------------------------------------------------------------------------
// Full-space TPCVC oracle
// ---------------------------------------------------------------------------

struct FullHamiltonian {
    n: usize,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl FullHamiltonian {
    fn build(inst: &Instance) -> Self {
        let n = inst.n;
        let dim = 1usize << n;
        let offset = inst.total_offset();
        let mut diag = vec![offset; dim];
        for (word, d) in diag.iter_mut().enumerate() {
            let word = word as u64;
            for (i, t) in inst.terms.iter().enumerate() {
                let z = if bit(word, i, n) == 0 { 1.0 } else { -1.0 };
                *d += t.weight * 0.5 * (1.0 + t.projector.az * z);
            }
            for e in &inst.edges {
                if bit(word, e.u, n) == 0 && bit(word, e.v, n) == 0 {
                    *d += e.penalty();
                }
            }
        }
        let offdiag = inst
            .terms
            .iter()
            .map(|t| t.weight * 0.5 * t.projector.ax)
            .collect();
        Self { n, diag, offdiag }
    }

    fn matvec(&self, x: &[f64], y: &mut [f64]) {
        let dim = 1usize << self.n;
        for row in 0..dim {
            let mut acc = self.diag[row] * x[row];
            for i in 0..self.n {
                if self.offdiag[i] == 0.0 {
                    continue;
                }
                let col = row ^ (1usize << (self.n - 1 - i));
                acc += self.offdiag[i] * x[col];
            }
            y[row] = acc;
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        let dim = 1usize << self.n;
        let mut m = DMatrix::zeros(dim, dim);
        for row in 0..dim {
            m[(row, row)] = self.diag[row];
            for i in 0..self.n {
                if self.offdiag[i] == 0.0 {
                    continue;
                }
                let col = row ^ (1usize << (self.n - 1 - i));
                m[(row, col)] += self.offdiag[i];
            }
        }
        m
    }
}

/// Smallest `k` eigenvalues of the full `2^n`-dimensional TPCVC Hamiltonian.
pub fn ground_energy_full_k(inst: &Instance, k: usize) -> Result<SpectrumReport> {
    if inst.kind != Kind::Pcvc {
        return Err(QlrError::KindMismatch("expected a pcvc instance".into()));
    }
    if inst.n > 20 {
        return Err(QlrError::CapExceeded(format!("n = {} exceeds 20", inst.n)));
    }
    let (canon, _) = inst.canonicalize()?;
    let h = FullHamiltonian::build(&canon);
    let dim = 1usize << canon.n;
    let eigs = if dim <= ORACLE_DENSE_CAP {
        dense_lowest(&h.dense(), k)
    } else {
        lanczos_lowest(&|x, y| h.matvec(x, y), dim, k.min(dim), 1e-11)?
    };
    Ok(SpectrumReport {
        dim,
        eigs,
        basis: BasisKind::Full,
        infeasible: false,
    })
}

pub fn ground_energy_full(inst: &Instance) -> Result<SpectrumReport> {
    ground_energy_full_k(inst, 1)
}

// ---------------------------------------------------------------------------
// EVC constraint-nullspace oracle
// ---------------------------------------------------------------------------

/// Dense complex Hamiltonian `sum_i c_i phi_i (+ penalties) + offsets`,
/// for cross-checks on small instances.
pub fn dense_hamiltonian(inst: &Instance) -> Result<DMatrix<Complex64>> {
    if inst.n > 14 {
        return Err(QlrError::CapExceeded(format!("n = {} exceeds 14", inst.n)));
    }
    let n = inst.n;
    let dim = 1usize << n;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    let offset = Complex64::new(inst.total_offset(), 0.0);
    for i in 0..dim {
        m[(i, i)] += offset;
    }
    for (q, t) in inst.terms.iter().enumerate() {
        let p = t.projector.matrix();
        for row in 0..dim {
            let b = bit(row as u64, q, n) as usize;
            m[(row, row)] += t.weight * p[b][b];
            let other = row ^ (1usize << (n - 1 - q));
            let b2 = 1 - b;
            m[(row, other)] += t.weight * p[b][b2];
        }
    }
    if inst.kind == Kind::Pcvc {
        for e in &inst.edges {
            for row in 0..dim {
                if bit(row as u64, e.u, n) == 0 && bit(row as u64, e.v, n) == 0 {
                    m[(row, row)] += Complex64::new(e.penalty(), 0.0);
                }
            }
        }
    }
    Ok(m)
}

/// Smallest `k` eigenvalues of the EVC objective projected onto the joint
/// nullspace of the edge constraints.
pub fn ground_energy_nullspace_k(inst: &Instance, k: usize) -> Result<SpectrumReport> {
    if inst.kind != Kind::Evc {
        return Err(QlrError::KindMismatch("expected an evc instance".into()));
    }
    if inst.n > 12 {
        return Err(QlrError::CapExceeded(format!("n = {} exceeds 12", inst.n)));
    }
    let psi = inst
        .psi
        .ok_or_else(|| QlrError::InvalidInstance("EVC instance without psi".into()))?
        .amplitudes();
    let n = inst.n;
    let dim = 1usize << n;
    // constraint sum is real symmetric (psi has real amplitudes)
    let mut c = DMatrix::<f64>::zeros(dim, dim);
    for e in &inst.edges {
        for row in 0..dim {
            let (bu, bv) = (bit(row as u64, e.u, n) as usize, bit(row as u64, e.v, n) as usize);
            let a_row = psi[2 * bu + bv];
            if a_row == 0.0 {
                continue;
            }
            for (cu, cv) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let a_col = psi[2 * cu + cv];
                if a_col == 0.0 {
                    continue;
                }
                let mut col = row;
                if cu != bu {
                    col ^= 1usize << (n - 1 - e.u);
                }
                if cv != bv {
                    col ^= 1usize << (n - 1 - e.v);
                }
                c[(row, col)] += a_row * a_col;
            }
        }
    }
    let eig = c.symmetric_eigen();
    let mut null_cols: Vec<usize> = (0..dim)
        .filter(|&j| eig.eigenvalues[j].abs() <= 1e-9)
        .collect();
    null_cols.sort();
    let d = null_cols.len();
    if d == 0 {
        return Ok(SpectrumReport {
            dim: 0,
            eigs: Vec::new(),
            basis: BasisKind::Nullspace,
            infeasible: true,
        });
    }
    let h = dense_hamiltonian(inst)?;
    // project: M = V^T H V with real nullspace basis V
    let mut v = DMatrix::<Complex64>::zeros(dim, d);
    for (jj, &j) in null_cols.iter().enumerate() {
        for i in 0..dim {
            v[(i, jj)] = Complex64::new(eig.eigenvectors[(i, j)], 0.0);
        }
    }
    let projected = v.adjoint() * h * &v;
    let peig = projected.symmetric_eigen();
    let mut vals: Vec<f64> = peig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.truncate(k);
    Ok(SpectrumReport {
        dim: d,
        eigs: vals,
        basis: BasisKind::Nullspace,
        infeasible: false,
    })
}

pub fn ground_energy_nullspace(inst: &Instance) -> Result<SpectrumReport> {
    ground_energy_nullspace_k(inst, 1)
}
