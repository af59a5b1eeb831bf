//! Polynomial-time solver for the entangled-constraint problem: constraint
//! canonicalization (Takagi), transfer-matrix constraint closure, and
//! reduction to small eigenvalue problems in permutation-symmetric bases.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{QlrError, Result};
use crate::instance::{Instance, Kind, Psi};

type C = Complex64;

fn c(re: f64) -> C {
    C::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Takagi canonicalization of the constraint state
// ---------------------------------------------------------------------------

/// A raw 2-qubit constraint state together with its canonical form and the
/// single-qubit unitary that maps raw to canonical (`canonical = U⊗U raw`).
#[derive(Debug, Clone)]
pub struct ConstraintState {
    pub form: Psi,
    pub raw: [C; 4],
    pub u: [[C; 2]; 2],
}

fn mat2_mul(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    let mut r = [[c(0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

fn mat2_conj(a: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    [[a[0][0].conj(), a[0][1].conj()], [a[1][0].conj(), a[1][1].conj()]]
}

fn mat2_adjoint(a: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    [[a[0][0].conj(), a[1][0].conj()], [a[0][1].conj(), a[1][1].conj()]]
}

/// 2x2 Takagi factorization `m = v diag(s1, s2) v^T` with `v` unitary and
/// `s1 >= s2 >= 0`. Degenerate singular values are resolved by taking the
/// symmetric square root closest to the identity.
fn takagi_2x2(m: &[[C; 2]; 2]) -> ([f64; 2], [[C; 2]; 2]) {
    // eigendecompose the Hermitian product m * conj(m)
    let p = mat2_mul(m, &mat2_conj(m));
    let h = DMatrix::from_row_slice(2, 2, &[p[0][0], p[0][1], p[1][0], p[1][1]]);
    let eig = h.symmetric_eigen();
    let mut idx = [0usize, 1usize];
    if eig.eigenvalues[0] < eig.eigenvalues[1] {
        idx = [1, 0];
    }
    let s1 = eig.eigenvalues[idx[0]].max(0.0).sqrt();
    let s2 = eig.eigenvalues[idx[1]].max(0.0).sqrt();

    if (s1 - s2).abs() > 1e-10 * s1.max(1.0) {
        // non-degenerate: each eigenvector w of m conj(m) satisfies
        // m conj(w) = sigma e^{i theta} w; rotate by half the phase
        let mut v = [[c(0.0); 2]; 2];
        for (col, (&k, &s)) in idx.iter().zip([s1, s2].iter()).enumerate() {
            let w = [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
            let mw = [
                m[0][0] * w[0].conj() + m[0][1] * w[1].conj(),
                m[1][0] * w[0].conj() + m[1][1] * w[1].conj(),
            ];
            let col_vec = if s > 1e-12 {
                let mu = w[0].conj() * mw[0] + w[1].conj() * mw[1];
                let phase = C::from_polar(1.0, 0.5 * mu.arg());
                [phase * w[0], phase * w[1]]
            } else {
                w
            };
            v[0][col] = col_vec[0];
            v[1][col] = col_vec[1];
        }
        return ([s1, s2], v);
    }

    // degenerate: m = s * S with S symmetric unitary; take the principal
    // symmetric square root V = S^{1/2}, so V V^T = V^2 = S
    let s = s1;
    if s <= 1e-14 {
        return ([0.0, 0.0], [[c(1.0), c(0.0)], [c(0.0), c(1.0)]]);
    }
    let sm = [[m[0][0] / s, m[0][1] / s], [m[1][0] / s, m[1][1] / s]];
    // S = X + iY with commuting real symmetric X, Y; diagonalize whichever
    // has a spectral gap (if neither does, S is a scalar phase)
    let x = [[sm[0][0].re, sm[0][1].re], [sm[1][0].re, sm[1][1].re]];
    let y = [[sm[0][0].im, sm[0][1].im], [sm[1][0].im, sm[1][1].im]];
    let pick = |a: &[[f64; 2]; 2]| {
        // eigen of real symmetric 2x2; returns (q, lam) with a = q lam q^T
        let tr = a[0][0] + a[1][1];
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        let (l1, l2) = (tr / 2.0 + disc, tr / 2.0 - disc);
        let q = if a[0][1].abs() > 1e-14 {
            let v1 = [a[0][1], l1 - a[0][0]];
            let n1 = (v1[0] * v1[0] + v1[1] * v1[1]).sqrt();
            [[v1[0] / n1, -v1[1] / n1], [v1[1] / n1, v1[0] / n1]]
        } else {
            [[1.0, 0.0], [0.0, 1.0]]
        };
        (q, [l1, l2])
    };
    let gap_x = {
        let t = x[0][0] - x[1][1];
        (t * t + 4.0 * x[0][1] * x[0][1]).sqrt()
    };
    let (q, _) = if gap_x > 1e-12 { pick(&x) } else { pick(&y) };
    // eigenphases of S in the q basis
    let mut v = [[c(0.0); 2]; 2];
    let mut d = [c(0.0); 2];
    for k in 0..2 {
        let qk = [q[0][k], q[1][k]];
        // Rayleigh quotient q^T S q is the unit-modulus eigenvalue
        let sq = [
            sm[0][0] * qk[0] + sm[0][1] * qk[1],
            sm[1][0] * qk[0] + sm[1][1] * qk[1],
        ];
        let lam = c(qk[0]) * sq[0] + c(qk[1]) * sq[1];
        d[k] = C::from_polar(1.0, 0.5 * lam.arg());
    }
    for i in 0..2 {
        for j in 0..2 {
            v[i][j] = c(q[i][0]) * d[0] * c(q[j][0]) + c(q[i][1]) * d[1] * c(q[j][1]);
        }
    }
    ([s, s], v)
}

/// Canonicalize a raw SWAP-invariant constraint state: singlet if it is
/// antisymmetric, else `alpha|00> + beta|11>` via Takagi factorization of
/// its symmetric coefficient matrix. Records the canonicalizing unitary.
pub fn takagi_canonicalize(raw_in: &[C; 4]) -> Result<ConstraintState> {
    let norm: f64 = raw_in.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-14 {
        return Err(QlrError::InvalidInstance("zero constraint state".into()));
    }
    let raw = [
        raw_in[0] / norm,
        raw_in[1] / norm,
        raw_in[2] / norm,
        raw_in[3] / norm,
    ];
    let swapped = [raw[0], raw[2], raw[1], raw[3]];
    let dist = |a: &[C; 4], b: &[C; 4], sign: f64| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (*x - *y * sign).norm_sqr())
            .sum::<f64>()
            .sqrt()
    };
    let anti = dist(&raw, &swapped, -1.0);
    let sym = dist(&raw, &swapped, 1.0);
    if anti <= 1e-10 {
        return Ok(ConstraintState {
            form: Psi::Singlet,
            raw: *raw_in,
            u: [[c(1.0), c(0.0)], [c(0.0), c(1.0)]],
        });
    }
    if sym > 1e-10 {
        return Err(QlrError::InvalidInstance(
            "constraint state is not SWAP-invariant".into(),
        ));
    }
    let off = (raw[1] + raw[2]) * 0.5;
    let m = [[raw[0], off], [off, raw[3]]];
    let (s, v) = takagi_2x2(&m);
    // canonical = (v^dagger)⊗2 raw has coefficient matrix diag(s1, s2)
    let u = mat2_adjoint(&v);
    let total = (s[0] * s[0] + s[1] * s[1]).sqrt();
    Ok(ConstraintState {
        form: Psi::Diagonal {
            alpha: s[0] / total,
            beta: s[1] / total,
        },
        raw: *raw_in,
        u,
    })
}

impl ConstraintState {
    /// The canonical state as 4 amplitudes.
    pub fn canonical_amplitudes(&self) -> [f64; 4] {
        self.form.amplitudes()
    }

    /// Apply `u^dagger ⊗ u^dagger` to the canonical state; should match
    /// `raw` up to global phase.
    pub fn rotate_back(&self) -> [C; 4] {
        let ud = mat2_adjoint(&self.u);
        let can = self.canonical_amplitudes();
        let mut out = [c(0.0); 4];
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = c(0.0);
                for k in 0..2 {
                    for l in 0..2 {
                        acc += ud[i][k] * ud[j][l] * c(can[2 * k + l]);
                    }
                }
                out[2 * i + j] = acc;
            }
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Classification and constraint closure
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CaseTag {
    /// Bipartite component, diagonal entangled constraint; holds the sides.
    Case1 { a: Vec<usize>, b: Vec<usize> },
    /// Singlet constraint, any graph.
    Case2,
    /// Non-bipartite component, diagonal entangled constraint.
    Case3,
    /// Product-state constraint (`alpha * beta = 0`); outside the scope of
    /// the closure machinery — route to the covering solvers instead.
    Classical,
}

#[derive(Debug, Clone)]
pub struct Component {
    pub vertices: Vec<usize>,
    pub tag: CaseTag,
}

/// Classify each connected component by constraint form and bipartiteness.
pub fn classify(inst: &Instance) -> Result<Vec<Component>> {
    if inst.kind != Kind::Evc {
        return Err(QlrError::KindMismatch("expected an evc instance".into()));
    }
    let psi = inst
        .psi
        .ok_or_else(|| QlrError::InvalidInstance("EVC instance without psi".into()))?;
    let n = inst.n;
    let mut adj = vec![Vec::new(); n];
    for e in &inst.edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let classical = matches!(psi, Psi::Diagonal { alpha, beta } if alpha.abs() <= 1e-12 || beta.abs() <= 1e-12);

    let mut color = vec![-1i8; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if color[start] >= 0 {
            continue;
        }
        let mut queue = std::collections::VecDeque::from([start]);
        color[start] = 0;
        let mut vertices = vec![start];
        let mut bipartite = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if color[w] < 0 {
                    color[w] = 1 - color[v];
                    vertices.push(w);
                    queue.push_back(w);
                } else if color[w] == color[v] {
                    bipartite = false;
                }
            }
        }
        vertices.sort();
        let tag = if classical {
            CaseTag::Classical
        } else {
            match psi {
                Psi::Singlet => CaseTag::Case2,
                Psi::Diagonal { .. } => {
                    if bipartite {
                        let a: Vec<usize> =
                            vertices.iter().cloned().filter(|&v| color[v] == 0).collect();
                        let b: Vec<usize> =
                            vertices.iter().cloned().filter(|&v| color[v] == 1).collect();
                        CaseTag::Case1 { a, b }
                    } else {
                        CaseTag::Case3
                    }
                }
            }
        };
        comps.push(Component { vertices, tag });
    }
    Ok(comps)
}

/// Derived pairwise constraints on one connected component.
#[derive(Debug, Clone, PartialEq)]
pub struct Closure {
    /// Pairs forced to satisfy the singlet constraint (symmetrization).
    pub eps_pairs: Vec<(usize, usize)>,
    /// Pairs forced to satisfy the diagonal constraint.
    pub psi_pairs: Vec<(usize, usize)>,
    /// Step-by-step derivation when audit mode is on.
    pub trace: Option<Vec<String>>,
}

/// Closed-form constraint closure of a connected component. With
/// `audit = true` the result is instead derived by saturating the three
/// transfer-matrix combination rules over the given edges, with a trace.
pub fn closure_edges(
    vertices: &[usize],
    edges: &[(usize, usize)],
    tag: &CaseTag,
    audit: bool,
) -> Result<Closure> {
    if audit {
        return Ok(saturate(vertices, edges, tag));
    }
    let mut eps = Vec::new();
    let mut psi = Vec::new();
    let pairs = |set: &[usize], out: &mut Vec<(usize, usize)>| {
        for (i, &u) in set.iter().enumerate() {
            for &v in &set[i + 1..] {
                out.push((u.min(v), u.max(v)));
            }
        }
    };
    match tag {
        CaseTag::Case1 { a, b } => {
            pairs(a, &mut eps);
            pairs(b, &mut eps);
            for &u in a {
                for &v in b {
                    psi.push((u.min(v), u.max(v)));
                }
            }
        }
        CaseTag::Case2 => pairs(vertices, &mut eps),
        CaseTag::Case3 => {
            pairs(vertices, &mut eps);
            pairs(vertices, &mut psi);
        }
        CaseTag::Classical => {
            return Err(QlrError::KindMismatch(
                "no closure for a product-state constraint".into(),
            ))
        }
    }
    eps.sort();
    psi.sort();
    Ok(Closure {
        eps_pairs: eps,
        psi_pairs: psi,
        trace: None,
    })
}

/// Saturate the three combination rules: psi+psi -> eps, eps+psi -> psi,
/// eps+eps -> eps (all sharing the middle vertex).
fn saturate(vertices: &[usize], edges: &[(usize, usize)], tag: &CaseTag) -> Closure {
    use std::collections::BTreeSet;
    let mut psi: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut eps: BTreeSet<(usize, usize)> = BTreeSet::new();
    let key = |u: usize, v: usize| (u.min(v), u.max(v));
    let singlet = *tag == CaseTag::Case2;
    for &(u, v) in edges {
        if singlet {
            eps.insert(key(u, v));
        } else {
            psi.insert(key(u, v));
        }
    }
    let mut trace = Vec::new();
    loop {
        let mut grew = false;
        let mut add_psi = Vec::new();
        let mut add_eps = Vec::new();
        for &mid in vertices {
            let psi_nb: Vec<usize> = psi
                .iter()
                .flat_map(|&(u, v)| {
                    if u == mid {
                        Some(v)
                    } else if v == mid {
                        Some(u)
                    } else {
                        None
                    }
                })
                .collect();
            let eps_nb: Vec<usize> = eps
                .iter()
                .flat_map(|&(u, v)| {
                    if u == mid {
                        Some(v)
                    } else if v == mid {
                        Some(u)
                    } else {
                        None
                    }
                })
                .collect();
            for &i in &psi_nb {
                for &k in &psi_nb {
                    if i != k && !eps.contains(&key(i, k)) {
                        add_eps.push((key(i, k), format!("psi({},{}) + psi({},{}) => eps{:?}", i, mid, mid, k, key(i, k))));
                    }
                }
            }
            for &i in &eps_nb {
                for &k in &psi_nb {
                    if i != k && !psi.contains(&key(i, k)) {
                        add_psi.push((key(i, k), format!("eps({},{}) + psi({},{}) => psi{:?}", i, mid, mid, k, key(i, k))));
                    }
                }
            }
            for &i in &eps_nb {
                for &k in &eps_nb {
                    if i != k && !eps.contains(&key(i, k)) {
                        add_eps.push((key(i, k), format!("eps({},{}) + eps({},{}) => eps{:?}", i, mid, mid, k, key(i, k))));
                    }
                }
            }
        }
        for (p, t) in add_eps {
            if eps.insert(p) {
                trace.push(t);
                grew = true;
            }
        }
        for (p, t) in add_psi {
            if psi.insert(p) {
                trace.push(t);
                grew = true;
            }
        }
        if !grew {
            break;
        }
    }
    Closure {
        eps_pairs: eps.into_iter().collect(),
        psi_pairs: psi.into_iter().collect(),
        trace: Some(trace),
    }
}

// ---------------------------------------------------------------------------
// Symmetric-subspace matrix elements
// ---------------------------------------------------------------------------

/// Single-site operator in the `{|0>, |1>}` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteOp {
    P00,
    P01,
    P10,
    P11,
}

/// `<a| op_i |b>` in the plain symmetric basis over `n` qubits.
/// Out-of-range sector indices give 0.
pub fn dicke_element_plain(op: SiteOp, a: usize, b: usize, n: usize) -> f64 {
    if n == 0 || a > n || b > n {
        return 0.0;
    }
    let nf = n as f64;
    match op {
        SiteOp::P00 => {
            if a == b {
                (nf - a as f64) / nf
            } else {
                0.0
            }
        }
        SiteOp::P11 => {
            if a == b {
                a as f64 / nf
            } else {
                0.0
            }
        }
        SiteOp::P01 => {
            if a + 1 == b {
                (((a + 1) as f64) * (nf - a as f64)).sqrt() / nf
            } else {
                0.0
            }
        }
        SiteOp::P10 => dicke_element_plain(SiteOp::P01, b, a, n),
    }
}

/// `<a,b| op_i |a',b'>` in the two-sided symmetric basis, for a site on
/// the first side of size `na` (swap arguments for the other side).
pub fn dicke_element_bipartite(
    op: SiteOp,
    (a, b): (usize, usize),
    (a2, b2): (usize, usize),
    na: usize,
) -> f64 {
    if b != b2 {
        return 0.0;
    }
    dicke_element_plain(op, a, a2, na)
}

// ---------------------------------------------------------------------------
// Case solvers
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaseKind {
    Case1,
    Case2,
    Case3,
}

/// Reduced eigenproblem solution for one connected component.
#[derive(Debug, Clone)]
pub struct EVCSolveResult {
    pub case: CaseKind,
    /// Objective value (weights only; term and global offsets are added by
    /// the driver).
    pub energy: f64,
    pub dim: usize,
    /// Ground eigenvector in the structured basis.
    pub amplitudes: Vec<C>,
    /// Component vertices (global ids, sorted).
    pub vertices: Vec<usize>,
    /// Bipartition for Case 1 (global ids).
    pub partition: Option<(Vec<usize>, Vec<usize>)>,
    /// `-alpha/beta` for the diagonal constraint cases.
    pub t: Option<f64>,
    /// The reduced Hermitian matrix.
    pub matrix: DMatrix<C>,
}

fn projector_matrix(inst: &Instance, i: usize) -> [[C; 2]; 2] {
    let t = &inst.terms[i];
    let p = t.projector.matrix();
    [
        [p[0][0] * t.weight, p[0][1] * t.weight],
        [p[1][0] * t.weight, p[1][1] * t.weight],
    ]
}

fn aggregate(inst: &Instance, vertices: &[usize]) -> [[C; 2]; 2] {
    let mut p = [[c(0.0); 2]; 2];
    for &v in vertices {
        let m = projector_matrix(inst, v);
        for i in 0..2 {
            for j in 0..2 {
                p[i][j] += m[i][j];
            }
        }
    }
    p
}

fn ln_binom(n: usize, k: usize) -> f64 {
    let mut v = 0.0f64;
    for i in 0..k {
        v += ((n - i) as f64).ln() - ((i + 1) as f64).ln();
    }
    v
}

/// Normalized weights `t^j * scale_j` for `j = 0..=jmax`, where
/// `ln(scale_j)` is supplied; accumulated in log space so `|t|` far from 1
/// (or large binomial factors) cannot overflow.
fn scaled_weights(t: f64, log_scales: &[f64]) -> Vec<f64> {
    let log_abs = t.abs().ln();
    let logs: Vec<f64> = log_scales
        .iter()
        .enumerate()
        .map(|(j, &ls)| j as f64 * log_abs + ls)
        .collect();
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logs
        .iter()
        .enumerate()
        .map(|(j, &l)| {
            let mag = (l - peak).exp();
            if t < 0.0 && j % 2 == 1 {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in w.iter_mut() {
        *x /= norm;
    }
    w
}

/// Weights of the Case 1 structured basis vector with sectors
/// `(a0 + j, b0 + j)`: the bitstring-amplitude relation
/// `u_{a+1,b+1} = t u_{a,b}` becomes `t^j sqrt(C(na, a0+j) C(nb, b0+j))`
/// on normalized sector states.
fn case1_weights(t: f64, a0: usize, b0: usize, na: usize, nb: usize, jmax: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..=jmax)
        .map(|j| 0.5 * (ln_binom(na, a0 + j) + ln_binom(nb, b0 + j)))
        .collect();
    scaled_weights(t, &logs)
}

/// Weights of the Case 3 even/odd vectors over plain sectors `a0 + 2k`.
fn case3_weights(t: f64, a0: usize, n: usize, kmax: usize) -> Vec<f64> {
    let logs: Vec<f64> = (0..=kmax).map(|k| 0.5 * ln_binom(n, a0 + 2 * k)).collect();
    scaled_weights(t, &logs)
}

/// Sector-space operator for one bipartite component: the objective in the
/// `|a, b>` basis, dimension `(na+1)(nb+1)`.
fn sector_operator_bipartite(
    inst: &Instance,
    side_a: &[usize],
    side_b: &[usize],
) -> DMatrix<C> {
    let (na, nb) = (side_a.len(), side_b.len());
    let dim = (na + 1) * (nb + 1);
    let idx = |a: usize, b: usize| a * (nb + 1) + b;
    let mut s = DMatrix::<C>::zeros(dim, dim);
    let pa = aggregate(inst, side_a);
    let pb = aggregate(inst, side_b);
    for a in 0..=na {
        for b in 0..=nb {
            let r = idx(a, b);
            if na > 0 {
                s[(r, r)] += pa[0][0] * c(dicke_element_plain(SiteOp::P00, a, a, na))
                    + pa[1][1] * c(dicke_element_plain(SiteOp::P11, a, a, na));
                if a + 1 <= na {
                    let v = dicke_element_plain(SiteOp::P01, a, a + 1, na);
                    s[(r, idx(a + 1, b))] += pa[0][1] * c(v);
                    s[(idx(a + 1, b), r)] += pa[1][0] * c(v);
                }
            }
            if nb > 0 {
                s[(r, r)] += pb[0][0] * c(dicke_element_plain(SiteOp::P00, b, b, nb))
                    + pb[1][1] * c(dicke_element_plain(SiteOp::P11, b, b, nb));
                if b + 1 <= nb {
                    let v = dicke_element_plain(SiteOp::P01, b, b + 1, nb);
                    s[(r, idx(a, b + 1))] += pb[0][1] * c(v);
                    s[(idx(a, b + 1), r)] += pb[1][0] * c(v);
                }
            }
        }
    }
    s
}

fn lowest_pair(m: &DMatrix<C>) -> (f64, Vec<C>) {
    let eig = m.clone().symmetric_eigen();
    let mut best = 0;
    for k in 1..m.nrows() {
        if eig.eigenvalues[k] < eig.eigenvalues[best] {
            best = k;
        }
    }
    (
        eig.eigenvalues[best],
        eig.eigenvectors.column(best).iter().cloned().collect(),
    )
}

fn diag_t(psi: &Psi) -> Result<f64> {
    match psi {
        Psi::Diagonal { alpha, beta } => {
            if alpha.abs() <= 1e-12 || beta.abs() <= 1e-12 {
                Err(QlrError::KindMismatch(
                    "product-state constraint: use the covering-problem solvers".into(),
                ))
            } else {
                Ok(-alpha / beta)
            }
        }
        Psi::Singlet => Err(QlrError::KindMismatch("expected a diagonal constraint".into())),
    }
}

/// Bipartite component with diagonal entangled constraint: reduce to an
/// eigenproblem of dimension `|A| + |B| + 1`.
pub fn solve_case1(inst: &Instance, side_a: &[usize], side_b: &[usize]) -> Result<EVCSolveResult> {
    let psi = inst
        .psi
        .ok_or_else(|| QlrError::InvalidInstance("EVC instance without psi".into()))?;
    let t = diag_t(&psi)?;
    let (na, nb) = (side_a.len(), side_b.len());
    let sdim = (na + 1) * (nb + 1);
    let idx = |a: usize, b: usize| a * (nb + 1) + b;
    let s = sector_operator_bipartite(inst, side_a, side_b);

    // structured basis: |0> over sectors (j, j); |a> over (a+j, j) for
    // a = 1..=na; |b> over (j, b+j) for b = 1..=nb
    let dim = na + nb + 1;
    let mut v = DMatrix::<C>::zeros(sdim, dim);
    let mut col = 0;
    {
        let w = case1_weights(t, 0, 0, na, nb, na.min(nb));
        for (j, &wj) in w.iter().enumerate() {
            v[(idx(j, j), col)] = c(wj);
        }
        col += 1;
    }
    for a in 1..=na {
        let w = case1_weights(t, a, 0, na, nb, (na - a).min(nb));
        for (j, &wj) in w.iter().enumerate() {
            v[(idx(a + j, j), col)] = c(wj);
        }
        col += 1;
    }
    for b in 1..=nb {
        let w = case1_weights(t, 0, b, na, nb, (nb - b).min(na));
        for (j, &wj) in w.iter().enumerate() {
            v[(idx(j, b + j), col)] = c(wj);
        }
        col += 1;
    }
    debug_assert_eq!(col, dim);
    let m = v.adjoint() * &s * &v;
    let (energy, amplitudes) = lowest_pair(&m);
    let mut vertices: Vec<usize> = side_a.iter().chain(side_b).cloned().collect();
    vertices.sort();
    Ok(EVCSolveResult {
        case: CaseKind::Case1,
        energy,
        dim,
        amplitudes,
        vertices,
        partition: Some((side_a.to_vec(), side_b.to_vec())),
        t: Some(t),
        matrix: m,
    })
}

/// Singlet constraint: the feasible space is the permutation-symmetric
/// subspace; reduce to an `(n+1)`-dimensional tridiagonal problem.
pub fn solve_case2_on(inst: &Instance, vertices: &[usize]) -> Result<EVCSolveResult> {
    let n = vertices.len();
    let p = aggregate(inst, vertices);
    let mut m = DMatrix::<C>::zeros(n + 1, n + 1);
    for a in 0..=n {
        m[(a, a)] = p[0][0] * c(dicke_element_plain(SiteOp::P00, a, a, n))
            + p[1][1] * c(dicke_element_plain(SiteOp::P11, a, a, n));
        if a + 1 <= n {
            let v = dicke_element_plain(SiteOp::P01, a, a + 1, n);
            m[(a, a + 1)] = p[0][1] * c(v);
            m[(a + 1, a)] = p[1][0] * c(v);
        }
    }
    let (energy, amplitudes) = lowest_pair(&m);
    Ok(EVCSolveResult {
        case: CaseKind::Case2,
        energy,
        dim: n + 1,
        amplitudes,
        vertices: vertices.to_vec(),
        partition: None,
        t: None,
        matrix: m,
    })
}

pub fn solve_case2(inst: &Instance) -> Result<EVCSolveResult> {
    let vertices: Vec<usize> = (0..inst.n).collect();
    solve_case2_on(inst, &vertices)
}

/// Non-bipartite component with diagonal entangled constraint: the state is
/// pinned to a 2-dimensional space spanned by even/odd geometric sums.
pub fn solve_case3_on(inst: &Instance, vertices: &[usize]) -> Result<EVCSolveResult> {
    let psi = inst
        .psi
        .ok_or_else(|| QlrError::InvalidInstance("EVC instance without psi".into()))?;
    let t = diag_t(&psi)?;
    let n = vertices.len();
    // sector operator = the Case-2 matrix over the plain symmetric basis
    let s = solve_case2_on(inst, vertices)?.matrix;
    let mut v = DMatrix::<C>::zeros(n + 1, 2);
    let evens: Vec<usize> = (0..=n).filter(|a| a % 2 == 0).collect();
    let odds: Vec<usize> = (0..=n).filter(|a| a % 2 == 1).collect();
    let we = case3_weights(t, 0, n, evens.len() - 1);
    for (k, &a) in evens.iter().enumerate() {
        v[(a, 0)] = c(we[k]);
    }
    if !odds.is_empty() {
        let wo = case3_weights(t, 1, n, odds.len() - 1);
        for (k, &a) in odds.iter().enumerate() {
            v[(a, 1)] = c(wo[k]);
        }
    }
    let m = v.adjoint() * &s * &v;
    let (energy, amplitudes) = lowest_pair(&m);
    Ok(EVCSolveResult {
        case: CaseKind::Case3,
        energy,
        dim: 2,
        amplitudes,
        vertices: vertices.to_vec(),
        partition: None,
        t: Some(t),
        matrix: m,
    })
}

pub fn solve_case3(inst: &Instance) -> Result<EVCSolveResult> {
    let vertices: Vec<usize> = (0..inst.n).collect();
    solve_case3_on(inst, &vertices)
}

/// Full solver report: ground energy (with offsets) plus per-component
/// reduced solutions.
#[derive(Debug, Clone)]
pub struct EvcReport {
    pub energy: f64,
    pub components: Vec<EVCSolveResult>,
}

/// Solve an EVC instance by classifying and solving each connected
/// component, summing the per-component optima.
pub fn solve_evc(inst: &Instance) -> Result<EvcReport> {
    let comps = classify(inst)?;
    let mut energy = inst.total_offset();
    let mut results = Vec::new();
    for comp in comps {
        let res = match &comp.tag {
            CaseTag::Case1 { a, b } => solve_case1(inst, a, b)?,
            CaseTag::Case2 => solve_case2_on(inst, &comp.vertices)?,
            CaseTag::Case3 => solve_case3_on(inst, &comp.vertices)?,
            CaseTag::Classical => {
                return Err(QlrError::KindMismatch(
                    "product-state constraint: use the covering-problem solvers".into(),
                ))
            }
        };
        energy += res.energy;
        results.push(res);
    }
    Ok(EvcReport {
        energy,
        components: results,
    })
}

// ---------------------------------------------------------------------------
// State reconstruction
// ---------------------------------------------------------------------------

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let mut v = 1.0f64;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

/// Expand a component solution covering all `n` qubits into the full
/// `2^n` amplitude vector (for feasibility verification).
pub fn reconstruct_state(res: &EVCSolveResult, n: usize) -> Result<Vec<C>> {
    if n > 14 {
        return Err(QlrError::CapExceeded(format!("n = {} exceeds 14", n)));
    }
    if res.vertices.len() != n || res.vertices.iter().enumerate().any(|(i, &v)| i != v) {
        return Err(QlrError::InvalidParameter(
            "reconstruction requires a component covering all qubits".into(),
        ));
    }
    let dim = 1usize << n;
    let mut out = vec![c(0.0); dim];
    match res.case {
        CaseKind::Case2 | CaseKind::Case3 => {
            // sector amplitudes gamma_a over the plain symmetric basis
            let mut gamma = vec![c(0.0); n + 1];
            match res.case {
                CaseKind::Case2 => {
                    for a in 0..=n {
                        gamma[a] = res.amplitudes[a];
                    }
                }
                _ => {
                    let t = res.t.unwrap();
                    let evens: Vec<usize> = (0..=n).filter(|a| a % 2 == 0).collect();
                    let odds: Vec<usize> = (0..=n).filter(|a| a % 2 == 1).collect();
                    let we = case3_weights(t, 0, n, evens.len() - 1);
                    for (k, &a) in evens.iter().enumerate() {
                        gamma[a] += res.amplitudes[0] * c(we[k]);
                    }
                    if !odds.is_empty() {
                        let wo = case3_weights(t, 1, n, odds.len() - 1);
                        for (k, &a) in odds.iter().enumerate() {
                            gamma[a] += res.amplitudes[1] * c(wo[k]);
                        }
                    }
                }
            }
            for word in 0..dim {
                let a = (word as u64).count_ones() as usize;
                out[word] = gamma[a] / c(binom(n, a).sqrt());
            }
        }
        CaseKind::Case1 => {
            let (side_a, side_b) = res.partition.as_ref().unwrap();
            let (na, nb) = (side_a.len(), side_b.len());
            let t = res.t.unwrap();
            let idx = |a: usize, b: usize| a * (nb + 1) + b;
            let mut gamma = vec![c(0.0); (na + 1) * (nb + 1)];
            let mut col = 0;
            {
                let w = case1_weights(t, 0, 0, na, nb, na.min(nb));
                for (j, &wj) in w.iter().enumerate() {
                    gamma[idx(j, j)] += res.amplitudes[col] * c(wj);
                }
                col += 1;
            }
            for a in 1..=na {
                let w = case1_weights(t, a, 0, na, nb, (na - a).min(nb));
                for (j, &wj) in w.iter().enumerate() {
                    gamma[idx(a + j, j)] += res.amplitudes[col] * c(wj);
                }
                col += 1;
            }
            for b in 1..=nb {
                let w = case1_weights(t, 0, b, na, nb, (nb - b).min(na));
                for (j, &wj) in w.iter().enumerate() {
                    gamma[idx(j, b + j)] += res.amplitudes[col] * c(wj);
                }
                col += 1;
            }
            let in_a: Vec<bool> = {
                let mut m = vec![false; n];
                for &v in side_a {
                    m[v] = true;
                }
                m
            };
            for word in 0..dim {
                let mut a = 0usize;
                let mut b = 0usize;
                for i in 0..n {
                    if (word >> (n - 1 - i)) & 1 == 1 {
                        if in_a[i] {
                            a += 1;
                        } else {
                            b += 1;
                        }
                    }
                }
                out[word] = gamma[idx(a, b)] / c((binom(na, a) * binom(nb, b)).sqrt());
            }
        }
    }
    Ok(out)
}
