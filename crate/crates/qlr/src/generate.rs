//! Seeded random instance generation. One named PRNG (ChaCha8) with
//! stream-splitting by instance index; a fixed draw order makes every
//! generated instance a pure function of (seed, stream, parameters).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bloch::BlochProjector;
use crate::error::{QlrError, Result};
use crate::instance::{Edge, Instance, Kind, Psi};

/// Recorded in reports so files name their randomness source.
pub const GENERATOR_NAME: &str = "chacha8-stream-v1";

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform in `(0, 1]`.
fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.gen::<f64>()
}

/// Random connected graph: a random spanning tree plus each remaining
/// pair independently with probability `density`.
pub fn random_connected_edges(
    n: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    let tree: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
    for u in 0..n {
        for v in (u + 1)..n {
            if !tree.contains(&(u, v)) && rng.gen::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    edges.sort();
    edges
}

/// Random connected bipartite graph; returns edges and the side of each
/// vertex (`false` = A).
pub fn random_bipartite_connected_edges(
    n: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<(usize, usize)>, Vec<bool>) {
    let mut side = vec![false; n];
    for (i, s) in side.iter_mut().enumerate() {
        *s = match i {
            0 => false,
            1 => true,
            _ => rng.gen_bool(0.5),
        };
    }
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for v in 1..n {
        let opposite: Vec<usize> = (0..v).filter(|&u| side[u] != side[v]).collect();
        let u = opposite[rng.gen_range(0..opposite.len())];
        edges.push((u.min(v), u.max(v)));
    }
    let tree: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
    for u in 0..n {
        for v in (u + 1)..n {
            if side[u] != side[v] && !tree.contains(&(u, v)) && rng.gen::<f64>() < density {
                edges.push((u, v));
            }
        }
    }
    edges.sort();
    (edges, side)
}

/// Two-color a graph; `None` if it contains an odd cycle.
pub fn bipartition(n: usize, edges: &[(usize, usize)]) -> Option<Vec<bool>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut color = vec![None; n];
    for start in 0..n {
        if color[start].is_some() {
            continue;
        }
        color[start] = Some(false);
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let cu = color[u].unwrap();
            for &v in &adj[u] {
                match color[v] {
                    None => {
                        color[v] = Some(!cu);
                        queue.push_back(v);
                    }
                    Some(cv) if cv == cu => return None,
                    _ => {}
                }
            }
        }
    }
    Some(color.into_iter().map(|c| c.unwrap()).collect())
}

/// Close an odd cycle if the graph is bipartite (needs n >= 3).
pub fn force_non_bipartite(
    n: usize,
    edges: &mut Vec<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) {
    if let Some(side) = bipartition(n, edges) {
        let present: std::collections::HashSet<(usize, usize)> = edges.iter().copied().collect();
        let mut candidates = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if side[u] == side[v] && !present.contains(&(u, v)) {
                    candidates.push((u, v));
                }
            }
        }
        if !candidates.is_empty() {
            edges.push(candidates[rng.gen_range(0..candidates.len())]);
            edges.sort();
        }
    }
}

fn random_stoquastic_bloch(rng: &mut ChaCha8Rng) -> BlochProjector {
    // uniform angle on the canonical quarter-circle ax <= 0, ay = 0, az <= 0
    let phi = rng.gen::<f64>() * std::f64::consts::FRAC_PI_2;
    BlochProjector::new(-phi.sin(), 0.0, -phi.cos())
}

fn random_sphere_bloch(rng: &mut ChaCha8Rng) -> BlochProjector {
    let z = 1.0 - 2.0 * rng.gen::<f64>();
    let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
    let r = (1.0 - z * z).max(0.0).sqrt();
    BlochProjector::new(r * theta.cos(), r * theta.sin(), z)
}

/// Graph shape requested from the generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphShape {
    Any,
    Bipartite,
    NonBipartite,
}

#[derive(Debug, Clone)]
pub struct GenConfig {
    pub kind: Kind,
    pub n: usize,
    pub density: f64,
    pub psi: Option<Psi>,
    /// Force classical `|1><1|` projectors.
    pub diagonal: bool,
    pub shape: GraphShape,
}

impl GenConfig {
    pub fn new(kind: Kind, n: usize, density: f64) -> Self {
        Self {
            kind,
            n,
            density,
            psi: None,
            diagonal: false,
            shape: GraphShape::Any,
        }
    }
}

/// Deterministic instance from `(seed, stream, config)`. Draw order:
/// graph, weights, Bloch vectors, penalties.
pub fn generate_instance(cfg: &GenConfig, seed: u64, stream: u64) -> Result<Instance> {
    if cfg.n == 0 {
        return Err(QlrError::InvalidParameter("n must be positive".into()));
    }
    if !(cfg.density > 0.0 && cfg.density <= 1.0) {
        return Err(QlrError::InvalidParameter(format!(
            "density {} outside (0, 1]",
            cfg.density
        )));
    }
    if cfg.kind == Kind::Evc && cfg.psi.is_none() {
        return Err(QlrError::InvalidParameter(
            "EVC generation requires psi".into(),
        ));
    }
    let mut rng = rng_for(seed, stream);
    let mut edges = match cfg.shape {
        GraphShape::Any => random_connected_edges(cfg.n, cfg.density, &mut rng),
        GraphShape::Bipartite => random_bipartite_connected_edges(cfg.n, cfg.density, &mut rng).0,
        GraphShape::NonBipartite => {
            let mut e = random_connected_edges(cfg.n, cfg.density, &mut rng);
            force_non_bipartite(cfg.n, &mut e, &mut rng);
            e
        }
    };
    edges.dedup();
    let mut inst = Instance::new(cfg.kind, cfg.n);
    for term in inst.terms.iter_mut() {
        term.weight = unit_open(&mut rng);
    }
    for i in 0..cfg.n {
        inst.terms[i].projector = if cfg.diagonal {
            BlochProjector::ket1()
        } else if cfg.kind == Kind::Evc {
            random_sphere_bloch(&mut rng)
        } else {
            random_stoquastic_bloch(&mut rng)
        };
    }
    for &(u, v) in &edges {
        match cfg.kind {
            Kind::Pcvc => inst.add_edge(Edge::with_penalty(u, v, unit_open(&mut rng))),
            _ => inst.add_edge(Edge::new(u, v)),
        }
    }
    inst.psi = cfg.psi;
    inst.sort_edges();
    let report = inst.validate();
    if !report.passed() {
        return Err(QlrError::InvalidInstance(report.violations.join("; ")));
    }
    Ok(inst)
}

/// Random normalized diagonal constraint with both amplitudes bounded
/// away from zero (stays out of the classical case).
pub fn random_diagonal_psi(rng: &mut ChaCha8Rng) -> Psi {
    let alpha = 0.3 + 0.4 * rng.gen::<f64>();
    Psi::Diagonal {
        alpha,
        beta: (1.0 - alpha * alpha).sqrt(),
    }
}
