//! Graph-based outlier rejection for tracked correspondences: pairwise
//! consistency matrix, exact maximum clique, SVD rigid fit and the initial
//! velocity guess derived from it.

use crate::se2::{log_pose, Pose2, Twist2};
use crate::{Error, Result};
use nalgebra::{Matrix2, Vector2};

/// Symmetric boolean pairwise-consistency matrix over correspondences.
#[derive(Debug, Clone)]
pub struct ConsistencyGraph {
    adjacency: Vec<bool>,
    n: usize,
    /// Consistency threshold in pixels.
    pub delta_c: f64,
}

impl ConsistencyGraph {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn connected(&self, m: usize, n: usize) -> bool {
        self.adjacency[m * self.n + n]
    }

    /// Builds a graph directly from an undirected edge list, for callers
    /// that already hold a compatibility relation.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adjacency = vec![false; n * n];
        for i in 0..n {
            adjacency[i * n + i] = true;
        }
        for &(a, b) in edges {
            adjacency[a * n + b] = true;
            adjacency[b * n + a] = true;
        }
        ConsistencyGraph {
            adjacency,
            n,
            delta_c: 0.0,
        }
    }
}

/// Builds the consistency graph: entry (m, n) is true iff the pairwise
/// pixel distance between the two correspondences is preserved within
/// `delta_c` between the previous and current frames.
pub fn build_consistency_graph(
    prev_pixels: &[(f64, f64)],
    curr_pixels: &[(f64, f64)],
    delta_c: f64,
) -> Result<ConsistencyGraph> {
    if prev_pixels.len() != curr_pixels.len() {
        return Err(Error::invalid(format!(
            "pixel list length mismatch: {} vs {}",
            prev_pixels.len(),
            curr_pixels.len()
        )));
    }
    if prev_pixels.len() < 2 {
        return Err(Error::invalid("need at least 2 correspondences"));
    }
    let n = prev_pixels.len();
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let mut adjacency = vec![false; n * n];
    for m in 0..n {
        adjacency[m * n + m] = true;
        for k in m + 1..n {
            let d_prev = dist(prev_pixels[m], prev_pixels[k]);
            let d_curr = dist(curr_pixels[m], curr_pixels[k]);
            let ok = (d_prev - d_curr).abs() < delta_c;
            adjacency[m * n + k] = ok;
            adjacency[k * n + m] = ok;
        }
    }
    Ok(ConsistencyGraph {
        adjacency,
        n,
        delta_c,
    })
}

/// Exact maximum clique via branch and bound with greedy-coloring bounds.
///
/// Among maximum cliques of equal size the lexicographically smallest index
/// set is returned, so results are deterministic.
pub fn maximum_clique(graph: &ConsistencyGraph) -> Vec<usize> {
    let n = graph.len();
    if n == 0 {
        return Vec::new();
    }
    let mut best: Vec<usize> = vec![0];
    let mut current: Vec<usize> = Vec::new();
    let candidates: Vec<usize> = (0..n).collect();
    expand(graph, &candidates, &mut current, &mut best);
    best
}

fn expand(graph: &ConsistencyGraph, candidates: &[usize], current: &mut Vec<usize>, best: &mut Vec<usize>) {
    // Greedy coloring upper bound: a clique uses at most one vertex per color.
    let colors = greedy_color(graph, candidates);
    for i in (0..candidates.len()).rev() {
        // Strict bound keeps ties explorable so the lexicographic rule holds.
        if current.len() + colors[i] < best.len() {
            return;
        }
        let v = candidates[i];
        current.push(v);
        let next: Vec<usize> = candidates[..i]
            .iter()
            .cloned()
            .filter(|&u| graph.connected(u, v))
            .collect();
        if next.is_empty() {
            if current.len() > best.len()
                || (current.len() == best.len() && lex_less(current, best))
            {
                let mut found = current.clone();
                found.sort_unstable();
                *best = found;
            }
        } else {
            expand(graph, &next, current, best);
        }
        current.pop();
    }
}

fn lex_less(a: &[usize], b: &[usize]) -> bool {
    let mut aa = a.to_vec();
    aa.sort_unstable();
    aa.as_slice() < b
}

/// Assigns greedy colors; `colors[i]` is the number of colors used by
/// `candidates[..=i]`, a clique-size upper bound for that prefix.
fn greedy_color(graph: &ConsistencyGraph, candidates: &[usize]) -> Vec<usize> {
    let mut color_of = vec![0usize; candidates.len()];
    for (i, &v) in candidates.iter().enumerate() {
        let mut c = 1;
        while candidates[..i]
            .iter()
            .enumerate()
            .any(|(j, &u)| color_of[j] == c && graph.connected(u, v))
        {
            c += 1;
        }
        color_of[i] = c;
    }
    let mut bounds = vec![0usize; candidates.len()];
    let mut max_so_far = 0usize;
    for i in 0..candidates.len() {
        max_so_far = max_so_far.max(color_of[i]);
        bounds[i] = max_so_far;
    }
    bounds
}

/// Least-squares SE(2) fit `T` minimizing `sum ||T*src_i - dst_i||^2` via
/// centroid subtraction and 2x2 cross-covariance SVD with a reflection
/// guard.
pub fn rigid_fit_svd(src: &[Vector2<f64>], dst: &[Vector2<f64>]) -> Result<Pose2> {
    if src.len() != dst.len() {
        return Err(Error::invalid("rigid_fit_svd: point list length mismatch"));
    }
    if src.len() < 2 {
        return Err(Error::DegenerateConfiguration(
            "rigid_fit_svd needs at least 2 point pairs".into(),
        ));
    }
    let n = src.len() as f64;
    let c_src = src.iter().sum::<Vector2<f64>>() / n;
    let c_dst = dst.iter().sum::<Vector2<f64>>() / n;
    let mut h = Matrix2::zeros();
    let mut spread = 0.0;
    for (s, d) in src.iter().zip(dst.iter()) {
        let a = s - c_src;
        let b = d - c_dst;
        h += b * a.transpose();
        spread += a.norm_squared();
    }
    if spread < 1e-18 {
        return Err(Error::DegenerateConfiguration(
            "rigid_fit_svd: all source points coincident".into(),
        ));
    }
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| Error::NumericalFailure("SVD failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::NumericalFailure("SVD failed".into()))?;
    let d = (u * v_t).determinant();
    let correction = Matrix2::new(1.0, 0.0, 0.0, d.signum());
    let r = u * correction * v_t;
    let angle = r[(1, 0)].atan2(r[(0, 0)]);
    let t = c_dst - r * c_src;
    Ok(Pose2::new(angle, t))
}

/// Initial twist guess from the clique-inlier relative transform.
pub fn initial_velocity(t_rel: &Pose2, dt: f64) -> Result<Twist2> {
    if dt <= 0.0 {
        return Err(Error::invalid("initial_velocity: dt must be positive"));
    }
    let v = log_pose(t_rel) / dt;
    Ok(Twist2::from_vector(&v))
}
