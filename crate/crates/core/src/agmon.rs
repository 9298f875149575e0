//! Agmon weights, wells and graph distances.
//!
//! For an energy `μ` the weight is `w_n = (W_n - μ)_+` with `W = 1/u`, the
//! wells are `{W <= μ + δ}`, and the distance to the wells is the shortest
//! path under the edge cost `ln(1 + sqrt(min(w_n, w_m)))`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::landscape::LandscapeField;
use crate::lattice::LatticeGeometry;

/// Largest lattice the brute-force path enumeration accepts.
pub const ORACLE_MAX_SITES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgmonField {
    pub mu: f64,
    pub delta: f64,
    pub w: Vec<f64>,
    /// Linear indices of well sites, ascending.
    pub wells: Vec<usize>,
    /// `-1` outside the wells, otherwise the component id.
    pub component_label: Vec<i64>,
    pub h: Vec<f64>,
    pub is_dual: bool,
}

impl AgmonField {
    /// Builds the field from the effective potential stored in `landscape`.
    pub fn new(geom: &LatticeGeometry, landscape: &LandscapeField, mu: f64, delta: f64) -> Result<Self> {
        check_len(geom.len(), landscape.w_eff.len())?;
        let w = weight_field(&landscape.w_eff, mu);
        let (wells, component_label) = wells(&landscape.w_eff, mu, delta, geom)?;
        let h = agmon_distance_field(&w, &wells, geom)?;
        Ok(Self { mu, delta, w, wells, component_label, h, is_dual: landscape.is_dual })
    }

    /// Dual field from the dual landscape `ũ` at the mirrored energy
    /// `μ̃ = 4d + V_max - μ`, where `μ` is an eigenvalue of the primal operator.
    pub fn dual(geom: &LatticeGeometry, dual_landscape: &LandscapeField, v_max: f64, mu: f64, delta: f64) -> Result<Self> {
        let mu_dual = geom.spectral_top(v_max) - mu;
        let mut field = Self::new(geom, dual_landscape, mu_dual, delta)?;
        field.is_dual = true;
        Ok(field)
    }

    pub fn component_count(&self) -> usize {
        self.component_label.iter().max().map_or(0, |&m| (m + 1) as usize)
    }

    pub fn in_well(&self, n: usize) -> bool {
        self.component_label[n] >= 0
    }
}

/// Componentwise `(W_n - μ)_+`.
pub fn weight_field(w_eff: &[f64], mu: f64) -> Vec<f64> {
    w_eff.iter().map(|&w| (w - mu).max(0.0)).collect()
}

/// Threshold set `{W <= μ + δ}` and its connected components, labeled in
/// order of their smallest linear index.
pub fn wells(w_eff: &[f64], mu: f64, delta: f64, geom: &LatticeGeometry) -> Result<(Vec<usize>, Vec<i64>)> {
    check_len(geom.len(), w_eff.len())?;
    if !(delta > 0.0) {
        return Err(Error::HypothesisNotMet(format!("well width delta must be positive, got {delta}")));
    }
    let level = mu + delta;
    let inside: Vec<bool> = w_eff.iter().map(|&w| w <= level).collect();
    let mut label = vec![-1i64; w_eff.len()];
    let mut next = 0i64;
    let mut queue = VecDeque::new();
    for start in 0..w_eff.len() {
        if !inside[start] || label[start] >= 0 {
            continue;
        }
        label[start] = next;
        queue.push_back(start);
        while let Some(n) = queue.pop_front() {
            geom.for_each_neighbor(n, |m| {
                if inside[m] && label[m] < 0 {
                    label[m] = next;
                    queue.push_back(m);
                }
            });
        }
        next += 1;
    }
    let set: Vec<usize> = (0..w_eff.len()).filter(|&n| inside[n]).collect();
    if set.is_empty() {
        return Err(Error::EmptyWells { mu, delta });
    }
    Ok((set, label))
}

/// Cost of the edge between `n` and `m`.
#[inline]
pub fn edge_cost(w: &[f64], n: usize, m: usize) -> f64 {
    w[n].min(w[m]).sqrt().ln_1p()
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    site: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    // min-heap on distance, then on linear index
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.site.cmp(&self.site))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(w: &[f64], sources: &[usize], geom: &LatticeGeometry) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; w.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(Entry { dist: 0.0, site: s });
    }
    while let Some(Entry { dist: d, site: n }) = heap.pop() {
        if d > dist[n] {
            continue;
        }
        geom.for_each_neighbor(n, |m| {
            let cand = d + edge_cost(w, n, m);
            if cand < dist[m] {
                dist[m] = cand;
                heap.push(Entry { dist: cand, site: m });
            }
        });
    }
    dist
}

/// Distance from every site to the well set.
pub fn agmon_distance_field(w: &[f64], wells: &[usize], geom: &LatticeGeometry) -> Result<Vec<f64>> {
    check_len(geom.len(), w.len())?;
    if wells.is_empty() {
        return Err(Error::EmptyWells { mu: f64::NAN, delta: f64::NAN });
    }
    if let Some(&bad) = wells.iter().find(|&&n| n >= w.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: w.len() });
    }
    Ok(dijkstra(w, wells, geom))
}

/// Shortest-path semi-metric between two sites.
pub fn agmon_metric(w: &[f64], n: usize, m: usize, geom: &LatticeGeometry) -> Result<f64> {
    check_len(geom.len(), w.len())?;
    for s in [n, m] {
        if s >= w.len() {
            return Err(Error::IndexOutOfRange { index: s, len: w.len() });
        }
    }
    Ok(dijkstra(w, &[n], geom)[m])
}

/// All-pairs metric, row `n` holding distances from `n`.
pub fn agmon_metric_matrix(w: &[f64], geom: &LatticeGeometry) -> Result<Vec<Vec<f64>>> {
    check_len(geom.len(), w.len())?;
    Ok((0..w.len()).map(|n| dijkstra(w, &[n], geom)).collect())
}

/// Minimum path cost over every simple path from `n` to `m`, by depth-first
/// enumeration. Branches whose partial cost already reaches the best
/// complete path are cut, which never discards a strictly cheaper path.
pub fn brute_force_metric(w: &[f64], n: usize, m: usize, geom: &LatticeGeometry) -> Result<f64> {
    check_len(geom.len(), w.len())?;
    if geom.len() > ORACLE_MAX_SITES {
        return Err(Error::TooLargeForOracle { sites: geom.len(), max: ORACLE_MAX_SITES });
    }
    for s in [n, m] {
        if s >= w.len() {
            return Err(Error::IndexOutOfRange { index: s, len: w.len() });
        }
    }
    let nbrs: Vec<Vec<usize>> = (0..geom.len()).map(|s| geom.neighbors(s)).collect::<Result<_>>()?;
    let mut visited = vec![false; geom.len()];
    let mut best = f64::INFINITY;
    visited[n] = true;
    walk(w, &nbrs, n, m, 0.0, &mut visited, &mut best);
    Ok(best)
}

fn walk(w: &[f64], nbrs: &[Vec<usize>], at: usize, target: usize, cost: f64, visited: &mut [bool], best: &mut f64) {
    if at == target {
        *best = best.min(cost);
        return;
    }
    for &next in &nbrs[at] {
        if visited[next] {
            continue;
        }
        let c = cost + edge_cost(w, at, next);
        if c > *best {
            continue;
        }
        visited[next] = true;
        walk(w, nbrs, next, target, c, visited, best);
        visited[next] = false;
    }
}
