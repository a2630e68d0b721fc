//! Flat ±1 connections realizing a prescribed puncture set, and monodromy
//! checks for lattice cycles.
//!
//! Punctures live at half-integer coordinates in the complement of the
//! region; each carries a branch-cut ray, and an edge's sign is `(-1)` to
//! the number of rays it crosses. With half-integer puncture coordinates
//! every crossing is transversal and decided by exact integer comparisons.

use crate::geometry::{DomainGraph, LatticePoint, LatticeRegion};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("puncture {0:?} (doubled) has an integer coordinate")]
    IntegerCoordinate([i64; 2]),
    #[error("puncture {0:?} (doubled) lies inside the region")]
    PunctureInsideRegion([i64; 2]),
    #[error("cycle is not closed")]
    NotClosed,
    #[error("cycle step {0} -> {1} is not a graph edge")]
    NonAdjacentStep(u32, u32),
    #[error("cycle revisits vertex {0}")]
    RepeatedVertex(u32),
    #[error("connection built for a different graph ({expected} vertices, got {got})")]
    GraphMismatch { expected: usize, got: usize },
}

/// Branch-cut direction for every puncture of a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CutDirection {
    #[default]
    #[serde(rename = "+x")]
    PosX,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "+y")]
    PosY,
    #[serde(rename = "-y")]
    NegY,
}

/// Punctures in the complement of a region, in doubled coordinates
/// (both coordinates odd).
#[derive(Debug, Clone, PartialEq)]
pub struct PunctureSet {
    points_doubled: Vec<[i64; 2]>,
    /// Punctures in the unbounded complement component never change any
    /// monodromy; they are kept but flagged.
    noop: Vec<bool>,
}

impl PunctureSet {
    pub fn empty() -> Self {
        PunctureSet {
            points_doubled: Vec::new(),
            noop: Vec::new(),
        }
    }

    /// Validate punctures (given in doubled coordinates) against a region.
    pub fn new(
        region: &LatticeRegion,
        points_doubled: &[[i64; 2]],
    ) -> Result<Self, ConnectionError> {
        let mut noop = Vec::with_capacity(points_doubled.len());
        for &p in points_doubled {
            if p[0] % 2 == 0 || p[1] % 2 == 0 {
                return Err(ConnectionError::IntegerCoordinate(p));
            }
            if region.contains_doubled(p) {
                return Err(ConnectionError::PunctureInsideRegion(p));
            }
            // unbounded component: outside the outer loop
            noop.push(!region.inside_outer_doubled(p));
        }
        Ok(PunctureSet {
            points_doubled: points_doubled.to_vec(),
            noop,
        })
    }

    pub fn points_doubled(&self) -> &[[i64; 2]] {
        &self.points_doubled
    }

    /// Flags for punctures sitting in the unbounded complement component.
    pub fn noop_flags(&self) -> &[bool] {
        &self.noop
    }

    pub fn is_empty(&self) -> bool {
        self.points_doubled.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points_doubled.len()
    }
}

/// Edge signs realizing the monodromy class of a puncture set.
#[derive(Debug, Clone)]
pub struct FlatConnection {
    n_vertices: usize,
    /// Sign per graph edge, aligned with `DomainGraph::edges`.
    edge_signs: Vec<i8>,
    /// Unordered vertex pair -> edge slot, for cycle walks.
    edge_index: HashMap<(u32, u32), u32>,
    cut_dir: CutDirection,
    sigma: PunctureSet,
}

fn ray_crosses_edge(sigma: [i64; 2], dir: CutDirection, pd: [i64; 2], qd: [i64; 2]) -> bool {
    // pd, qd: doubled endpoints of a unit lattice edge; sigma: doubled odd.
    let vertical = pd[0] == qd[0];
    match dir {
        CutDirection::PosX | CutDirection::NegX => {
            if !vertical {
                return false;
            }
            let (ylo, yhi) = (pd[1].min(qd[1]), pd[1].max(qd[1]));
            if !(ylo < sigma[1] && sigma[1] < yhi) {
                return false;
            }
            match dir {
                CutDirection::PosX => pd[0] > sigma[0],
                _ => pd[0] < sigma[0],
            }
        }
        CutDirection::PosY | CutDirection::NegY => {
            if vertical {
                return false;
            }
            let (xlo, xhi) = (pd[0].min(qd[0]), pd[0].max(qd[0]));
            if !(xlo < sigma[0] && sigma[0] < xhi) {
                return false;
            }
            match dir {
                CutDirection::PosY => pd[1] > sigma[1],
                _ => pd[1] < sigma[1],
            }
        }
    }
}

impl FlatConnection {
    /// Connection with every sign `+1` (Σ = ∅).
    pub fn trivial(graph: &DomainGraph) -> Self {
        Self::build(graph, PunctureSet::empty(), CutDirection::PosX)
    }

    /// Sign per edge is `(-1)` to the number of branch-cut rays crossed.
    pub fn build(graph: &DomainGraph, sigma: PunctureSet, cut_dir: CutDirection) -> Self {
        let mut edge_signs = Vec::with_capacity(graph.edges.len());
        let mut edge_index = HashMap::with_capacity(graph.edges.len());
        for (ei, &(a, b)) in graph.edges.iter().enumerate() {
            let p = graph.vertices[a as usize];
            let q = graph.vertices[b as usize];
            let pd = [2 * p[0], 2 * p[1]];
            let qd = [2 * q[0], 2 * q[1]];
            let mut crossings = 0usize;
            for &s in sigma.points_doubled() {
                if ray_crosses_edge(s, cut_dir, pd, qd) {
                    crossings += 1;
                }
            }
            edge_signs.push(if crossings % 2 == 0 { 1 } else { -1 });
            edge_index.insert((a, b), ei as u32);
        }
        FlatConnection {
            n_vertices: graph.n(),
            edge_signs,
            edge_index,
            cut_dir,
            sigma,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn cut_dir(&self) -> CutDirection {
        self.cut_dir
    }

    pub fn sigma(&self) -> &PunctureSet {
        &self.sigma
    }

    pub fn edge_signs(&self) -> &[i8] {
        &self.edge_signs
    }

    pub fn sign_of_pair(&self, a: u32, b: u32) -> Option<i8> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edge_index
            .get(&key)
            .map(|&ei| self.edge_signs[ei as usize])
    }

    /// Product of edge signs along a closed simple cycle of vertex indices
    /// (`cycle` lists each vertex once; the closing edge is implicit).
    pub fn cycle_monodromy(&self, cycle: &[u32]) -> Result<i8, ConnectionError> {
        if cycle.len() < 3 {
            return Err(ConnectionError::NotClosed);
        }
        for i in 0..cycle.len() {
            for j in (i + 1)..cycle.len() {
                if cycle[i] == cycle[j] {
                    return Err(ConnectionError::RepeatedVertex(cycle[i]));
                }
            }
        }
        let mut prod: i8 = 1;
        for i in 0..cycle.len() {
            let a = cycle[i];
            let b = cycle[(i + 1) % cycle.len()];
            match self.sign_of_pair(a, b) {
                Some(s) => prod *= s,
                None => return Err(ConnectionError::NonAdjacentStep(a, b)),
            }
        }
        Ok(prod)
    }
}

/// Winding parity of a closed lattice loop around a puncture set, by exact
/// crossing counting of each puncture's horizontal `+x` ray. Geometric
/// oracle: independent of any edge-sign assignment. Punctures sit at
/// half-integer coordinates, so they can never lie on the lattice path.
pub fn winding_parity(sigma: &PunctureSet, cycle: &[LatticePoint]) -> i8 {
    let mut total_crossings = 0i64;
    for &s in sigma.points_doubled() {
        for i in 0..cycle.len() {
            let p = cycle[i];
            let q = cycle[(i + 1) % cycle.len()];
            let pd = [2 * p[0], 2 * p[1]];
            let qd = [2 * q[0], 2 * q[1]];
            // signed crossing of the ray {y = s.y, x > s.x}
            if (pd[1] > s[1]) != (qd[1] > s[1]) {
                // x coordinate where the segment meets the ray's line,
                // compared exactly to s.x
                let dy = (qd[1] - pd[1]) as i128;
                let num = (pd[0] as i128) * dy + ((s[1] - pd[1]) as i128) * ((qd[0] - pd[0]) as i128);
                // num/dy > s.x  <=>  (num - s.x*dy) * sign(dy) > 0
                let rel = (num - (s[0] as i128) * dy) * dy.signum();
                if rel > 0 {
                    total_crossings += 1;
                }
            }
        }
    }
    if total_crossings % 2 == 0 {
        1
    } else {
        -1
    }
}
