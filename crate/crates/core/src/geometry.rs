//! Integer-vertex polygonal domains, their lattice graphs, and geometric
//! summaries.
//!
//! All membership predicates run in doubled integer coordinates so that
//! midpoints of unit segments are exact; no floating point enters any
//! inside/outside decision.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub type LatticePoint = [i64; 2];

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GeometryError {
    #[error("loop {0} has fewer than 3 vertices")]
    TooFewVertices(usize),
    #[error("non-simple loop: {0}")]
    NonSimpleLoop(String),
    #[error("intersecting loops {0} and {1}")]
    IntersectingLoops(usize, usize),
    #[error("hole loop {0} is not strictly inside the outer loop")]
    HoleOutsideOuter(usize),
    #[error("hole loop {0} is nested inside hole loop {1}")]
    NestedHoles(usize, usize),
    #[error("scale must be a positive integer, got {0}")]
    BadScale(i64),
    #[error("points are not at l1 distance 1: {0:?}, {1:?}")]
    NotUnitSeparated(LatticePoint, LatticePoint),
    #[error("region contains no lattice points")]
    EmptyRegion,
}

/// Domain-description document, the JSON interchange form of a region.
#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct RegionSpec {
    /// Closed loops of integer vertices; first is the outer boundary,
    /// the rest are holes.
    pub loops: Vec<Vec<LatticePoint>>,
    #[serde(default = "default_scale")]
    pub scale: i64,
}

fn default_scale() -> i64 {
    1
}

/// A connected open region `L·Π` bounded by integer-vertex polygon loops,
/// interpreted under the even-odd rule.
///
/// Loops are stored normalized: collinear vertices merged, the outer loop
/// counterclockwise, hole loops clockwise. `boundary_doubled` caches every
/// boundary segment of the *scaled* region in doubled coordinates.
#[derive(Debug, Clone)]
pub struct LatticeRegion {
    loops: Vec<Vec<LatticePoint>>,
    scale: i64,
    boundary_doubled: Vec<([i64; 2], [i64; 2])>,
}

fn cross(o: [i64; 2], a: [i64; 2], b: [i64; 2]) -> i128 {
    let ax = (a[0] - o[0]) as i128;
    let ay = (a[1] - o[1]) as i128;
    let bx = (b[0] - o[0]) as i128;
    let by = (b[1] - o[1]) as i128;
    ax * by - ay * bx
}

/// True if `p` lies on the closed segment `ab`.
fn on_segment(p: [i64; 2], a: [i64; 2], b: [i64; 2]) -> bool {
    if cross(a, b, p) != 0 {
        return false;
    }
    p[0] >= a[0].min(b[0])
        && p[0] <= a[0].max(b[0])
        && p[1] >= a[1].min(b[1])
        && p[1] <= a[1].max(b[1])
}

/// True if `p` lies strictly between `a` and `b` on the segment.
fn strictly_between(p: [i64; 2], a: [i64; 2], b: [i64; 2]) -> bool {
    on_segment(p, a, b) && p != a && p != b
}

/// Proper (transversal, interior-interior) crossing of segments `pq` and `ab`.
fn proper_cross(p: [i64; 2], q: [i64; 2], a: [i64; 2], b: [i64; 2]) -> bool {
    let d1 = cross(p, q, a);
    let d2 = cross(p, q, b);
    let d3 = cross(a, b, p);
    let d4 = cross(a, b, q);
    ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))
}

/// Any contact between closed segments `pq` and `ab` (crossing, touching,
/// or collinear overlap). Used for loop validation.
fn segments_touch(p: [i64; 2], q: [i64; 2], a: [i64; 2], b: [i64; 2]) -> bool {
    proper_cross(p, q, a, b)
        || on_segment(a, p, q)
        || on_segment(b, p, q)
        || on_segment(p, a, b)
        || on_segment(q, a, b)
}

fn signed_area_twice(vertices: &[LatticePoint]) -> i128 {
    let n = vertices.len();
    let mut s: i128 = 0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        s += a[0] as i128 * b[1] as i128 - b[0] as i128 * a[1] as i128;
    }
    s
}

fn merge_collinear(mut vs: Vec<LatticePoint>) -> Vec<LatticePoint> {
    loop {
        let n = vs.len();
        if n < 3 {
            return vs;
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let prev = vs[(i + n - 1) % n];
            let next = vs[(i + 1) % n];
            if cross(prev, vs[i], next) != 0 {
                out.push(vs[i]);
            }
        }
        if out.len() == n {
            return out;
        }
        vs = out;
    }
}

/// Even-odd membership of a point against a single loop, both in the same
/// (doubled or plain) coordinate system. The point must not lie on the loop.
fn ray_parity(p: [i64; 2], vertices: &[[i64; 2]]) -> bool {
    let n = vertices.len();
    let mut inside = false;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            // x coordinate of the edge at height p[1], compared to p[0]
            // without division: sign(cross) * sign(b.y - a.y) > 0.
            let c = cross(a, b, p);
            let dy = (b[1] - a[1]) as i128;
            if c.signum() * dy.signum() < 0 {
                inside = !inside;
            }
        }
    }
    inside
}

impl LatticeRegion {
    /// Validate and normalize a region description.
    pub fn new(spec: &RegionSpec) -> Result<Self, GeometryError> {
        if spec.scale < 1 {
            return Err(GeometryError::BadScale(spec.scale));
        }
        if spec.loops.is_empty() {
            return Err(GeometryError::TooFewVertices(0));
        }
        let mut loops: Vec<Vec<LatticePoint>> = Vec::with_capacity(spec.loops.len());
        for (li, raw) in spec.loops.iter().enumerate() {
            if raw.len() < 3 {
                return Err(GeometryError::TooFewVertices(li));
            }
            // repeated vertices
            for i in 0..raw.len() {
                for j in (i + 1)..raw.len() {
                    if raw[i] == raw[j] {
                        return Err(GeometryError::NonSimpleLoop(format!(
                            "loop {} repeats vertex {:?}",
                            li, raw[i]
                        )));
                    }
                }
            }
            let vs = merge_collinear(raw.clone());
            if vs.len() < 3 || signed_area_twice(&vs) == 0 {
                return Err(GeometryError::NonSimpleLoop(format!(
                    "loop {} is degenerate",
                    li
                )));
            }
            // self-intersection: non-adjacent segments must not touch
            let n = vs.len();
            for i in 0..n {
                let (p, q) = (vs[i], vs[(i + 1) % n]);
                for j in (i + 1)..n {
                    if j == i || (j + 1) % n == i || (i + 1) % n == j {
                        continue;
                    }
                    let (a, b) = (vs[j], vs[(j + 1) % n]);
                    if segments_touch(p, q, a, b) {
                        return Err(GeometryError::NonSimpleLoop(format!(
                            "loop {} self-intersects near {:?}",
                            li, a
                        )));
                    }
                }
            }
            loops.push(vs);
        }
        // loops pairwise disjoint
        for i in 0..loops.len() {
            for j in (i + 1)..loops.len() {
                for si in 0..loops[i].len() {
                    let (p, q) = (loops[i][si], loops[i][(si + 1) % loops[i].len()]);
                    for sj in 0..loops[j].len() {
                        let (a, b) = (loops[j][sj], loops[j][(sj + 1) % loops[j].len()]);
                        if segments_touch(p, q, a, b) {
                            return Err(GeometryError::IntersectingLoops(i, j));
                        }
                    }
                }
            }
        }
        // holes strictly inside the outer loop, and not nested in each other
        for j in 1..loops.len() {
            if !ray_parity(loops[j][0], &loops[0]) {
                return Err(GeometryError::HoleOutsideOuter(j));
            }
            for k in 1..loops.len() {
                if k != j && ray_parity(loops[j][0], &loops[k]) {
                    return Err(GeometryError::NestedHoles(j, k));
                }
            }
        }
        // orientation: outer counterclockwise, holes clockwise
        if signed_area_twice(&loops[0]) < 0 {
            loops[0].reverse();
        }
        for l in loops.iter_mut().skip(1) {
            if signed_area_twice(l) > 0 {
                l.reverse();
            }
        }
        let mut region = LatticeRegion {
            loops,
            scale: spec.scale,
            boundary_doubled: Vec::new(),
        };
        region.rebuild_boundary();
        Ok(region)
    }

    pub fn parse(json: &str) -> Result<Self, GeometryError> {
        let spec: RegionSpec = serde_json::from_str(json).map_err(|e| {
            GeometryError::NonSimpleLoop(format!("invalid region document: {}", e))
        })?;
        Self::new(&spec)
    }

    fn rebuild_boundary(&mut self) {
        self.boundary_doubled.clear();
        let s = self.scale;
        for l in &self.loops {
            let n = l.len();
            for i in 0..n {
                let a = l[i];
                let b = l[(i + 1) % n];
                self.boundary_doubled
                    .push(([2 * s * a[0], 2 * s * a[1]], [2 * s * b[0], 2 * s * b[1]]));
            }
        }
    }

    pub fn scale(&self) -> i64 {
        self.scale
    }

    /// Same shape at a different scale.
    pub fn with_scale(&self, scale: i64) -> Result<Self, GeometryError> {
        Self::new(&RegionSpec {
            loops: self.loops.clone(),
            scale,
        })
    }

    /// Normalized loops of the unscaled shape.
    pub fn loops(&self) -> &[Vec<LatticePoint>] {
        &self.loops
    }

    pub fn to_spec(&self) -> RegionSpec {
        RegionSpec {
            loops: self.loops.clone(),
            scale: self.scale,
        }
    }

    /// Bounding box of the scaled region in lattice coordinates.
    pub fn bounding_box(&self) -> (LatticePoint, LatticePoint) {
        let mut lo = [i64::MAX; 2];
        let mut hi = [i64::MIN; 2];
        for l in &self.loops {
            for v in l {
                for k in 0..2 {
                    lo[k] = lo[k].min(self.scale * v[k]);
                    hi[k] = hi[k].max(self.scale * v[k]);
                }
            }
        }
        (lo, hi)
    }

    /// Open-region membership of a point given in doubled coordinates
    /// (lattice points have even, half-lattice points odd coordinates).
    /// Boundary points are outside: the region is open.
    pub fn contains_doubled(&self, p: [i64; 2]) -> bool {
        for &(a, b) in &self.boundary_doubled {
            if on_segment(p, a, b) {
                return false;
            }
        }
        let mut inside = false;
        let n = self.boundary_doubled.len();
        let mut i = 0;
        while i < n {
            let (a, b) = self.boundary_doubled[i];
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let c = cross(a, b, p);
                let dy = (b[1] - a[1]) as i128;
                if c.signum() * dy.signum() < 0 {
                    inside = !inside;
                }
            }
            i += 1;
        }
        inside
    }

    /// Open-region membership of a lattice point of the scaled region.
    pub fn contains_point(&self, p: LatticePoint) -> bool {
        self.contains_doubled([2 * p[0], 2 * p[1]])
    }

    /// Whether a doubled-coordinate point lies inside the scaled outer loop,
    /// ignoring holes. Points off the boundary only.
    pub fn inside_outer_doubled(&self, p: [i64; 2]) -> bool {
        let s = self.scale;
        let outer: Vec<[i64; 2]> = self.loops[0]
            .iter()
            .map(|v| [2 * s * v[0], 2 * s * v[1]])
            .collect();
        ray_parity(p, &outer)
    }

    /// Whether the open unit segment `pq` together with its endpoints lies
    /// in the open region. `p`, `q` are lattice points at l1 distance 1.
    pub fn unit_segment_in_region(
        &self,
        p: LatticePoint,
        q: LatticePoint,
    ) -> Result<bool, GeometryError> {
        if (p[0] - q[0]).abs() + (p[1] - q[1]).abs() != 1 {
            return Err(GeometryError::NotUnitSeparated(p, q));
        }
        let pd = [2 * p[0], 2 * p[1]];
        let qd = [2 * q[0], 2 * q[1]];
        let mid = [p[0] + q[0], p[1] + q[1]];
        if !self.contains_doubled(pd) || !self.contains_doubled(qd) || !self.contains_doubled(mid) {
            return Ok(false);
        }
        // Transversal boundary crossings and boundary corners sitting in the
        // open segment both disqualify the edge.
        for &(a, b) in &self.boundary_doubled {
            if proper_cross(pd, qd, a, b) || strictly_between(a, pd, qd) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn summarize(&self) -> GeometrySummary {
        summarize_geometry(self)
    }
}

/// Lattice graph of a region: vertices `Ω ∩ Z²`, edges along unit segments
/// contained in `Ω`, and the exterior boundary sites.
#[derive(Debug, Clone)]
pub struct DomainGraph {
    pub vertices: Vec<LatticePoint>,
    pub edges: Vec<(u32, u32)>,
    index: HashMap<LatticePoint, u32>,
    pub ext_boundary: Vec<LatticePoint>,
}

impl DomainGraph {
    pub fn n(&self) -> usize {
        self.vertices.len()
    }

    pub fn index_of(&self, p: LatticePoint) -> Option<u32> {
        self.index.get(&p).copied()
    }

    pub fn degree(&self, v: u32) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == v || b == v)
            .count()
    }

    /// Neighbor lists, indexed like `vertices`.
    pub fn adjacency(&self) -> Vec<Vec<u32>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a as usize].push(b);
            adj[b as usize].push(a);
        }
        adj
    }
}

/// Enumerate lattice points and edges of the scaled region.
pub fn build_graph(region: &LatticeRegion) -> Result<DomainGraph, GeometryError> {
    let (lo, hi) = region.bounding_box();
    let mut vertices = Vec::new();
    // Order along the longer bounding-box axis first; this keeps the
    // factorization profile close to the shorter dimension.
    let x_major = (hi[0] - lo[0]) >= (hi[1] - lo[1]);
    let (outer, inner) = if x_major { (0, 1) } else { (1, 0) };
    let mut o = lo[outer];
    while o <= hi[outer] {
        let mut i = lo[inner];
        while i <= hi[inner] {
            let p = if x_major { [o, i] } else { [i, o] };
            if region.contains_point(p) {
                vertices.push(p);
            }
            i += 1;
        }
        o += 1;
    }
    if vertices.is_empty() {
        return Err(GeometryError::EmptyRegion);
    }
    let index: HashMap<LatticePoint, u32> = vertices
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, i as u32))
        .collect();
    let mut edges = Vec::new();
    for (vi, &p) in vertices.iter().enumerate() {
        for d in [[1, 0], [0, 1]] {
            let q = [p[0] + d[0], p[1] + d[1]];
            if let Some(&qi) = index.get(&q) {
                if region.unit_segment_in_region(p, q)? {
                    let (a, b) = if (vi as u32) < qi {
                        (vi as u32, qi)
                    } else {
                        (qi, vi as u32)
                    };
                    edges.push((a, b));
                }
            }
        }
    }
    // exterior boundary: points outside the open region with a lattice
    // neighbor inside
    let mut ext_boundary = Vec::new();
    for y in (lo[1] - 1)..=(hi[1] + 1) {
        for x in (lo[0] - 1)..=(hi[0] + 1) {
            let p = [x, y];
            if index.contains_key(&p) {
                continue;
            }
            let near = [[1, 0], [-1, 0], [0, 1], [0, -1]]
                .iter()
                .any(|d| index.contains_key(&[p[0] + d[0], p[1] + d[1]]));
            if near && !region.contains_point(p) {
                ext_boundary.push(p);
            }
        }
    }
    Ok(DomainGraph {
        vertices,
        edges,
        index,
        ext_boundary,
    })
}

/// Corner of the region boundary with its interior opening angle.
#[derive(Debug, Clone, Serialize)]
pub struct Corner {
    pub vertex: LatticePoint,
    /// Interior angle in radians, in `(0, 2π) \ {π}`.
    pub theta: f64,
}

/// Exact area (as twice-area integer), perimeter, and corner list of the
/// scaled region.
#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    /// Twice the area in lattice units²; the area itself is `area_twice / 2`.
    pub area_twice: i64,
    pub perimeter: f64,
    pub corners: Vec<Corner>,
}

impl GeometrySummary {
    pub fn area(&self) -> f64 {
        self.area_twice as f64 / 2.0
    }
}

pub fn summarize_geometry(region: &LatticeRegion) -> GeometrySummary {
    let s = region.scale;
    let mut area2: i128 = 0;
    let mut perimeter = 0.0;
    let mut corners = Vec::new();
    for l in region.loops() {
        let scaled: Vec<LatticePoint> = l.iter().map(|v| [s * v[0], s * v[1]]).collect();
        area2 += signed_area_twice(&scaled);
        let n = scaled.len();
        for i in 0..n {
            let prev = scaled[(i + n - 1) % n];
            let v = scaled[i];
            let next = scaled[(i + 1) % n];
            let din = [(v[0] - prev[0]) as f64, (v[1] - prev[1]) as f64];
            let dout = [(next[0] - v[0]) as f64, (next[1] - v[1]) as f64];
            perimeter += (dout[0] * dout[0] + dout[1] * dout[1]).sqrt();
            // With the outer loop counterclockwise and holes clockwise the
            // interior angle measured inside the region is π minus the turn.
            let turn = (din[0] * dout[1] - din[1] * dout[0]).atan2(din[0] * dout[0] + din[1] * dout[1]);
            corners.push(Corner {
                vertex: v,
                theta: std::f64::consts::PI - turn,
            });
        }
    }
    GeometrySummary {
        // outer is counterclockwise, holes clockwise, so the signed sum is
        // the even-odd area
        area_twice: area2 as i64,
        perimeter,
        corners,
    }
}

/// Lattice points lying on the boundary of the scaled region (for Pick's
/// theorem checks).
pub fn boundary_lattice_point_count(region: &LatticeRegion) -> i64 {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 {
            a.abs()
        } else {
            gcd(b, a % b)
        }
    }
    let s = region.scale;
    let mut count = 0;
    for l in region.loops() {
        let n = l.len();
        for i in 0..n {
            let a = l[i];
            let b = l[(i + 1) % n];
            count += gcd(s * (b[0] - a[0]), s * (b[1] - a[1]));
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn unit_square(scale: i64) -> LatticeRegion {
        LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [1, 0], [1, 1], [0, 1]]],
            scale,
        })
        .unwrap()
    }

    fn square_with_hole(scale: i64) -> LatticeRegion {
        // outer side 6, hole side 2 centered
        LatticeRegion::new(&RegionSpec {
            loops: vec![
                vec![[0, 0], [6, 0], [6, 6], [0, 6]],
                vec![[2, 2], [4, 2], [4, 4], [2, 4]],
            ],
            scale,
        })
        .unwrap()
    }

    #[test]
    fn parse_unit_square() {
        let r = LatticeRegion::parse(r#"{"loops": [[[0,0],[1,0],[1,1],[0,1]]], "scale": 1}"#)
            .unwrap();
        assert_eq!(r.loops().len(), 1);
    }

    #[test]
    fn parse_square_with_hole() {
        let r = square_with_hole(1);
        assert_eq!(r.loops().len(), 2);
        // hole center is outside the region under the even-odd rule
        assert!(!r.contains_point([3, 3]));
        assert!(r.contains_point([1, 1]));
    }

    #[test]
    fn repeated_vertex_rejected() {
        let err = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [2, 0], [2, 2], [0, 0], [0, 2]]],
            scale: 1,
        })
        .unwrap_err();
        assert!(matches!(err, GeometryError::NonSimpleLoop(_)));
    }

    #[test]
    fn self_intersecting_loop_rejected() {
        let err = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [2, 2], [2, 0], [0, 2]]],
            scale: 1,
        })
        .unwrap_err();
        assert!(matches!(err, GeometryError::NonSimpleLoop(_)));
    }

    #[test]
    fn hole_outside_rejected() {
        let err = LatticeRegion::new(&RegionSpec {
            loops: vec![
                vec![[0, 0], [2, 0], [2, 2], [0, 2]],
                vec![[5, 5], [6, 5], [6, 6], [5, 6]],
            ],
            scale: 1,
        })
        .unwrap_err();
        assert!(matches!(err, GeometryError::HoleOutsideOuter(1)));
    }

    #[test]
    fn containment_basics() {
        let r = unit_square(4);
        assert!(r.contains_point([2, 2]));
        assert!(!r.contains_point([0, 1])); // boundary, region open
        assert!(!r.contains_point([5, 2]));
    }

    #[test]
    fn unit_segment_rules() {
        let r3 = unit_square(3);
        assert!(r3.unit_segment_in_region([1, 1], [1, 2]).unwrap());
        let r2 = unit_square(2);
        assert!(!r2.unit_segment_in_region([1, 1], [1, 2]).unwrap());
        assert!(r2
            .unit_segment_in_region([0, 0], [2, 0])
            .is_err());
    }

    #[test]
    fn thin_wedge_blocks_edge() {
        // Square with a thin wedge cut in from the left edge, apex at (5,3).
        // At x=4 the excluded wedge spans y in (2.6, 2.8): the endpoints and
        // midpoint of the vertical segment (4,2)-(4,3) are all inside, but
        // the open segment crosses the boundary twice.
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![
                [0, 0],
                [8, 0],
                [8, 8],
                [0, 8],
                [0, 2],
                [5, 3],
                [0, 1],
            ]],
            scale: 1,
        })
        .unwrap();
        assert!(r.contains_point([4, 2]));
        assert!(r.contains_point([4, 3]));
        assert!(r.contains_doubled([8, 5])); // midpoint (4, 5/2)
        let seg = r.unit_segment_in_region([4, 2], [4, 3]).unwrap();
        assert!(!seg, "segment crossing a thin boundary wedge must be rejected");
    }

    #[test]
    fn graph_counts_unit_square() {
        let g5 = build_graph(&unit_square(5)).unwrap();
        assert_eq!(g5.n(), 16); // (L-1)^2
        assert_eq!(g5.edges.len(), 24); // 2(L-1)(L-2)
        let g2 = build_graph(&unit_square(2)).unwrap();
        assert_eq!(g2.n(), 1);
        assert_eq!(g2.edges.len(), 0);
    }

    #[test]
    fn graph_counts_sweep() {
        for scale in 2..=64 {
            let g = build_graph(&unit_square(scale)).unwrap();
            assert_eq!(g.n() as i64, (scale - 1) * (scale - 1));
            assert_eq!(g.edges.len() as i64, 2 * (scale - 1) * (scale - 2));
        }
    }

    #[test]
    fn ext_boundary_unit_square() {
        // sides contribute L-1 sites each; the four corner lattice points
        // have no neighbor inside the open square
        let g = build_graph(&unit_square(5)).unwrap();
        assert_eq!(g.ext_boundary.len(), 4 * 4);
        for p in &g.ext_boundary {
            assert!(!unit_square(5).contains_point(*p));
        }
    }

    #[test]
    fn edges_symmetric_and_interior() {
        let r = square_with_hole(2);
        let g = build_graph(&r).unwrap();
        for &(a, b) in &g.edges {
            let p = g.vertices[a as usize];
            let q = g.vertices[b as usize];
            assert!(r.unit_segment_in_region(p, q).unwrap());
            assert!(r.unit_segment_in_region(q, p).unwrap());
            assert!(r.contains_point(p) && r.contains_point(q));
        }
    }

    #[test]
    fn summary_unit_square() {
        let s = unit_square(1).summarize();
        assert_eq!(s.area_twice, 2);
        assert_relative_eq!(s.perimeter, 4.0);
        assert_eq!(s.corners.len(), 4);
        for c in &s.corners {
            assert_relative_eq!(c.theta, std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn summary_l_shape() {
        // 2x2 square minus 1x1 corner square
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]],
            scale: 1,
        })
        .unwrap();
        let s = r.summarize();
        assert_eq!(s.area_twice, 6);
        let mut right = 0;
        let mut reflex = 0;
        for c in &s.corners {
            if (c.theta - std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
                right += 1;
            } else if (c.theta - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-12 {
                reflex += 1;
            } else {
                panic!("unexpected corner angle {}", c.theta);
            }
        }
        assert_eq!((right, reflex), (5, 1));
    }

    #[test]
    fn summary_hole_corners_reflex() {
        let s = square_with_hole(1).summarize();
        let hole_corners: Vec<_> = s
            .corners
            .iter()
            .filter(|c| c.vertex.iter().all(|&x| (2..=4).contains(&x)))
            .collect();
        assert_eq!(hole_corners.len(), 4);
        for c in hole_corners {
            assert_relative_eq!(c.theta, 3.0 * std::f64::consts::FRAC_PI_2, epsilon = 1e-12);
        }
    }

    #[test]
    fn collinear_pseudo_corners_merged() {
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [1, 0], [2, 0], [2, 2], [0, 2]]],
            scale: 1,
        })
        .unwrap();
        assert_eq!(r.summarize().corners.len(), 4);
    }

    #[test]
    fn picks_theorem() {
        for region in [unit_square(1), square_with_hole(1), unit_square(7)] {
            let g = build_graph(&region);
            let interior = match &g {
                Ok(g) => g.n() as i64,
                Err(_) => 0,
            };
            let b = boundary_lattice_point_count(&region);
            let holes = region.loops().len() as i64 - 1;
            // Pick with holes: A = I + B/2 - 1 + H (exact, doubled form)
            assert_eq!(region.summarize().area_twice, 2 * interior + b - 2 + 2 * holes);
        }
    }

    #[test]
    fn scaling_vertex_density() {
        let r = LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [3, 0], [3, 2], [1, 2], [1, 1], [0, 1]]],
            scale: 1,
        })
        .unwrap();
        let area = r.summarize().area();
        let mut last = 0usize;
        for scale in [2, 4, 8, 32, 128] {
            let g = build_graph(&r.with_scale(scale).unwrap()).unwrap();
            assert!(g.n() >= last);
            last = g.n();
            if scale == 128 {
                let ratio = g.n() as f64 / (area * (scale * scale) as f64);
                assert!((ratio - 1.0).abs() < 0.02, "ratio {}", ratio);
            }
        }
    }

    fn l_shape_region() -> LatticeRegion {
        LatticeRegion::new(&RegionSpec {
            loops: vec![vec![[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]]],
            scale: 5,
        })
        .unwrap()
    }

    proptest::proptest! {
        #[test]
        fn containment_implies_inside_outer(x in -2i64..22, y in -2i64..22) {
            let r = l_shape_region();
            if r.contains_doubled([x, y]) {
                proptest::prop_assert!(r.inside_outer_doubled([x, y]));
            }
        }

        #[test]
        fn segment_predicate_is_symmetric(
            x in -1i64..11, y in -1i64..11, horizontal in proptest::bool::ANY
        ) {
            let r = l_shape_region();
            let p = [x, y];
            let q = if horizontal { [x + 1, y] } else { [x, y + 1] };
            proptest::prop_assert_eq!(
                r.unit_segment_in_region(p, q).unwrap(),
                r.unit_segment_in_region(q, p).unwrap()
            );
        }

        #[test]
        fn edge_requires_both_endpoints(
            x in -1i64..11, y in -1i64..11, horizontal in proptest::bool::ANY
        ) {
            let r = l_shape_region();
            let p = [x, y];
            let q = if horizontal { [x + 1, y] } else { [x, y + 1] };
            if r.unit_segment_in_region(p, q).unwrap() {
                proptest::prop_assert!(r.contains_point(p) && r.contains_point(q));
            }
        }
    }
}
