//! Voronoi tessellation as the Delaunay dual, corridor graphs threaded
//! between keep-out zones, and shortest-path planning over them.
//!
//! Cells are built by clipping the bounding box against the perpendicular
//! bisector half-plane of every Delaunay neighbour, which is exact for
//! box-clipped diagrams because only neighbours contribute facets. Edges
//! come from the dual construction directly: the segment between the
//! circumcenters of the two triangles sharing a Delaunay edge (a ray from
//! the single circumcenter for hull edges), so edges that meet at a Voronoi
//! vertex share endpoint coordinates bit for bit and graph extraction needs
//! no coordinate snapping. Collinear site sets, where no triangulation
//! exists, degrade to parallel bisector strips.
//!
//! A [`CorridorGraph`] keeps the Voronoi edges whose closed segments stay at
//! least `clearance` away from every keep-out zone, certified by a
//! branch-and-bound minimisation that exploits the 1-Lipschitz property of
//! signed distance fields. [`shortest_path`] connects free-floating start
//! and goal positions to every graph node they can reach by a zone-clear
//! straight segment, then runs Dijkstra.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::alphashape::{circumcenter, delaunay, PointSet};
use crate::error::{Error, Result};
use crate::geo::{BoundingBox, PlanarPoint, Polygon};
use crate::geofence::{Zone, ZoneMode};

/// One site and the region of the clip box nearest to it.
#[derive(Debug, Clone)]
pub struct VoronoiCell {
    pub site: PlanarPoint,
    pub region: Polygon,
}

/// A finite piece of the boundary between two cells. `sites` are indices
/// into the diagram's cell list; every point of the segment is equidistant
/// from both sites.
#[derive(Debug, Clone)]
pub struct VoronoiEdge {
    pub a: PlanarPoint,
    pub b: PlanarPoint,
    pub sites: (usize, usize),
}

impl VoronoiEdge {
    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Tessellation of a bounding box by nearest-site regions.
#[derive(Debug, Clone)]
pub struct VoronoiDiagram {
    cells: Vec<VoronoiCell>,
    edges: Vec<VoronoiEdge>,
    clip: BoundingBox,
}

impl VoronoiDiagram {
    pub fn cells(&self) -> &[VoronoiCell] {
        &self.cells
    }

    pub fn edges(&self) -> &[VoronoiEdge] {
        &self.edges
    }

    pub fn clip(&self) -> BoundingBox {
        self.clip
    }
}

/// Builds the Voronoi diagram of the sites, clipped to `clip`.
///
/// Requires at least two distinct sites, all strictly inside the box.
/// Collinear site sets (including exactly two sites) produce parallel
/// bisector strips instead of failing.
pub fn voronoi(set: &PointSet, clip: BoundingBox) -> Result<VoronoiDiagram> {
    let sites = set.points();
    if sites.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "voronoi needs at least 2 distinct sites, got {}",
            sites.len()
        )));
    }
    for (i, s) in sites.iter().enumerate() {
        let strictly_inside = s.x > clip.min.x
            && s.x < clip.max.x
            && s.y > clip.min.y
            && s.y < clip.max.y;
        if !strictly_inside {
            return Err(Error::InvalidInput(format!(
                "site {i} at ({}, {}) is not strictly inside the clip box",
                s.x, s.y
            )));
        }
    }
    if sites.len() == 2 {
        return collinear_diagram(sites, clip);
    }
    match delaunay(set) {
        Ok(tri) => dual_diagram(sites, tri.triangles(), clip),
        // No triangulation exists only when every site lies on one line.
        Err(Error::DegenerateInput(_)) => collinear_diagram(sites, clip),
        Err(e) => Err(e),
    }
}

/// Half-plane of points closer to `site` than to `other`:
/// `f(x) = (x - midpoint) . (other - site)`, non-positive on the near side.
fn bisector_halfplane(site: PlanarPoint, other: PlanarPoint) -> impl Fn(PlanarPoint) -> f64 {
    let mid = PlanarPoint::new((site.x + other.x) / 2.0, (site.y + other.y) / 2.0);
    let len = site.distance(other);
    let ux = (other.x - site.x) / len;
    let uy = (other.y - site.y) / len;
    move |p: PlanarPoint| (p.x - mid.x) * ux + (p.y - mid.y) * uy
}

/// One Sutherland-Hodgman pass: keeps the part of a convex loop where
/// `f <= 0`. Input and output are CCW vertex loops without a closing
/// duplicate.
fn clip_loop(loop_: &[PlanarPoint], f: &dyn Fn(PlanarPoint) -> f64) -> Vec<PlanarPoint> {
    let mut out = Vec::with_capacity(loop_.len() + 1);
    let n = loop_.len();
    for k in 0..n {
        let cur = loop_[k];
        let nxt = loop_[(k + 1) % n];
        let fc = f(cur);
        let fnx = f(nxt);
        if fc <= 0.0 {
            out.push(cur);
        }
        if (fc <= 0.0) != (fnx <= 0.0) {
            let t = fc / (fc - fnx);
            out.push(PlanarPoint::new(
                cur.x + t * (nxt.x - cur.x),
                cur.y + t * (nxt.y - cur.y),
            ));
        }
    }
    out
}

/// Turns a clipped loop into a Polygon, dropping near-coincident
/// consecutive vertices that clipping can produce.
fn loop_to_polygon(mut vs: Vec<PlanarPoint>) -> Result<Polygon> {
    vs.dedup_by(|b, a| a.distance(*b) < 1e-9);
    while vs.len() > 1 && vs[0].distance(vs[vs.len() - 1]) < 1e-9 {
        vs.pop();
    }
    Polygon::new(vs)
}

/// Clips segment `a` -> `b` to the box (Liang-Barsky). Returns the clipped
/// endpoints, or `None` when the segment misses the box entirely.
fn clip_segment_to_box(
    a: PlanarPoint,
    b: PlanarPoint,
    clip: &BoundingBox,
) -> Option<(PlanarPoint, PlanarPoint)> {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    // Each constraint has the form t * p <= q.
    let constraints = [
        (-dx, a.x - clip.min.x),
        (dx, clip.max.x - a.x),
        (-dy, a.y - clip.min.y),
        (dy, clip.max.y - a.y),
    ];
    for (p, q) in constraints {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p > 0.0 {
                t1 = t1.min(r);
            } else {
                t0 = t0.max(r);
            }
            if t0 > t1 {
                return None;
            }
        }
    }
    let at = |t: f64| PlanarPoint::new(a.x + t * dx, a.y + t * dy);
    Some((at(t0), at(t1)))
}

/// General-position construction from the Delaunay triangulation.
fn dual_diagram(
    sites: &[PlanarPoint],
    triangles: &[[usize; 3]],
    clip: BoundingBox,
) -> Result<VoronoiDiagram> {
    // Delaunay edge -> adjacent triangle indices (1 for hull edges, else 2).
    let mut edge_tris: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (i, j) = (tri[k], tri[(k + 1) % 3]);
            let key = (i.min(j), i.max(j));
            edge_tris.entry(key).or_default().push(t);
        }
    }
    let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); sites.len()];
    for &(i, j) in edge_tris.keys() {
        neighbours[i].push(j);
        neighbours[j].push(i);
    }

    let box_loop: Vec<PlanarPoint> = clip.corners().to_vec();
    let mut cells = Vec::with_capacity(sites.len());
    for (i, &site) in sites.iter().enumerate() {
        let mut region = box_loop.clone();
        for &j in &neighbours[i] {
            let f = bisector_halfplane(site, sites[j]);
            region = clip_loop(&region, &f);
            if region.len() < 3 {
                break;
            }
        }
        let region = loop_to_polygon(region).map_err(|e| {
            Error::InvalidGeometry(format!("voronoi cell of site {i} degenerated: {e}"))
        })?;
        cells.push(VoronoiCell { site, region });
    }

    let circumcenters: Vec<Option<PlanarPoint>> = triangles
        .iter()
        .map(|t| circumcenter(sites[t[0]], sites[t[1]], sites[t[2]]))
        .collect();
    let far_corner_distance = |p: PlanarPoint| {
        clip.corners()
            .iter()
            .map(|c| p.distance(*c))
            .fold(0.0, f64::max)
    };

    let mut edges = Vec::new();
    for (&(i, j), tris) in &edge_tris {
        let raw = match tris.as_slice() {
            [t1, t2] => match (circumcenters[*t1], circumcenters[*t2]) {
                (Some(a), Some(b)) => Some((a, b)),
                _ => None,
            },
            [t] => circumcenters[*t].map(|c| {
                // Hull edge: the dual is a ray along the bisector, away
                // from the triangle's third vertex.
                let third = triangles[*t]
                    .iter()
                    .copied()
                    .find(|&v| v != i && v != j)
                    .expect("triangle has three distinct vertices");
                let si = sites[i];
                let sj = sites[j];
                let mid = PlanarPoint::new((si.x + sj.x) / 2.0, (si.y + sj.y) / 2.0);
                let len = si.distance(sj);
                let mut dx = -(sj.y - si.y) / len;
                let mut dy = (sj.x - si.x) / len;
                let k = sites[third];
                if dx * (k.x - mid.x) + dy * (k.y - mid.y) > 0.0 {
                    dx = -dx;
                    dy = -dy;
                }
                let reach = far_corner_distance(c) + 1.0;
                (c, PlanarPoint::new(c.x + dx * reach, c.y + dy * reach))
            }),
            _ => None,
        };
        let Some((a, b)) = raw else { continue };
        if let Some((ca, cb)) = clip_segment_to_box(a, b, &clip) {
            if ca.distance(cb) > 1e-9 {
                edges.push(VoronoiEdge {
                    a: ca,
                    b: cb,
                    sites: (i, j),
                });
            }
        }
    }

    Ok(VoronoiDiagram { cells, edges, clip })
}

/// Collinear-site construction: cells are the strips between consecutive
/// perpendicular bisectors. Sites arrive lexicographically sorted, which for
/// collinear points is also their order along the line.
fn collinear_diagram(sites: &[PlanarPoint], clip: BoundingBox) -> Result<VoronoiDiagram> {
    let box_loop: Vec<PlanarPoint> = clip.corners().to_vec();
    let mut cells = Vec::with_capacity(sites.len());
    for (k, &site) in sites.iter().enumerate() {
        let mut region = box_loop.clone();
        if k > 0 {
            let f = bisector_halfplane(site, sites[k - 1]);
            region = clip_loop(&region, &f);
        }
        if k + 1 < sites.len() {
            let f = bisector_halfplane(site, sites[k + 1]);
            region = clip_loop(&region, &f);
        }
        let region = loop_to_polygon(region).map_err(|e| {
            Error::InvalidGeometry(format!("voronoi strip of site {k} degenerated: {e}"))
        })?;
        cells.push(VoronoiCell { site, region });
    }

    let mut edges = Vec::new();
    for k in 0..sites.len() - 1 {
        let (si, sj) = (sites[k], sites[k + 1]);
        let mid = PlanarPoint::new((si.x + sj.x) / 2.0, (si.y + sj.y) / 2.0);
        let len = si.distance(sj);
        let (dx, dy) = (-(sj.y - si.y) / len, (sj.x - si.x) / len);
        let reach = clip
            .corners()
            .iter()
            .map(|c| mid.distance(*c))
            .fold(0.0, f64::max)
            + 1.0;
        let a = PlanarPoint::new(mid.x - dx * reach, mid.y - dy * reach);
        let b = PlanarPoint::new(mid.x + dx * reach, mid.y + dy * reach);
        if let Some((ca, cb)) = clip_segment_to_box(a, b, &clip) {
            if ca.distance(cb) > 1e-9 {
                edges.push(VoronoiEdge {
                    a: ca,
                    b: cb,
                    sites: (k, k + 1),
                });
            }
        }
    }
    Ok(VoronoiDiagram { cells, edges, clip })
}

/// True when the zone's planar signed distance stays at or above
/// `threshold` over the whole closed segment. Certified by interval
/// branch-and-bound: the signed distance field is 1-Lipschitz, so an
/// interval whose endpoint minimum minus half-length clears the threshold
/// cannot dip below it. Intervals shorter than a micrometre are accepted on
/// endpoint evidence, bounding the undetected dip at half that.
pub(crate) fn segment_clear_of(zone: &Zone, a: PlanarPoint, b: PlanarPoint, threshold: f64) -> bool {
    let sa = zone.footprint_distance(a);
    let sb = zone.footprint_distance(b);
    if sa < threshold || sb < threshold {
        return false;
    }
    let mut stack = vec![(a, b, sa, sb)];
    while let Some((p, q, sp, sq)) = stack.pop() {
        let half = p.distance(q) / 2.0;
        if sp.min(sq) - half >= threshold || half <= 1e-6 {
            continue;
        }
        let m = PlanarPoint::new((p.x + q.x) / 2.0, (p.y + q.y) / 2.0);
        let sm = zone.footprint_distance(m);
        if sm < threshold {
            return false;
        }
        stack.push((p, m, sp, sm));
        stack.push((m, q, sm, sq));
    }
    true
}

/// Weighted undirected graph of zone-clear Voronoi edges.
#[derive(Debug, Clone)]
pub struct CorridorGraph {
    nodes: Vec<PlanarPoint>,
    edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
    zones: Vec<Zone>,
    clearance_m: f64,
}

/// A planned route: consecutive waypoints are distinct and `total_length`
/// is the sum of straight segment lengths (independent of edge weights).
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub waypoints: Vec<PlanarPoint>,
    pub total_length: f64,
}

impl CorridorGraph {
    /// Builds a graph directly from nodes and weighted undirected edges.
    /// `zones` constrain how [`shortest_path`] may connect start and goal
    /// positions to the graph; only keep-out zones are kept.
    pub fn new(
        nodes: Vec<PlanarPoint>,
        edges: Vec<(usize, usize, f64)>,
        zones: &[Zone],
        clearance_m: f64,
    ) -> Result<Self> {
        for &(u, v, w) in &edges {
            if u >= nodes.len() || v >= nodes.len() {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a missing node"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop at node {u}")));
            }
            if !w.is_finite() || w <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) has non-positive weight {w}"
                )));
            }
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for &(u, v, w) in &edges {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        Ok(CorridorGraph {
            nodes,
            edges,
            adjacency,
            zones: zones
                .iter()
                .filter(|z| z.mode == ZoneMode::KeepOut)
                .cloned()
                .collect(),
            clearance_m: clearance_m.max(0.0),
        })
    }

    pub fn nodes(&self) -> &[PlanarPoint] {
        &self.nodes
    }

    /// Undirected weighted edges as node index pairs.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn clearance_m(&self) -> f64 {
        self.clearance_m
    }

    fn segment_admissible(&self, a: PlanarPoint, b: PlanarPoint) -> bool {
        self.zones
            .iter()
            .all(|z| segment_clear_of(z, a, b, self.clearance_m))
    }

    /// Dijkstra from a set of entry nodes with initial costs; returns per-
    /// node best cost and predecessor. Deterministic: ties break on node
    /// index through the heap ordering.
    fn dijkstra(&self, entries: &[(usize, f64)]) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.nodes.len();
        let mut dist = vec![f64::INFINITY; n];
        let mut prev: Vec<Option<usize>> = vec![None; n];
        let mut heap: BinaryHeap<Reverse<(HeapCost, usize)>> = BinaryHeap::new();
        for &(node, cost) in entries {
            if cost < dist[node] {
                dist[node] = cost;
                heap.push(Reverse((HeapCost(cost), node)));
            }
        }
        while let Some(Reverse((HeapCost(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.adjacency[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = Some(u);
                    heap.push(Reverse((HeapCost(nd), v)));
                }
            }
        }
        (dist, prev)
    }
}

/// f64 cost with a total order so it can live in a BinaryHeap.
#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapCost(f64);

impl Eq for HeapCost {}

impl PartialOrd for HeapCost {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapCost {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Keeps the Voronoi edges whose closed segments stay at least
/// `clearance_m` from every keep-out zone; weights are pure Euclidean
/// lengths. Never fails: heavy restriction just yields a small or empty
/// graph.
pub fn build_corridor(diagram: &VoronoiDiagram, zones: &[Zone], clearance_m: f64) -> CorridorGraph {
    build_corridor_weighted(diagram, zones, clearance_m, &BTreeMap::new())
        .expect("empty difficulty map is always valid")
}

/// As [`build_corridor`], with per-zone difficulty factors: an edge passing
/// within twice the clearance of a zone has its weight multiplied by that
/// zone's factor (keyed by zone id; absent means 1). Factors must be finite
/// and positive.
pub fn build_corridor_weighted(
    diagram: &VoronoiDiagram,
    zones: &[Zone],
    clearance_m: f64,
    difficulty: &BTreeMap<String, f64>,
) -> Result<CorridorGraph> {
    for (id, f) in difficulty {
        if !f.is_finite() || *f <= 0.0 {
            return Err(Error::UnsupportedParameter(format!(
                "difficulty factor for zone {id} must be finite and positive, got {f}"
            )));
        }
    }
    let clearance_m = clearance_m.max(0.0);
    let keep_out: Vec<&Zone> = zones.iter().filter(|z| z.mode == ZoneMode::KeepOut).collect();

    let mut node_ids: HashMap<(u64, u64), usize> = HashMap::new();
    let mut nodes: Vec<PlanarPoint> = Vec::new();
    let mut intern = |p: PlanarPoint, nodes: &mut Vec<PlanarPoint>| -> usize {
        *node_ids
            .entry((p.x.to_bits(), p.y.to_bits()))
            .or_insert_with(|| {
                nodes.push(p);
                nodes.len() - 1
            })
    };

    let mut edges = Vec::new();
    'edge: for e in diagram.edges() {
        let mut weight = e.length();
        for z in &keep_out {
            if !segment_clear_of(z, e.a, e.b, clearance_m) {
                continue 'edge;
            }
            // Within the influence band of this zone? Then its difficulty
            // factor applies.
            if let Some(factor) = difficulty.get(&z.id) {
                if !segment_clear_of(z, e.a, e.b, 2.0 * clearance_m) {
                    weight *= factor;
                }
            }
        }
        let u = intern(e.a, &mut nodes);
        let v = intern(e.b, &mut nodes);
        if u != v {
            edges.push((u, v, weight));
        }
    }

    let mut adjacency = vec![Vec::new(); nodes.len()];
    for &(u, v, w) in &edges {
        adjacency[u].push((v, w));
        adjacency[v].push((u, w));
    }
    Ok(CorridorGraph {
        nodes,
        edges,
        adjacency,
        zones: keep_out.into_iter().cloned().collect(),
        clearance_m,
    })
}

/// Minimal-weight route from `start` to `goal` through the corridor graph.
///
/// Both endpoints connect to every graph node they can reach by a straight
/// segment that keeps the graph's clearance from its zones; Dijkstra then
/// minimises total weight (connector segments weigh their length). The
/// returned waypoints begin at `start` and end at `goal`; `total_length` is
/// geometric, even when difficulty factors skewed the optimisation.
pub fn shortest_path(g: &CorridorGraph, start: PlanarPoint, goal: PlanarPoint) -> Result<Path> {
    if start.distance(goal) <= 1e-9 {
        return Ok(Path {
            waypoints: vec![start],
            total_length: 0.0,
        });
    }
    let links = |p: PlanarPoint| -> Vec<(usize, f64)> {
        g.nodes
            .iter()
            .enumerate()
            .filter(|(_, &n)| g.segment_admissible(p, n))
            .map(|(i, &n)| (i, p.distance(n)))
            .collect()
    };
    let start_links = links(start);
    if start_links.is_empty() {
        return Err(Error::NoPath(
            "start position cannot reach any corridor node by a clear segment".into(),
        ));
    }
    let goal_links = links(goal);
    if goal_links.is_empty() {
        return Err(Error::NoPath(
            "goal position cannot be reached from any corridor node by a clear segment".into(),
        ));
    }

    let (dist, prev) = g.dijkstra(&start_links);
    let mut best: Option<(f64, usize)> = None;
    for &(node, link_cost) in &goal_links {
        if dist[node].is_finite() {
            let total = dist[node] + link_cost;
            if best.is_none_or(|(b, bn)| total < b || (total == b && node < bn)) {
                best = Some((total, node));
            }
        }
    }
    let Some((_, terminal)) = best else {
        return Err(Error::NoPath(
            "start and goal connect to different corridor components".into(),
        ));
    };

    let mut chain = vec![terminal];
    while let Some(p) = prev[*chain.last().expect("chain starts non-empty")] {
        chain.push(p);
    }
    chain.reverse();

    let mut waypoints = Vec::with_capacity(chain.len() + 2);
    waypoints.push(start);
    waypoints.extend(chain.into_iter().map(|i| g.nodes[i]));
    waypoints.push(goal);
    waypoints.dedup_by(|b, a| a.distance(*b) <= 1e-9);
    let total_length = waypoints
        .windows(2)
        .map(|w| w[0].distance(w[1]))
        .sum::<f64>();
    Ok(Path {
        waypoints,
        total_length,
    })
}
