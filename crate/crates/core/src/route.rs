//! Exploration-route sampling over a walkable floor: Delaunay triangulation of
//! floor samples, Dijkstra over the triangulation edges, Laplacian smoothing,
//! step-wise collision checks against box proxies, and conversion of accepted
//! routes to camera trajectories.
//!
//! Floor coordinates `(u, v)` map to world `(u, plane_height, v)`. World +Y
//! points down, so cameras sit at `plane_height - camera_height`.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use nalgebra::{Point2, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robust::Coord;

use crate::error::{Error, Result};
use crate::mesh::Aabb;
use crate::pano::{CameraPose, Trajectory, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct WalkablePointSet {
    pub points: Vec<Point2<f64>>,
    pub plane_height: f64,
}

impl WalkablePointSet {
    pub fn new(points: Vec<Point2<f64>>, plane_height: f64) -> Self {
        Self {
            points,
            plane_height,
        }
    }

    pub fn lift(&self, p: &Point2<f64>) -> Vec3 {
        Vec3::new(p.x, self.plane_height, p.y)
    }
}

/// Triangles as CCW index triples into the source point list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triangulation {
    pub triangles: Vec<[usize; 3]>,
}

fn coord(p: &Point2<f64>) -> Coord<f64> {
    Coord { x: p.x, y: p.y }
}

fn orient(p: &[Point2<f64>], a: usize, b: usize, c: usize) -> f64 {
    robust::orient2d(coord(&p[a]), coord(&p[b]), coord(&p[c]))
}

/// Positive when `d` lies strictly inside the circumcircle of CCW `(a, b, c)`.
fn in_circle(p: &[Point2<f64>], a: usize, b: usize, c: usize, d: usize) -> f64 {
    robust::incircle(coord(&p[a]), coord(&p[b]), coord(&p[c]), coord(&p[d]))
}

fn lex_less(p: &[Point2<f64>], a: usize, b: usize) -> Ordering {
    p[a].x
        .partial_cmp(&p[b].x)
        .unwrap()
        .then(p[a].y.partial_cmp(&p[b].y).unwrap())
}

struct TriMesh {
    tris: Vec<[usize; 3]>,
    edges: HashMap<(usize, usize), usize>,
}

impl TriMesh {
    fn add(&mut self, t: [usize; 3]) {
        let id = self.tris.len();
        self.tris.push(t);
        for k in 0..3 {
            self.edges.insert((t[k], t[(k + 1) % 3]), id);
        }
    }

    fn third(&self, t: usize, a: usize, b: usize) -> usize {
        *self.tris[t].iter().find(|&&v| v != a && v != b).unwrap()
    }

    /// Quad `(u, v, a | v, u, b)` around the interior edge `u -> v`.
    fn quad(&self, u: usize, v: usize) -> Option<(usize, usize, usize, usize)> {
        let t1 = *self.edges.get(&(u, v))?;
        let t2 = *self.edges.get(&(v, u))?;
        Some((t1, t2, self.third(t1, u, v), self.third(t2, v, u)))
    }

    fn flip(&mut self, u: usize, v: usize) -> (usize, usize) {
        let (t1, t2, a, b) = self.quad(u, v).unwrap();
        self.edges.remove(&(u, v));
        self.edges.remove(&(v, u));
        self.tris[t1] = [u, b, a];
        self.tris[t2] = [b, v, a];
        for (t, tri) in [(t1, [u, b, a]), (t2, [b, v, a])] {
            for k in 0..3 {
                self.edges.insert((tri[k], tri[(k + 1) % 3]), t);
            }
        }
        (a, b)
    }
}

/// Delaunay triangulation by lexicographic sweep followed by Lawson edge flips
/// with exact orientation and in-circle predicates. Cocircular quads take the
/// diagonal incident to their lexicographically smallest point.
pub fn delaunay_triangulate(points: &WalkablePointSet) -> Result<Triangulation> {
    let p = &points.points;
    let n = p.len();
    if n < 3 {
        return Err(Error::DegenerateInput(format!(
            "triangulation needs at least 3 points, got {n}"
        )));
    }
    if p.iter().any(|q| !q.x.is_finite() || !q.y.is_finite()) {
        return Err(Error::DegenerateInput("non-finite point".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lex_less(p, a, b));
    if let Some(w) = order.windows(2).find(|w| p[w[0]] == p[w[1]]) {
        return Err(Error::DegenerateInput(format!(
            "points {} and {} coincide",
            w[0], w[1]
        )));
    }
    let k = (2..n)
        .find(|&k| orient(p, order[0], order[1], order[k]) != 0.0)
        .ok_or_else(|| Error::DegenerateInput("all points are collinear".into()))?;

    let mut mesh = TriMesh {
        tris: Vec::with_capacity(2 * n),
        edges: HashMap::with_capacity(6 * n),
    };
    let apex = order[k];
    let chain = &order[..k];
    let apex_left = orient(p, chain[0], chain[1], apex) > 0.0;
    for w in chain.windows(2) {
        if apex_left {
            mesh.add([w[0], w[1], apex]);
        } else {
            mesh.add([w[1], w[0], apex]);
        }
    }
    let mut hull: Vec<usize> = if apex_left {
        chain.iter().copied().chain([apex]).collect()
    } else {
        [chain[0], apex]
            .into_iter()
            .chain(chain[1..].iter().rev().copied())
            .collect()
    };

    for &q in &order[k + 1..] {
        let h = hull.len();
        let visible: Vec<bool> = (0..h)
            .map(|i| orient(p, hull[i], hull[(i + 1) % h], q) < 0.0)
            .collect();
        let start = (0..h)
            .find(|&i| visible[i] && !visible[(i + h - 1) % h])
            .expect("a point beyond the hull sees at least one edge");
        let mut i = start;
        let mut count = 0;
        while visible[i] {
            mesh.add([hull[(i + 1) % h], hull[i], q]);
            i = (i + 1) % h;
            count += 1;
        }
        // Hull vertices strictly inside the visible run are dropped.
        let mut next = Vec::with_capacity(h + 1);
        let keep_from = (start + count) % h;
        let mut j = keep_from;
        loop {
            next.push(hull[j]);
            if j == start {
                break;
            }
            j = (j + 1) % h;
        }
        next.push(q);
        hull = next;
    }

    legalize(&mut mesh, p);
    break_cocircular_ties(&mut mesh, p);
    Ok(Triangulation { triangles: mesh.tris })
}

fn legalize(mesh: &mut TriMesh, p: &[Point2<f64>]) {
    let mut stack: Vec<(usize, usize)> = mesh.edges.keys().copied().filter(|(a, b)| a < b).collect();
    stack.sort_unstable();
    while let Some((u, v)) = stack.pop() {
        let Some((_, _, a, b)) = mesh.quad(u, v) else {
            continue;
        };
        if in_circle(p, u, v, a, b) > 0.0 {
            mesh.flip(u, v);
            stack.extend([(u, b), (b, v), (v, a), (a, u)]);
        }
    }
}

fn break_cocircular_ties(mesh: &mut TriMesh, p: &[Point2<f64>]) {
    let cap = 4 * mesh.tris.len() * mesh.tris.len() + 16;
    let mut flips = 0;
    loop {
        let mut edges: Vec<(usize, usize)> = mesh.edges.keys().copied().filter(|(a, b)| a < b).collect();
        edges.sort_unstable();
        let mut changed = false;
        for (u, v) in edges {
            let Some((_, _, a, b)) = mesh.quad(u, v) else {
                continue;
            };
            if in_circle(p, u, v, a, b) != 0.0 {
                continue;
            }
            let min = [u, v, a, b]
                .into_iter()
                .min_by(|&x, &y| lex_less(p, x, y))
                .unwrap();
            if (min == a || min == b) && orient(p, u, b, a) > 0.0 && orient(p, b, v, a) > 0.0 {
                mesh.flip(u, v);
                changed = true;
                flips += 1;
            }
        }
        if !changed || flips > cap {
            break;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathGraph {
    pub nodes: Vec<Point2<f64>>,
    /// Undirected edges `(a, b, length)` with `a < b`.
    pub edges: Vec<(usize, usize, f64)>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PathGraph {
    /// Builds a graph from explicit weighted edges. Weights must be positive.
    pub fn from_edges(nodes: Vec<Point2<f64>>, edges: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = nodes.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut canon = Vec::with_capacity(edges.len());
        for (a, b, w) in edges {
            if a >= n || b >= n || a == b || !(w > 0.0) || !w.is_finite() {
                return Err(Error::domain(format!("invalid edge ({a}, {b}, {w})")));
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
            canon.push((a.min(b), a.max(b), w));
        }
        for adj in &mut adjacency {
            adj.sort_by(|x, y| x.0.cmp(&y.0));
        }
        Ok(Self {
            nodes,
            edges: canon,
            adjacency,
        })
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, f64)] {
        &self.adjacency[node]
    }

    /// Minimum-weight node sequence from `from` to `to` and its length.
    /// Among equal-length predecessors the smaller node index is kept.
    pub fn shortest_path_nodes(&self, from: usize, to: usize) -> Result<(Vec<usize>, f64)> {
        let n = self.nodes.len();
        if from >= n || to >= n {
            return Err(Error::domain(format!("node index out of range 0..{n}")));
        }
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                other
                    .0
                    .partial_cmp(&self.0)
                    .unwrap()
                    .then_with(|| other.1.cmp(&self.1))
            }
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut prev = vec![usize::MAX; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[from] = 0.0;
        heap.push(Entry(0.0, from));
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u == to {
                break;
            }
            for &(v, w) in &self.adjacency[u] {
                if done[v] {
                    continue;
                }
                let nd = d + w;
                if nd < dist[v] || (nd == dist[v] && u < prev[v]) {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Entry(nd, v));
                }
            }
        }
        if !dist[to].is_finite() {
            return Err(Error::NoPath { from, to });
        }
        let mut path = vec![to];
        let mut cur = to;
        while cur != from {
            cur = prev[cur];
            path.push(cur);
        }
        path.reverse();
        Ok((path, dist[to]))
    }
}

/// One edge per unique triangle side, weighted by Euclidean length.
pub fn build_path_graph(tri: &Triangulation, points: &[Point2<f64>]) -> Result<PathGraph> {
    let mut sides = BTreeSet::new();
    for t in &tri.triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            sides.insert((a.min(b), a.max(b)));
        }
    }
    let edges = sides
        .into_iter()
        .map(|(a, b)| (a, b, (points[a] - points[b]).norm()))
        .collect();
    PathGraph::from_edges(points.to_vec(), edges)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolylinePath {
    pub waypoints: Vec<Vec3>,
}

impl PolylinePath {
    pub fn new(waypoints: Vec<Vec3>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::domain("a path needs at least two waypoints"));
        }
        Ok(Self { waypoints })
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Largest angle (radians) between consecutive segment directions.
    pub fn max_turning_angle(&self) -> f64 {
        self.turning_angles().fold(0.0, f64::max)
    }

    pub fn total_turning_angle(&self) -> f64 {
        self.turning_angles().sum()
    }

    fn turning_angles(&self) -> impl Iterator<Item = f64> + '_ {
        self.waypoints.windows(3).filter_map(|w| {
            let a = w[1] - w[0];
            let b = w[2] - w[1];
            let (na, nb) = (a.norm(), b.norm());
            if na == 0.0 || nb == 0.0 {
                return None;
            }
            Some((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0).acos())
        })
    }

    /// Point at arc length `s` (clamped to the path).
    pub fn point_at(&self, s: f64) -> Vec3 {
        let mut remaining = s.max(0.0);
        for w in self.waypoints.windows(2) {
            let len = (w[1] - w[0]).norm();
            if remaining <= len && len > 0.0 {
                return w[0] + (w[1] - w[0]) * (remaining / len);
            }
            remaining -= len;
        }
        *self.waypoints.last().unwrap()
    }
}

/// Shortest route between two graph nodes, as floor-plane waypoints lifted to
/// `plane_height`.
pub fn shortest_path(graph: &PathGraph, from: usize, to: usize, plane_height: f64) -> Result<PolylinePath> {
    let (nodes, _) = graph.shortest_path_nodes(from, to)?;
    let mut waypoints: Vec<Vec3> = nodes
        .iter()
        .map(|&i| Vec3::new(graph.nodes[i].x, plane_height, graph.nodes[i].y))
        .collect();
    if waypoints.len() == 1 {
        waypoints.push(waypoints[0]);
    }
    PolylinePath::new(waypoints)
}

/// Iterated Jacobi update `p <- p + lambda * ((prev + next) / 2 - p)` on
/// interior waypoints; endpoints stay fixed.
pub fn laplacian_smooth(path: &PolylinePath, lambda: f64, iters: usize) -> PolylinePath {
    let mut cur = path.waypoints.clone();
    let n = cur.len();
    let mut next = cur.clone();
    for _ in 0..iters {
        for i in 1..n.saturating_sub(1) {
            let mid = (cur[i - 1] + cur[i + 1]) / 2.0;
            next[i] = cur[i] + (mid - cur[i]) * lambda;
        }
        std::mem::swap(&mut cur, &mut next);
    }
    PolylinePath { waypoints: cur }
}

/// Walks the path at arc-length increments of at most `step` and returns the
/// first sample within `margin` of any box (boundary inclusive).
pub fn check_collision(path: &PolylinePath, boxes: &[Aabb], step: f64, margin: f64) -> Option<Vec3> {
    let hit = |q: &Vec3| boxes.iter().any(|b| b.distance(q) - margin <= 0.0);
    if hit(&path.waypoints[0]) {
        return Some(path.waypoints[0]);
    }
    for w in path.waypoints.windows(2) {
        let len = (w[1] - w[0]).norm();
        let n = (len / step).ceil().max(1.0) as usize;
        for k in 1..=n {
            let q = w[0] + (w[1] - w[0]) * (k as f64 / n as f64);
            if hit(&q) {
                return Some(q);
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RouteParams {
    pub min_len: f64,
    pub frames: usize,
    pub lambda: f64,
    pub iters: usize,
    pub step: f64,
    pub margin: f64,
    pub camera_height: f64,
    pub seed: u64,
    pub max_attempts: usize,
}

impl Default for RouteParams {
    fn default() -> Self {
        Self {
            min_len: 18.0,
            frames: 81,
            lambda: 0.5,
            iters: 10,
            step: 0.1,
            margin: 0.3,
            camera_height: 1.6,
            seed: 0,
            max_attempts: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RejectReason {
    TooShort,
    Collision,
    Disconnected,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub trajectory: Trajectory,
    /// Dijkstra polyline on the floor.
    pub raw: PolylinePath,
    /// Smoothed polyline at camera height.
    pub smoothed: PolylinePath,
    pub length: f64,
    pub endpoints: (usize, usize),
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RouteRejection {
    pub attempts: usize,
    pub too_short: usize,
    pub collision: usize,
    pub disconnected: usize,
}

impl RouteRejection {
    /// Most frequent rejection reason (collision wins ties over too-short).
    pub fn reason(&self) -> RejectReason {
        if self.collision >= self.too_short && self.collision >= self.disconnected && self.collision > 0 {
            RejectReason::Collision
        } else if self.too_short >= self.disconnected {
            RejectReason::TooShort
        } else {
            RejectReason::Disconnected
        }
    }
}

impl std::fmt::Display for RouteRejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "no route accepted after {} attempts (too-short {}, collision {}, disconnected {})",
            self.attempts, self.too_short, self.collision, self.disconnected
        )
    }
}

/// Evenly arc-length spaced poses along `path`, facing along the local tangent
/// with zero pitch and roll.
pub fn path_to_trajectory(path: &PolylinePath, frames: usize) -> Result<Trajectory> {
    if frames < 2 {
        return Err(Error::domain("route resampling needs at least 2 frames"));
    }
    let total = path.length();
    let positions: Vec<Vec3> = (0..frames)
        .map(|i| path.point_at(total * i as f64 / (frames - 1) as f64))
        .collect();
    let poses = (0..frames)
        .map(|i| {
            let a = positions[i.saturating_sub(1)];
            let b = positions[(i + 1).min(frames - 1)];
            let t = b - a;
            let yaw = t.x.atan2(t.z);
            CameraPose::from_rotation(
                Rotation3::from_axis_angle(&Vector3::y_axis(), yaw),
                positions[i],
            )
        })
        .collect();
    Trajectory::new(poses)
}

/// A single draw: random endpoint pair, shortest path, smoothing, length and
/// collision filters.
pub fn sample_route_attempt(
    points: &WalkablePointSet,
    graph: &PathGraph,
    boxes: &[Aabb],
    params: &RouteParams,
    rng: &mut impl Rng,
) -> std::result::Result<Route, RejectReason> {
    let n = graph.nodes.len();
    let a = rng.random_range(0..n);
    let mut b = rng.random_range(0..n - 1);
    if b >= a {
        b += 1;
    }
    let raw = shortest_path(graph, a, b, points.plane_height).map_err(|_| RejectReason::Disconnected)?;
    let lifted = PolylinePath {
        waypoints: raw
            .waypoints
            .iter()
            .map(|p| p - Vec3::new(0.0, params.camera_height, 0.0))
            .collect(),
    };
    let smoothed = laplacian_smooth(&lifted, params.lambda, params.iters);
    let length = smoothed.length();
    if length < params.min_len {
        return Err(RejectReason::TooShort);
    }
    if check_collision(&smoothed, boxes, params.step, params.margin).is_some() {
        return Err(RejectReason::Collision);
    }
    let trajectory = path_to_trajectory(&smoothed, params.frames).map_err(|_| RejectReason::TooShort)?;
    Ok(Route {
        trajectory,
        raw,
        smoothed,
        length,
        endpoints: (a, b),
        attempts: 0,
    })
}

/// Rejection-samples a route; deterministic given `params.seed`.
pub fn sample_route(
    points: &WalkablePointSet,
    boxes: &[Aabb],
    params: &RouteParams,
) -> Result<std::result::Result<Route, RouteRejection>> {
    let tri = delaunay_triangulate(points)?;
    let graph = build_path_graph(&tri, &points.points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok(sample_route_in_graph(points, &graph, boxes, params, &mut rng))
}

/// Like [`sample_route`] over a prebuilt graph with a caller-owned RNG.
pub fn sample_route_in_graph(
    points: &WalkablePointSet,
    graph: &PathGraph,
    boxes: &[Aabb],
    params: &RouteParams,
    rng: &mut impl Rng,
) -> std::result::Result<Route, RouteRejection> {
    let mut rejection = RouteRejection::default();
    for attempt in 1..=params.max_attempts {
        rejection.attempts = attempt;
        match sample_route_attempt(points, graph, boxes, params, rng) {
            Ok(mut route) => {
                route.attempts = attempt;
                return Ok(route);
            }
            Err(RejectReason::TooShort) => rejection.too_short += 1,
            Err(RejectReason::Collision) => rejection.collision += 1,
            Err(RejectReason::Disconnected) => rejection.disconnected += 1,
        }
    }
    Err(rejection)
}
