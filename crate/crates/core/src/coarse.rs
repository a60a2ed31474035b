//! The bounded coarse structure of a (generalised) metric space, seen
//! through finite windows.
//!
//! Entourages are distance thresholds `E_K = {(x, y) : d(x, y) ≤ K}`; a set of
//! pairs is controlled iff the supremum of its distances is finite. Explicit
//! pair sets only exist inside a [`Window`].

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::Point;

/// Graph-metric distance; [`INF`] marks points in different components.
pub type Dist = u64;

pub const INF: Dist = Dist::MAX;

/// Renders a distance for reports, with `None` standing for +∞.
pub fn finite(d: Dist) -> Option<Dist> {
    (d != INF).then_some(d)
}

/// A metric entourage, represented by its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Entourage {
    threshold: f64,
}

impl Entourage {
    /// The diagonal Δ_X.
    pub const DIAGONAL: Entourage = Entourage { threshold: 0.0 };

    pub fn new(threshold: f64) -> Result<Self> {
        if threshold.is_nan() || threshold < 0.0 {
            return Err(Error::input(format!(
                "entourage threshold must be non-negative, got {threshold}"
            )));
        }
        Ok(Entourage { threshold })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Only finite thresholds belong to the bounded coarse structure.
    pub fn is_controlled(&self) -> bool {
        self.threshold.is_finite()
    }

    pub fn contains(&self, d: Dist) -> bool {
        d != INF && (d as f64) <= self.threshold
    }

    /// `E ∘ F`. The threshold sum contains the set composition by the
    /// triangle inequality; on geodesic spaces the two coincide.
    pub fn compose(&self, other: &Entourage) -> Entourage {
        Entourage {
            threshold: self.threshold + other.threshold,
        }
    }

    /// `E⁻¹`; metric entourages are symmetric.
    pub fn inverse(&self) -> Entourage {
        *self
    }
}

/// The closed ball `B(center; radius)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundedRegion {
    pub center: Point,
    pub radius: u64,
}

impl BoundedRegion {
    pub fn new(center: Point, radius: u64) -> Self {
        BoundedRegion { center, radius }
    }

    /// Membership given the distance from the center.
    pub fn contains_depth(&self, depth: Dist) -> bool {
        depth != INF && depth <= self.radius
    }
}

/// A finite excerpt of a space: the points within `horizon` of `origin`,
/// with the edges among them. Distances are shortest paths inside the window.
#[derive(Clone, Debug)]
pub struct Window {
    points: Vec<Point>,
    index: HashMap<Point, usize>,
    adj: Vec<Vec<(usize, Dist)>>,
    depth: Vec<Dist>,
    origin: usize,
    horizon: u64,
    unit: bool,
}

impl Window {
    /// Builds a window from an edge list. Weights must be positive.
    pub fn from_edges(
        points: Vec<Point>,
        edges: &[(usize, usize, Dist)],
        origin: usize,
        horizon: u64,
    ) -> Result<Self> {
        let n = points.len();
        if origin >= n {
            return Err(Error::input("window origin is not one of its points"));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, p) in points.iter().enumerate() {
            if index.insert(p.clone(), i).is_some() {
                return Err(Error::input(format!("duplicate window point {p}")));
            }
        }
        let mut adj = vec![Vec::new(); n];
        let mut unit = true;
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::input("window edge refers to a missing point"));
            }
            if w == 0 || w == INF {
                return Err(Error::input("window edge weights must be positive and finite"));
            }
            if a == b {
                continue;
            }
            unit &= w == 1;
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup_by_key(|e| e.0);
        }
        let mut window = Window {
            points,
            index,
            adj,
            depth: Vec::new(),
            origin,
            horizon,
            unit,
        };
        window.depth = window.distances_from(origin, None);
        Ok(window)
    }

    pub(crate) fn from_adjacency(
        points: Vec<Point>,
        index: HashMap<Point, usize>,
        adj: Vec<Vec<(usize, Dist)>>,
        depth: Vec<Dist>,
        origin: usize,
        horizon: u64,
    ) -> Self {
        Window {
            points,
            index,
            adj,
            depth,
            origin,
            horizon,
            unit: true,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    pub fn index_of(&self, p: &Point) -> Option<usize> {
        self.index.get(p).copied()
    }

    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn origin_point(&self) -> &Point {
        &self.points[self.origin]
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Distance from the origin.
    pub fn depth(&self, i: usize) -> Dist {
        self.depth[i]
    }

    pub fn neighbours(&self, i: usize) -> &[(usize, Dist)] {
        &self.adj[i]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Dist)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().filter(move |e| a < e.0).map(move |&(b, w)| (a, b, w)))
    }

    /// Single-source distances, optionally cut off beyond `limit`.
    /// Unreached points get [`INF`].
    pub fn distances_from(&self, src: usize, limit: Option<Dist>) -> Vec<Dist> {
        let mut dist = vec![INF; self.len()];
        for (j, d) in self.within(src, limit.unwrap_or(INF - 1)) {
            dist[j] = d;
        }
        dist
    }

    /// Points at distance ≤ `k` from `src`, with their distances.
    pub fn within(&self, src: usize, k: Dist) -> Vec<(usize, Dist)> {
        let mut seen: HashMap<usize, Dist> = HashMap::new();
        let mut out = Vec::new();
        seen.insert(src, 0);
        if self.unit {
            let mut queue = VecDeque::from([src]);
            while let Some(u) = queue.pop_front() {
                let du = seen[&u];
                out.push((u, du));
                if du >= k {
                    continue;
                }
                for &(v, _) in &self.adj[u] {
                    if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(v) {
                        e.insert(du + 1);
                        queue.push_back(v);
                    }
                }
            }
        } else {
            let mut heap = BinaryHeap::from([Reverse((0, src))]);
            let mut done = BTreeSet::new();
            while let Some(Reverse((du, u))) = heap.pop() {
                if !done.insert(u) {
                    continue;
                }
                out.push((u, du));
                for &(v, w) in &self.adj[u] {
                    let dv = du.saturating_add(w);
                    if dv <= k && seen.get(&v).is_none_or(|&old| dv < old) {
                        seen.insert(v, dv);
                        heap.push(Reverse((dv, v)));
                    }
                }
            }
        }
        out
    }

    pub fn dist(&self, a: usize, b: usize) -> Dist {
        if a == b {
            return 0;
        }
        self.distances_from(a, None)[b]
    }

    /// All-pairs table; quadratic, meant for small windows.
    pub fn distance_table(&self) -> Vec<Vec<Dist>> {
        (0..self.len()).map(|i| self.distances_from(i, None)).collect()
    }

    /// Points at exactly the horizon distance from the origin.
    pub fn frontier(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.depth[i] == self.horizon)
    }

    fn resolve(&self, p: &Point) -> Result<usize> {
        self.index_of(p)
            .ok_or_else(|| Error::input(format!("point {p} is not in the window")))
    }

    /// Whether a set of pairs is controlled, with its distance supremum
    /// (`None` when infinite).
    pub fn is_controlled(&self, pairs: &[(Point, Point)]) -> Result<ControlReport> {
        let mut by_source: HashMap<usize, Vec<usize>> = HashMap::new();
        for (x, y) in pairs {
            by_source.entry(self.resolve(x)?).or_default().push(self.resolve(y)?);
        }
        let mut sup: Dist = 0;
        for (x, ys) in by_source {
            let dist = self.distances_from(x, None);
            for y in ys {
                sup = sup.max(dist[y]);
            }
        }
        Ok(ControlReport {
            controlled: sup != INF,
            sup: finite(sup),
        })
    }

    /// A point set is bounded iff its square is controlled.
    pub fn is_bounded(&self, pts: &[Point]) -> Result<bool> {
        let idx: Vec<usize> = pts.iter().map(|p| self.resolve(p)).collect::<Result<_>>()?;
        for &a in &idx {
            let dist = self.distances_from(a, None);
            if idx.iter().any(|&b| dist[b] == INF) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The explicit pair set of `E_K` inside the window.
    pub fn pairs_within(&self, k: Dist) -> PairSet {
        let mut set = PairSet::new();
        for a in 0..self.len() {
            for (b, _) in self.within(a, k) {
                set.insert((a, b));
            }
        }
        set
    }

    pub fn diagonal(&self) -> PairSet {
        (0..self.len()).map(|i| (i, i)).collect()
    }

    /// Supremum of distances over an index pair set (`INF` if unbounded).
    pub fn sup_of(&self, pairs: &PairSet) -> Dist {
        let mut sup = 0;
        let mut cache: HashMap<usize, Vec<Dist>> = HashMap::new();
        for &(a, b) in pairs {
            let row = cache.entry(a).or_insert_with(|| self.distances_from(a, None));
            sup = sup.max(row[b]);
        }
        sup
    }

    pub fn to_doc(&self) -> WindowDoc {
        WindowDoc {
            origin: self.origin_point().to_string(),
            horizon: self.horizon,
            points: self.points.iter().map(|p| p.to_string()).collect(),
            edges: self
                .edges()
                .map(|(a, b, w)| (self.points[a].to_string(), self.points[b].to_string(), w))
                .collect(),
        }
    }

    /// Rebuilds a window from its document. Points come back as names.
    pub fn from_doc(doc: &WindowDoc) -> Result<Self> {
        let points: Vec<Point> = doc.points.iter().map(|s| Point::Name(s.clone())).collect();
        let lookup: HashMap<&str, usize> =
            doc.points.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let find = |s: &str| {
            lookup
                .get(s)
                .copied()
                .ok_or_else(|| Error::input(format!("window document refers to unknown point {s}")))
        };
        let edges = doc
            .edges
            .iter()
            .map(|(a, b, w)| Ok((find(a)?, find(b)?, *w)))
            .collect::<Result<Vec<_>>>()?;
        Window::from_edges(points, &edges, find(&doc.origin)?, doc.horizon)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ControlReport {
    pub controlled: bool,
    pub sup: Option<Dist>,
}

/// Serialised window: distances are reconstructed by shortest paths.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowDoc {
    pub origin: String,
    pub horizon: u64,
    pub points: Vec<String>,
    pub edges: Vec<(String, String, Dist)>,
}

/// Index pairs inside one window.
pub type PairSet = BTreeSet<(usize, usize)>;

/// Exact set composition `P ∘ Q = {(x, y) : (x, z) ∈ P, (z, y) ∈ Q}`.
pub fn compose_pairs(p: &PairSet, q: &PairSet) -> PairSet {
    let mut from: HashMap<usize, Vec<usize>> = HashMap::new();
    for &(z, y) in q {
        from.entry(z).or_default().push(y);
    }
    let mut out = PairSet::new();
    for &(x, z) in p {
        if let Some(ys) = from.get(&z) {
            out.extend(ys.iter().map(|&y| (x, y)));
        }
    }
    out
}

pub fn invert_pairs(p: &PairSet) -> PairSet {
    p.iter().map(|&(x, y)| (y, x)).collect()
}
