//! K-chain connectivity outside balls, ends profiles and component threads.
//!
//! Two engines compute the same partitions. [`WindowEngine`] enumerates a
//! ball around the basepoint and runs union-find over K-hops. [`TreeEngine`]
//! works on rooted trees without enumerating anything: outside `B(ξ; r)` two
//! nodes are K-connected iff they share their ancestor at depth
//! `max(r + 1 − ⌊K/2⌋, 0)`.
//!
//! Classes are named by the least point (in [`Point`] order) among their
//! points nearest the basepoint, which does not depend on the window.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::{BoundedRegion, Dist, Window};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::spaces::{ball, Limits, SpaceDescriptor, TreeView};

/// Union-find with path halving and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    pub fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] as usize != x {
            let p = self.parent[x] as usize;
            self.parent[x] = self.parent[p];
            x = self.parent[x] as usize;
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        true
    }
}

/// A finite sequence of points with consecutive distances at most `k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chain {
    pub k: Dist,
    pub points: Vec<Point>,
}

impl Chain {
    pub fn reversed(&self) -> Chain {
        let mut points = self.points.clone();
        points.reverse();
        Chain { k: self.k, points }
    }

    /// Checks the chain against the space metric: canonical points, steps
    /// at most `k`, every point outside `B(basepoint; r)`.
    pub fn check(&self, space: &SpaceDescriptor, r: u64, limits: &Limits) -> std::result::Result<(), String> {
        if self.points.is_empty() {
            return Err("empty chain".into());
        }
        for p in &self.points {
            if !space.is_valid(p) {
                return Err(format!("{p} is not a canonical point"));
            }
            let d = space.depth(p, limits).map_err(|e| e.to_string())?;
            if d <= r {
                return Err(format!("{p} lies inside B(ξ; {r})"));
            }
        }
        for w in self.points.windows(2) {
            if !space.within(&w[0], &w[1], self.k, limits).map_err(|e| e.to_string())? {
                return Err(format!("step {} → {} is longer than {}", w[0], w[1], self.k));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ComponentClass {
    pub id: Point,
    pub live: bool,
    pub members: Vec<Point>,
}

/// The K-components of `window ∖ forbidden`.
#[derive(Clone, Debug)]
pub struct ComponentPartition {
    pub forbidden: BoundedRegion,
    pub k: Dist,
    pub horizon: u64,
    pub classes: Vec<ComponentClass>,
    label: Vec<Option<u32>>,
}

impl ComponentPartition {
    /// Index into `classes` of the class holding window point `i`.
    pub fn class_of_index(&self, i: usize) -> Option<usize> {
        self.label.get(i).copied().flatten().map(|c| c as usize)
    }

    pub fn live_count(&self) -> usize {
        self.classes.iter().filter(|c| c.live).count()
    }
}

/// K-neighbour lists inside a window, computed with one reusable BFS buffer
/// per thread.
fn k_neighbours(w: &Window, k: Dist) -> Vec<Vec<u32>> {
    if k == 1 {
        return (0..w.len())
            .map(|i| w.neighbours(i).iter().filter(|e| e.1 <= 1).map(|e| e.0 as u32).collect())
            .collect();
    }
    (0..w.len())
        .into_par_iter()
        .map(|i| {
            w.within(i, k)
                .into_iter()
                .filter(|&(j, _)| j != i)
                .map(|(j, _)| j as u32)
                .collect()
        })
        .collect()
}

/// Labels window points outside `B(origin; r)` by class, classes ordered by
/// their ids. Returns labels, ids and live flags.
fn label_classes(w: &Window, knbr: &[Vec<u32>], r: u64) -> (Vec<Option<u32>>, Vec<Point>, Vec<bool>) {
    let n = w.len();
    let mut sets = DisjointSets::new(n);
    for i in 0..n {
        if w.depth(i) <= r {
            continue;
        }
        for &j in &knbr[i] {
            let j = j as usize;
            if j > i && w.depth(j) > r {
                sets.union(i, j);
            }
        }
    }
    // representative per root: (min depth, least point)
    let mut best: HashMap<usize, usize> = HashMap::new();
    let mut live_root: HashMap<usize, bool> = HashMap::new();
    for i in 0..n {
        if w.depth(i) <= r {
            continue;
        }
        let root = sets.find(i);
        let entry = best.entry(root).or_insert(i);
        let cur = *entry;
        if (w.depth(i), w.point(i)) < (w.depth(cur), w.point(cur)) {
            *entry = i;
        }
        *live_root.entry(root).or_insert(false) |= w.depth(i) == w.horizon();
    }
    let mut roots: Vec<(usize, usize)> = best.into_iter().collect();
    roots.sort_by(|a, b| w.point(a.1).cmp(w.point(b.1)));
    let order: HashMap<usize, u32> = roots.iter().enumerate().map(|(c, &(root, _))| (root, c as u32)).collect();
    let ids = roots.iter().map(|&(_, i)| w.point(i).clone()).collect();
    let live = roots.iter().map(|(root, _)| live_root[root]).collect();
    let labels = (0..n)
        .map(|i| (w.depth(i) > r).then(|| order[&sets.find(i)]))
        .collect();
    (labels, ids, live)
}

/// Union-find partition of `w ∖ forbidden` under `d(x, y) ≤ k`, where `d` is
/// the window metric (hops may pass through the forbidden ball).
pub fn k_components(w: &Window, forbidden: &BoundedRegion, k: Dist) -> Result<ComponentPartition> {
    if &forbidden.center != w.origin_point() {
        return Err(Error::input("forbidden ball must be centred at the window origin"));
    }
    if w.horizon() <= forbidden.radius {
        return Err(Error::EmptyDomain(format!(
            "horizon {} does not reach beyond radius {}",
            w.horizon(),
            forbidden.radius
        )));
    }
    let knbr = k_neighbours(w, k);
    let (label, ids, live) = label_classes(w, &knbr, forbidden.radius);
    let mut members: Vec<Vec<Point>> = vec![Vec::new(); ids.len()];
    for (i, l) in label.iter().enumerate() {
        if let Some(c) = l {
            members[*c as usize].push(w.point(i).clone());
        }
    }
    let classes = ids
        .into_iter()
        .zip(live)
        .zip(members)
        .map(|((id, live), mut members)| {
            members.sort();
            ComponentClass { id, live, members }
        })
        .collect();
    Ok(ComponentPartition {
        forbidden: forbidden.clone(),
        k,
        horizon: w.horizon(),
        classes,
        label,
    })
}

fn bfs_chain(w: &Window, knbr: &[Vec<u32>], r: u64, x: usize, y: usize) -> Option<Vec<usize>> {
    let mut prev: HashMap<usize, usize> = HashMap::from([(x, x)]);
    let mut queue = VecDeque::from([x]);
    while let Some(u) = queue.pop_front() {
        if u == y {
            let mut path = vec![y];
            let mut cur = y;
            while cur != x {
                cur = prev[&cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        for &v in &knbr[u] {
            let v = v as usize;
            if w.depth(v) > r && !prev.contains_key(&v) {
                prev.insert(v, u);
                queue.push_back(v);
            }
        }
    }
    None
}

/// A shortest K-hop chain from `x` to `y` avoiding the forbidden ball, or
/// `None` when they lie in different K-components.
pub fn chain_between(w: &Window, x: &Point, y: &Point, k: Dist, forbidden: &BoundedRegion) -> Result<Option<Chain>> {
    if &forbidden.center != w.origin_point() {
        return Err(Error::input("forbidden ball must be centred at the window origin"));
    }
    let find = |p: &Point| {
        w.index_of(p)
            .ok_or_else(|| Error::input(format!("point {p} is not in the window")))
    };
    let (xi, yi) = (find(x)?, find(y)?);
    for (p, i) in [(x, xi), (y, yi)] {
        if w.depth(i) <= forbidden.radius {
            return Err(Error::input(format!("{p} lies inside the forbidden ball")));
        }
    }
    let knbr: Vec<Vec<u32>> = (0..w.len())
        .map(|i| w.within(i, k).into_iter().filter(|e| e.0 != i).map(|e| e.0 as u32).collect())
        .collect();
    Ok(bfs_chain(w, &knbr, forbidden.radius, xi, yi).map(|path| Chain {
        k,
        points: path.into_iter().map(|i| w.point(i).clone()).collect(),
    }))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineChoice {
    /// Tree engine for rooted trees, window engine otherwise.
    #[default]
    Auto,
    Window,
    Tree,
}

/// Partitions on a window around the basepoint, one per radius `0..=r_max`.
pub struct WindowEngine {
    k: Dist,
    window: Window,
    knbr: Vec<Vec<u32>>,
    levels: Vec<(Vec<Option<u32>>, Vec<Point>, Vec<bool>)>,
}

impl WindowEngine {
    pub fn new(space: &SpaceDescriptor, k: Dist, horizon: u64, r_max: u64, limits: &Limits) -> Result<Self> {
        if horizon <= r_max {
            return Err(Error::EmptyDomain(format!(
                "horizon {horizon} does not reach beyond radius {r_max}"
            )));
        }
        let window = ball(space, space.basepoint(), horizon, limits)?;
        let knbr = k_neighbours(&window, k);
        let levels = (0..=r_max)
            .into_par_iter()
            .map(|r| label_classes(&window, &knbr, r))
            .collect();
        Ok(WindowEngine { k, window, knbr, levels })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    fn locate(&self, p: &Point, r: u64) -> Result<usize> {
        if r as usize >= self.levels.len() {
            return Err(Error::input(format!("radius {r} is beyond the engine's range")));
        }
        self.window.index_of(p).ok_or_else(|| {
            Error::Inconclusive(format!("{p} lies beyond the window horizon {}", self.window.horizon()))
        })
    }
}

/// Lazy partitions of a rooted tree.
pub struct TreeEngine<'a> {
    k: Dist,
    space: &'a SpaceDescriptor,
    view: TreeView<'a>,
}

impl<'a> TreeEngine<'a> {
    pub fn new(space: &'a SpaceDescriptor, k: Dist) -> Result<Self> {
        let view = space
            .tree()
            .ok_or_else(|| Error::input("the tree engine needs a tree rooted at its basepoint"))?;
        Ok(TreeEngine { k, space, view })
    }

    /// Depth of the ancestor that names the class at radius `r`.
    fn anchor_depth(&self, r: u64) -> u64 {
        (r + 1).saturating_sub(self.k / 2)
    }

    fn children(&self, p: &Point) -> Vec<Point> {
        let d = self.view.depth(p);
        let mut out: Vec<Point> = self
            .space
            .neighbours(p)
            .into_iter()
            .filter(|q| self.view.depth(q) == d + 1)
            .collect();
        out.sort();
        out
    }

    /// Least descendant of `a` at depth `target`.
    fn least_descendant(&self, a: &Point, target: u64) -> Option<Point> {
        if self.view.depth(a) == target {
            return Some(a.clone());
        }
        self.children(a).iter().find_map(|c| self.least_descendant(c, target))
    }

    fn key(&self, anchor: &Point, r: u64) -> Option<Point> {
        self.least_descendant(anchor, r + 1)
    }

    /// Nodes at depth `d`, sorted. Errors when more than `cap` are needed.
    fn level(&self, d: u64, cap: usize) -> Result<Vec<Point>> {
        let mut nodes = vec![self.space.basepoint().clone()];
        for _ in 0..d {
            let mut next = Vec::new();
            for p in &nodes {
                next.extend(self.children(p));
                if next.len() > cap {
                    return Err(Error::resource(cap, format!("enumerating tree nodes at depth {d}")));
                }
            }
            next.sort();
            nodes = next;
        }
        Ok(nodes)
    }
}

/// Either engine, behind one interface.
pub enum ComponentEngine<'a> {
    Window(WindowEngine),
    Tree(TreeEngine<'a>),
}

impl<'a> ComponentEngine<'a> {
    /// Builds an engine valid for radii `0..=r_max`. `horizon` only matters
    /// for the window engine.
    pub fn new(
        space: &'a SpaceDescriptor,
        k: Dist,
        horizon: u64,
        r_max: u64,
        choice: EngineChoice,
        limits: &Limits,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::input("K must be at least 1"));
        }
        let tree = space.tree().is_some();
        match choice {
            EngineChoice::Tree | EngineChoice::Auto if tree => Ok(ComponentEngine::Tree(TreeEngine::new(space, k)?)),
            EngineChoice::Tree => Err(Error::input("the tree engine needs a tree rooted at its basepoint")),
            _ => Ok(ComponentEngine::Window(WindowEngine::new(space, k, horizon, r_max, limits)?)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ComponentEngine::Window(_) => "window",
            ComponentEngine::Tree(_) => "tree",
        }
    }

    pub fn k(&self) -> Dist {
        match self {
            ComponentEngine::Window(e) => e.k,
            ComponentEngine::Tree(e) => e.k,
        }
    }

    /// Id of the class of `p` outside `B(ξ; r)`; `None` when `p` is inside.
    pub fn class_of(&self, p: &Point, r: u64) -> Result<Option<Point>> {
        match self {
            ComponentEngine::Window(e) => {
                let i = e.locate(p, r)?;
                let (labels, ids, _) = &e.levels[r as usize];
                Ok(labels[i].map(|c| ids[c as usize].clone()))
            }
            ComponentEngine::Tree(e) => {
                let d = e.view.depth(p);
                if d <= r {
                    return Ok(None);
                }
                let anchor = e.view.ancestor(p, e.anchor_depth(r));
                Ok(e.key(&anchor, r))
            }
        }
    }

    /// Whether the class of `p` at radius `r` is live.
    pub fn is_live(&self, p: &Point, r: u64) -> Result<bool> {
        match self {
            ComponentEngine::Window(e) => {
                let i = e.locate(p, r)?;
                let (labels, _, live) = &e.levels[r as usize];
                Ok(labels[i].is_some_and(|c| live[c as usize]))
            }
            ComponentEngine::Tree(e) => {
                let anchor = e.view.ancestor(p, e.anchor_depth(r).min(e.view.depth(p)));
                Ok(e.view.depth(p) > r && e.view.has_infinite_subtree(&anchor))
            }
        }
    }

    /// A K-chain from `x` to `y` outside `B(ξ; r)`, if they share a class.
    pub fn chain(&self, x: &Point, y: &Point, r: u64) -> Result<Option<Chain>> {
        let k = self.k();
        match self {
            ComponentEngine::Window(e) => {
                let (xi, yi) = (e.locate(x, r)?, e.locate(y, r)?);
                for (p, i) in [(x, xi), (y, yi)] {
                    if e.window.depth(i) <= r {
                        return Err(Error::input(format!("{p} lies inside B(ξ; {r})")));
                    }
                }
                Ok(bfs_chain(&e.window, &e.knbr, r, xi, yi).map(|path| Chain {
                    k,
                    points: path.into_iter().map(|i| e.window.point(i).clone()).collect(),
                }))
            }
            ComponentEngine::Tree(e) => {
                let (dx, dy) = (e.view.depth(x), e.view.depth(y));
                for (p, d) in [(x, dx), (y, dy)] {
                    if d <= r {
                        return Err(Error::input(format!("{p} lies inside B(ξ; {r})")));
                    }
                }
                let l = e.view.lca_depth(x, y);
                if l < e.anchor_depth(r) {
                    return Ok(None);
                }
                let points = if l > r {
                    e.view.geodesic(x, y)
                } else {
                    let mut up: Vec<Point> = (r + 1..=dx).rev().map(|d| e.view.ancestor(x, d)).collect();
                    up.extend((r + 1..=dy).map(|d| e.view.ancestor(y, d)));
                    up
                };
                Ok(Some(Chain { k, points }))
            }
        }
    }

    /// Class ids of `p` at radii `0..=r_max` when its class at `r_max` is
    /// live: the thread through `p`, found without enumerating the system.
    pub fn thread_of(&self, p: &Point, r_max: u64) -> Result<Option<Vec<Point>>> {
        if !self.is_live(p, r_max)? {
            return Ok(None);
        }
        (0..=r_max)
            .map(|r| {
                self.class_of(p, r)?
                    .ok_or_else(|| Error::input(format!("{p} is inside B(ξ; {r})")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// All classes at radius `r` with their live flags.
    fn classes_at(&self, r: u64, cap: usize) -> Result<Vec<(Point, bool)>> {
        match self {
            ComponentEngine::Window(e) => {
                let (_, ids, live) = &e.levels[r as usize];
                Ok(ids.iter().cloned().zip(live.iter().copied()).collect())
            }
            ComponentEngine::Tree(e) => {
                let anchors = e.level(e.anchor_depth(r), cap)?;
                let mut out: Vec<(Point, bool)> = anchors
                    .iter()
                    .filter_map(|a| e.key(a, r).map(|id| (id, e.view.has_infinite_subtree(a))))
                    .collect();
                out.sort();
                Ok(out)
            }
        }
    }
}

/// Cardinality proxy read off a sequence of live counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Classification {
    Finite(usize),
    CountableGrowth,
    UncountableGrowth,
    Inconclusive,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Classification::Finite(n) => write!(f, "finite({n})"),
            Classification::CountableGrowth => f.write_str("countable-growth"),
            Classification::UncountableGrowth => f.write_str("uncountable-growth"),
            Classification::Inconclusive => f.write_str("inconclusive"),
        }
    }
}

impl Serialize for Classification {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Minimum per-radius growth factor, over the last half of the counts, read
/// as geometric growth.
pub const GEOMETRIC_RATIO: f64 = 1.5;

/// Constant over the last `⌈n/2⌉` counts → finite; geometric mean growth
/// factor at least [`GEOMETRIC_RATIO`] over that stretch → uncountable-growth;
/// non-decreasing and growing → countable-growth.
pub fn classify(counts: &[usize]) -> Classification {
    if counts.is_empty() {
        return Classification::Inconclusive;
    }
    let half = counts.len().div_ceil(2);
    let tail = &counts[counts.len() - half..];
    if tail.iter().all(|&c| c == tail[0]) {
        return Classification::Finite(tail[0]);
    }
    let non_decreasing = tail.windows(2).all(|w| w[0] <= w[1]);
    if !non_decreasing || tail[0] == 0 {
        return Classification::Inconclusive;
    }
    let steps = (tail.len() - 1) as f64;
    let ratio = (*tail.last().unwrap() as f64 / tail[0] as f64).powf(1.0 / steps);
    if ratio >= GEOMETRIC_RATIO {
        Classification::UncountableGrowth
    } else {
        Classification::CountableGrowth
    }
}

/// Default horizon margin beyond `r_max`.
pub fn default_margin(k: Dist) -> u64 {
    2 * k + 4
}

#[derive(Clone, Debug, Serialize)]
pub struct EndProfile {
    pub k: Dist,
    pub r_max: u64,
    pub horizon: u64,
    pub engine: &'static str,
    /// Live-class counts for `r = 1..=r_max`.
    pub counts: Vec<usize>,
    #[serde(rename = "class")]
    pub classification: Classification,
}

impl EndProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,count,classification\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, c, self.classification));
        }
        out
    }
}

/// Live-component counts of `X ∖ B(ξ; r)` for `r = 1..=r_max`.
pub fn end_profile(
    space: &SpaceDescriptor,
    k: Dist,
    r_max: u64,
    margin: u64,
    choice: EngineChoice,
    limits: &Limits,
) -> Result<EndProfile> {
    if r_max == 0 {
        return Err(Error::input("r_max must be at least 1"));
    }
    let horizon = r_max + margin.max(1);
    let engine = ComponentEngine::new(space, k, horizon, r_max, choice, limits)?;
    let counts = (1..=r_max)
        .map(|r| Ok(engine.classes_at(r, limits.point_cap)?.iter().filter(|c| c.1).count()))
        .collect::<Result<Vec<_>>>()?;
    Ok(EndProfile {
        k,
        r_max,
        horizon,
        engine: engine.name(),
        classification: classify(&counts),
        counts,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ThreadClass {
    pub id: Point,
    pub live: bool,
    /// Index of the containing class one radius down.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Level {
    pub r: u64,
    pub classes: Vec<ThreadClass>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Thread {
    /// Class ids at radii `0..=r_max`.
    pub path: Vec<Point>,
}

/// The inverse system of K-components outside `B(ξ; r)`, `r = 0..=r_max`.
#[derive(Clone, Debug, Serialize)]
pub struct ThreadSystem {
    pub k: Dist,
    pub r_max: u64,
    pub horizon: u64,
    pub engine: &'static str,
    pub levels: Vec<Level>,
    pub threads: Vec<Thread>,
}

impl ThreadSystem {
    pub fn thread_count(&self) -> usize {
        self.threads.len()
    }

    /// Index of the thread whose last class has this id.
    pub fn thread_index(&self, class_id: &Point) -> Option<usize> {
        self.threads
            .binary_search_by(|t| t.path.last().unwrap().cmp(class_id))
            .ok()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,class,live,parent\n");
        for level in &self.levels {
            for c in &level.classes {
                let parent = match (c.parent, level.r) {
                    (Some(p), r) if r > 0 => self.levels[r as usize - 1].classes[p].id.to_string(),
                    _ => String::new(),
                };
                out.push_str(&format!("{},{},{},{}\n", level.r, csv_field(&c.id.to_string()), c.live, csv_field(&parent)));
            }
        }
        out
    }

    /// The refinement forest of live classes.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph threads {\n  rankdir=LR;\n");
        for level in &self.levels {
            for c in level.classes.iter().filter(|c| c.live) {
                out.push_str(&format!("  \"{}:{}\" [label=\"{}\"];\n", level.r, c.id, c.id));
                if let (Some(p), true) = (c.parent, level.r > 0) {
                    let parent = &self.levels[level.r as usize - 1].classes[p];
                    out.push_str(&format!("  \"{}:{}\" -> \"{}:{}\";\n", level.r - 1, parent.id, level.r, c.id));
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Builds the thread system from an existing engine.
pub fn threads_from_engine(engine: &ComponentEngine<'_>, r_max: u64, horizon: u64, limits: &Limits) -> Result<ThreadSystem> {
    let mut levels: Vec<Level> = Vec::with_capacity(r_max as usize + 1);
    for r in 0..=r_max {
        let classes = engine.classes_at(r, limits.point_cap)?;
        let mut out = Vec::with_capacity(classes.len());
        for (id, live) in classes {
            let parent = if r == 0 {
                None
            } else {
                let pid = engine
                    .class_of(&id, r - 1)?
                    .ok_or_else(|| Error::input(format!("class {id} has no parent at radius {}", r - 1)))?;
                let prev = &levels[r as usize - 1].classes;
                Some(prev.binary_search_by(|c| c.id.cmp(&pid)).map_err(|_| {
                    Error::input(format!("parent {pid} of {id} is missing at radius {}", r - 1))
                })?)
            };
            out.push(ThreadClass { id, live, parent });
        }
        levels.push(Level { r, classes: out });
    }
    let last = levels.last().expect("at least one level");
    let threads = last
        .classes
        .iter()
        .filter(|c| c.live)
        .map(|c| {
            let mut path = vec![c.id.clone()];
            let mut cur = c.parent;
            for r in (0..r_max).rev() {
                let idx = cur.expect("parent below the top level");
                let class = &levels[r as usize].classes[idx];
                path.push(class.id.clone());
                cur = class.parent;
            }
            path.reverse();
            Thread { path }
        })
        .collect();
    Ok(ThreadSystem {
        k: engine.k(),
        r_max,
        horizon,
        engine: engine.name(),
        levels,
        threads,
    })
}

/// The thread system up to `r_max`, window horizon `r_max + margin`.
pub fn component_threads(
    space: &SpaceDescriptor,
    k: Dist,
    r_max: u64,
    margin: u64,
    choice: EngineChoice,
    limits: &Limits,
) -> Result<ThreadSystem> {
    let horizon = r_max + margin.max(1);
    let engine = ComponentEngine::new(space, k, horizon, r_max, choice, limits)?;
    threads_from_engine(&engine, r_max, horizon, limits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_sets_merge() {
        let mut d = DisjointSets::new(5);
        assert!(d.union(0, 1));
        assert!(d.union(3, 4));
        assert!(!d.union(1, 0));
        assert_eq!(d.find(0), d.find(1));
        assert_ne!(d.find(1), d.find(3));
        d.union(1, 4);
        assert_eq!(d.find(0), d.find(3));
    }

    #[test]
    fn classification_rules() {
        assert_eq!(classify(&[2, 2, 2, 2]), Classification::Finite(2));
        assert_eq!(classify(&[1, 3, 3, 3]), Classification::Finite(3));
        assert_eq!(classify(&[3, 4, 5, 6, 7, 8]), Classification::CountableGrowth);
        assert_eq!(classify(&[4, 8, 16, 32]), Classification::UncountableGrowth);
        assert_eq!(classify(&[5, 4, 3, 2]), Classification::Inconclusive);
        assert_eq!(classify(&[]), Classification::Inconclusive);
        assert_eq!(Classification::Finite(2).to_string(), "finite(2)");
    }

    #[test]
    fn tree_anchor_depth_shrinks_with_k() {
        let z = SpaceDescriptor::integer_line();
        let e = TreeEngine::new(&z, 5).unwrap();
        assert_eq!(e.anchor_depth(0), 0);
        assert_eq!(e.anchor_depth(4), 3);
    }

    #[test]
    fn tree_chain_detours_around_the_ball() {
        let f2 = SpaceDescriptor::free_group(2).unwrap();
        let engine = ComponentEngine::new(&f2, 2, 0, 3, EngineChoice::Tree, &Limits::default()).unwrap();
        // aab and aba meet at depth 1 but are 2 apart at depth 2
        let c = engine.chain(&Point::word("aabb"), &Point::word("abaa"), 1).unwrap().unwrap();
        assert_eq!(c.points.first(), Some(&Point::word("aabb")));
        assert_eq!(c.points.last(), Some(&Point::word("abaa")));
        c.check(&f2, 1, &Limits::default()).unwrap();
        assert!(engine.chain(&Point::word("aabb"), &Point::word("bb"), 1).unwrap().is_none());
    }
}
