//! Lazily generated, locally finite spaces.
//!
//! A [`SpaceDescriptor`] is an adjacency oracle: given a canonical point it
//! lists the neighbours. Balls and spheres are found by breadth-first search.
//! The metric is the graph (path-length) metric; most kinds also know it in
//! closed form, which is used for long-range distances and as a cross-check.

use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::coarse::{Dist, Window, INF};
use crate::error::{Error, Result};
use crate::point::{parse_lattice, split_mid, Point, EMPTY_WORD};

pub const DEFAULT_POINT_CAP: usize = 1_000_000;
pub const DEFAULT_NEIGHBOUR_CAP: usize = 4096;
/// Environment variable overriding the point cap.
pub const CAP_ENV: &str = "ENDSLAB_CAP";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub point_cap: usize,
    pub neighbour_cap: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            point_cap: DEFAULT_POINT_CAP,
            neighbour_cap: DEFAULT_NEIGHBOUR_CAP,
        }
    }
}

impl Limits {
    /// Defaults, with the point cap taken from `ENDSLAB_CAP` when set.
    pub fn from_env() -> Self {
        let mut limits = Limits::default();
        if let Some(cap) = std::env::var(CAP_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            limits.point_cap = cap;
        }
        limits
    }

    pub fn with_point_cap(mut self, cap: usize) -> Self {
        self.point_cap = cap;
        self
    }
}

/// Which letters may follow which in a finitely branching word tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChildRule {
    roots: Vec<u8>,
    follow: BTreeMap<u8, Vec<u8>>,
}

impl ChildRule {
    pub fn new(roots: Vec<u8>, follow: BTreeMap<u8, Vec<u8>>) -> Self {
        ChildRule { roots, follow }
    }

    fn all(alphabet: &[u8]) -> Self {
        ChildRule {
            roots: alphabet.to_vec(),
            follow: alphabet.iter().map(|&c| (c, alphabet.to_vec())).collect(),
        }
    }

    /// Children of `aⁿ` are `aⁿ⁺¹` and `aⁿb`; children of `aⁿbᵐ` (m ≥ 1) are `aⁿbᵐ⁺¹`.
    fn comb() -> Self {
        ChildRule {
            roots: b"ab".to_vec(),
            follow: BTreeMap::from([(b'a', b"ab".to_vec()), (b'b', b"b".to_vec())]),
        }
    }

    pub fn next(&self, last: Option<u8>) -> &[u8] {
        match last {
            None => &self.roots,
            Some(c) => self.follow.get(&c).map(Vec::as_slice).unwrap_or(&[]),
        }
    }

    fn accepts(&self, word: &[u8]) -> bool {
        let mut last = None;
        for &c in word {
            if !self.next(last).contains(&c) {
                return false;
            }
            last = Some(c);
        }
        true
    }

    /// Letters from which an infinite word continues (greatest fixpoint).
    fn infinite_letters(&self) -> Vec<u8> {
        let mut alive: Vec<u8> = self.follow.keys().copied().collect();
        loop {
            let next: Vec<u8> = alive
                .iter()
                .copied()
                .filter(|c| self.next(Some(*c)).iter().any(|d| alive.contains(d)))
                .collect();
            if next.len() == alive.len() {
                return alive;
            }
            alive = next;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AdjacencyRule {
    /// Cayley graph of ℤᵈ for the given translation set.
    Translations { generators: Vec<Vec<i64>> },
    /// A finite graph listed vertex by vertex.
    Explicit { neighbours: BTreeMap<String, Vec<String>> },
    /// Each edge of the base graph split in two by its midpoint.
    Subdivision { base: Box<SpaceDescriptor> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    IntegerLine,
    IntegerGrid { dim: usize },
    FreeGroup { rank: usize },
    WordTree { alphabet: Vec<u8> },
    CombTree,
    BranchingTree { alphabet: Vec<u8>, rule: ChildRule },
    Custom(AdjacencyRule),
}

/// A pointed, locally finite graph given by an adjacency oracle.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDescriptor", into = "RawDescriptor")]
pub struct SpaceDescriptor {
    kind: SpaceKind,
    basepoint: Point,
    tree_rule: Option<ChildRule>,
}

fn gen_letter(i: usize) -> u8 {
    b'a' + i as u8
}

fn invert_letter(c: u8) -> u8 {
    if c.is_ascii_lowercase() {
        c.to_ascii_uppercase()
    } else {
        c.to_ascii_lowercase()
    }
}

/// Free reduction: cancels adjacent `xX` / `Xx` pairs.
pub fn free_reduce(word: &[u8]) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::with_capacity(word.len());
    for &c in word {
        if out.last() == Some(&invert_letter(c)) {
            out.pop();
        } else {
            out.push(c);
        }
    }
    out
}

pub fn free_inverse(word: &[u8]) -> Vec<u8> {
    word.iter().rev().map(|&c| invert_letter(c)).collect()
}

fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

impl SpaceDescriptor {
    fn build(kind: SpaceKind) -> Result<Self> {
        let tree_rule = match &kind {
            SpaceKind::WordTree { alphabet } => Some(ChildRule::all(alphabet)),
            SpaceKind::CombTree => Some(ChildRule::comb()),
            SpaceKind::BranchingTree { rule, .. } => Some(rule.clone()),
            _ => None,
        };
        let basepoint = match &kind {
            SpaceKind::IntegerLine => Point::int(0),
            SpaceKind::IntegerGrid { dim } => Point::Lattice(vec![0; *dim]),
            SpaceKind::FreeGroup { .. }
            | SpaceKind::WordTree { .. }
            | SpaceKind::CombTree
            | SpaceKind::BranchingTree { .. } => Point::Word(Vec::new()),
            SpaceKind::Custom(AdjacencyRule::Translations { generators }) => {
                Point::Lattice(vec![0; generators[0].len()])
            }
            SpaceKind::Custom(AdjacencyRule::Explicit { neighbours }) => {
                Point::Name(neighbours.keys().next().cloned().unwrap_or_default())
            }
            SpaceKind::Custom(AdjacencyRule::Subdivision { base }) => base.basepoint.clone(),
        };
        Ok(SpaceDescriptor {
            kind,
            basepoint,
            tree_rule,
        })
    }

    pub fn integer_line() -> Self {
        Self::build(SpaceKind::IntegerLine).expect("static kind")
    }

    pub fn integer_grid(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("integer_grid needs dim ≥ 1"));
        }
        Self::build(SpaceKind::IntegerGrid { dim })
    }

    pub fn free_group(rank: usize) -> Result<Self> {
        if rank == 0 || rank > 26 {
            return Err(Error::input("free_group rank must be between 1 and 26"));
        }
        Self::build(SpaceKind::FreeGroup { rank })
    }

    pub fn word_tree(alphabet: &str) -> Result<Self> {
        let alphabet = check_alphabet(alphabet.as_bytes())?;
        Self::build(SpaceKind::WordTree { alphabet })
    }

    pub fn comb_tree() -> Self {
        Self::build(SpaceKind::CombTree).expect("static kind")
    }

    pub fn branching_tree(alphabet: &str, rule: ChildRule) -> Result<Self> {
        let alphabet = check_alphabet(alphabet.as_bytes())?;
        for c in rule.roots.iter().chain(rule.follow.keys()).chain(rule.follow.values().flatten()) {
            if !alphabet.contains(c) {
                return Err(Error::input(format!(
                    "child_rule uses letter '{}' outside the alphabet",
                    *c as char
                )));
            }
        }
        Self::build(SpaceKind::BranchingTree { alphabet, rule })
    }

    pub fn translations(generators: Vec<Vec<i64>>) -> Result<Self> {
        let dim = generators.first().map(Vec::len).unwrap_or(0);
        if dim == 0 || generators.iter().any(|g| g.len() != dim) {
            return Err(Error::input("translations need non-empty generators of one dimension"));
        }
        if generators.iter().any(|g| g.iter().all(|&x| x == 0)) {
            return Err(Error::input("zero translation is not an edge"));
        }
        Self::build(SpaceKind::Custom(AdjacencyRule::Translations { generators }))
    }

    pub fn explicit(neighbours: BTreeMap<String, Vec<String>>) -> Result<Self> {
        if neighbours.is_empty() {
            return Err(Error::input("explicit graph has no vertices"));
        }
        for (v, list) in &neighbours {
            if v.is_empty() || v.contains(['[', ']', '|']) {
                return Err(Error::input(format!("bad vertex name {v:?}")));
            }
            for u in list {
                if !neighbours.contains_key(u) {
                    return Err(Error::input(format!("{v} lists unknown neighbour {u}")));
                }
                if u == v {
                    return Err(Error::input(format!("self-loop at {v}")));
                }
            }
        }
        Self::build(SpaceKind::Custom(AdjacencyRule::Explicit { neighbours }))
    }

    pub fn subdivision(base: SpaceDescriptor) -> Self {
        Self::build(SpaceKind::Custom(AdjacencyRule::Subdivision {
            base: Box::new(base),
        }))
        .expect("subdivision of a valid space")
    }

    pub fn with_basepoint(mut self, p: &str) -> Result<Self> {
        self.basepoint = self.parse_point(p)?;
        Ok(self)
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    pub fn basepoint(&self) -> &Point {
        &self.basepoint
    }

    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            SpaceKind::IntegerLine => "integer_line",
            SpaceKind::IntegerGrid { .. } => "integer_grid",
            SpaceKind::FreeGroup { .. } => "free_group",
            SpaceKind::WordTree { .. } => "word_tree",
            SpaceKind::CombTree => "comb_tree",
            SpaceKind::BranchingTree { .. } => "finitely_branching_tree",
            SpaceKind::Custom(_) => "custom",
        }
    }

    /// Dimension of the lattice the points live in, if any.
    pub fn lattice_dim(&self) -> Option<usize> {
        match &self.kind {
            SpaceKind::IntegerLine => Some(1),
            SpaceKind::IntegerGrid { dim } => Some(*dim),
            SpaceKind::Custom(AdjacencyRule::Translations { generators }) => Some(generators[0].len()),
            _ => None,
        }
    }

    pub fn is_word_space(&self) -> bool {
        matches!(self.kind, SpaceKind::FreeGroup { .. }) || self.tree_rule.is_some()
    }

    pub fn is_free_group(&self) -> bool {
        matches!(self.kind, SpaceKind::FreeGroup { .. })
    }

    /// Parses and validates a canonical point string.
    pub fn parse_point(&self, s: &str) -> Result<Point> {
        let bad = || Error::input(format!("{s:?} is not a canonical point of this {} space", self.kind_name()));
        let p = match &self.kind {
            SpaceKind::Custom(AdjacencyRule::Subdivision { base }) => match split_mid(s) {
                Some((a, b)) => Point::mid(base.parse_point(a)?, base.parse_point(b)?),
                None => base.parse_point(s)?,
            },
            SpaceKind::Custom(AdjacencyRule::Explicit { .. }) => Point::Name(s.to_string()),
            _ if self.is_word_space() => {
                if s.is_empty() || s == EMPTY_WORD {
                    Point::Word(Vec::new())
                } else {
                    Point::Word(s.as_bytes().to_vec())
                }
            }
            _ => Point::Lattice(parse_lattice(s, self.lattice_dim().unwrap_or(0)).ok_or_else(bad)?),
        };
        if !self.is_valid(&p) {
            return Err(bad());
        }
        Ok(p)
    }

    /// Re-reads a point that may have come from JSON as a bare name.
    pub fn canonical(&self, p: &Point) -> Result<Point> {
        match p {
            Point::Name(s) => self.parse_point(s),
            _ if self.is_valid(p) => Ok(p.clone()),
            _ => Err(Error::input(format!("{p} is not a canonical point of this space"))),
        }
    }

    pub fn is_valid(&self, p: &Point) -> bool {
        match (&self.kind, p) {
            (SpaceKind::FreeGroup { rank }, Point::Word(w)) => {
                w.iter().all(|c| {
                    let g = c.to_ascii_lowercase();
                    c.is_ascii_alphabetic() && g >= b'a' && g < gen_letter(*rank)
                }) && free_reduce(w).len() == w.len()
            }
            (_, Point::Word(w)) => self.tree_rule.as_ref().is_some_and(|r| r.accepts(w)),
            (SpaceKind::Custom(AdjacencyRule::Explicit { neighbours }), Point::Name(n)) => {
                neighbours.contains_key(n)
            }
            (SpaceKind::Custom(AdjacencyRule::Subdivision { base }), Point::Mid(a, b)) => {
                a < b && base.is_valid(a) && base.is_valid(b) && base.neighbours(a).contains(b)
            }
            (SpaceKind::Custom(AdjacencyRule::Subdivision { base }), q) => base.is_valid(q),
            (_, Point::Lattice(v)) => self.lattice_dim() == Some(v.len()),
            _ => false,
        }
    }

    /// Neighbours of a valid point, in a fixed order.
    pub fn neighbours(&self, p: &Point) -> Vec<Point> {
        match (&self.kind, p) {
            (SpaceKind::IntegerLine | SpaceKind::IntegerGrid { .. }, Point::Lattice(v)) => {
                let mut out = Vec::with_capacity(2 * v.len());
                for i in 0..v.len() {
                    for delta in [1, -1] {
                        let mut q = v.clone();
                        q[i] += delta;
                        out.push(Point::Lattice(q));
                    }
                }
                out
            }
            (SpaceKind::Custom(AdjacencyRule::Translations { generators }), Point::Lattice(v)) => generators
                .iter()
                .map(|g| Point::Lattice(v.iter().zip(g).map(|(a, b)| a + b).collect()))
                .collect(),
            (SpaceKind::FreeGroup { rank }, Point::Word(w)) => {
                let mut out = Vec::with_capacity(2 * rank);
                for i in 0..*rank {
                    let g = gen_letter(i);
                    for c in [g, invert_letter(g)] {
                        let mut q = w.clone();
                        if q.last() == Some(&invert_letter(c)) {
                            q.pop();
                        } else {
                            q.push(c);
                        }
                        out.push(Point::Word(q));
                    }
                }
                out
            }
            (_, Point::Word(w)) => {
                let rule = self.tree_rule.as_ref().expect("word point in a tree space");
                let mut out = Vec::new();
                if !w.is_empty() {
                    out.push(Point::Word(w[..w.len() - 1].to_vec()));
                }
                for &c in rule.next(w.last().copied()) {
                    let mut q = w.clone();
                    q.push(c);
                    out.push(Point::Word(q));
                }
                out
            }
            (SpaceKind::Custom(AdjacencyRule::Explicit { neighbours }), Point::Name(n)) => neighbours
                .get(n)
                .map(|l| l.iter().map(|s| Point::Name(s.clone())).collect())
                .unwrap_or_default(),
            (SpaceKind::Custom(AdjacencyRule::Subdivision { .. }), Point::Mid(a, b)) => {
                vec![(**a).clone(), (**b).clone()]
            }
            (SpaceKind::Custom(AdjacencyRule::Subdivision { base }), v) => base
                .neighbours(v)
                .into_iter()
                .map(|u| Point::mid(u, v.clone()))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Graph distance. Closed form where the kind has one, otherwise a
    /// breadth-first search bounded by the point cap.
    pub fn distance(&self, a: &Point, b: &Point, limits: &Limits) -> Result<Dist> {
        if a == b {
            return Ok(0);
        }
        match (&self.kind, a, b) {
            (SpaceKind::IntegerLine | SpaceKind::IntegerGrid { .. }, Point::Lattice(x), Point::Lattice(y)) => {
                Ok(x.iter().zip(y).map(|(p, q)| p.abs_diff(*q)).sum())
            }
            (SpaceKind::FreeGroup { .. }, Point::Word(x), Point::Word(y)) => {
                let mut w = free_inverse(x);
                w.extend_from_slice(y);
                Ok(free_reduce(&w).len() as Dist)
            }
            (_, Point::Word(x), Point::Word(y)) => {
                let c = common_prefix(x, y);
                Ok((x.len() + y.len() - 2 * c) as Dist)
            }
            (SpaceKind::Custom(AdjacencyRule::Subdivision { base }), _, _) => subdivision_distance(base, a, b, limits),
            _ => self.bfs_distance(a, b, None, limits),
        }
    }

    /// Whether `d(a, b) ≤ k`; searches only to depth `k` when there is no
    /// closed form.
    pub fn within(&self, a: &Point, b: &Point, k: Dist, limits: &Limits) -> Result<bool> {
        match &self.kind {
            SpaceKind::Custom(AdjacencyRule::Translations { .. } | AdjacencyRule::Explicit { .. }) => {
                Ok(self.bfs_distance(a, b, Some(k), limits)? <= k)
            }
            _ => Ok(self.distance(a, b, limits)? <= k),
        }
    }

    pub fn depth(&self, p: &Point, limits: &Limits) -> Result<Dist> {
        self.distance(&self.basepoint, p, limits)
    }

    fn bfs_distance(&self, a: &Point, b: &Point, bound: Option<Dist>, limits: &Limits) -> Result<Dist> {
        let mut seen: HashMap<Point, Dist> = HashMap::from([(a.clone(), 0)]);
        let mut queue = VecDeque::from([a.clone()]);
        while let Some(p) = queue.pop_front() {
            let d = seen[&p];
            if bound.is_some_and(|k| d >= k) {
                continue;
            }
            for q in self.neighbours(&p) {
                if seen.contains_key(&q) {
                    continue;
                }
                if &q == b {
                    return Ok(d + 1);
                }
                seen.insert(q.clone(), d + 1);
                if seen.len() > limits.point_cap {
                    return Err(Error::resource(limits.point_cap, format!("searching for the distance {a} → {b}")));
                }
                queue.push_back(q);
            }
        }
        Ok(INF)
    }

    /// The space seen as a tree rooted at its basepoint, when it is one.
    pub fn tree(&self) -> Option<TreeView<'_>> {
        let root_ok = match &self.basepoint {
            Point::Lattice(v) => v.iter().all(|&x| x == 0),
            Point::Word(w) => w.is_empty(),
            _ => false,
        };
        if !root_ok {
            return None;
        }
        match &self.kind {
            SpaceKind::IntegerLine | SpaceKind::IntegerGrid { dim: 1 } => Some(TreeView::Line),
            SpaceKind::FreeGroup { .. } => Some(TreeView::Words { infinite: None }),
            _ => self.tree_rule.as_ref().map(|rule| match &self.kind {
                SpaceKind::BranchingTree { .. } => TreeView::Words {
                    infinite: Some((rule, rule.infinite_letters())),
                },
                _ => TreeView::Words { infinite: None },
            }),
        }
    }

    /// Checks local finiteness and symmetry of custom adjacency on a probe
    /// ball of radius 3 (the whole graph for explicit graphs).
    pub fn validate(&self, limits: &Limits) -> Result<()> {
        if let SpaceKind::Custom(AdjacencyRule::Subdivision { base }) = &self.kind {
            base.validate(limits)?;
        }
        let probe: Vec<Point> = match &self.kind {
            SpaceKind::Custom(AdjacencyRule::Explicit { neighbours }) => {
                neighbours.keys().map(|k| Point::Name(k.clone())).collect()
            }
            _ => {
                let mut seen = vec![self.basepoint.clone()];
                let mut frontier = vec![self.basepoint.clone()];
                for _ in 0..3 {
                    let mut next = Vec::new();
                    for p in &frontier {
                        let ns = self.neighbours(p);
                        if ns.len() > limits.neighbour_cap {
                            return Err(Error::input(format!(
                                "infinite branching: {p} has more than {} neighbours",
                                limits.neighbour_cap
                            )));
                        }
                        for q in ns {
                            if !seen.contains(&q) {
                                seen.push(q.clone());
                                next.push(q);
                            }
                        }
                        if seen.len() > limits.point_cap {
                            return Err(Error::resource(limits.point_cap, "probing adjacency"));
                        }
                    }
                    frontier = next;
                }
                seen
            }
        };
        for p in &probe {
            let ns = self.neighbours(p);
            if ns.len() > limits.neighbour_cap {
                return Err(Error::input(format!(
                    "infinite branching: {p} has more than {} neighbours",
                    limits.neighbour_cap
                )));
            }
            for q in &ns {
                if !self.neighbours(q).contains(p) {
                    return Err(Error::input(format!("asymmetric adjacency: {p} → {q} has no reverse edge")));
                }
            }
        }
        Ok(())
    }
}

fn check_alphabet(a: &[u8]) -> Result<Vec<u8>> {
    if a.is_empty() {
        return Err(Error::input("alphabet must be non-empty"));
    }
    let mut seen = Vec::new();
    for &c in a {
        if !c.is_ascii_alphanumeric() || seen.contains(&c) {
            return Err(Error::input("alphabet letters must be distinct ASCII letters or digits"));
        }
        seen.push(c);
    }
    Ok(seen)
}

fn subdivision_distance(base: &SpaceDescriptor, a: &Point, b: &Point, limits: &Limits) -> Result<Dist> {
    let ends = |p: &Point| -> (Vec<Point>, Dist) {
        match p {
            Point::Mid(u, v) => (vec![(**u).clone(), (**v).clone()], 1),
            v => (vec![v.clone()], 0),
        }
    };
    let (ea, oa) = ends(a);
    let (eb, ob) = ends(b);
    let mut best = INF;
    for u in &ea {
        for v in &eb {
            let d = base.distance(u, v, limits)?;
            if d != INF {
                best = best.min(oa + ob + 2 * d);
            }
        }
    }
    Ok(best)
}

/// Ancestor structure of a rooted tree space.
pub enum TreeView<'a> {
    /// ℤ rooted at 0: two rays.
    Line,
    /// Words, ancestors are prefixes. `infinite` carries the letters with
    /// infinite continuations when some subtrees may be finite.
    Words {
        infinite: Option<(&'a ChildRule, Vec<u8>)>,
    },
}

impl TreeView<'_> {
    pub fn depth(&self, p: &Point) -> Dist {
        match (self, p) {
            (TreeView::Line, Point::Lattice(v)) => v[0].unsigned_abs(),
            (TreeView::Words { .. }, Point::Word(w)) => w.len() as Dist,
            _ => INF,
        }
    }

    /// The ancestor of `p` at depth `d` (`d ≤ depth(p)`).
    pub fn ancestor(&self, p: &Point, d: Dist) -> Point {
        match p {
            Point::Lattice(v) => Point::int(v[0].signum() * d as i64),
            Point::Word(w) => Point::Word(w[..d as usize].to_vec()),
            _ => p.clone(),
        }
    }

    pub fn lca_depth(&self, a: &Point, b: &Point) -> Dist {
        match (a, b) {
            (Point::Lattice(x), Point::Lattice(y)) => {
                if x[0].signum() == y[0].signum() {
                    x[0].unsigned_abs().min(y[0].unsigned_abs())
                } else {
                    0
                }
            }
            (Point::Word(x), Point::Word(y)) => common_prefix(x, y) as Dist,
            _ => 0,
        }
    }

    /// Whether the subtree below `p` is infinite.
    pub fn has_infinite_subtree(&self, p: &Point) -> bool {
        match (self, p) {
            (TreeView::Words { infinite: Some((rule, alive)) }, Point::Word(w)) => match w.last() {
                Some(c) => alive.contains(c),
                None => rule.next(None).iter().any(|c| alive.contains(c)),
            },
            _ => true,
        }
    }

    /// The geodesic from `a` to `b`, both ends included.
    pub fn geodesic(&self, a: &Point, b: &Point) -> Vec<Point> {
        let l = self.lca_depth(a, b);
        let mut path: Vec<Point> = (l..=self.depth(a)).rev().map(|d| self.ancestor(a, d)).collect();
        path.extend((l + 1..=self.depth(b)).map(|d| self.ancestor(b, d)));
        path
    }
}

/// The closed ball `B(center; r)` as a window.
pub fn ball(space: &SpaceDescriptor, center: &Point, r: u64, limits: &Limits) -> Result<Window> {
    let center = space.canonical(center)?;
    let mut points = vec![center.clone()];
    let mut index: HashMap<Point, usize> = HashMap::from([(center, 0)]);
    let mut depth: Vec<Dist> = vec![0];
    let mut adj: Vec<Vec<(usize, Dist)>> = Vec::new();
    let mut head = 0;
    while head < points.len() {
        let d = depth[head];
        let ns = space.neighbours(&points[head]);
        if ns.len() > limits.neighbour_cap {
            return Err(Error::input(format!("infinite branching at {}", points[head])));
        }
        let mut row = Vec::with_capacity(ns.len());
        for q in ns {
            if let Some(&j) = index.get(&q) {
                row.push((j, 1));
            } else if d < r {
                let j = points.len();
                if j >= limits.point_cap {
                    return Err(Error::resource(
                        limits.point_cap,
                        format!("enumerating the ball of radius {r}"),
                    ));
                }
                index.insert(q.clone(), j);
                points.push(q);
                depth.push(d + 1);
                row.push((j, 1));
            }
        }
        adj.push(row);
        head += 1;
    }
    // Edges discovered from the earlier endpoint only; make them symmetric.
    let n = points.len();
    let mut sym: Vec<Vec<(usize, Dist)>> = vec![Vec::new(); n];
    for (a, row) in adj.into_iter().enumerate() {
        for (b, w) in row {
            sym[a].push((b, w));
            sym[b].push((a, w));
        }
    }
    for row in &mut sym {
        row.sort_unstable();
        row.dedup();
    }
    Ok(Window::from_adjacency(points, index, sym, depth, 0, r))
}

/// Points at distance exactly `r` from `center`.
pub fn sphere(space: &SpaceDescriptor, center: &Point, r: u64, limits: &Limits) -> Result<Vec<Point>> {
    let w = ball(space, center, r, limits)?;
    let mut out: Vec<Point> = w.frontier().map(|i| w.point(i).clone()).collect();
    out.sort();
    Ok(out)
}

/// Parses a descriptor document and validates it.
pub fn parse_descriptor(text: &str) -> Result<SpaceDescriptor> {
    parse_descriptor_with(text, &Limits::from_env())
}

pub fn parse_descriptor_with(text: &str, limits: &Limits) -> Result<SpaceDescriptor> {
    let raw: RawDescriptor = serde_json::from_str(text)?;
    let space = SpaceDescriptor::from_raw(raw)?;
    space.validate(limits)?;
    Ok(space)
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDescriptor {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphabet: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child_rule: Option<RawChildRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency_rule: Option<RawAdjacency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChildRule {
    pub roots: Vec<String>,
    pub follow: BTreeMap<String, Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RawAdjacency {
    Translations { generators: Vec<Vec<i64>> },
    Explicit { neighbours: BTreeMap<String, Vec<String>> },
    Subdivision { base: Box<RawDescriptor> },
}

fn letters(v: &[String], what: &str) -> Result<Vec<u8>> {
    v.iter()
        .map(|s| match s.as_bytes() {
            [c] => Ok(*c),
            _ => Err(Error::input(format!("{what} entries must be single letters, got {s:?}"))),
        })
        .collect()
}

impl SpaceDescriptor {
    fn from_raw(raw: RawDescriptor) -> Result<Self> {
        let unexpected = |field: &str| Error::input(format!("field `{field}` does not apply to kind {}", raw.kind));
        let space = match raw.kind.as_str() {
            "integer_line" => {
                if raw.dim.is_some_and(|d| d != 1) {
                    return Err(unexpected("dim"));
                }
                SpaceDescriptor::integer_line()
            }
            "integer_grid" => SpaceDescriptor::integer_grid(
                raw.dim.ok_or_else(|| Error::input("integer_grid needs `dim`"))?,
            )?,
            "free_group" => SpaceDescriptor::free_group(
                raw.rank.ok_or_else(|| Error::input("free_group needs `rank`"))?,
            )?,
            "word_tree" => {
                let alphabet = raw.alphabet.as_deref().ok_or_else(|| Error::input("word_tree needs `alphabet`"))?;
                let a = letters(alphabet, "alphabet")?;
                SpaceDescriptor::word_tree(&String::from_utf8_lossy(&a))?
            }
            "comb_tree" => SpaceDescriptor::comb_tree(),
            "finitely_branching_tree" => {
                let alphabet = raw
                    .alphabet
                    .as_deref()
                    .ok_or_else(|| Error::input("finitely_branching_tree needs `alphabet`"))?;
                let rule = raw
                    .child_rule
                    .as_ref()
                    .ok_or_else(|| Error::input("finitely_branching_tree needs `child_rule`"))?;
                let mut follow = BTreeMap::new();
                for (k, v) in &rule.follow {
                    let key = letters(std::slice::from_ref(k), "child_rule.follow")?[0];
                    follow.insert(key, letters(v, "child_rule.follow")?);
                }
                let rule = ChildRule::new(letters(&rule.roots, "child_rule.roots")?, follow);
                let a = letters(alphabet, "alphabet")?;
                SpaceDescriptor::branching_tree(&String::from_utf8_lossy(&a), rule)?
            }
            "custom" => match raw.adjacency_rule.clone() {
                Some(RawAdjacency::Translations { generators }) => {
                    let space = SpaceDescriptor::translations(generators)?;
                    if raw.dim.is_some_and(|d| Some(d) != space.lattice_dim()) {
                        return Err(Error::input("`dim` disagrees with the generator length"));
                    }
                    space
                }
                Some(RawAdjacency::Explicit { neighbours }) => SpaceDescriptor::explicit(neighbours)?,
                Some(RawAdjacency::Subdivision { base }) => {
                    SpaceDescriptor::subdivision(SpaceDescriptor::from_raw(*base)?)
                }
                None => return Err(Error::input("custom spaces need `adjacency_rule`")),
            },
            other => return Err(Error::input(format!("unknown space kind {other:?}"))),
        };
        let checks: [(&str, bool, bool); 4] = [
            ("rank", raw.rank.is_some(), raw.kind == "free_group"),
            ("alphabet", raw.alphabet.is_some(), matches!(raw.kind.as_str(), "word_tree" | "finitely_branching_tree")),
            ("child_rule", raw.child_rule.is_some(), raw.kind == "finitely_branching_tree"),
            ("adjacency_rule", raw.adjacency_rule.is_some(), raw.kind == "custom"),
        ];
        for (field, present, allowed) in checks {
            if present && !allowed {
                return Err(unexpected(field));
            }
        }
        if raw.dim.is_some() && !matches!(raw.kind.as_str(), "integer_line" | "integer_grid" | "custom") {
            return Err(unexpected("dim"));
        }
        match raw.basepoint {
            Some(b) => space.with_basepoint(&b),
            None => Ok(space),
        }
    }
}

impl TryFrom<RawDescriptor> for SpaceDescriptor {
    type Error = Error;

    fn try_from(raw: RawDescriptor) -> Result<Self> {
        let space = SpaceDescriptor::from_raw(raw)?;
        space.validate(&Limits::default())?;
        Ok(space)
    }
}

impl From<SpaceDescriptor> for RawDescriptor {
    fn from(s: SpaceDescriptor) -> Self {
        let default_base = SpaceDescriptor::build(s.kind.clone()).map(|d| d.basepoint).ok();
        let basepoint = (default_base.as_ref() != Some(&s.basepoint)).then(|| s.basepoint.to_string());
        let strs = |a: &[u8]| a.iter().map(|&c| (c as char).to_string()).collect::<Vec<_>>();
        let mut raw = RawDescriptor {
            kind: s.kind_name().to_string(),
            dim: None,
            rank: None,
            alphabet: None,
            child_rule: None,
            adjacency_rule: None,
            basepoint,
        };
        match s.kind {
            SpaceKind::IntegerLine | SpaceKind::CombTree => {}
            SpaceKind::IntegerGrid { dim } => raw.dim = Some(dim),
            SpaceKind::FreeGroup { rank } => raw.rank = Some(rank),
            SpaceKind::WordTree { alphabet } => raw.alphabet = Some(strs(&alphabet)),
            SpaceKind::BranchingTree { alphabet, rule } => {
                raw.alphabet = Some(strs(&alphabet));
                raw.child_rule = Some(RawChildRule {
                    roots: strs(&rule.roots),
                    follow: rule.follow.iter().map(|(k, v)| ((*k as char).to_string(), strs(v))).collect(),
                });
            }
            SpaceKind::Custom(AdjacencyRule::Translations { generators }) => {
                raw.adjacency_rule = Some(RawAdjacency::Translations { generators })
            }
            SpaceKind::Custom(AdjacencyRule::Explicit { neighbours }) => {
                raw.adjacency_rule = Some(RawAdjacency::Explicit { neighbours })
            }
            SpaceKind::Custom(AdjacencyRule::Subdivision { base }) => {
                raw.adjacency_rule = Some(RawAdjacency::Subdivision {
                    base: Box::new(RawDescriptor::from(*base)),
                })
            }
        }
        raw
    }
}

impl std::fmt::Display for SpaceDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let json = serde_json::to_string(self).map_err(|_| std::fmt::Error)?;
        f.write_str(&json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_reduction_cancels_inverse_pairs() {
        assert_eq!(free_reduce(b"abBA"), b"");
        assert_eq!(free_reduce(b"aAb"), b"b");
        assert_eq!(free_reduce(b"abAB"), b"abAB");
        assert_eq!(free_inverse(b"aB"), b"bA");
    }

    #[test]
    fn canonical_points_are_checked() {
        let f2 = SpaceDescriptor::free_group(2).unwrap();
        assert!(f2.parse_point("aB").is_ok());
        assert!(f2.parse_point("aA").is_err());
        assert!(f2.parse_point("c").is_err());
        assert_eq!(f2.parse_point("ε").unwrap(), Point::Word(vec![]));
        let comb = SpaceDescriptor::comb_tree();
        assert!(comb.parse_point("aab").is_ok());
        assert!(comb.parse_point("aba").is_err());
        let z2 = SpaceDescriptor::integer_grid(2).unwrap();
        assert_eq!(z2.parse_point("(1,-2)").unwrap(), Point::lattice(&[1, -2]));
        assert!(z2.parse_point("3").is_err());
        let g = SpaceDescriptor::subdivision(SpaceDescriptor::integer_line());
        assert!(g.parse_point("[0|1]").is_ok());
        assert!(g.parse_point("[0|2]").is_err());
    }

    #[test]
    fn comb_children_follow_the_rule() {
        let comb = SpaceDescriptor::comb_tree();
        let mut n = comb.neighbours(&Point::word("aa"));
        n.sort();
        assert_eq!(n, vec![Point::word("a"), Point::word("aaa"), Point::word("aab")]);
        assert_eq!(comb.neighbours(&Point::word("ab")), vec![Point::word("a"), Point::word("abb")]);
    }

    #[test]
    fn infinite_letters_are_a_greatest_fixpoint() {
        // c is a dead end, b only leads to c
        let rule = ChildRule::new(
            b"abc".to_vec(),
            BTreeMap::from([(b'a', b"abc".to_vec()), (b'b', b"c".to_vec()), (b'c', vec![])]),
        );
        assert_eq!(rule.infinite_letters(), b"a".to_vec());
    }

    #[test]
    fn subdivision_distances() {
        let g = SpaceDescriptor::subdivision(SpaceDescriptor::integer_line());
        let l = Limits::default();
        let m = g.parse_point("[0|1]").unwrap();
        assert_eq!(g.distance(&m, &Point::int(3), &l).unwrap(), 5);
        assert_eq!(g.distance(&m, &g.parse_point("[2|3]").unwrap(), &l).unwrap(), 4);
        assert_eq!(g.distance(&Point::int(-1), &Point::int(2), &l).unwrap(), 6);
    }

    #[test]
    fn descriptor_round_trips_through_json() {
        for text in [
            r#"{"kind":"integer_grid","dim":3}"#,
            r#"{"kind":"word_tree","alphabet":["x","y","z"]}"#,
            r#"{"kind":"finitely_branching_tree","alphabet":["a","b"],"child_rule":{"roots":["a","b"],"follow":{"a":["a","b"],"b":[]}}}"#,
            r#"{"kind":"custom","adjacency_rule":{"type":"explicit","neighbours":{"p":["q"],"q":["p"]}},"basepoint":"q"}"#,
        ] {
            let d = parse_descriptor(text).unwrap();
            let again = parse_descriptor(&d.to_string()).unwrap();
            assert_eq!(d, again);
        }
    }

    #[test]
    fn misplaced_fields_are_rejected() {
        assert!(parse_descriptor(r#"{"kind":"integer_line","rank":2}"#).is_err());
        assert!(parse_descriptor(r#"{"kind":"free_group"}"#).is_err());
        assert!(parse_descriptor(r#"{"kind":"comb_tree","colour":1}"#).is_err());
    }
}
