//! ε-equivalence of coarse sequences at a fixed threshold K, with
//! certificates that can be replayed without the component engines.
//!
//! For each radius `r = 0..=r_max` the procedure picks `N_r` (strictly
//! increasing, both prefix tails outside `B(ξ; r + K)` from `N_r` on) and a
//! K-chain from `s(N_r)` to `t(N_r)` outside `B(ξ; r)`. Consecutive tail
//! points further apart than K are joined by stored link chains, so the
//! certificate shows each whole prefix tail lies in the chain's component.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coarse::Dist;
use crate::components::{default_margin, Chain, ComponentEngine, EngineChoice};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::sequences::{escape_index, CoarseSequence};
use crate::spaces::{Limits, SpaceDescriptor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsEntry {
    pub r: u64,
    pub n: usize,
    pub chain: Chain,
}

/// A chain from `X(index)` to `X(index + 1)` outside `B(ξ; ρ)`, where `ρ`
/// is the largest radius with `N_ρ ≤ index`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Link {
    pub index: usize,
    pub chain: Chain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsCertificate {
    pub space: SpaceDescriptor,
    pub s: CoarseSequence,
    pub t: CoarseSequence,
    pub k: Dist,
    pub r_max: u64,
    pub prefix: usize,
    pub entries: Vec<EpsEntry>,
    #[serde(default)]
    pub s_links: Vec<Link>,
    #[serde(default)]
    pub t_links: Vec<Link>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Separation {
    /// `s(N_r)` and `t(N_r)` lie in different classes.
    Heads,
    /// `s(index)` and `s(index + 1)` lie in different classes.
    STail { index: usize },
    TTail { index: usize },
}

/// The least radius at which the K-components separate the two tails.
/// Relative to K and to the probed scale; it never claims more.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpsRefutation {
    pub k: Dist,
    pub r_fail: u64,
    pub n: usize,
    pub reason: Separation,
    pub left: Point,
    pub right: Point,
    pub left_class: Point,
    pub right_class: Point,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum EpsVerdict {
    Certificate(EpsCertificate),
    Refutation(EpsRefutation),
}

impl EpsVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EpsVerdict::Certificate(_))
    }

    pub fn certificate(&self) -> Option<&EpsCertificate> {
        match self {
            EpsVerdict::Certificate(c) => Some(c),
            EpsVerdict::Refutation(_) => None,
        }
    }

    pub fn refutation(&self) -> Option<&EpsRefutation> {
        match self {
            EpsVerdict::Refutation(r) => Some(r),
            EpsVerdict::Certificate(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpsOptions {
    pub k: Dist,
    pub r_max: u64,
    /// Window margin beyond the deepest prefix point; default `2K + 4`.
    pub margin: Option<u64>,
    /// Working prefix length; default [`default_prefix`].
    pub prefix: Option<usize>,
    pub engine: EngineChoice,
}

impl EpsOptions {
    pub fn new(k: Dist, r_max: u64) -> Self {
        EpsOptions {
            k,
            r_max,
            margin: None,
            prefix: None,
            engine: EngineChoice::Auto,
        }
    }
}

pub fn default_prefix(r_max: u64, k: Dist, margin: u64) -> usize {
    (2 * (r_max + k + margin) + 8) as usize
}

/// `N_r` for `r = 0..=r_max`; errors when the tails do not escape within the prefix.
fn pick_indices(ds: &[Dist], dt: &[Dist], k: Dist, r_max: u64) -> Result<Vec<usize>> {
    let both: Vec<Dist> = ds.iter().zip(dt).map(|(a, b)| *a.min(b)).collect();
    let p = both.len();
    let mut out: Vec<usize> = Vec::with_capacity(r_max as usize + 1);
    for r in 0..=r_max {
        let least = escape_index(&both, r + k);
        let n = match (least, out.last()) {
            (Some(n), Some(&prev)) => n.max(prev + 1),
            (Some(n), None) => n,
            (None, _) => p,
        };
        if n >= p {
            return Err(Error::input(format!(
                "the sequences do not stay outside B(ξ; {}) within a prefix of {p} points \
                 (properness fails at this scale; raise --prefix if they escape later)",
                r + k
            )));
        }
        out.push(n);
    }
    Ok(out)
}

/// Largest `r` with `n[r] ≤ index`.
fn link_radius(n: &[usize], index: usize) -> Option<u64> {
    n.iter().rposition(|&m| m <= index).map(|r| r as u64)
}

fn big_steps(space: &SpaceDescriptor, pts: &[Point], from: usize, k: Dist, limits: &Limits) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for i in from..pts.len().saturating_sub(1) {
        if !space.within(&pts[i], &pts[i + 1], k, limits)? {
            out.push(i);
        }
    }
    Ok(out)
}

fn prefix_depths(space: &SpaceDescriptor, seq: &CoarseSequence, p: usize, limits: &Limits) -> Result<(Vec<Point>, Vec<Dist>)> {
    if seq.len().is_some_and(|n| n < p) {
        return Err(Error::input(format!("a finite sequence is shorter than the working prefix {p}")));
    }
    let pts = seq.prefix(space, p)?;
    let depths = pts.iter().map(|q| space.depth(q, limits)).collect::<Result<Vec<_>>>()?;
    Ok((pts, depths))
}

/// Runs the procedure at a fixed K.
pub fn epsilon_equivalent(
    s: &CoarseSequence,
    t: &CoarseSequence,
    space: &SpaceDescriptor,
    opts: &EpsOptions,
    limits: &Limits,
) -> Result<EpsVerdict> {
    let k = opts.k;
    if k == 0 {
        return Err(Error::input("K must be at least 1"));
    }
    let margin = opts.margin.unwrap_or_else(|| default_margin(k));
    let p = opts.prefix.unwrap_or_else(|| default_prefix(opts.r_max, k, margin));
    if p < 2 {
        return Err(Error::input("the working prefix needs at least 2 points"));
    }
    let (ps, ds) = prefix_depths(space, s, p, limits)?;
    let (pt, dt) = prefix_depths(space, t, p, limits)?;
    let n = pick_indices(&ds, &dt, k, opts.r_max)?;
    let deepest = ds.iter().chain(&dt).copied().max().unwrap_or(0);
    let engine = ComponentEngine::new(space, k, deepest + margin.max(1), opts.r_max, opts.engine, limits)?;

    let s_big = big_steps(space, &ps, n[0], k, limits)?;
    let t_big = big_steps(space, &pt, n[0], k, limits)?;

    let class = |q: &Point, r: u64| -> Result<Point> {
        engine
            .class_of(q, r)?
            .ok_or_else(|| Error::input(format!("{q} unexpectedly inside B(ξ; {r})")))
    };
    let separated = |a: &Point, b: &Point, r: u64| -> Result<Option<(Point, Point)>> {
        let (ca, cb) = (class(a, r)?, class(b, r)?);
        Ok((ca != cb).then_some((ca, cb)))
    };

    for r in 0..=opts.r_max {
        let nr = n[r as usize];
        let mut checks: Vec<(Separation, &Point, &Point)> = vec![(Separation::Heads, &ps[nr], &pt[nr])];
        checks.extend(s_big.iter().filter(|&&i| i >= nr).map(|&i| (Separation::STail { index: i }, &ps[i], &ps[i + 1])));
        checks.extend(t_big.iter().filter(|&&i| i >= nr).map(|&i| (Separation::TTail { index: i }, &pt[i], &pt[i + 1])));
        for (reason, a, b) in checks {
            if let Some((ca, cb)) = separated(a, b, r)? {
                return Ok(EpsVerdict::Refutation(EpsRefutation {
                    k,
                    r_fail: r,
                    n: nr,
                    reason,
                    left: a.clone(),
                    right: b.clone(),
                    left_class: ca,
                    right_class: cb,
                }));
            }
        }
    }

    let join = |a: &Point, b: &Point, r: u64| -> Result<Chain> {
        if a == b {
            return Ok(Chain { k, points: vec![a.clone()] });
        }
        engine
            .chain(a, b, r)?
            .ok_or_else(|| Error::input(format!("no chain {a} → {b} at radius {r} although the classes agree")))
    };
    let entries = (0..=opts.r_max)
        .into_par_iter()
        .map(|r| {
            let nr = n[r as usize];
            Ok(EpsEntry { r, n: nr, chain: join(&ps[nr], &pt[nr], r)? })
        })
        .collect::<Result<Vec<_>>>()?;
    let links = |pts: &[Point], big: &[usize]| -> Result<Vec<Link>> {
        big.par_iter()
            .map(|&i| {
                let rho = link_radius(&n, i).expect("big steps start at N_0");
                Ok(Link { index: i, chain: join(&pts[i], &pts[i + 1], rho)? })
            })
            .collect()
    };
    Ok(EpsVerdict::Certificate(EpsCertificate {
        space: space.clone(),
        s: s.clone(),
        t: t.clone(),
        k,
        r_max: opts.r_max,
        prefix: p,
        entries,
        s_links: links(&ps, &s_big)?,
        t_links: links(&pt, &t_big)?,
    }))
}

/// Least `K ∈ 1..=k_max` with a certificate, or the refutation at `k_max`.
pub fn epsilon_search_k(
    s: &CoarseSequence,
    t: &CoarseSequence,
    space: &SpaceDescriptor,
    k_max: Dist,
    opts: &EpsOptions,
    limits: &Limits,
) -> Result<EpsVerdict> {
    if k_max == 0 {
        return Err(Error::input("K_max must be at least 1"));
    }
    let mut last = None;
    for k in 1..=k_max {
        let verdict = epsilon_equivalent(s, t, space, &EpsOptions { k, ..*opts }, limits)?;
        if verdict.is_equivalent() {
            return Ok(verdict);
        }
        last = Some(verdict);
    }
    Ok(last.expect("k_max ≥ 1"))
}

// ---------------------------------------------------------------------------
// Independent replay

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

impl VerifyReport {
    fn from_failures(failures: Vec<String>) -> Self {
        VerifyReport { ok: failures.is_empty(), failures }
    }
}

/// Checks a chain against closed-form (or BFS) distances of the space.
pub(crate) fn check_chain(
    space: &SpaceDescriptor,
    chain: &Chain,
    k: Dist,
    r: u64,
    from: &Point,
    to: &Point,
    limits: &Limits,
) -> std::result::Result<(), String> {
    if chain.k > k {
        return Err(format!("declares K = {} above {k}", chain.k));
    }
    let pts = chain
        .points
        .iter()
        .map(|p| space.canonical(p).map_err(|e| e.to_string()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    match (pts.first(), pts.last()) {
        (Some(a), Some(b)) if a == from && b == to => {}
        (Some(a), Some(b)) => return Err(format!("runs {a} → {b}, expected {from} → {to}")),
        _ => return Err("is empty".into()),
    }
    Chain { k, points: pts }.check(space, r, limits)
}

pub fn verify_certificate(cert: &EpsCertificate, limits: &Limits) -> VerifyReport {
    let mut failures = Vec::new();
    match replay(cert, limits, &mut failures) {
        Ok(()) => {}
        Err(e) => failures.push(e.to_string()),
    }
    VerifyReport::from_failures(failures)
}

fn replay(cert: &EpsCertificate, limits: &Limits, failures: &mut Vec<String>) -> Result<()> {
    let space = &cert.space;
    let k = cert.k;
    if k == 0 {
        failures.push("K is 0".into());
        return Ok(());
    }
    let rs: Vec<u64> = cert.entries.iter().map(|e| e.r).collect();
    if rs != (0..=cert.r_max).collect::<Vec<_>>() {
        failures.push(format!("entries cover radii {rs:?}, expected 0..={}", cert.r_max));
        return Ok(());
    }
    let p = cert.prefix;
    let (ps, ds) = prefix_depths(space, &cert.s, p, limits)?;
    let (pt, dt) = prefix_depths(space, &cert.t, p, limits)?;
    let n: Vec<usize> = cert.entries.iter().map(|e| e.n).collect();
    for w in n.windows(2) {
        if w[1] <= w[0] {
            failures.push(format!("N is not strictly increasing: {} then {}", w[0], w[1]));
        }
    }
    if let Some(&last) = n.last() {
        if last >= p {
            failures.push(format!("N_{} = {last} is beyond the prefix {p}", cert.r_max));
            return Ok(());
        }
    }
    for e in &cert.entries {
        for (name, depths) in [("s", &ds), ("t", &dt)] {
            if let Some(m) = (e.n..p).find(|&m| depths[m] <= e.r + k) {
                failures.push(format!("entry r={}: {name}({m}) is inside B(ξ; {})", e.r, e.r + k));
            }
        }
        if let Err(msg) = check_chain(space, &e.chain, k, e.r, &ps[e.n], &pt[e.n], limits) {
            failures.push(format!("entry r={} chain: {msg}", e.r));
        }
    }
    for (name, pts, links) in [("s", &ps, &cert.s_links), ("t", &pt, &cert.t_links)] {
        let by_index: BTreeMap<usize, &Link> = links.iter().map(|l| (l.index, l)).collect();
        if by_index.len() != links.len() {
            failures.push(format!("{name} links repeat an index"));
        }
        for i in big_steps(space, pts, n[0], k, limits)? {
            if !by_index.contains_key(&i) {
                failures.push(format!("{name} step {i} → {} exceeds K = {k} and has no link", i + 1));
            }
        }
        for (&i, link) in &by_index {
            let Some(rho) = (i + 1 < p).then(|| link_radius(&n, i)).flatten() else {
                failures.push(format!("{name} link {i} is outside the tail"));
                continue;
            };
            if let Err(msg) = check_chain(space, &link.chain, k, rho, &pts[i], &pts[i + 1], limits) {
                failures.push(format!("{name} link {i}: {msg}"));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Equivalence-relation laws on certificates

impl EpsCertificate {
    /// The certificate for `(t, s)`.
    pub fn reversed(&self) -> EpsCertificate {
        EpsCertificate {
            space: self.space.clone(),
            s: self.t.clone(),
            t: self.s.clone(),
            k: self.k,
            r_max: self.r_max,
            prefix: self.prefix,
            entries: self
                .entries
                .iter()
                .map(|e| EpsEntry { r: e.r, n: e.n, chain: e.chain.reversed() })
                .collect(),
            s_links: self.t_links.clone(),
            t_links: self.s_links.clone(),
        }
    }

    /// From certificates for `(s, t)` and `(t, u)`, one for `(s, u)` with
    /// `K' = max(K, K₂)`; chains are concatenated through the `t` tail.
    pub fn compose(&self, other: &EpsCertificate, limits: &Limits) -> Result<EpsCertificate> {
        if self.space != other.space {
            return Err(Error::input("certificates live on different spaces"));
        }
        if self.t != other.s {
            return Err(Error::input("the middle sequences of the two certificates differ"));
        }
        let space = &self.space;
        let k = self.k.max(other.k);
        let r_max = self.r_max.min(other.r_max);
        let p = self.prefix.min(other.prefix);
        let (ps, ds) = prefix_depths(space, &self.s, p, limits)?;
        let (pt, _) = prefix_depths(space, &self.t, p, limits)?;
        let (pu, du) = prefix_depths(space, &other.t, p, limits)?;
        let base = pick_indices(&ds, &du, k, r_max)?;
        let mut n: Vec<usize> = Vec::with_capacity(base.len());
        for r in 0..=r_max as usize {
            let mut m = base[r].max(self.entries[r].n).max(other.entries[r].n);
            if let Some(&prev) = n.last() {
                m = m.max(prev + 1);
            }
            if m >= p {
                return Err(Error::input("composed indices run past the shared prefix"));
            }
            n.push(m);
        }
        let index = |links: &[Link]| -> BTreeMap<usize, Chain> { links.iter().map(|l| (l.index, l.chain.clone())).collect() };
        let (s1, t1) = (index(&self.s_links), index(&self.t_links));
        let (s2, t2) = (index(&other.s_links), index(&other.t_links));

        let mut entries = Vec::with_capacity(n.len());
        for r in 0..=r_max as usize {
            let (n1, n2, m) = (self.entries[r].n, other.entries[r].n, n[r]);
            let mut path = walk(&ps, &s1, m, n1)?;
            path.extend(self.entries[r].chain.points.iter().cloned());
            if n1 <= n2 {
                path.extend(walk(&pt, &t1, n1, n2)?);
            } else {
                path.extend(walk(&pt, &s2, n1, n2)?);
            }
            path.extend(other.entries[r].chain.points.iter().cloned());
            path.extend(walk(&pu, &t2, n2, m)?);
            let points = canonical_dedup(space, path)?;
            entries.push(EpsEntry { r: r as u64, n: m, chain: Chain { k, points } });
        }
        let keep = |links: &[Link], pts: &[Point]| -> Result<Vec<Link>> {
            let big = big_steps(space, pts, n[0], k, limits)?;
            big.iter()
                .map(|i| {
                    links
                        .iter()
                        .find(|l| l.index == *i)
                        .cloned()
                        .ok_or_else(|| Error::input(format!("step {i} has no link to reuse")))
                })
                .collect()
        };
        Ok(EpsCertificate {
            space: space.clone(),
            s: self.s.clone(),
            t: other.t.clone(),
            k,
            r_max,
            prefix: p,
            s_links: keep(&self.s_links, &ps)?,
            t_links: keep(&other.t_links, &pu)?,
            entries,
        })
    }
}

/// Points visited going from `pts[from]` to `pts[to]` index by index,
/// crossing stored links where present.
fn walk(pts: &[Point], links: &BTreeMap<usize, Chain>, from: usize, to: usize) -> Result<Vec<Point>> {
    let mut out = vec![pts[from].clone()];
    if from <= to {
        for i in from..to {
            match links.get(&i) {
                Some(c) => out.extend(c.points.iter().skip(1).cloned()),
                None => out.push(pts[i + 1].clone()),
            }
        }
    } else {
        for i in (to..from).rev() {
            match links.get(&i) {
                Some(c) => out.extend(c.points.iter().rev().skip(1).cloned()),
                None => out.push(pts[i].clone()),
            }
        }
    }
    Ok(out)
}

fn canonical_dedup(space: &SpaceDescriptor, path: Vec<Point>) -> Result<Vec<Point>> {
    let mut out: Vec<Point> = Vec::with_capacity(path.len());
    for p in path {
        let p = space.canonical(&p)?;
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_strictly_increase_and_clear_the_margin() {
        let ds: Vec<Dist> = (0..20).collect();
        let dt: Vec<Dist> = (3..23).collect();
        assert_eq!(pick_indices(&ds, &dt, 1, 3).unwrap(), vec![2, 3, 4, 5]);
        // far-out tails still need increasing indices
        let far = vec![50; 10];
        assert_eq!(pick_indices(&far, &far, 1, 3).unwrap(), vec![0, 1, 2, 3]);
        assert!(pick_indices(&far[..3], &far[..3], 1, 3).is_err());
    }

    #[test]
    fn link_radius_is_the_last_index_at_or_below() {
        let n = [2, 4, 7];
        assert_eq!(link_radius(&n, 1), None);
        assert_eq!(link_radius(&n, 4), Some(1));
        assert_eq!(link_radius(&n, 6), Some(1));
        assert_eq!(link_radius(&n, 30), Some(2));
    }

    #[test]
    fn walking_uses_links_both_ways() {
        let pts: Vec<Point> = [0, 2, 3].map(Point::int).to_vec();
        let links = BTreeMap::from([(0, Chain { k: 1, points: [0, 1, 2].map(Point::int).to_vec() })]);
        assert_eq!(walk(&pts, &links, 0, 2).unwrap(), [0, 1, 2, 3].map(Point::int).to_vec());
        assert_eq!(walk(&pts, &links, 2, 0).unwrap(), [3, 2, 1, 0].map(Point::int).to_vec());
        assert_eq!(walk(&pts, &links, 1, 1).unwrap(), vec![Point::int(2)]);
    }
}
