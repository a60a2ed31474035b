//! Coarse sequences given by total symbolic rules, their prefix-scale
//! validation, and greedy subsequence matching.

use serde::{Deserialize, Serialize};

use crate::coarse::{Dist, INF};
use crate::error::{Error, Result};
use crate::maps::MapRule;
use crate::point::Point;
use crate::spaces::{free_reduce, Limits, SpaceDescriptor};

/// A lattice coordinate given either as one integer (dimension 1) or as a vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Scalar(i64),
    Vector(Vec<i64>),
}

impl Coord {
    pub fn to_vec(&self, dim: usize) -> Result<Vec<i64>> {
        match self {
            Coord::Scalar(x) if dim == 1 => Ok(vec![*x]),
            Coord::Vector(v) if v.len() == dim => Ok(v.clone()),
            _ => Err(Error::input(format!("coordinate {self:?} does not have dimension {dim}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeqRule {
    /// `s(i) = a·i + b` on a lattice.
    Affine { a: Coord, b: Coord },
    /// `s(i) = Σ coeffs[k]·iᵏ` on ℤ.
    Polynomial { coeffs: Vec<i64> },
    /// `s(i) = head · periodⁱ`, freely reduced in free groups.
    WordRay { head: String, period: String },
    /// The prefix, then the period repeated. An empty period makes the
    /// sequence finite.
    Explicit {
        prefix: Vec<String>,
        #[serde(default)]
        period: Vec<String>,
    },
    /// `s(i) = f(base(i))` for a base sequence in `source`.
    Mapped {
        map: MapRule,
        source: Box<SpaceDescriptor>,
        base: Box<SeqRule>,
    },
}

/// A sequence with its declared (claimed, unverified) step bound.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseSequence {
    pub rule: SeqRule,
    pub step_bound: Dist,
}

fn checked(space: &SpaceDescriptor, p: Point, i: usize) -> Result<Point> {
    if space.is_valid(&p) {
        Ok(p)
    } else {
        Err(Error::input(format!("rule value {p} at index {i} is not a point of the space")))
    }
}

impl SeqRule {
    pub fn eval(&self, space: &SpaceDescriptor, i: usize) -> Result<Point> {
        match self {
            SeqRule::Affine { a, b } => {
                let dim = space
                    .lattice_dim()
                    .ok_or_else(|| Error::input("affine rules need a lattice space"))?;
                let (a, b) = (a.to_vec(dim)?, b.to_vec(dim)?);
                let v = a
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| x.checked_mul(i as i64).and_then(|m| m.checked_add(*y)))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::input("affine rule overflows"))?;
                checked(space, Point::Lattice(v), i)
            }
            SeqRule::Polynomial { coeffs } => {
                if space.lattice_dim() != Some(1) {
                    return Err(Error::input("polynomial rules need a one-dimensional lattice"));
                }
                let mut acc: i64 = 0;
                for c in coeffs.iter().rev() {
                    acc = acc
                        .checked_mul(i as i64)
                        .and_then(|m| m.checked_add(*c))
                        .ok_or_else(|| Error::input("polynomial rule overflows"))?;
                }
                checked(space, Point::int(acc), i)
            }
            SeqRule::WordRay { head, period } => {
                if !space.is_word_space() {
                    return Err(Error::input("word_ray rules need a word space"));
                }
                let mut w = head.as_bytes().to_vec();
                for _ in 0..i {
                    w.extend_from_slice(period.as_bytes());
                }
                if space.is_free_group() {
                    w = free_reduce(&w);
                }
                checked(space, Point::Word(w), i)
            }
            SeqRule::Explicit { prefix, period } => {
                let s = if i < prefix.len() {
                    &prefix[i]
                } else if period.is_empty() {
                    return Err(Error::input(format!(
                        "finite sequence of length {} has no index {i}",
                        prefix.len()
                    )));
                } else {
                    &period[(i - prefix.len()) % period.len()]
                };
                space.parse_point(s)
            }
            SeqRule::Mapped { map, source, base } => {
                let p = base.eval(source, i)?;
                map.apply(&p, source, space)
            }
        }
    }

    /// Length of a finite sequence; `None` for total rules.
    pub fn len(&self) -> Option<usize> {
        match self {
            SeqRule::Explicit { prefix, period } if period.is_empty() => Some(prefix.len()),
            SeqRule::Mapped { base, .. } => base.len(),
            _ => None,
        }
    }
}

impl CoarseSequence {
    pub fn new(rule: SeqRule, step_bound: Dist) -> Self {
        CoarseSequence { rule, step_bound }
    }

    pub fn affine(a: i64, b: i64, step_bound: Dist) -> Self {
        Self::new(SeqRule::Affine { a: Coord::Scalar(a), b: Coord::Scalar(b) }, step_bound)
    }

    pub fn affine_vec(a: &[i64], b: &[i64], step_bound: Dist) -> Self {
        Self::new(
            SeqRule::Affine { a: Coord::Vector(a.to_vec()), b: Coord::Vector(b.to_vec()) },
            step_bound,
        )
    }

    pub fn word_ray(head: &str, period: &str, step_bound: Dist) -> Self {
        Self::new(SeqRule::WordRay { head: head.into(), period: period.into() }, step_bound)
    }

    pub fn explicit(prefix: &[Point], period: &[Point], step_bound: Dist) -> Self {
        let strs = |v: &[Point]| v.iter().map(|p| p.to_string()).collect();
        Self::new(SeqRule::Explicit { prefix: strs(prefix), period: strs(period) }, step_bound)
    }

    pub fn eval(&self, space: &SpaceDescriptor, i: usize) -> Result<Point> {
        self.rule.eval(space, i)
    }

    /// The first `n` points; errors if the rule is finite and shorter.
    pub fn prefix(&self, space: &SpaceDescriptor, n: usize) -> Result<Vec<Point>> {
        (0..n).map(|i| self.eval(space, i)).collect()
    }

    pub fn len(&self) -> Option<usize> {
        self.rule.len()
    }
}

/// Prefix-scale evidence for bornologousness and properness. Passing is
/// necessary, not sufficient: both properties quantify over the whole tail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoarseReport {
    pub prefix_len: usize,
    pub declared_step_bound: Dist,
    pub max_step: Dist,
    /// First index `i` with `d(s(i), s(i+1))` above the declared bound.
    pub first_bad_step: Option<usize>,
    pub bornologous_ok: bool,
    /// `escape[r]`: least `N` with every prefix point from `N` on outside `B(ξ; r)`.
    pub escape: Vec<Option<usize>>,
    /// Least probed radius with no such `N`.
    pub proper_fail_radius: Option<u64>,
    pub proper_ok: bool,
    pub scope: &'static str,
}

pub const PREFIX_SCOPE: &str = "prefix-scale: necessary, not sufficient";

pub fn validate_coarse(
    s: &CoarseSequence,
    space: &SpaceDescriptor,
    prefix_len: usize,
    r_probe: u64,
    limits: &Limits,
) -> Result<CoarseReport> {
    if prefix_len < 2 {
        return Err(Error::input("prefix_len must be at least 2"));
    }
    let pts = s.prefix(space, prefix_len)?;
    let mut max_step = 0;
    let mut first_bad_step = None;
    for (i, w) in pts.windows(2).enumerate() {
        let d = space.distance(&w[0], &w[1], limits)?;
        max_step = max_step.max(d);
        if d > s.step_bound && first_bad_step.is_none() {
            first_bad_step = Some(i);
        }
    }
    let depths = pts.iter().map(|p| space.depth(p, limits)).collect::<Result<Vec<_>>>()?;
    let escape: Vec<Option<usize>> = (0..=r_probe).map(|r| escape_index(&depths, r)).collect();
    let proper_fail_radius = escape.iter().position(Option::is_none).map(|r| r as u64);
    Ok(CoarseReport {
        prefix_len,
        declared_step_bound: s.step_bound,
        max_step,
        first_bad_step,
        bornologous_ok: first_bad_step.is_none() && max_step != INF,
        escape,
        proper_fail_radius,
        proper_ok: proper_fail_radius.is_none(),
        scope: PREFIX_SCOPE,
    })
}

/// Least `n` such that `depths[m] > r` for all `m ≥ n`; `None` if the last one is inside.
pub fn escape_index(depths: &[Dist], r: u64) -> Option<usize> {
    let inside_last = depths.iter().rposition(|&d| d <= r);
    match inside_last {
        None => Some(0),
        Some(i) if i + 1 < depths.len() => Some(i + 1),
        Some(_) => None,
    }
}

/// Greedy least-match map `φ` with `s(i) = t(φ(i))` for `i < prefix_len`,
/// scanning `t` up to index `t_len`.
pub fn is_subsequence(
    s: &CoarseSequence,
    t: &CoarseSequence,
    space: &SpaceDescriptor,
    prefix_len: usize,
    t_len: usize,
) -> Result<Option<Vec<usize>>> {
    let t_len = t.len().map_or(t_len, |n| n.min(t_len));
    let mut map = Vec::with_capacity(prefix_len);
    let mut j = 0;
    for i in 0..prefix_len {
        let target = s.eval(space, i)?;
        loop {
            if j >= t_len {
                return Ok(None);
            }
            let hit = t.eval(space, j)? == target;
            j += 1;
            if hit {
                map.push(j - 1);
                break;
            }
        }
    }
    Ok(Some(map))
}

/// `t`-scan length used when none is given.
pub fn default_scan(prefix_len: usize) -> usize {
    prefix_len.saturating_mul(8).max(64)
}

/// `(φ ∘ ψ)(i) = φ(ψ(i))` where `ψ` embeds `s` in `t` and `φ` embeds `t` in `u`.
pub fn compose_maps(psi: &[usize], phi: &[usize]) -> Option<Vec<usize>> {
    psi.iter().map(|&j| phi.get(j).copied()).collect()
}
