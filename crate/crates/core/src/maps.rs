//! Coarse maps between spaces: probe-scale checks of bornologousness,
//! properness and closeness, and the induced map on component threads.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::coarse::{Dist, INF};
use crate::components::{threads_from_engine, ComponentEngine, EngineChoice, WindowEngine};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::sequences::Coord;
use crate::spaces::{ball, free_inverse, free_reduce, Limits, SpaceDescriptor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapRule {
    Identity,
    /// A subspace inclusion; points are passed through unchanged.
    Inclusion,
    /// Vertices of a graph into its subdivision.
    VertexInclusion,
    /// `x ↦ a·x + b` on lattices.
    Affine { a: i64, b: Coord },
    /// `x ↦ Σ coeffs[k]·xᵏ` on ℤ.
    Polynomial { coeffs: Vec<i64> },
    /// Letter-wise substitution on words. Missing inverse letters map to the
    /// inverse of the image of their lowercase letter.
    Substitution { images: BTreeMap<String, String> },
    /// Coordinate-wise absolute value.
    AbsoluteValue,
    Constant { point: String },
    /// `then ∘ first`, passing through the space `via`.
    Compose {
        first: Box<MapRule>,
        then: Box<MapRule>,
        via: Box<SpaceDescriptor>,
    },
    /// Subdivision points to the endpoint nearer the basepoint (ties: the
    /// smaller point).
    NearestVertex,
}

fn landed(target: &SpaceDescriptor, p: Point) -> Result<Point> {
    if target.is_valid(&p) {
        Ok(p)
    } else {
        Err(Error::input(format!("map image {p} is not a point of the target")))
    }
}

impl MapRule {
    pub fn apply(&self, p: &Point, source: &SpaceDescriptor, target: &SpaceDescriptor) -> Result<Point> {
        let lattice = |p: &Point| {
            p.as_lattice()
                .map(<[i64]>::to_vec)
                .ok_or_else(|| Error::input(format!("{p} is not a lattice point")))
        };
        match self {
            MapRule::Identity | MapRule::Inclusion | MapRule::VertexInclusion => landed(target, p.clone()),
            MapRule::Affine { a, b } => {
                let x = lattice(p)?;
                let b = b.to_vec(x.len())?;
                let v = x
                    .iter()
                    .zip(&b)
                    .map(|(x, y)| x.checked_mul(*a).and_then(|m| m.checked_add(*y)))
                    .collect::<Option<Vec<_>>>()
                    .ok_or_else(|| Error::input("affine map overflows"))?;
                landed(target, Point::Lattice(v))
            }
            MapRule::Polynomial { coeffs } => {
                let x = lattice(p)?;
                if x.len() != 1 {
                    return Err(Error::input("polynomial maps act on ℤ"));
                }
                let mut acc: i64 = 0;
                for c in coeffs.iter().rev() {
                    acc = acc
                        .checked_mul(x[0])
                        .and_then(|m| m.checked_add(*c))
                        .ok_or_else(|| Error::input("polynomial map overflows"))?;
                }
                landed(target, Point::int(acc))
            }
            MapRule::Substitution { images } => {
                let w = p
                    .as_word()
                    .ok_or_else(|| Error::input(format!("{p} is not a word")))?;
                let mut out = Vec::new();
                for &c in w {
                    let key = (c as char).to_string();
                    if let Some(img) = images.get(&key) {
                        out.extend_from_slice(img.as_bytes());
                    } else if let Some(img) = images.get(&(c.to_ascii_lowercase() as char).to_string()) {
                        out.extend(free_inverse(img.as_bytes()));
                    } else {
                        return Err(Error::input(format!("substitution has no image for '{}'", c as char)));
                    }
                }
                if target.is_free_group() {
                    out = free_reduce(&out);
                }
                landed(target, Point::Word(out))
            }
            MapRule::AbsoluteValue => {
                let x = lattice(p)?;
                landed(target, Point::Lattice(x.iter().map(|v| v.abs()).collect()))
            }
            MapRule::Constant { point } => target.parse_point(point),
            MapRule::Compose { first, then, via } => {
                let mid = first.apply(p, source, via)?;
                then.apply(&mid, via, target)
            }
            MapRule::NearestVertex => match p {
                Point::Mid(u, v) => {
                    let limits = Limits::default();
                    let du = target.depth(u, &limits)?;
                    let dv = target.depth(v, &limits)?;
                    let pick = if (dv, &**v) < (du, &**u) { v } else { u };
                    landed(target, (**pick).clone())
                }
                q => landed(target, q.clone()),
            },
        }
    }
}

/// A map between two pointed spaces.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoarseMapSpec {
    pub source: SpaceDescriptor,
    pub target: SpaceDescriptor,
    pub rule: MapRule,
    /// Whether the map is required to send basepoint to basepoint.
    #[serde(default)]
    pub pointed: bool,
}

impl CoarseMapSpec {
    pub fn new(source: SpaceDescriptor, target: SpaceDescriptor, rule: MapRule) -> Self {
        CoarseMapSpec {
            source,
            target,
            rule,
            pointed: false,
        }
    }

    pub fn apply(&self, p: &Point) -> Result<Point> {
        self.rule.apply(p, &self.source, &self.target)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &CoarseMapSpec) -> Result<CoarseMapSpec> {
        if self.target != other.source {
            return Err(Error::input("maps are not composable: target and source differ"));
        }
        Ok(CoarseMapSpec {
            source: self.source.clone(),
            target: other.target.clone(),
            rule: MapRule::Compose {
                first: Box::new(self.rule.clone()),
                then: Box::new(other.rule.clone()),
                via: Box::new(self.target.clone()),
            },
            pointed: self.pointed && other.pointed,
        })
    }
}

/// The three doubling probe radii used by the trend checks.
pub fn probe_radii(probe_radius: u64) -> [u64; 3] {
    [(probe_radius / 4).max(1), (probe_radius / 2).max(1), probe_radius.max(1)]
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MapReport {
    pub radii: [u64; 3],
    pub k_in: Dist,
    /// Sup of `d(f x, f y)` over pairs with `d(x, y) ≤ k_in`, per radius; `null` = ∞.
    pub bornologous_sups: Vec<Option<Dist>>,
    pub bornologous: bool,
    /// `preimage_radii[i][τ]`: largest source depth of a point of the
    /// window of radius `radii[i]` whose image is within `τ` of `f(ξ)`.
    pub preimage_radii: Vec<Vec<u64>>,
    pub proper: bool,
    pub basepoint_ok: bool,
    pub coarse: bool,
}

fn finite(d: Dist) -> Option<Dist> {
    (d != INF).then_some(d)
}

/// Trend check at three doubling radii: bornologous iff the sup is finite
/// and unchanged across the last doubling; proper iff the preimage radius of
/// every target ball of radius `≤ R/4` is unchanged across the last doubling
/// and stays inside the middle window.
pub fn check_coarse(f: &CoarseMapSpec, probe_radius: u64, k_in: Dist, limits: &Limits) -> Result<MapReport> {
    if probe_radius < 2 {
        return Err(Error::input("probe_radius must be at least 2"));
    }
    let radii = probe_radii(probe_radius);
    let xi = f.source.basepoint();
    let f_xi = f.apply(xi)?;
    let taus = radii[2] / 4;
    let mut sups = Vec::new();
    let mut pre = Vec::new();
    for &rho in &radii {
        let w = ball(&f.source, xi, rho, limits)?;
        let images = w.points().iter().map(|p| f.apply(p)).collect::<Result<Vec<_>>>()?;
        let mut sup: Dist = 0;
        for i in 0..w.len() {
            for (j, _) in w.within(i, k_in) {
                if j > i {
                    sup = sup.max(f.target.distance(&images[i], &images[j], limits)?);
                }
            }
        }
        sups.push(finite(sup));
        let mut row = vec![0u64; taus as usize + 1];
        for (i, img) in images.iter().enumerate() {
            let d = f.target.distance(&f_xi, img, limits)?;
            for (tau, slot) in row.iter_mut().enumerate() {
                if d <= tau as Dist {
                    *slot = (*slot).max(w.depth(i));
                }
            }
        }
        pre.push(row);
    }
    let bornologous = sups[1].is_some() && sups[1] == sups[2];
    let proper = pre[1].iter().zip(&pre[2]).all(|(a, b)| a == b && *a < radii[1]);
    let basepoint_ok = !f.pointed || &f_xi == f.target.basepoint();
    Ok(MapReport {
        radii,
        k_in,
        bornologous_sups: sups,
        bornologous,
        preimage_radii: pre,
        proper,
        basepoint_ok,
        coarse: bornologous && proper && basepoint_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CloseReport {
    pub radii: [u64; 3],
    /// Sup of `d(f x, g x)` over each probe window; `null` = ∞.
    pub sups: Vec<Option<Dist>>,
    pub close: bool,
    pub sup: Option<Dist>,
}

/// Closeness at probe scale: the sup of `d(f x, g x)` is finite and does not
/// grow across the last doubling.
pub fn are_close(f: &CoarseMapSpec, g: &CoarseMapSpec, probe_radius: u64, limits: &Limits) -> Result<CloseReport> {
    if f.source != g.source || f.target != g.target {
        return Err(Error::input("closeness needs maps with the same source and target"));
    }
    let radii = probe_radii(probe_radius);
    let mut sups = Vec::new();
    for &rho in &radii {
        let w = ball(&f.source, f.source.basepoint(), rho, limits)?;
        let mut sup: Dist = 0;
        for p in w.points() {
            sup = sup.max(f.target.distance(&f.apply(p)?, &g.apply(p)?, limits)?);
        }
        sups.push(finite(sup));
    }
    let close = matches!((sups[1], sups[2]), (Some(a), Some(b)) if b <= a);
    Ok(CloseReport {
        radii,
        sup: sups[2],
        close,
        sups,
    })
}

/// Threads of the source sent to threads of the target, named by their
/// classes at `r_max`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EndMap {
    pub k: Dist,
    pub r_max: u64,
    pub source_threads: Vec<Point>,
    pub target_threads: Vec<Point>,
    pub mapping: BTreeMap<Point, Point>,
    pub injective: bool,
    pub surjective: bool,
}

impl EndMap {
    pub fn is_bijection(&self) -> bool {
        self.injective && self.surjective
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &EndMap) -> Result<EndMap> {
        let mapping = self
            .mapping
            .iter()
            .map(|(a, b)| {
                other
                    .mapping
                    .get(b)
                    .map(|c| (a.clone(), c.clone()))
                    .ok_or_else(|| Error::Inconclusive(format!("thread {b} is not in the second map's domain")))
            })
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(EndMap::assemble(
            self.k,
            self.r_max,
            self.source_threads.clone(),
            other.target_threads.clone(),
            mapping,
        ))
    }

    fn assemble(k: Dist, r_max: u64, source: Vec<Point>, target: Vec<Point>, mapping: BTreeMap<Point, Point>) -> Self {
        let image: BTreeSet<&Point> = mapping.values().collect();
        let injective = image.len() == mapping.len();
        let surjective = target.iter().all(|t| image.contains(t));
        EndMap {
            k,
            r_max,
            source_threads: source,
            target_threads: target,
            mapping,
            injective,
            surjective,
        }
    }
}

/// Sends each live source class at `r_max` to the target thread holding the
/// images of its horizon points. Source threads come from a window of radius
/// `r_max + margin`; the target window is widened to hold every image.
pub fn induced_end_map(f: &CoarseMapSpec, k: Dist, r_max: u64, margin: u64, limits: &Limits) -> Result<EndMap> {
    let horizon = r_max + margin.max(1);
    let source = ComponentEngine::Window(WindowEngine::new(&f.source, k, horizon, r_max, limits)?);
    let source_threads = threads_from_engine(&source, r_max, horizon, limits)?;
    let ComponentEngine::Window(engine) = &source else { unreachable!() };
    let w = engine.window();
    let mut samples: BTreeMap<Point, Vec<Point>> = BTreeMap::new();
    for i in w.frontier() {
        let p = w.point(i);
        if let Some(id) = source.class_of(p, r_max)? {
            samples.entry(id).or_default().push(f.apply(p)?);
        }
    }
    let mut top = r_max + 1;
    for imgs in samples.values() {
        for q in imgs {
            let d = f.target.depth(q, limits)?;
            if d <= r_max {
                return Err(Error::Inconclusive(format!(
                    "image {q} of a horizon point lies inside B(ξ; {r_max}); raise the margin"
                )));
            }
            top = top.max(d);
        }
    }
    let t_horizon = top + margin.max(1);
    let target = ComponentEngine::new(&f.target, k, t_horizon, r_max, EngineChoice::Auto, limits)?;
    let target_threads = threads_from_engine(&target, r_max, t_horizon, limits)?;
    let mut mapping = BTreeMap::new();
    for thread in &source_threads.threads {
        let id = thread.path.last().expect("non-empty thread");
        let imgs = samples.get(id).ok_or_else(|| Error::input(format!("live class {id} has no horizon point")))?;
        let mut hit: BTreeSet<Point> = BTreeSet::new();
        for q in imgs {
            let c = target
                .class_of(q, r_max)?
                .expect("image depth checked above");
            if !target.is_live(q, r_max)? {
                return Err(Error::Inconclusive(format!("image {q} lands in a dead target class {c}")));
            }
            hit.insert(c);
        }
        if hit.len() != 1 {
            return Err(Error::Inconclusive(format!(
                "images of thread {id} straddle {} target threads",
                hit.len()
            )));
        }
        mapping.insert(id.clone(), hit.pop_first().unwrap());
    }
    let src_ids = source_threads.threads.iter().map(|t| t.path.last().unwrap().clone()).collect();
    let tgt_ids = target_threads.threads.iter().map(|t| t.path.last().unwrap().clone()).collect();
    Ok(EndMap::assemble(k, r_max, src_ids, tgt_ids, mapping))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_apply() {
        let z = SpaceDescriptor::integer_line();
        let f2 = SpaceDescriptor::free_group(2).unwrap();
        let l = |x| Point::int(x);
        let affine = MapRule::Affine { a: -3, b: Coord::Scalar(1) };
        assert_eq!(affine.apply(&l(2), &z, &z).unwrap(), l(-5));
        assert_eq!(MapRule::AbsoluteValue.apply(&l(-4), &z, &z).unwrap(), l(4));
        let sub = MapRule::Substitution {
            images: BTreeMap::from([("a".into(), "ab".into()), ("b".into(), "B".into())]),
        };
        // A ↦ BA, so aA ↦ ab·BA reduces to ε; b ↦ B
        assert_eq!(sub.apply(&Point::word("ab"), &f2, &f2).unwrap(), Point::word("a"));
        assert_eq!(sub.apply(&Point::word("A"), &f2, &f2).unwrap(), Point::word("BA"));
        let konst = MapRule::Constant { point: "0".into() };
        assert_eq!(konst.apply(&l(9), &z, &z).unwrap(), l(0));
    }

    #[test]
    fn nearest_vertex_prefers_the_basepoint_side() {
        let z = SpaceDescriptor::integer_line();
        let g = SpaceDescriptor::subdivision(z.clone());
        let m = g.parse_point("[2|3]").unwrap();
        assert_eq!(MapRule::NearestVertex.apply(&m, &g, &z).unwrap(), Point::int(2));
        let m = g.parse_point("[-3|-2]").unwrap();
        assert_eq!(MapRule::NearestVertex.apply(&m, &g, &z).unwrap(), Point::int(-2));
    }

    #[test]
    fn images_outside_the_target_are_errors() {
        let z = SpaceDescriptor::integer_line();
        let evens = SpaceDescriptor::translations(vec![vec![2], vec![-2]]).unwrap();
        let f = CoarseMapSpec::new(z.clone(), SpaceDescriptor::comb_tree(), MapRule::Identity);
        assert!(f.apply(&Point::int(1)).is_err());
        let g = CoarseMapSpec::new(z, evens, MapRule::Affine { a: 2, b: Coord::Scalar(0) });
        assert_eq!(g.apply(&Point::int(3)).unwrap(), Point::int(6));
    }

    #[test]
    fn probe_radii_double() {
        assert_eq!(probe_radii(16), [4, 8, 16]);
        assert_eq!(probe_radii(2), [1, 1, 2]);
    }
}
