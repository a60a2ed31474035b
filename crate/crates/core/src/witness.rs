//! A single coarse sequence containing both `s` and `t` as subsequences,
//! built from an ε-certificate by alternating runs along the two sequences
//! joined by the certificate's chains.
//!
//! Round `r` (`X = s` for even `r`, `X = t` for odd `r`, `Y` the other):
//! run `X` forward from `N_{r-2}` to `N_r`, cross the chain `u^r` to
//! `Y(N_r)`, then run `Y` backward to `N_{r-1}` (with `N_{-1} = N_{-2} = 0`).
//! Forward runs embed `X`; the backward runs are not embedded, except that
//! `t(0)` is embedded where round 0 ends.

use serde::{Deserialize, Serialize};

use crate::coarse::Dist;
use crate::epsilon::{EpsCertificate, VerifyReport};
use crate::error::{Error, Result};
use crate::point::Point;
use crate::sequences::{escape_index, CoarseSequence};
use crate::spaces::{Limits, SpaceDescriptor};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub space: SpaceDescriptor,
    pub s: CoarseSequence,
    pub t: CoarseSequence,
    /// Threshold of the certificate the witness was built from.
    pub k: Dist,
    /// The witness as an explicit finite sequence.
    pub sequence: CoarseSequence,
    /// `s(i) = w(s_map[i])`.
    pub s_map: Vec<usize>,
    pub t_map: Vec<usize>,
    /// `escape[r]`: a position from which every point of `w` is outside `B(ξ; r)`.
    pub escape: Vec<usize>,
}

impl Witness {
    pub fn points(&self) -> Result<Vec<Point>> {
        let n = self.sequence.len().ok_or_else(|| Error::input("witness sequence must be finite"))?;
        self.sequence.prefix(&self.space, n)
    }

    pub fn step_bound(&self) -> Dist {
        self.s.step_bound.max(self.t.step_bound).max(self.k)
    }
}

pub fn build_witness(cert: &EpsCertificate, limits: &Limits) -> Result<Witness> {
    let n: Vec<usize> = cert.entries.iter().map(|e| e.n).collect();
    if n.is_empty() {
        return Err(Error::input("certificate has no entries"));
    }
    if n.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::input("certificate indices N_r are not strictly increasing"));
    }
    let space = &cert.space;
    let p = cert.prefix;
    let ps = cert.s.prefix(space, p)?;
    let pt = cert.t.prefix(space, p)?;
    let step_bound = cert.s.step_bound.max(cert.t.step_bound).max(cert.k);

    if ps == pt {
        let ident: Vec<usize> = (0..p).collect();
        return finish(cert, ps, ident.clone(), ident, step_bound, limits);
    }

    let at = |r: isize| if r < 0 { 0 } else { n[r as usize] };
    let mut points: Vec<Point> = Vec::new();
    let mut s_map = Vec::new();
    let mut t_map = Vec::new();
    for (r, entry) in cert.entries.iter().enumerate() {
        let r = r as isize;
        let (x, y, x_map) = if r % 2 == 0 { (&ps, &pt, &mut s_map) } else { (&pt, &ps, &mut t_map) };
        let start = at(r - 2);
        for (i, q) in x.iter().enumerate().take(at(r) + 1).skip(start) {
            // the run resumes where the previous back-run stopped
            if !(i == start && !points.is_empty()) {
                points.push(q.clone());
            }
            if i >= x_map.len() {
                x_map.push(points.len() - 1);
            }
        }
        let chain = entry
            .chain
            .points
            .iter()
            .map(|q| space.canonical(q))
            .collect::<Result<Vec<_>>>()?;
        if r % 2 == 0 {
            points.extend(chain.into_iter().skip(1));
        } else {
            points.extend(chain.into_iter().rev().skip(1));
        }
        points.extend(y[at(r - 1)..at(r)].iter().rev().cloned());
        if r == 0 {
            t_map.push(points.len() - 1);
        }
    }
    finish(cert, points, s_map, t_map, step_bound, limits)
}

fn finish(
    cert: &EpsCertificate,
    points: Vec<Point>,
    s_map: Vec<usize>,
    t_map: Vec<usize>,
    step_bound: Dist,
    limits: &Limits,
) -> Result<Witness> {
    let depths = points
        .iter()
        .map(|q| cert.space.depth(q, limits))
        .collect::<Result<Vec<_>>>()?;
    let escape = (0..=cert.r_max)
        .map(|r| {
            escape_index(&depths, r)
                .ok_or_else(|| Error::input(format!("witness ends inside B(ξ; {r})")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Witness {
        space: cert.space.clone(),
        s: cert.s.clone(),
        t: cert.t.clone(),
        k: cert.k,
        sequence: CoarseSequence::explicit(&points, &[], step_bound),
        s_map,
        t_map,
        escape,
    })
}

/// Replays the three witness properties: exact subsequence embeddings,
/// the step bound `max(K_s, K_t, K)`, and escape positions up to `r_probe`.
pub fn verify_witness(w: &Witness, r_probe: u64, limits: &Limits) -> VerifyReport {
    let mut failures = Vec::new();
    if let Err(e) = replay(w, r_probe, limits, &mut failures) {
        failures.push(e.to_string());
    }
    VerifyReport {
        ok: failures.is_empty(),
        failures,
    }
}

fn replay(w: &Witness, r_probe: u64, limits: &Limits, failures: &mut Vec<String>) -> Result<()> {
    let space = &w.space;
    let pts = match w.points() {
        Ok(p) => p,
        Err(e) => {
            failures.push(format!("witness points: {e}"));
            return Ok(());
        }
    };
    for (name, seq, map) in [("s", &w.s, &w.s_map), ("t", &w.t, &w.t_map)] {
        if map.is_empty() {
            failures.push(format!("{name} map is empty"));
        }
        if let Some(i) = map.windows(2).position(|m| m[1] <= m[0]) {
            failures.push(format!("{name} map is not strictly increasing at {i}"));
        }
        for (i, &pos) in map.iter().enumerate() {
            let want = seq.eval(space, i)?;
            match pts.get(pos) {
                Some(q) if *q == want => {}
                Some(q) => {
                    failures.push(format!("{name}({i}) = {want} but w({pos}) = {q}"));
                    break;
                }
                None => {
                    failures.push(format!("{name} map sends {i} past the end of w"));
                    break;
                }
            }
        }
    }
    let bound = w.step_bound();
    if w.sequence.step_bound > bound {
        failures.push(format!("declared step bound {} exceeds max(K_s, K_t, K) = {bound}", w.sequence.step_bound));
    }
    for (i, pair) in pts.windows(2).enumerate() {
        if !space.within(&pair[0], &pair[1], bound, limits)? {
            failures.push(format!("step {i}: {} → {} is longer than {bound}", pair[0], pair[1]));
        }
    }
    let depths = pts.iter().map(|q| space.depth(q, limits)).collect::<Result<Vec<_>>>()?;
    if (w.escape.len() as u64) <= r_probe {
        failures.push(format!("escape positions cover radii up to {}, not {r_probe}", w.escape.len() as i64 - 1));
    }
    for (r, &e) in w.escape.iter().enumerate().take(r_probe as usize + 1) {
        if e >= pts.len() {
            failures.push(format!("escape position for r={r} is past the end of w"));
        } else if let Some(m) = (e..pts.len()).find(|&m| depths[m] <= r as Dist) {
            failures.push(format!("r={r}: w({m}) = {} re-enters B(ξ; {r}) after position {e}", pts[m]));
        }
    }
    if w.escape.windows(2).any(|e| e[1] < e[0]) {
        failures.push("escape positions decrease".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epsilon::{epsilon_equivalent, EpsOptions};

    #[test]
    fn rounds_alternate_and_embed_both_sequences() {
        let z = SpaceDescriptor::integer_line();
        let l = Limits::default();
        let s = CoarseSequence::affine(1, 0, 1);
        let t = CoarseSequence::affine(1, 3, 1);
        let v = epsilon_equivalent(&s, &t, &z, &EpsOptions::new(1, 3), &l).unwrap();
        let cert = v.certificate().unwrap();
        let w = build_witness(cert, &l).unwrap();
        let pts = w.points().unwrap();
        // round 0 starts along s from s(0)
        assert_eq!(pts[0], Point::int(0));
        assert_eq!(w.s_map[0], 0);
        assert_eq!(w.s_map.len(), cert.entries[2].n + 1);
        assert_eq!(w.t_map.len(), cert.entries[3].n + 1);
        assert!(verify_witness(&w, 3, &l).ok);
    }

    #[test]
    fn non_increasing_indices_are_refused() {
        let z = SpaceDescriptor::integer_line();
        let l = Limits::default();
        let s = CoarseSequence::affine(1, 0, 1);
        let v = epsilon_equivalent(&s, &CoarseSequence::affine(1, 1, 1), &z, &EpsOptions::new(1, 2), &l).unwrap();
        let mut cert = v.certificate().unwrap().clone();
        cert.entries[1].n = cert.entries[0].n;
        assert!(matches!(build_witness(&cert, &l), Err(Error::Input(_))));
    }
}
