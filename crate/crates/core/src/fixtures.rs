//! Bundled spaces, sequence pairs and maps used by the test suites and the
//! `spaces` command.

use crate::maps::{CoarseMapSpec, MapRule};
use crate::sequences::{Coord, CoarseSequence};
use crate::spaces::SpaceDescriptor;

pub fn spaces() -> Vec<(&'static str, SpaceDescriptor)> {
    vec![
        ("integer_line", SpaceDescriptor::integer_line()),
        ("integer_grid_2", grid2()),
        ("free_group_2", f2()),
        ("word_tree_ab", SpaceDescriptor::word_tree("ab").expect("static alphabet")),
        ("comb_tree", SpaceDescriptor::comb_tree()),
        ("even_integers", even_integers()),
        ("subdivided_line", subdivided_line()),
    ]
}

pub fn grid2() -> SpaceDescriptor {
    SpaceDescriptor::integer_grid(2).expect("dim 2")
}

pub fn f2() -> SpaceDescriptor {
    SpaceDescriptor::free_group(2).expect("rank 2")
}

/// 2ℤ as the component of 0 in the Cayley graph of ℤ for `{±2}`.
pub fn even_integers() -> SpaceDescriptor {
    SpaceDescriptor::translations(vec![vec![2], vec![-2]]).expect("static generators")
}

/// The line with every edge split by a midpoint: vertices plus edges.
pub fn subdivided_line() -> SpaceDescriptor {
    SpaceDescriptor::subdivision(SpaceDescriptor::integer_line())
}

pub struct SeqPair {
    pub name: &'static str,
    pub space: SpaceDescriptor,
    pub s: CoarseSequence,
    pub t: CoarseSequence,
}

fn pair(name: &'static str, space: SpaceDescriptor, s: CoarseSequence, t: CoarseSequence) -> SeqPair {
    SeqPair { name, space, s, t }
}

/// Sequence pairs over ℤ, ℤ², F₂ and the comb tree, both equivalent and not.
pub fn sequence_pairs() -> Vec<SeqPair> {
    let z = SpaceDescriptor::integer_line;
    let comb = SpaceDescriptor::comb_tree;
    let ray = CoarseSequence::word_ray;
    vec![
        pair("Z i ~ i+3", z(), CoarseSequence::affine(1, 0, 1), CoarseSequence::affine(1, 3, 1)),
        pair("Z i vs -i", z(), CoarseSequence::affine(1, 0, 1), CoarseSequence::affine(-1, 0, 1)),
        pair("Z i ~ 2i", z(), CoarseSequence::affine(1, 0, 1), CoarseSequence::affine(2, 0, 2)),
        pair("Z -i ~ -2i-1", z(), CoarseSequence::affine(-1, 0, 1), CoarseSequence::affine(-2, -1, 2)),
        pair(
            "Z2 (i,0) ~ (0,i)",
            grid2(),
            CoarseSequence::affine_vec(&[1, 0], &[0, 0], 1),
            CoarseSequence::affine_vec(&[0, 1], &[0, 0], 1),
        ),
        pair(
            "Z2 (i,0) ~ (-i,0)",
            grid2(),
            CoarseSequence::affine_vec(&[1, 0], &[0, 0], 1),
            CoarseSequence::affine_vec(&[-1, 0], &[0, 0], 1),
        ),
        pair(
            "Z2 (i,i) ~ (-i,3)",
            grid2(),
            CoarseSequence::affine_vec(&[1, 1], &[0, 0], 2),
            CoarseSequence::affine_vec(&[-1, 0], &[0, 3], 1),
        ),
        pair("F2 a^i ~ a^2i", f2(), ray("", "a", 1), ray("", "aa", 2)),
        pair("F2 a^i vs b^i", f2(), ray("", "a", 1), ray("", "b", 1)),
        pair("F2 a^i vs b a^i", f2(), ray("", "a", 1), ray("b", "a", 1)),
        pair("F2 a^i vs (ab)^i", f2(), ray("", "a", 1), ray("", "ab", 2)),
        pair("F2 (ab)^i ~ (ab)^2i", f2(), ray("", "ab", 2), ray("", "abab", 4)),
        pair("F2 A^i ~ A^(i+2)", f2(), ray("", "A", 1), ray("AA", "A", 1)),
        pair("comb a^i vs b^i", comb(), ray("", "a", 1), ray("", "b", 1)),
        pair("comb a^i ~ a^2i", comb(), ray("", "a", 1), ray("", "aa", 2)),
        pair("comb b^i ~ b^2i", comb(), ray("", "b", 1), ray("", "bb", 2)),
        pair("comb ab^i ~ ab^2i", comb(), ray("a", "b", 1), ray("a", "bb", 2)),
        pair("comb ab^i vs aab^i", comb(), ray("a", "b", 1), ray("aa", "b", 1)),
    ]
}

pub fn map(source: SpaceDescriptor, target: SpaceDescriptor, rule: MapRule) -> CoarseMapSpec {
    CoarseMapSpec::new(source, target, rule)
}

pub fn affine_z(a: i64, b: i64) -> CoarseMapSpec {
    let z = SpaceDescriptor::integer_line();
    map(z.clone(), z, MapRule::Affine { a, b: Coord::Scalar(b) })
}

/// 2ℤ ↪ ℤ.
pub fn even_inclusion() -> CoarseMapSpec {
    map(even_integers(), SpaceDescriptor::integer_line(), MapRule::Inclusion)
}

/// ℤ → 2ℤ, `x ↦ 2x`; a coarse inverse of the inclusion.
pub fn doubling_onto_evens() -> CoarseMapSpec {
    map(
        SpaceDescriptor::integer_line(),
        even_integers(),
        MapRule::Affine { a: 2, b: Coord::Scalar(0) },
    )
}

/// V ↪ G for the subdivided line.
pub fn vertex_inclusion() -> CoarseMapSpec {
    map(SpaceDescriptor::integer_line(), subdivided_line(), MapRule::VertexInclusion)
}

/// G → V, each midpoint to its endpoint nearer the basepoint.
pub fn nearest_vertex() -> CoarseMapSpec {
    map(subdivided_line(), SpaceDescriptor::integer_line(), MapRule::NearestVertex)
}

pub fn identity(space: SpaceDescriptor) -> CoarseMapSpec {
    map(space.clone(), space, MapRule::Identity)
}
