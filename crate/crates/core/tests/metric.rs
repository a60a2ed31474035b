use std::collections::{BTreeMap, VecDeque};

use endslab::fixtures;
use endslab::*;

/// Plain BFS over `neighbours`, no shortcuts.
fn bfs(space: &SpaceDescriptor, from: &Point, r: u64) -> BTreeMap<Point, u64> {
    let mut seen = BTreeMap::from([(from.clone(), 0)]);
    let mut queue = VecDeque::from([from.clone()]);
    while let Some(p) = queue.pop_front() {
        let d = seen[&p];
        if d == r {
            continue;
        }
        for q in space.neighbours(&p) {
            seen.entry(q.clone()).or_insert_with(|| {
                queue.push_back(q);
                d + 1
            });
        }
    }
    seen
}

#[test]
fn closed_forms_agree_with_bfs() {
    let l = Limits::default();
    for (name, space) in fixtures::spaces() {
        let base = space.basepoint().clone();
        let near = bfs(&space, &base, 3);
        for center in near.keys() {
            for (p, &d) in &bfs(&space, center, 3) {
                assert_eq!(space.distance(center, p, &l).unwrap(), d, "{name}: {center} → {p}");
            }
        }
        for (p, &d) in &bfs(&space, &base, 6) {
            assert_eq!(space.depth(p, &l).unwrap(), d, "{name}: depth of {p}");
        }
    }
}

#[test]
fn balls_match_bfs() {
    let l = Limits::default();
    for (name, space) in fixtures::spaces() {
        let base = space.basepoint().clone();
        for r in 0..=5 {
            let oracle = bfs(&space, &base, r);
            let w = ball(&space, &base, r, &l).unwrap();
            assert_eq!(w.len(), oracle.len(), "{name} r={r}");
            let on_sphere = oracle.values().filter(|&&d| d == r).count();
            assert_eq!(sphere(&space, &base, r, &l).unwrap().len(), on_sphere, "{name} r={r}");
        }
    }
}

#[test]
fn known_ball_sizes() {
    let l = Limits::default();
    let tree = SpaceDescriptor::word_tree("ab").unwrap();
    for r in 0..8 {
        assert_eq!(ball(&tree, tree.basepoint(), r, &l).unwrap().len(), (1 << (r + 1)) - 1);
    }
    let f2 = fixtures::f2();
    assert_eq!(ball(&f2, f2.basepoint(), 1, &l).unwrap().len(), 5);
    assert_eq!(sphere(&f2, f2.basepoint(), 2, &l).unwrap().len(), 12);
    let z = SpaceDescriptor::integer_line();
    let w = ball(&z, &Point::int(4), 1, &l).unwrap();
    let mut pts = w.points().to_vec();
    pts.sort();
    assert_eq!(pts, [3, 4, 5].map(Point::int).to_vec());
}

#[test]
fn ball_respects_the_cap() {
    let l = Limits::default().with_point_cap(100);
    let f2 = fixtures::f2();
    assert!(matches!(ball(&f2, f2.basepoint(), 6, &l), Err(Error::Resource { .. })));
}

#[test]
fn window_round_trips_through_its_document() {
    let l = Limits::default();
    let w = ball(&fixtures::f2(), &Point::word("ab"), 2, &l).unwrap();
    let back = Window::from_doc(&w.to_doc()).unwrap();
    // documents carry no descriptor, so points come back by name
    let names = |w: &Window| w.points().iter().map(ToString::to_string).collect::<Vec<_>>();
    assert_eq!(names(&back), names(&w));
    assert_eq!(back.distance_table(), w.distance_table());
}
