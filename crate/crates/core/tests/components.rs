use endslab::components::{default_margin, ComponentEngine, EngineChoice};
use endslab::fixtures;
use endslab::*;

fn tree_spaces() -> Vec<(&'static str, SpaceDescriptor)> {
    vec![
        ("Z", SpaceDescriptor::integer_line()),
        ("F2", fixtures::f2()),
        ("comb", SpaceDescriptor::comb_tree()),
        ("ab tree", SpaceDescriptor::word_tree("ab").unwrap()),
    ]
}

#[test]
fn engines_agree_on_profiles() {
    let l = Limits::default();
    for (name, space) in tree_spaces() {
        // F₂ windows outgrow the cap past K = 2
        let (k_top, r_max) = if space.is_free_group() { (2, 2) } else { (3, 4) };
        for k in 1..=k_top {
            let margin = default_margin(k);
            let w = end_profile(&space, k, r_max, margin, EngineChoice::Window, &l).unwrap();
            let t = end_profile(&space, k, r_max, margin, EngineChoice::Tree, &l).unwrap();
            assert_eq!(w.counts, t.counts, "{name} K={k}");
        }
    }
}

#[test]
fn engines_agree_on_threads() {
    let l = Limits::default();
    for (name, space) in tree_spaces() {
        for k in 1..=2 {
            let margin = default_margin(k);
            let w = component_threads(&space, k, 3, margin, EngineChoice::Window, &l).unwrap();
            let t = component_threads(&space, k, 3, margin, EngineChoice::Tree, &l).unwrap();
            let paths = |s: &ThreadSystem| s.threads.iter().map(|t| t.path.clone()).collect::<Vec<_>>();
            assert_eq!(paths(&w), paths(&t), "{name} K={k}");
        }
    }
}

#[test]
fn tree_engine_is_unavailable_off_trees() {
    let l = Limits::default();
    assert!(ComponentEngine::new(&fixtures::grid2(), 1, 6, 3, EngineChoice::Tree, &l).is_err());
}

#[test]
fn word_tree_threads_biject_with_deep_nodes() {
    let l = Limits::default();
    let space = SpaceDescriptor::word_tree("ab").unwrap();
    let r_max = 4;
    let system = component_threads(&space, 1, r_max, default_margin(1), EngineChoice::Auto, &l).unwrap();
    let mut nodes: Vec<Point> = sphere(&space, space.basepoint(), r_max + 1, &l).unwrap();
    nodes.sort();
    let ends: Vec<Point> = system.threads.iter().map(|t| t.path.last().unwrap().clone()).collect();
    assert_eq!(ends, nodes);
    for t in &system.threads {
        // each step of a thread is a prefix of the next
        for pair in t.path.windows(2) {
            let (a, b) = (pair[0].as_word().unwrap(), pair[1].as_word().unwrap());
            assert!(b.starts_with(a));
        }
    }
}

#[test]
fn z_rays_separate_once_the_gap_exceeds_k() {
    let l = Limits::default();
    for k in 1..=6 {
        let p = end_profile(&SpaceDescriptor::integer_line(), k, 12, default_margin(k), EngineChoice::Window, &l).unwrap();
        // outside B(0; r) the rays are 2r + 2 apart
        let expected: Vec<usize> = (1..=12u64).map(|r| if 2 * r + 2 > k { 2 } else { 1 }).collect();
        assert_eq!(p.counts, expected, "K={k}");
        assert_eq!(p.classification, Classification::Finite(2));
    }
}

#[test]
fn dead_classes_are_not_counted() {
    let l = Limits::default();
    // the b-teeth of the comb die only at the horizon, so every tooth rooted
    // beyond depth r is live; a finite explicit graph has no live class at all
    let mut adj = std::collections::BTreeMap::new();
    for (a, b) in [("o", "x"), ("x", "y"), ("y", "z")] {
        adj.entry(a.to_string()).or_insert_with(Vec::new).push(b.to_string());
        adj.entry(b.to_string()).or_insert_with(Vec::new).push(a.to_string());
    }
    let path = SpaceDescriptor::explicit(adj).unwrap().with_basepoint("o").unwrap();
    let p = end_profile(&path, 1, 2, 4, EngineChoice::Window, &l).unwrap();
    assert_eq!(p.counts, vec![0, 0]);
}

#[test]
fn chains_between_points_of_one_class() {
    let l = Limits::default();
    let f2 = fixtures::f2();
    let w = ball(&f2, f2.basepoint(), 5, &l).unwrap();
    let region = BoundedRegion::new(Point::word(""), 1);
    let c = chain_between(&w, &Point::word("aab"), &Point::word("aBB"), 2, &region).unwrap().unwrap();
    c.check(&f2, 1, &l).unwrap();
    assert!(chain_between(&w, &Point::word("aab"), &Point::word("bb"), 2, &region).unwrap().is_none());
}
