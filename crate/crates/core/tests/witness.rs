use proptest::prelude::*;

use endslab::fixtures;
use endslab::sequences::SeqRule;
use endslab::*;

fn l() -> Limits {
    Limits::default()
}

fn witness_for(s: &CoarseSequence, t: &CoarseSequence, space: &SpaceDescriptor, r_max: u64) -> Witness {
    let v = epsilon_equivalent(s, t, space, &EpsOptions::new(1, r_max), &l()).unwrap();
    build_witness(v.certificate().expect("equivalent"), &l()).unwrap()
}

fn explicit_points(w: &Witness) -> Vec<Point> {
    assert!(matches!(w.sequence.rule, SeqRule::Explicit { .. }));
    w.points().unwrap()
}

fn with_points(w: &Witness, pts: Vec<Point>) -> Witness {
    let mut w = w.clone();
    w.sequence = CoarseSequence::explicit(&pts, &[], w.sequence.step_bound);
    w
}

#[test]
fn fixture_witnesses_verify() {
    for pair in fixtures::sequence_pairs() {
        let v = epsilon_equivalent(&pair.s, &pair.t, &pair.space, &EpsOptions::new(1, 6), &l()).unwrap();
        if let Some(c) = v.certificate() {
            let w = build_witness(c, &l()).unwrap();
            let report = verify_witness(&w, 6, &l());
            assert!(report.ok, "{}: {:?}", pair.name, report.failures);
        }
    }
}

#[test]
fn identical_prefixes_give_identity_maps() {
    let s = CoarseSequence::affine(1, 0, 1);
    let w = witness_for(&s, &s, &SpaceDescriptor::integer_line(), 4);
    assert_eq!(w.s_map, w.t_map);
    assert!(w.s_map.iter().enumerate().all(|(i, &j)| i == j));
}

#[test]
fn moving_a_point_inside_a_ball_breaks_it() {
    let z = SpaceDescriptor::integer_line();
    let w = witness_for(&CoarseSequence::affine(1, 0, 1), &CoarseSequence::affine(1, 3, 1), &z, 4);
    let mut pts = explicit_points(&w);
    let last = pts.len() - 1;
    // late points must stay outside every probed ball
    pts[last] = Point::int(0);
    assert!(!verify_witness(&with_points(&w, pts), 4, &l()).ok);
}

#[test]
fn shifting_a_map_breaks_it() {
    let z = SpaceDescriptor::integer_line();
    let w = witness_for(&CoarseSequence::affine(1, 0, 1), &CoarseSequence::affine(2, 1, 2), &z, 4);
    let mut bad = w.clone();
    let i = bad.t_map.len() / 2;
    bad.t_map[i] += 1;
    assert!(!verify_witness(&bad, 4, &l()).ok);
    let mut bad = w;
    bad.s_map.swap(0, 1);
    assert!(!verify_witness(&bad, 4, &l()).ok);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn witnesses_interleave_both_sequences(b in -4i64..4, c in 1i64..3, d in -4i64..4) {
        let z = SpaceDescriptor::integer_line();
        let s = CoarseSequence::affine(1, b, 1);
        let t = CoarseSequence::affine(c, d, c as u64);
        let w = witness_for(&s, &t, &z, 5);
        prop_assert!(verify_witness(&w, 5, &l()).ok);
        let pts = explicit_points(&w);
        for (i, &j) in w.s_map.iter().enumerate() {
            prop_assert_eq!(&pts[j], &s.eval(&z, i).unwrap());
        }
        for (i, &j) in w.t_map.iter().enumerate() {
            prop_assert_eq!(&pts[j], &t.eval(&z, i).unwrap());
        }
        for pair in pts.windows(2) {
            prop_assert!(z.distance(&pair[0], &pair[1], &l()).unwrap() <= w.step_bound());
        }
    }
}
