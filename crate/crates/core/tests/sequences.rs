use endslab::*;

fn l() -> Limits {
    Limits::default()
}

/// Least `N` with `|s(m)| > r` for every `N ≤ m < len`, by brute force.
fn escape_oracle(values: &[i64], r: u64) -> Option<usize> {
    (0..values.len()).find(|&n| values[n..].iter().all(|v| v.unsigned_abs() > r)).filter(|&n| n < values.len())
}

#[test]
fn validation_matches_brute_force() {
    let z = SpaceDescriptor::integer_line();
    let cases: Vec<(CoarseSequence, Vec<i64>)> = vec![
        (CoarseSequence::affine(1, 0, 1), (0..40).collect()),
        (CoarseSequence::affine(-3, 2, 3), (0..40).map(|i| 2 - 3 * i).collect()),
        (
            CoarseSequence::explicit(&[], &(0..10).map(Point::int).collect::<Vec<_>>(), 9),
            (0..40).map(|i| i % 10).collect(),
        ),
        (CoarseSequence::new(SeqRule::Polynomial { coeffs: vec![0, 0, 1] }, 5), (0..40).map(|i| i * i).collect()),
    ];
    for (s, values) in cases {
        let rep = validate_coarse(&s, &z, 40, 12, &l()).unwrap();
        let steps: Vec<u64> = values.windows(2).map(|w| w[0].abs_diff(w[1])).collect();
        assert_eq!(rep.max_step, *steps.iter().max().unwrap());
        assert_eq!(rep.first_bad_step, steps.iter().position(|&d| d > s.step_bound));
        let escape: Vec<Option<usize>> = (0..=12).map(|r| escape_oracle(&values, r)).collect();
        assert_eq!(rep.escape, escape);
        assert_eq!(rep.proper_ok, escape.iter().all(Option::is_some));
    }
}

#[test]
fn mapped_sequences_push_forward() {
    let z = SpaceDescriptor::integer_line();
    let evens = SpaceDescriptor::translations(vec![vec![2], vec![-2]]).unwrap();
    let s = CoarseSequence::new(
        SeqRule::Mapped {
            map: MapRule::Inclusion,
            source: Box::new(evens),
            base: Box::new(SeqRule::Affine {
                a: endslab::sequences::Coord::Scalar(2),
                b: endslab::sequences::Coord::Scalar(0),
            }),
        },
        2,
    );
    assert_eq!(s.prefix(&z, 4).unwrap(), [0, 2, 4, 6].map(Point::int).to_vec());
}

#[test]
fn short_prefixes_are_rejected() {
    let z = SpaceDescriptor::integer_line();
    assert!(validate_coarse(&CoarseSequence::affine(1, 0, 1), &z, 1, 3, &l()).is_err());
}
