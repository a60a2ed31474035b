//! Exit criteria. Prints one PASS/FAIL line per criterion and exits non-zero
//! if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use endslab::components::{default_margin, threads_from_engine, ComponentEngine, EngineChoice};
use endslab::fixtures::{self, SeqPair};
use endslab::sequences::escape_index;
use endslab::*;

const R_EPS: u64 = 16;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn limits() -> Limits {
    Limits::default()
}

fn profile_counts(space: &SpaceDescriptor, r_max: u64) -> EndProfile {
    end_profile(space, 1, r_max, default_margin(1), EngineChoice::Auto, &limits()).expect("profile")
}

fn crit_ends_z() -> Outcome {
    let p = profile_counts(&SpaceDescriptor::integer_line(), 32);
    let ok = p.counts.len() == 32 && p.counts.iter().all(|&c| c == 2) && p.classification == Classification::Finite(2);
    outcome(ok, format!("class {}", p.classification))
}

fn crit_ends_z2() -> Outcome {
    let p = profile_counts(&fixtures::grid2(), 24);
    let ok = p.counts.len() == 24 && p.counts.iter().all(|&c| c == 1) && p.classification == Classification::Finite(1);
    outcome(ok, format!("class {}", p.classification))
}

fn crit_free_group() -> Outcome {
    let p = profile_counts(&fixtures::f2(), 8);
    let expected: Vec<usize> = (1..=8).map(|r| 4 * 3usize.pow(r - 1)).collect();
    let ok = p.counts == expected && p.classification == Classification::UncountableGrowth;
    outcome(ok, format!("counts {:?}, expected {:?}, class {}", p.counts, expected, p.classification))
}

fn crit_comb() -> Outcome {
    let p = profile_counts(&SpaceDescriptor::comb_tree(), 48);
    let expected: Vec<usize> = (1..=48).map(|r| r + 2).collect();
    let ok = p.counts == expected && p.classification == Classification::CountableGrowth;
    outcome(ok, format!("class {}", p.classification))
}

fn crit_word_tree() -> Outcome {
    let p = profile_counts(&SpaceDescriptor::word_tree("ab").unwrap(), 10);
    let expected: Vec<usize> = (1..=10).map(|r| 1 << (r + 1)).collect();
    outcome(p.counts == expected, format!("counts {:?}", p.counts))
}

/// Thread of the sequence's tail at `R_EPS`. Where the thread system can be
/// enumerated (every space but F₂) it is built with the window engine and
/// must contain the thread found by direct lookup.
fn tail_thread(pair: &SeqPair, seq: &CoarseSequence) -> Vec<Point> {
    let l = limits();
    let space = &pair.space;
    let choice = if space.is_free_group() { EngineChoice::Tree } else { EngineChoice::Window };
    let horizon = R_EPS + default_margin(4);
    let engine = ComponentEngine::new(space, 1, horizon, R_EPS, choice, &l).unwrap();
    let pts = seq.prefix(space, 64).unwrap();
    let depths: Vec<u64> = pts.iter().map(|p| space.depth(p, &l).unwrap()).collect();
    let m = escape_index(&depths, R_EPS).unwrap();
    let thread = engine.thread_of(&pts[m], R_EPS).unwrap().expect("tail class is live");
    if !space.is_free_group() {
        let system = threads_from_engine(&engine, R_EPS, horizon, &l).unwrap();
        let idx = system.thread_index(thread.last().unwrap()).expect("live class is a thread");
        assert_eq!(system.threads[idx].path, thread);
    }
    thread
}

fn eps(pair: &SeqPair) -> EpsVerdict {
    epsilon_equivalent(&pair.s, &pair.t, &pair.space, &EpsOptions::new(1, R_EPS), &limits()).unwrap()
}

fn crit_eps_threads() -> Outcome {
    let pairs = fixtures::sequence_pairs();
    let mut agree = 0;
    let mut bad = Vec::new();
    for p in &pairs {
        let same = tail_thread(p, &p.s) == tail_thread(p, &p.t);
        if eps(p).is_equivalent() == same {
            agree += 1;
        } else {
            bad.push(p.name);
        }
    }
    let spaces_ok = ["Z ", "Z2 ", "F2 ", "comb "].iter().all(|pre| pairs.iter().any(|p| p.name.starts_with(pre)));
    outcome(
        bad.is_empty() && pairs.len() >= 12 && spaces_ok,
        format!("{agree}/{} pairs agree{}", pairs.len(), if bad.is_empty() { String::new() } else { format!(", disagree: {bad:?}") }),
    )
}

fn certificates() -> Vec<EpsCertificate> {
    fixtures::sequence_pairs()
        .iter()
        .filter_map(|p| eps(p).certificate().cloned())
        .collect()
}

fn crit_witness() -> Outcome {
    let certs = certificates();
    let l = limits();
    let mut passed = 0;
    for c in &certs {
        let w = build_witness(c, &l).unwrap();
        let report = verify_witness(&w, R_EPS, &l);
        let bound_ok = w.sequence.step_bound <= c.s.step_bound.max(c.t.step_bound).max(c.k);
        if report.ok && bound_ok && w.escape.len() as u64 == R_EPS + 1 {
            passed += 1;
        }
    }
    outcome(passed == certs.len() && !certs.is_empty(), format!("{passed}/{} witnesses verified", certs.len()))
}

/// Moves `p` away until it is at least `min_dist` from where it started.
fn displace(space: &SpaceDescriptor, p: &Point, min_dist: u64, rng: &mut ChaCha8Rng) -> Point {
    let l = limits();
    let mut cur = p.clone();
    while space.distance(p, &cur, &l).unwrap() < min_dist {
        let d = space.distance(p, &cur, &l).unwrap();
        let away: Vec<Point> = space
            .neighbours(&cur)
            .into_iter()
            .filter(|q| space.distance(p, q, &l).unwrap() > d)
            .collect();
        cur = away[rng.gen_range(0..away.len())].clone();
    }
    cur
}

fn crit_fuzz() -> Outcome {
    let certs = certificates();
    let l = limits();
    let witnesses: Vec<Witness> = certs.iter().map(|c| build_witness(c, &l).unwrap()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut rejected = 0;
    let trials = 1000;
    for trial in 0..trials {
        let i = rng.gen_range(0..certs.len());
        let accepted = if trial % 2 == 0 {
            let mut c = certs[i].clone();
            let bound = c.k;
            let mut slots: Vec<&mut Point> = Vec::new();
            for e in c.entries.iter_mut() {
                slots.extend(e.chain.points.iter_mut());
            }
            for link in c.s_links.iter_mut().chain(c.t_links.iter_mut()) {
                slots.extend(link.chain.points.iter_mut());
            }
            let j = rng.gen_range(0..slots.len());
            *slots[j] = displace(&certs[i].space, slots[j], 2 * bound + 1, &mut rng);
            verify_certificate(&c, &l).ok
        } else {
            let mut w = witnesses[i].clone();
            let mut pts = w.points().unwrap();
            let bound = w.step_bound();
            let j = rng.gen_range(0..pts.len());
            pts[j] = displace(&w.space, &pts[j], 2 * bound + 1, &mut rng);
            w.sequence = CoarseSequence::explicit(&pts, &[], w.sequence.step_bound);
            verify_witness(&w, R_EPS, &l).ok
        };
        if !accepted {
            rejected += 1;
        }
    }
    outcome(rejected == trials, format!("{rejected}/{trials} corruptions rejected"))
}

fn seq_through(map: &CoarseMapSpec, s: &CoarseSequence, step_bound: u64) -> CoarseSequence {
    CoarseSequence::new(
        SeqRule::Mapped {
            map: map.rule.clone(),
            source: Box::new(map.source.clone()),
            base: Box::new(s.rule.clone()),
        },
        step_bound,
    )
}

fn crit_invariance() -> Outcome {
    let l = limits();
    let (k, r, margin) = (1, 8, default_margin(1));
    let mut failures = Vec::new();
    let ends = |f: &CoarseMapSpec| induced_end_map(f, k, r, margin, &l).unwrap();

    let z = SpaceDescriptor::integer_line();
    let id = fixtures::identity(z.clone());
    let plus5 = fixtures::affine_z(1, 5);
    if !are_close(&id, &plus5, 16, &l).unwrap().close || ends(&id).mapping != ends(&plus5).mapping {
        failures.push("id vs +5");
    }

    let incl = fixtures::vertex_inclusion();
    let near = fixtures::nearest_vertex();
    let v_round = incl.then(&near).unwrap();
    let g_round = near.then(&incl).unwrap();
    let id_v = fixtures::identity(incl.source.clone());
    let id_g = fixtures::identity(incl.target.clone());
    if !are_close(&v_round, &id_v, 16, &l).unwrap().close || ends(&v_round).mapping != ends(&id_v).mapping {
        failures.push("V→G→V vs id");
    }
    if !are_close(&g_round, &id_g, 16, &l).unwrap().close || ends(&g_round).mapping != ends(&id_g).mapping {
        failures.push("G→V→G vs id");
    }

    let even = fixtures::even_inclusion();
    for (name, f) in [("2Z→Z", &even), ("V→G", &incl)] {
        if !ends(f).is_bijection() {
            failures.push(name);
        }
    }

    // verdicts before and after pushing both sequences through the equivalence
    let transport = |f: &CoarseMapSpec, s: CoarseSequence, t: CoarseSequence, stretch: u64| {
        let opts = EpsOptions::new(1, R_EPS);
        let before = epsilon_equivalent(&s, &t, &f.source, &opts, &l).unwrap().is_equivalent();
        let (fs, ft) = (seq_through(f, &s, s.step_bound * stretch), seq_through(f, &t, t.step_bound * stretch));
        let after = epsilon_equivalent(&fs, &ft, &f.target, &opts, &l).unwrap().is_equivalent();
        before == after
    };
    let evens = |a: i64, b: i64| CoarseSequence::affine(2 * a, 2 * b, a.unsigned_abs());
    let cases = [
        transport(&even, evens(1, 0), evens(1, 2), 2),
        transport(&even, evens(1, 0), evens(-1, 0), 2),
        transport(&even, evens(1, 0), evens(2, 0), 2),
        transport(&incl, CoarseSequence::affine(1, 0, 1), CoarseSequence::affine(1, 3, 1), 2),
        transport(&incl, CoarseSequence::affine(1, 0, 1), CoarseSequence::affine(-1, 0, 1), 2),
        transport(&incl, CoarseSequence::affine(-1, 0, 1), CoarseSequence::affine(-2, -1, 2), 2),
    ];
    if cases.iter().any(|c| !c) {
        failures.push("ε verdict transport");
    }
    outcome(failures.is_empty(), if failures.is_empty() { "all fixtures".to_string() } else { format!("failed: {failures:?}") })
}

/// Brute-force classes: the transitive closure of the K-hop relation read
/// off the all-pairs distance table, with a class live iff it holds a point
/// at the horizon.
fn closure_classes(w: &Window, table: &[Vec<u64>], r: u64, k: u64) -> Vec<(Vec<Point>, bool)> {
    let outside: Vec<usize> = (0..w.len()).filter(|&i| w.depth(i) > r).collect();
    let mut closed: Vec<Option<usize>> = vec![None; outside.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for a in 0..outside.len() {
        if closed[a].is_some() {
            continue;
        }
        let id = classes.len();
        let mut members = vec![a];
        closed[a] = Some(id);
        let mut i = 0;
        while i < members.len() {
            let x = outside[members[i]];
            for (b, &y) in outside.iter().enumerate() {
                if closed[b].is_none() && table[x][y] <= k {
                    closed[b] = Some(id);
                    members.push(b);
                }
            }
            i += 1;
        }
        classes.push(members);
    }
    let mut out: Vec<(Vec<Point>, bool)> = classes
        .into_iter()
        .map(|members| {
            let live = members.iter().any(|&b| w.depth(outside[b]) == w.horizon());
            let mut pts: Vec<Point> = members.iter().map(|&b| w.point(outside[b]).clone()).collect();
            pts.sort();
            (pts, live)
        })
        .collect();
    out.sort();
    out
}

fn crit_partition_oracle() -> Outcome {
    let l = limits();
    let spaces = [
        (SpaceDescriptor::integer_line(), 12),
        (fixtures::grid2(), 12),
        (fixtures::f2(), 4),
        (SpaceDescriptor::comb_tree(), 14),
        (SpaceDescriptor::word_tree("ab").unwrap(), 7),
        (fixtures::even_integers(), 10),
        (fixtures::subdivided_line(), 10),
    ];
    let mut windows = 0;
    let mut mismatches = 0;
    for (space, horizon) in spaces {
        let w = ball(&space, space.basepoint(), horizon, &l).unwrap();
        assert!(w.len() <= 500, "window of {} points", w.len());
        let table = w.distance_table();
        for k in 1..=4 {
            for r in 0..horizon {
                windows += 1;
                let part = k_components(&w, &BoundedRegion::new(space.basepoint().clone(), r), k).unwrap();
                let mut got: Vec<(Vec<Point>, bool)> = part.classes.iter().map(|c| (c.members.clone(), c.live)).collect();
                got.sort();
                if got != closure_classes(&w, &table, r, k) {
                    mismatches += 1;
                }
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of {windows} partitions differ"))
}

fn main() {
    type Criterion = (u32, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        (1, "ends of the integer line: counts 2, finite(2)", Duration::from_secs(1), crit_ends_z),
        (2, "ends of the square grid: counts 1, finite(1)", Duration::from_secs(5), crit_ends_z2),
        (3, "free group F2: counts 4*3^(r-1), uncountable-growth", Duration::from_secs(30), crit_free_group),
        (4, "comb tree: counts r+2, countable-growth", Duration::from_secs(5), crit_comb),
        (5, "binary word tree: counts 2^(r+1)", Duration::from_secs(10), crit_word_tree),
        (6, "epsilon verdicts match same-thread membership", Duration::from_secs(60), crit_eps_threads),
        (7, "witness round trip for every certificate", Duration::from_secs(60), crit_witness),
        (8, "1000 single-point corruptions rejected", Duration::from_secs(60), crit_fuzz),
        (9, "closeness and coarse-equivalence invariance", Duration::from_secs(30), crit_invariance),
        (10, "k_components matches transitive closure", Duration::from_secs(60), crit_partition_oracle),
    ];
    let mut failed = 0;
    for (n, name, limit, run) in criteria {
        let start = Instant::now();
        let o = run();
        let elapsed = start.elapsed();
        let pass = o.pass && elapsed < limit;
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{n:>2}] {name} ({}; {:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            o.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
