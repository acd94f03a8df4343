use dissem::equal::{build_schedule, optimal_makespan_equal, optimal_rounds, replica_profile, unused_upload_slots};
use dissem::exact::{brute_force_rounds, min_makespan, exact_tau};
use dissem::rational::{int, ratio};
use dissem::{verify_schedule, Instance, RoundSchedule, Transfer, SERVER};
use proptest::prelude::*;

/// Replays a round schedule and counts holders of each part after every round.
fn replay_counts(rs: &RoundSchedule, n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut held = vec![vec![false; m]; n + 1];
    let mut out = Vec::new();
    for round in &rs.rounds {
        for t in round {
            held[t.downloader][t.part - 1] = true;
        }
        out.push((0..m).map(|k| (1..=n).filter(|&p| held[p][k]).count()).collect());
    }
    out
}

#[test]
fn three_peers_two_parts_matches_the_worked_diagram() {
    let rs = build_schedule(3, 2).unwrap();
    assert_eq!(rs.n_rounds(), 3);
    let p = replica_profile(&rs, 3, 2).unwrap();
    let part1: Vec<usize> = (1..=3).map(|r| p.count(r, 1)).collect();
    let part2: Vec<usize> = (1..=3).map(|r| p.count(r, 2)).collect();
    assert_eq!((part1, part2), (vec![1, 2, 3], vec![0, 1, 3]));
    let inst = Instance::equal(3, 2, int(1)).unwrap();
    let report = verify_schedule(&inst, &rs.to_continuous(&int(1)), true);
    assert!(report.valid);
    assert_eq!(report.makespan, Some(ratio(3, 2)));
}

#[test]
fn single_peer_gets_parts_in_order() {
    let rs = build_schedule(1, 3).unwrap();
    let flat: Vec<Transfer> = rs.rounds.iter().flatten().copied().collect();
    let expect: Vec<Transfer> = (1..=3).map(|k| Transfer { uploader: SERVER, downloader: 1, part: k }).collect();
    assert_eq!(flat, expect);
}

#[test]
fn seven_peers_three_parts() {
    let rs = build_schedule(7, 3).unwrap();
    assert_eq!(rs.n_rounds(), 5);
    let counts = replay_counts(&rs, 7, 3);
    let part = |k: usize| -> Vec<usize> { (3..=5).map(|r| counts[r - 1][k - 1]).collect() };
    assert_eq!(part(1), vec![4, 7, 7]);
    assert_eq!(part(3), vec![1, 3, 7]);
    assert_eq!(brute_force_rounds(3, 3).unwrap(), optimal_rounds(3, 3));
}

#[test]
fn fifteen_peers_round_four_doubles_part_one() {
    let p = replica_profile(&build_schedule(15, 4).unwrap(), 15, 4).unwrap();
    assert_eq!(p.count(4, 1), 8);
}

#[test]
fn example_round_counts() {
    assert_eq!(optimal_rounds(1, 5), 5);
    assert_eq!(optimal_rounds(3, 2), 3);
    assert_eq!(optimal_rounds(13, 4), 7);
    assert_eq!(optimal_makespan_equal(4, 2, &int(2)), int(1));
}

#[test]
fn doubled_capacity_halves_the_makespan() {
    let inst = Instance::equal(4, 2, int(2)).unwrap();
    let rs = build_schedule(4, 2).unwrap();
    let report = verify_schedule(&inst, &rs.to_continuous(&int(2)), true);
    assert!(report.valid);
    assert_eq!(report.makespan, Some(int(1)));
    assert_eq!(min_makespan(&inst, &exact_tau(&inst)).unwrap().makespan, int(1));
}

#[test]
fn replica_profile_rejects_broken_schedules() {
    let mut rs = build_schedule(3, 2).unwrap();
    rs.rounds[0][0].uploader = 2;
    assert!(replica_profile(&rs, 3, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schedules_are_optimal_and_valid(n in 1usize..=64, m in 1usize..=8) {
        let rs = build_schedule(n, m).unwrap();
        prop_assert_eq!(rs.n_rounds(), optimal_rounds(n, m));
        prop_assert_eq!(rs.n_transfers(), n * m);
        let inst = Instance::equal(n, m, int(1)).unwrap();
        let report = verify_schedule(&inst, &rs.to_continuous(&int(1)), true);
        prop_assert!(report.valid);
        let profile = replica_profile(&rs, n, m).unwrap();
        prop_assert_eq!(profile.counts, replay_counts(&rs, n, m));
    }

    #[test]
    fn unused_slots_follow_the_accounting_identity(n in 1usize..=100, m in 1usize..=8) {
        let lg = usize::BITS - 1 - n.leading_zeros();
        let x = n + 1 - (1usize << lg);
        let rs = build_schedule(n, m).unwrap();
        prop_assert_eq!(unused_upload_slots(&rs, n) + 2 * x, n + m);
    }

    #[test]
    fn makespan_is_monotone(n in 1usize..500, m in 1usize..20) {
        let one = int(1);
        prop_assert!(optimal_makespan_equal(n, m, &one) <= optimal_makespan_equal(n + 1, m, &one));
        prop_assert!(optimal_makespan_equal(n, m + 1, &one) <= optimal_makespan_equal(n, m, &one));
        prop_assert!(optimal_makespan_equal(n, m, &one) >= one);
    }

    #[test]
    fn verifier_is_deterministic(n in 1usize..=20, m in 1usize..=4, drop in 0usize..50) {
        let mut sched = build_schedule(n, m).unwrap().to_continuous(&int(1));
        let k = drop % sched.uploads.len();
        sched.uploads.remove(k);
        let inst = Instance::equal(n, m, int(1)).unwrap();
        let a = verify_schedule(&inst, &sched, true);
        let b = verify_schedule(&inst, &sched, true);
        prop_assert!(!a.valid);
        prop_assert_eq!(a, b);
    }
}
