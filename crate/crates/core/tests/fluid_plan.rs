use dissem::fluid::{
    build_transfer_plan, fluid_general_makespan, fluid_single_server, reduce_capacities, upload_volume, verify_plan,
    FluidInstance, TransferPlan,
};
use dissem::rational::{int, ratio};
use dissem::{Error, Rational};
use num_traits::Zero;
use proptest::prelude::*;

fn q(v: &[i64]) -> Vec<Rational> {
    v.iter().map(|&x| int(x)).collect()
}

/// Time user `i` needs to push its share of the plan at capacity `c`:
/// direct copies to all `N-1` others, one copy to each relay, and `N-2`
/// forwards of every file it relays.
fn upload_time(fi: &FluidInstance, plan: &TransferPlan, i: usize, c: &Rational) -> Rational {
    let n = fi.n_users();
    let f = &fi.file_sizes;
    let a = &plan.alpha;
    let mut v = &a[i][i] * &f[i] * int(n as i64 - 1);
    for k in (0..n).filter(|&k| k != i) {
        v += &a[i][k] * &f[i];
        v += &a[k][i] * &f[k] * int(n as i64 - 2);
    }
    v / c
}

#[test]
fn general_makespan_examples() {
    let cases = [(q(&[1, 1]), q(&[1, 1]), int(1)), (q(&[1, 1, 1]), q(&[1, 1, 1]), int(2)), (q(&[6, 1, 1]), q(&[1, 1, 1]), int(6))];
    for (f, c, t) in cases {
        assert_eq!(fluid_general_makespan(&FluidInstance::new(f, c).unwrap()), t);
    }
}

#[test]
fn single_server_examples() {
    assert_eq!(fluid_single_server(4, &int(2), &int(1)).unwrap(), (ratio(2, 3), ratio(2, 3)));
    assert_eq!(fluid_single_server(2, &int(1), &int(1)).unwrap(), (int(1), ratio(1, 2)));
    assert_eq!(fluid_single_server(1, &int(1), &int(7)).unwrap().0, int(1));
}

#[test]
fn symmetric_plan_is_uniform() {
    let fi = FluidInstance::new(q(&[1, 1, 1]), q(&[1, 1, 1])).unwrap();
    let plan = build_transfer_plan(&fi).unwrap();
    assert!(plan.alpha.iter().flatten().all(|a| *a == ratio(1, 3)));
    assert_eq!(plan.makespan, int(2));
    let report = verify_plan(&fi, &plan);
    assert!(report.valid);
    assert_eq!(report.completion_times, vec![int(2); 3]);
}

#[test]
fn two_users_send_directly() {
    let fi = FluidInstance::new(q(&[1, 2]), q(&[1, 1])).unwrap();
    let plan = build_transfer_plan(&fi).unwrap();
    assert_eq!(plan.makespan, int(2));
    assert!(verify_plan(&fi, &plan).valid);
}

#[test]
fn skewed_instance_is_reduced() {
    let fi = FluidInstance::new(q(&[6, 1, 1]), q(&[1, 1, 1])).unwrap();
    let r = reduce_capacities(&fi).unwrap();
    assert_eq!(r.delta, ratio(4, 5));
    assert_eq!(r.gamma, vec![Some(ratio(1, 2)), Some(ratio(5, 2)), Some(ratio(5, 2))]);
    assert_eq!(r.reduced_capacities, vec![int(1), ratio(5, 6), ratio(5, 6)]);
    let total: Rational = r.reduced_capacities.iter().sum();
    assert_eq!(int(2) * fi.total_size() / total, int(6));
    let plan = build_transfer_plan(&fi).unwrap();
    for i in 0..3 {
        assert_eq!(upload_time(&fi, &plan, i, &r.reduced_capacities[i]), int(6));
    }
}

#[test]
fn balanced_instance_is_not_reduced() {
    let fi = FluidInstance::new(q(&[4, 4, 4]), q(&[2, 2, 2])).unwrap();
    assert!(matches!(reduce_capacities(&fi), Err(Error::NotCase2(_))));
}

#[test]
fn broken_plans_are_rejected() {
    let fi = FluidInstance::new(q(&[1, 1, 1]), q(&[1, 1, 1])).unwrap();
    let mut negative = build_transfer_plan(&fi).unwrap();
    negative.alpha[0][1] = ratio(-1, 3);
    negative.alpha[0][0] = int(1);
    assert!(!verify_plan(&fi, &negative).valid);
    let mut short = build_transfer_plan(&fi).unwrap();
    short.alpha[1][1] = &short.alpha[1][1] - ratio(1, 10);
    assert!(!verify_plan(&fi, &short).valid);
}

#[test]
fn invalid_instances() {
    assert!(FluidInstance::new(q(&[1]), q(&[1])).is_err());
    assert!(FluidInstance::new(q(&[0, 0]), q(&[1, 1])).is_err());
    assert!(FluidInstance::new(q(&[1, 1]), q(&[1, 0])).is_err());
    let two_empty = FluidInstance { file_sizes: q(&[0, 0]), capacities: q(&[1, 1]) };
    assert!(build_transfer_plan(&two_empty).is_err());
}

fn instance() -> impl Strategy<Value = FluidInstance> {
    (3usize..=6)
        .prop_flat_map(|n| (prop::collection::vec(0i64..8, n), prop::collection::vec(1i64..6, n)))
        .prop_filter("some file", |(f, _)| f.iter().any(|&x| x > 0))
        .prop_map(|(f, c)| FluidInstance::new(q(&f), q(&c)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn plans_meet_the_optimum(fi in instance()) {
        let plan = build_transfer_plan(&fi).unwrap();
        let t = fluid_general_makespan(&fi);
        prop_assert_eq!(&plan.makespan, &t);
        let report = verify_plan(&fi, &plan);
        prop_assert!(report.valid, "{:?}", report.violations);
        for i in 0..fi.n_users() {
            prop_assert!(upload_time(&fi, &plan, i, &fi.capacities[i]) <= t);
            prop_assert_eq!(upload_volume(&fi, &plan, i), upload_time(&fi, &plan, i, &int(1)));
        }
    }

    #[test]
    fn volume_bound_equalizes_every_user(fi in instance()) {
        let n = fi.n_users() as i64;
        let volume = int(n - 1) * fi.total_size() / fi.total_capacity();
        let bottleneck = (0..fi.n_users()).map(|i| &fi.file_sizes[i] / &fi.capacities[i]).max().unwrap();
        prop_assume!(volume >= bottleneck);
        let plan = build_transfer_plan(&fi).unwrap();
        for i in 0..fi.n_users() {
            prop_assert_eq!(upload_time(&fi, &plan, i, &fi.capacities[i]), volume.clone());
        }
    }

    #[test]
    fn reduction_meets_its_properties(fi in instance()) {
        let Ok(r) = reduce_capacities(&fi) else { return Ok(()); };
        let l = r.leader;
        let target = &fi.file_sizes[l] / &fi.capacities[l];
        let reduced_total: Rational = r.reduced_capacities.iter().sum();
        prop_assert_eq!(&r.reduced_capacities[l], &fi.capacities[l]);
        prop_assert_eq!(int(fi.n_users() as i64 - 1) * fi.total_size() / reduced_total, target.clone());
        for i in 0..fi.n_users() {
            prop_assert!(r.reduced_capacities[i] <= fi.capacities[i]);
            prop_assert!(&fi.file_sizes[i] / &r.reduced_capacities[i] <= target);
        }
        let n1 = int(fi.n_users() as i64 - 1);
        for (i, g) in r.gamma.iter().enumerate() {
            match g {
                Some(g) => prop_assert_eq!(&n1 * &target.recip() * g * &fi.file_sizes[i], r.reduced_capacities[i].clone()),
                None => prop_assert!(fi.file_sizes[i].is_zero()),
            }
        }
    }

    #[test]
    fn server_embedding_matches_single_server(n in 1usize..8, cs in 1i64..6, c1 in 1i64..6) {
        let mut sizes = vec![int(1)];
        sizes.extend(std::iter::repeat(Rational::zero()).take(n));
        let mut caps = vec![int(cs)];
        caps.extend(std::iter::repeat(int(c1)).take(n));
        let fi = FluidInstance::new(sizes, caps).unwrap();
        let (t, _) = fluid_single_server(n, &int(cs), &int(c1)).unwrap();
        prop_assert_eq!(fluid_general_makespan(&fi), t);
    }
}
