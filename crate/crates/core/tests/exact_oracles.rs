use cyclecap::exact::{big_ln, count_exact, cycle_lengths};
use cyclecap::{
    brute_force_oracle, count_constrained, exact_cycle_count_distribution,
    saddle_point_count_approx, Constraint, CycleError,
};
use num_bigint::BigUint;
use proptest::prelude::*;

fn factorial(n: usize) -> BigUint {
    (1..=n as u64).fold(BigUint::from(1u32), |acc, k| acc * k)
}

/// `a_k = sum_{j<=min(k,alpha)} (k-1)...(k-j+1) a_{k-j}`.
fn direct_counts(n: usize, alpha: usize) -> Vec<BigUint> {
    let mut a = vec![BigUint::from(1u32)];
    for k in 1..=n {
        let mut total = BigUint::from(0u32);
        let mut falling = BigUint::from(1u32);
        for j in 1..=alpha.min(k) {
            if j > 1 {
                falling *= (k - j + 1) as u64;
            }
            total += &falling * &a[k - j];
        }
        a.push(total);
    }
    a
}

#[test]
fn matches_brute_force_up_to_eight() {
    for n in 1..=8 {
        for alpha in 1..=n {
            let c = Constraint::new(n, alpha).unwrap();
            let (count, dist) = brute_force_oracle(&c).unwrap();
            assert_eq!(count_constrained(&c).unwrap().total(), &count, "{c}");
            let exact = exact_cycle_count_distribution(&c).unwrap();
            for k in 0..=n + 1 {
                assert!(
                    (exact.prob(k) - dist.prob(k)).abs() <= 1e-10,
                    "{c}, k = {k}"
                );
            }
        }
    }
}

#[test]
fn brute_force_refuses_large_n() {
    let c = Constraint::new(10, 3).unwrap();
    assert!(matches!(brute_force_oracle(&c), Err(CycleError::Domain(_))));
}

#[test]
fn fast_recurrence_matches_direct_sum() {
    for (n, alpha) in [
        (300usize, 1usize),
        (300, 2),
        (300, 17),
        (250, 250),
        (400, 60),
    ] {
        let c = Constraint::new(n, alpha).unwrap();
        let table = count_constrained(&c).unwrap();
        assert_eq!(table.counts(), direct_counts(n, alpha).as_slice(), "{c}");
        assert_eq!(&count_exact(&c).unwrap(), table.total());
    }
}

#[test]
fn unconstrained_and_trivial_cases() {
    for n in [1usize, 5, 30] {
        assert_eq!(
            count_exact(&Constraint::new(n, n).unwrap()).unwrap(),
            factorial(n)
        );
        assert_eq!(
            count_exact(&Constraint::new(n, 1).unwrap()).unwrap(),
            BigUint::from(1u32)
        );
    }
    // involutions
    let inv: Vec<u64> = (0..=10)
        .map(|n| {
            let c = Constraint::new(n.max(1), 2).unwrap();
            if n == 0 {
                1
            } else {
                count_exact(&c).unwrap().try_into().unwrap()
            }
        })
        .collect();
    assert_eq!(inv, vec![1, 1, 2, 4, 10, 26, 76, 232, 764, 2620, 9496]);
}

#[test]
fn log_count_matches_saddle_at_moderate_size() {
    let c = Constraint::new(20_000, 50).unwrap();
    let exact = big_ln(&count_exact(&c).unwrap());
    let approx: f64 = saddle_point_count_approx(&c).unwrap();
    assert!((exact - approx).abs() / exact < 1e-4);
}

#[test]
fn cycle_lengths_of_known_permutation() {
    let mut l = cycle_lengths(&[1, 2, 0, 4, 3, 5]);
    l.sort_unstable();
    assert_eq!(l, vec![1, 2, 3]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn counts_are_monotone_in_alpha(n in 1usize..120, alpha in 1usize..120) {
        let a = count_exact(&Constraint::new(n, alpha).unwrap()).unwrap();
        let b = count_exact(&Constraint::new(n, alpha + 1).unwrap()).unwrap();
        prop_assert!(a <= b);
        prop_assert!(b <= factorial(n));
    }

    #[test]
    fn distribution_is_normalized_with_correct_support(n in 1usize..200, alpha in 1usize..200) {
        let c = Constraint::new(n, alpha).unwrap();
        let d = exact_cycle_count_distribution(&c).unwrap();
        let mass: f64 = d.iter().map(|(_, p)| p).sum();
        prop_assert!((mass - 1.0).abs() < 1e-12);
        prop_assert_eq!(d.support_min(), c.min_cycles());
        prop_assert!(d.prob(c.min_cycles()) > 0.0);
        // P(C = n) = 1/a_n underflows for large n
        if n <= 60 {
            prop_assert!(d.prob(n) > 0.0);
        }
        prop_assert!(d.iter().all(|(_, p)| p >= 0.0));
    }
}
