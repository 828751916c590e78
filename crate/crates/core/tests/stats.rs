use proptest::prelude::*;
use ramstat_core::stats::{
    density_below, gaussian_moment, normal_cdf, normal_order_violations, FilterTag,
    MomentAccumulator, ValueHistogram,
};

fn accumulate(samples: &[i64], k_max: u32) -> MomentAccumulator {
    let mut acc = MomentAccumulator::new(k_max).unwrap();
    for &x in samples {
        acc.push(x).unwrap();
    }
    acc
}

/// Double factorial reference for E[Z^k].
fn gaussian_reference(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(f64::from).product()
}

#[test]
fn gaussian_moments_match_double_factorial() {
    for k in 0..=16 {
        assert_eq!(gaussian_moment(k), gaussian_reference(k), "k = {k}");
    }
    for k in 2..=16 {
        assert_eq!(
            gaussian_moment(k),
            f64::from(k - 1) * gaussian_moment(k - 2)
        );
    }
}

#[test]
fn normal_cdf_reference_values() {
    // Values of Phi to 15 digits.
    let table = [
        (0.0, 0.5),
        (1.0, 0.841_344_746_068_543),
        (1.96, 0.975_002_104_851_780),
        (-2.5, 0.006_209_665_325_776_13),
        (3.0, 0.998_650_101_968_370),
        (-6.0, 9.865_876_450_376_98e-10),
    ];
    for (z, want) in table {
        let got = normal_cdf(z);
        assert!(
            ((got - want) / want).abs() < 1e-12,
            "Phi({z}) = {got}, want {want}"
        );
    }
}

#[test]
fn filtered_accumulators_do_not_merge_with_unfiltered() {
    let mut a = MomentAccumulator::new(2).unwrap();
    let b = MomentAccumulator::new(2).unwrap().with_filter(FilterTag::Hilbert);
    assert!(a.merge(&b).is_err());
    let c = MomentAccumulator::new(3).unwrap();
    assert!(a.merge(&c).is_err());
}

proptest! {
    #[test]
    fn merge_is_associative_and_exact(
        xs in prop::collection::vec(-20i64..20, 0..200),
        cut1 in 0usize..200,
        cut2 in 0usize..200,
    ) {
        let (i, j) = (cut1.min(cut2).min(xs.len()), cut1.max(cut2).min(xs.len()));
        let whole = accumulate(&xs, 6);
        let (a, b, c) = (accumulate(&xs[..i], 6), accumulate(&xs[i..j], 6), accumulate(&xs[j..], 6));

        let mut left = a.clone();
        left.merge(&b).unwrap();
        left.merge(&c).unwrap();
        let mut bc = b.clone();
        bc.merge(&c).unwrap();
        let mut right = a.clone();
        right.merge(&bc).unwrap();
        let mut swapped = c.clone();
        swapped.merge(&a).unwrap();
        swapped.merge(&b).unwrap();

        prop_assert_eq!(&left, &whole);
        prop_assert_eq!(&right, &whole);
        prop_assert_eq!(&swapped, &whole);
    }

    #[test]
    fn histogram_merge_is_exact(xs in prop::collection::vec(-20i64..20, 0..200), cut in 0usize..200) {
        let cut = cut.min(xs.len());
        let mut h = ValueHistogram::from_samples(xs[..cut].iter().copied());
        h.merge(&ValueHistogram::from_samples(xs[cut..].iter().copied()));
        prop_assert_eq!(h, ValueHistogram::from_samples(xs.iter().copied()));
    }

    #[test]
    fn normal_cdf_symmetry(z in -8.0f64..8.0) {
        let s = normal_cdf(z) + normal_cdf(-z);
        prop_assert!((s - 1.0).abs() < 1e-14, "Phi(z) + Phi(-z) = {}", s);
    }

    #[test]
    fn normal_cdf_monotone(a in -8.0f64..8.0, d in 0.0f64..1.0) {
        prop_assert!(normal_cdf(a) <= normal_cdf(a + d));
    }

    #[test]
    fn density_monotone_in_c(xs in prop::collection::vec(0i64..8, 3..300), c1 in -3.0f64..3.0, d in 0.0f64..3.0) {
        let h = ValueHistogram::from_samples(xs);
        prop_assert!(density_below(&h, c1).unwrap() <= density_below(&h, c1 + d).unwrap());
    }

    #[test]
    fn violations_monotone_in_eps(xs in prop::collection::vec(0i64..8, 3..300), e1 in 0.05f64..1.0, d in 0.0f64..1.0) {
        let samples: Vec<(u64, i64)> = xs.iter().enumerate().map(|(i, &x)| (i as u64 + 1, x)).collect();
        let loose = normal_order_violations(samples.iter().copied(), e1 + d, 1).unwrap();
        let tight = normal_order_violations(samples.iter().copied(), e1, 1).unwrap();
        prop_assert!(loose <= tight);
    }

    #[test]
    fn raw_moments_match_direct_sum(xs in prop::collection::vec(-50i64..50, 1..100), k in 1u32..5) {
        let acc = accumulate(&xs, 4);
        let direct = xs.iter().map(|&x| (x as f64).powi(k as i32)).sum::<f64>() / xs.len() as f64;
        let got = acc.raw_moment(k).unwrap();
        prop_assert!((got - direct).abs() <= 1e-9 * direct.abs().max(1.0));
    }
}
