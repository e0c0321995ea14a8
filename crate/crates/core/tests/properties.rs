use pqsco_core::{
    multiply, predicted_mult_count, recompose, recursion_depth, schoolbook_mul, split, MethodPlan, OpCounter,
    Polynomial,
};
use proptest::prelude::*;

fn signed_poly(max_len: usize, bound: i64) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-bound..=bound, 1..=max_len)
}

fn plans() -> impl Strategy<Value = MethodPlan> {
    (0usize..3, 1u32..=9).prop_map(|(m, cutoff)| match m {
        0 => MethodPlan::karatsuba(cutoff),
        1 => MethodPlan::toom(3, cutoff),
        _ => MethodPlan::toom(4, cutoff),
    })
}

fn modulus() -> impl Strategy<Value = Option<u64>> {
    prop_oneof![Just(None), Just(Some(4096)), Just(Some(3329)), Just(Some(2))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn methods_agree_with_schoolbook(a in signed_poly(300, 1 << 20), b in signed_poly(300, 1 << 20),
                                     plan in plans(), q in modulus()) {
        let a = Polynomial::new(a, q).unwrap();
        let b = Polynomial::new(b, q).unwrap();
        let expect = schoolbook_mul(&a, &b, &mut OpCounter::new()).unwrap();
        prop_assert_eq!(multiply(&a, &b, &plan, &mut OpCounter::new()).unwrap(), expect);
    }

    #[test]
    fn schoolbook_commutes_and_distributes(a in signed_poly(40, 1000), b in signed_poly(40, 1000),
                                           c in signed_poly(40, 1000), q in modulus()) {
        let (a, b, c) = (Polynomial::new(a, q).unwrap(), Polynomial::new(b, q).unwrap(), Polynomial::new(c, q).unwrap());
        let mul = |x: &Polynomial, y: &Polynomial| schoolbook_mul(x, y, &mut OpCounter::new()).unwrap();
        prop_assert_eq!(mul(&a, &b), mul(&b, &a));
        let lhs = mul(&a, &b.add(&c).unwrap());
        let rhs = mul(&a, &b).add(&mul(&a, &c)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn integer_degree_law(a in signed_poly(60, 1000), b in signed_poly(60, 1000)) {
        let a = Polynomial::new(a, None).unwrap();
        let b = Polynomial::new(b, None).unwrap();
        prop_assume!(!a.is_zero() && !b.is_zero());
        let p = schoolbook_mul(&a, &b, &mut OpCounter::new()).unwrap();
        prop_assert_eq!(p.degree(), a.degree() + b.degree());
    }

    #[test]
    fn schoolbook_count_is_product_of_lengths(a in signed_poly(70, 9), b in signed_poly(70, 9)) {
        let a = Polynomial::new(a, None).unwrap();
        let b = Polynomial::new(b, None).unwrap();
        let mut c = OpCounter::new();
        schoolbook_mul(&a, &b, &mut c).unwrap();
        prop_assert_eq!(c.fundamental_mults, (a.len() * b.len()) as u64);
    }

    /// Measured counts and depth match the predictors for every equal-length
    /// pair, not only powers of k.
    #[test]
    fn counters_match_predictors(n in 1usize..400, plan in plans(), seed in any::<u64>()) {
        let a = Polynomial::random(n, 4096, seed, None).unwrap();
        let b = Polynomial::random(n, 4096, seed ^ 1, None).unwrap();
        let mut c = OpCounter::new();
        multiply(&a, &b, &plan, &mut c).unwrap();
        prop_assert_eq!(c.fundamental_mults, predicted_mult_count(&plan, n));
        prop_assert_eq!(c.max_depth, recursion_depth(&plan, n));
    }

    #[test]
    fn split_round_trips(c in prop::collection::vec(-1000i128..1000, 1..200), k in 2usize..=4) {
        let parts = split(&c, k);
        prop_assert!(parts.iter().all(|p| p.len() == c.len().div_ceil(k)));
        let back = recompose(&parts, parts[0].len());
        prop_assert_eq!(&back[..c.len()], &c[..]);
        prop_assert!(back[c.len()..].iter().all(|&x| x == 0));
    }

    #[test]
    fn toom_depth_never_exceeds_karatsuba(n in 1usize..=4096, cutoff in 1u32..64) {
        let kd = recursion_depth(&MethodPlan::karatsuba(cutoff), n);
        prop_assert!(recursion_depth(&MethodPlan::toom(3, cutoff), n) <= kd);
        prop_assert!(recursion_depth(&MethodPlan::toom(4, cutoff), n) <= kd);
    }
}

/// Independent closed forms: `(2k-1)^m` for length `k^m` with base case 1.
#[test]
fn exact_counts_at_powers() {
    let cases = [
        (MethodPlan::karatsuba(1), 2usize, 9u32),
        (MethodPlan::toom(3, 1), 3, 6),
        (MethodPlan::toom(4, 1), 4, 4),
    ];
    for (plan, k, m) in cases {
        let n = k.pow(m);
        let expected = (2 * k as u64 - 1).pow(m);
        let a = Polynomial::random(n, 4096, 5, Some(4096)).unwrap();
        let b = Polynomial::random(n, 4096, 6, Some(4096)).unwrap();
        let mut c = OpCounter::new();
        multiply(&a, &b, &plan, &mut c).unwrap();
        assert_eq!(c.fundamental_mults, expected, "{plan} at {n}");
        assert_eq!(predicted_mult_count(&plan, n), expected);
        assert_eq!(recursion_depth(&plan, n), m);
    }
    assert_eq!(3u64.pow(9), 19_683);
    assert_eq!(5u64.pow(6), 15_625);
}

#[test]
fn predicted_counts_dominate() {
    for n in 16..=4096usize {
        let school = predicted_mult_count(&MethodPlan::schoolbook(), n);
        assert!(predicted_mult_count(&MethodPlan::karatsuba(1), n) < school, "n = {n}");
    }
    // Powers of 2 and 3 never coincide, so Toom-3 is compared with the
    // Karatsuba law n^log2(3) at lengths where its own count is exact.
    for m in 3..=8u32 {
        let n = 3usize.pow(m);
        let toom3 = predicted_mult_count(&MethodPlan::toom(3, 1), n) as f64;
        assert!(toom3 < (n as f64).powf(3f64.log2()), "n = {n}");
    }
    for m in 2..=6u32 {
        let n = 4usize.pow(m);
        let kara = predicted_mult_count(&MethodPlan::karatsuba(1), n);
        assert!(predicted_mult_count(&MethodPlan::toom(4, 1), n) < kara, "n = {n}");
    }
}
