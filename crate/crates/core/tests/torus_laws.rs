use deformkit::torus::{
    approx_operator_norm, element_from_json, element_to_json, DeformationMatrix, TorusElement,
};
use deformkit::Complex64;
use nalgebra::DMatrix;
use proptest::prelude::*;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const GOLDEN: f64 = 0.618_033_988_749_894_9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Naive reference: double loop, phase from the full bilinear form.
fn naive_star(a: &TorusElement, b: &TorusElement) -> Vec<(Vec<i64>, Complex64)> {
    let n = a.n();
    let mut out: std::collections::BTreeMap<Vec<i64>, Complex64> = Default::default();
    for (r, x) in a.iter() {
        for (s, y) in b.iter() {
            let mut form = 0.0;
            for i in 0..n {
                for j in 0..n {
                    form += r[i] as f64 * a.theta().entry(i, j) * s[j] as f64;
                }
            }
            let k: Vec<i64> = r.iter().zip(s).map(|(p, q)| p + q).collect();
            *out.entry(k).or_default() += x * y * Complex64::from_polar(1.0, -PI * form);
        }
    }
    out.into_iter().collect()
}

fn theta_strategy(n: usize) -> impl Strategy<Value = DeformationMatrix> {
    prop::collection::vec(prop_oneof![Just(FRAC_1_SQRT_2), Just(GOLDEN), -2.0..2.0f64], n * (n - 1) / 2)
        .prop_map(move |u| DeformationMatrix::from_upper(n, u).unwrap())
}

fn element_strategy(theta: DeformationMatrix, cutoff: i64, max_terms: usize) -> impl Strategy<Value = TorusElement> {
    let n = theta.n();
    prop::collection::vec(
        (prop::collection::vec(-cutoff..=cutoff, n), -1.0..1.0f64, -1.0..1.0f64),
        1..=max_terms,
    )
    .prop_map(move |terms| {
        TorusElement::from_terms(theta.clone(), terms.into_iter().map(|(k, re, im)| (k, c(re, im)))).unwrap()
    })
}

fn triple() -> impl Strategy<Value = (TorusElement, TorusElement, TorusElement)> {
    (1usize..=4, 1i64..=4)
        .prop_flat_map(|(n, k)| theta_strategy(n).prop_map(move |t| (t, k)))
        .prop_flat_map(|(t, k)| {
            (element_strategy(t.clone(), k, 12), element_strategy(t.clone(), k, 12), element_strategy(t, k, 12))
        })
}

fn close(a: &TorusElement, b: &TorusElement, tol: f64) -> bool {
    let scale = a.one_norm().max(b.one_norm()).max(1.0);
    a.max_abs_diff(b).unwrap() <= tol * scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn product_matches_naive_double_sum((a, b, _) in triple()) {
        let p = a.star(&b).unwrap();
        for (k, want) in naive_star(&a, &b) {
            prop_assert!((p.get(&k) - want).norm() <= 1e-12 * (1.0 + a.one_norm() * b.one_norm()));
        }
    }

    #[test]
    fn associativity((a, b, d) in triple()) {
        let l = a.star(&b).unwrap().star(&d).unwrap();
        let r = a.star(&b.star(&d).unwrap()).unwrap();
        prop_assert!(close(&l, &r, 1e-10));
    }

    #[test]
    fn star_law((a, b, _) in triple()) {
        let l = a.star(&b).unwrap().involution();
        let r = b.involution().star(&a.involution()).unwrap();
        prop_assert!(close(&l, &r, 1e-12));
    }

    #[test]
    fn traciality((a, b, _) in triple()) {
        let d = (a.star(&b).unwrap().trace() - b.star(&a).unwrap().trace()).norm();
        prop_assert!(d <= 1e-12 * a.one_norm() * b.one_norm());
    }

    #[test]
    fn positivity_and_parseval((a, _, _) in triple()) {
        let q = a.l2_inner(&a).unwrap();
        let direct: f64 = a.iter().map(|(_, c)| c.norm_sqr()).sum();
        prop_assert!(q.im.abs() <= 1e-14 * (1.0 + direct));
        prop_assert!(q.re >= -1e-14);
        prop_assert!((q.re - direct).abs() <= 1e-13 * (1.0 + direct));
        // l2_inner agrees with the trace of a*⋆a
        let t = a.involution().star(&a).unwrap().trace();
        prop_assert!((t - q).norm() <= 1e-12 * (1.0 + direct));
    }

    #[test]
    fn involution_is_involutive((a, _, _) in triple()) {
        prop_assert_eq!(a.involution().involution(), a);
    }

    #[test]
    fn unit_is_neutral((a, _, _) in triple()) {
        let one = TorusElement::one(a.theta().clone());
        prop_assert!(close(&a.star(&one).unwrap(), &a, 1e-15));
        prop_assert!(close(&one.star(&a).unwrap(), &a, 1e-15));
    }

    #[test]
    fn commutation_relation(t in (2usize..=4).prop_flat_map(theta_strategy)) {
        let n = t.n();
        for j in 0..n {
            for k in 0..n {
                let mut ej = vec![0; n];
                ej[j] = 1;
                let mut ek = vec![0; n];
                ek[k] = 1;
                let uj = TorusElement::unitary(&ej, t.clone()).unwrap();
                let uk = TorusElement::unitary(&ek, t.clone()).unwrap();
                let lhs = uk.star(&uj).unwrap();
                let rhs = uj.star(&uk).unwrap().scale(Complex64::from_polar(1.0, 2.0 * PI * t.entry(j, k)));
                prop_assert!(lhs.max_abs_diff(&rhs).unwrap() <= 1e-12);
            }
        }
    }

    #[test]
    fn commutative_case_is_plain_convolution(
        (a, b) in (1usize..=3).prop_flat_map(|n| {
            let t = DeformationMatrix::zero(n);
            (element_strategy(t.clone(), 4, 10), element_strategy(t, 4, 10))
        })
    ) {
        let p = a.star(&b).unwrap();
        let mut conv: std::collections::BTreeMap<Vec<i64>, Complex64> = Default::default();
        for (r, x) in a.iter() {
            for (s, y) in b.iter() {
                let k: Vec<i64> = r.iter().zip(s).map(|(p, q)| p + q).collect();
                *conv.entry(k).or_default() += x * y;
            }
        }
        for (k, want) in conv {
            prop_assert!((p.get(&k) - want).norm() <= 1e-15 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn json_roundtrip((a, _, _) in triple()) {
        let back = element_from_json(&element_to_json(&a)).unwrap();
        prop_assert_eq!(back.theta(), a.theta());
        prop_assert!(a.max_abs_diff(&back).unwrap() == 0.0);
    }
}

#[test]
fn unitary_examples() {
    let t = DeformationMatrix::from_upper(2, vec![FRAC_1_SQRT_2]).unwrap();
    let one = TorusElement::unitary(&[0, 0], t.clone()).unwrap();
    assert_eq!(one, TorusElement::one(t.clone()));
    let u = TorusElement::unitary(&[2, -3], t.clone()).unwrap();
    assert_eq!(u.get(&[2, -3]), c(1.0, 0.0));
    assert_eq!(u.cutoff(), 3);
    assert!(TorusElement::unitary(&[1], t).is_err());
}

#[test]
fn involution_and_trace_examples() {
    let t = DeformationMatrix::from_upper(2, vec![GOLDEN]).unwrap();
    let a = TorusElement::unitary(&[1, 2], t.clone()).unwrap().scale(c(0.5, 2.0));
    let s = a.involution();
    assert_eq!(s.get(&[-1, -2]), c(0.5, -2.0));
    assert_eq!(TorusElement::one(t.clone()).trace(), c(1.0, 0.0));
    assert_eq!(a.trace(), c(0.0, 0.0));
}

#[test]
fn basis_is_orthonormal() {
    let t = DeformationMatrix::from_upper(2, vec![FRAC_1_SQRT_2]).unwrap();
    for k in [[0i64, 0], [1, 0], [-2, 3]] {
        for l in [[0i64, 0], [1, 0], [-2, 3]] {
            let uk = TorusElement::unitary(&k, t.clone()).unwrap();
            let ul = TorusElement::unitary(&l, t.clone()).unwrap();
            let want = if k == l { 1.0 } else { 0.0 };
            assert!((uk.l2_inner(&ul).unwrap() - c(want, 0.0)).norm() < 1e-15);
        }
    }
}

#[test]
fn mismatched_matrices_rejected() {
    let a = TorusElement::one(DeformationMatrix::from_upper(2, vec![0.1]).unwrap());
    let b = TorusElement::one(DeformationMatrix::from_upper(2, vec![0.2]).unwrap());
    assert!(a.star(&b).is_err());
    assert!(a.l2_inner(&b).is_err());
}

#[test]
fn one_norm_examples() {
    let t = DeformationMatrix::zero(2);
    let u = TorusElement::unitary(&[1, 1], t.clone()).unwrap();
    assert_eq!(u.one_norm(), 1.0);
    let v = TorusElement::unitary(&[0, -1], t).unwrap();
    assert_eq!(u.add(&v).unwrap().one_norm(), 2.0);
}

/// Dense truncated GNS matrix, built independently of the library.
fn dense_gns(a: &TorusElement, k: i64) -> DMatrix<Complex64> {
    let n = a.n();
    let side = (2 * k + 1) as usize;
    let dim = side.pow(n as u32);
    let decode = |mut f: usize| {
        let mut v = vec![0i64; n];
        for j in (0..n).rev() {
            v[j] = (f % side) as i64 - k;
            f /= side;
        }
        v
    };
    let basis: Vec<Vec<i64>> = (0..dim).map(decode).collect();
    let mut m = DMatrix::from_element(dim, dim, c(0.0, 0.0));
    for (col, s) in basis.iter().enumerate() {
        for (row, p) in basis.iter().enumerate() {
            let r: Vec<i64> = p.iter().zip(s).map(|(x, y)| x - y).collect();
            let coeff = a.get(&r);
            if coeff == c(0.0, 0.0) {
                continue;
            }
            let mut form = 0.0;
            for i in 0..n {
                for j in 0..n {
                    form += r[i] as f64 * a.theta().entry(i, j) * s[j] as f64;
                }
            }
            m[(row, col)] = coeff * Complex64::from_polar(1.0, -PI * form);
        }
    }
    m
}

#[test]
fn operator_norm_of_unitary_is_one() {
    let t = DeformationMatrix::from_upper(2, vec![FRAC_1_SQRT_2]).unwrap();
    let u = TorusElement::unitary(&[1, -2], t).unwrap();
    for k in [2, 3, 5] {
        assert!((approx_operator_norm(&u, k).unwrap() - 1.0).abs() < 1e-12);
    }
    assert!(approx_operator_norm(&u, 1).is_err());
}

#[test]
fn operator_norm_matches_svd_and_sandwich() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for trial in 0..50 {
        let n = 1 + trial % 2;
        let t = DeformationMatrix::from_upper(n, vec![FRAC_1_SQRT_2; n * (n - 1) / 2]).unwrap();
        let terms: Vec<(Vec<i64>, Complex64)> = (0..rng.gen_range(1..6))
            .map(|_| {
                ((0..n).map(|_| rng.gen_range(-2..=2)).collect(), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        let a = TorusElement::from_terms(t, terms).unwrap();
        let k = 4;
        let est = approx_operator_norm(&a, k).unwrap();
        let svd = dense_gns(&a, k as i64).singular_values().max();
        assert!(est <= a.one_norm() + 1e-10, "sandwich violated");
        assert!(est <= svd * (1.0 + 1e-9), "estimate {est} exceeds svd {svd}");
        // clustered top singular values slow the 200-step iteration down
        assert!(est >= svd * (1.0 - 1e-2), "estimate {est} far below svd {svd}");
    }
}

#[test]
fn hermitian_norm_is_max_eigenvalue() {
    let t = DeformationMatrix::from_upper(2, vec![GOLDEN]).unwrap();
    let x = TorusElement::from_terms(t, vec![(vec![1, 0], c(0.3, 0.4)), (vec![0, 1], c(-0.2, 0.1)), (vec![0, 0], c(0.5, 0.0))]).unwrap();
    let a = x.add(&x.involution()).unwrap();
    assert!(a.is_self_adjoint(1e-15));
    let m = dense_gns(&a, 5);
    let eig = m.clone().symmetric_eigenvalues().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let est = approx_operator_norm(&a, 5).unwrap();
    assert!(est <= eig * (1.0 + 1e-9) && est >= eig * (1.0 - 1e-2), "{est} vs {eig}");
}

#[test]
fn commutative_norm_approaches_sup_norm() {
    let t = DeformationMatrix::zero(1);
    let a = TorusElement::from_terms(t, vec![(vec![0], c(1.0, 0.0)), (vec![1], c(1.0, 0.0))]).unwrap();
    // sup over a dense sample of the circle of |1 + e^{ix}|
    let sup = (0..100_000).map(|j| (c(1.0, 0.0) + Complex64::from_polar(1.0, 2.0 * PI * j as f64 / 1e5)).norm()).fold(0.0, f64::max);
    let mut prev = 0.0;
    let mut last = 0.0;
    for k in [1, 2, 4, 8, 16, 32, 64] {
        let est = approx_operator_norm(&a, k).unwrap();
        assert!(est + 1e-9 >= prev, "not monotone at {k}");
        assert!(est <= sup + 1e-12);
        prev = est;
        last = est;
    }
    assert!(sup - last < 1e-3);
}

#[test]
fn extended_precision_path_matches_naive_at_large_indices() {
    let t = DeformationMatrix::from_upper(2, vec![FRAC_1_SQRT_2]).unwrap();
    let a = TorusElement::from_terms(t.clone(), vec![(vec![150, -120], c(1.0, 0.0)), (vec![-149, 3], c(0.5, 0.5))]).unwrap();
    let b = TorusElement::from_terms(t, vec![(vec![-77, 140], c(0.25, -1.0)), (vec![10, 10], c(1.0, 0.0))]).unwrap();
    let p = a.star(&b).unwrap();
    for (k, want) in naive_star(&a, &b) {
        assert!((p.get(&k) - want).norm() < 1e-11);
    }
}
