use deformkit::covering::{deck_action, embed, DeckElement};
use deformkit::limitcheck::*;
use deformkit::moyal::{shift, GridFunction};
use deformkit::torus::TorusElement;
use deformkit::{Complex64, DeformError};
use proptest::prelude::*;
use std::f64::consts::PI;

const L: f64 = 40.0 * PI;

fn gauss(m: usize, l: f64, sigma: f64, x0: [f64; 2]) -> GridFunction {
    GridFunction::from_fn(1, m, l, |x| {
        Complex64::new((-((x[0] - x0[0]).powi(2) + (x[1] - x0[1]).powi(2)) / (2.0 * sigma * sigma)).exp(), 0.0)
    })
    .unwrap()
}

fn tower(p: &[u64]) -> TowerSpec {
    TowerSpec::new(p.to_vec()).unwrap()
}

#[test]
fn tower_levels() {
    let t = tower(&[2, 3, 2]);
    assert_eq!(t.levels(), &[1, 2, 6, 12]);
    assert_eq!(t.depth(), 3);
    assert_eq!(t.m(3).unwrap(), 12);
    assert!(matches!(t.m(4), Err(DeformError::Argument(_))));
    assert!(TowerSpec::new(vec![2, 1]).is_err());
    assert_eq!(tower(&[]).levels(), &[1]);
}

#[test]
fn periodize_matches_gaussian_transform() {
    // 𝓕f(ξ) = 2πσ² e^{-σ²|ξ|²/2} e^{-iξ·x0}
    let (sigma, x0) = (1.2, [0.7, -1.1]);
    let f = gauss(256, L, sigma, x0);
    let t = tower(&[2, 2]);
    for n in 0..3 {
        let m = t.m(n).unwrap() as f64;
        let per = periodize(&f, &t, n, PeriodizeMethod::Fourier).unwrap();
        let mut worst = 0.0f64;
        for p0 in -12i64..=12 {
            for p1 in -12i64..=12 {
                let xi = [p0 as f64 / m, p1 as f64 / m];
                let r2 = xi[0] * xi[0] + xi[1] * xi[1];
                let exact = Complex64::from_polar(
                    2.0 * PI * sigma * sigma * (-0.5 * sigma * sigma * r2).exp() / (2.0 * PI * m).powi(2),
                    -(xi[0] * x0[0] + xi[1] * x0[1]),
                );
                worst = worst.max((per.element.get(&[p0, p1]) - exact).norm());
            }
        }
        assert!(worst < 1e-12, "n={n}: {worst:.2e}");
        assert_eq!(per.element.theta(), &level_theta(1, t.m(n).unwrap()));
    }
}

#[test]
fn periodization_methods_agree() {
    let t = tower(&[2, 2]);
    for (sigma, x0) in [(1.0, [0.0, 0.0]), (1.0, [0.4, -0.9]), (1.5, [-2.0, 1.0])] {
        let f = gauss(256, L, sigma, x0);
        for n in 0..3 {
            let a = periodize(&f, &t, n, PeriodizeMethod::Direct).unwrap();
            let b = periodize(&f, &t, n, PeriodizeMethod::Fourier).unwrap();
            let gap = a.element.max_abs_diff(&b.element).unwrap();
            let tail = a.tail_bound.max(b.tail_bound);
            assert!(gap <= tail, "σ={sigma} n={n}: {gap:.2e} > {tail:.2e}");
            assert!(tail <= 1e-7, "σ={sigma} n={n}: tail {tail:.2e}");
        }
    }
}

#[test]
fn periodize_trace_is_integral() {
    let f = gauss(256, L, 1.3, [0.5, 0.5]);
    let t = tower(&[2, 3]);
    for n in 0..3 {
        let m = t.m(n).unwrap() as f64;
        let tr = periodize(&f, &t, n, PeriodizeMethod::Fourier).unwrap().element.trace();
        let expect = f.integral() / (2.0 * PI * m).powi(2);
        assert!((tr - expect).norm() < 1e-8);
        assert!((expect.re - 2.0 * PI * 1.69 / (2.0 * PI * m).powi(2)).abs() < 1e-8);
    }
}

#[test]
fn periodize_errors_and_zero() {
    let t = tower(&[2, 2, 2]);
    let zero = GridFunction::zeros(1, 64, L).unwrap();
    for method in [PeriodizeMethod::Fourier, PeriodizeMethod::Direct] {
        assert!(periodize(&zero, &t, 1, method).unwrap().element.is_empty());
    }
    let wide = gauss(64, 20.0, 3.0, [0.0, 0.0]);
    assert!(matches!(periodize(&wide, &t, 0, PeriodizeMethod::Fourier), Err(DeformError::Ingestion(_))));
    let f = gauss(128, 30.0, 1.0, [0.0, 0.0]);
    assert!(matches!(periodize(&f, &t, 2, PeriodizeMethod::Direct), Err(DeformError::Range(_))));
    assert!(periodize(&f, &t, 2, PeriodizeMethod::Fourier).is_ok());
    assert!(matches!(periodize(&f, &t, 4, PeriodizeMethod::Fourier), Err(DeformError::Argument(_))));
}

#[test]
fn lattice_equivariance() {
    let t = tower(&[2]);
    let f = gauss(256, L, 1.0, [0.3, 0.1]);
    let base = periodize(&f, &t, 1, PeriodizeMethod::Fourier).unwrap();
    for g in [[2i64, 0], [0, -2], [2, 2]] {
        let moved = shift(&f, &[2.0 * PI * g[0] as f64, 2.0 * PI * g[1] as f64]).unwrap();
        let per = periodize(&moved, &t, 1, PeriodizeMethod::Fourier).unwrap();
        let gap = per.element.max_abs_diff(&base.element).unwrap();
        assert!(gap <= base.tail_bound + per.tail_bound, "g={g:?}: {gap:.2e}");
    }
}

#[test]
fn deck_compatibility() {
    let t = tower(&[3]);
    let f = gauss(256, L, 1.0, [-0.2, 0.6]);
    let spec = level_covering(1, &t, 0, 1).unwrap();
    let per = periodize(&f, &t, 1, PeriodizeMethod::Fourier).unwrap();
    let lifted = per.element.reindex(spec.cover_theta().clone(), per.element.cutoff(), |l| l.to_vec()).unwrap();
    for g in [[1i64, 0], [0, 2], [1, 1], [2, -1]] {
        let moved = shift(&f, &[2.0 * PI * g[0] as f64, 2.0 * PI * g[1] as f64]).unwrap();
        let lhs = periodize(&moved, &t, 1, PeriodizeMethod::Fourier).unwrap();
        let lhs = lhs.element.reindex(spec.cover_theta().clone(), lhs.element.cutoff(), |l| l.to_vec()).unwrap();
        let rhs = deck_action(&DeckElement::new(&g, &spec).unwrap(), &lifted, &spec).unwrap();
        let gap = lhs.max_abs_diff(&rhs).unwrap();
        assert!(gap <= 2.0 * per.tail_bound, "g={g:?}: {gap:.2e}");
    }
}

#[test]
fn special_defect_decays() {
    let f = gauss(256, L, 5.0, [0.0, 0.0]);
    let t = tower(&[2, 2, 2]);
    let reports = special_defect_levels(&f, &t, &[0, 1, 2, 3]).unwrap();
    for w in reports.windows(2) {
        assert!(w[1].defect < w[0].defect, "{} !< {}", w[1].defect, w[0].defect);
    }
    for r in &reports {
        assert!(r.defect.is_finite() && r.tail_bound.is_finite() && r.tail_bound >= 0.0);
        assert!(r.tail_bound < 1e-3 * r.defect.max(1e-8));
    }
    let fit = fit_loglog(&reports.iter().map(|r| (r.m as f64, r.defect)).collect::<Vec<_>>()).unwrap();
    assert!(fit.slope <= -3.0, "slope {}", fit.slope);
    let single = special_defect(&f, &t, 2).unwrap();
    assert_eq!(single, reports[2]);
}

#[test]
fn special_defect_of_zero_and_invalid_input() {
    let t = tower(&[2]);
    let zero = GridFunction::zeros(1, 64, L).unwrap();
    let r = special_defect(&zero, &t, 1).unwrap();
    assert_eq!((r.defect, r.l2_identity_lhs, r.l2_identity_rhs_a, r.l2_identity_rhs_b), (0.0, 0.0, 0.0, 0.0));
    let neg = gauss(128, L, 2.0, [0.0, 0.0]).scale(Complex64::new(-1.0, 0.0));
    assert!(matches!(special_defect(&neg, &t, 0), Err(DeformError::Argument(_))));
    let cplx = gauss(128, L, 2.0, [0.0, 0.0]).scale(Complex64::new(0.0, 1.0));
    assert!(matches!(special_defect(&cplx, &t, 0), Err(DeformError::Argument(_))));
}

#[test]
fn commutative_defect_vanishes_for_separated_translates() {
    // width 0.35 against a lattice spacing of 2π: translates overlap below 1e-30
    let f = gauss(256, 8.0 * PI, 0.35, [0.0, 0.0]);
    let t = tower(&[2]);
    for n in 0..2 {
        let r = commutative_defect(&f, &t, n).unwrap();
        assert!(r.defect <= 1e-10, "n={n}: {:.2e}", r.defect);
    }
}

#[test]
fn separation_decay() {
    let f = gauss(256, L, 2.0, [0.0, 0.0]);
    let t = tower(&[2]);
    let deltas = vec![vec![0.0, 16.0], vec![4.0, 0.0], vec![0.0, 0.0], vec![8.0 / 2f64.sqrt(), -8.0 / 2f64.sqrt()]];
    let pairs = delta_decay(&f, &deltas, &t, 1).unwrap();
    let radii: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    assert!(radii.windows(2).all(|w| w[0] <= w[1]));
    assert!((radii[2] - 8.0).abs() < 1e-12);
    assert!(pairs[0].1 > 0.0 && pairs[0].1.is_finite());
    let fit = fit_loglog(&pairs[1..]).unwrap();
    assert!(fit.slope <= -3.0, "slope {}", fit.slope);
    assert!(pairs[2].1 >= 8.0 * pairs[3].1);
    assert!(matches!(delta_decay(&f, &[vec![0.0, 70.0]], &t, 1), Err(DeformError::Range(_))));
}

#[test]
fn trace_constant_resolution() {
    let f = gauss(256, L, 1.0, [0.2, -0.4]);
    let t = tower(&[2, 2, 2]);
    let reports: Vec<SpecialReport> = (1..=3).map(|n| l2_trace_compare(&f, &t, n).unwrap()).collect();
    // ‖f‖₂² = πσ² in two dimensions
    assert!((reports[0].l2_identity_lhs - PI).abs() < 1e-10);
    let choice: Vec<Option<char>> = reports.iter().map(|r| matched_constant(r, 0.01)).collect();
    assert!(choice.iter().all(|c| c.is_some() && *c == choice[0]), "{choice:?}");
    let pick = |r: &SpecialReport| if choice[0] == Some('a') { r.l2_identity_rhs_a } else { r.l2_identity_rhs_b };
    for r in &reports[1..] {
        assert!((pick(r) - pick(&reports[0])).abs() <= 1e-6 * pick(&reports[0]));
    }
    let zero = l2_trace_compare(&GridFunction::zeros(1, 64, L).unwrap(), &t, 1).unwrap();
    assert_eq!((zero.l2_identity_lhs, zero.l2_identity_rhs_a, zero.l2_identity_rhs_b), (0.0, 0.0, 0.0));
}

#[test]
fn composite_embedding_is_single_embedding() {
    let t = tower(&[2, 3]);
    let a = TorusElement::from_terms(
        level_theta(1, 1),
        vec![(vec![1, 0], Complex64::new(1.0, 0.5)), (vec![-2, 3], Complex64::new(-0.25, 0.0)), (vec![0, 0], Complex64::new(2.0, 0.0))],
    )
    .unwrap();
    assert_eq!(tower_embedding_check(&t, 0, 2, &a).unwrap(), 0.0);
    let single = embed(&a, &level_covering(1, &t, 0, 2).unwrap()).unwrap();
    assert_eq!(single.get(&[-12, 18]), Complex64::new(-0.25, 0.0));
    assert_eq!(tower_embedding_check(&tower(&[]), 0, 0, &a).unwrap(), 0.0);
    assert!(tower_embedding_check(&t, 0, 3, &a).is_err());
}

#[test]
fn periodizations_are_compatible_across_levels() {
    let f = gauss(256, L, 1.0, [0.3, -0.2]);
    let t = tower(&[2, 3]);
    for (from, to) in [(0, 1), (0, 2), (1, 2)] {
        let (gap, _) = periodization_compatibility(&f, &t, from, to).unwrap();
        assert!(gap <= 1e-8, "{from}->{to}: {gap:.2e}");
    }
}

#[test]
fn slope_fit() {
    let pts: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-2.5))).collect();
    let fit = fit_loglog(&pts).unwrap();
    assert!((fit.slope + 2.5).abs() < 1e-12 && (fit.intercept - 3f64.ln()).abs() < 1e-12 && fit.residual < 1e-12);
    assert!(fit_loglog(&pts[..1]).is_err());
    assert!(fit_loglog(&[(1.0, 1.0), (1.0, 2.0)]).is_err());
    assert!(fit_loglog(&[(1.0, 0.0), (2.0, 1.0)]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn composite_embedding_exact(p in prop::collection::vec(2u64..4, 1..4), terms in prop::collection::vec((-3i64..=3, -3i64..=3, -1.0f64..1.0), 1..6)) {
        let t = TowerSpec::new(p).unwrap();
        let a = TorusElement::from_terms(level_theta(1, 1), terms.into_iter().map(|(x, y, c)| (vec![x, y], Complex64::new(c, -c)))).unwrap();
        for to in 1..=t.depth() {
            prop_assert_eq!(tower_embedding_check(&t, 0, to, &a).unwrap(), 0.0);
        }
    }
}

#[test]
fn gauge_map_is_multiplicative() {
    use deformkit::moyal::{moyal_star, moyal_times, MoyalParams};
    let f = gauss(192, 24.0, 0.8, [0.3, 0.0]);
    let g = gauss(192, 24.0, 0.7, [0.0, -0.4]);
    for theta in [1.0, 3.0] {
        let lhs = moyal_times(&to_standard_gauge(&f, theta).unwrap(), &to_standard_gauge(&g, theta).unwrap()).unwrap();
        let rhs = to_standard_gauge(&moyal_star(&f, &g, MoyalParams::new(theta).unwrap()).unwrap(), theta).unwrap();
        assert!(lhs.relative_l2_diff(&rhs).unwrap() < 1e-8, "θ={theta}");
    }
}
