use hzforms::bound::{self, CriterionInput, Gammas, Verdict};
use hzforms::saddle::Kqr;
use proptest::prelude::*;
use rug::{Float, Rational};

fn input(a: f64, b: f64, g: f64) -> CriterionInput {
    CriterionInput { alpha: Float::with_val(128, a), beta: Float::with_val(128, b), gammas: Gammas::Constant(Float::with_val(128, g)) }
}

fn d_of(v: Verdict) -> u64 {
    match v {
        Verdict::Bounded(d) => d,
        Verdict::Divergent => u64::MAX,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn monotone_in_alpha_and_beta(a in 0.1f64..50.0, da in 0.0f64..10.0, b in 0.5f64..5.0, db in 0.0f64..0.4, gf in 0.0f64..0.9) {
        let g = gf * (b - db).max(0.1) * 0.99;
        let base = d_of(bound::nesterenko_bound(&input(a, b, g)).unwrap());
        let more_alpha = d_of(bound::nesterenko_bound(&input(a + da, b, g)).unwrap());
        prop_assert!(more_alpha >= base);
        if b - db > g {
            let less_beta = d_of(bound::nesterenko_bound(&input(a, b - db, g)).unwrap());
            prop_assert!(less_beta >= base);
        }
    }

    #[test]
    fn constant_gamma_closes_to_closed_form(a in 0.1f64..50.0, b in 0.5f64..5.0, gf in 0.0f64..0.9) {
        let g = gf * b;
        let d = d_of(bound::nesterenko_bound(&input(a, b, g)).unwrap());
        // smallest d with (d − 1)(β − γ) ≥ α, up to rounding at the boundary
        let x = a / (b - g);
        prop_assert!((d as f64 - 1.0 - x.ceil()).abs() <= 1.0);
        prop_assert!((d - 1) as f64 * (b - g) >= a * (1.0 - 1e-12));
    }

    #[test]
    fn report_identity_is_exact(an in 1i64..10_000, ad in 1i64..100, bn in 1i64..10_000, bd in 1i64..100, krq in 1i64..1000) {
        let alpha = Rational::from((an, ad));
        let beta = Rational::from((bn, bd));
        let alpha_hat = Rational::from(&alpha - krq);
        let beta_hat = Rational::from(&beta + krq);
        let lhs = Rational::from(&alpha_hat / Rational::from(&beta_hat - krq));
        let rhs = Rational::from(Rational::from(&alpha - krq) / &beta);
        prop_assert_eq!(lhs, rhs);
    }
}

#[test]
fn report_identity_numeric_and_flag() {
    for (k, q, r) in [(2, 3, 5), (3, 7, 9), (2, 1000, 47)] {
        let rep = bound::dimension_lower(&Kqr::new(k, q, r).unwrap(), 192).unwrap();
        let krq = Float::with_val(192, (k * q * r) as u64);
        let lhs = Float::with_val(192, &rep.alpha_hat / Float::with_val(192, &rep.beta_hat - &krq)) + 1u32;
        let rhs = Float::with_val(192, Float::with_val(192, &rep.alpha - &krq) / &rep.beta) + 1u32;
        assert!(Float::with_val(192, &lhs - &rhs).abs() < 1e-50);
        assert_eq!(rep.alpha_hat_positive(), rep.d_integer.is_some());
    }
}

#[test]
fn d_lower_at_q_ten_thousand() {
    // recorded expectation: the finite-size value is well below log₂ q
    let rep = bound::dimension_lower(&Kqr::log_squared(2, 10_000).unwrap(), 128).unwrap();
    assert_eq!(rep.kqr.r(), 84);
    assert!((rep.d_lower.to_f64() - 3.7504395445).abs() < 1e-8);
    assert_eq!(rep.d_integer, Some(4));
}

#[test]
fn trend_scan_single_point() {
    let rows = bound::trend_scan(2, &[1000], 128).unwrap();
    assert_eq!(rows.len(), 1);
    assert!(bound::approaches_one(&[rows[0].d_ratio]));
    assert!(bound::trend_csv(&rows).starts_with("q,r,d_lower,d_ratio,alpha_ratio,beta_ratio"));
}
