mod common;

use common::rng;
use mupricing::distributions::MarginalKind;
use mupricing::sampling::{random_dmr_instance, random_dmr_marginal};
use mupricing::{Error, Marginal, ProblemInstance};
use proptest::prelude::*;

#[test]
fn classification_reference_cases() {
    let ce = Marginal::constant_elasticity(1.0, -2.0, 100.0).unwrap();
    assert!(ce.is_dmr(1000).is_dmr);
    assert!(!ce.is_regular(1000));

    let ex = Marginal::exponential(1.0, 5.0).unwrap();
    let verdict = ex.is_dmr(1000);
    assert!(!verdict.is_dmr);
    let (lo, _, hi) = verdict.witness.unwrap();
    assert!(hi >= 2.0 - 1e-9, "witness [{lo}, {hi}]");
    assert!(ex.is_regular(1000));

    let u = Marginal::uniform(0.0, 1.0, 1.0).unwrap();
    assert!(u.is_dmr(1000).is_dmr);
    assert!(u.is_regular(1000));

    let mix = Marginal::mixture(
        vec![
            Marginal::uniform(0.0, 1.0, 1.0).unwrap(),
            Marginal::exponential(1.0, 1.0).unwrap(),
        ],
        vec![0.3, 0.7],
    )
    .unwrap();
    assert!(mix.is_dmr(1000).is_dmr);
}

#[test]
fn exponential_dmr_boundary() {
    // v(1 - F(v)) is concave exactly up to v = 2 / λ
    assert!(Marginal::exponential(1.0, 2.0).unwrap().is_dmr(1000).is_dmr);
    assert!(!Marginal::exponential(1.0, 2.5).unwrap().is_dmr(1000).is_dmr);
    assert!(Marginal::exponential(0.5, 4.0).unwrap().is_dmr(1000).is_dmr);
}

#[test]
fn constant_elasticity_dmr_depends_on_epsilon() {
    assert!(
        Marginal::constant_elasticity(1.0, -1.0, 10.0)
            .unwrap()
            .is_dmr(1000)
            .is_dmr
    );
    assert!(
        !Marginal::constant_elasticity(1.0, -0.5, 10.0)
            .unwrap()
            .is_dmr(1000)
            .is_dmr
    );
}

#[test]
fn revenue_curve_concave_iff_dmr_on_grid() {
    // independent grid check of the analytic verdicts
    let mut r = rng(21);
    for _ in 0..100 {
        let m = random_dmr_marginal(&mut r, 1.0);
        let (lo, hi) = m.support();
        let n = 400;
        let g = |i: usize| {
            let v = (lo + (hi - lo) * i as f64 / n as f64).min(hi);
            m.revenue_curve(v).unwrap()
        };
        for i in 1..n {
            assert!(g(i) >= 0.5 * (g(i - 1) + g(i + 1)) - 1e-9, "{:?}", m.kind());
        }
        assert!(m.is_dmr(1000).is_dmr);
    }
}

#[test]
fn reference_marginals_with_unbounded_support() {
    let ce = Marginal::constant_elasticity(1.0, -2.0, f64::INFINITY).unwrap();
    // sf(v) = (v / a)^(1/ε)
    assert!((ce.sf(4.0).unwrap() - 0.5).abs() < 1e-12);
    let ex = Marginal::exponential(1.0, f64::INFINITY).unwrap();
    assert!((ex.cdf(2.0).unwrap() - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
    // instances need a finite top value
    assert!(ProblemInstance::iid(vec![1], ex).is_err());
}

#[test]
fn domain_and_singular_errors() {
    let u = Marginal::uniform(0.2, 1.0, 1.0).unwrap();
    assert!(matches!(u.cdf(1.5), Err(Error::Domain { .. })));
    assert!(matches!(u.pdf(-0.1), Err(Error::Domain { .. })));
    assert!(matches!(u.virtual_value(0.1), Err(Error::Singular { .. })));
    assert!((u.virtual_value(0.6).unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn construction_errors() {
    assert!(Marginal::uniform(1.0, 0.5, 1.0).is_err());
    assert!(Marginal::uniform(-0.1, 0.5, 1.0).is_err());
    assert!(Marginal::constant_elasticity(1.0, 0.5, 10.0).is_err());
    assert!(Marginal::truncated_normal(0.5, 0.0, 1.0).is_err());
    assert!(Marginal::exponential(-1.0, 1.0).is_err());
    assert!(Marginal::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.7), (0.4, 1.0)], 1.0).is_err());
    assert!(Marginal::piecewise_linear(vec![(0.0, 0.0), (0.5, 0.7)], 1.0).is_err());
    let u = Marginal::uniform(0.0, 1.0, 1.0).unwrap();
    assert!(Marginal::mixture(vec![u.clone()], vec![0.5]).is_err());
    let u2 = Marginal::uniform(0.0, 1.0, 2.0).unwrap();
    assert!(Marginal::mixture(vec![u.clone(), u2], vec![0.5, 0.5]).is_err());
    assert!(ProblemInstance::new(vec![2, 1], vec![0.5, 0.5], vec![u.clone(), u.clone()], 1.0).is_err());
    assert!(ProblemInstance::new(vec![1, 2], vec![0.6, 0.6], vec![u.clone(), u.clone()], 1.0).is_err());
    assert!(ProblemInstance::new(vec![0, 2], vec![0.5, 0.5], vec![u.clone(), u], 1.0).is_err());
}

#[test]
fn serde_round_trip() {
    let mut r = rng(22);
    for _ in 0..20 {
        let inst = random_dmr_instance(&mut r, 3, 5, 2.0);
        let json = serde_json::to_string(&inst).unwrap();
        let back: ProblemInstance = serde_json::from_str(&json).unwrap();
        assert_eq!(inst, back);
    }
    let bad = r#"{"kind":"uniform","a":2.0,"b":1.0,"v_bar":3.0}"#;
    assert!(serde_json::from_str::<Marginal>(bad).is_err());
    let ok = r#"{"kind":"uniform","a":0.0,"b":1.0,"v_bar":1.0}"#;
    let m: Marginal = serde_json::from_str(ok).unwrap();
    assert!(matches!(m.kind(), MarginalKind::Uniform { .. }));
}

fn marginal_strategy() -> impl Strategy<Value = Marginal> {
    (any::<u64>(), 0.5f64..5.0).prop_map(|(seed, vb)| random_dmr_marginal(&mut rng(seed), vb))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn cdf_is_monotone_and_bounded(m in marginal_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let vb = m.v_bar();
        let (x, y) = (a.min(b) * vb, a.max(b) * vb);
        let (fx, fy) = (m.cdf(x).unwrap(), m.cdf(y).unwrap());
        prop_assert!((0.0..=1.0).contains(&fx) && (0.0..=1.0).contains(&fy));
        prop_assert!(fx <= fy + 1e-15);
        prop_assert!((m.cdf(vb).unwrap() - 1.0).abs() < 1e-12);
        prop_assert!((m.sf(x).unwrap() + fx - 1.0).abs() < 1e-15);
        prop_assert!(m.pdf(x).unwrap() >= 0.0);
    }

    #[test]
    fn quantile_inverts_cdf(m in marginal_strategy(), u in 0.001f64..0.999) {
        let v = m.quantile(u);
        prop_assert!((m.cdf(v).unwrap() - u).abs() < 1e-8);
    }

    #[test]
    fn pdf_is_cdf_derivative(m in marginal_strategy(), a in 0.02f64..0.98) {
        let v = a * m.v_bar();
        let bps = m.breakpoints();
        let h = 1e-6 * m.v_bar();
        prop_assume!(bps.iter().all(|b| (b - v).abs() > 2.0 * h));
        let fd = (m.cdf(v + h).unwrap() - m.cdf(v - h).unwrap()) / (2.0 * h);
        prop_assert!((fd - m.pdf(v).unwrap()).abs() < 1e-4 * (1.0 + fd.abs()));
    }

    #[test]
    fn revenue_curve_is_concave(m in marginal_strategy(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = m.support();
        let (x, y) = (lo + a * (hi - lo), lo + b * (hi - lo));
        let r = |v: f64| m.revenue_curve(v).unwrap();
        prop_assert!(r(0.5 * (x + y)) >= 0.5 * (r(x) + r(y)) - 1e-9);
    }
}

#[test]
fn samples_follow_the_cdf() {
    // Kolmogorov-Smirnov distance against the exact cdf
    let mut r = rng(23);
    for _ in 0..20 {
        let m = random_dmr_marginal(&mut r, 2.0);
        let n = 20_000;
        let mut xs: Vec<f64> = (0..n).map(|_| m.sample(&mut r)).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let mut ks: f64 = 0.0;
        for (i, x) in xs.iter().enumerate() {
            let f = m.cdf(*x).unwrap();
            ks = ks
                .max((f - i as f64 / n as f64).abs())
                .max((f - (i + 1) as f64 / n as f64).abs());
        }
        // 1.95 / sqrt(n) is the 0.1% critical value
        assert!(ks < 1.95 / (n as f64).sqrt(), "{:?}: ks {ks}", m.kind());
    }
}
