mod common;

use common::*;
use mupricing::ktwo::{candidate_objectives, candidate_prices, monopoly_threshold, solve_k2};
use mupricing::optimizer::*;
use mupricing::revenue::rev;
use mupricing::sampling::random_dmr_instance;
use mupricing::{Marginal, ProblemInstance};
use proptest::prelude::*;

#[test]
fn maximize_beats_grid_and_is_certified() {
    let mut r = rng(31);
    for case in 0..12 {
        let k = 1 + case % 3;
        let inst = random_dmr_instance(&mut r, k, 5, 1.0);
        let opt = maximize(&inst, &OptimizeConfig::default()).unwrap();
        let res = [0, 400, 60, 20][k];
        let grid = grid_search(&inst, res).unwrap();
        let gap = grid.lattice_gap.unwrap();
        assert!(
            opt.rev_star >= grid.rev_star - 1e-9,
            "case {case}: {} < {}",
            opt.rev_star,
            grid.rev_star
        );
        assert!(opt.rev_star - grid.rev_star <= 2.0 * gap + 1e-9, "case {case}");
        assert!(opt.certificate <= 1e-3, "case {case}: certificate {}", opt.certificate);
        assert!(opt.certified);
        assert!((rev(&opt.p_star, &inst).unwrap() - opt.rev_star).abs() < 1e-15);
    }
}

#[test]
fn restarts_agree_on_dmr_instances() {
    let mut r = rng(32);
    for case in 0..8 {
        let inst = random_dmr_instance(&mut r, 2 + case % 2, 6, 1.0);
        let opt = maximize(&inst, &OptimizeConfig::default()).unwrap();
        let lo = opt.restart_revenues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(opt.rev_star - lo < 1e-6, "case {case}: {:?}", opt.restart_revenues);
        assert!(opt.best_history.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn maximize_is_seeded() {
    let mut r = rng(33);
    let inst = random_dmr_instance(&mut r, 3, 5, 1.0);
    let cfg = OptimizeConfig::default();
    assert_eq!(maximize(&inst, &cfg).unwrap(), maximize(&inst, &cfg).unwrap());
}

#[test]
fn single_demand_uniform_posts_half() {
    let u = Marginal::uniform(0.0, 1.0, 1.0).unwrap();
    let inst = ProblemInstance::iid(vec![1], u).unwrap();
    let opt = maximize(&inst, &OptimizeConfig::default()).unwrap();
    assert!((opt.p_star.get(1) - 0.5).abs() < 1e-6);
    assert!((opt.rev_star - 0.25).abs() < 1e-12);
}

#[test]
fn bad_configs_are_rejected() {
    let u = Marginal::uniform(0.0, 1.0, 1.0).unwrap();
    let inst = ProblemInstance::iid(vec![1], u).unwrap();
    let bad = [
        OptimizeConfig {
            max_iters: 0,
            ..Default::default()
        },
        OptimizeConfig {
            tol: -1.0,
            ..Default::default()
        },
        OptimizeConfig {
            eta0: 0.0,
            ..Default::default()
        },
        OptimizeConfig {
            restarts: 0,
            ..Default::default()
        },
    ];
    for cfg in bad {
        assert!(maximize(&inst, &cfg).is_err());
    }
    assert!(grid_search(&inst, 1).is_err());
}

#[test]
fn k2_closed_form_agrees_with_optimizer_and_grid() {
    let mut r = rng(34);
    for case in 0..15 {
        let inst = random_dmr_instance(&mut r, 2, 6, 1.0);
        let sol = solve_k2(&inst).unwrap();
        let p = sol.price_vector();
        assert!((rev(&p, &inst).unwrap() - sol.revenue).abs() < 1e-9, "case {case}");
        let opt = maximize(&inst, &OptimizeConfig::default()).unwrap();
        assert!(
            (opt.rev_star - sol.revenue).abs() < 1e-4,
            "case {case}: {} vs {}",
            opt.rev_star,
            sol.revenue
        );
        let grid = grid_search_refined(&inst, 41, 1e-3).unwrap();
        assert!((grid.rev_star - sol.revenue).abs() < 1e-3, "case {case}");
    }
}

#[test]
fn k2_candidates_are_consistent() {
    let mut r = rng(35);
    for _ in 0..30 {
        let inst = random_dmr_instance(&mut r, 2, 6, 1.0);
        let cands = candidate_objectives(&inst).unwrap();
        let sol = solve_k2(&inst).unwrap();
        let best = cands.iter().map(|c| c.revenue).fold(f64::NEG_INFINITY, f64::max);
        assert!((best - sol.revenue).abs() < 1e-12);
        for c in cands.iter().filter(|c| c.feasible()) {
            let (p1, p2) = candidate_prices(&inst, c);
            let p = pv(&[p1, p2]);
            assert!((rev(&p, &inst).unwrap() - c.revenue).abs() < 1e-9, "{:?}", c.case_id);
        }
    }
}

#[test]
fn k2_uniform_pair() {
    let u = Marginal::uniform(0.0, 1.0, 1.0).unwrap();
    let inst = ProblemInstance::iid(vec![1, 2], u).unwrap();
    let sol = solve_k2(&inst).unwrap();
    assert!((monopoly_threshold(inst.marginal(1), 1) - 0.5).abs() < 1e-6);
    let opt = maximize(&inst, &OptimizeConfig::default()).unwrap();
    assert!((sol.revenue - opt.rev_star).abs() < 1e-6);
    assert!(solve_k2(&random_dmr_instance(&mut rng(1), 3, 4, 1.0)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn projection_is_ordered_idempotent_and_nonexpansive(
        a in prop::collection::vec(-2.0f64..6.0, 1..6),
        noise in prop::collection::vec(-1.0f64..1.0, 6),
        upper in 0.5f64..5.0,
    ) {
        let p = project_ordered(&a, upper);
        let s = p.as_slice();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.iter().all(|x| (0.0..=upper).contains(x)));
        let again = project_ordered(s, upper);
        prop_assert_eq!(again.as_slice(), s);
        let b: Vec<f64> = a.iter().zip(&noise).map(|(x, n)| x + n).collect();
        let q = project_ordered(&b, upper);
        let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        prop_assert!(dist(s, q.as_slice()) <= dist(&a, &b) + 1e-12);
    }

    #[test]
    fn projection_is_closest_feasible_point(
        a in prop::collection::vec(-2.0f64..6.0, 1..5),
        pts in prop::collection::vec(0.0f64..1.0, 5),
        upper in 0.5f64..5.0,
    ) {
        let p = project_ordered(&a, upper);
        let mut cand: Vec<f64> = pts[..a.len()].iter().map(|x| x * upper).collect();
        cand.sort_by(|x, y| x.total_cmp(y));
        let d2 = |x: &[f64]| x.iter().zip(&a).map(|(u, v)| (u - v).powi(2)).sum::<f64>();
        prop_assert!(d2(p.as_slice()) <= d2(&cand) + 1e-12);
    }
}
