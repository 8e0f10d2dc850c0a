use cpi_core::bounds::{bound_value, BoundArgs, BoundKind};
use cpi_core::dgp::{Covariance, Dgp, DgpSpec, TrainingSample};
use cpi_core::lsq::{criterion_value, fit_model, Criterion, ModelMask};
use cpi_core::modelsel::{greedy_block_path, select_min, select_on_path, BlockPartition, EliminationStrategy, ModelCollection};
use cpi_core::oracle::{conditional_coverage, exact_tv_gaussian, GaussianLaw};
use cpi_core::predict::{prediction_interval, threshold_test, Side};
use cpi_core::rng::substream;
use proptest::prelude::*;

fn dgp(p: usize, seed: u64) -> Dgp<f64> {
    let beta = (0..p).map(|j| ((j as f64 + 1.0) * 0.7 + seed as f64).sin()).collect();
    let gamma = (0..p).map(|j| ((j as f64) * 1.3 + seed as f64).cos()).collect();
    DgpSpec { p, beta0: 0.3, beta, gamma, sigma_x: Covariance::Geometric { r: 0.5 }, sigma_u: 1.0 }.build().unwrap()
}

fn sample(p: usize, n: usize, seed: u64) -> TrainingSample<f64> {
    dgp(p, seed).sample_training(n, &mut substream(seed, 0)).unwrap()
}

fn law() -> impl Strategy<Value = GaussianLaw<f64>> {
    (-4.0..4.0f64, 0.05..4.0f64).prop_map(|(mean, sd)| GaussianLaw { mean, sd })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn criterion_ordering(seed in 0u64..10_000, k in 1usize..7) {
        let s = sample(6, 20, seed);
        let mask = ModelMask::leading(6, k).unwrap();
        let fit = fit_model(&s, &mask).unwrap();
        let v = |c| criterion_value(&fit, c);
        prop_assert!(v(Criterion::SigmaHatSq) <= v(Criterion::RhoHatSq));
        prop_assert!(v(Criterion::RhoHatSq) <= v(Criterion::Gcv));
        prop_assert!(v(Criterion::Sp) <= v(Criterion::RhoCheckSq));
        prop_assert_eq!(v(Criterion::Sp), v(Criterion::DeltaCheckSq));
    }

    #[test]
    fn rss_shrinks_when_adding_a_regressor(seed in 0u64..10_000, k in 1usize..7) {
        let s = sample(6, 20, seed);
        let small = fit_model(&s, &ModelMask::leading(6, k).unwrap()).unwrap();
        let big = fit_model(&s, &ModelMask::leading(6, k + 1).unwrap()).unwrap();
        prop_assert!(big.rss <= small.rss * (1.0 + 1e-12));
    }

    #[test]
    fn refit_on_fitted_values_is_idempotent(seed in 0u64..10_000) {
        let s = sample(5, 15, seed);
        let mask = ModelMask::from_indices(5, &[2, 4]).unwrap();
        let fit = fit_model(&s, &mask).unwrap();
        let fitted: Vec<f64> = (0..s.n()).map(|i| s.x().row(i).iter().zip(&fit.beta_hat).map(|(a, b)| a * b).sum()).collect();
        let again = fit_model(&TrainingSample::new(s.x().clone(), fitted).unwrap(), &mask).unwrap();
        for (a, b) in again.beta_hat.iter().zip(&fit.beta_hat) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
        prop_assert!(again.rss < 1e-18 * (1.0 + fit.rss) + 1e-20);
    }

    #[test]
    fn tv_is_a_metric(p in law(), q in law(), r in law()) {
        let pq = exact_tv_gaussian(p, q);
        prop_assert!((pq - exact_tv_gaussian(q, p)).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!(exact_tv_gaussian(p, p) < 1e-12);
        prop_assert!(pq <= exact_tv_gaussian(p, r) + exact_tv_gaussian(r, q) + 1e-12);
    }

    #[test]
    fn tv_is_location_scale_invariant(p in law(), q in law(), shift in -3.0..3.0f64, scale in 0.2..5.0f64) {
        let map = |l: GaussianLaw<f64>| GaussianLaw { mean: l.mean * scale + shift, sd: l.sd * scale };
        prop_assert!((exact_tv_gaussian(p, q) - exact_tv_gaussian(map(p), map(q))).abs() < 1e-10);
    }

    #[test]
    fn coverage_complement(l in law(), h in 0.0..8.0f64) {
        use cpi_core::special::{normal_cdf, normal_sf};
        let cov = conditional_coverage(l, h);
        let tails = normal_cdf((-h - l.mean) / l.sd) + normal_sf((h - l.mean) / l.sd);
        prop_assert!((cov + tails - 1.0).abs() < 1e-12);
        let mirrored = GaussianLaw { mean: -l.mean, sd: l.sd };
        prop_assert!((cov - conditional_coverage(mirrored, h)).abs() < 1e-12);
    }

    #[test]
    fn bounds_decrease_in_epsilon(e1 in 0.01..0.69f64, e2 in 0.01..0.69f64, m in 2usize..20) {
        let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
        let a = BoundArgs::<f64>::model(80, m);
        let c = BoundArgs::<f64>::collection(120, 16, m.max(2));
        for kind in [BoundKind::Thm31, BoundKind::Thm41] {
            prop_assert!(bound_value(kind, &a.with_epsilon(hi)).unwrap() <= bound_value(kind, &a.with_epsilon(lo)).unwrap() + 1e-15);
        }
        for kind in [BoundKind::Cor32Selection, BoundKind::Cor32Estimate, BoundKind::Cor42, BoundKind::Prop43, BoundKind::Prop44] {
            prop_assert!(bound_value(kind, &c.with_epsilon(hi)).unwrap() <= bound_value(kind, &c.with_epsilon(lo)).unwrap() + 1e-15);
        }
    }

    #[test]
    fn bounds_decrease_in_n(n in 30usize..400, eps in 0.05..0.69f64) {
        let a = |n| BoundArgs::<f64>::model(n, 10).with_epsilon(eps);
        prop_assert!(bound_value(BoundKind::Thm31, &a(n + 10)).unwrap() <= bound_value(BoundKind::Thm31, &a(n)).unwrap() + 1e-15);
        prop_assert!(bound_value(BoundKind::Thm41, &a(n + 10)).unwrap() <= bound_value(BoundKind::Thm41, &a(n)).unwrap() + 1e-15);
    }

    #[test]
    fn lemb3_upper_below_coarse(t in 0.0..5.0f64, n in 20usize..300, m in 1usize..15) {
        let a = BoundArgs::<f64>::model(n, m).with_t(t);
        let fine = bound_value(BoundKind::LemB3Upper, &a).unwrap();
        let coarse = bound_value(BoundKind::LemB3Coarse, &a).unwrap();
        prop_assert!(fine <= coarse * (1.0 + 1e-12));
    }

    #[test]
    fn kappa_nonnegative(r in 0.01..50.0f64, f in -0.99..20.0f64) {
        let a = BoundArgs::<f64> { r: Some(r), c: Some(f * r), ..Default::default() };
        prop_assert!(bound_value(BoundKind::Kappa, &a).unwrap() >= -1e-12);
    }

    #[test]
    fn interval_and_tests_agree(seed in 0u64..10_000, y in -6.0..6.0f64, alpha in 0.01..0.5f64) {
        let s = sample(3, 12, seed);
        let fit = fit_model(&s, &ModelMask::full(3)).unwrap();
        let x_f = [1.0, 0.1, -0.4, 0.8];
        let i = prediction_interval(&fit, &x_f, alpha).unwrap();
        let above = threshold_test(&fit, &x_f, y, alpha / 2.0, Side::Above).unwrap();
        let below = threshold_test(&fit, &x_f, y, alpha / 2.0, Side::Below).unwrap();
        prop_assert!((above.p_value + below.p_value - 1.0).abs() < 1e-12);
        // skip points numerically on the boundary
        let margin = ((y - i.lower()).abs()).min((y - i.upper()).abs());
        if margin > 1e-9 {
            prop_assert_eq!(i.contains(y), !above.reject && !below.reject);
        }
    }

    #[test]
    fn selection_is_scale_invariant(seed in 0u64..10_000, c in 0.01..100.0f64) {
        let s = sample(6, 25, seed);
        let coll = ModelCollection::nested(6, 1..=7).unwrap();
        let scaled = s.scale_response(c);
        for kind in Criterion::ALL {
            prop_assert_eq!(select_min(&s, &coll, kind).unwrap().index, select_min(&scaled, &coll, kind).unwrap().index);
        }
        let blocks = BlockPartition::contiguous(3, 2).unwrap();
        let a = greedy_block_path(&s, &blocks, EliminationStrategy::Downdate).unwrap();
        let b = greedy_block_path(&scaled, &blocks, EliminationStrategy::Downdate).unwrap();
        prop_assert_eq!(&a.elimination_order, &b.elimination_order);
        prop_assert_eq!(select_on_path(&s, &a).unwrap().index, select_on_path(&scaled, &b).unwrap().index);
    }

    #[test]
    fn greedy_path_is_nested_and_monotone(seed in 0u64..10_000) {
        let s = sample(8, 30, seed);
        let blocks = BlockPartition::contiguous(4, 2).unwrap();
        let path = greedy_block_path(&s, &blocks, EliminationStrategy::Downdate).unwrap();
        prop_assert_eq!(path.visited.len(), 5);
        prop_assert_eq!(path.visited[4].size(), 1);
        for w in path.visited.windows(2) {
            prop_assert!(w[1].is_subset_of(&w[0]));
            prop_assert_eq!(w[0].size() - w[1].size(), 2);
        }
        for w in path.rss_path.windows(2) {
            prop_assert!(w[0] <= w[1] * (1.0 + 1e-12));
        }
        let mut order = path.elimination_order.clone();
        order.sort();
        prop_assert_eq!(order, vec![0, 1, 2, 3]);
        let refit = greedy_block_path(&s, &blocks, EliminationStrategy::Refit).unwrap();
        prop_assert_eq!(&refit.visited, &path.visited);
    }
}
