//! Property suites that gate every build: choice normalization, the
//! satisfaction gradient identity, price additivity, MAPD degeneracy,
//! equilibrium start independence and deterministic parallel replay.

use proptest::prelude::*;
use tripprice::demand::{logit, mode_logsum, mode_probs, satisfaction, ChoiceModel};
use tripprice::equilibrium::{solve_sue, solve_sue_from, SolverConfig};
use tripprice::metrics::{equity_from_unit, mapd};
use tripprice::netmodel::{builtin, LogsumForm, BUILTIN_NAMES};
use tripprice::optimizer::{minimize, OptimizerConfig};
use tripprice::pricing::{priceable_links, road_to_path_prices, Bounds, DesignProblem, Priceable, SchemeKind, Weights};
use tripprice::supply::{non_additive_costs, path_costs, LinkCosts};

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn probabilities_are_normalized(net in 0usize..3, load in 0.0f64..3000.0, shift in proptest::collection::vec(-5.0f64..5.0, 40)) {
        let s = builtin(BUILTIN_NAMES[net]).unwrap();
        let model = ChoiceModel::new(&s);
        let flows: Vec<f64> = (0..s.links().len()).map(|a| load * (0.5 + 0.5 * ((a * 7 % 11) as f64 / 11.0))).collect();
        let costs = LinkCosts::evaluate(&s, &flows).unwrap();
        let mut fixed = non_additive_costs(&s);
        for (k, f) in fixed.iter_mut().enumerate() {
            *f += shift[k % shift.len()].abs();
        }
        let p = model.evaluate(&costs, &fixed).unwrap();
        for q in 0..s.classes().len() {
            for w in 0..s.ods().len() {
                let total: f64 = p.mode[q][w].iter().sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            for b in s.blocks() {
                let total: f64 = b.paths.iter().map(|&k| p.conditional[q][k]).sum();
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            let joint: f64 = p.joint[q].iter().sum();
            prop_assert!((joint - s.ods().len() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn satisfaction_gradient_matches_finite_differences(
        car in proptest::collection::vec(-30.0f64..-5.0, 1..5),
        alt in proptest::collection::vec(-30.0f64..-5.0, 1..3),
        theta_k in 0.5f64..8.0,
        theta_m in 0.2f64..3.0,
    ) {
        let logsums = |car: &[f64], alt: &[f64]| {
            [
                Some(mode_logsum(car, theta_k, LogsumForm::Scaled).unwrap()),
                Some(mode_logsum(alt, theta_k, LogsumForm::Scaled).unwrap()),
            ]
        };
        let s_of = |car: &[f64], alt: &[f64]| satisfaction(&logsums(car, alt), theta_m).unwrap();
        let pm = mode_probs(&logsums(&car, &alt), theta_m).unwrap();
        let pk = logit(&car, theta_k).unwrap();
        let h = 1e-6;
        for i in 0..car.len() {
            let (mut up, mut dn) = (car.clone(), car.clone());
            up[i] += h;
            dn[i] -= h;
            let fd = (s_of(&up, &alt) - s_of(&dn, &alt)) / (2.0 * h);
            prop_assert!((fd - pk[i] * pm[0]).abs() < 1e-5, "{} vs {}", fd, pk[i] * pm[0]);
        }
    }

    #[test]
    fn path_prices_add_exactly(load in 0.0f64..2500.0, prices in proptest::collection::vec(-5.0f64..5.0, 25)) {
        let s = builtin("nd-car-only").unwrap();
        let flows = vec![load; s.links().len()];
        for q in 0..s.classes().len() {
            let free = path_costs(&s, q, &flows, &vec![0.0; 25]).unwrap();
            let priced = path_costs(&s, q, &flows, &prices).unwrap();
            for k in 0..25 {
                prop_assert_eq!(priced.additive[k], free.additive[k]);
                prop_assert_eq!(priced.price[k], prices[k]);
                let diff = priced.total[k] - free.total[k];
                prop_assert!((diff - prices[k]).abs() <= 1e-12 * (1.0 + free.total[k].abs()));
            }
        }
    }

    #[test]
    fn road_prices_sum_along_paths(unit in proptest::collection::vec(0.0f64..5.0, 19)) {
        let s = builtin("nd-car-only").unwrap();
        let links = priceable_links(&s, Priceable::CarOnly);
        prop_assert_eq!(links.len(), unit.len());
        let pv = road_to_path_prices(&s, &unit, Priceable::CarOnly, Bounds::PRICING).unwrap();
        for (k, p) in s.paths().iter().enumerate() {
            let oracle: f64 = p
                .links
                .iter()
                .filter_map(|a| links.iter().position(|l| l == a).map(|i| unit[i] * s.links()[*a].length))
                .sum();
            prop_assert!((pv.path_prices[k] - oracle).abs() < 1e-12 * (1.0 + oracle));
        }
    }

    #[test]
    fn mapd_vanishes_on_constant_satisfaction(value in -50.0f64..-0.1, nq in 1usize..5, nw in 1usize..6) {
        let unit = vec![vec![value; nw]; nq];
        let (q, w, all) = equity_from_unit(&unit);
        for m in [q, w, all] {
            prop_assert!(m.unwrap() < 1e-12);
        }
    }

    #[test]
    fn mapd_vanishes_on_separable_satisfaction(base in -50.0f64..-1.0, od in proptest::collection::vec(0.2f64..3.0, 1..6), nq in 1usize..5) {
        // Rows identical across classes: no class dispersion, and the
        // combined measure sees no within-OD dispersion either.
        let row: Vec<f64> = od.iter().map(|f| base * f).collect();
        let unit = vec![row.clone(); nq];
        let (q, _, all) = equity_from_unit(&unit);
        prop_assert!(q.unwrap() < 1e-12);
        prop_assert!(all.unwrap() < 1e-12);
        if od.iter().all(|&f| f == od[0]) {
            prop_assert_eq!(mapd(&row), Some(0.0));
        }
    }
}

proptest! {
    #![proptest_config(config(6))]

    #[test]
    fn equilibrium_is_independent_of_the_start(net in 0usize..3, scale in 0.0f64..3.0, seed in 0u64..1000) {
        let s = builtin(BUILTIN_NAMES[net]).unwrap();
        let cfg = SolverConfig::default();
        let prices = vec![0.0; s.paths().len()];
        let reference = solve_sue(&s, &prices, &cfg).unwrap();
        let mut x = seed;
        let initial: Vec<Vec<f64>> = reference
            .path_flows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|&h| {
                        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        h * scale * ((x >> 33) as f64 / (1u64 << 31) as f64)
                    })
                    .collect()
            })
            .collect();
        let other = solve_sue_from(&s, &prices, &cfg, Some(&initial)).unwrap();
        prop_assert!(other.converged);
        for (a, b) in other.link_flows.iter().zip(&reference.link_flows) {
            prop_assert!((a - b).abs() / (1.0 + b) <= 10.0 * cfg.tol, "{} vs {}", a, b);
        }
    }
}

#[test]
fn replay_is_identical_for_any_worker_count() {
    let s = builtin("nd-car-only").unwrap();
    let problem = DesignProblem::new(s, SchemeKind::Trip, Priceable::CarOnly, Weights::preset("all").unwrap(), None, SolverConfig::default()).unwrap();
    let base = OptimizerConfig {
        population: 16,
        generations: 6,
        restarts: 2,
        polish_evals: 40,
        seed: 11,
        ..OptimizerConfig::default()
    };
    let runs: Vec<_> = [1, 2, 4]
        .iter()
        .map(|&n| minimize(&problem, &OptimizerConfig { threads: Some(n), ..base }, &[]).unwrap())
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0], runs[2]);
}

#[test]
fn mapd_literal_degeneracy_needs_separability() {
    // Equal row and column means do not make the per-cell measure vanish.
    let unit = vec![vec![-1.0, -2.0], vec![-2.0, -1.0]];
    let (q, w, all) = equity_from_unit(&unit);
    assert_eq!((q, w), (Some(0.0), Some(0.0)));
    assert!(all.unwrap() > 0.0);
}
