//! Mechanism invariants: objective accounting, optimality of bayes_opt,
//! curve formulas against direct 2D quadrature and against simulation.
mod common;

use std::f64::consts::E;

use blendbound::mechanisms::{bayes_opt, expect_pair, payoff, perf_product, simulate, Mechanism, MechanismKind};
use blendbound::{Distribution, Objective};
use common::bounded;
use proptest::prelude::*;

fn menu(p: f64, r: f64) -> Vec<Mechanism> {
    vec![Mechanism::spa(), Mechanism::lottery(), Mechanism::posted(p).unwrap(), Mechanism::spa_reserve(p).unwrap(), Mechanism::markup(r).unwrap()]
}

/// Direct double integral of the pointwise payoff, cut at the prices involved
/// and along the markup line.
fn direct(m: &Mechanism, d: &Distribution, obj: Objective, cuts: &[f64]) -> f64 {
    let ratio = match m.kind {
        MechanismKind::Markup(r) => Some(r),
        _ => None,
    };
    expect_pair(d, |x, y| payoff(&m.kind, obj, x, y).unwrap(), cuts, ratio).unwrap()
}

fn seed() -> u64 {
    std::env::var("BLENDBOUND_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn revenue_plus_residual_is_welfare(d in bounded(20.0), pq in 0.05..0.95f64, r in 1.0..3.0f64) {
        let p = d.value_of_quantile(pq);
        for m in menu(p, r) {
            let rev = perf_product(&m, &d, Objective::Revenue).unwrap().value;
            let rs = perf_product(&m, &d, Objective::ResidualSurplus).unwrap().value;
            let w = direct(&m, &d, Objective::Welfare, &[p]);
            prop_assert!((rev + rs - w).abs() <= 1e-8 * w.abs().max(1.0), "{:?} on {d}: {rev} + {rs} vs {w}", m.kind);
        }
    }

    #[test]
    fn bayes_opt_dominates_every_mechanism(d in bounded(20.0), pq in 0.05..0.95f64, r in 1.0..3.0f64) {
        let p = d.value_of_quantile(pq);
        for obj in [Objective::Revenue, Objective::ResidualSurplus] {
            let opt = bayes_opt(&d, obj, 2).unwrap().value;
            let mut all = menu(p, r);
            all.push(Mechanism::two_piece_iron());
            for m in all {
                let v = perf_product(&m, &d, obj).unwrap().value;
                prop_assert!(opt - v >= -1e-8 * opt.abs().max(1.0), "{obj}: {:?} earns {v} above opt {opt} on {d}", m.kind);
            }
        }
    }

    #[test]
    fn curve_formulas_match_direct_quadrature(pq in 0.05..0.95f64, quad in any::<bool>()) {
        let d = if quad {
            Distribution::quadratic(1.0).unwrap().truncate_top(20.0).unwrap()
        } else {
            Distribution::uniform(0.0, 1.0).unwrap()
        };
        let p = d.value_of_quantile(pq);
        for m in [Mechanism::spa(), Mechanism::lottery(), Mechanism::posted(p).unwrap(), Mechanism::spa_reserve(p).unwrap()] {
            for obj in [Objective::Revenue, Objective::ResidualSurplus] {
                let a = perf_product(&m, &d, obj).unwrap().value;
                let b = direct(&m, &d, obj, &[p]);
                prop_assert!((a - b).abs() <= 1e-5 * b.abs().max(1.0), "{:?} {obj}: curve {a} vs direct {b}", m.kind);
            }
        }
    }

    #[test]
    fn single_agent_posted_price(d in bounded(20.0), pq in 0.05..0.95f64) {
        let p = d.value_of_quantile(pq);
        let m = Mechanism::posted(p).unwrap().with_agents(1).unwrap();
        let rev = perf_product(&m, &d, Objective::Revenue).unwrap().value;
        let want = p * (1.0 - d.cdf_left(p));
        prop_assert!((rev - want).abs() <= 1e-9 * want.max(1.0), "{rev} vs {want}");
    }
}

#[test]
fn simulation_agrees_within_three_standard_errors() {
    let dists = [Distribution::uniform(0.0, 1.0).unwrap(), Distribution::quadratic(1.0).unwrap().truncate_top(20.0).unwrap()];
    for (k, d) in dists.iter().enumerate() {
        let p = d.value_of_quantile(0.4);
        for (j, m) in [Mechanism::spa(), Mechanism::posted(p).unwrap(), Mechanism::lottery()].iter().enumerate() {
            for obj in [Objective::Revenue, Objective::ResidualSurplus] {
                let exact = perf_product(m, d, obj).unwrap().value;
                let (mean, se) = simulate(m, d, obj, 1_000_000, seed() + (10 * k + j) as u64).unwrap();
                assert!((mean - exact).abs() <= 3.0 * se + 1e-12, "{:?} {obj} on {d}: {mean} +- {se} vs {exact}", m.kind);
            }
        }
    }
}

#[test]
fn residual_surplus_ordering_on_truncated_quadratics() {
    for h in [20.0f64, 50.0, 100.0] {
        let d = Distribution::quadratic(1.0).unwrap().truncate_top(h).unwrap();
        let rs = Objective::ResidualSurplus;
        let lot = perf_product(&Mechanism::lottery(), &d, rs).unwrap().value;
        let tpi = perf_product(&Mechanism::two_piece_iron(), &d, rs).unwrap().value;
        let opt = bayes_opt(&d, rs, 2).unwrap().value;
        let l = h.ln();
        assert!((lot - (1.0 + l)).abs() < 1e-8, "h={h}");
        assert!((tpi - ((2.0 + l) * h - (1.0 + l) * E) / h).abs() < 1e-8, "h={h}");
        assert!(lot < tpi && tpi < opt, "h={h}: {lot} {tpi} {opt}");
    }
}

#[test]
fn uniform_revenue_oracles() {
    let u = Distribution::uniform(0.0, 1.0).unwrap();
    assert!((perf_product(&Mechanism::spa(), &u, Objective::Revenue).unwrap().value - 1.0 / 3.0).abs() < 1e-8);
    assert!((bayes_opt(&u, Objective::Revenue, 2).unwrap().value - 5.0 / 12.0).abs() < 1e-6);
    // the optimum is the SPA with Myerson reserve 1/2
    let r = perf_product(&Mechanism::spa_reserve(0.5).unwrap(), &u, Objective::Revenue).unwrap().value;
    assert!((r - 5.0 / 12.0).abs() < 1e-9);
}
