//! Curve invariants: hull concavity and dominance, ironing by the hull's own
//! set, area dominance and grid convergence.
mod common;

use blendbound::curves::{area_under, iron_concave_hull, iron_with, performance_curve, IroningSet, QuantileCurve};
use blendbound::Objective;
use common::{bounded, builtin_families};
use proptest::prelude::*;

const OBJECTIVES: [Objective; 2] = [Objective::Revenue, Objective::ResidualSurplus];

/// Largest scaled second difference `min(dl, dr) (s_right - s_left)` over the samples.
fn worst_convexity(c: &QuantileCurve) -> f64 {
    let s: Vec<(f64, f64)> = c.samples().collect();
    let mut worst = f64::NEG_INFINITY;
    for w in s.windows(3) {
        let (dl, dr) = (w[1].0 - w[0].0, w[2].0 - w[1].0);
        if dl <= 0.0 || dr <= 0.0 {
            continue;
        }
        let (sl, sr) = ((w[1].1 - w[0].1) / dl, (w[2].1 - w[1].1) / dr);
        worst = worst.max(dl.min(dr) * (sr - sl));
    }
    worst
}

fn ironed(set: &IroningSet, q: f64) -> bool {
    set.intervals.iter().any(|&(a, b)| q >= a - 1e-12 && q <= b + 1e-12)
}

fn check_curve(c: &QuantileCurve) -> Result<(), TestCaseError> {
    let (hull, set) = iron_concave_hull(c);
    let scale = c.values().iter().fold(1.0f64, |m, r| m.max(r.abs()));
    let conv = worst_convexity(&hull);
    prop_assert!(conv <= 1e-12 * scale, "hull not concave: {conv:e}");
    for (q, r) in c.samples() {
        let hq = hull.eval(q);
        prop_assert!(hq >= r - 1e-12 * scale, "hull below curve at q={q}: {hq} < {r}");
        if !ironed(&set, q) {
            prop_assert!((hq - r).abs() <= 1e-9 * scale, "hull departs off the ironing set at q={q}: {hq} vs {r}");
        }
    }
    let again = iron_with(c, &set).unwrap();
    for (q, _) in c.samples() {
        prop_assert!((again.eval(q) - hull.eval(q)).abs() <= 1e-6 * scale, "iron_with differs at q={q}");
    }
    let (a_hull, a_curve) = (area_under(&hull).unwrap(), area_under(c).unwrap());
    prop_assert!(a_hull >= a_curve - 1e-12 * scale, "area {a_hull} < {a_curve}");
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hull_properties_on_random_distributions(d in bounded(20.0), rs in any::<bool>()) {
        let obj = if rs { Objective::ResidualSurplus } else { Objective::Revenue };
        let c = performance_curve(&d, obj, 256).unwrap();
        check_curve(&c)?;
    }

    #[test]
    fn hull_properties_on_random_samples(r in prop::collection::vec(0.0..5.0f64, 3..40)) {
        let n = r.len() + 1;
        let q: Vec<f64> = (0..=r.len()).map(|i| i as f64 / (n - 1) as f64).collect();
        let mut vals = vec![0.0];
        vals.extend(r);
        let c = QuantileCurve::from_samples(q, vals, None).unwrap();
        check_curve(&c)?;
    }
}

#[test]
fn builtin_families_satisfy_hull_properties() {
    for (name, d) in builtin_families(20.0) {
        for obj in OBJECTIVES {
            let c = performance_curve(&d, obj, 256).unwrap();
            check_curve(&c).unwrap_or_else(|e| panic!("{name} {obj}: {e}"));
        }
    }
}

#[test]
fn doubling_the_grid_leaves_areas_converged() {
    for (name, d) in builtin_families(20.0) {
        for obj in OBJECTIVES {
            for hull in [false, true] {
                let area = |n: usize| {
                    let c = performance_curve(&d, obj, n).unwrap();
                    if hull {
                        area_under(&iron_concave_hull(&c).0).unwrap()
                    } else {
                        area_under(&c).unwrap()
                    }
                };
                let (a, b) = (area(256), area(512));
                let rel = (a - b).abs() / b.abs().max(1e-12);
                assert!(rel < 1e-5, "{name} {obj} hull={hull}: {a} vs {b} ({rel:e})");
            }
        }
    }
}

#[test]
fn area_oracles_for_the_uniform() {
    let u = blendbound::Distribution::uniform(0.0, 1.0).unwrap();
    let c = performance_curve(&u, Objective::Revenue, 256).unwrap();
    assert!((area_under(&c).unwrap() - 1.0 / 6.0).abs() < 1e-9);
    let (hull, set) = iron_concave_hull(&c);
    assert!(set.is_empty());
    assert!((area_under(&hull).unwrap() - 1.0 / 6.0).abs() < 1e-9);
}
