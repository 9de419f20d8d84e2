//! Shared strategies for the property suites.
#![allow(dead_code)]
use blendbound::{Distribution, Transform};
use proptest::prelude::*;

/// A base family with random parameters.
pub fn base() -> impl Strategy<Value = Distribution> {
    prop_oneof![
        (0.0..5.0f64, 0.1..10.0f64).prop_map(|(a, w)| Distribution::uniform(a, a + w).unwrap()),
        (0.1..10.0f64).prop_map(|z| Distribution::quadratic(z).unwrap()),
        (0.0..5.0f64, 0.2..5.0f64).prop_map(|(a, b)| Distribution::shifted_exponential(a, b).unwrap()),
        (0.2..5.0f64).prop_map(|b| Distribution::exponential(b).unwrap()),
        (0.5..5.0f64, 0.05..0.95f64).prop_map(|(a, f)| Distribution::shifted_quadratic(a, a * f).unwrap()),
        (0.1..10.0f64).prop_map(|a| Distribution::point_mass(a).unwrap()),
    ]
}

/// Transform applied at a quantile-relative position, so parameters stay valid.
#[derive(Debug, Clone, Copy)]
pub enum Step {
    Truncate(f64),
    Condition(f64),
    Rescale(f64),
    Invert,
}

pub fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        (0.02..0.8f64).prop_map(Step::Truncate),
        (0.2..1.0f64).prop_map(Step::Condition),
        (0.1..10.0f64).prop_map(Step::Rescale),
        Just(Step::Invert),
    ]
}

/// Applies the steps that are admissible; inadmissible ones are skipped.
pub fn apply_steps(d: &Distribution, steps: &[Step]) -> Distribution {
    let mut d = d.clone();
    for s in steps {
        let t = match *s {
            Step::Truncate(q) => Transform::TruncateTop(d.value_of_quantile(q)),
            Step::Condition(q) => Transform::ConditionAbove(d.value_of_quantile(q)),
            Step::Rescale(z) => Transform::Rescale(z),
            Step::Invert => Transform::Invert,
        };
        if let Ok(next) = d.apply(t) {
            d = next;
        }
    }
    d
}

/// A base family followed by up to three transforms.
pub fn distribution() -> impl Strategy<Value = Distribution> {
    (base(), prop::collection::vec(step(), 0..=3)).prop_map(|(d, s)| apply_steps(&d, &s))
}

/// Finite-mean distributions capped at `h`, for curve and mechanism checks.
pub fn bounded(h: f64) -> impl Strategy<Value = Distribution> {
    base().prop_filter_map("cap must lie above the support start", move |d| {
        let s = d.support();
        if s.lo * 1.5 >= h {
            return None;
        }
        d.truncate_top(h).ok()
    })
}

/// The built-in families truncated at `h`.
pub fn builtin_families(h: f64) -> Vec<(&'static str, Distribution)> {
    vec![
        ("Ud[0,1]", Distribution::uniform(0.0, 1.0).unwrap()),
        ("Ud[1,h]", Distribution::uniform(1.0, h).unwrap()),
        ("Qud_1 | h", Distribution::quadratic(1.0).unwrap().truncate_top(h).unwrap()),
        ("Sed[1,1] | h", Distribution::shifted_exponential(1.0, 1.0).unwrap().truncate_top(h).unwrap()),
        ("Exd(0.5) | h", Distribution::exponential(0.5).unwrap().truncate_top(h).unwrap()),
        ("Sqd[2,1] | h", Distribution::shifted_quadratic(2.0, 1.0).unwrap().truncate_top(h).unwrap()),
        ("PM(3)", Distribution::point_mass(3.0).unwrap()),
    ]
}
