//! Building dual pairs from a separable density and from the inverse-distribution map.
use blendbound::blends::verify_dual;
use blendbound::generators::{check_separable_conditions, inverse_generate, separable_generate, SeparablePair};
use blendbound::{Distribution, Result};

fn main() -> Result<()> {
    for (g1, g2) in [("1/x^2", "1"), ("exp(-x)", "1"), ("1/x^3", "1/x^2")] {
        let pair = SeparablePair::parse(g1, g2)?;
        let report = check_separable_conditions(&pair, None);
        println!("g1 = {g1}, g2 = {g2}: conditions hold {}, normalizable {}", report.all_hold(), report.normalizable());
        let g = separable_generate(&pair)?;
        println!("  upward weight at z=2: {}, downward: {}", g.upward.weight_at(2.0), g.downward.weight_at(2.0));
        if let Some((up, down)) = &g.normalized {
            println!("  normalized weights at z=2: {} and {}", up.weight_at(2.0), down.weight_at(2.0));
        }
        println!("  dual: {}", verify_dual(&g.upward, &g.downward, 30, 1e-6)?.pass);
    }

    let (a, b) = inverse_generate(&Distribution::quadratic(1.0)?)?;
    println!("inverse map of Qud_1: {} vs {}, dual {}", a.name, b.name, verify_dual(&a, &b, 30, 1e-6)?.pass);
    Ok(())
}
