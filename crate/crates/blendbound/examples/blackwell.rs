//! Garbling checks and the discretized blends-revelation structures.
use blendbound::blackwell::{blackwell_order, blend_posteriors, discretize_finite_pair, preference_witness, product_posterior_error, InformationStructure};
use blendbound::Result;

fn main() -> Result<()> {
    let states: Vec<String> = ["low", "mid", "high"].iter().map(|s| s.to_string()).collect();
    let prior = [0.5, 0.3, 0.2];
    let full = InformationStructure::fully_informative(states.clone(), &prior)?;
    let none = InformationStructure::uninformative(states, &prior)?;
    println!("full vs none: {:?}", blackwell_order(&full, &none)?.order);

    let d = discretize_finite_pair(20.0, 6, 12)?;
    println!("value bins {:?}", d.bins.edges);
    let r = blackwell_order(&d.first, &d.second)?;
    println!("Quadratics vs Uniforms: {:?} (residuals {:.4} and {:.4})", r.order, r.forward.residual, r.backward.residual);
    let w = preference_witness(&d.grid, &d.first, &d.second)?;
    println!("revenue favors Uniforms by {:.6}, residual surplus favors Quadratics by {:.6}", w.revenue_margin, w.residual_margin);

    let (members, weights) = &d.second_members;
    let s = blend_posteriors(&d.grid, members, weights)?;
    println!("posterior product error {:.1e}", product_posterior_error(&d.grid, members, &s));
    Ok(())
}
