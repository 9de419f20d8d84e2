//! Closed-form families, transform chains and the record format.
use blendbound::{Distribution, Objective, Result};

fn main() -> Result<()> {
    // equal revenue, capped at 20: an atom of mass 1/20 sits at the cap
    let eqr = Distribution::quadratic(1.0)?.truncate_top(20.0)?;
    println!("P(V = 20) = {}", eqr.atom_mass(20.0));
    println!("mean = {:.6} (1 + ln 20 = {:.6})", eqr.mean(), 1.0 + 20f64.ln());
    for q in [0.9, 0.5, 0.1, 0.05] {
        println!("V({q}) = {}", eqr.value_of_quantile(q));
    }

    let u = Distribution::uniform(0.0, 1.0)?;
    for v in [0.25, 0.5, 0.75] {
        println!("Ud[0,1] revenue virtual value at {v}: {}", u.virtual_value(Objective::Revenue, v)?);
    }

    // conditioning an exponential leaves its virtual values alone
    let e = Distribution::exponential(1.0)?;
    let tail = e.condition_above(2.0)?;
    println!("phi(3): {} vs {}", e.virtual_value(Objective::Revenue, 3.0)?, tail.virtual_value(Objective::Revenue, 3.0)?);

    let json = serde_json::to_string(&eqr)?;
    println!("{json}");
    let back: Distribution = serde_json::from_str(&json)?;
    println!("round trip cdf(5) = {}", back.cdf(5.0));
    Ok(())
}
