//! Expected performance of the auction menu, with a Monte Carlo check.
use blendbound::mechanisms::{bayes_opt, perf_product, simulate, Mechanism};
use blendbound::{Distribution, Objective, Result};

fn main() -> Result<()> {
    let d = Distribution::quadratic(1.0)?.truncate_top(20.0)?;
    let menu = [
        ("spa", Mechanism::spa()),
        ("spa_reserve(2)", Mechanism::spa_reserve(2.0)?),
        ("posted(4)", Mechanism::posted(4.0)?),
        ("lottery", Mechanism::lottery()),
        ("markup(1.5)", Mechanism::markup(1.5)?),
        ("two_piece_iron", Mechanism::two_piece_iron()),
    ];
    println!("{:<16} {:>12} {:>12} {:>12}", "mechanism", "revenue", "residual", "welfare");
    for (name, m) in &menu {
        let r = perf_product(m, &d, Objective::Revenue)?.value;
        let s = perf_product(m, &d, Objective::ResidualSurplus)?.value;
        let w = perf_product(m, &d, Objective::Welfare)?.value;
        println!("{name:<16} {r:>12.6} {s:>12.6} {w:>12.6}");
    }
    for obj in [Objective::Revenue, Objective::ResidualSurplus] {
        println!("optimal {obj}: {:.6}", bayes_opt(&d, obj, 2)?.value);
    }

    let u = Distribution::uniform(0.0, 1.0)?;
    let (mean, se) = simulate(&Mechanism::spa(), &u, Objective::Revenue, 200_000, 0)?;
    println!("SPA on Ud[0,1]: simulated {mean:.5} +- {se:.5}, exact 1/3");
    Ok(())
}
