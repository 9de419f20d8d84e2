//! Lower bounds from dual pairs for revenue and residual surplus.
use blendbound::blends::PairName;
use blendbound::bounds::{intro_pricing_bound, lb22, pair_bound, residual_sweep, revenue_bound_closed_form, BenchmarkMode};
use blendbound::{Objective, Result};

fn main() -> Result<()> {
    let s = pair_bound(PairName::ShexpUnif, Objective::Revenue, BenchmarkMode::Relaxed)?;
    println!("shifted exponentials: {:.9} (5e/12 = {:.9})", s.ratio, 5.0 * std::f64::consts::E / 12.0);

    for h in [3.0, 20.0, 1e3, 1e6] {
        let r = pair_bound(PairName::QuadUnifFinite(h), Objective::Revenue, BenchmarkMode::Relaxed)?;
        println!("revenue h={h:<9} ratio {:.9} closed form {:.9}", r.ratio, revenue_bound_closed_form(h));
    }
    println!("limit 23/18 = {:.9}", 23.0 / 18.0);

    let lb = lb22(18.0)?;
    println!("lb22(18) = {:.9}, closed form {:.9}", lb.value, lb.closed_form);
    let sweep = residual_sweep(9, 60)?;
    println!("residual surplus: best integer h = {}, ratio {:.9}; continuous argmax {:.6}", sweep.integer_argmax, sweep.integer_max, sweep.real_argmax);

    let exact = pair_bound(PairName::QuadUnifFinite(18.0), Objective::ResidualSurplus, BenchmarkMode::Exact)?;
    println!("with the exact benchmark: {:.9}", exact.ratio);

    println!("single-agent pricing at h=100: {:.6}", intro_pricing_bound(100.0)?);
    Ok(())
}
