//! Revenue and residual-surplus curves, concave hulls and ironing.
use blendbound::curves::{area_under, best_downward_iron, hull_max, iron_concave_hull, iron_with, performance_curve, write_hull_csv, IroningSet};
use blendbound::{Distribution, Objective, Result};

fn main() -> Result<()> {
    let u = Distribution::uniform(0.0, 1.0)?;
    let rev = performance_curve(&u, Objective::Revenue, 256)?;
    let (q, r) = hull_max(&rev);
    println!("Ud[0,1]: monopoly quantile {q:.6}, revenue {r:.6}");

    // residual surplus of capped equal revenue is not concave
    let d = Distribution::quadratic(1.0)?.truncate_top(20.0)?;
    let rs = performance_curve(&d, Objective::ResidualSurplus, 512)?;
    let (hull, set) = iron_concave_hull(&rs);
    println!("ironing intervals: {:?}", set.intervals);
    println!("area under curve {:.9}, under hull {:.9}", area_under(&rs)?, area_under(&hull)?);

    let (qs, slope) = best_downward_iron(&rs)?;
    println!("two-piece split at q* = {qs:.9} (e/20 = {:.9}), slope {slope:.6}", std::f64::consts::E / 20.0);
    let two = iron_with(&rs, &IroningSet::new(vec![(0.0, qs), (qs, 1.0)])?)?;
    println!("two-piece ironed area {:.9}", area_under(&two)?);

    let mut out = Vec::new();
    write_hull_csv(&rs, &hull, &mut out)?;
    print!("{}", String::from_utf8_lossy(&out).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok(())
}
