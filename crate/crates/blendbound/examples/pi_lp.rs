//! The discretized prior-independent program and a dual certificate.
use blendbound::pilp::{alpha_pi, dual_certificate, solve_pi, DiscreteDist, PiOptions, ValueGrid};
use blendbound::{Objective, Result};

fn main() -> Result<()> {
    // one agent, values 1 and 2: no single price menu beats 3/2
    let grid = ValueGrid::new(vec![1.0, 2.0], 1)?;
    let point = |i| DiscreteDist::point_mass(&grid, i);
    let er = DiscreteDist::equal_revenue(&grid);
    let dists = vec![point(0)?, point(1)?, er];
    let s = solve_pi(&grid, &dists, Objective::Revenue, PiOptions::default())?;
    println!("alpha = {}, allocation {:?}, duality gap {:.1e}", s.alpha, s.allocation, s.lp.duality_gap());

    let cert = dual_certificate(&grid, &dists, &[0.5, 0.5, 0.0], &[0.0, 0.0, 1.0], Objective::Revenue)?;
    println!("certificate ratio {} accepted {}", cert.ratio, cert.accepted);

    // two agents on three values
    let grid = ValueGrid::new(vec![1.0, 2.0, 4.0], 2)?;
    let dists = vec![DiscreteDist::new(vec![0.5, 0.25, 0.25])?, DiscreteDist::new(vec![0.1, 0.2, 0.7])?, DiscreteDist::point_mass(&grid, 1)?];
    for obj in [Objective::Revenue, Objective::ResidualSurplus] {
        println!("{obj}: alpha = {:.9}", alpha_pi(&grid, &dists, obj)?);
    }
    let prog = blendbound::pilp::build_pi_lp(&grid, &dists[..1], Objective::Revenue, PiOptions::default())?;
    println!("{}", prog.lp.dump().lines().take(6).collect::<Vec<_>>().join("\n"));
    Ok(())
}
