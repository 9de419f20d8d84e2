//! The in-repo dense simplex on a small production problem.
use blendbound::simplex::{solve_lp, LpInstance, Sense};
use blendbound::Result;

fn main() -> Result<()> {
    // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
    let mut lp = LpInstance::new(2, true);
    lp.objective = vec![3.0, 5.0];
    lp.add_row(vec![1.0, 0.0], Sense::Le, 4.0, "plant1");
    lp.add_row(vec![0.0, 2.0], Sense::Le, 12.0, "plant2");
    lp.add_row(vec![3.0, 2.0], Sense::Le, 18.0, "plant3");
    let s = solve_lp(&lp)?;
    println!("{:?}: x = {:?}, objective {}", s.status, s.x, s.objective);
    println!("shadow prices {:?}, dual objective {}", s.duals, s.dual_objective);
    print!("{}", lp.dump());
    Ok(())
}
