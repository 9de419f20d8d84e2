//! The built-in dual pairs and their pointwise density check.
use blendbound::blends::{builtin_pair, total_weight, verify_dual, CorrelatedDensity, PairName};
use blendbound::Result;

fn main() -> Result<()> {
    for name in [PairName::QuadUnifInfinite, PairName::QuadUnifFinite(20.0), PairName::ShexpUnif, PairName::QuadCubic] {
        let (a, b) = builtin_pair(name)?;
        let r = verify_dual(&a, &b, 50, 1e-6)?;
        println!("{:<24} vs {:<24} 2d {:.2e}  1d {:.2e}  0d {:.2e}  pass {}", a.name, b.name, r.max_rel_err_2d, r.max_rel_err_1d, r.max_abs_err_0d, r.pass);
    }

    let (q, u) = builtin_pair(PairName::QuadUnifFinite(20.0))?;
    println!("g(5, 2) = {} on both sides: {}", q.density_2d(5.0, 2.0)?, u.density_2d(5.0, 2.0)?);
    println!("atom line g(20, y) = {}", q.density_1d(20.0, 3.0)?);
    println!("total weight {} (1 + 2 ln 20 = {})", total_weight(&q), 1.0 + 2.0 * 20f64.ln());
    let m = CorrelatedDensity::from_blend(&u).total_mass()?;
    println!("correlated mass {m:.9}");
    Ok(())
}
