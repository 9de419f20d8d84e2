//! Constructive dual-blend generators.
//!
//! A separable pair `(g1, g2)` yields two blends whose correlated density is
//! `g1(v1) g2(v2)` on the cone `v1 >= v2`: upward tails of `g1` weighted by
//! `dψ` and downward heads of `g2` weighted by `-dχ`, with `χ = g1/g2` and
//! `ψ = g2/g1`. Inverse distributions give a second recipe with weights `1/z`.

use crate::blends::{Blend, MemberFamily, Weight};
use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{self, QuadOptions};
use serde::Serialize;

#[derive(Debug, Clone)]
pub struct SeparablePair {
    pub g1: Expr,
    pub g2: Expr,
}

impl SeparablePair {
    pub fn new(g1: Expr, g2: Expr) -> SeparablePair {
        SeparablePair { g1, g2 }
    }

    pub fn parse(g1: &str, g2: &str) -> Result<SeparablePair> {
        Ok(SeparablePair { g1: Expr::parse(g1)?, g2: Expr::parse(g2)? })
    }

    pub fn chi(&self) -> Expr {
        self.g1.div(&self.g2)
    }

    pub fn psi(&self) -> Expr {
        self.g2.div(&self.g1)
    }

    /// `G1(z) = ∫_z^inf g1`, `+inf` when divergent.
    pub fn big_g1(&self, z: f64) -> f64 {
        quad::integrate_improper(|x| self.g1.eval(x), z, f64::INFINITY, QuadOptions::with_rel(1e-12))
    }

    /// `G2(z) = ∫_0^z g2`, `+inf` when divergent.
    pub fn big_g2(&self, z: f64) -> f64 {
        quad::integrate_improper(|x| self.g2.eval(x), 0.0, z, QuadOptions::with_rel(1e-12))
    }
}

/// Outcome of the four conditions on a separable pair.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    /// `χ(z) -> 0` as `z -> inf`.
    pub chi_vanishes_at_infinity: bool,
    /// `ψ(z) -> 0` as `z -> 0`.
    pub psi_vanishes_at_zero: bool,
    /// `χ` weakly decreasing on the probe grid.
    pub chi_decreasing: bool,
    /// `G1` and `G2` finite on the probe grid.
    pub g1_finite: bool,
    pub g2_finite: bool,
    /// Numerical limit of `ψ` at `0+` when it settles (`None` if it keeps moving or blows up).
    pub psi_at_zero: Option<f64>,
    /// Probe intervals on which `χ` is constant, where the weight density is zero.
    pub plateaus: Vec<(f64, f64)>,
    pub notes: Vec<String>,
}

impl ConditionReport {
    pub fn all_hold(&self) -> bool {
        self.chi_vanishes_at_infinity && self.psi_vanishes_at_zero && self.chi_decreasing && self.g1_finite && self.g2_finite
    }

    pub fn normalizable(&self) -> bool {
        self.g1_finite && self.g2_finite
    }
}

/// A limit tested at `10^k`: values must decrease monotonically and end below `1e-4`.
fn decays(vals: &[f64]) -> bool {
    vals.iter().all(|v| v.is_finite() && *v >= 0.0) && vals.windows(2).all(|w| w[1] <= w[0]) && vals.last().is_some_and(|v| *v < 1e-4)
}

fn log_grid(lo_exp: i32, hi_exp: i32, per_decade: usize) -> Vec<f64> {
    let n = (hi_exp - lo_exp) as usize * per_decade;
    (0..=n).map(|i| 10f64.powf(lo_exp as f64 + i as f64 / per_decade as f64)).collect()
}

/// Checks the conditions numerically. Limits are probed at `z = 10^k` for
/// `k = 2..6` (and `10^-k`); monotonicity and finiteness on `probe`, by
/// default a log-spaced grid on `[1e-6, 1e6]`.
pub fn check_separable_conditions(pair: &SeparablePair, probe: Option<&[f64]>) -> ConditionReport {
    let chi = pair.chi();
    let psi = pair.psi();
    let default = log_grid(-6, 6, 10);
    let probe = probe.unwrap_or(&default);
    let chi_inf: Vec<f64> = (2..=6).map(|k| chi.eval(10f64.powi(k))).collect();
    let psi_zero: Vec<f64> = (2..=6).map(|k| psi.eval(10f64.powi(-k))).collect();
    let mut notes = vec![];
    let c1 = decays(&chi_inf);
    if !c1 {
        notes.push(format!("chi at 1e2..1e6: {chi_inf:?}"));
    }
    let c2 = decays(&psi_zero);
    let settled = {
        let a = psi_zero[3];
        let b = psi_zero[4];
        a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-4 * (1.0 + b.abs())
    };
    let psi_at_zero = if c2 {
        Some(0.0)
    } else if settled {
        // linear extrapolation from 1e-5 and 1e-6; prefer the value at 0 itself when it agrees
        let extrap = psi_zero[4] - (psi_zero[3] - psi_zero[4]) / 9.0;
        let at0 = psi.eval(0.0);
        if at0.is_finite() && (at0 - extrap).abs() <= 1e-8 * (1.0 + at0.abs()) {
            Some(at0)
        } else {
            Some(extrap)
        }
    } else {
        None
    };
    if !c2 {
        notes.push(format!("psi at 1e-2..1e-6: {psi_zero:?}"));
    }
    let vals: Vec<f64> = probe.iter().map(|&z| chi.eval(z)).collect();
    let mut c3 = true;
    let mut plateaus: Vec<(f64, f64)> = vec![];
    for i in 1..vals.len() {
        let (a, b) = (vals[i - 1], vals[i]);
        if !(b <= a * (1.0 + 1e-12) + 1e-300) {
            c3 = false;
        }
        if (a - b).abs() <= 1e-12 * a.abs().max(1e-300) {
            match plateaus.last_mut() {
                Some(p) if p.1 == probe[i - 1] => p.1 = probe[i],
                _ => plateaus.push((probe[i - 1], probe[i])),
            }
        }
    }
    if !plateaus.is_empty() {
        notes.push(format!("chi is flat on {} probe interval(s); zero weight density there", plateaus.len()));
    }
    let checks = [1e-3, 1.0, 1e3];
    let g1_finite = checks.iter().all(|&z| pair.big_g1(z).is_finite());
    let g2_finite = checks.iter().all(|&z| pair.big_g2(z).is_finite());
    if !g1_finite {
        notes.push("G1 is infinite: upward members cannot be normalised".into());
    }
    if !g2_finite {
        notes.push("G2 is infinite: downward members cannot be normalised".into());
    }
    ConditionReport { chi_vanishes_at_infinity: c1, psi_vanishes_at_zero: c2, chi_decreasing: c3, g1_finite, g2_finite, psi_at_zero, plateaus, notes }
}

/// Blends emitted by the separable generator.
#[derive(Debug, Clone)]
pub struct GeneratedPair {
    pub upward: Blend,
    pub downward: Blend,
    /// Members divided by `G_i(z)` and weights multiplied by `G_i(z)^2`, when both are finite.
    pub normalized: Option<(Blend, Blend)>,
    pub report: ConditionReport,
}

/// Builds the upward/downward blends of a separable pair.
///
/// When `ψ(0+)` is a nonzero finite limit, the upward side gets a boundary
/// atom of that weight on the member at `z = 0`, which restores the missing
/// `ψ(0+) g1(v1) g1(v2)` term.
pub fn separable_generate(pair: &SeparablePair) -> Result<GeneratedPair> {
    let report = check_separable_conditions(pair, None);
    if !report.chi_vanishes_at_infinity || !report.chi_decreasing {
        return Err(Error::Verification(format!("separable conditions fail: {:?}", report.notes)));
    }
    let boundary = match report.psi_at_zero {
        Some(p) => p,
        None => return Err(Error::Verification(format!("psi has no finite limit at 0: {:?}", report.notes))),
    };
    let dpsi = pair.psi().derivative();
    let neg_dchi = pair.chi().derivative().neg();
    let range = (0.0, f64::INFINITY);
    let mut upward = Blend::new("upward g1 tails", MemberFamily::UpperTail { g: pair.g1.clone(), normalized: false }, range, Weight::expr(dpsi.clone()));
    if boundary != 0.0 {
        upward = upward.with_family_atom(0.0, boundary);
    }
    let downward = Blend::new("downward g2 heads", MemberFamily::LowerTail { g: pair.g2.clone(), normalized: false }, range, Weight::expr(neg_dchi.clone()));
    let normalized = if report.normalizable() {
        let mut up = Blend::new(
            "normalized upward",
            MemberFamily::UpperTail { g: pair.g1.clone(), normalized: true },
            range,
            Weight { expr: dpsi, times_mass_squared: true },
        );
        if boundary != 0.0 {
            let g0 = pair.big_g1(0.0);
            up = up.with_family_atom(0.0, boundary * g0 * g0);
        }
        let down = Blend::new(
            "normalized downward",
            MemberFamily::LowerTail { g: pair.g2.clone(), normalized: true },
            range,
            Weight { expr: neg_dchi, times_mass_squared: true },
        );
        Some((up, down))
    } else {
        None
    };
    Ok(GeneratedPair { upward, downward, normalized, report })
}

/// Rescalings of `up` and of its inverse distribution, each with weight `1/z`.
pub fn inverse_generate(up: &Distribution) -> Result<(Blend, Blend)> {
    if up.atom_mass(0.0) > 0.0 {
        return Err(Error::InvalidParameter("support includes 0 with positive mass".into()));
    }
    let down = up.invert()?;
    let w = Weight::expr(Expr::parse("1/z")?);
    Ok((
        Blend::new("rescaled", MemberFamily::Rescaled { base: up.clone() }, (0.0, f64::INFINITY), w.clone()),
        Blend::new("rescaled inverse", MemberFamily::Rescaled { base: down }, (0.0, f64::INFINITY), w),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blends::{total_weight, verify_dual, verify_dual_on};

    #[test]
    fn condition_examples() {
        let r = check_separable_conditions(&SeparablePair::parse("1/x^2", "1").unwrap(), None);
        assert!(r.all_hold(), "{r:?}");
        let r = check_separable_conditions(&SeparablePair::parse("1/x^3", "1/x^2").unwrap(), None);
        assert!(r.chi_vanishes_at_infinity && r.psi_vanishes_at_zero && r.chi_decreasing);
        assert!(r.g1_finite && !r.g2_finite);
        let r = check_separable_conditions(&SeparablePair::parse("1", "1").unwrap(), None);
        assert!(!r.chi_vanishes_at_infinity);
        assert!(!r.plateaus.is_empty());
    }

    #[test]
    fn quadratic_uniform_weights() {
        let g = separable_generate(&SeparablePair::parse("1/x^2", "1").unwrap()).unwrap();
        let (up, down) = g.normalized.unwrap();
        for k in 0..20 {
            let z = 0.05 * 1.5f64.powi(k);
            assert!((up.weight_at(z) - 2.0 / z).abs() < 1e-8 * (2.0 / z), "{z}");
            assert!((down.weight_at(z) - 2.0 / z).abs() < 1e-8 * (2.0 / z), "{z}");
        }
        let q = up.family.member(3.0).unwrap();
        assert!((q.cdf(6.0) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn cubic_pair_weights() {
        let g = separable_generate(&SeparablePair::parse("1/x^3", "1/x^2").unwrap()).unwrap();
        assert!(g.normalized.is_none());
        for z in [0.1, 1.0, 7.0] {
            assert!((g.upward.weight_at(z) - 1.0).abs() < 1e-12);
            assert!((g.downward.weight_at(z) * z * z - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exponential_pair_with_boundary_atom() {
        let pair = SeparablePair::parse("exp(-x)", "1").unwrap();
        let g = separable_generate(&pair).unwrap();
        assert_eq!(g.report.psi_at_zero, Some(1.0));
        for (x, y) in [(1.0, 0.5), (3.0, 2.0)] {
            let want = (-x as f64).exp();
            assert!((g.upward.density_2d(x, y).unwrap() - want).abs() < 1e-9 * want);
            assert!((g.downward.density_2d(x, y).unwrap() - want).abs() < 1e-9 * want);
        }
        assert!(verify_dual(&g.upward, &g.downward, 20, 1e-6).unwrap().pass);
    }

    #[test]
    fn normalization_leaves_density_unchanged() {
        let g = separable_generate(&SeparablePair::parse("1/x^2", "1").unwrap()).unwrap();
        let (nu, nd) = g.normalized.as_ref().unwrap();
        for (x, y) in [(2.0, 1.0), (0.5, 0.2), (9.0, 0.9)] {
            let a = g.upward.density_2d(x, y).unwrap();
            assert!((nu.density_2d(x, y).unwrap() - a).abs() < 1e-8 * a);
            let b = g.downward.density_2d(x, y).unwrap();
            assert!((nd.density_2d(x, y).unwrap() - b).abs() < 1e-8 * b);
        }
    }

    #[test]
    fn inverse_generator_examples() {
        let (a, b) = inverse_generate(&Distribution::quadratic(1.0).unwrap()).unwrap();
        for (x, y) in [(2.0, 1.0), (0.5, 0.3)] {
            let want = 1.0 / (2.0 * x * x);
            assert!((a.density_2d(x, y).unwrap() - want).abs() < 1e-10 * want);
            assert!((b.density_2d(x, y).unwrap() - want).abs() < 1e-10 * want);
        }
        let (p, q) = inverse_generate(&Distribution::point_mass(1.0).unwrap()).unwrap();
        assert!(verify_dual(&p, &q, 10, 1e-12).unwrap().pass);
        let (s, t) = inverse_generate(&Distribution::shifted_exponential(1.0, 1.0).unwrap()).unwrap();
        assert!(verify_dual_on(&s, &t, (0.1, 10.0), 20, 1e-5).unwrap().pass);
        assert!(total_weight(&s).is_infinite());
        assert!(inverse_generate(&Distribution::point_mass(0.0).unwrap()).is_err());
    }
}
