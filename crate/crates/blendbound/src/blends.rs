//! Blends (weighted families of distributions) and the correlated
//! two-agent density they induce, split by dimension: a continuous density
//! on the square, densities along the lines through fixed atoms, masses at
//! atom pairs, and a diagonal density for atoms that move with the family
//! parameter.

use crate::dist::{Atom, Distribution, SupportInterval};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{self, QuadOptions};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

/// Tail masses can be far below any absolute floor, so only relative error counts.
fn mass_opts() -> QuadOptions {
    QuadOptions { abs_tol: 0.0, ..zopts() }
}

fn zopts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-18, rel_tol: 1e-12, max_intervals: 4000 }
}

/// Parameterised constructor `z -> F_z` of blend members.
#[derive(Debug, Clone)]
pub enum MemberFamily {
    /// `rescale(base, z)`.
    Rescaled { base: Distribution },
    /// `Qud_z` truncated at `h`: density `z/x^2` on `[z, h)`, atom `z/h` at `h`.
    TruncatedQuadratic { h: f64 },
    /// `Ud_{a,z}`.
    UniformFrom { a: f64 },
    /// `Sed_{z,beta}`.
    ShiftedExponential { beta: f64 },
    /// `g` restricted to `[z, inf)`, optionally divided by its mass there.
    UpperTail { g: Expr, normalized: bool },
    /// `g` restricted to `(0, z]`, optionally divided by its mass there.
    LowerTail { g: Expr, normalized: bool },
}

impl fmt::Display for MemberFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberFamily::Rescaled { base } => write!(f, "rescale({base}, z)"),
            MemberFamily::TruncatedQuadratic { h } => write!(f, "Qud[z] | truncate_top({h})"),
            MemberFamily::UniformFrom { a } => write!(f, "Ud[{a},z]"),
            MemberFamily::ShiftedExponential { beta } => write!(f, "Sed[z,{beta}]"),
            MemberFamily::UpperTail { g, normalized } => write!(f, "{}{g} on [z,inf)", if *normalized { "normalized " } else { "" }),
            MemberFamily::LowerTail { g, normalized } => write!(f, "{}{g} on (0,z]", if *normalized { "normalized " } else { "" }),
        }
    }
}

impl MemberFamily {
    /// Mass of the raw tail `g` over the member support (`G(z)`); 1 for proper families.
    pub fn tail_mass(&self, z: f64) -> f64 {
        match self {
            MemberFamily::UpperTail { g, .. } => quad::integrate(|x| g.eval(x), z, f64::INFINITY, mass_opts()).unwrap_or(f64::INFINITY),
            MemberFamily::LowerTail { g, .. } => quad::integrate(|x| g.eval(x), 0.0, z, mass_opts()).unwrap_or(f64::INFINITY),

            _ => 1.0,
        }
    }

    /// Continuous density of member `z` at `x` (zero outside its support).
    pub fn density(&self, z: f64, x: f64) -> f64 {
        match self {
            MemberFamily::Rescaled { base } => base.density(x / z) / z,
            MemberFamily::TruncatedQuadratic { h } => {
                if x >= z && x < *h {
                    z / (x * x)
                } else {
                    0.0
                }
            }
            MemberFamily::UniformFrom { a } => {
                if x >= *a && x <= z && z > *a {
                    1.0 / (z - a)
                } else {
                    0.0
                }
            }
            MemberFamily::ShiftedExponential { beta } => {
                if x >= z {
                    beta * (-beta * (x - z)).exp()
                } else {
                    0.0
                }
            }
            MemberFamily::UpperTail { g, normalized } => {
                if x >= z {
                    let v = g.eval(x);
                    if *normalized {
                        v / self.tail_mass(z)
                    } else {
                        v
                    }
                } else {
                    0.0
                }
            }
            MemberFamily::LowerTail { g, normalized } => {
                if x > 0.0 && x <= z {
                    let v = g.eval(x);
                    if *normalized {
                        v / self.tail_mass(z)
                    } else {
                        v
                    }
                } else {
                    0.0
                }
            }
        }
    }

    /// Atoms whose location does not depend on `z`.
    pub fn fixed_atom_locations(&self) -> Vec<f64> {
        match self {
            MemberFamily::TruncatedQuadratic { h } => vec![*h],
            _ => vec![],
        }
    }

    /// Mass member `z` puts on the fixed atom at `a`.
    pub fn fixed_atom_mass(&self, z: f64, a: f64) -> f64 {
        match self {
            MemberFamily::TruncatedQuadratic { h } if (a - h).abs() <= 1e-12 * h && z <= *h => z / h,
            _ => 0.0,
        }
    }

    /// An atom at `b * z` with mass `m`, for rescaled families with one atom.
    pub fn moving_atom(&self) -> Result<Option<Atom>> {
        match self {
            MemberFamily::Rescaled { base } => match base.atoms() {
                [] => Ok(None),
                [a] if a.at > 0.0 => Ok(Some(*a)),
                _ => Err(Error::Unsupported("rescaled families with several atoms (or an atom at 0)".into())),
            },
            _ => Ok(None),
        }
    }

    /// Range of `z` for which both `v1 >= v2` can carry continuous density.
    pub fn window(&self, v1: f64, v2: f64) -> (f64, f64) {
        match self {
            MemberFamily::Rescaled { base } => {
                let s = base.support();
                let lo = if s.hi.is_infinite() { 0.0 } else { v1 / s.hi };
                let hi = if s.lo == 0.0 { f64::INFINITY } else { v2 / s.lo };
                (lo, hi)
            }
            MemberFamily::TruncatedQuadratic { .. } | MemberFamily::ShiftedExponential { .. } | MemberFamily::UpperTail { .. } => (0.0, v2),
            MemberFamily::UniformFrom { .. } | MemberFamily::LowerTail { .. } => (v1, f64::INFINITY),
        }
    }

    /// Support of member `z`.
    pub fn support(&self, z: f64) -> (f64, f64) {
        match self {
            MemberFamily::Rescaled { base } => {
                let s = base.support();
                (s.lo * z, s.hi * z)
            }
            MemberFamily::TruncatedQuadratic { h } => (z.min(*h), *h),
            MemberFamily::UniformFrom { a } => (*a, z),
            MemberFamily::ShiftedExponential { .. } | MemberFamily::UpperTail { .. } => (z, f64::INFINITY),
            MemberFamily::LowerTail { .. } => (0.0, z),
        }
    }

    /// Member `z` as a proper distribution.
    pub fn member(&self, z: f64) -> Result<Distribution> {
        match self {
            MemberFamily::Rescaled { base } => base.rescale(z),
            MemberFamily::TruncatedQuadratic { h } => {
                if z >= *h {
                    Distribution::point_mass(*h)
                } else {
                    Distribution::quadratic(z)?.truncate_top(*h)
                }
            }
            MemberFamily::UniformFrom { a } => {
                if z <= *a {
                    Distribution::point_mass(*a)
                } else {
                    Distribution::uniform(*a, z)
                }
            }
            MemberFamily::ShiftedExponential { beta } => Distribution::shifted_exponential(z, *beta),
            MemberFamily::UpperTail { g, normalized: true } => Distribution::from_density(g.clone(), z, f64::INFINITY),
            MemberFamily::LowerTail { g, normalized: true } => Distribution::from_density(g.clone(), 0.0, z),
            _ => Err(Error::Improper(format!("members of {self} are not normalised"))),
        }
    }
}

/// Weight density `w(z)`, optionally multiplied by the squared tail mass `G(z)^2`.
#[derive(Debug, Clone)]
pub struct Weight {
    pub expr: Expr,
    pub times_mass_squared: bool,
}

impl Weight {
    pub fn expr(e: Expr) -> Weight {
        Weight { expr: e, times_mass_squared: false }
    }

    pub fn parse(s: &str) -> Result<Weight> {
        Ok(Weight::expr(Expr::parse(s)?))
    }

    pub fn eval(&self, family: &MemberFamily, z: f64) -> f64 {
        let w = self.expr.eval(z);
        if self.times_mass_squared {
            let g = family.tail_mass(z);
            w * g * g
        } else {
            w
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.times_mass_squared {
            write!(f, "({})*G(z)^2", self.expr)
        } else {
            write!(f, "{}", self.expr)
        }
    }
}

/// A discrete blend component.
#[derive(Debug, Clone)]
pub enum AtomMember {
    Dist(Distribution),
    /// The family member at parameter `z` (possibly unnormalised).
    FamilyAt(f64),
}

#[derive(Debug, Clone)]
pub struct BlendAtom {
    pub member: AtomMember,
    pub weight: f64,
}

/// Weighted mixture over a family plus discrete atom weights. Weights need
/// not sum to 1.
#[derive(Debug, Clone)]
pub struct Blend {
    pub name: String,
    pub family: MemberFamily,
    pub z_range: (f64, f64),
    pub weight: Weight,
    pub atoms: Vec<BlendAtom>,
}

impl Blend {
    pub fn new(name: &str, family: MemberFamily, z_range: (f64, f64), weight: Weight) -> Blend {
        Blend { name: name.to_string(), family, z_range, weight, atoms: vec![] }
    }

    pub fn with_atom(mut self, dist: Distribution, weight: f64) -> Blend {
        self.atoms.push(BlendAtom { member: AtomMember::Dist(dist), weight });
        self
    }

    pub fn with_family_atom(mut self, z: f64, weight: f64) -> Blend {
        self.atoms.push(BlendAtom { member: AtomMember::FamilyAt(z), weight });
        self
    }

    pub fn weight_at(&self, z: f64) -> f64 {
        if z < self.z_range.0 || z > self.z_range.1 {
            0.0
        } else {
            self.weight.eval(&self.family, z)
        }
    }

    fn atom_density(&self, m: &AtomMember, x: f64) -> f64 {
        match m {
            AtomMember::Dist(d) => d.density(x),
            AtomMember::FamilyAt(z) => self.family.density(*z, x),
        }
    }

    fn atom_mass(&self, m: &AtomMember, a: f64) -> f64 {
        match m {
            AtomMember::Dist(d) => d.atom_mass(a),
            AtomMember::FamilyAt(z) => self.family.fixed_atom_mass(*z, a),
        }
    }

    /// Locations of atoms that stay put: the family's fixed atoms and the atoms of discrete members.
    pub fn atom_locations(&self) -> Vec<f64> {
        let mut v = self.family.fixed_atom_locations();
        for a in &self.atoms {
            if let AtomMember::Dist(d) = &a.member {
                v.extend(d.atoms().iter().map(|t| t.at));
            }
        }
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
        v
    }

    /// Union of member supports.
    pub fn support(&self) -> SupportInterval {
        let (z0, z1) = self.z_range;
        let (a0, _) = self.family.support(z0);
        let (_, b1) = self.family.support(z1);
        let (a1, b0) = (self.family.support(z1).0, self.family.support(z0).1);
        let mut lo = a0.min(a1);
        let mut hi = b1.max(b0);
        for a in &self.atoms {
            let (l, h) = match &a.member {
                AtomMember::Dist(d) => (d.support().lo, d.support().hi),
                AtomMember::FamilyAt(z) => self.family.support(*z),
            };
            lo = lo.min(l);
            hi = hi.max(h);
        }
        SupportInterval { lo: lo.max(0.0), hi }
    }

    fn clip(&self, w: (f64, f64)) -> (f64, f64) {
        (w.0.max(self.z_range.0), w.1.min(self.z_range.1))
    }

    /// Continuous density of the induced correlated distribution at `(v1, v2)`.
    pub fn density_2d(&self, v1: f64, v2: f64) -> Result<f64> {
        let (v1, v2) = if v1 >= v2 { (v1, v2) } else { (v2, v1) };
        let (za, zb) = self.clip(self.family.window(v1, v2));
        let mut total = 0.0;
        if zb > za {
            let f = |z: f64| {
                let d1 = self.family.density(z, v1);
                if d1 == 0.0 {
                    return 0.0;
                }
                let d2 = self.family.density(z, v2);
                if d2 == 0.0 {
                    return 0.0;
                }
                self.weight.eval(&self.family, z) * d1 * d2
            };
            let mut breaks = vec![v1, v2];
            if let MemberFamily::Rescaled { base } = &self.family {
                let s = base.support();
                breaks.extend([v1 / s.lo, v2 / s.lo, v1 / s.hi, v2 / s.hi].iter().filter(|x| x.is_finite()));
            }
            total += quad::integrate_breaks(f, za, zb, &breaks, zopts())?;
        }
        for a in &self.atoms {
            total += a.weight * self.atom_density(&a.member, v1) * self.atom_density(&a.member, v2);
        }
        if let Some(at) = self.family.moving_atom()? {
            if v1 != v2 {
                for (p, other) in [(v1, v2), (v2, v1)] {
                    let z = p / at.at;
                    total += self.weight_at(z) * at.mass * self.family.density(z, other) / at.at;
                }
            }
        }
        Ok(total)
    }

    /// Density along the line where one coordinate sits on the fixed atom `a`.
    pub fn density_1d(&self, a: f64, y: f64) -> Result<f64> {
        let mut total = 0.0;
        if self.family.fixed_atom_locations().iter().any(|&t| (t - a).abs() <= 1e-12 * (1.0 + a)) {
            let (za, zb) = self.clip(self.family.window(y, y));
            if zb > za {
                let f = |z: f64| self.weight.eval(&self.family, z) * self.family.fixed_atom_mass(z, a) * self.family.density(z, y);
                total += quad::integrate_breaks(f, za, zb, &[y, a], zopts())?;
            }
        }
        for m in &self.atoms {
            total += m.weight * self.atom_mass(&m.member, a) * self.atom_density(&m.member, y);
        }
        Ok(total)
    }

    /// Mass at the atom pair `(a, b)`.
    pub fn mass_0d(&self, a: f64, b: f64) -> Result<f64> {
        let mut total = 0.0;
        let fixed = self.family.fixed_atom_locations();
        let is_fixed = |x: f64| fixed.iter().any(|&t| (t - x).abs() <= 1e-12 * (1.0 + x));
        if is_fixed(a) && is_fixed(b) {
            let (za, zb) = self.z_range;
            let f = |z: f64| self.weight.eval(&self.family, z) * self.family.fixed_atom_mass(z, a) * self.family.fixed_atom_mass(z, b);
            total += quad::integrate(f, za, zb, zopts())?;
        }
        for m in &self.atoms {
            total += m.weight * self.atom_mass(&m.member, a) * self.atom_mass(&m.member, b);
        }
        Ok(total)
    }

    /// Density on the diagonal `v1 = v2 = v` from atoms that move with `z`.
    pub fn density_diag(&self, v: f64) -> Result<f64> {
        Ok(match self.family.moving_atom()? {
            Some(at) => {
                let z = v / at.at;
                self.weight_at(z) * at.mass * at.mass / at.at
            }
            None => 0.0,
        })
    }
}

/// Dimension-counted value of the correlated density at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlendedPoint {
    pub d2: f64,
    pub d1: Option<f64>,
    pub d0: Option<f64>,
}

/// Density of the blend at `(v1, v2)`: `d1` is reported when one coordinate
/// is a fixed atom, `d0` when both are.
pub fn blended_density(blend: &Blend, v1: f64, v2: f64) -> Result<BlendedPoint> {
    let atoms = blend.atom_locations();
    let is_atom = |x: f64| atoms.iter().any(|&a| (a - x).abs() <= 1e-12 * (1.0 + x));
    let d0 = if is_atom(v1) && is_atom(v2) { Some(blend.mass_0d(v1, v2)?) } else { None };
    let d1 = match (is_atom(v1), is_atom(v2)) {
        (true, false) => Some(blend.density_1d(v1, v2)?),
        (false, true) => Some(blend.density_1d(v2, v1)?),
        _ => None,
    };
    Ok(BlendedPoint { d2: blend.density_2d(v1, v2)?, d1, d0 })
}

/// `∫ w + Σ atom weights`, or `+inf` when the integral diverges.
pub fn total_weight(blend: &Blend) -> f64 {
    let (z0, z1) = blend.z_range;
    let atoms: f64 = blend.atoms.iter().map(|a| a.weight).sum();
    quad::integrate_improper(|z| blend.weight.eval(&blend.family, z), z0, z1, zopts()) + atoms
}

/// Discrepancy report between the densities induced by two blends.
#[derive(Debug, Clone, Serialize)]
pub struct DualReport {
    pub max_rel_err_2d: f64,
    pub max_rel_err_1d: f64,
    pub max_abs_err_0d: f64,
    pub max_rel_err_diag: f64,
    pub grid: String,
    pub points: usize,
    pub worst: Option<(f64, f64)>,
    pub tol: f64,
    pub pass: bool,
}

fn rel(a: f64, b: f64) -> f64 {
    rel_floor(a, b, 1e-12)
}

/// Fraction of the largest density on a grid below which errors count as absolute.
const REL_FLOOR: f64 = 1e-9;

fn rel_floor(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor).max(1e-300)
}

/// Default comparison window for a blend pair.
pub fn default_window(b1: &Blend, b2: &Blend) -> (f64, f64) {
    let s1 = b1.support();
    let s2 = b2.support();
    let lo = s1.lo.min(s2.lo);
    let hi = s1.hi.max(s2.hi);
    let hi = if hi.is_finite() { hi } else { (10.0f64).max(10.0 * lo) };
    (lo, hi)
}

/// Compares two blends on a cone grid of cell midpoints, on every atom line
/// and at every atom pair.
pub fn verify_dual(b1: &Blend, b2: &Blend, grid_n: usize, tol: f64) -> Result<DualReport> {
    verify_dual_on(b1, b2, default_window(b1, b2), grid_n, tol)
}

pub fn verify_dual_on(b1: &Blend, b2: &Blend, window: (f64, f64), grid_n: usize, tol: f64) -> Result<DualReport> {
    let (lo, hi) = window;
    let grid: Vec<f64> = (0..grid_n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / grid_n as f64).collect();
    let cone: Vec<(f64, f64)> = (0..grid_n).flat_map(|i| (0..=i).map(move |j| (i, j))).map(|(i, j)| (grid[i], grid[j])).collect();
    let vals: Vec<(f64, f64)> = cone.par_iter().map(|&(x, y)| Ok((b1.density_2d(x, y)?, b2.density_2d(x, y)?))).collect::<Result<_>>()?;
    // points on a support boundary carry rounding-sized slivers of density;
    // values below this floor are compared in absolute terms
    let floor2 = REL_FLOOR * vals.iter().fold(0.0f64, |m, (a, b)| m.max(a.abs()).max(b.abs()));
    let mut max2 = 0.0;
    let mut worst = None;
    for (&(a, b), &p) in vals.iter().zip(&cone) {
        let r = rel_floor(a, b, floor2);
        if r > max2 || r.is_nan() {
            max2 = r;
            worst = Some(p);
        }
    }
    let mut atoms = b1.atom_locations();
    atoms.extend(b2.atom_locations());
    atoms.sort_by(f64::total_cmp);
    atoms.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * (1.0 + b.abs()));
    let mut max1 = 0.0f64;
    let mut points = cone.len();
    for &a in &atoms {
        let line: Vec<(f64, f64)> = grid
            .par_iter()
            .filter(|&&y| (y - a).abs() > 1e-12)
            .map(|&y| Ok((b1.density_1d(a, y)?, b2.density_1d(a, y)?)))
            .collect::<Result<_>>()?;
        points += line.len();
        let floor1 = REL_FLOOR * line.iter().fold(0.0f64, |m, (x, y)| m.max(x.abs()).max(y.abs()));
        for (x, y) in line {
            max1 = max1.max(rel_floor(x, y, floor1));
        }
    }
    let mut max0 = 0.0f64;
    for &a in &atoms {
        for &b in &atoms {
            max0 = max0.max((b1.mass_0d(a, b)? - b2.mass_0d(a, b)?).abs());
            points += 1;
        }
    }
    let mut maxd = 0.0f64;
    if b1.family.moving_atom()?.is_some() || b2.family.moving_atom()?.is_some() {
        for &v in &grid {
            maxd = maxd.max(rel(b1.density_diag(v)?, b2.density_diag(v)?));
            points += 1;
        }
    }
    let pass = max2 <= tol && max1 <= tol && max0 <= tol && maxd <= tol;
    Ok(DualReport {
        max_rel_err_2d: max2,
        max_rel_err_1d: max1,
        max_abs_err_0d: max0,
        max_rel_err_diag: maxd,
        grid: format!("{grid_n}x{grid_n} cone midpoints on [{lo}, {hi}], {} atom lines", atoms.len()),
        points,
        worst,
        tol,
        pass,
    })
}

/// The correlated two-agent density induced by a blend.
#[derive(Debug, Clone)]
pub struct CorrelatedDensity {
    blend: Arc<Blend>,
    pub support: SupportInterval,
    pub atoms: Vec<f64>,
    pub symmetric: bool,
}

/// Contributions of each dimension class to an integral against `g`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Parts {
    pub cone: f64,
    pub lines: f64,
    pub pairs: f64,
    pub diagonal: f64,
}

impl Parts {
    pub fn total(&self) -> f64 {
        self.cone + self.lines + self.pairs + self.diagonal
    }
}

impl CorrelatedDensity {
    pub fn from_blend(blend: &Blend) -> CorrelatedDensity {
        CorrelatedDensity { support: blend.support(), atoms: blend.atom_locations(), blend: Arc::new(blend.clone()), symmetric: true }
    }

    pub fn blend(&self) -> &Blend {
        &self.blend
    }

    pub fn d2(&self, v1: f64, v2: f64) -> Result<f64> {
        self.blend.density_2d(v1, v2)
    }

    pub fn d1(&self, a: f64, v: f64) -> Result<f64> {
        self.blend.density_1d(a, v)
    }

    pub fn d0(&self, a: f64, b: f64) -> Result<f64> {
        self.blend.mass_0d(a, b)
    }

    pub fn diag(&self, v: f64) -> Result<f64> {
        self.blend.density_diag(v)
    }

    /// `∫ phi dg` split by dimension, with `phi(x, y)` evaluated for `x >= y`.
    /// `cuts` are values where `phi` jumps.
    pub fn integrate_parts(&self, phi: impl Fn(f64, f64) -> f64 + Sync, cuts: &[f64]) -> Result<Parts> {
        let SupportInterval { lo, hi } = self.support;
        let mut breaks: Vec<f64> = self.atoms.clone();
        breaks.extend_from_slice(cuts);
        breaks.push(1.0);
        let inner_opts = QuadOptions { abs_tol: 1e-16, rel_tol: 1e-11, max_intervals: 4000 };
        let outer_opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-10, max_intervals: 4000 };
        let inner = |x: f64| -> f64 {
            quad::integrate_breaks(|y| phi(x, y) * self.d2(x, y).unwrap_or(f64::NAN), lo, x, &breaks, inner_opts).unwrap_or(f64::NAN)
        };
        let cone = 2.0 * quad::integrate_breaks(inner, lo, hi, &breaks, outer_opts)?;
        let mut lines = 0.0;
        for &a in &self.atoms {
            let f = |y: f64| phi(a.max(y), a.min(y)) * self.d1(a, y).unwrap_or(f64::NAN);
            lines += 2.0 * quad::integrate_breaks(f, lo, hi, &breaks, outer_opts)?;
        }
        let mut pairs = 0.0;
        for &a in &self.atoms {
            for &b in &self.atoms {
                pairs += phi(a.max(b), a.min(b)) * self.d0(a, b)?;
            }
        }
        let diagonal = if self.blend.family.moving_atom()?.is_some() {
            quad::integrate_breaks(|v| phi(v, v) * self.diag(v).unwrap_or(f64::NAN), lo, hi, &breaks, outer_opts)?
        } else {
            0.0
        };
        Ok(Parts { cone, lines, pairs, diagonal })
    }

    /// Total mass of `g`; equals the blend's total weight when finite.
    pub fn total_mass(&self) -> Result<f64> {
        Ok(self.integrate_parts(|_, _| 1.0, &[])?.total())
    }
}

/// Names of the built-in dual pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairName {
    QuadUnifInfinite,
    QuadUnifFinite(f64),
    ShexpUnif,
    QuadCubic,
}

impl std::str::FromStr for PairName {
    type Err = Error;
    fn from_str(s: &str) -> Result<PairName> {
        Ok(match s {
            "quad_unif_infinite" => PairName::QuadUnifInfinite,
            "quad_unif_finite" => PairName::QuadUnifFinite(20.0),
            "shexp_unif" => PairName::ShexpUnif,
            "quad_cubic" => PairName::QuadCubic,
            other => {
                if let Some(h) = other.strip_prefix("quad_unif_finite(").and_then(|r| r.strip_suffix(')')) {
                    PairName::QuadUnifFinite(h.parse().map_err(|_| Error::Parse(format!("bad h in {other}")))?)
                } else {
                    return Err(Error::Parse(format!("unknown pair {other}")));
                }
            }
        })
    }
}

fn ex(s: &str) -> Expr {
    Expr::parse(s).expect("built-in expression parses")
}

/// The built-in dual pairs, first side listed first in each name.
pub fn builtin_pair(name: PairName) -> Result<(Blend, Blend)> {
    Ok(match name {
        PairName::QuadUnifInfinite => (
            Blend::new("Quadratics (infinite)", MemberFamily::Rescaled { base: Distribution::quadratic(1.0)? }, (0.0, f64::INFINITY), Weight::expr(ex("2/z"))),
            Blend::new("Uniforms (infinite)", MemberFamily::Rescaled { base: Distribution::uniform(0.0, 1.0)? }, (0.0, f64::INFINITY), Weight::expr(ex("2/z"))),
        ),
        PairName::QuadUnifFinite(h) => {
            if !(h > 1.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("h = {h} must exceed 1")));
            }
            let quads = Blend::new("Quadratics", MemberFamily::TruncatedQuadratic { h }, (1.0, h), Weight::expr(ex("2/z")))
                .with_atom(Distribution::quadratic(1.0)?.truncate_top(h)?, 1.0);
            let pm = (2.0 * h - 1.0).powi(2) / (h * h);
            let unifs = Blend::new("Uniforms", MemberFamily::UniformFrom { a: 1.0 }, (1.0, h), Weight::expr(ex("2*(z-1)^2/z^3")))
                .with_atom(Distribution::uniform(1.0, 2.0 * h)?.truncate_top(h)?, pm);
            (quads, unifs)
        }
        PairName::ShexpUnif => (
            Blend::new("Shifted-Exponentials", MemberFamily::ShiftedExponential { beta: 1.0 }, (0.0, f64::INFINITY), Weight::expr(ex("exp(-z)/2")))
                .with_atom(Distribution::exponential(1.0)?, 0.5),
            Blend::new("Uniforms", MemberFamily::Rescaled { base: Distribution::uniform(0.0, 1.0)? }, (0.0, f64::INFINITY), Weight::expr(ex("z^2*exp(-z)/2"))),
        ),
        PairName::QuadCubic => (
            Blend::new("Cubic tails", MemberFamily::UpperTail { g: ex("1/x^3"), normalized: false }, (0.0, f64::INFINITY), Weight::expr(ex("1"))),
            Blend::new("Quadratic heads", MemberFamily::LowerTail { g: ex("1/x^2"), normalized: false }, (0.0, f64::INFINITY), Weight::expr(ex("1/z^2"))),
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinite_quadratics_density() {
        let (q, u) = builtin_pair(PairName::QuadUnifInfinite).unwrap();
        for (x, y) in [(2.0, 1.0), (5.0, 0.3), (0.7, 0.7)] {
            assert!((q.density_2d(x, y).unwrap() - 1.0 / (x * x)).abs() < 1e-10 / (x * x));
            assert!((u.density_2d(x, y).unwrap() - 1.0 / (x * x)).abs() < 1e-10 / (x * x));
        }
        assert!(total_weight(&q).is_infinite());
    }

    #[test]
    fn finite_pair_components() {
        let h = 20.0;
        let (q, u) = builtin_pair(PairName::QuadUnifFinite(h)).unwrap();
        assert!((q.mass_0d(h, h).unwrap() - 1.0).abs() < 1e-12);
        assert!((u.mass_0d(h, h).unwrap() - 1.0).abs() < 1e-12);
        for y in [1.0, 3.3, 19.9] {
            assert!((u.density_1d(h, y).unwrap() - 1.0 / h).abs() < 1e-12);
            assert!((q.density_1d(h, y).unwrap() - 1.0 / h).abs() < 1e-12);
        }
        let p = blended_density(&u, h, 4.0).unwrap();
        assert!((p.d1.unwrap() - 1.0 / h).abs() < 1e-12);
        assert!((total_weight(&q) - (1.0 + 2.0 * h.ln())).abs() < 1e-10);
        assert!((total_weight(&u) - (1.0 + 2.0 * h.ln())).abs() < 1e-10);
    }

    #[test]
    fn shexp_pair() {
        let (s, u) = builtin_pair(PairName::ShexpUnif).unwrap();
        for (x, y) in [(1.0, 0.5), (4.0, 0.1), (0.2, 0.1)] {
            let want = (-x as f64).exp() / 2.0;
            assert!((s.density_2d(x, y).unwrap() - want).abs() < 1e-11 * want);
            assert!((u.density_2d(x, y).unwrap() - want).abs() < 1e-11 * want);
        }
        assert!((total_weight(&s) - 1.0).abs() < 1e-10);
        assert!((total_weight(&u) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reflexive_verification() {
        let (q, _) = builtin_pair(PairName::QuadUnifFinite(10.0)).unwrap();
        let r = verify_dual(&q, &q, 20, 1e-12).unwrap();
        assert!(r.pass && r.max_rel_err_2d == 0.0);
    }

    #[test]
    fn moving_atoms_land_on_the_diagonal() {
        let pm = Blend::new("point masses", MemberFamily::Rescaled { base: Distribution::point_mass(1.0).unwrap() }, (0.0, f64::INFINITY), Weight::parse("1/z").unwrap());
        assert!((pm.density_diag(4.0).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(pm.density_2d(3.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn pair_names_parse() {
        assert_eq!("quad_unif_finite(18)".parse::<PairName>().unwrap(), PairName::QuadUnifFinite(18.0));
        assert!("nope".parse::<PairName>().is_err());
    }

    #[test]
    fn builtin_pairs_are_dual() {
        for name in [PairName::QuadUnifInfinite, PairName::QuadUnifFinite(20.0), PairName::ShexpUnif, PairName::QuadCubic] {
            let (a, b) = builtin_pair(name).unwrap();
            let r = verify_dual(&a, &b, 50, 1e-6).unwrap();
            assert!(r.pass, "{name:?}: {r:?}");
            let back = verify_dual(&b, &a, 50, 1e-6).unwrap();
            assert_eq!(r.max_rel_err_2d, back.max_rel_err_2d);
        }
    }

    #[test]
    fn finite_pair_total_mass() {
        let h = 10.0;
        let (q, u) = builtin_pair(PairName::QuadUnifFinite(h)).unwrap();
        for b in [&q, &u] {
            let m = CorrelatedDensity::from_blend(b).total_mass().unwrap();
            assert!((m - (1.0 + 2.0 * h.ln())).abs() < 1e-5 * m, "{m}");
        }
    }
}
