//! One-dimensional value distributions.
//!
//! A distribution is a named base family followed by an ordered list of
//! transforms. Every evaluator composes through the transform chain, so the
//! closed forms of the base family survive truncation, conditioning,
//! rescaling and inversion. Atoms are kept in an explicit list and never
//! folded into the density.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad::{self, QuadOptions};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

/// Performance objective of a mechanism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    Revenue,
    ResidualSurplus,
    Welfare,
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Objective::Revenue => "revenue",
            Objective::ResidualSurplus => "residual_surplus",
            Objective::Welfare => "welfare",
        })
    }
}

pub(crate) mod inf_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) => match t.as_str() {
                "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => other.parse().map_err(serde::de::Error::custom),
            },
        }
    }
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportInterval {
    pub lo: f64,
    #[serde(with = "inf_f64")]
    pub hi: f64,
}

impl SupportInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0) || !(lo <= hi) || lo.is_infinite() {
            return Err(Error::InvalidParameter(format!("support [{lo}, {hi}]")));
        }
        Ok(SupportInterval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub at: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Base {
    Uniform { a: f64, b: f64 },
    Quadratic { z: f64 },
    ShiftedExponential { a: f64, beta: f64 },
    ShiftedQuadratic { a: f64, phi: f64 },
    PointMass { a: f64 },
    Density { density: Expr, lo: f64, hi: f64, norm: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Uniform,
    Quadratic,
    ShiftedExponential,
    ShiftedQuadratic,
    PointMass,
    Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "arg", rename_all = "snake_case")]
pub enum Transform {
    TruncateTop(f64),
    ConditionAbove(f64),
    Rescale(f64),
    Invert,
}

#[derive(Debug, Clone)]
struct Layer {
    support: SupportInterval,
    atoms: Vec<Atom>,
    /// Survival mass strictly above the conditioning point (condition layers only).
    tail: f64,
}

/// A value distribution: base family, transform chain and cached per-layer
/// support and atoms. Cheap to clone.
#[derive(Clone)]
pub struct Distribution {
    base: Base,
    transforms: Vec<Transform>,
    layers: Arc<Vec<Layer>>,
}

impl fmt::Debug for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Distribution({self})")
    }
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.base {
            Base::Uniform { a, b } => write!(f, "Ud[{a},{b}]")?,
            Base::Quadratic { z } => write!(f, "Qud[{z}]")?,
            Base::ShiftedExponential { a, beta } => write!(f, "Sed[{a},{beta}]")?,
            Base::ShiftedQuadratic { a, phi } => write!(f, "Sqd[{a},{phi}]")?,
            Base::PointMass { a } => write!(f, "Pmd[{a}]")?,
            Base::Density { density, lo, hi, .. } => write!(f, "density[{density} on {lo},{hi}]")?,
        }
        for t in &self.transforms {
            match t {
                Transform::TruncateTop(h) => write!(f, " | truncate_top({h})")?,
                Transform::ConditionAbove(a) => write!(f, " | condition_above({a})")?,
                Transform::Rescale(z) => write!(f, " | rescale({z})")?,
                Transform::Invert => write!(f, " | invert")?,
            }
        }
        Ok(())
    }
}

fn atom_tol(x: f64) -> f64 {
    1e-12 * (1.0 + x.abs())
}

fn base_layer(base: &Base) -> Result<Layer> {
    let (lo, hi, atoms) = match *base {
        Base::Uniform { a, b } => {
            if !(a >= 0.0 && b > a && b.is_finite()) {
                return Err(Error::InvalidParameter(format!("uniform needs 0 <= a < b, got a={a}, b={b}")));
            }
            (a, b, vec![])
        }
        Base::Quadratic { z } => {
            if !(z > 0.0 && z.is_finite()) {
                return Err(Error::InvalidParameter(format!("quadratic needs z > 0, got {z}")));
            }
            (z, f64::INFINITY, vec![])
        }
        Base::ShiftedExponential { a, beta } => {
            if !(a >= 0.0 && beta > 0.0 && a.is_finite() && beta.is_finite()) {
                return Err(Error::InvalidParameter(format!("shifted exponential needs a >= 0, beta > 0, got a={a}, beta={beta}")));
            }
            (a, f64::INFINITY, vec![])
        }
        Base::ShiftedQuadratic { a, phi } => {
            if !(a >= 0.0 && phi < a && a.is_finite() && phi.is_finite()) {
                return Err(Error::InvalidParameter(format!("shifted quadratic needs phi < a, got a={a}, phi={phi}")));
            }
            (a, f64::INFINITY, vec![])
        }
        Base::PointMass { a } => {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::InvalidParameter(format!("point mass needs a >= 0, got {a}")));
            }
            (a, a, vec![Atom { at: a, mass: 1.0 }])
        }
        Base::Density { lo, hi, norm, .. } => {
            if !(lo >= 0.0 && hi > lo) {
                return Err(Error::InvalidParameter(format!("density support [{lo}, {hi}]")));
            }
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Improper(format!("density integrates to {norm}")));
            }
            (lo, hi, vec![])
        }
    };
    Ok(Layer { support: SupportInterval { lo, hi }, atoms, tail: 1.0 })
}

impl Distribution {
    fn from_base(base: Base) -> Result<Distribution> {
        let layer = base_layer(&base)?;
        Ok(Distribution { base, transforms: vec![], layers: Arc::new(vec![layer]) })
    }

    /// Uniform distribution `Ud_{a,b}` on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Distribution> {
        Self::from_base(Base::Uniform { a, b })
    }

    /// Equal-revenue distribution `Qud_z` with CDF `1 - z/x` on `[z, inf)`.
    pub fn quadratic(z: f64) -> Result<Distribution> {
        Self::from_base(Base::Quadratic { z })
    }

    /// `Sed_{a,beta}` with CDF `1 - exp(-beta (x - a))` on `[a, inf)`.
    pub fn shifted_exponential(a: f64, beta: f64) -> Result<Distribution> {
        Self::from_base(Base::ShiftedExponential { a, beta })
    }

    /// `Exd_beta`, the exponential distribution with rate `beta`.
    pub fn exponential(beta: f64) -> Result<Distribution> {
        Self::shifted_exponential(0.0, beta)
    }

    /// `Sqd_{a,phi}` with CDF `1 - (a - phi)/(x - phi)` on `[a, inf)`.
    pub fn shifted_quadratic(a: f64, phi: f64) -> Result<Distribution> {
        Self::from_base(Base::ShiftedQuadratic { a, phi })
    }

    pub fn point_mass(a: f64) -> Result<Distribution> {
        Self::from_base(Base::PointMass { a })
    }

    /// Distribution with density proportional to `density(x)` on `[lo, hi]`.
    pub fn from_density(density: Expr, lo: f64, hi: f64) -> Result<Distribution> {
        let norm = quad::integrate(|x| density.eval(x), lo, hi, QuadOptions { abs_tol: 0.0, ..QuadOptions::with_rel(1e-12) })
            .map_err(|e| Error::Improper(format!("density {density} on [{lo}, {hi}]: {e}")))?;
        Self::from_base(Base::Density { density, lo, hi, norm })
    }

    pub fn family(&self) -> Family {
        if !self.transforms.is_empty() {
            return Family::Derived;
        }
        match self.base {
            Base::Uniform { .. } => Family::Uniform,
            Base::Quadratic { .. } => Family::Quadratic,
            Base::ShiftedExponential { .. } => Family::ShiftedExponential,
            Base::ShiftedQuadratic { .. } => Family::ShiftedQuadratic,
            Base::PointMass { .. } => Family::PointMass,
            Base::Density { .. } => Family::Derived,
        }
    }

    pub fn transforms(&self) -> &[Transform] {
        &self.transforms
    }

    pub fn support(&self) -> SupportInterval {
        self.top().support
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.top().atoms
    }

    fn top(&self) -> &Layer {
        self.layers.last().expect("at least the base layer")
    }

    fn push(&self, t: Transform, layer: Layer) -> Distribution {
        let mut transforms = self.transforms.clone();
        transforms.push(t);
        let mut layers = (*self.layers).clone();
        layers.push(layer);
        Distribution { base: self.base.clone(), transforms, layers: Arc::new(layers) }
    }

    /// Moves all mass above `h` onto an atom at `h`. A cap at or above the
    /// supremum leaves the distribution unchanged.
    pub fn truncate_top(&self, h: f64) -> Result<Distribution> {
        let s = self.support();
        if !(h > s.lo) || h.is_nan() {
            return Err(Error::InvalidParameter(format!("truncation point {h} not above support start {}", s.lo)));
        }
        if h >= s.hi {
            return Ok(self.clone());
        }
        let k = self.layers.len() - 1;
        let top_mass = 1.0 - self.cdf_left_k(k, h);
        let mut atoms: Vec<Atom> = self.atoms().iter().copied().filter(|a| a.at < h - atom_tol(h)).collect();
        if top_mass > 0.0 {
            atoms.push(Atom { at: h, mass: top_mass });
        }
        Ok(self.push(Transform::TruncateTop(h), Layer { support: SupportInterval { lo: s.lo, hi: h }, atoms, tail: 1.0 }))
    }

    /// Conditions on the value exceeding `a` and renormalises.
    pub fn condition_above(&self, a: f64) -> Result<Distribution> {
        let s = self.support();
        if !(a >= s.lo) || !(a < s.hi) {
            return Err(Error::InvalidParameter(format!("conditioning point {a} outside [{}, {})", s.lo, s.hi)));
        }
        let k = self.layers.len() - 1;
        let tail = self.sf_k(k, a);
        if !(tail > 0.0) {
            return Err(Error::InvalidParameter(format!("no mass above {a}")));
        }
        let atoms = self
            .atoms()
            .iter()
            .filter(|t| t.at > a + atom_tol(a))
            .map(|t| Atom { at: t.at, mass: t.mass / tail })
            .collect();
        Ok(self.push(Transform::ConditionAbove(a), Layer { support: SupportInterval { lo: a, hi: s.hi }, atoms, tail }))
    }

    /// `F_z(x) = F(x / z)`.
    pub fn rescale(&self, z: f64) -> Result<Distribution> {
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::InvalidParameter(format!("rescale factor {z}")));
        }
        let s = self.support();
        let atoms = self.atoms().iter().map(|t| Atom { at: t.at * z, mass: t.mass }).collect();
        Ok(self.push(Transform::Rescale(z), Layer { support: SupportInterval { lo: s.lo * z, hi: s.hi * z }, atoms, tail: 1.0 }))
    }

    /// Inverse-distribution: the law of `1/V`, with CDF `1 - F(1/x)`.
    pub fn invert(&self) -> Result<Distribution> {
        let s = self.support();
        if self.atoms().iter().any(|t| t.at == 0.0) {
            return Err(Error::InvalidParameter("cannot invert a distribution with an atom at 0".into()));
        }
        let mut atoms: Vec<Atom> = self.atoms().iter().map(|t| Atom { at: 1.0 / t.at, mass: t.mass }).collect();
        atoms.sort_by(|x, y| x.at.total_cmp(&y.at));
        let lo = if s.hi.is_infinite() { 0.0 } else { 1.0 / s.hi };
        let hi = if s.lo == 0.0 { f64::INFINITY } else { 1.0 / s.lo };
        Ok(self.push(Transform::Invert, Layer { support: SupportInterval { lo, hi }, atoms, tail: 1.0 }))
    }

    pub fn apply(&self, t: Transform) -> Result<Distribution> {
        match t {
            Transform::TruncateTop(h) => self.truncate_top(h),
            Transform::ConditionAbove(a) => self.condition_above(a),
            Transform::Rescale(z) => self.rescale(z),
            Transform::Invert => self.invert(),
        }
    }

    fn mass_at_k(&self, k: usize, x: f64) -> f64 {
        if !x.is_finite() {
            return 0.0;
        }
        self.layers[k].atoms.iter().filter(|t| (t.at - x).abs() <= atom_tol(x)).map(|t| t.mass).sum()
    }

    /// Mass of the atom at `x`, zero when there is none.
    pub fn atom_mass(&self, x: f64) -> f64 {
        self.mass_at_k(self.layers.len() - 1, x)
    }

    pub fn is_atom(&self, x: f64) -> bool {
        self.atom_mass(x) > 0.0
    }

    fn cdf_left_k(&self, k: usize, x: f64) -> f64 {
        (self.cdf_k(k, x) - self.mass_at_k(k, x)).max(0.0)
    }

    fn cdf_k(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return self.base_cdf(x);
        }
        match self.transforms[k - 1] {
            Transform::TruncateTop(h) => {
                if x >= h - atom_tol(h) {
                    1.0
                } else {
                    self.cdf_k(k - 1, x)
                }
            }
            Transform::ConditionAbove(a) => {
                if x <= a {
                    0.0
                } else {
                    let tail = self.layers[k].tail;
                    ((self.cdf_k(k - 1, x) - (1.0 - tail)) / tail).clamp(0.0, 1.0)
                }
            }
            Transform::Rescale(z) => self.cdf_k(k - 1, x / z),
            Transform::Invert => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - self.cdf_left_k(k - 1, 1.0 / x)
                }
            }
        }
    }

    /// `P(value > x)`, computed without cancellation in far tails.
    fn sf_k(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return self.base_sf(x);
        }
        match self.transforms[k - 1] {
            Transform::TruncateTop(h) => {
                if x >= h - atom_tol(h) {
                    0.0
                } else {
                    self.sf_k(k - 1, x)
                }
            }
            Transform::ConditionAbove(a) => {
                if x <= a {
                    1.0
                } else {
                    (self.sf_k(k - 1, x) / self.layers[k].tail).clamp(0.0, 1.0)
                }
            }
            Transform::Rescale(z) => self.sf_k(k - 1, x / z),
            Transform::Invert => {
                if x <= 0.0 {
                    1.0
                } else {
                    self.cdf_left_k(k - 1, 1.0 / x)
                }
            }
        }
    }

    fn base_sf(&self, x: f64) -> f64 {
        match &self.base {
            Base::Quadratic { z } => {
                if x < *z {
                    1.0
                } else {
                    z / x
                }
            }
            Base::ShiftedExponential { a, beta } => {
                if x < *a {
                    1.0
                } else {
                    (-beta * (x - a)).exp()
                }
            }
            Base::ShiftedQuadratic { a, phi } => {
                if x < *a {
                    1.0
                } else {
                    (a - phi) / (x - phi)
                }
            }
            _ => 1.0 - self.base_cdf(x),
        }
    }

    fn pdf_k(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return self.base_pdf(x);
        }
        match self.transforms[k - 1] {
            Transform::TruncateTop(h) => {
                if x < h {
                    self.pdf_k(k - 1, x)
                } else {
                    0.0
                }
            }
            Transform::ConditionAbove(a) => {
                if x < a {
                    0.0
                } else {
                    self.pdf_k(k - 1, x) / self.layers[k].tail
                }
            }
            Transform::Rescale(z) => self.pdf_k(k - 1, x / z) / z,
            Transform::Invert => {
                if x <= 0.0 {
                    0.0
                } else {
                    let y = 1.0 / x;
                    self.pdf_k(k - 1, y) * y * y
                }
            }
        }
    }

    fn quantile_k(&self, k: usize, q: f64) -> f64 {
        if k == 0 {
            return self.base_quantile(q);
        }
        match self.transforms[k - 1] {
            Transform::TruncateTop(h) => self.quantile_k(k - 1, q).min(h),
            Transform::ConditionAbove(a) => self.quantile_k(k - 1, q * self.layers[k].tail).max(a),
            Transform::Rescale(z) => z * self.quantile_k(k - 1, q),
            Transform::Invert => {
                let v = self.quantile_k(k - 1, 1.0 - q);
                if v == 0.0 {
                    f64::INFINITY
                } else {
                    1.0 / v
                }
            }
        }
    }

    /// `E[min(V, x)]` for `x >= 0`, i.e. the integral of the survival function on `[0, x]`.
    fn capped_mean_k(&self, k: usize, x: f64) -> f64 {
        if k == 0 {
            return self.base_capped_mean(x);
        }
        match self.transforms[k - 1] {
            Transform::TruncateTop(h) => self.capped_mean_k(k - 1, x.min(h)),
            Transform::ConditionAbove(a) => {
                if x <= a {
                    x
                } else {
                    let tail = self.layers[k].tail;
                    a + (self.capped_mean_k(k - 1, x) - self.capped_mean_k(k - 1, a)) / tail
                }
            }
            Transform::Rescale(z) => z * self.capped_mean_k(k - 1, x / z),
            Transform::Invert => {
                let breaks: Vec<f64> = self.layers[k].atoms.iter().map(|t| t.at).collect();
                let s = |t: f64| if t <= 0.0 { 1.0 } else { self.cdf_left_k(k - 1, 1.0 / t) };
                quad::integrate_breaks(s, 0.0, x, &breaks, QuadOptions::with_rel(1e-12)).unwrap_or(f64::INFINITY)
            }
        }
    }

    fn base_cdf(&self, x: f64) -> f64 {
        match &self.base {
            Base::Uniform { a, b } => ((x - a) / (b - a)).clamp(0.0, 1.0),
            Base::Quadratic { z } => {
                if x < *z {
                    0.0
                } else {
                    1.0 - z / x
                }
            }
            Base::ShiftedExponential { a, beta } => {
                if x < *a {
                    0.0
                } else {
                    -(-beta * (x - a)).exp_m1()
                }
            }
            Base::ShiftedQuadratic { a, phi } => {
                if x < *a {
                    0.0
                } else {
                    1.0 - (a - phi) / (x - phi)
                }
            }
            Base::PointMass { a } => {
                if x >= *a {
                    1.0
                } else {
                    0.0
                }
            }
            Base::Density { density, lo, hi, norm } => {
                if x <= *lo {
                    0.0
                } else if x >= *hi {
                    1.0
                } else {
                    let m = quad::integrate(|t| density.eval(t), *lo, x, QuadOptions::with_rel(1e-12)).unwrap_or(f64::NAN);
                    (m / norm).clamp(0.0, 1.0)
                }
            }
        }
    }

    fn base_pdf(&self, x: f64) -> f64 {
        match &self.base {
            Base::Uniform { a, b } => {
                if x >= *a && x <= *b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Base::Quadratic { z } => {
                if x >= *z {
                    z / (x * x)
                } else {
                    0.0
                }
            }
            Base::ShiftedExponential { a, beta } => {
                if x >= *a {
                    beta * (-beta * (x - a)).exp()
                } else {
                    0.0
                }
            }
            Base::ShiftedQuadratic { a, phi } => {
                if x >= *a {
                    (a - phi) / ((x - phi) * (x - phi))
                } else {
                    0.0
                }
            }
            Base::PointMass { .. } => 0.0,
            Base::Density { density, lo, hi, norm } => {
                if x >= *lo && x <= *hi {
                    density.eval(x) / norm
                } else {
                    0.0
                }
            }
        }
    }

    fn base_quantile(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        match &self.base {
            Base::Uniform { a, b } => b - q * (b - a),
            Base::Quadratic { z } => {
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    z / q
                }
            }
            Base::ShiftedExponential { a, beta } => {
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    a - q.ln() / beta
                }
            }
            Base::ShiftedQuadratic { a, phi } => {
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    phi + (a - phi) / q
                }
            }
            Base::PointMass { a } => *a,
            Base::Density { lo, hi, .. } => {
                if q >= 1.0 {
                    return *lo;
                }
                if q <= 0.0 {
                    return *hi;
                }
                let target = 1.0 - q;
                let mut upper = if hi.is_finite() { *hi } else { (lo + 1.0) * 2.0 };
                while !hi.is_finite() && self.base_cdf(upper) < target {
                    upper *= 2.0;
                    if upper > 1e300 {
                        return f64::INFINITY;
                    }
                }
                quad::bisect(|x| self.base_cdf(x) - target, *lo, upper, 1e-14).unwrap_or(f64::NAN)
            }
        }
    }

    fn base_capped_mean(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match &self.base {
            Base::Uniform { a, b } => {
                if x <= *a {
                    x
                } else if x >= *b {
                    a + 0.5 * (b - a)
                } else {
                    a + ((b - a) * (b - a) - (b - x) * (b - x)) / (2.0 * (b - a))
                }
            }
            Base::Quadratic { z } => {
                if x <= *z {
                    x
                } else {
                    z + z * (x / z).ln()
                }
            }
            Base::ShiftedExponential { a, beta } => {
                if x <= *a {
                    x
                } else {
                    a - (-beta * (x - a)).exp_m1() / beta
                }
            }
            Base::ShiftedQuadratic { a, phi } => {
                if x <= *a {
                    x
                } else {
                    a + (a - phi) * ((x - phi) / (a - phi)).ln()
                }
            }
            Base::PointMass { a } => x.min(*a),
            Base::Density { density, lo, hi, norm } => {
                if x <= *lo {
                    return x;
                }
                let top = x.min(*hi);
                let first = quad::integrate(|t| t * density.eval(t), *lo, top, QuadOptions::with_rel(1e-12)).unwrap_or(f64::INFINITY) / norm;
                let surv = if top.is_infinite() { 0.0 } else { 1.0 - self.base_cdf(top) };
                first + if top.is_finite() { top * surv } else { 0.0 }
            }
        }
    }

    /// CDF including atoms at or below `x`, clamped to `[0, 1]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_k(self.layers.len() - 1, x).clamp(0.0, 1.0)
    }

    /// `P(value > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        self.sf_k(self.layers.len() - 1, x).clamp(0.0, 1.0)
    }

    /// Probability of a value strictly below `x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.cdf_left_k(self.layers.len() - 1, x)
    }

    /// Continuous density at `x`, ignoring atoms.
    pub fn density(&self, x: f64) -> f64 {
        self.pdf_k(self.layers.len() - 1, x)
    }

    /// Continuous density at `x`; errors at atoms and outside the support.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !self.support().contains(x) {
            return Err(Error::OutsideSupport(x));
        }
        if self.is_atom(x) {
            return Err(Error::AtAtom(x));
        }
        Ok(self.density(x))
    }

    /// `V(q) = inf { v : P(value > v) <= q }`, constant across an atom's quantile range.
    pub fn value_of_quantile(&self, q: f64) -> f64 {
        self.quantile_k(self.layers.len() - 1, q.clamp(0.0, 1.0))
    }

    /// `P(value >= v)`: at an atom this is the upper end of its quantile range.
    pub fn quantile_of_value(&self, v: f64) -> f64 {
        1.0 - self.cdf_left(v)
    }

    /// The range of quantiles occupied by value `v` (a single point off atoms).
    pub fn quantile_range(&self, v: f64) -> (f64, f64) {
        (1.0 - self.cdf(v), 1.0 - self.cdf_left(v))
    }

    /// `E[min(V, x)]`.
    pub fn capped_mean(&self, x: f64) -> f64 {
        self.capped_mean_k(self.layers.len() - 1, x)
    }

    pub fn mean(&self) -> f64 {
        self.capped_mean(f64::INFINITY)
    }

    /// Integral of the survival function `1 - F` over `[p, sup]`: the expected
    /// residual surplus `E[(V - p)^+]` of a posted price `p`.
    pub fn tail_integral(&self, p: f64) -> f64 {
        let total = self.mean();
        if total.is_infinite() {
            return f64::INFINITY;
        }
        let s = self.support();
        if p >= s.hi {
            return 0.0;
        }
        (total - self.capped_mean(p.max(0.0))).max(0.0) + (-p).max(0.0)
    }

    /// Points where quadrature should cut: support ends and atoms.
    pub fn breakpoints(&self) -> Vec<f64> {
        let s = self.support();
        let mut b: Vec<f64> = self.atoms().iter().map(|t| t.at).collect();
        b.push(s.lo);
        if s.hi.is_finite() {
            b.push(s.hi);
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Integral of the continuous density plus the atom masses.
    pub fn total_mass(&self) -> Result<f64> {
        let s = self.support();
        let breaks = self.breakpoints();
        let cont = if s.hi > s.lo {
            quad::integrate_breaks(|x| self.density(x), s.lo, s.hi, &breaks, QuadOptions::with_rel(1e-11))?
        } else {
            0.0
        };
        Ok(cont + self.atoms().iter().map(|t| t.mass).sum::<f64>())
    }

    /// Virtual value at `v` for the given objective. At an atom the revenue
    /// virtual value is `v` and the residual-surplus one is 0.
    pub fn virtual_value(&self, obj: Objective, v: f64) -> Result<f64> {
        if !self.support().contains(v) {
            return Err(Error::OutsideSupport(v));
        }
        if obj == Objective::Welfare {
            return Ok(v);
        }
        if self.is_atom(v) {
            return Ok(match obj {
                Objective::Revenue => v,
                _ => 0.0,
            });
        }
        let f = self.density(v);
        if !(f > 0.0) {
            return Err(Error::Singular(v));
        }
        let ratio = self.survival(v) / f;
        Ok(match obj {
            Objective::Revenue => v - ratio,
            _ => ratio,
        })
    }

    fn base_record(&self) -> (Family, Vec<f64>, Option<Expr>) {
        match &self.base {
            Base::Uniform { a, b } => (Family::Uniform, vec![*a, *b], None),
            Base::Quadratic { z } => (Family::Quadratic, vec![*z], None),
            Base::ShiftedExponential { a, beta } => (Family::ShiftedExponential, vec![*a, *beta], None),
            Base::ShiftedQuadratic { a, phi } => (Family::ShiftedQuadratic, vec![*a, *phi], None),
            Base::PointMass { a } => (Family::PointMass, vec![*a], None),
            Base::Density { density, lo, hi, .. } => (Family::Derived, vec![*lo, *hi], Some(density.clone())),
        }
    }

    pub fn to_record(&self) -> DistributionRecord {
        let (family, params, density) = self.base_record();
        DistributionRecord {
            family,
            params: params.into_iter().map(FiniteOrInf).collect(),
            density,
            support: Some(self.support()),
            atoms: self.atoms().to_vec(),
            transforms: self.transforms.clone(),
        }
    }

    pub fn from_record(rec: &DistributionRecord) -> Result<Distribution> {
        let p: Vec<f64> = rec.params.iter().map(|x| x.0).collect();
        let need = |n: usize| -> Result<()> {
            if p.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{:?} takes {n} params, got {}", rec.family, p.len())))
            }
        };
        let mut d = match rec.family {
            Family::Uniform => {
                need(2)?;
                Distribution::uniform(p[0], p[1])?
            }
            Family::Quadratic => {
                need(1)?;
                Distribution::quadratic(p[0])?
            }
            Family::ShiftedExponential => {
                need(2)?;
                Distribution::shifted_exponential(p[0], p[1])?
            }
            Family::ShiftedQuadratic => {
                need(2)?;
                Distribution::shifted_quadratic(p[0], p[1])?
            }
            Family::PointMass => {
                need(1)?;
                Distribution::point_mass(p[0])?
            }
            Family::Derived => {
                need(2)?;
                let e = rec.density.clone().ok_or_else(|| Error::InvalidParameter("derived family needs a density".into()))?;
                Distribution::from_density(e, p[0], p[1])?
            }
        };
        for t in &rec.transforms {
            d = d.apply(*t)?;
        }
        Ok(d)
    }
}

/// A float that serialises `inf` as a string, since JSON has no infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteOrInf(#[serde(with = "inf_f64")] pub f64);

/// JSON form of a distribution. `support` and `atoms` are informative on
/// output and ignored on input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionRecord {
    pub family: Family,
    pub params: Vec<FiniteOrInf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<Expr>,
    #[serde(default)]
    pub support: Option<SupportInterval>,
    #[serde(default)]
    pub atoms: Vec<Atom>,
    #[serde(default)]
    pub transforms: Vec<Transform>,
}

impl Serialize for Distribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Distribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = DistributionRecord::deserialize(d)?;
        Distribution::from_record(&rec).map_err(serde::de::Error::custom)
    }
}

/// The pair of quantile maps of a distribution.
pub struct QuantileMaps<'a> {
    dist: &'a Distribution,
}

impl QuantileMaps<'_> {
    pub fn value_of_quantile(&self, q: f64) -> f64 {
        self.dist.value_of_quantile(q)
    }

    pub fn quantile_of_value(&self, v: f64) -> f64 {
        self.dist.quantile_of_value(v)
    }
}

pub fn quantile_maps(dist: &Distribution) -> QuantileMaps<'_> {
    QuantileMaps { dist }
}
