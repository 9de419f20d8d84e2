//! Expected performance of named two-agent (and single-agent) mechanisms.

use crate::blends::CorrelatedDensity;
use crate::curves::{self, IroningSet};
use crate::dist::{Distribution, Objective};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

/// Grid used for curve-based evaluation; tangents are refined off-grid.
pub const CURVE_GRID: usize = 512;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum MechanismKind {
    Spa,
    SpaReserve(f64),
    Posted(f64),
    Lottery,
    Markup(f64),
    IronedSpa(IroningSet),
    TwoPieceIron,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    #[serde(flatten)]
    pub kind: MechanismKind,
    pub n: usize,
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            MechanismKind::Spa => write!(f, "spa")?,
            MechanismKind::SpaReserve(p) => write!(f, "spa_reserve({p})")?,
            MechanismKind::Posted(p) => write!(f, "posted({p})")?,
            MechanismKind::Lottery => write!(f, "lottery")?,
            MechanismKind::Markup(r) => write!(f, "markup({r})")?,
            MechanismKind::IronedSpa(s) => write!(f, "ironed_spa({:?})", s.intervals)?,
            MechanismKind::TwoPieceIron => write!(f, "two_piece_iron")?,
        }
        write!(f, "[n={}]", self.n)
    }
}

impl Mechanism {
    pub fn new(kind: MechanismKind, n: usize) -> Result<Mechanism> {
        if !(1..=2).contains(&n) {
            return Err(Error::Unsupported(format!("{n} agents")));
        }
        match &kind {
            MechanismKind::SpaReserve(p) | MechanismKind::Posted(p) if !(*p >= 0.0 && p.is_finite()) => {
                return Err(Error::InvalidParameter(format!("price {p}")));
            }
            MechanismKind::Markup(r) if !(*r >= 1.0 && r.is_finite()) => {
                return Err(Error::InvalidParameter(format!("markup ratio {r} below 1")));
            }
            _ => {}
        }
        Ok(Mechanism { kind, n })
    }

    pub fn spa() -> Mechanism {
        Mechanism { kind: MechanismKind::Spa, n: 2 }
    }

    pub fn spa_reserve(p: f64) -> Result<Mechanism> {
        Mechanism::new(MechanismKind::SpaReserve(p), 2)
    }

    pub fn posted(p: f64) -> Result<Mechanism> {
        Mechanism::new(MechanismKind::Posted(p), 2)
    }

    pub fn lottery() -> Mechanism {
        Mechanism { kind: MechanismKind::Lottery, n: 2 }
    }

    pub fn markup(r: f64) -> Result<Mechanism> {
        Mechanism::new(MechanismKind::Markup(r), 2)
    }

    pub fn ironed_spa(set: IroningSet) -> Mechanism {
        Mechanism { kind: MechanismKind::IronedSpa(set), n: 2 }
    }

    pub fn two_piece_iron() -> Mechanism {
        Mechanism { kind: MechanismKind::TwoPieceIron, n: 2 }
    }

    pub fn with_agents(mut self, n: usize) -> Result<Mechanism> {
        self.n = n;
        Mechanism::new(self.kind, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfResult {
    pub value: f64,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub breakdown: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub descriptor: Option<String>,
}

impl PerfResult {
    fn plain(value: f64) -> PerfResult {
        PerfResult { value, breakdown: BTreeMap::new(), descriptor: None }
    }

    fn with(mut self, key: &str, v: f64) -> PerfResult {
        self.breakdown.insert(key.to_string(), v);
        self
    }
}

/// Realised performance when the higher value is `x` and the lower is `y`.
/// Ties are split uniformly; an agent whose value equals the price buys.
pub fn payoff(kind: &MechanismKind, obj: Objective, x: f64, y: f64) -> Result<f64> {
    let (x, y) = if x >= y { (x, y) } else { (y, x) };
    // (revenue, welfare)
    let (rev, wel) = match *kind {
        MechanismKind::Spa => (y, x),
        MechanismKind::SpaReserve(p) => {
            if x < p {
                (0.0, 0.0)
            } else {
                (p.max(y), x)
            }
        }
        MechanismKind::Posted(p) => {
            if x < p {
                (0.0, 0.0)
            } else if y >= p {
                (p, 0.5 * (x + y))
            } else {
                (p, x)
            }
        }
        MechanismKind::Lottery => (0.0, 0.5 * (x + y)),
        MechanismKind::Markup(r) => {
            let price = r * y;
            if x > y && x >= price || (x == y && r == 1.0) {
                (price, x)
            } else {
                (0.0, 0.0)
            }
        }
        MechanismKind::IronedSpa(_) | MechanismKind::TwoPieceIron => {
            return Err(Error::Unsupported("ironed mechanisms have no pointwise payoff; use the curve path".into()));
        }
    };
    Ok(match obj {
        Objective::Revenue => rev,
        Objective::Welfare => wel,
        Objective::ResidualSurplus => wel - rev,
    })
}

fn opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 8000 }
}

/// `∫_a^sup h(F(x), S(x)) dx` with `S = 1 - F`, cut at atoms.
fn value_integral(dist: &Distribution, a: f64, h: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let s = dist.support();
    let from = a.max(s.lo);
    if from >= s.hi {
        return Ok(0.0);
    }
    quad::integrate_breaks(|x| h(dist.cdf(x), dist.survival(x)), from, s.hi, &dist.breakpoints(), opts())
}

/// Expected performance over i.i.d. draws from `dist`.
pub fn perf_product(mech: &Mechanism, dist: &Distribution, obj: Objective) -> Result<PerfResult> {
    let lo = dist.support().lo;
    if mech.n == 1 {
        return perf_single(mech, dist, obj);
    }
    match &mech.kind {
        MechanismKind::Spa => {
            let rev = lo + value_integral(dist, lo, |_, s| s * s)?;
            let rs = value_integral(dist, lo, |f, s| 2.0 * f * s)?;
            Ok(by_objective(obj, rev, rs))
        }
        MechanismKind::SpaReserve(p) => {
            let p = *p;
            let a = dist.quantile_of_value(p);
            let sale = 1.0 - (1.0 - a) * (1.0 - a);
            let below = (lo - p).max(0.0);
            let rev = p * sale + below + value_integral(dist, p, |_, s| s * s)?;
            let rs = value_integral(dist, p, |f, s| 2.0 * f * s)?;
            Ok(by_objective(obj, rev, rs).with("sale_probability", sale))
        }
        MechanismKind::Posted(p) => {
            let p = *p;
            let a = dist.quantile_of_value(p);
            let sale = 1.0 - (1.0 - a) * (1.0 - a);
            let rev = p * sale;
            let rs = if a > 0.0 { sale * dist.tail_integral(p) / a } else { 0.0 };
            Ok(by_objective(obj, rev, rs).with("sale_probability", sale))
        }
        MechanismKind::Lottery => Ok(by_objective(obj, 0.0, dist.mean())),
        MechanismKind::Markup(_) => {
            let v = expect_pair(dist, |x, y| payoff(&mech.kind, obj, x, y).unwrap_or(f64::NAN), &[], markup_break(&mech.kind))?;
            Ok(PerfResult::plain(v))
        }
        MechanismKind::IronedSpa(set) => {
            let v = ironed_value(dist, obj, set)?;
            Ok(PerfResult::plain(v))
        }
        MechanismKind::TwoPieceIron => {
            let curve = curves::performance_curve(dist, obj, CURVE_GRID)?;
            // on a curve that is zero below q = 1 every origin chord is flat;
            // the smallest tangency point tends to 0, leaving the lottery
            let q = if curve.values().iter().all(|r| *r == 0.0) { 0.0 } else { curves::best_downward_iron(&curve)?.0 };
            // a tangency at either end leaves one piece, the lottery's ironing
            let set = IroningSet::new([(0.0, q), (q, 1.0)].into_iter().filter(|(a, b)| a < b).collect())?;
            let ironed = curves::iron_with(&curve, &set)?;
            let v = 2.0 * curves::area_under(&ironed)?;
            Ok(PerfResult { value: v, breakdown: BTreeMap::from([("q_star".into(), q)]), descriptor: Some(format!("iron [0,{q}] and [{q},1]")) })
        }
    }
}

fn markup_break(kind: &MechanismKind) -> Option<f64> {
    match kind {
        MechanismKind::Markup(r) => Some(*r),
        _ => None,
    }
}

fn ironed_value(dist: &Distribution, obj: Objective, set: &IroningSet) -> Result<f64> {
    let curve = curves::performance_curve(dist, obj, CURVE_GRID)?;
    let ironed = curves::iron_with(&curve, set)?;
    Ok(2.0 * curves::area_under(&ironed)?)
}

fn by_objective(obj: Objective, rev: f64, rs: f64) -> PerfResult {
    let v = match obj {
        Objective::Revenue => rev,
        Objective::ResidualSurplus => rs,
        Objective::Welfare => rev + rs,
    };
    PerfResult::plain(v)
}

fn perf_single(mech: &Mechanism, dist: &Distribution, obj: Objective) -> Result<PerfResult> {
    match &mech.kind {
        // With one bidder the second price is zero.
        MechanismKind::Spa | MechanismKind::Lottery | MechanismKind::Markup(_) => Ok(by_objective(obj, 0.0, dist.mean())),
        MechanismKind::SpaReserve(p) | MechanismKind::Posted(p) => {
            let a = dist.quantile_of_value(*p);
            Ok(by_objective(obj, p * a, dist.tail_integral(*p)).with("sale_probability", a))
        }
        MechanismKind::IronedSpa(_) | MechanismKind::TwoPieceIron => Err(Error::Unsupported("ironed auctions need two agents".into())),
    }
}

/// `E[phi(max, min)]` over two i.i.d. draws, integrated in quantile space so
/// that atoms need no special handling. `cuts` are values where `phi`
/// jumps. With `ratio = Some(r)` the inner
/// integral is also cut where the low value crosses `max / r`.
pub fn expect_pair(dist: &Distribution, phi: impl Fn(f64, f64) -> f64 + Sync, cuts: &[f64], ratio: Option<f64>) -> Result<f64> {
    let mut breaks: Vec<f64> = vec![];
    for &c in cuts {
        breaks.push(dist.quantile_of_value(c));
        breaks.push(1.0 - dist.cdf(c));
    }
    for a in dist.atoms() {
        let (l, h) = dist.quantile_range(a.at);
        breaks.push(l);
        breaks.push(h);
    }
    let mut outer_breaks = breaks.clone();
    if let Some(r) = ratio {
        // the outer integrand kinks where x / r crosses the support start or an atom
        let mut at: Vec<f64> = dist.atoms().iter().map(|a| a.at).collect();
        at.push(dist.support().lo);
        for v in at {
            outer_breaks.push(dist.quantile_of_value(r * v));
            outer_breaks.push(1.0 - dist.cdf(r * v));
        }
    }
    let inner_opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-11, max_intervals: 4000 };
    let inner = |q1: f64| -> f64 {
        let x = dist.value_of_quantile(q1);
        let mut b = breaks.clone();
        if let Some(r) = ratio {
            b.push(dist.quantile_of_value(x / r));
            b.push(1.0 - dist.cdf(x / r));
        }
        quad::integrate_breaks(|q2| phi(x, dist.value_of_quantile(q2)), q1, 1.0, &b, inner_opts).unwrap_or(f64::NAN)
    };
    let outer = quad::integrate_breaks(inner, 0.0, 1.0, &outer_breaks, QuadOptions { abs_tol: 1e-14, rel_tol: 1e-10, max_intervals: 4000 })?;
    Ok(2.0 * outer)
}

/// Bayesian optimal performance. For two agents this is twice the area
/// under the smallest monotone concave majorant of the performance curve;
/// for one agent it is the maximum of that majorant.
pub fn bayes_opt(dist: &Distribution, obj: Objective, n: usize) -> Result<PerfResult> {
    if !(1..=2).contains(&n) {
        return Err(Error::Unsupported(format!("bayes_opt for {n} agents")));
    }
    if obj == Objective::Welfare {
        let m = if n == 1 { dist.mean() } else { perf_product(&Mechanism::spa(), dist, Objective::Welfare)?.value };
        return Ok(PerfResult { value: m, breakdown: BTreeMap::new(), descriptor: Some("allocate to the highest value".into()) });
    }
    let curve = curves::performance_curve(dist, obj, CURVE_GRID)?;
    let (_, set) = curves::iron_concave_hull(&curve);
    let hull = curves::monotone_hull(&curve);
    let (qm, rm) = curves::hull_max(&hull);
    let price = if qm >= 1.0 && obj == Objective::ResidualSurplus { 0.0 } else { dist.value_of_quantile(qm) };
    let value = if n == 1 { rm } else { 2.0 * curves::area_under(&hull)? };
    let mut breakdown = BTreeMap::new();
    breakdown.insert("monopoly_quantile".to_string(), qm);
    breakdown.insert("reserve".to_string(), price);
    let descriptor = Some(format!("reserve {} at quantile {}, ironed {:?}", price, qm, set.intervals));
    Ok(PerfResult { value, breakdown, descriptor })
}

/// Performance against a correlated two-agent density, integrating the
/// pointwise payoff over the cone `v1 >= v2`, the atom lines and atom pairs.
pub fn perf_correlated(mech: &Mechanism, g: &CorrelatedDensity, obj: Objective) -> Result<PerfResult> {
    let mut cuts = vec![];
    match &mech.kind {
        MechanismKind::Spa | MechanismKind::Lottery => {}
        MechanismKind::SpaReserve(p) | MechanismKind::Posted(p) => cuts.push(*p),
        MechanismKind::Markup(_) => {
            return Err(Error::Unsupported("markup mechanisms are evaluated on product priors only".into()));
        }
        MechanismKind::IronedSpa(_) | MechanismKind::TwoPieceIron => {
            return Err(Error::Unsupported("curve-only mechanisms cannot be evaluated on a correlated density".into()));
        }
    }
    if mech.n != 2 {
        return Err(Error::Unsupported("correlated densities describe two agents".into()));
    }
    let kind = mech.kind.clone();
    let parts = g.integrate_parts(move |x, y| payoff(&kind, obj, x, y).unwrap_or(f64::NAN), &cuts)?;
    Ok(PerfResult::plain(parts.total()).with("cone", parts.cone).with("lines", parts.lines).with("pairs", parts.pairs).with("diagonal", parts.diagonal))
}

/// Monte Carlo estimate of a pointwise mechanism: `(mean, standard error)`.
pub fn simulate(mech: &Mechanism, dist: &Distribution, obj: Objective, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sq) = (0.0, 0.0);
    for _ in 0..samples {
        let x = dist.value_of_quantile(rng.random::<f64>());
        let v = if mech.n == 1 {
            perf_single_draw(&mech.kind, obj, x)?
        } else {
            let y = dist.value_of_quantile(rng.random::<f64>());
            payoff(&mech.kind, obj, x, y)?
        };
        sum += v;
        sq += v * v;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sq / n - mean * mean).max(0.0) * n / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

fn perf_single_draw(kind: &MechanismKind, obj: Objective, x: f64) -> Result<f64> {
    let (rev, wel) = match *kind {
        MechanismKind::SpaReserve(p) | MechanismKind::Posted(p) => {
            if x >= p {
                (p, x)
            } else {
                (0.0, 0.0)
            }
        }
        MechanismKind::IronedSpa(_) | MechanismKind::TwoPieceIron => return Err(Error::Unsupported("ironed auctions need two agents".into())),
        _ => (0.0, x),
    };
    Ok(match obj {
        Objective::Revenue => rev,
        Objective::Welfare => wel,
        Objective::ResidualSurplus => wel - rev,
    })
}
