//! Performance curves in quantile space and their ironing.
//!
//! A curve carries its samples, and when built from a distribution also the
//! exact evaluator `R(q)` it was sampled from. Ironing replaces intervals by
//! chords whose endpoints come from the evaluator, so areas of ironed curves
//! are exact chords plus adaptive quadrature of the untouched pieces.

use crate::dist::{Distribution, Objective};
use crate::error::{Error, Result};
use crate::quad::{self, QuadOptions};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::sync::Arc;

type Eval = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentTag {
    Smooth,
    AtomFlat,
    Zero,
    Ironed,
}

impl SegmentTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentTag::Smooth => "smooth",
            SegmentTag::AtomFlat => "atom_flat",
            SegmentTag::Zero => "zero",
            SegmentTag::Ironed => "ironed",
        }
    }
}

/// A straight piece from `(q0, r0)` to `(q1, r1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Chord {
    pub q0: f64,
    pub r0: f64,
    pub q1: f64,
    pub r1: f64,
}

impl Chord {
    fn at(&self, q: f64) -> f64 {
        if self.q1 == self.q0 {
            return self.r1;
        }
        self.r0 + (self.r1 - self.r0) * (q - self.q0) / (self.q1 - self.q0)
    }

    fn area(&self) -> f64 {
        0.5 * (self.r0 + self.r1) * (self.q1 - self.q0)
    }

    pub fn slope(&self) -> f64 {
        (self.r1 - self.r0) / (self.q1 - self.q0)
    }
}

/// Disjoint quantile intervals to iron. Touching endpoints are allowed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IroningSet {
    pub intervals: Vec<(f64, f64)>,
}

impl IroningSet {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<IroningSet> {
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        for &(a, b) in &intervals {
            if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || !(a < b) {
                return Err(Error::InvalidParameter(format!("ironing interval [{a}, {b}]")));
            }
        }
        for w in intervals.windows(2) {
            if w[1].0 < w[0].1 {
                return Err(Error::InvalidParameter(format!(
                    "overlapping ironing intervals [{}, {}] and [{}, {}]",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        Ok(IroningSet { intervals })
    }

    pub fn empty() -> IroningSet {
        IroningSet::default()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Sampled curve `R(q)` on `[0, 1]`.
#[derive(Clone)]
pub struct QuantileCurve {
    q: Vec<f64>,
    r: Vec<f64>,
    tags: Vec<SegmentTag>,
    endpoint_set: Option<(f64, f64)>,
    base: Option<Eval>,
    breaks: Vec<f64>,
    chords: Vec<Chord>,
    objective: Option<Objective>,
}

impl std::fmt::Debug for QuantileCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("QuantileCurve")
            .field("samples", &self.q.len())
            .field("endpoint_set", &self.endpoint_set)
            .field("chords", &self.chords)
            .field("objective", &self.objective)
            .finish()
    }
}

fn merge_grid(mut g: Vec<f64>) -> Vec<f64> {
    g.retain(|x| (0.0..=1.0).contains(x));
    g.sort_by(f64::total_cmp);
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    g
}

impl QuantileCurve {
    /// A curve known only through samples; evaluation interpolates linearly.
    pub fn from_samples(q: Vec<f64>, r: Vec<f64>, endpoint_set: Option<(f64, f64)>) -> Result<QuantileCurve> {
        if q.len() != r.len() || q.len() < 2 {
            return Err(Error::InvalidParameter("curve needs at least two matching samples".into()));
        }
        if q[0] != 0.0 || *q.last().unwrap() != 1.0 || q.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("curve grid must increase strictly from 0 to 1".into()));
        }
        let tags = r.windows(2).map(|w| if w[0] == 0.0 && w[1] == 0.0 { SegmentTag::Zero } else { SegmentTag::Smooth }).collect();
        Ok(QuantileCurve { q, r, tags, endpoint_set, base: None, breaks: vec![], chords: vec![], objective: None })
    }

    pub fn samples(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.q.iter().copied().zip(self.r.iter().copied())
    }

    pub fn quantiles(&self) -> &[f64] {
        &self.q
    }

    pub fn values(&self) -> &[f64] {
        &self.r
    }

    pub fn tags(&self) -> &[SegmentTag] {
        &self.tags
    }

    pub fn endpoint_set(&self) -> Option<(f64, f64)> {
        self.endpoint_set
    }

    pub fn chords(&self) -> &[Chord] {
        &self.chords
    }

    pub fn objective(&self) -> Option<Objective> {
        self.objective
    }

    pub fn has_evaluator(&self) -> bool {
        self.base.is_some()
    }

    /// Value at `q = 1` used by hulls: the top of the endpoint set when present.
    pub fn top(&self) -> f64 {
        self.endpoint_set.map(|(_, t)| t).unwrap_or(*self.r.last().unwrap())
    }

    fn base_at(&self, q: f64) -> f64 {
        match &self.base {
            Some(f) => f(q),
            None => {
                let i = self.q.partition_point(|&x| x <= q).clamp(1, self.q.len() - 1);
                let (q0, q1) = (self.q[i - 1], self.q[i]);
                self.r[i - 1] + (self.r[i] - self.r[i - 1]) * (q - q0) / (q1 - q0)
            }
        }
    }

    /// `R(q)`, following chords where the curve has been ironed.
    pub fn eval(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        for c in &self.chords {
            if q >= c.q0 && q <= c.q1 {
                return c.at(q);
            }
        }
        self.base_at(q)
    }

    fn with_chords(&self, mut chords: Vec<Chord>) -> QuantileCurve {
        chords.sort_by(|a, b| a.q0.total_cmp(&b.q0));
        let mut grid = self.q.clone();
        for c in &chords {
            grid.push(c.q0);
            grid.push(c.q1);
        }
        let grid = merge_grid(grid);
        // sample-only curves interpolate their own samples off the chords
        let mut out = QuantileCurve {
            q: self.q.clone(),
            r: self.r.clone(),
            tags: vec![],
            endpoint_set: self.endpoint_set,
            base: self.base.clone(),
            breaks: self.breaks.clone(),
            chords,
            objective: self.objective,
        };
        let r: Vec<f64> = grid.iter().map(|&q| out.eval(q)).collect();
        let tags = grid
            .windows(2)
            .map(|w| {
                let m = 0.5 * (w[0] + w[1]);
                if out.chords.iter().any(|c| m > c.q0 && m < c.q1) {
                    SegmentTag::Ironed
                } else {
                    self.tag_at(m)
                }
            })
            .collect();
        out.q = grid;
        out.r = r;
        out.tags = tags;
        out
    }

    fn tag_at(&self, m: f64) -> SegmentTag {
        let i = self.q.partition_point(|&x| x <= m).clamp(1, self.q.len() - 1);
        self.tags[i - 1]
    }

    /// Linear program-free upper hull of the samples, with the endpoint-set
    /// top standing in for the value at `q = 1`.
    fn hull_vertices(&self) -> Vec<usize> {
        let n = self.q.len();
        let pt = |i: usize| (self.q[i], if i == n - 1 { self.top() } else { self.r[i] });
        let mut h: Vec<usize> = Vec::with_capacity(n);
        for i in 0..n {
            let p = pt(i);
            while h.len() >= 2 {
                let o = pt(h[h.len() - 2]);
                let a = pt(h[h.len() - 1]);
                let cross = (a.0 - o.0) * (p.1 - o.1) - (a.1 - o.1) * (p.0 - o.0);
                if cross >= 0.0 {
                    h.pop();
                } else {
                    break;
                }
            }
            h.push(i);
        }
        h
    }
}

fn atom_quantile_breaks(dist: &Distribution) -> Vec<f64> {
    let mut b = vec![];
    for a in dist.atoms() {
        let (lo, hi) = dist.quantile_range(a.at);
        b.push(lo);
        b.push(hi);
    }
    merge_grid(b)
}

/// Performance curve of posting a price, as a function of the sale quantile.
///
/// Revenue is `q V(q)`, residual surplus is `T(V(q))` with `T(p)` the
/// integral of the survival function above `p`, and welfare is their sum.
pub fn performance_curve(dist: &Distribution, obj: Objective, grid_size: usize) -> Result<QuantileCurve> {
    if grid_size < 64 {
        return Err(Error::InvalidParameter(format!("grid_size {grid_size} below 64")));
    }
    let mass = dist.total_mass()?;
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::Improper(format!("total mass {mass}")));
    }
    let lo = dist.support().lo;
    let mean = dist.mean();
    if obj != Objective::Revenue && !mean.is_finite() {
        return Err(Error::Divergent(format!("{obj} curve of {dist} needs a finite mean")));
    }
    let d = dist.clone();
    let base: Eval = match obj {
        Objective::Revenue => Arc::new(move |q: f64| if q <= 0.0 { 0.0 } else { q * d.value_of_quantile(q) }),
        Objective::ResidualSurplus => Arc::new(move |q: f64| d.tail_integral(d.value_of_quantile(q))),
        Objective::Welfare => Arc::new(move |q: f64| {
            if q <= 0.0 {
                return 0.0;
            }
            let v = d.value_of_quantile(q);
            q * v + d.tail_integral(v)
        }),
    };
    let breaks = atom_quantile_breaks(dist);
    let mut grid: Vec<f64> = (0..=grid_size).map(|i| i as f64 / grid_size as f64).collect();
    grid.extend(breaks.iter().copied());
    let grid = merge_grid(grid);
    let r: Vec<f64> = grid.iter().map(|&q| base(q)).collect();
    let ranges: Vec<(f64, f64)> = dist.atoms().iter().map(|a| dist.quantile_range(a.at)).collect();
    let tags = grid
        .windows(2)
        .zip(r.windows(2))
        .map(|(w, rv)| {
            let m = 0.5 * (w[0] + w[1]);
            if ranges.iter().any(|&(a, b)| m > a && m < b) {
                SegmentTag::AtomFlat
            } else if rv[0] == 0.0 && rv[1] == 0.0 {
                SegmentTag::Zero
            } else {
                SegmentTag::Smooth
            }
        })
        .collect();
    let endpoint_set = if obj == Objective::ResidualSurplus && lo > 0.0 { Some((mean - lo, mean)) } else { None };
    Ok(QuantileCurve { q: grid, r, tags, endpoint_set, base: Some(base), breaks, chords: vec![], objective: Some(obj) })
}

/// Refines a grid-level bitangent `[a, b]` against the exact evaluator.
fn refine_chord(curve: &QuantileCurve, q: &[f64], ia: usize, ib: usize) -> (f64, f64) {
    let f = |x: f64| curve.base_at(x);
    let n = q.len();
    let top = curve.top();
    let rb = |b: f64| if b == 1.0 { top } else { f(b) };
    let (mut a, mut b) = (q[ia], q[ib]);
    let fix_a = ia == 0;
    let fix_b = ib == n - 1;
    let a_lo = q[ia.saturating_sub(1)];
    let a_hi = q[(ia + 1).min(n - 1)];
    let b_lo = q[ib.saturating_sub(1)];
    let b_hi = q[(ib + 1).min(n - 1)];
    for _ in 0..4 {
        if !fix_a {
            let yb = rb(b);
            let hi = a_hi.min(b - 1e-12);
            let cand = quad::golden_min(|x| (yb - f(x)) / (b - x), a_lo, hi, 1e-12);
            let better = (yb - f(cand)) / (b - cand) <= (yb - f(a)) / (b - a);
            if better {
                a = cand;
            }
        }
        if !fix_b {
            let ya = f(a);
            let lo = b_lo.max(a + 1e-12);
            let cand = quad::golden_min(|x| -(f(x) - ya) / (x - a), lo, b_hi, 1e-12);
            if (f(cand) - ya) / (cand - a) >= (f(b) - ya) / (b - a) {
                b = cand;
            }
        }
    }
    (a, b)
}

/// Smallest concave majorant of the curve and the intervals where it lies
/// strictly above the curve.
pub fn iron_concave_hull(curve: &QuantileCurve) -> (QuantileCurve, IroningSet) {
    let n = curve.q.len();
    let h = curve.hull_vertices();
    let scale = 1.0 + curve.r.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    // the vertex scan is exact, so only rounding-level gaps are dropped
    let tol = 1e-14 * scale;
    let mut intervals = vec![];
    for w in h.windows(2) {
        let (i, j) = (w[0], w[1]);
        let yj = if j == n - 1 { curve.top() } else { curve.r[j] };
        let chord = Chord { q0: curve.q[i], r0: curve.r[i], q1: curve.q[j], r1: yj };
        let gap = (i + 1..j).map(|k| chord.at(curve.q[k]) - curve.r[k]).fold(0.0f64, f64::max);
        let jump_at_one = j == n - 1 && yj > curve.r[j] + tol;
        if gap > tol || jump_at_one {
            intervals.push((i, j));
        }
    }
    let mut chords = vec![];
    let mut set = vec![];
    for (i, j) in intervals {
        let (a, b) = if curve.base.is_some() { refine_chord(curve, &curve.q, i, j) } else { (curve.q[i], curve.q[j]) };
        let rb = if b == 1.0 { curve.top() } else { curve.base_at(b) };
        chords.push(Chord { q0: a, r0: curve.base_at(a), q1: b, r1: rb });
        set.push((a, b));
    }
    let ironed = curve.with_chords(chords);
    (ironed, IroningSet { intervals: set })
}

/// Smallest monotone concave majorant: the concave hull, flattened after its
/// maximum. Twice its area is the optimal two-agent performance.
pub fn monotone_hull(curve: &QuantileCurve) -> QuantileCurve {
    let (hull, _) = iron_concave_hull(curve);
    let (qm, rm) = hull_max(&hull);
    if qm >= 1.0 {
        return hull;
    }
    let mut chords: Vec<Chord> = hull.chords.iter().copied().filter(|c| c.q1 <= qm).collect();
    chords.push(Chord { q0: qm, r0: rm, q1: 1.0, r1: rm });
    hull.with_chords(chords)
}

/// Location and value of the maximum of a (hull) curve, smallest maximiser on ties.
pub fn hull_max(curve: &QuantileCurve) -> (f64, f64) {
    let n = curve.q.len();
    let mut best = 0;
    for i in 1..n {
        if curve.r[i] > curve.r[best] * (1.0 + 1e-15) + 1e-300 {
            best = i;
        }
    }
    let (mut qm, mut rm) = (curve.q[best], curve.r[best]);
    if curve.base.is_some() && best > 0 && best < n - 1 {
        let on_chord = curve.chords.iter().any(|c| qm >= c.q0 && qm <= c.q1);
        if !on_chord {
            let x = quad::golden_min(|x| -curve.eval(x), curve.q[best - 1], curve.q[best + 1], 1e-12);
            let v = curve.eval(x);
            if v > rm {
                qm = x;
                rm = v;
            }
        }
    }
    (qm, rm)
}

/// Replaces the curve on each interval by its chord. An interval ending at
/// `q = 1` aims at the top of the endpoint set.
pub fn iron_with(curve: &QuantileCurve, set: &IroningSet) -> Result<QuantileCurve> {
    let set = IroningSet::new(set.intervals.clone())?;
    let chords = set
        .intervals
        .iter()
        .map(|&(a, b)| Chord { q0: a, r0: curve.eval(a), q1: b, r1: if b == 1.0 { curve.top() } else { curve.eval(b) } })
        .collect();
    let mut keep: Vec<Chord> =
        curve.chords.iter().copied().filter(|c| set.intervals.iter().all(|&(a, b)| c.q1 <= a || c.q0 >= b)).collect();
    keep.extend::<Vec<Chord>>(chords);
    Ok(curve.with_chords(keep))
}

/// Area under the curve: chords exactly, the rest by adaptive quadrature of
/// the evaluator, or by the trapezoid rule for sample-only curves.
pub fn area_under(curve: &QuantileCurve) -> Result<f64> {
    let Some(base) = &curve.base else {
        let mut s = 0.0;
        for i in 1..curve.q.len() {
            s += 0.5 * (curve.r[i] + curve.r[i - 1]) * (curve.q[i] - curve.q[i - 1]);
        }
        return Ok(s);
    };
    let mut chords = curve.chords.clone();
    chords.sort_by(|a, b| a.q0.total_cmp(&b.q0));
    let mut total = 0.0;
    let mut cursor = 0.0;
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 8000 };
    for c in chords.iter().chain(std::iter::once(&Chord { q0: 1.0, r0: 0.0, q1: 1.0, r1: 0.0 })) {
        if c.q0 > cursor {
            total += quad::integrate_breaks(|q| base(q), cursor, c.q0, &curve.breaks, opts)?;
        }
        total += c.area();
        cursor = cursor.max(c.q1);
    }
    Ok(total)
}

/// Quantile maximising the slope `R(q)/q` of the chord from the origin.
pub fn best_downward_iron(curve: &QuantileCurve) -> Result<(f64, f64)> {
    let n = curve.q.len();
    let slope = |q: f64| curve.eval(q) / q;
    let mut best: Option<usize> = None;
    for i in 1..n {
        let s = slope(curve.q[i]);
        if best.is_none_or(|b| s > slope(curve.q[b]) * (1.0 + 1e-12)) {
            best = Some(i);
        }
    }
    let i = best.unwrap();
    if !(curve.r.iter().any(|&r| r > 0.0)) {
        return Err(Error::InvalidParameter("curve is identically zero".into()));
    }
    let (mut q, mut s) = (curve.q[i], slope(curve.q[i]));
    if curve.base.is_some() && i > 1 && i < n - 1 {
        let x = quad::golden_min(|x| -slope(x), curve.q[i - 1], curve.q[i + 1], 1e-12);
        let sx = slope(x);
        if sx > s * (1.0 + 1e-14) {
            q = x;
            s = sx;
        }
        // golden section stalls near sqrt(eps) on a flat maximum; finish on
        // the tangency condition q R'(q) = R(q)
        let tangency = |x: f64| {
            let d = 1e-6 * x;
            x * (curve.eval(x + d) - curve.eval(x - d)) / (2.0 * d) - curve.eval(x)
        };
        let (a, b) = (0.9 * q + 0.1 * curve.q[i - 1], 0.9 * q + 0.1 * curve.q[i + 1]);
        if tangency(a) > 0.0 && tangency(b) < 0.0 {
            if let Ok(x) = quad::bisect(tangency, a, b, 1e-15) {
                if slope(x) >= s * (1.0 - 1e-14) {
                    q = x;
                    s = slope(x);
                }
            }
        }
    }
    Ok((q, s))
}

/// Writes `q,R,tag` rows; the tag describes the segment starting at `q`.
pub fn write_curve_csv<W: Write>(curve: &QuantileCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "R", "tag"])?;
    for (k, (q, r)) in curve.samples().enumerate() {
        let tag = curve.tags.get(k).map(|t| t.as_str()).unwrap_or("end");
        w.write_record([fmt12(q), fmt12(r), tag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `q,R,R_ironed,tag` rows on the ironed curve's grid.
pub fn write_hull_csv<W: Write>(curve: &QuantileCurve, ironed: &QuantileCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["q", "R", "R_ironed", "tag"])?;
    for (k, (q, r)) in ironed.samples().enumerate() {
        let tag = ironed.tags.get(k).map(|t| t.as_str()).unwrap_or("end");
        w.write_record([fmt12(q), fmt12(curve.eval(q)), fmt12(r), tag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Twelve significant digits, trailing zeros trimmed.
pub fn fmt12(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.11e}", x);
    let v: f64 = s.parse().unwrap_or(x);
    let mag = v.abs().log10().floor() as i32;
    if (-5..12).contains(&mag) {
        let decimals = (11 - mag).max(0) as usize;
        let t = format!("{:.*}", decimals, v);
        if t.contains('.') {
            t.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            t
        }
    } else {
        s
    }
}
