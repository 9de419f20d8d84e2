//! Adaptive Gauss-Kronrod quadrature.
//!
//! Global adaptive bisection on a 7/15-point Gauss-Kronrod pair. Half-infinite
//! ranges are mapped onto the unit interval with `x = a + t/(1-t)`.

use crate::error::{Error, Result};
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-14, rel_tol: 1e-9, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_rel(rel_tol: f64) -> Self {
        QuadOptions { rel_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Piece {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Piece {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[7];
    let mut res_g = fc * WG[3];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    let mut finite = fc.is_finite();
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        finite &= f1.is_finite() && f2.is_finite();
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err, finite)
}

/// Integrates `f` over `[a, b]`, where `b` may be `+inf`, without failing on
/// non-convergence. Interior `breaks` seed the initial partition.
pub fn integrate_raw<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<Estimate> {
    if a.is_nan() || b.is_nan() {
        return Err(Error::InvalidParameter("NaN integration limit".into()));
    }
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0, evaluations: 0, converged: true });
    }
    if a > b {
        let e = integrate_raw(f, b, a, breaks, opts)?;
        return Ok(Estimate { value: -e.value, ..e });
    }
    if a == f64::NEG_INFINITY {
        return Err(Error::Unsupported("integration from -inf".into()));
    }
    if b == f64::INFINITY {
        let g = |t: f64| {
            if t >= 1.0 {
                return 0.0;
            }
            let s = 1.0 - t;
            let v = f(a + t / s);
            if v == 0.0 { 0.0 } else { v / (s * s) }
        };
        let tb: Vec<f64> = breaks
            .iter()
            .filter(|&&x| x > a && x.is_finite())
            .map(|&x| (x - a) / (1.0 + x - a))
            .collect();
        return adapt(&g, 0.0, 1.0, &tb, opts, (a, b));
    }
    adapt(&f, a, b, breaks, opts, (a, b))
}

fn adapt<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions, span: (f64, f64)) -> Result<Estimate> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = vec![a];
    edges.extend(cuts);
    edges.push(b);
    let mut heap = BinaryHeap::new();
    let mut done: Vec<Piece> = Vec::new();
    let mut evaluations = 0usize;
    for w in edges.windows(2) {
        let (value, error, finite) = kronrod(f, w[0], w[1]);
        evaluations += 15;
        if !finite {
            return Err(Error::Quadrature { lo: span.0, hi: span.1, value: f64::NAN, error: f64::INFINITY });
        }
        heap.push(Piece { a: w[0], b: w[1], value, error });
    }
    let total = |heap: &BinaryHeap<Piece>, done: &[Piece]| {
        let mut v = 0.0;
        let mut e = 0.0;
        for p in heap.iter().chain(done.iter()) {
            v += p.value;
            e += p.error;
        }
        (v, e)
    };
    let mut count = heap.len();
    loop {
        let (value, error) = total(&heap, &done);
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate { value, error, evaluations, converged: true });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => return Ok(Estimate { value, error, evaluations, converged: false }),
        };
        let mid = 0.5 * (worst.a + worst.b);
        if count >= opts.max_intervals || mid <= worst.a || mid >= worst.b || (worst.b - worst.a) < 1e-15 * (worst.a.abs() + worst.b.abs()) {
            done.push(worst);
            if count >= opts.max_intervals {
                while let Some(p) = heap.pop() {
                    done.push(p);
                }
                let (value, error) = total(&heap, &done);
                return Ok(Estimate { value, error, evaluations, converged: false });
            }
            continue;
        }
        let (v1, e1, ok1) = kronrod(f, worst.a, mid);
        let (v2, e2, ok2) = kronrod(f, mid, worst.b);
        evaluations += 30;
        if !(ok1 && ok2) {
            return Err(Error::Quadrature { lo: span.0, hi: span.1, value: f64::NAN, error: f64::INFINITY });
        }
        heap.push(Piece { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Piece { a: mid, b: worst.b, value: v2, error: e2 });
        count += 1;
    }
}

/// Integrates `f` over `[a, b]` and fails unless the tolerance is met.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> Result<f64> {
    integrate_breaks(f, a, b, &[], opts)
}

pub fn integrate_breaks<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opts: QuadOptions) -> Result<f64> {
    let e = integrate_raw(f, a, b, breaks, opts)?;
    if e.converged {
        Ok(e.value)
    } else {
        Err(Error::Quadrature { lo: a, hi: b, value: e.value, error: e.error })
    }
}

/// Integral of a nonnegative `f` over `[a, b]` where `a` may be 0 with a
/// singularity and `b` may be infinite; returns `+inf` on divergence.
///
/// Partial integrals over windows growing by a factor 100 per step are
/// compared: once successive increments stop shrinking by at least half the
/// integral is declared divergent (this catches logarithmic growth, which
/// adaptive quadrature alone can mistake for slow convergence).
pub fn integrate_improper<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, opts: QuadOptions) -> f64 {
    let open_lo = a <= 0.0;
    let open_hi = b.is_infinite();
    if open_lo || open_hi {
        let mid = match (open_lo, open_hi) {
            (true, true) => 1.0,
            (false, true) => a + 1.0,
            _ => 0.5 * (a + b),
        };
        let window = |k: i32| {
            let lo = if open_lo { a + (mid - a) * 10f64.powi(-2 * k) } else { a };
            let hi = if open_hi { mid * 10f64.powi(2 * k) } else { b };
            integrate_breaks(&f, lo, hi, &decades(lo, hi), opts).unwrap_or(f64::INFINITY)
        };
        let parts: Vec<f64> = (1..=5).map(window).collect();
        if parts.iter().any(|p| !p.is_finite()) {
            return f64::INFINITY;
        }
        let last = parts[4] - parts[3];
        let prev = parts[3] - parts[2];
        if last.abs() > 1e-12 * (1.0 + parts[4].abs()) && (prev == 0.0 || last / prev > 0.5) {
            return f64::INFINITY;
        }
    }
    let top = if b.is_finite() { b } else { a.max(1.0) * 1e12 };
    integrate_breaks(&f, a, b, &decades(a.max(1e-300), top), opts).unwrap_or(f64::INFINITY)
}

/// Powers of ten strictly inside `(lo, hi)`.
fn decades(lo: f64, hi: f64) -> Vec<f64> {
    if !(lo > 0.0) || !hi.is_finite() || hi <= lo {
        return vec![];
    }
    let (a, b) = (lo.log10().floor() as i32, hi.log10().ceil() as i32);
    (a..=b).map(|k| 10f64.powi(k)).filter(|&x| x > lo && x < hi).collect()
}

/// Golden-section search for the minimiser of a unimodal function on `[a, b]`.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    // include the bracket ends so corner optima are not lost
    let mid = 0.5 * (a + b);
    [a, mid, b].into_iter().min_by(|x, y| f(*x).total_cmp(&f(*y))).unwrap_or(mid)
}

/// Bisection root of a function with a sign change on `[a, b]`.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidParameter(format!("no sign change on [{a}, {b}]")));
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol * (1.0 + m.abs()) {
            return Ok(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
