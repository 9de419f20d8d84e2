//! Discretized prior-independent design program and its dual certificate.
//!
//! Allocations are symmetric: `x(j, k)` is the probability that agent 1 wins
//! at profile `(v_j, v_k)`, and agent 2 wins with `x(k, j)`. Payments are the
//! threshold payments of a monotone rule, so every objective is linear in `x`.

use crate::dist::Objective;
use crate::error::{Error, Result};
use crate::simplex::{solve_lp, LpInstance, LpSolution, LpStatus, Sense};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueGrid {
    pub values: Vec<f64>,
    pub n_agents: usize,
}

impl ValueGrid {
    pub fn new(values: Vec<f64>, n_agents: usize) -> Result<ValueGrid> {
        if values.is_empty() || values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::InvalidParameter("grid values must be positive and finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter("grid values must be strictly increasing".into()));
        }
        if !(n_agents == 1 || n_agents == 2) {
            return Err(Error::InvalidParameter(format!("{n_agents} agents; only 1 or 2 are supported")));
        }
        Ok(ValueGrid { values, n_agents })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of value profiles.
    pub fn profiles(&self) -> usize {
        self.len().pow(self.n_agents as u32)
    }

    /// Profile index to per-agent value indices.
    pub fn profile(&self, p: usize) -> Vec<usize> {
        let m = self.len();
        if self.n_agents == 1 {
            vec![p]
        } else {
            vec![p / m, p % m]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    pub probs: Vec<f64>,
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> Result<DiscreteDist> {
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("probabilities must be nonnegative".into()));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("probabilities sum to {s}")));
        }
        Ok(DiscreteDist { probs })
    }

    pub fn point_mass(grid: &ValueGrid, idx: usize) -> Result<DiscreteDist> {
        if idx >= grid.len() {
            return Err(Error::InvalidParameter(format!("index {idx} is off the grid")));
        }
        let mut p = vec![0.0; grid.len()];
        p[idx] = 1.0;
        Ok(DiscreteDist { probs: p })
    }

    /// `P(v >= v_j) = v_1 / v_j`: every posted grid price earns `v_1`.
    pub fn equal_revenue(grid: &ValueGrid) -> DiscreteDist {
        let v = &grid.values;
        let s = |j: usize| if j < v.len() { v[0] / v[j] } else { 0.0 };
        let mut probs: Vec<f64> = (0..v.len()).map(|j| s(j) - s(j + 1)).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        DiscreteDist { probs }
    }

    fn check(&self, grid: &ValueGrid) -> Result<()> {
        if self.probs.len() != grid.len() {
            return Err(Error::InvalidParameter(format!("distribution has {} entries for a {}-value grid", self.probs.len(), grid.len())));
        }
        Ok(())
    }

    /// Probability of a profile under i.i.d. draws.
    pub fn profile_prob(&self, grid: &ValueGrid, p: usize) -> f64 {
        grid.profile(p).iter().map(|&j| self.probs[j]).product()
    }
}

/// Single-agent linear coefficients: the expected objective of a monotone
/// allocation `x` is `Σ_j c_j x_j`.
pub fn coefficients(grid: &ValueGrid, dist: &DiscreteDist, obj: Objective) -> Vec<f64> {
    let v = &grid.values;
    let m = v.len();
    let mut above = 0.0;
    let mut c = vec![0.0; m];
    for j in (0..m).rev() {
        let step = if j + 1 < m { v[j + 1] - v[j] } else { 0.0 };
        let f = dist.probs[j];
        c[j] = match obj {
            Objective::Revenue => f * v[j] - step * above,
            // the lowest type pays nothing, so its whole value is surplus
            Objective::ResidualSurplus => step * above + if j == 0 { v[0] } else { 0.0 },
            Objective::Welfare => f * v[j],
        };
        above += f;
    }
    c
}

/// Ironed per-type virtual values: slopes of the lower convex hull of the
/// cumulative coefficients against the cumulative distribution.
pub fn ironed_virtual_values(grid: &ValueGrid, dist: &DiscreteDist, obj: Objective) -> Vec<f64> {
    let c = coefficients(grid, dist, obj);
    let m = c.len();
    let mut pts = vec![(0.0, 0.0)];
    for j in 0..m {
        let (q, r) = pts[j];
        pts.push((q + dist.probs[j], r + c[j]));
    }
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..=m {
        while hull.len() >= 2 {
            let (a, b) = (pts[hull[hull.len() - 2]], pts[hull[hull.len() - 1]]);
            let p = pts[i];
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut phi = vec![0.0; m];
    for w in hull.windows(2) {
        let (a, b) = (pts[w[0]], pts[w[1]]);
        let slope = if b.0 > a.0 { (b.1 - a.1) / (b.0 - a.0) } else { 0.0 };
        for p in phi.iter_mut().take(w[1]).skip(w[0]) {
            *p = slope;
        }
    }
    phi
}

/// Discrete Bayesian optimum by pointwise maximization of ironed virtual values.
pub fn discrete_opt(grid: &ValueGrid, dist: &DiscreteDist, obj: Objective) -> Result<f64> {
    dist.check(grid)?;
    let phi = ironed_virtual_values(grid, dist, obj);
    let f = &dist.probs;
    let m = grid.len();
    Ok(if grid.n_agents == 1 {
        (0..m).map(|j| f[j] * phi[j].max(0.0)).sum()
    } else {
        let mut s = 0.0;
        for j in 0..m {
            for k in 0..m {
                s += f[j] * f[k] * phi[j].max(phi[k]).max(0.0);
            }
        }
        s
    })
}

/// Program options.
#[derive(Debug, Clone, Copy, Default)]
pub struct PiOptions {
    /// Add the redundant rows `perf_F(x) <= OPT_F`.
    pub non_super_optimal: bool,
}

/// A built program together with the data needed to read it back.
#[derive(Debug, Clone)]
pub struct PiProgram {
    pub grid: ValueGrid,
    pub lp: LpInstance,
    pub opts: Vec<f64>,
    pub perf_rows: Vec<Vec<f64>>,
}

impl PiProgram {
    pub fn ratio_var(&self) -> usize {
        self.lp.n_vars() - 1
    }
}

fn var(grid: &ValueGrid, j: usize, k: usize) -> usize {
    if grid.n_agents == 1 {
        j
    } else {
        j * grid.len() + k
    }
}

/// Performance of every allocation variable under `dist`.
fn perf_coefficients(grid: &ValueGrid, dist: &DiscreteDist, obj: Objective) -> Vec<f64> {
    let c = coefficients(grid, dist, obj);
    let m = grid.len();
    if grid.n_agents == 1 {
        return c;
    }
    let mut out = vec![0.0; m * m];
    for j in 0..m {
        for k in 0..m {
            // both agents contribute symmetrically
            out[var(grid, j, k)] = 2.0 * dist.probs[k] * c[j];
        }
    }
    out
}

/// Builds `max ǎ` subject to approximation, feasibility and monotonicity rows.
pub fn build_pi_lp(grid: &ValueGrid, dists: &[DiscreteDist], obj: Objective, options: PiOptions) -> Result<PiProgram> {
    if dists.is_empty() {
        return Err(Error::InvalidParameter("no distributions".into()));
    }
    let m = grid.len();
    let nx = if grid.n_agents == 1 { m } else { m * m };
    let mut lp = LpInstance::new(nx + 1, true);
    for j in 0..m {
        for k in 0..(if grid.n_agents == 1 { 1 } else { m }) {
            lp.names[var(grid, j, k)] = if grid.n_agents == 1 { format!("x_{j}") } else { format!("x_{j}_{k}") };
        }
    }
    lp.names[nx] = "a".into();
    lp.objective[nx] = 1.0;
    let mut opts = Vec::new();
    let mut perf_rows = Vec::new();
    for (d, dist) in dists.iter().enumerate() {
        dist.check(grid)?;
        let opt = discrete_opt(grid, dist, obj)?;
        if !(opt > 0.0) {
            return Err(Error::InvalidParameter(format!("distribution {d} has optimum {opt}")));
        }
        let mut row = perf_coefficients(grid, dist, obj);
        perf_rows.push(row.clone());
        if options.non_super_optimal {
            let mut cap = row.clone();
            cap.push(0.0);
            lp.add_row(cap, Sense::Le, opt, format!("opt_{d}"));
        }
        row.push(-opt);
        lp.add_row(row, Sense::Ge, 0.0, format!("approx_{d}"));
        opts.push(opt);
    }
    if grid.n_agents == 1 {
        for j in 0..m {
            lp.add_sparse(&[(j, 1.0)], Sense::Le, 1.0, format!("feas_{j}"));
        }
        for j in 0..m - 1 {
            lp.add_sparse(&[(j, 1.0), (j + 1, -1.0)], Sense::Le, 0.0, format!("mono_{j}"));
        }
    } else {
        for j in 0..m {
            for k in j..m {
                lp.add_sparse(&[(var(grid, j, k), 1.0), (var(grid, k, j), 1.0)], Sense::Le, 1.0, format!("feas_{j}_{k}"));
            }
        }
        // adjacent rungs imply the full chain
        for j in 0..m - 1 {
            for k in 0..m {
                lp.add_sparse(&[(var(grid, j, k), 1.0), (var(grid, j + 1, k), -1.0)], Sense::Le, 0.0, format!("mono_{j}_{k}"));
            }
        }
    }
    Ok(PiProgram { grid: grid.clone(), lp, opts, perf_rows })
}

/// Solved program.
#[derive(Debug, Clone, Serialize)]
pub struct PiSolution {
    pub alpha: f64,
    pub ratio_guarantee: f64,
    pub opts: Vec<f64>,
    pub performance: Vec<f64>,
    /// Allocation of agent 1 by profile (one row per own value).
    pub allocation: Vec<Vec<f64>>,
    pub lp: LpSolution,
}

pub fn solve_pi(grid: &ValueGrid, dists: &[DiscreteDist], obj: Objective, options: PiOptions) -> Result<PiSolution> {
    let prog = build_pi_lp(grid, dists, obj, options)?;
    let sol = solve_lp(&prog.lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("program status {:?}", sol.status)));
    }
    let a = sol.x[prog.ratio_var()];
    let m = grid.len();
    let allocation = if grid.n_agents == 1 {
        vec![sol.x[..m].to_vec()]
    } else {
        (0..m).map(|j| (0..m).map(|k| sol.x[var(grid, j, k)]).collect()).collect()
    };
    let performance = prog.perf_rows.iter().map(|r| r.iter().zip(&sol.x).map(|(c, x)| c * x).sum()).collect();
    Ok(PiSolution { alpha: 1.0 / a, ratio_guarantee: a, opts: prog.opts, performance, allocation, lp: sol })
}

/// Optimal prior-independent approximation ratio over `dists`.
pub fn alpha_pi(grid: &ValueGrid, dists: &[DiscreteDist], obj: Objective) -> Result<f64> {
    Ok(solve_pi(grid, dists, obj, PiOptions::default())?.alpha)
}

/// Correlated profile distribution of a weighted family.
pub fn correlated(grid: &ValueGrid, dists: &[DiscreteDist], weights: &[f64]) -> Vec<f64> {
    (0..grid.profiles()).map(|p| dists.iter().zip(weights).map(|(d, w)| w * d.profile_prob(grid, p)).sum()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub accepted: bool,
    pub max_density_err: f64,
    /// Value indices of the worst profile.
    pub worst_profile: Vec<usize>,
    pub kappa: f64,
    pub opt_benchmark: f64,
    pub opt_ceiling: f64,
    pub ratio: f64,
    pub alpha: f64,
    pub reason: String,
}

/// Checks that `omega` (benchmark) and `o` (ceiling) induce the same
/// correlated distribution and that their ratio stays below `alpha_pi`.
pub fn dual_certificate(grid: &ValueGrid, dists: &[DiscreteDist], omega: &[f64], o: &[f64], obj: Objective) -> Result<Certificate> {
    if omega.len() != dists.len() || o.len() != dists.len() {
        return Err(Error::InvalidParameter("one weight per distribution".into()));
    }
    if omega.iter().chain(o).any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidParameter("weights must be nonnegative".into()));
    }
    let g1 = correlated(grid, dists, omega);
    let g2 = correlated(grid, dists, o);
    let (worst, err) = g1.iter().zip(&g2).map(|(a, b)| (a - b).abs()).enumerate().fold((0, 0.0), |b, (i, e)| if e > b.1 { (i, e) } else { b });
    let opts: Vec<f64> = dists.iter().map(|d| discrete_opt(grid, d, obj)).collect::<Result<_>>()?;
    let kappa: f64 = omega.iter().zip(&opts).map(|(w, v)| w * v).sum();
    let ceiling: f64 = o.iter().zip(&opts).map(|(w, v)| w * v).sum();
    let ratio = kappa / ceiling;
    let family: Vec<DiscreteDist> = dists.iter().zip(omega.iter().zip(o)).filter(|(_, (a, b))| **a > 0.0 || **b > 0.0).map(|(d, _)| d.clone()).collect();
    let alpha = alpha_pi(grid, &family, obj)?;
    let mut reason = String::new();
    if err > 1e-9 {
        reason = format!("density mismatch {err:.3e} at profile {:?}", grid.profile(worst));
    } else if ratio > alpha + 1e-6 {
        reason = format!("ratio {ratio} exceeds alpha {alpha}");
    }
    Ok(Certificate {
        accepted: reason.is_empty(),
        max_density_err: err,
        worst_profile: grid.profile(worst),
        kappa,
        opt_benchmark: kappa,
        opt_ceiling: ceiling,
        ratio,
        alpha,
        reason,
    })
}

/// Ceiling weights matching `omega`'s correlated distribution with the
/// smallest expected optimum.
pub fn best_ceiling_weights(grid: &ValueGrid, dists: &[DiscreteDist], omega: &[f64], obj: Objective) -> Result<(Vec<f64>, LpSolution)> {
    let opts: Vec<f64> = dists.iter().map(|d| discrete_opt(grid, d, obj)).collect::<Result<_>>()?;
    let target = correlated(grid, dists, omega);
    let mut lp = LpInstance::new(dists.len(), false);
    lp.objective = opts;
    for (p, &t) in target.iter().enumerate() {
        let row: Vec<f64> = dists.iter().map(|d| d.profile_prob(grid, p)).collect();
        lp.add_row(row, Sense::Eq, t, format!("match_{p}"));
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("density matching status {:?}", sol.status)));
    }
    Ok((sol.x.clone(), sol))
}

/// Small random instance: 2 to 4 grid values, one or two agents, three
/// distributions and positive benchmark weights.
pub fn random_instance<R: rand::Rng>(rng: &mut R) -> (ValueGrid, Vec<DiscreteDist>, Vec<f64>) {
    let m = rng.random_range(2..=4);
    let n = rng.random_range(1..=2);
    let mut v = 1.0;
    let values: Vec<f64> = (0..m)
        .map(|_| {
            let x = v;
            v += 0.25 + rng.random::<f64>() * 2.0;
            x
        })
        .collect();
    let grid = ValueGrid::new(values, n).expect("increasing grid");
    let dists = (0..3)
        .map(|_| loop {
            let raw: Vec<f64> = (0..m).map(|_| if rng.random::<f64>() < 0.3 { 0.0 } else { rng.random::<f64>() }).collect();
            let s: f64 = raw.iter().sum();
            if s > 0.0 {
                let mut p: Vec<f64> = raw.iter().map(|x| x / s).collect();
                // pin the sum so validation sees exactly one
                let rest: f64 = p[..m - 1].iter().sum();
                if p[m - 1] > 0.0 {
                    p[m - 1] = 1.0 - rest;
                }
                if let Ok(d) = DiscreteDist::new(p) {
                    break d;
                }
            }
        })
        .collect();
    let omega = (0..3).map(|_| 0.1 + rng.random::<f64>()).collect();
    (grid, dists, omega)
}

/// JSON instance description for the command line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub grid: Vec<f64>,
    #[serde(default = "two")]
    pub n_agents: usize,
    pub dists: Vec<Vec<f64>>,
    pub objective: Objective,
    /// Optional benchmark and ceiling weights for certification.
    #[serde(default)]
    pub omega: Option<Vec<f64>>,
    #[serde(default)]
    pub o: Option<Vec<f64>>,
}

fn two() -> usize {
    2
}

impl InstanceSpec {
    pub fn build(&self) -> Result<(ValueGrid, Vec<DiscreteDist>)> {
        let grid = ValueGrid::new(self.grid.clone(), self.n_agents)?;
        let dists = self.dists.iter().map(|p| DiscreteDist::new(p.clone())).collect::<Result<Vec<_>>>()?;
        for d in &dists {
            d.check(&grid)?;
        }
        Ok((grid, dists))
    }

    /// Point masses at 1 and 2 for a single agent.
    pub fn two_point() -> InstanceSpec {
        InstanceSpec {
            grid: vec![1.0, 2.0],
            n_agents: 1,
            dists: vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5]],
            objective: Objective::Revenue,
            omega: Some(vec![0.5, 0.5, 0.0]),
            o: Some(vec![0.0, 0.0, 1.0]),
        }
    }
}
