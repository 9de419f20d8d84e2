//! Dense two-phase simplex with Bland's rule. Sized for desk-top instances
//! (a few hundred rows and columns).

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

const PIVOT_EPS: f64 = 1e-11;
const BLAND_AFTER: usize = 8;
const HARRIS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl Sense {
    fn flip(self) -> Sense {
        match self {
            Sense::Le => Sense::Ge,
            Sense::Ge => Sense::Le,
            Sense::Eq => Sense::Eq,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub sense: Sense,
    pub rhs: f64,
    #[serde(default)]
    pub label: String,
}

/// `max` or `min` of `objective · x` subject to the rows and `lower <= x <= upper`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpInstance {
    pub maximize: bool,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<Option<f64>>,
    #[serde(default)]
    pub names: Vec<String>,
}

impl LpInstance {
    pub fn new(n: usize, maximize: bool) -> LpInstance {
        LpInstance {
            maximize,
            objective: vec![0.0; n],
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![None; n],
            names: (0..n).map(|j| format!("x{j}")).collect(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, sense: Sense, rhs: f64, label: impl Into<String>) {
        self.rows.push(Row { coeffs, sense, rhs, label: label.into() });
    }

    /// Sparse variant of `add_row`.
    pub fn add_sparse(&mut self, terms: &[(usize, f64)], sense: Sense, rhs: f64, label: impl Into<String>) {
        let mut c = vec![0.0; self.n_vars()];
        for &(j, a) in terms {
            c[j] += a;
        }
        self.add_row(c, sense, rhs, label);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Lp("bound vectors do not match the objective".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if r.coeffs.len() != n {
                return Err(Error::Lp(format!("row {i} has {} coefficients, expected {n}", r.coeffs.len())));
            }
            if !r.rhs.is_finite() || r.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(Error::Lp(format!("row {i} is not finite")));
            }
        }
        if self.objective.iter().chain(&self.lower).any(|a| !a.is_finite()) {
            return Err(Error::Lp("objective and lower bounds must be finite".into()));
        }
        Ok(())
    }

    /// Plain-text tableau dump: one line per row, nonzero coefficients only.
    pub fn dump(&self) -> String {
        let name = |j: usize| self.names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
        let terms = |c: &[f64]| {
            let mut s = String::new();
            for (j, a) in c.iter().enumerate().filter(|(_, a)| **a != 0.0) {
                let _ = write!(s, " {:+} {}", a, name(j));
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let mut out = String::new();
        let _ = writeln!(out, "{}:{}", if self.maximize { "max" } else { "min" }, terms(&self.objective));
        let _ = writeln!(out, "subject to");
        for (i, r) in self.rows.iter().enumerate() {
            let label = if r.label.is_empty() { format!("r{i}") } else { r.label.clone() };
            let _ = writeln!(out, "  {label}:{} {} {}", terms(&r.coeffs), r.sense.symbol(), r.rhs);
        }
        let _ = writeln!(out, "bounds");
        for j in 0..self.n_vars() {
            match self.upper[j] {
                Some(u) => {
                    let _ = writeln!(out, "  {} <= {} <= {}", self.lower[j], name(j), u);
                }
                None => {
                    let _ = writeln!(out, "  {} >= {}", name(j), self.lower[j]);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One multiplier per row, signed so that the objective equals `Σ rhs·dual` plus bound terms.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub slackness_residual: f64,
    pub iterations: usize,
}

impl LpSolution {
    fn failed(status: LpStatus, n: usize, m: usize, iterations: usize) -> LpSolution {
        LpSolution {
            status,
            x: vec![f64::NAN; n],
            duals: vec![f64::NAN; m],
            objective: f64::NAN,
            dual_objective: f64::NAN,
            primal_residual: f64::NAN,
            slackness_residual: f64::NAN,
            iterations,
        }
    }

    pub fn duality_gap(&self) -> f64 {
        (self.objective - self.dual_objective).abs()
    }
}

struct Tableau {
    t: Vec<Vec<f64>>,
    obj: Vec<f64>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pr = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, a) in row.iter_mut().zip(&pr) {
                    *v -= f * a;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, a) in self.obj.iter_mut().zip(&pr) {
                *v -= f * a;
            }
            self.obj[c] = 0.0;
        }
        let k = self.cols;
        for row in self.t.iter_mut() {
            if row[k] < 0.0 && row[k] > -1e-9 {
                row[k] = 0.0;
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Reduced costs `c_j - c_B B^-1 A_j`, objective value in the last slot.
    fn price(&mut self, cost: &[f64]) {
        let mut obj: Vec<f64> = cost.to_vec();
        obj.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (v, a) in obj.iter_mut().zip(&self.t[i]) {
                    *v -= cb * a;
                }
            }
        }
        self.obj = obj;
    }

    /// Entries below this are treated as rounding noise in column `c`.
    fn pivot_tol(&self, c: usize) -> f64 {
        let big = self.t.iter().map(|r| r[c].abs()).fold(1.0, f64::max);
        PIVOT_EPS * big
    }

    /// Smallest ratio, ties to the lowest basic index.
    fn ratio_bland(&self, c: usize) -> Option<(f64, usize)> {
        let tol = self.pivot_tol(c);
        let mut best: Option<(f64, usize)> = None;
        for i in 0..self.t.len() {
            let a = self.t[i][c];
            if a > tol {
                let ratio = self.rhs(i).max(0.0) / a;
                let better = match best {
                    None => true,
                    Some((r, k)) => ratio < r - 1e-14 || (ratio <= r + 1e-14 && self.basis[i] < self.basis[k]),
                };
                if better {
                    best = Some((ratio, i));
                }
            }
        }
        best
    }

    /// Harris two-pass test: bound the step with slightly relaxed right-hand
    /// sides, then take the largest pivot among rows within that bound.
    fn ratio_harris(&self, c: usize) -> Option<(f64, usize)> {
        let tol = self.pivot_tol(c);
        let mut bound = f64::INFINITY;
        for i in 0..self.t.len() {
            let a = self.t[i][c];
            if a > tol {
                bound = bound.min((self.rhs(i).max(0.0) + HARRIS_TOL) / a);
            }
        }
        let mut best: Option<(f64, usize, f64)> = None;
        for i in 0..self.t.len() {
            let a = self.t[i][c];
            if a > tol {
                let ratio = self.rhs(i).max(0.0) / a;
                if ratio <= bound && best.is_none_or(|(_, _, pa)| a > pa) {
                    best = Some((ratio, i, a));
                }
            }
        }
        best.map(|(r, i, _)| (r, i))
    }

    /// Maximizes over the allowed columns; `false` when unbounded.
    /// Prices by the largest reduced cost and falls back to Bland's rule
    /// after a run of degenerate pivots, until the objective moves again.
    fn run(&mut self, allowed: &[bool], limit: usize) -> Result<bool> {
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations > limit {
                return Err(Error::Lp(format!("simplex exceeded {limit} pivots")));
            }
            let bland = degenerate_run >= BLAND_AFTER;
            let entering = if bland {
                (0..self.cols).find(|&j| allowed[j] && self.obj[j] > 1e-10)
            } else {
                (0..self.cols).filter(|&j| allowed[j] && self.obj[j] > 1e-10).max_by(|&a, &b| self.obj[a].total_cmp(&self.obj[b]).then(b.cmp(&a)))
            };
            let Some(c) = entering else { return Ok(true) };
            let best = if bland { self.ratio_bland(c) } else { self.ratio_harris(c) };
            match best {
                Some((ratio, r)) => {
                    if ratio * self.obj[c] <= 1e-14 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(r, c)
                }
                None => return Ok(false),
            }
        }
    }
}

/// Solves `a y = b` with Gaussian elimination and partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        if a[p][k].abs() < 1e-13 {
            return Err(Error::Singular(a[p][k]));
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut y = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * y[j]).sum();
        y[k] = (b[k] - s) / a[k][k];
    }
    Ok(y)
}

/// Two-phase dense simplex.
pub fn solve_lp(lp: &LpInstance) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.n_vars();
    let user_m = lp.rows.len();
    // shift lower bounds to zero and turn upper bounds into rows
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = lp
        .rows
        .iter()
        .map(|r| {
            let shift: f64 = r.coeffs.iter().zip(&lp.lower).map(|(a, l)| a * l).sum();
            (r.coeffs.clone(), r.sense, r.rhs - shift)
        })
        .collect();
    for j in 0..n {
        if let Some(u) = lp.upper[j] {
            let mut c = vec![0.0; n];
            c[j] = 1.0;
            rows.push((c, Sense::Le, u - lp.lower[j]));
        }
    }
    let m = rows.len();
    let mut flip = vec![1.0; m];
    for (i, r) in rows.iter_mut().enumerate() {
        if r.2 < 0.0 {
            flip[i] = -1.0;
            r.0.iter_mut().for_each(|a| *a = -*a);
            r.1 = r.1.flip();
            r.2 = -r.2;
        }
    }
    // columns: originals, one slack or surplus per inequality, one artificial per >= or = row
    let mut slack_col = vec![None; m];
    let mut art_col = vec![None; m];
    let mut cols = n;
    for (i, r) in rows.iter().enumerate() {
        if r.1 != Sense::Eq {
            slack_col[i] = Some(cols);
            cols += 1;
        }
    }
    // a column living in a single = or >= row with a positive entry can
    // start basic there, sparing that row its artificial
    let mut crash = vec![None; m];
    for j in 0..n {
        let nz: Vec<usize> = (0..m).filter(|&i| rows[i].0[j] != 0.0).collect();
        if let [i] = nz[..] {
            if rows[i].1 == Sense::Eq && rows[i].0[j] > 0.0 && crash[i].is_none() {
                crash[i] = Some(j);
            }
        }
    }
    for (i, r) in rows.iter().enumerate() {
        if r.1 != Sense::Le && crash[i].is_none() {
            art_col[i] = Some(cols);
            cols += 1;
        }
    }
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    for (i, r) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(&r.0);
        if let Some(s) = slack_col[i] {
            t[i][s] = if r.1 == Sense::Le { 1.0 } else { -1.0 };
        }
        if let Some(a) = art_col[i] {
            t[i][a] = 1.0;
            basis[i] = a;
        } else if let Some(j) = crash[i] {
            basis[i] = j;
        } else {
            basis[i] = slack_col[i].unwrap();
        }
        t[i][cols] = r.2;
    }
    let full_a: Vec<Vec<f64>> = t.iter().map(|r| r[..cols].to_vec()).collect();
    for (i, c) in crash.iter().enumerate() {
        if let Some(j) = *c {
            let p = t[i][j];
            t[i].iter_mut().for_each(|v| *v /= p);
        }
    }
    let is_art: Vec<bool> = (0..cols).map(|j| art_col.contains(&Some(j))).collect();
    let limit = 200 * (m + cols) + 10_000;
    let mut tab = Tableau { t, obj: Vec::new(), basis, cols, iterations: 0 };

    let scale = 1.0 + rows.iter().map(|r| r.2.abs()).fold(0.0, f64::max);
    if is_art.iter().any(|&a| a) {
        let cost: Vec<f64> = is_art.iter().map(|&a| if a { -1.0 } else { 0.0 }).collect();
        tab.price(&cost);
        tab.run(&vec![true; cols], limit)?;
        let infeas: f64 = (0..m).filter(|&i| is_art[tab.basis[i]]).map(|i| tab.rhs(i)).sum();
        if infeas > 1e-9 * scale {
            return Ok(LpSolution::failed(LpStatus::Infeasible, n, user_m, tab.iterations));
        }
        // drive remaining artificials out of the basis; rows where that fails are redundant
        for i in 0..m {
            if is_art[tab.basis[i]] {
                if let Some(j) = (0..cols).filter(|&j| !is_art[j]).max_by(|&a, &b| tab.t[i][a].abs().total_cmp(&tab.t[i][b].abs())) {
                    if tab.t[i][j].abs() > 1e-9 {
                        tab.pivot(i, j);
                    }
                }
            }
        }
    }
    let sign = if lp.maximize { 1.0 } else { -1.0 };
    let mut cost = vec![0.0; cols];
    for j in 0..n {
        cost[j] = sign * lp.objective[j];
    }
    tab.price(&cost);
    let allowed: Vec<bool> = is_art.iter().map(|a| !a).collect();
    if !tab.run(&allowed, limit)? {
        return Ok(LpSolution::failed(LpStatus::Unbounded, n, user_m, tab.iterations));
    }

    let mut z = vec![0.0; cols];
    for i in 0..m {
        z[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = (0..n).map(|j| z[j] + lp.lower[j]).collect();
    let objective: f64 = lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum();

    // duals from B^T y = c_B on the standardized rows
    let bt: Vec<Vec<f64>> = (0..m).map(|k| (0..m).map(|i| full_a[i][tab.basis[k]]).collect()).collect();
    let cb: Vec<f64> = tab.basis.iter().map(|&b| cost[b]).collect();
    let y_std = solve_dense(bt, cb)?;
    let y: Vec<f64> = (0..m).map(|i| sign * flip[i] * y_std[i]).collect();
    let shift_obj: f64 = lp.objective.iter().zip(&lp.lower).map(|(c, l)| c * l).sum();
    let mut dual_objective = shift_obj;
    for (i, r) in rows.iter().enumerate() {
        dual_objective += y[i] * flip[i] * r.2;
    }

    let mut primal_residual: f64 = 0.0;
    let mut slackness: f64 = 0.0;
    for (i, r) in lp.rows.iter().enumerate() {
        let ax: f64 = r.coeffs.iter().zip(&x).map(|(a, x)| a * x).sum();
        let viol = match r.sense {
            Sense::Le => (ax - r.rhs).max(0.0),
            Sense::Ge => (r.rhs - ax).max(0.0),
            Sense::Eq => (ax - r.rhs).abs(),
        };
        primal_residual = primal_residual.max(viol);
        slackness = slackness.max((y[i] * (r.rhs - ax)).abs());
    }
    for j in 0..n {
        primal_residual = primal_residual.max((lp.lower[j] - x[j]).max(0.0));
        if let Some(u) = lp.upper[j] {
            primal_residual = primal_residual.max((x[j] - u).max(0.0));
        }
        let mut red = lp.objective[j];
        for (i, r) in rows.iter().enumerate() {
            red -= y[i] * flip[i] * r.0[j];
        }
        slackness = slackness.max((red * z[j]).abs());
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        duals: y[..user_m].to_vec(),
        objective,
        dual_objective,
        primal_residual,
        slackness_residual: slackness,
        iterations: tab.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_max() {
        let mut lp = LpInstance::new(1, true);
        lp.objective[0] = 1.0;
        lp.add_row(vec![1.0], Sense::Le, 3.0, "cap");
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
        assert!(s.duality_gap() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LpInstance::new(1, true);
        lp.add_row(vec![1.0], Sense::Le, 1.0, "");
        lp.add_row(vec![1.0], Sense::Ge, 2.0, "");
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
        let mut lp = LpInstance::new(2, true);
        lp.objective = vec![1.0, 1.0];
        lp.add_row(vec![1.0, -1.0], Sense::Le, 1.0, "");
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn textbook_minimization_with_equality_and_bounds() {
        // min 2x + 3y + z, x + y + z = 4, x - y >= -1, 1 <= z <= 2, y <= 1.5
        let mut lp = LpInstance::new(3, false);
        lp.objective = vec![2.0, 3.0, 1.0];
        lp.add_row(vec![1.0, 1.0, 1.0], Sense::Eq, 4.0, "sum");
        lp.add_row(vec![1.0, -1.0, 0.0], Sense::Ge, -1.0, "diff");
        lp.lower[2] = 1.0;
        lp.upper[2] = Some(2.0);
        lp.upper[1] = Some(1.5);
        let s = solve_lp(&lp).unwrap();
        // z = 2 at its cap, then x + y = 2 with x cheaper: x = 2, y = 0
        assert!((s.objective - 6.0).abs() < 1e-10, "{s:?}");
        assert!(s.duality_gap() < 1e-9);
        assert!(s.primal_residual < 1e-12);
        assert!(s.slackness_residual < 1e-9);
    }

    #[test]
    fn degenerate_cycling_example_terminates() {
        // Beale's example cycles under the textbook largest-coefficient rule
        let mut lp = LpInstance::new(4, true);
        lp.objective = vec![0.75, -150.0, 0.02, -6.0];
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], Sense::Le, 0.0, "");
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], Sense::Le, 0.0, "");
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], Sense::Le, 1.0, "");
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 0.05).abs() < 1e-10);
        assert!(s.duality_gap() < 1e-10);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LpInstance::new(2, true);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![1.0, 1.0], Sense::Eq, 1.0, "");
        lp.add_row(vec![2.0, 2.0], Sense::Eq, 2.0, "");
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!(s.duality_gap() < 1e-10);
        assert!(lp.dump().contains("max: +1 x0 +2 x1"));
    }
}
