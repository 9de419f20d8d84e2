//! Finite information structures, garbling feasibility and the
//! blends-revelation structures of dual blend pairs.

use crate::blends::{builtin_pair, AtomMember, Blend, PairName};
use crate::dist::{Distribution, Objective};
use crate::error::{Error, Result};
use crate::mechanisms::{payoff, MechanismKind};
use crate::pilp::{DiscreteDist, ValueGrid};
use crate::quad::{self, QuadOptions};
use crate::simplex::{solve_lp, LpInstance, LpStatus, Sense};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

pub const FEASIBLE_TOL: f64 = 1e-8;
pub const AMBIGUOUS_TOL: f64 = 1e-5;

/// Joint distribution over states and signals; `joint[state][signal]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InformationStructure {
    pub states: Vec<String>,
    pub signals: Vec<String>,
    pub joint: Vec<Vec<f64>>,
}

impl InformationStructure {
    pub fn new(states: Vec<String>, signals: Vec<String>, joint: Vec<Vec<f64>>) -> Result<InformationStructure> {
        if joint.len() != states.len() || joint.iter().any(|r| r.len() != signals.len()) {
            return Err(Error::InvalidParameter("joint array does not match the labels".into()));
        }
        if joint.iter().flatten().any(|p| !(*p >= 0.0)) {
            return Err(Error::InvalidParameter("negative joint mass".into()));
        }
        let total: f64 = joint.iter().flatten().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("joint mass sums to {total}")));
        }
        Ok(InformationStructure { states, signals, joint })
    }

    /// Signal equals state.
    pub fn fully_informative(states: Vec<String>, prior: &[f64]) -> Result<InformationStructure> {
        let n = prior.len();
        let joint = (0..n).map(|i| (0..n).map(|j| if i == j { prior[i] } else { 0.0 }).collect()).collect();
        InformationStructure::new(states.clone(), states, joint)
    }

    /// A single uninformative signal.
    pub fn uninformative(states: Vec<String>, prior: &[f64]) -> Result<InformationStructure> {
        InformationStructure::new(states, vec!["_".into()], prior.iter().map(|p| vec![*p]).collect())
    }

    pub fn prior(&self) -> Vec<f64> {
        self.joint.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn signal_marginal(&self) -> Vec<f64> {
        (0..self.signals.len()).map(|s| self.joint.iter().map(|r| r[s]).sum()).collect()
    }

    /// Posterior over states given signal `s`.
    pub fn posterior(&self, s: usize) -> Vec<f64> {
        let m: f64 = self.joint.iter().map(|r| r[s]).sum();
        self.joint.iter().map(|r| if m > 0.0 { r[s] / m } else { 0.0 }).collect()
    }

    /// Reads `state,signal,mass` rows; labels keep first-seen order.
    pub fn from_csv<R: Read>(reader: R) -> Result<InformationStructure> {
        #[derive(Deserialize)]
        struct Rec {
            state: String,
            signal: String,
            mass: f64,
        }
        let mut states: Vec<String> = Vec::new();
        let mut signals: Vec<String> = Vec::new();
        let mut entries = Vec::new();
        for rec in csv::Reader::from_reader(reader).deserialize() {
            let r: Rec = rec?;
            let i = states.iter().position(|s| *s == r.state).unwrap_or_else(|| {
                states.push(r.state.clone());
                states.len() - 1
            });
            let j = signals.iter().position(|s| *s == r.signal).unwrap_or_else(|| {
                signals.push(r.signal.clone());
                signals.len() - 1
            });
            entries.push((i, j, r.mass));
        }
        let mut joint = vec![vec![0.0; signals.len()]; states.len()];
        for (i, j, m) in entries {
            joint[i][j] += m;
        }
        InformationStructure::new(states, signals, joint)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["state", "signal", "mass"])?;
        for (i, st) in self.states.iter().enumerate() {
            for (j, sg) in self.signals.iter().enumerate() {
                if self.joint[i][j] != 0.0 {
                    w.write_record([st.as_str(), sg.as_str(), &format!("{:e}", self.joint[i][j])])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Value to a receiver choosing among `actions` after each signal;
    /// `utility[a][state]`.
    pub fn decision_value(&self, utility: &[Vec<f64>]) -> f64 {
        (0..self.signals.len())
            .map(|s| utility.iter().map(|u| u.iter().zip(&self.joint).map(|(u, r)| u * r[s]).sum::<f64>()).fold(f64::NEG_INFINITY, f64::max))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GarbleStatus {
    Feasible,
    Ambiguous,
    Infeasible,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GarbleResult {
    pub status: GarbleStatus,
    pub feasible: bool,
    /// Row-stochastic `signals1 × signals2` array.
    pub eta: Option<Vec<Vec<f64>>>,
    /// Least total absolute mismatch over stochastic `eta`.
    pub residual: f64,
    /// Largest entrywise mismatch at that optimum.
    pub max_residual: f64,
}

fn same_prior(i1: &InformationStructure, i2: &InformationStructure) -> Result<()> {
    if i1.states.len() != i2.states.len() {
        return Err(Error::InvalidParameter("structures have different state sets".into()));
    }
    let err = i1.prior().iter().zip(i2.prior()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if err > 1e-9 {
        return Err(Error::InvalidParameter(format!("priors differ by {err:.3e}")));
    }
    Ok(())
}

/// Is `i2` a garbling of `i1`? Minimizes the L1 mismatch of
/// `I2(θ, t) = Σ_s η(s, t) I1(θ, s)` over row-stochastic `η`.
pub fn garble_check(i1: &InformationStructure, i2: &InformationStructure) -> Result<GarbleResult> {
    same_prior(i1, i2)?;
    let (ns, s1, s2) = (i1.states.len(), i1.signals.len(), i2.signals.len());
    let eta = |s: usize, t: usize| s * s2 + t;
    let ne = s1 * s2;
    let slack = |th: usize, t: usize| ne + 2 * (th * s2 + t);
    let mut lp = LpInstance::new(ne + 2 * ns * s2, false);
    for j in ne..lp.n_vars() {
        lp.objective[j] = 1.0;
    }
    for th in 0..ns {
        for t in 0..s2 {
            let mut terms: Vec<(usize, f64)> = (0..s1).filter(|&s| i1.joint[th][s] != 0.0).map(|s| (eta(s, t), i1.joint[th][s])).collect();
            terms.push((slack(th, t), 1.0));
            terms.push((slack(th, t) + 1, -1.0));
            lp.add_sparse(&terms, Sense::Eq, i2.joint[th][t], format!("match_{th}_{t}"));
        }
    }
    for s in 0..s1 {
        let terms: Vec<(usize, f64)> = (0..s2).map(|t| (eta(s, t), 1.0)).collect();
        lp.add_sparse(&terms, Sense::Eq, 1.0, format!("stochastic_{s}"));
    }
    let sol = solve_lp(&lp)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Lp(format!("garbling program status {:?}", sol.status)));
    }
    let residual = sol.objective.max(0.0);
    let max_residual = (0..ns * s2).map(|k| (sol.x[ne + 2 * k] - sol.x[ne + 2 * k + 1]).abs()).fold(0.0, f64::max);
    let status = if residual <= FEASIBLE_TOL {
        GarbleStatus::Feasible
    } else if residual <= AMBIGUOUS_TOL {
        GarbleStatus::Ambiguous
    } else {
        GarbleStatus::Infeasible
    };
    let e: Vec<Vec<f64>> = (0..s1).map(|s| (0..s2).map(|t| sol.x[eta(s, t)]).collect()).collect();
    Ok(GarbleResult { status, feasible: status == GarbleStatus::Feasible, eta: (status == GarbleStatus::Feasible).then_some(e), residual, max_residual })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlackwellOrder {
    FirstDominates,
    SecondDominates,
    Equivalent,
    Incomparable,
    /// A garbling residual landed in the ambiguous band.
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlackwellReport {
    pub order: BlackwellOrder,
    /// `second` as a garbling of `first`.
    pub forward: GarbleResult,
    /// `first` as a garbling of `second`.
    pub backward: GarbleResult,
}

pub fn blackwell_order(i1: &InformationStructure, i2: &InformationStructure) -> Result<BlackwellReport> {
    let forward = garble_check(i1, i2)?;
    let backward = garble_check(i2, i1)?;
    use GarbleStatus::*;
    let order = match (forward.status, backward.status) {
        (Ambiguous, _) | (_, Ambiguous) => BlackwellOrder::Undetermined,
        (Feasible, Feasible) => BlackwellOrder::Equivalent,
        (Feasible, Infeasible) => BlackwellOrder::FirstDominates,
        (Infeasible, Feasible) => BlackwellOrder::SecondDominates,
        (Infeasible, Infeasible) => BlackwellOrder::Incomparable,
    };
    Ok(BlackwellReport { order, forward, backward })
}

fn profile_label(grid: &ValueGrid, p: usize) -> String {
    grid.profile(p).iter().map(|j| format!("v{j}")).collect::<Vec<_>>().join("|")
}

/// Blends revelation: the signal names the member distribution, the state
/// is the value profile.
pub fn blend_posteriors(grid: &ValueGrid, members: &[DiscreteDist], weights: &[f64]) -> Result<InformationStructure> {
    if members.len() != weights.len() || members.is_empty() {
        return Err(Error::InvalidParameter("one weight per member".into()));
    }
    let w: f64 = weights.iter().sum();
    if !(w > 0.0) {
        return Err(Error::InvalidParameter("blend has zero weight".into()));
    }
    let states = (0..grid.profiles()).map(|p| profile_label(grid, p)).collect();
    let signals = (0..members.len()).map(|i| format!("F{i}")).collect();
    let joint: Vec<Vec<f64>> = (0..grid.profiles()).map(|p| members.iter().zip(weights).map(|(d, wf)| wf * d.profile_prob(grid, p) / w).collect()).collect();
    // renormalize away summation rounding
    let total: f64 = joint.iter().flatten().sum();
    InformationStructure::new(states, signals, joint.into_iter().map(|r| r.into_iter().map(|x| x / total).collect()).collect())
}

/// Largest deviation between each signal's posterior and the product of its member.
pub fn product_posterior_error(grid: &ValueGrid, members: &[DiscreteDist], s: &InformationStructure) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, d) in members.iter().enumerate() {
        let post = s.posterior(k);
        for (p, q) in post.iter().enumerate() {
            worst = worst.max((q - d.profile_prob(grid, p)).abs());
        }
    }
    worst
}

/// Value bins: half-open intervals plus atom singletons.
#[derive(Debug, Clone, Serialize)]
pub struct ValueBins {
    pub edges: Vec<f64>,
    /// Optional top atom bin `{top}`.
    pub top_atom: Option<f64>,
}

impl ValueBins {
    pub fn len(&self) -> usize {
        self.edges.len() - 1 + usize::from(self.top_atom.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lower edge of each bin (the atom for the atom bin).
    pub fn representatives(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.edges[..self.edges.len() - 1].to_vec();
        r.extend(self.top_atom);
        r
    }

    pub fn probabilities(&self, d: &Distribution) -> Vec<f64> {
        let mut p: Vec<f64> = self.edges.windows(2).map(|w| (d.cdf_left(w[1]) - d.cdf_left(w[0])).max(0.0)).collect();
        if let Some(a) = self.top_atom {
            p.push(d.atom_mass(a));
        }
        p
    }
}

fn member_at(blend: &Blend, a: &AtomMember) -> Result<Distribution> {
    match a {
        AtomMember::Dist(d) => Ok(d.clone()),
        AtomMember::FamilyAt(z) => blend.family.member(*z),
    }
}

/// Marginal value distribution of a blend, unnormalized.
fn marginal_cdf_left(blend: &Blend, x: f64) -> Result<f64> {
    let (z0, z1) = blend.z_range;
    let cont = quad::integrate_breaks(
        |z| blend.family.member(z).map(|d| blend.weight_at(z) * d.cdf_left(x)).unwrap_or(f64::NAN),
        z0,
        z1,
        &[x],
        QuadOptions::with_rel(1e-11),
    )?;
    let mut s = cont;
    for a in &blend.atoms {
        s += a.weight * member_at(blend, &a.member)?.cdf_left(x);
    }
    Ok(s)
}

/// Discretized pair: both sides as cell-integrated structures on a shared value grid.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizedPair {
    pub bins: ValueBins,
    pub grid: ValueGrid,
    pub first: InformationStructure,
    pub second: InformationStructure,
    /// Representative members and weights per side, for product-form checks.
    pub first_members: (Vec<DiscreteDist>, Vec<f64>),
    pub second_members: (Vec<DiscreteDist>, Vec<f64>),
}

fn cell_edges(z0: f64, z1: f64, cells: usize) -> Vec<f64> {
    (0..=cells).map(|i| z0 * (z1 / z0).powf(i as f64 / cells as f64)).collect()
}

fn side_structure(blend: &Blend, bins: &ValueBins, grid: &ValueGrid, cells: usize) -> Result<(InformationStructure, (Vec<DiscreteDist>, Vec<f64>))> {
    let nb = bins.len();
    let (z0, z1) = blend.z_range;
    let zs = cell_edges(z0, z1, cells);
    let mut signals = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut reps = Vec::new();
    let mut rep_w = Vec::new();
    let opts = QuadOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 4000 };
    for c in 0..cells {
        let (a, b) = (zs[c], zs[c + 1]);
        let mut col = vec![0.0; nb * nb];
        for j in 0..nb {
            for k in j..nb {
                let v = quad::integrate_breaks(
                    |z| {
                        blend
                            .family
                            .member(z)
                            .map(|d| {
                                let p = bins.probabilities(&d);
                                blend.weight_at(z) * p[j] * p[k]
                            })
                            .unwrap_or(f64::NAN)
                    },
                    a,
                    b,
                    &bins.edges,
                    opts,
                )?;
                col[j * nb + k] = v;
                col[k * nb + j] = v;
            }
        }
        signals.push(format!("z[{a:.4},{b:.4})"));
        columns.push(col);
        let w = quad::integrate(|z| blend.weight_at(z), a, b, opts)?;
        let mid = blend.family.member((a * b).sqrt())?;
        reps.push(DiscreteDist::new(normalized(bins.probabilities(&mid)))?);
        rep_w.push(w);
    }
    for (i, atom) in blend.atoms.iter().enumerate() {
        let d = member_at(blend, &atom.member)?;
        let p = bins.probabilities(&d);
        let col = (0..nb * nb).map(|q| atom.weight * p[q / nb] * p[q % nb]).collect();
        signals.push(format!("atom{i}"));
        columns.push(col);
        reps.push(DiscreteDist::new(normalized(p))?);
        rep_w.push(atom.weight);
    }
    let total: f64 = columns.iter().flatten().sum();
    let joint = (0..nb * nb).map(|p| columns.iter().map(|c| c[p] / total).collect()).collect();
    let states = (0..grid.profiles()).map(|p| profile_label(grid, p)).collect();
    Ok((InformationStructure::new(states, signals, joint)?, (reps, rep_w)))
}

fn normalized(mut p: Vec<f64>) -> Vec<f64> {
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Discretizes the finite Quadratics-vs-Uniforms pair on `n_values` value
/// bins (quantile-stratified continuous bins plus the atom at `h`) and
/// `cells` geometric cells of the parameter range.
pub fn discretize_finite_pair(h: f64, n_values: usize, cells: usize) -> Result<DiscretizedPair> {
    if n_values < 2 || cells == 0 {
        return Err(Error::InvalidParameter("need at least two values and one cell".into()));
    }
    let (quad, unif) = builtin_pair(PairName::QuadUnifFinite(h))?;
    let nc = n_values - 1;
    let lo = marginal_cdf_left(&quad, 1.0)?;
    let hi = marginal_cdf_left(&quad, h)?;
    let mut edges = vec![1.0];
    for k in 1..nc {
        let target = lo + (hi - lo) * k as f64 / nc as f64;
        let x = quad::bisect(|x| marginal_cdf_left(&quad, x).unwrap_or(f64::NAN) - target, 1.0, h, 1e-10)?;
        edges.push(x);
    }
    edges.push(h);
    let bins = ValueBins { edges, top_atom: Some(h) };
    let grid = ValueGrid::new(bins.representatives(), 2)?;
    let (first, first_members) = side_structure(&quad, &bins, &grid, cells)?;
    let (second, second_members) = side_structure(&unif, &bins, &grid, cells)?;
    Ok(DiscretizedPair { bins, grid, first, second, first_members, second_members })
}

/// Receiver action on the discretized value grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "price", rename_all = "snake_case")]
pub enum Action {
    Lottery,
    Spa,
    Posted(f64),
    SpaReserve(f64),
    /// Two pools split at the threshold; a lottery inside each, the upper pool first.
    Pooled(f64),
}

impl Action {
    pub fn payoff(&self, obj: Objective, x: f64, y: f64) -> Result<f64> {
        let kind = match *self {
            Action::Lottery => MechanismKind::Lottery,
            Action::Spa => MechanismKind::Spa,
            Action::Posted(p) => MechanismKind::Posted(p),
            Action::SpaReserve(p) => MechanismKind::SpaReserve(p),
            Action::Pooled(t) => {
                let (hi, lo) = if x >= y { (x, y) } else { (y, x) };
                // threshold payments with zero utility at value zero
                let (rev, wel) = if lo >= t {
                    (t, 0.5 * (hi + lo))
                } else if hi >= t {
                    (0.5 * t, hi)
                } else {
                    (0.0, 0.5 * (hi + lo))
                };
                return Ok(match obj {
                    Objective::Revenue => rev,
                    Objective::Welfare => wel,
                    Objective::ResidualSurplus => wel - rev,
                });
            }
        };
        payoff(&kind, obj, x, y)
    }
}

/// Menu: lottery, SPA, and every grid price as posted, reserve or pooling threshold.
pub fn action_menu(grid: &ValueGrid) -> Vec<Action> {
    let mut a = vec![Action::Lottery, Action::Spa];
    for &p in &grid.values {
        a.push(Action::Posted(p));
        a.push(Action::SpaReserve(p));
        a.push(Action::Pooled(p));
    }
    a
}

fn utilities(grid: &ValueGrid, menu: &[Action], obj: Objective) -> Result<Vec<Vec<f64>>> {
    menu.iter()
        .map(|a| {
            (0..grid.profiles())
                .map(|p| {
                    let v = grid.profile(p);
                    a.payoff(obj, grid.values[v[0]], grid.values[v[1]])
                })
                .collect()
        })
        .collect()
}

/// Opposite preferences: revenue favors the second structure, residual surplus the first.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub revenue_first: f64,
    pub revenue_second: f64,
    pub residual_first: f64,
    pub residual_second: f64,
    pub revenue_margin: f64,
    pub residual_margin: f64,
    pub holds: bool,
}

pub fn preference_witness(grid: &ValueGrid, first: &InformationStructure, second: &InformationStructure) -> Result<Witness> {
    let menu = action_menu(grid);
    let ur = utilities(grid, &menu, Objective::Revenue)?;
    let us = utilities(grid, &menu, Objective::ResidualSurplus)?;
    let (rf, rs) = (first.decision_value(&ur), second.decision_value(&ur));
    let (sf, ss) = (first.decision_value(&us), second.decision_value(&us));
    let (rm, sm) = (rs - rf, sf - ss);
    Ok(Witness { revenue_first: rf, revenue_second: rs, residual_first: sf, residual_second: ss, revenue_margin: rm, residual_margin: sm, holds: rm > 1e-6 && sm > 1e-6 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn reflexive_and_extremes() {
        let prior = [0.2, 0.3, 0.5];
        let i = InformationStructure::new(labels(3), labels(2), vec![vec![0.1, 0.1], vec![0.3, 0.0], vec![0.1, 0.4]]).unwrap();
        let r = garble_check(&i, &i).unwrap();
        assert!(r.feasible);
        let full = InformationStructure::fully_informative(labels(3), &prior).unwrap();
        let none = InformationStructure::uninformative(labels(3), &prior).unwrap();
        assert_eq!(blackwell_order(&full, &none).unwrap().order, BlackwellOrder::FirstDominates);
        assert_eq!(blackwell_order(&i, &i).unwrap().order, BlackwellOrder::Equivalent);
        assert!(garble_check(&full, &i).unwrap().feasible);
        assert!(garble_check(&i, &full).unwrap().status == GarbleStatus::Infeasible);
    }

    #[test]
    fn identity_garbling_is_stochastic() {
        let i = InformationStructure::new(labels(2), labels(2), vec![vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let r = garble_check(&i, &i).unwrap();
        let eta = r.eta.unwrap();
        for row in &eta {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn prior_mismatch_rejected() {
        let a = InformationStructure::uninformative(labels(2), &[0.5, 0.5]).unwrap();
        let b = InformationStructure::uninformative(labels(2), &[0.4, 0.6]).unwrap();
        assert!(garble_check(&a, &b).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let i = InformationStructure::new(labels(2), labels(2), vec![vec![0.25, 0.25], vec![0.5, 0.0]]).unwrap();
        let mut buf = Vec::new();
        i.to_csv(&mut buf).unwrap();
        let j = InformationStructure::from_csv(buf.as_slice()).unwrap();
        assert_eq!(j.joint[0], vec![0.25, 0.25]);
        assert_eq!(j.joint[1][0], 0.5);
    }

    #[test]
    fn posterior_examples() {
        let grid = ValueGrid::new(vec![1.0, 2.0], 2).unwrap();
        let d = DiscreteDist::new(vec![0.3, 0.7]).unwrap();
        let s = blend_posteriors(&grid, &[d.clone()], &[2.0]).unwrap();
        assert_eq!(s.signals.len(), 1);
        assert!(product_posterior_error(&grid, &[d], &s) < 1e-15);
        let pm = [DiscreteDist::point_mass(&grid, 0).unwrap(), DiscreteDist::point_mass(&grid, 1).unwrap()];
        let s = blend_posteriors(&grid, &pm, &[1.0, 3.0]).unwrap();
        for p in 0..4 {
            assert!(s.joint[p].iter().filter(|m| **m > 0.0).count() <= 1);
        }
        assert!(blend_posteriors(&grid, &pm, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn pooled_payments() {
        let a = Action::Pooled(2.0);
        assert_eq!(a.payoff(Objective::Revenue, 3.0, 1.0).unwrap(), 1.0);
        assert_eq!(a.payoff(Objective::Revenue, 3.0, 2.5).unwrap(), 2.0);
        assert_eq!(a.payoff(Objective::ResidualSurplus, 1.0, 1.5).unwrap(), 1.25);
    }

    #[test]
    fn discretized_finite_pair_is_incomparable() {
        let d = discretize_finite_pair(20.0, 6, 12).unwrap();
        let pe = d.first.prior().iter().zip(d.second.prior()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(pe < 1e-9);
        let r = blackwell_order(&d.first, &d.second).unwrap();
        assert_eq!(r.order, BlackwellOrder::Incomparable);
        assert!(r.forward.residual > 1e-4 && r.backward.residual > 1e-4);
        let w = preference_witness(&d.grid, &d.first, &d.second).unwrap();
        assert!(w.holds, "{w:?}");
        for (m, wts) in [&d.first_members, &d.second_members] {
            let s = blend_posteriors(&d.grid, m, wts).unwrap();
            assert!(product_posterior_error(&d.grid, m, &s) < 1e-10);
        }
    }
}
