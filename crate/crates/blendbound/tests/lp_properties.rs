//! LP layer invariants: the simplex against vertex enumeration, strong
//! duality, monotone allocations and redundant optimality rows.
use blendbound::pilp::{alpha_pi, best_ceiling_weights, discrete_opt, dual_certificate, random_instance, solve_pi, DiscreteDist, PiOptions, ValueGrid};
use blendbound::simplex::{solve_lp, LpInstance, LpStatus, Sense};
use blendbound::Objective;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Solves a small square system; `None` when it is (nearly) singular.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in 0..n {
            if i != k {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

/// Best objective over the vertices of `{x : rows, 0 <= x <= cap}`.
fn brute_force(lp: &LpInstance, cap: f64) -> f64 {
    let n = lp.n_vars();
    let mut faces: Vec<(Vec<f64>, f64)> = lp.rows.iter().map(|r| (r.coeffs.clone(), r.rhs)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        faces.push((e.clone(), 0.0));
        faces.push((e, cap));
    }
    let sign = if lp.maximize { 1.0 } else { -1.0 };
    let mut best = f64::NEG_INFINITY;
    for c in combinations(faces.len(), n) {
        let a = c.iter().map(|&i| faces[i].0.clone()).collect();
        let b = c.iter().map(|&i| faces[i].1).collect();
        let Some(x) = gauss(a, b) else { continue };
        let feasible = x.iter().all(|&v| v >= -1e-9 && v <= cap + 1e-9)
            && lp.rows.iter().all(|r| {
                let ax: f64 = r.coeffs.iter().zip(&x).map(|(a, x)| a * x).sum();
                match r.sense {
                    Sense::Le => ax <= r.rhs + 1e-9,
                    Sense::Ge => ax >= r.rhs - 1e-9,
                    Sense::Eq => (ax - r.rhs).abs() <= 1e-9,
                }
            });
        if feasible {
            best = best.max(sign * lp.objective.iter().zip(&x).map(|(c, x)| c * x).sum::<f64>());
        }
    }
    sign * best
}

fn small_lp() -> impl Strategy<Value = (LpInstance, f64)> {
    (2usize..=3, 1usize..=4, any::<bool>(), 0.5..4.0f64).prop_flat_map(|(n, m, maximize, cap)| {
        (
            prop::collection::vec(-3.0..3.0f64, n),
            prop::collection::vec((prop::collection::vec(-2.0..2.0f64, n), 0.0..3.0f64, any::<bool>()), m),
        )
            .prop_map(move |(c, rows)| {
                let mut lp = LpInstance::new(n, maximize);
                lp.objective = c;
                for (a, b, ge) in rows {
                    // x = 0 stays feasible in both senses
                    if ge {
                        lp.add_row(a, Sense::Ge, -b, "");
                    } else {
                        lp.add_row(a, Sense::Le, b, "");
                    }
                }
                for j in 0..n {
                    lp.upper[j] = Some(cap);
                }
                (lp, cap)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simplex_matches_vertex_enumeration((lp, cap) in small_lp()) {
        let s = solve_lp(&lp).unwrap();
        prop_assert_eq!(s.status, LpStatus::Optimal);
        let want = brute_force(&lp, cap);
        prop_assert!((s.objective - want).abs() <= 1e-8 * want.abs().max(1.0), "{} vs {want}\n{}", s.objective, lp.dump());
        prop_assert!(s.duality_gap() <= 1e-8, "gap {}", s.duality_gap());
        prop_assert!(s.primal_residual <= 1e-9);
        prop_assert!(s.slackness_residual <= 1e-8);
    }

    #[test]
    fn contradictory_bounds_are_infeasible((mut lp, cap) in small_lp()) {
        let n = lp.n_vars();
        lp.add_sparse(&[(n - 1, 1.0)], Sense::Ge, cap + 1.0, "beyond the cap");
        prop_assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn single_agent_revenue_is_the_best_posted_price(raw in prop::collection::vec(0.01..1.0f64, 2..6), gaps in prop::collection::vec(0.1..3.0f64, 5)) {
        let m = raw.len();
        let mut v = 1.0;
        let values: Vec<f64> = (0..m).map(|i| { let x = v; v += gaps[i]; x }).collect();
        let s: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|x| x / s).collect();
        let grid = ValueGrid::new(values.clone(), 1).unwrap();
        let d = DiscreteDist::new(probs.clone()).unwrap();
        let best = (0..m).map(|j| values[j] * probs[j..].iter().sum::<f64>()).fold(0.0, f64::max);
        let got = discrete_opt(&grid, &d, Objective::Revenue).unwrap();
        prop_assert!((got - best).abs() <= 1e-9 * best, "{got} vs {best}");
        let mean: f64 = values.iter().zip(&probs).map(|(v, p)| v * p).sum();
        let rs = discrete_opt(&grid, &d, Objective::ResidualSurplus).unwrap();
        prop_assert!((rs - mean).abs() <= 1e-9 * mean, "{rs} vs {mean}");
    }
}

#[test]
fn randomized_instances_satisfy_the_lp_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..20 {
        let (grid, dists, omega) = random_instance(&mut rng);
        for obj in [Objective::Revenue, Objective::ResidualSurplus] {
            let plain = solve_pi(&grid, &dists, obj, PiOptions::default()).unwrap();
            let capped = solve_pi(&grid, &dists, obj, PiOptions { non_super_optimal: true }).unwrap();
            for s in [&plain, &capped] {
                assert!(s.lp.duality_gap() <= 1e-7, "instance {i} {obj}: gap {}", s.lp.duality_gap());
                assert!(s.alpha >= 1.0 - 1e-9, "instance {i} {obj}: alpha {}", s.alpha);
                for (p, o) in s.performance.iter().zip(&s.opts) {
                    assert!(*p >= o / s.alpha - 1e-9, "instance {i} {obj}: guarantee broken");
                }
            }
            assert!((plain.alpha - capped.alpha).abs() <= 1e-9, "instance {i} {obj}: {} vs {}", plain.alpha, capped.alpha);
            // monotone in the agent's own value, for every value of the other agent
            for s in [&plain, &capped] {
                let x = &s.allocation;
                if grid.n_agents == 1 {
                    assert!(x[0].windows(2).all(|w| w[0] <= w[1] + 1e-9), "instance {i}: {x:?}");
                } else {
                    for k in 0..grid.len() {
                        assert!((0..grid.len() - 1).all(|j| x[j][k] <= x[j + 1][k] + 1e-9), "instance {i}: {x:?}");
                    }
                }
            }
            let (o, m) = best_ceiling_weights(&grid, &dists, &omega, obj).unwrap();
            assert!(m.duality_gap() <= 1e-7);
            let cert = dual_certificate(&grid, &dists, &omega, &o, obj).unwrap();
            assert!(cert.max_density_err <= 1e-9, "instance {i}: density mismatch {}", cert.max_density_err);
            assert!(cert.ratio <= plain.alpha + 1e-6, "instance {i} {obj}: {} > {}", cert.ratio, plain.alpha);
        }
    }
}

#[test]
fn one_distribution_is_approximated_exactly() {
    // the program can tailor itself to a lone prior, so alpha is 1 exactly
    // when discrete_opt is the true optimum over monotone allocations
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let (grid, dists, _) = random_instance(&mut rng);
        for d in &dists {
            for obj in [Objective::Revenue, Objective::ResidualSurplus] {
                let a = alpha_pi(&grid, std::slice::from_ref(d), obj).unwrap();
                assert!((a - 1.0).abs() <= 1e-9, "{obj} on {:?} with {:?}: {a}", grid.values, d.probs);
            }
        }
    }
}

#[test]
fn two_point_alpha() {
    let grid = ValueGrid::new(vec![1.0, 2.0], 1).unwrap();
    let dists = [DiscreteDist::point_mass(&grid, 0).unwrap(), DiscreteDist::point_mass(&grid, 1).unwrap()];
    assert!((alpha_pi(&grid, &dists, Objective::Revenue).unwrap() - 1.5).abs() <= 1e-9);
}
