mod common;

use common::*;
use mot_core::auxiliary::{build_grid, dual_diagnostics, solve_primal};
use mot_core::closed_forms::{
    butterfly_closed_form, butterfly_payoff, max_slope_tangent, risk_reversal_closed_form, risk_reversal_payoff,
};
use mot_core::convexfn::{
    concave_diff_integral, disintegration_integral, generalized_pair_integral, subderivative, DualPair,
    PiecewiseLinearFn,
};
use mot_core::hedging::{
    dynamic_part, in_omega, ito_integral, pathwise_integral, time_change_value, verify_superhedge, SteppedPath,
};
use mot_core::lp::{self, LinearProgram, Relation, Sense};
use mot_core::measures::{convex_order_leq, irreducible_components, DiscreteMeasure, Domain};
use mot_core::par::Execution;
use mot_core::simulation::{average_along, build_two_step, embed_paths, martingale_transport, price, AveragingProcess};
use mot_core::{Rational, Scalar};
use proptest::prelude::*;
use rand::Rng;

fn zero() -> Rational {
    q(0, 1)
}

fn lattice_measure() -> impl Strategy<Value = DiscreteMeasure<Rational>> {
    prop::collection::vec((-40i64..40, 1i64..10), 1..8).prop_map(|atoms| {
        let total: i64 = atoms.iter().map(|a| a.1).sum();
        DiscreteMeasure::from_atoms(atoms.into_iter().map(|(k, w)| (eighth(k), q(w, total)))).unwrap()
    })
}

/// Largest value of `g` over the breakpoints and offsets of the given
/// functions lying in the closed domain, and its endpoints.
fn max_on_domain(g: impl Fn(&Rational) -> Rational, fns: &[&PiecewiseLinearFn<Rational>], dom: &Domain<Rational>) -> Rational {
    let mut pts = vec![dom.left.clone(), dom.right.clone()];
    for f in fns {
        pts.extend(f.breakpoints().iter().cloned());
        pts.extend(f.offsets().iter().map(|(p, _)| p.clone()));
    }
    pts.into_iter().filter(|x| dom.contains(x)).map(|x| g(&x)).max().unwrap()
}

/// `(phi, psi)` with `phi + psi >= f` on `J`: a random pair with `psi`
/// lifted by the largest shortfall.
fn dominating_pair<R: Rng>(rng: &mut R, inst: &Instance, f: &PiecewiseLinearFn<Rational>) -> DualPair<Rational> {
    let dom = domain(inst);
    let (phi, psi) = (random_concave(rng, inst), random_convex(rng, inst));
    let lift = max_on_domain(|x| f.eval(x) - phi.eval(x) - psi.eval(x), &[f, &phi, &psi], &dom);
    DualPair::new(phi, psi.add_affine(lift, zero()), &dom, &zero()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn potential_tails_are_affine(m in lattice_measure(), d in 1i64..40) {
        let (lo, hi) = (m.min_support().clone(), m.max_support().clone());
        let mean = m.barycenter();
        let left = lo - eighth(d);
        let right = hi + eighth(d);
        prop_assert_eq!(m.potential(&left), mean.clone() - left.clone());
        prop_assert_eq!(m.potential(&right), right.clone() - mean);
    }

    #[test]
    fn convex_order_is_transitive(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 6);
        let rho = spread(&mut r, &inst.nu, 5);
        prop_assert!(convex_order_leq(&inst.mu, &inst.nu));
        prop_assert!(convex_order_leq(&inst.nu, &rho));
        prop_assert!(convex_order_leq(&inst.mu, &rho));
    }

    #[test]
    fn components_cover_the_initial_law(m in lattice_measure(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let target = spread(&mut r, &m, 3);
        let dec = irreducible_components(&m, &target).unwrap();
        let mut mass = dec.static_residue.as_ref().map(|s| s.mass()).unwrap_or_else(zero);
        for c in &dec.components {
            prop_assert!(convex_order_leq(&c.mu, &c.nu));
            prop_assert!(c.mu.support().iter().all(|x| c.domain.in_interior(x)));
            mass += c.mu.mass();
        }
        prop_assert_eq!(mass, q(1, 1));
        for (x, w) in m.atoms() {
            let inside: Rational = dec.components.iter().map(|c| c.mu.atom_at(x)).sum();
            let fixed = dec.static_residue.as_ref().map(|s| s.atom_at(x)).unwrap_or_else(zero);
            prop_assert_eq!(inside + fixed, w.clone());
        }
    }

    #[test]
    fn concave_difference_matches_disintegration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 4);
        let chi = random_concave(&mut r, &inst);
        let coupling = martingale_transport(&inst.mu, &inst.nu).unwrap();
        let lhs = concave_diff_integral(&inst.mu, &inst.nu, &chi, &domain(&inst)).unwrap();
        prop_assert_eq!(lhs.clone(), disintegration_integral(&coupling, &chi).unwrap());
        // concave test functions see mu above nu
        prop_assert!(lhs >= zero());
    }

    #[test]
    fn moderator_does_not_matter(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 5);
        let dom = domain(&inst);
        let pair = DualPair::new(random_concave(&mut r, &inst), random_convex(&mut r, &inst), &dom, &zero()).unwrap();
        let (c1, c2) = (random_concave(&mut r, &inst), random_concave(&mut r, &inst));
        let g1 = generalized_pair_integral(&inst.mu, &inst.nu, &pair, &c1, &dom).unwrap();
        let g2 = generalized_pair_integral(&inst.mu, &inst.nu, &pair, &c2, &dom).unwrap();
        prop_assert_eq!(g1.clone(), g2);
        // with finite measures the integral is just mu(phi) + nu(psi)
        prop_assert_eq!(g1, pair.cost(&inst.mu, &inst.nu));
    }

    #[test]
    fn pair_integral_shifts_with_affine_terms(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 5);
        let dom = domain(&inst);
        let pair = DualPair::new(random_concave(&mut r, &inst), random_convex(&mut r, &inst), &dom, &zero()).unwrap();
        let chi = random_concave(&mut r, &inst);
        let (a, b, c, d) = (small(&mut r), small(&mut r), small(&mut r), small(&mut r));
        let moved = DualPair { phi: pair.phi.add_affine(a.clone(), b.clone()), psi: pair.psi.add_affine(c.clone(), d.clone()) };
        let base = generalized_pair_integral(&inst.mu, &inst.nu, &pair, &chi, &dom).unwrap();
        let after = generalized_pair_integral(&inst.mu, &inst.nu, &moved, &chi, &dom).unwrap();
        let expected = base + inst.mu.integrate(|x| a.clone() + b.clone() * x) + inst.nu.integrate(|x| c.clone() + d.clone() * x);
        prop_assert_eq!(after, expected);
    }

    #[test]
    fn subderivative_is_a_supporting_line(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let dom = domain(&inst);
        let psi = random_convex(&mut r, &inst);
        let x = interior_point(&mut r, &inst);
        let slope = subderivative(&psi, &x, &dom).unwrap();
        for k in -32..=32 {
            let y = eighth(k);
            if dom.contains(&y) {
                prop_assert!(psi.eval(&y) >= psi.eval(&x) + slope.clone() * (y.clone() - x.clone()));
            }
        }
        prop_assert!(subderivative(&psi, &inst.left, &dom).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    /// Random programs with nonnegative `<=` rows and a cap on the total,
    /// so bounded, all passing through a random point, so feasible.
    #[test]
    fn lp_strong_duality_and_complementary_slackness(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n, m) = (r.gen_range(1..=5usize), r.gen_range(1..=5usize));
        let int = |r: &mut rand_chacha::ChaCha8Rng, lo: i64, hi: i64| Rational::from_int(r.gen_range(lo..=hi));
        let point: Vec<Rational> = (0..n).map(|_| q(r.gen_range(0..=2), 8)).collect();
        let at = |coeffs: &[Rational]| -> Rational { coeffs.iter().zip(&point).map(|(a, x)| a.clone() * x.clone()).sum() };
        let mut lp = LinearProgram::new(Sense::Maximize, (0..n).map(|_| int(&mut r, -4, 6)).collect());
        for _ in 0..m {
            let coeffs: Vec<Rational> = (0..n).map(|_| int(&mut r, 0, 4)).collect();
            let rhs = at(&coeffs) + int(&mut r, 0, 12);
            lp.add(coeffs, Relation::Le, rhs);
        }
        let ones = vec![q(1, 1); n];
        let cap = at(&ones) + int(&mut r, 0, 12);
        lp.add(ones, Relation::Le, cap);
        for rel in [Relation::Ge, Relation::Eq] {
            if r.gen_bool(0.4) {
                let coeffs: Vec<Rational> = (0..n).map(|_| int(&mut r, -3, 3)).collect();
                let rhs = at(&coeffs);
                lp.add(coeffs, rel, rhs);
            }
        }
        let out = lp::solve(&lp).unwrap();
        prop_assert!(out.is_optimal());
        prop_assert_eq!(out.objective.clone(), out.dual_objective(&lp));
        let value: Rational = lp.objective.iter().zip(&out.primal).map(|(c, x)| c.clone() * x.clone()).sum();
        prop_assert_eq!(value, out.objective.clone());
        for (c, y) in lp.constraints.iter().zip(&out.duals) {
            let lhs: Rational = c.coeffs.iter().zip(&out.primal).map(|(a, x)| a.clone() * x.clone()).sum();
            let slack = c.rhs.clone() - lhs;
            match c.relation {
                Relation::Le => prop_assert!(slack >= zero() && *y >= zero()),
                Relation::Ge => prop_assert!(slack <= zero() && *y <= zero()),
                Relation::Eq => prop_assert_eq!(slack.clone(), zero()),
            }
            prop_assert_eq!(slack * y.clone(), zero());
        }
        for (rc, x) in out.reduced_costs(&lp).iter().zip(&out.primal) {
            prop_assert!(*rc <= zero() && *x >= zero());
            prop_assert_eq!(rc.clone() * x.clone(), zero());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn no_duality_gap_in_exact_arithmetic(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let sol = solve_primal(&inst.mu, &inst.nu, &f, &build_grid(&inst.mu, &inst.nu, &f, &[], 1)).unwrap();
        prop_assert_eq!(sol.value.clone(), sol.dual_value(&inst.mu, &inst.nu));
        prop_assert!(dual_diagnostics(&sol, &inst.mu, &inst.nu, &f, &sol.domain, &zero()).all_passed());
        prop_assert!(convex_order_leq(&inst.mu, &sol.theta) && convex_order_leq(&sol.theta, &inst.nu));
    }

    #[test]
    fn weak_duality(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let sol = solve_primal(&inst.mu, &inst.nu, &f, &build_grid(&inst.mu, &inst.nu, &f, &[], 1)).unwrap();
        let pair = dominating_pair(&mut r, &inst, &f);
        prop_assert!(sol.value <= pair.cost(&inst.mu, &inst.nu));
    }

    #[test]
    fn value_is_monotone_in_the_payoff(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let g = f.add(&nonnegative_payoff(&mut r, &inst));
        let grid = build_grid(&inst.mu, &inst.nu, &g, &[], 1);
        let vf = solve_primal(&inst.mu, &inst.nu, &f, &grid).unwrap().value;
        let vg = solve_primal(&inst.mu, &inst.nu, &g, &grid).unwrap().value;
        prop_assert!(vf <= vg);
    }

    #[test]
    fn refining_the_grid_keeps_the_value(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let coarse = solve_primal(&inst.mu, &inst.nu, &f, &build_grid(&inst.mu, &inst.nu, &f, &[], 0)).unwrap();
        let fine = solve_primal(&inst.mu, &inst.nu, &f, &build_grid(&inst.mu, &inst.nu, &f, &[], 2)).unwrap();
        prop_assert_eq!(coarse.value, fine.value);
    }

    #[test]
    fn value_moves_with_affine_payoff_shifts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let (c, s) = (small(&mut r), small(&mut r));
        let grid = build_grid(&inst.mu, &inst.nu, &f, &[], 1);
        let base = solve_primal(&inst.mu, &inst.nu, &f, &grid).unwrap().value;
        let moved = solve_primal(&inst.mu, &inst.nu, &f.add_affine(-c.clone(), -s.clone()), &grid).unwrap().value;
        prop_assert_eq!(moved, base - inst.mu.integrate(|x| c.clone() + s.clone() * x));
    }

    #[test]
    fn closed_forms_are_feasible_and_sandwiched(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 4);
        let a = interior_point(&mut r, &inst);
        let b = a.clone() + eighth(r.gen_range(1..=16));
        let h = eighth(r.gen_range(1..=16));
        let cases = [
            (risk_reversal_payoff(&a, &b), risk_reversal_closed_form(&inst.mu, &inst.nu, &a, &b).unwrap()),
            (butterfly_payoff(&a, &h), butterfly_closed_form(&inst.mu, &inst.nu, &a, &h).unwrap()),
        ];
        for (f, sol) in cases {
            prop_assert!(convex_order_leq(&inst.mu, &sol.theta) && convex_order_leq(&sol.theta, &inst.nu));
            let dom = &sol.domain;
            let (phi, psi) = (&sol.dual.phi, &sol.dual.psi);
            let shortfall = max_on_domain(|x| f.eval(x) - phi.eval(x) - psi.eval(x), &[&f, phi, psi], dom);
            prop_assert!(shortfall <= zero());
            prop_assert_eq!(sol.value.clone(), sol.theta.integrate(|x| f.eval(x)));
            prop_assert_eq!(sol.value.clone(), sol.dual_value(&inst.mu, &inst.nu));
        }
        for direction in [1i8, -1] {
            let t = max_slope_tangent(&inst.mu, &inst.nu, &a, direction).unwrap();
            let line = |x: &Rational| inst.mu.potential(&a) + t.slope.clone() * (x.clone() - a.clone());
            prop_assert!(inst.nu.support().iter().all(|x| line(x) <= inst.nu.potential(x)));
            prop_assert_eq!(line(&t.z), inst.nu.potential(&t.z));
        }
    }

    #[test]
    fn pathwise_integral_matches_integration_by_parts(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 5);
        let dom = domain(&inst);
        let pair = DualPair::new(random_concave(&mut r, &inst), random_convex(&mut r, &inst), &dom, &zero()).unwrap();
        let path = random_path(&mut r, &inst);
        let a = random_averaging(&mut r);
        let hedge = dynamic_part(&pair, &path, &a, &dom).unwrap();
        let integral = pathwise_integral(&hedge, &path);
        prop_assert_eq!(integral.clone(), ito_integral(&hedge, &path));
        let static_leg = pair.phi.eval(path.initial()) + pair.psi.eval(path.terminal());
        prop_assert_eq!(time_change_value(&pair, &path, &a, &dom), static_leg + integral);
    }

    #[test]
    fn hedge_gains_have_zero_mean_under_martingale_couplings(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let dom = domain(&inst);
        let pair = DualPair::new(random_concave(&mut r, &inst), random_convex(&mut r, &inst), &dom, &zero()).unwrap();
        let mid = if r.gen_bool(0.5) { inst.mu.clone() } else { inst.nu.clone() };
        let chain = build_two_step(&inst.mu, &mid, &inst.nu).unwrap();
        let a = random_averaging(&mut r);
        let n = r.gen_range(2..=16);
        let mut mean = zero();
        for (path, w) in embed_paths(&chain, n, &q(1, 1)).unwrap() {
            mean += w * pathwise_integral(&dynamic_part(&pair, &path, &a, &dom).unwrap(), &path);
        }
        prop_assert_eq!(mean, zero());
    }

    #[test]
    fn slack_ignores_affine_transfers_between_legs(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let pair = dominating_pair(&mut r, &inst, &f);
        let (c, s) = (small(&mut r), small(&mut r));
        let moved = DualPair {
            phi: pair.phi.add_affine(c.clone(), s.clone()),
            psi: pair.psi.add_affine(-c, -s),
        };
        let chain = build_two_step(&inst.mu, &inst.nu, &inst.nu).unwrap();
        let mut paths = embed_paths(&chain, 8, &q(1, 1)).unwrap();
        paths.push((random_path(&mut r, &inst), q(0, 1)));
        let a = random_averaging(&mut r);
        let dom = domain(&inst);
        let run = |p: &DualPair<Rational>| {
            verify_superhedge(p, &f, &a, &paths, &dom, &inst.mu, &inst.nu, &zero(), Execution::Sequential).unwrap()
        };
        let (before, after) = (run(&pair), run(&moved));
        prop_assert!(before.superhedges());
        for (x, y) in before.records.iter().zip(&after.records) {
            prop_assert_eq!(&x.slack, &y.slack);
        }
    }

    #[test]
    fn convex_payoffs_are_hedged_by_their_terminal_leg(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 4);
        let dom = domain(&inst);
        let f = random_convex(&mut r, &inst);
        let pair = DualPair::new(PiecewiseLinearFn::zero(), f.clone(), &dom, &zero()).unwrap();
        let paths: Vec<_> = (0..20).map(|_| (random_path(&mut r, &inst), q(1, 20))).collect();
        let a = random_averaging(&mut r);
        let rep = verify_superhedge(&pair, &f, &a, &paths, &dom, &inst.mu, &inst.nu, &zero(), Execution::Sequential).unwrap();
        prop_assert!(rep.superhedges());
        prop_assert!(rep.min_slack >= zero());
    }

    #[test]
    fn embedded_paths_carry_the_marginals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let inst = irreducible_pair(&mut r, 3);
        let f = nonnegative_payoff(&mut r, &inst);
        let sol = solve_primal(&inst.mu, &inst.nu, &f, &build_grid(&inst.mu, &inst.nu, &f, &[], 1)).unwrap();
        let chain = build_two_step(&inst.mu, &sol.theta, &inst.nu).unwrap();
        prop_assert_eq!(chain.marginal(0).unwrap(), inst.mu.clone());
        prop_assert_eq!(chain.marginal(1).unwrap(), sol.theta.clone());
        prop_assert_eq!(chain.marginal(2).unwrap(), inst.nu.clone());
        prop_assert_eq!(chain.martingale_residual(), zero());
        let n = r.gen_range(2..=64);
        let paths = embed_paths(&chain, n, &q(1, 1)).unwrap();
        prop_assert!(paths.iter().all(|(p, _)| in_omega(p, &sol.domain)));

        // the law of the average sits between the marginals
        let a = random_averaging(&mut r);
        let law = DiscreteMeasure::from_atoms(paths.iter().map(|(p, w)| (average_along(p, &a), w.clone()))).unwrap();
        prop_assert!(convex_order_leq(&inst.mu, &law) && convex_order_leq(&law, &inst.nu));

        // any exercise time in [1/n, T) sees theta
        let t0 = q(r.gen_range(1..n as i64), n as i64);
        let p = price(&chain, n, &q(1, 1), &f, &AveragingProcess::FixedTime(t0), Execution::Sequential).unwrap();
        prop_assert_eq!(p, sol.theta.integrate(|x| f.eval(x)));
    }
}

#[test]
fn omega_membership_on_a_half_open_domain() {
    let dom = Domain::new(q(-1, 1), q(1, 1), false, true).unwrap();
    assert!(in_omega(&SteppedPath::constant(q(0, 1), q(1, 1)), &dom));
    assert!(!in_omega(&SteppedPath::constant(q(1, 1), q(1, 1)), &dom));
    let absorbed = SteppedPath::new(vec![q(0, 1), q(1, 2)], vec![q(0, 1), q(1, 1)], q(1, 1)).unwrap();
    assert!(in_omega(&absorbed, &dom));
    let escapes = SteppedPath::new(vec![q(0, 1), q(1, 2), q(3, 4)], vec![q(0, 1), q(1, 1), q(0, 1)], q(1, 1)).unwrap();
    assert!(!in_omega(&escapes, &dom));
    let open_end = SteppedPath::new(vec![q(0, 1), q(1, 2)], vec![q(0, 1), q(-1, 1)], q(1, 1)).unwrap();
    assert!(!in_omega(&open_end, &dom));
}
