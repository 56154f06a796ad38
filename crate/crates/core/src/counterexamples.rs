//! Built-in instances where one of the standing assumptions fails, each
//! reduced to a finite computation with an expected outcome.

use crate::auxiliary::{build_grid, solve_nonirreducible, solve_primal, AuxiliaryProblem};
use crate::convexfn::PiecewiseLinearFn;
use crate::error::Result;
use crate::hedging::SteppedPath;
use crate::measures::{DiscreteMeasure, Domain};
use crate::par::Execution;
use crate::scalar::{sum, Rational, Scalar};
use crate::simulation::{average_along, build_two_step, price, AveragingProcess, TwoStepCoupling};

/// Outcome of one reproduction, rendered for reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub expected: String,
    pub computed: String,
    pub passed: bool,
}

fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

/// Interpolates `x^2` at `points`.
pub fn square_on<S: Scalar>(points: &[S]) -> PiecewiseLinearFn<S> {
    PiecewiseLinearFn::sample(points, |x| x.clone() * x.clone()).expect("nonempty sorted points")
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupRow {
    /// Value of the payoff at the common boundary point 0.
    pub level: f64,
    pub decomposed_value: f64,
    pub global_value: f64,
    /// `(phi + psi)(0)` of the dual pair on the single hull interval.
    pub global_dual_at_zero: f64,
}

/// `mu = (d_{-1} + d_1)/2`, `nu` uniform on `{-3/2, -1/2, 1/2, 3/2}` and
/// `f = |x|^{-1/2}` capped at `level` in 0. The pair splits at 0, where `nu`
/// has no atom, so the auxiliary value is `nu(f)` whatever the cap. A dual
/// pair that is concave/convex on the whole hull must still dominate the cap
/// at 0, and the cap can be made arbitrarily large.
pub fn global_dual_blowup(levels: &[f64]) -> Result<Vec<BlowupRow>> {
    let mu = DiscreteMeasure::uniform(vec![-1.0, 1.0])?;
    let nu = DiscreteMeasure::uniform(vec![-1.5, -0.5, 0.5, 1.5])?;
    let pts = [-1.5, -1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5];
    levels
        .iter()
        .map(|&level| {
            let values = pts.iter().map(|x: &f64| if *x == 0.0 { level } else { x.abs().powf(-0.5) }).collect();
            let f = PiecewiseLinearFn::interpolate(pts.to_vec(), values)?;
            let grid = build_grid(&mu, &nu, &f, &[], 1);
            let decomposed = solve_nonirreducible(&mu, &nu, &f, &grid)?;
            let hull = Domain::new(-1.5, 1.5, true, true)?;
            let mut global = AuxiliaryProblem::with_domain(&mu, &nu, &f, &grid, hull)?;
            let sol = global.solve()?;
            Ok(BlowupRow {
                level,
                decomposed_value: decomposed.value,
                global_value: sol.value,
                global_dual_at_zero: sol.dual.eval_sum(&0.0),
            })
        })
        .collect()
}

pub fn global_dual_blowup_check() -> Result<Check> {
    let rows = global_dual_blowup(&[10.0, 100.0, 1000.0])?;
    let target = (2f64.sqrt() + (2.0f64 / 3.0).sqrt()) / 2.0;
    let passed = rows.iter().all(|r| {
        (r.decomposed_value - target).abs() <= 1e-9
            && (r.global_value - target).abs() <= 1e-9
            && r.global_dual_at_zero >= r.level - 1e-9
    });
    let duals: Vec<String> = rows.iter().map(|r| format!("{:.3}", r.global_dual_at_zero)).collect();
    let values: Vec<String> = rows.iter().map(|r| format!("{:.12}", r.decomposed_value)).collect();
    Ok(Check {
        name: "globally concave/convex duals blow up across a split point",
        expected: format!("value {target:.12} for caps 10, 100, 1000; (phi+psi)(0) >= cap"),
        computed: format!("values [{}]; (phi+psi)(0) [{}]", values.join(", "), duals.join(", ")),
        passed,
    })
}

/// Optimal stopping over the epochs of a three-step chain: exercise at
/// `y1`, `y2` or `y3` with payoff `f`, by backward induction.
pub fn american_value<S: Scalar>(chain: &TwoStepCoupling<S>, f: &PiecewiseLinearFn<S>) -> S {
    let atoms = &chain.atoms;
    let mut firsts: Vec<S> = atoms.iter().map(|a| a.0.clone()).collect();
    crate::measures::sort_dedup(&mut firsts);
    sum(firsts.iter().map(|y1| {
        let branch: Vec<_> = atoms.iter().filter(|a| a.0 == *y1).collect();
        let mass = sum(branch.iter().map(|a| a.3.clone()));
        let mut seconds: Vec<S> = branch.iter().map(|a| a.1.clone()).collect();
        crate::measures::sort_dedup(&mut seconds);
        let continuation = sum(seconds.iter().map(|y2| {
            let leaf: Vec<_> = branch.iter().filter(|a| a.1 == *y2).collect();
            let w = sum(leaf.iter().map(|a| a.3.clone()));
            let hold = sum(leaf.iter().map(|a| a.3.clone() * f.eval(&a.2)));
            S::max_of(w.clone() * f.eval(y2), hold)
        }));
        S::max_of(mass * f.eval(y1), continuation)
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiMarginalReport {
    pub asian_price: Rational,
    /// `(mu_1(f) + mu_2(f)) / 2`.
    pub asian_bound: Rational,
    pub american_value: Rational,
    pub last_marginal_value: Rational,
}

/// Marginals `d_0 <=c (d_{-1} + d_1)/2 <=c (d_{-2} + d_0 + d_2)/3` at times
/// 0, 1, 2 and `f(x) = x^2`. The Asian price of a chained coupling whose
/// jumps sit just after times 0 and 1 stays below the Jensen bound, which is
/// strictly below the American value `mu_2(f)`.
pub fn multi_marginal() -> Result<MultiMarginalReport> {
    let m0 = DiscreteMeasure::dirac(q(0, 1));
    let m1 = DiscreteMeasure::uniform(vec![q(-1, 1), q(1, 1)])?;
    let m2 = DiscreteMeasure::uniform(vec![q(-2, 1), q(0, 1), q(2, 1)])?;
    let pts: Vec<Rational> = (-8..=8).map(|k| q(k, 4)).collect();
    let f = square_on(&pts);
    let chain = build_two_step(&m0, &m1, &m2)?;
    let horizon = q(2, 1);
    let eps = q(1, 4);
    let asian_price = sum(chain.atoms.iter().map(|(y0, y1, y2, w)| {
        let path = SteppedPath::new(
            vec![q(0, 1), eps.clone(), q(1, 1) + eps.clone()],
            vec![y0.clone(), y1.clone(), y2.clone()],
            horizon.clone(),
        )
        .expect("increasing times");
        w.clone() * f.eval(&average_along(&path, &AveragingProcess::Asian))
    }));
    let fm = |m: &DiscreteMeasure<Rational>| m.integrate(|x| f.eval(x));
    Ok(MultiMarginalReport {
        asian_price,
        asian_bound: (fm(&m1) + fm(&m2)) / q(2, 1),
        american_value: american_value(&chain, &f),
        last_marginal_value: fm(&m2),
    })
}

pub fn multi_marginal_check() -> Result<Check> {
    let r = multi_marginal()?;
    let passed = r.asian_price <= r.asian_bound
        && r.asian_bound < r.last_marginal_value
        && r.american_value == r.last_marginal_value;
    Ok(Check {
        name: "Asian below American with three marginals",
        expected: format!("asian <= {} < american = {}", r.asian_bound, r.last_marginal_value),
        computed: format!("asian {} american {}", r.asian_price, r.american_value),
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonInteriorReport {
    /// Prices under `A = 1/2 + 1/2 1{t = T}` for couplings through `theta = mu` and the optimizer.
    pub prices: Vec<Rational>,
    pub formula: Rational,
    pub auxiliary_value: Rational,
    pub nu_value: Rational,
}

/// `mu = (d_{-1} + d_1)/2`, `nu` uniform on `{-3, -1, 1, 3}`, `f(x) = x^2`,
/// averaging `(X_0 + X_T)/2`: every martingale coupling prices at
/// `(3 mu(f) + nu(f))/4`, strictly below the auxiliary value `nu(f)`.
pub fn non_interior() -> Result<NonInteriorReport> {
    let mu = DiscreteMeasure::uniform(vec![q(-1, 1), q(1, 1)])?;
    let nu = DiscreteMeasure::uniform(vec![q(-3, 1), q(-1, 1), q(1, 1), q(3, 1)])?;
    let pts: Vec<Rational> = (-3..=3).map(|k| q(k, 1)).collect();
    let f = square_on(&pts);
    let sol = solve_primal(&mu, &nu, &f, &build_grid(&mu, &nu, &f, &[], 1))?;
    let horizon = q(1, 1);
    let mut prices = Vec::new();
    for theta in [mu.clone(), sol.theta.clone()] {
        let chain = build_two_step(&mu, &theta, &nu)?;
        prices.push(price(&chain, 4, &horizon, &f, &AveragingProcess::TerminalHalf, Execution::Sequential)?);
    }
    let fm = |m: &DiscreteMeasure<Rational>| m.integrate(|x| f.eval(x));
    Ok(NonInteriorReport {
        prices,
        formula: (q(3, 1) * fm(&mu) + fm(&nu)) / q(4, 1),
        auxiliary_value: sol.value,
        nu_value: fm(&nu),
    })
}

pub fn non_interior_check() -> Result<Check> {
    let r = non_interior()?;
    let passed = r.prices.iter().all(|p| *p == r.formula) && r.auxiliary_value == r.nu_value && r.formula < r.nu_value;
    let prices: Vec<String> = r.prices.iter().map(|p| p.to_string()).collect();
    Ok(Check {
        name: "averaging with mass at 0 and T",
        expected: format!("price {} < auxiliary {}", r.formula, r.nu_value),
        computed: format!("prices [{}], auxiliary {}", prices.join(", "), r.auxiliary_value),
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NonLscReport {
    pub auxiliary_value: Rational,
    /// `(n, price)` for the coupling through the optimizer.
    pub prices: Vec<(usize, Rational)>,
}

/// `mu = d_0`, `nu = (d_{-1} + d_1)/2`, `f = 1{|x| >= 1}` under Asian
/// averaging: paths stay in `[-1, 1]` and spend time near 0, so the average
/// never reaches `{|x| >= 1}` and the price is 0 while the auxiliary value is 1.
pub fn non_lsc(ns: &[usize]) -> Result<NonLscReport> {
    let mu = DiscreteMeasure::dirac(q(0, 1));
    let nu = DiscreteMeasure::uniform(vec![q(-1, 1), q(1, 1)])?;
    let f = PiecewiseLinearFn::zero().with_offset(q(-1, 1), q(1, 1)).with_offset(q(1, 1), q(1, 1));
    let sol = solve_primal(&mu, &nu, &f, &build_grid(&mu, &nu, &f, &[], 1))?;
    let chain = build_two_step(&mu, &sol.theta, &nu)?;
    let horizon = q(1, 1);
    let prices = ns
        .iter()
        .map(|&n| Ok((n, price(&chain, n, &horizon, &f, &AveragingProcess::Asian, Execution::Sequential)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(NonLscReport { auxiliary_value: sol.value, prices })
}

pub fn non_lsc_check() -> Result<Check> {
    let r = non_lsc(&[4, 16, 64, 256])?;
    let passed = r.auxiliary_value == q(1, 1) && r.prices.iter().all(|(_, p)| *p == q(0, 1));
    let prices: Vec<String> = r.prices.iter().map(|(n, p)| format!("n={n}: {p}")).collect();
    Ok(Check {
        name: "payoff that is not lower semicontinuous",
        expected: "price 0, auxiliary 1".into(),
        computed: format!("prices [{}], auxiliary {}", prices.join(", "), r.auxiliary_value),
        passed,
    })
}

/// `f(x) = |x| 1{|x| < 1}`.
pub fn truncated_abs<S: Scalar>() -> PiecewiseLinearFn<S> {
    PiecewiseLinearFn::interpolate(vec![-S::one(), S::zero(), S::one()], vec![S::one(), S::zero(), S::one()])
        .expect("sorted")
        .with_offset(-S::one(), -S::one())
        .with_offset(S::one(), -S::one())
}

/// Auxiliary values of `f(x) = |x| 1{|x| < 1}` for `mu = d_0`,
/// `nu = (d_{-1} + d_1)/2` on grids with the extra points `+-(1 - 1/k)`.
pub fn no_attainment(ks: &[i64]) -> Result<Vec<(i64, Rational)>> {
    let mu = DiscreteMeasure::dirac(q(0, 1));
    let nu = DiscreteMeasure::uniform(vec![q(-1, 1), q(1, 1)])?;
    let f = truncated_abs();
    ks.iter()
        .map(|&k| {
            let p = q(1, 1) - q(1, k);
            let grid = build_grid(&mu, &nu, &f, &[-p.clone(), p], 0);
            Ok((k, solve_primal(&mu, &nu, &f, &grid)?.value))
        })
        .collect()
}

pub fn no_attainment_check() -> Result<Check> {
    let rows = no_attainment(&[2, 4, 8, 16, 32, 64])?;
    let increasing = rows.windows(2).all(|w| w[0].1 < w[1].1);
    let passed = increasing && rows.iter().all(|(k, v)| *v == q(1, 1) - q(1, *k));
    let values: Vec<String> = rows.iter().map(|(k, v)| format!("k={k}: {v}")).collect();
    Ok(Check {
        name: "no primal attainment for a payoff that is not usc",
        expected: "1 - 1/k, increasing, never 1".into(),
        computed: values.join(", "),
        passed,
    })
}

/// All reproductions in a fixed order.
pub fn run_all() -> Result<Vec<Check>> {
    Ok(vec![
        global_dual_blowup_check()?,
        multi_marginal_check()?,
        non_interior_check()?,
        non_lsc_check()?,
        no_attainment_check()?,
    ])
}
