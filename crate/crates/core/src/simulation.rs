//! Finite martingale couplings `mu -> theta -> nu`, their embedding as step
//! paths, averaging processes, and exact pricing by enumeration.

use crate::auxiliary::{solve_primal, AuxiliarySolution};
use crate::convexfn::{OneStepCoupling, PiecewiseLinearFn};
use crate::error::{MotError, Result};
use crate::hedging::SteppedPath;
use crate::lp::{self, LinearProgram, Relation, Sense};
use crate::measures::{convex_order_leq_tol, DiscreteMeasure};
use crate::par::{self, Execution};
use crate::scalar::{sum, Scalar};

/// Exercise right: how the average `\int X dA` weights the path.
#[derive(Debug, Clone, PartialEq)]
pub enum AveragingProcess<S> {
    /// `dA = dt / T`.
    Asian,
    /// European maturity `T'` strictly inside `(0, T)`.
    EuropeanAt(S),
    /// Unit mass at a fixed time in `[0, T]`.
    FixedTime(S),
    /// `A = 1/2` on `[0, T)` and `1` at `T`, so the average is `(X_0 + X_T) / 2`.
    TerminalHalf,
    /// Masses at given times in `[0, T]`, summing to one.
    CustomAtoms(Vec<(S, S)>),
}

impl<S: Scalar> AveragingProcess<S> {
    pub fn validate(&self, horizon: &S) -> Result<()> {
        let in_horizon = |t: &S| *t >= S::zero() && t <= horizon;
        match self {
            Self::Asian | Self::TerminalHalf => Ok(()),
            Self::EuropeanAt(t) if *t > S::zero() && t < horizon => Ok(()),
            Self::EuropeanAt(t) => Err(MotError::BadHorizon(format!("European maturity {t} outside (0, T)"))),
            Self::FixedTime(t) if in_horizon(t) => Ok(()),
            Self::FixedTime(t) => Err(MotError::BadHorizon(format!("exercise time {t} outside [0, T]"))),
            Self::CustomAtoms(atoms) => {
                if atoms.iter().any(|(t, m)| !in_horizon(t) || *m < S::zero()) {
                    return Err(MotError::BadHorizon("custom atoms must lie in [0, T] with mass >= 0".into()));
                }
                let total = sum(atoms.iter().map(|(_, m)| m.clone()));
                if !total.approx_eq(&S::one(), &S::default_tol()) {
                    return Err(MotError::BadHorizon(format!("custom atoms carry mass {total}, not 1")));
                }
                Ok(())
            }
        }
    }

    /// Point masses of `dA` (empty for the Asian process).
    pub fn atoms(&self, horizon: &S) -> Vec<(S, S)> {
        match self {
            Self::Asian => Vec::new(),
            Self::EuropeanAt(t) | Self::FixedTime(t) => vec![(t.clone(), S::one())],
            Self::TerminalHalf => vec![(S::zero(), S::half()), (horizon.clone(), S::half())],
            Self::CustomAtoms(atoms) => atoms.clone(),
        }
    }

    /// `A_0`.
    pub fn initial_mass(&self, horizon: &S) -> S {
        sum(self.atoms(horizon).into_iter().filter(|(t, _)| t.is_zero()).map(|(_, m)| m))
    }

    /// `A_0 = 0` and `ΔA_T = 0`.
    pub fn is_interior(&self, horizon: &S) -> bool {
        let atoms = self.atoms(horizon);
        let charged = |at: &S| atoms.iter().any(|(t, m)| t == at && *m > S::zero());
        !charged(&S::zero()) && !charged(horizon)
    }

    /// Interior, and `A_t = 0` for some `t > 0`.
    pub fn is_strictly_interior(&self, horizon: &S) -> bool {
        match self {
            Self::Asian => false,
            _ => {
                self.is_interior(horizon)
                    && self.atoms(horizon).iter().filter(|(_, m)| *m > S::zero()).all(|(t, _)| *t > S::zero())
            }
        }
    }
}

/// `\int_{[0,T]} X dA` along a step path, by segment arithmetic.
pub fn average_along<S: Scalar>(path: &SteppedPath<S>, a: &AveragingProcess<S>) -> S {
    let horizon = path.horizon();
    match a {
        AveragingProcess::Asian => {
            let segments = path.segments();
            sum(segments.into_iter().map(|(s, e, x)| x * (e - s))) / horizon.clone()
        }
        _ => sum(a.atoms(horizon).into_iter().map(|(t, m)| m * path.value_at(&t))),
    }
}

/// Martingale transport from `source` to `target` minimizing `E|Y - X|`,
/// found by LP over the product of the supports.
pub fn martingale_transport<S: Scalar>(
    source: &DiscreteMeasure<S>,
    target: &DiscreteMeasure<S>,
) -> Result<OneStepCoupling<S>> {
    let tol = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-9) };
    if !convex_order_leq_tol(source, target, &tol) {
        return Err(MotError::NotInConvexOrder("transport source is not dominated by its target".into()));
    }
    let xs = source.support();
    let ys = target.support();
    let (nx, ny) = (xs.len(), ys.len());
    let idx = |i: usize, j: usize| i * ny + j;
    let cost = (0..nx * ny).map(|k| (ys[k % ny].clone() - xs[k / ny].clone()).abs()).collect();
    let mut lp = LinearProgram::new(Sense::Minimize, cost);
    for i in 0..nx {
        let mut mass = vec![S::zero(); nx * ny];
        let mut drift = vec![S::zero(); nx * ny];
        for j in 0..ny {
            mass[idx(i, j)] = S::one();
            drift[idx(i, j)] = ys[j].clone() - xs[i].clone();
        }
        lp.add(mass, Relation::Eq, source.weights()[i].clone());
        lp.add(drift, Relation::Eq, S::zero());
    }
    for j in 0..ny {
        let mut mass = vec![S::zero(); nx * ny];
        for i in 0..nx {
            mass[idx(i, j)] = S::one();
        }
        lp.add(mass, Relation::Eq, target.weights()[j].clone());
    }
    let out = lp::solve(&lp)?;
    if !out.is_optimal() {
        return Err(MotError::NumericalFailure(format!("transport LP is {:?}", out.status)));
    }
    let cut = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-14) };
    let atoms = (0..nx * ny)
        .filter(|&k| out.primal[k] > cut)
        .map(|k| (xs[k / ny].clone(), ys[k % ny].clone(), out.primal[k].clone()))
        .collect();
    Ok(OneStepCoupling { atoms })
}

/// Finite martingale law of `(Y_1, Y_2, Y_3)` with marginals `mu, theta, nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStepCoupling<S> {
    pub atoms: Vec<(S, S, S, S)>,
}

impl<S: Scalar> TwoStepCoupling<S> {
    pub fn marginal(&self, k: usize) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::from_atoms(self.atoms.iter().map(|(a, b, c, w)| {
            let x = match k {
                0 => a,
                1 => b,
                _ => c,
            };
            (x.clone(), w.clone())
        }))
    }

    /// Largest conditional drift of either step.
    pub fn martingale_residual(&self) -> S {
        let first = OneStepCoupling { atoms: self.atoms.iter().map(|(a, b, _, w)| (a.clone(), b.clone(), w.clone())).collect() };
        let mut worst = first.martingale_residual();
        // second step conditions on the pair (y1, y2)
        let mut keys: Vec<(S, S)> = self.atoms.iter().map(|(a, b, _, _)| (a.clone(), b.clone())).collect();
        keys.sort_by(|x, y| x.partial_cmp(y).expect("comparable"));
        keys.dedup();
        for (a, b) in keys {
            let group: Vec<_> = self.atoms.iter().filter(|t| t.0 == a && t.1 == b).collect();
            let mass = sum(group.iter().map(|t| t.3.clone()));
            let drift = sum(group.iter().map(|t| t.3.clone() * (t.2.clone() - b.clone())));
            worst = S::max_of(worst, (drift / mass).abs());
        }
        worst
    }

    pub fn total_mass(&self) -> S {
        sum(self.atoms.iter().map(|t| t.3.clone()))
    }
}

/// Composes martingale transports `mu -> theta` and `theta -> nu`.
pub fn build_two_step<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    theta: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> Result<TwoStepCoupling<S>> {
    let first = martingale_transport(mu, theta)?;
    let second = martingale_transport(theta, nu)?;
    let mut atoms = Vec::new();
    for (y1, y2, w1) in &first.atoms {
        let mass = theta.atom_at(y2);
        if mass.is_zero() {
            continue;
        }
        for (_, y3, w2) in second.atoms.iter().filter(|a| a.0 == *y2) {
            atoms.push((y1.clone(), y2.clone(), y3.clone(), w1.clone() * w2.clone() / mass.clone()));
        }
    }
    Ok(TwoStepCoupling { atoms })
}

/// Step paths `y1` on `[0, 1/n)`, `y2` on `[1/n, T)`, `y3` at `T`, with weights.
pub fn embed_paths<S: Scalar>(q: &TwoStepCoupling<S>, n: usize, horizon: &S) -> Result<Vec<(SteppedPath<S>, S)>> {
    let step = S::one() / S::from_int(n as i64);
    if n < 2 || step >= *horizon {
        return Err(MotError::BadHorizon(format!("need n >= 2 and 1/n < T, got n = {n}, T = {horizon}")));
    }
    q.atoms
        .iter()
        .map(|(y1, y2, y3, w)| {
            let path = SteppedPath::new(
                vec![S::zero(), step.clone(), horizon.clone()],
                vec![y1.clone(), y2.clone(), y3.clone()],
                horizon.clone(),
            )?;
            Ok((path, w.clone()))
        })
        .collect()
}

/// `E f(\int X dA)` over the embedded paths of `q`.
pub fn price<S: Scalar>(
    q: &TwoStepCoupling<S>,
    n: usize,
    horizon: &S,
    f: &PiecewiseLinearFn<S>,
    a: &AveragingProcess<S>,
    exec: Execution,
) -> Result<S> {
    a.validate(horizon)?;
    let paths = embed_paths(q, n, horizon)?;
    Ok(price_paths(&paths, f, a, exec))
}

/// `E f(\int X dA)` over weighted paths.
pub fn price_paths<S: Scalar>(
    paths: &[(SteppedPath<S>, S)],
    f: &PiecewiseLinearFn<S>,
    a: &AveragingProcess<S>,
    exec: Execution,
) -> S {
    sum(par::map(exec, paths, |(p, w)| w.clone() * f.eval(&average_along(p, a))))
}

/// Auxiliary value against the price attained by the optimizer's coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundReport<S> {
    pub auxiliary_value: S,
    /// `theta(f)` for the auxiliary optimizer.
    pub theta_value: S,
    pub price: S,
    /// `auxiliary_value - price`.
    pub gap: S,
    pub interior: bool,
    pub strictly_interior: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn lower_bound_report<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    a: &AveragingProcess<S>,
    grid: &[S],
    n: usize,
    horizon: &S,
    exec: Execution,
) -> Result<LowerBoundReport<S>> {
    let sol = solve_primal(mu, nu, f, grid)?;
    lower_bound_from_solution(&sol, mu, nu, f, a, n, horizon, exec)
}

#[allow(clippy::too_many_arguments)]
pub fn lower_bound_from_solution<S: Scalar>(
    sol: &AuxiliarySolution<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    a: &AveragingProcess<S>,
    n: usize,
    horizon: &S,
    exec: Execution,
) -> Result<LowerBoundReport<S>> {
    let q = build_two_step(mu, &sol.theta, nu)?;
    let p = price(&q, n, horizon, f, a, exec)?;
    Ok(LowerBoundReport {
        auxiliary_value: sol.value.clone(),
        theta_value: sol.theta.integrate(|x| f.eval(x)),
        gap: sol.value.clone() - p.clone(),
        price: p,
        interior: a.is_interior(horizon),
        strictly_interior: a.is_strictly_interior(horizon),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergencePoint<S> {
    pub n: usize,
    pub price: S,
    /// `theta(f) - price`.
    pub gap: S,
}

/// Asian prices under the optimizer's coupling for each `n`.
pub fn convergence<S: Scalar>(
    sol: &AuxiliarySolution<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    ns: &[usize],
    horizon: &S,
    exec: Execution,
) -> Result<Vec<ConvergencePoint<S>>> {
    let q = build_two_step(mu, &sol.theta, nu)?;
    let target = sol.theta.integrate(|x| f.eval(x));
    ns.iter()
        .map(|&n| {
            let p = price(&q, n, horizon, f, &AveragingProcess::Asian, exec)?;
            Ok(ConvergencePoint { n, gap: target.clone() - p.clone(), price: p })
        })
        .collect()
}
