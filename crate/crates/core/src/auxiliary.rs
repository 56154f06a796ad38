//! The auxiliary problem `sup { theta(f) : mu <=c theta <=c nu }` restricted
//! to measures on a grid, its dual over concave `phi` and convex `psi` with
//! `phi + psi >= f` on `J`, and diagnostics for optimal pairs.
//!
//! The LP has one weight per grid point, two moment rows and two potential
//! rows per grid point. The potential rows are where the duals live: the
//! multiplier of `u_mu(g) <= u_theta(g)` becomes a `|x - g|` term of `phi`
//! and the multiplier of `u_theta(g) <= u_nu(g)` a `|x - g|` term of `psi`.

use crate::convexfn::{DualPair, PiecewiseLinearFn};
use crate::error::{MotError, Result};
use crate::lp::{self, LinearProgram, LpOutcome, Relation, Sense};
use crate::measures::{domain_of_tol, irreducible_components_tol, sort_dedup, DiscreteMeasure, Domain};
use crate::scalar::{sum, Scalar};

/// Optimal grid measure, dual pair and the data they were computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxiliarySolution<S> {
    pub value: S,
    pub theta: DiscreteMeasure<S>,
    pub dual: DualPair<S>,
    pub grid: Vec<S>,
    pub domain: Domain<S>,
}

impl<S: Scalar> AuxiliarySolution<S> {
    /// `mu(phi) + nu(psi)`.
    pub fn dual_value(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> S {
        self.dual.cost(mu, nu)
    }
}

/// Default tolerance for diagnostics: zero in exact arithmetic.
pub fn diagnostic_tol<S: Scalar>() -> S {
    if S::EXACT {
        S::zero()
    } else {
        S::from_f64_exact(1e-9)
    }
}

/// Supports, breakpoints and offset locations of `f` inside the hull of `nu`,
/// plus `extra` points, then `refine` rounds of midpoint insertion.
pub fn build_grid<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    extra: &[S],
    refine: usize,
) -> Vec<S> {
    let (lo, hi) = (nu.min_support().clone(), nu.max_support().clone());
    let inside = |x: &&S| **x >= lo && **x <= hi;
    let mut pts: Vec<S> = mu
        .support()
        .iter()
        .chain(nu.support())
        .chain(f.breakpoints().iter().filter(inside))
        .chain(f.offsets().iter().map(|(p, _)| p).filter(inside))
        .chain(extra.iter().filter(inside))
        .cloned()
        .collect();
    sort_dedup(&mut pts);
    for _ in 0..refine {
        let mids: Vec<S> = pts.windows(2).map(|w| (w[0].clone() + w[1].clone()) * S::half()).collect();
        pts.extend(mids);
        sort_dedup(&mut pts);
    }
    pts
}

/// Points the grid must contain.
fn required_points<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    dom: &Domain<S>,
) -> Vec<S> {
    let mut pts: Vec<S> = mu.support().iter().chain(nu.support()).cloned().collect();
    pts.extend(f.breakpoints().iter().filter(|x| dom.contains(x)).cloned());
    pts.extend(f.offsets().iter().map(|(p, _)| p.clone()).filter(|x| dom.contains(x)));
    sort_dedup(&mut pts);
    pts
}

fn check_grid<S: Scalar>(grid: &[S], required: &[S]) -> Result<()> {
    for p in required {
        if grid.binary_search_by(|g| g.partial_cmp(p).expect("comparable")).is_err() {
            return Err(MotError::GridTooCoarse(p.to_f64_lossy()));
        }
    }
    Ok(())
}

/// An auxiliary problem on a fixed grid. Solving stores the solution, which
/// the secondary optimization then builds on.
#[derive(Debug, Clone)]
pub struct AuxiliaryProblem<S> {
    pub mu: DiscreteMeasure<S>,
    pub nu: DiscreteMeasure<S>,
    pub f: PiecewiseLinearFn<S>,
    pub domain: Domain<S>,
    /// Grid points inside `J`, sorted.
    pub grid: Vec<S>,
    solution: Option<AuxiliarySolution<S>>,
}

impl<S: Scalar> AuxiliaryProblem<S> {
    pub fn new(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, f: &PiecewiseLinearFn<S>, grid: &[S]) -> Result<Self> {
        let domain = domain_of_tol(mu, nu, &S::default_tol())?;
        Self::with_domain(mu, nu, f, grid, domain)
    }

    /// Uses `domain` instead of the one generated by the pair.
    pub fn with_domain(
        mu: &DiscreteMeasure<S>,
        nu: &DiscreteMeasure<S>,
        f: &PiecewiseLinearFn<S>,
        grid: &[S],
        domain: Domain<S>,
    ) -> Result<Self> {
        let mut grid: Vec<S> = grid.iter().filter(|x| domain.contains(x)).cloned().collect();
        sort_dedup(&mut grid);
        check_grid(&grid, &required_points(mu, nu, f, &domain))?;
        Ok(Self { mu: mu.clone(), nu: nu.clone(), f: f.clone(), domain, grid, solution: None })
    }

    /// Row layout: mass, mean, then `(lower, upper)` for every grid point.
    pub fn program(&self) -> LinearProgram<S> {
        let g = &self.grid;
        let objective = g.iter().map(|x| self.f.eval(x)).collect();
        let mut lp = LinearProgram::new(Sense::Maximize, objective);
        lp.add(vec![S::one(); g.len()], Relation::Eq, self.mu.mass());
        lp.add(g.clone(), Relation::Eq, self.mu.first_moment());
        for p in g {
            let row: Vec<S> = g.iter().map(|x| (x.clone() - p.clone()).abs()).collect();
            lp.add(row.clone(), Relation::Ge, self.mu.potential(p));
            lp.add(row, Relation::Le, self.nu.potential(p));
        }
        lp
    }

    pub fn solve(&mut self) -> Result<&AuxiliarySolution<S>> {
        let lp = self.program();
        let outcome = lp::solve(&lp)?;
        let dual = extract_dual(&outcome, &self.grid, &self.f, &self.domain)?;
        let theta = theta_from_weights(&self.grid, &outcome.primal)?;
        self.solution = Some(AuxiliarySolution {
            value: outcome.objective.clone(),
            theta,
            dual,
            grid: self.grid.clone(),
            domain: self.domain.clone(),
        });
        Ok(self.solution.as_ref().expect("just stored"))
    }

    pub fn solution(&self) -> Option<&AuxiliarySolution<S>> {
        self.solution.as_ref()
    }

    /// Maximizes `theta(g)` over grid measures with `theta(f) >= V - eps`.
    /// With strictly convex `g` the result is maximal in convex order among
    /// the (near) optimizers. `eps` defaults to `1e-9 (1 + |V|)`, or zero in
    /// exact arithmetic.
    pub fn secondary_optimize(&self, g: &PiecewiseLinearFn<S>, eps: Option<S>) -> Result<DiscreteMeasure<S>> {
        let sol = self
            .solution
            .as_ref()
            .ok_or_else(|| MotError::PrimalNotSolved("call solve before secondary_optimize".into()))?;
        let eps = eps.unwrap_or_else(|| {
            if S::EXACT {
                S::zero()
            } else {
                S::from_f64_exact(1e-9) * (S::one() + sol.value.abs())
            }
        });
        let mut lp = self.program();
        let f_row = lp.objective.clone();
        lp.objective = self.grid.iter().map(|x| g.eval(x)).collect();
        lp.add(f_row, Relation::Ge, sol.value.clone() - eps);
        let out = lp::solve(&lp)?;
        if !out.is_optimal() {
            return Err(MotError::NotOptimal(format!("secondary problem is {:?}", out.status)));
        }
        theta_from_weights(&self.grid, &out.primal)
    }
}

fn theta_from_weights<S: Scalar>(grid: &[S], weights: &[S]) -> Result<DiscreteMeasure<S>> {
    let cut = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-15) };
    DiscreteMeasure::from_atoms(
        grid.iter()
            .zip(weights)
            .filter(|(_, w)| **w > cut)
            .map(|(x, w)| (x.clone(), w.clone())),
    )
}

/// Solves the auxiliary problem for an irreducible pair on `grid`.
pub fn solve_primal<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    grid: &[S],
) -> Result<AuxiliarySolution<S>> {
    let mut problem = AuxiliaryProblem::new(mu, nu, f, grid)?;
    problem.solve()?;
    Ok(problem.solution.expect("solved"))
}

/// Builds `(phi, psi)` from the multipliers of an optimal auxiliary LP.
pub fn extract_dual<S: Scalar>(
    outcome: &LpOutcome<S>,
    grid: &[S],
    f: &PiecewiseLinearFn<S>,
    dom: &Domain<S>,
) -> Result<DualPair<S>> {
    if !outcome.is_optimal() {
        return Err(MotError::NotOptimal(format!("{:?}", outcome.status)));
    }
    if outcome.duals.len() != 2 + 2 * grid.len() {
        return Err(MotError::NotOptimal("multipliers do not match the grid".into()));
    }
    let noise = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-7) * (S::one() + f.lipschitz()) };
    let y = &outcome.duals;
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for (k, p) in grid.iter().enumerate() {
        // multipliers of >= rows are nonpositive, of <= rows nonnegative
        let (yl, yu) = (y[2 + 2 * k].clone(), y[3 + 2 * k].clone());
        if yl > noise || yu < -noise.clone() {
            return Err(MotError::NumericalFailure(format!("multiplier of the wrong sign at {p}")));
        }
        if yl < S::zero() {
            lower.push((p.clone(), yl));
        }
        if yu > S::zero() {
            upper.push((p.clone(), yu));
        }
    }
    let phi = PiecewiseLinearFn::abs_combination(&lower, y[0].clone(), y[1].clone());
    let psi = PiecewiseLinearFn::abs_combination(&upper, S::zero(), S::zero());
    // kinks are recovered from values, so allow for rounding in float mode
    let scale = S::one() + sum(lower.iter().chain(&upper).map(|(_, c)| c.abs()));
    DualPair::new(phi, psi, dom, &(S::default_tol() * S::from_int(1000) * scale))
}

/// One clause of the optimality conditions with its worst offender.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseCheck<S> {
    pub clause: &'static str,
    pub description: &'static str,
    pub passed: bool,
    /// Largest violation found (zero if none).
    pub worst: S,
    pub witness: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualDiagnostics<S> {
    /// `phi + psi >= f` on the grid.
    pub feasibility: ClauseCheck<S>,
    /// Clauses (i) to (v).
    pub clauses: Vec<ClauseCheck<S>>,
    /// `mu(phi) + nu(psi) - theta(f)`.
    pub gap: S,
}

impl<S: Scalar> DualDiagnostics<S> {
    pub fn all_passed(&self) -> bool {
        self.feasibility.passed && self.clauses.iter().all(|c| c.passed)
    }
}

fn clause<S: Scalar>(
    clause: &'static str,
    description: &'static str,
    items: impl IntoIterator<Item = (S, S)>,
    tol: &S,
) -> ClauseCheck<S> {
    let mut worst = S::zero();
    let mut witness = None;
    for (x, v) in items {
        if v > worst {
            worst = v;
            witness = Some(x);
        }
    }
    ClauseCheck { clause, description, passed: worst <= *tol, worst, witness }
}

/// Checks the optimality conditions for `(theta, phi, psi)`.
///
/// Each clause is measured by its contribution to the identity
/// `mu(phi) + nu(psi) - theta(f) = theta(phi + psi - f) + (mu - theta)(phi) + (theta - nu)(-psi)`,
/// so clause (ii) for instance reports `(u_theta - u_mu)(p) |phi''({p})| / 2`
/// at each kink `p` of `phi`. A clause passes when every contribution is at
/// most `tol`.
pub fn dual_diagnostics<S: Scalar>(
    sol: &AuxiliarySolution<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    dom: &Domain<S>,
    tol: &S,
) -> DualDiagnostics<S> {
    let (phi, psi, theta) = (&sol.dual.phi, &sol.dual.psi, &sol.theta);
    let residual = |x: &S| sol.dual.eval_sum(x) - f.eval(x);
    let mut checkpoints: Vec<S> = sol.grid.clone();
    checkpoints.extend(f.breakpoints().iter().filter(|x| dom.contains(x)).cloned());
    sort_dedup(&mut checkpoints);
    let feasibility = clause(
        "feasibility",
        "phi + psi >= f on the grid",
        checkpoints.iter().map(|x| (x.clone(), -residual(x))),
        tol,
    );
    let c1 = clause(
        "i",
        "phi + psi = f theta-a.e.",
        theta.atoms().map(|(x, w)| (x.clone(), w.clone() * residual(x).abs())),
        tol,
    );
    let c2 = clause(
        "ii",
        "phi affine on components of {u_mu < u_theta}",
        phi.kinks().into_iter().filter(|(p, _)| dom.in_interior(p)).map(|(p, inc)| {
            let gap = theta.potential(&p) - mu.potential(&p);
            let v = S::half() * gap * inc.abs();
            (p, v)
        }),
        tol,
    );
    let c3 = clause(
        "iii",
        "psi affine on components of {u_theta < u_nu}",
        psi.kinks().into_iter().filter(|(p, _)| dom.in_interior(p)).map(|(p, inc)| {
            let gap = nu.potential(&p) - theta.potential(&p);
            let v = S::half() * gap * inc.abs();
            (p, v)
        }),
        tol,
    );
    let c4 = clause(
        "iv",
        "phi has no jump at an endpoint charged by theta",
        dom.boundary_points().into_iter().map(|b| {
            let v = phi.offset_at(&b).abs() * theta.atom_at(&b);
            (b, v)
        }),
        tol,
    );
    let c5 = clause(
        "v",
        "psi has no jump at an endpoint where theta < nu",
        dom.boundary_points().into_iter().map(|b| {
            let v = psi.offset_at(&b).abs() * (nu.atom_at(&b) - theta.atom_at(&b));
            (b, v)
        }),
        tol,
    );
    let gap = sol.dual.cost(mu, nu) - theta.integrate(|x| f.eval(x));
    DualDiagnostics { feasibility, clauses: vec![c1, c2, c3, c4, c5], gap }
}

/// Auxiliary value for a pair that need not be irreducible.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposedSolution<S> {
    pub components: Vec<AuxiliarySolution<S>>,
    /// `nu_static(f)` for the part of `nu` that cannot move.
    pub static_value: S,
    pub value: S,
}

/// Splits into irreducible components, solves each on the part of `grid`
/// inside its closure, and adds `f` integrated against the static residue.
pub fn solve_nonirreducible<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    grid: &[S],
) -> Result<DecomposedSolution<S>> {
    let decomposition = irreducible_components_tol(mu, nu, &S::default_tol())?;
    let mut components = Vec::with_capacity(decomposition.components.len());
    for c in &decomposition.components {
        let mut problem = AuxiliaryProblem::with_domain(&c.mu, &c.nu, f, grid, c.domain.clone())?;
        problem.solve()?;
        components.push(problem.solution.expect("solved"));
    }
    let static_value = decomposition
        .static_residue
        .as_ref()
        .map(|m| m.integrate(|x| f.eval(x)))
        .unwrap_or_else(S::zero);
    let value = sum(components.iter().map(|c| c.value.clone())) + static_value.clone();
    Ok(DecomposedSolution { components, static_value, value })
}
