//! Dense two-phase simplex over any [`Scalar`].
//!
//! The tableau is pivoted with Dantzig's rule and switches to Bland's rule
//! after a run of degenerate pivots. With floating point scalars the basis is
//! refactorized at the end (and every few hundred pivots) so that the
//! reported primal and dual values come from a fresh solve against the
//! original data rather than from the accumulated tableau.

#![allow(clippy::needless_range_loop)]

use std::fmt::Write as _;

use crate::error::{MotError, Result};
use crate::scalar::{sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint<S> {
    pub coeffs: Vec<S>,
    pub relation: Relation,
    pub rhs: S,
}

/// `opt c.x` subject to rows `a_i.x (<=|=|>=) b_i` and `x >= lower`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    pub sense: Sense,
    pub objective: Vec<S>,
    pub constraints: Vec<Constraint<S>>,
    pub lower_bounds: Vec<S>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(sense: Sense, objective: Vec<S>) -> Self {
        let n = objective.len();
        Self { sense, objective, constraints: Vec::new(), lower_bounds: vec![S::zero(); n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<S>, relation: Relation, rhs: S) -> usize {
        self.constraints.push(Constraint { coeffs, relation, rhs });
        self.constraints.len() - 1
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.lower_bounds.len() != n {
            return Err(MotError::NumericalFailure("lower bounds do not match the variable count".into()));
        }
        if let Some(i) = self.constraints.iter().position(|c| c.coeffs.len() != n) {
            return Err(MotError::NumericalFailure(format!("row {i} has the wrong length")));
        }
        Ok(())
    }

    /// Plain-text dump for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let sense = match self.sense {
            Sense::Maximize => "max",
            Sense::Minimize => "min",
        };
        let row = |c: &[S]| c.iter().map(|v| v.render()).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "{sense} {}", row(&self.objective));
        for c in &self.constraints {
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "=",
                Relation::Ge => ">=",
            };
            let _ = writeln!(out, "  {} {rel} {}", row(&c.coeffs), c.rhs.render());
        }
        let _ = writeln!(out, "  lower {}", row(&self.lower_bounds));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Solver result. `duals[i]` is the shadow price of row `i`, the rate of
/// change of the optimal value in `rhs_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpOutcome<S> {
    pub status: LpStatus,
    pub primal: Vec<S>,
    pub duals: Vec<S>,
    pub objective: S,
}

impl<S: Scalar> LpOutcome<S> {
    fn without_solution(status: LpStatus) -> Self {
        Self { status, primal: Vec::new(), duals: Vec::new(), objective: S::zero() }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// Reduced costs `c_j - sum_i y_i a_ij`.
    pub fn reduced_costs(&self, lp: &LinearProgram<S>) -> Vec<S> {
        (0..lp.num_vars())
            .map(|j| {
                lp.objective[j].clone()
                    - sum(lp.constraints.iter().zip(&self.duals).map(|(c, y)| c.coeffs[j].clone() * y.clone()))
            })
            .collect()
    }

    /// `sum_i y_i b_i + sum_j r_j l_j`; equals the primal value at optimality.
    pub fn dual_objective(&self, lp: &LinearProgram<S>) -> S {
        let rows = sum(lp.constraints.iter().zip(&self.duals).map(|(c, y)| c.rhs.clone() * y.clone()));
        let bounds = sum(self.reduced_costs(lp).into_iter().zip(&lp.lower_bounds).map(|(r, l)| r * l.clone()));
        rows + bounds
    }
}

#[derive(Debug, Clone)]
pub struct LpOptions<S> {
    /// Pivoting and feasibility tolerance.
    pub tol: S,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
    /// Pivots between refactorizations (floating point only).
    pub refactor_every: usize,
    pub max_iterations: usize,
}

impl<S: Scalar> Default for LpOptions<S> {
    fn default() -> Self {
        let tol = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-10) };
        Self { tol, bland_after: 50, refactor_every: 400, max_iterations: 200_000 }
    }
}

pub fn solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpOutcome<S>> {
    solve_with(lp, &LpOptions::default())
}

pub fn solve_with<S: Scalar>(lp: &LinearProgram<S>, opts: &LpOptions<S>) -> Result<LpOutcome<S>> {
    lp.validate()?;
    let mut std = StandardForm::build(lp);
    if std.m == 0 {
        return solve_unconstrained(lp, opts);
    }
    let mut tab = Tableau::initial(&std);

    // phase one: drive the artificial variables out
    let phase_one: Vec<S> = (0..std.ncols)
        .map(|j| if std.is_artificial(j) { -S::one() } else { S::zero() })
        .collect();
    tab.set_objective(&std, &phase_one);
    match tab.run(&std, opts, &phase_one, true)? {
        Pivoting::Optimal => {}
        Pivoting::Unbounded => return Err(MotError::NumericalFailure("phase one cannot be unbounded".into())),
    }
    let scale = S::one() + std.b.iter().fold(S::zero(), |m, v| S::max_of(m, v.abs()));
    if -tab.value() > opts.tol.clone() * scale * S::from_int(100) {
        return Ok(LpOutcome::without_solution(LpStatus::Infeasible));
    }
    tab.expel_artificials(&mut std, opts);

    let phase_two = std.c.clone();
    tab.set_objective(&std, &phase_two);
    match tab.run(&std, opts, &phase_two, false)? {
        Pivoting::Optimal => {}
        Pivoting::Unbounded => return Ok(LpOutcome::without_solution(LpStatus::Unbounded)),
    }
    if !S::EXACT {
        // polish: refactorize and resume until the fresh basis is optimal
        for _ in 0..5 {
            tab.refactor(&std)?;
            tab.set_objective(&std, &phase_two);
            if tab.entering(&std, opts, false, false).is_none() {
                break;
            }
            if tab.run(&std, opts, &phase_two, false)? == Pivoting::Unbounded {
                return Ok(LpOutcome::without_solution(LpStatus::Unbounded));
            }
        }
    }
    std.extract(lp, &tab)
}

fn solve_unconstrained<S: Scalar>(lp: &LinearProgram<S>, opts: &LpOptions<S>) -> Result<LpOutcome<S>> {
    let sign = if lp.sense == Sense::Maximize { S::one() } else { -S::one() };
    if lp.objective.iter().any(|c| c.clone() * sign.clone() > opts.tol) {
        return Ok(LpOutcome::without_solution(LpStatus::Unbounded));
    }
    let primal = lp.lower_bounds.clone();
    let objective = sum(lp.objective.iter().zip(&primal).map(|(c, x)| c.clone() * x.clone()));
    Ok(LpOutcome { status: LpStatus::Optimal, primal, duals: Vec::new(), objective })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pivoting {
    Optimal,
    Unbounded,
}

/// `max c.x, A x = b, x >= 0` with `b >= 0`, built from a general program by
/// shifting lower bounds, equilibrating rows, flipping signs and adding
/// slack and artificial columns.
struct StandardForm<S> {
    m: usize,
    n_struct: usize,
    ncols: usize,
    a: Vec<Vec<S>>,
    b: Vec<S>,
    c: Vec<S>,
    first_artificial: usize,
    /// Original row of each artificial column.
    artificial_origin: Vec<usize>,
    /// Multiplier applied to each original row.
    row_factor: Vec<S>,
    /// Original row index of each active row.
    origin: Vec<usize>,
    initial_basis: Vec<usize>,
}

impl<S: Scalar> StandardForm<S> {
    fn build(lp: &LinearProgram<S>) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();
        let maximize = lp.sense == Sense::Maximize;
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        let mut row_factor = Vec::with_capacity(m);
        for con in &lp.constraints {
            let shift = sum(con.coeffs.iter().zip(&lp.lower_bounds).map(|(a, l)| a.clone() * l.clone()));
            let mut b = con.rhs.clone() - shift;
            let mut coeffs = con.coeffs.clone();
            let mut rel = con.relation;
            let largest = coeffs.iter().fold(S::zero(), |acc, v| S::max_of(acc, v.abs()));
            let mut factor = if S::EXACT || largest.is_zero() { S::one() } else { S::one() / largest };
            if b < S::zero() {
                factor = -factor;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            for v in coeffs.iter_mut() {
                *v = v.clone() * factor.clone();
            }
            b = b * factor.clone();
            rows.push(coeffs);
            rhs.push(b);
            rels.push(rel);
            row_factor.push(factor);
        }
        let n_slack = rels.iter().filter(|r| **r != Relation::Eq).count();
        let n_art = rels.iter().filter(|r| **r != Relation::Le).count();
        let first_artificial = n + n_slack;
        let ncols = first_artificial + n_art;
        let mut a = vec![vec![S::zero(); ncols]; m];
        let mut basis = vec![0; m];
        let mut artificial_origin = Vec::with_capacity(n_art);
        let (mut s, mut t) = (n, first_artificial);
        for i in 0..m {
            a[i][..n].clone_from_slice(&rows[i]);
            match rels[i] {
                Relation::Le => {
                    a[i][s] = S::one();
                    basis[i] = s;
                    s += 1;
                }
                Relation::Ge => {
                    a[i][s] = -S::one();
                    s += 1;
                    artificial_origin.push(i);
                    a[i][t] = S::one();
                    basis[i] = t;
                    t += 1;
                }
                Relation::Eq => {
                    artificial_origin.push(i);
                    a[i][t] = S::one();
                    basis[i] = t;
                    t += 1;
                }
            }
        }
        let mut c = vec![S::zero(); ncols];
        for j in 0..n {
            c[j] = if maximize { lp.objective[j].clone() } else { -lp.objective[j].clone() };
        }
        Self {
            m,
            n_struct: n,
            ncols,
            a,
            b: rhs,
            c,
            first_artificial,
            artificial_origin,
            row_factor,
            origin: (0..m).collect(),
            initial_basis: basis,
        }
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.first_artificial
    }

    /// Drops the original constraint whose artificial is column `j`.
    fn drop_row_of(&mut self, j: usize) {
        let origin = self.artificial_origin[j - self.first_artificial];
        let r = self.origin.iter().position(|&o| o == origin).expect("row still active");
        self.a.remove(r);
        self.b.remove(r);
        self.origin.remove(r);
        self.m -= 1;
    }

    fn extract(&self, lp: &LinearProgram<S>, tab: &Tableau<S>) -> Result<LpOutcome<S>> {
        let mut xs = vec![S::zero(); self.ncols];
        for (i, &j) in tab.basis.iter().enumerate() {
            xs[j] = tab.rows[i][self.ncols].clone();
        }
        let zero_tol = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-13) };
        let primal: Vec<S> = (0..self.n_struct)
            .map(|j| {
                let v = if xs[j] < S::zero() && -xs[j].clone() <= zero_tol.clone() * S::from_int(1000) {
                    S::zero()
                } else {
                    xs[j].clone()
                };
                lp.lower_bounds[j].clone() + v
            })
            .collect();
        // y^T B = c_B for the active rows, solved against the original data
        let bt: Vec<Vec<S>> = (0..self.m).map(|k| tab.basis.iter().map(|&j| self.a[k][j].clone()).collect()).collect();
        let bt = transpose(&bt);
        let cb: Vec<Vec<S>> = tab.basis.iter().map(|&j| vec![self.c[j].clone()]).collect();
        let y = solve_dense(bt, cb)?;
        let sign = if lp.sense == Sense::Maximize { S::one() } else { -S::one() };
        let mut duals = vec![S::zero(); lp.constraints.len()];
        for (k, row) in y.into_iter().enumerate() {
            let i = self.origin[k];
            duals[i] = row[0].clone() * self.row_factor[i].clone() * sign.clone();
        }
        let objective = sum(lp.objective.iter().zip(&primal).map(|(c, x)| c.clone() * x.clone()));
        Ok(LpOutcome { status: LpStatus::Optimal, primal, duals, objective })
    }
}

struct Tableau<S> {
    /// `m` rows of `ncols + 1` entries; the last entry is the basic value.
    rows: Vec<Vec<S>>,
    /// Reduced costs with `-z` in the last slot.
    obj: Vec<S>,
    basis: Vec<usize>,
    pivots_since_refactor: usize,
}

impl<S: Scalar> Tableau<S> {
    fn initial(std: &StandardForm<S>) -> Self {
        let rows = (0..std.m)
            .map(|i| {
                let mut r = std.a[i].clone();
                r.push(std.b[i].clone());
                r
            })
            .collect();
        Self { rows, obj: Vec::new(), basis: std.initial_basis.clone(), pivots_since_refactor: 0 }
    }

    fn value(&self) -> S {
        -self.obj.last().cloned().unwrap_or_else(S::zero)
    }

    fn set_objective(&mut self, std: &StandardForm<S>, c: &[S]) {
        let width = std.ncols + 1;
        let mut obj: Vec<S> = c.to_vec();
        obj.push(S::zero());
        for (i, &j) in self.basis.iter().enumerate() {
            let cb = c[j].clone();
            if cb.is_zero() {
                continue;
            }
            for k in 0..width {
                obj[k] = obj[k].clone() - cb.clone() * self.rows[i][k].clone();
            }
        }
        self.obj = obj;
    }

    fn entering(&self, std: &StandardForm<S>, opts: &LpOptions<S>, allow_artificial: bool, bland: bool) -> Option<usize> {
        let candidates = (0..std.ncols).filter(|&j| allow_artificial || !std.is_artificial(j));
        if bland {
            candidates.into_iter().find(|&j| self.obj[j] > opts.tol)
        } else {
            let mut best: Option<(usize, S)> = None;
            for j in candidates {
                if self.obj[j] > opts.tol && best.as_ref().is_none_or(|(_, v)| self.obj[j] > *v) {
                    best = Some((j, self.obj[j].clone()));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    fn leaving(&self, std: &StandardForm<S>, q: usize, opts: &LpOptions<S>, bland: bool) -> Option<usize> {
        let rhs = std.ncols;
        let mut best: Option<(usize, S)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            let a = &row[q];
            if *a <= opts.tol {
                continue;
            }
            let ratio = S::max_of(row[rhs].clone(), S::zero()) / a.clone();
            best = match best {
                None => Some((i, ratio)),
                Some((k, r)) => {
                    let tie = (ratio.clone() - r.clone()).abs() <= opts.tol;
                    let better = if tie {
                        if bland {
                            self.basis[i] < self.basis[k]
                        } else {
                            row[q].abs() > self.rows[k][q].abs()
                        }
                    } else {
                        ratio < r
                    };
                    if better {
                        Some((i, ratio))
                    } else {
                        Some((k, r))
                    }
                }
            };
        }
        best.map(|(i, _)| i)
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let width = self.rows[r].len();
        let p = self.rows[r][q].clone();
        for k in 0..width {
            self.rows[r][k] = self.rows[r][k].clone() / p.clone();
        }
        self.rows[r][q] = S::one();
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..width).filter(|&k| !pivot_row[k].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[q].is_zero() {
                continue;
            }
            let f = row[q].clone();
            for &k in &nz {
                row[k] = row[k].clone() - f.clone() * pivot_row[k].clone();
            }
            row[q] = S::zero();
        }
        let f = self.obj[q].clone();
        if !f.is_zero() {
            for &k in &nz {
                self.obj[k] = self.obj[k].clone() - f.clone() * pivot_row[k].clone();
            }
            self.obj[q] = S::zero();
        }
        self.basis[r] = q;
        self.pivots_since_refactor += 1;
    }

    fn run(&mut self, std: &StandardForm<S>, opts: &LpOptions<S>, c: &[S], allow_artificial: bool) -> Result<Pivoting> {
        let mut degenerate = 0usize;
        for _ in 0..opts.max_iterations {
            let bland = degenerate >= opts.bland_after;
            let Some(q) = self.entering(std, opts, allow_artificial, bland) else {
                return Ok(Pivoting::Optimal);
            };
            let Some(r) = self.leaving(std, q, opts, bland) else {
                return Ok(Pivoting::Unbounded);
            };
            let before = self.value();
            self.pivot(r, q);
            if self.value() > before.clone() + opts.tol.clone() * (S::one() + before.abs()) {
                degenerate = 0;
            } else {
                degenerate += 1;
            }
            if !S::EXACT && self.pivots_since_refactor >= opts.refactor_every {
                self.refactor(std)?;
                self.set_objective(std, c);
            }
        }
        Err(MotError::NumericalFailure(format!("simplex did not converge in {} pivots", opts.max_iterations)))
    }

    /// After phase one: pivot basic artificials out or drop redundant rows.
    fn expel_artificials(&mut self, std: &mut StandardForm<S>, opts: &LpOptions<S>) {
        let mut r = 0;
        while r < self.basis.len() {
            if !std.is_artificial(self.basis[r]) {
                r += 1;
                continue;
            }
            let mut best: Option<(usize, S)> = None;
            for j in 0..std.first_artificial {
                let v = self.rows[r][j].abs();
                if v > opts.tol.clone() * S::from_int(1000) && best.as_ref().is_none_or(|(_, b)| v > *b) {
                    best = Some((j, v));
                }
            }
            match best {
                Some((q, _)) => {
                    self.pivot(r, q);
                    r += 1;
                }
                None => {
                    // the row is a combination of the others, including the
                    // constraint this artificial belongs to
                    self.rows.remove(r);
                    let j = self.basis.remove(r);
                    std.drop_row_of(j);
                }
            }
        }
    }

    /// Recomputes `B^-1 [A | b]` from the original data for the current basis.
    fn refactor(&mut self, std: &StandardForm<S>) -> Result<()> {
        let bmat: Vec<Vec<S>> = (0..std.m).map(|i| self.basis.iter().map(|&j| std.a[i][j].clone()).collect()).collect();
        let rhs: Vec<Vec<S>> = (0..std.m)
            .map(|i| {
                let mut r = std.a[i].clone();
                r.push(std.b[i].clone());
                r
            })
            .collect();
        let mut rows = solve_dense(bmat, rhs)?;
        // basic columns are exactly the identity
        for (i, row) in rows.iter_mut().enumerate() {
            for (k, &j) in self.basis.iter().enumerate() {
                row[j] = if k == i { S::one() } else { S::zero() };
            }
        }
        self.rows = rows;
        self.pivots_since_refactor = 0;
        Ok(())
    }
}

fn transpose<S: Clone>(m: &[Vec<S>]) -> Vec<Vec<S>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len()).map(|j| m.iter().map(|row| row[j].clone()).collect()).collect()
}

/// Solves `M X = R` by Gaussian elimination with partial pivoting.
pub fn solve_dense<S: Scalar>(mut m: Vec<Vec<S>>, mut r: Vec<Vec<S>>) -> Result<Vec<Vec<S>>> {
    let n = m.len();
    let singular = if S::EXACT { S::zero() } else { S::from_f64_exact(1e-14) };
    for col in 0..n {
        let (p, best) = (col..n)
            .map(|i| (i, m[i][col].abs()))
            .fold((col, S::zero()), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        if best <= singular {
            return Err(MotError::NumericalFailure("singular basis".into()));
        }
        m.swap(col, p);
        r.swap(col, p);
        let pivot = m[col][col].clone();
        for i in 0..n {
            if i == col || m[i][col].is_zero() {
                continue;
            }
            let f = m[i][col].clone() / pivot.clone();
            for k in col..n {
                let v = m[col][k].clone();
                if !v.is_zero() {
                    m[i][k] = m[i][k].clone() - f.clone() * v;
                }
            }
            let (src, dst) = if i < col {
                let (a, b) = r.split_at_mut(col);
                (&b[0], &mut a[i])
            } else {
                let (a, b) = r.split_at_mut(i);
                (&a[col], &mut b[0])
            };
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                if !s.is_zero() {
                    *d = d.clone() - f.clone() * s.clone();
                }
            }
        }
    }
    for i in 0..n {
        let p = m[i][i].clone();
        for v in r[i].iter_mut() {
            *v = v.clone() / p.clone();
        }
    }
    Ok(r)
}
