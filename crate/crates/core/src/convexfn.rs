//! Continuous piecewise-linear functions with optional point offsets at the
//! closed endpoints of a domain, and the generalized integrals
//! `(theta_1 - theta_2)(chi)` and `mu(phi) + nu(psi)`.

use crate::error::{MotError, Result};
use crate::measures::{convex_order_leq_tol, sort_dedup, DiscreteMeasure, Domain};
use crate::scalar::{sum, Scalar};

/// Continuous piecewise-linear function on the line plus finitely many point
/// offsets. `f(x) = c(x) + offset(x)` where `c` interpolates `values` at
/// `breakpoints` and extends with the tail slopes. Offsets model the jumps
/// `Δχ` of concave or convex functions at closed domain endpoints: concave
/// functions may only drop there (offset <= 0), convex ones only rise.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearFn<S> {
    breakpoints: Vec<S>,
    values: Vec<S>,
    slope_left: S,
    slope_right: S,
    offsets: Vec<(S, S)>,
}

/// Curvature requirement checked by [`PiecewiseLinearFn::check_shape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Convex,
    Concave,
}

impl<S: Scalar> PiecewiseLinearFn<S> {
    pub fn new(breakpoints: Vec<S>, values: Vec<S>, slope_left: S, slope_right: S) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(MotError::InvalidFunction(format!(
                "{} breakpoints and {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MotError::InvalidFunction("breakpoints must be strictly increasing".into()));
        }
        Ok(Self { breakpoints, values, slope_left, slope_right, offsets: Vec::new() })
    }

    /// Interpolates the points and continues the outer segments linearly.
    pub fn interpolate(breakpoints: Vec<S>, values: Vec<S>) -> Result<Self> {
        let n = breakpoints.len();
        let (sl, sr) = if n >= 2 {
            (
                (values[1].clone() - values[0].clone()) / (breakpoints[1].clone() - breakpoints[0].clone()),
                (values[n - 1].clone() - values[n - 2].clone())
                    / (breakpoints[n - 1].clone() - breakpoints[n - 2].clone()),
            )
        } else {
            (S::zero(), S::zero())
        };
        Self::new(breakpoints, values, sl, sr)
    }

    /// Samples `f` on `points` and interpolates.
    pub fn sample<F: Fn(&S) -> S>(points: &[S], f: F) -> Result<Self> {
        let mut pts = points.to_vec();
        sort_dedup(&mut pts);
        let values = pts.iter().map(&f).collect();
        Self::interpolate(pts, values)
    }

    /// `x -> intercept + slope * x`.
    pub fn affine(intercept: S, slope: S) -> Self {
        Self {
            breakpoints: vec![S::zero()],
            values: vec![intercept],
            slope_left: slope.clone(),
            slope_right: slope,
            offsets: Vec::new(),
        }
    }

    pub fn zero() -> Self {
        Self::affine(S::zero(), S::zero())
    }

    /// `x -> intercept + slope * x + sum_g c_g |x - g|`.
    pub fn abs_combination(terms: &[(S, S)], intercept: S, slope: S) -> Self {
        let mut bps: Vec<S> = terms.iter().map(|(g, _)| g.clone()).collect();
        if bps.is_empty() {
            return Self::affine(intercept, slope);
        }
        sort_dedup(&mut bps);
        let eval = |x: &S| {
            intercept.clone()
                + slope.clone() * x.clone()
                + sum(terms.iter().map(|(g, c)| c.clone() * (x.clone() - g.clone()).abs()))
        };
        let values = bps.iter().map(eval).collect();
        let total = sum(terms.iter().map(|(_, c)| c.clone()));
        Self {
            breakpoints: bps,
            values,
            slope_left: slope.clone() - total.clone(),
            slope_right: slope + total,
            offsets: Vec::new(),
        }
    }

    /// `x -> c * (x - k)_+`.
    pub fn call(k: S, c: S) -> Self {
        Self {
            breakpoints: vec![k],
            values: vec![S::zero()],
            slope_left: S::zero(),
            slope_right: c,
            offsets: Vec::new(),
        }
    }

    /// Adds a point offset at `x`, so `f(x)` becomes `c(x) + offset`.
    pub fn with_offset(mut self, x: S, offset: S) -> Self {
        if offset.is_zero() {
            return self;
        }
        match self.offsets.iter_mut().find(|(p, _)| *p == x) {
            Some(slot) => slot.1 = slot.1.clone() + offset,
            None => {
                self.offsets.push((x, offset));
                self.offsets.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("comparable"));
            }
        }
        self.offsets.retain(|(_, o)| !o.is_zero());
        self
    }

    pub fn breakpoints(&self) -> &[S] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn slope_left(&self) -> &S {
        &self.slope_left
    }

    pub fn slope_right(&self) -> &S {
        &self.slope_right
    }

    pub fn offsets(&self) -> &[(S, S)] {
        &self.offsets
    }

    /// Offset at `x` (zero when there is none).
    pub fn offset_at(&self, x: &S) -> S {
        self.offsets.iter().find(|(p, _)| p == x).map(|(_, o)| o.clone()).unwrap_or_else(S::zero)
    }

    /// Index `i` with `breakpoints[i] <= x < breakpoints[i+1]`, or `None`
    /// left of the first breakpoint.
    fn segment(&self, x: &S) -> Option<usize> {
        match self.breakpoints.binary_search_by(|p| p.partial_cmp(x).expect("comparable")) {
            Ok(i) => Some(i),
            Err(0) => None,
            Err(i) => Some(i - 1),
        }
    }

    /// Continuous part.
    pub fn eval_continuous(&self, x: &S) -> S {
        let n = self.breakpoints.len();
        match self.segment(x) {
            None => self.values[0].clone() + self.slope_left.clone() * (x.clone() - self.breakpoints[0].clone()),
            Some(i) if i + 1 == n => {
                self.values[i].clone() + self.slope_right.clone() * (x.clone() - self.breakpoints[i].clone())
            }
            Some(i) => {
                let (x0, x1) = (&self.breakpoints[i], &self.breakpoints[i + 1]);
                let (y0, y1) = (&self.values[i], &self.values[i + 1]);
                y0.clone() + (y1.clone() - y0.clone()) * (x.clone() - x0.clone()) / (x1.clone() - x0.clone())
            }
        }
    }

    pub fn eval(&self, x: &S) -> S {
        let c = self.eval_continuous(x);
        if self.offsets.is_empty() {
            c
        } else {
            c + self.offset_at(x)
        }
    }

    /// Slopes of the interior segments.
    pub fn segment_slopes(&self) -> Vec<S> {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, y)| (y[1].clone() - y[0].clone()) / (x[1].clone() - x[0].clone()))
            .collect()
    }

    /// Left derivative of the continuous part.
    pub fn left_derivative(&self, x: &S) -> S {
        let n = self.breakpoints.len();
        match self.breakpoints.binary_search_by(|p| p.partial_cmp(x).expect("comparable")) {
            Ok(0) | Err(0) => self.slope_left.clone(),
            Ok(i) => self.segment_slope(i - 1),
            Err(i) if i == n => self.slope_right.clone(),
            Err(i) => self.segment_slope(i - 1),
        }
    }

    /// Right derivative of the continuous part.
    pub fn right_derivative(&self, x: &S) -> S {
        let n = self.breakpoints.len();
        match self.segment(x) {
            None => self.slope_left.clone(),
            Some(i) if i + 1 == n => self.slope_right.clone(),
            Some(i) => self.segment_slope(i),
        }
    }

    fn segment_slope(&self, i: usize) -> S {
        (self.values[i + 1].clone() - self.values[i].clone())
            / (self.breakpoints[i + 1].clone() - self.breakpoints[i].clone())
    }

    /// Slope increments (right minus left derivative) at each breakpoint;
    /// these are the atoms of the second-derivative measure.
    pub fn kinks(&self) -> Vec<(S, S)> {
        let n = self.breakpoints.len();
        let slopes = self.segment_slopes();
        (0..n)
            .map(|i| {
                let left = if i == 0 { self.slope_left.clone() } else { slopes[i - 1].clone() };
                let right = if i + 1 == n { self.slope_right.clone() } else { slopes[i].clone() };
                (self.breakpoints[i].clone(), right - left)
            })
            .collect()
    }

    /// Checks the requested curvature on `J`: kinks inside `I` and offsets
    /// at the closed endpoints must have the right sign, and no offset may
    /// sit inside `I`.
    pub fn check_shape(&self, shape: Shape, dom: &Domain<S>, tol: &S) -> bool {
        let sign_ok = |v: &S| match shape {
            Shape::Convex => *v >= -tol.clone(),
            Shape::Concave => *v <= tol.clone(),
        };
        let kinks_ok = self.kinks().iter().filter(|(p, _)| dom.in_interior(p)).all(|(_, inc)| sign_ok(inc));
        let offsets_ok = self.offsets.iter().all(|(p, o)| {
            if dom.in_interior(p) {
                o.abs() <= *tol
            } else if dom.is_boundary(p) {
                sign_ok(o)
            } else {
                true
            }
        });
        kinks_ok && offsets_ok
    }

    /// Sum of two functions.
    pub fn add(&self, other: &Self) -> Self {
        let mut bps: Vec<S> = self.breakpoints.iter().chain(&other.breakpoints).cloned().collect();
        sort_dedup(&mut bps);
        let values = bps.iter().map(|x| self.eval_continuous(x) + other.eval_continuous(x)).collect();
        let mut out = Self {
            breakpoints: bps,
            values,
            slope_left: self.slope_left.clone() + other.slope_left.clone(),
            slope_right: self.slope_right.clone() + other.slope_right.clone(),
            offsets: self.offsets.clone(),
        };
        for (p, o) in &other.offsets {
            out = out.with_offset(p.clone(), o.clone());
        }
        out
    }

    pub fn scale(&self, c: &S) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self.values.iter().map(|v| v.clone() * c.clone()).collect(),
            slope_left: self.slope_left.clone() * c.clone(),
            slope_right: self.slope_right.clone() * c.clone(),
            offsets: self.offsets.iter().filter(|_| !c.is_zero()).map(|(p, o)| (p.clone(), o.clone() * c.clone())).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(&-S::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    /// `f + intercept + slope * x`.
    pub fn add_affine(&self, intercept: S, slope: S) -> Self {
        Self {
            breakpoints: self.breakpoints.clone(),
            values: self
                .breakpoints
                .iter()
                .zip(&self.values)
                .map(|(x, v)| v.clone() + intercept.clone() + slope.clone() * x.clone())
                .collect(),
            slope_left: self.slope_left.clone() + slope.clone(),
            slope_right: self.slope_right.clone() + slope,
            offsets: self.offsets.clone(),
        }
    }

    /// Largest absolute slope, used as a Lipschitz bound.
    pub fn lipschitz(&self) -> S {
        self.segment_slopes()
            .into_iter()
            .chain([self.slope_left.clone(), self.slope_right.clone()])
            .map(|s| s.abs())
            .fold(S::zero(), S::max_of)
    }

    pub fn to_f64(&self) -> PiecewiseLinearFn<f64> {
        let c = |x: &S| x.to_f64_lossy();
        PiecewiseLinearFn {
            breakpoints: self.breakpoints.iter().map(c).collect(),
            values: self.values.iter().map(c).collect(),
            slope_left: c(&self.slope_left),
            slope_right: c(&self.slope_right),
            offsets: self.offsets.iter().map(|(p, o)| (c(p), c(o))).collect(),
        }
    }
}

impl PiecewiseLinearFn<f64> {
    pub fn to_exact<S: Scalar>(&self) -> PiecewiseLinearFn<S> {
        let c = |x: &f64| S::from_f64_exact(*x);
        PiecewiseLinearFn {
            breakpoints: self.breakpoints.iter().map(c).collect(),
            values: self.values.iter().map(c).collect(),
            slope_left: c(&self.slope_left),
            slope_right: c(&self.slope_right),
            offsets: self.offsets.iter().map(|(p, o)| (c(p), c(o))).collect(),
        }
    }
}

/// Dual feasible object: `phi` concave and `psi` convex on `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualPair<S> {
    pub phi: PiecewiseLinearFn<S>,
    pub psi: PiecewiseLinearFn<S>,
}

impl<S: Scalar> DualPair<S> {
    pub fn new(phi: PiecewiseLinearFn<S>, psi: PiecewiseLinearFn<S>, dom: &Domain<S>, tol: &S) -> Result<Self> {
        if !phi.check_shape(Shape::Concave, dom, tol) {
            return Err(MotError::InvalidFunction("phi is not concave on the domain".into()));
        }
        if !psi.check_shape(Shape::Convex, dom, tol) {
            return Err(MotError::InvalidFunction("psi is not convex on the domain".into()));
        }
        Ok(Self { phi, psi })
    }

    /// `phi(x) + psi(x)`.
    pub fn eval_sum(&self, x: &S) -> S {
        self.phi.eval(x) + self.psi.eval(x)
    }

    /// `mu(phi) + nu(psi)` as plain finite sums.
    pub fn cost(&self, mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>) -> S {
        mu.integrate(|x| self.phi.eval(x)) + nu.integrate(|x| self.psi.eval(x))
    }

    pub fn to_f64(&self) -> DualPair<f64> {
        DualPair { phi: self.phi.to_f64(), psi: self.psi.to_f64() }
    }
}

/// `(t1 - t2)(chi)` for concave `chi`:
/// half the integral of `u_t2 - u_t1` against `-chi''` over `I`, plus the
/// endpoint jumps of `chi` weighted by the mass `t2` adds there.
pub fn concave_diff_integral<S: Scalar>(
    t1: &DiscreteMeasure<S>,
    t2: &DiscreteMeasure<S>,
    chi: &PiecewiseLinearFn<S>,
    dom: &Domain<S>,
) -> Result<S> {
    let tol = S::default_tol();
    if !convex_order_leq_tol(t1, t2, &tol) {
        return Err(MotError::NotInConvexOrder("t1 is not dominated by t2".into()));
    }
    if !chi.check_shape(Shape::Concave, dom, &tol) {
        return Err(MotError::ModeratorInvalid);
    }
    let curvature = sum(chi
        .kinks()
        .into_iter()
        .filter(|(p, _)| dom.in_interior(p))
        .map(|(p, inc)| (t2.potential(&p) - t1.potential(&p)) * (-inc)));
    let jumps = sum(dom
        .boundary_points()
        .into_iter()
        .map(|b| chi.offset_at(&b).abs() * (t2.atom_at(&b) - t1.atom_at(&b))));
    Ok(S::half() * curvature + jumps)
}

/// Finite one-step transport `(x1, x2, mass)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OneStepCoupling<S> {
    pub atoms: Vec<(S, S, S)>,
}

impl<S: Scalar> OneStepCoupling<S> {
    pub fn source(&self) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::from_atoms(self.atoms.iter().map(|(x, _, w)| (x.clone(), w.clone())))
    }

    pub fn target(&self) -> Result<DiscreteMeasure<S>> {
        DiscreteMeasure::from_atoms(self.atoms.iter().map(|(_, y, w)| (y.clone(), w.clone())))
    }

    /// Largest `|E[x2 | x1] - x1|` over source atoms.
    pub fn martingale_residual(&self) -> S {
        let mut sources: Vec<S> = self.atoms.iter().map(|(x, _, _)| x.clone()).collect();
        sort_dedup(&mut sources);
        sources
            .iter()
            .map(|x1| {
                let mass = sum(self.atoms.iter().filter(|a| a.0 == *x1).map(|a| a.2.clone()));
                let drift = sum(self
                    .atoms
                    .iter()
                    .filter(|a| a.0 == *x1)
                    .map(|a| a.2.clone() * (a.1.clone() - x1.clone())));
                (drift / mass).abs()
            })
            .fold(S::zero(), S::max_of)
    }
}

/// `sum over source atoms of t1(x1) * (chi(x1) - E[chi(x2) | x1])`.
pub fn disintegration_integral<S: Scalar>(coupling: &OneStepCoupling<S>, chi: &PiecewiseLinearFn<S>) -> Result<S> {
    let tol = S::default_tol() * S::from_int(1000);
    let residual = coupling.martingale_residual();
    if residual > tol {
        return Err(MotError::KernelNotMartingale(format!("conditional drift {residual}")));
    }
    Ok(sum(coupling.atoms.iter().map(|(x1, x2, w)| w.clone() * (chi.eval(x1) - chi.eval(x2)))))
}

/// `mu(phi - chi) + nu(psi + chi) + (mu - nu)(chi)` for a concave moderator
/// `chi`. For finite discrete measures every moderator gives the same value.
pub fn generalized_pair_integral<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    pair: &DualPair<S>,
    moderator: &PiecewiseLinearFn<S>,
    dom: &Domain<S>,
) -> Result<S> {
    let diff = concave_diff_integral(mu, nu, moderator, dom)?;
    let first = mu.integrate(|x| pair.phi.eval(x) - moderator.eval(x));
    let second = nu.integrate(|x| pair.psi.eval(x) + moderator.eval(x));
    Ok(first + second + diff)
}

/// Left derivative of a convex `psi` at a point of `I`; a valid element of
/// the subdifferential. For concave `phi` the same call yields a
/// superderivative.
pub fn subderivative<S: Scalar>(psi: &PiecewiseLinearFn<S>, x: &S, dom: &Domain<S>) -> Result<S> {
    if !dom.in_interior(x) {
        return Err(MotError::OutsideInterior(x.to_f64_lossy()));
    }
    Ok(psi.left_derivative(x))
}

/// Derivative used by the hedge: left derivative on `I`, zero elsewhere.
pub fn hedge_derivative<S: Scalar>(f: &PiecewiseLinearFn<S>, x: &S, dom: &Domain<S>) -> S {
    if dom.in_interior(x) {
        f.left_derivative(x)
    } else {
        S::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn unit_domain() -> Domain<Rational> {
        Domain::new(q(-1, 1), q(1, 1), true, true).unwrap()
    }

    fn sym() -> DiscreteMeasure<Rational> {
        DiscreteMeasure::new(vec![q(-1, 1), q(1, 1)], vec![q(1, 2), q(1, 2)]).unwrap()
    }

    /// psi with psi(-1) = psi(1) = 3 and psi(0) = 1.
    fn worked_psi() -> PiecewiseLinearFn<Rational> {
        PiecewiseLinearFn::interpolate(vec![q(-1, 1), q(0, 1), q(1, 1)], vec![q(3, 1), q(1, 1), q(3, 1)]).unwrap()
    }

    #[test]
    fn evaluation_and_derivatives() {
        let f = worked_psi();
        assert_eq!(f.eval(&q(1, 2)), q(2, 1));
        assert_eq!(f.eval(&q(2, 1)), q(5, 1));
        assert_eq!(f.eval(&q(-3, 1)), q(7, 1));
        assert_eq!(f.left_derivative(&q(0, 1)), q(-2, 1));
        assert_eq!(f.right_derivative(&q(0, 1)), q(2, 1));
        assert_eq!(f.left_derivative(&q(1, 2)), q(2, 1));
        assert_eq!(f.kinks()[1], (q(0, 1), q(4, 1)));
    }

    #[test]
    fn subderivative_conventions() {
        let dom = unit_domain();
        let abs = PiecewiseLinearFn::abs_combination(&[(q(0, 1), q(1, 1))], q(0, 1), q(0, 1));
        assert_eq!(subderivative(&abs, &q(0, 1), &dom).unwrap(), q(-1, 1));
        let lin = PiecewiseLinearFn::affine(q(2, 1), q(-3, 1));
        assert_eq!(subderivative(&lin, &q(1, 3), &dom).unwrap(), q(-3, 1));
        assert_eq!(subderivative(&worked_psi(), &q(1, 2), &dom).unwrap(), q(2, 1));
        assert!(matches!(subderivative(&lin, &q(1, 1), &dom), Err(MotError::OutsideInterior(_))));
        assert_eq!(hedge_derivative(&worked_psi(), &q(1, 1), &dom), q(0, 1));
    }

    #[test]
    fn shape_checks_respect_offsets() {
        let dom = unit_domain();
        let dip = PiecewiseLinearFn::affine(q(0, 1), q(0, 1)).with_offset(q(1, 1), q(-1, 1));
        assert!(dip.check_shape(Shape::Concave, &dom, &q(0, 1)));
        assert!(!dip.check_shape(Shape::Convex, &dom, &q(0, 1)));
        let inner = PiecewiseLinearFn::affine(q(0, 1), q(0, 1)).with_offset(q(0, 1), q(-1, 1));
        assert!(!inner.check_shape(Shape::Concave, &dom, &q(0, 1)));
        assert!(worked_psi().check_shape(Shape::Convex, &dom, &q(0, 1)));
        assert!(!worked_psi().check_shape(Shape::Concave, &dom, &q(0, 1)));
    }

    #[test]
    fn concave_diff_integral_examples() {
        let dom = unit_domain();
        let d0 = DiscreteMeasure::dirac(q(0, 1));
        let affine = PiecewiseLinearFn::affine(q(1, 1), q(5, 1));
        assert_eq!(concave_diff_integral(&d0, &sym(), &affine, &dom).unwrap(), q(0, 1));
        let neg_abs = PiecewiseLinearFn::abs_combination(&[(q(0, 1), q(-1, 1))], q(0, 1), q(0, 1));
        assert_eq!(concave_diff_integral(&sym(), &sym(), &neg_abs, &dom).unwrap(), q(0, 1));
        assert_eq!(concave_diff_integral(&d0, &sym(), &neg_abs, &dom).unwrap(), q(1, 1));
        // jump at the right endpoint: nu adds 1/2 there
        let dipped = affine.clone().with_offset(q(1, 1), q(-2, 1));
        assert_eq!(concave_diff_integral(&d0, &sym(), &dipped, &dom).unwrap(), q(1, 1));
        assert!(matches!(
            concave_diff_integral(&d0, &sym(), &neg_abs.neg(), &dom),
            Err(MotError::ModeratorInvalid)
        ));
        assert!(matches!(
            concave_diff_integral(&sym(), &d0, &neg_abs, &dom),
            Err(MotError::NotInConvexOrder(_))
        ));
    }

    #[test]
    fn disintegration_matches_on_examples() {
        let neg_abs = PiecewiseLinearFn::abs_combination(&[(q(0, 1), q(-1, 1))], q(0, 1), q(0, 1));
        let split = OneStepCoupling { atoms: vec![(q(0, 1), q(-1, 1), q(1, 2)), (q(0, 1), q(1, 1), q(1, 2))] };
        assert_eq!(disintegration_integral(&split, &neg_abs).unwrap(), q(1, 1));
        let identity = OneStepCoupling { atoms: vec![(q(-1, 1), q(-1, 1), q(1, 2)), (q(1, 1), q(1, 1), q(1, 2))] };
        assert_eq!(disintegration_integral(&identity, &neg_abs).unwrap(), q(0, 1));
        let affine = PiecewiseLinearFn::affine(q(3, 1), q(-7, 1));
        assert_eq!(disintegration_integral(&split, &affine).unwrap(), q(0, 1));
        let drift = OneStepCoupling { atoms: vec![(q(0, 1), q(1, 1), q(1, 1))] };
        assert!(matches!(disintegration_integral(&drift, &affine), Err(MotError::KernelNotMartingale(_))));
    }

    #[test]
    fn worked_example_pair_value() {
        let dom = unit_domain();
        let mu = DiscreteMeasure::dirac(q(0, 1));
        let nu = DiscreteMeasure::uniform(vec![q(-1, 1), q(0, 1), q(1, 1)]).unwrap();
        let pair = DualPair::new(PiecewiseLinearFn::zero(), worked_psi(), &dom, &q(0, 1)).unwrap();
        let zero = PiecewiseLinearFn::zero();
        assert_eq!(generalized_pair_integral(&mu, &nu, &pair, &zero, &dom).unwrap(), q(7, 3));
        let concave = worked_psi().neg();
        assert_eq!(generalized_pair_integral(&mu, &nu, &pair, &concave, &dom).unwrap(), q(7, 3));
        assert_eq!(pair.cost(&mu, &nu), q(7, 3));
    }

    #[test]
    fn algebra() {
        let f = worked_psi();
        let g = PiecewiseLinearFn::call(q(1, 2), q(2, 1));
        let h = f.add(&g);
        for x in [q(-2, 1), q(-1, 2), q(0, 1), q(1, 2), q(3, 4), q(2, 1)] {
            assert_eq!(h.eval(&x), f.eval(&x) + g.eval(&x));
            assert_eq!(f.sub(&g).eval(&x), f.eval(&x) - g.eval(&x));
        }
        assert_eq!(f.lipschitz(), q(2, 1));
    }
}
