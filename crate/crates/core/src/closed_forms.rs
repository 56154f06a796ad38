//! Geometric solutions for risk reversals and butterfly spreads.
//!
//! Both rest on the extreme lines through `(a, u_mu(a))` that stay below
//! `u_nu`. The optimal `theta` has the potential obtained by replacing
//! `u_nu` (or `u_mu`) by those lines near `a`, and the dual pair is a few
//! call spreads.

use crate::auxiliary::AuxiliarySolution;
use crate::convexfn::{DualPair, PiecewiseLinearFn};
use crate::error::{MotError, Result};
use crate::measures::{domain_of, sort_dedup, DiscreteMeasure, Domain};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TangentKind {
    /// Touches the graph of `u_nu` at a finite point.
    Tangent,
    /// Coincides with the asymptote of `u_nu`; the stored `z` is then the
    /// extreme atom of `nu` from which `u_nu` follows the asymptote.
    Asymptote,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentResult<S> {
    pub kind: TangentKind,
    /// Slope of the line.
    pub slope: S,
    /// Touch point: the atom of `nu` nearest to `a` realizing the slope.
    pub z: S,
}

/// `(u_nu(x) - u_mu(a)) / |x - a|`.
fn quotient<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, a: &S, x: &S) -> S {
    (nu.potential(x) - mu.potential(a)) / (x.clone() - a.clone()).abs()
}

fn interior_point<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, a: &S) -> Result<Domain<S>> {
    let dom = domain_of(mu, nu)?;
    if !dom.in_interior(a) {
        return Err(MotError::OutsideInterior(a.to_f64_lossy()));
    }
    Ok(dom)
}

/// Line through `(a, u_mu(a))` below `u_nu` with maximal slope
/// (`direction = 1`) or minimal slope (`direction = -1`).
///
/// For `direction = 1` the slope is the smallest quotient
/// `(u_nu(x) - u_mu(a)) / (x - a)` over atoms `x > a`; atoms left of `a`
/// never bind because `u_nu - line` is convex, nonnegative at `a` and zero
/// at the touch point. The mirror image gives `direction = -1`.
pub fn max_slope_tangent<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    a: &S,
    direction: i8,
) -> Result<TangentResult<S>> {
    interior_point(mu, nu, a)?;
    tangent_unchecked(mu, nu, a, direction)
}

fn tangent_unchecked<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    a: &S,
    direction: i8,
) -> Result<TangentResult<S>> {
    let right = direction > 0;
    let mut atoms: Vec<&S> = nu.support().iter().filter(|x| if right { *x > a } else { *x < a }).collect();
    if !right {
        // nearest first, so ties go to the atom closest to a
        atoms.reverse();
    }
    let tol = S::default_tol();
    let mut best: Option<(S, S)> = None;
    for x in atoms {
        let q = quotient(mu, nu, a, x);
        let better = match &best {
            None => true,
            Some((b, _)) => q < b.clone() - tol.clone() * (S::one() + b.abs()),
        };
        if better {
            best = Some((q, x.clone()));
        }
    }
    let (q, z) = best.ok_or_else(|| MotError::OutsideInterior(a.to_f64_lossy()))?;
    let m0 = mu.mass();
    // The slope reaches m0 only when mu sits on one side of a. With an atom
    // of mu at a itself the line still touches u_nu at a finite point, so
    // only mass strictly on one side counts as the asymptote case.
    let on_asymptote = q.approx_eq(&m0, &tol);
    let (weak, strict) = if right {
        (mu.support().iter().all(|x| x <= a), mu.support().iter().all(|x| x < a))
    } else {
        (mu.support().iter().all(|x| x >= a), mu.support().iter().all(|x| x > a))
    };
    if on_asymptote && !weak {
        return Err(MotError::ClosedFormInapplicable(format!(
            "tangent slope at {a} is numerically on the asymptote but mu has mass on both sides"
        )));
    }
    let asymptote = on_asymptote && strict;
    let slope = if right { q } else { -q };
    let kind = if asymptote { TangentKind::Asymptote } else { TangentKind::Tangent };
    Ok(TangentResult { kind, slope, z })
}

/// Measure whose potential is the convex piecewise-linear `u` with tails of
/// slope `-m0` and `m0`; atoms are half the slope increments at the kinks.
pub fn measure_from_potential<S: Scalar, U: Fn(&S) -> S>(kinks: &[S], u: U, m0: &S) -> Result<DiscreteMeasure<S>> {
    let mut pts = kinks.to_vec();
    sort_dedup(&mut pts);
    let values: Vec<S> = pts.iter().map(&u).collect();
    let mut slopes = vec![-m0.clone()];
    for i in 1..pts.len() {
        slopes.push((values[i].clone() - values[i - 1].clone()) / (pts[i].clone() - pts[i - 1].clone()));
    }
    slopes.push(m0.clone());
    let tol = S::default_tol() * (S::one() + m0.clone()) * S::from_int(100);
    let mut atoms = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        let w = (slopes[i + 1].clone() - slopes[i].clone()) * S::half();
        if w < -tol.clone() {
            return Err(MotError::NumericalFailure(format!("potential is not convex at {p}")));
        }
        if w > tol {
            atoms.push((p.clone(), w));
        }
    }
    DiscreteMeasure::from_atoms(atoms)
}

/// `-(a - x)_+ + (x - b)_+`.
pub fn risk_reversal_payoff<S: Scalar>(a: &S, b: &S) -> PiecewiseLinearFn<S> {
    PiecewiseLinearFn::new(vec![a.clone(), b.clone()], vec![S::zero(), S::zero()], S::one(), S::one())
        .expect("a < b")
}

/// `(x - (a - h))_+ - 2 (x - a)_+ + (x - (a + h))_+`.
pub fn butterfly_payoff<S: Scalar>(a: &S, h: &S) -> PiecewiseLinearFn<S> {
    PiecewiseLinearFn::new(
        vec![a.clone() - h.clone(), a.clone(), a.clone() + h.clone()],
        vec![S::zero(), h.clone(), S::zero()],
        S::zero(),
        S::zero(),
    )
    .expect("h > 0")
}

fn closed_form_grid<S: Scalar>(mu: &DiscreteMeasure<S>, nu: &DiscreteMeasure<S>, extra: &[S]) -> Vec<S> {
    let (lo, hi) = (nu.min_support(), nu.max_support());
    let mut g: Vec<S> = mu
        .support()
        .iter()
        .chain(nu.support())
        .chain(extra.iter().filter(|x| *x >= lo && *x <= hi))
        .cloned()
        .collect();
    sort_dedup(&mut g);
    g
}

/// Optimizers and value for the risk reversal with strikes `a < b`,
/// `a` inside `I`.
pub fn risk_reversal_closed_form<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    a: &S,
    b: &S,
) -> Result<AuxiliarySolution<S>> {
    if a >= b {
        return Err(MotError::ClosedFormInapplicable("risk reversal needs a < b".into()));
    }
    let dom = interior_point(mu, nu, a)?;
    let t = tangent_unchecked(mu, nu, a, 1)?;
    let (m0, m1) = (mu.mass(), mu.first_moment());
    let ua = mu.potential(a);
    let w = S::max_of(t.z.clone(), b.clone());
    let alpha = (b.clone() - a.clone()) / (w.clone() - a.clone());
    let (phi, psi) = match t.kind {
        TangentKind::Asymptote => (PiecewiseLinearFn::zero(), PiecewiseLinearFn::affine(-a.clone(), S::one())),
        TangentKind::Tangent => (
            PiecewiseLinearFn::call(a.clone(), -alpha.clone()),
            PiecewiseLinearFn::call(w.clone(), alpha).add_affine(-a.clone(), S::one()),
        ),
    };
    let value = match t.kind {
        TangentKind::Asymptote => m1 - a.clone() * m0.clone(),
        TangentKind::Tangent => {
            let q = (nu.potential(&w) - ua.clone()) / (w.clone() - a.clone());
            m1 - (a.clone() + b.clone()) * S::half() * m0.clone() + (b.clone() - a.clone()) * S::half() * q
        }
    };
    let theta = match t.kind {
        TangentKind::Asymptote => mu.clone(),
        TangentKind::Tangent => {
            let z = t.z.clone();
            let mut kinks: Vec<S> = mu.support().iter().filter(|x| *x < a).cloned().collect();
            kinks.extend(nu.support().iter().filter(|x| **x > z).cloned());
            kinks.extend([a.clone(), z.clone()]);
            let slope = t.slope.clone();
            measure_from_potential(
                &kinks,
                |x| {
                    if x <= a {
                        mu.potential(x)
                    } else if *x >= z {
                        nu.potential(x)
                    } else {
                        ua.clone() + slope.clone() * (x.clone() - a.clone())
                    }
                },
                &m0,
            )?
        }
    };
    let dual = DualPair::new(phi, psi, &dom, &S::default_tol())?;
    let grid = closed_form_grid(mu, nu, &[a.clone(), b.clone(), t.z.clone()]);
    Ok(AuxiliarySolution { value, theta, dual, grid, domain: dom })
}

/// Optimizers and value for the butterfly centred at `a` (inside `I`)
/// with half-width `h > 0`.
///
/// With `w_- = z_- ∧ (a - h)` and `w_+ = z_+ ∨ (a + h)` the value is
/// `h/2 (s_+ + s_-)`, where `s_+ = (u_nu(w_+) - u_mu(a)) / (w_+ - a)` and
/// `s_- = (u_nu(w_-) - u_mu(a)) / (a - w_-)`. On the asymptote both
/// quotients equal `m0`, which is what the asymptote cases use.
pub fn butterfly_closed_form<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    a: &S,
    h: &S,
) -> Result<AuxiliarySolution<S>> {
    if *h <= S::zero() {
        return Err(MotError::ClosedFormInapplicable("butterfly needs h > 0".into()));
    }
    let dom = interior_point(mu, nu, a)?;
    let plus = tangent_unchecked(mu, nu, a, 1)?;
    let minus = tangent_unchecked(mu, nu, a, -1)?;
    let m0 = mu.mass();
    let ua = mu.potential(a);
    let w_plus = S::max_of(plus.z.clone(), a.clone() + h.clone());
    let w_minus = S::min_of(minus.z.clone(), a.clone() - h.clone());
    let alpha = h.clone() / (a.clone() - w_minus.clone());
    let beta = h.clone() / (w_plus.clone() - a.clone());
    let phi = PiecewiseLinearFn::call(a.clone(), -(alpha.clone() + beta.clone()));
    let psi = PiecewiseLinearFn::call(w_minus.clone(), alpha).add(&PiecewiseLinearFn::call(w_plus.clone(), beta));
    let s_plus = match plus.kind {
        TangentKind::Asymptote => m0.clone(),
        TangentKind::Tangent => (nu.potential(&w_plus) - ua.clone()) / (w_plus.clone() - a.clone()),
    };
    let s_minus = match minus.kind {
        TangentKind::Asymptote => m0.clone(),
        TangentKind::Tangent => (nu.potential(&w_minus) - ua.clone()) / (a.clone() - w_minus.clone()),
    };
    let value = h.clone() * S::half() * (s_plus + s_minus);
    let (zm, zp) = (minus.z.clone(), plus.z.clone());
    let mut kinks: Vec<S> = nu.support().iter().filter(|x| **x < zm || **x > zp).cloned().collect();
    kinks.extend([zm.clone(), a.clone(), zp.clone()]);
    let (sp, sm) = (plus.slope.clone(), minus.slope.clone());
    let theta = measure_from_potential(
        &kinks,
        |x| {
            if *x <= zm || *x >= zp {
                nu.potential(x)
            } else if x <= a {
                ua.clone() + sm.clone() * (x.clone() - a.clone())
            } else {
                ua.clone() + sp.clone() * (x.clone() - a.clone())
            }
        },
        &m0,
    )?;
    let dual = DualPair::new(phi, psi, &dom, &S::default_tol())?;
    let grid = closed_form_grid(mu, nu, &[a.clone() - h.clone(), a.clone(), a.clone() + h.clone(), zm, zp]);
    Ok(AuxiliarySolution { value, theta, dual, grid, domain: dom })
}
