//! Step paths, the dynamic part of a semi-static hedge built from a dual
//! pair, the pathwise integral `H <> X_T`, and pathwise verification of the
//! superhedging inequality.

use std::fmt::Write as _;

use crate::convexfn::{hedge_derivative, DualPair, PiecewiseLinearFn};
use crate::error::{MotError, Result};
use crate::measures::{DiscreteMeasure, Domain};
use crate::par::{self, Execution};
use crate::scalar::{sum, Scalar};
use crate::simulation::{average_along, AveragingProcess};

/// Right-continuous path with finitely many jumps on `[0, T]`: equal to
/// `values[k]` on `[times[k], times[k+1])`, the last value holding up to and
/// including `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteppedPath<S> {
    times: Vec<S>,
    values: Vec<S>,
    horizon: S,
}

impl<S: Scalar> SteppedPath<S> {
    pub fn new(times: Vec<S>, values: Vec<S>, horizon: S) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(MotError::BadHorizon("path needs matching, nonempty times and values".into()));
        }
        if !times[0].is_zero() {
            return Err(MotError::BadHorizon("path must start at time 0".into()));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) || *times.last().expect("nonempty") > horizon {
            return Err(MotError::BadHorizon("jump times must increase within [0, T]".into()));
        }
        Ok(Self { times, values, horizon })
    }

    pub fn constant(x: S, horizon: S) -> Self {
        Self { times: vec![S::zero()], values: vec![x], horizon }
    }

    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn values(&self) -> &[S] {
        &self.values
    }

    pub fn horizon(&self) -> &S {
        &self.horizon
    }

    pub fn initial(&self) -> &S {
        &self.values[0]
    }

    pub fn terminal(&self) -> &S {
        self.values.last().expect("nonempty")
    }

    pub fn value_at(&self, t: &S) -> S {
        let k = self.times.iter().rposition(|s| s <= t).unwrap_or(0);
        self.values[k].clone()
    }

    /// `(start, end, value)` pieces covering `[0, T]`; the last may be empty.
    pub fn segments(&self) -> Vec<(S, S, S)> {
        (0..self.times.len())
            .map(|k| {
                let end = self.times.get(k + 1).cloned().unwrap_or_else(|| self.horizon.clone());
                (self.times[k].clone(), end, self.values[k].clone())
            })
            .collect()
    }

    /// `(time, ΔX)` for each jump time after 0.
    pub fn jumps(&self) -> Vec<(S, S)> {
        (1..self.times.len())
            .map(|k| (self.times[k].clone(), self.values[k].clone() - self.values[k - 1].clone()))
            .collect()
    }
}

/// Starts in `I`, stays in `J`, and is absorbed once it reaches `J \ I`.
pub fn in_omega<S: Scalar>(path: &SteppedPath<S>, dom: &Domain<S>) -> bool {
    if !dom.in_interior(path.initial()) {
        return false;
    }
    let vals = path.values();
    for (k, x) in vals.iter().enumerate() {
        if !dom.contains(x) {
            return false;
        }
        if dom.is_boundary(x) && vals[k..].iter().any(|y| y != x) {
            return false;
        }
    }
    true
}

/// One piece of `dA` on `(0, T]`: a point mass (`start == end`) or a stretch
/// of Lebesgue measure on `[start, end)` where the path is constant.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeLeg<S> {
    pub start: S,
    pub end: S,
    /// `dA` mass of the leg.
    pub weight: S,
    /// `X_t` on the leg.
    pub value: S,
    /// `h_t` on the leg.
    pub h: S,
}

impl<S: Scalar> HedgeLeg<S> {
    /// Leg lies in `(0, s)`.
    fn before(&self, s: &S) -> bool {
        if self.start == self.end {
            self.start < *s
        } else {
            self.end <= *s
        }
    }
}

/// `H = (h, A)` evaluated along one path.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeSpec<S> {
    pub h0: S,
    pub legs: Vec<HedgeLeg<S>>,
}

/// `dA` on `(0, T]` as `(start, end, mass)`, plus `A_0`.
fn measure_pieces<S: Scalar>(path: &SteppedPath<S>, a: &AveragingProcess<S>) -> (S, Vec<(S, S, S)>) {
    let horizon = path.horizon();
    match a {
        AveragingProcess::Asian => {
            let legs = path
                .segments()
                .into_iter()
                .filter(|(s, e, _)| e > s)
                .map(|(s, e, _)| {
                    let w = (e.clone() - s.clone()) / horizon.clone();
                    (s, e, w)
                })
                .collect();
            (S::zero(), legs)
        }
        _ => {
            let atoms = a.atoms(horizon);
            let a0 = sum(atoms.iter().filter(|(t, _)| t.is_zero()).map(|(_, m)| m.clone()));
            let legs = atoms
                .into_iter()
                .filter(|(t, m)| *t > S::zero() && *m > S::zero())
                .map(|(t, m)| (t.clone(), t, m))
                .collect();
            (a0, legs)
        }
    }
}

/// `h_0 = phi'(X_0)(1 - A_0) - psi'(X_0) A_0` and `h_t = -phi'(X_0) - psi'(X_t)`,
/// with left derivatives on `I` and zero outside.
pub fn dynamic_part<S: Scalar>(
    pair: &DualPair<S>,
    path: &SteppedPath<S>,
    a: &AveragingProcess<S>,
    dom: &Domain<S>,
) -> Result<HedgeSpec<S>> {
    if !in_omega(path, dom) {
        return Err(MotError::PathOutsideOmega(0));
    }
    let x0 = path.initial();
    let dphi = hedge_derivative(&pair.phi, x0, dom);
    let (a0, pieces) = measure_pieces(path, a);
    let h0 = dphi.clone() * (S::one() - a0.clone()) - hedge_derivative(&pair.psi, x0, dom) * a0;
    let legs = pieces
        .into_iter()
        .map(|(start, end, weight)| {
            let value = path.value_at(&start);
            let h = -dphi.clone() - hedge_derivative(&pair.psi, &value, dom);
            HedgeLeg { start, end, weight, value, h }
        })
        .collect();
    Ok(HedgeSpec { h0, legs })
}

/// `(X_T - X_0) h_0 + \int_{(0,T]} (X_T - X_t) h_t dA_t`.
pub fn pathwise_integral<S: Scalar>(hedge: &HedgeSpec<S>, path: &SteppedPath<S>) -> S {
    let xt = path.terminal();
    (xt.clone() - path.initial().clone()) * hedge.h0.clone()
        + sum(hedge
            .legs
            .iter()
            .map(|l| (xt.clone() - l.value.clone()) * l.h.clone() * l.weight.clone()))
}

/// The same gains as a stochastic integral: `sum over jumps s of Ĥ_{s-} ΔX_s`
/// with `Ĥ_t = h_0 + \int_{(0,t]} h dA`.
pub fn ito_integral<S: Scalar>(hedge: &HedgeSpec<S>, path: &SteppedPath<S>) -> S {
    sum(path.jumps().into_iter().map(|(s, dx)| {
        let position = hedge.h0.clone()
            + sum(hedge.legs.iter().filter(|l| l.before(&s)).map(|l| l.h.clone() * l.weight.clone()));
        position * dx
    }))
}

/// `phi(X_0) + psi(X_T) + H <> X_T` written as an average over exercise
/// times: `\int [phi(X_0) + phi'(X_0)(X_t - X_0) + psi(X_T) - psi'(X_t)(X_T - X_t)] dA_t`.
pub fn time_change_value<S: Scalar>(
    pair: &DualPair<S>,
    path: &SteppedPath<S>,
    a: &AveragingProcess<S>,
    dom: &Domain<S>,
) -> S {
    let (x0, xt) = (path.initial(), path.terminal());
    let dphi = hedge_derivative(&pair.phi, x0, dom);
    let (a0, pieces) = measure_pieces(path, a);
    let term = |x: &S| {
        dphi.clone() * (x.clone() - x0.clone()) - hedge_derivative(&pair.psi, x, dom) * (xt.clone() - x.clone())
    };
    let at_zero = a0 * term(x0);
    let later = sum(pieces.into_iter().map(|(s, _, w)| w * term(&path.value_at(&s))));
    pair.phi.eval(x0) + pair.psi.eval(xt) + at_zero + later
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlackRecord<S> {
    pub path_id: usize,
    pub weight: S,
    pub x0: S,
    pub xt: S,
    pub avg: S,
    pub payoff: S,
    pub static_leg: S,
    pub dynamic_leg: S,
    pub slack: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperhedgeReport<S> {
    pub records: Vec<SlackRecord<S>>,
    pub min_slack: S,
    pub min_slack_path: usize,
    /// Weighted sum of `phi(X_0) + psi(X_T) + H <> X_T`.
    pub hedge_expectation: S,
    /// `mu(phi) + nu(psi)`.
    pub cost: S,
    pub tol: S,
}

impl<S: Scalar> SuperhedgeReport<S> {
    /// Every slack is at least `-tol`.
    pub fn superhedges(&self) -> bool {
        self.min_slack >= -self.tol.clone()
    }

    /// Expected hedge outcome does not exceed its cost.
    pub fn admissible(&self) -> bool {
        self.hedge_expectation <= self.cost.clone() + self.tol.clone()
    }

    /// Smallest slack among paths with `keep(record)`.
    pub fn min_slack_where<F: Fn(&SlackRecord<S>) -> bool>(&self, keep: F) -> Option<S> {
        self.records.iter().filter(|r| keep(r)).map(|r| r.slack.clone()).reduce(S::min_of)
    }

    /// CSV with columns pathId, X0, XT, avg, payoff, staticLeg, dynamicLeg, slack.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pathId,X0,XT,avg,payoff,staticLeg,dynamicLeg,slack\n");
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.path_id,
                r.x0.render(),
                r.xt.render(),
                r.avg.render(),
                r.payoff.render(),
                r.static_leg.render(),
                r.dynamic_leg.render(),
                r.slack.render()
            );
        }
        out
    }
}

/// Checks `f(\int X dA) <= phi(X_0) + psi(X_T) + H <> X_T` on every path and
/// the admissibility bound on the weighted average.
#[allow(clippy::too_many_arguments)]
pub fn verify_superhedge<S: Scalar>(
    pair: &DualPair<S>,
    f: &PiecewiseLinearFn<S>,
    a: &AveragingProcess<S>,
    paths: &[(SteppedPath<S>, S)],
    dom: &Domain<S>,
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    tol: &S,
    exec: Execution,
) -> Result<SuperhedgeReport<S>> {
    let indexed: Vec<(usize, &(SteppedPath<S>, S))> = paths.iter().enumerate().collect();
    let records = par::map(exec, &indexed, |(id, (path, weight))| {
        let hedge = dynamic_part(pair, path, a, dom).map_err(|_| MotError::PathOutsideOmega(*id))?;
        let avg = average_along(path, a);
        let payoff = f.eval(&avg);
        let static_leg = pair.phi.eval(path.initial()) + pair.psi.eval(path.terminal());
        let dynamic_leg = pathwise_integral(&hedge, path);
        let slack = static_leg.clone() + dynamic_leg.clone() - payoff.clone();
        Ok(SlackRecord {
            path_id: *id,
            weight: weight.clone(),
            x0: path.initial().clone(),
            xt: path.terminal().clone(),
            avg,
            payoff,
            static_leg,
            dynamic_leg,
            slack,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let (min_slack_path, min_slack) = records
        .iter()
        .map(|r| (r.path_id, r.slack.clone()))
        .reduce(|a, b| if b.1 < a.1 { b } else { a })
        .unwrap_or((0, S::zero()));
    let hedge_expectation =
        sum(records.iter().map(|r| r.weight.clone() * (r.static_leg.clone() + r.dynamic_leg.clone())));
    Ok(SuperhedgeReport { records, min_slack, min_slack_path, hedge_expectation, cost: pair.cost(mu, nu), tol: tol.clone() })
}
