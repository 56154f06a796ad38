//! JSON formats for measures and payoffs, and CSV writers for plottable
//! series.
//!
//! Scalars may be given as JSON numbers or as strings such as `"0.25"` or
//! `"7/3"`. Strings keep exact mode exact; numbers are read from their
//! decimal text, so `0.1` is one tenth in exact mode as well.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::closed_forms::{butterfly_payoff, risk_reversal_payoff};
use crate::convexfn::PiecewiseLinearFn;
use crate::error::{MotError, Result};
use crate::hedging::SteppedPath;
use crate::measures::DiscreteMeasure;
use crate::scalar::Scalar;
use crate::simulation::ConvergencePoint;

fn bad(msg: impl Into<String>) -> MotError {
    MotError::Format(msg.into())
}

pub fn scalar_from_json<S: Scalar>(v: &Value) -> Result<S> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(bad(format!("expected a number or numeric string, got {other}"))),
    };
    S::parse_str(&text).ok_or_else(|| bad(format!("cannot parse {text:?} as a number")))
}

/// Doubles become JSON numbers, rationals `"p/q"` strings.
pub fn scalar_to_json<S: Scalar>(x: &S) -> Value {
    if S::EXACT {
        Value::String(x.render())
    } else {
        let v = x.to_f64_lossy();
        serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null)
    }
}

fn scalars<S: Scalar>(obj: &Map<String, Value>, key: &str) -> Result<Vec<S>> {
    match obj.get(key) {
        Some(Value::Array(items)) => items.iter().map(scalar_from_json).collect(),
        Some(_) => Err(bad(format!("\"{key}\" must be an array"))),
        None => Err(bad(format!("missing \"{key}\""))),
    }
}

fn scalar_field<S: Scalar>(obj: &Map<String, Value>, key: &str) -> Result<S> {
    obj.get(key).ok_or_else(|| bad(format!("missing \"{key}\""))).and_then(scalar_from_json)
}

fn as_object(v: &Value) -> Result<&Map<String, Value>> {
    v.as_object().ok_or_else(|| bad("expected a JSON object"))
}

/// `{"support": [...], "weights": [...]}`.
pub fn measure_from_json<S: Scalar>(v: &Value) -> Result<DiscreteMeasure<S>> {
    let obj = as_object(v)?;
    DiscreteMeasure::new(scalars(obj, "support")?, scalars(obj, "weights")?)
}

pub fn measure_to_json<S: Scalar>(m: &DiscreteMeasure<S>) -> Value {
    json!({
        "support": m.support().iter().map(scalar_to_json).collect::<Vec<_>>(),
        "weights": m.weights().iter().map(scalar_to_json).collect::<Vec<_>>(),
    })
}

/// Either `{"breakpoints", "values", "slopeLeft", "slopeRight", "jumps"}`
/// with optional jumps at the first and last breakpoint and `"offsets"` as
/// `[point, offset]` pairs elsewhere, or a named payoff:
/// `{"builtin": "risk-reversal", "a", "b"}`, `{"builtin": "butterfly", "a", "h"}`,
/// `{"builtin": "call", "strike"}`, `{"builtin": "put", "strike"}`.
pub fn payoff_from_json<S: Scalar>(v: &Value) -> Result<PiecewiseLinearFn<S>> {
    let obj = as_object(v)?;
    if let Some(name) = obj.get("builtin") {
        return builtin_payoff(name.as_str().ok_or_else(|| bad("\"builtin\" must be a string"))?, obj);
    }
    let breakpoints: Vec<S> = scalars(obj, "breakpoints")?;
    let values = scalars(obj, "values")?;
    let slope = |key: &str| obj.get(key).map(scalar_from_json).transpose();
    let mut f = PiecewiseLinearFn::interpolate(breakpoints.clone(), values)?;
    let (sl, sr) = (slope("slopeLeft")?, slope("slopeRight")?);
    if sl.is_some() || sr.is_some() {
        let sl = sl.unwrap_or_else(|| f.slope_left().clone());
        let sr = sr.unwrap_or_else(|| f.slope_right().clone());
        f = PiecewiseLinearFn::new(breakpoints.clone(), f.values().to_vec(), sl, sr)?;
    }
    if let Some(jumps) = obj.get("jumps") {
        let jumps = as_object(jumps)?;
        let ends = [("left", breakpoints.first()), ("right", breakpoints.last())];
        for (key, at) in ends {
            if let Some(j) = jumps.get(key) {
                let at = at.expect("nonempty breakpoints").clone();
                f = f.with_offset(at, scalar_from_json(j)?);
            }
        }
    }
    if let Some(Value::Array(items)) = obj.get("offsets") {
        for item in items {
            match item.as_array().map(Vec::as_slice) {
                Some([p, o]) => f = f.with_offset(scalar_from_json(p)?, scalar_from_json(o)?),
                _ => return Err(bad("each offset must be a [point, offset] pair")),
            }
        }
    }
    Ok(f)
}

fn builtin_payoff<S: Scalar>(name: &str, obj: &Map<String, Value>) -> Result<PiecewiseLinearFn<S>> {
    match name {
        "risk-reversal" => {
            let (a, b): (S, S) = (scalar_field(obj, "a")?, scalar_field(obj, "b")?);
            if a >= b {
                return Err(bad(format!("risk reversal needs a < b, got a = {a}, b = {b}")));
            }
            Ok(risk_reversal_payoff(&a, &b))
        }
        "butterfly" => {
            let (a, h): (S, S) = (scalar_field(obj, "a")?, scalar_field(obj, "h")?);
            if h <= S::zero() {
                return Err(bad(format!("butterfly needs h > 0, got {h}")));
            }
            Ok(butterfly_payoff(&a, &h))
        }
        "call" => Ok(PiecewiseLinearFn::call(scalar_field(obj, "strike")?, S::one())),
        "put" => {
            let k: S = scalar_field(obj, "strike")?;
            Ok(PiecewiseLinearFn::new(vec![k], vec![S::zero()], -S::one(), S::zero())?)
        }
        other => Err(bad(format!("unknown builtin payoff {other:?}"))),
    }
}

pub fn payoff_to_json<S: Scalar>(f: &PiecewiseLinearFn<S>) -> Value {
    let list = |xs: &[S]| xs.iter().map(scalar_to_json).collect::<Vec<_>>();
    let mut out = json!({
        "breakpoints": list(f.breakpoints()),
        "values": list(f.values()),
        "slopeLeft": scalar_to_json(f.slope_left()),
        "slopeRight": scalar_to_json(f.slope_right()),
    });
    if !f.offsets().is_empty() {
        let (first, last) = (f.breakpoints().first(), f.breakpoints().last());
        let mut jumps = Map::new();
        let mut others = Vec::new();
        for (p, o) in f.offsets() {
            if Some(p) == first {
                jumps.insert("left".into(), scalar_to_json(o));
            } else if Some(p) == last {
                jumps.insert("right".into(), scalar_to_json(o));
            } else {
                others.push(json!([scalar_to_json(p), scalar_to_json(o)]));
            }
        }
        out["jumps"] = Value::Object(jumps);
        if !others.is_empty() {
            out["offsets"] = Value::Array(others);
        }
    }
    out
}

/// `x,u_mu,u_theta,u_nu` on `points`.
pub fn potentials_csv<S: Scalar>(
    points: &[S],
    mu: &DiscreteMeasure<S>,
    theta: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
) -> String {
    let mut out = String::from("x,u_mu,u_theta,u_nu\n");
    for x in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            x.render(),
            mu.potential(x).render(),
            theta.potential(x).render(),
            nu.potential(x).render()
        );
    }
    out
}

/// `pathId,weight,jumpTimes,values` with `;` between the entries of a list.
pub fn paths_csv<S: Scalar>(paths: &[(SteppedPath<S>, S)]) -> String {
    let join = |xs: &[S]| xs.iter().map(Scalar::render).collect::<Vec<_>>().join(";");
    let mut out = String::from("pathId,weight,jumpTimes,values\n");
    for (id, (p, w)) in paths.iter().enumerate() {
        let _ = writeln!(out, "{id},{},{},{}", w.render(), join(p.times()), join(p.values()));
    }
    out
}

/// `n,price,gap`.
pub fn convergence_csv<S: Scalar>(points: &[ConvergencePoint<S>]) -> String {
    let mut out = String::from("n,price,gap\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.n, p.price.render(), p.gap.render());
    }
    out
}
