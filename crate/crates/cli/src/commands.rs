use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use mot_core::auxiliary::{build_grid, dual_diagnostics, solve_primal, AuxiliaryProblem, AuxiliarySolution, ClauseCheck};
use mot_core::closed_forms::{
    butterfly_closed_form, butterfly_payoff, max_slope_tangent, risk_reversal_closed_form, risk_reversal_payoff,
    TangentKind,
};
use mot_core::convexfn::{DualPair, PiecewiseLinearFn};
use mot_core::counterexamples;
use mot_core::hedging::verify_superhedge;
use mot_core::io::{
    convergence_csv, measure_from_json, measure_to_json, payoff_from_json, payoff_to_json, potentials_csv,
    scalar_to_json,
};
use mot_core::measures::{convex_order_leq_tol, irreducible_components, union_support, DiscreteMeasure, Domain};
use mot_core::par::Execution;
use mot_core::simulation::{build_two_step, convergence as convergence_points, embed_paths, AveragingProcess};
use mot_core::{MotError, Scalar};
use serde_json::{json, Map, Value};

use crate::failure::{self, parse_scalar, Failure};
use crate::{ClosedFormKind, Clock, Inputs, Marginals, Output};

fn read_json(path: &Path) -> Result<Value, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn load_marginals<S: Scalar>(m: &Marginals) -> Result<(DiscreteMeasure<S>, DiscreteMeasure<S>), Failure> {
    let mu = measure_from_json(&read_json(&m.mu)?)?;
    let nu = measure_from_json(&read_json(&m.nu)?)?;
    if !convex_order_leq_tol(&mu, &nu, &S::default_tol()) {
        return Err(Failure::new(failure::NOT_IN_CONVEX_ORDER, "mu is not below nu in convex order"));
    }
    Ok((mu, nu))
}

fn load_payoff<S: Scalar>(path: &Path) -> Result<PiecewiseLinearFn<S>, Failure> {
    Ok(payoff_from_json(&read_json(path)?)?)
}

fn arithmetic<S: Scalar>() -> &'static str {
    if S::EXACT {
        "exact"
    } else {
        "float"
    }
}

/// Adds the common fields and writes the report to stdout or a file.
fn emit(output: &Output, command: &str, mut report: Map<String, Value>) -> Result<(), Failure> {
    let seconds = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    report.insert("command".into(), json!(command));
    report.insert("timestamp".into(), json!(seconds));
    let text = serde_json::to_string_pretty(&Value::Object(report)).expect("serializable") + "\n";
    if output.stdout {
        print!("{text}");
        return Ok(());
    }
    let path = output.out.clone().unwrap_or_else(|| format!("{command}-report.json").into());
    write_file(&path, &text)?;
    println!("{}", path.display());
    Ok(())
}

fn domain_json<S: Scalar>(d: &Domain<S>) -> Value {
    json!({
        "left": scalar_to_json(&d.left),
        "right": scalar_to_json(&d.right),
        "leftClosed": d.left_closed,
        "rightClosed": d.right_closed,
    })
}

fn pair_json<S: Scalar>(p: &DualPair<S>) -> Value {
    json!({ "phi": payoff_to_json(&p.phi), "psi": payoff_to_json(&p.psi) })
}

fn clause_json<S: Scalar>(c: &ClauseCheck<S>) -> Value {
    json!({
        "clause": c.clause,
        "description": c.description,
        "passed": c.passed,
        "worst": scalar_to_json(&c.worst),
        "witness": c.witness.as_ref().map(scalar_to_json),
    })
}

struct Component<S> {
    mu: DiscreteMeasure<S>,
    nu: DiscreteMeasure<S>,
    solution: AuxiliarySolution<S>,
}

/// Solved components plus the part of `nu` that stays put.
type Solved<S> = (Vec<Component<S>>, Option<DiscreteMeasure<S>>);

/// Solves every irreducible component on the part of the global grid inside it.
fn solve_components<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    grid: &[S],
) -> Result<Solved<S>, Failure> {
    let dec = irreducible_components(mu, nu)?;
    let mut out = Vec::new();
    for c in dec.components {
        let mut problem = AuxiliaryProblem::with_domain(&c.mu, &c.nu, f, grid, c.domain.clone())?;
        let solution = problem.solve()?.clone();
        out.push(Component { mu: c.mu, nu: c.nu, solution });
    }
    Ok((out, dec.static_residue))
}

pub fn price<S: Scalar>(inputs: &Inputs, potentials: Option<&Path>, tol: &S) -> Result<(), Failure> {
    let (mu, nu) = load_marginals::<S>(&inputs.marginals)?;
    let f = load_payoff::<S>(&inputs.payoff)?;
    let grid = build_grid(&mu, &nu, &f, &[], inputs.grid_refine);
    let (components, residue) = solve_components(&mu, &nu, &f, &grid)?;

    let mut value = S::zero();
    let mut all_passed = true;
    let mut parts = Vec::new();
    for c in &components {
        let sol = &c.solution;
        let diag = dual_diagnostics(sol, &c.mu, &c.nu, &f, &sol.domain, tol);
        all_passed &= diag.all_passed();
        value = value + sol.value.clone();
        parts.push(json!({
            "domain": domain_json(&sol.domain),
            "value": scalar_to_json(&sol.value),
            "dualValue": scalar_to_json(&sol.dual_value(&c.mu, &c.nu)),
            "theta": measure_to_json(&sol.theta),
            "dual": pair_json(&sol.dual),
            "diagnostics": {
                "passed": diag.all_passed(),
                "gap": scalar_to_json(&diag.gap),
                "feasibility": clause_json(&diag.feasibility),
                "clauses": diag.clauses.iter().map(clause_json).collect::<Vec<_>>(),
            },
        }));
    }
    let static_value = residue.as_ref().map(|m| m.integrate(|x| f.eval(x))).unwrap_or_else(S::zero);
    value = value + static_value.clone();

    if let Some(path) = potentials {
        let atoms = components
            .iter()
            .flat_map(|c| c.solution.theta.atoms().map(|(x, w)| (x.clone(), w.clone())).collect::<Vec<_>>())
            .chain(residue.iter().flat_map(|m| m.atoms().map(|(x, w)| (x.clone(), w.clone())).collect::<Vec<_>>()));
        let theta = DiscreteMeasure::from_atoms(atoms)?;
        let mut points = grid.clone();
        points.extend(union_support(&[&mu, &nu]));
        points.sort_by(|a, b| a.partial_cmp(b).expect("comparable"));
        points.dedup();
        write_file(path, &potentials_csv(&points, &mu, &theta, &nu))?;
    }

    let mut report = Map::new();
    report.insert("arithmetic".into(), json!(arithmetic::<S>()));
    report.insert("value".into(), scalar_to_json(&value));
    report.insert("irreducible".into(), json!(components.len() == 1 && residue.is_none()));
    report.insert("components".into(), Value::Array(parts));
    report.insert("staticValue".into(), scalar_to_json(&static_value));
    report.insert("gridSize".into(), json!(grid.len()));
    report.insert("tolerance".into(), scalar_to_json(tol));
    emit(&inputs.output, "price", report)?;
    if !all_passed {
        return Err(Failure::new(failure::NUMERICAL, "dual diagnostics failed; see the report"));
    }
    Ok(())
}

fn parse_averaging<S: Scalar>(text: &str) -> Result<AveragingProcess<S>, Failure> {
    let text = text.trim();
    match text.split_once(':') {
        None if text == "asian" => Ok(AveragingProcess::Asian),
        None if text == "terminal-half" => Ok(AveragingProcess::TerminalHalf),
        Some(("fixed", t)) => Ok(AveragingProcess::FixedTime(parse_scalar("exercise time", t)?)),
        Some(("european", t)) => Ok(AveragingProcess::EuropeanAt(parse_scalar("maturity", t)?)),
        _ => Err(Failure::config(format!(
            "unknown averaging {text:?}; use asian, fixed:<t0>, european:<T'> or terminal-half"
        ))),
    }
}

fn irreducible_solution<S: Scalar>(
    mu: &DiscreteMeasure<S>,
    nu: &DiscreteMeasure<S>,
    f: &PiecewiseLinearFn<S>,
    grid: &[S],
    command: &str,
) -> Result<AuxiliarySolution<S>, Failure> {
    solve_primal(mu, nu, f, grid).map_err(|e| match e {
        MotError::NotIrreducible { .. } => {
            Failure::config(format!("{command} needs an irreducible pair ({e}); price handles the general case"))
        }
        other => other.into(),
    })
}

pub fn hedge<S: Scalar>(
    inputs: &Inputs,
    clock: &Clock,
    averaging: &str,
    perturb: Option<&str>,
    slack_csv: Option<&Path>,
    tol: &S,
) -> Result<(), Failure> {
    let (mu, nu) = load_marginals::<S>(&inputs.marginals)?;
    let f = load_payoff::<S>(&inputs.payoff)?;
    let horizon: S = parse_scalar("horizon", &clock.horizon)?;
    let a = parse_averaging::<S>(averaging)?;
    a.validate(&horizon)?;
    let grid = build_grid(&mu, &nu, &f, &[], inputs.grid_refine);
    let sol = irreducible_solution(&mu, &nu, &f, &grid, "hedge")?;
    let mut pair = sol.dual.clone();
    if let Some(delta) = perturb {
        let delta: S = parse_scalar("dual perturbation", delta)?;
        pair.psi = pair.psi.add_affine(delta, S::zero());
    }
    let chain = build_two_step(&mu, &sol.theta, &nu)?;
    let paths = embed_paths(&chain, clock.n, &horizon)?;
    let rep = verify_superhedge(&pair, &f, &a, &paths, &sol.domain, &mu, &nu, tol, Execution::Parallel)?;
    if let Some(path) = slack_csv {
        write_file(path, &rep.to_csv())?;
    }
    let witness = &rep.records[rep.min_slack_path];
    let witness_json = json!({
        "pathId": witness.path_id,
        "times": paths[witness.path_id].0.times().iter().map(scalar_to_json).collect::<Vec<_>>(),
        "values": paths[witness.path_id].0.values().iter().map(scalar_to_json).collect::<Vec<_>>(),
        "payoff": scalar_to_json(&witness.payoff),
        "staticLeg": scalar_to_json(&witness.static_leg),
        "dynamicLeg": scalar_to_json(&witness.dynamic_leg),
        "slack": scalar_to_json(&witness.slack),
    });

    let mut report = Map::new();
    report.insert("arithmetic".into(), json!(arithmetic::<S>()));
    report.insert("value".into(), scalar_to_json(&sol.value));
    report.insert("cost".into(), scalar_to_json(&rep.cost));
    report.insert("hedgeExpectation".into(), scalar_to_json(&rep.hedge_expectation));
    report.insert("dual".into(), pair_json(&pair));
    report.insert("paths".into(), json!(paths.len()));
    report.insert("n".into(), json!(clock.n));
    report.insert("horizon".into(), scalar_to_json(&horizon));
    report.insert("averaging".into(), json!(averaging));
    report.insert("minSlack".into(), scalar_to_json(&rep.min_slack));
    report.insert("witness".into(), witness_json);
    report.insert("superhedges".into(), json!(rep.superhedges()));
    report.insert("admissible".into(), json!(rep.admissible()));
    report.insert("tolerance".into(), scalar_to_json(tol));
    emit(&inputs.output, "hedge", report)?;
    if !rep.superhedges() || !rep.admissible() {
        return Err(Failure::new(
            failure::SUPERHEDGE_VIOLATION,
            format!(
                "superhedge violated: path {} (values {:?}) has slack {}",
                witness.path_id,
                paths[witness.path_id].0.values().iter().map(Scalar::render).collect::<Vec<_>>(),
                witness.slack.render()
            ),
        ));
    }
    Ok(())
}

fn kind_name(k: TangentKind) -> &'static str {
    match k {
        TangentKind::Tangent => "tangent",
        TangentKind::Asymptote => "asymptote",
    }
}

#[allow(clippy::too_many_arguments)]
pub fn closed_form<S: Scalar>(
    marginals: &Marginals,
    output: &Output,
    kind: ClosedFormKind,
    a: &str,
    b: Option<&str>,
    h: Option<&str>,
    grid_refine: usize,
    tol: &S,
) -> Result<(), Failure> {
    let (mu, nu) = load_marginals::<S>(marginals)?;
    let a: S = parse_scalar("a", a)?;
    let (name, f, cf, params, directions) = match kind {
        ClosedFormKind::RiskReversal => {
            let b: S = parse_scalar("b", b.ok_or_else(|| Failure::config("risk reversal needs --b"))?)?;
            if a >= b {
                return Err(Failure::config(format!("risk reversal needs a < b, got a = {a}, b = {b}")));
            }
            let cf = risk_reversal_closed_form(&mu, &nu, &a, &b)?;
            let params = json!({ "a": scalar_to_json(&a), "b": scalar_to_json(&b) });
            ("risk-reversal", risk_reversal_payoff(&a, &b), cf, params, vec![1i8])
        }
        ClosedFormKind::Butterfly => {
            let h: S = parse_scalar("h", h.ok_or_else(|| Failure::config("butterfly needs --h"))?)?;
            if h <= S::zero() {
                return Err(Failure::config(format!("butterfly needs h > 0, got {h}")));
            }
            let cf = butterfly_closed_form(&mu, &nu, &a, &h)?;
            let params = json!({ "a": scalar_to_json(&a), "h": scalar_to_json(&h) });
            ("butterfly", butterfly_payoff(&a, &h), cf, params, vec![1i8, -1])
        }
    };
    let lp = irreducible_solution(&mu, &nu, &f, &build_grid(&mu, &nu, &f, &cf.grid, grid_refine), "closed-form")?;
    let gap = (cf.value.clone() - lp.value.clone()).abs();
    let agree = cf.value.approx_eq(&lp.value, tol);
    let mut tangents = Vec::new();
    for d in directions {
        let t = max_slope_tangent(&mu, &nu, &a, d)?;
        tangents.push(json!({
            "direction": d,
            "kind": kind_name(t.kind),
            "slope": scalar_to_json(&t.slope),
            "touch": scalar_to_json(&t.z),
        }));
    }

    let mut report = Map::new();
    report.insert("arithmetic".into(), json!(arithmetic::<S>()));
    report.insert("payoff".into(), json!(name));
    report.insert("parameters".into(), params);
    report.insert("closedFormValue".into(), scalar_to_json(&cf.value));
    report.insert("lpValue".into(), scalar_to_json(&lp.value));
    report.insert("gap".into(), scalar_to_json(&gap));
    report.insert("agree".into(), json!(agree));
    report.insert("tangents".into(), Value::Array(tangents));
    report.insert("theta".into(), measure_to_json(&cf.theta));
    report.insert("dual".into(), pair_json(&cf.dual));
    report.insert("tolerance".into(), scalar_to_json(tol));
    emit(output, "closed-form", report)?;
    if !agree {
        return Err(Failure::new(failure::NUMERICAL, format!("closed form and LP differ by {}", gap.render())));
    }
    Ok(())
}

pub fn convergence<S: Scalar>(inputs: &Inputs, ns: &[usize], horizon: &str) -> Result<(), Failure> {
    let (mu, nu) = load_marginals::<S>(&inputs.marginals)?;
    let f = load_payoff::<S>(&inputs.payoff)?;
    let horizon: S = parse_scalar("horizon", horizon)?;
    let sol = irreducible_solution(&mu, &nu, &f, &build_grid(&mu, &nu, &f, &[], inputs.grid_refine), "convergence")?;
    let points = convergence_points(&sol, &mu, &nu, &f, ns, &horizon, Execution::Parallel)?;
    let csv = convergence_csv(&points);
    match &inputs.output.out {
        Some(path) => {
            write_file(path, &csv)?;
            println!("{}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn counterexamples(out: Option<&Path>) -> Result<(), Failure> {
    let checks = counterexamples::run_all()?;
    for c in &checks {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("{status} {}: expected {}, computed {}", c.name, c.expected, c.computed);
    }
    if let Some(path) = out {
        let items: Vec<Value> = checks
            .iter()
            .map(|c| json!({ "name": c.name, "expected": c.expected, "computed": c.computed, "passed": c.passed }))
            .collect();
        let seconds = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let report = json!({ "command": "counterexamples", "checks": items, "timestamp": seconds });
        write_file(path, &(serde_json::to_string_pretty(&report).expect("serializable") + "\n"))?;
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure::new(failure::COUNTEREXAMPLE_FAILED, format!("{failed} counterexample check(s) failed")));
    }
    Ok(())
}
