//! Subcommand implementations, each returning a [`Report`].

use seircheck_core::dynsys::{
    aux_fields, catalog, first_integral_residual, integral_f2, integral_f3_printed,
    integral_state_sum, lie_bracket, load_system, parse_state_expr, StateExpr, VectorField,
};
use seircheck_core::error::{Error, Result};
use seircheck_core::galois::{
    compare_a2, compare_printed_power, noncommutativity_certificate, power_closed_form,
    power_iterative, verify_noncommutativity, GaloisParams,
};
use seircheck_core::numerics::{
    abel_determinant, conservation_drift, det_f64, integrate, numeric_fundamental,
    ToleranceConfig,
};
use seircheck_core::params::ParamAssignment;
use seircheck_core::parse::{parse_expr, pretty_print, SymbolTable};
use seircheck_core::rat::Rat;
use seircheck_core::ratfunc::RatFunc;
use seircheck_core::report::{Report, Verdict};
use seircheck_core::risch::{
    gamma_elementary, gamma_recurrence_check, solve_risch_ode, RischOde, RischStatus,
};
use seircheck_core::symbol::Symbol;
use seircheck_core::tower::NumericEval;
use seircheck_core::variational::{
    extended_solution, fundamental_columns, invariant_plane_solution, sei_field,
    seir_ext_field, seir_linear_system, sigma_action_check, ve_setting, CaseTag,
};
use serde_json::json;

const MODEL_PARAMS: [&str; 3] = ["r", "a", "b"];

fn load_field(system: &str) -> Result<VectorField> {
    match catalog(system) {
        Ok(f) => Ok(f),
        Err(Error::UnknownSystem(_)) => {
            let text = std::fs::read_to_string(system)
                .map_err(|e| Error::UnknownSystem(format!("{system} ({e})")))?;
            load_system(&text, &MODEL_PARAMS)
        }
        Err(e) => Err(e),
    }
}

/// Parses `k=expr,...` substitutions over the model parameters.
fn parse_substitutions(text: &str) -> Result<Vec<(Symbol, RatFunc)>> {
    let syms = SymbolTable::new().with_params(&MODEL_PARAMS);
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (name, rhs) = item
            .split_once('=')
            .ok_or_else(|| Error::Invalid(format!("expected k=expr, got `{item}`")))?;
        let ast = parse_expr(rhs, &syms)?;
        let mut layer = seircheck_core::dynsys::ExpLayer::empty();
        let value = seircheck_core::dynsys::lower_state_ast(&ast, &mut layer)?;
        out.push((Symbol::new(name.trim()), value));
    }
    Ok(out)
}

pub fn check_integral(system: &str, f_text: &str, subst: Option<&str>) -> Result<Report> {
    let field = load_field(system)?;
    let (expr, builtin): (StateExpr, bool) = match f_text {
        "F1" => (integral_state_sum(&field), true),
        "F2" => (integral_f2(&field)?, true),
        "F3" => (integral_f3_printed(), true),
        text => (
            parse_state_expr(text, field.states(), &MODEL_PARAMS)?,
            false,
        ),
    };
    let mut residual = first_integral_residual(&expr, &field);
    if let Some(s) = subst {
        let subs = parse_substitutions(s)?;
        residual = residual.substitute_params(&|sym: &Symbol| {
            subs.iter().find(|(k, _)| k == sym).map(|(_, v)| v.clone())
        })?;
    }
    let verdict = if residual.is_zero() {
        Verdict::Pass
    } else if builtin {
        // A printed claim whose residual is nonzero is reported verbatim.
        Verdict::Discrepancy
    } else {
        Verdict::Fail
    };
    let mut report = Report::new("check integral")
        .input("system", system)
        .input("F", f_text)
        .verdict(verdict)
        .residual(residual.render());
    if let Some(s) = subst {
        report = report.input("subst", s);
    }
    Ok(report)
}

pub fn check_commuting(system: &str, field_files: &[String]) -> Result<Report> {
    let f0 = load_field(system)?;
    let mut named: Vec<(String, VectorField)> = vec![(format!("f[{system}]"), f0.clone())];
    if system == "seir_ext" {
        for (i, g) in aux_fields().into_iter().enumerate() {
            named.push((format!("g{}", i + 1), g));
        }
    }
    for path in field_files {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Invalid(format!("cannot read `{path}`: {e}")))?;
        named.push((path.clone(), load_system(&text, &MODEL_PARAMS)?));
    }
    let mut pairs = Vec::new();
    let mut all_zero = true;
    for i in 0..named.len() {
        for j in (i + 1)..named.len() {
            let br = lie_bracket(&named[i].1, &named[j].1)?;
            let zero = br.comps().iter().all(|c| c.is_zero());
            all_zero &= zero;
            pairs.push(json!({
                "left": named[i].0,
                "right": named[j].0,
                "bracket_zero": zero,
                "bracket": br.comps().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
            }));
        }
    }
    Ok(Report::new("check commuting")
        .input("system", system)
        .verdict(if all_zero { Verdict::Pass } else { Verdict::Fail })
        .witness(json!({ "pairs": pairs })))
}

pub fn check_particular(case: &str, solution: &str) -> Result<Report> {
    let case = CaseTag::parse(case)?;
    let setting = ve_setting(case)?;
    let (sol, field) = match solution {
        "general" => (invariant_plane_solution(&setting)?, sei_field(case)?),
        "extended" => (extended_solution(&setting)?, seir_ext_field(case)?),
        other => return Err(Error::Invalid(format!("unknown solution `{other}`"))),
    };
    let residuals = seircheck_core::dynsys::verify_particular_solution(&sol, &field)?;
    let all_zero = residuals.iter().all(|r| r.is_zero());
    let strings: Vec<String> = residuals.iter().map(pretty_print).collect();
    // The scalar residual field is "0" exactly when the vector vanishes.
    let residual = if all_zero { "0".to_string() } else { format!("[{}]", strings.join(", ")) };
    Ok(Report::new("check particular")
        .input("case", case.as_str())
        .input("solution", solution)
        .verdict(if all_zero { Verdict::Pass } else { Verdict::Fail })
        .residual(residual)
        .witness(serde_json::json!({ "residuals": strings })))
}

pub fn ve_build(case: &str) -> Result<Report> {
    let case = CaseTag::parse(case)?;
    let sys = seir_linear_system(case)?;
    let rows: Vec<Vec<String>> = sys
        .matrix
        .iter()
        .map(|row| row.iter().map(pretty_print).collect())
        .collect();
    Ok(Report::new("ve build")
        .input("case", case.as_str())
        .verdict(Verdict::Pass)
        .witness(json!({ "matrix": rows, "trace": pretty_print(&sys.trace()) })))
}

pub fn ve_verify(case: &str, column: Option<usize>) -> Result<Report> {
    let case = CaseTag::parse(case)?;
    let sys = seir_linear_system(case)?;
    let set = fundamental_columns(case)?;
    let indices: Vec<usize> = match column {
        Some(j) if (1..=6).contains(&j) => vec![j - 1],
        Some(j) => return Err(Error::Invalid(format!("column {j} out of range 1..=6"))),
        None => (0..6).collect(),
    };
    let mut results = Vec::new();
    let mut all_zero = true;
    for &j in &indices {
        let res = seircheck_core::variational::verify_ve_column(&set.columns[j], &sys)?;
        let zero = res.iter().all(|r| r.is_zero());
        all_zero &= zero;
        results.push(json!({
            "column": j + 1,
            "zero": zero,
            "residual": res.iter().map(pretty_print).collect::<Vec<_>>(),
        }));
    }
    let mut report = Report::new("ve verify")
        .input("case", case.as_str())
        .verdict(if all_zero { Verdict::Pass } else { Verdict::Fail })
        .witness(json!({ "columns": results }));
    if let Some(j) = column {
        report = report.input("column", j);
    }
    Ok(report)
}

pub fn ve_sigma(case: &str) -> Result<Report> {
    let case = CaseTag::parse(case)?;
    let r = sigma_action_check(case)?;
    let verdict = if r.pass { Verdict::Pass } else { Verdict::Fail };
    Ok(Report::new("ve sigma")
        .input("case", case.as_str())
        .verdict(verdict)
        .witness(serde_json::to_value(&r).expect("sigma report serializes")))
}

pub fn risch_gamma(alpha: &str) -> Result<Report> {
    let alpha: Rat = alpha.parse().map_err(Error::InvalidParams)?;
    let v = gamma_elementary(&alpha)?;
    let verdict = match v.status {
        RischStatus::Elementary => Verdict::Elementary,
        RischStatus::NonElementary => Verdict::NonElementary,
    };
    let witness = json!({
        "alpha": alpha.to_string(),
        "antiderivative": v.antiderivative.as_ref().map(pretty_print),
        "gamma_closed_form": v.gamma_closed_form,
        "certificate": serde_json::to_value(&v.certificate).expect("certificate serializes"),
    });
    Ok(Report::new("risch gamma")
        .input("alpha", alpha)
        .verdict(verdict)
        .witness(witness))
}

pub fn risch_ode(f: &str, g: &str) -> Result<Report> {
    let f: Rat = f.parse().map_err(Error::InvalidParams)?;
    let syms = SymbolTable::new().with_states(&["x"]);
    let ast = parse_expr(g, &syms)?;
    let mut layer = seircheck_core::dynsys::ExpLayer::empty();
    let g_rf = seircheck_core::dynsys::lower_state_ast(&ast, &mut layer)?;
    if !layer.gens().is_empty() {
        return Err(Error::Invalid("the right-hand side must be rational in x".into()));
    }
    let ode = RischOde::from_ratfunc(f.clone(), &g_rf)?;
    let out = solve_risch_ode(&ode)?;
    let (verdict, witness) = match &out.solution {
        Some(q) => (
            Verdict::Pass,
            json!({ "solution": q.to_string() }),
        ),
        None => (
            Verdict::NonElementary,
            json!({
                "certificate":
                    serde_json::to_value(&out.certificate).expect("certificate serializes")
            }),
        ),
    };
    Ok(Report::new("risch ode")
        .input("f", f)
        .input("g", g)
        .verdict(verdict)
        .witness(witness))
}

pub fn risch_recurrence() -> Result<Report> {
    let r = gamma_recurrence_check()?;
    let verdict = if r.printed_matches { Verdict::Pass } else { Verdict::Discrepancy };
    Ok(Report::new("risch recurrence")
        .verdict(verdict)
        .residual(r.printed_residual.clone())
        .witness(serde_json::to_value(&r).expect("recurrence report serializes")))
}

pub fn galois_power(case: &str, k: u32) -> Result<Report> {
    let case = CaseTag::parse(case)?;
    if k == 0 || k > 64 {
        return Err(Error::Invalid("k must be in 1..=64".into()));
    }
    let p = GaloisParams::symbolic();
    let closed = power_closed_form(case, &p, k);
    let iterative = power_iterative(case, &p, k);
    let closed_equals_iterative = closed == iterative;
    let power_mismatches = compare_printed_power(case, k);
    let a2_mismatches = if k == 2 { Some(compare_a2(case)) } else { None };
    let any_mismatch = !power_mismatches.is_empty()
        || a2_mismatches.as_ref().map(|m| !m.is_empty()).unwrap_or(false);
    let verdict = if !closed_equals_iterative {
        Verdict::Fail
    } else if any_mismatch {
        Verdict::Discrepancy
    } else {
        Verdict::Pass
    };
    Ok(Report::new("galois power")
        .input("case", case.as_str())
        .input("k", k)
        .verdict(verdict)
        .witness(json!({
            "closed_equals_iterative": closed_equals_iterative,
            "matrix": iterative.to_strings(),
            "printed_power_mismatches": serde_json::to_value(&power_mismatches).unwrap(),
            "printed_a2_mismatches": a2_mismatches
                .map(|m| serde_json::to_value(&m).unwrap()),
        })))
}

pub fn galois_noncommute(case: &str) -> Result<Report> {
    let case = CaseTag::parse(case)?;
    let cert = noncommutativity_certificate(case)?;
    let ok = verify_noncommutativity(&cert);
    Ok(Report::new("galois noncommute")
        .input("case", case.as_str())
        .verdict(if ok { Verdict::Pass } else { Verdict::Fail })
        .witness(serde_json::to_value(&cert).expect("certificate serializes")))
}

pub struct SimArgs {
    pub system: Option<String>,
    pub params: String,
    pub init: Option<String>,
    pub t0: f64,
    pub t1: f64,
    pub rtol: f64,
    pub atol: f64,
    pub report: String,
    pub extra_f: Option<String>,
    pub out: Option<String>,
    pub case: Option<String>,
}

fn parse_init(text: &str, dim: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| Error::Invalid(format!("bad initial value `{s}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    if vals.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, system needs {dim}",
            vals.len()
        )));
    }
    Ok(vals)
}

fn builtin_integrals(system: &str, field: &VectorField) -> Result<Vec<(String, StateExpr)>> {
    Ok(match system {
        "sir" | "seir" => vec![
            ("F1".to_string(), integral_state_sum(field)),
            ("F2".to_string(), integral_f2(field)?),
        ],
        "si" | "sei" | "seir_ext" => vec![("F2".to_string(), integral_f2(field)?)],
        _ => vec![],
    })
}

pub fn sim_run(args: SimArgs) -> Result<Report> {
    let tol = ToleranceConfig { rtol: args.rtol, atol: args.atol, max_steps: 2_000_000 };
    let params = ParamAssignment::parse(&args.params)?;
    match args.report.as_str() {
        "trajectory" | "drift" => {
            let system = args
                .system
                .as_deref()
                .ok_or_else(|| Error::Invalid("--system is required".into()))?;
            let field = load_field(system)?;
            let init = args
                .init
                .as_deref()
                .ok_or_else(|| Error::Invalid("--init is required".into()))?;
            let y0 = parse_init(init, field.dim())?;
            let traj = integrate(&field, &params, &y0, args.t0, args.t1, &tol)?;
            if args.report == "trajectory" {
                let header: Vec<String> =
                    field.states().iter().map(|s| s.to_string()).collect();
                let csv = traj.to_csv(&header);
                let path = args
                    .out
                    .as_deref()
                    .ok_or_else(|| Error::Invalid("--out is required for trajectory output".into()))?;
                std::fs::write(path, csv)
                    .map_err(|e| Error::Invalid(format!("cannot write `{path}`: {e}")))?;
                let (t_end, y_end) = traj.last();
                return Ok(Report::new("sim run")
                    .input("system", system)
                    .input("report", "trajectory")
                    .verdict(Verdict::Pass)
                    .witness(json!({
                        "csv": path,
                        "steps": traj.steps,
                        "rejected": traj.rejected,
                        "t_end": t_end,
                        "state_end": y_end,
                    })));
            }
            // drift
            let mut monitored = builtin_integrals(system, &field)?;
            if let Some(text) = &args.extra_f {
                monitored.push((
                    text.clone(),
                    parse_state_expr(text, field.states(), &MODEL_PARAMS)?,
                ));
            }
            if monitored.is_empty() {
                return Err(Error::Invalid(
                    "no built-in integrals for this system; pass --F".into(),
                ));
            }
            let mut entries = Vec::new();
            let mut all_ok = true;
            for (name, expr) in &monitored {
                let drift = conservation_drift(expr, &traj, field.states(), &params)?;
                let mut values = params.f64_values();
                for (s, v) in field.states().iter().zip(&y0) {
                    values.insert(s.clone(), *v);
                }
                let scale = expr.eval_f64(&values)?.abs().max(1.0);
                let threshold = 100.0 * args.rtol * scale;
                let ok = drift < threshold;
                all_ok &= ok;
                entries.push(json!({
                    "F": name,
                    "drift": drift,
                    "threshold": threshold,
                    "ok": ok,
                }));
            }
            Ok(Report::new("sim run")
                .input("system", system)
                .input("report", "drift")
                .verdict(if all_ok { Verdict::Pass } else { Verdict::Fail })
                .witness(json!({ "drift": entries, "steps": traj.steps })))
        }
        "fundamental" => {
            let case = CaseTag::parse(
                args.case
                    .as_deref()
                    .ok_or_else(|| Error::Invalid("--case is required for fundamental".into()))?,
            )?;
            let sys = seir_linear_system(case)?;
            let numeric = numeric_fundamental(&sys, &params, args.t1, &tol)?;
            let set = fundamental_columns(case)?;
            let values = params.f64_values_with_c3()?;
            let ev = NumericEval::new(&set.tower, values, 1e-10)?;
            let mut max_dev: f64 = 0.0;
            for (j, col) in set.columns.iter().enumerate() {
                for (i, entry) in col.iter().enumerate() {
                    let sym = ev.eval(entry, args.t1)?;
                    max_dev = max_dev.max((sym - numeric[i][j]).abs());
                }
            }
            let wronskian = det_f64(&numeric);
            let abel = abel_determinant(case, &params, args.t1)?;
            let ok = max_dev < 1e-8 && (wronskian - abel).abs() < 1e-8;
            Ok(Report::new("sim run")
                .input("case", case.as_str())
                .input("report", "fundamental")
                .input("t1", args.t1)
                .verdict(if ok { Verdict::Pass } else { Verdict::Fail })
                .witness(json!({
                    "matrix": numeric,
                    "max_symbolic_deviation": max_dev,
                    "wronskian": wronskian,
                    "abel": abel,
                })))
        }
        other => Err(Error::Invalid(format!(
            "unknown report kind `{other}` (drift | trajectory | fundamental)"
        ))),
    }
}
