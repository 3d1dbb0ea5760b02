//! JSON documents, each tagged with `"format": 1`.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::formats::expr::parse_expr;
use crate::linalg::Matrix;
use crate::linearizer::{Divergence, Lift, ProfileEntry};
use crate::numerics::VerificationReport;
use crate::poly::{format_rational_pq, parse_rational, PolyMap};
use crate::wdg::WdgReport;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LiftDoc {
    format: u32,
    n: usize,
    k: usize,
    vars: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<String>>,
    observables: Vec<String>,
    generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    provenance: Vec<String>,
}

fn check_format(format: u32) -> Result<()> {
    if format == FORMAT_VERSION {
        Ok(())
    } else {
        Err(Error::Format(format!("unsupported format version {format}")))
    }
}

pub fn lift_to_json<S: AsRef<str>>(lift: &Lift, vars: &[S]) -> String {
    let doc = LiftDoc {
        format: FORMAT_VERSION,
        n: lift.n(),
        k: lift.k(),
        vars: vars.iter().map(|v| v.as_ref().to_string()).collect(),
        a: lift
            .matrix()
            .to_rows()
            .iter()
            .map(|r| r.iter().map(format_rational_pq).collect())
            .collect(),
        observables: lift.observables().render(vars),
        generators: lift.generator_functions().iter().map(|g| g.render(vars)).collect(),
        provenance: lift.provenance().to_vec(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("plain data serializes");
    out.push('\n');
    out
}

/// Returns the variable names stored in the document alongside the lift.
pub fn lift_from_json(text: &str) -> Result<(Vec<String>, Lift)> {
    let doc: LiftDoc = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    check_format(doc.format)?;
    if doc.vars.len() != doc.n {
        return Err(Error::Format(format!(
            "expected {} variable names, found {}",
            doc.n,
            doc.vars.len()
        )));
    }
    if doc.observables.len() != doc.k {
        return Err(Error::Format(format!(
            "expected {} observables, found {}",
            doc.k,
            doc.observables.len()
        )));
    }
    let rows = doc
        .a
        .iter()
        .map(|r| r.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let a = Matrix::from_rows(rows).map_err(|e| Error::Format(format!("matrix A: {e}")))?;
    let observables = doc
        .observables
        .iter()
        .map(|s| parse_expr(s, &doc.vars))
        .collect::<Result<Vec<_>>>()?;
    let lift = Lift::new(doc.n, a, PolyMap::new(doc.n, observables)?).map_err(|e| Error::Format(e.to_string()))?;
    let generators = doc
        .generators
        .iter()
        .map(|s| parse_expr(s, &doc.vars))
        .collect::<Result<Vec<_>>>()?;
    if generators != lift.generator_functions() {
        return Err(Error::Format(
            "generators must be the coordinates followed by the observables".into(),
        ));
    }
    let lift = doc.provenance.into_iter().fold(lift, |l, p| l.with_provenance(p));
    Ok((doc.vars, lift))
}

pub fn wdg_report_to_value<S: AsRef<str>>(report: &WdgReport, vars: &[S]) -> Value {
    let name = |i: usize| vars[i].as_ref().to_string();
    let edges: Vec<Value> = report
        .graph
        .edges()
        .iter()
        .map(|e| json!({"from": name(e.from), "to": name(e.to), "weight": e.weight.render(vars)}))
        .collect();
    let cycles: Vec<Value> = report
        .cycles
        .iter()
        .map(|c| {
            json!({
                "nodes": c.nodes.iter().map(|&i| name(i)).collect::<Vec<_>>(),
                "product": c.product.render(vars),
                "constant": c.is_constant(),
            })
        })
        .collect();
    json!({
        "format": FORMAT_VERSION,
        "n": report.graph.n(),
        "vars": vars.iter().map(|v| v.as_ref()).collect::<Vec<_>>(),
        "edges": edges,
        "cycles": cycles,
        "satisfied": report.satisfied,
        "offending": report.offending,
    })
}

pub fn divergence_to_value<S: AsRef<str>>(d: &Divergence, vars: &[S]) -> Value {
    let leading: serde_json::Map<String, Value> = vars
        .iter()
        .zip(&d.leading_degrees)
        .map(|(v, deg)| (v.as_ref().to_string(), json!(deg)))
        .collect();
    json!({
        "format": FORMAT_VERSION,
        "status": "diverging",
        "verdict": "inconclusive (budget exhausted)",
        "reason": d.reason,
        "dims": d.dims,
        "max_degree_seen": d.max_degree_seen,
        "leading_degrees": leading,
    })
}

pub fn profile_to_value(entries: &[ProfileEntry], watch: &str, component: usize) -> Value {
    json!({
        "format": FORMAT_VERSION,
        "watch": watch,
        "component": component + 1,
        "profile": entries
            .iter()
            .map(|e| json!({"k": e.k, "dim": e.dim, "leading_degree": e.leading_degree}))
            .collect::<Vec<_>>(),
    })
}

pub fn verification_to_value(report: &VerificationReport) -> Value {
    json!({
        "format": FORMAT_VERSION,
        "passed": report.passed,
        "max_abs_error": report.max_abs_error,
        "max_rel_error": report.max_rel_error,
        "t_end": report.t_end,
        "steps": report.steps,
        "tol": report.tol,
        "seed": report.seed,
        "initial_conditions": report
            .per_initial
            .iter()
            .map(|r| json!({"x0": r.x0, "max_abs_error": r.max_abs_error, "max_rel_error": r.max_rel_error}))
            .collect::<Vec<_>>(),
    })
}
