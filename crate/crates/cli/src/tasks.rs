//! Task execution: each task yields one JSON report and a list of checks
//! against the scenario's expected values.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};

use sympidx::geodesics::{morse_relations_check, shoot_geodesics, ShootingOptions, ShootingReport};
use sympidx::indexform::{self, IndexOptions, Verdict};
use sympidx::maslov::{self, MaslovOptions};
use sympidx::reduction::{self, Frame};
use sympidx::sds;
use sympidx::Error;

use crate::output;
use crate::scenario::{BuiltManifold, BuiltSystem, Options, Scenario, Task, TraceKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Mismatch,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub key: String,
    pub expected: Value,
    pub actual: Value,
    pub ok: bool,
}

pub struct TaskOutcome {
    pub task: Task,
    pub status: Status,
    pub report: Value,
}

fn check<T: Serialize + PartialEq>(checks: &mut Vec<Check>, key: &str, expected: Option<T>, actual: Option<T>) {
    if let Some(e) = expected {
        let ok = actual.as_ref() == Some(&e);
        checks.push(Check { key: key.into(), expected: json!(e), actual: json!(actual), ok });
    }
}

pub fn maslov_options(o: &Options) -> MaslovOptions {
    MaslovOptions { steps: o.steps, rank_tol: o.tol, sig_tol: o.tol, ..MaslovOptions::default() }
}

pub fn index_options(o: &Options) -> IndexOptions {
    IndexOptions { quad_order: o.quad_order, tol: o.tol, agreeing_meshes: o.agreeing_meshes, maslov: maslov_options(o) }
}

fn shooting_options(o: &Options) -> ShootingOptions {
    ShootingOptions { grid: o.grid.clone(), bound: o.bound, maslov: maslov_options(o), ..ShootingOptions::default() }
}

fn need_frame<'a>(sys: &'a BuiltSystem, task: Task) -> std::result::Result<&'a Frame, Error> {
    sys.frame
        .as_ref()
        .ok_or_else(|| Error::InvalidInput(format!("task '{}' needs system.frame", task.name())))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

/// Runs one task on a linear system. Numerical failures are returned as `Err`
/// and end up in the report.
fn system_task(task: Task, sys: &BuiltSystem, o: &Options, checks: &mut Vec<Check>) -> std::result::Result<Value, Error> {
    let mo = maslov_options(o);
    match task {
        Task::Integrate => {
            let phi = sds::integrate_fundamental(&sys.x, o.steps, mo.symplectic_tol)?;
            let last = phi.values().last().expect("nonempty");
            Ok(json!({
                "steps": o.steps,
                "max_symplectic_residual": phi.max_residual(),
                "reprojections": phi.reprojections().len(),
                "final": (0..last.nrows()).map(|i| last.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
            }))
        }
        Task::Focal => {
            let phi = sds::integrate_fundamental(&sys.x, o.steps, mo.symplectic_tol)?;
            let inst = maslov::find_focal_instants(&phi, &sys.l0, &mo)?;
            Ok(json!({ "count": inst.len(), "instants": inst }))
        }
        Task::Maslov => {
            let rep = maslov::maslov_index(&sys.x, &sys.l0, &mo)?;
            let mut v = to_value(&rep);
            if o.stability_trials > 0 {
                let st = maslov::perturbation_stability(&sys.x, &sys.l0, o.stability_delta, o.stability_trials, o.seed, &mo)?;
                v["stability"] = to_value(&st);
            }
            Ok(v)
        }
        Task::Reduce => {
            let frame = need_frame(sys, task)?;
            let rc = reduction::reduced_coefficients(&sys.x, frame)?;
            let bpath = reduction::b_integral(&rc, o.steps, o.tol)?;
            let xr = reduction::build_reduced(&rc)?;
            let red = match maslov::maslov_index(&xr, &sds::InitialData::l0(rc.rank()), &mo) {
                Ok(r) => json!({ "total": r.total, "instants": r.instants }),
                Err(Error::EndpointFocal(b)) => json!({ "error": Error::EndpointConjugate(b).to_string() }),
                Err(e) => return Err(e),
            };
            let shortcut = match reduction::reduced_maslov_shortcut(&rc.cal_b_fn(), &bpath) {
                Ok(v) => json!(v),
                Err(e) => json!({ "error": e.to_string() }),
            };
            let (a, b) = sys.x.interval();
            let asym = (0..=32)
                .map(|k| a + (b - a) * k as f64 / 32.0)
                .map(|t| rc.cal_a_ant(t).abs().max())
                .fold(0.0, f64::max);
            Ok(json!({
                "rank": rc.rank(),
                "family_index": rc.index(),
                "system_index": sys.x.b_index(),
                "cal_a_antisymmetric_max": asym,
                "b_integral_instants": bpath.instants,
                "b_integral_endpoint_degenerate": bpath.endpoint_degenerate,
                "maslov_red": red,
                "shortcut": shortcut,
            }))
        }
        Task::IndexVerify => {
            let frame = need_frame(sys, task)?;
            let rep = indexform::verify_index_theorem(&sys.x, &sys.l0, frame, &o.meshes, &index_options(o))?;
            let v = to_value(&rep);
            checks.push(Check {
                key: "verdict".into(),
                expected: json!("equal"),
                actual: v["verdict"].clone(),
                ok: rep.verdict == Verdict::Equal,
            });
            Ok(v)
        }
        Task::GeodesicCount | Task::MorseCheck => unreachable!("validated against the scenario block"),
    }
}

fn geodesic_table(rep: &ShootingReport) -> Value {
    let rows: Vec<Value> = rep
        .geodesics
        .iter()
        .map(|g| {
            json!({
                "velocity": g.velocity,
                "endpoint_residual": g.endpoint_residual,
                "maslov": g.maslov,
                "maslov_red": g.maslov_red,
                "morse_index": g.morse_index(),
            })
        })
        .collect();
    let counts: BTreeMap<String, usize> = rep.counts().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    json!({
        "cells": rep.cells,
        "unresolved_cells": rep.unresolved_cells,
        "focal_rejected": rep.focal_rejected,
        "count": rep.geodesics.len(),
        "counts_by_index": counts,
        "geodesics": rows,
    })
}

/// Compares the expected-values block with a task's report.
fn expected_checks(sc: &Scenario, task: Task, v: &Value, checks: &mut Vec<Check>) {
    let e = &sc.expected;
    let int = |p: &str| v.pointer(p).and_then(Value::as_i64);
    match task {
        Task::Maslov => check(checks, "maslov", e.maslov, int("/total")),
        Task::Focal => check(checks, "focal_count", e.focal_count.map(|c| c as i64), int("/count")),
        Task::Reduce => {
            check(checks, "maslov_red", e.maslov_red, int("/maslov_red/total"));
            check(checks, "family_index", e.family_index.map(|c| c as i64), int("/family_index"));
        }
        Task::IndexVerify => {
            check(checks, "index_lhs", e.index_lhs, int("/lhs"));
            check(checks, "index_rhs", e.index_rhs, int("/rhs"));
            check(checks, "maslov", e.maslov, int("/rhs_terms/maslov"));
            check(checks, "maslov_red", e.maslov_red, int("/rhs_terms/maslov_red"));
        }
        Task::GeodesicCount => {
            check(checks, "geodesics", e.geodesics.map(|c| c as i64), int("/count"));
            let mut idx: Option<Vec<i64>> = v
                .get("geodesics")
                .and_then(Value::as_array)
                .map(|a| a.iter().filter_map(|g| g["morse_index"].as_i64()).collect());
            if let Some(i) = idx.as_mut() {
                i.sort_unstable();
            }
            check(checks, "morse_indices", e.morse_indices.clone(), idx);
        }
        Task::MorseCheck => check(checks, "morse_holds", e.morse_holds, v.get("holds").and_then(Value::as_bool)),
        Task::Integrate => {}
    }
}

fn finish(sc: &Scenario, task: Task, result: std::result::Result<Value, Error>, mut checks: Vec<Check>) -> TaskOutcome {
    let (status, body) = match result {
        Ok(v) => {
            expected_checks(sc, task, &v, &mut checks);
            let st = if checks.iter().all(|c| c.ok) { Status::Ok } else { Status::Mismatch };
            (st, v)
        }
        Err(e) => (Status::Error, json!({ "error": e.to_string() })),
    };
    let mut report = Map::new();
    report.insert("scenario".into(), json!(sc.name));
    report.insert("task".into(), json!(task.name()));
    report.insert("status".into(), to_value(&status));
    if let Value::Object(m) = body {
        report.extend(m);
    }
    report.insert("checks".into(), to_value(&checks));
    report.insert("options".into(), to_value(&sc.options));
    TaskOutcome { task, status, report: Value::Object(report) }
}

pub fn run_system(sc: &Scenario, sys: &BuiltSystem) -> Vec<TaskOutcome> {
    sc.tasks
        .iter()
        .map(|&task| {
            let mut checks = Vec::new();
            let res = system_task(task, sys, &sc.options, &mut checks);
            finish(sc, task, res, checks)
        })
        .collect()
}

pub fn run_manifold(sc: &Scenario, m: &BuiltManifold, out: &Path) -> Result<Vec<TaskOutcome>> {
    let so = shooting_options(&sc.options);
    let mut shot: Option<std::result::Result<ShootingReport, String>> = None;
    let mut outcomes = Vec::new();
    for &task in &sc.tasks {
        let rep = shot
            .get_or_insert_with(|| shoot_geodesics(m.manifold.clone(), &m.p, &m.q, m.interval, &m.fields, &so).map_err(|e| e.to_string()))
            .clone();
        let mut checks = Vec::new();
        let res = match (task, rep) {
            (_, Err(msg)) => Err(Error::Integration(msg)),
            (Task::GeodesicCount, Ok(r)) => {
                output::write_geodesics_csv(&out.join("geodesics.csv"), &r)?;
                let mut v = geodesic_table(&r);
                v["shooting_options"] = to_value(&so);
                Ok(v)
            }
            (Task::MorseCheck, Ok(r)) => {
                let verdict = morse_relations_check(&r.counts(), &sc.options.poincare, sc.options.degree_cap);
                checks.push(Check { key: "holds".into(), expected: json!(true), actual: json!(verdict.holds), ok: verdict.holds });
                let mut v = to_value(&verdict);
                v["counts_by_index"] = geodesic_table(&r)["counts_by_index"].clone();
                Ok(v)
            }
            _ => Err(Error::InvalidInput(format!("task '{}' needs a [system] block", task.name()))),
        };
        outcomes.push(finish(sc, task, res, checks));
    }
    Ok(outcomes)
}

/// Writes one CSV trace for a linear system.
pub fn emit_trace(kind: TraceKind, sys: &BuiltSystem, o: &Options, out: &Path) -> Result<std::path::PathBuf> {
    let path = out.join(format!("trace_{}.csv", kind.name()));
    let mo = maslov_options(o);
    match kind {
        TraceKind::DetV | TraceKind::SigmaMin => {
            let phi = sds::integrate_fundamental(&sys.x, o.steps, mo.symplectic_tol)?;
            let rows = maslov::focal_trace(&phi, &sys.l0, o.trace_samples);
            if kind == TraceKind::DetV {
                output::write_csv(&path, &["t", "det_v", "det_v_normalized"], rows.iter().map(|r| vec![r.t, r.det_v, r.det_v_normalized]))?;
            } else {
                output::write_csv(&path, &["t", "sigma_min"], rows.iter().map(|r| vec![r.t, r.sigma_min]))?;
            }
        }
        TraceKind::DetBint => {
            let frame = sys.frame.as_ref().ok_or_else(|| anyhow!("trace detBint needs system.frame"))?;
            let rc = reduction::reduced_coefficients(&sys.x, frame)?;
            let bpath = reduction::b_integral(&rc, o.trace_samples.max(2), o.tol)?;
            let rows = reduction::b_integral_trace(&bpath);
            output::write_csv(&path, &["t", "det_bint", "sigma_min"], rows.iter().map(|r| vec![r.t, r.det, r.sigma_min]))?;
        }
        TraceKind::Eigenflow => {
            let frame = sys.frame.as_ref().ok_or_else(|| anyhow!("trace eigenflow needs system.frame"))?;
            let rows = indexform::eigenflow(&sys.x, &sys.l0, frame, &o.meshes, o.eigenflow_count)?;
            output::write_csv(
                &path,
                &["intervals", "rank", "eigenvalue"],
                rows.iter().map(|r| vec![r.intervals as f64, r.rank as f64, r.eigenvalue]),
            )?;
        }
    }
    Ok(path)
}
