//! Report and trace writers with fixed-precision numbers.

use std::path::Path;

use anyhow::{Context, Result};
use serde_json::Value;

use sympidx::geodesics::ShootingReport;

/// Rounds a float to 12 significant digits so reruns are byte-identical.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Rounds every float in a JSON tree; non-finite values become `null`.
pub fn rounded(v: &Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(round12).and_then(serde_json::Number::from_f64).map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.iter().map(rounded).collect()),
        Value::Object(m) => Value::Object(m.iter().map(|(k, v)| (k.clone(), rounded(v))).collect()),
        other => other.clone(),
    }
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&rounded(v))?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn cell(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{x:.0}")
    } else {
        format!("{:.11e}", x)
    }
}

pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&x| cell(x)))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per geodesic: velocity components, endpoint residual, Maslov data.
pub fn write_geodesics_csv(path: &Path, rep: &ShootingReport) -> Result<()> {
    let dim = rep.geodesics.first().map_or(0, |g| g.velocity.len());
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    let mut header: Vec<String> = (0..dim).map(|i| format!("v{i}")).collect();
    header.extend(["endpoint_residual", "maslov", "maslov_red"].map(String::from));
    w.write_record(&header)?;
    for g in &rep.geodesics {
        let mut rec: Vec<String> = g.velocity.iter().map(|&x| cell(round12(x))).collect();
        rec.push(format!("{:.3e}", g.endpoint_residual));
        rec.push(g.maslov.to_string());
        rec.push(g.maslov_red.map_or(String::new(), |m| m.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
