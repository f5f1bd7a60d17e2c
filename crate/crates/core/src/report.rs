//! Serialization of reports (JSON) and fields (CSV).
//!
//! JSON output is canonical: keys sorted, two-space indentation, floats in
//! scientific notation with 17 significant digits. Identical inputs give
//! byte-identical files.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::solver::{MixedSolution, Solved, SolveReport, TrajectoryPoint};

/// Formats a float with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        // keeps -0.0 and 0.0 apart
        return if v.is_sign_negative() { "-0.0000000000000000e0".into() } else { "0.0000000000000000e0".into() };
    }
    format!("{v:.16e}")
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&format_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&Value::String(s.clone()).to_string()),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(out, x, indent + 1);
                out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            for (k, key) in keys.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(out, &m[*key], indent + 1);
                out.push_str(if k + 1 < keys.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

/// Canonical JSON text of any serializable value.
pub fn canonical_json<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&mut out, &v, 0);
    out.push('\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, canonical_json(value)?)?;
    Ok(())
}

/// Wrapper written for every per-`eps` solve.
#[derive(Debug, Serialize)]
pub struct ReportEnvelope<'a> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub version: &'a str,
    pub status: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<&'a SolveReport>,
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "{header}")?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format_float(*v)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    f.flush()?;
    Ok(())
}

fn write_general(path: &Path, sol: &MixedSolution) -> Result<()> {
    let p = &sol.problem;
    let (u1, u2) = (sol.u1_nodes(), sol.u2_nodes());
    let xg = &p.grids.x;
    write_rows(
        path,
        "x1,x2,u1,u2,xi,eta,U",
        (0..p.len()).map(|k| {
            let x = xg.point(k);
            vec![x[0], x[1], u1[k], u2[k], sol.state.xi[k], sol.state.eta[k], p.u[k]]
        }),
    )
}

/// Field CSV of a converged solve, on the x-nodes.
pub fn write_fields(path: &Path, solved: &Solved) -> Result<()> {
    match solved {
        Solved::General(sol) => write_general(path, sol),
        Solved::LambdaOne(sol) => {
            let (u1, u2) = (sol.u1_nodes(), sol.u2_nodes());
            let r = sol.radii();
            write_rows(
                path,
                "r,u1,u2,xi,eta",
                (0..r.len()).map(|k| vec![r[k], u1[k], u2[k], sol.state.xi[k], sol.state.eta[k]]),
            )
        }
    }
}

pub fn write_trajectory(path: &Path, traj: &[TrajectoryPoint]) -> Result<()> {
    write_rows(path, "r,u1,du1,u2,du2", traj.iter().map(|p| vec![p.r, p.u1, p.du1, p.u2, p.du2]))
}

/// Generic table writer for named columns of equal length.
pub fn write_columns(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<()> {
    let n = columns.first().map_or(0, |c| c.len());
    write_rows(path, &names.join(","), (0..n).map(|k| columns.iter().map(|c| c[k]).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        zeta: f64,
        alpha: Vec<f64>,
        name: &'static str,
        count: usize,
        none: Option<f64>,
    }

    #[test]
    fn floats_carry_seventeen_digits() {
        assert_eq!(format_float(0.1), "1.0000000000000001e-1");
        assert_eq!(format_float(-2.5), "-2.5000000000000000e0");
        let back: f64 = format_float(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn output_is_sorted_and_reproducible() {
        let s = Sample { zeta: 1.0 / 3.0, alpha: vec![1e-300, 2.0], name: "x\"y", count: 7, none: None };
        let a = canonical_json(&s).unwrap();
        assert_eq!(a, canonical_json(&s).unwrap());
        let pos = |k: &str| a.find(k).unwrap();
        assert!(pos("alpha") < pos("count") && pos("count") < pos("name") && pos("name") < pos("zeta"));
        assert!(a.contains("\"count\": 7"));
        assert!(a.contains("3.3333333333333331e-1"));
        let parsed: Value = serde_json::from_str(&a).unwrap();
        assert_eq!(parsed["zeta"].as_f64().unwrap(), 1.0 / 3.0);
        assert!(parsed["none"].is_null());
    }
}
