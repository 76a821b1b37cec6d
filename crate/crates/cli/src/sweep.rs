use std::collections::BTreeMap;

use recbound::exec::{map_ordered, Execution};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::real;
use crate::run::{run, Settings};

/// One grid point: parameter names in sorted order with their values.
pub type Point = Vec<(String, f64)>;

/// Removes the `[sweep]` table from `value` and expands it into the
/// cartesian product of its lists, last name varying fastest.
pub fn grid(value: &mut toml::Value) -> Result<Vec<Point>, CliError> {
    let table = value
        .as_table_mut()
        .ok_or_else(|| CliError::Config("config must be a table".into()))?;
    let sweep = table
        .remove("sweep")
        .ok_or_else(|| CliError::Config("sweep needs a [sweep] table of parameter lists".into()))?;
    let sweep: BTreeMap<String, Vec<f64>> = sweep
        .try_into()
        .map_err(|e: toml::de::Error| CliError::Config(format!("[sweep]: {}", e.message())))?;
    if sweep.is_empty() || sweep.values().any(Vec::is_empty) {
        return Err(CliError::Config("the sweep grid is empty".into()));
    }
    let mut points: Vec<Point> = vec![Vec::new()];
    for (name, values) in &sweep {
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((name.clone(), v));
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// Replaces `{name}` in every string of `value`. A string that is exactly
/// `{name}` becomes the number itself.
pub fn substitute(value: &toml::Value, point: &Point) -> toml::Value {
    match value {
        toml::Value::String(s) => {
            for (name, v) in point {
                if *s == format!("{{{name}}}") {
                    return toml::Value::Float(*v);
                }
            }
            let mut out = s.clone();
            for (name, v) in point {
                out = out.replace(&format!("{{{name}}}"), &v.to_string());
            }
            toml::Value::String(out)
        }
        toml::Value::Array(a) => toml::Value::Array(a.iter().map(|v| substitute(v, point)).collect()),
        toml::Value::Table(t) => toml::Value::Table(
            t.iter()
                .map(|(k, v)| (k.clone(), substitute(v, point)))
                .collect(),
        ),
        other => other.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct PointResult {
    pub point: Point,
    pub exit_code: u8,
    pub verdict: String,
    pub verdict_class: String,
    pub horizon: Option<u64>,
    pub sup_abs: Option<f64>,
    pub growth_exponent: Option<f64>,
    pub bound_value: Option<f64>,
    pub error: String,
}

fn run_point(base: &toml::Value, point: &Point, settings: &Settings) -> PointResult {
    let outcome = ExperimentConfig::from_value(substitute(base, point)).and_then(|cfg| run(&cfg, settings));
    match outcome {
        Ok(o) => PointResult {
            point: point.clone(),
            exit_code: 0,
            verdict: o.report.verdict,
            verdict_class: o.report.verdict_class.into(),
            horizon: Some(o.report.horizon),
            sup_abs: o.report.sup_abs,
            growth_exponent: o.report.growth_exponent,
            bound_value: o.report.bound_value,
            error: String::new(),
        },
        Err(e) => PointResult {
            point: point.clone(),
            exit_code: e.exit_code(),
            verdict: String::new(),
            verdict_class: String::new(),
            horizon: None,
            sup_abs: None,
            growth_exponent: None,
            bound_value: None,
            error: e.to_string(),
        },
    }
}

/// Runs every point; results come back in grid order.
pub fn run_sweep(base: &toml::Value, points: &[Point], settings: &Settings) -> Vec<PointResult> {
    let exec = if settings.exec.is_parallel() {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    map_ordered(exec, points, |p| run_point(base, p, settings))
}

fn opt(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

/// Aggregate CSV, one row per grid point in grid order.
pub fn aggregate_csv(results: &[PointResult]) -> Result<String, CliError> {
    let err = |e: csv::Error| CliError::Output(e.to_string());
    let mut w = csv::Writer::from_writer(Vec::new());
    let names: Vec<&str> = results
        .first()
        .map(|r| r.point.iter().map(|(n, _)| n.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["point"];
    header.extend(&names);
    header.extend([
        "exit_code",
        "verdict",
        "verdict_class",
        "horizon",
        "sup_abs",
        "growth_exponent",
        "bound_value",
        "error",
    ]);
    w.write_record(&header).map_err(err)?;
    for (i, r) in results.iter().enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(r.point.iter().map(|(_, v)| real(*v)));
        row.extend([
            r.exit_code.to_string(),
            r.verdict.clone(),
            r.verdict_class.clone(),
            r.horizon.map(|h| h.to_string()).unwrap_or_default(),
            opt(r.sup_abs),
            opt(r.growth_exponent),
            opt(r.bound_value),
            r.error.clone(),
        ]);
        w.write_record(&row).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(text: &str) -> toml::Value {
        toml::Value::Table(text.parse().unwrap())
    }

    #[test]
    fn cartesian_order() {
        let mut v = value("kind = \"expsum\"\n[sweep]\nb = [1.0, 2.0]\na = [0.5, 0.25, 0.125]\n");
        let g = grid(&mut v).unwrap();
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![("a".to_string(), 0.5), ("b".to_string(), 1.0)]);
        assert_eq!(g[1], vec![("a".to_string(), 0.5), ("b".to_string(), 2.0)]);
        assert!(v.get("sweep").is_none());
    }

    #[test]
    fn empty_grids() {
        assert!(grid(&mut value("[sweep]\na = []\n")).is_err());
        assert!(grid(&mut value("[sweep]\n")).is_err());
        assert!(grid(&mut value("kind = 1\n")).is_err());
    }

    #[test]
    fn substitution() {
        let v = value("x = \"{phi}\"\ny = \"n^{alpha} + {phi}*n\"\nz = [\"{alpha}\"]\n");
        let s = substitute(&v, &vec![("alpha".into(), 0.5), ("phi".into(), 0.25)]);
        assert_eq!(s["x"].as_float(), Some(0.25));
        assert_eq!(s["y"].as_str(), Some("n^0.5 + 0.25*n"));
        assert_eq!(s["z"][0].as_float(), Some(0.5));
    }
}
