use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::CliError;

/// Serializes a report as TOML.
pub fn report_text<T: Serialize>(report: &T) -> Result<String, CliError> {
    toml::to_string(report).map_err(|e| CliError::Output(format!("report serialization: {e}")))
}

/// Shortest representation that parses back to the same `f64`, with an
/// exponent for very large or small magnitudes.
pub fn real(x: f64) -> String {
    format!("{x:?}")
}

/// Samples as CSV with header `n,abs,re,im`; reals use shortest
/// round-trip formatting.
pub fn samples_csv(samples: &[(u64, Complex64)]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Output(e.to_string());
    w.write_record(["n", "abs", "re", "im"]).map_err(err)?;
    for &(n, z) in samples {
        w.write_record([
            n.to_string(),
            real(z.norm()),
            real(z.re),
            real(z.im),
        ])
        .map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

/// Writes every `(name, contents)` into `dir`. All contents are produced
/// before this is called, so a failed analysis leaves no files behind.
pub fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Output(format!("{}: {e}", dir.display())))?;
    for (name, text) in files {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_format() {
        let text = samples_csv(&[(1, Complex64::new(0.1, -3.0)), (2, Complex64::new(1e-300, 0.0))]).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "n,abs,re,im");
        let fields: Vec<f64> = lines[1].split(',').skip(2).map(|s| s.parse().unwrap()).collect();
        assert_eq!(fields, vec![0.1, -3.0]);
        assert_eq!(lines[2], "2,1e-300,1e-300,0.0");
    }
}
