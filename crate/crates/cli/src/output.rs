//! Artifact writers. Every float is printed with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Number, Value};

use crate::error::CliError;

/// `x` in scientific notation with 17 significant digits and a signed
/// exponent, e.g. `-2.5000000000000000e-3`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.16e}");
    match s.split_once('e') {
        Some((m, e)) if !e.starts_with('-') => format!("{m}e+{e}"),
        _ => s,
    }
}

/// Rewrites every non-integer number in `v` with [`fmt_f64`].
pub fn normalize(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(fmt_f64(x).parse::<Number>().expect("formatted float parses")),
            _ => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, normalize(v))).collect()),
        other => other,
    }
}

pub fn to_json<S: Serialize>(x: &S) -> String {
    let v = serde_json::to_value(x).expect("artifact types serialize");
    let mut s = serde_json::to_string_pretty(&normalize(v)).expect("values serialize");
    s.push('\n');
    s
}

/// Header plus rows of floats as CSV text.
pub fn to_csv(header: &[String], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| fmt_f64(x)).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

/// Rows as a JSON array of objects keyed by the header.
pub fn table_json(header: &[String], rows: &[Vec<f64>]) -> String {
    let arr: Vec<Value> = rows
        .iter()
        .map(|r| {
            let obj = header.iter().cloned().zip(r.iter().map(|&x| serde_json::json!(x))).collect();
            Value::Object(obj)
        })
        .collect();
    to_json(&arr)
}

/// Output directory that records every file written into it.
#[derive(Debug)]
pub struct Sink {
    dir: PathBuf,
    written: Vec<String>,
}

impl Sink {
    pub fn create(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(path)
    }

    pub fn json<S: Serialize>(&mut self, name: &str, x: &S) -> Result<PathBuf, CliError> {
        self.write(name, &to_json(x))
    }

    /// Writes `stem.csv` and/or `stem.json` depending on `formats`.
    pub fn table(
        &mut self,
        stem: &str,
        header: &[String],
        rows: &[Vec<f64>],
        formats: &[crate::config::Format],
    ) -> Result<(), CliError> {
        use crate::config::Format;
        if formats.contains(&Format::Csv) {
            self.write(&format!("{stem}.csv"), &to_csv(header, rows))?;
        }
        if formats.contains(&Format::Json) {
            self.write(&format!("{stem}.json"), &table_json(header, rows))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e+0");
        assert_eq!(fmt_f64(2.5e20), "2.5000000000000000e+20");
        assert_eq!(fmt_f64(f64::NAN), "NaN");
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -1e-300, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn json_floats_rewritten_integers_kept() {
        let v = serde_json::json!({"a": 0.5, "n": 3, "xs": [1.0, f64::NAN], "s": "x"});
        let s = to_json(&v);
        assert!(s.contains("\"a\": 5.0000000000000000e-1"));
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("1.0000000000000000e+0"));
        assert!(s.contains("null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.5));
    }

    #[test]
    fn csv_layout() {
        let h = vec!["tau".to_string(), "S".to_string()];
        let s = to_csv(&h, &[vec![1.0, 2.0]]);
        assert_eq!(s, "tau,S\n1.0000000000000000e+0,2.0000000000000000e+0\n");
    }
}
