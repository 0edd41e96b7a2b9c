use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;

/// Shortest decimal that parses back to the same `f64`. Negative zero is
/// written as `0.0`.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0.0".into();
    }
    format!("{x:?}")
}

/// Provenance written at the top of every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub program: String,
    pub version: String,
    pub library_version: String,
    pub invocation: String,
    /// Settings after merging the config file, so a run can be repeated
    /// from the header alone.
    pub settings: Value,
}

impl Header {
    pub fn new(args: &[String], settings: Value) -> Self {
        let invocation = std::iter::once("ptchain")
            .chain(args.iter().skip(1).map(String::as_str))
            .map(quote)
            .collect::<Vec<_>>()
            .join(" ");
        Self {
            program: "ptchain".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            library_version: ptchain::VERSION.into(),
            invocation,
            settings,
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# {} {} (library {})\n# invocation: {}\n# settings: {}\n",
            self.program, self.version, self.library_version, self.invocation, self.settings
        )
    }
}

fn quote(s: &str) -> String {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || "-_.:/=,+".contains(c)) {
        s.to_string()
    } else {
        format!("'{}'", s.replace('\'', "'\\''"))
    }
}

/// CSV table with optional trailing comment lines.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<String>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let mut s = header.comment_lines();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        for f in &self.footer {
            let _ = writeln!(s, "# {f}");
        }
        s
    }
}

/// `{"header": …, "data": …}` plus any extra top-level fields.
pub fn render_json(header: &Header, data: Value, extra: Vec<(&str, Value)>) -> Result<String, CliError> {
    let mut doc = json!({ "header": header, "data": data });
    for (k, v) in extra {
        doc[k] = v;
    }
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Io(format!("writing {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                // The reader went away (e.g. `| head`); nothing left to do.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r.map_err(|e| CliError::Io(format!("writing stdout: {e}"))),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0, -2.5e-300, 1.0 / 3.0, 2f64.sqrt(), 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(0.1), "0.1");
        assert_eq!(num(-0.0), "0.0");
    }

    #[test]
    fn invocation_is_quoted_when_needed() {
        let args = vec!["/some/path/ptchain".to_string(), "spectrum".into(), "--out".into(), "a b.csv".into()];
        let h = Header::new(&args, Value::Null);
        assert_eq!(h.invocation, "ptchain spectrum --out 'a b.csv'");
    }
}
