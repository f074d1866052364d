//! JSON-lines reports: one named check per line.

use std::io::{self, Write};

use serde::Serialize;
use serde_json::Value;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub pass: bool,
    #[serde(skip_serializing_if = "Value::is_null")]
    pub detail: Value,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, check: impl Into<String>, pass: bool, detail: Value) {
        self.checks.push(Check {
            check: check.into(),
            pass,
            detail,
        });
    }

    /// Records a result: passes on `Ok` (with the value as detail), fails
    /// with the error message otherwise.
    pub fn record<T: Serialize>(&mut self, check: impl Into<String>, res: &crate::Result<T>) {
        match res {
            Ok(v) => self.push(check, true, serde_json::to_value(v).unwrap_or(Value::Null)),
            Err(e) => self.push(check, false, Value::String(e.to_string())),
        }
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write_to(&self, out: &mut dyn Write) -> io::Result<()> {
        for c in &self.checks {
            serde_json::to_writer(&mut *out, c)?;
            writeln!(out)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lines_are_stable() {
        let mut r = Report::new();
        r.push("a", true, serde_json::json!({"z": 1, "b": 2}));
        r.record::<u8>("b", &Err(crate::Error::Precondition("x".into())));
        let mut out = Vec::new();
        r.write_to(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "{\"check\":\"a\",\"pass\":true,\"detail\":{\"b\":2,\"z\":1}}\n{\"check\":\"b\",\"pass\":false,\"detail\":\"precondition failed: x\"}\n"
        );
        assert!(!r.all_pass());
    }
}
