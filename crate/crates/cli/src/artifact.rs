//! CSV artifacts: a `# key=value` header echoing the resolved
//! configuration, then one header row and the data rows, LF-terminated.

use std::io::Write;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use arqsched::ValueReport;

pub type Echo = Vec<(String, String)>;

pub fn write_csv<W: Write, T: Serialize>(mut out: W, echo: &[(String, String)], rows: &[T]) -> Result<()> {
    for (k, v) in echo {
        writeln!(out, "# {k}={v}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_csv`].
pub fn read_csv<T: DeserializeOwned>(text: &str) -> Result<(Echo, Vec<T>)> {
    let mut echo = Vec::new();
    let mut body = String::new();
    for line in text.split_inclusive('\n') {
        match line.strip_prefix("# ") {
            Some(kv) => {
                let (k, v) = kv.trim_end_matches('\n').split_once('=').context("malformed config echo line")?;
                echo.push((k.to_string(), v.to_string()));
            }
            None => body.push_str(line),
        }
    }
    let mut rd = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let rows = rd.deserialize().collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((echo, rows))
}

/// One evaluated policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueRow {
    pub policy: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub m: u32,
    pub p: String,
    pub r: String,
    pub delay_pmf: String,
    pub value: f64,
    pub stderr: Option<f64>,
    /// Left empty unless timing was requested, keeping outputs reproducible.
    pub runtime_ms: Option<f64>,
}

impl ValueRow {
    pub fn from_report(report: &ValueReport, runtime_ms: Option<f64>) -> Self {
        let get = |key: &str| report.config.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone()).unwrap_or_default();
        Self {
            policy: report.label.clone(),
            n: get("n").parse().unwrap_or(0),
            m: report.horizon(),
            p: get("p"),
            r: get("r"),
            delay_pmf: get("delay"),
            value: report.total,
            stderr: report.stderr,
            runtime_ms,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![
            ValueRow {
                policy: "alpha:1,0,0.5,1".into(),
                n: 2,
                m: 7,
                p: "0.9".into(),
                r: "0.1".into(),
                delay_pmf: "0.3333333333333333,0.6666666666666666".into(),
                value: 1.0 / 3.0,
                stderr: Some(1e-17),
                runtime_ms: None,
            },
            ValueRow {
                policy: "greedy".into(),
                n: 2,
                m: 7,
                p: "0.9".into(),
                r: "0.1".into(),
                delay_pmf: "1".into(),
                value: 5.123456789012345,
                stderr: None,
                runtime_ms: Some(2.5),
            },
        ];
        let echo = vec![("n".to_string(), "2".to_string()), ("delay".to_string(), "0.5,0.5".to_string())];
        let mut buf = Vec::new();
        write_csv(&mut buf, &echo, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.contains('\r'));
        assert!(text.contains("\"alpha:1,0,0.5,1\""));
        let (e, back): (Echo, Vec<ValueRow>) = read_csv(&text).unwrap();
        assert_eq!(e, echo);
        assert_eq!(back, rows);
    }
}
