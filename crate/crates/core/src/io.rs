//! CSV formats: tabulated payoffs, shortfall scenarios, liquidation
//! schedules, and the metadata-prefixed result tables.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::payoff::Payoff;

/// Shortest round-trip formatting at 17 significant digits; infinities are
/// written as `inf` / `-inf`.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::Table(format!("not a number: {s:?}")))
}

/// A parsed result table: `# key: value` metadata lines, a header row, and
/// string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Table(format!("missing column {name:?}")))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| parse_f64(&r[c])).collect()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub fn read_table_from<R: Read>(mut input: R) -> Result<Table> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let metadata = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| {
            let body = l.trim_start_matches('#').trim();
            body.split_once(':').map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        })
        .collect();
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).has_headers(true).from_reader(text.as_bytes());
    let headers = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for rec in reader.records() {
        rows.push(rec?.iter().map(|c| c.trim().to_string()).collect());
    }
    Ok(Table { metadata, headers, rows })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let f = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_table_from(f)
}

fn expect_headers(t: &Table, expected: &[&str], what: &str) -> Result<()> {
    if t.headers.len() != expected.len() || t.headers.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(Error::Table(format!("{what} needs header {:?}, found {:?}", expected.join(","), t.headers.join(","))));
    }
    Ok(())
}

fn two_columns(t: &Table, a: &str, b: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((t.floats(a)?, t.floats(b)?))
}

/// Tabulated payoff from `x,value` columns with strictly increasing x.
pub fn read_payoff_csv(path: &Path) -> Result<Payoff> {
    let t = read_table(path)?;
    expect_headers(&t, &["x", "value"], "payoff table")?;
    let (x, v) = two_columns(&t, "x", "value")?;
    Payoff::tabulated(x, v)
}

/// Scenario samples `(G, density)` for the shortfall problem.
pub fn read_scenarios_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let t = read_table(path)?;
    expect_headers(&t, &["G", "density"], "scenario table")?;
    let (g, d) = two_columns(&t, "G", "density")?;
    Ok(g.into_iter().zip(d).collect())
}

/// Selling-rate schedule `(t, rate)`.
pub fn read_schedule_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let t = read_table(path)?;
    expect_headers(&t, &["t", "rate"], "schedule table")?;
    let (s, r) = two_columns(&t, "t", "rate")?;
    Ok(s.into_iter().zip(r).collect())
}

/// Writes `# key: value` metadata lines, the header and the rows, with `\n`
/// line endings.
pub fn write_table<W: Write>(out: &mut W, metadata: &[(String, String)], headers: &[&str], rows: &[Vec<String>]) -> Result<()> {
    for (k, v) in metadata {
        writeln!(out, "# {k}: {v}")?;
    }
    writeln!(out, "{}", headers.join(","))?;
    for r in rows {
        writeln!(out, "{}", r.join(","))?;
    }
    Ok(())
}
