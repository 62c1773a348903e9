//! Tables, number formatting and the CSV/JSON writers.

use std::io::Write;

use serde_json::{Map, Value};

use crate::error::CliError;

const SIG_DIGITS: i32 = 12;

/// Formats `x` like C's `%.12g`.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIG_DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..SIG_DIGITS).contains(&exp) {
        let decimals = (SIG_DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => fmt_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Float(v) => {
                let rounded: f64 = fmt_float(*v).parse().expect("formatted float parses");
                Value::from(rounded)
            }
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// A rectangular result with named columns.
///
/// A table flagged `single` is one record and renders as a JSON object
/// rather than an array.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
    single: bool,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
            single: false,
        }
    }

    pub fn single(mut self) -> Self {
        self.single = true;
        self
    }

    #[cfg(test)]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    /// Appends a row, rejecting non-finite floats.
    pub fn push(&mut self, row: Vec<Cell>) -> Result<(), CliError> {
        assert_eq!(row.len(), self.columns.len(), "row width");
        for (name, cell) in self.columns.iter().zip(&row) {
            if let Cell::Float(v) = cell {
                if !v.is_finite() {
                    return Err(CliError::Numeric(format!(
                        "column `{name}` evaluated to {v}"
                    )));
                }
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<(), CliError> {
        match format {
            Format::Csv => self.write_csv(out),
            Format::Json => self.write_json(out),
        }
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_json(&self, out: &mut dyn Write) -> Result<(), CliError> {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .cloned()
                    .zip(row.iter().map(Cell::to_json))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let value = match (self.single, records.as_slice()) {
            (true, [one]) => one.clone(),
            _ => Value::Array(records),
        };
        serde_json::to_writer_pretty(&mut *out, &value)?;
        writeln!(out)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_like_percent_g() {
        assert_eq!(fmt_float(0.0795892373872), "0.0795892373872");
        assert_eq!(fmt_float(0.0795892373872123), "0.0795892373872");
        assert_eq!(fmt_float(-1.2), "-1.2");
        assert_eq!(fmt_float(1.0), "1");
        assert_eq!(fmt_float(123456789012.0), "123456789012");
        assert_eq!(fmt_float(1234567890123.0), "1.23456789012e+12");
        assert_eq!(fmt_float(1.5e-7), "1.5e-07");
        assert_eq!(fmt_float(0.0001), "0.0001");
        assert_eq!(fmt_float(0.99999999999999), "1");
        assert_eq!(fmt_float(9.9999999999999e-5), "0.0001");
    }

    #[test]
    fn rejects_nan() {
        let mut t = Table::new(["x"]);
        assert!(matches!(
            t.push(vec![f64::NAN.into()]),
            Err(CliError::Numeric(_))
        ));
        assert!(t.push(vec![1.0.into()]).is_ok());
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn csv_and_json_render() {
        let mut t = Table::new(["n", "v", "name"]);
        t.push(vec![3u64.into(), 0.25.into(), "a".into()]).unwrap();
        let mut buf = Vec::new();
        t.write(Format::Csv, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "n,v,name\n3,0.25,a\n");
        let mut buf = Vec::new();
        t.clone().single().write(Format::Json, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["v"], 0.25);
        let mut buf = Vec::new();
        t.write(Format::Json, &mut buf).unwrap();
        let v: Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v[0]["name"], "a");
    }
}
