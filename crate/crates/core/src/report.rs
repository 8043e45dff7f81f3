//! Report serialization. Every float is written with 17 significant digits
//! so that regression diffs are meaningful and reruns are byte-identical.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::hardy::{LevelValue, QuotientReport, SweepTable};

/// `{:.16e}`: 17 significant digits, round-trip exact.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Pretty JSON with fixed-width floats. Non-finite values become `null`.
struct Fixed<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format!("{value:.16e}").as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Invalid(format!("report serialization: {e}")))?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes utf-8"))
}

/// Generic CSV table; every cell is already formatted.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("utf-8 csv")
}

fn trace_cell(trace: &[LevelValue]) -> String {
    trace
        .iter()
        .map(|l| {
            let v: Vec<String> = l.values.iter().map(|x| num(*x)).collect();
            format!("{}:{}", l.level, v.join("/"))
        })
        .collect::<Vec<_>>()
        .join(";")
}

/// One row per report. The refinement trace is packed as
/// `level:v1/v2;level:v1/v2…`.
pub fn quotient_csv(reports: &[QuotientReport]) -> String {
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            vec![
                r.scenario.clone(),
                r.tag.name().to_string(),
                r.model.clone(),
                r.family.clone(),
                num(r.p),
                num(r.beta),
                num(r.numerator),
                num(r.denominator),
                num(r.quotient),
                num(r.target),
                num(r.relative_gap),
                num(r.error),
                opt(r.upper_bound),
                r.passed.to_string(),
                trace_cell(&r.trace),
            ]
        })
        .collect();
    csv_table(
        &[
            "scenario",
            "tag",
            "model",
            "family",
            "p",
            "beta",
            "numerator",
            "denominator",
            "quotient",
            "target",
            "gap",
            "error",
            "upper_bound",
            "passed",
            "trace",
        ],
        &rows,
    )
}

pub fn sweep_csv(table: &SweepTable) -> String {
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| {
            vec![
                table.scenario.clone(),
                num(r.parameter),
                num(r.quotient),
                num(table.target),
                num(r.relative_gap),
                num(r.error),
                opt(r.upper_bound),
            ]
        })
        .collect();
    csv_table(
        &["scenario", "parameter", "quotient", "target", "gap", "error", "upper_bound"],
        &rows,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct S {
        a: f64,
        b: Vec<f64>,
        c: Option<f64>,
    }

    #[test]
    fn floats_have_seventeen_digits() {
        let s = to_json(&S {
            a: 0.1,
            b: vec![f64::NAN, -2.5],
            c: None,
        })
        .unwrap();
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("null"));
        assert!(s.contains("-2.5000000000000000e0"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64(), Some(0.1));
    }
}
