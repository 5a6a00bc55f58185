//! JSON and text rendering of estimation results.
//!
//! JSON floats are written with 17 significant digits so every value
//! round-trips and reruns are byte-identical. Non-finite floats become `null`.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::estimators::EstimateReport;

/// Pretty JSON formatter with a fixed 17-significant-digit float policy.
pub struct FixedDigitsFormatter<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedDigitsFormatter<'_> {
    fn default() -> Self {
        Self {
            inner: PrettyFormatter::new(),
        }
    }
}

fn write_float<W: ?Sized + io::Write>(w: &mut W, v: f64) -> io::Result<()> {
    if v.is_finite() {
        write!(w, "{v:.16e}")
    } else {
        w.write_all(b"null")
    }
}

impl Formatter for FixedDigitsFormatter<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write_float(w, v)
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        write_float(w, v as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn end_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_key(w)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes `value` as pretty JSON with the fixed float policy.
pub fn to_json_string<T: Serialize + ?Sized>(value: &T) -> serde_json::Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigitsFormatter::default());
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

/// Right-aligned text table with a left label column.
pub fn render_table(header: &[String], rows: &[(String, Vec<String>)]) -> String {
    let ncol = header.len();
    let label_w = rows.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0);
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for (_, cells) in rows {
        for (j, c) in cells.iter().enumerate().take(ncol) {
            widths[j] = widths[j].max(c.chars().count());
        }
    }
    let mut out = String::new();
    let line = |label: &str, cells: &[String], out: &mut String| {
        out.push_str(&format!("{label:<label_w$}"));
        for (j, w) in widths.iter().enumerate() {
            let c = cells.get(j).map(String::as_str).unwrap_or("");
            out.push_str(&format!("  {c:>w$}"));
        }
        out.push('\n');
    };
    line("", header, &mut out);
    let total = label_w + widths.iter().map(|w| w + 2).sum::<usize>();
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for (label, cells) in rows {
        line(label, cells, &mut out);
    }
    out
}

/// Three decimals, as in published regression tables.
pub fn fmt3(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        "NA".into()
    }
}

/// One column per report: first stage and its SE, the coefficient and its
/// SE, then the estimation sample size.
pub fn estimates_table(columns: &[(String, Option<&EstimateReport>)]) -> String {
    let header: Vec<String> = columns.iter().map(|(h, _)| h.clone()).collect();
    let cell = |f: &dyn Fn(&EstimateReport) -> Option<String>| -> Vec<String> {
        columns
            .iter()
            .map(|(_, r)| r.and_then(f).unwrap_or_else(|| "-".into()))
            .collect()
    };
    let rows = vec![
        (
            "First stage".to_string(),
            cell(&|r| r.first_stage.map(|f| fmt3(f.gamma1))),
        ),
        (
            String::new(),
            cell(&|r| r.first_stage.map(|f| format!("({})", fmt3(f.se)))),
        ),
        ("Estimate".to_string(), cell(&|r| Some(fmt3(r.beta1)))),
        (
            String::new(),
            cell(&|r| Some(format!("({})", fmt3(r.se_robust)))),
        ),
        ("N".to_string(), cell(&|r| Some(r.n_used.to_string()))),
    ];
    render_table(&header, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Sample {
        a: f64,
        b: Vec<f64>,
        c: &'static str,
    }

    #[test]
    fn floats_have_seventeen_digits_and_round_trip() {
        let s = to_json_string(&Sample {
            a: 0.1,
            b: vec![1.0, -2.5e-300, f64::NAN],
            c: "x",
        })
        .unwrap();
        assert!(s.contains("1.0000000000000001e-1"));
        assert!(s.contains("null"));
        let back: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["a"].as_f64().unwrap(), 0.1);
        assert_eq!(back["b"][1].as_f64().unwrap(), -2.5e-300);
    }

    #[test]
    fn table_columns_align() {
        let t = render_table(
            &["a".into(), "longer".into()],
            &[("row".into(), vec!["1.000".into(), "2".into()])],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0].len(), lines[2].len());
    }
}
