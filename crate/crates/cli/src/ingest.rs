//! CSV input and output of datasets.

use std::io::{Read, Write};
use std::path::Path;

use aps_iv::{Dataset, TreatmentKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Column roles. Unlisted columns are ignored, except that an empty
/// `continuous` list means "every column without another role".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub outcome: String,
    pub treatment: String,
    pub instrument: String,
    pub continuous: Vec<String>,
    pub discrete: Vec<String>,
    pub balance: Vec<String>,
    pub treatment_kind: TreatmentKind,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            outcome: "y".into(),
            treatment: "d".into(),
            instrument: "z".into(),
            continuous: Vec::new(),
            discrete: Vec::new(),
            balance: Vec::new(),
            treatment_kind: TreatmentKind::Binary,
        }
    }
}

impl Schema {
    /// Schema describing `dataset`'s own columns, for [`emit_csv`].
    pub fn of(dataset: &Dataset) -> Self {
        Self {
            continuous: dataset.continuous_names().to_vec(),
            discrete: dataset.discrete_names().to_vec(),
            balance: dataset.aux_columns().iter().map(|(n, _)| n.clone()).collect(),
            treatment_kind: dataset.treatment_kind(),
            ..Self::default()
        }
    }

    fn resolve_continuous(&self, header: &[String]) -> Vec<String> {
        if !self.continuous.is_empty() {
            return self.continuous.clone();
        }
        header
            .iter()
            .filter(|h| {
                ![&self.outcome, &self.treatment, &self.instrument].contains(h)
                    && !self.discrete.contains(h)
                    && !self.balance.contains(h)
            })
            .cloned()
            .collect()
    }
}

/// Reads a dataset with the given column roles.
///
/// Only plain decimal numbers with a `.` separator are accepted; `NaN`,
/// infinities and empty cells are parse errors. Rows are numbered from 1,
/// counting data lines after the header.
pub fn ingest_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    ingest_reader(file, schema)
}

pub fn ingest_reader(reader: impl Read, schema: &Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let index = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::MissingColumn(name.to_string()))
    };
    let continuous = schema.resolve_continuous(&header);
    let iy = index(&schema.outcome)?;
    let id = index(&schema.treatment)?;
    let iz = index(&schema.instrument)?;
    let ic = continuous.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;
    let ig = schema.discrete.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;
    let ib = schema.balance.iter().map(|c| index(c)).collect::<Result<Vec<_>>>()?;

    let (mut y, mut d, mut z) = (Vec::new(), Vec::new(), Vec::new());
    let mut x_cont = Vec::new();
    let mut x_disc = Vec::new();
    let mut aux: Vec<Vec<f64>> = vec![Vec::new(); ib.len()];
    for (k, record) in rdr.records().enumerate() {
        let row = k + 1;
        let record = record.map_err(|e| CliError::ParseError {
            row,
            column: String::new(),
            value: e.to_string(),
        })?;
        let cell = |j: usize| -> Result<f64> { parse_real(record.get(j).unwrap_or(""), row, &header[j]) };
        let binary = |j: usize| -> Result<f64> {
            let v = cell(j)?;
            if v == 0.0 || v == 1.0 {
                Ok(v)
            } else {
                Err(CliError::NonBinary {
                    column: header[j].clone(),
                    row,
                })
            }
        };
        y.push(cell(iy)?);
        d.push(match schema.treatment_kind {
            TreatmentKind::Binary => binary(id)?,
            TreatmentKind::Continuous => cell(id)?,
        });
        z.push(binary(iz)?);
        for &j in &ic {
            x_cont.push(cell(j)?);
        }
        for &j in &ig {
            let s = record.get(j).unwrap_or("");
            x_disc.push(s.parse::<i64>().map_err(|_| CliError::ParseError {
                row,
                column: header[j].clone(),
                value: s.to_string(),
            })?);
        }
        for (a, &j) in aux.iter_mut().zip(&ib) {
            a.push(cell(j)?);
        }
    }

    let mut builder = Dataset::builder(y, d, z)
        .continuous(x_cont, ic.len())
        .continuous_names(continuous)
        .discrete(x_disc, ig.len())
        .discrete_names(schema.discrete.clone())
        .treatment_kind(schema.treatment_kind);
    for (name, values) in schema.balance.iter().zip(aux) {
        builder = builder.aux(name.clone(), values);
    }
    Ok(builder.build()?)
}

/// Accepts `[+-]digits[.digits][e[+-]digits]` and nothing else.
fn parse_real(s: &str, row: usize, column: &str) -> Result<f64> {
    let err = || CliError::ParseError {
        row,
        column: column.to_string(),
        value: s.to_string(),
    };
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (mantissa, exponent) = match body.find(['e', 'E']) {
        Some(k) => (&body[..k], Some(&body[k + 1..])),
        None => (body, None),
    };
    let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
    let mantissa_ok = match mantissa.split_once('.') {
        Some((a, b)) => (digits(a) || a.is_empty()) && (digits(b) || b.is_empty()) && !(a.is_empty() && b.is_empty()),
        None => digits(mantissa),
    };
    let exponent_ok = exponent.is_none_or(|e| digits(e.strip_prefix(['+', '-']).unwrap_or(e)));
    if !(mantissa_ok && exponent_ok) {
        return Err(err());
    }
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(err()),
    }
}

/// Writes `dataset` (in raw units) as CSV with shortest round-trip floats.
pub fn emit_csv(dataset: &Dataset, schema: &Schema, out: impl Write) -> Result<()> {
    let to_err = |e: csv::Error| CliError::io("<csv>", e);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec![
        schema.outcome.clone(),
        schema.treatment.clone(),
        schema.instrument.clone(),
    ];
    header.extend(dataset.continuous_names().iter().cloned());
    header.extend(dataset.discrete_names().iter().cloned());
    header.extend(dataset.aux_columns().iter().map(|(n, _)| n.clone()));
    w.write_record(&header).map_err(to_err)?;
    let mut fields = Vec::with_capacity(header.len());
    for i in 0..dataset.n() {
        fields.clear();
        fields.push(fmt_real(dataset.y()[i]));
        fields.push(fmt_real(dataset.d()[i]));
        fields.push(fmt_real(dataset.z()[i]));
        fields.extend(dataset.raw_cont_row(i).into_iter().map(fmt_real));
        fields.extend(dataset.x_disc_row(i).iter().map(i64::to_string));
        fields.extend(dataset.aux_columns().iter().map(|(_, v)| fmt_real(v[i])));
        w.write_record(&fields).map_err(to_err)?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))
}

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<f64> {
        parse_real(s, 1, "c")
    }

    #[test]
    fn accepts_plain_numbers() {
        for (s, v) in [("1", 1.0), ("-2.5", -2.5), ("+.5", 0.5), ("3.", 3.0), ("1e-3", 1e-3), ("2.5E+2", 250.0)] {
            assert_eq!(parse(s).unwrap(), v, "{s}");
        }
    }

    #[test]
    fn rejects_locale_and_special_values() {
        for s in ["1,5", "NaN", "inf", "-infinity", "", " 1", "1 ", "0x10", "1e", ".", "e5", "1.2.3"] {
            assert!(matches!(parse(s), Err(CliError::ParseError { .. })), "{s:?}");
        }
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.125, f64::MIN_POSITIVE, 5e-324] {
            let s = fmt_real(v);
            assert_eq!(parse(&s).unwrap().to_bits(), v.to_bits(), "{s}");
        }
    }
}
