//! Newline-delimited JSON persistence for spectrum series.
//!
//! Line 1 is the header record
//! `{"dims":d,"symmetry":"one_sided"|"full_lattice","system":...,"params":{...}}`,
//! followed by one record per sample,
//! `{"t":<float>,"coeffs":[[k1(,k2),re,im],...]}`. Floats carry 17
//! significant digits so the round trip is bit exact; wavevector components
//! are written as plain integers (parsed as i128, so frequency-doubling
//! runs far past 2^53 survive the round trip).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::spectral::{FourierField, SeriesMeta, SpectrumSeries, Symmetry, Wavevector};

fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

pub fn write_series<W: Write>(series: &SpectrumSeries, out: &mut W) -> Result<()> {
    let header = serde_json::to_string(series.meta()).map_err(|e| Error::ParseError {
        line: 1,
        msg: e.to_string(),
    })?;
    writeln!(out, "{header}")?;
    let dims = series.meta().dims;
    let mut line = String::new();
    for (t, field) in series.samples() {
        line.clear();
        write!(line, "{{\"t\":{},\"coeffs\":[", fmt_f64(*t)).expect("write to string");
        let mut first = true;
        for (k, v) in field.iter() {
            if !first {
                line.push(',');
            }
            first = false;
            let [k1, k2] = k.components();
            if dims == 1 {
                write!(line, "[{},{},{}]", k1, fmt_f64(v.re), fmt_f64(v.im))
            } else {
                write!(line, "[{},{},{},{}]", k1, k2, fmt_f64(v.re), fmt_f64(v.im))
            }
            .expect("write to string");
        }
        line.push_str("]}");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_series_to_path<P: AsRef<Path>>(series: &SpectrumSeries, path: P) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_series(series, &mut out)?;
    out.flush()?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        msg: msg.into(),
    }
}

fn number_as_i128(v: &Value, line: usize, what: &str) -> Result<i128> {
    let n = v
        .as_number()
        .ok_or_else(|| parse_err(line, format!("{what} is not a number")))?;
    n.as_i128()
        .or_else(|| n.to_string().parse().ok())
        .ok_or_else(|| parse_err(line, format!("{what} is not an integer")))
}

fn number_as_f64(v: &Value, line: usize, what: &str) -> Result<f64> {
    v.as_f64()
        .ok_or_else(|| parse_err(line, format!("{what} is not a float")))
}

pub fn read_series<R: Read>(input: R) -> Result<SpectrumSeries> {
    let reader = BufReader::new(input);
    let mut series: Option<SpectrumSeries> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        match &mut series {
            None => {
                let meta: SeriesMeta = serde_json::from_value(value)
                    .map_err(|e| parse_err(lineno, format!("bad header: {e}")))?;
                if meta.dims != 1 && meta.dims != 2 {
                    return Err(parse_err(lineno, format!("bad dims {}", meta.dims)));
                }
                series = Some(SpectrumSeries::new(meta));
            }
            Some(series) => {
                let obj = value
                    .as_object()
                    .ok_or_else(|| parse_err(lineno, "record is not an object"))?;
                let t = number_as_f64(
                    obj.get("t").ok_or_else(|| parse_err(lineno, "missing t"))?,
                    lineno,
                    "t",
                )?;
                let coeffs = obj
                    .get("coeffs")
                    .and_then(Value::as_array)
                    .ok_or_else(|| parse_err(lineno, "missing coeffs array"))?;
                let dims = series.meta().dims;
                let want = if dims == 1 { 3 } else { 4 };
                let mut entries = BTreeMap::new();
                for entry in coeffs {
                    let parts = entry
                        .as_array()
                        .ok_or_else(|| parse_err(lineno, "coefficient is not an array"))?;
                    if parts.len() != want {
                        return Err(parse_err(
                            lineno,
                            format!("coefficient has {} fields, expected {}", parts.len(), want),
                        ));
                    }
                    let k = if dims == 1 {
                        Wavevector::d1(number_as_i128(&parts[0], lineno, "k1")?)
                    } else {
                        Wavevector::d2(
                            number_as_i128(&parts[0], lineno, "k1")?,
                            number_as_i128(&parts[1], lineno, "k2")?,
                        )
                    };
                    let re = number_as_f64(&parts[want - 2], lineno, "re")?;
                    let im = number_as_f64(&parts[want - 1], lineno, "im")?;
                    if entries.insert(k, Complex64::new(re, im)).is_some() {
                        return Err(parse_err(lineno, format!("duplicate wavevector {k}")));
                    }
                }
                let field = FourierField::new(dims, series.meta().symmetry, entries)
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
                series
                    .push(t, field)
                    .map_err(|e| parse_err(lineno, e.to_string()))?;
            }
        }
    }
    series.ok_or_else(|| parse_err(0, "empty input: missing header record"))
}

pub fn read_series_from_path<P: AsRef<Path>>(path: P) -> Result<SpectrumSeries> {
    read_series(File::open(path)?)
}

/// Serialize a single field as a one-sample series (used for witness
/// observables, which carry no time axis of their own).
pub fn field_to_ndjson(field: &FourierField, system: &str) -> Result<String> {
    let meta = SeriesMeta {
        dims: field.dims(),
        symmetry: field.symmetry(),
        system: system.to_string(),
        params: Default::default(),
    };
    let mut series = SpectrumSeries::new(meta);
    series.push(0.0, field.clone())?;
    let mut buf = Vec::new();
    write_series(&series, &mut buf)?;
    Ok(String::from_utf8(buf).expect("ndjson is utf-8"))
}

#[allow(unused)]
fn symmetry_name(s: Symmetry) -> &'static str {
    match s {
        Symmetry::OneSided => "one_sided",
        Symmetry::FullLattice => "full_lattice",
    }
}
