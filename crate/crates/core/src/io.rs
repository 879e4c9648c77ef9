//! CSV import and export.
//!
//! Sampled functions use rows `cell_index,measure,value`; exponents use
//! `x,p` with `x` the right endpoint of each cell. Positions and measures
//! are written so that values below the `f64` range survive a round trip
//! (`2.5e-4000` is a valid literal here). Lines starting with `#` are
//! comments.

use std::io::{Read, Write};

use crate::error::{Result, VexpError};
use crate::exponents::ExponentFunction;
use crate::grid::{Mesh, SampledFunction};
use crate::numeric::{format_from_ln, parse_ln};

pub const SAMPLED_HEADER: &str = "cell_index,measure,value";
pub const EXPONENT_HEADER: &str = "x,p";

fn records(reader: impl Read, header: &str) -> Result<Vec<(u64, csv::StringRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let found: Vec<String> = rdr.headers().map_err(parse_err)?.iter().map(str::to_string).collect();
    if found.join(",") != header {
        return Err(VexpError::Parse(format!(
            "expected header `{header}`, got `{}`",
            found.join(",")
        )));
    }
    let width = header.split(',').count();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(VexpError::Parse(format!(
                "line {line}: expected {width} fields, got {}",
                rec.len()
            )));
        }
        rows.push((line, rec));
    }
    if rows.is_empty() {
        return Err(VexpError::Parse("no data rows".into()));
    }
    Ok(rows)
}

fn parse_err(e: csv::Error) -> VexpError {
    VexpError::Parse(e.to_string())
}

fn number(line: u64, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| VexpError::Parse(format!("line {line}: `{s}` is not a number")))
}

fn ln_number(line: u64, s: &str) -> Result<f64> {
    parse_ln(s).ok_or_else(|| VexpError::Parse(format!("line {line}: `{s}` is not a nonnegative number")))
}

/// Reads a sampled function on an interval mesh built from the measures.
pub fn read_sampled_csv(reader: impl Read) -> Result<SampledFunction> {
    let rows = records(reader, SAMPLED_HEADER)?;
    let mut ln_measures = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (expected, (line, row)) in rows.iter().enumerate() {
        let (idx, measure, value) = (&row[0], &row[1], &row[2]);
        let idx: usize = idx
            .parse()
            .map_err(|_| VexpError::Parse(format!("line {line}: bad cell index `{idx}`")))?;
        if idx != expected {
            return Err(VexpError::Parse(format!(
                "line {line}: cell index {idx}, expected {expected}"
            )));
        }
        ln_measures.push(ln_number(*line, measure)?);
        values.push(number(*line, value)?);
    }
    SampledFunction::new(Mesh::from_ln_measures(ln_measures)?, values)
}

pub fn write_sampled_csv(w: impl Write, f: &SampledFunction) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SAMPLED_HEADER.split(',')).map_err(parse_err)?;
    for (i, (lm, v)) in f.mesh().ln_measures().iter().zip(f.values()).enumerate() {
        wtr.write_record([i.to_string(), format_from_ln(*lm), v.to_string()])
            .map_err(parse_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads an exponent on `(0, x_last]` from right endpoints and values.
pub fn read_exponent_csv(reader: impl Read) -> Result<ExponentFunction> {
    let rows = records(reader, EXPONENT_HEADER)?;
    let mut ln_right = Vec::with_capacity(rows.len());
    let mut excess = Vec::with_capacity(rows.len());
    for (line, row) in &rows {
        ln_right.push(ln_number(*line, &row[0])?);
        excess.push(number(*line, &row[1])? - 1.0);
    }
    ExponentFunction::from_excess(Mesh::from_ln_right(ln_right)?, excess)
}

pub fn write_exponent_csv(w: impl Write, p: &ExponentFunction) -> Result<()> {
    let mesh = p.mesh();
    if mesh.ln_right().is_empty() {
        return Err(VexpError::invalid("only interval exponents have an `x,p` form"));
    }
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(EXPONENT_HEADER.split(',')).map_err(parse_err)?;
    for (l, v) in mesh.ln_right().iter().zip(p.values()) {
        wtr.write_record([format_from_ln(*l), v.to_string()])
            .map_err(parse_err)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `# key=value key=value ...` as the first line of an output.
pub fn write_config_echo(mut w: impl Write, pairs: &[(&str, String)]) -> Result<()> {
    let body: Vec<String> = pairs.iter().map(|(k, v)| format!("{k}={v}")).collect();
    writeln!(w, "# {}", body.join(" "))?;
    Ok(())
}
