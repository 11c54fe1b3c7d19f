//! Plain-text formats.
//!
//! * sample matrix: header `d n`, then `n` rows of `d` numbers
//! * covariance: header `d`, then `d` rows of `d` numbers
//! * truth vector: header `d k`, then `k` lines `index value`
//!
//! Numbers are written with 17 significant digits.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::{Covariance, KSparseVector, SampleMatrix};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn parse_usize(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse().map_err(|_| parse_err(line, format!("{what}: expected a nonnegative integer, got {tok:?}")))
}

fn parse_row(l: &str, line: usize, width: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = l
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(line, format!("not a number: {t:?}"))))
        .collect::<Result<_>>()?;
    if row.len() != width {
        return Err(parse_err(line, format!("expected {width} values, found {}", row.len())));
    }
    if row.iter().any(|x| !x.is_finite()) {
        return Err(parse_err(line, "non-finite value"));
    }
    Ok(row)
}

fn header(text: &str, fields: usize) -> Result<(usize, Vec<usize>)> {
    let (line, l) = lines(text).next().ok_or(Error::EmptyInput("file has no header"))?;
    let toks: Vec<&str> = l.split_whitespace().collect();
    if toks.len() != fields {
        return Err(parse_err(line, format!("header must have {fields} field(s)")));
    }
    let vals = toks.iter().map(|t| parse_usize(t, line, "header")).collect::<Result<_>>()?;
    Ok((line, vals))
}

pub fn parse_sample_matrix(text: &str) -> Result<SampleMatrix> {
    let (hline, h) = header(text, 2)?;
    let (d, n) = (h[0], h[1]);
    let mut data = Vec::with_capacity(n * d);
    let mut rows = 0;
    for (line, l) in lines(text).skip(1) {
        if rows == n {
            return Err(parse_err(line, format!("more than {n} rows")));
        }
        data.extend(parse_row(l, line, d)?);
        rows += 1;
    }
    if rows != n {
        return Err(parse_err(hline, format!("header promises {n} rows, found {rows}")));
    }
    SampleMatrix::new(n, d, data)
}

pub fn format_sample_matrix(x: &SampleMatrix) -> String {
    let mut s = format!("{} {}\n", x.d(), x.n());
    for i in 0..x.n() {
        push_row(&mut s, x.row(i));
    }
    s
}

pub fn parse_covariance(text: &str) -> Result<Covariance> {
    let (hline, h) = header(text, 1)?;
    let d = h[0];
    let mut data = Vec::with_capacity(d * d);
    let mut rows = 0;
    for (line, l) in lines(text).skip(1) {
        if rows == d {
            return Err(parse_err(line, format!("more than {d} rows")));
        }
        data.extend(parse_row(l, line, d)?);
        rows += 1;
    }
    if rows != d {
        return Err(parse_err(hline, format!("expected {d} rows, found {rows}")));
    }
    Covariance::new(d, data)
}

pub fn format_covariance(s: &Covariance) -> String {
    let d = s.d();
    let mut out = format!("{d}\n");
    for row in s.data().chunks(d) {
        push_row(&mut out, row);
    }
    out
}

pub fn parse_truth(text: &str) -> Result<KSparseVector> {
    let (hline, h) = header(text, 2)?;
    let (d, k) = (h[0], h[1]);
    let mut support = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for (line, l) in lines(text).skip(1) {
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(parse_err(line, "expected `index value`"));
        }
        support.push(parse_usize(toks[0], line, "index")?);
        let v: f64 = toks[1].parse().map_err(|_| parse_err(line, format!("not a number: {:?}", toks[1])))?;
        values.push(v);
    }
    if support.len() != k {
        return Err(parse_err(hline, format!("header promises {k} entries, found {}", support.len())));
    }
    KSparseVector::new(d, support, values)
}

pub fn format_truth(v: &KSparseVector) -> String {
    let mut s = format!("{} {}\n", v.d, v.nnz());
    for (i, x) in v.support.iter().zip(&v.values) {
        let _ = writeln!(s, "{i} {x:.16e}");
    }
    s
}

fn push_row(s: &mut String, row: &[f64]) {
    for (j, x) in row.iter().enumerate() {
        if j > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.16e}");
    }
    s.push('\n');
}

pub fn read_sample_matrix(path: &Path) -> Result<SampleMatrix> {
    parse_sample_matrix(&fs::read_to_string(path)?)
}

pub fn read_truth(path: &Path) -> Result<KSparseVector> {
    parse_truth(&fs::read_to_string(path)?)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}
