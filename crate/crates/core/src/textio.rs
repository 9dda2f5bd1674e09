//! Plain-text tensor files.
//!
//! ```text
//! # comment lines start with '#'
//! 3
//! 2 2 2
//! 1 2 3 4
//! 5 6 7 8
//! ```
//!
//! Line 1 is the order N, line 2 the N extents, and the remaining
//! whitespace-separated tokens are the entries in first-index-fastest order.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{DenseTensor, Shape};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

pub fn parse_tensor(text: &str) -> Result<DenseTensor> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| {
            let t = l.trim_start();
            !t.is_empty() && !t.starts_with('#')
        });

    let (n_line, n_text) = lines.next().ok_or_else(|| parse_err(1, "missing tensor order"))?;
    let order: usize = n_text
        .trim()
        .parse()
        .map_err(|_| parse_err(n_line, format!("expected tensor order, found {:?}", n_text.trim())))?;
    if order == 0 {
        return Err(parse_err(n_line, "tensor order must be at least 1"));
    }

    let (d_line, d_text) = lines
        .next()
        .ok_or_else(|| parse_err(n_line + 1, "missing extents line"))?;
    let dims = d_text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>()
                .map_err(|_| parse_err(d_line, format!("invalid extent {tok:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if dims.len() != order {
        return Err(parse_err(
            d_line,
            format!("expected {order} extents, found {}", dims.len()),
        ));
    }
    let shape = Shape::new(dims).map_err(|e| parse_err(d_line, e.to_string()))?;
    let expected = shape.numel();

    let mut data = Vec::with_capacity(expected);
    let mut last_line = d_line;
    for (line, text) in lines {
        last_line = line;
        for tok in text.split_whitespace() {
            if data.len() == expected {
                return Err(parse_err(
                    line,
                    format!("too many values: shape {shape} holds {expected}"),
                ));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(line, format!("invalid value {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value {tok:?}")));
            }
            data.push(v);
        }
    }
    if data.len() != expected {
        return Err(parse_err(
            last_line,
            format!("expected {expected} values for shape {shape}, found {}", data.len()),
        ));
    }
    DenseTensor::from_vec(shape, data)
}

/// Serializes with shortest round-trip float formatting, one mode-1 fibre per line.
pub fn format_tensor(t: &DenseTensor) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", t.order());
    let dims: Vec<String> = t.dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{}", dims.join(" "));
    for row in t.as_slice().chunks(t.dims()[0]) {
        let vals: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "{}", vals.join(" "));
    }
    out
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_tensor(&text)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_tensor(t)).map_err(|e| Error::io(path, e))
}
