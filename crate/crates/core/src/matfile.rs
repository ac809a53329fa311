//! Shared text layout for model matrices: `<MAGIC> v1 <rows> <cols>` on
//! the first line, then one line of space-separated floats per row.
//! Floats use shortest round-trip formatting, so write-read is bit exact.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::Matrix;

pub(crate) fn write(path: &Path, magic: &str, m: &Matrix) -> Result<()> {
    let mut out = format!("{magic} v1 {} {}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|x| x.to_string()).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub(crate) fn read(path: &Path, magic: &str) -> Result<Matrix> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| {
        Error::format(path, 1, format!("empty file, expected '{magic} v1 <rows> <cols>'"))
    })?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (rows, cols) = match fields.as_slice() {
        [m, "v1", r, c] if *m == magic => {
            let rows = r
                .parse::<usize>()
                .map_err(|_| Error::format(path, 1, format!("invalid row count '{r}'")))?;
            let cols = c
                .parse::<usize>()
                .map_err(|_| Error::format(path, 1, format!("invalid column count '{c}'")))?;
            (rows, cols)
        }
        _ => {
            return Err(Error::format(
                path,
                1,
                format!("expected '{magic} v1 <rows> <cols>' header, got '{header}'"),
            ))
        }
    };
    if rows == 0 || cols == 0 {
        return Err(Error::format(
            path,
            1,
            format!("dimensions must be positive, got {rows}x{cols}"),
        ));
    }
    let mut m = Matrix::zeros(rows, cols);
    let mut filled = 0usize;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if filled == rows {
            return Err(Error::format(
                path,
                line_no,
                format!("expected {rows} rows, found extra data"),
            ));
        }
        let values: Vec<&str> = line.split_whitespace().collect();
        if values.len() != cols {
            return Err(Error::format(
                path,
                line_no,
                format!("expected {cols} values, got {}", values.len()),
            ));
        }
        for (c, raw) in values.iter().enumerate() {
            let value: f64 = raw
                .parse()
                .map_err(|_| Error::format(path, line_no, format!("invalid float '{raw}'")))?;
            if !value.is_finite() {
                return Err(Error::format(
                    path,
                    line_no,
                    format!("non-finite value '{raw}'"),
                ));
            }
            m.set(filled, c, value);
        }
        filled += 1;
    }
    if filled != rows {
        return Err(Error::format(
            path,
            1,
            format!("expected {rows} rows, got {filled}"),
        ));
    }
    Ok(m)
}
