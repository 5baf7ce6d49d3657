use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Formats a number like C's `%.17g`: seventeen significant digits, the
/// shorter of fixed and exponent notation, trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let fixed = format!("{:.*}", (16 - exp) as usize, x);
        strip_zeros(&fixed).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", strip_zeros(mantissa), sign, exp.abs())
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// A cell of a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    /// An absent value, written as an empty field.
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders a CSV document with a header row and `\n` line endings.
pub fn render_csv(header: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    let mut out = String::new();
    let head: Vec<String> = header.iter().map(|h| quote(h)).collect();
    out.push_str(&head.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(Error::Precondition(format!(
                "csv row {i} has {} cells, header has {}",
                row.len(),
                header.len()
            )));
        }
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            match cell {
                Cell::Num(v) => out.push_str(&fmt_g17(*v)),
                Cell::Text(s) => out.push_str(&quote(s)),
                Cell::Empty => {}
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Renders numeric columns from `(x, y)` pairs.
pub fn render_pairs(header: [&str; 2], rows: &[(f64, f64)]) -> String {
    let mut out = format!("{},{}\n", header[0], header[1]);
    for &(a, b) in rows {
        let _ = writeln!(out, "{},{}", fmt_g17(a), fmt_g17(b));
    }
    out
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<Cell>]) -> Result<()> {
    std::fs::write(path, render_csv(header, rows)?)?;
    Ok(())
}

/// Reads a numeric CSV with a header row into named columns.
pub fn read_numeric_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InsufficientData(format!("{} is empty", path.display())))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (n, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(Error::Config(format!(
                "{} line {}: expected {} cells",
                path.display(),
                n + 2,
                header.len()
            )));
        }
        for (col, cell) in cols.iter_mut().zip(cells) {
            let v = cell
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("{} line {}: `{cell}` is not a number", path.display(), n + 2)))?;
            col.push(v);
        }
    }
    Ok((header, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g17() {
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1e20, "1e+20"),
            (123456789.0, "123456789"),
            (0.0001, "0.0001"),
            (1.0 / 3.0, "0.33333333333333331"),
            (1e16, "10000000000000000"),
            (1e17, "1e+17"),
            (6.02214076e23, "6.0221407599999999e+23"),
            (5e-324, "4.9406564584124654e-324"),
        ];
        for (x, want) in cases {
            assert_eq!(fmt_g17(x), want, "x = {x:e}");
        }
    }

    #[test]
    fn round_trips_exactly() {
        for x in [
            0.1,
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            7.3e12,
            -std::f64::consts::FRAC_1_SQRT_2,
        ] {
            assert_eq!(fmt_g17(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_layout() {
        let rows = vec![
            vec![Cell::Num(0.5), Cell::from("a,b"), Cell::Empty],
            vec![Cell::Num(1.0), Cell::from("plain"), Cell::from(Some(2.0))],
        ];
        let s = render_csv(&["t", "label", "v"], &rows).unwrap();
        assert_eq!(s, "t,label,v\n0.5,\"a,b\",\n1,plain,2\n");
        assert!(render_csv(&["t"], &rows).is_err());
    }
}
