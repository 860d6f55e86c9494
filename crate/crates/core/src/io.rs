//! Plain-text observation blocks: one sensor per line, comma-separated
//! complex samples written as `a+bi` or `a-bi`. Blank lines and lines
//! starting with `#` are skipped.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::ObservationMatrix;

/// Shortest representation that parses back to the same `f64`.
fn format_complex(z: Complex64) -> String {
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{:?}{}{:?}i", z.re, sign, z.im.abs())
}

/// Parses `a+bi`, `a-bi`, `a`, or `bi`.
pub fn parse_complex(field: &str) -> std::result::Result<Complex64, String> {
    let s = field.trim();
    if s.is_empty() {
        return Err("empty field".into());
    }
    let parse = |t: &str| {
        t.parse::<f64>()
            .map_err(|_| format!("non-numeric field {field:?}"))
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(parse(s)?, 0.0));
    };
    // split at the last sign that is neither leading nor part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match split {
        Some(k) => {
            let im_text = &body[k..];
            let im_text = im_text.strip_prefix('+').unwrap_or(im_text);
            Ok(Complex64::new(parse(&body[..k])?, parse(im_text)?))
        }
        None => Ok(Complex64::new(0.0, parse(body)?)),
    }
}

pub fn parse_observation(text: &str) -> Result<ObservationMatrix> {
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split(',')
            .map(parse_complex)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {} samples, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyObservation);
    }
    let (n, t) = (rows.len(), rows[0].len());
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    Ok(ObservationMatrix::from_data(CMatrix::from_row_slice(n, t, &flat)))
}

pub fn load_observation(path: impl AsRef<Path>) -> Result<ObservationMatrix> {
    parse_observation(&fs::read_to_string(path)?)
}

pub fn write_observation<W: Write>(data: &CMatrix, mut out: W) -> Result<()> {
    for row in data.row_iter() {
        let line: Vec<String> = row.iter().map(|z| format_complex(*z)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn save_observation(path: impl AsRef<Path>, data: &CMatrix) -> Result<()> {
    let mut buf = Vec::new();
    write_observation(data, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_complex_gaussian_matrix;

    #[test]
    fn identity_block() {
        let obs = parse_observation("1+0i,0+0i\n0+0i,1+0i\n").unwrap();
        assert_eq!(obs.data, CMatrix::identity(2, 2));
        assert_eq!(obs.hypothesis, None);
    }

    #[test]
    fn field_forms() {
        assert_eq!(parse_complex("1.5-2i").unwrap(), Complex64::new(1.5, -2.0));
        assert_eq!(parse_complex("-1e-3+4E+2i").unwrap(), Complex64::new(-1e-3, 400.0));
        assert_eq!(parse_complex(" 3 ").unwrap(), Complex64::new(3.0, 0.0));
        assert_eq!(parse_complex("-2i").unwrap(), Complex64::new(0.0, -2.0));
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("1+xi").is_err());
    }

    #[test]
    fn ragged_rows_report_line() {
        let err = parse_observation("# header\n1+0i,2+0i\n\n3+0i\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        let err = parse_observation("1+0i,zz\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert_eq!(parse_observation("\n# nothing\n").unwrap_err(), Error::EmptyObservation);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut data = sample_complex_gaussian_matrix(21, 5, 7);
        data[(0, 0)] = Complex64::new(-0.0, -0.0);
        data[(1, 1)] = Complex64::new(1e-300, -3.5e200);
        let mut buf = Vec::new();
        write_observation(&data, &mut buf).unwrap();
        let back = parse_observation(std::str::from_utf8(&buf).unwrap()).unwrap();
        for (a, b) in data.iter().zip(back.data.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}
