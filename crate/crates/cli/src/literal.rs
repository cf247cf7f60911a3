//! Shell-friendly literals: complex matrices and SNR grids.

use fapre_core::ComplexMatrix;
use num_complex::Complex64;

/// Parses a complex scalar such as `2`, `-1.5`, `3i`, `-i`, `1+2i`, `1-2e-3i`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty complex literal".into());
    }
    // split at the sign that separates real and imaginary parts (skip a
    // leading sign and signs that belong to an exponent)
    let bytes = t.as_bytes();
    let mut split = None;
    for i in 1..bytes.len() {
        let b = bytes[i];
        if (b == b'+' || b == b'-') && !matches!(bytes[i - 1], b'e' | b'E') {
            split = Some(i);
        }
    }
    let parse_imag = |s: &str| -> Result<f64, String> {
        let body = &s[..s.len() - 1];
        match body {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => body.parse::<f64>().map_err(|e| format!("`{s}`: {e}")),
        }
    };
    if let Some(i) = split {
        let (re_part, im_part) = t.split_at(i);
        if !im_part.ends_with(['i', 'j']) {
            return Err(format!("`{t}`: imaginary part must end in i"));
        }
        let re = re_part.parse::<f64>().map_err(|e| format!("`{t}`: {e}"))?;
        Ok(Complex64::new(re, parse_imag(im_part)?))
    } else if t.ends_with(['i', 'j']) {
        Ok(Complex64::new(0.0, parse_imag(t)?))
    } else {
        let re = t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"))?;
        Ok(Complex64::new(re, 0.0))
    }
}

/// Parses a row-major matrix literal: entries separated by `,`, rows by `;`,
/// e.g. `2,1;1,1` or `1+2i,0;0,1-1i`.
pub fn parse_matrix(s: &str) -> Result<ComplexMatrix, String> {
    let rows: Vec<&str> = s.trim().split(';').collect();
    if rows.is_empty() {
        return Err("empty matrix literal".into());
    }
    let mut data = Vec::new();
    let mut cols = None;
    for row in &rows {
        let entries: Vec<&str> = row.split(',').collect();
        match cols {
            None => cols = Some(entries.len()),
            Some(c) if c != entries.len() => {
                return Err(format!("ragged matrix literal `{s}`"));
            }
            _ => {}
        }
        for e in entries {
            data.push(parse_complex(e)?);
        }
    }
    let cols = cols.unwrap();
    if cols == 0 {
        return Err("empty matrix row".into());
    }
    ComplexMatrix::new(rows.len(), cols, data).map_err(|e| e.to_string())
}

/// Parses an SNR grid: either `start:step:stop` (inclusive) or a
/// comma-separated list of dB values.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let t = s.trim();
    if t.contains(':') {
        let parts: Vec<&str> = t.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{t}` must be start:step:stop"));
        }
        let start: f64 = parts[0].parse().map_err(|e| format!("`{t}`: {e}"))?;
        let step: f64 = parts[1].parse().map_err(|e| format!("`{t}`: {e}"))?;
        let stop: f64 = parts[2].parse().map_err(|e| format!("`{t}`: {e}"))?;
        if !(step > 0.0) || stop < start {
            return Err(format!("grid `{t}`: need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        Ok((0..count).map(|i| start + step * i as f64).collect())
    } else {
        t.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}")))
            .collect()
    }
}
