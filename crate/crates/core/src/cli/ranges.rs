//! Sweep arguments: `"3"`, `"1,3,5"`, `"0:5"` (inclusive) and
//! `"0.1:0.9:0.2"` (with step).

use crate::error::{Error, Result};

fn bad(s: &str, why: &str) -> Error {
    Error::Config(format!("invalid range '{s}': {why}"))
}

/// Integer list or inclusive range `a:b[:step]`.
pub fn parse_usize_range(s: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(bad(s, "empty item"));
        }
        let fields: Vec<&str> = part.split(':').collect();
        let num = |t: &str| t.trim().parse::<usize>().map_err(|_| bad(s, "not an integer"));
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [a, b] | [a, b, _] => {
                let (a, b) = (num(a)?, num(b)?);
                let step = if fields.len() == 3 { num(fields[2])? } else { 1 };
                if step == 0 || b < a {
                    return Err(bad(s, "empty or non-increasing range"));
                }
                out.extend((a..=b).step_by(step));
            }
            _ => return Err(bad(s, "too many ':'")),
        }
    }
    Ok(out)
}

/// Real list or inclusive range `a:b:step`.
pub fn parse_f64_range(s: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(bad(s, "empty item"));
        }
        let fields: Vec<&str> = part.split(':').collect();
        let num = |t: &str| {
            let v = t.trim().parse::<f64>().map_err(|_| bad(s, "not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(s, "not finite"))
            }
        };
        match fields.as_slice() {
            [v] => out.push(num(v)?),
            [a, b, st] => {
                let (a, b, st) = (num(a)?, num(b)?, num(st)?);
                if !(st > 0.0) || b < a {
                    return Err(bad(s, "empty or non-increasing range"));
                }
                let n = ((b - a) / st + 1e-9).floor() as usize;
                out.extend((0..=n).map(|i| a + i as f64 * st));
            }
            _ => return Err(bad(s, "real ranges need 'a:b:step'")),
        }
    }
    Ok(out)
}
