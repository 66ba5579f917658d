//! Grid strings for `n` and `t`.
//!
//! A grid is a comma-separated list of tokens. A token is a number, a power
//! of two written `2^k`, or a range `lin:start:stop:count`,
//! `geom:start:stop:count` (alias `log:`), or bare `start:stop:count`, which
//! is geometric for `n` and linear for `t`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Spacing {
    Linear,
    Geometric,
}

fn parse_f64(s: &str) -> Result<f64> {
    let s = s.trim();
    if let Some((base, exp)) = s.split_once('^') {
        let b: f64 = parse_f64(base)?;
        let e: f64 = parse_f64(exp)?;
        return Ok(b.powf(e));
    }
    s.parse::<f64>()
        .map_err(|_| Error::config(format!("cannot parse number {s:?}")))
}

fn range(body: &str, spacing: Spacing) -> Result<Vec<f64>> {
    let parts: Vec<&str> = body.split(':').collect();
    let [start, stop, count] = parts.as_slice() else {
        return Err(Error::config(format!("range {body:?} must be start:stop:count")));
    };
    let (a, b) = (parse_f64(start)?, parse_f64(stop)?);
    let count: usize = count
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("range count {count:?} is not a positive integer")))?;
    if count == 0 {
        return Err(Error::config("range count must be positive"));
    }
    if count == 1 {
        return Ok(vec![a]);
    }
    let step = |i: usize| i as f64 / (count - 1) as f64;
    match spacing {
        Spacing::Linear => Ok((0..count).map(|i| a + (b - a) * step(i)).collect()),
        Spacing::Geometric => {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::config(format!("geometric range {body:?} needs positive ends")));
            }
            let (la, lb) = (a.ln(), b.ln());
            Ok((0..count)
                .map(|i| match i {
                    0 => a,
                    _ if i == count - 1 => b,
                    _ => (la + (lb - la) * step(i)).exp(),
                })
                .collect())
        }
    }
}

fn parse_tokens(spec: &str, bare: Spacing) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for token in spec.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some(body) = token.strip_prefix("lin:") {
            out.extend(range(body, Spacing::Linear)?);
        } else if let Some(body) = token.strip_prefix("geom:").or_else(|| token.strip_prefix("log:")) {
            out.extend(range(body, Spacing::Geometric)?);
        } else if token.matches(':').count() == 2 {
            out.extend(range(token, bare)?);
        } else {
            out.push(parse_f64(token)?);
        }
    }
    if out.is_empty() {
        return Err(Error::config(format!("grid {spec:?} is empty")));
    }
    Ok(out)
}

/// Player-count grid; values are rounded to integers and deduplicated in
/// order of first appearance.
pub fn parse_n_grid(spec: &str) -> Result<Vec<u64>> {
    let mut out: Vec<u64> = Vec::new();
    for v in parse_tokens(spec, Spacing::Geometric)? {
        if !(v.is_finite() && v >= 1.0) || v > 1e15 {
            return Err(Error::config(format!("player count {v} is out of range")));
        }
        let n = v.round() as u64;
        if !out.contains(&n) {
            out.push(n);
        }
    }
    Ok(out)
}

pub fn parse_t_grid(spec: &str) -> Result<Vec<f64>> {
    let out = parse_tokens(spec, Spacing::Linear)?;
    if let Some(bad) = out.iter().find(|t| !t.is_finite()) {
        return Err(Error::config(format!("t value {bad} is not finite")));
    }
    Ok(out)
}
