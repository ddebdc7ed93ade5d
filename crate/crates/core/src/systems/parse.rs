//! Textual system specs.
//!
//! ```text
//! full_shift:m=2[,len=8]
//! real_shift[:len=6]         formal_derivative[:len=6]
//! torus:matrix=[[2,1],[1,1]] circle:k=2
//! identity[:dim=2]
//! linear:matrix=[[2]][,metric=arctan,core=10 | ,metric=window,radius=1]
//! a*b*c                      (a)^k
//! ```
//!
//! A string starting with `{` is read as JSON.

use crate::error::{Error, Result};
use crate::systems::{product_system, LineMetric, SystemSpec};

pub fn parse_system(s: &str) -> Result<SystemSpec> {
    let s = s.trim();
    if s.starts_with('{') {
        let spec: SystemSpec = serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        return Ok(spec);
    }
    let spec = parse_expr(s)?;
    spec.validate()?;
    Ok(spec)
}

fn parse_expr(s: &str) -> Result<SystemSpec> {
    let parts = split_top(s, '*');
    if parts.len() > 1 {
        return product_system(parts.iter().map(|p| parse_expr(p)).collect::<Result<_>>()?);
    }
    let s = s.trim();
    if let Some(at) = top_level_last(s, '^') {
        let k: usize = s[at + 1..]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad exponent in {s:?}")))?;
        return Ok(parse_expr(&s[..at])?.power(k));
    }
    if s.starts_with('(') && s.ends_with(')') {
        return parse_expr(&s[1..s.len() - 1]);
    }
    parse_atom(s)
}

fn parse_atom(s: &str) -> Result<SystemSpec> {
    let (name, args) = match s.split_once(':') {
        Some((n, a)) => (n.trim(), a),
        None => (s, ""),
    };
    let mut kv = Vec::new();
    for item in split_top(args, ',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("expected key=value, got {item:?}")))?;
        kv.push((k.trim().to_string(), v.trim().to_string()));
    }
    let get = |key: &str| kv.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
    let num = |key: &str| -> Result<Option<f64>> {
        get(key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("{key}: not a number: {v:?}")))
            })
            .transpose()
    };
    let int = |key: &str| -> Result<Option<usize>> {
        get(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("{key}: not an integer: {v:?}")))
            })
            .transpose()
    };
    let known: &[&str] = match name {
        "full_shift" | "shift" => &["m", "len"],
        "real_shift" | "formal_derivative" => &["len"],
        "torus" => &["matrix"],
        "circle" => &["k"],
        "identity" => &["dim"],
        "linear" => &["matrix", "metric", "core", "radius"],
        _ => return Err(Error::Parse(format!("unknown system {name:?}"))),
    };
    if let Some((k, _)) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
        return Err(Error::Parse(format!("{name}: unknown key {k:?}")));
    }
    let need = |key: &str| Error::Parse(format!("{name}: missing {key}"));
    Ok(match name {
        "full_shift" | "shift" => SystemSpec::FullShift {
            m: int("m")?.ok_or_else(|| need("m"))? as u32,
            truncation: int("len")?,
        },
        "real_shift" => SystemSpec::RealShift {
            truncation: int("len")?,
        },
        "formal_derivative" => SystemSpec::FormalDerivative {
            truncation: int("len")?,
        },
        "torus" => {
            let m = parse_matrix(get("matrix").ok_or_else(|| need("matrix"))?)?;
            let mut rows = Vec::with_capacity(m.len());
            for r in m {
                let mut out = Vec::with_capacity(r.len());
                for v in r {
                    if v.fract() != 0.0 {
                        return Err(Error::Parse(format!("torus entry {v} is not an integer")));
                    }
                    out.push(v as i64);
                }
                rows.push(out);
            }
            SystemSpec::torus(rows)
        }
        "circle" => SystemSpec::circle_map(int("k")?.ok_or_else(|| need("k"))? as i64),
        "identity" => {
            let d = int("dim")?.unwrap_or(1);
            SystemSpec::torus(
                (0..d)
                    .map(|i| (0..d).map(|j| (i == j) as i64).collect())
                    .collect(),
            )
        }
        "linear" => {
            let matrix = parse_matrix(get("matrix").ok_or_else(|| need("matrix"))?)?;
            let metric = match get("metric").unwrap_or("arctan") {
                "arctan" => LineMetric::Arctan {
                    core_radius: num("core")?.unwrap_or(10.0),
                },
                "window" => LineMetric::Window {
                    radius: num("radius")?.unwrap_or(1.0),
                },
                other => return Err(Error::Parse(format!("unknown line metric {other:?}"))),
            };
            SystemSpec::linear(matrix, metric)
        }
        _ => unreachable!(),
    })
}

/// `[[a,b],[c,d]]`, with commas or spaces between entries.
fn parse_matrix(s: &str) -> Result<Vec<Vec<f64>>> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| Error::Parse(format!("matrix must be bracketed: {s:?}")))?;
    let mut rows = Vec::new();
    let mut rest = inner;
    while let Some(open) = rest.find('[') {
        let close = rest[open..]
            .find(']')
            .ok_or_else(|| Error::Parse(format!("unclosed row in {s:?}")))?
            + open;
        let row = rest[open + 1..close]
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad matrix entry {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
        rest = &rest[close + 1..];
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("empty matrix {s:?}")));
    }
    Ok(rows)
}

fn depth_deltas(c: char) -> i32 {
    match c {
        '[' | '(' | '{' => 1,
        ']' | ')' | '}' => -1,
        _ => 0,
    }
}

fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        depth += depth_deltas(c);
        if c == sep && depth == 0 {
            out.push(&s[start..i]);
            start = i + c.len_utf8();
        }
    }
    out.push(&s[start..]);
    out
}

fn top_level_last(s: &str, sep: char) -> Option<usize> {
    let mut depth = 0;
    let mut found = None;
    for (i, c) in s.char_indices() {
        depth += depth_deltas(c);
        if c == sep && depth == 0 {
            found = Some(i);
        }
    }
    found
}
