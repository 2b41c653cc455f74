//! Signal files: a `# group=<kind> vdim=<m>` header, then one
//! `i1,...,id,v1,...,vm` row per support point.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::function::SampledFunction;
use crate::group::{GroupPoint, GroupSpace};

pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn canonical_value(v: f64) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v)
        .parse()
        .expect("scientific notation parses")
}

fn fmt_value(out: &mut String, v: f64) {
    let v = canonical_value(v);
    if v.is_infinite() {
        out.push_str(if v > 0.0 { "inf" } else { "-inf" });
    } else {
        write!(out, "{v}").expect("writing to a String");
    }
}

/// Canonical text: sorted support, values at 12 significant digits.
pub fn to_csv(f: &SampledFunction) -> String {
    let mut out = format!("# group={} vdim={}\n", f.group(), f.vdim());
    for (p, v) in f.iter() {
        let mut first = true;
        for c in p.coords() {
            if !first {
                out.push(',');
            }
            first = false;
            write!(out, "{c}").expect("writing to a String");
        }
        for x in v {
            out.push(',');
            fmt_value(&mut out, *x);
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_header(line_no: usize, line: &str) -> Result<(GroupSpace, usize)> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| parse_err(line_no, "expected header `# group=<kind> vdim=<m>`"))?;
    let mut group = None;
    let mut vdim = None;
    for field in body.split_whitespace() {
        match field.split_once('=') {
            Some(("group", g)) => {
                group = Some(
                    g.parse::<GroupSpace>()
                        .map_err(|e| parse_err(line_no, e.to_string()))?,
                )
            }
            Some(("vdim", m)) => {
                let m: usize = m
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad vdim `{m}`")))?;
                if m == 0 {
                    return Err(parse_err(line_no, "vdim must be positive"));
                }
                vdim = Some(m);
            }
            _ => {
                return Err(parse_err(
                    line_no,
                    format!("unknown header field `{field}`"),
                ))
            }
        }
    }
    match (group, vdim) {
        (Some(g), Some(m)) => Ok((g, m)),
        _ => Err(parse_err(line_no, "header needs both group= and vdim=")),
    }
}

fn parse_value(line_no: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(line_no, format!("bad value `{s}`")))?;
    if v.is_nan() {
        return Err(parse_err(line_no, "NaN is not a valid sample"));
    }
    Ok(v)
}

/// Parses signal text. Errors carry 1-based line numbers. Blank lines and
/// further `#` comment lines are skipped.
pub fn parse_csv(text: &str) -> Result<SampledFunction> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (group, vdim) = loop {
        match lines.next() {
            Some((_, "")) => continue,
            Some((n, l)) => break parse_header(n, l)?,
            None => return Err(parse_err(1, "missing header")),
        }
    };
    let d = group.point_dim();
    let mut seen: HashMap<GroupPoint, usize> = HashMap::new();
    let mut entries = Vec::new();
    for (n, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != d + vdim {
            return Err(parse_err(
                n,
                format!(
                    "expected {} fields ({d} indices, {vdim} values), found {}",
                    d + vdim,
                    fields.len()
                ),
            ));
        }
        let coords = fields[..d]
            .iter()
            .map(|s| {
                s.parse::<i64>()
                    .map_err(|_| parse_err(n, format!("bad index `{s}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let point = GroupPoint::new(&coords);
        group
            .check(&point)
            .map_err(|e| parse_err(n, e.to_string()))?;
        if let Some(prev) = seen.insert(point, n) {
            return Err(parse_err(
                n,
                format!("point {point} already given on line {prev}"),
            ));
        }
        let values = fields[d..]
            .iter()
            .map(|s| parse_value(n, s))
            .collect::<Result<Vec<_>>>()?;
        entries.push((point, values));
    }
    SampledFunction::new(group, vdim, entries)
}
