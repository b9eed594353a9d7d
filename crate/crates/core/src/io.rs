//! File formats.
//!
//! A set file is JSON lines: a header naming the group, e.g.
//! `{"group":"Z","D":2}`, followed by one coordinate array per element.
//! A distribution file is a single JSON object carrying the same group
//! fields plus `"mass": [[x₁, …, x_D, p], …]`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::dist::FinDist;
use crate::error::{Error, Result};
use crate::group::{first_duplicate, GroupContext, GroupSet};

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn coords_of(v: &Value, line: usize) -> Result<Vec<i64>> {
    v.as_array()
        .ok_or_else(|| parse_err(line, "expected an array of integers"))?
        .iter()
        .map(|c| c.as_i64().ok_or_else(|| parse_err(line, format!("{c} is not an integer"))))
        .collect()
}

/// Parses the set format from a string.
pub fn parse_set(text: &str) -> Result<GroupSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let ctx: GroupContext =
        serde_json::from_str(header).map_err(|e| parse_err(hline, format!("bad header: {e}")))?;
    let mut elems = Vec::new();
    let mut line_of = Vec::new();
    for (n, l) in lines {
        let v: Value = serde_json::from_str(l).map_err(|e| parse_err(n, e.to_string()))?;
        let c = coords_of(&v, n)?;
        elems.push(ctx.canonicalize(&c).map_err(|e| parse_err(n, e.to_string()))?);
        line_of.push(n);
    }
    if elems.is_empty() {
        return Err(Error::Empty("set file"));
    }
    if let Some(i) = first_duplicate(&elems) {
        return Err(parse_err(line_of[i], format!("duplicate element {:?}", elems[i])));
    }
    Ok(GroupSet::from_canonical(ctx, elems))
}

/// Parses the distribution format from a string. Masses are renormalized
/// when they sum to 1 within [`crate::dist::MASS_SUM_TOLERANCE`].
pub fn parse_dist(text: &str) -> Result<FinDist> {
    let mut obj: Map<String, Value> = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    let mass = obj.remove("mass").ok_or_else(|| parse_err(1, "missing \"mass\""))?;
    let ctx: GroupContext =
        serde_json::from_value(Value::Object(obj)).map_err(|e| parse_err(1, format!("bad group: {e}")))?;
    let rows = mass.as_array().ok_or_else(|| parse_err(1, "\"mass\" must be an array"))?;
    let mut items = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let entry = i + 1;
        let r = row
            .as_array()
            .filter(|r| r.len() == ctx.dim() + 1)
            .ok_or_else(|| parse_err(entry, format!("mass entry {entry} must have {} numbers", ctx.dim() + 1)))?;
        let coords = coords_of(&Value::Array(r[..ctx.dim()].to_vec()), entry)?;
        let p = r[ctx.dim()]
            .as_f64()
            .ok_or_else(|| parse_err(entry, "probability is not a number"))?;
        items.push((coords, p));
    }
    FinDist::new(ctx, items)
}

pub fn parse_set_file(path: &Path) -> Result<GroupSet> {
    parse_set(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)
}

pub fn parse_dist_file(path: &Path) -> Result<FinDist> {
    parse_dist(&fs::read_to_string(path).map_err(|e| io_err(path, e))?)
}

/// Reads either format: a multi-line file with a header is a set, turned
/// into its uniform law; a single object with `"mass"` is a distribution.
pub fn parse_law_file(path: &Path) -> Result<FinDist> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    if text.contains("\"mass\"") {
        parse_dist(&text)
    } else {
        FinDist::uniform(&parse_set(&text)?)
    }
}

pub fn format_set(set: &GroupSet) -> Result<String> {
    let mut out = serde_json::to_string(set.ctx()).map_err(|e| Error::Io(e.to_string()))?;
    out.push('\n');
    for x in set.iter() {
        out.push_str(&serde_json::to_string(x).map_err(|e| Error::Io(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes masses at full precision so that parsing returns the same law.
pub fn format_dist(p: &FinDist) -> Result<String> {
    serde_json::to_string(p).map_err(|e| Error::Io(e.to_string()))
}

pub fn write_set_file(set: &GroupSet, path: &Path) -> Result<()> {
    fs::write(path, format_set(set)?).map_err(|e| io_err(path, e))
}

pub fn write_dist_file(p: &FinDist, path: &Path) -> Result<()> {
    fs::write(path, format_dist(p)? + "\n").map_err(|e| io_err(path, e))
}

/// Rounds to 12 significant digits.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = serde_json::Number::from_f64(round_sig(x)).map_or(Value::Null, Value::Number);
            }
        }
        Value::Array(a) => a.iter_mut().for_each(round_value),
        Value::Object(m) => m.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits. Field
/// order follows the declaration order of the serialized types.
pub fn report_json<T: Serialize + ?Sized>(result: &T) -> Result<String> {
    let mut v = serde_json::to_value(result).map_err(|e| Error::Io(e.to_string()))?;
    round_value(&mut v);
    let mut s = serde_json::to_string_pretty(&v).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes [`report_json`] to `path`, or to stdout when `path` is `None`.
pub fn report_emit<T: Serialize + ?Sized>(result: &T, path: Option<&Path>) -> Result<()> {
    let s = report_json(result)?;
    match path {
        Some(p) => fs::write(p, s).map_err(|e| io_err(p, e)),
        None => std::io::stdout()
            .lock()
            .write_all(s.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    }
}
