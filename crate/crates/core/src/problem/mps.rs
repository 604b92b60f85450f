//! Minimal MPS reader and writer for `min cᵀx, Ax = b, x ≥ 0`.
//!
//! Recognised sections: NAME, ROWS (N and E rows), COLUMNS, RHS, ENDATA.
//! Fields are split on whitespace. Anything else is reported with its line.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

use super::LpInstance;

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Done,
}

fn unsupported(feature: impl Into<String>, line: usize) -> Error {
    Error::MpsUnsupported {
        feature: feature.into(),
        line,
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn value(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(line, format!("bad number '{tok}'")))
}

pub fn parse_mps(text: &str) -> Result<LpInstance> {
    let mut section = Section::None;
    let mut objective: Option<String> = None;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut c: Vec<f64> = Vec::new();
    let mut triplets = Vec::new();
    let mut b_entries: Vec<(usize, f64)> = Vec::new();
    let mut last_col: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        let indented = raw.starts_with(' ') || raw.starts_with('\t');
        if !indented {
            section = match tokens[0] {
                "NAME" => Section::None,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "ENDATA" => Section::Done,
                other => return Err(unsupported(other, line)),
            };
            continue;
        }
        match section {
            Section::Rows => {
                if tokens.len() != 2 {
                    return Err(parse_err(line, "ROWS entries are '<type> <name>'"));
                }
                match tokens[0] {
                    "N" => {
                        if objective.is_some() {
                            return Err(unsupported("second N row", line));
                        }
                        objective = Some(tokens[1].to_string());
                    }
                    "E" => {
                        let next = rows.len();
                        if rows.insert(tokens[1].to_string(), next).is_some() {
                            return Err(parse_err(line, format!("duplicate row '{}'", tokens[1])));
                        }
                    }
                    other => return Err(unsupported(format!("row type {other}"), line)),
                }
            }
            Section::Columns => {
                if tokens.iter().any(|t| t.contains("MARKER")) {
                    return Err(unsupported("MARKER", line));
                }
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(parse_err(line, "COLUMNS entries are '<col> <row> <value> [<row> <value>]'"));
                }
                let name = tokens[0];
                if last_col.as_deref() != Some(name) {
                    if cols.contains_key(name) {
                        return Err(parse_err(line, format!("column '{name}' is not contiguous")));
                    }
                    cols.insert(name.to_string(), c.len());
                    c.push(0.0);
                    last_col = Some(name.to_string());
                }
                let j = cols[name];
                for pair in tokens[1..].chunks(2) {
                    let v = value(pair[1], line)?;
                    if Some(pair[0]) == objective.as_deref() {
                        c[j] += v;
                    } else if let Some(&i) = rows.get(pair[0]) {
                        triplets.push((i, j, v));
                    } else {
                        return Err(parse_err(line, format!("unknown row '{}'", pair[0])));
                    }
                }
            }
            Section::Rhs => {
                if tokens.len() != 3 && tokens.len() != 5 {
                    return Err(parse_err(line, "RHS entries are '<set> <row> <value> [<row> <value>]'"));
                }
                for pair in tokens[1..].chunks(2) {
                    let v = value(pair[1], line)?;
                    if Some(pair[0]) == objective.as_deref() {
                        return Err(unsupported("objective RHS", line));
                    }
                    let &i = rows
                        .get(pair[0])
                        .ok_or_else(|| parse_err(line, format!("unknown row '{}'", pair[0])))?;
                    b_entries.push((i, v));
                }
            }
            Section::None => return Err(parse_err(line, "data outside a section")),
            Section::Done => return Err(parse_err(line, "data after ENDATA")),
        }
    }
    if section != Section::Done {
        return Err(parse_err(text.lines().count(), "missing ENDATA"));
    }
    if objective.is_none() {
        return Err(parse_err(1, "no N row"));
    }
    let mut b = vec![0.0; rows.len()];
    for (i, v) in b_entries {
        b[i] += v;
    }
    let a = SparseMatrix::from_triplets(rows.len(), c.len(), &triplets)?;
    LpInstance::new(c, a, b)
}

pub fn read_mps(path: impl AsRef<Path>) -> Result<LpInstance> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mps(&text)
}

pub fn format_mps(lp: &LpInstance, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {name}");
    out.push_str("ROWS\n N  obj\n");
    for i in 0..lp.m() {
        let _ = writeln!(out, " E  r{i}");
    }
    out.push_str("COLUMNS\n");
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.n()];
    for (i, j, v) in lp.a.triplets() {
        by_col[j].push((i, v));
    }
    for (j, entries) in by_col.iter().enumerate() {
        let _ = writeln!(out, "    x{j}  obj  {:e}", lp.c[j]);
        for (i, v) in entries {
            let _ = writeln!(out, "    x{j}  r{i}  {v:e}");
        }
    }
    out.push_str("RHS\n");
    for (i, v) in lp.b.iter().enumerate() {
        if *v != 0.0 {
            let _ = writeln!(out, "    rhs  r{i}  {v:e}");
        }
    }
    out.push_str("ENDATA\n");
    out
}

pub fn write_mps(path: impl AsRef<Path>, lp: &LpInstance, name: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_mps(lp, name)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "\
NAME          small
ROWS
 N  cost
 E  c1
 E  c2
COLUMNS
    x1  cost  1.0  c1  1.0
    x2  cost  2.0
    x2  c1  1.0  c2  3.0
RHS
    rhs  c1  4.0  c2  6.0
ENDATA
";

    #[test]
    fn parses_equality_lp() {
        let lp = parse_mps(SMALL).unwrap();
        assert_eq!(lp.c, vec![1.0, 2.0]);
        assert_eq!(lp.b, vec![4.0, 6.0]);
        let t: Vec<_> = lp.a.triplets().collect();
        assert_eq!(t, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 3.0)]);
    }

    #[test]
    fn round_trips_through_writer() {
        let lp = parse_mps(SMALL).unwrap();
        let again = parse_mps(&format_mps(&lp, "again")).unwrap();
        assert_eq!(again, lp);
    }

    #[test]
    fn unsupported_features_name_the_line() {
        let with_bounds = SMALL.replace("ENDATA", "BOUNDS\n UP bnd x1 4\nENDATA");
        match parse_mps(&with_bounds) {
            Err(Error::MpsUnsupported { feature, line }) => {
                assert_eq!(feature, "BOUNDS");
                assert_eq!(line, 12);
            }
            other => panic!("{other:?}"),
        }
        let with_l = SMALL.replace(" E  c2", " L  c2");
        assert!(matches!(
            parse_mps(&with_l),
            Err(Error::MpsUnsupported { line: 5, .. })
        ));
        let ranges = SMALL.replace("RHS\n", "RANGES\n");
        assert!(matches!(parse_mps(&ranges), Err(Error::MpsUnsupported { .. })));
        let obj_rhs = SMALL.replace("c2  6.0", "cost  6.0");
        assert!(matches!(parse_mps(&obj_rhs), Err(Error::MpsUnsupported { .. })));
    }

    #[test]
    fn missing_endata_is_an_error() {
        assert!(matches!(parse_mps(&SMALL.replace("ENDATA\n", "")), Err(Error::Parse { .. })));
    }
}
