//! Line-oriented native problem format.
//!
//! ```text
//! # comment
//! dims <n> <m>
//! f <kind> [params]
//! g <kind> [params]
//! A
//! <i> <j> <value>        # 0-based triplets, one per line
//! optimum
//! <n + m numbers>        # any line layout
//! start
//! <n + m numbers>
//! ```
//!
//! Kinds and their parameters (vectors have the side's dimension):
//! `zero`, `linear c…`, `nonneg`, `linear_nonneg c…`, `l1 λ`, `half_sq μ b…`,
//! `linf_ball r`, `box lo… hi…`. Bounds may be `inf` / `-inf`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::functions::{ProxFunction, ProxKind};
use crate::linalg::{SparseMatrix, Vector};

use super::SaddleProblem;

#[derive(Clone, Debug)]
pub struct NativeFile {
    pub problem: SaddleProblem,
    pub start: Option<Vector>,
}

enum Section {
    Top,
    Matrix,
    Optimum,
    Start,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| !v.is_nan())
        .ok_or_else(|| parse_err(line, format!("expected a number, found '{tok}'")))
}

fn count(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected a nonnegative integer, found '{tok}'")))
}

fn parse_function(tokens: &[&str], dim: usize, line: usize) -> Result<ProxFunction> {
    let Some((&kind, rest)) = tokens.split_first() else {
        return Err(parse_err(line, "missing function kind"));
    };
    let nums = rest.iter().map(|t| number(t, line)).collect::<Result<Vec<f64>>>()?;
    let want = |k: usize| -> Result<()> {
        if nums.len() == k {
            Ok(())
        } else {
            Err(parse_err(line, format!("'{kind}' takes {k} numbers, found {}", nums.len())))
        }
    };
    let kind = match kind {
        "zero" => {
            want(0)?;
            ProxKind::Zero
        }
        "linear" => {
            want(dim)?;
            ProxKind::Linear(nums)
        }
        "nonneg" => {
            want(0)?;
            ProxKind::IndicatorNonneg
        }
        "linear_nonneg" => {
            want(dim)?;
            ProxKind::LinearPlusNonneg(nums)
        }
        "l1" => {
            want(1)?;
            ProxKind::L1 { weight: nums[0] }
        }
        "half_sq" => {
            want(1 + dim)?;
            ProxKind::HalfSqNorm {
                weight: nums[0],
                shift: nums[1..].to_vec(),
            }
        }
        "linf_ball" => {
            want(1)?;
            ProxKind::IndicatorLinfBall { radius: nums[0] }
        }
        "box" => {
            want(2 * dim)?;
            ProxKind::IndicatorBox {
                lo: nums[..dim].to_vec(),
                hi: nums[dim..].to_vec(),
            }
        }
        other => return Err(parse_err(line, format!("unknown function kind '{other}'"))),
    };
    ProxFunction::new(kind, dim).map_err(|e| parse_err(line, e.to_string()))
}

pub fn parse_native(text: &str) -> Result<NativeFile> {
    let mut dims: Option<(usize, usize)> = None;
    let mut f: Option<ProxFunction> = None;
    let mut g: Option<ProxFunction> = None;
    let mut triplets = Vec::new();
    let mut optimum: Option<Vector> = None;
    let mut start: Option<Vector> = None;
    let mut section = Section::Top;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&head) = tokens.first() else { continue };
        match head {
            "dims" => {
                if tokens.len() != 3 {
                    return Err(parse_err(line, "expected 'dims <n> <m>'"));
                }
                if dims.is_some() {
                    return Err(parse_err(line, "duplicate 'dims'"));
                }
                dims = Some((count(tokens[1], line)?, count(tokens[2], line)?));
                section = Section::Top;
            }
            "f" | "g" => {
                let (n, m) = dims.ok_or_else(|| parse_err(line, "'dims' must come first"))?;
                let slot = if head == "f" { &mut f } else { &mut g };
                if slot.is_some() {
                    return Err(parse_err(line, format!("duplicate '{head}'")));
                }
                *slot = Some(parse_function(&tokens[1..], if head == "f" { n } else { m }, line)?);
                section = Section::Top;
            }
            "A" => {
                if tokens.len() != 1 {
                    return Err(parse_err(line, "'A' stands on its own line"));
                }
                section = Section::Matrix;
            }
            "optimum" | "start" => {
                let slot = if head == "optimum" { &mut optimum } else { &mut start };
                if slot.is_some() {
                    return Err(parse_err(line, format!("duplicate '{head}'")));
                }
                let mut v = Vec::new();
                for t in &tokens[1..] {
                    v.push(number(t, line)?);
                }
                *slot = Some(v);
                section = if head == "optimum" {
                    Section::Optimum
                } else {
                    Section::Start
                };
            }
            _ => match section {
                Section::Matrix => {
                    if tokens.len() != 3 {
                        return Err(parse_err(line, "expected a triplet '<i> <j> <value>'"));
                    }
                    triplets.push((count(tokens[0], line)?, count(tokens[1], line)?, number(tokens[2], line)?));
                }
                Section::Optimum | Section::Start => {
                    let slot = if matches!(section, Section::Optimum) {
                        optimum.as_mut()
                    } else {
                        start.as_mut()
                    };
                    let v = slot.expect("section opened with its vector");
                    for t in &tokens {
                        v.push(number(t, line)?);
                    }
                }
                Section::Top => return Err(parse_err(line, format!("unexpected '{head}'"))),
            },
        }
    }

    let (n, m) = dims.ok_or_else(|| parse_err(last_line, "missing 'dims'"))?;
    let f = f.ok_or_else(|| parse_err(last_line, "missing 'f'"))?;
    let g = g.ok_or_else(|| parse_err(last_line, "missing 'g'"))?;
    let a = SparseMatrix::from_triplets(m, n, &triplets).map_err(|e| parse_err(last_line, e.to_string()))?;
    let mut problem = SaddleProblem::new(f, g, a)?;
    for (name, v) in [("optimum", &optimum), ("start", &start)] {
        if let Some(v) = v {
            if v.len() != n + m {
                return Err(parse_err(
                    last_line,
                    format!("'{name}' has {} numbers, expected {}", v.len(), n + m),
                ));
            }
        }
    }
    if let Some(z) = optimum {
        problem = problem.with_z_star(z)?;
    }
    Ok(NativeFile { problem, start })
}

pub fn read_native(path: impl AsRef<Path>) -> Result<NativeFile> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_native(&text)
}

fn push_numbers(out: &mut String, v: &[f64]) {
    for x in v {
        let _ = write!(out, " {x:e}");
    }
}

fn format_function(h: &ProxFunction) -> String {
    let mut s = h.kind().name().to_string();
    match h.kind() {
        ProxKind::Zero | ProxKind::IndicatorNonneg => {}
        ProxKind::Linear(c) | ProxKind::LinearPlusNonneg(c) => push_numbers(&mut s, c),
        ProxKind::L1 { weight } => push_numbers(&mut s, &[*weight]),
        ProxKind::IndicatorLinfBall { radius } => push_numbers(&mut s, &[*radius]),
        ProxKind::HalfSqNorm { weight, shift } => {
            push_numbers(&mut s, &[*weight]);
            push_numbers(&mut s, shift);
        }
        ProxKind::IndicatorBox { lo, hi } => {
            push_numbers(&mut s, lo);
            push_numbers(&mut s, hi);
        }
    }
    s
}

/// Serializes a problem; numbers round-trip exactly. Function offsets are not stored.
pub fn format_native(problem: &SaddleProblem, start: Option<&[f64]>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "dims {} {}", problem.n(), problem.m());
    let _ = writeln!(out, "f {}", format_function(problem.f()));
    let _ = writeln!(out, "g {}", format_function(problem.g()));
    out.push_str("A\n");
    for (i, j, v) in problem.a().triplets() {
        let _ = writeln!(out, "{i} {j} {v:e}");
    }
    if let Some(z) = problem.z_star() {
        out.push_str("optimum\n");
        push_numbers(&mut out, z);
        out.push('\n');
    }
    if let Some(z) = start {
        out.push_str("start\n");
        push_numbers(&mut out, z);
        out.push('\n');
    }
    out
}

pub fn write_native(path: impl AsRef<Path>, problem: &SaddleProblem, start: Option<&[f64]>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_native(problem, start)).map_err(|e| Error::io(path, e))
}
