//! CPLEX LP text format: writer and a reader for the subset the writer emits.

use std::collections::HashMap;
use std::fmt::Write;

use crate::error::LpParseError;
use crate::model::{LinConstraint, MilpModel, Sense, VarId, VarKind};

/// Formats a number so that parsing it back gives the same `f64`.
pub fn fmt_num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else if v.abs() >= 1e-4 && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    s.len() <= 255 && chars.all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c))
}

/// Names used in the file: the model name when it is a legal LP identifier, otherwise `v{id}`.
fn export_names(model: &MilpModel) -> Vec<String> {
    let mut used = std::collections::HashSet::new();
    model
        .vars
        .iter()
        .map(|v| {
            let name = if valid_name(&v.name) && !v.name.eq_ignore_ascii_case("free") {
                v.name.clone()
            } else {
                format!("v{}", v.id.0)
            };
            let mut cand = name.clone();
            let mut k = 1;
            while !used.insert(cand.clone()) {
                cand = format!("{name}_{k}");
                k += 1;
            }
            cand
        })
        .collect()
}

fn write_expr(out: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    if terms.is_empty() {
        out.push('0');
        return;
    }
    for (i, (v, c)) in terms.iter().enumerate() {
        let (sign, mag) = if *c < 0.0 { ("-", -c) } else { ("+", *c) };
        if i == 0 {
            if sign == "-" {
                out.push_str("- ");
            }
        } else {
            let _ = write!(out, " {sign} ");
        }
        if mag != 1.0 {
            let _ = write!(out, "{} ", fmt_num(mag));
        }
        out.push_str(&names[v.0]);
    }
}

pub fn export_lp(model: &MilpModel) -> String {
    let names = export_names(model);
    let mut out = String::from("Maximize\n obj: ");
    write_expr(&mut out, &model.objective, &names);
    out.push_str("\nSubject To\n");
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, " c{i}: ");
        write_expr(&mut out, &c.terms, &names);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for (v, name) in model.vars.iter().zip(&names) {
        match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
            (true, true) => {
                let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(v.lower), fmt_num(v.upper));
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {}", fmt_num(v.lower));
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {}", fmt_num(v.upper));
            }
        }
    }
    let bins: Vec<&str> = model
        .vars
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
}

fn parse_num(tok: &str, line: usize) -> Result<f64, LpParseError> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| LpParseError::Syntax {
            line,
            msg: format!("expected number, found {tok:?}"),
        }),
    }
}

fn tokenize(s: &str) -> Vec<String> {
    let mut toks = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
        } else if c == '<' || c == '>' || c == '=' {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
            let mut op = c.to_string();
            if i + 1 < chars.len() && chars[i + 1] == '=' && c != '=' {
                op.push('=');
                i += 1;
            }
            toks.push(op);
        } else if (c == '+' || c == '-') && !is_exponent_prefix(&cur) {
            if !cur.is_empty() {
                toks.push(std::mem::take(&mut cur));
            }
            toks.push(c.to_string());
        } else {
            cur.push(c);
        }
        i += 1;
    }
    if !cur.is_empty() {
        toks.push(cur);
    }
    toks
}

/// True for partial numbers such as `1.5e`, where a following sign belongs to the exponent.
fn is_exponent_prefix(cur: &str) -> bool {
    cur.starts_with(|c: char| c.is_ascii_digit() || c == '.') && (cur.ends_with('e') || cur.ends_with('E'))
}

struct Reader {
    model: MilpModel,
    index: HashMap<String, VarId>,
}

impl Reader {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(v) = self.index.get(name) {
            return *v;
        }
        let v = self.model.continuous(name, 0.0, f64::INFINITY);
        self.index.insert(name.to_string(), v);
        v
    }

    /// Parses `[sign] [coef] name ...` tokens into terms.
    fn expr(&mut self, toks: &[String], line: usize) -> Result<Vec<(VarId, f64)>, LpParseError> {
        let mut terms = Vec::new();
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        for t in toks {
            match t.as_str() {
                "+" => {}
                "-" => sign = -sign,
                _ => {
                    if let Ok(v) = t.parse::<f64>() {
                        coef = Some(coef.unwrap_or(1.0) * v);
                    } else {
                        let v = self.var(t);
                        terms.push((v, sign * coef.unwrap_or(1.0)));
                        sign = 1.0;
                        coef = None;
                    }
                }
            }
        }
        if coef.is_some_and(|c| c != 0.0) {
            return Err(LpParseError::Syntax {
                line,
                msg: "constant term in expression".into(),
            });
        }
        Ok(terms)
    }
}

/// Reads an LP file produced by [`export_lp`] (and simple hand-written ones).
///
/// Variables are indexed in the order of the Bounds section, so exporting a model
/// and reading it back keeps variable indices.
pub fn parse_lp(text: &str) -> Result<MilpModel, LpParseError> {
    let mut r = Reader {
        model: MilpModel::new(),
        index: HashMap::new(),
    };
    let mut section = Section::None;
    let mut saw_objective = false;
    let mut saw_end = false;
    let mut pending: Vec<String> = Vec::new();
    let mut pending_line = 0;
    let mut obj_toks: Vec<String> = Vec::new();
    let mut bound_lines: Vec<(usize, Vec<String>)> = Vec::new();
    let mut binaries: Vec<(usize, String)> = Vec::new();
    let mut rows: Vec<(usize, String, Vec<String>)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('\\').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let lower = body.to_ascii_lowercase();
        let header = match lower.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "generals" | "general" => Some(Section::Generals),
            "end" => {
                saw_end = true;
                break;
            }
            "minimize" | "minimise" | "min" => {
                return Err(LpParseError::Syntax {
                    line,
                    msg: "only maximization models are supported".into(),
                })
            }
            _ => None,
        };
        if let Some(h) = header {
            if h == Section::Objective {
                saw_objective = true;
            }
            section = h;
            continue;
        }
        match section {
            Section::None => {
                return Err(LpParseError::Syntax {
                    line,
                    msg: "content before the objective section".into(),
                })
            }
            Section::Objective => {
                let b = match body.split_once(':') {
                    Some((_, rest)) => rest,
                    None => body,
                };
                obj_toks.extend(tokenize(b));
            }
            Section::Constraints => {
                if pending.is_empty() {
                    pending_line = line;
                }
                pending.extend(tokenize(body));
                let has_sense = pending.iter().any(|t| t == "<=" || t == ">=" || t == "=" || t == "<" || t == ">");
                if has_sense && !pending.last().is_some_and(|t| t == "<=" || t == ">=" || t == "=" || t == "-" || t == "+") {
                    let mut toks = std::mem::take(&mut pending);
                    let mut name = format!("c{}", rows.len());
                    if let Some(first) = toks.first() {
                        if let Some(stripped) = first.strip_suffix(':') {
                            name = stripped.to_string();
                            toks.remove(0);
                        } else if toks.len() > 1 && toks[1].starts_with(':') {
                            name = toks[0].clone();
                            let rest = toks[1][1..].to_string();
                            toks.drain(0..2);
                            if !rest.is_empty() {
                                toks.insert(0, rest);
                            }
                        } else if let Some((n, rest)) = first.split_once(':') {
                            name = n.to_string();
                            let rest = rest.to_string();
                            toks.remove(0);
                            if !rest.is_empty() {
                                toks.insert(0, rest);
                            }
                        }
                    }
                    rows.push((pending_line, name, toks));
                }
            }
            Section::Bounds => bound_lines.push((line, tokenize(body))),
            Section::Binaries | Section::Generals => {
                for t in body.split_whitespace() {
                    binaries.push((line, t.to_string()));
                }
            }
        }
    }
    if !saw_objective {
        return Err(LpParseError::MissingSection("Maximize"));
    }
    if !saw_end {
        return Err(LpParseError::MissingSection("End"));
    }
    if !pending.is_empty() {
        return Err(LpParseError::Syntax {
            line: pending_line,
            msg: "unterminated constraint".into(),
        });
    }

    // bounds list every variable in index order, so register names from there first
    for (_, toks) in &bound_lines {
        for t in join_signs(toks.clone()) {
            let is_op = matches!(t.as_str(), "<=" | ">=" | "=" | "<" | ">");
            if !is_op && parse_num(&t, 0).is_err() && !t.eq_ignore_ascii_case("free") {
                r.var(&t);
            }
        }
    }
    let obj = r.expr(&obj_toks, 1)?;
    let mut constraints = Vec::new();
    for (line, name, toks) in rows {
        let pos = toks
            .iter()
            .position(|t| matches!(t.as_str(), "<=" | ">=" | "=" | "<" | ">"))
            .ok_or(LpParseError::Syntax {
                line,
                msg: "missing comparison".into(),
            })?;
        let sense = match toks[pos].as_str() {
            "<=" | "<" => Sense::Le,
            ">=" | ">" => Sense::Ge,
            _ => Sense::Eq,
        };
        let terms = r.expr(&toks[..pos], line)?;
        let rhs_toks = &toks[pos + 1..];
        let rhs = match rhs_toks {
            [v] => parse_num(v, line)?,
            [s, v] if s == "-" => -parse_num(v, line)?,
            [s, v] if s == "+" => parse_num(v, line)?,
            _ => {
                return Err(LpParseError::Syntax {
                    line,
                    msg: "right-hand side must be a single number".into(),
                })
            }
        };
        constraints.push(LinConstraint::new(terms, sense, rhs, name));
    }

    for (line, toks) in bound_lines {
        let toks = join_signs(toks);
        let err = |m: &str| LpParseError::Syntax { line, msg: m.to_string() };
        match toks.as_slice() {
            [name, free] if free.eq_ignore_ascii_case("free") => {
                let v = r.var(name);
                r.model.set_bounds(v, f64::NEG_INFINITY, f64::INFINITY);
            }
            [lo, a, name, b, hi] if a == "<=" && b == "<=" => {
                let v = r.var(name);
                let (lo, hi) = (parse_num(lo, line)?, parse_num(hi, line)?);
                r.model.set_bounds(v, lo, hi);
            }
            [name, op, val] if op == ">=" || op == "<=" || op == "=" => {
                let v = r.var(name);
                let x = parse_num(val, line)?;
                let (lo, hi) = (r.model.vars[v.0].lower, r.model.vars[v.0].upper);
                match op.as_str() {
                    ">=" => r.model.set_bounds(v, x, hi),
                    "<=" => r.model.set_bounds(v, lo, x),
                    _ => r.model.set_bounds(v, x, x),
                }
            }
            [val, op, name] if op == "<=" || op == ">=" => {
                let v = r.var(name);
                let x = parse_num(val, line)?;
                let (lo, hi) = (r.model.vars[v.0].lower, r.model.vars[v.0].upper);
                if op == "<=" {
                    r.model.set_bounds(v, x, hi);
                } else {
                    r.model.set_bounds(v, lo, x);
                }
            }
            _ => return Err(err("unrecognized bound")),
        }
    }
    for (_, name) in binaries {
        let v = r.var(&name);
        let var = &mut r.model.vars[v.0];
        var.kind = VarKind::Binary;
        if !var.upper.is_finite() {
            var.upper = 1.0;
        }
        var.lower = var.lower.max(0.0);
        var.upper = var.upper.min(1.0);
    }

    let mut model = r.model;
    model.set_objective(obj);
    for c in constraints {
        model.add_constraint(c);
    }
    Ok(model)
}

/// Merges a leading sign token into the following number.
fn join_signs(toks: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut sign: Option<String> = None;
    for t in toks {
        if t == "-" || t == "+" {
            sign = Some(t);
            continue;
        }
        match sign.take() {
            Some(s) if s == "-" => out.push(format!("-{t}")),
            _ => out.push(t),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for v in [0.0, 1.0, -3.0, 0.1, 1e-7, 2.5e20, 123456.789, -0.0001, 1.0 / 3.0] {
            assert_eq!(fmt_num(v).parse::<f64>().unwrap(), v, "{}", fmt_num(v));
        }
        assert_eq!(fmt_num(2.0), "2");
        assert_eq!(fmt_num(1e-7), "1e-7");
    }

    #[test]
    fn writes_expected_layout() {
        let mut m = MilpModel::new();
        let x1 = m.continuous("x1", 0.0, f64::INFINITY);
        let x2 = m.binary("x2");
        m.constrain(vec![(x1, 1.0), (x2, 2.0)], Sense::Le, 3.0, "");
        m.set_objective(vec![(x1, 1.0), (x2, -1.5)]);
        let s = export_lp(&m);
        assert!(s.starts_with("Maximize\n obj: x1 - 1.5 x2\n"));
        assert!(s.contains(" c0: x1 + 2 x2 <= 3\n"));
        assert!(s.contains(" x1 >= 0\n"));
        assert!(s.contains(" 0 <= x2 <= 1\n"));
        assert!(s.contains("Binaries\n x2\n"));
        assert!(s.ends_with("End\n"));
        let back = parse_lp(&s).unwrap();
        assert_eq!(back.constraints[0].terms, m.constraints[0].terms);
        assert_eq!(back.objective, m.objective);
    }

    #[test]
    fn scientific_coefficients_parse() {
        let s = "Maximize\n obj: 1e-7 a - 2.5e+20 b\nSubject To\n c0: a + b >= -1e-9\nBounds\n a free\n -inf <= b <= 4\nEnd\n";
        let m = parse_lp(s).unwrap();
        assert_eq!(m.objective[0].1, 1e-7);
        assert_eq!(m.objective[1].1, -2.5e20);
        assert_eq!(m.constraints[0].rhs, -1e-9);
        assert_eq!(m.vars[0].lower, f64::NEG_INFINITY);
        assert_eq!(m.vars[1].upper, 4.0);
    }
}
