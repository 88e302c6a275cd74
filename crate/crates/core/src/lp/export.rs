//! CPLEX LP and free-format MPS text, written and parsed.
//!
//! Coefficients are printed with the shortest round-trip representation so
//! `parse(export(m))` rebuilds the same model.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{LpError, LpModel, Relation, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    LpText,
    Mps,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "lp" | "lp_text" => Ok(Self::LpText),
            "mps" => Ok(Self::Mps),
            other => Err(format!("unknown export format `{other}` (expected lp or mps)")),
        }
    }
}

pub fn export(model: &LpModel, format: ExportFormat) -> String {
    match format {
        ExportFormat::LpText => write_lp(model),
        ExportFormat::Mps => write_mps(model),
    }
}

pub fn parse(text: &str, format: ExportFormat) -> Result<LpModel, LpError> {
    match format {
        ExportFormat::LpText => parse_lp(text),
        ExportFormat::Mps => parse_mps(text),
    }
}

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn write_terms(out: &mut String, model: &LpModel, terms: &[(usize, f64)]) {
    if terms.is_empty() {
        // an empty row still needs an expression
        let _ = write!(out, " 0 {}", model.variables()[0].name);
        return;
    }
    for (i, &(v, c)) in terms.iter().enumerate() {
        let name = &model.variables()[v].name;
        if c < 0.0 {
            let _ = write!(out, " - {} {name}", num(-c));
        } else if i == 0 {
            let _ = write!(out, " {} {name}", num(c));
        } else {
            let _ = write!(out, " + {} {name}", num(c));
        }
    }
}

fn write_lp(model: &LpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ {}", model.name);
    out.push_str(match model.sense() {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    out.push_str(" obj:");
    if !model.variables().is_empty() {
        write_terms(&mut out, model, model.objective());
    }
    out.push_str("\nSubject To\n");
    for c in model.constraints() {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, model, &c.terms);
        let _ = writeln!(out, " {} {}", c.relation, num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables() {
        let _ = writeln!(out, " {} >= {}", v.name, num(v.lower));
    }
    out.push_str("End\n");
    out
}

fn write_mps(model: &LpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {}", model.name);
    out.push_str("OBJSENSE\n");
    out.push_str(match model.sense() {
        Sense::Maximize => "    MAX\n",
        Sense::Minimize => "    MIN\n",
    });
    out.push_str("ROWS\n N obj\n");
    for c in model.constraints() {
        let tag = match c.relation {
            Relation::Le => "L",
            Relation::Ge => "G",
            Relation::Eq => "E",
        };
        let _ = writeln!(out, " {tag} {}", c.name);
    }
    out.push_str("COLUMNS\n");
    for (v, var) in model.variables().iter().enumerate() {
        let mut any = false;
        for &(w, c) in model.objective() {
            if w == v {
                let _ = writeln!(out, " {} obj {}", var.name, num(c));
                any = true;
            }
        }
        for con in model.constraints() {
            for &(w, c) in &con.terms {
                if w == v {
                    let _ = writeln!(out, " {} {} {}", var.name, con.name, num(c));
                    any = true;
                }
            }
        }
        if !any {
            let _ = writeln!(out, " {} obj 0.0", var.name);
        }
    }
    out.push_str("RHS\n");
    for c in model.constraints() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, " RHS {} {}", c.name, num(c.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for v in model.variables() {
        let _ = writeln!(out, " LO BND {} {}", v.name, num(v.lower));
    }
    out.push_str("ENDATA\n");
    out
}

fn perr(line: usize, message: impl Into<String>) -> LpError {
    LpError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(line: usize, s: &str) -> Result<f64, LpError> {
    match s {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| perr(line, format!("bad number `{s}`"))),
    }
}

/// Looks up or declares a variable in parse order.
fn var_index(model: &mut LpModel, name: &str) -> Result<usize, LpError> {
    match model.index_of(name) {
        Some(i) => Ok(i),
        None => model.add_variable(name),
    }
}

/// Parses `[+|-] [coef] name ...` into terms.
fn parse_expr(model: &mut LpModel, line: usize, tokens: &[&str]) -> Result<Vec<(usize, f64)>, LpError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ => {
                if let Ok(c) = tok.parse::<f64>() {
                    if coef.is_some() {
                        return Err(perr(line, format!("two coefficients in a row at `{tok}`")));
                    }
                    coef = Some(c);
                } else {
                    let v = var_index(model, tok)?;
                    terms.push((v, sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err(perr(line, "dangling coefficient"));
    }
    Ok(terms)
}

#[derive(PartialEq)]
enum LpSection {
    Header,
    Objective,
    Constraints,
    Bounds,
    Done,
}

/// Constraint name, terms, relation and right-hand side as read from a file.
type ParsedRow = (String, Vec<(usize, f64)>, Relation, f64);

fn parse_lp(text: &str) -> Result<LpModel, LpError> {
    let mut model = LpModel::new("");
    let mut section = LpSection::Header;
    let mut sense = Sense::Maximize;
    let mut objective = Vec::new();
    let mut rows: Vec<ParsedRow> = Vec::new();
    let mut bounds: Vec<(String, f64)> = Vec::new();
    // declare variables in Bounds order first so indices survive a round trip
    let mut in_bounds = false;
    for raw in text.lines() {
        let line = raw.trim();
        match line.to_ascii_lowercase().as_str() {
            "bounds" => in_bounds = true,
            "end" => in_bounds = false,
            _ if in_bounds => {
                if let Some(name) = line.split_whitespace().next() {
                    var_index(&mut model, name)?;
                }
            }
            _ => {}
        }
    }
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('\\') {
            if section == LpSection::Header && model.name.is_empty() {
                model.name = comment.trim().to_string();
            }
            continue;
        }
        match line.to_ascii_lowercase().as_str() {
            "maximize" | "maximise" | "max" => {
                sense = Sense::Maximize;
                section = LpSection::Objective;
                continue;
            }
            "minimize" | "minimise" | "min" => {
                sense = Sense::Minimize;
                section = LpSection::Objective;
                continue;
            }
            "subject to" | "st" | "s.t." => {
                section = LpSection::Constraints;
                continue;
            }
            "bounds" => {
                section = LpSection::Bounds;
                continue;
            }
            "end" => {
                section = LpSection::Done;
                continue;
            }
            _ => {}
        }
        let (label, body) = match line.split_once(':') {
            Some((l, b)) => (Some(l.trim().to_string()), b),
            None => (None, line),
        };
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match section {
            LpSection::Objective => objective.extend(parse_expr(&mut model, line_no, &tokens)?),
            LpSection::Constraints => {
                let pos = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | "=<" | ">=" | "=>" | "=" | "<" | ">"))
                    .ok_or_else(|| perr(line_no, "constraint without a relation"))?;
                let relation = match tokens[pos] {
                    "<=" | "=<" | "<" => Relation::Le,
                    ">=" | "=>" | ">" => Relation::Ge,
                    _ => Relation::Eq,
                };
                if tokens.len() != pos + 2 {
                    return Err(perr(line_no, "expected a single number after the relation"));
                }
                let rhs = parse_f64(line_no, tokens[pos + 1])?;
                let terms = parse_expr(&mut model, line_no, &tokens[..pos])?;
                let name = label.unwrap_or_else(|| format!("c{}", rows.len() + 1));
                rows.push((name, terms, relation, rhs));
            }
            LpSection::Bounds => {
                if tokens.len() != 3 || tokens[1] != ">=" {
                    return Err(perr(line_no, "only `name >= value` bounds are supported"));
                }
                var_index(&mut model, tokens[0])?;
                bounds.push((tokens[0].to_string(), parse_f64(line_no, tokens[2])?));
            }
            LpSection::Header | LpSection::Done => {
                return Err(perr(line_no, format!("unexpected text `{line}`")));
            }
        }
    }
    if section != LpSection::Done {
        return Err(perr(text.lines().count(), "missing End"));
    }
    finish(model, sense, objective, rows, bounds)
}

fn finish(
    mut model: LpModel,
    sense: Sense,
    objective: Vec<(usize, f64)>,
    rows: Vec<ParsedRow>,
    bounds: Vec<(String, f64)>,
) -> Result<LpModel, LpError> {
    model.set_objective(sense, objective)?;
    for (name, terms, rel, rhs) in rows {
        model.add_constraint(name, terms, rel, rhs)?;
    }
    for (name, lower) in bounds {
        model.set_lower_bound(&name, lower)?;
    }
    Ok(model)
}

fn parse_mps(text: &str) -> Result<LpModel, LpError> {
    let mut model = LpModel::new("");
    let mut sense = Sense::Minimize;
    let mut section = String::new();
    let mut objective_row: Option<String> = None;
    let mut row_names: Vec<(String, Relation)> = Vec::new();
    let mut row_terms: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut objective = Vec::new();
    let mut bounds = Vec::new();
    let mut ended = false;
    let row_of = |names: &[(String, Relation)], line: usize, n: &str| {
        names
            .iter()
            .position(|(r, _)| r == n)
            .ok_or_else(|| perr(line, format!("unknown row `{n}`")))
    };
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') {
            section = tokens[0].to_ascii_uppercase();
            match section.as_str() {
                "NAME" => model.name = tokens[1..].join(" "),
                "OBJSENSE" if tokens.len() > 1 => sense = mps_sense(line_no, tokens[1])?,
                "ENDATA" => ended = true,
                "OBJSENSE" | "ROWS" | "COLUMNS" | "RHS" | "BOUNDS" => {}
                other => return Err(perr(line_no, format!("unsupported section `{other}`"))),
            }
            continue;
        }
        match section.as_str() {
            "OBJSENSE" => sense = mps_sense(line_no, tokens[0])?,
            "ROWS" => {
                if tokens.len() != 2 {
                    return Err(perr(line_no, "expected `type name`"));
                }
                let rel = match tokens[0] {
                    "N" => {
                        objective_row.get_or_insert_with(|| tokens[1].to_string());
                        continue;
                    }
                    "L" => Relation::Le,
                    "G" => Relation::Ge,
                    "E" => Relation::Eq,
                    t => return Err(perr(line_no, format!("unknown row type `{t}`"))),
                };
                row_names.push((tokens[1].to_string(), rel));
                row_terms.push(Vec::new());
                rhs.push(0.0);
            }
            "COLUMNS" => {
                if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
                    return Err(perr(line_no, "expected `column row value [row value]`"));
                }
                let v = var_index(&mut model, tokens[0])?;
                for pair in tokens[1..].chunks(2) {
                    let c = parse_f64(line_no, pair[1])?;
                    if objective_row.as_deref() == Some(pair[0]) {
                        objective.push((v, c));
                    } else {
                        let r = row_of(&row_names, line_no, pair[0])?;
                        row_terms[r].push((v, c));
                    }
                }
            }
            "RHS" => {
                if tokens.len() < 3 || tokens.len().is_multiple_of(2) {
                    return Err(perr(line_no, "expected `set row value [row value]`"));
                }
                for pair in tokens[1..].chunks(2) {
                    let r = row_of(&row_names, line_no, pair[0])?;
                    rhs[r] = parse_f64(line_no, pair[1])?;
                }
            }
            "BOUNDS" => {
                if tokens.len() != 4 || tokens[0] != "LO" {
                    return Err(perr(line_no, "only `LO set column value` bounds are supported"));
                }
                var_index(&mut model, tokens[2])?;
                bounds.push((tokens[2].to_string(), parse_f64(line_no, tokens[3])?));
            }
            _ => return Err(perr(line_no, "data line outside a section")),
        }
    }
    if !ended {
        return Err(perr(text.lines().count(), "missing ENDATA"));
    }
    let rows = row_names
        .into_iter()
        .zip(row_terms)
        .zip(rhs)
        .map(|(((name, rel), terms), b)| (name, terms, rel, b))
        .collect();
    finish(model, sense, objective, rows, bounds)
}

fn mps_sense(line: usize, tok: &str) -> Result<Sense, LpError> {
    match tok.to_ascii_uppercase().as_str() {
        "MAX" | "MAXIMIZE" => Ok(Sense::Maximize),
        "MIN" | "MINIMIZE" => Ok(Sense::Minimize),
        t => Err(perr(line, format!("unknown objective sense `{t}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{ChannelParams, Randomness};
    use crate::lp::{build_all_eves, build_v_eves_outer, solve, LineNetwork};

    fn sample() -> LpModel {
        let hop = ChannelParams::new(0.5, 0.5).unwrap();
        build_all_eves(&LineNetwork::uniform(3, hop, Randomness::Limited(0.1), 1).unwrap()).unwrap()
    }

    #[test]
    fn lp_round_trip() {
        let m = sample();
        let text = export(&m, ExportFormat::LpText);
        assert!(text.contains("Subject To"));
        assert_eq!(parse(&text, ExportFormat::LpText).unwrap(), m);
    }

    #[test]
    fn mps_round_trip() {
        let m = sample();
        let text = export(&m, ExportFormat::Mps);
        assert!(text.contains("OBJSENSE"));
        assert_eq!(parse(&text, ExportFormat::Mps).unwrap(), m);
    }

    #[test]
    fn outer_bound_round_trip_preserves_optimum() {
        let hop = ChannelParams::new(0.3, 0.6).unwrap();
        let m = build_v_eves_outer(&LineNetwork::uniform(4, hop, Randomness::none(), 2).unwrap()).unwrap();
        let direct = solve(&m).unwrap().objective_value;
        for f in [ExportFormat::LpText, ExportFormat::Mps] {
            let back = parse(&export(&m, f), f).unwrap();
            assert_eq!(solve(&back).unwrap().objective_value, direct);
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "Maximize\n obj: m\nSubject To\n c1: m <=\nEnd\n";
        assert!(matches!(parse(bad, ExportFormat::LpText), Err(LpError::Parse { line: 4, .. })));
        assert!(parse("NAME x\nROWS\n N obj\n", ExportFormat::Mps).is_err());
        assert_eq!("MPS".parse::<ExportFormat>(), Ok(ExportFormat::Mps));
    }
}
