//! Text exports.
//!
//! LP follows the CPLEX LP dialect: `Minimize`, `Subject To`, `Bounds`,
//! `Binaries`, `Generals`, `End`, with `\` comment lines. MPS follows the
//! fixed-column layout (fields at columns 2, 5, 15, 25, 40, 50). Fixed MPS
//! allows only 8-character names, so rows and columns are written as
//! `R0000001` / `C0000001` in model order, with the model names listed in
//! `*` comment lines ahead of `NAME`. Both outputs depend only on the model.

use std::fmt::Write;

use super::{MilpModel, RowSense, VarKind};
use crate::rational::Rational;

fn num(r: Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        r.to_exact_decimal().unwrap_or_else(|| r.to_decimal_lossy())
    }
}

fn lp_terms(out: &mut String, model: &MilpModel, terms: &[(usize, Rational)]) {
    if terms.is_empty() {
        let _ = write!(out, " 0 {}", model.variables.first().map_or("x", |v| v.name.as_str()));
        return;
    }
    for (n, &(v, a)) in terms.iter().enumerate() {
        if n > 0 && n % 6 == 0 {
            out.push_str("\n   ");
        }
        let sign = if a.is_negative() { '-' } else { '+' };
        let _ = write!(out, " {sign} {} {}", num(a.abs()), model.variables[v].name);
    }
}

pub fn export_lp(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "\\ nba milp, objective scale {}", num(model.objective_scale));
    out.push_str("Minimize\n obj:");
    if !model.objective.is_empty() {
        lp_terms(&mut out, model, &model.objective);
    }
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        lp_terms(&mut out, model, &c.terms);
        let op = match c.sense {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in model.variables.iter().filter(|v| v.kind != VarKind::Binary) {
        match v.upper {
            Some(u) => {
                let _ = writeln!(out, " {} <= {} <= {}", num(v.lower), v.name, num(u));
            }
            None => {
                let _ = writeln!(out, " {} >= {}", v.name, num(v.lower));
            }
        }
    }
    for (section, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        let _ = writeln!(out, "{section}");
        for v in model.variables.iter().filter(|v| v.kind == kind) {
            let _ = writeln!(out, " {}", v.name);
        }
    }
    out.push_str("End\n");
    out
}

fn card(out: &mut String, f: [&str; 6]) {
    let line = format!(
        " {:2} {:8}  {:8}  {:>12}   {:8}  {:>12}",
        f[0], f[1], f[2], f[3], f[4], f[5]
    );
    out.push_str(line.trim_end());
    out.push('\n');
}

pub fn row_label(index: usize) -> String {
    format!("R{:07}", index + 1)
}

pub fn column_label(index: usize) -> String {
    format!("C{:07}", index + 1)
}

pub fn export_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "* nba milp, objective scale {}", num(model.objective_scale));
    for (i, c) in model.constraints.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", row_label(i), c.name);
    }
    for (i, v) in model.variables.iter().enumerate() {
        let _ = writeln!(out, "* {} {}", column_label(i), v.name);
    }
    out.push_str("NAME          NBA\nROWS\n");
    card(&mut out, ["N", "OBJ", "", "", "", ""]);
    for (i, c) in model.constraints.iter().enumerate() {
        let sense = match c.sense {
            RowSense::Le => "L",
            RowSense::Ge => "G",
            RowSense::Eq => "E",
        };
        card(&mut out, [sense, &row_label(i), "", "", "", ""]);
    }

    // Column-major entries.
    let mut entries: Vec<Vec<(String, Rational)>> = vec![Vec::new(); model.variables.len()];
    for &(v, a) in &model.objective {
        entries[v].push(("OBJ".into(), a));
    }
    for (r, c) in model.constraints.iter().enumerate() {
        for &(v, a) in &c.terms {
            entries[v].push((row_label(r), a));
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_marker = false;
    let mut markers = 0;
    for (v, var) in model.variables.iter().enumerate() {
        let integral = var.kind != VarKind::Continuous;
        if integral != in_marker {
            let tag = if integral { "'INTORG'" } else { "'INTEND'" };
            card(&mut out, ["", &format!("M{markers:07}"), "'MARKER'", "", tag, ""]);
            markers += 1;
            in_marker = integral;
        }
        let col = column_label(v);
        let list = if entries[v].is_empty() {
            vec![("OBJ".to_string(), Rational::ZERO)]
        } else {
            entries[v].clone()
        };
        for pair in list.chunks(2) {
            let (r1, a1) = &pair[0];
            let (r2, a2) = pair.get(1).map_or((String::new(), String::new()), |(r, a)| (r.clone(), num(*a)));
            card(&mut out, ["", &col, r1, &num(*a1), &r2, &a2]);
        }
    }
    if in_marker {
        card(&mut out, ["", &format!("M{markers:07}"), "'MARKER'", "", "'INTEND'", ""]);
    }
    out.push_str("RHS\n");
    let rhs: Vec<(String, Rational)> = model
        .constraints
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.rhs.is_zero())
        .map(|(r, c)| (row_label(r), c.rhs))
        .collect();
    for pair in rhs.chunks(2) {
        let (r1, a1) = &pair[0];
        let (r2, a2) = pair.get(1).map_or((String::new(), String::new()), |(r, a)| (r.clone(), num(*a)));
        card(&mut out, ["", "RHS", r1, &num(*a1), &r2, &a2]);
    }
    out.push_str("BOUNDS\n");
    for (v, var) in model.variables.iter().enumerate() {
        let col = column_label(v);
        if !var.lower.is_zero() {
            card(&mut out, ["LO", "BND", &col, &num(var.lower), "", ""]);
        }
        if let Some(u) = var.upper {
            card(&mut out, ["UP", "BND", &col, &num(u), "", ""]);
        }
    }
    out.push_str("ENDATA\n");
    out
}
