use std::fmt::Write;

use super::{MilpModel, Sense, VarKind};

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn sanitize(name: &str, fallback: &str) -> String {
    let mut s: String = name
        .chars()
        .map(|c| match c {
            '[' => '(',
            ']' => ')',
            c if c.is_ascii_alphanumeric() || "_.(),;".contains(c) => c,
            _ => '_',
        })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        s.insert_str(0, fallback);
    }
    s
}

/// Renders the model in CPLEX LP format. Coefficients are printed with 17
/// significant digits so the file round-trips exactly.
pub fn write_lp(model: &MilpModel) -> String {
    let names: Vec<String> =
        model.vars().iter().enumerate().map(|(i, v)| sanitize(&v.name, &format!("v{i}_"))).collect();
    let mut out = String::new();
    out.push_str("\\ searchplan model\nMinimize\n obj:");
    for (i, &c) in model.cost().iter().enumerate() {
        if c != 0.0 {
            let _ = write!(out, " + {} {}", num(c), names[i]);
        }
    }
    if model.offset() != 0.0 {
        let _ = write!(out, " + {}", num(model.offset()));
    }
    out.push_str("\nSubject To\n");
    for (k, r) in model.rows().iter().enumerate() {
        let _ = write!(out, " {}:", sanitize(&r.name, &format!("r{k}_")));
        if r.terms.is_empty() {
            let _ = write!(out, " 0 {}", names.first().map_or("v0", |s| s.as_str()));
        }
        for &(v, a) in &r.terms {
            let _ = write!(out, " + {} {}", num(a), names[v.0]);
        }
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(r.rhs));
    }
    out.push_str("Bounds\n");
    for (i, v) in model.vars().iter().enumerate() {
        let lo = if v.lower == f64::NEG_INFINITY { "-inf".to_string() } else { num(v.lower) };
        let hi = if v.upper == f64::INFINITY { "+inf".to_string() } else { num(v.upper) };
        let _ = writeln!(out, " {lo} <= {} <= {hi}", names[i]);
    }
    let generals: Vec<&str> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Integer)
        .map(|(_, n)| n.as_str())
        .collect();
    if !generals.is_empty() {
        out.push_str("General\n");
        for n in generals {
            let _ = writeln!(out, " {n}");
        }
    }
    let binaries: Vec<&str> = model
        .vars()
        .iter()
        .zip(&names)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for n in binaries {
            let _ = writeln!(out, " {n}");
        }
    }
    out.push_str("End\n");
    out
}
