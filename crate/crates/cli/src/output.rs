//! CSV, markdown and log-log renderings of a convergence report.

use std::fmt::Write as _;

use morley_core::analysis::{Comparison, ConvergenceReport, Quantity};

/// Error columns in output order.
const COLUMNS: [Quantity; 5] = [
    Quantity::Err1,
    Quantity::Err2,
    Quantity::Corrected,
    Quantity::PostInterp,
    Quantity::PostSolution,
];

fn column_name(q: Quantity, dim: usize) -> String {
    let base = q.label(dim).to_ascii_lowercase();
    match q {
        Quantity::PostInterp => format!("{base}_interp"),
        Quantity::PostSolution => format!("{base}_solution"),
        _ => base,
    }
}

fn rate_name(q: Quantity, dim: usize) -> String {
    column_name(q, dim).replacen("err", "r", 1)
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv(report: &ConvergenceReport, diagnostics: bool) -> String {
    let dim = report.dim;
    let mut header = vec!["n".to_string(), "h".to_string()];
    for q in COLUMNS {
        header.push(column_name(q, dim));
        header.push(rate_name(q, dim));
    }
    if diagnostics {
        header.extend(
            [
                "interp_error",
                "free_dofs",
                "solver_residual",
                "solver_backward_error",
                "correction_mismatch",
                "boundedness_ratio",
            ]
            .map(String::from),
        );
    }
    let mut out = header.join(",");
    out.push('\n');
    for (i, r) in report.records.iter().enumerate() {
        let mut row = vec![r.n.to_string(), num(r.h)];
        for q in COLUMNS {
            row.push(num(r.get(q)));
            row.push(report.rate(i, q).map(num).unwrap_or_default());
        }
        if diagnostics {
            let d = &r.diagnostics;
            row.push(num(r.interp_error));
            row.push(d.free_dofs.to_string());
            row.push(num(d.solver_residual));
            row.push(num(d.solver_backward_error));
            row.push(num(d.correction_mismatch));
            row.push(num(d.boundedness_ratio));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Errors as rows, levels as columns, each error followed by its rates.
pub fn markdown(report: &ConvergenceReport) -> String {
    let dim = report.dim;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Broken H2 errors, {dim}D, {}\n",
        report.solution
    );
    let _ = write!(out, "| N |");
    for r in &report.records {
        let _ = write!(out, " {} |", r.n);
    }
    out.push('\n');
    out.push_str("|---|");
    for _ in &report.records {
        out.push_str("---|");
    }
    out.push('\n');
    for q in COLUMNS {
        let label = match q {
            Quantity::PostInterp => format!("{} (Π*_h u vertices)", q.label(dim)),
            Quantity::PostSolution => format!("{} (u_h vertices)", q.label(dim)),
            _ => q.label(dim).to_string(),
        };
        let _ = write!(out, "| {label} |");
        for r in &report.records {
            let _ = write!(out, " {:.9} |", r.get(q));
        }
        out.push('\n');
        out.push_str("| r |");
        for i in 0..report.records.len() {
            match report.rate(i, q) {
                Some(v) => {
                    let _ = write!(out, " {v:.9} |");
                }
                None => out.push_str(" --- |"),
            }
        }
        out.push('\n');
    }
    if !report.failures.is_empty() {
        out.push('\n');
        for (n, why) in &report.failures {
            let _ = writeln!(out, "N = {n} failed: {why}");
        }
    }
    out
}

/// `log10 h` against `log10` of every error column.
pub fn loglog(report: &ConvergenceReport) -> String {
    let dim = report.dim;
    let mut out = String::from("n,log10_h");
    for q in COLUMNS {
        let _ = write!(out, ",log10_{}", column_name(q, dim));
    }
    out.push('\n');
    for r in &report.records {
        let _ = write!(out, "{},{}", r.n, num(r.h.log10()));
        for q in COLUMNS {
            let _ = write!(out, ",{}", num(r.get(q).log10()));
        }
        out.push('\n');
    }
    out
}

/// One line per reference entry, then a summary line.
pub fn verdicts(report: &ConvergenceReport, cmp: &Comparison) -> String {
    let mut out = String::new();
    for c in &cmp.checks {
        let what = if c.is_rate { "rate" } else { "value" };
        let computed = c.computed.map(|v| format!("{v:.9e}")).unwrap_or_else(|| "-".into());
        let dev = c.deviation.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{} {} {} N={} {what}: computed {computed} reference {:.9e} deviation {dev}",
            c.verdict, report.solution, c.quantity, c.n, c.reference
        );
    }
    let failed = cmp.failures().count();
    let _ = writeln!(
        out,
        "{} {}D: {} checks, {failed} failed; postprocessed column matched with {} vertex values",
        report.solution,
        report.dim,
        cmp.checks.len(),
        cmp.post_variant
    );
    out
}
