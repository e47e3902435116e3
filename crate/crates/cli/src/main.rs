//! `morley`: convergence studies for the rectangular and cubic Morley elements.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use morley_core::analysis::{
    compare_to_reference, run_study, validate_study, ConvergenceReport, ReferenceTable,
    StudyOptions, Tolerances,
};
use morley_core::checks::{run_props, PropsOptions};
use morley_core::{ManufacturedSolution, SmoothField, SolveOptions, SolverMethod};

/// Largest 3D level run without --include-3d-n48.
const MAX_3D_DEFAULT: usize = 24;

#[derive(Parser)]
#[command(name = "morley", version, about = "Morley element convergence studies for the clamped biharmonic problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence study and write the error table.
    Study(StudyArgs),
    /// Run the standard studies and compare them with the reference tables.
    Verify(VerifyArgs),
    /// Check the algebraic invariants of the element and the operators.
    Props(PropsArgs),
}

#[derive(Args, Clone)]
struct NumericArgs {
    /// Gauss points per axis for the load vector.
    #[arg(long, default_value_t = 5)]
    quad_vol: usize,
    /// Gauss points per axis on edges/faces for the interpolation integrals.
    #[arg(long, default_value_t = 5)]
    quad_face: usize,
    /// Gauss points per axis for the error seminorms.
    #[arg(long, default_value_t = 6)]
    quad_err: usize,
    /// Target relative residual of the linear solve.
    #[arg(long, default_value_t = 1e-12)]
    solver_tol: f64,
    /// Linear solver: cholesky or cg. Defaults to cholesky, or cg when a 3D
    /// level above N = 24 is requested (the factorization does not fit in memory there).
    #[arg(long)]
    solver: Option<SolverMethod>,
    /// Allow 3D levels above N = 24.
    #[arg(long)]
    include_3d_n48: bool,
}

impl NumericArgs {
    fn options(&self, dim: usize, levels: &[usize]) -> Result<StudyOptions> {
        if !(self.solver_tol > 0.0 && self.solver_tol < 1.0) {
            bail!("--solver-tol must lie in (0, 1), got {}", self.solver_tol);
        }
        let large = dim == 3 && levels.iter().any(|&n| n > MAX_3D_DEFAULT);
        let method = self.solver.unwrap_or(if large {
            SolverMethod::ConjugateGradient
        } else {
            SolverMethod::Cholesky
        });
        Ok(StudyOptions {
            quad_vol: self.quad_vol,
            quad_face: self.quad_face,
            quad_err: self.quad_err,
            solver: SolveOptions {
                tol: self.solver_tol,
                method,
                ..SolveOptions::default()
            },
        })
    }
}

#[derive(Args)]
struct StudyArgs {
    /// Space dimension, 2 or 3.
    #[arg(long)]
    dim: usize,
    /// Manufactured solution: u1, u2 (2D) or u3, u4 (3D).
    #[arg(long)]
    solution: ManufacturedSolution,
    /// Comma-separated grid sizes N; defaults to 6,12,24,48 in 2D and 6,12,24 in 3D.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    #[command(flatten)]
    numeric: NumericArgs,
    /// CSV output path; a markdown table is written next to it. Prints the CSV if absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare the results with the reference tables and fail on mismatch.
    #[arg(long)]
    verify: bool,
    /// Reference table CSV used by --verify instead of the bundled one.
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Also write log10 h versus log10 error data (requires --out).
    #[arg(long)]
    emit_plot_data: bool,
    /// Add solver and interpolation diagnostics to the CSV.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Restrict to one dimension.
    #[arg(long)]
    dim: Option<usize>,
    /// Restrict to one solution.
    #[arg(long)]
    solution: Option<ManufacturedSolution>,
    /// Relative tolerance on error values.
    #[arg(long, default_value_t = 0.02)]
    rel_tol: f64,
    /// Absolute tolerance on rates.
    #[arg(long, default_value_t = 0.05)]
    rate_tol: f64,
    /// Reference table CSV instead of the bundled one.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[command(flatten)]
    numeric: NumericArgs,
}

#[derive(Args)]
struct PropsArgs {
    /// Grid size for the recovery checks.
    #[arg(long, default_value_t = 6)]
    macro_n: usize,
    /// Seed for the randomized checks.
    #[arg(long, default_value_t = PropsOptions::default().seed)]
    seed: u64,
    /// Shift one basis coefficient: FUNCTION,MONOMIAL,DELTA.
    #[arg(long, hide = true, value_parser = parse_perturbation)]
    perturb_basis: Option<(usize, usize, f64)>,
}

fn parse_perturbation(s: &str) -> std::result::Result<(usize, usize, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err("expected FUNCTION,MONOMIAL,DELTA".into());
    }
    let f = parts[0].trim().parse().map_err(|e| format!("function index: {e}"))?;
    let m = parts[1].trim().parse().map_err(|e| format!("monomial index: {e}"))?;
    let d = parts[2].trim().parse().map_err(|e| format!("delta: {e}"))?;
    Ok((f, m, d))
}

fn default_levels(dim: usize, include_48: bool) -> Vec<usize> {
    if dim == 2 || include_48 {
        vec![6, 12, 24, 48]
    } else {
        vec![6, 12, 24]
    }
}

fn check_levels(dim: usize, levels: &[usize], numeric: &NumericArgs) -> Result<()> {
    if dim == 3 && !numeric.include_3d_n48 {
        if let Some(n) = levels.iter().find(|&&n| n > MAX_3D_DEFAULT) {
            bail!("3D level N = {n} is expensive; pass --include-3d-n48 to run it");
        }
    }
    Ok(())
}

fn load_reference(path: Option<&Path>) -> Result<ReferenceTable> {
    match path {
        None => Ok(ReferenceTable::bundled()),
        Some(p) => {
            if !p.exists() {
                bail!("reference table {} does not exist", p.display());
            }
            ReferenceTable::from_path(p).with_context(|| format!("loading {}", p.display()))
        }
    }
}

fn log_levels(report: &ConvergenceReport) {
    for r in &report.records {
        eprintln!(
            "{} {}D N={}: {} free DOFs, residual {:.2e}, {:.2} s",
            report.solution,
            report.dim,
            r.n,
            r.diagnostics.free_dofs,
            r.diagnostics.solver_residual,
            r.diagnostics.seconds
        );
    }
    for (n, why) in &report.failures {
        eprintln!("{} {}D N={n}: {why}", report.solution, report.dim);
    }
}

fn study(args: StudyArgs) -> Result<bool> {
    let levels = args
        .levels
        .clone()
        .unwrap_or_else(|| default_levels(args.dim, args.numeric.include_3d_n48));
    validate_study(args.dim, args.solution, &levels)?;
    check_levels(args.dim, &levels, &args.numeric)?;
    let opts = args.numeric.options(args.dim, &levels)?;
    if args.emit_plot_data && args.out.is_none() {
        bail!("--emit-plot-data needs --out");
    }
    let reference = if args.verify {
        Some(load_reference(args.reference.as_deref())?)
    } else {
        None
    };

    let report = run_study(args.dim, args.solution, &levels, &opts)?;
    log_levels(&report);
    let csv = output::csv(&report, args.diagnostics);
    match &args.out {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
            let md = path.with_extension("md");
            fs::write(&md, output::markdown(&report))
                .with_context(|| format!("writing {}", md.display()))?;
            if args.emit_plot_data {
                let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("study");
                let plot = path.with_file_name(format!("{stem}_loglog.csv"));
                fs::write(&plot, output::loglog(&report))
                    .with_context(|| format!("writing {}", plot.display()))?;
            }
        }
        None => print!("{csv}"),
    }
    let mut ok = report.failures.is_empty();
    if let Some(table) = reference {
        let cmp = compare_to_reference(&report, &table, Tolerances::default());
        eprint!("{}", output::verdicts(&report, &cmp));
        ok &= cmp.passed();
    }
    Ok(ok)
}

fn verify(args: VerifyArgs) -> Result<bool> {
    let table = load_reference(args.reference.as_deref())?;
    let tol = Tolerances {
        rel: args.rel_tol,
        rate: args.rate_tol,
    };
    let runs: Vec<ManufacturedSolution> = ManufacturedSolution::ALL
        .into_iter()
        .filter(|u| args.dim.is_none_or(|d| d == u.dim()))
        .filter(|u| args.solution.is_none_or(|s| s == *u))
        .collect();
    if runs.is_empty() {
        bail!("no manufactured solution matches the requested dimension and solution");
    }
    let mut ok = true;
    for u in runs {
        let levels = default_levels(u.dim(), args.numeric.include_3d_n48);
        let opts = args.numeric.options(u.dim(), &levels)?;
        let report = run_study(u.dim(), u, &levels, &opts)?;
        log_levels(&report);
        let cmp = compare_to_reference(&report, &table, tol);
        print!("{}", output::verdicts(&report, &cmp));
        ok &= cmp.passed() && report.failures.is_empty();
    }
    Ok(ok)
}

fn props(args: PropsArgs) -> Result<bool> {
    let opts = PropsOptions {
        perturb_basis: args.perturb_basis,
        macro_n: args.macro_n,
        seed: args.seed,
    };
    let results = run_props(&opts);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        println!("all {} checks passed", results.len());
    } else {
        println!("{} of {} checks failed: {}", failed.len(), results.len(), failed.join(", "));
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Study(a) => study(a),
        Command::Verify(a) => verify(a),
        Command::Props(a) => props(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
