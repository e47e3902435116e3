//! Broken H² errors, convergence studies and comparison with reference tables.

use std::fmt;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::element::{local_stiffness, reference_basis, QuadRule};
use crate::error::{Error, Result};
use crate::fields::{
    canonical_interpolate, corrected_from_canonical, correction_dof_mismatch, field_to_piecewise,
    ManufacturedSolution, PiecewisePoly, SmoothField,
};
use crate::mesh::{build_dof_map, build_uniform_mesh, macro_partition, GridSpec, StructuredMesh};
use crate::postprocess::{postprocess, vertex_values_of, VertexSource};
use crate::system::{assemble_load, assemble_stiffness, solve_spd, SolveOptions};

/// One side of a broken-seminorm difference.
#[derive(Clone, Copy)]
pub enum Operand<'a> {
    Exact(&'a dyn SmoothField),
    Piecewise(&'a PiecewisePoly),
    Zero,
}

impl Operand<'_> {
    fn check(&self, mesh: &StructuredMesh) -> Result<()> {
        match self {
            Operand::Exact(u) if u.dim() != mesh.dim() => Err(Error::Operand(format!(
                "{}D field on a {}D mesh",
                u.dim(),
                mesh.dim()
            ))),
            Operand::Piecewise(p) => p.check_mesh(mesh),
            _ => Ok(()),
        }
    }
}

/// `|a - b|_h`: square root of the cell-wise sum of `∫_K |D²(a - b)|²`, using
/// the full Frobenius product of Hessians.
pub fn broken_h2_error(
    a: Operand<'_>,
    b: Operand<'_>,
    mesh: &StructuredMesh,
    quad: &QuadRule,
) -> Result<f64> {
    Ok(broken_h2_errors(&[a, b], &[(0, 1)], mesh, quad)?[0])
}

/// Hessian entries `(i, j)`, `i ≤ j`, and their multiplicity in the
/// Frobenius product.
fn hessian_components(dim: usize) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            out.push((i, j, if i == j { 1.0 } else { 2.0 }));
        }
    }
    out
}

/// Several seminorms `|operands[p] - operands[q]|_h` in one sweep; each
/// operand's Hessian is evaluated once per quadrature point.
pub fn broken_h2_errors(
    operands: &[Operand<'_>],
    pairs: &[(usize, usize)],
    mesh: &StructuredMesh,
    quad: &QuadRule,
) -> Result<Vec<f64>> {
    for op in operands {
        op.check(mesh)?;
    }
    if quad.dim() != mesh.dim() {
        return Err(Error::Operand(format!(
            "{}D quadrature on a {}D mesh",
            quad.dim(),
            mesh.dim()
        )));
    }
    if let Some(&(p, q)) = pairs
        .iter()
        .find(|&&(p, q)| p >= operands.len() || q >= operands.len())
    {
        return Err(Error::Operand(format!("no operand for pair ({p}, {q})")));
    }
    let dim = mesh.dim();
    let comps = hessian_components(dim);
    let nc = comps.len();
    let npts = quad.len();
    let vol = mesh.half().powi(dim as i32);
    let inv_h2 = 1.0 / (mesh.half() * mesh.half());

    // Reference second derivatives of every monomial at every point, per
    // piecewise operand: tables[op][(pt * terms + m) * nc + c].
    let tables: Vec<Option<Vec<f64>>> = operands
        .iter()
        .map(|op| match op {
            Operand::Piecewise(p) => {
                let m = p.monomials();
                let mut t = Vec::with_capacity(npts * m.len() * nc);
                let mut unit = vec![0.0; m.len()];
                for pt in quad.points() {
                    for j in 0..m.len() {
                        unit[j] = 1.0;
                        let h = m.hessian(&unit, pt);
                        unit[j] = 0.0;
                        t.extend(comps.iter().map(|&(a, b, _)| h[a][b] * inv_h2));
                    }
                }
                Some(t)
            }
            _ => None,
        })
        .collect();

    let per_cell: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let values: Vec<Vec<f64>> = operands
                .iter()
                .zip(&tables)
                .map(|(op, table)| cell_hessians(op, table.as_deref(), mesh, cell, quad, &comps))
                .collect();
            pairs
                .iter()
                .map(|&(p, q)| {
                    let (a, b) = (&values[p], &values[q]);
                    let mut acc = 0.0;
                    for (g, w) in quad.weights().iter().enumerate() {
                        let mut s = 0.0;
                        for (c, &(_, _, mult)) in comps.iter().enumerate() {
                            let d = a[g * nc + c] - b[g * nc + c];
                            s += mult * d * d;
                        }
                        acc += w * s;
                    }
                    acc * vol
                })
                .collect()
        })
        .collect();
    Ok((0..pairs.len())
        .map(|k| per_cell.iter().map(|c| c[k]).sum::<f64>().sqrt())
        .collect())
}

/// Physical Hessian components of one operand at every quadrature point of a cell.
fn cell_hessians(
    op: &Operand<'_>,
    table: Option<&[f64]>,
    mesh: &StructuredMesh,
    cell: usize,
    quad: &QuadRule,
    comps: &[(usize, usize, f64)],
) -> Vec<f64> {
    let nc = comps.len();
    let mut out = vec![0.0; quad.len() * nc];
    match op {
        Operand::Zero => {}
        Operand::Piecewise(p) => {
            let coeffs = p.cell(cell);
            let table = table.expect("table built for every piecewise operand");
            let terms = coeffs.len();
            for (g, o) in out.chunks_mut(nc).enumerate() {
                let rows = &table[g * terms * nc..(g + 1) * terms * nc];
                for (c, row) in coeffs.iter().zip(rows.chunks(nc)) {
                    for (oc, r) in o.iter_mut().zip(row) {
                        *oc += c * r;
                    }
                }
            }
        }
        Operand::Exact(u) => {
            for (pt, o) in quad.points().iter().zip(out.chunks_mut(nc)) {
                let x = mesh.map_to_physical(cell, pt);
                for (oc, &(i, j, _)) in o.iter_mut().zip(comps) {
                    let mut alpha = [0u8; 3];
                    alpha[i] += 1;
                    alpha[j] += 1;
                    *oc = u.derivative(&x, alpha);
                }
            }
        }
    }
    out
}

/// Errors of one refinement level.
///
/// In 3D `err_corrected` and the two `err4_*` fields hold Err5 and Err6.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub n: usize,
    /// Cell side `1/N`.
    pub h: f64,
    /// `|u - u_h|_h`
    pub err1: f64,
    /// `|Π_h u - u_h|_h`
    pub err2: f64,
    /// `|Π*_h u - u_h|_h`
    pub err_corrected: f64,
    /// `|u - Π³_3h Π*_h u|_h`
    pub err4_interp: f64,
    /// `|u - Π³_3h u_h|_h`
    pub err4_solution: f64,
    /// `|u - Π_h u|_h`
    pub interp_error: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub free_dofs: usize,
    pub solver_iterations: usize,
    pub solver_residual: f64,
    pub solver_backward_error: f64,
    /// Largest inter-cell gap of the facet DOFs of `R_h u`.
    pub correction_mismatch: f64,
    /// `|Π³_3h u_h|_h / |u_h|_h`.
    pub boundedness_ratio: f64,
    pub seconds: f64,
}

impl ErrorRecord {
    pub fn get(&self, q: Quantity) -> f64 {
        match q {
            Quantity::Err1 => self.err1,
            Quantity::Err2 => self.err2,
            Quantity::Corrected => self.err_corrected,
            Quantity::PostInterp => self.err4_interp,
            Quantity::PostSolution => self.err4_solution,
        }
    }
}

/// The reported error columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantity {
    Err1,
    Err2,
    /// Err3 (2D) / Err5 (3D).
    Corrected,
    /// Err4 / Err6 from the vertex values of `Π*_h u`.
    PostInterp,
    /// Err4 / Err6 from the vertex values of `u_h`.
    PostSolution,
}

impl Quantity {
    pub const ALL: [Quantity; 5] = [
        Self::Err1,
        Self::Err2,
        Self::Corrected,
        Self::PostInterp,
        Self::PostSolution,
    ];

    /// Column label used by the tables of the given dimension.
    pub fn label(self, dim: usize) -> &'static str {
        match (self, dim) {
            (Self::Err1, _) => "Err1",
            (Self::Err2, _) => "Err2",
            (Self::Corrected, 2) => "Err3",
            (Self::Corrected, _) => "Err5",
            (Self::PostInterp | Self::PostSolution, 2) => "Err4",
            (Self::PostInterp | Self::PostSolution, _) => "Err6",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub dim: usize,
    pub solution: ManufacturedSolution,
    pub records: Vec<ErrorRecord>,
    /// Levels that failed, with the reason.
    pub failures: Vec<(usize, String)>,
}

impl ConvergenceReport {
    /// `log2(e_{i-1} / e_i)` when level `i` doubles level `i - 1`.
    pub fn rate(&self, i: usize, q: Quantity) -> Option<f64> {
        if i == 0 || i >= self.records.len() {
            return None;
        }
        let (c, f) = (&self.records[i - 1], &self.records[i]);
        if f.n != 2 * c.n {
            return None;
        }
        Some((c.get(q) / f.get(q)).log2())
    }

    pub fn record(&self, n: usize) -> Option<&ErrorRecord> {
        self.records.iter().find(|r| r.n == n)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct StudyOptions {
    /// Gauss points per axis for the load vector.
    pub quad_vol: usize,
    /// Gauss points per axis on edges/faces for the interpolation integrals.
    pub quad_face: usize,
    /// Gauss points per axis for the error seminorms.
    pub quad_err: usize,
    pub solver: SolveOptions,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            quad_vol: 5,
            quad_face: 5,
            quad_err: 6,
            solver: SolveOptions::default(),
        }
    }
}

/// Rejects inconsistent study requests before any computation.
pub fn validate_study(dim: usize, solution: ManufacturedSolution, levels: &[usize]) -> Result<()> {
    if dim != 2 && dim != 3 {
        return Err(Error::Dimension(dim));
    }
    if solution.dim() != dim {
        return Err(Error::InvalidStudy(format!(
            "solution {solution} is {}D but --dim is {dim}",
            solution.dim()
        )));
    }
    if levels.is_empty() {
        return Err(Error::InvalidStudy("no refinement levels given".into()));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidStudy(format!(
            "levels must be strictly increasing, got {levels:?}"
        )));
    }
    if let Some(&n) = levels.iter().find(|&&n| n == 0 || n % 3 != 0) {
        return Err(Error::MacroDivisibility(n));
    }
    Ok(())
}

/// Solves and measures every error quantity on each level.
pub fn run_study(
    dim: usize,
    solution: ManufacturedSolution,
    levels: &[usize],
    opts: &StudyOptions,
) -> Result<ConvergenceReport> {
    validate_study(dim, solution, levels)?;
    QuadRule::new(dim, opts.quad_vol)?;
    QuadRule::new(dim, opts.quad_err)?;
    QuadRule::new(dim - 1, opts.quad_face)?;
    let mut report = ConvergenceReport {
        dim,
        solution,
        records: Vec::new(),
        failures: Vec::new(),
    };
    for &n in levels {
        match run_level(dim, solution, n, opts) {
            Ok(r) => report.records.push(r),
            Err(e) => report.failures.push((n, e.to_string())),
        }
    }
    Ok(report)
}

/// The full pipeline on one mesh.
pub fn run_level(
    dim: usize,
    u: ManufacturedSolution,
    n: usize,
    opts: &StudyOptions,
) -> Result<ErrorRecord> {
    let start = Instant::now();
    let mesh = build_uniform_mesh(GridSpec::unit(dim, n))?;
    let dofmap = build_dof_map(&mesh);
    let grid = macro_partition(&mesh)?;
    let basis = reference_basis(dim)?;
    let vol_rule = QuadRule::new(dim, opts.quad_vol)?;
    let err_rule = QuadRule::new(dim, opts.quad_err)?;

    let local = local_stiffness(&basis, mesh.half());
    let a = assemble_stiffness(&mesh, &dofmap, &local);
    let b = assemble_load(&mesh, &dofmap, &basis, |x| u.rhs(x), &vol_rule);
    let (uh, stats) = solve_spd(&a, &b, &dofmap, &opts.solver)?;

    let pi = canonical_interpolate(&mesh, &dofmap, &u, opts.quad_face)?;
    let corrected = corrected_from_canonical(&mesh, &dofmap, &basis, &u, &pi, opts.quad_face)?;
    let uh_pw = field_to_piecewise(&mesh, &dofmap, &basis, &uh);
    let pi_pw = field_to_piecewise(&mesh, &dofmap, &basis, &pi);

    let post_interp = postprocess(
        &mesh,
        &grid,
        &vertex_values_of(VertexSource::Corrected(&corrected), &mesh)?,
    )?;
    let post_solution = postprocess(
        &mesh,
        &grid,
        &vertex_values_of(VertexSource::Field(&dofmap, &uh), &mesh)?,
    )?;

    // Operands: 0 u, 1 u_h, 2 Π_h u, 3 Π*_h u, 4 Π³ Π*_h u, 5 Π³ u_h, 6 zero.
    let operands = [
        Operand::Exact(&u),
        Operand::Piecewise(&uh_pw),
        Operand::Piecewise(&pi_pw),
        Operand::Piecewise(&corrected.pieces),
        Operand::Piecewise(&post_interp),
        Operand::Piecewise(&post_solution),
        Operand::Zero,
    ];
    let pairs = [(0, 1), (2, 1), (3, 1), (0, 4), (0, 5), (0, 2), (1, 6), (5, 6)];
    let e = broken_h2_errors(&operands, &pairs, &mesh, &err_rule)?;
    let (uh_norm, post_norm) = (e[6], e[7]);

    Ok(ErrorRecord {
        n,
        h: mesh.side(),
        err1: e[0],
        err2: e[1],
        err_corrected: e[2],
        err4_interp: e[3],
        err4_solution: e[4],
        interp_error: e[5],
        diagnostics: Diagnostics {
            free_dofs: dofmap.num_free(),
            solver_iterations: stats.iterations,
            solver_residual: stats.residual,
            solver_backward_error: stats.backward_error,
            correction_mismatch: correction_dof_mismatch(&mesh, &basis, &corrected.coeffs),
            boundedness_ratio: if uh_norm > 0.0 { post_norm / uh_norm } else { 0.0 },
            seconds: start.elapsed().as_secs_f64(),
        },
    })
}

/// One row of a published error table.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEntry {
    pub dim: usize,
    pub solution: ManufacturedSolution,
    /// Table label, `Err1` .. `Err6`.
    pub quantity: String,
    pub n: usize,
    pub value: f64,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTable {
    entries: Vec<ReferenceEntry>,
}

const BUNDLED_REFERENCE: &str = include_str!("../data/reference_tables.csv");

impl ReferenceTable {
    /// The tables shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_REFERENCE).expect("bundled reference data is well formed")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Reference(format!("cannot read {}: {e}", path.display()))
        })?;
        Self::parse(&text)
    }

    /// Parses `dim,solution,quantity,n,value,rate` lines after a header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate().skip(1) {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Reference(format!("line {}: {what}", i + 1));
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 6 {
                return Err(bad("expected 6 columns"));
            }
            entries.push(ReferenceEntry {
                dim: cols[0].parse().map_err(|_| bad("bad dim"))?,
                solution: cols[1].parse()?,
                quantity: cols[2].to_string(),
                n: cols[3].parse().map_err(|_| bad("bad n"))?,
                value: cols[4].parse().map_err(|_| bad("bad value"))?,
                rate: match cols[5] {
                    "" => None,
                    r => Some(r.parse().map_err(|_| bad("bad rate"))?),
                },
            });
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[ReferenceEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [ReferenceEntry] {
        &mut self.entries
    }

    pub fn lookup(
        &self,
        solution: ManufacturedSolution,
        quantity: &str,
        n: usize,
    ) -> Option<&ReferenceEntry> {
        self.entries
            .iter()
            .find(|e| e.solution == solution && e.quantity == quantity && e.n == n)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Relative tolerance on error values.
    pub rel: f64,
    /// Absolute tolerance on rates.
    pub rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 0.02,
            rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// Not computed in this report.
    Skipped,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Skipped => "SKIP",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntryCheck {
    pub quantity: String,
    pub n: usize,
    pub is_rate: bool,
    pub reference: f64,
    pub computed: Option<f64>,
    /// Relative deviation for values, absolute for rates.
    pub deviation: Option<f64>,
    pub verdict: Verdict,
}

/// Which vertex data fed the postprocessed column that matched best.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostVariant {
    Interpolant,
    Solution,
}

impl fmt::Display for PostVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PostVariant::Interpolant => "interp",
            PostVariant::Solution => "solution",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub checks: Vec<EntryCheck>,
    pub post_variant: PostVariant,
}

impl Comparison {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &EntryCheck> {
        self.checks.iter().filter(|c| c.verdict == Verdict::Fail)
    }
}

/// Checks every reference entry of the report's solution.
///
/// The postprocessed column is judged under whichever vertex source deviates
/// least from the table over the computed levels.
pub fn compare_to_reference(
    report: &ConvergenceReport,
    table: &ReferenceTable,
    tol: Tolerances,
) -> Comparison {
    let dim = report.dim;
    let post_label = Quantity::PostInterp.label(dim);
    let worst = |q: Quantity| {
        table
            .entries()
            .iter()
            .filter(|e| e.solution == report.solution && e.quantity == post_label)
            .filter_map(|e| report.record(e.n).map(|r| rel_dev(r.get(q), e.value)))
            .fold(0.0, f64::max)
    };
    let post_variant = if worst(Quantity::PostSolution) < worst(Quantity::PostInterp) {
        PostVariant::Solution
    } else {
        PostVariant::Interpolant
    };
    let post_q = match post_variant {
        PostVariant::Interpolant => Quantity::PostInterp,
        PostVariant::Solution => Quantity::PostSolution,
    };
    let quantity_of = |label: &str| {
        [Quantity::Err1, Quantity::Err2, Quantity::Corrected, post_q]
            .into_iter()
            .find(|q| q.label(dim) == label)
    };

    let mut checks = Vec::new();
    for e in table.entries().iter().filter(|e| e.solution == report.solution) {
        let q = quantity_of(&e.quantity);
        let idx = report.records.iter().position(|r| r.n == e.n);
        let value = q.zip(idx).map(|(q, i)| report.records[i].get(q));
        checks.push(judge(e, false, e.value, value, tol.rel));
        if let Some(rate) = e.rate {
            let computed = q.zip(idx).and_then(|(q, i)| report.rate(i, q));
            checks.push(judge(e, true, rate, computed, tol.rate));
        }
    }
    Comparison {
        checks,
        post_variant,
    }
}

fn rel_dev(computed: f64, reference: f64) -> f64 {
    ((computed - reference) / reference).abs()
}

fn judge(e: &ReferenceEntry, is_rate: bool, reference: f64, computed: Option<f64>, tol: f64) -> EntryCheck {
    let deviation = computed.map(|c| {
        if is_rate {
            (c - reference).abs()
        } else {
            rel_dev(c, reference)
        }
    });
    let verdict = match deviation {
        None => Verdict::Skipped,
        Some(d) if d <= tol => Verdict::Pass,
        Some(_) => Verdict::Fail,
    };
    EntryCheck {
        quantity: e.quantity.clone(),
        n: e.n,
        is_rate,
        reference,
        computed,
        deviation,
        verdict,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_record(n: usize, scale: f64) -> ErrorRecord {
        ErrorRecord {
            n,
            h: 1.0 / n as f64,
            err1: scale,
            err2: scale,
            err_corrected: scale * scale,
            err4_interp: scale * scale,
            err4_solution: 10.0 * scale,
            interp_error: scale,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn rates_need_doubling() {
        let report = ConvergenceReport {
            dim: 2,
            solution: ManufacturedSolution::U1,
            records: vec![fake_record(6, 1.0), fake_record(12, 0.5), fake_record(18, 0.25)],
            failures: vec![],
        };
        assert_eq!(report.rate(0, Quantity::Err1), None);
        assert!((report.rate(1, Quantity::Err1).unwrap() - 1.0).abs() < 1e-15);
        assert!((report.rate(1, Quantity::Corrected).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(report.rate(2, Quantity::Err1), None);
    }

    #[test]
    fn bundled_table_is_complete() {
        let t = ReferenceTable::bundled();
        assert_eq!(t.entries().len(), 64);
        let e = t.lookup(ManufacturedSolution::U1, "Err2", 24).unwrap();
        assert_eq!(e.value, 0.526008399);
        assert_eq!(t.lookup(ManufacturedSolution::U4, "Err5", 6).unwrap().rate, None);
        assert!(t.lookup(ManufacturedSolution::U3, "Err3", 6).is_none());
    }

    #[test]
    fn exact_match_passes_and_corruption_fails() {
        let t = ReferenceTable::bundled();
        let mut records = Vec::new();
        for n in [6, 12, 24, 48] {
            let get = |q: &str| t.lookup(ManufacturedSolution::U2, q, n).unwrap().value;
            let mut r = fake_record(n, 0.0);
            r.err1 = get("Err1");
            r.err2 = get("Err2");
            r.err_corrected = get("Err3");
            r.err4_interp = get("Err4");
            r.err4_solution = 2.0 * get("Err4");
            records.push(r);
        }
        let mut report = ConvergenceReport {
            dim: 2,
            solution: ManufacturedSolution::U2,
            records,
            failures: vec![],
        };
        let cmp = compare_to_reference(&report, &t, Tolerances::default());
        assert!(cmp.passed());
        assert_eq!(cmp.post_variant, PostVariant::Interpolant);
        assert_eq!(cmp.checks.len(), 4 * 4 + 4 * 3);

        report.records[2].err2 *= 1.05;
        let cmp = compare_to_reference(&report, &t, Tolerances::default());
        let failed: Vec<_> = cmp.failures().map(|c| (c.quantity.as_str(), c.n, c.is_rate)).collect();
        assert!(failed.contains(&("Err2", 24, false)));
    }

    #[test]
    fn missing_levels_are_skipped() {
        let report = ConvergenceReport {
            dim: 3,
            solution: ManufacturedSolution::U3,
            records: vec![fake_record(6, 1.0)],
            failures: vec![],
        };
        let cmp = compare_to_reference(&report, &ReferenceTable::bundled(), Tolerances::default());
        assert!(cmp.checks.iter().any(|c| c.n == 48 && c.verdict == Verdict::Skipped));
    }

    #[test]
    fn validation() {
        use ManufacturedSolution::*;
        assert!(validate_study(2, U1, &[6, 12]).is_ok());
        assert!(matches!(validate_study(3, U3, &[5]), Err(Error::MacroDivisibility(5))));
        assert!(validate_study(3, U1, &[6]).is_err());
        assert!(validate_study(2, U1, &[12, 6]).is_err());
        assert!(validate_study(2, U1, &[]).is_err());
    }

    #[test]
    fn same_operand_has_zero_error() {
        let mesh = build_uniform_mesh(GridSpec::unit(2, 3)).unwrap();
        let q = QuadRule::new(2, 6).unwrap();
        let u = ManufacturedSolution::U1;
        let e = broken_h2_error(Operand::Exact(&u), Operand::Exact(&u), &mesh, &q).unwrap();
        assert_eq!(e, 0.0);
    }
}
