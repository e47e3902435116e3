//! Global assembly, boundary elimination and the SPD solve.

use rayon::prelude::*;

use crate::element::{dof_scaling, LocalStiffness, NodalBasis, QuadRule};
use crate::error::{Error, Result};
use crate::mesh::{DofMap, StructuredMesh};

/// A full vector of global DOF values: vertex values followed by mean
/// `+x_a` derivatives on each edge/face.
#[derive(Debug, Clone, PartialEq)]
pub struct FEField {
    values: Vec<f64>,
}

impl FEField {
    pub fn zeros(dofmap: &DofMap) -> Self {
        Self {
            values: vec![0.0; dofmap.total()],
        }
    }

    pub fn from_values(dofmap: &DofMap, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), dofmap.total());
        Self { values }
    }

    /// Scatters free unknowns into a full vector; constrained entries are 0.
    pub fn from_free(dofmap: &DofMap, free: &[f64]) -> Self {
        assert_eq!(free.len(), dofmap.num_free());
        let mut values = vec![0.0; dofmap.total()];
        for (&g, &x) in dofmap.free_dofs().iter().zip(free) {
            values[g] = x;
        }
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn free_part(&self, dofmap: &DofMap) -> Vec<f64> {
        dofmap.free_dofs().iter().map(|&g| self.values[g]).collect()
    }

    /// Largest magnitude among the constrained entries.
    pub fn max_constrained(&self, dofmap: &DofMap) -> f64 {
        self.values
            .iter()
            .enumerate()
            .filter(|(g, _)| !dofmap.is_free(*g))
            .fold(0.0, |m, (_, v)| m.max(v.abs()))
    }
}

/// Symmetric sparse matrix in CSR form with both triangles stored and
/// column indices sorted within each row.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSymMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseSymMatrix {
    /// Builds from `(row, col, value)` entries; duplicates are summed in input order.
    /// The caller supplies both triangles.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            rows[i].push(j as u32);
        }
        let mut m = Self::from_pattern(n, rows);
        for &(i, j, v) in triplets {
            *m.entry_mut(i, j) += v;
        }
        m
    }

    fn from_pattern(n: usize, mut rows: Vec<Vec<u32>>) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut nnz = 0;
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            nnz += r.len();
            row_ptr.push(nnz);
        }
        let mut cols = Vec::with_capacity(nnz);
        for r in rows {
            cols.extend_from_slice(&r);
        }
        Self {
            n,
            row_ptr,
            cols,
            vals: vec![0.0; nnz],
        }
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        let k = self.cols[lo..hi]
            .binary_search(&(j as u32))
            .expect("entry outside sparsity pattern");
        &mut self.vals[lo + k]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[lo..hi].binary_search(&(j as u32)) {
            Ok(k) => self.vals[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[lo..hi], &self.vals[lo..hi])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`. Rows are independent, so the result does not depend on the thread count.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        const CHUNK: usize = 512;
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
            for (k, yi) in ys.iter_mut().enumerate() {
                let (cols, vals) = self.row(c * CHUNK + k);
                let mut acc = 0.0;
                for (&j, &v) in cols.iter().zip(vals) {
                    acc += v * x[j as usize];
                }
                *yi = acc;
            }
        });
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec(x, &mut y);
        y
    }

    /// `xᵀ A x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        dot(x, &self.apply(x))
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            let (cols, vals) = self.row(i);
            cols.iter()
                .zip(vals)
                .all(|(&j, &v)| self.get(j as usize, i).to_bits() == v.to_bits())
        })
    }
}

/// Deterministic dot product: fixed-size chunks summed in order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Assembles `Σ_K S_K M S_K` over free DOFs. `local` already carries the
/// DOF scaling, and the fixed global normals need no sign change.
pub fn assemble_stiffness(
    mesh: &StructuredMesh,
    dofmap: &DofMap,
    local: &LocalStiffness,
) -> SparseSymMatrix {
    let n = dofmap.num_free();
    let nloc = local.size();
    let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
    let free_local = |cell: usize| -> Vec<(usize, usize)> {
        dofmap
            .cell_dofs(mesh, cell)
            .iter()
            .enumerate()
            .filter_map(|(k, &g)| dofmap.free_position(g).map(|p| (k, p)))
            .collect()
    };
    for cell in 0..mesh.num_cells() {
        let fl = free_local(cell);
        for &(_, p) in &fl {
            rows[p].extend(fl.iter().map(|&(_, q)| q as u32));
        }
    }
    let mut a = SparseSymMatrix::from_pattern(n, rows);
    debug_assert_eq!(nloc, crate::mesh::local_dof_count(mesh.dim()));
    for cell in 0..mesh.num_cells() {
        let fl = free_local(cell);
        for &(k, p) in &fl {
            for &(l, q) in &fl {
                *a.entry_mut(p, q) += local.get(k, l);
            }
        }
    }
    a
}

/// Load vector `b_i = Σ_K ∫_K f φ_i dx` over free DOFs.
pub fn assemble_load<F>(
    mesh: &StructuredMesh,
    dofmap: &DofMap,
    basis: &NodalBasis,
    f: F,
    quad: &QuadRule,
) -> Vec<f64>
where
    F: Fn(&[f64; 3]) -> f64 + Sync,
{
    let dim = mesh.dim();
    let nloc = basis.len();
    let half = mesh.half();
    let scale = dof_scaling(dim, half);
    let vol = half.powi(dim as i32);
    let phi: Vec<Vec<f64>> = quad
        .points()
        .iter()
        .map(|p| {
            (0..nloc)
                .map(|i| basis.monomials().eval(basis.function(i), p, [0, 0, 0]))
                .collect()
        })
        .collect();
    let local: Vec<Vec<f64>> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|cell| {
            let mut out = vec![0.0; nloc];
            for (g, (p, w)) in quad.points().iter().zip(quad.weights()).enumerate() {
                let fx = f(&mesh.map_to_physical(cell, p)) * w;
                for (o, v) in out.iter_mut().zip(&phi[g]) {
                    *o += fx * v;
                }
            }
            for (o, s) in out.iter_mut().zip(&scale) {
                *o *= vol * s;
            }
            out
        })
        .collect();
    let mut b = vec![0.0; dofmap.num_free()];
    for (cell, vals) in local.iter().enumerate() {
        for (&g, v) in dofmap.cell_dofs(mesh, cell).iter().zip(vals) {
            if let Some(p) = dofmap.free_position(g) {
                b[p] += v;
            }
        }
    }
    b
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverMethod {
    /// Sparse Cholesky with a fill-reducing ordering, followed by iterative refinement.
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients.
    ConjugateGradient,
}

impl std::str::FromStr for SolverMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cholesky" => Ok(Self::Cholesky),
            "cg" => Ok(Self::ConjugateGradient),
            _ => Err(Error::InvalidStudy(format!(
                "unknown solver '{s}' (expected cholesky or cg)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Target `‖Ax - b‖ / ‖b‖`.
    pub tol: f64,
    pub method: SolverMethod,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            method: SolverMethod::Cholesky,
            max_iter: 200_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub method: SolverMethod,
    /// CG iterations or refinement steps.
    pub iterations: usize,
    /// `‖b - Ax‖ / ‖b‖`.
    pub residual: f64,
    /// `max_i |b - Ax|_i / (|A||x| + |b|)_i`.
    pub backward_error: f64,
}

/// Componentwise backward error at which a solve counts as converged even if
/// the relative residual is above the tolerance: `x` is then the exact
/// solution of a system perturbed at the rounding level, and the residual is
/// limited by storing `x` in double precision.
pub const BACKWARD_ERROR_FLOOR: f64 = 4.0 * f64::EPSILON;

/// Solves `A x = b` on the free DOFs and scatters into a full field.
pub fn solve_spd(
    a: &SparseSymMatrix,
    b: &[f64],
    dofmap: &DofMap,
    opts: &SolveOptions,
) -> Result<(FEField, SolveStats)> {
    let (x, stats) = solve_free(a, b, opts)?;
    Ok((FEField::from_free(dofmap, &x), stats))
}

pub fn solve_free(
    a: &SparseSymMatrix,
    b: &[f64],
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    assert_eq!(b.len(), a.dim());
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok((
            vec![0.0; a.dim()],
            SolveStats {
                method: opts.method,
                iterations: 0,
                residual: 0.0,
                backward_error: 0.0,
            },
        ));
    }
    match opts.method {
        SolverMethod::Cholesky => cholesky_solve(a, b, bnorm, opts),
        SolverMethod::ConjugateGradient => pcg(a, b, bnorm, opts),
    }
}

/// Componentwise backward error of `x` given its residual `r`.
pub fn backward_error(a: &SparseSymMatrix, x: &[f64], b: &[f64], r: &[f64]) -> f64 {
    (0..a.dim())
        .into_par_iter()
        .map(|i| {
            let (cols, vals) = a.row(i);
            let scale: f64 = cols
                .iter()
                .zip(vals)
                .map(|(&j, v)| (v * x[j as usize]).abs())
                .sum::<f64>()
                + b[i].abs();
            if scale == 0.0 {
                0.0
            } else {
                r[i].abs() / scale
            }
        })
        .reduce(|| 0.0, f64::max)
}

/// `b - A x` with error-free products and sums per row, rounded once.
/// Refinement driven by this residual is not limited by the cancellation
/// in `b - A x`.
pub fn accurate_residual(a: &SparseSymMatrix, x: &[f64], b: &[f64]) -> Vec<f64> {
    let mut r = vec![0.0; a.dim()];
    r.par_chunks_mut(512).enumerate().for_each(|(chunk, out)| {
        for (k, ri) in out.iter_mut().enumerate() {
            let i = chunk * 512 + k;
            let (cols, vals) = a.row(i);
            let mut s = b[i];
            let mut c = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                let p = v * x[j as usize];
                let ep = v.mul_add(x[j as usize], -p);
                let t = s - p;
                let z = t - s;
                let es = (s - (t - z)) + (-p - z);
                s = t;
                c += es - ep;
            }
            *ri = s + c;
        }
    });
    r
}

fn cholesky_solve(
    a: &SparseSymMatrix,
    b: &[f64],
    bnorm: f64,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    use faer::linalg::solvers::Solve;
    use faer::sparse::{SparseColMat, SymbolicSparseColMat};

    let n = a.dim();
    // Row i of the symmetric CSR is column i; keep rows ≥ i for the lower triangle.
    let mut col_ptr = Vec::with_capacity(n + 1);
    let mut row_idx = Vec::new();
    let mut vals = Vec::new();
    col_ptr.push(0usize);
    for i in 0..n {
        let (cols, v) = a.row(i);
        let start = cols.partition_point(|&j| (j as usize) < i);
        row_idx.extend(cols[start..].iter().map(|&j| j as usize));
        vals.extend_from_slice(&v[start..]);
        col_ptr.push(row_idx.len());
    }
    let symbolic = SymbolicSparseColMat::new_checked(n, n, col_ptr, None, row_idx);
    let lower = SparseColMat::<usize, f64>::new(symbolic, vals);
    let llt = lower
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| Error::Factorization(format!("{e:?}")))?;

    let solve = |rhs: &[f64]| -> Vec<f64> {
        let mut m = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
        llt.solve_in_place(m.as_mut());
        (0..n).map(|i| m[(i, 0)]).collect()
    };

    let mut x = solve(b);
    let mut r = accurate_residual(a, &x, b);
    let mut rel = norm(&r) / bnorm;
    let mut berr = backward_error(a, &x, b, &r);
    let mut steps = 0;
    while rel > opts.tol && berr > BACKWARD_ERROR_FLOOR && steps < 5 {
        let dx = solve(&r);
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        r = accurate_residual(a, &x, b);
        let next = norm(&r) / bnorm;
        berr = backward_error(a, &x, b, &r);
        steps += 1;
        if next >= rel {
            rel = next;
            break;
        }
        rel = next;
    }
    if !(rel <= opts.tol || berr <= BACKWARD_ERROR_FLOOR) {
        return Err(Error::NoConvergence {
            residual: rel,
            iterations: steps,
        });
    }
    Ok((
        x,
        SolveStats {
            method: SolverMethod::Cholesky,
            iterations: steps,
            residual: rel,
            backward_error: berr,
        },
    ))
}

/// Reduction of the residual asked of each inner CG solve.
const INNER_REDUCTION: f64 = 1e-8;
/// Outer refinement steps for CG.
const MAX_REFINEMENTS: usize = 6;

/// Jacobi-preconditioned CG on `A d = r`, stopped when the recurrence
/// residual drops by `reduction`; the flag is false if `budget` ran out.
fn pcg_inner(
    a: &SparseSymMatrix,
    r0: &[f64],
    inv_diag: &[f64],
    reduction: f64,
    budget: usize,
) -> (Vec<f64>, usize, bool) {
    let n = a.dim();
    let target = reduction * norm(r0);
    let mut d = vec![0.0; n];
    let mut r = r0.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(r, m)| r * m).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    for it in 1..=budget {
        a.matvec(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        d.par_iter_mut()
            .zip(&p)
            .for_each(|(di, pi)| *di += alpha * pi);
        r.par_iter_mut()
            .zip(&ap)
            .for_each(|(ri, api)| *ri -= alpha * api);
        if norm(&r) <= target {
            return (d, it, true);
        }
        z.par_iter_mut()
            .zip(&r)
            .zip(inv_diag)
            .for_each(|((zi, ri), mi)| *zi = ri * mi);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut()
            .zip(&z)
            .for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    (d, budget, false)
}

/// CG inside iterative refinement: every correction is solved against a
/// compensated residual, so the result is not limited by the drift between
/// the CG recurrence and the true residual.
fn pcg(
    a: &SparseSymMatrix,
    b: &[f64],
    bnorm: f64,
    opts: &SolveOptions,
) -> Result<(Vec<f64>, SolveStats)> {
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let mut x = vec![0.0; a.dim()];
    let mut r = b.to_vec();
    let mut rel = 1.0;
    let mut iterations = 0;
    for _ in 0..MAX_REFINEMENTS {
        let (d, its, done) =
            pcg_inner(a, &r, &inv_diag, INNER_REDUCTION, opts.max_iter - iterations);
        iterations += its;
        for (xi, di) in x.iter_mut().zip(&d) {
            *xi += di;
        }
        r = accurate_residual(a, &x, b);
        let next = norm(&r) / bnorm;
        let berr = backward_error(a, &x, b, &r);
        if next <= opts.tol || berr <= BACKWARD_ERROR_FLOOR {
            return Ok((
                x,
                SolveStats {
                    method: SolverMethod::ConjugateGradient,
                    iterations,
                    residual: next,
                    backward_error: berr,
                },
            ));
        }
        let stalled = next >= rel;
        rel = next;
        if !done || stalled || iterations >= opts.max_iter {
            break;
        }
    }
    Err(Error::NoConvergence {
        residual: rel,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tridiag(n: usize) -> SparseSymMatrix {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 4.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        SparseSymMatrix::from_triplets(n, &t)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = tridiag(10);
        let (x, s) = solve_free(&a, &[0.0; 10], &SolveOptions::default()).unwrap();
        assert!(x.iter().all(|&v| v == 0.0));
        assert_eq!(s.residual, 0.0);
    }

    #[test]
    fn recovers_ones() {
        let a = tridiag(50);
        let b = a.apply(&[1.0; 50]);
        for method in [SolverMethod::Cholesky, SolverMethod::ConjugateGradient] {
            let opts = SolveOptions {
                method,
                ..Default::default()
            };
            let (x, s) = solve_free(&a, &b, &opts).unwrap();
            assert!(s.residual <= 1e-12);
            assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12), "{method:?}");
        }
    }

    #[test]
    fn identity_system() {
        let n = 7;
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        let a = SparseSymMatrix::from_triplets(n, &t);
        let b = vec![1.0; n];
        let (x, _) = solve_free(&a, &b, &SolveOptions::default()).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn cg_reports_non_convergence() {
        let a = tridiag(200);
        let b = vec![1.0; 200];
        let opts = SolveOptions {
            method: SolverMethod::ConjugateGradient,
            max_iter: 2,
            tol: 1e-14,
        };
        match solve_free(&a, &b, &opts) {
            Err(Error::NoConvergence { residual, iterations }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn dot_is_order_stable() {
        let a: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin()).collect();
        assert_eq!(dot(&a, &a).to_bits(), dot(&a, &a).to_bits());
    }
}
