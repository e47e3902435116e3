//! Executable invariants of the element, interpolation and recovery operators.
//!
//! None of these needs a converged solve on a fine mesh; the whole suite runs
//! in well under a second.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::element::{reference_basis, MonomialSet, NodalBasis, QuadRule};
use crate::error::Result;
use crate::fields::{
    correction_coeffs, corrected_interpolate, GlobalPoly, ManufacturedSolution, SmoothField,
    FACE_QUAD,
};
use crate::mesh::{build_dof_map, build_uniform_mesh, local_facets, macro_partition, GridSpec};
use crate::postprocess::{postprocess, vertex_values_of, VertexSource};
use crate::system::{assemble_load, assemble_stiffness, dot, solve_free, SolveOptions, SolverMethod};

pub const DUALITY_TOL: f64 = 1e-12;
pub const REPRODUCTION_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const Q3_TOL: f64 = 1e-11;
pub const RHS_TOL: f64 = 1e-5;
pub const RHS_STEP: f64 = 1e-3;
pub const ENERGY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PropsOptions {
    /// Shift one basis coefficient `(function, monomial, delta)` in both
    /// dimensions before checking.
    pub perturb_basis: Option<(usize, usize, f64)>,
    /// Mesh size for the recovery checks.
    pub macro_n: usize,
    pub seed: u64,
}

impl Default for PropsOptions {
    fn default() -> Self {
        Self {
            perturb_basis: None,
            macro_n: 6,
            seed: 20240917,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn from(name: String, outcome: Result<(bool, String)>) -> Self {
        match outcome {
            Ok((passed, detail)) => Self {
                name,
                passed,
                detail,
            },
            Err(e) => Self {
                name,
                passed: false,
                detail: e.to_string(),
            },
        }
    }
}

fn within(worst: f64, tol: f64) -> (bool, String) {
    (worst <= tol, format!("max deviation {worst:.3e} (tol {tol:.0e})"))
}

pub fn run_props(opts: &PropsOptions) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for dim in [2, 3] {
        let basis = reference_basis(dim).map(|b| match opts.perturb_basis {
            Some((i, j, d)) => b.perturbed(i, j, d),
            None => b,
        });
        let named = |what: &str| format!("{what} ({dim}D)");
        match basis {
            Ok(b) => {
                out.push(CheckResult::from(named("basis duality"), Ok(duality(&b))));
                out.push(CheckResult::from(named("shape-space reproduction"), Ok(reproduction(&b))));
                out.push(CheckResult::from(named("opposite-facet traces"), Ok(opposite_facet_traces(&b))));
            }
            Err(e) => out.push(CheckResult::from(named("basis"), Err(e))),
        }
        out.push(CheckResult::from(named("quadrature exactness"), quadrature_exactness(dim)));
        out.push(CheckResult::from(
            named("Q3 reproduction"),
            q3_reproduction(dim, opts.macro_n, opts.seed),
        ));
        out.push(CheckResult::from(
            named("recovery idempotence"),
            idempotence(dim, opts.macro_n, opts.seed),
        ));
        out.push(CheckResult::from(named("commutation"), commutation(dim, opts.macro_n)));
        out.push(CheckResult::from(named("correction pairing"), pairing(dim)));
        out.push(CheckResult::from(named("zero data, zero solution"), zero_solution(dim)));
        out.push(CheckResult::from(named("energy identity"), energy_identity(dim)));
    }
    for u in ManufacturedSolution::ALL {
        out.push(CheckResult::from(
            format!("rhs consistency ({u})"),
            rhs_consistency(u, opts.seed),
        ));
    }
    out
}

/// `max |L_i(φ_j) - δ_ij|`.
pub fn duality(basis: &NodalBasis) -> (bool, String) {
    let n = basis.len();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let l = basis.functionals_of(basis.function(j));
        for (i, v) in l.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - want).abs());
        }
    }
    within(worst, DUALITY_TOL)
}

fn interior_points(dim: usize) -> Vec<[f64; 3]> {
    let pts = [
        [0.1, -0.3, 0.7],
        [-0.8, 0.45, -0.2],
        [0.55, 0.9, 0.05],
        [-0.35, -0.65, -0.9],
        [0.0, 0.2, 0.4],
    ];
    pts.iter()
        .map(|p| {
            let mut q = [0.0; 3];
            q[..dim].copy_from_slice(&p[..dim]);
            q
        })
        .collect()
}

/// `Π_K p = p` for every monomial of the shape space, checked pointwise.
pub fn reproduction(basis: &NodalBasis) -> (bool, String) {
    let m = basis.monomials();
    let mut worst: f64 = 0.0;
    for j in 0..m.len() {
        let mut p = vec![0.0; m.len()];
        p[j] = 1.0;
        let back = basis.combine(&basis.functionals_of(&p));
        for xi in interior_points(basis.dim()) {
            let d = m.eval(&back, &xi, [0; 3]) - m.eval(&p, &xi, [0; 3]);
            worst = worst.max(d.abs());
        }
    }
    within(worst, REPRODUCTION_TOL)
}

/// For every basis function and axis `a`, `∂φ/∂ξ_a` minus its facet mean
/// agrees on the two facets normal to `a`, as a function of the remaining
/// coordinates.
pub fn opposite_facet_traces(basis: &NodalBasis) -> (bool, String) {
    let dim = basis.dim();
    let m = basis.monomials();
    let face = QuadRule::new(dim - 1, 3).expect("valid rule");
    let samples = interior_points(dim - 1);
    let mut worst: f64 = 0.0;
    for i in 0..basis.len() {
        let phi = basis.function(i);
        for axis in 0..dim {
            let others: Vec<usize> = (0..dim).filter(|&b| b != axis).collect();
            let lift = |s: f64, t: &[f64; 3]| {
                let mut xi = [0.0; 3];
                xi[axis] = s;
                for (k, &b) in others.iter().enumerate() {
                    xi[b] = t[k];
                }
                xi
            };
            let mut alpha = [0u8; 3];
            alpha[axis] = 1;
            let trace = |s: f64, t: &[f64; 3]| m.eval(phi, &lift(s, t), alpha);
            let mean = |s: f64| face.integrate(|t| trace(s, t)) / 2f64.powi(dim as i32 - 1);
            let (mp, mm) = (mean(1.0), mean(-1.0));
            for t in &samples {
                let d = (trace(1.0, t) - mp) - (trace(-1.0, t) - mm);
                worst = worst.max(d.abs());
            }
        }
    }
    debug_assert_eq!(local_facets(dim).len(), 2 * dim);
    within(worst, TRACE_TOL)
}

/// Tensor Gauss rules integrate `Π ξ_a^{k_a}` exactly for `k_a ≤ 2q - 1`.
fn quadrature_exactness(dim: usize) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for q in 1..=6 {
        let rule = QuadRule::new(dim, q)?;
        let top = (2 * q - 1) as i32;
        for k in [0, top - 1, top] {
            if k < 0 {
                continue;
            }
            let got = rule.integrate(|x| (0..dim).map(|a| x[a].powi(k)).product());
            let one = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
            worst = worst.max((got - one.powi(dim as i32)).abs());
        }
    }
    Ok(within(worst, 1e-13))
}

fn random_q3(dim: usize, rng: &mut StdRng) -> GlobalPoly {
    let terms = MonomialSet::tensor_cubic(dim)
        .exponents()
        .iter()
        .map(|&e| (e, rng.gen_range(-1.0..1.0)))
        .collect();
    GlobalPoly::new(dim, terms)
}

fn q3_reproduction(dim: usize, n: usize, seed: u64) -> Result<(bool, String)> {
    let mesh = build_uniform_mesh(GridSpec::unit(dim, n))?;
    let grid = macro_partition(&mesh)?;
    let mut rng = StdRng::seed_from_u64(seed);
    let q = random_q3(dim, &mut rng);
    let out = postprocess(&mesh, &grid, &vertex_values_of(VertexSource::Exact(&q), &mesh)?)?;
    let mut worst: f64 = 0.0;
    for block in grid.blocks() {
        for _ in 0..10 {
            let cell = block.cells[rng.gen_range(0..block.cells.len())];
            let mut xi = [0.0; 3];
            for x in xi.iter_mut().take(dim) {
                *x = rng.gen_range(-1.0..1.0);
            }
            let x = mesh.map_to_physical(cell, &xi);
            worst = worst.max((out.value(cell, &xi) - q.value(&x)).abs());
        }
    }
    Ok(within(worst, Q3_TOL))
}

fn idempotence(dim: usize, n: usize, seed: u64) -> Result<(bool, String)> {
    let mesh = build_uniform_mesh(GridSpec::unit(dim, n))?;
    let grid = macro_partition(&mesh)?;
    let mut rng = StdRng::seed_from_u64(seed ^ 0x5eed);
    let values: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let once = postprocess(&mesh, &grid, &values)?;
    let again = postprocess(&mesh, &grid, &vertex_values_of(VertexSource::Piecewise(&once), &mesh)?)?;
    let worst = once
        .coeffs()
        .iter()
        .zip(again.coeffs())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(within(worst, Q3_TOL))
}

fn smooth_for(dim: usize) -> ManufacturedSolution {
    if dim == 2 {
        ManufacturedSolution::U1
    } else {
        ManufacturedSolution::U3
    }
}

/// Recovery of `Π*_h u` and of the vertex samples of `u` agree bit for bit.
fn commutation(dim: usize, n: usize) -> Result<(bool, String)> {
    let mesh = build_uniform_mesh(GridSpec::unit(dim, n))?;
    let grid = macro_partition(&mesh)?;
    let dofmap = build_dof_map(&mesh);
    let basis = reference_basis(dim)?;
    let u = smooth_for(dim);
    let ci = corrected_interpolate(&mesh, &dofmap, &basis, &u, FACE_QUAD)?;
    let a = postprocess(&mesh, &grid, &vertex_values_of(VertexSource::Corrected(&ci), &mesh)?)?;
    let b = postprocess(&mesh, &grid, &vertex_values_of(VertexSource::Exact(&u), &mesh)?)?;
    let differing = a
        .coeffs()
        .iter()
        .zip(b.coeffs())
        .filter(|(x, y)| x.to_bits() != y.to_bits())
        .count();
    Ok((differing == 0, format!("{differing} coefficients differ")))
}

/// Both coefficients of a correction pair come from one integral.
fn pairing(dim: usize) -> Result<(bool, String)> {
    let (n, u) = if dim == 2 {
        (12, ManufacturedSolution::U2)
    } else {
        (6, ManufacturedSolution::U4)
    };
    let mesh = build_uniform_mesh(GridSpec::unit(dim, n))?;
    let c = correction_coeffs(&mesh, &u, FACE_QUAD)?;
    let bad = (0..mesh.num_cells())
        .filter(|&k| {
            let v = c.cell(k);
            (0..dim).any(|a| v[a].to_bits() != v[dim + a].to_bits())
        })
        .count();
    Ok((bad == 0, format!("{bad} cells with unequal pairs")))
}

fn zero_solution(dim: usize) -> Result<(bool, String)> {
    let mesh = build_uniform_mesh(GridSpec::unit(dim, 6))?;
    let dofmap = build_dof_map(&mesh);
    let basis = reference_basis(dim)?;
    let a = assemble_stiffness(&mesh, &dofmap, &crate::element::local_stiffness(&basis, mesh.half()));
    let b = assemble_load(&mesh, &dofmap, &basis, |_| 0.0, &QuadRule::new(dim, 5)?);
    let mut worst: f64 = 0.0;
    for method in [SolverMethod::Cholesky, SolverMethod::ConjugateGradient] {
        let opts = SolveOptions {
            method,
            ..SolveOptions::default()
        };
        let (x, _) = solve_free(&a, &b, &opts)?;
        worst = worst.max(x.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    Ok((worst == 0.0, format!("max |u_h| = {worst:.3e}")))
}

/// `u_hᵀ A u_h = bᵀ u_h`.
fn energy_identity(dim: usize) -> Result<(bool, String)> {
    let n = if dim == 2 { 12 } else { 6 };
    let u = smooth_for(dim);
    let mesh = build_uniform_mesh(GridSpec::unit(dim, n))?;
    let dofmap = build_dof_map(&mesh);
    let basis = reference_basis(dim)?;
    let a = assemble_stiffness(&mesh, &dofmap, &crate::element::local_stiffness(&basis, mesh.half()));
    let b = assemble_load(&mesh, &dofmap, &basis, |x| u.rhs(x), &QuadRule::new(dim, 5)?);
    let (x, _) = solve_free(&a, &b, &SolveOptions::default())?;
    let energy = a.quad_form(&x);
    let work = dot(&b, &x);
    let rel = ((energy - work) / work).abs();
    Ok(within(rel, ENERGY_TOL))
}

/// `f` against a 5-point-per-axis finite-difference biharmonic of `u` at ten
/// random interior points. Deviations are relative to the largest `|f|` seen.
fn rhs_consistency(u: ManufacturedSolution, seed: u64) -> Result<(bool, String)> {
    let dim = u.dim();
    let h = RHS_STEP;
    let mut rng = StdRng::seed_from_u64(seed ^ u.name().len() as u64 ^ (dim as u64) << 8);
    let stencil4 = [1.0, -4.0, 6.0, -4.0, 1.0];
    let stencil2 = [1.0, -2.0, 1.0];
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for _ in 0..10 {
        let mut x = [0.0; 3];
        for v in x.iter_mut().take(dim) {
            *v = rng.gen_range(0.05..0.95);
        }
        let at = |shift: &[(usize, f64)]| {
            let mut y = x;
            for &(a, d) in shift {
                y[a] += d * h;
            }
            u.value(&y)
        };
        let mut fd = 0.0;
        for a in 0..dim {
            let mut s = 0.0;
            for (k, c) in stencil4.iter().enumerate() {
                s += c * at(&[(a, k as f64 - 2.0)]);
            }
            fd += s / h.powi(4);
            for b in a + 1..dim {
                let mut s = 0.0;
                for (i, ci) in stencil2.iter().enumerate() {
                    for (j, cj) in stencil2.iter().enumerate() {
                        s += ci * cj * at(&[(a, i as f64 - 1.0), (b, j as f64 - 1.0)]);
                    }
                }
                fd += 2.0 * s / h.powi(4);
            }
        }
        let f = u.rhs(&x);
        scale = scale.max(f.abs());
        worst = worst.max((fd - f).abs());
    }
    Ok(within(worst / scale, RHS_TOL))
}
