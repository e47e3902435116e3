use rayon::prelude::*;

use super::piecewise::PiecewisePoly;
use super::solution::SmoothField;
use crate::element::{apply_functionals, dof_scaling, NodalBasis, QuadRule};
use crate::error::Result;
use crate::mesh::{local_facets, DofMap, Side, StructuredMesh};
use crate::system::FEField;

/// Default Gauss points per axis for edge/face integrals.
pub const FACE_QUAD: usize = 5;

/// Canonical interpolant `Π_h u`: vertex values and mean `+x_a`
/// derivatives over every edge/face (boundary entities included).
pub fn canonical_interpolate(
    mesh: &StructuredMesh,
    dofmap: &DofMap,
    u: &dyn SmoothField,
    face_q: usize,
) -> Result<FEField> {
    let dim = mesh.dim();
    let rule = QuadRule::new(dim - 1, face_q)?;
    let mut values = vec![0.0; dofmap.total()];
    for v in 0..mesh.num_vertices() {
        values[dofmap.vertex_dof(v)] = u.value(&mesh.vertex_coords(v));
    }
    let side = mesh.side();
    let origin = mesh.spec().origin;
    let means: Vec<f64> = (0..mesh.num_facets())
        .into_par_iter()
        .map(|f| {
            let axis = mesh.facet_axis(f);
            let idx = mesh.facet_lattice(f);
            let others: Vec<usize> = (0..dim).filter(|&b| b != axis).collect();
            let mut alpha = [0u8; 3];
            alpha[axis] = 1;
            let mut acc = 0.0;
            for (p, w) in rule.points().iter().zip(rule.weights()) {
                let mut x = [0.0; 3];
                x[axis] = origin[axis] + side * idx[axis] as f64;
                for (k, &b) in others.iter().enumerate() {
                    x[b] = origin[b] + side * (idx[b] as f64 + 0.5 * (1.0 + p[k]));
                }
                acc += w * u.derivative(&x, alpha);
            }
            acc / 2f64.powi(dim as i32 - 1)
        })
        .collect();
    for (f, m) in means.into_iter().enumerate() {
        values[dofmap.facet_dof(f)] = m;
    }
    Ok(FEField::from_values(dofmap, values))
}

/// Per-cell local polynomials of a global DOF vector.
pub fn field_to_piecewise(
    mesh: &StructuredMesh,
    dofmap: &DofMap,
    basis: &NodalBasis,
    field: &FEField,
) -> PiecewisePoly {
    let scale = dof_scaling(mesh.dim(), mesh.half());
    let k = basis.len();
    let mut coeffs = vec![0.0; mesh.num_cells() * k];
    coeffs
        .par_chunks_mut(k)
        .enumerate()
        .for_each(|(cell, out)| {
            let dofs = dofmap.cell_dofs(mesh, cell);
            let local: Vec<f64> = dofs
                .iter()
                .zip(&scale)
                .map(|(&g, s)| field.values()[g] * s)
                .collect();
            out.copy_from_slice(&basis.combine(&local));
        });
    PiecewisePoly::from_coeffs(mesh, basis.monomials().clone(), coeffs)
}

/// Correction coefficients of `R_h u`, per cell.
///
/// 2D stores `(a5, a6, a7, a8)`, 3D stores `(b9, ..., b14)`: the first `d`
/// entries multiply `(h★/4)(ξ_a+1)²(ξ_a-1)` and the last `d` multiply
/// `(h★/4)(ξ_a+1)(ξ_a-1)²`, axis `a = 0, .., d-1`. Both entries of a pair
/// come from the same integral.
#[derive(Debug, Clone)]
pub struct CorrectionCoeffs {
    dim: usize,
    values: Vec<f64>,
}

impl CorrectionCoeffs {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        let k = 2 * self.dim;
        &self.values[cell * k..(cell + 1) * k]
    }

    pub fn num_cells(&self) -> usize {
        self.values.len() / (2 * self.dim)
    }
}

/// Local facet whose integral defines the correction along `axis`:
/// e2 (right) and e1 (bottom) in 2D; F1, F2, F3 in 3D.
pub fn correction_facet(dim: usize, axis: usize) -> usize {
    match dim {
        2 => [1, 0][axis],
        _ => axis,
    }
}

/// `a_j = -(h★/6) ∫_e ∂³u/∂x_a∂x_b² ds` (2D) and
/// `b_j = -(1/12) ∫_F Σ_{b≠a} ∂³u/∂x_a∂x_b² ds` (3D).
pub fn correction_coeffs(
    mesh: &StructuredMesh,
    u: &dyn SmoothField,
    face_q: usize,
) -> Result<CorrectionCoeffs> {
    let dim = mesh.dim();
    let h = mesh.half();
    let rule = QuadRule::new(dim - 1, face_q)?;
    let factor = match dim {
        2 => -h / 6.0,
        _ => -1.0 / 12.0,
    };
    let measure = h.powi(dim as i32 - 1);
    let facets = local_facets(dim);
    let mut values = vec![0.0; mesh.num_cells() * 2 * dim];
    values
        .par_chunks_mut(2 * dim)
        .enumerate()
        .for_each(|(cell, out)| {
            for axis in 0..dim {
                let (fa, side) = facets[correction_facet(dim, axis)];
                debug_assert_eq!(fa, axis);
                let others: Vec<usize> = (0..dim).filter(|&b| b != axis).collect();
                let mut integral = 0.0;
                for (p, w) in rule.points().iter().zip(rule.weights()) {
                    let mut xi = [0.0; 3];
                    xi[axis] = side.coordinate();
                    for (k, &b) in others.iter().enumerate() {
                        xi[b] = p[k];
                    }
                    let x = mesh.map_to_physical(cell, &xi);
                    let mut third = 0.0;
                    for &b in &others {
                        let mut alpha = [0u8; 3];
                        alpha[axis] = 1;
                        alpha[b] = 2;
                        third += u.derivative(&x, alpha);
                    }
                    integral += w * third;
                }
                let c = factor * measure * integral;
                out[axis] = c;
                out[dim + axis] = c;
            }
        });
    Ok(CorrectionCoeffs { dim, values })
}

/// Monomial coefficients `(c0, c1, c2, c3)` of `(ξ - r)²(ξ - s)`.
fn expand_cubic(double_root: f64, simple_root: f64) -> [f64; 4] {
    let (r, s) = (double_root, simple_root);
    [-r * r * s, r * r + 2.0 * r * s, -(2.0 * r + s), 1.0]
}

/// Shape of correction function `j` along its axis, in powers of `ξ_a`.
fn correction_shape(dim: usize, j: usize, half: f64) -> (usize, [f64; 4]) {
    let (axis, poly) = if j < dim {
        (j, expand_cubic(-1.0, 1.0))
    } else {
        (j - dim, expand_cubic(1.0, -1.0))
    };
    (axis, poly.map(|c| 0.25 * half * c))
}

/// `R_K u` as monomial coefficients in the element's shape space.
pub fn correction_polynomial(basis: &NodalBasis, coeffs: &[f64], half: f64) -> Vec<f64> {
    let dim = basis.dim();
    let m = basis.monomials();
    let mut out = vec![0.0; m.len()];
    for (j, &c) in coeffs.iter().enumerate() {
        let (axis, shape) = correction_shape(dim, j, half);
        for (k, s) in shape.iter().enumerate() {
            let mut e = [0u8; 3];
            e[axis] = k as u8;
            let pos = m.position(e).expect("cubic in one variable lies in the shape space");
            out[pos] += c * s;
        }
    }
    out
}

/// `Π*_h u = Π_h u - R_h u`, cell by cell.
#[derive(Debug, Clone)]
pub struct CorrectedInterpolant {
    pub pieces: PiecewisePoly,
    pub coeffs: CorrectionCoeffs,
    /// Nodal vertex values; the correction functions vanish at every vertex,
    /// so these are the vertex values of `Π_h u`.
    pub vertex_values: Vec<f64>,
}

pub fn corrected_interpolate(
    mesh: &StructuredMesh,
    dofmap: &DofMap,
    basis: &NodalBasis,
    u: &dyn SmoothField,
    face_q: usize,
) -> Result<CorrectedInterpolant> {
    let pi = canonical_interpolate(mesh, dofmap, u, face_q)?;
    corrected_from_canonical(mesh, dofmap, basis, u, &pi, face_q)
}

/// Same as [`corrected_interpolate`], reusing an already computed `Π_h u`.
pub fn corrected_from_canonical(
    mesh: &StructuredMesh,
    dofmap: &DofMap,
    basis: &NodalBasis,
    u: &dyn SmoothField,
    canonical: &FEField,
    face_q: usize,
) -> Result<CorrectedInterpolant> {
    let coeffs = correction_coeffs(mesh, u, face_q)?;
    let mut pieces = field_to_piecewise(mesh, dofmap, basis, canonical);
    let half = mesh.half();
    for cell in 0..mesh.num_cells() {
        let r = correction_polynomial(basis, coeffs.cell(cell), half);
        for (p, c) in pieces.cell_mut(cell).iter_mut().zip(&r) {
            *p -= c;
        }
    }
    let vertex_values = (0..mesh.num_vertices())
        .map(|v| canonical.values()[dofmap.vertex_dof(v)])
        .collect();
    Ok(CorrectedInterpolant {
        pieces,
        coeffs,
        vertex_values,
    })
}

/// Largest disagreement, over interior edges/faces, between the mean normal
/// derivatives of `R_h u` seen from the two adjacent cells. Zero would mean
/// `Π*_h u` keeps the DOF continuity of the discrete space.
pub fn correction_dof_mismatch(
    mesh: &StructuredMesh,
    basis: &NodalBasis,
    coeffs: &CorrectionCoeffs,
) -> f64 {
    let dim = mesh.dim();
    let half = mesh.half();
    let nv = 1 << dim;
    let facets = local_facets(dim);
    // Physical facet DOFs of the correction, per cell.
    let local: Vec<Vec<f64>> = (0..mesh.num_cells())
        .map(|cell| {
            let poly = correction_polynomial(basis, coeffs.cell(cell), half);
            apply_functionals(basis.monomials(), &poly)[nv..]
                .iter()
                .map(|d| d / half)
                .collect()
        })
        .collect();
    let mut worst: f64 = 0.0;
    for f in 0..mesh.num_facets() {
        if mesh.is_boundary_facet(f) {
            continue;
        }
        let cells = mesh.facet_cells(f);
        let (lo, hi) = (cells[0], cells[1]);
        let axis = mesh.facet_axis(f);
        let pos = |side: Side| {
            facets
                .iter()
                .position(|&(a, s)| a == axis && s == side)
                .unwrap()
        };
        let a = local[lo][pos(Side::High)];
        let b = local[hi][pos(Side::Low)];
        worst = worst.max((a - b).abs());
    }
    worst
}
