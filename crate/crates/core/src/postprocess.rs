//! Macro-element recovery `Π³_3h`: tensor-cubic interpolation of vertex values
//! on each `3^d` block of cells.

use rayon::prelude::*;

use crate::element::MonomialSet;
use crate::error::{Error, Result};
use crate::fields::{CorrectedInterpolant, PiecewisePoly, SmoothField};
use crate::mesh::{local_vertex_coords, DofMap, MacroGrid, StructuredMesh};
use crate::system::FEField;

/// Largest inter-cell disagreement accepted when reading vertex values off a
/// piecewise polynomial.
pub const VERTEX_TOLERANCE: f64 = 1e-10;

/// Coefficients of `L_k(c + (1 + ξ)/2)` in powers of `ξ`, where `L_k` is the
/// cubic Lagrange polynomial on the nodes `0, 1, 2, 3` and `c` the fine-cell
/// offset inside the block. Indexed `[c][k][p]`.
fn lagrange_on_cells() -> [[[f64; 4]; 4]; 3] {
    let mut out = [[[0.0; 4]; 4]; 3];
    for (c, per_cell) in out.iter_mut().enumerate() {
        for (k, poly) in per_cell.iter_mut().enumerate() {
            // Start from the constant 1 and multiply in (t - m)/(k - m),
            // with t - m = (c + 1/2 - m) + ξ/2.
            let mut p = [1.0, 0.0, 0.0, 0.0];
            for m in (0..4).filter(|&m| m != k) {
                let denom = k as f64 - m as f64;
                let a = (c as f64 + 0.5 - m as f64) / denom;
                let b = 0.5 / denom;
                let mut next = [0.0; 4];
                for i in 0..4 {
                    next[i] += a * p[i];
                    if i + 1 < 4 {
                        next[i + 1] += b * p[i];
                    }
                }
                p = next;
            }
            *poly = p;
        }
    }
    out
}

/// `Π³_3h w` from the vertex values `w(P)` of the whole mesh, re-expressed on
/// every fine cell in the tensor-cubic monomials.
pub fn postprocess(mesh: &StructuredMesh, grid: &MacroGrid, values: &[f64]) -> Result<PiecewisePoly> {
    if grid.dim() != mesh.dim() || !mesh.n().is_multiple_of(3) {
        return Err(Error::MacroDivisibility(mesh.n()));
    }
    if values.len() != mesh.num_vertices() {
        return Err(Error::MissingVertexValue(values.len().min(mesh.num_vertices())));
    }
    if let Some(v) = values.iter().position(|x| !x.is_finite()) {
        return Err(Error::MissingVertexValue(v));
    }
    let dim = mesh.dim();
    let monomials = MonomialSet::tensor_cubic(dim);
    let k = monomials.len();
    let table = lagrange_on_cells();
    let mut coeffs = vec![0.0; mesh.num_cells() * k];

    let per_block: Vec<Vec<(usize, Vec<f64>)>> = grid
        .blocks()
        .par_iter()
        .map(|block| {
            let nodal: Vec<f64> = block.vertices.iter().map(|&v| values[v]).collect();
            block
                .cells
                .iter()
                .map(|&cell| {
                    let lat = mesh.cell_lattice(cell);
                    let mut off = [0usize; 3];
                    for a in 0..dim {
                        off[a] = lat[a] - block.first_cell[a];
                    }
                    (cell, cell_coeffs(dim, &table, off, &nodal))
                })
                .collect()
        })
        .collect();
    for (cell, c) in per_block.into_iter().flatten() {
        coeffs[cell * k..(cell + 1) * k].copy_from_slice(&c);
    }
    Ok(PiecewisePoly::from_coeffs(mesh, monomials, coeffs))
}

/// Tensor contraction of nodal values against the per-axis Lagrange tables,
/// one axis at a time. Both index sets run first-axis-fastest in base 4.
fn cell_coeffs(dim: usize, table: &[[[f64; 4]; 4]; 3], off: [usize; 3], nodal: &[f64]) -> Vec<f64> {
    let mut cur = nodal.to_vec();
    for a in 0..dim {
        let t = &table[off[a]];
        let stride = 4usize.pow(a as u32);
        let mut next = vec![0.0; cur.len()];
        for (i, out) in next.iter_mut().enumerate() {
            let p = (i / stride) % 4;
            let base = i - p * stride;
            let mut acc = 0.0;
            for (kk, row) in t.iter().enumerate() {
                acc += row[p] * cur[base + kk * stride];
            }
            *out = acc;
        }
        cur = next;
    }
    cur
}

/// Anything whose vertex values can feed [`postprocess`].
#[derive(Clone, Copy)]
pub enum VertexSource<'a> {
    /// A global DOF vector; its vertex DOFs are used as they are.
    Field(&'a DofMap, &'a FEField),
    /// A vertex-continuous cell-wise polynomial.
    Piecewise(&'a PiecewisePoly),
    /// `Π*_h u`, whose vertex values are those of `Π_h u`.
    Corrected(&'a CorrectedInterpolant),
    /// Point samples of a smooth field.
    Exact(&'a dyn SmoothField),
}

pub fn vertex_values_of(source: VertexSource<'_>, mesh: &StructuredMesh) -> Result<Vec<f64>> {
    match source {
        VertexSource::Field(dofmap, field) => Ok((0..mesh.num_vertices())
            .map(|v| field.values()[dofmap.vertex_dof(v)])
            .collect()),
        VertexSource::Corrected(ci) => {
            if ci.vertex_values.len() != mesh.num_vertices() {
                return Err(Error::Operand("interpolant built on another mesh".into()));
            }
            Ok(ci.vertex_values.clone())
        }
        VertexSource::Exact(u) => Ok((0..mesh.num_vertices())
            .map(|v| u.value(&mesh.vertex_coords(v)))
            .collect()),
        VertexSource::Piecewise(p) => piecewise_vertex_values(p, mesh),
    }
}

fn piecewise_vertex_values(p: &PiecewisePoly, mesh: &StructuredMesh) -> Result<Vec<f64>> {
    p.check_mesh(mesh)?;
    let dim = mesh.dim();
    let mut out = vec![f64::NAN; mesh.num_vertices()];
    for cell in 0..mesh.num_cells() {
        for (lv, &v) in mesh.cell_vertices(cell).iter().enumerate() {
            let val = p.value(cell, &local_vertex_coords(dim, lv));
            if out[v].is_nan() {
                out[v] = val;
            } else {
                let gap = (out[v] - val).abs();
                if gap > VERTEX_TOLERANCE {
                    return Err(Error::VertexMismatch { vertex: v, gap });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::GlobalPoly;
    use crate::mesh::{build_uniform_mesh, macro_partition, GridSpec};

    #[test]
    fn lagrange_tables_are_cardinal() {
        let t = lagrange_on_cells();
        for (c, per_cell) in t.iter().enumerate() {
            for (k, poly) in per_cell.iter().enumerate() {
                for (node, xi) in [(c, -1.0f64), (c + 1, 1.0)] {
                    let v: f64 = (0..4).map(|p| poly[p] * xi.powi(p as i32)).sum();
                    let want = if node == k { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn constant_stays_constant() {
        let mesh = build_uniform_mesh(GridSpec::unit(3, 3)).unwrap();
        let grid = macro_partition(&mesh).unwrap();
        let out = postprocess(&mesh, &grid, &vec![2.5; mesh.num_vertices()]).unwrap();
        for cell in 0..mesh.num_cells() {
            assert!((out.value(cell, &[0.3, -0.7, 0.1]) - 2.5).abs() < 1e-13);
            assert!(out.hessian(cell, &[0.0; 3]).iter().flatten().all(|h| h.abs() < 1e-9));
        }
    }

    #[test]
    fn reproduces_q3() {
        let mesh = build_uniform_mesh(GridSpec::unit(2, 6)).unwrap();
        let grid = macro_partition(&mesh).unwrap();
        let q = GlobalPoly::new(2, vec![([3, 3, 0], 1.5), ([2, 1, 0], -0.5), ([0, 0, 0], 1.0)]);
        let vals = vertex_values_of(VertexSource::Exact(&q), &mesh).unwrap();
        let out = postprocess(&mesh, &grid, &vals).unwrap();
        for cell in 0..mesh.num_cells() {
            let xi = [0.21, -0.43, 0.0];
            let x = mesh.map_to_physical(cell, &xi);
            assert!((out.value(cell, &xi) - q.value(&x)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let mesh = build_uniform_mesh(GridSpec::unit(2, 3)).unwrap();
        let grid = macro_partition(&mesh).unwrap();
        let mut vals = vec![0.0; mesh.num_vertices()];
        assert!(matches!(
            postprocess(&mesh, &grid, &vals[1..]),
            Err(Error::MissingVertexValue(_))
        ));
        vals[5] = f64::NAN;
        assert!(matches!(
            postprocess(&mesh, &grid, &vals),
            Err(Error::MissingVertexValue(5))
        ));
    }

    #[test]
    fn discontinuous_piecewise_rejected() {
        let mesh = build_uniform_mesh(GridSpec::unit(2, 3)).unwrap();
        let mut p = PiecewisePoly::zeros(&mesh, MonomialSet::morley(2));
        p.cell_mut(4)[0] = 1.0;
        let err = vertex_values_of(VertexSource::Piecewise(&p), &mesh).unwrap_err();
        assert!(matches!(err, Error::VertexMismatch { .. }));
    }
}
