//! Uniform square/cubic grids on an axis-aligned box.
//!
//! Entities are enumerated lexicographically with the first axis running
//! fastest. Codimension-one entities (edges in 2D, faces in 3D) are grouped by
//! the axis of their normal: all entities normal to `x1` first, then `x2`,
//! then `x3`.
//!
//! # Local numbering
//!
//! Cell vertices are numbered lexicographically on the reference cube
//! `[-1, 1]^d`: local vertex `b0 + 2 b1 + 4 b2` sits at `ξ_a = 2 b_a - 1`.
//!
//! Local codim-1 entities follow a fixed `(axis, side)` table:
//!
//! | dim | order |
//! |-----|-------|
//! | 2   | e1 bottom (−x2), e2 right (+x1), e3 top (+x2), e4 left (−x1) |
//! | 3   | F1 +x1, F2 +x2, F3 +x3, F4 −x1, F5 −x2, F6 −x3 |
//!
//! so `(F1, F4)`, `(F2, F5)`, `(F3, F6)` are the opposite pairs normal to
//! `x1`, `x2`, `x3`.

use crate::error::{Error, Result};

/// Which end of an axis a facet sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Low,
    High,
}

impl Side {
    /// Reference coordinate of the facet plane.
    pub fn coordinate(self) -> f64 {
        match self {
            Side::Low => -1.0,
            Side::High => 1.0,
        }
    }
}

const LOCAL_FACETS_2D: [(usize, Side); 4] = [
    (1, Side::Low),
    (0, Side::High),
    (1, Side::High),
    (0, Side::Low),
];

const LOCAL_FACETS_3D: [(usize, Side); 6] = [
    (0, Side::High),
    (1, Side::High),
    (2, Side::High),
    (0, Side::Low),
    (1, Side::Low),
    (2, Side::Low),
];

/// Local `(normal axis, side)` table for the codim-1 entities of a cell.
pub fn local_facets(dim: usize) -> &'static [(usize, Side)] {
    match dim {
        2 => &LOCAL_FACETS_2D,
        3 => &LOCAL_FACETS_3D,
        _ => panic!("unsupported dimension {dim}"),
    }
}

/// Reference coordinates of local vertex `v`.
pub fn local_vertex_coords(dim: usize, v: usize) -> [f64; 3] {
    let mut xi = [0.0; 3];
    for (a, c) in xi.iter_mut().enumerate().take(dim) {
        *c = if (v >> a) & 1 == 1 { 1.0 } else { -1.0 };
    }
    xi
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    /// Cells per axis.
    pub n: usize,
    pub origin: [f64; 3],
    pub extent: [f64; 3],
}

impl GridSpec {
    /// `[0, 1]^dim` split into `n` cells per axis.
    pub fn unit(dim: usize, n: usize) -> Self {
        Self {
            dim,
            n,
            origin: [0.0; 3],
            extent: [1.0; 3],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 2 && self.dim != 3 {
            return Err(Error::Dimension(self.dim));
        }
        if self.n == 0 {
            return Err(Error::InvalidGrid("need at least one cell per axis".into()));
        }
        let ext = &self.extent[..self.dim];
        if ext.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive, got {ext:?}"
            )));
        }
        if ext.iter().any(|&e| (e - ext[0]).abs() > 1e-14 * ext[0]) {
            return Err(Error::InvalidGrid(format!(
                "cells must be squares/cubes; got unequal extents {ext:?}"
            )));
        }
        if self.origin[..self.dim].iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin must be finite".into()));
        }
        Ok(())
    }
}

/// A uniform grid of `n^d` square or cubic cells.
#[derive(Debug, Clone)]
pub struct StructuredMesh {
    spec: GridSpec,
    side: f64,
    cell_vertices: Vec<usize>,
    cell_facets: Vec<usize>,
    vertex_boundary: Vec<bool>,
    facet_boundary: Vec<bool>,
    facet_axis: Vec<u8>,
    facet_offsets: [usize; 4],
}

/// Builds the mesh and all incidence tables.
pub fn build_uniform_mesh(spec: GridSpec) -> Result<StructuredMesh> {
    StructuredMesh::new(spec)
}

impl StructuredMesh {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let dim = spec.dim;
        let n = spec.n;
        let side = spec.extent[0] / n as f64;
        let nv = (n + 1).pow(dim as u32);
        let per_axis = (n + 1) * n.pow(dim as u32 - 1);
        let mut facet_offsets = [0; 4];
        for a in 0..dim {
            facet_offsets[a + 1] = facet_offsets[a] + per_axis;
        }
        for a in dim..3 {
            facet_offsets[a + 1] = facet_offsets[a];
        }
        let nf = facet_offsets[dim];

        let mut mesh = Self {
            spec,
            side,
            cell_vertices: Vec::new(),
            cell_facets: Vec::new(),
            vertex_boundary: vec![false; nv],
            facet_boundary: vec![false; nf],
            facet_axis: vec![0; nf],
            facet_offsets,
        };

        for v in 0..nv {
            let idx = mesh.vertex_lattice(v);
            mesh.vertex_boundary[v] = idx[..dim].iter().any(|&i| i == 0 || i == n);
        }
        for a in 0..dim {
            for f in facet_offsets[a]..facet_offsets[a + 1] {
                mesh.facet_axis[f] = a as u8;
                let idx = mesh.facet_lattice(f);
                mesh.facet_boundary[f] = idx[a] == 0 || idx[a] == n;
            }
        }

        let nc = mesh.num_cells();
        let nlv = 1 << dim;
        let nlf = 2 * dim;
        mesh.cell_vertices.reserve(nc * nlv);
        mesh.cell_facets.reserve(nc * nlf);
        for c in 0..nc {
            let ci = mesh.cell_lattice(c);
            for lv in 0..nlv {
                let mut vi = ci;
                for (a, i) in vi.iter_mut().enumerate().take(dim) {
                    *i += (lv >> a) & 1;
                }
                let v = mesh.vertex_index(vi);
                mesh.cell_vertices.push(v);
            }
            for &(axis, s) in local_facets(dim) {
                let mut fi = ci;
                if s == Side::High {
                    fi[axis] += 1;
                }
                let f = mesh.facet_index(axis, fi);
                mesh.cell_facets.push(f);
            }
        }
        Ok(mesh)
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    /// Cells per axis.
    pub fn n(&self) -> usize {
        self.spec.n
    }

    /// Cell side length `s = extent / n`.
    pub fn side(&self) -> f64 {
        self.side
    }

    /// Half the cell side; the scale of the map `ξ = (x - x_c) / h★` onto `[-1, 1]^d`.
    pub fn half(&self) -> f64 {
        0.5 * self.side
    }

    pub fn num_cells(&self) -> usize {
        self.spec.n.pow(self.spec.dim as u32)
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_boundary.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facet_boundary.len()
    }

    pub fn vertices_per_cell(&self) -> usize {
        1 << self.spec.dim
    }

    pub fn facets_per_cell(&self) -> usize {
        2 * self.spec.dim
    }

    pub fn cell_vertices(&self, cell: usize) -> &[usize] {
        let k = self.vertices_per_cell();
        &self.cell_vertices[cell * k..(cell + 1) * k]
    }

    pub fn cell_facets(&self, cell: usize) -> &[usize] {
        let k = self.facets_per_cell();
        &self.cell_facets[cell * k..(cell + 1) * k]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.vertex_boundary[v]
    }

    pub fn is_boundary_facet(&self, f: usize) -> bool {
        self.facet_boundary[f]
    }

    /// Axis of the (fixed, `+x_axis`) normal of facet `f`.
    pub fn facet_axis(&self, f: usize) -> usize {
        self.facet_axis[f] as usize
    }

    pub fn cell_lattice(&self, cell: usize) -> [usize; 3] {
        unrank(cell, [self.spec.n; 3], self.spec.dim)
    }

    pub fn cell_index(&self, idx: [usize; 3]) -> usize {
        rank(idx, [self.spec.n; 3], self.spec.dim)
    }

    pub fn vertex_lattice(&self, v: usize) -> [usize; 3] {
        unrank(v, [self.spec.n + 1; 3], self.spec.dim)
    }

    pub fn vertex_index(&self, idx: [usize; 3]) -> usize {
        rank(idx, [self.spec.n + 1; 3], self.spec.dim)
    }

    fn facet_dims(&self, axis: usize) -> [usize; 3] {
        let mut dims = [self.spec.n; 3];
        dims[axis] = self.spec.n + 1;
        dims
    }

    /// Lattice position of facet `f`; the entry along its normal axis is the plane index.
    pub fn facet_lattice(&self, f: usize) -> [usize; 3] {
        let axis = self.facet_axis(f);
        unrank(
            f - self.facet_offsets[axis],
            self.facet_dims(axis),
            self.spec.dim,
        )
    }

    pub fn facet_index(&self, axis: usize, idx: [usize; 3]) -> usize {
        self.facet_offsets[axis] + rank(idx, self.facet_dims(axis), self.spec.dim)
    }

    pub fn vertex_coords(&self, v: usize) -> [f64; 3] {
        let idx = self.vertex_lattice(v);
        let mut x = [0.0; 3];
        for a in 0..self.spec.dim {
            x[a] = self.spec.origin[a] + self.side * idx[a] as f64;
        }
        x
    }

    pub fn cell_center(&self, cell: usize) -> [f64; 3] {
        let idx = self.cell_lattice(cell);
        let mut x = [0.0; 3];
        for a in 0..self.spec.dim {
            x[a] = self.spec.origin[a] + self.side * (idx[a] as f64 + 0.5);
        }
        x
    }

    /// Physical point of reference coordinates `xi` in `cell`.
    pub fn map_to_physical(&self, cell: usize, xi: &[f64; 3]) -> [f64; 3] {
        let c = self.cell_center(cell);
        let h = self.half();
        let mut x = [0.0; 3];
        for a in 0..self.spec.dim {
            x[a] = c[a] + h * xi[a];
        }
        x
    }

    /// Cells adjacent to facet `f`, low side first. Boundary facets have one.
    pub fn facet_cells(&self, f: usize) -> Vec<usize> {
        let axis = self.facet_axis(f);
        let idx = self.facet_lattice(f);
        let mut cells = Vec::with_capacity(2);
        if idx[axis] > 0 {
            let mut c = idx;
            c[axis] -= 1;
            cells.push(self.cell_index(c));
        }
        if idx[axis] < self.spec.n {
            cells.push(self.cell_index(idx));
        }
        cells
    }
}

fn rank(idx: [usize; 3], dims: [usize; 3], dim: usize) -> usize {
    let mut r = 0;
    for a in (0..dim).rev() {
        r = r * dims[a] + idx[a];
    }
    r
}

fn unrank(mut r: usize, dims: [usize; 3], dim: usize) -> [usize; 3] {
    let mut idx = [0; 3];
    for a in 0..dim {
        idx[a] = r % dims[a];
        r /= dims[a];
    }
    idx
}

/// Global numbering of the Morley degrees of freedom.
///
/// Vertex values come first (index = vertex index), followed by one mean
/// normal-derivative value per codim-1 entity, taken along the fixed `+x_axis`
/// direction. Boundary vertices and boundary entities are constrained to zero.
#[derive(Debug, Clone)]
pub struct DofMap {
    dim: usize,
    num_vertices: usize,
    num_facets: usize,
    free_index: Vec<usize>,
    free_dofs: Vec<usize>,
    facet_axis: Vec<u8>,
}

const CONSTRAINED: usize = usize::MAX;

pub fn build_dof_map(mesh: &StructuredMesh) -> DofMap {
    DofMap::new(mesh)
}

impl DofMap {
    pub fn new(mesh: &StructuredMesh) -> Self {
        let nv = mesh.num_vertices();
        let nf = mesh.num_facets();
        let mut free_index = vec![CONSTRAINED; nv + nf];
        let mut free_dofs = Vec::new();
        for v in 0..nv {
            if !mesh.is_boundary_vertex(v) {
                free_index[v] = free_dofs.len();
                free_dofs.push(v);
            }
        }
        for f in 0..nf {
            if !mesh.is_boundary_facet(f) {
                free_index[nv + f] = free_dofs.len();
                free_dofs.push(nv + f);
            }
        }
        Self {
            dim: mesh.dim(),
            num_vertices: nv,
            num_facets: nf,
            free_index,
            free_dofs,
            facet_axis: mesh.facet_axis.clone(),
        }
    }

    pub fn total(&self) -> usize {
        self.num_vertices + self.num_facets
    }

    pub fn num_free(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn num_vertex_dofs(&self) -> usize {
        self.num_vertices
    }

    pub fn vertex_dof(&self, v: usize) -> usize {
        v
    }

    pub fn facet_dof(&self, f: usize) -> usize {
        self.num_vertices + f
    }

    pub fn is_free(&self, dof: usize) -> bool {
        self.free_index[dof] != CONSTRAINED
    }

    /// Position of `dof` among the free unknowns.
    pub fn free_position(&self, dof: usize) -> Option<usize> {
        match self.free_index[dof] {
            CONSTRAINED => None,
            i => Some(i),
        }
    }

    /// Global indices of the free unknowns, in solver order.
    pub fn free_dofs(&self) -> &[usize] {
        &self.free_dofs
    }

    /// Unit normal used by the derivative DOF of facet `f`.
    pub fn facet_normal(&self, f: usize) -> [f64; 3] {
        let mut n = [0.0; 3];
        n[self.facet_axis[f] as usize] = 1.0;
        n
    }

    /// Global DOFs of `cell` in local order: vertices then facets.
    pub fn cell_dofs(&self, mesh: &StructuredMesh, cell: usize) -> LocalDofs {
        let mut out = LocalDofs {
            idx: [0; MAX_LOCAL_DOFS],
            len: 0,
        };
        for &v in mesh.cell_vertices(cell) {
            out.idx[out.len] = self.vertex_dof(v);
            out.len += 1;
        }
        for &f in mesh.cell_facets(cell) {
            out.idx[out.len] = self.facet_dof(f);
            out.len += 1;
        }
        debug_assert_eq!(out.len, local_dof_count(self.dim));
        out
    }
}

/// Largest local DOF count (the cubic element).
pub const MAX_LOCAL_DOFS: usize = 14;

/// `2^d` vertex values plus `2d` facet derivatives.
pub fn local_dof_count(dim: usize) -> usize {
    (1 << dim) + 2 * dim
}

#[derive(Debug, Clone, Copy)]
pub struct LocalDofs {
    idx: [usize; MAX_LOCAL_DOFS],
    len: usize,
}

impl std::ops::Deref for LocalDofs {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.idx[..self.len]
    }
}

/// One `3^d` block of cells.
#[derive(Debug, Clone)]
pub struct MacroBlock {
    /// Lattice index of the block's lowest cell.
    pub first_cell: [usize; 3],
    /// The `3^d` cells, lexicographic.
    pub cells: Vec<usize>,
    /// The `4^d` mesh vertices `Z_ij(k)`, lexicographic.
    pub vertices: Vec<usize>,
}

/// Partition of a mesh into disjoint `3^d` macro elements.
#[derive(Debug, Clone)]
pub struct MacroGrid {
    dim: usize,
    blocks: Vec<MacroBlock>,
    block_of_cell: Vec<usize>,
}

pub fn macro_partition(mesh: &StructuredMesh) -> Result<MacroGrid> {
    MacroGrid::new(mesh)
}

impl MacroGrid {
    pub fn new(mesh: &StructuredMesh) -> Result<Self> {
        let n = mesh.n();
        if !n.is_multiple_of(3) {
            return Err(Error::MacroDivisibility(n));
        }
        let dim = mesh.dim();
        let m = n / 3;
        let nblocks = m.pow(dim as u32);
        let mut blocks = Vec::with_capacity(nblocks);
        let mut block_of_cell = vec![usize::MAX; mesh.num_cells()];
        for b in 0..nblocks {
            let bi = unrank(b, [m; 3], dim);
            let mut first = [0; 3];
            for a in 0..dim {
                first[a] = 3 * bi[a];
            }
            let cells: Vec<usize> = (0..3usize.pow(dim as u32))
                .map(|l| {
                    let off = unrank(l, [3; 3], dim);
                    let mut c = first;
                    for a in 0..dim {
                        c[a] += off[a];
                    }
                    mesh.cell_index(c)
                })
                .collect();
            let vertices = (0..4usize.pow(dim as u32))
                .map(|l| {
                    let off = unrank(l, [4; 3], dim);
                    let mut v = first;
                    for a in 0..dim {
                        v[a] += off[a];
                    }
                    mesh.vertex_index(v)
                })
                .collect();
            for &c in &cells {
                block_of_cell[c] = b;
            }
            blocks.push(MacroBlock {
                first_cell: first,
                cells,
                vertices,
            });
        }
        Ok(Self {
            dim,
            blocks,
            block_of_cell,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[MacroBlock] {
        &self.blocks
    }

    pub fn block_of_cell(&self, cell: usize) -> usize {
        self.block_of_cell[cell]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mesh(dim: usize, n: usize) -> StructuredMesh {
        build_uniform_mesh(GridSpec::unit(dim, n)).unwrap()
    }

    #[test]
    fn counts_2d() {
        let m = mesh(2, 6);
        assert_eq!(m.num_cells(), 36);
        assert_eq!(m.num_vertices(), 49);
        assert_eq!(m.num_facets(), 84);
        let boundary = (0..m.num_facets()).filter(|&f| m.is_boundary_facet(f)).count();
        assert_eq!(boundary, 24);
    }

    #[test]
    fn single_cell_is_all_boundary() {
        let m = mesh(2, 1);
        assert_eq!((m.num_cells(), m.num_vertices(), m.num_facets()), (1, 4, 4));
        assert!((0..4).all(|f| m.is_boundary_facet(f)));
        assert!((0..4).all(|v| m.is_boundary_vertex(v)));
    }

    #[test]
    fn counts_3d() {
        let m = mesh(3, 2);
        assert_eq!(m.num_cells(), 8);
        assert_eq!(m.num_vertices(), 27);
        assert_eq!(m.num_facets(), 36);
        let boundary = (0..m.num_facets()).filter(|&f| m.is_boundary_facet(f)).count();
        assert_eq!(boundary, 24);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(build_uniform_mesh(GridSpec::unit(2, 0)).is_err());
        assert!(build_uniform_mesh(GridSpec::unit(4, 2)).is_err());
        let mut spec = GridSpec::unit(2, 3);
        spec.extent = [-1.0, -1.0, 1.0];
        assert!(build_uniform_mesh(spec).is_err());
    }

    #[test]
    fn local_edge_order_2d() {
        let m = mesh(2, 3);
        let cell = m.cell_index([1, 1, 0]);
        let c = m.cell_center(cell);
        let expected = [(1usize, -1.0), (0, 1.0), (1, 1.0), (0, -1.0)];
        for (&f, &(axis, sign)) in m.cell_facets(cell).iter().zip(&expected) {
            assert_eq!(m.facet_axis(f), axis);
            let plane = m.facet_lattice(f)[axis] as f64 * m.side();
            assert!((plane - (c[axis] + sign * m.half())).abs() < 1e-14);
        }
    }

    #[test]
    fn local_vertex_positions_match_reference() {
        let m = mesh(3, 2);
        for cell in 0..m.num_cells() {
            for (lv, &v) in m.cell_vertices(cell).iter().enumerate() {
                let xi = local_vertex_coords(3, lv);
                let x = m.map_to_physical(cell, &xi);
                let y = m.vertex_coords(v);
                assert!((0..3).all(|a| (x[a] - y[a]).abs() < 1e-14));
            }
        }
    }

    #[test]
    fn dof_counts() {
        let m = mesh(2, 6);
        let d = build_dof_map(&m);
        assert_eq!((d.total(), d.num_free()), (133, 85));
        let m = mesh(2, 1);
        let d = build_dof_map(&m);
        assert_eq!((d.total(), d.num_free()), (8, 0));
        let m = mesh(3, 3);
        let d = build_dof_map(&m);
        assert_eq!((d.total(), d.num_free()), (172, 62));
    }

    #[test]
    fn facet_normals_point_along_axes() {
        let m = mesh(3, 2);
        let d = build_dof_map(&m);
        for f in 0..m.num_facets() {
            let n = d.facet_normal(f);
            assert_eq!(n[m.facet_axis(f)], 1.0);
            assert_eq!(n.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn macro_partition_sizes() {
        let g = macro_partition(&mesh(2, 6)).unwrap();
        assert_eq!(g.blocks().len(), 4);
        assert!(g.blocks().iter().all(|b| b.vertices.len() == 16 && b.cells.len() == 9));
        let g = macro_partition(&mesh(2, 3)).unwrap();
        assert_eq!(g.blocks().len(), 1);
        let g = macro_partition(&mesh(3, 6)).unwrap();
        assert_eq!(g.blocks().len(), 8);
        assert!(g.blocks().iter().all(|b| b.vertices.len() == 64));
    }

    #[test]
    fn macro_partition_requires_multiple_of_three() {
        let err = macro_partition(&mesh(2, 5)).unwrap_err();
        assert!(err.to_string().contains("3 | N"));
    }

    #[test]
    fn macro_vertices_are_spaced_by_one_cell() {
        let m = mesh(2, 6);
        let g = macro_partition(&m).unwrap();
        let b = &g.blocks()[3];
        let z0 = m.vertex_coords(b.vertices[0]);
        let z1 = m.vertex_coords(b.vertices[1]);
        let z4 = m.vertex_coords(b.vertices[4]);
        assert!((z1[0] - z0[0] - m.side()).abs() < 1e-14);
        assert!((z4[1] - z0[1] - m.side()).abs() < 1e-14);
        assert_eq!(z0[0], 0.5);
    }
}
