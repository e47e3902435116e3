use crate::element::{MonomialSet, MultiIndex};
use crate::error::{Error, Result};
use crate::mesh::StructuredMesh;

/// A cell-wise polynomial on a uniform mesh, stored per cell in the
/// reference coordinates `ξ = (x - x_c) / h★`.
#[derive(Debug, Clone)]
pub struct PiecewisePoly {
    dim: usize,
    n: usize,
    half: f64,
    monomials: MonomialSet,
    coeffs: Vec<f64>,
}

impl PiecewisePoly {
    pub fn zeros(mesh: &StructuredMesh, monomials: MonomialSet) -> Self {
        let len = mesh.num_cells() * monomials.len();
        Self::from_coeffs(mesh, monomials, vec![0.0; len])
    }

    pub fn from_coeffs(mesh: &StructuredMesh, monomials: MonomialSet, coeffs: Vec<f64>) -> Self {
        assert_eq!(monomials.dim(), mesh.dim());
        assert_eq!(coeffs.len(), mesh.num_cells() * monomials.len());
        Self {
            dim: mesh.dim(),
            n: mesh.n(),
            half: mesh.half(),
            monomials,
            coeffs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_cells(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn monomials(&self) -> &MonomialSet {
        &self.monomials
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        let k = self.monomials.len();
        &self.coeffs[cell * k..(cell + 1) * k]
    }

    pub fn cell_mut(&mut self, cell: usize) -> &mut [f64] {
        let k = self.monomials.len();
        &mut self.coeffs[cell * k..(cell + 1) * k]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Errors unless this field lives on a mesh of the same shape as `mesh`.
    pub fn check_mesh(&self, mesh: &StructuredMesh) -> Result<()> {
        if self.dim != mesh.dim() || self.n != mesh.n() || self.half != mesh.half() {
            return Err(Error::Operand(format!(
                "piecewise field on a {}D mesh with N = {} does not match {}D mesh with N = {}",
                self.dim,
                self.n,
                mesh.dim(),
                mesh.n()
            )));
        }
        Ok(())
    }

    pub fn value(&self, cell: usize, xi: &[f64; 3]) -> f64 {
        self.monomials.eval(self.cell(cell), xi, [0, 0, 0])
    }

    /// Physical derivative `∂^α` at reference point `ξ` of `cell`.
    pub fn derivative(&self, cell: usize, xi: &[f64; 3], alpha: MultiIndex) -> f64 {
        let order: i32 = alpha.iter().map(|&a| a as i32).sum();
        self.monomials.eval(self.cell(cell), xi, alpha) / self.half.powi(order)
    }

    /// Physical Hessian at reference point `ξ` of `cell`.
    pub fn hessian(&self, cell: usize, xi: &[f64; 3]) -> [[f64; 3]; 3] {
        let mut h = self.monomials.hessian(self.cell(cell), xi);
        let s = 1.0 / (self.half * self.half);
        for row in h.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        h
    }

    /// `self - other`, cell by cell; both must share the monomial set.
    pub fn sub(&self, other: &PiecewisePoly) -> Result<PiecewisePoly> {
        if self.monomials != other.monomials || self.coeffs.len() != other.coeffs.len() {
            return Err(Error::Operand("incompatible piecewise fields".into()));
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(PiecewisePoly {
            coeffs,
            monomials: self.monomials.clone(),
            ..*self
        })
    }
}
