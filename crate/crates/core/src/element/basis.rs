use nalgebra::DMatrix;

use super::monomials::{mean_power, MonomialSet, MultiIndex};
use crate::error::{Error, Result};
use crate::mesh::{local_dof_count, local_facets, local_vertex_coords};

/// Morley nodal basis on the reference cube `[-1, 1]^d`.
///
/// Functionals, in order: the `2^d` vertex values (lexicographic), then for
/// each local facet the mean over the facet of `∂/∂ξ_a`, where `a` is the
/// facet's normal axis. The derivative is taken along `+ξ_a` on both facets
/// of a pair, matching the fixed global normals of [`crate::mesh::DofMap`].
#[derive(Debug, Clone)]
pub struct NodalBasis {
    dim: usize,
    monomials: MonomialSet,
    /// Row `i` holds the monomial coefficients of basis function `i`.
    coeffs: Vec<f64>,
}

pub fn reference_basis(dim: usize) -> Result<NodalBasis> {
    NodalBasis::reference(dim)
}

impl NodalBasis {
    pub fn reference(dim: usize) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::Dimension(dim));
        }
        let monomials = MonomialSet::morley(dim);
        let f = functional_matrix(&monomials);
        let inv = f.try_inverse().ok_or(Error::SingularBasis)?;
        // F C = I, so basis function i has coefficients C[:, i].
        let n = monomials.len();
        let mut coeffs = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                coeffs[i * n + j] = inv[(j, i)];
            }
        }
        Ok(Self {
            dim,
            monomials,
            coeffs,
        })
    }

    /// Test hook: the same basis with one coefficient shifted.
    #[doc(hidden)]
    pub fn perturbed(mut self, function: usize, monomial: usize, delta: f64) -> Self {
        let n = self.len();
        self.coeffs[function * n + monomial] += delta;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn monomials(&self) -> &MonomialSet {
        &self.monomials
    }

    /// Monomial coefficients of basis function `i`.
    pub fn function(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.coeffs[i * n..(i + 1) * n]
    }

    /// Monomial coefficients of `Σ dofs[i] φ_i` (reference DOFs).
    pub fn combine(&self, dofs: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, &d) in dofs.iter().enumerate() {
            if d != 0.0 {
                for (o, c) in out.iter_mut().zip(self.function(i)) {
                    *o += d * c;
                }
            }
        }
        out
    }

    /// Reference derivative of `Σ dofs[i] φ_i` at `ξ`; orders above 3 are rejected.
    pub fn eval_local(&self, dofs: &[f64], xi: &[f64; 3], alpha: MultiIndex) -> Result<f64> {
        let c = self.combine(dofs);
        self.monomials.eval_checked(&c, xi, alpha)
    }

    /// Applies the nodal functionals to a polynomial given in the monomial set.
    pub fn functionals_of(&self, poly: &[f64]) -> Vec<f64> {
        apply_functionals(&self.monomials, poly)
    }
}

/// `F[i][j]` = functional `i` applied to monomial `j`.
pub fn functional_matrix(monomials: &MonomialSet) -> DMatrix<f64> {
    let dim = monomials.dim();
    let nloc = local_dof_count(dim);
    assert_eq!(nloc, monomials.len(), "functional count must match the space");
    let mut f = DMatrix::zeros(nloc, nloc);
    for (j, &e) in monomials.exponents().iter().enumerate() {
        let col = monomial_functionals(dim, e);
        for i in 0..nloc {
            f[(i, j)] = col[i];
        }
    }
    f
}

/// Nodal functionals of a single monomial, in closed form.
fn monomial_functionals(dim: usize, e: MultiIndex) -> Vec<f64> {
    let mut out = Vec::with_capacity(local_dof_count(dim));
    for v in 0..(1 << dim) {
        let xi = local_vertex_coords(dim, v);
        out.push((0..dim).map(|a| xi[a].powi(e[a] as i32)).product());
    }
    for &(axis, side) in local_facets(dim) {
        let ea = e[axis];
        if ea == 0 {
            out.push(0.0);
            continue;
        }
        let mut m = ea as f64 * side.coordinate().powi(ea as i32 - 1);
        for b in (0..dim).filter(|&b| b != axis) {
            m *= mean_power(e[b]);
        }
        out.push(m);
    }
    out
}

pub(crate) fn apply_functionals(monomials: &MonomialSet, poly: &[f64]) -> Vec<f64> {
    let dim = monomials.dim();
    let mut out = vec![0.0; local_dof_count(dim)];
    for (&c, &e) in poly.iter().zip(monomials.exponents()) {
        if c != 0.0 {
            for (o, v) in out.iter_mut().zip(monomial_functionals(dim, e)) {
                *o += c * v;
            }
        }
    }
    out
}

/// 2-norm condition number of the functional matrix.
pub fn functional_condition(dim: usize) -> f64 {
    let f = functional_matrix(&MonomialSet::morley(dim));
    let sv = f.singular_values();
    sv.max() / sv.min()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_unit_vertex_values() {
        for dim in [2, 3] {
            let m = MonomialSet::morley(dim);
            let mut p = vec![0.0; m.len()];
            p[0] = 1.0;
            let d = apply_functionals(&m, &p);
            let nv = 1 << dim;
            assert!(d[..nv].iter().all(|&x| x == 1.0));
            assert!(d[nv..].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn cubic_functionals_2d() {
        // ξ1³: vertex values ±1, ∂/∂ξ1 = 3ξ1² = 3 on both vertical edges.
        let m = MonomialSet::morley(2);
        let mut p = vec![0.0; 8];
        p[m.position([3, 0, 0]).unwrap()] = 1.0;
        let d = apply_functionals(&m, &p);
        assert_eq!(&d[..4], &[-1.0, 1.0, -1.0, 1.0]);
        // e1 bottom, e2 right, e3 top, e4 left
        assert_eq!(&d[4..], &[0.0, 3.0, 0.0, 3.0]);
    }

    #[test]
    fn duality() {
        for dim in [2, 3] {
            let b = reference_basis(dim).unwrap();
            for i in 0..b.len() {
                let d = b.functionals_of(b.function(i));
                for (j, v) in d.iter().enumerate() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-12, "dim {dim}: D_{j}(φ_{i}) = {v}");
                }
            }
        }
    }

    #[test]
    fn conditioning_is_moderate() {
        for dim in [2, 3] {
            let c = functional_condition(dim);
            assert!(c.is_finite() && c < 1e3, "dim {dim}: cond {c}");
        }
    }

    #[test]
    fn eval_local_on_constant() {
        let b = reference_basis(2).unwrap();
        let dofs = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        let v = b.eval_local(&dofs, &[0.3, -0.6, 0.0], [0, 0, 0]).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(b.eval_local(&dofs, &[0.0; 3], [2, 2, 0]).is_err());
    }

    #[test]
    fn perturbation_breaks_duality() {
        let b = reference_basis(2).unwrap().perturbed(3, 4, 1e-3);
        let d = b.functionals_of(b.function(3));
        assert!((d[3] - 1.0).abs() > 1e-6 || d.iter().enumerate().any(|(j, v)| j != 3 && v.abs() > 1e-6));
    }
}
