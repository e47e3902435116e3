//! The rectangular (2D) and cubic (3D) Morley element on `[-1, 1]^d`.

mod basis;
mod monomials;
mod quadrature;
mod stiffness;

pub use basis::{functional_condition, functional_matrix, reference_basis, NodalBasis};
pub(crate) use basis::apply_functionals;
pub use monomials::{MonomialSet, MultiIndex};
pub use quadrature::{gauss_legendre, gauss_rule, QuadRule};
pub use stiffness::{dof_scaling, local_stiffness, LocalStiffness};
