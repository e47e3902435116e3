//! Manufactured solutions, interpolation operators and cell-wise polynomial fields.

mod interpolate;
mod piecewise;
mod solution;

pub use interpolate::{
    canonical_interpolate, correction_coeffs, correction_dof_mismatch, correction_facet,
    correction_polynomial, corrected_from_canonical, corrected_interpolate, field_to_piecewise,
    CorrectedInterpolant, CorrectionCoeffs, FACE_QUAD,
};
pub use piecewise::PiecewisePoly;
pub use solution::{GlobalPoly, ManufacturedSolution, SmoothField};
