//! Rectangular (2D) and cubic (3D) Morley elements for the clamped
//! biharmonic problem on uniform grids of the unit square and cube.
//!
//! The pipeline per refinement level: build the mesh and DOF map, assemble
//! and solve, interpolate the exact solution with and without the cubic
//! correction, recover a macro-element cubic from vertex values, and measure
//! everything in the broken H² seminorm. [`analysis::run_study`] strings it
//! together.

pub mod analysis;
pub mod checks;
pub mod element;
pub mod error;
pub mod fields;
pub mod mesh;
pub mod postprocess;
pub mod system;

pub use analysis::{
    broken_h2_error, compare_to_reference, run_study, ConvergenceReport, ErrorRecord, Operand,
    Quantity, ReferenceTable, StudyOptions, Tolerances,
};
pub use element::{reference_basis, NodalBasis, QuadRule};
pub use error::{Error, Result};
pub use fields::{ManufacturedSolution, PiecewisePoly, SmoothField};
pub use mesh::{build_dof_map, build_uniform_mesh, DofMap, GridSpec, MacroGrid, StructuredMesh};
pub use postprocess::{postprocess, vertex_values_of, VertexSource};
pub use system::{FEField, SolveOptions, SolverMethod, SparseSymMatrix};
