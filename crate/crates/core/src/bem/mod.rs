//! Surface-only liquid solver on closed triangle meshes.

pub mod helmholtz;
pub mod integrals;
pub mod laplace;
pub mod mesh;
pub mod remesh;

pub use helmholtz::{boundary_velocity_integral, full_helmholtz, helmholtz, partial_helmholtz, HdMode};
pub use integrals::{hat_integrals, singular_triangle_integral, HatIntegrals};
pub use laplace::{
    assemble_laplace_system, neumann_data, project_surface, solve_boundary_pressure, update_surface_velocity,
    BemSolveResult, LaplaceSystem,
};
pub use mesh::{Label, SurfaceMesh, VertexKind};
pub use remesh::{advect_and_remesh, intersecting_pairs};
