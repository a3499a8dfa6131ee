//! Finite volume element discretizations of `u_t + A u = 0` on triangulated
//! polygons with homogeneous Dirichlet data, where `A = -div(alpha grad) + beta`.
//!
//! The crate covers mesh generation (symmetric, perturbed and counterexample
//! families), assembly of the Galerkin and finite volume forms, the discrete
//! operators built from them, semidiscrete and fully discrete time evolution,
//! and the convergence studies used to measure observed orders.

pub mod analysis;
pub mod assembly;
pub mod eigen;
pub mod error;
pub mod field;
pub mod geometry;
pub mod krylov;
pub mod mesh;
pub mod operators;
pub mod quadrature;
pub mod sparse;
pub mod timestepping;

pub use assembly::CoefficientField;
pub use eigen::{EigenCount, EigenDecomposition};
pub use error::{FvemError, Result};
pub use field::NodalField;
pub use geometry::{Mat2, Point};
pub use mesh::{Diagonal, Mesh, MeshFamily, Subdomain};
pub use operators::{Discretization, OperatorKind, RitzSource};
pub use quadrature::QuadratureRule;
pub use sparse::{CgOptions, CsrMatrix};
pub use timestepping::{PropagationMethod, Propagator, PropagatorOptions, Storage, TimeGrid};
