//! Cut finite element discretization of the three-field total-pressure
//! Biot problem on level-set domains.

pub mod discretization;
pub mod error;
pub mod forms;
pub mod geometry;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod spaces;
pub mod sparse;
pub mod verification;

pub use discretization::{Discretization, DiscretizationOptions};
pub use error::{Error, Result};
pub use forms::{
    assemble_system, BlockSystem, BoundaryData, FormBlocks, PhysicalParams, StabilizationParams,
    ZeroData,
};
pub use geometry::{BoundaryPart, CutRule, CutSettings, LevelSetDomain, Point};
pub use mesh::{ActiveMesh, BackgroundMesh, CellTag, MeshConfig};
pub use solver::{Factorization, SolveReport};
pub use spaces::{FeSpace, FieldLayout};
pub use sparse::SparseMatrix;
pub use verification::{
    eoc, error_norms, galerkin_residual, make_case, solve_manufactured, CaseKind, ErrorReport,
    ExactSolution, ManufacturedCase,
};
