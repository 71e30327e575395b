//! Shared fixtures for the pipeline benchmarks.

use cutbiot_core::{
    make_case, CaseKind, Discretization, DiscretizationOptions, LevelSetDomain, ManufacturedCase, MeshConfig,
    PhysicalParams,
};

/// The circle-minus-flower benchmark domain.
pub fn domain() -> LevelSetDomain {
    LevelSetDomain::circle_minus_flower(0.95, 0.7, 0.18, 5).expect("benchmark geometry is valid")
}

pub fn discretization(n: usize) -> Discretization {
    Discretization::new(&MeshConfig::unit_box(n), domain(), DiscretizationOptions::default())
        .expect("benchmark discretization builds")
}

pub fn case() -> ManufacturedCase {
    make_case(CaseKind::Solenoidal, PhysicalParams::new(1.0, 1.0, 1.0).expect("unit parameters"))
        .expect("unit parameters")
}
