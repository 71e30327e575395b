#![allow(dead_code)]

use std::sync::Arc;

use cutbiot_core::geometry::{HalfPlane, WholeSpace};
use cutbiot_core::mesh::translate_box;
use cutbiot_core::{Discretization, DiscretizationOptions, LevelSetDomain, MeshConfig};

pub const AREA: f64 = std::f64::consts::PI * (0.95 * 0.95 - 0.49 - 0.5 * 0.18 * 0.18);
pub const FLOWER_AREA: f64 = std::f64::consts::PI * (0.49 + 0.5 * 0.18 * 0.18);

pub fn benchmark() -> LevelSetDomain {
    LevelSetDomain::circle_minus_flower(0.95, 0.7, 0.18, 5).unwrap()
}

pub fn disc(n: usize) -> Discretization {
    shifted(n, 0.0)
}

pub fn shifted(n: usize, delta: f64) -> Discretization {
    Discretization::new(
        &translate_box(&MeshConfig::unit_box(n), delta),
        benchmark(),
        DiscretizationOptions::default(),
    )
    .unwrap()
}

/// The full box `[-1, 1]^2` without any cut.
pub fn full_box(n: usize) -> Discretization {
    Discretization::new(
        &MeshConfig::unit_box(n),
        LevelSetDomain::new(Arc::new(WholeSpace), None),
        DiscretizationOptions::default(),
    )
    .unwrap()
}

pub fn half_plane(normal: [f64; 2], offset: f64) -> LevelSetDomain {
    LevelSetDomain::new(Arc::new(HalfPlane { normal, offset }), None)
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
