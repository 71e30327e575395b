//! JSON run configuration. Every field is optional; omitted fields take the
//! benchmark defaults.

use std::path::Path;

use cutbiot_core::mesh::{translate_box, MeshConfig};
use cutbiot_core::{
    CaseKind, DiscretizationOptions, Error, LevelSetDomain, PhysicalParams, Result,
    StabilizationParams,
};
use serde::{Deserialize, Serialize};

/// Finest mesh accepted without `--allow-fine`.
pub const MAX_DEFAULT_N: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub radius: f64,
    pub r0: f64,
    pub r1: f64,
    pub petals: u32,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        GeometryConfig {
            radius: 0.95,
            r0: 0.7,
            r1: 0.18,
            petals: 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeshSection {
    pub box_lo: [f64; 2],
    pub box_hi: [f64; 2],
    /// Cells per direction for `solve`.
    pub n: usize,
    /// Refinement ladder for `convergence`.
    pub ladder: Vec<usize>,
    /// Initial cut-cell sub-grid depth.
    pub depth: usize,
    /// Classification probes per cell edge.
    pub n_probe: usize,
    /// Box shift in units of `h` for `solve`.
    pub shift: f64,
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            box_lo: [-1.0, -1.0],
            box_hi: [1.0, 1.0],
            n: 32,
            ladder: vec![16, 32, 64, 128],
            depth: 3,
            n_probe: 8,
            shift: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationSection {
    pub degree_u: usize,
    pub degree_f: usize,
    pub quad_order: usize,
    pub error_order: usize,
}

impl Default for DiscretizationSection {
    fn default() -> Self {
        let d = DiscretizationOptions::default();
        DiscretizationSection {
            degree_u: d.degree_u,
            degree_f: d.degree_f,
            quad_order: d.quad_order,
            error_order: d.error_order,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsSection {
    pub mu: f64,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub conductivity: f64,
}

impl Default for ParamsSection {
    fn default() -> Self {
        ParamsSection {
            mu: 1.0,
            lambda: 1.0,
            conductivity: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilizationSection {
    pub gamma_u: f64,
    pub gamma_p: f64,
    pub gamma_1: f64,
    pub gamma_2: f64,
    pub ghost_order: usize,
    pub enabled: bool,
}

impl Default for StabilizationSection {
    fn default() -> Self {
        let s = StabilizationParams::default();
        StabilizationSection {
            gamma_u: s.gamma_u,
            gamma_p: s.gamma_p,
            gamma_1: s.gamma_ghost,
            gamma_2: s.gamma_ghost_pressure,
            ghost_order: s.ghost_order,
            enabled: s.enabled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSection {
    /// Estimate the spectral condition number.
    pub condition: bool,
    /// Write `points.csv` with the solution at cell centers inside the domain.
    pub points: bool,
    /// Write `boundary.csv` with the boundary quadrature.
    pub boundary: bool,
    /// Write `cells.csv` with the cell classification.
    pub classification: bool,
    /// Write `matrix.mtx` in MatrixMarket format.
    pub matrix: bool,
}

impl Default for SolveSection {
    fn default() -> Self {
        SolveSection {
            condition: true,
            points: true,
            boundary: false,
            classification: false,
            matrix: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    /// `[lambda, K]` pairs; each is run over the whole ladder.
    pub combinations: Vec<[f64; 2]>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        ConvergenceSection {
            combinations: vec![[1.0, 1.0], [1.0, 1e-8], [1e8, 1.0], [1e8, 1e-8]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub n: usize,
    /// Explicit shifts in units of `h`; overrides the generated family.
    pub deltas: Option<Vec<f64>>,
    /// The generated family is `delta_i = step * (start + stride * i)` for
    /// `i < count`.
    pub count: usize,
    pub start: usize,
    pub stride: usize,
    pub step: f64,
    /// Power iterations per condition estimate.
    pub condition_iters: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            n: 60,
            deltas: None,
            count: 64,
            start: 1,
            stride: 31,
            step: 5e-4,
            condition_iters: 200,
        }
    }
}

impl SweepSection {
    pub fn delta_values(&self) -> Vec<f64> {
        match &self.deltas {
            Some(d) => d.clone(),
            None => (0..self.count)
                .map(|i| (self.start + self.stride * i) as f64 * self.step)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    pub mesh: MeshSection,
    pub discretization: DiscretizationSection,
    pub params: ParamsSection,
    pub stabilization: StabilizationSection,
    /// Manufactured solution: `solenoidal` or `compressible`.
    pub case: CaseName,
    pub solve: SolveSection,
    pub convergence: ConvergenceSection,
    pub sweep: SweepSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaseName(pub String);

impl Default for CaseName {
    fn default() -> Self {
        CaseName(CaseKind::Solenoidal.as_str().to_string())
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("malformed config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without meshing.
    pub fn validate(&self) -> Result<()> {
        self.domain()?;
        self.options().validate()?;
        self.physical()?;
        self.case_kind()?;
        let s = &self.stabilization;
        for (name, v) in [
            ("gamma_u", s.gamma_u),
            ("gamma_p", s.gamma_p),
            ("gamma_1", s.gamma_1),
            ("gamma_2", s.gamma_2),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be non-negative, got {v}")));
            }
        }
        if s.ghost_order == 0 || s.ghost_order > self.discretization.degree_u {
            return Err(Error::Config(format!(
                "ghost_order must be in 1..={}, got {}",
                self.discretization.degree_u, s.ghost_order
            )));
        }
        for &[l, k] in &self.convergence.combinations {
            PhysicalParams::new(self.params.mu, l, k)?;
        }
        if self.sweep.delta_values().iter().any(|d| !d.is_finite()) {
            return Err(Error::Config("sweep shifts must be finite".into()));
        }
        Ok(())
    }

    pub fn domain(&self) -> Result<LevelSetDomain> {
        let g = &self.geometry;
        LevelSetDomain::circle_minus_flower(g.radius, g.r0, g.r1, g.petals)
    }

    pub fn options(&self) -> DiscretizationOptions {
        let d = &self.discretization;
        DiscretizationOptions {
            degree_u: d.degree_u,
            degree_f: d.degree_f,
            quad_order: d.quad_order,
            error_order: d.error_order,
            depth: self.mesh.depth,
            n_probe: self.mesh.n_probe,
        }
    }

    pub fn physical(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.params.mu, self.params.lambda, self.params.conductivity)
    }

    pub fn stabilization(&self, no_stab: bool) -> StabilizationParams {
        let s = &self.stabilization;
        StabilizationParams {
            gamma_u: s.gamma_u,
            gamma_p: s.gamma_p,
            gamma_ghost: s.gamma_1,
            gamma_ghost_pressure: s.gamma_2,
            ghost_order: s.ghost_order,
            enabled: s.enabled && !no_stab,
        }
    }

    pub fn case_kind(&self) -> Result<CaseKind> {
        CaseKind::parse(&self.case.0)
    }

    pub fn mesh_config(&self, n: usize, shift: f64, allow_fine: bool) -> Result<MeshConfig> {
        if n > MAX_DEFAULT_N && !allow_fine {
            return Err(Error::Config(format!(
                "N={n} exceeds {MAX_DEFAULT_N}; pass --allow-fine to run it"
            )));
        }
        let base = MeshConfig::new(self.mesh.box_lo, self.mesh.box_hi, n);
        Ok(translate_box(&base, shift))
    }
}
