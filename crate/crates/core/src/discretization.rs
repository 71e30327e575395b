//! Background mesh, active cells, quadrature and the three finite element
//! spaces for one mesh level.

use crate::error::{Error, Result};
use crate::geometry::{CutRule, CutSettings, LevelSetDomain};
use crate::mesh::{classify, ActiveMesh, BackgroundMesh, MeshConfig};
use crate::spaces::{FeSpace, FieldLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiscretizationOptions {
    /// Displacement degree `k`; the total pressure uses `k - 1`.
    pub degree_u: usize,
    /// Fluid-pressure degree `l`.
    pub degree_f: usize,
    /// Exactness of the assembly quadrature on affine pieces.
    pub quad_order: usize,
    /// Exactness of the quadrature used for error norms.
    pub error_order: usize,
    /// Initial sub-grid depth of the cut-cell rules.
    pub depth: usize,
    /// Probe grid resolution per cell for classification.
    pub n_probe: usize,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        DiscretizationOptions {
            degree_u: 2,
            degree_f: 2,
            quad_order: 5,
            error_order: 7,
            depth: 3,
            n_probe: 8,
        }
    }
}

impl DiscretizationOptions {
    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.degree_u) {
            return Err(Error::config(format!(
                "displacement degree must be 2 or 3, got {}",
                self.degree_u
            )));
        }
        if !(1..=3).contains(&self.degree_f) {
            return Err(Error::config(format!(
                "fluid-pressure degree must be in 1..=3, got {}",
                self.degree_f
            )));
        }
        if self.quad_order == 0 || self.error_order == 0 {
            return Err(Error::config("quadrature order must be positive"));
        }
        if self.depth > crate::geometry::MAX_SUBDIVISION_DEPTH {
            return Err(Error::config(format!(
                "sub-grid depth {} exceeds {}",
                self.depth,
                crate::geometry::MAX_SUBDIVISION_DEPTH
            )));
        }
        Ok(())
    }

    pub fn cut_settings(&self) -> CutSettings {
        CutSettings {
            order: self.quad_order,
            depth: self.depth,
        }
    }

    pub fn error_settings(&self) -> CutSettings {
        CutSettings {
            order: self.error_order,
            depth: self.depth,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: BackgroundMesh,
    pub domain: LevelSetDomain,
    pub active: ActiveMesh,
    pub rules: CutRule,
    pub u: FeSpace,
    pub t: FeSpace,
    pub f: FeSpace,
    pub layout: FieldLayout,
    pub options: DiscretizationOptions,
}

impl Discretization {
    pub fn new(config: &MeshConfig, domain: LevelSetDomain, options: DiscretizationOptions) -> Result<Self> {
        options.validate()?;
        let mesh = BackgroundMesh::new(config)?;
        let active = classify(&mesh, &domain, options.n_probe)?;
        let rules = CutRule::build(&active, &domain, options.cut_settings())?;
        let u = FeSpace::new(&active, options.degree_u, 2)?;
        let t = FeSpace::new(&active, options.degree_u - 1, 1)?;
        let f = FeSpace::new(&active, options.degree_f, 1)?;
        let layout = FieldLayout::new(&u, &t, &f)?;
        Ok(Discretization {
            mesh,
            domain,
            active,
            rules,
            u,
            t,
            f,
            layout,
            options,
        })
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    pub fn n_dofs(&self) -> usize {
        self.layout.total()
    }

    /// Higher-order rules on the same active cells for error evaluation.
    pub fn error_rules(&self) -> Result<CutRule> {
        CutRule::build(&self.active, &self.domain, self.options.error_settings())
    }
}
