//! JSON run configuration. Unknown keys are rejected everywhere.

use mfpack_core::construction::{ConstructionParams, Growth, SelectedFamily, SelectionPolicy};
use mfpack_core::localdim::{SearchBudget, TParams, TraceTarget, URule};
use mfpack_core::measure::{MeasureModel, WeightTable};
use serde::Deserialize;
use std::sync::Arc;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub model: ModelSpec,
    pub construct: Option<ConstructOpts>,
    pub mass: Option<MassOpts>,
    pub spectrum: Option<SpectrumOpts>,
    pub trace: Option<TraceOpts>,
    pub levelset: Option<LevelSetOpts>,
    pub lquantity: Option<LQuantityOpts>,
    pub tmu: Option<TmuOpts>,
    pub compare_bounds: Option<CompareOpts>,
    pub oracle: Option<OracleOpts>,
}

/// Construction parameters as they appear in config files; `generations`
/// rides along as the default eager build depth.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub beta1: f64,
    pub gamma1: f64,
    pub beta2: f64,
    pub gamma2: f64,
    pub p0: f64,
    pub p1: f64,
    pub n0: u64,
    pub growth: Growth,
    #[serde(default)]
    pub generations: Option<usize>,
    #[serde(default)]
    pub selection_policy: Option<SelectionPolicy>,
    #[serde(default)]
    pub order_cap: Option<u64>,
}

impl ParamsSpec {
    pub fn to_params(&self) -> ConstructionParams {
        ConstructionParams {
            beta1: self.beta1,
            gamma1: self.gamma1,
            beta2: self.beta2,
            gamma2: self.gamma2,
            p0: self.p0,
            p1: self.p1,
            n0: self.n0,
            growth: self.growth,
            selection_policy: self.selection_policy.unwrap_or_default(),
            order_cap: self.order_cap.unwrap_or(4096),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Uniform,
    Cascade { p0: f64, p1: f64 },
    Selective { params: ParamsSpec },
    Explicit {
        path: String,
        #[serde(default)]
        renormalize: bool,
    },
}

impl ModelSpec {
    /// Instantiate the measure model; selective params are validated here.
    pub fn build(&self) -> mfpack_core::Result<MeasureModel> {
        match self {
            ModelSpec::Uniform => Ok(MeasureModel::Uniform),
            ModelSpec::Cascade { p0, p1 } => MeasureModel::cascade(*p0, *p1),
            ModelSpec::Selective { params } => {
                let fam = SelectedFamily::new(params.to_params())?;
                Ok(MeasureModel::Selective(Arc::new(fam)))
            }
            ModelSpec::Explicit { path, renormalize } => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    mfpack_core::Error::ModelIntegrity(format!("reading {path}: {e}"))
                })?;
                Ok(MeasureModel::Explicit(Arc::new(WeightTable::parse(&text, *renormalize)?)))
            }
        }
    }

    pub fn selective_params(&self) -> Option<&ParamsSpec> {
        match self {
            ModelSpec::Selective { params } => Some(params),
            _ => None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstructOpts {
    pub generations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MassOpts {
    pub words: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumOpts {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub n_min: usize,
    pub n_max: usize,
    /// When set, also dump partition-sum rows (n, q, t, log2_S) at this t.
    #[serde(default)]
    pub partition_t: Option<f64>,
    /// Where the partition dump goes (defaults to stdout alongside).
    #[serde(default)]
    pub partition_out: Option<String>,
}

impl SpectrumOpts {
    pub fn q_grid(&self) -> Vec<f64> {
        let mut qs = Vec::new();
        let mut q = self.q_min;
        while q <= self.q_max + 1e-9 {
            qs.push(q);
            q += self.q_step;
        }
        qs
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceOpts {
    pub target: TraceTarget,
    pub orders: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSetOpts {
    pub alpha: f64,
    pub eta: f64,
    pub p: u64,
    pub depth: usize,
    #[serde(default = "default_slack")]
    pub limsup_slack: f64,
    /// Explicit candidate points; the model's default pool when absent.
    #[serde(default)]
    pub candidates: Option<Vec<f64>>,
}

fn default_slack() -> f64 {
    0.2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LQuantityOpts {
    pub alpha: f64,
    pub eta: f64,
    pub p: u64,
    pub depth: usize,
    pub k: usize,
    #[serde(default)]
    pub u_rule: URule,
    #[serde(default)]
    pub budget: SearchBudget,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TmuOpts {
    pub alpha: f64,
    pub etas: Vec<f64>,
    pub ps: Vec<u64>,
    pub depth: usize,
    #[serde(default)]
    pub budget: SearchBudget,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareOpts {
    pub alpha: f64,
    pub spectrum: SpectrumGrid,
    #[serde(default)]
    pub t: TParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub q_step: f64,
    pub n_min: usize,
    pub n_max: usize,
}

impl SpectrumGrid {
    pub fn q_grid(&self) -> Vec<f64> {
        let mut qs = Vec::new();
        let mut q = self.q_min;
        while q <= self.q_max + 1e-9 {
            qs.push(q);
            q += self.q_step;
        }
        qs
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleOpts {
    pub instances: usize,
    #[serde(default = "default_oracle_points")]
    pub max_points: usize,
    #[serde(default = "default_oracle_radii")]
    pub max_radii: usize,
    #[serde(default = "default_oracle_depth")]
    pub depth: usize,
}

fn default_oracle_points() -> usize {
    8
}
fn default_oracle_radii() -> usize {
    4
}
fn default_oracle_depth() -> usize {
    16
}
