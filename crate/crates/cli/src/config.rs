//! Run configuration: one JSON document with a `task` discriminator.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use unfold_homog::cell::{CellBoundary, SolverConfig, DEFAULT_LADDER};
use unfold_homog::harness::{Competitors, Datum, EnvelopeSampling};
use unfold_homog::integrand::{Coefficient, IntegrandSpec};
use unfold_homog::young::YoungFunction;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub schema_version: u32,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub task: Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum Task {
    Young(YoungTask),
    Hom(HomTask),
    Verify(VerifyTask),
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Young(_) => "young",
            Task::Hom(_) => "hom",
            Task::Verify(_) => "verify",
        }
    }
}

/// Reads and validates a config file.
pub fn load(path: &Path) -> Result<Config> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
    let config: Config =
        serde_json::from_str(&text).with_context(|| format!("invalid config in {}", path.display()))?;
    if config.schema_version != SCHEMA_VERSION {
        bail!(
            "unsupported schema_version {} in {} (expected {SCHEMA_VERSION})",
            config.schema_version,
            path.display()
        );
    }
    Ok(config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRange {
    pub t0: f64,
    pub t_max: f64,
}

fn delta2_range() -> ScanRange {
    ScanRange { t0: 1.0, t_max: 1e6 }
}

fn nabla2_range() -> ScanRange {
    ScanRange { t0: 2.0, t_max: 1e6 }
}

fn norm_tolerance() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YoungTask {
    pub function: YoungFunction,
    #[serde(default = "delta2_range")]
    pub delta2: ScanRange,
    #[serde(default = "nabla2_range")]
    pub nabla2: ScanRange,
    /// Needed by `young norm` only.
    #[serde(default)]
    pub field: Option<FieldSource>,
    #[serde(default = "norm_tolerance")]
    pub tolerance: f64,
}

/// A scalar field on the unit box, sampled at cell centers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldSource {
    /// Explicit cell values, row-major with axis 0 slowest.
    Values { resolution: Vec<usize>, values: Vec<f64> },
    /// `amplitude * prod_k sin(2 pi frequency x_k)`
    Sine { dim: usize, resolution: usize, amplitude: f64, frequency: f64 },
    /// Seeded sum of `modes` Fourier modes.
    Random { dim: usize, resolution: usize, modes: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub radius: f64,
    pub spacing: f64,
}

fn ladder() -> Vec<usize> {
    DEFAULT_LADDER.to_vec()
}

fn cell_resolution() -> usize {
    64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomTask {
    pub spec: IntegrandSpec,
    /// Points for `hom solve`.
    #[serde(default)]
    pub xi: Vec<Vec<f64>>,
    /// Tensor grid for `hom table`.
    #[serde(default)]
    pub xi_grid: Option<XiGrid>,
    #[serde(default = "ladder")]
    pub ladder: Vec<usize>,
    #[serde(default = "cell_resolution")]
    pub resolution: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub boundary: CellBoundary,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyTask {
    pub unfold: UnfoldSuite,
    pub two_scale: TwoScaleSuite,
    pub sweep: SweepSuite,
    pub relaxation: RelaxationSuite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnfoldSuite {
    pub epsilons: Vec<f64>,
    pub resolution_1d: usize,
    pub resolution_2d: usize,
    pub functions: Vec<YoungFunction>,
    pub modes: usize,
    pub tolerance: f64,
    pub strip_resolution: usize,
    pub strip_epsilons: Vec<f64>,
}

impl Default for UnfoldSuite {
    fn default() -> Self {
        UnfoldSuite {
            epsilons: vec![0.5, 0.25, 0.125],
            resolution_1d: 64,
            resolution_2d: 32,
            functions: vec![
                YoungFunction::power(2.0).expect("valid"),
                YoungFunction::power(1.5).expect("valid"),
                YoungFunction::power_log(1.0).expect("valid"),
            ],
            modes: 4,
            tolerance: 1e-12,
            strip_resolution: 1000,
            strip_epsilons: vec![0.3, 0.03, 0.003],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoScaleSuite {
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub y_res: usize,
    pub function: YoungFunction,
    pub min_order: f64,
    pub exact_tolerance: f64,
    pub weak_epsilons: Vec<f64>,
    pub weak_cells_per_eps: usize,
    /// Bound on `discrepancy / eps`.
    pub weak_constant: f64,
    /// Bound on `error / eps`.
    pub error_constant: f64,
}

impl Default for TwoScaleSuite {
    fn default() -> Self {
        TwoScaleSuite {
            dims: vec![1, 2],
            epsilons: vec![0.25, 0.125, 0.0625, 0.03125],
            y_res: 8,
            function: YoungFunction::power(2.0).expect("valid"),
            min_order: 0.9,
            exact_tolerance: 1e-10,
            weak_epsilons: vec![0.25, 0.125, 0.0625, 0.03125],
            weak_cells_per_eps: 16,
            weak_constant: 0.5,
            error_constant: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepSuite {
    pub spec: IntegrandSpec,
    pub xi: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub resolution: usize,
    pub reference: Option<f64>,
    pub solver: SolverConfig,
    pub pipeline_tolerance: f64,
    pub noise_band: f64,
    pub datum: Datum,
    pub competitors: Competitors,
    pub table: XiGrid,
    pub table_ladder: Vec<usize>,
    pub table_resolution: usize,
    pub dirichlet_epsilons: Vec<f64>,
    pub dirichlet_resolution: usize,
    pub dirichlet_tolerance: f64,
}

impl Default for SweepSuite {
    fn default() -> Self {
        SweepSuite {
            spec: IntegrandSpec::two_phase_quadratic(),
            xi: vec![1.0],
            epsilons: vec![0.5, 0.25, 0.125],
            resolution: 64,
            reference: None,
            solver: SolverConfig::default(),
            pipeline_tolerance: 1e-10,
            noise_band: 1e-4,
            datum: Datum::Quadratic { coefficient: 1.0 },
            competitors: Competitors::default(),
            table: XiGrid { radius: 1.5, spacing: 0.25 },
            table_ladder: ladder(),
            table_resolution: 64,
            dirichlet_epsilons: vec![0.5, 0.25, 0.125],
            dirichlet_resolution: 16,
            dirichlet_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RelaxationSuite {
    /// Compared against the convex envelope of its potential.
    pub homogeneous: IntegrandSpec,
    pub homogeneous_xi: Vec<f64>,
    /// Compared against its relaxed counterpart.
    pub layered: IntegrandSpec,
    pub layered_xi: Vec<f64>,
    pub ladder: Vec<usize>,
    pub resolution: usize,
    pub solver: SolverConfig,
    pub sampling: EnvelopeSampling,
    pub zero_tolerance: f64,
    pub relative_tolerance: f64,
    pub floor: f64,
}

impl Default for RelaxationSuite {
    fn default() -> Self {
        RelaxationSuite {
            homogeneous: IntegrandSpec::double_well_1d(Coefficient::Constant { value: 1.0 }).expect("valid"),
            homogeneous_xi: vec![0.0, -0.5, 0.5, -1.0, 1.0, -1.5, 1.5],
            layered: IntegrandSpec::double_well_1d(Coefficient::Piecewise { values: vec![1.0, 4.0], axis: 0 })
                .expect("valid"),
            layered_xi: vec![0.0, 0.5, 1.5],
            ladder: ladder(),
            resolution: 64,
            solver: SolverConfig::default(),
            sampling: EnvelopeSampling::default(),
            zero_tolerance: 1e-2,
            relative_tolerance: 0.02,
            floor: 1e-2,
        }
    }
}
