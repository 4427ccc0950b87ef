//! Experiment configuration in TOML.
//!
//! ```toml
//! output = "out"
//!
//! [domain]
//! shape = "cone"
//! half_angle = 0.7853981633974483
//!
//! [grid]
//! dim = 2
//! h = 0.00390625
//! stencil = 3
//!
//! [params]
//! tau1 = 0.4
//! tau2 = 0.6
//! nu = 0.3
//!
//! [datum]
//! alpha = 0.5
//! k = 1.0
//! ```
//!
//! `[solver]`, `[search]` and `[harnack]` are optional and fall back to
//! [`SolverConfig::default`], [`SearchConfig::default`] and
//! [`HarnackConfig::default`]. Unknown keys are rejected.

use std::f64::consts::FRAC_PI_4;
use std::path::{Path, PathBuf};

use inflab_core::geometry::{make_domain, DomainShape, SearchOptions, UniformConditionParams};
use inflab_core::regularity::HolderData;
use inflab_core::solver::{SolveParams, StencilSpec, Sweep, DEFAULT_STENCIL_WIDTH};
use serde::{Deserialize, Serialize};

use crate::error::{io_err, LabError, LabResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_output")]
    pub output: PathBuf,
    /// μ cache file; `<output>/mu_cache.json` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_cache: Option<PathBuf>,
    pub domain: ShapeConfig,
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub datum: DatumConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub harnack: HarnackConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    HalfSpace,
    Cone { half_angle: f64 },
    Slit,
    Corkscrew { offset: f64 },
    Spiral { turn_rate: f64 },
    PuncturedBall,
}

impl From<ShapeConfig> for DomainShape {
    fn from(s: ShapeConfig) -> Self {
        match s {
            ShapeConfig::HalfSpace => DomainShape::HalfSpace,
            ShapeConfig::Cone { half_angle } => DomainShape::Cone { half_angle },
            ShapeConfig::Slit => DomainShape::Slit,
            ShapeConfig::Corkscrew { offset } => DomainShape::Corkscrew { offset },
            ShapeConfig::Spiral { turn_rate } => DomainShape::Spiral { turn_rate },
            ShapeConfig::PuncturedBall => DomainShape::PuncturedBall,
        }
    }
}

/// The grid covers `[-half_width, half_width]^dim` plus `stencil` cells of
/// margin on every side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub h: f64,
    #[serde(default = "default_stencil")]
    pub stencil: usize,
    #[serde(default = "default_half_width")]
    pub half_width: f64,
}

fn default_stencil() -> usize {
    DEFAULT_STENCIL_WIDTH
}

fn default_half_width() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub tau1: f64,
    pub tau2: f64,
    pub nu: f64,
}

/// Boundary datum `g(x) = g0 + k |x|^alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatumConfig {
    pub alpha: f64,
    pub k: f64,
    #[serde(default)]
    pub g0: f64,
}

impl DatumConfig {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.g0 + self.k * r.powf(self.alpha)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepConfig {
    Jacobi,
    GaussSeidel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iters: usize,
    pub sweep: SweepConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relaxation: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let p = SolveParams::default();
        SolverConfig { tol: p.tol, max_iters: p.max_iters, sweep: SweepConfig::GaussSeidel, relaxation: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchConfig {
    pub depth: usize,
    pub candidates: usize,
    pub samples: usize,
    pub r0: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        let o = SearchOptions::default();
        SearchConfig { depth: o.depth, candidates: o.candidates_per_sphere, samples: o.samples_per_cap, r0: o.r0 }
    }
}

/// Battery of random nonnegative boundary data on the unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarnackConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for HarnackConfig {
    fn default() -> Self {
        HarnackConfig { samples: 20, seed: 7 }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            output: default_output(),
            mu_cache: None,
            domain: ShapeConfig::Cone { half_angle: FRAC_PI_4 },
            grid: GridConfig { dim: 2, h: 1.0 / 128.0, stencil: DEFAULT_STENCIL_WIDTH, half_width: 1.0 },
            params: ParamsConfig { tau1: 0.4, tau2: 0.6, nu: 0.3 },
            datum: DatumConfig { alpha: 0.5, k: 1.0, g0: 0.0 },
            solver: SolverConfig::default(),
            search: SearchConfig::default(),
            harnack: HarnackConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Parses and validates; errors point at the offending line when the
    /// key appears in `source`.
    pub fn from_toml(source: &str) -> LabResult<Self> {
        let cfg: ExperimentConfig = toml::from_str(source).map_err(|e| LabError::ConfigInvalid {
            field: "config".into(),
            line: e.span().map(|s| line_of(source, s.start)),
            message: e.message().trim().to_string(),
        })?;
        cfg.validate().map_err(|e| match e {
            LabError::ConfigInvalid { field, message, .. } => {
                let line = locate(source, &field);
                LabError::ConfigInvalid { field, line, message }
            }
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> LabResult<()> {
        let g = &self.grid;
        if !(2..=3).contains(&g.dim) {
            return Err(invalid("grid.dim", "must be 2 or 3"));
        }
        if !(g.h > 0.0 && g.h.is_finite()) {
            return Err(invalid("grid.h", "must be positive"));
        }
        if !(g.half_width > 0.0 && g.half_width.is_finite()) {
            return Err(invalid("grid.half_width", "must be positive"));
        }
        if g.half_width / g.h < 1.0 {
            return Err(invalid("grid.h", "must not exceed half_width"));
        }
        StencilSpec::new(g.dim, g.stencil).map_err(|e| invalid("grid.stencil", e))?;
        make_domain(self.domain.into(), g.dim).map_err(|e| invalid("domain.shape", e))?;
        let p = &self.params;
        UniformConditionParams::new(p.tau1, p.tau2, p.nu).map_err(|e| invalid("params", e))?;
        HolderData::new(self.datum.alpha, self.datum.k, self.datum.g0).map_err(|e| invalid("datum", e))?;
        self.solve_params().validate().map_err(|e| invalid("solver", e))?;
        let s = &self.search;
        if s.candidates == 0 || s.samples == 0 {
            return Err(invalid("search", "candidates and samples must be positive"));
        }
        if !(s.r0 > 0.0 && s.r0.is_finite()) {
            return Err(invalid("search.r0", "must be positive"));
        }
        if self.harnack.samples == 0 {
            return Err(invalid("harnack.samples", "must be positive"));
        }
        Ok(())
    }

    pub fn solve_params(&self) -> SolveParams {
        SolveParams {
            tol: self.solver.tol,
            max_iters: self.solver.max_iters,
            sweep: match self.solver.sweep {
                SweepConfig::Jacobi => Sweep::Jacobi,
                SweepConfig::GaussSeidel => Sweep::GaussSeidel,
            },
            relaxation: self.solver.relaxation,
        }
    }

    pub fn stencil(&self) -> LabResult<StencilSpec> {
        Ok(StencilSpec::new(self.grid.dim, self.grid.stencil)?)
    }

    pub fn uniform_params(&self) -> LabResult<UniformConditionParams> {
        Ok(UniformConditionParams::new(self.params.tau1, self.params.tau2, self.params.nu)?)
    }

    pub fn holder_data(&self) -> LabResult<HolderData> {
        Ok(HolderData::new(self.datum.alpha, self.datum.k, self.datum.g0)?)
    }

    pub fn search_options(&self) -> SearchOptions {
        SearchOptions {
            depth: self.search.depth,
            candidates_per_sphere: self.search.candidates,
            samples_per_cap: self.search.samples,
            r0: self.search.r0,
        }
    }

    pub fn mu_cache_path(&self) -> PathBuf {
        self.mu_cache.clone().unwrap_or_else(|| self.output.join("mu_cache.json"))
    }
}

fn invalid(field: &str, message: impl ToString) -> LabError {
    LabError::ConfigInvalid { field: field.to_string(), line: None, message: message.to_string() }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of `table.key` (or of `[table]` itself) in `source`.
fn locate(source: &str, field: &str) -> Option<usize> {
    let (table, key) = match field.split_once('.') {
        Some((t, k)) => (t, Some(k)),
        None => (field, None),
    };
    let mut current = "";
    for (n, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim();
            if current == table && key.is_none() {
                return Some(n + 1);
            }
            continue;
        }
        if current != table {
            continue;
        }
        if let (Some(key), Some((lhs, _))) = (key, line.split_once('=')) {
            if lhs.trim() == key {
                return Some(n + 1);
            }
        }
    }
    None
}

/// Parses `0.0078125` or `1/128`.
pub fn parse_resolution(text: &str) -> Result<f64, String> {
    let h = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|e| format!("{e}"))?;
            let den: f64 = den.trim().parse().map_err(|e| format!("{e}"))?;
            num / den
        }
        None => text.trim().parse().map_err(|e| format!("{e}"))?,
    };
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        Err(format!("resolution must be a positive number, got {text}"))
    }
}
