//! Experiment configuration: a TOML file of flat named blocks.
//!
//! ```toml
//! seed = 7
//!
//! [kernel]
//! family = "exponential_sum"    # zero | exponential_sum | polynomial
//! amplitudes = [0.4]
//! rates = [1.0]
//!
//! [grid]
//! horizon = "2pi"               # number, or "pi", "2pi", "pi/2", "3pi/4", ...
//! steps = 4096
//!
//! [modes]
//! n_max = 8
//!
//! [targets]
//! kind = "random"               # explicit | random
//! count = 10
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::MemoryKernel;
use crate::moments::MomentTarget;
use crate::spectral::ControlSignal;
use crate::volterra::TimeGrid;

use super::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Simulate,
    Steer,
    Pair,
    Diagnose,
    Verify,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Simulate => "simulate",
            Task::Steer => "steer",
            Task::Pair => "pair",
            Task::Diagnose => "diagnose",
            Task::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelBlock {
    pub family: String,
    #[serde(default)]
    pub amplitudes: Vec<f64>,
    #[serde(default)]
    pub rates: Vec<f64>,
    #[serde(default)]
    pub coefficients: Vec<f64>,
}

impl KernelBlock {
    pub fn build(&self) -> Result<MemoryKernel> {
        match self.family.as_str() {
            "zero" => Ok(MemoryKernel::Zero),
            "exponential_sum" => {
                if self.amplitudes.len() != self.rates.len() {
                    return Err(Error::Config(format!(
                        "kernel: {} amplitudes but {} rates",
                        self.amplitudes.len(),
                        self.rates.len()
                    )));
                }
                let pairs: Vec<(f64, f64)> =
                    self.amplitudes.iter().copied().zip(self.rates.iter().copied()).collect();
                MemoryKernel::exponential_sum(&pairs)
            }
            "polynomial" => MemoryKernel::polynomial(&self.coefficients),
            other => Err(Error::Config(format!("kernel: unknown family `{other}`"))),
        }
    }
}

/// A horizon given as a number or as a multiple of π.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Horizon {
    Number(f64),
    Text(String),
}

impl Horizon {
    pub fn value(&self) -> Result<f64> {
        match self {
            Horizon::Number(t) => Ok(*t),
            Horizon::Text(s) => parse_horizon(s),
        }
    }
}

fn parse_horizon(text: &str) -> Result<f64> {
    let bad = || Error::Config(format!("grid: cannot read horizon `{text}`"));
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().to_lowercase();
    let s = s.replace('π', "pi");
    let (numer, denom) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let numer = match numer.strip_suffix("pi") {
        Some("") => PI,
        Some(c) => c.trim_end_matches('*').parse::<f64>().map_err(|_| bad())? * PI,
        None => numer.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(numer / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub horizon: Horizon,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesBlock {
    pub n_max: usize,
    /// Pair-problem size.
    #[serde(default)]
    pub n_f: Option<usize>,
    /// Modes over which the stress-deformation gap of steering controls is tracked.
    #[serde(default)]
    pub gap_modes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    pub kind: Task,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Explicit,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetsBlock {
    pub kind: TargetKind,
    #[serde(default)]
    pub xi: Vec<f64>,
    #[serde(default)]
    pub eta: Vec<f64>,
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default)]
    pub d: Vec<f64>,
    /// Number of random targets.
    #[serde(default = "one")]
    pub count: usize,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlShape {
    Zero,
    Cosine,
    Sine,
    Bump,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlBlock {
    pub shape: ControlShape,
    #[serde(default = "unit")]
    pub amplitude: f64,
    #[serde(default = "unit")]
    pub frequency: f64,
    /// Number of Fourier pairs in a random control.
    #[serde(default = "eight")]
    pub harmonics: usize,
}

fn unit() -> f64 {
    1.0
}

fn eight() -> usize {
    8
}

impl Default for ControlBlock {
    fn default() -> Self {
        ControlBlock { shape: ControlShape::Zero, amplitude: 1.0, frequency: 1.0, harmonics: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    /// Write every k-th sample of mode trajectories; 0 disables the file.
    #[serde(default)]
    pub trajectory_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub kernel: KernelBlock,
    pub grid: GridBlock,
    pub modes: ModesBlock,
    #[serde(default)]
    pub task: Option<TaskBlock>,
    #[serde(default)]
    pub targets: Option<TargetsBlock>,
    #[serde(default)]
    pub control: Option<ControlBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

pub const DEFAULT_TRAJECTORY_STRIDE: usize = 16;

/// Default mode count for gap tracking (capped by the resolution rule).
pub const DEFAULT_GAP_MODES: usize = 32;

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn memory_kernel(&self) -> Result<MemoryKernel> {
        self.kernel.build()
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.grid.horizon.value()?, self.grid.steps)
    }

    /// `gap_modes` if given, else `max(n_max, 32)` limited to what the grid resolves.
    pub fn gap_modes(&self, grid: &TimeGrid) -> usize {
        self.modes.gap_modes.unwrap_or_else(|| {
            let resolvable = (crate::volterra::RESOLUTION_LIMIT / grid.step()).floor() as usize;
            DEFAULT_GAP_MODES.min(resolvable).max(self.modes.n_max)
        })
    }

    pub fn trajectory_stride(&self) -> usize {
        self.output.trajectory_stride.unwrap_or(DEFAULT_TRAJECTORY_STRIDE)
    }

    /// The task the run performs; a `[task]` block must agree with `requested`.
    pub fn resolve_task(&self, requested: Option<Task>) -> Result<Task> {
        match (requested, &self.task) {
            (Some(r), Some(t)) if r != t.kind => Err(Error::Config(format!(
                "command asks for `{}` but the config says `{}`",
                r.name(),
                t.kind.name()
            ))),
            (Some(r), _) => Ok(r),
            (None, Some(t)) => Ok(t.kind),
            (None, None) => Err(Error::Config("no task given".into())),
        }
    }

    fn targets_block(&self) -> Result<&TargetsBlock> {
        self.targets.as_ref().ok_or_else(|| Error::Config("missing [targets] block".into()))
    }

    /// Steering targets: the explicit `(ξ, η)` or `count` seeded random unit targets.
    pub fn moment_targets(&self) -> Result<Vec<MomentTarget>> {
        let block = self.targets_block()?;
        let n_max = self.modes.n_max;
        match block.kind {
            TargetKind::Explicit => {
                if block.xi.len() > n_max || block.eta.len() > n_max {
                    return Err(Error::Config(format!("targets: longer than n_max = {n_max}")));
                }
                let mut xi = block.xi.clone();
                xi.resize(n_max, 0.0);
                Ok(vec![MomentTarget::new(&xi, &block.eta)?])
            }
            TargetKind::Random => {
                let mut rng = SplitMix64::new(self.seed);
                (0..block.count).map(|_| random_unit_target(&mut rng, n_max)).collect()
            }
        }
    }

    /// Pair-problem targets `(c, d)`.
    pub fn pair_targets(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let block = self.targets_block()?;
        let n_f = self.modes.n_f.unwrap_or(block.c.len().max(block.d.len()));
        if n_f == 0 {
            return Err(Error::Config("pair: n_f must be positive".into()));
        }
        match block.kind {
            TargetKind::Explicit => {
                if block.c.len() > n_f || block.d.len() > n_f {
                    return Err(Error::Config(format!("targets: c or d longer than n_f = {n_f}")));
                }
                let mut c = block.c.clone();
                let mut d = block.d.clone();
                c.resize(n_f, 0.0);
                d.resize(n_f, 0.0);
                Ok((c, d))
            }
            TargetKind::Random => {
                let mut rng = SplitMix64::new(self.seed);
                let c = (0..n_f).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let d = (0..n_f).map(|_| rng.uniform(-1.0, 1.0)).collect();
                Ok((c, d))
            }
        }
    }

    /// The control signal of a `simulate` or `verify` run.
    pub fn control_signal(&self, grid: TimeGrid) -> Result<ControlSignal> {
        let block = self.control.clone().unwrap_or_default();
        build_control(&block, grid, self.seed)
    }
}

/// `ξ_n, η_n` uniform on `[−1, 1]` (all ξ first, then all η), scaled to unit ℓ² norm.
pub fn random_unit_target(rng: &mut SplitMix64, n_max: usize) -> Result<MomentTarget> {
    let xi: Vec<f64> = (0..n_max).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let eta: Vec<f64> = (0..n_max).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let norm = xi.iter().chain(&eta).map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::Config("random target has zero norm".into()));
    }
    let xi: Vec<f64> = xi.iter().map(|v| v / norm).collect();
    let eta: Vec<f64> = eta.iter().map(|v| v / norm).collect();
    MomentTarget::new(&xi, &eta)
}

pub fn build_control(block: &ControlBlock, grid: TimeGrid, seed: u64) -> Result<ControlSignal> {
    let a = block.amplitude;
    let w = block.frequency;
    let horizon = grid.horizon();
    match block.shape {
        ControlShape::Zero => Ok(ControlSignal::zero(grid)),
        ControlShape::Cosine => ControlSignal::from_fn(grid, |t| a * (w * t).cos()),
        ControlShape::Sine => ControlSignal::from_fn(grid, |t| a * (w * t).sin()),
        ControlShape::Bump => ControlSignal::from_fn(grid, |t| {
            let u = 2.0 * t / horizon - 1.0;
            if u.abs() < 1.0 {
                a * (1.0 - 1.0 / (1.0 - u * u)).exp()
            } else {
                0.0
            }
        }),
        ControlShape::Random => {
            let mut rng = SplitMix64::new(seed);
            let pairs: Vec<(f64, f64)> =
                (0..block.harmonics).map(|_| (rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0))).collect();
            ControlSignal::from_fn(grid, |t| {
                let omega = 2.0 * PI / horizon;
                a * pairs
                    .iter()
                    .enumerate()
                    .map(|(k, &(p, q))| {
                        let arg = (k + 1) as f64 * omega * t;
                        (p * arg.cos() + q * arg.sin()) / (k + 1) as f64
                    })
                    .sum::<f64>()
            })
        }
    }
}
