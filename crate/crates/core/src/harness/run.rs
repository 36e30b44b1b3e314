//! Task execution and artifact layout.
//!
//! Every run writes `manifest.json` (schema, echoed config, derived α and the
//! task results) plus task-specific CSVs into the output directory. Wall time
//! goes to `timing.json` so that manifests stay byte-identical across runs.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{exceptional_index_check, DerivedKernelSet};
use crate::moments::{
    build_family, finite_pair_control, frame_bounds_of, gram, quadratic_closeness, synthesize_control, ClosenessReport,
    FrameBounds, FRAME_TREND_SIZES,
};
use crate::spectral::{coefficient_norms, reconstruct_field, simulate_coefficients, CoefficientNorms, FieldKind, SpectralState};
use crate::verify::{
    check_convolution_lemma, check_resolvent_identity, check_stress_deformation_gap, check_zn_asymptotics,
    check_zn_derivative_asymptotics, AsymptoticReport, LemmaProbe, Verdict,
};
use crate::volterra::solve_zn_family;

use super::config::{ExperimentConfig, Task};
use super::export::{complex_cells, export_csv, export_manifest, export_trajectories, Cell, Manifest, Table, SCHEMA_VERSION};

/// Points of the `[0, π]` grid used for field snapshots.
pub const FIELD_POINTS: usize = 201;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TIMING_FILE: &str = "timing.json";

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum TaskResults {
    Simulate(SimulateResults),
    Steer(SteerResults),
    Pair(PairResults),
    Diagnose(DiagnoseResults),
    Verify(VerifyResults),
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulateResults {
    pub n_max: usize,
    pub control_norm: f64,
    pub norms: CoefficientNorms,
}

#[derive(Debug, Clone, Serialize)]
pub struct GramSummary {
    pub dimension: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    pub hermitian_defect: f64,
    pub cross_check_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteerOutcome {
    pub target: usize,
    pub max_relative_residual: f64,
    /// ℓ² error of the simulated `(v_n, σ_n)` against `(ξ_n, η_n)`, over the target norm.
    pub relative_error: f64,
    pub control_norm: f64,
    pub physical_control_norm: f64,
    pub imaginary_leak: f64,
    pub gap_verdict: Verdict,
    pub gap_growth_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SteerResults {
    pub n_max: usize,
    pub gap_modes: usize,
    pub gram: GramSummary,
    pub outcomes: Vec<SteerOutcome>,
    pub max_relative_error: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairResults {
    pub n_f: usize,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub max_relative_residual: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub condition: f64,
    pub control_norm: f64,
    pub physical_control_norm: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnoseResults {
    pub n_max: usize,
    pub complex_frequencies: bool,
    pub gram: GramSummary,
    pub frame: FrameBounds,
    pub closeness: ClosenessReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportSummary {
    pub label: String,
    pub growth_ratio: f64,
    pub verdict: Verdict,
}

impl From<&AsymptoticReport> for ReportSummary {
    fn from(r: &AsymptoticReport) -> Self {
        ReportSummary { label: r.label.clone(), growth_ratio: r.growth_ratio, verdict: r.verdict }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyResults {
    pub n_max: usize,
    pub reports: Vec<ReportSummary>,
    pub resolvent_residuals: Vec<(i64, f64)>,
    pub all_bounded: bool,
}

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub task: Task,
    pub out_dir: PathBuf,
    pub results: TaskResults,
    pub files: Vec<String>,
    pub wall_seconds: f64,
}

#[derive(Serialize)]
struct Timing {
    wall_seconds: f64,
    threads: usize,
}

struct Artifacts<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Artifacts<'_> {
    fn csv(&mut self, name: &str, table: &Table) -> Result<()> {
        export_csv(&self.dir.join(name), table)?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Output directory: CLI override, else `[output] dir`, else `viscostring-out`.
pub fn output_dir(config: &ExperimentConfig, cli: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| config.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("viscostring-out"))
}

/// Runs `task` on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn run_with_threads(config: &ExperimentConfig, task: Task, out: &Path, threads: Option<usize>) -> Result<RunOutcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = threads {
        if k == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run(config, task, out))
}

pub fn run(config: &ExperimentConfig, task: Task, out: &Path) -> Result<RunOutcome> {
    let start = Instant::now();
    let kernel = config.memory_kernel()?;
    let grid = config.time_grid()?;
    let n_max = config.modes.n_max;
    if n_max == 0 {
        return Err(Error::Config("modes: n_max must be positive".into()));
    }
    grid.check_resolution(n_max as u64)?;
    let index = exceptional_index_check(&kernel, n_max as u64)?;
    let kernels = DerivedKernelSet::derive(&kernel, &grid)?;
    fs::create_dir_all(out).map_err(|source| Error::Io { path: out.to_path_buf(), source })?;

    let mut art = Artifacts { dir: out, files: Vec::new() };
    let results = match task {
        Task::Simulate => TaskResults::Simulate(simulate(config, &kernels, &mut art)?),
        Task::Steer => TaskResults::Steer(steer(config, &kernels, &mut art)?),
        Task::Pair => TaskResults::Pair(pair(config, &kernels, &mut art)?),
        Task::Diagnose => TaskResults::Diagnose(diagnose(config, &kernels, index.complex_frequencies, &mut art)?),
        Task::Verify => TaskResults::Verify(verify(config, &kernels, &mut art)?),
    };

    let mut files = art.files;
    files.push(MANIFEST_FILE.to_string());
    let manifest = Manifest {
        schema_version: SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        task: task.name(),
        config,
        alpha: kernels.alpha(),
        results: &results,
        files: files.clone(),
    };
    export_manifest(&out.join(MANIFEST_FILE), &manifest)?;

    let wall_seconds = start.elapsed().as_secs_f64();
    let timing = Timing { wall_seconds, threads: rayon::current_num_threads() };
    let text = serde_json::to_string_pretty(&timing).map_err(|e| Error::Config(e.to_string()))? + "\n";
    let path = out.join(TIMING_FILE);
    fs::write(&path, text).map_err(|source| Error::Io { path, source })?;

    Ok(RunOutcome { task, out_dir: out.to_path_buf(), results, files, wall_seconds })
}

fn modes_up_to(n_max: usize) -> Vec<i64> {
    (1..=n_max as i64).collect()
}

fn field_grid() -> Vec<f64> {
    (0..FIELD_POINTS).map(|j| PI * j as f64 / (FIELD_POINTS - 1) as f64).collect()
}

fn coefficient_table(state: &SpectralState) -> Table {
    let mut t = Table::new(&["n", "deformation", "velocity", "stress", "integrated_stress"]);
    for m in &state.modes {
        t.push(vec![m.n.into(), m.deformation.into(), m.velocity.into(), m.stress.into(), m.integrated_stress.into()]);
    }
    t
}

fn field_table(state: &SpectralState) -> Result<Table> {
    let x = field_grid();
    let w = reconstruct_field(state, FieldKind::Deformation, &x)?;
    let v = reconstruct_field(state, FieldKind::Velocity, &x)?;
    let s = reconstruct_field(state, FieldKind::Stress, &x)?;
    let mut t = Table::new(&["x", "deformation", "velocity", "stress"]);
    for j in 0..x.len() {
        t.push(vec![x[j].into(), w[j].into(), v[j].into(), s[j].into()]);
    }
    Ok(t)
}

fn report_table(reports: &[&AsymptoticReport]) -> Table {
    let mut t = Table::new(&["label", "n", "deviation", "scaled"]);
    for r in reports {
        for i in 0..r.modes.len() {
            t.push(vec![r.label.as_str().into(), r.modes[i].into(), r.deviations[i].into(), r.scaled[i].into()]);
        }
    }
    t
}

fn simulate(config: &ExperimentConfig, kernels: &DerivedKernelSet, art: &mut Artifacts) -> Result<SimulateResults> {
    let n_max = config.modes.n_max;
    let f = config.control_signal(*kernels.grid())?;
    let family = solve_zn_family(&modes_up_to(n_max), kernels)?;
    let state = simulate_coefficients(&f, &family, kernels)?;

    let mut control = Table::new(&["t", "f"]);
    for (k, v) in f.samples.iter().enumerate() {
        control.push(vec![f.grid.time(k).into(), (*v).into()]);
    }
    art.csv("control.csv", &control)?;
    art.csv("coefficients.csv", &coefficient_table(&state))?;
    art.csv("fields.csv", &field_table(&state)?)?;
    write_trajectories(config, art, &family)?;
    Ok(SimulateResults { n_max, control_norm: f.l2_norm(), norms: coefficient_norms(&state) })
}

fn write_trajectories(config: &ExperimentConfig, art: &mut Artifacts, family: &[crate::volterra::ModeTrajectory]) -> Result<()> {
    let stride = config.trajectory_stride();
    if stride == 0 {
        return Ok(());
    }
    export_trajectories(&art.dir.join("trajectories.csv"), family, stride)?;
    art.files.push("trajectories.csv".to_string());
    Ok(())
}

fn steer(config: &ExperimentConfig, kernels: &DerivedKernelSet, art: &mut Artifacts) -> Result<SteerResults> {
    let n_max = config.modes.n_max;
    let targets = config.moment_targets()?;
    let family = build_family(kernels, n_max)?;
    let system = gram(&family, kernels);
    let summary = GramSummary {
        dimension: system.indices.len(),
        lambda_min: system.lambda_min,
        lambda_max: system.lambda_max,
        condition: system.condition,
        hermitian_defect: system.hermitian_defect(),
        cross_check_deviation: family.cross_check_deviation,
    };

    let grid = *kernels.grid();
    let gap_modes = config.gap_modes(&grid);
    grid.check_resolution(gap_modes as u64)?;
    let tracked = if gap_modes > n_max {
        let mut all = family.little.clone();
        all.extend(solve_zn_family(&((n_max as i64 + 1)..=gap_modes as i64).collect::<Vec<_>>(), kernels)?);
        all
    } else {
        family.little.clone()
    };
    let mut header = vec!["t".to_string()];
    header.extend((0..targets.len()).map(|i| format!("f_{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut controls = Table::new(&header_refs);
    let mut moments = Table::new(&[
        "target", "n", "target_re", "target_im", "moment_re", "moment_im", "velocity", "stress",
    ]);
    let mut outcomes = Vec::new();
    let mut warnings = Vec::new();
    let mut signals = Vec::new();
    for (i, target) in targets.iter().enumerate() {
        let report = synthesize_control(&system, target)?;
        let state = simulate_coefficients(&report.control, &tracked, kernels)?;
        let mut err = 0.0;
        for (j, m) in state.modes.iter().take(n_max).enumerate() {
            let goal = report.targets[j];
            let achieved = Complex64::new(m.velocity, m.stress);
            err += (achieved - goal).norm_sqr();
            let [tr, ti] = complex_cells(goal);
            let [mr, mi] = complex_cells(report.achieved[j]);
            moments.push(vec![i.into(), m.n.into(), tr, ti, mr, mi, m.velocity.into(), m.stress.into()]);
        }
        let scale = target.l2_norm();
        let gap = check_stress_deformation_gap(&state);
        outcomes.push(SteerOutcome {
            target: i,
            max_relative_residual: report.max_relative_residual,
            relative_error: if scale == 0.0 { err.sqrt() } else { err.sqrt() / scale },
            control_norm: report.control_norm,
            physical_control_norm: report.physical_control_norm,
            imaginary_leak: report.imaginary_leak,
            gap_verdict: gap.verdict,
            gap_growth_ratio: gap.growth_ratio,
        });
        for w in report.warnings {
            if !warnings.contains(&w) {
                warnings.push(w);
            }
        }
        signals.push(report.control.samples);
    }
    for k in 0..grid.len() {
        let mut row: Vec<Cell> = vec![grid.time(k).into()];
        row.extend(signals.iter().map(|s| Cell::Real(s[k])));
        controls.push(row);
    }
    art.csv("controls.csv", &controls)?;
    art.csv("moments.csv", &moments)?;
    write_trajectories(config, art, &family.big)?;
    let max_relative_error = outcomes.iter().map(|o| o.relative_error).fold(0.0, f64::max);
    Ok(SteerResults { n_max, gap_modes, gram: summary, outcomes, max_relative_error, warnings })
}

fn pair(config: &ExperimentConfig, kernels: &DerivedKernelSet, art: &mut Artifacts) -> Result<PairResults> {
    let (c, d) = config.pair_targets()?;
    let report = finite_pair_control(kernels, &c, &d)?;
    let mut control = Table::new(&["t", "f"]);
    for (k, v) in report.control.samples.iter().enumerate() {
        control.push(vec![report.control.grid.time(k).into(), (*v).into()]);
    }
    art.csv("control.csv", &control)?;
    let mut table = Table::new(&["n", "c", "d", "deformation", "stress"]);
    for (j, &n) in report.mode_indices.iter().enumerate() {
        let a = report.achieved[j];
        table.push(vec![n.into(), c[j].into(), d[j].into(), a.re.into(), a.im.into()]);
    }
    art.csv("pair.csv", &table)?;
    Ok(PairResults {
        n_f: c.len(),
        max_relative_residual: report.max_relative_residual,
        lambda_min: report.lambda_min,
        lambda_max: report.lambda_max,
        condition: report.condition,
        control_norm: report.control_norm,
        physical_control_norm: report.physical_control_norm,
        warnings: report.warnings,
        c,
        d,
    })
}

fn diagnose(
    config: &ExperimentConfig,
    kernels: &DerivedKernelSet,
    complex_frequencies: bool,
    art: &mut Artifacts,
) -> Result<DiagnoseResults> {
    let n_max = config.modes.n_max;
    let family = build_family(kernels, n_max)?;
    let system = gram(&family, kernels);
    let mut sizes: Vec<usize> = FRAME_TREND_SIZES.iter().copied().filter(|&s| s < n_max).collect();
    sizes.push(n_max);
    let frame = frame_bounds_of(&family, kernels, &sizes)?;
    let closeness = quadratic_closeness(&family.big, kernels)?;

    let mut ft = Table::new(&["n_max", "lambda_min", "lambda_max"]);
    for r in &frame.rows {
        ft.push(vec![r.n_max.into(), r.lambda_min.into(), r.lambda_max.into()]);
    }
    art.csv("frame.csv", &ft)?;
    let mut ct = Table::new(&["n", "distance_sq", "scaled", "tail"]);
    for r in &closeness.rows {
        ct.push(vec![r.n.into(), r.distance_sq.into(), r.scaled.into(), r.tail.into()]);
    }
    art.csv("closeness.csv", &ct)?;
    write_trajectories(config, art, &family.big)?;
    Ok(DiagnoseResults {
        n_max,
        complex_frequencies,
        gram: GramSummary {
            dimension: system.indices.len(),
            lambda_min: system.lambda_min,
            lambda_max: system.lambda_max,
            condition: system.condition,
            hermitian_defect: system.hermitian_defect(),
            cross_check_deviation: family.cross_check_deviation,
        },
        frame,
        closeness,
    })
}

fn verify(config: &ExperimentConfig, kernels: &DerivedKernelSet, art: &mut Artifacts) -> Result<VerifyResults> {
    let n_max = config.modes.n_max;
    let modes = modes_up_to(n_max);
    let zn = check_zn_asymptotics(kernels, &modes)?;
    let dzn = check_zn_derivative_asymptotics(kernels, &modes)?;
    let lemma = check_convolution_lemma(kernels, &LemmaProbe::StressKernel, &modes)?;
    let f = config.control_signal(*kernels.grid())?;
    let family = solve_zn_family(&modes, kernels)?;
    let state = simulate_coefficients(&f, &family, kernels)?;
    let gap = check_stress_deformation_gap(&state);

    let reports = [&zn, &dzn, &lemma, &gap];
    art.csv("asymptotics.csv", &report_table(&reports))?;
    let resolvent_residuals = modes
        .iter()
        .map(|&n| Ok((n, check_resolvent_identity(kernels, n)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut rt = Table::new(&["n", "residual"]);
    for &(n, r) in &resolvent_residuals {
        rt.push(vec![n.into(), r.into()]);
    }
    art.csv("resolvent.csv", &rt)?;
    let summaries: Vec<ReportSummary> = reports.iter().map(|r| ReportSummary::from(*r)).collect();
    Ok(VerifyResults {
        n_max,
        all_bounded: summaries.iter().all(|s| s.verdict == Verdict::Bounded),
        reports: summaries,
        resolvent_residuals,
    })
}
