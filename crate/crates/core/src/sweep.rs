//! Grid sweeps over flux, pump frequency and pump power, with CSV/JSON
//! output.
//!
//! Cells are independent and evaluated through [`crate::exec`]; rows are
//! assembled in axis-major cell order, so output does not depend on the
//! worker count.

use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::exec;
use crate::params::{self, derive, ghz, to_ghz, DerivedParams, DriveConfig, PhysicalConfig};
use crate::response::{self, imd_gains, jacobian, susceptibility, to_db, transmission_power};
use crate::spectrum::{self, LevelSign};
use crate::steadystate::{self, Branch, FixedPoint, Stability};
use crate::superharmonic::{self, ShrConfig};

/// Root-residual acceptance factor: |E·|D|² − S_p| ≤ 1e-10·max(S_p, γ_c³).
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("grid parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    TransmissionMap,
    Imd,
    Bistability,
    ShrMap,
    Spectrum,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::TransmissionMap => "transmission-map",
            Task::Imd => "imd",
            Task::Bistability => "bistability",
            Task::ShrMap => "shr-map",
            Task::Spectrum => "spectrum",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AxisName {
    /// Flux detuning ω_f/2π in GHz.
    #[serde(rename = "omega_f")]
    OmegaF,
    /// Pump frequency ω_p/2π in GHz.
    #[serde(rename = "omega_p")]
    OmegaP,
    /// Pump power in dBm.
    #[serde(rename = "power_dBm")]
    PowerDbm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(name: AxisName, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            start,
            stop,
            count,
            spacing: Spacing::Linear,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|k| {
                let t = k as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start + t * (self.stop - self.start),
                    Spacing::Log => (self.start.ln() + t * (self.stop.ln() - self.start.ln())).exp(),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<(), SweepError> {
        let bad = |msg: &str| Err(SweepError::Grid(format!("axis {:?}: {msg}", self.name)));
        if self.count < 2 {
            return bad("count must be at least 2");
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return bad("bounds must be finite");
        }
        if !(self.start < self.stop) {
            return bad("start must be below stop");
        }
        if self.spacing == Spacing::Log && !(self.start > 0.0) {
            return bad("log spacing needs positive bounds");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BranchSelect {
    Ground,
    Excited,
    #[default]
    Combined,
}

impl BranchSelect {
    fn includes(self, branch: Branch) -> bool {
        match self {
            BranchSelect::Ground => branch == Branch::Ground,
            BranchSelect::Excited => branch == Branch::Excited,
            BranchSelect::Combined => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Full saturable back-action.
    #[default]
    Selfconsistent,
    /// Weak-nonlinear cubic.
    Cubic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub task: Task,
    #[serde(default)]
    pub axes: Vec<Axis>,
    /// Fixed ω_f/2π in GHz when ω_f is not an axis.
    #[serde(default)]
    pub omega_f_ghz: Option<f64>,
    /// Fixed ω_p/2π in GHz when ω_p is not an axis; defaults to ω_c.
    #[serde(default)]
    pub omega_p_ghz: Option<f64>,
    /// Fixed pump power when power is not an axis.
    #[serde(default)]
    pub power_dbm: Option<f64>,
    #[serde(default)]
    pub branch: BranchSelect,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub shr_order: Option<u32>,
    #[serde(default)]
    pub signal_offset_khz: Option<f64>,
    #[serde(default)]
    pub n_max: Option<u32>,
}

impl GridSpec {
    pub fn new(task: Task, axes: Vec<Axis>) -> Self {
        Self {
            task,
            axes,
            omega_f_ghz: None,
            omega_p_ghz: None,
            power_dbm: None,
            branch: BranchSelect::Combined,
            solver: Solver::Selfconsistent,
            shr_order: None,
            signal_offset_khz: None,
            n_max: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, SweepError> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    fn axis(&self, name: AxisName) -> Option<&Axis> {
        self.axes.iter().find(|a| a.name == name)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let grid = |msg: String| Err(SweepError::Grid(msg));
        if self.axes.len() > 2 {
            return grid(format!("at most 2 axes per map (got {})", self.axes.len()));
        }
        for axis in &self.axes {
            axis.validate()?;
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return grid("axes must be distinct".into());
        }
        if self.axis(AxisName::OmegaF).is_none() && self.omega_f_ghz.is_none() {
            return grid("omega_f_ghz is required when omega_f is not an axis".into());
        }
        if self.task != Task::Spectrum && self.axis(AxisName::PowerDbm).is_none() && self.power_dbm.is_none()
        {
            return grid("power_dbm is required when power_dBm is not an axis".into());
        }
        match self.task {
            Task::ShrMap => match self.shr_order {
                Some(n) if (1..=superharmonic::MAX_ORDER).contains(&n) => {}
                Some(n) => return grid(format!("shr_order must be in 1..=8 (got {n})")),
                None => return grid("shr-map needs shr_order".into()),
            },
            Task::Imd => match self.signal_offset_khz {
                Some(x) if x.is_finite() => {}
                _ => return grid("imd needs a finite signal_offset_khz".into()),
            },
            Task::Spectrum => {
                if self.axes.iter().any(|a| a.name != AxisName::OmegaF) {
                    return grid("spectrum only sweeps omega_f".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Cells in axis-major order (first axis outermost).
    pub fn cells(&self) -> Vec<CellPoint> {
        let values: Vec<(AxisName, Vec<f64>)> = self.axes.iter().map(|a| (a.name, a.values())).collect();
        let mut cells = vec![CellPoint {
            omega_f_ghz: self.omega_f_ghz.unwrap_or(0.0),
            omega_p_ghz: self.omega_p_ghz,
            power_dbm: self.power_dbm.unwrap_or(f64::NEG_INFINITY),
        }];
        for (name, vals) in values {
            cells = cells
                .into_iter()
                .flat_map(|c| {
                    vals.iter().map(move |&v| {
                        let mut c = c;
                        match name {
                            AxisName::OmegaF => c.omega_f_ghz = v,
                            AxisName::OmegaP => c.omega_p_ghz = Some(v),
                            AxisName::PowerDbm => c.power_dbm = v,
                        }
                        c
                    })
                })
                .collect();
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellPoint {
    pub omega_f_ghz: f64,
    /// `None` means ω_p = ω_c.
    pub omega_p_ghz: Option<f64>,
    pub power_dbm: f64,
}

/// One table entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Num(f64),
    Text(String),
    Empty,
}

impl Value {
    /// Non-finite numbers become empty entries.
    pub fn num(x: f64) -> Self {
        if x.is_finite() {
            Value::Num(x)
        } else {
            Value::Empty
        }
    }

    pub fn opt(x: Option<f64>) -> Self {
        x.map_or(Value::Empty, Value::num)
    }

    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            Value::Num(x) => Some(x),
            Value::Int(i) => Some(i as f64),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Text(s) => Some(s),
            _ => None,
        }
    }

    fn write_csv(&self, out: &mut String) {
        match self {
            Value::Int(i) => write!(out, "{i}").unwrap(),
            Value::Num(x) => write!(out, "{x:.11e}").unwrap(),
            Value::Text(s) => out.push_str(s),
            Value::Empty => {}
        }
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_owned())
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Int(b as i64)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    fn new(name: &str, unit: &str) -> Self {
        Self {
            name: name.to_owned(),
            unit: unit.to_owned(),
        }
    }

    pub fn header(&self) -> String {
        format!("{}[{}]", self.name, self.unit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub cell: usize,
    pub branch: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub task: String,
    pub version: String,
    /// SHA-256 of the canonical JSON of (device config, grid spec).
    pub parameter_hash: String,
    pub tolerances: Tolerances,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub scan_min_photons: f64,
    pub scan_max_photons: f64,
    pub scan_points: usize,
    pub bisection: String,
    pub residual_factor: f64,
    pub marginal_stability: f64,
    pub condition_limit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            scan_min_photons: steadystate::SCAN_MIN,
            scan_max_photons: steadystate::SCAN_MAX,
            scan_points: steadystate::SCAN_POINTS,
            bisection: "to adjacent f64".into(),
            residual_factor: RESIDUAL_TOL,
            marginal_stability: steadystate::MARGINAL_TOL,
            condition_limit: response::CONDITION_LIMIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub metadata: Metadata,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Value>>,
    /// Solver failures and residual violations.
    pub diagnostics: Vec<Diagnostic>,
    /// Accuracy caveats that do not invalidate rows.
    pub warnings: Vec<Diagnostic>,
}

impl SweepResult {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn column(&self, name: &str) -> Vec<&Value> {
        let idx = self.column_index(name).expect("unknown column");
        self.rows.iter().map(|r| &r[idx]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Population-weighted power sum p₋·ground + p₊·excited with
/// p± = (1 ± P0)/2. A missing branch passes its weight to the other.
pub fn combine_branches(ground: Option<f64>, excited: Option<f64>, p0: f64) -> Option<f64> {
    let (p_minus, p_plus) = branch_weights(p0);
    match (ground, excited) {
        (Some(g), Some(e)) => Some(p_minus * g + p_plus * e),
        (Some(g), None) => Some(g),
        (None, Some(e)) => Some(e),
        (None, None) => None,
    }
}

/// (p₋, p₊) = ((1 − P0)/2, (1 + P0)/2).
pub fn branch_weights(p0: f64) -> (f64, f64) {
    let p_plus = 0.5 * (1.0 + p0);
    (1.0 - p_plus, p_plus)
}

/// Branch observable used in the combination: mean |S21|² over stable
/// roots, or over all roots when none is stable.
pub fn branch_transmission(points: &[FixedPoint], derived: &DerivedParams, s_p: f64) -> Option<f64> {
    if points.is_empty() || !(s_p > 0.0) {
        return None;
    }
    let stable: Vec<&FixedPoint> = points.iter().filter(|fp| fp.stable()).collect();
    let chosen: Vec<&FixedPoint> = if stable.is_empty() {
        points.iter().collect()
    } else {
        stable
    };
    let sum: f64 = chosen
        .iter()
        .map(|fp| transmission_power(fp.e_c, derived, s_p))
        .sum();
    Some(sum / chosen.len() as f64)
}

fn stability_name(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "stable",
        Stability::Unstable => "unstable",
        Stability::Marginal => "marginal",
    }
}

/// Residual bound check for a self-consistent root.
pub fn residual_ok(fp: &FixedPoint, derived: &DerivedParams, drive: &DriveConfig) -> bool {
    let r = steadystate::selfconsistent_residual(
        derived,
        drive,
        fp.branch,
        fp.coupling,
        fp.qubit_detuning,
        fp.e_c,
    );
    r.abs() <= RESIDUAL_TOL * drive.s_p.max(derived.gamma_c.powi(3))
}

fn cubic_residual_ok(coeffs: &steadystate::ResponseCoeffs, e: f64, s_p: f64, gamma_c: f64) -> bool {
    let (a3, a2, a1) = coeffs.cubic();
    let scale = (a3 * e * e + a2.abs() * e + a1) * e;
    (coeffs.drive_for(e) - s_p).abs() <= RESIDUAL_TOL * s_p.max(gamma_c.powi(3)).max(1e-6 * scale)
}

struct CellOutput {
    rows: Vec<Vec<Value>>,
    diagnostics: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
}

impl CellOutput {
    fn new() -> Self {
        Self {
            rows: Vec::new(),
            diagnostics: Vec::new(),
            warnings: Vec::new(),
        }
    }

    fn diag(&mut self, cell: usize, branch: Option<Branch>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic {
            cell,
            branch: branch.map(|b| b.name().to_owned()),
            message: message.into(),
        });
    }

    fn warn(&mut self, cell: usize, branch: Option<Branch>, message: impl Into<String>) {
        self.warnings.push(Diagnostic {
            cell,
            branch: branch.map(|b| b.name().to_owned()),
            message: message.into(),
        });
    }
}

fn axis_columns() -> Vec<Column> {
    vec![
        Column::new("cell", "-"),
        Column::new("omega_f", "GHz"),
        Column::new("omega_p", "GHz"),
        Column::new("power", "dBm"),
    ]
}

fn columns_for(task: Task) -> Vec<Column> {
    let mut cols = axis_columns();
    let extra: &[(&str, &str)] = match task {
        Task::TransmissionMap => &[
            ("branch", "-"),
            ("root", "-"),
            ("n_roots", "-"),
            ("e_c", "photons"),
            ("stability", "-"),
            ("s21", "dB"),
            ("combined_s21", "dB"),
            ("residual_ok", "-"),
        ],
        Task::ShrMap => &[
            ("branch", "-"),
            ("root", "-"),
            ("n_roots", "-"),
            ("e_c", "photons"),
            ("stability", "-"),
            ("s21", "dB"),
            ("combined_s21", "dB"),
            ("g_n", "rad/ns"),
            ("bessel_arg", "-"),
            ("upsilon_abs", "rad/ns"),
            ("residual_ok", "-"),
        ],
        Task::Imd => &[
            ("branch", "-"),
            ("root", "-"),
            ("n_roots", "-"),
            ("e_c", "photons"),
            ("stability", "-"),
            ("s21", "dB"),
            ("g_s", "dB"),
            ("g_i", "dB"),
            ("residual_ok", "-"),
        ],
        Task::Bistability => &[
            ("branch", "-"),
            ("omega0", "rad/ns"),
            ("omega2", "rad/ns"),
            ("gamma0", "rad/ns"),
            ("gamma2", "rad/ns"),
            ("possible", "-"),
            ("e_o", "photons"),
            ("omega0_o", "rad/ns"),
            ("s_p_o", "rad^2/ns^2"),
            ("power_o", "dBm"),
            ("n_roots", "-"),
        ],
        Task::Spectrum => &[
            ("n", "-"),
            ("sign", "-"),
            ("jc_energy", "GHz"),
            ("bs_energy", "GHz"),
            ("omega_n", "GHz"),
            ("theta_n", "rad"),
            ("resonance_minus", "GHz"),
            ("resonance_plus", "GHz"),
        ],
    };
    cols.extend(extra.iter().map(|(n, u)| Column::new(n, u)));
    cols
}

pub fn parameter_hash(config: &PhysicalConfig, spec: &GridSpec) -> String {
    let canonical = serde_json::to_string(&(config, spec)).expect("serializable");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
}

/// Evaluates every cell of `spec`. `workers == 0` uses all cores.
pub fn run_sweep(
    spec: &GridSpec,
    config: &PhysicalConfig,
    workers: usize,
) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    config
        .validate()
        .map_err(|e| SweepError::Grid(format!("device: {e}")))?;
    let cells: Vec<(usize, CellPoint)> = spec.cells().into_iter().enumerate().collect();
    let outputs = exec::ordered_map(&cells, workers, |&(idx, point)| {
        evaluate_cell(spec, config, idx, point)
    });

    let mut rows = Vec::new();
    let mut diagnostics = Vec::new();
    let mut warnings = Vec::new();
    for out in outputs {
        rows.extend(out.rows);
        diagnostics.extend(out.diagnostics);
        warnings.extend(out.warnings);
    }
    let mut notes = Vec::new();
    if spec.task == Task::ShrMap {
        notes.push(
            "stability of superharmonic points uses the primary-resonance Jacobian with (g_n, Delta_n) substituted"
                .to_owned(),
        );
    }
    if matches!(spec.task, Task::TransmissionMap | Task::ShrMap) {
        notes.push(
            "combined_s21 = p_minus*ground + p_plus*excited, p = (1 -/+ P0)/2, each branch averaged over its stable roots"
                .to_owned(),
        );
    }
    Ok(SweepResult {
        metadata: Metadata {
            task: spec.task.name().to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            parameter_hash: parameter_hash(config, spec),
            tolerances: Tolerances::default(),
            notes,
        },
        columns: columns_for(spec.task),
        rows,
        diagnostics,
        warnings,
    })
}

fn evaluate_cell(spec: &GridSpec, config: &PhysicalConfig, idx: usize, point: CellPoint) -> CellOutput {
    let mut out = CellOutput::new();
    let derived = match derive(config, ghz(point.omega_f_ghz)) {
        Ok(d) => d,
        Err(e) => {
            out.diag(idx, None, e.to_string());
            return out;
        }
    };
    let omega_p = point.omega_p_ghz.map_or(derived.omega_c, ghz);
    let s_p = params::power_to_drive(point.power_dbm, omega_p, derived.gamma_c1);
    let drive = DriveConfig::new(omega_p, s_p, &derived);
    let prefix = vec![
        Value::from(idx),
        Value::num(point.omega_f_ghz),
        Value::num(to_ghz(omega_p)),
        Value::num(point.power_dbm),
    ];
    match spec.task {
        Task::TransmissionMap | Task::ShrMap | Task::Imd => {
            transmission_cell(spec, &derived, &drive, idx, &prefix, &mut out)
        }
        Task::Bistability => bistability_cell(spec, &derived, &drive, idx, &prefix, &mut out),
        Task::Spectrum => spectrum_cell(spec, &derived, idx, &prefix, &mut out),
    }
    out
}

struct BranchSolution {
    branch: Branch,
    points: Vec<FixedPoint>,
    residual_ok: Vec<bool>,
}

fn solve_branch(
    spec: &GridSpec,
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
    idx: usize,
    out: &mut CellOutput,
) -> Option<BranchSolution> {
    let result = match (spec.task, spec.solver) {
        (Task::ShrMap, _) => {
            let n = spec.shr_order.unwrap_or(1);
            ShrConfig::new(n, *drive, *derived)
                .and_then(|cfg| superharmonic::solve_shr(&cfg, branch))
                .map(|sol| {
                    if sol.argument_warning() {
                        out.warn(
                            idx,
                            Some(branch),
                            format!("Bessel argument {:.2} exceeds 30", sol.max_argument),
                        );
                    }
                    sol.points
                })
                .map_err(|e| e.to_string())
        }
        (_, Solver::Selfconsistent) => {
            steadystate::solve_selfconsistent(derived, drive, branch, None, None).map_err(|e| e.to_string())
        }
        (_, Solver::Cubic) => {
            steadystate::cubic_fixed_points(derived, drive, branch).map_err(|e| e.to_string())
        }
    };
    let points = match result {
        Ok(p) => p,
        Err(msg) => {
            out.diag(idx, Some(branch), msg);
            return None;
        }
    };
    let residual_ok: Vec<bool> = match spec.solver {
        Solver::Cubic if spec.task != Task::ShrMap => {
            let coeffs = steadystate::response_coeffs(derived, drive, branch).ok();
            points
                .iter()
                .map(|fp| coeffs.is_some_and(|c| cubic_residual_ok(&c, fp.e_c, drive.s_p, derived.gamma_c)))
                .collect()
        }
        _ => points.iter().map(|fp| residual_ok(fp, derived, drive)).collect(),
    };
    for (k, ok) in residual_ok.iter().enumerate() {
        if !ok {
            out.diag(
                idx,
                Some(branch),
                format!("root {k} (E = {:e}) violates the residual bound", points[k].e_c),
            );
        }
    }
    Some(BranchSolution {
        branch,
        points,
        residual_ok,
    })
}

fn transmission_cell(
    spec: &GridSpec,
    derived: &DerivedParams,
    drive: &DriveConfig,
    idx: usize,
    prefix: &[Value],
    out: &mut CellOutput,
) {
    let solutions: Vec<BranchSolution> = Branch::BOTH
        .iter()
        .filter_map(|&b| solve_branch(spec, derived, drive, b, idx, out))
        .collect();
    let branch_power = |b: Branch| {
        solutions
            .iter()
            .find(|s| s.branch == b)
            .and_then(|s| branch_transmission(&s.points, derived, drive.s_p))
    };
    let combined = combine_branches(
        branch_power(Branch::Ground),
        branch_power(Branch::Excited),
        derived.p0,
    );
    let offset = ghz(spec.signal_offset_khz.unwrap_or(0.0) * 1e-6);

    for sol in solutions.iter().filter(|s| spec.branch.includes(s.branch)) {
        for (k, fp) in sol.points.iter().enumerate() {
            let s21 = (drive.s_p > 0.0).then(|| to_db(transmission_power(fp.e_c, derived, drive.s_p)));
            let mut row = prefix.to_vec();
            row.extend([
                Value::from(sol.branch.name()),
                Value::from(k),
                Value::from(sol.points.len()),
                Value::num(fp.e_c),
                Value::from(stability_name(fp.stability)),
                Value::opt(s21),
            ]);
            match spec.task {
                Task::TransmissionMap => {
                    row.push(Value::opt(combined.map(to_db)));
                }
                Task::ShrMap => {
                    let n = spec.shr_order.unwrap_or(1);
                    let x = superharmonic::bessel_argument(fp.e_c, derived, drive.omega_p);
                    let ups = steadystate::upsilon_ba(
                        fp.coupling,
                        fp.qubit_detuning,
                        derived.t1,
                        derived.t2,
                        fp.e_c,
                    );
                    debug_assert!(n >= 1);
                    row.extend([
                        Value::opt(combined.map(to_db)),
                        Value::num(fp.coupling),
                        Value::num(x),
                        Value::num(ups.norm()),
                    ]);
                }
                Task::Imd => {
                    let gains = susceptibility(&jacobian(fp, derived, drive), offset)
                        .map(|chi| imd_gains(&chi.chi_cc(), derived));
                    match gains {
                        Ok((gs, gi)) => row.extend([Value::num(to_db(gs)), Value::num(to_db(gi))]),
                        Err(e) => {
                            out.diag(idx, Some(sol.branch), e.to_string());
                            row.extend([Value::Empty, Value::Empty]);
                        }
                    }
                }
                _ => unreachable!(),
            }
            row.push(Value::from(sol.residual_ok[k]));
            out.rows.push(row);
        }
    }
}

fn bistability_cell(
    spec: &GridSpec,
    derived: &DerivedParams,
    drive: &DriveConfig,
    idx: usize,
    prefix: &[Value],
    out: &mut CellOutput,
) {
    for branch in Branch::BOTH.into_iter().filter(|&b| spec.branch.includes(b)) {
        let coeffs = match steadystate::response_coeffs(derived, drive, branch) {
            Ok(c) => c,
            Err(e) => {
                out.diag(idx, Some(branch), e.to_string());
                continue;
            }
        };
        let onset = steadystate::onset_of_bistability(&coeffs);
        let n_roots = steadystate::solve_cubic(&coeffs, drive.s_p).len();
        let mut row = prefix.to_vec();
        row.extend([
            Value::from(branch.name()),
            Value::num(coeffs.omega0),
            Value::num(coeffs.omega2),
            Value::num(coeffs.gamma0),
            Value::num(coeffs.gamma2),
            Value::from(onset.is_some()),
            Value::opt(onset.map(|o| o.e_o)),
            Value::opt(onset.map(|o| o.omega0_o)),
            Value::opt(onset.map(|o| o.s_p_o)),
            Value::opt(onset.map(|o| params::drive_to_power(o.s_p_o, drive.omega_p, derived.gamma_c1))),
            Value::from(n_roots),
        ]);
        out.rows.push(row);
    }
}

fn spectrum_cell(
    spec: &GridSpec,
    derived: &DerivedParams,
    idx: usize,
    prefix: &[Value],
    out: &mut CellOutput,
) {
    let n_max = spec.n_max.unwrap_or(5);
    let jc = spectrum::jc_levels(derived, n_max);
    let bs = spectrum::bs_levels(derived, n_max);
    if bs.unreliable {
        out.warn(
            idx,
            None,
            "g1/(omega_c+omega_a) > 0.2: Bloch-Siegert correction unreliable",
        );
    }
    let resonances = spectrum::linear_resonances(derived).ok();
    let tail = |row: &mut Vec<Value>| {
        row.push(Value::opt(resonances.map(|r| to_ghz(r.0))));
        row.push(Value::opt(resonances.map(|r| to_ghz(r.1))));
    };
    let mut ground = prefix.to_vec();
    ground.extend([
        Value::Empty,
        Value::from("g"),
        Value::num(to_ghz(jc.ground)),
        Value::num(to_ghz(bs.levels.ground)),
        Value::Empty,
        Value::Empty,
    ]);
    tail(&mut ground);
    out.rows.push(ground);
    for (level, corrected) in jc.levels.iter().zip(&bs.levels.levels) {
        let mut row = prefix.to_vec();
        row.extend([
            Value::from(level.n as usize),
            Value::from(match level.sign {
                LevelSign::Minus => "-",
                LevelSign::Plus => "+",
            }),
            Value::num(to_ghz(level.energy)),
            Value::num(to_ghz(corrected.energy)),
            Value::num(to_ghz(level.omega_n)),
            Value::num(level.theta_n),
        ]);
        tail(&mut row);
        out.rows.push(row);
    }
}

pub fn to_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    let header: Vec<String> = result.columns.iter().map(Column::header).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &result.rows {
        for (k, v) in row.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            v.write_csv(&mut out);
        }
        out.push('\n');
    }
    out
}

pub fn to_json(result: &SweepResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("serializable");
    s.push('\n');
    s
}

pub fn emit(result: &SweepResult, format: Format, writer: &mut impl Write) -> io::Result<()> {
    let text = match format {
        Format::Csv => to_csv(result),
        Format::Json => to_json(result),
    };
    writer.write_all(text.as_bytes())
}

pub fn emit_to_path(result: &SweepResult, format: Format, path: &Path) -> Result<(), SweepError> {
    let io_err = |source| SweepError::Io {
        path: path.to_owned(),
        source,
    };
    let mut file = io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    emit(result, format, &mut file).map_err(io_err)?;
    file.flush().map_err(io_err)
}

/// Complex S21 for a fixed point, re-exported for table consumers.
pub fn s21(fp: &FixedPoint, derived: &DerivedParams, drive: &DriveConfig) -> Option<C64> {
    response::transmission(fp, derived, drive).ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> GridSpec {
        let mut spec = GridSpec::new(
            Task::TransmissionMap,
            vec![Axis::linear(AxisName::OmegaP, 6.6407, 6.6409, 2)],
        );
        spec.omega_f_ghz = Some(8.1);
        spec.power_dbm = Some(-127.0);
        spec
    }

    #[test]
    fn weights_sum_to_one() {
        for p0 in [-1.0, -0.999_998, -0.3, 0.0] {
            let (m, p) = branch_weights(p0);
            assert_eq!(m + p, 1.0);
        }
        assert_eq!(combine_branches(Some(0.7), Some(0.1), -1.0), Some(0.7));
        assert!((combine_branches(Some(0.7), Some(0.1), 0.0).unwrap() - 0.4).abs() < 1e-15);
        assert_eq!(combine_branches(None, Some(0.1), -0.5), Some(0.1));
    }

    #[test]
    fn grid_validation() {
        let mut spec = small_spec();
        spec.axes[0].count = 1;
        assert!(spec.validate().is_err());
        let mut spec = small_spec();
        spec.axes[0].stop = spec.axes[0].start;
        assert!(spec.validate().is_err());
        let mut spec = small_spec();
        spec.power_dbm = None;
        assert!(spec.validate().is_err());
        let mut spec = small_spec();
        spec.task = Task::ShrMap;
        assert!(spec.validate().is_err());
        spec.shr_order = Some(2);
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn cells_are_axis_major() {
        let mut spec = GridSpec::new(
            Task::TransmissionMap,
            vec![
                Axis::linear(AxisName::OmegaF, 1.0, 2.0, 2),
                Axis::linear(AxisName::OmegaP, 6.0, 7.0, 3),
            ],
        );
        spec.power_dbm = Some(-120.0);
        let cells = spec.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!(cells[0].omega_f_ghz, 1.0);
        assert_eq!(cells[2].omega_f_ghz, 1.0);
        assert_eq!(cells[3].omega_f_ghz, 2.0);
        assert_eq!(cells[1].omega_p_ghz, Some(6.5));
    }

    #[test]
    fn empty_result_is_header_only() {
        let mut result = run_sweep(&small_spec(), &PhysicalConfig::reference_device(), 1).unwrap();
        result.rows.clear();
        let csv = to_csv(&result);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("cell[-],omega_f[GHz],omega_p[GHz],power[dBm],branch[-]"));
    }

    #[test]
    fn json_round_trip() {
        let result = run_sweep(&small_spec(), &PhysicalConfig::reference_device(), 1).unwrap();
        assert!(result.rows.len() >= 2);
        let back: SweepResult = serde_json::from_str(&to_json(&result)).unwrap();
        assert_eq!(back, result);
    }

    #[test]
    fn decoupled_map_matches_lorentzian() {
        let mut config = PhysicalConfig::reference_device();
        config.g = 1e-300;
        let spec = small_spec();
        let result = run_sweep(&spec, &config, 1).unwrap();
        assert!(result.diagnostics.is_empty(), "{:?}", result.diagnostics);
        let s21 = result.column("s21");
        let omega_p = result.column("omega_p");
        let branch = result.column("branch");
        let mut ground_rows = 0;
        for k in 0..result.rows.len() {
            if branch[k].as_str() != Some("ground") {
                continue;
            }
            ground_rows += 1;
            let dp = ghz(omega_p[k].as_f64().unwrap()) - config.omega_c;
            let gc = config.gamma_c();
            let want = 4.0 * config.gamma_c1 * config.gamma_c2 / (gc * gc + dp * dp);
            assert!((s21[k].as_f64().unwrap() - to_db(want)).abs() < 1e-6);
        }
        assert_eq!(ground_rows, 2);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let config = PhysicalConfig::reference_device();
        let spec = small_spec();
        assert_eq!(parameter_hash(&config, &spec), parameter_hash(&config, &spec));
        let mut other = spec.clone();
        other.power_dbm = Some(-126.0);
        assert_ne!(parameter_hash(&config, &spec), parameter_hash(&config, &other));
    }
}
