//! Mean-field fixed points of the driven cavity–qubit system.
//!
//! Two solvers are provided. The weak-nonlinear one expands the qubit
//! back-action to first order in the photon number E and solves the
//! resulting real cubic in closed form. The self-consistent one keeps the
//! full saturable back-action Υ_ba(E) and brackets zeros of
//! `E·|D(E)|² − S_p` on a log grid.

use std::f64::consts::FRAC_PI_3;

use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

use crate::params::{DerivedParams, DriveConfig};
use crate::response;

/// Below this |Δ₁·T₂| the weak-nonlinear expansion is refused.
pub const DETUNING_SINGULARITY: f64 = 1e-6;
pub const SCAN_MIN: f64 = 1e-12;
pub const SCAN_MAX: f64 = 1e8;
pub const SCAN_POINTS: usize = 512;
/// Relative tolerance on the stability margin, in units of γ_c.
pub const MARGINAL_TOL: f64 = 1e-9;

const TRIPLE_TOL: f64 = 1e-12;
const DOUBLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SteadyStateError {
    #[error("|Δ1·T2| = {0:e} is below 1e-6; use the self-consistent solver")]
    DetuningSingularity(f64),
    #[error("drive strength must be non-negative and finite (got {0})")]
    Drive(f64),
    #[error("residual still negative at E = {limit:e} photons ({found} roots below); drive is unphysically strong")]
    ScanBound { limit: f64, found: usize },
}

/// Which dressed branch the back-action follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Qubit mostly in its ground state; uses P0 as is.
    Ground,
    /// Qubit mostly in its excited state; uses −P0.
    Excited,
}

impl Branch {
    pub const BOTH: [Branch; 2] = [Branch::Ground, Branch::Excited];

    pub fn effective_polarization(self, p0: f64) -> f64 {
        match self {
            Branch::Ground => p0,
            Branch::Excited => -p0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Branch::Ground => "ground",
            Branch::Excited => "excited",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    Stable,
    Unstable,
    Marginal,
}

/// Coefficients of the effective Duffing equation
/// `(iΩ + Γ)α + drive = 0` with Ω = Ω₀ + Ω₂E and Γ = Γ₀ + Γ₂E.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResponseCoeffs {
    pub omega0: f64,
    pub omega2: f64,
    pub gamma0: f64,
    pub gamma2: f64,
}

impl ResponseCoeffs {
    /// Coefficients (a₃, a₂, a₁) of `a₃E³ + a₂E² + a₁E = S_p`.
    pub fn cubic(&self) -> (f64, f64, f64) {
        let Self {
            omega0,
            omega2,
            gamma0,
            gamma2,
        } = *self;
        (
            omega2 * omega2 + gamma2 * gamma2,
            2.0 * (omega0 * omega2 + gamma0 * gamma2),
            omega0 * omega0 + gamma0 * gamma0,
        )
    }

    /// Left-hand side of the cubic steady-state equation, `[Ω² + Γ²]·E`.
    pub fn drive_for(&self, e: f64) -> f64 {
        let (a3, a2, a1) = self.cubic();
        ((a3 * e + a2) * e + a1) * e
    }

    pub fn load(&self, e: f64) -> C64 {
        C64::new(self.gamma0 + self.gamma2 * e, self.omega0 + self.omega2 * e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedPoint {
    pub alpha_r: C64,
    pub e_c: f64,
    pub p_z: f64,
    /// Qubit coherence. For superharmonic fixed points this is the
    /// coherence in the frame rotating at nω_p.
    pub p_plus_r: C64,
    pub branch: Branch,
    /// Qubit coupling in effect at this point (g₁, or gₙ(E)).
    pub coupling: f64,
    /// Qubit detuning in effect at this point (Δ₁, or Δₙ).
    pub qubit_detuning: f64,
    pub stability: Stability,
}

impl FixedPoint {
    pub fn stable(&self) -> bool {
        self.stability == Stability::Stable
    }
}

/// Onset of bistability of the cubic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BistabilityOnset {
    pub e_o: f64,
    pub omega0_o: f64,
    pub s_p_o: f64,
}

/// A root of the weak-nonlinear cubic. `coincident` marks members of a
/// double or triple root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicRoot {
    pub e: f64,
    pub coincident: bool,
}

/// How D(E) is evaluated when building a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    /// First-order expansion in E.
    Cubic(ResponseCoeffs),
    /// Full back-action with the given qubit coupling and detuning.
    Full { coupling: f64, detuning: f64 },
}

/// Back-action term Υ_ba = g²T₂(i − ΔT₂)/(1 + Δ²T₂² + 4g²T₁T₂E).
pub fn upsilon_ba(g: f64, detuning: f64, t1: f64, t2: f64, e: f64) -> C64 {
    let g2 = g * g;
    let den = 1.0 + (detuning * t2).powi(2) + 4.0 * g2 * t1 * t2 * e;
    C64::new(-detuning * t2, 1.0) * (g2 * t2 / den)
}

/// D(E) = −iΔ_pc + γ_c + (iK_c + γ_c4)E + iΥ_ba(E)·P_eff.
pub fn load(derived: &DerivedParams, drive: &DriveConfig, p_eff: f64, g: f64, detuning: f64, e: f64) -> C64 {
    bare_load(derived, drive, e) + C64::i() * upsilon_ba(g, detuning, derived.t1, derived.t2, e) * p_eff
}

fn bare_load(derived: &DerivedParams, drive: &DriveConfig, e: f64) -> C64 {
    C64::new(
        derived.gamma_c + derived.gamma_c4 * e,
        -drive.delta_pc + derived.kerr * e,
    )
}

pub fn response_coeffs(
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
) -> Result<ResponseCoeffs, SteadyStateError> {
    let (t1, t2) = (derived.t1, derived.t2);
    let d1 = drive.delta_1;
    if (d1 * t2).abs() < DETUNING_SINGULARITY {
        return Err(SteadyStateError::DetuningSingularity((d1 * t2).abs()));
    }
    let p = branch.effective_polarization(derived.p0);
    let g2 = derived.g1 * derived.g1;
    // Written with T₁, T₂ instead of ζₙ = 1/(Δ₁Tₙ) so that Δ₁ never divides.
    let a = 1.0 + (d1 * t2).powi(2);
    let quartic = 4.0 * g2 * g2 * p * t1 * t2 * t2 / (a * a);
    Ok(ResponseCoeffs {
        omega0: -drive.delta_pc - g2 * p * d1 * t2 * t2 / a,
        omega2: derived.kerr + quartic * d1 * t2,
        gamma0: derived.gamma_c - g2 * p * t2 / a,
        gamma2: derived.gamma_c4 + quartic,
    })
}

/// All non-negative real roots of `[(Ω₀+Ω₂E)² + (Γ₀+Γ₂E)²]·E = S_p`,
/// ascending. Double and triple roots are repeated and flagged.
pub fn solve_cubic(coeffs: &ResponseCoeffs, s_p: f64) -> Vec<CubicRoot> {
    if s_p == 0.0 {
        return vec![CubicRoot {
            e: 0.0,
            coincident: false,
        }];
    }
    let (a3, a2, a1) = coeffs.cubic();
    if a3 == 0.0 {
        return if a1 > 0.0 {
            vec![CubicRoot {
                e: s_p / a1,
                coincident: false,
            }]
        } else {
            Vec::new()
        };
    }
    let f = |e: f64| ((a3 * e + a2) * e + a1) * e - s_p;
    let df = |e: f64| (3.0 * a3 * e + 2.0 * a2) * e + a1;
    let polish = |e: f64| {
        let slope = df(e);
        if slope == 0.0 {
            return e;
        }
        let next = e - f(e) / slope;
        if f(next).abs() < f(e).abs() {
            next
        } else {
            e
        }
    };

    let b = a2 / a3;
    let c = a1 / a3;
    let d = -s_p / a3;
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let scale = (b.abs() / 3.0).max(c.abs().sqrt()).max(d.abs().cbrt());

    let mut roots: Vec<CubicRoot> =
        if p.abs() <= TRIPLE_TOL * scale * scale && q.abs() <= TRIPLE_TOL * scale.powi(3) {
            vec![
                CubicRoot {
                    e: -shift,
                    coincident: true,
                };
                3
            ]
        } else {
            let disc = 4.0 * p.powi(3) + 27.0 * q * q;
            let disc_scale = 4.0 * p.abs().powi(3) + 27.0 * q * q;
            if disc.abs() <= DOUBLE_TOL * disc_scale {
                let simple = 3.0 * q / p - shift;
                let double = -1.5 * q / p - shift;
                vec![
                    CubicRoot {
                        e: polish(simple),
                        coincident: false,
                    },
                    CubicRoot {
                        e: double,
                        coincident: true,
                    },
                    CubicRoot {
                        e: double,
                        coincident: true,
                    },
                ]
            } else if disc > 0.0 {
                let root = (0.25 * q * q + p.powi(3) / 27.0).sqrt();
                let u = -(q.signum()) * (0.5 * q.abs() + root).cbrt();
                let v = if u == 0.0 { 0.0 } else { -p / (3.0 * u) };
                vec![CubicRoot {
                    e: polish(u + v - shift),
                    coincident: false,
                }]
            } else {
                let r = 2.0 * (-p / 3.0).sqrt();
                let arg = (3.0 * q / (p * r)).clamp(-1.0, 1.0);
                let phi = arg.acos() / 3.0;
                (0..3)
                    .map(|k| CubicRoot {
                        e: polish(r * (phi - 2.0 * FRAC_PI_3 * k as f64).cos() - shift),
                        coincident: false,
                    })
                    .collect()
            }
        };
    roots.retain(|r| r.e >= 0.0);
    roots.sort_by(|x, y| x.e.total_cmp(&y.e));
    roots
}

/// Onset of bistability, or `None` when Γ₂ ≥ |Ω₂|/√3 (or Ω₂ = 0).
pub fn onset_of_bistability(coeffs: &ResponseCoeffs) -> Option<BistabilityOnset> {
    let ResponseCoeffs {
        omega2,
        gamma0,
        gamma2,
        ..
    } = *coeffs;
    let sqrt3 = 3f64.sqrt();
    let abs2 = omega2.abs();
    if omega2 == 0.0 || !(gamma2 < abs2 / sqrt3) {
        return None;
    }
    let gap = abs2 - sqrt3 * gamma2;
    let norm2 = omega2 * omega2 + gamma2 * gamma2;
    Some(BistabilityOnset {
        e_o: 2.0 * gamma0 / (sqrt3 * gap),
        omega0_o: -gamma0 * omega2.signum() * (4.0 * gamma2 * abs2 + sqrt3 * norm2)
            / (omega2 * omega2 - 3.0 * gamma2 * gamma2),
        s_p_o: 8.0 / (3.0 * sqrt3) * gamma0.powi(3) * norm2 / gap.powi(3),
    })
}

pub fn fixed_point_from_e(
    e: f64,
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
    model: Model,
) -> FixedPoint {
    let p_eff = branch.effective_polarization(derived.p0);
    let (d, coupling, detuning) = match model {
        Model::Cubic(coeffs) => (coeffs.load(e), derived.g1, drive.delta_1),
        Model::Full { coupling, detuning } => (
            load(derived, drive, p_eff, coupling, detuning, e),
            coupling,
            detuning,
        ),
    };
    let alpha_r = if e > 0.0 && drive.s_p > 0.0 {
        // α = −i·e^{iφ_c1}·√S_p / D, with the modulus pinned to √E.
        let direction = -C64::i() * C64::from_polar(1.0, derived.phi_c1) / d;
        direction / direction.norm() * e.sqrt()
    } else {
        C64::new(0.0, 0.0)
    };
    let (t1, t2) = (derived.t1, derived.t2);
    let p_z = p_eff / (1.0 + 4.0 * coupling * coupling * t1 * t2 * e / (1.0 + (detuning * t2).powi(2)));
    let p_plus_r = -C64::i() * coupling * t2 * alpha_r.conj() * p_z / C64::new(1.0, detuning * t2);
    let mut fp = FixedPoint {
        alpha_r,
        e_c: e,
        p_z,
        p_plus_r,
        branch,
        coupling,
        qubit_detuning: detuning,
        stability: Stability::Marginal,
    };
    fp.stability = classify_stability(&fp, derived, drive);
    fp
}

/// Fixed points of the weak-nonlinear model.
pub fn cubic_fixed_points(
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
) -> Result<Vec<FixedPoint>, SteadyStateError> {
    check_drive(drive.s_p)?;
    let coeffs = response_coeffs(derived, drive, branch)?;
    Ok(solve_cubic(&coeffs, drive.s_p)
        .into_iter()
        .map(|root| {
            let mut fp = fixed_point_from_e(root.e, derived, drive, branch, Model::Cubic(coeffs));
            if root.coincident {
                fp.stability = Stability::Marginal;
            }
            fp
        })
        .collect())
}

/// Fixed points of the full model. `g_eff` and `delta_eff` default to g₁
/// and Δ₁.
pub fn solve_selfconsistent(
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
    g_eff: Option<f64>,
    delta_eff: Option<f64>,
) -> Result<Vec<FixedPoint>, SteadyStateError> {
    let g = g_eff.unwrap_or(derived.g1);
    let detuning = delta_eff.unwrap_or(drive.delta_1);
    solve_with_coupling(derived, drive, branch, |_| g, detuning)
}

/// Self-consistent solver with an amplitude-dependent coupling g(E).
pub fn solve_with_coupling(
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
    coupling: impl Fn(f64) -> f64,
    detuning: f64,
) -> Result<Vec<FixedPoint>, SteadyStateError> {
    check_drive(drive.s_p)?;
    let p_eff = branch.effective_polarization(derived.p0);
    let residual = |e: f64| e * load(derived, drive, p_eff, coupling(e), detuning, e).norm_sqr() - drive.s_p;
    let roots = scan_roots(residual)?;
    Ok(roots
        .into_iter()
        .map(|e| {
            let model = Model::Full {
                coupling: coupling(e),
                detuning,
            };
            fixed_point_from_e(e, derived, drive, branch, model)
        })
        .collect())
}

/// `E·|D(E)|² − S_p` for the full model.
pub fn selfconsistent_residual(
    derived: &DerivedParams,
    drive: &DriveConfig,
    branch: Branch,
    g: f64,
    detuning: f64,
    e: f64,
) -> f64 {
    let p_eff = branch.effective_polarization(derived.p0);
    e * load(derived, drive, p_eff, g, detuning, e).norm_sqr() - drive.s_p
}

/// Scan grid: E = 0 followed by 511 log-spaced points on [1e-12, 1e8].
pub fn scan_grid() -> Vec<f64> {
    let mut grid = Vec::with_capacity(SCAN_POINTS);
    grid.push(0.0);
    let steps = (SCAN_POINTS - 2) as f64;
    let (lo, hi) = (SCAN_MIN.ln(), SCAN_MAX.ln());
    for k in 0..SCAN_POINTS - 1 {
        let t = k as f64 / steps;
        grid.push((lo + t * (hi - lo)).exp());
    }
    *grid.last_mut().unwrap() = SCAN_MAX;
    grid
}

fn scan_roots(residual: impl Fn(f64) -> f64) -> Result<Vec<f64>, SteadyStateError> {
    let grid = scan_grid();
    let mut roots = Vec::new();
    let mut prev_e = grid[0];
    let mut prev_r = residual(prev_e);
    if prev_r == 0.0 {
        roots.push(prev_e);
    }
    for &e in &grid[1..] {
        let r = residual(e);
        if r == 0.0 {
            roots.push(e);
        } else if prev_r != 0.0 && (r > 0.0) != (prev_r > 0.0) {
            roots.push(bisect(&residual, prev_e, prev_r, e));
        }
        prev_e = e;
        prev_r = r;
    }
    if prev_r < 0.0 {
        return Err(SteadyStateError::ScanBound {
            limit: SCAN_MAX,
            found: roots.len(),
        });
    }
    Ok(roots)
}

/// Bisection down to adjacent floating-point numbers; returns whichever
/// end of the final bracket has the smaller residual.
fn bisect(f: &impl Fn(f64) -> f64, mut lo: f64, f_lo: f64, mut hi: f64) -> f64 {
    let lo_negative = f_lo < 0.0;
    let mut r_lo = f_lo;
    let mut r_hi = f(hi);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let r = f(mid);
        if r == 0.0 {
            return mid;
        }
        if (r < 0.0) == lo_negative {
            lo = mid;
            r_lo = r;
        } else {
            hi = mid;
            r_hi = r;
        }
    }
    if r_lo.abs() <= r_hi.abs() {
        lo
    } else {
        hi
    }
}

fn check_drive(s_p: f64) -> Result<(), SteadyStateError> {
    if s_p >= 0.0 && s_p.is_finite() {
        Ok(())
    } else {
        Err(SteadyStateError::Drive(s_p))
    }
}

/// Stable iff every Jacobian eigenvalue has a positive real part.
pub fn classify_stability(fp: &FixedPoint, derived: &DerivedParams, drive: &DriveConfig) -> Stability {
    let min_re = response::jacobian(fp, derived, drive)
        .eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::INFINITY, f64::min);
    if min_re.abs() < MARGINAL_TOL * derived.gamma_c {
        Stability::Marginal
    } else if min_re > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Mean-field residuals (Θ_R, Θ_z, Θ_+) at a fixed point.
pub fn theta_residuals(fp: &FixedPoint, derived: &DerivedParams, drive: &DriveConfig) -> [C64; 3] {
    let i = C64::i();
    let g = fp.coupling;
    let alpha = fp.alpha_r;
    let pp = fp.p_plus_r;
    let p_eff = fp.branch.effective_polarization(derived.p0);
    let b_in = drive.input_amplitude(derived.gamma_c1);
    let theta_r = bare_load(derived, drive, alpha.norm_sqr()) * alpha
        + i * (2.0 * derived.gamma_c1).sqrt() * C64::from_polar(1.0, derived.phi_c1) * b_in
        + i * g * pp.conj();
    let theta_z =
        C64::from((fp.p_z - p_eff) / derived.t1) + 2.0 * i * g * (alpha * pp - pp.conj() * alpha.conj());
    let theta_plus = pp / derived.t2 + i * fp.qubit_detuning * pp + i * g * alpha.conj() * fp.p_z;
    [theta_r, theta_z, theta_plus]
}
