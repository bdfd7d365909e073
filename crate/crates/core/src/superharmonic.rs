//! Steady state near the n-th superharmonic resonance ω_a ≈ n·ω_p.
//!
//! The qubit sees an n-photon drive with amplitude-dependent coupling
//! gₙ(E) = g₁·J_{1−n}(4g₁ω_f√E/(ω_pω_Δ)) and detuning Δₙ = nω_p − ω_a.
//! Fixed points carry the coherence in the frame rotating at nω_p, so the
//! primary-resonance Jacobian applies with (gₙ, Δₙ) substituted.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::params::{DerivedParams, DriveConfig};
use crate::specfun::{bessel_j, BesselError};
use crate::steadystate::{self, Branch, FixedPoint, SteadyStateError};

pub const MAX_ORDER: u32 = 8;
/// Bessel arguments beyond this are flagged in [`ShrSolution`].
pub const ARGUMENT_WARN: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShrError {
    #[error("superharmonic order must be in 1..=8 (got {0})")]
    Order(u32),
    #[error(transparent)]
    Bessel(#[from] BesselError),
    #[error(transparent)]
    SteadyState(#[from] SteadyStateError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShrConfig {
    pub n: u32,
    pub drive: DriveConfig,
    pub derived: DerivedParams,
}

impl ShrConfig {
    pub fn new(n: u32, drive: DriveConfig, derived: DerivedParams) -> Result<Self, ShrError> {
        if !(1..=MAX_ORDER).contains(&n) {
            return Err(ShrError::Order(n));
        }
        Ok(Self { n, drive, derived })
    }

    pub fn detuning(&self) -> f64 {
        detuning_n(self.n, self.drive.omega_p, self.derived.omega_a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShrSolution {
    pub points: Vec<FixedPoint>,
    /// Largest |x| = |4g₁ω_f√E/(ω_pω_Δ)| over the returned points.
    pub max_argument: f64,
}

impl ShrSolution {
    pub fn argument_warning(&self) -> bool {
        self.max_argument > ARGUMENT_WARN
    }
}

/// x = 4g₁ω_f√E/(ω_pω_Δ), signed with ω_f.
pub fn bessel_argument(e: f64, derived: &DerivedParams, omega_p: f64) -> f64 {
    4.0 * derived.g1 * derived.omega_f * e.sqrt() / (omega_p * derived.omega_delta)
}

pub fn effective_coupling(n: u32, e: f64, derived: &DerivedParams, omega_p: f64) -> Result<f64, ShrError> {
    let order = 1 - n as i32;
    Ok(derived.g1 * bessel_j(order, bessel_argument(e, derived, omega_p))?)
}

pub fn detuning_n(n: u32, omega_p: f64, omega_a: f64) -> f64 {
    n as f64 * omega_p - omega_a
}

pub fn upsilon_ba_n(n: u32, e: f64, derived: &DerivedParams, omega_p: f64) -> Result<C64, ShrError> {
    let g_n = effective_coupling(n, e, derived, omega_p)?;
    let delta_n = detuning_n(n, omega_p, derived.omega_a);
    Ok(steadystate::upsilon_ba(g_n, delta_n, derived.t1, derived.t2, e))
}

pub fn solve_shr(cfg: &ShrConfig, branch: Branch) -> Result<ShrSolution, ShrError> {
    let ShrConfig { n, drive, derived } = *cfg;
    if !(1..=MAX_ORDER).contains(&n) {
        return Err(ShrError::Order(n));
    }
    let order = 1 - n as i32;
    // The order is validated above and x is finite for finite E, so the
    // Bessel evaluation cannot fail inside the residual.
    let coupling =
        |e: f64| derived.g1 * bessel_j(order, bessel_argument(e, &derived, drive.omega_p)).unwrap_or(0.0);
    let points = steadystate::solve_with_coupling(&derived, &drive, branch, coupling, cfg.detuning())?;
    let max_argument = points
        .iter()
        .map(|fp| bessel_argument(fp.e_c, &derived, drive.omega_p).abs())
        .fold(0.0, f64::max);
    Ok(ShrSolution { points, max_argument })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, ghz, PhysicalConfig};

    fn derived(omega_f_ghz: f64) -> DerivedParams {
        derive(&PhysicalConfig::reference_device(), ghz(omega_f_ghz)).unwrap()
    }

    #[test]
    fn primary_coupling_recovered_at_zero_amplitude() {
        let d = derived(13.1);
        assert_eq!(effective_coupling(1, 0.0, &d, d.omega_c).unwrap(), d.g1);
        for n in 2..=MAX_ORDER {
            assert_eq!(effective_coupling(n, 0.0, &d, d.omega_c).unwrap(), 0.0);
        }
    }

    #[test]
    fn detuning_arithmetic() {
        assert_eq!(detuning_n(3, 2.0, 6.0), 0.0);
        assert_eq!(detuning_n(1, 5.0, 7.5), -2.5);
    }

    #[test]
    fn invisible_qubit_without_coupling() {
        let d = derived(13.1);
        assert_eq!(upsilon_ba_n(2, 0.0, &d, d.omega_c).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn order_is_validated() {
        let d = derived(13.1);
        let drive = DriveConfig::new(d.omega_c, 1e-4, &d);
        assert_eq!(ShrConfig::new(0, drive, d), Err(ShrError::Order(0)));
        assert_eq!(ShrConfig::new(9, drive, d), Err(ShrError::Order(9)));
    }

    #[test]
    fn undriven_superharmonic_is_at_rest() {
        let d = derived(13.1);
        let drive = DriveConfig::new(d.omega_c, 0.0, &d);
        let cfg = ShrConfig::new(2, drive, d).unwrap();
        let sol = solve_shr(&cfg, Branch::Ground).unwrap();
        assert_eq!(sol.points.len(), 1);
        assert_eq!(sol.points[0].e_c, 0.0);
        assert_eq!(sol.points[0].coupling, 0.0);
    }
}
