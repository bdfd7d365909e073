//! Device parameters and flux-derived quantities.
//!
//! Internally every time is in nanoseconds and every frequency or rate is an
//! angular quantity in rad/ns. The JSON config uses laboratory units (GHz for
//! ordinary frequencies, mK, µs, dBm) and is converted once on load.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Physical constants (SI, exact 2019 redefinition values where applicable).
pub mod constants {
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Magnetic flux quantum h/2e.
    pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
}

use constants::{BOLTZMANN, FLUX_QUANTUM, HBAR};

/// Seconds per internal time unit.
const NS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamsError {
    #[error("temperature must be positive (got {0} K)")]
    Temperature(f64),
    #[error("qubit gap omega_delta must be positive (got {0})")]
    QubitGap(f64),
    #[error("{name} must be {requirement} (got {value})")]
    Invalid {
        name: &'static str,
        requirement: &'static str,
        value: f64,
    },
    #[error("no qubit relaxation source: give gamma_q1 (and gamma_q2) or both t1_law and t2_law")]
    MissingRelaxation,
}

/// Empirical longitudinal relaxation law `T1 = base · (1 + slope·|ω_f|)`.
///
/// `base` in ns, `slope` in ns (multiplies ω_f in rad/ns).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T1Law {
    pub base: f64,
    pub slope: f64,
}

impl T1Law {
    pub fn eval(&self, omega_f: f64) -> f64 {
        self.base * (1.0 + self.slope * omega_f.abs())
    }
}

/// Empirical dephasing law `1/T2 = rate · (1 + flux_coeff·|ω_f|/ω_a)`.
///
/// `rate` in 1/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct T2Law {
    pub rate: f64,
    pub flux_coeff: f64,
}

impl T2Law {
    pub fn eval(&self, omega_f: f64, omega_a: f64) -> f64 {
        1.0 / (self.rate * (1.0 + self.flux_coeff * omega_f.abs() / omega_a))
    }
}

/// Raw device parameters in internal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConfig {
    pub omega_c: f64,
    pub kerr: f64,
    pub gamma_c1: f64,
    pub gamma_c2: f64,
    pub gamma_c3: f64,
    pub gamma_c4: f64,
    pub phi_c1: f64,
    pub phi_c2: f64,
    pub phi_c3: f64,
    pub phi_c4: f64,
    pub omega_delta: f64,
    pub g: f64,
    pub gamma_q1: Option<f64>,
    pub gamma_q2: Option<f64>,
    /// Kelvin.
    pub temperature: f64,
    pub t1_law: Option<T1Law>,
    pub t2_law: Option<T2Law>,
}

impl PhysicalConfig {
    /// Device used for the flux/pump maps: f_c = 6.6408 GHz, gap 1.12 GHz,
    /// g/2π = 0.274 GHz, γ_c1 = 5e-6·ω_c, γ_c2 = 1.1·γ_c1, T = 23 mK and the
    /// empirical T1/T2 laws.
    pub fn reference_device() -> Self {
        let omega_c = TAU * 6.6408;
        let gamma_c1 = 5e-6 * omega_c;
        Self {
            omega_c,
            kerr: 0.0,
            gamma_c1,
            gamma_c2: 1.1 * gamma_c1,
            gamma_c3: 0.0,
            gamma_c4: 0.0,
            phi_c1: 0.0,
            phi_c2: 0.0,
            phi_c3: 0.0,
            phi_c4: 0.0,
            omega_delta: TAU * 1.12,
            g: TAU * 0.274,
            gamma_q1: None,
            gamma_q2: None,
            temperature: 0.023,
            t1_law: Some(T1Law {
                base: 1200.0,
                slope: 0.45,
            }),
            t2_law: Some(T2Law {
                rate: 4.5e-3,
                flux_coeff: 44.0,
            }),
        }
    }

    pub fn gamma_c(&self) -> f64 {
        self.gamma_c1 + self.gamma_c2 + self.gamma_c3
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let positive = [
            ("omega_c", self.omega_c),
            ("gamma_c1", self.gamma_c1),
            ("gamma_c2", self.gamma_c2),
            ("g", self.g),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ParamsError::Invalid {
                    name,
                    requirement: "positive and finite",
                    value,
                });
            }
        }
        let non_negative = [
            ("kerr", self.kerr),
            ("gamma_c3", self.gamma_c3),
            ("gamma_c4", self.gamma_c4),
        ];
        for (name, value) in non_negative {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(ParamsError::Invalid {
                    name,
                    requirement: "non-negative and finite",
                    value,
                });
            }
        }
        if !(self.omega_delta > 0.0 && self.omega_delta.is_finite()) {
            return Err(ParamsError::QubitGap(self.omega_delta));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(ParamsError::Temperature(self.temperature));
        }
        match (self.t1_law, self.t2_law) {
            (Some(_), Some(_)) => {}
            _ => {
                let q1 = self.gamma_q1.ok_or(ParamsError::MissingRelaxation)?;
                if !(q1 > 0.0) {
                    return Err(ParamsError::Invalid {
                        name: "gamma_q1",
                        requirement: "positive",
                        value: q1,
                    });
                }
                let q2 = self.gamma_q2.unwrap_or(0.0);
                if !(q2 >= 0.0) {
                    return Err(ParamsError::Invalid {
                        name: "gamma_q2",
                        requirement: "non-negative",
                        value: q2,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Every flux-dependent quantity needed downstream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedParams {
    pub omega_c: f64,
    pub omega_delta: f64,
    pub omega_f: f64,
    /// Mixing angle in (0, π), tan θ = ω_Δ/ω_f.
    pub theta: f64,
    pub omega_a: f64,
    pub beta_f: f64,
    pub g1: f64,
    pub n0: f64,
    pub p0: f64,
    pub t1: f64,
    pub t2: f64,
    pub gamma_c: f64,
    pub kerr: f64,
    pub gamma_c1: f64,
    pub gamma_c2: f64,
    pub gamma_c4: f64,
    pub phi_c1: f64,
    pub phi_c2: f64,
}

impl DerivedParams {
    /// cot θ = ω_f/ω_Δ.
    pub fn cot_theta(&self) -> f64 {
        self.omega_f / self.omega_delta
    }

    /// Cavity–qubit detuning Δ = ω_c − ω_a.
    pub fn cavity_qubit_detuning(&self) -> f64 {
        self.omega_c - self.omega_a
    }

    /// Same parameters with the effective coupling replaced. Used by the
    /// spectrum scaling checks, which vary g₁ at fixed mixing angle.
    pub fn with_g1(mut self, g1: f64) -> Self {
        self.g1 = g1;
        self
    }
}

/// Bose occupation of a mode at angular frequency `omega` (rad/ns).
pub fn bose_occupation(omega: f64, temperature: f64) -> f64 {
    let x = HBAR * omega / NS / (BOLTZMANN * temperature);
    1.0 / x.exp_m1()
}

pub fn thermal_polarization(n0: f64) -> f64 {
    -1.0 / (2.0 * n0 + 1.0)
}

pub fn derive(config: &PhysicalConfig, omega_f: f64) -> Result<DerivedParams, ParamsError> {
    if !(config.temperature > 0.0 && config.temperature.is_finite()) {
        return Err(ParamsError::Temperature(config.temperature));
    }
    if !(config.omega_delta > 0.0 && config.omega_delta.is_finite()) {
        return Err(ParamsError::QubitGap(config.omega_delta));
    }
    if !omega_f.is_finite() {
        return Err(ParamsError::Invalid {
            name: "omega_f",
            requirement: "finite",
            value: omega_f,
        });
    }
    let omega_delta = config.omega_delta;
    let omega_a = omega_f.hypot(omega_delta);
    let theta = omega_delta.atan2(omega_f);
    let beta_f = omega_a / omega_delta;
    let g1 = config.g * (omega_delta / omega_a);
    let n0 = bose_occupation(omega_a, config.temperature);
    let p0 = thermal_polarization(n0);

    let (t1, t2) = match (config.t1_law, config.t2_law) {
        (Some(t1_law), Some(t2_law)) => (t1_law.eval(omega_f), t2_law.eval(omega_f, omega_a)),
        _ => {
            let q1 = config.gamma_q1.ok_or(ParamsError::MissingRelaxation)?;
            let q2 = config.gamma_q2.unwrap_or(0.0);
            (-p0 / q1, -p0 / (0.5 * q1 + q2))
        }
    };

    Ok(DerivedParams {
        omega_c: config.omega_c,
        omega_delta,
        omega_f,
        theta,
        omega_a,
        beta_f,
        g1,
        n0,
        p0,
        t1,
        t2,
        gamma_c: config.gamma_c(),
        kerr: config.kerr,
        gamma_c1: config.gamma_c1,
        gamma_c2: config.gamma_c2,
        gamma_c4: config.gamma_c4,
        phi_c1: config.phi_c1,
        phi_c2: config.phi_c2,
    })
}

/// Photon flux |b_in|² in photons/ns for an input power in dBm at angular
/// frequency `omega_p`.
pub fn photon_flux(power_dbm: f64, omega_p: f64) -> f64 {
    let watts = 1e-3 * 10f64.powf(power_dbm / 10.0);
    watts / (HBAR * omega_p / NS) * NS
}

/// Drive strength S_p = 2γ_c1|b_in|².
pub fn power_to_drive(power_dbm: f64, omega_p: f64, gamma_c1: f64) -> f64 {
    2.0 * gamma_c1 * photon_flux(power_dbm, omega_p)
}

/// Inverse of [`power_to_drive`].
pub fn drive_to_power(s_p: f64, omega_p: f64, gamma_c1: f64) -> f64 {
    let flux = s_p / (2.0 * gamma_c1);
    let watts = flux / NS * (HBAR * omega_p / NS);
    10.0 * (watts / 1e-3).log10()
}

/// Flux detuning ω_f in rad/ns from the reduced flux Φ_e/Φ_0 and the
/// circulating current (amperes).
pub fn flux_to_omega_f(flux_ratio: f64, i_cc: f64) -> f64 {
    2.0 * i_cc * FLUX_QUANTUM / HBAR * (flux_ratio - 0.5) * NS
}

/// Converts an ordinary frequency in GHz to rad/ns.
pub fn ghz(f: f64) -> f64 {
    TAU * f
}

/// Converts rad/ns back to GHz.
pub fn to_ghz(omega: f64) -> f64 {
    omega / (2.0 * PI)
}

/// Pump tone in the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveConfig {
    pub omega_p: f64,
    pub s_p: f64,
    /// ω_p − ω_c.
    pub delta_pc: f64,
    /// ω_p − ω_a.
    pub delta_1: f64,
}

impl DriveConfig {
    pub fn new(omega_p: f64, s_p: f64, derived: &DerivedParams) -> Self {
        Self {
            omega_p,
            s_p,
            delta_pc: omega_p - derived.omega_c,
            delta_1: omega_p - derived.omega_a,
        }
    }

    /// Pump amplitude b_in (real, the phase reference for all amplitudes).
    pub fn input_amplitude(&self, gamma_c1: f64) -> f64 {
        (self.s_p / (2.0 * gamma_c1)).sqrt()
    }
}

/// Laboratory-unit config file schema.
pub mod file {
    use super::*;

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct ConfigFile {
        pub device: DeviceBlock,
        #[serde(default)]
        pub t1_law: Option<T1LawBlock>,
        #[serde(default)]
        pub t2_law: Option<T2LawBlock>,
    }

    /// All frequencies and rates are ordinary frequencies f = ω/2π in GHz.
    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct DeviceBlock {
        pub cavity_ghz: f64,
        pub qubit_gap_ghz: f64,
        pub coupling_ghz: f64,
        #[serde(default)]
        pub kerr_ghz: f64,
        /// Port-1 damping. Alternatively give `gamma_c1_ratio` (γ_c1/ω_c).
        #[serde(default)]
        pub gamma_c1_ghz: Option<f64>,
        #[serde(default)]
        pub gamma_c1_ratio: Option<f64>,
        /// Port-2 damping. Alternatively give `gamma_c2_ratio` (γ_c2/γ_c1).
        #[serde(default)]
        pub gamma_c2_ghz: Option<f64>,
        #[serde(default)]
        pub gamma_c2_ratio: Option<f64>,
        #[serde(default)]
        pub gamma_c3_ghz: f64,
        #[serde(default)]
        pub gamma_c4_ghz: f64,
        #[serde(default)]
        pub phases_rad: [f64; 4],
        #[serde(default)]
        pub gamma_q1_ghz: Option<f64>,
        #[serde(default)]
        pub gamma_q2_ghz: Option<f64>,
        pub temperature_mk: f64,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct T1LawBlock {
        pub base_us: f64,
        pub slope_ns: f64,
    }

    #[derive(Debug, Clone, Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    pub struct T2LawBlock {
        pub rate_mhz: f64,
        pub flux_coeff: f64,
    }

    #[derive(Debug, Error)]
    pub enum ConfigError {
        #[error("config parse error: {0}")]
        Parse(#[from] serde_json::Error),
        #[error("config must give exactly one of {0}")]
        Ambiguous(&'static str),
        #[error(transparent)]
        Params(#[from] ParamsError),
    }

    impl ConfigFile {
        pub fn from_json(text: &str) -> Result<Self, ConfigError> {
            Ok(serde_json::from_str(text)?)
        }

        pub fn to_config(&self) -> Result<PhysicalConfig, ConfigError> {
            let d = &self.device;
            let omega_c = ghz(d.cavity_ghz);
            let gamma_c1 = match (d.gamma_c1_ghz, d.gamma_c1_ratio) {
                (Some(f), None) => ghz(f),
                (None, Some(r)) => r * omega_c,
                _ => return Err(ConfigError::Ambiguous("gamma_c1_ghz, gamma_c1_ratio")),
            };
            let gamma_c2 = match (d.gamma_c2_ghz, d.gamma_c2_ratio) {
                (Some(f), None) => ghz(f),
                (None, Some(r)) => r * gamma_c1,
                _ => return Err(ConfigError::Ambiguous("gamma_c2_ghz, gamma_c2_ratio")),
            };
            let config = PhysicalConfig {
                omega_c,
                kerr: ghz(d.kerr_ghz),
                gamma_c1,
                gamma_c2,
                gamma_c3: ghz(d.gamma_c3_ghz),
                gamma_c4: ghz(d.gamma_c4_ghz),
                phi_c1: d.phases_rad[0],
                phi_c2: d.phases_rad[1],
                phi_c3: d.phases_rad[2],
                phi_c4: d.phases_rad[3],
                omega_delta: ghz(d.qubit_gap_ghz),
                g: ghz(d.coupling_ghz),
                gamma_q1: d.gamma_q1_ghz.map(ghz),
                gamma_q2: d.gamma_q2_ghz.map(ghz),
                temperature: d.temperature_mk * 1e-3,
                t1_law: self.t1_law.as_ref().map(|l| T1Law {
                    base: l.base_us * 1e3,
                    slope: l.slope_ns,
                }),
                t2_law: self.t2_law.as_ref().map(|l| T2Law {
                    rate: l.rate_mhz * 1e-3,
                    flux_coeff: l.flux_coeff,
                }),
            };
            config.validate()?;
            Ok(config)
        }
    }
}
