//! Closed-system energy levels (divided by ħ, in rad/ns): Jaynes–Cummings
//! ladder, second-order Bloch–Siegert corrections and the two linear
//! resonance frequencies.

use serde::Serialize;
use thiserror::Error;

use crate::params::DerivedParams;

/// Above this g₁/(ω_c+ω_a) the second-order correction is flagged.
pub const BS_WARN_RATIO: f64 = 0.2;
/// Above this g₁/|Δ| the dispersive resonance formula is refused.
pub const DEGENERACY_RATIO: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectrumError {
    #[error("cavity and qubit are nearly degenerate (g1/|Δ| = {0:.3} > 0.3)")]
    NearDegeneracy(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LevelSign {
    #[serde(rename = "-")]
    Minus,
    #[serde(rename = "+")]
    Plus,
}

impl LevelSign {
    pub fn value(self) -> f64 {
        match self {
            LevelSign::Minus => -1.0,
            LevelSign::Plus => 1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LevelSign::Minus => "-",
            LevelSign::Plus => "+",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DressedLevel {
    pub n: u32,
    pub sign: LevelSign,
    pub energy: f64,
    pub theta_n: f64,
    pub omega_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub ground: f64,
    /// Ordered by n, then (−, +).
    pub levels: Vec<DressedLevel>,
}

impl LevelSet {
    pub fn energy(&self, n: u32, sign: LevelSign) -> f64 {
        let offset = match sign {
            LevelSign::Minus => 0,
            LevelSign::Plus => 1,
        };
        self.levels[2 * n as usize + offset].energy
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BsCorrection {
    pub omega_bs: f64,
    pub omega_bs0: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsLevels {
    pub levels: LevelSet,
    pub correction: BsCorrection,
    /// g₁/(ω_c+ω_a) exceeds [`BS_WARN_RATIO`].
    pub unreliable: bool,
}

fn splitting(delta: f64, g1: f64, n: u32) -> f64 {
    (delta * delta + 4.0 * g1 * g1 * (n as f64 + 1.0)).sqrt()
}

pub fn jc_levels(derived: &DerivedParams, n_max: u32) -> LevelSet {
    let delta = derived.cavity_qubit_detuning();
    let (wc, g1) = (derived.omega_c, derived.g1);
    let mut levels = Vec::with_capacity(2 * (n_max as usize + 1));
    for n in 0..=n_max {
        let omega_n = splitting(delta, g1, n);
        // tan θ_n = −2g₁√(n+1)/Δ, branch chosen so θ_n ∈ [0, π].
        let theta_n = (2.0 * g1 * (n as f64 + 1.0).sqrt()).atan2(-delta);
        for sign in [LevelSign::Minus, LevelSign::Plus] {
            levels.push(DressedLevel {
                n,
                sign,
                energy: wc * (n as f64 + 1.0) + sign.value() * 0.5 * omega_n,
                theta_n,
                omega_n,
            });
        }
    }
    LevelSet {
        ground: 0.5 * delta,
        levels,
    }
}

pub fn bs_correction(derived: &DerivedParams) -> BsCorrection {
    let g2 = derived.g1 * derived.g1;
    let sum = derived.omega_c + derived.omega_a;
    let cot = derived.cot_theta();
    BsCorrection {
        omega_bs: g2 / sum,
        omega_bs0: -g2 * (1.0 / sum + cot * cot / derived.omega_c),
    }
}

/// Levels with the second-order Bloch–Siegert shift. The −(n+1)ω_BS shift
/// belongs to the level that connects to the bare qubit-down state
/// |n+1,−⟩: the lower level when ω_a > ω_c and the upper one otherwise.
pub fn bs_levels(derived: &DerivedParams, n_max: u32) -> BsLevels {
    let delta = derived.cavity_qubit_detuning();
    let correction = bs_correction(derived);
    let BsCorrection { omega_bs, omega_bs0 } = correction;
    let down_sign = if delta <= 0.0 {
        LevelSign::Minus
    } else {
        LevelSign::Plus
    };
    let mut levels = jc_levels(derived, n_max);
    levels.ground += omega_bs0;
    for level in &mut levels.levels {
        let m = level.n as f64 + 1.0;
        let shift = if level.sign == down_sign {
            -omega_bs
        } else {
            omega_bs
        };
        level.energy += m * shift + omega_bs0;
    }
    BsLevels {
        levels,
        correction,
        unreliable: derived.g1 / (derived.omega_c + derived.omega_a) > BS_WARN_RATIO,
    }
}

/// (ω_c − ω_BS + g₁²/Δ, ω_c + ω_BS − g₁²/Δ): ground- and excited-branch
/// cavity resonances in the linear regime.
pub fn linear_resonances(derived: &DerivedParams) -> Result<(f64, f64), SpectrumError> {
    let delta = derived.cavity_qubit_detuning();
    let ratio = derived.g1 / delta.abs();
    if !(ratio <= DEGENERACY_RATIO) {
        return Err(SpectrumError::NearDegeneracy(ratio));
    }
    let omega_bs = bs_correction(derived).omega_bs;
    let pull = derived.g1 * derived.g1 / delta;
    Ok((
        derived.omega_c - omega_bs + pull,
        derived.omega_c + omega_bs - pull,
    ))
}
