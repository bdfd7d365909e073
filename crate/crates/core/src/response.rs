//! Linear response around a fixed point: Jacobian, susceptibility,
//! transmission and intermodulation gains.
//!
//! Fluctuation basis order: (a_R, a_R†, σ_z, σ_+R, σ_+R†).

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::CMatrix;
use crate::params::{DerivedParams, DriveConfig};
use crate::steadystate::FixedPoint;

/// Largest accepted 1-norm condition estimate of J − iω.
pub const CONDITION_LIMIT: f64 = 1e14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResponseError {
    #[error("J - iω is singular at ω = {omega} (condition estimate {condition:e})")]
    Singular { omega: f64, condition: f64 },
    #[error("transmission is undefined without a pump (S_p = 0)")]
    NoDrive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub matrix: CMatrix,
    /// ∂Θ_R/∂A_R.
    pub w: C64,
    /// ∂Θ_R/∂A_R†.
    pub v_c: C64,
}

impl Jacobian {
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.matrix.eigenvalues()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Susceptibility {
    pub chi: CMatrix,
    pub omega: f64,
}

impl Susceptibility {
    pub fn chi_cc(&self) -> [[C64; 2]; 2] {
        [
            [self.chi[(0, 0)], self.chi[(0, 1)]],
            [self.chi[(1, 0)], self.chi[(1, 1)]],
        ]
    }
}

/// J = J₀ + g·V_mat at a fixed point. The qubit coupling and detuning are
/// taken from the fixed point itself so superharmonic points reuse this.
pub fn jacobian(fp: &FixedPoint, derived: &DerivedParams, drive: &DriveConfig) -> Jacobian {
    let i = C64::i();
    let zero = C64::new(0.0, 0.0);
    let nonlinear = C64::new(derived.gamma_c4, derived.kerr);
    let w = C64::new(derived.gamma_c, -drive.delta_pc) + 2.0 * nonlinear * fp.e_c;
    let v_c = nonlinear * fp.alpha_r * fp.alpha_r;

    let (alpha, pz, pp) = (fp.alpha_r, C64::from(fp.p_z), fp.p_plus_r);
    let v_mat = [
        [zero, zero, zero, zero, C64::from(1.0)],
        [zero, zero, zero, C64::from(-1.0), zero],
        [2.0 * pp, -2.0 * pp.conj(), zero, 2.0 * alpha, -2.0 * alpha.conj()],
        [zero, pz, alpha.conj(), zero, zero],
        [-pz, zero, -alpha, zero, zero],
    ];
    let mut matrix = CMatrix::from_fn(5, |r, c| i * fp.coupling * v_mat[r][c]);
    matrix[(0, 0)] += w;
    matrix[(0, 1)] += v_c;
    matrix[(1, 0)] += v_c.conj();
    matrix[(1, 1)] += w.conj();
    matrix[(2, 2)] += 1.0 / derived.t1;
    matrix[(3, 3)] += C64::new(1.0 / derived.t2, fp.qubit_detuning);
    matrix[(4, 4)] += C64::new(1.0 / derived.t2, -fp.qubit_detuning);
    Jacobian { matrix, w, v_c }
}

/// χ(ω) = (J − iω)⁻¹.
pub fn susceptibility(jac: &Jacobian, omega: f64) -> Result<Susceptibility, ResponseError> {
    let shifted = jac.matrix.shifted(C64::new(0.0, -omega));
    let singular = |condition| ResponseError::Singular { omega, condition };
    let chi = shifted.inverse().ok_or(singular(f64::INFINITY))?;
    let condition = shifted.norm_one() * chi.norm_one();
    if !(condition <= CONDITION_LIMIT) {
        return Err(singular(condition));
    }
    Ok(Susceptibility { chi, omega })
}

/// Closed-form inverse of the bare cavity block J₀c − iω.
pub fn chi_c_closed_form(w: C64, v_c: C64, omega: f64) -> [[C64; 2]; 2] {
    let iw = C64::new(0.0, omega);
    // (λ₁ − iω)(λ₂ − iω) = λ₁λ₂ − iω(λ₁+λ₂) − ω².
    let den = (w.norm_sqr() - v_c.norm_sqr()) - iw * (w + w.conj()) + iw * iw;
    [
        [(w.conj() - iw) / den, -v_c / den],
        [-v_c.conj() / den, (w - iw) / den],
    ]
}

/// S21 = −i√(2γ_c2)·e^{−iφ_c2}·α_R / b_in.
pub fn transmission(
    fp: &FixedPoint,
    derived: &DerivedParams,
    drive: &DriveConfig,
) -> Result<C64, ResponseError> {
    if !(drive.s_p > 0.0) {
        return Err(ResponseError::NoDrive);
    }
    let b_in = drive.input_amplitude(derived.gamma_c1);
    Ok(
        -C64::i() * (2.0 * derived.gamma_c2).sqrt() * C64::from_polar(1.0, -derived.phi_c2) * fp.alpha_r
            / b_in,
    )
}

/// |S21|² = 4γ_c1γ_c2·E/S_p.
pub fn transmission_power(e_c: f64, derived: &DerivedParams, s_p: f64) -> f64 {
    4.0 * derived.gamma_c1 * derived.gamma_c2 * e_c / s_p
}

/// Signal and idler gains (G_s, G_i) from the cavity block of χ at the
/// signal offset.
pub fn imd_gains(chi_cc: &[[C64; 2]; 2], derived: &DerivedParams) -> (f64, f64) {
    let scale = 2.0 * (derived.gamma_c1 * derived.gamma_c2).sqrt();
    let r11 = -C64::from_polar(scale, -derived.phi_c2) * chi_cc[0][0];
    let r21 = C64::from_polar(scale, derived.phi_c2) * chi_cc[1][0];
    (r11.norm_sqr(), r21.norm_sqr())
}

/// Power ratio in dB.
pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}
