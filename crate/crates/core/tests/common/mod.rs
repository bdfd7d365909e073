//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use cqed_core::linalg::CMatrix;
use cqed_core::params::{derive, ghz, DerivedParams, PhysicalConfig};
use num_bigint::BigInt;
use num_complex::Complex64 as C64;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

pub fn reference_at(omega_f_ghz: f64) -> DerivedParams {
    derive(&PhysicalConfig::reference_device(), ghz(omega_f_ghz)).unwrap()
}

/// Synthetic parameters in units where every rate is O(1).
pub fn unit_params(g1: f64, kerr: f64, p0: f64) -> DerivedParams {
    let mut d = reference_at(8.1);
    d.omega_c = 50.0;
    d.omega_a = 52.0;
    d.g1 = g1;
    d.p0 = p0;
    d.t1 = 2.0;
    d.t2 = 1.0;
    d.gamma_c = 1.0;
    d.gamma_c1 = 0.4;
    d.gamma_c2 = 0.6;
    d.gamma_c4 = 0.0;
    d.kerr = kerr;
    d.phi_c1 = 0.0;
    d.phi_c2 = 0.0;
    d
}

// ---------------------------------------------------------------- Bessel

/// J_l(p/q) from the ascending series summed in exact rational arithmetic.
pub fn bessel_series(l: i32, p: i64, q: i64) -> f64 {
    bessel_series_ratio(l, BigRational::new(BigInt::from(p), BigInt::from(q)))
}

// ------------------------------------------------------- Jacobi eigensolver

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations,
/// sorted ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Qubit–oscillator Hamiltonian / ħ on |n, s⟩, n < `cutoff`, index 2n + s
/// with s = 0 for the lower qubit state. `counter_rotating` adds
/// g₁[aσ₋ + a†σ₊ − (a + a†)σ_z cot θ].
pub fn rabi_matrix(
    omega_c: f64,
    omega_a: f64,
    g1: f64,
    cot_theta: f64,
    cutoff: usize,
    counter_rotating: bool,
) -> Vec<Vec<f64>> {
    let dim = 2 * cutoff;
    let mut h = vec![vec![0.0; dim]; dim];
    let idx = |n: usize, s: usize| 2 * n + s;
    for n in 0..cutoff {
        h[idx(n, 0)][idx(n, 0)] = omega_c * (n as f64 + 0.5) - 0.5 * omega_a;
        h[idx(n, 1)][idx(n, 1)] = omega_c * (n as f64 + 0.5) + 0.5 * omega_a;
    }
    for n in 0..cutoff - 1 {
        let amp = g1 * ((n + 1) as f64).sqrt();
        // a†σ₋ + aσ₊ links |n,+⟩ and |n+1,−⟩.
        h[idx(n + 1, 0)][idx(n, 1)] = amp;
        h[idx(n, 1)][idx(n + 1, 0)] = amp;
        if counter_rotating {
            // a†σ₊ + aσ₋ links |n,−⟩ and |n+1,+⟩.
            h[idx(n + 1, 1)][idx(n, 0)] = amp;
            h[idx(n, 0)][idx(n + 1, 1)] = amp;
            for (s, sz) in [(0usize, -1.0), (1usize, 1.0)] {
                let v = -g1 * cot_theta * sz * ((n + 1) as f64).sqrt();
                h[idx(n + 1, s)][idx(n, s)] = v;
                h[idx(n, s)][idx(n + 1, s)] = v;
            }
        }
    }
    h
}

pub fn nearest(values: &[f64], target: f64) -> f64 {
    *values
        .iter()
        .min_by(|a, b| (*a - target).abs().total_cmp(&(*b - target).abs()))
        .unwrap()
}

// ------------------------------------------ characteristic polynomial roots

/// Coefficients c₀..c_n (c_n = 1) of det(λI − A) by Faddeev–LeVerrier.
pub fn characteristic_polynomial(a: &CMatrix) -> Vec<C64> {
    let n = a.dim();
    let mut c = vec![C64::new(0.0, 0.0); n + 1];
    c[n] = C64::new(1.0, 0.0);
    let mut m = CMatrix::zeros(n);
    for k in 1..=n {
        m = (a * &m).shifted(c[n - k + 1]);
        let am = a * &m;
        let trace: C64 = (0..n).map(|i| am[(i, i)]).sum();
        c[n - k] = -trace / k as f64;
    }
    c
}

fn eval_poly(c: &[C64], z: C64) -> C64 {
    c.iter().rev().fold(C64::new(0.0, 0.0), |acc, &ck| acc * z + ck)
}

/// Roots of a monic polynomial by Durand–Kerner iteration.
pub fn durand_kerner(c: &[C64]) -> Vec<C64> {
    let n = c.len() - 1;
    let radius = 1.0 + c[..n].iter().map(|x| x.norm()).fold(0.0, f64::max);
    let seed = C64::new(0.4, 0.9);
    let mut z: Vec<C64> = (0..n).map(|k| seed.powu(k as u32) * radius).collect();
    for _ in 0..5000 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut den = C64::new(1.0, 0.0);
            for j in 0..n {
                if i != j {
                    den *= z[i] - z[j];
                }
            }
            let step = eval_poly(c, z[i]) / den;
            z[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-15 * radius {
            break;
        }
    }
    z
}

/// Largest distance in a greedy nearest matching of two point sets.
pub fn match_distance(a: &[C64], b: &[C64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for x in a {
        let (k, d) = b
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, y)| (k, (x - y).norm()))
            .min_by(|p, q| p.1.total_cmp(&q.1))
            .unwrap();
        used[k] = true;
        worst = worst.max(d);
    }
    worst
}

// ---------------------------------------------------------- mean-field ODE

#[derive(Debug, Clone, Copy)]
pub struct MeanField {
    pub alpha: C64,
    pub pz: f64,
    pub pp: C64,
}

/// Parameters of the rotating-frame mean-field equations.
#[derive(Debug, Clone, Copy)]
pub struct MeanFieldModel {
    pub gamma_c: f64,
    pub gamma_c4: f64,
    pub kerr: f64,
    pub delta_pc: f64,
    pub delta_1: f64,
    pub g: f64,
    pub t1: f64,
    pub t2: f64,
    pub p_eq: f64,
    /// √(2γ_c1)·e^{iφ_c1}·b_in.
    pub forcing: C64,
}

impl MeanFieldModel {
    pub fn rhs(&self, s: MeanField) -> MeanField {
        let i = C64::i();
        let e = s.alpha.norm_sqr();
        let theta_r = C64::new(self.gamma_c + self.gamma_c4 * e, -self.delta_pc + self.kerr * e) * s.alpha
            + i * self.forcing
            + i * self.g * s.pp.conj();
        let theta_z = (s.pz - self.p_eq) / self.t1
            + (2.0 * i * self.g * (s.alpha * s.pp - s.pp.conj() * s.alpha.conj())).re;
        let theta_p = s.pp / self.t2 + i * self.delta_1 * s.pp + i * self.g * s.alpha.conj() * s.pz;
        MeanField {
            alpha: -theta_r,
            pz: -theta_z,
            pp: -theta_p,
        }
    }

    pub fn integrate(&self, mut s: MeanField, dt: f64, steps: usize) -> MeanField {
        let add = |a: MeanField, b: MeanField, h: f64| MeanField {
            alpha: a.alpha + b.alpha * h,
            pz: a.pz + b.pz * h,
            pp: a.pp + b.pp * h,
        };
        for _ in 0..steps {
            let k1 = self.rhs(s);
            let k2 = self.rhs(add(s, k1, 0.5 * dt));
            let k3 = self.rhs(add(s, k2, 0.5 * dt));
            let k4 = self.rhs(add(s, k3, dt));
            s = MeanField {
                alpha: s.alpha + (k1.alpha + k2.alpha * 2.0 + k3.alpha * 2.0 + k4.alpha) * (dt / 6.0),
                pz: s.pz + (k1.pz + 2.0 * k2.pz + 2.0 * k3.pz + k4.pz) * (dt / 6.0),
                pp: s.pp + (k1.pp + k2.pp * 2.0 + k3.pp * 2.0 + k4.pp) * (dt / 6.0),
            };
        }
        s
    }
}

// ----------------------------------------------------------- cubic oracle

/// Roots of S(E) = [(Ω₀+Ω₂E)² + (Γ₀+Γ₂E)²]E − S_p on [0, e_max] by a dense
/// scan and bisection.
pub fn scan_cubic(omega0: f64, omega2: f64, gamma0: f64, gamma2: f64, s_p: f64, e_max: f64) -> Vec<f64> {
    let f = |e: f64| ((omega0 + omega2 * e).powi(2) + (gamma0 + gamma2 * e).powi(2)) * e - s_p;
    let n = 200_000;
    let mut roots = Vec::new();
    let mut prev = (0.0, f(0.0));
    for k in 1..=n {
        let e = e_max * k as f64 / n as f64;
        let r = f(e);
        if (r > 0.0) != (prev.1 > 0.0) {
            let (mut lo, mut hi) = (prev.0, e);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) == (prev.1 > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        prev = (e, r);
    }
    roots
}

/// Υ = g²T₂(i − ΔT₂)/(1 + Δ²T₂² + 4g²T₁T₂E), written out independently.
pub fn upsilon(g: f64, delta: f64, t1: f64, t2: f64, e: f64) -> C64 {
    let num = C64::new(-g * g * delta * t2 * t2, g * g * t2);
    num / (1.0 + delta * delta * t2 * t2 + 4.0 * g * g * t1 * t2 * e)
}

/// J_l(x) for an arbitrary double, via its exact binary expansion.
pub fn bessel_series_f64(l: i32, x: f64) -> f64 {
    let r = BigRational::from_float(x).unwrap();
    bessel_series_ratio(l, r)
}

fn bessel_series_ratio(l: i32, x: BigRational) -> f64 {
    let order = l.unsigned_abs() as i64;
    let half = x / BigRational::from_integer(BigInt::from(2));
    let half2 = &half * &half;
    let mut term = BigRational::from_integer(BigInt::from(1));
    for k in 1..=order {
        term = term * &half / BigRational::from_integer(BigInt::from(k));
    }
    let mut sum = BigRational::zero();
    let tiny = BigRational::new(BigInt::from(1), BigInt::from(10).pow(40));
    let mut m: i64 = 0;
    loop {
        sum += &term;
        m += 1;
        term = -term * &half2 / BigRational::from_integer(BigInt::from(m * (m + order)));
        if term.abs() < tiny && m > 2 {
            break;
        }
    }
    let value = sum.to_f64().unwrap();
    if l < 0 && order % 2 == 1 {
        -value
    } else {
        value
    }
}
