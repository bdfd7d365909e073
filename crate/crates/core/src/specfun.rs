//! Integer-order Bessel functions of the first kind.
//!
//! Small arguments (relative to the order) use the ascending power series,
//! where successive terms decrease monotonically. Everything else uses
//! Miller's downward recurrence normalized with J₀ + 2ΣJ₂ₖ = 1.

use thiserror::Error;

pub const MAX_ORDER: i32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BesselError {
    #[error("Bessel order {0} exceeds the supported range |l| <= {MAX_ORDER}")]
    Order(i32),
    #[error("Bessel argument must be finite (got {0})")]
    Argument(f64),
}

/// J_l(x) for integer `l` with |l| ≤ 64.
///
/// Absolute accuracy is about 1e-13 for |x| ≤ 50; larger arguments are
/// accepted and degrade slowly.
pub fn bessel_j(l: i32, x: f64) -> Result<f64, BesselError> {
    if l.abs() > MAX_ORDER {
        return Err(BesselError::Order(l));
    }
    if !x.is_finite() {
        return Err(BesselError::Argument(x));
    }
    let m = l.unsigned_abs() as usize;
    // J_{-m}(x) = (-1)^m J_m(x) and J_m(-x) = (-1)^m J_m(x).
    let flip = m % 2 == 1 && ((l < 0) != (x < 0.0));
    let ax = x.abs();
    let value = if ax == 0.0 {
        if m == 0 {
            1.0
        } else {
            0.0
        }
    } else if ax * ax <= 4.0 * (m as f64 + 1.0) {
        ascending_series(m, ax)
    } else {
        miller(m, ax)
    };
    Ok(if flip { -value } else { value })
}

fn ascending_series(m: usize, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..200 {
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn miller(m: usize, x: f64) -> f64 {
    const BIG: f64 = 1e250;
    const SMALL: f64 = 1e-250;

    let scale = m.max(x.ceil() as usize);
    let mut start = scale + (60.0 * scale as f64).sqrt() as usize + 24;
    start += start % 2;

    let two_over_x = 2.0 / x;
    let mut above = 0.0; // j_{k+1}
    let mut current = 1e-30; // j_k
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=start).rev() {
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        // `current` now holds j_{k-1}.
        if current.abs() > BIG {
            current *= SMALL;
            above *= SMALL;
            norm *= SMALL;
            result *= SMALL;
        }
        if (k - 1) % 2 == 0 && k > 1 {
            norm += current;
        }
        if k - 1 == m {
            result = current;
        }
    }
    norm = 2.0 * norm + current;
    result / norm
}
