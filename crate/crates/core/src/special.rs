//! Upper incomplete gamma function for arbitrary real order.
//!
//! The Rayleigh service transform has the closed form
//! `e^{1/g} g^{-a} Gamma(1 - a, 1/g)` whose order `1 - a` is negative for
//! every `s` above `ln2 / m`, outside what most libraries accept.

use statrs::function::gamma::{gamma_ur, ln_gamma};

const CF_MAX_ITER: usize = 100_000;
const CF_EPS: f64 = 1e-16;

/// `ln Gamma(order, z)` for real `order` and `z > 0`.
///
/// Returns `None` when `z <= 0` or the continued fraction fails to settle.
pub fn ln_upper_gamma(order: f64, z: f64) -> Option<f64> {
    if !(z > 0.0) || !order.is_finite() {
        return None;
    }
    if order == 0.0 && z < 1.0 {
        return Some(exp_integral_series(z).ln());
    }
    if order > 0.0 && z < order + 1.0 {
        let q = gamma_ur(order, z);
        if q > 0.0 {
            return Some(q.ln() + ln_gamma(order));
        }
    }
    legendre_fraction(order, z).map(|cf| -z + order * z.ln() + cf.ln())
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

// E_1(z) = -gamma - ln z - sum_{k>=1} (-z)^k / (k k!)
fn exp_integral_series(z: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -z / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - z.ln() - sum
}

// Modified Lentz evaluation of
// 1 / (z + 1 - b - 1(1-b) / (z + 3 - b - 2(2-b) / (z + 5 - b - ...))).
fn legendre_fraction(order: f64, z: f64) -> Option<f64> {
    let tiny = f64::MIN_POSITIVE / CF_EPS;
    let mut b = z + 1.0 - order;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..CF_MAX_ITER {
        let an = -(i as f64) * (i as f64 - order);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_EPS {
            return (h > 0.0).then_some(h);
        }
    }
    None
}
