//! Gauss-Laguerre rules and an adaptive Gauss-Kronrod fallback.

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

/// Node counts tried, in order, by the doubling Gauss-Laguerre integrator.
pub const LAGUERRE_ORDERS: [usize; 5] = [16, 32, 64, 128, 256];

/// Nodes and weights of an `n`-point Gauss-Laguerre rule (weight `e^{-z}` on `[0, inf)`).
#[derive(Debug, Clone)]
pub struct LaguerreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl LaguerreRule {
    /// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix with
    /// diagonal `2i + 1` and off-diagonal `i + 1`; weights are the squared
    /// first eigenvector components (the zeroth moment is 1).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Laguerre rule needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jacobi[(i, i)] = (2 * i + 1) as f64;
            if i + 1 < n {
                jacobi[(i, i + 1)] = (i + 1) as f64;
                jacobi[(i + 1, i)] = (i + 1) as f64;
            }
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|j| (eig.eigenvalues[j], eig.eigenvectors[(0, j)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Self { nodes, weights }
    }

    /// `sum w_i f(z_i)`.
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&z, &w)| w * f(z)).sum()
    }
}

/// Cached rule for one of [`LAGUERRE_ORDERS`].
pub fn laguerre(n: usize) -> &'static LaguerreRule {
    static RULES: [OnceLock<LaguerreRule>; LAGUERRE_ORDERS.len()] = [const { OnceLock::new() }; LAGUERRE_ORDERS.len()];
    let idx = LAGUERRE_ORDERS
        .iter()
        .position(|&m| m == n)
        .expect("order not in LAGUERRE_ORDERS");
    RULES[idx].get_or_init(|| LaguerreRule::new(n))
}

/// Integrates `f(z) e^{-z}` over `[0, inf)`, doubling the node count until
/// two successive estimates agree to `rel_tol`.
///
/// Returns `Err((previous, last))` when the largest rule is reached first.
pub fn laguerre_doubling(f: impl Fn(f64) -> f64, rel_tol: f64) -> Result<f64, (f64, f64)> {
    let mut previous = laguerre(LAGUERRE_ORDERS[0]).apply(&f);
    for &n in &LAGUERRE_ORDERS[1..] {
        let current = laguerre(n).apply(&f);
        if (current - previous).abs() <= rel_tol * current.abs() {
            return Ok(current);
        }
        previous = current;
    }
    let last = laguerre(*LAGUERRE_ORDERS.last().unwrap()).apply(&f);
    Err((previous, last))
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS_K: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (and the centre).
const GK_WEIGHTS_G: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(centre);
    let mut kronrod = GK_WEIGHTS_K[7] * fc;
    let mut gauss = GK_WEIGHTS_G[3] * fc;
    for j in 0..7 {
        let dx = half * GK_NODES[j];
        let pair = f(centre - dx) + f(centre + dx);
        kronrod += GK_WEIGHTS_K[j] * pair;
        if j % 2 == 1 {
            gauss += GK_WEIGHTS_G[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive 15-point Gauss-Kronrod on `[a, b]`.
///
/// Returns `Err(estimate)` if `max_intervals` is exhausted before the
/// summed error estimate drops below `rel_tol * |integral|`.
pub fn gauss_kronrod(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64, max_intervals: usize) -> Result<f64, f64> {
    let (v, e) = gk15(&f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let err: f64 = pieces.iter().map(|p| p.3).sum();
        if err <= rel_tol * total.abs() || err < f64::MIN_POSITIVE {
            return Ok(total);
        }
        if pieces.len() >= max_intervals {
            return Err(total);
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .unwrap();
        let (lo, hi, _, _) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn laguerre_rule_integrates_moments() {
        // int z^k e^{-z} = k!, exact for k < 2n
        let rule = laguerre(16);
        let mut fact = 1.0;
        for k in 0..20 {
            if k > 0 {
                fact *= k as f64;
            }
            assert_relative_eq!(rule.apply(|z| z.powi(k)), fact, max_relative = 1e-11);
        }
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn large_rules_are_ordered_and_normalised() {
        let rule = laguerre(256);
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(rule.nodes[0] > 0.0);
        assert_relative_eq!(rule.weights.iter().sum::<f64>(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn doubling_converges_on_smooth_integrand() {
        // int cos(z) e^{-z} = 1/2
        let v = laguerre_doubling(|z| z.cos(), 1e-12).unwrap();
        assert_relative_eq!(v, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn doubling_reports_failure() {
        // sqrt kink at the origin converges too slowly for 1e-15
        assert!(laguerre_doubling(|z| z.sqrt(), 1e-15).is_err());
    }

    #[test]
    fn kronrod_handles_sharp_peak() {
        let a = 300.0;
        let v = gauss_kronrod(|x| (-a * x).exp(), 0.0, 20.0, 1e-12, 500).unwrap();
        assert_relative_eq!(v, 1.0 / a, max_relative = 1e-11);
        let g = gauss_kronrod(|x| (-x * x).exp(), -10.0, 10.0, 1e-13, 500).unwrap();
        assert_relative_eq!(g, std::f64::consts::PI.sqrt(), max_relative = 1e-12);
    }
}
