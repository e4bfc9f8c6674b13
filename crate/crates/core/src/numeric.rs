//! Log-domain helpers shared by the bound kernels.
//!
//! Every kernel is a sum of positive terms whose logs can reach several
//! hundred (binomials in `tau`, `exp(s * bits)` factors), so sums are
//! accumulated as log-sum-exp and binomials as log-gamma differences.

use statrs::function::gamma::ln_gamma;

/// Streaming log-sum-exp accumulator.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    scaled: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSumExp {
    pub fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            scaled: 0.0,
        }
    }

    /// Adds `exp(log_term)` to the running sum.
    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term.is_nan() || log_term == f64::INFINITY {
            self.max = log_term;
            self.scaled = 1.0;
            return;
        }
        if !self.max.is_finite() {
            if self.max.is_nan() || self.max == f64::INFINITY {
                return;
            }
            self.max = log_term;
            self.scaled = 1.0;
        } else if log_term <= self.max {
            self.scaled += (log_term - self.max).exp();
        } else {
            self.scaled = self.scaled * (self.max - log_term).exp() + 1.0;
            self.max = log_term;
        }
    }

    /// Natural log of the accumulated sum; `-inf` when empty.
    pub fn value(&self) -> f64 {
        if self.max == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else if !self.max.is_finite() {
            self.max
        } else {
            self.max + self.scaled.ln()
        }
    }
}

impl Extend<f64> for LogSumExp {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

/// `ln(sum(exp(x)))` over an iterator.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = LogSumExp::new();
    acc.extend(terms);
    acc.value()
}

/// `ln(exp(a) + exp(b))`.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    log_sum_exp([a, b])
}

/// `ln C(n, k)`; exact through `u64` arithmetic while the value fits.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    if k == 0 {
        return 0.0;
    }
    if n <= 62 {
        // C(62, 31) < 2^63, and each partial product c * (n - k + i) / i stays exact.
        let mut c: u64 = 1;
        for i in 1..=k {
            c = c * (n - k + i) / i;
        }
        return (c as f64).ln();
    }
    ln_gamma((n + 1) as f64) - ln_gamma((k + 1) as f64) - ln_gamma((n - k + 1) as f64)
}

/// `ln|exp(x) - 1|`, accurate for tiny and huge `|x|`.
pub fn ln_abs_expm1(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x > 30.0 {
        x + (-(-x).exp()).ln_1p()
    } else if x > 0.0 {
        x.exp_m1().ln()
    } else {
        (-x.exp_m1()).ln()
    }
}

/// `ln(sum_{j=0}^{count-1} exp(j * ratio))` in closed form.
pub fn ln_geometric_sum(ratio: f64, count: usize) -> f64 {
    if count == 0 {
        return f64::NEG_INFINITY;
    }
    if count == 1 {
        return 0.0;
    }
    if ratio.abs() < 1e-14 {
        return (count as f64).ln();
    }
    ln_abs_expm1(count as f64 * ratio) - ln_abs_expm1(ratio)
}
