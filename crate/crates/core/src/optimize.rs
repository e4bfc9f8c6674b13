//! Minimisation over the Chernoff parameter `s` and the inverse problems
//! built on top of it (smallest delay target, smallest SNR).

use crate::bounds::{bound_with_cache, BoundFamily, Scenario};
use crate::channel::{db_to_linear, LnVCache};
use crate::error::{invalid, Error, Result};

/// Search box and tolerances for [`minimize_convex`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub s_lo: f64,
    /// Upper end of the initial scan.
    pub s_hi: f64,
    /// The scan is extended past `s_hi` up to here while the minimum sits at its edge.
    pub s_cap: f64,
    /// Relative width at which golden-section refinement stops.
    pub rel_tol: f64,
    pub coarse_grid: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            s_lo: 1e-6,
            s_hi: 8.0,
            s_cap: 1e3,
            rel_tol: 1e-8,
            coarse_grid: 64,
        }
    }
}

impl OptimizerConfig {
    /// Default search box for one bound family.
    pub fn for_family(family: BoundFamily) -> Self {
        match family {
            BoundFamily::Sotat => Self {
                s_hi: 1.0 - 1e-9,
                s_cap: 1.0 - 1e-9,
                ..Self::default()
            },
            _ => Self::default(),
        }
    }

    pub fn with_upper(self, s_hi: f64) -> Self {
        Self {
            s_hi,
            s_cap: s_hi,
            ..self
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.s_lo > 0.0
            && self.s_lo < self.s_hi
            && self.s_hi <= self.s_cap
            && self.s_cap.is_finite()
            && self.rel_tol > 0.0
            && self.coarse_grid >= 3;
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("inconsistent optimizer configuration {self:?}")))
        }
    }
}

/// Which end of the search box the minimum was pinned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub s: f64,
    pub log_value: f64,
    pub evaluations: usize,
    pub boundary: Option<Boundary>,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimises a convex (hence unimodal) log-bound `f` over `s`.
///
/// NaN is treated as `+inf`. Fails only if every scanned point is infinite
/// or `f` itself returns an error.
pub fn minimize_convex<F>(mut f: F, cfg: &OptimizerConfig) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    cfg.validate()?;
    let mut evaluations = 0usize;
    let mut eval = |s: f64| -> Result<f64> {
        evaluations += 1;
        let v = f(s)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    let n = cfg.coarse_grid;
    let ratio = (cfg.s_hi / cfg.s_lo).powf(1.0 / (n - 1) as f64);
    let mut grid: Vec<f64> = (0..n).map(|i| cfg.s_lo * ratio.powi(i as i32)).collect();
    grid[n - 1] = cfg.s_hi;
    let mut vals = Vec::with_capacity(n);
    for &s in &grid {
        vals.push(eval(s)?);
    }

    let argmin = |vals: &[f64]| {
        let mut best = 0;
        for (i, v) in vals.iter().enumerate() {
            if *v < vals[best] {
                best = i;
            }
        }
        best
    };
    let mut i = argmin(&vals);
    while i == grid.len() - 1 && grid[i] < cfg.s_cap {
        let s = (grid[i] * ratio).min(cfg.s_cap);
        grid.push(s);
        vals.push(eval(s)?);
        i = argmin(&vals);
    }
    if vals[i] == f64::INFINITY {
        return Err(Error::Optimization(format!(
            "objective is infinite on the whole scan [{}, {}]",
            cfg.s_lo,
            grid[grid.len() - 1]
        )));
    }

    let last = grid.len() - 1;
    let boundary = if i == 0 {
        Some(Boundary::Lower)
    } else if i == last {
        Some(Boundary::Upper)
    } else {
        None
    };
    let mut a = grid[i.saturating_sub(1)];
    let mut b = grid[(i + 1).min(last)];

    let mut best_s = grid[i];
    let mut best_v = vals[i];
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    while b - a > cfg.rel_tol * 0.5 * (a + b) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    for (s, v) in [(c, fc), (d, fd)] {
        if v < best_v {
            best_s = s;
            best_v = v;
        }
    }
    Ok(Minimum {
        s: best_s,
        log_value: best_v,
        evaluations,
        boundary,
    })
}

/// Largest delay target tried by [`delay_for_epsilon`].
pub const DEFAULT_W_CAP: usize = 10_000;

/// Smallest `w >= 0` whose bound is at most `eps`.
pub fn delay_for_epsilon(sc: &Scenario, family: BoundFamily, eps: f64, w_cap: usize) -> Result<usize> {
    check_eps(eps)?;
    let cache = LnVCache::new(*sc.channel());
    let ok = |w: usize| -> Result<bool> {
        let r = bound_with_cache(&sc.clone().with_target_delay(w), family, &cache)?;
        Ok(r.probability <= eps)
    };
    if ok(0)? {
        return Ok(0);
    }
    let mut lo = 0usize;
    let mut hi = 1usize;
    loop {
        if ok(hi)? {
            break;
        }
        if hi >= w_cap {
            return Err(Error::DeadlineUnbounded { eps, cap: w_cap });
        }
        lo = hi;
        hi = (hi * 2).min(w_cap);
    }
    // bound(lo) > eps >= bound(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Bisection range for [`snr_for_epsilon`], in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSearch {
    pub lo_db: f64,
    pub hi_db: f64,
    pub tol_db: f64,
}

impl Default for SnrSearch {
    fn default() -> Self {
        Self {
            lo_db: -10.0,
            hi_db: 60.0,
            tol_db: 1e-4,
        }
    }
}

/// Smallest per-link average SNR (linear) whose bound at the scenario's
/// delay target is at most `eps`. Returns the floor of the range if even
/// that meets `eps`.
pub fn snr_for_epsilon(sc: &Scenario, family: BoundFamily, eps: f64, search: &SnrSearch) -> Result<f64> {
    check_eps(eps)?;
    if !(search.lo_db < search.hi_db) || !(search.tol_db > 0.0) {
        return Err(invalid(format!("inconsistent SNR search range {search:?}")));
    }
    let prob_at = |db: f64| -> Result<f64> {
        let ch = sc.channel().with_avg_snr(db_to_linear(db))?;
        let r = bound_with_cache(&sc.clone().with_channel(ch), family, &LnVCache::new(ch))?;
        Ok(r.probability)
    };
    if prob_at(search.hi_db)? > eps {
        return Err(Error::SnrUnreachable {
            eps,
            cap_db: search.hi_db,
        });
    }
    if prob_at(search.lo_db)? <= eps {
        return Ok(db_to_linear(search.lo_db));
    }
    let (mut lo, mut hi) = (search.lo_db, search.hi_db);
    while hi - lo > search.tol_db {
        let mid = 0.5 * (lo + hi);
        if prob_at(mid)? <= eps {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(db_to_linear(hi))
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("target probability must lie in (0, 1], got {eps}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn recovers_interior_minimum() {
        // ln of exp((s - 0.3)^2)
        let m = minimize_convex(|s| Ok((s - 0.3).powi(2)), &OptimizerConfig::default()).unwrap();
        assert_relative_eq!(m.s, 0.3, max_relative = 1e-7);
        assert!(m.boundary.is_none());
        assert!(m.log_value <= 1e-14);
    }

    #[test]
    fn refinement_never_worse_than_grid() {
        let cfg = OptimizerConfig::default();
        let f = |s: f64| (s.ln() + 2.0).powi(2) + 0.1 * s;
        let m = minimize_convex(|s| Ok(f(s)), &cfg).unwrap();
        let ratio = (cfg.s_hi / cfg.s_lo).powf(1.0 / 63.0);
        let grid_min = (0..64)
            .map(|i| f(cfg.s_lo * ratio.powi(i)))
            .fold(f64::INFINITY, f64::min);
        assert!(m.log_value <= grid_min);
    }

    #[test]
    fn flags_lower_boundary() {
        let m = minimize_convex(|s| Ok(s), &OptimizerConfig::default()).unwrap();
        assert_eq!(m.boundary, Some(Boundary::Lower));
        assert_relative_eq!(m.s, 1e-6, max_relative = 1e-6);
    }

    #[test]
    fn extends_then_flags_upper_boundary() {
        let cfg = OptimizerConfig::default();
        let m = minimize_convex(|s| Ok(-s), &cfg).unwrap();
        assert_eq!(m.boundary, Some(Boundary::Upper));
        assert_relative_eq!(m.s, cfg.s_cap, max_relative = 1e-9);
        // minimum beyond s_hi but inside the cap is found without a flag
        let m = minimize_convex(|s| Ok((s - 40.0).powi(2)), &cfg).unwrap();
        assert!(m.boundary.is_none());
        assert_relative_eq!(m.s, 40.0, max_relative = 1e-7);
    }

    #[test]
    fn all_infinite_is_an_error() {
        let r = minimize_convex(|_| Ok(f64::INFINITY), &OptimizerConfig::default());
        assert!(matches!(r, Err(Error::Optimization(_))));
    }

    #[test]
    fn infinite_region_is_skipped() {
        let m = minimize_convex(
            |s| Ok(if s > 0.5 { f64::INFINITY } else { (s - 0.2).powi(2) }),
            &OptimizerConfig::default(),
        )
        .unwrap();
        assert_relative_eq!(m.s, 0.2, max_relative = 1e-7);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = OptimizerConfig {
            s_lo: 2.0,
            s_hi: 1.0,
            ..OptimizerConfig::default()
        };
        assert!(minimize_convex(|s| Ok(s), &cfg).is_err());
    }
}
