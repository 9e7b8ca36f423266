//! Closed-form capacity bounds with unit constants.
//!
//! All logarithms are natural. Quantities are taken as reals so that
//! expressions such as `n / (ln n)^2.5` can be evaluated exactly.

mod occupancy;

pub use occupancy::{
    occupancy_branch, occupancy_l, occupancy_l_with, occupancy_simulate, DEFAULT_POLYLOG_POWER,
};

use std::fmt;

use crate::routing::Scheme;
use crate::{Error, Result};

/// Default number of `l_c` grid points in [`upper_bound`].
pub const DEFAULT_GRID: usize = 256;

/// Network and traffic parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Inputs {
    pub lambda: f64,
    pub n: f64,
    pub n_s: f64,
    pub n_d: f64,
    pub alpha: f64,
    /// Power of the polylog threshold in `L(m, b)`.
    pub polylog: f64,
}

impl Inputs {
    pub fn new(lambda: f64, n: f64, n_s: f64, n_d: f64, alpha: f64) -> Result<Self> {
        let i = Inputs {
            lambda,
            n,
            n_s,
            n_d,
            alpha,
            polylog: DEFAULT_POLYLOG_POWER,
        };
        i.validate()?;
        Ok(i)
    }

    pub fn with_polylog(mut self, k: f64) -> Result<Self> {
        self.polylog = k;
        self.validate()?;
        Ok(self)
    }

    /// Dense network: `lambda = n`, `n_s = n`.
    pub fn rdn(n: f64, n_d: f64, alpha: f64) -> Result<Self> {
        Inputs::new(n, n, n, n_d, alpha)
    }

    /// Extended network: `lambda = 1`, `n_s = n`.
    pub fn ren(n: f64, n_d: f64, alpha: f64) -> Result<Self> {
        Inputs::new(1.0, n, n, n_d, alpha)
    }

    pub fn validate(&self) -> Result<()> {
        let Inputs { lambda, n, n_s, n_d, alpha, polylog } = *self;
        let finite = [lambda, n, n_s, n_d, alpha, polylog].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::param("bound inputs must be finite"));
        }
        if n < 2.0 {
            return Err(Error::param(format!("n = {n} must be at least 2")));
        }
        if !(1.0..=n).contains(&lambda) {
            return Err(Error::param(format!("lambda = {lambda} outside [1, n]")));
        }
        if !(1.0..=n).contains(&n_d) {
            return Err(Error::param(format!("n_d = {n_d} outside [1, n]")));
        }
        if !(n_s > 1.0 && n_s <= n) {
            return Err(Error::param(format!("n_s = {n_s} outside (1, n]")));
        }
        if alpha <= 2.0 {
            return Err(Error::param(format!("alpha = {alpha} must exceed 2")));
        }
        if polylog <= 0.0 {
            return Err(Error::param(format!("polylog power {polylog} must be positive")));
        }
        Ok(())
    }

    fn ln_n(&self) -> f64 {
        self.n.ln()
    }

    fn l(&self, m: f64, b: f64) -> f64 {
        occupancy_l_with(m, b, self.polylog)
    }
}

/// Rate of an ordinary arterial road or access path.
pub fn r_oar(lambda: f64, n: f64, alpha: f64) -> f64 {
    let ln = n.ln();
    if lambda <= ln {
        (lambda / ln).powf(alpha / 2.0)
    } else {
        1.0
    }
}

/// Rate of a parallel arterial road.
pub fn r_par(lambda: f64, n: f64, alpha: f64) -> f64 {
    let ln = n.ln();
    if lambda <= ln.powf(1.0 - 2.0 / alpha) {
        (lambda / ln).powf(alpha / 2.0)
    } else {
        1.0 / ln
    }
}

/// Probability that a session uses a given ordinary AR-station under `o`.
pub fn p_o(n: f64, n_d: f64) -> f64 {
    let ln = n.ln();
    if n_d <= n / ln {
        (n_d * ln / n).sqrt()
    } else {
        1.0
    }
}

/// Probability that a session uses a given parallel AR-station under `p`.
pub fn p_p(n: f64, n_d: f64) -> f64 {
    let ln = n.ln();
    if n_d <= n / ln {
        (n_d / (n * ln)).sqrt()
    } else {
        n_d / n
    }
}

/// Ordinary AR-station usage probability under `o&h`.
pub fn p_oh_oar(n: f64, n_d: f64) -> f64 {
    let ln = n.ln();
    if n_d <= n / ln.powf(1.5) {
        n_d * ln.powf(1.5) / n
    } else {
        1.0
    }
}

/// Highway-station usage probability under `o&h` and `p&h`.
pub fn p_h(n: f64, n_d: f64) -> f64 {
    let ln = n.ln();
    if n_d <= n / (ln * ln) {
        (n_d / n).sqrt()
    } else if n_d <= n / ln {
        n_d * ln / n
    } else {
        1.0
    }
}

/// Parallel AR-station usage probability under `p&h`.
pub fn p_ph_par(n: f64, n_d: f64) -> f64 {
    let ln = n.ln();
    if n_d <= n / ln.sqrt() {
        n_d * ln.sqrt() / n
    } else {
        1.0
    }
}

/// Throughput order of scheme `o`.
pub fn lambda_o(i: &Inputs) -> f64 {
    r_oar(i.lambda, i.n, i.alpha) / i.l(i.n_s, 1.0 / p_o(i.n, i.n_d))
}

/// Throughput order of scheme `p`.
pub fn lambda_p(i: &Inputs) -> f64 {
    r_par(i.lambda, i.n, i.alpha) / i.l(i.n_s, 1.0 / p_p(i.n, i.n_d))
}

/// Throughput order of scheme `o&h`.
pub fn lambda_oh(i: &Inputs) -> f64 {
    let ar = r_oar(i.lambda, i.n, i.alpha) / i.l(i.n_s, 1.0 / p_oh_oar(i.n, i.n_d));
    ar.min(1.0 / i.l(i.n_s, 1.0 / p_h(i.n, i.n_d)))
}

/// Throughput order of scheme `p&h`.
pub fn lambda_ph(i: &Inputs) -> f64 {
    let ar = r_par(i.lambda, i.n, i.alpha) / i.l(i.n_s, 1.0 / p_ph_par(i.n, i.n_d));
    ar.min(1.0 / i.l(i.n_s, 1.0 / p_h(i.n, i.n_d)))
}

/// Throughput order of one scheme.
pub fn scheme_throughput(i: &Inputs, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::O => lambda_o(i),
        Scheme::P => lambda_p(i),
        Scheme::OH => lambda_oh(i),
        Scheme::PH => lambda_ph(i),
    }
}

/// The best of the four scheme throughputs. Ties go to the earlier scheme
/// in `o, p, o&h, p&h` order.
pub fn lower_bound(i: &Inputs) -> Result<(f64, Scheme)> {
    i.validate()?;
    let mut best = (f64::NEG_INFINITY, Scheme::O);
    for s in Scheme::ALL {
        let v = scheme_throughput(i, s);
        if v > best.0 {
            best = (v, s);
        }
    }
    Ok(best)
}

/// Maximiser of the upper-bound objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperBound {
    pub value: f64,
    pub lc_star: f64,
}

/// The two terms of the upper-bound objective at link length `lc`.
pub fn upper_terms(i: &Inputs, lc: f64) -> (f64, f64) {
    let (n, lambda, n_d, a) = (i.n, i.lambda, i.n_d, i.alpha);
    let ln = i.ln_n();
    let t1 = lc.powf(-a).min(1.0) / i.l(i.n_s, n.sqrt() / (lc * (n_d * lambda).sqrt()));
    let t2 = (lambda / ln).powf(a / 2.0).min(1.0) / i.l(i.n_s, n * lambda.sqrt() * lc / (n_d * ln.sqrt()));
    (t1, t2)
}

/// Largest value over a log-spaced grid of `l_c` in
/// `[1/sqrt(lambda), sqrt(ln n / lambda)]` of the smaller objective term.
/// Ties within a relative `1e-12` go to the larger `l_c`; a collapsed
/// interval is evaluated at its lower end.
pub fn upper_bound(i: &Inputs, grid_size: usize) -> Result<UpperBound> {
    i.validate()?;
    if grid_size < 32 {
        return Err(Error::param(format!("grid_size = {grid_size} must be at least 32")));
    }
    let lo = 1.0 / i.lambda.sqrt();
    let hi = (i.ln_n() / i.lambda).sqrt();
    let points: Vec<f64> = if hi <= lo {
        vec![lo]
    } else {
        let ratio = (hi / lo).ln();
        (0..grid_size)
            .map(|k| lo * (ratio * k as f64 / (grid_size - 1) as f64).exp())
            .collect()
    };
    let mut best: Option<UpperBound> = None;
    for lc in points {
        let (t1, t2) = upper_terms(i, lc);
        let v = t1.min(t2);
        best = match best {
            None => Some(UpperBound { value: v, lc_star: lc }),
            Some(b) if v > b.value * (1.0 + 1e-12) => Some(UpperBound { value: v, lc_star: lc }),
            Some(b) if v >= b.value * (1.0 - 1e-12) => Some(UpperBound {
                value: b.value.max(v),
                lc_star: lc,
            }),
            keep => keep,
        };
    }
    best.ok_or_else(|| Error::state("empty l_c grid"))
}

/// Branch (1 to 4) of the dense-network reference at `n_d`.
pub fn rdn_regime(n: f64, n_d: f64) -> u8 {
    let ln = n.ln();
    if n_d <= n / ln.powi(3) {
        1
    } else if n_d <= n / ln.powi(2) {
        2
    } else if n_d <= n / ln {
        3
    } else {
        4
    }
}

/// Dense-network capacity order with `n_s = n`.
pub fn rdn_reference(n: f64, n_d: f64) -> f64 {
    let ln = n.ln();
    match rdn_regime(n, n_d) {
        1 => 1.0 / (n_d * n).sqrt(),
        2 => 1.0 / (n_d * ln.powf(1.5)),
        3 => 1.0 / (n * n_d * ln).sqrt(),
        _ => 1.0 / n,
    }
}

/// Branch (1 to 4) of the extended-network reference at `n_d`.
pub fn ren_regime(n: f64, n_d: f64, alpha: f64) -> u8 {
    let ln = n.ln();
    if n_d <= n / ln.powf(alpha + 1.0) {
        1
    } else if n_d <= n / ln.powi(2) {
        2
    } else if n_d <= n / ln {
        3
    } else {
        4
    }
}

/// Extended-network capacity order with `n_s = n`.
pub fn ren_reference(n: f64, n_d: f64, alpha: f64) -> f64 {
    let ln = n.ln();
    match ren_regime(n, n_d, alpha) {
        1 => 1.0 / (n_d * n).sqrt(),
        2 => 1.0 / (n_d * ln.powf((alpha + 1.0) / 2.0)),
        3 => 1.0 / ((n * n_d).sqrt() * ln.powf((alpha - 1.0) / 2.0)),
        _ => 1.0 / (n_d * ln.powf(alpha / 2.0)),
    }
}

/// Which network family a prior bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Rdn,
    Ren,
}

/// Earlier upper bounds, for comparison with the references.
pub fn prior_bounds(n: f64, n_d: f64, which: Family, alpha: f64) -> f64 {
    let ln = n.ln();
    match which {
        Family::Rdn => {
            if n_d <= n / (ln * ln) {
                1.0 / (n_d * n).sqrt()
            } else if n_d <= n / ln {
                1.0 / (n_d * ln)
            } else {
                1.0 / n
            }
        }
        Family::Ren => {
            if n_d <= n / ln.powf(alpha) {
                1.0 / (n_d * n).sqrt()
            } else {
                1.0 / (n_d * ln.powf(alpha / 2.0))
            }
        }
    }
}

/// Upper and lower bounds side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityReport {
    pub inputs: Inputs,
    pub upper: f64,
    pub lc_star: f64,
    pub lower: f64,
    pub best_scheme: Scheme,
    /// `upper / lower`.
    pub ratio: f64,
    /// Binding objective term and its occupancy branch, e.g. `t1/L2`.
    pub regime_upper: String,
    /// Best scheme and the occupancy branch of its binding term, e.g. `o&h/L1`.
    pub regime_lower: String,
}

fn upper_regime(i: &Inputs, lc: f64) -> String {
    let (t1, t2) = upper_terms(i, lc);
    let ln = i.ln_n();
    if t1 <= t2 {
        let b = i.n.sqrt() / (lc * (i.n_d * i.lambda).sqrt());
        format!("t1/L{}", occupancy_branch(i.n_s, b, i.polylog))
    } else {
        let b = i.n * i.lambda.sqrt() * lc / (i.n_d * ln.sqrt());
        format!("t2/L{}", occupancy_branch(i.n_s, b, i.polylog))
    }
}

fn lower_regime(i: &Inputs, s: Scheme) -> String {
    let (n, nd, k) = (i.n, i.n_d, i.polylog);
    let bins = match s {
        Scheme::O => 1.0 / p_o(n, nd),
        Scheme::P => 1.0 / p_p(n, nd),
        Scheme::OH | Scheme::PH => {
            let (r, p_ar) = if s == Scheme::OH {
                (r_oar(i.lambda, n, i.alpha), p_oh_oar(n, nd))
            } else {
                (r_par(i.lambda, n, i.alpha), p_ph_par(n, nd))
            };
            let ar = r / i.l(i.n_s, 1.0 / p_ar);
            let hw = 1.0 / i.l(i.n_s, 1.0 / p_h(n, nd));
            if ar <= hw {
                1.0 / p_ar
            } else {
                1.0 / p_h(n, nd)
            }
        }
    };
    format!("{s}/L{}", occupancy_branch(i.n_s, bins, k))
}

/// Upper bound, lower bound and their ratio.
pub fn tightness(i: &Inputs, grid_size: usize) -> Result<CapacityReport> {
    let up = upper_bound(i, grid_size)?;
    let (lower, best_scheme) = lower_bound(i)?;
    Ok(CapacityReport {
        inputs: *i,
        upper: up.value,
        lc_star: up.lc_star,
        lower,
        best_scheme,
        ratio: up.value / lower,
        regime_upper: upper_regime(i, up.lc_star),
        regime_lower: lower_regime(i, best_scheme),
    })
}

/// Least-squares slope of `ln ratio` against `ln n` over a sweep of reports,
/// and whether every ratio stays within `slack` with a slope inside
/// `±slope_tol`.
pub fn tightness_trend(reports: &[CapacityReport], slack: f64, slope_tol: f64) -> Result<(f64, bool)> {
    if reports.len() < 2 {
        return Err(Error::data("a trend needs at least 2 reports"));
    }
    let xs: Vec<f64> = reports.iter().map(|r| r.inputs.n.ln()).collect();
    let ys: Vec<f64> = reports.iter().map(|r| r.ratio.ln()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::data("all reports share one n"));
    }
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx;
    let tight = reports.iter().all(|r| r.ratio <= slack) && slope.abs() <= slope_tol;
    Ok((slope, tight))
}

/// A named order function over [`Inputs`].
#[derive(Clone, Copy)]
pub struct BoundSpec {
    pub name: &'static str,
    pub eval: fn(&Inputs) -> f64,
    pub regime: fn(&Inputs) -> String,
}

impl fmt::Debug for BoundSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundSpec").field("name", &self.name).finish()
    }
}

fn branch2(v: bool) -> String {
    if v { "low".into() } else { "high".into() }
}

/// Every order function of the bounds table.
pub fn table() -> Vec<BoundSpec> {
    vec![
        BoundSpec {
            name: "R_O-AR",
            eval: |i| r_oar(i.lambda, i.n, i.alpha),
            regime: |i| branch2(i.lambda <= i.n.ln()),
        },
        BoundSpec {
            name: "R_P-AR",
            eval: |i| r_par(i.lambda, i.n, i.alpha),
            regime: |i| branch2(i.lambda <= i.n.ln().powf(1.0 - 2.0 / i.alpha)),
        },
        BoundSpec {
            name: "p_o",
            eval: |i| p_o(i.n, i.n_d),
            regime: |i| branch2(i.n_d <= i.n / i.n.ln()),
        },
        BoundSpec {
            name: "p_p",
            eval: |i| p_p(i.n, i.n_d),
            regime: |i| branch2(i.n_d <= i.n / i.n.ln()),
        },
        BoundSpec {
            name: "p_oh,O-AR",
            eval: |i| p_oh_oar(i.n, i.n_d),
            regime: |i| branch2(i.n_d <= i.n / i.n.ln().powf(1.5)),
        },
        BoundSpec {
            name: "p_H",
            eval: |i| p_h(i.n, i.n_d),
            regime: |i| {
                let ln = i.n.ln();
                if i.n_d <= i.n / (ln * ln) {
                    "low".into()
                } else if i.n_d <= i.n / ln {
                    "mid".into()
                } else {
                    "high".into()
                }
            },
        },
        BoundSpec {
            name: "p_ph,P-AR",
            eval: |i| p_ph_par(i.n, i.n_d),
            regime: |i| branch2(i.n_d <= i.n / i.n.ln().sqrt()),
        },
        BoundSpec {
            name: "Lambda_o",
            eval: lambda_o,
            regime: |i| lower_regime(i, Scheme::O),
        },
        BoundSpec {
            name: "Lambda_p",
            eval: lambda_p,
            regime: |i| lower_regime(i, Scheme::P),
        },
        BoundSpec {
            name: "Lambda_o&h",
            eval: lambda_oh,
            regime: |i| lower_regime(i, Scheme::OH),
        },
        BoundSpec {
            name: "Lambda_p&h",
            eval: lambda_ph,
            regime: |i| lower_regime(i, Scheme::PH),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const A: f64 = 3.0;

    #[test]
    fn rejects_bad_inputs() {
        assert!(Inputs::new(0.5, 100.0, 10.0, 4.0, A).is_err());
        assert!(Inputs::new(1.0, 100.0, 1.0, 4.0, A).is_err());
        assert!(Inputs::new(1.0, 100.0, 10.0, 101.0, A).is_err());
        assert!(Inputs::new(1.0, 100.0, 10.0, 4.0, 2.0).is_err());
        let i = Inputs::rdn(1e4, 4.0, A).unwrap();
        assert!(upper_bound(&i, 16).is_err());
    }

    #[test]
    fn dense_lc_star_tracks_inverse_sqrt_n() {
        let n = 2f64.powi(20);
        let i = Inputs::rdn(n, 4.0, A).unwrap();
        let u = upper_bound(&i, DEFAULT_GRID).unwrap();
        let target = 1.0 / n.sqrt();
        assert!(u.lc_star / target <= 4.0 && target / u.lc_star <= 4.0, "{}", u.lc_star);
        let i = Inputs::rdn(n, n, A).unwrap();
        let u = upper_bound(&i, DEFAULT_GRID).unwrap();
        let target = n.ln().sqrt() / n.sqrt();
        assert!(u.lc_star / target <= 4.0 && target / u.lc_star <= 4.0, "{}", u.lc_star);
    }

    #[test]
    fn collapsed_interval_uses_single_point() {
        // ln n / lambda < 1 / lambda is impossible for n >= 3, so force it with n = 2
        let i = Inputs::new(2.0, 2.0, 2.0, 1.0, A).unwrap();
        let u = upper_bound(&i, 64).unwrap();
        assert_eq!(u.lc_star, 1.0 / 2f64.sqrt());
    }

    #[test]
    fn references_match_branches() {
        let n = 2f64.powi(20);
        let ln = n.ln();
        let nd = n / ln.powf(2.5);
        assert_eq!(rdn_regime(n, nd), 2);
        assert!((rdn_reference(n, nd) - 1.0 / (nd * ln.powf(1.5))).abs() / rdn_reference(n, nd) < 1e-12);
        let nd = n / ln.powf(1.5);
        assert_eq!(ren_regime(n, nd, A), 3);
        let want = 1.0 / ((n * nd).sqrt() * ln.powf((A - 1.0) / 2.0));
        assert!((ren_reference(n, nd, A) / want - 1.0).abs() < 1e-12);
        assert_eq!(rdn_reference(n, n / 2.0), 1.0 / n);
    }

    #[test]
    fn prior_gap_is_sqrt_log() {
        let n = 2f64.powi(20);
        let ln = n.ln();
        let nd = n / (ln * ln);
        let r = prior_bounds(n, nd, Family::Rdn, A) / rdn_reference(n, nd);
        assert!((r / ln.sqrt() - 1.0).abs() < 1e-9);
        let nd = n / ln.powf(2.5);
        let r = prior_bounds(n, nd, Family::Rdn, A) / rdn_reference(n, nd);
        assert!((r / ln.powf(0.25) - 1.0).abs() < 1e-9);
        let nd = 16.0;
        assert_eq!(prior_bounds(n, nd, Family::Ren, A), 1.0 / (nd * n).sqrt());
        // outside the gap the two agree
        assert_eq!(prior_bounds(n, 4.0, Family::Rdn, A), rdn_reference(n, 4.0));
    }

    #[test]
    fn lower_bound_regimes() {
        let n = 2f64.powi(20);
        let ln = n.ln();
        let i = Inputs::rdn(n, 4.0, A).unwrap();
        let (v, s) = lower_bound(&i).unwrap();
        assert!(matches!(s, Scheme::O | Scheme::OH));
        let r = v / rdn_reference(n, 4.0);
        assert!(r > 0.125 && r <= 8.0, "{r}");
        let nd = n / ln * 2.0;
        let i = Inputs::ren(n, nd, A).unwrap();
        let (v, _) = lower_bound(&i).unwrap();
        let r = v * nd * ln.powf(A / 2.0);
        assert!(r > 0.125 && r <= 8.0, "{r}");
    }

    #[test]
    fn par_threshold_limit() {
        let n = 2f64.powi(20);
        let ln = n.ln();
        // for huge alpha the threshold (ln n)^(1 - 2/alpha) approaches ln n
        let a = 1e6;
        let t = ln.powf(1.0 - 2.0 / a);
        assert!((t / ln - 1.0).abs() < 1e-4);
        assert_eq!(r_par(t * 1.0001, n, a), 1.0 / ln);
    }

    #[test]
    fn grid_converges() {
        let n = 2f64.powi(20);
        for nd in [4.0, n / n.ln().powi(3), n / n.ln().powf(1.5), n] {
            for i in [Inputs::rdn(n, nd, A).unwrap(), Inputs::ren(n, nd, A).unwrap()] {
                let a = upper_bound(&i, 256).unwrap().value;
                let b = upper_bound(&i, 512).unwrap().value;
                assert!((a / b - 1.0).abs() < 0.01, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn specialisation_and_trend() {
        for (ndf, ren) in [
            (&(|_n: f64| 4.0) as &dyn Fn(f64) -> f64, false),
            (&|n: f64| n / n.ln().powf(2.5), false),
            (&|n: f64| n / n.ln().powf(1.5), false),
            (&|n: f64| n, false),
            (&|_n: f64| 4.0, true),
            (&|n: f64| n / n.ln().powi(3), true),
            (&|n: f64| n / n.ln().powf(1.5), true),
            (&|n: f64| n, true),
        ] {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for e in [16, 20, 24] {
                let n = 2f64.powi(e);
                let nd = ndf(n);
                let (i, r) = if ren {
                    (Inputs::ren(n, nd, A).unwrap(), ren_reference(n, nd, A))
                } else {
                    (Inputs::rdn(n, nd, A).unwrap(), rdn_reference(n, nd))
                };
                let u = upper_bound(&i, DEFAULT_GRID).unwrap().value;
                let q = u / r;
                assert!((0.125..=8.0).contains(&q), "ren={ren} n=2^{e}: {q}");
                xs.push(n.ln());
                ys.push(q.ln());
            }
            let mx = xs.iter().sum::<f64>() / 3.0;
            let my = ys.iter().sum::<f64>() / 3.0;
            let s = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
                / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
            assert!(s.abs() <= 0.05, "ren={ren}: slope {s}");
        }
    }

    #[test]
    fn table_covers_every_function() {
        let i = Inputs::rdn(2f64.powi(20), 64.0, A).unwrap();
        let t = table();
        assert_eq!(t.len(), 11);
        for b in &t {
            let v = (b.eval)(&i);
            assert!(v.is_finite() && v > 0.0, "{}", b.name);
            assert!(!(b.regime)(&i).is_empty());
        }
    }

    #[test]
    fn report_fields() {
        let i = Inputs::rdn(2f64.powi(20), 4.0, A).unwrap();
        let r = tightness(&i, DEFAULT_GRID).unwrap();
        assert!((r.ratio - r.upper / r.lower).abs() < 1e-15);
        assert!(r.regime_upper.starts_with('t'));
        assert!(r.regime_lower.contains("/L"));
    }

    fn inputs() -> impl Strategy<Value = Inputs> {
        (14.0f64..24.0, 0.0f64..=1.0, 0.0f64..=1.0, 0.0f64..=1.0, 2.1f64..6.0).prop_map(|(e, a, b, c, alpha)| {
            let n = 2f64.powf(e);
            Inputs::new(n.powf(a), n, n.powf(b).max(2.0), n.powf(c), alpha).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn every_order_is_positive(i in inputs()) {
            for b in table() {
                let v = (b.eval)(&i);
                prop_assert!(v.is_finite() && v > 0.0, "{} = {}", b.name, v);
            }
            let u = upper_bound(&i, 64).unwrap();
            prop_assert!(u.value.is_finite() && u.value > 0.0);
        }

        #[test]
        fn upper_dominates_lower_within_slack(i in inputs()) {
            let r = tightness(&i, 64).unwrap();
            prop_assert!(r.ratio >= 0.25, "ratio {}", r.ratio);
        }

        // the unit-constant occupancy function jumps by up to 2x at its
        // branch thresholds, so monotonicity holds up to that factor
        #[test]
        fn upper_non_increasing_in_nd_and_ns(i in inputs(), f in 1.0f64..50.0) {
            let u = upper_bound(&i, 64).unwrap().value;
            let more_d = Inputs { n_d: (i.n_d * f).min(i.n), ..i };
            let more_s = Inputs { n_s: (i.n_s * f).min(i.n), ..i };
            prop_assert!(upper_bound(&more_d, 64).unwrap().value <= 2.0 * u * (1.0 + 1e-9));
            prop_assert!(upper_bound(&more_s, 64).unwrap().value <= 2.0 * u * (1.0 + 1e-9));
        }
    }

    #[test]
    fn upper_ge_lower_on_grid() {
        let n = 2f64.powi(20);
        let pts = |lo: f64| (0..5).map(move |k| lo.max(n.powf(k as f64 / 4.0)));
        let mut worst = f64::INFINITY;
        for lambda in pts(1.0) {
            for nd in pts(1.0) {
                for ns in pts(2.0) {
                    let i = Inputs::new(lambda, n, ns, nd, A).unwrap();
                    worst = worst.min(tightness(&i, DEFAULT_GRID).unwrap().ratio);
                }
            }
        }
        assert!(worst >= 0.25, "{worst}");
    }
}
