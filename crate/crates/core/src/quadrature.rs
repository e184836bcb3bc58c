//! Breakpoint-aware composite Gauss-Legendre integration and the
//! truncation map `[t]` used for piecewise constant arguments.

use gauss_quad::legendre::GaussLegendre;

use crate::error::{Error, Result};

const DEDUP_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    /// Target absolute error.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            order: 16,
            tol: 1e-10,
            max_panels: 4096,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order < 2 {
            return Err(Error::InvalidParameter(format!(
                "quadrature order {} < 2",
                self.order
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "quadrature tolerance {} must be positive",
                self.tol
            )));
        }
        Ok(())
    }
}

/// Sorted, deduplicated set of kink/jump locations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BreakpointSet {
    points: Vec<f64>,
}

impl BreakpointSet {
    pub fn new<I: IntoIterator<Item = f64>>(points: I) -> Self {
        let mut set = Self::default();
        set.extend(points);
        set
    }

    /// Integers of `[-half_period, half_period]` together with both endpoints.
    pub fn integers_in(half_period: f64) -> Self {
        let n = half_period.floor() as i64;
        let mut set = Self::new((-n..=n).map(|k| k as f64));
        set.extend([-half_period, half_period]);
        set
    }

    pub fn extend<I: IntoIterator<Item = f64>>(&mut self, points: I) {
        self.points.extend(points.into_iter().filter(|p| p.is_finite()));
        self.points.sort_by(|a, b| a.total_cmp(b));
        self.points.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_EPS);
    }

    pub fn with<I: IntoIterator<Item = f64>>(mut self, points: I) -> Self {
        self.extend(points);
        self
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// `[a, b]` cut at every breakpoint strictly inside it.
    pub fn segments(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let mut cuts = vec![a];
        cuts.extend(
            self.points
                .iter()
                .copied()
                .filter(|&p| p > a + DEDUP_EPS && p < b - DEDUP_EPS),
        );
        cuts.push(b);
        cuts.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// Cached Gauss-Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Rule {
    pairs: Vec<(f64, f64)>,
}

impl Rule {
    pub fn new(order: usize) -> Result<Self> {
        let rule = GaussLegendre::new(order)
            .map_err(|e| Error::InvalidParameter(format!("Gauss-Legendre order {order}: {e}")))?;
        Ok(Self {
            pairs: rule.as_node_weight_pairs().to_vec(),
        })
    }

    pub fn pairs(&self) -> &[(f64, f64)] {
        &self.pairs
    }

    /// Single-panel estimate on `[a, b]`.
    pub fn apply<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, f: &mut F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        half * self
            .pairs
            .iter()
            .map(|&(x, w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// `panels` equal panels on `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, f: &mut F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|i| {
                let lo = a + h * i as f64;
                let hi = if i + 1 == panels { b } else { lo + h };
                self.apply(lo, hi, f)
            })
            .sum()
    }
}

/// Composite Gauss-Legendre over `[a, b]`, split at every breakpoint, with
/// panel halving on each segment until successive estimates agree.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    brk: &BreakpointSet,
    cfg: &QuadConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(a <= b) {
        return Err(Error::InvalidParameter(format!(
            "integration bounds out of order: [{a}, {b}]"
        )));
    }
    if a == b {
        return Ok(0.0);
    }
    let rule = Rule::new(cfg.order)?;
    integrate_with_rule(&mut f, a, b, brk, cfg, &rule)
}

pub(crate) fn integrate_with_rule<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    brk: &BreakpointSet,
    cfg: &QuadConfig,
    rule: &Rule,
) -> Result<f64> {
    let segments = brk.segments(a, b);
    let nseg = segments.len() as f64;
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut failed = false;
    for (lo, hi) in segments {
        let seg_tol = cfg.tol / nseg;
        let mut panels = 1usize;
        let mut prev = rule.apply(lo, hi, f);
        loop {
            let next_panels = panels * 2;
            let next = rule.composite(lo, hi, next_panels, f);
            let diff = (next - prev).abs();
            panels = next_panels;
            prev = next;
            if diff < seg_tol {
                total_err += diff;
                break;
            }
            if panels >= cfg.max_panels {
                total_err += diff;
                failed = true;
                break;
            }
        }
        total += prev;
    }
    if failed {
        return Err(Error::Quadrature {
            estimate: total,
            achieved: total_err,
        });
    }
    Ok(total)
}

/// The truncation `[t]`: `n` on `[n, n+1)` and `-n` on `(-n-1, -n]`, `n >= 0`.
pub fn floor_trunc(t: f64) -> i64 {
    if t >= 0.0 {
        t.floor() as i64
    } else {
        -((-t).floor() as i64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_odd_integrands() {
        let cfg = QuadConfig::default();
        let brk = BreakpointSet::default();
        let v = integrate(|_| 1.0, -1.3, 1.3, &brk, &cfg).unwrap();
        assert!((v - 2.6).abs() < 1e-13);
        let v = integrate(|s| s, -1.0, 1.0, &brk, &cfg).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn kinks_are_integrated_exactly_once_split() {
        let cfg = QuadConfig::default();
        let brk = BreakpointSet::new([0.3]);
        let v = integrate(|s: f64| (s - 0.3).abs(), -1.0, 1.0, &brk, &cfg).unwrap();
        assert!((v - (1.3f64.powi(2) + 0.7f64.powi(2)) / 2.0).abs() < 1e-14);
    }

    #[test]
    fn additivity_over_adjacent_intervals() {
        let cfg = QuadConfig::default();
        let brk = BreakpointSet::new([0.0]);
        let f = |s: f64| (3.0 * s).sin() + s.abs();
        let whole = integrate(f, -1.0, 2.0, &brk, &cfg).unwrap();
        let left = integrate(f, -1.0, 0.4, &brk, &cfg).unwrap();
        let right = integrate(f, 0.4, 2.0, &brk, &cfg).unwrap();
        assert!((whole - left - right).abs() < 1e-12);
    }

    #[test]
    fn non_convergence_reports_best_estimate() {
        let cfg = QuadConfig {
            order: 2,
            tol: 1e-15,
            max_panels: 8,
        };
        let err = integrate(|s: f64| s.abs().sqrt(), -1.0, 1.0, &BreakpointSet::default(), &cfg)
            .unwrap_err();
        match err {
            Error::Quadrature { estimate, achieved } => {
                assert!((estimate - 4.0 / 3.0).abs() < 0.1);
                assert!(achieved > 0.0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let cfg = QuadConfig {
            order: 1,
            ..Default::default()
        };
        assert!(integrate(|_| 1.0, 0.0, 1.0, &BreakpointSet::default(), &cfg).is_err());
    }

    #[test]
    fn breakpoints_are_sorted_and_deduplicated() {
        let brk = BreakpointSet::new([0.5, -0.2, 0.5 + 1e-16, 1.0]);
        assert_eq!(brk.points(), &[-0.2, 0.5, 1.0]);
        let ints = BreakpointSet::integers_in(1.6);
        assert_eq!(ints.points(), &[-1.6, -1.0, 0.0, 1.0, 1.6]);
    }

    #[test]
    fn truncation_follows_half_open_convention() {
        assert_eq!(floor_trunc(1.7), 1);
        assert_eq!(floor_trunc(-1.5), -1);
        assert_eq!(floor_trunc(-1.0), -1);
        assert_eq!(floor_trunc(0.999), 0);
        assert_eq!(floor_trunc(-0.999), 0);
        assert_eq!(floor_trunc(2.0), 2);
        assert_eq!(floor_trunc(-2.0), -2);
        assert_eq!(floor_trunc(-1.999), -1);
    }
}
