//! Green's function `G_m` of `v''(t) + m v(-t) = sigma(t)` on `[-T, T]`
//! with periodic boundary conditions.
//!
//! The closed forms are only written on the canonical triangle
//! `-t <= s <= t`; every other point is mapped there through
//! `G(t,s) = G(-t,-s)` and `G(t,s) = G(s,t)`.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, BreakpointSet, QuadConfig};

/// Relative distance to `(k pi / T)^2` below which `m` is treated as resonant.
pub const RESONANCE_REL_TOL: f64 = 1e-9;

const DOMAIN_SLACK: f64 = 1e-12;

/// One of the four symmetry images of the canonical triangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TriangleRegion {
    /// `t >= |s|`: the canonical triangle itself.
    LowerTriangle,
    /// `-t >= |s|`: image under `(t,s) -> (-t,-s)`.
    Reflected,
    /// `s >= |t|`: image under `(t,s) -> (s,t)`.
    Transposed,
    /// `-s >= |t|`: image under both maps.
    ReflectedTransposed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TriangleCoords {
    pub t: f64,
    pub s: f64,
    pub canonical_t: f64,
    pub canonical_s: f64,
    pub region: TriangleRegion,
}

impl TriangleCoords {
    /// Undo the recorded symmetry operations.
    pub fn recover(&self) -> (f64, f64) {
        let (y, x) = (self.canonical_t, self.canonical_s);
        match self.region {
            TriangleRegion::LowerTriangle => (y, x),
            TriangleRegion::Reflected => (-y, -x),
            TriangleRegion::Transposed => (x, y),
            TriangleRegion::ReflectedTransposed => (-x, -y),
        }
    }
}

/// Which side of the diagonal `s = t` a one-sided derivative is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `s -> t^-`.
    Left,
    /// `s -> t^+`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignClass {
    StrictlyPositive,
    PositiveVanishingAtP,
    StrictlyNegative,
    NegativeVanishingAtP1,
    ChangesSign,
}

#[derive(Debug, Clone, Copy)]
enum Wave {
    Cos,
    Sin,
    Cosh,
    Sinh,
}

impl Wave {
    fn value(self, a: f64, u: f64) -> f64 {
        match self {
            Wave::Cos => (a * u).cos(),
            Wave::Sin => (a * u).sin(),
            Wave::Cosh => (a * u).cosh(),
            Wave::Sinh => (a * u).sinh(),
        }
    }

    fn derivative(self, a: f64, u: f64) -> f64 {
        match self {
            Wave::Cos => -a * (a * u).sin(),
            Wave::Sin => a * (a * u).cos(),
            Wave::Cosh => a * (a * u).sinh(),
            Wave::Sinh => a * (a * u).cosh(),
        }
    }

    fn primitive(self, a: f64, u: f64) -> f64 {
        match self {
            Wave::Cos => (a * u).sin() / a,
            Wave::Sin => -(a * u).cos() / a,
            Wave::Cosh => (a * u).sinh() / a,
            Wave::Sinh => (a * u).cosh() / a,
        }
    }
}

/// `g(y, x) = [c1 p1(x) q1(y - T) + c2 p2(x) q2(y - T)] / (2 alpha)` on `y >= |x|`.
#[derive(Debug, Clone, Copy)]
struct CanonicalForm {
    alpha: f64,
    half_period: f64,
    c1: f64,
    c2: f64,
    p1: Wave,
    q1: Wave,
    p2: Wave,
    q2: Wave,
}

impl CanonicalForm {
    fn new(m: f64, half_period: f64) -> Self {
        let alpha = m.abs().sqrt();
        let at = alpha * half_period;
        if m > 0.0 {
            Self {
                alpha,
                half_period,
                c1: 1.0 / at.sin(),
                c2: 1.0 / at.sinh(),
                p1: Wave::Cos,
                q1: Wave::Cos,
                p2: Wave::Sinh,
                q2: Wave::Sinh,
            }
        } else {
            Self {
                alpha,
                half_period,
                c1: 1.0 / at.sin(),
                c2: -1.0 / at.sinh(),
                p1: Wave::Sin,
                q1: Wave::Sin,
                p2: Wave::Cosh,
                q2: Wave::Cosh,
            }
        }
    }

    fn value(&self, y: f64, x: f64) -> f64 {
        let a = self.alpha;
        let u = y - self.half_period;
        (self.c1 * self.p1.value(a, x) * self.q1.value(a, u)
            + self.c2 * self.p2.value(a, x) * self.q2.value(a, u))
            / (2.0 * a)
    }

    /// `dg/dy`.
    fn d_first(&self, y: f64, x: f64) -> f64 {
        let a = self.alpha;
        let u = y - self.half_period;
        (self.c1 * self.p1.value(a, x) * self.q1.derivative(a, u)
            + self.c2 * self.p2.value(a, x) * self.q2.derivative(a, u))
            / (2.0 * a)
    }

    /// `dg/dx`.
    fn d_second(&self, y: f64, x: f64) -> f64 {
        let a = self.alpha;
        let u = y - self.half_period;
        (self.c1 * self.p1.derivative(a, x) * self.q1.value(a, u)
            + self.c2 * self.p2.derivative(a, x) * self.q2.value(a, u))
            / (2.0 * a)
    }

    /// `int_{x1}^{x2} g(y, x) dx`.
    fn integral_second(&self, y: f64, x1: f64, x2: f64) -> f64 {
        if x2 <= x1 {
            return 0.0;
        }
        let a = self.alpha;
        let u = y - self.half_period;
        (self.c1 * self.q1.value(a, u) * (self.p1.primitive(a, x2) - self.p1.primitive(a, x1))
            + self.c2 * self.q2.value(a, u) * (self.p2.primitive(a, x2) - self.p2.primitive(a, x1)))
            / (2.0 * a)
    }

    /// `int_{y1}^{y2} g(y, x) dy`.
    fn integral_first(&self, x: f64, y1: f64, y2: f64) -> f64 {
        if y2 <= y1 {
            return 0.0;
        }
        let a = self.alpha;
        let (u1, u2) = (y1 - self.half_period, y2 - self.half_period);
        (self.c1 * self.p1.value(a, x) * (self.q1.primitive(a, u2) - self.q1.primitive(a, u1))
            + self.c2 * self.p2.value(a, x) * (self.q2.primitive(a, u2) - self.q2.primitive(a, u1)))
            / (2.0 * a)
    }
}

/// Map `(t, s)` into the canonical triangle `-t <= s <= t`.
pub fn symmetry_reduce(t: f64, s: f64, half_period: f64) -> Result<TriangleCoords> {
    check_domain(t, s, half_period)?;
    let (canonical_t, canonical_s, region) = if t >= s.abs() {
        (t, s, TriangleRegion::LowerTriangle)
    } else if -t >= s.abs() {
        (-t, -s, TriangleRegion::Reflected)
    } else if s >= t.abs() {
        (s, t, TriangleRegion::Transposed)
    } else {
        (-s, -t, TriangleRegion::ReflectedTransposed)
    };
    Ok(TriangleCoords {
        t,
        s,
        canonical_t,
        canonical_s,
        region,
    })
}

fn check_domain(t: f64, s: f64, half_period: f64) -> Result<()> {
    let lim = half_period * (1.0 + DOMAIN_SLACK);
    if !(t.abs() <= lim && s.abs() <= lim) {
        return Err(Error::OutOfDomain {
            t,
            s,
            period_half: half_period,
        });
    }
    Ok(())
}

/// Index `k >= 1` with `|m|` within [`RESONANCE_REL_TOL`] of `(k pi / T)^2`.
pub fn resonance_index(m: f64, half_period: f64) -> Option<u64> {
    let k = (m.abs().sqrt() * half_period / PI).round();
    if k < 1.0 {
        return None;
    }
    let target = (k * PI / half_period).powi(2);
    ((m.abs() - target).abs() / target < RESONANCE_REL_TOL).then_some(k as u64)
}

/// `G_m` on `[-T, T]^2`, immutable after construction.
#[derive(Debug, Clone)]
pub struct ReflectionKernel {
    m: f64,
    half_period: f64,
    form: CanonicalForm,
}

impl ReflectionKernel {
    pub fn new(m: f64, half_period: f64) -> Result<Self> {
        if !(half_period > 0.0) || !half_period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "half period T = {half_period} must be positive"
            )));
        }
        if m == 0.0 || !m.is_finite() {
            return Err(Error::InvalidParameter(
                "m = 0: the reflection problem has no unique solution".into(),
            ));
        }
        if let Some(k) = resonance_index(m, half_period) {
            return Err(Error::EigenvalueResonance {
                m,
                period_half: half_period,
                k,
            });
        }
        Ok(Self {
            m,
            half_period,
            form: CanonicalForm::new(m, half_period),
        })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    /// `sqrt(|m|)`.
    pub fn alpha(&self) -> f64 {
        self.form.alpha
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        check_domain(t, s, self.half_period)?;
        Ok(self.value(t, s))
    }

    /// Unchecked evaluation; callers guarantee the domain.
    pub(crate) fn value(&self, t: f64, s: f64) -> f64 {
        if t >= s.abs() {
            self.form.value(t, s)
        } else if -t >= s.abs() {
            self.form.value(-t, -s)
        } else if s >= t.abs() {
            self.form.value(s, t)
        } else {
            self.form.value(-s, -t)
        }
    }

    /// One-sided `dG/dt`; `side` only matters on the diagonal `s = t`.
    pub fn eval_dt(&self, t: f64, s: f64, side: Side) -> Result<f64> {
        check_domain(t, s, self.half_period)?;
        let region = if t == s {
            match side {
                Side::Left if t > 0.0 => TriangleRegion::LowerTriangle,
                Side::Left => TriangleRegion::ReflectedTransposed,
                Side::Right if t < 0.0 => TriangleRegion::Reflected,
                Side::Right => TriangleRegion::Transposed,
            }
        } else {
            symmetry_reduce(t, s, self.half_period)?.region
        };
        let f = &self.form;
        Ok(match region {
            TriangleRegion::LowerTriangle => f.d_first(t, s),
            TriangleRegion::Reflected => -f.d_first(-t, -s),
            TriangleRegion::Transposed => f.d_second(s, t),
            TriangleRegion::ReflectedTransposed => -f.d_second(-s, -t),
        })
    }

    /// `dG/ds`, through `G(t,s) = G(s,t)`.
    pub fn eval_ds(&self, t: f64, s: f64, side: Side) -> Result<f64> {
        let flipped = match side {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        };
        self.eval_dt(s, t, flipped)
    }

    /// `int_lo^hi G(t, s) ds` in closed form.
    pub fn integral_s(&self, t: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        let f = &self.form;
        let at = t.abs();
        let mut total = 0.0;
        // |s| <= |t|
        let (a, b) = (lo.max(-at), hi.min(at));
        if b > a {
            total += if t >= 0.0 {
                f.integral_second(t, a, b)
            } else {
                f.integral_second(-t, -b, -a)
            };
        }
        // s >= |t|: G = g(s, t)
        let (a, b) = (lo.max(at), hi);
        if b > a {
            total += f.integral_first(t, a, b);
        }
        // s <= -|t|: G = g(-s, -t)
        let (a, b) = (lo, hi.min(-at));
        if b > a {
            total += f.integral_first(-t, -b, -a);
        }
        total
    }

    /// `int_{-T}^{T} G(t, s) ds` by quadrature split at `s = +-t`.
    pub fn integral_over_s(&self, t: f64, quad: &QuadConfig) -> Result<f64> {
        check_domain(t, 0.0, self.half_period)?;
        let brk = BreakpointSet::new([t, -t]);
        integrate(
            |s| self.value(t, s),
            -self.half_period,
            self.half_period,
            &brk,
            quad,
        )
    }

    pub fn sign_classification(&self) -> SignClass {
        classify_sign(self.m, self.half_period)
    }
}

/// Checks of the defining properties of `G_m`, all maxima over the sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionDiagnostics {
    /// `|G(t,s) - G(s,t)|` and `|G(t,s) - G(-t,-s)|`.
    pub symmetry_error: f64,
    /// `|dG/dt(t,t-) - dG/dt(t,t+) - 1|`.
    pub jump_error: f64,
    /// `|G_tt(t,s) + m G(-t,s)|` by central differences with `h = 1e-4`.
    pub ode_residual: f64,
    pub periodicity_error: f64,
    pub derivative_periodicity_error: f64,
    /// `|int G(t,s) ds - 1/m|` at random `t`.
    pub integral_error: f64,
    pub min: f64,
    pub max: f64,
    pub classification: SignClass,
    /// Grid extrema agree with the classification.
    pub sign_consistent: bool,
}

impl ReflectionKernel {
    /// Evaluates the certificates on an `n x n` grid plus `n_random` random
    /// abscissae (from `seed`) for the normalisation.
    pub fn certify(&self, n: usize, n_random: usize, seed: u64, quad: &QuadConfig) -> Result<ReflectionDiagnostics> {
        use rand::{Rng, SeedableRng};
        let n = n.max(3);
        let tt = self.half_period;
        let grid: Vec<f64> = (0..n).map(|i| -tt + 2.0 * tt * i as f64 / (n - 1) as f64).collect();
        let h = 1e-4;
        let mut d = ReflectionDiagnostics {
            symmetry_error: 0.0,
            jump_error: 0.0,
            ode_residual: 0.0,
            periodicity_error: 0.0,
            derivative_periodicity_error: 0.0,
            integral_error: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            classification: self.sign_classification(),
            sign_consistent: true,
        };
        for &t in &grid {
            for &s in &grid {
                let g = self.value(t, s);
                d.min = d.min.min(g);
                d.max = d.max.max(g);
                d.symmetry_error = d
                    .symmetry_error
                    .max((g - self.value(s, t)).abs())
                    .max((g - self.value(-t, -s)).abs());
                if t.abs() + h <= tt && (t - s).abs() > 2.0 * h && (t + s).abs() > 2.0 * h {
                    let d2 = (self.value(t + h, s) - 2.0 * g + self.value(t - h, s)) / (h * h);
                    d.ode_residual = d.ode_residual.max((d2 + self.m * self.value(-t, s)).abs());
                }
            }
            if t.abs() < tt {
                let jump = self.eval_dt(t, t, Side::Left)? - self.eval_dt(t, t, Side::Right)?;
                d.jump_error = d.jump_error.max((jump - 1.0).abs());
            }
            let s = t;
            if s.abs() < tt {
                d.periodicity_error = d.periodicity_error.max((self.value(tt, s) - self.value(-tt, s)).abs());
                let dp = self.eval_dt(tt, s, Side::Left)? - self.eval_dt(-tt, s, Side::Right)?;
                d.derivative_periodicity_error = d.derivative_periodicity_error.max(dp.abs());
            }
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_random {
            let t = rng.gen_range(-tt..=tt);
            let val = self.integral_over_s(t, quad)?;
            d.integral_error = d.integral_error.max((val - 1.0 / self.m).abs());
        }
        d.sign_consistent = match d.classification {
            SignClass::StrictlyPositive => d.min > 0.0,
            SignClass::StrictlyNegative => d.max < 0.0,
            SignClass::PositiveVanishingAtP => d.min > -1e-9 && d.min < 1e-9,
            SignClass::NegativeVanishingAtP1 => d.max < 1e-9,
            SignClass::ChangesSign => d.min < 0.0 && d.max > 0.0,
        };
        Ok(d)
    }
}

/// Sign of `G_m` on the whole square from the position of `m`.
pub fn classify_sign(m: f64, half_period: f64) -> SignClass {
    let upper = (FRAC_PI_2 / half_period).powi(2);
    let lower = -(2.0 * solve_cbar() / half_period).powi(2);
    let near = |x: f64, y: f64| (x - y).abs() <= RESONANCE_REL_TOL * y.abs();
    if near(m, upper) {
        SignClass::PositiveVanishingAtP
    } else if near(m, lower) {
        SignClass::NegativeVanishingAtP1
    } else if m > 0.0 && m < upper {
        SignClass::StrictlyPositive
    } else if m < 0.0 && m > lower {
        SignClass::StrictlyNegative
    } else {
        SignClass::ChangesSign
    }
}

/// `tan(c) tanh(c) - 1`.
pub fn cbar_residual(c: f64) -> f64 {
    c.tan() * c.tanh() - 1.0
}

/// Smallest positive root of `tan(c) = 1 / tanh(c)`.
pub fn solve_cbar() -> f64 {
    let f = cbar_residual;
    let (mut lo, mut hi) = (0.75, 1.2);
    debug_assert!(f(lo) < 0.0 && f(hi) > 0.0);
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut c = 0.5 * (lo + hi);
    for _ in 0..20 {
        let sec2 = 1.0 / c.cos().powi(2);
        let sech2 = 1.0 / c.cosh().powi(2);
        let df = sec2 * c.tanh() + c.tan() * sech2;
        let step = f(c) / df;
        c -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(m: f64, t: f64) -> ReflectionKernel {
        ReflectionKernel::new(m, t).unwrap()
    }

    #[test]
    fn symmetry_reduce_examples() {
        let c = symmetry_reduce(0.3, 0.7, 1.0).unwrap();
        assert_eq!((c.canonical_t, c.canonical_s), (0.7, 0.3));
        assert_eq!(c.region, TriangleRegion::Transposed);
        let c = symmetry_reduce(-0.7, -0.3, 1.0).unwrap();
        assert_eq!((c.canonical_t, c.canonical_s), (0.7, 0.3));
        assert_eq!(c.region, TriangleRegion::Reflected);
        let c = symmetry_reduce(0.7, 0.3, 1.0).unwrap();
        assert_eq!(c.region, TriangleRegion::LowerTriangle);
        assert_eq!(c.recover(), (0.7, 0.3));
        assert!(symmetry_reduce(1.5, 0.0, 1.0).is_err());
    }

    #[test]
    fn rejects_zero_and_resonant_m() {
        assert!(matches!(
            ReflectionKernel::new(0.0, 1.0),
            Err(Error::InvalidParameter(_))
        ));
        let m = (PI / 1.0f64).powi(2);
        assert!(matches!(
            ReflectionKernel::new(m, 1.0),
            Err(Error::EigenvalueResonance { k: 1, .. })
        ));
        assert!(matches!(
            ReflectionKernel::new(-(2.0 * PI / 0.8f64).powi(2), 0.8),
            Err(Error::EigenvalueResonance { k: 2, .. })
        ));
        assert!(ReflectionKernel::new((PI / 1.0f64).powi(2) * (1.0 + 1e-6), 1.0).is_ok());
    }

    #[test]
    fn vanishes_at_p_on_the_positive_boundary() {
        let t = 0.9;
        let g = kernel((FRAC_PI_2 / t).powi(2), t);
        for (a, b) in [(0.0, 0.0), (t, t), (-t, t), (t, -t), (-t, -t)] {
            assert!(g.eval(a, b).unwrap().abs() < 1e-12, "({a},{b})");
        }
    }

    #[test]
    fn vanishes_at_p1_on_the_negative_boundary() {
        let t = 1.3;
        let g = kernel(-(2.0 * solve_cbar() / t).powi(2), t);
        assert!(g.eval(t / 2.0, -t / 2.0).unwrap().abs() < 1e-12);
        assert!(g.eval(-t / 2.0, t / 2.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn diagonal_jump_is_one() {
        for &(m, t) in &[(1.0, 1.0), (-2.0, 0.8), (0.3, 1.6)] {
            let g = kernel(m, t);
            for i in 0..=40 {
                let x = -t + 2.0 * t * i as f64 / 40.0;
                let jump = g.eval_dt(x, x, Side::Left).unwrap() - g.eval_dt(x, x, Side::Right).unwrap();
                assert!((jump - 1.0).abs() < 1e-10, "m={m} t={x} jump={jump}");
            }
        }
    }

    #[test]
    fn analytic_integral_matches_quadrature_and_one_over_m() {
        let quad = QuadConfig::default();
        for &(m, t) in &[(1.0, 1.0), (-2.0, 0.8), (4.0, 0.5), (0.3, 1.6)] {
            let g = kernel(m, t);
            for &x in &[-t, -0.3 * t, 0.0, 0.37 * t, t] {
                let q = g.integral_over_s(x, &quad).unwrap();
                let e = g.integral_s(x, -t, t);
                assert!((q - 1.0 / m).abs() < 1e-9, "quad {q} vs {}", 1.0 / m);
                assert!((e - 1.0 / m).abs() < 1e-12, "exact {e} vs {}", 1.0 / m);
            }
            let brk = BreakpointSet::new([0.2, -0.2]);
            let part = integrate(|s| g.value(0.2, s), -0.5 * t, 0.9 * t, &brk, &quad).unwrap();
            assert!((part - g.integral_s(0.2, -0.5 * t, 0.9 * t)).abs() < 1e-11);
        }
    }

    #[test]
    fn cbar_root() {
        let c = solve_cbar();
        assert!((c - 0.937552).abs() < 1e-6);
        assert!(cbar_residual(c).abs() < 1e-10);
        assert!(cbar_residual(-c).abs() < 1e-10);
    }

    #[test]
    fn sign_classes() {
        let t = 1.1;
        let up = (FRAC_PI_2 / t).powi(2);
        let low = -(2.0 * solve_cbar() / t).powi(2);
        assert_eq!(classify_sign(0.5 * up, t), SignClass::StrictlyPositive);
        assert_eq!(classify_sign(up, t), SignClass::PositiveVanishingAtP);
        assert_eq!(classify_sign(0.5 * low, t), SignClass::StrictlyNegative);
        assert_eq!(classify_sign(low, t), SignClass::NegativeVanishingAtP1);
        assert_eq!(classify_sign(2.0 * up, t), SignClass::ChangesSign);
        assert_eq!(classify_sign(1.5 * low, t), SignClass::ChangesSign);
    }

    #[test]
    fn certificate_passes() {
        for &(m, t) in &[(1.0, 1.0), (-2.0, 0.8), (0.5, 1.6), (5.0, 0.5)] {
            let d = kernel(m, t).certify(41, 10, 7, &QuadConfig::default()).unwrap();
            assert!(d.symmetry_error < 1e-12, "{d:?}");
            assert!(d.jump_error < 1e-10, "{d:?}");
            assert!(d.ode_residual < 1e-4, "{d:?}");
            assert!(d.periodicity_error < 1e-12 && d.derivative_periodicity_error < 1e-10, "{d:?}");
            assert!(d.integral_error < 1e-9, "{d:?}");
            assert!(d.sign_consistent, "{d:?}");
        }
    }
}
