//! Green's function `H_{m,M}` of
//! `v''(t) + m v(-t) + M v([t]) = sigma(t)` with periodic conditions.
//!
//! For `m != 0` the piecewise constant term is moved to the right-hand side
//! and resolved through the reflection kernel `G_m`: with
//! `b_k(t) = int_{J_k} G_m(t, r) dr` over the preimage `J_k` of label `k`,
//! the node values solve `(I + M a) c = (int G_m(l, s) sigma(s) ds)_l` where
//! `a_{lk} = b_k(l)`, giving
//! `H(t,s) = G_m(t,s) - M sum_{k,j} b_k(t) (I + M a)^{-1}_{kj} G_m(j,s)`.
//!
//! For `m = 0` the problem is integrated directly: on every interval of the
//! partition `v` is a quadratic, so the impulse response is affine in a
//! small set of unknowns.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{floor_trunc, integrate, BreakpointSet, QuadConfig};
use crate::reflection::ReflectionKernel;

const EMPTY_EPS: f64 = 1e-14;
const ZERO_M: f64 = 1e-12;
/// Reciprocal condition number below which a system counts as singular.
const SINGULAR_RCOND: f64 = 1e-13;

/// The intervals on which `[t]` is constant, labelled by the value of `[t]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalPartition {
    pub half_period: f64,
    pub labels: Vec<i64>,
    pub intervals: Vec<(f64, f64)>,
}

impl IntervalPartition {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Position of `[t]` in `labels`, if that label owns a nonempty interval.
    pub fn index_of_label(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.index_of_label(floor_trunc(t))
    }

    /// Integer points and both ends of `[-T, T]`.
    pub fn breakpoints(&self) -> BreakpointSet {
        BreakpointSet::integers_in(self.half_period)
    }
}

pub fn build_partition(half_period: f64) -> Result<IntervalPartition> {
    if !(half_period > 0.0) || !half_period.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "half period T = {half_period} must be positive"
        )));
    }
    let n = floor_trunc(half_period);
    let mut labels = Vec::new();
    let mut intervals = Vec::new();
    for k in -n..=n {
        let kf = k as f64;
        let (lo, hi) = match k {
            0 => ((-1.0f64).max(-half_period), 1.0f64.min(half_period)),
            k if k > 0 => (kf, (kf + 1.0).min(half_period)),
            _ => ((kf - 1.0).max(-half_period), kf),
        };
        if hi - lo > EMPTY_EPS {
            labels.push(k);
            intervals.push((lo, hi));
        }
    }
    Ok(IntervalPartition {
        half_period,
        labels,
        intervals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelMode {
    MatrixConstruction,
    ClosedFormTle1,
    DirectM0,
}

/// How the inverse of `A` pairs with the interval integrals `b_k(t)` and the
/// node rows `G_m(j, s)` in the double sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Orientation {
    /// `b_k(t) A^{-1}_{kj} G_m(j, s)`.
    IntervalRows,
    /// `b_k(t) A^{-1}_{jk} G_m(j, s)`.
    NodeRows,
}

#[derive(Debug, Clone)]
struct MatrixParts {
    g: ReflectionKernel,
    a: DMatrix<f64>,
    /// `(I + M a)^{-1}` already arranged so that `H = G - M b^T inv g_s`.
    inv: DMatrix<f64>,
    orientation: Orientation,
}

#[derive(Debug, Clone)]
struct DirectParts {
    system: DMatrix<f64>,
    inv: DMatrix<f64>,
}

#[derive(Debug, Clone)]
enum Inner {
    Matrix(MatrixParts),
    Closed(ReflectionKernel),
    Direct(DirectParts),
}

/// `H_{m,M}` on `[-T, T]^2`; immutable once built.
#[derive(Debug, Clone)]
pub struct CompositeKernel {
    m: f64,
    big_m: f64,
    half_period: f64,
    partition: IntervalPartition,
    inner: Inner,
}

/// Finite-difference certificates of the Green's function properties.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EvalDiagnostics {
    /// `max |H_tt(t,s) + m H(-t,s) + M H([t],s)|` away from `s`, `-s` and `D`.
    pub residual_ode: f64,
    /// `max |H_ss(t,s) + m H(t,-s)|` for `s` outside `D_t`.
    pub residual_ode_s: f64,
    /// `max |dH/dt(s+,s) - dH/dt(s-,s) - 1|`.
    pub jump_error: f64,
    /// `max |H(T,s) - H(-T,s)|` and `|H(t,T) - H(t,-T)|`.
    pub periodicity_error: f64,
    /// Same for the first derivatives.
    pub derivative_periodicity_error: f64,
    /// `max |H(t,s) - H(-t,-s)|`.
    pub symmetry_error: f64,
}

/// Cacheable description of a built kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelMetadata {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    #[serde(rename = "T")]
    pub half_period: f64,
    pub labels: Vec<i64>,
    #[serde(rename = "A")]
    pub matrix: Vec<Vec<f64>>,
    pub condition_number: f64,
    pub mode: KernelMode,
}

fn reciprocal_condition(mat: &DMatrix<f64>) -> f64 {
    let sv = mat.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

fn invert(mat: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let rcond = reciprocal_condition(mat);
    if !(rcond > SINGULAR_RCOND) {
        return Err(Error::NonUniqueSolution(format!(
            "{what} is singular (reciprocal condition {rcond:e})"
        )));
    }
    mat.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| Error::NonUniqueSolution(format!("{what} is singular")))
}

fn check_common(m: f64, big_m: f64, half_period: f64) -> Result<()> {
    if !(half_period > 0.0) || !half_period.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "half period T = {half_period} must be positive"
        )));
    }
    if !m.is_finite() || !big_m.is_finite() {
        return Err(Error::InvalidParameter("m and M must be finite".into()));
    }
    if m + big_m == 0.0 {
        return Err(Error::NonUniqueSolution(format!(
            "m + M = 0 lies on the eigenvalue line M = -m (m = {m})"
        )));
    }
    Ok(())
}

/// `int_{lo}^{min(hi, t)} (t - r) dr`.
fn ramp_weight(t: f64, lo: f64, hi: f64) -> f64 {
    if t <= lo {
        return 0.0;
    }
    let top = hi.min(t);
    0.5 * ((t - lo).powi(2) - (t - top).powi(2))
}

/// `|[lo, hi] ∩ [-inf, t]|`.
fn step_weight(t: f64, lo: f64, hi: f64) -> f64 {
    (hi.min(t) - lo).max(0.0)
}

impl CompositeKernel {
    /// Matrix construction for `m != 0`. Both pairings of the inverse with the
    /// interval integrals are assembled and the one whose finite-difference
    /// ODE residual is smaller on a fixed probe set is kept.
    pub fn build(m: f64, big_m: f64, half_period: f64, cfg: &QuadConfig) -> Result<Self> {
        cfg.validate()?;
        check_common(m, big_m, half_period)?;
        let g = ReflectionKernel::new(m, half_period)?;
        let partition = build_partition(half_period)?;
        let n = partition.len();
        let a = DMatrix::from_fn(n, n, |l, k| {
            let (lo, hi) = partition.intervals[k];
            g.integral_s(partition.labels[l] as f64, lo, hi)
        });
        let system = DMatrix::identity(n, n) + &a * big_m;
        let inv = invert(&system, "matrix A")?;
        let make = |inv: DMatrix<f64>, orientation| Self {
            m,
            big_m,
            half_period,
            partition: partition.clone(),
            inner: Inner::Matrix(MatrixParts {
                g: g.clone(),
                a: a.clone(),
                inv,
                orientation,
            }),
        };
        let rows = make(inv.clone(), Orientation::IntervalRows);
        if n == 1 || big_m == 0.0 {
            return Ok(rows);
        }
        let cols = make(inv.transpose(), Orientation::NodeRows);
        let probe_rows = rows.probe_residual();
        let probe_cols = cols.probe_residual();
        Ok(if probe_rows <= probe_cols { rows } else { cols })
    }

    /// Closed form `G_m(t,s) - M/(m+M) G_m(0,s)`, valid for `T <= 1`.
    pub fn closed_form_tle1(m: f64, big_m: f64, half_period: f64) -> Result<Self> {
        check_common(m, big_m, half_period)?;
        if half_period > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "closed form needs T <= 1, got {half_period}"
            )));
        }
        let g = ReflectionKernel::new(m, half_period)?;
        Ok(Self {
            m,
            big_m,
            half_period,
            partition: build_partition(half_period)?,
            inner: Inner::Closed(g),
        })
    }

    /// Direct piecewise-quadratic construction for `m = 0`.
    ///
    /// Unknowns `(v(-T), v'(-T), v(k)...)`; the impulse response is
    /// `v(-T) + v'(-T)(t+T) - M sum_k v(k) W_k(t) + (t-s)_+` with
    /// `W_k(t) = int_{J_k ∩ [-T,t]} (t-r) dr`.
    pub fn build_m0(big_m: f64, half_period: f64) -> Result<Self> {
        check_common(0.0, big_m, half_period)?;
        let partition = build_partition(half_period)?;
        let n = partition.len();
        let tt = half_period;
        let mut system = DMatrix::zeros(n + 2, n + 2);
        // v(T) = v(-T)
        system[(0, 1)] = 2.0 * tt;
        // v'(T) = v'(-T)
        for (k, &(lo, hi)) in partition.intervals.iter().enumerate() {
            system[(0, 2 + k)] = -big_m * ramp_weight(tt, lo, hi);
            system[(1, 2 + k)] = -big_m * step_weight(tt, lo, hi);
        }
        // v(l) = c_l
        for (l, &label) in partition.labels.iter().enumerate() {
            let x = label as f64;
            system[(2 + l, 0)] = 1.0;
            system[(2 + l, 1)] = x + tt;
            for (k, &(lo, hi)) in partition.intervals.iter().enumerate() {
                system[(2 + l, 2 + k)] = -big_m * ramp_weight(x, lo, hi);
            }
            system[(2 + l, 2 + l)] -= 1.0;
        }
        let inv = invert(&system, "direct m = 0 system")?;
        Ok(Self {
            m: 0.0,
            big_m,
            half_period,
            partition,
            inner: Inner::Direct(DirectParts { system, inv }),
        })
    }

    /// Routes `m = 0` to [`Self::build_m0`] and everything else to [`Self::build`].
    /// `|m| T^2` below round-off counts as zero, where `G_m` is meaningless.
    pub fn new(m: f64, big_m: f64, half_period: f64, cfg: &QuadConfig) -> Result<Self> {
        if (m * half_period * half_period).abs() < ZERO_M {
            Self::build_m0(big_m, half_period)
        } else {
            Self::build(m, big_m, half_period, cfg)
        }
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn big_m(&self) -> f64 {
        self.big_m
    }

    pub fn half_period(&self) -> f64 {
        self.half_period
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.partition
    }

    pub fn mode(&self) -> KernelMode {
        match self.inner {
            Inner::Matrix(_) => KernelMode::MatrixConstruction,
            Inner::Closed(_) => KernelMode::ClosedFormTle1,
            Inner::Direct(_) => KernelMode::DirectM0,
        }
    }

    pub fn orientation(&self) -> Option<Orientation> {
        match &self.inner {
            Inner::Matrix(p) => Some(p.orientation),
            _ => None,
        }
    }

    /// The reflection kernel underneath, when `m != 0`.
    pub fn reflection(&self) -> Option<&ReflectionKernel> {
        match &self.inner {
            Inner::Matrix(p) => Some(&p.g),
            Inner::Closed(g) => Some(g),
            Inner::Direct(_) => None,
        }
    }

    /// Matrix `A` of the construction (`1x1` for the closed form, the full
    /// direct system for `m = 0`).
    pub fn matrix(&self) -> DMatrix<f64> {
        match &self.inner {
            Inner::Matrix(p) => DMatrix::identity(p.a.nrows(), p.a.ncols()) + &p.a * self.big_m,
            Inner::Closed(_) => DMatrix::from_element(1, 1, (self.m + self.big_m) / self.m),
            Inner::Direct(p) => p.system.clone(),
        }
    }

    pub fn metadata(&self) -> KernelMetadata {
        let a = self.matrix();
        let rcond = reciprocal_condition(&a);
        KernelMetadata {
            m: self.m,
            big_m: self.big_m,
            half_period: self.half_period,
            labels: self.partition.labels.clone(),
            matrix: (0..a.nrows())
                .map(|i| (0..a.ncols()).map(|j| a[(i, j)]).collect())
                .collect(),
            condition_number: 1.0 / rcond,
            mode: self.mode(),
        }
    }

    fn check(&self, t: f64, s: f64) -> Result<()> {
        let lim = self.half_period * (1.0 + 1e-12);
        if !(t.abs() <= lim && s.abs() <= lim) {
            return Err(Error::OutOfDomain {
                t,
                s,
                period_half: self.half_period,
            });
        }
        Ok(())
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64> {
        self.check(t, s)?;
        Ok(self.value(t, s))
    }

    /// `b_k(t)` for every partition interval.
    pub(crate) fn interval_integrals(&self, g: &ReflectionKernel, t: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.partition.len(),
            self.partition
                .intervals
                .iter()
                .map(|&(lo, hi)| g.integral_s(t, lo, hi)),
        )
    }

    fn node_row(&self, g: &ReflectionKernel, s: f64) -> DVector<f64> {
        DVector::from_iterator(
            self.partition.len(),
            self.partition.labels.iter().map(|&j| g.value(j as f64, s)),
        )
    }

    fn direct_unknowns(&self, p: &DirectParts, s: f64) -> DVector<f64> {
        let n = self.partition.len();
        let mut rhs = DVector::zeros(n + 2);
        rhs[0] = -(self.half_period - s);
        rhs[1] = -1.0;
        for (l, &label) in self.partition.labels.iter().enumerate() {
            rhs[2 + l] = -(label as f64 - s).max(0.0);
        }
        &p.inv * rhs
    }

    fn direct_value(&self, x: &DVector<f64>, t: f64, s: f64) -> f64 {
        let mut v = x[0] + x[1] * (t + self.half_period) + (t - s).max(0.0);
        for (k, &(lo, hi)) in self.partition.intervals.iter().enumerate() {
            v -= self.big_m * x[2 + k] * ramp_weight(t, lo, hi);
        }
        v
    }

    pub(crate) fn value(&self, t: f64, s: f64) -> f64 {
        match &self.inner {
            Inner::Matrix(p) => {
                let b = self.interval_integrals(&p.g, t);
                let gs = self.node_row(&p.g, s);
                p.g.value(t, s) - self.big_m * (b.transpose() * &p.inv * gs)[(0, 0)]
            }
            Inner::Closed(g) => {
                g.value(t, s) - self.big_m / (self.m + self.big_m) * g.value(0.0, s)
            }
            Inner::Direct(p) => {
                let x = self.direct_unknowns(p, s);
                self.direct_value(&x, t, s)
            }
        }
    }

    /// `H` on the tensor grid `ts x ss`, row-major in `t`.
    pub fn eval_grid(&self, ts: &[f64], ss: &[f64]) -> Result<Vec<f64>> {
        for &t in ts {
            self.check(t, 0.0)?;
        }
        for &s in ss {
            self.check(0.0, s)?;
        }
        let mut out = Vec::with_capacity(ts.len() * ss.len());
        match &self.inner {
            Inner::Matrix(p) => {
                let cols: Vec<DVector<f64>> = ss
                    .iter()
                    .map(|&s| &p.inv * self.node_row(&p.g, s))
                    .collect();
                for &t in ts {
                    let b = self.interval_integrals(&p.g, t);
                    for (&s, col) in ss.iter().zip(&cols) {
                        out.push(p.g.value(t, s) - self.big_m * b.dot(col));
                    }
                }
            }
            Inner::Closed(_) => {
                for &t in ts {
                    out.extend(ss.iter().map(|&s| self.value(t, s)));
                }
            }
            Inner::Direct(p) => {
                let xs: Vec<DVector<f64>> =
                    ss.iter().map(|&s| self.direct_unknowns(p, s)).collect();
                for &t in ts {
                    for (&s, x) in ss.iter().zip(&xs) {
                        out.push(self.direct_value(x, t, s));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `H([t], s)`: the kernel evaluated at the label of `t`.
    pub(crate) fn value_at_label(&self, t: f64, s: f64) -> f64 {
        self.value(floor_trunc(t) as f64, s)
    }

    /// `int_{-T}^{T} H(t, s) ds` by breakpoint-aware quadrature.
    pub fn integral_over_s(&self, t: f64, cfg: &QuadConfig) -> Result<f64> {
        self.check(t, 0.0)?;
        let brk = self.partition.breakpoints().with([t, -t]).with(
            self.partition
                .labels
                .iter()
                .flat_map(|&j| [j as f64, -(j as f64)]),
        );
        integrate(
            |s| self.value(t, s),
            -self.half_period,
            self.half_period,
            &brk,
            cfg,
        )
    }

    /// Points at which `t -> H(t, s)` is not `C^2`.
    fn t_breaks(&self, s: f64) -> Vec<f64> {
        let mut b: Vec<f64> = self.partition.labels.iter().map(|&j| j as f64).collect();
        b.extend(self.partition.intervals.iter().flat_map(|&(lo, hi)| [lo, hi]));
        b.push(s);
        b.push(-s);
        b
    }

    fn residual_t(&self, t: f64, s: f64, h: f64) -> f64 {
        let d2 = (self.value(t + h, s) - 2.0 * self.value(t, s) + self.value(t - h, s)) / (h * h);
        (d2 + self.m * self.value(-t, s) + self.big_m * self.value_at_label(t, s)).abs()
    }

    fn probe_residual(&self) -> f64 {
        let tt = self.half_period;
        let probes = [
            (0.37, -0.61),
            (-0.83, 0.22),
            (0.55, 0.13),
            (-0.29, -0.71),
            (0.91, 0.47),
        ];
        let h = 1e-4;
        probes
            .iter()
            .map(|&(a, b)| {
                let s = b * tt;
                let t = nudge_away(a * tt, &self.t_breaks(s), 4.0 * h, tt);
                self.residual_t(t, s, h)
            })
            .fold(0.0, f64::max)
    }

    /// Finite-difference certification on an `n x n` interior sample.
    pub fn certify(&self, n: usize) -> EvalDiagnostics {
        let tt = self.half_period;
        let h = 1e-4;
        let n = n.max(3);
        let pts: Vec<f64> = (0..n)
            .map(|i| -tt + 2.0 * tt * (i as f64 + 0.5) / n as f64)
            .collect();
        let mut d = EvalDiagnostics::default();
        let first = |f: &dyn Fn(f64) -> f64, x: f64, dir: f64| {
            // one-sided fourth-order first derivative
            (-25.0 * f(x) + 48.0 * f(x + dir * h) - 36.0 * f(x + 2.0 * dir * h)
                + 16.0 * f(x + 3.0 * dir * h)
                - 3.0 * f(x + 4.0 * dir * h))
                / (12.0 * h)
                * dir
        };
        for &s in &pts {
            for &t0 in &pts {
                let t = nudge_away(t0, &self.t_breaks(s), 4.0 * h, tt);
                d.residual_ode = d.residual_ode.max(self.residual_t(t, s, h));
                let sx = nudge_away(s, &self.t_breaks(t), 4.0 * h, tt);
                let d2s = (self.value(t, sx + h) - 2.0 * self.value(t, sx) + self.value(t, sx - h))
                    / (h * h);
                d.residual_ode_s = d.residual_ode_s.max((d2s + self.m * self.value(t, -sx)).abs());
                d.symmetry_error = d
                    .symmetry_error
                    .max((self.value(t0, s) - self.value(-t0, -s)).abs());
            }
            // jump across the diagonal, s kept off D
            let sj = nudge_away(s, &self.t_breaks(f64::NAN), 8.0 * h, tt);
            let fv = |x: f64| self.value(x, sj);
            let right = first(&fv, sj, 1.0);
            let left = first(&fv, sj, -1.0);
            d.jump_error = d.jump_error.max((right - left - 1.0).abs());
            // periodicity in t for fixed s, and in s for fixed t = s
            d.periodicity_error = d
                .periodicity_error
                .max((self.value(tt, s) - self.value(-tt, s)).abs())
                .max((self.value(s, tt) - self.value(s, -tt)).abs());
            let ft = |x: f64| self.value(x, s);
            let fs = |x: f64| self.value(s, x);
            d.derivative_periodicity_error = d
                .derivative_periodicity_error
                .max((first(&ft, tt, -1.0) - first(&ft, -tt, 1.0)).abs())
                .max((first(&fs, tt, -1.0) - first(&fs, -tt, 1.0)).abs());
        }
        d
    }
}

/// Move `x` so that `[x - gap, x + gap]` avoids every point of `breaks`,
/// staying inside `(-T, T)`.
pub(crate) fn nudge_away(x: f64, breaks: &[f64], gap: f64, half_period: f64) -> f64 {
    let ok = |y: f64| {
        y.abs() < half_period - gap && breaks.iter().all(|&b| !b.is_finite() || (y - b).abs() > gap)
    };
    if ok(x) {
        return x;
    }
    for i in 1..10_000 {
        let step = gap * 1.37 * i as f64;
        for y in [x + step, x - step] {
            if ok(y) {
                return y;
            }
        }
    }
    x
}

/// Closed-form `H` for `T in (0, 1]`.
pub fn eval_closed_tle1(m: f64, big_m: f64, half_period: f64, t: f64, s: f64) -> Result<f64> {
    CompositeKernel::closed_form_tle1(m, big_m, half_period)?.eval(t, s)
}

/// `max |H_{M0} - H_{M1} - (M1 - M0) int H_{M1}(t,r) H_{M0}([r],s) dr|` over
/// an `n x n` sample grid.
pub fn relation_check(
    m: f64,
    m0: f64,
    m1: f64,
    half_period: f64,
    n: usize,
    cfg: &QuadConfig,
) -> Result<f64> {
    let k0 = CompositeKernel::new(m, m0, half_period, cfg)?;
    if m0 == m1 {
        return Ok(0.0);
    }
    let k1 = CompositeKernel::new(m, m1, half_period, cfg)?;
    let n = n.max(2);
    let pts: Vec<f64> = (0..n)
        .map(|i| -half_period + 2.0 * half_period * i as f64 / (n - 1) as f64)
        .collect();
    let base = k0.partition.breakpoints();
    let mut worst: f64 = 0.0;
    for &t in &pts {
        let brk = base.clone().with([t, -t]);
        for &s in &pts {
            let integral = integrate(
                |r| k1.value(t, r) * k0.value_at_label(r, s),
                -half_period,
                half_period,
                &brk,
                cfg,
            )?;
            let defect = k0.value(t, s) - k1.value(t, s) - (m1 - m0) * integral;
            worst = worst.max(defect.abs());
        }
    }
    Ok(worst)
}
