//! Constant-sign regions of `H_{m,M}` in the `(m, M)` plane.
//!
//! The numerical boundary is found by bisection in `M` on the predicate
//! "`H_{m,M}` has strict sign", where the extrema of `H` come from a tensor
//! grid refined by line searches and a compass search. For `T <= 1` the
//! candidate-point closed forms are available as well.

use std::f64::consts::PI;
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::composite::CompositeKernel;
use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignKind {
    Positive,
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryMethod {
    Bisection,
    ClosedForm,
    CandidatePoints,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExtremumKind {
    MinOfPositive,
    MaxOfNegative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionConfig {
    pub grid_n: usize,
    /// Bisection tolerance on `M`.
    pub tol: f64,
    /// Final step of the extremum polish.
    pub polish_tol: f64,
    pub quad: QuadConfig,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            grid_n: 101,
            tol: 1e-4,
            polish_tol: 1e-6,
            quad: QuadConfig::default(),
        }
    }
}

impl RegionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 41 {
            return Err(Error::InvalidParameter(format!(
                "grid_n = {} must be at least 41",
                self.grid_n
            )));
        }
        if !(self.tol > 0.0) || !(self.polish_tol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        self.quad.validate()
    }
}

/// Boundary values of the two constant-sign regions at one `m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionSample {
    pub m: f64,
    /// Largest `M` with `H > 0`.
    #[serde(rename = "M_pos_upper")]
    pub m_pos_upper: Option<f64>,
    /// Smallest `M` with `H < 0`.
    #[serde(rename = "M_neg_lower")]
    pub m_neg_lower: Option<f64>,
    pub method: BoundaryMethod,
    pub grid_n: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub errors: Vec<String>,
}

impl RegionSample {
    /// `m + M > 0` on the positive boundary and `m + M < 0` on the negative one.
    pub fn necessary_condition_holds(&self) -> bool {
        self.m_pos_upper.map_or(true, |b| self.m + b > 0.0)
            && self.m_neg_lower.map_or(true, |b| self.m + b < 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExtremumRecord {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub location: (f64, f64),
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridExtrema {
    pub min: f64,
    pub argmin: (f64, f64),
    pub max: f64,
    pub argmax: (f64, f64),
}

impl GridExtrema {
    pub fn has_sign(&self, sign: SignKind) -> bool {
        match sign {
            SignKind::Positive => self.min > 0.0,
            SignKind::Negative => self.max < 0.0,
        }
    }

    fn offer(&mut self, p: (f64, f64), v: f64) {
        if v < self.min {
            self.min = v;
            self.argmin = p;
        }
        if v > self.max {
            self.max = v;
            self.argmax = p;
        }
    }
}

/// Boundary found by bisection together with the extremum that certifies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Boundary {
    pub value: f64,
    /// `M` on the constant-sign side of the boundary.
    pub inside: f64,
    /// `M` on the other side.
    pub outside: f64,
    /// Location of the extremum that reaches zero at the boundary.
    pub location: (f64, f64),
    pub iterations: usize,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn integers_in(half_period: f64) -> Vec<f64> {
    let k = half_period.floor() as i64;
    (-k..=k).map(|j| j as f64).collect()
}

/// Points where the extremum of a positive (`MinOfPositive`) or negative
/// (`MaxOfNegative`) `H_{m,M}` can sit.
///
/// For `m >= 0` these are the diagonal, plus the lines `s = k` unless
/// `M >= 0` and the minimum of a positive kernel is sought. For `m < 0` the
/// whole `n x n` grid is returned together with the four observed points.
pub fn extremum_candidates(
    m: f64,
    big_m: f64,
    half_period: f64,
    kind: ExtremumKind,
    n: usize,
) -> Vec<(f64, f64)> {
    let tt = half_period;
    let xs = linspace(-tt, tt, n.max(2));
    let mut out: Vec<(f64, f64)> = Vec::new();
    if m >= 0.0 {
        out.extend(xs.iter().map(|&x| (x, x)));
        let diagonal_only = big_m >= 0.0 && kind == ExtremumKind::MinOfPositive;
        if !diagonal_only {
            for k in integers_in(tt) {
                out.extend(xs.iter().map(|&x| (x, k)));
            }
        }
        if kind == ExtremumKind::MaxOfNegative {
            out.push((tt, 0.0));
        }
    } else {
        out.extend([
            (0.0, 0.0),
            (0.75 * tt, 0.75 * tt),
            (tt, 0.0),
            (0.5 * tt, -0.5 * tt),
        ]);
        for &t in &xs {
            out.extend(xs.iter().map(|&s| (t, s)));
        }
    }
    out
}

/// Golden-section minimisation of `f` on `[a, b]`.
fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Minimise `f` along `x -> line(x)` for `x in [-T, T]`: sample, then
/// golden-section around the best sample.
fn polish_line<F, L>(f: &F, line: L, half_period: f64, n: usize, tol: f64) -> ((f64, f64), f64)
where
    F: Fn(f64, f64) -> f64,
    L: Fn(f64) -> (f64, f64),
{
    let xs = linspace(-half_period, half_period, n);
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let (t, s) = line(x);
        let v = f(t, s);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    let lo = xs[best_i.saturating_sub(1)];
    let hi = xs[(best_i + 1).min(n - 1)];
    let (x, v) = golden_min(
        |x| {
            let (t, s) = line(x);
            f(t, s)
        },
        lo,
        hi,
        tol,
    );
    if v < best_v {
        (line(x), v)
    } else {
        (line(xs[best_i]), best_v)
    }
}

/// Pattern search in the eight compass directions, halving the step.
fn compass_min<F: Fn(f64, f64) -> f64>(
    f: &F,
    start: (f64, f64),
    value: f64,
    step: f64,
    tol: f64,
    half_period: f64,
) -> ((f64, f64), f64) {
    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let clamp = |x: f64| x.clamp(-half_period, half_period);
    let (mut p, mut v) = (start, value);
    let mut h = step;
    let mut budget = 2000;
    while h > tol && budget > 0 {
        let mut moved = false;
        for (dt, ds) in DIRS {
            let q = (clamp(p.0 + h * dt), clamp(p.1 + h * ds));
            let w = f(q.0, q.1);
            budget -= 1;
            if w < v {
                p = q;
                v = w;
                moved = true;
                break;
            }
        }
        if !moved {
            h *= 0.5;
        }
    }
    (p, v)
}

/// Extrema of `H` on the `grid_n x grid_n` tensor grid, refined along the
/// diagonal, the anti-diagonal and the lines `s = k`, then by a compass search
/// from the best points found.
pub fn min_max_h(k: &CompositeKernel, grid_n: usize) -> Result<GridExtrema> {
    min_max_h_tol(k, grid_n, 1e-6)
}

pub fn min_max_h_tol(k: &CompositeKernel, grid_n: usize, polish_tol: f64) -> Result<GridExtrema> {
    if grid_n < 41 {
        return Err(Error::InvalidParameter(format!(
            "grid_n = {grid_n} must be at least 41"
        )));
    }
    let tt = k.half_period();
    let xs = linspace(-tt, tt, grid_n);
    let vals = k.eval_grid(&xs, &xs)?;
    let mut ext = GridExtrema {
        min: f64::INFINITY,
        argmin: (0.0, 0.0),
        max: f64::NEG_INFINITY,
        argmax: (0.0, 0.0),
    };
    for (i, &t) in xs.iter().enumerate() {
        for (j, &s) in xs.iter().enumerate() {
            ext.offer((t, s), vals[i * grid_n + j]);
        }
    }
    let h = |t: f64, s: f64| k.value(t, s);
    for p in [
        (0.0, 0.0),
        (tt, tt),
        (0.75 * tt, 0.75 * tt),
        (tt, 0.0),
        (0.5 * tt, -0.5 * tt),
        (-0.5 * tt, 0.5 * tt),
    ] {
        ext.offer(p, h(p.0, p.1));
    }

    let neg = |t: f64, s: f64| -k.value(t, s);
    let mut lines: Vec<Box<dyn Fn(f64) -> (f64, f64)>> =
        vec![Box::new(|x| (x, x)), Box::new(|x| (x, -x))];
    for j in integers_in(tt) {
        lines.push(Box::new(move |x| (x, j)));
    }
    for line in &lines {
        let (p, v) = polish_line(&h, line, tt, grid_n, polish_tol);
        ext.offer(p, v);
        let (p, v) = polish_line(&neg, line, tt, grid_n, polish_tol);
        ext.offer(p, -v);
    }

    let step = 2.0 * tt / (grid_n - 1) as f64;
    let (p, v) = compass_min(&h, ext.argmin, ext.min, step, polish_tol, tt);
    ext.offer(p, v);
    let (p, v) = compass_min(&neg, ext.argmax, -ext.max, step, polish_tol, tt);
    ext.offer(p, -v);
    Ok(ext)
}

/// Default bisection bracket: the boundary leaves the eigenvalue line `M = -m`.
pub fn default_bracket(m: f64, half_period: f64, sign: SignKind) -> (f64, f64) {
    let w = 50.0 / (half_period * half_period);
    match sign {
        SignKind::Positive => (-m + 1e-6, -m + w),
        SignKind::Negative => (-m - w, -m - 1e-6),
    }
}

/// Evaluate the sign predicate; a kernel that cannot be built never has
/// constant sign.
fn sign_probe(
    m: f64,
    big_m: f64,
    half_period: f64,
    sign: SignKind,
    cfg: &RegionConfig,
) -> Option<GridExtrema> {
    let k = CompositeKernel::new(m, big_m, half_period, &cfg.quad).ok()?;
    let e = min_max_h_tol(&k, cfg.grid_n, cfg.polish_tol).ok()?;
    e.has_sign(sign).then_some(e)
}

fn bisect_predicate<P>(bracket: (f64, f64), tol: f64, mut pred: P) -> Result<(Boundary, Option<GridExtrema>)>
where
    P: FnMut(f64) -> Option<GridExtrema>,
{
    let (lo, hi) = bracket;
    let a = pred(lo);
    let b = pred(hi);
    if a.is_some() == b.is_some() {
        return Err(Error::Bracket { lo, hi });
    }
    let (mut inside, mut outside, mut inside_ext) = if a.is_some() { (lo, hi, a) } else { (hi, lo, b) };
    let mut iterations = 0;
    while (outside - inside).abs() > tol {
        let mid = 0.5 * (inside + outside);
        match pred(mid) {
            Some(e) => {
                inside = mid;
                inside_ext = Some(e);
            }
            None => outside = mid,
        }
        iterations += 1;
    }
    Ok((
        Boundary {
            value: 0.5 * (inside + outside),
            inside,
            outside,
            location: (0.0, 0.0),
            iterations,
        },
        inside_ext,
    ))
}

/// Boundary `M*` of the region where `H_{m,M}` has the requested sign,
/// with the location of the extremum that vanishes there.
pub fn critical_m_bisect_detailed(
    m: f64,
    half_period: f64,
    sign: SignKind,
    bracket: (f64, f64),
    cfg: &RegionConfig,
) -> Result<Boundary> {
    cfg.validate()?;
    let (mut b, ext) = bisect_predicate(bracket, cfg.tol, |big_m| {
        sign_probe(m, big_m, half_period, sign, cfg)
    })?;
    if let Some(e) = ext {
        b.location = match sign {
            SignKind::Positive => e.argmin,
            SignKind::Negative => e.argmax,
        };
    }
    Ok(b)
}

pub fn critical_m_bisect(
    m: f64,
    half_period: f64,
    sign: SignKind,
    bracket: (f64, f64),
    cfg: &RegionConfig,
) -> Result<f64> {
    critical_m_bisect_detailed(m, half_period, sign, bracket, cfg).map(|b| b.value)
}

/// Boundary obtained by only watching the sign of `H` at the observed
/// extremum locations: `(T,T)`, `(0,0)`, `(3T/4,3T/4)` for the positive
/// region, `(T,0)`, `(T/2,-T/2)` for the negative one.
pub fn candidate_point_boundary(
    m: f64,
    half_period: f64,
    sign: SignKind,
    cfg: &RegionConfig,
) -> Result<f64> {
    let tt = half_period;
    let pts: &[(f64, f64)] = match sign {
        SignKind::Positive => &[(tt, tt), (0.0, 0.0), (0.75 * tt, 0.75 * tt)],
        SignKind::Negative => &[(tt, 0.0), (0.5 * tt, -0.5 * tt)],
    };
    let probe = |big_m: f64| -> Option<GridExtrema> {
        let k = CompositeKernel::new(m, big_m, tt, &cfg.quad).ok()?;
        let mut e = GridExtrema {
            min: f64::INFINITY,
            argmin: (0.0, 0.0),
            max: f64::NEG_INFINITY,
            argmax: (0.0, 0.0),
        };
        for &p in pts {
            e.offer(p, k.value(p.0, p.1));
        }
        e.has_sign(sign).then_some(e)
    };
    // The point predicate can switch back further out, so march from the
    // eigenvalue line to its first switch before bisecting.
    let (lo, hi) = default_bracket(m, tt, sign);
    let (inner, outer) = match sign {
        SignKind::Positive => (lo, hi),
        SignKind::Negative => (hi, lo),
    };
    if probe(inner).is_none() {
        return Err(Error::NotFound(format!("no sign at the candidate points next to M = -m for m = {m}")));
    }
    let mut prev = inner;
    for i in 1..=CANDIDATE_STEPS {
        let x = inner + (outer - inner) * i as f64 / CANDIDATE_STEPS as f64;
        if probe(x).is_none() {
            return bisect_predicate((prev, x), cfg.tol, probe).map(|(b, _)| b.value);
        }
        prev = x;
    }
    Err(Error::Bracket { lo, hi })
}

const CANDIDATE_STEPS: usize = 200;

fn scan_one(m: f64, half_period: f64, cfg: &RegionConfig) -> RegionSample {
    let mut errors = Vec::new();
    let mut run = |sign: SignKind| {
        match critical_m_bisect(m, half_period, sign, default_bracket(m, half_period, sign), cfg) {
            Ok(v) => Some(v),
            Err(e) => {
                errors.push(format!("{sign:?}: {e}"));
                None
            }
        }
    };
    let pos = run(SignKind::Positive);
    let neg = run(SignKind::Negative);
    RegionSample {
        m,
        m_pos_upper: pos,
        m_neg_lower: neg,
        method: BoundaryMethod::Bisection,
        grid_n: cfg.grid_n,
        errors,
    }
}

/// Bisection boundaries for every `m` of the grid, in grid order.
pub fn scan_region(m_grid: &[f64], half_period: f64, cfg: &RegionConfig) -> Result<Vec<RegionSample>> {
    cfg.validate()?;
    Ok(m_grid
        .par_iter()
        .map(|&m| scan_one(m, half_period, cfg))
        .collect())
}

/// The conjectured candidate-point curve on the same grid.
pub fn candidate_curve(m_grid: &[f64], half_period: f64, cfg: &RegionConfig) -> Result<Vec<RegionSample>> {
    cfg.validate()?;
    Ok(m_grid
        .par_iter()
        .map(|&m| {
            let mut errors = Vec::new();
            let mut run = |sign| match candidate_point_boundary(m, half_period, sign, cfg) {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(format!("{sign:?}: {e}"));
                    None
                }
            };
            let pos = run(SignKind::Positive);
            let neg = run(SignKind::Negative);
            RegionSample {
                m,
                m_pos_upper: pos,
                m_neg_lower: neg,
                method: BoundaryMethod::CandidatePoints,
                grid_n: cfg.grid_n,
                errors,
            }
        })
        .collect())
}

/// Largest `|a - b|` over the entries where both curves have a value.
pub fn max_curve_deviation(a: &[RegionSample], b: &[RegionSample]) -> f64 {
    let diff = |x: Option<f64>, y: Option<f64>| match (x, y) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => 0.0,
    };
    a.iter()
        .zip(b)
        .map(|(p, q)| diff(p.m_pos_upper, q.m_pos_upper).max(diff(p.m_neg_lower, q.m_neg_lower)))
        .fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// closed forms for T <= 1

fn sec(x: f64) -> f64 {
    1.0 / x.cos()
}

/// Positive-branch formula used for `m < alpha_2 / T^2`.
pub fn f_branch(m: f64, half_period: f64) -> f64 {
    let x = (-m).sqrt() * half_period;
    let csch4 = 1.0 / (x / 4.0).sinh();
    let sech2 = 1.0 / (x / 2.0).cosh();
    let coth4 = 1.0 / (x / 4.0).tanh();
    let den = coth4 - csch4 * sech2 + (x / 4.0).tan() + (x / 2.0).tan() + (x / 2.0).tanh();
    -m - m * csch4 * sech2 / den
}

fn cosh_branch_pos(m: f64, half_period: f64) -> f64 {
    let c = ((-m).sqrt() * half_period).cosh();
    m * c / (1.0 - c)
}

fn cosh_branch_neg(m: f64, half_period: f64) -> f64 {
    m / (((-m).sqrt() * half_period).cosh() - 1.0)
}

/// Negative-branch formula used for `m < alpha_3 / T^2`.
pub fn tan_branch_neg(m: f64, half_period: f64) -> f64 {
    let y = 0.5 * (-m).sqrt() * half_period;
    let coth = 1.0 / y.tanh();
    let csch = 1.0 / y.sinh();
    m * (coth - y.tan()) / (-coth + csch + y.tan())
}

/// `T^2 [F(a/T^2, T) - (a/T^2) cosh(sqrt(-a)) / (1 - cosh(sqrt(-a)))]`.
pub fn alpha2_equation(a: f64, half_period: f64) -> f64 {
    let m = a / (half_period * half_period);
    let c = (-a).sqrt().cosh();
    half_period * half_period * (f_branch(m, half_period) - m * c / (1.0 - c))
}

/// Both negative branches divided by `m`, differenced at `m = a / T^2`.
pub fn alpha3_equation(a: f64, half_period: f64) -> f64 {
    let m = a / (half_period * half_period);
    let y = 0.5 * (-a).sqrt();
    let coth = 1.0 / y.tanh();
    let csch = 1.0 / y.sinh();
    let lhs = 1.0 / (((-m).sqrt() * half_period).cosh() - 1.0);
    lhs - (coth - y.tan()) / (-coth + csch + y.tan())
}

/// First root below `-0.1` of `f`, scanning down to `-10` and discarding
/// sign changes that come from poles.
fn first_negative_root<F: Fn(f64) -> f64>(f: F, what: &str) -> Result<f64> {
    let step = 0.01;
    let mut a = -0.1;
    let mut fa = f(a);
    while a > -10.0 {
        let b = a - step;
        let fb = f(b);
        if fa.is_finite() && fb.is_finite() && fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                let fm = f(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let root = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
            if f(root).abs() < 1e-10 {
                return Ok(root);
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::NotFound(format!("{what} in (-10, -0.1)")))
}

pub fn solve_alpha2_at(half_period: f64) -> Result<f64> {
    first_negative_root(|a| alpha2_equation(a, half_period), "alpha_2")
}

pub fn solve_alpha3_at(half_period: f64) -> Result<f64> {
    first_negative_root(|a| alpha3_equation(a, half_period), "alpha_3")
}

/// Branch switch of the positive closed form; the same for every `T`.
pub fn solve_alpha2() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| solve_alpha2_at(1.0).expect("alpha_2 root exists"))
}

/// Branch switch of the negative closed form; the same for every `T`.
pub fn solve_alpha3() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| solve_alpha3_at(1.0).expect("alpha_3 root exists"))
}

/// Closed-form boundary of the constant-sign region for `T <= 1`.
pub fn region_boundary_closed_tle1(m: f64, half_period: f64, sign: SignKind) -> Result<f64> {
    let tt = half_period;
    if !(tt > 0.0 && tt <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "closed-form boundaries need T in (0, 1], got {tt}"
        )));
    }
    let lo = -(PI / tt).powi(2);
    let hi = (PI / (2.0 * tt)).powi(2);
    if !(m > lo && m < hi) {
        return Err(Error::InvalidParameter(format!(
            "m = {m} outside the covered range ({lo}, {hi})"
        )));
    }
    let x2 = m * tt * tt;
    let t2 = tt * tt;
    // series about m = 0, where the branch formulas are 0/0
    if x2.abs() < 1e-5 {
        return Ok(match sign {
            SignKind::Positive => 2.0 / t2 * (1.0 - 5.0 * x2 / 12.0),
            SignKind::Negative => -2.0 / t2 * (1.0 + x2 / 12.0),
        });
    }
    Ok(match sign {
        SignKind::Positive => {
            if m > 0.0 {
                m / (-1.0 + sec(m.sqrt() * tt))
            } else if m >= solve_alpha2() / t2 {
                cosh_branch_pos(m, tt)
            } else {
                f_branch(m, tt)
            }
        }
        SignKind::Negative => {
            if m > 0.0 {
                m / (-1.0 + (m.sqrt() * tt).cos())
            } else if m >= solve_alpha3() / t2 {
                cosh_branch_neg(m, tt)
            } else {
                tan_branch_neg(m, tt)
            }
        }
    })
}

/// Closed-form curve on `m_grid`; entries outside the covered range are empty.
pub fn closed_form_curve(m_grid: &[f64], half_period: f64) -> Result<Vec<RegionSample>> {
    if !(half_period > 0.0 && half_period <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "closed-form boundaries need T in (0, 1], got {half_period}"
        )));
    }
    Ok(m_grid
        .iter()
        .map(|&m| {
            let mut errors = Vec::new();
            let mut get = |sign| match region_boundary_closed_tle1(m, half_period, sign) {
                Ok(v) => Some(v),
                Err(e) => {
                    errors.push(e.to_string());
                    None
                }
            };
            let pos = get(SignKind::Positive);
            let neg = get(SignKind::Negative);
            RegionSample {
                m,
                m_pos_upper: pos,
                m_neg_lower: neg,
                method: BoundaryMethod::ClosedForm,
                grid_n: 0,
                errors,
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// fixed-point operator

/// `G_m(t,s) / int G_m(t,r) H_{m,M0}([r], s) dr` with `H_{m,M0} = h`.
///
/// `H([r], s)` is constant on each partition interval, so the integral is a
/// finite sum of exact interval integrals of `G_m`.
pub fn tbar_operator(h: &CompositeKernel, t: f64, s: f64) -> Result<f64> {
    let g = h.reflection().ok_or_else(|| {
        Error::InvalidParameter("the fixed-point operator needs m != 0".into())
    })?;
    h.eval(t, s)?;
    let p = h.partition();
    let den: f64 = p
        .labels
        .iter()
        .zip(&p.intervals)
        .map(|(&k, &(lo, hi))| g.integral_s(t, lo, hi) * h.value(k as f64, s))
        .sum();
    let num = g.value(t, s);
    if !(den.abs() > 1e-14 * num.abs().max(1e-300)) || !den.is_finite() {
        return Err(Error::NotFound(format!(
            "vanishing denominator at ({t}, {s}); the candidate point changes"
        )));
    }
    Ok(num / den)
}

/// Secant iteration for `M = Tbar_m(M, t, s)` started at `start`.
pub fn tbar_refine(
    m: f64,
    half_period: f64,
    start: f64,
    point: (f64, f64),
    cfg: &QuadConfig,
) -> Result<f64> {
    let phi = |big_m: f64| -> Result<f64> {
        let k = CompositeKernel::new(m, big_m, half_period, cfg)?;
        Ok(big_m - tbar_operator(&k, point.0, point.1)?)
    };
    let mut x0 = start;
    let mut x1 = start + 1e-3 * start.abs().max(1.0);
    let mut f0 = phi(x0)?;
    let mut f1 = phi(x1)?;
    for _ in 0..60 {
        if f1 == f0 {
            break;
        }
        let x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = phi(x1)?;
        if (x1 - x0).abs() < 1e-12 * x1.abs().max(1.0) {
            return Ok(x1);
        }
    }
    if f1.abs() < 1e-9 {
        Ok(x1)
    } else {
        Err(Error::NonConvergence {
            iterations: 60,
            last_update: (x1 - x0).abs(),
        })
    }
}

// ---------------------------------------------------------------------------
// extremum sweep and conjecture check

/// Location of the extremum for each `(m, M)` whose kernel has constant sign.
pub fn extremum_sweep(
    pairs: &[(f64, f64)],
    half_period: f64,
    cfg: &RegionConfig,
) -> Vec<ExtremumRecord> {
    pairs
        .par_iter()
        .filter_map(|&(m, big_m)| {
            let k = CompositeKernel::new(m, big_m, half_period, &cfg.quad).ok()?;
            let e = min_max_h_tol(&k, cfg.grid_n, cfg.polish_tol).ok()?;
            if e.min > 0.0 {
                Some(ExtremumRecord {
                    m,
                    big_m,
                    location: e.argmin,
                    kind: ExtremumKind::MinOfPositive,
                })
            } else if e.max < 0.0 {
                Some(ExtremumRecord {
                    m,
                    big_m,
                    location: e.argmax,
                    kind: ExtremumKind::MaxOfNegative,
                })
            } else {
                None
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureReport {
    #[serde(rename = "T")]
    pub half_period: f64,
    pub samples: usize,
    pub violations: usize,
    pub skipped: usize,
    /// `(m, M, max H)` of the worst violation.
    pub worst: Option<(f64, f64, f64)>,
}

/// Tests the statement that `H < 0` whenever `m in (0, (pi/2)^2)` and
/// `m/(-1+cos sqrt m) < M < -m`, or `m = 0` and `-2 < M < 0`.
pub fn conjecture_negative_check(
    half_period: f64,
    n_m: usize,
    n_big_m: usize,
    cfg: &RegionConfig,
) -> ConjectureReport {
    let top = (PI / 2.0).powi(2);
    let mut pairs = Vec::new();
    for i in 0..n_m {
        let m = top * i as f64 / n_m as f64;
        let (lo, hi) = if m == 0.0 {
            (-2.0, 0.0)
        } else {
            (m / (-1.0 + m.sqrt().cos()), -m)
        };
        for j in 1..=n_big_m {
            let big_m = lo + (hi - lo) * j as f64 / (n_big_m + 1) as f64;
            pairs.push((m, big_m));
        }
    }
    let results: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(m, big_m)| {
            let k = CompositeKernel::new(m, big_m, half_period, &cfg.quad).ok()?;
            min_max_h_tol(&k, cfg.grid_n, cfg.polish_tol).ok().map(|e| e.max)
        })
        .collect();
    let mut report = ConjectureReport {
        half_period,
        samples: pairs.len(),
        violations: 0,
        skipped: 0,
        worst: None,
    };
    for (&(m, big_m), r) in pairs.iter().zip(results) {
        match r {
            None => report.skipped += 1,
            Some(mx) if mx >= 0.0 => {
                report.violations += 1;
                if report.worst.map_or(true, |w| mx > w.2) {
                    report.worst = Some((m, big_m, mx));
                }
            }
            Some(_) => {}
        }
    }
    report
}
