//! First Dirichlet eigenvalues behind the positivity of `H_{m,M}` for
//! `m, M >= 0`.
//!
//! Cutting the circle `[-T, T]` (ends identified) at a point `s0` gives the
//! Dirichlet problem whose first eigenvalue in `M` is `lambda^{s0}`:
//! `v'' + m v(-t) + M v([t]) = 0` away from `s0`, periodic at `+-T`,
//! `v(s0) = 0`, with a free derivative jump at `s0`. Its coefficients are
//! affine in `M`, so the eigenvalue is the first positive root of a
//! determinant.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::composite::{build_partition, IntervalPartition};
use crate::error::{Error, Result};
use crate::quadrature::floor_trunc;

const INTEGER_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Variant {
    NonIntegerS0,
    IntegerS0,
    /// `z'' = -M z([t])`, `m = 0`, `s0 = T`.
    ZsinxeloM0,
    /// `z'' = -m z(-t)`; the eigenvalue is sought in `m`.
    ReflectionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletProblem {
    pub m: f64,
    #[serde(rename = "T")]
    pub half_period: f64,
    pub s0: f64,
    pub variant: Variant,
}

impl DirichletProblem {
    /// Problem cut at `s0`; the variant follows from whether `s0` is an
    /// integer.
    pub fn new(m: f64, half_period: f64, s0: f64) -> Result<Self> {
        if !(half_period > 0.0) || !half_period.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "T = {half_period} must be positive"
            )));
        }
        if !(m >= 0.0) || !m.is_finite() {
            return Err(Error::InvalidParameter(format!("m = {m} must be >= 0")));
        }
        if !(s0 >= -INTEGER_SNAP && s0 <= half_period + INTEGER_SNAP) {
            return Err(Error::InvalidParameter(format!(
                "s0 = {s0} must lie in [0, {half_period}]"
            )));
        }
        let s0 = s0.clamp(0.0, half_period);
        let near = s0.round();
        let (s0, variant) = if (s0 - near).abs() <= INTEGER_SNAP {
            (near.min(half_period), Variant::IntegerS0)
        } else {
            (s0, Variant::NonIntegerS0)
        };
        Ok(Self {
            m,
            half_period,
            s0,
            variant,
        })
    }

    pub fn zsinxelo(half_period: f64) -> Result<Self> {
        let mut p = Self::new(0.0, half_period, half_period)?;
        p.s0 = half_period;
        p.variant = Variant::ZsinxeloM0;
        Ok(p)
    }

    pub fn reflection_only(half_period: f64) -> Result<Self> {
        let mut p = Self::new(0.0, half_period, half_period)?;
        p.variant = Variant::ReflectionOnly;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EigenMethod {
    DeterminantRoot,
    SpectralRadius,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    pub method: EigenMethod,
    /// Boundary and node-consistency defect of the reconstructed
    /// eigenfunction (determinant method), or the gap between the two grid
    /// levels (spectral radius).
    pub residual: f64,
    pub bracket: (f64, f64),
}

// ---------------------------------------------------------------------------
// root isolation

/// First sign change of `f` on a log-spaced grid of `(lo, hi)`, refined by
/// bisection down to machine precision.
fn first_positive_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, samples: usize) -> Option<(f64, (f64, f64))> {
    let ratio = (hi / lo).powf(1.0 / (samples - 1) as f64);
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..samples {
        let b = lo * ratio.powi(i as i32);
        let fb = f(b);
        if fa == 0.0 {
            return Some((a, (a, a)));
        }
        if fa.signum() != fb.signum() {
            let bracket = (a, b);
            let (mut x0, mut x1, mut f0) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                let fm = f(mid);
                if fm == 0.0 {
                    return Some((mid, bracket));
                }
                if fm.signum() == f0.signum() {
                    x0 = mid;
                    f0 = fm;
                } else {
                    x1 = mid;
                }
            }
            return Some((0.5 * (x0 + x1), bracket));
        }
        a = b;
        fa = fb;
    }
    None
}

/// Unit null vector of `k` and `|k x|_inf`.
fn null_defect(k: &DMatrix<f64>) -> f64 {
    let svd = k.clone().svd(false, true);
    let vt = svd.v_t.expect("v_t requested");
    let (idx, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let x = vt.row(idx).transpose();
    (k * x).amax()
}

fn default_upper(half_period: f64) -> f64 {
    10.0 * (2.0 / (half_period * half_period)).max((PI / (2.0 * half_period)).powi(2))
}

// ---------------------------------------------------------------------------
// m = 0: piecewise quadratic on the cut circle

/// `int_0^{min(u,b)} (u - r) 1_{[a,b]}(r) dr`.
fn ramp(u: f64, a: f64, b: f64) -> f64 {
    if u <= a {
        return 0.0;
    }
    let top = b.min(u);
    0.5 * ((u - a).powi(2) - (u - top).powi(2))
}

/// Parametrise the circle from `s0` by arc length `u in [0, 2T]` and return,
/// for each partition interval, its pieces in `u`.
fn arc_pieces(p: &IntervalPartition, s0: f64) -> Vec<Vec<(f64, f64)>> {
    let tt = p.half_period;
    p.intervals
        .iter()
        .map(|&(lo, hi)| {
            let mut v = Vec::new();
            let (a, b) = (lo.max(s0), hi.min(tt));
            if b > a {
                v.push((a - s0, b - s0));
            }
            let (a, b) = (lo.max(-tt), hi.min(s0));
            if b > a {
                v.push((a - s0 + 2.0 * tt, b - s0 + 2.0 * tt));
            }
            v
        })
        .collect()
}

fn arc_position(k: f64, s0: f64, half_period: f64) -> f64 {
    if k >= s0 {
        k - s0
    } else {
        k - s0 + 2.0 * half_period
    }
}

/// System `K0 + M K1` in the unknowns `(z'(0), c_k)`, where
/// `z(u) = z'(0) u - M sum_k c_k W_k(u)`.
fn m0_system(p: &IntervalPartition, s0: f64, big_m: f64) -> DMatrix<f64> {
    let tt = p.half_period;
    let n = p.len();
    let pieces = arc_pieces(p, s0);
    let w = |k: usize, u: f64| pieces[k].iter().map(|&(a, b)| ramp(u, a, b)).sum::<f64>();
    let mut k = DMatrix::zeros(n + 1, n + 1);
    // z(2T) = 0
    k[(0, 0)] = 2.0 * tt;
    for j in 0..n {
        k[(0, 1 + j)] = -big_m * w(j, 2.0 * tt);
    }
    // c_l = z(u_l)
    for (l, &label) in p.labels.iter().enumerate() {
        let u = arc_position(label as f64, s0, tt);
        k[(1 + l, 0)] = -u;
        for j in 0..n {
            k[(1 + l, 1 + j)] = big_m * w(j, u);
        }
        k[(1 + l, 1 + l)] += 1.0;
    }
    k
}

/// `lambda^{s0}` for `m = 0` by integrating the piecewise quadratic
/// eigenfunction along the cut circle.
pub fn dirichlet_eig_m0(half_period: f64, s0: f64) -> Result<EigenResult> {
    let prob = DirichletProblem::new(0.0, half_period, s0)?;
    let p = build_partition(half_period)?;
    let upper = default_upper(half_period);
    let f = |big_m: f64| m0_system(&p, prob.s0, big_m).determinant();
    let (lambda, bracket) = first_positive_root(f, 1e-3, upper, 4000).ok_or_else(|| {
        Error::NotFound(format!(
            "no eigenvalue in (1e-3, {upper}) for T = {half_period}, s0 = {s0}"
        ))
    })?;
    Ok(EigenResult {
        lambda,
        method: EigenMethod::DeterminantRoot,
        residual: null_defect(&m0_system(&p, prob.s0, lambda)),
        bracket,
    })
}

/// First eigenvalue of `z'' = -M z([t])`, `z(-T) = z(T) = 0`.
pub fn lambda1_zsinxelo(half_period: f64) -> Result<EigenResult> {
    DirichletProblem::zsinxelo(half_period)?;
    dirichlet_eig_m0(half_period, half_period)
}

// ---------------------------------------------------------------------------
// general m >= 0: exact propagation of even and odd parts on [0, T]

/// Linear form in the unknowns.
type Lin = Vec<f64>;

fn axpy(y: &mut Lin, a: f64, x: &Lin) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn lin_comb(terms: &[(f64, &Lin)], n: usize) -> Lin {
    let mut out = vec![0.0; n];
    for &(a, x) in terms {
        axpy(&mut out, a, x);
    }
    out
}

/// Propagate `(y, y')` of `y'' = sigma m y + f` over `h`, `sigma = -1` for
/// the even part and `+1` for the odd part.
fn propagate(y: &Lin, dy: &Lin, f: &Lin, m: f64, sigma: f64, h: f64) -> (Lin, Lin) {
    let n = y.len();
    if m == 0.0 {
        return (
            lin_comb(&[(1.0, y), (h, dy), (0.5 * h * h, f)], n),
            lin_comb(&[(1.0, dy), (h, f)], n),
        );
    }
    let a = m.sqrt();
    if sigma < 0.0 {
        let (s, c) = (a * h).sin_cos();
        (
            lin_comb(&[(c, y), (s / a, dy), ((1.0 - c) / m, f)], n),
            lin_comb(&[(-a * s, y), (c, dy), (s / a, f)], n),
        )
    } else {
        let (s, c) = ((a * h).sinh(), (a * h).cosh());
        (
            lin_comb(&[(c, y), (s / a, dy), ((c - 1.0) / m, f)], n),
            lin_comb(&[(a * s, y), (c, dy), (s / a, f)], n),
        )
    }
}

fn unit(n: usize, i: usize) -> Lin {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

/// Square system of the cut problem at parameter `big_m`.
///
/// With `p(x) = v(x)`, `q(x) = v(-x)` on `[0, T]`, the even part
/// `e = (p+q)/2` obeys `e'' = -m e - M (c_[x] + c_[-x])/2` and the odd part
/// `o = (p-q)/2` obeys `o'' = m o - M (c_[x] - c_[-x])/2`.
fn general_system(prob: &DirichletProblem, p: &IntervalPartition, big_m: f64) -> DMatrix<f64> {
    let tt = prob.half_period;
    let s0 = prob.s0;
    let m = prob.m;
    let nlab = p.len();
    let at_zero = s0 == 0.0;
    let at_end = s0 == tt;
    let interior = !at_zero && !at_end;
    // unknowns: two initial values, the jump (interior cut), node values
    let n_init = if interior { 3 } else { 2 };
    let n = n_init + nlab;
    let node = |label: i64| n_init + p.index_of_label(label).expect("label of partition");

    let zero = vec![0.0; n];
    let (mut e, mut de, mut o, mut dod) = if at_zero {
        // v(0) = 0, free one-sided derivatives
        (zero.clone(), unit(n, 0), zero.clone(), unit(n, 1))
    } else {
        // v smooth at 0: o(0) = 0, e'(0) = 0
        (unit(n, 0), zero.clone(), zero.clone(), unit(n, 1))
    };

    let mut stops: Vec<f64> = (1..=tt.floor() as i64).map(|j| j as f64).filter(|&x| x < tt).collect();
    stops.push(tt);
    if interior {
        stops.push(s0);
    }
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stops.dedup();

    let mut rows: Vec<Lin> = Vec::with_capacity(n);
    // node consistency for the labels located at x = 0
    let node_value = |e: &Lin, o: &Lin, x: f64, rows: &mut Vec<Lin>| {
        for (sgn, lab) in [(1.0, x), (-1.0, -x)] {
            if x == 0.0 && sgn < 0.0 {
                continue;
            }
            let label = lab.round() as i64;
            if (lab - label as f64).abs() > 0.0 || p.index_of_label(label).is_none() {
                continue;
            }
            // c_label - (e +- o)(x) = 0
            let mut r = lin_comb(&[(-1.0, e), (-sgn, o)], n);
            r[node(label)] += 1.0;
            rows.push(r);
        }
    };
    node_value(&e, &o, 0.0, &mut rows);

    let mut x = 0.0;
    for &stop in &stops {
        let h = stop - x;
        if h > 0.0 {
            let j = floor_trunc(0.5 * (x + stop));
            let mut fe = vec![0.0; n];
            let mut fo = vec![0.0; n];
            let cp = node(j);
            let cm = node(-j);
            fe[cp] -= 0.5 * big_m;
            fe[cm] -= 0.5 * big_m;
            fo[cp] -= 0.5 * big_m;
            fo[cm] += 0.5 * big_m;
            let (e1, de1) = propagate(&e, &de, &fe, m, -1.0, h);
            let (o1, do1) = propagate(&o, &dod, &fo, m, 1.0, h);
            e = e1;
            de = de1;
            o = o1;
            dod = do1;
            x = stop;
        }
        if interior && stop == s0 {
            // p(s0) = 0 and p' jumps by the free amount gamma
            rows.push(lin_comb(&[(1.0, &e), (1.0, &o)], n));
            de[2] += 0.5;
            dod[2] += 0.5;
        }
        if stop < tt && stop.fract() == 0.0 {
            node_value(&e, &o, stop, &mut rows);
        }
    }
    if at_end {
        rows.push(e.clone());
        rows.push(o.clone());
    } else {
        // periodicity: v(T) = v(-T), v'(T) = v'(-T)
        rows.push(o.clone());
        rows.push(de.clone());
    }
    debug_assert_eq!(rows.len(), n);
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// `lambda^{s0}` for `m >= 0` by exact propagation of the eigenfunction.
/// The `ReflectionOnly` variant searches `m` with `M = 0` instead.
pub fn dirichlet_eig_general(prob: &DirichletProblem) -> Result<EigenResult> {
    let tt = prob.half_period;
    if prob.variant == Variant::ReflectionOnly {
        // z'' = -m z(-t), z(+-T) = 0: even part cos, odd part sinh
        let sys = |m: f64| {
            let a = m.sqrt();
            let e = (a * tt).cos();
            let o = (a * tt).sinh() / a;
            DMatrix::from_row_slice(2, 2, &[e, 0.0, 0.0, o])
        };
        let upper = default_upper(tt);
        let (lambda, bracket) = first_positive_root(|m| sys(m).determinant(), 1e-3, upper, 4000)
            .ok_or_else(|| Error::NotFound(format!("no eigenvalue in m below {upper}")))?;
        return Ok(EigenResult {
            lambda,
            method: EigenMethod::DeterminantRoot,
            residual: null_defect(&sys(lambda)),
            bracket,
        });
    }
    let p = build_partition(tt)?;
    let upper = default_upper(tt).max(10.0 * prob.m + 10.0);
    let f = |big_m: f64| general_system(prob, &p, big_m).determinant();
    let (lambda, bracket) = first_positive_root(f, 1e-3, upper, 4000).ok_or_else(|| {
        Error::NotFound(format!(
            "no eigenvalue in (1e-3, {upper}) for m = {}, T = {tt}, s0 = {}",
            prob.m, prob.s0
        ))
    })?;
    Ok(EigenResult {
        lambda,
        method: EigenMethod::DeterminantRoot,
        residual: null_defect(&general_system(prob, &p, lambda)),
        bracket,
    })
}

// ---------------------------------------------------------------------------
// spectral radius of Gd_T o B

/// Kernel of `-u'' = sigma`, `u(-T) = u(T) = 0`.
pub fn gd_kernel(half_period: f64, t: f64, s: f64) -> f64 {
    let (lo, hi) = if t < s { (t, s) } else { (s, t) };
    (half_period - hi) * (lo + half_period) / (2.0 * half_period)
}

fn sr_grid(half_period: f64, n: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..n)
        .map(|i| -half_period + 2.0 * half_period * i as f64 / (n - 1) as f64)
        .collect();
    let k = half_period.floor() as i64;
    g.extend((-k..=k).map(|j| j as f64).filter(|x| x.abs() < half_period));
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    g
}

/// Power iteration for the discretised `Gd_T o B` on an `n`-point grid.
/// Returns the spectral radius and the (max-normalised) eigenvector.
pub fn power_iteration(half_period: f64, n: usize) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let g = sr_grid(half_period, n);
    let len = g.len();
    // (B u) on panel [g_p, g_{p+1}] is u at the label of its midpoint
    let label_idx: Vec<usize> = g
        .windows(2)
        .map(|w| {
            let lab = floor_trunc(0.5 * (w[0] + w[1])) as f64;
            g.iter()
                .position(|&x| (x - lab).abs() < 1e-12)
                .expect("integers belong to the grid")
        })
        .collect();
    let mut kmat = DMatrix::<f64>::zeros(len, len);
    for (i, &t) in g.iter().enumerate() {
        for (pnl, w) in g.windows(2).enumerate() {
            let wgt = 0.5 * (w[1] - w[0]) * (gd_kernel(half_period, t, w[0]) + gd_kernel(half_period, t, w[1]));
            kmat[(i, label_idx[pnl])] += wgt;
        }
    }
    let mut u = vec![1.0; len];
    let mut rho = 0.0;
    for it in 0..10_000 {
        let w: Vec<f64> = (0..len)
            .map(|i| (0..len).map(|j| kmat[(i, j)] * u[j]).sum())
            .collect();
        let num: f64 = w.iter().zip(&u).map(|(a, b)| a * b).sum();
        let den: f64 = u.iter().map(|a| a * a).sum();
        let r = num / den;
        let scale = w.iter().cloned().fold(0.0, f64::max);
        if !(scale > 0.0) {
            return Err(Error::NonConvergence {
                iterations: it,
                last_update: f64::NAN,
            });
        }
        u = w.iter().map(|x| x / scale).collect();
        if (r - rho).abs() <= 1e-10 * r.abs() && it > 2 {
            return Ok((r, u, g));
        }
        rho = r;
    }
    Err(Error::NonConvergence {
        iterations: 10_000,
        last_update: rho,
    })
}

/// `1 / rho(Gd_T o B)` with Richardson extrapolation over `n` and `2n`.
pub fn lambda_via_spectral_radius(half_period: f64, n: usize) -> Result<EigenResult> {
    if n < 200 {
        return Err(Error::InvalidParameter(format!("n = {n} must be at least 200")));
    }
    if !(half_period > 0.0) {
        return Err(Error::InvalidParameter(format!("T = {half_period} must be positive")));
    }
    let (r1, _, _) = power_iteration(half_period, n)?;
    let (r2, _, _) = power_iteration(half_period, 2 * n - 1)?;
    let (l1, l2) = (1.0 / r1, 1.0 / r2);
    Ok(EigenResult {
        lambda: (4.0 * l2 - l1) / 3.0,
        method: EigenMethod::SpectralRadius,
        residual: (l2 - l1).abs(),
        bracket: (l1.min(l2), l1.max(l2)),
    })
}

// ---------------------------------------------------------------------------
// closed forms

/// `lambda^{s0}` for `T <= 1` and `m in (0, (pi/2T)^2)`.
pub fn lambda_closed_tle1(m: f64, half_period: f64, s0: f64) -> Result<f64> {
    let tt = half_period;
    if !(tt > 0.0 && tt <= 1.0) {
        return Err(Error::InvalidParameter(format!("T = {tt} must lie in (0, 1]")));
    }
    if !(m > 0.0 && m < (PI / (2.0 * tt)).powi(2)) {
        return Err(Error::InvalidParameter(format!(
            "m = {m} must lie in (0, (pi/2T)^2)"
        )));
    }
    if !(s0 >= 0.0 && s0 <= tt) {
        return Err(Error::InvalidParameter(format!("s0 = {s0} must lie in [0, T]")));
    }
    if s0 == 0.0 {
        // H(0, 0) = G(0, 0) m / (m + M) never vanishes
        return Ok(f64::INFINITY);
    }
    let a = m.sqrt();
    let cross = (a * s0).sinh() * (a * tt).sin() / (a * tt).sinh() / (a * (s0 - tt)).cos()
        * (a * (s0 - tt)).sinh();
    Ok(m * (-1.0 / (cross + (a * s0).cos() - 1.0) - 1.0))
}

/// `lambda^T = m / (sec(sqrt(m) T) - 1)`.
pub fn lambda_t_closed(m: f64, half_period: f64) -> f64 {
    let c = (m.sqrt() * half_period).cos();
    m * c / (1.0 - c)
}

/// Explicit `lambda_1(T)` of `z'' = -M z([t])` for `T < 3`, `T` not an
/// integer. The `1 < T < 2` row uses `T^2` in the numerator.
pub fn table_lambda(half_period: f64) -> Option<f64> {
    let t = half_period;
    if t > 0.0 && t < 1.0 {
        Some(2.0 / (t * t))
    } else if t > 1.0 && t < 2.0 {
        Some((t * t - (-4.0 + 8.0 * t - 4.0 * t * t + t.powi(4)).sqrt()) / (1.0 - 2.0 * t + t * t))
    } else if t > 2.0 && t < 3.0 {
        let p = 169.0 + t * (-364.0 + t * (288.0 + t * (-100.0 + 13.0 * t)));
        let inner = (t - 2.0).powi(4)
            * (2305.0
                - t * (7314.0
                    + t * (-9600.0
                        + t * (6680.0 + t * (-2558.0 + t * (446.0 + t * (25.0 + 3.0 * (-8.0 + t) * t)))))));
        let poly = 2413.0
            + t * (-7530.0 + t * (9762.0 + t * (-6734.0 + t * (2607.0 + t * (-537.0 + 46.0 * t)))));
        let delta = Complex64::new(poly, 0.0) + 3.0 * 3f64.sqrt() * Complex64::new(inner, 0.0).sqrt();
        let cube = delta.powf(1.0 / 3.0);
        let i = Complex64::i();
        let s3 = 3f64.sqrt();
        let val = (Complex64::new(208.0 + 32.0 * t * (-7.0 + 2.0 * t), 0.0)
            - 8.0 * i * (-i + s3) * p / cube
            + 8.0 * i * (i + s3) * cube)
            / (24.0 * (t - 2.0).powi(2));
        Some(val.re)
    } else {
        None
    }
}

/// The `1 < T < 2` row exactly as printed, with `T^3` in the numerator.
pub fn table_lambda_printed_1_2(half_period: f64) -> f64 {
    let t = half_period;
    (t.powi(3) - (-4.0 + 8.0 * t - 4.0 * t * t + t.powi(4)).sqrt()) / (1.0 - 2.0 * t + t * t)
}

// ---------------------------------------------------------------------------
// sweeps

/// `lambda_1(T)` of the `m = 0` problem cut at `s0 = T` over a grid of `T`.
pub fn lambda_curve(ts: &[f64]) -> Vec<Result<EigenResult>> {
    ts.par_iter().map(|&t| lambda1_zsinxelo(t)).collect()
}

/// `lambda^{s0}` on `n` equispaced cut points of `[0, T]`; integer cut
/// points are hit exactly.
pub fn lambda_s0_curve(m: f64, half_period: f64, n: usize) -> Vec<(f64, Result<EigenResult>)> {
    let n = n.max(2);
    let s0s: Vec<f64> = (0..n)
        .map(|i| half_period * i as f64 / (n - 1) as f64)
        .collect();
    s0s.par_iter()
        .map(|&s0| {
            let r = DirichletProblem::new(m, half_period, s0).and_then(|p| {
                if m == 0.0 {
                    dirichlet_eig_m0(half_period, p.s0)
                } else {
                    dirichlet_eig_general(&p)
                }
            });
            (s0, r)
        })
        .collect()
}
