//! Constant-sign solutions of `v'' = f(t, v(t), v(-t), v([t]))` with periodic
//! conditions: cone-condition checks and a fixed-point solver built on `H_{m,M}`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::composite::{CompositeKernel, IntervalPartition};
use crate::quadrature::{floor_trunc, QuadConfig, Rule};
use crate::region::{min_max_h, SignKind};
use crate::{Error, Result};

/// `f(t, x, y, z)` with `x = v(t)`, `y = v(-t)`, `z = v([t])`.
pub type Nonlinearity = Arc<dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct NonlinearProblem {
    pub name: String,
    f: Nonlinearity,
    pub m: f64,
    pub big_m: f64,
    pub half_period: f64,
    /// Sign of `H_{m,M}`.
    pub sign: SignKind,
}

impl fmt::Debug for NonlinearProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearProblem")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("M", &self.big_m)
            .field("T", &self.half_period)
            .field("sign", &self.sign)
            .finish()
    }
}

impl NonlinearProblem {
    /// Attaches `f` to an already built kernel; `H` must have constant sign.
    pub fn new(name: &str, f: Nonlinearity, k: &CompositeKernel) -> Result<Self> {
        let ext = min_max_h(k, 101)?;
        let sign = if ext.min > 0.0 {
            SignKind::Positive
        } else if ext.max < 0.0 {
            SignKind::Negative
        } else {
            return Err(Error::InvalidRegion(format!(
                "H_{{{}, {}}} changes sign on [-{T}, {T}]^2 (min {:e} at {:?}, max {:e} at {:?})",
                k.m(),
                k.big_m(),
                ext.min,
                ext.argmin,
                ext.max,
                ext.argmax,
                T = k.half_period()
            )));
        };
        Ok(Self {
            name: name.to_string(),
            f,
            m: k.m(),
            big_m: k.big_m(),
            half_period: k.half_period(),
            sign,
        })
    }

    pub fn f(&self, t: f64, x: f64, y: f64, z: f64) -> f64 {
        (self.f)(t, x, y, z)
    }

    /// `f + m y + M z`, the right-hand side seen by `H`.
    pub fn shifted(&self, t: f64, x: f64, y: f64, z: f64) -> f64 {
        (self.f)(t, x, y, z) + self.m * y + self.big_m * z
    }

    /// `f^(t, x, y, z) = -f(t, -x, -y, -z)`, the problem for `-v`.
    pub fn reflected(&self) -> Self {
        let f = self.f.clone();
        Self {
            name: format!("{}-reflected", self.name),
            f: Arc::new(move |t, x, y, z| -f(t, -x, -y, -z)),
            ..self.clone()
        }
    }

    /// `f = c - m y - M z`; the unique solution is `v = c / (m + M)`.
    pub fn constant_shift(c: f64, k: &CompositeKernel) -> Result<Self> {
        let (m, big_m) = (k.m(), k.big_m());
        Self::new(
            "constant-shift",
            Arc::new(move |_, _, y, z| c - m * y - big_m * z),
            k,
        )
    }

    /// Manufactured problem with exact solution `a + b cos(pi t / T)`.
    pub fn manufactured(a: f64, b: f64, k: &CompositeKernel) -> Result<Self> {
        let (m, big_m, t_half) = (k.m(), k.big_m(), k.half_period());
        let w = std::f64::consts::PI / t_half;
        let exact = move |t: f64| a + b * (w * t).cos();
        Self::new(
            "manufactured",
            Arc::new(move |t, _, y, z| {
                let lab = floor_trunc(t) as f64;
                -b * w * w * (w * t).cos() - m * y - big_m * z + m * exact(-t) + big_m * exact(lab)
            }),
            k,
        )
    }

    /// `f = (alpha |z|^2 x - mu x + beta y) / (hbar^2 / 2 m_p)`.
    pub fn schrodinger(p: &SchrodingerParams, k: &CompositeKernel) -> Result<Self> {
        let scale = 2.0 * p.mp / (p.hbar * p.hbar);
        let (alpha, mu, beta) = (p.alpha, p.mu, p.beta);
        Self::new(
            "schrodinger",
            Arc::new(move |_, x, y, z| scale * (alpha * z * z * x - mu * x + beta * y)),
            k,
        )
    }
}

/// Exact solution of [`NonlinearProblem::manufactured`].
pub fn manufactured_exact(a: f64, b: f64, half_period: f64, t: f64) -> f64 {
    a + b * (std::f64::consts::PI * t / half_period).cos()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeBounds {
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    #[serde(rename = "L")]
    pub big_l: f64,
    pub l: f64,
}

impl ConeBounds {
    pub fn new(r: f64, big_r: f64, big_l: f64, l: f64) -> Result<Self> {
        if !(r > 0.0 && big_r > r && r.is_finite() && big_r.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < r < R, got r = {r}, R = {big_r}"
            )));
        }
        if !(l > 0.0 && big_l >= l && big_l.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < l <= L, got l = {l}, L = {big_l}"
            )));
        }
        Ok(Self { r, big_r, big_l, l })
    }

    /// `[l r / L, L R / l]`
    pub fn cone_box(&self) -> (f64, f64) {
        (self.l * self.r / self.big_l, self.big_l * self.big_r / self.l)
    }

    /// `[l r / L, r]`
    pub fn inner_box(&self) -> (f64, f64) {
        (self.l * self.r / self.big_l, self.r)
    }

    /// `[R, L R / l]`
    pub fn outer_box(&self) -> (f64, f64) {
        (self.big_r, self.big_l * self.big_r / self.l)
    }
}

/// `(L, l) = (max H, min H)` for a positive kernel.
pub fn compute_l_l(k: &CompositeKernel, grid_n: usize) -> Result<(f64, f64)> {
    let ext = min_max_h(k, grid_n)?;
    if !(ext.min > 0.0) {
        return Err(Error::InvalidRegion(format!(
            "H_{{{}, {}}} is not positive: min {:e} at {:?}",
            k.m(),
            k.big_m(),
            ext.min,
            ext.argmin
        )));
    }
    Ok((ext.max, ext.min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    PositiveSolutionExists,
    NegativeSolutionExists,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Cone,
    Condition1Inner,
    Condition1Outer,
    Condition2Inner,
    Condition2Outer,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// `f + m y + M z` at the point.
    pub value: f64,
    /// The bound it should have respected.
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExistenceReport {
    pub problem: String,
    pub sign: SignKind,
    pub bounds: ConeBounds,
    pub cone_ok: bool,
    pub cond1_ok: bool,
    pub cond2_ok: bool,
    /// First few violations per condition, in sampling order.
    pub violating_points: Vec<Violation>,
    pub violation_count: usize,
    pub samples: usize,
    pub conclusion: Conclusion,
    pub note: String,
}

const MAX_REPORTED: usize = 16;

#[derive(Clone, Copy)]
enum Rel {
    Ge,
    Le,
}

struct Test {
    cond: Condition,
    nodes: Vec<f64>,
    rel: Rel,
    /// Bound is `coeff * x`.
    coeff: f64,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 })
        .collect()
}

fn check_tests(p: &NonlinearProblem, b: &ConeBounds, tests: &[Test], sample_n: usize) -> (Vec<Vec<Violation>>, Vec<usize>, usize) {
    let ts = linspace(-p.half_period, p.half_period, sample_n);
    let per_t: Vec<Vec<(usize, Violation)>> = ts
        .par_iter()
        .map(|&t| {
            let mut out = Vec::new();
            for (ti, test) in tests.iter().enumerate() {
                for &x in &test.nodes {
                    let bound = test.coeff * x;
                    for &y in &test.nodes {
                        for &z in &test.nodes {
                            let value = p.shifted(t, x, y, z);
                            let slack = 1e-12 * bound.abs().max(1.0);
                            let bad = match test.rel {
                                Rel::Ge => !(value >= bound - slack),
                                Rel::Le => !(value <= bound + slack),
                            };
                            if bad {
                                out.push((ti, Violation { condition: test.cond, t, x, y, z, value, bound }));
                            }
                        }
                    }
                }
            }
            out
        })
        .collect();
    let _ = b;
    let mut kept = vec![Vec::new(); tests.len()];
    let mut counts = vec![0usize; tests.len()];
    for v in per_t.into_iter().flatten() {
        counts[v.0] += 1;
        if kept[v.0].len() < MAX_REPORTED {
            kept[v.0].push(v.1);
        }
    }
    let samples = ts.len() * tests.iter().map(|t| t.nodes.len().pow(3)).sum::<usize>();
    (kept, counts, samples)
}

fn report(p: &NonlinearProblem, b: &ConeBounds, tests: Vec<Test>, sample_n: usize, sign: SignKind) -> ExistenceReport {
    let (kept, counts, samples) = check_tests(p, b, &tests, sample_n);
    let ok = |c: Condition| {
        tests
            .iter()
            .zip(&counts)
            .filter(|(t, _)| t.cond == c)
            .all(|(_, &n)| n == 0)
    };
    let cone_ok = ok(Condition::Cone);
    let cond1_ok = ok(Condition::Condition1Inner) && ok(Condition::Condition1Outer);
    let cond2_ok = ok(Condition::Condition2Inner) && ok(Condition::Condition2Outer);
    let conclusion = if cone_ok && (cond1_ok || cond2_ok) {
        match sign {
            SignKind::Positive => Conclusion::PositiveSolutionExists,
            SignKind::Negative => Conclusion::NegativeSolutionExists,
        }
    } else {
        Conclusion::Inconclusive
    };
    ExistenceReport {
        problem: p.name.clone(),
        sign,
        bounds: *b,
        cone_ok,
        cond1_ok,
        cond2_ok,
        violating_points: kept.into_iter().flatten().collect(),
        violation_count: counts.iter().sum(),
        samples,
        conclusion,
        note: format!(
            "sampled falsification check on {sample_n} points per axis; a clean report is evidence, not a proof"
        ),
    }
}

fn box_nodes(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo, hi, n)
}

fn thresholds(p: &NonlinearProblem, b: &ConeBounds) -> (f64, f64) {
    let t = p.half_period;
    (b.big_l / (2.0 * t * b.l * b.l), 1.0 / (2.0 * t * b.big_l))
}

/// Samples the cone inequality and conditions 1 and 2 for a positive solution.
pub fn krasnoselskii_check(p: &NonlinearProblem, b: &ConeBounds, sample_n: usize) -> ExistenceReport {
    let n = sample_n.max(2);
    let (big, small) = thresholds(p, b);
    let cone = b.cone_box();
    let inner = b.inner_box();
    let outer = b.outer_box();
    let tests = vec![
        Test { cond: Condition::Cone, nodes: box_nodes(cone.0, cone.1, n), rel: Rel::Ge, coeff: 0.0 },
        Test { cond: Condition::Condition1Inner, nodes: box_nodes(inner.0, inner.1, n), rel: Rel::Ge, coeff: big },
        Test { cond: Condition::Condition1Outer, nodes: box_nodes(outer.0, outer.1, n), rel: Rel::Le, coeff: small },
        Test { cond: Condition::Condition2Inner, nodes: box_nodes(inner.0, inner.1, n), rel: Rel::Le, coeff: small },
        Test { cond: Condition::Condition2Outer, nodes: box_nodes(outer.0, outer.1, n), rel: Rel::Ge, coeff: big },
    ];
    report(p, b, tests, n, SignKind::Positive)
}

/// Mirror of [`krasnoselskii_check`] on the negative boxes.
pub fn krasnoselskii_check_negative(p: &NonlinearProblem, b: &ConeBounds, sample_n: usize) -> ExistenceReport {
    let n = sample_n.max(2);
    let (big, small) = thresholds(p, b);
    let neg = |(lo, hi): (f64, f64)| -> Vec<f64> { box_nodes(lo, hi, n).into_iter().map(|x| -x).collect() };
    let tests = vec![
        Test { cond: Condition::Cone, nodes: neg(b.cone_box()), rel: Rel::Le, coeff: 0.0 },
        Test { cond: Condition::Condition1Inner, nodes: neg(b.inner_box()), rel: Rel::Le, coeff: big },
        Test { cond: Condition::Condition1Outer, nodes: neg(b.outer_box()), rel: Rel::Ge, coeff: small },
        Test { cond: Condition::Condition2Inner, nodes: neg(b.inner_box()), rel: Rel::Ge, coeff: small },
        Test { cond: Condition::Condition2Outer, nodes: neg(b.outer_box()), rel: Rel::Le, coeff: big },
    ];
    report(p, b, tests, n, SignKind::Negative)
}

// ---------------------------------------------------------------------------
// Fixed-point solver

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Weight on the new iterate.
    pub damping: f64,
    pub grid_n: usize,
    pub gauss_order: usize,
    /// Switch to Newton when damped iteration stalls or leaves the cone box.
    pub newton_fallback: bool,
    /// Cone box `[lo, hi]` the iterates are expected to stay in.
    pub cone: Option<(f64, f64)>,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 500,
            damping: 0.5,
            grid_n: 401,
            gauss_order: 8,
            newton_fallback: true,
            cone: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Picard,
    Newton,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardReport {
    pub method: SolveMethod,
    pub iterations: usize,
    pub newton_iterations: usize,
    pub final_damping: f64,
    /// `sup |T v - v|` at the returned iterate.
    pub fixed_point_residual: f64,
    /// `sup |v'' - f|` by finite differences away from jumps of `v''`.
    pub ode_residual: f64,
    pub periodicity_error: f64,
    pub derivative_periodicity_error: f64,
    /// Smallest grid value over the iterates leading to the returned solution.
    pub min_iterate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardSolution {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub report: PicardReport,
}

/// Symmetric grid on `[-T, T]` with `n` (odd) points that contains every integer.
pub fn symmetric_grid(half_period: f64, n: usize) -> Result<Vec<f64>> {
    if n < 9 || n % 2 == 0 {
        return Err(Error::InvalidParameter(format!("grid size {n} must be odd and >= 9")));
    }
    let half = (n - 1) / 2;
    let h = half_period / half as f64;
    let mut pos: Vec<f64> = (0..=half).map(|i| if i == half { half_period } else { h * i as f64 }).collect();
    let top = floor_trunc(half_period);
    for k in 1..=top {
        let kf = k as f64;
        if (half_period - kf).abs() < 1e-12 {
            continue;
        }
        let i = (kf / h).round() as usize;
        if i > 0 && i < half && (pos[i] - kf).abs() < 0.5 * h {
            pos[i] = kf;
        } else {
            pos.push(kf);
        }
    }
    pos.sort_by(|a, b| a.total_cmp(b));
    pos.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
    let mut grid: Vec<f64> = pos.iter().rev().map(|&x| -x).collect();
    grid.pop();
    grid.extend_from_slice(&pos);
    Ok(grid)
}

#[derive(Debug, Clone, Copy)]
struct Slot {
    node: usize,
    /// Where `f` is evaluated: the node, or its limit from inside the panel.
    t_eval: f64,
    mirror: usize,
    label_node: usize,
}

/// Nystrom discretisation of `v -> int H(t, s) sigma(s) ds` on a symmetric grid.
struct Nystrom {
    t: Vec<f64>,
    slots: Vec<Slot>,
    /// `grid x slots`
    w: DMatrix<f64>,
}

fn node_index(t: &[f64], x: f64) -> Option<usize> {
    t.iter().position(|&y| (y - x).abs() < 1e-12)
}

fn lagrange(xs: &[f64], j: usize, s: f64) -> f64 {
    xs.iter()
        .enumerate()
        .filter(|&(k, _)| k != j)
        .map(|(_, &xk)| (s - xk) / (xs[j] - xk))
        .product()
}

impl Nystrom {
    fn build(k: &CompositeKernel, grid_n: usize, gauss_order: usize) -> Result<Self> {
        let t = symmetric_grid(k.half_period(), grid_n)?;
        let part: &IntervalPartition = k.partition();
        let rule = Rule::new(gauss_order)?;
        let n = t.len();
        let mut slots = Vec::new();
        // (first slot, first node, last node) per panel
        let mut panels = Vec::new();
        for (&label, &(lo, hi)) in part.labels.iter().zip(&part.intervals) {
            let a = node_index(&t, lo).ok_or_else(|| Error::InvalidParameter(format!("panel end {lo} not a node")))?;
            let b = node_index(&t, hi).ok_or_else(|| Error::InvalidParameter(format!("panel end {hi} not a node")))?;
            let label_node = node_index(&t, label as f64)
                .ok_or_else(|| Error::InvalidParameter(format!("label {label} not a node")))?;
            panels.push((slots.len(), a, b));
            for node in a..=b {
                let mut t_eval = t[node];
                if floor_trunc(t_eval) != label {
                    let inward = if node == a { 1.0 } else { -1.0 };
                    t_eval += inward * 1e-13 * t_eval.abs().max(1.0);
                }
                slots.push(Slot { node, t_eval, mirror: n - 1 - node, label_node });
            }
        }
        // Gauss points of every sub-interval, with the stencil they interpolate from.
        let mut gs = Vec::new();
        let mut gw = Vec::new();
        let mut stencil = Vec::new();
        for &(first_slot, a, b) in &panels {
            let len = b - a + 1;
            let width = len.min(4);
            for q in a..b {
                let start = (q.saturating_sub(1)).clamp(a, b + 1 - width);
                let (lo, hi) = (t[q], t[q + 1]);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for &(x, w) in rule.pairs() {
                    gs.push(mid + half * x);
                    gw.push(half * w);
                    stencil.push((first_slot + start - a, start, width));
                }
            }
        }
        let hv = k.eval_grid(&t, &gs)?;
        let ng = gs.len();
        let mut w = DMatrix::<f64>::zeros(n, slots.len());
        for (g, (&s, &wt)) in gs.iter().zip(&gw).enumerate() {
            let (slot0, node0, width) = stencil[g];
            let xs = &t[node0..node0 + width];
            let basis: Vec<f64> = (0..width).map(|j| wt * lagrange(xs, j, s)).collect();
            for i in 0..n {
                let h = hv[i * ng + g];
                for (j, bj) in basis.iter().enumerate() {
                    w[(i, slot0 + j)] += h * bj;
                }
            }
        }
        Ok(Self { t, slots, w })
    }

    fn sigma(&self, p: &NonlinearProblem, v: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.slots.len(),
            self.slots.iter().map(|s| p.shifted(s.t_eval, v[s.node], v[s.mirror], v[s.label_node])),
        )
    }

    fn apply(&self, p: &NonlinearProblem, v: &[f64]) -> Vec<f64> {
        (&self.w * self.sigma(p, v)).iter().copied().collect()
    }

    /// Jacobian of `v - T v`.
    fn jacobian(&self, p: &NonlinearProblem, v: &[f64]) -> DMatrix<f64> {
        let n = self.t.len();
        let mut j = DMatrix::<f64>::identity(n, n);
        for (c, s) in self.slots.iter().enumerate() {
            let (t, x, y, z) = (s.t_eval, v[s.node], v[s.mirror], v[s.label_node]);
            let d = |f: &dyn Fn(f64) -> f64, at: f64| {
                let h = 1e-6 * at.abs().max(1.0);
                (f(at + h) - f(at - h)) / (2.0 * h)
            };
            let dx = d(&|a| p.shifted(t, a, y, z), x);
            let dy = d(&|a| p.shifted(t, x, a, z), y);
            let dz = d(&|a| p.shifted(t, x, y, a), z);
            let col = self.w.column(c);
            for (node, g) in [(s.node, dx), (s.mirror, dy), (s.label_node, dz)] {
                if g != 0.0 {
                    for i in 0..n {
                        j[(i, node)] -= col[i] * g;
                    }
                }
            }
        }
        j
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn min_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// `v''` jumps where `[t]` does: at the nonzero integers.
fn jump_inside(lo: f64, hi: f64) -> bool {
    let mut k = lo.floor() + 1.0;
    while k < hi {
        if k != 0.0 && k > lo {
            return true;
        }
        k += 1.0;
    }
    false
}

/// Weights of the `order`-th derivative at `x0` from values at `xs`.
fn fd_weights(xs: &[f64], x0: f64, order: usize) -> Vec<f64> {
    let n = xs.len();
    let h = xs.iter().map(|x| (x - x0).abs()).fold(0.0, f64::max);
    let mut a = DMatrix::<f64>::zeros(n, n);
    let mut fact = 1.0;
    for k in 0..n {
        if k > 0 {
            fact *= k as f64;
        }
        for (j, &x) in xs.iter().enumerate() {
            a[(k, j)] = ((x - x0) / h).powi(k as i32) / fact;
        }
    }
    let mut rhs = DVector::<f64>::zeros(n);
    rhs[order] = 1.0;
    let w = a.lu().solve(&rhs).expect("distinct stencil nodes");
    w.iter().map(|w| w / h.powi(order as i32)).collect()
}

fn apply_weights(w: &[f64], v: &[f64]) -> f64 {
    w.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// `sup |v'' - f|` over interior nodes by 5-point differences, with stencils that stay
/// on one side of the jumps of `v''` at the nonzero integers.
pub fn ode_residual(p: &NonlinearProblem, t: &[f64], v: &[f64]) -> f64 {
    let n = t.len();
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        if jump_inside(t[i] - 1e-12, t[i] + 1e-12) {
            continue;
        }
        let start = [2usize, 1, 3, 0, 4]
            .iter()
            .filter(|&&back| back <= i && i + 4 - back < n)
            .map(|&back| i - back)
            .find(|&s| !jump_inside(t[s], t[s + 4]));
        let Some(s) = start else { continue };
        let d2 = apply_weights(&fd_weights(&t[s..s + 5], t[i], 2), &v[s..s + 5]);
        let lab = floor_trunc(t[i]) as f64;
        let z = v[node_index(t, lab).expect("integers are grid nodes")];
        let r = (d2 - p.f(t[i], v[i], v[n - 1 - i], z)).abs();
        worst = worst.max(r);
    }
    worst
}

/// `(|v(T) - v(-T)|, |v'(T) - v'(-T)|)` with one-sided differences.
pub fn periodicity_errors(t: &[f64], v: &[f64]) -> (f64, f64) {
    let n = t.len();
    let left = apply_weights(&fd_weights(&t[..5], t[0], 1), &v[..5]);
    let right = apply_weights(&fd_weights(&t[n - 5..], t[n - 1], 1), &v[n - 5..]);
    ((v[n - 1] - v[0]).abs(), (right - left).abs())
}

/// Grid on which [`picard_solve`] works, for building initial guesses.
pub fn picard_grid(k: &CompositeKernel, opts: &PicardOptions) -> Result<Vec<f64>> {
    symmetric_grid(k.half_period(), opts.grid_n)
}

/// Damped fixed-point iteration `v <- (1 - d) v + d T v` with
/// `T v = int H(t, s) [f + m v(-s) + M v([s])] ds`, falling back to Newton on
/// `v - T v = 0` when the damped iteration stalls or leaves the cone box.
pub fn picard_solve(
    p: &NonlinearProblem,
    k: &CompositeKernel,
    v0: &[f64],
    opts: &PicardOptions,
) -> Result<PicardSolution> {
    if (p.m, p.big_m, p.half_period) != (k.m(), k.big_m(), k.half_period()) {
        return Err(Error::InvalidParameter("problem and kernel parameters differ".into()));
    }
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(Error::InvalidParameter(format!("damping {} not in (0, 1]", opts.damping)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance {} must be positive", opts.tol)));
    }
    let ny = Nystrom::build(k, opts.grid_n, opts.gauss_order)?;
    let n = ny.t.len();
    if v0.len() != n {
        return Err(Error::InvalidParameter(format!(
            "initial guess has {} values, grid has {n}",
            v0.len()
        )));
    }
    let in_cone = |v: &[f64]| match opts.cone {
        Some((lo, hi)) => v.iter().all(|&x| x >= lo * (1.0 - 1e-9) && x <= hi * (1.0 + 1e-9)),
        None => true,
    };
    let mut warnings = Vec::new();
    let mut v = v0.to_vec();
    let mut theta = opts.damping;
    let mut prev = f64::INFINITY;
    let mut min_iterate = min_of(&v);
    let mut last = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iter {
        let tv = ny.apply(p, &v);
        iterations += 1;
        let res = sup_diff(&tv, &v);
        last = res;
        if !res.is_finite() {
            warnings.push(format!("non-finite iterate at step {iterations}"));
            break;
        }
        if res < opts.tol {
            converged = true;
            break;
        }
        if res > prev {
            theta *= 0.5;
            if theta < 1.0 / 1024.0 {
                warnings.push(format!("damping exhausted at step {iterations} (update {res:e})"));
                break;
            }
        }
        prev = res;
        for (vi, ti) in v.iter_mut().zip(&tv) {
            *vi += theta * (ti - *vi);
        }
        if !in_cone(&v) {
            warnings.push(format!("ConeEscape: iterate {iterations} left the cone box (min {:e})", min_of(&v)));
            if opts.newton_fallback {
                break;
            }
        }
        min_iterate = min_iterate.min(min_of(&v));
    }
    let mut method = SolveMethod::Picard;
    let mut newton_iterations = 0;
    if !converged || !in_cone(&v) {
        if !opts.newton_fallback {
            return Err(Error::NonConvergence { iterations, last_update: last });
        }
        method = SolveMethod::Newton;
        v = v0.to_vec();
        min_iterate = min_of(&v);
        for _ in 0..50 {
            newton_iterations += 1;
            let tv = ny.apply(p, &v);
            let rhs = DVector::from_iterator(n, tv.iter().zip(&v).map(|(a, b)| a - b));
            let step = ny
                .jacobian(p, &v)
                .lu()
                .solve(&rhs)
                .ok_or_else(|| Error::NonUniqueSolution("singular Newton system".into()))?;
            for (vi, d) in v.iter_mut().zip(step.iter()) {
                *vi += d;
            }
            min_iterate = min_iterate.min(min_of(&v));
            last = step.amax();
            if !last.is_finite() {
                break;
            }
            if last < opts.tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence { iterations: iterations + newton_iterations, last_update: last });
        }
        if !in_cone(&v) {
            warnings.push("ConeEscape: Newton solution lies outside the cone box".into());
        }
    }
    let fixed_point_residual = sup_diff(&ny.apply(p, &v), &v);
    let (periodicity_error, derivative_periodicity_error) = periodicity_errors(&ny.t, &v);
    let report = PicardReport {
        method,
        iterations,
        newton_iterations,
        final_damping: theta,
        fixed_point_residual,
        ode_residual: ode_residual(p, &ny.t, &v),
        periodicity_error,
        derivative_periodicity_error,
        min_iterate,
        warnings,
    };
    Ok(PicardSolution { t: ny.t, v, report })
}

// ---------------------------------------------------------------------------
// Stationary Schrodinger model

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    #[serde(default = "one")]
    pub mp: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(rename = "T")]
    pub half_period: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
}

fn one() -> f64 {
    1.0
}

impl SchrodingerParams {
    /// `m = -2 beta m_p / hbar^2`
    pub fn m(&self) -> f64 {
        -2.0 * self.beta * self.mp / (self.hbar * self.hbar)
    }
}

/// Closed-interval window `[lo, hi]` for `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub lo: f64,
    pub hi: f64,
}

impl Window {
    pub fn contains(&self, a: f64) -> bool {
        a >= self.lo && a <= self.hi
    }
}

/// Sufficient `alpha` conditions for the Schrodinger problem with `M = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaWindows {
    #[serde(rename = "L")]
    pub big_l: f64,
    pub l: f64,
    /// `alpha >= mu L^2 / (l^2 r^2)`
    pub cone_min: f64,
    pub cond1: Window,
    /// Window obtained from condition 2 of the cone theorem.
    pub cond2: Window,
    /// Condition-2 window in the form usually quoted, with the two `L` terms exchanged.
    pub cond2_quoted: Window,
}

impl AlphaWindows {
    /// Largest interval of `alpha` meeting the cone bound and the condition-2 window.
    pub fn feasible(&self) -> Option<Window> {
        let lo = self.cone_min.max(self.cond2.lo).max(self.cond2_quoted.lo);
        let hi = self.cond2.hi.min(self.cond2_quoted.hi);
        (lo <= hi).then_some(Window { lo, hi })
    }
}

fn schrodinger_kernel(beta: f64, mp: f64, hbar: f64, half_period: f64) -> Result<CompositeKernel> {
    let bound = (std::f64::consts::PI / (2.0 * half_period)).powi(2) * hbar * hbar / (2.0 * mp);
    if !(beta <= 0.0 && beta >= -bound) {
        return Err(Error::InvalidRegion(format!(
            "beta = {beta} outside [-{bound}, 0] for T = {half_period}"
        )));
    }
    if beta == 0.0 {
        return Err(Error::InvalidRegion("beta = 0 gives m = M = 0, no Green's function".into()));
    }
    let m = -2.0 * beta * mp / (hbar * hbar);
    CompositeKernel::new(m, 0.0, half_period, &QuadConfig::default())
}

pub fn alpha_windows(beta: f64, mu: f64, mp: f64, hbar: f64, half_period: f64, r: f64, big_r: f64) -> Result<AlphaWindows> {
    let k = schrodinger_kernel(beta, mp, hbar, half_period)?;
    let (big_l, l) = compute_l_l(&k, 101)?;
    Ok(windows_for(mu, mp, hbar, half_period, r, big_r, big_l, l))
}

#[allow(clippy::too_many_arguments)]
fn windows_for(mu: f64, mp: f64, hbar: f64, t: f64, r: f64, big_r: f64, big_l: f64, l: f64) -> AlphaWindows {
    let a = hbar * hbar * big_l / (4.0 * mp * t * l * l) + mu;
    let b = hbar * hbar / (4.0 * mp * t * big_l) + mu;
    let q = (big_l / l).powi(2);
    AlphaWindows {
        big_l,
        l,
        cone_min: mu * q / (r * r),
        cond1: Window { lo: q / (r * r) * a, hi: b / (q * big_r * big_r) },
        cond2: Window { lo: a / (big_r * big_r), hi: b / (r * r) },
        cond2_quoted: Window { lo: b / (big_r * big_r), hi: a / (r * r) },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SchrodingerOutcome {
    pub params: SchrodingerParams,
    pub m: f64,
    pub windows: AlphaWindows,
    pub prescreen_ok: bool,
    pub existence: ExistenceReport,
    pub solution: PicardSolution,
}

/// Checks the cone conditions for the Schrodinger model and computes the solution
/// starting from `v = r`.
pub fn schrodinger_demo(params: &SchrodingerParams, sample_n: usize, opts: &PicardOptions) -> Result<SchrodingerOutcome> {
    let k = schrodinger_kernel(params.beta, params.mp, params.hbar, params.half_period)?;
    let (big_l, l) = compute_l_l(&k, 101)?;
    let bounds = ConeBounds::new(params.r, params.big_r, big_l, l)?;
    let windows = windows_for(
        params.mu,
        params.mp,
        params.hbar,
        params.half_period,
        params.r,
        params.big_r,
        big_l,
        l,
    );
    let prescreen_ok = params.alpha >= windows.cone_min
        && (windows.cond1.contains(params.alpha) || windows.cond2.contains(params.alpha));
    let p = NonlinearProblem::schrodinger(params, &k)?;
    let existence = krasnoselskii_check(&p, &bounds, sample_n);
    let grid = picard_grid(&k, opts)?;
    let v0 = vec![params.r; grid.len()];
    let opts = PicardOptions { cone: Some(bounds.cone_box()), ..*opts };
    let solution = picard_solve(&p, &k, &v0, &opts)?;
    Ok(SchrodingerOutcome {
        params: *params,
        m: params.m(),
        windows,
        prescreen_ok,
        existence,
        solution,
    })
}

/// Midpoint of the feasible condition-2 window, if any.
pub fn suggest_alpha(beta: f64, mu: f64, mp: f64, hbar: f64, half_period: f64, r: f64, big_r: f64) -> Result<f64> {
    let w = alpha_windows(beta, mu, mp, hbar, half_period, r, big_r)?;
    w.feasible()
        .map(|w| 0.5 * (w.lo + w.hi))
        .ok_or_else(|| Error::NotFound(format!("no alpha satisfies the cone bound and condition 2 for r = {r}, R = {big_r}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kernel(m: f64, big_m: f64, t: f64) -> CompositeKernel {
        CompositeKernel::new(m, big_m, t, &QuadConfig::default()).unwrap()
    }

    #[test]
    fn grid_is_symmetric_with_integers() {
        for &(t, n) in &[(0.8, 401), (1.6, 401), (2.5, 101), (2.0, 41)] {
            let g = symmetric_grid(t, n).unwrap();
            let len = g.len();
            for i in 0..len {
                assert_eq!(g[i], -g[len - 1 - i]);
            }
            for k in -(t as i64)..=(t as i64) {
                assert!(node_index(&g, k as f64).is_some(), "T={t} k={k}");
            }
            assert!(g.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn constant_problem_in_two_steps() {
        let k = kernel(1.0, 0.5, 0.8);
        let p = NonlinearProblem::constant_shift(3.0, &k).unwrap();
        let opts = PicardOptions { damping: 1.0, ..Default::default() };
        let g = picard_grid(&k, &opts).unwrap();
        let sol = picard_solve(&p, &k, &vec![0.0; g.len()], &opts).unwrap();
        assert!(sol.report.iterations <= 2);
        assert_eq!(sol.report.method, SolveMethod::Picard);
        for &x in &sol.v {
            assert!((x - 2.0).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn manufactured_recovered() {
        for &(m, big_m, t) in &[(1.0, 0.5, 0.8), (0.5, 0.2, 1.6), (0.0, 0.4, 1.6)] {
            let k = kernel(m, big_m, t);
            let (a, b) = (2.0, 0.5);
            let p = NonlinearProblem::manufactured(a, b, &k).unwrap();
            let opts = PicardOptions { damping: 1.0, tol: 1e-9, ..Default::default() };
            let g = picard_grid(&k, &opts).unwrap();
            let sol = picard_solve(&p, &k, &vec![1.0; g.len()], &opts).unwrap();
            let err = sol
                .t
                .iter()
                .zip(&sol.v)
                .map(|(&t, &v)| (v - manufactured_exact(a, b, k.half_period(), t)).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "m={m} M={big_m} T={t}: {err:e}");
            assert!(sol.report.ode_residual < 1e-6, "{:e}", sol.report.ode_residual);
        }
    }

    #[test]
    fn l_and_big_l() {
        let k = kernel(1.0, 0.0, 0.8);
        let (big_l, l) = compute_l_l(&k, 101).unwrap();
        assert!(big_l > l && l > 0.0);
        let (big_l2, l2) = compute_l_l(&k, 201).unwrap();
        assert!((big_l - big_l2).abs() < 1e-6 && (l - l2).abs() < 1e-6);
        assert!(compute_l_l(&kernel(-1.0, 0.0, 0.8), 101).is_err());
    }

    #[test]
    fn constant_problem_existence() {
        let k = kernel(1.0, 0.5, 0.8);
        let (big_l, l) = compute_l_l(&k, 101).unwrap();
        let c = 3.0;
        let p = NonlinearProblem::constant_shift(c, &k).unwrap();
        let t = 0.8;
        let b = ConeBounds::new(0.9 * 2.0 * t * l * l * c / big_l, 1.1 * 2.0 * t * big_l * c, big_l, l).unwrap();
        let rep = krasnoselskii_check(&p, &b, 7);
        assert!(rep.cone_ok && rep.cond1_ok && !rep.cond2_ok);
        assert_eq!(rep.conclusion, Conclusion::PositiveSolutionExists);

        let q = NonlinearProblem::constant_shift(-c, &k).unwrap();
        let neg = krasnoselskii_check_negative(&q, &b, 7);
        assert_eq!(neg.conclusion, Conclusion::NegativeSolutionExists);
        assert_eq!(krasnoselskii_check(&q, &b, 7).conclusion, Conclusion::Inconclusive);
    }

    #[test]
    fn cone_violation_reported() {
        let k = kernel(1.0, 0.0, 0.8);
        let (big_l, l) = compute_l_l(&k, 101).unwrap();
        let b = ConeBounds::new(1.0, 10.0, big_l, l).unwrap();
        let f: Nonlinearity = Arc::new(|t, _, y, _| if t == 0.0 { -5.0 - y } else { 1.0 - y });
        let p = NonlinearProblem::new("bad", f, &k).unwrap();
        let rep = krasnoselskii_check(&p, &b, 5);
        assert!(!rep.cone_ok);
        assert_eq!(rep.conclusion, Conclusion::Inconclusive);
        let v = rep.violating_points.iter().find(|v| v.condition == Condition::Cone).unwrap();
        assert_eq!(v.t, 0.0);
        assert!((v.value + 5.0).abs() < 1e-12);
    }

    #[test]
    fn schrodinger_positive_solution() {
        let (beta, mu, t, r, big_r) = (-0.1, 0.05, 0.8, 1.0, 10.0);
        let alpha = suggest_alpha(beta, mu, 1.0, 1.0, t, r, big_r).unwrap();
        let params = SchrodingerParams { alpha, beta, mu, mp: 1.0, hbar: 1.0, half_period: t, r, big_r };
        let out = schrodinger_demo(&params, 7, &PicardOptions::default()).unwrap();
        assert!(out.prescreen_ok);
        assert!(out.windows.cond2_quoted.contains(alpha));
        assert_eq!(out.existence.conclusion, Conclusion::PositiveSolutionExists);
        let s = &out.solution;
        assert!(s.report.ode_residual < 1e-5, "{:e}", s.report.ode_residual);
        assert!(s.v.iter().all(|&x| x > 0.0));
        let c = ((mu - beta) / alpha).sqrt();
        assert!(s.v.iter().all(|&x| (x - c).abs() < 1e-8));
        let (lo, _) = ConeBounds::new(r, big_r, out.windows.big_l, out.windows.l).unwrap().cone_box();
        assert!(s.report.min_iterate >= lo);
    }

    #[test]
    fn schrodinger_beta_range() {
        assert!(matches!(alpha_windows(0.1, 0.05, 1.0, 1.0, 0.8, 1.0, 10.0), Err(Error::InvalidRegion(_))));
        assert!(matches!(alpha_windows(-2.0, 0.05, 1.0, 1.0, 0.8, 1.0, 10.0), Err(Error::InvalidRegion(_))));
        assert!(alpha_windows(-1.9, 0.05, 1.0, 1.0, 0.8, 1.0, 10.0).is_ok());
    }

    #[test]
    fn condition_one_window_empty() {
        let w = alpha_windows(-0.1, 0.05, 1.0, 1.0, 0.8, 1.0, 10.0).unwrap();
        assert!(w.cond1.lo > w.cond1.hi);
        assert!(w.cond2.lo >= w.cond2_quoted.lo && w.cond2.hi <= w.cond2_quoted.hi);
    }
}
