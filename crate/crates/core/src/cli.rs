//! Command-line front end. Curves go out as CSV with a `#` header, reports as JSON.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::composite::{eval_closed_tle1, CompositeKernel};
use crate::eigen::{
    dirichlet_eig_general, dirichlet_eig_m0, lambda_s0_curve, lambda_via_spectral_radius, table_lambda,
    DirichletProblem, EigenResult,
};
use crate::nonlinear::{
    compute_l_l, krasnoselskii_check, krasnoselskii_check_negative, picard_grid, picard_solve, schrodinger_demo,
    suggest_alpha, ConeBounds, NonlinearProblem, PicardOptions, PicardSolution, SchrodingerParams,
};
use crate::quadrature::QuadConfig;
use crate::reflection::{cbar_residual, solve_cbar, ReflectionKernel};
use crate::region::{
    alpha2_equation, alpha3_equation, candidate_curve, closed_form_curve, scan_region, solve_alpha2, solve_alpha3,
    RegionConfig,
};
use crate::Error;

pub const THREADS_ENV: &str = "GREENS_REFLECT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "greens-reflect", version, about = "Green's functions with reflection and piecewise constant arguments")]
pub struct Cli {
    /// Worker threads for scans (falls back to GREENS_REFLECT_THREADS, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for randomly placed verification points.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reflection kernel G_m.
    #[command(subcommand)]
    Green(GreenCmd),
    /// Composite kernel H_{m,M}.
    #[command(subcommand)]
    Composite(CompositeCmd),
    /// Constant-sign regions in the (m, M) plane.
    #[command(subcommand)]
    Region(RegionCmd),
    /// Dirichlet eigenvalues.
    #[command(subcommand)]
    Eigen(EigenCmd),
    /// Nonlinear solver.
    #[command(subcommand)]
    Solve(SolveCmd),
    /// Cone-condition checks.
    #[command(subcommand)]
    Kras(KrasCmd),
    /// c-bar, alpha_2 and alpha_3 with residuals.
    Constants,
}

#[derive(Debug, Args)]
pub struct Square {
    #[arg(long, allow_hyphen_values = true)]
    pub m: f64,
    #[arg(long = "T")]
    pub half_period: f64,
}

#[derive(Debug, Subcommand)]
pub enum GreenCmd {
    /// G_m on an n x n grid (or at one point).
    Eval {
        #[command(flatten)]
        sq: Square,
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, allow_hyphen_values = true, requires = "s")]
        t: Option<f64>,
        #[arg(long, allow_hyphen_values = true, requires = "t")]
        s: Option<f64>,
    },
    /// Symmetry, jump, ODE, periodicity, normalisation and sign checks.
    Verify {
        #[command(flatten)]
        sq: Square,
        #[arg(long, default_value_t = 41)]
        grid: usize,
        #[arg(long, default_value_t = 50)]
        random: usize,
    },
}

#[derive(Debug, Args)]
pub struct Pair {
    #[arg(long, allow_hyphen_values = true)]
    pub m: f64,
    #[arg(long = "M", allow_hyphen_values = true)]
    pub big_m: f64,
    #[arg(long = "T")]
    pub half_period: f64,
}

#[derive(Debug, Subcommand)]
pub enum CompositeCmd {
    /// H on an n x n grid, with the kernel metadata in the header.
    Build {
        #[command(flatten)]
        p: Pair,
        #[arg(long, default_value_t = 41)]
        grid: usize,
    },
    /// Green's-function property residuals of the built kernel.
    Verify {
        #[command(flatten)]
        p: Pair,
        #[arg(long, default_value_t = 21)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct MRange {
    #[arg(long = "T")]
    pub half_period: f64,
    /// Default: -0.95 (pi/T)^2.
    #[arg(long, allow_hyphen_values = true)]
    pub m_min: Option<f64>,
    /// Default: 0.95 (pi/2T)^2.
    #[arg(long, allow_hyphen_values = true)]
    pub m_max: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

impl MRange {
    fn grid(&self) -> Result<Vec<f64>, CliError> {
        let t = self.half_period;
        if !(t > 0.0) {
            return Err(CliError::config(format!("T = {t} must be positive")));
        }
        let lo = self.m_min.unwrap_or(-0.95 * (std::f64::consts::PI / t).powi(2));
        let hi = self.m_max.unwrap_or(0.95 * (std::f64::consts::FRAC_PI_2 / t).powi(2));
        if !(hi > lo) || self.samples < 2 {
            return Err(CliError::config(format!("empty m range [{lo}, {hi}] / {} samples", self.samples)));
        }
        let n = self.samples;
        Ok((0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect())
    }
}

#[derive(Debug, Subcommand)]
pub enum RegionCmd {
    /// Bisection boundaries of both constant-sign regions over an m grid.
    Scan {
        #[command(flatten)]
        range: MRange,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Also report the candidate-point curve and its deviation.
        #[arg(long)]
        candidates: bool,
    },
    /// Closed-form boundaries (T <= 1).
    ClosedForm {
        #[command(flatten)]
        range: MRange,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum EigenSolver {
    Determinant,
    Spectral,
}

#[derive(Debug, Subcommand)]
pub enum EigenCmd {
    /// First eigenvalue lambda^{s0} of the problem cut at s0.
    Dirichlet {
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        #[arg(long = "T")]
        half_period: f64,
        /// Default: T.
        #[arg(long)]
        s0: Option<f64>,
        #[arg(long, value_enum, default_value_t = EigenSolver::Determinant)]
        method: EigenSolver,
    },
    /// lambda_1(T) over a T grid, or lambda^{s0} over s0 in [0, T] with --s0-curve.
    LambdaCurve {
        #[arg(long, default_value_t = 0.2)]
        t_min: f64,
        #[arg(long, default_value_t = 5.0)]
        t_max: f64,
        #[arg(long, default_value_t = 49)]
        samples: usize,
        /// Sweep s0 at fixed T instead.
        #[arg(long = "s0-curve")]
        s0_curve: bool,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        #[arg(long = "T")]
        half_period: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    ConstantShift,
    Manufactured,
    Schrodinger,
}

#[derive(Debug, Subcommand)]
pub enum SolveCmd {
    /// Fixed-point iteration; writes (t, v).
    Picard {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        #[arg(long)]
        params: PathBuf,
        /// JSON report path.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum KrasCmd {
    /// Samples the cone inequality and conditions 1 and 2; writes the report as JSON.
    Check {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        #[arg(long)]
        params: PathBuf,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "R")]
        big_r: Option<f64>,
        #[arg(long, default_value_t = 11)]
        sample_n: usize,
        /// Check for a negative solution instead.
        #[arg(long)]
        negative: bool,
    },
}

/// Contents of `params.json`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    pub m: Option<f64>,
    #[serde(rename = "M")]
    pub big_m: Option<f64>,
    #[serde(rename = "T")]
    pub half_period: Option<f64>,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub mu: Option<f64>,
    pub mp: Option<f64>,
    pub hbar: Option<f64>,
    pub r: Option<f64>,
    #[serde(rename = "R")]
    pub big_r: Option<f64>,
    pub solver: Option<PicardOptions>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        Self { code: 2, kind: "config", message: message.into() }
    }

    fn failed(message: impl Into<String>) -> Self {
        Self { code: 1, kind: "invariant", message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_)
            | Error::InvalidRegion(_)
            | Error::OutOfDomain { .. }
            | Error::EigenvalueResonance { .. }
            | Error::NonUniqueSolution(_) => 2,
            _ => 1,
        };
        Self { code, kind: if code == 2 { "config" } else { "numerical" }, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { code: 2, kind: "io", message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn check(name: &'static str, value: f64, threshold: f64) -> Check {
    Check { name, value, threshold, pass: value.is_finite() && value < threshold }
}

fn flag(name: &'static str, ok: bool) -> Check {
    Check { name, value: if ok { 0.0 } else { 1.0 }, threshold: 0.5, pass: ok }
}

/// What a command produced.
enum Output {
    Csv { header: Vec<String>, columns: Vec<&'static str>, rows: Vec<Vec<String>> },
    Json(Value),
}

struct Context {
    command_line: String,
    seed: u64,
}

fn fmt_num(x: f64) -> String {
    format!("{x:.17e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

fn render(ctx: &Context, out: Output) -> String {
    match out {
        Output::Csv { header, columns, rows } => {
            let mut s = String::new();
            let _ = writeln!(s, "# greens-reflect {}", env!("CARGO_PKG_VERSION"));
            let _ = writeln!(s, "# command: {}", ctx.command_line);
            let _ = writeln!(s, "# seed: {}", ctx.seed);
            for h in header {
                let _ = writeln!(s, "# {h}");
            }
            let _ = writeln!(s, "{}", columns.join(","));
            for r in rows {
                let _ = writeln!(s, "{}", r.join(","));
            }
            s
        }
        Output::Json(v) => {
            let wrapped = json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": ctx.command_line,
                "seed": ctx.seed,
                "result": v,
            });
            let mut s = serde_json::to_string_pretty(&wrapped).expect("json values serialise");
            s.push('\n');
            s
        }
    }
}

fn tolerances(q: &QuadConfig) -> String {
    format!("tolerances: quad order {} tol {:e} max panels {}", q.order, q.tol, q.max_panels)
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()
}

fn grid_rows(ts: &[f64], f: impl Fn(f64, f64) -> CliResult<f64>) -> CliResult<Vec<Vec<String>>> {
    let mut rows = Vec::with_capacity(ts.len() * ts.len());
    for &t in ts {
        for &s in ts {
            rows.push(vec![fmt_num(t), fmt_num(s), fmt_num(f(t, s)?)]);
        }
    }
    Ok(rows)
}

fn green(cmd: &GreenCmd, seed: u64) -> CliResult<(Output, bool)> {
    let q = QuadConfig::default();
    match cmd {
        GreenCmd::Eval { sq, grid, t, s } => {
            let k = ReflectionKernel::new(sq.m, sq.half_period)?;
            let rows = match (t, s) {
                (Some(t), Some(s)) => vec![vec![fmt_num(*t), fmt_num(*s), fmt_num(k.eval(*t, *s)?)]],
                _ => {
                    if *grid < 2 {
                        return Err(CliError::config("grid must be at least 2"));
                    }
                    let ts = linspace(-sq.half_period, sq.half_period, *grid);
                    grid_rows(&ts, |t, s| Ok(k.eval(t, s)?))?
                }
            };
            let header = vec![format!("m = {}, T = {}", sq.m, sq.half_period), format!("sign: {:?}", k.sign_classification())];
            Ok((Output::Csv { header, columns: vec!["t", "s", "G"], rows }, true))
        }
        GreenCmd::Verify { sq, grid, random } => {
            let k = ReflectionKernel::new(sq.m, sq.half_period)?;
            let d = k.certify(*grid, *random, seed, &q)?;
            let checks = vec![
                check("symmetry", d.symmetry_error, 1e-12),
                check("diagonal_jump", d.jump_error, 1e-10),
                check("ode_residual", d.ode_residual, 1e-4),
                check("periodicity", d.periodicity_error, 1e-12),
                check("derivative_periodicity", d.derivative_periodicity_error, 1e-10),
                check("integral_one_over_m", d.integral_error, 1e-9),
                flag("sign_matches_classification", d.sign_consistent),
            ];
            let pass = checks.iter().all(|c| c.pass);
            Ok((Output::Json(json!({ "m": sq.m, "T": sq.half_period, "diagnostics": d, "checks": checks, "pass": pass })), pass))
        }
    }
}

fn composite(cmd: &CompositeCmd) -> CliResult<(Output, bool)> {
    let q = QuadConfig::default();
    match cmd {
        CompositeCmd::Build { p, grid } => {
            let k = CompositeKernel::new(p.m, p.big_m, p.half_period, &q)?;
            if *grid < 2 {
                return Err(CliError::config("grid must be at least 2"));
            }
            let ts = linspace(-p.half_period, p.half_period, *grid);
            let vals = k.eval_grid(&ts, &ts)?;
            let mut rows = Vec::with_capacity(vals.len());
            for (i, &t) in ts.iter().enumerate() {
                for (j, &s) in ts.iter().enumerate() {
                    rows.push(vec![fmt_num(t), fmt_num(s), fmt_num(vals[i * ts.len() + j])]);
                }
            }
            let meta = serde_json::to_string(&k.metadata()).expect("metadata serialises");
            let header = vec![tolerances(&q), format!("metadata: {meta}")];
            Ok((Output::Csv { header, columns: vec!["t", "s", "H"], rows }, true))
        }
        CompositeCmd::Verify { p, grid } => {
            let k = CompositeKernel::new(p.m, p.big_m, p.half_period, &q)?;
            let d = k.certify(*grid);
            let target = 1.0 / (p.m + p.big_m);
            let mut integral_error: f64 = 0.0;
            for t in linspace(-p.half_period, p.half_period, 9) {
                integral_error = integral_error.max((k.integral_over_s(t, &q)? - target).abs());
            }
            let mut checks = vec![
                check("ode_residual", d.residual_ode, 1e-4),
                check("ode_residual_s", d.residual_ode_s, 1e-4),
                check("jump", d.jump_error, 1e-5),
                check("periodicity", d.periodicity_error, 1e-8),
                check("derivative_periodicity", d.derivative_periodicity_error, 1e-4),
                check("symmetry", d.symmetry_error, 1e-8),
                check("integral_one_over_m_plus_M", integral_error, 1e-8),
            ];
            if p.half_period <= 1.0 && p.m != 0.0 {
                let ts = linspace(-p.half_period, p.half_period, *grid);
                let vals = k.eval_grid(&ts, &ts)?;
                let mut worst: f64 = 0.0;
                for (i, &t) in ts.iter().enumerate() {
                    for (j, &s) in ts.iter().enumerate() {
                        let c = eval_closed_tle1(p.m, p.big_m, p.half_period, t, s)?;
                        worst = worst.max((c - vals[i * ts.len() + j]).abs());
                    }
                }
                checks.push(check("closed_form_agreement", worst, 1e-9));
            }
            let pass = checks.iter().all(|c| c.pass);
            Ok((
                Output::Json(json!({ "metadata": k.metadata(), "diagnostics": d, "checks": checks, "pass": pass })),
                pass,
            ))
        }
    }
}

fn region(cmd: &RegionCmd) -> CliResult<(Output, bool)> {
    match cmd {
        RegionCmd::Scan { range, grid, tol, candidates } => {
            let ms = range.grid()?;
            let cfg = RegionConfig { grid_n: *grid, tol: *tol, ..Default::default() };
            let scan = scan_region(&ms, range.half_period, &cfg)?;
            let cand = if *candidates { Some(candidate_curve(&ms, range.half_period, &cfg)?) } else { None };
            let mut header = vec![
                format!("T = {}, grid {} x {}, bisection tol {:e}", range.half_period, cfg.grid_n, cfg.grid_n, cfg.tol),
                tolerances(&cfg.quad),
            ];
            let mut columns = vec!["m", "M_pos_upper", "M_neg_lower", "necessary_ok"];
            if let Some(c) = &cand {
                columns.extend(["candidate_pos", "candidate_neg"]);
                header.push(format!(
                    "conjectured candidate-point curve, max deviation from scan: {:e}",
                    crate::region::max_curve_deviation(&scan, c)
                ));
            }
            let mut all_ok = true;
            let rows = scan
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let ok = r.necessary_condition_holds();
                    all_ok &= ok;
                    let mut row = vec![fmt_num(r.m), fmt_opt(r.m_pos_upper), fmt_opt(r.m_neg_lower), ok.to_string()];
                    if let Some(c) = &cand {
                        row.push(fmt_opt(c[i].m_pos_upper));
                        row.push(fmt_opt(c[i].m_neg_lower));
                    }
                    row
                })
                .collect();
            Ok((Output::Csv { header, columns, rows }, all_ok))
        }
        RegionCmd::ClosedForm { range } => {
            if range.half_period > 1.0 {
                return Err(CliError::config("closed-form boundaries are only available for T <= 1"));
            }
            let ms = range.grid()?;
            let curve = closed_form_curve(&ms, range.half_period)?;
            let rows = curve
                .iter()
                .map(|r| vec![fmt_num(r.m), fmt_opt(r.m_pos_upper), fmt_opt(r.m_neg_lower)])
                .collect();
            let header = vec![format!(
                "T = {}, alpha2 = {}, alpha3 = {}",
                range.half_period,
                solve_alpha2(),
                solve_alpha3()
            )];
            Ok((Output::Csv { header, columns: vec!["m", "M_pos_upper", "M_neg_lower"], rows }, true))
        }
    }
}

fn eigen_one(m: f64, t: f64, s0: f64) -> crate::Result<EigenResult> {
    let p = DirichletProblem::new(m, t, s0)?;
    if m == 0.0 {
        dirichlet_eig_m0(t, p.s0)
    } else {
        dirichlet_eig_general(&p)
    }
}

fn eigen(cmd: &EigenCmd) -> CliResult<(Output, bool)> {
    match cmd {
        EigenCmd::Dirichlet { m, half_period, s0, method } => {
            let s0 = s0.unwrap_or(*half_period);
            let r = match method {
                EigenSolver::Determinant => eigen_one(*m, *half_period, s0)?,
                EigenSolver::Spectral => {
                    if *m != 0.0 || s0 != *half_period {
                        return Err(CliError::config("the spectral method handles m = 0, s0 = T only"));
                    }
                    lambda_via_spectral_radius(*half_period, 400)?
                }
            };
            Ok((Output::Json(json!({ "m": m, "T": half_period, "s0": s0, "eigen": r })), true))
        }
        EigenCmd::LambdaCurve { t_min, t_max, samples, s0_curve, m, half_period } => {
            if *s0_curve {
                let t = half_period.ok_or_else(|| CliError::config("--s0-curve needs --T"))?;
                let rows = lambda_s0_curve(*m, t, *samples)
                    .into_iter()
                    .map(|(s0, r)| match r {
                        Ok(r) => Ok(vec![fmt_num(s0), fmt_num(r.lambda), fmt_num(r.residual)]),
                        Err(e) => Err(CliError::from(e)),
                    })
                    .collect::<CliResult<Vec<_>>>()?;
                let header = vec![format!("m = {m}, T = {t}")];
                return Ok((Output::Csv { header, columns: vec!["s0", "lambda", "residual"], rows }, true));
            }
            if !(*t_max > *t_min && *t_min > 0.0) || *samples < 2 {
                return Err(CliError::config("need 0 < t_min < t_max and samples >= 2"));
            }
            let ts = linspace(*t_min, *t_max, *samples);
            let results = crate::eigen::lambda_curve(&ts);
            let mut rows = Vec::new();
            let mut lams = Vec::new();
            for (&t, r) in ts.iter().zip(results) {
                let r = r?;
                lams.push(r.lambda);
                rows.push(vec![fmt_num(t), fmt_num(r.lambda), fmt_opt(table_lambda(t)), fmt_num(r.residual)]);
            }
            let decreasing = lams.windows(2).all(|w| w[1] < w[0]);
            let header = vec![format!("lambda_1 of z'' + M z([t]) = 0 cut at s0 = T; strictly decreasing: {decreasing}")];
            Ok((Output::Csv { header, columns: vec!["T", "lambda", "table", "residual"], rows }, decreasing))
        }
    }
}

fn read_params(path: &Path) -> CliResult<ProblemParams> {
    let text = fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn need(v: Option<f64>, name: &str) -> CliResult<f64> {
    v.ok_or_else(|| CliError::config(format!("params.json is missing \"{name}\"")))
}

fn schrodinger_params(p: &ProblemParams, r: Option<f64>, big_r: Option<f64>) -> CliResult<SchrodingerParams> {
    let beta = need(p.beta, "beta")?;
    let mu = need(p.mu, "mu")?;
    let mp = p.mp.unwrap_or(1.0);
    let hbar = p.hbar.unwrap_or(1.0);
    let t = need(p.half_period, "T")?;
    let r = need(r.or(p.r), "r")?;
    let big_r = need(big_r.or(p.big_r), "R")?;
    let alpha = match p.alpha {
        Some(a) => a,
        None => suggest_alpha(beta, mu, mp, hbar, t, r, big_r)?,
    };
    Ok(SchrodingerParams { alpha, beta, mu, mp, hbar, half_period: t, r, big_r })
}

fn build_problem(kind: ProblemKind, p: &ProblemParams) -> CliResult<(NonlinearProblem, CompositeKernel)> {
    let q = QuadConfig::default();
    match kind {
        ProblemKind::ConstantShift | ProblemKind::Manufactured => {
            let k = CompositeKernel::new(need(p.m, "m")?, need(p.big_m, "M")?, need(p.half_period, "T")?, &q)?;
            let prob = if kind == ProblemKind::ConstantShift {
                NonlinearProblem::constant_shift(need(p.c, "c")?, &k)?
            } else {
                NonlinearProblem::manufactured(need(p.a, "a")?, need(p.b, "b")?, &k)?
            };
            Ok((prob, k))
        }
        ProblemKind::Schrodinger => {
            let s = schrodinger_params(p, None, None)?;
            let k = CompositeKernel::new(s.m(), 0.0, s.half_period, &q)?;
            Ok((NonlinearProblem::schrodinger(&s, &k)?, k))
        }
    }
}

fn solution_rows(sol: &PicardSolution) -> Vec<Vec<String>> {
    sol.t.iter().zip(&sol.v).map(|(&t, &v)| vec![fmt_num(t), fmt_num(v)]).collect()
}

fn solve(cmd: &SolveCmd, ctx: &Context) -> CliResult<(Output, bool)> {
    let SolveCmd::Picard { problem, params, report } = cmd;
    let p = read_params(params)?;
    let opts = p.solver.unwrap_or_default();
    let (sol, extra) = if *problem == ProblemKind::Schrodinger {
        let s = schrodinger_params(&p, None, None)?;
        let out = schrodinger_demo(&s, 11, &opts)?;
        let extra = json!({
            "params": out.params,
            "m": out.m,
            "windows": out.windows,
            "prescreen_ok": out.prescreen_ok,
            "existence": out.existence,
        });
        (out.solution, extra)
    } else {
        let (prob, k) = build_problem(*problem, &p)?;
        let v0 = vec![0.0; picard_grid(&k, &opts)?.len()];
        (picard_solve(&prob, &k, &v0, &opts)?, json!({ "problem": prob.name }))
    };
    let pass = sol.report.ode_residual.is_finite();
    if let Some(path) = report {
        let body = render(ctx, Output::Json(json!({ "report": sol.report, "details": extra })));
        fs::write(path, body)?;
    }
    let header = vec![
        format!("problem: {problem:?}"),
        format!(
            "solver: tol {:e}, damping {}, grid {}, method {:?}, iterations {}+{}",
            opts.tol, opts.damping, opts.grid_n, sol.report.method, sol.report.iterations, sol.report.newton_iterations
        ),
        format!(
            "residuals: ode {:e}, fixed point {:e}, periodicity {:e} / {:e}",
            sol.report.ode_residual,
            sol.report.fixed_point_residual,
            sol.report.periodicity_error,
            sol.report.derivative_periodicity_error
        ),
    ];
    Ok((Output::Csv { header, columns: vec!["t", "v"], rows: solution_rows(&sol) }, pass))
}

fn kras(cmd: &KrasCmd) -> CliResult<(Output, bool)> {
    let KrasCmd::Check { problem, params, r, big_r, sample_n, negative } = cmd;
    let p = read_params(params)?;
    let p = if *problem == ProblemKind::Schrodinger {
        let s = schrodinger_params(&p, *r, *big_r)?;
        ProblemParams { alpha: Some(s.alpha), r: Some(s.r), big_r: Some(s.big_r), ..p }
    } else {
        p
    };
    let (prob, k) = build_problem(*problem, &p)?;
    let (big_l, l) = compute_l_l(&k, 101)?;
    let bounds = ConeBounds::new(need(r.or(p.r), "r")?, need(big_r.or(p.big_r), "R")?, big_l, l)?;
    let rep = if *negative {
        krasnoselskii_check_negative(&prob, &bounds, *sample_n)
    } else {
        krasnoselskii_check(&prob, &bounds, *sample_n)
    };
    Ok((Output::Json(serde_json::to_value(&rep).expect("report serialises")), true))
}

fn constants() -> (Output, bool) {
    let cbar = solve_cbar();
    let a2 = solve_alpha2();
    let a3 = solve_alpha3();
    let v = json!({
        "cbar": { "value": cbar, "residual": cbar_residual(cbar) },
        "alpha2": { "value": a2, "residual": alpha2_equation(a2, 1.0) },
        "alpha3": { "value": a3, "residual": alpha3_equation(a3, 1.0) },
    });
    (Output::Json(v), true)
}

fn dispatch(cli: &Cli, ctx: &Context) -> CliResult<(Output, bool)> {
    match &cli.command {
        Command::Green(c) => green(c, cli.seed),
        Command::Composite(c) => composite(c),
        Command::Region(c) => region(c),
        Command::Eigen(c) => eigen(c),
        Command::Solve(c) => solve(c, ctx),
        Command::Kras(c) => kras(c),
        Command::Constants => Ok(constants()),
    }
}

fn thread_count(flag: Option<usize>) -> CliResult<Option<usize>> {
    if let Some(n) = flag {
        return Ok(Some(n));
    }
    match std::env::var(THREADS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::config(format!("{THREADS_ENV}={s} is not a thread count"))),
        _ => Ok(None),
    }
}

fn report_error(e: &CliError) {
    let body = json!({ "error": { "kind": e.kind, "code": e.code, "message": e.message } });
    let _ = writeln!(std::io::stderr(), "{body}");
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            report_error(&CliError::config(e.to_string().trim().to_string()));
            return 2;
        }
    };
    let command_line = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .filter(|a| !a.is_empty())
        .collect::<Vec<_>>()
        .join(" ");
    let ctx = Context { command_line, seed: cli.seed };
    let result = thread_count(cli.threads).and_then(|n| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = n {
            if n == 0 {
                return Err(CliError::config("thread count must be positive"));
            }
            b = b.num_threads(n);
        }
        let pool = b.build().map_err(|e| CliError::config(e.to_string()))?;
        pool.install(|| dispatch(&cli, &ctx))
    });
    match result {
        Ok((out, pass)) => {
            let text = render(&ctx, out);
            let written = match &cli.out {
                Some(path) => fs::write(path, text),
                None => std::io::stdout().write_all(text.as_bytes()),
            };
            if let Err(e) = written {
                report_error(&CliError::from(e));
                return 2;
            }
            if pass {
                0
            } else {
                report_error(&CliError::failed("one or more checks failed"));
                1
            }
        }
        Err(e) => {
            report_error(&e);
            e.code
        }
    }
}
