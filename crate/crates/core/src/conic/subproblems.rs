//! Builders for the bounding SOCP and the primal-check SOCP.
//!
//! Both problems minimize an epigraph variable `t` that upper-bounds the
//! violation of every nonconvex SINR constraint:
//!
//! * private rows: `sqrt(g_k) ||(h_k^H p_j)_{j != k}, 1|| <= t + h_k^H p_k`,
//! * common row of user 1: `sqrt(s) ||(h_1^H p_j)_j, 1|| <= t + h_1^H p_c`,
//! * common rows of users `k > 1`: `sqrt(s) ||(h_k^H p_j)_j, 1|| <= t + d_k`
//!   together with `d_k - t <= |e_k|`, `e_k = h_k^H p_c`.
//!
//! The phase of `h_k^H p_k` and of `h_1^H p_c` is pinned to zero. The
//! bounding problem freezes `g` and `s` at the box's lower corner, relaxes
//! `d_k - t <= |e_k|` with argument cuts and keeps the log-rates
//! `gamma'_k = log2(1 + gamma_k)`, `s' = log2(1 + s)` as variables inside
//! the box. The primal check freezes everything at a single point and
//! pins `arg e_k`.
//!
//! Complex quantities are expanded into (re, im) pairs. Transmit power is
//! carried by an epigraph variable `rho >= ||p||^2`.

use std::sync::OnceLock;

use num_complex::Complex64;

use super::cuts::{argument_cuts, ray_rows, CutRow};
use super::problem::{BackendFailure, ConeBlock, ConicOutcome, ConicProblem, ConicSolver, LinExpr};
use super::region::{DualPoint, SearchBox};
use super::ClarabelSolver;
use crate::error::ConicError;
use crate::model::{inner, log2_1p, Mode, ProblemInstance};

/// Maximum constraint violation, relative to the size of the rows, accepted
/// in a returned solution before it is treated as a backend failure.
const SOLUTION_VIOLATION_TOL: f64 = 1e-5;

/// Subproblem solution mapped back to problem quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSolution {
    pub p_c: Vec<Complex64>,
    pub p: Vec<Vec<Complex64>>,
    pub c: Vec<f64>,
    /// `log2(1 + gamma_p,k)` values (variables when bounding, constants in
    /// the primal check).
    pub gamma_log: Vec<f64>,
    /// `log2(1 + s)`.
    pub s_log: f64,
    /// `d_k` for users `k > 1` (empty without a common stream).
    pub d: Vec<f64>,
    /// `e_k = h_k^H p_c` for every user (index 0 is the phase reference).
    pub e: Vec<Complex64>,
    pub t: f64,
}

/// Optimal epigraph value of a subproblem (`+inf` when infeasible) and the
/// solution attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundOutcome {
    pub beta: f64,
    pub raw: Option<RawSolution>,
}

impl BoundOutcome {
    pub fn infeasible() -> Self {
        Self { beta: f64::INFINITY, raw: None }
    }

    pub fn is_feasible(&self) -> bool {
        self.beta.is_finite()
    }
}

/// Variable indices of one subproblem.
#[derive(Debug, Clone)]
struct Layout {
    k: usize,
    m: usize,
    pc: Option<usize>,
    p: Option<usize>,
    c: Option<usize>,
    gp: Option<usize>,
    sp: Option<usize>,
    d: Option<usize>,
    t: usize,
    rho: usize,
    n: usize,
}

impl Layout {
    fn new(k: usize, m: usize, mode: Mode, rate_vars: bool) -> Self {
        let mut n = 0;
        let mut take = |len: usize| {
            let start = n;
            n += len;
            start
        };
        let pc = mode.uses_common().then(|| take(2 * m));
        let p = mode.uses_private().then(|| take(2 * m * k));
        let c = mode.uses_common().then(|| take(k));
        let gp = (rate_vars && mode.uses_private()).then(|| take(k));
        let sp = (rate_vars && mode.uses_common()).then(|| take(1));
        let d = (mode.uses_common() && k > 1).then(|| take(k - 1));
        let t = take(1);
        let rho = take(1);
        Self { k, m, pc, p, c, gp, sp, d, t, rho, n }
    }

    fn private_base(&self, j: usize) -> Option<usize> {
        self.p.map(|p| p + 2 * self.m * j)
    }

    fn precoder_bases(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pc.into_iter().collect();
        v.extend((0..self.k).filter_map(|j| self.private_base(j)));
        v
    }

    fn d_index(&self, k: usize) -> usize {
        self.d.expect("common stream layout") + k - 1
    }

    fn read_precoder(&self, x: &[f64], base: Option<usize>) -> Vec<Complex64> {
        match base {
            Some(b) => (0..self.m).map(|i| Complex64::new(x[b + 2 * i], x[b + 2 * i + 1])).collect(),
            None => vec![Complex64::new(0.0, 0.0); self.m],
        }
    }
}

/// `(Re, Im)` of `h^H p` where `p` occupies `2m` variables at `base`.
fn gain(h: &[Complex64], base: usize) -> (LinExpr, LinExpr) {
    let mut re = LinExpr::default();
    let mut im = LinExpr::default();
    for (i, z) in h.iter().enumerate() {
        // conj(h) p = (a - ib)(x + iy) = (ax + by) + i(ay - bx)
        let (a, b) = (z.re, z.im);
        let (xi, yi) = (base + 2 * i, base + 2 * i + 1);
        re = re.term(xi, a).term(yi, b);
        im = im.term(xi, -b).term(yi, a);
    }
    (re, im)
}

fn cut_expr(row: &CutRow, e: &(LinExpr, LinExpr), d: usize, t: usize) -> LinExpr {
    e.0.clone()
        .scaled(row.re)
        .add(&e.1.clone().scaled(row.im))
        .term(d, row.gap)
        .term(t, -row.gap)
}

/// Lower-corner coefficients (or frozen point values) of the SINR rows.
struct SinrLevels<'a> {
    gamma: &'a [f64],
    s: f64,
}

/// Builds subproblems for one instance and stream mode. Rows that do not
/// depend on the box, the point or the threshold are built once and cloned
/// into every subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemBuilder {
    inst: ProblemInstance,
    mode: Mode,
    bounding_layout: Layout,
    check_layout: Layout,
    bounding_skeleton: Vec<ConeBlock>,
    check_skeleton: Vec<ConeBlock>,
}

impl SubproblemBuilder {
    pub fn new(inst: ProblemInstance, mode: Mode) -> Self {
        let (k, m) = (inst.users(), inst.antennas());
        let bounding_layout = Layout::new(k, m, mode, true);
        let check_layout = Layout::new(k, m, mode, false);
        let mut bounding_skeleton = Self::shared_rows(&inst, &bounding_layout);
        bounding_skeleton.extend(Self::log_rate_rows(&inst, &bounding_layout));
        let check_skeleton = Self::shared_rows(&inst, &check_layout);
        Self { inst, mode, bounding_layout, check_layout, bounding_skeleton, check_skeleton }
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.inst
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Phase pinning, `d_k >= 0`, `C_k >= 0` and the power rows.
    fn shared_rows(inst: &ProblemInstance, l: &Layout) -> Vec<ConeBlock> {
        let mut blocks = Vec::new();
        let mut zero = Vec::new();
        let mut nonneg = Vec::new();
        for k in 0..l.k {
            if let Some(base) = l.private_base(k) {
                let (re, im) = gain(inst.channel(k), base);
                zero.push(im);
                nonneg.push(re);
            }
        }
        if let Some(pc) = l.pc {
            let (re, im) = gain(inst.channel(0), pc);
            zero.push(im);
            nonneg.push(re);
        }
        if let Some(d) = l.d {
            nonneg.extend((0..l.k - 1).map(|i| LinExpr::var(d + i)));
        }
        if let Some(c) = l.c {
            nonneg.extend((0..l.k).map(|i| LinExpr::var(c + i)));
        }
        if !zero.is_empty() {
            blocks.push(ConeBlock::zero("phase", zero));
        }
        // rho <= P
        nonneg.push(LinExpr::var(l.rho).scaled(-1.0).plus_const(inst.power()));
        blocks.push(ConeBlock::nonneg("sign", nonneg));
        // ||p||^2 <= rho  <=>  ||(2p, rho - 1)|| <= rho + 1
        let mut tail: Vec<LinExpr> = l
            .precoder_bases()
            .into_iter()
            .flat_map(|b| (0..2 * l.m).map(move |i| LinExpr::default().term(b + i, 2.0)))
            .collect();
        tail.push(LinExpr::var(l.rho).plus_const(-1.0));
        blocks.push(ConeBlock::soc("power", LinExpr::var(l.rho).plus_const(1.0), tail));
        blocks
    }

    /// Rate split rows in log-rate variables: `sum C <= s'` and
    /// `C_k + gamma'_k >= R_k^th`.
    fn log_rate_rows(inst: &ProblemInstance, l: &Layout) -> Vec<ConeBlock> {
        let mut rows = Vec::new();
        if let (Some(c), Some(sp)) = (l.c, l.sp) {
            let mut e = LinExpr::var(sp);
            for i in 0..l.k {
                e = e.term(c + i, -1.0);
            }
            rows.push(e);
        }
        for k in 0..l.k {
            let floor = inst.rate_floors()[k];
            if floor <= 0.0 {
                continue;
            }
            let mut e = LinExpr::constant(-floor);
            if let Some(c) = l.c {
                e = e.term(c + k, 1.0);
            }
            if let Some(gp) = l.gp {
                e = e.term(gp + k, 1.0);
            }
            rows.push(e);
        }
        if rows.is_empty() {
            Vec::new()
        } else {
            vec![ConeBlock::nonneg("rate-split", rows)]
        }
    }

    fn sinr_rows(&self, l: &Layout, levels: &SinrLevels<'_>, out: &mut Vec<ConeBlock>) {
        let inst = &self.inst;
        let t = l.t;
        let interference = |k: usize, skip: Option<usize>, scale: f64| -> Vec<LinExpr> {
            let mut tail = Vec::new();
            for j in 0..l.k {
                if Some(j) == skip {
                    continue;
                }
                if let Some(base) = l.private_base(j) {
                    let (re, im) = gain(inst.channel(k), base);
                    tail.push(re.scaled(scale));
                    tail.push(im.scaled(scale));
                }
            }
            tail.push(LinExpr::constant(scale));
            tail
        };
        for k in 0..l.k {
            if let Some(base) = l.private_base(k) {
                let g = levels.gamma[k].max(0.0).sqrt();
                let head = gain(inst.channel(k), base).0.term(t, 1.0);
                out.push(ConeBlock::soc("private-sinr", head, interference(k, Some(k), g)));
            }
        }
        if let Some(pc) = l.pc {
            let sq = levels.s.max(0.0).sqrt();
            let head = gain(inst.channel(0), pc).0.term(t, 1.0);
            out.push(ConeBlock::soc("common-sinr", head, interference(0, None, sq)));
            for k in 1..l.k {
                let head = LinExpr::var(l.d_index(k)).term(t, 1.0);
                out.push(ConeBlock::soc("common-sinr", head, interference(k, None, sq)));
            }
        }
    }

    /// `sum u_k (C_k + gamma'_k) >= delta (mu rho + P_c)`.
    fn threshold_row(&self, l: &Layout, gamma_log_const: Option<&[f64]>, delta: f64) -> LinExpr {
        let inst = &self.inst;
        let u = inst.weights();
        let mut e = LinExpr::default()
            .term(l.rho, -delta * inst.mu())
            .plus_const(-delta * inst.circuit_power());
        if let Some(c) = l.c {
            for k in 0..l.k {
                e = e.term(c + k, u[k]);
            }
        }
        match (l.gp, gamma_log_const) {
            (Some(gp), _) => {
                for k in 0..l.k {
                    e = e.term(gp + k, u[k]);
                }
            }
            (None, Some(vals)) => {
                e.constant += u.iter().zip(vals).map(|(u, g)| u * g).sum::<f64>();
            }
            (None, None) => {}
        }
        e
    }

    /// Bounding problem over `region` at threshold `delta`.
    pub fn bounding_problem(&self, region: &SearchBox, delta: f64) -> Result<ConicProblem, ConicError> {
        let l = &self.bounding_layout;
        let mut prob = ConicProblem::new(l.n, vec![(l.t, 1.0)]);
        prob.blocks = self.bounding_skeleton.clone();

        self.sinr_rows(l, &SinrLevels { gamma: &region.gamma_lo, s: region.s_lo }, &mut prob.blocks);

        if let (Some(pc), Some(_)) = (l.pc, l.d) {
            let mut rows = Vec::new();
            for k in 1..l.k {
                let cuts = argument_cuts(region.alpha_lo[k - 1], region.alpha_hi[k - 1])?;
                if cuts.is_empty() {
                    continue;
                }
                let e = gain(self.inst.channel(k), pc);
                rows.extend(cuts.iter().map(|row| cut_expr(row, &e, l.d_index(k), l.t)));
            }
            if !rows.is_empty() {
                prob.push(ConeBlock::nonneg("argument-cut", rows));
            }
        }

        let mut rows = vec![self.threshold_row(l, None, delta)];
        let mut eq = Vec::new();
        let mut interval = |var: usize, lo: f64, hi: f64, rows: &mut Vec<LinExpr>| {
            let (lo, hi) = (log2_1p(lo), log2_1p(hi));
            if hi - lo <= 1e-12 {
                eq.push(LinExpr::var(var).plus_const(-0.5 * (lo + hi)));
            } else {
                rows.push(LinExpr::var(var).plus_const(-lo));
                rows.push(LinExpr::var(var).scaled(-1.0).plus_const(hi));
            }
        };
        if let Some(gp) = l.gp {
            for k in 0..l.k {
                interval(gp + k, region.gamma_lo[k], region.gamma_hi[k], &mut rows);
            }
        }
        if let Some(sp) = l.sp {
            interval(sp, region.s_lo, region.s_hi, &mut rows);
        }
        prob.push(ConeBlock::nonneg("threshold-box", rows));
        if !eq.is_empty() {
            prob.push(ConeBlock::zero("box-point", eq));
        }
        Ok(prob)
    }

    /// Primal check at `point` with threshold `delta`.
    pub fn primal_check_problem(&self, point: &DualPoint, delta: f64) -> ConicProblem {
        let l = &self.check_layout;
        let inst = &self.inst;
        let mut prob = ConicProblem::new(l.n, vec![(l.t, 1.0)]);
        prob.blocks = self.check_skeleton.clone();

        let gamma: Vec<f64> = if self.mode.uses_private() { point.gamma_p.clone() } else { vec![0.0; l.k] };
        let s = if self.mode.uses_common() { point.s } else { 0.0 };
        self.sinr_rows(l, &SinrLevels { gamma: &gamma, s }, &mut prob.blocks);

        let gamma_log: Vec<f64> = gamma.iter().map(|&g| log2_1p(g)).collect();
        let mut rows = vec![self.threshold_row(l, Some(&gamma_log), delta)];
        let mut eq = Vec::new();
        if let Some(pc) = l.pc {
            for k in 1..l.k {
                let e = gain(inst.channel(k), pc);
                let (on_ray, length) = ray_rows(point.alpha[k - 1]);
                eq.push(cut_expr(&on_ray, &e, l.d_index(k), l.t));
                rows.extend(length.iter().map(|row| cut_expr(row, &e, l.d_index(k), l.t)));
            }
        }
        let s_log = log2_1p(s);
        if let Some(c) = l.c {
            let mut budget = LinExpr::constant(s_log);
            for k in 0..l.k {
                budget = budget.term(c + k, -1.0);
                let floor = (inst.rate_floors()[k] - gamma_log[k]).max(0.0);
                if floor > 0.0 {
                    rows.push(LinExpr::var(c + k).plus_const(-floor));
                }
            }
            rows.push(budget);
        } else {
            for k in 0..l.k {
                // constant row; violated floors make the problem infeasible
                rows.push(LinExpr::constant(gamma_log[k] - inst.rate_floors()[k]));
            }
        }
        prob.push(ConeBlock::nonneg("threshold-split", rows));
        if !eq.is_empty() {
            prob.push(ConeBlock::zero("ray", eq));
        }
        prob
    }

    fn extract(&self, l: &Layout, x: &[f64], gamma_log_const: Option<Vec<f64>>, s_log_const: f64) -> RawSolution {
        let inst = &self.inst;
        let p_c = l.read_precoder(x, l.pc);
        let p: Vec<Vec<Complex64>> = (0..l.k).map(|j| l.read_precoder(x, l.private_base(j))).collect();
        let c = match l.c {
            Some(c) => x[c..c + l.k].to_vec(),
            None => vec![0.0; l.k],
        };
        let gamma_log = match (l.gp, gamma_log_const) {
            (Some(gp), _) => x[gp..gp + l.k].to_vec(),
            (None, Some(v)) => v,
            (None, None) => vec![0.0; l.k],
        };
        let s_log = l.sp.map_or(s_log_const, |sp| x[sp]);
        let d = match l.d {
            Some(d) => x[d..d + l.k - 1].to_vec(),
            None => Vec::new(),
        };
        let e = (0..l.k).map(|k| inner(inst.channel(k), &p_c)).collect();
        RawSolution { p_c, p, c, gamma_log, s_log, d, e, t: x[l.t] }
    }
}

/// Bounding and primal-check solves with the numerical failure policy:
/// on a backend failure the instance is rescaled (channels by
/// `1 / max_k ||h_k||`) and solved once more; a second failure is an error.
pub struct Subproblems {
    builder: SubproblemBuilder,
    rescaled: OnceLock<(f64, SubproblemBuilder)>,
    solver: Box<dyn ConicSolver>,
}

impl Subproblems {
    pub fn new(inst: &ProblemInstance, mode: Mode) -> Self {
        Self::with_solver(inst, mode, Box::new(ClarabelSolver::default()))
    }

    pub fn with_solver(inst: &ProblemInstance, mode: Mode, solver: Box<dyn ConicSolver>) -> Self {
        Self { builder: SubproblemBuilder::new(inst.clone(), mode), rescaled: OnceLock::new(), solver }
    }

    pub fn builder(&self) -> &SubproblemBuilder {
        &self.builder
    }

    fn rescaled(&self) -> &(f64, SubproblemBuilder) {
        self.rescaled.get_or_init(|| {
            let inst = self.builder.instance();
            let max_norm = (0..inst.users()).map(|k| inst.channel_norm_sqr(k).sqrt()).fold(0.0, f64::max);
            let sigma = 1.0 / max_norm;
            (sigma, SubproblemBuilder::new(inst.rescaled(sigma), self.builder.mode()))
        })
    }

    fn run(&self, prob: &ConicProblem) -> Result<Option<Vec<f64>>, BackendFailure> {
        match self.solver.solve(prob)? {
            ConicOutcome::Infeasible => Ok(None),
            ConicOutcome::Optimal { x, .. } => {
                let viol = prob.max_relative_violation(&x);
                if viol > SOLUTION_VIOLATION_TOL {
                    return Err(BackendFailure { status: format!("solution violates constraints by {viol:e}") });
                }
                Ok(Some(x))
            }
        }
    }

    /// Solves `build(builder)` and falls back to the rescaled instance.
    fn solve_with_retry<F>(&self, build: F, gamma_log: Option<Vec<f64>>, s_log: f64, bounding: bool) -> Result<BoundOutcome, ConicError>
    where
        F: Fn(&SubproblemBuilder) -> Result<ConicProblem, ConicError>,
    {
        let layout = |b: &SubproblemBuilder| if bounding { b.bounding_layout.clone() } else { b.check_layout.clone() };
        let prob = build(&self.builder)?;
        prob.validate()?;
        let first = self.run(&prob);
        let raw = match first {
            Ok(None) => return Ok(BoundOutcome::infeasible()),
            Ok(Some(x)) => self.builder.extract(&layout(&self.builder), &x, gamma_log, s_log),
            Err(_) => {
                let (sigma, scaled) = self.rescaled();
                let prob = build(scaled)?;
                match self.run(&prob) {
                    Ok(None) => return Ok(BoundOutcome::infeasible()),
                    Ok(Some(x)) => {
                        let mut raw = scaled.extract(&layout(scaled), &x, gamma_log, s_log);
                        // p = sigma p' keeps every h^H p unchanged
                        for z in raw.p_c.iter_mut().chain(raw.p.iter_mut().flatten()) {
                            *z *= *sigma;
                        }
                        raw.e = (0..self.builder.inst.users())
                            .map(|k| inner(self.builder.inst.channel(k), &raw.p_c))
                            .collect();
                        raw
                    }
                    Err(f) => return Err(ConicError::SolverFailure { status: f.status }),
                }
            }
        };
        Ok(BoundOutcome { beta: raw.t, raw: Some(raw) })
    }

    /// Lower bound of the min-max violation over `region` at threshold
    /// `delta`. Empty boxes are infeasible without a solver call.
    pub fn bound(&self, region: &SearchBox, delta: f64) -> Result<BoundOutcome, ConicError> {
        if region.is_empty() {
            return Ok(BoundOutcome::infeasible());
        }
        self.solve_with_retry(|b| b.bounding_problem(region, delta), None, 0.0, true)
    }

    /// Minimum violation with SINRs and phases frozen at `point`. A value
    /// `<= 0` certifies that the point is achievable with objective at
    /// least `delta`.
    pub fn primal_check(&self, point: &DualPoint, delta: f64) -> Result<BoundOutcome, ConicError> {
        let mode = self.builder.mode();
        let gamma_log: Vec<f64> = if mode.uses_private() {
            point.gamma_p.iter().map(|&g| log2_1p(g)).collect()
        } else {
            vec![0.0; point.gamma_p.len()]
        };
        let s_log = if mode.uses_common() { log2_1p(point.s) } else { 0.0 };
        self.solve_with_retry(|b| Ok(b.primal_check_problem(point, delta)), Some(gamma_log), s_log, false)
    }
}

/// One-shot bounding solve with the default backend.
pub fn solve_bounding(
    inst: &ProblemInstance,
    mode: Mode,
    region: &SearchBox,
    delta: f64,
) -> Result<BoundOutcome, ConicError> {
    Subproblems::new(inst, mode).bound(region, delta)
}

/// One-shot primal check with the default backend. Returns the optimal
/// epigraph value and the solution.
pub fn solve_primal_check(
    inst: &ProblemInstance,
    mode: Mode,
    point: &DualPoint,
    delta: f64,
) -> Result<BoundOutcome, ConicError> {
    Subproblems::new(inst, mode).primal_check(point, delta)
}
