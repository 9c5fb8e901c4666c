//! Self-contained linear programming: a dense two-phase simplex, a dual
//! simplex restart for rows appended mid-solve, and the cutting-plane loop
//! tying the LP to the separation routines.
//!
//! All columns are nonnegative; every other bound is an explicit row. The
//! solver returns basic solutions, so optima are vertices of the row
//! system, which is what the formulations require (interior points can
//! encode overlapping schedules). Floating point with fixed tolerances is
//! enough here because integer incumbents are always re-verified exactly
//! by the schedule evaluator.

use crate::dominance::make_orders;
use crate::instance::Instance;
use crate::polytope::{
    base_rows_f1, base_rows_f2, base_rows_f3, Cut, CutKey, Formulation, Sense, VarSpace,
};
use crate::separation::{separate, separate_triangle, separate_x_links};
use crate::{rat, rat_f64, Rat};
use std::collections::HashSet;

/// Primal feasibility tolerance on row residuals.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost optimality tolerance.
const OPT_TOL: f64 = 1e-9;
/// Pivot magnitude floor.
const PIV_EPS: f64 = 1e-9;
/// Consecutive degenerate pivots before switching to Bland's rule.
const BLAND_TRIGGER: usize = 500;
/// Pivot allowance per cold solve, a few times any healthy run. Only
/// floating-point cycling exhausts it; the solve then reports Stalled and
/// callers fall back to whatever bound they already hold.
const PIVOT_CAP_BASE: usize = 2_000;
const PIVOT_CAP_PER_DIM: usize = 5;

/// A minimization problem over nonnegative columns and [`Cut`] rows.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub ncols: usize,
    pub objective: Vec<f64>,
    /// Added to the reported objective value (the compact formulation's
    /// closed forms carry a constant term).
    pub constant: f64,
    pub rows: Vec<Cut>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot allowance ran out before optimality. The reported point
    /// and objective prove nothing and must not be used as a bound.
    Stalled,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum LoopEnd {
    Done,
    Unbounded,
    Stalled,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural column values; meaningful only when optimal.
    pub x: Vec<f64>,
    /// Objective value including the problem constant.
    pub objective: f64,
    /// Basic column per row, identifying the vertex.
    pub basis: Vec<usize>,
    /// Simplex basic solutions are vertices of the row system.
    pub vertex: bool,
    pub iterations: usize,
}

/// Dense tableau simplex retaining its state so violated rows can be
/// appended and re-solved with the dual simplex instead of from scratch.
pub struct SimplexEngine {
    problem: LpProblem,
    nstruct: usize,
    ncols: usize,
    rows: Vec<Vec<f64>>,
    b: Vec<f64>,
    basis: Vec<usize>,
    cost: Vec<f64>,
    is_artificial: Vec<bool>,
    /// Maintained reduced costs of the active objective.
    z: Vec<f64>,
    iterations: usize,
    degenerate_run: usize,
    pivots_left: usize,
    solved: bool,
}

impl SimplexEngine {
    pub fn new(problem: &LpProblem) -> SimplexEngine {
        let mut engine = SimplexEngine {
            problem: problem.clone(),
            nstruct: problem.ncols,
            ncols: 0,
            rows: Vec::new(),
            b: Vec::new(),
            basis: Vec::new(),
            cost: Vec::new(),
            is_artificial: Vec::new(),
            z: Vec::new(),
            iterations: 0,
            degenerate_run: 0,
            pivots_left: 0,
            solved: false,
        };
        engine.build();
        engine
    }

    fn build(&mut self) {
        let nstruct = self.nstruct;
        let m = self.problem.rows.len();
        self.ncols = nstruct;
        self.rows = Vec::with_capacity(m);
        self.b = Vec::with_capacity(m);
        self.basis = vec![usize::MAX; m];
        self.cost = self.problem.objective.clone();
        self.is_artificial = vec![false; nstruct];
        self.iterations = 0;
        self.degenerate_run = 0;
        self.solved = false;
        struct Pending {
            slack: Option<(usize, f64)>,
            needs_artificial: bool,
        }
        let mut pending = Vec::with_capacity(m);
        for (r, cut) in self.problem.rows.iter().enumerate() {
            let mut dense = vec![0.0; nstruct];
            for &(col, v) in &cut.coeffs {
                dense[col] = rat_f64(v);
            }
            let mut rhs = rat_f64(cut.rhs);
            let mut sense = cut.sense;
            if rhs < 0.0 {
                dense.iter_mut().for_each(|v| *v = -*v);
                rhs = -rhs;
                sense = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
            }
            let info = match sense {
                Sense::Le => {
                    let col = self.ncols;
                    self.ncols += 1;
                    self.basis[r] = col;
                    Pending { slack: Some((col, 1.0)), needs_artificial: false }
                }
                Sense::Ge => {
                    let col = self.ncols;
                    self.ncols += 1;
                    Pending { slack: Some((col, -1.0)), needs_artificial: true }
                }
                Sense::Eq => Pending { slack: None, needs_artificial: true },
            };
            self.rows.push(dense);
            self.b.push(rhs);
            pending.push(info);
        }
        // Artificial columns go last so excluding them is a range check.
        for (r, info) in pending.iter().enumerate() {
            if info.needs_artificial {
                self.basis[r] = self.ncols;
                self.ncols += 1;
            }
        }
        self.cost.resize(self.ncols, 0.0);
        self.is_artificial.resize(self.ncols, false);
        for (r, info) in pending.iter().enumerate() {
            if info.needs_artificial {
                self.is_artificial[self.basis[r]] = true;
            }
            let width = self.ncols;
            let row = &mut self.rows[r];
            row.resize(width, 0.0);
            if let Some((col, coeff)) = info.slack {
                row[col] = coeff;
            }
            if info.needs_artificial {
                row[self.basis[r]] = 1.0;
            }
        }
        self.z = vec![0.0; self.ncols];
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let m = self.rows.len();
        let piv = self.rows[r][c];
        debug_assert!(piv.abs() > PIV_EPS);
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.b[r] *= inv;
        for r2 in 0..m {
            if r2 != r {
                let factor = self.rows[r2][c];
                if factor != 0.0 {
                    for j in 0..self.ncols {
                        self.rows[r2][j] -= factor * self.rows[r][j];
                    }
                    self.b[r2] -= factor * self.b[r];
                }
            }
        }
        let factor = self.z[c];
        if factor != 0.0 {
            for j in 0..self.ncols {
                self.z[j] -= factor * self.rows[r][j];
            }
        }
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// One primal phase over the maintained reduced costs.
    fn primal_loop(&mut self) -> LoopEnd {
        loop {
            if self.pivots_left == 0 {
                return LoopEnd::Stalled;
            }
            let bland = self.degenerate_run >= BLAND_TRIGGER;
            let mut entering = None;
            let mut best = -OPT_TOL;
            for j in 0..self.ncols {
                if self.is_artificial[j] {
                    continue;
                }
                if self.z[j] < best {
                    entering = Some(j);
                    if bland {
                        break;
                    }
                    best = self.z[j];
                }
            }
            let Some(c) = entering else { return LoopEnd::Done };
            let mut leaving: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_piv = 0.0;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIV_EPS {
                    let ratio = self.b[r] / a;
                    // Ties go to the largest pivot element for stability;
                    // under Bland's rule, to the smallest basic column.
                    let better = match leaving {
                        None => true,
                        Some(cur) => {
                            ratio < best_ratio - 1e-12
                                || (ratio < best_ratio + 1e-12
                                    && if bland {
                                        self.basis[r] < self.basis[cur]
                                    } else {
                                        a > best_piv * (1.0 + 1e-12)
                                            || (a > best_piv * (1.0 - 1e-12)
                                                && self.basis[r] < self.basis[cur])
                                    })
                        }
                    };
                    if better {
                        leaving = Some(r);
                        best_ratio = ratio;
                        best_piv = a;
                    }
                }
            }
            let Some(r) = leaving else { return LoopEnd::Unbounded };
            if best_ratio.abs() < 1e-12 {
                self.degenerate_run += 1;
            } else {
                self.degenerate_run = 0;
            }
            self.pivots_left -= 1;
            self.pivot(r, c);
        }
    }

    fn set_phase1_costs(&mut self) {
        self.z = vec![0.0; self.ncols];
        for j in 0..self.ncols {
            if self.is_artificial[j] {
                self.z[j] = 1.0;
            }
        }
        for r in 0..self.rows.len() {
            if self.is_artificial[self.basis[r]] {
                for j in 0..self.ncols {
                    self.z[j] -= self.rows[r][j];
                }
            }
        }
    }

    fn set_phase2_costs(&mut self) {
        self.z = self.cost.clone();
        for r in 0..self.rows.len() {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                for j in 0..self.ncols {
                    self.z[j] -= cb * self.rows[r][j];
                }
            }
        }
    }

    fn phase1_value(&self) -> f64 {
        (0..self.rows.len())
            .filter(|&r| self.is_artificial[self.basis[r]])
            .map(|r| self.b[r])
            .sum()
    }

    /// Full two-phase solve from the freshly built tableau.
    pub fn solve(&mut self) -> LpSolution {
        self.pivots_left = PIVOT_CAP_BASE + PIVOT_CAP_PER_DIM * (self.rows.len() + self.ncols);
        if self.basis.iter().any(|&c| self.is_artificial.get(c).copied().unwrap_or(false)) {
            self.set_phase1_costs();
            self.degenerate_run = 0;
            match self.primal_loop() {
                LoopEnd::Done => {}
                LoopEnd::Unbounded => unreachable!("phase one is bounded below by zero"),
                LoopEnd::Stalled => return self.report(LpStatus::Stalled),
            }
            if self.phase1_value() > FEAS_TOL {
                return self.report(LpStatus::Infeasible);
            }
            // Degenerate-pivot redundant artificials out where possible.
            for r in 0..self.rows.len() {
                if self.is_artificial[self.basis[r]] {
                    if let Some(c) =
                        (0..self.ncols).find(|&j| !self.is_artificial[j] && self.rows[r][j].abs() > PIV_EPS)
                    {
                        self.pivot(r, c);
                    }
                }
            }
        }
        self.set_phase2_costs();
        self.degenerate_run = 0;
        match self.primal_loop() {
            LoopEnd::Done => {
                self.solved = true;
                self.report(LpStatus::Optimal)
            }
            LoopEnd::Unbounded => self.report(LpStatus::Unbounded),
            LoopEnd::Stalled => self.report(LpStatus::Stalled),
        }
    }

    /// Appends rows (senses `<=` or `>=`) to a solved tableau, keeping the
    /// current basis; the new slacks go basic, possibly at negative values.
    pub fn add_rows(&mut self, cuts: &[Cut]) {
        assert!(self.solved, "add_rows needs a solved tableau");
        for cut in cuts {
            self.problem.rows.push(cut.clone());
            let mut dense = vec![0.0; self.ncols];
            for &(col, v) in &cut.coeffs {
                dense[col] = rat_f64(v);
            }
            let mut rhs = rat_f64(cut.rhs);
            match cut.sense {
                Sense::Le => {}
                Sense::Ge => {
                    dense.iter_mut().for_each(|v| *v = -*v);
                    rhs = -rhs;
                }
                Sense::Eq => panic!("equality rows cannot be appended mid-solve"),
            }
            // Express the new row in the current basis.
            for r in 0..self.rows.len() {
                let coeff = dense[self.basis[r]];
                if coeff != 0.0 {
                    for j in 0..self.ncols {
                        dense[j] -= coeff * self.rows[r][j];
                    }
                    dense[self.basis[r]] = 0.0;
                    rhs -= coeff * self.b[r];
                }
            }
            let slack = self.ncols;
            self.ncols += 1;
            for row in self.rows.iter_mut() {
                row.push(0.0);
            }
            dense.push(1.0);
            self.rows.push(dense);
            self.b.push(rhs);
            self.basis.push(slack);
            self.cost.push(0.0);
            self.is_artificial.push(false);
            self.z.push(0.0);
        }
    }

    /// Dual simplex from the current (dual-feasible) basis; falls back to a
    /// complete rebuild if it stalls numerically.
    pub fn resolve(&mut self) -> LpSolution {
        // A healthy dual run needs a few pivots per repaired row; a long
        // stall means degenerate cycling, and a cold rebuild is cheaper.
        let cap = 200 + 2 * self.rows.len();
        let mut steps = 0;
        loop {
            let mut leaving = None;
            let mut most_negative = -FEAS_TOL;
            for r in 0..self.rows.len() {
                if self.b[r] < most_negative {
                    most_negative = self.b[r];
                    leaving = Some(r);
                }
            }
            let Some(r) = leaving else {
                self.solved = true;
                return self.report(LpStatus::Optimal);
            };
            let mut entering = None;
            let mut best_ratio = f64::INFINITY;
            for j in 0..self.ncols {
                if self.is_artificial[j] {
                    continue;
                }
                let a = self.rows[r][j];
                if a < -PIV_EPS {
                    let ratio = self.z[j].max(0.0) / -a;
                    if ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && entering.map_or(true, |cur| j < cur))
                    {
                        best_ratio = ratio;
                        entering = Some(j);
                    }
                }
            }
            let Some(c) = entering else {
                return self.report(LpStatus::Infeasible);
            };
            self.pivot(r, c);
            steps += 1;
            if steps > cap {
                self.build();
                return self.solve();
            }
        }
    }

    fn report(&self, status: LpStatus) -> LpSolution {
        let mut x = vec![0.0; self.nstruct];
        for (r, &col) in self.basis.iter().enumerate() {
            if col < self.nstruct {
                x[col] = self.b[r];
            }
        }
        let objective: f64 = self
            .basis
            .iter()
            .enumerate()
            .map(|(r, &col)| self.cost[col] * self.b[r])
            .sum::<f64>()
            + self.problem.constant;
        LpSolution {
            status,
            x,
            objective,
            basis: self.basis.clone(),
            vertex: status == LpStatus::Optimal,
            iterations: self.iterations,
        }
    }
}

/// Convenience one-shot solve.
pub fn simplex_solve(problem: &LpProblem) -> LpSolution {
    SimplexEngine::new(problem).solve()
}

/// A separation callback: maps an LP point to violated rows.
pub type Separator<'a> = Box<dyn FnMut(&[f64]) -> Vec<Cut> + 'a>;

#[derive(Debug)]
pub struct CutLoopReport {
    pub solution: LpSolution,
    pub cuts: Vec<Cut>,
    /// Objective after each round; nondecreasing.
    pub bound_trace: Vec<f64>,
}

/// Alternates LP solves with the separators until no separator returns a
/// new row or the round cap is hit. Rows already present (by canonical
/// key) are ignored, which also guarantees termination.
pub fn cutting_plane_solve(
    problem: &LpProblem,
    separators: &mut [Separator],
    round_cap: usize,
) -> CutLoopReport {
    let mut engine = SimplexEngine::new(problem);
    let mut solution = engine.solve();
    let mut seen: HashSet<CutKey> = problem.rows.iter().map(|r| r.key()).collect();
    let mut cuts = Vec::new();
    let mut bound_trace = Vec::new();
    for _ in 0..round_cap {
        if solution.status != LpStatus::Optimal {
            break;
        }
        bound_trace.push(solution.objective);
        let mut fresh = Vec::new();
        for sep in separators.iter_mut() {
            for cut in sep(&solution.x) {
                if seen.insert(cut.key()) {
                    fresh.push(cut);
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        engine.add_rows(&fresh);
        cuts.extend(fresh);
        solution = engine.resolve();
    }
    CutLoopReport { solution, cuts, bound_trace }
}

/// Exact objective coefficients (and constant) of a formulation's linear
/// objective over its variable space.
pub fn objective_for(formulation: Formulation, inst: &Instance) -> (Vec<Rat>, Rat) {
    let n = inst.n();
    let vs = VarSpace::new(formulation, n);
    let mut obj = vec![rat(0); vs.ncols()];
    let mut constant = rat(0);
    match formulation {
        Formulation::F1 => {
            for j in 0..n {
                obj[vs.e(j)] = rat(inst.alpha[j]);
                obj[vs.t(j)] = rat(inst.beta[j]);
            }
        }
        Formulation::F3 => {
            // Costs around the shifted pivot d - a: true earliness is
            // e + a on the early side, true tardiness t - a on the tardy
            // side; with b = a * delta both fold into linear terms.
            for j in 0..n {
                obj[vs.e(j)] = rat(inst.alpha[j]);
                obj[vs.t(j)] = rat(inst.beta[j]);
                obj[vs.b(j)] = rat(inst.alpha[j] + inst.beta[j]);
                obj[vs.a()] -= rat(inst.beta[j]);
            }
        }
        Formulation::F2 => {
            let orders = make_orders(inst);
            for pos in 0..n {
                let j = orders.rho[pos];
                let aj = rat(inst.alpha[j]);
                for &k in &orders.rho[..pos] {
                    let half = Rat::new(inst.p[k], 2);
                    obj[vs.delta(j)] += aj * half;
                    obj[vs.delta(k)] += aj * half;
                    obj[vs.x(j, k)] -= aj * half;
                }
            }
            for pos in 0..n {
                let j = orders.sigma[pos];
                let bj = rat(inst.beta[j]);
                for &k in &orders.sigma[..pos] {
                    let half = Rat::new(inst.p[k], 2);
                    constant += bj * rat(inst.p[k]);
                    obj[vs.delta(j)] -= bj * half;
                    obj[vs.delta(k)] -= bj * half;
                    obj[vs.x(j, k)] -= bj * half;
                }
                constant += bj * rat(inst.p[j]);
                obj[vs.delta(j)] -= bj * rat(inst.p[j]);
            }
        }
    }
    (obj, constant)
}

/// Base relaxation of a formulation, rows and objective together.
pub fn base_problem(formulation: Formulation, inst: &Instance) -> LpProblem {
    use crate::polytope::RowFamily;
    let (obj, constant) = objective_for(formulation, inst);
    let mut rows = match formulation {
        Formulation::F1 => base_rows_f1(inst),
        Formulation::F2 => base_rows_f2(inst),
        Formulation::F3 => base_rows_f3(inst),
    };
    // The natural and shifted objectives put no cost on the pair columns,
    // so their linking rows are separated on demand; see separate_x_links.
    // The compact objective prices the pairs directly and keeps them.
    if formulation != Formulation::F2 {
        rows.retain(|row| {
            !matches!(
                row.family,
                RowFamily::X1 | RowFamily::X2 | RowFamily::X3 | RowFamily::X4
            )
        });
    }
    LpProblem {
        ncols: VarSpace::new(formulation, inst.n()).ncols(),
        objective: obj.into_iter().map(rat_f64).collect(),
        constant: rat_f64(constant),
        rows,
    }
}

/// The separators a formulation's relaxation runs each round: the two
/// subset families for the natural and shifted spaces (none for the
/// compact space, whose value is already their closure), plus triangles on
/// request.
pub fn default_separators<'a>(
    formulation: Formulation,
    inst: &'a Instance,
    with_triangle: bool,
    max_cuts: usize,
) -> Vec<Separator<'a>> {
    use crate::polytope::RowFamily;
    let vs = VarSpace::new(formulation, inst.n());
    let mut seps: Vec<Separator<'a>> = Vec::new();
    let families: &[RowFamily] = match formulation {
        Formulation::F1 => &[RowFamily::S1, RowFamily::S2],
        Formulation::F3 => &[RowFamily::S1p, RowFamily::S2p],
        Formulation::F2 => &[],
    };
    if formulation != Formulation::F2 {
        // Repairs the linking rows base_problem leaves out.
        seps.push(Box::new(move |point: &[f64]| {
            separate_x_links(&vs, point, max_cuts)
        }));
    }
    for &family in families {
        seps.push(Box::new(move |point: &[f64]| {
            separate(family, inst, &vs, point, max_cuts)
        }));
    }
    if with_triangle {
        seps.push(Box::new(move |point: &[f64]| {
            separate_triangle(&vs, point, max_cuts)
        }));
    }
    seps
}

#[derive(Clone, Debug)]
pub struct RelaxOutcome {
    pub status: LpStatus,
    pub bound: f64,
    /// `(optimum - bound) / optimum` in percent; `None` when the optimum
    /// is missing or zero.
    pub gap_percent: Option<f64>,
    pub cuts_added: usize,
    pub rounds: usize,
}

/// Solves one formulation's linear relaxation by cutting planes and
/// reports the bound and its gap against a known optimum.
pub fn relax_value(
    formulation: Formulation,
    inst: &Instance,
    with_triangle: bool,
    optimum: Option<Rat>,
) -> RelaxOutcome {
    let problem = base_problem(formulation, inst);
    let mut separators = default_separators(formulation, inst, with_triangle, 10);
    let report = cutting_plane_solve(&problem, &mut separators, 200);
    // A stalled final solve proves nothing; the previous round's optimum
    // (over a row subset) is still a valid bound.
    let bound = match report.solution.status {
        LpStatus::Stalled => report.bound_trace.last().copied().unwrap_or(f64::NEG_INFINITY),
        _ => report.solution.objective,
    };
    let gap_percent = optimum.and_then(|opt| {
        (opt > rat(0)).then(|| (rat_f64(opt) - bound) / rat_f64(opt) * 100.0)
    });
    RelaxOutcome {
        status: report.solution.status,
        bound,
        gap_percent,
        cuts_added: report.cuts.len(),
        rounds: report.bound_trace.len(),
    }
}
