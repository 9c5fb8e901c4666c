//! Exact solvers: a factorial brute force, partition enumeration driven by
//! the block decoders, and LP-based branch and cut over the early/tardy
//! indicator variables.
//!
//! All three agree on their overlap; the cheaper oracles exist so the
//! branch-and-cut machinery is testable against something it does not
//! share code with. Reported optima are re-evaluated with exact rational
//! arithmetic before they leave this module; LP floats never become final
//! answers.

use crate::dominance::best_for_partition;
use crate::instance::{classify, reduce_unrestrictive, DueDateClass, Instance};
use crate::lp::{base_problem, cutting_plane_solve, default_separators, LpStatus, Separator};
use crate::polytope::{Cut, CutKey, Formulation, RowFamily, Sense, VarSpace};
use crate::schedule::{evaluate, is_feasible, Schedule};
use crate::{rat, rat_f64, Rat};
use itertools::Itertools;
use std::collections::{BTreeMap, BinaryHeap, HashMap};
use std::time::{Duration, Instant};
use thiserror::Error;

/// Permutation search cap.
pub const BRUTE_MAX: usize = 8;
/// Partition enumeration cap.
pub const ENUM_MAX: usize = 24;
/// Branch variables are kept in a 64-bit mask.
const BRANCH_MAX: usize = 60;
/// Node bound within this of `incumbent - 1` proves no better integer
/// value exists below the node (all data are integers).
const INT_PRUNE_EPS: f64 = 1e-6;
/// A variable this close to 0 or 1 counts as integral.
const FRAC_EPS: f64 = 1e-6;
/// Separation rounds per non-root node; the root gets the full round cap.
/// Small on purpose: past two rounds the extra bound strength no longer
/// pays for the extra tableau work across a big tree.
const NODE_ROUNDS: usize = 2;
/// Most cuts a child inherits. Unchecked growth down a branch makes the
/// node tableaus degenerate enough to stall; the newest cuts win because
/// they were separated against the nearest ancestor optima.
const NODE_CUT_CAP: usize = 48;
/// A row with slack at most this counts as tight when children decide
/// which parent cuts to keep.
const ACTIVE_EPS: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct SolveConfig {
    pub time_limit: Duration,
    pub node_limit: u64,
    /// Separate odd-cycle triangle rows in addition to the subset rows.
    pub with_triangle: bool,
    /// Cuts accepted per family per separation round.
    pub max_cuts: usize,
    /// Cutting-plane rounds per node.
    pub round_cap: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: Duration::from_secs(600),
            node_limit: 1_000_000,
            with_triangle: true,
            max_cuts: 10,
            round_cap: 50,
        }
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("instance has {n} tasks; this method handles at most {max}")]
    TooLarge { n: usize, max: usize },
    #[error("method {method} requires d >= total processing time")]
    WrongClass { method: &'static str },
    #[error("branch_and_cut handles the natural and shifted formulations; use solve_f2 for the compact one")]
    UnsupportedFormulation,
    #[error("internal invariant failed: {0}")]
    Internal(String),
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    /// Exact optimum (an integer for integer data).
    pub value: Rat,
    pub schedule: Schedule,
    pub method: String,
    pub nodes: u64,
    /// Unique cuts added to the pool, per row family.
    pub cuts_by_family: Vec<(String, usize)>,
    pub lp_iterations: usize,
    pub wall: Duration,
    /// True when a time or node limit stopped the search before the
    /// optimality proof; the reported value is then only an upper bound.
    pub limit_hit: bool,
    /// Proven lower bound: the value itself after a completed proof, the
    /// smallest open node bound after an interrupted one.
    pub lower_bound: f64,
}

impl SolveReport {
    /// Every report is re-checked exactly on its way out.
    fn checked(
        inst: &Instance,
        value: Rat,
        schedule: Schedule,
        method: &str,
        nodes: u64,
        cuts_by_family: Vec<(String, usize)>,
        lp_iterations: usize,
        wall: Duration,
        limit_hit: bool,
        lower_bound: f64,
    ) -> Result<SolveReport, SolveError> {
        if let Err(why) = is_feasible(inst, &schedule) {
            return Err(SolveError::Internal(format!(
                "result schedule infeasible: {why:?}"
            )));
        }
        let recheck = evaluate(inst, &schedule);
        if recheck != value {
            return Err(SolveError::Internal(format!(
                "result value {value} does not match re-evaluation {recheck}"
            )));
        }
        Ok(SolveReport {
            value,
            schedule,
            method: method.to_string(),
            nodes,
            cuts_by_family,
            lp_iterations,
            wall,
            limit_hit,
            lower_bound,
        })
    }

    pub fn total_cuts(&self) -> usize {
        self.cuts_by_family.iter().map(|(_, k)| k).sum()
    }
}

/// Tries every permutation with every dominant anchor: the block starting
/// at time zero, and the block positioned so that each task in turn
/// completes exactly at the due date.
pub fn brute_force_schedules(inst: &Instance) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let n = inst.n();
    if n > BRUTE_MAX {
        return Err(SolveError::TooLarge { n, max: BRUTE_MAX });
    }
    let mut best: Option<(Rat, Schedule)> = None;
    for perm in (0..n).permutations(n) {
        let mut ends = Vec::with_capacity(n);
        let mut acc = 0i64;
        for &j in &perm {
            acc += inst.p[j];
            ends.push(acc);
        }
        let mut starts = vec![0i64];
        for &end in &ends {
            if inst.d - end >= 0 {
                starts.push(inst.d - end);
            }
        }
        for &s in &starts {
            let mut c = vec![rat(0); n];
            for (k, &j) in perm.iter().enumerate() {
                c[j] = rat(s + ends[k]);
            }
            let v = evaluate(inst, &c);
            if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, c));
            }
        }
    }
    let (value, schedule) = best.expect("at least one permutation");
    let lb = rat_f64(value);
    SolveReport::checked(inst, value, schedule, "brute", 0, Vec::new(), 0, start.elapsed(), false, lb)
}

/// Minimizes over every early/tardy partition using the exact block
/// decoders; partitions whose early load exceeds the due date are skipped.
pub fn enumerate_exact(inst: &Instance) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    let n = inst.n();
    if n > ENUM_MAX {
        return Err(SolveError::TooLarge { n, max: ENUM_MAX });
    }
    let mut best: Option<(Rat, Schedule)> = None;
    let mut delta = vec![false; n];
    for mask in 0..(1u64 << n) {
        for (j, d) in delta.iter_mut().enumerate() {
            *d = mask >> j & 1 == 1;
        }
        if let Some((v, c)) = best_for_partition(inst, &delta) {
            if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                best = Some((v, c));
            }
        }
    }
    let (value, schedule) = best.expect("the all-tardy partition is always decodable");
    let lb = rat_f64(value);
    SolveReport::checked(inst, value, schedule, "enum", 0, Vec::new(), 0, start.elapsed(), false, lb)
}

/// Search node: a box of partitions with some indicators fixed.
#[derive(Clone, Debug)]
pub struct Node {
    pub fixed0: u64,
    pub fixed1: u64,
    pub bound: f64,
    pub depth: u32,
    /// Cuts tight at the parent optimum, as indices into the search-wide
    /// pool; the node LP starts from these instead of the whole pool.
    cuts: Vec<u32>,
}

struct PqItem {
    node: Node,
    seq: u64,
}

impl PartialEq for PqItem {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}
impl Eq for PqItem {}
impl PartialOrd for PqItem {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for PqItem {
    // Max-heap: prefer the smaller bound, then the deeper node, then
    // first-in order. Bounds are never NaN.
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .node
            .bound
            .partial_cmp(&self.node.bound)
            .expect("node bounds are finite or -inf")
            .then(self.node.depth.cmp(&other.node.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct SearchStats {
    nodes: u64,
    lp_iterations: usize,
    cut_counts: BTreeMap<&'static str, usize>,
    limit_hit: bool,
    lower_bound: f64,
}

/// Exact best schedule among partitions consistent with one integral
/// indicator vector of the given formulation.
///
/// For the shifted formulation the indicator means "strictly early", so a
/// task completing exactly at the due date carries indicator 0; each such
/// candidate is covered by also decoding the partition that moves one
/// indicator-0 task onto the early side as the on-time task.
fn decode_integral(
    formulation: Formulation,
    inst: &Instance,
    delta: &[bool],
) -> Option<(Rat, Schedule)> {
    let mut best = best_for_partition(inst, delta);
    if formulation == Formulation::F3 {
        let mut widened = delta.to_vec();
        for j in 0..inst.n() {
            if !delta[j] {
                widened[j] = true;
                if let Some((v, c)) = best_for_partition(inst, &widened) {
                    if best.as_ref().map_or(true, |(bv, _)| v < *bv) {
                        best = Some((v, c));
                    }
                }
                widened[j] = false;
            }
        }
    }
    best
}

/// First-improvement descent over partitions: single indicator flips,
/// then early-late swaps, until no move helps. Each candidate partition
/// is costed exactly, so the result is always a feasible incumbent.
fn improve_partition(inst: &Instance, start: &[bool]) -> Option<(Rat, Schedule)> {
    let n = inst.n();
    let mut delta = start.to_vec();
    let mut best = best_for_partition(inst, &delta)?;
    loop {
        let mut improved = false;
        for j in 0..n {
            delta[j] = !delta[j];
            match best_for_partition(inst, &delta) {
                Some(cand) if cand.0 < best.0 => {
                    best = cand;
                    improved = true;
                }
                _ => delta[j] = !delta[j],
            }
        }
        for i in 0..n {
            for j in 0..n {
                if !(delta[i] && !delta[j]) {
                    continue;
                }
                delta[i] = false;
                delta[j] = true;
                match best_for_partition(inst, &delta) {
                    Some(cand) if cand.0 < best.0 => {
                        best = cand;
                        improved = true;
                    }
                    _ => {
                        delta[i] = true;
                        delta[j] = false;
                    }
                }
            }
        }
        if !improved {
            return Some(best);
        }
    }
}

/// Rounds fractional indicators at 1/2 and, if the early load overflows
/// the due date, drops the early task with the smallest alpha-to-length
/// ratio until it fits.
fn round_and_repair(inst: &Instance, dvals: &[f64]) -> Vec<bool> {
    let mut delta: Vec<bool> = dvals.iter().map(|&v| v >= 0.5).collect();
    let mut early: i64 = (0..inst.n()).filter(|&j| delta[j]).map(|j| inst.p[j]).sum();
    while early > inst.d {
        let j = (0..inst.n())
            .filter(|&j| delta[j])
            .min_by(|&i, &j| {
                (inst.alpha[i] * inst.p[j])
                    .cmp(&(inst.alpha[j] * inst.p[i]))
                    .then(i.cmp(&j))
            })
            .expect("early load positive implies a nonempty early set");
        delta[j] = false;
        early -= inst.p[j];
    }
    delta
}

/// Best-first branch and bound over the indicator variables with LP
/// bounds from the cutting-plane loop and incumbents from the block
/// decoders. Returns the incumbent and search statistics; `limit_hit`
/// marks an interrupted proof.
fn branch_loop(
    formulation: Formulation,
    inst: &Instance,
    config: &SolveConfig,
) -> Result<((Rat, Schedule), SearchStats), SolveError> {
    let n = inst.n();
    assert!(n <= BRANCH_MAX, "indicator mask is 64 bits");
    let vs = VarSpace::new(formulation, n);
    let deadline = Instant::now() + config.time_limit;
    let base = base_problem(formulation, inst);
    let mut pool: Vec<Cut> = Vec::new();
    let mut pool_index: HashMap<CutKey, u32> = HashMap::new();
    let mut incumbent: Option<(Rat, Schedule)> = None;
    let mut stats = SearchStats {
        nodes: 0,
        lp_iterations: 0,
        cut_counts: BTreeMap::new(),
        limit_hit: false,
        lower_bound: f64::NEG_INFINITY,
    };
    // Seed the incumbent before any LP so pruning bites from the root.
    for start in [vec![false; n], round_and_repair(inst, &vec![1.0; n])] {
        if let Some((v, c)) = improve_partition(inst, &start) {
            if incumbent.as_ref().map_or(true, |(iv, _)| v < *iv) {
                incumbent = Some((v, c));
            }
        }
    }
    let mut heap: BinaryHeap<PqItem> = BinaryHeap::new();
    let mut seq = 0u64;
    heap.push(PqItem {
        node: Node { fixed0: 0, fixed1: 0, bound: f64::NEG_INFINITY, depth: 0, cuts: Vec::new() },
        seq,
    });
    let prune_line = |inc: &Option<(Rat, Schedule)>| -> f64 {
        inc.as_ref().map_or(f64::INFINITY, |(v, _)| rat_f64(*v) - 1.0 + INT_PRUNE_EPS)
    };
    while let Some(item) = heap.pop() {
        if stats.nodes >= config.node_limit || Instant::now() > deadline {
            stats.limit_hit = true;
            let open = heap
                .iter()
                .map(|it| it.node.bound)
                .fold(item.node.bound, f64::min);
            stats.lower_bound = open.max(0.0);
            break;
        }
        let node = item.node;
        debug_assert_eq!(node.fixed0 & node.fixed1, 0);
        if node.bound >= prune_line(&incumbent) {
            continue;
        }
        stats.nodes += 1;
        let mut problem = base.clone();
        problem.rows.extend(node.cuts.iter().map(|&ci| pool[ci as usize].clone()));
        for j in 0..n {
            if node.fixed0 >> j & 1 == 1 {
                problem.rows.push(Cut::new(
                    RowFamily::Bound,
                    vec![(vs.delta(j), rat(1))],
                    Sense::Le,
                    rat(0),
                    None,
                ));
            } else if node.fixed1 >> j & 1 == 1 {
                problem.rows.push(Cut::new(
                    RowFamily::Bound,
                    vec![(vs.delta(j), rat(1))],
                    Sense::Ge,
                    rat(1),
                    None,
                ));
            }
        }
        let inner = default_separators(formulation, inst, config.with_triangle, config.max_cuts);
        let mut seps: Vec<Separator> = inner
            .into_iter()
            .map(|mut sep| -> Separator {
                // A hard deadline can otherwise slip by a whole node.
                Box::new(move |x: &[f64]| {
                    if Instant::now() > deadline {
                        Vec::new()
                    } else {
                        sep(x)
                    }
                })
            })
            .collect();
        let rounds = if node.depth == 0 { config.round_cap } else { NODE_ROUNDS };
        let report = cutting_plane_solve(&problem, &mut seps, rounds);
        stats.lp_iterations += report.solution.iterations;
        let mut node_cuts = node.cuts.clone();
        for cut in report.cuts {
            let key = cut.key();
            let idx = *pool_index.entry(key).or_insert_with(|| {
                *stats.cut_counts.entry(cut.family.name()).or_insert(0) += 1;
                pool.push(cut);
                pool.len() as u32 - 1
            });
            node_cuts.push(idx);
        }
        match report.solution.status {
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded => {
                return Err(SolveError::Internal(
                    "node relaxation unbounded; rows are missing".into(),
                ))
            }
            LpStatus::Optimal | LpStatus::Stalled => {}
        }
        let stalled = report.solution.status == LpStatus::Stalled;
        // The node LP ran fewer rounds and fewer rows than the parent's, so
        // its objective alone may be weaker than the inherited bound. A
        // stalled solve proves nothing and keeps the inherited bound.
        let bound = if stalled {
            node.bound
        } else {
            report.solution.objective.max(node.bound)
        };
        if bound >= prune_line(&incumbent) {
            continue;
        }
        // Children restart from the rows tight at this optimum; a stalled
        // point is no optimum, so its activity pattern is noise.
        if !stalled {
            node_cuts
                .retain(|&ci| pool[ci as usize].slack_f64(&report.solution.x).abs() <= ACTIVE_EPS);
        }
        if node_cuts.len() > NODE_CUT_CAP {
            node_cuts.drain(..node_cuts.len() - NODE_CUT_CAP);
        }
        let dvals: Vec<f64> = (0..n).map(|j| report.solution.x[vs.delta(j)]).collect();
        let repaired = round_and_repair(inst, &dvals);
        if let Some((v, c)) = improve_partition(inst, &repaired) {
            if incumbent.as_ref().map_or(true, |(iv, _)| v < *iv) {
                incumbent = Some((v, c));
            }
        }
        let free_frac = (0..n)
            .filter(|&j| (node.fixed0 | node.fixed1) >> j & 1 == 0)
            .map(|j| (j, dvals[j].min(1.0 - dvals[j])))
            .collect::<Vec<_>>();
        let integral = dvals.iter().all(|&v| v.min(1.0 - v) <= FRAC_EPS);
        if integral {
            let delta: Vec<bool> = dvals.iter().map(|&v| v > 0.5).collect();
            if let Some((v, c)) = decode_integral(formulation, inst, &delta) {
                if incumbent.as_ref().map_or(true, |(iv, _)| v < *iv) {
                    incumbent = Some((v, c));
                }
            }
            if bound >= prune_line(&incumbent) {
                continue;
            }
        }
        // Branch on the most fractional free indicator; after an integral
        // point that survives pruning, on the lowest-index free one.
        let branch_on = free_frac
            .iter()
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(b.0.cmp(&a.0)))
            .map(|&(j, _)| j);
        let Some(j) = branch_on else { continue };
        for one_side in [false, true] {
            let mut child = Node {
                fixed0: node.fixed0,
                fixed1: node.fixed1,
                bound,
                depth: node.depth + 1,
                cuts: node_cuts.clone(),
            };
            if one_side {
                child.fixed1 |= 1 << j;
                let fixed_early: i64 =
                    (0..n).filter(|&k| child.fixed1 >> k & 1 == 1).map(|k| inst.p[k]).sum();
                if fixed_early > inst.d {
                    continue;
                }
            } else {
                child.fixed0 |= 1 << j;
            }
            seq += 1;
            heap.push(PqItem { node: child, seq });
        }
    }
    let best = incumbent
        .ok_or_else(|| SolveError::Internal("search ended with no incumbent".into()))?;
    if !stats.limit_hit {
        stats.lower_bound = rat_f64(best.0);
    }
    Ok((best, stats))
}

fn named_counts(stats: &SearchStats) -> Vec<(String, usize)> {
    stats.cut_counts.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Branch and cut on the natural or shifted formulation.
///
/// The natural formulation needs an unrestrictive due date; the zero
/// penalty reduction runs first and its leftover tasks are reattached to
/// the core schedule afterwards. The shifted formulation takes any
/// instance directly.
pub fn branch_and_cut(
    formulation: Formulation,
    inst: &Instance,
    config: &SolveConfig,
) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    match formulation {
        Formulation::F1 => {
            if classify(inst) != DueDateClass::Unrestrictive {
                return Err(SolveError::WrongClass { method: "f1" });
            }
            let reduction = reduce_unrestrictive(inst);
            if reduction.core.n() == 0 {
                let schedule = reduction.recompose(&[]);
                let value = evaluate(inst, &schedule);
                let lb = rat_f64(value);
                return SolveReport::checked(
                    inst, value, schedule, "bc-f1", 0, Vec::new(), 0, start.elapsed(), false, lb,
                );
            }
            let ((value, core_schedule), stats) =
                branch_loop(Formulation::F1, &reduction.core, config)?;
            let schedule = reduction.recompose(&core_schedule);
            SolveReport::checked(
                inst,
                value,
                schedule,
                "bc-f1",
                stats.nodes,
                named_counts(&stats),
                stats.lp_iterations,
                start.elapsed(),
                stats.limit_hit,
                stats.lower_bound,
            )
        }
        Formulation::F3 => {
            let ((value, schedule), stats) = branch_loop(Formulation::F3, inst, config)?;
            SolveReport::checked(
                inst,
                value,
                schedule,
                "bc-f3",
                stats.nodes,
                named_counts(&stats),
                stats.lp_iterations,
                start.elapsed(),
                stats.limit_hit,
                stats.lower_bound,
            )
        }
        Formulation::F2 => Err(SolveError::UnsupportedFormulation),
    }
}

/// Branch and bound on the compact formulation: indicator-and-ordering
/// variables only, with the earliness/tardiness costs folded into the
/// objective by the ratio orders. Unrestrictive instances only.
pub fn solve_f2(inst: &Instance, config: &SolveConfig) -> Result<SolveReport, SolveError> {
    let start = Instant::now();
    if classify(inst) != DueDateClass::Unrestrictive {
        return Err(SolveError::WrongClass { method: "f2" });
    }
    let ((value, schedule), stats) = branch_loop(Formulation::F2, inst, config)?;
    SolveReport::checked(
        inst,
        value,
        schedule,
        "bb-f2",
        stats.nodes,
        named_counts(&stats),
        stats.lp_iterations,
        start.elapsed(),
        stats.limit_hit,
        stats.lower_bound,
    )
}

/// Nearest small-denominator rational, for decoding LP coordinates.
fn snap(v: f64) -> Rat {
    for den in 1..=64i64 {
        let num = (v * den as f64).round();
        if (v - num / den as f64).abs() < 1e-6 {
            return Rat::new(num as i64, den);
        }
    }
    Rat::approximate_float(v).unwrap_or_else(|| rat(v.round() as i64))
}

/// Decodes a formulation point with integral indicators back into a
/// schedule.
///
/// Completion times come straight from the encoding inverse (due date
/// minus earliness plus tardiness, around the shifted pivot for the
/// shifted formulation). Early tasks with zero earliness penalty are
/// unconstrained by the objective and may overlap at the left end; they
/// are then rescheduled consecutively from time zero in ascending index,
/// which cannot change the cost. Anything still infeasible afterwards
/// means the point violated the formulation's preconditions.
pub fn extract_schedule(
    formulation: Formulation,
    inst: &Instance,
    point: &[f64],
) -> Result<Schedule, SolveError> {
    let n = inst.n();
    let vs = VarSpace::new(formulation, n);
    assert_eq!(point.len(), vs.ncols());
    let delta: Vec<bool> = (0..n)
        .map(|j| {
            let v = point[vs.delta(j)];
            if v.min(1.0 - v) > FRAC_EPS {
                return Err(SolveError::Internal(format!(
                    "indicator {j} is fractional: {v}"
                )));
            }
            Ok(v > 0.5)
        })
        .collect::<Result<_, _>>()?;
    let mut schedule: Schedule = match formulation {
        Formulation::F2 => {
            let (_, c) = best_for_partition(inst, &delta).ok_or_else(|| {
                SolveError::Internal("early load exceeds the due date".into())
            })?;
            c
        }
        Formulation::F1 => {
            let d = rat(inst.d);
            (0..n)
                .map(|j| d - snap(point[vs.e(j)]) + snap(point[vs.t(j)]))
                .collect()
        }
        Formulation::F3 => {
            let pivot = rat(inst.d) - snap(point[vs.a()]);
            (0..n)
                .map(|j| pivot - snap(point[vs.e(j)]) + snap(point[vs.t(j)]))
                .collect()
        }
    };
    if is_feasible(inst, &schedule).is_ok() {
        return Ok(schedule);
    }
    let mut cursor = rat(0);
    for j in 0..n {
        if delta[j] && inst.alpha[j] == 0 {
            cursor += rat(inst.p[j]);
            schedule[j] = cursor;
        }
    }
    match is_feasible(inst, &schedule) {
        Ok(()) => Ok(schedule),
        Err(why) => Err(SolveError::Internal(format!(
            "decoded schedule infeasible even after the zero-penalty repair: {why:?}"
        ))),
    }
}
