//! Linear descriptions of the scheduling polyhedra.
//!
//! Three variable spaces share one row vocabulary. The natural space (f1)
//! carries earliness/tardiness variables `e`, `t`, early indicators `delta`,
//! and pair variables `x` linearizing `delta XOR delta`. The compact space
//! (f2) keeps only `delta` and `x`; earliness and tardiness become affine
//! functions of them. The shifted space (f3) adds the block shift `a`, the
//! products `b = a * delta`, and reference indicators `gamma` so blocks may
//! start before the due date.
//!
//! All columns are nonnegative by convention; upper bounds that matter
//! appear as explicit rows. Coefficients are exact rationals throughout, so
//! duplicate rows canonicalize to identical keys and validity checks need
//! no tolerance.

use crate::instance::Instance;
use crate::schedule::{self, EncodeError};
use crate::{rat, Rat};
use num_integer::Integer;
use num_traits::Signed;
use thiserror::Error;

/// Which variable space a column index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Formulation {
    F1,
    F2,
    F3,
}

/// Dense column layout for one formulation.
///
/// f1: `e | t | delta | x`; f2: `delta | x`; f3: `e | t | delta | x | a | b
/// | gamma`. `x` is indexed over unordered pairs `i < j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarSpace {
    pub formulation: Formulation,
    pub n: usize,
}

impl VarSpace {
    pub fn new(formulation: Formulation, n: usize) -> Self {
        assert!(n >= 1);
        VarSpace { formulation, n }
    }

    pub fn npairs(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn ncols(&self) -> usize {
        match self.formulation {
            Formulation::F1 => 3 * self.n + self.npairs(),
            Formulation::F2 => self.n + self.npairs(),
            Formulation::F3 => 5 * self.n + self.npairs() + 1,
        }
    }

    pub fn e(&self, j: usize) -> usize {
        assert!(self.formulation != Formulation::F2 && j < self.n);
        j
    }

    pub fn t(&self, j: usize) -> usize {
        assert!(self.formulation != Formulation::F2 && j < self.n);
        self.n + j
    }

    pub fn delta(&self, j: usize) -> usize {
        assert!(j < self.n);
        match self.formulation {
            Formulation::F2 => j,
            _ => 2 * self.n + j,
        }
    }

    pub fn x(&self, i: usize, j: usize) -> usize {
        assert!(i != j && i < self.n && j < self.n);
        let (i, j) = (i.min(j), i.max(j));
        let pair = i * (2 * self.n - i - 1) / 2 + (j - i - 1);
        match self.formulation {
            Formulation::F2 => self.n + pair,
            _ => 3 * self.n + pair,
        }
    }

    pub fn a(&self) -> usize {
        assert_eq!(self.formulation, Formulation::F3);
        3 * self.n + self.npairs()
    }

    pub fn b(&self, j: usize) -> usize {
        assert!(self.formulation == Formulation::F3 && j < self.n);
        self.a() + 1 + j
    }

    pub fn gamma(&self, j: usize) -> usize {
        assert!(self.formulation == Formulation::F3 && j < self.n);
        self.a() + 1 + self.n + j
    }

    pub fn col_name(&self, col: usize) -> String {
        assert!(col < self.ncols());
        let n = self.n;
        let pair_name = |pair: usize| {
            for i in 0..n {
                let row_len = n - i - 1;
                let start = i * (2 * n - i - 1) / 2;
                if pair < start + row_len {
                    return format!("x{}_{}", i, i + 1 + (pair - start));
                }
            }
            unreachable!()
        };
        match self.formulation {
            Formulation::F2 => {
                if col < n {
                    format!("d{col}")
                } else {
                    pair_name(col - n)
                }
            }
            _ => {
                if col < n {
                    format!("e{col}")
                } else if col < 2 * n {
                    format!("t{}", col - n)
                } else if col < 3 * n {
                    format!("d{}", col - 2 * n)
                } else if col < 3 * n + self.npairs() {
                    pair_name(col - 3 * n)
                } else if col == self.a() {
                    "a".to_string()
                } else if col < self.a() + 1 + n {
                    format!("b{}", col - self.a() - 1)
                } else {
                    format!("g{}", col - self.a() - 1 - n)
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// Tags identifying which constraint family a row belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowFamily {
    E0,
    E1,
    T0,
    T1,
    X1,
    X2,
    X3,
    X4,
    S1,
    S2,
    S1p,
    S2p,
    A0,
    A1,
    A2,
    A3,
    Ap0,
    Ap1,
    Ap2,
    Ap3,
    G1,
    G2,
    G3,
    Bound,
    Triangle,
}

impl RowFamily {
    pub const fn name(self) -> &'static str {
        match self {
            RowFamily::E0 => "e0",
            RowFamily::E1 => "e1",
            RowFamily::T0 => "t0",
            RowFamily::T1 => "t1",
            RowFamily::X1 => "x1",
            RowFamily::X2 => "x2",
            RowFamily::X3 => "x3",
            RowFamily::X4 => "x4",
            RowFamily::S1 => "s1",
            RowFamily::S2 => "s2",
            RowFamily::S1p => "s1p",
            RowFamily::S2p => "s2p",
            RowFamily::A0 => "a0",
            RowFamily::A1 => "a1",
            RowFamily::A2 => "a2",
            RowFamily::A3 => "a3",
            RowFamily::Ap0 => "ap0",
            RowFamily::Ap1 => "ap1",
            RowFamily::Ap2 => "ap2",
            RowFamily::Ap3 => "ap3",
            RowFamily::G1 => "g1",
            RowFamily::G2 => "g2",
            RowFamily::G3 => "g3",
            RowFamily::Bound => "bound",
            RowFamily::Triangle => "triangle",
        }
    }
}

/// One linear row: sorted sparse coefficients, sense, right-hand side.
///
/// Construction canonicalizes: zero coefficients dropped, columns sorted,
/// and the whole row scaled by a positive rational so every coefficient and
/// the right-hand side are integers with overall gcd 1. Rows that are the
/// same inequality therefore compare equal via [`Cut::key`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cut {
    pub family: RowFamily,
    pub coeffs: Vec<(usize, Rat)>,
    pub sense: Sense,
    pub rhs: Rat,
    /// Generating task subset for the subset families, generating triple
    /// for triangle rows.
    pub subset: Option<Vec<usize>>,
}

/// Hashable canonical identity of a row (family-agnostic).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CutKey {
    coeffs: Vec<(usize, i64)>,
    sense: Sense,
    rhs: i64,
}

impl Cut {
    pub fn new(
        family: RowFamily,
        coeffs: Vec<(usize, Rat)>,
        sense: Sense,
        rhs: Rat,
        subset: Option<Vec<usize>>,
    ) -> Cut {
        let mut coeffs: Vec<(usize, Rat)> =
            coeffs.into_iter().filter(|(_, v)| *v != rat(0)).collect();
        coeffs.sort_by_key(|&(col, _)| col);
        for w in coeffs.windows(2) {
            assert_ne!(w[0].0, w[1].0, "duplicate column in row");
        }
        assert!(!coeffs.is_empty(), "empty row");
        let mut scale: i64 = 1;
        for (_, v) in coeffs.iter().chain(std::iter::once(&(0, rhs))) {
            scale = scale.lcm(v.denom());
        }
        let mut gcd: i64 = 0;
        for (_, v) in coeffs.iter().chain(std::iter::once(&(0, rhs))) {
            gcd = gcd.gcd(&(v * rat(scale)).to_integer());
        }
        let factor = Rat::new(scale, gcd.max(1));
        let coeffs: Vec<(usize, Rat)> =
            coeffs.into_iter().map(|(col, v)| (col, v * factor)).collect();
        let mut subset = subset;
        if let Some(s) = subset.as_mut() {
            s.sort_unstable();
        }
        Cut { family, coeffs, sense, rhs: rhs * factor, subset }
    }

    pub fn key(&self) -> CutKey {
        CutKey {
            coeffs: self.coeffs.iter().map(|&(col, v)| (col, v.to_integer())).collect(),
            sense: self.sense,
            rhs: self.rhs.to_integer(),
        }
    }

    pub fn lhs(&self, point: &[Rat]) -> Rat {
        self.coeffs.iter().map(|&(col, v)| v * point[col]).sum()
    }

    pub fn lhs_f64(&self, point: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(col, v)| crate::rat_f64(v) * point[col]).sum()
    }

    /// Signed slack: nonnegative iff the row holds at the point.
    pub fn slack(&self, point: &[Rat]) -> Rat {
        let diff = self.lhs(point) - self.rhs;
        match self.sense {
            Sense::Le => -diff,
            Sense::Ge => diff,
            Sense::Eq => -diff.abs(),
        }
    }

    pub fn slack_f64(&self, point: &[f64]) -> f64 {
        let diff = self.lhs_f64(point) - crate::rat_f64(self.rhs);
        match self.sense {
            Sense::Le => -diff,
            Sense::Ge => diff,
            Sense::Eq => -diff.abs(),
        }
    }

    pub fn text(&self, vs: &VarSpace) -> String {
        let mut out = format!("{}: ", self.family.name());
        for (k, &(col, v)) in self.coeffs.iter().enumerate() {
            let sign = if v < rat(0) { "-" } else if k == 0 { "" } else { "+" };
            let mag = v.abs();
            if k > 0 {
                out.push(' ');
            }
            if mag == rat(1) {
                out.push_str(&format!("{sign}{}", vs.col_name(col)));
            } else {
                out.push_str(&format!("{sign}{mag} {}", vs.col_name(col)));
            }
        }
        let sense = match self.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        out.push_str(&format!(" {sense} {}", self.rhs));
        if let Some(s) = &self.subset {
            out.push_str(&format!("  [S={s:?}]"));
        }
        out
    }
}

/// Multi-line text rendering of a row set, for dumps and debugging.
pub fn rows_text(vs: &VarSpace, rows: &[Cut]) -> String {
    rows.iter().map(|r| r.text(vs)).collect::<Vec<_>>().join("\n")
}

/// The subset weight `g_p(S) = ((sum p)^2 + sum p^2) / 2`, the tight load
/// bound for completion-time vectors.
pub fn gp(p: &[i64], subset: &[usize]) -> Rat {
    let total: i64 = subset.iter().map(|&j| p[j]).sum();
    let squares: i64 = subset.iter().map(|&j| p[j] * p[j]).sum();
    Rat::new(total * total + squares, 2)
}

fn x_rows(vs: &VarSpace) -> Vec<Cut> {
    let mut rows = Vec::new();
    let families = [RowFamily::X1, RowFamily::X2, RowFamily::X3, RowFamily::X4];
    for family in families {
        for i in 0..vs.n {
            for j in i + 1..vs.n {
                let (x, di, dj) = (vs.x(i, j), vs.delta(i), vs.delta(j));
                let row = match family {
                    // x >= delta_i - delta_j and the mirror.
                    RowFamily::X1 => {
                        Cut::new(family, vec![(x, rat(1)), (di, rat(-1)), (dj, rat(1))], Sense::Ge, rat(0), None)
                    }
                    RowFamily::X2 => {
                        Cut::new(family, vec![(x, rat(1)), (di, rat(1)), (dj, rat(-1))], Sense::Ge, rat(0), None)
                    }
                    // x <= delta_i + delta_j and x <= 2 - delta_i - delta_j.
                    RowFamily::X3 => {
                        Cut::new(family, vec![(x, rat(1)), (di, rat(-1)), (dj, rat(-1))], Sense::Le, rat(0), None)
                    }
                    RowFamily::X4 => {
                        Cut::new(family, vec![(x, rat(1)), (di, rat(1)), (dj, rat(1))], Sense::Le, rat(2), None)
                    }
                    _ => unreachable!(),
                };
                rows.push(row);
            }
        }
    }
    rows
}

fn delta_bounds(vs: &VarSpace) -> Vec<Cut> {
    (0..vs.n)
        .map(|j| Cut::new(RowFamily::Bound, vec![(vs.delta(j), rat(1))], Sense::Le, rat(1), None))
        .collect()
}

/// Base rows of the natural formulation: variable bounds tying `e`/`t` to
/// `delta`, the four `x` linearization families, and `delta <= 1`.
pub fn base_rows_f1(inst: &Instance) -> Vec<Cut> {
    let vs = VarSpace::new(Formulation::F1, inst.n());
    let total = inst.ptotal();
    let mut rows = Vec::new();
    for j in 0..inst.n() {
        rows.push(Cut::new(RowFamily::E0, vec![(vs.e(j), rat(1))], Sense::Ge, rat(0), None));
    }
    for j in 0..inst.n() {
        // e_j <= delta_j (p(J) - p_j): only early tasks may be early, by at
        // most the total length of the other tasks.
        rows.push(Cut::new(
            RowFamily::E1,
            vec![(vs.e(j), rat(1)), (vs.delta(j), rat(-(total - inst.p[j])))],
            Sense::Le,
            rat(0),
            None,
        ));
    }
    for j in 0..inst.n() {
        rows.push(Cut::new(RowFamily::T0, vec![(vs.t(j), rat(1))], Sense::Ge, rat(0), None));
    }
    for j in 0..inst.n() {
        // t_j <= (1 - delta_j) p(J).
        rows.push(Cut::new(
            RowFamily::T1,
            vec![(vs.t(j), rat(1)), (vs.delta(j), rat(total))],
            Sense::Le,
            rat(total),
            None,
        ));
    }
    rows.extend(x_rows(&vs));
    rows.extend(delta_bounds(&vs));
    rows
}

/// Base rows of the compact formulation: just the `x` linearization and the
/// `delta` box; everything else is folded into the objective.
pub fn base_rows_f2(inst: &Instance) -> Vec<Cut> {
    let vs = VarSpace::new(Formulation::F2, inst.n());
    let mut rows = x_rows(&vs);
    rows.extend(delta_bounds(&vs));
    rows
}

/// Base rows of the shifted formulation: the natural rows on `e`/`t` plus
/// the families coupling the shift `a`, its products `b`, and the reference
/// indicators `gamma`.
pub fn base_rows_f3(inst: &Instance) -> Vec<Cut> {
    let vs = VarSpace::new(Formulation::F3, inst.n());
    let n = inst.n();
    let total = inst.ptotal();
    let d = inst.d;
    let mut rows = Vec::new();
    for j in 0..n {
        rows.push(Cut::new(RowFamily::E0, vec![(vs.e(j), rat(1))], Sense::Ge, rat(0), None));
    }
    for j in 0..n {
        rows.push(Cut::new(
            RowFamily::E1,
            vec![(vs.e(j), rat(1)), (vs.delta(j), rat(-(total - inst.p[j])))],
            Sense::Le,
            rat(0),
            None,
        ));
    }
    for j in 0..n {
        rows.push(Cut::new(RowFamily::T0, vec![(vs.t(j), rat(1))], Sense::Ge, rat(0), None));
    }
    for j in 0..n {
        rows.push(Cut::new(
            RowFamily::T1,
            vec![(vs.t(j), rat(1)), (vs.delta(j), rat(total))],
            Sense::Le,
            rat(total),
            None,
        ));
    }
    rows.extend(x_rows(&vs));
    rows.push(Cut::new(RowFamily::A0, vec![(vs.a(), rat(1))], Sense::Ge, rat(0), None));
    for j in 0..n {
        // Early tasks must fit between time 0 and the block pivot d - a.
        rows.push(Cut::new(
            RowFamily::A1,
            vec![(vs.e(j), rat(1)), (vs.delta(j), rat(inst.p[j])), (vs.a(), rat(1))],
            Sense::Le,
            rat(d),
            None,
        ));
    }
    for j in 0..n {
        // The reference task must cover the shift: a <= p_j + (1 - gamma_j) d.
        rows.push(Cut::new(
            RowFamily::A2,
            vec![(vs.a(), rat(1)), (vs.gamma(j), rat(d))],
            Sense::Le,
            rat(inst.p[j] + d),
            None,
        ));
    }
    {
        let mut coeffs: Vec<(usize, Rat)> =
            (0..n).map(|j| (vs.delta(j), rat(inst.p[j]))).collect();
        coeffs.push((vs.a(), rat(1)));
        rows.push(Cut::new(RowFamily::A3, coeffs, Sense::Le, rat(d), None));
    }
    {
        let coeffs: Vec<(usize, Rat)> = (0..n).map(|j| (vs.gamma(j), rat(1))).collect();
        rows.push(Cut::new(RowFamily::G1, coeffs, Sense::Eq, rat(1), None));
    }
    for j in 0..n {
        // The reference task is never early.
        rows.push(Cut::new(
            RowFamily::G2,
            vec![(vs.delta(j), rat(1)), (vs.gamma(j), rat(1))],
            Sense::Le,
            rat(1),
            None,
        ));
    }
    for j in 0..n {
        // Non-reference tardiness may reach p(J); the reference itself only p_j.
        rows.push(Cut::new(
            RowFamily::G3,
            vec![(vs.t(j), rat(1)), (vs.gamma(j), rat(total - inst.p[j]))],
            Sense::Le,
            rat(total),
            None,
        ));
    }
    for j in 0..n {
        rows.push(Cut::new(RowFamily::Ap0, vec![(vs.b(j), rat(1))], Sense::Ge, rat(0), None));
    }
    for j in 0..n {
        rows.push(Cut::new(
            RowFamily::Ap1,
            vec![(vs.b(j), rat(1)), (vs.a(), rat(-1))],
            Sense::Le,
            rat(0),
            None,
        ));
    }
    for j in 0..n {
        rows.push(Cut::new(
            RowFamily::Ap2,
            vec![(vs.b(j), rat(1)), (vs.delta(j), rat(-d))],
            Sense::Le,
            rat(0),
            None,
        ));
    }
    for j in 0..n {
        // b_j >= a - (1 - delta_j) d pins b_j to a on the early side.
        rows.push(Cut::new(
            RowFamily::Ap3,
            vec![(vs.b(j), rat(1)), (vs.a(), rat(-1)), (vs.delta(j), rat(-d))],
            Sense::Ge,
            rat(-d),
            None,
        ));
    }
    rows.extend(delta_bounds(&vs));
    rows
}

/// One subset row. `S1`/`S2` bound the early/tardy load of `S` from below
/// in the natural variables; the primed variants are the same rows read in
/// the shifted space (identical columns).
///
/// `S1`: `sum_S p_i e_i >= sum_{i<j in S} p_i p_j (delta_i + delta_j -
/// x_ij) / 2`. `S2`: `sum_S p_i t_i >= sum_{i<j in S} p_i p_j (2 - delta_i
/// - delta_j - x_ij) / 2 + sum_S p_i^2 (1 - delta_i)`, which rearranges to
/// right-hand side `g_p(S)`.
pub fn s_row(family: RowFamily, inst: &Instance, subset: &[usize]) -> Cut {
    assert!(!subset.is_empty(), "subset rows need a nonempty subset");
    let vs = VarSpace::new(Formulation::F1, inst.n());
    let p = &inst.p;
    let in_s_total: i64 = subset.iter().map(|&j| p[j]).sum();
    let mut coeffs: Vec<(usize, Rat)> = Vec::new();
    match family {
        RowFamily::S1 | RowFamily::S1p => {
            for &i in subset {
                coeffs.push((vs.e(i), rat(p[i])));
                // - p_i p(S \ i) / 2 on delta_i.
                coeffs.push((vs.delta(i), -Rat::new(p[i] * (in_s_total - p[i]), 2)));
            }
            for (k, &i) in subset.iter().enumerate() {
                for &j in &subset[k + 1..] {
                    coeffs.push((vs.x(i, j), Rat::new(p[i] * p[j], 2)));
                }
            }
            Cut::new(family, coeffs, Sense::Ge, rat(0), Some(subset.to_vec()))
        }
        RowFamily::S2 | RowFamily::S2p => {
            for &i in subset {
                coeffs.push((vs.t(i), rat(p[i])));
                coeffs.push((vs.delta(i), Rat::new(p[i] * (in_s_total - p[i]), 2) + rat(p[i] * p[i])));
            }
            for (k, &i) in subset.iter().enumerate() {
                for &j in &subset[k + 1..] {
                    coeffs.push((vs.x(i, j), Rat::new(p[i] * p[j], 2)));
                }
            }
            Cut::new(family, coeffs, Sense::Ge, gp(p, subset), Some(subset.to_vec()))
        }
        _ => panic!("s_row called with non-subset family {:?}", family),
    }
}

/// Violated rows at an exact point, with their (negative) slack.
pub fn check_point(rows: &[Cut], point: &[Rat]) -> Vec<(usize, Rat)> {
    rows.iter()
        .enumerate()
        .filter_map(|(k, row)| {
            let s = row.slack(point);
            (s < rat(0)).then_some((k, s))
        })
        .collect()
}

/// Violated rows at a floating-point point, slack below `-tol`.
pub fn check_point_f64(rows: &[Cut], point: &[f64], tol: f64) -> Vec<(usize, f64)> {
    rows.iter()
        .enumerate()
        .filter_map(|(k, row)| {
            let s = row.slack_f64(point);
            (s < -tol).then_some((k, s))
        })
        .collect()
}

/// Natural-space image of a schedule: `theta` split, `delta` marking tasks
/// completing at or before `d`, `x` the XOR of the `delta`s. Satisfies all
/// f1 rows when the schedule is a block around the due date.
pub fn encode_f1_point(inst: &Instance, c: &[Rat]) -> Vec<Rat> {
    let vs = VarSpace::new(Formulation::F1, inst.n());
    let split = schedule::theta(inst, c);
    let delta: Vec<bool> = (0..inst.n()).map(|j| c[j] <= rat(inst.d)).collect();
    let mut point = vec![rat(0); vs.ncols()];
    for j in 0..inst.n() {
        point[vs.e(j)] = split.e[j];
        point[vs.t(j)] = split.t[j];
        point[vs.delta(j)] = rat(delta[j] as i64);
    }
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            point[vs.x(i, j)] = rat((delta[i] != delta[j]) as i64);
        }
    }
    point
}

/// Shifted-space image of a schedule via the on-time-or-later reference
/// encoding. Satisfies all f3 rows when the schedule is an idle-free block
/// whose reference task starts at or before `d` (any output of
/// `tighten_to_block`).
pub fn encode_f3_point(inst: &Instance, c: &[Rat]) -> Result<Vec<Rat>, EncodeError> {
    let vs = VarSpace::new(Formulation::F3, inst.n());
    let enc = schedule::theta_prime_tilde(inst, c)?;
    let mut point = vec![rat(0); vs.ncols()];
    for j in 0..inst.n() {
        point[vs.e(j)] = enc.e[j];
        point[vs.t(j)] = enc.t[j];
        point[vs.delta(j)] = rat(enc.delta[j] as i64);
        point[vs.b(j)] = enc.b[j];
    }
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            point[vs.x(i, j)] = rat((enc.delta[i] != enc.delta[j]) as i64);
        }
    }
    point[vs.a()] = enc.a;
    point[vs.gamma(enc.reference)] = rat(1);
    Ok(point)
}

/// Cap on exhaustive subset scans in the perturbation utilities.
pub const MAX_SUBSET_SCAN: usize = 14;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PerturbError {
    #[error("subset scan limited to {MAX_SUBSET_SCAN} tasks, got {0}")]
    TooManyTasks(usize),
    #[error("point violates a subset load inequality")]
    OutsidePolytope,
    #[error("tasks {0} and {1} do not overlap in the given point")]
    NoOverlap(usize, usize),
    #[error("task {0} sits below the total load, nothing to descend")]
    BelowTotalLoad(usize),
}

/// Minimum slack of the subset load inequalities over all nonempty subsets,
/// restricted to subsets containing everything in `with` and nothing in
/// `without`. Exhaustive scan; caller bounds n.
fn min_subset_slack(p: &[i64], y: &[Rat], with: &[usize], without: &[usize]) -> Rat {
    let n = p.len();
    let mut best: Option<Rat> = None;
    'mask: for mask in 1u32..(1 << n) {
        for &j in with {
            if mask & (1 << j) == 0 {
                continue 'mask;
            }
        }
        for &j in without {
            if mask & (1 << j) != 0 {
                continue 'mask;
            }
        }
        let subset: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
        let load: Rat = subset.iter().map(|&j| rat(p[j]) * y[j]).sum();
        let slack = load - gp(p, &subset);
        if best.map_or(true, |b| slack < b) {
            best = Some(slack);
        }
    }
    best.expect("some subset matches")
}

/// Exhaustively checks `sum_S p_i y_i >= g_p(S)` for every nonempty S.
pub fn satisfies_load_inequalities(p: &[i64], y: &[Rat]) -> bool {
    assert!(p.len() <= MAX_SUBSET_SCAN);
    min_subset_slack(p, y, &[], &[]) >= rat(0)
}

/// Swaps overlap between two tasks without leaving the load polyhedron.
///
/// Given a point satisfying all subset load inequalities where tasks `i`
/// and `j` overlap (`y_i <= y_j < y_i + p_j`), returns the two points `y
/// +/- (eps/p_i) 1_i -/+ (eps/p_j) 1_j` and the step `eps`, the smallest
/// slack over subsets separating `i` from `j`. The step is strictly
/// positive and both outputs satisfy every load inequality again; `p . y`
/// is unchanged. This is the exchange argument showing optima can be sought
/// among non-overlapping points.
pub fn perturb_pair(
    p: &[i64],
    y: &[Rat],
    i: usize,
    j: usize,
) -> Result<(Vec<Rat>, Vec<Rat>, Rat), PerturbError> {
    let n = p.len();
    assert_eq!(y.len(), n);
    assert!(i < n && j < n && i != j);
    if n > MAX_SUBSET_SCAN {
        return Err(PerturbError::TooManyTasks(n));
    }
    if min_subset_slack(p, y, &[], &[]) < rat(0) {
        return Err(PerturbError::OutsidePolytope);
    }
    if !(y[i] <= y[j] && y[j] < y[i] + rat(p[j])) {
        return Err(PerturbError::NoOverlap(i, j));
    }
    let m1 = min_subset_slack(p, y, &[j], &[i]);
    let m2 = min_subset_slack(p, y, &[i], &[j]);
    let eps = m1.min(m2);
    let mut plus_minus = y.to_vec();
    plus_minus[i] += eps / rat(p[i]);
    plus_minus[j] -= eps / rat(p[j]);
    let mut minus_plus = y.to_vec();
    minus_plus[i] -= eps / rat(p[i]);
    minus_plus[j] += eps / rat(p[j]);
    Ok((plus_minus, minus_plus, eps))
}

/// Pulls one oversized coordinate down without leaving the load polyhedron.
///
/// Requires `y_j < y_i + p_j` (overlap from above) and `y_j >= p(J)`.
/// Returns `y - (eps/p_j) 1_j` with `eps` the smallest slack over subsets
/// containing `j`; the step is strictly positive.
pub fn descend_single(
    p: &[i64],
    y: &[Rat],
    i: usize,
    j: usize,
) -> Result<(Vec<Rat>, Rat), PerturbError> {
    let n = p.len();
    assert_eq!(y.len(), n);
    assert!(i < n && j < n && i != j);
    if n > MAX_SUBSET_SCAN {
        return Err(PerturbError::TooManyTasks(n));
    }
    if min_subset_slack(p, y, &[], &[]) < rat(0) {
        return Err(PerturbError::OutsidePolytope);
    }
    if y[j] >= y[i] + rat(p[j]) {
        return Err(PerturbError::NoOverlap(i, j));
    }
    let total: i64 = p.iter().sum();
    if y[j] < rat(total) {
        return Err(PerturbError::BelowTotalLoad(j));
    }
    let eps = min_subset_slack(p, y, &[j], &[]);
    let mut down = y.to_vec();
    down[j] -= eps / rat(p[j]);
    Ok((down, eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use crate::instance::classify;
    use crate::instance::DueDateClass;
    use crate::schedule::{tighten_to_block, to_dblock};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| rat(x)).collect()
    }

    #[test]
    fn gp_small_cases() {
        assert_eq!(gp(&[5], &[0]), rat(25));
        assert_eq!(gp(&[3, 4], &[0, 1]), rat(37));
        assert_eq!(gp(&[3, 4], &[]), rat(0));
    }

    #[test]
    fn gp_follows_the_insertion_recurrence() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=10);
            let p: Vec<i64> = (0..n).map(|_| rng.gen_range(1..=20)).collect();
            let mut subset: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
            let outside: Vec<usize> = (0..n).filter(|j| !subset.contains(j)).collect();
            let Some(&i) = outside.first() else { continue };
            let before = gp(&p, &subset);
            let in_s: i64 = subset.iter().map(|&j| p[j]).sum();
            subset.push(i);
            assert_eq!(gp(&p, &subset), before + rat(p[i] * (in_s + p[i])));
        }
    }

    #[test]
    fn var_space_layout_is_dense_and_disjoint() {
        for formulation in [Formulation::F1, Formulation::F2, Formulation::F3] {
            let vs = VarSpace::new(formulation, 4);
            let mut seen = vec![false; vs.ncols()];
            let mut visit = |col: usize| {
                assert!(!seen[col], "column {col} mapped twice");
                seen[col] = true;
            };
            if formulation != Formulation::F2 {
                for j in 0..4 {
                    visit(vs.e(j));
                    visit(vs.t(j));
                }
            }
            for j in 0..4 {
                visit(vs.delta(j));
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    visit(vs.x(i, j));
                    assert_eq!(vs.x(i, j), vs.x(j, i));
                }
            }
            if formulation == Formulation::F3 {
                visit(vs.a());
                for j in 0..4 {
                    visit(vs.b(j));
                    visit(vs.gamma(j));
                }
            }
            assert!(seen.iter().all(|&s| s), "unused column in {formulation:?}");
        }
    }

    #[test]
    fn col_names_round_trip_the_layout() {
        let vs = VarSpace::new(Formulation::F3, 3);
        assert_eq!(vs.col_name(vs.e(0)), "e0");
        assert_eq!(vs.col_name(vs.t(2)), "t2");
        assert_eq!(vs.col_name(vs.delta(1)), "d1");
        assert_eq!(vs.col_name(vs.x(0, 2)), "x0_2");
        assert_eq!(vs.col_name(vs.x(1, 2)), "x1_2");
        assert_eq!(vs.col_name(vs.a()), "a");
        assert_eq!(vs.col_name(vs.b(0)), "b0");
        assert_eq!(vs.col_name(vs.gamma(2)), "g2");
    }

    #[test]
    fn f1_base_row_census() {
        let inst = Instance::new(vec![3, 4], vec![1, 1], vec![1, 1], 7).unwrap();
        let rows = base_rows_f1(&inst);
        let count = |f: RowFamily| rows.iter().filter(|r| r.family == f).count();
        assert_eq!(count(RowFamily::E0) + count(RowFamily::E1) + count(RowFamily::T0) + count(RowFamily::T1), 8);
        assert_eq!(
            count(RowFamily::X1) + count(RowFamily::X2) + count(RowFamily::X3) + count(RowFamily::X4),
            4
        );
        assert_eq!(count(RowFamily::Bound), 2);
        let vs = VarSpace::new(Formulation::F1, 2);
        let e1_row = rows.iter().find(|r| r.family == RowFamily::E1).unwrap();
        assert_eq!(e1_row.coeffs, vec![(vs.e(0), rat(1)), (vs.delta(0), rat(-4))]);
        assert_eq!(e1_row.sense, Sense::Le);
        assert_eq!(e1_row.rhs, rat(0));
    }

    #[test]
    fn integral_deltas_force_x_to_xor() {
        let inst = Instance::new(vec![2, 3], vec![1, 1], vec![1, 1], 5).unwrap();
        let vs = VarSpace::new(Formulation::F2, 2);
        let rows = base_rows_f2(&inst);
        for d0 in 0..=1i64 {
            for d1 in 0..=1i64 {
                for x8 in 0..=8i64 {
                    let x = Rat::new(x8, 8);
                    let mut point = vec![rat(0); vs.ncols()];
                    point[vs.delta(0)] = rat(d0);
                    point[vs.delta(1)] = rat(d1);
                    point[vs.x(0, 1)] = x;
                    let ok = check_point(&rows, &point).is_empty();
                    assert_eq!(ok, x == rat((d0 != d1) as i64), "d=({d0},{d1}), x={x}");
                }
            }
        }
    }

    #[test]
    fn f3_single_task_rows_pin_the_reference() {
        let inst = Instance::new(vec![4], vec![2], vec![3], 9).unwrap();
        let vs = VarSpace::new(Formulation::F3, 1);
        let rows = base_rows_f3(&inst);
        // gamma = 1 and delta = 0 are forced; a can reach p but not beyond.
        let mut point = vec![rat(0); vs.ncols()];
        point[vs.gamma(0)] = rat(1);
        point[vs.t(0)] = rat(4);
        point[vs.a()] = rat(4);
        assert!(check_point(&rows, &point).is_empty());
        point[vs.a()] = rat(5);
        assert!(!check_point(&rows, &point).is_empty());
        point[vs.a()] = rat(0);
        point[vs.gamma(0)] = rat(0);
        assert!(!check_point(&rows, &point).is_empty(), "gamma must sum to one");
        point[vs.gamma(0)] = rat(1);
        point[vs.delta(0)] = rat(1);
        assert!(!check_point(&rows, &point).is_empty(), "reference cannot be early");
    }

    #[test]
    fn subset_rows_expand_as_displayed() {
        let inst = Instance::new(vec![3, 4], vec![1, 1], vec![1, 1], 7).unwrap();
        let vs = VarSpace::new(Formulation::F1, 2);
        let s1 = s_row(RowFamily::S1, &inst, &[0, 1]);
        assert_eq!(
            s1.coeffs,
            vec![
                (vs.e(0), rat(3)),
                (vs.e(1), rat(4)),
                (vs.delta(0), rat(-6)),
                (vs.delta(1), rat(-6)),
                (vs.x(0, 1), rat(6)),
            ]
        );
        assert_eq!((s1.sense, s1.rhs), (Sense::Ge, rat(0)));
        let s2 = s_row(RowFamily::S2, &inst, &[0, 1]);
        assert_eq!(
            s2.coeffs,
            vec![
                (vs.t(0), rat(3)),
                (vs.t(1), rat(4)),
                (vs.delta(0), rat(15)),
                (vs.delta(1), rat(22)),
                (vs.x(0, 1), rat(6)),
            ]
        );
        assert_eq!((s2.sense, s2.rhs), (Sense::Ge, rat(37)));
        // Singletons: p_j e_j >= 0 and p_j t_j >= p_j^2 (1 - delta_j),
        // canonicalized by the common factor p_j.
        let s1s = s_row(RowFamily::S1, &inst, &[1]);
        assert_eq!(s1s.coeffs, vec![(vs.e(1), rat(1))]);
        assert_eq!(s1s.rhs, rat(0));
        let s2s = s_row(RowFamily::S2, &inst, &[1]);
        assert_eq!(s2s.coeffs, vec![(vs.t(1), rat(1)), (vs.delta(1), rat(4))]);
        assert_eq!(s2s.rhs, rat(4));
    }

    #[test]
    fn cut_canonicalization_dedupes_scaled_rows() {
        let a = Cut::new(RowFamily::S1, vec![(0, rat(2)), (3, rat(-4))], Sense::Ge, rat(6), None);
        let b = Cut::new(
            RowFamily::Triangle,
            vec![(3, Rat::new(-2, 3)), (0, Rat::new(1, 3))],
            Sense::Ge,
            rat(1),
            None,
        );
        assert_eq!(a.key(), b.key());
        assert_eq!(a.coeffs, vec![(0, rat(1)), (3, rat(-2))]);
        assert_eq!(a.rhs, rat(3));
    }

    #[test]
    fn check_point_reports_signed_slack() {
        let rows = vec![
            Cut::new(RowFamily::Bound, vec![(0, rat(1))], Sense::Le, rat(1), None),
            Cut::new(RowFamily::E0, vec![(1, rat(1))], Sense::Ge, rat(0), None),
            Cut::new(RowFamily::G1, vec![(0, rat(1)), (1, rat(1))], Sense::Eq, rat(1), None),
        ];
        // The equality row balances at (2,-1), so only the two bound rows fail.
        let violated = check_point(&rows, &[rat(2), rat(-1)]);
        assert_eq!(violated, vec![(0, rat(-1)), (1, rat(-1))]);
        assert_eq!(check_point(&rows, &[rat(1), rat(1)]), vec![(2, rat(-1))]);
        assert!(check_point(&rows, &[rat(1), rat(0)]).is_empty());
        let nearly = [1.0 + 1e-9, -1e-9];
        assert!(check_point_f64(&rows, &nearly, 1e-6).is_empty());
    }

    /// Every tightened feasible schedule must satisfy the full natural and
    /// shifted row systems, including all exponentially many subset rows.
    /// The acceptance suite runs the large version; this is the smoke test.
    #[test]
    fn block_images_satisfy_all_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for round in 0..120 {
            let n = rng.gen_range(1..=6);
            let mut inst = gen::random_instance(&mut rng, n, (1, 6), (0, 9), (0, 9));
            if round % 2 == 0 {
                inst.d = inst.ptotal() + rng.gen_range(0..4);
            }
            let raw = gen::random_feasible_schedule(&inst, &mut rng);
            let c = tighten_to_block(&inst, &raw);
            let subsets: Vec<Vec<usize>> = (1u32..1 << n)
                .map(|mask| (0..n).filter(|&j| mask & (1 << j) != 0).collect())
                .collect();
            if classify(&inst) == DueDateClass::Unrestrictive {
                // The natural encoding needs the block split at d exactly.
                let point = encode_f1_point(&inst, &to_dblock(&inst, &raw));
                let mut rows = base_rows_f1(&inst);
                for s in &subsets {
                    rows.push(s_row(RowFamily::S1, &inst, s));
                    rows.push(s_row(RowFamily::S2, &inst, s));
                }
                let violated = check_point(&rows, &point);
                assert!(violated.is_empty(), "f1 rows violated: {violated:?}");
            }
            let point = encode_f3_point(&inst, &c).expect("tightened block always encodes");
            let mut rows = base_rows_f3(&inst);
            for s in &subsets {
                rows.push(s_row(RowFamily::S1p, &inst, s));
                rows.push(s_row(RowFamily::S2p, &inst, s));
            }
            let violated = check_point(&rows, &point);
            assert!(violated.is_empty(), "f3 rows violated: {violated:?} for c={c:?}");
        }
    }

    #[test]
    fn perturbation_on_the_tight_two_task_point() {
        // y = (3/2, 3/2) sits on the pair inequality with slack 1/2 on each
        // singleton; the swap step moves it to the two feasible schedules.
        let p = [1, 1];
        let y = vec![Rat::new(3, 2), Rat::new(3, 2)];
        let (plus, minus, eps) = perturb_pair(&p, &y, 0, 1).unwrap();
        assert_eq!(eps, Rat::new(1, 2));
        assert_eq!(plus, ints(&[2, 1]));
        assert_eq!(minus, ints(&[1, 2]));
        assert!(satisfies_load_inequalities(&p, &plus));
        assert!(satisfies_load_inequalities(&p, &minus));
    }

    #[test]
    fn perturbation_rejects_non_overlapping_points() {
        let p = [2, 2];
        let y = ints(&[2, 4]);
        assert_eq!(perturb_pair(&p, &y, 0, 1), Err(PerturbError::NoOverlap(0, 1)));
        assert_eq!(perturb_pair(&p, &ints(&[1, 3]), 0, 1), Err(PerturbError::OutsidePolytope));
    }

    #[test]
    fn descent_on_a_hand_checked_point() {
        let p = [1, 1];
        let y = vec![Rat::new(8, 5), Rat::new(5, 2)];
        let (down, eps) = descend_single(&p, &y, 0, 1).unwrap();
        assert_eq!(eps, Rat::new(11, 10));
        assert_eq!(down, vec![Rat::new(8, 5), Rat::new(7, 5)]);
        assert!(satisfies_load_inequalities(&p, &down));
    }

    #[test]
    fn random_overlapping_points_always_admit_the_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..80 {
            let n = rng.gen_range(2..=5);
            let inst = gen::random_instance(&mut rng, n, (1, 5), (1, 4), (1, 4));
            let base = gen::random_feasible_schedule(&inst, &mut rng);
            let mut y = base.clone();
            let i = (0..n).max_by_key(|&j| (y[j], j)).unwrap();
            let mut others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            others.shuffle(&mut rng);
            let j = others[0];
            // Raising a coordinate can only help load inequalities, so the
            // overlapped point is still inside the polyhedron.
            y[j] = y[i] + rat(inst.p[j]) * Rat::new(rng.gen_range(0..4), 4);
            let dot = |v: &[Rat]| -> Rat { (0..n).map(|k| rat(inst.p[k]) * v[k]).sum() };
            let (plus, minus, eps) = perturb_pair(&inst.p, &y, i, j).unwrap();
            assert!(eps > rat(0));
            assert!(satisfies_load_inequalities(&inst.p, &plus));
            assert!(satisfies_load_inequalities(&inst.p, &minus));
            assert_eq!(dot(&plus), dot(&y));
            assert_eq!(dot(&minus), dot(&y));

            // Push everything past p(J), overlap j onto i from above, and
            // descend.
            let shift = rat(inst.ptotal());
            let mut high: Vec<Rat> = base.iter().map(|&v| v + shift).collect();
            let i = (0..n).max_by_key(|&j| (high[j], j)).unwrap();
            let j = *(0..n).filter(|&j| j != i).collect::<Vec<_>>().choose(&mut rng).unwrap();
            high[j] = high[i] + rat(inst.p[j]) * Rat::new(rng.gen_range(0..4), 4);
            let (down, eps) = descend_single(&inst.p, &high, i, j).unwrap();
            assert!(eps > rat(0));
            assert!(satisfies_load_inequalities(&inst.p, &down));
        }
    }
}
