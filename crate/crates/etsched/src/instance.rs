//! Problem instances and the OR-Library benchmark file format.
//!
//! All instance data is integral and validated on construction: processing
//! times are positive, penalties and the due date nonnegative. Benchmark
//! files follow the common due date format from the OR-Library (Biskup and
//! Feldmann, 2001): a count of instances, then for each instance the number
//! of tasks followed by one `p alpha beta` triple per task. Due dates are not
//! part of the files; they derive from a restrictiveness factor `h` as
//! `d = floor(h * sum p)`.

use crate::{rat, Rat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Optional provenance carried along with an instance.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// 1-based index within the source file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    /// Restrictiveness factor used to derive `d`, as the original decimal text.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
}

/// A validated scheduling instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub p: Vec<i64>,
    pub alpha: Vec<i64>,
    pub beta: Vec<i64>,
    pub d: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("instance must contain at least one task")]
    Empty,
    #[error("p, alpha, beta lengths differ: {0}, {1}, {2}")]
    LengthMismatch(usize, usize, usize),
    #[error("task {task}: processing time must be positive, got {value}")]
    NonPositiveProcessingTime { task: usize, value: i64 },
    #[error("task {task}: penalty must be nonnegative, got {value}")]
    NegativePenalty { task: usize, value: i64 },
    #[error("due date must be nonnegative, got {0}")]
    NegativeDueDate(i64),
    #[error("restrictiveness factor must be nonnegative, got {0}")]
    NegativeFactor(Rat),
    #[error("token {index}: expected an integer, got {text:?}")]
    BadToken { index: usize, text: String },
    #[error("file ended early: expected {expected} more integer(s)")]
    Truncated { expected: usize },
    #[error("{extra} unexpected trailing token(s)")]
    TrailingTokens { extra: usize },
    #[error("instance {index}: declared {declared} tasks, limit is {limit}")]
    TaskCountOutOfRange {
        index: usize,
        declared: i64,
        limit: usize,
    },
}

impl Instance {
    /// Validates and builds an instance without metadata.
    pub fn new(p: Vec<i64>, alpha: Vec<i64>, beta: Vec<i64>, d: i64) -> Result<Self, InstanceError> {
        if p.len() != alpha.len() || p.len() != beta.len() {
            return Err(InstanceError::LengthMismatch(p.len(), alpha.len(), beta.len()));
        }
        if p.is_empty() {
            return Err(InstanceError::Empty);
        }
        for (j, &pj) in p.iter().enumerate() {
            if pj <= 0 {
                return Err(InstanceError::NonPositiveProcessingTime { task: j, value: pj });
            }
        }
        for (j, &v) in alpha.iter().chain(beta.iter()).enumerate() {
            if v < 0 {
                return Err(InstanceError::NegativePenalty { task: j % p.len(), value: v });
            }
        }
        if d < 0 {
            return Err(InstanceError::NegativeDueDate(d));
        }
        Ok(Instance { p, alpha, beta, d, meta: None })
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Total processing time of all tasks.
    pub fn ptotal(&self) -> i64 {
        self.p.iter().sum()
    }
}

/// A due date at or beyond the total processing time never forces a task to
/// start before time zero, which is what makes the two-sided block structure
/// around `d` attainable for every early/tardy split.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DueDateClass {
    Unrestrictive,
    General,
}

pub fn classify(inst: &Instance) -> DueDateClass {
    if inst.d >= inst.ptotal() {
        DueDateClass::Unrestrictive
    } else {
        DueDateClass::General
    }
}

/// Task data as read from a benchmark file, before a due date is attached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawInstance {
    pub p: Vec<i64>,
    pub alpha: Vec<i64>,
    pub beta: Vec<i64>,
}

impl RawInstance {
    pub fn n(&self) -> usize {
        self.p.len()
    }

    pub fn ptotal(&self) -> i64 {
        self.p.iter().sum()
    }
}

/// Upper bound on per-instance task counts accepted from files; guards
/// against misreading a penalty as a task count.
const MAX_TASKS: usize = 100_000;

/// Parses an OR-Library common due date benchmark file.
///
/// Layout: instance count `K`, then for each instance its task count `n`
/// and `n` whitespace-separated `p alpha beta` triples. Every token must be
/// an integer and the file must contain exactly the announced data.
pub fn parse_benchmark(text: &str) -> Result<Vec<RawInstance>, InstanceError> {
    parse_benchmark_with(text, None)
}

/// Like [`parse_benchmark`] but for files that omit the per-instance task
/// count line; `fixed_n` supplies the task count for every instance.
pub fn parse_benchmark_with(
    text: &str,
    fixed_n: Option<usize>,
) -> Result<Vec<RawInstance>, InstanceError> {
    let mut toks = Tokens::new(text);
    let count = toks.next_int()?;
    if count < 0 || count as usize > MAX_TASKS {
        return Err(InstanceError::TaskCountOutOfRange {
            index: 0,
            declared: count,
            limit: MAX_TASKS,
        });
    }
    let mut out = Vec::with_capacity(count as usize);
    for k in 0..count as usize {
        let n = match fixed_n {
            Some(n) => n,
            None => {
                let n = toks.next_int()?;
                if n < 1 || n as usize > MAX_TASKS {
                    return Err(InstanceError::TaskCountOutOfRange {
                        index: k + 1,
                        declared: n,
                        limit: MAX_TASKS,
                    });
                }
                n as usize
            }
        };
        let mut raw = RawInstance {
            p: Vec::with_capacity(n),
            alpha: Vec::with_capacity(n),
            beta: Vec::with_capacity(n),
        };
        for _ in 0..n {
            raw.p.push(toks.next_int()?);
            raw.alpha.push(toks.next_int()?);
            raw.beta.push(toks.next_int()?);
        }
        out.push(raw);
    }
    let extra = toks.remaining();
    if extra > 0 {
        return Err(InstanceError::TrailingTokens { extra });
    }
    Ok(out)
}

/// Serializes raw instances back into the benchmark file layout.
pub fn format_benchmark(raws: &[RawInstance]) -> String {
    let mut s = String::new();
    s.push_str(&format!("{}\n", raws.len()));
    for raw in raws {
        s.push_str(&format!("{}\n", raw.n()));
        for j in 0..raw.n() {
            s.push_str(&format!("{} {} {}\n", raw.p[j], raw.alpha[j], raw.beta[j]));
        }
    }
    s
}

/// Attaches a due date `d = floor(h * sum p)` to raw task data.
///
/// `h` must be exact (parse decimal text with [`parse_decimal`]); computing
/// `0.6 * 105` in floating point rounds below 63 and truncates to 62.
pub fn make_instance(raw: &RawInstance, h: Rat) -> Result<Instance, InstanceError> {
    if h < rat(0) {
        return Err(InstanceError::NegativeFactor(h));
    }
    let d = (h * rat(raw.ptotal())).floor().to_integer();
    let mut inst = Instance::new(raw.p.clone(), raw.alpha.clone(), raw.beta.clone(), d)?;
    inst.meta = Some(Meta { source: None, index: None, h: Some(format_rat(h)) });
    Ok(inst)
}

/// Parses a nonnegative decimal literal (`"1"`, `"0.6"`, `"3/5"`) into an
/// exact rational.
pub fn parse_decimal(text: &str) -> Result<Rat, InstanceError> {
    let bad = |t: &str| InstanceError::BadToken { index: 0, text: t.to_string() };
    let text = text.trim();
    // "-0.5" must not sneak through as 0.5 ("-0" parses to the integer 0).
    if text.starts_with('-') {
        return Err(bad(text));
    }
    if let Some((num, den)) = text.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| bad(text))?;
        let d: i64 = den.trim().parse().map_err(|_| bad(text))?;
        if d <= 0 {
            return Err(bad(text));
        }
        return Ok(Rat::new(n, d));
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(text));
    }
    let int: i64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| bad(text))? };
    if int < 0 {
        return Err(bad(text));
    }
    let mut num = int;
    let mut den = 1i64;
    for ch in frac_part.chars() {
        let digit = ch.to_digit(10).ok_or_else(|| bad(text))? as i64;
        num = num
            .checked_mul(10)
            .and_then(|v| v.checked_add(digit))
            .ok_or_else(|| bad(text))?;
        den = den.checked_mul(10).ok_or_else(|| bad(text))?;
    }
    Ok(Rat::new(num, den))
}

/// Renders a rational as decimal text when the denominator is a power of
/// ten times a divisor, falling back to `num/den`.
pub fn format_rat(r: Rat) -> String {
    let den = *r.denom();
    if den == 1 {
        return r.numer().to_string();
    }
    let mut scale = 1i64;
    for _ in 0..12 {
        scale = match scale.checked_mul(10) {
            Some(s) => s,
            None => break,
        };
        if scale % den == 0 {
            let digits = scale.ilog10() as usize;
            let units = r.numer() * (scale / den);
            let int = units / scale;
            let frac = (units % scale).abs();
            return format!("{int}.{frac:0digits$}");
        }
    }
    format!("{}/{}", r.numer(), r.denom())
}

/// Zero-penalty reduction used ahead of the unrestrictive solvers. Tasks
/// with `alpha == 0` can sit arbitrarily early and tasks with `beta == 0`
/// arbitrarily late at zero cost, so both drop out of the core problem.
#[derive(Clone, Debug)]
pub struct Reduction {
    /// Instance over the remaining tasks, same due date.
    pub core: Instance,
    /// Original indices of the core tasks, in core order.
    pub core_ids: Vec<usize>,
    /// Tasks with `alpha == 0`, scheduled right-tight before the core block.
    pub prepend: Vec<usize>,
    /// Tasks with `beta == 0` (and `alpha > 0`), scheduled after everything.
    pub append: Vec<usize>,
    n_original: usize,
    p_original: Vec<i64>,
    d: i64,
}

pub fn reduce_unrestrictive(inst: &Instance) -> Reduction {
    let mut core_ids = Vec::new();
    let mut prepend = Vec::new();
    let mut append = Vec::new();
    for j in 0..inst.n() {
        if inst.alpha[j] == 0 {
            prepend.push(j);
        } else if inst.beta[j] == 0 {
            append.push(j);
        } else {
            core_ids.push(j);
        }
    }
    let core = Instance {
        p: core_ids.iter().map(|&j| inst.p[j]).collect(),
        alpha: core_ids.iter().map(|&j| inst.alpha[j]).collect(),
        beta: core_ids.iter().map(|&j| inst.beta[j]).collect(),
        d: inst.d,
        meta: None,
    };
    Reduction {
        core,
        core_ids,
        prepend,
        append,
        n_original: inst.n(),
        p_original: inst.p.clone(),
        d: inst.d,
    }
}

impl Reduction {
    /// Rebuilds a full schedule from a schedule of the core instance.
    ///
    /// Prepended tasks pack right-tight against the earliest core start (or
    /// against `d` when the core is empty) and complete early at zero cost;
    /// appended tasks run after the latest core completion (at least `d`)
    /// and are tardy at zero cost. Requires an unrestrictive due date so the
    /// prepended tasks fit above time zero.
    pub fn recompose(&self, core_schedule: &[Rat]) -> Vec<Rat> {
        assert_eq!(core_schedule.len(), self.core.n());
        let mut full = vec![rat(0); self.n_original];
        let mut first_start = rat(self.d);
        let mut last_completion = rat(self.d);
        for (k, &j) in self.core_ids.iter().enumerate() {
            full[j] = core_schedule[k];
            let start = core_schedule[k] - rat(self.core.p[k]);
            if start < first_start {
                first_start = start;
            }
            if core_schedule[k] > last_completion {
                last_completion = core_schedule[k];
            }
        }
        let mut cursor = first_start;
        for &j in self.prepend.iter().rev() {
            full[j] = cursor;
            cursor -= rat(self.p_original[j]);
        }
        let mut cursor = last_completion;
        for &j in &self.append {
            cursor += rat(self.p_original[j]);
            full[j] = cursor;
        }
        full
    }
}

struct Tokens<'a> {
    iter: std::str::SplitWhitespace<'a>,
    index: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        Tokens { iter: text.split_whitespace(), index: 0 }
    }

    fn next_int(&mut self) -> Result<i64, InstanceError> {
        match self.iter.next() {
            None => Err(InstanceError::Truncated { expected: 1 }),
            Some(tok) => {
                self.index += 1;
                tok.parse().map_err(|_| InstanceError::BadToken {
                    index: self.index,
                    text: tok.to_string(),
                })
            }
        }
    }

    fn remaining(&mut self) -> usize {
        self.iter.by_ref().count()
    }
}
