//! Schedules as completion-time vectors.
//!
//! A schedule assigns every task an exact rational completion time `C[j]`.
//! Feasibility means every task fits after time zero (`C[j] >= p[j]`) and no
//! two tasks overlap. Cost is the weighted sum of earliness `max(0, d - C)`
//! and tardiness `max(0, C - d)`.
//!
//! Besides plain evaluation, this module hosts the coordinate maps used by
//! the linear formulations: the two-sided earliness/tardiness split around
//! `d`, and two encodings that measure deviations against a shifted
//! reference point `d - a`, where `d - a` is the start of the first task
//! completing at or after the due date (the straddler, or the on-time task).

use crate::instance::{classify, DueDateClass, Instance};
use crate::{rat, Rat};
use thiserror::Error;

pub type Schedule = Vec<Rat>;

/// Weighted earliness/tardiness cost of a schedule, exact.
pub fn evaluate(inst: &Instance, c: &[Rat]) -> Rat {
    assert_eq!(c.len(), inst.n());
    let d = rat(inst.d);
    let mut total = rat(0);
    for j in 0..inst.n() {
        if c[j] < d {
            total += rat(inst.alpha[j]) * (d - c[j]);
        } else {
            total += rat(inst.beta[j]) * (c[j] - d);
        }
    }
    total
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Infeasibility {
    #[error("task {task} completes at {completion} but needs {p} time units")]
    StartsBeforeZero { task: usize, completion: Rat, p: i64 },
    #[error("tasks {first} and {second} overlap")]
    Overlap { first: usize, second: usize },
}

/// Checks positivity and pairwise non-overlap.
///
/// Overlap is checked by sorting tasks by completion time and comparing
/// adjacent pairs; two tasks with equal completion times always overlap
/// since processing times are positive.
pub fn is_feasible(inst: &Instance, c: &[Rat]) -> Result<(), Infeasibility> {
    assert_eq!(c.len(), inst.n());
    for j in 0..inst.n() {
        if c[j] < rat(inst.p[j]) {
            return Err(Infeasibility::StartsBeforeZero {
                task: j,
                completion: c[j],
                p: inst.p[j],
            });
        }
    }
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&i, &j| c[i].cmp(&c[j]).then(i.cmp(&j)));
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        if c[j] - rat(inst.p[j]) < c[i] {
            return Err(Infeasibility::Overlap { first: i, second: j });
        }
    }
    Ok(())
}

/// Earliness/tardiness image of a schedule around the due date.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtPoint {
    pub e: Vec<Rat>,
    pub t: Vec<Rat>,
}

/// Splits completion times into `e = max(0, d - C)` and `t = max(0, C - d)`.
pub fn theta(inst: &Instance, c: &[Rat]) -> EtPoint {
    assert_eq!(c.len(), inst.n());
    let d = rat(inst.d);
    let mut e = vec![rat(0); inst.n()];
    let mut t = vec![rat(0); inst.n()];
    for j in 0..inst.n() {
        if c[j] < d {
            e[j] = d - c[j];
        } else {
            t[j] = c[j] - d;
        }
    }
    EtPoint { e, t }
}

/// Inverse of [`theta`]: `C = d - e + t`. A left inverse on all of schedule
/// space, since at most one of `e[j]`, `t[j]` is nonzero in any image.
pub fn theta_inv(inst: &Instance, point: &EtPoint) -> Schedule {
    let d = rat(inst.d);
    (0..inst.n()).map(|j| d - point.e[j] + point.t[j]).collect()
}

/// Variable assignment for the shifted-reference formulation: deviations are
/// measured against `d - a` instead of `d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct F3Point {
    /// Earliness against `d - a`.
    pub e: Vec<Rat>,
    /// Tardiness against `d - a`.
    pub t: Vec<Rat>,
    /// Early indicator (`true` = counted on the early side).
    pub delta: Vec<bool>,
    /// Task whose start defines the reference point `d - a`.
    pub reference: usize,
    /// Shift of the reference point, `a = d - (C[ref] - p[ref])`.
    pub a: Rat,
    /// Product variables `b[j] = a * delta[j]`.
    pub b: Vec<Rat>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EncodeError {
    #[error("no task completes after the due date; use theta or theta_prime_tilde")]
    NoTardyTask,
    #[error("every task completes strictly before the due date; no reference task exists")]
    NoReferenceTask,
}

/// Encodes a feasible schedule taking the earliest-starting strictly tardy
/// task as reference. Fails when no task completes after `d`.
///
/// With a straddler (a task covering `d`), the reference is that straddler
/// and `a` is the amount of it processed before `d`; for a schedule whose
/// tardy tasks all start at or after `d`, `a <= 0` degenerates the shift.
pub fn theta_prime(inst: &Instance, c: &[Rat]) -> Result<F3Point, EncodeError> {
    let tardy: Vec<usize> = (0..inst.n()).filter(|&j| c[j] > rat(inst.d)).collect();
    if tardy.is_empty() {
        return Err(EncodeError::NoTardyTask);
    }
    let delta: Vec<bool> = (0..inst.n()).map(|j| c[j] <= rat(inst.d)).collect();
    Ok(encode_shifted(inst, c, &delta, &tardy))
}

/// Encodes a feasible schedule taking the earliest-starting task completing
/// at or after `d` as reference; for a schedule with an on-time task this
/// yields `a = p[on_time]`. Fails when every task is strictly early.
pub fn theta_prime_tilde(inst: &Instance, c: &[Rat]) -> Result<F3Point, EncodeError> {
    let at_or_after: Vec<usize> = (0..inst.n()).filter(|&j| c[j] >= rat(inst.d)).collect();
    if at_or_after.is_empty() {
        return Err(EncodeError::NoReferenceTask);
    }
    let delta: Vec<bool> = (0..inst.n()).map(|j| c[j] < rat(inst.d)).collect();
    Ok(encode_shifted(inst, c, &delta, &at_or_after))
}

fn encode_shifted(inst: &Instance, c: &[Rat], delta: &[bool], candidates: &[usize]) -> F3Point {
    let reference = *candidates
        .iter()
        .min_by_key(|&&j| (c[j] - rat(inst.p[j]), j))
        .expect("candidate set is nonempty");
    let a = rat(inst.d) - (c[reference] - rat(inst.p[reference]));
    let pivot = rat(inst.d) - a;
    let mut e = vec![rat(0); inst.n()];
    let mut t = vec![rat(0); inst.n()];
    for j in 0..inst.n() {
        if c[j] < pivot {
            e[j] = pivot - c[j];
        } else {
            t[j] = c[j] - pivot;
        }
    }
    let b = delta.iter().map(|&dj| if dj { a } else { rat(0) }).collect();
    F3Point { e, t, delta: delta.to_vec(), reference, a, b }
}

/// Decodes shifted-reference variables back into completion times,
/// `C = (d - a) - e + t`.
pub fn decode_f3(inst: &Instance, point: &F3Point) -> Schedule {
    let pivot = rat(inst.d) - point.a;
    (0..inst.n()).map(|j| pivot - point.e[j] + point.t[j]).collect()
}

/// Rebuilds a feasible schedule as a block split exactly at the due date,
/// preserving completion order on each side: tasks completing at or before
/// `d` pack right-tight ending at `d`, the rest pack left-tight from `d`.
///
/// This is the canonical form behind the natural-variables encoding. A
/// straddler gets pushed fully behind `d`, so unlike [`tighten_to_block`]
/// the cost may increase when one exists.
pub fn to_dblock(inst: &Instance, c: &[Rat]) -> Schedule {
    debug_assert!(is_feasible(inst, c).is_ok());
    let d = rat(inst.d);
    let mut order: Vec<usize> = (0..inst.n()).collect();
    order.sort_by(|&i, &j| c[i].cmp(&c[j]).then(i.cmp(&j)));
    let mut out = c.to_vec();
    let mut cursor = d;
    for &j in order.iter().filter(|&&j| c[j] <= d).rev() {
        out[j] = cursor;
        cursor -= rat(inst.p[j]);
    }
    let mut cursor = d;
    for &j in order.iter().filter(|&&j| c[j] > d) {
        cursor += rat(inst.p[j]);
        out[j] = cursor;
    }
    out
}

/// Compacts a feasible schedule into an idle-free block without increasing
/// its cost.
///
/// Early tasks pack right-tight toward the due date (or toward the
/// straddler's start if one exists), tardy tasks pack left-tight after the
/// due date (or after the straddler), both preserving their completion
/// order. In the unrestrictive case an all-tardy block additionally shifts
/// left until its first task is on time, which strictly improves cost.
pub fn tighten_to_block(inst: &Instance, c: &[Rat]) -> Schedule {
    debug_assert!(is_feasible(inst, c).is_ok());
    let d = rat(inst.d);
    let straddler =
        (0..inst.n()).find(|&j| c[j] - rat(inst.p[j]) < d && d < c[j]);
    let mut early: Vec<usize> = (0..inst.n()).filter(|&j| c[j] <= d).collect();
    early.sort_by(|&i, &j| c[i].cmp(&c[j]).then(i.cmp(&j)));
    let mut tardy: Vec<usize> = (0..inst.n())
        .filter(|&j| c[j] > d && Some(j) != straddler)
        .collect();
    tardy.sort_by(|&i, &j| c[i].cmp(&c[j]).then(i.cmp(&j)));

    let (early_end, tardy_start) = match straddler {
        Some(s) => (c[s] - rat(inst.p[s]), c[s]),
        None => (d, d),
    };
    let mut out = c.to_vec();
    let mut cursor = early_end;
    for &j in early.iter().rev() {
        out[j] = cursor;
        cursor -= rat(inst.p[j]);
    }
    let mut cursor = tardy_start;
    for &j in &tardy {
        cursor += rat(inst.p[j]);
        out[j] = cursor;
    }
    if straddler.is_none()
        && early.is_empty()
        && classify(inst) == DueDateClass::Unrestrictive
    {
        if let Some(&first) = tardy.first() {
            let shift = rat(inst.p[first]);
            for v in out.iter_mut() {
                *v -= shift;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ints(v: &[i64]) -> Vec<Rat> {
        v.iter().map(|&x| rat(x)).collect()
    }

    /// Three tasks around d=6; the known optimum parks task 2 early, task 3
    /// on time, and lets the cheap task 1 run tardy.
    fn small_general() -> Instance {
        Instance::new(vec![5, 3, 2], vec![0, 2, 2], vec![1, 2, 2], 6).unwrap()
    }

    /// Eight tasks against d=2: six unit fillers plus two long tasks whose
    /// straddler choice decides the optimum.
    fn straddle_eight() -> Instance {
        Instance::new(
            vec![1, 1, 1, 1, 1, 1, 3, 4],
            vec![20; 8],
            vec![4, 4, 4, 4, 4, 4, 5, 8],
            2,
        )
        .unwrap()
    }

    #[test]
    fn evaluate_known_small_case() {
        let inst = small_general();
        let c = ints(&[11, 4, 6]);
        assert!(is_feasible(&inst, &c).is_ok());
        assert_eq!(evaluate(&inst, &c), rat(9));
    }

    #[test]
    fn evaluate_single_on_time_task() {
        let inst = Instance::new(vec![4], vec![3], vec![5], 7).unwrap();
        assert_eq!(evaluate(&inst, &ints(&[7])), rat(0));
    }

    #[test]
    fn evaluate_straddler_choices() {
        let inst = straddle_eight();
        // Long task 7 straddles [0,3], fillers follow, task 8 last.
        let c7 = ints(&[4, 5, 6, 7, 8, 9, 3, 13]);
        assert!(is_feasible(&inst, &c7).is_ok());
        assert_eq!(evaluate(&inst, &c7), rat(201));
        // Long task 8 straddles [0,4] instead.
        let c8 = ints(&[5, 6, 7, 8, 9, 10, 13, 4]);
        assert!(is_feasible(&inst, &c8).is_ok());
        assert_eq!(evaluate(&inst, &c8), rat(203));
    }

    #[test]
    fn feasibility_checks() {
        let inst = Instance::new(vec![2, 2], vec![1, 1], vec![1, 1], 5).unwrap();
        assert!(is_feasible(&inst, &ints(&[2, 4])).is_ok());
        assert_eq!(
            is_feasible(&inst, &ints(&[3, 3])),
            Err(Infeasibility::Overlap { first: 0, second: 1 })
        );
        assert_eq!(
            is_feasible(&inst, &ints(&[1, 4])),
            Err(Infeasibility::StartsBeforeZero { task: 0, completion: rat(1), p: 2 })
        );
        assert_eq!(
            is_feasible(&inst, &ints(&[2, 3])),
            Err(Infeasibility::Overlap { first: 0, second: 1 })
        );
    }

    #[test]
    fn theta_splits_sides() {
        let inst = small_general();
        let point = theta(&inst, &ints(&[11, 4, 6]));
        assert_eq!(point.e, ints(&[0, 2, 0]));
        assert_eq!(point.t, ints(&[5, 0, 0]));
        assert_eq!(theta_inv(&inst, &point), ints(&[11, 4, 6]));
    }

    #[test]
    fn theta_round_trip_on_arbitrary_vectors() {
        // theta_inv . theta is the identity on every completion vector,
        // feasible or not, because exactly one side of the split is nonzero.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let inst = Instance::new(vec![3, 1, 4, 2], vec![1, 0, 2, 3], vec![2, 1, 1, 4], 6).unwrap();
        for _ in 0..200 {
            let c = gen::random_completion_vector(&inst, &mut rng);
            let round = theta_inv(&inst, &theta(&inst, &c));
            assert_eq!(round, c);
        }
    }

    #[test]
    fn shifted_encoding_finds_straddler() {
        let inst = straddle_eight();
        let c = ints(&[4, 5, 6, 7, 8, 9, 3, 13]);
        let point = theta_prime(&inst, &c).unwrap();
        assert_eq!(point.reference, 6);
        assert_eq!(point.a, rat(2));
        assert_eq!(point.delta, vec![false; 8]);
        assert_eq!(point.b, vec![rat(0); 8]);
        assert_eq!(point.t[6], rat(3));
        assert_eq!(decode_f3(&inst, &point), c);
    }

    #[test]
    fn shifted_encoding_requires_a_tardy_task() {
        let inst = Instance::new(vec![2, 3], vec![1, 1], vec![1, 1], 9).unwrap();
        let c = ints(&[6, 9]);
        assert_eq!(theta_prime(&inst, &c), Err(EncodeError::NoTardyTask));
        // The on-time variant accepts the same schedule: reference is the
        // task completing at d, and a equals its processing time.
        let point = theta_prime_tilde(&inst, &c).unwrap();
        assert_eq!(point.reference, 1);
        assert_eq!(point.a, rat(3));
        assert_eq!(point.delta, vec![true, false]);
        assert_eq!(point.b, vec![rat(3), rat(0)]);
        assert_eq!(decode_f3(&inst, &point), c);
    }

    #[test]
    fn shifted_encoding_round_trips_random_feasible_schedules() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let inst = gen::random_instance(&mut rng, 5, (1, 6), (0, 8), (1, 8));
            let c = gen::random_feasible_schedule(&inst, &mut rng);
            if let Ok(point) = theta_prime(&inst, &c) {
                assert_eq!(decode_f3(&inst, &point), c);
            }
            if let Ok(point) = theta_prime_tilde(&inst, &c) {
                assert_eq!(decode_f3(&inst, &point), c);
            }
        }
    }

    #[test]
    fn dblock_form_pushes_the_straddler_behind_d() {
        let inst = Instance::new(vec![3, 2], vec![1, 1], vec![1, 1], 4).unwrap();
        // Task 0 covers (2,5) across d=4; both end up tardy from d.
        assert_eq!(to_dblock(&inst, &ints(&[5, 7])), ints(&[7, 9]));
        // Without a straddler the early side just packs against d.
        assert_eq!(to_dblock(&inst, &ints(&[3, 6])), ints(&[4, 6]));
    }

    #[test]
    fn tighten_leaves_a_due_date_block_unchanged() {
        let inst = Instance::new(vec![3, 2, 4], vec![1, 1, 1], vec![1, 1, 1], 9).unwrap();
        let c = ints(&[7, 9, 13]);
        assert_eq!(tighten_to_block(&inst, &c), c);
    }

    #[test]
    fn tighten_packs_early_tasks_toward_due_date() {
        let inst = Instance::new(vec![3, 3], vec![1, 1], vec![1, 1], 10).unwrap();
        assert_eq!(tighten_to_block(&inst, &ints(&[5, 10])), ints(&[7, 10]));
    }

    #[test]
    fn tighten_shifts_all_tardy_block_when_room_exists() {
        let inst = Instance::new(vec![3, 2], vec![1, 1], vec![4, 1], 6).unwrap();
        // Block [7,12]: both tardy. Packing moves it to start at d=6,
        // then the shift makes task 0 on time.
        let c = ints(&[10, 12]);
        let tightened = tighten_to_block(&inst, &c);
        assert_eq!(tightened, ints(&[6, 8]));
        assert!(evaluate(&inst, &tightened) < evaluate(&inst, &c));
    }

    #[test]
    fn tighten_never_increases_cost() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let inst = gen::random_instance(&mut rng, 6, (1, 5), (0, 9), (0, 9));
            let c = gen::random_feasible_schedule(&inst, &mut rng);
            let tight = tighten_to_block(&inst, &c);
            assert!(is_feasible(&inst, &tight).is_ok(), "tightened schedule infeasible");
            assert!(evaluate(&inst, &tight) <= evaluate(&inst, &c));
            // No idle time: completions occupy a single interval.
            let mut order: Vec<usize> = (0..inst.n()).collect();
            order.sort_by_key(|&j| tight[j]);
            for w in order.windows(2) {
                assert_eq!(tight[w[1]] - rat(inst.p[w[1]]), tight[w[0]]);
            }
        }
    }
}
