//! Best block schedules for a fixed early/tardy partition.
//!
//! Optimal schedules can always be found among tight blocks around the due
//! date: early tasks end exactly at `d` in order of increasing `alpha/p`,
//! tardy tasks start at `d` in order of decreasing `beta/p` (the classical
//! V-shape). When the due date is too small for the early set, the whole
//! block instead starts at time zero with one tardy task straddling the due
//! date. Given a partition these decoders produce the cheapest schedule of
//! each form, which is how the solvers turn an integral relaxation point
//! back into a schedule.

use crate::instance::Instance;
use crate::schedule::{evaluate, Schedule};
use crate::{rat, Rat};

/// Static task priorities: `rho` lists tasks by decreasing `alpha/p`,
/// `sigma` by decreasing `beta/p`, ties broken by ascending index. The
/// `*_pos` vectors are the inverse permutations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orders {
    pub rho: Vec<usize>,
    pub sigma: Vec<usize>,
    pub rho_pos: Vec<usize>,
    pub sigma_pos: Vec<usize>,
}

pub fn make_orders(inst: &Instance) -> Orders {
    let by_ratio_desc = |weight: &[i64]| {
        let mut order: Vec<usize> = (0..inst.n()).collect();
        // weight[i]/p[i] > weight[j]/p[j]  <=>  weight[i]*p[j] > weight[j]*p[i]
        order.sort_by(|&i, &j| {
            (weight[j] * inst.p[i]).cmp(&(weight[i] * inst.p[j])).then(i.cmp(&j))
        });
        order
    };
    let rho = by_ratio_desc(&inst.alpha);
    let sigma = by_ratio_desc(&inst.beta);
    let invert = |order: &[usize]| {
        let mut pos = vec![0; order.len()];
        for (k, &j) in order.iter().enumerate() {
            pos[j] = k;
        }
        pos
    };
    let rho_pos = invert(&rho);
    let sigma_pos = invert(&sigma);
    Orders { rho, sigma, rho_pos, sigma_pos }
}

/// Cheapest block anchored at the due date for the given partition: early
/// tasks (`delta[j] = true`) end at `d` V-shaped, tardy tasks start at `d`.
///
/// Requires the early set to fit, `p(E) <= d`.
pub fn decode_dblock(inst: &Instance, delta: &[bool]) -> (Rat, Schedule) {
    assert_eq!(delta.len(), inst.n());
    let orders = make_orders(inst);
    let early_len: i64 = (0..inst.n()).filter(|&j| delta[j]).map(|j| inst.p[j]).sum();
    debug_assert!(early_len <= inst.d, "early set exceeds the due date");
    let mut c = vec![rat(0); inst.n()];
    let mut ahead = 0i64;
    for &j in &orders.rho {
        if delta[j] {
            c[j] = rat(inst.d - ahead);
            ahead += inst.p[j];
        }
    }
    let mut teeth = 0i64;
    for &j in &orders.sigma {
        if !delta[j] {
            teeth += inst.p[j];
            c[j] = rat(inst.d + teeth);
        }
    }
    (evaluate(inst, &c), c)
}

/// Cheapest block starting at time zero for the given partition and
/// straddler: early tasks fill `[0, p(E)]` V-shaped, the straddler runs
/// across the due date, remaining tardy tasks follow by decreasing
/// `beta/p`.
///
/// Requires `straddler` tardy and `0 <= d - p(E) < p[straddler]`.
pub fn decode_left_block(inst: &Instance, delta: &[bool], straddler: usize) -> (Rat, Schedule) {
    assert_eq!(delta.len(), inst.n());
    assert!(!delta[straddler], "straddler must be tardy");
    let early_len: i64 = (0..inst.n()).filter(|&j| delta[j]).map(|j| inst.p[j]).sum();
    let a = inst.d - early_len;
    assert!(0 <= a && a < inst.p[straddler], "straddler must cover the due date");
    let orders = make_orders(inst);
    let mut c = vec![rat(0); inst.n()];
    let mut ahead = 0i64;
    for &j in &orders.rho {
        if delta[j] {
            c[j] = rat(early_len - ahead);
            ahead += inst.p[j];
        }
    }
    c[straddler] = rat(early_len + inst.p[straddler]);
    let mut cursor = early_len + inst.p[straddler];
    for &j in &orders.sigma {
        if !delta[j] && j != straddler {
            cursor += inst.p[j];
            c[j] = rat(cursor);
        }
    }
    (evaluate(inst, &c), c)
}

/// Cheapest schedule for a partition over both block forms, or `None` when
/// the early set cannot fit before the due date at all.
///
/// Straddler candidates are the tardy tasks longer than the slack
/// `d - p(E)`; with an unrestrictive due date the slack always exceeds
/// every tardy length, so only the due date block remains.
pub fn best_for_partition(inst: &Instance, delta: &[bool]) -> Option<(Rat, Schedule)> {
    assert_eq!(delta.len(), inst.n());
    let early_len: i64 = (0..inst.n()).filter(|&j| delta[j]).map(|j| inst.p[j]).sum();
    if early_len > inst.d {
        return None;
    }
    let a = inst.d - early_len;
    let mut best = decode_dblock(inst, delta);
    for j in 0..inst.n() {
        if !delta[j] && inst.p[j] > a {
            let cand = decode_left_block(inst, delta, j);
            if cand.0 < best.0 {
                best = cand;
            }
        }
    }
    Some(best)
}
