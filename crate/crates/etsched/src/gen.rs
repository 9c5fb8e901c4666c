//! Seeded generators for instances and schedules.
//!
//! Everything here is deterministic given the RNG, so tests and the shipped
//! data files are reproducible bit for bit.

use crate::instance::{Instance, RawInstance};
use crate::schedule::Schedule;
use crate::{rat, Rat};
use rand::Rng;

/// Uniform integer draw from an inclusive range.
fn draw(rng: &mut impl Rng, range: (i64, i64)) -> i64 {
    rng.gen_range(range.0..=range.1)
}

/// Random instance with a due date drawn between 0 and the total processing
/// time plus one extra task length, so both restrictive and unrestrictive
/// cases appear.
pub fn random_instance(
    rng: &mut impl Rng,
    n: usize,
    p_range: (i64, i64),
    alpha_range: (i64, i64),
    beta_range: (i64, i64),
) -> Instance {
    let p: Vec<i64> = (0..n).map(|_| draw(rng, p_range)).collect();
    let alpha: Vec<i64> = (0..n).map(|_| draw(rng, alpha_range)).collect();
    let beta: Vec<i64> = (0..n).map(|_| draw(rng, beta_range)).collect();
    let ptotal: i64 = p.iter().sum();
    let pmax: i64 = *p.iter().max().unwrap();
    let d = rng.gen_range(0..=ptotal + pmax);
    Instance::new(p, alpha, beta, d).expect("generated data is valid")
}

/// Arbitrary (not necessarily feasible) rational completion vector; small
/// denominators keep downstream arithmetic exact and readable.
pub fn random_completion_vector(inst: &Instance, rng: &mut impl Rng) -> Vec<Rat> {
    let hi = inst.d + inst.ptotal() + 4;
    (0..inst.n())
        .map(|_| Rat::new(rng.gen_range(-8..=4 * hi), rng.gen_range(1..=4)))
        .collect()
}

/// Random feasible schedule: a shuffled processing order, a random start
/// time, and occasional idle gaps.
pub fn random_feasible_schedule(inst: &Instance, rng: &mut impl Rng) -> Schedule {
    let mut order: Vec<usize> = (0..inst.n()).collect();
    for k in (1..order.len()).rev() {
        order.swap(k, rng.gen_range(0..=k));
    }
    let mut cursor = rat(rng.gen_range(0..=inst.d.max(1)));
    let mut c = vec![rat(0); inst.n()];
    for &j in &order {
        if rng.gen_bool(0.3) {
            cursor += rat(rng.gen_range(1..=3));
        }
        cursor += rat(inst.p[j]);
        c[j] = cursor;
    }
    c
}

/// Random fractional point satisfying the base rows of the natural
/// variable space: `delta` in the unit box, `x` between the pair bounds,
/// `e`/`t` below their `delta`-scaled caps. Used to exercise separation
/// away from schedule images.
pub fn random_relaxation_point(inst: &Instance, rng: &mut impl Rng) -> Vec<f64> {
    let vs = crate::polytope::VarSpace::new(crate::polytope::Formulation::F1, inst.n());
    let total = inst.ptotal() as f64;
    let mut point: Vec<f64> = vec![0.0; vs.ncols()];
    for j in 0..inst.n() {
        point[vs.delta(j)] = rng.gen_range(0.0..=1.0);
    }
    for i in 0..inst.n() {
        for j in i + 1..inst.n() {
            let (di, dj) = (point[vs.delta(i)], point[vs.delta(j)]);
            let lo = (di - dj).abs();
            let hi = (di + dj).min(2.0 - di - dj);
            point[vs.x(i, j)] = rng.gen_range(lo..=hi);
        }
    }
    for j in 0..inst.n() {
        point[vs.e(j)] = rng.gen_range(0.0..=1.0) * point[vs.delta(j)] * (total - inst.p[j] as f64);
        point[vs.t(j)] = rng.gen_range(0.0..=1.0) * (1.0 - point[vs.delta(j)]) * total;
    }
    point
}

/// Shape of a generated benchmark set in the OR-Library common due date
/// format: `count` instances of `n` tasks each, data drawn uniformly from
/// the given inclusive ranges.
#[derive(Clone, Debug)]
pub struct BenchmarkSpec {
    pub count: usize,
    pub n: usize,
    pub p_range: (i64, i64),
    pub alpha_range: (i64, i64),
    pub beta_range: (i64, i64),
}

impl Default for BenchmarkSpec {
    /// Value ranges of the classical common due date benchmark sets:
    /// processing times in 1..=20, penalties in 1..=15.
    fn default() -> Self {
        BenchmarkSpec {
            count: 10,
            n: 10,
            p_range: (1, 20),
            alpha_range: (1, 15),
            beta_range: (1, 15),
        }
    }
}

/// Draws a full benchmark set; pair with
/// [`crate::instance::format_benchmark`] to write it to disk.
pub fn benchmark_raws(spec: &BenchmarkSpec, rng: &mut impl Rng) -> Vec<RawInstance> {
    (0..spec.count)
        .map(|_| RawInstance {
            p: (0..spec.n).map(|_| draw(rng, spec.p_range)).collect(),
            alpha: (0..spec.n).map(|_| draw(rng, spec.alpha_range)).collect(),
            beta: (0..spec.n).map(|_| draw(rng, spec.beta_range)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::is_feasible;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn feasible_schedules_are_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let inst = random_instance(&mut rng, 7, (1, 9), (0, 5), (0, 5));
            let c = random_feasible_schedule(&inst, &mut rng);
            assert!(is_feasible(&inst, &c).is_ok());
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = BenchmarkSpec::default();
        let a = benchmark_raws(&spec, &mut ChaCha8Rng::seed_from_u64(42));
        let b = benchmark_raws(&spec, &mut ChaCha8Rng::seed_from_u64(42));
        assert_eq!(a, b);
    }
}
