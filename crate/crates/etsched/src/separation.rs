//! Exact separation of the subset load inequalities.
//!
//! At a relaxation point, the worst violation over the exponentially many
//! subset rows of one family is the maximum of a set function
//!
//! ```text
//! Gamma(S) = sum_{i<j in S} q_ij + sum_{j in S} c_j
//! ```
//!
//! with `q >= 0`; the violation of the row generated by `S` is
//! `Gamma(S) / 2`. Maximizing such a function reduces to a minimum cut on a
//! small graph with two extra terminal vertices, so one Gomory-Hu tree over
//! that graph yields the most violated subsets of the round. A direct
//! triangle scan over the pair variables complements the subset families.

use crate::instance::Instance;
use crate::polytope::{s_row, Cut, RowFamily, Sense, VarSpace};
use crate::rat;
use std::collections::HashSet;

/// Violation threshold on `Gamma`; smaller maxima count as satisfied.
pub const EPS_CUT: f64 = 1e-6;

/// Residuals below this are treated as exhausted in the flow search.
const EPS_FLOW: f64 = 1e-11;

fn pair_idx(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Coefficients of the violation set function at one relaxation point.
#[derive(Clone, Debug)]
pub struct GammaParams {
    pub n: usize,
    pub c: Vec<f64>,
    /// Pair coefficients over `i < j`, clamped at zero.
    pub q: Vec<f64>,
}

impl GammaParams {
    pub fn q_at(&self, i: usize, j: usize) -> f64 {
        self.q[pair_idx(self.n, i.min(j), i.max(j))]
    }
}

/// Builds the set-function coefficients for one subset family at a point.
///
/// Early side: `c_j = -2 p_j e_j`, `q_ij = p_i p_j (delta_i + delta_j -
/// x_ij)`. Tardy side: `c_j = 2 ((1 - delta_j) p_j^2 - p_j t_j)`, `q_ij =
/// p_i p_j (2 - delta_i - delta_j - x_ij)`. The primed families read the
/// same columns of the shifted space. Round-off can push `q` a hair
/// negative at LP points; it is clamped at zero (the pair rows bound it
/// there exactly).
pub fn gamma_params(
    family: RowFamily,
    inst: &Instance,
    vs: &VarSpace,
    point: &[f64],
) -> GammaParams {
    let n = inst.n();
    let p = &inst.p;
    let tardy_side = match family {
        RowFamily::S1 | RowFamily::S1p => false,
        RowFamily::S2 | RowFamily::S2p => true,
        _ => panic!("gamma_params called with non-subset family {family:?}"),
    };
    let mut c = vec![0.0; n];
    for j in 0..n {
        let pj = p[j] as f64;
        c[j] = if tardy_side {
            2.0 * ((1.0 - point[vs.delta(j)]) * pj * pj - pj * point[vs.t(j)])
        } else {
            -2.0 * pj * point[vs.e(j)]
        };
    }
    let mut q = vec![0.0; n * (n - 1) / 2];
    for i in 0..n {
        for j in i + 1..n {
            let pij = (p[i] * p[j]) as f64;
            let (di, dj, x) = (point[vs.delta(i)], point[vs.delta(j)], point[vs.x(i, j)]);
            let raw = if tardy_side {
                pij * (2.0 - di - dj - x)
            } else {
                pij * (di + dj - x)
            };
            q[pair_idx(n, i, j)] = raw.max(0.0);
        }
    }
    GammaParams { n, c, q }
}

/// Value of the violation set function on a subset.
pub fn gamma_value(params: &GammaParams, subset: &[usize]) -> f64 {
    let mut total = 0.0;
    for (k, &i) in subset.iter().enumerate() {
        total += params.c[i];
        for &j in &subset[k + 1..] {
            total += params.q_at(i, j);
        }
    }
    total
}

/// Exhaustive maximizer of the set function over all subsets (including the
/// empty one, value 0). Test oracle; exponential in n.
pub fn gamma_max_exhaustive(params: &GammaParams) -> (f64, Vec<usize>) {
    assert!(params.n <= 20);
    let mut best = (0.0, Vec::new());
    for mask in 1u32..(1 << params.n) {
        let subset: Vec<usize> = (0..params.n).filter(|&j| mask & (1 << j) != 0).collect();
        let value = gamma_value(params, &subset);
        if value > best.0 {
            best = (value, subset);
        }
    }
    best
}

/// The cut graph whose minimum terminal cut maximizes the set function.
///
/// Vertices are `0` (early terminal), `1..=n` (task `j` at `j + 1`), and
/// `n + 1` (tardy terminal). With `k_j = 2 c_j + sum_i q_ij`, the weights
/// are `w(0,j) = max(k_j, 0)`, `w(j, n+1) = max(-k_j, 0)`, and `w(i,j) =
/// q_ij` between tasks. For every subset S,
///
/// ```text
/// Gamma(S) = -w(S + {0}, rest) / 2 + (Q + C) / 2 + K / 4
/// ```
///
/// where `Q`, `C`, `K` sum `q`, `c`, `|k|`; so maximizing `Gamma` is
/// finding a minimum cut separating vertex 0 from vertex n+1.
#[derive(Clone, Debug)]
pub struct SepGraph {
    pub n: usize,
    pub cap: Vec<Vec<f64>>,
    pub k: Vec<f64>,
    pub q_sum: f64,
    pub c_sum: f64,
    pub k_abs_sum: f64,
}

pub fn build_sep_graph(params: &GammaParams) -> SepGraph {
    let n = params.n;
    for &q in &params.q {
        assert!(q >= 0.0, "pair coefficients must be nonnegative");
    }
    let v = n + 2;
    let mut cap = vec![vec![0.0; v]; v];
    let mut k = vec![0.0; n];
    for j in 0..n {
        k[j] = 2.0 * params.c[j];
        for i in 0..n {
            if i != j {
                k[j] += params.q_at(i, j);
            }
        }
    }
    for j in 0..n {
        cap[0][j + 1] = k[j].max(0.0);
        cap[j + 1][0] = cap[0][j + 1];
        cap[j + 1][n + 1] = (-k[j]).max(0.0);
        cap[n + 1][j + 1] = cap[j + 1][n + 1];
    }
    for i in 0..n {
        for j in i + 1..n {
            cap[i + 1][j + 1] = params.q_at(i, j);
            cap[j + 1][i + 1] = cap[i + 1][j + 1];
        }
    }
    let k_abs_sum = k.iter().map(|v| v.abs()).sum();
    SepGraph {
        n,
        cap,
        k,
        q_sum: params.q.iter().sum(),
        c_sum: params.c.iter().sum(),
        k_abs_sum,
    }
}

impl SepGraph {
    /// Total capacity leaving the vertex set marked `true`.
    pub fn partition_weight(&self, side: &[bool]) -> f64 {
        let v = self.cap.len();
        let mut total = 0.0;
        for i in 0..v {
            if side[i] {
                for j in 0..v {
                    if !side[j] {
                        total += self.cap[i][j];
                    }
                }
            }
        }
        total
    }

    /// Edge-list text dump for debugging.
    pub fn edges_text(&self) -> String {
        let v = self.cap.len();
        let mut out = Vec::new();
        for i in 0..v {
            for j in i + 1..v {
                if self.cap[i][j] != 0.0 {
                    out.push(format!("{i} {j} {}", self.cap[i][j]));
                }
            }
        }
        out.join("\n")
    }
}

/// Minimum cut between two vertices of a dense symmetric capacity matrix,
/// by breadth-first augmenting paths. Returns the cut value and the side
/// containing `s`.
pub fn min_cut(cap: &[Vec<f64>], s: usize, t: usize) -> (f64, Vec<bool>) {
    let v = cap.len();
    assert!(s < v && t < v && s != t);
    let mut residual: Vec<Vec<f64>> = cap.to_vec();
    let mut parent = vec![usize::MAX; v];
    loop {
        parent.iter_mut().for_each(|x| *x = usize::MAX);
        parent[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for w in 0..v {
                if parent[w] == usize::MAX && residual[u][w] > EPS_FLOW {
                    parent[w] = u;
                    queue.push_back(w);
                }
            }
        }
        if parent[t] == usize::MAX {
            break;
        }
        let mut bottleneck = f64::INFINITY;
        let mut u = t;
        while u != s {
            bottleneck = bottleneck.min(residual[parent[u]][u]);
            u = parent[u];
        }
        let mut u = t;
        while u != s {
            residual[parent[u]][u] -= bottleneck;
            residual[u][parent[u]] += bottleneck;
            u = parent[u];
        }
    }
    let side: Vec<bool> = (0..v).map(|w| parent[w] != usize::MAX).collect();
    // Summing original capacities across the final partition avoids
    // accumulating augmentation round-off.
    let mut value = 0.0;
    for i in 0..v {
        if side[i] {
            for j in 0..v {
                if !side[j] {
                    value += cap[i][j];
                }
            }
        }
    }
    (value, side)
}

/// All-pairs minimum cuts of a symmetric capacity matrix as a rooted tree:
/// the smallest edge weight on the tree path between two vertices is their
/// minimum cut value, and removing any tree edge splits the vertex set into
/// a minimum cut between that edge's endpoints.
#[derive(Clone, Debug)]
pub struct GomoryHuTree {
    /// Parent of each vertex; the root 0 points to itself.
    pub parent: Vec<usize>,
    /// Capacity of the edge to the parent; unused at the root.
    pub weight: Vec<f64>,
}

/// Gusfield's construction: one max-flow per non-root vertex on the
/// original graph, no contraction.
pub fn gomory_hu(cap: &[Vec<f64>]) -> GomoryHuTree {
    let v = cap.len();
    let mut parent = vec![0usize; v];
    let mut weight = vec![f64::INFINITY; v];
    for i in 1..v {
        let t = parent[i];
        let (value, side) = min_cut(cap, i, t);
        weight[i] = value;
        // Every vertex on i's side of the cut that hung off t moves under
        // i, later and earlier ones alike.
        for j in 0..v {
            if j != i && side[j] && parent[j] == t {
                parent[j] = i;
            }
        }
        // When the cut also separates t from its own parent, insert i
        // between them; both steps together keep every tree edge an actual
        // minimum cut, not just a correct value.
        if side[parent[t]] {
            parent[i] = parent[t];
            parent[t] = i;
            weight[i] = weight[t];
            weight[t] = value;
        }
    }
    GomoryHuTree { parent, weight }
}

impl GomoryHuTree {
    fn ancestors(&self, mut u: usize) -> Vec<usize> {
        let mut chain = vec![u];
        while u != 0 {
            u = self.parent[u];
            chain.push(u);
        }
        chain
    }

    /// Tree edges on the path between two vertices, as child endpoints.
    pub fn path_edges(&self, u: usize, v: usize) -> Vec<usize> {
        let au = self.ancestors(u);
        let av = self.ancestors(v);
        let seen: HashSet<usize> = au.iter().copied().collect();
        let lca = *av.iter().find(|w| seen.contains(w)).expect("root is shared");
        let mut edges: Vec<usize> =
            au.iter().take_while(|&&w| w != lca).copied().collect();
        edges.extend(av.iter().take_while(|&&w| w != lca));
        edges
    }

    /// Minimum cut value between two vertices, read off the tree.
    pub fn path_min(&self, u: usize, v: usize) -> f64 {
        self.path_edges(u, v)
            .iter()
            .map(|&child| self.weight[child])
            .fold(f64::INFINITY, f64::min)
    }

    /// Vertices in the subtree hanging below `child`'s parent edge.
    pub fn subtree(&self, child: usize) -> Vec<bool> {
        let v = self.parent.len();
        let mut inside = vec![false; v];
        for w in 0..v {
            let mut u = w;
            loop {
                if u == child {
                    inside[w] = true;
                    break;
                }
                if u == 0 {
                    break;
                }
                u = self.parent[u];
            }
        }
        inside
    }
}

/// Most violated subset rows of one family at a point, via the cut graph.
///
/// Builds the Gomory-Hu tree of the cut graph, collects every
/// minimum-capacity edge on the tree path between the two terminals, and
/// turns each induced subset with `Gamma > EPS_CUT` into its row. Returns
/// at most `max_cuts` rows, deduplicated, in path order from the early
/// terminal; empty exactly when no subset row of the family is violated
/// beyond the threshold.
pub fn separate(
    family: RowFamily,
    inst: &Instance,
    vs: &VarSpace,
    point: &[f64],
    max_cuts: usize,
) -> Vec<Cut> {
    let n = inst.n();
    let params = gamma_params(family, inst, vs, point);
    let graph = build_sep_graph(&params);
    let tree = gomory_hu(&graph.cap);
    let mut edges = tree.path_edges(0, n + 1);
    let best = edges.iter().map(|&c| tree.weight[c]).fold(f64::INFINITY, f64::min);
    edges.retain(|&c| tree.weight[c] <= best + 1e-9);
    let mut seen = HashSet::new();
    let mut cuts = Vec::new();
    for child in edges {
        let below = tree.subtree(child);
        // The terminal side is everything above the removed edge.
        let subset: Vec<usize> = (0..n).filter(|&j| !below[j + 1]).collect();
        if subset.is_empty() || gamma_value(&params, &subset) <= EPS_CUT {
            continue;
        }
        let cut = s_row(family, inst, &subset);
        if seen.insert(cut.key()) {
            cuts.push(cut);
            if cuts.len() == max_cuts {
                break;
            }
        }
    }
    cuts
}

/// Violated pair-linking rows `|delta_i - delta_j| <= x_ij` and
/// `x_ij <= min(delta_i + delta_j, 2 - delta_i - delta_j)`. In the spaces
/// where the objective puts no cost on the pair variables these rows are
/// kept out of the base system and repaired on demand, which keeps node
/// relaxations small. Returns the most violated rows first, at most
/// `max_cuts`.
pub fn separate_x_links(vs: &VarSpace, point: &[f64], max_cuts: usize) -> Vec<Cut> {
    let n = vs.n;
    let mut found: Vec<(f64, Cut)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (x, di, dj) = (vs.x(i, j), vs.delta(i), vs.delta(j));
            let (xv, dv, ev) = (point[x], point[di], point[dj]);
            let rows = [
                (dv - ev - xv, RowFamily::X1, vec![(x, rat(1)), (di, rat(-1)), (dj, rat(1))], Sense::Ge, rat(0)),
                (ev - dv - xv, RowFamily::X2, vec![(x, rat(1)), (di, rat(1)), (dj, rat(-1))], Sense::Ge, rat(0)),
                (xv - dv - ev, RowFamily::X3, vec![(x, rat(1)), (di, rat(-1)), (dj, rat(-1))], Sense::Le, rat(0)),
                (xv + dv + ev - 2.0, RowFamily::X4, vec![(x, rat(1)), (di, rat(1)), (dj, rat(1))], Sense::Le, rat(2)),
            ];
            for (violation, family, coeffs, sense, rhs) in rows {
                if violation > EPS_CUT {
                    found.push((violation, Cut::new(family, coeffs, sense, rhs, None)));
                }
            }
        }
    }
    found.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.coeffs.first().map(|c| c.0).cmp(&b.1.coeffs.first().map(|c| c.0)))
    });
    found.into_iter().map(|(_, cut)| cut).take(max_cuts).collect()
}

/// Violated triangle rows on the pair variables: for each task triple,
/// `x_ij + x_jk + x_ik <= 2` and the three rotations of `x_ij <= x_ik +
/// x_jk`. Valid because the pair variables of any integral point form a
/// metric taking values in {0, 1} with even triangle sums. Returns the most
/// violated rows first, at most `max_cuts`.
pub fn separate_triangle(vs: &VarSpace, point: &[f64], max_cuts: usize) -> Vec<Cut> {
    let n = vs.n;
    let mut found: Vec<(f64, Cut)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (xij, xik, xjk) = (vs.x(i, j), vs.x(i, k), vs.x(j, k));
                let rows = [
                    (point[xij] + point[xjk] + point[xik] - 2.0,
                     vec![(xij, rat(1)), (xjk, rat(1)), (xik, rat(1))], rat(2)),
                    (point[xij] - point[xik] - point[xjk],
                     vec![(xij, rat(1)), (xik, rat(-1)), (xjk, rat(-1))], rat(0)),
                    (point[xik] - point[xij] - point[xjk],
                     vec![(xik, rat(1)), (xij, rat(-1)), (xjk, rat(-1))], rat(0)),
                    (point[xjk] - point[xij] - point[xik],
                     vec![(xjk, rat(1)), (xij, rat(-1)), (xik, rat(-1))], rat(0)),
                ];
                for (violation, coeffs, rhs) in rows {
                    if violation > EPS_CUT {
                        found.push((
                            violation,
                            Cut::new(RowFamily::Triangle, coeffs, Sense::Le, rhs, Some(vec![i, j, k])),
                        ));
                    }
                }
            }
        }
    }
    found.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| {
        a.1.subset.cmp(&b.1.subset).then(a.1.coeffs.first().map(|c| c.0).cmp(&b.1.coeffs.first().map(|c| c.0)))
    }));
    found.into_iter().map(|(_, cut)| cut).take(max_cuts).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dominance::decode_dblock;
    use crate::gen;
    use crate::instance::Instance;
    use crate::polytope::{check_point_f64, encode_f1_point, Formulation};
    use crate::rat_f64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dyadic(rng: &mut ChaCha8Rng, max_eighths: i64) -> f64 {
        rng.gen_range(0..=max_eighths) as f64 / 8.0
    }

    fn random_graph(rng: &mut ChaCha8Rng, v: usize, density: f64) -> Vec<Vec<f64>> {
        let mut cap = vec![vec![0.0; v]; v];
        for i in 0..v {
            for j in i + 1..v {
                if rng.gen_bool(density) {
                    let w = dyadic(rng, 64);
                    cap[i][j] = w;
                    cap[j][i] = w;
                }
            }
        }
        cap
    }

    fn brute_min_cut(cap: &[Vec<f64>], s: usize, t: usize) -> f64 {
        let v = cap.len();
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << v) {
            if mask & (1 << s) == 0 || mask & (1 << t) != 0 {
                continue;
            }
            let mut value = 0.0;
            for i in 0..v {
                if mask & (1 << i) != 0 {
                    for j in 0..v {
                        if mask & (1 << j) == 0 {
                            value += cap[i][j];
                        }
                    }
                }
            }
            best = best.min(value);
        }
        best
    }

    #[test]
    fn single_task_graph_weights() {
        let params = GammaParams { n: 1, c: vec![-3.0], q: vec![] };
        let graph = build_sep_graph(&params);
        assert_eq!(graph.k, vec![-6.0]);
        assert_eq!(graph.cap[0][1], 0.0);
        assert_eq!(graph.cap[1][2], 6.0);
    }

    #[test]
    fn two_task_graph_weights_and_identity() {
        let params = GammaParams { n: 2, c: vec![1.0, -1.0], q: vec![2.0] };
        let graph = build_sep_graph(&params);
        assert_eq!(graph.k, vec![4.0, 0.0]);
        assert_eq!(graph.cap[0][1], 4.0);
        assert_eq!(graph.cap[0][2], 0.0);
        assert_eq!(graph.cap[1][2], 2.0);
        assert_eq!(graph.cap[1][3], 0.0);
        assert_eq!(graph.cap[2][3], 0.0);
        for mask in 0u32..4 {
            let subset: Vec<usize> = (0..2).filter(|&j| mask & (1 << j) != 0).collect();
            let mut side = vec![false; 4];
            side[0] = true;
            for &j in &subset {
                side[j + 1] = true;
            }
            let predicted = -graph.partition_weight(&side) / 2.0
                + (graph.q_sum + graph.c_sum) / 2.0
                + graph.k_abs_sum / 4.0;
            assert!((gamma_value(&params, &subset) - predicted).abs() < 1e-12);
        }
    }

    #[test]
    fn cut_value_identity_on_random_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let n = rng.gen_range(1..=8);
            let params = GammaParams {
                n,
                c: (0..n).map(|_| dyadic(&mut rng, 80) - 5.0).collect(),
                q: (0..n * (n - 1) / 2).map(|_| dyadic(&mut rng, 40)).collect(),
            };
            let graph = build_sep_graph(&params);
            for mask in 0u32..(1 << n) {
                let subset: Vec<usize> = (0..n).filter(|&j| mask & (1 << j) != 0).collect();
                let mut side = vec![false; n + 2];
                side[0] = true;
                for &j in &subset {
                    side[j + 1] = true;
                }
                let predicted = -graph.partition_weight(&side) / 2.0
                    + (graph.q_sum + graph.c_sum) / 2.0
                    + graph.k_abs_sum / 4.0;
                assert!((gamma_value(&params, &subset) - predicted).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn min_cut_on_a_path_and_a_disconnected_pair() {
        let mut cap = vec![vec![0.0; 3]; 3];
        cap[0][1] = 3.0;
        cap[1][0] = 3.0;
        cap[1][2] = 1.0;
        cap[2][1] = 1.0;
        let (value, side) = min_cut(&cap, 0, 2);
        assert_eq!(value, 1.0);
        assert_eq!(side, vec![true, true, false]);
        let empty = vec![vec![0.0; 2]; 2];
        assert_eq!(min_cut(&empty, 0, 1).0, 0.0);
    }

    #[test]
    fn min_cut_matches_partition_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for _ in 0..60 {
            let v = rng.gen_range(2..=9);
            let cap = random_graph(&mut rng, v, 0.6);
            let s = rng.gen_range(0..v);
            let t = (s + rng.gen_range(1..v)) % v;
            let (value, side) = min_cut(&cap, s, t);
            assert!(side[s] && !side[t]);
            // Dyadic weights keep every sum exact, so equality is strict.
            assert_eq!(value, brute_min_cut(&cap, s, t));
        }
    }

    #[test]
    fn tree_path_minima_equal_direct_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        for _ in 0..40 {
            let v = rng.gen_range(2..=10);
            let cap = random_graph(&mut rng, v, 0.5);
            let tree = gomory_hu(&cap);
            for u in 0..v {
                for w in u + 1..v {
                    assert_eq!(tree.path_min(u, w), min_cut(&cap, u, w).0);
                }
            }
        }
    }

    #[test]
    fn tree_edges_induce_actual_minimum_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..40 {
            let v = rng.gen_range(2..=9);
            let cap = random_graph(&mut rng, v, 0.6);
            let tree = gomory_hu(&cap);
            for child in 1..v {
                let below = tree.subtree(child);
                let mut value = 0.0;
                for i in 0..v {
                    if below[i] {
                        for j in 0..v {
                            if !below[j] {
                                value += cap[i][j];
                            }
                        }
                    }
                }
                assert_eq!(value, tree.weight[child], "edge {child} partition is not tight");
                assert_eq!(value, brute_min_cut(&cap, child, tree.parent[child]));
            }
        }
    }

    #[test]
    fn all_early_point_yields_the_pair_cut() {
        // delta = 1 with zero earliness: the early side of the pair must
        // carry p_i p_j of load, so the full-set row is violated by exactly
        // that much.
        let inst = Instance::new(vec![3, 4], vec![1, 1], vec![1, 1], 7).unwrap();
        let vs = VarSpace::new(Formulation::F1, 2);
        let mut point = vec![0.0; vs.ncols()];
        point[vs.delta(0)] = 1.0;
        point[vs.delta(1)] = 1.0;
        let cuts = separate(RowFamily::S1, &inst, &vs, &point, 10);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].subset, Some(vec![0, 1]));
        assert_eq!(cuts[0].slack_f64(&point), -12.0);
        // The tardy-side family is satisfied: everything is marked early.
        assert!(separate(RowFamily::S2, &inst, &vs, &point, 10).is_empty());
    }

    #[test]
    fn schedule_images_produce_no_cuts() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..40 {
            let n = rng.gen_range(1..=6);
            let mut inst = gen::random_instance(&mut rng, n, (1, 6), (0, 9), (0, 9));
            inst.d = inst.ptotal() + rng.gen_range(0..3);
            let delta: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
            let (_, c) = decode_dblock(&inst, &delta);
            let point: Vec<f64> =
                encode_f1_point(&inst, &c).into_iter().map(rat_f64).collect();
            let vs = VarSpace::new(Formulation::F1, n);
            assert!(separate(RowFamily::S1, &inst, &vs, &point, 10).is_empty());
            assert!(separate(RowFamily::S2, &inst, &vs, &point, 10).is_empty());
        }
    }

    #[test]
    fn separation_agrees_with_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for _ in 0..150 {
            let n = rng.gen_range(1..=7);
            let inst = gen::random_instance(&mut rng, n, (1, 9), (1, 9), (1, 9));
            let vs = VarSpace::new(Formulation::F1, n);
            let point = gen::random_relaxation_point(&inst, &mut rng);
            for family in [RowFamily::S1, RowFamily::S2] {
                let params = gamma_params(family, &inst, &vs, &point);
                let (best, _) = gamma_max_exhaustive(&params);
                let cuts = separate(family, &inst, &vs, &point, 10);
                assert_eq!(cuts.is_empty(), best <= EPS_CUT, "family {family:?}");
                if let Some(cut) = cuts.first() {
                    let subset = cut.subset.as_ref().unwrap();
                    assert!((gamma_value(&params, subset) - best).abs() < 1e-9);
                    // Reported rows really are violated at the point.
                    assert!(check_point_f64(&[cut.clone()], &point, EPS_CUT / 2.0).len() == 1);
                }
            }
        }
    }

    #[test]
    fn triangle_rows_hold_at_integral_points_and_catch_odd_cycles() {
        let vs = VarSpace::new(Formulation::F2, 3);
        for mask in 0u32..8 {
            let delta: Vec<f64> = (0..3).map(|j| ((mask >> j) & 1) as f64).collect();
            let mut point = vec![0.0; vs.ncols()];
            for i in 0..3 {
                for j in i + 1..3 {
                    point[vs.x(i, j)] = if delta[i] != delta[j] { 1.0 } else { 0.0 };
                }
            }
            assert!(separate_triangle(&vs, &point, 10).is_empty());
        }
        let mut point = vec![0.0; vs.ncols()];
        point[vs.x(0, 1)] = 1.0;
        point[vs.x(0, 2)] = 1.0;
        point[vs.x(1, 2)] = 1.0;
        let cuts = separate_triangle(&vs, &point, 10);
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].slack_f64(&point), -1.0);
        // The half point violates nothing even though it is fractional.
        let half = vec![0.5; vs.ncols()];
        assert!(separate_triangle(&vs, &half, 10).is_empty());
    }
}
