//! Graph containers, discrete surrogate objectives for clique and
//! independent-set search, the cut function, and exhaustive ground truths.

use crate::error::{Error, Result};
use crate::oracle::SetFunctionOracle;
use crate::subset::{Subset, MAX_GROUND_SET};

pub const BRUTE_FORCE_MAX_N: usize = 24;

/// Simple undirected graph over nodes 0..n, adjacency kept as one bitmask
/// per node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    adjacency: Vec<u64>,
}

impl Graph {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n > MAX_GROUND_SET {
            return Err(Error::GroundSetTooLarge {
                n,
                max: MAX_GROUND_SET,
            });
        }
        let mut adjacency = vec![0u64; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::DomainViolation {
                    domain: "graph",
                    detail: format!("edge ({u},{v}) outside node range 0..{n}"),
                });
            }
            if u == v {
                return Err(Error::DomainViolation {
                    domain: "graph",
                    detail: format!("self-loop at node {u}"),
                });
            }
            adjacency[u] |= 1 << v;
            adjacency[v] |= 1 << u;
        }
        Ok(Graph { n, adjacency })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        Graph::new(n, &edges).unwrap()
    }

    pub fn empty(n: usize) -> Self {
        Graph::new(n, &[]).unwrap()
    }

    /// The Petersen graph: outer 5-cycle, inner 5-star, spokes.
    pub fn petersen() -> Self {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5));
            edges.push((5 + i, 5 + (i + 2) % 5));
            edges.push((i, 5 + i));
        }
        Graph::new(10, &edges).unwrap()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n && v < self.n && (self.adjacency[u] >> v) & 1 == 1
    }

    pub fn neighbors(&self, u: usize) -> u64 {
        self.adjacency[u]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in (u + 1)..self.n {
                if self.has_edge(u, v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency
            .iter()
            .map(|m| m.count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// Number of edges with both endpoints inside s.
    pub fn internal_edges(&self, s: &Subset) -> usize {
        let bits = s.bits();
        s.iter()
            .map(|u| (self.adjacency[u] & bits).count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// Number of edges with exactly one endpoint inside s.
    pub fn cut_edges(&self, s: &Subset) -> usize {
        let bits = s.bits();
        s.iter()
            .map(|u| (self.adjacency[u] & !bits).count_ones() as usize)
            .sum()
    }
}

/// Problem selector for ground-truth search and solve pipelines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    MaxClique,
    MaxIndependentSet,
}

impl ProblemKind {
    pub fn default_exponent() -> u32 {
        2
    }

    pub fn objective(&self, g: &Graph, c: u32) -> SetFunctionOracle {
        match self {
            ProblemKind::MaxClique => clique_objective(g, c),
            ProblemKind::MaxIndependentSet => mis_objective(g, c),
        }
    }

    pub fn is_feasible(&self, g: &Graph, s: &Subset) -> bool {
        match self {
            ProblemKind::MaxClique => is_clique(g, s),
            ProblemKind::MaxIndependentSet => is_independent(g, s),
        }
    }
}

pub fn is_clique(g: &Graph, s: &Subset) -> bool {
    let size = s.cardinality();
    size <= 1 || g.internal_edges(s) == size * (size - 1) / 2
}

pub fn is_independent(g: &Graph, s: &Subset) -> bool {
    g.internal_edges(s) == 0
}

/// Clique surrogate: f(S) = -w(S) * q̂(S)^c where w counts internal edges
/// and q̂ is the fraction of possible internal edges present. Zero on sets
/// of size at most one. Every clique scores minus its edge count, so among
/// cliques larger is strictly better; sufficiently dense non-cliques can
/// score below the maximum clique, which is why solution decoding filters
/// by `is_clique`.
pub fn clique_objective(g: &Graph, c: u32) -> SetFunctionOracle {
    assert!(c >= 1);
    let g = g.clone();
    SetFunctionOracle::new(g.n(), move |s| {
        let size = s.cardinality();
        if size <= 1 {
            return 0.0;
        }
        let w = g.internal_edges(&s) as f64;
        let density = 2.0 * w / ((size * size - size) as f64);
        -w * density.powi(c as i32)
    })
}

/// Independent-set surrogate: f(S) = -(|S|/n) * (1 - q̂(S))^c. Independent
/// sets score minus their relative size; any internal edge shrinks the
/// score toward zero.
pub fn mis_objective(g: &Graph, c: u32) -> SetFunctionOracle {
    assert!(c >= 1);
    let g = g.clone();
    let n = g.n() as f64;
    SetFunctionOracle::new(g.n(), move |s| {
        let size = s.cardinality();
        if size == 0 {
            return 0.0;
        }
        let density = if size == 1 {
            0.0
        } else {
            2.0 * g.internal_edges(&s) as f64 / ((size * size - size) as f64)
        };
        -(size as f64 / n) * (1.0 - density).powi(c as i32)
    })
}

/// The verbatim size-times-density form w(S) q̂(S)^c for independent sets.
/// It is nonnegative and minimized by any edge-free set, so it cannot rank
/// independent sets by size; kept for reference, the complemented
/// `mis_objective` is the default.
pub fn mis_objective_literal(g: &Graph, c: u32) -> SetFunctionOracle {
    assert!(c >= 1);
    let g = g.clone();
    let n = g.n() as f64;
    SetFunctionOracle::new(g.n(), move |s| {
        let size = s.cardinality();
        if size <= 1 {
            return 0.0;
        }
        let density = 2.0 * g.internal_edges(&s) as f64 / ((size * size - size) as f64);
        (size as f64 / n) * density.powi(c as i32)
    })
}

/// Cut function f(S) = number of edges leaving S; submodular, used as the
/// ground-truth family for convex-closure cross-checks.
pub fn cut_function(g: &Graph) -> SetFunctionOracle {
    let g = g.clone();
    SetFunctionOracle::new(g.n(), move |s| g.cut_edges(&s) as f64)
}

fn search_max_clique(
    g: &Graph,
    current: u64,
    current_size: usize,
    candidates: u64,
    best: &mut (usize, u64),
) {
    if current_size + (candidates.count_ones() as usize) < best.0 {
        return;
    }
    if candidates == 0 {
        if current_size > best.0 || (current_size == best.0 && current < best.1) {
            *best = (current_size, current);
        }
        return;
    }
    let mut rest = candidates;
    while rest != 0 {
        let v = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        // Prune when even taking every remaining candidate cannot beat best.
        if (current_size + 1 + rest.count_ones() as usize) < best.0 {
            break;
        }
        search_max_clique(
            g,
            current | (1 << v),
            current_size + 1,
            candidates & rest & g.neighbors(v),
            best,
        );
    }
    // The branch that takes none of the remaining candidates.
    if current_size > best.0 || (current_size == best.0 && current < best.1) {
        *best = (current_size, current);
    }
}

/// Exhaustive maximum clique / independent set by cardinality, tie-broken
/// to the smallest bitmask. Branch and bound over candidate masks.
pub fn brute_force(g: &Graph, problem: ProblemKind) -> Result<(Subset, usize)> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::GroundSetTooLarge {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let target = match problem {
        ProblemKind::MaxClique => g.clone(),
        // Independent sets are cliques of the complement.
        ProblemKind::MaxIndependentSet => {
            let edges: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .filter(|&(u, v)| !g.has_edge(u, v))
                .collect();
            Graph::new(n, &edges)?
        }
    };
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut best = (0usize, 0u64);
    search_max_clique(&target, 0, 0, full, &mut best);
    Ok((Subset::from_bits(best.1, n), best.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_graph(n: usize, p: f64, rng: &mut StdRng) -> Graph {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .filter(|_| rng.random::<f64>() < p)
            .collect();
        Graph::new(n, &edges).unwrap()
    }

    #[test]
    fn clique_objective_examples() {
        let k3 = Graph::complete(3);
        let f = clique_objective(&k3, 2);
        assert_eq!(f.eval(Subset::full(3)).unwrap(), -3.0);
        assert_eq!(f.eval(Subset::from_indices(&[0, 1], 3)).unwrap(), -1.0);

        let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let f = clique_objective(&path, 2);
        assert_eq!(f.eval(Subset::from_indices(&[0, 2], 3)).unwrap(), 0.0);
        assert_eq!(f.eval(Subset::singleton(1, 3)).unwrap(), 0.0);
    }

    #[test]
    fn mis_objective_examples() {
        let e3 = Graph::empty(3);
        let f = mis_objective(&e3, 2);
        assert_eq!(f.eval(Subset::full(3)).unwrap(), -1.0);
        assert_eq!(f.eval(Subset::singleton(0, 3)).unwrap(), -1.0 / 3.0);

        let k2 = Graph::complete(2);
        let f = mis_objective(&k2, 2);
        assert_eq!(f.eval(Subset::full(2)).unwrap(), 0.0);
    }

    #[test]
    fn cut_function_examples() {
        let path = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let f = cut_function(&path);
        assert_eq!(f.eval(Subset::singleton(1, 3)).unwrap(), 2.0);
        assert_eq!(f.eval(Subset::empty(3)).unwrap(), 0.0);
        assert_eq!(f.eval(Subset::full(3)).unwrap(), 0.0);

        let k3 = Graph::complete(3);
        let f = cut_function(&k3);
        assert_eq!(f.eval(Subset::from_indices(&[0, 1], 3)).unwrap(), 2.0);
    }

    #[test]
    fn cut_function_is_submodular_exhaustive() {
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..10 {
            let n = 6;
            let g = random_graph(n, 0.5, &mut rng);
            let f = cut_function(&g);
            for s in Subset::enumerate_all(n) {
                for t in Subset::enumerate_all(n) {
                    if s.bits() & !t.bits() != 0 {
                        continue; // need S ⊆ T
                    }
                    for i in 0..n {
                        if t.contains(i) {
                            continue;
                        }
                        let gain_s =
                            f.eval(s.with(i)).unwrap() - f.eval(s).unwrap();
                        let gain_t =
                            f.eval(t.with(i)).unwrap() - f.eval(t).unwrap();
                        assert!(gain_s >= gain_t - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn brute_force_small_examples() {
        let k3 = Graph::complete(3);
        assert_eq!(brute_force(&k3, ProblemKind::MaxClique).unwrap().1, 3);

        let petersen = Graph::petersen();
        assert_eq!(brute_force(&petersen, ProblemKind::MaxClique).unwrap().1, 2);
        assert_eq!(
            brute_force(&petersen, ProblemKind::MaxIndependentSet)
                .unwrap()
                .1,
            4
        );

        let too_big = Graph::empty(25);
        assert!(brute_force(&too_big, ProblemKind::MaxClique).is_err());
    }

    #[test]
    fn brute_force_matches_naive_enumeration() {
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..20 {
            let n = 9;
            let g = random_graph(n, 0.5, &mut rng);
            for problem in [ProblemKind::MaxClique, ProblemKind::MaxIndependentSet] {
                let (fast_set, fast_size) = brute_force(&g, problem).unwrap();
                let mut naive = (0usize, u64::MAX);
                for s in Subset::enumerate_all(n) {
                    if problem.is_feasible(&g, &s) {
                        let size = s.cardinality();
                        if size > naive.0 || (size == naive.0 && s.bits() < naive.1) {
                            naive = (size, s.bits());
                        }
                    }
                }
                assert_eq!(fast_size, naive.0);
                assert_eq!(fast_set.bits(), naive.1, "tie-break mismatch");
                assert!(problem.is_feasible(&g, &fast_set));
            }
        }
    }

    #[test]
    fn feasibility_predicates() {
        let mut k3_minus = Graph::complete(3);
        k3_minus = Graph::new(
            3,
            &k3_minus
                .edges()
                .into_iter()
                .filter(|&(u, v)| (u, v) != (0, 1))
                .collect::<Vec<_>>(),
        )
        .unwrap();
        assert!(!is_clique(&k3_minus, &Subset::full(3)));
        assert!(is_clique(&k3_minus, &Subset::from_indices(&[0, 2], 3)));
        assert!(is_clique(&k3_minus, &Subset::empty(3)));
        assert!(is_independent(&k3_minus, &Subset::empty(3)));
        assert!(is_independent(&k3_minus, &Subset::from_indices(&[0, 1], 3)));
    }

    #[test]
    fn surrogate_minimizer_among_feasible_sets_is_maximum() {
        // The surrogate ranks feasible sets by size: its argmin over
        // cliques (independent sets) is a maximum clique (independent set).
        // Over all sets the argmin can be an infeasible dense set, which is
        // exactly why decoding filters by feasibility.
        let mut rng = StdRng::seed_from_u64(23);
        for trial in 0..20 {
            let n = if trial % 2 == 0 { 12 } else { 16 };
            let g = random_graph(n, 0.5, &mut rng);
            for problem in [ProblemKind::MaxClique, ProblemKind::MaxIndependentSet] {
                let f = problem.objective(&g, 2);
                let (_, best_size) = brute_force(&g, problem).unwrap();
                let mut best_feasible: Option<(f64, usize)> = None;
                for s in Subset::enumerate_all(n) {
                    if !problem.is_feasible(&g, &s) {
                        continue;
                    }
                    let v = f.eval(s).unwrap();
                    best_feasible = Some(match best_feasible {
                        None => (v, s.cardinality()),
                        Some((bv, _bc)) if v < bv => (v, s.cardinality()),
                        Some(cur) => cur,
                    });
                }
                let (_, argmin_size) = best_feasible.unwrap();
                assert_eq!(
                    argmin_size, best_size,
                    "{problem:?}: feasible argmin size {argmin_size} vs optimum {best_size}"
                );
            }
        }
    }

    #[test]
    fn clique_surrogate_values_rank_cliques_by_edges() {
        let mut rng = StdRng::seed_from_u64(31);
        let g = random_graph(10, 0.6, &mut rng);
        let f = clique_objective(&g, 2);
        for s in Subset::enumerate_all(10) {
            if is_clique(&g, &s) {
                let m = s.cardinality();
                let expect = if m <= 1 {
                    0.0
                } else {
                    -((m * (m - 1) / 2) as f64)
                };
                assert_eq!(f.eval(s).unwrap(), expect);
            }
        }
    }
}
