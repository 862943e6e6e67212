/*!
Per-node structure parameters, computed exactly.

All six quantities are rationals derived from neighborhood counts:

- sparsity:      zeta(v)  = (1/d) * (C(d,2) - edges inside N(v)), 0 if d = 0
- disparity:     disp(u,v) = |palette(u) \ palette(v)| / |palette(u)|
- discrepancy:   disc(v)  = sum of disp(u, v) over u in N(v)
- unevenness:    eta(v)   = sum of max(0, d(u) - d(v)) / (d(u) + 1)
- slackability:  sigma(v) = disc(v) + zeta(v)
- strong slackability: sbar(v) = eta(v) + zeta(v)

Everything is kept in arbitrary-precision rationals: a sum of a few hundred
fractions with unrelated denominators routinely pushes the reduced
denominator past machine range, and the classifier thresholds downstream
must compare exactly.
*/

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;

use crate::graph::{Graph, NodeId};
use crate::instance::D1LCInstance;

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_int(num: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(num))
}

/// Largest s with s^den <= n^num, for e = num/den >= 0. Exact integer
/// comparison throughout; n = 0 maps to 0.
pub fn floor_pow(n: u64, e: &BigRational) -> u64 {
    use num_traits::{Signed, ToPrimitive};
    assert!(!e.is_negative());
    if n == 0 {
        return 0;
    }
    let num = e.numer().to_u32().expect("exponent numerator out of range");
    let den = e.denom().to_u32().expect("exponent denominator out of range");
    let target = BigInt::from(n).pow(num);
    let mut lo = 0u64; // invariant: lo^den <= target
    let mut hi = 1u64; // scan for hi^den > target
    while BigInt::from(hi).pow(den) <= target {
        lo = hi;
        hi = hi.saturating_mul(2);
        if hi == u64::MAX {
            break;
        }
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if BigInt::from(mid).pow(den) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Smallest s with s^den >= n^num, for e = num/den >= 0.
pub fn ceil_pow(n: u64, e: &BigRational) -> u64 {
    use num_traits::ToPrimitive;
    if n == 0 {
        return 0;
    }
    let f = floor_pow(n, e);
    let num = e.numer().to_u32().expect("exponent numerator out of range");
    let den = e.denom().to_u32().expect("exponent denominator out of range");
    if BigInt::from(f).pow(den) == BigInt::from(n).pow(num) {
        f
    } else {
        f + 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeParams {
    pub degree: usize,
    pub sparsity: BigRational,
    pub discrepancy: BigRational,
    pub unevenness: BigRational,
    pub slackability: BigRational,
    pub strong_slackability: BigRational,
}

/// Edges with both endpoints in N(v).
pub fn neighborhood_edges(graph: &Graph, v: NodeId, mark: &mut [bool]) -> usize {
    let nbrs = graph.neighbors(v);
    for &u in nbrs {
        mark[u as usize] = true;
    }
    let mut count = 0;
    for &u in nbrs {
        for &w in graph.neighbors(u) {
            if w > u && mark[w as usize] {
                count += 1;
            }
        }
    }
    for &u in nbrs {
        mark[u as usize] = false;
    }
    count
}

/// Sparsity of one node. Isolated nodes are defined to 0.
pub fn compute_sparsity(graph: &Graph, v: NodeId) -> BigRational {
    let d = graph.degree(v);
    if d == 0 {
        return BigRational::zero();
    }
    let mut mark = vec![false; graph.n()];
    let inside = neighborhood_edges(graph, v, &mut mark) as i64;
    let pairs = (d as i64) * (d as i64 - 1) / 2;
    BigRational::new(BigInt::from(pairs - inside), BigInt::from(d as i64))
}

/// Fraction of u's palette missing from v's.
pub fn compute_disparity(inst: &D1LCInstance, u: NodeId, v: NodeId) -> BigRational {
    let pu = inst.palette(u);
    let pv = inst.palette(v);
    let missing = pu
        .colors()
        .iter()
        .filter(|&&c| !pv.contains(c))
        .count() as i64;
    BigRational::new(BigInt::from(missing), BigInt::from(pu.len() as i64))
}

pub fn compute_discrepancy(inst: &D1LCInstance, v: NodeId) -> BigRational {
    let mut acc = BigRational::zero();
    for &u in inst.graph.neighbors(v) {
        acc += compute_disparity(inst, u, v);
    }
    acc
}

pub fn compute_unevenness(graph: &Graph, v: NodeId) -> BigRational {
    let dv = graph.degree(v) as i64;
    let mut acc = BigRational::zero();
    for &u in graph.neighbors(v) {
        let du = graph.degree(u) as i64;
        if du > dv {
            acc += BigRational::new(BigInt::from(du - dv), BigInt::from(du + 1));
        }
    }
    acc
}

pub fn compute_slackability(inst: &D1LCInstance, v: NodeId) -> BigRational {
    compute_discrepancy(inst, v) + compute_sparsity(&inst.graph, v)
}

pub fn compute_strong_slackability(inst: &D1LCInstance, v: NodeId) -> BigRational {
    compute_unevenness(&inst.graph, v) + compute_sparsity(&inst.graph, v)
}

/// Batch computation for every node. Parallel over nodes; the output order is
/// the node order, so the result is independent of thread count.
pub fn compute_all_params(inst: &D1LCInstance) -> Vec<NodeParams> {
    (0..inst.n() as NodeId)
        .into_par_iter()
        .map_init(
            || vec![false; inst.n()],
            |mark, v| {
                let graph = &inst.graph;
                let d = graph.degree(v);
                let sparsity = if d == 0 {
                    BigRational::zero()
                } else {
                    let inside = neighborhood_edges(graph, v, mark) as i64;
                    let pairs = (d as i64) * (d as i64 - 1) / 2;
                    BigRational::new(BigInt::from(pairs - inside), BigInt::from(d as i64))
                };
                let discrepancy = compute_discrepancy(inst, v);
                let unevenness = compute_unevenness(graph, v);
                let slackability = discrepancy.clone() + sparsity.clone();
                let strong_slackability = unevenness.clone() + sparsity.clone();
                NodeParams {
                    degree: d,
                    sparsity,
                    discrepancy,
                    unevenness,
                    slackability,
                    strong_slackability,
                }
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::instance::{D1LCInstance, Palette};

    #[test]
    fn sparsity_of_path_neighborhood() {
        // v = 0 adjacent to 1,2,3; neighborhood is the path 1-2-3 (2 edges):
        // zeta = (3 - 2) / 3 = 1/3
        let g = Graph::from_edges(
            4,
            &[(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)],
        )
        .unwrap();
        assert_eq!(compute_sparsity(&g, 0), rat(1, 3));
    }

    #[test]
    fn sparsity_triangle_free_node() {
        // degree-d node with no edges among neighbors: (d-1)/2
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert_eq!(compute_sparsity(&g, 0), rat(3, 2));
    }

    #[test]
    fn sparsity_isolated_and_clique_are_zero() {
        let g = Graph::from_edges(4, &[(1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(compute_sparsity(&g, 0), rat_int(0));
        assert_eq!(compute_sparsity(&g, 1), rat_int(0));
    }

    #[test]
    fn disparity_counts_missing_fraction() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let inst = D1LCInstance::new(
            g,
            vec![
                Palette::new(vec![0, 1, 2, 3]),
                Palette::new(vec![2, 3]),
            ],
        )
        .unwrap();
        assert_eq!(compute_disparity(&inst, 0, 1), rat(1, 2));
        assert_eq!(compute_disparity(&inst, 1, 0), rat_int(0));
    }

    #[test]
    fn unevenness_star_leaf() {
        // K_{1,9}: leaf sees one neighbor of degree 9 -> (9-1)/10 = 4/5
        let edges: Vec<(NodeId, NodeId)> = (1..=9).map(|v| (0, v)).collect();
        let g = Graph::from_edges(10, &edges).unwrap();
        assert_eq!(compute_unevenness(&g, 1), rat(4, 5));
        assert_eq!(compute_unevenness(&g, 0), rat_int(0));
    }

    #[test]
    fn slackability_identity() {
        // sbar - sigma == eta - disc on any instance
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        for v in 0..5 {
            let lhs = compute_strong_slackability(&inst, v) - compute_slackability(&inst, v);
            let rhs = compute_unevenness(&inst.graph, v) - compute_discrepancy(&inst, v);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn batch_matches_single() {
        let g = Graph::from_edges(6, &[(0, 1), (0, 2), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let all = compute_all_params(&inst);
        for v in 0..6u32 {
            assert_eq!(all[v as usize].sparsity, compute_sparsity(&inst.graph, v));
            assert_eq!(all[v as usize].discrepancy, compute_discrepancy(&inst, v));
            assert_eq!(all[v as usize].unevenness, compute_unevenness(&inst.graph, v));
            assert_eq!(
                all[v as usize].slackability,
                compute_slackability(&inst, v)
            );
        }
    }

    #[test]
    fn rational_powers() {
        let half = rat(1, 2);
        assert_eq!(floor_pow(16, &half), 4);
        assert_eq!(ceil_pow(16, &half), 4);
        assert_eq!(floor_pow(17, &half), 4);
        assert_eq!(ceil_pow(17, &half), 5);
        // 8192^(7/8) = 2^11.375 = 2655.96...
        let se = rat(7, 8);
        assert_eq!(floor_pow(8192, &se), 2655);
        assert_eq!(ceil_pow(8192, &se), 2656);
        assert_eq!(floor_pow(0, &half), 0);
        assert_eq!(floor_pow(5, &rat(0, 1)), 1);
        assert_eq!(ceil_pow(1000, &rat(1, 1)), 1000);
    }
}
