/*!
Almost-clique decomposition and the classifiers built on it.

The decomposition splits V into sparse nodes, uneven nodes, and a family of
almost-cliques covering the dense rest:

  (i)   every sparse node v has sparsity >= eps_sp * d(v)
  (ii)  every uneven node v has unevenness >= eps_sp * d(v)
  (iii) every clique member v has d(v) <= (1 + eps_ac) * |C|
  (iv)  every clique member v has |C| <= (1 + eps_ac) * |N(v) cap C|

(iv) forces |N(v) cap C| > |C| / 2, so any two members share a common member
and every clique has induced diameter <= 2.

Construction: threshold classification, then mutual-similarity components
over the remaining nodes (u, v adjacent and each holding at least
(1 - eps_ac/2) * max(d(u), d(v)) common neighbors), then a shrink-repair
pass that peels the weakest member until (iii)/(iv) hold, and one rescue
round over the peeled pool so small exact cliques that similarity cannot see
(the common-neighbor count maxes out at |C| - 2) still form cliques.

Some graphs admit no legal placement for certain nodes at all — an isolated
edge is the smallest case: both endpoints have sparsity and unevenness 0 and
a 2-clique cannot satisfy (iv) for eps_ac < 1. Such nodes are parked in
`v_sparse` and listed in `forced`; `certify_unplaceable` can prove, for
low-degree nodes, that no placement exists, which is what the acceptance
check uses to separate honest impossibility from construction bugs.
*/

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::BTreeMap;

use crate::graph::{Graph, NodeId};
use crate::instance::{Color, D1LCInstance};
use crate::params::{rat, NodeParams};

#[derive(Debug, Clone)]
pub struct AcdParams {
    pub eps_ac: BigRational,
    pub eps_sp: BigRational,
    /// eps1..eps5 for the start-set classifier.
    pub eps_start: [BigRational; 5],
    /// A color is heavy for v when its expected pick count reaches this.
    pub heavy_threshold: BigRational,
}

impl Default for AcdParams {
    fn default() -> Self {
        AcdParams {
            eps_ac: rat(1, 3),
            eps_sp: rat(1, 5),
            eps_start: [rat(1, 100), rat(1, 100), rat(1, 100), rat(1, 100), rat(1, 100)],
            heavy_threshold: BigRational::one(),
        }
    }
}

/// ceil((log2 max(Delta, 2))^2.1) — the clique-size scale used by the dense
/// stage (put-aside sizing, low-slack test, synch fail budget).
pub fn ell_from_max_degree(max_degree: usize) -> u64 {
    let d = max_degree.max(2) as f64;
    let y = d.log2().powf(2.1);
    y.ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Sparse,
    Uneven,
    Dense(usize),
}

#[derive(Debug, Clone)]
pub struct AlmostCliqueDecomposition {
    pub v_sparse: Vec<NodeId>,
    pub v_uneven: Vec<NodeId>,
    /// Sorted member lists, ordered by smallest member.
    pub cliques: Vec<Vec<NodeId>>,
    pub class_of: Vec<NodeClass>,
    /// Nodes parked in v_sparse without meeting condition (i).
    pub forced: Vec<NodeId>,
}

impl AlmostCliqueDecomposition {
    pub fn v_dense(&self) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self.cliques.iter().flatten().copied().collect();
        out.sort_unstable();
        out
    }

    pub fn is_dense(&self, v: NodeId) -> bool {
        matches!(self.class_of[v as usize], NodeClass::Dense(_))
    }

    pub fn clique_index(&self, v: NodeId) -> Option<usize> {
        match self.class_of[v as usize] {
            NodeClass::Dense(i) => Some(i),
            _ => None,
        }
    }
}

fn threshold(eps: &BigRational, d: usize) -> BigRational {
    eps * BigRational::from_integer(BigInt::from(d as i64))
}

fn meets_sparse(p: &NodeParams, eps_sp: &BigRational) -> bool {
    p.sparsity >= threshold(eps_sp, p.degree)
}

fn meets_uneven(p: &NodeParams, eps_sp: &BigRational) -> bool {
    p.unevenness >= threshold(eps_sp, p.degree)
}

/// |N(u) cap N(v)| via a scratch mark vector.
fn common_neighbors(g: &Graph, u: NodeId, v: NodeId, mark: &mut [bool]) -> usize {
    for &w in g.neighbors(u) {
        mark[w as usize] = true;
    }
    let count = g.neighbors(v).iter().filter(|&&w| mark[w as usize]).count();
    for &w in g.neighbors(u) {
        mark[w as usize] = false;
    }
    count
}

/// cnt >= (1 - eps_ac/2) * maxd, compared exactly.
fn similar_enough(cnt: usize, maxd: usize, eps_ac: &BigRational) -> bool {
    let lhs = BigRational::from_integer(BigInt::from(cnt as i64));
    let rhs = (BigRational::one() - eps_ac / rat(2, 1))
        * BigRational::from_integer(BigInt::from(maxd as i64));
    lhs >= rhs
}

/// Conditions (iii) and (iv) for `c` (sorted member list). Returns the first
/// offender with its clique-internal neighbor count, or None when valid.
fn clique_offender(g: &Graph, c: &[NodeId], eps_ac: &BigRational) -> Option<(NodeId, usize)> {
    let size = BigRational::from_integer(BigInt::from(c.len() as i64));
    let one_plus = BigRational::one() + eps_ac;
    let mut worst: Option<(usize, NodeId)> = None;
    for &v in c {
        let inside = g
            .neighbors(v)
            .iter()
            .filter(|&&u| c.binary_search(&u).is_ok())
            .count();
        let deg_ok = BigRational::from_integer(BigInt::from(g.degree(v) as i64))
            <= &one_plus * &size;
        let cov_ok = size <= &one_plus * BigRational::from_integer(BigInt::from(inside as i64));
        if !(deg_ok && cov_ok) {
            // Peel the least-connected offender (ties: smallest id).
            match worst {
                Some((wi, wv)) if (wi, wv) <= (inside, v) => {}
                _ => worst = Some((inside, v)),
            }
        }
    }
    worst.map(|(i, v)| (v, i))
}

/// Shrink `c` until (iii)/(iv) hold; returns the surviving clique (possibly
/// empty) and the peeled nodes.
fn shrink_repair(g: &Graph, mut c: Vec<NodeId>, eps_ac: &BigRational) -> (Vec<NodeId>, Vec<NodeId>) {
    let mut peeled = Vec::new();
    while !c.is_empty() {
        match clique_offender(g, &c, eps_ac) {
            None => break,
            Some((v, _)) => {
                let pos = c.binary_search(&v).unwrap();
                c.remove(pos);
                peeled.push(v);
            }
        }
    }
    (c, peeled)
}

/// Connected components of the subgraph induced on `nodes` restricted to
/// `edge_ok` pairs; components returned sorted, ordered by smallest member.
fn components_by(
    g: &Graph,
    nodes: &[NodeId],
    mut edge_ok: impl FnMut(NodeId, NodeId) -> bool,
) -> Vec<Vec<NodeId>> {
    let mut in_set = vec![false; g.n()];
    for &v in nodes {
        in_set[v as usize] = true;
    }
    let mut seen = vec![false; g.n()];
    let mut comps = Vec::new();
    for &start in nodes {
        if seen[start as usize] {
            continue;
        }
        seen[start as usize] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            for &u in g.neighbors(v) {
                if in_set[u as usize] && !seen[u as usize] && edge_ok(v, u) {
                    seen[u as usize] = true;
                    comp.push(u);
                    stack.push(u);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Build the decomposition. `node_params` must come from the same instance.
pub fn compute_acd(
    inst: &D1LCInstance,
    node_params: &[NodeParams],
    params: &AcdParams,
) -> AlmostCliqueDecomposition {
    let g = &inst.graph;
    let n = g.n();
    let mut class_of = vec![NodeClass::Sparse; n];
    let mut v_sparse = Vec::new();
    let mut v_uneven = Vec::new();
    let mut rest: Vec<NodeId> = Vec::new();

    for v in 0..n as NodeId {
        let p = &node_params[v as usize];
        if meets_sparse(p, &params.eps_sp) {
            v_sparse.push(v);
        } else if meets_uneven(p, &params.eps_sp) {
            class_of[v as usize] = NodeClass::Uneven;
            v_uneven.push(v);
        } else {
            rest.push(v);
        }
    }

    // Mutual-similarity components over the dense candidates.
    let mut mark = vec![false; n];
    let mut sim_cache: BTreeMap<(NodeId, NodeId), bool> = BTreeMap::new();
    let mut similar = |g: &Graph, a: NodeId, b: NodeId, mark: &mut [bool]| -> bool {
        let key = (a.min(b), a.max(b));
        if let Some(&hit) = sim_cache.get(&key) {
            return hit;
        }
        let cnt = common_neighbors(g, key.0, key.1, mark);
        let ok = similar_enough(cnt, g.degree(a).max(g.degree(b)), &params.eps_ac);
        sim_cache.insert(key, ok);
        ok
    };
    let candidates =
        components_by(g, &rest, |a, b| similar(g, a, b, &mut mark));

    let mut cliques: Vec<Vec<NodeId>> = Vec::new();
    let mut pool: Vec<NodeId> = Vec::new();
    for comp in candidates {
        let (kept, peeled) = shrink_repair(g, comp, &params.eps_ac);
        if !kept.is_empty() {
            cliques.push(kept);
        }
        pool.extend(peeled);
    }

    // Rescue round: plain-adjacency components of the peeled pool. Small
    // exact cliques land here because similarity cannot certify them.
    pool.sort_unstable();
    let mut forced = Vec::new();
    if !pool.is_empty() {
        let rescue = components_by(g, &pool, |_, _| true);
        for comp in rescue {
            let (kept, peeled) = shrink_repair(g, comp, &params.eps_ac);
            if !kept.is_empty() {
                cliques.push(kept);
            }
            for v in peeled {
                let p = &node_params[v as usize];
                if meets_sparse(p, &params.eps_sp) {
                    v_sparse.push(v);
                } else if meets_uneven(p, &params.eps_sp) {
                    class_of[v as usize] = NodeClass::Uneven;
                    v_uneven.push(v);
                } else {
                    // No legal home; parked sparse and reported.
                    v_sparse.push(v);
                    forced.push(v);
                }
            }
        }
    }

    cliques.sort_by_key(|c| c[0]);
    for (i, c) in cliques.iter().enumerate() {
        for &v in c {
            class_of[v as usize] = NodeClass::Dense(i);
        }
    }
    v_sparse.sort_unstable();
    v_uneven.sort_unstable();
    forced.sort_unstable();
    AlmostCliqueDecomposition {
        v_sparse,
        v_uneven,
        cliques,
        class_of,
        forced,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AcdViolation {
    NotSparse(NodeId),
    NotUneven(NodeId),
    DegreeTooHigh { node: NodeId, clique: usize },
    CoverageTooLow { node: NodeId, clique: usize },
    DiameterExceeded { clique: usize, u: NodeId, v: NodeId },
    NotAPartition(NodeId),
}

/// Check the decomposition node by node against the instance.
pub fn validate_acd(
    inst: &D1LCInstance,
    node_params: &[NodeParams],
    acd: &AlmostCliqueDecomposition,
    params: &AcdParams,
) -> Vec<AcdViolation> {
    let g = &inst.graph;
    let mut out = Vec::new();
    let mut seen = vec![0u32; g.n()];
    for &v in &acd.v_sparse {
        seen[v as usize] += 1;
        if !meets_sparse(&node_params[v as usize], &params.eps_sp) {
            out.push(AcdViolation::NotSparse(v));
        }
    }
    for &v in &acd.v_uneven {
        seen[v as usize] += 1;
        if !meets_uneven(&node_params[v as usize], &params.eps_sp) {
            out.push(AcdViolation::NotUneven(v));
        }
    }
    let one_plus = BigRational::one() + &params.eps_ac;
    for (i, c) in acd.cliques.iter().enumerate() {
        let size = BigRational::from_integer(BigInt::from(c.len() as i64));
        for &v in c {
            seen[v as usize] += 1;
            let inside = g
                .neighbors(v)
                .iter()
                .filter(|&&u| c.binary_search(&u).is_ok())
                .count();
            if BigRational::from_integer(BigInt::from(g.degree(v) as i64)) > &one_plus * &size {
                out.push(AcdViolation::DegreeTooHigh { node: v, clique: i });
            }
            if size > &one_plus * BigRational::from_integer(BigInt::from(inside as i64)) {
                out.push(AcdViolation::CoverageTooLow { node: v, clique: i });
            }
        }
        // Induced diameter <= 2 within the clique.
        for (ai, &a) in c.iter().enumerate() {
            for &b in &c[ai + 1..] {
                if g.has_edge(a, b) {
                    continue;
                }
                let two_hop = c.iter().any(|&w| {
                    w != a && w != b && g.has_edge(a, w) && g.has_edge(b, w)
                });
                if !two_hop {
                    out.push(AcdViolation::DiameterExceeded { clique: i, u: a, v: b });
                }
            }
        }
    }
    for v in 0..g.n() {
        if seen[v] != 1 {
            out.push(AcdViolation::NotAPartition(v as NodeId));
        }
    }
    out
}

/// Prove that `v` has no legal home in any decomposition of this instance:
/// it fails both thresholds and no clique satisfying (iii)/(iv) can contain
/// it. Complete only for low degrees, where a counting argument confines any
/// valid clique through v to N[v]: condition (iv) forces all but
/// s - 1 - ceil(s / (1+eps_ac)) members into N(v), and for every admissible
/// size s <= (1+eps_ac) d(v) that slack must be zero for the proof to close.
/// Returns false (no certificate) whenever any of that fails.
pub fn certify_unplaceable(
    inst: &D1LCInstance,
    node_params: &[NodeParams],
    params: &AcdParams,
    v: NodeId,
) -> bool {
    let g = &inst.graph;
    let p = &node_params[v as usize];
    if meets_sparse(p, &params.eps_sp) || meets_uneven(p, &params.eps_sp) {
        return false;
    }
    let d = g.degree(v);
    if d > 5 {
        return false;
    }
    let one_plus = BigRational::one() + &params.eps_ac;
    let as_rat = |x: usize| BigRational::from_integer(BigInt::from(x as i64));
    let ceil_to_usize = |q: BigRational| -> usize {
        let fl = q.floor();
        let c = if q == fl { fl } else { fl + BigRational::one() };
        c.to_integer().to_usize().unwrap_or(usize::MAX)
    };
    // Admissible sizes for a clique through v: (iii) at v forces
    // s >= d/(1+eps_ac); (iv) at v with |N(v) cap C| <= d forces
    // s <= (1+eps_ac) * d.
    let s_min = ceil_to_usize(as_rat(d) / &one_plus).max(1);
    let mut s_max = 0usize;
    while as_rat(s_max + 1) <= &one_plus * as_rat(d) {
        s_max += 1;
    }
    // The N[v]-only enumeration is complete iff no admissible size leaves
    // room for an out-of-neighborhood member: (iv) at v grants C at least
    // ceil(s/(1+eps_ac)) members inside N(v), plus v itself.
    for s in s_min..=s_max {
        let inside = ceil_to_usize(as_rat(s) / &one_plus);
        if s > inside + 1 {
            // An out-of-N[v] member could exist; certificate out of scope.
            return false;
        }
    }
    // Enumerate all subsets of N(v) as candidate cliques through v.
    let nbrs = g.neighbors(v);
    if nbrs.len() >= 16 {
        return false;
    }
    for mask in 0u32..(1 << nbrs.len()) {
        let mut c: Vec<NodeId> = (0..nbrs.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| nbrs[i])
            .collect();
        c.push(v);
        c.sort_unstable();
        if clique_offender(g, &c, &params.eps_ac).is_none() {
            return false; // a valid clique exists
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Start-set classification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default)]
pub struct VStartClassification {
    pub v_balanced: Vec<NodeId>,
    pub v_disc: Vec<NodeId>,
    pub v_easy: Vec<NodeId>,
    pub v_heavy: Vec<NodeId>,
    pub v_start: Vec<NodeId>,
}

/// Expected number of neighbors of v that would pick color c in a uniform
/// palette draw: sum of 1/p(u) over neighbors whose palette holds c.
pub fn heavy_mass(inst: &D1LCInstance, v: NodeId, c: Color) -> BigRational {
    let mut acc = BigRational::zero();
    for &u in inst.graph.neighbors(v) {
        let pu = inst.palette(u);
        if pu.contains(c) {
            acc += BigRational::new(BigInt::one(), BigInt::from(pu.len() as i64));
        }
    }
    acc
}

/// Sum of heavy-color masses for v, where a color is heavy when its mass
/// reaches the configured threshold.
fn heavy_total(inst: &D1LCInstance, v: NodeId, heavy_threshold: &BigRational) -> BigRational {
    let mut mass: BTreeMap<Color, BigRational> = BTreeMap::new();
    for &u in inst.graph.neighbors(v) {
        let share = BigRational::new(BigInt::one(), BigInt::from(inst.palette(u).len() as i64));
        for &c in inst.palette(u).colors() {
            *mass.entry(c).or_insert_with(BigRational::zero) += share.clone();
        }
    }
    let mut total = BigRational::zero();
    for (_, m) in mass {
        if &m >= heavy_threshold {
            total += m;
        }
    }
    total
}

/// The start set and its feeder sets. All five sets are empty when the
/// decomposition has no sparse nodes.
pub fn classify_vstart(
    inst: &D1LCInstance,
    node_params: &[NodeParams],
    acd: &AlmostCliqueDecomposition,
    params: &AcdParams,
) -> VStartClassification {
    let g = &inst.graph;
    let n = g.n();
    let [eps1, eps2, eps3, eps4, eps5] = &params.eps_start;
    let mut cls = VStartClassification::default();
    let mut easy = vec![false; n];

    let sparse: Vec<NodeId> = acd.v_sparse.clone();
    let is_sparse: Vec<bool> = {
        let mut b = vec![false; n];
        for &v in &sparse {
            b[v as usize] = true;
        }
        b
    };

    for &v in &sparse {
        let d = g.degree(v);
        let two_thirds = rat(2, 3) * BigRational::from_integer(BigInt::from(d as i64));
        let big = g
            .neighbors(v)
            .iter()
            .filter(|&&u| {
                BigRational::from_integer(BigInt::from(g.degree(u) as i64)) > two_thirds
            })
            .count();
        if BigRational::from_integer(BigInt::from(big as i64)) >= threshold(eps1, d) {
            cls.v_balanced.push(v);
            easy[v as usize] = true;
        }
        if node_params[v as usize].discrepancy >= threshold(eps2, d) {
            cls.v_disc.push(v);
            easy[v as usize] = true;
        }
        let dense_nbrs = g.neighbors(v).iter().filter(|&&u| acd.is_dense(u)).count();
        if BigRational::from_integer(BigInt::from(dense_nbrs as i64)) >= threshold(eps3, d) {
            easy[v as usize] = true;
        }
    }
    for &v in &acd.v_uneven {
        easy[v as usize] = true;
    }
    cls.v_easy = (0..n as NodeId).filter(|&v| easy[v as usize]).collect();

    let mut heavy = vec![false; n];
    for &v in &sparse {
        if easy[v as usize] {
            continue;
        }
        let d = g.degree(v);
        if heavy_total(inst, v, &params.heavy_threshold) >= threshold(eps4, d) {
            heavy[v as usize] = true;
            cls.v_heavy.push(v);
        }
    }

    for &v in &sparse {
        if easy[v as usize] || heavy[v as usize] {
            continue;
        }
        let d = g.degree(v);
        let easy_nbrs = g.neighbors(v).iter().filter(|&&u| easy[u as usize]).count();
        if BigRational::from_integer(BigInt::from(easy_nbrs as i64)) >= threshold(eps5, d) {
            cls.v_start.push(v);
        }
    }
    let _ = is_sparse;
    cls
}

// ---------------------------------------------------------------------------
// Clique roles
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CliqueRoles {
    pub clique: Vec<NodeId>,
    pub leader: NodeId,
    /// Sorted; includes the leader (a node is never its own neighbor).
    pub outliers: Vec<NodeId>,
    /// Sorted; every inlier is adjacent to the leader.
    pub inliers: Vec<NodeId>,
    pub low_slack: bool,
}

/// Leader: minimum slackability, ties to the smallest id.
pub fn select_leader(node_params: &[NodeParams], clique: &[NodeId]) -> NodeId {
    let mut best = clique[0];
    for &v in &clique[1..] {
        if node_params[v as usize].slackability < node_params[best as usize].slackability {
            best = v;
        }
    }
    best
}

fn ceil_div(a: usize, b: usize) -> usize {
    a.div_ceil(b)
}

/// Outliers: the ceil(max(d(x), |C|)/3) members with fewest common neighbors
/// with the leader x, the ceil(|C|/6) members of largest degree, and every
/// member not adjacent to x (x itself included). Ties break to smaller ids.
pub fn compute_outliers(g: &Graph, clique: &[NodeId], leader: NodeId) -> Vec<NodeId> {
    let mut mark = vec![false; g.n()];
    let mut out = vec![false; clique.len()];

    let k_common = ceil_div(g.degree(leader).max(clique.len()), 3);
    let mut by_common: Vec<(usize, NodeId, usize)> = clique
        .iter()
        .enumerate()
        .filter(|&(_, &v)| v != leader)
        .map(|(i, &v)| (common_neighbors(g, leader, v, &mut mark), v, i))
        .collect();
    by_common.sort_by_key(|&(c, v, _)| (c, v));
    for &(_, _, i) in by_common.iter().take(k_common) {
        out[i] = true;
    }

    let k_deg = ceil_div(clique.len(), 6);
    let mut by_degree: Vec<(usize, NodeId, usize)> = clique
        .iter()
        .enumerate()
        .map(|(i, &v)| (g.degree(v), v, i))
        .collect();
    by_degree.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, _, i) in by_degree.iter().take(k_deg) {
        out[i] = true;
    }

    for (i, &v) in clique.iter().enumerate() {
        if !g.has_edge(leader, v) {
            out[i] = true; // covers v == leader
        }
    }

    clique
        .iter()
        .enumerate()
        .filter(|&(i, _)| out[i])
        .map(|(_, &v)| v)
        .collect()
}

/// slackability(leader) <= ell
pub fn is_low_slack_clique(node_params: &[NodeParams], leader: NodeId, ell: u64) -> bool {
    node_params[leader as usize].slackability
        <= BigRational::from_integer(BigInt::from(ell as i64))
}

pub fn compute_clique_roles(
    g: &Graph,
    node_params: &[NodeParams],
    clique: &[NodeId],
    ell: u64,
) -> CliqueRoles {
    let leader = select_leader(node_params, clique);
    let outliers = compute_outliers(g, clique, leader);
    let inliers: Vec<NodeId> = clique
        .iter()
        .copied()
        .filter(|v| outliers.binary_search(v).is_err())
        .collect();
    let low_slack = is_low_slack_clique(node_params, leader, ell);
    CliqueRoles {
        clique: clique.to_vec(),
        leader,
        outliers,
        inliers,
        low_slack,
    }
}
