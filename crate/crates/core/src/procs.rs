/*!
The randomized local subroutines, each expressed as one phase step.

A phase is: participants read their tape chunks, exchange one (or, for the
synchronized clique trial, two) rounds of messages, and commit colors. Every
phase carries a per-node or per-clique success predicate; the count of
failed predicates is the quantity the seed search minimizes, and the
failures are exactly what gets deferred.

Execution is two passes over the same tape. Pass A simulates full
participation and evaluates predicates; the failures are deferred; pass B
re-simulates with the survivors and commits. Predicates are monotone under
deferral — removing a participant can only remove conflicts, raise slack,
and lower residual degree — so pass B never creates a new failure
(`debug_assert`ed in the driver).

Every predicate carries the low-degree escape: a node (or clique) whose
residual degree sits below `low_degree_threshold` passes unconditionally.
Such nodes are never deferred; whatever remains uncolored among them at the
end of the pipeline goes to the low-degree fallback instead of the
recursion.
*/

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::coloring::{residual_degree, residual_palette, ColoringState, NodeStatus};
use crate::graph::NodeId;
use crate::instance::{Color, D1LCInstance};
use crate::params::rat;
use crate::tape::{draw_budget_bits, sample_budget_bits, RandomTape, TapeError};

/// Tunables shared by every phase predicate.
#[derive(Debug, Clone)]
pub struct ProcParams {
    /// Escape: residual degree below this passes every predicate.
    pub low_degree_threshold: u64,
    /// Slack target for a slack-generation phase: slack >= gamma * d_res.
    pub gs_gamma: BigRational,
    /// Put-aside target: |P_C| >= pa_cp * ell^2.
    pub pa_cp: BigRational,
    /// Synchronized-trial budget: at most synch_ct * ell failures per clique.
    pub synch_ct: u64,
}

impl Default for ProcParams {
    fn default() -> Self {
        ProcParams {
            low_degree_threshold: 0,
            gs_gamma: rat(1, 128),
            pa_cp: rat(1, 4),
            synch_ct: 4,
        }
    }
}

/// Per-clique context for the dense-stage phases, frozen when the phase is
/// built so both passes and all candidate seeds see the same constants.
#[derive(Debug, Clone)]
pub struct CliqueCtx {
    /// Sorted member list.
    pub members: Vec<NodeId>,
    pub leader: NodeId,
    /// Sorted inliers (always adjacent to the leader).
    pub inliers: Vec<NodeId>,
    /// Clique-size scale ell at this level.
    pub ell: u64,
    /// Max residual degree over members when the phase was built.
    pub delta_res: u64,
    /// Sampling threshold for put-aside: participate iff 16 tape bits read
    /// below this. min(floor(ell^2 * 2^16 / (48 * delta_res)), 2^16).
    pub pa_threshold: u32,
    /// True when ell^2 / (48 * delta_res) exceeded 1 and was clamped.
    pub pa_clamped: bool,
}

impl CliqueCtx {
    pub fn build(
        inst: &D1LCInstance,
        state: &ColoringState,
        members: Vec<NodeId>,
        leader: NodeId,
        inliers: Vec<NodeId>,
        ell: u64,
    ) -> Self {
        let delta_res = members
            .iter()
            .map(|&v| residual_degree(inst, state, v) as u64)
            .max()
            .unwrap_or(0);
        let denom = 48 * delta_res.max(1);
        let raw = (ell * ell).saturating_mul(1 << 16) / denom;
        let pa_clamped = raw >= 1 << 16;
        let pa_threshold = raw.min(1 << 16) as u32;
        CliqueCtx {
            members,
            leader,
            inliers,
            ell,
            delta_res,
            pa_threshold,
            pa_clamped,
        }
    }
}

/// One phase, fully specified. Target lists are sorted.
#[derive(Debug, Clone)]
pub enum PhaseSpec {
    /// Uniform residual-palette draw; keep iff no participating neighbor
    /// drew the same. Success: colored, or slack >= 2 * d_res.
    TryRandomColor { targets: Vec<NodeId> },
    /// 4 tape bits gate participation at rate 1/16; participants run a
    /// color trial among themselves. Success: slack >= gamma * d_res.
    GenerateSlack { targets: Vec<NodeId> },
    /// Sample x distinct residual colors; keep the smallest not blocked by
    /// any participating neighbor's sample set. Success: colored, or
    /// d_res * pass_bound <= slack; pass_bound None means colored only.
    MultiTrial {
        targets: Vec<NodeId>,
        x: u64,
        pass_bound: Option<u64>,
    },
    /// 16 tape bits gate sampling per uncolored inlier; sampled nodes with
    /// no sampled neighbor anywhere are put aside. Per-clique success:
    /// |P_C| + (deferred members) >= pa_cp * ell^2.
    PutAside { cliques: Vec<CliqueCtx> },
    /// Each leader deals distinct residual colors to its uncolored inliers
    /// in id order; a node fails when unserved, dealt an off-palette color,
    /// or in conflict with a neighbor's deal. Per-clique success: at most
    /// synch_ct * ell failures.
    SynchColorTrial { cliques: Vec<CliqueCtx> },
}

impl PhaseSpec {
    /// Nodes that hold tape chunks in this phase.
    pub fn tape_holders(&self) -> Vec<NodeId> {
        match self {
            PhaseSpec::TryRandomColor { targets } | PhaseSpec::GenerateSlack { targets } => {
                targets.clone()
            }
            PhaseSpec::MultiTrial { targets, .. } => targets.clone(),
            PhaseSpec::PutAside { cliques } => {
                let mut v: Vec<NodeId> = cliques.iter().flat_map(|c| c.inliers.clone()).collect();
                v.sort_unstable();
                v
            }
            PhaseSpec::SynchColorTrial { cliques } => {
                let mut v: Vec<NodeId> = cliques.iter().map(|c| c.leader).collect();
                v.sort_unstable();
                v
            }
        }
    }

    /// Message radius: how far the committed outcome of one node depends on
    /// other nodes' tape chunks. Chunk sharing must respect 2x this.
    pub fn radius(&self) -> u32 {
        match self {
            PhaseSpec::SynchColorTrial { .. } => 2,
            _ => 1,
        }
    }

    /// Chunk width for this phase, from the current residual palettes. The
    /// same width serves both passes; reads are adaptive and never exceed it.
    pub fn bits_per_node(&self, inst: &D1LCInstance, state: &ColoringState) -> u64 {
        let max_pal = |targets: &[NodeId]| {
            targets
                .iter()
                .filter(|&&v| state.is_uncolored(v))
                .map(|&v| residual_palette(inst, state, v).len() as u64)
                .max()
                .unwrap_or(1)
        };
        match self {
            PhaseSpec::TryRandomColor { targets } => draw_budget_bits(max_pal(targets)) + 8,
            PhaseSpec::GenerateSlack { targets } => 4 + draw_budget_bits(max_pal(targets)) + 8,
            PhaseSpec::MultiTrial { targets, x, .. } => {
                let p = max_pal(targets);
                sample_budget_bits(p, (*x).min(p))
            }
            PhaseSpec::PutAside { .. } => 16,
            PhaseSpec::SynchColorTrial { cliques } => cliques
                .iter()
                .map(|c| {
                    let pool = leader_pool(inst, state, c.leader).len() as u64;
                    let elig = c
                        .inliers
                        .iter()
                        .filter(|&&v| state.is_uncolored(v))
                        .count() as u64;
                    sample_budget_bits(pool, elig.min(pool))
                })
                .max()
                .unwrap_or(1)
                .max(1),
        }
    }
}

/// Colors a leader may deal: its residual palette, minus its own color when
/// it is already colored.
pub fn leader_pool(inst: &D1LCInstance, state: &ColoringState, leader: NodeId) -> Vec<Color> {
    let pal = residual_palette(inst, state, leader);
    match state.color_of(leader) {
        Some(own) => pal.colors().iter().copied().filter(|&c| c != own).collect(),
        None => pal.colors().to_vec(),
    }
}

/// Outcome of simulating one phase against one tape.
#[derive(Debug, Clone, Default)]
pub struct PhaseResult {
    /// Accepted colors, sorted by node.
    pub keep: Vec<(NodeId, Color)>,
    /// Nodes put aside (put-aside phase only), sorted.
    pub put_aside: Vec<NodeId>,
    /// Nodes to defer: failed node predicates, or all still-uncolored
    /// members of cliques that failed their predicate. Sorted.
    pub defer: Vec<NodeId>,
    /// Number of failed predicates — the quantity the seed search bounds.
    pub failed_predicates: u64,
    /// Clique phases: indices (into the spec's clique list) whose predicate
    /// failed. Node phases leave this empty; their failed set is `defer`.
    pub failed_cliques: Vec<usize>,
    /// Synchronized trial only: individual node failures (diagnostic).
    pub synch_fails: u64,
    /// Slack generation only: participants whose 4-bit indicator fired.
    pub gs_sampled: u64,
    /// Rejection-sampling fallbacks hit on the committed pass's tape.
    pub bias_events: u64,
}

fn escape(d_res: u64, params: &ProcParams) -> bool {
    d_res < params.low_degree_threshold
}

/// slack and residual degree of `v` in `state` with `keep` overlaid.
fn post_slack_dres(
    inst: &D1LCInstance,
    state: &ColoringState,
    keep_color: &[Option<Color>],
    v: NodeId,
) -> (i64, u64) {
    let mut used: Vec<Color> = Vec::new();
    let mut d_res = 0u64;
    for &u in inst.graph.neighbors(v) {
        match (state.get(u), keep_color[u as usize]) {
            (NodeStatus::Colored(c), _) => used.push(c),
            (NodeStatus::Uncolored, Some(c)) => used.push(c),
            (NodeStatus::Uncolored, None) => d_res += 1,
            _ => {}
        }
    }
    used.sort_unstable();
    used.dedup();
    let p_res = inst.palette(v).minus(&used).len() as i64;
    (p_res - d_res as i64, d_res)
}

fn is_colored_post(state: &ColoringState, keep_color: &[Option<Color>], v: NodeId) -> bool {
    state.color_of(v).is_some() || keep_color[v as usize].is_some()
}

/// Uncolored targets, in order.
fn participants(state: &ColoringState, targets: &[NodeId]) -> Vec<NodeId> {
    targets
        .iter()
        .copied()
        .filter(|&v| state.is_uncolored(v))
        .collect()
}

fn rational_ge(lhs_int: i64, rhs: &BigRational) -> bool {
    BigRational::from_integer(BigInt::from(lhs_int)) >= *rhs
}

/// Simulate one phase. Does not mutate `state`; the caller applies the
/// result. Reads `tape` destructively (clone it for a second pass).
pub fn simulate_phase(
    inst: &D1LCInstance,
    state: &ColoringState,
    spec: &PhaseSpec,
    params: &ProcParams,
    tape: &mut RandomTape,
) -> Result<PhaseResult, TapeError> {
    match spec {
        PhaseSpec::TryRandomColor { targets } => {
            let parts = participants(state, targets);
            let draws = draw_colors(inst, state, &parts, tape)?;
            let keep = resolve_draw_conflicts(inst, &parts, &draws);
            finish_node_phase(inst, state, targets, keep, params, |slack, d_res| {
                slack >= 2 * d_res as i64
            })
        }
        PhaseSpec::GenerateSlack { targets } => {
            let parts = participants(state, targets);
            let mut sampled = Vec::new();
            for &v in &parts {
                if tape.read_bits(v, 4)? == 0 {
                    sampled.push(v);
                }
            }
            let draws = draw_colors(inst, state, &sampled, tape)?;
            let keep = resolve_draw_conflicts(inst, &sampled, &draws);
            let gamma = params.gs_gamma.clone();
            let mut result =
                finish_node_phase(inst, state, targets, keep, params, move |slack, d_res| {
                    BigRational::from_integer(BigInt::from(slack))
                        >= &gamma * BigRational::from_integer(BigInt::from(d_res as i64))
                })?;
            result.gs_sampled = sampled.len() as u64;
            Ok(result)
        }
        PhaseSpec::MultiTrial {
            targets,
            x,
            pass_bound,
        } => {
            let parts = participants(state, targets);
            let mut sets: Vec<Vec<Color>> = vec![Vec::new(); inst.n()];
            for &v in &parts {
                let pal = residual_palette(inst, state, v);
                let take = (*x).min(pal.len() as u64);
                let picks = tape.sample_distinct(v, pal.len() as u64, take)?;
                let mut set: Vec<Color> = picks.iter().map(|&i| pal.colors()[i as usize]).collect();
                set.sort_unstable();
                sets[v as usize] = set;
            }
            let mut keep = Vec::new();
            for &v in &parts {
                let blocked = |c: Color| {
                    inst.graph
                        .neighbors(v)
                        .iter()
                        .any(|&u| sets[u as usize].binary_search(&c).is_ok())
                };
                if let Some(&c) = sets[v as usize].iter().find(|&&c| !blocked(c)) {
                    keep.push((v, c));
                }
            }
            let bound = *pass_bound;
            finish_node_phase(inst, state, targets, keep, params, move |slack, d_res| {
                match bound {
                    Some(b) => d_res.saturating_mul(b) <= slack.max(0) as u64,
                    None => false,
                }
            })
        }
        PhaseSpec::PutAside { cliques } => {
            // Only inliers sample; outliers keep their palettes for the
            // slack-color path and never join the put-aside pool.
            let mut sampled = vec![false; inst.n()];
            for c in cliques {
                for &v in &c.inliers {
                    if !state.is_uncolored(v) {
                        continue;
                    }
                    let r = tape.read_bits(v, 16)?;
                    if (r as u32) < c.pa_threshold {
                        sampled[v as usize] = true;
                    }
                }
            }
            let isolated = |v: NodeId| {
                !inst
                    .graph
                    .neighbors(v)
                    .iter()
                    .any(|&u| sampled[u as usize])
            };
            let mut result = PhaseResult::default();
            for (ci, c) in cliques.iter().enumerate() {
                let p_c: Vec<NodeId> = c
                    .inliers
                    .iter()
                    .copied()
                    .filter(|&v| sampled[v as usize] && isolated(v))
                    .collect();
                let live_max = c
                    .members
                    .iter()
                    .map(|&v| residual_degree(inst, state, v) as u64)
                    .max()
                    .unwrap_or(0);
                // Deferred members count toward the success side, never
                // against it.
                let deferred_in_c = c
                    .members
                    .iter()
                    .filter(|&&v| state.is_deferred(v))
                    .count();
                let target = &params.pa_cp
                    * BigRational::from_integer(BigInt::from((c.ell * c.ell) as i64));
                let ok = escape(live_max, params)
                    || rational_ge((p_c.len() + deferred_in_c) as i64, &target);
                if ok {
                    result.put_aside.extend(p_c);
                } else {
                    result.failed_predicates += 1;
                    result.failed_cliques.push(ci);
                    result
                        .defer
                        .extend(c.members.iter().copied().filter(|&v| state.is_uncolored(v)));
                }
            }
            result.put_aside.sort_unstable();
            result.defer.sort_unstable();
            Ok(result)
        }
        PhaseSpec::SynchColorTrial { cliques } => {
            // Deal proposals clique by clique.
            let mut proposal: Vec<Option<Color>> = vec![None; inst.n()];
            let mut unserved: Vec<Vec<NodeId>> = Vec::with_capacity(cliques.len());
            for c in cliques {
                let elig: Vec<NodeId> = c
                    .inliers
                    .iter()
                    .copied()
                    .filter(|&v| state.is_uncolored(v))
                    .collect();
                let pool = leader_pool(inst, state, c.leader);
                let count = (elig.len() as u64).min(pool.len() as u64);
                let deal = tape.sample_distinct(c.leader, pool.len() as u64, count)?;
                for (i, &pos) in deal.iter().enumerate() {
                    proposal[elig[i] as usize] = Some(pool[pos as usize]);
                }
                unserved.push(elig[count as usize..].to_vec());
            }
            // A node fails on an off-palette deal or on any equal proposal
            // in its neighborhood; same-clique deals are distinct already.
            let mut keep = Vec::new();
            let mut fails: Vec<Vec<NodeId>> = vec![Vec::new(); cliques.len()];
            for (ci, c) in cliques.iter().enumerate() {
                fails[ci] = unserved[ci].clone();
                for &v in &c.inliers {
                    let Some(p) = proposal[v as usize] else { continue };
                    let own_ok = residual_palette(inst, state, v).contains(p);
                    let clash = inst
                        .graph
                        .neighbors(v)
                        .iter()
                        .any(|&u| proposal[u as usize] == Some(p));
                    if own_ok && !clash {
                        keep.push((v, p));
                    } else {
                        fails[ci].push(v);
                    }
                }
            }
            let mut result = PhaseResult::default();
            for (ci, c) in cliques.iter().enumerate() {
                result.synch_fails += fails[ci].len() as u64;
                let live_max = c
                    .members
                    .iter()
                    .map(|&v| residual_degree(inst, state, v) as u64)
                    .max()
                    .unwrap_or(0);
                let ok = escape(live_max, params)
                    || fails[ci].len() as u64 <= params.synch_ct * c.ell;
                if !ok {
                    result.failed_predicates += 1;
                    result.failed_cliques.push(ci);
                    // A failed clique restarts whole: with all its live
                    // members deferred, the re-simulation deals nothing
                    // there, so the predicate passes vacuously (0 fails)
                    // and neighbors only lose conflicts.
                    result.defer.extend(
                        c.members.iter().copied().filter(|&v| state.is_uncolored(v)),
                    );
                }
            }
            keep.sort_unstable();
            result.keep = keep;
            result.defer.sort_unstable();
            result.defer.dedup();
            Ok(result)
        }
    }
}

/// Uniform draw from each participant's residual palette.
fn draw_colors(
    inst: &D1LCInstance,
    state: &ColoringState,
    parts: &[NodeId],
    tape: &mut RandomTape,
) -> Result<Vec<Option<Color>>, TapeError> {
    let mut draws: Vec<Option<Color>> = vec![None; inst.n()];
    for &v in parts {
        let pal = residual_palette(inst, state, v);
        debug_assert!(!pal.is_empty());
        let idx = tape.uniform_below(v, pal.len() as u64)?;
        draws[v as usize] = Some(pal.colors()[idx as usize]);
    }
    Ok(draws)
}

/// Keep a draw iff no participating neighbor drew the same color.
fn resolve_draw_conflicts(
    inst: &D1LCInstance,
    parts: &[NodeId],
    draws: &[Option<Color>],
) -> Vec<(NodeId, Color)> {
    let mut keep = Vec::new();
    for &v in parts {
        let Some(c) = draws[v as usize] else { continue };
        let clash = inst
            .graph
            .neighbors(v)
            .iter()
            .any(|&u| draws[u as usize] == Some(c));
        if !clash {
            keep.push((v, c));
        }
    }
    keep
}

/// Shared tail of the three node-predicate phases: overlay keeps, evaluate
/// the predicate per target (colored and escape short-circuit it).
fn finish_node_phase(
    inst: &D1LCInstance,
    state: &ColoringState,
    targets: &[NodeId],
    keep: Vec<(NodeId, Color)>,
    params: &ProcParams,
    pred: impl Fn(i64, u64) -> bool,
) -> Result<PhaseResult, TapeError> {
    let mut keep_color: Vec<Option<Color>> = vec![None; inst.n()];
    for &(v, c) in &keep {
        keep_color[v as usize] = Some(c);
    }
    let mut result = PhaseResult {
        keep,
        ..Default::default()
    };
    for &v in targets {
        if is_colored_post(state, &keep_color, v) {
            continue;
        }
        if !state.is_uncolored(v) {
            continue; // deferred or put aside elsewhere; not this phase's call
        }
        let (slack, d_res) = post_slack_dres(inst, state, &keep_color, v);
        if escape(d_res, params) || pred(slack, d_res) {
            continue;
        }
        result.failed_predicates += 1;
        result.defer.push(v);
    }
    Ok(result)
}

/// Run one phase to completion: simulate, defer the failures, re-simulate
/// with the survivors, commit colors and put-asides. Returns the pass-A
/// failure count (the F the seed was chosen against) and the final result.
pub fn execute_phase(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    spec: &PhaseSpec,
    params: &ProcParams,
    tape: &RandomTape,
) -> Result<(u64, PhaseResult), TapeError> {
    let mut pass_a_tape = tape.clone();
    let pass_a = simulate_phase(inst, state, spec, params, &mut pass_a_tape)?;
    for &v in &pass_a.defer {
        state.set(v, NodeStatus::Deferred);
    }
    let mut pass_b_tape = tape.clone();
    let mut pass_b = simulate_phase(inst, state, spec, params, &mut pass_b_tape)?;
    pass_b.bias_events = pass_b_tape.bias_events();
    debug_assert!(
        pass_b.defer.is_empty(),
        "predicates must be monotone under deferral; pass B re-failed {:?}",
        pass_b.defer
    );
    for &(v, c) in &pass_b.keep {
        debug_assert!(state.is_uncolored(v));
        state.set(v, NodeStatus::Colored(c));
    }
    for &v in &pass_b.put_aside {
        debug_assert!(state.is_uncolored(v));
        state.set(v, NodeStatus::PutAside);
    }
    Ok((pass_a.failed_predicates, pass_b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::tape::ChunkMap;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn k4() -> D1LCInstance {
        let g =
            Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        D1LCInstance::with_default_palettes(g).unwrap()
    }

    fn relaxed() -> ProcParams {
        ProcParams {
            low_degree_threshold: u64::MAX, // everything escapes
            ..ProcParams::default()
        }
    }

    fn identity_tape(
        inst: &D1LCInstance,
        spec: &PhaseSpec,
        state: &ColoringState,
        seed: u64,
    ) -> RandomTape {
        let holders = spec.tape_holders();
        let map = ChunkMap::identity(inst.n(), &holders);
        let bpn = spec.bits_per_node(inst, state);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        RandomTape::from_rng(&map, bpn, &mut rng)
    }

    #[test]
    fn trc_keeps_are_proper_and_on_palette() {
        let inst = k4();
        for seed in 0..40 {
            let mut state = ColoringState::new(4);
            let spec = PhaseSpec::TryRandomColor {
                targets: vec![0, 1, 2, 3],
            };
            let tape = identity_tape(&inst, &spec, &state, seed);
            let (_, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
            for &(v, c) in &res.keep {
                assert!(inst.palette(v).contains(c));
                for &u in inst.graph.neighbors(v) {
                    assert_ne!(state.color_of(u), Some(c), "seed {seed}: {u}-{v} clash");
                }
            }
        }
    }

    #[test]
    fn trc_all_distinct_draws_all_kept() {
        // Path 0-1: palettes {0,1} each. Force draws 0 and 1 via a tape of
        // zeros for node 0 (index 0 -> color 0) and ones for node 1.
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let spec = PhaseSpec::TryRandomColor { targets: vec![0, 1] };
        let state = ColoringState::new(2);
        let bpn = spec.bits_per_node(&inst, &state);
        let map = ChunkMap::identity(2, &[0, 1]);
        // chunk 0 all zeros, chunk 1 first bit 1 (draw index 1)
        let tape = RandomTape::materialize(&map, bpn, |i| i == bpn);
        let mut state = ColoringState::new(2);
        let (f, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
        assert_eq!(f, 0);
        assert_eq!(res.keep, vec![(0, 0), (1, 1)]);
        // identical draws: both blocked, nobody colored
        let tape = RandomTape::materialize(&map, bpn, |_| false);
        let mut state = ColoringState::new(2);
        let (_, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
        assert!(res.keep.is_empty());
    }

    #[test]
    fn trc_predicate_defers_tight_nodes() {
        // Strict params (no escape): on K4 with minimum palettes, an
        // uncolored node with an uncolored neighbor has slack 1 < 2 * d_res,
        // so it must be deferred.
        let inst = k4();
        let strict = ProcParams {
            low_degree_threshold: 0,
            ..ProcParams::default()
        };
        for seed in 0..20 {
            let mut state = ColoringState::new(4);
            let spec = PhaseSpec::TryRandomColor {
                targets: vec![0, 1, 2, 3],
            };
            let tape = identity_tape(&inst, &spec, &state, seed);
            let (f, _) = execute_phase(&inst, &mut state, &spec, &strict, &tape).unwrap();
            for v in 0..4u32 {
                match state.get(v) {
                    NodeStatus::Uncolored => {
                        // survived the predicate: slack >= 2 d_res
                        let s = crate::coloring::compute_slack(&inst, &state, v);
                        let d = residual_degree(&inst, &state, v) as i64;
                        assert!(s >= 2 * d, "seed {seed} node {v}");
                    }
                    NodeStatus::Colored(_) | NodeStatus::Deferred => {}
                    NodeStatus::PutAside => panic!("no put-aside in a color trial"),
                }
            }
            let (_, _, deferred, _) = state.counts();
            assert_eq!(f as usize, deferred, "seed {seed}");
        }
    }

    #[test]
    fn gs_sampling_rate_and_safety() {
        // Large independent target set: sampling is 4-bit == 0, so about
        // 1/16 participate; with no edges everyone who draws keeps.
        let g = Graph::empty(4096);
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let targets: Vec<NodeId> = (0..4096).collect();
        let spec = PhaseSpec::GenerateSlack { targets: targets.clone() };
        let mut state = ColoringState::new(4096);
        let tape = identity_tape(&inst, &spec, &state, 7);
        let (f, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
        assert_eq!(f, 0);
        let rate = res.keep.len() as f64 / 4096.0;
        assert!(
            (rate - 1.0 / 16.0).abs() < 0.02,
            "sampling rate {rate} far from 1/16"
        );
    }

    #[test]
    fn multi_trial_smallest_unblocked() {
        // Triangle with palettes {0,1,2}; x = 3 samples the whole palette,
        // deterministic outcome: every node's set is {0,1,2}, all blocked.
        let g = Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let spec = PhaseSpec::MultiTrial {
            targets: vec![0, 1, 2],
            x: 3,
            pass_bound: None,
        };
        let mut state = ColoringState::new(3);
        let tape = identity_tape(&inst, &spec, &state, 3);
        let (_, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
        assert!(res.keep.is_empty());

        // Star center with fat palette: leaves sample everything, center
        // keeps its smallest color not in any leaf set.
        let g = Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap();
        let inst = D1LCInstance::new(
            g,
            vec![
                crate::instance::Palette::new(vec![0, 1, 2, 3, 4]),
                crate::instance::Palette::new(vec![0, 1]),
                crate::instance::Palette::new(vec![1, 2]),
            ],
        )
        .unwrap();
        let spec = PhaseSpec::MultiTrial {
            targets: vec![0, 1, 2],
            x: 5,
            pass_bound: None,
        };
        for seed in 0..10 {
            let mut state = ColoringState::new(3);
            let tape = identity_tape(&inst, &spec, &state, seed);
            let (_, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
            let center = res.keep.iter().find(|&&(v, _)| v == 0);
            // leaves' sets are {0,1} and {1,2}; smallest free center color is 3
            assert_eq!(center, Some(&(0, 3)), "seed {seed}");
        }
    }

    #[test]
    fn put_aside_set_is_independent() {
        let inst = k4();
        let state = ColoringState::new(4);
        let ctx = CliqueCtx::build(&inst, &state, vec![0, 1, 2, 3], 0, vec![1, 2, 3], 40);
        // ell^2/(48*3) = 1600/144 > 1: clamped, everyone samples
        assert!(ctx.pa_clamped);
        assert_eq!(ctx.pa_threshold, 1 << 16);
        let spec = PhaseSpec::PutAside { cliques: vec![ctx] };
        let mut state = ColoringState::new(4);
        let tape = identity_tape(&inst, &spec, &state, 5);
        let (_, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
        // all sampled, all have sampled neighbors: nothing put aside
        assert!(res.put_aside.is_empty());

        // Two far-apart inliers both sample: both put aside.
        let g = Graph::from_edges(2, &[]).unwrap();
        let inst2 = D1LCInstance::with_default_palettes(g).unwrap();
        let st = ColoringState::new(2);
        let c0 = CliqueCtx::build(&inst2, &st, vec![0], 0, vec![0], 40);
        let c1 = CliqueCtx::build(&inst2, &st, vec![1], 1, vec![1], 40);
        let spec = PhaseSpec::PutAside { cliques: vec![c0, c1] };
        let mut st = ColoringState::new(2);
        let tape = identity_tape(&inst2, &spec, &st, 5);
        let (_, res) = execute_phase(&inst2, &mut st, &spec, &relaxed(), &tape).unwrap();
        assert_eq!(res.put_aside, vec![0, 1]);
        assert!(st.is_put_aside(0) && st.is_put_aside(1));
    }

    #[test]
    fn synch_deals_distinct_on_palette_colors() {
        // Clique 0..4 (K5 with default palettes), leader 0 colored first.
        let g = Graph::from_edges(
            5,
            &[
                (0, 1),
                (0, 2),
                (0, 3),
                (0, 4),
                (1, 2),
                (1, 3),
                (1, 4),
                (2, 3),
                (2, 4),
                (3, 4),
            ],
        )
        .unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let mut state = ColoringState::new(5);
        state.set(0, NodeStatus::Colored(4));
        let ctx = CliqueCtx::build(&inst, &state, vec![0, 1, 2, 3, 4], 0, vec![1, 2, 3, 4], 1);
        let spec = PhaseSpec::SynchColorTrial { cliques: vec![ctx] };
        for seed in 0..20 {
            let mut st = state.clone();
            let tape = identity_tape(&inst, &spec, &st, seed);
            let (_, res) = execute_phase(&inst, &mut st, &spec, &relaxed(), &tape).unwrap();
            // leader pool is {0,1,2,3}; all four inliers served distinct
            // colors, none clash with the leader's 4, all kept.
            assert_eq!(res.keep.len(), 4, "seed {seed}");
            assert_eq!(res.synch_fails, 0);
            let mut seen: Vec<Color> = res.keep.iter().map(|&(_, c)| c).collect();
            seen.sort_unstable();
            seen.dedup();
            assert_eq!(seen.len(), 4);
            assert!(crate::coloring::verify_coloring(&inst, &st).is_valid());
        }
    }

    #[test]
    fn synch_cross_clique_conflicts_fail_both() {
        // Two K2 cliques joined by one edge; leaders deal from identical
        // palettes. Inliers 1 and 3 are adjacent; when both are dealt the
        // same color, both must fail.
        let g = Graph::from_edges(4, &[(0, 1), (2, 3), (1, 3)]).unwrap();
        let inst = D1LCInstance::new(
            g,
            vec![
                crate::instance::Palette::new(vec![0, 1]),
                crate::instance::Palette::new(vec![0, 1, 5]),
                crate::instance::Palette::new(vec![0, 1]),
                crate::instance::Palette::new(vec![0, 1, 5]),
            ],
        )
        .unwrap();
        let st = ColoringState::new(4);
        let c0 = CliqueCtx::build(&inst, &st, vec![0, 1], 0, vec![1], 1);
        let c1 = CliqueCtx::build(&inst, &st, vec![2, 3], 2, vec![3], 1);
        let spec = PhaseSpec::SynchColorTrial { cliques: vec![c0, c1] };
        let mut saw_conflict = false;
        let mut saw_success = false;
        for seed in 0..40 {
            let mut state = ColoringState::new(4);
            let tape = identity_tape(&inst, &spec, &state, seed);
            let (_, res) = execute_phase(&inst, &mut state, &spec, &relaxed(), &tape).unwrap();
            match res.keep.len() {
                0 => {
                    saw_conflict = true;
                    assert_eq!(res.synch_fails, 2);
                }
                2 => {
                    saw_success = true;
                    let a = state.color_of(1).unwrap();
                    let b = state.color_of(3).unwrap();
                    assert_ne!(a, b);
                }
                k => panic!("seed {seed}: {k} keeps"),
            }
        }
        assert!(saw_conflict && saw_success);
    }

    #[test]
    fn deferral_is_monotone() {
        // Random graphs, strict threshold: execute_phase's internal pass-B
        // assert must hold, and survivors must satisfy their predicates.
        let mut rng = ChaCha20Rng::seed_from_u64(77);
        use rand::Rng;
        for trial in 0..30 {
            let n = 12;
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.3) {
                        edges.push((u as NodeId, v as NodeId));
                    }
                }
            }
            let g = Graph::from_edges(n, &edges).unwrap();
            let inst = D1LCInstance::with_default_palettes(g).unwrap();
            let strict = ProcParams::default();
            let spec = PhaseSpec::TryRandomColor {
                targets: (0..n as NodeId).collect(),
            };
            let mut state = ColoringState::new(n);
            let tape = identity_tape(&inst, &spec, &state, trial);
            execute_phase(&inst, &mut state, &spec, &strict, &tape).unwrap();
            assert!(crate::coloring::partial_coloring_proper(&inst, &state).is_none());
        }
    }
}
