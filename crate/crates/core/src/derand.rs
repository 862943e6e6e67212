/*!
Seed search and the derandomized phase driver.

One randomized phase consumes `n_chunks * bits_per_node` random bits. To
derandomize it, nodes are grouped into chunk classes by a greedy coloring of
the distance-2r conflict graph (nodes further apart than the phase's
interaction radius may share bits), the tape is drawn from a seeded
generator with a short seed, and the seed is fixed bit by bit via
conditional expectations over the failed-predicate count F:

    at each bit, take the branch with the smaller sum of F over the still-
    consistent seeds (ties to 0); the end seed satisfies F <= mean(F).

The sum comparison is exact — both branches always hold equally many seeds
— and the final F(chosen) * 2^d <= sum(F) invariant is asserted, not
assumed.

The expensive part, evaluating F for every seed, is skipped entirely when
no predicate can bind: if every target (or clique) already sits below the
low-degree escape threshold, F is identically zero and seed 0 serves. Under
production thresholds this is the common case; the full search runs where
predicates bite.
*/

use rayon::prelude::*;
use thiserror::Error;

use crate::coloring::ColoringState;
use crate::graph::{Graph, NodeId};
use crate::instance::D1LCInstance;
use crate::mpc::{MpcError, MpcSim};
use crate::procs::{execute_phase, simulate_phase, CliqueCtx, PhaseSpec, ProcParams};
use crate::source::{build_source, BitSource, SourceKind};
use crate::tape::{ChunkMap, RandomTape, TapeError};

#[derive(Debug, Error)]
pub enum DerandError {
    #[error("{0}")]
    Tape(#[from] TapeError),
    #[error("{0}")]
    Space(#[from] MpcError),
}

/// Greedy classes over `holders`: two holders within graph distance
/// `radius` of each other never share a class. Returns (assignment sorted by
/// holder id, class count).
pub fn power_classes(g: &Graph, holders: &[NodeId], radius: u32) -> (Vec<(NodeId, u32)>, u32) {
    let mut class_of = vec![u32::MAX; g.n()];
    let mut n_classes = 0u32;
    let mut sorted: Vec<NodeId> = holders.to_vec();
    sorted.sort_unstable();
    let mut used: Vec<u32> = Vec::new();
    for &v in &sorted {
        used.clear();
        for u in g.ball(v, radius) {
            if u != v && class_of[u as usize] != u32::MAX {
                used.push(class_of[u as usize]);
            }
        }
        used.sort_unstable();
        used.dedup();
        let mut pick = 0u32;
        for &c in &used {
            if c == pick {
                pick += 1;
            } else if c > pick {
                break;
            }
        }
        class_of[v as usize] = pick;
        n_classes = n_classes.max(pick + 1);
    }
    let assignment = sorted
        .into_iter()
        .map(|v| (v, class_of[v as usize]))
        .collect();
    (assignment, n_classes.max(1))
}

/// Greedy power-graph coloring of every node; classes returned per node.
pub fn color_power_graph(g: &Graph, radius: u32) -> (Vec<u32>, u32) {
    let all: Vec<NodeId> = (0..g.n() as NodeId).collect();
    let (assignment, n_classes) = power_classes(g, &all, radius);
    let mut out = vec![0u32; g.n()];
    for (v, c) in assignment {
        out[v as usize] = c;
    }
    (out, n_classes)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchOutcome {
    pub seed: u64,
    pub seed_bits: u32,
    pub f_chosen: u64,
    /// Sum of F over the whole seed space; mean = f_total / 2^seed_bits.
    pub f_total: u64,
}

/// Fix a seed bit by bit against the full F table.
pub fn choose_seed(seed_bits: u32, eval_f: impl Fn(u64) -> u64 + Sync) -> SearchOutcome {
    assert!(seed_bits <= 24, "seed table of 2^{seed_bits} entries");
    let n_seeds = 1u64 << seed_bits;
    let table: Vec<u64> = (0..n_seeds).into_par_iter().map(&eval_f).collect();
    let f_total: u64 = table.iter().sum();
    let mut prefix = 0u64;
    for j in 0..seed_bits {
        let top = n_seeds >> (j + 1);
        let mut sum0 = 0u64;
        let mut sum1 = 0u64;
        for t in 0..top {
            let s0 = prefix | (t << (j + 1));
            sum0 += table[s0 as usize];
            sum1 += table[(s0 | (1 << j)) as usize];
        }
        if sum1 < sum0 {
            prefix |= 1 << j;
        }
    }
    let f_chosen = table[prefix as usize];
    // The defining invariant of the method: never worse than the mean.
    assert!(
        (f_chosen as u128) * (n_seeds as u128) <= f_total as u128,
        "conditional expectations broke: F({prefix}) = {f_chosen}, total {f_total}"
    );
    SearchOutcome {
        seed: prefix,
        seed_bits,
        f_chosen,
        f_total,
    }
}

#[derive(Debug, Clone)]
pub struct DerandConfig {
    /// Independence parameter of the generator (polynomial degree + 1).
    pub k: u32,
    /// Cap on the seed width; the search costs 2^(this) evaluations.
    pub max_seed_bits: u32,
    pub source: SourceKind,
    /// Entropy key for the oracle family (ignored by the seeded one).
    pub oracle_entropy: u64,
}

impl Default for DerandConfig {
    fn default() -> Self {
        DerandConfig {
            k: 8,
            // 2^12 candidate evaluations per binding phase: the exactness
            // scale the micro-instance suite enumerates in full.
            max_seed_bits: 12,
            source: SourceKind::Seeded,
            oracle_entropy: 0,
        }
    }
}

/// Everything a run report wants to say about one executed phase.
#[derive(Debug, Clone)]
pub struct PhaseReport {
    pub label: String,
    /// False when the escape threshold made F trivially zero (seed 0 used)
    /// or the phase had no holders.
    pub searched: bool,
    pub seed: u64,
    pub seed_bits: u32,
    pub f_chosen: u64,
    pub f_total: u64,
    pub chunk_classes: u32,
    pub bits_per_node: u64,
    pub colored: usize,
    pub deferred: usize,
    pub put_aside: usize,
    pub synch_fails: u64,
    pub bias_events: u64,
}

fn clique_live_max(inst: &D1LCInstance, state: &ColoringState, c: &CliqueCtx) -> u64 {
    c.members
        .iter()
        .map(|&v| crate::coloring::residual_degree(inst, state, v) as u64)
        .max()
        .unwrap_or(0)
}

/// Can any predicate bind under this state? Mirrors the escape rule: a
/// node (clique) whose residual degree is already below the threshold can
/// only see it fall further during the phase, so it escapes for certain.
pub fn phase_can_bind(
    inst: &D1LCInstance,
    state: &ColoringState,
    spec: &PhaseSpec,
    params: &ProcParams,
) -> bool {
    let node_binds = |targets: &[NodeId]| {
        targets.iter().any(|&v| {
            state.is_uncolored(v)
                && crate::coloring::residual_degree(inst, state, v) as u64
                    >= params.low_degree_threshold
        })
    };
    match spec {
        PhaseSpec::TryRandomColor { targets } | PhaseSpec::GenerateSlack { targets } => {
            node_binds(targets)
        }
        PhaseSpec::MultiTrial { targets, .. } => node_binds(targets),
        PhaseSpec::PutAside { cliques } | PhaseSpec::SynchColorTrial { cliques } => cliques
            .iter()
            .any(|c| clique_live_max(inst, state, c) >= params.low_degree_threshold),
    }
}

/// Per-participant message words for the accounting ledger.
fn message_words(spec: &PhaseSpec) -> u64 {
    match spec {
        PhaseSpec::TryRandomColor { .. } | PhaseSpec::GenerateSlack { .. } => 1,
        PhaseSpec::MultiTrial { x, .. } => *x,
        PhaseSpec::PutAside { .. } => 1,
        PhaseSpec::SynchColorTrial { .. } => 1,
    }
}

pub fn log_star(x: u64) -> u64 {
    let mut x = x;
    let mut c = 0;
    while x > 1 {
        x = crate::tape::ceil_log2(x) as u64;
        c += 1;
    }
    c
}

/// Charge one phase: radius-r neighborhood exchanges with participant-based
/// loads; clique phases add a sort pass (leader aggregation — a dense
/// clique's ball never fits one machine, so it is never collected); a
/// searched phase adds the seed broadcast and the power-class greedy,
/// charged at the log* budget.
fn charge_phase(
    sim: &mut MpcSim,
    label: &str,
    inst: &D1LCInstance,
    state: &ColoringState,
    spec: &PhaseSpec,
    searched: bool,
) -> Result<(), MpcError> {
    let g = &inst.graph;
    let n = g.n();
    let w = message_words(spec);
    let mut part = vec![false; n];
    let mut sort_words = 0u64;
    match spec {
        PhaseSpec::TryRandomColor { targets }
        | PhaseSpec::GenerateSlack { targets }
        | PhaseSpec::MultiTrial { targets, .. } => {
            for &v in targets {
                if state.is_uncolored(v) {
                    part[v as usize] = true;
                }
            }
        }
        PhaseSpec::PutAside { cliques } | PhaseSpec::SynchColorTrial { cliques } => {
            for c in cliques {
                for &v in &c.members {
                    if state.is_uncolored(v) {
                        part[v as usize] = true;
                    }
                    sort_words += 1 + g.degree(v) as u64 + inst.palette(v).len() as u64;
                }
            }
        }
    }
    let mut out = vec![0u64; n];
    let mut inb = vec![0u64; n];
    for v in 0..n {
        if part[v] {
            out[v] = g.degree(v as NodeId) as u64 * w;
            for &u in g.neighbors(v as NodeId) {
                inb[u as usize] += w;
            }
        }
    }
    for _ in 0..spec.radius() {
        sim.exchange(&format!("{label}/exchange"), &inb, &out)?;
    }
    if sort_words > 0 {
        sim.global_sort(&format!("{label}/aggregate"), sort_words)?;
    }
    if searched {
        sim.charge_fixed(&format!("{label}/seed"), 1);
        sim.charge_fixed(
            &format!("{label}/chunk-classes"),
            log_star(inst.n() as u64) + 1,
        );
    }
    Ok(())
}

/// Per-seed string expansion for the search loop. An affine source costs
/// seed_bits + 1 full expansions up front; after that every candidate is an
/// XOR of cached delta strings. Other sources expand each seed directly.
fn expander<'a>(
    map: &ChunkMap,
    bpn: u64,
    source: &'a dyn BitSource,
) -> Box<dyn Fn(u64) -> Vec<u64> + Sync + 'a> {
    let total = RandomTape::total_bits(map, bpn);
    let n_words = total.div_ceil(64) as usize;
    if !source.is_affine() {
        return Box::new(move |s| {
            let mut w = vec![0u64; n_words];
            source.fill_words(s, &mut w);
            w
        });
    }
    let mut base = vec![0u64; n_words];
    source.fill_words(0, &mut base);
    let deltas: Vec<Vec<u64>> = (0..source.seed_bits())
        .map(|j| {
            let mut d = vec![0u64; n_words];
            source.fill_words(1 << j, &mut d);
            for (x, b) in d.iter_mut().zip(&base) {
                *x ^= b;
            }
            d
        })
        .collect();
    let compose = move |s: u64, base: &[u64], deltas: &[Vec<u64>]| {
        let mut w = base.to_vec();
        for (j, d) in deltas.iter().enumerate() {
            if s >> j & 1 == 1 {
                for (x, y) in w.iter_mut().zip(d) {
                    *x ^= y;
                }
            }
        }
        w
    };
    // Spot-check the contract on the all-ones seed before trusting it for
    // the whole family.
    if cfg!(debug_assertions) && source.seed_bits() > 0 {
        let probe = (1u64 << source.seed_bits()) - 1;
        let mut direct = vec![0u64; n_words];
        source.fill_words(probe, &mut direct);
        assert_eq!(
            compose(probe, &base, &deltas),
            direct,
            "source broke its affine contract at seed {probe}"
        );
    }
    Box::new(move |s| compose(s, &base, &deltas))
}

fn blank_report(label: &str) -> PhaseReport {
    PhaseReport {
        label: label.to_string(),
        searched: false,
        seed: 0,
        seed_bits: 0,
        f_chosen: 0,
        f_total: 0,
        chunk_classes: 0,
        bits_per_node: 0,
        colored: 0,
        deferred: 0,
        put_aside: 0,
        synch_fails: 0,
        bias_events: 0,
    }
}

fn fill_from_result(
    report: &mut PhaseReport,
    state: &ColoringState,
    deferred_before: usize,
    result: &crate::procs::PhaseResult,
) {
    report.colored = result.keep.len();
    report.put_aside = result.put_aside.len();
    report.synch_fails = result.synch_fails;
    report.bias_events = result.bias_events;
    report.deferred = state.counts().2 - deferred_before;
}

/// Derandomize and execute one phase in place. When no predicate can bind
/// (every target already sits under the escape threshold) the chunk classes
/// buy nothing, so the tape uses identity chunking and seed 0 without a
/// search; the branch is a deterministic function of the inputs.
pub fn derandomize_phase(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    spec: &PhaseSpec,
    params: &ProcParams,
    cfg: &DerandConfig,
    sim: &mut MpcSim,
    label: &str,
) -> Result<PhaseReport, DerandError> {
    let holders = spec.tape_holders();
    let mut report = blank_report(label);
    if holders.is_empty() {
        return Ok(report);
    }
    let bpn = spec.bits_per_node(inst, state);
    report.bits_per_node = bpn;
    let binding = phase_can_bind(inst, state, spec, params);

    let map = if binding {
        // Holders within 4r of each other must draw from disjoint tape
        // chunks: r hops of influence on each side of an output, times two
        // interacting outputs feeding one predicate.
        let (assignment, n_classes) = power_classes(&inst.graph, &holders, 4 * spec.radius());
        ChunkMap::from_classes(inst.n(), &assignment, n_classes)
    } else {
        ChunkMap::identity(inst.n(), &holders)
    };
    report.chunk_classes = map.n_chunks();

    let total_bits = RandomTape::total_bits(&map, bpn);
    let source = build_source(
        cfg.source,
        total_bits,
        cfg.k,
        cfg.max_seed_bits,
        cfg.oracle_entropy,
    );

    let chosen = if binding {
        let expand = expander(&map, bpn, source.as_ref());
        let outcome = choose_seed(source.seed_bits(), |s| {
            let mut tape = RandomTape::from_words(&map, bpn, expand(s));
            simulate_phase(inst, state, spec, params, &mut tape)
                .expect("chunk width is a phase contract")
                .failed_predicates
        });
        report.searched = true;
        report.seed = outcome.seed;
        report.seed_bits = outcome.seed_bits;
        report.f_total = outcome.f_total;
        outcome
    } else {
        SearchOutcome {
            seed: 0,
            seed_bits: source.seed_bits(),
            f_chosen: 0,
            f_total: 0,
        }
    };

    charge_phase(sim, label, inst, state, spec, report.searched)?;
    let tape = RandomTape::from_source(&map, bpn, source.as_ref(), chosen.seed);
    let deferred_before = state.counts().2;
    let (f_a, result) = execute_phase(inst, state, spec, params, &tape)?;
    debug_assert_eq!(f_a, chosen.f_chosen, "search table and execution disagree");
    report.f_chosen = f_a;
    fill_from_result(&mut report, state, deferred_before, &result);
    Ok(report)
}

/// Randomized sibling: fresh bits from the run's entropy stream, identity
/// chunking, no search. Deferral semantics and accounting are identical, so
/// the two modes are directly comparable in reports.
pub fn randomized_phase(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    spec: &PhaseSpec,
    params: &ProcParams,
    rng: &mut impl rand::RngCore,
    sim: &mut MpcSim,
    label: &str,
) -> Result<PhaseReport, DerandError> {
    let holders = spec.tape_holders();
    let mut report = blank_report(label);
    if holders.is_empty() {
        return Ok(report);
    }
    let bpn = spec.bits_per_node(inst, state);
    report.bits_per_node = bpn;
    let map = ChunkMap::identity(inst.n(), &holders);
    report.chunk_classes = map.n_chunks();
    charge_phase(sim, label, inst, state, spec, false)?;
    let tape = RandomTape::from_rng(&map, bpn, rng);
    let deferred_before = state.counts().2;
    let (f_a, result) = execute_phase(inst, state, spec, params, &tape)?;
    report.f_chosen = f_a;
    fill_from_result(&mut report, state, deferred_before, &result);
    Ok(report)
}
