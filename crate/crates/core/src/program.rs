//! Coloring programs over the phase engine: the escalating slack-color
//! schedule, the sparse and dense stage drivers, the single-level program,
//! and the deferral recursion that ships a level's failures into a smaller
//! residual instance until a last remnant fits one machine.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::acd::{
    classify_vstart, compute_acd, compute_clique_roles, ell_from_max_degree, AcdParams,
    AlmostCliqueDecomposition, CliqueRoles, VStartClassification,
};
use crate::params::compute_all_params;
use crate::coloring::{
    compute_slack, reduce_instance_on, residual_degree, residual_palette, ColoringState,
    ImproperInput, NodeStatus,
};
use crate::derand::{
    derandomize_phase, log_star, randomized_phase, DerandConfig, DerandError, PhaseReport,
};
use crate::graph::NodeId;
use crate::instance::D1LCInstance;
use crate::mpc::{MpcError, MpcSim};
use crate::procs::{CliqueCtx, PhaseSpec, ProcParams};

/// Knobs for a full coloring program. `kappa` is the growth exponent of the
/// slack-color schedule, in (0, 1]; `trc_rounds` plain color trials open
/// every slack-color call; `max_levels` bounds the deferral recursion
/// before the residual is shipped to one machine.
#[derive(Debug, Clone)]
pub struct ProgramConfig {
    pub proc: ProcParams,
    pub acd: AcdParams,
    pub derand: DerandConfig,
    pub kappa: BigRational,
    pub trc_rounds: u32,
    pub max_levels: u32,
}

impl Default for ProgramConfig {
    fn default() -> Self {
        ProgramConfig {
            proc: ProcParams::default(),
            acd: AcdParams::default(),
            derand: DerandConfig::default(),
            kappa: BigRational::one(),
            trc_rounds: 2,
            max_levels: 8,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProgramError {
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error("{0}")]
    Derand(#[from] DerandError),
    #[error("{0}")]
    Space(#[from] MpcError),
    #[error("{0}")]
    Improper(#[from] ImproperInput),
    #[error("deferred residual needs {words} words; one machine holds {space}")]
    ResidualTooLarge { words: u64, space: u64 },
}

/// How phases draw their tapes: a searched seed, or fresh randomness from a
/// keyed stream (same accounting, no search).
pub enum DriveMode {
    Derandomized,
    Randomized(Box<ChaCha20Rng>),
}

pub struct PhaseDriver {
    mode: DriveMode,
}

impl PhaseDriver {
    pub fn derandomized() -> Self {
        PhaseDriver {
            mode: DriveMode::Derandomized,
        }
    }

    pub fn randomized(entropy: u64) -> Self {
        PhaseDriver {
            mode: DriveMode::Randomized(Box::new(ChaCha20Rng::seed_from_u64(entropy))),
        }
    }

    pub fn is_derandomized(&self) -> bool {
        matches!(self.mode, DriveMode::Derandomized)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn run(
        &mut self,
        inst: &D1LCInstance,
        state: &mut ColoringState,
        spec: &PhaseSpec,
        params: &ProcParams,
        cfg: &DerandConfig,
        sim: &mut MpcSim,
        label: &str,
    ) -> Result<PhaseReport, DerandError> {
        match &mut self.mode {
            DriveMode::Derandomized => derandomize_phase(inst, state, spec, params, cfg, sim, label),
            DriveMode::Randomized(rng) => {
                randomized_phase(inst, state, spec, params, rng.as_mut(), sim, label)
            }
        }
    }
}

/// floor(base^(num/den)) by exact integer arithmetic.
fn floor_pow_frac(base: u64, num: u32, den: u32) -> u64 {
    assert!(den > 0);
    if num == 0 {
        return 1;
    }
    if base <= 1 {
        return base;
    }
    num_traits::pow(BigInt::from(base), num as usize)
        .nth_root(den)
        .to_u64()
        .unwrap_or(u64::MAX)
}

/// min(2^^i, cap) — the height-i power tower of 2s, clamped.
fn tetration_clamped(i: u64, cap: u64) -> u64 {
    let mut t: u64 = 1;
    for _ in 0..i {
        if t >= 63 {
            return cap;
        }
        t = 1u64 << t;
        if t >= cap {
            return cap;
        }
    }
    t.min(cap)
}

/// min(2^x, cap).
fn pow2_clamped(x: u64, cap: u64) -> u64 {
    if x >= 63 {
        cap
    } else {
        (1u64 << x).min(cap)
    }
}

/// Validated numerator/denominator of kappa, which must lie in (0, 1] with
/// a denominator small enough for exact root extraction.
fn kappa_parts(kappa: &BigRational) -> Result<(u32, u32), ProgramError> {
    if *kappa <= BigRational::zero() || *kappa > BigRational::one() {
        return Err(ProgramError::BadParameters(format!(
            "kappa must lie in (0, 1], got {kappa}"
        )));
    }
    let p = kappa.numer().to_u32();
    let q = kappa.denom().to_u32();
    match (p, q) {
        (Some(p), Some(q)) if q <= 64 => Ok((p, q)),
        _ => Err(ProgramError::BadParameters(format!(
            "kappa denominator too large: {kappa}"
        ))),
    }
}

/// The multi-trial calls of one slack-color run, as (colors tried, pass
/// bound): a doubled tower-growth stage, a tripled polynomial-growth stage,
/// and one final unbounded trial, all against rho = floor(s_min^(1/(1+kappa))).
fn multi_trial_schedule(s_min: u64, p: u32, q: u32) -> Vec<(u64, Option<u64>)> {
    let rho = floor_pow_frac(s_min, q, p + q).max(1);
    let rho_kappa = floor_pow_frac(rho, p, q).max(1);
    let mut out = Vec::new();
    for i in 0..=log_star(rho) {
        let x = tetration_clamped(i, rho);
        let bound = pow2_clamped(x, rho_kappa);
        out.push((x, Some(bound)));
        out.push((x, Some(bound)));
    }
    let steps = (q as u64).div_ceil(p as u64);
    for i in 1..=steps {
        let x = floor_pow_frac(rho, i as u32 * p, q).max(1);
        let bound = floor_pow_frac(rho, (i as u32 + 1) * p, q).min(rho).max(1);
        for _ in 0..3 {
            out.push((x, Some(bound)));
        }
    }
    out.push((rho, None));
    out
}

/// Colors `targets` through the escalating schedule: `trc_rounds` plain
/// color trials, then multi-trials whose per-node color budgets grow from 1
/// to rho. The minimum slack s_min is taken over targets still uncolored at
/// full residual degree after the opening trials — each such survivor
/// carries slack at least twice its residual degree, so s_min >= 2 whenever
/// the opening ran. Nodes whose predicates fail along the way are already
/// deferred by the phase engine and simply drop out of later trials.
#[allow(clippy::too_many_arguments)]
pub fn slack_color(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    targets: &[NodeId],
    cfg: &ProgramConfig,
    driver: &mut PhaseDriver,
    sim: &mut MpcSim,
    label: &str,
) -> Result<Vec<PhaseReport>, ProgramError> {
    let mut reports = Vec::new();
    if targets.is_empty() {
        return Ok(reports);
    }
    let (p, q) = kappa_parts(&cfg.kappa)?;
    for r in 0..cfg.trc_rounds {
        let spec = PhaseSpec::TryRandomColor {
            targets: targets.to_vec(),
        };
        reports.push(driver.run(
            inst,
            state,
            &spec,
            &cfg.proc,
            &cfg.derand,
            sim,
            &format!("{label}/trc{r}"),
        )?);
    }
    let theta = cfg.proc.low_degree_threshold.max(1);
    let s_min_data: Option<u64> = targets
        .iter()
        .filter(|&&v| {
            state.is_uncolored(v) && residual_degree(inst, state, v) as u64 >= theta
        })
        .map(|&v| compute_slack(inst, state, v).max(0) as u64)
        .min();
    sim.charge_fixed(&format!("{label}/s-min"), 1);
    let s_min = match s_min_data {
        Some(s) => {
            // The schedule needs 1/s_min < kappa to terminate with the
            // advertised trial counts.
            if BigRational::new(BigInt::one(), BigInt::from(s.max(1))) >= cfg.kappa {
                return Err(ProgramError::BadParameters(format!(
                    "slack-color saw minimum slack {s}, too small for kappa {}",
                    cfg.kappa
                )));
            }
            s
        }
        // Nothing is live above the escape threshold; any value yields a
        // valid (vacuous) schedule.
        None => 2,
    };
    for (i, &(x, pass_bound)) in multi_trial_schedule(s_min, p, q).iter().enumerate() {
        let spec = PhaseSpec::MultiTrial {
            targets: targets.to_vec(),
            x,
            pass_bound,
        };
        let tag = if pass_bound.is_some() {
            format!("{label}/mt{i}")
        } else {
            format!("{label}/mt-final")
        };
        reports.push(driver.run(inst, state, &spec, &cfg.proc, &cfg.derand, sim, &tag)?);
    }
    Ok(reports)
}

/// Sparse stage: slack generation for every sparse or uneven node outside
/// the start set, the start set through the schedule (its slack is
/// structural), then the rest (its slack was just generated).
#[allow(clippy::too_many_arguments)]
pub fn color_sparse(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    acd: &AlmostCliqueDecomposition,
    start: &VStartClassification,
    cfg: &ProgramConfig,
    driver: &mut PhaseDriver,
    sim: &mut MpcSim,
    label: &str,
) -> Result<Vec<PhaseReport>, ProgramError> {
    let mut reports = Vec::new();
    let mut sparse_all: Vec<NodeId> = acd
        .v_sparse
        .iter()
        .chain(acd.v_uneven.iter())
        .copied()
        .collect();
    sparse_all.sort_unstable();
    if sparse_all.is_empty() {
        return Ok(reports);
    }
    let mut in_start = vec![false; inst.n()];
    for &v in &start.v_start {
        in_start[v as usize] = true;
    }
    let rest: Vec<NodeId> = sparse_all
        .iter()
        .copied()
        .filter(|&v| !in_start[v as usize])
        .collect();
    if !rest.is_empty() {
        let spec = PhaseSpec::GenerateSlack {
            targets: rest.clone(),
        };
        reports.push(driver.run(
            inst,
            state,
            &spec,
            &cfg.proc,
            &cfg.derand,
            sim,
            &format!("{label}/gs"),
        )?);
    }
    reports.extend(slack_color(
        inst,
        state,
        &start.v_start,
        cfg,
        driver,
        sim,
        &format!("{label}/start"),
    )?);
    reports.extend(slack_color(
        inst,
        state,
        &rest,
        cfg,
        driver,
        sim,
        &format!("{label}/rest"),
    )?);
    Ok(reports)
}

/// Dense stage: slack generation over every clique member; low-slack
/// cliques bank an independent put-aside set; outliers run the schedule;
/// every clique deals one synchronized trial; the remaining members run the
/// schedule; the banked nodes are finalized greedily at the very end.
#[allow(clippy::too_many_arguments)]
pub fn color_dense(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    roles: &[CliqueRoles],
    ell: u64,
    cfg: &ProgramConfig,
    driver: &mut PhaseDriver,
    sim: &mut MpcSim,
    label: &str,
) -> Result<(Vec<PhaseReport>, usize), ProgramError> {
    let mut reports = Vec::new();
    if roles.is_empty() {
        return Ok((reports, 0));
    }
    let mut dense_all: Vec<NodeId> = roles.iter().flat_map(|r| r.clique.clone()).collect();
    dense_all.sort_unstable();

    let spec = PhaseSpec::GenerateSlack {
        targets: dense_all.clone(),
    };
    reports.push(driver.run(
        inst,
        state,
        &spec,
        &cfg.proc,
        &cfg.derand,
        sim,
        &format!("{label}/gs"),
    )?);

    let low: Vec<&CliqueRoles> = roles.iter().filter(|r| r.low_slack).collect();
    if !low.is_empty() {
        let cliques: Vec<CliqueCtx> = low
            .iter()
            .map(|r| {
                CliqueCtx::build(
                    inst,
                    state,
                    r.clique.clone(),
                    r.leader,
                    r.inliers.clone(),
                    ell,
                )
            })
            .collect();
        let spec = PhaseSpec::PutAside { cliques };
        reports.push(driver.run(
            inst,
            state,
            &spec,
            &cfg.proc,
            &cfg.derand,
            sim,
            &format!("{label}/put-aside"),
        )?);
    }

    let mut outliers: Vec<NodeId> = roles.iter().flat_map(|r| r.outliers.clone()).collect();
    outliers.sort_unstable();
    reports.extend(slack_color(
        inst,
        state,
        &outliers,
        cfg,
        driver,
        sim,
        &format!("{label}/outliers"),
    )?);

    let cliques: Vec<CliqueCtx> = roles
        .iter()
        .map(|r| {
            CliqueCtx::build(
                inst,
                state,
                r.clique.clone(),
                r.leader,
                r.inliers.clone(),
                ell,
            )
        })
        .collect();
    let spec = PhaseSpec::SynchColorTrial { cliques };
    reports.push(driver.run(
        inst,
        state,
        &spec,
        &cfg.proc,
        &cfg.derand,
        sim,
        &format!("{label}/synch"),
    )?);

    // Banked nodes are excluded by status; everyone else gets the schedule.
    let rest: Vec<NodeId> = dense_all
        .iter()
        .copied()
        .filter(|&v| !state.is_put_aside(v))
        .collect();
    reports.extend(slack_color(
        inst,
        state,
        &rest,
        cfg,
        driver,
        sim,
        &format!("{label}/rest"),
    )?);

    let finalized = finalize_put_asides(inst, state, roles, sim, &format!("{label}/bank"))?;
    Ok((reports, finalized))
}

/// Greedy finalization of the banked put-aside nodes, clique by clique,
/// members in id order. The banked set is independent, so each node only
/// needs a palette color none of its colored neighbors hold — one always
/// exists under the degree+1 guarantee, deferred neighbors notwithstanding.
pub fn finalize_put_asides(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    roles: &[CliqueRoles],
    sim: &mut MpcSim,
    label: &str,
) -> Result<usize, ProgramError> {
    let banked: Vec<NodeId> = roles
        .iter()
        .flat_map(|r| r.clique.iter().copied())
        .filter(|&v| state.is_put_aside(v))
        .collect();
    if banked.is_empty() {
        return Ok(0);
    }
    let n = inst.n();
    let mut inb = vec![0u64; n];
    let mut out = vec![0u64; n];
    for &v in &banked {
        inb[v as usize] = inst.graph.degree(v) as u64;
        for &u in inst.graph.neighbors(v) {
            out[u as usize] += 1;
        }
    }
    sim.exchange(label, &inb, &out)?;
    sim.charge_fixed(&format!("{label}/assign"), 1);
    for &v in &banked {
        let pal = residual_palette(inst, state, v);
        assert!(
            !pal.is_empty(),
            "banked node {v} lost its whole palette; the degree+1 guarantee is broken"
        );
        state.set(v, NodeStatus::Colored(pal.colors()[0]));
    }
    Ok(banked.len())
}

/// One level's outcome: the decomposition profile, every phase report, and
/// where the nodes ended up.
#[derive(Debug, Clone)]
pub struct LevelReport {
    pub level: u32,
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub ell: u64,
    pub sparse: usize,
    pub uneven: usize,
    pub cliques: usize,
    pub forced: usize,
    pub start: usize,
    pub put_aside_finalized: usize,
    pub colored: usize,
    pub deferred: usize,
    /// Uncolored survivors — their residual degree sits under the escape
    /// threshold, and the caller's fallback owns them.
    pub open: usize,
    pub phases: Vec<PhaseReport>,
}

/// One full level: measure, decompose, color the sparse side, color the
/// dense side. The measurement and decomposition work is charged as a
/// constant number of aggregation rounds (one neighborhood exchange, one
/// sort, two selection rounds).
pub fn color_middle(
    inst: &D1LCInstance,
    cfg: &ProgramConfig,
    driver: &mut PhaseDriver,
    sim: &mut MpcSim,
    level: u32,
) -> Result<(ColoringState, LevelReport), ProgramError> {
    let n = inst.n();
    let pfx = format!("level{level}");
    let mut state = ColoringState::new(n);

    let deg: Vec<u64> = (0..n as NodeId).map(|v| inst.graph.degree(v) as u64).collect();
    sim.exchange(&format!("{pfx}/measure"), &deg, &deg)?;
    sim.global_sort(&format!("{pfx}/acd"), (n + 2 * inst.graph.m()) as u64)?;
    sim.charge_fixed(&format!("{pfx}/roles"), 2);

    let node_params = compute_all_params(inst);
    let acd = compute_acd(inst, &node_params, &cfg.acd);
    let start = classify_vstart(inst, &node_params, &acd, &cfg.acd);
    let ell = ell_from_max_degree(inst.graph.max_degree());
    let roles: Vec<CliqueRoles> = acd
        .cliques
        .iter()
        .map(|c| compute_clique_roles(&inst.graph, &node_params, c, ell))
        .collect();

    let mut phases = Vec::new();
    phases.extend(color_sparse(
        inst,
        &mut state,
        &acd,
        &start,
        cfg,
        driver,
        sim,
        &format!("{pfx}/sparse"),
    )?);
    let (dense_phases, finalized) = color_dense(
        inst,
        &mut state,
        &roles,
        ell,
        cfg,
        driver,
        sim,
        &format!("{pfx}/dense"),
    )?;
    phases.extend(dense_phases);

    let (open, colored, deferred, put_aside) = state.counts();
    debug_assert_eq!(put_aside, 0, "every banked node is finalized in its level");
    let report = LevelReport {
        level,
        nodes: n,
        edges: inst.graph.m(),
        max_degree: inst.graph.max_degree(),
        ell,
        sparse: acd.v_sparse.len(),
        uneven: acd.v_uneven.len(),
        cliques: acd.cliques.len(),
        forced: acd.forced.len(),
        start: start.v_start.len(),
        put_aside_finalized: finalized,
        colored,
        deferred,
        open,
        phases,
    };
    Ok((state, report))
}

#[derive(Debug, Clone)]
pub struct TailReport {
    pub level: u32,
    pub nodes: usize,
    pub words: u64,
}

/// Outcome of the whole deferral recursion.
#[derive(Debug, Clone, Default)]
pub struct CompletionReport {
    pub levels: Vec<LevelReport>,
    pub tails: Vec<TailReport>,
    /// Nodes left uncolored for the caller's low-degree fallback.
    pub open: usize,
}

/// Runs levels until nothing is deferred: each level's deferred set forms
/// the next, smaller instance, and after `max_levels` the last residual
/// must fit one machine, where it is colored greedily. Sub-level colors are
/// drawn from residual palettes, so they project back verbatim. Nodes a
/// level left uncolored bubble back up untouched; at the top they are the
/// caller's to finish.
pub fn color_to_completion(
    inst: &D1LCInstance,
    cfg: &ProgramConfig,
    driver: &mut PhaseDriver,
    sim: &mut MpcSim,
) -> Result<(ColoringState, CompletionReport), ProgramError> {
    let mut report = CompletionReport::default();
    let state = completion_level(inst, cfg, driver, sim, 0, &mut report)?;
    report.open = state.counts().0;
    Ok((state, report))
}

fn completion_level(
    inst: &D1LCInstance,
    cfg: &ProgramConfig,
    driver: &mut PhaseDriver,
    sim: &mut MpcSim,
    level: u32,
    report: &mut CompletionReport,
) -> Result<ColoringState, ProgramError> {
    let (mut state, lr) = color_middle(inst, cfg, driver, sim, level)?;
    report.levels.push(lr);
    let deferred: Vec<NodeId> = (0..inst.n() as NodeId)
        .filter(|&v| state.is_deferred(v))
        .collect();
    if deferred.is_empty() {
        return Ok(state);
    }
    if level + 1 < cfg.max_levels {
        let (sub, map) = reduce_instance_on(inst, &state, &deferred)?;
        let sub_state = completion_level(&sub, cfg, driver, sim, level + 1, report)?;
        for (sv, &pv) in map.iter().enumerate() {
            match sub_state.get(sv as NodeId) {
                NodeStatus::Colored(c) => state.set(pv, NodeStatus::Colored(c)),
                NodeStatus::Uncolored => state.set(pv, NodeStatus::Uncolored),
                NodeStatus::Deferred | NodeStatus::PutAside => {
                    unreachable!("levels resolve every deferral and bank")
                }
            }
        }
        Ok(state)
    } else {
        greedy_tail(inst, &mut state, &deferred, sim, level, report)?;
        Ok(state)
    }
}

/// Colors the last deferred residual on one machine: the records (node,
/// neighbors, residual palette) are shipped whole and colored greedily in
/// id order. The original palette bound leaves a free color at every step.
fn greedy_tail(
    inst: &D1LCInstance,
    state: &mut ColoringState,
    deferred: &[NodeId],
    sim: &mut MpcSim,
    level: u32,
    report: &mut CompletionReport,
) -> Result<(), ProgramError> {
    let words: u64 = deferred
        .iter()
        .map(|&v| {
            1 + inst.graph.degree(v) as u64 + residual_palette(inst, state, v).len() as u64
        })
        .sum();
    if words > sim.space_words() {
        return Err(ProgramError::ResidualTooLarge {
            words,
            space: sim.space_words(),
        });
    }
    sim.charge_fixed(&format!("level{level}/tail-collect"), 1);
    sim.charge_fixed(&format!("level{level}/tail-color"), 1);
    for &v in deferred {
        let pal = residual_palette(inst, state, v);
        assert!(
            !pal.is_empty(),
            "deferred node {v} lost its whole palette; the degree+1 guarantee is broken"
        );
        state.set(v, NodeStatus::Colored(pal.colors()[0]));
    }
    report.tails.push(TailReport {
        level,
        nodes: deferred.len(),
        words,
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::verify_coloring;
    use crate::graph::Graph;
    use crate::instance::{Color, Palette};
    use crate::mpc::MpcConfig;

    fn big_sim(inst: &D1LCInstance) -> MpcSim {
        let cfg = MpcConfig {
            local_space_words: Some(1 << 20),
            ..MpcConfig::default()
        };
        MpcSim::new(&cfg, inst.n() as u64, inst.graph.m() as u64)
    }

    #[test]
    fn floor_pow_frac_exact_values() {
        assert_eq!(floor_pow_frac(16, 1, 2), 4);
        assert_eq!(floor_pow_frac(4, 1, 1), 4);
        assert_eq!(floor_pow_frac(5, 1, 2), 2);
        assert_eq!(floor_pow_frac(8, 2, 3), 4);
        assert_eq!(floor_pow_frac(7, 0, 5), 1);
        assert_eq!(floor_pow_frac(1, 3, 4), 1);
        assert_eq!(floor_pow_frac(0, 2, 3), 0);
        assert_eq!(floor_pow_frac(1000, 2, 3), 100);
    }

    #[test]
    fn tetration_clamps_at_cap() {
        assert_eq!(tetration_clamped(0, 10), 1);
        assert_eq!(tetration_clamped(1, 10), 2);
        assert_eq!(tetration_clamped(2, 10), 4);
        assert_eq!(tetration_clamped(3, 10), 10);
        assert_eq!(tetration_clamped(4, 10), 10);
        assert_eq!(tetration_clamped(2, 3), 3);
        assert_eq!(tetration_clamped(60, u64::MAX), u64::MAX);
    }

    #[test]
    fn schedule_matches_worked_example() {
        // s_min = 16, kappa = 1: rho = 4, doubled tower 1, 2, 4, one tripled
        // polynomial step at rho, one final unbounded trial.
        let sched = multi_trial_schedule(16, 1, 1);
        assert_eq!(
            sched,
            vec![
                (1, Some(2)),
                (1, Some(2)),
                (2, Some(4)),
                (2, Some(4)),
                (4, Some(4)),
                (4, Some(4)),
                (4, Some(4)),
                (4, Some(4)),
                (4, Some(4)),
                (4, None),
            ]
        );
    }

    #[test]
    fn schedule_handles_tiny_slack() {
        // s_min = 2: rho = 1, everything degenerates to single trials.
        let sched = multi_trial_schedule(2, 1, 1);
        assert!(sched.iter().all(|&(x, _)| x == 1));
        assert_eq!(sched.last(), Some(&(1, None)));
    }

    #[test]
    fn kappa_outside_range_is_rejected() {
        let g = Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let mut sim = big_sim(&inst);
        let mut driver = PhaseDriver::derandomized();
        let mut state = ColoringState::new(3);
        let mut cfg = ProgramConfig::default();
        cfg.kappa = BigRational::new(BigInt::from(3), BigInt::from(2));
        let err = slack_color(&inst, &mut state, &[0, 1, 2], &cfg, &mut driver, &mut sim, "t")
            .unwrap_err();
        assert!(matches!(err, ProgramError::BadParameters(_)));
    }

    #[test]
    fn missing_opening_trials_surface_small_slack() {
        // Without the opening color trials a slack-1 node reaches the
        // schedule head, and kappa = 1 cannot cover 1/s_min = 1.
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let mut sim = big_sim(&inst);
        let mut driver = PhaseDriver::derandomized();
        let mut state = ColoringState::new(5);
        let mut cfg = ProgramConfig::default();
        cfg.trc_rounds = 0;
        let err = slack_color(
            &inst,
            &mut state,
            &[0, 1, 2, 3, 4],
            &cfg,
            &mut driver,
            &mut sim,
            "t",
        )
        .unwrap_err();
        assert!(matches!(err, ProgramError::BadParameters(_)));
    }

    #[test]
    fn slack_color_resolves_a_cycle() {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let inst = D1LCInstance::with_default_palettes(g).unwrap();
        let cfg = ProgramConfig::default();
        let run = || {
            let mut sim = big_sim(&inst);
            let mut driver = PhaseDriver::derandomized();
            let mut state = ColoringState::new(5);
            let reports = slack_color(
                &inst,
                &mut state,
                &[0, 1, 2, 3, 4],
                &cfg,
                &mut driver,
                &mut sim,
                "t",
            )
            .unwrap();
            (state, reports, sim.digest())
        };
        let (state, reports, digest) = run();
        // Every node ends colored or deferred — the final trial has no
        // middle ground — and at least the search's mean bound colored some.
        let (open, colored, _, _) = state.counts();
        assert_eq!(open, 0);
        assert!(colored > 0);
        for v in 0..5 {
            if let Some(c) = state.color_of(v) {
                for &u in inst.graph.neighbors(v) {
                    assert_ne!(state.color_of(u), Some(c));
                }
            }
        }
        assert_eq!(reports.len(), 2 + multi_trial_schedule(2, 1, 1).len());
        // Bit-identical on a rerun.
        let (state2, _, digest2) = run();
        assert_eq!(digest, digest2);
        for v in 0..5 {
            assert_eq!(state.get(v), state2.get(v));
        }
    }

    fn disjoint_k8s(copies: usize) -> D1LCInstance {
        let mut edges = Vec::new();
        for c in 0..copies {
            let base = (c * 8) as NodeId;
            for i in 0..8u32 {
                for j in (i + 1)..8u32 {
                    edges.push((base + i, base + j));
                }
            }
        }
        let g = Graph::from_edges(copies * 8, &edges).unwrap();
        let palettes = (0..copies * 8)
            .map(|_| Palette::new((0..8).collect()))
            .collect();
        D1LCInstance::new(g, palettes).unwrap()
    }

    #[test]
    fn completion_colors_disjoint_cliques() {
        // Identical 8-color palettes on disjoint 8-cliques: every palette is
        // exactly spent, so any leftover anywhere is a correctness bug.
        let inst = disjoint_k8s(4);
        let cfg = ProgramConfig::default();
        let mut sim = big_sim(&inst);
        let mut driver = PhaseDriver::derandomized();
        let (state, report) = color_to_completion(&inst, &cfg, &mut driver, &mut sim).unwrap();
        assert_eq!(report.open, 0);
        assert!(verify_coloring(&inst, &state).is_valid());
        assert!(sim.total_rounds() > 0);
        assert!(!report.levels.is_empty());
    }

    #[test]
    fn completion_is_deterministic_and_randomized_differs_by_seed_only() {
        let inst = disjoint_k8s(2);
        let cfg = ProgramConfig::default();
        let run_det = || {
            let mut sim = big_sim(&inst);
            let mut driver = PhaseDriver::derandomized();
            let (state, _) = color_to_completion(&inst, &cfg, &mut driver, &mut sim).unwrap();
            let colors: Vec<Option<Color>> =
                (0..inst.n() as NodeId).map(|v| state.color_of(v)).collect();
            (colors, sim.digest(), sim.total_rounds())
        };
        let a = run_det();
        let b = run_det();
        assert_eq!(a, b);

        let run_rng = |entropy: u64| {
            let mut sim = big_sim(&inst);
            let mut driver = PhaseDriver::randomized(entropy);
            let (state, _) = color_to_completion(&inst, &cfg, &mut driver, &mut sim).unwrap();
            let colors: Vec<Option<Color>> =
                (0..inst.n() as NodeId).map(|v| state.color_of(v)).collect();
            let ok = verify_coloring(&inst, &state).is_valid();
            (colors, ok)
        };
        let (r1, ok1) = run_rng(7);
        let (r1b, ok1b) = run_rng(7);
        assert!(ok1 && ok1b);
        assert_eq!(r1, r1b);
    }

    #[test]
    fn escape_threshold_leaves_open_nodes_for_the_fallback() {
        // With the escape threshold above every degree, no predicate binds:
        // nothing is deferred, and whatever the trials happened to color is
        // simply bonus. The rest comes back open.
        let inst = disjoint_k8s(2);
        let mut cfg = ProgramConfig::default();
        cfg.proc.low_degree_threshold = 1000;
        let mut sim = big_sim(&inst);
        let mut driver = PhaseDriver::derandomized();
        let (state, report) = color_to_completion(&inst, &cfg, &mut driver, &mut sim).unwrap();
        assert_eq!(report.levels.len(), 1);
        assert_eq!(state.counts().2, 0);
        assert_eq!(report.open, state.counts().0);
        let coloring: Vec<Option<Color>> =
            (0..inst.n() as NodeId).map(|v| state.color_of(v)).collect();
        // Partial but proper.
        for v in 0..inst.n() as NodeId {
            if let Some(c) = coloring[v as usize] {
                for &u in inst.graph.neighbors(v) {
                    assert_ne!(coloring[u as usize], Some(c));
                }
            }
        }
    }
}
