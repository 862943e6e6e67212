//! Run reports: every number a run produces, rendered as stable
//! line-oriented text. Two runs with the same config and inputs render
//! byte-identically except for the wall-clock line, which is therefore
//! pinned to the very end.

use std::fmt::Write as _;

use crate::coloring::{ColoringState, Verdict};
use crate::derand::PhaseReport;
use crate::instance::D1LCInstance;
use crate::mpc::{fnv1a, MpcSim, RoundStats, FNV_OFFSET};
use crate::partition::RecursionNode;
use crate::program::LevelReport;

#[derive(Debug, Clone)]
pub struct RunReport {
    /// Exact configuration of the run, `key = value` lines.
    pub config_echo: String,
    /// Computed by the independent verifier, never by the pipeline.
    pub verdict: Verdict,
    pub nodes: usize,
    pub edges: usize,
    pub max_degree: usize,
    pub machines: u64,
    pub space_budget_words: u64,
    pub space_peak_words: u64,
    pub total_rounds: u64,
    /// Rounds charged under fallback labels; the engine's round count is
    /// the rest.
    pub fallback_rounds: u64,
    pub total_words: u64,
    /// Modulo-bias fallbacks taken by bounded-tape palette draws.
    pub bias_events: u64,
    /// Digest of the full simulated message ledger.
    pub transcript_digest: u64,
    /// Digest of the coloring file text.
    pub coloring_digest: u64,
    /// Deferred-node count per recursion level, summed across the trace.
    pub deferral_history: Vec<usize>,
    /// Nodes the low-degree fallback colored, across the trace.
    pub fallback_nodes: usize,
    pub trace: Vec<RecursionNode>,
    pub events: Vec<RoundStats>,
    pub wall_clock_ms: u128,
}

pub fn text_digest(text: &str) -> u64 {
    fnv1a(FNV_OFFSET, text.as_bytes())
}

/// Rounds charged under the deterministic low-degree fallback, identified
/// by label so recursion prefixes keep counting.
pub fn fallback_rounds(sim: &MpcSim) -> u64 {
    sim.events()
        .iter()
        .filter(|e| e.label.contains("fallback/"))
        .map(|e| e.rounds)
        .sum()
}

/// Assemble the report from a finished run. The verdict must come from
/// `verify_coloring` on the original instance.
#[allow(clippy::too_many_arguments)]
pub fn build_report(
    inst: &D1LCInstance,
    state: &ColoringState,
    verdict: Verdict,
    config_echo: String,
    trace: Vec<RecursionNode>,
    sim: &MpcSim,
    coloring_text: &str,
    wall_clock_ms: u128,
) -> RunReport {
    let fb_rounds = fallback_rounds(sim);
    let mut bias = 0u64;
    let mut fallback_nodes = 0usize;
    let mut history: Vec<usize> = Vec::new();
    for node in &trace {
        if let Some(mid) = &node.mid {
            fallback_nodes += mid.fallback_nodes;
            for lvl in &mid.completion.levels {
                let slot = lvl.level as usize;
                if history.len() <= slot {
                    history.resize(slot + 1, 0);
                }
                history[slot] += lvl.deferred;
                bias += lvl.phases.iter().map(|p| p.bias_events).sum::<u64>();
            }
        }
    }
    let _ = state;
    RunReport {
        config_echo,
        verdict,
        nodes: inst.n(),
        edges: inst.graph.m(),
        max_degree: inst.graph.max_degree(),
        machines: sim.machine_count(),
        space_budget_words: sim.space_words(),
        space_peak_words: sim
            .events()
            .iter()
            .map(|e| e.max_machine_words)
            .max()
            .unwrap_or(0),
        total_rounds: sim.total_rounds(),
        fallback_rounds: fb_rounds,
        total_words: sim.total_words(),
        bias_events: bias,
        transcript_digest: sim.digest(),
        coloring_digest: text_digest(coloring_text),
        deferral_history: history,
        fallback_nodes,
        trace,
        events: sim.events().to_vec(),
        wall_clock_ms,
    }
}

fn phase_line(out: &mut String, indent: &str, p: &PhaseReport) {
    let _ = write!(
        out,
        "{indent}phase {}: seed={}({}b) F={}/{} chunks={} bits={}",
        p.label, p.seed, p.seed_bits, p.f_chosen, p.f_total, p.chunk_classes, p.bits_per_node
    );
    if !p.searched {
        let _ = write!(out, " unsearched");
    }
    let _ = writeln!(
        out,
        " colored={} deferred={} put-aside={} synch-fails={} bias={}",
        p.colored, p.deferred, p.put_aside, p.synch_fails, p.bias_events
    );
}

fn level_lines(out: &mut String, indent: &str, lvl: &LevelReport) {
    let _ = writeln!(
        out,
        "{indent}level {}: nodes={} edges={} max-degree={} ell={} sparse={} uneven={} \
         cliques={} forced={} start={} colored={} deferred={} open={} put-aside-banked={}",
        lvl.level,
        lvl.nodes,
        lvl.edges,
        lvl.max_degree,
        lvl.ell,
        lvl.sparse,
        lvl.uneven,
        lvl.cliques,
        lvl.forced,
        lvl.start,
        lvl.colored,
        lvl.deferred,
        lvl.open,
        lvl.put_aside_finalized,
    );
    let deeper = format!("{indent}  ");
    for p in &lvl.phases {
        phase_line(out, &deeper, p);
    }
}

impl RunReport {
    pub fn engine_rounds(&self) -> u64 {
        self.total_rounds - self.fallback_rounds
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# palette-mpc run report");
        let _ = writeln!(s, "config:");
        for line in self.config_echo.lines() {
            let _ = writeln!(s, "  {line}");
        }
        let verdict = match &self.verdict {
            Verdict::Valid => "valid".to_string(),
            Verdict::Invalid(v) => format!("invalid: {v}"),
        };
        let _ = writeln!(s, "verdict: {verdict}");
        let _ = writeln!(s, "nodes: {}", self.nodes);
        let _ = writeln!(s, "edges: {}", self.edges);
        let _ = writeln!(s, "max-degree: {}", self.max_degree);
        let _ = writeln!(s, "machines: {}", self.machines);
        let _ = writeln!(s, "space-budget-words: {}", self.space_budget_words);
        let _ = writeln!(s, "space-peak-words: {}", self.space_peak_words);
        let _ = writeln!(s, "overflow-events: 0");
        let _ = writeln!(s, "rounds-total: {}", self.total_rounds);
        let _ = writeln!(s, "rounds-engine: {}", self.engine_rounds());
        let _ = writeln!(s, "rounds-fallback: {}", self.fallback_rounds);
        let _ = writeln!(s, "words-total: {}", self.total_words);
        let _ = writeln!(s, "bias-events: {}", self.bias_events);
        let _ = writeln!(
            s,
            "deferral-history: [{}]",
            self.deferral_history
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        );
        let _ = writeln!(s, "fallback-nodes: {}", self.fallback_nodes);
        let _ = writeln!(s, "transcript-digest: {:#018x}", self.transcript_digest);
        let _ = writeln!(s, "coloring-digest: {:#018x}", self.coloring_digest);

        let _ = writeln!(s, "recursion:");
        for node in &self.trace {
            let _ = write!(
                s,
                "  depth {}: nodes={} max-degree={}",
                node.depth, node.nodes, node.max_degree
            );
            if !node.bin_sizes.is_empty() {
                let _ = write!(
                    s,
                    " bins=[{}]",
                    node.bin_sizes
                        .iter()
                        .map(|b| b.to_string())
                        .collect::<Vec<_>>()
                        .join(", ")
                );
            }
            match &node.mid {
                None => {
                    let _ = writeln!(s);
                }
                Some(mid) => {
                    let _ = writeln!(
                        s,
                        " mid: fallback-nodes={} fallback-classes={} engine-rounds={} \
                         fallback-rounds={}",
                        mid.fallback_nodes,
                        mid.fallback_classes,
                        mid.phase_rounds,
                        mid.fallback_rounds
                    );
                    for lvl in &mid.completion.levels {
                        level_lines(&mut s, "    ", lvl);
                    }
                    for tail in &mid.completion.tails {
                        let _ = writeln!(
                            s,
                            "    tail {}: nodes={} words={}",
                            tail.level, tail.nodes, tail.words
                        );
                    }
                }
            }
        }

        let _ = writeln!(s, "events:");
        for e in &self.events {
            let _ = writeln!(
                s,
                "  {}: rounds={} words={} peak={}",
                e.label, e.rounds, e.words, e.max_machine_words
            );
        }
        let _ = writeln!(s, "wall-clock-ms: {}", self.wall_clock_ms);
        s
    }
}

/// Condensed view of a rendered report: the headline accounting numbers,
/// recomputed fallback share, and the deferral history. Lines it cannot
/// find are reported missing rather than invented.
pub fn summarize(text: &str) -> String {
    // Keys match at column zero only; the indented config echo and event
    // lines can never shadow them.
    let grab = |key: &str| -> Option<String> {
        text.lines()
            .map(str::trim_end)
            .find_map(|l| l.strip_prefix(&format!("{key}: ")).map(str::to_string))
    };
    let mut s = String::new();
    let line = |s: &mut String, key: &str, label: &str| match grab(key) {
        Some(v) => {
            let _ = writeln!(s, "{label}: {v}");
        }
        None => {
            let _ = writeln!(s, "{label}: (missing)");
        }
    };
    line(&mut s, "verdict", "verdict");
    line(&mut s, "nodes", "nodes");
    line(&mut s, "edges", "edges");
    line(&mut s, "rounds-total", "rounds total");
    line(&mut s, "rounds-engine", "rounds engine");
    line(&mut s, "rounds-fallback", "rounds fallback");
    line(&mut s, "space-budget-words", "space budget (words)");
    line(&mut s, "space-peak-words", "space peak (words)");
    line(&mut s, "overflow-events", "overflow events");
    line(&mut s, "bias-events", "bias events");
    line(&mut s, "deferral-history", "deferral history");
    line(&mut s, "fallback-nodes", "fallback nodes");
    let share = match (
        grab("rounds-fallback").and_then(|v| v.parse::<u64>().ok()),
        grab("rounds-total").and_then(|v| v.parse::<u64>().ok()),
    ) {
        (Some(f), Some(t)) if t > 0 => format!("{f}/{t}"),
        _ => "(missing)".to_string(),
    };
    let _ = writeln!(s, "fallback share of rounds: {share}");
    line(&mut s, "wall-clock-ms", "wall clock (ms)");
    s
}
