//! One entry point from a validated instance + config to a verified
//! coloring and its report. The CLI and the C ABI both call this, so
//! their outputs can never drift apart.

use std::time::Instant;

use crate::coloring::{coloring_text, verify_coloring, ColoringState};
use crate::config::RunConfig;
use crate::instance::D1LCInstance;
use crate::mpc::MpcSim;
use crate::partition::{
    derandomized_mid_degree_color, low_space_color_reduce, PartitionError, RecursionNode,
};
use crate::report::{build_report, RunReport};

#[derive(Debug)]
pub struct RunOutcome {
    pub state: ColoringState,
    pub report: RunReport,
    /// The exact coloring file text the report's digest covers.
    pub coloring_text: String,
}

impl RunOutcome {
    pub fn is_valid(&self) -> bool {
        self.report.verdict.is_valid()
    }
}

/// Run the full engine on one instance. Derandomized mode is a pure
/// function of (instance, config); randomized mode additionally reads the
/// config's entropy seed — never ambient randomness.
pub fn run_pipeline(inst: &D1LCInstance, cfg: &RunConfig) -> Result<RunOutcome, PartitionError> {
    let started = Instant::now();
    let reduce_cfg = cfg.reduce_config(inst.n());
    let mut sim = MpcSim::new(&reduce_cfg.mpc, inst.n() as u64, inst.graph.m() as u64);
    let mode = cfg.run_mode();

    let (state, trace) = if cfg.no_partition {
        let mut trace = Vec::new();
        trace.push(RecursionNode {
            depth: 0,
            nodes: inst.n(),
            max_degree: inst.graph.max_degree(),
            bin_sizes: Vec::new(),
            mid: None,
        });
        let (state, mid) =
            derandomized_mid_degree_color(inst, &reduce_cfg.program, mode, 1, &mut sim)?;
        trace[0].mid = Some(mid);
        (state, trace)
    } else {
        low_space_color_reduce(inst, &reduce_cfg, mode, &mut sim)?
    };

    let verdict = verify_coloring(inst, &state);
    let text = coloring_text(&state);
    let report = build_report(
        inst,
        &state,
        verdict,
        cfg.echo(),
        trace,
        &sim,
        &text,
        started.elapsed().as_millis(),
    );
    Ok(RunOutcome {
        state,
        report,
        coloring_text: text,
    })
}
