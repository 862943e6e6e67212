/*!
The machine substrate: space budgets, round counts, traffic, transcripts.

Computation in this crate runs in ordinary shared memory; this module is the
ledger that the distributed execution would have to balance. Every driver
step routes its communication through an `MpcSim`, which

  * checks that no single node's payload and no machine's aggregate load
    exceeds the per-machine word budget (strongly sublinear in n by
    default), failing hard rather than fudging;
  * counts rounds by category, so the round table in a run report traces
    back to individual driver steps;
  * folds every event into an FNV-1a transcript digest, which is what the
    determinism check compares across runs and thread counts.

Machines are virtual: node payloads are packed first-fit into machines of
capacity `local_space_words` fresh per exchange. A deterministic sort over
the whole input is charged `SORT_ROUNDS` rounds. Ball collection charges one
round per hop and the ball's full word size against the center's machine.
*/

use num_rational::BigRational;

use crate::graph::{Graph, NodeId};
use crate::params::{ceil_pow, rat};

pub const SORT_ROUNDS: u64 = 3;

#[derive(Debug, Clone)]
pub struct MpcConfig {
    /// Space exponent: budget = ceil(n^phi) words unless overridden.
    pub phi: BigRational,
    /// Recursion exponent for the degree partition (carried here so every
    /// stage reads one config).
    pub delta: BigRational,
    /// Explicit per-machine word budget; overrides the n^phi default.
    pub local_space_words: Option<u64>,
    /// Explicit machine count; default n + ceil(2(n+m)/space).
    pub machine_count: Option<u64>,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig {
            phi: rat(1, 2),
            delta: rat(1, 8),
            local_space_words: None,
            machine_count: None,
        }
    }
}

impl MpcConfig {
    pub fn space_words(&self, n: u64) -> u64 {
        match self.local_space_words {
            Some(s) => s,
            None => ceil_pow(n, &self.phi).max(1),
        }
    }

    pub fn machines(&self, n: u64, m: u64) -> u64 {
        match self.machine_count {
            Some(c) => c,
            None => n + (2 * (n + m)).div_ceil(self.space_words(n).max(1)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MpcError {
    SpaceExceeded {
        context: String,
        need: u64,
        have: u64,
    },
}

impl std::fmt::Display for MpcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MpcError::SpaceExceeded {
                context,
                need,
                have,
            } => write!(
                f,
                "space budget exceeded in {context}: need {need} words, machine holds {have}"
            ),
        }
    }
}

impl std::error::Error for MpcError {}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundStats {
    pub label: String,
    pub rounds: u64,
    pub words: u64,
    pub max_machine_words: u64,
}

#[derive(Debug, Clone)]
pub struct MpcSim {
    space_words: u64,
    machine_count: u64,
    events: Vec<RoundStats>,
    digest: u64,
}

pub(crate) const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01B3;

pub(crate) fn fnv1a(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

/// First-fit packing of per-node loads into machines of capacity `cap`.
/// Returns the machine of each node and the heaviest machine's load.
pub fn assign_machines(loads: &[u64], cap: u64) -> Result<(Vec<u32>, u64), MpcError> {
    let mut assignment = Vec::with_capacity(loads.len());
    let mut machine = 0u32;
    let mut fill = 0u64;
    let mut max_fill = 0u64;
    for (i, &w) in loads.iter().enumerate() {
        if w > cap {
            return Err(MpcError::SpaceExceeded {
                context: format!("node {i} payload"),
                need: w,
                have: cap,
            });
        }
        if fill + w > cap {
            machine += 1;
            fill = 0;
        }
        fill += w;
        max_fill = max_fill.max(fill);
        assignment.push(machine);
    }
    Ok((assignment, max_fill))
}

impl MpcSim {
    pub fn new(config: &MpcConfig, n: u64, m: u64) -> Self {
        MpcSim {
            space_words: config.space_words(n),
            machine_count: config.machines(n, m),
            events: Vec::new(),
            digest: FNV_OFFSET,
        }
    }

    pub fn space_words(&self) -> u64 {
        self.space_words
    }

    pub fn machine_count(&self) -> u64 {
        self.machine_count
    }

    fn record(&mut self, label: &str, rounds: u64, words: u64, max_machine: u64) {
        self.digest = fnv1a(self.digest, label.as_bytes());
        self.digest = fnv1a(self.digest, &rounds.to_le_bytes());
        self.digest = fnv1a(self.digest, &words.to_le_bytes());
        self.digest = fnv1a(self.digest, &max_machine.to_le_bytes());
        match self.events.iter_mut().find(|e| e.label == label) {
            Some(e) => {
                e.rounds += rounds;
                e.words += words;
                e.max_machine_words = e.max_machine_words.max(max_machine);
            }
            None => self.events.push(RoundStats {
                label: label.to_string(),
                rounds,
                words,
                max_machine_words: max_machine,
            }),
        }
    }

    /// One message round: every node i receives in[i] and sends out[i]
    /// words. Packs receivers first-fit and checks the budget.
    pub fn exchange(
        &mut self,
        label: &str,
        per_node_in: &[u64],
        per_node_out: &[u64],
    ) -> Result<(), MpcError> {
        let (_, max_in) = assign_machines(per_node_in, self.space_words)?;
        for (i, &w) in per_node_out.iter().enumerate() {
            if w > self.space_words {
                return Err(MpcError::SpaceExceeded {
                    context: format!("{label}: node {i} outbound"),
                    need: w,
                    have: self.space_words,
                });
            }
        }
        let words: u64 = per_node_out.iter().sum();
        self.record(label, 1, words, max_in);
        Ok(())
    }

    /// Whole-input sort: `SORT_ROUNDS` rounds, balanced shares.
    pub fn global_sort(&mut self, label: &str, total_words: u64) -> Result<(), MpcError> {
        let share = total_words.div_ceil(self.machine_count.max(1));
        if share > self.space_words {
            return Err(MpcError::SpaceExceeded {
                context: format!("{label}: sort share"),
                need: share,
                have: self.space_words,
            });
        }
        self.record(label, SORT_ROUNDS, total_words, share);
        Ok(())
    }

    /// Fixed-cost control step (parameter broadcast, leader election, ...):
    /// round count independent of the input.
    pub fn charge_fixed(&mut self, label: &str, rounds: u64) {
        self.record(label, rounds, 0, 0);
    }

    /// Each center gathers its radius-r ball (nodes plus their adjacency
    /// lists). One round per hop; the whole ball must fit at the center.
    pub fn collect_balls(
        &mut self,
        label: &str,
        graph: &Graph,
        centers: &[NodeId],
        radius: u32,
    ) -> Result<(), MpcError> {
        let mut total = 0u64;
        let mut max_ball = 0u64;
        for &c in centers {
            let ball = graph.ball(c, radius);
            let words: u64 = ball
                .iter()
                .map(|&v| 1 + graph.degree(v) as u64)
                .sum();
            if words > self.space_words {
                return Err(MpcError::SpaceExceeded {
                    context: format!("{label}: ball of node {c}"),
                    need: words,
                    have: self.space_words,
                });
            }
            total += words;
            max_ball = max_ball.max(words);
        }
        self.record(label, radius as u64, total, max_ball);
        Ok(())
    }

    pub fn total_rounds(&self) -> u64 {
        self.events.iter().map(|e| e.rounds).sum()
    }

    pub fn total_words(&self) -> u64 {
        self.events.iter().map(|e| e.words).sum()
    }

    pub fn events(&self) -> &[RoundStats] {
        &self.events
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    /// Merge a sub-simulation (recursion level) into this ledger under a
    /// prefixed label.
    pub fn absorb(&mut self, prefix: &str, other: &MpcSim) {
        for e in &other.events {
            let label = format!("{prefix}{}", e.label);
            self.record(&label, e.rounds, e.words, e.max_machine_words);
        }
    }

    /// Merge sibling simulations that ran concurrently on disjoint node
    /// sets: the stage takes as many rounds as its slowest sibling (the
    /// others complete inside that window), while words and peak machine
    /// loads accumulate from all of them. Labels become
    /// `{prefix}{i+1}/{event}` with 1-based sibling numbering.
    pub fn absorb_concurrent(&mut self, prefix: &str, siblings: &[MpcSim]) {
        if siblings.is_empty() {
            return;
        }
        let mut lead = 0usize;
        for (i, s) in siblings.iter().enumerate() {
            if s.total_rounds() > siblings[lead].total_rounds() {
                lead = i;
            }
        }
        for (i, s) in siblings.iter().enumerate() {
            for e in &s.events {
                let rounds = if i == lead { e.rounds } else { 0 };
                let label = format!("{prefix}{}/{}", i + 1, e.label);
                self.record(&label, rounds, e.words, e.max_machine_words);
            }
        }
    }
}
