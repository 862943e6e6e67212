/*!
Deterministic (degree+1)-list-coloring on a simulated low-space MPC substrate.

The crate is organized around a pipeline:

1. `graph` / `instance` / `coloring` / `params` — instances, the residual
   view, exact structure parameters, and the independent verifier.
2. `acd` — the sparse / uneven / almost-clique decomposition plus the start-set
   and clique-role classifiers that steer the coloring subroutines.
3. `procs` — the randomized local subroutines (color trials, slack
   generation, put-aside sets, synchronized clique trials) expressed as
   single-round steps against an explicit random tape, with per-node success
   predicates.
4. `mpc` — the machine model: space accounting, message rounds, ball
   collection, sort primitives.
5. `source` / `derand` — seeded bit generators, power-graph chunking, the
   conditional-expectations seed search, and the deferral recursion that turns
   the randomized subroutines into a deterministic algorithm.
6. `partition` — the degree-reduction recursion that splits high-degree
   instances into low-degree buckets via verified pairwise-independent hashes.
7. `program` / `pipeline` — the full engine: sparse stage, dense stage, ties
   to the derandomizer, and the low-degree fallback.
*/

pub mod acd;
pub mod coloring;
pub mod config;
pub mod derand;
pub mod generate;
pub mod graph;
pub mod instance;
pub mod mpc;
pub mod params;
pub mod partition;
pub mod pipeline;
pub mod procs;
pub mod program;
pub mod report;
pub mod source;
pub mod tape;

pub use coloring::{
    compute_slack, reduce_instance, verify_coloring, ColoringState, NodeStatus, Verdict,
};
pub use config::RunConfig;
pub use graph::{Graph, NodeId};
pub use instance::{Color, D1LCInstance, Palette};
pub use pipeline::{run_pipeline, RunOutcome};
