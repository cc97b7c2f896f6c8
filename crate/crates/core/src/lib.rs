//! Online disjoint set covers.
//!
//! Hyperedges over the node set `{1, …, n}` arrive one at a time and each must
//! be assigned a color immediately and irrevocably. A color is *fully used*
//! once every node is covered by some edge of that color, so the edges of a
//! fully used color form a set cover; the objective is to maximize the number
//! of fully used colors. The offline optimum equals the largest number of
//! pairwise disjoint set covers the edge multiset can be partitioned into, and
//! is at most δ(E), the minimum node degree.
//!
//! The coloring strategies here work in *phases*: node `i` sits at phase
//! `p(i)`, and phase `k` draws colors from the palette `{2^k, …, 2^{k+1}−1}`.
//! An arriving edge looks at the lowest phase among its nodes and picks a
//! color from one of the next `h = max(1, ⌈log₂ n⌉)` palettes — either
//! uniformly at random ([`policies::rand_policy`]) or by greedily minimizing
//! an exponential potential over per-node progress scores
//! ([`policies::det_decide`]). The potential argmin keeps the potential from
//! ever exceeding its starting value `n`, which in turn pins the per-node
//! bookkeeping counters and yields an `Ω(1/(log n · log (n·OPT)))`-ish
//! fraction of the offline optimum; the [`runner`] can assert every link of
//! that chain at each step.
//!
//! Module map:
//!
//! * [`model`] — instances, palettes, quotas, the JSON instance format.
//! * [`engine`] — phase/counter state and the single-step transition.
//! * [`potential`] — gather costs, progress scores, Φ, and exact candidate
//!   expectations.
//! * [`policies`] — det / rand / greedy decision rules.
//! * [`oracle`] — offline optimum (branch-and-bound + brute force) and the
//!   competitive-bound verdict.
//! * [`generators`] — planted / uniform / starved / full instance families.
//! * [`runner`], [`report`], [`verify`], [`sweep`] — the harness: checked
//!   runs, serialized reports and traces, named verification suites, grid
//!   sweeps. The `dsc` binary is a thin CLI over these.

pub mod engine;
pub mod generators;
pub mod model;
pub mod oracle;
pub mod policies;
pub mod potential;
pub mod report;
pub mod runner;
pub mod sweep;
pub mod verify;

pub use engine::{EngineState, NodeState, StepEffect, TraceEntry};
pub use generators::GeneratorSpec;
pub use model::{Color, InstanceSpec, PaletteParams};
pub use oracle::{CompetitiveVerdict, OfflineResult};
pub use report::RunReport;
pub use runner::{RunOptions, RunOutput};

/// Crate-wide error type.
///
/// The CLI maps `Invariant` to exit code 3 and everything else (malformed
/// input, capacity limits, I/O) to exit code 2.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("phase {0} exceeds the 64-bit color space")]
    PhaseOverflow(u32),
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    #[error("step {step}: {check} violated: {detail}")]
    Invariant {
        step: u64,
        check: &'static str,
        detail: String,
    },
    #[error("replay: {0}")]
    Replay(String),
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Invariant { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
