//! Color-selection strategies.
//!
//! Three live policies plus replay:
//!
//! * **rand** — the randomized rule: palette uniform over the candidate
//!   window, color uniform within the palette.
//! * **det** — the derandomized rule: evaluate every candidate's resulting
//!   potential and take the argmin. Because the minimum can't exceed the
//!   mean and the mean never exceeds the current Φ, this keeps `Φ ≤ n`
//!   deterministically. Ties break toward the smaller palette, then the
//!   smaller color, making the policy a pure function of state.
//! * **greedy** — a potential-free baseline: paint edges with an active
//!   color until the painted edges cover every node, then advance the color.
//!
//! Candidate evaluation runs over the color equivalence classes built by the
//! potential module, never over raw colors; [`det_decide_exhaustive`] is the
//! deliberately naive scan kept for differential testing.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::engine::EngineState;
use crate::model::{palette_range, Color};
use crate::potential::{tolerance, Potential, StepContext};
use crate::{Error, Result};

/// Which strategy colors the arriving edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Det,
    Rand,
    Greedy,
    Replay,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "det" => Ok(PolicyKind::Det),
            "rand" => Ok(PolicyKind::Rand),
            "greedy" => Ok(PolicyKind::Greedy),
            "replay" => Ok(PolicyKind::Replay),
            other => Err(Error::InvalidArgument(format!(
                "unknown policy {other:?} (expected det, rand, greedy, or replay)"
            ))),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PolicyKind::Det => "det",
            PolicyKind::Rand => "rand",
            PolicyKind::Greedy => "greedy",
            PolicyKind::Replay => "replay",
        };
        f.write_str(s)
    }
}

/// One policy choice for one edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Decision {
    /// Chosen palette; always within the edge's candidate window.
    pub kstar: u32,
    pub color: Color,
    /// Number of raw `(palette, color)` candidates this step.
    pub candidate_count: u64,
    /// `Φ^{t−1} − Φ^t` for the chosen candidate.
    pub margin: f64,
}

/// A deterministic decision together with the quantities its safety
/// argument rests on.
#[derive(Debug, Clone)]
pub struct DetOutcome {
    pub decision: Decision,
    /// Predicted Φ after applying the chosen candidate.
    pub phi_after: f64,
    /// Exact expectation of Φ over the uniform candidate law.
    pub expected_phi: f64,
    /// True when some differently-behaving candidate class came within
    /// `1e−9·max(1,|Φ|)` of the minimum — the choice was numerically fragile.
    pub near_tie: bool,
}

/// Scan the classed candidates of a prepared [`StepContext`] for the
/// Φ-minimizing `(palette, color)`, lexicographic tie-break.
fn argmin_over_classes(ctx: &StepContext) -> (f64, u32, u64, bool) {
    // Candidate classes as (phi, palette, representative color = the class's
    // smallest color). Within a class every color behaves identically, so the
    // representative is exactly the color lexicographic tie-breaking selects.
    let mut classes: Vec<(f64, u32, u64)> = Vec::new();
    for (pi, pc) in ctx.palettes.iter().enumerate() {
        if pc.classes.fresh_count > 0 {
            let c = pc
                .classes
                .fresh_min
                .expect("fresh colors exist, so a smallest one does");
            classes.push((ctx.phi_after_fresh(pi), pc.k, c));
        }
        for &(mask, _, min_color) in &pc.classes.held {
            classes.push((ctx.phi_after_class(pi, mask), pc.k, min_color));
        }
    }
    let best = *classes
        .iter()
        .min_by(|a, b| {
            a.partial_cmp(b)
                .expect("candidate potentials are finite, so the order is total")
        })
        .expect("every palette is nonempty, so there is at least one class");
    let runner_up = classes
        .iter()
        .filter(|&&c| c != best)
        .map(|&(phi, _, _)| phi)
        .fold(f64::INFINITY, f64::min);
    let near_tie = runner_up - best.0 <= tolerance(best.0);
    (best.0, best.1, best.2, near_tie)
}

/// The derandomized policy: argmin of the post-step potential over all
/// candidates, evaluated per equivalence class.
pub fn det_decide(
    potential: &mut Potential,
    engine: &EngineState,
    edge: &[u32],
) -> Result<DetOutcome> {
    let ctx = potential.step_context(engine, edge)?;
    let (phi_after, kstar, color, near_tie) = argmin_over_classes(&ctx);
    Ok(DetOutcome {
        decision: Decision {
            kstar,
            color: Color::new(color)?,
            candidate_count: ctx.candidate_count(),
            margin: ctx.phi_pre - phi_after,
        },
        phi_after,
        expected_phi: ctx.expected_phi(),
        near_tie,
    })
}

/// Raw candidates the exhaustive scan will enumerate at most.
const EXHAUSTIVE_CAP: u64 = 1 << 16;

/// Differential twin of [`det_decide`]: enumerate every raw color of every
/// window palette instead of using classes. Intentionally naive; refuses
/// candidate sets larger than 2^16.
pub fn det_decide_exhaustive(
    potential: &mut Potential,
    engine: &EngineState,
    edge: &[u32],
) -> Result<DetOutcome> {
    let ctx = potential.step_context(engine, edge)?;
    let total = ctx.candidate_count();
    if total > EXHAUSTIVE_CAP {
        return Err(Error::Capacity(format!(
            "exhaustive candidate scan over {total} colors exceeds the cap of {EXHAUSTIVE_CAP}"
        )));
    }
    let mut best: Option<(f64, u32, u64)> = None;
    for (pi, pc) in ctx.palettes.iter().enumerate() {
        let (lo, hi) = palette_range(pc.k)?;
        for c in lo.get()..=hi.get() {
            let color = Color::new(c)?;
            let mut holders = 0u128;
            for (pos, &v) in edge.iter().enumerate() {
                if engine.node(v).has_color(color) {
                    holders |= 1u128 << pos;
                }
            }
            let cand = (ctx.phi_after_class(pi, holders), pc.k, c);
            if best.is_none_or(|b| cand < b) {
                best = Some(cand);
            }
        }
    }
    let (phi_after, kstar, color) = best.expect("palettes are nonempty");
    Ok(DetOutcome {
        decision: Decision {
            kstar,
            color: Color::new(color)?,
            candidate_count: total,
            margin: ctx.phi_pre - phi_after,
        },
        phi_after,
        expected_phi: ctx.expected_phi(),
        near_tie: false, // the naive scan does not classify; no tie report
    })
}

/// The randomized rule: sample the palette uniformly from the candidate
/// window, then the color uniformly from that palette.
pub fn rand_policy<R: Rng>(engine: &EngineState, edge: &[u32], rng: &mut R) -> Result<(u32, Color)> {
    let ps = engine.min_phase(edge)?;
    let window = engine.params().window();
    let kstar = ps + rng.gen_range(0..window);
    let (lo, hi) = palette_range(kstar)?;
    let color = Color::new(rng.gen_range(lo.get()..=hi.get()))?;
    Ok((kstar, color))
}

/// Potential-free baseline: keep one active color and an uncovered-node set;
/// paint every edge with the active color until the set empties, which
/// completes a cover — then advance the color and reset.
#[derive(Debug, Clone)]
pub struct GreedyState {
    n: u32,
    uncovered: BTreeSet<u32>,
    active: u64,
    gain: u64,
}

impl GreedyState {
    pub fn new(n: u32) -> Self {
        GreedyState {
            n,
            uncovered: (1..=n).collect(),
            active: 1,
            gain: 0,
        }
    }

    /// Assign the arriving edge the active color.
    pub fn color_edge(&mut self, edge: &[u32]) -> Result<Color> {
        let color = Color::new(self.active)?;
        for v in edge {
            self.uncovered.remove(v);
        }
        if self.uncovered.is_empty() {
            self.gain += 1;
            self.active += 1;
            self.uncovered = (1..=self.n).collect();
        }
        Ok(color)
    }

    /// Covers completed so far.
    pub fn gain(&self) -> u64 {
        self.gain
    }
}
