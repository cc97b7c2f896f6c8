//! Phase/counter state and the single-step transition.
//!
//! The engine tracks, per node `i`:
//!
//! * its phase `p(i)` (all nodes start at 0);
//! * `gathered[k]` — the distinct palette-`k` colors it has received;
//! * two step counters keyed by the phase the node was in when an edge
//!   containing it arrived: `window_hits[k]` counts arrivals whose candidate
//!   window still covered the node (`p(i) ≤ pS + h − 1`), `ahead_hits[k]`
//!   counts arrivals the node had outrun (`p(i) ≥ pS + h`). Together they
//!   partition the node's degree.
//!
//! [`EngineState::apply_color`] is the only mutation: every node of the edge
//! receives the chosen color into `gathered[kstar]`, counters are bumped
//! against the node's *pre-step* phase, and then phases cascade while the
//! current phase's quota is met — a node that pre-gathered colors for future
//! palettes may jump several phases at once. The engine also maintains the
//! reverse index color → gatherers, so the number of fully used colors (the
//! objective) is O(1) to read.
//!
//! Failed calls with invalid arguments leave the state untouched; the one
//! exception is a phase climbing past the 64-bit color space mid-cascade
//! (unreachable at sane scales), which aborts with the state poisoned — the
//! runner treats any error as fatal for the run.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::model::{palette_range, Color, PaletteParams, MAX_PHASE};
use crate::{Error, Result};

/// Per-node phase, gathered colors, and arrival counters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeState {
    phase: u32,
    gathered: BTreeMap<u32, BTreeSet<Color>>,
    window_hits: BTreeMap<u32, u64>,
    ahead_hits: BTreeMap<u32, u64>,
    degree: u64,
}

impl NodeState {
    fn new() -> Self {
        NodeState {
            phase: 0,
            gathered: BTreeMap::new(),
            window_hits: BTreeMap::new(),
            ahead_hits: BTreeMap::new(),
            degree: 0,
        }
    }

    pub fn phase(&self) -> u32 {
        self.phase
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    /// Distinct palette-`k` colors gathered so far.
    pub fn gathered_count(&self, k: u32) -> u64 {
        self.gathered.get(&k).map_or(0, |s| s.len() as u64)
    }

    pub fn has_color(&self, color: Color) -> bool {
        self.gathered
            .get(&color.palette())
            .is_some_and(|s| s.contains(&color))
    }

    pub fn gathered(&self, k: u32) -> Option<&BTreeSet<Color>> {
        self.gathered.get(&k)
    }

    pub fn window_hits(&self, k: u32) -> u64 {
        self.window_hits.get(&k).copied().unwrap_or(0)
    }

    pub fn ahead_hits(&self, k: u32) -> u64 {
        self.ahead_hits.get(&k).copied().unwrap_or(0)
    }

    /// Phases with a nonzero window counter, with their counts.
    pub fn window_hit_entries(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.window_hits.iter().map(|(&k, &v)| (k, v))
    }

    pub fn ahead_hit_entries(&self) -> impl Iterator<Item = (u32, u64)> + '_ {
        self.ahead_hits.iter().map(|(&k, &v)| (k, v))
    }

    pub fn gathered_entries(&self) -> impl Iterator<Item = (u32, &BTreeSet<Color>)> + '_ {
        self.gathered.iter().map(|(&k, s)| (k, s))
    }
}

/// What one step did to one node; consumed by the potential update and the
/// invariant checker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeEffect {
    pub node: u32,
    pub pre_phase: u32,
    pub post_phase: u32,
    /// Window counter bumped (else the ahead counter was).
    pub in_window: bool,
    /// The color was new for this node's `gathered[kstar]`.
    pub gained: bool,
    /// `gathered[kstar]` count before the gain.
    pub pre_gathered: u64,
}

/// Everything one call to [`EngineState::apply_color`] did.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepEffect {
    /// 1-based index of the step just applied.
    pub step: u64,
    /// Lowest phase among the edge's nodes at the start of the step.
    pub min_phase: u32,
    pub palette: u32,
    pub color: Color,
    /// Per-node effects in ascending node order.
    pub nodes: Vec<NodeEffect>,
}

/// One line of the replayable trace. Serialized field names are part of the
/// trace file format.
///
/// Replay compares `phi_after` bit for bit, so the JSON round-trip must be
/// exact: serde_json's default float parsing can be one ULP off, which is
/// why the crate enables its `float_roundtrip` feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: u64,
    pub edge: Vec<u32>,
    #[serde(rename = "pS")]
    pub min_phase: u32,
    #[serde(rename = "kstar")]
    pub palette: u32,
    pub color: u64,
    #[serde(rename = "phiAfter")]
    pub phi_after: f64,
}

/// Full online state after some prefix of the arrival sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineState {
    params: PaletteParams,
    step: u64,
    nodes: Vec<NodeState>,
    /// color → nodes that gathered it (1-based ids).
    gatherers: BTreeMap<Color, BTreeSet<u32>>,
    fully_used: u64,
    /// Σ over nodes of `window_hits[k]`, indexed by phase `k`.
    window_totals: Vec<u64>,
}

impl EngineState {
    /// Fresh state: every node at phase 0 with empty sets and counters.
    pub fn init(n: u32) -> Result<Self> {
        let params = PaletteParams::new(n)?;
        Ok(EngineState {
            params,
            step: 0,
            nodes: (0..n).map(|_| NodeState::new()).collect(),
            gatherers: BTreeMap::new(),
            fully_used: 0,
            window_totals: Vec::new(),
        })
    }

    pub fn params(&self) -> PaletteParams {
        self.params
    }

    pub fn n(&self) -> u32 {
        self.params.n()
    }

    /// Steps applied so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn node(&self, id: u32) -> &NodeState {
        &self.nodes[(id - 1) as usize]
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    /// Number of colors gathered by all `n` nodes — the objective value.
    pub fn fully_used_count(&self) -> u64 {
        self.fully_used
    }

    /// Highest phase every node has completed: `min_i p(i) − 1` (−1 at start).
    pub fn min_completed_phase(&self) -> i64 {
        let min = self.nodes.iter().map(|s| s.phase).min().unwrap_or(0);
        i64::from(min) - 1
    }

    /// δ of the arrived prefix: minimum node degree so far.
    pub fn min_degree(&self) -> u64 {
        self.nodes.iter().map(|s| s.degree).min().unwrap_or(0)
    }

    /// Σ over nodes of `window_hits[k]` for `k ≤ upto` — the charging budget
    /// the ahead counters are compared against.
    pub fn window_total_upto(&self, upto: i64) -> u64 {
        self.window_totals
            .iter()
            .take(usize::try_from(upto + 1).unwrap_or(0))
            .sum()
    }

    /// Validate an edge: strictly ascending 1-based ids within `1..=n`.
    fn check_edge(&self, edge: &[u32]) -> Result<()> {
        if edge.is_empty() {
            return Err(Error::InvalidArgument("empty hyperedge".into()));
        }
        let mut prev = 0u32;
        for &v in edge {
            if v == 0 || v > self.params.n() {
                return Err(Error::InvalidArgument(format!(
                    "node id {v} out of range 1..={}",
                    self.params.n()
                )));
            }
            if v <= prev {
                return Err(Error::InvalidArgument(
                    "edge nodes must be strictly ascending".into(),
                ));
            }
            prev = v;
        }
        Ok(())
    }

    /// `pS`: the lowest phase among the edge's nodes.
    pub fn min_phase(&self, edge: &[u32]) -> Result<u32> {
        self.check_edge(edge)?;
        Ok(edge
            .iter()
            .map(|&v| self.node(v).phase)
            .min()
            .expect("edge is nonempty"))
    }

    /// Apply one arrival: give `color` (from palette `kstar`) to every node
    /// of `edge`, bump counters against pre-step phases, then cascade phases.
    ///
    /// `kstar` must lie in the candidate window `[pS, pS + h − 1]` and
    /// `color` in palette `kstar`.
    pub fn apply_color(&mut self, edge: &[u32], kstar: u32, color: Color) -> Result<StepEffect> {
        let min_phase = self.min_phase(edge)?;
        let window = self.params.window();
        if kstar < min_phase || kstar >= min_phase + window {
            return Err(Error::InvalidArgument(format!(
                "palette {kstar} outside candidate window [{min_phase}, {}]",
                min_phase + window - 1
            )));
        }
        let (lo, hi) = palette_range(kstar)?;
        if color < lo || color > hi {
            return Err(Error::InvalidArgument(format!(
                "color {color} not in palette {kstar} = [{lo}, {hi}]"
            )));
        }

        let n = self.params.n();
        let mut effects = Vec::with_capacity(edge.len());
        for &v in edge {
            let node = &mut self.nodes[(v - 1) as usize];
            let pre_phase = node.phase;
            let in_window = pre_phase < min_phase + window;
            if in_window {
                *node.window_hits.entry(pre_phase).or_insert(0) += 1;
                let idx = pre_phase as usize;
                if self.window_totals.len() <= idx {
                    self.window_totals.resize(idx + 1, 0);
                }
                self.window_totals[idx] += 1;
            } else {
                *node.ahead_hits.entry(pre_phase).or_insert(0) += 1;
            }
            node.degree += 1;

            let set = node.gathered.entry(kstar).or_default();
            let pre_gathered = set.len() as u64;
            let gained = set.insert(color);

            if gained {
                let holders = self.gatherers.entry(color).or_default();
                holders.insert(v);
                if holders.len() as u32 == n {
                    self.fully_used += 1;
                }
            }

            // Cascade: quotas already met (possibly pre-gathered for future
            // palettes) advance the phase several steps at once.
            loop {
                if node.phase > MAX_PHASE {
                    return Err(Error::PhaseOverflow(node.phase));
                }
                let q = self.params.quota(node.phase)?;
                if node.gathered.get(&node.phase).map_or(0, |s| s.len() as u64) >= q {
                    node.phase += 1;
                } else {
                    break;
                }
            }

            effects.push(NodeEffect {
                node: v,
                pre_phase,
                post_phase: node.phase,
                in_window,
                gained,
                pre_gathered,
            });
        }

        self.step += 1;
        Ok(StepEffect {
            step: self.step,
            min_phase,
            palette: kstar,
            color,
            nodes: effects,
        })
    }
}
