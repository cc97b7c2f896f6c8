//! The exponential potential that guides the deterministic policy.
//!
//! Per node `i` and palette `k`, the *gather cost* `cost(k, m)` is `h` times
//! the expected number of uniform draws from palette `k` needed to collect
//! `m` distinct colors (the coupon-collector partial sum
//! `h·Σ_{j=1}^{m} 2^k/(2^k − j + 1)`). A node's progress score weighs its
//! window counters against twice the cost of what it has actually gathered:
//!
//! ```text
//! z_i = Σ_k ( window_hits[k] − 2·cost(k, |gathered[k]|) ) / (4·h·2^k)
//! ```
//!
//! and the potential is `Φ = Σ_i e^{z_i}`, starting at exactly `n`. One step
//! changes `z_i` by `+1/(4h·2^{p(i)})` if the node was in the candidate
//! window, and by `−Δcost/(2h·2^{kstar})` if it newly gained the color. Under
//! the uniform candidate distribution the expected new Φ never exceeds the
//! old one, so picking the candidate minimizing Φ keeps `Φ ≤ n` forever —
//! which caps every `z_i` at `ln n` and through it the counters.
//!
//! Colors within one palette are interchangeable except for *which edge nodes
//! already hold them*, so candidate enumeration groups a palette's colors
//! into equivalence classes keyed by the holder set ([`color_classes`]);
//! minimum, expectation, and the exact-rational growth-probability check all
//! run over classes, never over the `2^k` raw colors.
//!
//! Numerics: gather costs are accumulated with compensated summation and
//! cached per palette; Φ is maintained incrementally with a full recompute
//! every [`Potential::REBASE_EVERY`] steps to bound drift; agreement between
//! the two routes is an asserted invariant (relative 1e−9). Comparisons
//! elsewhere use [`tolerance`]: additive slack `1e−9·max(1, |rhs|)`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineState, StepEffect};
use crate::model::{palette_range, palette_size, Color, PaletteParams, MAX_PHASE};
use crate::{Error, Result};

/// Additive comparison slack for floating-point invariant checks:
/// `1e−9 · max(1, |rhs|)`.
pub fn tolerance(rhs: f64) -> f64 {
    1e-9 * rhs.abs().max(1.0)
}

/// `ln(4·e·n)` — the recurring bound constant: it caps every quota's
/// harmonic gap ([`harmonic_gap`]), the gather cost of any reachable
/// state, and through those the counter and competitive bounds.
pub fn ln_4en(n: u32) -> f64 {
    (4.0 * std::f64::consts::E * f64::from(n)).ln()
}

/// `2^k` as an (exact) f64, for `k ≤ 61`.
fn pow2f(k: u32) -> f64 {
    (1u64 << k) as f64
}

/// Compensated (Kahan) accumulator.
#[derive(Debug, Clone, Copy, Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let y = x - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

// ---------------------------------------------------------------------------
// Gather costs
// ---------------------------------------------------------------------------

/// Scaled coupon-collector cost: `h · Σ_{j=1}^{m} 2^k / (2^k − j + 1)`,
/// defined for `m ≤ 2^k`. `cost(k, 0) = 0`.
pub fn gather_cost(h: u32, k: u32, m: u64) -> Result<f64> {
    let mut table = GatherCosts::new(h)?;
    table.value(k, m)
}

/// Per-palette cache of cumulative gather costs.
///
/// Entry `m` of a palette's table is `cost(k, m)`; tables extend on demand,
/// carrying the summation compensation so a cached prefix and a freshly
/// accumulated one are bit-identical.
#[derive(Debug, Clone)]
pub struct GatherCosts {
    h: u32,
    tables: BTreeMap<u32, (Vec<f64>, f64)>,
}

impl GatherCosts {
    pub fn new(h: u32) -> Result<Self> {
        if h == 0 {
            return Err(Error::InvalidArgument("window size h must be ≥ 1".into()));
        }
        Ok(GatherCosts {
            h,
            tables: BTreeMap::new(),
        })
    }

    pub fn h(&self) -> u32 {
        self.h
    }

    /// `cost(k, m)`, extending the cached table if needed.
    pub fn value(&mut self, k: u32, m: u64) -> Result<f64> {
        let size = palette_size(k)?;
        if m > size {
            return Err(Error::InvalidArgument(format!(
                "gather cost undefined: m = {m} exceeds palette size 2^{k}"
            )));
        }
        let h = f64::from(self.h);
        let (table, comp) = self
            .tables
            .entry(k)
            .or_insert_with(|| (vec![0.0], 0.0));
        let mut acc = KahanSum {
            sum: *table.last().expect("table starts with cost 0"),
            comp: *comp,
        };
        while (table.len() as u64) <= m {
            let j = table.len() as u64; // collecting the j-th distinct color
            acc.add(h * pow2f(k) / ((size - j + 1) as f64));
            table.push(acc.value());
        }
        *comp = acc.comp;
        Ok(table[m as usize])
    }

    /// `cost(k, m+1) − cost(k, m)`: the marginal cost of one more color.
    pub fn delta(&mut self, k: u32, m: u64) -> Result<f64> {
        let hi = self.value(k, m + 1)?;
        let lo = self.value(k, m)?;
        Ok(hi - lo)
    }
}

// ---------------------------------------------------------------------------
// Harmonic gap (quota tail of the harmonic series)
// ---------------------------------------------------------------------------

/// `H(2^k) − H(2^k − quota(k, n))`: the harmonic mass of the quota tail,
/// which stays below `ln(4·e·n)` for every `k` — the fact that keeps gather
/// costs of reachable states bounded.
///
/// Direct summation for palettes up to `2^20`; beyond that, the
/// `ln`-difference upper bound `1 + ln 2^k − ln(2^k − q)` (and `1 + ln 2^k`
/// when the quota is the whole palette).
pub fn harmonic_gap(k: u32, n: u32) -> Result<f64> {
    let q = crate::model::quota(k, n)?;
    let size = palette_size(k)?;
    if size <= 1 << 20 {
        let mut acc = KahanSum::default();
        for j in (size - q + 1)..=size {
            acc.add(1.0 / j as f64);
        }
        Ok(acc.value())
    } else {
        let rest = size - q;
        if rest == 0 {
            Ok(1.0 + (size as f64).ln())
        } else {
            Ok(1.0 + (size as f64).ln() - (rest as f64).ln())
        }
    }
}

/// Batched [`harmonic_gap`] for one `k` over many `n`: a single ascending
/// pass over the palette records the harmonic prefix at every needed cut, so
/// sweeping all `n` costs one traversal instead of one per `n`.
pub fn harmonic_gap_batch(k: u32, ns: &[u32]) -> Result<Vec<f64>> {
    let size = palette_size(k)?;
    if size > 1 << 20 {
        return ns.iter().map(|&n| harmonic_gap(k, n)).collect();
    }
    let cuts: std::collections::BTreeSet<u64> = ns
        .iter()
        .map(|&n| crate::model::quota(k, n).map(|q| size - q))
        .collect::<Result<_>>()?;
    let mut prefix = BTreeMap::new(); // cut -> H(cut)
    prefix.insert(0u64, 0.0);
    let mut acc = KahanSum::default();
    for j in 1..=size {
        acc.add(1.0 / j as f64);
        if cuts.contains(&j) {
            prefix.insert(j, acc.value());
        }
    }
    let total = acc.value();
    ns.iter()
        .map(|&n| {
            let cut = size - crate::model::quota(k, n)?;
            Ok(total - prefix[&cut])
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Color equivalence classes
// ---------------------------------------------------------------------------

/// Palette-`k` colors of an edge's candidate set, grouped by which edge
/// members already hold them. Counts are exact and sum to the palette size.
#[derive(Debug, Clone)]
pub struct ColorClasses {
    /// Held-color classes, ascending by smallest member color:
    /// (holder bitmask over edge positions, #colors, smallest color).
    pub held: Vec<(u128, u64, u64)>,
    /// Colors no edge member holds.
    pub fresh_count: u64,
    /// Smallest fresh color, when one exists.
    pub fresh_min: Option<u64>,
    /// Palette size `2^k`.
    pub size: u64,
}

/// Group palette `kstar`'s colors by their holder set among `edge`'s nodes.
///
/// Cost is proportional to the edge members' gathered sets in this palette,
/// never to the palette size. Edges wider than 128 nodes exceed the bitmask
/// and get a capacity error.
pub fn color_classes(engine: &EngineState, edge: &[u32], kstar: u32) -> Result<ColorClasses> {
    let size = palette_size(kstar)?;
    if edge.len() > 128 {
        return Err(Error::Capacity(format!(
            "candidate enumeration supports edges of at most 128 nodes, got {}",
            edge.len()
        )));
    }
    let mut held: Vec<(u64, u32)> = Vec::new(); // (color, member position)
    for (pos, &v) in edge.iter().enumerate() {
        if let Some(set) = engine.node(v).gathered(kstar) {
            held.extend(set.iter().map(|c| (c.get(), pos as u32)));
        }
    }
    held.sort_unstable();

    let mut by_mask: BTreeMap<u128, (u64, u64)> = BTreeMap::new(); // mask -> (count, min color)
    let mut distinct = 0u64;
    let mut fresh_min = None;
    let (lo, _) = palette_range(kstar)?;
    let mut next_free = lo.get();
    let mut i = 0;
    while i < held.len() {
        let color = held[i].0;
        let mut mask = 0u128;
        while i < held.len() && held[i].0 == color {
            mask |= 1u128 << held[i].1;
            i += 1;
        }
        distinct += 1;
        if fresh_min.is_none() {
            if color == next_free {
                next_free += 1;
            } else {
                fresh_min = Some(next_free);
            }
        }
        let entry = by_mask.entry(mask).or_insert((0, color));
        entry.0 += 1;
    }
    if fresh_min.is_none() && next_free < lo.get() + size {
        fresh_min = Some(next_free);
    }

    let mut held_classes: Vec<(u128, u64, u64)> = by_mask
        .into_iter()
        .map(|(mask, (count, min_color))| (mask, count, min_color))
        .collect();
    held_classes.sort_unstable_by_key(|&(_, _, min_color)| min_color);

    Ok(ColorClasses {
        held: held_classes,
        fresh_count: size - distinct,
        fresh_min,
        size,
    })
}

// ---------------------------------------------------------------------------
// The potential
// ---------------------------------------------------------------------------

/// Snapshot of the per-node scores and their exponential sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialView {
    pub z: Vec<f64>,
    pub phi: f64,
}

/// Incrementally maintained potential over an [`EngineState`].
#[derive(Debug, Clone)]
pub struct Potential {
    params: PaletteParams,
    costs: GatherCosts,
    z: Vec<f64>,
    exp_z: Vec<f64>,
    phi: f64,
    rebase_every: u64,
    since_rebase: u64,
}

/// One edge member inside a [`StepContext`]: its id and `e^{z + δw}` — the
/// candidate-independent part of its post-step term.
#[derive(Debug, Clone)]
pub struct Member {
    pub node: u32,
    pub ew: f64,
}

/// Per-palette candidate data: exact color classes plus each member's
/// (nonpositive) Φ contribution `ew·(e^{δd} − 1)` if it newly gains a color.
#[derive(Debug, Clone)]
pub struct PaletteCandidates {
    pub k: u32,
    pub classes: ColorClasses,
    pub gain: Vec<f64>,
}

/// Everything needed to evaluate all candidates of one step: built once,
/// then minimum / expectation / single-candidate Φ are cheap class walks.
#[derive(Debug, Clone)]
pub struct StepContext {
    pub min_phase: u32,
    pub phi_pre: f64,
    /// Σ of `e^{z_i}` over nodes outside the edge.
    pub base_out: f64,
    /// Φ if no member gains a new color: `base_out + Σ ew`.
    pub phi_no_gain: f64,
    pub members: Vec<Member>,
    pub palettes: Vec<PaletteCandidates>,
}

impl Potential {
    /// Scheduled full-recompute cadence for the incremental Φ.
    pub const REBASE_EVERY: u64 = 1024;

    /// Potential of a fresh engine: all scores 0, `Φ = n` exactly.
    pub fn new(engine: &EngineState) -> Result<Self> {
        let n = engine.n() as usize;
        let mut p = Potential {
            params: engine.params(),
            costs: GatherCosts::new(engine.params().window())?,
            z: vec![0.0; n],
            exp_z: vec![1.0; n],
            phi: n as f64,
            rebase_every: Self::REBASE_EVERY,
            since_rebase: 0,
        };
        if engine.step() > 0 {
            p.recompute(engine)?;
        }
        Ok(p)
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn z(&self, node: u32) -> f64 {
        self.z[(node - 1) as usize]
    }

    /// Largest per-node score; `Φ ≤ n` forces this below `ln n`.
    pub fn max_z(&self) -> f64 {
        self.z.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn view(&self) -> PotentialView {
        PotentialView {
            z: self.z.clone(),
            phi: self.phi,
        }
    }

    /// Score increment for a window hit at phase `p`: `1/(4h·2^p)`.
    fn w_delta(&self, p: u32) -> f64 {
        1.0 / (4.0 * f64::from(self.params.window()) * pow2f(p))
    }

    /// Score increment for gaining the `(m+1)`-th color of palette `k`:
    /// `−Δcost/(2h·2^k)` (always negative).
    fn gain_delta(&mut self, k: u32, m: u64) -> Result<f64> {
        let d = self.costs.delta(k, m)?;
        Ok(-d / (2.0 * f64::from(self.params.window()) * pow2f(k)))
    }

    /// Recompute every score and Φ from the engine state alone, replacing the
    /// incremental values. Returns the fresh Φ.
    pub fn recompute(&mut self, engine: &EngineState) -> Result<f64> {
        let h = f64::from(self.params.window());
        let mut phi = KahanSum::default();
        for (idx, node) in engine.nodes().iter().enumerate() {
            let keys: std::collections::BTreeSet<u32> = node
                .window_hit_entries()
                .map(|(k, _)| k)
                .chain(node.gathered_entries().map(|(k, _)| k))
                .collect();
            let mut z = KahanSum::default();
            for k in keys {
                let w = node.window_hits(k) as f64;
                let cost = self.costs.value(k, node.gathered_count(k))?;
                z.add((w - 2.0 * cost) / (4.0 * h * pow2f(k)));
            }
            self.z[idx] = z.value();
            self.exp_z[idx] = z.value().exp();
            phi.add(self.exp_z[idx]);
        }
        self.phi = phi.value();
        self.since_rebase = 0;
        Ok(self.phi)
    }

    /// Fold one applied step into the scores and Φ; rebases on schedule.
    /// Returns the post-step Φ.
    pub fn advance(&mut self, engine_after: &EngineState, effect: &StepEffect) -> Result<f64> {
        for ne in &effect.nodes {
            let mut dz = 0.0;
            if ne.in_window {
                dz += self.w_delta(ne.pre_phase);
            }
            if ne.gained {
                dz += self.gain_delta(effect.palette, ne.pre_gathered)?;
            }
            let idx = (ne.node - 1) as usize;
            self.z[idx] += dz;
            let e = self.z[idx].exp();
            self.phi += e - self.exp_z[idx];
            self.exp_z[idx] = e;
        }
        self.since_rebase += 1;
        if self.since_rebase >= self.rebase_every {
            self.recompute(engine_after)?;
        }
        Ok(self.phi)
    }

    /// Build the per-step candidate context for `edge`: member terms, color
    /// classes and gain deltas for every palette in the candidate window.
    pub fn step_context(&mut self, engine: &EngineState, edge: &[u32]) -> Result<StepContext> {
        let min_phase = engine.min_phase(edge)?;
        let window = self.params.window();
        if min_phase + window - 1 > MAX_PHASE {
            return Err(Error::PhaseOverflow(min_phase + window - 1));
        }

        // Σ e^{z} over non-members, summed directly (no cancellation).
        let mut base_out = KahanSum::default();
        {
            let mut it = edge.iter().peekable();
            for id in 1..=engine.n() {
                if it.peek() == Some(&&id) {
                    it.next();
                } else {
                    base_out.add(self.exp_z[(id - 1) as usize]);
                }
            }
        }

        let mut members = Vec::with_capacity(edge.len());
        let mut phi_no_gain = KahanSum {
            sum: base_out.value(),
            comp: 0.0,
        };
        for &v in edge {
            let p = engine.node(v).phase();
            let z = self.z[(v - 1) as usize];
            let ew = if p < min_phase + window {
                (z + self.w_delta(p)).exp()
            } else {
                self.exp_z[(v - 1) as usize]
            };
            phi_no_gain.add(ew);
            members.push(Member { node: v, ew });
        }

        let mut palettes = Vec::with_capacity(window as usize);
        for k in min_phase..min_phase + window {
            let classes = color_classes(engine, edge, k)?;
            let mut gain = Vec::with_capacity(members.len());
            for (pos, m) in members.iter().enumerate() {
                let held = engine.node(edge[pos]).gathered_count(k);
                if held >= classes.size {
                    gain.push(0.0); // holds the whole palette; can never gain
                } else {
                    gain.push(m.ew * self.gain_delta(k, held)?.exp_m1());
                }
            }
            palettes.push(PaletteCandidates { k, classes, gain });
        }

        Ok(StepContext {
            min_phase,
            phi_pre: self.phi,
            base_out: base_out.value(),
            phi_no_gain: phi_no_gain.value(),
            members,
            palettes,
        })
    }

    /// Φ of the state [`EngineState::apply_color`] would produce for one
    /// concrete candidate, computed incrementally (only edge members move).
    pub fn phi_after_candidate(
        &mut self,
        engine: &EngineState,
        edge: &[u32],
        kstar: u32,
        color: Color,
    ) -> Result<f64> {
        let ctx = self.step_context(engine, edge)?;
        let pi = ctx
            .palettes
            .iter()
            .position(|p| p.k == kstar)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "palette {kstar} outside candidate window [{}, {}]",
                    ctx.min_phase,
                    ctx.min_phase + self.params.window() - 1
                ))
            })?;
        let (lo, hi) = palette_range(kstar)?;
        if color < lo || color > hi {
            return Err(Error::InvalidArgument(format!(
                "color {color} not in palette {kstar}"
            )));
        }
        let mut holders = 0u128;
        for (pos, &v) in edge.iter().enumerate() {
            if engine.node(v).has_color(color) {
                holders |= 1u128 << pos;
            }
        }
        Ok(ctx.phi_after_class(pi, holders))
    }
}

impl StepContext {
    /// Φ after a candidate whose color is already held by exactly the member
    /// positions in `holders` (everyone else gains).
    pub fn phi_after_class(&self, palette_idx: usize, holders: u128) -> f64 {
        let pc = &self.palettes[palette_idx];
        let mut phi = self.phi_no_gain;
        for (pos, g) in pc.gain.iter().enumerate() {
            if holders & (1u128 << pos) == 0 {
                phi += g;
            }
        }
        phi
    }

    /// Φ after a fresh (unheld) color of this palette: every member gains.
    /// Exactly the empty-holders class, so that classed and raw-color
    /// evaluation of the same candidate agree bit for bit.
    pub fn phi_after_fresh(&self, palette_idx: usize) -> f64 {
        self.phi_after_class(palette_idx, 0)
    }

    /// Exact expected Φ over the uniform candidate distribution (palette
    /// uniform over the window, color uniform within the palette), via the
    /// class decomposition.
    pub fn expected_phi(&self) -> f64 {
        let h = self.palettes.len() as f64;
        let mut total = KahanSum::default();
        for (pi, pc) in self.palettes.iter().enumerate() {
            let mut palette_sum = KahanSum::default();
            if pc.classes.fresh_count > 0 {
                palette_sum.add(pc.classes.fresh_count as f64 * self.phi_after_fresh(pi));
            }
            for &(mask, count, _) in &pc.classes.held {
                palette_sum.add(count as f64 * self.phi_after_class(pi, mask));
            }
            total.add(palette_sum.value() / pc.classes.size as f64);
        }
        total.value() / h
    }

    /// Total number of raw `(palette, color)` candidates.
    pub fn candidate_count(&self) -> u64 {
        self.palettes.iter().map(|p| p.classes.size).sum()
    }
}

/// Exact expected Φ after the next step on `edge` — the supermartingale
/// quantity. Equals the class-weighted mean of `phi_after_candidate` over
/// every candidate.
pub fn exact_expected_phi(
    potential: &mut Potential,
    engine: &EngineState,
    edge: &[u32],
) -> Result<f64> {
    Ok(potential.step_context(engine, edge)?.expected_phi())
}

/// Probability (exact rational) that the next step on `edge` grows
/// `|gathered[p(node)]|` for `node`, computed by enumerating candidate
/// classes with their exact masses. For an in-window node this is
/// `(2^p − c)/(h·2^p)`; for a node the window has passed it is 0.
pub fn check_growth_probability(
    engine: &EngineState,
    edge: &[u32],
    node: u32,
) -> Result<BigRational> {
    let min_phase = engine.min_phase(edge)?;
    let pos = edge
        .binary_search(&node)
        .map_err(|_| Error::InvalidArgument(format!("node {node} not in edge")))?;
    let window = engine.params().window();
    let p = engine.node(node).phase();

    let mut total = BigRational::zero();
    for k in min_phase..min_phase + window {
        let classes = color_classes(engine, edge, k)?;
        let mass = |count: u64| {
            BigRational::new(
                BigInt::from(count),
                BigInt::from(window) * (BigInt::from(1) << k),
            )
        };
        // A candidate grows the node's phase-p count iff it sits in palette p
        // and the node does not already hold the color.
        if k == p {
            if classes.fresh_count > 0 {
                total += mass(classes.fresh_count);
            }
            for &(holders, count, _) in &classes.held {
                if holders & (1u128 << pos) == 0 {
                    total += mass(count);
                }
            }
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineState;
    use proptest::prelude::*;

    fn color(v: u64) -> Color {
        Color::new(v).unwrap()
    }

    // -- gather costs -------------------------------------------------------

    #[test]
    fn gather_cost_small_values() {
        assert_eq!(gather_cost(2, 0, 0).unwrap(), 0.0);
        // One color from a one-color palette: h · 1 draw.
        assert_eq!(gather_cost(2, 0, 1).unwrap(), 2.0);
        // h·(2/2 + 2/1) = 3h.
        assert_eq!(gather_cost(2, 1, 2).unwrap(), 6.0);
        assert!(gather_cost(2, 1, 3).is_err()); // beyond palette size
        assert!(gather_cost(0, 1, 1).is_err());
        assert!(gather_cost(1, 62, 0).is_err());
    }

    #[test]
    fn cached_and_fresh_costs_agree_bitwise() {
        let mut table = GatherCosts::new(3).unwrap();
        // Extend in stages; each value must equal a from-scratch accumulation.
        for m in [1u64, 2, 7, 8, 64, 200, 256] {
            let cached = table.value(8, m).unwrap();
            let fresh = gather_cost(3, 8, m).unwrap();
            assert_eq!(cached.to_bits(), fresh.to_bits(), "m = {m}");
        }
        let d = table.delta(8, 0).unwrap();
        assert_eq!(d, table.value(8, 1).unwrap());
    }

    #[test]
    fn gather_cost_is_increasing_and_superlinear_at_the_tail() {
        let mut table = GatherCosts::new(1).unwrap();
        let size = 64u64;
        let mut prev = 0.0;
        for m in 1..=size {
            let v = table.value(6, m).unwrap();
            assert!(v > prev);
            prev = v;
        }
        // Collecting everything costs ~2^k·H(2^k), far above 2^k.
        assert!(prev > 64.0 * 4.0);
    }

    // -- harmonic gap -------------------------------------------------------

    #[test]
    fn harmonic_gap_hand_values() {
        // k = 0: quota 1, gap = 1/1.
        assert_eq!(harmonic_gap(0, 2).unwrap(), 1.0);
        // k = 3, n = 8: 2^3 < 2n, so the quota is the whole palette and the
        // gap is H(8) − H(0) = H(8).
        let h8: f64 = (1..=8).map(|j| 1.0 / j as f64).sum();
        assert!((harmonic_gap(3, 8).unwrap() - h8).abs() < 1e-12);
        // k = 3, n = 4: quota ⌈7·8/8⌉ = 7, gap = H(8) − H(1).
        assert!((harmonic_gap(3, 4).unwrap() - (h8 - 1.0)).abs() < 1e-12);
        // k = 3, n = 2: quota 6, gap = 1/3 + … + 1/8.
        let tail: f64 = (3..=8).map(|j| 1.0 / j as f64).sum();
        assert!((harmonic_gap(3, 2).unwrap() - tail).abs() < 1e-12);
    }

    #[test]
    fn harmonic_gap_batch_matches_standalone() {
        let ns: Vec<u32> = (1..=64).collect();
        for k in [0u32, 1, 4, 9, 14] {
            let batch = harmonic_gap_batch(k, &ns).unwrap();
            for (i, &n) in ns.iter().enumerate() {
                let solo = harmonic_gap(k, n).unwrap();
                assert!(
                    (batch[i] - solo).abs() <= 1e-12 * solo.abs().max(1.0),
                    "k = {k}, n = {n}: {} vs {}",
                    batch[i],
                    solo
                );
            }
        }
    }

    proptest! {
        #[test]
        fn harmonic_gap_stays_below_ln4en(k in 0u32..=14, n in 1u32..=64) {
            let gap = harmonic_gap(k, n).unwrap();
            let bound = (4.0 * std::f64::consts::E * f64::from(n)).ln();
            prop_assert!(gap <= bound + 1e-12, "k={k} n={n}: {gap} vs {bound}");
        }
    }

    // -- potential ----------------------------------------------------------

    #[test]
    fn fresh_potential_is_n() {
        let eng = EngineState::init(3).unwrap();
        let pot = Potential::new(&eng).unwrap();
        assert_eq!(pot.phi(), 3.0);
        assert_eq!(pot.view().z, vec![0.0; 3]);
    }

    #[test]
    fn recompute_matches_hand_built_state() {
        // A node with one window hit at phase 0 and nothing gathered:
        // z = (1 − 0)/(4·h·1) = 1/4 for h = 1, Φ = e^{1/4}.
        let snap = r#"{
            "params": {"n": 1, "window": 1},
            "step": 1,
            "nodes": [{
                "phase": 0,
                "gathered": {},
                "window_hits": {"0": 1},
                "ahead_hits": {},
                "degree": 1
            }],
            "gatherers": {},
            "fully_used": 0,
            "window_totals": [1]
        }"#;
        let eng: EngineState = serde_json::from_str(snap).unwrap();
        let mut pot = Potential::new(&eng).unwrap();
        let phi = pot.recompute(&eng).unwrap();
        assert_eq!(pot.z(1), 0.25);
        assert!((phi - 0.25f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn first_step_drops_phi_to_2_exp_quarter() {
        // n = 2: applying (palette 0, color 1) to {1,2} gives both nodes
        // z = (1 − 2·cost(0,1))/4 = −1/4, so Φ = 2e^{−1/4} < 2.
        let mut eng = EngineState::init(2).unwrap();
        let mut pot = Potential::new(&eng).unwrap();
        let predicted = pot
            .phi_after_candidate(&eng, &[1, 2], 0, color(1))
            .unwrap();
        let eff = eng.apply_color(&[1, 2], 0, color(1)).unwrap();
        let phi = pot.advance(&eng, &eff).unwrap();
        let expect = 2.0 * (-0.25f64).exp();
        assert!((phi - expect).abs() < 1e-12, "{phi} vs {expect}");
        assert!((predicted - phi).abs() <= tolerance(phi));
        let scratch = pot.recompute(&eng).unwrap();
        assert!((scratch - expect).abs() < 1e-12);
    }

    #[test]
    fn no_gain_candidate_raises_phi_by_the_window_factor() {
        // Both nodes hold color 2 and sit in phase 1 (h = 1, window {1}).
        // Re-offering color 2 gains nobody anything: Φ_after = Φ·e^{1/8}.
        let mut eng = EngineState::init(2).unwrap();
        let mut pot = Potential::new(&eng).unwrap();
        for (k, c) in [(0u32, 1u64), (1, 2)] {
            let eff = eng.apply_color(&[1, 2], k, color(c)).unwrap();
            pot.advance(&eng, &eff).unwrap();
        }
        let phi = pot.phi();
        let after = pot
            .phi_after_candidate(&eng, &[1, 2], 1, color(2))
            .unwrap();
        let expect = phi * 0.125f64.exp();
        assert!(after > phi);
        assert!((after - expect).abs() <= tolerance(expect));
    }

    /// Drive a deterministic mixed workload, checking after every step that
    /// the incremental Φ agrees with a from-scratch recompute.
    #[test]
    fn incremental_phi_tracks_scratch_recompute() {
        let mut eng = EngineState::init(5).unwrap();
        let mut pot = Potential::new(&eng).unwrap();
        let mut scratch = Potential::new(&eng).unwrap();
        for i in 0..400u64 {
            let edge: Vec<u32> = match i % 3 {
                0 => vec![1, 2, 3, 4, 5],
                1 => vec![1, 3, 5],
                _ => vec![2, 4],
            };
            let ps = eng.min_phase(&edge).unwrap();
            let kstar = ps + (i % u64::from(eng.params().window())) as u32;
            let (lo, hi) = palette_range(kstar).unwrap();
            let c = Color::new(lo.get() + (i * 13) % (hi.get() - lo.get() + 1)).unwrap();
            let predicted = pot.phi_after_candidate(&eng, &edge, kstar, c).unwrap();
            let eff = eng.apply_color(&edge, kstar, c).unwrap();
            let phi = pot.advance(&eng, &eff).unwrap();
            let fresh = scratch.recompute(&eng).unwrap();
            assert!(
                (phi - fresh).abs() <= tolerance(fresh),
                "step {i}: incremental {phi} vs scratch {fresh}"
            );
            assert!(
                (predicted - fresh).abs() <= tolerance(fresh),
                "step {i}: predicted {predicted} vs scratch {fresh}"
            );
        }
    }

    #[test]
    fn expectation_equals_single_candidate_when_unique() {
        let eng = EngineState::init(2).unwrap();
        let mut pot = Potential::new(&eng).unwrap();
        let e = exact_expected_phi(&mut pot, &eng, &[1, 2]).unwrap();
        let single = pot
            .phi_after_candidate(&eng, &[1, 2], 0, color(1))
            .unwrap();
        assert!((e - single).abs() < 1e-15);
        // A second expectation stays put — the context build must not mutate.
        let _ = eng;
    }

    /// Brute-force oracle: enumerate every raw candidate, apply it to a
    /// cloned engine, recompute Φ from scratch, and average. The classed
    /// expectation must match.
    fn naive_expected_phi(eng: &EngineState, edge: &[u32]) -> f64 {
        let ps = eng.min_phase(edge).unwrap();
        let window = eng.params().window();
        let mut total = 0.0;
        for k in ps..ps + window {
            let (lo, hi) = palette_range(k).unwrap();
            let size = (hi.get() - lo.get() + 1) as f64;
            let mut palette_sum = 0.0;
            for c in lo.get()..=hi.get() {
                let mut clone = eng.clone();
                clone
                    .apply_color(edge, k, Color::new(c).unwrap())
                    .unwrap();
                let mut pot = Potential::new(&clone).unwrap();
                palette_sum += pot.recompute(&clone).unwrap();
            }
            total += palette_sum / size;
        }
        total / f64::from(window)
    }

    #[test]
    fn classed_expectation_matches_naive_enumeration() {
        let mut eng = EngineState::init(4).unwrap();
        let mut pot = Potential::new(&eng).unwrap();
        // Walk a few steps so classes are nontrivial, checking each state.
        let script: &[(Vec<u32>, u32, u64)] = &[
            (vec![1, 2, 3, 4], 0, 1),
            (vec![1, 2], 1, 2),
            (vec![3, 4], 1, 2),
            (vec![1, 3], 1, 3),
            (vec![1, 2, 3, 4], 1, 3),
            (vec![2, 4], 2, 5),
        ];
        for (edge, k, c) in script {
            let classed = exact_expected_phi(&mut pot, &eng, edge).unwrap();
            let naive = naive_expected_phi(&eng, edge);
            assert!(
                (classed - naive).abs() <= tolerance(naive),
                "{classed} vs {naive}"
            );
            // Supermartingale: the expectation never exceeds the current Φ.
            assert!(classed <= pot.phi() + tolerance(pot.phi()));
            let eff = eng.apply_color(edge, *k, color(*c)).unwrap();
            pot.advance(&eng, &eff).unwrap();
        }
    }

    #[test]
    fn class_counts_partition_the_palette() {
        let mut eng = EngineState::init(4).unwrap();
        for c in [2u64, 3] {
            eng.apply_color(&[1, 2], 1, color(c)).unwrap();
        }
        eng.apply_color(&[3], 1, color(2)).unwrap();
        let classes = color_classes(&eng, &[1, 2, 3], 1).unwrap();
        let held_total: u64 = classes.held.iter().map(|&(_, c, _)| c).sum();
        assert_eq!(held_total + classes.fresh_count, classes.size);
        assert_eq!(classes.fresh_count, 0); // palette 1 = {2,3}, both held
        assert_eq!(classes.fresh_min, None);
        // Color 2 held by {1,2,3}, color 3 by {1,2}: two classes.
        assert_eq!(classes.held.len(), 2);
        assert_eq!(classes.held[0], (0b111, 1, 2));
        assert_eq!(classes.held[1], (0b011, 1, 3));
    }

    // -- growth probability -------------------------------------------------

    #[test]
    fn growth_probability_exact_values() {
        use num_traits::One;
        // Fresh n = 2: the single candidate (palette 0, color 1) certainly
        // grows node 1's phase-0 count. h = 1, 2^0 = 1 ⇒ probability 1.
        let eng = EngineState::init(2).unwrap();
        let p = check_growth_probability(&eng, &[1, 2], 1).unwrap();
        assert!(p.is_one());

        // Fresh n = 4 (h = 2): (2^0 − 0)/(2·2^0) = 1/2.
        let eng = EngineState::init(4).unwrap();
        let p = check_growth_probability(&eng, &[1, 2, 3, 4], 2).unwrap();
        assert_eq!(p, BigRational::new(BigInt::from(1), BigInt::from(2)));

        // Node at phase 1 holding one of palette 1's two colors, window
        // [0, 1] (h = 2): (2 − 1)/(2·2) = 1/4.
        let mut eng = EngineState::init(4).unwrap();
        eng.apply_color(&[1], 0, color(1)).unwrap(); // node 1 → phase 1
        eng.apply_color(&[1], 1, color(2)).unwrap(); // c_{1,1} = 1
        assert_eq!(eng.node(1).phase(), 1);
        let p = check_growth_probability(&eng, &[1, 2], 1).unwrap();
        assert_eq!(p, BigRational::new(BigInt::from(1), BigInt::from(4)));
    }

    #[test]
    fn growth_probability_zero_once_window_passes() {
        // n = 2, h = 1: node 1 at phase 1, edge window stuck at {0}.
        let mut eng = EngineState::init(2).unwrap();
        eng.apply_color(&[1], 0, color(1)).unwrap();
        let p = check_growth_probability(&eng, &[1, 2], 1).unwrap();
        assert!(p.is_zero());
        // And the formula's in-window form for node 2: (1 − 0)/(1·1) = 1.
        let q = check_growth_probability(&eng, &[1, 2], 2).unwrap();
        use num_traits::One;
        assert!(q.is_one());
        assert!(check_growth_probability(&eng, &[2], 1).is_err()); // not in edge
    }

    proptest! {
        /// Growth probability equals the closed form (2^p − c)/(h·2^p) for
        /// in-window nodes, on randomized reachable states.
        #[test]
        fn growth_probability_matches_closed_form(seed in 0u64..500) {
            let mut eng = EngineState::init(4).unwrap();
            let mut x = seed;
            let mut next = |m: u64| {
                x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (x >> 33) % m
            };
            for _ in 0..(next(30) + 1) {
                let edge: Vec<u32> = match next(3) {
                    0 => vec![1, 2, 3, 4],
                    1 => vec![1, 2 + next(2) as u32 * 2],
                    _ => vec![2, 3],
                };
                let ps = eng.min_phase(&edge).unwrap();
                let k = ps + next(2) as u32;
                let (lo, hi) = palette_range(k).unwrap();
                let c = Color::new(lo.get() + next(hi.get() - lo.get() + 1)).unwrap();
                eng.apply_color(&edge, k, c).unwrap();
            }
            let edge = vec![1u32, 2, 3, 4];
            let ps = eng.min_phase(&edge).unwrap();
            let h = eng.params().window();
            for node in 1..=4u32 {
                let got = check_growth_probability(&eng, &edge, node).unwrap();
                let p = eng.node(node).phase();
                let expect = if p < ps + h {
                    let size = 1u64 << p;
                    BigRational::new(
                        BigInt::from(size - eng.node(node).gathered_count(p)),
                        BigInt::from(h) * BigInt::from(size),
                    )
                } else {
                    BigRational::zero()
                };
                prop_assert_eq!(got, expect);
            }
        }
    }
}
