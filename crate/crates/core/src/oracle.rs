//! Offline ground truth and competitive-bound evaluation.
//!
//! The offline problem — partition the hyperedge multiset into the maximum
//! number of disjoint set covers — is NP-complete, so the exact solver
//! ([`exact_opt`]) is a branch-and-bound over edge→class assignments meant
//! for small instances (≤ [`DEFAULT_ORACLE_BUDGET`] edges). Beyond the
//! budget it degrades honestly: `exact = false` and only the universal
//! upper bound `opt ≤ δ(E)` (the minimum node degree) is reported.
//!
//! [`enumerated_opt`] is a deliberately naive oracle that enumerates every
//! assignment outright; it exists as a differential check on the solver.
//!
//! [`competitive_check`] evaluates the guarantee an online run is held to:
//! `gain ≥ (δ(E) − r)/(4r)` with `r = 24·h·ln(4e·n)`, plus the OPT form
//! `gain ≥ OPT/(96·h·ln(4e·n)) − 1/4` when OPT is exact.

use serde::{Deserialize, Serialize};

use crate::model::{InstanceSpec, PaletteParams};
use crate::potential::ln_4en;
use crate::{Error, Result};

/// Edge budget above which [`exact_opt`] falls back to the δ(E) bound.
pub const DEFAULT_ORACLE_BUDGET: usize = 14;

/// Result of offline analysis of an instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OfflineResult {
    /// Maximum number of disjoint set covers when `exact`, otherwise the
    /// δ(E) upper bound.
    pub opt: u64,
    /// When exact: class of each edge in arrival order (`0` = unused,
    /// `1..=opt` = cover classes).
    pub witness: Option<Vec<u32>>,
    /// Minimum node degree δ(E); `opt ≤ δ(E)` always.
    pub min_degree: u64,
    pub exact: bool,
}

/// Does the union of the selected edges cover every node?
pub fn is_set_cover(instance: &InstanceSpec, selection: &[usize]) -> Result<bool> {
    let m = instance.edges().len();
    let mut covered = vec![false; instance.n() as usize];
    for &idx in selection {
        if idx >= m {
            return Err(Error::InvalidArgument(format!(
                "edge index {idx} out of range for {m} edges"
            )));
        }
        for &v in &instance.edges()[idx] {
            covered[(v - 1) as usize] = true;
        }
    }
    Ok(covered.iter().all(|&c| c))
}

/// Validate that a witness is a family of `opt` mutually disjoint set
/// covers (used by tests and the oracle verification suite).
pub fn validate_witness(instance: &InstanceSpec, result: &OfflineResult) -> Result<()> {
    let witness = result
        .witness
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("result carries no witness".into()))?;
    if witness.len() != instance.edges().len() {
        return Err(Error::InvalidArgument(format!(
            "witness length {} != edge count {}",
            witness.len(),
            instance.edges().len()
        )));
    }
    for class in 1..=result.opt {
        let selection: Vec<usize> = witness
            .iter()
            .enumerate()
            .filter(|&(_, &c)| u64::from(c) == class)
            .map(|(i, _)| i)
            .collect();
        if !is_set_cover(instance, &selection)? {
            return Err(Error::InvalidArgument(format!(
                "witness class {class} is not a set cover"
            )));
        }
    }
    if witness.iter().any(|&c| u64::from(c) > result.opt) {
        return Err(Error::InvalidArgument(
            "witness references a class beyond opt".into(),
        ));
    }
    Ok(())
}

fn edge_masks(instance: &InstanceSpec) -> (Vec<u128>, u128) {
    let n = instance.n();
    let full = if n == 128 {
        u128::MAX
    } else {
        (1u128 << n) - 1
    };
    let masks = instance
        .edges()
        .iter()
        .map(|edge| edge.iter().fold(0u128, |m, &v| m | (1u128 << (v - 1))))
        .collect();
    (masks, full)
}

struct Partitioner<'a> {
    masks: &'a [u128],
    /// `suffix[i]` = union of masks `i..`.
    suffix: Vec<u128>,
    /// `supply[i][v]` = #edges at positions `i..` containing node `v`.
    supply: Vec<Vec<u16>>,
    full: u128,
    n: usize,
    k: u64,
    class_masks: Vec<u128>,
    /// Per node: #classes currently covering it.
    covered_by: Vec<u16>,
    assign: Vec<u32>,
}

impl<'a> Partitioner<'a> {
    fn new(masks: &'a [u128], full: u128, n: usize, k: u64) -> Self {
        let m = masks.len();
        let mut suffix = vec![0u128; m + 1];
        let mut supply = vec![vec![0u16; n]; m + 1];
        for i in (0..m).rev() {
            suffix[i] = suffix[i + 1] | masks[i];
            let mut row = supply[i + 1].clone();
            for (v, count) in row.iter_mut().enumerate() {
                if masks[i] & (1u128 << v) != 0 {
                    *count += 1;
                }
            }
            supply[i] = row;
        }
        Partitioner {
            masks,
            suffix,
            supply,
            full,
            n,
            k,
            class_masks: vec![0u128; k as usize],
            covered_by: vec![0u16; n],
            assign: vec![0u32; m],
        }
    }

    /// Can edges `i..` complete every class, given current coverage?
    fn feasible(&self, i: usize) -> bool {
        for &cm in &self.class_masks {
            if cm | self.suffix[i] != self.full {
                return false;
            }
        }
        for v in 0..self.n {
            if u64::from(self.covered_by[v]) + u64::from(self.supply[i][v]) < self.k {
                return false;
            }
        }
        true
    }

    fn search(&mut self, i: usize) -> bool {
        if !self.feasible(i) {
            return false;
        }
        if i == self.masks.len() {
            return true; // feasible(i) already forced every class to `full`
        }
        let mask = self.masks[i];
        let mut tried_empty = false;
        for j in 0..self.class_masks.len() {
            let old = self.class_masks[j];
            if old == 0 {
                // Empty classes are interchangeable; open only the first.
                if tried_empty {
                    continue;
                }
                tried_empty = true;
            }
            let added = mask & !old;
            if added == 0 {
                continue; // contributes nothing here; discarding dominates
            }
            self.class_masks[j] = old | mask;
            let mut bits = added;
            while bits != 0 {
                let v = bits.trailing_zeros() as usize;
                self.covered_by[v] += 1;
                bits &= bits - 1;
            }
            self.assign[i] = (j + 1) as u32;
            if self.search(i + 1) {
                return true;
            }
            self.assign[i] = 0;
            self.class_masks[j] = old;
            let mut bits = added;
            while bits != 0 {
                let v = bits.trailing_zeros() as usize;
                self.covered_by[v] -= 1;
                bits &= bits - 1;
            }
        }
        self.search(i + 1) // discard the edge
    }
}

/// Exact maximum number of disjoint set covers, by branch-and-bound over
/// edge→class assignments. Instances beyond `budget` edges (or 128 nodes)
/// yield `exact = false` with the δ(E) upper bound.
pub fn exact_opt(instance: &InstanceSpec, budget: usize) -> Result<OfflineResult> {
    let m = instance.edges().len();
    let min_degree = instance.min_degree();
    if min_degree == 0 {
        return Ok(OfflineResult {
            opt: 0,
            witness: Some(vec![0; m]),
            min_degree,
            exact: true,
        });
    }
    if m > budget || instance.n() > 128 {
        return Ok(OfflineResult {
            opt: min_degree,
            witness: None,
            min_degree,
            exact: false,
        });
    }
    let (masks, full) = edge_masks(instance);
    // Assign big edges first: they constrain classes the most.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(masks[i].count_ones()), i));
    let sorted: Vec<u128> = order.iter().map(|&i| masks[i]).collect();

    // k is feasible ⇒ k−1 is (drop a class), so the first success walking
    // down from δ(E) is the optimum; δ(E) ≥ 1 makes k = 1 always feasible.
    for k in (1..=min_degree).rev() {
        let mut p = Partitioner::new(&sorted, full, instance.n() as usize, k);
        if p.search(0) {
            let mut witness = vec![0u32; m];
            for (pos, &orig) in order.iter().enumerate() {
                witness[orig] = p.assign[pos];
            }
            return Ok(OfflineResult {
                opt: k,
                witness: Some(witness),
                min_degree,
                exact: true,
            });
        }
    }
    unreachable!("min_degree ≥ 1 makes k = 1 feasible");
}

/// Naive differential oracle: enumerate *every* assignment of edges to
/// classes `{unused, 1..δ(E)}` and count cover classes. State count is
/// capped; use only on tiny instances.
pub fn enumerated_opt(instance: &InstanceSpec) -> Result<OfflineResult> {
    let m = instance.edges().len();
    let min_degree = instance.min_degree();
    if m == 0 || min_degree == 0 {
        return Ok(OfflineResult {
            opt: 0,
            witness: Some(vec![0; m]),
            min_degree,
            exact: true,
        });
    }
    let classes = min_degree.min(m as u64);
    let states = (classes + 1)
        .checked_pow(m as u32)
        .filter(|&s| s <= 100_000_000)
        .ok_or_else(|| {
            Error::Capacity(format!(
                "naive enumeration over ({})^{m} assignments is too large",
                classes + 1
            ))
        })?;
    let (masks, full) = edge_masks(instance);

    let mut best = 0u64;
    let mut best_digits = vec![0u32; m];
    let mut digits = vec![0u32; m];
    for _ in 0..states {
        let mut class_masks = vec![0u128; classes as usize];
        for (e, &d) in digits.iter().enumerate() {
            if d > 0 {
                class_masks[(d - 1) as usize] |= masks[e];
            }
        }
        let covers = class_masks.iter().filter(|&&cm| cm == full).count() as u64;
        if covers > best {
            best = covers;
            best_digits.copy_from_slice(&digits);
        }
        // Odometer increment in base classes+1.
        for d in digits.iter_mut() {
            if u64::from(*d) < classes {
                *d += 1;
                break;
            }
            *d = 0;
        }
    }

    // Normalize the witness: keep only the classes that are covers,
    // renumbered 1..=best; everything else is unused.
    let mut class_masks = vec![0u128; classes as usize];
    for (e, &d) in best_digits.iter().enumerate() {
        if d > 0 {
            class_masks[(d - 1) as usize] |= masks[e];
        }
    }
    let mut renumber = vec![0u32; classes as usize + 1];
    let mut next = 0u32;
    for (j, &cm) in class_masks.iter().enumerate() {
        if cm == full {
            next += 1;
            renumber[j + 1] = next;
        }
    }
    let witness = best_digits
        .iter()
        .map(|&d| renumber[d as usize])
        .collect();
    Ok(OfflineResult {
        opt: best,
        witness: Some(witness),
        min_degree,
        exact: true,
    })
}

/// Verdict of the competitive guarantee for one finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CompetitiveVerdict {
    /// `gain ≥ (δ(E) − r)/(4r)`.
    pub holds: bool,
    /// `r = 24·h·ln(4e·n)`.
    pub r_bound: f64,
    /// `(δ(E) − r)/(4r)`.
    pub delta_threshold: f64,
    /// `gain/δ(E)` when δ(E) > 0.
    pub delta_ratio: Option<f64>,
    /// `OPT/(96·h·ln(4e·n)) − 1/4` when OPT is exact.
    pub opt_threshold: Option<f64>,
    pub opt_holds: Option<bool>,
    /// `gain/OPT` when OPT is exact and positive.
    pub opt_ratio: Option<f64>,
}

/// Evaluate the competitive guarantee: the δ(E)-based bound always, plus the
/// OPT-based form when the offline result is exact.
pub fn competitive_check(gain: u64, n: u32, offline: &OfflineResult) -> Result<CompetitiveVerdict> {
    let params = PaletteParams::new(n)?;
    let h = f64::from(params.window());
    let r = 24.0 * h * ln_4en(n);
    let g = gain as f64;
    let delta = offline.min_degree as f64;
    let delta_threshold = (delta - r) / (4.0 * r);
    let (opt_threshold, opt_holds, opt_ratio) = if offline.exact {
        let threshold = offline.opt as f64 / (96.0 * h * ln_4en(n)) - 0.25;
        (
            Some(threshold),
            Some(g >= threshold - 1e-12),
            (offline.opt > 0).then(|| g / offline.opt as f64),
        )
    } else {
        (None, None, None)
    };
    Ok(CompetitiveVerdict {
        holds: g >= delta_threshold - 1e-12,
        r_bound: r,
        delta_threshold,
        delta_ratio: (offline.min_degree > 0).then(|| g / delta),
        opt_threshold,
        opt_holds,
        opt_ratio,
    })
}
