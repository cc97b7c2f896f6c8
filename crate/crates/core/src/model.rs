//! Problem instances and palette geometry.
//!
//! An instance is a hypergraph on nodes `1..=n`; its edges arrive in list
//! order. Colors are positive 64-bit integers carved into consecutive
//! palettes that double in size: palette `k` is `{2^k, …, 2^{k+1}−1}`, so a
//! color's palette index is just the position of its highest set bit. A node
//! in phase `k` is trying to gather `quota(k, n) = ⌈(1 − 1/(2n)) · 2^k⌉`
//! distinct colors from palette `k`; the near-full quota is what lets covers
//! be extracted later: once every node finishes phase `k`, the colors of
//! palette `k` that *all* nodes hold number at least `2^{k−1}`.
//!
//! Everything here is exact integer arithmetic. Phases at `k ≥ 62` would not
//! fit the color space and are rejected rather than silently wrapped.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

/// Highest phase index whose palette still fits in a `u64` color space.
pub const MAX_PHASE: u32 = 61;

/// A color: a positive 64-bit integer. Its palette is implied by its value.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct Color(u64);

impl Color {
    pub fn new(value: u64) -> Result<Self> {
        if value == 0 {
            return Err(Error::InvalidArgument("color 0 does not exist".into()));
        }
        Ok(Color(value))
    }

    pub fn get(self) -> u64 {
        self.0
    }

    /// Palette index: the `k` with `2^k ≤ self < 2^{k+1}`.
    pub fn palette(self) -> u32 {
        63 - self.0.leading_zeros()
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Inclusive color range of palette `k`: `{2^k, …, 2^{k+1}−1}` (size `2^k`).
pub fn palette_range(k: u32) -> Result<(Color, Color)> {
    if k > MAX_PHASE {
        return Err(Error::PhaseOverflow(k));
    }
    let lo = 1u64 << k;
    Ok((Color(lo), Color(lo + (lo - 1))))
}

/// Number of colors in palette `k`.
pub fn palette_size(k: u32) -> Result<u64> {
    if k > MAX_PHASE {
        return Err(Error::PhaseOverflow(k));
    }
    Ok(1u64 << k)
}

/// Colors a node must gather from palette `k` to finish phase `k`:
/// `⌈(1 − 1/(2n)) · 2^k⌉`, computed exactly as `⌈(2n−1)·2^k / (2n)⌉`.
pub fn quota(k: u32, n: u32) -> Result<u64> {
    if n == 0 {
        return Err(Error::InvalidArgument("quota needs n ≥ 1".into()));
    }
    if k > MAX_PHASE {
        return Err(Error::PhaseOverflow(k));
    }
    let den = 2 * n as u128;
    let num = (den - 1) << k;
    Ok(num.div_ceil(den) as u64)
}

/// Per-instance palette parameters: the node count and the candidate window
/// `h = max(1, ⌈log₂ n⌉)` — how many consecutive palettes an arriving edge
/// may draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaletteParams {
    n: u32,
    window: u32,
}

impl PaletteParams {
    pub fn new(n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("n must be at least 1".into()));
        }
        let ceil_log2 = if n == 1 {
            0
        } else {
            32 - (n - 1).leading_zeros()
        };
        Ok(PaletteParams {
            n,
            window: ceil_log2.max(1),
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    /// Window size `h`.
    pub fn window(&self) -> u32 {
        self.window
    }

    pub fn quota(&self, k: u32) -> Result<u64> {
        quota(k, self.n)
    }
}

/// A parsed, validated instance: `n` and the edges in arrival order.
///
/// Canonical form: every edge is a strictly ascending list of 1-based node
/// ids. [`InstanceSpec::to_json`] emits exactly this shape, and
/// `parse ∘ to_json` is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InstanceSpec {
    n: u32,
    edges: Vec<Vec<u32>>,
}

impl InstanceSpec {
    pub fn new(n: u32, edges: Vec<Vec<u32>>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("n must be at least 1".into()));
        }
        let mut canonical = Vec::with_capacity(edges.len());
        for (idx, edge) in edges.into_iter().enumerate() {
            if edge.is_empty() {
                return Err(Error::InvalidInstance(format!(
                    "empty hyperedge at index {idx}"
                )));
            }
            let set: BTreeSet<u32> = edge.iter().copied().collect();
            if set.len() != edge.len() {
                return Err(Error::InvalidInstance(format!(
                    "duplicate node id in hyperedge at index {idx}"
                )));
            }
            if let Some(&bad) = set.iter().find(|&&v| v == 0 || v > n) {
                return Err(Error::InvalidInstance(format!(
                    "node id {bad} out of range 1..={n} in hyperedge at index {idx}"
                )));
            }
            canonical.push(set.into_iter().collect());
        }
        Ok(InstanceSpec {
            n,
            edges: canonical,
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn edges(&self) -> &[Vec<u32>] {
        &self.edges
    }

    pub fn params(&self) -> PaletteParams {
        PaletteParams::new(self.n).expect("validated at construction")
    }

    /// Node degrees, indexed by `node − 1`.
    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0u64; self.n as usize];
        for edge in &self.edges {
            for &v in edge {
                deg[(v - 1) as usize] += 1;
            }
        }
        deg
    }

    /// δ(E): the minimum node degree — an upper bound on the number of
    /// disjoint set covers.
    pub fn min_degree(&self) -> u64 {
        self.degrees().into_iter().min().unwrap_or(0)
    }

    /// Canonical JSON: `{"n":…,"edges":[[…],…]}` with ascending ids.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serialization cannot fail")
    }

    /// SHA-256 of the canonical JSON, hex-encoded; identifies the instance in
    /// reports.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }
}

impl<'de> Deserialize<'de> for InstanceSpec {
    fn deserialize<D>(deserializer: D) -> std::result::Result<Self, D::Error>
    where
        D: serde::Deserializer<'de>,
    {
        #[derive(Deserialize)]
        struct Raw {
            n: u32,
            edges: Vec<Vec<u32>>,
        }
        let raw = Raw::deserialize(deserializer)?;
        InstanceSpec::new(raw.n, raw.edges).map_err(serde::de::Error::custom)
    }
}

/// Parse an instance from its JSON form, validating shape and node ids.
pub fn parse_instance(json: &str) -> Result<InstanceSpec> {
    Ok(serde_json::from_str(json)?)
}
