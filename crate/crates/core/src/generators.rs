//! Seeded instance generators with controllable structure.
//!
//! * **planted** — `covers` rounds, each a uniform random partition of the
//!   node set into nonempty edges, arrival order shuffled. Every node
//!   appears exactly once per round, so δ(E) = covers and the rounds
//!   themselves witness OPT ≥ covers.
//! * **uniform** — `m` independent random subsets of a fixed size.
//! * **full** — `m` copies of the complete edge: the friendliest input.
//! * **starved** — every edge is `{1..n−1}` except that each position
//!   divisible by `⌈√m⌉+1` is the full node set: node `n` stays at a low
//!   phase, pinning the candidate window of the full edges while everyone
//!   else races ahead (the stress case for the ahead-counters).
//!
//! All generators are pure functions of `(parameters, seed)`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::str::FromStr;

use crate::model::InstanceSpec;
use crate::{Error, Result};

/// Parsed generator request, e.g. `planted:n=8,covers=32,seed=1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub kind: GenKind,
    pub n: u32,
    /// Edge count, or cover count for `planted`.
    pub m: u64,
    /// Edge size (`uniform` only).
    pub edge_size: Option<u32>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenKind {
    Planted,
    Uniform,
    Full,
    Starved,
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    /// Accepts `kind:key=value,key=value,…` with keys `n`, `covers`/`m`,
    /// `size`, `seed` as the kind requires.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidArgument(format!("generator spec {s:?}: {msg}"));
        let (kind_str, rest) = s
            .split_once(':')
            .ok_or_else(|| bad("expected kind:key=value,…".into()))?;
        let kind = match kind_str {
            "planted" => GenKind::Planted,
            "uniform" => GenKind::Uniform,
            "full" => GenKind::Full,
            "starved" => GenKind::Starved,
            other => return Err(bad(format!("unknown kind {other:?}"))),
        };
        let mut n = None;
        let mut m = None;
        let mut size = None;
        let mut seed = None;
        for pair in rest.split(',') {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed pair {pair:?}")))?;
            let parse = |slot: &mut Option<u64>| -> Result<()> {
                if slot.is_some() {
                    return Err(bad(format!("duplicate key {key:?}")));
                }
                *slot = Some(
                    value
                        .parse::<u64>()
                        .map_err(|_| bad(format!("{key}={value:?} is not an integer")))?,
                );
                Ok(())
            };
            match (key, kind) {
                ("n", _) => parse(&mut n)?,
                ("covers", GenKind::Planted) => parse(&mut m)?,
                ("m", GenKind::Uniform | GenKind::Full | GenKind::Starved) => parse(&mut m)?,
                ("size", GenKind::Uniform) => parse(&mut size)?,
                ("seed", _) => parse(&mut seed)?,
                _ => return Err(bad(format!("key {key:?} not valid for kind {kind_str}"))),
            }
        }
        let n = n.ok_or_else(|| bad("missing n".into()))?;
        let n = u32::try_from(n).map_err(|_| bad("n too large".into()))?;
        let m_key = if kind == GenKind::Planted { "covers" } else { "m" };
        let m = m.ok_or_else(|| bad(format!("missing {m_key}")))?;
        let edge_size = match (kind, size) {
            (GenKind::Uniform, Some(sz)) => {
                Some(u32::try_from(sz).map_err(|_| bad("size too large".into()))?)
            }
            (GenKind::Uniform, None) => return Err(bad("missing size".into())),
            (_, None) => None,
            _ => unreachable!("size key already rejected for this kind"),
        };
        Ok(GeneratorSpec {
            kind,
            n,
            m,
            edge_size,
            seed: seed.unwrap_or(0),
        })
    }
}

impl GeneratorSpec {
    pub fn generate(&self) -> Result<InstanceSpec> {
        match self.kind {
            GenKind::Planted => gen_planted(self.n, self.m, self.seed),
            GenKind::Uniform => gen_uniform(
                self.n,
                self.m,
                self.edge_size.expect("parser guarantees size for uniform"),
                self.seed,
            ),
            GenKind::Full => gen_full(self.n, self.m),
            GenKind::Starved => gen_starved(self.n, self.m, self.seed),
        }
    }
}

/// Uniform random partition of `{1..n}` into `1..=n` nonempty parts: a
/// shuffled prefix seeds the parts (guaranteeing nonemptiness), the rest of
/// the permutation is assigned uniformly.
fn random_partition<R: Rng>(n: u32, rng: &mut R) -> Vec<Vec<u32>> {
    let t = rng.gen_range(1..=n) as usize;
    let mut perm: Vec<u32> = (1..=n).collect();
    perm.shuffle(rng);
    let mut parts: Vec<Vec<u32>> = vec![Vec::new(); t];
    for (i, &v) in perm.iter().enumerate() {
        if i < t {
            parts[i].push(v);
        } else {
            parts[rng.gen_range(0..t)].push(v);
        }
    }
    parts
}

/// `cover_count` random partitions of the node set, concatenated and
/// shuffled. δ(E) = cover_count and OPT ≥ cover_count by construction.
pub fn gen_planted(n: u32, cover_count: u64, seed: u64) -> Result<InstanceSpec> {
    if n < 1 || cover_count < 1 {
        return Err(Error::InvalidArgument(
            "planted generator needs n ≥ 1 and covers ≥ 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for _ in 0..cover_count {
        edges.extend(random_partition(n, &mut rng));
    }
    edges.shuffle(&mut rng);
    InstanceSpec::new(n, edges)
}

/// `m` independent uniform random subsets of exactly `size` nodes.
pub fn gen_uniform(n: u32, m: u64, size: u32, seed: u64) -> Result<InstanceSpec> {
    if size < 1 || size > n {
        return Err(Error::InvalidArgument(format!(
            "uniform generator needs 1 ≤ size ≤ n, got size={size}, n={n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m as usize);
    for _ in 0..m {
        let edge: Vec<u32> = rand::seq::index::sample(&mut rng, n as usize, size as usize)
            .iter()
            .map(|i| (i + 1) as u32)
            .collect();
        edges.push(edge);
    }
    InstanceSpec::new(n, edges)
}

/// `m` copies of the complete edge.
pub fn gen_full(n: u32, m: u64) -> Result<InstanceSpec> {
    let full: Vec<u32> = (1..=n).collect();
    InstanceSpec::new(n, vec![full; m as usize])
}

/// All edges are `{1..n−1}` except every position divisible by `⌈√m⌉+1`
/// (1-based), which is the full node set — so node `n`'s degree, and with it
/// δ(E), stays ≈ √m while everyone else's degree is m.
pub fn gen_starved(n: u32, m: u64, _seed: u64) -> Result<InstanceSpec> {
    if n < 2 {
        return Err(Error::InvalidArgument(
            "starved generator needs n ≥ 2".into(),
        ));
    }
    let period = (m as f64).sqrt().ceil() as u64 + 1;
    let most: Vec<u32> = (1..n).collect();
    let full: Vec<u32> = (1..=n).collect();
    let edges = (1..=m)
        .map(|pos| {
            if pos % period == 0 {
                full.clone()
            } else {
                most.clone()
            }
        })
        .collect();
    InstanceSpec::new(n, edges)
}
