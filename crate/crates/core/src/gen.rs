//! Seeded instance generators.
//!
//! Randomness comes from ChaCha8 (the 8-round ChaCha stream cipher used as a
//! counter-based generator). The 256-bit key is the little-endian bytes of the
//! 64-bit seed followed by 24 zero bytes, the nonce selects an independent
//! stream, and output words are consumed as little-endian `u64`s. Integers in
//! `0..n` use rejection sampling on whole words: a word `x` is accepted when
//! `x < 2^64 - (2^64 mod n)` and mapped to `x mod n`. Any implementation of
//! the same cipher therefore reproduces the same instances.
//!
//! Stream 0 drives topology, prices, capacities and demand sets. Stream 1
//! drives the demand pattern (which slots peak or spike), so a bursty spec
//! and its uniform twin share everything except the pattern.

use std::collections::BTreeSet;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BillingConfig, Edge, Instance, Network, NodeId, SlotDemand};
use crate::rational::Rational;
use crate::scenarios::{CdnInstance, CloudWanInstance, LvdnInstance, RtcnInstance};

pub const SPEC_SCHEMA: &str = "nba-genspec/1";

#[derive(Debug, Clone)]
pub struct Prng(ChaCha8Rng);

impl Prng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(stream);
        Prng(rng)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    /// Uniform in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "empty range");
        // 2^64 mod n
        let rem = (u64::MAX % n + 1) % n;
        loop {
            let x = self.next_u64();
            if rem == 0 || x <= u64::MAX - rem {
                return x % n;
            }
        }
    }

    /// Uniform in `lo..=hi`.
    pub fn range(&mut self, lo: u64, hi: u64) -> u64 {
        debug_assert!(lo <= hi);
        if hi - lo == u64::MAX {
            return self.next_u64();
        }
        lo + self.below(hi - lo + 1)
    }

    /// True with probability `p` (which must lie in `[0, 1]`).
    pub fn chance(&mut self, p: Rational) -> bool {
        if p >= Rational::ONE {
            return true;
        }
        if !p.is_positive() {
            return false;
        }
        (self.below(p.denom() as u64) as i128) < p.numer()
    }

    /// Fisher-Yates, from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }

    /// `count` distinct items of `pool`, in pool order.
    pub fn sample<T: Copy + Ord>(&mut self, pool: &[T], count: usize) -> Vec<T> {
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        self.shuffle(&mut idx);
        let mut picked: Vec<usize> = idx.into_iter().take(count).collect();
        picked.sort_unstable();
        picked.into_iter().map(|i| pool[i]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    #[default]
    Generic,
    Cdn,
    Lvdn,
    Rtcn,
    Cwan,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DemandPattern {
    #[default]
    Uniform,
    /// Listed slots have their weights multiplied by `peak_multiplier`.
    Diurnal {
        peak_slots: Vec<usize>,
        peak_multiplier: Rational,
    },
    /// `spike_count` distinct slots, drawn from stream 1, are multiplied by
    /// `spike_multiplier`.
    Bursty {
        spike_count: usize,
        #[serde(default = "default_spike")]
        spike_multiplier: Rational,
    },
}

fn default_spike() -> Rational {
    Rational::from_int(10)
}

fn default_q() -> Rational {
    Rational::new(95, 100)
}

fn default_one() -> Rational {
    Rational::ONE
}

fn default_true() -> bool {
    true
}

fn default_schema() -> String {
    SPEC_SCHEMA.to_string()
}

/// Generator knobs. Ranges are inclusive `[lo, hi]` pairs.
///
/// For scenarios `n` is the number of servers (PoPs for Cloud-WAN) and
/// `endpoints` the per-slot number of customers, producers, participants or
/// clients. `dests` bounds the viewers per producer (LVDN) and the group size
/// (RTCN).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenSpec {
    #[serde(default = "default_schema")]
    pub schema: String,
    pub seed: u64,
    #[serde(default)]
    pub scenario: ScenarioKind,
    pub n: usize,
    pub p: usize,
    #[serde(default = "default_q")]
    pub q: Rational,
    /// Probability that each ordered node pair is an edge.
    #[serde(default = "default_one")]
    pub density: Rational,
    #[serde(default = "default_sources")]
    pub sources: [usize; 2],
    #[serde(default = "default_dests")]
    pub dests: [usize; 2],
    #[serde(default = "default_endpoints")]
    pub endpoints: [usize; 2],
    #[serde(default)]
    pub pattern: DemandPattern,
    #[serde(default = "default_weight")]
    pub weight: [u64; 2],
    #[serde(default = "default_price")]
    pub price: [u64; 2],
    #[serde(default = "default_capacity")]
    pub capacity: [u64; 2],
    /// Repair reachability and capacities so that a plan exists.
    #[serde(default = "default_true")]
    pub feasible: bool,
}

fn default_sources() -> [usize; 2] {
    [1, 2]
}

fn default_dests() -> [usize; 2] {
    [1, 2]
}

fn default_endpoints() -> [usize; 2] {
    [1, 3]
}

fn default_weight() -> [u64; 2] {
    [1, 5]
}

fn default_price() -> [u64; 2] {
    [1, 5]
}

fn default_capacity() -> [u64; 2] {
    [20, 40]
}

impl GenSpec {
    /// A small generic spec with defaults for every optional knob.
    pub fn generic(seed: u64, n: usize, p: usize) -> Self {
        GenSpec {
            schema: default_schema(),
            seed,
            scenario: ScenarioKind::Generic,
            n,
            p,
            q: default_q(),
            density: Rational::ONE,
            sources: default_sources(),
            dests: default_dests(),
            endpoints: default_endpoints(),
            pattern: DemandPattern::Uniform,
            weight: default_weight(),
            price: default_price(),
            capacity: default_capacity(),
            feasible: true,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GenSpec = serde_json::from_str(text)?;
        crate::io::check_schema(&spec.schema, SPEC_SCHEMA)?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Spec(m));
        if self.n == 0 || self.p == 0 {
            return bad("n and p must be positive".into());
        }
        for (name, [lo, hi]) in [
            ("sources", self.sources),
            ("dests", self.dests),
            ("endpoints", self.endpoints),
        ] {
            if lo > hi {
                return bad(format!("{name}: lower bound {lo} exceeds upper bound {hi}"));
            }
        }
        for (name, [lo, hi]) in [("weight", self.weight), ("price", self.price), ("capacity", self.capacity)] {
            if lo == 0 || lo > hi {
                return bad(format!("{name}: need 0 < lo <= hi, got [{lo}, {hi}]"));
            }
        }
        if self.density.is_negative() || self.density > Rational::ONE {
            return bad(format!("density must lie in [0, 1], got {}", self.density));
        }
        if self.scenario == ScenarioKind::Generic {
            if self.sources[1] > self.n {
                return bad(format!("sources: at most n = {} sources possible", self.n));
            }
            if self.dests[1] > self.n - 1 {
                return bad(format!("dests: at most n - 1 = {} destinations possible", self.n - 1));
            }
        }
        match &self.pattern {
            DemandPattern::Uniform => {}
            DemandPattern::Diurnal { peak_slots, peak_multiplier } => {
                if let Some(&t) = peak_slots.iter().find(|&&t| t == 0 || t > self.p) {
                    return bad(format!("peak slot {t} outside 1..={}", self.p));
                }
                if !peak_multiplier.is_positive() {
                    return bad("peak_multiplier must be positive".into());
                }
            }
            DemandPattern::Bursty { spike_count, spike_multiplier } => {
                if *spike_count > self.p {
                    return bad(format!("spike_count {spike_count} exceeds p = {}", self.p));
                }
                if !spike_multiplier.is_positive() {
                    return bad("spike_multiplier must be positive".into());
                }
            }
        }
        BillingConfig::new(self.p, self.q).map_err(|e| Error::Spec(e.to_string()))?;
        Ok(())
    }

    /// Per-slot weight multipliers; consumes stream 1 only.
    pub fn multipliers(&self) -> Vec<Rational> {
        let mut m = vec![Rational::ONE; self.p];
        match &self.pattern {
            DemandPattern::Uniform => {}
            DemandPattern::Diurnal { peak_slots, peak_multiplier } => {
                for &t in peak_slots {
                    m[t - 1] = *peak_multiplier;
                }
            }
            DemandPattern::Bursty { spike_count, spike_multiplier } => {
                let mut rng = Prng::with_stream(self.seed, 1);
                let slots: Vec<usize> = (0..self.p).collect();
                for t in rng.sample(&slots, *spike_count) {
                    m[t] = *spike_multiplier;
                }
            }
        }
        m
    }
}

/// Output of [`generate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Generated {
    Generic(Instance),
    Cdn(CdnInstance),
    Lvdn(LvdnInstance),
    Rtcn(RtcnInstance),
    Cwan(CloudWanInstance),
}

impl Generated {
    pub fn to_json(&self) -> String {
        match self {
            Generated::Generic(i) => crate::io::instance_to_json(i),
            Generated::Cdn(c) => c.to_json(),
            Generated::Lvdn(l) => l.to_json(),
            Generated::Rtcn(r) => r.to_json(),
            Generated::Cwan(c) => c.to_json(),
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Generated> {
    spec.validate()?;
    Ok(match spec.scenario {
        ScenarioKind::Generic => Generated::Generic(generate_instance(spec)?),
        ScenarioKind::Cdn => Generated::Cdn(crate::scenarios::cdn::generate(spec)?),
        ScenarioKind::Lvdn => Generated::Lvdn(crate::scenarios::lvdn::generate(spec)?),
        ScenarioKind::Rtcn => Generated::Rtcn(crate::scenarios::rtcn::generate(spec)?),
        ScenarioKind::Cwan => Generated::Cwan(crate::scenarios::cloudwan::generate(spec)?),
    })
}

pub(crate) fn int(rng: &mut Prng, [lo, hi]: [u64; 2]) -> Rational {
    Rational::from(rng.range(lo, hi))
}

pub(crate) fn count(rng: &mut Prng, [lo, hi]: [usize; 2]) -> usize {
    rng.range(lo as u64, hi as u64) as usize
}

/// Generic instance. Every slot shares the base edge set. In feasible mode
/// each source gets a BFS tree over its destinations (adding edges from the
/// source where nothing reaches), and capacities are raised until that tree
/// plan fits.
pub fn generate_instance(spec: &GenSpec) -> Result<Instance> {
    spec.validate()?;
    let mut rng = Prng::new(spec.seed);
    let n = spec.n;
    let prices: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.price)).collect();
    let mut egress: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.capacity)).collect();
    let mut ingress: Vec<Rational> = (0..n).map(|_| int(&mut rng, spec.capacity)).collect();
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    for i in 1..=n {
        for j in (1..=n).filter(|&j| j != i) {
            if rng.chance(spec.density) {
                edges.insert((i, j));
            }
        }
    }

    let mult = spec.multipliers();
    let nodes: Vec<NodeId> = (1..=n).collect();
    let mut demands = Vec::with_capacity(spec.p);
    for t in 1..=spec.p {
        let mut slot = SlotDemand::new(t, []);
        let k = count(&mut rng, spec.sources);
        for s in rng.sample(&nodes, k) {
            let others: Vec<NodeId> = nodes.iter().copied().filter(|&v| v != s).collect();
            let d = count(&mut rng, spec.dests);
            let dests = rng.sample(&others, d);
            let w = int(&mut rng, spec.weight) * mult[t - 1];
            slot = slot.with_source(s, w, dests);
        }
        demands.push(slot);
    }

    if spec.feasible {
        for slot in &demands {
            for (&s, d) in &slot.sources {
                let reach = crate::feasibility::reachable(&edges, s);
                for &j in d.dests.iter().filter(|j| !reach.contains(j)) {
                    edges.insert((s, j));
                }
            }
        }
        let mut out_load = vec![vec![Rational::ZERO; spec.p]; n + 1];
        let mut in_load = vec![vec![Rational::ZERO; spec.p]; n + 1];
        for slot in &demands {
            for (&s, d) in &slot.sources {
                for (i, j) in bfs_tree(&edges, s, &d.dests) {
                    out_load[i][slot.t - 1] += d.w;
                    in_load[j][slot.t - 1] += d.w;
                }
            }
        }
        for i in 1..=n {
            let peak_out = out_load[i].iter().copied().max().unwrap_or(Rational::ZERO);
            let peak_in = in_load[i].iter().copied().max().unwrap_or(Rational::ZERO);
            egress[i - 1] = egress[i - 1].max(peak_out);
            ingress[i - 1] = ingress[i - 1].max(peak_in);
        }
    }

    let demands = demands
        .into_iter()
        .map(|mut slot| {
            slot.edges = edges.clone();
            slot
        })
        .collect();
    let network = Network::new(prices, egress, ingress, edges.iter().copied())?;
    Instance::new(network, BillingConfig::new(spec.p, spec.q)?, demands)
}

/// Shortest-path tree from `s` restricted to paths ending at `dests`.
pub(crate) fn bfs_tree(edges: &BTreeSet<Edge>, s: NodeId, dests: &BTreeSet<NodeId>) -> BTreeSet<Edge> {
    let mut parent = std::collections::BTreeMap::new();
    let mut queue = std::collections::VecDeque::from([s]);
    let mut seen = BTreeSet::from([s]);
    while let Some(v) = queue.pop_front() {
        for &(_, j) in edges.range((v, 0)..=(v, usize::MAX)) {
            if seen.insert(j) {
                parent.insert(j, v);
                queue.push_back(j);
            }
        }
    }
    let mut tree = BTreeSet::new();
    for &d in dests {
        let mut v = d;
        while let Some(&u) = parent.get(&v) {
            if !tree.insert((u, v)) {
                break;
            }
            v = u;
        }
    }
    tree
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn below_is_in_range_and_seeded() {
        let mut a = Prng::new(7);
        let mut b = Prng::new(7);
        for n in 1..200u64 {
            let x = a.below(n);
            assert!(x < n);
            assert_eq!(x, b.below(n));
        }
        assert_ne!(Prng::new(1).next_u64(), Prng::new(2).next_u64());
        assert_ne!(Prng::with_stream(1, 0).next_u64(), Prng::with_stream(1, 1).next_u64());
    }

    #[test]
    fn density_one_is_complete() {
        let inst = generate_instance(&GenSpec::generic(3, 4, 2)).unwrap();
        assert_eq!(inst.network().edges().len(), 12);
        assert!(inst.demands().iter().all(|s| s.edges.len() == 12));
    }

    #[test]
    fn contradictory_knobs_rejected() {
        let mut spec = GenSpec::generic(1, 3, 1);
        spec.dests = [1, 3];
        assert!(matches!(generate(&spec), Err(Error::Spec(_))));
    }
}
