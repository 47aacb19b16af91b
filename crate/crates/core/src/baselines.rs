//! Classical eviction policies: LRU, FIFO, FWF, marking, Landlord, the
//! zap-on-first-request policy, and the idle-timeout wrapper `A_d`.
//!
//! Every policy reads the resident set from the cache state it is handed
//! rather than trusting its own bookkeeping, so the wrapper can evict
//! files behind the inner policy's back.

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CacheState, FileId, PolicyDecision};
use crate::rational::Rat;
use crate::rng::{domain, Seed};
use crate::sim::{Policy, StepCtx};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaselineKind {
    Lru,
    Fifo,
    Fwf,
    Marking,
    RandomizedMarking,
    Landlord,
    ZapFirst,
    IdleTimeout { inner: Box<BaselineKind>, d: u64 },
}

impl BaselineKind {
    pub fn name(&self) -> String {
        match self {
            Self::Lru => "lru".into(),
            Self::Fifo => "fifo".into(),
            Self::Fwf => "fwf".into(),
            Self::Marking => "marking".into(),
            Self::RandomizedMarking => "rand-marking".into(),
            Self::Landlord => "landlord".into(),
            Self::ZapFirst => "zap-first".into(),
            Self::IdleTimeout { inner, d } => format!("a_d:{}:{d}", inner.name()),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "lru" => Self::Lru,
            "fifo" => Self::Fifo,
            "fwf" => Self::Fwf,
            "marking" => Self::Marking,
            "rand-marking" => Self::RandomizedMarking,
            "landlord" => Self::Landlord,
            "zap-first" => Self::ZapFirst,
            _ => {
                let rest = name.strip_prefix("a_d:")?;
                let (inner, d) = rest.rsplit_once(':')?;
                let inner = Self::parse(inner)?;
                let d: u64 = d.parse().ok().filter(|d| *d >= 1)?;
                if !inner.allowed_in_idle_timeout() {
                    return None;
                }
                Self::IdleTimeout {
                    inner: Box::new(inner),
                    d,
                }
            }
        })
    }

    pub fn allowed_in_idle_timeout(&self) -> bool {
        matches!(self, Self::Lru | Self::Fifo | Self::Fwf | Self::Marking)
    }

    pub fn build(&self, seed: Seed) -> Box<dyn Policy> {
        match self {
            Self::Lru => Box::new(Lru::default()),
            Self::Fifo => Box::new(Fifo::default()),
            Self::Fwf => Box::new(Fwf),
            Self::Marking => Box::new(Marking::deterministic()),
            Self::RandomizedMarking => Box::new(Marking::randomized(seed)),
            Self::Landlord => Box::new(Landlord::default()),
            Self::ZapFirst => Box::new(ZapFirst),
            Self::IdleTimeout { inner, d } => Box::new(IdleTimeout::new(inner.build(seed), *d)),
        }
    }
}

/// The requested file if it has to be loaded, after checking it can fit.
fn pending_load(ctx: &StepCtx<'_>, state: &CacheState, policy: &str) -> Result<Option<FileId>> {
    let Some(f) = ctx.requested() else {
        return Ok(None);
    };
    if state.is_resident(f) || state.is_zapped(f) {
        return Ok(None);
    }
    if ctx.catalog.size(f) > ctx.params.k {
        return Err(Error::Unsupported {
            policy: policy.into(),
            reason: format!("file `{}` is larger than the cache", ctx.catalog.get(f).name),
        });
    }
    Ok(Some(f))
}

/// Evicts from `order` (best victim first) until `f` fits.
fn evict_in_order(
    ctx: &StepCtx<'_>,
    resident: &BTreeSet<FileId>,
    f: FileId,
    order: impl IntoIterator<Item = FileId>,
) -> Vec<FileId> {
    let k = ctx.params.k;
    let need = ctx.catalog.size(f);
    let mut used = ctx.catalog.total_size(resident);
    let mut out = Vec::new();
    for g in order {
        if used + need <= k {
            break;
        }
        used -= ctx.catalog.size(g);
        out.push(g);
    }
    out
}

fn overflow(ctx: &StepCtx<'_>, resident: &BTreeSet<FileId>, f: FileId) -> bool {
    ctx.catalog.total_size(resident) + ctx.catalog.size(f) > ctx.params.k
}

#[derive(Debug, Clone, Default)]
pub struct Lru {
    last_use: HashMap<FileId, usize>,
}

impl Policy for Lru {
    fn name(&self) -> String {
        "lru".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        let mut decision = PolicyDecision::none();
        if let Some(f) = pending_load(ctx, state, "lru")? {
            let mut order: Vec<FileId> = state.resident.iter().copied().collect();
            order.sort_by_key(|g| (self.last_use.get(g).copied().unwrap_or(0), *g));
            decision.evict = evict_in_order(ctx, &state.resident, f, order);
        }
        if let Some(f) = ctx.requested() {
            self.last_use.insert(f, ctx.time);
        }
        Ok(decision)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Fifo {
    loaded_at: HashMap<FileId, usize>,
}

impl Policy for Fifo {
    fn name(&self) -> String {
        "fifo".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        let mut decision = PolicyDecision::none();
        if let Some(f) = pending_load(ctx, state, "fifo")? {
            let mut order: Vec<FileId> = state.resident.iter().copied().collect();
            order.sort_by_key(|g| (self.loaded_at.get(g).copied().unwrap_or(0), *g));
            decision.evict = evict_in_order(ctx, &state.resident, f, order);
            self.loaded_at.insert(f, ctx.time);
        }
        Ok(decision)
    }
}

/// Flush-when-full.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fwf;

impl Policy for Fwf {
    fn name(&self) -> String {
        "fwf".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        let mut decision = PolicyDecision::none();
        if let Some(f) = pending_load(ctx, state, "fwf")? {
            if overflow(ctx, &state.resident, f) {
                decision.evict = state.resident.iter().copied().collect();
            }
        }
        Ok(decision)
    }
}

/// Marking: evict unmarked pages (least recently used first, or uniformly
/// at random), unmark everything when a fault finds every page marked.
#[derive(Debug, Clone)]
pub struct Marking {
    marked: BTreeSet<FileId>,
    last_use: HashMap<FileId, usize>,
    rng: Option<ChaCha8Rng>,
}

impl Marking {
    pub fn deterministic() -> Self {
        Self {
            marked: BTreeSet::new(),
            last_use: HashMap::new(),
            rng: None,
        }
    }

    pub fn randomized(seed: Seed) -> Self {
        Self {
            rng: Some(seed.stream(domain::MARKING, 0, 0)),
            ..Self::deterministic()
        }
    }

    fn pick(&mut self, candidates: &[FileId]) -> FileId {
        match &mut self.rng {
            Some(rng) => candidates[rng.gen_range(0..candidates.len())],
            None => *candidates
                .iter()
                .min_by_key(|g| (self.last_use.get(g).copied().unwrap_or(0), **g))
                .expect("nonempty"),
        }
    }
}

impl Policy for Marking {
    fn name(&self) -> String {
        if self.rng.is_some() { "rand-marking" } else { "marking" }.into()
    }

    fn is_randomized(&self) -> bool {
        self.rng.is_some()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        self.marked.retain(|g| state.resident.contains(g));
        let mut decision = PolicyDecision::none();
        let name = self.name();
        if let Some(f) = pending_load(ctx, state, &name)? {
            let mut resident = state.resident.clone();
            while overflow(ctx, &resident, f) {
                let mut candidates: Vec<FileId> = resident.iter().filter(|g| !self.marked.contains(g)).copied().collect();
                if candidates.is_empty() {
                    self.marked.clear();
                    candidates = resident.iter().copied().collect();
                }
                let victim = self.pick(&candidates);
                resident.remove(&victim);
                decision.evict.push(victim);
            }
        }
        if let Some(f) = ctx.requested() {
            if !state.is_zapped(f) {
                self.marked.insert(f);
                self.last_use.insert(f, ctx.time);
            }
        }
        Ok(decision)
    }
}

/// Landlord with full credit refresh on hits.
#[derive(Debug, Clone, Default)]
pub struct Landlord {
    credit: HashMap<FileId, Rat>,
}

impl Landlord {
    pub fn credit(&self, f: FileId) -> Option<Rat> {
        self.credit.get(&f).copied()
    }
}

impl Policy for Landlord {
    fn name(&self) -> String {
        "landlord".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        self.credit.retain(|g, _| state.resident.contains(g));
        let mut decision = PolicyDecision::none();
        if let Some(f) = pending_load(ctx, state, "landlord")? {
            let mut resident = state.resident.clone();
            while overflow(ctx, &resident, f) {
                let delta = resident
                    .iter()
                    .map(|g| self.credit[g] / Rat::from_integer(ctx.catalog.size(*g) as i128))
                    .min()
                    .expect("overflow implies a resident file");
                for g in &resident {
                    let c = self.credit.get_mut(g).unwrap();
                    *c -= delta * Rat::from_integer(ctx.catalog.size(*g) as i128);
                }
                let broke: Vec<FileId> = resident.iter().filter(|g| self.credit[g].is_zero()).copied().collect();
                for g in broke {
                    if !overflow(ctx, &resident, f) {
                        break;
                    }
                    resident.remove(&g);
                    self.credit.remove(&g);
                    decision.evict.push(g);
                }
            }
        }
        if let Some(f) = ctx.requested() {
            if !state.is_zapped(f) {
                self.credit.insert(f, ctx.catalog.cost(f));
            }
        }
        Ok(decision)
    }
}

/// Zaps every file the first time it is requested.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZapFirst;

impl Policy for ZapFirst {
    fn name(&self) -> String {
        "zap-first".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        if ctx.params.zap_cost.is_none() {
            return Err(Error::Unsupported {
                policy: "zap-first".into(),
                reason: "zap cost required".into(),
            });
        }
        let mut decision = PolicyDecision::none();
        if let Some(f) = ctx.requested() {
            if !state.is_zapped(f) {
                decision.zap.push(f);
            }
        }
        Ok(decision)
    }
}

/// `A_d`: any file not requested for `d` steps is evicted; otherwise the
/// inner policy decides.
pub struct IdleTimeout {
    inner: Box<dyn Policy>,
    d: u64,
    last_request: HashMap<FileId, usize>,
}

impl IdleTimeout {
    pub fn new(inner: Box<dyn Policy>, d: u64) -> Self {
        Self {
            inner,
            d,
            last_request: HashMap::new(),
        }
    }
}

impl Policy for IdleTimeout {
    fn name(&self) -> String {
        format!("a_d:{}:{}", self.inner.name(), self.d)
    }

    fn is_randomized(&self) -> bool {
        self.inner.is_randomized()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        let requested = ctx.requested();
        let idle: Vec<FileId> = state
            .resident
            .iter()
            .filter(|g| Some(**g) != requested)
            .filter(|g| {
                self.last_request
                    .get(g)
                    .is_some_and(|t| (ctx.time - t) as u64 >= self.d)
            })
            .copied()
            .collect();
        let mut trimmed = state.clone();
        for g in &idle {
            trimmed.resident.remove(g);
        }
        trimmed.used = ctx.catalog.total_size(&trimmed.resident);
        let mut decision = self.inner.decide(ctx, &trimmed)?;
        let mut evict = idle;
        evict.append(&mut decision.evict);
        decision.evict = evict;
        if let Some(f) = requested {
            self.last_request.insert(f, ctx.time);
        }
        Ok(decision)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Catalog, Event, ProblemParams, Trace};
    use crate::rational::{int, rat};
    use crate::sim::run;

    fn misses(trace: &Trace, k: u64, kind: BaselineKind) -> Rat {
        run(trace, &ProblemParams::paging(k, int(0)), kind.build(Seed(1))).unwrap().ledger.retrieval
    }

    #[test]
    fn lru_cyclic_misses_everything() {
        assert_eq!(misses(&Trace::from_script("abcabc"), 2, BaselineKind::Lru), int(6));
    }

    #[test]
    fn lru_fifo_differ_on_hits() {
        let t = Trace::from_script("abacb");
        // LRU evicts b at c, FIFO evicts a
        assert_eq!(misses(&t, 2, BaselineKind::Lru), int(4));
        assert_eq!(misses(&t, 2, BaselineKind::Fifo), int(3));
    }

    #[test]
    fn fwf_flushes() {
        let r = run(&Trace::from_script("abcab"), &ProblemParams::paging(2, int(0)), Fwf).unwrap();
        assert_eq!(r.trace.steps[2].decision.evict, vec![FileId(0), FileId(1)]);
        assert_eq!(r.ledger.retrieval, int(5));
    }

    #[test]
    fn marking_phase_reset() {
        // k = 2: a b marked; c faults with all marked, phase resets, evicts LRU (a)
        let r = run(&Trace::from_script("abcb"), &ProblemParams::paging(2, int(0)), Marking::deterministic()).unwrap();
        assert_eq!(r.trace.eviction_steps(), vec![(2, FileId(0))]);
    }

    #[test]
    fn zap_first_pays_n_per_distinct_file() {
        let t = Trace::from_script("abcdabcd");
        let params = ProblemParams::paging(2, rat(1, 3)).with_zap(int(4));
        let r = run(&t, &params, ZapFirst).unwrap();
        assert_eq!(r.ledger.total(), int(16));
        assert_eq!(r.ledger.zapping, int(16));
    }

    #[test]
    fn idle_timeout_evicts_with_free_space() {
        let t = Trace::from_script("a...");
        let params = ProblemParams::paging(4, rat(1, 2));
        let r = run(&t, &params, BaselineKind::parse("a_d:lru:2").unwrap().build(Seed(0))).unwrap();
        assert_eq!(r.trace.eviction_steps(), vec![(2, FileId(0))]);
    }

    #[test]
    fn idle_timeout_rejects_other_inners() {
        assert!(BaselineKind::parse("a_d:landlord:2").is_none());
        assert!(BaselineKind::parse("a_d:lru:0").is_none());
        assert!(BaselineKind::parse("a_d:fwf:3").is_some());
    }

    #[test]
    fn landlord_evicts_cheapest_per_size() {
        let mut c = Catalog::new();
        let a = c.add("a", 1, int(5)).unwrap();
        let b = c.add("b", 1, int(1)).unwrap();
        let d = c.add("d", 1, int(2)).unwrap();
        let t = Trace::new(c, vec![Event::Request(a), Event::Request(b), Event::Request(d)]);
        let mut ll = Landlord::default();
        let r = {
            let mut sim = crate::sim::Simulation::new(&mut ll, &ProblemParams::new(2, int(0))).recording();
            for e in &t.events {
                sim.feed(&t.catalog, e).unwrap();
            }
            sim.finish()
        };
        assert_eq!(r.trace.eviction_steps(), vec![(2, b)]);
        assert_eq!(ll.credit(a), Some(int(4)));
        assert_eq!(ll.credit(d), Some(int(2)));
    }

    #[test]
    fn rand_marking_victim_is_uniform() {
        // four marked pages, fifth request forces a uniform choice among all four
        let t = Trace::from_script("abcde");
        let params = ProblemParams::paging(4, int(0));
        let trials = 10_000;
        let mut counts = [0f64; 4];
        for i in 0..trials {
            let r = run(&t, &params, Marking::randomized(Seed(i))).unwrap();
            counts[r.trace.steps[4].decision.evict[0].index()] += 1.0;
        }
        let expected = trials as f64 / 4.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 3 degrees of freedom, p = 0.001
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts {counts:?}");
    }
}
