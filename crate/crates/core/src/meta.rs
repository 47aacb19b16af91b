//! Composition of a capacity-k caching policy with ALG-infinity.
//!
//! Both components run as full simulations on the same events: the inner
//! policy on a size-k cache without rent, ALG-infinity on an unbounded
//! cache without zapping. The composed cache holds the intersection of
//! their contents and mirrors the inner policy's zaps.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::Result;
use crate::model::{CacheState, CostLedger, FileId, PolicyDecision, ProblemParams, Trace};
use crate::rng::Seed;
use crate::sim::{Policy, RunResult, Simulation, StepCtx};
use crate::ski::{SkiKind, SkiRentalPolicy};

/// Which component an eviction from the composed cache is charged to.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Attribution {
    pub inner: usize,
    pub ski: usize,
}

pub struct MetaPolicy {
    inner_proto: Option<Box<dyn Policy>>,
    ski_proto: Option<SkiRentalPolicy>,
    ski_kind: SkiKind,
    inner_name: String,
    inner: Option<Simulation<Box<dyn Policy>>>,
    ski: Option<Simulation<SkiRentalPolicy>>,
    attribution: Attribution,
}

impl MetaPolicy {
    pub fn new(inner: Box<dyn Policy>, ski_kind: SkiKind, seed: Seed) -> Self {
        Self {
            inner_name: inner.name(),
            inner_proto: Some(inner),
            ski_proto: Some(SkiRentalPolicy::alg_infinity(ski_kind, seed)),
            ski_kind,
            inner: None,
            ski: None,
            attribution: Attribution::default(),
        }
    }

    pub fn inner_params(params: &ProblemParams) -> ProblemParams {
        let mut p = params.clone();
        p.lambda = Zero::zero();
        p
    }

    pub fn ski_params(params: &ProblemParams) -> ProblemParams {
        let mut p = params.clone();
        p.zap_cost = None;
        p
    }

    fn start(&mut self, params: &ProblemParams) {
        if self.inner.is_none() {
            let inner = self.inner_proto.take().expect("inner policy");
            let ski = self.ski_proto.take().expect("ski policy");
            self.inner = Some(Simulation::new(inner, &Self::inner_params(params)));
            self.ski = Some(Simulation::new(ski, &Self::ski_params(params)));
        }
    }

    pub fn inner_ledger(&self) -> CostLedger {
        self.inner.as_ref().map(|s| s.ledger().clone()).unwrap_or_default()
    }

    pub fn ski_ledger(&self) -> CostLedger {
        self.ski.as_ref().map(|s| s.ledger().clone()).unwrap_or_default()
    }

    pub fn attribution(&self) -> Attribution {
        self.attribution
    }

    pub fn inner_resident(&self) -> BTreeSet<FileId> {
        self.inner.as_ref().map(|s| s.state().resident.clone()).unwrap_or_default()
    }

    pub fn ski_resident(&self) -> BTreeSet<FileId> {
        self.ski.as_ref().map(|s| s.state().resident.clone()).unwrap_or_default()
    }
}

impl Policy for MetaPolicy {
    fn name(&self) -> String {
        format!("meta:{}+alg-inf:{}", self.inner_name, self.ski_kind.tag())
    }

    fn is_randomized(&self) -> bool {
        self.ski_kind == SkiKind::RandomizedThreshold
            || self.inner_proto.as_ref().is_some_and(|p| p.is_randomized())
            || self.inner.as_ref().is_some_and(|s| s.policy().is_randomized())
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        self.start(ctx.params);
        let inner = self.inner.as_mut().unwrap();
        let ski = self.ski.as_mut().unwrap();
        let zapped_before = inner.state().zapped.clone();
        inner.feed(ctx.catalog, ctx.event)?;
        ski.feed(ctx.catalog, ctx.event)?;
        let c1 = &inner.state().resident;
        let c2 = &ski.state().resident;

        let mut decision = PolicyDecision::none();
        decision.zap = inner.state().zapped.difference(&zapped_before).copied().collect();
        for &g in &state.resident {
            if decision.zap.contains(&g) || (c1.contains(&g) && c2.contains(&g)) {
                continue;
            }
            if !c1.contains(&g) {
                self.attribution.inner += 1;
            } else {
                self.attribution.ski += 1;
            }
            decision.evict.push(g);
        }
        Ok(decision)
    }
}

/// A composed run together with the two component ledgers.
pub struct MetaRun {
    pub result: RunResult,
    pub inner: CostLedger,
    pub ski: CostLedger,
    pub attribution: Attribution,
    /// Largest total size of the composed cache seen after any step.
    pub peak_used: u64,
}

impl MetaRun {
    /// Composed total at most the sum of the component totals.
    pub fn dominated(&self) -> bool {
        self.result.ledger.total() <= self.inner.total() + self.ski.total()
    }
}

pub fn run_meta(
    trace: &Trace,
    params: &ProblemParams,
    inner: Box<dyn Policy>,
    ski_kind: SkiKind,
    seed: Seed,
) -> Result<MetaRun> {
    let mut meta = MetaPolicy::new(inner, ski_kind, seed);
    let mut sim = Simulation::new(&mut meta, params).recording();
    let mut peak_used = 0;
    for e in &trace.events {
        sim.feed(&trace.catalog, e)?;
        peak_used = peak_used.max(sim.state().used);
    }
    let result = sim.finish();
    Ok(MetaRun {
        result,
        inner: meta.inner_ledger(),
        ski: meta.ski_ledger(),
        attribution: meta.attribution(),
        peak_used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{BaselineKind, Lru};
    use crate::rational::{int, rat};

    #[test]
    fn intersection_drops_file_ski_evicted() {
        // k = 2, lambda = 1/2: ALG-infinity evicts a at step 2, LRU keeps it
        let t = Trace::from_script("a..a");
        let params = ProblemParams::paging(2, rat(1, 2));
        let r = run_meta(&t, &params, Box::new(Lru::default()), SkiKind::DeterministicBreakEven, Seed(0)).unwrap();
        assert_eq!(r.result.trace.eviction_steps(), vec![(2, FileId(0))]);
        assert_eq!(r.attribution, Attribution { inner: 0, ski: 1 });
        // the re-request misses
        assert_eq!(r.result.ledger.retrieval, int(2));
        assert!(r.dominated());
    }

    #[test]
    fn both_keep_means_resident() {
        let t = Trace::from_script("abab");
        let params = ProblemParams::paging(2, rat(1, 4));
        let r = run_meta(&t, &params, Box::new(Lru::default()), SkiKind::DeterministicBreakEven, Seed(0)).unwrap();
        assert_eq!(r.result.trace.steps[3].resident_after, vec![FileId(0), FileId(1)]);
        assert_eq!(r.result.ledger.retrieval, int(2));
    }

    #[test]
    fn inner_eviction_attributed_to_inner() {
        let t = Trace::from_script("abc");
        let params = ProblemParams::paging(2, rat(1, 100));
        let r = run_meta(&t, &params, BaselineKind::Lru.build(Seed(0)), SkiKind::DeterministicBreakEven, Seed(0)).unwrap();
        assert_eq!(r.attribution, Attribution { inner: 1, ski: 0 });
        assert!(r.peak_used <= 2);
    }
}
