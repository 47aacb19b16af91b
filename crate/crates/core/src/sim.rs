//! Policy interface and the simulation loop shared by every algorithm.

use std::collections::BTreeSet;

use crate::error::Result;
use crate::model::{advance_step, CacheState, Catalog, CostLedger, Event, FileId, LedgerDelta, PolicyDecision, ProblemParams, Trace};
use crate::worklog::WorkRecord;

/// What a policy sees when deciding a step.
#[derive(Debug, Clone, Copy)]
pub struct StepCtx<'a> {
    pub time: usize,
    pub event: &'a Event,
    pub catalog: &'a Catalog,
    pub params: &'a ProblemParams,
}

impl StepCtx<'_> {
    pub fn requested(&self) -> Option<crate::model::FileId> {
        self.event.file()
    }
}

pub trait Policy {
    fn name(&self) -> String;

    /// Evictions and zaps to apply before `ctx.event` is served.
    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision>;

    /// Simulated on an unbounded cache (the rental-only ALG-infinity).
    fn unbounded(&self) -> bool {
        false
    }

    fn is_randomized(&self) -> bool {
        false
    }

    /// Covering work done since the last call.
    fn drain_work_log(&mut self) -> Vec<WorkRecord> {
        Vec::new()
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        (**self).decide(ctx, state)
    }
    fn unbounded(&self) -> bool {
        (**self).unbounded()
    }
    fn is_randomized(&self) -> bool {
        (**self).is_randomized()
    }
    fn drain_work_log(&mut self) -> Vec<WorkRecord> {
        (**self).drain_work_log()
    }
}

impl<P: Policy + ?Sized> Policy for &mut P {
    fn name(&self) -> String {
        (**self).name()
    }
    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        (**self).decide(ctx, state)
    }
    fn unbounded(&self) -> bool {
        (**self).unbounded()
    }
    fn is_randomized(&self) -> bool {
        (**self).is_randomized()
    }
    fn drain_work_log(&mut self) -> Vec<WorkRecord> {
        (**self).drain_work_log()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepRecord {
    pub time: usize,
    pub event: Event,
    pub decision: PolicyDecision,
    pub delta: LedgerDelta,
    pub resident_after: Vec<FileId>,
}

/// Per-step decisions and ledger deltas of one run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyTrace {
    pub steps: Vec<StepRecord>,
}

impl PolicyTrace {
    pub fn replay_ledger(&self) -> CostLedger {
        let mut ledger = CostLedger::default();
        for s in &self.steps {
            ledger.add(&s.delta);
        }
        ledger
    }

    /// Steps at which each file was evicted (zaps excluded).
    pub fn eviction_steps(&self) -> Vec<(usize, FileId)> {
        self.steps
            .iter()
            .flat_map(|s| s.decision.evict.iter().map(move |&f| (s.time, f)))
            .collect()
    }
}

/// A policy driving its own cache and ledger.
pub struct Simulation<P: Policy = Box<dyn Policy>> {
    policy: P,
    params: ProblemParams,
    state: CacheState,
    ledger: CostLedger,
    time: usize,
    record: Option<PolicyTrace>,
    work_log: Vec<WorkRecord>,
}

impl<P: Policy> Simulation<P> {
    pub fn new(policy: P, params: &ProblemParams) -> Self {
        let mut params = params.clone();
        if policy.unbounded() {
            params.k = u64::MAX;
        }
        Self {
            policy,
            params,
            state: CacheState::new(),
            ledger: CostLedger::default(),
            time: 0,
            record: None,
            work_log: Vec::new(),
        }
    }

    pub fn recording(mut self) -> Self {
        self.record = Some(PolicyTrace::default());
        self
    }

    pub fn feed(&mut self, catalog: &Catalog, event: &Event) -> Result<LedgerDelta> {
        let ctx = StepCtx {
            time: self.time,
            event,
            catalog,
            params: &self.params,
        };
        let decision = self.policy.decide(&ctx, &self.state)?;
        self.work_log.extend(self.policy.drain_work_log());
        let delta = advance_step(&mut self.state, catalog, &self.params, self.time, event, &decision)?;
        self.ledger.add(&delta);
        if let Some(rec) = &mut self.record {
            rec.steps.push(StepRecord {
                time: self.time,
                event: *event,
                decision,
                delta: delta.clone(),
                resident_after: self.state.resident.iter().copied().collect(),
            });
        }
        self.time += 1;
        Ok(delta)
    }

    pub fn state(&self) -> &CacheState {
        &self.state
    }

    pub fn ledger(&self) -> &CostLedger {
        &self.ledger
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn policy(&self) -> &P {
        &self.policy
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    pub fn finish(self) -> RunResult {
        RunResult {
            ledger: self.ledger,
            trace: self.record.unwrap_or_default(),
            work_log: self.work_log,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub ledger: CostLedger,
    pub trace: PolicyTrace,
    pub work_log: Vec<WorkRecord>,
}

/// Runs `policy` over the whole trace, recording every step.
pub fn run<P: Policy>(trace: &Trace, params: &ProblemParams, policy: P) -> Result<RunResult> {
    let mut sim = Simulation::new(policy, params).recording();
    for e in &trace.events {
        sim.feed(&trace.catalog, e)?;
    }
    Ok(sim.finish())
}

/// The part of a policy run an adaptive adversary may observe and drive.
pub trait Target {
    fn resident(&self) -> &BTreeSet<FileId>;
    fn zapped(&self) -> &BTreeSet<FileId>;
    fn serve(&mut self, catalog: &Catalog, event: &Event) -> Result<LedgerDelta>;
    fn ledger(&self) -> &CostLedger;
    fn capacity(&self) -> u64;
}

impl<P: Policy> Target for Simulation<P> {
    fn resident(&self) -> &BTreeSet<FileId> {
        &self.state.resident
    }
    fn zapped(&self) -> &BTreeSet<FileId> {
        &self.state.zapped
    }
    fn serve(&mut self, catalog: &Catalog, event: &Event) -> Result<LedgerDelta> {
        self.feed(catalog, event)
    }
    fn ledger(&self) -> &CostLedger {
        &self.ledger
    }
    fn capacity(&self) -> u64 {
        self.params.k
    }
}
