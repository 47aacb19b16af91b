//! Exact offline optimum for small instances.
//!
//! Dynamic programming over `(step, resident set, zapped set)`. Before each
//! event the schedule may evict any subset of resident files and may zap
//! the requested file. Zapping a file at any other time never helps:
//! evicting it then and zapping it at its next request costs the same and
//! frees the same space. Nothing is ever prefetched.

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{advance_step, CacheState, CostLedger, Event, FileId, PolicyDecision, ProblemParams, Trace};
use crate::rational::{fmt_rat, int, Rat};
use crate::sim::{Policy, StepCtx};
use crate::worklog::{LpAssignment, VarKey};

pub const MAX_FILES: usize = 10;
pub const MAX_STEPS: usize = 30;
pub const MAX_K: u64 = 6;

#[derive(Debug, Clone)]
pub struct OracleSolution {
    /// Replayed ledger of the optimal schedule.
    pub ledger: CostLedger,
    /// Decision applied before each event.
    pub schedule: Vec<PolicyDecision>,
    /// 0/1 LP solution induced by the schedule.
    pub lp_assignment: LpAssignment,
}

impl OracleSolution {
    pub fn cost(&self) -> Rat {
        self.ledger.total()
    }

    pub fn lp_objective(&self) -> Rat {
        self.lp_assignment.objective()
    }

    pub fn to_json(&self, trace: &Trace) -> Value {
        let name = |f: &FileId| trace.catalog.get(*f).name.clone();
        let schedule: Vec<Value> = self
            .schedule
            .iter()
            .enumerate()
            .filter(|(_, d)| !d.is_empty())
            .map(|(t, d)| {
                json!({
                    "time": t,
                    "evict": d.evict.iter().map(name).collect::<Vec<_>>(),
                    "zap": d.zap.iter().map(name).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "cost": fmt_rat(&self.cost()),
            "ledger": self.ledger.to_json(),
            "schedule": schedule,
            "lp_assignment": self.lp_assignment.to_json(),
            "lp_objective": fmt_rat(&self.lp_objective()),
        })
    }
}

pub fn check_limits(trace: &Trace, params: &ProblemParams) -> Result<()> {
    let files = trace.distinct_requested().len();
    if files > MAX_FILES {
        return Err(Error::InstanceTooLarge(format!("{files} distinct files (limit {MAX_FILES})")));
    }
    if trace.len() > MAX_STEPS {
        return Err(Error::InstanceTooLarge(format!("{} steps (limit {MAX_STEPS})", trace.len())));
    }
    if params.k > MAX_K {
        return Err(Error::InstanceTooLarge(format!("k = {} (limit {MAX_K})", params.k)));
    }
    Ok(())
}

struct Dp<'a> {
    trace: &'a Trace,
    params: &'a ProblemParams,
    /// Dense index of each requested file.
    files: Vec<FileId>,
    index: HashMap<FileId, usize>,
    size: Vec<u64>,
    cost: Vec<Rat>,
    rent: Vec<Rat>,
    memo: HashMap<State, Option<Choice>>,
}

/// (step, resident mask, zapped mask).
type State = (usize, u16, u16);
/// (cost to go, files evicted at the step, zap the requested file).
type Choice = (Rat, u16, bool);

impl<'a> Dp<'a> {
    fn new(trace: &'a Trace, params: &'a ProblemParams) -> Self {
        let files = trace.distinct_requested();
        let index = files.iter().enumerate().map(|(i, f)| (*f, i)).collect();
        let size = files.iter().map(|f| trace.catalog.size(*f)).collect();
        let cost = files.iter().map(|f| trace.catalog.cost(*f)).collect();
        let rent = files
            .iter()
            .map(|f| params.rent_for(&trace.catalog, &BTreeSet::from([*f])))
            .collect();
        Self {
            trace,
            params,
            files,
            index,
            size,
            cost,
            rent,
            memo: HashMap::new(),
        }
    }

    fn used(&self, mask: u16) -> u64 {
        bits(mask).map(|i| self.size[i]).sum()
    }

    fn rent(&self, mask: u16) -> Rat {
        bits(mask).map(|i| self.rent[i]).sum()
    }

    /// Minimum cost from step `t` on, with the best `(evict mask, zap)`.
    fn solve(&mut self, t: usize, resident: u16, zapped: u16) -> Option<Choice> {
        if t == self.trace.len() {
            return Some((Rat::zero(), 0, false));
        }
        if let Some(v) = self.memo.get(&(t, resident, zapped)) {
            return *v;
        }
        let requested = self.trace.events[t].file().map(|f| self.index[&f]);
        let keep_req = requested.map_or(0, |i| 1u16 << i);
        let evictable = resident & !keep_req;
        let can_zap = self.params.zap_cost.is_some() && requested.is_some_and(|i| zapped & (1 << i) == 0);
        let mut best: Option<Choice> = None;
        let mut sub = evictable;
        loop {
            for zap in [false, true] {
                if zap && !can_zap {
                    continue;
                }
                let mut r = resident & !sub;
                let mut z = zapped;
                let mut step = Rat::zero();
                if zap {
                    let i = requested.unwrap();
                    r &= !(1 << i);
                    z |= 1 << i;
                    step += self.params.zap_cost.unwrap();
                }
                if let Some(i) = requested {
                    if z & (1 << i) == 0 && r & (1 << i) == 0 {
                        r |= 1 << i;
                        step += self.cost[i];
                    }
                }
                if self.used(r) > self.params.k {
                    continue;
                }
                step += self.rent(r);
                if let Some((rest, _, _)) = self.solve(t + 1, r, z) {
                    let total = step + rest;
                    if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
                        best = Some((total, sub, zap));
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & evictable;
        }
        self.memo.insert((t, resident, zapped), best);
        best
    }
}

fn bits(mask: u16) -> impl Iterator<Item = usize> {
    (0..16).filter(move |i| mask & (1 << i) != 0)
}

/// Optimal offline schedule, its ledger and its LP solution.
pub fn opt(trace: &Trace, params: &ProblemParams) -> Result<OracleSolution> {
    check_limits(trace, params)?;
    let mut dp = Dp::new(trace, params);
    let Some((value, _, _)) = dp.solve(0, 0, 0) else {
        return Err(Error::Unsatisfiable);
    };
    let mut schedule = Vec::with_capacity(trace.len());
    let (mut resident, mut zapped) = (0u16, 0u16);
    for t in 0..trace.len() {
        let (_, sub, zap) = dp.solve(t, resident, zapped).expect("reachable state is solvable");
        let mut decision = PolicyDecision::none();
        decision.evict = bits(sub).map(|i| dp.files[i]).collect();
        resident &= !sub;
        if let Some(i) = trace.events[t].file().map(|f| dp.index[&f]) {
            if zap {
                decision.zap.push(dp.files[i]);
                resident &= !(1 << i);
                zapped |= 1 << i;
            } else if zapped & (1 << i) == 0 {
                resident |= 1 << i;
            }
        }
        schedule.push(decision);
    }
    let ledger = replay_schedule(trace, params, &schedule)?;
    if ledger.total() != value {
        return Err(Error::Invariant(format!(
            "oracle schedule replays to {} but the optimum is {}",
            fmt_rat(&ledger.total()),
            fmt_rat(&value)
        )));
    }
    let lp_assignment = lp_assignment(trace, params, &schedule);
    Ok(OracleSolution {
        ledger,
        schedule,
        lp_assignment,
    })
}

/// Runs a fixed schedule through the simulator semantics.
pub fn replay_schedule(trace: &Trace, params: &ProblemParams, schedule: &[PolicyDecision]) -> Result<CostLedger> {
    let mut state = CacheState::new();
    let mut ledger = CostLedger::default();
    for (t, (event, decision)) in trace.events.iter().zip(schedule).enumerate() {
        ledger.add(&advance_step(&mut state, &trace.catalog, params, t, event, decision)?);
    }
    Ok(ledger)
}

/// The LP solution of a schedule: `x_t = 1` when the file requested at `t`
/// is evicted before its next request, `y_{t,s} = 1` while it stays, and
/// `z_f = 1` for zapped files.
pub fn lp_assignment(trace: &Trace, params: &ProblemParams, schedule: &[PolicyDecision]) -> LpAssignment {
    let mut a = LpAssignment::default();
    let n = params.zap_cost;
    let mut phase: HashMap<FileId, usize> = HashMap::new();
    let mut resident: BTreeSet<FileId> = BTreeSet::new();
    let mut zapped: BTreeSet<FileId> = BTreeSet::new();
    for (s, (event, decision)) in trace.events.iter().zip(schedule).enumerate() {
        for f in &decision.evict {
            resident.remove(f);
            if let Some(t) = phase.remove(f) {
                a.set(VarKey::X(t), trace.catalog.cost(*f), int(1));
            }
        }
        for f in &decision.zap {
            resident.remove(f);
            zapped.insert(*f);
            phase.remove(f);
            if let Some(n) = n {
                a.set(VarKey::Z(*f), n, int(1));
            }
        }
        if let Event::Request(f) = *event {
            if !zapped.contains(&f) {
                resident.insert(f);
                phase.insert(f, s);
                if a.value(&VarKey::X(s)).is_none() {
                    a.set(VarKey::X(s), trace.catalog.cost(f), int(0));
                }
            }
        }
        for f in &resident {
            a.set(VarKey::Y(phase[f], s), params.lambda, int(1));
        }
    }
    a
}

/// Replays a precomputed schedule as a policy.
#[derive(Debug, Clone)]
pub struct SchedulePolicy {
    schedule: Vec<PolicyDecision>,
}

impl SchedulePolicy {
    pub fn new(schedule: Vec<PolicyDecision>) -> Self {
        Self { schedule }
    }
}

impl Policy for SchedulePolicy {
    fn name(&self) -> String {
        "opt".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, _state: &CacheState) -> Result<PolicyDecision> {
        Ok(self.schedule.get(ctx.time).cloned().unwrap_or_default())
    }
}

/// Offline furthest-in-future eviction with optional up-front zaps and
/// optional rent-aware dropping: a file whose idle gap until its next
/// request would cost more rent than a re-fetch leaves the cache right
/// after its request step. Every run is a feasible schedule, so its ledger
/// bounds the optimum from above.
#[derive(Debug, Clone)]
pub struct OfflineGreedy {
    next: Vec<Option<usize>>,
    zap_on_first: BTreeSet<FileId>,
    rent_aware: bool,
    last: HashMap<FileId, usize>,
}

impl OfflineGreedy {
    pub fn new(trace: &Trace, zap_on_first: BTreeSet<FileId>, rent_aware: bool) -> Self {
        Self {
            next: trace.next_requests(),
            zap_on_first,
            rent_aware,
            last: HashMap::new(),
        }
    }

    fn next_of(&self, f: FileId) -> Option<usize> {
        self.last.get(&f).and_then(|t| self.next[*t])
    }

    fn worth_dropping(&self, ctx: &StepCtx<'_>, f: FileId) -> bool {
        let Some(&t) = self.last.get(&f) else {
            return false;
        };
        if ctx.params.lambda.is_zero() {
            return false;
        }
        match self.next[t] {
            None => true,
            Some(n) => ctx.params.lambda * int((n - t - 1) as i128) > ctx.catalog.cost(f),
        }
    }
}

impl Policy for OfflineGreedy {
    fn name(&self) -> String {
        "offline-greedy".into()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        let mut decision = PolicyDecision::none();
        let requested = ctx.requested();
        let mut resident = state.resident.clone();
        if self.rent_aware {
            for &g in &state.resident {
                if Some(g) != requested && self.worth_dropping(ctx, g) {
                    resident.remove(&g);
                    decision.evict.push(g);
                }
            }
        }
        if let Some(f) = requested {
            if !state.is_zapped(f) && self.zap_on_first.contains(&f) {
                decision.zap.push(f);
            } else if !state.is_zapped(f) && !resident.contains(&f) {
                let need = ctx.catalog.size(f);
                if need > ctx.params.k {
                    return Err(Error::Unsatisfiable);
                }
                let mut used = ctx.catalog.total_size(&resident);
                while used + need > ctx.params.k {
                    let victim = *resident
                        .iter()
                        .max_by_key(|g| (self.next_of(**g).unwrap_or(usize::MAX), std::cmp::Reverse(**g)))
                        .expect("overflow implies a resident file");
                    resident.remove(&victim);
                    used -= ctx.catalog.size(victim);
                    decision.evict.push(victim);
                }
            }
            self.last.insert(f, ctx.time);
        }
        Ok(decision)
    }
}

/// Cheapest of the offline greedy schedules (with and without rent-aware
/// dropping, with and without zapping each file on its first request when
/// `try_zaps` is set), or the exact optimum when the instance is small.
pub fn offline_upper_bound(trace: &Trace, params: &ProblemParams, try_zaps: bool) -> Result<(Rat, &'static str)> {
    if check_limits(trace, params).is_ok() {
        return Ok((opt(trace, params)?.cost(), "oracle"));
    }
    let mut best: Option<Rat> = None;
    let mut zap_sets = vec![BTreeSet::new()];
    if try_zaps && params.zap_cost.is_some() {
        zap_sets.extend(trace.distinct_requested().into_iter().map(|f| BTreeSet::from([f])));
    }
    for zaps in zap_sets {
        for rent_aware in [false, true] {
            let policy = OfflineGreedy::new(trace, zaps.clone(), rent_aware);
            if let Ok(r) = crate::sim::run(trace, params, policy) {
                let c = r.ledger.total();
                if best.is_none_or(|b| c < b) {
                    best = Some(c);
                }
            }
        }
    }
    best.map(|b| (b, "offline-greedy")).ok_or(Error::Unsatisfiable)
}

/// Checks `OPT <= ledger` for every named policy ledger.
pub fn opt_lower_bound_sanity<'a>(
    solution: &OracleSolution,
    ledgers: impl IntoIterator<Item = (&'a str, &'a CostLedger)>,
) -> Result<()> {
    for (name, ledger) in ledgers {
        if ledger.total() < solution.cost() {
            return Err(Error::Invariant(format!(
                "{name} paid {} below the optimum {}",
                fmt_rat(&ledger.total()),
                fmt_rat(&solution.cost())
            )));
        }
    }
    Ok(())
}

/// Exhaustive search over per-request choices, written independently of
/// the DP and the simulator. On each request to a non-zapped file the
/// schedule either zaps it or holds it (fetching on a miss), and then
/// either keeps it until its next request or drops it right after the
/// step. Dropping at any later idle step only adds rent, so these choices
/// cover an optimal schedule. Feasible for tiny instances only.
pub fn brute_force_opt(trace: &Trace, params: &ProblemParams) -> Option<Rat> {
    let requests: Vec<usize> = (0..trace.len()).filter(|t| trace.events[*t].file().is_some()).collect();
    let options: &[u8] = if params.zap_cost.is_some() { &[0, 1, 2] } else { &[0, 1] };
    let mut choice = vec![0usize; requests.len()];
    let mut best: Option<Rat> = None;
    loop {
        if let Some(c) = evaluate_choices(trace, params, &requests, &choice, options) {
            if best.is_none_or(|b| c < b) {
                best = Some(c);
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == choice.len() {
                return best;
            }
            choice[i] += 1;
            if choice[i] < options.len() {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Option codes: 0 keep until next request, 1 drop after the step, 2 zap.
fn evaluate_choices(
    trace: &Trace,
    params: &ProblemParams,
    requests: &[usize],
    choice: &[usize],
    options: &[u8],
) -> Option<Rat> {
    let mut resident: Vec<FileId> = Vec::new();
    let mut zapped: Vec<FileId> = Vec::new();
    let mut drop_next: Vec<FileId> = Vec::new();
    let mut total = Rat::zero();
    let mut r = 0;
    for (t, event) in trace.events.iter().enumerate() {
        resident.retain(|f| !drop_next.contains(f));
        drop_next.clear();
        if let Event::Request(f) = *event {
            let option = options[choice[r]];
            r += 1;
            debug_assert_eq!(requests[r - 1], t);
            if !zapped.contains(&f) {
                if option == 2 {
                    zapped.push(f);
                    resident.retain(|g| *g != f);
                    total += params.zap_cost.unwrap();
                } else {
                    if !resident.contains(&f) {
                        resident.push(f);
                        total += trace.catalog.cost(f);
                    }
                    if option == 1 {
                        drop_next.push(f);
                    }
                }
            } else if option != 0 {
                // only one encoding per zapped request
                return None;
            }
        }
        let used: u64 = resident.iter().map(|f| trace.catalog.size(*f)).sum();
        if used > params.k {
            return None;
        }
        for f in &resident {
            total += match params.rent_mode {
                crate::model::RentMode::PerFile => params.lambda,
                crate::model::RentMode::PerSize => params.lambda * int(trace.catalog.size(*f) as i128),
            };
        }
    }
    Some(total)
}
