//! Covering-LP caching policies: plain, rental, zapping and rental-zapping
//! variants for paging (unit sizes) and caching (arbitrary sizes).
//!
//! Each step produces, in order:
//!
//! 1. for rental variants, one rent-evict(-zap) constraint per resident
//!    file other than the requested one, ascending by file id:
//!    `floor(y[t,s]) + floor(x[t]) (+ floor(z[f])) >= 1`, where `t` is the
//!    file's latest request and `s` the current step;
//! 2. on a miss that would overflow the cache, one cache-size constraint
//!    over the current resident set `Q`: each resident file contributes
//!    `size(f)` once `x` (or `z`) fires, the requested file contributes
//!    `size(f_t)` once `z[f_t]` fires, and the threshold is the overflow
//!    `size(Q) + size(f_t) - k`;
//! 3. for rental-zapping variants, the requested file's own constraint at
//!    its arrival step (`t = s`), once it is known to be admitted.
//!
//! Without zapping every schedule pays rent for a requested file in its
//! request step, so that term is common to the policy and the optimum and
//! its constraint is left out. With zapping the term can be avoided, and
//! leaving it out would let a hot file pay rent forever without ever
//! pushing its `z` up.
//!
//! A fired `x` evicts its file, a fired `z` zaps it. An `x` that fires in
//! the arrival-step constraint cannot evict the file being served, so the
//! eviction happens at the start of the following step.

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};

use crate::covering::{CoveringConstraint, CoveringEngine, TermGroup, VarId, WorkReport};
use crate::error::{Error, Result};
use crate::model::{CacheState, FileId, PolicyDecision, ProblemParams};
use crate::rational::{int, Rat};
use crate::sim::{Policy, StepCtx};
use crate::worklog::{ConstraintKind, RaisedVar, VarKey, WorkRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CilpVariant {
    Paging,
    RentalPaging,
    RentalCaching,
    ZappingPaging,
    ZappingCaching,
    RentalZappingPaging,
    RentalZappingCaching,
}

impl CilpVariant {
    pub const ALL: [CilpVariant; 7] = [
        Self::Paging,
        Self::RentalPaging,
        Self::RentalCaching,
        Self::ZappingPaging,
        Self::ZappingCaching,
        Self::RentalZappingPaging,
        Self::RentalZappingCaching,
    ];

    pub fn rental(self) -> bool {
        matches!(
            self,
            Self::RentalPaging | Self::RentalCaching | Self::RentalZappingPaging | Self::RentalZappingCaching
        )
    }

    pub fn zapping(self) -> bool {
        matches!(
            self,
            Self::ZappingPaging | Self::ZappingCaching | Self::RentalZappingPaging | Self::RentalZappingCaching
        )
    }

    /// Paging variants require unit-size files.
    pub fn unit_sizes(self) -> bool {
        matches!(self, Self::Paging | Self::RentalPaging | Self::ZappingPaging | Self::RentalZappingPaging)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Paging => "paging-cilp",
            Self::RentalPaging => "rental-paging-cilp",
            Self::RentalCaching => "rental-caching-cilp",
            Self::ZappingPaging => "zapping-paging-cilp",
            Self::ZappingCaching => "zapping-caching-cilp",
            Self::RentalZappingPaging => "rental-zapping-paging-cilp",
            Self::RentalZappingCaching => "rental-zapping-caching-cilp",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "paging-cilp" => Self::Paging,
            "rental-paging-cilp" => Self::RentalPaging,
            "rental-caching-cilp" => Self::RentalCaching,
            "zapping-paging-cilp" | "zap-paging-cilp" => Self::ZappingPaging,
            "zapping-caching-cilp" | "zap-caching-cilp" => Self::ZappingCaching,
            "rental-zapping-paging-cilp" => Self::RentalZappingPaging,
            "rental-zapping-caching-cilp" => Self::RentalZappingCaching,
            _ => return None,
        })
    }
}

/// `gamma = k * lambda` inside the band `1/k^2 <= lambda < 1/k`.
pub fn recommended_gamma(k: u64, lambda: Rat) -> Option<Rat> {
    let k = int(k as i128);
    let low = Rat::one() / (k * k);
    let high = Rat::one() / k;
    (lambda >= low && lambda < high).then(|| k * lambda)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CilpPolicyConfig {
    pub variant: CilpVariant,
    /// Replaces the `y` raise rate `1/lambda` with `gamma/lambda`.
    pub gamma: Option<Rat>,
}

impl CilpPolicyConfig {
    pub fn new(variant: CilpVariant) -> Self {
        Self { variant, gamma: None }
    }

    pub fn with_gamma(variant: CilpVariant, gamma: Rat) -> Self {
        Self {
            variant,
            gamma: Some(gamma),
        }
    }

    pub fn name(&self) -> String {
        match self.gamma {
            Some(g) => format!("{}:gamma={}", self.variant.name(), crate::rational::fmt_rat(&g)),
            None => self.variant.name().to_string(),
        }
    }
}

/// What firing a variable does to a file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Action {
    Evict(FileId),
    Zap(FileId),
    None,
}

#[derive(Debug, Clone)]
pub struct BuiltConstraint {
    pub kind: ConstraintKind,
    pub constraint: CoveringConstraint,
    actions: Vec<(VarId, Action)>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CilpStats {
    pub rent_evict_work: usize,
    pub cache_size_work: usize,
}

#[derive(Debug, Clone)]
pub struct CilpPolicy {
    config: CilpPolicyConfig,
    engine: CoveringEngine<VarKey>,
    last_request: HashMap<FileId, usize>,
    /// Files whose `x` fired at their own arrival step; they leave at the next step.
    pending_evict: BTreeSet<FileId>,
    log: Vec<WorkRecord>,
    stats: CilpStats,
}

impl CilpPolicy {
    pub fn new(config: CilpPolicyConfig) -> Self {
        Self {
            config,
            engine: CoveringEngine::new(),
            last_request: HashMap::new(),
            pending_evict: BTreeSet::new(),
            log: Vec::new(),
            stats: CilpStats::default(),
        }
    }

    pub fn variant(variant: CilpVariant) -> Self {
        Self::new(CilpPolicyConfig::new(variant))
    }

    pub fn config(&self) -> &CilpPolicyConfig {
        &self.config
    }

    pub fn engine(&self) -> &CoveringEngine<VarKey> {
        &self.engine
    }

    pub fn stats(&self) -> &CilpStats {
        &self.stats
    }

    fn check_params(&self, ctx: &StepCtx<'_>) -> Result<()> {
        let v = self.config.variant;
        if v.zapping() && ctx.params.zap_cost.is_none() {
            return Err(Error::Unsupported {
                policy: v.name().into(),
                reason: "zap cost required".into(),
            });
        }
        if self.config.gamma.is_some() && !v.rental() {
            return Err(Error::Unsupported {
                policy: v.name().into(),
                reason: "gamma applies to rental variants only".into(),
            });
        }
        if let Some(f) = ctx.requested() {
            if v.unit_sizes() && ctx.catalog.size(f) != 1 {
                return Err(Error::Unsupported {
                    policy: v.name().into(),
                    reason: format!("file `{}` is not unit size", ctx.catalog.get(f).name),
                });
            }
        }
        Ok(())
    }

    fn x_var(&mut self, ctx: &StepCtx<'_>, t: usize, f: FileId) -> VarId {
        self.engine.variable(VarKey::X(t), ctx.catalog.cost(f))
    }

    fn z_var(&mut self, ctx: &StepCtx<'_>, f: FileId) -> VarId {
        let n = ctx.params.zap_cost.unwrap_or_else(Rat::one);
        self.engine.variable(VarKey::Z(f), n)
    }

    fn latest(&self, f: FileId) -> usize {
        self.last_request[&f]
    }

    /// Rent-evict(-zap) constraints for every file in `resident` except
    /// the one requested now.
    pub fn rent_constraints(&mut self, ctx: &StepCtx<'_>, resident: &BTreeSet<FileId>) -> Vec<BuiltConstraint> {
        if !self.config.variant.rental() || ctx.params.lambda.is_zero() {
            return Vec::new();
        }
        resident
            .iter()
            .filter(|&&g| Some(g) != ctx.requested())
            .map(|&g| self.rent_constraint(ctx, g))
            .collect()
    }

    /// The rent-evict(-zap) constraint for `g` at the current step.
    pub fn rent_constraint(&mut self, ctx: &StepCtx<'_>, g: FileId) -> BuiltConstraint {
        let t = self.latest(g);
        let y = self.engine.variable(VarKey::Y(t, ctx.time), ctx.params.lambda);
        let x = self.x_var(ctx, t, g);
        let mut terms = vec![(y, int(1)), (x, int(1))];
        let mut actions = vec![(y, Action::None), (x, Action::Evict(g))];
        if self.config.variant.zapping() {
            let z = self.z_var(ctx, g);
            terms.push((z, int(1)));
            actions.push((z, Action::Zap(g)));
        }
        BuiltConstraint {
            kind: ConstraintKind::RentEvict,
            constraint: CoveringConstraint::from_terms(terms, int(1)),
            actions,
        }
    }

    /// The cache-size constraint for admitting the requested file into
    /// `resident`, if admission would overflow.
    pub fn cache_size_constraint(
        &mut self,
        ctx: &StepCtx<'_>,
        state: &CacheState,
        resident: &BTreeSet<FileId>,
    ) -> Result<Option<BuiltConstraint>> {
        let Some(f) = ctx.requested() else {
            return Ok(None);
        };
        if resident.contains(&f) || state.is_zapped(f) {
            return Ok(None);
        }
        let k = ctx.params.k;
        let used = ctx.catalog.total_size(resident);
        let need = ctx.catalog.size(f);
        if used + need <= k {
            return Ok(None);
        }
        let zapping = self.config.variant.zapping();
        if need > k && !zapping {
            return Err(Error::Unsupported {
                policy: self.config.name(),
                reason: format!("file `{}` is larger than the cache", ctx.catalog.get(f).name),
            });
        }
        let mut groups = Vec::new();
        let mut actions = Vec::new();
        for &g in resident {
            let t = self.latest(g);
            let x = self.x_var(ctx, t, g);
            let mut vars = vec![x];
            actions.push((x, Action::Evict(g)));
            if zapping {
                let z = self.z_var(ctx, g);
                vars.push(z);
                actions.push((z, Action::Zap(g)));
            }
            groups.push(TermGroup {
                vars,
                weight: int(ctx.catalog.size(g) as i128),
            });
        }
        if zapping {
            let z = self.z_var(ctx, f);
            groups.push(TermGroup {
                vars: vec![z],
                weight: int(need as i128),
            });
            actions.push((z, Action::Zap(f)));
        }
        Ok(Some(BuiltConstraint {
            kind: ConstraintKind::CacheSize,
            constraint: CoveringConstraint {
                groups,
                threshold: int((used + need - k) as i128),
            },
            actions,
        }))
    }

    /// Every constraint the step would emit against the cache as given,
    /// before any of them is worked on.
    pub fn constraints_for_step(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<Vec<BuiltConstraint>> {
        if let Some(f) = ctx.requested() {
            if state.is_resident(f) {
                self.last_request.insert(f, ctx.time);
            }
        }
        let mut out = self.rent_constraints(ctx, &state.resident);
        out.extend(self.cache_size_constraint(ctx, state, &state.resident)?);
        Ok(out)
    }

    fn work(&mut self, ctx: &StepCtx<'_>, built: &BuiltConstraint) -> Result<Vec<Action>> {
        let overrides: HashMap<VarId, Rat> = match (self.config.gamma, built.kind) {
            (Some(gamma), ConstraintKind::RentEvict) => built
                .constraint
                .vars()
                .filter(|v| matches!(self.engine.key(*v), VarKey::Y(..)))
                .map(|v| (v, gamma / ctx.params.lambda))
                .collect(),
            _ => HashMap::new(),
        };
        let report = self.engine.process_constraint(&built.constraint, &overrides)?;
        if !report.worked {
            return Ok(Vec::new());
        }
        match built.kind {
            ConstraintKind::RentEvict => self.stats.rent_evict_work += 1,
            ConstraintKind::CacheSize => self.stats.cache_size_work += 1,
        }
        self.log.push(self.record(ctx.time, built.kind, &report));
        Ok(report
            .fired
            .iter()
            .filter_map(|v| built.actions.iter().find(|(id, _)| id == v).map(|(_, a)| *a))
            .collect())
    }

    fn record(&self, time: usize, kind: ConstraintKind, report: &WorkReport) -> WorkRecord {
        WorkRecord {
            time,
            kind,
            tau: report.tau,
            variable_count: report.variable_count,
            objective_delta: report.objective_delta,
            fired: report.fired.iter().map(|v| *self.engine.key(*v)).collect(),
            raised: report
                .raised
                .iter()
                .map(|(v, before, after)| RaisedVar {
                    key: *self.engine.key(*v),
                    coefficient: self.engine.get(*v).coefficient,
                    before: *before,
                    after: *after,
                })
                .collect(),
        }
    }

    fn apply(actions: &[Action], resident: &mut BTreeSet<FileId>, decision: &mut PolicyDecision) {
        for a in actions {
            if let Action::Zap(f) = a {
                if !decision.zap.contains(f) {
                    decision.zap.push(*f);
                }
                resident.remove(f);
            }
        }
        for a in actions {
            if let Action::Evict(f) = a {
                if !decision.zap.contains(f) && resident.remove(f) {
                    decision.evict.push(*f);
                }
            }
        }
    }
}

impl Policy for CilpPolicy {
    fn name(&self) -> String {
        self.config.name()
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        self.check_params(ctx)?;
        let mut decision = PolicyDecision::none();
        let mut resident = state.resident.clone();
        for f in std::mem::take(&mut self.pending_evict) {
            if resident.remove(&f) {
                decision.evict.push(f);
            }
        }
        let requested = ctx.requested();
        if let Some(f) = requested {
            if resident.contains(&f) {
                self.last_request.insert(f, ctx.time);
            }
        }
        let before = resident.clone();
        for built in self.rent_constraints(ctx, &before) {
            let actions = self.work(ctx, &built)?;
            Self::apply(&actions, &mut resident, &mut decision);
        }
        if let Some(built) = self.cache_size_constraint(ctx, state, &resident)? {
            let actions = self.work(ctx, &built)?;
            Self::apply(&actions, &mut resident, &mut decision);
        }
        let Some(f) = requested else {
            return Ok(decision);
        };
        if state.is_zapped(f) || decision.zap.contains(&f) {
            return Ok(decision);
        }
        self.last_request.insert(f, ctx.time);
        if self.config.variant.rental() && self.config.variant.zapping() && !ctx.params.lambda.is_zero() {
            let built = self.rent_constraint(ctx, f);
            for action in self.work(ctx, &built)? {
                match action {
                    Action::Zap(_) => Self::apply(&[action], &mut resident, &mut decision),
                    Action::Evict(g) => {
                        self.pending_evict.insert(g);
                    }
                    Action::None => {}
                }
            }
        }
        Ok(decision)
    }

    fn drain_work_log(&mut self) -> Vec<WorkRecord> {
        std::mem::take(&mut self.log)
    }
}

/// Convenience: does this parameter set fall into the band where the
/// rental variants never work on cache-size constraints?
pub fn no_cache_size_work_expected(params: &ProblemParams, config: &CilpPolicyConfig) -> bool {
    let k = int(params.k as i128);
    let high = params.lambda >= Rat::one() / k;
    let middle = config.gamma.is_some() && recommended_gamma(params.k, params.lambda).is_some();
    config.variant.rental() && (high || middle)
}
