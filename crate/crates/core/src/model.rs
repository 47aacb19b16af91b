//! Files, traces, problem parameters, cache state and exact cost accounting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{fmt_rat, int, Rat};

/// Index of a file in its [`Catalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FileId(pub u32);

impl FileId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for FileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileSpec {
    pub name: String,
    pub size: u64,
    pub cost: Rat,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Catalog {
    files: Vec<FileSpec>,
    by_name: HashMap<String, FileId>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a file; sizes must be at least 1 and costs nonnegative.
    pub fn add(&mut self, name: impl Into<String>, size: u64, cost: Rat) -> Result<FileId> {
        let name = name.into();
        if size == 0 {
            return Err(Error::Params(format!("file `{name}` has size 0")));
        }
        if cost < Rat::zero() {
            return Err(Error::Params(format!("file `{name}` has negative cost")));
        }
        if self.by_name.contains_key(&name) {
            return Err(Error::Params(format!("duplicate file `{name}`")));
        }
        let id = FileId(self.files.len() as u32);
        self.by_name.insert(name.clone(), id);
        self.files.push(FileSpec { name, size, cost });
        Ok(id)
    }

    /// Unit-size, unit-cost files named `f0`, `f1`, ...
    pub fn unit(count: usize) -> Self {
        let mut catalog = Self::new();
        for i in 0..count {
            catalog.add(format!("f{i}"), 1, Rat::one()).expect("fresh names");
        }
        catalog
    }

    pub fn get(&self, id: FileId) -> &FileSpec {
        &self.files[id.index()]
    }

    pub fn try_get(&self, id: FileId) -> Option<&FileSpec> {
        self.files.get(id.index())
    }

    pub fn lookup(&self, name: &str) -> Option<FileId> {
        self.by_name.get(name).copied()
    }

    pub fn size(&self, id: FileId) -> u64 {
        self.get(id).size
    }

    pub fn cost(&self, id: FileId) -> Rat {
        self.get(id).cost
    }

    pub fn len(&self) -> usize {
        self.files.len()
    }

    pub fn is_empty(&self) -> bool {
        self.files.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = FileId> + '_ {
        (0..self.files.len() as u32).map(FileId)
    }

    pub fn files(&self) -> &[FileSpec] {
        &self.files
    }

    pub fn total_size<'a>(&self, ids: impl IntoIterator<Item = &'a FileId>) -> u64 {
        ids.into_iter().map(|&id| self.size(id)).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    Request(FileId),
    Tick,
}

impl Event {
    pub fn file(&self) -> Option<FileId> {
        match self {
            Event::Request(f) => Some(*f),
            Event::Tick => None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Trace {
    pub catalog: Catalog,
    pub events: Vec<Event>,
}

impl Trace {
    pub fn new(catalog: Catalog, events: Vec<Event>) -> Self {
        Self { catalog, events }
    }

    /// Builds a unit-file trace from a compact script: one character per
    /// step, `.` for a tick, any other character names a file.
    pub fn from_script(script: &str) -> Self {
        let mut catalog = Catalog::new();
        let mut events = Vec::new();
        for c in script.chars().filter(|c| !c.is_whitespace()) {
            if c == '.' {
                events.push(Event::Tick);
                continue;
            }
            let name = c.to_string();
            let id = match catalog.lookup(&name) {
                Some(id) => id,
                None => catalog.add(name, 1, Rat::one()).expect("fresh name"),
            };
            events.push(Event::Request(id));
        }
        Self { catalog, events }
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Index of the last request, if any.
    pub fn last_request(&self) -> Option<usize> {
        self.events.iter().rposition(|e| matches!(e, Event::Request(_)))
    }

    /// For every request index `t`, the index of the next request to the
    /// same file (`None` stands for +infinity).
    pub fn next_requests(&self) -> Vec<Option<usize>> {
        let mut next = vec![None; self.events.len()];
        let mut seen: HashMap<FileId, usize> = HashMap::new();
        for (t, e) in self.events.iter().enumerate().rev() {
            if let Event::Request(f) = e {
                next[t] = seen.get(f).copied();
                seen.insert(*f, t);
            }
        }
        next
    }

    /// Most recent request time of each file, up to and including `t`.
    pub fn recent(&self, t: usize) -> BTreeMap<FileId, usize> {
        let mut out = BTreeMap::new();
        for (s, e) in self.events.iter().enumerate().take(t + 1) {
            if let Event::Request(f) = e {
                out.insert(*f, s);
            }
        }
        out
    }

    /// Files requested at least once, in first-request order.
    pub fn distinct_requested(&self) -> Vec<FileId> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for f in self.events.iter().filter_map(Event::file) {
            if seen.insert(f) {
                out.push(f);
            }
        }
        out
    }

    /// Total retrieval cost of loading every requested file once; the
    /// additive slack used in competitive-ratio checks.
    pub fn initial_load_cost(&self) -> Rat {
        self.distinct_requested()
            .into_iter()
            .map(|f| self.catalog.cost(f))
            .sum()
    }

    pub fn request_count(&self) -> usize {
        self.events.iter().filter(|e| e.file().is_some()).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostModel {
    /// Unit sizes and unit costs.
    Paging,
    /// Unit sizes, arbitrary costs.
    WeightedPaging,
    /// cost(f) = size(f).
    BitModel,
    /// cost(f) = 1.
    FaultModel,
    General,
}

impl CostModel {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "paging" => Self::Paging,
            "weighted-paging" | "weighted" => Self::WeightedPaging,
            "bit" | "bit-model" => Self::BitModel,
            "fault" | "fault-model" => Self::FaultModel,
            "general" => Self::General,
            other => return Err(Error::Params(format!("unknown cost model `{other}`"))),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Paging => "paging",
            Self::WeightedPaging => "weighted-paging",
            Self::BitModel => "bit",
            Self::FaultModel => "fault",
            Self::General => "general",
        }
    }

    pub fn unit_sizes(self) -> bool {
        matches!(self, Self::Paging | Self::WeightedPaging)
    }
}

/// How rent is charged for a resident file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RentMode {
    /// `lambda` per resident file per step.
    #[default]
    PerFile,
    /// `lambda * size(f)` per resident file per step.
    PerSize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemParams {
    pub k: u64,
    pub lambda: Rat,
    pub zap_cost: Option<Rat>,
    pub model: CostModel,
    pub rent_mode: RentMode,
}

impl ProblemParams {
    pub fn new(k: u64, lambda: Rat) -> Self {
        Self {
            k,
            lambda,
            zap_cost: None,
            model: CostModel::General,
            rent_mode: RentMode::PerFile,
        }
    }

    pub fn paging(k: u64, lambda: Rat) -> Self {
        Self {
            model: CostModel::Paging,
            ..Self::new(k, lambda)
        }
    }

    pub fn with_zap(mut self, zap_cost: Rat) -> Self {
        self.zap_cost = Some(zap_cost);
        self
    }

    pub fn with_model(mut self, model: CostModel) -> Self {
        self.model = model;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Params("cache size k must be positive".into()));
        }
        if self.lambda < Rat::zero() {
            return Err(Error::Params("rental rate must be nonnegative".into()));
        }
        if let Some(n) = self.zap_cost {
            if n < Rat::one() {
                return Err(Error::Params("zap cost must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn rent_for(&self, catalog: &Catalog, resident: &BTreeSet<FileId>) -> Rat {
        if self.lambda.is_zero() {
            return Rat::zero();
        }
        match self.rent_mode {
            RentMode::PerFile => self.lambda * int(resident.len() as i128),
            RentMode::PerSize => self.lambda * int(catalog.total_size(resident) as i128),
        }
    }
}

/// Contents of the size-k cache and of the unbounded zap cache.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CacheState {
    pub resident: BTreeSet<FileId>,
    pub zapped: BTreeSet<FileId>,
    pub used: u64,
}

impl CacheState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_resident(&self, f: FileId) -> bool {
        self.resident.contains(&f)
    }

    pub fn is_zapped(&self, f: FileId) -> bool {
        self.zapped.contains(&f)
    }
}

/// Exact cost accumulators. Also used for per-step deltas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CostLedger {
    pub retrieval: Rat,
    pub rental: Rat,
    pub zapping: Rat,
}

pub type LedgerDelta = CostLedger;

impl Default for CostLedger {
    fn default() -> Self {
        Self {
            retrieval: Rat::zero(),
            rental: Rat::zero(),
            zapping: Rat::zero(),
        }
    }
}

impl CostLedger {
    pub fn total(&self) -> Rat {
        self.retrieval + self.rental + self.zapping
    }

    pub fn add(&mut self, delta: &LedgerDelta) {
        self.retrieval += delta.retrieval;
        self.rental += delta.rental;
        self.zapping += delta.zapping;
    }

    pub fn is_zero(&self) -> bool {
        self.total().is_zero()
    }

    /// Component-wise `self <= other`.
    pub fn dominated_by(&self, other: &CostLedger) -> bool {
        self.retrieval <= other.retrieval && self.rental <= other.rental && self.zapping <= other.zapping
    }

    pub fn to_json(&self) -> Value {
        json!({
            "retrieval": fmt_rat(&self.retrieval),
            "rental": fmt_rat(&self.rental),
            "zapping": fmt_rat(&self.zapping),
            "total": fmt_rat(&self.total()),
        })
    }
}

impl std::ops::Add for &CostLedger {
    type Output = CostLedger;

    fn add(self, rhs: &CostLedger) -> CostLedger {
        let mut out = self.clone();
        CostLedger::add(&mut out, rhs);
        out
    }
}

/// Evictions and zaps a policy applies before the event is served. Loading
/// the requested file is implicit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PolicyDecision {
    pub evict: Vec<FileId>,
    pub zap: Vec<FileId>,
}

impl PolicyDecision {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.evict.is_empty() && self.zap.is_empty()
    }
}

/// Applies `decision`, serves `event`, and charges the step's costs.
///
/// Retrieval is charged iff the requested file ends up loaded from outside
/// both caches. Rent is charged on the resident set after the step, so a
/// file pays for its arrival step and not for the step in which it is
/// evicted. Requests to zapped files are free.
pub fn advance_step(
    state: &mut CacheState,
    catalog: &Catalog,
    params: &ProblemParams,
    time: usize,
    event: &Event,
    decision: &PolicyDecision,
) -> Result<LedgerDelta> {
    let mut delta = LedgerDelta::default();
    for &f in &decision.evict {
        if !state.resident.remove(&f) {
            return Err(Error::InvalidDecision {
                time,
                reason: format!("evicting non-resident file {}", name_of(catalog, f)),
            });
        }
        state.used -= catalog.size(f);
    }
    if !decision.zap.is_empty() {
        let Some(n) = params.zap_cost else {
            return Err(Error::ZapDisabled(time));
        };
        for &f in &decision.zap {
            if catalog.try_get(f).is_none() {
                return Err(Error::UnknownFile(f.to_string()));
            }
            if !state.zapped.insert(f) {
                return Err(Error::InvalidDecision {
                    time,
                    reason: format!("file {} is already zapped", name_of(catalog, f)),
                });
            }
            if state.resident.remove(&f) {
                state.used -= catalog.size(f);
            }
            delta.zapping += n;
        }
    }
    if let Event::Request(f) = *event {
        let spec = catalog
            .try_get(f)
            .ok_or_else(|| Error::UnknownFile(f.to_string()))?;
        if !state.zapped.contains(&f) && !state.resident.contains(&f) {
            state.resident.insert(f);
            state.used += spec.size;
            delta.retrieval += spec.cost;
        }
    }
    if state.used > params.k {
        return Err(Error::Capacity {
            time,
            used: state.used,
            capacity: params.k,
        });
    }
    delta.rental = params.rent_for(catalog, &state.resident);
    Ok(delta)
}

fn name_of(catalog: &Catalog, f: FileId) -> String {
    catalog
        .try_get(f)
        .map(|s| s.name.clone())
        .unwrap_or_else(|| f.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceIssue {
    pub severity: Severity,
    pub message: String,
}

/// Reports unknown ids, cost-model violations and uncacheable files.
/// An empty list means the trace is valid.
pub fn validate_trace(trace: &Trace, params: &ProblemParams) -> Vec<TraceIssue> {
    let mut issues = Vec::new();
    let mut error = |message: String| {
        issues.push(TraceIssue {
            severity: Severity::Error,
            message,
        })
    };
    if let Err(e) = params.validate() {
        error(e.to_string());
    }
    for (t, e) in trace.events.iter().enumerate() {
        if let Event::Request(f) = e {
            if trace.catalog.try_get(*f).is_none() {
                error(format!("step {t}: request to unknown file {f}"));
            }
        }
    }
    for spec in trace.catalog.files() {
        let one = Rat::one();
        let violation = match params.model {
            CostModel::Paging if spec.size != 1 || spec.cost != one => Some("paging needs size 1 and cost 1"),
            CostModel::WeightedPaging if spec.size != 1 => Some("weighted paging needs size 1"),
            CostModel::FaultModel if spec.cost != one => Some("fault model needs cost 1"),
            CostModel::BitModel if spec.cost != int(spec.size as i128) => Some("bit model needs cost = size"),
            _ => None,
        };
        if let Some(why) = violation {
            error(format!("file `{}`: {why}", spec.name));
        }
    }
    for spec in trace.catalog.files() {
        if spec.size > params.k {
            issues.push(TraceIssue {
                severity: Severity::Warning,
                message: format!(
                    "file `{}` is uncacheable: size {} exceeds k = {}",
                    spec.name, spec.size, params.k
                ),
            });
        }
    }
    issues
}
