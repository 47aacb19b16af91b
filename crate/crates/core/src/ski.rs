//! Ski-rental strategies and the per-file rental algorithms built on them.
//!
//! A file's phase runs from a request to the step before its next request.
//! Every idle step after the arrival step is one ski-rental day: renting
//! costs `lambda`, buying means evicting (a later re-request pays
//! `cost(f)`).

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{CacheState, FileId, PolicyDecision};
use crate::rational::{ceil_int, int, Rat};
use crate::rng::{domain, Seed};
use crate::sim::{Policy, StepCtx};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SkiKind {
    DeterministicBreakEven,
    RandomizedThreshold,
}

impl SkiKind {
    pub fn tag(self) -> &'static str {
        match self {
            Self::DeterministicBreakEven => "det",
            Self::RandomizedThreshold => "rand",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "det" => Some(Self::DeterministicBreakEven),
            "rand" => Some(Self::RandomizedThreshold),
            _ => None,
        }
    }
}

/// Break-even day `ceil(buy / rent)`, at least 1. `None` when renting is
/// free and buying never pays off.
pub fn break_even(rent: Rat, buy: Rat) -> Option<u64> {
    if rent.is_zero() {
        return None;
    }
    Some(ceil_int(&(buy / rent)).max(1) as u64)
}

/// One ski-rental instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkiRentalStrategy {
    pub kind: SkiKind,
    pub rent: Rat,
    pub buy: Rat,
    /// Buy day: `B` for the deterministic rule, a sample for the
    /// randomized one, `None` if the strategy never buys.
    pub drawn_threshold: Option<u64>,
}

impl SkiRentalStrategy {
    pub fn deterministic(rent: Rat, buy: Rat) -> Self {
        Self {
            kind: SkiKind::DeterministicBreakEven,
            rent,
            buy,
            drawn_threshold: break_even(rent, buy),
        }
    }

    pub fn randomized(rent: Rat, buy: Rat, rng: &mut impl Rng) -> Self {
        Self {
            kind: SkiKind::RandomizedThreshold,
            rent,
            buy,
            drawn_threshold: break_even(rent, buy).map(|b| sample_buy_day(b, rng)),
        }
    }

    pub fn new(kind: SkiKind, rent: Rat, buy: Rat, rng: &mut impl Rng) -> Self {
        match kind {
            SkiKind::DeterministicBreakEven => Self::deterministic(rent, buy),
            SkiKind::RandomizedThreshold => Self::randomized(rent, buy, rng),
        }
    }

    /// `step_index` counts idle days of the phase, starting at 1.
    pub fn should_buy(&self, step_index: u64) -> bool {
        self.drawn_threshold.is_some_and(|d| step_index >= d)
    }
}

/// Samples `i` in `1..=b` with probability proportional to
/// `(1 - 1/b)^(b - i)`, by inverting the geometric CDF.
pub fn sample_buy_day(b: u64, rng: &mut impl Rng) -> u64 {
    if b <= 1 {
        return 1;
    }
    let r = 1.0 - 1.0 / b as f64;
    let rb = r.powf(b as f64);
    let u: f64 = rng.gen();
    // CDF(i) = (r^(b-i) - r^b) / (1 - r^b)
    let level = u * (1.0 - rb) + rb;
    let i = b as f64 - level.ln() / r.ln();
    (i.ceil() as i64).clamp(1, b as i64) as u64
}

/// Exact probabilities of the randomized buy day, `p[i-1]` for day `i`.
pub fn buy_day_distribution(b: u64) -> Vec<BigRational> {
    if b <= 1 {
        return vec![BigRational::one()];
    }
    let r = BigRational::new(BigInt::from(b - 1), BigInt::from(b));
    let weights: Vec<BigRational> = (1..=b).map(|i| pow(&r, b - i)).collect();
    let total: BigRational = weights.iter().cloned().sum();
    weights.into_iter().map(|w| w / &total).collect()
}

fn pow(base: &BigRational, exp: u64) -> BigRational {
    let mut out = BigRational::one();
    for _ in 0..exp {
        out *= base;
    }
    out
}

/// Cost with unit rent and buy price `b` when the season lasts `stop` days
/// and the skier buys on day `day`.
pub fn season_cost(b: u64, day: u64, stop: u64) -> u64 {
    if day <= stop {
        day - 1 + b
    } else {
        stop
    }
}

pub fn season_opt(b: u64, stop: u64) -> u64 {
    stop.min(b)
}

/// Exact expected cost ratio of the randomized rule against a season of
/// `stop` days.
pub fn randomized_expected_ratio(b: u64, stop: u64) -> BigRational {
    let expected: BigRational = buy_day_distribution(b)
        .into_iter()
        .enumerate()
        .map(|(i, p)| p * BigRational::from_integer(BigInt::from(season_cost(b, i as u64 + 1, stop))))
        .sum();
    expected / BigRational::from_integer(BigInt::from(season_opt(b, stop)))
}

/// Worst deterministic ratio over seasons `1..=max_stop`.
pub fn deterministic_worst_ratio(b: u64, max_stop: u64) -> Rat {
    (1..=max_stop)
        .map(|s| Rat::new(season_cost(b, b, s) as i128, season_opt(b, s) as i128))
        .max()
        .unwrap_or_else(Rat::zero)
}

#[derive(Debug, Clone)]
struct Phase {
    start: usize,
    strategy: SkiRentalStrategy,
}

/// Per-file phase bookkeeping shared by ALG-infinity and its bounded
/// adaptation.
#[derive(Debug, Clone)]
pub struct PhaseTracker {
    kind: SkiKind,
    seed: Seed,
    phases: HashMap<FileId, Phase>,
    phase_counts: HashMap<FileId, u64>,
}

impl PhaseTracker {
    pub fn new(kind: SkiKind, seed: Seed) -> Self {
        Self {
            kind,
            seed,
            phases: HashMap::new(),
            phase_counts: HashMap::new(),
        }
    }

    pub fn start(&mut self, f: FileId, time: usize, rent: Rat, buy: Rat) {
        let n = self.phase_counts.entry(f).or_insert(0);
        let mut rng = self.seed.stream(domain::SKI_RENTAL, f.0 as u64, *n);
        *n += 1;
        let strategy = SkiRentalStrategy::new(self.kind, rent, buy, &mut rng);
        self.phases.insert(f, Phase { start: time, strategy });
    }

    /// Idle day index of `f` at `time` (1 on the step after arrival).
    pub fn idle_days(&self, f: FileId, time: usize) -> Option<u64> {
        self.phases.get(&f).map(|p| (time - p.start) as u64)
    }

    pub fn should_evict(&self, f: FileId, time: usize) -> bool {
        match self.phases.get(&f) {
            Some(p) => time > p.start && p.strategy.should_buy((time - p.start) as u64),
            None => false,
        }
    }

    pub fn strategy(&self, f: FileId) -> Option<&SkiRentalStrategy> {
        self.phases.get(&f).map(|p| &p.strategy)
    }
}

/// ALG-infinity (`unbounded`) or the rental-paging adaptation that runs
/// the same rule inside the size-k cache.
#[derive(Debug, Clone)]
pub struct SkiRentalPolicy {
    kind: SkiKind,
    bounded: bool,
    tracker: PhaseTracker,
}

impl SkiRentalPolicy {
    pub fn alg_infinity(kind: SkiKind, seed: Seed) -> Self {
        Self {
            kind,
            bounded: false,
            tracker: PhaseTracker::new(kind, seed),
        }
    }

    pub fn high_rent(kind: SkiKind, seed: Seed) -> Self {
        Self {
            kind,
            bounded: true,
            tracker: PhaseTracker::new(kind, seed),
        }
    }

    pub fn tracker(&self) -> &PhaseTracker {
        &self.tracker
    }
}

impl Policy for SkiRentalPolicy {
    fn name(&self) -> String {
        let base = if self.bounded { "high-rent" } else { "alg-inf" };
        format!("{base}:{}", self.kind.tag())
    }

    fn unbounded(&self) -> bool {
        !self.bounded
    }

    fn is_randomized(&self) -> bool {
        self.kind == SkiKind::RandomizedThreshold
    }

    fn decide(&mut self, ctx: &StepCtx<'_>, state: &CacheState) -> Result<PolicyDecision> {
        let params = ctx.params;
        if self.bounded {
            let k = int(params.k as i128);
            if params.lambda * k < Rat::one() {
                return Err(Error::Params(format!(
                    "{} needs lambda >= 1/k (lambda = {}, k = {})",
                    self.name(),
                    crate::rational::fmt_rat(&params.lambda),
                    params.k
                )));
            }
        }
        let requested = ctx.requested();
        let mut decision = PolicyDecision::none();
        for &f in &state.resident {
            if Some(f) != requested && self.tracker.should_evict(f, ctx.time) {
                decision.evict.push(f);
            }
        }
        if let Some(f) = requested {
            if !state.is_zapped(f) {
                self.tracker.start(f, ctx.time, params.lambda, ctx.catalog.cost(f));
            }
            if self.bounded && !state.is_resident(f) {
                let used = ctx.catalog.total_size(state.resident.iter().filter(|g| !decision.evict.contains(g)));
                if used + ctx.catalog.size(f) > params.k {
                    return Err(Error::Invariant(format!(
                        "{} would exceed the cache at step {}: ski-rental thresholds exceed k",
                        self.name(),
                        ctx.time
                    )));
                }
            }
        }
        Ok(decision)
    }
}
