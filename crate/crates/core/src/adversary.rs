//! Request generators behind the lower bounds: two adaptive adversaries
//! that only look at the target's resident and zapped sets, and one
//! oblivious random one.

use std::collections::{BTreeSet, HashSet};

use num_traits::Zero;
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::{Catalog, CostLedger, Event, FileId, ProblemParams, Trace};
use crate::oracle::{check_limits, offline_upper_bound, opt, OfflineGreedy};
use crate::rational::{fmt_rat, int, to_f64, Rat};
use crate::rng::{domain, Seed};
use crate::sim::{run, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AdversaryVariant {
    RentalDeterministic,
    RentalRandomized,
    Zapping,
}

impl AdversaryVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "rental-det" => Some(Self::RentalDeterministic),
            "rental-rand" => Some(Self::RentalRandomized),
            "zapping" => Some(Self::Zapping),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RentalDeterministic => "rental-det",
            Self::RentalRandomized => "rental-rand",
            Self::Zapping => "zapping",
        }
    }
}

/// An upper bound on OPT and where it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    pub opt_upper: Rat,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct AdversaryRun {
    pub trace: Trace,
    /// The target's cost over the part of the trace the certificate covers.
    pub alg: CostLedger,
    pub certificate: Certificate,
    pub diagnostics: Vec<String>,
    pub zap_stats: Option<ZapStats>,
}

impl AdversaryRun {
    pub fn ratio(&self) -> Option<Rat> {
        (!self.certificate.opt_upper.is_zero()).then(|| self.alg.total() / self.certificate.opt_upper)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "steps": self.trace.len(),
            "alg": self.alg.to_json(),
            "opt_upper": fmt_rat(&self.certificate.opt_upper),
            "opt_provenance": self.certificate.provenance,
            "ratio": self.ratio().map(|r| to_f64(&r)),
            "diagnostics": self.diagnostics,
            "zap_stats": self.zap_stats.as_ref().map(ZapStats::to_json),
        })
    }
}

fn unit_catalog(n: usize) -> Catalog {
    let mut c = Catalog::new();
    for i in 0..n {
        c.add(crate::gen::file_name(i), 1, Rat::from_integer(1)).expect("fresh name");
    }
    c
}

/// OPT upper bound for a finished trace: the exact oracle when feasible,
/// else the cheapest offline greedy schedule.
pub fn certify(trace: &Trace, params: &ProblemParams) -> Result<Certificate> {
    let (opt_upper, provenance) = offline_upper_bound(trace, params, true)?;
    Ok(Certificate {
        opt_upper,
        provenance: provenance.into(),
    })
}

/// Each step requests the lowest-id file of a fixed `(k+1)`-set that the
/// target does not hold.
pub fn rental_det_adversary(target: &mut impl Target, params: &ProblemParams, steps: usize) -> Result<AdversaryRun> {
    let catalog = unit_catalog(params.k as usize + 1);
    let mut events = Vec::with_capacity(steps);
    for _ in 0..steps {
        let f = catalog
            .ids()
            .find(|f| !target.resident().contains(f))
            .unwrap_or(FileId(0));
        let e = Event::Request(f);
        target.serve(&catalog, &e)?;
        events.push(e);
    }
    let trace = Trace::new(catalog, events);
    let certificate = if trace.is_empty() {
        Certificate {
            opt_upper: Rat::zero(),
            provenance: "empty".into(),
        }
    } else {
        certify(&trace, params)?
    };
    Ok(AdversaryRun {
        alg: target.ledger().clone(),
        trace,
        certificate,
        diagnostics: Vec::new(),
        zap_stats: None,
    })
}

/// Oblivious: uniform over the `k+1` files except the previous request.
pub fn rental_rand_adversary(k: u64, steps: usize, seed: Seed) -> Trace {
    let n = k as usize + 1;
    let catalog = unit_catalog(n);
    let mut rng = seed.stream(domain::ADVERSARY, k, 0);
    let mut events = Vec::with_capacity(steps);
    let mut prev: Option<usize> = None;
    for _ in 0..steps {
        let i = match prev {
            None => rng.gen_range(0..n),
            Some(p) => {
                let j = rng.gen_range(0..n - 1);
                if j >= p {
                    j + 1
                } else {
                    j
                }
            }
        };
        events.push(Event::Request(FileId(i as u32)));
        prev = Some(i);
    }
    Trace::new(catalog, events)
}

/// Lengths of the complete phases: maximal runs with at most `k` distinct
/// files, the last (unfinished) run excluded.
pub fn phase_lengths(trace: &Trace, k: u64) -> Vec<usize> {
    let mut out = Vec::new();
    let mut seen: HashSet<FileId> = HashSet::new();
    let mut len = 0;
    for f in trace.events.iter().filter_map(Event::file) {
        if !seen.contains(&f) && seen.len() as u64 == k {
            out.push(len);
            seen.clear();
            len = 0;
        }
        seen.insert(f);
        len += 1;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStats {
    pub phases: usize,
    pub mean_length: f64,
    /// `sum_{i=1..k} k/(k-i+1) = k H_k`.
    pub expected_k_hk: f64,
    pub harmonic_k: f64,
}

pub fn phase_stats(trace: &Trace, k: u64) -> PhaseStats {
    let lengths = phase_lengths(trace, k);
    let mean_length = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().sum::<usize>() as f64 / lengths.len() as f64
    };
    let harmonic_k: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
    PhaseStats {
        phases: lengths.len(),
        mean_length,
        expected_k_hk: k as f64 * harmonic_k,
        harmonic_k,
    }
}

impl PhaseStats {
    pub fn to_json(&self) -> Value {
        json!({
            "phases": self.phases,
            "mean_phase_length": self.mean_length,
            "expected_k_hk": self.expected_k_hk,
            "h_k": self.harmonic_k,
        })
    }
}

/// Zap-phase and round bookkeeping of a zapping-adversary run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ZapStats {
    pub rounds: Vec<RoundStats>,
    /// Requests after the last complete round.
    pub trailing_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundStats {
    pub start: usize,
    /// Exclusive.
    pub end: usize,
    /// Zap-phase lengths `H_j`, one per zap.
    pub phase_lengths: Vec<usize>,
    pub alg: CostLedger,
    /// `min(k + T - 1 + sum H_j / k, k + T + N - 1)`.
    pub formula_opt: Rat,
    /// Cheapest offline greedy schedule on the round alone.
    pub simulated_opt: Rat,
}

impl RoundStats {
    pub fn zaps(&self) -> usize {
        self.phase_lengths.len()
    }
}

impl ZapStats {
    pub fn alg_total(&self) -> Rat {
        self.rounds.iter().map(|r| r.alg.total()).sum()
    }

    pub fn formula_opt(&self) -> Rat {
        self.rounds.iter().map(|r| r.formula_opt).sum()
    }

    pub fn simulated_opt(&self) -> Rat {
        self.rounds.iter().map(|r| r.simulated_opt).sum()
    }

    pub fn formula_ratio(&self) -> Option<Rat> {
        let d = self.formula_opt();
        (!d.is_zero()).then(|| self.alg_total() / d)
    }

    pub fn to_json(&self) -> Value {
        let mean_zaps = if self.rounds.is_empty() {
            0.0
        } else {
            self.rounds.iter().map(RoundStats::zaps).sum::<usize>() as f64 / self.rounds.len() as f64
        };
        json!({
            "complete_rounds": self.rounds.len(),
            "mean_zaps_per_round": mean_zaps,
            "trailing_steps": self.trailing_steps,
            "formula_opt": fmt_rat(&self.formula_opt()),
            "simulated_opt": fmt_rat(&self.simulated_opt()),
            "formula_ratio": self.formula_ratio().map(|r| to_f64(&r)),
        })
    }
}

/// Keeps a `(k+1)`-set, replaces zapped members with fresh files, and
/// requests the lowest-id member the target does not hold. Stops after
/// `rounds` complete rounds or `max_steps` requests.
pub fn zapping_adversary(
    target: &mut impl Target,
    params: &ProblemParams,
    rounds: usize,
    max_steps: usize,
) -> Result<AdversaryRun> {
    let n = params
        .zap_cost
        .ok_or_else(|| Error::Params("the zapping adversary needs a zap cost".into()))?;
    let k = params.k as usize;
    let mut catalog = unit_catalog(k + 1);
    let mut set: Vec<FileId> = catalog.ids().collect();
    let mut events = Vec::new();
    let mut deltas: Vec<CostLedger> = Vec::new();
    let mut zaps_at: Vec<usize> = Vec::new();

    let mut stats = ZapStats::default();
    let mut round_start = 0;
    let mut round_files: BTreeSet<FileId> = BTreeSet::new();
    let mut phase_start = 0;
    let mut phases: Vec<usize> = Vec::new();

    while stats.rounds.len() < rounds && events.len() < max_steps {
        let t = events.len();
        let f = *set
            .iter()
            .filter(|f| !target.resident().contains(f))
            .min()
            .expect("k+1 files cannot all fit");
        let e = Event::Request(f);
        let zapped_before = target.zapped().clone();
        deltas.push(target.serve(&catalog, &e)?);
        events.push(e);
        if t - round_start < k + 1 {
            round_files.insert(f);
        }
        let new_zaps: Vec<FileId> = target.zapped().difference(&zapped_before).copied().collect();
        for (i, z) in new_zaps.iter().enumerate() {
            zaps_at.push(t);
            phases.push(if i == 0 { t + 1 - phase_start } else { 0 });
            if let Some(slot) = set.iter_mut().find(|s| **s == *z) {
                let name = crate::gen::file_name(catalog.len());
                *slot = catalog.add(name, 1, Rat::from_integer(1))?;
            }
        }
        if !new_zaps.is_empty() {
            phase_start = t + 1;
        }
        let round_done = t + 1 - round_start > k && round_files.iter().all(|g| target.zapped().contains(g));
        if round_done {
            let sub = Trace::new(catalog.clone(), events[round_start..=t].to_vec());
            let mut alg = CostLedger::default();
            for d in &deltas[round_start..=t] {
                alg.add(d);
            }
            let zap_count = int(phases.len() as i128);
            let kk = int(k as i128);
            let h: Rat = phases.iter().map(|h| int(*h as i128)).sum();
            let no_zap = kk + zap_count - int(1) + h / kk;
            let one_zap = kk + zap_count + n - int(1);
            let formula_opt = no_zap.min(one_zap);
            let simulated_opt = round_certificate(&sub, params, &round_files)?;
            stats.rounds.push(RoundStats {
                start: round_start,
                end: t + 1,
                phase_lengths: std::mem::take(&mut phases),
                alg,
                formula_opt,
                simulated_opt,
            });
            round_start = t + 1;
            phase_start = t + 1;
            round_files.clear();
        }
    }
    stats.trailing_steps = events.len() - round_start;
    let mut diagnostics = Vec::new();
    if stats.rounds.len() < rounds {
        diagnostics.push(format!(
            "step budget {max_steps} reached after {} complete rounds; the target may never zap",
            stats.rounds.len()
        ));
    }
    let trace = Trace::new(catalog, events);
    let simulated = stats.simulated_opt();
    let formula = stats.formula_opt();
    let (opt_upper, provenance) = if stats.rounds.is_empty() {
        (Rat::zero(), "no complete round")
    } else if simulated <= formula {
        (simulated, "per-round offline schedules")
    } else {
        (formula, "per-round offline formula")
    };
    Ok(AdversaryRun {
        alg: CostLedger {
            retrieval: stats.rounds.iter().map(|r| r.alg.retrieval).sum(),
            rental: stats.rounds.iter().map(|r| r.alg.rental).sum(),
            zapping: stats.rounds.iter().map(|r| r.alg.zapping).sum(),
        },
        trace,
        certificate: Certificate {
            opt_upper,
            provenance: provenance.into(),
        },
        diagnostics,
        zap_stats: Some(stats),
    })
}

/// The two offline options on one round, started from an empty cache:
/// no zaps, or zap one of the round's first files on its first request.
/// Both run furthest-in-future eviction.
fn round_certificate(round: &Trace, params: &ProblemParams, first_files: &BTreeSet<FileId>) -> Result<Rat> {
    if check_limits(round, params).is_ok() {
        return Ok(opt(round, params)?.cost());
    }
    let mut best: Option<Rat> = None;
    let mut options: Vec<BTreeSet<FileId>> = vec![BTreeSet::new()];
    options.extend(first_files.iter().map(|f| BTreeSet::from([*f])));
    for zaps in options {
        let r = run(round, params, OfflineGreedy::new(round, zaps, false))?;
        let c = r.ledger.total();
        if best.is_none_or(|b| c < b) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one option"))
}
