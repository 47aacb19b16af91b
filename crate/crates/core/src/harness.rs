//! Experiment orchestration: run policies on a trace, compare against the
//! exact optimum (or a certified upper bound on it), attach the proven
//! guarantee, and monitor the covering invariants of the LP policies.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::bounds::{big, big_fmt, e_ratio, harmonic};
use crate::cilp::{recommended_gamma, CilpPolicyConfig, CilpVariant};
use crate::baselines::BaselineKind;
use crate::error::{Error, Result};
use crate::model::{CostLedger, ProblemParams, Trace};
use crate::oracle::{check_limits, offline_upper_bound, opt, OracleSolution};
use crate::rational::{fmt_rat, int, Rat};
use crate::registry::PolicySpec;
use crate::rng::{domain, Seed};
use crate::sim::run;
use crate::ski::SkiKind;
use crate::worklog::{ConstraintKind, InvariantForm, PotentialChecker, WorkRecord};

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub trace: Trace,
    pub policies: Vec<PolicySpec>,
    pub params: ProblemParams,
    pub trials: usize,
    pub seed: Seed,
    /// Replay CILP work logs against the oracle's LP solution.
    pub check_invariants: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OptSource {
    Oracle,
    /// Cost of a feasible offline schedule: an upper bound on OPT, so the
    /// reported ratio is a lower bound on the true one.
    OfflineUpperBound,
}

impl OptSource {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Oracle => "oracle",
            Self::OfflineUpperBound => "offline-upper-bound",
        }
    }
}

/// The proven guarantee `ledger <= factor * OPT + slack` for a policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guarantee {
    pub factor: BigRational,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct PolicyRow {
    pub policy: String,
    pub trials: usize,
    /// Mean over trials for randomized policies.
    pub ledger: CostLedger,
    pub ratio: Option<Rat>,
    pub guarantee: Option<Guarantee>,
    /// `factor * OPT + slack - ledger`; negative means the guarantee failed.
    pub margin: Option<f64>,
    pub invariant_checks: usize,
    pub cache_size_work: usize,
    pub work_log: Vec<WorkRecord>,
}

#[derive(Debug, Clone)]
pub struct RatioReport {
    pub opt: Rat,
    pub opt_source: OptSource,
    pub slack: Rat,
    pub warnings: Vec<String>,
    pub rows: Vec<PolicyRow>,
}

/// Guarantee proven for `spec` under `params`, if any.
pub fn guarantee(spec: &PolicySpec, params: &ProblemParams) -> Option<Guarantee> {
    let k = params.k;
    let kb = BigRational::from_integer(BigInt::from(k));
    let one = BigRational::from_integer(1.into());
    let lambda = big(params.lambda);
    let high = params.lambda * int(k as i128) >= Rat::from_integer(1);
    let exact = |v: u64, label: &str| Some(Guarantee {
        factor: BigRational::from_integer(BigInt::from(v)),
        label: label.into(),
    });
    let two_k1 = 2 * k + 1;
    let caching_only = params.lambda.is_zero() && params.zap_cost.is_none();
    match spec {
        PolicySpec::Cilp { .. } => {
            let cfg = spec.cilp_config(params)?;
            let middle_gamma = cfg.gamma.is_some() && cfg.gamma == recommended_gamma(k, params.lambda);
            match cfg.variant {
                CilpVariant::Paging => exact(k, "k"),
                CilpVariant::RentalPaging if high && cfg.gamma.is_none() => exact(2, "2"),
                CilpVariant::RentalPaging if middle_gamma => Some(Guarantee {
                    factor: &one + &one / (&kb * &lambda),
                    label: "1+1/(k lambda)".into(),
                }),
                CilpVariant::RentalPaging | CilpVariant::RentalCaching => exact(k, "k"),
                CilpVariant::ZappingPaging | CilpVariant::ZappingCaching => exact(two_k1, "2k+1"),
                CilpVariant::RentalZappingPaging if high && cfg.gamma.is_none() => exact(3, "3"),
                CilpVariant::RentalZappingPaging if middle_gamma => Some(Guarantee {
                    factor: &one + BigRational::from_integer(2.into()) / (&kb * &lambda),
                    label: "1+2/(k lambda)".into(),
                }),
                CilpVariant::RentalZappingPaging | CilpVariant::RentalZappingCaching => exact(two_k1, "2k+1"),
            }
        }
        PolicySpec::HighRent(SkiKind::DeterministicBreakEven) => exact(2, "2"),
        PolicySpec::HighRent(SkiKind::RandomizedThreshold) => Some(Guarantee {
            factor: e_ratio(),
            label: "e/(e-1)".into(),
        }),
        PolicySpec::Baseline(BaselineKind::ZapFirst) => params.zap_cost.map(|n| Guarantee {
            factor: big(n),
            label: "N".into(),
        }),
        PolicySpec::Baseline(BaselineKind::Lru | BaselineKind::Fifo | BaselineKind::Fwf | BaselineKind::Marking)
            if caching_only =>
        {
            exact(k, "k")
        }
        PolicySpec::Baseline(BaselineKind::RandomizedMarking) if caching_only => Some(Guarantee {
            factor: BigRational::from_integer(2.into()) * harmonic(k),
            label: "2 H_k".into(),
        }),
        PolicySpec::Meta { inner, ski } if params.zap_cost.is_none() => {
            let inner_factor = match &**inner {
                PolicySpec::Baseline(BaselineKind::Lru | BaselineKind::Fifo | BaselineKind::Fwf | BaselineKind::Marking) => {
                    kb.clone()
                }
                PolicySpec::Baseline(BaselineKind::RandomizedMarking) => {
                    BigRational::from_integer(2.into()) * harmonic(k) - &one
                }
                _ => return None,
            };
            let ski_factor = match ski {
                SkiKind::DeterministicBreakEven => BigRational::from_integer(2.into()),
                SkiKind::RandomizedThreshold => e_ratio(),
            };
            Some(Guarantee {
                label: format!("{} + {}", big_fmt_short(&inner_factor), big_fmt_short(&ski_factor)),
                factor: inner_factor + ski_factor,
            })
        }
        _ => None,
    }
}

fn big_fmt_short(v: &BigRational) -> String {
    if v.denom() < &BigInt::from(1_000_000) {
        big_fmt(v)
    } else {
        format!("{:.9}", v.to_f64().unwrap_or(f64::NAN))
    }
}

fn mean(ledgers: &[CostLedger]) -> CostLedger {
    let n = int(ledgers.len().max(1) as i128);
    let mut sum = CostLedger::default();
    for l in ledgers {
        sum.add(l);
    }
    CostLedger {
        retrieval: sum.retrieval / n,
        rental: sum.rental / n,
        zapping: sum.zapping / n,
    }
}

/// Invariant forms that apply to a CILP configuration.
pub fn invariant_forms(config: &CilpPolicyConfig) -> Vec<InvariantForm> {
    match (config.gamma, config.variant.rental()) {
        (Some(gamma), true) => {
            let base = if config.variant.zapping() { 2 } else { 1 };
            vec![InvariantForm::Gamma { gamma, base }]
        }
        _ => vec![InvariantForm::Delta],
    }
}

/// Replays `log` against the oracle's LP solution under every applicable
/// potential inequality.
pub fn check_potential(config: &CilpPolicyConfig, solution: &OracleSolution, log: &[WorkRecord]) -> Result<usize> {
    let mut checks = 0;
    for form in invariant_forms(config) {
        let mut checker = PotentialChecker::new(solution.lp_assignment.clone(), form);
        checker.observe_all(log)?;
        checks += checker.checks();
    }
    Ok(checks)
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<RatioReport> {
    spec.params.validate()?;
    let mut warnings = Vec::new();
    let (opt_value, opt_source, solution) = if check_limits(&spec.trace, &spec.params).is_ok() {
        let s = opt(&spec.trace, &spec.params)?;
        (s.cost(), OptSource::Oracle, Some(s))
    } else {
        let (v, _) = offline_upper_bound(&spec.trace, &spec.params, true)?;
        warnings.push("instance exceeds oracle limits; OPT is an offline upper bound and ratios are lower bounds".into());
        (v, OptSource::OfflineUpperBound, None)
    };
    let slack = spec.trace.initial_load_cost();
    let mut rows = Vec::new();
    for policy in &spec.policies {
        let trials = if policy.is_randomized() {
            spec.trials.max(1)
        } else {
            if spec.trials > 1 {
                warnings.push(format!("{} is deterministic; ignoring trials = {}", policy.name(), spec.trials));
            }
            1
        };
        let mut ledgers = Vec::with_capacity(trials);
        let mut work_log = Vec::new();
        let mut invariant_checks = 0;
        for i in 0..trials {
            let seed = spec.seed.child(domain::TRIAL, i as u64);
            let result = run(&spec.trace, &spec.params, policy.build(&spec.params, seed))?;
            if let (Some(cfg), Some(sol), true) = (policy.cilp_config(&spec.params), &solution, spec.check_invariants) {
                invariant_checks += check_potential(&cfg, sol, &result.work_log)?;
            }
            ledgers.push(result.ledger);
            if i == 0 {
                work_log = result.work_log;
            }
        }
        let ledger = mean(&ledgers);
        let ratio = (!opt_value.is_zero()).then(|| ledger.total() / opt_value);
        let guarantee = guarantee(policy, &spec.params);
        let margin = guarantee.as_ref().and_then(|g| {
            (&g.factor * big(opt_value) + big(slack) - big(ledger.total())).to_f64()
        });
        rows.push(PolicyRow {
            policy: policy.name(),
            trials,
            ledger,
            ratio,
            guarantee,
            margin,
            invariant_checks,
            cache_size_work: work_log.iter().filter(|r| r.kind == ConstraintKind::CacheSize).count(),
            work_log,
        });
    }
    Ok(RatioReport {
        opt: opt_value,
        opt_source,
        slack,
        warnings,
        rows,
    })
}

impl PolicyRow {
    pub fn passes(&self) -> Option<bool> {
        self.margin.map(|m| m >= -1e-9)
    }

    fn to_json(&self) -> Value {
        json!({
            "policy": self.policy,
            "trials": self.trials,
            "ledger": self.ledger.to_json(),
            "ratio": self.ratio.map(|r| fmt_rat(&r)),
            "ratio_approx": self.ratio.map(|r| crate::rational::to_f64(&r)),
            "guarantee": self.guarantee.as_ref().map(|g| json!({
                "factor": big_fmt_short(&g.factor),
                "label": g.label,
            })),
            "margin": self.margin,
            "pass": self.passes(),
            "invariant_checks": self.invariant_checks,
            "cache_size_work": self.cache_size_work,
        })
    }
}

impl RatioReport {
    pub fn to_json(&self) -> Value {
        let mut policies = Map::new();
        for r in &self.rows {
            policies.insert(r.policy.clone(), r.to_json());
        }
        json!({
            "opt": fmt_rat(&self.opt),
            "opt_source": self.opt_source.name(),
            "slack": fmt_rat(&self.slack),
            "warnings": self.warnings,
            "policies": policies,
        })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record([
            "policy", "trials", "retrieval", "rental", "zapping", "total", "opt", "opt_source", "ratio", "guarantee",
            "slack", "margin", "pass",
        ])
        .map_err(io)?;
        let mut rows: Vec<&PolicyRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.policy.cmp(&b.policy));
        for r in rows {
            w.write_record([
                r.policy.clone(),
                r.trials.to_string(),
                fmt_rat(&r.ledger.retrieval),
                fmt_rat(&r.ledger.rental),
                fmt_rat(&r.ledger.zapping),
                fmt_rat(&r.ledger.total()),
                fmt_rat(&self.opt),
                self.opt_source.name().into(),
                r.ratio.map(|v| fmt_rat(&v)).unwrap_or_default(),
                r.guarantee.as_ref().map(|g| g.label.clone()).unwrap_or_default(),
                fmt_rat(&self.slack),
                r.margin.map(|m| format!("{m:.9}")).unwrap_or_default(),
                r.passes().map(|p| p.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }
}
