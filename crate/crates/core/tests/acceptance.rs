//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! Corpus C: 500 seeded unit-file instances (k in 1..=3, at most 6 files,
//! 14 steps) plus 500 sized/costed instances for the caching rows. The
//! additive slack `c` is the cost of loading every requested file once.

use std::cell::RefCell;

use cachelab::adversary::{phase_stats, rental_det_adversary, rental_rand_adversary, zapping_adversary};
use cachelab::baselines::{BaselineKind, Lru};
use cachelab::bounds::{big, e_ratio};
use cachelab::cilp::{recommended_gamma, CilpPolicy, CilpPolicyConfig, CilpVariant};
use cachelab::gen::{corpus, CorpusInstance};
use cachelab::harness::check_potential;
use cachelab::meta::run_meta;
use cachelab::model::{CostModel, ProblemParams, Trace};
use cachelab::oracle::{brute_force_opt, opt, OfflineGreedy, OracleSolution};
use cachelab::rational::{fmt_rat, int, rat, to_f64, Rat};
use cachelab::rng::Seed;
use cachelab::sim::{run, RunResult, Simulation};
use cachelab::ski::{deterministic_worst_ratio, randomized_expected_ratio, SkiKind};
use cachelab::worklog::ConstraintKind;
use num_rational::BigRational;
use num_traits::ToPrimitive;

const CORPUS_SEED: Seed = Seed(2024);
const CORPUS_SIZE: usize = 500;

/// Criteria known to fail as literally stated; each has a notes entry and
/// a companion line with the bound that does hold.
const EXPECTED_FAILURES: &[&str] = &["1c-k1"];

thread_local! {
    static RESULTS: RefCell<Vec<(String, bool)>> = const { RefCell::new(Vec::new()) };
}

fn report(id: &str, title: &str, pass: bool, detail: String) {
    let status = if pass { "PASS" } else { "FAIL" };
    println!("[{status}] {id} {title}: {detail}");
    RESULTS.with(|r| r.borrow_mut().push((id.to_string(), pass)));
}

fn unit() -> Vec<CorpusInstance> {
    corpus(CORPUS_SEED, CORPUS_SIZE, false)
}

fn sized() -> Vec<CorpusInstance> {
    corpus(CORPUS_SEED, CORPUS_SIZE, true)
}

fn high(k: u64, i: usize) -> Rat {
    [rat(1, k as i128), rat(1, 2).max(rat(1, k as i128)), int(1), int(2)][i % 4]
}

fn middle(k: u64, i: usize) -> Option<Rat> {
    if k < 2 {
        return None;
    }
    let k = k as i128;
    let l = [rat(1, k * k), rat(2, k * k + k), rat(1, k * k) + rat(1, 2 * k * k * k)][i % 3];
    (l < rat(1, k)).then_some(l)
}

fn low(k: u64, i: usize) -> Rat {
    let k = k as i128;
    [rat(1, 2 * k * k), rat(1, k * k + 1), rat(1, 10 * k * k), int(0)][i % 4]
}

fn cilp(trace: &Trace, params: &ProblemParams, cfg: CilpPolicyConfig) -> RunResult {
    run(trace, params, CilpPolicy::new(cfg)).expect("policy run")
}

/// Tracks the worst `ledger - (factor * OPT + c)` over a corpus.
struct BoundCheck {
    runs: usize,
    worst_ratio: f64,
    violations: usize,
    example: Option<String>,
}

impl BoundCheck {
    fn new() -> Self {
        Self {
            runs: 0,
            worst_ratio: 0.0,
            violations: 0,
            example: None,
        }
    }

    fn observe(&mut self, inst: &CorpusInstance, params: &ProblemParams, alg: Rat, opt: Rat, factor: &BigRational) {
        self.runs += 1;
        let slack = inst.trace.initial_load_cost();
        if opt > int(0) {
            self.worst_ratio = self.worst_ratio.max(to_f64(&(alg / opt)));
        }
        let lhs = big(alg);
        let rhs = factor * big(opt) + big(slack);
        if lhs > rhs {
            self.violations += 1;
            if self.example.is_none() {
                self.example = Some(format!(
                    "{} k={} lambda={} N={:?}: ALG {} > {} * OPT {} + {}",
                    if inst.index == usize::MAX { "probe".to_string() } else { format!("instance {}", inst.index) },
                    params.k,
                    fmt_rat(&params.lambda),
                    params.zap_cost.map(|n| fmt_rat(&n)),
                    fmt_rat(&alg),
                    factor.to_f64().unwrap(),
                    fmt_rat(&opt),
                    fmt_rat(&slack)
                ));
            }
        }
    }

    fn finish(&self, id: &str, title: &str) {
        let mut detail = format!(
            "{} runs, {} violations, worst ALG/OPT {:.4}",
            self.runs, self.violations, self.worst_ratio
        );
        if let Some(e) = &self.example {
            detail.push_str(&format!("; first violation: {e}"));
        }
        report(id, title, self.violations == 0, detail);
    }
}

fn bi(v: u64) -> BigRational {
    BigRational::from_integer(v.into())
}

fn oracle(trace: &Trace, params: &ProblemParams) -> OracleSolution {
    opt(trace, params).expect("corpus instances are oracle-feasible")
}

fn criterion_1() {
    let unit = unit();
    let sized = sized();

    // 1a / 1b / 1c: rental paging bands
    let (mut a, mut b, mut c, mut c2) = (BoundCheck::new(), BoundCheck::new(), BoundCheck::new(), BoundCheck::new());
    for (i, inst) in unit.iter().enumerate() {
        let k = inst.k;
        let p = ProblemParams::paging(k, high(k, i));
        let o = oracle(&inst.trace, &p);
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalPaging));
        a.observe(inst, &p, r.ledger.total(), o.cost(), &bi(2));

        if let Some(l) = middle(k, i) {
            let p = ProblemParams::paging(k, l);
            let o = oracle(&inst.trace, &p);
            let g = recommended_gamma(k, l).unwrap();
            let r = cilp(&inst.trace, &p, CilpPolicyConfig::with_gamma(CilpVariant::RentalPaging, g));
            let factor = bi(1) + BigRational::from_integer(1.into()) / (bi(k) * big(l));
            b.observe(inst, &p, r.ledger.total(), o.cost(), &factor);
        }

        let p = ProblemParams::paging(k, low(k, i));
        let o = oracle(&inst.trace, &p);
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalPaging));
        c.observe(inst, &p, r.ledger.total(), o.cost(), &bi(k));
        c2.observe(inst, &p, r.ledger.total(), o.cost(), &bi(k.max(2)));
    }
    a.finish("1a", "RentalPagingCILP <= 2 OPT + c (lambda >= 1/k)");
    b.finish("1b", "RentalPagingCILP_gamma <= (1 + 1/(k lambda)) OPT + c (1/k^2 <= lambda < 1/k)");
    c.finish("1c", "RentalPagingCILP <= k OPT + c (lambda < 1/k^2)");
    c2.finish("1c'", "RentalPagingCILP <= max(k, 2) OPT + c (lambda < 1/k^2)");

    // k = 1: each rent-evict constraint still has two variables, so the
    // covering argument only gives a factor of 2. "a . ." repeated shows it.
    let trace = Trace::from_script(&"a..".repeat(10));
    let p = ProblemParams::paging(1, rat(1, 2));
    let o = oracle(&trace, &p);
    let r = cilp(&trace, &p, CilpPolicyConfig::new(CilpVariant::RentalPaging));
    let probe = CorpusInstance { index: usize::MAX, k: 1, trace: trace.clone() };
    let (mut k1, mut k1b) = (BoundCheck::new(), BoundCheck::new());
    k1.observe(&probe, &p, r.ledger.total(), o.cost(), &bi(1));
    k1b.observe(&probe, &p, r.ledger.total(), o.cost(), &bi(2));
    k1.finish("1c-k1", "RentalPagingCILP <= k OPT + c at k = 1, lambda = 1/2, trace (a . .)^10");
    k1b.finish("1c-k1'", "RentalPagingCILP <= 2 OPT + c at k = 1, lambda = 1/2, trace (a . .)^10");

    // 1d: rental caching, all bands, sized corpus
    let (mut d, mut d2) = (BoundCheck::new(), BoundCheck::new());
    for (i, inst) in sized.iter().enumerate() {
        let k = inst.k;
        let lambda = match i % 3 {
            0 => high(k, i / 3),
            1 => middle(k, i / 3).unwrap_or_else(|| low(k, i / 3)),
            _ => low(k, i / 3),
        };
        let p = ProblemParams::new(k, lambda);
        let o = oracle(&inst.trace, &p);
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalCaching));
        d.observe(inst, &p, r.ledger.total(), o.cost(), &bi(k));
        d2.observe(inst, &p, r.ledger.total(), o.cost(), &bi(k.max(2)));
    }
    d.finish("1d", "RentalCachingCILP <= k OPT + c (sized corpus)");
    d2.finish("1d'", "RentalCachingCILP <= max(k, 2) OPT + c (sized corpus)");

    // 1e: fault model (unit costs, sizes up to min(3, k)) follows the rental paging bands
    let (mut eh, mut em, mut el) = (BoundCheck::new(), BoundCheck::new(), BoundCheck::new());
    for (i, inst) in sized.iter().enumerate() {
        let k = inst.k;
        let trace = with_unit_costs(&inst.trace);
        let fault = |l: Rat| ProblemParams::new(k, l).with_model(CostModel::FaultModel);
        let p = fault(high(k, i));
        let o = oracle(&trace, &p);
        let r = cilp(&trace, &p, CilpPolicyConfig::new(CilpVariant::RentalCaching));
        eh.observe(inst, &p, r.ledger.total(), o.cost(), &bi(2));
        if let Some(l) = middle(k, i) {
            let p = fault(l);
            let o = oracle(&trace, &p);
            let g = recommended_gamma(k, l).unwrap();
            let r = cilp(&trace, &p, CilpPolicyConfig::with_gamma(CilpVariant::RentalCaching, g));
            let factor = bi(1) + BigRational::from_integer(1.into()) / (bi(k) * big(l));
            em.observe(inst, &p, r.ledger.total(), o.cost(), &factor);
        }
        let p = fault(low(k, i));
        let o = oracle(&trace, &p);
        let r = cilp(&trace, &p, CilpPolicyConfig::new(CilpVariant::RentalCaching));
        el.observe(inst, &p, r.ledger.total(), o.cost(), &bi(k.max(2)));
    }
    eh.finish("1e-high", "fault model: RentalCachingCILP <= 2 OPT + c (lambda >= 1/k)");
    em.finish("1e-middle", "fault model: RentalCachingCILP_gamma <= (1 + 1/(k lambda)) OPT + c");
    el.finish("1e-low", "fault model: RentalCachingCILP <= max(k, 2) OPT + c (lambda < 1/k^2)");

    // 1f: zapping
    let (mut zp, mut zc, mut zf) = (BoundCheck::new(), BoundCheck::new(), BoundCheck::new());
    for n in [1, 2, 5, 20] {
        for inst in &unit {
            let p = ProblemParams::paging(inst.k, int(0)).with_zap(int(n));
            let o = oracle(&inst.trace, &p);
            let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::ZappingPaging));
            zp.observe(inst, &p, r.ledger.total(), o.cost(), &bi(2 * inst.k + 1));
            let r = run(&inst.trace, &p, cachelab::baselines::ZapFirst).unwrap();
            zf.observe(inst, &p, r.ledger.total(), o.cost(), &bi(n as u64));
        }
        for inst in &sized {
            let p = ProblemParams::new(inst.k, int(0)).with_zap(int(n));
            let o = oracle(&inst.trace, &p);
            let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::ZappingCaching));
            zc.observe(inst, &p, r.ledger.total(), o.cost(), &bi(2 * inst.k + 1));
        }
    }
    zp.finish("1f-paging", "ZappingPagingCILP <= (2k+1) OPT + c, N in {1,2,5,20}");
    zc.finish("1f-caching", "ZappingCachingCILP <= (2k+1) OPT + c, N in {1,2,5,20}");
    zf.finish("1f-zapfirst", "ZapFirst <= N OPT + c");

    // 1g: rental zapping
    let (mut gh, mut gm, mut gl, mut gc) = (BoundCheck::new(), BoundCheck::new(), BoundCheck::new(), BoundCheck::new());
    for (i, inst) in unit.iter().enumerate() {
        let k = inst.k;
        let n = int([1, 2, 5, 20][i % 4]);
        let p = ProblemParams::paging(k, high(k, i)).with_zap(n);
        let o = oracle(&inst.trace, &p);
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalZappingPaging));
        gh.observe(inst, &p, r.ledger.total(), o.cost(), &bi(3));
        if let Some(l) = middle(k, i) {
            let p = ProblemParams::paging(k, l).with_zap(n);
            let o = oracle(&inst.trace, &p);
            let g = recommended_gamma(k, l).unwrap();
            let r = cilp(&inst.trace, &p, CilpPolicyConfig::with_gamma(CilpVariant::RentalZappingPaging, g));
            let factor = bi(1) + BigRational::from_integer(2.into()) / (bi(k) * big(l));
            gm.observe(inst, &p, r.ledger.total(), o.cost(), &factor);
        }
        let p = ProblemParams::paging(k, low(k, i)).with_zap(n);
        let o = oracle(&inst.trace, &p);
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalZappingPaging));
        gl.observe(inst, &p, r.ledger.total(), o.cost(), &bi(2 * k + 1));
    }
    for (i, inst) in sized.iter().enumerate() {
        let k = inst.k;
        let lambda = [high(k, i), low(k, i)][i % 2];
        let p = ProblemParams::new(k, lambda).with_zap(int([1, 2, 5, 20][i % 4]));
        let o = oracle(&inst.trace, &p);
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalZappingCaching));
        gc.observe(inst, &p, r.ledger.total(), o.cost(), &bi(2 * k + 1));
    }
    gh.finish("1g-high", "RentalZappingPagingCILP <= 3 OPT + c (lambda >= 1/k)");
    gm.finish("1g-middle", "RentalZappingPagingCILP_gamma <= (1 + 2/(k lambda)) OPT + c");
    gl.finish("1g-low", "RentalZappingPagingCILP <= (2k+1) OPT + c (lambda < 1/k^2)");
    gc.finish("1g-caching", "RentalZappingCachingCILP <= (2k+1) OPT + c");
}

fn with_unit_costs(trace: &Trace) -> Trace {
    let mut c = cachelab::model::Catalog::new();
    for f in trace.catalog.files() {
        c.add(f.name.clone(), f.size, int(1)).unwrap();
    }
    Trace::new(c, trace.events.clone())
}

fn criterion_2() {
    let unit = unit();
    let sized = sized();

    // no cache-size work in the high band, and in the middle band with gamma = k lambda
    let mut runs = 0;
    let mut offenders = Vec::new();
    for (i, inst) in unit.iter().enumerate() {
        let k = inst.k;
        let mut configs = vec![(high(k, i), None)];
        if let Some(l) = middle(k, i) {
            configs.push((l, recommended_gamma(k, l)));
        }
        for (lambda, gamma) in configs {
            for variant in [CilpVariant::RentalPaging, CilpVariant::RentalZappingPaging] {
                let mut p = ProblemParams::paging(k, lambda);
                if variant.zapping() {
                    p = p.with_zap(int(5));
                }
                let cfg = CilpPolicyConfig { variant, gamma };
                let r = cilp(&inst.trace, &p, cfg);
                runs += 1;
                if r.work_log.iter().any(|w| w.kind == ConstraintKind::CacheSize) && offenders.len() < 3 {
                    offenders.push(format!("instance {} {} lambda={}", inst.index, variant.name(), fmt_rat(&lambda)));
                }
            }
        }
    }
    report(
        "2a",
        "rental CILP work logs hold no cache-size work (lambda >= 1/k, and middle band with gamma = k lambda)",
        offenders.is_empty(),
        format!("{runs} runs; offenders {offenders:?}"),
    );

    // potential invariants
    let mut delta_checks = 0;
    let mut gamma_checks = 0;
    let mut failures = Vec::new();
    let mut check = |inst: &CorpusInstance, p: &ProblemParams, cfg: CilpPolicyConfig| {
        let o = oracle(&inst.trace, p);
        let r = cilp(&inst.trace, p, cfg.clone());
        match check_potential(&cfg, &o, &r.work_log) {
            Ok(n) => {
                if cfg.gamma.is_some() {
                    gamma_checks += n;
                } else {
                    delta_checks += n;
                }
            }
            Err(e) => {
                if failures.len() < 3 {
                    failures.push(format!("instance {} {}: {e}", inst.index, cfg.name()));
                }
            }
        }
    };
    for (i, inst) in unit.iter().enumerate() {
        let k = inst.k;
        for lambda in [high(k, i), low(k, i)] {
            check(inst, &ProblemParams::paging(k, lambda), CilpPolicyConfig::new(CilpVariant::RentalPaging));
            check(
                inst,
                &ProblemParams::paging(k, lambda).with_zap(int(3)),
                CilpPolicyConfig::new(CilpVariant::RentalZappingPaging),
            );
        }
        check(inst, &ProblemParams::paging(k, int(0)), CilpPolicyConfig::new(CilpVariant::Paging));
        check(
            inst,
            &ProblemParams::paging(k, int(0)).with_zap(int(2)),
            CilpPolicyConfig::new(CilpVariant::ZappingPaging),
        );
        if let Some(l) = middle(k, i) {
            let g = recommended_gamma(k, l).unwrap();
            check(inst, &ProblemParams::paging(k, l), CilpPolicyConfig::with_gamma(CilpVariant::RentalPaging, g));
            check(
                inst,
                &ProblemParams::paging(k, l).with_zap(int(3)),
                CilpPolicyConfig::with_gamma(CilpVariant::RentalZappingPaging, g),
            );
        }
    }
    for (i, inst) in sized.iter().enumerate() {
        let k = inst.k;
        check(inst, &ProblemParams::new(k, low(k, i)), CilpPolicyConfig::new(CilpVariant::RentalCaching));
        check(
            inst,
            &ProblemParams::new(k, int(0)).with_zap(int(2)),
            CilpPolicyConfig::new(CilpVariant::ZappingCaching),
        );
        check(
            inst,
            &ProblemParams::new(k, high(k, i)).with_zap(int(4)),
            CilpPolicyConfig::new(CilpVariant::RentalZappingCaching),
        );
    }
    report(
        "2b",
        "potential invariants hold after every worked constraint (delta form; gamma forms with 1 and 2 base variables)",
        failures.is_empty() && delta_checks > 0 && gamma_checks > 0,
        format!("{delta_checks} delta-form checks, {gamma_checks} gamma-form checks; failures {failures:?}"),
    );

    // meta domination and capacity
    let mut runs = 0;
    let mut bad = Vec::new();
    let inners = ["lru", "fifo", "marking", "rand-marking", "zapping-caching-cilp", "rental-caching-cilp"];
    for (i, inst) in unit.iter().chain(sized.iter()).enumerate() {
        let k = inst.k;
        let lambda = [high(k, i), low(k, i), middle(k, i).unwrap_or(rat(1, 3))][i % 3];
        for inner in inners {
            for ski in [SkiKind::DeterministicBreakEven, SkiKind::RandomizedThreshold] {
                let spec = cachelab::registry::PolicySpec::parse(inner).unwrap();
                let mut p = ProblemParams::new(k, lambda);
                if inner.starts_with("zapping") {
                    p = p.with_zap(int(3));
                }
                let seeds = if ski == SkiKind::RandomizedThreshold || inner == "rand-marking" { 3 } else { 1 };
                for s in 0..seeds {
                    let seed = Seed(1000 + s);
                    let Ok(m) = run_meta(&inst.trace, &p, spec.build(&p, seed), ski, seed) else {
                        bad.push(format!("instance {} meta:{inner} failed", inst.index));
                        continue;
                    };
                    runs += 1;
                    if !m.dominated() || m.peak_used > k {
                        bad.push(format!("instance {} meta:{inner}", inst.index));
                    }
                }
            }
        }
    }
    report(
        "2c",
        "Meta ledger <= inner + ALG-infinity, Meta capacity <= k",
        bad.is_empty(),
        format!("{runs} runs; violations {:?}", &bad[..bad.len().min(3)]),
    );

    // composition bounds
    let mut det = BoundCheck::new();
    for (i, inst) in unit.iter().enumerate() {
        let k = inst.k;
        let p = ProblemParams::paging(k, [high(k, i), low(k, i)][i % 2]);
        let o = oracle(&inst.trace, &p);
        let m = run_meta(&inst.trace, &p, Box::new(Lru::default()), SkiKind::DeterministicBreakEven, Seed(0)).unwrap();
        det.observe(inst, &p, m.result.ledger.total(), o.cost(), &bi(k + 2));
    }
    det.finish("2d", "Meta(LRU, ALG-infinity det) <= (k+2) OPT + c");

    let trials = 10_000u64;
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut failed = Vec::new();
    for inst in unit.iter().filter(|c| c.trace.request_count() >= 6).take(4) {
        let k = inst.k;
        let p = ProblemParams::paging(k, rat(1, 4));
        let o = oracle(&inst.trace, &p);
        let mut total = Rat::from_integer(0);
        for s in 0..trials {
            let seed = Seed(s);
            let inner = BaselineKind::RandomizedMarking.build(seed);
            let m = run_meta(&inst.trace, &p, inner, SkiKind::RandomizedThreshold, seed).unwrap();
            total += m.result.ledger.total();
        }
        let mean = to_f64(&total) / trials as f64;
        let h: f64 = (1..=k).map(|i| 1.0 / i as f64).sum();
        let factor = 2.0 * h - 1.0 + e_ratio().to_f64().unwrap();
        let opt = to_f64(&o.cost());
        worst = worst.max(mean / opt);
        checked += 1;
        if mean > factor * opt * 1.05 {
            failed.push(format!("instance {}: mean {mean:.3} > {factor:.3} * {opt} * 1.05", inst.index));
        }
    }
    report(
        "2e",
        "Meta(RandomizedMarking, ALG-infinity rand) mean <= (2H_k - 1 + e/(e-1)) OPT (1.05)",
        failed.is_empty() && checked > 0,
        format!("{checked} traces x {trials} trials, worst mean/OPT {worst:.4}; {failed:?}"),
    );
}

fn criterion_3() {
    let mut worst_det = Rat::from_integer(0);
    for b in 1..=20u64 {
        worst_det = worst_det.max(deterministic_worst_ratio(b, 10 * b));
    }
    report(
        "3a",
        "deterministic break-even worst ratio <= 2 (B in 1..=20, seasons 1..=10B)",
        worst_det <= int(2),
        format!("worst {}", fmt_rat(&worst_det)),
    );
    let e = e_ratio();
    let tol = BigRational::new(1.into(), 1_000_000_000.into());
    let mut worst_excess = f64::NEG_INFINITY;
    let mut ok = true;
    for b in 1..=20u64 {
        let bound = &e + BigRational::new(1.into(), b.into());
        for s in 1..=10 * b {
            let r = randomized_expected_ratio(b, s);
            let excess = (&r - &bound).to_f64().unwrap();
            worst_excess = worst_excess.max(excess);
            if r > &bound + &tol {
                ok = false;
            }
        }
    }
    report(
        "3b",
        "randomized exact expected ratio <= e/(e-1) + 1/B (tolerance 1e-9)",
        ok,
        format!("largest ratio - bound = {worst_excess:.3e}"),
    );
}

fn criterion_4() {
    for k in [2u64, 3] {
        for lambda in [rat(1, 16), rat(1, k as i128)] {
            let p = ProblemParams::paging(k, lambda);
            let mut target = Simulation::new(Lru::default(), &p);
            let r = rental_det_adversary(&mut target, &p, 10_000).unwrap();
            let ratio = to_f64(&r.ratio().unwrap());
            let kl = to_f64(&lambda);
            let kf = k as f64;
            let bound = (kf + kf * kl) / (1.0 + kf * kf * kl);
            report(
                &format!("4a k={k} lambda={}", fmt_rat(&lambda)),
                "rental_det_adversary vs LRU ratio >= (k+k lambda)/(1+k^2 lambda) - 0.05",
                ratio >= bound - 0.05,
                format!("ratio {ratio:.4}, bound {bound:.4}, OPT from {}", r.certificate.provenance),
            );
        }
    }
    for n in [2i128, 5, 10] {
        let k = 2u64;
        let p = ProblemParams::paging(k, int(0)).with_zap(int(n));
        let mut target = Simulation::new(CilpPolicy::variant(CilpVariant::ZappingPaging), &p);
        let r = zapping_adversary(&mut target, &p, 2_000, 100_000).unwrap();
        let stats = r.zap_stats.as_ref().unwrap();
        let ratio = to_f64(&stats.formula_ratio().unwrap());
        let (nf, kf) = (n as f64, k as f64);
        let bound = (2.0 * nf * kf + nf - (kf + 1.0)) / (nf + 2.0 * kf);
        report(
            &format!("4b N={n}"),
            "zapping_adversary vs ZappingPagingCILP (k=2) ratio >= (2Nk+N-(k+1))/(N+2k) - 0.1",
            ratio >= bound - 0.1,
            format!(
                "formula-certificate ratio {ratio:.4} over {} rounds ({} steps), bound {bound:.4}",
                stats.rounds.len(),
                r.trace.len()
            ),
        );
    }
    let t = rental_rand_adversary(3, 100_000, Seed(11));
    let s = phase_stats(&t, 3);
    let rel = (s.mean_length - s.expected_k_hk).abs() / s.expected_k_hk;
    report(
        "4c",
        "rental_rand_adversary mean phase length within 5% of k H_k (k=3, 1e5 steps)",
        rel <= 0.05,
        format!("mean {:.4} vs {:.4} over {} phases", s.mean_length, s.expected_k_hk, s.phases),
    );
}

fn criterion_5() {
    let mut compared = 0;
    let mut mismatches = Vec::new();
    let small: Vec<CorpusInstance> = unit()
        .into_iter()
        .chain(sized())
        .filter(|c| c.trace.distinct_requested().len() <= 4 && c.trace.len() <= 8)
        .collect();
    for (i, inst) in small.iter().enumerate() {
        let k = inst.k;
        for lambda in [int(0), low(k, i), high(k, i), rat(1, 3)] {
            for zap in [None, Some(int(1)), Some(int(3))] {
                let mut p = ProblemParams::new(k, lambda);
                p.zap_cost = zap;
                let dp = opt(&inst.trace, &p).ok().map(|s| s.cost());
                let bf = brute_force_opt(&inst.trace, &p);
                compared += 1;
                if dp != bf && mismatches.len() < 3 {
                    mismatches.push(format!("instance {} lambda {} zap {zap:?}: {dp:?} vs {bf:?}", inst.index, fmt_rat(&lambda)));
                }
            }
        }
    }
    report(
        "5a",
        "DP equals brute force (<= 4 files, <= 8 steps)",
        mismatches.is_empty() && compared > 0,
        format!("{compared} comparisons on {} instances; mismatches {mismatches:?}", small.len()),
    );

    let mut checks = 0;
    let mut bad = Vec::new();
    for (i, inst) in unit().iter().enumerate() {
        let lambda = [int(0), rat(1, 4), int(1)][i % 3];
        let mut prev: Option<Rat> = None;
        for k in 1..=4u64 {
            let p = ProblemParams::paging(k, lambda);
            let plain = oracle(&inst.trace, &p).cost();
            let zapped = oracle(&inst.trace, &p.clone().with_zap(int(2))).cost();
            checks += 2;
            if zapped > plain {
                bad.push(format!("instance {} k={k}: zapping raised OPT", inst.index));
            }
            if prev.is_some_and(|q| plain > q) {
                bad.push(format!("instance {} k={k}: OPT grew with k", inst.index));
            }
            prev = Some(plain);
        }
        // OPT never exceeds an online ledger
        let p = ProblemParams::paging(inst.k, lambda);
        let o = oracle(&inst.trace, &p);
        let lru = run(&inst.trace, &p, Lru::default()).unwrap();
        let g = run(&inst.trace, &p, OfflineGreedy::new(&inst.trace, Default::default(), true)).unwrap();
        checks += 1;
        if cachelab::oracle::opt_lower_bound_sanity(&o, [("lru", &lru.ledger), ("greedy", &g.ledger)]).is_err() {
            bad.push(format!("instance {}: OPT above a feasible ledger", inst.index));
        }
    }
    report(
        "5b",
        "OPT monotone in k and in the action set; OPT below feasible ledgers",
        bad.is_empty(),
        format!("{checks} checks; violations {:?}", &bad[..bad.len().min(3)]),
    );
}

fn evictions(r: &RunResult) -> Vec<(usize, cachelab::model::FileId)> {
    r.trace.eviction_steps()
}

fn criterion_6() {
    let unit = unit();
    let sized = sized();

    // lambda = 0 and no zapping: pure retrieval cost, rental CILP collapses to plain CILP,
    // and the oracle matches furthest-in-future paging
    let mut bad = Vec::new();
    let mut checks = 0;
    for inst in &unit {
        let p = ProblemParams::paging(inst.k, int(0));
        let plain = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::Paging));
        let rental = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalPaging));
        let lru = run(&inst.trace, &p, Lru::default()).unwrap();
        let belady = run(&inst.trace, &p, OfflineGreedy::new(&inst.trace, Default::default(), false)).unwrap();
        let o = oracle(&inst.trace, &p);
        checks += 1;
        let classic = |r: &RunResult| r.ledger.rental == int(0) && r.ledger.zapping == int(0);
        if !(classic(&plain) && classic(&rental) && classic(&lru) && classic(&o_run(&o)))
            || plain.ledger != rental.ledger
            || evictions(&plain) != evictions(&rental)
            || belady.ledger.total() != o.cost()
        {
            bad.push(inst.index);
        }
    }
    for inst in &sized {
        let p = ProblemParams::new(inst.k, int(0));
        let r = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalCaching));
        checks += 1;
        if r.ledger.rental != int(0) || r.ledger.zapping != int(0) {
            bad.push(inst.index);
        }
    }
    report(
        "6a",
        "lambda = 0 without zapping reproduces classic caching ledgers",
        bad.is_empty(),
        format!("{checks} instances; offenders {:?}", &bad[..bad.len().min(5)]),
    );

    let mut bad = Vec::new();
    let mut checks = 0;
    for inst in &unit {
        let k = inst.k;
        let n = int(inst.trace.len() as i128 + 1);
        let pairs = [(CilpVariant::Paging, CilpVariant::ZappingPaging, int(0))];
        for (plain, zap, lambda) in pairs {
            let p = ProblemParams::paging(k, lambda).with_zap(n);
            let a = cilp(&inst.trace, &p, CilpPolicyConfig::new(plain));
            let b = cilp(&inst.trace, &p, CilpPolicyConfig::new(zap));
            checks += 1;
            if evictions(&a) != evictions(&b) || b.ledger.zapping != int(0) {
                bad.push(format!("instance {} {}", inst.index, zap.name()));
            }
        }
    }
    // With costs above 1 a constraint can take up to max cost time units to
    // satisfy, so z grows by up to max_cost/N per step.
    for inst in &sized {
        let max_cost = inst.trace.catalog.files().iter().map(|f| f.cost).max().unwrap();
        let n = int(inst.trace.len() as i128) * max_cost + int(1);
        let p = ProblemParams::new(inst.k, int(0)).with_zap(n);
        let a = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::RentalCaching));
        let b = cilp(&inst.trace, &p, CilpPolicyConfig::new(CilpVariant::ZappingCaching));
        checks += 1;
        if evictions(&a) != evictions(&b) {
            bad.push(format!("instance {} zapping-caching", inst.index));
        }
    }
    report(
        "6b",
        "N above the step count (times the largest cost when sized): zapping CILP evictions equal the non-zapping CILP",
        bad.is_empty(),
        format!("{checks} comparisons; offenders {:?}", &bad[..bad.len().min(3)]),
    );

    let mut bad = Vec::new();
    let mut checks = 0;
    for (i, inst) in unit.iter().enumerate() {
        let k = inst.k;
        for lambda in [high(k, i), low(k, i)] {
            let fault = ProblemParams::paging(k, lambda).with_model(CostModel::FaultModel).with_zap(int(3));
            let pairs = [
                (CilpVariant::RentalPaging, CilpVariant::RentalCaching),
                (CilpVariant::ZappingPaging, CilpVariant::ZappingCaching),
                (CilpVariant::RentalZappingPaging, CilpVariant::RentalZappingCaching),
            ];
            for (paging, caching) in pairs {
                let a = cilp(&inst.trace, &fault, CilpPolicyConfig::new(paging));
                let b = cilp(&inst.trace, &fault, CilpPolicyConfig::new(caching));
                checks += 1;
                if a.ledger != b.ledger {
                    bad.push(format!("instance {} {}", inst.index, caching.name()));
                }
            }
        }
    }
    report(
        "6c",
        "fault model with unit sizes: caching variants equal paging variants",
        bad.is_empty(),
        format!("{checks} comparisons; offenders {:?}", &bad[..bad.len().min(3)]),
    );
}

fn o_run(o: &OracleSolution) -> RunResult {
    RunResult {
        ledger: o.ledger.clone(),
        trace: Default::default(),
        work_log: Vec::new(),
    }
}

#[test]
fn acceptance() {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    let results = RESULTS.with(|r| r.borrow().clone());
    let passed = results.iter().filter(|(_, p)| *p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    let unexpected: Vec<&String> = results
        .iter()
        .filter(|(id, pass)| !pass && !EXPECTED_FAILURES.contains(&id.as_str()))
        .map(|(id, _)| id)
        .collect();
    for (id, pass) in &results {
        if !pass && EXPECTED_FAILURES.contains(&id.as_str()) {
            println!("note: {id} fails as stated; see the companion line for the bound that holds");
        }
    }
    assert!(unexpected.is_empty(), "unexpected failures: {unexpected:?}");
}
