use cachelab::gen::{corpus, generate, GenSpec};
use cachelab::harness::{run_experiment, ExperimentSpec, OptSource};
use cachelab::model::{Catalog, Event, FileId, ProblemParams, Trace};
use cachelab::oracle::{opt, replay_schedule};
use cachelab::rational::{int, rat};
use cachelab::registry::PolicySpec;
use cachelab::rng::Seed;
use cachelab::sim::run;
use cachelab::ski::{SkiKind, SkiRentalPolicy};
use cachelab::trace_io::{emit_trace, parse_trace};
use proptest::prelude::*;

fn arb_trace() -> impl Strategy<Value = Trace> {
    let files = prop::collection::vec((1u64..5, 1i128..9, 1i128..4), 1..8);
    files.prop_flat_map(|specs| {
        let n = specs.len();
        let events = prop::collection::vec(prop::option::weighted(0.8, 0..n), 0..60);
        (Just(specs), events).prop_map(|(specs, events)| {
            let mut catalog = Catalog::new();
            for (i, (size, num, den)) in specs.iter().enumerate() {
                catalog.add(format!("f{i}"), *size, rat(*num, *den)).unwrap();
            }
            let events = events
                .into_iter()
                .map(|e| e.map_or(Event::Tick, |i| Event::Request(FileId(i as u32))))
                .collect();
            Trace::new(catalog, events)
        })
    })
}

proptest! {
    #[test]
    fn parse_inverts_emit(trace in arb_trace()) {
        let text = emit_trace(&trace);
        let back = parse_trace(&text).unwrap();
        prop_assert_eq!(&back, &trace);
        prop_assert_eq!(emit_trace(&back), text);
    }
}

#[test]
fn large_fuzzed_trace_round_trips_modulo_comments() {
    let spec = GenSpec {
        files: 50,
        steps: 100_000,
        tick_density: 0.2,
        size_range: (1, 4),
        cost_range: (1, 7),
    };
    let trace = generate(&spec, Seed(99)).unwrap();
    assert_eq!(trace.len(), 100_000);
    let text = emit_trace(&trace);
    let commented: String = text
        .lines()
        .enumerate()
        .map(|(i, l)| if i % 997 == 0 { format!("# note {i}\n{l}\n") } else { format!("{l}\n") })
        .collect();
    let back = parse_trace(&commented).unwrap();
    assert_eq!(back, trace);
    assert_eq!(emit_trace(&back), text);
}

#[test]
fn oracle_schedules_replay_to_their_value() {
    for (i, inst) in corpus(Seed(5), 120, true).iter().enumerate() {
        let mut params = ProblemParams::new(inst.k, [int(0), rat(1, 3), int(2)][i % 3]);
        if i % 2 == 0 {
            params = params.with_zap(int(2));
        }
        let sol = opt(&inst.trace, &params).unwrap();
        let replayed = replay_schedule(&inst.trace, &params, &sol.schedule).unwrap();
        assert_eq!(replayed, sol.ledger, "instance {}", inst.index);
        assert!(sol.lp_objective() <= sol.cost());
    }
}

fn fixture() -> Trace {
    parse_trace("file a 1 1\nfile b 1 1\nfile c 1 1\nreq a\nreq b\ntick\nreq c\nreq a\ntick\ntick\nreq b\nreq a\n").unwrap()
}

#[test]
fn experiment_reports_oracle_backed_ratios() {
    let spec = ExperimentSpec {
        trace: fixture(),
        policies: vec![PolicySpec::parse("lru").unwrap(), PolicySpec::parse("rental-paging-cilp").unwrap()],
        params: ProblemParams::paging(2, rat(1, 4)),
        trials: 1,
        seed: Seed(1),
        check_invariants: true,
    };
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.opt_source, OptSource::Oracle);
    assert_eq!(report.opt, opt(&spec.trace, &spec.params).unwrap().cost());
    for row in &report.rows {
        assert_eq!(row.ratio, Some(row.ledger.total() / report.opt));
    }
    let cilp = report.rows.iter().find(|r| r.policy == "rental-paging-cilp").unwrap();
    assert!(cilp.invariant_checks > 0);
    assert_eq!(cilp.passes(), Some(true));
}

#[test]
fn empty_policy_list_gives_empty_report() {
    let spec = ExperimentSpec {
        trace: fixture(),
        policies: Vec::new(),
        params: ProblemParams::paging(2, rat(1, 4)),
        trials: 1,
        seed: Seed(1),
        check_invariants: true,
    };
    let report = run_experiment(&spec).unwrap();
    assert!(report.rows.is_empty());
    assert!(report.to_json()["policies"].as_object().unwrap().is_empty());
}

#[test]
fn randomized_reports_are_byte_identical_across_reruns() {
    let spec = ExperimentSpec {
        trace: fixture(),
        policies: ["rand-marking", "alg-inf:rand", "meta:rand-marking+alg-inf:rand"]
            .into_iter()
            .map(|p| PolicySpec::parse(p).unwrap())
            .collect(),
        params: ProblemParams::paging(2, rat(1, 4)),
        trials: 10_000,
        seed: Seed(77),
        check_invariants: true,
    };
    let a = run_experiment(&spec).unwrap();
    let b = run_experiment(&spec).unwrap();
    assert_eq!(a.to_json().to_string(), b.to_json().to_string());
    assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
    let other = run_experiment(&ExperimentSpec { seed: Seed(78), ..spec }).unwrap();
    assert_ne!(a.to_json().to_string(), other.to_json().to_string());
}

#[test]
fn deterministic_policies_ignore_extra_trials() {
    let spec = ExperimentSpec {
        trace: fixture(),
        policies: vec![PolicySpec::parse("lru").unwrap()],
        params: ProblemParams::paging(2, rat(1, 4)),
        trials: 5,
        seed: Seed(1),
        check_invariants: false,
    };
    let report = run_experiment(&spec).unwrap();
    assert_eq!(report.rows[0].trials, 1);
    assert!(report.warnings.iter().any(|w| w.contains("deterministic")));
}

#[test]
fn alg_infinity_phases_follow_break_even() {
    // cost 3, rent 1: each phase keeps the file for the arrival step and two
    // idle steps, then evicts it on the third idle step.
    let trace = parse_trace("file a 1 3\nreq a\ntick\ntick\ntick\ntick\nreq a\ntick\ntick\ntick\n").unwrap();
    let params = ProblemParams::new(1, int(1));
    let policy = SkiRentalPolicy::alg_infinity(SkiKind::DeterministicBreakEven, Seed(0));
    let mut sim = cachelab::sim::Simulation::new(policy, &params).recording();
    for e in &trace.events {
        sim.feed(&trace.catalog, e).unwrap();
    }
    let out = sim.finish();
    let evictions: Vec<usize> = out.trace.eviction_steps().into_iter().map(|(t, _)| t).collect();
    assert_eq!(evictions, vec![3, 8]);
    assert_eq!(out.ledger.retrieval, int(6));
    assert_eq!(out.ledger.rental, int(6));
}

#[test]
fn same_seed_same_run() {
    let trace = generate(
        &GenSpec {
            files: 6,
            steps: 500,
            tick_density: 0.1,
            size_range: (1, 1),
            cost_range: (1, 1),
        },
        Seed(3),
    )
    .unwrap();
    let params = ProblemParams::paging(3, rat(1, 5));
    let spec = PolicySpec::parse("meta:rand-marking+alg-inf:rand").unwrap();
    let a = run(&trace, &params, spec.build(&params, Seed(9))).unwrap();
    let b = run(&trace, &params, spec.build(&params, Seed(9))).unwrap();
    assert_eq!(a.ledger, b.ledger);
    assert_eq!(a.trace, b.trace);
}
