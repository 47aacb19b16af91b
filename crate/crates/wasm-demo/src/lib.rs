//! Browser bindings for three interactive views: reference bounds as a
//! function of the rental rate, a step-by-step policy timeline, and
//! ski-rental ratios per season length.
//!
//! Each export is a thin wrapper around a plain Rust function that returns
//! JSON, so the logic is tested natively.

use cachelab::bounds::{bounds, Band, BoundQuery, Problem, Setting};
use cachelab::model::{Event, ProblemParams};
use cachelab::oracle::{check_limits, opt};
use cachelab::rational::{fmt_rat, rat, to_f64, Rat};
use cachelab::registry::PolicySpec;
use cachelab::rng::Seed;
use cachelab::sim::run;
use cachelab::ski::{deterministic_worst_ratio, randomized_expected_ratio, season_cost, season_opt};
use cachelab::trace_io::parse_trace;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const LAMBDA_DENOM: i128 = 1_000_000;

fn optional(v: f64) -> Option<Rat> {
    (v > 0.0).then(|| to_rat(v))
}

fn to_rat(v: f64) -> Rat {
    rat((v * LAMBDA_DENOM as f64).round() as i128, LAMBDA_DENOM)
}

/// Lower and upper bounds for `problem` at `points` rental rates spaced
/// evenly on a log scale over `[lambda_min, lambda_max]`, plus the band
/// edges `1/k^2` and `1/k` when they fall in range.
pub fn bounds_curve(
    problem: &str,
    setting: &str,
    k: u64,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    zap_cost: f64,
) -> Result<Value, String> {
    let problem = Problem::parse(problem).ok_or_else(|| format!("unknown problem `{problem}`"))?;
    let setting = Setting::parse(setting).ok_or_else(|| format!("unknown setting `{setting}`"))?;
    if k == 0 || !(lambda_min > 0.0 && lambda_max >= lambda_min) || points < 2 {
        return Err("need k >= 1, 0 < lambda_min <= lambda_max and at least 2 points".into());
    }
    let mut lambdas: Vec<Rat> = (0..points)
        .map(|j| lambda_min * (lambda_max / lambda_min).powf(j as f64 / (points - 1) as f64))
        .map(to_rat)
        .filter(|l| *l > Rat::from_integer(0))
        .collect();
    let kk = k as i128;
    for edge in [rat(1, kk * kk), rat(1, kk)] {
        let e = to_f64(&edge);
        if e >= lambda_min && e <= lambda_max {
            lambdas.push(edge);
        }
    }
    lambdas.sort();
    lambdas.dedup();
    let zap = optional(zap_cost);
    let rows: Vec<Value> = lambdas
        .into_iter()
        .map(|l| {
            let q = BoundQuery {
                problem,
                setting,
                k,
                lambda: Some(l),
                zap_cost: zap,
            };
            match bounds(&q) {
                Ok(b) => json!({
                    "lambda": to_f64(&l),
                    "lambda_exact": fmt_rat(&l),
                    "band": b.band.name(),
                    "lower": b.lower_f64(),
                    "upper": b.upper_f64(),
                }),
                Err(_) => json!({
                    "lambda": to_f64(&l),
                    "lambda_exact": fmt_rat(&l),
                    "band": Band::of(k, l).name(),
                    "lower": null,
                    "upper": null,
                }),
            }
        })
        .collect();
    Ok(json!({ "problem": problem.name(), "setting": setting.name(), "k": k, "points": rows }))
}

/// Runs one policy over a trace and returns the per-step cache contents,
/// decisions and cumulative cost, together with OPT when the instance is
/// small enough to solve exactly.
pub fn simulate_timeline(trace_text: &str, policy: &str, k: u64, lambda: &str, zap_cost: &str, seed: u64) -> Result<Value, String> {
    let trace = parse_trace(trace_text).map_err(|e| e.to_string())?;
    let lambda = cachelab::rational::parse_rat(lambda).map_err(|e| e.to_string())?;
    let mut params = ProblemParams::new(k, lambda);
    if !zap_cost.trim().is_empty() {
        params = params.with_zap(cachelab::rational::parse_rat(zap_cost).map_err(|e| e.to_string())?);
    }
    params.validate().map_err(|e| e.to_string())?;
    let spec = PolicySpec::parse(policy).map_err(|e| e.to_string())?;
    let result = run(&trace, &params, spec.build(&params, Seed(seed))).map_err(|e| e.to_string())?;
    let name = |f| trace.catalog.get(f).name.clone();
    let mut total = Rat::from_integer(0);
    let steps: Vec<Value> = result
        .trace
        .steps
        .iter()
        .map(|s| {
            total += s.delta.total();
            json!({
                "time": s.time,
                "request": match s.event { Event::Request(f) => Some(name(f)), Event::Tick => None },
                "evict": s.decision.evict.iter().map(|&f| name(f)).collect::<Vec<_>>(),
                "zap": s.decision.zap.iter().map(|&f| name(f)).collect::<Vec<_>>(),
                "resident": s.resident_after.iter().map(|&f| name(f)).collect::<Vec<_>>(),
                "step_cost": to_f64(&s.delta.total()),
                "cumulative": to_f64(&total),
            })
        })
        .collect();
    let opt_value = if check_limits(&trace, &params).is_ok() {
        opt(&trace, &params).ok().map(|s| fmt_rat(&s.cost()))
    } else {
        None
    };
    Ok(json!({
        "policy": spec.name(),
        "ledger": result.ledger.to_json(),
        "opt": opt_value,
        "steps": steps,
    }))
}

/// Cost ratios of the break-even and randomized ski-rental strategies for
/// every season length up to `max_season`, with `b` rental days per purchase.
pub fn ski_rental_ratios(b: u64, max_season: u64) -> Result<Value, String> {
    if b == 0 || max_season == 0 || b > 200 || max_season > 2_000 {
        return Err("need 1 <= B <= 200 and 1 <= seasons <= 2000".into());
    }
    let seasons: Vec<Value> = (1..=max_season)
        .map(|s| {
            let det = season_cost(b, b, s) as f64 / season_opt(b, s) as f64;
            let rand = randomized_expected_ratio(b, s);
            json!({
                "season": s,
                "deterministic": det,
                "randomized": num_traits::ToPrimitive::to_f64(&rand),
            })
        })
        .collect();
    Ok(json!({
        "b": b,
        "worst_deterministic": to_f64(&deterministic_worst_ratio(b, max_season)),
        "e_over_e_minus_1": std::f64::consts::E / (std::f64::consts::E - 1.0),
        "seasons": seasons,
    }))
}

fn to_js(r: Result<Value, String>) -> Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = boundsCurve)]
pub fn bounds_curve_js(
    problem: &str,
    setting: &str,
    k: u32,
    lambda_min: f64,
    lambda_max: f64,
    points: u32,
    zap_cost: f64,
) -> Result<String, JsValue> {
    to_js(bounds_curve(problem, setting, k as u64, lambda_min, lambda_max, points as usize, zap_cost))
}

#[wasm_bindgen(js_name = simulateTimeline)]
pub fn simulate_timeline_js(trace: &str, policy: &str, k: u32, lambda: &str, zap_cost: &str, seed: u32) -> Result<String, JsValue> {
    to_js(simulate_timeline(trace, policy, k as u64, lambda, zap_cost, seed as u64))
}

#[wasm_bindgen(js_name = skiRentalRatios)]
pub fn ski_rental_ratios_js(b: u32, max_season: u32) -> Result<String, JsValue> {
    to_js(ski_rental_ratios(b as u64, max_season as u64))
}
