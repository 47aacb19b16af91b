//! Reference competitive-ratio bounds, evaluated exactly.
//!
//! Constants involving `e` use the partial sum of `1/n!` up to `n = 20`,
//! which is within `1e-18` of `e`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rational::{fmt_rat, Rat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Problem {
    RentalPaging,
    WeightedRentalPaging,
    RentalCaching,
    RentalCachingFault,
    PagingZapping,
    WeightedPagingZapping,
    RentalZappingPaging,
    WeightedRentalZappingPaging,
    RentalZappingCaching,
    RentalZappingCachingFault,
}

impl Problem {
    pub const ALL: [Problem; 10] = [
        Self::RentalPaging,
        Self::WeightedRentalPaging,
        Self::RentalCaching,
        Self::RentalCachingFault,
        Self::PagingZapping,
        Self::WeightedPagingZapping,
        Self::RentalZappingPaging,
        Self::WeightedRentalZappingPaging,
        Self::RentalZappingCaching,
        Self::RentalZappingCachingFault,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::RentalPaging => "rental-paging",
            Self::WeightedRentalPaging => "weighted-rental-paging",
            Self::RentalCaching => "rental-caching",
            Self::RentalCachingFault => "rental-caching-fault",
            Self::PagingZapping => "paging-zapping",
            Self::WeightedPagingZapping => "weighted-paging-zapping",
            Self::RentalZappingPaging => "rental-zapping-paging",
            Self::WeightedRentalZappingPaging => "weighted-rental-zapping-paging",
            Self::RentalZappingCaching => "rental-zapping-caching",
            Self::RentalZappingCachingFault => "rental-zapping-caching-fault",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    /// Rows stated as identical to another row.
    fn canonical(self) -> Self {
        match self {
            Self::RentalCaching => Self::WeightedRentalPaging,
            Self::RentalCachingFault => Self::RentalPaging,
            Self::WeightedPagingZapping => Self::PagingZapping,
            Self::RentalZappingCaching => Self::WeightedRentalZappingPaging,
            Self::RentalZappingCachingFault => Self::RentalZappingPaging,
            p => p,
        }
    }

    pub fn needs_lambda(self) -> bool {
        !matches!(self.canonical(), Self::PagingZapping)
    }

    pub fn needs_zap_cost(self) -> bool {
        matches!(self.canonical(), Self::PagingZapping)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    Deterministic,
    Randomized,
}

impl Setting {
    pub fn name(self) -> &'static str {
        match self {
            Self::Deterministic => "det",
            Self::Randomized => "rand",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "det" | "deterministic" => Some(Self::Deterministic),
            "rand" | "randomized" => Some(Self::Randomized),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    High,
    Middle,
    Low,
    /// Row without a lambda split.
    Any,
}

impl Band {
    pub fn of(k: u64, lambda: Rat) -> Self {
        let k = Rat::from_integer(k as i128);
        if lambda * k >= Rat::one() {
            Self::High
        } else if lambda * k * k >= Rat::one() {
            Self::Middle
        } else {
            Self::Low
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::High => "lambda >= 1/k",
            Self::Middle => "1/k^2 <= lambda < 1/k",
            Self::Low => "lambda < 1/k^2",
            Self::Any => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundQuery {
    pub problem: Problem,
    pub setting: Setting,
    pub k: u64,
    pub lambda: Option<Rat>,
    pub zap_cost: Option<Rat>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bound {
    pub band: Band,
    pub lower: Option<BigRational>,
    pub upper: Option<BigRational>,
    pub notes: Vec<String>,
}

impl Bound {
    pub fn lower_f64(&self) -> Option<f64> {
        self.lower.as_ref().and_then(|v| v.to_f64())
    }

    pub fn upper_f64(&self) -> Option<f64> {
        self.upper.as_ref().and_then(|v| v.to_f64())
    }

    pub fn to_json(&self, q: &BoundQuery) -> Value {
        let show = |v: &Option<BigRational>| match v {
            Some(v) => json!({ "exact": big_fmt(v), "approx": v.to_f64() }),
            None => Value::Null,
        };
        json!({
            "problem": q.problem.name(),
            "setting": q.setting.name(),
            "k": q.k,
            "lambda": q.lambda.map(|l| fmt_rat(&l)),
            "zap_cost": q.zap_cost.map(|n| fmt_rat(&n)),
            "band": self.band.name(),
            "lower": show(&self.lower),
            "upper": show(&self.upper),
            "notes": self.notes,
        })
    }
}

pub fn big(r: Rat) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

fn bi(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn big_fmt(v: &BigRational) -> String {
    if v.denom().is_one() {
        v.numer().to_string()
    } else {
        format!("{}/{}", v.numer(), v.denom())
    }
}

pub struct ShowBig<'a>(pub &'a BigRational);

impl fmt::Display for ShowBig<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&big_fmt(self.0))
    }
}

/// `sum_{n <= 20} 1/n!`.
pub fn e_approx() -> BigRational {
    let mut term = BigRational::one();
    let mut sum = BigRational::one();
    for n in 1..=20u64 {
        term /= bi(n);
        sum += &term;
    }
    sum
}

/// `e / (e - 1)`.
pub fn e_ratio() -> BigRational {
    let e = e_approx();
    &e / (&e - BigRational::one())
}

pub fn harmonic(k: u64) -> BigRational {
    (1..=k).map(|i| BigRational::new(BigInt::one(), BigInt::from(i))).sum()
}

pub fn bounds(q: &BoundQuery) -> Result<Bound> {
    if q.k == 0 {
        return Err(Error::Params("k must be positive".into()));
    }
    let problem = q.problem.canonical();
    let k = bi(q.k);
    let one = BigRational::one();
    let lambda = if problem.needs_lambda() {
        let l = q.lambda.ok_or_else(|| Error::Params(format!("{} needs lambda", q.problem.name())))?;
        if l < Rat::zero() {
            return Err(Error::Params("lambda must be nonnegative".into()));
        }
        Some(l)
    } else {
        None
    };
    let n = if problem.needs_zap_cost() {
        let n = q.zap_cost.ok_or_else(|| Error::Params(format!("{} needs a zap cost", q.problem.name())))?;
        if n < Rat::one() {
            return Err(Error::Params("zap cost must be at least 1".into()));
        }
        Some(big(n))
    } else {
        None
    };
    let band = lambda.map_or(Band::Any, |l| Band::of(q.k, l));
    let l = lambda.map(big).unwrap_or_else(BigRational::zero);
    let det_lower = |band: Band| match band {
        Band::High => &bi(2) - &l,
        _ => (&k + &k * &l) / (&one + &k * &k * &l),
    };
    let mut notes = Vec::new();
    let (lower, upper) = match (problem, q.setting) {
        (Problem::RentalPaging, Setting::Deterministic) => {
            let upper = match band {
                Band::High => bi(2),
                Band::Middle => &one + &one / (&k * &l),
                _ => k.clone(),
            };
            (Some(det_lower(band)), Some(upper))
        }
        (Problem::WeightedRentalPaging, Setting::Deterministic) => (Some(det_lower(band)), Some(k.clone())),
        (Problem::RentalPaging | Problem::WeightedRentalPaging, Setting::Randomized) => match band {
            Band::High => (Some(e_ratio()), Some(e_ratio())),
            _ => {
                let h = harmonic(q.k);
                let khl = &k * &k * &h * &l;
                notes.push(
                    "lower bound uses k^2 H_k lambda; the theorem statement writes k H_k lambda".to_string(),
                );
                (Some((&h + &khl) / (&one + &khl)), Some(&h + e_ratio()))
            }
        },
        (Problem::PagingZapping, Setting::Deterministic) => {
            let n = n.unwrap();
            let two_k1 = &bi(2) * &k + &one;
            let lower = (&n * &two_k1 - (&k + &one)) / (&n + &bi(2) * &k);
            let upper = if n < two_k1 { n } else { two_k1 };
            (Some(lower), Some(upper))
        }
        (Problem::RentalZappingPaging, Setting::Deterministic) => {
            let upper = match band {
                Band::High => bi(3),
                Band::Middle => &one + &bi(2) / (&k * &l),
                _ => &bi(2) * &k + &one,
            };
            (None, Some(upper))
        }
        (Problem::WeightedRentalZappingPaging, Setting::Deterministic) => (None, Some(&bi(2) * &k + &one)),
        _ => (None, None),
    };
    if lower.is_none() && upper.is_none() {
        return Err(Error::NoBound);
    }
    Ok(Bound {
        band,
        lower,
        upper,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn q(problem: Problem, setting: Setting, k: u64, lambda: Option<Rat>, n: Option<Rat>) -> Bound {
        bounds(&BoundQuery {
            problem,
            setting,
            k,
            lambda,
            zap_cost: n,
        })
        .unwrap()
    }

    fn b(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn table_examples() {
        let r = q(Problem::RentalPaging, Setting::Deterministic, 4, Some(int(1)), None);
        assert_eq!(r.upper, Some(b(2, 1)));
        assert_eq!(r.lower, Some(b(1, 1)));
        let r = q(Problem::PagingZapping, Setting::Deterministic, 2, None, Some(int(5)));
        assert_eq!(r.lower, Some(b(22, 9)));
        assert_eq!(r.upper, Some(b(5, 1)));
        let r = q(Problem::RentalPaging, Setting::Deterministic, 10, Some(rat(1, 200)), None);
        assert_eq!(r.upper, Some(b(10, 1)));
    }

    #[test]
    fn e_is_accurate() {
        let e = e_approx().to_f64().unwrap();
        assert!((e - std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn bands_meet_at_one_over_k() {
        for k in 1..20u64 {
            // just below 1/k the middle upper tends to 2; at 1/k exactly it is 2
            let at = q(Problem::RentalPaging, Setting::Deterministic, k, Some(rat(1, k as i128)), None);
            assert_eq!(at.upper, Some(b(2, 1)));
            let k_big = bi(k);
            let middle_at_edge = BigRational::one() + BigRational::one() / (&k_big * big(rat(1, k as i128)));
            assert_eq!(middle_at_edge, b(2, 1));
        }
    }

    #[test]
    fn absent_rows() {
        let r = bounds(&BoundQuery {
            problem: Problem::PagingZapping,
            setting: Setting::Randomized,
            k: 2,
            lambda: None,
            zap_cost: Some(int(2)),
        });
        assert_eq!(r, Err(Error::NoBound));
        let r = q(Problem::RentalZappingPaging, Setting::Deterministic, 3, Some(rat(1, 2)), None);
        assert!(r.lower.is_none());
        assert_eq!(r.upper, Some(b(3, 1)));
    }

    #[test]
    fn lower_below_upper_on_grid() {
        let lambdas: Vec<Rat> = (0..=24).map(|i| rat(1, 1i128 << i)).chain([int(0), int(2), int(8)]).collect();
        let ns: Vec<Rat> = [1, 2, 3, 5, 10, 50, 100, 1000].iter().map(|n| int(*n)).collect();
        for k in (1..=64u64).step_by(3).chain([64]) {
            for p in Problem::ALL {
                for s in [Setting::Deterministic, Setting::Randomized] {
                    for l in &lambdas {
                        for n in &ns {
                            let Ok(r) = bounds(&BoundQuery {
                                problem: p,
                                setting: s,
                                k,
                                lambda: Some(*l),
                                zap_cost: Some(*n),
                            }) else {
                                continue;
                            };
                            if let (Some(lo), Some(up)) = (&r.lower, &r.upper) {
                                assert!(lo <= up, "{p:?} {s:?} k={k} l={l} n={n}: {lo} > {up}");
                            }
                        }
                    }
                }
            }
        }
    }
}
