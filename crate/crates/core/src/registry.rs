//! Policy names and construction.

use crate::baselines::BaselineKind;
use crate::cilp::{recommended_gamma, CilpPolicy, CilpPolicyConfig, CilpVariant};
use crate::error::{Error, Result};
use crate::meta::MetaPolicy;
use crate::model::ProblemParams;
use crate::rational::{fmt_rat, parse_rat, Rat};
use crate::rng::Seed;
use crate::sim::Policy;
use crate::ski::{SkiKind, SkiRentalPolicy};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gamma {
    Fixed(Rat),
    /// `k * lambda` inside the middle band, nothing elsewhere.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Cilp { variant: CilpVariant, gamma: Option<Gamma> },
    AlgInf(SkiKind),
    HighRent(SkiKind),
    Meta { inner: Box<PolicySpec>, ski: SkiKind },
    Baseline(BaselineKind),
}

impl PolicySpec {
    pub fn parse(name: &str) -> Result<Self> {
        let unknown = || Error::UnknownPolicy(name.to_string());
        if let Some(rest) = name.strip_prefix("meta:") {
            let (inner, ski) = rest.rsplit_once('+').ok_or_else(unknown)?;
            let ski = match ski.strip_prefix("alg-inf:").and_then(SkiKind::from_tag) {
                Some(k) => k,
                None => return Err(unknown()),
            };
            let inner = Self::parse(inner)?;
            if !inner.is_capacity_k() {
                return Err(unknown());
            }
            return Ok(Self::Meta {
                inner: Box::new(inner),
                ski,
            });
        }
        if let Some(tag) = name.strip_prefix("alg-inf:") {
            return SkiKind::from_tag(tag).map(Self::AlgInf).ok_or_else(unknown);
        }
        if let Some(tag) = name.strip_prefix("high-rent:") {
            return SkiKind::from_tag(tag).map(Self::HighRent).ok_or_else(unknown);
        }
        let (base, option) = match name.split_once(':') {
            Some((b, o)) if !b.starts_with("a_d") => (b, Some(o)),
            _ => (name, None),
        };
        if let Some(variant) = CilpVariant::from_name(base) {
            let gamma = match option {
                None => None,
                Some(o) => {
                    let value = o.strip_prefix("gamma=").ok_or_else(unknown)?;
                    if !variant.rental() {
                        return Err(Error::Unsupported {
                            policy: name.into(),
                            reason: "gamma applies to rental variants only".into(),
                        });
                    }
                    if value == "auto" {
                        Some(Gamma::Auto)
                    } else {
                        let g = parse_rat(value)?;
                        if g <= Rat::from_integer(0) {
                            return Err(Error::Params("gamma must be positive".into()));
                        }
                        Some(Gamma::Fixed(g))
                    }
                }
            };
            return Ok(Self::Cilp { variant, gamma });
        }
        BaselineKind::parse(name).map(Self::Baseline).ok_or_else(unknown)
    }

    fn is_capacity_k(&self) -> bool {
        matches!(self, Self::Cilp { .. } | Self::Baseline(_))
    }

    pub fn name(&self) -> String {
        match self {
            Self::Cilp { variant, gamma } => match gamma {
                None => variant.name().into(),
                Some(Gamma::Auto) => format!("{}:gamma=auto", variant.name()),
                Some(Gamma::Fixed(g)) => format!("{}:gamma={}", variant.name(), fmt_rat(g)),
            },
            Self::AlgInf(k) => format!("alg-inf:{}", k.tag()),
            Self::HighRent(k) => format!("high-rent:{}", k.tag()),
            Self::Meta { inner, ski } => format!("meta:{}+alg-inf:{}", inner.name(), ski.tag()),
            Self::Baseline(b) => b.name(),
        }
    }

    pub fn is_randomized(&self) -> bool {
        match self {
            Self::AlgInf(k) | Self::HighRent(k) => *k == SkiKind::RandomizedThreshold,
            Self::Meta { inner, ski } => *ski == SkiKind::RandomizedThreshold || inner.is_randomized(),
            Self::Baseline(b) => matches!(b, BaselineKind::RandomizedMarking) || matches!(b, BaselineKind::IdleTimeout { inner, .. } if **inner == BaselineKind::RandomizedMarking),
            Self::Cilp { .. } => false,
        }
    }

    pub fn cilp_config(&self, params: &ProblemParams) -> Option<CilpPolicyConfig> {
        match self {
            Self::Cilp { variant, gamma } => Some(CilpPolicyConfig {
                variant: *variant,
                gamma: match gamma {
                    None => None,
                    Some(Gamma::Fixed(g)) => Some(*g),
                    Some(Gamma::Auto) => recommended_gamma(params.k, params.lambda),
                },
            }),
            _ => None,
        }
    }

    pub fn build(&self, params: &ProblemParams, seed: Seed) -> Box<dyn Policy> {
        match self {
            Self::Cilp { .. } => Box::new(CilpPolicy::new(self.cilp_config(params).unwrap())),
            Self::AlgInf(k) => Box::new(SkiRentalPolicy::alg_infinity(*k, seed)),
            Self::HighRent(k) => Box::new(SkiRentalPolicy::high_rent(*k, seed)),
            Self::Meta { inner, ski } => Box::new(MetaPolicy::new(
                inner.build(params, seed.child(crate::rng::domain::META_INNER, 0)),
                *ski,
                seed.child(crate::rng::domain::META_SKI, 0),
            )),
            Self::Baseline(b) => b.build(seed),
        }
    }
}
