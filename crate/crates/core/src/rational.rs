//! Exact rational numbers used for every cost, LP value and threshold.

use std::fmt;

use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::Error;

/// Exact rational with 128-bit numerator and denominator.
///
/// Arithmetic overflow panics in debug builds; desk-scale instances stay
/// far below the limit.
pub type Rat = Ratio<i128>;

pub fn rat(numer: i128, denom: i128) -> Rat {
    Rat::new(numer, denom)
}

pub fn int(value: i128) -> Rat {
    Rat::from_integer(value)
}

/// Parses `p/q`, an integer, or a finite decimal such as `0.125`.
pub fn parse_rat(text: &str) -> Result<Rat, Error> {
    let bad = || Error::Rational(text.to_string());
    let s = text.trim();
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: i128 = parse_int(p).ok_or_else(bad)?;
        let q: i128 = parse_int(q).ok_or_else(bad)?;
        if q == 0 {
            return Err(bad());
        }
        return Ok(Rat::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let whole_digits = whole.trim_start_matches(['-', '+']);
        if frac.is_empty() && whole_digits.is_empty() {
            return Err(bad());
        }
        if !whole_digits.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || frac.len() > 30
        {
            return Err(bad());
        }
        let w: i128 = if whole_digits.is_empty() {
            0
        } else {
            whole_digits.parse().map_err(|_| bad())?
        };
        let scale = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let f: i128 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let numer = w
            .checked_mul(scale)
            .and_then(|v| v.checked_add(f))
            .ok_or_else(bad)?;
        let value = Rat::new(numer, scale);
        return Ok(if negative { -value } else { value });
    }
    parse_int(s).map(Rat::from_integer).ok_or_else(bad)
}

fn parse_int(s: &str) -> Option<i128> {
    let s = s.trim();
    let digits = s.strip_prefix(['-', '+']).unwrap_or(s);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Canonical text form: `p` for integers, `p/q` otherwise.
pub fn fmt_rat(value: &Rat) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

pub fn to_f64(value: &Rat) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Smallest integer `n` with `n >= value`.
pub fn ceil_int(value: &Rat) -> i128 {
    value.ceil().to_integer()
}

pub fn is_nonneg(value: &Rat) -> bool {
    !value.is_negative()
}

pub fn rat_min(a: Rat, b: Rat) -> Rat {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn rat_max(a: Rat, b: Rat) -> Rat {
    if a >= b {
        a
    } else {
        b
    }
}

/// Display adapter for [`Rat`] in canonical form.
pub struct Show<'a>(pub &'a Rat);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&fmt_rat(self.0))
    }
}

pub fn zero() -> Rat {
    Rat::zero()
}

pub fn one() -> Rat {
    Rat::one()
}
