//! Covering work records, LP assignments and the potential-function
//! invariant checker that replays them.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::model::FileId;
use crate::rational::{fmt_rat, rat_min, Rat};

/// Names of the LP variables: `x_t` (evict the file requested at `t`
/// before its next request), `y_{t,s}` (that file pays rent at step `s`),
/// `z_f` (file `f` is zapped).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKey {
    X(usize),
    Y(usize, usize),
    Z(FileId),
}

impl fmt::Display for VarKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarKey::X(t) => write!(f, "x{t}"),
            VarKey::Y(t, s) => write!(f, "y{t},{s}"),
            VarKey::Z(file) => write!(f, "z{}", file.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintKind {
    /// Rent the file now or evict it (or zap it).
    RentEvict,
    CacheSize,
}

impl ConstraintKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::RentEvict => "rent-evict",
            Self::CacheSize => "cache-size",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaisedVar {
    pub key: VarKey,
    pub coefficient: Rat,
    pub before: Rat,
    pub after: Rat,
}

/// One worked constraint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkRecord {
    pub time: usize,
    pub kind: ConstraintKind,
    pub tau: Rat,
    pub variable_count: usize,
    pub objective_delta: Rat,
    pub fired: Vec<VarKey>,
    pub raised: Vec<RaisedVar>,
}

impl WorkRecord {
    pub fn to_json(&self) -> Value {
        json!({
            "time": self.time,
            "kind": self.kind.name(),
            "tau": fmt_rat(&self.tau),
            "vars": self.variable_count,
            "objective_delta": fmt_rat(&self.objective_delta),
            "fired": self.fired.iter().map(|k| k.to_string()).collect::<Vec<_>>(),
            "raised": self.raised.iter().map(|r| json!([
                r.key.to_string(), fmt_rat(&r.coefficient), fmt_rat(&r.before), fmt_rat(&r.after)
            ])).collect::<Vec<_>>(),
        })
    }
}

/// Serializes records as JSON lines.
pub fn work_log_lines(records: &[WorkRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&r.to_json().to_string());
        out.push('\n');
    }
    out
}

/// A full LP solution: coefficient and value per variable.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LpAssignment {
    pub entries: BTreeMap<VarKey, (Rat, Rat)>,
}

impl LpAssignment {
    pub fn set(&mut self, key: VarKey, coefficient: Rat, value: Rat) {
        self.entries.insert(key, (coefficient, value));
    }

    pub fn value(&self, key: &VarKey) -> Option<Rat> {
        self.entries.get(key).map(|(_, v)| *v)
    }

    pub fn objective(&self) -> Rat {
        self.entries.values().map(|(c, v)| c * v).sum()
    }

    pub fn to_json(&self) -> Value {
        let map: serde_json::Map<String, Value> = self
            .entries
            .iter()
            .filter(|(_, (_, v))| !v.is_zero())
            .map(|(k, (_, v))| (k.to_string(), Value::String(fmt_rat(v))))
            .collect();
        Value::Object(map)
    }
}

/// Which potential inequality to maintain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InvariantForm {
    /// `ALG / delta + phi <= OPT`, delta the largest constraint worked on.
    Delta,
    /// Modified y-rate `gamma / lambda` on constraints with `base` unit-rate
    /// variables besides `y` (1 for rent-evict, 2 for rent-evict-zap):
    /// `min(1, gamma) * ALG / (base + gamma) + phi <= OPT`.
    Gamma { gamma: Rat, base: i128 },
}

/// Replays work records against a feasible reference solution and checks
/// the potential inequality after every worked constraint.
#[derive(Debug, Clone)]
pub struct PotentialChecker {
    reference: LpAssignment,
    values: HashMap<VarKey, Rat>,
    form: InvariantForm,
    alg: Rat,
    phi: Rat,
    opt: Rat,
    delta_eff: usize,
    checks: usize,
}

impl PotentialChecker {
    pub fn new(reference: LpAssignment, form: InvariantForm) -> Self {
        let opt = reference.objective();
        Self {
            reference,
            values: HashMap::new(),
            form,
            alg: Rat::zero(),
            phi: opt,
            opt,
            delta_eff: 0,
            checks: 0,
        }
    }

    fn deficit(&self, key: &VarKey, value: Rat) -> Rat {
        match self.reference.entries.get(key) {
            Some((c, target)) if *target > value => c * (target - value),
            _ => Rat::zero(),
        }
    }

    pub fn observe(&mut self, record: &WorkRecord) -> Result<()> {
        for r in &record.raised {
            let current = self.values.get(&r.key).copied().unwrap_or_else(Rat::zero);
            if current != r.before {
                return Err(Error::Invariant(format!(
                    "step {}: {} recorded at {} but replayed value is {}",
                    record.time, r.key, fmt_rat(&r.before), fmt_rat(&current)
                )));
            }
            if r.after < r.before {
                return Err(Error::Invariant(format!("step {}: {} decreased", record.time, r.key)));
            }
            self.phi -= self.deficit(&r.key, r.before);
            self.phi += self.deficit(&r.key, r.after);
            self.alg += r.coefficient * (r.after - r.before);
            self.values.insert(r.key, r.after);
        }
        self.delta_eff = self.delta_eff.max(record.variable_count);
        self.checks += 1;
        if !self.holds() {
            return Err(Error::Invariant(format!(
                "step {}: potential inequality fails (ALG {} phi {} OPT {} form {:?})",
                record.time,
                fmt_rat(&self.alg),
                fmt_rat(&self.phi),
                fmt_rat(&self.opt),
                self.form
            )));
        }
        Ok(())
    }

    pub fn observe_all<'a>(&mut self, records: impl IntoIterator<Item = &'a WorkRecord>) -> Result<()> {
        for r in records {
            self.observe(r)?;
        }
        Ok(())
    }

    pub fn holds(&self) -> bool {
        match self.form {
            InvariantForm::Delta => {
                let delta = Rat::from_integer(self.delta_eff.max(1) as i128);
                self.alg / delta + self.phi <= self.opt
            }
            InvariantForm::Gamma { gamma, base } => {
                let m = rat_min(Rat::one(), gamma);
                m * self.alg / (Rat::from_integer(base) + gamma) + self.phi <= self.opt
            }
        }
    }

    /// The gamma inequality with `phi` divided by `min(1, gamma)` on the
    /// left and `OPT` undivided. Fails at the start of any run with
    /// `gamma < 1` and `OPT > 0`, since then `phi = OPT`.
    pub fn unscaled_gamma_holds(&self) -> Option<bool> {
        match self.form {
            InvariantForm::Gamma { gamma, base } => {
                let m = rat_min(Rat::one(), gamma);
                Some(self.alg / (Rat::from_integer(base) + gamma) + self.phi / m <= self.opt)
            }
            InvariantForm::Delta => None,
        }
    }

    pub fn alg(&self) -> Rat {
        self.alg
    }

    pub fn phi(&self) -> Rat {
        self.phi
    }

    pub fn opt(&self) -> Rat {
        self.opt
    }

    pub fn delta_eff(&self) -> usize {
        self.delta_eff
    }

    pub fn checks(&self) -> usize {
        self.checks
    }
}
