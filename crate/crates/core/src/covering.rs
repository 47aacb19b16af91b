//! Online covering with floor constraints.
//!
//! Constraints arrive one at a time. An unsatisfied constraint is worked on
//! by raising every raisable variable in it at a rate inversely
//! proportional to its objective coefficient, until the constraint holds.
//! Variables are indicators: a variable *fires* when it reaches 1 and is
//! frozen from then on.
//!
//! The raise is piecewise linear in the common work parameter `tau`, so the
//! minimal `tau` is found exactly by walking the breakpoints at which
//! variables reach 1.

use std::collections::HashMap;
use std::fmt::Debug;
use std::hash::Hash;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::rational::Rat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringVariable<K> {
    pub key: K,
    /// Objective weight. Zero means the variable is free and fires as soon
    /// as it is worked on.
    pub coefficient: Rat,
    pub value: Rat,
    pub frozen: bool,
}

impl<K> CoveringVariable<K> {
    pub fn floor(&self) -> bool {
        self.value >= Rat::one()
    }
}

/// Variables whose floors count together, capped at one: the group adds
/// `weight` once any member has fired.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermGroup {
    pub vars: Vec<VarId>,
    pub weight: Rat,
}

/// `sum over groups of weight * min(sum of floors, 1) >= threshold`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoveringConstraint {
    pub groups: Vec<TermGroup>,
    pub threshold: Rat,
}

impl CoveringConstraint {
    /// One group per `(variable, weight)` term.
    pub fn from_terms(terms: impl IntoIterator<Item = (VarId, Rat)>, threshold: Rat) -> Self {
        Self {
            groups: terms
                .into_iter()
                .map(|(v, weight)| TermGroup { vars: vec![v], weight })
                .collect(),
            threshold,
        }
    }

    pub fn variable_count(&self) -> usize {
        self.groups.iter().map(|g| g.vars.len()).sum()
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.groups.iter().flat_map(|g| g.vars.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkReport {
    /// False when the constraint was already satisfied.
    pub worked: bool,
    pub tau: Rat,
    pub objective_delta: Rat,
    /// Variables that reached 1 during this call, ascending.
    pub fired: Vec<VarId>,
    /// `(variable, value before, value after)` for every variable raised.
    pub raised: Vec<(VarId, Rat, Rat)>,
    pub variable_count: usize,
}

impl WorkReport {
    fn idle(variable_count: usize) -> Self {
        Self {
            worked: false,
            tau: Rat::zero(),
            objective_delta: Rat::zero(),
            fired: Vec::new(),
            raised: Vec::new(),
            variable_count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CoveringEngine<K> {
    vars: Vec<CoveringVariable<K>>,
    index: HashMap<K, VarId>,
    objective: Rat,
}

impl<K> Default for CoveringEngine<K> {
    fn default() -> Self {
        Self {
            vars: Vec::new(),
            index: HashMap::new(),
            objective: Rat::zero(),
        }
    }
}

struct Candidate {
    var: VarId,
    group: usize,
    /// `tau` at which the variable reaches 1.
    fire_at: Rat,
    /// `None` for free variables.
    rate: Option<Rat>,
}

impl<K: Clone + Eq + Hash + Debug> CoveringEngine<K> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the variable registered under `key`, creating it at 0.
    pub fn variable(&mut self, key: K, coefficient: Rat) -> VarId {
        if let Some(&id) = self.index.get(&key) {
            return id;
        }
        debug_assert!(coefficient >= Rat::zero());
        let id = VarId(self.vars.len());
        self.vars.push(CoveringVariable {
            key: key.clone(),
            coefficient,
            value: Rat::zero(),
            frozen: false,
        });
        self.index.insert(key, id);
        id
    }

    pub fn lookup(&self, key: &K) -> Option<VarId> {
        self.index.get(key).copied()
    }

    pub fn get(&self, id: VarId) -> &CoveringVariable<K> {
        &self.vars[id.0]
    }

    pub fn key(&self, id: VarId) -> &K {
        &self.vars[id.0].key
    }

    pub fn freeze(&mut self, id: VarId) {
        self.vars[id.0].frozen = true;
    }

    pub fn variables(&self) -> &[CoveringVariable<K>] {
        &self.vars
    }

    /// Sum of coefficient times value over all variables.
    pub fn objective(&self) -> Rat {
        self.objective
    }

    fn group_satisfied(&self, group: &TermGroup) -> bool {
        group.vars.iter().any(|v| self.vars[v.0].floor())
    }

    pub fn is_satisfied(&self, c: &CoveringConstraint) -> bool {
        let covered: Rat = c
            .groups
            .iter()
            .filter(|g| self.group_satisfied(g))
            .map(|g| g.weight)
            .sum();
        covered >= c.threshold
    }

    /// Works on `c` until it is satisfied. `rate_overrides` replaces the
    /// default rate `1 / coefficient` for the listed variables.
    ///
    /// Variables in a group stop rising once the group is covered. Several
    /// variables reaching 1 at the same `tau` all fire.
    pub fn process_constraint(
        &mut self,
        c: &CoveringConstraint,
        rate_overrides: &HashMap<VarId, Rat>,
    ) -> Result<WorkReport> {
        let count = c.variable_count();
        if self.is_satisfied(c) {
            return Ok(WorkReport::idle(count));
        }
        let mut done: Vec<Option<Rat>> = c
            .groups
            .iter()
            .map(|g| self.group_satisfied(g).then(Rat::zero))
            .collect();
        let mut covered: Rat = c
            .groups
            .iter()
            .zip(&done)
            .filter(|(_, d)| d.is_some())
            .map(|(g, _)| g.weight)
            .sum();

        let mut cands = Vec::new();
        for (gi, g) in c.groups.iter().enumerate() {
            if done[gi].is_some() {
                continue;
            }
            for &v in &g.vars {
                let var = &self.vars[v.0];
                if var.frozen {
                    continue;
                }
                let gap = Rat::one() - var.value;
                let rate = match rate_overrides.get(&v) {
                    Some(r) => Some(*r),
                    None if var.coefficient.is_zero() => None,
                    None => Some(Rat::one() / var.coefficient),
                };
                let fire_at = match rate {
                    Some(r) => gap / r,
                    None => Rat::zero(),
                };
                cands.push(Candidate {
                    var: v,
                    group: gi,
                    fire_at,
                    rate,
                });
            }
        }
        cands.sort_by(|a, b| a.fire_at.cmp(&b.fire_at).then(a.var.cmp(&b.var)));

        let mut fired = vec![false; cands.len()];
        let mut tau_star = None;
        let mut i = 0;
        while i < cands.len() {
            let tau = cands[i].fire_at;
            let mut j = i;
            while j < cands.len() && cands[j].fire_at == tau {
                j += 1;
            }
            let mut newly = Vec::new();
            for k in i..j {
                if done[cands[k].group].is_none() {
                    fired[k] = true;
                    newly.push(cands[k].group);
                }
            }
            for g in newly {
                if done[g].is_none() {
                    done[g] = Some(tau);
                    covered += c.groups[g].weight;
                }
            }
            if covered >= c.threshold {
                tau_star = Some(tau);
                break;
            }
            i = j;
        }
        let tau_star = tau_star.ok_or(Error::Unsatisfiable)?;

        let mut report = WorkReport {
            worked: true,
            tau: tau_star,
            objective_delta: Rat::zero(),
            fired: Vec::new(),
            raised: Vec::new(),
            variable_count: count,
        };
        for (k, cand) in cands.iter().enumerate() {
            let var = &mut self.vars[cand.var.0];
            let before = var.value;
            let after = if fired[k] {
                Rat::one()
            } else {
                let stop = done[cand.group].unwrap_or(tau_star);
                let stop = if stop < tau_star { stop } else { tau_star };
                match cand.rate {
                    Some(r) => before + r * stop,
                    None => Rat::one(),
                }
            };
            if after == before {
                continue;
            }
            var.value = after;
            if fired[k] {
                var.frozen = true;
                report.fired.push(cand.var);
            }
            let delta = var.coefficient * (after - before);
            report.objective_delta += delta;
            report.raised.push((cand.var, before, after));
        }
        report.fired.sort();
        self.objective += report.objective_delta;
        Ok(report)
    }

    /// `sum of coefficient * max(reference - value, 0)` over every
    /// registered variable.
    pub fn potential(&self, reference: impl Fn(&K) -> Option<Rat>) -> Result<Rat> {
        let mut phi = Rat::zero();
        for var in &self.vars {
            let target = reference(&var.key).ok_or_else(|| Error::MissingReference(format!("{:?}", var.key)))?;
            if target > var.value {
                phi += var.coefficient * (target - var.value);
            }
        }
        Ok(phi)
    }
}
