//! Seeded random traces and the small-instance corpora.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{Catalog, Event, Trace};
use crate::rational::int;
use crate::rng::{domain, Seed};

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub files: usize,
    pub steps: usize,
    /// Probability that a step is a tick.
    pub tick_density: f64,
    pub size_range: (u64, u64),
    pub cost_range: (u64, u64),
}

impl Default for GenSpec {
    fn default() -> Self {
        Self {
            files: 4,
            steps: 12,
            tick_density: 0.2,
            size_range: (1, 1),
            cost_range: (1, 1),
        }
    }
}

impl GenSpec {
    pub fn validate(&self) -> Result<()> {
        if self.files == 0 {
            return Err(Error::Params("need at least one file".into()));
        }
        if !(0.0..=1.0).contains(&self.tick_density) {
            return Err(Error::Params("tick density must lie in [0, 1]".into()));
        }
        let (s0, s1) = self.size_range;
        let (c0, c1) = self.cost_range;
        if s0 == 0 || s0 > s1 || c0 > c1 {
            return Err(Error::Params("empty or invalid size/cost range".into()));
        }
        Ok(())
    }
}

/// File names `a`..`z`, then `f26`, `f27`, ...
pub fn file_name(i: usize) -> String {
    if i < 26 {
        ((b'a' + i as u8) as char).to_string()
    } else {
        format!("f{i}")
    }
}

pub fn generate_with(spec: &GenSpec, rng: &mut ChaCha8Rng) -> Result<Trace> {
    spec.validate()?;
    let mut catalog = Catalog::new();
    let mut ids = Vec::with_capacity(spec.files);
    for i in 0..spec.files {
        let size = rng.gen_range(spec.size_range.0..=spec.size_range.1);
        let cost = rng.gen_range(spec.cost_range.0..=spec.cost_range.1);
        ids.push(catalog.add(file_name(i), size, int(cost as i128))?);
    }
    let events = (0..spec.steps)
        .map(|_| {
            if rng.gen_bool(spec.tick_density) {
                Event::Tick
            } else {
                Event::Request(ids[rng.gen_range(0..ids.len())])
            }
        })
        .collect();
    Ok(Trace::new(catalog, events))
}

pub fn generate(spec: &GenSpec, seed: Seed) -> Result<Trace> {
    generate_with(spec, &mut seed.stream(domain::GENERATOR, 0, 0))
}

#[derive(Debug, Clone)]
pub struct CorpusInstance {
    pub index: usize,
    pub k: u64,
    pub trace: Trace,
}

/// Small oracle-feasible instances: `k` in 1..=3, at most 6 files and 14
/// steps. `sized` draws sizes up to `min(3, k)` and costs in 1..=4.
pub fn corpus(seed: Seed, count: usize, sized: bool) -> Vec<CorpusInstance> {
    (0..count)
        .map(|i| {
            let mut rng = seed.stream(domain::GENERATOR, i as u64, if sized { 1 } else { 0 });
            let k = rng.gen_range(1..=3u64);
            let files = rng.gen_range(2..=6usize);
            let steps = rng.gen_range(1..=14usize);
            let tick_density = [0.0, 0.15, 0.3][rng.gen_range(0..3)];
            let spec = GenSpec {
                files,
                steps,
                tick_density,
                size_range: if sized { (1, k.min(3)) } else { (1, 1) },
                cost_range: if sized { (1, 4) } else { (1, 1) },
            };
            let trace = generate_with(&spec, &mut rng).expect("corpus spec is valid");
            CorpusInstance { index: i, k, trace }
        })
        .collect()
}
