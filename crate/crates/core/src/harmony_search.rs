//! Discrete Harmony Search over triplets of edge-vector indexes.
//!
//! Each harmony is a [`Triplet`]; the memory holds `hms` of them with their
//! fitness. One cycle improvises a new triplet, scores it and replaces the
//! worst memory row when strictly better.
//!
//! All randomness comes from a single [`HsaRng`] stream seeded with
//! [`HsaConfig::seed`]. Draw order, all values uniform in `[0, 1)`:
//!
//! * initialization, per row and component: one draw for the index, plus one
//!   more per resample while the component repeats an earlier one;
//! * improvisation, per component: `r1`; if memory is used, a row draw and
//!   `r2`, then if pitch is adjusted `r3` and a sign draw; otherwise one draw
//!   for the random index. Repairs of repeated components follow, one draw per
//!   attempt.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Triplet;
use crate::objective::Fitness;

/// Portable seedable generator used for every run.
pub type HsaRng = ChaCha8Rng;

/// Attempts made to redraw a repeated component before accepting the triplet.
pub const REPAIR_ATTEMPTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HsaError {
    #[error("need at least 3 distinct indexes, domain is [{lower}, {upper}]")]
    InsufficientEdges { lower: usize, upper: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HsaConfig {
    /// Harmony memory size.
    pub hms: usize,
    /// Harmony memory consideration rate.
    pub hmcr: f64,
    /// Pitch adjusting rate.
    pub par: f64,
    /// Pitch adjustment bandwidth, in index units.
    pub bw: f64,
    /// Number of improvisations after initialization.
    pub ni: usize,
    pub seed: u64,
    pub lower: usize,
    pub upper: usize,
}

impl Default for HsaConfig {
    fn default() -> Self {
        Self {
            hms: 100,
            hmcr: 0.7,
            par: 0.3,
            bw: 2.0,
            ni: 200,
            seed: 0,
            lower: 0,
            upper: 0,
        }
    }
}

impl HsaConfig {
    /// Same parameters over the index domain of an edge vector with `edge_count` points.
    pub fn for_edges(&self, edge_count: usize) -> Self {
        Self {
            lower: 0,
            upper: edge_count.saturating_sub(1),
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    /// Checks the rate and size parameters; the domain is checked separately.
    pub fn validate(&self) -> Result<(), HsaError> {
        let bad = |msg: String| Err(HsaError::InvalidConfig(msg));
        if !(0.0..=1.0).contains(&self.hmcr) {
            return bad(format!("hmcr must lie in [0, 1], got {}", self.hmcr));
        }
        if !(0.0..=1.0).contains(&self.par) {
            return bad(format!("par must lie in [0, 1], got {}", self.par));
        }
        if !(self.bw > 0.0 && self.bw.is_finite()) {
            return bad(format!("bw must be positive, got {}", self.bw));
        }
        if self.hms < 2 {
            return bad(format!("hms must be at least 2, got {}", self.hms));
        }
        if self.ni < 1 {
            return bad("ni must be at least 1".into());
        }
        if self.lower > self.upper {
            return bad(format!("lower {} exceeds upper {}", self.lower, self.upper));
        }
        Ok(())
    }

    fn check_domain(&self) -> Result<(), HsaError> {
        if self.upper < self.lower + 2 {
            return Err(HsaError::InsufficientEdges {
                lower: self.lower,
                upper: self.upper,
            });
        }
        Ok(())
    }

    /// Uniform index in `[lower, upper]`.
    fn uniform_index<R: Rng>(&self, rng: &mut R) -> usize {
        let span = (self.upper - self.lower + 1) as f64;
        let offset = (rng.random::<f64>() * span) as usize;
        self.lower + offset.min(self.upper - self.lower)
    }

    /// `lower + round(r * (upper - lower))`: the random-selection rule.
    fn rounded_index(&self, r: f64) -> usize {
        let offset = (r * (self.upper - self.lower) as f64).round() as usize;
        self.lower + offset.min(self.upper - self.lower)
    }

    fn clamp(&self, value: i64) -> usize {
        value.clamp(self.lower as i64, self.upper as i64) as usize
    }
}

/// `hms` triplets with their fitness, plus cached best and worst rows.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonyMemory {
    entries: Vec<(Triplet, Fitness)>,
    best: usize,
    worst: usize,
}

impl HarmonyMemory {
    /// Fills the memory with uniformly drawn distinct-component triplets.
    pub fn init<R, F>(cfg: &HsaConfig, rng: &mut R, mut eval: F) -> Result<Self, HsaError>
    where
        R: Rng,
        F: FnMut(&Triplet) -> Fitness,
    {
        cfg.validate()?;
        cfg.check_domain()?;
        let entries = (0..cfg.hms)
            .map(|_| {
                let mut idx = [0usize; 3];
                for j in 0..3 {
                    idx[j] = cfg.uniform_index(rng);
                    while idx[..j].contains(&idx[j]) {
                        idx[j] = cfg.uniform_index(rng);
                    }
                }
                let t = Triplet(idx);
                let f = eval(&t);
                (t, f)
            })
            .collect();
        Ok(Self::from_entries(entries))
    }

    /// Wraps existing rows. Panics on an empty list.
    pub fn from_entries(entries: Vec<(Triplet, Fitness)>) -> Self {
        assert!(!entries.is_empty(), "harmony memory cannot be empty");
        let mut hm = Self {
            entries,
            best: 0,
            worst: 0,
        };
        hm.refresh();
        hm
    }

    fn refresh(&mut self) {
        let (mut best, mut worst) = (0, 0);
        for (i, (_, f)) in self.entries.iter().enumerate() {
            if f.j_value < self.entries[best].1.j_value {
                best = i;
            }
            if f.j_value > self.entries[worst].1.j_value {
                worst = i;
            }
        }
        self.best = best;
        self.worst = worst;
    }

    pub fn entries(&self) -> &[(Triplet, Fitness)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn best(&self) -> &(Triplet, Fitness) {
        &self.entries[self.best]
    }

    pub fn worst(&self) -> &(Triplet, Fitness) {
        &self.entries[self.worst]
    }

    pub fn best_index(&self) -> usize {
        self.best
    }

    pub fn worst_index(&self) -> usize {
        self.worst
    }

    /// Builds a new triplet by memory consideration, pitch adjustment and
    /// random selection, then repairs repeated components.
    pub fn improvise<R: Rng>(&self, cfg: &HsaConfig, rng: &mut R) -> Triplet {
        let mut idx = [0usize; 3];
        for (j, slot) in idx.iter_mut().enumerate() {
            let r1: f64 = rng.random();
            *slot = if r1 < cfg.hmcr {
                let row = ((rng.random::<f64>() * self.len() as f64) as usize).min(self.len() - 1);
                let mut value = self.entries[row].0 .0[j];
                let r2: f64 = rng.random();
                if r2 < cfg.par {
                    let r3: f64 = rng.random();
                    let step = (r3 * cfg.bw).round() as i64;
                    let step = if rng.random::<f64>() < 0.5 { step } else { -step };
                    value = cfg.clamp(value as i64 + step);
                }
                value
            } else {
                cfg.rounded_index(rng.random())
            };
        }
        for j in 1..3 {
            let mut attempts = 0;
            while idx[..j].contains(&idx[j]) && attempts < REPAIR_ATTEMPTS {
                idx[j] = cfg.uniform_index(rng);
                attempts += 1;
            }
        }
        Triplet(idx)
    }

    /// Replaces the worst row when `f` is strictly better. Returns whether it did.
    pub fn update(&mut self, t: Triplet, f: Fitness) -> bool {
        if f.j_value < self.entries[self.worst].1.j_value {
            self.entries[self.worst] = (t, f);
            self.refresh();
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunTrace {
    /// Best memory fitness after each improvisation cycle.
    pub best_j_per_iteration: Vec<f64>,
    /// Objective calls, initialization included.
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HsaOutcome {
    pub best: Triplet,
    pub fitness: Fitness,
    pub trace: RunTrace,
    pub memory: HarmonyMemory,
}

/// Runs initialization followed by exactly `cfg.ni` improvise/evaluate/update cycles.
pub fn run<F>(cfg: &HsaConfig, mut eval: F) -> Result<HsaOutcome, HsaError>
where
    F: FnMut(&Triplet) -> Fitness,
{
    let mut rng = HsaRng::seed_from_u64(cfg.seed);
    let mut memory = HarmonyMemory::init(cfg, &mut rng, &mut eval)?;
    let mut trace = RunTrace {
        best_j_per_iteration: Vec::with_capacity(cfg.ni),
        evaluations: cfg.hms,
    };
    for _ in 0..cfg.ni {
        let t = memory.improvise(cfg, &mut rng);
        let f = eval(&t);
        trace.evaluations += 1;
        memory.update(t, f);
        trace.best_j_per_iteration.push(memory.best().1.j_value);
    }
    let (best, fitness) = *memory.best();
    Ok(HsaOutcome {
        best,
        fitness,
        trace,
        memory,
    })
}
