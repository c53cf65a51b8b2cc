//! Exact event-driven simulation of the branching process with neutral
//! mutations under the infinite-sites model.
//!
//! Genotypes are nodes in a mutation tree: an individual's genotype is the
//! most recent mutation it carries, and it carries every ancestor of that
//! node. Node 0 is the unmutated founder genotype. Picking a uniformly
//! random individual is done by picking a genotype class with probability
//! proportional to its live count.

mod batch;
mod fenwick;
mod seed;

pub use batch::{run_replicates, run_until_survivors};
pub use fenwick::WeightedIndex;
pub use seed::{replicate_seed, splitmix64};

use rand::distr::weighted::WeightedIndex as Categorical;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{ModelError, ModelParams};
use crate::sfs::SiteFrequencySpectrum;

pub type NodeId = u32;

/// The unmutated founder genotype.
pub const ROOT: NodeId = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("population is extinct")]
    EmptyPopulation,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid stop condition: {0}")]
    InvalidStop(String),
    #[error("clone-size counters were not enabled for this run")]
    NotInstrumented,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopCondition {
    FixedTime(f64),
    FixedSize(u64),
}

impl StopCondition {
    fn check(&self) -> Result<(), SimError> {
        match *self {
            StopCondition::FixedTime(t) if !(t > 0.0 && t.is_finite()) => Err(
                SimError::InvalidStop(format!("time must be positive, got {t}")),
            ),
            StopCondition::FixedSize(0) => {
                Err(SimError::InvalidStop("size must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Clone sizes `j` for which enter/exit counters are maintained.
    pub instrument_js: Vec<u64>,
    /// Extra time simulated after the stop to estimate `Y`; `None` means `4 / lambda`.
    pub y_extension: Option<f64>,
}

impl RunOptions {
    pub fn instrumented(js: &[u64]) -> Self {
        Self {
            instrument_js: js.to_vec(),
            ..Self::default()
        }
    }

    pub fn with_y_extension(mut self, delta: f64) -> Self {
        self.y_extension = Some(delta);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    ReachedTime,
    ReachedSize,
    Extinct,
}

/// Cumulative number of times a mutation's clone size entered and left `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnterExitCounters {
    pub j: u64,
    pub enters: u64,
    pub exits: u64,
}

impl EnterExitCounters {
    /// `enters - exits`, the current number of clones of size exactly `j`.
    pub fn net(&self) -> u64 {
        self.enters - self.exits
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateResult {
    pub stop_reason: StopReason,
    /// `t` for fixed-time runs, `tau_N` for fixed-size runs, extinction time otherwise.
    pub final_time: f64,
    pub final_pop: u64,
    pub sfs: SiteFrequencySpectrum,
    pub total_mutations: u64,
    /// `e^{-lambda s} Z(s)` at the end of the extension run.
    pub y_hat: f64,
    pub tau_n: Option<f64>,
    /// `log(N / y_hat) / lambda`.
    pub t_n_hat: Option<f64>,
    pub counters: Option<Vec<EnterExitCounters>>,
    pub seed: u64,
}

impl ReplicateResult {
    pub fn survived(&self) -> bool {
        self.stop_reason != StopReason::Extinct
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    /// Replacement by zero offspring.
    Death,
    /// Replacement by `k >= 1` offspring.
    Birth,
    Mutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event {
    pub kind: EventKind,
    /// Genotype class of the affected individual.
    pub node: NodeId,
    pub offspring_count: usize,
}

/// Arena of mutation nodes. Children always have larger ids than parents.
#[derive(Debug, Clone)]
pub struct MutationTree {
    parents: Vec<NodeId>,
    live: Vec<u64>,
    // Subtree live sums; maintained only in instrumented mode.
    clone_sizes: Option<Vec<u64>>,
}

impl MutationTree {
    fn new(instrumented: bool) -> Self {
        Self {
            parents: vec![ROOT],
            live: vec![1],
            clone_sizes: instrumented.then(|| vec![1]),
        }
    }

    /// Number of nodes including the root.
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Parent of `node`; `None` for the root.
    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        (node != ROOT).then(|| self.parents[node as usize])
    }

    /// Number of live individuals whose most recent mutation is `node`.
    pub fn live_count(&self, node: NodeId) -> u64 {
        self.live[node as usize]
    }

    pub fn cached_clone_size(&self, node: NodeId) -> Option<u64> {
        self.clone_sizes.as_ref().map(|c| c[node as usize])
    }

    /// Clone size of every node (subtree live sums) in one reverse sweep.
    pub fn clone_sizes(&self) -> Vec<u64> {
        let mut sizes = self.live.clone();
        for i in (1..sizes.len()).rev() {
            let parent = self.parents[i] as usize;
            sizes[parent] += sizes[i];
        }
        sizes
    }

    /// Histogram of clone sizes over mutations still carried by someone.
    pub fn snapshot_sfs(&self) -> SiteFrequencySpectrum {
        let mut sfs = SiteFrequencySpectrum::new();
        for &size in &self.clone_sizes()[1..] {
            if size > 0 {
                sfs.add(size, 1);
            }
        }
        sfs
    }
}

struct Instrument {
    counters: Vec<EnterExitCounters>,
}

impl Instrument {
    fn record(&mut self, from: u64, to: u64) {
        for c in &mut self.counters {
            if from == c.j && to != c.j {
                c.exits += 1;
            } else if from != c.j && to == c.j {
                c.enters += 1;
            }
        }
    }
}

/// Mutable state of one replicate.
pub struct PopulationState {
    time: f64,
    pop_size: u64,
    tree: MutationTree,
    sampler: WeightedIndex,
    instrument: Option<Instrument>,
    rng: ChaCha8Rng,
    lifetime_rate: f64,
    mutation_rate: f64,
    offspring: Categorical<f64>,
}

impl PopulationState {
    /// One unmutated individual at time 0.
    pub fn new(params: &ModelParams, instrument_js: &[u64], seed: u64) -> Result<Self, SimError> {
        params.validate()?;
        let instrumented = !instrument_js.is_empty();
        let mut js = instrument_js.to_vec();
        js.sort_unstable();
        js.dedup();
        let mut sampler = WeightedIndex::with_capacity(1024);
        sampler.push(1);
        let offspring =
            Categorical::new(params.offspring.probs().iter().copied()).map_err(|_| {
                ModelError::NotNormalized {
                    sum: params.offspring.probs().iter().sum(),
                }
            })?;
        Ok(Self {
            time: 0.0,
            pop_size: 1,
            tree: MutationTree::new(instrumented),
            sampler,
            instrument: instrumented.then(|| Instrument {
                counters: js
                    .into_iter()
                    .map(|j| EnterExitCounters {
                        j,
                        enters: 0,
                        exits: 0,
                    })
                    .collect(),
            }),
            rng: ChaCha8Rng::seed_from_u64(seed),
            lifetime_rate: params.lifetime_rate,
            mutation_rate: params.mutation_rate,
            offspring,
        })
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn pop_size(&self) -> u64 {
        self.pop_size
    }

    pub fn tree(&self) -> &MutationTree {
        &self.tree
    }

    pub fn counters(&self) -> Option<&[EnterExitCounters]> {
        self.instrument.as_ref().map(|i| i.counters.as_slice())
    }

    pub fn snapshot_sfs(&self) -> SiteFrequencySpectrum {
        self.tree.snapshot_sfs()
    }

    /// Advances the clock by an `Exp(Z (a + nu))` waiting time and fires one event.
    pub fn step(&mut self) -> Result<Event, SimError> {
        let dt = self.waiting_time()?;
        self.time += dt;
        Ok(self.fire())
    }

    fn waiting_time(&mut self) -> Result<f64, SimError> {
        if self.pop_size == 0 {
            return Err(SimError::EmptyPopulation);
        }
        let rate = self.pop_size as f64 * (self.lifetime_rate + self.mutation_rate);
        let e: f64 = self.rng.sample(Exp1);
        Ok(e / rate)
    }

    fn fire(&mut self) -> Event {
        let total_rate = self.lifetime_rate + self.mutation_rate;
        let demographic = self.rng.random::<f64>() * total_rate < self.lifetime_rate;
        let target = self.rng.random_range(0..self.pop_size);
        let node = self.sampler.find(target) as NodeId;
        if demographic {
            let k = self.offspring.sample(&mut self.rng);
            self.apply_offspring(node, k);
            Event {
                kind: if k == 0 {
                    EventKind::Death
                } else {
                    EventKind::Birth
                },
                node,
                offspring_count: k,
            }
        } else {
            self.apply_mutation(node);
            Event {
                kind: EventKind::Mutation,
                node,
                offspring_count: 1,
            }
        }
    }

    /// An individual of genotype `node` is replaced by `k` offspring.
    pub fn apply_offspring(&mut self, node: NodeId, k: usize) {
        let i = node as usize;
        assert!(
            self.tree.live[i] > 0,
            "no live individual has genotype {node}"
        );
        if k == 1 {
            return;
        }
        let delta = k as i64 - 1;
        self.tree.live[i] = self.tree.live[i].wrapping_add_signed(delta);
        self.pop_size = self.pop_size.wrapping_add_signed(delta);
        self.sampler.add(i, delta);
        if let (Some(sizes), Some(inst)) =
            (self.tree.clone_sizes.as_mut(), self.instrument.as_mut())
        {
            let mut cur = node;
            while cur != ROOT {
                let c = cur as usize;
                let from = sizes[c];
                let to = from.wrapping_add_signed(delta);
                sizes[c] = to;
                inst.record(from, to);
                cur = self.tree.parents[c];
            }
            sizes[0] = sizes[0].wrapping_add_signed(delta);
        }
    }

    /// An individual of genotype `node` acquires a new mutation. Returns its id.
    pub fn apply_mutation(&mut self, node: NodeId) -> NodeId {
        let i = node as usize;
        assert!(
            self.tree.live[i] > 0,
            "no live individual has genotype {node}"
        );
        let new = self.tree.parents.len();
        let id = NodeId::try_from(new).expect("mutation tree exceeds u32 ids");
        self.tree.live[i] -= 1;
        self.sampler.add(i, -1);
        self.tree.parents.push(node);
        self.tree.live.push(1);
        self.sampler.push(1);
        // Ancestor clone sizes are unchanged: the mutant still carries them.
        if let (Some(sizes), Some(inst)) =
            (self.tree.clone_sizes.as_mut(), self.instrument.as_mut())
        {
            sizes.push(1);
            inst.record(0, 1);
        }
        id
    }

    /// Checks population-size, sampler and clone-size-cache bookkeeping.
    pub fn check_bookkeeping(&self) -> Result<(), String> {
        let live_sum: u64 = self.tree.live.iter().sum();
        if live_sum != self.pop_size {
            return Err(format!(
                "sum of live counts {live_sum} != population size {}",
                self.pop_size
            ));
        }
        if self.sampler.total() != self.pop_size {
            return Err(format!(
                "sampler weight {} != population size {}",
                self.sampler.total(),
                self.pop_size
            ));
        }
        if self.sampler.len() != self.tree.len() {
            return Err("sampler and tree disagree on node count".into());
        }
        if let Some(cached) = &self.tree.clone_sizes {
            if *cached != self.tree.clone_sizes() {
                return Err("cached clone sizes differ from subtree sums".into());
            }
        }
        Ok(())
    }

    /// Enter/exit identity against a fresh snapshot, per tracked `j`.
    pub fn decomposition_holds(&self) -> Result<Vec<(u64, bool)>, SimError> {
        let counters = self.counters().ok_or(SimError::NotInstrumented)?;
        let sfs = self.snapshot_sfs();
        Ok(counters
            .iter()
            .map(|c| (c.j, c.enters - c.exits == sfs.get(c.j)))
            .collect())
    }

    #[doc(hidden)]
    /// Corrupts a live count without touching any derived structure.
    pub fn tamper_live_count(&mut self, node: NodeId, delta: i64) {
        let i = node as usize;
        self.tree.live[i] = self.tree.live[i].wrapping_add_signed(delta);
    }

    /// Continues only the population size until `until`, ignoring mutations.
    fn extend_size_only(&mut self, until: f64) -> u64 {
        let mut z = self.pop_size;
        let mut t = self.time;
        while z > 0 {
            let e: f64 = self.rng.sample(Exp1);
            t += e / (z as f64 * self.lifetime_rate);
            if t > until {
                break;
            }
            let k = self.offspring.sample(&mut self.rng) as u64;
            z = z + k - 1;
        }
        z
    }
}

/// Runs one replicate to the stop condition or extinction.
///
/// For fixed-size stops the run ends at the first event with `Z >= N`.
/// The spectrum is the snapshot at the stopping state. When the extension
/// `Delta > 0`, the population size alone is then continued for `Delta` time
/// units to form `Y_hat = e^{-lambda (T + Delta)} Z(T + Delta)`.
pub fn run(
    params: &ModelParams,
    stop: StopCondition,
    opts: &RunOptions,
    seed: u64,
) -> Result<ReplicateResult, SimError> {
    stop.check()?;
    let lambda = params.growth_rate();
    let delta = opts.y_extension.unwrap_or(4.0 / lambda);
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(SimError::InvalidStop(format!(
            "y extension must be >= 0, got {delta}"
        )));
    }
    let mut state = PopulationState::new(params, &opts.instrument_js, seed)?;

    let stop_reason = match stop {
        StopCondition::FixedTime(horizon) => loop {
            if state.pop_size == 0 {
                break StopReason::Extinct;
            }
            let dt = state.waiting_time()?;
            if state.time + dt > horizon {
                state.time = horizon;
                break StopReason::ReachedTime;
            }
            state.time += dt;
            state.fire();
        },
        StopCondition::FixedSize(target) => loop {
            if state.pop_size >= target {
                break StopReason::ReachedSize;
            }
            if state.pop_size == 0 {
                break StopReason::Extinct;
            }
            state.step()?;
        },
    };

    let sfs = state.snapshot_sfs();
    let total_mutations = sfs.total();
    let final_time = state.time;
    let final_pop = state.pop_size;
    let counters = state.counters().map(<[_]>::to_vec);

    let y_hat = if final_pop == 0 {
        0.0
    } else if delta > 0.0 {
        let end = final_time + delta;
        let z = state.extend_size_only(end);
        (-lambda * end).exp() * z as f64
    } else {
        (-lambda * final_time).exp() * final_pop as f64
    };

    let (tau_n, t_n_hat) = match (stop, stop_reason) {
        (StopCondition::FixedSize(n), StopReason::ReachedSize) => {
            let t_hat = (y_hat > 0.0).then(|| (n as f64 / y_hat).ln() / lambda);
            (Some(final_time), t_hat)
        }
        _ => (None, None),
    };

    Ok(ReplicateResult {
        stop_reason,
        final_time,
        final_pop,
        sfs,
        total_mutations,
        y_hat,
        tau_n,
        t_n_hat,
        counters,
        seed,
    })
}

/// Checks `enters - exits == S_j` at the stop time for every tracked `j`.
pub fn verify_decomposition(result: &ReplicateResult) -> Result<Vec<(u64, bool)>, SimError> {
    let counters = result.counters.as_ref().ok_or(SimError::NotInstrumented)?;
    Ok(counters
        .iter()
        .map(|c| {
            (
                c.j,
                c.enters.checked_sub(c.exits) == Some(result.sfs.get(c.j)),
            )
        })
        .collect())
}

/// Population size at time `t` of a process started from one individual.
pub fn population_size_at(params: &ModelParams, t: f64, seed: u64) -> Result<u64, SimError> {
    let mut state = PopulationState::new(params, &[], seed)?;
    Ok(state.extend_size_only(t))
}
