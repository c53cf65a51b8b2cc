use std::collections::BTreeMap;

use serde::Serialize;

use gwsfs::estimate::{invert_phi_j, phi_j};
use gwsfs::limits::{
    bd_sfs_limit, bd_sfs_quadrature, bd_total_mut_limit, bd_total_mut_quadrature,
    general_sfs_limits, BirthDeathModel, GeneralLimitOptions,
};
use gwsfs::sfs::{aggregate, mean_and_se, AggregateTable, Normalization, SiteFrequencySpectrum};
use gwsfs::sim::{
    replicate_seed, run_replicates, run_until_survivors, EventKind, MutationTree, PopulationState,
    ReplicateResult, RunOptions, StopCondition, ROOT,
};

use crate::config::RunConfig;

pub const TRACKED_JS: [u64; 3] = [1, 2, 3];
pub const LIMIT_AGREEMENT: f64 = 1e-6;
/// Monte Carlo means may deviate from the limit by this many standard errors.
pub const MONTE_CARLO_SE: f64 = 4.0;
pub const ROUND_TRIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidateOptions {
    /// Replicates stepped event by event with all bookkeeping checks.
    pub replicates: usize,
    /// Event-level runs stop once the population reaches this size.
    pub size_cap: u64,
    /// Target size and survivor count of the Monte Carlo limit check.
    pub monte_carlo_size: u64,
    pub monte_carlo_survivors: usize,
    /// Corrupts one live count in the first replicate. Test use only.
    pub tamper: bool,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            replicates: 20,
            size_cap: 300,
            monte_carlo_size: 2000,
            monte_carlo_survivors: 400,
            tamper: false,
        }
    }
}

struct Tally {
    name: &'static str,
    failures: usize,
    first: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            failures: 0,
            first: None,
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures += 1;
            if self.first.is_none() {
                self.first = Some(what());
            }
        }
    }

    fn finish(self, checked: &str) -> CheckResult {
        let detail = match &self.first {
            None => format!("{checked}: no violations"),
            Some(first) => format!("{checked}: {} violations, first: {first}", self.failures),
        };
        CheckResult {
            name: self.name.into(),
            passed: self.failures == 0,
            detail,
        }
    }
}

/// Runs the invariant suite for `config.model`. Failures are reported in
/// the result rather than returned as errors.
pub fn cmd_validate(config: &RunConfig, opts: &ValidateOptions) -> ValidationReport {
    let mut checks = Vec::new();
    match config.model.derived() {
        Ok(d) => checks.push(CheckResult {
            name: "model".into(),
            passed: true,
            detail: format!(
                "m={:.6} lambda={:.6} p={:.6}",
                d.mean_offspring, d.growth_rate, d.extinction_prob
            ),
        }),
        Err(e) => {
            checks.push(CheckResult {
                name: "model".into(),
                passed: false,
                detail: e.to_string(),
            });
            return ValidationReport { checks };
        }
    }
    checks.extend(event_level_checks(config, opts));
    if config.model.offspring.is_birth_death() {
        checks.push(closed_form_agreement(config));
    } else {
        checks.push(monte_carlo_limits(config, opts));
    }
    checks.extend(phi_checks());
    checks.push(round_trips(config));
    checks.push(determinism(config));
    ValidationReport { checks }
}

fn event_level_checks(config: &RunConfig, opts: &ValidateOptions) -> Vec<CheckResult> {
    let mut events_ok = Tally::new("event_invariants");
    let mut books = Tally::new("bookkeeping");
    let mut decomposition = Tally::new("decomposition");
    let mut monotone = Tally::new("counter_monotonicity");
    let mut oracle = Tally::new("snapshot_oracle");
    let mut total_events = 0usize;

    for i in 0..opts.replicates {
        let seed = replicate_seed(config.master_seed, i as u64);
        let mut state = match PopulationState::new(&config.model, &TRACKED_JS, seed) {
            Ok(s) => s,
            Err(e) => {
                books.record(false, || e.to_string());
                continue;
            }
        };
        let mut tampered = false;
        let mut events = 0usize;
        let mut previous = state.counters().unwrap_or_default().to_vec();
        while state.pop_size() > 0 && state.pop_size() < opts.size_cap && events < 200_000 {
            let before = state.pop_size();
            let Ok(ev) = state.step() else { break };
            events += 1;
            let expected = match ev.kind {
                EventKind::Mutation => before,
                _ => before + ev.offspring_count as u64 - 1,
            };
            events_ok.record(state.pop_size() == expected, || {
                format!(
                    "replicate {i} event {events}: Z {before} -> {} after {:?}",
                    state.pop_size(),
                    ev
                )
            });

            if opts.tamper && i == 0 && events >= 50 && !tampered {
                if let Some(node) = (1..state.tree().len() as u32)
                    .rev()
                    .find(|&n| state.tree().live_count(n) > 0)
                {
                    state.tamper_live_count(node, 1);
                    tampered = true;
                }
            }

            if let Err(msg) = state.check_bookkeeping() {
                books.record(false, || format!("replicate {i} event {events}: {msg}"));
            }
            match state.decomposition_holds() {
                Ok(v) => {
                    for (j, ok) in v {
                        decomposition.record(ok, || {
                            format!("replicate {i} event {events}: S_{j} identity broken")
                        });
                    }
                }
                Err(e) => decomposition.record(false, || e.to_string()),
            }
            let now = state.counters().unwrap_or_default();
            let grew = now
                .iter()
                .zip(&previous)
                .all(|(a, b)| a.enters >= b.enters && a.exits >= b.exits);
            monotone.record(grew, || {
                format!("replicate {i} event {events}: a counter decreased")
            });
            previous = now.to_vec();
            if tampered {
                break;
            }
        }
        total_events += events;
        let snap: BTreeMap<u64, u64> = state.snapshot_sfs().iter().collect();
        oracle.record(snap == ancestor_walk(state.tree()), || {
            format!("replicate {i}: snapshot differs from per-individual walk")
        });
    }
    let scope = format!("{} replicates, {total_events} events", opts.replicates);
    vec![
        events_ok.finish(&scope),
        books.finish(&scope),
        decomposition.finish(&scope),
        monotone.finish(&scope),
        oracle.finish(&scope),
    ]
}

/// Clone sizes found by walking every live individual up to the root.
pub fn ancestor_walk(tree: &MutationTree) -> BTreeMap<u64, u64> {
    let mut carriers = vec![0u64; tree.len()];
    for node in 0..tree.len() as u32 {
        for _ in 0..tree.live_count(node) {
            let mut cur = node;
            while cur != ROOT {
                carriers[cur as usize] += 1;
                cur = tree.parent(cur).unwrap_or(ROOT);
            }
        }
    }
    let mut hist = BTreeMap::new();
    for c in carriers.into_iter().filter(|&c| c > 0) {
        *hist.entry(c).or_insert(0) += 1;
    }
    hist
}

fn closed_form_agreement(config: &RunConfig) -> CheckResult {
    let name = "limit_agreement".to_string();
    let bd = match BirthDeathModel::from_params(&config.model) {
        Ok(s) => s,
        Err(e) => {
            return CheckResult {
                name,
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let js: Vec<u64> = (1..=5).collect();
    let ode = match general_sfs_limits(&config.model, &js, &GeneralLimitOptions::default()) {
        Ok(v) => v,
        Err(e) => {
            return CheckResult {
                name,
                passed: false,
                detail: e.to_string(),
            }
        }
    };
    let mut worst = 0.0f64;
    for (&j, o) in js.iter().zip(&ode) {
        let series = bd_sfs_limit(&bd, j, 1e-12).value;
        let quad = bd_sfs_quadrature(&bd, j, 1e-12);
        worst = worst
            .max((series - quad).abs())
            .max((series - o.value).abs());
    }
    let total_gap = (bd_total_mut_limit(&bd) - bd_total_mut_quadrature(&bd, 1e-12)).abs();
    CheckResult {
        name,
        passed: worst <= LIMIT_AGREEMENT && total_gap <= LIMIT_AGREEMENT,
        detail: format!("series/quadrature/ODE for j=1..5: max gap {worst:.2e}; total mutations: gap {total_gap:.2e}"),
    }
}

fn monte_carlo_limits(config: &RunConfig, opts: &ValidateOptions) -> CheckResult {
    let name = "limit_monte_carlo".to_string();
    let js: Vec<u64> = (1..=3).collect();
    let run = || -> Result<(Vec<f64>, AggregateTable), String> {
        let limits = general_sfs_limits(&config.model, &js, &GeneralLimitOptions::default())
            .map_err(|e| e.to_string())?;
        let (results, _) = config
            .with_pool(|| {
                run_until_survivors(
                    &config.model,
                    StopCondition::FixedSize(opts.monte_carlo_size),
                    &RunOptions::default().with_y_extension(0.0),
                    config.master_seed,
                    opts.monte_carlo_survivors,
                )
            })
            .map_err(|e| e.to_string())?
            .map_err(|e| e.to_string())?;
        let table = aggregate(
            &results,
            Normalization::FixedSize {
                size: opts.monte_carlo_size,
            },
        )
        .map_err(|e| e.to_string())?;
        Ok((limits.into_iter().map(|v| v.value).collect(), table))
    };
    match run() {
        Err(detail) => CheckResult {
            name,
            passed: false,
            detail,
        },
        Ok((limits, table)) => {
            let mut worst = 0.0f64;
            for (&j, limit) in js.iter().zip(&limits) {
                let (mean, se) = table.row(j).map_or((0.0, None), |r| (r.mean, r.std_error));
                let z = se.map_or(f64::INFINITY, |se| (mean - limit).abs() / se);
                worst = worst.max(z);
            }
            CheckResult {
                name,
                passed: worst <= MONTE_CARLO_SE,
                detail: format!(
                    "N={} with {} survivors: ODE limit vs mean S_j/N for j=1..3, worst {worst:.2} SE",
                    opts.monte_carlo_size, opts.monte_carlo_survivors
                ),
            }
        }
    }
}

fn phi_checks() -> Vec<CheckResult> {
    let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
    let mut monotone = true;
    let mut worst = 0.0f64;
    for j in 1..=10 {
        let values: Vec<f64> = grid.iter().map(|&p| phi_j(p, j)).collect();
        monotone &= values.windows(2).all(|w| w[1] < w[0]);
        for (&p, &x) in grid.iter().zip(&values) {
            worst = worst.max((invert_phi_j(x, j, 1e-12).p_hat - p).abs());
        }
    }
    vec![
        CheckResult {
            name: "phi_monotonicity".into(),
            passed: monotone,
            detail: "phi_j strictly decreasing on a 10^3-point grid for j=1..10".into(),
        },
        CheckResult {
            name: "phi_round_trip".into(),
            passed: worst <= ROUND_TRIP_TOL,
            detail: format!("max |invert(phi_j(p)) - p| = {worst:.2e}"),
        },
    ]
}

fn round_trips(config: &RunConfig) -> CheckResult {
    let check = || -> Result<(), String> {
        let results = run_replicates(
            &config.model,
            StopCondition::FixedSize(200),
            &RunOptions::instrumented(&TRACKED_JS),
            config.master_seed,
            8,
        )
        .map_err(|e| e.to_string())?;
        for r in &results {
            let text = serde_json::to_string(r).map_err(|e| e.to_string())?;
            let back: ReplicateResult = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            if &back != r {
                return Err("replicate JSON".into());
            }
            let mut buf = Vec::new();
            r.sfs.write_csv(&mut buf).map_err(|e| e.to_string())?;
            if SiteFrequencySpectrum::read_csv(buf.as_slice()).map_err(|e| e.to_string())? != r.sfs
            {
                return Err("spectrum CSV".into());
            }
        }
        let survivors: Vec<_> = results.into_iter().filter(|r| r.survived()).collect();
        if !survivors.is_empty() {
            let table = aggregate(&survivors, Normalization::FixedSize { size: 200 })
                .map_err(|e| e.to_string())?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf).map_err(|e| e.to_string())?;
            if AggregateTable::read_csv(buf.as_slice()).map_err(|e| e.to_string())? != table {
                return Err("aggregate CSV".into());
            }
        }
        let (m, se) = mean_and_se(&[1.0, 2.0]);
        if m != 1.5 || se != Some(0.5) {
            return Err("mean/SE arithmetic".into());
        }
        Ok(())
    };
    let (passed, detail) = match check() {
        Ok(()) => (
            true,
            "replicate JSON, spectrum CSV and aggregate CSV parse back unchanged".to_string(),
        ),
        Err(what) => (false, format!("{what} did not round-trip")),
    };
    CheckResult {
        name: "round_trips".into(),
        passed,
        detail,
    }
}

fn determinism(config: &RunConfig) -> CheckResult {
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .ok()
            .map(|pool| {
                pool.install(|| {
                    run_replicates(
                        &config.model,
                        StopCondition::FixedSize(100),
                        &RunOptions::default(),
                        config.master_seed,
                        8,
                    )
                })
            })
    };
    let (a, b) = (run_with(1), run_with(3));
    let passed = matches!((&a, &b), (Some(Ok(x)), Some(Ok(y))) if x == y);
    CheckResult {
        name: "determinism".into(),
        passed,
        detail: "8 replicates on 1 and 3 threads give identical results".into(),
    }
}
