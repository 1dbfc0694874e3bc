use std::time::Instant;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bnb::dfs_first_feasible;
use super::constraints::{coverage, unary_ok};
use super::propagation::{gac_filter, node_consistency};
use super::{SearchStats, Sense, SolveResult, SolveStatus};
use crate::model::{Assignment, WcspInstance};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlsInit {
    /// Uniform random values, redrawn until feasible or the retry cap.
    Random,
    /// First feasible assignment found by depth-first search.
    #[default]
    Dfs,
    /// Depth-first search after node consistency and GAC.
    DfsCp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlsConfig {
    pub init: SlsInit,
    /// Maximum number of candidate swaps evaluated.
    pub budget: u64,
    pub seed: u64,
    pub retry_cap: u64,
}

impl Default for SlsConfig {
    fn default() -> Self {
        SlsConfig {
            init: SlsInit::default(),
            budget: 10_000,
            seed: 0,
            retry_cap: 10_000,
        }
    }
}

fn random_start(
    wcsp: &WcspInstance,
    rng: &mut ChaCha8Rng,
    retry_cap: u64,
    stats: &mut SearchStats,
) -> Option<Vec<usize>> {
    if wcsp.is_inconsistent() {
        return None;
    }
    let inst = &wcsp.instance;
    for _ in 0..retry_cap {
        stats.nodes_expanded += 1;
        let values: Vec<usize> = wcsp
            .domains
            .iter()
            .map(|d| d[rng.random_range(0..d.len())])
            .collect();
        let unary = values
            .iter()
            .enumerate()
            .all(|(i, &j)| unary_ok(&wcsp.domain[j], i, inst));
        if unary && coverage_ok(&cover_of(wcsp, &values), wcsp) {
            return Some(values);
        }
    }
    None
}

fn cover_of(wcsp: &WcspInstance, values: &[usize]) -> Vec<u32> {
    let patterns: Vec<_> = values.iter().map(|&j| wcsp.domain[j]).collect();
    coverage(&patterns, wcsp.instance.horizon.slots())
}

fn coverage_ok(cov: &[u32], wcsp: &WcspInstance) -> bool {
    cov.iter().enumerate().all(|(z, &c)| {
        wcsp.instance.min_cover_at(z) <= c && c <= wcsp.instance.max_cover_at(z)
    })
}

/// Coverage after nurse `i` swaps `from` for `to`, if still within bounds.
fn swap_ok(cov: &[u32], wcsp: &WcspInstance, from: usize, to: usize) -> bool {
    let (a, b) = (wcsp.domain[from].bits(), wcsp.domain[to].bits());
    let changed = a ^ b;
    let mut bits = changed;
    while bits != 0 {
        let z = bits.trailing_zeros() as usize;
        let c = if b >> z & 1 == 1 { cov[z] + 1 } else { cov[z] - 1 };
        if c < wcsp.instance.min_cover_at(z) || c > wcsp.instance.max_cover_at(z) {
            return false;
        }
        bits &= bits - 1;
    }
    true
}

/// Stochastic local search: build a feasible start, then repeatedly sweep
/// the nurses and take the first single-nurse value change that keeps every
/// constraint satisfied and strictly improves the objective. Stops at a
/// local optimum or when `budget` candidate changes have been evaluated.
pub fn sls_solve(wcsp: &WcspInstance, sense: Sense, config: &SlsConfig) -> SolveResult {
    let start = Instant::now();
    let mut stats = SearchStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = match config.init {
        SlsInit::Random => random_start(wcsp, &mut rng, config.retry_cap, &mut stats),
        SlsInit::Dfs | SlsInit::DfsCp => {
            let source = if config.init == SlsInit::DfsCp {
                gac_filter(&node_consistency(wcsp))
            } else {
                wcsp.clone()
            };
            let r = dfs_first_feasible(&source);
            stats.nodes_expanded += r.stats.nodes_expanded;
            r.assignment.map(|a| a.to_complete().expect("dfs returns complete assignments"))
        }
    };
    let Some(mut values) = initial else {
        stats.elapsed = start.elapsed();
        let mut r = SolveResult::infeasible(wcsp, stats);
        // a failed start proves nothing
        r.optimal = false;
        r.status = SolveStatus::NoSolutionFound;
        return r;
    };
    let n = wcsp.nurses();
    let mut cost: Rational = (0..n).map(|i| wcsp.cost(i, values[i])).sum();
    let initial_cost = cost;
    let mut trace = vec![cost];
    let mut cov = cover_of(wcsp, &values);
    // candidate values per nurse, best weight first
    let ordered: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut d: Vec<usize> = wcsp.domains[i]
                .iter()
                .copied()
                .filter(|&j| unary_ok(&wcsp.domain[j], i, &wcsp.instance))
                .collect();
            d.sort_by(|&a, &b| match sense {
                Sense::Minimize => wcsp.cost(i, a).cmp(&wcsp.cost(i, b)),
                Sense::Maximize => wcsp.cost(i, b).cmp(&wcsp.cost(i, a)),
            });
            d
        })
        .collect();
    let mut evaluations = 0u64;
    'outer: loop {
        let mut improved = false;
        for i in 0..n {
            let current = values[i];
            for &j in &ordered[i] {
                let delta = wcsp.cost(i, j) - wcsp.cost(i, current);
                if !sense.better(cost + delta, cost) {
                    // values are sorted, nothing further improves this nurse
                    break;
                }
                if evaluations >= config.budget {
                    break 'outer;
                }
                evaluations += 1;
                if swap_ok(&cov, wcsp, current, j) {
                    let (old, new) = (wcsp.domain[current].bits(), wcsp.domain[j].bits());
                    for z in 0..cov.len() {
                        cov[z] = cov[z] + (new >> z & 1) as u32 - (old >> z & 1) as u32;
                    }
                    values[i] = j;
                    cost += delta;
                    trace.push(cost);
                    stats.incumbent_updates += 1;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            break;
        }
    }
    stats.nodes_expanded += evaluations;
    stats.elapsed = start.elapsed();
    debug!(
        "sls: {} -> {} after {} evaluations",
        initial_cost, cost, evaluations
    );
    let assignment = Assignment::complete(values);
    SolveResult {
        assignment: Some(assignment.clone()),
        cost,
        optimal: false,
        status: SolveStatus::Feasible,
        stats,
        alternatives: vec![assignment],
        initial_cost: Some(initial_cost),
        trace,
    }
}
