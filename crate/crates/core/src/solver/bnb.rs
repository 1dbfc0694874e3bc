use std::collections::{HashMap, HashSet};
use std::time::Instant;

use log::debug;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::constraints::unary_ok;
use super::{SearchStats, Sense, SolveResult, SolveStatus};
use crate::model::{Assignment, WcspInstance};
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarOrder {
    /// Fewest admissible values first, ties by nurse index.
    #[default]
    SmallestDomain,
    Index,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueOrder {
    /// Cheapest first when minimizing, heaviest first when maximizing.
    #[default]
    ByWeight,
    DomainOrder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BnbConfig {
    pub var_order: VarOrder,
    pub value_order: ValueOrder,
    /// Prune on the optimistic bound; off means plain exhaustive search.
    pub bounding: bool,
    /// Cut branches whose remaining nurses can no longer reach minimum
    /// coverage, and price uncovered demand into the bound.
    pub coverage_lookahead: bool,
    /// Keep every optimal assignment instead of the first one.
    pub all_optima: bool,
}

impl Default for BnbConfig {
    fn default() -> Self {
        BnbConfig {
            var_order: VarOrder::default(),
            value_order: ValueOrder::default(),
            bounding: true,
            coverage_lookahead: true,
            all_optima: false,
        }
    }
}

/// Optimistic bound of a partial assignment: assigned costs plus, per
/// unassigned nurse, the best cost in its current domain. `None` when an
/// unassigned nurse has no value left.
pub fn compute_bound(partial: &Assignment, wcsp: &WcspInstance, sense: Sense) -> Option<Rational> {
    let mut total = Rational::zero();
    for (i, v) in partial.values.iter().enumerate() {
        total += match v {
            Some(j) => wcsp.cost(i, *j),
            None => {
                let costs = wcsp.domains[i].iter().map(|&j| wcsp.cost(i, j));
                match sense {
                    Sense::Minimize => costs.min()?,
                    Sense::Maximize => costs.max()?,
                }
            }
        };
    }
    Some(total)
}

/// Lower bound for minimization; `cost_cap` when some nurse is wiped out.
pub fn compute_lb(partial: &Assignment, wcsp: &WcspInstance) -> Rational {
    compute_bound(partial, wcsp, Sense::Minimize).unwrap_or(wcsp.cost_cap)
}

const MEMO_CAP: usize = 1 << 20;

struct Search<'a> {
    wcsp: &'a WcspInstance,
    sense: Sense,
    config: BnbConfig,
    order: Vec<usize>,
    /// Candidate values per depth, already ordered and unary-checked lazily.
    values: Vec<Vec<usize>>,
    /// `reach[d][z]`: nurses at depth >= d with some value covering slot z.
    reach: Vec<Vec<u32>>,
    /// Best remaining contribution from depth d on.
    rest_bound: Vec<Rational>,
    /// `slot_price[d][z]`: cheapest cost per covered slot among values of
    /// nurses at depth >= d that cover `z`. Minimization only.
    slot_price: Vec<Vec<Option<Rational>>>,
    /// Coverage multipliers and, per depth, the relaxed remaining optimum
    /// `sum_i min_j (c_ij - lambda . S_j)`. Minimization only.
    lambda: Vec<Rational>,
    relaxed_rest: Vec<Rational>,
    min_cover: Vec<u32>,
    max_cover: Vec<u32>,
    cov: Vec<u32>,
    /// Per `(depth, coverage)` state: `None` when it has no feasible
    /// completion, else a bound on the remaining cost (`best - cost` once
    /// the state's subtree was exhausted).
    memo: HashMap<(usize, Vec<u32>), Option<Rational>>,
    current: Vec<usize>,
    cost: Rational,
    best: Option<(Rational, Vec<usize>)>,
    optima: Vec<Vec<usize>>,
    trace: Vec<Rational>,
    stats: SearchStats,
}

impl Search<'_> {
    fn prune(&self, bound: Rational) -> bool {
        let Some((best, _)) = &self.best else {
            return false;
        };
        match (self.sense, self.config.all_optima) {
            (Sense::Minimize, false) => bound >= *best,
            (Sense::Minimize, true) => bound > *best,
            (Sense::Maximize, false) => bound <= *best,
            (Sense::Maximize, true) => bound < *best,
        }
    }

    fn better(&self, cost: Rational) -> bool {
        match &self.best {
            None => true,
            Some((best, _)) => self.sense.better(cost, *best),
        }
    }

    fn coverage_viable(&self, depth: usize) -> bool {
        self.cov
            .iter()
            .zip(&self.reach[depth])
            .zip(&self.min_cover)
            .all(|((c, r), q)| c + r >= *q)
    }

    /// Remaining cost is at least the per-nurse optimum, and when minimizing
    /// with non-negative costs at least the price of the uncovered demand.
    fn remaining_bound(&self, depth: usize) -> Rational {
        let per_nurse = self.rest_bound[depth];
        if self.sense == Sense::Maximize || !self.config.coverage_lookahead {
            return per_nurse;
        }
        let mut demand = Rational::zero();
        for (z, price) in self.slot_price[depth].iter().enumerate() {
            let short = self.min_cover[z].saturating_sub(self.cov[z]);
            if short > 0 {
                if let Some(price) = price {
                    demand += *price * Rational::from_integer(short as i64);
                }
            }
        }
        let mut relaxed = self.relaxed_rest[depth];
        for (z, l) in self.lambda.iter().enumerate() {
            let short = self.min_cover[z] as i64 - self.cov[z] as i64;
            relaxed += *l * Rational::from_integer(short);
        }
        per_nurse.max(demand).max(relaxed)
    }

    fn visit(&mut self, depth: usize) {
        if depth == self.order.len() {
            self.complete();
            return;
        }
        let key = (depth, self.cov.clone());
        if self.config.bounding {
            match self.memo.get(&key) {
                Some(None) => {
                    self.stats.prunes += 1;
                    return;
                }
                Some(Some(rest)) if self.prune(self.cost + *rest) => {
                    self.stats.prunes += 1;
                    return;
                }
                _ => {}
            }
        }
        self.branch(depth);
        if self.config.bounding && self.memo.len() < MEMO_CAP {
            let rest = self.best.as_ref().map(|(b, _)| *b - self.cost);
            self.memo.insert(key, rest);
        }
    }

    fn branch(&mut self, depth: usize) {
        let nurse = self.order[depth];
        for k in 0..self.values[depth].len() {
            let j = self.values[depth][k];
            self.stats.nodes_expanded += 1;
            let p = self.wcsp.domain[j];
            if !unary_ok(&p, nurse, &self.wcsp.instance) {
                continue;
            }
            let mut bits = p.bits();
            let mut over = false;
            while bits != 0 {
                let z = bits.trailing_zeros() as usize;
                self.cov[z] += 1;
                over |= self.cov[z] > self.max_cover[z];
                bits &= bits - 1;
            }
            let c = self.wcsp.cost(nurse, j);
            self.cost += c;
            let viable = !over && (!self.config.coverage_lookahead || self.coverage_viable(depth + 1));
            if viable {
                if self.config.bounding && self.prune(self.cost + self.remaining_bound(depth + 1)) {
                    self.stats.prunes += 1;
                } else {
                    self.current.push(j);
                    self.visit(depth + 1);
                    self.current.pop();
                }
            }
            self.cost -= c;
            let mut bits = p.bits();
            while bits != 0 {
                self.cov[bits.trailing_zeros() as usize] -= 1;
                bits &= bits - 1;
            }
        }
    }

    fn complete(&mut self) {
        let feasible = self
            .cov
            .iter()
            .zip(&self.min_cover)
            .zip(&self.max_cover)
            .all(|((c, q), p)| q <= c && c <= p);
        if !feasible {
            return;
        }
        let mut values = vec![0; self.order.len()];
        for (d, &nurse) in self.order.iter().enumerate() {
            values[nurse] = self.current[d];
        }
        if self.better(self.cost) {
            self.best = Some((self.cost, values.clone()));
            self.stats.incumbent_updates += 1;
            self.trace.push(self.cost);
            self.optima.clear();
            self.optima.push(values);
        } else if self.config.all_optima && self.best.as_ref().is_some_and(|(b, _)| *b == self.cost) {
            self.optima.push(values);
        }
    }
}

fn ordered_values(wcsp: &WcspInstance, nurse: usize, sense: Sense, order: ValueOrder) -> Vec<usize> {
    let mut vals = wcsp.domains[nurse].clone();
    if order == ValueOrder::ByWeight {
        vals.sort_by(|&a, &b| {
            let (ca, cb) = (wcsp.cost(nurse, a), wcsp.cost(nurse, b));
            match sense {
                Sense::Minimize => ca.cmp(&cb),
                Sense::Maximize => cb.cmp(&ca),
            }
        });
    }
    vals
}

/// Multipliers for relaxing `coverage >= q` into the objective, fitted by a
/// short subgradient ascent at the root. Any non-negative multipliers give a
/// valid lower bound; they are snapped to multiples of 1/64 so the bound
/// stays exact.
fn lagrangian(wcsp: &WcspInstance, order: &[usize], values: &[Vec<usize>]) -> (Vec<Rational>, Vec<Rational>) {
    const ROUNDS: usize = 60;
    let slots = wcsp.instance.horizon.slots();
    let n = order.len();
    let q: Vec<f64> = (0..slots).map(|z| wcsp.instance.min_cover_at(z) as f64).collect();
    let admissible: Vec<Vec<(f64, u64)>> = order
        .iter()
        .zip(values)
        .map(|(&i, vals)| {
            vals.iter()
                .filter(|&&j| unary_ok(&wcsp.domain[j], i, &wcsp.instance))
                .map(|&j| (crate::rational::to_f64(&wcsp.cost(i, j)), wcsp.domain[j].bits()))
                .collect()
        })
        .collect();
    let snap = |l: &[f64]| -> Vec<Rational> {
        l.iter()
            .map(|&v| Rational::new((v.max(0.0) * 64.0).floor() as i64, 64))
            .collect()
    };
    let mut lambda = vec![0.0f64; slots];
    let mut best = (f64::NEG_INFINITY, lambda.clone());
    let mut step = 1.0;
    for _ in 0..ROUNDS {
        let mut value: f64 = lambda.iter().zip(&q).map(|(l, q)| l * q).sum();
        let mut used = vec![0.0f64; slots];
        for vals in &admissible {
            let Some(&(c, bits)) = vals.iter().min_by(|a, b| {
                let ra = a.0 - (0..slots).filter(|z| a.1 >> z & 1 == 1).map(|z| lambda[z]).sum::<f64>();
                let rb = b.0 - (0..slots).filter(|z| b.1 >> z & 1 == 1).map(|z| lambda[z]).sum::<f64>();
                ra.total_cmp(&rb)
            }) else {
                return (vec![Rational::zero(); slots], vec![Rational::zero(); n + 1]);
            };
            value += c - (0..slots).filter(|z| bits >> z & 1 == 1).map(|z| lambda[z]).sum::<f64>();
            for z in 0..slots {
                used[z] += (bits >> z & 1) as f64;
            }
        }
        if value > best.0 {
            best = (value, lambda.clone());
        }
        let grad: Vec<f64> = (0..slots).map(|z| q[z] - used[z]).collect();
        if grad.iter().all(|g| *g <= 0.0) && lambda.iter().zip(&grad).all(|(l, g)| *l == 0.0 || *g == 0.0) {
            break;
        }
        for z in 0..slots {
            lambda[z] = (lambda[z] + step * grad[z]).max(0.0);
        }
        step *= 0.93;
    }
    let lambda = snap(&best.1);
    let mut relaxed_rest = vec![Rational::zero(); n + 1];
    for d in (0..n).rev() {
        let i = order[d];
        let best = values[d]
            .iter()
            .filter(|&&j| unary_ok(&wcsp.domain[j], i, &wcsp.instance))
            .map(|&j| {
                let bits = wcsp.domain[j].bits();
                let credit: Rational = (0..slots).filter(|z| bits >> z & 1 == 1).map(|z| lambda[z]).sum();
                wcsp.cost(i, j) - credit
            })
            .min()
            .unwrap_or_else(Rational::zero);
        relaxed_rest[d] = relaxed_rest[d + 1] + best;
    }
    (lambda, relaxed_rest)
}

/// Depth-first Branch & Bound over the current per-nurse domains.
pub fn branch_and_bound(wcsp: &WcspInstance, sense: Sense, config: BnbConfig) -> SolveResult {
    let start = Instant::now();
    let n = wcsp.nurses();
    let slots = wcsp.instance.horizon.slots();
    let mut order: Vec<usize> = (0..n).collect();
    if config.var_order == VarOrder::SmallestDomain {
        order.sort_by_key(|&i| (wcsp.domains[i].len(), i));
    }
    let values: Vec<Vec<usize>> = order
        .iter()
        .map(|&i| ordered_values(wcsp, i, sense, config.value_order))
        .collect();
    let mut reach = vec![vec![0u32; slots]; n + 1];
    let mut rest_bound = vec![Rational::zero(); n + 1];
    let mut slot_price: Vec<Vec<Option<Rational>>> = vec![vec![None; slots]; n + 1];
    for d in (0..n).rev() {
        let i = order[d];
        let admissible: Vec<usize> = values[d]
            .iter()
            .copied()
            .filter(|&j| unary_ok(&wcsp.domain[j], i, &wcsp.instance))
            .collect();
        let any = admissible.iter().fold(0u64, |m, &j| m | wcsp.domain[j].bits());
        for z in 0..slots {
            reach[d][z] = reach[d + 1][z] + (any >> z & 1) as u32;
        }
        let costs = admissible.iter().map(|&j| wcsp.cost(i, j));
        let best = match sense {
            Sense::Minimize => costs.min(),
            Sense::Maximize => costs.max(),
        };
        rest_bound[d] = rest_bound[d + 1] + best.unwrap_or_else(Rational::zero);
        slot_price[d] = slot_price[d + 1].clone();
        for &j in &admissible {
            let p = wcsp.domain[j];
            let width = p.shift_count();
            if width == 0 {
                continue;
            }
            let per_slot = wcsp.cost(i, j) / Rational::from_integer(width as i64);
            let mut bits = p.bits();
            while bits != 0 {
                let z = bits.trailing_zeros() as usize;
                let cell = &mut slot_price[d][z];
                if cell.is_none_or(|c| per_slot < c) {
                    *cell = Some(per_slot);
                }
                bits &= bits - 1;
            }
        }
    }
    let (lambda, relaxed_rest) = if sense == Sense::Minimize && config.coverage_lookahead {
        lagrangian(wcsp, &order, &values)
    } else {
        (vec![Rational::zero(); slots], vec![Rational::zero(); n + 1])
    };
    let mut search = Search {
        wcsp,
        sense,
        config,
        order,
        values,
        reach,
        rest_bound,
        slot_price,
        lambda,
        relaxed_rest,
        min_cover: (0..slots).map(|z| wcsp.instance.min_cover_at(z)).collect(),
        max_cover: (0..slots).map(|z| wcsp.instance.max_cover_at(z)).collect(),
        cov: vec![0; slots],
        memo: HashMap::new(),
        current: Vec::with_capacity(n),
        cost: Rational::zero(),
        best: None,
        optima: Vec::new(),
        trace: Vec::new(),
        stats: SearchStats::default(),
    };
    search.stats.nodes_expanded = 1;
    let wiped = wcsp.is_inconsistent();
    if !wiped && (!config.coverage_lookahead || search.coverage_viable(0)) {
        search.visit(0);
    }
    search.stats.elapsed = start.elapsed();
    debug!(
        "bnb: {} nodes, {} prunes, {} incumbents",
        search.stats.nodes_expanded, search.stats.prunes, search.stats.incumbent_updates
    );
    let Search {
        best, optima, trace, stats, ..
    } = search;
    match best {
        Some((cost, values)) => SolveResult {
            assignment: Some(Assignment::complete(values)),
            cost,
            optimal: true,
            status: SolveStatus::Optimal,
            stats,
            alternatives: optima.into_iter().map(Assignment::complete).collect(),
            initial_cost: trace.first().copied(),
            trace,
        },
        None => SolveResult::infeasible(wcsp, stats),
    }
}

/// First complete feasible assignment in nurse-index and domain order.
pub fn dfs_first_feasible(wcsp: &WcspInstance) -> SolveResult {
    let start = Instant::now();
    let n = wcsp.nurses();
    let slots = wcsp.instance.horizon.slots();
    let mut stats = SearchStats {
        nodes_expanded: 1,
        ..SearchStats::default()
    };
    let min_cover: Vec<u32> = (0..slots).map(|z| wcsp.instance.min_cover_at(z)).collect();
    let max_cover: Vec<u32> = (0..slots).map(|z| wcsp.instance.max_cover_at(z)).collect();
    let mut reach = vec![vec![0u32; slots]; n + 1];
    for i in (0..n).rev() {
        let any = wcsp.domains[i]
            .iter()
            .filter(|&&j| unary_ok(&wcsp.domain[j], i, &wcsp.instance))
            .fold(0u64, |m, &j| m | wcsp.domain[j].bits());
        for z in 0..slots {
            reach[i][z] = reach[i + 1][z] + (any >> z & 1) as u32;
        }
    }
    // iterative DFS: position in each nurse's domain
    let mut cursor = vec![0usize; n];
    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut cov = vec![0u32; slots];
    let mut failed: HashSet<(usize, Vec<u32>)> = HashSet::new();
    let viable = |cov: &[u32], d: usize| (0..slots).all(|z| cov[z] + reach[d][z] >= min_cover[z]);
    if wcsp.is_inconsistent() || !viable(&cov, 0) {
        stats.elapsed = start.elapsed();
        return SolveResult::infeasible(wcsp, stats);
    }
    let mut depth = 0;
    loop {
        if depth == n {
            if (0..slots).all(|z| cov[z] >= min_cover[z]) {
                let assignment = Assignment::complete(chosen.clone());
                let cost = (0..n).map(|i| wcsp.cost(i, chosen[i])).sum();
                stats.incumbent_updates = 1;
                stats.elapsed = start.elapsed();
                return SolveResult {
                    assignment: Some(assignment.clone()),
                    cost,
                    optimal: false,
                    status: SolveStatus::Feasible,
                    stats,
                    alternatives: vec![assignment],
                    initial_cost: Some(cost),
                    trace: vec![cost],
                };
            }
            depth -= 1;
            let j = chosen.pop().unwrap();
            remove(&mut cov, wcsp.domain[j].bits());
            continue;
        }
        let dom = &wcsp.domains[depth];
        let mut advanced = false;
        while cursor[depth] < dom.len() {
            let j = dom[cursor[depth]];
            cursor[depth] += 1;
            stats.nodes_expanded += 1;
            let p = wcsp.domain[j];
            if !unary_ok(&p, depth, &wcsp.instance) {
                continue;
            }
            let bits = p.bits();
            let mut b = bits;
            let mut over = false;
            while b != 0 {
                let z = b.trailing_zeros() as usize;
                cov[z] += 1;
                over |= cov[z] > max_cover[z];
                b &= b - 1;
            }
            if over || !viable(&cov, depth + 1) {
                remove(&mut cov, bits);
                continue;
            }
            chosen.push(j);
            advanced = true;
            break;
        }
        if advanced {
            depth += 1;
            if depth < n {
                cursor[depth] = 0;
                if failed.contains(&(depth, cov.clone())) {
                    // known dead end: skip straight to backtracking
                    cursor[depth] = wcsp.domains[depth].len();
                    stats.prunes += 1;
                }
            }
            continue;
        }
        if failed.len() < MEMO_CAP {
            failed.insert((depth, cov.clone()));
        }
        if depth == 0 {
            break;
        }
        depth -= 1;
        let j = chosen.pop().unwrap();
        remove(&mut cov, wcsp.domain[j].bits());
    }
    stats.elapsed = start.elapsed();
    SolveResult::infeasible(wcsp, stats)
}

fn remove(cov: &mut [u32], mut bits: u64) {
    while bits != 0 {
        cov[bits.trailing_zeros() as usize] -= 1;
        bits &= bits - 1;
    }
}
