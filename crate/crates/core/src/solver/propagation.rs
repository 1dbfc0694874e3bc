//! Domain filtering: node consistency against the unary constraints and
//! generalized arc consistency against the coverage constraint.

use std::collections::{HashMap, HashSet};

use log::debug;

use super::constraints::unary_ok;
use crate::model::{ShiftPattern, WcspInstance};

/// Keeps exactly the values that pass every unary check.
pub fn node_consistency(wcsp: &WcspInstance) -> WcspInstance {
    let mut out = wcsp.clone();
    for (i, dom) in out.domains.iter_mut().enumerate() {
        dom.retain(|&j| unary_ok(&wcsp.domain[j], i, &wcsp.instance));
    }
    debug!("node consistency: domain sizes {:?}", out.domain_sizes());
    out
}

struct CoverageBounds {
    min: Vec<u32>,
    max: Vec<u32>,
}

/// Exact support search for the coverage constraint over fixed domains.
struct SupportSearch<'a> {
    wcsp: &'a WcspInstance,
    slots: usize,
    /// Nurses other than the one being checked, most constrained first.
    order: Vec<usize>,
    /// `max_add[d][z]`: nurses in `order[d..]` with some value covering `z`.
    max_add: Vec<Vec<u32>>,
    /// `min_add[d][z]`: nurses in `order[d..]` whose every value covers `z`.
    min_add: Vec<Vec<u32>>,
    bounds: CoverageBounds,
    failed: HashSet<(usize, Vec<u32>)>,
    tuple: Vec<usize>,
}

const FAILED_CACHE_CAP: usize = 1 << 20;

impl<'a> SupportSearch<'a> {
    fn new(wcsp: &'a WcspInstance, skip: usize) -> Self {
        let slots = wcsp.instance.horizon.slots();
        let mut order: Vec<usize> = (0..wcsp.nurses()).filter(|&i| i != skip).collect();
        order.sort_by_key(|&i| (wcsp.domains[i].len(), i));
        let mut max_add = vec![vec![0u32; slots]; order.len() + 1];
        let mut min_add = vec![vec![0u32; slots]; order.len() + 1];
        for d in (0..order.len()).rev() {
            let dom = &wcsp.domains[order[d]];
            let any = dom.iter().fold(0u64, |m, &j| m | wcsp.domain[j].bits());
            let all = dom.iter().fold(u64::MAX, |m, &j| m & wcsp.domain[j].bits());
            for z in 0..slots {
                max_add[d][z] = max_add[d + 1][z] + (any >> z & 1) as u32;
                min_add[d][z] = min_add[d + 1][z] + (all >> z & 1) as u32;
            }
        }
        let bounds = CoverageBounds {
            min: (0..slots).map(|z| wcsp.instance.min_cover_at(z)).collect(),
            max: (0..slots).map(|z| wcsp.instance.max_cover_at(z)).collect(),
        };
        SupportSearch {
            wcsp,
            slots,
            order,
            max_add,
            min_add,
            bounds,
            failed: HashSet::new(),
            tuple: Vec::new(),
        }
    }

    /// Interval test: can the nurses from `depth` on still fit the bounds?
    fn viable(&self, depth: usize, cov: &[u32]) -> bool {
        (0..self.slots).all(|z| {
            cov[z] + self.min_add[depth][z] <= self.bounds.max[z]
                && cov[z] + self.max_add[depth][z] >= self.bounds.min[z]
        })
    }

    fn search(&mut self, depth: usize, cov: &mut Vec<u32>) -> bool {
        if !self.viable(depth, cov) {
            return false;
        }
        if depth == self.order.len() {
            return true;
        }
        if self.failed.contains(&(depth, cov.clone())) {
            return false;
        }
        let nurse = self.order[depth];
        for k in 0..self.wcsp.domains[nurse].len() {
            let j = self.wcsp.domains[nurse][k];
            let p = self.wcsp.domain[j];
            add(cov, &p, 1);
            self.tuple.push(j);
            let found = self.search(depth + 1, cov);
            add(cov, &p, -1);
            if found {
                return true;
            }
            self.tuple.pop();
        }
        if self.failed.len() < FAILED_CACHE_CAP {
            self.failed.insert((depth, cov.clone()));
        }
        false
    }
}

fn add(cov: &mut [u32], p: &ShiftPattern, sign: i32) {
    let mut bits = p.bits();
    while bits != 0 {
        let z = bits.trailing_zeros() as usize;
        cov[z] = (cov[z] as i32 + sign) as u32;
        bits &= bits - 1;
    }
}

/// Complete supporting tuple (value per nurse) for nurse `i` taking `j`.
fn find_support(wcsp: &WcspInstance, i: usize, j: usize) -> Option<Vec<usize>> {
    let mut search = SupportSearch::new(wcsp, i);
    let mut cov = vec![0u32; search.slots];
    add(&mut cov, &wcsp.domain[j], 1);
    if !search.search(0, &mut cov) {
        return None;
    }
    let mut tuple = vec![0; wcsp.nurses()];
    tuple[i] = j;
    for (d, &nurse) in search.order.iter().enumerate() {
        tuple[nurse] = search.tuple[d];
    }
    Some(tuple)
}

/// Removes every value that has no completion satisfying the coverage
/// constraint, repeating until nothing changes.
pub fn gac_filter(wcsp: &WcspInstance) -> WcspInstance {
    let mut out = wcsp.clone();
    // last support found for a (nurse, value), reused while still valid
    let mut residual: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    let mut removed_total = 0;
    loop {
        let mut changed = false;
        for i in 0..out.nurses() {
            let mut k = 0;
            while k < out.domains[i].len() {
                let j = out.domains[i][k];
                let still_valid = residual
                    .get(&(i, j))
                    .is_some_and(|t| t.iter().enumerate().all(|(n, v)| out.domains[n].contains(v)));
                let supported = still_valid
                    || match find_support(&out, i, j) {
                        Some(tuple) => {
                            for (n, &v) in tuple.iter().enumerate() {
                                residual.insert((n, v), tuple.clone());
                            }
                            true
                        }
                        None => false,
                    };
                if supported {
                    k += 1;
                } else {
                    out.domains[i].remove(k);
                    removed_total += 1;
                    changed = true;
                }
            }
            if out.domains[i].is_empty() {
                // every other value is unsupported too
                for d in out.domains.iter_mut() {
                    removed_total += d.len();
                    d.clear();
                }
                debug!("gac: nurse {} wiped out after {removed_total} removals", i + 1);
                return out;
            }
        }
        if !changed {
            break;
        }
    }
    debug!("gac: removed {removed_total} values, domain sizes {:?}", out.domain_sizes());
    out
}
