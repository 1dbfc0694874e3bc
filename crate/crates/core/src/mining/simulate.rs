//! Building new schedules out of mined rules or high-utility itemsets.
//!
//! Items are read as zero-based nurse indices. Slots are filled one at a
//! time. While a slot is below its minimum coverage, the first rule (in
//! firing order) whose antecedent is already on the slot and whose
//! consequent would add somebody is fired; when no rule applies, an item set
//! is sampled with probability proportional to its confidence (rules) or
//! utility (itemsets). Additions never push a slot past its maximum coverage
//! or a nurse past their shift limit.

use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{AssociationRule, UtilityItemset};
use crate::error::{Error, Result};
use crate::io::ItemId;
use crate::model::{NspInstance, Schedule};
use crate::rational::to_f64;

#[derive(Clone, Copy, Debug)]
pub enum PatternSource<'a> {
    Rules(&'a [AssociationRule]),
    Itemsets(&'a [UtilityItemset]),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SimulationWarning {
    EmptySource,
    UnderCovered {
        day: usize,
        shift: usize,
        covered: u32,
        required: u32,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiringKind {
    Rule,
    Sample,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub slot: usize,
    pub kind: FiringKind,
    /// Every item of the fired rule or sampled set.
    pub items: Vec<ItemId>,
    pub added: Vec<ItemId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationOutcome {
    pub schedule: Schedule,
    pub warnings: Vec<SimulationWarning>,
    pub firings: Vec<Firing>,
}

struct Candidate {
    antecedent: Vec<ItemId>,
    items: Vec<ItemId>,
    weight: f64,
}

fn candidates(source: PatternSource<'_>) -> Vec<Candidate> {
    match source {
        PatternSource::Rules(rules) => {
            let mut sorted = rules.to_vec();
            sorted.sort_by(AssociationRule::firing_order);
            sorted
                .into_iter()
                .map(|r| Candidate {
                    items: r.items(),
                    weight: to_f64(&r.confidence),
                    antecedent: r.antecedent,
                })
                .collect()
        }
        PatternSource::Itemsets(sets) => sets
            .iter()
            .map(|s| Candidate {
                antecedent: Vec::new(),
                items: s.items.clone(),
                weight: to_f64(&s.utility),
            })
            .collect(),
    }
}

/// Runs at most `max_iterations` firing attempts per slot.
pub fn simulate_schedule(
    source: PatternSource<'_>,
    instance: &NspInstance,
    seed: u64,
    max_iterations: usize,
) -> Result<SimulationOutcome> {
    instance.validate()?;
    let n = instance.nurses();
    let horizon = instance.horizon;
    let mut schedule = Schedule::zeros(n, horizon);
    let cands = candidates(source);
    if cands.is_empty() {
        return Ok(SimulationOutcome {
            schedule,
            warnings: vec![SimulationWarning::EmptySource],
            firings: Vec::new(),
        });
    }
    if let Some(bad) = cands.iter().flat_map(|c| &c.items).find(|&&i| i >= n) {
        return Err(Error::Consistency(format!(
            "item {bad} does not name one of the {n} nurses"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worked = vec![0u32; n];
    let mut warnings = Vec::new();
    let mut firings = Vec::new();
    for z in 0..horizon.slots() {
        let (q, p) = (instance.min_cover_at(z), instance.max_cover_at(z));
        let mut members: BTreeSet<ItemId> = BTreeSet::new();
        let mut iterations = 0;
        while (members.len() as u32) < q && iterations < max_iterations {
            iterations += 1;
            let additions = |c: &Candidate| -> Option<Vec<ItemId>> {
                let added: Vec<ItemId> = c.items.iter().copied().filter(|i| !members.contains(i)).collect();
                let fits = !added.is_empty()
                    && members.len() + added.len() <= p as usize
                    && added.iter().all(|&i| worked[i] < instance.max_shifts[i]);
                fits.then_some(added)
            };
            let fired = cands.iter().find_map(|c| {
                let ready = !c.antecedent.is_empty() && c.antecedent.iter().all(|i| members.contains(i));
                if !ready {
                    return None;
                }
                additions(c).map(|added| (c, added, FiringKind::Rule))
            });
            let chosen = match fired {
                Some(f) => Some(f),
                None => {
                    let open: Vec<(&Candidate, Vec<ItemId>)> =
                        cands.iter().filter_map(|c| additions(c).map(|a| (c, a))).collect();
                    if open.is_empty() {
                        None
                    } else {
                        let weights: Vec<f64> = open.iter().map(|(c, _)| c.weight.max(0.0)).collect();
                        let pick = if weights.iter().any(|&w| w > 0.0) {
                            WeightedIndex::new(&weights)
                                .map_err(|e| Error::Domain(e.to_string()))?
                                .sample(&mut rng)
                        } else {
                            rand::Rng::random_range(&mut rng, 0..open.len())
                        };
                        let (c, added) = open.into_iter().nth(pick).unwrap();
                        Some((c, added, FiringKind::Sample))
                    }
                }
            };
            let Some((c, added, kind)) = chosen else { break };
            for &i in &added {
                members.insert(i);
                worked[i] += 1;
                schedule.set(i, z, true);
            }
            firings.push(Firing {
                slot: z,
                kind,
                items: c.items.clone(),
                added,
            });
        }
        if (members.len() as u32) < q {
            let (day, shift) = horizon.day_shift(z);
            warnings.push(SimulationWarning::UnderCovered {
                day,
                shift,
                covered: members.len() as u32,
                required: q,
            });
        }
    }
    Ok(SimulationOutcome {
        schedule,
        warnings,
        firings,
    })
}
