use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ItemId, TransactionDb};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrequentItemset {
    /// Sorted, duplicate-free.
    pub items: Vec<ItemId>,
    pub support_count: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<ItemId>,
    pub consequent: Vec<ItemId>,
    /// Support of `antecedent ∪ consequent`.
    pub support_count: u64,
    #[serde(with = "crate::rational::serde_text")]
    pub confidence: Rational,
}

impl AssociationRule {
    pub fn items(&self) -> Vec<ItemId> {
        let mut all: Vec<ItemId> = self.antecedent.iter().chain(&self.consequent).copied().collect();
        all.sort_unstable();
        all
    }

    /// Firing order: confidence desc, support desc, antecedent, consequent.
    pub fn firing_order(a: &Self, b: &Self) -> Ordering {
        b.confidence
            .cmp(&a.confidence)
            .then(b.support_count.cmp(&a.support_count))
            .then_with(|| a.antecedent.cmp(&b.antecedent))
            .then_with(|| a.consequent.cmp(&b.consequent))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleShape {
    /// Every split of every frequent itemset.
    #[default]
    All,
    /// One-item consequents only.
    SingleConsequent,
    /// One-item consequents drawn from the largest frequent itemsets only,
    /// the presentation used for hand-worked rule lists.
    PaperCompat,
}

fn support(db: &TransactionDb, items: &[ItemId]) -> u64 {
    db.transactions
        .iter()
        .filter(|t| items.iter().all(|i| t.contains(i)))
        .count() as u64
}

/// Level-wise Apriori. Returns every itemset whose support count reaches
/// `min_support_count`, ordered by size and then lexicographically.
pub fn apriori(db: &TransactionDb, min_support_count: u64) -> Result<Vec<FrequentItemset>> {
    if min_support_count == 0 {
        return Err(Error::Domain("minimum support count must be at least 1".into()));
    }
    let mut counts: BTreeMap<ItemId, u64> = BTreeMap::new();
    for t in &db.transactions {
        for &i in t {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut level: Vec<FrequentItemset> = counts
        .into_iter()
        .filter(|&(_, c)| c >= min_support_count)
        .map(|(i, c)| FrequentItemset {
            items: vec![i],
            support_count: c,
        })
        .collect();
    let mut out = Vec::new();
    while !level.is_empty() {
        let known: BTreeSet<&[ItemId]> = level.iter().map(|f| f.items.as_slice()).collect();
        let mut next = Vec::new();
        for (a, fa) in level.iter().enumerate() {
            for fb in &level[a + 1..] {
                let (x, y) = (&fa.items, &fb.items);
                let k = x.len();
                if x[..k - 1] != y[..k - 1] {
                    // levels are sorted, so no later itemset shares the prefix either
                    break;
                }
                let mut cand = x.clone();
                cand.push(y[k - 1]);
                let all_subsets_frequent = (0..cand.len()).all(|drop| {
                    let sub: Vec<ItemId> = cand
                        .iter()
                        .enumerate()
                        .filter(|&(p, _)| p != drop)
                        .map(|(_, &i)| i)
                        .collect();
                    known.contains(sub.as_slice())
                });
                if !all_subsets_frequent {
                    continue;
                }
                let c = support(db, &cand);
                if c >= min_support_count {
                    next.push(FrequentItemset {
                        items: cand,
                        support_count: c,
                    });
                }
            }
        }
        out.append(&mut level);
        next.sort_by(|a, b| a.items.cmp(&b.items));
        level = next;
    }
    Ok(out)
}

/// Apriori with the threshold given as a fraction of the database size.
pub fn apriori_ratio(db: &TransactionDb, min_support: Rational) -> Result<Vec<FrequentItemset>> {
    if min_support <= Rational::zero() || min_support > Rational::one() {
        return Err(Error::Domain("minimum support ratio must lie in (0, 1]".into()));
    }
    let count = (min_support * Rational::from_integer(db.len() as i64)).ceil().to_integer();
    apriori(db, count.max(1) as u64)
}


/// Rules `X ⇒ Y` with confidence at least `min_confidence`, in firing order.
pub fn generate_rules(
    frequent: &[FrequentItemset],
    min_confidence: Rational,
    shape: RuleShape,
) -> Result<Vec<AssociationRule>> {
    if min_confidence <= Rational::zero() || min_confidence > Rational::one() {
        return Err(Error::Domain("minimum confidence must lie in (0, 1]".into()));
    }
    let supports: BTreeMap<&[ItemId], u64> = frequent
        .iter()
        .map(|f| (f.items.as_slice(), f.support_count))
        .collect();
    let largest = frequent.iter().map(|f| f.items.len()).max().unwrap_or(0);
    let mut rules = Vec::new();
    for f in frequent.iter().filter(|f| f.items.len() >= 2) {
        if shape == RuleShape::PaperCompat && f.items.len() < largest {
            continue;
        }
        let k = f.items.len();
        for mask in 1u64..(1 << k) - 1 {
            let (antecedent, consequent): (Vec<_>, Vec<_>) =
                (0..k).partition(|&b| mask >> b & 1 == 1);
            if shape != RuleShape::All && consequent.len() != 1 {
                continue;
            }
            let antecedent: Vec<ItemId> = antecedent.into_iter().map(|b| f.items[b]).collect();
            let consequent: Vec<ItemId> = consequent.into_iter().map(|b| f.items[b]).collect();
            let base = *supports.get(antecedent.as_slice()).ok_or_else(|| {
                Error::Consistency(format!("subset {antecedent:?} of {:?} has no support", f.items))
            })?;
            if base == 0 {
                return Err(Error::Consistency(format!("subset {antecedent:?} has zero support")));
            }
            let confidence = Rational::new(f.support_count as i64, base as i64);
            if confidence >= min_confidence {
                rules.push(AssociationRule {
                    antecedent,
                    consequent,
                    support_count: f.support_count,
                    confidence,
                });
            }
        }
    }
    rules.sort_by(AssociationRule::firing_order);
    Ok(rules)
}
