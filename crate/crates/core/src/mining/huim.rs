//! Two-Phase high-utility itemset mining.
//!
//! Phase I runs Apriori-style level-wise search with transaction-weighted
//! utilization (TWU) in place of support; TWU is anti-monotone, so pruning on
//! it never loses a high-utility itemset. Phase II rescans the database for
//! the exact utility of every Phase I candidate.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{ItemId, QuantityDb, QuantityRow, UtilityTable};
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UtilityItemset {
    pub items: Vec<ItemId>,
    #[serde(with = "crate::rational::serde_text")]
    pub twu: Rational,
    #[serde(with = "crate::rational::serde_text")]
    pub utility: Rational,
    /// Transactions containing every item.
    pub occurrences: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoPhaseResult {
    pub phase1: Vec<UtilityItemset>,
    pub phase2: Vec<UtilityItemset>,
}

fn unit_utility(utilities: &UtilityTable, item: ItemId, row: &QuantityRow) -> Result<Rational> {
    utilities.get(item).ok_or_else(|| {
        Error::Consistency(format!("item {item} in {} has no utility", row.label))
    })
}

/// `Σ quantity · unit utility` over one transaction.
pub fn transaction_utility(row: &QuantityRow, utilities: &UtilityTable) -> Result<Rational> {
    row.quantities.iter().try_fold(Rational::zero(), |acc, (&item, &q)| {
        Ok(acc + unit_utility(utilities, item, row)? * Rational::from_integer(q as i64))
    })
}

fn contains_all(row: &QuantityRow, items: &[ItemId]) -> bool {
    items.iter().all(|&i| row.quantity(i) > 0)
}

/// Sum of the transaction utilities of the transactions containing `items`.
pub fn twu(db: &QuantityDb, utilities: &UtilityTable, items: &[ItemId]) -> Result<Rational> {
    if items.is_empty() {
        return Err(Error::Domain("TWU of the empty itemset".into()));
    }
    db.rows
        .iter()
        .filter(|r| contains_all(r, items))
        .try_fold(Rational::zero(), |acc, r| Ok(acc + transaction_utility(r, utilities)?))
}

/// Exact utility: per containing transaction, the items' own contributions.
pub fn itemset_utility(db: &QuantityDb, utilities: &UtilityTable, items: &[ItemId]) -> Result<Rational> {
    let mut total = Rational::zero();
    for row in db.rows.iter().filter(|r| contains_all(r, items)) {
        for &i in items {
            total += unit_utility(utilities, i, row)? * Rational::from_integer(row.quantity(i) as i64);
        }
    }
    Ok(total)
}

fn measure(db: &QuantityDb, utilities: &UtilityTable, items: Vec<ItemId>) -> Result<UtilityItemset> {
    Ok(UtilityItemset {
        twu: twu(db, utilities, &items)?,
        utility: itemset_utility(db, utilities, &items)?,
        occurrences: db.rows.iter().filter(|r| contains_all(r, &items)).count() as u64,
        items,
    })
}

pub fn two_phase(db: &QuantityDb, utilities: &UtilityTable, min_utility: Rational) -> Result<TwoPhaseResult> {
    if min_utility <= Rational::zero() {
        return Err(Error::Domain("minimum utility must be positive".into()));
    }
    let present: BTreeSet<ItemId> = db.rows.iter().flat_map(|r| r.quantities.keys().copied()).collect();
    let mut level = Vec::new();
    for item in present {
        let m = measure(db, utilities, vec![item])?;
        if m.twu >= min_utility {
            level.push(m);
        }
    }
    let mut phase1: Vec<UtilityItemset> = Vec::new();
    while !level.is_empty() {
        let known: BTreeSet<&[ItemId]> = level.iter().map(|u| u.items.as_slice()).collect();
        let mut next = Vec::new();
        for (a, ua) in level.iter().enumerate() {
            for ub in &level[a + 1..] {
                let k = ua.items.len();
                if ua.items[..k - 1] != ub.items[..k - 1] {
                    break;
                }
                let mut cand = ua.items.clone();
                cand.push(ub.items[k - 1]);
                let closed = (0..cand.len()).all(|drop| {
                    let mut sub = cand.clone();
                    sub.remove(drop);
                    known.contains(sub.as_slice())
                });
                if !closed {
                    continue;
                }
                let m = measure(db, utilities, cand)?;
                if m.twu >= min_utility {
                    next.push(m);
                }
            }
        }
        phase1.append(&mut level);
        next.sort_by(|a, b| a.items.cmp(&b.items));
        level = next;
    }
    let phase2 = phase1.iter().filter(|u| u.utility >= min_utility).cloned().collect();
    Ok(TwoPhaseResult { phase1, phase2 })
}
