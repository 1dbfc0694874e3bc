use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, NspInstance, ShiftPattern, WcspInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintId {
    /// Coverage `q_sk <= nurses on (s, k) <= p_sk`.
    Const1,
    /// Shifts per schedule within `[min_shifts_i, h_i]`.
    Const2,
    /// At most `y` night -> next-morning pairs.
    Const3,
    /// At most `b_i` night shifts.
    Const4,
    /// Optional cap on shifts worked in one day.
    DailyShifts,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    Coverage {
        day: usize,
        shift: usize,
        covered: u32,
        min: u32,
        max: u32,
    },
    TotalShifts {
        nurse: usize,
        count: u32,
        min: u32,
        max: u32,
    },
    NightMorning {
        nurse: usize,
        /// One-based day whose night precedes the first offending morning.
        first_day: usize,
        pairs: u32,
        limit: u32,
    },
    Nights {
        nurse: usize,
        count: u32,
        limit: u32,
    },
    DailyShifts {
        nurse: usize,
        day: usize,
        count: u32,
        limit: u32,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintVerdict {
    pub constraint: ConstraintId,
    pub satisfied: bool,
    pub witness: Option<Witness>,
}

impl ConstraintVerdict {
    fn from_witness(constraint: ConstraintId, witness: Option<Witness>) -> Self {
        ConstraintVerdict {
            constraint,
            satisfied: witness.is_none(),
            witness,
        }
    }
}

/// Unary verdicts for `pattern` as nurse `nurse`'s value: const2, const3,
/// const4, plus the daily cap when the instance sets one.
pub fn check_unary(pattern: &ShiftPattern, nurse: usize, inst: &NspInstance) -> Vec<ConstraintVerdict> {
    let count = pattern.shift_count();
    let (min, max) = (inst.min_shifts[nurse], inst.max_shifts[nurse]);
    let total = (count < min || count > max).then_some(Witness::TotalShifts {
        nurse,
        count,
        min,
        max,
    });
    let pairs = pattern.night_morning_pairs();
    let limit = inst.max_night_morning;
    let night_morning = (pairs > limit).then(|| Witness::NightMorning {
        nurse,
        first_day: pattern.night_morning_days().nth(limit as usize).unwrap_or(0),
        pairs,
        limit,
    });
    let nights = pattern.night_count();
    let night_limit = inst.max_nights[nurse];
    let night_w = (nights > night_limit).then_some(Witness::Nights {
        nurse,
        count: nights,
        limit: night_limit,
    });
    let mut out = vec![
        ConstraintVerdict::from_witness(ConstraintId::Const2, total),
        ConstraintVerdict::from_witness(ConstraintId::Const3, night_morning),
        ConstraintVerdict::from_witness(ConstraintId::Const4, night_w),
    ];
    if let Some(cap) = inst.max_shifts_per_day {
        let w = (0..inst.horizon.days).find_map(|d| {
            let c = pattern.shifts_on_day(d);
            (c > cap).then_some(Witness::DailyShifts {
                nurse,
                day: d + 1,
                count: c,
                limit: cap,
            })
        });
        out.push(ConstraintVerdict::from_witness(ConstraintId::DailyShifts, w));
    }
    out
}

/// Fast boolean form of [`check_unary`].
#[inline]
pub fn unary_ok(pattern: &ShiftPattern, nurse: usize, inst: &NspInstance) -> bool {
    let count = pattern.shift_count();
    count >= inst.min_shifts[nurse]
        && count <= inst.max_shifts[nurse]
        && pattern.night_count() <= inst.max_nights[nurse]
        && pattern.night_morning_pairs() <= inst.max_night_morning
        && inst
            .max_shifts_per_day
            .is_none_or(|cap| (0..inst.horizon.days).all(|d| pattern.shifts_on_day(d) <= cap))
}

/// Per-slot nurse counts of a list of patterns.
pub fn coverage(patterns: &[ShiftPattern], slots: usize) -> Vec<u32> {
    let mut cov = vec![0u32; slots];
    for p in patterns {
        let mut bits = p.bits();
        while bits != 0 {
            cov[bits.trailing_zeros() as usize] += 1;
            bits &= bits - 1;
        }
    }
    cov
}

pub fn check_coverage(patterns: &[ShiftPattern], inst: &NspInstance) -> ConstraintVerdict {
    let cov = coverage(patterns, inst.horizon.slots());
    let witness = cov.iter().enumerate().find_map(|(z, &c)| {
        let (min, max) = (inst.min_cover_at(z), inst.max_cover_at(z));
        (c < min || c > max).then(|| {
            let (day, shift) = inst.horizon.day_shift(z);
            Witness::Coverage {
                day,
                shift,
                covered: c,
                min,
                max,
            }
        })
    });
    ConstraintVerdict::from_witness(ConstraintId::Const1, witness)
}

/// const1 over a complete assignment.
pub fn check_global(assignment: &Assignment, wcsp: &WcspInstance) -> Result<ConstraintVerdict> {
    let values = assignment.to_complete()?;
    if values.len() != wcsp.nurses() {
        return Err(Error::Shape(format!(
            "assignment covers {} nurses, instance has {}",
            values.len(),
            wcsp.nurses()
        )));
    }
    if let Some(&j) = values.iter().find(|&&j| j >= wcsp.domain.len()) {
        return Err(Error::Range {
            what: "domain value",
            value: j,
            max: wcsp.domain.len().saturating_sub(1),
        });
    }
    let patterns: Vec<ShiftPattern> = values.iter().map(|&j| wcsp.domain[j]).collect();
    Ok(check_coverage(&patterns, &wcsp.instance))
}

/// Every hard constraint holds for a complete assignment.
pub fn is_feasible(assignment: &Assignment, wcsp: &WcspInstance) -> Result<bool> {
    if !check_global(assignment, wcsp)?.satisfied {
        return Ok(false);
    }
    let values = assignment.to_complete()?;
    Ok(values
        .iter()
        .enumerate()
        .all(|(i, &j)| unary_ok(&wcsp.domain[j], i, &wcsp.instance)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Horizon;
    use crate::rational::Rational;
    use proptest::prelude::*;

    fn example_4() -> WcspInstance {
        crate::solver::test_support::example_4(2)
    }

    #[test]
    fn example_4_unary() {
        let w = example_4();
        let v = check_unary(&w.domain[1], 0, &w.instance);
        assert!(!v[0].satisfied);
        assert!(matches!(v[0].witness, Some(Witness::TotalShifts { count: 1, min: 2, .. })));
        assert!(check_unary(&w.domain[0], 0, &w.instance).iter().all(|v| v.satisfied));
        assert!(!unary_ok(&w.domain[1], 1, &w.instance));
    }

    #[test]
    fn zero_pattern_is_unary_clean() {
        let h = Horizon::new(7, 3).unwrap();
        let inst = NspInstance::uniform(h, vec![vec![Rational::from_integer(0)]], 0, 1, 0, 0, 0).unwrap();
        let verdicts = check_unary(&ShiftPattern::empty(h), 0, &inst);
        assert!(verdicts.iter().all(|v| v.satisfied && v.witness.is_none()));
    }

    #[test]
    fn four_nights_break_night_limit() {
        let h = Horizon::new(7, 3).unwrap();
        let inst = NspInstance::uniform(h, vec![vec![Rational::from_integer(0)]], 0, 1, 21, 7, 3).unwrap();
        let slots: Vec<bool> = (0..21).map(|z| z % 3 == 2 && z / 3 < 4).collect();
        let p = ShiftPattern::from_slots(&slots, h).unwrap();
        let v = check_unary(&p, 0, &inst);
        assert_eq!(v[2].constraint, ConstraintId::Const4);
        assert_eq!(v[2].witness, Some(Witness::Nights { nurse: 0, count: 4, limit: 3 }));
    }

    #[test]
    fn night_morning_pairs_and_daily_cap() {
        let h = Horizon::new(3, 3).unwrap();
        let p = ShiftPattern::parse("001100111", h).unwrap();
        let mut inst = NspInstance::uniform(h, vec![vec![Rational::from_integer(0)]], 0, 1, 9, 0, 9).unwrap();
        inst.max_shifts_per_day = Some(2);
        let v = check_unary(&p, 0, &inst);
        assert_eq!(
            v[1].witness,
            Some(Witness::NightMorning { nurse: 0, first_day: 1, pairs: 1, limit: 0 })
        );
        assert_eq!(v[3].witness, Some(Witness::DailyShifts { nurse: 0, day: 3, count: 3, limit: 2 }));
    }

    #[test]
    fn example_4_global() {
        let w = example_4();
        let ok = check_global(&Assignment::complete(vec![0, 2]), &w).unwrap();
        assert!(ok.satisfied);
        let bad = check_global(&Assignment::complete(vec![1, 1]), &w).unwrap();
        assert!(matches!(bad.witness, Some(Witness::Coverage { day: 1, shift: 1, covered: 0, .. })));
        let partial = Assignment { values: vec![Some(0), None] };
        assert!(matches!(check_global(&partial, &w), Err(Error::IncompleteAssignment { .. })));
    }

    proptest! {
        #[test]
        fn global_matches_column_sums(bits in prop::collection::vec(0u64..256, 3), q in 0u32..3, extra in 0u32..3) {
            let h = Horizon::new(2, 4).unwrap();
            let domain: Vec<ShiftPattern> = bits.iter().map(|&b| ShiftPattern::from_bits(b, h).unwrap()).collect();
            let costs = vec![vec![Rational::from_integer(1); 3]; 3];
            let inst = NspInstance::uniform(h, costs, q, q + extra, 8, 4, 4).unwrap();
            let w = WcspInstance::new(inst, domain.clone()).unwrap();
            let verdict = check_global(&Assignment::complete(vec![0, 1, 2]), &w).unwrap();
            let oracle = (0..8).all(|z| {
                let c = domain.iter().filter(|p| p.bits() >> z & 1 == 1).count() as u32;
                q <= c && c <= q + extra
            });
            prop_assert_eq!(verdict.satisfied, oracle);
            prop_assert_eq!(verdict.witness.is_some(), !oracle);
        }
    }
}
