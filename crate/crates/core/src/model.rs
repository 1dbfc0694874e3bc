//! Core domain types: planning horizon, shift patterns, schedules, NSP
//! parameters and the weighted CSP built on top of them.
//!
//! Slots are laid out day-major: slot `z = (day - 1) * shifts_per_day +
//! (shift - 1)`, so a 7-day, 4-shift week is 28 slots with day 1's shifts
//! first. The same layout is used by the pattern text encoding and by the
//! columns of a [`Schedule`].

use std::fmt;

use ndarray::Array2;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{is_non_negative, Rational};

/// Patterns are stored in a `u64`, one bit per slot.
pub const MAX_SLOTS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Horizon {
    pub days: usize,
    pub shifts_per_day: usize,
}

impl Horizon {
    pub fn new(days: usize, shifts_per_day: usize) -> Result<Self> {
        if days == 0 || shifts_per_day == 0 {
            return Err(Error::Shape(format!(
                "horizon needs at least one day and one shift (got {days}x{shifts_per_day})"
            )));
        }
        if days * shifts_per_day > MAX_SLOTS {
            return Err(Error::Shape(format!(
                "{days} days x {shifts_per_day} shifts exceeds {MAX_SLOTS} slots"
            )));
        }
        Ok(Horizon {
            days,
            shifts_per_day,
        })
    }

    pub fn slots(&self) -> usize {
        self.days * self.shifts_per_day
    }

    /// Zero-based slot of a one-based `(day, shift)` pair.
    pub fn slot(&self, day: usize, shift: usize) -> Result<usize> {
        if day == 0 || day > self.days {
            return Err(Error::Range {
                what: "day",
                value: day,
                max: self.days,
            });
        }
        if shift == 0 || shift > self.shifts_per_day {
            return Err(Error::Range {
                what: "shift",
                value: shift,
                max: self.shifts_per_day,
            });
        }
        Ok((day - 1) * self.shifts_per_day + (shift - 1))
    }

    /// One-based `(day, shift)` of a zero-based slot.
    pub fn day_shift(&self, slot: usize) -> (usize, usize) {
        (slot / self.shifts_per_day + 1, slot % self.shifts_per_day + 1)
    }

    pub fn slot_label(&self, slot: usize) -> String {
        let (day, shift) = self.day_shift(slot);
        format!("Day{day}Shift{shift}")
    }

    fn full_mask(&self) -> u64 {
        if self.slots() == 64 {
            u64::MAX
        } else {
            (1u64 << self.slots()) - 1
        }
    }

    /// Bits of the first ("morning") shift of every day.
    pub fn morning_mask(&self) -> u64 {
        (0..self.days).fold(0, |m, d| m | 1u64 << (d * self.shifts_per_day))
    }

    /// Bits of the last ("night") shift of every day.
    pub fn night_mask(&self) -> u64 {
        (0..self.days).fold(0, |m, d| {
            m | 1u64 << (d * self.shifts_per_day + self.shifts_per_day - 1)
        })
    }

    fn day_mask(&self, day_index: usize) -> u64 {
        let width = if self.shifts_per_day == 64 {
            u64::MAX
        } else {
            (1u64 << self.shifts_per_day) - 1
        };
        width << (day_index * self.shifts_per_day)
    }
}

/// One nurse's assignment over the whole horizon; a WCSP domain value.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ShiftPattern {
    bits: u64,
    horizon: Horizon,
}

impl ShiftPattern {
    pub fn from_bits(bits: u64, horizon: Horizon) -> Result<Self> {
        if bits & !horizon.full_mask() != 0 {
            return Err(Error::Shape(format!(
                "pattern bits {bits:#x} exceed {} slots",
                horizon.slots()
            )));
        }
        Ok(ShiftPattern { bits, horizon })
    }

    pub fn empty(horizon: Horizon) -> Self {
        ShiftPattern { bits: 0, horizon }
    }

    /// Builds a pattern from per-slot flags in day-major order.
    pub fn from_slots(slots: &[bool], horizon: Horizon) -> Result<Self> {
        if slots.len() != horizon.slots() {
            return Err(Error::Shape(format!(
                "pattern has {} slots, horizon needs {}",
                slots.len(),
                horizon.slots()
            )));
        }
        let bits = slots
            .iter()
            .enumerate()
            .fold(0u64, |acc, (z, &on)| if on { acc | 1 << z } else { acc });
        Ok(ShiftPattern { bits, horizon })
    }

    /// Decodes the canonical `'0'/'1'` text form.
    pub fn parse(text: &str, horizon: Horizon) -> Result<Self> {
        let text = text.trim();
        if text.len() != horizon.slots() {
            return Err(Error::Shape(format!(
                "pattern {text:?} has length {}, expected {}",
                text.len(),
                horizon.slots()
            )));
        }
        let mut bits = 0u64;
        for (z, c) in text.chars().enumerate() {
            match c {
                '1' => bits |= 1 << z,
                '0' => {}
                other => {
                    return Err(Error::Domain(format!(
                        "pattern character {other:?} is not 0 or 1"
                    )))
                }
            }
        }
        Ok(ShiftPattern { bits, horizon })
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    /// `A(i, j, k, s)`: whether this pattern covers `shift` on `day` (both one-based).
    pub fn assigned(&self, day: usize, shift: usize) -> Result<bool> {
        let z = self.horizon.slot(day, shift)?;
        Ok(self.covers_slot(z))
    }

    #[inline]
    pub fn covers_slot(&self, slot: usize) -> bool {
        self.bits >> slot & 1 == 1
    }

    pub fn shift_count(&self) -> u32 {
        self.bits.count_ones()
    }

    pub fn night_count(&self) -> u32 {
        (self.bits & self.horizon.night_mask()).count_ones()
    }

    /// Number of days `k` with a night shift on `k` and a morning shift on `k + 1`.
    pub fn night_morning_pairs(&self) -> u32 {
        self.night_morning_days().count() as u32
    }

    /// One-based days `k` whose night is followed by a morning on `k + 1`.
    pub fn night_morning_days(&self) -> impl Iterator<Item = usize> + '_ {
        let s = self.horizon.shifts_per_day;
        (0..self.horizon.days.saturating_sub(1)).filter_map(move |d| {
            let night = d * s + s - 1;
            let morning = (d + 1) * s;
            (self.covers_slot(night) && self.covers_slot(morning)).then_some(d + 1)
        })
    }

    /// Shifts worked on the zero-based day `day_index`.
    pub fn shifts_on_day(&self, day_index: usize) -> u32 {
        (self.bits & self.horizon.day_mask(day_index)).count_ones()
    }

    /// Sum of the per-shift-of-day cost over every worked slot.
    pub fn cost(&self, per_shift_costs: &[Rational]) -> Result<Rational> {
        pattern_cost(self, per_shift_costs)
    }
}

impl fmt::Display for ShiftPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text: String = (0..self.horizon.slots())
            .map(|z| if self.covers_slot(z) { '1' } else { '0' })
            .collect();
        f.write_str(&text)
    }
}

impl fmt::Debug for ShiftPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShiftPattern({self})")
    }
}

/// Weight of a pattern given the cost of each shift-of-day.
pub fn pattern_cost(pattern: &ShiftPattern, per_shift_costs: &[Rational]) -> Result<Rational> {
    let s = pattern.horizon.shifts_per_day;
    if per_shift_costs.len() != s {
        return Err(Error::Shape(format!(
            "{} per-shift costs for {s} shifts per day",
            per_shift_costs.len()
        )));
    }
    Ok((0..pattern.horizon.slots())
        .filter(|&z| pattern.covers_slot(z))
        .map(|z| per_shift_costs[z % s])
        .sum())
}

/// Binary nurse x slot matrix.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct Schedule {
    entries: Array2<u8>,
    horizon: Horizon,
}

/// Serialized form: one pattern string per nurse.
#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    days: usize,
    shifts_per_day: usize,
    rows: Vec<String>,
}

impl From<Schedule> for ScheduleRepr {
    fn from(s: Schedule) -> Self {
        ScheduleRepr {
            days: s.horizon.days,
            shifts_per_day: s.horizon.shifts_per_day,
            rows: s.patterns().iter().map(ToString::to_string).collect(),
        }
    }
}

impl TryFrom<ScheduleRepr> for Schedule {
    type Error = Error;

    fn try_from(r: ScheduleRepr) -> Result<Self> {
        let horizon = Horizon::new(r.days, r.shifts_per_day)?;
        let patterns = r
            .rows
            .iter()
            .map(|row| ShiftPattern::parse(row, horizon))
            .collect::<Result<Vec<_>>>()?;
        if patterns.is_empty() {
            return Ok(Schedule::zeros(0, horizon));
        }
        Schedule::from_patterns(&patterns)
    }
}

impl Schedule {
    pub fn new(entries: Array2<u8>, horizon: Horizon) -> Result<Self> {
        if entries.ncols() != horizon.slots() {
            return Err(Error::Shape(format!(
                "schedule has {} columns, horizon needs {}",
                entries.ncols(),
                horizon.slots()
            )));
        }
        if let Some(bad) = entries.iter().find(|&&v| v > 1) {
            return Err(Error::Domain(format!("schedule entry {bad} is not 0/1")));
        }
        Ok(Schedule { entries, horizon })
    }

    pub fn zeros(nurses: usize, horizon: Horizon) -> Self {
        Schedule {
            entries: Array2::zeros((nurses, horizon.slots())),
            horizon,
        }
    }

    pub fn from_patterns(patterns: &[ShiftPattern]) -> Result<Self> {
        let horizon = patterns
            .first()
            .map(|p| p.horizon)
            .ok_or_else(|| Error::Shape("no patterns".into()))?;
        if patterns.iter().any(|p| p.horizon != horizon) {
            return Err(Error::Shape("patterns disagree on horizon".into()));
        }
        let entries = Array2::from_shape_fn((patterns.len(), horizon.slots()), |(i, z)| {
            patterns[i].covers_slot(z) as u8
        });
        Ok(Schedule { entries, horizon })
    }

    pub fn entries(&self) -> &Array2<u8> {
        &self.entries
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn nurses(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, nurse: usize, slot: usize) -> bool {
        self.entries[[nurse, slot]] == 1
    }

    pub fn set(&mut self, nurse: usize, slot: usize, on: bool) {
        self.entries[[nurse, slot]] = on as u8;
    }

    pub fn column_sum(&self, slot: usize) -> u32 {
        self.entries.column(slot).iter().map(|&v| v as u32).sum()
    }

    pub fn total_assignments(&self) -> u64 {
        self.entries.iter().map(|&v| v as u64).sum()
    }

    /// Row `nurse` as a shift pattern.
    pub fn pattern(&self, nurse: usize) -> ShiftPattern {
        let bits = self
            .entries
            .row(nurse)
            .iter()
            .enumerate()
            .fold(0u64, |acc, (z, &v)| if v == 1 { acc | 1 << z } else { acc });
        ShiftPattern {
            bits,
            horizon: self.horizon,
        }
    }

    pub fn patterns(&self) -> Vec<ShiftPattern> {
        (0..self.nurses()).map(|i| self.pattern(i)).collect()
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.entries.mapv(f64::from)
    }
}

/// Parameters of a nurse scheduling instance.
///
/// Coverage bounds are indexed `[shift][day]`, zero-based, mirroring the
/// `q_sk` / `p_sk` layout. `min_shifts` and `max_shifts_per_day` extend the
/// classic four constraints with the lower workload bound used by small
/// worked examples and the per-day cap produced by constraint learning; both
/// default to "no restriction".
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NspInstance {
    pub horizon: Horizon,
    /// `c_ij`: one row per nurse, one column per domain pattern.
    pub cost: Vec<Vec<Rational>>,
    /// `q_sk`
    pub min_cover: Vec<Vec<u32>>,
    /// `p_sk`
    pub max_cover: Vec<Vec<u32>>,
    /// `h_i`
    pub max_shifts: Vec<u32>,
    pub min_shifts: Vec<u32>,
    /// `y`: night -> next-morning pairs allowed per nurse.
    pub max_night_morning: u32,
    /// `b_i`
    pub max_nights: Vec<u32>,
    pub max_shifts_per_day: Option<u32>,
}

impl NspInstance {
    /// Instance with uniform coverage and per-nurse limits.
    pub fn uniform(
        horizon: Horizon,
        cost: Vec<Vec<Rational>>,
        min_cover: u32,
        max_cover: u32,
        max_shifts: u32,
        max_night_morning: u32,
        max_nights: u32,
    ) -> Result<Self> {
        let n = cost.len();
        let s = horizon.shifts_per_day;
        let k = horizon.days;
        let inst = NspInstance {
            horizon,
            cost,
            min_cover: vec![vec![min_cover; k]; s],
            max_cover: vec![vec![max_cover; k]; s],
            max_shifts: vec![max_shifts; n],
            min_shifts: vec![0; n],
            max_night_morning,
            max_nights: vec![max_nights; n],
            max_shifts_per_day: None,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn nurses(&self) -> usize {
        self.cost.len()
    }

    /// Number of candidate patterns `m`.
    pub fn patterns(&self) -> usize {
        self.cost.first().map_or(0, Vec::len)
    }

    pub fn min_cover_at(&self, slot: usize) -> u32 {
        let (day, shift) = self.horizon.day_shift(slot);
        self.min_cover[shift - 1][day - 1]
    }

    pub fn max_cover_at(&self, slot: usize) -> u32 {
        let (day, shift) = self.horizon.day_shift(slot);
        self.max_cover[shift - 1][day - 1]
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nurses();
        if n == 0 {
            return Err(Error::Shape("instance has no nurses".into()));
        }
        let m = self.patterns();
        if m == 0 {
            return Err(Error::Shape("instance has no candidate patterns".into()));
        }
        if let Some(i) = self.cost.iter().position(|row| row.len() != m) {
            return Err(Error::Shape(format!(
                "cost row {} has {} entries, expected {m}",
                i + 1,
                self.cost[i].len()
            )));
        }
        if self.cost.iter().flatten().any(|c| !is_non_negative(c)) {
            return Err(Error::Domain("negative cost".into()));
        }
        let (s, k) = (self.horizon.shifts_per_day, self.horizon.days);
        for (name, grid) in [("q", &self.min_cover), ("p", &self.max_cover)] {
            if grid.len() != s || grid.iter().any(|r| r.len() != k) {
                return Err(Error::Shape(format!("{name} must be {s} x {k}")));
            }
        }
        for sh in 0..s {
            for d in 0..k {
                let (q, p) = (self.min_cover[sh][d], self.max_cover[sh][d]);
                if q > p {
                    return Err(Error::Consistency(format!(
                        "q > p for shift {} day {} ({q} > {p})",
                        sh + 1,
                        d + 1
                    )));
                }
            }
        }
        for (name, v) in [
            ("h", &self.max_shifts),
            ("min shifts", &self.min_shifts),
            ("b", &self.max_nights),
        ] {
            if v.len() != n {
                return Err(Error::Shape(format!(
                    "{name} has {} entries for {n} nurses",
                    v.len()
                )));
            }
        }
        Ok(())
    }

    /// Default `K`: one more than the most expensive possible assignment.
    pub fn default_cost_cap(&self) -> Rational {
        let worst: Rational = self
            .cost
            .iter()
            .map(|row| row.iter().copied().max().unwrap_or_else(Rational::zero))
            .sum();
        worst + Rational::from_integer(1)
    }
}

/// Weighted CSP `(X, D, C, K)` over an [`NspInstance`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WcspInstance {
    pub instance: NspInstance,
    /// Shared domain `D`; a value's index is its column in the cost matrix.
    pub domain: Vec<ShiftPattern>,
    /// Admissible domain indices per nurse.
    pub domains: Vec<Vec<usize>>,
    pub cost_cap: Rational,
}

impl WcspInstance {
    pub fn new(instance: NspInstance, domain: Vec<ShiftPattern>) -> Result<Self> {
        instance.validate()?;
        if domain.len() != instance.patterns() {
            return Err(Error::Shape(format!(
                "{} domain patterns for {} cost columns",
                domain.len(),
                instance.patterns()
            )));
        }
        if let Some(p) = domain.iter().find(|p| p.horizon() != instance.horizon) {
            return Err(Error::Shape(format!(
                "pattern {p} does not match the {}x{} horizon",
                instance.horizon.days, instance.horizon.shifts_per_day
            )));
        }
        let m = domain.len();
        let domains = vec![(0..m).collect(); instance.nurses()];
        let cost_cap = instance.default_cost_cap();
        Ok(WcspInstance {
            instance,
            domain,
            domains,
            cost_cap,
        })
    }

    pub fn nurses(&self) -> usize {
        self.instance.nurses()
    }

    pub fn cost(&self, nurse: usize, value: usize) -> Rational {
        self.instance.cost[nurse][value]
    }

    /// True once some nurse has no admissible value left.
    pub fn is_inconsistent(&self) -> bool {
        self.domains.iter().any(Vec::is_empty)
    }

    pub fn domain_sizes(&self) -> Vec<usize> {
        self.domains.iter().map(Vec::len).collect()
    }

    pub fn patterns_of(&self, assignment: &Assignment) -> Option<Vec<ShiftPattern>> {
        assignment
            .values
            .iter()
            .map(|v| v.map(|j| self.domain[j]))
            .collect()
    }
}

/// Domain index per nurse; `None` while unassigned.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Assignment {
    pub values: Vec<Option<usize>>,
}

impl Assignment {
    pub fn empty(nurses: usize) -> Self {
        Assignment {
            values: vec![None; nurses],
        }
    }

    pub fn complete(values: Vec<usize>) -> Self {
        Assignment {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    pub fn assigned_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Values of a complete assignment.
    pub fn to_complete(&self) -> Result<Vec<usize>> {
        self.values
            .iter()
            .copied()
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::IncompleteAssignment {
                assigned: self.assigned_count(),
                expected: self.values.len(),
            })
    }

    /// Every assigned value lies inside its nurse's current domain.
    pub fn respects(&self, wcsp: &WcspInstance) -> bool {
        self.values.len() == wcsp.nurses()
            && self
                .values
                .iter()
                .zip(&wcsp.domains)
                .all(|(v, dom)| v.is_none_or(|j| dom.contains(&j)))
    }
}

/// `sum_i c[i][j_i]` of a complete assignment.
pub fn solution_cost(assignment: &Assignment, instance: &NspInstance) -> Result<Rational> {
    let values = assignment.to_complete()?;
    if values.len() != instance.nurses() {
        return Err(Error::Shape(format!(
            "assignment covers {} nurses, instance has {}",
            values.len(),
            instance.nurses()
        )));
    }
    values
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            instance.cost[i].get(j).copied().ok_or_else(|| Error::Range {
                what: "domain value",
                value: j,
                max: instance.patterns().saturating_sub(1),
            })
        })
        .sum()
}
