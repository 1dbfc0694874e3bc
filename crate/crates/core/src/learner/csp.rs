//! Passive constraint learning from historical schedules.
//!
//! Each schedule contributes its own statistics and the corpus bounds are
//! folded with running min / max / AND, so the result does not depend on
//! the order of the schedules.

use std::time::{Duration, Instant};

use num_traits::Zero;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{pattern_cost, Horizon, NspInstance, Schedule, ShiftPattern, WcspInstance};
use crate::rational::Rational;
use crate::solver::{check_coverage, check_unary, ConstraintVerdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnedConstraints {
    pub n: usize,
    pub days: usize,
    pub shifts_per_day: usize,
    /// `s * k`; the full domain has `2^domain_exponent` patterns.
    pub domain_exponent: u32,
    /// Smallest number of nurses seen on any slot.
    #[serde(rename = "c2")]
    pub c2_min_coverage: u32,
    /// Most shifts any nurse worked in one day.
    #[serde(rename = "c3")]
    pub c3_max_shifts_per_day: u32,
    /// No nurse ever worked a night followed by the next morning.
    #[serde(rename = "c4")]
    pub c4_no_night_morning: bool,
    /// Most shifts any nurse worked over a whole schedule.
    #[serde(rename = "c5")]
    pub c5_max_shifts_per_week: u32,
    pub max_coverage: u32,
    /// Fewest shifts on a worked day; absent when nobody ever worked.
    pub min_shifts_per_day: Option<u32>,
    pub min_shifts_per_week: u32,
    pub schedules: usize,
}

impl LearnedConstraints {
    pub fn horizon(&self) -> Horizon {
        Horizon {
            days: self.days,
            shifts_per_day: self.shifts_per_day,
        }
    }

    /// Statistics of one schedule.
    pub fn from_schedule(schedule: &Schedule) -> Self {
        let h = schedule.horizon();
        let patterns = schedule.patterns();
        let coverage: Vec<u32> = (0..h.slots()).map(|z| schedule.column_sum(z)).collect();
        let per_day = patterns
            .iter()
            .flat_map(|p| (0..h.days).map(move |d| p.shifts_on_day(d)));
        let totals = patterns.iter().map(ShiftPattern::shift_count);
        LearnedConstraints {
            n: schedule.nurses(),
            days: h.days,
            shifts_per_day: h.shifts_per_day,
            domain_exponent: h.slots() as u32,
            c2_min_coverage: coverage.iter().copied().min().unwrap_or(0),
            c3_max_shifts_per_day: per_day.clone().max().unwrap_or(0),
            c4_no_night_morning: patterns.iter().all(|p| p.night_morning_pairs() == 0),
            c5_max_shifts_per_week: totals.clone().max().unwrap_or(0),
            max_coverage: coverage.iter().copied().max().unwrap_or(0),
            min_shifts_per_day: per_day.filter(|&c| c > 0).min(),
            min_shifts_per_week: totals.min().unwrap_or(0),
            schedules: 1,
        }
    }

    fn same_shape(&self, other: &Self) -> bool {
        (self.n, self.days, self.shifts_per_day) == (other.n, other.days, other.shifts_per_day)
    }

    /// Folds another corpus' bounds into this one.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if !self.same_shape(other) {
            return Err(Error::Learning(format!(
                "schedule shape {}x{}x{} differs from {}x{}x{}",
                other.n, other.days, other.shifts_per_day, self.n, self.days, self.shifts_per_day
            )));
        }
        self.c2_min_coverage = self.c2_min_coverage.min(other.c2_min_coverage);
        self.c3_max_shifts_per_day = self.c3_max_shifts_per_day.max(other.c3_max_shifts_per_day);
        self.c4_no_night_morning &= other.c4_no_night_morning;
        self.c5_max_shifts_per_week = self.c5_max_shifts_per_week.max(other.c5_max_shifts_per_week);
        self.max_coverage = self.max_coverage.max(other.max_coverage);
        self.min_shifts_per_day = match (self.min_shifts_per_day, other.min_shifts_per_day) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.min_shifts_per_week = self.min_shifts_per_week.min(other.min_shifts_per_week);
        self.schedules += other.schedules;
        Ok(())
    }

    /// NSP parameters expressing the learned bounds, with the given costs.
    pub fn to_instance(&self, cost: Vec<Vec<Rational>>) -> Result<NspInstance> {
        let horizon = Horizon::new(self.days, self.shifts_per_day)?;
        let y = if self.c4_no_night_morning { 0 } else { self.days as u32 };
        let mut inst = NspInstance::uniform(
            horizon,
            cost,
            self.c2_min_coverage,
            self.max_coverage.max(self.c2_min_coverage),
            self.c5_max_shifts_per_week,
            y,
            self.days as u32,
        )?;
        inst.max_shifts_per_day = Some(self.c3_max_shifts_per_day);
        Ok(inst)
    }

    /// Violated constraints of `schedule` under the learned bounds.
    pub fn violations(&self, schedule: &Schedule) -> Result<Vec<ConstraintVerdict>> {
        if schedule.nurses() != self.n || schedule.horizon() != self.horizon() {
            return Err(Error::Learning("schedule shape differs from the learned model".into()));
        }
        let inst = self.to_instance(vec![vec![Rational::zero()]; self.n])?;
        let patterns = schedule.patterns();
        let mut out: Vec<ConstraintVerdict> = patterns
            .iter()
            .enumerate()
            .flat_map(|(i, p)| check_unary(p, i, &inst))
            .filter(|v| !v.satisfied)
            .collect();
        let global = check_coverage(&patterns, &inst);
        if !global.satisfied {
            out.push(global);
        }
        Ok(out)
    }
}

/// Bounds over a corpus: c2 by running min, c3 and c5 by running max, c4 by
/// running AND.
pub fn learn_csp(schedules: &[Schedule]) -> Result<LearnedConstraints> {
    let (first, rest) = schedules
        .split_first()
        .ok_or_else(|| Error::Learning("empty corpus".into()))?;
    let mut learned = LearnedConstraints::from_schedule(first);
    for s in rest {
        learned.merge(&LearnedConstraints::from_schedule(s))?;
    }
    Ok(learned)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomainOptions {
    /// Largest number of patterns to materialize.
    pub cap: u64,
    /// Enumerate only patterns that already pass the unary bounds.
    pub streaming: bool,
}

impl Default for DomainOptions {
    fn default() -> Self {
        DomainOptions {
            cap: 1 << 24,
            streaming: false,
        }
    }
}

/// Every `slots`-bit mask with exactly `k` bits set, ascending.
fn masks_with_popcount(slots: usize, k: usize) -> impl Iterator<Item = u64> {
    let limit: u128 = 1u128 << slots;
    let first: u128 = if k == 0 { 0 } else { (1u128 << k) - 1 };
    let mut next = Some(first).filter(|&m| m < limit);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let succ = (((r ^ cur) >> 2) / c) | r;
            Some(succ).filter(|&m| m < limit)
        };
        Some(cur as u64)
    })
}

/// WCSP over the learned bounds. `costs[i]` lists nurse `i`'s cost for each
/// shift of the day; a pattern's weight is the sum over its worked slots.
pub fn constraints_to_wcsp(
    learned: &LearnedConstraints,
    costs: &[Vec<Rational>],
    options: DomainOptions,
) -> Result<WcspInstance> {
    if costs.len() != learned.n {
        return Err(Error::Shape(format!(
            "{} cost rows for {} nurses",
            costs.len(),
            learned.n
        )));
    }
    let horizon = Horizon::new(learned.days, learned.shifts_per_day)?;
    let exponent = learned.domain_exponent;
    let full = 1u128 << exponent;
    let domain: Vec<ShiftPattern> = if !options.streaming {
        if full > options.cap as u128 {
            return Err(Error::Capacity {
                exponent,
                cap: options.cap,
            });
        }
        (0..full as u64)
            .map(|b| ShiftPattern::from_bits(b, horizon))
            .collect::<Result<_>>()?
    } else {
        let probe = learned.to_instance(vec![vec![Rational::zero()]])?;
        let mut kept = Vec::new();
        let max_k = (learned.c5_max_shifts_per_week as usize).min(exponent as usize);
        for k in 0..=max_k {
            for bits in masks_with_popcount(exponent as usize, k) {
                let p = ShiftPattern::from_bits(bits, horizon)?;
                if check_unary(&p, 0, &probe).iter().all(|v| v.satisfied) {
                    if kept.len() as u64 >= options.cap {
                        return Err(Error::Capacity {
                            exponent,
                            cap: options.cap,
                        });
                    }
                    kept.push(p);
                }
            }
        }
        kept
    };
    let cost = costs
        .iter()
        .map(|row| domain.iter().map(|p| pattern_cost(p, row)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    WcspInstance::new(learned.to_instance(cost)?, domain)
}

/// Parameters of the synthetic schedule generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorBounds {
    pub nurses: usize,
    pub days: usize,
    pub shifts_per_day: usize,
    pub min_cover: u32,
    pub max_cover: u32,
    /// Per-schedule shift limit `h`.
    pub max_shifts: u32,
    /// Per-schedule night limit `b`.
    pub max_nights: u32,
}

impl GeneratorBounds {
    /// Benchmark week: 7 days x 3 shifts, coverage 1..=4, h = 5, b = 3.
    pub fn table8(nurses: usize) -> Self {
        GeneratorBounds {
            nurses,
            days: 7,
            shifts_per_day: 3,
            min_cover: 1,
            max_cover: 4,
            max_shifts: 5,
            max_nights: 3,
        }
    }
}

/// Random schedules respecting the generator's upper bounds. Each slot asks
/// for a uniform coverage in `[min_cover, max_cover]` and is staffed from the
/// nurses still under their limits, so coverage may fall short late in the
/// horizon; the learned bounds must match whatever was actually produced.
pub fn synthetic_corpus(bounds: &GeneratorBounds, count: usize, seed: u64) -> Result<Vec<Schedule>> {
    let horizon = Horizon::new(bounds.days, bounds.shifts_per_day)?;
    if bounds.min_cover > bounds.max_cover {
        return Err(Error::Consistency("generator min_cover > max_cover".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = bounds.shifts_per_day;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut schedule = Schedule::zeros(bounds.nurses, horizon);
        let mut worked = vec![0u32; bounds.nurses];
        let mut nights = vec![0u32; bounds.nurses];
        for z in 0..horizon.slots() {
            let night = z % s == s - 1;
            let free: Vec<usize> = (0..bounds.nurses)
                .filter(|&i| worked[i] < bounds.max_shifts && (!night || nights[i] < bounds.max_nights))
                .collect();
            let want = rng.random_range(bounds.min_cover..=bounds.max_cover) as usize;
            let take = want.min(free.len());
            for k in sample(&mut rng, free.len(), take) {
                let i = free[k];
                schedule.set(i, z, true);
                worked[i] += 1;
                nights[i] += night as u32;
            }
        }
        out.push(schedule);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub size: usize,
    #[serde(with = "duration_secs")]
    pub duration: Duration,
}

mod duration_secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        Ok(Duration::from_secs_f64(f64::deserialize(d)?))
    }
}

/// Times `learn_csp` on synthetic corpora of each size. Each figure is the
/// median over several batches, divided by the batch's repetitions.
pub fn learning_benchmark(sizes: &[usize], generator_seed: u64) -> Result<Vec<BenchRow>> {
    const BATCHES: usize = 7;
    let bounds = GeneratorBounds {
        nurses: 25,
        days: 7,
        shifts_per_day: 4,
        min_cover: 1,
        max_cover: 6,
        max_shifts: 6,
        max_nights: 3,
    };
    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        if size == 0 {
            return Err(Error::Learning("corpus size must be at least 1".into()));
        }
        let corpus = synthetic_corpus(&bounds, size, generator_seed)?;
        let reps = (2000 / size).max(1);
        let mut timings: Vec<Duration> = (0..BATCHES)
            .map(|_| {
                let t = Instant::now();
                for _ in 0..reps {
                    std::hint::black_box(learn_csp(std::hint::black_box(&corpus)).ok());
                }
                t.elapsed() / reps as u32
            })
            .collect();
        timings.sort();
        rows.push(BenchRow {
            size,
            duration: timings[BATCHES / 2],
        });
    }
    Ok(rows)
}

/// Checks that time per schedule stays within `noise` of the smallest run:
/// `duration(b) <= noise * (b / a) * duration(a)` for every pair `a < b`.
pub fn scales_linearly(rows: &[BenchRow], noise: f64) -> bool {
    rows.iter().all(|a| {
        rows.iter().filter(|b| b.size > a.size).all(|b| {
            let ratio = b.size as f64 / a.size as f64;
            b.duration.as_secs_f64() <= noise * ratio * a.duration.as_secs_f64()
        })
    })
}
