//! Seeded synthetic instances for solver experiments.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::constraints::unary_ok;
use crate::error::{Error, Result};
use crate::model::{pattern_cost, Horizon, NspInstance, ShiftPattern, WcspInstance};
use crate::rational::Rational;

/// Benchmark-family parameters: 7 days x 3 shifts, coverage 1..=4, at most 5
/// shifts, 3 nights and 2 night -> morning pairs per nurse.
///
/// The domain holds the rows of one feasible roster plus `extra` random
/// unary-feasible patterns, shuffled. Costs are drawn per nurse and shift
/// (integers 1..=9) and summed over each pattern's worked slots.
pub fn table8_family(nurses: usize, extra: usize, seed: u64) -> Result<WcspInstance> {
    if nurses == 0 {
        return Err(Error::Shape("family needs at least one nurse".into()));
    }
    let horizon = Horizon::new(7, 3)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift_costs: Vec<Vec<Rational>> = (0..nurses)
        .map(|_| (0..3).map(|_| Rational::from_integer(rng.random_range(1..=9))).collect())
        .collect();
    let probe = NspInstance::uniform(horizon, vec![vec![Rational::from_integer(0)]; nurses], 1, 4, 5, 2, 3)?;
    let roster = feasible_roster(&probe, &mut rng)?;
    let mut domain: Vec<ShiftPattern> = roster;
    let mut guard = 0;
    while domain.len() < nurses + extra {
        guard += 1;
        if guard > 100_000 {
            return Err(Error::Consistency("could not draw enough distinct patterns".into()));
        }
        let k = rng.random_range(1..=5);
        let mut slots: Vec<usize> = (0..horizon.slots()).collect();
        slots.shuffle(&mut rng);
        let bits = slots[..k].iter().fold(0u64, |m, &z| m | 1 << z);
        let p = ShiftPattern::from_bits(bits, horizon)?;
        if unary_ok(&p, 0, &probe) && !domain.contains(&p) {
            domain.push(p);
        }
    }
    domain.sort();
    domain.dedup();
    let cost = shift_costs
        .iter()
        .map(|row| domain.iter().map(|p| pattern_cost(p, row)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let mut inst = probe;
    inst.cost = cost;
    WcspInstance::new(inst, domain)
}

/// Deals every slot to a nurse with spare capacity, round-robin from a
/// random offset, so each slot is covered exactly once.
fn feasible_roster(inst: &NspInstance, rng: &mut ChaCha8Rng) -> Result<Vec<ShiftPattern>> {
    let n = inst.nurses();
    let horizon = inst.horizon;
    for _ in 0..1000 {
        let mut bits = vec![0u64; n];
        let mut ok = true;
        for z in 0..horizon.slots() {
            let start = rng.random_range(0..n);
            let pick = (0..n).map(|o| (start + o) % n).find(|&i| {
                let p = ShiftPattern::from_bits(bits[i] | 1 << z, horizon).expect("slot within horizon");
                unary_ok(&p, i, inst)
            });
            match pick {
                Some(i) => bits[i] |= 1 << z,
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            return bits.into_iter().map(|b| ShiftPattern::from_bits(b, horizon)).collect();
        }
    }
    Err(Error::Consistency("no feasible roster for these limits".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Assignment;
    use crate::solver::constraints::is_feasible;

    #[test]
    fn family_contains_a_feasible_roster() {
        for (n, extra) in [(5, 8), (10, 4)] {
            let w = table8_family(n, extra, 3).unwrap();
            assert_eq!(w.nurses(), n);
            assert!(w.domain.iter().all(|p| unary_ok(p, 0, &w.instance)));
            // some assignment over the domain covers every slot
            let bnb = crate::solver::dfs_first_feasible(&w);
            let a: &Assignment = bnb.assignment.as_ref().unwrap();
            assert!(is_feasible(a, &w).unwrap());
        }
        assert_eq!(table8_family(5, 10, 3).unwrap(), table8_family(5, 10, 3).unwrap());
    }
}
