use proptest::prelude::*;

use crate::model::{Horizon, NspInstance, ShiftPattern, WcspInstance};
use crate::rational::Rational;

/// Two nurses, one day of four shifts, values 1001 / 0100 / 0110
/// weighted 2 / 1 / 4, one nurse per shift, at least `min_shifts` each.
pub fn example_4(min_shifts: u32) -> WcspInstance {
    let h = Horizon::new(1, 4).unwrap();
    let costs = vec![[2, 1, 4].map(Rational::from_integer).to_vec(); 2];
    let mut inst = NspInstance::uniform(h, costs, 1, 2, 4, 0, 1).unwrap();
    inst.min_shifts = vec![min_shifts; 2];
    let domain = ["1001", "0100", "0110"]
        .iter()
        .map(|t| ShiftPattern::parse(t, h).unwrap())
        .collect();
    WcspInstance::new(inst, domain).unwrap()
}

/// Up to 4 nurses, 8 values, 6 slots, random bounds and sub-domains.
pub fn tiny_wcsp() -> impl Strategy<Value = WcspInstance> {
    (1usize..=4, 1usize..=8, 1usize..=2, 1usize..=3).prop_flat_map(|(n, m, days, shifts)| {
        let slots = days * shifts;
        (
            prop::collection::vec(0u64..(1 << slots), m),
            prop::collection::vec(prop::collection::vec(0i64..10, m), n),
            prop::collection::vec(0u32..=2, slots),
            prop::collection::vec(0u32..=2, slots),
            prop::collection::vec(0u32..=slots as u32, n),
            prop::collection::vec(0u32..=1, n),
            0u32..2,
            prop::collection::vec(0u32..=days as u32, n),
            prop::collection::vec(prop::collection::btree_set(0..m, 1..=m), n),
        )
            .prop_map(move |(bits, costs, q, extra, h, minw, y, b, doms)| {
                let horizon = Horizon::new(days, shifts).unwrap();
                let cost = costs.into_iter().map(|r| r.into_iter().map(Rational::from_integer).collect()).collect();
                let mut inst = NspInstance::uniform(horizon, cost, 0, 0, 0, y, 0).unwrap();
                for z in 0..slots {
                    let (d, s) = horizon.day_shift(z);
                    inst.min_cover[s - 1][d - 1] = q[z];
                    inst.max_cover[s - 1][d - 1] = q[z] + extra[z];
                }
                inst.max_shifts = h;
                inst.min_shifts = minw;
                inst.max_nights = b;
                let domain = bits.into_iter().map(|x| ShiftPattern::from_bits(x, horizon).unwrap()).collect();
                let mut w = WcspInstance::new(inst, domain).unwrap();
                w.domains = doms.into_iter().map(|d| d.into_iter().collect()).collect();
                w
            })
    })
}
