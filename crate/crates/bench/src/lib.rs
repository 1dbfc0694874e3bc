//! Inputs shared by the benchmarks.

use nspforge::io::{parse_quantity_table, parse_transactions, QuantityDb, TransactionDb, UtilityTable};
use nspforge::learner::{synthetic_corpus, GeneratorBounds};
use nspforge::Schedule;

pub const TABLE_1: &str = include_str!("../../../data/table1.txt");
pub const TABLES_2_3: &str = include_str!("../../../data/tables2_3.csv");
pub const EXAMPLE_4: &str = include_str!("../../../data/example4.wcsp");
pub const TABLE_12: &str = include_str!("../../../data/table12.csv");

pub fn table_1() -> TransactionDb {
    parse_transactions(TABLE_1).expect("bundled table parses")
}

pub fn tables_2_3() -> (QuantityDb, UtilityTable) {
    parse_quantity_table(TABLES_2_3).expect("bundled table parses")
}

/// Seeded synthetic schedules for ten nurses over one week.
pub fn corpus(count: usize, seed: u64) -> Vec<Schedule> {
    synthetic_corpus(&GeneratorBounds::table8(10), count, seed).expect("generator bounds are valid")
}
