//! Frequent-pattern and high-utility mining over historical schedules, and
//! rule-driven schedule simulation.

mod apriori;
mod huim;
mod simulate;

pub use apriori::{apriori, apriori_ratio, generate_rules, AssociationRule, FrequentItemset, RuleShape};
pub use huim::{itemset_utility, transaction_utility, two_phase, twu, TwoPhaseResult, UtilityItemset};
pub use simulate::{simulate_schedule, Firing, FiringKind, PatternSource, SimulationOutcome, SimulationWarning};
