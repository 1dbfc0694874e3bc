//! Hard-constraint checks, propagation, Branch & Bound and local search
//! over a [`WcspInstance`](crate::model::WcspInstance).

mod bnb;
mod constraints;
mod instances;
mod propagation;
mod sls;
#[cfg(test)]
pub(crate) mod test_support;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::model::{Assignment, WcspInstance};
use crate::rational::Rational;

pub use bnb::{branch_and_bound, compute_bound, compute_lb, dfs_first_feasible, BnbConfig, ValueOrder, VarOrder};
pub use constraints::{
    check_coverage, check_global, check_unary, coverage, is_feasible, unary_ok, ConstraintId, ConstraintVerdict,
    Witness,
};
pub use instances::table8_family;
pub use propagation::{gac_filter, node_consistency};
pub use sls::{sls_solve, SlsConfig, SlsInit};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// Total cost, e.g. hospital expense.
    #[default]
    Minimize,
    /// Total weight, e.g. nurse preference.
    Maximize,
}

impl Sense {
    /// `a` is strictly better than `b`.
    pub fn better(self, a: Rational, b: Rational) -> bool {
        match self {
            Sense::Minimize => a < b,
            Sense::Maximize => a > b,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes_expanded: u64,
    pub prunes: u64,
    pub incumbent_updates: u64,
    #[serde(skip)]
    pub elapsed: Duration,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Feasible,
    /// The search space was exhausted without a feasible assignment.
    Infeasible,
    /// A heuristic gave up without finding anything.
    NoSolutionFound,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub assignment: Option<Assignment>,
    /// Cost of `assignment`, or the instance's cost cap when there is none.
    pub cost: Rational,
    pub optimal: bool,
    pub status: SolveStatus,
    pub stats: SearchStats,
    /// Every optimal assignment when requested, else just the returned one.
    pub alternatives: Vec<Assignment>,
    pub initial_cost: Option<Rational>,
    /// Objective after each accepted improvement, starting point first.
    pub trace: Vec<Rational>,
}

impl SolveResult {
    pub(crate) fn infeasible(wcsp: &WcspInstance, stats: SearchStats) -> Self {
        SolveResult {
            assignment: None,
            cost: wcsp.cost_cap,
            optimal: true,
            status: SolveStatus::Infeasible,
            stats,
            alternatives: Vec::new(),
            initial_cost: None,
            trace: Vec::new(),
        }
    }
}
