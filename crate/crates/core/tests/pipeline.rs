use std::path::PathBuf;

use nspforge::io;
use nspforge::learner::{self, DomainOptions};
use nspforge::mining::{self, RuleShape};
use nspforge::rational::parse_rational;
use nspforge::solver::{self, BnbConfig};
use nspforge::{Rational, Schedule, Sense, SolveStatus};

fn data(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn example_instance_survives_serialization() {
    let wcsp = io::parse_wcsp(&data("example4.wcsp")).unwrap();
    let again = io::parse_wcsp(&io::serialize_wcsp(&wcsp)).unwrap();
    for w in [&wcsp, &again] {
        let r = solver::branch_and_bound(w, Sense::Maximize, BnbConfig::default());
        assert_eq!(r.status, SolveStatus::Optimal);
        assert_eq!(r.cost, Rational::from_integer(6));
    }
}

#[test]
fn filters_keep_the_optimum() {
    let wcsp = io::parse_wcsp(&data("example4.wcsp")).unwrap();
    let filtered = solver::gac_filter(&solver::node_consistency(&wcsp));
    let a = solver::branch_and_bound(&wcsp, Sense::Maximize, BnbConfig::default());
    let b = solver::branch_and_bound(&filtered, Sense::Maximize, BnbConfig::default());
    assert_eq!(a.cost, b.cost);
    assert!(b.stats.nodes_expanded <= a.stats.nodes_expanded);
}

#[test]
fn solved_roster_obeys_learned_bounds() {
    let corpus: Vec<Schedule> = ["week_a.csv", "week_b.csv"]
        .iter()
        .map(|f| io::parse_schedule_csv(&data(f)).unwrap())
        .collect();
    let learned = learner::learn_csp(&corpus).unwrap();
    let per_shift: Vec<Rational> = (1..=learned.shifts_per_day as i64).map(Rational::from_integer).collect();
    let costs = vec![per_shift; learned.n];
    let options = DomainOptions {
        streaming: true,
        ..DomainOptions::default()
    };
    let wcsp = learner::constraints_to_wcsp(&learned, &costs, options).unwrap();
    let r = solver::branch_and_bound(&wcsp, Sense::Minimize, BnbConfig::default());
    assert_eq!(r.status, SolveStatus::Optimal);
    let patterns = wcsp.patterns_of(r.assignment.as_ref().unwrap()).unwrap();
    let roster = Schedule::from_patterns(&patterns).unwrap();
    assert!(learned.violations(&roster).unwrap().is_empty());
    for past in &corpus {
        assert!(learned.violations(past).unwrap().is_empty());
    }
}

#[test]
fn rules_clear_the_confidence_threshold() {
    let db = io::parse_transactions(&data("table1.txt")).unwrap();
    let frequent = mining::apriori(&db, 2).unwrap();
    let threshold = parse_rational("3/5").unwrap();
    let rules = mining::generate_rules(&frequent, threshold, RuleShape::SingleConsequent).unwrap();
    assert_eq!(rules.len(), 12);
    for r in &rules {
        assert!(r.confidence >= threshold);
        assert!(r.support_count >= 2);
        assert_eq!(r.consequent.len(), 1);
    }
}
