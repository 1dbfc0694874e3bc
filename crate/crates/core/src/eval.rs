//! Quality measures for generated schedules and predictions.

use std::collections::BTreeMap;

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::bayes::Evaluation;
use crate::error::{Error, Result};
use crate::model::Schedule;
use crate::rational::{self, Rational};

/// Element-wise Euclidean distance `sqrt(sum (m_ij - n_ij)^2)`.
pub fn frobenius_distance(m: &Array2<f64>, n: &Array2<f64>) -> Result<f64> {
    if m.dim() != n.dim() {
        return Err(Error::Shape(format!("{:?} vs {:?}", m.dim(), n.dim())));
    }
    Ok(Zip::from(m)
        .and(n)
        .fold(0.0, |acc, &a, &b| acc + (a - b) * (a - b))
        .sqrt())
}

/// Distance between two schedules of the same shape.
pub fn schedule_distance(a: &Schedule, b: &Schedule) -> Result<f64> {
    if a.nurses() != b.nurses() || a.horizon() != b.horizon() {
        return Err(Error::Shape(format!(
            "{} nurses over {:?} vs {} nurses over {:?}",
            a.nurses(),
            a.horizon(),
            b.nurses(),
            b.horizon()
        )));
    }
    frobenius_distance(&a.to_f64(), &b.to_f64())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Min,
    Max,
}

impl Aggregation {
    fn apply(self, xs: &[f64]) -> Option<f64> {
        if xs.is_empty() {
            return None;
        }
        Some(match self {
            Aggregation::Mean => xs.iter().sum::<f64>() / xs.len() as f64,
            Aggregation::Min => xs.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregation::Max => xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub method: String,
    pub settings: BTreeMap<String, String>,
    pub frobenius: Option<f64>,
    /// Per-schedule distances behind `frobenius`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub distances: Vec<f64>,
    #[serde(default, with = "opt_rational", skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Confusion>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub labels: Vec<String>,
    /// `counts[truth][predicted]`.
    pub counts: Vec<Vec<u64>>,
}

mod opt_rational {
    use super::{rational, Rational};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(r) => s.serialize_str(&rational::format_rational(r)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(d)?
            .map(|t| rational::parse_rational(&t).map_err(serde::de::Error::custom))
            .transpose()
    }
}

impl QualityReport {
    pub fn new(method: impl Into<String>) -> Self {
        QualityReport {
            method: method.into(),
            settings: BTreeMap::new(),
            frobenius: None,
            distances: Vec::new(),
            accuracy: None,
            confusion: None,
        }
    }

    pub fn setting(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.settings.insert(key.into(), value.to_string());
        self
    }

    pub fn with_evaluation(mut self, e: &Evaluation) -> Self {
        self.accuracy = Some(e.accuracy);
        self.confusion = Some(Confusion {
            labels: e.labels.clone(),
            counts: e.confusion.clone(),
        });
        self
    }

    pub fn has_metric(&self) -> bool {
        self.frobenius.is_some() || self.accuracy.is_some() || self.confusion.is_some()
    }
}

/// Distances from `input` to each generated schedule, summarized by
/// `aggregation`.
pub fn compare_generated(
    method: &str,
    input: &Schedule,
    generated: &[Schedule],
    aggregation: Aggregation,
) -> Result<QualityReport> {
    if generated.is_empty() {
        return Err(Error::Shape("no generated schedules to compare".into()));
    }
    let distances = generated
        .iter()
        .map(|g| schedule_distance(input, g))
        .collect::<Result<Vec<_>>>()?;
    let mut report = QualityReport::new(method).setting("aggregation", format!("{aggregation:?}").to_lowercase());
    report.frobenius = aggregation.apply(&distances);
    report.distances = distances;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::nb_evaluate;
    use crate::model::{Horizon, ShiftPattern};
    use proptest::prelude::*;

    fn sched(rows: &[&str]) -> Schedule {
        let h = Horizon::new(1, rows[0].len()).unwrap();
        let ps: Vec<_> = rows.iter().map(|r| ShiftPattern::parse(r, h).unwrap()).collect();
        Schedule::from_patterns(&ps).unwrap()
    }

    #[test]
    fn single_entry_difference() {
        let m = Array2::<f64>::zeros((5, 7));
        let mut n = m.clone();
        n[[2, 3]] = 3.0;
        assert_eq!(frobenius_distance(&m, &n).unwrap(), 3.0);
        assert_eq!(frobenius_distance(&m, &m).unwrap(), 0.0);
        assert!(matches!(
            frobenius_distance(&m, &Array2::zeros((7, 5))),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn compare_identity_and_unit_diff() {
        let input = sched(&["1010", "0101"]);
        let r = compare_generated("bn", &input, std::slice::from_ref(&input), Aggregation::Mean).unwrap();
        assert_eq!(r.frobenius, Some(0.0));
        let off = sched(&["1011", "0101"]);
        let r = compare_generated("bn", &input, std::slice::from_ref(&off), Aggregation::Mean).unwrap();
        assert_eq!(r.frobenius, Some(1.0));
        let far = sched(&["0101", "1010"]);
        let r = compare_generated("bn", &input, &[input.clone(), off, far], Aggregation::Max).unwrap();
        assert_eq!(r.distances, vec![0.0, 1.0, 8f64.sqrt()]);
        assert_eq!(r.frobenius, Some(8f64.sqrt()));
        assert!(matches!(
            compare_generated("bn", &input, &[sched(&["1010"])], Aggregation::Mean),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn report_json_carries_accuracy() {
        let truth: Vec<String> = ["1", "3", "2", "4", "1", "3"].map(String::from).to_vec();
        let preds: Vec<String> = ["3", "3", "2", "4", "2", "3"].map(String::from).to_vec();
        let e = nb_evaluate(&preds, &truth).unwrap();
        let r = QualityReport::new("naive-bayes").with_evaluation(&e);
        assert!(r.has_metric());
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["accuracy"], "2/3");
        assert_eq!(serde_json::from_value::<QualityReport>(json).unwrap(), r);
    }

    fn matrix() -> impl Strategy<Value = Array2<f64>> {
        prop::collection::vec(-5.0f64..5.0, 35).prop_map(|v| Array2::from_shape_vec((5, 7), v).unwrap())
    }

    proptest! {
        #[test]
        fn matches_double_loop(a in matrix(), b in matrix()) {
            let mut sum = 0.0;
            for i in 0..5 {
                for j in 0..7 {
                    sum += (a[[i, j]] - b[[i, j]]).powi(2);
                }
            }
            prop_assert!((frobenius_distance(&a, &b).unwrap() - sum.sqrt()).abs() <= 1e-12);
        }

        #[test]
        fn is_a_metric(a in matrix(), b in matrix(), c in matrix()) {
            let d = |x: &Array2<f64>, y: &Array2<f64>| frobenius_distance(x, y).unwrap();
            prop_assert_eq!(d(&a, &b), d(&b, &a));
            prop_assert_eq!(d(&a, &a), 0.0);
            prop_assert!(a == b || d(&a, &b) > 0.0);
            prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c) + 1e-9);
        }

        #[test]
        fn mean_is_arithmetic_mean(rows in prop::collection::vec(0u64..16, 1..6)) {
            let h = Horizon::new(1, 4).unwrap();
            let input = Schedule::from_patterns(&[ShiftPattern::from_bits(5, h).unwrap()]).unwrap();
            let gen: Vec<Schedule> = rows.iter().map(|&b| Schedule::from_patterns(&[ShiftPattern::from_bits(b, h).unwrap()]).unwrap()).collect();
            let r = compare_generated("x", &input, &gen, Aggregation::Mean).unwrap();
            let manual: f64 = rows.iter().map(|&b| f64::from((b ^ 5).count_ones()).sqrt()).sum::<f64>() / rows.len() as f64;
            prop_assert!((r.frobenius.unwrap() - manual).abs() <= 1e-12);
        }
    }
}
