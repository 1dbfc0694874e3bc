//! Shift prediction with Naive Bayes, and schedule simulation from a
//! per-cell Beta-Bernoulli model.
//!
//! The classifier predicts who works a target shift from who worked the
//! other shifts of the same day. Likelihoods use add-one smoothing with the
//! label-universe size in the denominator; priors are plain relative
//! frequencies.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{natural_sort, CategoryTable};
use crate::model::{Horizon, Schedule};
use crate::rational::Rational;

/// Training rows: feature values plus the label to predict.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingTable {
    pub feature_names: Vec<String>,
    pub target: String,
    pub rows: Vec<(Vec<String>, String)>,
}

impl TrainingTable {
    /// Uses every other column as a feature. Rows whose target cell is
    /// missing are skipped; a missing feature cell is an error.
    pub fn from_table(table: &CategoryTable, target: &str) -> Result<Self> {
        let t = table.column(target)?;
        let feature_cols: Vec<usize> = (0..table.columns.len()).filter(|&c| c != t).collect();
        let mut rows = Vec::new();
        for (label, cells) in table.row_labels.iter().zip(&table.cells) {
            let Some(y) = &cells[t] else { continue };
            let x = feature_cols
                .iter()
                .map(|&c| {
                    cells[c].clone().ok_or_else(|| {
                        Error::Training(format!("row {label} is missing {}", table.columns[c]))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push((x, y.clone()));
        }
        Ok(TrainingTable {
            feature_names: feature_cols.iter().map(|&c| table.columns[c].clone()).collect(),
            target: target.to_string(),
            rows,
        })
    }

    /// Every label and feature value, in natural order.
    pub fn value_universe(&self) -> Vec<String> {
        let set: BTreeSet<&String> = self
            .rows
            .iter()
            .flat_map(|(x, y)| x.iter().chain(std::iter::once(y)))
            .collect();
        let mut out: Vec<String> = set.into_iter().cloned().collect();
        natural_sort(&mut out);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NbModel {
    pub target: String,
    pub feature_names: Vec<String>,
    pub label_universe: Vec<String>,
    pub class_counts: BTreeMap<String, u64>,
    /// feature -> value -> label -> count
    pub cond_counts: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>>,
    pub n_train: u64,
}

impl NbModel {
    pub fn class_count(&self, label: &str) -> u64 {
        self.class_counts.get(label).copied().unwrap_or(0)
    }

    pub fn cond_count(&self, feature: &str, value: &str, label: &str) -> u64 {
        self.cond_counts
            .get(feature)
            .and_then(|v| v.get(value))
            .and_then(|l| l.get(label))
            .copied()
            .unwrap_or(0)
    }
}

pub fn nb_train(table: &TrainingTable, label_universe: &[String]) -> Result<NbModel> {
    if table.rows.is_empty() {
        return Err(Error::Training("no training rows".into()));
    }
    if label_universe.is_empty() {
        return Err(Error::Training("empty label universe".into()));
    }
    let known: BTreeSet<&String> = label_universe.iter().collect();
    let mut class_counts: BTreeMap<String, u64> =
        label_universe.iter().map(|l| (l.clone(), 0)).collect();
    let mut cond_counts: BTreeMap<String, BTreeMap<String, BTreeMap<String, u64>>> = BTreeMap::new();
    for (x, y) in &table.rows {
        if !known.contains(y) {
            return Err(Error::Training(format!("label {y:?} is outside the label universe")));
        }
        if x.len() != table.feature_names.len() {
            return Err(Error::Shape(format!(
                "row has {} features, expected {}",
                x.len(),
                table.feature_names.len()
            )));
        }
        *class_counts.get_mut(y).unwrap() += 1;
        for (f, v) in table.feature_names.iter().zip(x) {
            *cond_counts
                .entry(f.clone())
                .or_default()
                .entry(v.clone())
                .or_default()
                .entry(y.clone())
                .or_default() += 1;
        }
    }
    Ok(NbModel {
        target: table.target.clone(),
        feature_names: table.feature_names.clone(),
        label_universe: label_universe.to_vec(),
        class_counts,
        cond_counts,
        n_train: table.rows.len() as u64,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub label: String,
    /// Unnormalized posterior per label, in label-universe order.
    pub scores: Vec<(String, BigRational)>,
}

impl Prediction {
    pub fn score(&self, label: &str) -> Option<&BigRational> {
        self.scores.iter().find(|(l, _)| l == label).map(|(_, s)| s)
    }
}

fn big(v: u64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn big_to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Smoothed likelihood `(count(f = v, label) + 1) / (count(label) + |U|)`.
pub fn likelihood(model: &NbModel, feature: &str, value: &str, label: &str) -> BigRational {
    BigRational::new(
        BigInt::from(model.cond_count(feature, value, label) + 1),
        BigInt::from(model.class_count(label) + model.label_universe.len() as u64),
    )
}

/// Highest-scoring label; ties go to the earliest label in the universe.
pub fn nb_predict(model: &NbModel, evidence: &BTreeMap<String, String>) -> Result<Prediction> {
    if let Some(f) = evidence.keys().find(|f| !model.feature_names.contains(f)) {
        return Err(Error::Consistency(format!("model has no feature {f:?}")));
    }
    let n = big(model.n_train);
    let mut scores = Vec::with_capacity(model.label_universe.len());
    for label in &model.label_universe {
        let mut s = big(model.class_count(label)) / n.clone();
        for (f, v) in evidence {
            s *= likelihood(model, f, v, label);
        }
        scores.push((label.clone(), s));
    }
    let mut best = 0;
    for (i, (_, s)) in scores.iter().enumerate() {
        if *s > scores[best].1 {
            best = i;
        }
    }
    Ok(Prediction {
        label: scores[best].0.clone(),
        scores,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    #[serde(with = "crate::rational::serde_text")]
    pub accuracy: Rational,
    pub hits: u64,
    pub total: u64,
    pub labels: Vec<String>,
    /// `confusion[truth][predicted]` over `labels`.
    pub confusion: Vec<Vec<u64>>,
}

pub fn nb_evaluate(predictions: &[String], truth: &[String]) -> Result<Evaluation> {
    if predictions.len() != truth.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} truths",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Shape("nothing to evaluate".into()));
    }
    let mut labels: Vec<String> = predictions
        .iter()
        .chain(truth)
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    natural_sort(&mut labels);
    let index: BTreeMap<&str, usize> = labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let mut confusion = vec![vec![0; labels.len()]; labels.len()];
    for (p, t) in predictions.iter().zip(truth) {
        confusion[index[t.as_str()]][index[p.as_str()]] += 1;
    }
    let hits = predictions.iter().zip(truth).filter(|(p, t)| p == t).count() as u64;
    let total = truth.len() as u64;
    Ok(Evaluation {
        accuracy: Rational::new(hits as i64, total as i64),
        hits,
        total,
        labels,
        confusion,
    })
}

/// Independent Beta posterior per (nurse, slot) cell, starting from Beta(1, 1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BernoulliGenerator {
    pub horizon: Horizon,
    pub alpha: Array2<u64>,
    pub beta: Array2<u64>,
    pub rng_seed: u64,
}

impl BernoulliGenerator {
    pub fn uniform(nurses: usize, horizon: Horizon, rng_seed: u64) -> Self {
        let shape = (nurses, horizon.slots());
        BernoulliGenerator {
            horizon,
            alpha: Array2::ones(shape),
            beta: Array2::ones(shape),
            rng_seed,
        }
    }

    pub fn observe(&mut self, schedule: &Schedule) -> Result<()> {
        if schedule.horizon() != self.horizon || schedule.nurses() != self.alpha.nrows() {
            return Err(Error::Shape(format!(
                "schedule is {}x{}, generator expects {}x{}",
                schedule.nurses(),
                schedule.horizon().slots(),
                self.alpha.nrows(),
                self.alpha.ncols()
            )));
        }
        for ((i, z), &v) in schedule.entries().indexed_iter() {
            if v == 1 {
                self.alpha[[i, z]] += 1;
            } else {
                self.beta[[i, z]] += 1;
            }
        }
        Ok(())
    }

    /// Posterior mean `alpha / (alpha + beta)` of one cell.
    pub fn theta(&self, nurse: usize, slot: usize) -> Rational {
        let a = self.alpha[[nurse, slot]] as i64;
        Rational::new(a, a + self.beta[[nurse, slot]] as i64)
    }

    pub fn sample(&self, count: usize) -> Vec<Schedule> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.rng_seed);
        let (n, slots) = self.alpha.dim();
        let probs = Array2::from_shape_fn((n, slots), |(i, z)| {
            let a = self.alpha[[i, z]] as f64;
            a / (a + self.beta[[i, z]] as f64)
        });
        (0..count)
            .map(|_| {
                let entries = probs.mapv(|p| rng.random_bool(p) as u8);
                Schedule::new(entries, self.horizon).expect("entries are 0/1 by construction")
            })
            .collect()
    }
}

/// Fits the per-cell model to `history` and draws `count` schedules.
pub fn bn_simulate(history: &[Schedule], count: usize, seed: u64) -> Result<Vec<Schedule>> {
    let first = history
        .first()
        .ok_or_else(|| Error::Shape("empty schedule history".into()))?;
    let mut generator = BernoulliGenerator::uniform(first.nurses(), first.horizon(), seed);
    for s in history {
        generator.observe(s)?;
    }
    Ok(generator.sample(count))
}

/// Convenience: predicted labels for every row of a table, keyed by row label.
pub fn nb_predict_table(model: &NbModel, table: &CategoryTable) -> Result<Vec<(String, Prediction)>> {
    let mut out = Vec::new();
    for (label, cells) in table.row_labels.iter().zip(&table.cells) {
        let evidence: BTreeMap<String, String> = table
            .columns
            .iter()
            .zip(cells)
            .filter(|(c, _)| model.feature_names.contains(c))
            .filter_map(|(c, v)| v.as_ref().map(|v| (c.clone(), v.clone())))
            .collect();
        out.push((label.clone(), nb_predict(model, &evidence)?));
    }
    Ok(out)
}

/// Sum of all scores; strictly positive whenever some label was seen.
pub fn total_score(p: &Prediction) -> BigRational {
    p.scores.iter().fold(BigRational::zero(), |acc, (_, s)| acc + s)
}

/// True when every smoothed likelihood factor in the prediction is positive.
pub fn likelihoods_positive(model: &NbModel, evidence: &BTreeMap<String, String>) -> bool {
    model.label_universe.iter().all(|l| {
        evidence
            .iter()
            .all(|(f, v)| likelihood(model, f, v, l) > BigRational::zero())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_category_csv;
    use proptest::prelude::*;

    pub(crate) const TABLE_5: &str = "\
day,Shift1,Shift2,Shift3,Shift4
Day1,N1,N4,N3,N2
Day2,N4,N3,N1,N2
Day3,N2,N1,N3,N4
Day4,N4,N2,N1,N3
Day5,N3,N2,N4,N1
Day6,N2,N1,N3,N4
Day7,N1,N2,N4,N3
Day8,N4,N2,N1,N3
Day9,N2,N1,N4,N3
Day10,N4,N3,N2,N1
Day11,N3,N1,N2,N4
Day12,N3,N4,N1,N2
Day13,N4,N1,N2,N3
Day14,N1,N3,N2,N4
";

    fn universe() -> Vec<String> {
        ["N1", "N2", "N3", "N4"].map(String::from).to_vec()
    }

    fn model() -> NbModel {
        let table = parse_category_csv(TABLE_5).unwrap();
        nb_train(&TrainingTable::from_table(&table, "Shift4").unwrap(), &universe()).unwrap()
    }

    fn evidence(v: [&str; 3]) -> BTreeMap<String, String> {
        ["Shift1", "Shift2", "Shift3"]
            .iter()
            .zip(v)
            .map(|(f, v)| (f.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn class_counts() {
        let m = model();
        let counts: Vec<u64> = universe().iter().map(|l| m.class_count(l)).collect();
        assert_eq!(counts, [2, 3, 5, 4]);
        assert_eq!(m.n_train, 14);
    }

    #[test]
    fn day_15_scores_longhand() {
        let p = nb_predict(&model(), &evidence(["N3", "N2", "N4"])).unwrap();
        assert_eq!(p.label, "N3");
        // N3: 5/14 * (0+1)/9 * (3+1)/9 * (2+1)/9
        let n3 = BigRational::new(BigInt::from(5 * 4 * 3), BigInt::from(14 * 9 * 9 * 9));
        assert_eq!(p.score("N3").unwrap(), &n3);
        // N1: 2/14 * (1+1)/6 * (1+1)/6 * (1+1)/6
        let n1 = BigRational::new(BigInt::from(2 * 2 * 2 * 2), BigInt::from(14 * 6 * 6 * 6));
        // N2: 3/14 * 2/7 * 1/7 * 1/7, N4: 4/14 * 2/8 * 1/8 * 1/8
        assert_eq!(p.score("N2").unwrap(), &BigRational::new(BigInt::from(6), BigInt::from(14 * 343)));
        assert_eq!(p.score("N4").unwrap(), &BigRational::new(BigInt::from(8), BigInt::from(14 * 512)));
        assert_eq!(p.score("N1").unwrap(), &n1);
    }

    #[test]
    fn single_row_model() {
        let table = TrainingTable {
            feature_names: vec!["a".into()],
            target: "t".into(),
            rows: vec![(vec!["x".into()], "N2".into())],
        };
        let m = nb_train(&table, &universe()).unwrap();
        assert_eq!(m.class_count("N2"), 1);
        assert_eq!(m.class_count("N1") + m.class_count("N3") + m.class_count("N4"), 0);
        let empty = TrainingTable { rows: vec![], ..table };
        assert!(matches!(nb_train(&empty, &universe()), Err(Error::Training(_))));
    }

    #[test]
    fn evaluation() {
        let p: Vec<String> = ["N3", "N3", "N2", "N4", "N2", "N3"].map(String::from).to_vec();
        let t: Vec<String> = ["N1", "N3", "N2", "N4", "N1", "N3"].map(String::from).to_vec();
        let e = nb_evaluate(&p, &t).unwrap();
        assert_eq!(e.accuracy, Rational::new(2, 3));
        assert_eq!(e.confusion[0], [0, 1, 1, 0]);
        let same = nb_evaluate(&t, &t).unwrap();
        assert_eq!(same.accuracy, Rational::from_integer(1));
        for (i, row) in same.confusion.iter().enumerate() {
            assert!(row.iter().enumerate().all(|(j, &c)| (i == j) == (c > 0)));
        }
        assert!(nb_evaluate(&p[..2], &t).is_err());
    }

    #[test]
    fn beta_posterior_mean() {
        let h = Horizon::new(1, 2).unwrap();
        let mut s = Schedule::zeros(1, h);
        s.set(0, 0, true);
        let mut g = BernoulliGenerator::uniform(1, h, 0);
        g.observe(&s).unwrap();
        assert_eq!(g.theta(0, 0), Rational::new(2, 3));
        assert_eq!(g.theta(0, 1), Rational::new(1, 3));
        assert!(g.observe(&Schedule::zeros(2, h)).is_err());
    }

    #[test]
    fn simulation_is_seeded_and_concentrates() {
        let h = Horizon::new(2, 2).unwrap();
        let ones = Schedule::new(Array2::ones((3, 4)), h).unwrap();
        let history = vec![ones; 200];
        let a = bn_simulate(&history, 5, 9).unwrap();
        assert_eq!(a, bn_simulate(&history, 5, 9).unwrap());
        let total: u64 = a.iter().map(Schedule::total_assignments).sum();
        assert!(total >= 55, "{total}");
        assert!(bn_simulate(&[], 1, 0).is_err());
    }

    #[test]
    fn cell_frequencies_track_posterior_mean() {
        let h = Horizon::new(1, 3).unwrap();
        let mut s = Schedule::zeros(2, h);
        s.set(0, 0, true);
        s.set(1, 2, true);
        let mut g = BernoulliGenerator::uniform(2, h, 77);
        g.observe(&s).unwrap();
        g.observe(&Schedule::zeros(2, h)).unwrap();
        let count = 4000;
        let draws = g.sample(count);
        for i in 0..2 {
            for z in 0..3 {
                let p = crate::rational::to_f64(&g.theta(i, z));
                let freq = draws.iter().filter(|d| d.get(i, z)).count() as f64 / count as f64;
                let se = (p * (1.0 - p) / count as f64).sqrt();
                assert!((freq - p).abs() <= 3.0 * se, "cell ({i},{z}) {freq} vs {p}");
            }
        }
    }

    fn random_table() -> impl Strategy<Value = TrainingTable> {
        (1usize..4, 1usize..20).prop_flat_map(|(f, rows)| {
            prop::collection::vec((prop::collection::vec(0u8..4, f), 0u8..4), rows).prop_map(move |rows| {
                TrainingTable {
                    feature_names: (0..f).map(|i| format!("F{i}")).collect(),
                    target: "T".into(),
                    rows: rows
                        .into_iter()
                        .map(|(x, y)| (x.into_iter().map(|v| format!("N{}", v + 1)).collect(), format!("N{}", y + 1)))
                        .collect(),
                }
            })
        })
    }

    proptest! {
        #[test]
        fn counts_match_tally(t in random_table()) {
            let m = nb_train(&t, &universe()).unwrap();
            prop_assert_eq!(m.class_counts.values().sum::<u64>(), m.n_train);
            for l in universe() {
                let tally = t.rows.iter().filter(|(_, y)| *y == l).count() as u64;
                prop_assert_eq!(m.class_count(&l), tally);
                for (fi, f) in t.feature_names.iter().enumerate() {
                    for v in universe() {
                        let c = t.rows.iter().filter(|(x, y)| *y == l && x[fi] == v).count() as u64;
                        prop_assert_eq!(m.cond_count(f, &v, &l), c);
                        prop_assert!(c <= m.class_count(&l));
                    }
                }
            }
        }

        #[test]
        fn scores_positive_and_argmax_stable(t in random_table(), ev in prop::collection::vec(0u8..5, 3)) {
            let m = nb_train(&t, &universe()).unwrap();
            let evidence: BTreeMap<String, String> = m.feature_names.iter().zip(&ev).map(|(f, v)| (f.clone(), format!("N{}", v + 1))).collect();
            let p = nb_predict(&m, &evidence).unwrap();
            prop_assert!(likelihoods_positive(&m, &evidence));
            prop_assert!(total_score(&p) > BigRational::zero());
            for (l, s) in &p.scores {
                prop_assert_eq!(s.is_zero(), m.class_count(l) == 0);
            }
            // scaling each likelihood by a common constant leaves the winner alone
            let k = BigRational::new(BigInt::from(7), BigInt::from(3)).pow(evidence.len() as i32);
            let scaled: Vec<BigRational> = p.scores.iter().map(|(_, s)| s * &k).collect();
            let mut best = 0;
            for i in 0..scaled.len() {
                if scaled[i] > scaled[best] { best = i; }
            }
            prop_assert_eq!(&p.scores[best].0, &p.label);
        }

        #[test]
        fn accuracy_is_indicator_mean(pairs in prop::collection::vec((0u8..3, 0u8..3), 1..30)) {
            let p: Vec<String> = pairs.iter().map(|(a, _)| a.to_string()).collect();
            let t: Vec<String> = pairs.iter().map(|(_, b)| b.to_string()).collect();
            let e = nb_evaluate(&p, &t).unwrap();
            let mean = pairs.iter().filter(|(a, b)| a == b).count() as f64 / pairs.len() as f64;
            prop_assert!((crate::rational::to_f64(&e.accuracy) - mean).abs() < 1e-12);
            prop_assert_eq!(e.confusion.iter().flatten().sum::<u64>(), pairs.len() as u64);
        }
    }
}
