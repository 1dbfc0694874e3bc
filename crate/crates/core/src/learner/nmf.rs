//! Non-negative matrix factorization with multiplicative updates, and
//! completion of partially observed schedules from the learned factors.

use log::debug;
use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmfConfig {
    pub rank: usize,
    pub max_iter: usize,
    /// Stop once successive errors differ by less than this.
    pub tol: f64,
    pub seed: u64,
    /// Independent initializations; the lowest final error wins.
    pub restarts: usize,
    /// Acceptance radius for [`nmf_predict`]; `None` derives one from the
    /// training matrix.
    pub gate_threshold: Option<f64>,
}

impl NmfConfig {
    pub fn new(rank: usize) -> Self {
        NmfConfig {
            rank,
            max_iter: 5000,
            tol: 1e-10,
            seed: 0,
            restarts: 1,
            gate_threshold: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NmfFactors {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    pub rank: usize,
    /// Frobenius error after each iteration of the winning run.
    pub error_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub gate_threshold: f64,
}

impl NmfFactors {
    pub fn reconstruction(&self) -> Array2<f64> {
        self.w.dot(&self.h)
    }

    pub fn final_error(&self) -> f64 {
        self.error_trace.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn frobenius(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    Zip::from(a)
        .and(b)
        .fold(0.0, |acc, &x, &y| acc + (x - y) * (x - y))
        .sqrt()
}

fn validate(x: &Array2<f64>, config: &NmfConfig) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Shape("empty matrix".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Domain(format!("matrix entry {v} is not a non-negative number")));
    }
    let (n, m) = x.dim();
    if config.rank == 0 || config.rank >= n.min(m) {
        return Err(Error::Shape(format!(
            "rank {} must lie in 1..{} for a {n}x{m} matrix",
            config.rank,
            n.min(m)
        )));
    }
    if config.tol.is_nan() || config.tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance {} must be positive", config.tol)));
    }
    if config.max_iter == 0 || config.restarts == 0 {
        return Err(Error::Domain("max_iter and restarts must be at least 1".into()));
    }
    Ok(())
}

fn uniform_positive(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    // (0, 1]
    Array2::from_shape_simple_fn((rows, cols), || 1.0 - rng.random::<f64>())
}

struct Run {
    w: Array2<f64>,
    h: Array2<f64>,
    trace: Vec<f64>,
    converged: bool,
}

fn run_once(x: &Array2<f64>, config: &NmfConfig, rng: &mut ChaCha8Rng) -> Run {
    let (n, m) = x.dim();
    let mut w = uniform_positive(rng, n, config.rank);
    let mut h = uniform_positive(rng, config.rank, m);
    let mut prev = frobenius(x, &w.dot(&h));
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iter {
        let num = w.t().dot(x);
        let den = w.t().dot(&w).dot(&h);
        Zip::from(&mut h)
            .and(&num)
            .and(&den)
            .for_each(|h, &a, &b| *h *= a / b.max(EPS));
        let num = x.dot(&h.t());
        let den = w.dot(&h).dot(&h.t());
        Zip::from(&mut w)
            .and(&num)
            .and(&den)
            .for_each(|w, &a, &b| *w *= a / b.max(EPS));
        let err = frobenius(x, &w.dot(&h));
        trace.push(err);
        if err == 0.0 || (prev - err).abs() < config.tol {
            converged = true;
            break;
        }
        prev = err;
    }
    Run { w, h, trace, converged }
}

/// Default acceptance radius: half the smallest distance between two
/// distinct rows of the training matrix, but at least one.
fn default_gate(x: &Array2<f64>) -> f64 {
    let rows: Vec<_> = x.rows().into_iter().collect();
    let mut best = f64::INFINITY;
    for a in 0..rows.len() {
        for b in a + 1..rows.len() {
            let d = Zip::from(&rows[a])
                .and(&rows[b])
                .fold(0.0, |acc, &p, &q| acc + (p - q) * (p - q))
                .sqrt();
            if d > 0.0 {
                best = best.min(d);
            }
        }
    }
    if best.is_finite() {
        (best / 2.0).max(1.0)
    } else {
        1.0
    }
}

/// Factors `x ~ W H` with Lee-Seung updates from a seeded uniform (0, 1]
/// start. Denominators are floored at 1e-12.
pub fn nmf_factorize(x: &Array2<f64>, config: &NmfConfig) -> Result<NmfFactors> {
    validate(x, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<Run> = None;
    for attempt in 0..config.restarts {
        let run = run_once(x, config, &mut rng);
        debug!(
            "nmf attempt {attempt}: error {:.6} after {} iterations",
            run.trace.last().unwrap_or(&f64::NAN),
            run.trace.len()
        );
        let better = best
            .as_ref()
            .is_none_or(|b| run.trace.last() < b.trace.last());
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one restart");
    Ok(NmfFactors {
        iterations: run.trace.len(),
        w: run.w,
        h: run.h,
        rank: config.rank,
        error_trace: run.trace,
        converged: run.converged,
        gate_threshold: config.gate_threshold.unwrap_or_else(|| default_gate(x)),
    })
}

/// A schedule matrix with some entries unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct PartialMatrix {
    pub values: Array2<f64>,
    pub known: Array2<bool>,
}

impl PartialMatrix {
    pub fn new(values: Array2<f64>, known: Array2<bool>) -> Result<Self> {
        if values.dim() != known.dim() {
            return Err(Error::Shape(format!(
                "values {:?} and mask {:?} differ in shape",
                values.dim(),
                known.dim()
            )));
        }
        Ok(PartialMatrix { values, known })
    }

    /// Hides `mask`ed cells of a full matrix.
    pub fn hide(full: &Array2<f64>, hidden: &Array2<bool>) -> Result<Self> {
        PartialMatrix::new(full.clone(), hidden.mapv(|h| !h))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NmfPrediction {
    Filled { matrix: Array2<f64>, distance: f64 },
    Rejected { distance: f64, threshold: f64 },
}

/// Completes `partial` from the factors. The known cells are compared with
/// the training matrix first; inputs farther than the gate are rejected.
/// Unknown cells take the rounded, clamped reconstruction.
pub fn nmf_predict(partial: &PartialMatrix, factors: &NmfFactors, training: &Array2<f64>) -> Result<NmfPrediction> {
    let recon = factors.reconstruction();
    if partial.values.dim() != recon.dim() || training.dim() != recon.dim() {
        return Err(Error::Shape(format!(
            "partial {:?}, training {:?} and factors {:?} disagree",
            partial.values.dim(),
            training.dim(),
            recon.dim()
        )));
    }
    let distance = Zip::from(&partial.values)
        .and(&partial.known)
        .and(training)
        .fold(0.0, |acc, &v, &k, &t| if k { acc + (v - t) * (v - t) } else { acc })
        .sqrt();
    if distance > factors.gate_threshold {
        return Ok(NmfPrediction::Rejected {
            distance,
            threshold: factors.gate_threshold,
        });
    }
    let mut matrix = partial.values.clone();
    Zip::from(&mut matrix)
        .and(&partial.known)
        .and(&recon)
        .for_each(|m, &k, &r| {
            if !k {
                *m = r.max(0.0).round();
            }
        });
    Ok(NmfPrediction::Filled { matrix, distance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn table12() -> Array2<f64> {
        array![
            [2., 1., 1., 3., 1., 0., 2.],
            [4., 0., 3., 1., 1., 2., 3.],
            [1., 2., 2., 3., 1., 0., 1.],
            [2., 2., 1., 1., 0., 3., 1.],
            [3., 1., 2., 0., 4., 1., 1.]
        ]
    }

    #[test]
    fn validates_inputs() {
        let x = table12();
        assert!(matches!(nmf_factorize(&x, &NmfConfig::new(0)), Err(Error::Shape(_))));
        assert!(matches!(nmf_factorize(&x, &NmfConfig::new(5)), Err(Error::Shape(_))));
        let mut neg = x.clone();
        neg[[0, 0]] = -1.0;
        assert!(matches!(nmf_factorize(&neg, &NmfConfig::new(2)), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_matrix_converges_immediately() {
        let x = Array2::<f64>::zeros((4, 5));
        let f = nmf_factorize(&x, &NmfConfig::new(2)).unwrap();
        assert_eq!(f.iterations, 1);
        assert!(f.final_error() <= 1e-10);
    }

    #[test]
    fn seeded_runs_repeat() {
        let cfg = NmfConfig { seed: 9, max_iter: 200, ..NmfConfig::new(3) };
        let a = nmf_factorize(&table12(), &cfg).unwrap();
        let b = nmf_factorize(&table12(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn table12_error_trace_is_monotone() {
        let f = nmf_factorize(&table12(), &NmfConfig::new(3)).unwrap();
        for pair in f.error_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9);
        }
        assert_eq!((f.w.dim(), f.h.dim()), ((5, 3), (3, 7)));
        assert!(f.w.iter().chain(f.h.iter()).all(|&v| v >= 0.0));
    }

    #[test]
    fn planted_low_rank_matrix_is_completed() {
        let w = array![[1., 0.], [0., 1.], [1., 1.], [2., 0.], [0., 2.], [1., 2.]];
        let h = array![[1., 0., 2., 1., 0., 1.], [0., 1., 0., 1., 2., 1.]];
        let x = w.dot(&h);
        let cfg = NmfConfig { restarts: 5, gate_threshold: Some(f64::INFINITY), ..NmfConfig::new(2) };
        let f = nmf_factorize(&x, &cfg).unwrap();
        let mut hidden = Array2::from_elem(x.dim(), false);
        for (r, c) in [(0, 1), (2, 4), (5, 0), (3, 3)] {
            hidden[[r, c]] = true;
        }
        let partial = PartialMatrix::hide(&x, &hidden).unwrap();
        let NmfPrediction::Filled { matrix, .. } = nmf_predict(&partial, &f, &x).unwrap() else {
            panic!("prediction rejected");
        };
        for ((r, c), &is_hidden) in hidden.indexed_iter() {
            let err = (matrix[[r, c]] - x[[r, c]]).abs();
            assert!(err <= 1.0, "cell ({r},{c}) off by {err}");
            if !is_hidden {
                assert_eq!(matrix[[r, c]], x[[r, c]]);
            }
        }
    }

    #[test]
    fn distant_input_is_rejected() {
        let x = table12();
        let f = nmf_factorize(&x, &NmfConfig { max_iter: 300, ..NmfConfig::new(2) }).unwrap();
        let far = PartialMatrix::new(x.mapv(|v| v + 10.0), Array2::from_elem(x.dim(), true)).unwrap();
        assert!(matches!(nmf_predict(&far, &f, &x).unwrap(), NmfPrediction::Rejected { .. }));
        let mut known = Array2::from_elem(x.dim(), true);
        known[[1, 1]] = false;
        let near = PartialMatrix::new(x.clone(), known).unwrap();
        assert!(matches!(nmf_predict(&near, &f, &x).unwrap(), NmfPrediction::Filled { distance, .. } if distance == 0.0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn updates_never_increase_error(
            cells in prop::collection::vec(0u8..5, 20),
            rank in 1usize..4,
            seed in 0u64..1000,
        ) {
            let x = Array2::from_shape_vec((4, 5), cells.into_iter().map(f64::from).collect()).unwrap();
            let f = nmf_factorize(&x, &NmfConfig { seed, max_iter: 150, ..NmfConfig::new(rank) }).unwrap();
            for pair in f.error_trace.windows(2) {
                prop_assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-9);
            }
            prop_assert!(f.w.iter().chain(f.h.iter()).all(|&v| v >= 0.0 && v.is_finite()));
        }
    }
}
