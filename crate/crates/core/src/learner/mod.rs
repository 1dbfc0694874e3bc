//! Learning NSP models from past schedules.

mod csp;
mod nmf;

pub use csp::{
    constraints_to_wcsp, learn_csp, learning_benchmark, scales_linearly, synthetic_corpus, BenchRow,
    DomainOptions, GeneratorBounds, LearnedConstraints,
};
pub use nmf::{frobenius, nmf_factorize, nmf_predict, NmfConfig, NmfFactors, NmfPrediction, PartialMatrix};
