//! Shared fixtures for the criterion benchmarks.

use groupwalk_core::groups::GroupDescriptor;
use groupwalk_core::measures::FinMeasure;

fn words(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(w, p)| (w.to_string(), *p)).collect()
}

/// The asymmetric Heisenberg walk used across the examples.
pub fn heisenberg_asym() -> FinMeasure {
    FinMeasure::from_words(
        GroupDescriptor::heisenberg(),
        &words(&[("a", 0.4), ("a-", 0.1), ("b", 0.3), ("b-", 0.2)]),
    )
    .unwrap()
}

/// Uniform simple random walk on F₂.
pub fn free2_uniform() -> FinMeasure {
    FinMeasure::from_words(
        GroupDescriptor::free(2).unwrap(),
        &words(&[("a", 0.25), ("a-", 0.25), ("b", 0.25), ("b-", 0.25)]),
    )
    .unwrap()
}

/// Lazy biased walk on ℤ.
pub fn lazy_biased_z() -> FinMeasure {
    let mu = FinMeasure::from_words(
        GroupDescriptor::lattice(1).unwrap(),
        &words(&[("x1", 0.75), ("x1-", 0.25)]),
    )
    .unwrap();
    groupwalk_core::measures::lazify(&mu, 0.2).unwrap()
}
