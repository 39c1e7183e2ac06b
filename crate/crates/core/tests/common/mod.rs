#![allow(dead_code)]

use hazard_sbf::{
    validate_dataset, CovariateChannel, Dataset, DimensionGrid, EvaluationGrid, SurvivalRecord,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Small random dataset with left truncation, censoring and constant
/// covariates on `[-1, 1]^d`, together with a grid of `points[k]` nodes per
/// dimension over `[0, 2] × [-1, 1]^d`.
pub fn random_instance(seed: u64, n: usize, d: usize, points: &[usize]) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<SurvivalRecord> = (0..n)
        .map(|_| {
            let entry = if rng.random_bool(0.3) { rng.random_range(0.0..0.8) } else { 0.0 };
            let exit = entry + rng.random_range(0.05..1.6);
            let event = rng.random_bool(0.6);
            let z: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            SurvivalRecord::with_constants(entry, exit, event, &z)
        })
        .collect();
    let mut dims = vec![DimensionGrid::new(0.0, 2.0, points[0]).unwrap()];
    for k in 0..d {
        dims.push(DimensionGrid::new(-1.0, 1.0, points[k + 1]).unwrap());
    }
    validate_dataset(records, &EvaluationGrid::new(dims).unwrap()).unwrap()
}

/// Random grid sizes in `lo..=hi` for `n_dims` dimensions.
pub fn random_points(seed: u64, n_dims: usize, lo: usize, hi: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    (0..n_dims).map(|_| rng.random_range(lo..=hi)).collect()
}

/// The ten-record fixture used by the CLI tests: entry, exit, event, z.
pub const TOY: [(f64, f64, bool, f64); 10] = [
    (0.0, 0.9, true, -0.8),
    (0.1, 1.4, false, -0.5),
    (0.0, 0.3, true, -0.2),
    (0.2, 1.9, true, 0.0),
    (0.0, 1.1, false, 0.1),
    (0.4, 0.8, true, 0.3),
    (0.0, 1.7, true, 0.5),
    (0.3, 1.2, false, 0.6),
    (0.0, 0.6, true, 0.8),
    (0.5, 1.5, true, 0.9),
];

pub fn toy_records() -> Vec<SurvivalRecord> {
    TOY.iter()
        .map(|&(a, b, e, z)| SurvivalRecord::new(a, b, e, vec![CovariateChannel::Constant(z)]))
        .collect()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Sup-norm distance between the components of two fits, skipping nodes that
/// either fit marks unsupported.
pub fn components_sup_diff(a: &hazard_sbf::AdditiveFit, b: &hazard_sbf::AdditiveFit) -> f64 {
    let mut m = (a.intercept - b.intercept).abs();
    for k in 0..a.n_dims() {
        for x in 0..a.components[k].len() {
            if a.unsupported[k][x] || b.unsupported[k][x] {
                continue;
            }
            m = m.max((a.components[k][x] - b.components[k][x]).abs());
        }
    }
    m
}
pub mod invariants;
