#![allow(dead_code)]

use riccati_spectrum::coeffs::CoefficientSet;

pub fn random_valid_set(seed: u64) -> CoefficientSet<f64> {
    riccati_spectrum::coeffs::reference::sampled_valid_set(seed)
}
