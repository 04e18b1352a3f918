#![allow(dead_code)]

use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tachibana::forms::{BasisLabel, Family, FormBasis, FormField, Phase};
use tachibana::geometry::ManifoldSpec;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn conformal() -> ManifoldSpec {
    ManifoldSpec::conformal_sphere(&[(1, 0, 0.2)])
}

pub fn random_field<'a>(basis: &'a FormBasis, rng: &mut StdRng) -> FormField<'a> {
    let v = DVector::from_fn(basis.len(), |_, _| rng.gen_range(-1.0..1.0));
    FormField::new(basis, v).unwrap()
}

/// Index of the constant torus element carrying frame component `c`.
pub fn constant_element(basis: &FormBasis, c: usize) -> usize {
    basis
        .labels()
        .iter()
        .position(|l| match l {
            BasisLabel::Fourier { freq, phase, component } => {
                freq.iter().all(|&k| k == 0) && *phase == Phase::Cos && *component == c
            }
            _ => false,
        })
        .unwrap()
}

pub fn harmonic_element(basis: &FormBasis, family: Family, l: usize, m: i64) -> usize {
    basis
        .labels()
        .iter()
        .position(|x| *x == BasisLabel::Harmonic { family, l, m })
        .unwrap()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}
