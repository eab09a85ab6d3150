//! Numerical experiments shared by the integration tests and the acceptance
//! report.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use runtumble::pathway::{
    family_coefficients, relative_consistency_residual, CoefficientSet, FamilyParams,
};
use runtumble::rng::ParticleStream;
use runtumble::sde::{BoundaryPolicy, Scheme, StepScheme};
use runtumble::statistics::{ordinary_least_squares, EquilibriumSampler};

pub fn case_one() -> FamilyParams {
    FamilyParams::new(-0.5, 1.1, 2.0, 200.0).unwrap()
}

/// Worst relative consistency residual and worst relative gap between `D`
/// and `Σ²/2`, over `pairs` random `(θ, n)` and `points` interior activities.
pub fn residual_sweep(pairs: usize, points: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst, mut worst_d) = (0.0_f64, 0.0_f64);
    for _ in 0..pairs {
        let theta = rng.random_range(-0.95..1.5);
        let n = rng.random_range(0.0..2.5);
        let beta = rng.random_range(0.5..4.0);
        let f = FamilyParams::new(theta, n, beta, rng.random_range(1.0..500.0)).unwrap();
        let c = family_coefficients(&f).unwrap();
        for k in 1..=points {
            let a = k as f64 / (points + 1) as f64;
            worst = worst.max(relative_consistency_residual(&c, a).unwrap());
            let s = c.noise(a);
            worst_d = worst_d.max((c.diffusion(a) - 0.5 * s * s).abs() / c.diffusion(a));
        }
    }
    (worst, worst_d)
}

pub struct OrderStudy {
    pub steps: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
}

/// Strong self-convergence on the Case I activity SDE from `a = 0.5`.
///
/// Each path draws one set of fine increments at the reference step
/// `0.8/256`; coarser paths sum them, so all resolutions see the same
/// Brownian motion. The order is the log-log slope of `E|a_Δt(T) − a_ref(T)|`.
pub fn strong_order(scheme: Scheme, paths: usize, seed: u64) -> OrderStudy {
    let c = family_coefficients(&case_one()).unwrap();
    let horizon = 12.8;
    let coarsest = 0.8;
    let ratio = 256usize;
    let dt_ref = coarsest / ratio as f64;
    let fine_steps = (horizon / dt_ref).round() as usize;
    let multiples = [256usize, 128, 64, 32, 16];
    let reference = StepScheme::new(Scheme::Milstein, dt_ref).unwrap();
    let policy = BoundaryPolicy::Reflect;
    let mut sums = vec![0.0; multiples.len()];
    let mut increments = vec![0.0; fine_steps];
    for p in 0..paths {
        let mut stream = ParticleStream::new(seed, p as u64);
        for d in increments.iter_mut() {
            *d = stream.standard_normal() * dt_ref.sqrt();
        }
        let mut a_ref = 0.5;
        for &d in &increments {
            a_ref = reference.step(&c, a_ref, d, policy).unwrap();
        }
        for (slot, &m) in sums.iter_mut().zip(&multiples) {
            let stepper = StepScheme::new(scheme, dt_ref * m as f64).unwrap();
            let mut a = 0.5;
            for chunk in increments.chunks(m) {
                a = stepper.step(&c, a, chunk.iter().sum(), policy).unwrap();
            }
            *slot += (a - a_ref).abs();
        }
    }
    let steps: Vec<f64> = multiples.iter().map(|&m| dt_ref * m as f64).collect();
    let errors: Vec<f64> = sums.iter().map(|s| s / paths as f64).collect();
    let lx: Vec<f64> = steps.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|x| x.ln()).collect();
    let order = ordinary_least_squares(&lx, &ly).unwrap().slope;
    OrderStudy {
        steps,
        errors,
        order,
    }
}

/// Activities drawn from the equilibrium of `f` and evolved by the SDE alone.
pub fn evolve_from_equilibrium(
    f: &FamilyParams,
    samples: usize,
    horizon: f64,
    dt: f64,
    seed: u64,
) -> Vec<f64> {
    let c = family_coefficients(f).unwrap();
    let sampler = EquilibriumSampler::new(f).unwrap();
    let stepper = StepScheme::new(Scheme::Milstein, dt).unwrap();
    let steps = (horizon / dt).round() as usize;
    (0..samples)
        .map(|i| {
            let mut stream = ParticleStream::new(seed, i as u64);
            let mut a = sampler.sample(&mut stream);
            for _ in 0..steps {
                let d_b = stream.standard_normal() * dt.sqrt();
                a = stepper.step(&c, a, d_b, BoundaryPolicy::Reflect).unwrap();
            }
            a
        })
        .collect()
}

/// Log-log slope of the interquartile width between two times.
pub fn width_exponent(mu: f64) -> f64 {
    use runtumble::limit_theory::{solve_fractional_heat, FractionalField};
    let init = FractionalField::point_mass(2000.0, 1 << 17).unwrap();
    let (t1, t2) = (10.0, 100.0);
    let w1 = solve_fractional_heat(&init, 1.0, mu, t1)
        .unwrap()
        .interquartile_range();
    let w2 = solve_fractional_heat(&init, 1.0, mu, t2)
        .unwrap()
        .interquartile_range();
    (w2 / w1).ln() / (t2 / t1).ln()
}
