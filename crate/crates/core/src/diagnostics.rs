//! Numeric spot checks for problem contracts: convexity along random
//! chords, subgradient norm bounds, and basis orthonormality. These back
//! the invariants that tasks advertise but the type system cannot enforce.

use rand::Rng;

use crate::problem::StochasticProblem;
use crate::rng::ChaCha8Rng;
use crate::vector::Vector;

fn random_point(dim: usize, radius: f64, rng: &mut ChaCha8Rng) -> Vector {
    Vector::from_vec(
        (0..dim)
            .map(|_| rng.gen_range(-1.0..1.0) * radius / (dim as f64).sqrt())
            .collect(),
    )
}

/// Largest violation of `f(λu + (1-λ)v, z) <= λf(u, z) + (1-λ)f(v, z)` over
/// random chords and samples. Non-positive (up to roundoff) for convex
/// losses.
pub fn convexity_chord_violation<P: StochasticProblem + ?Sized>(
    problem: &P,
    trials: usize,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let dim = problem.dimension();
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..trials {
        let component = 1 + trial % problem.num_components();
        let z = problem.sample(component, rng);
        let u = random_point(dim, radius, rng);
        let v = random_point(dim, radius, rng);
        let lambda: f64 = rng.gen_range(0.0..1.0);
        let mut mid = u.scaled(lambda);
        mid.axpy(1.0 - lambda, &v);
        let chord = lambda * problem.loss(&u, &z) + (1.0 - lambda) * problem.loss(&v, &z);
        worst = worst.max(problem.loss(&mid, &z) - chord);
    }
    worst
}

/// Largest subgradient norm observed at random `(w, z)` pairs with
/// `‖w‖ <= radius`.
pub fn max_subgradient_norm<P: StochasticProblem + ?Sized>(
    problem: &P,
    trials: usize,
    radius: f64,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let dim = problem.dimension();
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let component = 1 + trial % problem.num_components();
        let z = problem.sample(component, rng);
        let w = random_point(dim, radius, rng);
        worst = worst.max(problem.subgradient(&w, &z).norm());
    }
    worst
}

/// Largest deviation of `<v_r, v_s>` from `δ_rs` over a set of vectors.
pub fn orthonormality_violation(vectors: &[Vector]) -> f64 {
    let mut worst = 0.0f64;
    for (r, vr) in vectors.iter().enumerate() {
        for (s, vs) in vectors.iter().enumerate() {
            let target = if r == s { 1.0 } else { 0.0 };
            worst = worst.max((vr.dot(vs) - target).abs());
        }
    }
    worst
}
