//! The abstract stochastic problem: a convex instantaneous objective
//! `f(w, z)` with subgradient access and one sample source per mixture
//! component. The mixture weights are uniform.

use crate::error::{Error, Result};
use crate::rng::ChaCha8Rng;
use crate::vector::Vector;

/// Problem-specific datum carried by a sample.
#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    /// The component tag itself is the datum (deterministic instances).
    Component,
    /// A scalar observation.
    Scalar(f64),
    /// Index of a single stored example.
    Example(u32),
    /// Indices of a minibatch of stored examples; the subgradient is the
    /// minibatch mean and the schedule counts minibatches, not examples.
    Minibatch(Vec<u32>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// Mixture component this sample was drawn from, 1-based.
    pub component: usize,
    pub payload: Payload,
}

impl Sample {
    pub fn new(component: usize, payload: Payload) -> Self {
        Sample { component, payload }
    }
}

/// A convex stochastic optimization problem over `m` component
/// distributions.
///
/// Implementations promise `loss(·, z)` convex in `w` for every `z`, and
/// tasks that advertise a Lipschitz bound keep `‖subgradient‖` within it.
/// Both properties are exercised by the checks in [`crate::diagnostics`].
pub trait StochasticProblem {
    fn dimension(&self) -> usize;

    fn num_components(&self) -> usize;

    /// Draw one sample from component `i` (1-based).
    fn sample(&self, component: usize, rng: &mut ChaCha8Rng) -> Sample;

    /// Draw the sample for cycle `k`, component `i`, within-block position
    /// `j` (all 1-based). Defaults to the stationary `sample`; tasks whose
    /// data is divided across cycles override this.
    fn sample_at(
        &self,
        _cycle: usize,
        component: usize,
        _position: usize,
        rng: &mut ChaCha8Rng,
    ) -> Sample {
        self.sample(component, rng)
    }

    fn loss(&self, w: &Vector, z: &Sample) -> f64;

    fn subgradient(&self, w: &Vector, z: &Sample) -> Vector;

    /// Loss and subgradient in one pass; override when one evaluation can
    /// serve both.
    fn loss_and_subgradient(&self, w: &Vector, z: &Sample) -> (f64, Vector) {
        (self.loss(w, z), self.subgradient(w, z))
    }

    /// Exact expected loss on component `i`, when the component has finite
    /// support and the expectation can be computed without sampling noise.
    fn exact_component_risk(&self, _component: usize, _w: &Vector) -> Option<f64> {
        None
    }

    /// A known minimizer of the mixture objective, when available.
    fn reference_optimum(&self) -> Option<Vector> {
        None
    }
}

fn check_component<P: StochasticProblem + ?Sized>(problem: &P, component: usize) -> Result<()> {
    if component < 1 || component > problem.num_components() {
        return Err(Error::invalid(format!(
            "component {component} out of range 1..={}",
            problem.num_components()
        )));
    }
    Ok(())
}

/// Expected loss of `w` on component `i`: exact for finite-support
/// components, otherwise a Monte-Carlo estimate with `eval_budget` draws.
pub fn component_risk<P: StochasticProblem + ?Sized>(
    problem: &P,
    component: usize,
    w: &Vector,
    eval_budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    check_component(problem, component)?;
    if let Some(exact) = problem.exact_component_risk(component, w) {
        return Ok(exact);
    }
    if eval_budget < 1 {
        return Err(Error::invalid("eval_budget must be >= 1"));
    }
    let mut total = 0.0;
    for _ in 0..eval_budget {
        let z = problem.sample(component, rng);
        total += problem.loss(w, &z);
    }
    Ok(total / eval_budget as f64)
}

/// The mixture objective `F(w) = (1/m) Σ_i E_{z~D_i}[f(w, z)]`.
pub fn mixture_objective<P: StochasticProblem + ?Sized>(
    problem: &P,
    w: &Vector,
    eval_budget: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let m = problem.num_components();
    let mut total = 0.0;
    for i in 1..=m {
        total += component_risk(problem, i, w, eval_budget, rng)?;
    }
    Ok(total / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    /// Scalar problem with a single finite-support component: f(w, z) = |w - z|.
    struct OnePoint {
        z: f64,
    }

    impl StochasticProblem for OnePoint {
        fn dimension(&self) -> usize {
            1
        }
        fn num_components(&self) -> usize {
            1
        }
        fn sample(&self, component: usize, _rng: &mut ChaCha8Rng) -> Sample {
            Sample::new(component, Payload::Scalar(self.z))
        }
        fn loss(&self, w: &Vector, z: &Sample) -> f64 {
            match z.payload {
                Payload::Scalar(v) => (w[0] - v).abs(),
                _ => unreachable!(),
            }
        }
        fn subgradient(&self, w: &Vector, z: &Sample) -> Vector {
            match z.payload {
                Payload::Scalar(v) => Vector::from_vec(vec![(w[0] - v).signum()]),
                _ => unreachable!(),
            }
        }
        fn exact_component_risk(&self, _component: usize, w: &Vector) -> Option<f64> {
            Some((w[0] - self.z).abs())
        }
    }

    #[test]
    fn single_component_mixture_is_component_risk() {
        let p = OnePoint { z: 0.25 };
        let w = Vector::from_vec(vec![1.0]);
        let mut r = rng::master(0);
        let fx = mixture_objective(&p, &w, 1, &mut r).unwrap();
        assert_eq!(fx, 0.75);
    }

    #[test]
    fn rejects_bad_component_and_budget() {
        struct NoSupport;
        impl StochasticProblem for NoSupport {
            fn dimension(&self) -> usize {
                1
            }
            fn num_components(&self) -> usize {
                1
            }
            fn sample(&self, component: usize, _rng: &mut ChaCha8Rng) -> Sample {
                Sample::new(component, Payload::Scalar(0.0))
            }
            fn loss(&self, _w: &Vector, _z: &Sample) -> f64 {
                0.0
            }
            fn subgradient(&self, w: &Vector, _z: &Sample) -> Vector {
                Vector::zeros(w.dim())
            }
        }
        let p = NoSupport;
        let w = Vector::zeros(1);
        let mut r = rng::master(0);
        assert!(component_risk(&p, 2, &w, 1, &mut r).is_err());
        assert!(component_risk(&p, 1, &w, 0, &mut r).is_err());
    }
}
