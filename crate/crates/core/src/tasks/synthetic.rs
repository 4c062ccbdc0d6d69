//! Scalar tasks with explicit finite support, so component risks are exact.

use rand::Rng;

use crate::error::{Error, Result};
use crate::problem::{Payload, Sample, StochasticProblem};
use crate::rng::ChaCha8Rng;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarLoss {
    /// `f(w, z) = |w - z| · s`. Scaled so `|f| ≤ B` on the `B`-ball, which
    /// also certifies the hedging loss bound.
    Absolute,
    /// `f(w, z) = (w - z)² / (2c)` with `c = B + max|z|`; 1-Lipschitz on
    /// the ball.
    Quadratic,
}

/// One-dimensional problem; component `i` draws from a finite support of
/// `(value, probability)` pairs.
#[derive(Clone, Debug)]
pub struct FiniteScalarTask {
    kind: ScalarLoss,
    supports: Vec<Vec<(f64, f64)>>,
    norm_bound: f64,
    scale: f64,
}

impl FiniteScalarTask {
    pub fn new(kind: ScalarLoss, supports: Vec<Vec<(f64, f64)>>, norm_bound: f64) -> Result<Self> {
        if supports.is_empty() {
            return Err(Error::invalid("need at least one component"));
        }
        if !(norm_bound > 0.0) {
            return Err(Error::invalid("norm bound must be positive"));
        }
        let mut max_abs = 0.0f64;
        for support in &supports {
            if support.is_empty() {
                return Err(Error::invalid("component support must be non-empty"));
            }
            let total: f64 = support.iter().map(|(_, p)| *p).sum();
            if (total - 1.0).abs() > 1e-9 || support.iter().any(|(_, p)| *p < 0.0) {
                return Err(Error::invalid("support probabilities must sum to 1"));
            }
            for (z, _) in support {
                if !z.is_finite() {
                    return Err(Error::invalid("support values must be finite"));
                }
                max_abs = max_abs.max(z.abs());
            }
        }
        let scale = match kind {
            // |w - z| <= B + max|z|; dividing by (B + max|z|)/B caps the
            // loss at B and the subgradient at B/(B + max|z|) < 1
            ScalarLoss::Absolute => norm_bound / (norm_bound + max_abs),
            ScalarLoss::Quadratic => 1.0 / (norm_bound + max_abs),
        };
        Ok(FiniteScalarTask {
            kind,
            supports,
            norm_bound,
            scale,
        })
    }

    /// Identical components: the block-cyclic stream is i.i.d. in disguise.
    pub fn identical(
        kind: ScalarLoss,
        support: Vec<(f64, f64)>,
        components: usize,
        norm_bound: f64,
    ) -> Result<Self> {
        FiniteScalarTask::new(kind, vec![support; components], norm_bound)
    }

    pub fn norm_bound(&self) -> f64 {
        self.norm_bound
    }

    pub fn loss_scale(&self) -> f64 {
        self.scale
    }

    fn point_loss(&self, w: f64, z: f64) -> f64 {
        match self.kind {
            ScalarLoss::Absolute => (w - z).abs() * self.scale,
            ScalarLoss::Quadratic => (w - z) * (w - z) * self.scale / 2.0,
        }
    }

    fn point_grad(&self, w: f64, z: f64) -> f64 {
        match self.kind {
            ScalarLoss::Absolute => (w - z).signum() * self.scale,
            ScalarLoss::Quadratic => (w - z) * self.scale,
        }
    }
}

impl StochasticProblem for FiniteScalarTask {
    fn dimension(&self) -> usize {
        1
    }

    fn num_components(&self) -> usize {
        self.supports.len()
    }

    fn sample(&self, component: usize, rng: &mut ChaCha8Rng) -> Sample {
        let support = &self.supports[component - 1];
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (z, p) in support {
            acc += p;
            if u < acc {
                return Sample::new(component, Payload::Scalar(*z));
            }
        }
        Sample::new(component, Payload::Scalar(support.last().unwrap().0))
    }

    fn loss(&self, w: &Vector, z: &Sample) -> f64 {
        match z.payload {
            Payload::Scalar(v) => self.point_loss(w[0], v),
            _ => panic!("scalar task got a non-scalar payload"),
        }
    }

    fn subgradient(&self, w: &Vector, z: &Sample) -> Vector {
        match z.payload {
            Payload::Scalar(v) => Vector::from_vec(vec![self.point_grad(w[0], v)]),
            _ => panic!("scalar task got a non-scalar payload"),
        }
    }

    fn exact_component_risk(&self, component: usize, w: &Vector) -> Option<f64> {
        Some(
            self.supports[component - 1]
                .iter()
                .map(|(z, p)| p * self.point_loss(w[0], *z))
                .sum(),
        )
    }
}
