//! Projected online/stochastic subgradient descent.
//!
//! One mechanism serves every training strategy: the chain
//! `w_{t+1} <- Π_B(w_t - η_t ∇f(w_t, z_t))` with a fixed step size. The
//! state keeps running per-block iterate sums so block averages (and the
//! full average) can be read off after a run, and accumulates the observed
//! loss `Σ_t f(w_t, z_t)` for regret accounting. With the horizon-tuned
//! step `η = B/√(2T)` the projected chain guarantees, for any loss sequence
//! and any comparator with `‖w‖ ≤ B`, regret at most `√(2B²T)`.

use crate::error::{Error, Result};
use crate::problem::{Sample, StochasticProblem};
use crate::vector::Vector;

/// Step-size rule for a chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Constant(f64),
    /// `η_t = B / √(2T)` over the chain's own horizon `T`; the choice under
    /// which the `√(2B²T)` regret certificate holds.
    HorizonTuned,
}

#[derive(Clone, Debug)]
pub struct SgdConfig {
    /// Comparator norm bound `B`; also the projection radius.
    pub norm_bound: f64,
    pub step_size: StepSize,
    /// Project each iterate back onto the `B`-ball. On by default: it is
    /// what the regret certificate is stated for.
    pub project: bool,
    /// Starting iterate; all-zeros when absent.
    pub initial: Option<Vector>,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            norm_bound: 1.0,
            step_size: StepSize::HorizonTuned,
            project: true,
            initial: None,
        }
    }
}

impl SgdConfig {
    pub fn with_norm_bound(norm_bound: f64) -> Self {
        SgdConfig {
            norm_bound,
            ..SgdConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.norm_bound > 0.0) || !self.norm_bound.is_finite() {
            return Err(Error::invalid("norm bound B must be positive and finite"));
        }
        if let StepSize::Constant(eta) = self.step_size {
            if !(eta > 0.0) || !eta.is_finite() {
                return Err(Error::invalid("constant step size must be positive"));
            }
        }
        if let Some(w) = &self.initial {
            if !w.is_finite() {
                return Err(Error::invalid("initial iterate must be finite"));
            }
        }
        Ok(())
    }

    /// Resolve the per-step size for a chain with `horizon` total steps.
    pub fn step_size_for(&self, horizon: usize) -> f64 {
        match self.step_size {
            StepSize::Constant(eta) => eta,
            StepSize::HorizonTuned => self.norm_bound / (2.0 * horizon as f64).sqrt(),
        }
    }
}

/// Euclidean projection onto the `B`-ball: `w / max(‖w‖/B, 1)`.
pub fn project(w: &Vector, bound: f64) -> Vector {
    let norm = w.norm();
    if norm <= bound {
        w.clone()
    } else {
        w.scaled(bound / norm)
    }
}

/// State of one subgradient-descent trajectory.
#[derive(Clone, Debug)]
pub struct ChainState {
    iterate: Vector,
    steps: usize,
    horizon: usize,
    eta: f64,
    norm_bound: f64,
    projected: bool,
    block_sums: Vec<Vector>,
    block_counts: Vec<usize>,
    total_sum: Vector,
    cumulative_loss: f64,
}

impl ChainState {
    /// New chain over `blocks` accumulator slots and `horizon` total steps
    /// (the horizon fixes the step size under [`StepSize::HorizonTuned`]).
    pub fn new(dim: usize, blocks: usize, horizon: usize, cfg: &SgdConfig) -> Result<Self> {
        cfg.validate()?;
        if blocks < 1 || horizon < 1 || dim < 1 {
            return Err(Error::invalid("dim, blocks, horizon must all be >= 1"));
        }
        let iterate = match &cfg.initial {
            Some(w) => {
                if w.dim() != dim {
                    return Err(Error::invalid(format!(
                        "initial iterate has dim {}, problem has dim {dim}",
                        w.dim()
                    )));
                }
                w.clone()
            }
            None => Vector::zeros(dim),
        };
        Ok(ChainState {
            iterate,
            steps: 0,
            horizon,
            eta: cfg.step_size_for(horizon),
            norm_bound: cfg.norm_bound,
            projected: cfg.project,
            block_sums: vec![Vector::zeros(dim); blocks],
            block_counts: vec![0; blocks],
            total_sum: Vector::zeros(dim),
            cumulative_loss: 0.0,
        })
    }

    pub fn iterate(&self) -> &Vector {
        &self.iterate
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn step_size(&self) -> f64 {
        self.eta
    }

    pub fn cumulative_loss(&self) -> f64 {
        self.cumulative_loss
    }

    pub fn block_count(&self, block: usize) -> usize {
        self.block_counts[block - 1]
    }

    /// One update on `sample`, charged to accumulator slot `block`
    /// (1-based). The loss and the iterate are recorded *before* the
    /// gradient step: the loss ledger sums `f(w_t, z_t)` at the query
    /// points, and averages run over the `T` query points `w_1..w_T`.
    pub fn step<P: StochasticProblem + ?Sized>(
        &mut self,
        problem: &P,
        sample: &Sample,
        block: usize,
    ) -> Result<()> {
        if block < 1 || block > self.block_sums.len() {
            return Err(Error::invalid(format!(
                "block {block} out of range 1..={}",
                self.block_sums.len()
            )));
        }
        if sample.component != block {
            return Err(Error::invalid(format!(
                "sample from component {} charged to block {block}",
                sample.component
            )));
        }
        let (loss, grad) = problem.loss_and_subgradient(&self.iterate, sample);
        self.cumulative_loss += loss;
        self.block_sums[block - 1].add_assign(&self.iterate);
        self.block_counts[block - 1] += 1;
        self.total_sum.add_assign(&self.iterate);
        if !grad.is_finite() {
            return Err(Error::ChainDiverged {
                step: self.steps + 1,
                norm: self.iterate.norm(),
            });
        }
        self.iterate.axpy(-self.eta, &grad);
        if self.projected {
            self.iterate = project(&self.iterate, self.norm_bound);
        }
        if !self.iterate.is_finite() {
            return Err(Error::ChainDiverged {
                step: self.steps + 1,
                norm: f64::INFINITY,
            });
        }
        self.steps += 1;
        Ok(())
    }

    /// Regret against a fixed comparator: `Σ_t f(w_t, z_t) - Σ_t f(w, z_t)`,
    /// where `replayed_losses[t]` is `f(w, z_t)` for the same sample
    /// sequence the chain consumed.
    pub fn regret_against(&self, comparator: &Vector, replayed_losses: &[f64]) -> Result<f64> {
        if comparator.norm() > self.norm_bound * (1.0 + 1e-12) {
            return Err(Error::invalid(format!(
                "comparator norm {} exceeds bound {}",
                comparator.norm(),
                self.norm_bound
            )));
        }
        if replayed_losses.len() != self.steps {
            return Err(Error::invalid(format!(
                "got {} replayed losses for {} steps",
                replayed_losses.len(),
                self.steps
            )));
        }
        Ok(self.cumulative_loss - replayed_losses.iter().sum::<f64>())
    }

    /// Average of the iterates charged to `block` (1-based).
    pub fn block_average(&self, block: usize) -> Result<Vector> {
        if block < 1 || block > self.block_sums.len() {
            return Err(Error::invalid(format!(
                "block {block} out of range 1..={}",
                self.block_sums.len()
            )));
        }
        let count = self.block_counts[block - 1];
        if count == 0 {
            return Err(Error::invalid(format!("block {block} is empty")));
        }
        Ok(self.block_sums[block - 1].scaled(1.0 / count as f64))
    }

    /// Average over all `t` query points.
    pub fn average(&self) -> Result<Vector> {
        if self.steps == 0 {
            return Err(Error::invalid("chain has taken no steps"));
        }
        Ok(self.total_sum.scaled(1.0 / self.steps as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::Payload;
    use crate::rng::ChaCha8Rng;

    /// Serves a fixed sequence of linear losses f(w, z_t) = <g_t, w>.
    struct LinearSeq {
        dim: usize,
        grads: Vec<Vector>,
    }

    impl StochasticProblem for LinearSeq {
        fn dimension(&self) -> usize {
            self.dim
        }
        fn num_components(&self) -> usize {
            1
        }
        fn sample(&self, component: usize, _rng: &mut ChaCha8Rng) -> Sample {
            Sample::new(component, Payload::Example(0))
        }
        fn loss(&self, w: &Vector, z: &Sample) -> f64 {
            match z.payload {
                Payload::Example(t) => self.grads[t as usize].dot(w),
                _ => unreachable!(),
            }
        }
        fn subgradient(&self, _w: &Vector, z: &Sample) -> Vector {
            match z.payload {
                Payload::Example(t) => self.grads[t as usize].clone(),
                _ => unreachable!(),
            }
        }
    }

    fn e1(dim: usize, s: f64) -> Vector {
        let mut v = Vector::zeros(dim);
        v[0] = s;
        v
    }

    #[test]
    fn projection_examples() {
        let w = Vector::from_vec(vec![3.0, 4.0]);
        assert_eq!(project(&w, 10.0).as_slice(), &[3.0, 4.0]);
        let p = project(&w, 1.0);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        assert_eq!(project(&Vector::zeros(3), 0.5).as_slice(), &[0.0; 3]);
        // idempotence
        let q = project(&p, 1.0);
        assert_eq!(p, q);
    }

    #[test]
    fn horizon_tuned_step_size() {
        let cfg = SgdConfig::with_norm_bound(1.0);
        assert_eq!(cfg.step_size_for(2), 0.5); // 1/sqrt(4)
    }

    #[test]
    fn single_explicit_step() {
        let p = LinearSeq {
            dim: 3,
            grads: vec![e1(3, 1.0)],
        };
        let cfg = SgdConfig {
            norm_bound: 1.0,
            step_size: StepSize::Constant(0.5),
            project: false,
            initial: None,
        };
        let mut chain = ChainState::new(3, 1, 1, &cfg).unwrap();
        let z = Sample::new(1, Payload::Example(0));
        chain.step(&p, &z, 1).unwrap();
        assert_eq!(chain.iterate().as_slice(), &[-0.5, 0.0, 0.0]);
        assert_eq!(chain.cumulative_loss(), 0.0); // loss recorded at w_1 = 0
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let p = LinearSeq {
            dim: 2,
            grads: vec![Vector::zeros(2)],
        };
        let cfg = SgdConfig::default();
        let mut chain = ChainState::new(2, 1, 1, &cfg).unwrap();
        chain.step(&p, &Sample::new(1, Payload::Example(0)), 1).unwrap();
        assert_eq!(chain.iterate().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn non_finite_gradient_reports_divergence() {
        let p = LinearSeq {
            dim: 1,
            grads: vec![Vector::from_vec(vec![f64::NAN])],
        };
        let mut chain = ChainState::new(1, 1, 1, &SgdConfig::default()).unwrap();
        let err = chain
            .step(&p, &Sample::new(1, Payload::Example(0)), 1)
            .unwrap_err();
        match err {
            Error::ChainDiverged { step, .. } => assert_eq!(step, 1),
            other => panic!("expected ChainDiverged, got {other}"),
        }
    }

    #[test]
    fn alternating_adversary_regret_within_certificate() {
        // f_t(w) = <±e1, w> alternating; any comparator sums to zero, so the
        // regret is just the chain's own cumulative loss.
        let t_total = 100;
        let grads: Vec<Vector> = (0..t_total)
            .map(|t| e1(1, if t % 2 == 0 { -1.0 } else { 1.0 }))
            .collect();
        let p = LinearSeq { dim: 1, grads };
        let cfg = SgdConfig::with_norm_bound(1.0);
        let mut chain = ChainState::new(1, 1, t_total, &cfg).unwrap();
        for t in 0..t_total {
            chain
                .step(&p, &Sample::new(1, Payload::Example(t as u32)), 1)
                .unwrap();
        }
        let comparator = Vector::zeros(1);
        let replayed = vec![0.0; t_total];
        let regret = chain.regret_against(&comparator, &replayed).unwrap();
        assert!(regret <= (2.0 * t_total as f64).sqrt());
        assert!(regret >= 0.0);
    }

    #[test]
    fn regret_contract_checks() {
        let p = LinearSeq {
            dim: 1,
            grads: vec![e1(1, 1.0)],
        };
        let mut chain = ChainState::new(1, 1, 1, &SgdConfig::default()).unwrap();
        chain.step(&p, &Sample::new(1, Payload::Example(0)), 1).unwrap();
        // single-sample run: regret = f(w1, z1) - f(w, z1)
        let w = Vector::from_vec(vec![0.5]);
        let regret = chain.regret_against(&w, &[0.5]).unwrap();
        assert_eq!(regret, -0.5);
        assert!(chain.regret_against(&w, &[0.5, 0.5]).is_err());
        let too_big = Vector::from_vec(vec![2.0]);
        assert!(chain.regret_against(&too_big, &[0.5]).is_err());
    }

    #[test]
    fn block_average_examples() {
        let p = LinearSeq {
            dim: 2,
            grads: vec![Vector::from_vec(vec![-1.0, 0.0]); 2],
        };
        let cfg = SgdConfig {
            norm_bound: 10.0,
            step_size: StepSize::Constant(1.0),
            project: false,
            initial: None,
        };
        let mut chain = ChainState::new(2, 1, 2, &cfg).unwrap();
        for t in 0..2 {
            chain
                .step(&p, &Sample::new(1, Payload::Example(t)), 1)
                .unwrap();
        }
        // query points were (0,0) and (1,0)
        let avg = chain.block_average(1).unwrap();
        assert_eq!(avg.as_slice(), &[0.5, 0.0]);
        // with one block, block average and full average coincide exactly
        assert_eq!(chain.average().unwrap(), avg);
        assert!(chain.block_average(2).is_err());
    }

    #[test]
    fn empty_block_is_an_error() {
        let chain = ChainState::new(2, 3, 5, &SgdConfig::default()).unwrap();
        assert!(chain.block_average(1).is_err());
    }

    #[test]
    fn sample_block_mismatch_rejected() {
        let p = LinearSeq {
            dim: 1,
            grads: vec![e1(1, 1.0)],
        };
        let mut chain = ChainState::new(1, 2, 2, &SgdConfig::default()).unwrap();
        let err = chain
            .step(&p, &Sample::new(2, Payload::Example(0)), 1)
            .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }
}
