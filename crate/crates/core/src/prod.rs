//! The Prod experts algorithm with a fixed anchor expert.
//!
//! Experts are indexed `0..=K` where expert 0 is the *anchor*: its weight is
//! never updated, and the algorithm guarantees constant regret `1 + η`
//! against it. Non-anchor weights follow the multiplicative rule
//! `q^j <- q^j · (1 + η(ℓ(0) - ℓ(j)))`, which keeps every weight strictly
//! positive as long as `η ≤ 1/(4M)` and all losses stay in `[-M, M]`.
//! Against any fixed expert `j` the regret is at most
//! `4ηM²T + (1/η)·ln(K/η)`.
//!
//! Weights are stored in the log domain; multiplicative updates over long
//! horizons would otherwise overflow `f64`.

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct ProdState {
    /// `ln q^j`, index 0 is the anchor.
    log_weights: Vec<f64>,
    rate: f64,
    loss_bound: f64,
}

impl ProdState {
    /// `experts` non-anchor experts with rate `η` and loss bound `M`.
    /// Initial weights are `q^0 = 1 - η` and `q^j = η / experts`.
    pub fn new(experts: usize, rate: f64, loss_bound: f64) -> Result<Self> {
        if experts < 1 {
            return Err(Error::invalid("need at least one non-anchor expert"));
        }
        if !(loss_bound > 0.0) || !loss_bound.is_finite() {
            return Err(Error::invalid("loss bound M must be positive"));
        }
        if !(rate > 0.0) || rate > 1.0 / (4.0 * loss_bound) {
            return Err(Error::ContractViolation(format!(
                "rate must satisfy 0 < eta <= 1/(4M) = {}, got {rate}",
                1.0 / (4.0 * loss_bound)
            )));
        }
        let mut log_weights = vec![(rate / experts as f64).ln(); experts + 1];
        log_weights[0] = (1.0 - rate).ln();
        Ok(ProdState {
            log_weights,
            rate,
            loss_bound,
        })
    }

    /// The tuned rate `η = (1/2M)·√(ln(K·M·T)/T)` for horizon `T`.
    pub fn corollary_rate(experts: usize, loss_bound: f64, horizon: usize) -> f64 {
        let k = experts as f64;
        let t = horizon as f64;
        (k * loss_bound * t).ln().sqrt() / (2.0 * loss_bound * t.sqrt())
    }

    pub fn num_experts(&self) -> usize {
        self.log_weights.len() - 1
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn loss_bound(&self) -> f64 {
        self.loss_bound
    }

    /// Linear-domain weights `q^j`. May overflow to infinity after extreme
    /// histories; prefer [`ProdState::mixing_probabilities`] for decisions.
    pub fn weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|lw| lw.exp()).collect()
    }

    /// `p^j = q^j / Σ q`, computed stably in the log domain.
    pub fn mixing_probabilities(&self) -> Vec<f64> {
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let shifted: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = shifted.iter().sum();
        shifted.into_iter().map(|x| x / total).collect()
    }

    /// Probability-weighted loss `Σ_j p^j ℓ(j)` for this round.
    pub fn expected_loss(&self, losses: &[f64]) -> Result<f64> {
        if losses.len() != self.log_weights.len() {
            return Err(Error::invalid(format!(
                "expected {} losses, got {}",
                self.log_weights.len(),
                losses.len()
            )));
        }
        Ok(self
            .mixing_probabilities()
            .iter()
            .zip(losses)
            .map(|(p, l)| p * l)
            .sum())
    }

    /// Multiplicative update from one round of losses `ℓ(0..=K)`. The anchor
    /// weight is left untouched.
    pub fn update(&mut self, losses: &[f64]) -> Result<()> {
        if losses.len() != self.log_weights.len() {
            return Err(Error::invalid(format!(
                "expected {} losses, got {}",
                self.log_weights.len(),
                losses.len()
            )));
        }
        let m = self.loss_bound * (1.0 + 1e-12);
        if let Some(l) = losses.iter().find(|l| l.abs() > m || !l.is_finite()) {
            return Err(Error::ContractViolation(format!(
                "loss {l} exceeds the declared bound M = {}",
                self.loss_bound
            )));
        }
        let anchor = losses[0];
        for (j, lw) in self.log_weights.iter_mut().enumerate().skip(1) {
            let gap = anchor - losses[j];
            // eta*|gap| <= 1/2 by the rate precondition, so 1 + eta*gap > 0
            *lw += (self.rate * gap).ln_1p();
        }
        Ok(())
    }
}
