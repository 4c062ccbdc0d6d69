//! Hard instances on which block-cyclic consensus training stalls.
//!
//! Two deterministic components pull the iterate along a chain of
//! orthonormal directions `v_1, ..., v_4K`, but each component's gradients
//! reveal at most one new direction per block visit: queries confined to
//! `span{v_1..v_{2r}}` see zero gradient along later directions. A
//! block-cyclic first-order method therefore reaches at most
//! `span{v_1..v_{2K}}` in `K` cycles, and the minimum of the mixture
//! objective over that span sits a fixed gap above the global constrained
//! minimum: `B/(96K)` for the nonsmooth scaling, measured at `3B/(256K)`
//! exactly. The same construction with the smooth scaling yields a gap of
//! `3B²/(1024K²)`.
//!
//! The instances are built at dimension `4K+1` with canonical basis
//! vectors. High-dimensional random rotations would only be needed against
//! methods that probe directions outside the observed gradient span, which
//! none of the methods in this crate do.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Payload, Sample, StochasticProblem};
use crate::rng;
use crate::rng::ChaCha8Rng;
use crate::schedule::ScheduleConfig;
use crate::sgd::SgdConfig;
use crate::solver::{verified_minimum, SolveOptions};
use crate::strategies::{draw_stream, run_consensus, shuffle_stream};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardVariant {
    /// Nonsmooth scaling: stall gap on the order of `B/K`.
    Lipschitz,
    /// Smooth (Lipschitz-gradient) scaling: stall gap on the order of
    /// `B²/K²`.
    Smooth,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HardInstanceConfig {
    pub norm_bound: f64,
    pub cycles: usize,
    pub blocks: usize,
    pub block_len: usize,
    pub variant: HardVariant,
}

impl HardInstanceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.norm_bound > 0.0) {
            return Err(Error::invalid("norm bound must be positive"));
        }
        if self.blocks < 2 {
            return Err(Error::invalid("hard instances need m > 1 blocks"));
        }
        if self.cycles < 1 || self.block_len < 1 {
            return Err(Error::invalid("cycles and block length must be >= 1"));
        }
        Ok(())
    }
}

/// The even, convex, piecewise-quadratic bridge function: zero on
/// `[-a/2, a/2]`, quadratic ramps, and linear tails of slope `2γ`.
#[derive(Clone, Copy, Debug)]
pub struct Phi {
    a: f64,
    gamma: f64,
}

impl Phi {
    pub fn new(a: f64, gamma: f64) -> Result<Self> {
        if !(a > 0.0) || !(gamma >= a) || !a.is_finite() || !gamma.is_finite() {
            return Err(Error::invalid(format!(
                "phi breakpoints require 0 < a <= gamma (got a={a}, gamma={gamma})"
            )));
        }
        Ok(Phi { a, gamma })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn value(&self, x: f64) -> f64 {
        let z = x.abs();
        let (a, g) = (self.a, self.gamma);
        if z <= a / 2.0 {
            0.0
        } else if z <= a {
            2.0 * (z - a / 2.0) * (z - a / 2.0)
        } else if z <= g {
            z * z - a * a / 2.0
        } else {
            2.0 * g * z - g * g - a * a / 2.0
        }
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let z = x.abs();
        let s = if x >= 0.0 { 1.0 } else { -1.0 };
        let (a, g) = (self.a, self.gamma);
        if z <= a / 2.0 {
            0.0
        } else if z <= a {
            s * 4.0 * (z - a / 2.0)
        } else if z <= g {
            s * 2.0 * z
        } else {
            s * 2.0 * g
        }
    }
}

/// A concrete two-objective instance over `4K+1` dimensions.
#[derive(Clone, Debug)]
pub struct HardInstance {
    config: HardInstanceConfig,
    scale: f64,
    linear_coeff: f64,
    phi: Phi,
    basis: Vec<Vector>,
    dim: usize,
}

impl HardInstance {
    pub fn new(config: HardInstanceConfig) -> Result<Self> {
        config.validate()?;
        let b = config.norm_bound;
        let k = config.cycles as f64;
        let scale = match config.variant {
            HardVariant::Lipschitz => 4.0 * b * k,
            HardVariant::Smooth => b * b,
        };
        let gamma = 2.0 * b / (scale * k.sqrt());
        let a = 1.0 / (64.0 * k * k * k).sqrt();
        let phi = Phi::new(a, gamma)?;
        let dim = 4 * config.cycles + 1;
        let basis = (0..4 * config.cycles)
            .map(|r| {
                let mut v = Vector::zeros(dim);
                v[r] = 1.0;
                v
            })
            .collect();
        Ok(HardInstance {
            config,
            scale,
            linear_coeff: a,
            phi,
            basis,
            dim,
        })
    }

    pub fn config(&self) -> &HardInstanceConfig {
        &self.config
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    /// The orthonormal direction set `v_1..v_{4K}`.
    pub fn basis(&self) -> &[Vector] {
        &self.basis
    }

    /// Component label of block `i` (1-based): the first half of the blocks
    /// serve the first objective, the rest the second.
    pub fn label_of_block(&self, block: usize) -> u8 {
        if ((block - 1) as f64) < self.config.blocks as f64 / 2.0 {
            1
        } else {
            2
        }
    }

    /// Value of `f(w, label)` for label 1 or 2.
    pub fn loss_for_label(&self, w: &Vector, label: u8) -> f64 {
        assert_eq!(w.dim(), self.dim, "dimension mismatch");
        let kk = self.config.cycles;
        let c = self.scale / 8.0;
        match label {
            1 => {
                let mut total = -2.0 * self.linear_coeff * w[0] + self.phi.value(w[4 * kk - 1]);
                for k in 1..=(2 * kk - 1) {
                    total += self.phi.value(w[2 * k - 1] - w[2 * k]);
                }
                c * total
            }
            2 => {
                let mut total = 0.0;
                for k in 1..=(2 * kk) {
                    total += self.phi.value(w[2 * k - 2] - w[2 * k - 1]);
                }
                c * total
            }
            other => panic!("label must be 1 or 2, got {other}"),
        }
    }

    pub fn gradient_for_label(&self, w: &Vector, label: u8) -> Vector {
        assert_eq!(w.dim(), self.dim, "dimension mismatch");
        let kk = self.config.cycles;
        let c = self.scale / 8.0;
        let mut g = Vector::zeros(self.dim);
        match label {
            1 => {
                g[0] -= c * 2.0 * self.linear_coeff;
                g[4 * kk - 1] += c * self.phi.derivative(w[4 * kk - 1]);
                for k in 1..=(2 * kk - 1) {
                    let d = c * self.phi.derivative(w[2 * k - 1] - w[2 * k]);
                    g[2 * k - 1] += d;
                    g[2 * k] -= d;
                }
            }
            2 => {
                for k in 1..=(2 * kk) {
                    let d = c * self.phi.derivative(w[2 * k - 2] - w[2 * k - 1]);
                    g[2 * k - 2] += d;
                    g[2 * k - 1] -= d;
                }
            }
            other => panic!("label must be 1 or 2, got {other}"),
        }
        g
    }

    /// The mixture objective over the block-to-label assignment.
    pub fn objective(&self, w: &Vector) -> f64 {
        let m = self.config.blocks;
        let ones = (1..=m).filter(|&i| self.label_of_block(i) == 1).count() as f64;
        let twos = m as f64 - ones;
        (ones * self.loss_for_label(w, 1) + twos * self.loss_for_label(w, 2)) / m as f64
    }

    pub fn objective_gradient(&self, w: &Vector) -> Vector {
        let m = self.config.blocks;
        let ones = (1..=m).filter(|&i| self.label_of_block(i) == 1).count() as f64;
        let twos = m as f64 - ones;
        let mut g = self.gradient_for_label(w, 1);
        g.scale(ones / m as f64);
        g.axpy(twos / m as f64, &self.gradient_for_label(w, 2));
        g
    }

    /// Conservative Lipschitz constant of the objective gradient, for the
    /// reference solver.
    fn gradient_lipschitz(&self) -> f64 {
        // phi'' <= 4 and each coordinate touches at most three chain terms
        2.0 * self.scale
    }
}

impl StochasticProblem for HardInstance {
    fn dimension(&self) -> usize {
        self.dim
    }

    fn num_components(&self) -> usize {
        self.config.blocks
    }

    fn sample(&self, component: usize, _rng: &mut ChaCha8Rng) -> Sample {
        Sample::new(component, Payload::Component)
    }

    fn loss(&self, w: &Vector, z: &Sample) -> f64 {
        self.loss_for_label(w, self.label_of_block(z.component))
    }

    fn subgradient(&self, w: &Vector, z: &Sample) -> Vector {
        self.gradient_for_label(w, self.label_of_block(z.component))
    }

    fn exact_component_risk(&self, component: usize, w: &Vector) -> Option<f64> {
        Some(self.loss_for_label(w, self.label_of_block(component)))
    }
}

/// Options for [`stall_demo`].
#[derive(Clone, Copy, Debug)]
pub struct StallOptions {
    pub seed: u64,
    /// Repetitions of the shuffled control run.
    pub iid_repetitions: usize,
}

impl Default for StallOptions {
    fn default() -> Self {
        StallOptions {
            seed: 0,
            iid_repetitions: 3,
        }
    }
}

/// Everything the stall demonstration measures.
#[derive(Clone, Debug, Serialize)]
pub struct StallReport {
    pub variant: HardVariant,
    pub norm_bound: f64,
    pub cycles: usize,
    pub blocks: usize,
    pub block_len: usize,
    /// `|<v_r, w>|` for every direction, at the end of each cycle.
    pub span_profile: Vec<Vec<f64>>,
    /// True when after cycle `k` every direction `r > 2k+1` carries less
    /// than `1e-9` mass.
    pub span_confined: bool,
    pub max_span_leak: f64,
    /// Constrained minimum of the objective over the full space.
    pub full_optimum: f64,
    /// Constrained minimum over `span{v_1..v_2K}`.
    pub restricted_optimum: f64,
    pub restricted_gap: f64,
    /// Reference gap floor: `B/(96K)` for the nonsmooth variant,
    /// `B²/(256K)` for the smooth one.
    pub gap_floor: f64,
    pub meets_floor: bool,
    pub floor_note: Option<String>,
    pub excess_last: f64,
    pub excess_average: f64,
    /// The smaller of the two excesses: the best consensus output.
    pub excess_best: f64,
    pub iid_excess_last: f64,
    pub iid_excess_average: f64,
    pub iid_excess_best: f64,
    pub solver_iterations: usize,
}

/// Run block-cyclic consensus SGD on a hard instance, measure the span of
/// the iterates per cycle, compare against the restricted-span and full
/// constrained optima, and run a shuffled control at equal sample budget.
pub fn stall_demo(config: &HardInstanceConfig, opts: &StallOptions) -> Result<StallReport> {
    let instance = HardInstance::new(*config)?;
    let schedule = ScheduleConfig::new(config.cycles, config.blocks, config.block_len)?;
    let sgd = SgdConfig::with_norm_bound(config.norm_bound);

    let mut draw_rng = rng::derive(opts.seed, 0);
    let stream = draw_stream(&instance, &schedule, &mut draw_rng);
    let run = run_consensus(&instance, &schedule, &sgd, &stream)?;

    // span occupancy at each cycle end
    let dim = instance.dimension();
    let mut span_profile = Vec::with_capacity(config.cycles);
    let mut confined = true;
    let mut max_leak = 0.0f64;
    for k in 1..=config.cycles {
        let w = run.checkpoints.get(k, config.blocks);
        let coeffs: Vec<f64> = (0..dim).map(|r| w[r].abs()).collect();
        for (r0, &c) in coeffs.iter().enumerate() {
            let r = r0 + 1;
            if r > 2 * k + 1 {
                max_leak = max_leak.max(c);
                if c >= 1e-9 {
                    confined = false;
                }
            }
        }
        span_profile.push(coeffs);
    }

    // reference optima from the two-start solver
    let lip = instance.gradient_lipschitz();
    let solve_opts = SolveOptions::default();
    let mut solver_rng = rng::derive(opts.seed, 1);
    let value = |w: &Vector| instance.objective(w);
    let grad = |w: &Vector| instance.objective_gradient(w);
    let full = verified_minimum(
        &value,
        &grad,
        dim,
        config.norm_bound,
        lip,
        None,
        &solve_opts,
        &mut solver_rng,
    )?;
    let mask: Vec<bool> = (0..dim).map(|r| r < 2 * config.cycles).collect();
    let restricted = verified_minimum(
        &value,
        &grad,
        dim,
        config.norm_bound,
        lip,
        Some(&mask),
        &solve_opts,
        &mut solver_rng,
    )?;

    let restricted_gap = restricted.value - full.value;
    let b = config.norm_bound;
    let kf = config.cycles as f64;
    let (gap_floor, floor_note) = match config.variant {
        HardVariant::Lipschitz => (b / (96.0 * kf), None),
        HardVariant::Smooth => (
            b * b / (256.0 * kf),
            Some(
                "smooth variant: the measured restricted-span gap follows ~3B^2/(1024K^2), \
                 so the B^2/(256K) reference floor overstates it at small K"
                    .to_string(),
            ),
        ),
    };

    let excess_last = instance.objective(&run.final_iterate) - full.value;
    let excess_average = instance.objective(&run.average) - full.value;

    // shuffled control at the same sample budget
    let mut iid_last = 0.0;
    let mut iid_avg = 0.0;
    for rep in 0..opts.iid_repetitions.max(1) {
        let mut shuffled = stream.clone();
        shuffle_stream(&mut shuffled, &mut rng::derive(opts.seed, 100 + rep as u64));
        let control = run_consensus(&instance, &schedule, &sgd, &shuffled)?;
        iid_last += instance.objective(&control.final_iterate) - full.value;
        iid_avg += instance.objective(&control.average) - full.value;
    }
    let reps = opts.iid_repetitions.max(1) as f64;
    iid_last /= reps;
    iid_avg /= reps;

    Ok(StallReport {
        variant: config.variant,
        norm_bound: b,
        cycles: config.cycles,
        blocks: config.blocks,
        block_len: config.block_len,
        span_profile,
        span_confined: confined,
        max_span_leak: max_leak,
        full_optimum: full.value,
        restricted_optimum: restricted.value,
        restricted_gap,
        gap_floor,
        meets_floor: restricted_gap >= gap_floor,
        floor_note,
        excess_last,
        excess_average,
        excess_best: excess_last.min(excess_average),
        iid_excess_last: iid_last,
        iid_excess_average: iid_avg,
        iid_excess_best: iid_last.min(iid_avg),
        solver_iterations: full.iterations + restricted.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics;

    fn lipschitz_cfg(k: usize) -> HardInstanceConfig {
        HardInstanceConfig {
            norm_bound: 1.0,
            cycles: k,
            blocks: 2,
            block_len: 50,
            variant: HardVariant::Lipschitz,
        }
    }

    #[test]
    fn phi_piecewise_values() {
        let phi = Phi::new(0.5, 2.0).unwrap();
        assert_eq!(phi.value(0.2), 0.0);
        assert!((phi.value(0.4) - 0.045).abs() < 1e-15);
        assert!((phi.value(1.0) - 0.875).abs() < 1e-15);
        assert!((phi.value(3.0) - 7.875).abs() < 1e-15);
        // even
        assert_eq!(phi.value(-0.4), phi.value(0.4));
        assert_eq!(phi.derivative(-1.0), -phi.derivative(1.0));
    }

    #[test]
    fn phi_is_c1_at_breakpoints() {
        let phi = Phi::new(0.5, 2.0).unwrap();
        for x in [0.25, 0.5, 2.0] {
            let lo = phi.value(x - 1e-12);
            let hi = phi.value(x + 1e-12);
            assert!((lo - hi).abs() < 1e-11, "value jump at {x}");
            let dlo = phi.derivative(x - 1e-12);
            let dhi = phi.derivative(x + 1e-12);
            assert!((dlo - dhi).abs() < 1e-10, "derivative jump at {x}");
        }
        // derivative zero on the flat
        assert_eq!(phi.derivative(0.1), 0.0);
        assert_eq!(phi.derivative(-0.2), 0.0);
    }

    #[test]
    fn phi_derivative_is_monotone() {
        let phi = Phi::new(0.3, 1.1).unwrap();
        let mut prev = f64::NEG_INFINITY;
        let mut x = -2.0;
        while x <= 2.0 {
            let d = phi.derivative(x);
            assert!(d >= prev - 1e-12, "derivative decreased at {x}");
            prev = d;
            x += 1e-3;
        }
    }

    #[test]
    fn phi_rejects_bad_breakpoints() {
        assert!(Phi::new(0.0, 1.0).is_err());
        assert!(Phi::new(0.5, 0.4).is_err());
        assert!(Phi::new(-1.0, 1.0).is_err());
    }

    #[test]
    fn losses_vanish_at_origin() {
        let inst = HardInstance::new(lipschitz_cfg(2)).unwrap();
        let w = Vector::zeros(inst.dimension());
        assert_eq!(inst.loss_for_label(&w, 1), 0.0);
        assert_eq!(inst.loss_for_label(&w, 2), 0.0);
        assert_eq!(inst.objective(&w), 0.0);
    }

    #[test]
    fn gradient_at_origin_is_linear_pull_only() {
        let inst = HardInstance::new(lipschitz_cfg(2)).unwrap();
        let w = Vector::zeros(inst.dimension());
        let g = inst.gradient_for_label(&w, 1);
        // -(scale/8) * 2a * v1; scale = 4BK = 8, a = 1/sqrt(512)
        let a = 1.0 / 512.0f64.sqrt();
        assert!((g[0] + 2.0 * a).abs() < 1e-15);
        for r in 1..inst.dimension() {
            assert_eq!(g[r], 0.0);
        }
        assert_eq!(
            inst.gradient_for_label(&w, 2),
            Vector::zeros(inst.dimension())
        );
    }

    #[test]
    fn second_component_blind_near_the_first_direction() {
        let inst = HardInstance::new(lipschitz_cfg(2)).unwrap();
        let mut w = Vector::zeros(inst.dimension());
        w[0] = inst.phi().a() / 2.0 * 0.9;
        let g = inst.gradient_for_label(&w, 2);
        assert_eq!(g.norm(), 0.0, "no direction revealed below the flat");
    }

    #[test]
    fn basis_is_orthonormal() {
        let inst = HardInstance::new(lipschitz_cfg(3)).unwrap();
        assert!(diagnostics::orthonormality_violation(inst.basis()) < 1e-12);
    }

    #[test]
    fn unit_lipschitz_certificate_at_b_one() {
        let inst = HardInstance::new(lipschitz_cfg(2)).unwrap();
        let mut r = rng::master(5);
        let worst = diagnostics::max_subgradient_norm(&inst, 10_000, 1.0, &mut r);
        assert!(worst <= 1.0 + 1e-6, "gradient norm {worst} exceeds 1");
    }

    #[test]
    fn losses_are_convex_along_chords() {
        let inst = HardInstance::new(lipschitz_cfg(2)).unwrap();
        let mut r = rng::master(6);
        let violation = diagnostics::convexity_chord_violation(&inst, 1000, 1.0, &mut r);
        assert!(violation <= 1e-12, "chord violation {violation}");
    }

    #[test]
    fn smooth_variant_has_lipschitz_gradient() {
        let cfg = HardInstanceConfig {
            variant: HardVariant::Smooth,
            ..lipschitz_cfg(2)
        };
        let inst = HardInstance::new(cfg).unwrap();
        let mut r = rng::master(7);
        // finite-difference smoothness probe along random directions
        use rand::Rng;
        let dim = inst.dimension();
        let lip = inst.gradient_lipschitz();
        for _ in 0..200 {
            let w = Vector::from_vec(
                (0..dim)
                    .map(|_| r.gen_range(-0.5..0.5))
                    .collect::<Vec<f64>>(),
            );
            let mut dir = Vector::from_vec(
                (0..dim)
                    .map(|_| r.gen_range(-1.0..1.0))
                    .collect::<Vec<f64>>(),
            );
            dir.scale(1.0 / dir.norm());
            let eps = 1e-5;
            let mut w2 = w.clone();
            w2.axpy(eps, &dir);
            for label in [1u8, 2u8] {
                let mut dg = inst.gradient_for_label(&w2, label);
                dg.axpy(-1.0, &inst.gradient_for_label(&w, label));
                assert!(
                    dg.norm() <= lip * eps * (1.0 + 1e-6),
                    "gradient jump too large"
                );
            }
        }
    }

    #[test]
    fn mixture_objective_matches_closed_form() {
        let inst = HardInstance::new(lipschitz_cfg(2)).unwrap();
        let mut w = Vector::zeros(inst.dimension());
        w[0] = 0.3;
        w[1] = 0.1;
        let mut r = rng::master(8);
        let via_problem = crate::problem::mixture_objective(&inst, &w, 1, &mut r).unwrap();
        let direct = 0.5 * inst.loss_for_label(&w, 1) + 0.5 * inst.loss_for_label(&w, 2);
        assert!((via_problem - direct).abs() < 1e-15);
        assert!((inst.objective(&w) - direct).abs() < 1e-15);
    }

    #[test]
    fn rejects_single_block() {
        let mut cfg = lipschitz_cfg(2);
        cfg.blocks = 1;
        assert!(HardInstance::new(cfg).is_err());
    }
}
