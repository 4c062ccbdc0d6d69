//! Training strategies over a block-cyclic stream.
//!
//! Four ways to train on the same stream:
//!
//! * **consensus** — one chain, one model (the final iterate or the full
//!   iterate average);
//! * **per-component** — `m` chains, chain `i` advanced only on block `i`'s
//!   steps, so each model sees `T/m` i.i.d. samples;
//! * **pluralistic averaging** — the *same single chain* as consensus, but
//!   model `i` averages only the iterates visited during block `i`. The
//!   online regret certificate then converts to a per-component risk bound
//!   with no dependence on the number of blocks;
//! * **pluralistic hedging** — run both the single chain and the `m`
//!   per-component chains, and at every step of block `i` pick between the
//!   two with a probability learned by a per-block two-expert Prod rule
//!   anchored at the single chain. The block average of the picked iterates
//!   is simultaneously competitive with pluralistic averaging and with the
//!   separately trained chain.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{Sample, StochasticProblem};
use crate::rng::ChaCha8Rng;
use crate::schedule::ScheduleConfig;
use crate::sgd::{ChainState, SgdConfig};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    Consensus,
    PerComponent,
    #[serde(rename = "pluralistic")]
    PluralisticAveraging,
    #[serde(rename = "hedging")]
    PluralisticHedging,
    #[serde(rename = "iid")]
    IidBaseline,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let token = match self {
            StrategyKind::Consensus => "consensus",
            StrategyKind::PerComponent => "per_component",
            StrategyKind::PluralisticAveraging => "pluralistic",
            StrategyKind::PluralisticHedging => "hedging",
            StrategyKind::IidBaseline => "iid",
        };
        f.write_str(token)
    }
}

/// End-of-block model snapshots: entry `(k, i)` is the iterate after the
/// last update of block `i` in cycle `k`.
#[derive(Clone, Debug)]
pub struct Checkpoints {
    cycles: usize,
    blocks: usize,
    items: Vec<Vector>,
}

impl Checkpoints {
    fn with_capacity(cycles: usize, blocks: usize) -> Self {
        Checkpoints {
            cycles,
            blocks,
            items: Vec::with_capacity(cycles * blocks),
        }
    }

    fn push(&mut self, w: Vector) {
        self.items.push(w);
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    /// Snapshot after block `i` of cycle `k` (both 1-based).
    pub fn get(&self, cycle: usize, block: usize) -> &Vector {
        assert!(
            cycle >= 1 && cycle <= self.cycles && block >= 1 && block <= self.blocks,
            "checkpoint ({cycle}, {block}) out of range"
        );
        &self.items[(cycle - 1) * self.blocks + (block - 1)]
    }
}

/// A tuple of per-component models plus where it came from.
#[derive(Clone, Debug)]
pub struct PluralisticModel {
    pub per_component: Vec<Vector>,
    pub strategy: StrategyKind,
    pub schedule: ScheduleConfig,
    pub seed: Option<u64>,
}

impl PluralisticModel {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Draw the full block-cyclic sample stream in step order.
pub fn draw_stream<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<Sample> {
    let mut out = Vec::with_capacity(schedule.total_steps());
    for k in 1..=schedule.cycles {
        for i in 1..=schedule.blocks {
            for j in 1..=schedule.block_len {
                out.push(problem.sample_at(k, i, j, rng));
            }
        }
    }
    out
}

/// In-place uniform shuffle; the i.i.d. control consumes exactly the same
/// sample multiset as the cyclic run.
pub fn shuffle_stream(stream: &mut [Sample], rng: &mut ChaCha8Rng) {
    stream.shuffle(rng);
}

/// Overwrite component tags with the positional block of each step. Used to
/// repartition a stream of exchangeable samples under a different block
/// count.
pub fn relabel_to_schedule(stream: &mut [Sample], schedule: &ScheduleConfig) -> Result<()> {
    if stream.len() != schedule.total_steps() {
        return Err(Error::invalid(format!(
            "stream has {} samples, schedule expects {}",
            stream.len(),
            schedule.total_steps()
        )));
    }
    for (t0, z) in stream.iter_mut().enumerate() {
        z.component = schedule.block_of(t0 + 1)?;
    }
    Ok(())
}

fn validate_shapes<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    stream: &[Sample],
) -> Result<()> {
    schedule.validate()?;
    if problem.num_components() != schedule.blocks {
        return Err(Error::invalid(format!(
            "problem has {} components, schedule has {} blocks",
            problem.num_components(),
            schedule.blocks
        )));
    }
    if stream.len() != schedule.total_steps() {
        return Err(Error::invalid(format!(
            "stream has {} samples, schedule expects {}",
            stream.len(),
            schedule.total_steps()
        )));
    }
    Ok(())
}

fn require_cyclic(schedule: &ScheduleConfig, stream: &[Sample]) -> Result<()> {
    for (t0, z) in stream.iter().enumerate() {
        let block = schedule.block_of(t0 + 1)?;
        if z.component != block {
            return Err(Error::invalid(format!(
                "stream is not block-cyclic: step {} carries component {}, expected {}",
                t0 + 1,
                z.component,
                block
            )));
        }
    }
    Ok(())
}

/// One chain over the whole stream; samples are charged to their own
/// component's accumulator slot, so shuffled control streams are accepted.
fn run_single_chain<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    cfg: &SgdConfig,
    stream: &[Sample],
) -> Result<(ChainState, Checkpoints)> {
    validate_shapes(problem, schedule, stream)?;
    let total = schedule.total_steps();
    let mut chain = ChainState::new(problem.dimension(), schedule.blocks, total, cfg)?;
    let mut checkpoints = Checkpoints::with_capacity(schedule.cycles, schedule.blocks);
    for (t0, z) in stream.iter().enumerate() {
        chain.step(problem, z, z.component)?;
        if (t0 + 1) % schedule.block_len == 0 {
            checkpoints.push(chain.iterate().clone());
        }
    }
    Ok((chain, checkpoints))
}

/// Result of training a single consensus chain.
#[derive(Clone, Debug)]
pub struct ConsensusRun {
    pub final_iterate: Vector,
    /// Average over all `T` query points.
    pub average: Vector,
    pub checkpoints: Checkpoints,
    pub cumulative_loss: f64,
}

/// Block-cyclic consensus: one chain over the full stream, checkpointed at
/// every block end.
pub fn run_consensus<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    cfg: &SgdConfig,
    stream: &[Sample],
) -> Result<ConsensusRun> {
    let (chain, checkpoints) = run_single_chain(problem, schedule, cfg, stream)?;
    Ok(ConsensusRun {
        final_iterate: chain.iterate().clone(),
        average: chain.average()?,
        checkpoints,
        cumulative_loss: chain.cumulative_loss(),
    })
}

/// Result of the per-component strategy.
#[derive(Clone, Debug)]
pub struct PerComponentRun {
    /// Model `i` is the average of chain `i`'s own `K·n` query points.
    pub model: PluralisticModel,
    pub final_iterates: Vec<Vector>,
    /// Entry `(k, i)`: chain `i` after its block in cycle `k`.
    pub checkpoints: Checkpoints,
}

/// Maintain `m` separate chains; chain `i` sees only block `i`'s samples.
pub fn run_per_component<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    cfg: &SgdConfig,
    stream: &[Sample],
) -> Result<PerComponentRun> {
    validate_shapes(problem, schedule, stream)?;
    require_cyclic(schedule, stream)?;
    let m = schedule.blocks;
    let per_chain_horizon = schedule.cycles * schedule.block_len;
    let mut chains: Vec<ChainState> = (0..m)
        .map(|_| ChainState::new(problem.dimension(), m, per_chain_horizon, cfg))
        .collect::<Result<_>>()?;
    let mut checkpoints = Checkpoints::with_capacity(schedule.cycles, m);
    for (t0, z) in stream.iter().enumerate() {
        let i = z.component;
        chains[i - 1].step(problem, z, i)?;
        if (t0 + 1) % schedule.block_len == 0 {
            checkpoints.push(chains[i - 1].iterate().clone());
        }
    }
    let per_component: Vec<Vector> = chains
        .iter()
        .enumerate()
        .map(|(i0, chain)| chain.block_average(i0 + 1))
        .collect::<Result<_>>()?;
    Ok(PerComponentRun {
        model: PluralisticModel {
            per_component,
            strategy: StrategyKind::PerComponent,
            schedule: *schedule,
            seed: None,
        },
        final_iterates: chains.iter().map(|c| c.iterate().clone()).collect(),
        checkpoints,
    })
}

/// Result of pluralistic averaging.
#[derive(Clone, Debug)]
pub struct PluralisticAveragingRun {
    /// Model `i` is the average of the single chain's block-`i` iterates.
    pub model: PluralisticModel,
    /// The underlying chain, identical to the consensus run under the same
    /// stream (only the aggregation differs).
    pub chain: ConsensusRun,
}

/// One chain over the block-cyclic stream; per-component models by
/// averaging within blocks.
pub fn run_pluralistic_averaging<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    cfg: &SgdConfig,
    stream: &[Sample],
) -> Result<PluralisticAveragingRun> {
    validate_shapes(problem, schedule, stream)?;
    require_cyclic(schedule, stream)?;
    let (chain, checkpoints) = run_single_chain(problem, schedule, cfg, stream)?;
    let per_component: Vec<Vector> = (1..=schedule.blocks)
        .map(|i| chain.block_average(i))
        .collect::<Result<_>>()?;
    Ok(PluralisticAveragingRun {
        model: PluralisticModel {
            per_component,
            strategy: StrategyKind::PluralisticAveraging,
            schedule: *schedule,
            seed: None,
        },
        chain: ConsensusRun {
            final_iterate: chain.iterate().clone(),
            average: chain.average()?,
            checkpoints,
            cumulative_loss: chain.cumulative_loss(),
        },
    })
}

/// Hedging configuration. Defaults: the tuned rate
/// `ν = (1/2B)·√((m/T)·ln(BT/m))` and loss bound `M = B`.
#[derive(Clone, Copy, Debug, Default)]
pub struct HedgeConfig {
    pub rate: Option<f64>,
    pub loss_bound: Option<f64>,
}

/// The tuned hedging rate for norm bound `B`, horizon `T`, and `m` blocks.
pub fn theorem_hedge_rate(norm_bound: f64, total_steps: usize, blocks: usize) -> f64 {
    let t = total_steps as f64;
    let m = blocks as f64;
    (m / t * (norm_bound * t / m).ln()).sqrt() / (2.0 * norm_bound)
}

/// Result of pluralistic hedging.
#[derive(Clone, Debug)]
pub struct HedgingRun {
    /// Model `i` is the block-`i` average of the realized picks `u_t`.
    pub model: PluralisticModel,
    /// Partial mixed averages at the end of each cycle.
    pub day_models: Vec<Vec<Vector>>,
    /// Final pick probability `p = q^i/(q^i + q)` per block.
    pub final_pick_probability: Vec<f64>,
    /// How often the component chain was picked, per block.
    pub component_picks: Vec<usize>,
    pub warnings: Vec<String>,
}

/// Run the single chain and the `m` per-component chains together, picking
/// `u_t` between them by learned per-block weights, and return the block
/// averages of the picks.
///
/// The weight update at a step of block `i` multiplies `q^i` by
/// `1 + ν·(f(w_t, z_t) - f(w^i_t, z_t))`, with both losses evaluated at the
/// pre-update iterates; the anchor weight `q = 1 - ν` never changes. Losses
/// must stay within the declared bound `M` (certified by the task), and
/// `ν ≤ 1/(4M)` keeps every weight positive.
pub fn run_pluralistic_hedging<P: StochasticProblem + ?Sized>(
    problem: &P,
    schedule: &ScheduleConfig,
    cfg: &SgdConfig,
    hedge: &HedgeConfig,
    stream: &[Sample],
    rng: &mut ChaCha8Rng,
) -> Result<HedgingRun> {
    validate_shapes(problem, schedule, stream)?;
    require_cyclic(schedule, stream)?;
    cfg.validate()?;
    let m = schedule.blocks;
    let total = schedule.total_steps();
    let b = cfg.norm_bound;
    let loss_bound = hedge.loss_bound.unwrap_or(b);
    let rate = hedge
        .rate
        .unwrap_or_else(|| theorem_hedge_rate(b, total, m));
    if !(loss_bound > 0.0) {
        return Err(Error::invalid("hedge loss bound must be positive"));
    }
    if !(rate > 0.0) || rate > 1.0 / (4.0 * loss_bound) {
        return Err(Error::ContractViolation(format!(
            "hedge rate must satisfy 0 < nu <= 1/(4M) = {}, got {rate}",
            1.0 / (4.0 * loss_bound)
        )));
    }
    let mut warnings = Vec::new();
    if m as f64 > b * b * (schedule.cycles * schedule.block_len) as f64 {
        warnings.push(format!(
            "m = {m} exceeds B^2*K*n = {}; the mixture-level guarantee needs m <= B^2*K*n",
            b * b * (schedule.cycles * schedule.block_len) as f64
        ));
    }

    let dim = problem.dimension();
    let mut full = ChainState::new(dim, m, total, cfg)?;
    let per_chain_horizon = schedule.cycles * schedule.block_len;
    let mut components: Vec<ChainState> = (0..m)
        .map(|_| ChainState::new(dim, m, per_chain_horizon, cfg))
        .collect::<Result<_>>()?;

    // per-block two-expert Prod state, log domain; the anchor is shared
    let log_anchor = (1.0 - rate).ln();
    let mut log_weight = vec![rate.ln(); m];
    let mut mixed_sums = vec![Vector::zeros(dim); m];
    let mut mixed_counts = vec![0usize; m];
    let mut component_picks = vec![0usize; m];
    let mut day_models: Vec<Vec<Vector>> = Vec::with_capacity(schedule.cycles);
    let loss_cap = loss_bound * (1.0 + 1e-12);

    for (t0, z) in stream.iter().enumerate() {
        let i = z.component;
        let idx = i - 1;
        let p = 1.0 / (1.0 + (log_anchor - log_weight[idx]).exp());
        let pick_component = rng.gen::<f64>() < p;
        if pick_component {
            component_picks[idx] += 1;
            mixed_sums[idx].add_assign(components[idx].iterate());
        } else {
            mixed_sums[idx].add_assign(full.iterate());
        }
        mixed_counts[idx] += 1;

        let loss_full = problem.loss(full.iterate(), z);
        let loss_comp = problem.loss(components[idx].iterate(), z);
        for (name, l) in [("full", loss_full), ("component", loss_comp)] {
            if !l.is_finite() || l.abs() > loss_cap {
                return Err(Error::ContractViolation(format!(
                    "{name}-chain loss {l} exceeds the declared bound M = {loss_bound} \
                     at step {}",
                    t0 + 1
                )));
            }
        }
        log_weight[idx] += (rate * (loss_full - loss_comp)).ln_1p();

        full.step(problem, z, i)?;
        components[idx].step(problem, z, i)?;

        if (t0 + 1) % (schedule.block_len * m) == 0 {
            let partial: Vec<Vector> = (0..m)
                .map(|j| mixed_sums[j].scaled(1.0 / mixed_counts[j] as f64))
                .collect();
            day_models.push(partial);
        }
    }

    let per_component: Vec<Vector> = (0..m)
        .map(|j| mixed_sums[j].scaled(1.0 / mixed_counts[j] as f64))
        .collect();
    let final_pick_probability: Vec<f64> = log_weight
        .iter()
        .map(|lw| 1.0 / (1.0 + (log_anchor - lw).exp()))
        .collect();
    Ok(HedgingRun {
        model: PluralisticModel {
            per_component,
            strategy: StrategyKind::PluralisticHedging,
            schedule: *schedule,
            seed: None,
        },
        day_models,
        final_pick_probability,
        component_picks,
        warnings,
    })
}
