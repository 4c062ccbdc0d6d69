//! Block-cyclic schedule: `K` cycles of `m` blocks, `n` steps per block.
//!
//! Step indices are 1-based: step `t(k, i, j) = (k-1)·n·m + (i-1)·n + j`
//! ranges over `1..=T` with `T = K·m·n`. The set of steps that visit block
//! `i` has exactly `K·n` members.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    /// Number of cycles (days), `K`.
    pub cycles: usize,
    /// Blocks per cycle (mixture components), `m`.
    pub blocks: usize,
    /// Steps per block per cycle, `n`.
    pub block_len: usize,
}

impl ScheduleConfig {
    pub fn new(cycles: usize, blocks: usize, block_len: usize) -> Result<Self> {
        let cfg = ScheduleConfig {
            cycles,
            blocks,
            block_len,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.cycles < 1 || self.blocks < 1 || self.block_len < 1 {
            return Err(Error::invalid(format!(
                "schedule requires K, m, n >= 1 (got K={}, m={}, n={})",
                self.cycles, self.blocks, self.block_len
            )));
        }
        self.cycles
            .checked_mul(self.blocks)
            .and_then(|x| x.checked_mul(self.block_len))
            .ok_or_else(|| Error::invalid("schedule size K*m*n overflows"))?;
        Ok(())
    }

    /// Total number of steps `T = K·m·n`.
    pub fn total_steps(&self) -> usize {
        self.cycles * self.blocks * self.block_len
    }

    /// Map (cycle `k`, block `i`, within-block step `j`), all 1-based, to the
    /// global step index `t` in `1..=T`.
    pub fn index(&self, k: usize, i: usize, j: usize) -> Result<usize> {
        if k < 1 || k > self.cycles || i < 1 || i > self.blocks || j < 1 || j > self.block_len {
            return Err(Error::invalid(format!(
                "(k={k}, i={i}, j={j}) out of range for K={}, m={}, n={}",
                self.cycles, self.blocks, self.block_len
            )));
        }
        Ok((k - 1) * self.block_len * self.blocks + (i - 1) * self.block_len + j)
    }

    /// Inverse of [`ScheduleConfig::index`].
    pub fn locate(&self, t: usize) -> Result<(usize, usize, usize)> {
        if t < 1 || t > self.total_steps() {
            return Err(Error::invalid(format!(
                "step {t} out of range 1..={}",
                self.total_steps()
            )));
        }
        let z = t - 1;
        let per_cycle = self.block_len * self.blocks;
        let k = z / per_cycle + 1;
        let r = z % per_cycle;
        let i = r / self.block_len + 1;
        let j = r % self.block_len + 1;
        Ok((k, i, j))
    }

    /// Block visited at step `t` (1-based).
    pub fn block_of(&self, t: usize) -> Result<usize> {
        Ok(self.locate(t)?.1)
    }
}
