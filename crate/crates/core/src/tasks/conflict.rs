//! The minimal two-component conflict task.
//!
//! Two deterministic components ("1" and "2"), each with a single support
//! point, so the mixture objective is exactly `F(w) = ½f(w,1) + ½f(w,2)`.
//! Any consensus method must alternate between the two parts many times to
//! optimize the composite, which a block-cyclic stream permits only once
//! per cycle. The component objectives are the hard-instance pair.

use crate::error::Result;
use crate::hard::{HardInstance, HardInstanceConfig, HardVariant};

/// Build the two-point conflict problem with the given comparator bound and
/// cycle budget (the construction's difficulty scales with the number of
/// cycles it must survive).
pub fn two_point_conflict_task(norm_bound: f64, cycles: usize) -> Result<HardInstance> {
    HardInstance::new(HardInstanceConfig {
        norm_bound,
        cycles,
        blocks: 2,
        block_len: 1,
        variant: HardVariant::Lipschitz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{mixture_objective, Payload, StochasticProblem};
    use crate::rng;
    use crate::vector::Vector;

    #[test]
    fn two_deterministic_components() {
        let task = two_point_conflict_task(1.0, 2).unwrap();
        assert_eq!(task.num_components(), 2);
        let mut r = rng::master(0);
        for comp in 1..=2 {
            for _ in 0..5 {
                let z = task.sample(comp, &mut r);
                assert_eq!(z.component, comp);
                assert_eq!(z.payload, Payload::Component);
            }
        }
    }

    #[test]
    fn mixture_is_the_even_split() {
        let task = two_point_conflict_task(1.0, 3).unwrap();
        let mut w = Vector::zeros(task.dimension());
        w[0] = 0.21;
        w[3] = -0.4;
        let mut r = rng::master(1);
        let mixture = mixture_objective(&task, &w, 1, &mut r).unwrap();
        let direct = 0.5 * task.loss_for_label(&w, 1) + 0.5 * task.loss_for_label(&w, 2);
        assert_eq!(mixture, direct);
    }
}
