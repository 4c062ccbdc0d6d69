//! Ball-constrained smooth convex minimization.
//!
//! Accelerated projected gradient descent with adaptive restart, run to a
//! target gradient-mapping norm. Used to compute reference optima (full- and
//! restricted-span minimizers) that the training strategies are measured
//! against; `verified_minimum` re-runs from a random start and cross-checks
//! the two values before trusting either.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::ChaCha8Rng;
use crate::sgd::project;
use crate::vector::Vector;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    /// Target norm of the projected-gradient mapping `(y - Π(y - ∇/L)) · L`.
    pub tol: f64,
    pub max_iters: usize,
    /// Maximum allowed value disagreement between two starts.
    pub agreement_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_iters: 2_000_000,
            agreement_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub minimizer: Vector,
    pub value: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn apply_mask(w: &mut Vector, mask: Option<&[bool]>) {
    if let Some(mask) = mask {
        for (x, keep) in w.as_mut_slice().iter_mut().zip(mask) {
            if !keep {
                *x = 0.0;
            }
        }
    }
}

/// Minimize a convex `value` with `gradient` Lipschitz constant at most
/// `lipschitz` over `{‖w‖ ≤ bound}`, optionally restricted to the
/// coordinates where `mask` is true.
pub fn minimize_on_ball<V, G>(
    value: V,
    gradient: G,
    bound: f64,
    lipschitz: f64,
    mask: Option<&[bool]>,
    start: &Vector,
    opts: &SolveOptions,
) -> Result<SolveResult>
where
    V: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    if !(bound > 0.0) || !(lipschitz > 0.0) {
        return Err(Error::invalid("bound and lipschitz must be positive"));
    }
    if let Some(m) = mask {
        if m.len() != start.dim() {
            return Err(Error::invalid("mask length must match dimension"));
        }
    }
    let step = 1.0 / lipschitz;
    let mut w = project(start, bound);
    apply_mask(&mut w, mask);
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut f_w = value(&w);

    for it in 0..opts.max_iters {
        let mut g = gradient(&y);
        apply_mask(&mut g, mask);
        let mut y_next = y.clone();
        y_next.axpy(-step, &g);
        let mut w_new = project(&y_next, bound);
        apply_mask(&mut w_new, mask);

        let mut diff = y.clone();
        diff.axpy(-1.0, &w_new);
        let grad_map = diff.norm() / step;
        if grad_map < opts.tol {
            let v = value(&w_new);
            return Ok(SolveResult {
                minimizer: w_new,
                value: v,
                iterations: it,
                gradient_norm: grad_map,
            });
        }

        let mut f_new = value(&w_new);
        if f_new > f_w {
            // restart the momentum from the last monotone point
            y = w.clone();
            t = 1.0;
            let mut g = gradient(&y);
            apply_mask(&mut g, mask);
            let mut y_next = y.clone();
            y_next.axpy(-step, &g);
            w_new = project(&y_next, bound);
            apply_mask(&mut w_new, mask);
            f_new = value(&w_new);
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mut momentum = w_new.clone();
        momentum.axpy(-1.0, &w); // w_new - w
        y = w_new.clone();
        y.axpy((t - 1.0) / t_next, &momentum);
        y = project(&y, bound);
        apply_mask(&mut y, mask);
        w = w_new;
        f_w = f_new;
        t = t_next;
    }
    Err(Error::Solver(format!(
        "no convergence to tol {} within {} iterations",
        opts.tol, opts.max_iters
    )))
}

/// Solve from the zero start and from a random start in the ball; fail if
/// the two optima disagree, otherwise return the better one.
pub fn verified_minimum<V, G>(
    value: V,
    gradient: G,
    dim: usize,
    bound: f64,
    lipschitz: f64,
    mask: Option<&[bool]>,
    opts: &SolveOptions,
    rng: &mut ChaCha8Rng,
) -> Result<SolveResult>
where
    V: Fn(&Vector) -> f64,
    G: Fn(&Vector) -> Vector,
{
    let zero = Vector::zeros(dim);
    let first = minimize_on_ball(&value, &gradient, bound, lipschitz, mask, &zero, opts)?;
    let random = Vector::from_vec(
        (0..dim)
            .map(|_| rng.gen_range(-1.0..1.0) * bound / (dim as f64).sqrt())
            .collect(),
    );
    let second = minimize_on_ball(&value, &gradient, bound, lipschitz, mask, &random, opts)?;
    if (first.value - second.value).abs() > opts.agreement_tol {
        return Err(Error::Solver(format!(
            "two starts disagree: {} vs {}",
            first.value, second.value
        )));
    }
    Ok(if first.value <= second.value {
        first
    } else {
        second
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn quadratic_interior_minimum() {
        // f(w) = 0.5*||w - c||^2, L = 1
        let c = Vector::from_vec(vec![0.3, -0.2, 0.1]);
        let val = |w: &Vector| {
            let mut d = w.clone();
            d.axpy(-1.0, &c);
            0.5 * d.norm_sq()
        };
        let grad = |w: &Vector| {
            let mut d = w.clone();
            d.axpy(-1.0, &c);
            d
        };
        let mut r = rng::master(3);
        let res =
            verified_minimum(val, grad, 3, 1.0, 1.0, None, &SolveOptions::default(), &mut r)
                .unwrap();
        for i in 0..3 {
            assert!((res.minimizer[i] - c[i]).abs() < 1e-8);
        }
        assert!(res.value < 1e-15);
    }

    #[test]
    fn boundary_constrained_minimum() {
        // minimum of 0.5*||w - c||^2 with ||c|| = 2 over the unit ball is c/2
        let c = Vector::from_vec(vec![2.0, 0.0]);
        let val = |w: &Vector| {
            let mut d = w.clone();
            d.axpy(-1.0, &c);
            0.5 * d.norm_sq()
        };
        let grad = |w: &Vector| {
            let mut d = w.clone();
            d.axpy(-1.0, &c);
            d
        };
        let res = minimize_on_ball(
            val,
            grad,
            1.0,
            1.0,
            None,
            &Vector::zeros(2),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((res.minimizer[0] - 1.0).abs() < 1e-6);
        assert!(res.minimizer[1].abs() < 1e-8);
    }

    #[test]
    fn mask_restricts_the_span() {
        // f(w) = 0.5*||w - (1,1)||^2 restricted to the first coordinate
        let c = Vector::from_vec(vec![0.4, 0.4]);
        let val = move |w: &Vector| {
            let mut d = w.clone();
            d.axpy(-1.0, &c);
            0.5 * d.norm_sq()
        };
        let c2 = Vector::from_vec(vec![0.4, 0.4]);
        let grad = move |w: &Vector| {
            let mut d = w.clone();
            d.axpy(-1.0, &c2);
            d
        };
        let mask = vec![true, false];
        let res = minimize_on_ball(
            val,
            grad,
            1.0,
            1.0,
            Some(&mask),
            &Vector::zeros(2),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!((res.minimizer[0] - 0.4).abs() < 1e-8);
        assert_eq!(res.minimizer[1], 0.0);
    }
}
