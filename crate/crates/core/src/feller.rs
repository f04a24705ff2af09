//! Feller branching diffusion dZ = sqrt(2 Z) dB: the comparison oracle for
//! the particle system. Transitions are sampled exactly through the
//! compound-Poisson representation, so the atom at zero is exact.

use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson, StandardNormal};

use crate::{Error, Result};

/// One exact transition of size dr: the result has Laplace transform
/// exp(-z theta / (1 + theta dr)), realized as a Poisson(z/dr) number of
/// exponential(mean dr) summands. Zero is absorbing.
pub fn feller_step_exact(z: f64, dr: f64, rng: &mut impl Rng) -> f64 {
    assert!(z >= 0.0 && dr > 0.0);
    if z == 0.0 {
        return 0.0;
    }
    let k = Poisson::new(z / dr).unwrap().sample(rng) as u64;
    if k == 0 {
        return 0.0;
    }
    let exp = Exp::new(1.0 / dr).unwrap();
    (0..k).map(|_| exp.sample(rng)).sum()
}

/// Euler-Maruyama step, kept for cross-checks only: no exact zero atom.
pub fn feller_step_euler(z: f64, dr: f64, rng: &mut impl Rng) -> f64 {
    assert!(z >= 0.0 && dr > 0.0);
    if z == 0.0 {
        return 0.0;
    }
    let noise: f64 = StandardNormal.sample(rng);
    (z + (2.0 * z * dr).sqrt() * noise).max(0.0)
}

/// Survival probability at clock xi from mass z0, and the linear bound that
/// dominates it: (1 - exp(-z0/xi), z0/xi).
pub fn survival_probability(z0: f64, xi: f64) -> Result<(f64, f64)> {
    if xi <= 0.0 {
        return Err(Error::InvalidParameter(format!("xi = {xi}")));
    }
    assert!(z0 >= 0.0);
    Ok((1.0 - (-z0 / xi).exp(), z0 / xi))
}

/// Markov chain of exact steps observed at the points of r_grid
/// (increasing, starting at 0); absorbing at zero.
pub fn simulate_feller_path(z0: f64, r_grid: &[f64], rng: &mut impl Rng) -> Vec<f64> {
    assert!(!r_grid.is_empty() && r_grid[0] >= 0.0);
    debug_assert!(r_grid.windows(2).all(|p| p[1] > p[0]));
    let mut out = Vec::with_capacity(r_grid.len());
    let mut z = z0;
    let mut r_prev = 0.0;
    for &r in r_grid {
        if r > r_prev {
            z = feller_step_exact(z, r - r_prev, rng);
            r_prev = r;
        }
        out.push(z);
    }
    out
}
