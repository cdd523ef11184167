//! Discretizations of sequences of determinant-one linear maps on `Z^n`.
//!
//! `Â(x) = round(Ax + w)` with the rounding rule of
//! [`project_scalar`](crate::project_scalar). For a sequence `A_1, …, A_k`
//! the image `Γ_k = (Â_k ∘ ⋯ ∘ Â_1)(Z^n)` has an asymptotic density, the rate
//! of injectivity `τ^k`. It is estimated here two independent ways:
//!
//! * [`rate_brute_force`] counts the points of `Γ_k` inside a sup-norm ball;
//! * [`mean_rate_mc`] samples the covered fraction of `W^k + M̃ Z^{nk}`, the
//!   union of unit cubes centred on the lattice spanned by the block matrix
//!   [`build_m_tilde`].
//!
//! For generic sequences the two quantities coincide.

mod decay;
mod lattice;
mod mc;
mod rate;
mod sequence;

pub use decay::{decay_experiment, decay_trial, trial_seed, DecayRow};
pub use lattice::{build_m, build_m_tilde, LatticeBasis};
pub use mc::{mean_rate_mc, McPlan, MC_BLOCK, MC_GENERATOR, MIN_MC_SAMPLES};
pub use rate::{
    brute_force_counts, check_ball, finish_brute_force, in_image, preimage_search, rate_brute_force,
    DEFAULT_MAX_POINTS, MIN_RADIUS,
};
pub use sequence::{compose_discretized, hat_apply, random_sl_sequence, MatrixSequence};

/// Which estimator produced a [`RateEstimate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RateMethod {
    BruteForce,
    MonteCarlo,
}

impl RateMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            RateMethod::BruteForce => "brute_force",
            RateMethod::MonteCarlo => "monte_carlo",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    pub value: f64,
    pub method: RateMethod,
    /// Ball radius for brute force, sample count for Monte Carlo.
    pub radius_or_samples: u64,
    /// Brute force: difference with the estimate at half the radius.
    /// Monte Carlo: difference between the two half-sample estimates.
    pub convergence_gap: f64,
}
