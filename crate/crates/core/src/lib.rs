//! Minimum-empirical-divergence index and the DMED bandit policy for reward
//! distributions supported on `(-inf, 1]`.
//!
//! The crate is organised around the index
//! `D_inf(F, mu) = inf { D(F || G) : E(G) > mu }`, computed through its
//! one-dimensional concave dual `max_{0 <= nu <= 1/(1-mu)} E_F[log(1 - (X-mu)nu)]`:
//!
//! * [`empirical`] — weighted-atom empirical distributions and truncation.
//! * [`divergence`] — the dual Lagrangian, its derivatives, the maximiser
//!   `nu*`, and the index itself.
//! * [`oracle`] — a brute-force primal minimiser used to cross-check the dual.
//! * [`models`] — parametric reward families on `(-inf, 1]` with closed-form
//!   means and log-MGFs.
//! * [`legendre`] — Fenchel-Legendre transforms of the log-MGF (Chernoff rates).
//! * [`bounds`] — non-asymptotic deviation bounds for the empirical index and
//!   the finite-time pull-count bound built from them.
//! * [`policy`] — the DMED policy plus UCB1 / epsilon-greedy baselines.
//! * [`sim`] — seeded replications, regret accounting, and Monte Carlo
//!   verification of the deviation bounds.
//! * [`config`] — the TOML experiment-description format.
//! * [`selfcheck`] — the randomized property suite behind `verify-dinf`.

pub mod bounds;
pub mod config;
pub mod divergence;
pub mod empirical;
pub mod legendre;
pub mod models;
pub mod oracle;
pub mod policy;
pub mod quad;
pub mod rng;
pub mod selfcheck;
pub mod sim;

pub use bounds::{
    lower_dev_bound, optimize_bound_params, rate_u_i, regret_bound, upper_dev_bound, BoundError,
    BoundReport,
};
pub use divergence::{
    dinf, dinf_deriv_mu, lagrangian, lagrangian_derivs, solve_nu_star, DistView, DivergenceError,
    DualSolution,
};
pub use empirical::{DistError, EmpiricalDist};
pub use legendre::{legendre, LegendrePoint};
pub use models::{ArmModel, ModelError};
pub use oracle::dinf_primal_oracle;
pub use policy::{BanditPolicy, DmedPolicy, PolicyDecision, PolicyError, PolicySpec};
pub use rng::RngStream;
pub use sim::{run_experiment, run_replication, verify_lower_deviation, verify_upper_deviation};
