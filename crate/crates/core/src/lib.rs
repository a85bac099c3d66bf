//! Global Nash equilibrium seeking in non-convex multi-player games.
//!
//! The library targets games in which player `i` minimizes a composite payoff
//!
//! ```text
//! J_i(x_i, x_{-i}) = Ψ_i(Λ_i(x_i, x_{-i}))
//! ```
//!
//! where each `Λ_{i,k}` is quadratic in `x_i` with a constant second
//! derivative and `Ψ_i` is a canonical function (its gradient is one-to-one
//! from the primal domain onto the dual domain). Non-convexity of `J_i` is
//! handled by a canonical-duality transformation: the complementary function
//! `Γ_i(x, σ_i) = σ_iᵀ Λ_i(x) − Ψ*_i(σ_i)` becomes convex in `x_i` once the
//! dual variable is confined to the feasible set `E⁺`, and the coupled
//! stationarity conditions of all players turn into a single variational
//! inequality over `Ω × E⁺`. A solution of that VI whose dual block satisfies
//! the duality relation `σ_i = ∇Ψ_i(Λ_i(x))` certifies a *global* Nash
//! equilibrium.
//!
//! Module map:
//!
//! - [`set`]: feasible-set geometry (boxes, simplices, balls, orthants) with
//!   Euclidean projections and membership tests.
//! - [`game`]: game data model — quadratic operators, canonical functions,
//!   players, strategy profiles, payoff/gradient evaluation, JSON I/O.
//! - [`mirror`]: generating functions and their conjugate gradients (mirror
//!   maps), Bregman divergences, mirror steps.
//! - [`duality`]: complementary functions, the matrix `P_i(σ)`, the dual
//!   feasible set `E⁺`, and global-NE certificates.
//! - [`vi`]: the stacked pseudo-gradient `F(z)`, joint points `z = (x, σ)`,
//!   and natural-map VI residuals.
//! - [`ode`]: the conjugate-based ODE flow in dual coordinates, RK4
//!   integration, and exponential rate fitting.
//! - [`solver`]: the discrete mirror-descent solver (general and potential
//!   variants), step-size schedules, baseline methods, constant estimation.
//! - [`harness`]: experiment builders, a brute-force NE oracle, metrics, and
//!   the experiment runner backing the CLI.

pub mod duality;
pub mod error;
pub mod game;
pub mod harness;
pub mod mirror;
pub mod ode;
pub mod set;
pub mod solver;
pub mod vi;

pub use error::{Error, Result};
pub use game::{
    CanonicalFunction, GameSpec, PlayerSpec, QuadraticComponent, QuadraticOperator,
    StrategyProfile,
};
pub use mirror::{Generator, MirrorMap};
pub use set::ConstraintSet;
