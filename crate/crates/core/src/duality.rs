//! Canonical-duality layer: complementary functions, the matrix `P_i(σ)`,
//! the dual feasible set `E⁺`, and global-NE certificates.
//!
//! For player `i` the complementary function is
//!
//! ```text
//! Γ_i(x, σ_i) = σ_iᵀ Λ_i(x) − Ψ*_i(σ_i),
//! ```
//!
//! whose Hessian in `x_i` is `P_i(σ_i) = Σ_k [σ_i]_k ∇²_{x_i} Λ_{i,k}` — a
//! linear map of σ because the component Hessians are constant. Restricting
//! the dual variable to
//!
//! ```text
//! E⁺_i = Θ*_i ∩ { σ : P_i(σ) ⪰ κ_x I }
//! ```
//!
//! makes `Γ_i` strongly convex in `x_i` (and it is always concave in σ), so a
//! VI solution whose dual block satisfies the duality relation
//! `σ_i = ∇Ψ_i(Λ_i(x))` certifies a global Nash equilibrium.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameSpec, IntervalBox, StrategyProfile};
use crate::set::PolyhedralSet;
use crate::vi::{vi_residual, DualProfile, JointPoint};

/// Default strong-convexity threshold for `P(σ) ⪰ κ_x I`. Small values
/// maximize `E⁺` while keeping the complementary function strongly convex.
pub const DEFAULT_KAPPA_X: f64 = 1e-2;

/// `Γ_i(x, σ_i)` for an ordinary game, or the unified `Γ(x, σ)` in potential
/// mode (call with `i = 0`).
pub fn complementary_value(
    game: &GameSpec,
    i: usize,
    x: &StrategyProfile,
    sigma: &DVector<f64>,
) -> Result<f64> {
    if let Some(pot) = game.potential() {
        let lam = pot.lambda.eval(x.as_vector());
        return Ok(sigma.dot(&lam) - pot.psi.conj_value(sigma)?);
    }
    let lam = game.eval_lambda(i, x)?;
    Ok(sigma.dot(&lam) - game.player(i).psi.conj_value(sigma)?)
}

/// `P_i(σ_i) = Σ_k [σ_i]_k ∇²_{x_i} Λ_{i,k}` (symmetric, linear in σ).
pub fn p_matrix(game: &GameSpec, i: usize, sigma: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = game.layout().dim_of(i);
    let op = if let Some(pot) = game.potential() {
        &pot.lambda
    } else {
        &game.player(i).lambda
    };
    if sigma.len() != op.len() {
        return Err(Error::DimensionMismatch {
            player: i,
            detail: format!("σ has {} entries, Λ has {} components", sigma.len(), op.len()),
        });
    }
    let mut p = DMatrix::zeros(n, n);
    for k in 0..op.len() {
        if sigma[k] != 0.0 {
            p += op.hessian_wrt(game.layout(), i, k)? * sigma[k];
        }
    }
    Ok(p)
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

/// Computed representation of `E⁺`.
#[derive(Debug, Clone)]
pub enum EplusRepr {
    /// Product of intervals (valid when at most one component carries a
    /// nonzero identity-multiple Hessian, as in all worked paper instances).
    Interval { lo: Vec<f64>, hi: Vec<f64> },
    /// Box ∩ half-spaces (identity-multiple or diagonal Hessians, and the
    /// per-player rows of a potential game).
    Polyhedron(PolyhedralSet),
    /// Membership decided by a dense eigensolve; no projectable form.
    SampledCheck,
}

/// The dual feasible set of one player (or the unified set of a potential
/// game), `E⁺ = Θ* ∩ {σ : P(σ) ⪰ κ_x I}`.
#[derive(Debug, Clone)]
pub struct DualFeasibleSet {
    player: usize,
    kappa_x: f64,
    theta_star: IntervalBox,
    /// One Hessian per operator component, per checked block.
    hessians: Vec<Vec<DMatrix<f64>>>,
    repr: EplusRepr,
    empty: bool,
}

impl DualFeasibleSet {
    pub fn player(&self) -> usize {
        self.player
    }

    pub fn kappa_x(&self) -> f64 {
        self.kappa_x
    }

    pub fn repr(&self) -> &EplusRepr {
        &self.repr
    }

    pub fn dim(&self) -> usize {
        self.theta_star.dim()
    }

    pub fn theta_star(&self) -> &IntervalBox {
        &self.theta_star
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    /// Membership: σ ∈ Θ* and `min-eig P(σ) ≥ κ_x − 1e-9` on every block.
    pub fn contains(&self, sigma: &DVector<f64>, tol: f64) -> bool {
        if sigma.len() != self.dim() || !self.theta_star.contains(sigma, tol) {
            return false;
        }
        self.hessians.iter().all(|hs| {
            let n = hs[0].nrows();
            let mut p = DMatrix::zeros(n, n);
            for (k, h) in hs.iter().enumerate() {
                p += h * sigma[k];
            }
            min_eigenvalue(&p) >= self.kappa_x - 1e-9 - tol
        })
    }

    /// Euclidean projection, available for interval/polyhedral forms.
    pub fn project(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        match &self.repr {
            EplusRepr::Interval { lo, hi } => Ok(DVector::from_iterator(
                sigma.len(),
                sigma
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(s, (l, h))| s.max(*l).min(*h)),
            )),
            EplusRepr::Polyhedron(p) => Ok(p.project(sigma)),
            EplusRepr::SampledCheck => Err(Error::UnsupportedRepresentation(
                "sampled-check E⁺ has no projection".into(),
            )),
        }
    }

    /// A strictly feasible reference point, when one exists.
    pub fn interior_point(&self) -> Option<DVector<f64>> {
        if self.empty {
            return None;
        }
        match &self.repr {
            EplusRepr::Interval { lo, hi } => Some(DVector::from_iterator(
                lo.len(),
                lo.iter().zip(hi).map(|(l, h)| match (l.is_finite(), h.is_finite()) {
                    (true, true) => 0.5 * (l + h),
                    (true, false) => l + 1.0,
                    (false, true) => h - 1.0,
                    (false, false) => 0.0,
                }),
            )),
            EplusRepr::Polyhedron(p) => p.interior_point(),
            EplusRepr::SampledCheck => None,
        }
    }

    /// Interval/polyhedral form as a polyhedral set (for stacked projection).
    pub fn as_polyhedron(&self) -> Result<PolyhedralSet> {
        match &self.repr {
            EplusRepr::Interval { lo, hi } => Ok(PolyhedralSet {
                lower: lo.clone(),
                upper: hi.clone(),
                halfspaces: vec![],
            }),
            EplusRepr::Polyhedron(p) => Ok(p.clone()),
            EplusRepr::SampledCheck => Err(Error::UnsupportedRepresentation(
                "sampled-check E⁺ has no polyhedral form".into(),
            )),
        }
    }
}

/// Is `m` a scalar multiple of the identity? Returns the scalar.
fn identity_multiple(m: &DMatrix<f64>) -> Option<f64> {
    let n = m.nrows();
    let h = m[(0, 0)];
    for r in 0..n {
        for c in 0..n {
            let want = if r == c { h } else { 0.0 };
            if (m[(r, c)] - want).abs() > 1e-12 * (1.0 + h.abs()) {
                return None;
            }
        }
    }
    Some(h)
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    let n = m.nrows();
    for r in 0..n {
        for c in 0..n {
            if r != c && m[(r, c)].abs() > 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Builds `E⁺_i` for one player of a non-potential game.
pub fn eplus_build(game: &GameSpec, i: usize, kappa_x: f64) -> Result<DualFeasibleSet> {
    if game.is_potential() {
        return eplus_build_potential(game, kappa_x);
    }
    let q = game.player(i).lambda.len();
    let hessians: Vec<DMatrix<f64>> = (0..q)
        .map(|k| game.hessian_lambda(i, k))
        .collect::<Result<Vec<_>>>()?;
    let theta_star = game.player(i).psi.theta_star();
    build_from_blocks(i, kappa_x, theta_star, vec![hessians])
}

/// Builds the unified `E⁺` of a potential game: the common σ must satisfy
/// every player's Hessian condition simultaneously.
pub fn eplus_build_potential(game: &GameSpec, kappa_x: f64) -> Result<DualFeasibleSet> {
    let pot = game
        .potential()
        .ok_or_else(|| Error::Config("eplus_build_potential on a non-potential game".into()))?;
    let q = pot.lambda.len();
    let blocks: Vec<Vec<DMatrix<f64>>> = (0..game.player_count())
        .map(|i| {
            (0..q)
                .map(|k| pot.lambda.hessian_wrt(game.layout(), i, k))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let theta_star = pot.psi.theta_star();
    build_from_blocks(0, kappa_x, theta_star, blocks)
}

/// All dual sets of a game: one per player, or a single unified set.
pub fn eplus_all(game: &GameSpec, kappa_x: f64) -> Result<Vec<DualFeasibleSet>> {
    if game.is_potential() {
        Ok(vec![eplus_build_potential(game, kappa_x)?])
    } else {
        (0..game.player_count())
            .map(|i| eplus_build(game, i, kappa_x))
            .collect()
    }
}

fn build_from_blocks(
    player: usize,
    kappa_x: f64,
    theta_star: IntervalBox,
    blocks: Vec<Vec<DMatrix<f64>>>,
) -> Result<DualFeasibleSet> {
    if kappa_x <= 0.0 {
        return Err(Error::Config("κ_x must be positive".into()));
    }
    let q = theta_star.dim();

    // Classify: identity multiples → linear rows; diagonal → per-coordinate
    // rows; anything else falls back to the eigensolve membership test.
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut sampled = false;
    'blocks: for hs in &blocks {
        let idents: Vec<Option<f64>> = hs.iter().map(identity_multiple).collect();
        if idents.iter().all(|o| o.is_some()) {
            let coeffs: Vec<f64> = idents.into_iter().map(|o| o.unwrap()).collect();
            rows.push((coeffs, kappa_x));
            continue 'blocks;
        }
        if hs.iter().all(is_diagonal) {
            let n = hs[0].nrows();
            for d in 0..n {
                let coeffs: Vec<f64> = hs.iter().map(|h| h[(d, d)]).collect();
                rows.push((coeffs, kappa_x));
            }
            continue 'blocks;
        }
        sampled = true;
        break;
    }

    if sampled {
        let empty = sampled_check_emptiness(&theta_star, &blocks, kappa_x);
        return Ok(DualFeasibleSet {
            player,
            kappa_x,
            theta_star,
            hessians: blocks,
            repr: EplusRepr::SampledCheck,
            empty,
        });
    }

    // A single row touching exactly one σ component reduces to an interval.
    let interval_form = rows.len() == 1 && rows[0].0.iter().filter(|c| c.abs() > 0.0).count() <= 1;
    if interval_form {
        let (coeffs, rhs) = &rows[0];
        let mut lo = theta_star.lo.clone();
        let mut hi = theta_star.hi.clone();
        let mut empty = false;
        match coeffs.iter().position(|c| c.abs() > 0.0) {
            Some(k) => {
                let h = coeffs[k];
                if h > 0.0 {
                    lo[k] = lo[k].max(rhs / h);
                } else {
                    hi[k] = hi[k].min(rhs / h);
                }
                if lo[k] > hi[k] {
                    empty = true;
                }
            }
            // P(σ) ≡ 0 can never dominate κ_x I.
            None => empty = true,
        }
        return Ok(DualFeasibleSet {
            player,
            kappa_x,
            theta_star,
            hessians: blocks,
            repr: EplusRepr::Interval { lo, hi },
            empty,
        });
    }

    let poly = PolyhedralSet {
        lower: theta_star.lo.clone(),
        upper: theta_star.hi.clone(),
        halfspaces: rows
            .into_iter()
            .map(|(coeffs, rhs)| {
                debug_assert_eq!(coeffs.len(), q);
                (coeffs, rhs)
            })
            .collect(),
    };
    let empty = poly.certainly_empty() || poly.interior_point().is_none();
    Ok(DualFeasibleSet {
        player,
        kappa_x,
        theta_star,
        hessians: blocks,
        repr: EplusRepr::Polyhedron(poly),
        empty,
    })
}

/// Emptiness probe for the sampled-check representation: the per-coordinate
/// diagonal rows are *necessary* (λ_min(M) ≤ M[dd]), so their infeasibility
/// over the Θ* box certifies emptiness; a Gershgorin interior point certifies
/// nonemptiness. Neither certificate ⇒ reported empty.
fn sampled_check_emptiness(
    theta_star: &IntervalBox,
    blocks: &[Vec<DMatrix<f64>>],
    kappa_x: f64,
) -> bool {
    let mut necessary = Vec::new();
    let mut sufficient = Vec::new();
    for hs in blocks {
        let n = hs[0].nrows();
        for d in 0..n {
            let diag: Vec<f64> = hs.iter().map(|h| h[(d, d)]).collect();
            necessary.push((diag, kappa_x));
            let gersh: Vec<f64> = hs
                .iter()
                .map(|h| {
                    let off: f64 = (0..n).filter(|c| *c != d).map(|c| h[(d, c)].abs()).sum();
                    h[(d, d)] - off
                })
                .collect();
            sufficient.push((gersh, kappa_x));
        }
    }
    let necessary_poly = PolyhedralSet {
        lower: theta_star.lo.clone(),
        upper: theta_star.hi.clone(),
        halfspaces: necessary,
    };
    if necessary_poly.certainly_empty() {
        return true;
    }
    // Gershgorin rows are valid as written only for σ ≥ 0.
    let lower_nn: Vec<f64> = theta_star.lo.iter().map(|l| l.max(0.0)).collect();
    let sufficient_poly = PolyhedralSet {
        lower: lower_nn,
        upper: theta_star.hi.clone(),
        halfspaces: sufficient,
    };
    sufficient_poly.interior_point().is_none()
}

/// Certificate verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    GlobalNe,
    StationaryOnly,
    Unverified,
}

/// Tolerances and κ_x used by [`certify`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Absolute VI-residual tolerance. The solver scales its default as
    /// `1e-6·(1 + ‖F(z₀)‖)` so the check is instance-size independent.
    pub tol_vi: f64,
    /// Relative duality tolerance: `r_i ≤ tol_dual·(1 + ‖∇Ψ_i(Λ_i(x))‖)`.
    pub tol_dual: f64,
    pub kappa_x: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions { tol_vi: 1e-6, tol_dual: 1e-5, kappa_x: DEFAULT_KAPPA_X }
    }
}

/// Outcome of the global-NE check at a candidate pair `(x, σ)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Certificate {
    pub x: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub vi_residual: f64,
    /// `r_i = ‖σ_i − ∇Ψ_i(Λ_i(x))‖` per player (one entry in potential mode).
    pub duality_residuals: Vec<f64>,
    pub duality_scales: Vec<f64>,
    pub eplus_membership: Vec<bool>,
    pub eplus_empty: Vec<bool>,
    pub verdict: Verdict,
    pub tol_vi: f64,
    pub tol_dual: f64,
    pub kappa_x: f64,
}

impl Certificate {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Runs the Theorem-1 check at `(x, σ)`: VI residual, duality residuals, and
/// `E⁺` membership. `GlobalNe` requires all three; a point passing the VI
/// check whose duality relation fails is `StationaryOnly`.
pub fn certify(
    game: &GameSpec,
    x: &StrategyProfile,
    sigma: &DualProfile,
    opts: &CertifyOptions,
) -> Result<Certificate> {
    let eplus = eplus_all(game, opts.kappa_x)?;
    certify_with_sets(game, x, sigma, &eplus, opts)
}

pub fn certify_with_sets(
    game: &GameSpec,
    x: &StrategyProfile,
    sigma: &DualProfile,
    eplus: &[DualFeasibleSet],
    opts: &CertifyOptions,
) -> Result<Certificate> {
    let z = JointPoint::new(x.clone(), sigma.clone());
    let vi_res = vi_residual(game, eplus, &z)?;

    let natural = game.natural_dual(x)?;
    let blocks = sigma.blocks();
    if natural.len() != blocks.len() {
        return Err(Error::Config(format!(
            "dual profile has {} blocks, game implies {}",
            blocks.len(),
            natural.len()
        )));
    }
    let mut residuals = Vec::new();
    let mut scales = Vec::new();
    let mut member = Vec::new();
    let mut empty = Vec::new();
    for (b, (s, t)) in blocks.iter().zip(natural.iter()).enumerate() {
        residuals.push((s - t).norm());
        scales.push(1.0 + t.norm());
        member.push(eplus[b].contains(s, 1e-9));
        empty.push(eplus[b].is_empty());
    }

    let vi_ok = vi_res <= opts.tol_vi;
    let dual_ok = residuals
        .iter()
        .zip(&scales)
        .all(|(r, s)| *r <= opts.tol_dual * s);
    let member_ok = member.iter().all(|m| *m);
    let verdict = if vi_ok && dual_ok && member_ok {
        Verdict::GlobalNe
    } else if vi_ok && !dual_ok {
        Verdict::StationaryOnly
    } else {
        Verdict::Unverified
    };

    Ok(Certificate {
        x: x.as_vector().iter().copied().collect(),
        sigma: blocks.iter().map(|b| b.iter().copied().collect()).collect(),
        vi_residual: vi_res,
        duality_residuals: residuals,
        duality_scales: scales,
        eplus_membership: member,
        eplus_empty: empty,
        verdict,
        tol_vi: opts.tol_vi,
        tol_dual: opts.tol_dual,
        kappa_x: opts.kappa_x,
    })
}
