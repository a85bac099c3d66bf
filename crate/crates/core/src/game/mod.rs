//! Game data model: players, operators, payoffs, and exact gradients.

mod canonical;
pub mod json;
mod quadratic;

pub use canonical::{sigmoid, softplus, CanonicalFunction, CanonicalKind, IntervalBox, DOMAIN_MARGIN};
pub use quadratic::{ProfileLayout, QuadraticComponent, QuadraticOperator};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::set::ConstraintSet;

/// One player's data: action set Ω, operator Λ, canonical function Ψ.
#[derive(Debug, Clone)]
pub struct PlayerSpec {
    pub omega: ConstraintSet,
    pub lambda: QuadraticOperator,
    pub psi: CanonicalFunction,
}

/// Unified operator and canonical function of a potential game. All players
/// share this Λ, Ψ and a single dual variable σ.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub lambda: QuadraticOperator,
    pub psi: CanonicalFunction,
}

/// A complete N-player game description. Immutable after construction; all
/// evaluation operations are pure, so a `GameSpec` can be shared read-only
/// across concurrent solver runs.
#[derive(Debug, Clone)]
pub struct GameSpec {
    players: Vec<PlayerSpec>,
    potential: Option<PotentialSpec>,
    layout: ProfileLayout,
}

impl GameSpec {
    pub fn new(players: Vec<PlayerSpec>, potential: Option<PotentialSpec>) -> Result<Self> {
        if players.is_empty() {
            return Err(Error::Config("game needs at least one player".into()));
        }
        let layout = ProfileLayout::new(players.iter().map(|p| p.omega.dim()).collect());
        for (i, p) in players.iter().enumerate() {
            p.omega.validate().map_err(|e| {
                Error::Config(format!("player {i} action set: {e}"))
            })?;
            if p.lambda.total_dim() != layout.total() {
                return Err(Error::DimensionMismatch {
                    player: i,
                    detail: format!(
                        "operator acts on dimension {}, profile has {}",
                        p.lambda.total_dim(),
                        layout.total()
                    ),
                });
            }
            if p.psi.dim() != p.lambda.len() {
                return Err(Error::DimensionMismatch {
                    player: i,
                    detail: format!(
                        "Ψ has dimension {}, Λ has {} components",
                        p.psi.dim(),
                        p.lambda.len()
                    ),
                });
            }
        }
        if let Some(pot) = &potential {
            if pot.lambda.total_dim() != layout.total() {
                return Err(Error::Config("potential operator dimension mismatch".into()));
            }
            if pot.psi.dim() != pot.lambda.len() {
                return Err(Error::Config("potential Ψ/Λ dimension mismatch".into()));
            }
        }
        Ok(GameSpec { players, potential, layout })
    }

    pub fn player_count(&self) -> usize {
        self.players.len()
    }

    pub fn player(&self, i: usize) -> &PlayerSpec {
        &self.players[i]
    }

    pub fn players(&self) -> &[PlayerSpec] {
        &self.players
    }

    pub fn layout(&self) -> &ProfileLayout {
        &self.layout
    }

    pub fn is_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn potential(&self) -> Option<&PotentialSpec> {
        self.potential.as_ref()
    }

    fn check_profile(&self, i: usize, x: &StrategyProfile) -> Result<()> {
        if i >= self.players.len() {
            return Err(Error::IndexOutOfRange(format!(
                "player {i} of {}",
                self.players.len()
            )));
        }
        if x.layout() != &self.layout {
            return Err(Error::DimensionMismatch {
                player: i,
                detail: format!(
                    "profile of dimension {} does not match game dimension {}",
                    x.as_vector().len(),
                    self.layout.total()
                ),
            });
        }
        Ok(())
    }

    /// `col{Λ_{i,1}(x), …, Λ_{i,q_i}(x)}`.
    pub fn eval_lambda(&self, i: usize, x: &StrategyProfile) -> Result<DVector<f64>> {
        self.check_profile(i, x)?;
        Ok(self.players[i].lambda.eval(x.as_vector()))
    }

    /// Matrix whose row `k` is `∇_{x_i} Λ_{i,k}(x)` (q_i × n).
    pub fn grad_lambda_xi(&self, i: usize, x: &StrategyProfile) -> Result<DMatrix<f64>> {
        self.check_profile(i, x)?;
        Ok(self.players[i].lambda.grad_wrt(&self.layout, i, x.as_vector()))
    }

    /// The constant matrix `∇²_{x_i} Λ_{i,k}`.
    pub fn hessian_lambda(&self, i: usize, k: usize) -> Result<DMatrix<f64>> {
        if i >= self.players.len() {
            return Err(Error::IndexOutOfRange(format!(
                "player {i} of {}",
                self.players.len()
            )));
        }
        self.players[i].lambda.hessian_wrt(&self.layout, i, k)
    }

    /// `J_i(x) = Ψ_i(Λ_i(x))`.
    pub fn eval_payoff(&self, i: usize, x: &StrategyProfile) -> Result<f64> {
        let xi = self.eval_lambda(i, x)?;
        self.players[i].psi.value(&xi)
    }

    /// `∇_{x_i} J_i(x) = ∇Ψ_i(Λ_i(x))ᵀ ∇_{x_i}Λ_i(x)` (chain rule).
    pub fn grad_payoff(&self, i: usize, x: &StrategyProfile) -> Result<DVector<f64>> {
        let xi = self.eval_lambda(i, x)?;
        let sigma = self.players[i].psi.grad(&xi)?;
        Ok(self.players[i]
            .lambda
            .weighted_grad_wrt(&self.layout, i, x.as_vector(), &sigma))
    }

    /// Stacked payoff pseudo-gradient `col{∇_{x_i} J_i(x)}` (baselines).
    pub fn payoff_pseudo_gradient(&self, x: &StrategyProfile) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(self.layout.total());
        for i in 0..self.player_count() {
            let gi = self.grad_payoff(i, x)?;
            self.layout.set_block(&mut g, i, &gi);
        }
        Ok(g)
    }

    /// The dual variable implied by the duality relation `σ_i = ∇Ψ_i(Λ_i(x))`
    /// at the given profile, per player (or unified in potential mode).
    pub fn natural_dual(&self, x: &StrategyProfile) -> Result<Vec<DVector<f64>>> {
        if let Some(pot) = &self.potential {
            let xi = pot.lambda.eval(x.as_vector());
            return Ok(vec![pot.psi.grad(&xi)?]);
        }
        (0..self.player_count())
            .map(|i| {
                let xi = self.eval_lambda(i, x)?;
                self.players[i].psi.grad(&xi)
            })
            .collect()
    }

    /// True when every player's slice lies in its Ω_i within `tol`.
    pub fn profile_feasible(&self, x: &StrategyProfile, tol: f64) -> bool {
        self.players
            .iter()
            .enumerate()
            .all(|(i, p)| p.omega.contains(&x.block(i), tol))
    }
}

/// Concatenated decision vector with per-player slicing metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile {
    data: DVector<f64>,
    layout: ProfileLayout,
}

impl StrategyProfile {
    pub fn new(data: DVector<f64>, layout: ProfileLayout) -> Result<Self> {
        if data.len() != layout.total() {
            return Err(Error::Config(format!(
                "profile vector length {} does not match layout total {}",
                data.len(),
                layout.total()
            )));
        }
        Ok(StrategyProfile { data, layout })
    }

    pub fn from_blocks(blocks: &[DVector<f64>]) -> Self {
        let layout = ProfileLayout::new(blocks.iter().map(|b| b.len()).collect());
        let mut data = DVector::zeros(layout.total());
        for (i, b) in blocks.iter().enumerate() {
            layout.set_block(&mut data, i, b);
        }
        StrategyProfile { data, layout }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    pub fn layout(&self) -> &ProfileLayout {
        &self.layout
    }

    pub fn block(&self, i: usize) -> DVector<f64> {
        self.layout.block(&self.data, i)
    }

    pub fn set_block(&mut self, i: usize, v: &DVector<f64>) {
        self.layout.set_block(&mut self.data, i, v);
    }

    pub fn with_block(&self, i: usize, v: &DVector<f64>) -> StrategyProfile {
        let mut out = self.clone();
        out.set_block(i, v);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::builders;

    #[test]
    fn remark1_payoff_gradient_hand_value() {
        // Ψ = ξ², Λ = (x₁−x₂)² − d: ∇_{x₁}J = 4((x₁−x₂)²−d)(x₁−x₂).
        let game = builders::remark1_interval_instance(0.0, 3.0, 2.0);
        let x = StrategyProfile::new(
            DVector::from_vec(vec![1.0, 0.0]),
            game.layout().clone(),
        )
        .unwrap();
        let g = game.grad_payoff(0, &x).unwrap();
        assert!((g[0] - (-4.0)).abs() < 1e-12, "got {}", g[0]);
    }

    #[test]
    fn payoff_values() {
        let game = builders::remark1_interval_instance(0.0, 3.0, 2.0);
        // Λ = (1−0)² − 2 = −1, J = 1.
        let x = StrategyProfile::new(
            DVector::from_vec(vec![1.0, 0.0]),
            game.layout().clone(),
        )
        .unwrap();
        assert!((game.eval_payoff(0, &x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_logistic_payoff_at_zero_operator() {
        // Ψ = β₁ log(1+e^ξ) with Λ ≡ 0 → log 2.
        let layout = ProfileLayout::new(vec![1]);
        let lambda = QuadraticOperator::new(vec![QuadraticComponent::constant(1, 0.0)]).unwrap();
        let psi = CanonicalFunction::with_default_domain(
            CanonicalKind::ScaledLogistic { beta1: 1.0 },
            1,
        );
        let game = GameSpec::new(
            vec![PlayerSpec {
                omega: ConstraintSet::FullSpace { dim: 1 },
                lambda,
                psi,
            }],
            None,
        )
        .unwrap();
        let x = StrategyProfile::new(DVector::from_vec(vec![0.3]), layout).unwrap();
        assert!((game.eval_payoff(0, &x).unwrap() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn dimension_mismatch_is_reported_with_player() {
        let game = builders::remark1_interval_instance(0.0, 3.0, 2.0);
        let bad = StrategyProfile::from_blocks(&[
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![0.0]),
            DVector::from_vec(vec![0.0]),
        ]);
        let err = game.eval_lambda(0, &bad).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { player: 0, .. }));
    }

    #[test]
    fn hessian_index_out_of_range() {
        let game = builders::remark1_interval_instance(0.0, 3.0, 2.0);
        assert!(game.hessian_lambda(0, 5).is_err());
        assert!(game.hessian_lambda(7, 0).is_err());
    }
}
