//! Variational-inequality layer: the stacked pseudo-gradient `F(z)` over
//! `z = col{x, σ}` and natural-map residuals.
//!
//! The pseudo-gradient collects every player's complementary-function
//! stationarity directions:
//!
//! ```text
//! F(z) = col{ col{Σ_k [σ_i]_k ∇_{x_i}Λ_{i,k}(x)}_i ,
//!             col{−Λ_i(x) + ∇Ψ*_i(σ_i)}_i }
//! ```
//!
//! (one shared bottom block in potential mode). `z◇` solves VI(Ξ, F) with
//! `Ξ = Ω × E⁺` exactly when the natural-map residual
//! `‖z − Π_Ξ(z − F(z))‖` vanishes.

use nalgebra::DVector;
use rand::Rng;

use crate::duality::DualFeasibleSet;
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};

/// Dual block of a joint point: per-player vectors, or one unified vector in
/// potential mode.
#[derive(Debug, Clone, PartialEq)]
pub enum DualProfile {
    PerPlayer(Vec<DVector<f64>>),
    Unified(DVector<f64>),
}

impl DualProfile {
    pub fn blocks(&self) -> Vec<DVector<f64>> {
        match self {
            DualProfile::PerPlayer(v) => v.clone(),
            DualProfile::Unified(s) => vec![s.clone()],
        }
    }

    pub fn total_len(&self) -> usize {
        match self {
            DualProfile::PerPlayer(v) => v.iter().map(|b| b.len()).sum(),
            DualProfile::Unified(s) => s.len(),
        }
    }

    /// The natural dual profile for `game`, from per-player blocks.
    pub fn from_blocks(game: &GameSpec, blocks: Vec<DVector<f64>>) -> Result<Self> {
        if game.is_potential() {
            if blocks.len() != 1 {
                return Err(Error::Config(
                    "potential games carry a single unified dual block".into(),
                ));
            }
            Ok(DualProfile::Unified(blocks.into_iter().next().unwrap()))
        } else {
            if blocks.len() != game.player_count() {
                return Err(Error::Config(format!(
                    "expected {} dual blocks, got {}",
                    game.player_count(),
                    blocks.len()
                )));
            }
            Ok(DualProfile::PerPlayer(blocks))
        }
    }
}

/// A stacked point `z = col{x, σ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPoint {
    pub x: StrategyProfile,
    pub sigma: DualProfile,
}

impl JointPoint {
    pub fn new(x: StrategyProfile, sigma: DualProfile) -> Self {
        JointPoint { x, sigma }
    }

    pub fn total_dim(&self) -> usize {
        self.x.as_vector().len() + self.sigma.total_len()
    }

    /// Flattens to `col{x, σ_1, …}`.
    pub fn stack(&self) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.total_dim());
        v.extend(self.x.as_vector().iter());
        for b in self.sigma.blocks() {
            v.extend(b.iter());
        }
        DVector::from_vec(v)
    }

    /// Rebuilds a joint point from a stacked vector.
    pub fn unstack(game: &GameSpec, v: &DVector<f64>) -> Result<JointPoint> {
        let nx = game.layout().total();
        let qs = dual_block_dims(game);
        let total: usize = nx + qs.iter().sum::<usize>();
        if v.len() != total {
            return Err(Error::Config(format!(
                "stacked vector has length {}, expected {}",
                v.len(),
                total
            )));
        }
        let x = StrategyProfile::new(v.rows(0, nx).into_owned(), game.layout().clone())?;
        let mut offset = nx;
        let mut blocks = Vec::with_capacity(qs.len());
        for q in qs {
            blocks.push(v.rows(offset, q).into_owned());
            offset += q;
        }
        Ok(JointPoint::new(x, DualProfile::from_blocks(game, blocks)?))
    }

    pub fn distance(&self, other: &JointPoint) -> f64 {
        (self.stack() - other.stack()).norm()
    }
}

/// Dual block dimensions of a game (per player, or one unified).
pub fn dual_block_dims(game: &GameSpec) -> Vec<usize> {
    if let Some(pot) = game.potential() {
        vec![pot.lambda.len()]
    } else {
        (0..game.player_count())
            .map(|i| game.player(i).lambda.len())
            .collect()
    }
}

/// The stacked pseudo-gradient `F(z)`.
pub fn pseudo_gradient(game: &GameSpec, z: &JointPoint) -> Result<DVector<f64>> {
    let layout = game.layout();
    let mut out = DVector::zeros(z.total_dim());

    if let Some(pot) = game.potential() {
        let sigma = match &z.sigma {
            DualProfile::Unified(s) => s,
            DualProfile::PerPlayer(_) => {
                return Err(Error::Config("potential game expects a unified dual".into()))
            }
        };
        for i in 0..game.player_count() {
            let gi = pot
                .lambda
                .weighted_grad_wrt(layout, i, z.x.as_vector(), sigma);
            out.rows_mut(layout.offset_of(i), layout.dim_of(i)).copy_from(&gi);
        }
        let lam = pot.lambda.eval(z.x.as_vector());
        let bottom = -lam + pot.psi.conj_grad(sigma)?;
        out.rows_mut(layout.total(), bottom.len()).copy_from(&bottom);
        return Ok(out);
    }

    let blocks = match &z.sigma {
        DualProfile::PerPlayer(b) => b,
        DualProfile::Unified(_) => {
            return Err(Error::Config("per-player game expects per-player duals".into()))
        }
    };
    if blocks.len() != game.player_count() {
        return Err(Error::Config("dual block count mismatch".into()));
    }
    let mut offset = layout.total();
    for i in 0..game.player_count() {
        let p = game.player(i);
        let gi = p
            .lambda
            .weighted_grad_wrt(layout, i, z.x.as_vector(), &blocks[i]);
        out.rows_mut(layout.offset_of(i), layout.dim_of(i)).copy_from(&gi);
        let lam = game.eval_lambda(i, &z.x)?;
        let bottom = -lam + p.psi.conj_grad(&blocks[i])?;
        out.rows_mut(offset, bottom.len()).copy_from(&bottom);
        offset += bottom.len();
    }
    Ok(out)
}

/// Euclidean projection of a stacked vector onto `Ξ = Ω × E⁺`, blockwise.
/// The projection is Euclidean regardless of the mirror maps a solver uses:
/// the residual is a diagnostic, and the Euclidean projection is defined for
/// every supported set variant.
pub fn project_xi(
    game: &GameSpec,
    eplus: &[DualFeasibleSet],
    v: &DVector<f64>,
) -> Result<DVector<f64>> {
    let layout = game.layout();
    let mut out = v.clone();
    for i in 0..game.player_count() {
        let xi = layout.block(v, i);
        let p = game.player(i).omega.project(&xi);
        out.rows_mut(layout.offset_of(i), layout.dim_of(i)).copy_from(&p);
    }
    let mut offset = layout.total();
    for set in eplus {
        let q = set.dim();
        let s = v.rows(offset, q).into_owned();
        let p = set.project(&s)?;
        out.rows_mut(offset, q).copy_from(&p);
        offset += q;
    }
    if offset != v.len() {
        return Err(Error::Config("stacked vector does not match Ξ layout".into()));
    }
    Ok(out)
}

/// Natural-map residual `‖z − Π_Ξ(z − F(z))‖₂`.
pub fn vi_residual(game: &GameSpec, eplus: &[DualFeasibleSet], z: &JointPoint) -> Result<f64> {
    let stacked = z.stack();
    let f = pseudo_gradient(game, z)?;
    let proj = project_xi(game, eplus, &(&stacked - &f))?;
    Ok((stacked - proj).norm())
}

/// Draws `count` feasible points of Ξ (interior-biased for entropy safety).
pub fn sample_xi<R: Rng>(
    game: &GameSpec,
    eplus: &[DualFeasibleSet],
    count: usize,
    rng: &mut R,
) -> Result<Vec<JointPoint>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let blocks: Vec<DVector<f64>> = (0..game.player_count())
            .map(|i| game.player(i).omega.sample(rng))
            .collect();
        let x = StrategyProfile::from_blocks(&blocks);
        let mut sblocks = Vec::with_capacity(eplus.len());
        for set in eplus {
            let anchor = set.interior_point().ok_or_else(|| {
                Error::Estimation("E⁺ has no interior point to sample around".into())
            })?;
            let poly = set.as_polyhedron()?;
            // Random box draw projected back into E⁺, blended toward the
            // interior anchor so the sample stays strictly feasible.
            let raw = DVector::from_iterator(
                set.dim(),
                (0..set.dim()).map(|k| {
                    let lo = poly.lower[k].max(anchor[k] - 10.0);
                    let hi = poly.upper[k].min(anchor[k] + 10.0);
                    rng.gen_range(lo..=hi)
                }),
            );
            let projected = set.project(&raw)?;
            sblocks.push(&projected * 0.95 + &anchor * 0.05);
        }
        out.push(JointPoint::new(x, DualProfile::from_blocks(game, sblocks)?));
    }
    Ok(out)
}

/// First-order check of Eq. (9) at a candidate solution: sampled feasible z
/// must satisfy `(z − z◇)ᵀ F(z◇) ≥ −tol`.
pub fn first_order_check<R: Rng>(
    game: &GameSpec,
    eplus: &[DualFeasibleSet],
    z_star: &JointPoint,
    draws: usize,
    tol: f64,
    rng: &mut R,
) -> Result<bool> {
    let f = pseudo_gradient(game, z_star)?;
    let zs = z_star.stack();
    for z in sample_xi(game, eplus, draws, rng)? {
        if (z.stack() - &zs).dot(&f) < -tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Empirical strong-monotonicity modulus: the smallest sampled quotient
/// `(F(z)−F(z'))ᵀ(z−z') / ‖z−z'‖²` over feasible pairs.
pub fn monotonicity_probe<R: Rng>(
    game: &GameSpec,
    eplus: &[DualFeasibleSet],
    pairs: usize,
    rng: &mut R,
) -> Result<f64> {
    let pts = sample_xi(game, eplus, 2 * pairs, rng)?;
    let mut kappa = f64::INFINITY;
    for w in pts.chunks_exact(2) {
        let (a, b) = (&w[0], &w[1]);
        let dz = a.stack() - b.stack();
        let n2 = dz.norm_squared();
        if n2 < 1e-16 {
            continue;
        }
        let df = pseudo_gradient(game, a)? - pseudo_gradient(game, b)?;
        kappa = kappa.min(df.dot(&dz) / n2);
    }
    if kappa.is_finite() {
        Ok(kappa)
    } else {
        Err(Error::Estimation("no usable sample pairs for monotonicity probe".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::duality::eplus_all;
    use crate::harness::builders;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stack_unstack_roundtrip_preserves_residual() {
        let game = builders::remark1_toy();
        let eplus = eplus_all(&game, 1e-2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let z = sample_xi(&game, &eplus, 1, &mut rng).unwrap().pop().unwrap();
        let r1 = vi_residual(&game, &eplus, &z).unwrap();
        let z2 = JointPoint::unstack(&game, &z.stack()).unwrap();
        let r2 = vi_residual(&game, &eplus, &z2).unwrap();
        assert_eq!(r1, r2, "residual must be invariant under stack/unstack");
    }

    #[test]
    fn residual_positive_far_from_solution() {
        let game = builders::remark1_toy();
        let eplus = eplus_all(&game, 1e-2).unwrap();
        let x = StrategyProfile::from_blocks(&[
            DVector::from_vec(vec![-3.0]),
            DVector::from_vec(vec![3.0]),
        ]);
        let sigma = DualProfile::PerPlayer(vec![
            DVector::from_vec(vec![9.0, 6.0]),
            DVector::from_vec(vec![9.0, 6.0]),
        ]);
        let r = vi_residual(&game, &eplus, &JointPoint::new(x, sigma)).unwrap();
        assert!(r > 1e-2, "residual {r} should be clearly positive");
    }

    #[test]
    fn zero_sigma_zero_affine_gives_zero_top_block() {
        let game = builders::remark1_interval_instance(0.0, 3.0, 2.0);
        let x = StrategyProfile::from_blocks(&[
            DVector::from_vec(vec![1.0]),
            DVector::from_vec(vec![2.0]),
        ]);
        let sigma = DualProfile::PerPlayer(vec![
            DVector::from_vec(vec![0.0]),
            DVector::from_vec(vec![0.0]),
        ]);
        let f = pseudo_gradient(&game, &JointPoint::new(x, sigma)).unwrap();
        assert!(f.rows(0, 2).norm() == 0.0);
    }
}
