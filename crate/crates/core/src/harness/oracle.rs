//! Brute-force Nash-equilibrium oracle.
//!
//! Enumerates a per-player grid of the action sets and scores every profile
//! with the unilateral-deviation gap
//!
//! ```text
//! gap(x) = max_i [ J_i(x) − min_{x_i' ∈ grid_i} J_i(x_i', x_{-i}) ].
//! ```
//!
//! Near-zero gap identifies global NE candidates; distinct best-response
//! fixed points with positive gap are the non-global Nash stationary points.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};
use crate::set::ConstraintSet;

const GRID_BUDGET: usize = 10_000_000;

#[derive(Debug, Clone)]
pub struct NeCandidate {
    pub x: StrategyProfile,
    pub gap: f64,
}

/// Grid of one player's action set. Boxes enumerate per coordinate; balls
/// enumerate the bounding box filtered to the ball.
fn player_grid(set: &ConstraintSet, per_dim: usize) -> Result<Vec<DVector<f64>>> {
    let lin = |lo: f64, hi: f64| -> Vec<f64> {
        (0..per_dim)
            .map(|t| lo + (hi - lo) * t as f64 / (per_dim - 1) as f64)
            .collect()
    };
    match set {
        ConstraintSet::Box { lower, upper } => {
            let axes: Vec<Vec<f64>> = lower.iter().zip(upper).map(|(l, u)| lin(*l, *u)).collect();
            Ok(cartesian(&axes))
        }
        ConstraintSet::Ball { center, radius } => {
            let axes: Vec<Vec<f64>> = center
                .iter()
                .map(|c| lin(c - radius, c + radius))
                .collect();
            let c = DVector::from_column_slice(center);
            Ok(cartesian(&axes)
                .into_iter()
                .filter(|p| (p - &c).norm() <= *radius + 1e-12)
                .collect())
        }
        _ => Err(Error::Config(format!("oracle grid unsupported for {set:?}"))),
    }
}

fn cartesian(axes: &[Vec<f64>]) -> Vec<DVector<f64>> {
    let mut out: Vec<Vec<f64>> = vec![vec![]];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for partial in &out {
            for v in axis {
                let mut p = partial.clone();
                p.push(*v);
                next.push(p);
            }
        }
        out = next;
    }
    out.into_iter().map(DVector::from_vec).collect()
}

/// The unilateral-deviation gap of one profile against the given grids.
pub fn ne_gap(game: &GameSpec, grids: &[Vec<DVector<f64>>], x: &StrategyProfile) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for i in 0..game.player_count() {
        let here = game.eval_payoff(i, x)?;
        let mut best = here;
        for cand in &grids[i] {
            let trial = x.with_block(i, cand);
            let v = game.eval_payoff(i, &trial)?;
            if v < best {
                best = v;
            }
        }
        gap = gap.max(here - best);
    }
    Ok(gap)
}

/// Full-grid scan. Returns locally-best candidates (deduplicated within two
/// grid cells in ℓ∞) sorted by ascending gap.
pub fn brute_force_ne(game: &GameSpec, grid_per_dim: usize) -> Result<Vec<NeCandidate>> {
    if grid_per_dim < 2 {
        return Err(Error::Config("grid needs at least 2 points per dimension".into()));
    }
    let grids: Vec<Vec<DVector<f64>>> = game
        .players()
        .iter()
        .map(|p| player_grid(&p.omega, grid_per_dim))
        .collect::<Result<Vec<_>>>()?;
    let total: usize = grids.iter().map(|g| g.len()).try_fold(1usize, |acc, n| {
        acc.checked_mul(n).filter(|t| *t <= GRID_BUDGET)
    })
    .ok_or_else(|| Error::Budget(format!("profile grid exceeds {GRID_BUDGET} points")))?;
    let _ = total;

    // Cell size for deduplication.
    let cell = game
        .players()
        .iter()
        .map(|p| match &p.omega {
            ConstraintSet::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| (u - l) / (grid_per_dim - 1) as f64)
                .fold(0.0f64, f64::max),
            ConstraintSet::Ball { radius, .. } => 2.0 * radius / (grid_per_dim - 1) as f64,
            _ => 0.0,
        })
        .fold(0.0f64, f64::max);

    let mut scored: Vec<NeCandidate> = Vec::new();
    let mut indices = vec![0usize; game.player_count()];
    loop {
        let blocks: Vec<DVector<f64>> = indices
            .iter()
            .enumerate()
            .map(|(i, idx)| grids[i][*idx].clone())
            .collect();
        let x = StrategyProfile::from_blocks(&blocks);
        let gap = ne_gap(game, &grids, &x)?;
        scored.push(NeCandidate { x, gap });

        // Advance the mixed-radix counter.
        let mut done = true;
        for (i, idx) in indices.iter_mut().enumerate() {
            *idx += 1;
            if *idx < grids[i].len() {
                done = false;
                break;
            }
            *idx = 0;
        }
        if done {
            break;
        }
    }
    scored.sort_by(|a, b| a.gap.partial_cmp(&b.gap).unwrap());

    // Keep the best representative per ℓ∞ neighborhood.
    let mut kept: Vec<NeCandidate> = Vec::new();
    for cand in scored {
        let close = kept.iter().any(|k| {
            (cand.x.as_vector() - k.x.as_vector())
                .iter()
                .all(|d| d.abs() <= 2.0 * cell + 1e-12)
        });
        if !close {
            kept.push(cand);
        }
        if kept.len() >= 32 {
            break;
        }
    }
    Ok(kept)
}

/// Polishes a candidate with Jacobi projected-gradient best-response sweeps.
pub fn polish(game: &GameSpec, x: &StrategyProfile, iters: usize, step: f64) -> Result<StrategyProfile> {
    let mut cur = x.clone();
    for _ in 0..iters {
        let mut next = cur.clone();
        for i in 0..game.player_count() {
            let g = game.grad_payoff(i, &cur)?;
            let xi = cur.block(i);
            next.set_block(i, &game.player(i).omega.project(&(xi - g * step)));
        }
        cur = next;
    }
    Ok(cur)
}

/// Best candidate of [`brute_force_ne`] after polishing.
pub fn brute_force_best(game: &GameSpec, grid_per_dim: usize) -> Result<StrategyProfile> {
    let cands = brute_force_ne(game, grid_per_dim)?;
    let best = cands
        .into_iter()
        .next()
        .ok_or_else(|| Error::Config("empty candidate list".into()))?;
    polish(game, &best.x, 100, 0.02)
}

/// Projected-gradient stationarity residual `‖x − Π_Ω(x − ∇J(x))‖`.
pub fn stationarity_residual(game: &GameSpec, x: &StrategyProfile) -> Result<f64> {
    let mut r2 = 0.0;
    for i in 0..game.player_count() {
        let g = game.grad_payoff(i, x)?;
        let xi = x.block(i);
        let p = game.player(i).omega.project(&(&xi - g));
        r2 += (xi - p).norm_squared();
    }
    Ok(r2.sqrt())
}

/// Multistart best-response descent: collects distinct limit points (the
/// Nash stationary points reachable by plain gradient play).
pub fn stationary_points(
    game: &GameSpec,
    starts: &[StrategyProfile],
    iters: usize,
    step: f64,
) -> Result<Vec<StrategyProfile>> {
    let mut out: Vec<StrategyProfile> = Vec::new();
    for s in starts {
        let limit = polish(game, s, iters, step)?;
        if stationarity_residual(game, &limit)? < 1e-5 * (1.0 + limit.as_vector().norm()) {
            let fresh = out
                .iter()
                .all(|k| (k.as_vector() - limit.as_vector()).norm() > 1e-2);
            if fresh {
                out.push(limit);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::builders;

    #[test]
    fn oracle_finds_quadratic_ne() {
        let game = builders::convex_quadratic_game();
        let best = brute_force_best(&game, 81).unwrap();
        let (x1, x2) = builders::convex_quadratic_ne();
        assert!((best.as_vector()[0] - x1).abs() < 2e-2, "{} vs {x1}", best.as_vector()[0]);
        assert!((best.as_vector()[1] - x2).abs() < 2e-2);
    }

    #[test]
    fn budget_is_enforced() {
        let game = builders::build_sensor_game(10, 1, (5.0, 10.0), (-6.0, 6.0), true).unwrap();
        assert!(matches!(brute_force_ne(&game, 101), Err(Error::Budget(_))));
    }

    #[test]
    fn single_player_reduces_to_minimization() {
        use crate::game::{CanonicalFunction, CanonicalKind, IntervalBox, PlayerSpec};
        use crate::game::{QuadraticComponent, QuadraticOperator};
        use nalgebra::{DMatrix, DVector};
        // J = (x² − 1)², minima at ±1; grid minimizer must be one of them.
        let comp = QuadraticComponent::new(
            DMatrix::from_element(1, 1, 1.0),
            DVector::zeros(1),
            -1.0,
        );
        let game = GameSpec::new(
            vec![PlayerSpec {
                omega: ConstraintSet::Box { lower: vec![-2.0], upper: vec![2.0] },
                lambda: QuadraticOperator::new(vec![comp]).unwrap(),
                psi: CanonicalFunction::new(
                    CanonicalKind::SumSquares,
                    IntervalBox::new(vec![-1.5], vec![3.5]).unwrap(),
                )
                .unwrap(),
            }],
            None,
        )
        .unwrap();
        let cands = brute_force_ne(&game, 201).unwrap();
        let best = &cands[0];
        assert!(best.gap < 1e-9);
        assert!((best.x.as_vector()[0].abs() - 1.0).abs() < 1e-2);
    }
}
