//! Experiment and test instance builders.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::game::{
    CanonicalFunction, CanonicalKind, GameSpec, IntervalBox, PlayerSpec, PotentialSpec,
    ProfileLayout, QuadraticComponent, QuadraticOperator, StrategyProfile,
};
use crate::set::ConstraintSet;
use crate::vi::{DualProfile, JointPoint};

/// Two players on `Ω = [a, b]` with `Λ_i = (x_i − x_{3−i})² − d` and
/// `Ψ_i = ξ²`; the primal domain is the interval the operator actually
/// attains, so `Θ* = [−2d, 2(b−a)² − 2d]` and
/// `E⁺ = [κ_x/2, 2(b−a)² − 2d]`.
pub fn remark1_interval_instance(a: f64, b: f64, d: f64) -> GameSpec {
    let layout = ProfileLayout::new(vec![1, 1]);
    let span = (b - a) * (b - a);
    let players = (0..2)
        .map(|i| {
            let comp = distance_sq_component(&layout, i, 1 - i, d);
            PlayerSpec {
                omega: ConstraintSet::Box { lower: vec![a], upper: vec![b] },
                lambda: QuadraticOperator::new(vec![comp]).unwrap(),
                psi: CanonicalFunction::new(
                    CanonicalKind::SumSquares,
                    IntervalBox::new(vec![-d], vec![span - d]).unwrap(),
                )
                .unwrap(),
            }
        })
        .collect();
    GameSpec::new(players, None).unwrap()
}

/// `‖x_i − x_j‖² − d` over the stacked profile.
fn distance_sq_component(layout: &ProfileLayout, i: usize, j: usize, d: f64) -> QuadraticComponent {
    let total = layout.total();
    let (oi, ni) = (layout.offset_of(i), layout.dim_of(i));
    let (oj, nj) = (layout.offset_of(j), layout.dim_of(j));
    assert_eq!(ni, nj);
    let mut q = DMatrix::zeros(total, total);
    for r in 0..ni {
        q[(oi + r, oi + r)] = 1.0;
        q[(oj + r, oj + r)] = 1.0;
        q[(oi + r, oj + r)] = -1.0;
        q[(oj + r, oi + r)] = -1.0;
    }
    QuadraticComponent::new(q, DVector::zeros(total), -d)
}

/// Anchored two-player toy: the Remark-1 distance payoff plus a linear
/// deviation component per player,
/// `J_i = ((x_i − x_j)² − d)² + (x_i − p_i)²`. The anchors separate the
/// players enough that the equilibrium sits at `(x_1 − x_2)² > d`, so the
/// natural dual lands strictly inside `E⁺` and the certificate closes.
pub fn remark1_toy() -> GameSpec {
    let (a, b, d) = (0.0, 3.0, 2.0);
    let anchors = [0.3, 2.7];
    let layout = ProfileLayout::new(vec![1, 1]);
    let span = (b - a) * (b - a);
    let players = (0..2)
        .map(|i| {
            let edge = distance_sq_component(&layout, i, 1 - i, d);
            let mut l = DVector::zeros(layout.total());
            l[layout.offset_of(i)] = 1.0;
            let anchor = QuadraticComponent::new(
                DMatrix::zeros(layout.total(), layout.total()),
                l,
                -anchors[i],
            );
            PlayerSpec {
                omega: ConstraintSet::Box { lower: vec![a], upper: vec![b] },
                lambda: QuadraticOperator::new(vec![edge, anchor]).unwrap(),
                psi: CanonicalFunction::new(
                    CanonicalKind::SumSquares,
                    IntervalBox::new(vec![-d, -3.5], vec![span - d, 3.5]).unwrap(),
                )
                .unwrap(),
            }
        })
        .collect();
    GameSpec::new(players, None).unwrap()
}

/// Two-player game with convex own-payoffs and a unique interior equilibrium
/// solving a linear system: `J_i = Λ_i²` with
/// `Λ_i = x_i² + εx_i x_j + b_i x_i + c_i > 0` on Ω. Because Λ stays
/// positive, player best responses solve `∇_{x_i}Λ_i = 0`, which is linear.
pub fn convex_quadratic_game() -> GameSpec {
    let layout = ProfileLayout::new(vec![1, 1]);
    let (eps, b1, b2, c) = quad_game_params();
    let players = (0..2)
        .map(|i| {
            let a = DMatrix::from_element(1, 1, 1.0);
            let cross = vec![(1 - i, DMatrix::from_element(1, 1, eps))];
            let b = DVector::from_element(1, if i == 0 { b1 } else { b2 });
            let comp = QuadraticOperator::component_from_player_form(&layout, i, &a, &cross, &b, c);
            PlayerSpec {
                omega: ConstraintSet::Box { lower: vec![-2.0], upper: vec![2.0] },
                lambda: QuadraticOperator::new(vec![comp]).unwrap(),
                psi: CanonicalFunction::new(
                    CanonicalKind::SumSquares,
                    IntervalBox::new(vec![0.5], vec![12.0]).unwrap(),
                )
                .unwrap(),
            }
        })
        .collect();
    GameSpec::new(players, None).unwrap()
}

fn quad_game_params() -> (f64, f64, f64, f64) {
    (0.5, -1.0, 0.8, 2.0)
}

/// The analytic equilibrium of [`convex_quadratic_game`]: the solution of
/// `2x_i + ε x_j + b_i = 0`.
pub fn convex_quadratic_ne() -> (f64, f64) {
    let (eps, b1, b2, _) = quad_game_params();
    let det = 4.0 - eps * eps;
    let x1 = (-2.0 * b1 + eps * b2) / det;
    let x2 = (-2.0 * b2 + eps * b1) / det;
    (x1, x2)
}

/// Decoupled two-player instance whose pseudo-gradient is strongly monotone
/// on Ξ, with the equilibrium pinned at the lower action bound so the
/// residual gradient is nonzero there (the regime where the harmonic step
/// schedule exhibits its 1/k distance law). `Λ_i = a x_i² + c` on
/// `Ω = [x_lo, x_hi]`, with Θ starting exactly at `Λ(x_lo)`.
pub fn strongly_monotone_instance() -> GameSpec {
    let p = sm_params();
    let players = (0..2)
        .map(|i| {
            let mut q = DMatrix::zeros(2, 2);
            q[(i, i)] = p.a;
            let comp = QuadraticComponent::new(q, DVector::zeros(2), p.c);
            let lam_lo = p.a * p.x_lo * p.x_lo + p.c;
            let lam_hi = p.a * p.x_hi * p.x_hi + p.c;
            PlayerSpec {
                omega: ConstraintSet::Box { lower: vec![p.x_lo], upper: vec![p.x_hi] },
                lambda: QuadraticOperator::new(vec![comp]).unwrap(),
                psi: CanonicalFunction::new(
                    CanonicalKind::SumSquares,
                    IntervalBox::new(vec![lam_lo], vec![lam_hi + 0.05]).unwrap(),
                )
                .unwrap(),
            }
        })
        .collect();
    GameSpec::new(players, None).unwrap()
}

struct SmParams {
    a: f64,
    c: f64,
    x_lo: f64,
    x_hi: f64,
}

fn sm_params() -> SmParams {
    SmParams { a: 0.05, c: 0.5, x_lo: 0.25, x_hi: 2.0 }
}

/// The known VI solution of [`strongly_monotone_instance`]: each player at
/// the lower bound with the duality-consistent σ.
pub fn strongly_monotone_solution(game: &GameSpec) -> JointPoint {
    let p = sm_params();
    let lam = p.a * p.x_lo * p.x_lo + p.c;
    let x = StrategyProfile::from_blocks(&[
        DVector::from_element(1, p.x_lo),
        DVector::from_element(1, p.x_lo),
    ]);
    let sigma = DualProfile::from_blocks(
        game,
        vec![DVector::from_element(1, 2.0 * lam), DVector::from_element(1, 2.0 * lam)],
    )
    .unwrap();
    JointPoint::new(x, sigma)
}

/// Parameters of the generated two-player log-sum-exp game.
pub struct LogSumExpParams {
    pub beta1: f64,
    pub beta2: f64,
    pub fold1: f64,
    pub fold2: f64,
    pub box_half: f64,
    pub ball_radius: f64,
}

pub fn logsumexp_params(seed: u64) -> LogSumExpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(17));
    // Training-data draw: mean from N(0, 0.25), sample with unit variance.
    let mu = 0.5 * gaussian(&mut rng);
    let beta2 = mu + gaussian(&mut rng);
    LogSumExpParams {
        beta1: 5.0,
        beta2,
        fold1: 0.3,
        fold2: 1.5,
        box_half: 4.0,
        ball_radius: 2.0,
    }
}

/// Adversarial two-player game built from the log-sum-exp payoff: player 1
/// carries `Λ_{1,1} = −x₁² − x₁x₂ − β₂x₁` inside `Ψ = β₁ log(1+e^ξ)` plus a
/// folded quadratic regularizer component, and player 2 carries the mirrored
/// operator with its own folded regularizer. The regularizer components give
/// `P_i(σ)` a positive direction, so `E⁺` is a nonempty polyhedron and the
/// certificate machinery applies even though each player's payoff is
/// non-convex in its own decision.
pub fn build_logsumexp_game(seed: u64) -> GameSpec {
    let p = logsumexp_params(seed);
    let layout = ProfileLayout::new(vec![1, 1]);
    let total = layout.total();

    // Λ_{1,1} = −x₁² − x₁x₂ − β₂x₁.
    let mut q = DMatrix::zeros(total, total);
    q[(0, 0)] = -1.0;
    q[(0, 1)] = -0.5;
    q[(1, 0)] = -0.5;
    let mut l = DVector::zeros(total);
    l[0] = -p.beta2;
    let lse1 = QuadraticComponent::new(q, l, 0.0);

    // Folded regularizer of player 1: λ₁ x₁².
    let mut q = DMatrix::zeros(total, total);
    q[(0, 0)] = p.fold1;
    let reg1 = QuadraticComponent::new(q, DVector::zeros(total), 0.0);

    // Player 2 sees the mirrored coupling: Λ_{2,1} = x₁² + x₁x₂ + β₂x₁.
    let mut q = DMatrix::zeros(total, total);
    q[(0, 0)] = 1.0;
    q[(0, 1)] = 0.5;
    q[(1, 0)] = 0.5;
    let mut l = DVector::zeros(total);
    l[0] = p.beta2;
    let lse2 = QuadraticComponent::new(q, l, 0.0);

    let mut q = DMatrix::zeros(total, total);
    q[(1, 1)] = p.fold2;
    let reg2 = QuadraticComponent::new(q, DVector::zeros(total), 0.0);

    let players = vec![
        PlayerSpec {
            omega: ConstraintSet::Box {
                lower: vec![-p.box_half],
                upper: vec![p.box_half],
            },
            lambda: QuadraticOperator::new(vec![lse1, reg1]).unwrap(),
            psi: CanonicalFunction::with_default_domain(
                CanonicalKind::ScaledLogistic { beta1: p.beta1 },
                2,
            ),
        },
        PlayerSpec {
            omega: ConstraintSet::Ball { center: vec![0.0], radius: p.ball_radius },
            lambda: QuadraticOperator::new(vec![lse2, reg2]).unwrap(),
            psi: CanonicalFunction::with_default_domain(
                CanonicalKind::ScaledLogistic { beta1: p.beta1 },
                2,
            ),
        },
    ];
    GameSpec::new(players, None).unwrap()
}

/// Ring sensor network as a potential game. Ground-truth positions sit on a
/// jittered circle; distance parameters are set to the exact squared
/// neighbor distances and the deviation targets to `e_i = D_i x_i◇`, so the
/// mean localization error has a known zero.
pub fn build_sensor_game(
    n_sensors: usize,
    seed: u64,
    d_range: (f64, f64),
    box_bounds: (f64, f64),
    deviation: bool,
) -> Result<GameSpec> {
    if n_sensors < 3 {
        return Err(Error::Config("sensor ring needs at least 3 nodes".into()));
    }
    let (lo, hi) = box_bounds;
    let truth = sensor_ground_truth(n_sensors, seed, d_range, box_bounds)?;
    let n2 = 2 * n_sensors;
    let layout = ProfileLayout::new(vec![2; n_sensors]);

    // Exact squared distances along the ring.
    let mut dists = Vec::with_capacity(n_sensors);
    for i in 0..n_sensors {
        let j = (i + 1) % n_sensors;
        let d = (truth.block(i) - truth.block(j)).norm_squared();
        let diam2 = 2.0 * (hi - lo) * (hi - lo);
        if d > diam2 {
            return Err(Error::Config(format!(
                "edge {i}-{j} distance parameter {d} exceeds the box diameter² {diam2}"
            )));
        }
        dists.push(d);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0xd1f));
    let mut dev_mats = Vec::with_capacity(n_sensors);
    for i in 0..n_sensors {
        let g = DMatrix::from_fn(2, 2, |_, _| 0.5 * gaussian(&mut rng));
        let d_i = DMatrix::identity(2, 2) * 1.8 + g;
        let e_i = &d_i * truth.block(i);
        dev_mats.push((d_i, e_i));
    }

    // Unified potential components: one per unordered ring edge, then the
    // deviation rows. Each edge appears once here and in both endpoint
    // payoffs, which makes the potential exact.
    let mut pot_components = Vec::new();
    for i in 0..n_sensors {
        let j = (i + 1) % n_sensors;
        pot_components.push(distance_sq_component(&layout, i, j, dists[i]));
    }
    if deviation {
        for (i, (d_i, e_i)) in dev_mats.iter().enumerate() {
            for r in 0..2 {
                let mut l = DVector::zeros(n2);
                l[layout.offset_of(i)] = d_i[(r, 0)];
                l[layout.offset_of(i) + 1] = d_i[(r, 1)];
                pot_components.push(QuadraticComponent::new(
                    DMatrix::zeros(n2, n2),
                    l,
                    -e_i[r],
                ));
            }
        }
    }

    let theta = sensor_theta(&pot_components, n_sensors, box_bounds);
    let pot_psi = CanonicalFunction::new(CanonicalKind::SumSquares, theta)?;
    let potential = PotentialSpec {
        lambda: QuadraticOperator::new(pot_components.clone())?,
        psi: pot_psi,
    };

    // Per-player payoffs: both incident edges plus own deviation rows.
    let players = (0..n_sensors)
        .map(|i| {
            let left = (i + n_sensors - 1) % n_sensors;
            let mut comps = vec![
                pot_components[left].clone(),
                pot_components[i].clone(),
            ];
            if deviation {
                comps.push(pot_components[n_sensors + 2 * i].clone());
                comps.push(pot_components[n_sensors + 2 * i + 1].clone());
            }
            let theta = sensor_theta(&comps, n_sensors, box_bounds);
            Ok(PlayerSpec {
                omega: ConstraintSet::Box { lower: vec![lo, lo], upper: vec![hi, hi] },
                lambda: QuadraticOperator::new(comps)?,
                psi: CanonicalFunction::new(CanonicalKind::SumSquares, theta)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    GameSpec::new(players, Some(potential))
}

/// Width of the canonical domain per sensor component. Θ scopes the duality
/// transformation (ξ-clipping and the σ bounds Θ* = 2Θ); a modest symmetric
/// window around the solution values ξ◇ = 0 keeps dual magnitudes — and with
/// them the mirror steps at the paper's `α_k = 0.0637/√k` — at a workable
/// scale, while payoffs remain evaluable everywhere.
const SENSOR_THETA_HALF_WIDTH: f64 = 1.5;

fn sensor_theta(
    comps: &[QuadraticComponent],
    _n_sensors: usize,
    _box_bounds: (f64, f64),
) -> IntervalBox {
    let w = SENSOR_THETA_HALF_WIDTH;
    IntervalBox::new(vec![-w; comps.len()], vec![w; comps.len()])
        .expect("symmetric window is ordered")
}

/// Ground-truth placement: a jittered circle sized so neighbor squared
/// distances land inside `d_range`.
pub fn sensor_ground_truth(
    n_sensors: usize,
    seed: u64,
    d_range: (f64, f64),
    box_bounds: (f64, f64),
) -> Result<StrategyProfile> {
    let (dlo, dhi) = d_range;
    let (blo, bhi) = box_bounds;
    let half_angle = std::f64::consts::PI / n_sensors as f64;
    let r_lo = dlo.sqrt() / (2.0 * half_angle.sin());
    let r_hi = dhi.sqrt() / (2.0 * half_angle.sin());
    let margin = 0.4;
    let r_max_box = (bhi - blo) / 2.0 - margin;
    if r_lo > r_max_box {
        return Err(Error::Config(format!(
            "ring of {n_sensors} nodes with d ∈ [{dlo}, {dhi}] does not fit the box"
        )));
    }
    let r_mid = 0.5 * (r_lo + r_hi.min(r_max_box));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let center = 0.5 * (blo + bhi);

    // Shrink the jitter until every chord stays inside d_range.
    for attempt in 0..8 {
        let scale = 0.5f64.powi(attempt);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let blocks: Vec<DVector<f64>> = (0..n_sensors)
            .map(|i| {
                let ang = phase
                    + std::f64::consts::TAU * i as f64 / n_sensors as f64
                    + scale * 0.25 * half_angle * gaussian(&mut rng);
                let rr = r_mid * (1.0 + scale * 0.03 * gaussian(&mut rng));
                DVector::from_vec(vec![center + rr * ang.cos(), center + rr * ang.sin()])
            })
            .collect();
        let ok = (0..n_sensors).all(|i| {
            let j = (i + 1) % n_sensors;
            let d = (&blocks[i] - &blocks[j]).norm_squared();
            d >= dlo && d <= dhi
                && blocks[i].iter().all(|v| *v > blo + 0.1 && *v < bhi - 0.1)
        });
        if ok {
            return Ok(StrategyProfile::from_blocks(&blocks));
        }
    }
    // Zero jitter always satisfies the chord bounds when r_mid does.
    let blocks: Vec<DVector<f64>> = (0..n_sensors)
        .map(|i| {
            let ang = phase + std::f64::consts::TAU * i as f64 / n_sensors as f64;
            DVector::from_vec(vec![center + r_mid * ang.cos(), center + r_mid * ang.sin()])
        })
        .collect();
    Ok(StrategyProfile::from_blocks(&blocks))
}

pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sensor_ring_shape() {
        let game = build_sensor_game(10, 1, (5.0, 10.0), (-6.0, 6.0), true).unwrap();
        assert_eq!(game.player_count(), 10);
        assert!(game.is_potential());
        // Ring degree 2: two edge components plus two deviation rows.
        assert_eq!(game.player(0).lambda.len(), 4);
        assert_eq!(game.potential().unwrap().lambda.len(), 10 + 20);
    }

    #[test]
    fn sensor_minimal_ring() {
        let game = build_sensor_game(3, 5, (5.0, 10.0), (-6.0, 6.0), true).unwrap();
        assert_eq!(game.player_count(), 3);
    }

    #[test]
    fn sensor_rejects_tiny_ring() {
        assert!(build_sensor_game(2, 1, (5.0, 10.0), (-6.0, 6.0), true).is_err());
    }

    #[test]
    fn sensor_distances_in_range() {
        for seed in [1, 2, 3, 42] {
            let truth = sensor_ground_truth(10, seed, (5.0, 10.0), (-6.0, 6.0)).unwrap();
            for i in 0..10 {
                let j = (i + 1) % 10;
                let d = (truth.block(i) - truth.block(j)).norm_squared();
                assert!((5.0..=10.0).contains(&d), "seed {seed} edge {i}: d = {d}");
            }
        }
    }

    #[test]
    fn sensor_potential_is_exact() {
        // J_i(x_i', x_{-i}) − J_i(x) must equal Ψ(Λ(x')) − Ψ(Λ(x)).
        let game = build_sensor_game(5, 3, (5.0, 10.0), (-6.0, 6.0), true).unwrap();
        let pot = game.potential().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let blocks: Vec<_> = (0..5).map(|i| game.player(i).omega.sample(&mut rng)).collect();
            let x = StrategyProfile::from_blocks(&blocks);
            let i = rng.gen_range(0..5);
            let xi_new = game.player(i).omega.sample(&mut rng);
            let x_new = x.with_block(i, &xi_new);
            let dj = game.eval_payoff(i, &x_new).unwrap() - game.eval_payoff(i, &x).unwrap();
            let dp = pot.psi.value(&pot.lambda.eval(x_new.as_vector())).unwrap()
                - pot.psi.value(&pot.lambda.eval(x.as_vector())).unwrap();
            assert!(
                (dj - dp).abs() <= 1e-8 * (1.0 + dj.abs()),
                "potential mismatch: ΔJ = {dj}, ΔΨ∘Λ = {dp}"
            );
        }
    }

    #[test]
    fn logsumexp_game_shape() {
        let game = build_logsumexp_game(7);
        assert_eq!(game.player_count(), 2);
        assert!(!game.is_potential());
        assert!(matches!(game.player(1).omega, ConstraintSet::Ball { .. }));
    }

    #[test]
    fn convex_quadratic_lambda_positive_on_box() {
        let game = convex_quadratic_game();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x = StrategyProfile::from_blocks(&[
                game.player(0).omega.sample(&mut rng),
                game.player(1).omega.sample(&mut rng),
            ]);
            for i in 0..2 {
                assert!(game.eval_lambda(i, &x).unwrap()[0] > 0.0);
            }
        }
    }

    #[test]
    fn strongly_monotone_solution_is_consistent() {
        let game = strongly_monotone_instance();
        let z = strongly_monotone_solution(&game);
        // Duality relation holds by construction.
        let natural = game.natural_dual(&z.x).unwrap();
        for (b, n) in z.sigma.blocks().iter().zip(&natural) {
            assert!((b - n).norm() < 1e-12);
        }
    }
}
