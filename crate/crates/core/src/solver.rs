//! Discrete solver: mirror-descent iterations on the complementary problem,
//! step-size schedules, weighted-average iterates, and first-order baselines.
//!
//! One iteration of the general method, all players reading the same k-th
//! profile (Jacobi update):
//!
//! ```text
//! ξ_i = Π_{Θ_i}^{Ψ_i}(σ_i)                                  (conjugate of Ψ)
//! x_i⁺ = ∇φ_i*(∇φ_i(x_i) − α·σ_iᵀ∇_{x_i}Λ_i(x))             (decision update)
//! σ_i⁺ = ∇ϕ_i*(∇ϕ_i(σ_i) + α·(Λ_i(x) − ξ_i))                (dual update)
//! ```
//!
//! The x-update is a mirror-descent step; the σ-update is its ascent twin.
//! Potential games run the same scheme with one unified (ξ, σ) pair.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::duality::{
    certify_with_sets, complementary_value, Certificate, CertifyOptions, DualFeasibleSet,
    DEFAULT_KAPPA_X,
};
use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};
use crate::mirror::MirrorMap;
use crate::ode::MirrorBundle;
use crate::vi::{pseudo_gradient, sample_xi, DualProfile, JointPoint};

/// Step-size schedule; iterations count from k = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Schedule {
    /// `α_k = 2 / (κ (k+1))` — the strongly-monotone O(1/k) schedule.
    HarmonicKappa { kappa: f64 },
    /// `α_k = c / √k` — the potential-game O(1/√k) schedule.
    InvSqrt { c: f64 },
    Constant { alpha: f64 },
}

impl Schedule {
    pub fn alpha(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match self {
            Schedule::HarmonicKappa { kappa } => 2.0 / (kappa * (k as f64 + 1.0)),
            Schedule::InvSqrt { c } => c / (k as f64).sqrt(),
            Schedule::Constant { alpha } => *alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Schedule::HarmonicKappa { kappa } => *kappa > 0.0,
            Schedule::InvSqrt { c } => *c > 0.0,
            Schedule::Constant { alpha } => *alpha > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config("step constants must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Alg1,
    Alg1Potential,
    Gd,
    Pgd,
    Omd,
    Eg,
    Sgd,
    Proximal,
}

impl Method {
    pub fn is_baseline(&self) -> bool {
        !matches!(self, Method::Alg1 | Method::Alg1Potential)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    pub schedule: Schedule,
    pub max_iters: usize,
    /// Terminal criterion `‖x^{k+1} − x^k‖ ≤ t_tol`.
    pub t_tol: f64,
    pub seed: u64,
    pub kappa_x: f64,
    pub tol_dual: f64,
    /// Additive gradient-noise std for SGD; default `0.05·‖∇J(x⁰)‖`.
    pub sgd_noise: Option<f64>,
    /// Proximal-point weight ρ of the proximal baseline.
    pub proximal_rho: f64,
    /// Trace thinning: record every n-th iterate (1 = all).
    pub record_every: usize,
    /// Iterations at which the full profile is snapshotted (metric tables).
    #[serde(default)]
    pub checkpoints: Vec<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Alg1,
            schedule: Schedule::InvSqrt { c: 0.1 },
            max_iters: 1000,
            t_tol: 1e-3,
            seed: 0,
            kappa_x: DEFAULT_KAPPA_X,
            tol_dual: 1e-5,
            sgd_noise: None,
            proximal_rho: 1.0,
            record_every: 1,
            checkpoints: vec![],
        }
    }
}

/// Per-iteration record: `k, alpha, dist_sq, gap, step_norm`.
#[derive(Debug, Clone, Serialize)]
pub struct IterRow {
    pub k: usize,
    pub alpha: f64,
    pub dist_sq: Option<f64>,
    pub gap: Option<f64>,
    pub step_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub x: StrategyProfile,
    pub sigma: DualProfile,
    /// Weighted averages `x̂ = Σ α_j x^j / Σ α_j` (and likewise σ̂).
    pub x_hat: StrategyProfile,
    pub sigma_hat: DualProfile,
    pub rows: Vec<IterRow>,
    /// Profiles captured at the configured checkpoint iterations.
    pub snapshots: Vec<(usize, StrategyProfile)>,
    pub certificate: Certificate,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("k,alpha,dist_sq,gap,step_norm\n");
        for r in &self.rows {
            let d = r.dist_sq.map_or("nan".to_string(), |v| format!("{v:.16e}"));
            let g = r.gap.map_or("nan".to_string(), |v| format!("{v:.16e}"));
            out.push_str(&format!(
                "{},{:.16e},{},{},{:.16e}\n",
                r.k, r.alpha, d, g, r.step_norm
            ));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            iterations: usize,
            converged: bool,
            x: Vec<f64>,
            x_hat: Vec<f64>,
            certificate: &'a Certificate,
        }
        Ok(serde_json::to_string_pretty(&Summary {
            iterations: self.iterations,
            converged: self.converged,
            x: self.x.as_vector().iter().copied().collect(),
            x_hat: self.x_hat.as_vector().iter().copied().collect(),
            certificate: &self.certificate,
        })?)
    }
}

/// Default mirror maps: the per-set defaults for Ω and the Euclidean
/// generator over each dual set's interval/polyhedral form.
pub fn default_bundle(game: &GameSpec, eplus: &[DualFeasibleSet]) -> Result<MirrorBundle> {
    let x_maps = game
        .players()
        .iter()
        .map(|p| MirrorMap::default_for(&p.omega))
        .collect();
    let sigma_maps = eplus
        .iter()
        .map(|set| Ok(MirrorMap::euclidean_on_polyhedron(set.as_polyhedron()?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MirrorBundle { x_maps, sigma_maps })
}

/// One Jacobi step of the general algorithm. Returns the next `(x, σ)`.
pub fn step_general(
    game: &GameSpec,
    bundle: &MirrorBundle,
    x: &StrategyProfile,
    sigma: &[DVector<f64>],
    alpha: f64,
) -> Result<(StrategyProfile, Vec<DVector<f64>>)> {
    if game.is_potential() {
        return Err(Error::Config("step_general on a potential game; use step_potential".into()));
    }
    let layout = game.layout();
    let mut x_next = x.clone();
    let mut sigma_next = Vec::with_capacity(sigma.len());
    for i in 0..game.player_count() {
        let p = game.player(i);
        let xi_k = p.psi.pi_theta(&sigma[i])?;
        let g = p.lambda.weighted_grad_wrt(layout, i, x.as_vector(), &sigma[i]);
        let xi_block = x.block(i);
        x_next.set_block(i, &bundle.x_maps[i].mirror_step(&xi_block, &g, alpha)?);
        let lam = game.eval_lambda(i, x)?;
        let dual_arg = bundle.sigma_maps[i].grad_clamped(&sigma[i]) + (lam - xi_k) * alpha;
        sigma_next.push(bundle.sigma_maps[i].conjugate_grad(&dual_arg));
    }
    Ok((x_next, sigma_next))
}

/// One step of the potential-game variant: a unified conjugate ξ and dual σ,
/// per-player mirror steps on the shared operator.
pub fn step_potential(
    game: &GameSpec,
    bundle: &MirrorBundle,
    x: &StrategyProfile,
    sigma: &DVector<f64>,
    alpha: f64,
) -> Result<(StrategyProfile, DVector<f64>)> {
    let pot = game
        .potential()
        .ok_or_else(|| Error::Config("step_potential called on a non-potential game".into()))?;
    let layout = game.layout();
    let xi_k = pot.psi.pi_theta(sigma)?;
    let mut x_next = x.clone();
    for i in 0..game.player_count() {
        let g = pot.lambda.weighted_grad_wrt(layout, i, x.as_vector(), sigma);
        let xi_block = x.block(i);
        x_next.set_block(i, &bundle.x_maps[i].mirror_step(&xi_block, &g, alpha)?);
    }
    let lam = pot.lambda.eval(x.as_vector());
    let dual_arg = bundle.sigma_maps[0].grad_clamped(sigma) + (lam - xi_k) * alpha;
    let sigma_next = bundle.sigma_maps[0].conjugate_grad(&dual_arg);
    Ok((x_next, sigma_next))
}

/// Running weighted average accumulator.
struct WeightedAvg {
    sum: DVector<f64>,
    weight: f64,
}

impl WeightedAvg {
    fn new(dim: usize) -> Self {
        WeightedAvg { sum: DVector::zeros(dim), weight: 0.0 }
    }

    fn push(&mut self, v: &DVector<f64>, w: f64) {
        self.sum += v * w;
        self.weight += w;
    }

    fn value(&self) -> DVector<f64> {
        if self.weight > 0.0 {
            &self.sum / self.weight
        } else {
            self.sum.clone()
        }
    }
}

/// Reference pair for distance/gap traces.
pub struct Oracle<'a> {
    pub z_star: &'a JointPoint,
}

/// Runs the configured method. `init` defaults to interior starting points;
/// the oracle (when supplied) feeds the per-iteration distance and, in
/// potential mode, the averaged-iterate duality gap.
pub fn solve(
    game: &GameSpec,
    bundle: &MirrorBundle,
    eplus: &[DualFeasibleSet],
    config: &SolverConfig,
    init: Option<JointPoint>,
    oracle: Option<&JointPoint>,
) -> Result<SolveResult> {
    config.schedule.validate()?;
    if config.max_iters < 1 {
        return Err(Error::Config("max_iters must be ≥ 1".into()));
    }
    if config.method.is_baseline() {
        return solve_baseline(game, config, init.map(|z| z.x), oracle);
    }
    bundle.validate(game)?;
    if let Some(set) = eplus.iter().find(|s| s.is_empty()) {
        return Err(Error::Config(format!(
            "E⁺ for player {} is empty; the duality approach is unavailable (check the instance before iterating)",
            set.player()
        )));
    }
    let potential = matches!(config.method, Method::Alg1Potential);
    if potential != game.is_potential() {
        return Err(Error::Config(
            "method/potential-flag mismatch between config and game".into(),
        ));
    }

    let z0 = match init {
        Some(z) => z,
        None => default_start(game, eplus)?,
    };
    let scaled_tol_vi = {
        let f0 = pseudo_gradient(game, &z0)?;
        1e-6 * (1.0 + f0.norm())
    };

    let mut x = z0.x.clone();
    let mut sigma_blocks = z0.sigma.blocks();
    let layout = game.layout();
    let mut x_avg = WeightedAvg::new(layout.total());
    let mut s_avg: Vec<WeightedAvg> =
        sigma_blocks.iter().map(|b| WeightedAvg::new(b.len())).collect();

    let oracle_stacks = oracle.map(|z| (z.x.as_vector().clone(), z.sigma.blocks()));
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=config.max_iters {
        let alpha = config.schedule.alpha(k);
        let (x_next, sigma_next) = if potential {
            let (xn, sn) = step_potential(game, bundle, &x, &sigma_blocks[0], alpha)?;
            (xn, vec![sn])
        } else {
            step_general(game, bundle, &x, &sigma_blocks, alpha)?
        };
        let step_norm = (x_next.as_vector() - x.as_vector()).norm();
        if x_next.as_vector().iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!("non-finite iterate at k = {k}")));
        }
        x = x_next;
        sigma_blocks = sigma_next;
        x_avg.push(x.as_vector(), alpha);
        for (avg, b) in s_avg.iter_mut().zip(&sigma_blocks) {
            avg.push(b, alpha);
        }
        iterations = k;
        if config.checkpoints.contains(&k) {
            snapshots.push((k, x.clone()));
        }

        if k % config.record_every.max(1) == 0 || k == config.max_iters {
            let dist_sq = oracle_stacks.as_ref().map(|(ox, os)| {
                let dx = (x.as_vector() - ox).norm_squared();
                let ds: f64 = sigma_blocks
                    .iter()
                    .zip(os)
                    .map(|(a, b)| (a - b).norm_squared())
                    .sum();
                dx + ds
            });
            let gap = match (game.potential(), oracle) {
                (Some(_), Some(zs)) => {
                    let x_hat =
                        StrategyProfile::new(x_avg.value(), layout.clone())?;
                    let s_hat = s_avg[0].value();
                    let g = complementary_value(game, 0, &x_hat, &zs.sigma.blocks()[0])?
                        - complementary_value(game, 0, &zs.x, &s_hat)?;
                    Some(g)
                }
                _ => None,
            };
            rows.push(IterRow { k, alpha, dist_sq, gap, step_norm });
        }

        if step_norm <= config.t_tol {
            converged = true;
            break;
        }
    }

    let sigma = DualProfile::from_blocks(game, sigma_blocks)?;
    let opts = CertifyOptions {
        tol_vi: scaled_tol_vi,
        tol_dual: config.tol_dual,
        kappa_x: config.kappa_x,
    };
    let certificate = certify_with_sets(game, &x, &sigma, eplus, &opts)?;
    let x_hat = StrategyProfile::new(x_avg.value(), layout.clone())?;
    let sigma_hat = DualProfile::from_blocks(game, s_avg.iter().map(|a| a.value()).collect())?;
    Ok(SolveResult {
        x,
        sigma,
        x_hat,
        sigma_hat,
        rows,
        snapshots,
        certificate,
        iterations,
        converged,
    })
}

/// Interior default start: Ω midpoints, with the dual start at the
/// E⁺-projected natural dual `Π_{E⁺}(∇Ψ(Λ(x⁰)))` (falling back to an
/// interior point when projection is unavailable).
pub fn default_start(game: &GameSpec, eplus: &[DualFeasibleSet]) -> Result<JointPoint> {
    let blocks: Vec<DVector<f64>> = game
        .players()
        .iter()
        .map(|p| p.omega.interior_point())
        .collect();
    let x = StrategyProfile::from_blocks(&blocks);
    let sigma = dual_start(game, eplus, &x)?;
    Ok(JointPoint::new(x, DualProfile::from_blocks(game, sigma)?))
}

/// Feasible dual start aligned with the duality relation at `x`.
pub fn dual_start(
    game: &GameSpec,
    eplus: &[DualFeasibleSet],
    x: &StrategyProfile,
) -> Result<Vec<DVector<f64>>> {
    let natural = game.natural_dual(x).ok();
    eplus
        .iter()
        .enumerate()
        .map(|(b, set)| {
            if let Some(nat) = natural.as_ref() {
                if let Ok(p) = set.project(&nat[b]) {
                    return Ok(p);
                }
            }
            set.interior_point().ok_or_else(|| {
                Error::Config(format!("E⁺ for player {} has no interior point", set.player()))
            })
        })
        .collect()
}

/// First-order baselines operating on the primal profile only. The final
/// point is certified post hoc with the natural dual `σ = ∇Ψ(Λ(x))`.
pub fn solve_baseline(
    game: &GameSpec,
    config: &SolverConfig,
    init: Option<StrategyProfile>,
    oracle: Option<&JointPoint>,
) -> Result<SolveResult> {
    config.schedule.validate()?;
    let layout = game.layout();
    let mut x = match init {
        Some(x) => x,
        None => StrategyProfile::from_blocks(
            &game.players().iter().map(|p| p.omega.interior_point()).collect::<Vec<_>>(),
        ),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let g0 = game.payoff_pseudo_gradient(&x)?;
    let noise_std = config.sgd_noise.unwrap_or(0.05 * g0.norm());
    let mut prev_grad = g0.clone();
    let mut x_avg = WeightedAvg::new(layout.total());
    let oracle_x = oracle.map(|z| z.x.as_vector().clone());
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let project = |v: &DVector<f64>| -> DVector<f64> {
        let mut out = v.clone();
        for i in 0..game.player_count() {
            let b = layout.block(v, i);
            layout.set_block(&mut out, i, &game.player(i).omega.project(&b));
        }
        out
    };

    for k in 1..=config.max_iters {
        let alpha = config.schedule.alpha(k);
        let g = game.payoff_pseudo_gradient(&x)?;
        let next_vec = match config.method {
            Method::Gd => x.as_vector() - &g * alpha,
            Method::Pgd => project(&(x.as_vector() - &g * alpha)),
            Method::Omd => {
                let corrected = &g * 2.0 - &prev_grad;
                project(&(x.as_vector() - corrected * alpha))
            }
            Method::Eg => {
                let mid_vec = project(&(x.as_vector() - &g * alpha));
                let mid = StrategyProfile::new(mid_vec, layout.clone())?;
                let g_mid = game.payoff_pseudo_gradient(&mid)?;
                project(&(x.as_vector() - g_mid * alpha))
            }
            Method::Sgd => {
                let noisy = &g
                    + DVector::from_iterator(
                        g.len(),
                        (0..g.len()).map(|_| noise_std * gaussian(&mut rng)),
                    );
                project(&(x.as_vector() - noisy * alpha))
            }
            Method::Proximal => {
                // Proximal-point approximation: a few projected-gradient
                // steps on J_i + (ρ/2)‖x_i − x_i^k‖² per player (Jacobi).
                let mut xn = x.clone();
                for i in 0..game.player_count() {
                    let anchor = x.block(i);
                    let mut xi = anchor.clone();
                    for _ in 0..10 {
                        let probe = x.with_block(i, &xi);
                        let gi = game.grad_payoff(i, &probe)?
                            + (&xi - &anchor) * config.proximal_rho;
                        xi = game.player(i).omega.project(&(&xi - gi * alpha));
                    }
                    xn.set_block(i, &xi);
                }
                xn.into_vector()
            }
            Method::Alg1 | Method::Alg1Potential => unreachable!("routed through solve"),
        };
        if next_vec.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "baseline produced a non-finite iterate at k = {k}; last finite x = {:?}",
                x.as_vector().as_slice()
            )));
        }
        let step_norm = (&next_vec - x.as_vector()).norm();
        prev_grad = g;
        x = StrategyProfile::new(next_vec, layout.clone())?;
        x_avg.push(x.as_vector(), alpha);
        iterations = k;
        if config.checkpoints.contains(&k) {
            snapshots.push((k, x.clone()));
        }
        if k % config.record_every.max(1) == 0 || k == config.max_iters {
            let dist_sq = oracle_x.as_ref().map(|ox| (x.as_vector() - ox).norm_squared());
            rows.push(IterRow { k, alpha, dist_sq, gap: None, step_norm });
        }
        if step_norm <= config.t_tol {
            converged = true;
            break;
        }
    }

    // Post-hoc certification at the natural dual.
    let natural = game.natural_dual(&x)?;
    let sigma = DualProfile::from_blocks(game, natural)?;
    let eplus = crate::duality::eplus_all(game, config.kappa_x)?;
    let z_for_tol = default_start(game, &eplus).unwrap_or_else(|_| JointPoint::new(x.clone(), sigma.clone()));
    let scaled_tol_vi = 1e-6 * (1.0 + pseudo_gradient(game, &z_for_tol)?.norm());
    let opts = CertifyOptions {
        tol_vi: scaled_tol_vi,
        tol_dual: config.tol_dual,
        kappa_x: config.kappa_x,
    };
    let certificate = certify_with_sets(game, &x, &sigma, &eplus, &opts)?;
    let x_hat = StrategyProfile::new(x_avg.value(), layout.clone())?;
    Ok(SolveResult {
        x: x.clone(),
        sigma: sigma.clone(),
        x_hat,
        sigma_hat: sigma,
        rows,
        snapshots,
        certificate,
        iterations,
        converged,
    })
}

fn gaussian<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; two uniforms per draw keeps the stream deterministic.
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Estimated constants feeding the step-size schedules.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Constants {
    /// Empirical strong-monotonicity modulus of F over Ξ.
    pub kappa: f64,
    /// `min{μ_x/2, μ_σ/2}` from the mirror maps.
    pub mu: f64,
    /// `max ‖F(z)‖²` over sampled Ξ (Theorem-4 constant).
    pub m1: f64,
    /// Same bound, used by the potential-game schedule.
    pub m2: f64,
    /// Max sampled Bregman collection (initial-divergence proxy).
    pub d: f64,
}

impl Constants {
    /// `α_k = 2/(κ(k+1))` with the estimated κ.
    pub fn harmonic_schedule(&self) -> Schedule {
        Schedule::HarmonicKappa { kappa: self.kappa }
    }

    /// `α_k = 2√(μd)/(M₂√k)` with `M₂ = √(max ‖F‖²)`.
    pub fn invsqrt_schedule(&self) -> Schedule {
        Schedule::InvSqrt { c: 2.0 * (self.mu * self.d).sqrt() / self.m2.sqrt() }
    }
}

/// Samples Ξ to estimate `{κ, μ, M₁, M₂, d}`.
pub fn estimate_constants(
    game: &GameSpec,
    bundle: &MirrorBundle,
    eplus: &[DualFeasibleSet],
    sample_count: usize,
    seed: u64,
) -> Result<Constants> {
    for set in eplus {
        if set.interior_point().is_none() {
            return Err(Error::Estimation(
                "E⁺ lacks a bounded working representation".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = sample_xi(game, eplus, sample_count.max(4), &mut rng)?;
    let mut m = 0.0f64;
    for z in &pts {
        m = m.max(pseudo_gradient(game, z)?.norm_squared());
    }
    let kappa = crate::vi::monotonicity_probe(game, eplus, sample_count.max(4), &mut rng)?;
    let mu = bundle.mu();

    let mut d = 0.0f64;
    for w in pts.chunks_exact(2) {
        let (a, b) = (&w[0], &w[1]);
        let mut acc = 0.0;
        for i in 0..game.player_count() {
            acc += bundle.x_maps[i].bregman_clamped(&a.x.block(i), &b.x.block(i));
        }
        for (bm, (sa, sb)) in bundle
            .sigma_maps
            .iter()
            .zip(a.sigma.blocks().iter().zip(b.sigma.blocks().iter()))
        {
            acc += bm.bregman_clamped(sa, sb);
        }
        d = d.max(acc);
    }
    Ok(Constants { kappa, mu, m1: m, m2: m, d })
}
