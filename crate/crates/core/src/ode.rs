//! Conjugate-based ODE flow in dual coordinates.
//!
//! The flow evolves dual variables `(y, ν)` and reads the primal pair through
//! conjugate gradients, so feasibility holds along the whole trajectory:
//!
//! ```text
//! ẏ_i = −σ_iᵀ ∇_{x_i}Λ_i(x) + ∇φ_i(x_i) − y_i
//! ν̇_i = Λ_i(x) − ∇Ψ*_i(σ_i) + ∇ϕ_i(σ_i) − ν_i
//! x_i  = ∇φ*_i(y_i),     σ_i = ∇ϕ*_i(ν_i)
//! ```
//!
//! The damping terms `∇φ_i(x_i) − y_i` keep the dual states bounded; at an
//! equilibrium the bracketed stationarity directions vanish, which is exactly
//! the VI condition over `Ω × E⁺`.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{GameSpec, StrategyProfile};
use crate::mirror::MirrorMap;
use crate::vi::{dual_block_dims, DualProfile, JointPoint};

/// Largest admissible RK4 step.
pub const DT_MAX: f64 = 0.1;

/// Mirror maps for the primal blocks (one per player) and the dual blocks
/// (one per player, or a single unified map in potential mode).
#[derive(Debug, Clone)]
pub struct MirrorBundle {
    pub x_maps: Vec<MirrorMap>,
    pub sigma_maps: Vec<MirrorMap>,
}

impl MirrorBundle {
    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if self.x_maps.len() != game.player_count() {
            return Err(Error::Config("one x-map per player required".into()));
        }
        let qs = dual_block_dims(game);
        if self.sigma_maps.len() != qs.len() {
            return Err(Error::Config("one σ-map per dual block required".into()));
        }
        for (i, m) in self.x_maps.iter().enumerate() {
            if m.dim() != game.layout().dim_of(i) {
                return Err(Error::Config(format!("x-map {i} has wrong dimension")));
            }
        }
        for (b, m) in self.sigma_maps.iter().enumerate() {
            if m.dim() != qs[b] {
                return Err(Error::Config(format!("σ-map {b} has wrong dimension")));
            }
        }
        Ok(())
    }

    /// `min{μ_x/2, μ_σ/2}` over all blocks (the μ of the rate theorems).
    pub fn mu(&self) -> f64 {
        let mx = self.x_maps.iter().map(|m| m.mu()).fold(f64::INFINITY, f64::min);
        let ms = self.sigma_maps.iter().map(|m| m.mu()).fold(f64::INFINITY, f64::min);
        (mx / 2.0).min(ms / 2.0)
    }
}

/// State of the flow: stacked dual decision vector `y` and stacked dual
/// canonical vector `ν`, plus time.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeState {
    pub t: f64,
    pub y: DVector<f64>,
    pub nu: DVector<f64>,
}

impl OdeState {
    /// Primal profile `x = ∇φ*(y)`.
    pub fn x(&self, game: &GameSpec, bundle: &MirrorBundle) -> StrategyProfile {
        let layout = game.layout();
        let mut data = DVector::zeros(layout.total());
        for i in 0..game.player_count() {
            let yi = layout.block(&self.y, i);
            layout.set_block(&mut data, i, &bundle.x_maps[i].conjugate_grad(&yi));
        }
        StrategyProfile::new(data, layout.clone()).expect("layout consistent")
    }

    /// Dual profile `σ = ∇ϕ*(ν)`.
    pub fn sigma(&self, game: &GameSpec, bundle: &MirrorBundle) -> DualProfile {
        let qs = dual_block_dims(game);
        let mut blocks = Vec::with_capacity(qs.len());
        let mut offset = 0;
        for (b, q) in qs.iter().enumerate() {
            let nu_b = self.nu.rows(offset, *q).into_owned();
            blocks.push(bundle.sigma_maps[b].conjugate_grad(&nu_b));
            offset += q;
        }
        DualProfile::from_blocks(game, blocks).expect("block layout consistent")
    }

    pub fn joint(&self, game: &GameSpec, bundle: &MirrorBundle) -> JointPoint {
        JointPoint::new(self.x(game, bundle), self.sigma(game, bundle))
    }
}

/// Fitted exponential rate of `‖z(t) − z◇‖`.
#[derive(Debug, Clone, Serialize)]
pub struct RateEstimate {
    /// Fitted rate per unit time (negative on converging runs).
    pub lambda_hat: f64,
    /// Coefficient of determination of the log-linear fit.
    pub r_squared: f64,
    /// `κ/(2τ)` when the caller supplies the constants; otherwise absent.
    pub theory_bound: Option<f64>,
}

/// One recorded sample along the flow.
#[derive(Debug, Clone)]
pub struct OdeSample {
    pub t: f64,
    pub x: DVector<f64>,
    pub sigma: DVector<f64>,
    /// `‖z(t) − z◇‖` when a reference point is known.
    pub dist: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct OdeTrace {
    pub samples: Vec<OdeSample>,
    pub final_state: OdeState,
}

impl OdeTrace {
    /// CSV export: `t, x_1..x_nN, sigma_1..sigma_q, dist` at 17 significant
    /// digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if let Some(first) = self.samples.first() {
            let mut header = vec!["t".to_string()];
            for i in 1..=first.x.len() {
                header.push(format!("x_{i}"));
            }
            for i in 1..=first.sigma.len() {
                header.push(format!("sigma_{i}"));
            }
            header.push("dist".to_string());
            out.push_str(&header.join(","));
            out.push('\n');
        }
        for s in &self.samples {
            let mut row = vec![format!("{:.16e}", s.t)];
            row.extend(s.x.iter().map(|v| format!("{v:.16e}")));
            row.extend(s.sigma.iter().map(|v| format!("{v:.16e}")));
            row.push(match s.dist {
                Some(d) => format!("{d:.16e}"),
                None => "nan".to_string(),
            });
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Right-hand side `(ẏ, ν̇)` of the flow at `s`.
pub fn ode_rhs(game: &GameSpec, bundle: &MirrorBundle, s: &OdeState) -> Result<(DVector<f64>, DVector<f64>)> {
    let layout = game.layout();
    let x = s.x(game, bundle);
    let sigma = s.sigma(game, bundle);
    let blocks = sigma.blocks();

    let mut ydot = DVector::zeros(s.y.len());
    for i in 0..game.player_count() {
        let (op, sig) = if let Some(pot) = game.potential() {
            (&pot.lambda, &blocks[0])
        } else {
            (&game.player(i).lambda, &blocks[i])
        };
        let g = op.weighted_grad_wrt(layout, i, x.as_vector(), sig);
        let xi = layout.block(x.as_vector(), i);
        let yi = layout.block(&s.y, i);
        let rhs = -g + bundle.x_maps[i].grad_clamped(&xi) - yi;
        layout.set_block(&mut ydot, i, &rhs);
    }

    let mut nudot = DVector::zeros(s.nu.len());
    let mut offset = 0;
    for (b, sig) in blocks.iter().enumerate() {
        let (lam, psi) = if let Some(pot) = game.potential() {
            (pot.lambda.eval(x.as_vector()), &pot.psi)
        } else {
            (game.eval_lambda(b, &x)?, &game.player(b).psi)
        };
        let nu_b = s.nu.rows(offset, sig.len()).into_owned();
        let rhs = &lam - psi.conj_grad(sig)? + bundle.sigma_maps[b].grad_clamped(sig) - nu_b;
        nudot.rows_mut(offset, sig.len()).copy_from(&rhs);
        offset += sig.len();
    }
    Ok((ydot, nudot))
}

/// Initial state with `x(0)` at the interior of Ω and `σ(0)` at an interior
/// point of E⁺: `y(0) = ∇φ(x(0))`, `ν(0) = ∇ϕ(σ(0))`.
pub fn default_init(game: &GameSpec, bundle: &MirrorBundle) -> Result<OdeState> {
    let layout = game.layout();
    let mut y = DVector::zeros(layout.total());
    for i in 0..game.player_count() {
        let xi = game.player(i).omega.interior_point();
        layout.set_block(&mut y, i, &bundle.x_maps[i].grad_clamped(&xi));
    }
    let qs = dual_block_dims(game);
    let mut nu = DVector::zeros(qs.iter().sum());
    let mut offset = 0;
    for (b, q) in qs.iter().enumerate() {
        let anchor = bundle.sigma_maps[b]
            .target()
            .interior_point()
            .ok_or_else(|| Error::Config("σ map target has no interior point".into()))?;
        nu.rows_mut(offset, *q)
            .copy_from(&bundle.sigma_maps[b].grad_clamped(&anchor));
        offset += q;
    }
    Ok(OdeState { t: 0.0, y, nu })
}

/// The flow state whose conjugate pair equals `(x◇, σ◇)` and whose rhs
/// vanishes: `y◇ = −G + ∇φ(x◇)`, `ν◇ = Λ − ∇Ψ* + ∇ϕ(σ◇)`.
pub fn equilibrium_from_pair(
    game: &GameSpec,
    bundle: &MirrorBundle,
    x: &StrategyProfile,
    sigma: &DualProfile,
) -> Result<OdeState> {
    let layout = game.layout();
    let blocks = sigma.blocks();
    let mut y = DVector::zeros(layout.total());
    for i in 0..game.player_count() {
        let (op, sig) = if let Some(pot) = game.potential() {
            (&pot.lambda, &blocks[0])
        } else {
            (&game.player(i).lambda, &blocks[i])
        };
        let g = op.weighted_grad_wrt(layout, i, x.as_vector(), sig);
        let xi = layout.block(x.as_vector(), i);
        layout.set_block(&mut y, i, &(-g + bundle.x_maps[i].grad_clamped(&xi)));
    }
    let qs = dual_block_dims(game);
    let mut nu = DVector::zeros(qs.iter().sum());
    let mut offset = 0;
    for (b, sig) in blocks.iter().enumerate() {
        let (lam, psi) = if let Some(pot) = game.potential() {
            (pot.lambda.eval(x.as_vector()), &pot.psi)
        } else {
            (game.eval_lambda(b, x)?, &game.player(b).psi)
        };
        let v = &lam - psi.conj_grad(sig)? + bundle.sigma_maps[b].grad_clamped(sig);
        nu.rows_mut(offset, sig.len()).copy_from(&v);
        offset += sig.len();
    }
    Ok(OdeState { t: 0.0, y, nu })
}

/// Explicit RK4 integration with fixed step `dt ≤ DT_MAX`, recording every
/// `record_every`-th state (plus the final one).
pub fn integrate(
    game: &GameSpec,
    bundle: &MirrorBundle,
    init: OdeState,
    dt: f64,
    t_end: f64,
    record_every: usize,
    z_ref: Option<&JointPoint>,
) -> Result<OdeTrace> {
    if !(dt > 0.0 && dt <= DT_MAX) {
        return Err(Error::Config(format!("dt must lie in (0, {DT_MAX}]")));
    }
    if t_end <= 0.0 {
        return Err(Error::Config("t_end must be positive".into()));
    }
    bundle.validate(game)?;
    let steps = (t_end / dt).ceil() as usize;
    let every = record_every.max(1);
    let ref_stack = z_ref.map(|z| z.stack());

    let mut state = init;
    let mut samples = Vec::with_capacity(steps / every + 2);
    let record = |state: &OdeState, samples: &mut Vec<OdeSample>| {
        let z = state.joint(game, bundle);
        let dist = ref_stack.as_ref().map(|r| (z.stack() - r).norm());
        samples.push(OdeSample {
            t: state.t,
            x: z.x.as_vector().clone(),
            sigma: DVector::from_vec(
                z.sigma.blocks().iter().flat_map(|b| b.iter().copied()).collect(),
            ),
            dist,
        });
    };
    record(&state, &mut samples);

    for step in 0..steps {
        let (k1y, k1n) = ode_rhs(game, bundle, &state)?;
        let mid1 = OdeState {
            t: state.t + 0.5 * dt,
            y: &state.y + &k1y * (0.5 * dt),
            nu: &state.nu + &k1n * (0.5 * dt),
        };
        let (k2y, k2n) = ode_rhs(game, bundle, &mid1)?;
        let mid2 = OdeState {
            t: state.t + 0.5 * dt,
            y: &state.y + &k2y * (0.5 * dt),
            nu: &state.nu + &k2n * (0.5 * dt),
        };
        let (k3y, k3n) = ode_rhs(game, bundle, &mid2)?;
        let end = OdeState {
            t: state.t + dt,
            y: &state.y + &k3y * dt,
            nu: &state.nu + &k3n * dt,
        };
        let (k4y, k4n) = ode_rhs(game, bundle, &end)?;
        let y = &state.y + (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (dt / 6.0);
        let nu = &state.nu + (k1n + k2n * 2.0 + k3n * 2.0 + k4n) * (dt / 6.0);
        if y.iter().chain(nu.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "non-finite state at t = {:.6}; last finite state at t = {:.6}",
                state.t + dt,
                state.t
            )));
        }
        state = OdeState { t: state.t + dt, y, nu };
        if (step + 1) % every == 0 || step + 1 == steps {
            record(&state, &mut samples);
        }
    }
    Ok(OdeTrace { samples, final_state: state })
}

/// Lyapunov candidate `V₁ = Σ D_{φ*}(y, y◇) + D_{ϕ*}(ν, ν◇)`.
pub fn lyapunov_v1(
    game: &GameSpec,
    bundle: &MirrorBundle,
    state: &OdeState,
    star: &OdeState,
) -> f64 {
    let layout = game.layout();
    let mut v = 0.0;
    for i in 0..game.player_count() {
        let yi = layout.block(&state.y, i);
        let yi_star = layout.block(&star.y, i);
        v += bundle.x_maps[i].bregman_conjugate(&yi, &yi_star);
    }
    let qs = dual_block_dims(game);
    let mut offset = 0;
    for (b, q) in qs.iter().enumerate() {
        let nb = state.nu.rows(offset, *q).into_owned();
        let nb_star = star.nu.rows(offset, *q).into_owned();
        v += bundle.sigma_maps[b].bregman_conjugate(&nb, &nb_star);
        offset += q;
    }
    v
}

/// `V₁` along a trace rebuilt from recorded samples is not possible (samples
/// hold x/σ, not y/ν), so callers integrate with a callback instead: this
/// helper re-runs the flow and collects `V₁(t)` at every step.
pub fn lyapunov_along_flow(
    game: &GameSpec,
    bundle: &MirrorBundle,
    init: OdeState,
    star: &OdeState,
    dt: f64,
    t_end: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(dt > 0.0 && dt <= DT_MAX) {
        return Err(Error::Config(format!("dt must lie in (0, {DT_MAX}]")));
    }
    let steps = (t_end / dt).ceil() as usize;
    let mut state = init;
    let mut out = Vec::with_capacity(steps + 1);
    out.push((state.t, lyapunov_v1(game, bundle, &state, star)));
    for _ in 0..steps {
        let (k1y, k1n) = ode_rhs(game, bundle, &state)?;
        let mid1 = OdeState {
            t: state.t + 0.5 * dt,
            y: &state.y + &k1y * (0.5 * dt),
            nu: &state.nu + &k1n * (0.5 * dt),
        };
        let (k2y, k2n) = ode_rhs(game, bundle, &mid1)?;
        let mid2 = OdeState {
            t: state.t + 0.5 * dt,
            y: &state.y + &k2y * (0.5 * dt),
            nu: &state.nu + &k2n * (0.5 * dt),
        };
        let (k3y, k3n) = ode_rhs(game, bundle, &mid2)?;
        let end = OdeState {
            t: state.t + dt,
            y: &state.y + &k3y * dt,
            nu: &state.nu + &k3n * dt,
        };
        let (k4y, k4n) = ode_rhs(game, bundle, &end)?;
        state = OdeState {
            t: state.t + dt,
            y: &state.y + (k1y + k2y * 2.0 + k3y * 2.0 + k4y) * (dt / 6.0),
            nu: &state.nu + (k1n + k2n * 2.0 + k3n * 2.0 + k4n) * (dt / 6.0),
        };
        out.push((state.t, lyapunov_v1(game, bundle, &state, star)));
    }
    Ok(out)
}

/// Least-squares fit of `log dist` against `t` over the middle 80% of the
/// trace. Requires at least 10 samples with strictly positive distances.
pub fn fit_exponential_rate(trace: &OdeTrace, theory_bound: Option<f64>) -> Result<RateEstimate> {
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter_map(|s| s.dist.map(|d| (s.t, d)))
        .collect();
    if pts.len() < 10 {
        return Err(Error::Fit(format!("trace has {} distance samples, need ≥ 10", pts.len())));
    }
    let skip = pts.len() / 10;
    let window = &pts[skip..pts.len() - skip];
    if window.iter().any(|(_, d)| *d <= 0.0) {
        return Err(Error::Fit("distance not strictly positive on the fit window".into()));
    }
    let xs: Vec<f64> = window.iter().map(|(t, _)| *t).collect();
    let ys: Vec<f64> = window.iter().map(|(_, d)| d.ln()).collect();
    let (slope, r2) = linear_fit(&xs, &ys)?;
    Ok(RateEstimate { lambda_hat: slope, r_squared: r2, theory_bound })
}

/// Simple least squares `y = a + b·x`; returns `(b, R²)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 2 {
        return Err(Error::Fit("need at least two points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate abscissa".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok((slope, r2))
}
