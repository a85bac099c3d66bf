//! Canonical functions Ψ and their Legendre conjugates.
//!
//! A canonical function has a gradient that is one-to-one from its primal
//! domain Θ onto the dual domain Θ* = ∇Ψ(Θ), so the conjugate Ψ* is available
//! in closed form through the Legendre transformation
//! `Ψ*(σ) = ξᵀσ − Ψ(ξ)` at `σ = ∇Ψ(ξ)`. Three kinds are supported:
//!
//! | kind            | Ψ(ξ)                | ∇Ψ(ξ)            | ∇Ψ*(σ)              |
//! |-----------------|---------------------|------------------|----------------------|
//! | `SumSquares`    | ξᵀξ                 | 2ξ               | σ/2                  |
//! | `ScaledLogistic`| β₁ log(1+eξ)        | β₁/(1+e^{−ξ})    | log(σ/(β₁−σ))        |
//! | `NegLog`        | −log ξ  (ξ > 0)     | −1/ξ             | −1/σ                 |
//!
//! `ScaledLogistic` and `NegLog` extend to vectors separably (a sum over
//! components); `SumSquares` is vector-valued natively.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative margin by which open dual domains are shrunk before taking logs.
/// The conjugate of the logistic has log singularities at σ ∈ {0, β₁}.
pub const DOMAIN_MARGIN: f64 = 1e-9;

/// A product of (possibly unbounded) closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl IntervalBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Config("interval box bound lengths differ".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::Config("interval box requires lo ≤ hi".into()));
        }
        Ok(IntervalBox { lo, hi })
    }

    /// The whole space `(−∞, ∞)^dim`.
    pub fn unbounded(dim: usize) -> Self {
        IntervalBox {
            lo: vec![f64::NEG_INFINITY; dim],
            hi: vec![f64::INFINITY; dim],
        }
    }

    /// `(0, ∞)^dim`.
    pub fn positive(dim: usize) -> Self {
        IntervalBox { lo: vec![0.0; dim], hi: vec![f64::INFINITY; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, v: &DVector<f64>, tol: f64) -> bool {
        v.len() == self.dim()
            && v.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(x, (l, h))| *x >= l - tol && *x <= h + tol)
    }

    pub fn clamp(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            v.len(),
            v.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .map(|(x, (l, h))| x.max(*l).min(*h)),
        )
    }

    /// A finite interior reference point (midpoint where bounded).
    pub fn midpoint(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.lo.iter().zip(&self.hi).map(|(l, h)| match (l.is_finite(), h.is_finite()) {
                (true, true) => 0.5 * (l + h),
                (true, false) => l + 1.0,
                (false, true) => h - 1.0,
                (false, false) => 0.0,
            }),
        )
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().all(|l| l.is_finite()) && self.hi.iter().all(|h| h.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CanonicalKind {
    SumSquares,
    ScaledLogistic { beta1: f64 },
    NegLog,
}

/// A canonical function together with its primal domain Θ.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalFunction {
    kind: CanonicalKind,
    theta: IntervalBox,
}

impl CanonicalFunction {
    pub fn new(kind: CanonicalKind, theta: IntervalBox) -> Result<Self> {
        if let CanonicalKind::ScaledLogistic { beta1 } = kind {
            if beta1 <= 0.0 {
                return Err(Error::Config("scaled logistic requires beta1 > 0".into()));
            }
        }
        if matches!(kind, CanonicalKind::NegLog) && theta.lo.iter().any(|l| *l < 0.0) {
            return Err(Error::Config("neg-log domain must satisfy ξ > 0".into()));
        }
        Ok(CanonicalFunction { kind, theta })
    }

    /// Kind with the default (maximal) primal domain.
    pub fn with_default_domain(kind: CanonicalKind, dim: usize) -> Self {
        let theta = match kind {
            CanonicalKind::NegLog => IntervalBox::positive(dim),
            _ => IntervalBox::unbounded(dim),
        };
        CanonicalFunction { kind, theta }
    }

    pub fn kind(&self) -> CanonicalKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.theta.dim()
    }

    pub fn theta(&self) -> &IntervalBox {
        &self.theta
    }

    /// Dual domain Θ* — the image of Θ under ∇Ψ (componentwise monotone).
    pub fn theta_star(&self) -> IntervalBox {
        let map = |v: f64, at_lo: bool| -> f64 {
            match self.kind {
                CanonicalKind::SumSquares => 2.0 * v,
                CanonicalKind::ScaledLogistic { beta1 } => {
                    let s = beta1 * sigmoid(v);
                    // Shrink the open ends so conjugate logs stay finite.
                    let eps = beta1 * DOMAIN_MARGIN;
                    if at_lo {
                        s.max(eps)
                    } else {
                        s.min(beta1 - eps)
                    }
                }
                CanonicalKind::NegLog => {
                    if v == 0.0 {
                        f64::NEG_INFINITY
                    } else if v.is_infinite() {
                        0.0
                    } else {
                        -1.0 / v
                    }
                }
            }
        };
        let lo: Vec<f64> = self.theta.lo.iter().map(|l| map(*l, true)).collect();
        let hi: Vec<f64> = self.theta.hi.iter().map(|h| map(*h, false)).collect();
        IntervalBox { lo, hi }
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Domain(format!(
                "canonical argument has dimension {}, expected {}",
                v.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// Hard analytic domain of Ψ (where the formula is defined at all). The
    /// Θ box additionally scopes the duality transformation — `pi_theta`
    /// clips into it and Θ* is its image — but evaluation is legal on the
    /// whole analytic domain, so that payoffs stay computable at transient
    /// iterates whose operator values wander outside Θ.
    fn check_theta(&self, xi: &DVector<f64>) -> Result<()> {
        self.check_dim(xi)?;
        for (k, v) in xi.iter().enumerate() {
            if matches!(self.kind, CanonicalKind::NegLog) && *v <= 0.0 {
                return Err(Error::Domain(format!(
                    "component {k}: ξ = {v} outside the neg-log domain ξ > 0"
                )));
            }
        }
        Ok(())
    }

    /// Ψ(ξ).
    pub fn value(&self, xi: &DVector<f64>) -> Result<f64> {
        self.check_theta(xi)?;
        Ok(match self.kind {
            CanonicalKind::SumSquares => xi.dot(xi),
            CanonicalKind::ScaledLogistic { beta1 } => {
                xi.iter().map(|v| beta1 * softplus(*v)).sum()
            }
            CanonicalKind::NegLog => xi.iter().map(|v| -v.ln()).sum(),
        })
    }

    /// ∇Ψ(ξ).
    pub fn grad(&self, xi: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_theta(xi)?;
        Ok(match self.kind {
            CanonicalKind::SumSquares => xi * 2.0,
            CanonicalKind::ScaledLogistic { beta1 } => xi.map(|v| beta1 * sigmoid(v)),
            CanonicalKind::NegLog => xi.map(|v| -1.0 / v),
        })
    }

    fn clamp_dual(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(sigma)?;
        let star = self.theta_star();
        for (k, s) in sigma.iter().enumerate() {
            let tol = 1e-7 * (1.0 + s.abs());
            let (lo, hi) = match self.kind {
                // Hard analytic walls of the conjugate's domain.
                CanonicalKind::ScaledLogistic { beta1 } => (0.0_f64.max(star.lo[k]), beta1.min(star.hi[k])),
                CanonicalKind::NegLog => (star.lo[k], star.hi[k].min(0.0)),
                CanonicalKind::SumSquares => (star.lo[k], star.hi[k]),
            };
            if *s < lo - tol || *s > hi + tol {
                return Err(Error::Domain(format!(
                    "component {k}: σ = {s} outside Θ* = [{lo}, {hi}]"
                )));
            }
        }
        Ok(star.clamp(sigma))
    }

    /// Ψ*(σ) via the Legendre transformation.
    pub fn conj_value(&self, sigma: &DVector<f64>) -> Result<f64> {
        let s = self.clamp_dual(sigma)?;
        Ok(match self.kind {
            CanonicalKind::SumSquares => 0.25 * s.dot(&s),
            CanonicalKind::ScaledLogistic { beta1 } => s
                .iter()
                .map(|v| v * (v / (beta1 - v)).ln() - beta1 * (beta1 / (beta1 - v)).ln())
                .sum(),
            CanonicalKind::NegLog => s.iter().map(|v| -1.0 - (-v).ln()).sum(),
        })
    }

    /// ∇Ψ*(σ) — the inverse of ∇Ψ.
    pub fn conj_grad(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.clamp_dual(sigma)?;
        Ok(match self.kind {
            CanonicalKind::SumSquares => s * 0.5,
            CanonicalKind::ScaledLogistic { beta1 } => s.map(|v| (v / (beta1 - v)).ln()),
            CanonicalKind::NegLog => s.map(|v| -1.0 / v),
        })
    }

    /// `Π_Θ^Ψ(σ) = argmin_{ξ∈Θ} {−σᵀξ + Ψ(ξ)}` — the conjugate computed over
    /// the restricted primal domain. Componentwise: the unconstrained
    /// stationary point clipped into Θ (the objective is convex separably; for
    /// σ outside the gradient range the minimizer sits at the matching wall).
    pub fn pi_theta(&self, sigma: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(sigma)?;
        let out = DVector::from_iterator(
            self.dim(),
            sigma.iter().enumerate().map(|(k, s)| {
                let (lo, hi) = (self.theta.lo[k], self.theta.hi[k]);
                let free = match self.kind {
                    CanonicalKind::SumSquares => s / 2.0,
                    CanonicalKind::ScaledLogistic { beta1 } => {
                        if *s <= 0.0 {
                            f64::NEG_INFINITY
                        } else if *s >= beta1 {
                            f64::INFINITY
                        } else {
                            (s / (beta1 - s)).ln()
                        }
                    }
                    CanonicalKind::NegLog => {
                        if *s >= 0.0 {
                            f64::INFINITY
                        } else {
                            -1.0 / s
                        }
                    }
                };
                free.max(lo).min(hi)
            }),
        );
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain(
                "Π_Θ^Ψ unbounded: σ outside the gradient range with unbounded Θ".into(),
            ));
        }
        Ok(out)
    }
}

#[inline]
pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^v)` computed without overflow.
#[inline]
pub fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(theta: &IntervalBox, n: usize) -> Vec<DVector<f64>> {
        // Interior grid of a 1-D interval (finite fallback ±10).
        let lo = theta.lo[0].max(-10.0);
        let hi = theta.hi[0].min(10.0);
        let margin = 1e-3 * (hi - lo);
        (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                DVector::from_vec(vec![lo + margin + t * (hi - lo - 2.0 * margin)])
            })
            .collect()
    }

    fn kinds() -> Vec<CanonicalFunction> {
        vec![
            CanonicalFunction::new(
                CanonicalKind::SumSquares,
                IntervalBox::new(vec![-4.0], vec![6.0]).unwrap(),
            )
            .unwrap(),
            CanonicalFunction::new(
                CanonicalKind::ScaledLogistic { beta1 : 2.5 },
                IntervalBox::new(vec![-8.0], vec![8.0]).unwrap(),
            )
            .unwrap(),
            CanonicalFunction::new(
                CanonicalKind::NegLog,
                IntervalBox::new(vec![0.1], vec![50.0]).unwrap(),
            )
            .unwrap(),
        ]
    }

    #[test]
    fn duality_roundtrip_on_interior_grid() {
        for f in kinds() {
            for xi in grid(f.theta(), 100) {
                let sigma = f.grad(&xi).unwrap();
                let back = f.conj_grad(&sigma).unwrap();
                assert!(
                    (back - &xi).norm() < 1e-8,
                    "roundtrip failed for {:?} at {xi}",
                    f.kind()
                );
            }
        }
    }

    #[test]
    fn legendre_identity_on_interior_grid() {
        for f in kinds() {
            for xi in grid(f.theta(), 100) {
                let sigma = f.grad(&xi).unwrap();
                let lhs = xi.dot(&sigma);
                let rhs = f.value(&xi).unwrap() + f.conj_value(&sigma).unwrap();
                assert!(
                    (lhs - rhs).abs() < 1e-8,
                    "Legendre identity failed for {:?}: {lhs} vs {rhs}",
                    f.kind()
                );
            }
        }
    }

    #[test]
    fn gradient_is_strictly_monotone() {
        for f in kinds() {
            let pts = grid(f.theta(), 50);
            for w in pts.windows(2) {
                let g0 = f.grad(&w[0]).unwrap()[0];
                let g1 = f.grad(&w[1]).unwrap()[0];
                assert!(g1 > g0, "∇Ψ not strictly increasing for {:?}", f.kind());
            }
        }
    }

    #[test]
    fn neglog_domain_violation_names_component() {
        let f = CanonicalFunction::with_default_domain(CanonicalKind::NegLog, 2);
        let err = f.value(&DVector::from_vec(vec![1.0, -0.5])).unwrap_err();
        assert!(err.to_string().contains("component 1"), "{err}");
    }

    #[test]
    fn pi_theta_closed_forms() {
        // SumSquares: clip(σ/2, Θ).
        let f = CanonicalFunction::new(
            CanonicalKind::SumSquares,
            IntervalBox::new(vec![-1.0], vec![1.0]).unwrap(),
        )
        .unwrap();
        let xi = f.pi_theta(&DVector::from_vec(vec![6.0])).unwrap();
        assert_eq!(xi[0], 1.0);
        let xi = f.pi_theta(&DVector::from_vec(vec![0.5])).unwrap();
        assert!((xi[0] - 0.25).abs() < 1e-15);

        // ScaledLogistic: clip(log(σ/(β₁−σ)), Θ); σ beyond β₁ → upper wall.
        let f = CanonicalFunction::new(
            CanonicalKind::ScaledLogistic { beta1: 1.0 },
            IntervalBox::new(vec![-3.0], vec![3.0]).unwrap(),
        )
        .unwrap();
        let xi = f.pi_theta(&DVector::from_vec(vec![0.5])).unwrap();
        assert!(xi[0].abs() < 1e-12);
        let xi = f.pi_theta(&DVector::from_vec(vec![2.0])).unwrap();
        assert_eq!(xi[0], 3.0);
        let xi = f.pi_theta(&DVector::from_vec(vec![-1.0])).unwrap();
        assert_eq!(xi[0], -3.0);

        // NegLog: clip(−1/σ, Θ).
        let f = CanonicalFunction::new(
            CanonicalKind::NegLog,
            IntervalBox::new(vec![0.5], vec![4.0]).unwrap(),
        )
        .unwrap();
        let xi = f.pi_theta(&DVector::from_vec(vec![-1.0])).unwrap();
        assert!((xi[0] - 1.0).abs() < 1e-15);
        let xi = f.pi_theta(&DVector::from_vec(vec![0.25])).unwrap();
        assert_eq!(xi[0], 4.0);
    }

    #[test]
    fn pi_theta_minimizes_against_scan() {
        // Independent check: dense scan of −σξ + Ψ(ξ) over Θ.
        for f in kinds() {
            for s in [-3.0, -0.8, 0.4, 1.9] {
                let sigma = DVector::from_vec(vec![s]);
                let xi_star = match f.pi_theta(&sigma) {
                    Ok(v) => v,
                    Err(_) => continue,
                };
                let obj =
                    |xi: &DVector<f64>| -sigma.dot(xi) + f.value(xi).unwrap_or(f64::INFINITY);
                let best = grid(f.theta(), 4001)
                    .into_iter()
                    .min_by(|a, b| obj(a).partial_cmp(&obj(b)).unwrap())
                    .unwrap();
                assert!(
                    obj(&xi_star) <= obj(&best) + 1e-9,
                    "scan beat Π_Θ^Ψ for {:?} σ={s}",
                    f.kind()
                );
            }
        }
    }
}
