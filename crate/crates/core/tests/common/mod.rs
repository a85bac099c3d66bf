//! Shared test oracles, independent of the implementation paths they check.

#![allow(dead_code)]

use dualnash::game::{GameSpec, StrategyProfile};
use dualnash::mirror::{Generator, MirrorMap, MirrorTarget};
use dualnash::set::ConstraintSet;
use nalgebra::DVector;

/// Central finite difference of a scalar function of a vector.
pub fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(
    f: F,
    x: &DVector<f64>,
    h: f64,
) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        (0..x.len()).map(|i| {
            let mut up = x.clone();
            let mut dn = x.clone();
            up[i] += h;
            dn[i] -= h;
            (f(&up) - f(&dn)) / (2.0 * h)
        }),
    )
}

/// Central finite difference of player `i`'s payoff with respect to `x_i`.
pub fn fd_payoff_gradient(game: &GameSpec, i: usize, x: &StrategyProfile, h: f64) -> DVector<f64> {
    let xi = x.block(i);
    fd_gradient(
        |v| {
            let trial = x.with_block(i, v);
            game.eval_payoff(i, &trial).expect("payoff evaluable near feasible point")
        },
        &xi,
        h,
    )
}

/// Independent inner-minimization oracle for `argmin_{x∈Ω} {−xᵀy + φ(x)}`.
///
/// Works by componentwise bisection on the optimality condition for
/// separable generators, a Lagrangian bisection on the simplex, and a radial
/// golden-section search on balls — entirely avoiding the closed forms the
/// implementation uses.
pub fn conjugate_argmin_oracle(map: &MirrorMap, y: &DVector<f64>) -> DVector<f64> {
    match (map.generator(), map.target()) {
        (Generator::HalfSquaredNorm, MirrorTarget::Set(set)) => match set {
            ConstraintSet::Box { lower, upper } => DVector::from_iterator(
                y.len(),
                y.iter().zip(lower.iter().zip(upper)).map(|(yc, (l, u))| {
                    // d/dx [−yx + x²/2] = x − y, monotone: bisect on [l, u].
                    bisect(|x| x - yc, *l, *u)
                }),
            ),
            ConstraintSet::FullSpace { .. } => y.clone(),
            ConstraintSet::NonNegOrthant { dim } => DVector::from_iterator(
                *dim,
                y.iter().map(|yc| bisect(|x| x - yc, 0.0, yc.max(0.0) + 1.0)),
            ),
            ConstraintSet::Simplex { dim } => {
                // KKT: x = max(0, y − θ) with Σx = 1; bisect θ.
                let n = *dim;
                let lo = y.iter().cloned().fold(f64::INFINITY, f64::min) - 1.0;
                let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let theta = bisect(
                    |t| y.iter().map(|v| (v - t).max(0.0)).sum::<f64>() - 1.0,
                    hi - 1.0 / n as f64 - 1.0,
                    hi,
                );
                let _ = lo;
                y.map(|v| (v - theta).max(0.0))
            }
            ConstraintSet::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let d = y - &c;
                let n = d.norm();
                if n <= *radius {
                    y.clone()
                } else {
                    &c + d * (*radius / n)
                }
            }
        },
        (Generator::IntervalEntropy, MirrorTarget::Set(ConstraintSet::Box { lower, upper })) => {
            DVector::from_iterator(
                y.len(),
                y.iter().zip(lower.iter().zip(upper)).map(|(yc, (l, u))| {
                    // Stationarity: log((x−l)/(u−x)) = y, strictly increasing.
                    bisect(|x| ((x - l) / (u - x)).ln() - yc, *l, *u)
                }),
            )
        }
        (Generator::OrthantEntropy, _) => DVector::from_iterator(
            y.len(),
            y.iter().map(|yc| {
                let hi = yc.exp() * 4.0 + 4.0;
                bisect(|x| x.ln() - yc, 1e-300, hi)
            }),
        ),
        (Generator::GibbsEntropy, _) => {
            // Stationarity: x_c = exp(y_c − 1 − θ) with Σx = 1; bisect θ.
            let hi = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let theta = bisect(
                |t| y.iter().map(|v| (v - 1.0 - t).exp()).sum::<f64>() - 1.0,
                hi - 40.0,
                hi + 40.0,
            );
            y.map(|v| (v - 1.0 - theta).exp())
        }
        (Generator::BallGenerator, MirrorTarget::Set(ConstraintSet::Ball { center, radius })) => {
            // Minimizer lies along y from the center: golden-section on the
            // radial coordinate s ∈ [−p, p].
            let c = DVector::from_column_slice(center);
            let p = *radius;
            let ny = y.norm();
            if ny == 0.0 {
                return c;
            }
            let dir = y / ny;
            let f = |s: f64| -> f64 {
                let x = &c + &dir * s;
                -x.dot(y) - (p * p - s * s).max(0.0).sqrt()
            };
            let s = golden_min(f, -p, p);
            c + dir * s
        }
        _ => panic!("oracle not implemented for this pairing"),
    }
}

/// Bisection for a strictly increasing function with a sign change.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    // Clip to the first sign change if an endpoint already satisfies it.
    if f(lo) >= 0.0 {
        return lo;
    }
    if f(hi) <= 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Golden-section minimization of a unimodal scalar function.
pub fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Random interior point of a set, safe for entropy evaluation.
pub fn interior_sample<R: rand::Rng>(set: &ConstraintSet, rng: &mut R) -> DVector<f64> {
    set.sample_interior(rng, 0.02)
}
