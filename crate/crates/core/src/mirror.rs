//! Mirror maps: generating functions on constraint sets, their conjugate
//! gradients, Bregman divergences, and mirror steps.
//!
//! A generating function φ is strongly convex on its target set; its
//! conjugate gradient
//!
//! ```text
//! ∇φ*(y) = argmin_{x ∈ Ω} {−xᵀy + φ(x)}
//! ```
//!
//! maps any dual vector back into the set, which is what keeps both the ODE
//! flow and the discrete algorithm feasible by construction. Closed forms:
//!
//! | generator        | set            | ∇φ*(y)                          |
//! |------------------|----------------|---------------------------------|
//! | ½‖x‖²            | any convex Ω   | Euclidean projection of y       |
//! | Σ x log x − x    | R^n_+          | exp(y)                          |
//! | Σ (x−a)log(x−a) + (b−x)log(b−x) | box [a,b]^n | (a + b·e^y)/(1 + e^y) |
//! | Σ x log x        | simplex        | softmax(y)                      |
//! | −√(p²−‖x−w‖²)    | ball B_p(w)    | w + p·y/√(1+‖y‖²)               |

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::set::{ConstraintSet, PolyhedralSet};

/// Distance from the boundary enforced before entropy logs.
const CLAMP: f64 = 1e-12;
/// Points closer to the boundary than this are reported as boundary errors
/// by the fallible evaluation entry points.
const BOUNDARY_EPS: f64 = 1e-13;

/// Generating-function variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Generator {
    HalfSquaredNorm,
    GibbsEntropy,
    IntervalEntropy,
    OrthantEntropy,
    BallGenerator,
}

/// The geometry a mirror map projects into.
#[derive(Debug, Clone, PartialEq)]
pub enum MirrorTarget {
    Set(ConstraintSet),
    /// Box ∩ half-spaces (dual feasible sets). Euclidean generator only.
    Polyhedron(PolyhedralSet),
}

impl MirrorTarget {
    pub fn dim(&self) -> usize {
        match self {
            MirrorTarget::Set(s) => s.dim(),
            MirrorTarget::Polyhedron(p) => p.dim(),
        }
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        match self {
            MirrorTarget::Set(s) => s.contains(x, tol),
            MirrorTarget::Polyhedron(p) => p.contains(x, tol),
        }
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            MirrorTarget::Set(s) => s.project(x),
            MirrorTarget::Polyhedron(p) => p.project(x),
        }
    }

    pub fn interior_point(&self) -> Option<DVector<f64>> {
        match self {
            MirrorTarget::Set(s) => Some(s.interior_point()),
            MirrorTarget::Polyhedron(p) => p.interior_point(),
        }
    }
}

/// A generating function paired with its target set.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorMap {
    target: MirrorTarget,
    generator: Generator,
}

impl MirrorMap {
    pub fn new(target: ConstraintSet, generator: Generator) -> Result<Self> {
        let ok = matches!(
            (&generator, &target),
            (Generator::HalfSquaredNorm, _)
                | (Generator::GibbsEntropy, ConstraintSet::Simplex { .. })
                | (Generator::IntervalEntropy, ConstraintSet::Box { .. })
                | (Generator::OrthantEntropy, ConstraintSet::NonNegOrthant { .. })
                | (Generator::BallGenerator, ConstraintSet::Ball { .. })
        );
        if !ok {
            return Err(Error::Config(format!(
                "generator {generator:?} is not defined on {target:?}"
            )));
        }
        Ok(MirrorMap { target: MirrorTarget::Set(target), generator })
    }

    /// Euclidean generator over a polyhedral set (projection via Dykstra).
    pub fn euclidean_on_polyhedron(p: PolyhedralSet) -> Self {
        MirrorMap {
            target: MirrorTarget::Polyhedron(p),
            generator: Generator::HalfSquaredNorm,
        }
    }

    /// The default pairing for each constraint-set variant.
    pub fn default_for(set: &ConstraintSet) -> Self {
        let generator = match set {
            ConstraintSet::Box { .. } => Generator::IntervalEntropy,
            ConstraintSet::Simplex { .. } => Generator::GibbsEntropy,
            ConstraintSet::Ball { .. } => Generator::BallGenerator,
            ConstraintSet::NonNegOrthant { .. } => Generator::OrthantEntropy,
            ConstraintSet::FullSpace { .. } => Generator::HalfSquaredNorm,
        };
        MirrorMap::new(set.clone(), generator).expect("default pairing is always valid")
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn target(&self) -> &MirrorTarget {
        &self.target
    }

    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    /// Strong-convexity modulus μ of the generator on its set (a valid lower
    /// bound; feeds step-size heuristics only).
    pub fn mu(&self) -> f64 {
        match (&self.generator, &self.target) {
            (Generator::HalfSquaredNorm, _) => 1.0,
            // Pinsker: KL(x'‖x) ≥ ½‖x'−x‖₁² ≥ ½‖x'−x‖₂².
            (Generator::GibbsEntropy, _) => 1.0,
            (Generator::IntervalEntropy, MirrorTarget::Set(ConstraintSet::Box { lower, upper })) => {
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| {
                        let w = u - l;
                        // min interior curvature is 4/w; 4/w² is the quoted
                        // bound, valid for w ≥ 1 — take whichever is lower.
                        (4.0 / w).min(4.0 / (w * w))
                    })
                    .fold(f64::INFINITY, f64::min)
            }
            // Curvature 1/x on a working range x ≤ 10.
            (Generator::OrthantEntropy, _) => 0.1,
            (Generator::BallGenerator, MirrorTarget::Set(ConstraintSet::Ball { radius, .. })) => {
                1.0 / radius
            }
            _ => 1.0,
        }
    }

    /// Smoothness modulus L where bounded (`None`: unbounded near boundary).
    pub fn smoothness(&self) -> Option<f64> {
        match self.generator {
            Generator::HalfSquaredNorm => Some(1.0),
            _ => None,
        }
    }

    fn check_membership(&self, x: &DVector<f64>) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Domain(format!(
                "point has dimension {}, map expects {}",
                x.len(),
                self.dim()
            )));
        }
        if !self.target.contains(x, 1e-9) {
            return Err(Error::Domain("point outside the generator's set".into()));
        }
        Ok(())
    }

    fn check_interior(&self, x: &DVector<f64>) -> Result<()> {
        let boundary = match (&self.generator, &self.target) {
            (Generator::HalfSquaredNorm, _) => false,
            (Generator::GibbsEntropy, _) | (Generator::OrthantEntropy, _) => {
                x.iter().any(|v| *v < BOUNDARY_EPS)
            }
            (Generator::IntervalEntropy, MirrorTarget::Set(ConstraintSet::Box { lower, upper })) => x
                .iter()
                .zip(lower.iter().zip(upper))
                .any(|(v, (l, u))| v - l < BOUNDARY_EPS || u - v < BOUNDARY_EPS),
            (Generator::BallGenerator, MirrorTarget::Set(ConstraintSet::Ball { center, radius })) => {
                let c = DVector::from_column_slice(center);
                radius - (x - c).norm() < BOUNDARY_EPS
            }
            _ => false,
        };
        if boundary {
            Err(Error::Domain("boundary point of an entropy-type generator".into()))
        } else {
            Ok(())
        }
    }

    /// φ(x).
    pub fn generator_value(&self, x: &DVector<f64>) -> Result<f64> {
        self.check_membership(x)?;
        self.check_interior(x)?;
        Ok(self.value_clamped(x))
    }

    fn value_clamped(&self, x: &DVector<f64>) -> f64 {
        match (&self.generator, &self.target) {
            (Generator::HalfSquaredNorm, _) => 0.5 * x.norm_squared(),
            (Generator::GibbsEntropy, _) => x.iter().map(|v| xlogx(*v)).sum(),
            (Generator::OrthantEntropy, _) => x.iter().map(|v| xlogx(*v) - v).sum(),
            (Generator::IntervalEntropy, MirrorTarget::Set(ConstraintSet::Box { lower, upper })) => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (l, u))| xlogx(v - l) + xlogx(u - v))
                .sum(),
            (Generator::BallGenerator, MirrorTarget::Set(ConstraintSet::Ball { center, radius })) => {
                let c = DVector::from_column_slice(center);
                let r2 = (x - c).norm_squared().min(radius * radius * (1.0 - CLAMP));
                -(radius * radius - r2).sqrt()
            }
            _ => unreachable!("constructor enforces valid pairings"),
        }
    }

    /// ∇φ(x) for interior x.
    pub fn generator_grad(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_membership(x)?;
        self.check_interior(x)?;
        Ok(self.grad_clamped(x))
    }

    /// Gradient with inputs clamped one margin inside the boundary; total on
    /// the set. Solver paths use this so iterates produced by conjugate maps
    /// (which can sit within machine epsilon of the boundary) keep flowing.
    pub fn grad_clamped(&self, x: &DVector<f64>) -> DVector<f64> {
        match (&self.generator, &self.target) {
            (Generator::HalfSquaredNorm, _) => x.clone(),
            (Generator::GibbsEntropy, _) => x.map(|v| 1.0 + v.max(CLAMP).ln()),
            (Generator::OrthantEntropy, _) => x.map(|v| v.max(CLAMP).ln()),
            (Generator::IntervalEntropy, MirrorTarget::Set(ConstraintSet::Box { lower, upper })) => {
                DVector::from_iterator(
                    x.len(),
                    x.iter().zip(lower.iter().zip(upper)).map(|(v, (l, u))| {
                        let a = (v - l).max(CLAMP);
                        let b = (u - v).max(CLAMP);
                        (a / b).ln()
                    }),
                )
            }
            (Generator::BallGenerator, MirrorTarget::Set(ConstraintSet::Ball { center, radius })) => {
                let c = DVector::from_column_slice(center);
                let d = x - c;
                let r2 = d.norm_squared().min(radius * radius * (1.0 - CLAMP));
                d / (radius * radius - r2).sqrt()
            }
            _ => unreachable!(),
        }
    }

    /// `∇φ*(y) = argmin_{x∈Ω} {−xᵀy + φ(x)}` — total in y, lands in the set.
    pub fn conjugate_grad(&self, y: &DVector<f64>) -> DVector<f64> {
        match (&self.generator, &self.target) {
            (Generator::HalfSquaredNorm, t) => t.project(y),
            (Generator::GibbsEntropy, _) => softmax(y),
            (Generator::OrthantEntropy, _) => y.map(|v| v.min(700.0).exp()),
            (Generator::IntervalEntropy, MirrorTarget::Set(ConstraintSet::Box { lower, upper })) => {
                DVector::from_iterator(
                    y.len(),
                    y.iter()
                        .zip(lower.iter().zip(upper))
                        .map(|(v, (l, u))| interval_conjugate(*l, *u, *v)),
                )
            }
            (Generator::BallGenerator, MirrorTarget::Set(ConstraintSet::Ball { center, radius })) => {
                let w = DVector::from_column_slice(center);
                let scale = radius / (1.0 + y.norm_squared()).sqrt();
                w + y * scale
            }
            _ => unreachable!(),
        }
    }

    /// φ*(y) = x̂ᵀy − φ(x̂) at x̂ = ∇φ*(y).
    pub fn conjugate_value(&self, y: &DVector<f64>) -> f64 {
        let x = self.conjugate_grad(y);
        x.dot(y) - self.value_clamped(&x)
    }

    /// Bregman divergence `D_φ(x', x) = φ(x') − φ(x) − ⟨x'−x, ∇φ(x)⟩`.
    pub fn bregman(&self, x_prime: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
        self.check_membership(x_prime)?;
        self.check_membership(x)?;
        Ok(self.bregman_clamped(x_prime, x))
    }

    pub fn bregman_clamped(&self, x_prime: &DVector<f64>, x: &DVector<f64>) -> f64 {
        self.value_clamped(x_prime) - self.value_clamped(x)
            - (x_prime - x).dot(&self.grad_clamped(x))
    }

    /// Bregman divergence of the conjugate, `D_{φ*}(y, y')`.
    pub fn bregman_conjugate(&self, y: &DVector<f64>, y_prime: &DVector<f64>) -> f64 {
        self.conjugate_value(y) - self.conjugate_value(y_prime)
            - self.conjugate_grad(y_prime).dot(&(y - y_prime))
    }

    /// One mirror-descent step: `∇φ*(∇φ(x) − α·g)`; equivalently
    /// `argmin_{x'∈Ω} {⟨x', g⟩ + D_φ(x', x)/α}`.
    pub fn mirror_step(&self, x: &DVector<f64>, g: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
        self.check_membership(x)?;
        let y = self.grad_clamped(x) - g * alpha;
        Ok(self.conjugate_grad(&y))
    }
}

#[inline]
fn xlogx(v: f64) -> f64 {
    let v = v.max(CLAMP);
    v * v.ln()
}

/// Componentwise `(a + b e^y) / (1 + e^y)` in an overflow-safe form.
#[inline]
fn interval_conjugate(a: f64, b: f64, y: f64) -> f64 {
    if y >= 0.0 {
        let e = (-y).exp();
        (a * e + b) / (e + 1.0)
    } else {
        let e = y.exp();
        (a + b * e) / (1.0 + e)
    }
}

/// Max-shifted softmax.
fn softmax(y: &DVector<f64>) -> DVector<f64> {
    let m = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e = y.map(|v| (v - m).exp());
    let s = e.sum();
    e / s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_map() -> MirrorMap {
        MirrorMap::new(
            ConstraintSet::Box { lower: vec![-6.0, -6.0], upper: vec![6.0, 6.0] },
            Generator::IntervalEntropy,
        )
        .unwrap()
    }

    #[test]
    fn generator_values_match_table() {
        let m = MirrorMap::new(
            ConstraintSet::FullSpace { dim: 2 },
            Generator::HalfSquaredNorm,
        )
        .unwrap();
        let v = m.generator_value(&DVector::from_vec(vec![3.0, 4.0])).unwrap();
        assert!((v - 12.5).abs() < 1e-14);

        let m = MirrorMap::new(ConstraintSet::Simplex { dim: 2 }, Generator::GibbsEntropy).unwrap();
        let v = m.generator_value(&DVector::from_vec(vec![0.5, 0.5])).unwrap();
        assert!((v + 2f64.ln()).abs() < 1e-12);

        let m = MirrorMap::new(
            ConstraintSet::Ball { center: vec![0.0, 0.0], radius: 1.0 },
            Generator::BallGenerator,
        )
        .unwrap();
        let v = m.generator_value(&DVector::from_vec(vec![0.0, 0.0])).unwrap();
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn generator_grads_match_known_points() {
        let m = MirrorMap::new(
            ConstraintSet::FullSpace { dim: 2 },
            Generator::HalfSquaredNorm,
        )
        .unwrap();
        let g = m.generator_grad(&DVector::from_vec(vec![1.0, 2.0])).unwrap();
        assert!((g - DVector::from_vec(vec![1.0, 2.0])).norm() < 1e-14);

        let g = box_map().generator_grad(&DVector::from_vec(vec![0.0, 0.0])).unwrap();
        assert!(g.norm() < 1e-14, "midpoint symmetry");
    }

    #[test]
    fn conjugate_grads_match_known_points() {
        let m = MirrorMap::new(ConstraintSet::Simplex { dim: 2 }, Generator::GibbsEntropy).unwrap();
        let x = m.conjugate_grad(&DVector::from_vec(vec![0.0, 0.0]));
        assert!((x - DVector::from_vec(vec![0.5, 0.5])).norm() < 1e-14);

        let x = box_map().conjugate_grad(&DVector::from_vec(vec![0.0, 0.0]));
        assert!(x.norm() < 1e-14);

        let m = MirrorMap::new(
            ConstraintSet::Ball { center: vec![1.0, 0.0], radius: 2.0 },
            Generator::BallGenerator,
        )
        .unwrap();
        let x = m.conjugate_grad(&DVector::from_vec(vec![0.0, 0.0]));
        assert!((x - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-14);

        let m = MirrorMap::new(
            ConstraintSet::Box { lower: vec![0.0], upper: vec![1.0] },
            Generator::HalfSquaredNorm,
        )
        .unwrap();
        let x = m.conjugate_grad(&DVector::from_vec(vec![2.0]));
        assert!((x[0] - 1.0).abs() < 1e-14, "clamp");
    }

    #[test]
    fn conjugate_output_is_member_and_interior_for_entropy() {
        let maps = vec![
            box_map(),
            MirrorMap::new(ConstraintSet::Simplex { dim: 3 }, Generator::GibbsEntropy).unwrap(),
            MirrorMap::new(ConstraintSet::NonNegOrthant { dim: 2 }, Generator::OrthantEntropy)
                .unwrap(),
            MirrorMap::new(
                ConstraintSet::Ball { center: vec![0.5, -0.5], radius: 1.5 },
                Generator::BallGenerator,
            )
            .unwrap(),
        ];
        for m in &maps {
            for mag in [0.1, 1.0, 10.0, 300.0] {
                let y = DVector::from_iterator(
                    m.dim(),
                    (0..m.dim()).map(|i| mag * if i % 2 == 0 { 1.0 } else { -0.7 }),
                );
                let x = m.conjugate_grad(&y);
                assert!(m.target().contains(&x, 1e-10), "{:?} mag {mag}", m.generator());
                assert!(x.iter().all(|v| v.is_finite()));
            }
        }
    }

    #[test]
    fn mirror_step_zero_gradient_is_fixed_point() {
        let m = box_map();
        let x = DVector::from_vec(vec![1.25, -3.5]);
        let x1 = m.mirror_step(&x, &DVector::zeros(2), 0.7).unwrap();
        assert!((x1 - &x).norm() < 1e-8);
    }

    #[test]
    fn mirror_step_reduces_to_gradient_descent_on_fullspace() {
        let m = MirrorMap::new(ConstraintSet::FullSpace { dim: 1 }, Generator::HalfSquaredNorm)
            .unwrap();
        let x1 = m
            .mirror_step(
                &DVector::from_vec(vec![1.0]),
                &DVector::from_vec(vec![2.0]),
                0.5,
            )
            .unwrap();
        assert!(x1[0].abs() < 1e-15);
    }

    #[test]
    fn bregman_known_values() {
        let m = MirrorMap::new(ConstraintSet::FullSpace { dim: 2 }, Generator::HalfSquaredNorm)
            .unwrap();
        let d = m
            .bregman(
                &DVector::from_vec(vec![1.0, 0.0]),
                &DVector::from_vec(vec![0.0, 0.0]),
            )
            .unwrap();
        assert!((d - 0.5).abs() < 1e-14);
    }

    #[test]
    fn boundary_point_is_rejected_by_fallible_entry_points() {
        let m = box_map();
        let boundary = DVector::from_vec(vec![6.0, 0.0]);
        assert!(m.generator_value(&boundary).is_err());
        assert!(m.generator_grad(&boundary).is_err());
        // But the clamped path stays finite.
        assert!(m.grad_clamped(&boundary).iter().all(|v| v.is_finite()));
    }

    #[test]
    fn exterior_point_is_a_domain_error() {
        let m = box_map();
        assert!(m.generator_value(&DVector::from_vec(vec![7.0, 0.0])).is_err());
        let m2 = MirrorMap::new(ConstraintSet::Simplex { dim: 2 }, Generator::GibbsEntropy).unwrap();
        assert!(m2.generator_value(&DVector::from_vec(vec![0.9, 0.9])).is_err());
    }

    #[test]
    fn invalid_pairings_are_rejected() {
        assert!(MirrorMap::new(ConstraintSet::Simplex { dim: 2 }, Generator::IntervalEntropy).is_err());
        assert!(MirrorMap::new(ConstraintSet::FullSpace { dim: 2 }, Generator::BallGenerator).is_err());
    }
}
