//! Property suite for the mirror maps: conjugacy roundtrips, Bregman
//! identities, and oracle equivalence of the closed-form conjugates.

mod common;

use common::conjugate_argmin_oracle;
use dualnash::mirror::{Generator, MirrorMap};
use dualnash::set::ConstraintSet;
use nalgebra::DVector;
use proptest::prelude::*;

fn all_maps() -> Vec<MirrorMap> {
    vec![
        MirrorMap::new(
            ConstraintSet::Box { lower: vec![-6.0, -6.0], upper: vec![6.0, 6.0] },
            Generator::IntervalEntropy,
        )
        .unwrap(),
        MirrorMap::new(ConstraintSet::Simplex { dim: 3 }, Generator::GibbsEntropy).unwrap(),
        MirrorMap::new(ConstraintSet::NonNegOrthant { dim: 2 }, Generator::OrthantEntropy)
            .unwrap(),
        MirrorMap::new(
            ConstraintSet::Ball { center: vec![1.0, -0.5], radius: 2.0 },
            Generator::BallGenerator,
        )
        .unwrap(),
        MirrorMap::new(ConstraintSet::FullSpace { dim: 2 }, Generator::HalfSquaredNorm).unwrap(),
        MirrorMap::new(
            ConstraintSet::Box { lower: vec![0.0, -1.0], upper: vec![1.0, 4.0] },
            Generator::HalfSquaredNorm,
        )
        .unwrap(),
    ]
}

/// A strictly interior point per map, parametrized by unit coordinates.
fn interior_point(map: &MirrorMap, u: &[f64]) -> DVector<f64> {
    use dualnash::mirror::MirrorTarget;
    let margin = 0.02;
    match map.target() {
        MirrorTarget::Set(ConstraintSet::Box { lower, upper }) => DVector::from_iterator(
            lower.len(),
            lower
                .iter()
                .zip(upper)
                .zip(u)
                .map(|((l, h), t)| l + (margin + t * (1.0 - 2.0 * margin)) * (h - l)),
        ),
        MirrorTarget::Set(ConstraintSet::Simplex { dim }) => {
            let mut v: Vec<f64> = u[..*dim].iter().map(|t| margin + t).collect();
            let s: f64 = v.iter().sum();
            v.iter_mut().for_each(|e| *e /= s);
            DVector::from_vec(v)
        }
        MirrorTarget::Set(ConstraintSet::NonNegOrthant { dim }) => {
            DVector::from_iterator(*dim, u[..*dim].iter().map(|t| margin + 5.0 * t))
        }
        MirrorTarget::Set(ConstraintSet::Ball { center, radius }) => {
            let n = center.len();
            let mut d = DVector::from_iterator(n, u[..n].iter().map(|t| 2.0 * t - 1.0));
            let norm = d.norm().max(1e-9);
            let r = radius * (1.0 - margin) * u[n % u.len()].min(0.95);
            d *= r / norm;
            DVector::from_column_slice(center) + d
        }
        MirrorTarget::Set(ConstraintSet::FullSpace { dim }) => {
            DVector::from_iterator(*dim, u[..*dim].iter().map(|t| 8.0 * t - 4.0))
        }
        MirrorTarget::Polyhedron(_) => unreachable!("not used in this suite"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// ∇φ*(∇φ(x)) = x for interior x.
    #[test]
    fn inverse_map_roundtrip(u in proptest::collection::vec(0.0f64..1.0, 3)) {
        for map in all_maps() {
            let x = interior_point(&map, &u);
            let y = map.generator_grad(&x).unwrap();
            let back = map.conjugate_grad(&y);
            prop_assert!(
                (back - &x).norm() < 1e-8,
                "roundtrip failed for {:?}",
                map.generator()
            );
        }
    }

    /// ∇φ(∇φ*(y)) = y whenever the conjugate lands interior.
    #[test]
    fn forward_roundtrip(u in proptest::collection::vec(-3.0f64..3.0, 3)) {
        for map in all_maps() {
            let y = DVector::from_iterator(map.dim(), u[..map.dim()].iter().copied());
            let x = map.conjugate_grad(&y);
            if let Ok(grad) = map.generator_grad(&x) {
                let err = match map.generator() {
                    // Gibbs gradients are defined modulo constant shifts on
                    // the simplex.
                    Generator::GibbsEntropy => {
                        let d = &grad - &y;
                        let mean = d.sum() / d.len() as f64;
                        d.map(|v| v - mean).norm()
                    }
                    Generator::HalfSquaredNorm => {
                        // Projection may clip; only interior outputs invert.
                        if (&x - &y).norm() < 1e-12 { 0.0 } else { continue }
                    }
                    _ => (&grad - &y).norm(),
                };
                prop_assert!(err < 1e-8, "forward roundtrip failed for {:?}", map.generator());
            }
        }
    }

    /// Three-point identity:
    /// D(z',z⁺) + D(z⁺,z) − D(z',z) − ⟨z'−z⁺, ∇φ(z)−∇φ(z⁺)⟩ = 0.
    #[test]
    fn three_point_identity(
        a in proptest::collection::vec(0.0f64..1.0, 3),
        b in proptest::collection::vec(0.0f64..1.0, 3),
        c in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        for map in all_maps() {
            let zp = interior_point(&map, &a);
            let zplus = interior_point(&map, &b);
            let z = interior_point(&map, &c);
            let lhs = map.bregman(&zp, &zplus).unwrap() + map.bregman(&zplus, &z).unwrap()
                - map.bregman(&zp, &z).unwrap()
                - (&zp - &zplus).dot(&(map.generator_grad(&z).unwrap() - map.generator_grad(&zplus).unwrap()));
            prop_assert!(lhs.abs() < 1e-10, "three-point identity off by {lhs} for {:?}", map.generator());
        }
    }

    /// Bound on the divergence after a conjugate step: for z⁺ = ∇φ*(g),
    /// D(z', z⁺) ≤ D(z', z) − D(z⁺, z) + (g − ∇φ(z))ᵀ(z⁺ − z').
    #[test]
    fn divergence_step_bound(
        a in proptest::collection::vec(0.0f64..1.0, 3),
        c in proptest::collection::vec(0.0f64..1.0, 3),
        g in proptest::collection::vec(-2.0f64..2.0, 3),
    ) {
        for map in all_maps() {
            let zp = interior_point(&map, &a);
            let z = interior_point(&map, &c);
            let gv = DVector::from_iterator(map.dim(), g[..map.dim()].iter().copied());
            let zplus = map.conjugate_grad(&gv);
            let lhs = map.bregman_clamped(&zp, &zplus);
            let rhs = map.bregman(&zp, &z).unwrap() - map.bregman_clamped(&zplus, &z)
                + (&gv - map.generator_grad(&z).unwrap()).dot(&(&zplus - &zp));
            prop_assert!(lhs <= rhs + 1e-9, "step bound violated for {:?}: {lhs} > {rhs}", map.generator());
        }
    }

    /// Fenchel with the half-squared norm: aᵀb ≤ ½‖a‖² + ½‖b‖².
    #[test]
    fn fenchel_inequality(
        a in proptest::collection::vec(-5.0f64..5.0, 4),
        b in proptest::collection::vec(-5.0f64..5.0, 4),
    ) {
        let av = DVector::from_vec(a);
        let bv = DVector::from_vec(b);
        prop_assert!(av.dot(&bv) <= 0.5 * av.norm_squared() + 0.5 * bv.norm_squared() + 1e-12);
    }

    /// D(x', x) ≥ (μ/2)‖x'−x‖² with the variant's documented μ; D(x,x) = 0.
    #[test]
    fn strong_convexity_lower_bound(
        a in proptest::collection::vec(0.0f64..1.0, 3),
        b in proptest::collection::vec(0.0f64..1.0, 3),
    ) {
        for map in all_maps() {
            let xp = interior_point(&map, &a);
            let x = interior_point(&map, &b);
            let d = map.bregman(&xp, &x).unwrap();
            prop_assert!(d >= 0.5 * map.mu() * (&xp - &x).norm_squared() - 1e-10);
            prop_assert!(map.bregman(&x, &x).unwrap().abs() < 1e-12);
        }
    }

    /// Closed-form conjugates agree with the independent argmin oracle.
    #[test]
    fn conjugate_matches_argmin_oracle(y in proptest::collection::vec(-4.0f64..4.0, 3)) {
        for map in all_maps() {
            let yv = DVector::from_iterator(map.dim(), y[..map.dim()].iter().copied());
            let fast = map.conjugate_grad(&yv);
            let slow = conjugate_argmin_oracle(&map, &yv);
            prop_assert!(
                (fast - slow).norm() < 1e-6,
                "conjugate disagrees with oracle for {:?}",
                map.generator()
            );
        }
    }

    /// mirror_step equals the Bregman-proximal argmin form.
    #[test]
    fn mirror_step_is_bregman_prox(
        a in proptest::collection::vec(0.05f64..0.95, 3),
        g in proptest::collection::vec(-2.0f64..2.0, 3),
        alpha in 0.05f64..1.0,
    ) {
        for map in all_maps() {
            let x = interior_point(&map, &a);
            let gv = DVector::from_iterator(map.dim(), g[..map.dim()].iter().copied());
            let step = map.mirror_step(&x, &gv, alpha).unwrap();
            // Independent route: argmin of −xᵀ(∇φ(x_k) − αg) + φ(x).
            let target = map.generator_grad(&x).unwrap() - &gv * alpha;
            let oracle = conjugate_argmin_oracle(&map, &target);
            prop_assert!(
                (step - oracle).norm() < 1e-6,
                "mirror step disagrees with prox oracle for {:?}",
                map.generator()
            );
        }
    }
}

#[test]
fn finite_difference_gradient_of_generators() {
    use common::fd_gradient;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
    for map in all_maps() {
        for _ in 0..20 {
            let u: Vec<f64> = (0..3).map(|_| rand::Rng::gen_range(&mut rng, 0.1..0.9)).collect();
            let x = interior_point(&map, &u);
            let g = map.generator_grad(&x).unwrap();
            let fd = fd_gradient(|v| map.generator_value(v).unwrap(), &x, 1e-6);
            assert!(
                (g - fd).norm() < 1e-6 * (1.0 + 1.0),
                "generator grad mismatch for {:?}",
                map.generator()
            );
        }
    }
}
