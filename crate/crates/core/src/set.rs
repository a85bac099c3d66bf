//! Feasible-set geometry: the constraint sets Ω_i players act on.
//!
//! Every variant supports a membership predicate, an exact Euclidean
//! projection, and an interior reference point. Projections are used both by
//! the projected baselines and by the natural-map VI residual.

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A player's action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSet {
    /// Axis-aligned box `{x : lower ≤ x ≤ upper}` (componentwise).
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// Probability simplex `{x ≥ 0 : Σ x_l = 1}`.
    Simplex { dim: usize },
    /// Euclidean ball `{x : ‖x − center‖ ≤ radius}`.
    Ball { center: Vec<f64>, radius: f64 },
    /// Non-negative orthant `R^n_+`.
    NonNegOrthant { dim: usize },
    /// All of `R^n`.
    FullSpace { dim: usize },
}

impl ConstraintSet {
    /// Validates structural invariants (box ordering, positive radius).
    pub fn validate(&self) -> Result<()> {
        match self {
            ConstraintSet::Box { lower, upper } => {
                if lower.len() != upper.len() {
                    return Err(Error::Config("box bound lengths differ".into()));
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
                    return Err(Error::Config("box requires lower < upper componentwise".into()));
                }
                Ok(())
            }
            ConstraintSet::Ball { radius, .. } => {
                if *radius > 0.0 {
                    Ok(())
                } else {
                    Err(Error::Config("ball radius must be positive".into()))
                }
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConstraintSet::Box { lower, .. } => lower.len(),
            ConstraintSet::Simplex { dim } => *dim,
            ConstraintSet::Ball { center, .. } => center.len(),
            ConstraintSet::NonNegOrthant { dim } => *dim,
            ConstraintSet::FullSpace { dim } => *dim,
        }
    }

    /// Membership test with tolerance `tol ≥ 0`.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            ConstraintSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(xi, (l, u))| *xi >= l - tol && *xi <= u + tol),
            ConstraintSet::Simplex { .. } => {
                x.iter().all(|xi| *xi >= -tol) && (x.sum() - 1.0).abs() <= tol * (x.len() as f64)
            }
            ConstraintSet::Ball { center, radius } => {
                let mut d2 = 0.0;
                for (xi, ci) in x.iter().zip(center) {
                    d2 += (xi - ci) * (xi - ci);
                }
                d2.sqrt() <= radius + tol
            }
            ConstraintSet::NonNegOrthant { .. } => x.iter().all(|xi| *xi >= -tol),
            ConstraintSet::FullSpace { .. } => true,
        }
    }

    /// Exact Euclidean projection onto the set.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            ConstraintSet::Box { lower, upper } => DVector::from_iterator(
                x.len(),
                x.iter()
                    .zip(lower.iter().zip(upper))
                    .map(|(xi, (l, u))| xi.max(*l).min(*u)),
            ),
            ConstraintSet::Simplex { .. } => project_simplex(x),
            ConstraintSet::Ball { center, radius } => {
                let c = DVector::from_column_slice(center);
                let d = x - &c;
                let n = d.norm();
                if n <= *radius {
                    x.clone()
                } else {
                    c + d * (*radius / n)
                }
            }
            ConstraintSet::NonNegOrthant { .. } => x.map(|v| v.max(0.0)),
            ConstraintSet::FullSpace { .. } => x.clone(),
        }
    }

    /// A point strictly inside the set (centroid-like).
    pub fn interior_point(&self) -> DVector<f64> {
        match self {
            ConstraintSet::Box { lower, upper } => DVector::from_iterator(
                lower.len(),
                lower.iter().zip(upper).map(|(l, u)| 0.5 * (l + u)),
            ),
            ConstraintSet::Simplex { dim } => {
                DVector::from_element(*dim, 1.0 / (*dim as f64))
            }
            ConstraintSet::Ball { center, .. } => DVector::from_column_slice(center),
            ConstraintSet::NonNegOrthant { dim } => DVector::from_element(*dim, 1.0),
            ConstraintSet::FullSpace { dim } => DVector::zeros(*dim),
        }
    }

    /// Draws a point of the set, uniformly for boxes and balls and by
    /// normalization on the simplex. Unbounded sets sample a working box.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        match self {
            ConstraintSet::Box { lower, upper } => DVector::from_iterator(
                lower.len(),
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| rng.gen_range(*l..*u)),
            ),
            ConstraintSet::Simplex { dim } => {
                let mut v: Vec<f64> = (0..*dim).map(|_| -rng.gen::<f64>().ln()).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|e| *e /= s);
                DVector::from_vec(v)
            }
            ConstraintSet::Ball { center, radius } => {
                let n = center.len();
                loop {
                    let d = DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(-1.0..1.0)));
                    if d.norm_squared() <= 1.0 {
                        return DVector::from_column_slice(center) + d * *radius;
                    }
                }
            }
            ConstraintSet::NonNegOrthant { dim } => {
                DVector::from_iterator(*dim, (0..*dim).map(|_| rng.gen_range(0.0..10.0)))
            }
            ConstraintSet::FullSpace { dim } => {
                DVector::from_iterator(*dim, (0..*dim).map(|_| rng.gen_range(-10.0..10.0)))
            }
        }
    }

    /// Interior sample for entropy-type generators: keeps a relative margin
    /// away from boundaries where log terms blow up.
    pub fn sample_interior<R: Rng>(&self, rng: &mut R, margin: f64) -> DVector<f64> {
        match self {
            ConstraintSet::Box { lower, upper } => DVector::from_iterator(
                lower.len(),
                lower.iter().zip(upper).map(|(l, u)| {
                    let w = u - l;
                    rng.gen_range(l + margin * w..u - margin * w)
                }),
            ),
            ConstraintSet::Simplex { dim } => {
                let mut v: Vec<f64> =
                    (0..*dim).map(|_| margin - rng.gen::<f64>().max(1e-12).ln()).collect();
                let s: f64 = v.iter().sum();
                v.iter_mut().for_each(|e| *e /= s);
                DVector::from_vec(v)
            }
            ConstraintSet::Ball { center, radius } => {
                let shrunk = ConstraintSet::Ball {
                    center: center.clone(),
                    radius: radius * (1.0 - margin),
                };
                shrunk.sample(rng)
            }
            ConstraintSet::NonNegOrthant { dim } => {
                DVector::from_iterator(*dim, (0..*dim).map(|_| rng.gen_range(margin..10.0)))
            }
            ConstraintSet::FullSpace { .. } => self.sample(rng),
        }
    }
}

/// A box intersected with affine half-spaces `aᵀx ≥ b`.
///
/// This is the shape dual feasible sets take when the Hessian conditions
/// reduce to linear constraints on σ. Projection uses Dykstra's alternating
/// scheme over the box and each half-space, which converges to the exact
/// Euclidean projection onto the intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyhedralSet {
    /// Box part; infinite entries mean unbounded.
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Half-spaces `aᵀx ≥ b`.
    pub halfspaces: Vec<(Vec<f64>, f64)>,
}

impl PolyhedralSet {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        let in_box = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(xi, (l, u))| *xi >= l - tol && *xi <= u + tol);
        in_box
            && self.halfspaces.iter().all(|(a, b)| {
                let av = DVector::from_column_slice(a);
                av.dot(x) >= b - tol * (1.0 + av.norm())
            })
    }

    fn clamp_box(&self, x: &mut DVector<f64>) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = xi.max(self.lower[i]).min(self.upper[i]);
        }
    }

    /// Euclidean projection via Dykstra's algorithm.
    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.halfspaces.is_empty() {
            let mut z = x.clone();
            self.clamp_box(&mut z);
            return z;
        }
        // Box last, so every sweep (and the final output) is box-exact.
        let m = self.halfspaces.len() + 1;
        let mut z = x.clone();
        let mut corrections = vec![DVector::zeros(x.len()); m];
        for _sweep in 0..600 {
            let mut shift = 0.0;
            for (s, corr) in corrections.iter_mut().enumerate() {
                let w = &z + &*corr;
                let p = if s == m - 1 {
                    let mut p = w.clone();
                    self.clamp_box(&mut p);
                    p
                } else {
                    let (a, b) = &self.halfspaces[s];
                    let av = DVector::from_column_slice(a);
                    let viol = b - av.dot(&w);
                    if viol > 0.0 {
                        let scale = viol / av.norm_squared();
                        &w + av * scale
                    } else {
                        w.clone()
                    }
                };
                *corr = &w - &p;
                shift += (&p - &z).norm_squared();
                z = p;
            }
            if shift < 1e-26 {
                break;
            }
        }
        self.clamp_box(&mut z);
        z
    }

    /// Searches for a point with positive margin on every constraint using
    /// projected subgradient ascent on the worst margin, starting from the
    /// projection of the origin (the smallest feasible point, which keeps
    /// dual starting values tame). Returns `None` when no strictly feasible
    /// point is found.
    pub fn interior_point(&self) -> Option<DVector<f64>> {
        let n = self.dim();
        let mut z = self.project(&DVector::zeros(n));
        if self.halfspaces.is_empty() {
            return Some(z);
        }
        let margin = |z: &DVector<f64>| -> (f64, usize) {
            let mut worst = f64::INFINITY;
            let mut arg = 0;
            for (idx, (a, b)) in self.halfspaces.iter().enumerate() {
                let av = DVector::from_column_slice(a);
                let m = (av.dot(z) - b) / av.norm();
                if m < worst {
                    worst = m;
                    arg = idx;
                }
            }
            (worst, arg)
        };
        let target = 1e-4;
        let mut best = z.clone();
        let mut best_m = margin(&z).0;
        for _ in 0..2000 {
            let (m, arg) = margin(&z);
            if m > best_m {
                best_m = m;
                best = z.clone();
            }
            if m >= target {
                return Some(z);
            }
            let (a, _) = &self.halfspaces[arg];
            let av = DVector::from_column_slice(a);
            let scale = 1.2 * (target - m) / av.norm();
            z += av * scale;
            self.clamp_box(&mut z);
        }
        if best_m > 0.0 && self.contains(&best, 1e-12) {
            Some(best)
        } else {
            None
        }
    }

    /// Sound emptiness certificate: some half-space cannot be met anywhere in
    /// the box. (`false` does not prove nonemptiness on its own.)
    pub fn certainly_empty(&self) -> bool {
        for (i, l) in self.lower.iter().enumerate() {
            if l > &self.upper[i] {
                return true;
            }
        }
        for (a, b) in &self.halfspaces {
            let mut best = 0.0;
            for (k, ak) in a.iter().enumerate() {
                let v = if *ak >= 0.0 { self.upper[k] } else { self.lower[k] };
                best += ak * v;
            }
            if best < *b {
                return true;
            }
        }
        false
    }
}

/// Euclidean projection onto the probability simplex (sort-and-threshold).
fn project_simplex(x: &DVector<f64>) -> DVector<f64> {
    let n = x.len();
    let mut u: Vec<f64> = x.iter().copied().collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut css = 0.0;
    let mut rho = 0;
    let mut theta = 0.0;
    for (j, uj) in u.iter().enumerate() {
        css += uj;
        let t = (css - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            rho = j + 1;
            theta = t;
        }
    }
    debug_assert!(rho > 0);
    DVector::from_iterator(n, x.iter().map(|xi| (xi - theta).max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_invariants() {
        let ok = ConstraintSet::Box { lower: vec![0.0, -1.0], upper: vec![1.0, 1.0] };
        assert!(ok.validate().is_ok());
        let bad = ConstraintSet::Box { lower: vec![1.0], upper: vec![1.0] };
        assert!(bad.validate().is_err());
        let ball = ConstraintSet::Ball { center: vec![0.0], radius: 0.0 };
        assert!(ball.validate().is_err());
    }

    #[test]
    fn projections_land_in_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let sets = vec![
            ConstraintSet::Box { lower: vec![-1.0, 0.0], upper: vec![1.0, 2.0] },
            ConstraintSet::Simplex { dim: 4 },
            ConstraintSet::Ball { center: vec![1.0, -1.0], radius: 0.5 },
            ConstraintSet::NonNegOrthant { dim: 3 },
            ConstraintSet::FullSpace { dim: 2 },
        ];
        for set in &sets {
            for _ in 0..50 {
                let x = DVector::from_iterator(
                    set.dim(),
                    (0..set.dim()).map(|_| rng.gen_range(-5.0..5.0)),
                );
                let p = set.project(&x);
                assert!(set.contains(&p, 1e-10), "{set:?} proj left the set");
                // Projection is idempotent.
                assert!((set.project(&p) - &p).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn simplex_projection_matches_known_cases() {
        let x = DVector::from_vec(vec![0.5, 0.5]);
        let p = project_simplex(&x);
        assert!((p - DVector::from_vec(vec![0.5, 0.5])).norm() < 1e-14);

        let x = DVector::from_vec(vec![2.0, 0.0]);
        let p = project_simplex(&x);
        assert!((p - DVector::from_vec(vec![1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn samples_are_members() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let sets = vec![
            ConstraintSet::Box { lower: vec![-2.0], upper: vec![3.0] },
            ConstraintSet::Simplex { dim: 3 },
            ConstraintSet::Ball { center: vec![0.0, 0.0], radius: 2.0 },
        ];
        for set in &sets {
            for _ in 0..100 {
                let x = set.sample(&mut rng);
                assert!(set.contains(&x, 1e-9));
            }
        }
    }
}
