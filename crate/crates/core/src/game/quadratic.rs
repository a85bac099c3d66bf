//! Quadratic operator components Λ_{i,k}.
//!
//! Each component is a quadratic form on the *stacked* profile
//! `x = col{x_1, …, x_N}`:
//!
//! ```text
//! Λ_k(x) = xᵀ Q_k x + l_kᵀ x + c_k,     Q_k symmetric.
//! ```
//!
//! Restricted to one player's block this covers the per-player shape
//! `x_iᵀ A x_i + Σ_{j≠i} x_iᵀ B_j x_j + bᵀ x_i + c` (with `A = Q[ii]`,
//! `B_j = 2 Q[ij]`) and additionally the pure `x_j` terms that components
//! such as `‖x_i − x_j‖² − d` require. The second derivative in any block is
//! constant — the structural property the duality layer relies on.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block layout of a stacked strategy profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileLayout {
    dims: Vec<usize>,
    offsets: Vec<usize>,
}

impl ProfileLayout {
    pub fn new(dims: Vec<usize>) -> Self {
        let mut offsets = Vec::with_capacity(dims.len());
        let mut acc = 0;
        for d in &dims {
            offsets.push(acc);
            acc += d;
        }
        ProfileLayout { dims, offsets }
    }

    pub fn players(&self) -> usize {
        self.dims.len()
    }

    pub fn dim_of(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn offset_of(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn block<'a>(&self, x: &'a DVector<f64>, i: usize) -> DVector<f64> {
        x.rows(self.offsets[i], self.dims[i]).into_owned()
    }

    pub fn set_block(&self, x: &mut DVector<f64>, i: usize, v: &DVector<f64>) {
        x.rows_mut(self.offsets[i], self.dims[i]).copy_from(v);
    }
}

/// One quadratic component `Λ_k` over the stacked profile.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticComponent {
    /// Symmetric matrix of the quadratic form (total × total).
    pub q: DMatrix<f64>,
    /// Linear term (total).
    pub l: DVector<f64>,
    /// Constant term.
    pub c: f64,
}

impl QuadraticComponent {
    pub fn new(q: DMatrix<f64>, l: DVector<f64>, c: f64) -> Self {
        // Symmetrize so the stored matrix is exactly the quadratic form's
        // symmetric representative.
        let q = (&q + q.transpose()) * 0.5;
        QuadraticComponent { q, l, c }
    }

    /// Zero component of the given total dimension, evaluating to `c`.
    pub fn constant(total: usize, c: f64) -> Self {
        QuadraticComponent {
            q: DMatrix::zeros(total, total),
            l: DVector::zeros(total),
            c,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.l.len()
    }

    pub fn eval(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.q * x)[(0, 0)] + self.l.dot(x) + self.c
    }

    /// Full gradient `2 Q x + l`.
    pub fn grad_full(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.q * x * 2.0 + &self.l
    }

    /// Gradient with respect to player `i`'s block.
    pub fn grad_block(&self, layout: &ProfileLayout, i: usize, x: &DVector<f64>) -> DVector<f64> {
        let g = self.grad_full(x);
        layout.block(&g, i)
    }

    /// Constant Hessian with respect to player `i`'s block: `2 Q[ii]`.
    pub fn hessian_block(&self, layout: &ProfileLayout, i: usize) -> DMatrix<f64> {
        let (o, d) = (layout.offset_of(i), layout.dim_of(i));
        self.q.view((o, o), (d, d)).into_owned() * 2.0
    }
}

/// A vector-valued quadratic operator `Λ = (Λ_1, …, Λ_q)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticOperator {
    components: Vec<QuadraticComponent>,
    total: usize,
}

impl QuadraticOperator {
    pub fn new(components: Vec<QuadraticComponent>) -> Result<Self> {
        let total = components
            .first()
            .map(|c| c.total_dim())
            .ok_or_else(|| Error::Config("quadratic operator needs at least one component".into()))?;
        if components.iter().any(|c| c.total_dim() != total) {
            return Err(Error::Config(
                "quadratic operator components have inconsistent dimensions".into(),
            ));
        }
        Ok(QuadraticOperator { components, total })
    }

    /// Builds a component from the per-player parametrization
    /// `x_iᵀ A x_i + Σ_{j≠i} x_iᵀ B_j x_j + bᵀ x_i + c`.
    pub fn component_from_player_form(
        layout: &ProfileLayout,
        i: usize,
        a: &DMatrix<f64>,
        cross: &[(usize, DMatrix<f64>)],
        b: &DVector<f64>,
        c: f64,
    ) -> QuadraticComponent {
        let total = layout.total();
        let (oi, ni) = (layout.offset_of(i), layout.dim_of(i));
        let mut q = DMatrix::zeros(total, total);
        q.view_mut((oi, oi), (ni, ni)).copy_from(a);
        for (j, bj) in cross {
            let (oj, nj) = (layout.offset_of(*j), layout.dim_of(*j));
            // x_iᵀ B x_j splits into two symmetric halves.
            for r in 0..ni {
                for s in 0..nj {
                    q[(oi + r, oj + s)] += 0.5 * bj[(r, s)];
                    q[(oj + s, oi + r)] += 0.5 * bj[(r, s)];
                }
            }
        }
        let mut l = DVector::zeros(total);
        l.rows_mut(oi, ni).copy_from(b);
        QuadraticComponent::new(q, l, c)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn component(&self, k: usize) -> &QuadraticComponent {
        &self.components[k]
    }

    pub fn components(&self) -> &[QuadraticComponent] {
        &self.components
    }

    /// `col{Λ_1(x), …, Λ_q(x)}`.
    pub fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.components.iter().map(|c| c.eval(x)))
    }

    /// Matrix whose row `k` is `∇_{x_i} Λ_k(x)` (q × n_i).
    pub fn grad_wrt(&self, layout: &ProfileLayout, i: usize, x: &DVector<f64>) -> DMatrix<f64> {
        let n = layout.dim_of(i);
        let mut g = DMatrix::zeros(self.len(), n);
        for (k, comp) in self.components.iter().enumerate() {
            let row = comp.grad_block(layout, i, x);
            g.row_mut(k).copy_from(&row.transpose());
        }
        g
    }

    /// Weighted gradient `Σ_k σ_k ∇_{x_i} Λ_k(x)` without forming the matrix.
    pub fn weighted_grad_wrt(
        &self,
        layout: &ProfileLayout,
        i: usize,
        x: &DVector<f64>,
        sigma: &DVector<f64>,
    ) -> DVector<f64> {
        let mut acc = DVector::zeros(layout.dim_of(i));
        for (k, comp) in self.components.iter().enumerate() {
            if sigma[k] != 0.0 {
                acc += comp.grad_block(layout, i, x) * sigma[k];
            }
        }
        acc
    }

    /// Constant Hessian of component `k` with respect to block `i`.
    pub fn hessian_wrt(&self, layout: &ProfileLayout, i: usize, k: usize) -> Result<DMatrix<f64>> {
        let comp = self
            .components
            .get(k)
            .ok_or_else(|| Error::IndexOutOfRange(format!("component {k} of {}", self.len())))?;
        Ok(comp.hessian_block(layout, i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout2() -> ProfileLayout {
        ProfileLayout::new(vec![2, 2])
    }

    /// `‖x_1 − x_2‖² − d` as a stacked quadratic.
    fn distance_component(layout: &ProfileLayout, d: f64) -> QuadraticComponent {
        let total = layout.total();
        let mut q = DMatrix::zeros(total, total);
        for r in 0..2 {
            q[(r, r)] = 1.0;
            q[(2 + r, 2 + r)] = 1.0;
            q[(r, 2 + r)] = -1.0;
            q[(2 + r, r)] = -1.0;
        }
        QuadraticComponent::new(q, DVector::zeros(total), -d)
    }

    #[test]
    fn sensor_component_evaluates() {
        let layout = layout2();
        let comp = distance_component(&layout, 5.0);
        let x = DVector::from_vec(vec![0.0, 0.0, 3.0, 4.0]);
        assert!((comp.eval(&x) - 20.0).abs() < 1e-14);
    }

    #[test]
    fn constant_component() {
        let comp = QuadraticComponent::constant(4, 7.0);
        let x = DVector::from_vec(vec![1.0, -2.0, 0.5, 3.0]);
        assert_eq!(comp.eval(&x), 7.0);
    }

    #[test]
    fn gradient_of_distance_component() {
        let layout = layout2();
        let comp = distance_component(&layout, 5.0);
        let x = DVector::from_vec(vec![0.0, 0.0, 3.0, 4.0]);
        let g = comp.grad_block(&layout, 0, &x);
        assert!((g - DVector::from_vec(vec![-6.0, -8.0])).norm() < 1e-14);
    }

    #[test]
    fn hessian_is_block_constant() {
        let layout = layout2();
        let comp = distance_component(&layout, 5.0);
        let h = comp.hessian_block(&layout, 0);
        assert!((h - DMatrix::identity(2, 2) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn player_form_embedding_matches_direct_eval() {
        let layout = layout2();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 2.0]);
        let b1 = DMatrix::from_row_slice(2, 2, &[0.3, -1.0, 0.7, 0.2]);
        let b = DVector::from_vec(vec![0.1, -0.4]);
        let comp = QuadraticOperator::component_from_player_form(
            &layout,
            0,
            &a,
            &[(1, b1.clone())],
            &b,
            1.5,
        );
        let x = DVector::from_vec(vec![0.4, -1.2, 2.0, 0.3]);
        let xi = layout.block(&x, 0);
        let xj = layout.block(&x, 1);
        let expect = (xi.transpose() * &a * &xi)[(0, 0)]
            + (xi.transpose() * &b1 * &xj)[(0, 0)]
            + b.dot(&xi)
            + 1.5;
        assert!((comp.eval(&x) - expect).abs() < 1e-12);
    }
}
