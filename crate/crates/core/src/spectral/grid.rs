//! The global discretization grid: horizontal Fourier truncation and the
//! per-layer Chebyshev–Gauss–Lobatto vertical collocation.

use nalgebra::DMatrix;

use super::cheb;
use crate::error::{CoreError, Result};

/// Discretization of the two-layer slab Ω = Ω₊ ∪ Ω₋.
///
/// Horizontal modes are truncated to |kᵢ| ≤ `n_h`; the vertical direction
/// uses `n_v_± + 1` Chebyshev–Gauss–Lobatto nodes per layer, mapped to
/// [0, ℓ] and [−b, 0] respectively and stored ascending, so the node x₃ = 0
/// appears in both layers (last node of the lower layer, first of the upper).
#[derive(Debug, Clone)]
pub struct Grid {
    pub l1: f64,
    pub l2: f64,
    pub n_h: usize,
    pub n_v_plus: usize,
    pub n_v_minus: usize,
    pub ell: f64,
    pub b: f64,
    nodes_plus: Vec<f64>,
    nodes_minus: Vec<f64>,
    diff_plus: DMatrix<f64>,
    diff_minus: DMatrix<f64>,
    weights_plus: Vec<f64>,
    weights_minus: Vec<f64>,
}

impl Grid {
    pub fn new(
        l1: f64,
        l2: f64,
        n_h: usize,
        n_v_plus: usize,
        n_v_minus: usize,
        ell: f64,
        b: f64,
    ) -> Result<Self> {
        if !(l1 > 0.0 && l2 > 0.0 && ell > 0.0 && b > 0.0) {
            return Err(CoreError::InvalidParameter(
                "grid lengths L1, L2, ell, b must be positive".into(),
            ));
        }
        if n_h < 4 || n_h % 2 != 0 {
            return Err(CoreError::InvalidParameter(format!(
                "n_h must be even and >= 4, got {n_h}"
            )));
        }
        if n_v_plus < 8 || n_v_minus < 8 {
            return Err(CoreError::InvalidParameter(format!(
                "vertical orders must be >= 8, got ({n_v_plus}, {n_v_minus})"
            )));
        }
        Ok(Self {
            l1,
            l2,
            n_h,
            n_v_plus,
            n_v_minus,
            ell,
            b,
            nodes_plus: cheb::nodes(n_v_plus, 0.0, ell),
            nodes_minus: cheb::nodes(n_v_minus, -b, 0.0),
            diff_plus: cheb::diff_matrix(n_v_plus, 0.0, ell),
            diff_minus: cheb::diff_matrix(n_v_minus, -b, 0.0),
            weights_plus: cheb::clenshaw_curtis(n_v_plus, 0.0, ell),
            weights_minus: cheb::clenshaw_curtis(n_v_minus, -b, 0.0),
        })
    }

    /// Horizontal storage size per direction: 2 N_h + 1, FFT-ordered.
    pub fn m(&self) -> usize {
        2 * self.n_h + 1
    }

    /// Area of the periodic cross-section T² = (2πL₁) × (2πL₂).
    pub fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI.powi(2) * self.l1 * self.l2
    }

    /// Integer mode of a storage index (FFT ordering).
    pub fn k_of(&self, idx: usize) -> i64 {
        let m = self.m() as i64;
        let i = idx as i64;
        if i <= self.n_h as i64 {
            i
        } else {
            i - m
        }
    }

    /// Storage index of an integer mode k with |k| ≤ N_h.
    pub fn index_of(&self, k: i64) -> usize {
        debug_assert!(k.unsigned_abs() as usize <= self.n_h);
        if k >= 0 {
            k as usize
        } else {
            (k + self.m() as i64) as usize
        }
    }

    /// Physical wavenumber ξ = (k₁/L₁, k₂/L₂) of a storage index pair.
    pub fn xi(&self, i1: usize, i2: usize) -> (f64, f64) {
        (
            self.k_of(i1) as f64 / self.l1,
            self.k_of(i2) as f64 / self.l2,
        )
    }

    /// |ξ| of a storage index pair.
    pub fn xi_norm(&self, i1: usize, i2: usize) -> f64 {
        let (a, b) = self.xi(i1, i2);
        a.hypot(b)
    }

    pub fn nodes_plus(&self) -> &[f64] {
        &self.nodes_plus
    }

    pub fn nodes_minus(&self) -> &[f64] {
        &self.nodes_minus
    }

    pub fn diff_plus(&self) -> &DMatrix<f64> {
        &self.diff_plus
    }

    pub fn diff_minus(&self) -> &DMatrix<f64> {
        &self.diff_minus
    }

    pub fn weights_plus(&self) -> &[f64] {
        &self.weights_plus
    }

    pub fn weights_minus(&self) -> &[f64] {
        &self.weights_minus
    }

    /// Padded physical grid size used for dealiased pointwise products.
    /// 4 N_h ≥ 3 N_h + 1 removes all aliasing onto retained modes for
    /// quadratic products.
    pub fn m_pad(&self) -> usize {
        4 * self.n_h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let g = Grid::new(1.0, 2.0, 4, 8, 8, 1.0, 1.0).unwrap();
        for idx in 0..g.m() {
            let k = g.k_of(idx);
            assert_eq!(g.index_of(k), idx);
        }
        assert_eq!(g.k_of(0), 0);
        assert_eq!(g.k_of(4), 4);
        assert_eq!(g.k_of(5), -4);
        assert_eq!(g.k_of(8), -1);
    }

    #[test]
    fn xi_scaling() {
        let g = Grid::new(2.0, 0.5, 4, 8, 8, 1.0, 1.0).unwrap();
        let (x1, x2) = g.xi(g.index_of(2), g.index_of(-1));
        assert_eq!(x1, 1.0);
        assert_eq!(x2, -2.0);
    }

    #[test]
    fn shared_interface_node() {
        let g = Grid::new(1.0, 1.0, 4, 8, 12, 0.7, 1.3).unwrap();
        assert_eq!(*g.nodes_plus().first().unwrap(), 0.0);
        assert_eq!(*g.nodes_minus().last().unwrap(), 0.0);
        assert_eq!(*g.nodes_plus().last().unwrap(), 0.7);
        assert_eq!(*g.nodes_minus().first().unwrap(), -1.3);
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(Grid::new(1.0, 1.0, 3, 8, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(1.0, 1.0, 4, 4, 8, 1.0, 1.0).is_err());
        assert!(Grid::new(1.0, 1.0, 4, 8, 8, 0.0, 1.0).is_err());
    }
}
