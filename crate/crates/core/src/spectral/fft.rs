//! Transforms between the truncated horizontal Fourier representation and a
//! padded physical grid, used for dealiased pointwise products.
//!
//! The padded grid has `m_pad = 4 N_h` points per direction; since
//! m_pad ≥ 3 N_h + 1, quadratic products of band-limited fields are exactly
//! alias-free after truncation back to |k| ≤ N_h.

use std::sync::Arc;

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use super::grid::Grid;

/// Cached FFT plans for horizontal slabs of a fixed grid.
pub struct HorizontalTransform {
    n_h: usize,
    m: usize,
    m_pad: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl HorizontalTransform {
    pub fn new(grid: &Grid) -> Self {
        let m_pad = grid.m_pad();
        let mut planner = FftPlanner::new();
        Self {
            n_h: grid.n_h,
            m: grid.m(),
            m_pad,
            fwd: planner.plan_fft(m_pad, FftDirection::Forward),
            inv: planner.plan_fft(m_pad, FftDirection::Inverse),
        }
    }

    fn pad_index(&self, idx: usize) -> usize {
        // Truncated FFT ordering → padded FFT ordering.
        if idx <= self.n_h {
            idx
        } else {
            idx + self.m_pad - self.m
        }
    }

    fn fft2(&self, mut a: Array2<Complex64>, plan: &Arc<dyn Fft<f64>>) -> Array2<Complex64> {
        for mut row in a.rows_mut() {
            plan.process(row.as_slice_mut().expect("contiguous row"));
        }
        let mut t = a.t().as_standard_layout().into_owned();
        for mut row in t.rows_mut() {
            plan.process(row.as_slice_mut().expect("contiguous row"));
        }
        t.t().as_standard_layout().into_owned()
    }

    /// Synthesize f(x′) = Σ c_k e^{iξ·x′} on the uniform padded grid
    /// x₁ = 2πL₁ p/m_pad, x₂ = 2πL₂ q/m_pad.
    pub fn to_physical(&self, coeffs: ArrayView2<Complex64>) -> Array2<Complex64> {
        debug_assert_eq!(coeffs.dim(), (self.m, self.m));
        let mut padded = Array2::zeros((self.m_pad, self.m_pad));
        for i in 0..self.m {
            for j in 0..self.m {
                padded[(self.pad_index(i), self.pad_index(j))] = coeffs[(i, j)];
            }
        }
        self.fft2(padded, &self.inv)
    }

    /// Analyze physical values back into the truncated coefficient slab.
    pub fn to_spectral(&self, phys: ArrayView2<Complex64>) -> Array2<Complex64> {
        debug_assert_eq!(phys.dim(), (self.m_pad, self.m_pad));
        let scale = 1.0 / (self.m_pad * self.m_pad) as f64;
        let full = self.fft2(phys.to_owned(), &self.fwd);
        let mut out = Array2::zeros((self.m, self.m));
        for i in 0..self.m {
            for j in 0..self.m {
                out[(i, j)] = full[(self.pad_index(i), self.pad_index(j))] * scale;
            }
        }
        out
    }

    /// Dealiased pointwise product of two coefficient slabs.
    pub fn product(
        &self,
        a: ArrayView2<Complex64>,
        b: ArrayView2<Complex64>,
    ) -> Array2<Complex64> {
        let mut pa = self.to_physical(a);
        let pb = self.to_physical(b);
        pa.zip_mut_with(&pb, |x, y| *x *= y);
        self.to_spectral(pa.view())
    }
}
