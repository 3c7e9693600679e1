//! Horizontally periodic surface fields (η±, traces, boundary data) stored as
//! truncated Fourier coefficients.

use ndarray::Array2;
use num_complex::Complex64;

use super::fft::HorizontalTransform;
use super::grid::Grid;

/// Which free surface a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    /// Upper boundary Σ₊ = {x₃ = ℓ}.
    Plus,
    /// Internal interface Σ₋ = {x₃ = 0}.
    Minus,
}

/// A scalar field on T², FFT-ordered coefficients of size (2N_h+1)².
#[derive(Debug, Clone)]
pub struct SurfaceField {
    pub coeffs: Array2<Complex64>,
    pub surface: Surface,
}

impl SurfaceField {
    pub fn zeros(grid: &Grid, surface: Surface) -> Self {
        Self {
            coeffs: Array2::zeros((grid.m(), grid.m())),
            surface,
        }
    }

    pub fn get(&self, grid: &Grid, k1: i64, k2: i64) -> Complex64 {
        self.coeffs[(grid.index_of(k1), grid.index_of(k2))]
    }

    pub fn set(&mut self, grid: &Grid, k1: i64, k2: i64, c: Complex64) {
        self.coeffs[(grid.index_of(k1), grid.index_of(k2))] = c;
    }

    /// Add the pair (c at k, conj(c) at −k), keeping the field real-valued.
    /// With c = a/2 this adds a·cos(ξ·x′) for real a.
    pub fn add_real_mode(&mut self, grid: &Grid, k1: i64, k2: i64, c: Complex64) {
        self.coeffs[(grid.index_of(k1), grid.index_of(k2))] += c;
        self.coeffs[(grid.index_of(-k1), grid.index_of(-k2))] += c.conj();
    }

    /// Largest deviation from Hermitian symmetry c_{−k} = conj(c_k).
    pub fn hermitian_defect(&self, grid: &Grid) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                let k1 = grid.k_of(i);
                let k2 = grid.k_of(j);
                let other = self.coeffs[(grid.index_of(-k1), grid.index_of(-k2))];
                worst = worst.max((self.coeffs[(i, j)] - other.conj()).norm());
            }
        }
        worst
    }

    /// Project onto the real-valued (Hermitian-symmetric) subspace.
    pub fn symmetrize(&mut self, grid: &Grid) {
        let old = self.coeffs.clone();
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                let k1 = grid.k_of(i);
                let k2 = grid.k_of(j);
                let other = old[(grid.index_of(-k1), grid.index_of(-k2))];
                self.coeffs[(i, j)] = 0.5 * (old[(i, j)] + other.conj());
            }
        }
    }

    /// Horizontal derivative ∂_dir: multiply mode ξ by iξ_dir.
    pub fn d_horizontal(&self, grid: &Grid, dir: usize) -> Self {
        assert!(dir == 1 || dir == 2);
        let mut out = self.clone();
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                let (x1, x2) = grid.xi(i, j);
                let f = if dir == 1 { x1 } else { x2 };
                out.coeffs[(i, j)] *= Complex64::new(0.0, f);
            }
        }
        out
    }

    /// Horizontal Laplacian Δ_*: multiply by −|ξ|².
    pub fn laplace_h(&self, grid: &Grid) -> Self {
        let mut out = self.clone();
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                let n = grid.xi_norm(i, j);
                out.coeffs[(i, j)] *= -n * n;
            }
        }
        out
    }

    /// ∫_{T²} f = 4π²L₁L₂ · c₀₀ (real part).
    pub fn integral(&self, grid: &Grid) -> f64 {
        grid.area() * self.coeffs[(0, 0)].re
    }

    /// Sobolev norm ‖f‖ₛ = (4π²L₁L₂ Σ (1+|ξ|²)^s |c_ξ|²)^{1/2}; at s = 0
    /// this is the L²(T²) norm by Parseval.
    pub fn sobolev_norm(&self, grid: &Grid, s: f64) -> f64 {
        let mut acc = 0.0;
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                let n = grid.xi_norm(i, j);
                acc += (1.0 + n * n).powf(s) * self.coeffs[(i, j)].norm_sqr();
            }
        }
        (grid.area() * acc).sqrt()
    }

    /// Homogeneous seminorm ‖∇_* f‖₀.
    pub fn grad_norm(&self, grid: &Grid) -> f64 {
        let mut acc = 0.0;
        for i in 0..grid.m() {
            for j in 0..grid.m() {
                let n = grid.xi_norm(i, j);
                acc += n * n * self.coeffs[(i, j)].norm_sqr();
            }
        }
        (grid.area() * acc).sqrt()
    }

    /// Sup-norm estimate by evaluation on the padded physical grid.
    pub fn max_abs(&self, transform: &HorizontalTransform) -> f64 {
        transform
            .to_physical(self.coeffs.view())
            .iter()
            .map(|c| c.re.abs())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            coeffs: self.coeffs.mapv(|c| c * factor),
            surface: self.surface,
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.coeffs.zip_mut_with(&other.coeffs, |a, b| *a += b);
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coeffs: &self.coeffs - &other.coeffs,
            surface: self.surface,
        }
    }
}
