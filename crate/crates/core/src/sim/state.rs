//! The simulated unknowns in flattened coordinates and their per-mode
//! packing into the stacked vectors used by the implicit solves.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::spectral::{Grid, Layer, Surface, SurfaceField, VolumeField};
use crate::stability::operator::Layout;

/// Density perturbation q, velocity u, and surface functions η± at one
/// instant, all in spectral representation.
#[derive(Debug, Clone)]
pub struct FlattenedState {
    pub q: VolumeField,
    /// Velocity components u₁, u₂, u₃.
    pub u: [VolumeField; 3],
    pub eta_plus: SurfaceField,
    pub eta_minus: SurfaceField,
    pub time: f64,
}

impl FlattenedState {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            q: VolumeField::zeros(grid),
            u: [
                VolumeField::zeros(grid),
                VolumeField::zeros(grid),
                VolumeField::zeros(grid),
            ],
            eta_plus: SurfaceField::zeros(grid, Surface::Plus),
            eta_minus: SurfaceField::zeros(grid, Surface::Minus),
            time: 0.0,
        }
    }

    /// Pack the coefficients of horizontal-mode storage slot (i, j) into the
    /// stacked vector [q̂₊, q̂₋, û₁₊, û₁₋, û₂₊, û₂₋, û₃₊, û₃₋, η̂₊, η̂₋].
    pub fn mode_vector(&self, _grid: &Grid, layout: &Layout, i: usize, j: usize) -> DVector<Complex64> {
        let mut x = DVector::zeros(layout.n());
        for (layer, nn) in [(Layer::Plus, layout.np), (Layer::Minus, layout.nm)] {
            let q = self.q.layer(layer);
            for node in 0..nn {
                x[layout.q(layer, node)] = q[(i, j, node)];
            }
            for comp in 1..=3 {
                let u = self.u[comp - 1].layer(layer);
                for node in 0..nn {
                    x[layout.u(comp, layer, node)] = u[(i, j, node)];
                }
            }
        }
        x[layout.eta_plus()] = self.eta_plus.coeffs[(i, j)];
        x[layout.eta_minus()] = self.eta_minus.coeffs[(i, j)];
        x
    }

    /// Scatter a stacked mode vector back into storage slot (i, j).
    pub fn set_mode(
        &mut self,
        grid: &Grid,
        layout: &Layout,
        i: usize,
        j: usize,
        x: &DVector<Complex64>,
    ) {
        let _ = grid;
        for (layer, nn) in [(Layer::Plus, layout.np), (Layer::Minus, layout.nm)] {
            for node in 0..nn {
                self.q.layer_mut(layer)[(i, j, node)] = x[layout.q(layer, node)];
            }
            for comp in 1..=3 {
                for node in 0..nn {
                    self.u[comp - 1].layer_mut(layer)[(i, j, node)] = x[layout.u(comp, layer, node)];
                }
            }
        }
        self.eta_plus.coeffs[(i, j)] = x[layout.eta_plus()];
        self.eta_minus.coeffs[(i, j)] = x[layout.eta_minus()];
    }

    /// Aggregate L² norm of all components (a crude size measure for
    /// fixed-point and convergence tests).
    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        let mut acc = self.q.l2_norm_sq(grid);
        for c in &self.u {
            acc += c.l2_norm_sq(grid);
        }
        let ep = self.eta_plus.sobolev_norm(grid, 0.0);
        let em = self.eta_minus.sobolev_norm(grid, 0.0);
        (acc + ep * ep + em * em).sqrt()
    }

    /// Largest surface-coefficient magnitude (reported as
    /// `max_eta_amplitude` in time series).
    pub fn max_eta_coeff(&self) -> f64 {
        self.eta_plus
            .coeffs
            .iter()
            .chain(self.eta_minus.coeffs.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// Sup over modes and components of |⟦û⟧| at Σ₋ and |û₋| at Σ_b: the
    /// boundary constraints every accepted state must satisfy.
    pub fn boundary_defect(&self, grid: &Grid) -> f64 {
        let mut worst: f64 = 0.0;
        for comp in 0..3 {
            let f = &self.u[comp];
            for i in 0..grid.m() {
                for j in 0..grid.m() {
                    let jump =
                        f.plus[(i, j, 0)] - f.minus[(i, j, grid.n_v_minus)];
                    worst = worst.max(jump.norm());
                    worst = worst.max(f.minus[(i, j, 0)].norm());
                }
            }
        }
        worst
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            q: self.q.sub(&other.q),
            u: [
                self.u[0].sub(&other.u[0]),
                self.u[1].sub(&other.u[1]),
                self.u[2].sub(&other.u[2]),
            ],
            eta_plus: self.eta_plus.sub(&other.eta_plus),
            eta_minus: self.eta_minus.sub(&other.eta_minus),
            time: self.time,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            q: self.q.scaled(factor),
            u: [
                self.u[0].scaled(factor),
                self.u[1].scaled(factor),
                self.u[2].scaled(factor),
            ],
            eta_plus: self.eta_plus.scaled(factor),
            eta_minus: self.eta_minus.scaled(factor),
            time: self.time,
        }
    }
}
