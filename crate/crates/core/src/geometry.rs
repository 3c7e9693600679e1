//! Poisson extensions of the free-surface functions and the flattening
//! coordinate transform with its derived matrix fields.
//!
//! The moving domain is flattened onto the fixed slab by
//! Θ(x) = (x₁, x₂, x₃ + θ), where θ = b̃₁ η̄₊ + b̃₂ η̄₋ combines vertical
//! cut-offs b̃₁, b̃₂ with extensions η̄± of the surface functions:
//!
//! * the upper extension damps each mode by e^{|ξ|(x₃−ℓ)} for x₃ ≤ ℓ;
//! * the lower extension uses e^{|ξ|x₃} below the interface and the
//!   Vandermonde combination Σⱼ αⱼ e^{−|ξ|λⱼx₃} above it, which matches
//!   vertical derivatives across x₃ = 0 up to order m.
//!
//! The Jacobian field J = 1 + ∂₃θ, its inverse K, and the matrix
//! 𝒜 = [[1,0,−AK],[0,1,−BK],[0,0,K]] (A = ∂₁θ, B = ∂₂θ) carry the geometry
//! into the coefficients of the flattened PDE. A smallness check guards the
//! diffeomorphism regime.

use nalgebra::{DMatrix, DVector};
use ndarray::Axis;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::spectral::fft::HorizontalTransform;
use crate::spectral::{Grid, Layer, Surface, SurfaceField, VolumeField};

/// Quintic smoothstep: s(0)=0, s(1)=1, s′ = s″ = 0 at both endpoints.
fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

fn smoothstep_d(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Cut-off b̃₁: 1 at Σ₊, 0 at Σ₋ and Σ_b.
pub fn b_tilde_1(x3: f64, ell: f64) -> f64 {
    if x3 >= 0.0 {
        smoothstep(x3 / ell)
    } else {
        0.0
    }
}

pub fn b_tilde_1_d(x3: f64, ell: f64) -> f64 {
    if x3 >= 0.0 {
        smoothstep_d(x3 / ell) / ell
    } else {
        0.0
    }
}

/// Cut-off b̃₂: 1 at Σ₋, 0 at Σ₊ and Σ_b.
pub fn b_tilde_2(x3: f64, ell: f64, b: f64) -> f64 {
    if x3 >= 0.0 {
        1.0 - smoothstep(x3 / ell)
    } else {
        1.0 - smoothstep(-x3 / b)
    }
}

pub fn b_tilde_2_d(x3: f64, ell: f64, b: f64) -> f64 {
    if x3 >= 0.0 {
        -smoothstep_d(x3 / ell) / ell
    } else {
        smoothstep_d(-x3 / b) / b
    }
}

/// Compensated dot product (fma-based two-product with Neumaier summation);
/// the Vandermonde identities suffer heavy cancellation for larger m and a
/// naive evaluation cannot resolve residuals near 1e-10.
fn dot_compensated(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> f64 {
    let mut s = 0.0f64;
    let mut c = 0.0f64;
    for (x, y) in a.zip(b) {
        let p = x * y;
        let e = x.mul_add(y, -p);
        let t = s + p;
        c += if s.abs() >= p.abs() {
            (s - t) + p
        } else {
            (p - t) + s
        };
        s = t;
        c += e;
    }
    s + c
}

/// Decay rates λⱼ and weights αⱼ of the specialized lower extension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VandermondeCoeffs {
    pub lambdas: Vec<f64>,
    pub alphas: Vec<f64>,
}

/// Solve V(λ) α = (1, …, 1)ᵀ with V_{ij} = (−λⱼ)^i, which makes
/// Σⱼ αⱼ e^{−λⱼ t} match e^{t} in value and the first m derivatives at t = 0.
pub fn vandermonde_coefficients(lambdas: &[f64]) -> Result<VandermondeCoeffs> {
    let n = lambdas.len();
    if n == 0 {
        return Err(CoreError::InvalidParameter("need at least one lambda".into()));
    }
    for w in lambdas.windows(2) {
        if !(w[1] > w[0]) {
            return Err(CoreError::Singular(
                "lambdas must be strictly increasing (repeated values make the Vandermonde matrix singular)"
                    .into(),
            ));
        }
    }
    if !(lambdas[0] > 0.0) {
        return Err(CoreError::InvalidParameter("lambdas must be positive".into()));
    }
    let v = DMatrix::from_fn(n, n, |i, j| (-lambdas[j]).powi(i as i32));
    let rhs = DVector::from_element(n, 1.0);
    let lu = v.clone().lu();
    let mut alphas = lu
        .solve(&rhs)
        .ok_or_else(|| CoreError::Singular("Vandermonde solve failed".into()))?;
    // Iterative refinement with compensated residuals: the matrix is
    // notoriously ill-conditioned for larger m and plain LU leaves residuals
    // above the 1e-10 identity tolerance.
    for _ in 0..4 {
        let r = DVector::from_fn(n, |i, _| {
            1.0 - dot_compensated(
                (0..n).map(|j| v[(i, j)]),
                (0..n).map(|j| alphas[j]),
            )
        });
        if let Some(corr) = lu.solve(&r) {
            alphas += corr;
        }
    }
    let residual = (0..n)
        .map(|i| {
            (1.0 - dot_compensated((0..n).map(|j| v[(i, j)]), (0..n).map(|j| alphas[j]))).abs()
        })
        .fold(0.0f64, f64::max);
    if residual > 1e-10 {
        return Err(CoreError::Singular(format!(
            "Vandermonde residual {residual} exceeds 1e-10; lambdas too clustered"
        )));
    }
    Ok(VandermondeCoeffs {
        lambdas: lambdas.to_vec(),
        alphas: alphas.iter().copied().collect(),
    })
}

impl VandermondeCoeffs {
    /// Default order m = 4 with λⱼ = j + 1.
    pub fn default_order() -> Self {
        vandermonde_coefficients(&[1.0, 2.0, 3.0, 4.0, 5.0]).expect("distinct lambdas")
    }

    /// Largest defect of the identities Σⱼ αⱼ(−λⱼ)^i = 1, i = 0..m,
    /// evaluated with compensated arithmetic.
    pub fn identity_defect(&self) -> f64 {
        let m = self.lambdas.len();
        (0..m)
            .map(|i| {
                let s = dot_compensated(
                    self.alphas.iter().copied(),
                    self.lambdas.iter().map(|l| (-l).powi(i as i32)),
                );
                (s - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Extension of η₊ into x₃ ≤ ℓ (both layers): mode ξ damped by
/// e^{|ξ|(x₃−ℓ)}; the trace at Σ₊ reproduces η₊ exactly.
pub fn poisson_extend_upper(eta_plus: &SurfaceField, grid: &Grid) -> VolumeField {
    debug_assert_eq!(eta_plus.surface, Surface::Plus);
    let mut out = VolumeField::zeros(grid);
    for i in 0..grid.m() {
        for j in 0..grid.m() {
            let xin = grid.xi_norm(i, j);
            let c = eta_plus.coeffs[(i, j)];
            for (k, &x3) in grid.nodes_plus().iter().enumerate() {
                out.plus[(i, j, k)] = c * (xin * (x3 - grid.ell)).exp();
            }
            for (k, &x3) in grid.nodes_minus().iter().enumerate() {
                out.minus[(i, j, k)] = c * (xin * (x3 - grid.ell)).exp();
            }
        }
    }
    out
}

/// Specialized extension of η₋: e^{|ξ|x₃} below the interface and the
/// Vandermonde combination Σⱼ αⱼe^{−|ξ|λⱼx₃} above, matching ∂₃^l across
/// x₃ = 0 for 0 ≤ l ≤ m.
pub fn poisson_extend_lower(
    eta_minus: &SurfaceField,
    coeffs: &VandermondeCoeffs,
    grid: &Grid,
) -> VolumeField {
    debug_assert_eq!(eta_minus.surface, Surface::Minus);
    let mut out = VolumeField::zeros(grid);
    for i in 0..grid.m() {
        for j in 0..grid.m() {
            let xin = grid.xi_norm(i, j);
            let c = eta_minus.coeffs[(i, j)];
            for (k, &x3) in grid.nodes_minus().iter().enumerate() {
                out.minus[(i, j, k)] = c * (xin * x3).exp();
            }
            for (k, &x3) in grid.nodes_plus().iter().enumerate() {
                let s: f64 = coeffs
                    .alphas
                    .iter()
                    .zip(&coeffs.lambdas)
                    .map(|(a, l)| a * (-xin * l * x3).exp())
                    .sum();
                out.plus[(i, j, k)] = c * s;
            }
        }
    }
    out
}

/// Sup-norm deviations controlling the diffeomorphism property.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiffeoReport {
    pub sup_j_minus_1: f64,
    pub sup_a: f64,
    pub sup_b: f64,
    /// max over both surfaces of ‖∇_*η‖_∞ (deviation of 𝒩 from e₃).
    pub sup_grad_eta: f64,
    pub pass: bool,
}

impl DiffeoReport {
    pub fn worst(&self) -> f64 {
        self.sup_j_minus_1
            .max(self.sup_a)
            .max(self.sup_b)
            .max(self.sup_grad_eta)
    }
}

/// The flattening transform and its derived matrix fields.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub eta_plus: SurfaceField,
    pub eta_minus: SurfaceField,
    pub eta_plus_bar: VolumeField,
    pub eta_minus_bar: VolumeField,
    pub theta: VolumeField,
    /// A = ∂₁θ
    pub a: VolumeField,
    /// B = ∂₂θ
    pub b: VolumeField,
    pub theta_d3: VolumeField,
    /// J = 1 + ∂₃θ
    pub j: VolumeField,
    /// K = J⁻¹ (dealiased pointwise inverse)
    pub k: VolumeField,
}

impl GeometryFields {
    /// Horizontal components of the non-unit normal 𝒩 = (−∂₁η, −∂₂η, 1).
    pub fn normal_horizontal(&self, grid: &Grid, surface: Surface) -> (SurfaceField, SurfaceField) {
        let eta = match surface {
            Surface::Plus => &self.eta_plus,
            Surface::Minus => &self.eta_minus,
        };
        (
            eta.d_horizontal(grid, 1).scaled(-1.0),
            eta.d_horizontal(grid, 2).scaled(-1.0),
        )
    }

    /// Sup-norm smallness report per the diffeomorphism criterion: all of
    /// ‖J−1‖_∞, ‖A‖_∞, ‖B‖_∞, ‖∇_*η‖_∞ must stay ≤ 1/2.
    pub fn smallness_check(&self, grid: &Grid, t: &HorizontalTransform) -> DiffeoReport {
        let sup_j_minus_1 = self.theta_d3.max_abs(grid, t);
        let sup_a = self.a.max_abs(grid, t);
        let sup_b = self.b.max_abs(grid, t);
        let mut sup_grad_eta: f64 = 0.0;
        for surface in [Surface::Plus, Surface::Minus] {
            let (n1, n2) = self.normal_horizontal(grid, surface);
            sup_grad_eta = sup_grad_eta.max(n1.max_abs(t)).max(n2.max_abs(t));
        }
        let report = DiffeoReport {
            sup_j_minus_1,
            sup_a,
            sup_b,
            sup_grad_eta,
            pass: false,
        };
        DiffeoReport {
            pass: report.worst() <= 0.5,
            ..report
        }
    }
}

/// Build θ = b̃₁η̄₊ + b̃₂η̄₋ and all derived geometry fields with the default
/// Vandermonde order.
pub fn build_theta(
    eta_plus: &SurfaceField,
    eta_minus: &SurfaceField,
    grid: &Grid,
    transform: &HorizontalTransform,
) -> Result<GeometryFields> {
    build_theta_with(
        eta_plus,
        eta_minus,
        &VandermondeCoeffs::default_order(),
        grid,
        transform,
    )
}

/// Combine already-extended surface functions with the vertical cut-offs:
/// θ = b̃₁ η̄₊ + b̃₂ η̄₋. Also used for ∂ₜθ, feeding it the extensions of ∂ₜη±.
pub fn combine_extensions(
    eta_plus_bar: &VolumeField,
    eta_minus_bar: &VolumeField,
    grid: &Grid,
) -> VolumeField {
    let mut theta = VolumeField::zeros(grid);
    for (k, &x3) in grid.nodes_plus().iter().enumerate() {
        let b1 = b_tilde_1(x3, grid.ell);
        let b2 = b_tilde_2(x3, grid.ell, grid.b);
        let slab = eta_plus_bar.plus.index_axis(Axis(2), k).mapv(|c| c * b1)
            + eta_minus_bar.plus.index_axis(Axis(2), k).mapv(|c| c * b2);
        theta.plus.index_axis_mut(Axis(2), k).assign(&slab);
    }
    for (k, &x3) in grid.nodes_minus().iter().enumerate() {
        let b2 = b_tilde_2(x3, grid.ell, grid.b);
        // b̃₁ ≡ 0 below the interface.
        let slab = eta_minus_bar.minus.index_axis(Axis(2), k).mapv(|c| c * b2);
        theta.minus.index_axis_mut(Axis(2), k).assign(&slab);
    }
    theta
}

pub fn build_theta_with(
    eta_plus: &SurfaceField,
    eta_minus: &SurfaceField,
    vand: &VandermondeCoeffs,
    grid: &Grid,
    transform: &HorizontalTransform,
) -> Result<GeometryFields> {
    let eta_plus_bar = poisson_extend_upper(eta_plus, grid);
    let eta_minus_bar = poisson_extend_lower(eta_minus, vand, grid);
    let theta = combine_extensions(&eta_plus_bar, &eta_minus_bar, grid);

    let a = theta.d_horizontal(grid, 1);
    let b = theta.d_horizontal(grid, 2);
    let theta_d3 = theta.d_vertical(grid);
    let mut j = theta_d3.clone();
    // adding the constant 1 touches only the ξ=0 coefficient at every node
    for kk in 0..=grid.n_v_plus {
        j.plus[(0, 0, kk)] = theta_d3.plus[(0, 0, kk)] + 1.0;
    }
    for kk in 0..=grid.n_v_minus {
        j.minus[(0, 0, kk)] = theta_d3.minus[(0, 0, kk)] + 1.0;
    }

    // K = 1/J computed pointwise in physical space.
    let mut jp = j.to_physical(grid, transform, Layer::Plus);
    let mut jm = j.to_physical(grid, transform, Layer::Minus);
    let min_j = jp
        .iter()
        .chain(jm.iter())
        .fold(f64::INFINITY, |acc, &v| acc.min(v));
    if min_j <= 0.1 {
        return Err(CoreError::GeometryBreakdown(format!(
            "Jacobian J reaches {min_j}; surface amplitude too large for the flattening"
        )));
    }
    jp.mapv_inplace(|v| 1.0 / v);
    jm.mapv_inplace(|v| 1.0 / v);
    let k = VolumeField::from_physical(grid, transform, &jp, &jm);

    Ok(GeometryFields {
        eta_plus: eta_plus.clone(),
        eta_minus: eta_minus.clone(),
        eta_plus_bar,
        eta_minus_bar,
        theta,
        a,
        b,
        theta_d3,
        j,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    use crate::spectral::BoundaryLoc;

    fn grid() -> Grid {
        Grid::new(1.0, 1.0, 4, 16, 16, 1.0, 1.0).unwrap()
    }

    #[test]
    fn vandermonde_hand_examples() {
        // m=1, λ=(1,2): α₀+α₁ = 1, −α₀−2α₁ = 1 → α = (3, −2).
        let c = vandermonde_coefficients(&[1.0, 2.0]).unwrap();
        assert_relative_eq!(c.alphas[0], 3.0, epsilon = 1e-12);
        assert_relative_eq!(c.alphas[1], -2.0, epsilon = 1e-12);
        // m=0: α = (1).
        let c0 = vandermonde_coefficients(&[1.0]).unwrap();
        assert_relative_eq!(c0.alphas[0], 1.0);
        // m=2: moment identities.
        let c2 = vandermonde_coefficients(&[1.0, 2.0, 3.0]).unwrap();
        let s0: f64 = c2.alphas.iter().sum();
        let s1: f64 = c2.alphas.iter().zip(&c2.lambdas).map(|(a, l)| a * l).sum();
        let s2: f64 = c2
            .alphas
            .iter()
            .zip(&c2.lambdas)
            .map(|(a, l)| a * l * l)
            .sum();
        assert_relative_eq!(s0, 1.0, epsilon = 1e-10);
        assert_relative_eq!(s1, -1.0, epsilon = 1e-10);
        assert_relative_eq!(s2, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn vandermonde_identities_up_to_m6() {
        for m in 0..=6usize {
            let lambdas: Vec<f64> = (0..=m).map(|j| (j + 1) as f64).collect();
            let c = vandermonde_coefficients(&lambdas).unwrap();
            assert!(c.identity_defect() < 1e-10, "m={m}: {}", c.identity_defect());
        }
    }

    #[test]
    fn vandermonde_rejects_repeated() {
        assert!(vandermonde_coefficients(&[1.0, 1.0]).is_err());
    }

    #[test]
    fn upper_extension_constant_and_mode() {
        let g = grid();
        let mut eta = SurfaceField::zeros(&g, Surface::Plus);
        eta.set(&g, 0, 0, Complex64::new(2.5, 0.0));
        let ext = poisson_extend_upper(&eta, &g);
        for k in 0..=g.n_v_plus {
            assert_relative_eq!(ext.plus[(0, 0, k)].re, 2.5, epsilon = 1e-14);
        }
        for k in 0..=g.n_v_minus {
            assert_relative_eq!(ext.minus[(0, 0, k)].re, 2.5, epsilon = 1e-14);
        }

        // cos(x₁) mode damped by e^{x₃−1}.
        let mut eta = SurfaceField::zeros(&g, Surface::Plus);
        eta.add_real_mode(&g, 1, 0, Complex64::new(0.5, 0.0));
        let ext = poisson_extend_upper(&eta, &g);
        for (k, &x3) in g.nodes_plus().iter().enumerate() {
            assert_relative_eq!(
                ext.plus[(g.index_of(1), 0, k)].re,
                0.5 * (x3 - 1.0).exp(),
                epsilon = 1e-13
            );
        }
        // trace reproduces η₊ mode-wise
        let tr = ext.trace(&g, crate::spectral::BoundaryLoc::SigmaPlus);
        assert!(tr.sub(&eta).sobolev_norm(&g, 0.0) < 1e-13);
    }

    #[test]
    fn upper_extension_depth_ratio() {
        // |ξ| = 2 at depth 0.5 below Σ₊ → amplitude ratio e^{−1}.
        let g = grid();
        let mut eta = SurfaceField::zeros(&g, Surface::Plus);
        eta.set(&g, 2, 0, Complex64::new(1.0, 0.0));
        let xin = 2.0;
        let x3 = g.ell - 0.5;
        let factor = (xin * (x3 - g.ell)).exp();
        assert_relative_eq!(factor, (-1.0f64).exp(), epsilon = 1e-15);
        // and the field realizes exactly that factor at any node:
        let ext = poisson_extend_upper(&eta, &g);
        for (k, &node) in g.nodes_plus().iter().enumerate() {
            assert_relative_eq!(
                ext.plus[(g.index_of(2), 0, k)].re,
                (xin * (node - g.ell)).exp(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn lower_extension_matching() {
        let g = grid();
        let mut eta = SurfaceField::zeros(&g, Surface::Minus);
        eta.add_real_mode(&g, 1, 0, Complex64::new(0.5, 0.0));
        let vand = vandermonde_coefficients(&[1.0, 2.0]).unwrap(); // m = 1
        let ext = poisson_extend_lower(&eta, &vand, &g);

        // value and first derivative continuous at x₃ = 0
        for field in [ext.clone(), ext.d_vertical(&g)] {
            let jump = field.jump(&g);
            assert!(
                jump.sobolev_norm(&g, 0.0) < 1e-8,
                "jump {}",
                jump.sobolev_norm(&g, 0.0)
            );
        }
        // second derivative mismatch is genuinely nonzero for m = 1:
        // above: Σαⱼλⱼ²|ξ|² = (3−8)|ξ|² = −5|ξ|², below: |ξ|².
        let d2 = ext.d_vertical(&g).d_vertical(&g);
        let jump2 = d2.jump(&g);
        let c = jump2.get(&g, 1, 0);
        assert_relative_eq!(c.re, 0.5 * (-5.0 - 1.0), epsilon = 1e-4);

        // constant η₋ extends to the constant on both sides (Σαⱼ = 1)
        let mut etac = SurfaceField::zeros(&g, Surface::Minus);
        etac.set(&g, 0, 0, Complex64::new(1.3, 0.0));
        let extc = poisson_extend_lower(&etac, &vand, &g);
        for k in 0..=g.n_v_plus {
            assert_relative_eq!(extc.plus[(0, 0, k)].re, 1.3, epsilon = 1e-12);
        }
        for k in 0..=g.n_v_minus {
            assert_relative_eq!(extc.minus[(0, 0, k)].re, 1.3, epsilon = 1e-12);
        }
    }

    #[test]
    fn lower_extension_high_order_matching() {
        let g = Grid::new(1.0, 1.0, 4, 32, 32, 1.0, 1.0).unwrap();
        let mut eta = SurfaceField::zeros(&g, Surface::Minus);
        eta.add_real_mode(&g, 1, 1, Complex64::new(0.5, 0.2));
        let vand = VandermondeCoeffs::default_order(); // m = 4
        let ext = poisson_extend_lower(&eta, &vand, &g);
        let mut field = ext;
        for l in 0..=4 {
            let jump = field.jump(&g).sobolev_norm(&g, 0.0);
            assert!(jump < 1e-6 * 10f64.powi(l), "order {l} jump {jump}");
            field = field.d_vertical(&g);
        }
    }

    #[test]
    fn theta_endpoint_values() {
        let g = grid();
        let t = HorizontalTransform::new(&g);
        let eps = 0.01;
        let mut eta_p = SurfaceField::zeros(&g, Surface::Plus);
        eta_p.add_real_mode(&g, 1, 0, Complex64::new(eps / 2.0, 0.0));
        let eta_m = SurfaceField::zeros(&g, Surface::Minus);
        let fields = build_theta(&eta_p, &eta_m, &g, &t).unwrap();

        let top = fields.theta.trace(&g, BoundaryLoc::SigmaPlus);
        assert_relative_eq!(top.get(&g, 1, 0).re, eps / 2.0, epsilon = 1e-13);
        let mid = fields.theta.trace(&g, BoundaryLoc::SigmaMinusAbove);
        assert!(mid.sobolev_norm(&g, 0.0) < 1e-13);
        let bot = fields.theta.trace(&g, BoundaryLoc::SigmaB);
        assert!(bot.sobolev_norm(&g, 0.0) < 1e-13);
    }

    #[test]
    fn zero_eta_gives_identity_geometry() {
        let g = grid();
        let t = HorizontalTransform::new(&g);
        let eta_p = SurfaceField::zeros(&g, Surface::Plus);
        let eta_m = SurfaceField::zeros(&g, Surface::Minus);
        let f = build_theta(&eta_p, &eta_m, &g, &t).unwrap();
        assert!(f.theta.l2_norm(&g) < 1e-14);
        let ones = VolumeField::from_profiles(&g, |_| 1.0, |_| 1.0);
        assert!(f.j.sub(&ones).l2_norm(&g) < 1e-12);
        assert!(f.k.sub(&ones).l2_norm(&g) < 1e-12);
        let report = f.smallness_check(&g, &t);
        assert!(report.pass);
        assert_eq!(report.worst(), 0.0);
    }

    #[test]
    fn jacobian_matches_analytic_per_mode() {
        let g = Grid::new(1.0, 1.0, 4, 24, 24, 1.0, 1.0).unwrap();
        let t = HorizontalTransform::new(&g);
        let mut eta_p = SurfaceField::zeros(&g, Surface::Plus);
        eta_p.add_real_mode(&g, 1, 0, Complex64::new(0.005, 0.0));
        let mut eta_m = SurfaceField::zeros(&g, Surface::Minus);
        eta_m.add_real_mode(&g, 0, 1, Complex64::new(0.004, 0.0));
        let vand = VandermondeCoeffs::default_order();
        let f = build_theta_with(&eta_p, &eta_m, &vand, &g, &t).unwrap();

        // ∂₃θ per mode = b̃₁′ η̄₊ + b̃₁ ∂₃η̄₊ + b̃₂′ η̄₋ + b̃₂ ∂₃η̄₋ with the
        // analytic exponential derivatives.
        let (i1, i2) = (g.index_of(1), g.index_of(0));
        for (k, &x3) in g.nodes_plus().iter().enumerate() {
            let xin = 1.0;
            let e = 0.005 * (xin * (x3 - g.ell)).exp();
            let de = xin * e;
            let analytic =
                b_tilde_1_d(x3, g.ell) * e + b_tilde_1(x3, g.ell) * de;
            assert_relative_eq!(f.theta_d3.plus[(i1, i2, k)].re, analytic, epsilon = 1e-9);
        }
        // lower-interface mode below the interface
        let (j1, j2) = (g.index_of(0), g.index_of(1));
        for (k, &x3) in g.nodes_minus().iter().enumerate() {
            let xin = 1.0;
            let e = 0.004 * (xin * x3).exp();
            let de = xin * e;
            let analytic = b_tilde_2_d(x3, g.ell, g.b) * e + b_tilde_2(x3, g.ell, g.b) * de;
            assert_relative_eq!(f.theta_d3.minus[(j1, j2, k)].re, analytic, epsilon = 1e-9);
        }
    }

    #[test]
    fn j_times_k_is_one() {
        // K = 1/J is not band-limited; with single-mode data of amplitude a
        // the first truncated term sits at horizontal order n_h + 1, so at
        // n_h = 6 and a = 1e-3 the defect is far below the 1e-12 gate.
        let g = Grid::new(1.0, 1.0, 6, 16, 16, 1.0, 1.0).unwrap();
        let t = HorizontalTransform::new(&g);
        let mut eta_p = SurfaceField::zeros(&g, Surface::Plus);
        eta_p.add_real_mode(&g, 1, 0, Complex64::new(0.001, 0.0));
        let mut eta_m = SurfaceField::zeros(&g, Surface::Minus);
        eta_m.add_real_mode(&g, 1, 1, Complex64::new(0.00075, -0.0005));
        let f = build_theta(&eta_p, &eta_m, &g, &t).unwrap();
        for layer in [Layer::Plus, Layer::Minus] {
            let jp = f.j.to_physical(&g, &t, layer);
            let kp = f.k.to_physical(&g, &t, layer);
            for (a, b) in jp.iter().zip(kp.iter()) {
                assert_relative_eq!(a * b, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn smallness_monotone_in_amplitude() {
        let g = grid();
        let t = HorizontalTransform::new(&g);
        let mut prev = 0.0;
        let mut seen_fail = false;
        for &amp in &[0.01, 0.05, 0.1, 0.2, 0.3] {
            let mut eta_p = SurfaceField::zeros(&g, Surface::Plus);
            eta_p.add_real_mode(&g, 2, 0, Complex64::new(amp / 2.0, 0.0));
            let eta_m = SurfaceField::zeros(&g, Surface::Minus);
            let f = build_theta(&eta_p, &eta_m, &g, &t).unwrap();
            let report = f.smallness_check(&g, &t);
            assert!(report.worst() > prev);
            prev = report.worst();
            if !report.pass {
                seen_fail = true;
            }
        }
        assert!(seen_fail, "largest amplitude should violate the 1/2 bound");
    }
}
