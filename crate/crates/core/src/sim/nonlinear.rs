//! Pseudo-spectral evaluation of the nonlinear right-hand sides of the
//! flattened perturbed system. All products are formed pointwise on the
//! padded physical grid and truncated back to the retained modes.
//!
//! The families are, with 𝒜 = [[1,0,−AK],[0,1,−BK],[0,0,K]] and
//! 𝒩 = (−∂₁η, −∂₂η, 1):
//!
//! * G¹ = G^{1,1} + G^{1,2}: transport and geometric corrections to the
//!   continuity equation, including the K∂ₜθ pieces;
//! * G²: inertial, viscous-𝒜, pressure-remainder and gravity corrections to
//!   the momentum equation;
//! * G³± = G^{3,1}± + σ± G^{3,2}±: boundary stress corrections, including
//!   the Taylor remainder ℛ, the 𝒩−e₃ deviations, and the curvature
//!   remainder div_*(((1+|∇_*η|²)^{−1/2}−1)∇_*η);
//! * G⁴ = −u₁∂₁η − u₂∂₂η: surface transport.
//!
//! ∂ₜθ is substituted from the kinematic relation ∂ₜη = u₃ + G⁴ and the
//! surface-extension operator, never finite-differenced in time. The one
//! stored time-difference is ∂ₜu inside G² (quadratic × small), supplied by
//! the caller as a backward quotient.

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;

use crate::equilibrium::{EquilibriumProfile, PhysicalParams};
use crate::error::Result;
use crate::geometry::{
    combine_extensions, poisson_extend_lower, poisson_extend_upper, GeometryFields,
    VandermondeCoeffs,
};
use crate::spectral::fft::HorizontalTransform;
use crate::spectral::{BoundaryLoc, Grid, Layer, Surface, SurfaceField, VolumeField};

use super::remainder::taylor_remainder;
use super::state::FlattenedState;

/// All forcing families at one instant, in spectral representation.
/// `g3_minus` stores G³₋ with the sign convention of the jump condition
/// ⟦P′(ρ̄)q I − S(u)⟧e₃ = (⟦ρ̄⟧gη₋ + σ₋Δ_*η₋)e₃ − G³₋.
pub struct NonlinearForcing {
    pub g1: VolumeField,
    pub g2: [VolumeField; 3],
    pub g3_plus: [SurfaceField; 3],
    pub g3_minus: [SurfaceField; 3],
    pub g4_plus: SurfaceField,
    pub g4_minus: SurfaceField,
    /// ∂ₜθ reconstructed from the kinematic relation (exposed for energy
    /// diagnostics).
    pub theta_t: VolumeField,
    /// Taylor remainder ℛ.
    pub remainder: VolumeField,
    /// Mean-mode quadratic mass terms ∫(q+∂₃ρ̄θ)∂₃θ per unit cross-section,
    /// (plus, minus): the explicit part of the discrete mass constraints.
    pub mass_correction: (f64, f64),
}

fn symm_idx(k: usize, m: usize) -> usize {
    // (0,0)(0,1)(0,2)(1,1)(1,2)(2,2) -> 0..6
    match (k.min(m), k.max(m)) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        (2, 2) => 5,
        _ => unreachable!(),
    }
}

fn d_spec(f: &VolumeField, grid: &Grid, dir: usize) -> VolumeField {
    if dir == 3 {
        f.d_vertical(grid)
    } else {
        f.d_horizontal(grid, dir)
    }
}

fn spec_product(a: &VolumeField, b: &VolumeField, grid: &Grid, t: &HorizontalTransform) -> VolumeField {
    let mut pp = a.to_physical(grid, t, Layer::Plus);
    let mut pm = a.to_physical(grid, t, Layer::Minus);
    pp.zip_mut_with(&b.to_physical(grid, t, Layer::Plus), |x, y| *x *= *y);
    pm.zip_mut_with(&b.to_physical(grid, t, Layer::Minus), |x, y| *x *= *y);
    VolumeField::from_physical(grid, t, &pp, &pm)
}

fn surf_phys(sf: &SurfaceField, t: &HorizontalTransform) -> Array2<f64> {
    t.to_physical(sf.coeffs.view()).mapv(|c| c.re)
}

fn surf_spec(arr: &Array2<f64>, grid: &Grid, t: &HorizontalTransform, s: Surface) -> SurfaceField {
    let c = t.to_spectral(arr.mapv(|v| Complex64::new(v, 0.0)).view());
    let mut out = SurfaceField::zeros(grid, s);
    out.coeffs.assign(&c);
    out
}

/// Everything the volume evaluation needs about one layer, in physical space.
struct LayerPhys {
    q: Array3<f64>,
    dq: [Array3<f64>; 3],
    u: [Array3<f64>; 3],
    /// du[i][k] = ∂_{k+1} u_{i+1}
    du: [[Array3<f64>; 3]; 3],
    /// d2u[i][symm_idx(k,m)] = ∂_{k+1}∂_{m+1} u_{i+1}
    d2u: [[Array3<f64>; 6]; 3],
    theta: Array3<f64>,
    theta_d3: Array3<f64>,
    /// A = ∂₁θ, B = ∂₂θ, K = J⁻¹, AK, BK
    ap: Array3<f64>,
    bp: Array3<f64>,
    kk: Array3<f64>,
    akp: Array3<f64>,
    bkp: Array3<f64>,
    /// ∂ₖ of the spectral fields AK, BK, K
    dak: [Array3<f64>; 3],
    dbk: [Array3<f64>; 3],
    dkk: [Array3<f64>; 3],
    theta_t: Array3<f64>,
    rem: Array3<f64>,
    drem: [Array3<f64>; 3],
    /// ∂₃(ρ̄ u_l)
    d3_rho_u: [Array3<f64>; 3],
    d3_hq: Array3<f64>,
    /// selected derivatives of w_l = ∂₃ρ̄ θ u_l: [∂₁w₁, ∂₃w₁, ∂₂w₂, ∂₃w₂, ∂₃w₃]
    dw: [Array3<f64>; 5],
    ut: [Array3<f64>; 3],
    rho_bar: Vec<f64>,
    d_rho: Vec<f64>,
    d2_rho: Vec<f64>,
    gravity: f64,
    mu: f64,
    gd: f64,
    /// μ′ − 2μ/3, the div u coefficient in the normal stress
    cdev: f64,
}

#[allow(clippy::too_many_arguments)]
fn layer_phys(
    layer: Layer,
    state: &FlattenedState,
    fields: &GeometryFields,
    theta_t: &VolumeField,
    remainder: &VolumeField,
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
    grid: &Grid,
    t: &HorizontalTransform,
    u_t: Option<&[VolumeField; 3]>,
    ak_s: &VolumeField,
    bk_s: &VolumeField,
) -> LayerPhys {
    let ph = |f: &VolumeField| f.to_physical(grid, t, layer);
    let nodes = match layer {
        Layer::Plus => grid.nodes_plus(),
        Layer::Minus => grid.nodes_minus(),
    };
    let (rho_bar, d_rho, d2_rho): (Vec<f64>, Vec<f64>, Vec<f64>) = match layer {
        Layer::Plus => (
            nodes.iter().map(|&x| profile.rho_plus(x)).collect(),
            nodes.iter().map(|&x| profile.d_rho_plus(x)).collect(),
            nodes.iter().map(|&x| profile.d2_rho_plus(x)).collect(),
        ),
        Layer::Minus => (
            nodes.iter().map(|&x| profile.rho_minus(x)).collect(),
            nodes.iter().map(|&x| profile.d_rho_minus(x)).collect(),
            nodes.iter().map(|&x| profile.d2_rho_minus(x)).collect(),
        ),
    };
    let h_prime: Vec<f64> = match layer {
        Layer::Plus => nodes.iter().map(|&x| profile.h_prime_plus(x)).collect(),
        Layer::Minus => nodes.iter().map(|&x| profile.h_prime_minus(x)).collect(),
    };
    let (mu, mu_bulk) = match layer {
        Layer::Plus => (params.mu_plus, params.mu_bulk_plus),
        Layer::Minus => (params.mu_minus, params.mu_bulk_minus),
    };

    // nodewise multiplication by a function of x₃ alone is exact in spectral
    // space (no aliasing)
    let nodewise = |f: &VolumeField, c: &[f64]| -> VolumeField {
        let mut out = f.clone();
        let arr = out.layer_mut(layer);
        for (k, &ck) in c.iter().enumerate() {
            arr.index_axis_mut(Axis(2), k).mapv_inplace(|v| v * ck);
        }
        // zero the other layer: callers only read `layer`
        out
    };

    let dq = [
        ph(&state.q.d_horizontal(grid, 1)),
        ph(&state.q.d_horizontal(grid, 2)),
        ph(&state.q.d_vertical(grid)),
    ];

    let mut du: Vec<[Array3<f64>; 3]> = Vec::with_capacity(3);
    let mut d2u: Vec<[Array3<f64>; 6]> = Vec::with_capacity(3);
    for i in 0..3 {
        let s1 = state.u[i].d_horizontal(grid, 1);
        let s2 = state.u[i].d_horizontal(grid, 2);
        let s3 = state.u[i].d_vertical(grid);
        d2u.push([
            ph(&d_spec(&s1, grid, 1)),
            ph(&d_spec(&s1, grid, 2)),
            ph(&d_spec(&s1, grid, 3)),
            ph(&d_spec(&s2, grid, 2)),
            ph(&d_spec(&s2, grid, 3)),
            ph(&d_spec(&s3, grid, 3)),
        ]);
        du.push([ph(&s1), ph(&s2), ph(&s3)]);
    }
    let du: [[Array3<f64>; 3]; 3] = du.try_into().unwrap();
    let d2u: [[Array3<f64>; 6]; 3] = d2u.try_into().unwrap();

    let dak = [
        ph(&d_spec(ak_s, grid, 1)),
        ph(&d_spec(ak_s, grid, 2)),
        ph(&d_spec(ak_s, grid, 3)),
    ];
    let dbk = [
        ph(&d_spec(bk_s, grid, 1)),
        ph(&d_spec(bk_s, grid, 2)),
        ph(&d_spec(bk_s, grid, 3)),
    ];
    let dkk = [
        ph(&d_spec(&fields.k, grid, 1)),
        ph(&d_spec(&fields.k, grid, 2)),
        ph(&d_spec(&fields.k, grid, 3)),
    ];

    let drem = [
        ph(&d_spec(remainder, grid, 1)),
        ph(&d_spec(remainder, grid, 2)),
        ph(&d_spec(remainder, grid, 3)),
    ];

    let d3_rho_u = [
        ph(&nodewise(&state.u[0], &rho_bar).d_vertical(grid)),
        ph(&nodewise(&state.u[1], &rho_bar).d_vertical(grid)),
        ph(&nodewise(&state.u[2], &rho_bar).d_vertical(grid)),
    ];
    let d3_hq = ph(&nodewise(&state.q, &h_prime).d_vertical(grid));

    // w_l = ∂₃ρ̄ θ u_l, built as a dealiased product then a nodewise scale
    let w = |l: usize| -> VolumeField {
        nodewise(&spec_product(&fields.theta, &state.u[l], grid, t), &d_rho)
    };
    let (w0, w1, w2) = (w(0), w(1), w(2));
    let dw = [
        ph(&d_spec(&w0, grid, 1)),
        ph(&d_spec(&w0, grid, 3)),
        ph(&d_spec(&w1, grid, 2)),
        ph(&d_spec(&w1, grid, 3)),
        ph(&d_spec(&w2, grid, 3)),
    ];

    let zeros = Array3::<f64>::zeros(ph(&state.q).dim());
    let ut = match u_t {
        Some(v) => [ph(&v[0]), ph(&v[1]), ph(&v[2])],
        None => [zeros.clone(), zeros.clone(), zeros],
    };

    LayerPhys {
        q: ph(&state.q),
        dq,
        u: [ph(&state.u[0]), ph(&state.u[1]), ph(&state.u[2])],
        du,
        d2u,
        theta: ph(&fields.theta),
        theta_d3: ph(&fields.theta_d3),
        ap: ph(&fields.a),
        bp: ph(&fields.b),
        kk: ph(&fields.k),
        akp: ph(ak_s),
        bkp: ph(bk_s),
        dak,
        dbk,
        dkk,
        theta_t: ph(theta_t),
        rem: ph(remainder),
        drem,
        d3_rho_u,
        d3_hq,
        dw,
        ut,
        rho_bar,
        d_rho,
        d2_rho,
        gravity: params.g,
        mu,
        gd: mu / 3.0 + mu_bulk,
        cdev: mu_bulk - 2.0 * mu / 3.0,
    }
}

impl LayerPhys {
    /// div_𝒜 u = ∂₁u₁ − AK∂₃u₁ + ∂₂u₂ − BK∂₃u₂ + K∂₃u₃, pointwise.
    fn div_a(&self, p: (usize, usize, usize)) -> f64 {
        self.du[0][0][p] - self.akp[p] * self.du[0][2][p] + self.du[1][1][p]
            - self.bkp[p] * self.du[1][2][p]
            + self.kk[p] * self.du[2][2][p]
    }

    /// Contraction (𝒜 v)ᵢ for a 3-vector v evaluated at a point.
    fn a_contract(&self, v: [f64; 3], p: (usize, usize, usize)) -> [f64; 3] {
        [
            v[0] - self.akp[p] * v[2],
            v[1] - self.bkp[p] * v[2],
            self.kk[p] * v[2],
        ]
    }

    fn g1_at(&self, p: (usize, usize, usize)) -> f64 {
        let k3 = p.2;
        // G^{1,1} = K∂ₜθ ∂₃q − u_l 𝒜_{lk}∂_k q
        let adv = self.u[0][p] * (self.dq[0][p] - self.akp[p] * self.dq[2][p])
            + self.u[1][p] * (self.dq[1][p] - self.bkp[p] * self.dq[2][p])
            + self.u[2][p] * self.kk[p] * self.dq[2][p];
        let g11 = self.kk[p] * self.theta_t[p] * self.dq[2][p] - adv;
        // G^{1,2} = ∂₃²ρ̄ Kθ∂ₜθ − q div_𝒜 u − 𝒜_{lk}∂_k(∂₃ρ̄θu_l)
        //           − (𝒜_{lk}−δ_{lk})∂_k(ρ̄u_l)
        let div_w = self.dw[0][p] - self.akp[p] * self.dw[1][p] + self.dw[2][p]
            - self.bkp[p] * self.dw[3][p]
            + self.kk[p] * self.dw[4][p];
        let a_min_delta = -self.akp[p] * self.d3_rho_u[0][p] - self.bkp[p] * self.d3_rho_u[1][p]
            + (self.kk[p] - 1.0) * self.d3_rho_u[2][p];
        let g12 = self.d2_rho[k3] * self.kk[p] * self.theta[p] * self.theta_t[p]
            - self.q[p] * self.div_a(p)
            - div_w
            - a_min_delta;
        g11 + g12
    }

    fn g2_at(&self, p: (usize, usize, usize)) -> [f64; 3] {
        let k3 = p.2;
        let shift = self.q[p] + self.d_rho[k3] * self.theta[p];
        let rho = self.rho_bar[k3] + shift;

        // T_k = ∂_k(−AK)∂₃u₁ + ∂_k(−BK)∂₃u₂ + ∂_k(K)∂₃u₃
        let t_vec = [0, 1, 2].map(|k| {
            -self.dak[k][p] * self.du[0][2][p] - self.dbk[k][p] * self.du[1][2][p]
                + self.dkk[k][p] * self.du[2][2][p]
        });
        let at = self.a_contract(t_vec, p);

        // V_k = Σ_{lm} 𝒜_{lm}∂_{km}u_l (coefficients not differentiated)
        let v_vec = [0, 1, 2].map(|k| {
            self.d2u[0][symm_idx(0, k)][p] - self.akp[p] * self.d2u[0][symm_idx(2, k)][p]
                + self.d2u[1][symm_idx(1, k)][p]
                - self.bkp[p] * self.d2u[1][symm_idx(2, k)][p]
                + self.kk[p] * self.d2u[2][symm_idx(2, k)][p]
        });
        let av = self.a_contract(v_vec, p);
        let ddiv = [0, 1, 2].map(|i| {
            self.d2u[0][symm_idx(0, i)][p] + self.d2u[1][symm_idx(1, i)][p]
                + self.d2u[2][symm_idx(2, i)][p]
        });

        // coefficient of ∂₃uᵢ in μ𝒜_{lk}∂_k(𝒜_{lm})∂_m uᵢ
        let c1 = -self.dak[0][p] - self.dbk[1][p]
            + self.akp[p] * self.dak[2][p]
            + self.bkp[p] * self.dbk[2][p]
            + self.kk[p] * self.dkk[2][p];
        // (𝒜ᵀ𝒜 − I) second-derivative coefficients
        let m33 = self.kk[p] * self.kk[p] * (1.0 + self.ap[p] * self.ap[p] + self.bp[p] * self.bp[p])
            - 1.0;

        // (𝒜∇θ)ᵢ and (𝒜∇ℛ)ᵢ
        let grad_theta = self.a_contract([self.ap[p], self.bp[p], self.theta_d3[p]], p);
        let grad_rem = self.a_contract([self.drem[0][p], self.drem[1][p], self.drem[2][p]], p);

        // −ρ̄(𝒜ᵢₗ−δᵢₗ)∂ₗ(h′q)
        let press = [
            self.rho_bar[k3] * self.akp[p] * self.d3_hq[p],
            self.rho_bar[k3] * self.bkp[p] * self.d3_hq[p],
            -self.rho_bar[k3] * (self.kk[p] - 1.0) * self.d3_hq[p],
        ];

        let mut out = [0.0; 3];
        for i in 0..3 {
            let adv = self.u[0][p] * (self.du[i][0][p] - self.akp[p] * self.du[i][2][p])
                + self.u[1][p] * (self.du[i][1][p] - self.bkp[p] * self.du[i][2][p])
                + self.u[2][p] * self.kk[p] * self.du[i][2][p];
            let visc2 = -2.0 * self.akp[p] * self.d2u[i][symm_idx(0, 2)][p]
                - 2.0 * self.bkp[p] * self.d2u[i][symm_idx(1, 2)][p]
                + m33 * self.d2u[i][symm_idx(2, 2)][p];
            out[i] = -shift * self.ut[i][p]
                + rho * (self.kk[p] * self.theta_t[p] * self.du[i][2][p] - adv)
                + self.mu * (c1 * self.du[i][2][p] + visc2)
                + self.gd * (at[i] + av[i] - ddiv[i])
                + press[i]
                - grad_rem[i]
                - self.q_shift_gravity(shift, grad_theta, i);
        }
        out
    }

    #[inline]
    fn q_shift_gravity(&self, shift: f64, grad_theta: [f64; 3], i: usize) -> f64 {
        // g(q+∂₃ρ̄θ)(𝒜∇θ)ᵢ appears with a minus sign in G²; the g factor is
        // applied by the caller through `gravity`
        self.gravity * shift * grad_theta[i]
    }
}

/// Inputs for the shared G^{3,1} expression: the plus-surface and the jump
/// version differ only in the coefficient-applied velocity gradients, the
/// sign of the (𝒜₃ₗ−δ₃ₗ) term, and the scalar data.
struct G31Input<'a> {
    /// grad[i][l] = μ∂ₗuᵢ (top) or ⟦μ∂ₗuᵢ⟧ (jump) at the surface
    grad: [[Array2<f64>; 3]; 3],
    /// gd_mat[l][k] = (μ′−2μ/3)∂ₖuₗ, possibly jumped
    gd_mat: [[Array2<f64>; 3]; 3],
    /// 𝒜 entries at the surface (row-major, zero entries included)
    amat: [[Array2<f64>; 3]; 3],
    /// sign of the μ(𝒜₃ₗ−δ₃ₗ)∂ₗuᵢ term (+1 top, −1 jump)
    s2: f64,
    /// −∂₁η, −∂₂η
    n1: &'a Array2<f64>,
    n2: &'a Array2<f64>,
    /// gravity coefficient × η (ρ₁gη₊ or ⟦ρ̄⟧gη₋)
    grav_eta: Array2<f64>,
    /// ℛ trace (or jump)
    rem: Array2<f64>,
    /// P′(ρ̄)q trace (or jump)
    pq: Array2<f64>,
}

fn g31(inp: &G31Input) -> [Array2<f64>; 3] {
    let dim = inp.n1.dim();
    let mut out = [
        Array2::<f64>::zeros(dim),
        Array2::<f64>::zeros(dim),
        Array2::<f64>::zeros(dim),
    ];
    let n = |k: usize, p: (usize, usize)| -> f64 {
        match k {
            0 => inp.n1[p],
            1 => inp.n2[p],
            _ => 1.0,
        }
    };
    for p0 in 0..dim.0 {
        for p1 in 0..dim.1 {
            let p = (p0, p1);
            let a = |i: usize, l: usize| inp.amat[i][l][p];
            let gr = |i: usize, l: usize| inp.grad[i][l][p];
            let gm = |l: usize, k: usize| inp.gd_mat[l][k][p];
            // Σ_{lk} 𝒜_{lk} gd_{lk} and Σ_{lk}(𝒜_{lk}−δ_{lk}) gd_{lk}
            let mut tra = 0.0;
            let mut tra_dev = 0.0;
            for l in 0..3 {
                for k in 0..3 {
                    tra += a(l, k) * gm(l, k);
                    tra_dev += (a(l, k) - if l == k { 1.0 } else { 0.0 }) * gm(l, k);
                }
            }
            for i in 0..3 {
                let mut acc = 0.0;
                // (𝒜ᵢₗ grad_{kl} + 𝒜ₖₗ grad_{il})(𝒩ₖ−δₖ₃): only k = 1,2 survive
                for k in 0..2 {
                    let mut inner = 0.0;
                    for l in 0..3 {
                        inner += a(i, l) * gr(k, l) + a(k, l) * gr(i, l);
                    }
                    acc += inner * n(k, p);
                }
                // (𝒜ᵢₗ−δᵢₗ)grad_{3l} ± (𝒜₃ₗ−δ₃ₗ)grad_{il}
                for l in 0..3 {
                    let d_il = if i == l { 1.0 } else { 0.0 };
                    let d_3l = if l == 2 { 1.0 } else { 0.0 };
                    acc += (a(i, l) - d_il) * gr(2, l) + inp.s2 * (a(2, l) - d_3l) * gr(i, l);
                }
                let ni_dev = if i == 2 { 0.0 } else { n(i, p) };
                let di3 = if i == 2 { 1.0 } else { 0.0 };
                let ni = if i == 2 { 1.0 } else { n(i, p) };
                acc += tra * ni_dev + tra_dev * di3;
                acc += inp.grav_eta[p] * ni_dev;
                acc += -inp.rem[p] * ni + inp.pq[p] * (di3 - ni);
                out[i][p] += acc;
            }
        }
    }
    out
}

/// Curvature remainder G^{3,2} with its surface-dependent overall sign
/// (−1 on Σ₊, +1 on Σ₋ by the orientation convention of the two surfaces).
fn g32(
    eta: &SurfaceField,
    grid: &Grid,
    t: &HorizontalTransform,
    sign: f64,
) -> [Array2<f64>; 3] {
    let e1 = surf_phys(&eta.d_horizontal(grid, 1), t);
    let e2 = surf_phys(&eta.d_horizontal(grid, 2), t);
    let lap = surf_phys(&eta.laplace_h(grid), t);
    let dim = e1.dim();
    // w = (1+|∇η|²)^{−1/2} − 1 (quadratically small)
    let mut v1 = Array2::<f64>::zeros(dim);
    let mut v2 = Array2::<f64>::zeros(dim);
    for p0 in 0..dim.0 {
        for p1 in 0..dim.1 {
            let p = (p0, p1);
            let w = (1.0 + e1[p] * e1[p] + e2[p] * e2[p]).powf(-0.5) - 1.0;
            v1[p] = w * e1[p];
            v2[p] = w * e2[p];
        }
    }
    let sv1 = surf_spec(&v1, grid, t, eta.surface);
    let sv2 = surf_spec(&v2, grid, t, eta.surface);
    let mut div = sv1.d_horizontal(grid, 1);
    div.add_assign(&sv2.d_horizontal(grid, 2));
    let divp = surf_phys(&div, t);

    let mut out = [
        Array2::<f64>::zeros(dim),
        Array2::<f64>::zeros(dim),
        Array2::<f64>::zeros(dim),
    ];
    for p0 in 0..dim.0 {
        for p1 in 0..dim.1 {
            let p = (p0, p1);
            let nvec = [-e1[p], -e2[p], 1.0];
            for i in 0..3 {
                let ndev = if i == 2 { 0.0 } else { nvec[i] };
                out[i][p] = sign * (lap[p] * ndev + divp[p] * nvec[i]);
            }
        }
    }
    out
}

/// Slice a physical volume array at a vertical node.
fn slab(arr: &Array3<f64>, k: usize) -> Array2<f64> {
    arr.index_axis(Axis(2), k).to_owned()
}

/// G⁴± = −u₁∂₁η − u₂∂₂η, using the relevant velocity trace at each surface.
pub fn surface_transport(
    state: &FlattenedState,
    grid: &Grid,
    t: &HorizontalTransform,
) -> (SurfaceField, SurfaceField) {
    let mp = grid.m_pad();
    let e1p = surf_phys(&state.eta_plus.d_horizontal(grid, 1), t);
    let e2p = surf_phys(&state.eta_plus.d_horizontal(grid, 2), t);
    let e1m = surf_phys(&state.eta_minus.d_horizontal(grid, 1), t);
    let e2m = surf_phys(&state.eta_minus.d_horizontal(grid, 2), t);

    let u1_top = surf_phys(&state.u[0].trace(grid, BoundaryLoc::SigmaPlus), t);
    let u2_top = surf_phys(&state.u[1].trace(grid, BoundaryLoc::SigmaPlus), t);
    let u1_if = surf_phys(&state.u[0].trace(grid, BoundaryLoc::SigmaMinusBelow), t);
    let u2_if = surf_phys(&state.u[1].trace(grid, BoundaryLoc::SigmaMinusBelow), t);

    let mut g4p_phys = Array2::<f64>::zeros((mp, mp));
    let mut g4m_phys = Array2::<f64>::zeros((mp, mp));
    for p0 in 0..mp {
        for p1 in 0..mp {
            let p = (p0, p1);
            g4p_phys[p] = -u1_top[p] * e1p[p] - u2_top[p] * e2p[p];
            g4m_phys[p] = -u1_if[p] * e1m[p] - u2_if[p] * e2m[p];
        }
    }
    (
        surf_spec(&g4p_phys, grid, t, Surface::Plus),
        surf_spec(&g4m_phys, grid, t, Surface::Minus),
    )
}

/// ∂ₜη± from the kinematic relation ∂ₜη = u₃|_Σ + G⁴ (no time history).
pub fn kinematic_eta_t(
    state: &FlattenedState,
    grid: &Grid,
    t: &HorizontalTransform,
) -> (SurfaceField, SurfaceField) {
    let (g4p, g4m) = surface_transport(state, grid, t);
    let mut etp = state.u[2].trace(grid, BoundaryLoc::SigmaPlus);
    etp.add_assign(&g4p);
    let mut etm = state.u[2].trace(grid, BoundaryLoc::SigmaMinusBelow);
    etm.add_assign(&g4m);
    (etp, etm)
}

#[allow(clippy::too_many_arguments)]
pub fn nonlinear_terms(
    state: &FlattenedState,
    fields: &GeometryFields,
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
    grid: &Grid,
    transform: &HorizontalTransform,
    vand: &VandermondeCoeffs,
    u_t: Option<&[VolumeField; 3]>,
) -> Result<NonlinearForcing> {
    let t = transform;
    let mp = grid.m_pad();
    let top_p = grid.n_v_plus;
    let top_m = grid.n_v_minus;

    // --- G⁴ and the kinematic time derivatives of the surfaces
    let e1p = surf_phys(&state.eta_plus.d_horizontal(grid, 1), t);
    let e2p = surf_phys(&state.eta_plus.d_horizontal(grid, 2), t);
    let e1m = surf_phys(&state.eta_minus.d_horizontal(grid, 1), t);
    let e2m = surf_phys(&state.eta_minus.d_horizontal(grid, 2), t);

    let (g4_plus, g4_minus) = surface_transport(state, grid, t);
    let mut eta_plus_t = state.u[2].trace(grid, BoundaryLoc::SigmaPlus);
    eta_plus_t.add_assign(&g4_plus);
    let mut eta_minus_t = state.u[2].trace(grid, BoundaryLoc::SigmaMinusBelow);
    eta_minus_t.add_assign(&g4_minus);

    let theta_t = combine_extensions(
        &poisson_extend_upper(&eta_plus_t, grid),
        &poisson_extend_lower(&eta_minus_t, vand, grid),
        grid,
    );

    // --- Taylor remainder and the derived 𝒜-products
    let remainder = taylor_remainder(&state.q, &fields.theta, grid, t, profile)?;
    let ak_s = spec_product(&fields.a, &fields.k, grid, t);
    let bk_s = spec_product(&fields.b, &fields.k, grid, t);

    // --- volume terms per layer
    let mut g1 = VolumeField::zeros(grid);
    let mut g2 = [
        VolumeField::zeros(grid),
        VolumeField::zeros(grid),
        VolumeField::zeros(grid),
    ];
    let mut lp_opt = None;
    let mut lm_opt = None;
    for layer in [Layer::Plus, Layer::Minus] {
        let ctx = layer_phys(
            layer, state, fields, &theta_t, &remainder, profile, params, grid, t, u_t, &ak_s,
            &bk_s,
        );
        let nv = match layer {
            Layer::Plus => top_p,
            Layer::Minus => top_m,
        };
        let mut g1_phys = Array3::<f64>::zeros((mp, mp, nv + 1));
        let mut g2_phys = [
            Array3::<f64>::zeros((mp, mp, nv + 1)),
            Array3::<f64>::zeros((mp, mp, nv + 1)),
            Array3::<f64>::zeros((mp, mp, nv + 1)),
        ];
        for p0 in 0..mp {
            for p1 in 0..mp {
                for k in 0..=nv {
                    let p = (p0, p1, k);
                    g1_phys[p] = ctx.g1_at(p);
                    let v = ctx.g2_at(p);
                    for i in 0..3 {
                        g2_phys[i][p] = v[i];
                    }
                }
            }
        }
        let zero_other = Array3::<f64>::zeros(match layer {
            Layer::Plus => (mp, mp, top_m + 1),
            Layer::Minus => (mp, mp, top_p + 1),
        });
        let assemble = |phys: &Array3<f64>| match layer {
            Layer::Plus => VolumeField::from_physical(grid, t, phys, &zero_other),
            Layer::Minus => VolumeField::from_physical(grid, t, &zero_other, phys),
        };
        g1.add_assign(&assemble(&g1_phys));
        for i in 0..3 {
            g2[i].add_assign(&assemble(&g2_phys[i]));
        }
        match layer {
            Layer::Plus => lp_opt = Some(ctx),
            Layer::Minus => lm_opt = Some(ctx),
        }
    }
    let lp = lp_opt.expect("plus layer computed");
    let lm = lm_opt.expect("minus layer computed");

    // --- surface terms
    let const2 = |v: f64| Array2::<f64>::from_elem((mp, mp), v);
    let amat_at = |ctx: &LayerPhys, node: usize| -> [[Array2<f64>; 3]; 3] {
        [
            [const2(1.0), const2(0.0), slab(&ctx.akp, node).mapv(|v| -v)],
            [const2(0.0), const2(1.0), slab(&ctx.bkp, node).mapv(|v| -v)],
            [const2(0.0), const2(0.0), slab(&ctx.kk, node)],
        ]
    };

    // Σ₊: grads weighted by μ₊ (and (μ′₊ − 2μ₊/3))
    let n1p = e1p.mapv(|v| -v);
    let n2p = e2p.mapv(|v| -v);
    let grad_top: [[Array2<f64>; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|l| slab(&lp.du[i][l], top_p).mapv(|v| lp.mu * v))
    });
    let gd_top: [[Array2<f64>; 3]; 3] = std::array::from_fn(|l| {
        std::array::from_fn(|k| slab(&lp.du[l][k], top_p).mapv(|v| lp.cdev * v))
    });
    let eta_p_phys = surf_phys(&state.eta_plus, t);
    let p_prime_top = profile.p_prime_plus(grid.ell);
    let inp_top = G31Input {
        grad: grad_top,
        gd_mat: gd_top,
        amat: amat_at(&lp, top_p),
        s2: 1.0,
        n1: &n1p,
        n2: &n2p,
        grav_eta: eta_p_phys.mapv(|v| profile.rho1 * params.g * v),
        rem: slab(&lp.rem, top_p),
        pq: slab(&lp.q, top_p).mapv(|v| p_prime_top * v),
    };
    let g31_top = g31(&inp_top);
    let g32_top = g32(&state.eta_plus, grid, t, -1.0);
    let g3_plus: [SurfaceField; 3] = std::array::from_fn(|i| {
        let mut arr = g31_top[i].clone();
        arr.zip_mut_with(&g32_top[i], |x, y| *x += params.sigma_plus * *y);
        surf_spec(&arr, grid, t, Surface::Plus)
    });

    // Σ₋: jumped grads ⟦μ∂ₗuᵢ⟧ = μ₊(∂ₗuᵢ)₊|₀ − μ₋(∂ₗuᵢ)₋|top
    let n1m = e1m.mapv(|v| -v);
    let n2m = e2m.mapv(|v| -v);
    let jump2 = |a: &Array2<f64>, ca: f64, b: &Array2<f64>, cb: f64| -> Array2<f64> {
        let mut out = a.mapv(|v| ca * v);
        out.zip_mut_with(b, |x, y| *x -= cb * *y);
        out
    };
    let grad_jump: [[Array2<f64>; 3]; 3] = std::array::from_fn(|i| {
        std::array::from_fn(|l| {
            jump2(
                &slab(&lp.du[i][l], 0),
                lp.mu,
                &slab(&lm.du[i][l], top_m),
                lm.mu,
            )
        })
    });
    let gd_jump: [[Array2<f64>; 3]; 3] = std::array::from_fn(|l| {
        std::array::from_fn(|k| {
            jump2(
                &slab(&lp.du[l][k], 0),
                lp.cdev,
                &slab(&lm.du[l][k], top_m),
                lm.cdev,
            )
        })
    });
    let eta_m_phys = surf_phys(&state.eta_minus, t);
    let pq_jump = jump2(
        &slab(&lp.q, 0),
        profile.p_prime_plus(0.0),
        &slab(&lm.q, top_m),
        profile.p_prime_minus(0.0),
    );
    let rem_jump = jump2(&slab(&lp.rem, 0), 1.0, &slab(&lm.rem, top_m), 1.0);
    let inp_jump = G31Input {
        grad: grad_jump,
        gd_mat: gd_jump,
        amat: amat_at(&lp, 0),
        s2: -1.0,
        n1: &n1m,
        n2: &n2m,
        grav_eta: eta_m_phys.mapv(|v| profile.jump * params.g * v),
        rem: rem_jump,
        pq: pq_jump,
    };
    // the expression defines −G^{3,1}₋, so negate before adding σ₋G^{3,2}₋
    let neg_g31_minus = g31(&inp_jump);
    let g32_minus = g32(&state.eta_minus, grid, t, 1.0);
    let g3_minus: [SurfaceField; 3] = std::array::from_fn(|i| {
        let mut arr = neg_g31_minus[i].mapv(|v| -v);
        arr.zip_mut_with(&g32_minus[i], |x, y| *x += params.sigma_minus * *y);
        surf_spec(&arr, grid, t, Surface::Minus)
    });

    // --- mean-mode quadratic mass terms ∫(q+∂₃ρ̄θ)∂₃θ per unit cross-section
    let mass_term = |ctx: &LayerPhys, weights: &[f64]| -> f64 {
        let dims = ctx.q.dim();
        let mut acc = 0.0;
        for (k, &w) in weights.iter().enumerate() {
            let mut mean = 0.0;
            for p0 in 0..dims.0 {
                for p1 in 0..dims.1 {
                    let p = (p0, p1, k);
                    mean += (ctx.q[p] + ctx.d_rho[k] * ctx.theta[p]) * ctx.theta_d3[p];
                }
            }
            acc += w * mean / (dims.0 * dims.1) as f64;
        }
        acc
    };
    let mass_correction = (
        mass_term(&lp, grid.weights_plus()),
        mass_term(&lm, grid.weights_minus()),
    );

    Ok(NonlinearForcing {
        g1,
        g2,
        g3_plus,
        g3_minus,
        g4_plus,
        g4_minus,
        theta_t,
        remainder,
        mass_correction,
    })
}
