//! Assembly of the per-wavenumber generalized eigenvalue pencil
//! λ·B·x = A·x for the linearized perturbed system.
//!
//! For a fixed horizontal mode ξ the unknowns are stacked as
//! x = [q̂₊(nodes), q̂₋(nodes), û₁₊, û₁₋, û₂₊, û₂₋, û₃₊, û₃₋, η̂₊, η̂₋]
//! with vertical nodes ascending per layer. The equations are
//!
//! * continuity   ∂ₜq = −div(ρ̄u) at every collocation node;
//! * momentum     ρ̄∂ₜuᵢ = −ρ̄∂ᵢ(h′(ρ̄)q) + μ(∂₃²−|ξ|²)uᵢ + (μ/3+μ′)∂ᵢ(div u)
//!   at interior nodes, with ∇ → (iξ₁, iξ₂, ∂₃);
//! * kinematic    ∂ₜη₊ = u₃₊(ℓ), ∂ₜη₋ = u₃₋(0).
//!
//! Boundary and jump conditions replace the collocation rows adjacent to each
//! boundary (tau method); they are algebraic (zero rows of B):
//!
//! * Σ₊ dynamic:  (P′(ρ̄)q I − S(u))e₃ = (ρ₁g η₊ − σ₊Δ_*η₊)e₃;
//! * Σ₋ jump:     ⟦P′(ρ̄)q I − S(u)⟧e₃ = (⟦ρ̄⟧g η₋ + σ₋Δ_*η₋)e₃ and ⟦u⟧ = 0;
//! * Σ_b:         u₋ = 0,
//!
//! where S(u) = μ𝔻⁰u + μ′(div u)I and 𝔻⁰u = ∇u + ∇uᵀ − (2/3)(div u)I.
//!
//! At ξ = 0 the pencil has marginal mass-redistribution directions; the
//! linearized mean-mass identities ∫q₊ = −ρ₁η₊ + ρ⁺η₋ and ∫q₋ = −ρ⁻η₋
//! (per unit cross-section) can replace one continuity row per layer to
//! remove them.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::equilibrium::{EquilibriumProfile, PhysicalParams};
use crate::error::{CoreError, Result};
use crate::spectral::{Grid, Layer};

/// What a row of the pencil encodes; `node` is the vertical index within the
/// owning layer (ascending).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    Continuity { layer: Layer, node: usize },
    Momentum { layer: Layer, comp: usize, node: usize },
    /// Dynamic boundary condition at Σ₊, one per velocity component.
    TopStress { comp: usize },
    /// ⟦uᵢ⟧ = 0 at Σ₋.
    VelocityContinuity { comp: usize },
    /// Stress-jump condition at Σ₋, one per component.
    JumpStress { comp: usize },
    /// uᵢ₋ = 0 at Σ_b.
    BottomDirichlet { comp: usize },
    /// ∂ₜη = u₃ at the named surface (true = Σ₊).
    Kinematic { top: bool },
    /// Mean-mass identity of the layer (ξ = 0 only).
    MassConstraint { layer: Layer },
}

/// Index layout of the stacked unknown vector.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub np: usize,
    pub nm: usize,
}

impl Layout {
    pub fn n(&self) -> usize {
        4 * (self.np + self.nm) + 2
    }

    /// Column of q̂ at `node` in `layer`.
    pub fn q(&self, layer: Layer, node: usize) -> usize {
        match layer {
            Layer::Plus => node,
            Layer::Minus => self.np + node,
        }
    }

    /// Column of ûᵢ (comp ∈ {1,2,3}) at `node` in `layer`.
    pub fn u(&self, comp: usize, layer: Layer, node: usize) -> usize {
        let base = comp * (self.np + self.nm);
        match layer {
            Layer::Plus => base + node,
            Layer::Minus => base + self.np + node,
        }
    }

    pub fn eta_plus(&self) -> usize {
        4 * (self.np + self.nm)
    }

    pub fn eta_minus(&self) -> usize {
        4 * (self.np + self.nm) + 1
    }
}

/// The assembled pencil for one horizontal mode.
pub struct ModeOperator {
    pub k1: i64,
    pub k2: i64,
    pub xi: (f64, f64),
    pub layout: Layout,
    pub a_mat: DMatrix<Complex64>,
    pub b_mat: DMatrix<Complex64>,
    pub row_map: Vec<RowKind>,
}

struct LayerData {
    nodes: Vec<f64>,
    d: DMatrix<f64>,
    d2: DMatrix<f64>,
    weights: Vec<f64>,
    rho: Vec<f64>,
    h_prime: Vec<f64>,
    mu: f64,
    mu_bulk: f64,
}

fn layer_data(
    grid: &Grid,
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
    layer: Layer,
) -> LayerData {
    let (nodes, d, weights, mu, mu_bulk): (Vec<f64>, DMatrix<f64>, Vec<f64>, f64, f64) =
        match layer {
            Layer::Plus => (
                grid.nodes_plus().to_vec(),
                grid.diff_plus().clone(),
                grid.weights_plus().to_vec(),
                params.mu_plus,
                params.mu_bulk_plus,
            ),
            Layer::Minus => (
                grid.nodes_minus().to_vec(),
                grid.diff_minus().clone(),
                grid.weights_minus().to_vec(),
                params.mu_minus,
                params.mu_bulk_minus,
            ),
        };
    let d2 = &d * &d;
    let (rho, h_prime): (Vec<f64>, Vec<f64>) = nodes
        .iter()
        .map(|&x| match layer {
            Layer::Plus => (profile.rho_plus(x), profile.h_prime_plus(x)),
            Layer::Minus => (profile.rho_minus(x), profile.h_prime_minus(x)),
        })
        .unzip();
    LayerData {
        nodes,
        d,
        d2,
        weights,
        rho,
        h_prime,
        mu,
        mu_bulk,
    }
}

/// Assemble the pencil for integer mode (k₁, k₂). At ξ = 0 the mean-mass
/// identities replace one continuity row per layer.
pub fn assemble_mode_operator(
    k1: i64,
    k2: i64,
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
    grid: &Grid,
) -> Result<ModeOperator> {
    if k1.unsigned_abs() as usize > grid.n_h || k2.unsigned_abs() as usize > grid.n_h {
        return Err(CoreError::InvalidParameter(format!(
            "mode ({k1}, {k2}) outside truncation |k| <= {}",
            grid.n_h
        )));
    }
    let xi = (k1 as f64 / grid.l1, k2 as f64 / grid.l2);
    let xi_sq = xi.0 * xi.0 + xi.1 * xi.1;
    let is_mean = k1 == 0 && k2 == 0;

    let lp = layer_data(grid, profile, params, Layer::Plus);
    let lm = layer_data(grid, profile, params, Layer::Minus);
    let layout = Layout {
        np: lp.nodes.len(),
        nm: lm.nodes.len(),
    };
    let n = layout.n();
    let mut a = DMatrix::<Complex64>::zeros(n, n);
    let mut b = DMatrix::<Complex64>::zeros(n, n);
    let mut row_map: Vec<RowKind> = Vec::with_capacity(n);
    row_map.resize(n, RowKind::Kinematic { top: true });

    let i_xi1 = Complex64::new(0.0, xi.0);
    let i_xi2 = Complex64::new(0.0, xi.1);
    let one = Complex64::new(1.0, 0.0);

    for (layer, ld) in [(Layer::Plus, &lp), (Layer::Minus, &lm)] {
        let nn = ld.nodes.len();
        let top = nn - 1;

        // --- continuity rows: λ q_j = −(iξ₁ρ̄u₁ + iξ₂ρ̄u₂ + D(ρ̄u₃))_j
        for j in 0..nn {
            let row = layout.q(layer, j);
            row_map[row] = RowKind::Continuity { layer, node: j };
            b[(row, row)] = one;
            a[(row, layout.u(1, layer, j))] -= i_xi1 * ld.rho[j];
            a[(row, layout.u(2, layer, j))] -= i_xi2 * ld.rho[j];
            for c in 0..nn {
                a[(row, layout.u(3, layer, c))] -=
                    Complex64::new(ld.d[(j, c)] * ld.rho[c], 0.0);
            }
        }

        // --- interior momentum rows
        for comp in 1..=3 {
            for j in 1..top {
                let row = layout.u(comp, layer, j);
                row_map[row] = RowKind::Momentum {
                    layer,
                    comp,
                    node: j,
                };
                b[(row, row)] = Complex64::new(ld.rho[j], 0.0);

                // pressure term −ρ̄ ∂ᵢ(h′ q)
                match comp {
                    1 => a[(row, layout.q(layer, j))] -= ld.rho[j] * i_xi1 * ld.h_prime[j],
                    2 => a[(row, layout.q(layer, j))] -= ld.rho[j] * i_xi2 * ld.h_prime[j],
                    _ => {
                        for c in 0..nn {
                            a[(row, layout.q(layer, c))] -= Complex64::new(
                                ld.rho[j] * ld.d[(j, c)] * ld.h_prime[c],
                                0.0,
                            );
                        }
                    }
                }

                // viscous Laplacian μ(∂₃² − |ξ|²)uᵢ
                a[(row, layout.u(comp, layer, j))] -= Complex64::new(ld.mu * xi_sq, 0.0);
                for c in 0..nn {
                    a[(row, layout.u(comp, layer, c))] +=
                        Complex64::new(ld.mu * ld.d2[(j, c)], 0.0);
                }

                // (μ/3 + μ′) ∂ᵢ(div u)
                let gd = ld.mu / 3.0 + ld.mu_bulk;
                match comp {
                    1 => {
                        a[(row, layout.u(1, layer, j))] += gd * i_xi1 * i_xi1;
                        a[(row, layout.u(2, layer, j))] += gd * i_xi1 * i_xi2;
                        for c in 0..nn {
                            a[(row, layout.u(3, layer, c))] +=
                                gd * i_xi1 * Complex64::new(ld.d[(j, c)], 0.0);
                        }
                    }
                    2 => {
                        a[(row, layout.u(1, layer, j))] += gd * i_xi2 * i_xi1;
                        a[(row, layout.u(2, layer, j))] += gd * i_xi2 * i_xi2;
                        for c in 0..nn {
                            a[(row, layout.u(3, layer, c))] +=
                                gd * i_xi2 * Complex64::new(ld.d[(j, c)], 0.0);
                        }
                    }
                    _ => {
                        for c in 0..nn {
                            let djc = Complex64::new(ld.d[(j, c)], 0.0);
                            a[(row, layout.u(1, layer, c))] += gd * djc * i_xi1;
                            a[(row, layout.u(2, layer, c))] += gd * djc * i_xi2;
                            a[(row, layout.u(3, layer, c))] +=
                                Complex64::new(gd * ld.d2[(j, c)], 0.0);
                        }
                    }
                }
            }
        }
    }

    // Helper closures for stress entries evaluated at a layer boundary node.
    // Shear component i ∈ {1,2}: S_{i3} = μ(∂₃uᵢ + iξᵢu₃).
    // Normal component: S₃₃ = μ(2∂₃u₃ − (2/3)div u) + μ′ div u.
    let add_shear = |a: &mut DMatrix<Complex64>,
                     row: usize,
                     comp: usize,
                     layer: Layer,
                     ld: &LayerData,
                     node: usize,
                     sign: f64| {
        let nn = ld.nodes.len();
        let ixi = if comp == 1 { i_xi1 } else { i_xi2 };
        for c in 0..nn {
            a[(row, layout.u(comp, layer, c))] +=
                Complex64::new(sign * ld.mu * ld.d[(node, c)], 0.0);
        }
        a[(row, layout.u(3, layer, node))] += sign * ld.mu * ixi;
    };
    let add_normal_stress = |a: &mut DMatrix<Complex64>,
                             row: usize,
                             layer: Layer,
                             ld: &LayerData,
                             node: usize,
                             sign: f64| {
        let nn = ld.nodes.len();
        // P′(ρ̄) q
        let p_prime = ld.h_prime[node] * ld.rho[node];
        a[(row, layout.q(layer, node))] += Complex64::new(sign * p_prime, 0.0);
        // −S₃₃ = −μ(2∂₃u₃ − (2/3)div u) − μ′ div u
        // div u = iξ₁u₁ + iξ₂u₂ + ∂₃u₃
        let cdiv = -ld.mu_bulk + 2.0 * ld.mu / 3.0; // coefficient of div u: −μ′ + 2μ/3
        for c in 0..nn {
            a[(row, layout.u(3, layer, c))] +=
                Complex64::new(sign * (-2.0 * ld.mu + cdiv) * ld.d[(node, c)], 0.0);
        }
        a[(row, layout.u(1, layer, node))] += sign * cdiv * i_xi1;
        a[(row, layout.u(2, layer, node))] += sign * cdiv * i_xi2;
    };

    // --- Σ₊ dynamic boundary rows (replace top plus-layer momentum rows)
    let top_p = layout.np - 1;
    for comp in 1..=2 {
        let row = layout.u(comp, Layer::Plus, top_p);
        row_map[row] = RowKind::TopStress { comp };
        // −S_{i3} = 0 ⇔ μ₊(∂₃uᵢ + iξᵢu₃) = 0
        add_shear(&mut a, row, comp, Layer::Plus, &lp, top_p, 1.0);
    }
    {
        let row = layout.u(3, Layer::Plus, top_p);
        row_map[row] = RowKind::TopStress { comp: 3 };
        // P′q − S₃₃ − (ρ₁g + σ₊|ξ|²)η₊ = 0
        add_normal_stress(&mut a, row, Layer::Plus, &lp, top_p, 1.0);
        a[(row, layout.eta_plus())] -=
            Complex64::new(profile.rho1 * params.g + params.sigma_plus * xi_sq, 0.0);
    }

    // --- Σ₋ velocity continuity (replace bottom plus-layer momentum rows)
    for comp in 1..=3 {
        let row = layout.u(comp, Layer::Plus, 0);
        row_map[row] = RowKind::VelocityContinuity { comp };
        a[(row, layout.u(comp, Layer::Plus, 0))] += one;
        a[(row, layout.u(comp, Layer::Minus, layout.nm - 1))] -= one;
    }

    // --- Σ₋ stress jump (replace top minus-layer momentum rows)
    let if_m = layout.nm - 1;
    for comp in 1..=2 {
        let row = layout.u(comp, Layer::Minus, if_m);
        row_map[row] = RowKind::JumpStress { comp };
        add_shear(&mut a, row, comp, Layer::Plus, &lp, 0, 1.0);
        add_shear(&mut a, row, comp, Layer::Minus, &lm, if_m, -1.0);
    }
    {
        let row = layout.u(3, Layer::Minus, if_m);
        row_map[row] = RowKind::JumpStress { comp: 3 };
        // ⟦P′q − S₃₃⟧ − (⟦ρ̄⟧g − σ₋|ξ|²)η₋ = 0
        add_normal_stress(&mut a, row, Layer::Plus, &lp, 0, 1.0);
        add_normal_stress(&mut a, row, Layer::Minus, &lm, if_m, -1.0);
        a[(row, layout.eta_minus())] -=
            Complex64::new(profile.jump * params.g - params.sigma_minus * xi_sq, 0.0);
    }

    // --- Σ_b Dirichlet (replace bottom minus-layer momentum rows)
    for comp in 1..=3 {
        let row = layout.u(comp, Layer::Minus, 0);
        row_map[row] = RowKind::BottomDirichlet { comp };
        a[(row, layout.u(comp, Layer::Minus, 0))] = one;
    }

    // --- kinematic rows
    {
        let row = layout.eta_plus();
        row_map[row] = RowKind::Kinematic { top: true };
        b[(row, row)] = one;
        a[(row, layout.u(3, Layer::Plus, top_p))] = one;
    }
    {
        let row = layout.eta_minus();
        row_map[row] = RowKind::Kinematic { top: false };
        b[(row, row)] = one;
        a[(row, layout.u(3, Layer::Minus, if_m))] = one;
    }

    // --- ξ = 0: replace one continuity row per layer by the mean-mass
    // identity (algebraic), removing the marginal mass-redistribution pair.
    if is_mean {
        let row = layout.q(Layer::Plus, layout.np - 1);
        row_map[row] = RowKind::MassConstraint { layer: Layer::Plus };
        b.row_mut(row).fill(Complex64::new(0.0, 0.0));
        a.row_mut(row).fill(Complex64::new(0.0, 0.0));
        for (j, w) in lp.weights.iter().enumerate() {
            a[(row, layout.q(Layer::Plus, j))] = Complex64::new(*w, 0.0);
        }
        a[(row, layout.eta_plus())] = Complex64::new(profile.rho1, 0.0);
        a[(row, layout.eta_minus())] = Complex64::new(-profile.rho_plus_iface, 0.0);

        let row = layout.q(Layer::Minus, 0);
        row_map[row] = RowKind::MassConstraint {
            layer: Layer::Minus,
        };
        b.row_mut(row).fill(Complex64::new(0.0, 0.0));
        a.row_mut(row).fill(Complex64::new(0.0, 0.0));
        for (j, w) in lm.weights.iter().enumerate() {
            a[(row, layout.q(Layer::Minus, j))] = Complex64::new(*w, 0.0);
        }
        a[(row, layout.eta_minus())] = Complex64::new(profile.rho_minus_iface, 0.0);
    }

    Ok(ModeOperator {
        k1,
        k2,
        xi,
        layout,
        a_mat: a,
        b_mat: b,
        row_map,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::{build_equilibrium, PressureLaw};

    fn setup() -> (EquilibriumProfile, PhysicalParams, Grid) {
        let params = PhysicalParams {
            g: 1.0,
            p_atm: 1.0,
            ell: 1.0,
            b: 1.0,
            l1: 1.0,
            l2: 1.0,
            mu_plus: 1.0,
            mu_minus: 1.0,
            mu_bulk_plus: 0.0,
            mu_bulk_minus: 0.0,
            sigma_plus: 1.0,
            sigma_minus: 1.0,
        };
        let lp = PressureLaw::polytropic(1.0, 2.0);
        let lm = PressureLaw::polytropic(9.0, 2.0);
        let profile = build_equilibrium(&lp, &lm, &params, 16).unwrap();
        let grid = Grid::new(1.0, 1.0, 4, 16, 16, 1.0, 1.0).unwrap();
        (profile, params, grid)
    }

    #[test]
    fn square_with_documented_algebraic_rows() {
        let (profile, params, grid) = setup();
        let op = assemble_mode_operator(1, 0, &profile, &params, &grid).unwrap();
        let n = op.layout.n();
        assert_eq!(op.a_mat.nrows(), n);
        assert_eq!(op.a_mat.ncols(), n);
        assert_eq!(op.row_map.len(), n);
        // B rows vanish exactly on algebraic rows.
        for (r, kind) in op.row_map.iter().enumerate() {
            let b_row_zero = (0..n).all(|c| op.b_mat[(r, c)].norm() == 0.0);
            let algebraic = matches!(
                kind,
                RowKind::TopStress { .. }
                    | RowKind::VelocityContinuity { .. }
                    | RowKind::JumpStress { .. }
                    | RowKind::BottomDirichlet { .. }
                    | RowKind::MassConstraint { .. }
            );
            assert_eq!(b_row_zero, algebraic, "row {r}: {kind:?}");
        }
    }

    #[test]
    fn mode_outside_truncation_rejected() {
        let (profile, params, grid) = setup();
        assert!(assemble_mode_operator(9, 0, &profile, &params, &grid).is_err());
    }

    #[test]
    fn neutral_null_vector_at_sigma_star() {
        // With u = 0, q = 0 and η₋ ≠ 0 the only nontrivial row is the
        // normal stress jump: (⟦ρ̄⟧g − σ₋|ξ|²)η₋ = 0, so σ₋ = ⟦ρ̄⟧g/|ξ|²
        // makes (0,…,0,η₋) an exact zero-eigenvalue direction of the pencil.
        let (profile, mut params, grid) = setup();
        let xi_sq = 1.0;
        params.sigma_minus = profile.jump * params.g / xi_sq;
        let op = assemble_mode_operator(1, 0, &profile, &params, &grid).unwrap();
        let n = op.layout.n();
        let mut x = nalgebra::DVector::<Complex64>::zeros(n);
        x[op.layout.eta_minus()] = Complex64::new(1.0, 0.0);
        let r = &op.a_mat * &x;
        let worst = (0..n).map(|i| r[i].norm()).fold(0.0f64, f64::max);
        assert!(worst < 1e-12, "residual {worst}");
    }

    #[test]
    fn mean_mode_has_mass_rows() {
        let (profile, params, grid) = setup();
        let op = assemble_mode_operator(0, 0, &profile, &params, &grid).unwrap();
        let count = op
            .row_map
            .iter()
            .filter(|k| matches!(k, RowKind::MassConstraint { .. }))
            .count();
        assert_eq!(count, 2);
    }
}
