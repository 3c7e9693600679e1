//! Semi-implicit (IMEX) time integration: the linearized pencil is treated
//! implicitly per horizontal mode with a cached factorization, the nonlinear
//! families explicitly.
//!
//! With the stacked per-mode unknown x and the pencil (A, B) of the
//! linearized system, the dynamic rows evolve as B ẋ = A x + F and the
//! boundary/constraint rows are algebraic, A x + F = 0. Both schemes keep
//! every algebraic row exactly satisfied at the new time level:
//!
//! * `Imex1` (backward Euler):   (B − Δt A) x₊ = B xₙ + Δt F(xₙ);
//! * `Imex2` (midpoint predictor + Crank–Nicolson corrector, one matrix):
//!   (B − ½Δt A) x⋆ = B xₙ + ½Δt F(xₙ), then with F⋆ = F(x⋆)
//!   dynamic rows (B − ½Δt A) x₊ = (B + ½Δt A) xₙ + Δt F⋆ and algebraic
//!   rows A x₊ + F = 0; the corrector runs twice so the algebraic rows hold
//!   with the forcing re-evaluated at the endpoint (an O(Δt) constraint lag
//!   otherwise dominates the energy-law residual).
//!
//! Only representative modes (k₁ > 0, or k₁ = 0 and k₂ ≥ 0) are solved; the
//! partners follow by conjugation, keeping every physical field real.

use nalgebra::{DVector, Dyn};
use num_complex::Complex64;

use crate::equilibrium::{EquilibriumProfile, PhysicalParams};
use crate::error::{CoreError, Result};
use crate::geometry::{build_theta, GeometryFields, VandermondeCoeffs};
use crate::spectral::fft::HorizontalTransform;
use crate::spectral::{Grid, Layer};
use crate::stability::operator::{assemble_mode_operator, ModeOperator, RowKind};

use super::nonlinear::{nonlinear_terms, NonlinearForcing};
use super::state::FlattenedState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// First-order backward Euler IMEX.
    Imex1,
    /// Second-order predictor/corrector IMEX sharing one factorization.
    Imex2,
}

impl Scheme {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "imex1" => Ok(Self::Imex1),
            "imex2" => Ok(Self::Imex2),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown scheme '{other}', expected imex1 or imex2"
            ))),
        }
    }
}

struct ModeEntry {
    i: usize,
    j: usize,
    /// storage slot of the conjugate partner (−k₁, −k₂)
    pi: usize,
    pj: usize,
    op: ModeOperator,
    lu: nalgebra::LU<Complex64, Dyn, Dyn>,
}

pub struct Stepper {
    pub scheme: Scheme,
    pub dt: f64,
    grid: Grid,
    profile: EquilibriumProfile,
    params: PhysicalParams,
    transform: HorizontalTransform,
    vand: VandermondeCoeffs,
    modes: Vec<ModeEntry>,
    /// velocity at the previous accepted step, for the backward quotient
    /// ∂ₜu inside G² (zero contribution on the first step)
    prev_u: Option<[crate::spectral::VolumeField; 3]>,
}

/// Generous parabolic step-size guard: Δt ≤ c · h²_min / ν_max. The implicit
/// treatment of the stiff terms makes a hard CFL unnecessary; the guard
/// catches order-of-magnitude configuration mistakes.
pub fn validate_dt(dt: f64, cfl_c: f64, grid: &Grid, profile: &EquilibriumProfile, params: &PhysicalParams) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(CoreError::InvalidParameter(format!(
            "time step must be positive and finite, got {dt}"
        )));
    }
    let mut h_min = f64::INFINITY;
    h_min = h_min.min(2.0 * std::f64::consts::PI * grid.l1 / grid.m_pad() as f64);
    h_min = h_min.min(2.0 * std::f64::consts::PI * grid.l2 / grid.m_pad() as f64);
    for nodes in [grid.nodes_plus(), grid.nodes_minus()] {
        for w in nodes.windows(2) {
            h_min = h_min.min((w[1] - w[0]).abs());
        }
    }
    let rho_min = profile.rho_plus(grid.ell).min(profile.rho_minus(0.0));
    let nu_max = (params.mu_plus + params.mu_bulk_plus)
        .max(params.mu_minus + params.mu_bulk_minus)
        / rho_min;
    let dt_max = cfl_c * h_min * h_min / nu_max;
    if dt > dt_max {
        return Err(CoreError::InvalidParameter(format!(
            "time step {dt} exceeds the parabolic guard {dt_max:.6e} \
             (c = {cfl_c}, h_min = {h_min:.6e}, nu_max = {nu_max:.6e})"
        )));
    }
    Ok(())
}

fn is_dynamic(rk: &RowKind) -> bool {
    matches!(
        rk,
        RowKind::Continuity { .. } | RowKind::Momentum { .. } | RowKind::Kinematic { .. }
    )
}

impl Stepper {
    pub fn new(
        scheme: Scheme,
        dt: f64,
        cfl_c: f64,
        profile: &EquilibriumProfile,
        params: &PhysicalParams,
        grid: &Grid,
    ) -> Result<Self> {
        validate_dt(dt, cfl_c, grid, profile, params)?;
        let gamma = match scheme {
            Scheme::Imex1 => dt,
            Scheme::Imex2 => dt / 2.0,
        };
        let nh = grid.n_h as i64;
        let mut modes = Vec::new();
        for k1 in 0..=nh {
            for k2 in -nh..=nh {
                if k1 == 0 && k2 < 0 {
                    continue;
                }
                let op = assemble_mode_operator(k1, k2, profile, params, grid)?;
                let m = &op.b_mat - &op.a_mat * Complex64::new(gamma, 0.0);
                let lu = m.lu();
                modes.push(ModeEntry {
                    i: grid.index_of(k1),
                    j: grid.index_of(k2),
                    pi: grid.index_of(-k1),
                    pj: grid.index_of(-k2),
                    op,
                    lu,
                });
            }
        }
        Ok(Self {
            scheme,
            dt,
            grid: grid.clone(),
            profile: profile.clone(),
            params: *params,
            transform: HorizontalTransform::new(grid),
            vand: VandermondeCoeffs::default_order(),
            modes,
            prev_u: None,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// The explicit forcing stacked to match the pencil's row map, with the
    /// sign conventions of the boundary rows.
    fn forcing_vector(
        &self,
        op: &ModeOperator,
        f: &NonlinearForcing,
        i: usize,
        j: usize,
    ) -> DVector<Complex64> {
        let mut out = DVector::zeros(op.row_map.len());
        for (r, rk) in op.row_map.iter().enumerate() {
            out[r] = match rk {
                RowKind::Continuity { layer, node } => f.g1.layer(*layer)[(i, j, *node)],
                RowKind::Momentum { layer, comp, node } => {
                    f.g2[comp - 1].layer(*layer)[(i, j, *node)]
                }
                RowKind::TopStress { comp } => {
                    let v = f.g3_plus[comp - 1].coeffs[(i, j)];
                    if *comp == 3 {
                        -v
                    } else {
                        v
                    }
                }
                RowKind::JumpStress { comp } => {
                    let v = f.g3_minus[comp - 1].coeffs[(i, j)];
                    if *comp == 3 {
                        v
                    } else {
                        -v
                    }
                }
                RowKind::VelocityContinuity { .. } | RowKind::BottomDirichlet { .. } => {
                    Complex64::default()
                }
                RowKind::Kinematic { top } => {
                    if *top {
                        f.g4_plus.coeffs[(i, j)]
                    } else {
                        f.g4_minus.coeffs[(i, j)]
                    }
                }
                RowKind::MassConstraint { layer } => {
                    let v = match layer {
                        Layer::Plus => f.mass_correction.0,
                        Layer::Minus => f.mass_correction.1,
                    };
                    Complex64::new(v, 0.0)
                }
            };
        }
        out
    }

    fn geometry_and_forcing(
        &self,
        state: &FlattenedState,
        u_t: Option<&[crate::spectral::VolumeField; 3]>,
    ) -> Result<(GeometryFields, NonlinearForcing)> {
        let fields = build_theta(&state.eta_plus, &state.eta_minus, &self.grid, &self.transform)?;
        let report = fields.smallness_check(&self.grid, &self.transform);
        if !report.pass {
            return Err(CoreError::GeometryBreakdown(format!(
                "flattening map left the small-deformation regime: \
                 sup|J-1| = {:.3e}, sup|A| = {:.3e}, sup|B| = {:.3e}, sup|grad eta| = {:.3e}",
                report.sup_j_minus_1, report.sup_a, report.sup_b, report.sup_grad_eta
            )));
        }
        let forcing = nonlinear_terms(
            state,
            &fields,
            &self.profile,
            &self.params,
            &self.grid,
            &self.transform,
            &self.vand,
            u_t,
        )?;
        Ok((fields, forcing))
    }

    /// Backward-Euler-type solve used by both the imex1 step and the imex2
    /// predictor: (B − γA) x₊ = B xₙ + γ F, with γ the implicit weight.
    fn be_like_solve(
        &self,
        state: &FlattenedState,
        forcing: &NonlinearForcing,
        gamma: f64,
        time: f64,
    ) -> Result<FlattenedState> {
        let mut next = FlattenedState::zeros(&self.grid);
        next.time = time;
        for entry in &self.modes {
            let x = state.mode_vector(&self.grid, &entry.op.layout, entry.i, entry.j);
            let fv = self.forcing_vector(&entry.op, forcing, entry.i, entry.j);
            let rhs = &entry.op.b_mat * &x + fv * Complex64::new(gamma, 0.0);
            let sol = entry.lu.solve(&rhs).ok_or_else(|| {
                CoreError::Singular(format!(
                    "implicit solve failed for mode ({}, {})",
                    entry.op.k1, entry.op.k2
                ))
            })?;
            next.set_mode(&self.grid, &entry.op.layout, entry.i, entry.j, &sol);
            if (entry.i, entry.j) != (entry.pi, entry.pj) {
                let conj = sol.map(|c| c.conj());
                next.set_mode(&self.grid, &entry.op.layout, entry.pi, entry.pj, &conj);
            }
        }
        Ok(next)
    }

    /// Crank–Nicolson corrector solve: dynamic rows take
    /// (B − ½Δt A) x₊ = (B + ½Δt A) xₙ + Δt F_dyn, algebraic rows enforce
    /// A x₊ + F_alg = 0.
    fn cn_solve(
        &self,
        state: &FlattenedState,
        f_dyn: &NonlinearForcing,
        f_alg: &NonlinearForcing,
    ) -> Result<FlattenedState> {
        let half = self.dt / 2.0;
        let hdt = Complex64::new(half, 0.0);
        let mut next = FlattenedState::zeros(&self.grid);
        next.time = state.time + self.dt;
        for entry in &self.modes {
            let x = state.mode_vector(&self.grid, &entry.op.layout, entry.i, entry.j);
            let fd = self.forcing_vector(&entry.op, f_dyn, entry.i, entry.j);
            let fa = self.forcing_vector(&entry.op, f_alg, entry.i, entry.j);
            let bx = &entry.op.b_mat * &x;
            let ax = &entry.op.a_mat * &x;
            let mut rhs = DVector::zeros(entry.op.row_map.len());
            for (r, rk) in entry.op.row_map.iter().enumerate() {
                rhs[r] = if is_dynamic(rk) {
                    bx[r] + hdt * ax[r] + fd[r] * Complex64::new(self.dt, 0.0)
                } else {
                    // (−½Δt A) x₊ = ½Δt F_alg, i.e. A x₊ + F_alg = 0
                    hdt * fa[r]
                };
            }
            let sol = entry.lu.solve(&rhs).ok_or_else(|| {
                CoreError::Singular(format!(
                    "corrector solve failed for mode ({}, {})",
                    entry.op.k1, entry.op.k2
                ))
            })?;
            next.set_mode(&self.grid, &entry.op.layout, entry.i, entry.j, &sol);
            if (entry.i, entry.j) != (entry.pi, entry.pj) {
                let conj = sol.map(|c| c.conj());
                next.set_mode(&self.grid, &entry.op.layout, entry.pi, entry.pj, &conj);
            }
        }
        Ok(next)
    }

    /// Advance one step. Rebuilds the flattening geometry from the current
    /// surfaces, halts with `GeometryBreakdown` if the smallness check fails.
    pub fn step(&mut self, state: &FlattenedState) -> Result<FlattenedState> {
        let u_t: Option<[crate::spectral::VolumeField; 3]> = self.prev_u.as_ref().map(|p| {
            [0, 1, 2].map(|c| state.u[c].sub(&p[c]).scaled(1.0 / self.dt))
        });
        let (_fields, f_n) = self.geometry_and_forcing(state, u_t.as_ref())?;
        let next = match self.scheme {
            Scheme::Imex1 => self.be_like_solve(state, &f_n, self.dt, state.time + self.dt)?,
            Scheme::Imex2 => {
                let half = self.dt / 2.0;
                let mid = self.be_like_solve(state, &f_n, half, state.time + half)?;
                // Velocity time derivatives at the stage points. With a
                // previous step available, three-point formulas give
                // second-order accuracy; on the first step fall back to
                // one-sided quotients (a single O(Δt) stage does not affect
                // the asymptotic order of the run).
                let dt = self.dt;
                let u_t_mid: [crate::spectral::VolumeField; 3] = match self.prev_u.as_ref() {
                    Some(p) => [0, 1, 2].map(|c| {
                        // nodes t-Δt, t, t+Δt/2 → derivative at t+Δt/2
                        let mut d = mid.u[c].scaled(8.0 / (3.0 * dt));
                        d.add_assign(&state.u[c].scaled(-3.0 / dt));
                        d.add_assign(&p[c].scaled(1.0 / (3.0 * dt)));
                        d
                    }),
                    None => [0, 1, 2].map(|c| mid.u[c].sub(&state.u[c]).scaled(1.0 / half)),
                };
                let (_fm, f_star) = self.geometry_and_forcing(&mid, Some(&u_t_mid))?;
                // First corrector pass: algebraic rows use the midpoint
                // forcing, an O(Δt) lag in the constraints. The second pass
                // re-evaluates the forcing at the endpoint so the algebraic
                // rows hold with endpoint data, restoring second order.
                let mut next = self.cn_solve(state, &f_star, &f_star)?;
                let u_t_end: [crate::spectral::VolumeField; 3] = match self.prev_u.as_ref() {
                    Some(p) => [0, 1, 2].map(|c| {
                        // uniform nodes t-Δt, t, t+Δt → derivative at t+Δt
                        let mut d = next.u[c].scaled(1.5 / dt);
                        d.add_assign(&state.u[c].scaled(-2.0 / dt));
                        d.add_assign(&p[c].scaled(0.5 / dt));
                        d
                    }),
                    None => [0, 1, 2].map(|c| next.u[c].sub(&state.u[c]).scaled(1.0 / dt)),
                };
                let (_fe, f_end) = self.geometry_and_forcing(&next, Some(&u_t_end))?;
                next = self.cn_solve(state, &f_star, &f_end)?;
                next
            }
        };
        self.prev_u = Some(state.u.clone());
        Ok(next)
    }
}
