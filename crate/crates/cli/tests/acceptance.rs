//! Acceptance gate: ten end-to-end checks of the solver's quantitative
//! claims, one test per criterion. Each test prints a single
//! `CRITERION n: PASS — …` line once its assertions hold, so a full run
//! (`cargo test --test acceptance -- --nocapture`) yields one verdict line
//! per criterion.

use nalgebra::DVector;
use num_complex::Complex64 as C;

use rtwave_core::analysis::{
    deviatoric_kernel_check, extension_norm_ratio_max, fit_decay, fit_decay_with,
    korn_constant_estimate, DecayModel, KornConstraints,
};
use rtwave_core::equilibrium::{
    build_equilibrium, equilibrium_masses, EquilibriumProfile, PhysicalParams, PressureLaw,
};
use rtwave_core::geometry::vandermonde_coefficients;
use rtwave_core::sim::{
    initial_state_from_modes, run_trajectory, FlattenedState, InitialData, ModeSpec, Scheme,
    SimConfig, Stepper,
};
use rtwave_core::spectral::Grid;
use rtwave_core::stability::{
    assemble_mode_operator, find_neutral_sigma, growth_rate, sharp_poincare_constant,
};

fn params(sigma_plus: f64, sigma_minus: f64) -> PhysicalParams {
    PhysicalParams {
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
        sigma_plus,
        sigma_minus,
    }
}

/// Heavy-over-light reference configuration: ⟦ρ̄⟧ = 1, so σ_c = 1.
fn rt_profile(p: &PhysicalParams) -> EquilibriumProfile {
    let lp = PressureLaw::polytropic(1.0, 2.0);
    let lm = PressureLaw::polytropic(9.0, 2.0);
    build_equilibrium(&lp, &lm, p, 24).unwrap()
}

/// Light-over-heavy configuration: ⟦ρ̄⟧ < 0, stable without surface tension.
fn stable_profile(p: &PhysicalParams) -> EquilibriumProfile {
    let lp = PressureLaw::polytropic(1.0, 2.0);
    let lm = PressureLaw::polytropic(0.25, 2.0);
    build_equilibrium(&lp, &lm, p, 24).unwrap()
}

fn grid(n_v: usize) -> Grid {
    Grid::new(1.0, 1.0, 4, n_v, n_v, 1.0, 1.0).unwrap()
}

fn eta_minus_init(amp: f64) -> InitialData {
    InitialData {
        eta_minus: vec![ModeSpec {
            k1: 1,
            k2: 0,
            re: amp,
            im: 0.0,
        }],
        ..Default::default()
    }
}

fn run(
    profile: &EquilibriumProfile,
    p: &PhysicalParams,
    g: &Grid,
    config: &SimConfig,
    init: &InitialData,
) -> rtwave_core::sim::TrajectoryOutput {
    let s = initial_state_from_modes(g, init);
    run_trajectory(profile, p, g, config, s).unwrap()
}

/// Criterion 1: critical surface tension. For ⟦ρ̄⟧ = 1, g = 1, L₁ = L₂ = 1
/// the neutral tension of the lowest mode must sit within 2% of σ_c = 1 at
/// vertical resolution 64, and σ*(ξ)·|ξ|² must equal ⟦ρ̄⟧g to 2% across the
/// first four modes.
#[test]
fn criterion_01_critical_surface_tension() {
    let p = params(1.0, 0.5);
    let profile = rt_profile(&p);
    assert!((profile.jump - 1.0).abs() < 1e-10, "jump = {}", profile.jump);
    assert!((profile.sigma_c - 1.0).abs() < 1e-10);

    let g64 = grid(64);
    let s_star = find_neutral_sigma(&profile, &p, &g64, 1, 0, (0.05, 3.0)).unwrap();
    let rel = (s_star / profile.sigma_c - 1.0).abs();
    assert!(rel <= 0.02, "sigma* = {s_star}, relative error {rel}");

    let g32 = grid(32);
    let mut worst = 0.0f64;
    for (k1, k2) in [(1i64, 0i64), (0, 1), (1, 1), (2, 0)] {
        let xi_sq = (k1 * k1 + k2 * k2) as f64;
        let predicted = profile.jump * p.g / xi_sq;
        let s = find_neutral_sigma(&profile, &p, &g32, k1, k2, (0.05, 3.0)).unwrap();
        let err = (s / predicted - 1.0).abs();
        assert!(
            err <= 0.02,
            "mode ({k1},{k2}): sigma* = {s}, predicted {predicted}, error {err}"
        );
        worst = worst.max(err);
    }
    println!(
        "CRITERION 1: PASS — sigma* = {s_star:.6} vs sigma_c = 1 (rel {rel:.2e}) at N_v = 64; \
         per-mode law sigma*|xi|^2 = [[rho]]g within {worst:.2e} over 4 modes"
    );
}

/// Criterion 2: the sharp Poincaré constant equals 1/max{L₁², L₂²} exactly
/// (lattice minimum) for three domain shapes including an asymmetric one.
#[test]
fn criterion_02_sharp_poincare_constant() {
    for (l1, l2) in [(1.0, 1.0), (3.0, 2.0), (2.0, 2.0)] {
        let g = Grid::new(l1, l2, 4, 8, 8, 1.0, 1.0).unwrap();
        let expected = 1.0 / l1.max(l2).powi(2);
        let got = sharp_poincare_constant(&g);
        assert!(
            (got - expected).abs() <= 1e-12,
            "(L1, L2) = ({l1}, {l2}): {got} vs {expected}"
        );
    }
    println!(
        "CRITERION 2: PASS — discrete Poincaré constant equals 1/max(L1^2, L2^2) to 1e-12 \
         for (1,1), (3,2), (2,2)"
    );
}

/// Criterion 3: the linear stability table. All nine decidable cells
/// reproduce the predicted verdict from the sign of Re λ_max with margin
/// 1e-6: a negative density jump is stable with and without tension, a
/// positive jump is unstable for σ₋ < σ_c (including zero) and stable for
/// σ₋ > σ_c.
#[test]
fn criterion_03_stability_table() {
    let g = grid(16);
    let modes = [(1i64, 0i64), (0, 1), (1, 1), (2, 0), (2, 1)];
    let max_rate = |profile: &EquilibriumProfile, p: &PhysicalParams| -> f64 {
        modes
            .iter()
            .map(|&(k1, k2)| {
                let op = assemble_mode_operator(k1, k2, profile, p, &g).unwrap();
                growth_rate(&op).unwrap().lambda_max.0
            })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    // (jump sign, sigma_plus, sigma_minus, expected stable); the tensions
    // are either both zero or both positive, matching the admissible set
    let cells: [(i32, f64, f64, bool); 9] = [
        (-1, 0.0, 0.0, true),
        (-1, 1.0, 1.0, true),
        (-1, 0.5, 2.0, true),
        (-1, 2.0, 0.5, true),
        (1, 0.0, 0.0, false),
        (1, 1.0, 0.5, false),
        (1, 0.5, 0.25, false),
        (1, 1.0, 2.0, true),
        (1, 0.5, 3.0, true),
    ];
    for (jump_sign, sp, sm, expect_stable) in cells {
        let p = params(sp, sm);
        let profile = if jump_sign < 0 {
            stable_profile(&p)
        } else {
            rt_profile(&p)
        };
        assert!(profile.jump * jump_sign as f64 > 0.0);
        let rate = max_rate(&profile, &p);
        if expect_stable {
            assert!(
                rate < 1e-6,
                "cell (jump {jump_sign}, sigma ({sp}, {sm})): expected stable, Re lambda = {rate}"
            );
        } else {
            assert!(
                rate > 1e-6,
                "cell (jump {jump_sign}, sigma ({sp}, {sm})): expected unstable, Re lambda = {rate}"
            );
        }
    }
    println!(
        "CRITERION 3: PASS — all 9 stability-table cells reproduced with margin 1e-6 \
         (4 stable jump<0 incl. sigma = 0, 3 unstable jump>0 with sigma_minus < sigma_c incl. \
         sigma = 0, 2 stable with sigma_minus > sigma_c)"
    );
}

/// Criterion 4: per-layer mass conservation. A 1000-step stable run at the
/// default step size keeps the relative drift of each layer mass below 1e-8.
#[test]
fn criterion_04_mass_conservation() {
    let p = params(1.0, 1.0);
    let profile = stable_profile(&p);
    let g = grid(12);
    let config = SimConfig {
        steps: 1000,
        ..Default::default()
    };
    let out = run(&profile, &p, &g, &config, &eta_minus_init(1e-3));
    // the first solve projects the surface-only initial data onto the
    // discrete mass-constraint manifold; drift is measured from there
    let m0 = (out.rows[1].mass_plus, out.rows[1].mass_minus);
    let mut worst = 0.0f64;
    for row in &out.rows[1..] {
        worst = worst
            .max(((row.mass_plus - m0.0) / m0.0).abs())
            .max(((row.mass_minus - m0.1) / m0.1).abs());
    }
    assert!(worst < 1e-8, "relative mass drift {worst}");
    println!(
        "CRITERION 4: PASS — relative mass drift {worst:.2e} < 1e-8 per layer over 1000 steps \
         at dt = 0.01"
    );
}

/// Criterion 5: the energy–dissipation law residual converges at the scheme
/// order: halving dt shrinks it by 2±0.3 (imex1) and 4±0.6 (imex2) across
/// three successive refinements.
#[test]
fn criterion_05_energy_law_convergence() {
    let p = params(1.0, 1.0);
    let profile = stable_profile(&p);
    let g = grid(12);
    // small amplitude keeps the cubic-in-amplitude remainder of the
    // discrete energy balance below the O(dt^p) signal at the finest step
    let init = eta_minus_init(1e-4);
    let res_at = |scheme: Scheme, dt: f64, steps: usize| -> f64 {
        let config = SimConfig {
            scheme,
            dt,
            steps,
            ..Default::default()
        };
        let out = run(&profile, &p, &g, &config, &init);
        out.rows[steps / 2..steps]
            .iter()
            .map(|r| r.residual.abs())
            .fold(0.0, f64::max)
    };
    type Ladder = (Scheme, &'static str, [f64; 4], f64, f64, f64);
    let ladders: [Ladder; 2] = [
        (Scheme::Imex1, "imex1", [0.04, 0.02, 0.01, 0.005], 0.8, 1.7, 2.3),
        (Scheme::Imex2, "imex2", [0.2, 0.1, 0.05, 0.025], 2.0, 3.4, 4.6),
    ];
    for (scheme, name, dts, t_final, lo, hi) in ladders {
        let mut prev: Option<f64> = None;
        let mut ratios = Vec::new();
        for dt in dts {
            let steps = (t_final / dt).round() as usize;
            let r = res_at(scheme, dt, steps);
            if let Some(p) = prev {
                ratios.push(p / r);
            }
            prev = Some(r);
        }
        for (i, ratio) in ratios.iter().enumerate() {
            assert!(
                *ratio > lo && *ratio < hi,
                "{name} refinement {}: residual ratio {ratio} outside [{lo}, {hi}] \
                 (all ratios: {ratios:?})",
                i + 1
            );
        }
        println!(
            "CRITERION 5 ({name}): ratios {:?}",
            ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
        );
    }
    println!(
        "CRITERION 5: PASS — energy-law residual halves by ~2 (imex1) and ~4 (imex2) per dt \
         halving over three refinement levels"
    );
}

/// Criterion 6: decay character. With σ₋ above critical the tier-0 energy
/// surrogate decays exponentially (R² > 0.98); with σ = 0 and a negative
/// jump it is monotone nonincreasing after the transient and the algebraic
/// model fits with a positive exponent.
#[test]
fn criterion_06_decay_character() {
    // exponential regime: heavy-over-light stabilized by sigma_minus = 2 sigma_c
    let p = params(1.0, 2.0);
    let profile = rt_profile(&p);
    let g = grid(12);
    let config = SimConfig {
        dt: 0.125,
        steps: 720,
        ..Default::default()
    };
    let out = run(&profile, &p, &g, &config, &eta_minus_init(1e-4));
    let series: Vec<(f64, f64)> = out.rows.iter().map(|r| (r.t, r.e_sigma)).collect();
    let fit = fit_decay_with(&series, DecayModel::Exponential, 0.3).unwrap();
    assert!(
        fit.r_squared > 0.98,
        "exponential fit R^2 = {} (rate {})",
        fit.r_squared,
        fit.rate
    );
    assert!(fit.rate > 0.0, "expected decay, rate = {}", fit.rate);

    // zero-tension regime: light-over-heavy, sigma = 0
    let p0 = params(0.0, 0.0);
    let profile0 = stable_profile(&p0);
    let config0 = SimConfig {
        dt: 0.05,
        steps: 200,
        ..Default::default()
    };
    let out0 = run(&profile0, &p0, &g, &config0, &eta_minus_init(1e-3));
    let series0: Vec<(f64, f64)> = out0.rows.iter().map(|r| (r.t, r.e_sigma)).collect();
    let start = series0.len() / 5;
    for w in series0[start..].windows(2) {
        assert!(
            w[1].1 <= w[0].1 * (1.0 + 1e-9),
            "surrogate not monotone at t = {}: {} -> {}",
            w[0].0,
            w[0].1,
            w[1].1
        );
    }
    let fit0 = fit_decay(&series0, DecayModel::Algebraic).unwrap();
    assert!(fit0.rate > 0.0, "algebraic exponent {}", fit0.rate);
    println!(
        "CRITERION 6: PASS — exponential fit R^2 = {:.4} (rate {:.2e}) above sigma_c; \
         sigma = 0 surrogate monotone nonincreasing, algebraic exponent {:.2}",
        fit.r_squared, fit.rate, fit0.rate
    );
}

/// Criterion 7: vanishing surface tension. For σ ∈ {0.1, 0.05, 0.025} the
/// terminal-state distance to the σ = 0 run decreases monotonically and the
/// fitted convergence order is positive.
#[test]
fn criterion_07_vanishing_sigma_limit() {
    let g = grid(12);
    let run_at = |sigma: f64| -> FlattenedState {
        let p = params(sigma, sigma);
        let profile = stable_profile(&p);
        let config = SimConfig {
            dt: 0.05,
            steps: 100,
            ..Default::default()
        };
        run(&profile, &p, &g, &config, &eta_minus_init(1e-3)).final_state
    };
    let base = run_at(0.0);
    let sigmas = [0.1, 0.05, 0.025];
    let distances: Vec<f64> = sigmas
        .iter()
        .map(|&s| run_at(s).sub(&base).l2_norm(&g))
        .collect();
    for w in distances.windows(2) {
        assert!(
            w[1] < w[0],
            "terminal distances not monotone: {distances:?}"
        );
    }
    // log-log least squares for the convergence order
    let pts: Vec<(f64, f64)> = sigmas
        .iter()
        .zip(&distances)
        .map(|(&s, &d)| (s.ln(), d.ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let order = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    assert!(order > 0.0, "fitted order {order}");
    println!(
        "CRITERION 7: PASS — distances {:?} decrease monotonically, fitted order p = {order:.2}",
        distances
            .iter()
            .map(|d| format!("{d:.2e}"))
            .collect::<Vec<_>>()
    );
}

/// Criterion 8: linear/nonlinear consistency. Starting from the dominant
/// eigenvector at amplitude 1e-6, the simulated modal rate matches the
/// eigensolver's Re λ_max within 3% for one stable and one unstable
/// configuration.
#[test]
fn criterion_08_linear_nonlinear_consistency() {
    let g = grid(12);
    let fitted_vs_eigen = |profile: &EquilibriumProfile, p: &PhysicalParams| -> (f64, f64) {
        let op = assemble_mode_operator(1, 0, profile, p, &g).unwrap();
        let lambda = growth_rate(&op).unwrap().lambda_max.0;
        // inverse iteration near lambda_max for the dominant eigenvector
        let n = op.row_map.len();
        let shift = C::new(lambda + 1e-6, 0.0);
        let m = &op.a_mat - &op.b_mat * shift;
        let lu = m.lu();
        let mut v = DVector::from_element(n, C::new(1.0, 0.0));
        for _ in 0..30 {
            let w = lu.solve(&(&op.b_mat * &v)).expect("inverse iteration");
            let nrm = w.norm();
            v = w / C::new(nrm, 0.0);
        }
        let v = v * C::new(1e-6, 0.0);

        let dt = 0.05;
        let mut st = Stepper::new(Scheme::Imex2, dt, 1000.0, profile, p, &g).unwrap();
        let mut s = FlattenedState::zeros(&g);
        let (i, j) = (g.index_of(1), g.index_of(0));
        let (pi, pj) = (g.index_of(-1), g.index_of(0));
        s.set_mode(&g, &op.layout, i, j, &v);
        let vc = v.map(|c| c.conj());
        s.set_mode(&g, &op.layout, pi, pj, &vc);

        let steps = 200;
        let mut log_amp = Vec::with_capacity(steps);
        for _ in 0..steps {
            s = st.step(&s).unwrap();
            log_amp.push(s.mode_vector(&g, &op.layout, i, j).norm().ln());
        }
        let start = 20;
        let pts: Vec<(f64, f64)> = (start..steps)
            .map(|k| ((k + 1) as f64 * dt, log_amp[k]))
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        (slope, lambda)
    };

    let p_stable = params(1.0, 1.0);
    let prof_stable = stable_profile(&p_stable);
    let (rate_s, lambda_s) = fitted_vs_eigen(&prof_stable, &p_stable);
    assert!(lambda_s < 0.0);
    let rel_s = ((rate_s - lambda_s) / lambda_s).abs();
    assert!(
        rel_s < 0.03,
        "stable: fitted {rate_s} vs eigenvalue {lambda_s} (rel {rel_s})"
    );

    let p_unstable = params(0.0, 0.0);
    let prof_unstable = rt_profile(&p_unstable);
    let (rate_u, lambda_u) = fitted_vs_eigen(&prof_unstable, &p_unstable);
    assert!(lambda_u > 0.0);
    let rel_u = ((rate_u - lambda_u) / lambda_u).abs();
    assert!(
        rel_u < 0.03,
        "unstable: fitted {rate_u} vs eigenvalue {lambda_u} (rel {rel_u})"
    );
    println!(
        "CRITERION 8: PASS — modal rates match eigensolver: stable {rate_s:.5} vs {lambda_s:.5} \
         (rel {rel_s:.2e}), unstable {rate_u:.5} vs {lambda_u:.5} (rel {rel_u:.2e})"
    );
}

/// Criterion 9: structural checks of the analysis machinery — Vandermonde
/// extension identities, the deviatoric-kernel fields, the constrained Korn
/// minimum, and the Poisson-extension norm ratios.
#[test]
fn criterion_09_structure_checks() {
    // Vandermonde identities up to order 6
    for m in 1..=6usize {
        // order-m extension: m + 1 decay rates matching value and the first
        // m derivatives
        let lambdas: Vec<f64> = (1..=m + 1).map(|j| j as f64).collect();
        let coeffs = vandermonde_coefficients(&lambdas).unwrap();
        let defect = coeffs.identity_defect();
        assert!(defect < 1e-10, "order {m}: identity defect {defect}");
    }

    // kernel fields annihilated by the deviatoric symmetric gradient, and
    // killed uniquely by the bottom boundary condition
    let g = grid(10);
    let report = deviatoric_kernel_check(&g, 7);
    assert!(report.max_defect < 1e-10, "kernel defect {}", report.max_defect);
    assert!(report.unique_zero, "bottom condition left a nonzero kernel field");

    // constrained Korn minimum: strictly positive and resolution-stable
    let k10 = korn_constant_estimate(&Grid::new(1.0, 1.0, 4, 10, 10, 1.0, 1.0).unwrap(), KornConstraints::Full).unwrap();
    let k18 = korn_constant_estimate(&Grid::new(1.0, 1.0, 4, 18, 18, 1.0, 1.0).unwrap(), KornConstraints::Full).unwrap();
    assert!(k10 > 0.0 && k18 > 0.0, "Korn constants {k10}, {k18}");
    let kdiff = ((k18 - k10) / k10).abs();
    assert!(kdiff < 0.10, "Korn constant not resolution-stable: {k10} vs {k18}");

    // Poisson-extension norm ratios bounded over 100 random fields
    let mut worst = 0.0f64;
    for q in 0..=2usize {
        let r = extension_norm_ratio_max(&g, q, 100, 11).unwrap();
        assert!(r.is_finite() && r < 10.0, "extension ratio q = {q}: {r}");
        worst = worst.max(r);
    }
    println!(
        "CRITERION 9: PASS — Vandermonde defects < 1e-10 (m <= 6), kernel defect {:.1e}, \
         Korn minimum {k10:.4} stable to {kdiff:.1} rel at doubled resolution, extension ratios <= {worst:.2}",
        report.max_defect
    );
}

/// Criterion 10: equilibrium formulas. Closed-form polytropic enthalpy
/// agrees with the generic inversion to 1e-10, and the documented example
/// mass M₊ = 5π² is reproduced by both quadrature and the closed
/// pressure-difference formula to 1e-8 relative.
#[test]
fn criterion_10_equilibrium_formulas() {
    let law = PressureLaw::polytropic(1.0, 2.0);
    let rho1 = 1.0;
    let mut worst = 0.0f64;
    for i in 0..=50 {
        let z = 0.5 + 2.0 * i as f64 / 50.0;
        let closed = law.enthalpy_closed_form(rho1, z).unwrap();
        let generic = law.enthalpy(rho1, z).unwrap();
        worst = worst.max((closed - generic).abs());
        // and the inversions agree on the enthalpy value
        let inv_closed = law.enthalpy_inverse(rho1, closed).unwrap();
        let inv_generic = law.enthalpy_inverse_generic(rho1, closed).unwrap();
        worst = worst.max((inv_closed - z).abs()).max((inv_generic - z).abs());
    }
    assert!(worst < 1e-10, "enthalpy closed-form vs generic defect {worst}");

    let p = params(1.0, 1.0);
    let profile = rt_profile(&p);
    let target = 5.0 * std::f64::consts::PI.powi(2);
    let ((quad, closed), _) = equilibrium_masses(&profile, &p).unwrap();
    let e_quad = ((quad - target) / target).abs();
    let e_closed = ((closed - target) / target).abs();
    assert!(e_quad < 1e-8, "quadrature mass {quad} vs 5*pi^2 (rel {e_quad})");
    assert!(e_closed < 1e-8, "closed-form mass {closed} vs 5*pi^2 (rel {e_closed})");
    println!(
        "CRITERION 10: PASS — enthalpy closed form vs generic within {worst:.1e}; \
         M+ = 5*pi^2 via quadrature (rel {e_quad:.1e}) and closed form (rel {e_closed:.1e})"
    );
}
