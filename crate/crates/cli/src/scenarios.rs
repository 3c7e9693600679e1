//! The seven experiment scenarios. Each one validates its configuration,
//! computes everything, and returns the artifacts to write; nothing is
//! persisted here.

use anyhow::{anyhow, bail, Result};
use serde_json::json;

use rtwave_core::analysis::{
    deviatoric_kernel_check, extension_norm_ratio_max, fit_decay_with, korn_constant_estimate,
    DecayModel, KornConstraints,
};
use rtwave_core::equilibrium::{build_equilibrium, EquilibriumProfile, PhysicalParams};
use rtwave_core::geometry::vandermonde_coefficients;

use rtwave_core::sim::{
    initial_state_from_modes, run_trajectory, FlattenedState, InitialData, Scheme, SimConfig,
    TimeRow, TrajectoryOutput,
};
use rtwave_core::spectral::Grid;
use rtwave_core::stability::{
    energy_form_positivity, find_neutral_sigma, representative_modes, sharp_poincare_constant,
    stability_map,
};

use crate::config::{grid_from, law_from, params_from, Config};
use crate::output::{fmt_f, state_to_bytes, Artifacts};

pub fn run_scenario(name: &str, cfg: &Config, seed: u64) -> Result<Artifacts> {
    match name {
        "equilibrium" => equilibrium(cfg),
        "stability-map" => stability_map_scenario(cfg),
        "neutral-sigma" => neutral_sigma(cfg),
        "simulate" => simulate(cfg),
        "decay-fit" => decay_fit(cfg),
        "verify-inequalities" => verify_inequalities(cfg, seed),
        "sigma-limit" => sigma_limit(cfg),
        other => bail!(
            "unknown scenario '{other}'; expected one of equilibrium, stability-map, \
             neutral-sigma, simulate, decay-fit, verify-inequalities, sigma-limit"
        ),
    }
}

fn build_profile(cfg: &Config) -> Result<(EquilibriumProfile, PhysicalParams)> {
    let params = params_from(cfg)?;
    let law_plus = law_from(cfg, "law_plus")?;
    let law_minus = law_from(cfg, "law_minus")?;
    let n_samples = cfg.usize_or("equilibrium.n_samples", 64)?;
    let profile = build_equilibrium(&law_plus, &law_minus, &params, n_samples)
        .map_err(|e| anyhow!("equilibrium construction failed: {e}"))?;
    Ok((profile, params))
}

fn equilibrium(cfg: &Config) -> Result<Artifacts> {
    let (profile, params) = build_profile(cfg)?;
    let mut out = Artifacts::new();
    let mut csv = String::from("x3,rho,layer\n");
    for &(x, r) in &profile.samples_minus {
        csv.push_str(&format!("{},{},minus\n", fmt_f(x), fmt_f(r)));
    }
    for &(x, r) in &profile.samples_plus {
        csv.push_str(&format!("{},{},plus\n", fmt_f(x), fmt_f(r)));
    }
    out.add_string("profile.csv", csv);
    out.add_json(
        "summary.json",
        &json!({
            "rho1": profile.rho1,
            "rho_plus_interface": profile.rho_plus_iface,
            "rho_minus_interface": profile.rho_minus_iface,
            "density_jump": profile.jump,
            "sigma_c": profile.sigma_c,
            "mass_plus": profile.mass_plus,
            "mass_minus": profile.mass_minus,
            "area": params.area(),
        }),
    )?;
    Ok(out)
}

fn stability_map_scenario(cfg: &Config) -> Result<Artifacts> {
    let (profile, params) = build_profile(cfg)?;
    let grid = grid_from(cfg, &params)?;
    let modes = representative_modes(&grid);
    let results = stability_map(&profile, &params, &grid, &modes)
        .map_err(|e| anyhow!("stability map failed: {e}"))?;
    let mut csv = String::from("xi1,xi2,sigma_minus,re_lambda_max,im_lambda_max\n");
    for r in &results {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_f(r.xi.0),
            fmt_f(r.xi.1),
            fmt_f(params.sigma_minus),
            fmt_f(r.lambda_max.0),
            fmt_f(r.lambda_max.1)
        ));
    }
    let unstable: Vec<_> = results.iter().filter(|r| !r.stable).collect();
    let worst = results
        .iter()
        .max_by(|a, b| a.lambda_max.0.total_cmp(&b.lambda_max.0))
        .expect("at least the mean mode");
    let mut out = Artifacts::new();
    out.add_string("stability_map.csv", csv);
    out.add_json(
        "summary.json",
        &json!({
            "sigma_c": profile.sigma_c,
            "sigma_minus": params.sigma_minus,
            "n_modes": results.len(),
            "n_unstable": unstable.len(),
            "all_stable": unstable.is_empty(),
            "max_re_lambda": worst.lambda_max.0,
            "argmax_mode": [worst.k1, worst.k2],
        }),
    )?;
    Ok(out)
}

fn neutral_sigma(cfg: &Config) -> Result<Artifacts> {
    let (profile, params) = build_profile(cfg)?;
    let grid = grid_from(cfg, &params)?;
    // lowest lattice mode by default: the one attaining max{L1², L2²}
    let (dk1, dk2) = if params.l1 >= params.l2 { (1, 0) } else { (0, 1) };
    let k1 = cfg.i64_or("neutral.k1", dk1)?;
    let k2 = cfg.i64_or("neutral.k2", dk2)?;
    let lo = cfg.f64_or("neutral.bracket_lo", 0.0)?;
    let hi = cfg.f64_or("neutral.bracket_hi", 2.0 * profile.sigma_c)?;
    let sigma_star = find_neutral_sigma(&profile, &params, &grid, k1, k2, (lo, hi))
        .map_err(|e| anyhow!("neutral-sigma search failed: {e}"))?;
    let xi_sq = (k1 as f64 / params.l1).powi(2) + (k2 as f64 / params.l2).powi(2);
    let predicted = profile.jump * params.g / xi_sq;
    let rel = (sigma_star - predicted).abs() / predicted;
    let mut out = Artifacts::new();
    out.add_json(
        "verdict.json",
        &json!({
            "mode": [k1, k2],
            "sigma_star": sigma_star,
            "sigma_c": profile.sigma_c,
            "per_mode_prediction": predicted,
            "relative_error": rel,
        }),
    )?;
    Ok(out)
}

struct SimSetup {
    profile: EquilibriumProfile,
    params: PhysicalParams,
    grid: Grid,
    sim: SimConfig,
    init: InitialData,
}

fn sim_setup(cfg: &Config) -> Result<SimSetup> {
    let (profile, params) = build_profile(cfg)?;
    let grid = grid_from(cfg, &params)?;
    let scheme = Scheme::parse(&cfg.string_or("sim.scheme", "imex1")?)
        .map_err(|e| anyhow!("sim.scheme: {e}"))?;
    let sim = SimConfig {
        scheme,
        dt: cfg.f64("sim.dt")?,
        steps: cfg.usize("sim.steps")?,
        tier: cfg.usize_or("sim.tier", 0)?,
        cfl_c: cfg.f64_or("sim.cfl_c", 1000.0)?,
        checkpoint_every: cfg.usize_or("sim.checkpoint_every", 0)?,
        track_modes: cfg.pairs("sim.track_modes")?,
    };
    let init = InitialData {
        eta_plus: cfg.modes("initial.eta_plus")?,
        eta_minus: cfg.modes("initial.eta_minus")?,
        u: [
            cfg.modes("initial.u1")?,
            cfg.modes("initial.u2")?,
            cfg.modes("initial.u3")?,
        ],
        q: cfg.modes("initial.q")?,
    };
    Ok(SimSetup {
        profile,
        params,
        grid,
        sim,
        init,
    })
}

fn timeseries_csv(rows: &[TimeRow]) -> String {
    let mut csv = format!("# NOTE: {}\n", rtwave_core::sim::EnergyReport::DEVIATION_NOTE);
    csv.push_str(
        "t,e_sigma,d_sigma,f_surrogate,physical_energy,physical_dissipation,\
         mass_plus,mass_minus,residual,max_eta_amplitude\n",
    );
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            fmt_f(r.t),
            fmt_f(r.e_sigma),
            fmt_f(r.d_sigma),
            fmt_f(r.f_surrogate),
            fmt_f(r.physical_energy),
            fmt_f(r.physical_dissipation),
            fmt_f(r.mass_plus),
            fmt_f(r.mass_minus),
            fmt_f(r.residual),
            fmt_f(r.max_eta_amplitude)
        ));
    }
    csv
}

fn run_sim(setup: &SimSetup) -> Result<TrajectoryOutput> {
    let initial = initial_state_from_modes(&setup.grid, &setup.init);
    run_trajectory(&setup.profile, &setup.params, &setup.grid, &setup.sim, initial)
        .map_err(|e| anyhow!("simulation failed: {e}"))
}

fn sim_artifacts(setup: &SimSetup, traj: &TrajectoryOutput) -> Result<Artifacts> {
    let mut out = Artifacts::new();
    out.add_string("timeseries.csv", timeseries_csv(&traj.rows));
    for (step, state) in &traj.checkpoints {
        out.add_bytes(
            &format!("checkpoint_{step:08}.bin"),
            state_to_bytes(state, &setup.grid),
        );
    }
    out.add_bytes("final_state.bin", state_to_bytes(&traj.final_state, &setup.grid));
    if !traj.tracked.is_empty() {
        let mut csv = String::from("t");
        for (k1, k2) in &setup.sim.track_modes {
            csv.push_str(&format!(",abs_eta_minus_{k1}_{k2}"));
        }
        csv.push('\n');
        for (i, row) in traj.rows.iter().enumerate() {
            csv.push_str(&fmt_f(row.t));
            for hist in &traj.tracked {
                csv.push(',');
                csv.push_str(&fmt_f(hist[i]));
            }
            csv.push('\n');
        }
        out.add_string("tracked_modes.csv", csv);
    }
    let first = traj.rows.first().expect("nonempty series");
    let last = traj.rows.last().expect("nonempty series");
    out.add_json(
        "summary.json",
        &json!({
            "note": rtwave_core::sim::EnergyReport::DEVIATION_NOTE,
            "steps": setup.sim.steps,
            "dt": setup.sim.dt,
            "tier": setup.sim.tier,
            "final_time": last.t,
            "initial_e_sigma": first.e_sigma,
            "final_e_sigma": last.e_sigma,
            "final_physical_energy": last.physical_energy,
            "mass_plus_drift_rel": (last.mass_plus - first.mass_plus) / first.mass_plus,
            "mass_minus_drift_rel": (last.mass_minus - first.mass_minus) / first.mass_minus,
            "max_eta_amplitude": traj.rows.iter().map(|r| r.max_eta_amplitude).fold(0.0, f64::max),
        }),
    )?;
    Ok(out)
}

fn simulate(cfg: &Config) -> Result<Artifacts> {
    let setup = sim_setup(cfg)?;
    let traj = run_sim(&setup)?;
    sim_artifacts(&setup, &traj)
}

fn decay_fit(cfg: &Config) -> Result<Artifacts> {
    let setup = sim_setup(cfg)?;
    let model = DecayModel::parse(&cfg.string_or("decay.model", "exponential")?)
        .map_err(|e| anyhow!("decay.model: {e}"))?;
    let quantity = cfg.string_or("decay.quantity", "e_sigma")?;
    let transient = cfg.f64_or("decay.transient_fraction", 0.2)?;
    let pick: fn(&TimeRow) -> f64 = match quantity.as_str() {
        "e_sigma" => |r| r.e_sigma,
        "physical_energy" => |r| r.physical_energy,
        "f_surrogate" => |r| r.f_surrogate,
        "max_eta_amplitude" => |r| r.max_eta_amplitude,
        other => bail!(
            "decay.quantity: unknown quantity '{other}'; expected e_sigma, \
             physical_energy, f_surrogate, or max_eta_amplitude"
        ),
    };
    let traj = run_sim(&setup)?;
    let series: Vec<(f64, f64)> = traj.rows.iter().map(|r| (r.t, pick(r))).collect();
    let fit = fit_decay_with(&series, model, transient)
        .map_err(|e| anyhow!("decay fit failed: {e}"))?;
    let mut out = sim_artifacts(&setup, &traj)?;
    out.add_json(
        "decay_fit.json",
        &json!({
            "quantity": quantity,
            "model": model,
            "rate": fit.rate,
            "r_squared": fit.r_squared,
            "window": fit.window,
            "transient_fraction": transient,
        }),
    )?;
    Ok(out)
}

fn verify_inequalities(cfg: &Config, seed: u64) -> Result<Artifacts> {
    let (profile, params) = build_profile(cfg)?;
    let grid = grid_from(cfg, &params)?;

    let poincare = sharp_poincare_constant(&grid);
    let poincare_expected = 1.0 / params.max_l_sq();
    let poincare_defect = (poincare - poincare_expected).abs() / poincare_expected;

    let korn_full = korn_constant_estimate(&grid, KornConstraints::Full)
        .map_err(|e| anyhow!("korn estimate failed: {e}"))?;
    let korn_loose = korn_constant_estimate(&grid, KornConstraints::NoBottomDirichlet)
        .map_err(|e| anyhow!("korn estimate failed: {e}"))?;

    let kernel = deviatoric_kernel_check(&grid, seed);

    let samples = cfg.usize_or("inequalities.extension_samples", 100)?;
    let mut ext = Vec::new();
    for q in 0..=2usize {
        let r = extension_norm_ratio_max(&grid, q, samples, seed.wrapping_add(q as u64))
            .map_err(|e| anyhow!("extension norm check failed: {e}"))?;
        ext.push(r);
    }

    let mut vandermonde = Vec::new();
    for m in 1..=6usize {
        let lambdas: Vec<f64> = (1..=m + 1).map(|j| j as f64).collect();
        let c = vandermonde_coefficients(&lambdas)
            .map_err(|e| anyhow!("vandermonde order {m}: {e}"))?;
        vandermonde.push(c.identity_defect());
    }
    let vandermonde_max = vandermonde.iter().cloned().fold(0.0, f64::max);

    let pos_free = energy_form_positivity(&profile, &params, &grid, false)
        .map_err(|e| anyhow!("positivity check failed: {e}"))?;
    let pos_constrained = energy_form_positivity(&profile, &params, &grid, true)
        .map_err(|e| anyhow!("positivity check failed: {e}"))?;

    let pass = poincare_defect < 1e-10
        && korn_full > 0.0
        && kernel.max_defect < 1e-10
        && kernel.unique_zero
        && vandermonde_max < 1e-10
        && ext.iter().all(|r| r.is_finite());

    let mut out = Artifacts::new();
    out.add_json(
        "inequalities.json",
        &json!({
            "poincare": {
                "constant": poincare,
                "expected": poincare_expected,
                "relative_defect": poincare_defect,
            },
            "korn": {
                "constant": korn_full,
                "without_bottom_dirichlet": korn_loose,
                "positive": korn_full > 0.0,
            },
            "deviatoric_kernel": {
                "max_defect": kernel.max_defect,
                "constraint_sigma_ratio": kernel.constraint_sigma_ratio,
                "unique_zero": kernel.unique_zero,
            },
            "extension_norm_ratios": {
                "samples": samples,
                "max_ratio_by_order": ext,
            },
            "vandermonde_identity_defects": vandermonde,
            "energy_form": {
                "sigma_c": profile.sigma_c,
                "unconstrained_min": pos_free.min_value,
                "constrained_min": pos_constrained.min_value,
                "constrained_positive": pos_constrained.positive,
            },
            "pass": pass,
        }),
    )?;
    Ok(out)
}

fn state_distance(a: &FlattenedState, b: &FlattenedState, grid: &Grid) -> f64 {
    let mut d = a.sub(b);
    d.time = 0.0;
    let core = d.l2_norm(grid);
    let ep = d.eta_plus.sobolev_norm(grid, 1.0);
    let em = d.eta_minus.sobolev_norm(grid, 1.0);
    (core * core + ep * ep + em * em).sqrt()
}

fn sigma_limit(cfg: &Config) -> Result<Artifacts> {
    let base = sim_setup(cfg)?;
    if base.profile.jump >= 0.0 {
        bail!(
            "sigma-limit requires a stable density jump (jump = {} is not negative)",
            base.profile.jump
        );
    }
    let sigmas = if cfg.has("sigma_limit.sigmas") {
        cfg.f64_list("sigma_limit.sigmas")?
    } else {
        vec![0.1, 0.05, 0.025]
    };
    if sigmas.windows(2).any(|w| w[1] >= w[0]) || sigmas.iter().any(|&s| s <= 0.0) {
        bail!("sigma_limit.sigmas must be strictly decreasing positive values");
    }

    let run_at = |sigma: f64| -> Result<FlattenedState> {
        let mut params = base.params;
        params.sigma_plus = sigma;
        params.sigma_minus = sigma;
        let initial = initial_state_from_modes(&base.grid, &base.init);
        let traj = run_trajectory(&base.profile, &params, &base.grid, &base.sim, initial)
            .map_err(|e| anyhow!("run at sigma = {sigma} failed: {e}"))?;
        Ok(traj.final_state)
    };

    let reference = run_at(0.0)?;
    let mut distances: Vec<(f64, Option<f64>)> = Vec::new();
    let mut incomplete = false;
    for &s in &sigmas {
        match run_at(s) {
            Ok(final_state) => {
                distances.push((s, Some(state_distance(&final_state, &reference, &base.grid))));
            }
            Err(e) => {
                eprintln!("warning: {e}");
                distances.push((s, None));
                incomplete = true;
            }
        }
    }

    let ok: Vec<(f64, f64)> = distances
        .iter()
        .filter_map(|&(s, d)| d.map(|d| (s, d)))
        .collect();
    let monotone = ok.windows(2).all(|w| w[1].1 <= w[0].1);
    // log-log fit of distance vs sigma gives the empirical convergence order
    let fitted_p = if ok.len() >= 2 && ok.iter().all(|&(_, d)| d > 0.0) {
        let xs: Vec<f64> = ok.iter().map(|&(s, _)| s.ln()).collect();
        let ys: Vec<f64> = ok.iter().map(|&(_, d)| d.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        Some(sxy / sxx)
    } else {
        None
    };

    let mut csv = String::from("sigma,distance\n");
    for &(s, d) in &distances {
        match d {
            Some(d) => csv.push_str(&format!("{},{}\n", fmt_f(s), fmt_f(d))),
            None => csv.push_str(&format!("{},nan\n", fmt_f(s))),
        }
    }
    let mut out = Artifacts::new();
    out.add_string("sigma_limit.csv", csv);
    out.add_json(
        "sigma_limit.json",
        &json!({
            "sigmas": sigmas,
            "distances": distances.iter().map(|&(_, d)| d).collect::<Vec<_>>(),
            "monotone_decreasing": monotone,
            "fitted_order": fitted_p,
            "complete": !incomplete,
            "final_time": base.sim.dt * base.sim.steps as f64,
        }),
    )?;
    Ok(out)
}
