//! Decay-rate fitting and discrete functional-inequality checks: the layered
//! Korn constant, the kernel of the deviatoric symmetric gradient, and the
//! norm bounds for the Poisson extensions.

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::geometry::poisson_extend_upper;
use crate::spectral::{Grid, Surface, SurfaceField, VolumeField};

/// Default fraction of the series dropped before fitting: decay statements
/// are asymptotic, the early transient is not expected to follow the model.
pub const DEFAULT_TRANSIENT_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayModel {
    /// value ≈ C e^{−rate·t}; least squares on log(value) vs t.
    Exponential,
    /// value ≈ C (1+t)^{−rate}; least squares on log(value) vs log(1+t).
    Algebraic,
}

impl DecayModel {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exponential" => Ok(Self::Exponential),
            "algebraic" => Ok(Self::Algebraic),
            other => Err(CoreError::InvalidParameter(format!(
                "unknown decay model '{other}', expected exponential or algebraic"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub model: DecayModel,
    /// Decay rate (exponential) or exponent (algebraic); positive means decay.
    pub rate: f64,
    /// Coefficient of determination of the linearized fit, in [0, 1].
    pub r_squared: f64,
    /// Time interval actually fitted, after transient exclusion.
    pub window: (f64, f64),
}

/// Least-squares decay fit with the default transient exclusion.
pub fn fit_decay(series: &[(f64, f64)], model: DecayModel) -> Result<DecayFit> {
    fit_decay_with(series, model, DEFAULT_TRANSIENT_FRACTION)
}

/// Least-squares decay fit dropping the leading `transient_fraction` of the
/// samples. Requires at least 20 samples overall and strictly positive
/// values inside the fitted window.
pub fn fit_decay_with(
    series: &[(f64, f64)],
    model: DecayModel,
    transient_fraction: f64,
) -> Result<DecayFit> {
    if series.len() < 20 {
        return Err(CoreError::InvalidParameter(format!(
            "decay fit needs at least 20 samples, got {}",
            series.len()
        )));
    }
    if !(0.0..1.0).contains(&transient_fraction) {
        return Err(CoreError::InvalidParameter(format!(
            "transient fraction must lie in [0, 1), got {transient_fraction}"
        )));
    }
    let skip = ((series.len() as f64) * transient_fraction).floor() as usize;
    let window = &series[skip..];
    if window.len() < 2 {
        return Err(CoreError::InvalidParameter(
            "transient exclusion leaves fewer than 2 samples".into(),
        ));
    }
    let mut xs = Vec::with_capacity(window.len());
    let mut ys = Vec::with_capacity(window.len());
    for &(t, v) in window {
        if !(v > 0.0) {
            return Err(CoreError::Domain(format!(
                "decay fit requires positive values, got {v} at t = {t}"
            )));
        }
        let x = match model {
            DecayModel::Exponential => t,
            DecayModel::Algebraic => (1.0 + t).ln(),
        };
        xs.push(x);
        ys.push(v.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(CoreError::InvalidParameter(
            "decay fit needs at least two distinct sample times".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        model,
        rate: -slope,
        r_squared,
        window: (window.first().unwrap().0, window.last().unwrap().0),
    })
}

/// Which boundary constraints to impose in the Korn minimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KornConstraints {
    /// Velocity jump ⟦u⟧ = 0 across the interface and u₋ = 0 on the bottom.
    Full,
    /// Jump condition only; admits the rigid/affine kernel fields, so the
    /// minimum degenerates to zero.
    NoBottomDirichlet,
}

/// Realify a Hermitian complex matrix into a symmetric real one,
/// [[Re, −Im], [Im, Re]]; the spectrum is duplicated, not altered.
fn realify_hermitian(m: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let c = m[(i, j)];
            out[(i, j)] = c.re;
            out[(i, j + n)] = -c.im;
            out[(i + n, j)] = c.im;
            out[(i + n, j + n)] = c.re;
        }
    }
    out
}

/// Smallest eigenvalue of the Hermitian pencil S v = λ H v with H positive
/// definite, via Cholesky reduction to an ordinary symmetric eigenproblem.
fn pencil_min_eig(s: &DMatrix<Complex64>, h: &DMatrix<Complex64>) -> Result<f64> {
    let sr = realify_hermitian(s);
    let hr = realify_hermitian(h);
    let chol = Cholesky::new(hr).ok_or_else(|| {
        CoreError::Singular("H1 Gram matrix is not positive definite".into())
    })?;
    let l = chol.l();
    let x = l
        .clone()
        .solve_lower_triangular(&sr)
        .ok_or_else(|| CoreError::Singular("triangular solve failed".into()))?;
    let c = l
        .solve_lower_triangular(&x.transpose())
        .ok_or_else(|| CoreError::Singular("triangular solve failed".into()))?
        .transpose();
    let sym = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    Ok(eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min))
}

/// Gradient maps for one layer at one horizontal mode: for component values
/// stacked at the layer's Chebyshev nodes, returns the three matrices
/// realizing (∂₁, ∂₂, ∂₃) = (iξ₁, iξ₂, D).
fn layer_grad_maps(xi: (f64, f64), d: &DMatrix<f64>) -> [DMatrix<Complex64>; 3] {
    let nv = d.nrows();
    let mut g1 = DMatrix::zeros(nv, nv);
    let mut g2 = DMatrix::zeros(nv, nv);
    let mut g3 = DMatrix::zeros(nv, nv);
    for k in 0..nv {
        g1[(k, k)] = Complex64::new(0.0, xi.0);
        g2[(k, k)] = Complex64::new(0.0, xi.1);
        for l in 0..nv {
            g3[(k, l)] = Complex64::new(d[(k, l)], 0.0);
        }
    }
    [g1, g2, g3]
}

/// Accumulate `out += c · Eᴴ W E` with W the diagonal quadrature weights.
fn add_weighted_gram(
    out: &mut DMatrix<Complex64>,
    e: &DMatrix<Complex64>,
    w: &[f64],
    c: f64,
) {
    let (rows, cols) = (e.nrows(), e.ncols());
    for i in 0..cols {
        for j in 0..cols {
            let mut acc = Complex64::default();
            for k in 0..rows {
                acc += e[(k, i)].conj() * e[(k, j)] * w[k];
            }
            out[(i, j)] += acc * c;
        }
    }
}

/// Per-mode Korn ratio min ‖𝔻⁰u‖₀² / ‖u‖₁² over the constrained space.
fn korn_mode_min(
    grid: &Grid,
    xi: (f64, f64),
    constraints: KornConstraints,
) -> Result<f64> {
    let np = grid.n_v_plus + 1;
    let nm = grid.n_v_minus + 1;
    let n = 3 * (np + nm);
    // DOF layout: component c, then plus-layer nodes (ascending from the
    // interface), then minus-layer nodes (ascending from the bottom).
    let idx_p = |c: usize, k: usize| c * (np + nm) + k;
    let idx_m = |c: usize, k: usize| c * (np + nm) + np + k;

    let gp = layer_grad_maps(xi, grid.diff_plus());
    let gm = layer_grad_maps(xi, grid.diff_minus());

    let mut s = DMatrix::<Complex64>::zeros(n, n);
    let mut h = DMatrix::<Complex64>::zeros(n, n);
    for (nv, g, w, idx) in [
        (np, &gp, grid.weights_plus(), &idx_p as &dyn Fn(usize, usize) -> usize),
        (nm, &gm, grid.weights_minus(), &idx_m),
    ] {
        // grad[d][c]: nv × n matrix for ∂_d u_c in this layer
        let mut grad = vec![vec![DMatrix::<Complex64>::zeros(nv, n); 3]; 3];
        let mut sel = vec![DMatrix::<Complex64>::zeros(nv, n); 3];
        for c in 0..3 {
            for k in 0..nv {
                sel[c][(k, idx(c, k))] = Complex64::new(1.0, 0.0);
                for d in 0..3 {
                    for l in 0..nv {
                        grad[d][c][(k, idx(c, l))] = g[d][(k, l)];
                    }
                }
            }
        }
        let div = &grad[0][0] + &grad[1][1] + &grad[2][2];
        for i in 0..3 {
            for j in i..3 {
                let mut e = &grad[i][j] + &grad[j][i];
                if i == j {
                    e -= &div * Complex64::new(2.0 / 3.0, 0.0);
                }
                let c = if i == j { 1.0 } else { 2.0 };
                add_weighted_gram(&mut s, &e, w, c);
            }
        }
        for c in 0..3 {
            add_weighted_gram(&mut h, &sel[c], w, 1.0);
            for d in 0..3 {
                add_weighted_gram(&mut h, &grad[d][c], w, 1.0);
            }
        }
    }

    // Null-space basis of the nodal constraints: bottom values pinned to
    // zero, plus-layer interface values slaved to the minus-layer ones.
    let mut cols: Vec<DMatrix<Complex64>> = Vec::new();
    let one = Complex64::new(1.0, 0.0);
    for c in 0..3 {
        for k in 0..np {
            if k == 0 {
                continue; // interface node of the plus layer: slaved
            }
            let mut col = DMatrix::zeros(n, 1);
            col[(idx_p(c, k), 0)] = one;
            cols.push(col);
        }
        for k in 0..nm {
            if k == 0 && constraints == KornConstraints::Full {
                continue; // bottom Dirichlet node
            }
            let mut col = DMatrix::zeros(n, 1);
            col[(idx_m(c, k), 0)] = one;
            if k == nm - 1 {
                col[(idx_p(c, 0), 0)] = one; // ⟦u⟧ = 0 at the interface
            }
            cols.push(col);
        }
    }
    let nz = cols.len();
    let mut z = DMatrix::<Complex64>::zeros(n, nz);
    for (j, col) in cols.iter().enumerate() {
        z.set_column(j, &col.column(0));
    }
    let zh = z.adjoint();
    let s_red = &zh * &s * &z;
    let h_red = &zh * &h * &z;
    pencil_min_eig(&s_red, &h_red)
}

/// Discrete layered Korn constant: the minimum of
/// ‖𝔻⁰u₊‖₀² + ‖𝔻⁰u₋‖₀² over ‖u‖₁² = 1 subject to the interface jump and
/// bottom boundary conditions, computed mode-by-mode (the quadratic forms
/// block-diagonalize over horizontal wavenumbers) as a generalized symmetric
/// eigenproblem.
pub fn korn_constant_estimate(grid: &Grid, constraints: KornConstraints) -> Result<f64> {
    let nh = grid.n_h as i64;
    let mut min = f64::INFINITY;
    for k1 in 0..=nh {
        for k2 in -nh..=nh {
            if k1 == 0 && k2 < 0 {
                continue;
            }
            let xi = (k1 as f64 / grid.l1, k2 as f64 / grid.l2);
            min = min.min(korn_mode_min(grid, xi, constraints)?);
        }
    }
    Ok(min)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelReport {
    /// Largest |𝔻⁰u| over the sampled kernel fields (should be rounding-level).
    pub max_defect: f64,
    /// Smallest-to-largest singular value ratio of the system expressing
    /// "kernel field vanishes on the bottom boundary".
    pub constraint_sigma_ratio: f64,
    /// True when that system only admits the zero kernel field.
    pub unique_zero: bool,
}

/// Evaluate the kernel field u = a + ω×x + γx + (b·x)x − b|x|²/2 at x.
fn kernel_field(a: &[f64; 3], omega: &[f64; 3], gamma: f64, b: &[f64; 3], x: [f64; 3]) -> [f64; 3] {
    let bx = b[0] * x[0] + b[1] * x[1] + b[2] * x[2];
    let x2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let cross = [
        omega[1] * x[2] - omega[2] * x[1],
        omega[2] * x[0] - omega[0] * x[2],
        omega[0] * x[1] - omega[1] * x[0],
    ];
    [0, 1, 2].map(|i| a[i] + cross[i] + gamma * x[i] + bx * x[i] - b[i] * x2 / 2.0)
}

/// Analytic gradient ∂_j u_i of the kernel field.
fn kernel_grad(omega: &[f64; 3], gamma: f64, b: &[f64; 3], x: [f64; 3]) -> [[f64; 3]; 3] {
    // antisymmetric part from ω×x: ∂_j (ω×x)_i = ε_{ikj} ω_k
    let anti = [
        [0.0, -omega[2], omega[1]],
        [omega[2], 0.0, -omega[0]],
        [-omega[1], omega[0], 0.0],
    ];
    let bx = b[0] * x[0] + b[1] * x[1] + b[2] * x[2];
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = anti[i][j]
                + if i == j { gamma + bx } else { 0.0 }
                + b[j] * x[i]
                - b[i] * x[j];
        }
    }
    g
}

/// Verifies that the polynomial kernel fields of the deviatoric symmetric
/// gradient are annihilated by the discrete operator (Chebyshev vertical
/// differentiation, analytic horizontal derivatives of the explicit
/// polynomials), and that pinning u to zero on the bottom boundary forces
/// the trivial field.
pub fn deviatoric_kernel_check(grid: &Grid, seed: u64) -> KernelReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_defect: f64 = 0.0;
    let hx = [0.3, 1.1, 2.6, 4.0];
    let hy = [0.5, 1.7, 3.2, 5.1];
    for _ in 0..20 {
        let mut draw = || rng.gen_range(-1.0..1.0);
        let a = [draw(), draw(), draw()];
        let omega = [draw(), draw(), draw()];
        let gamma = draw();
        let b = [draw(), draw(), draw()];
        for (nodes, d) in [
            (grid.nodes_plus(), grid.diff_plus()),
            (grid.nodes_minus(), grid.diff_minus()),
        ] {
            let nv = nodes.len();
            for &x1 in &hx {
                for &x2 in &hy {
                    // nodal values of each component along the vertical line
                    let mut vals = [vec![0.0; nv], vec![0.0; nv], vec![0.0; nv]];
                    for (k, &x3) in nodes.iter().enumerate() {
                        let u = kernel_field(&a, &omega, gamma, &b, [x1, x2, x3]);
                        for c in 0..3 {
                            vals[c][k] = u[c];
                        }
                    }
                    for (k, &x3) in nodes.iter().enumerate() {
                        let mut g = kernel_grad(&omega, gamma, &b, [x1, x2, x3]);
                        // replace the vertical derivatives by the discrete ones
                        for c in 0..3 {
                            g[c][2] = (0..nv).map(|l| d[(k, l)] * vals[c][l]).sum();
                        }
                        let div = g[0][0] + g[1][1] + g[2][2];
                        for i in 0..3 {
                            for j in 0..3 {
                                let e = g[i][j] + g[j][i]
                                    - if i == j { 2.0 / 3.0 * div } else { 0.0 };
                                max_defect = max_defect.max(e.abs());
                            }
                        }
                    }
                }
            }
        }
    }

    // u(x₁, x₂, −b) = 0 for all horizontal positions, as a linear system in
    // the 10 parameters (a, ω, γ, b).
    let x3 = -grid.b;
    let pts: Vec<(f64, f64)> = hx.iter().flat_map(|&x| hy.iter().map(move |&y| (x, y))).collect();
    let mut m = DMatrix::<f64>::zeros(3 * pts.len(), 10);
    for (r, &(x1, x2)) in pts.iter().enumerate() {
        let x = [x1, x2, x3];
        for p in 0..10 {
            let mut a = [0.0; 3];
            let mut omega = [0.0; 3];
            let mut gamma = 0.0;
            let mut b = [0.0; 3];
            match p {
                0..=2 => a[p] = 1.0,
                3..=5 => omega[p - 3] = 1.0,
                6 => gamma = 1.0,
                _ => b[p - 7] = 1.0,
            }
            let u = kernel_field(&a, &omega, gamma, &b, x);
            for c in 0..3 {
                m[(3 * r + c, p)] = u[c];
            }
        }
    }
    let svd = m.svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let ratio = if smax > 0.0 { smin / smax } else { 0.0 };
    KernelReport {
        max_defect,
        constraint_sigma_ratio: ratio,
        unique_zero: ratio > 1e-8,
    }
}

/// ‖∇^q v‖₀: the L² norm of all q-th order derivatives of a volume field.
fn grad_q_norm(v: &VolumeField, grid: &Grid, q: usize) -> f64 {
    let mut fields = vec![v.clone()];
    for _ in 0..q {
        let mut next = Vec::with_capacity(fields.len() * 3);
        for f in &fields {
            next.push(f.d_horizontal(grid, 1));
            next.push(f.d_horizontal(grid, 2));
            next.push(f.d_vertical(grid));
        }
        fields = next;
    }
    fields.iter().map(|f| f.l2_norm_sq(grid)).sum::<f64>().sqrt()
}

/// Largest observed ratio ‖∇^q 𝒫f‖₀ / ‖f‖_{H^{q−1/2}} over random
/// band-limited surface fields, for the upper Poisson extension. Bounded
/// uniformly in the sample by the extension norm estimates.
pub fn extension_norm_ratio_max(
    grid: &Grid,
    q: usize,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if q > 2 {
        return Err(CoreError::InvalidParameter(format!(
            "extension norm check supports derivative orders 0..=2, got {q}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nh = grid.n_h as i64;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let mut f = SurfaceField::zeros(grid, Surface::Plus);
        for k1 in 0..=nh {
            for k2 in -nh..=nh {
                if k1 == 0 && k2 < 0 {
                    continue;
                }
                let re = rng.gen_range(-1.0..1.0);
                let im = if k1 == 0 && k2 == 0 {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                f.add_real_mode(grid, k1, k2, Complex64::new(re, im));
            }
        }
        let denom = f.sobolev_norm(grid, q as f64 - 0.5);
        if denom == 0.0 {
            continue;
        }
        let ext = poisson_extend_upper(&f, grid);
        let num = grad_q_norm(&ext, grid, q);
        worst = worst.max(num / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(1.0, 1.0, 4, 10, 10, 1.0, 1.0).unwrap()
    }

    #[test]
    fn exponential_fit_recovers_synthetic_rate() {
        let series: Vec<(f64, f64)> =
            (0..50).map(|i| (0.1 * i as f64, 3.0 * (-2.0 * 0.1 * i as f64).exp())).collect();
        let fit = fit_decay(&series, DecayModel::Exponential).unwrap();
        assert!((fit.rate - 2.0).abs() < 1e-6, "rate {}", fit.rate);
        assert!(fit.r_squared > 0.9999);
        assert!(fit.window.0 > 0.0, "transient not excluded");
    }

    #[test]
    fn algebraic_fit_recovers_synthetic_exponent() {
        let series: Vec<(f64, f64)> =
            (0..50).map(|i| (0.2 * i as f64, (1.0 + 0.2 * i as f64).powi(-3))).collect();
        let fit = fit_decay(&series, DecayModel::Algebraic).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-6, "exponent {}", fit.rate);
        assert!(fit.r_squared > 0.9999);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let short: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 1.0)).collect();
        assert!(fit_decay(&short, DecayModel::Exponential).is_err());
        let mut series: Vec<(f64, f64)> = (0..30).map(|i| (i as f64, 1.0)).collect();
        series[25].1 = -1.0;
        assert!(fit_decay(&series, DecayModel::Exponential).is_err());
    }

    #[test]
    fn korn_constant_positive_and_resolution_stable() {
        let g1 = grid();
        let c1 = korn_constant_estimate(&g1, KornConstraints::Full).unwrap();
        assert!(c1 > 0.0, "korn constant {c1}");
        let g2 = Grid::new(1.0, 1.0, 4, 18, 18, 1.0, 1.0).unwrap();
        let c2 = korn_constant_estimate(&g2, KornConstraints::Full).unwrap();
        assert!(
            (c1 - c2).abs() / c2 < 0.1,
            "resolution drift: {c1} vs {c2}"
        );
    }

    #[test]
    fn korn_constant_collapses_without_bottom_dirichlet() {
        let g = grid();
        let full = korn_constant_estimate(&g, KornConstraints::Full).unwrap();
        let loose = korn_constant_estimate(&g, KornConstraints::NoBottomDirichlet).unwrap();
        // constants (mode 0) are kernel fields of 𝔻⁰ once the bottom rows
        // are dropped, so the minimum degenerates
        assert!(loose.abs() < 1e-8, "unconstrained minimum {loose}");
        assert!(full > 1e3 * loose.abs().max(1e-12));
    }

    #[test]
    fn deviatoric_kernel_is_annihilated() {
        let report = deviatoric_kernel_check(&grid(), 7);
        assert!(report.max_defect < 1e-10, "defect {}", report.max_defect);
        assert!(report.unique_zero, "sigma ratio {}", report.constraint_sigma_ratio);
    }

    #[test]
    fn extension_norm_ratios_bounded() {
        let g = grid();
        for q in 0..=2 {
            let r = extension_norm_ratio_max(&g, q, 100, 42).unwrap();
            assert!(r.is_finite() && r > 0.0);
            assert!(r < 10.0, "order {q} ratio {r}");
        }
    }
}
