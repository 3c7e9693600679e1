//! Steady two-layer equilibria: pressure laws, admissibility conditions,
//! density profiles ρ̄±, interface values, equilibrium masses, and the
//! critical surface tension.
//!
//! The steady state solves d(P±(ρ̄±))/dx₃ = −g ρ̄± per layer with
//! P₊(ρ̄₊(ℓ)) = p_atm at the top and pressure continuity P₊(ρ⁺) = P₋(ρ⁻)
//! across the interface. Writing h±(z) = ∫ P±′(r)/r dr for the specific
//! enthalpy (anchored at the relevant interface density), the profiles are
//! ρ̄₊(x₃) = h₊⁻¹(g(ℓ−x₃)) and ρ̄₋(x₃) = h₋⁻¹(−g x₃).

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::quad::adaptive_simpson;

/// Partial sums beyond this value declare an improper admissibility
/// integral divergent (bound = +∞).
const DIVERGENCE_CUTOFF: f64 = 1e12;

/// A smooth, positive, strictly increasing pressure–density relation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PressureLaw {
    /// P(z) = K z^α with K > 0, α > 1.
    Polytropic { k: f64, alpha: f64 },
    /// Strictly increasing (density, pressure) pairs, interpolated by a
    /// monotone cubic (Fritsch–Carlson); valid only on the tabulated range.
    Tabulated { table: Vec<(f64, f64)> },
}

impl PressureLaw {
    pub fn polytropic(k: f64, alpha: f64) -> Self {
        PressureLaw::Polytropic { k, alpha }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PressureLaw::Polytropic { k, alpha } => {
                if !(*k > 0.0) {
                    return Err(CoreError::InvalidParameter(format!(
                        "polytropic coefficient must be positive, got {k}"
                    )));
                }
                if !(*alpha > 1.0) {
                    return Err(CoreError::InvalidParameter(format!(
                        "polytropic exponent must exceed 1, got {alpha}"
                    )));
                }
            }
            PressureLaw::Tabulated { table } => {
                if table.len() < 4 {
                    return Err(CoreError::InvalidParameter(
                        "tabulated law needs at least 4 points".into(),
                    ));
                }
                for w in table.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                        return Err(CoreError::InvalidParameter(
                            "tabulated law must be strictly increasing in density and pressure"
                                .into(),
                        ));
                    }
                }
                if table[0].0 <= 0.0 || table[0].1 <= 0.0 {
                    return Err(CoreError::InvalidParameter(
                        "tabulated law must have positive densities and pressures".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Density domain on which the law can be evaluated.
    pub fn domain(&self) -> (f64, f64) {
        match self {
            PressureLaw::Polytropic { .. } => (0.0, f64::INFINITY),
            PressureLaw::Tabulated { table } => (table[0].0, table[table.len() - 1].0),
        }
    }

    fn check_domain(&self, z: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if z < lo || z > hi || !(z > 0.0) {
            return Err(CoreError::Domain(format!(
                "density {z} outside law domain [{lo}, {hi}]"
            )));
        }
        Ok(())
    }

    pub fn pressure(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match self {
            PressureLaw::Polytropic { k, alpha } => k * z.powf(*alpha),
            PressureLaw::Tabulated { table } => Pchip::new(table).eval(z),
        })
    }

    pub fn dpressure(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match self {
            PressureLaw::Polytropic { k, alpha } => k * alpha * z.powf(alpha - 1.0),
            PressureLaw::Tabulated { table } => Pchip::new(table).eval_d(z),
        })
    }

    pub fn d2pressure(&self, z: f64) -> Result<f64> {
        self.check_domain(z)?;
        Ok(match self {
            PressureLaw::Polytropic { k, alpha } => {
                k * alpha * (alpha - 1.0) * z.powf(alpha - 2.0)
            }
            PressureLaw::Tabulated { table } => Pchip::new(table).eval_d2(z),
        })
    }

    /// Pressure range attainable by the law.
    pub fn pressure_range(&self) -> (f64, f64) {
        match self {
            PressureLaw::Polytropic { .. } => (0.0, f64::INFINITY),
            PressureLaw::Tabulated { table } => (table[0].1, table[table.len() - 1].1),
        }
    }

    /// Invert P(z) = p on the monotone law.
    pub fn inverse_pressure(&self, p: f64) -> Result<f64> {
        match self {
            PressureLaw::Polytropic { k, alpha } => {
                if !(p > 0.0) {
                    return Err(CoreError::Domain(format!(
                        "pressure {p} outside polytropic range (0, inf)"
                    )));
                }
                Ok((p / k).powf(1.0 / alpha))
            }
            PressureLaw::Tabulated { .. } => {
                let (plo, phi) = self.pressure_range();
                if p < plo || p > phi {
                    return Err(CoreError::Domain(format!(
                        "pressure {p} outside tabulated range [{plo}, {phi}]"
                    )));
                }
                let (zlo, zhi) = self.domain();
                invert_monotone(
                    |z| self.pressure(z).unwrap_or(f64::NAN),
                    |z| self.dpressure(z).unwrap_or(f64::NAN),
                    zlo,
                    zhi,
                    p,
                    1e-12,
                )
            }
        }
    }

    /// Specific enthalpy h(z) = ∫_{ref}^{z} P′(r)/r dr by adaptive quadrature.
    pub fn enthalpy(&self, ref_density: f64, z: f64) -> Result<f64> {
        self.check_domain(ref_density)?;
        self.check_domain(z)?;
        Ok(adaptive_simpson(
            |r| self.dpressure(r).unwrap_or(f64::NAN) / r,
            ref_density,
            z,
            1e-13 * (1.0 + z - ref_density).abs(),
        ))
    }

    /// Closed-form enthalpy for polytropic laws:
    /// Kα/(α−1)·(z^{α−1} − ref^{α−1}).
    pub fn enthalpy_closed_form(&self, ref_density: f64, z: f64) -> Option<f64> {
        match self {
            PressureLaw::Polytropic { k, alpha } => Some(
                k * alpha / (alpha - 1.0)
                    * (z.powf(alpha - 1.0) - ref_density.powf(alpha - 1.0)),
            ),
            PressureLaw::Tabulated { .. } => None,
        }
    }

    /// Invert h(·) anchored at `ref_density`: find z with h(z) = y, y ≥ 0.
    pub fn enthalpy_inverse(&self, ref_density: f64, y: f64) -> Result<f64> {
        if let PressureLaw::Polytropic { k, alpha } = self {
            // z = (ref^{α−1} + (α−1) y / (Kα))^{1/(α−1)}
            let base = ref_density.powf(alpha - 1.0) + (alpha - 1.0) * y / (k * alpha);
            if base <= 0.0 {
                return Err(CoreError::Domain(format!(
                    "enthalpy value {y} not attained by polytropic law"
                )));
            }
            return Ok(base.powf(1.0 / (alpha - 1.0)));
        }
        // Generic monotone inversion: h is strictly increasing with
        // h′(z) = P′(z)/z > 0.
        let (zlo, zhi) = self.domain();
        let h = |z: f64| self.enthalpy(ref_density, z).unwrap_or(f64::NAN);
        let dh = |z: f64| self.dpressure(z).map(|p| p / z).unwrap_or(f64::NAN);
        if y < h(zlo) - 1e-12 || y > h(zhi) + 1e-12 {
            return Err(CoreError::Domain(format!(
                "enthalpy value {y} outside attainable range [{}, {}]",
                h(zlo),
                h(zhi)
            )));
        }
        invert_monotone(h, dh, zlo, zhi, y, 1e-12)
    }

    /// Generic enthalpy inversion path (quadrature + root find), ignoring
    /// closed forms; used to cross-validate the polytropic expressions.
    pub fn enthalpy_inverse_generic(&self, ref_density: f64, y: f64) -> Result<f64> {
        let (zlo_raw, zhi_raw) = self.domain();
        // For unbounded polytropic domains pick a finite bracket around ref.
        let zlo = if zlo_raw <= 0.0 {
            ref_density * 1e-6
        } else {
            zlo_raw
        };
        let mut zhi = if zhi_raw.is_infinite() {
            let mut hi = ref_density * 2.0;
            while self.enthalpy(ref_density, hi)? < y && hi < 1e12 {
                hi *= 2.0;
            }
            hi
        } else {
            zhi_raw
        };
        if zhi <= zlo {
            zhi = zlo * 2.0;
        }
        let h = |z: f64| self.enthalpy(ref_density, z).unwrap_or(f64::NAN);
        let dh = |z: f64| self.dpressure(z).map(|p| p / z).unwrap_or(f64::NAN);
        invert_monotone(h, dh, zlo, zhi, y, 1e-12)
    }

    /// The admissibility bound (1/g)∫_{z0}^{sup} P′(r)/r dr, which may be +∞.
    pub fn height_bound(&self, z0: f64, g: f64) -> Result<f64> {
        self.check_domain(z0)?;
        let (_, zhi) = self.domain();
        if zhi.is_finite() {
            return Ok(self.enthalpy(z0, zhi)? / g);
        }
        // Integrate over doubling windows with a divergence heuristic.
        let mut total = 0.0;
        let mut a = z0;
        let mut width = z0.max(1.0);
        for _ in 0..200 {
            let piece = adaptive_simpson(
                |r| self.dpressure(r).unwrap_or(f64::NAN) / r,
                a,
                a + width,
                1e-10,
            );
            total += piece;
            if total > DIVERGENCE_CUTOFF {
                return Ok(f64::INFINITY);
            }
            if piece.abs() < 1e-12 * (1.0 + total.abs()) {
                return Ok(total / g);
            }
            a += width;
            width *= 2.0;
        }
        Ok(if total > DIVERGENCE_CUTOFF {
            f64::INFINITY
        } else {
            total / g
        })
    }
}

/// Monotone cubic (Fritsch–Carlson) interpolant for tabulated laws.
struct Pchip<'a> {
    pts: &'a [(f64, f64)],
    slopes: Vec<f64>,
}

impl<'a> Pchip<'a> {
    fn new(pts: &'a [(f64, f64)]) -> Self {
        let n = pts.len();
        let mut delta = vec![0.0; n - 1];
        for i in 0..n - 1 {
            delta[i] = (pts[i + 1].1 - pts[i].1) / (pts[i + 1].0 - pts[i].0);
        }
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            let (h0, h1) = (pts[i].0 - pts[i - 1].0, pts[i + 1].0 - pts[i].0);
            // weighted harmonic mean keeps the interpolant monotone
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
        Self { pts, slopes: d }
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.pts.len();
        match self
            .pts
            .binary_search_by(|p| p.0.partial_cmp(&x).unwrap())
        {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    fn hermite(&self, x: f64) -> (f64, f64, f64) {
        let i = self.segment(x);
        let (x0, y0) = self.pts[i];
        let (x1, y1) = self.pts[i + 1];
        let (d0, d1) = (self.slopes[i], self.slopes[i + 1]);
        let h = x1 - x0;
        let t = (x - x0) / h;
        let h00 = 2.0 * t.powi(3) - 3.0 * t.powi(2) + 1.0;
        let h10 = t.powi(3) - 2.0 * t.powi(2) + t;
        let h01 = -2.0 * t.powi(3) + 3.0 * t.powi(2);
        let h11 = t.powi(3) - t.powi(2);
        let v = h00 * y0 + h * h10 * d0 + h01 * y1 + h * h11 * d1;
        let dh00 = 6.0 * t.powi(2) - 6.0 * t;
        let dh10 = 3.0 * t.powi(2) - 4.0 * t + 1.0;
        let dh01 = -6.0 * t.powi(2) + 6.0 * t;
        let dh11 = 3.0 * t.powi(2) - 2.0 * t;
        let dv = (dh00 * y0 + h * dh10 * d0 + dh01 * y1 + h * dh11 * d1) / h;
        let d2h00 = 12.0 * t - 6.0;
        let d2h10 = 6.0 * t - 4.0;
        let d2h01 = -12.0 * t + 6.0;
        let d2h11 = 6.0 * t - 2.0;
        let d2v = (d2h00 * y0 + h * d2h10 * d0 + d2h01 * y1 + h * d2h11 * d1) / (h * h);
        (v, dv, d2v)
    }

    fn eval(&self, x: f64) -> f64 {
        self.hermite(x).0
    }

    fn eval_d(&self, x: f64) -> f64 {
        self.hermite(x).1
    }

    fn eval_d2(&self, x: f64) -> f64 {
        self.hermite(x).2
    }
}

/// Safeguarded Newton iteration with bisection fallback for a strictly
/// increasing function on [lo, hi].
pub(crate) fn invert_monotone(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    rel_tol: f64,
) -> Result<f64> {
    let flo = f(lo) - target;
    let fhi = f(hi) - target;
    if flo > 0.0 || fhi < 0.0 {
        return Err(CoreError::RootFind(format!(
            "target {target} not bracketed on [{lo}, {hi}] (f-target: {flo}, {fhi})"
        )));
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx.abs() <= rel_tol * (1.0 + target.abs()) {
            // polish once more via bisection bound check below
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let newton = x - fx / d;
        x = if d.is_finite() && d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= rel_tol * (1.0 + x.abs()) {
            return Ok(x);
        }
    }
    Ok(x)
}

/// Physical constants of a configuration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub g: f64,
    pub p_atm: f64,
    pub ell: f64,
    pub b: f64,
    pub l1: f64,
    pub l2: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub mu_bulk_plus: f64,
    pub mu_bulk_minus: f64,
    pub sigma_plus: f64,
    pub sigma_minus: f64,
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("g", self.g),
            ("p_atm", self.p_atm),
            ("ell", self.ell),
            ("b", self.b),
            ("l1", self.l1),
            ("l2", self.l2),
            ("mu_plus", self.mu_plus),
            ("mu_minus", self.mu_minus),
        ];
        for (name, v) in pos {
            if !(v > 0.0) {
                return Err(CoreError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.mu_bulk_plus < 0.0 || self.mu_bulk_minus < 0.0 {
            return Err(CoreError::InvalidParameter(
                "bulk viscosities must be nonnegative".into(),
            ));
        }
        if self.sigma_plus < 0.0 || self.sigma_minus < 0.0 {
            return Err(CoreError::InvalidParameter(
                "surface tensions must be nonnegative".into(),
            ));
        }
        let both_zero = self.sigma_plus == 0.0 && self.sigma_minus == 0.0;
        let both_pos = self.sigma_plus > 0.0 && self.sigma_minus > 0.0;
        if !(both_zero || both_pos) {
            return Err(CoreError::InvalidParameter(
                "surface tensions must be both zero or both positive".into(),
            ));
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI.powi(2) * self.l1 * self.l2
    }

    pub fn max_l_sq(&self) -> f64 {
        (self.l1 * self.l1).max(self.l2 * self.l2)
    }
}

/// Result of one admissibility condition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConditionCheck {
    pub passed: bool,
    /// The computed height bound (conditions 2 and 4; +∞ encoded as `null`
    /// in JSON via `f64::INFINITY`).
    pub bound: Option<f64>,
    pub detail: String,
}

/// Pass/fail for the four equilibrium admissibility conditions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub conditions: Vec<ConditionCheck>,
}

impl AdmissibilityReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<usize> {
        self.conditions.iter().position(|c| !c.passed).map(|i| i + 1)
    }
}

/// Check the four admissibility conditions:
/// 1. p_atm lies in the pressure range of P₊ (defines ρ̄₁);
/// 2. ℓ < (1/g)∫_{ρ̄₁}^{sup} P₊′(r)/r dr (upper layer fits);
/// 3. P₊(ρ⁺) lies in the pressure range of P₋ (defines ρ⁻);
/// 4. b < (1/g)∫_{ρ⁻}^{sup} P₋′(r)/r dr (lower layer fits).
pub fn check_admissibility(
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    params: &PhysicalParams,
) -> Result<AdmissibilityReport> {
    law_plus.validate()?;
    law_minus.validate()?;
    params.validate()?;
    let mut conditions = Vec::with_capacity(4);

    // Condition 1
    let (plo, phi) = law_plus.pressure_range();
    let cond1 = params.p_atm > plo && params.p_atm < phi;
    conditions.push(ConditionCheck {
        passed: cond1,
        bound: None,
        detail: format!(
            "p_atm = {} within upper pressure range ({plo}, {phi}): {cond1}",
            params.p_atm
        ),
    });
    if !cond1 {
        conditions.push(fail_dependent(2));
        conditions.push(fail_dependent(3));
        conditions.push(fail_dependent(4));
        return Ok(AdmissibilityReport { conditions });
    }
    let rho1 = law_plus.inverse_pressure(params.p_atm)?;

    // Condition 2
    let bound2 = law_plus.height_bound(rho1, params.g)?;
    let cond2 = params.ell < bound2;
    conditions.push(ConditionCheck {
        passed: cond2,
        bound: Some(bound2),
        detail: format!("ell = {} < upper height bound {bound2}: {cond2}", params.ell),
    });
    if !cond2 {
        conditions.push(fail_dependent(3));
        conditions.push(fail_dependent(4));
        return Ok(AdmissibilityReport { conditions });
    }

    // Condition 3
    let rho_plus = law_plus.enthalpy_inverse(rho1, params.g * params.ell)?;
    let p_iface = law_plus.pressure(rho_plus)?;
    let (qlo, qhi) = law_minus.pressure_range();
    let cond3 = p_iface > qlo && p_iface < qhi;
    conditions.push(ConditionCheck {
        passed: cond3,
        bound: None,
        detail: format!(
            "interface pressure {p_iface} within lower pressure range ({qlo}, {qhi}): {cond3}"
        ),
    });
    if !cond3 {
        conditions.push(fail_dependent(4));
        return Ok(AdmissibilityReport { conditions });
    }

    // Condition 4
    let rho_minus = law_minus.inverse_pressure(p_iface)?;
    let bound4 = law_minus.height_bound(rho_minus, params.g)?;
    let cond4 = params.b < bound4;
    conditions.push(ConditionCheck {
        passed: cond4,
        bound: Some(bound4),
        detail: format!("b = {} < lower height bound {bound4}: {cond4}", params.b),
    });
    Ok(AdmissibilityReport { conditions })
}

fn fail_dependent(i: usize) -> ConditionCheck {
    ConditionCheck {
        passed: false,
        bound: None,
        detail: format!("condition {i} skipped: a prerequisite condition failed"),
    }
}

/// The constructed equilibrium. Evaluators are exact (enthalpy inversion),
/// so downstream grids can sample the profile at arbitrary nodes; `samples_*`
/// hold the Chebyshev–Gauss–Lobatto sampling requested at build time.
#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    pub law_plus: PressureLaw,
    pub law_minus: PressureLaw,
    pub g: f64,
    pub ell: f64,
    pub b: f64,
    /// ρ̄₁ = ρ̄₊(ℓ) = P₊⁻¹(p_atm)
    pub rho1: f64,
    /// ρ⁺ = ρ̄₊(0)
    pub rho_plus_iface: f64,
    /// ρ⁻ = ρ̄₋(0)
    pub rho_minus_iface: f64,
    /// ⟦ρ̄⟧ = ρ⁺ − ρ⁻
    pub jump: f64,
    /// σ_c = ⟦ρ̄⟧ g max{L₁², L₂²} for ⟦ρ̄⟧ > 0, else 0.
    pub sigma_c: f64,
    pub mass_plus: f64,
    pub mass_minus: f64,
    pub samples_plus: Vec<(f64, f64)>,
    pub samples_minus: Vec<(f64, f64)>,
}

impl EquilibriumProfile {
    /// ρ̄₊(x₃) = h₊⁻¹(g(ℓ − x₃)) anchored at ρ̄₁, for x₃ ∈ [0, ℓ].
    pub fn rho_plus(&self, x3: f64) -> f64 {
        self.law_plus
            .enthalpy_inverse(self.rho1, self.g * (self.ell - x3))
            .expect("profile admissible by construction")
    }

    /// ρ̄₋(x₃) = h₋⁻¹(−g x₃) anchored at ρ⁻, for x₃ ∈ [−b, 0].
    pub fn rho_minus(&self, x3: f64) -> f64 {
        self.law_minus
            .enthalpy_inverse(self.rho_minus_iface, -self.g * x3)
            .expect("profile admissible by construction")
    }

    /// ρ̄₊′(x₃) = −g ρ̄₊ / P₊′(ρ̄₊), exact from the steady ODE.
    pub fn d_rho_plus(&self, x3: f64) -> f64 {
        let r = self.rho_plus(x3);
        -self.g * r / self.law_plus.dpressure(r).expect("in domain")
    }

    pub fn d_rho_minus(&self, x3: f64) -> f64 {
        let r = self.rho_minus(x3);
        -self.g * r / self.law_minus.dpressure(r).expect("in domain")
    }

    /// h±′(ρ̄±(x₃)) = P±′(ρ̄±)/ρ̄±, the coefficient in the linearized
    /// pressure term ∇(h′(ρ̄) q).
    pub fn h_prime_plus(&self, x3: f64) -> f64 {
        let r = self.rho_plus(x3);
        self.law_plus.dpressure(r).expect("in domain") / r
    }

    pub fn h_prime_minus(&self, x3: f64) -> f64 {
        let r = self.rho_minus(x3);
        self.law_minus.dpressure(r).expect("in domain") / r
    }

    /// ρ̄±″(x₃) by differentiating the steady ODE ρ̄′ = −gρ̄/P′(ρ̄):
    /// ρ̄″ = −g ρ̄′ (P′(ρ̄) − ρ̄ P″(ρ̄)) / P′(ρ̄)².
    pub fn d2_rho_plus(&self, x3: f64) -> f64 {
        let r = self.rho_plus(x3);
        let dr = self.d_rho_plus(x3);
        let p1 = self.law_plus.dpressure(r).expect("in domain");
        let p2 = self.law_plus.d2pressure(r).expect("in domain");
        -self.g * dr * (p1 - r * p2) / (p1 * p1)
    }

    pub fn d2_rho_minus(&self, x3: f64) -> f64 {
        let r = self.rho_minus(x3);
        let dr = self.d_rho_minus(x3);
        let p1 = self.law_minus.dpressure(r).expect("in domain");
        let p2 = self.law_minus.d2pressure(r).expect("in domain");
        -self.g * dr * (p1 - r * p2) / (p1 * p1)
    }

    /// P±′(ρ̄±(x₃)).
    pub fn p_prime_plus(&self, x3: f64) -> f64 {
        let r = self.rho_plus(x3);
        self.law_plus.dpressure(r).expect("in domain")
    }

    pub fn p_prime_minus(&self, x3: f64) -> f64 {
        let r = self.rho_minus(x3);
        self.law_minus.dpressure(r).expect("in domain")
    }
}

/// Construct the equilibrium profile; fails with the first violated
/// admissibility condition.
pub fn build_equilibrium(
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    params: &PhysicalParams,
    n_samples: usize,
) -> Result<EquilibriumProfile> {
    let report = check_admissibility(law_plus, law_minus, params)?;
    if let Some(cond) = report.first_failure() {
        return Err(CoreError::Admissibility {
            condition: cond,
            detail: report.conditions[cond - 1].detail.clone(),
        });
    }
    let rho1 = law_plus.inverse_pressure(params.p_atm)?;
    let rho_plus_iface = law_plus.enthalpy_inverse(rho1, params.g * params.ell)?;
    let p_iface = law_plus.pressure(rho_plus_iface)?;
    let rho_minus_iface = law_minus.inverse_pressure(p_iface)?;
    let jump = rho_plus_iface - rho_minus_iface;
    let sigma_c = (jump * params.g * params.max_l_sq()).max(0.0);

    let mut profile = EquilibriumProfile {
        law_plus: law_plus.clone(),
        law_minus: law_minus.clone(),
        g: params.g,
        ell: params.ell,
        b: params.b,
        rho1,
        rho_plus_iface,
        rho_minus_iface,
        jump,
        sigma_c,
        mass_plus: 0.0,
        mass_minus: 0.0,
        samples_plus: Vec::new(),
        samples_minus: Vec::new(),
    };
    let n = n_samples.max(8);
    profile.samples_plus = crate::spectral::cheb::nodes(n, 0.0, params.ell)
        .into_iter()
        .map(|x| (x, profile.rho_plus(x)))
        .collect();
    profile.samples_minus = crate::spectral::cheb::nodes(n, -params.b, 0.0)
        .into_iter()
        .map(|x| (x, profile.rho_minus(x)))
        .collect();
    let ((mp, _), (mm, _)) = equilibrium_masses(&profile, params)?;
    profile.mass_plus = mp;
    profile.mass_minus = mm;
    Ok(profile)
}

/// Equilibrium masses per layer, each by two routes: quadrature of
/// 4π²L₁L₂ ∫ ρ̄±, and the closed pressure-difference form
/// (4π²L₁L₂/g)·(P at bottom − P at top) obtained by integrating the steady
/// ODE. Returned as ((M₊_quadrature, M₊_closed), (M₋_quadrature, M₋_closed)).
pub fn equilibrium_masses(
    profile: &EquilibriumProfile,
    params: &PhysicalParams,
) -> Result<((f64, f64), (f64, f64))> {
    let area = params.area();
    let quad_plus = area
        * adaptive_simpson(
            |x| profile.rho_plus(x),
            0.0,
            params.ell,
            1e-12 * (1.0 + params.ell),
        );
    let quad_minus = area
        * adaptive_simpson(
            |x| profile.rho_minus(x),
            -params.b,
            0.0,
            1e-12 * (1.0 + params.b),
        );
    let p_iface = profile.law_plus.pressure(profile.rho_plus_iface)?;
    let closed_plus = area / params.g * (p_iface - params.p_atm);
    let p_bottom = profile
        .law_minus
        .pressure(profile.rho_minus(-params.b))?;
    let p_iface_minus = profile.law_minus.pressure(profile.rho_minus_iface)?;
    let closed_minus = area / params.g * (p_bottom - p_iface_minus);
    Ok(((quad_plus, closed_plus), (quad_minus, closed_minus)))
}

/// Inverse problem: given target masses, find layer heights (ℓ, b) by two
/// staged scalar root finds on the closed mass formulas. Fails if the search
/// leaves the admissible region.
pub fn heights_from_masses(
    law_plus: &PressureLaw,
    law_minus: &PressureLaw,
    params: &PhysicalParams,
    m_plus: f64,
    m_minus: f64,
) -> Result<(f64, f64)> {
    if !(m_plus > 0.0 && m_minus > 0.0) {
        return Err(CoreError::InvalidParameter(
            "target masses must be positive".into(),
        ));
    }
    law_plus.validate()?;
    law_minus.validate()?;
    let area = params.area();
    let rho1 = law_plus.inverse_pressure(params.p_atm)?;
    // M₊(ℓ) = (area/g)(P₊(h₊⁻¹(gℓ)) − p_atm), strictly increasing in ℓ.
    let mass_of_ell = |ell: f64| -> f64 {
        law_plus
            .enthalpy_inverse(rho1, params.g * ell)
            .and_then(|r| law_plus.pressure(r))
            .map(|p| area / params.g * (p - params.p_atm))
            .unwrap_or(f64::NAN)
    };
    let ell_cap = law_plus.height_bound(rho1, params.g)?;
    let mut hi = if ell_cap.is_finite() {
        ell_cap * (1.0 - 1e-9)
    } else {
        let mut h = 1.0;
        while mass_of_ell(h) < m_plus && h < 1e9 {
            h *= 2.0;
        }
        h
    };
    if !(mass_of_ell(hi) >= m_plus) {
        return Err(CoreError::Admissibility {
            condition: 2,
            detail: format!(
                "target upper mass {m_plus} not attainable: supremum mass {}",
                mass_of_ell(hi)
            ),
        });
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass_of_ell(mid) < m_plus {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let ell = 0.5 * (lo + hi);

    let rho_plus_iface = law_plus.enthalpy_inverse(rho1, params.g * ell)?;
    let p_iface = law_plus.pressure(rho_plus_iface)?;
    let (qlo, qhi) = law_minus.pressure_range();
    if !(p_iface > qlo && p_iface < qhi) {
        return Err(CoreError::Admissibility {
            condition: 3,
            detail: format!("interface pressure {p_iface} outside lower range ({qlo}, {qhi})"),
        });
    }
    let rho_minus_iface = law_minus.inverse_pressure(p_iface)?;
    let mass_of_b = |b: f64| -> f64 {
        law_minus
            .enthalpy_inverse(rho_minus_iface, params.g * b)
            .and_then(|r| law_minus.pressure(r))
            .map(|p| area / params.g * (p - p_iface))
            .unwrap_or(f64::NAN)
    };
    let b_cap = law_minus.height_bound(rho_minus_iface, params.g)?;
    let mut bhi = if b_cap.is_finite() {
        b_cap * (1.0 - 1e-9)
    } else {
        let mut h = 1.0;
        while mass_of_b(h) < m_minus && h < 1e9 {
            h *= 2.0;
        }
        h
    };
    if !(mass_of_b(bhi) >= m_minus) {
        return Err(CoreError::Admissibility {
            condition: 4,
            detail: format!(
                "target lower mass {m_minus} not attainable: supremum mass {}",
                mass_of_b(bhi)
            ),
        });
    }
    let mut blo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (blo + bhi);
        if mass_of_b(mid) < m_minus {
            blo = mid;
        } else {
            bhi = mid;
        }
    }
    Ok((ell, 0.5 * (blo + bhi)))
}
