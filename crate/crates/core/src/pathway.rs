//! Coefficient functions of the internal activity variable `a ∈ (0, 1)`.
//!
//! Two entry points live here. The methylation-based pathway maps a
//! methylation level and ligand concentration to receptor activity and gives
//! the biochemical tumbling rate. The symmetric power-law family supplies the
//! drift, noise, diffusion, equilibrium and tumbling rate actually used by the
//! particle simulator. The family's tumbling rate `(2a)^β` is the pathway rate
//! with `λ₀ = 0`, `τ = 1`, `a₀ = 1/2` and `H = β`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use statrs::function::beta::beta;

/// Step used by the central finite-difference fallbacks.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathwayParams {
    /// Receptor cooperativity `N`.
    pub cooperativity: f64,
    /// Methylation sensitivity `α`.
    pub methylation_sensitivity: f64,
    /// Reference methylation level `m₀`.
    pub reference_methylation: f64,
    /// Dissociation constant of the inactive receptor, `K_I`.
    pub k_inactive: f64,
    /// Dissociation constant of the active receptor, `K_A`.
    pub k_active: f64,
    /// Preferred activity `a₀`.
    pub preferred_activity: f64,
    /// Hill coefficient `H`.
    pub hill: f64,
    /// Mean run time `τ` in seconds.
    pub mean_run_time: f64,
    /// Adaptation rate `k_R` in 1/s.
    pub adaptation_rate: f64,
    /// Rotational diffusion offset `λ₀` in 1/s.
    pub rotational_offset: f64,
}

impl PathwayParams {
    /// Validates and builds the parameter block.
    ///
    /// There are deliberately no defaults for `K_I`, `K_A` and `m₀`.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        cooperativity: f64,
        methylation_sensitivity: f64,
        reference_methylation: f64,
        k_inactive: f64,
        k_active: f64,
        preferred_activity: f64,
        hill: f64,
        mean_run_time: f64,
        adaptation_rate: f64,
        rotational_offset: f64,
    ) -> Result<Self> {
        let p = Self {
            cooperativity,
            methylation_sensitivity,
            reference_methylation,
            k_inactive,
            k_active,
            preferred_activity,
            hill,
            mean_run_time,
            adaptation_rate,
            rotational_offset,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            (self.cooperativity > 0.0, "pathway.N", "must be > 0"),
            (
                self.methylation_sensitivity > 0.0,
                "pathway.alpha",
                "must be > 0",
            ),
            (
                self.reference_methylation.is_finite(),
                "pathway.m0",
                "must be finite",
            ),
            (self.k_inactive > 0.0, "pathway.KI", "must be > 0"),
            (self.k_active > 0.0, "pathway.KA", "must be > 0"),
            (
                self.preferred_activity > 0.0 && self.preferred_activity < 1.0,
                "pathway.a0",
                "must lie in (0, 1)",
            ),
            (self.hill.is_finite(), "pathway.H", "must be finite"),
            (self.mean_run_time > 0.0, "pathway.tau", "must be > 0"),
            (self.adaptation_rate >= 0.0, "pathway.kR", "must be >= 0"),
            (
                self.rotational_offset >= 0.0,
                "pathway.lambda0",
                "must be >= 0",
            ),
        ];
        for (ok, field, msg) in checks {
            if !ok {
                return Err(Error::config(field, msg));
            }
        }
        Ok(())
    }

    /// Free-energy offset `f₀([L]) = ln((1 + L/K_I) / (1 + L/K_A))`.
    pub fn ligand_offset(&self, ligand: f64) -> f64 {
        ((1.0 + ligand / self.k_inactive) / (1.0 + ligand / self.k_active)).ln()
    }
}

/// Receptor activity `a = 1 / (1 + exp(N(−α(m − m₀) + f₀([L]))))`.
pub fn activity_from_methylation(p: &PathwayParams, methylation: f64, ligand: f64) -> Result<f64> {
    if !methylation.is_finite() {
        return Err(Error::InvalidInput(format!(
            "methylation level must be finite, got {methylation}"
        )));
    }
    if !(ligand >= 0.0) || !ligand.is_finite() {
        return Err(Error::InvalidInput(format!(
            "ligand concentration must be finite and >= 0, got {ligand}"
        )));
    }
    let exponent = p.cooperativity
        * (-p.methylation_sensitivity * (methylation - p.reference_methylation)
            + p.ligand_offset(ligand));
    let a = 1.0 / (1.0 + exponent.exp());
    // Saturation in f64 would otherwise return the closed endpoints.
    Ok(a.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Biochemical tumbling rate `Λ(a) = λ₀ + τ⁻¹ (a / a₀)^H`.
pub fn full_tumbling_rate(p: &PathwayParams, activity: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&activity) {
        return Err(Error::InvalidInput(format!(
            "activity must lie in [0, 1], got {activity}"
        )));
    }
    Ok(p.rotational_offset + (activity / p.preferred_activity).powf(p.hill) / p.mean_run_time)
}

/// Exponents and adaptation time of the symmetric power-law family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    /// Equilibrium exponent `θ`: `Q₀ ∝ (a(1−a))^θ`.
    pub theta: f64,
    /// Diffusion exponent `n`: `D ∝ (a(1−a))^n`.
    pub n: f64,
    /// Tumbling exponent `β`: `Λ = (2a)^β`.
    pub beta: f64,
    /// Adaptation time `T_a` in seconds.
    #[serde(rename = "Ta")]
    pub adaptation_time: f64,
}

impl FamilyParams {
    pub fn new(theta: f64, n: f64, beta: f64, adaptation_time: f64) -> Result<Self> {
        let f = Self {
            theta,
            n,
            beta,
            adaptation_time,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.adaptation_time > 0.0) || !self.adaptation_time.is_finite() {
            return Err(Error::config("family.Ta", "must be finite and > 0"));
        }
        if !(self.beta > 0.0) || !self.beta.is_finite() {
            return Err(Error::config("family.beta", "must be finite and > 0"));
        }
        if !(self.n >= 0.0) || !self.n.is_finite() {
            return Err(Error::config("family.n", "must be finite and >= 0"));
        }
        if !(self.theta > -1.0) || !self.theta.is_finite() {
            return Err(Error::config(
                "family.theta",
                "must be finite and > -1 for an integrable equilibrium",
            ));
        }
        Ok(())
    }

    /// Predicted fractional exponent `μ = (2 − n)/β`.
    pub fn mu(&self) -> f64 {
        (2.0 - self.n) / self.beta
    }
}

/// Bundled evaluation of the three quantities one SDE step needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdeTerms {
    pub drift: f64,
    pub noise: f64,
    pub noise_derivative: f64,
}

/// Coefficient functions of the activity dynamics.
///
/// Implementors must supply drift `F`, noise `Σ`, the normalized equilibrium
/// `Q₀` and the tumbling rate `Λ`. The remaining quantities default to
/// `D = Σ²/2` and central finite differences; those fallbacks are approximate
/// and are reported through [`CoefficientSet::has_exact_derivatives`].
pub trait CoefficientSet: Sync {
    fn drift(&self, a: f64) -> f64;
    fn noise(&self, a: f64) -> f64;
    fn equilibrium(&self, a: f64) -> f64;
    fn tumbling_rate(&self, a: f64) -> f64;

    fn diffusion(&self, a: f64) -> f64 {
        let s = self.noise(a);
        0.5 * s * s
    }

    fn noise_derivative(&self, a: f64) -> f64 {
        central_difference(|x| self.noise(x), a)
    }

    fn diffusion_derivative(&self, a: f64) -> f64 {
        central_difference(|x| self.diffusion(x), a)
    }

    /// `∂ₐQ₀ / Q₀`.
    fn equilibrium_log_derivative(&self, a: f64) -> f64 {
        central_difference(|x| self.equilibrium(x), a) / self.equilibrium(a)
    }

    /// Normalization constant `c₀` of the equilibrium.
    fn normalization(&self) -> f64 {
        1.0
    }

    fn has_exact_derivatives(&self) -> bool {
        false
    }

    fn sde_terms(&self, a: f64) -> SdeTerms {
        SdeTerms {
            drift: self.drift(a),
            noise: self.noise(a),
            noise_derivative: self.noise_derivative(a),
        }
    }
}

fn central_difference<F: Fn(f64) -> f64>(f: F, a: f64) -> f64 {
    let h = FD_STEP.min(0.5 * a).min(0.5 * (1.0 - a)).max(f64::EPSILON);
    (f(a + h) - f(a - h)) / (2.0 * h)
}

/// Closed-form coefficients of the symmetric power-law family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyCoefficients {
    params: FamilyParams,
    c0: f64,
    noise_scale: f64,
}

impl FamilyCoefficients {
    pub fn params(&self) -> &FamilyParams {
        &self.params
    }

    #[inline]
    fn g(a: f64) -> f64 {
        a * (1.0 - a)
    }
}

/// `c₀ = ∫₀¹ (a(1−a))^θ da = B(θ+1, θ+1)`, finite for `θ > −1`.
pub fn equilibrium_normalization(theta: f64) -> Result<f64> {
    if !(theta > -1.0) || !theta.is_finite() {
        return Err(Error::config(
            "family.theta",
            format!("must be finite and > -1, got {theta}"),
        ));
    }
    Ok(beta(theta + 1.0, theta + 1.0))
}

/// Builds the family coefficient set.
pub fn family_coefficients(f: &FamilyParams) -> Result<FamilyCoefficients> {
    f.validate()?;
    let c0 = equilibrium_normalization(f.theta)?;
    Ok(FamilyCoefficients {
        params: *f,
        c0,
        noise_scale: (2.0 / f.adaptation_time).sqrt(),
    })
}

impl CoefficientSet for FamilyCoefficients {
    #[inline]
    fn drift(&self, a: f64) -> f64 {
        let p = &self.params;
        (p.n + p.theta) / p.adaptation_time * Self::g(a).powf(p.n - 1.0) * (1.0 - 2.0 * a)
    }

    #[inline]
    fn noise(&self, a: f64) -> f64 {
        self.noise_scale * Self::g(a).powf(0.5 * self.params.n)
    }

    fn equilibrium(&self, a: f64) -> f64 {
        Self::g(a).powf(self.params.theta) / self.c0
    }

    #[inline]
    fn tumbling_rate(&self, a: f64) -> f64 {
        (2.0 * a).powf(self.params.beta)
    }

    fn diffusion(&self, a: f64) -> f64 {
        Self::g(a).powf(self.params.n) / self.params.adaptation_time
    }

    fn noise_derivative(&self, a: f64) -> f64 {
        let n = self.params.n;
        self.noise_scale * 0.5 * n * Self::g(a).powf(0.5 * n - 1.0) * (1.0 - 2.0 * a)
    }

    fn diffusion_derivative(&self, a: f64) -> f64 {
        let p = &self.params;
        p.n / p.adaptation_time * Self::g(a).powf(p.n - 1.0) * (1.0 - 2.0 * a)
    }

    fn equilibrium_log_derivative(&self, a: f64) -> f64 {
        self.params.theta * (1.0 - 2.0 * a) / Self::g(a)
    }

    fn normalization(&self) -> f64 {
        self.c0
    }

    fn has_exact_derivatives(&self) -> bool {
        true
    }

    #[inline]
    fn sde_terms(&self, a: f64) -> SdeTerms {
        let p = &self.params;
        let g = Self::g(a);
        let tilt = 1.0 - 2.0 * a;
        let ln_g = g.ln();
        let half_n = 0.5 * p.n;
        let g_half_n = (half_n * ln_g).exp();
        let g_n_minus_1 = ((p.n - 1.0) * ln_g).exp();
        let noise = self.noise_scale * g_half_n;
        SdeTerms {
            drift: (p.n + p.theta) / p.adaptation_time * g_n_minus_1 * tilt,
            noise,
            // Σ′ = Σ · (n/2) (1 − 2a) / g
            noise_derivative: noise * half_n * tilt / g,
        }
    }
}

/// `F − D·(∂ₐQ₀/Q₀) − ∂ₐD`, which vanishes when `F` and `D` are consistent
/// with the equilibrium `Q₀`.
pub fn consistency_residual<C: CoefficientSet + ?Sized>(c: &C, a: f64) -> Result<f64> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Domain(format!(
            "consistency residual needs a strictly inside (0, 1), got {a}"
        )));
    }
    Ok(c.drift(a) - c.diffusion(a) * c.equilibrium_log_derivative(a) - c.diffusion_derivative(a))
}

/// Residual divided by the largest of its three terms, so that `1e-10`
/// means cancellation to ten digits. Zero when all terms vanish.
pub fn relative_consistency_residual<C: CoefficientSet + ?Sized>(c: &C, a: f64) -> Result<f64> {
    let r = consistency_residual(c, a)?;
    let scale = c
        .drift(a)
        .abs()
        .max((c.diffusion(a) * c.equilibrium_log_derivative(a)).abs())
        .max(c.diffusion_derivative(a).abs());
    Ok(if scale > 0.0 {
        r.abs() / scale
    } else {
        r.abs()
    })
}

/// Outcome of checking the long-jump parameter conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub eligible: bool,
    pub mu: f64,
    /// Open interval `(1 + (θ+1)/β, 1 + (2−n)/β)` of admissible `s`.
    pub s_interval: (f64, f64),
    /// Human-readable statements of each violated inequality.
    pub violations: Vec<String>,
}

impl RegimeReport {
    pub fn label(&self) -> &'static str {
        if self.eligible {
            "levy-eligible"
        } else {
            "not-eligible"
        }
    }

    /// Whether a given time-scale exponent `s` lies strictly inside the window.
    pub fn admits(&self, s: f64) -> bool {
        self.eligible && s > self.s_interval.0 && s < self.s_interval.1
    }
}

/// Checks `−1 < θ < 1 − n < β − 1` and `μ = (2 − n)/β ∈ (0, 1)`.
pub fn levy_regime_check(f: &FamilyParams) -> RegimeReport {
    let mu = f.mu();
    let mut violations = Vec::new();
    if !(f.theta > -1.0) {
        violations.push(format!("-1 < theta violated (theta = {})", f.theta));
    }
    if !(f.theta < 1.0 - f.n) {
        violations.push(format!(
            "theta < 1 - n violated (theta = {}, 1 - n = {})",
            f.theta,
            1.0 - f.n
        ));
    }
    if !(1.0 - f.n < f.beta - 1.0) {
        violations.push(format!(
            "1 - n < beta - 1 violated (1 - n = {}, beta - 1 = {})",
            1.0 - f.n,
            f.beta - 1.0
        ));
    }
    if !(mu > 0.0 && mu < 1.0) {
        violations.push(format!("mu = (2 - n)/beta in (0, 1) violated (mu = {mu})"));
    }
    RegimeReport {
        eligible: violations.is_empty(),
        mu,
        s_interval: (1.0 + (f.theta + 1.0) / f.beta, 1.0 + mu),
        violations,
    }
}
