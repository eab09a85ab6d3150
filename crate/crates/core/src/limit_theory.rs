//! Constants of the fractional diffusion limit and a spectral solver for the
//! limiting equation `∂ₜρ + ν(−Δ)^{(1+μ)/2}ρ = 0`.
//!
//! All constants use the nondimensional family `D̃(a) = k (a(1−a))ⁿ` with
//! `k = 1` unless a [`LimitConvention`] says otherwise, the normalized
//! equilibrium `Q₀`, and unit prefactors in the small-activity laws. The
//! adaptation time does not enter.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::pathway::{equilibrium_normalization, FamilyParams};
use crate::quadrature::{gauss_kronrod, integrate_activity, tanh_sinh, Tolerance};
use crate::simulator::ScalingParams;

/// Human-readable statement of the unit convention, echoed in reports.
pub const CONVENTION_NOTE: &str = "nondimensional: D~(a) = k (a(1-a))^n with k = diffusion_scale \
(Ta-free), Q0 normalized to unit mass, unit prefactors c_q = c_d = 1, Lambda ~ a^beta; \
v0 is the scaled speed v0/V0; nu_physical = nu L^(1+mu) / T_t";

/// Negative density tolerated after spectral truncation.
pub const NEGATIVE_DENSITY_TOLERANCE: f64 = 1e-12;

/// Fraction of spectral energy in the top third of modes above which the solver warns.
pub const ALIASING_THRESHOLD: f64 = 1e-10;

/// Activity below which `χ₀` is replaced by its leading power law; the
/// relative error of that law is of order `a`.
const SMALL_ACTIVITY: f64 = 1e-14;

const INNER_TOL: Tolerance = Tolerance::new(1e-13, 1e-13);
const OUTER_TOL: Tolerance = Tolerance::new(1e-12, 1e-11);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitConvention {
    /// Prefactor `k` of the nondimensional diffusion `D̃`.
    pub diffusion_scale: f64,
}

impl Default for LimitConvention {
    fn default() -> Self {
        Self {
            diffusion_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mu {
    pub value: f64,
    /// `μ ∈ (0, 1)`.
    pub admissible: bool,
}

/// `μ = (2 − n)/β`.
pub fn mu_theoretical(f: &FamilyParams) -> Result<Mu> {
    if !(f.beta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta must be > 0, got {}",
            f.beta
        )));
    }
    let value = (2.0 - f.n) / f.beta;
    Ok(Mu {
        value,
        admissible: value > 0.0 && value < 1.0,
    })
}

/// Quadrature rule used for the nested integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    /// Adaptive Gauss–Kronrod after `a = sin²(u/2)`.
    GaussKronrod,
    /// Tanh–sinh on the two halves of the interval, each reflected so its
    /// singular end sits at zero.
    TanhSinh,
}

/// Dual weight `χ₀(a) = ∫₀ᵃ da′ / (D̃ Q₀)(a′)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chi0 {
    c0: f64,
    theta: f64,
    /// `n + θ`; the integrand behaves like `a^{−(n+θ)}` at both ends.
    singularity: f64,
    scale: f64,
}

impl Chi0 {
    pub fn new(f: &FamilyParams, convention: LimitConvention) -> Result<Self> {
        f.validate()?;
        let singularity = f.n + f.theta;
        if !(singularity < 1.0) {
            return Err(Error::Divergence(format!(
                "chi0 requires n + theta < 1, got n + theta = {singularity}"
            )));
        }
        if !(convention.diffusion_scale > 0.0) {
            return Err(Error::InvalidInput("diffusion scale must be > 0".into()));
        }
        Ok(Self {
            c0: equilibrium_normalization(f.theta)?,
            theta: f.theta,
            singularity,
            scale: convention.diffusion_scale,
        })
    }

    /// `1 / (D̃ Q₀)` written in terms of `a` and `1 − a`.
    #[inline]
    fn weight(&self, a: f64, b: f64) -> f64 {
        self.c0 / self.scale * (a * b).powf(-self.singularity)
    }

    /// Normalized equilibrium in terms of `a` and `1 − a`.
    #[inline]
    fn equilibrium(&self, a: f64, b: f64) -> f64 {
        (a * b).powf(self.theta) / self.c0
    }

    /// `Q₀ χ₀` at `a`. Below `SMALL_ACTIVITY` the leading law is used so the
    /// product stays finite when `a^θ` alone would overflow.
    fn weighted_equilibrium(&self, a: f64, b: f64) -> f64 {
        if a < SMALL_ACTIVITY {
            let exponent = self.theta + self.leading_exponent();
            return self.leading_prefactor() / self.c0 * a.powf(exponent) * b.powf(self.theta);
        }
        self.equilibrium(a, b) * self.eval(a).unwrap_or(f64::NAN)
    }

    pub fn normalization(&self) -> f64 {
        self.c0
    }

    /// Value at `a` with the Gauss–Kronrod rule.
    pub fn eval(&self, a: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("chi0 needs a in [0, 1], got {a}")));
        }
        if a == 0.0 {
            return Ok(0.0);
        }
        Ok(integrate_activity(|x, y| self.weight(x, y), 0.0, a, INNER_TOL)?.value)
    }

    /// `∫₀ᵇ w(x, 1 − x) dx` by tanh–sinh, accurate for small `b`.
    fn lower_tanh_sinh(&self, b: f64) -> Result<f64> {
        Ok(tanh_sinh(|x| self.weight(x, 1.0 - x), 0.0, b, INNER_TOL)?.value)
    }

    /// `∫₀ᵇ w(1 − x, x) dx`, the mass of `[1 − b, 1]`.
    fn upper_tanh_sinh(&self, b: f64) -> Result<f64> {
        Ok(tanh_sinh(|x| self.weight(1.0 - x, x), 0.0, b, INNER_TOL)?.value)
    }

    /// Value at `a` with the tanh–sinh rule.
    pub fn eval_tanh_sinh(&self, a: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("chi0 needs a in [0, 1], got {a}")));
        }
        if a <= 0.5 {
            self.lower_tanh_sinh(a)
        } else {
            Ok(self.lower_tanh_sinh(0.5)? + self.upper_tanh_sinh(0.5)?
                - self.upper_tanh_sinh(1.0 - a)?)
        }
    }

    /// Prefactor of the small-activity law `χ₀ ≈ C₀ a^{1−n−θ}`.
    pub fn leading_prefactor(&self) -> f64 {
        self.c0 / (self.scale * (1.0 - self.singularity))
    }

    /// Exponent `1 − n − θ` of the small-activity law.
    pub fn leading_exponent(&self) -> f64 {
        1.0 - self.singularity
    }
}

/// `χ₀(a)` under the default convention.
pub fn chi0(f: &FamilyParams, a: f64) -> Result<f64> {
    Chi0::new(f, LimitConvention::default())?.eval(a)
}

/// `B₀ = ∫₀¹ Q₀ χ₀ da` under the default convention.
pub fn compute_b0(f: &FamilyParams) -> Result<f64> {
    compute_b0_with(f, LimitConvention::default(), Rule::GaussKronrod)
}

pub fn compute_b0_with(f: &FamilyParams, convention: LimitConvention, rule: Rule) -> Result<f64> {
    let chi = Chi0::new(f, convention)?;
    match rule {
        Rule::GaussKronrod => {
            let est =
                integrate_activity(|a, b| chi.weighted_equilibrium(a, b), 0.0, 1.0, OUTER_TOL)?;
            Ok(est.value)
        }
        Rule::TanhSinh => {
            let lower_half = chi.lower_tanh_sinh(0.5)?;
            let total = lower_half + chi.upper_tanh_sinh(0.5)?;
            let lower = tanh_sinh(
                |x| chi.equilibrium(x, 1.0 - x) * chi.lower_tanh_sinh(x).unwrap_or(f64::NAN),
                0.0,
                0.5,
                OUTER_TOL,
            )?;
            let upper = tanh_sinh(
                |x| {
                    chi.equilibrium(1.0 - x, x)
                        * (total - chi.upper_tanh_sinh(x).unwrap_or(f64::NAN))
                },
                0.0,
                0.5,
                OUTER_TOL,
            )?;
            Ok(lower.value + upper.value)
        }
    }
}

fn flux_integral(p: f64, power: i32) -> Result<f64> {
    // ∫₀^∞ z^{p−1} (1+z²)^{−k} dz, split at 1. On [0,1] put z = t^{1/p};
    // on [1,∞) put z = 1/w then w = t^{1/q} with q = 2k − p. Both pieces
    // become bounded integrands on [0,1].
    let q = 2.0 * power as f64 - p;
    let tol = Tolerance::new(1e-15, 1e-14);
    let head = gauss_kronrod(|t| (1.0 + t.powf(2.0 / p)).powi(-power), 0.0, 1.0, tol)?.value / p;
    let tail = gauss_kronrod(|t| (1.0 + t.powf(2.0 / q)).powi(-power), 0.0, 1.0, tol)?.value / q;
    Ok(head + tail)
}

/// `c₁ = (1/β₁) ∫₀^∞ z^{(α−1)/β₁ − 1} / (1 + z²) dz`.
pub fn compute_c1(alpha: f64, beta1: f64) -> Result<f64> {
    if !(beta1 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta1 must be > 0, got {beta1}"
        )));
    }
    if !(alpha - 1.0 > 0.0 && alpha - 1.0 < 2.0 * beta1) {
        return Err(Error::Divergence(format!(
            "c1 requires 0 < alpha - 1 < 2 beta1, got alpha = {alpha}, beta1 = {beta1}"
        )));
    }
    Ok(flux_integral((alpha - 1.0) / beta1, 1)? / beta1)
}

/// `c₂ = (1/β₂) ∫₀^∞ z^{(α−1)/β₂ − 1} / (1 + z²)² dz`.
pub fn compute_c2(alpha: f64, beta2: f64) -> Result<f64> {
    if !(beta2 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "beta2 must be > 0, got {beta2}"
        )));
    }
    if !(alpha - 1.0 > 0.0 && alpha - 1.0 < 4.0 * beta2) {
        return Err(Error::Divergence(format!(
            "c2 requires 0 < alpha - 1 < 4 beta2, got alpha = {alpha}, beta2 = {beta2}"
        )));
    }
    Ok(flux_integral((alpha - 1.0) / beta2, 2)? / beta2)
}

pub fn compute_c1_c2(alpha: f64, beta: f64) -> Result<(f64, f64)> {
    Ok((compute_c1(alpha, beta)?, compute_c2(alpha, beta)?))
}

/// Closed form `(π/2) / (β₁ sin(πp/2))` with `p = (α−1)/β₁`.
pub fn c1_closed_form(alpha: f64, beta1: f64) -> f64 {
    let p = (alpha - 1.0) / beta1;
    std::f64::consts::FRAC_PI_2 / (beta1 * (std::f64::consts::FRAC_PI_2 * p).sin())
}

/// Exponents `(α, β₁) = (β + n − 1, β)` of the small-activity flux integral.
pub fn flux_exponents(f: &FamilyParams) -> (f64, f64) {
    (f.beta + f.n - 1.0, f.beta)
}

/// `E|ω₁|^p` for `ω` uniform on the unit sphere in `d` dimensions.
fn sphere_moment(p: f64, d: usize) -> f64 {
    if d == 1 {
        return 1.0;
    }
    let d = d as f64;
    (ln_gamma(0.5 * d) + ln_gamma(0.5 * (p + 1.0))
        - 0.5 * std::f64::consts::PI.ln()
        - ln_gamma(0.5 * (d + p)))
    .exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuReport {
    pub c1: f64,
    pub nu0: f64,
    pub b0: f64,
    pub nu: f64,
}

/// `ν₀ = ∫_V c₁ |v₁|^{1+μ} dv` over the normalized velocity measure and
/// `ν = B₀/ν₀`.
pub fn compute_nu(f: &FamilyParams, v0_scaled: f64, dimension: usize) -> Result<NuReport> {
    compute_nu_with(f, v0_scaled, dimension, LimitConvention::default())
}

pub fn compute_nu_with(
    f: &FamilyParams,
    v0_scaled: f64,
    dimension: usize,
    convention: LimitConvention,
) -> Result<NuReport> {
    let mu = mu_theoretical(f)?;
    compute_nu_at(f, mu.value, v0_scaled, dimension, convention)
}

/// `ν₀` and `ν` with the fractional exponent `μ` given explicitly. The flux
/// integral is taken at `(α − 1)/β₁ = 1 − μ`, which is what the family
/// exponents give when `μ` is the theoretical value.
pub fn compute_nu_at(
    f: &FamilyParams,
    mu: f64,
    v0_scaled: f64,
    dimension: usize,
    convention: LimitConvention,
) -> Result<NuReport> {
    if !(v0_scaled > 0.0) || !v0_scaled.is_finite() {
        return Err(Error::InvalidInput(format!(
            "scaled speed must be > 0, got {v0_scaled}"
        )));
    }
    if dimension == 0 {
        return Err(Error::InvalidInput("dimension must be >= 1".into()));
    }
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::Divergence(format!("mu = {mu} outside (0, 1)")));
    }
    let beta1 = flux_exponents(f).1;
    let c1 = compute_c1(1.0 + beta1 * (1.0 - mu), beta1)?;
    let power = 1.0 + mu;
    let nu0 = c1 * v0_scaled.powf(power) * sphere_moment(power, dimension);
    let b0 = compute_b0_with(f, convention, Rule::GaussKronrod)?;
    Ok(NuReport {
        c1,
        nu0,
        b0,
        nu: b0 / nu0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitQuantities {
    pub mu: f64,
    #[serde(skip)]
    pub chi0: Option<Chi0>,
    pub b0: f64,
    pub c1: f64,
    pub c2: f64,
    pub nu0: f64,
    pub nu: f64,
    pub convention: LimitConvention,
}

pub fn limit_quantities(
    f: &FamilyParams,
    v0_scaled: f64,
    dimension: usize,
) -> Result<LimitQuantities> {
    let convention = LimitConvention::default();
    let nu = compute_nu_with(f, v0_scaled, dimension, convention)?;
    let (alpha, beta) = flux_exponents(f);
    Ok(LimitQuantities {
        mu: mu_theoretical(f)?.value,
        chi0: Some(Chi0::new(f, convention)?),
        b0: nu.b0,
        c1: nu.c1,
        c2: compute_c2(alpha, beta)?,
        nu0: nu.nu0,
        nu: nu.nu,
        convention,
    })
}

/// Converts a nondimensional diffusivity to mm^{1+μ}/s via `ν L^{1+μ} / T_t`.
pub fn physical_diffusivity(nu: f64, mu: f64, scaling: &ScalingParams) -> f64 {
    nu * scaling.length.powf(1.0 + mu) / scaling.t_observation
}

/// Density sampled on the periodic grid `x_j = −X + jh`, `h = 2X/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalField {
    pub half_width: f64,
    pub values: Vec<f64>,
}

impl FractionalField {
    pub fn new(half_width: f64, values: Vec<f64>) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidInput(format!(
                "half-width must be > 0, got {half_width}"
            )));
        }
        if values.len() < 2 || !values.len().is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "grid size must be a power of two >= 2, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("field values must be finite".into()));
        }
        Ok(Self { half_width, values })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(half_width: f64, points: usize, f: F) -> Result<Self> {
        let h = 2.0 * half_width / points as f64;
        Self::new(
            half_width,
            (0..points).map(|j| f(-half_width + j as f64 * h)).collect(),
        )
    }

    /// Normalized Gaussian of the given mean and variance.
    pub fn gaussian(half_width: f64, points: usize, mean: f64, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidInput(format!(
                "variance must be > 0, got {variance}"
            )));
        }
        let norm = 1.0 / (2.0 * std::f64::consts::PI * variance).sqrt();
        Self::from_fn(half_width, points, |x| {
            norm * (-(x - mean).powi(2) / (2.0 * variance)).exp()
        })
    }

    /// Approximate unit point mass at zero: a Gaussian two grid cells wide,
    /// the narrowest whose spectrum stays below the aliasing threshold.
    pub fn point_mass(half_width: f64, points: usize) -> Result<Self> {
        let h = 2.0 * half_width / points as f64;
        Self::gaussian(half_width, points, 0.0, 4.0 * h * h)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.values.len() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_width + j as f64 * self.spacing()
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.spacing()
    }

    pub fn mean(&self) -> f64 {
        let h = self.spacing();
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| self.x(j) * v * h)
            .sum::<f64>()
            / self.mass()
    }

    pub fn variance(&self) -> f64 {
        let h = self.spacing();
        let m = self.mean();
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| (self.x(j) - m).powi(2) * v * h)
            .sum::<f64>()
            / self.mass()
    }

    /// Position below which a fraction `p` of the mass lies, with each
    /// sample's mass spread uniformly over its cell.
    pub fn quantile(&self, p: f64) -> f64 {
        let h = self.spacing();
        let total = self.mass();
        let target = p.clamp(0.0, 1.0) * total;
        let mut acc = 0.0;
        for (j, v) in self.values.iter().enumerate() {
            let cell = v.max(0.0) * h;
            if acc + cell >= target && cell > 0.0 {
                let frac = (target - acc) / cell;
                return self.x(j) - 0.5 * h + frac * h;
            }
            acc += cell;
        }
        self.half_width
    }

    pub fn interquartile_range(&self) -> f64 {
        self.quantile(0.75) - self.quantile(0.25)
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Discrete Fourier coefficients in FFT order.
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        FftPlanner::new()
            .plan_fft_forward(buf.len())
            .process(&mut buf);
        buf
    }

    /// Share of spectral energy carried by modes with `|k| > M/3`.
    pub fn top_band_fraction(&self) -> f64 {
        let spec = self.spectrum();
        let m = spec.len();
        let (mut top, mut total) = (0.0, 0.0);
        for (k, c) in spec.iter().enumerate() {
            let e = c.norm_sqr();
            total += e;
            if signed_mode(k, m).unsigned_abs() as f64 > m as f64 / 3.0 {
                top += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            top / total
        }
    }
}

fn signed_mode(k: usize, m: usize) -> i64 {
    if k <= m / 2 {
        k as i64
    } else {
        k as i64 - m as i64
    }
}

/// Exact-in-time spectral propagation: mode `ξ` is damped by
/// `exp(−ν|ξ|^{1+μ} t)`.
pub fn solve_fractional_heat(
    init: &FractionalField,
    nu: f64,
    mu: f64,
    t: f64,
) -> Result<FractionalField> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(Error::InvalidInput(format!("nu must be > 0, got {nu}")));
    }
    if !(mu > 0.0 && mu <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "mu must lie in (0, 1], got {mu}"
        )));
    }
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("time must be >= 0, got {t}")));
    }
    let top = init.top_band_fraction();
    if top > ALIASING_THRESHOLD {
        log::warn!("initial data carries {top:e} of its spectral energy in the top third of modes");
    }
    if t == 0.0 {
        return Ok(init.clone());
    }
    let m = init.len();
    let mut planner = FftPlanner::new();
    let mut buf: Vec<Complex64> = init
        .values
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    planner.plan_fft_forward(m).process(&mut buf);
    let dk = std::f64::consts::PI / init.half_width;
    let power = 1.0 + mu;
    for (k, c) in buf.iter_mut().enumerate() {
        let xi = dk * signed_mode(k, m).unsigned_abs() as f64;
        *c *= (-nu * xi.powf(power) * t).exp() / m as f64;
    }
    planner.plan_fft_inverse(m).process(&mut buf);
    FractionalField::new(init.half_width, buf.iter().map(|c| c.re).collect())
}

/// Periodic histogram of positions on the field's grid, normalized to unit mass.
pub fn histogram_positions(positions: &[f64], like: &FractionalField) -> Result<FractionalField> {
    if positions.is_empty() {
        return Err(Error::EmptyData("no particle positions".into()));
    }
    let m = like.len();
    let h = like.spacing();
    let period = 2.0 * like.half_width;
    let mut counts = vec![0.0; m];
    for &x in positions {
        if !x.is_finite() {
            return Err(Error::InvalidData(format!("non-finite position {x}")));
        }
        let shifted = (x + like.half_width + 0.5 * h).rem_euclid(period);
        let j = ((shifted / h) as usize).min(m - 1);
        counts[j] += 1.0;
    }
    let scale = 1.0 / (positions.len() as f64 * h);
    FractionalField::new(
        like.half_width,
        counts.into_iter().map(|c| c * scale).collect(),
    )
}

/// L¹ distance between two densities on the same grid after normalizing both
/// to unit mass.
pub fn l1_distance(p: &FractionalField, q: &FractionalField) -> Result<f64> {
    if p.len() != q.len() || (p.half_width - q.half_width).abs() > 1e-12 * p.half_width {
        return Err(Error::Consistency(
            "densities live on different grids".into(),
        ));
    }
    let (mp, mq) = (p.mass(), q.mass());
    if !(mp > 0.0) || !(mq > 0.0) {
        return Err(Error::Consistency(format!(
            "densities must carry positive mass, got {mp} and {mq}"
        )));
    }
    let h = p.spacing();
    let (np, nq): (Vec<f64>, Vec<f64>) = p
        .values
        .iter()
        .zip(&q.values)
        .map(|(a, b)| (a / mp, b / mq))
        .unzip();
    for (label, v) in [("first", &np), ("second", &nq)] {
        let mass = v.iter().sum::<f64>() * h;
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::Consistency(format!(
                "{label} density has mass {mass} after normalization"
            )));
        }
    }
    Ok(np.iter().zip(&nq).map(|(a, b)| (a - b).abs()).sum::<f64>() * h)
}

/// L¹ distance between the empirical density of `positions` and `field`.
pub fn compare_density(positions: &[f64], field: &FractionalField) -> Result<f64> {
    let empirical = histogram_positions(positions, field)?;
    l1_distance(&empirical, field)
}

/// Diffusivity whose point-source solution at time `t` has the same
/// interquartile range as `positions`.
pub fn fit_fractional_diffusivity(
    positions: &[f64],
    mu: f64,
    t: f64,
    half_width: f64,
    points: usize,
) -> Result<f64> {
    let grid = FractionalField::point_mass(half_width, points)?;
    let target = histogram_positions(positions, &grid)?.interquartile_range();
    if !(target > 0.0) {
        return Err(Error::InvalidData(
            "positions have zero interquartile range".into(),
        ));
    }
    // The width scales as (νt)^{1/(1+μ)} for a point source; iterate to
    // absorb the finite width of the discrete initial datum.
    let mut nu = 1.0;
    for _ in 0..6 {
        let iqr = solve_fractional_heat(&grid, nu, mu, t)?.interquartile_range();
        nu *= (target / iqr).powf(1.0 + mu);
    }
    Ok(nu)
}
