//! End-to-end operations behind the command-line tool, each returning a
//! report that renders both as JSON and as aligned text.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{AnalysisSection, RunConfig};
use crate::error::{Error, Result};
use crate::io::{RunInfo, RunManifest, ScalingReport};
use crate::limit_theory::{
    compute_b0, compute_c1, compute_c2, compute_nu_at, fit_fractional_diffusivity, flux_exponents,
    histogram_positions, l1_distance, mu_theoretical, physical_diffusivity, solve_fractional_heat,
    FractionalField, LimitConvention, CONVENTION_NOTE,
};
use crate::pathway::{levy_regime_check, FamilyParams};
use crate::simulator::{
    config_scaling, derive_scaling, simulate, MsdSeries, RunLengthLedger, SimulationOutput,
};
use crate::statistics::{
    build_pld_histogram, classify_decay, collapse_by_count, fit_msd_exponent, fit_tail,
    Classification, FitMode, MsdFit, TailFit,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Validates `config`, runs the simulator and assembles the manifest.
pub fn run_simulation(
    config: &RunConfig,
    progress: bool,
) -> Result<(SimulationOutput, RunManifest)> {
    let mut cfg = config.validate()?;
    cfg.report_progress = progress;
    let scaling = config_scaling(&cfg, config.scaling.length, config.scaling.t_tumble)?;
    let regime = levy_regime_check(&cfg.family);
    let start = Instant::now();
    let out = simulate(&cfg)?;
    let manifest = RunManifest {
        config: config.clone(),
        run: RunInfo {
            seed: cfg.seed,
            version: VERSION.to_string(),
            runtime_s: start.elapsed().as_secs_f64(),
        },
        report: ScalingReport::new(&scaling, regime.label()),
    };
    Ok((out, manifest))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PldReport {
    pub runs: usize,
    pub bin_width: f64,
    pub bins: usize,
    pub overflow: u64,
    pub collapsed_points: usize,
    pub r2_margin: f64,
    pub loglog: TailFit,
    pub semilog: TailFit,
    pub classification: String,
    /// Tail exponent of the power law when the verdict is a Lévy walk.
    pub alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub pld: PldReport,
    pub msd: Option<MsdFit>,
}

impl AnalysisReport {
    pub fn classification(&self) -> &str {
        &self.pld.classification
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let p = &self.pld;
        let mut s = String::new();
        let _ = writeln!(s, "path-length distribution");
        let _ = writeln!(s, "  runs               {}", p.runs);
        let _ = writeln!(
            s,
            "  bins               {} x {} mm (overflow {})",
            p.bins, p.bin_width, p.overflow
        );
        let _ = writeln!(s, "  collapsed points   {}", p.collapsed_points);
        for fit in [&p.loglog, &p.semilog] {
            let name = match fit.mode {
                FitMode::LogLog => "loglog ",
                FitMode::SemiLog => "semilog",
            };
            let _ = writeln!(
                s,
                "  {name} fit        slope {:.6}  r2 {:.6}  points {}",
                fit.slope, fit.r_squared, fit.points_used
            );
        }
        let _ = writeln!(s, "  classification     {}", p.classification);
        if let Some(alpha) = p.alpha {
            let _ = writeln!(s, "  alpha              {alpha:.6}");
        }
        if let Some(m) = &self.msd {
            let _ = writeln!(s, "mean squared displacement");
            let _ = writeln!(s, "  window             [{}, {}] s", m.window.0, m.window.1);
            let _ = writeln!(s, "  slope              {:.6}", m.slope);
            let _ = writeln!(s, "  fractional power   {:.6}", m.fractional_power);
        }
        s
    }
}

/// Fits both tail models, classifies the decay and fits the MSD exponent.
pub fn analyze(
    ledger: &RunLengthLedger,
    msd: Option<&MsdSeries>,
    analysis: &AnalysisSection,
    total_time: f64,
) -> Result<AnalysisReport> {
    analysis.validate()?;
    let bins = analysis.bins_for(total_time);
    let hist = build_pld_histogram(ledger, analysis.dx, bins)?;
    let points = collapse_by_count(&hist);
    let window = (analysis.tail_window[0], analysis.tail_window[1]);
    let loglog = fit_tail(&points, window, FitMode::LogLog)?;
    let semilog = fit_tail(&points, window, FitMode::SemiLog)?;
    let verdict = classify_decay(&loglog, &semilog, analysis.r2_margin);
    let alpha = match verdict {
        Classification::LevyWalk { alpha } => Some(alpha),
        _ => None,
    };
    let msd = msd
        .map(|m| fit_msd_exponent(m, (analysis.fit_window[0], analysis.fit_window[1])))
        .transpose()?;
    Ok(AnalysisReport {
        pld: PldReport {
            runs: ledger.count(),
            bin_width: analysis.dx,
            bins,
            overflow: hist.overflow,
            collapsed_points: points.len(),
            r2_margin: analysis.r2_margin,
            loglog,
            semilog,
            classification: verdict.label().to_string(),
            alpha,
        },
        msd,
    })
}

/// Inputs of the limit computation beyond the family exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitsRequest {
    pub family: FamilyParams,
    /// Cell speed in units of the speed scale.
    pub v0_scaled: f64,
    pub dimension: usize,
    /// Replaces `(2 − n)/β` when set.
    pub mu_override: Option<f64>,
    /// Length scale (mm), tumbling time (s) and speed scale (mm/s) used to
    /// express `ν` in physical units.
    pub physical: Option<(f64, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitsReport {
    pub family: FamilyParams,
    pub v0_scaled: f64,
    pub dimension: usize,
    pub mu: f64,
    pub mu_in_range: bool,
    pub s_interval: (f64, f64),
    pub eligible: bool,
    pub verdict: String,
    pub violations: Vec<String>,
    pub b0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub nu0: Option<f64>,
    pub nu: Option<f64>,
    /// `ν` in mm^(1+μ)/s.
    pub nu_physical: Option<f64>,
    pub convention: String,
    /// Why any quantity above is missing.
    pub notes: Vec<String>,
}

impl LimitsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let f = &self.family;
        let _ = writeln!(
            s,
            "family             theta {}  n {}  beta {}  Ta {} s",
            f.theta, f.n, f.beta, f.adaptation_time
        );
        let range = if self.mu_in_range {
            "in (0, 1)"
        } else {
            "OUT OF (0, 1)"
        };
        let _ = writeln!(s, "mu                 {}  ({range})", short(self.mu));
        let _ = writeln!(
            s,
            "s-interval         ({}, {})",
            short(self.s_interval.0),
            short(self.s_interval.1)
        );
        let show = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.10}"));
        let _ = writeln!(s, "B0                 {}", show(self.b0));
        let _ = writeln!(s, "c1                 {}", show(self.c1));
        let _ = writeln!(s, "c2                 {}", show(self.c2));
        let _ = writeln!(s, "nu0                {}", show(self.nu0));
        let _ = writeln!(s, "nu                 {}", show(self.nu));
        if let Some(p) = self.nu_physical {
            let _ = writeln!(s, "nu (mm^{:.2}/s)     {p:.6e}", 1.0 + self.mu);
        }
        let _ = writeln!(s, "verdict            {}", self.verdict);
        for v in &self.violations {
            let _ = writeln!(s, "  violated: {v}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        let _ = writeln!(s, "convention         {}", self.convention);
        s
    }
}

/// Twelve significant digits with trailing zeros dropped, so values such as
/// `(2 − 1.1)/2` print as `0.45`.
pub fn short(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let decimals = (11 - x.abs().log10().floor() as i32).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Evaluates `μ`, the `s` window, eligibility and, where the integrals
/// converge, `B₀`, `c₁`, `c₂`, `ν₀` and `ν`. Divergent quantities are left
/// empty with a note rather than failing the whole report.
pub fn limits(req: &LimitsRequest) -> Result<LimitsReport> {
    let f = req.family;
    f.validate()?;
    let regime = levy_regime_check(&f);
    let mu = match req.mu_override {
        Some(m) => m,
        None => mu_theoretical(&f)?.value,
    };
    let mut notes = Vec::new();
    let mut keep = |r: Result<f64>, name: &str| match r {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    };
    let nu = compute_nu_at(
        &f,
        mu,
        req.v0_scaled,
        req.dimension,
        LimitConvention::default(),
    );
    let (b0, c1, nu0, nu_value) = match nu {
        Ok(r) => (Some(r.b0), Some(r.c1), Some(r.nu0), Some(r.nu)),
        Err(e) => {
            let b0 = keep(compute_b0(&f), "B0");
            let beta1 = flux_exponents(&f).1;
            let c1 = keep(compute_c1(1.0 + beta1 * (1.0 - mu), beta1), "c1");
            if b0.is_some() && c1.is_some() {
                keep(Err(e), "nu");
            }
            (b0, c1, None, None)
        }
    };
    let beta2 = flux_exponents(&f).1;
    let c2 = keep(compute_c2(1.0 + beta2 * (1.0 - mu), beta2), "c2");
    let nu_physical = match (nu_value, req.physical) {
        (Some(nu), Some((length, t_tumble, speed))) => {
            let epsilon = speed * t_tumble / length;
            let s = (t_tumble / f.adaptation_time).ln() / epsilon.ln();
            let scaling = derive_scaling(epsilon, s, mu, t_tumble, speed)?;
            Some(physical_diffusivity(nu, mu, &scaling))
        }
        _ => None,
    };
    Ok(LimitsReport {
        family: f,
        v0_scaled: req.v0_scaled,
        dimension: req.dimension,
        mu,
        mu_in_range: mu > 0.0 && mu < 1.0,
        s_interval: regime.s_interval,
        eligible: regime.eligible,
        verdict: regime.label().to_string(),
        violations: regime.violations,
        b0,
        c1,
        c2,
        nu0,
        nu: nu_value,
        nu_physical,
        convention: CONVENTION_NOTE.to_string(),
        notes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffusivitySource {
    /// Taken from a limits report or given explicitly.
    Given,
    /// Fitted to the interquartile range of the particle positions.
    Fitted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub time_s: f64,
    pub mu: f64,
    /// Diffusivity in mm^(1+μ)/s.
    pub nu: f64,
    pub nu_source: DiffusivitySource,
    pub particles: usize,
    pub half_width_mm: f64,
    pub points: usize,
    pub l1: f64,
}

impl CompareReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "time               {} s", self.time_s);
        let _ = writeln!(s, "mu                 {}", self.mu);
        let source = match self.nu_source {
            DiffusivitySource::Given => "given",
            DiffusivitySource::Fitted => "fitted",
        };
        let _ = writeln!(
            s,
            "nu                 {:.6e} mm^{:.2}/s ({source})",
            self.nu,
            1.0 + self.mu
        );
        let _ = writeln!(s, "particles          {}", self.particles);
        let _ = writeln!(
            s,
            "grid               {} points on [-{}, {}) mm",
            self.points, self.half_width_mm, self.half_width_mm
        );
        let _ = writeln!(s, "L1 distance        {:.6}", self.l1);
        s
    }
}

/// Grid half-width: four times the expected spread plus the largest
/// observed excursion, so wrap-around only touches the far tails.
pub fn default_half_width(positions: &[f64], nu: f64, mu: f64, t: f64) -> f64 {
    let spread = (nu * t).powf(1.0 / (1.0 + mu));
    let reach = positions.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    4.0 * spread + reach
}

/// L¹ distance between the particle density and the point-source solution
/// of the fractional heat equation at time `t`. With `nu = None` the
/// diffusivity is fitted to the positions first.
pub fn compare(
    positions: &[f64],
    mu: f64,
    nu: Option<f64>,
    t: f64,
    half_width: Option<f64>,
    points: usize,
) -> Result<CompareReport> {
    if positions.is_empty() {
        return Err(Error::EmptyData("no particle positions".into()));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("time must be > 0, got {t}")));
    }
    let reach = positions.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let (nu, source) = match nu {
        Some(v) => (v, DiffusivitySource::Given),
        None => {
            let box_width = half_width.unwrap_or(4.0 * reach.max(f64::MIN_POSITIVE));
            (
                fit_fractional_diffusivity(positions, mu, t, box_width, points)?,
                DiffusivitySource::Fitted,
            )
        }
    };
    let half_width = half_width.unwrap_or_else(|| default_half_width(positions, nu, mu, t));
    let init = FractionalField::point_mass(half_width, points)?;
    let field = solve_fractional_heat(&init, nu, mu, t)?;
    let empirical = histogram_positions(positions, &field)?;
    Ok(CompareReport {
        time_s: t,
        mu,
        nu,
        nu_source: source,
        particles: positions.len(),
        half_width_mm: half_width,
        points,
        l1: l1_distance(&empirical, &field)?,
    })
}
