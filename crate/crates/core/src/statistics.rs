//! Observable post-processing: equilibrium sampling, path-length histograms,
//! least-squares tail fits, MSD exponents and the Lévy/Brownian verdict.

use std::collections::BTreeMap;

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathway::FamilyParams;
use crate::rng::ParticleStream;
use crate::sde::ENDPOINT_NUDGE;
use crate::simulator::{MsdSeries, RunLengthLedger};

/// Default tail window on the counts, `y ∈ [1, 1000]`.
pub const DEFAULT_TAIL_WINDOW: (f64, f64) = (1.0, 1000.0);
/// Default bin width in mm.
pub const DEFAULT_BIN_WIDTH: f64 = 0.002;
/// Default r² margin separating the two tail models.
pub const DEFAULT_R2_MARGIN: f64 = 0.02;

#[derive(Debug, Clone)]
enum SamplerKind {
    Arcsine,
    Uniform,
    Beta(Beta<f64>),
}

/// Draws activities from the family equilibrium `Beta(θ+1, θ+1)`.
#[derive(Debug, Clone)]
pub struct EquilibriumSampler {
    kind: SamplerKind,
}

impl EquilibriumSampler {
    pub fn new(f: &FamilyParams) -> Result<Self> {
        if !(f.theta > -1.0) {
            return Err(Error::InvalidInput(format!(
                "equilibrium exponent must exceed -1, got {}",
                f.theta
            )));
        }
        let kind = if f.theta == -0.5 {
            SamplerKind::Arcsine
        } else if f.theta == 0.0 {
            SamplerKind::Uniform
        } else {
            let shape = f.theta + 1.0;
            SamplerKind::Beta(
                Beta::new(shape, shape).map_err(|e| Error::InvalidInput(e.to_string()))?,
            )
        };
        Ok(Self { kind })
    }

    pub fn sample(&self, stream: &mut ParticleStream) -> f64 {
        let a = match &self.kind {
            SamplerKind::Arcsine => {
                // Inverse of the arcsine CDF (2/π) asin(√a).
                let s = (std::f64::consts::FRAC_PI_2 * stream.open_uniform()).sin();
                s * s
            }
            SamplerKind::Uniform => stream.open_uniform(),
            SamplerKind::Beta(b) => b.sample(stream.rng_mut()),
        };
        a.clamp(ENDPOINT_NUDGE, 1.0 - ENDPOINT_NUDGE)
    }
}

/// One draw from the family equilibrium.
pub fn sample_equilibrium(f: &FamilyParams, stream: &mut ParticleStream) -> Result<f64> {
    Ok(EquilibriumSampler::new(f)?.sample(stream))
}

/// CDF of the arcsine law, `(2/π) asin(√a)`.
pub fn arcsine_cdf(a: f64) -> f64 {
    std::f64::consts::FRAC_2_PI * a.clamp(0.0, 1.0).sqrt().asin()
}

/// Kolmogorov–Smirnov distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

/// Histogram of run lengths on bins `(iΔx, (i+1)Δx]` centred at `(i+½)Δx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PldHistogram {
    pub bin_width: f64,
    pub counts: Vec<u64>,
    /// Runs longer than the last bin.
    pub overflow: u64,
}

impl PldHistogram {
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.bin_width
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum::<u64>() + self.overflow
    }
}

/// Bin count `[10 T]` used for a horizon of `T` seconds.
pub fn default_bin_count(total_time: f64) -> usize {
    (10.0 * total_time).floor() as usize
}

/// Index of the half-open bin `(iΔx, (i+1)Δx]` holding `length`.
///
/// Lengths within 1e-9 (relative) of a bin edge are placed in the bin the edge
/// closes, so lengths that are integer multiples of `Δx` up to rounding land
/// where exact arithmetic would put them.
fn bin_index(length: f64, dx: f64) -> usize {
    let q = length / dx;
    let k = (q - 1e-9 * q.max(1.0)).ceil();
    (k.max(1.0) - 1.0) as usize
}

pub fn build_pld_histogram(
    ledger: &RunLengthLedger,
    dx: f64,
    max_bins: usize,
) -> Result<PldHistogram> {
    histogram_lengths(ledger.lengths(), dx, max_bins)
}

/// Histograms an arbitrary sequence of positive lengths.
pub fn histogram_lengths<I: IntoIterator<Item = f64>>(
    lengths: I,
    dx: f64,
    max_bins: usize,
) -> Result<PldHistogram> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::InvalidInput(format!(
            "bin width must be > 0, got {dx}"
        )));
    }
    if max_bins == 0 {
        return Err(Error::InvalidInput(
            "histogram needs at least one bin".into(),
        ));
    }
    let mut counts = vec![0u64; max_bins];
    let mut overflow = 0u64;
    let mut seen = 0usize;
    for l in lengths {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::InvalidData(format!(
                "run length must be finite and > 0, got {l}"
            )));
        }
        seen += 1;
        let i = bin_index(l, dx);
        match counts.get_mut(i) {
            Some(c) => *c += 1,
            None => overflow += 1,
        }
    }
    if seen == 0 {
        return Err(Error::EmptyData("run-length ledger is empty".into()));
    }
    Ok(PldHistogram {
        bin_width: dx,
        counts,
        overflow,
    })
}

/// Representative of all bins sharing one count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapsedPoint {
    /// Mean bin centre of the group, in mm.
    pub length: f64,
    pub count: u64,
    /// Number of bins averaged into this point.
    pub bins: usize,
}

/// Averages the centres of all nonzero bins with identical counts.
pub fn collapse_by_count(h: &PldHistogram) -> Vec<CollapsedPoint> {
    let mut groups: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for (i, &y) in h.counts.iter().enumerate() {
        if y > 0 {
            let entry = groups.entry(y).or_insert((0.0, 0));
            entry.0 += h.center(i);
            entry.1 += 1;
        }
    }
    groups
        .into_iter()
        .map(|(count, (sum, bins))| CollapsedPoint {
            length: sum / bins as f64,
            count,
            bins,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// `log y` against `log l`: power law.
    LogLog,
    /// `log y` against `l`: exponential.
    SemiLog,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub mode: FitMode,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    pub fit_window: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ordinary_least_squares(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "least squares needs at least 2 points, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&xi, &yi) in x.iter().zip(y) {
        let (dx, dy) = (xi - mx, yi - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::InsufficientData(
            "all abscissae coincide; slope undefined".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        let ss_res: f64 = x
            .iter()
            .zip(y)
            .map(|(&xi, &yi)| (yi - intercept - slope * xi).powi(2))
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Least-squares line through the collapsed tail, restricted to counts in
/// `window` (inclusive).
pub fn fit_tail(points: &[CollapsedPoint], window: (f64, f64), mode: FitMode) -> Result<TailFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| (p.count as f64) >= window.0 && (p.count as f64) <= window.1)
        .map(|p| {
            let x = match mode {
                FitMode::LogLog => p.length.ln(),
                FitMode::SemiLog => p.length,
            };
            (x, (p.count as f64).ln())
        })
        .unzip();
    if xs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs at least 2 points with counts in [{}, {}], got {}",
            window.0,
            window.1,
            xs.len()
        )));
    }
    let fit = ordinary_least_squares(&xs, &ys)?;
    Ok(TailFit {
        mode,
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points_used: xs.len(),
        fit_window: window,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Classification {
    LevyWalk { alpha: f64 },
    Brownian,
    Inconclusive,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Classification::LevyWalk { .. } => "levywalk",
            Classification::Brownian => "brownian",
            Classification::Inconclusive => "inconclusive",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Classification::LevyWalk { alpha } => write!(f, "levywalk (alpha = {alpha:.4})"),
            other => f.write_str(other.label()),
        }
    }
}

/// Power law with `α ∈ (2, 3)` winning by `margin` in r² means a Lévy walk;
/// an exponential winning, or a power law with `α ≥ 3`, means Brownian.
pub fn classify_decay(loglog: &TailFit, semilog: &TailFit, margin: f64) -> Classification {
    let alpha = -loglog.slope;
    let lead = loglog.r_squared - semilog.r_squared;
    if lead >= margin && alpha > 2.0 && alpha < 3.0 {
        Classification::LevyWalk { alpha }
    } else if lead <= -margin || (lead >= margin && alpha >= 3.0) {
        Classification::Brownian
    } else {
        Classification::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MsdFit {
    pub slope: f64,
    /// `2 / slope`, the Lévy index `1 + μ` implied by `MSD ∼ t^{2/(1+μ)}`.
    pub fractional_power: f64,
    pub window: (f64, f64),
    pub points_used: usize,
}

/// Log–log least-squares slope of the MSD over `window` (inclusive).
pub fn fit_msd_exponent(series: &MsdSeries, window: (f64, f64)) -> Result<MsdFit> {
    if !(window.0 < window.1) {
        return Err(Error::InvalidInput(format!(
            "MSD fit window must satisfy t_lo < t_hi, got [{}, {}]",
            window.0, window.1
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&t, &m) in series.times.iter().zip(&series.msd) {
        if t >= window.0 && t <= window.1 {
            if !(m > 0.0) || !(t > 0.0) {
                return Err(Error::InvalidData(format!(
                    "MSD must be positive inside the fit window, got {m} at t = {t}"
                )));
            }
            xs.push(t.ln());
            ys.push(m.ln());
        }
    }
    let fit = ordinary_least_squares(&xs, &ys)?;
    if !(fit.slope > 0.0) {
        return Err(Error::InvalidData(format!(
            "MSD slope must be positive, got {}",
            fit.slope
        )));
    }
    Ok(MsdFit {
        slope: fit.slope,
        fractional_power: 2.0 / fit.slope,
        window,
        points_used: xs.len(),
    })
}
