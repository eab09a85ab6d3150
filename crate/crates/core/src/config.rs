//! Run configuration: four TOML sections, key-level overrides, validation.
//!
//! ```toml
//! [family]
//! theta = -0.5
//! n = 1.1
//! beta = 2.0
//! Ta = 200.0
//!
//! [sim]
//! particles = 10000
//! dt = 0.1
//! T = 300.0
//! seed = 42
//!
//! [scaling]
//! L = 1.0
//! T_lambda = 1.0
//!
//! [analysis]
//! dx = 0.002
//! fit_window = [30.0, 300.0]
//! ```
//!
//! Missing keys take the Case I values. A run manifest is a valid config: its
//! `[run]` and `[report]` sections are ignored on load.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathway::{family_coefficients, FamilyParams};
use crate::sde::{BoundaryPolicy, Scheme};
use crate::simulator::{
    case_preset, msd_record_grid, Case, SimConfig, PRESET_DT, PRESET_HALFWIDTH, PRESET_HORIZON,
    PRESET_LENGTH, PRESET_PARTICLES, PRESET_SPEED, PRESET_T_TUMBLE,
};
use crate::statistics::{
    default_bin_count, DEFAULT_BIN_WIDTH, DEFAULT_R2_MARGIN, DEFAULT_TAIL_WINDOW,
};

/// Default MSD fit window in seconds.
pub const DEFAULT_FIT_WINDOW: [f64; 2] = [30.0, 300.0];

/// Sections that a manifest adds on top of a config.
const MANIFEST_SECTIONS: [&str; 2] = ["run", "report"];

/// Every overridable key and the section that owns it.
pub const KEYS: &[(&str, &str)] = &[
    ("family", "theta"),
    ("family", "n"),
    ("family", "beta"),
    ("family", "Ta"),
    ("sim", "particles"),
    ("sim", "dt"),
    ("sim", "T"),
    ("sim", "v0"),
    ("sim", "domain_halfwidth"),
    ("sim", "seed"),
    ("sim", "scheme"),
    ("sim", "boundary"),
    ("sim", "clamp_margin"),
    ("sim", "dimension"),
    ("sim", "msd_interval"),
    ("sim", "activity_bins"),
    ("sim", "workers"),
    ("scaling", "L"),
    ("scaling", "T_lambda"),
    ("analysis", "dx"),
    ("analysis", "tail_window"),
    ("analysis", "fit_window"),
    ("analysis", "r2_margin"),
    ("analysis", "max_bins"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilySection {
    pub theta: f64,
    pub n: f64,
    pub beta: f64,
    #[serde(rename = "Ta")]
    pub adaptation_time: f64,
}

impl Default for FamilySection {
    fn default() -> Self {
        case_preset(Case::I).0.into()
    }
}

impl From<FamilyParams> for FamilySection {
    fn from(f: FamilyParams) -> Self {
        Self {
            theta: f.theta,
            n: f.n,
            beta: f.beta,
            adaptation_time: f.adaptation_time,
        }
    }
}

impl FamilySection {
    pub fn params(&self) -> FamilyParams {
        FamilyParams {
            theta: self.theta,
            n: self.n,
            beta: self.beta,
            adaptation_time: self.adaptation_time,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    #[default]
    Reflect,
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimSection {
    pub particles: usize,
    pub dt: f64,
    #[serde(rename = "T")]
    pub total_time: f64,
    /// Cell speed in mm/s.
    pub v0: f64,
    pub domain_halfwidth: f64,
    pub seed: u64,
    pub scheme: Scheme,
    pub boundary: BoundaryKind,
    /// Used only with `boundary = "clamp"`.
    pub clamp_margin: f64,
    pub dimension: usize,
    /// Spacing of the MSD record times in seconds.
    pub msd_interval: f64,
    pub activity_bins: usize,
    /// Worker threads. Has no effect on any output.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            particles: PRESET_PARTICLES,
            dt: PRESET_DT,
            total_time: PRESET_HORIZON,
            v0: PRESET_SPEED,
            domain_halfwidth: PRESET_HALFWIDTH,
            seed: 0,
            scheme: Scheme::Milstein,
            boundary: BoundaryKind::Reflect,
            clamp_margin: 1e-4,
            dimension: 1,
            msd_interval: 1.0,
            activity_bins: 50,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    /// Length scale in mm.
    #[serde(rename = "L")]
    pub length: f64,
    /// Mean tumbling time in seconds.
    #[serde(rename = "T_lambda")]
    pub t_tumble: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            length: PRESET_LENGTH,
            t_tumble: PRESET_T_TUMBLE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Path-length bin width in mm.
    pub dx: f64,
    /// Count window of the tail fits.
    pub tail_window: [f64; 2],
    /// Time window of the MSD fit in seconds.
    pub fit_window: [f64; 2],
    pub r2_margin: f64,
    /// Path-length bins; defaults to `[10 T]`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bins: Option<usize>,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            dx: DEFAULT_BIN_WIDTH,
            tail_window: [DEFAULT_TAIL_WINDOW.0, DEFAULT_TAIL_WINDOW.1],
            fit_window: DEFAULT_FIT_WINDOW,
            r2_margin: DEFAULT_R2_MARGIN,
            max_bins: None,
        }
    }
}

impl AnalysisSection {
    pub fn bins_for(&self, total_time: f64) -> usize {
        self.max_bins
            .unwrap_or_else(|| default_bin_count(total_time))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dx > 0.0) || !self.dx.is_finite() {
            return Err(Error::config("analysis.dx", "must be finite and > 0"));
        }
        for (field, w) in [
            ("analysis.tail_window", self.tail_window),
            ("analysis.fit_window", self.fit_window),
        ] {
            if !(w[0] > 0.0 && w[0] < w[1] && w[1].is_finite()) {
                return Err(Error::config(field, format!("need 0 < lo < hi, got {w:?}")));
            }
        }
        if !(self.r2_margin >= 0.0) {
            return Err(Error::config("analysis.r2_margin", "must be >= 0"));
        }
        if self.max_bins == Some(0) {
            return Err(Error::config("analysis.max_bins", "must be >= 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub family: FamilySection,
    pub sim: SimSection,
    pub scaling: ScalingSection,
    pub analysis: AnalysisSection,
}

impl RunConfig {
    pub fn preset(case: Case) -> Self {
        let (family, cfg) = case_preset(case);
        Self {
            family: family.into(),
            sim: SimSection {
                particles: cfg.num_particles,
                dt: cfg.dt,
                total_time: cfg.total_time,
                v0: cfg.speed,
                domain_halfwidth: cfg.domain_halfwidth,
                ..SimSection::default()
            },
            ..Self::default()
        }
    }

    /// Parses TOML text. `source` names the input in error messages.
    pub fn from_toml_str(text: &str, source: &str) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config {
            field: source.to_string(),
            message: e.message().to_string(),
        })?;
        for section in MANIFEST_SECTIONS {
            table.remove(section);
        }
        Self::from_table(table, source)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    fn from_table(table: toml::Table, source: &str) -> Result<Self> {
        Self::deserialize(toml::Value::Table(table)).map_err(|e| Error::Config {
            field: source.to_string(),
            message: e.message().trim().to_string(),
        })
    }

    pub fn to_table(&self) -> toml::Table {
        match toml::Value::try_from(self) {
            Ok(toml::Value::Table(t)) => t,
            _ => unreachable!("config always serializes to a table"),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Overrides one key, given bare (`dt`) or qualified (`sim.dt`). The
    /// value is read as a TOML value; a bare word is taken as a string and
    /// `lo,hi` as a two-element array.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let (section, name) = resolve_key(key)?;
        let field = format!("{section}.{name}");
        let parsed = parse_value(value);
        if name == "seed" && value.trim().parse::<u64>().is_ok() && parsed.is_str() {
            return Err(Error::config(&field, "must be at most 9223372036854775807"));
        }
        let mut table = self.to_table();
        let entry = table
            .entry(section)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        if let toml::Value::Table(t) = entry {
            t.insert(name.to_string(), parsed);
        }
        *self = Self::from_table(table, &field).map_err(|e| match e {
            Error::Config { message, .. } => Error::Config {
                field: field.clone(),
                message,
            },
            other => other,
        })?;
        Ok(())
    }

    pub fn family_params(&self) -> FamilyParams {
        self.family.params()
    }

    pub fn boundary(&self) -> Result<BoundaryPolicy> {
        match self.sim.boundary {
            BoundaryKind::Reflect => Ok(BoundaryPolicy::Reflect),
            BoundaryKind::Clamp => BoundaryPolicy::clamp(self.sim.clamp_margin),
        }
    }

    /// Simulator configuration, without validation.
    pub fn sim_config(&self) -> Result<SimConfig> {
        let s = &self.sim;
        if !(s.msd_interval > 0.0) || !s.msd_interval.is_finite() {
            return Err(Error::config("sim.msd_interval", "must be finite and > 0"));
        }
        if !(s.msd_interval >= s.dt) {
            return Err(Error::config("sim.msd_interval", "must be >= dt"));
        }
        if !(s.total_time > 0.0) || !s.total_time.is_finite() {
            return Err(Error::config("sim.T", "must be finite and > 0"));
        }
        // Manifests store the seed as a TOML integer, which is signed.
        if s.seed > i64::MAX as u64 {
            return Err(Error::config(
                "sim.seed",
                "must be at most 9223372036854775807",
            ));
        }
        Ok(SimConfig {
            num_particles: s.particles,
            dt: s.dt,
            total_time: s.total_time,
            speed: s.v0,
            domain_halfwidth: s.domain_halfwidth,
            family: self.family_params(),
            scheme: s.scheme,
            boundary: self.boundary()?,
            seed: s.seed,
            msd_record_times: msd_record_grid(s.msd_interval, s.total_time),
            dimension: s.dimension,
            record_run_lengths: true,
            activity_bins: s.activity_bins,
            workers: s.workers,
            report_progress: false,
        })
    }

    /// Checks every section and returns the simulator configuration.
    pub fn validate(&self) -> Result<SimConfig> {
        self.family_params().validate()?;
        let cfg = self.sim_config()?;
        cfg.validate_with(&family_coefficients(&cfg.family)?)?;
        for (field, v) in [
            ("scaling.L", self.scaling.length),
            ("scaling.T_lambda", self.scaling.t_tumble),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        self.analysis.validate()?;
        Ok(cfg)
    }
}

fn resolve_key(key: &str) -> Result<(&'static str, &'static str)> {
    let (section, name) = match key.split_once('.') {
        Some((s, n)) => (Some(s), n),
        None => (None, key),
    };
    KEYS.iter()
        .find(|(s, n)| *n == name && section.is_none_or(|sec| sec == *s))
        .copied()
        .ok_or_else(|| Error::config(key, "unknown configuration key"))
}

fn parse_value(raw: &str) -> toml::Value {
    let raw = raw.trim();
    let candidate = if raw.contains(',') && !raw.starts_with('[') {
        format!("[{raw}]")
    } else {
        raw.to_string()
    };
    toml::from_str::<toml::Table>(&format!("v = {candidate}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}
