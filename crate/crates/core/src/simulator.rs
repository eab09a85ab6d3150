//! Individual-based run-and-tumble model with an internal activity variable.
//!
//! Each step of each particle runs, in this order:
//! 1. tumble with probability `½Λ(a)Δt` (d = 1, velocity reversal) or
//!    `Λ(a)Δt` (d > 1, uniform redraw of the direction), closing the current
//!    run;
//! 2. advect `x ← x + vΔt` with the post-tumble velocity;
//! 3. advance the activity with the configured SDE scheme.
//!
//! Particles are simulated independently in fixed-size chunks and the chunk
//! results are reduced in chunk order, so outputs are bitwise identical for
//! any number of worker threads.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathway::{family_coefficients, levy_regime_check, CoefficientSet, FamilyParams};
use crate::rng::ParticleStream;
use crate::sde::{BoundaryPolicy, Scheme, StepScheme};
use crate::statistics::EquilibriumSampler;

/// Largest supported spatial dimension.
pub const MAX_DIMENSION: usize = 3;

const CHUNK_SIZE: usize = 64;

/// Characteristic scales linking the physical model to its scaled form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub epsilon: f64,
    pub s: f64,
    pub mu: f64,
    /// Observation time `T_t` in seconds.
    pub t_observation: f64,
    /// Adaptation time `T_a` in seconds.
    pub t_adaptation: f64,
    /// Mean tumbling time `T_λ` in seconds.
    pub t_tumble: f64,
    /// Length scale `L` in mm.
    pub length: f64,
    /// Speed scale `V₀` in mm/s.
    pub speed: f64,
}

impl ScalingParams {
    /// Recovers `ε`, `s`, `μ` from physical scales via `ε = V₀T_λ/L`,
    /// `ε^s = T_λ/T_a` and `ε^{1+μ} = T_λ/T_t`.
    pub fn from_physical(
        t_tumble: f64,
        length: f64,
        speed: f64,
        t_adaptation: f64,
        t_observation: f64,
    ) -> Result<Self> {
        for (v, field) in [
            (t_tumble, "scaling.T_lambda"),
            (length, "scaling.L"),
            (speed, "sim.v0"),
            (t_adaptation, "family.Ta"),
            (t_observation, "sim.T"),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        let epsilon = speed * t_tumble / length;
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::config(
                "scaling",
                format!("epsilon = V0 T_lambda / L = {epsilon} must lie in (0, 1)"),
            ));
        }
        let ln_eps = epsilon.ln();
        Ok(Self {
            epsilon,
            s: (t_tumble / t_adaptation).ln() / ln_eps,
            mu: (t_tumble / t_observation).ln() / ln_eps - 1.0,
            t_observation,
            t_adaptation,
            t_tumble,
            length,
            speed,
        })
    }

    /// Largest relative violation of the three defining relations.
    pub fn relation_error(&self) -> f64 {
        let rel = |lhs: f64, rhs: f64| ((lhs - rhs) / rhs).abs();
        rel(self.speed * self.t_tumble / self.length, self.epsilon)
            .max(rel(
                self.epsilon.powf(self.s),
                self.t_tumble / self.t_adaptation,
            ))
            .max(rel(
                self.epsilon.powf(1.0 + self.mu),
                self.t_tumble / self.t_observation,
            ))
    }
}

/// `T_a = T_λ ε^{−s}`, `T_t = T_λ ε^{−(1+μ)}`, `L = V₀T_λ/ε`.
pub fn derive_scaling(
    epsilon: f64,
    s: f64,
    mu: f64,
    t_tumble: f64,
    speed: f64,
) -> Result<ScalingParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidInput(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    if !(t_tumble > 0.0) || !(speed > 0.0) {
        return Err(Error::InvalidInput("T_lambda and V0 must be > 0".into()));
    }
    Ok(ScalingParams {
        epsilon,
        s,
        mu,
        t_observation: t_tumble * epsilon.powf(-(1.0 + mu)),
        t_adaptation: t_tumble * epsilon.powf(-s),
        t_tumble,
        length: speed * t_tumble / epsilon,
        speed,
    })
}

/// One cell: position, velocity, activity and the length of its open run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleState {
    pub position: [f64; MAX_DIMENSION],
    pub velocity: [f64; MAX_DIMENSION],
    pub activity: f64,
    run_steps: u64,
    /// The open run started at t = 0 rather than at a tumble.
    censored: bool,
}

impl ParticleState {
    pub fn new(velocity: [f64; MAX_DIMENSION], activity: f64) -> Self {
        Self {
            position: [0.0; MAX_DIMENSION],
            velocity,
            activity,
            run_steps: 0,
            censored: true,
        }
    }

    pub fn current_run_steps(&self) -> u64 {
        self.run_steps
    }

    /// Length of the open run in mm, for step length `speed · dt`.
    pub fn current_run_length(&self, step_length: f64) -> f64 {
        self.run_steps as f64 * step_length
    }
}

/// Path lengths of completed runs, pooled over particles in index order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RunLengthLedger {
    pub lengths: Vec<f64>,
}

impl RunLengthLedger {
    pub fn from_lengths(lengths: Vec<f64>) -> Self {
        Self { lengths }
    }

    pub fn count(&self) -> usize {
        self.lengths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lengths.is_empty()
    }

    pub fn lengths(&self) -> impl Iterator<Item = f64> + '_ {
        self.lengths.iter().copied()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MsdSeries {
    /// Record times in seconds.
    pub times: Vec<f64>,
    /// Mean squared displacement in mm².
    pub msd: Vec<f64>,
}

impl MsdSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Element-wise mean of several series recorded at the same times.
    pub fn average(series: &[MsdSeries]) -> Result<MsdSeries> {
        let first = series
            .first()
            .ok_or_else(|| Error::EmptyData("no MSD series to average".into()))?;
        if series.iter().any(|s| s.times != first.times) {
            return Err(Error::InvalidData(
                "MSD series have different record times".into(),
            ));
        }
        let k = series.len() as f64;
        let msd = (0..first.len())
            .map(|i| series.iter().map(|s| s.msd[i]).sum::<f64>() / k)
            .collect();
        Ok(MsdSeries {
            times: first.times.clone(),
            msd,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityHistogram {
    pub centers: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub num_particles: usize,
    /// Time step in seconds.
    pub dt: f64,
    /// Horizon in seconds.
    pub total_time: f64,
    /// Cell speed `v₀` in mm/s.
    pub speed: f64,
    /// Half-width of the recording window in mm. Particles are never stopped
    /// at it; leaving it only triggers a warning.
    pub domain_halfwidth: f64,
    pub family: FamilyParams,
    pub scheme: Scheme,
    pub boundary: BoundaryPolicy,
    pub seed: u64,
    /// Times (seconds) at which the MSD is recorded.
    pub msd_record_times: Vec<f64>,
    pub dimension: usize,
    pub record_run_lengths: bool,
    /// Number of equal-width bins of the final activity histogram.
    pub activity_bins: usize,
    /// Worker threads; `None` uses the global pool. Never affects outputs.
    pub workers: Option<usize>,
    /// Print a progress line to stderr every 10 % of the particle steps.
    pub report_progress: bool,
}

/// Record times `0, Δ, 2Δ, …` up to and including `total_time`.
pub fn msd_record_grid(interval: f64, total_time: f64) -> Vec<f64> {
    let n = (total_time / interval + 1e-9).floor() as usize;
    (0..=n).map(|k| k as f64 * interval).collect()
}

impl SimConfig {
    pub fn num_steps(&self) -> usize {
        (self.total_time / self.dt - 1e-9).ceil() as usize
    }

    pub fn step_length(&self) -> f64 {
        self.speed * self.dt
    }

    /// Tumble probability per unit of `Λ(a)Δt`.
    pub fn tumble_factor(&self) -> f64 {
        if self.dimension == 1 {
            0.5
        } else {
            1.0
        }
    }

    fn record_steps(&self) -> Result<Vec<usize>> {
        let last = self.num_steps();
        let mut steps = Vec::with_capacity(self.msd_record_times.len());
        for &t in &self.msd_record_times {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(Error::config(
                    "sim.msd_record_times",
                    format!("invalid time {t}"),
                ));
            }
            let k = (t / self.dt).round() as usize;
            if k > last {
                return Err(Error::config(
                    "sim.msd_record_times",
                    format!("time {t} s lies beyond the horizon {} s", self.total_time),
                ));
            }
            if steps.last().is_some_and(|&prev| k <= prev) {
                return Err(Error::config(
                    "sim.msd_record_times",
                    "times must map to strictly increasing steps",
                ));
            }
            steps.push(k);
        }
        Ok(steps)
    }

    /// Checks every configuration invariant against a coefficient set.
    pub fn validate_with<C: CoefficientSet + ?Sized>(&self, c: &C) -> Result<()> {
        self.family.validate()?;
        if self.num_particles == 0 {
            return Err(Error::config("sim.particles", "must be >= 1"));
        }
        StepScheme::new(self.scheme, self.dt)?;
        if !(self.total_time >= self.dt) || !self.total_time.is_finite() {
            return Err(Error::config("sim.T", "must be finite and >= dt"));
        }
        if !(self.speed > 0.0) || !self.speed.is_finite() {
            return Err(Error::config("sim.v0", "must be finite and > 0"));
        }
        if !(self.domain_halfwidth > 0.0) {
            return Err(Error::config("sim.domain_halfwidth", "must be > 0"));
        }
        if !(1..=MAX_DIMENSION).contains(&self.dimension) {
            return Err(Error::config("sim.dimension", "must be 1, 2 or 3"));
        }
        if self.activity_bins == 0 {
            return Err(Error::config("sim.activity_bins", "must be >= 1"));
        }
        if let BoundaryPolicy::Clamp { margin } = self.boundary {
            BoundaryPolicy::clamp(margin)?;
        }
        if self.workers == Some(0) {
            return Err(Error::config("sim.workers", "must be >= 1"));
        }
        let max_rate = c.tumbling_rate(self.boundary.upper_activity());
        let p_max = self.tumble_factor() * max_rate * self.dt;
        if !(p_max <= 1.0) {
            return Err(Error::config(
                "sim.dt",
                format!("tumble probability reaches {p_max} > 1 at the largest activity"),
            ));
        }
        self.record_steps()?;
        Ok(())
    }
}

/// Reference parameter sets. Case I is the Lévy-walk example and Case II
/// its Brownian control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    I,
    II,
    III,
}

impl std::str::FromStr for Case {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(Case::I),
            "II" | "2" => Ok(Case::II),
            "III" | "3" => Ok(Case::III),
            other => Err(Error::config("case", format!("unknown case '{other}'"))),
        }
    }
}

impl std::fmt::Display for Case {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Case::I => "I",
            Case::II => "II",
            Case::III => "III",
        })
    }
}

/// Shared scales of every preset.
pub const PRESET_SPEED: f64 = 0.02;
pub const PRESET_LENGTH: f64 = 1.0;
pub const PRESET_T_TUMBLE: f64 = 1.0;
pub const PRESET_DT: f64 = 0.1;
pub const PRESET_PARTICLES: usize = 10_000;
pub const PRESET_HALFWIDTH: f64 = 25.0;
pub const PRESET_HORIZON: f64 = 300.0;

/// Case I: slow adaptation in the long-jump regime. Case II: fast
/// adaptation. Case III: equilibrium outside the admissible range.
pub fn case_preset(case: Case) -> (FamilyParams, SimConfig) {
    let (theta, ta) = match case {
        Case::I => (-0.5, 200.0),
        Case::II => (-0.5, 10.0),
        Case::III => (0.5, 200.0),
    };
    let family = FamilyParams {
        theta,
        n: 1.1,
        beta: 2.0,
        adaptation_time: ta,
    };
    let cfg = SimConfig {
        num_particles: PRESET_PARTICLES,
        dt: PRESET_DT,
        total_time: PRESET_HORIZON,
        speed: PRESET_SPEED,
        domain_halfwidth: PRESET_HALFWIDTH,
        family,
        scheme: Scheme::Milstein,
        boundary: BoundaryPolicy::Reflect,
        seed: 0,
        msd_record_times: msd_record_grid(1.0, PRESET_HORIZON),
        dimension: 1,
        record_run_lengths: true,
        activity_bins: 50,
        workers: None,
        report_progress: false,
    };
    (family, cfg)
}

/// Scales of a configuration under the preset `L` and `T_λ`.
pub fn config_scaling(cfg: &SimConfig, length: f64, t_tumble: f64) -> Result<ScalingParams> {
    ScalingParams::from_physical(
        t_tumble,
        length,
        cfg.speed,
        cfg.family.adaptation_time,
        cfg.total_time,
    )
}

fn random_direction(
    stream: &mut ParticleStream,
    dimension: usize,
    speed: f64,
) -> [f64; MAX_DIMENSION] {
    let mut v = [0.0; MAX_DIMENSION];
    if dimension == 1 {
        v[0] = if stream.uniform() < 0.5 {
            speed
        } else {
            -speed
        };
        return v;
    }
    loop {
        let mut norm2 = 0.0;
        for c in v.iter_mut().take(dimension) {
            *c = stream.standard_normal();
            norm2 += *c * *c;
        }
        if norm2 > 1e-300 {
            let scale = speed / norm2.sqrt();
            for c in v.iter_mut().take(dimension) {
                *c *= scale;
            }
            return v;
        }
    }
}

fn init_particle(
    cfg: &SimConfig,
    sampler: &EquilibriumSampler,
    stream: &mut ParticleStream,
) -> ParticleState {
    let velocity = random_direction(stream, cfg.dimension, cfg.speed);
    let activity = sampler.sample(stream);
    ParticleState::new(velocity, activity)
}

/// Initial ensemble: every particle at the origin with an equiprobable
/// direction and an activity drawn from the equilibrium.
pub fn init_ensemble(cfg: &SimConfig) -> Result<Vec<ParticleState>> {
    let sampler = EquilibriumSampler::new(&cfg.family)?;
    Ok((0..cfg.num_particles)
        .map(|i| {
            let mut stream = ParticleStream::new(cfg.seed, i as u64);
            init_particle(cfg, &sampler, &mut stream)
        })
        .collect())
}

/// Per-step constants shared by all particles.
#[derive(Debug, Clone, Copy)]
pub struct StepContext {
    pub stepper: StepScheme,
    pub boundary: BoundaryPolicy,
    pub dimension: usize,
    pub speed: f64,
    tumble_scale: f64,
    sqrt_dt: f64,
}

impl StepContext {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        Ok(Self {
            stepper: StepScheme::new(cfg.scheme, cfg.dt)?,
            boundary: cfg.boundary,
            dimension: cfg.dimension,
            speed: cfg.speed,
            tumble_scale: cfg.tumble_factor() * cfg.dt,
            sqrt_dt: cfg.dt.sqrt(),
        })
    }
}

/// Advances one particle by one step; returns the number of steps of the run
/// closed by a tumble in this step, if any.
///
/// Runs that began at t = 0 are censored and never reported.
#[inline]
pub fn step_particle<C: CoefficientSet + ?Sized>(
    p: &mut ParticleState,
    ctx: &StepContext,
    c: &C,
    stream: &mut ParticleStream,
) -> Result<Option<u64>> {
    let dt = ctx.stepper.dt;
    let mut completed = None;

    let r = stream.uniform();
    if r <= ctx.tumble_scale * c.tumbling_rate(p.activity) {
        if ctx.dimension == 1 {
            p.velocity[0] = -p.velocity[0];
        } else {
            p.velocity = random_direction(stream, ctx.dimension, ctx.speed);
        }
        if !p.censored {
            completed = Some(p.run_steps);
        }
        p.censored = false;
        p.run_steps = 0;
    }

    for (x, v) in p.position.iter_mut().zip(&p.velocity).take(ctx.dimension) {
        *x += v * dt;
    }
    p.run_steps += 1;

    let d_b = ctx.sqrt_dt * stream.standard_normal();
    p.activity = ctx.stepper.step(c, p.activity, d_b, ctx.boundary)?;
    Ok(completed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub ledger: RunLengthLedger,
    pub msd: MsdSeries,
    pub activity_histogram: ActivityHistogram,
    /// First coordinate of every particle at the horizon, in index order.
    pub final_positions: Vec<f64>,
    /// Final activities in index order.
    pub final_activities: Vec<f64>,
    /// Particles that left the recording window at some point.
    pub escaped: usize,
}

struct ChunkResult {
    msd_sums: Vec<f64>,
    runs: Vec<u64>,
    positions: Vec<f64>,
    activities: Vec<f64>,
    escaped: usize,
}

/// Runs the family model described by `cfg`.
pub fn simulate(cfg: &SimConfig) -> Result<SimulationOutput> {
    let c = family_coefficients(&cfg.family)?;
    simulate_with(cfg, &c)
}

/// Runs the particle model with an arbitrary coefficient set. Initial
/// activities are still drawn from the equilibrium of `cfg.family`.
pub fn simulate_with<C: CoefficientSet>(cfg: &SimConfig, c: &C) -> Result<SimulationOutput> {
    cfg.validate_with(c)?;
    match cfg.workers {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::config("sim.workers", e.to_string()))?;
            pool.install(|| run_chunks(cfg, c))
        }
        None => run_chunks(cfg, c),
    }
}

fn run_chunks<C: CoefficientSet>(cfg: &SimConfig, c: &C) -> Result<SimulationOutput> {
    let sampler = EquilibriumSampler::new(&cfg.family)?;
    let ctx = StepContext::new(cfg)?;
    let record_steps = cfg.record_steps()?;
    let num_steps = cfg.num_steps();
    let num_chunks = cfg.num_particles.div_ceil(CHUNK_SIZE);
    let done = AtomicUsize::new(0);
    let last_decile = AtomicUsize::new(0);

    let chunks: Vec<ChunkResult> = (0..num_chunks)
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK_SIZE;
            let hi = (lo + CHUNK_SIZE).min(cfg.num_particles);
            let result = run_chunk(cfg, c, &sampler, &ctx, &record_steps, num_steps, lo..hi);
            let finished = done.fetch_add(hi - lo, Ordering::Relaxed) + (hi - lo);
            if cfg.report_progress {
                let decile = finished * 10 / cfg.num_particles;
                if last_decile.fetch_max(decile, Ordering::Relaxed) < decile {
                    eprintln!(
                        "simulate: {:>3}% ({} of {} particles, {} steps each)",
                        decile * 10,
                        finished,
                        cfg.num_particles,
                        num_steps
                    );
                }
            }
            result
        })
        .collect::<Result<_>>()?;

    let step_length = cfg.step_length();
    let mut msd_sums = vec![0.0; record_steps.len()];
    let mut lengths = Vec::new();
    let mut final_positions = Vec::with_capacity(cfg.num_particles);
    let mut final_activities = Vec::with_capacity(cfg.num_particles);
    let mut escaped = 0;
    for chunk in chunks {
        for (total, part) in msd_sums.iter_mut().zip(&chunk.msd_sums) {
            *total += part;
        }
        lengths.extend(chunk.runs.iter().map(|&k| k as f64 * step_length));
        final_positions.extend(chunk.positions);
        final_activities.extend(chunk.activities);
        escaped += chunk.escaped;
    }
    if escaped > 0 {
        log::warn!(
            "{escaped} particle(s) left the recording window of half-width {} mm",
            cfg.domain_halfwidth
        );
    }

    let n = cfg.num_particles as f64;
    let msd = MsdSeries {
        times: record_steps.iter().map(|&k| k as f64 * cfg.dt).collect(),
        msd: msd_sums.iter().map(|s| s / n).collect(),
    };

    let bins = cfg.activity_bins;
    let mut counts = vec![0u64; bins];
    for &a in &final_activities {
        let i = ((a * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let activity_histogram = ActivityHistogram {
        centers: (0..bins).map(|i| (i as f64 + 0.5) / bins as f64).collect(),
        counts,
    };

    Ok(SimulationOutput {
        ledger: RunLengthLedger { lengths },
        msd,
        activity_histogram,
        final_positions,
        final_activities,
        escaped,
    })
}

fn run_chunk<C: CoefficientSet>(
    cfg: &SimConfig,
    c: &C,
    sampler: &EquilibriumSampler,
    ctx: &StepContext,
    record_steps: &[usize],
    num_steps: usize,
    particles: std::ops::Range<usize>,
) -> Result<ChunkResult> {
    let mut msd_sums = vec![0.0; record_steps.len()];
    let mut runs = Vec::new();
    let mut positions = Vec::with_capacity(particles.len());
    let mut activities = Vec::with_capacity(particles.len());
    let mut escaped = 0;
    let dim = cfg.dimension;
    let halfwidth = cfg.domain_halfwidth;

    for i in particles {
        let mut stream = ParticleStream::new(cfg.seed, i as u64);
        let mut p = init_particle(cfg, sampler, &mut stream);
        let mut next_record = 0;
        let mut left_window = false;
        for k in 0..=num_steps {
            if k > 0 {
                if let Some(run) = step_particle(&mut p, ctx, c, &mut stream)? {
                    if cfg.record_run_lengths {
                        runs.push(run);
                    }
                }
                if !left_window && p.position[..dim].iter().any(|x| x.abs() > halfwidth) {
                    left_window = true;
                }
            }
            if record_steps.get(next_record) == Some(&k) {
                msd_sums[next_record] += p.position[..dim].iter().map(|x| x * x).sum::<f64>();
                next_record += 1;
            }
        }
        escaped += usize::from(left_window);
        positions.push(p.position[0]);
        activities.push(p.activity);
    }
    Ok(ChunkResult {
        msd_sums,
        runs,
        positions,
        activities,
        escaped,
    })
}

/// Eligibility label of a configuration's family.
pub fn regime_label(cfg: &SimConfig) -> &'static str {
    levy_regime_check(&cfg.family).label()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct ConstantRate {
        rate: f64,
    }

    impl CoefficientSet for ConstantRate {
        fn drift(&self, _: f64) -> f64 {
            0.0
        }
        fn noise(&self, _: f64) -> f64 {
            0.0
        }
        fn noise_derivative(&self, _: f64) -> f64 {
            0.0
        }
        fn equilibrium(&self, _: f64) -> f64 {
            1.0
        }
        fn tumbling_rate(&self, _: f64) -> f64 {
            self.rate
        }
    }

    fn small_case(n: usize, seed: u64) -> SimConfig {
        let (_, mut cfg) = case_preset(Case::I);
        cfg.num_particles = n;
        cfg.seed = seed;
        cfg
    }

    #[test]
    fn scaling_examples() {
        let lo = derive_scaling(0.02, 1.25, 0.45, 1.0, 0.02).unwrap();
        assert!(
            (lo.t_adaptation - 132.96).abs() < 5e-3,
            "{}",
            lo.t_adaptation
        );
        let hi = derive_scaling(0.02, 1.45, 0.45, 1.0, 0.02).unwrap();
        assert!(
            (hi.t_adaptation - 290.74).abs() < 5e-3,
            "{}",
            hi.t_adaptation
        );
        assert!((hi.t_observation - 290.7).abs() < 0.05);
        assert!((hi.length - 1.0).abs() < 1e-15);
        assert!(hi.relation_error() < 1e-12);
        assert!(derive_scaling(1.5, 1.0, 0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn presets_share_epsilon() {
        for case in [Case::I, Case::II, Case::III] {
            let (_, cfg) = case_preset(case);
            let s = config_scaling(&cfg, PRESET_LENGTH, PRESET_T_TUMBLE).unwrap();
            assert!((s.epsilon - 0.02).abs() < 1e-15);
            assert!(s.relation_error() < 1e-12);
        }
        let (f, _) = case_preset(Case::I);
        assert!(levy_regime_check(&f).eligible);
        let (f, _) = case_preset(Case::III);
        assert!(!levy_regime_check(&f).eligible);
        let (f, cfg) = case_preset(Case::II);
        assert_eq!(f.adaptation_time, 10.0);
        assert_eq!(cfg.num_steps(), 3000);
    }

    #[test]
    fn ensemble_is_reproducible() {
        let cfg = small_case(4, 11);
        let a = init_ensemble(&cfg).unwrap();
        let b = init_ensemble(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|p| p.position == [0.0; 3] && p.velocity[0].abs() == 0.02));
    }

    #[test]
    fn ensemble_statistics() {
        let cfg = small_case(100_000, 5);
        let e = init_ensemble(&cfg).unwrap();
        let n = e.len() as f64;
        let mean_a = e.iter().map(|p| p.activity).sum::<f64>() / n;
        let up = e.iter().filter(|p| p.velocity[0] > 0.0).count() as f64 / n;
        assert!((mean_a - 0.5).abs() < 0.005, "{mean_a}");
        assert!((up - 0.5).abs() < 0.01, "{up}");
    }

    #[test]
    fn no_tumbling_is_ballistic() {
        let mut cfg = small_case(8, 3);
        cfg.total_time = 50.0;
        cfg.msd_record_times = msd_record_grid(10.0, 50.0);
        let out = simulate_with(&cfg, &ConstantRate { rate: 0.0 }).unwrap();
        assert!(out.ledger.is_empty());
        let init = init_ensemble(&cfg).unwrap();
        for (x, p) in out.final_positions.iter().zip(&init) {
            assert!((x - p.velocity[0] * 50.0).abs() < 1e-12);
        }
        for (t, m) in out.msd.times.iter().zip(&out.msd.msd) {
            assert!((m - (0.02 * t).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn forced_flips_give_minimal_runs() {
        let mut cfg = small_case(5, 9);
        cfg.total_time = 10.0;
        cfg.msd_record_times = vec![0.0, 10.0];
        let out = simulate_with(&cfg, &ConstantRate { rate: 20.0 }).unwrap();
        assert!(!out.ledger.is_empty());
        assert!(out.ledger.lengths().all(|l| (l - 0.002).abs() < 1e-15));
        // every step flips: a particle oscillates between 0 and ±v0 dt
        assert!(out.final_positions.iter().all(|x| x.abs() < 0.0021));
    }

    #[test]
    fn invalid_tumble_probability_is_rejected() {
        let mut cfg = small_case(5, 9);
        cfg.msd_record_times = vec![0.0];
        let err = simulate_with(&cfg, &ConstantRate { rate: 21.0 }).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn geometric_run_lengths_at_constant_rate() {
        // rate 1, dt 0.1: p = 0.05 per step, mean run = v0 dt / p = 0.04 mm.
        let mut cfg = small_case(200, 21);
        cfg.total_time = 10_000.0;
        cfg.msd_record_times = vec![0.0];
        let out = simulate_with(&cfg, &ConstantRate { rate: 1.0 }).unwrap();
        let n = out.ledger.count() as f64;
        assert!(n > 9.0e5);
        let mean = out.ledger.lengths().sum::<f64>() / n;
        assert!((mean - 0.04).abs() < 0.02 * 0.04, "mean = {mean}, n = {n}");
    }

    #[test]
    fn run_lengths_are_step_multiples() {
        let mut cfg = small_case(50, 1);
        cfg.total_time = 60.0;
        cfg.msd_record_times = msd_record_grid(1.0, 60.0);
        let out = simulate(&cfg).unwrap();
        let unit = cfg.step_length();
        for l in out.ledger.lengths() {
            let k = l / unit;
            assert!(l >= unit * (1.0 - 1e-12));
            assert!((k - k.round()).abs() < 1e-9);
        }
        for (t, m) in out.msd.times.iter().zip(&out.msd.msd) {
            assert!(*m <= (0.02 * t).powi(2) * (1.0 + 1e-12));
        }
        assert_eq!(out.msd.msd[0], 0.0);
    }

    #[test]
    fn determinism_across_worker_counts() {
        let mut cfg = small_case(300, 77);
        cfg.total_time = 30.0;
        cfg.msd_record_times = msd_record_grid(1.0, 30.0);
        cfg.workers = Some(1);
        let a = simulate(&cfg).unwrap();
        cfg.workers = Some(3);
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn higher_dimension_keeps_speed() {
        let mut cfg = small_case(20, 4);
        cfg.dimension = 3;
        cfg.total_time = 20.0;
        cfg.msd_record_times = msd_record_grid(1.0, 20.0);
        let e = init_ensemble(&cfg).unwrap();
        for p in &e {
            let s = p.velocity.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((s - 0.02).abs() < 1e-15);
        }
        let out = simulate(&cfg).unwrap();
        for (t, m) in out.msd.times.iter().zip(&out.msd.msd) {
            assert!(*m <= (0.02 * t).powi(2) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn record_times_beyond_horizon_are_rejected() {
        let mut cfg = small_case(2, 0);
        cfg.msd_record_times = vec![0.0, 400.0];
        assert!(simulate(&cfg).is_err());
        cfg.msd_record_times = vec![5.0, 1.0];
        assert!(simulate(&cfg).is_err());
    }

    #[test]
    fn case_parsing() {
        assert_eq!("ii".parse::<Case>().unwrap(), Case::II);
        assert_eq!("3".parse::<Case>().unwrap(), Case::III);
        assert!("IV".parse::<Case>().is_err());
    }
}
