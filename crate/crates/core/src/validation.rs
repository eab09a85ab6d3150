//! Quick invariant suite run by the `validate` subcommand.
//!
//! Every check takes well under a second so the suite can run before each
//! production simulation.

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;
use crate::limit_theory::{
    c1_closed_form, compute_b0_with, compute_c1, solve_fractional_heat, FractionalField,
    LimitConvention, Rule,
};
use crate::pathway::{
    family_coefficients, levy_regime_check, relative_consistency_residual, CoefficientSet,
};
use crate::rng::ParticleStream;
use crate::sde::StepScheme;
use crate::simulator::simulate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

impl CheckOutcome {
    fn judge(name: &'static str, ok: bool, detail: String) -> Self {
        Self {
            name,
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
        }
    }
}

/// Runs every check against the family and integrator settings of `config`.
pub fn run_suite(config: &RunConfig) -> Result<Vec<CheckOutcome>> {
    let sim = config.validate()?;
    let family = sim.family;
    let c = family_coefficients(&family)?;
    let mut out = Vec::new();

    let points = 1000;
    let mut worst: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    for k in 1..=points {
        let a = k as f64 / (points + 1) as f64;
        worst = worst.max(relative_consistency_residual(&c, a)?);
        let s = c.noise(a);
        let d = c.diffusion(a);
        worst_d = worst_d.max((d - 0.5 * s * s).abs() / d);
    }
    out.push(CheckOutcome::judge(
        "coefficient identity",
        worst < 1e-10,
        format!("max relative residual {worst:.3e} at {points} points"),
    ));
    out.push(CheckOutcome::judge(
        "diffusion equals half squared noise",
        worst_d <= 4.0 * f64::EPSILON,
        format!("max relative gap {worst_d:.3e}"),
    ));

    let stepper = StepScheme::new(sim.scheme, sim.dt)?;
    let mut stream = ParticleStream::new(sim.seed, 0);
    let mut a = 0.5;
    let mut inside = true;
    for _ in 0..20_000 {
        let d_b = stream.standard_normal() * sim.dt.sqrt();
        a = stepper.step(&c, a, d_b, sim.boundary)?;
        inside &= a > 0.0 && a < 1.0;
    }
    out.push(CheckOutcome::judge(
        "activity stays in (0, 1)",
        inside,
        format!("20000 {} steps of {} s", sim.scheme, sim.dt),
    ));

    let mut worst_c1: f64 = 0.0;
    for mu in [0.1, 0.45, 0.9] {
        let alpha = 1.0 + family.beta * (1.0 - mu);
        let q = compute_c1(alpha, family.beta)?;
        worst_c1 = worst_c1.max((q - c1_closed_form(alpha, family.beta)).abs());
    }
    out.push(CheckOutcome::judge(
        "c1 quadrature vs closed form",
        worst_c1 < 1e-8,
        format!("max gap {worst_c1:.3e} for mu in {{0.1, 0.45, 0.9}}"),
    ));

    let conv = LimitConvention::default();
    match (
        compute_b0_with(&family, conv, Rule::GaussKronrod),
        compute_b0_with(&family, conv, Rule::TanhSinh),
    ) {
        (Ok(gk), Ok(ts)) => {
            let rel = (gk - ts).abs() / gk.abs();
            out.push(CheckOutcome::judge(
                "B0 across two quadrature rules",
                rel < 1e-6,
                format!("B0 = {gk:.12}, relative gap {rel:.3e}"),
            ));
        }
        (Err(e), _) | (_, Err(e)) => out.push(CheckOutcome {
            name: "B0 across two quadrature rules",
            status: Status::Skip,
            detail: e.to_string(),
        }),
    }

    let init = FractionalField::gaussian(40.0, 2048, 0.0, 1.0)?;
    let mu = family.mu().clamp(0.05, 1.0);
    let one = solve_fractional_heat(&init, 0.5, mu, 0.7)?;
    let two = solve_fractional_heat(&one, 0.5, mu, 1.1)?;
    let direct = solve_fractional_heat(&init, 0.5, mu, 1.8)?;
    let mass_gap = (direct.mass() - init.mass()).abs() / init.mass();
    let semigroup_gap = two
        .values
        .iter()
        .zip(&direct.values)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    out.push(CheckOutcome::judge(
        "fractional solver mass and semigroup",
        mass_gap < 1e-12 && semigroup_gap < 1e-12,
        format!("mass gap {mass_gap:.3e}, semigroup gap {semigroup_gap:.3e}"),
    ));

    let mut small = sim.clone();
    small.num_particles = 150;
    small.total_time = 20.0_f64.min(sim.total_time);
    small.msd_record_times = vec![0.0, small.total_time];
    small.report_progress = false;
    small.workers = Some(1);
    let serial = simulate(&small)?;
    small.workers = Some(3);
    let parallel = simulate(&small)?;
    out.push(CheckOutcome::judge(
        "determinism across worker counts",
        serial.ledger == parallel.ledger && serial.msd == parallel.msd,
        format!("{} runs compared", serial.ledger.count()),
    ));

    let regime = levy_regime_check(&family);
    out.push(CheckOutcome {
        name: "long-jump regime",
        status: Status::Skip,
        detail: if regime.eligible {
            format!(
                "{} with mu = {}",
                regime.label(),
                crate::pipeline::short(regime.mu)
            )
        } else {
            format!("{}: {}", regime.label(), regime.violations.join("; "))
        },
    });
    Ok(out)
}
