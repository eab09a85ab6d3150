//! Fixed-step integrators for the scalar activity SDE `da = F dt + Σ dB`.
//!
//! The steppers take the Brownian increment as an argument and never touch a
//! random number generator, so the same increments can drive several schemes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathway::CoefficientSet;

/// Inward nudge applied when reflection lands exactly on an endpoint.
pub const ENDPOINT_NUDGE: f64 = 1e-15;

const MAX_REFLECTIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Milstein,
    #[serde(alias = "euler-maruyama", alias = "euler_maruyama")]
    EulerMaruyama,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "milstein" => Ok(Scheme::Milstein),
            "euler" | "eulermaruyama" | "euler-maruyama" | "euler_maruyama" => {
                Ok(Scheme::EulerMaruyama)
            }
            other => Err(Error::config(
                "sim.scheme",
                format!("unknown scheme '{other}'"),
            )),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scheme::Milstein => "milstein",
            Scheme::EulerMaruyama => "eulermaruyama",
        })
    }
}

/// A scheme together with its fixed time step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    pub scheme: Scheme,
    pub dt: f64,
}

impl StepScheme {
    pub fn new(scheme: Scheme, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::config("sim.dt", "must be finite and > 0"));
        }
        Ok(Self { scheme, dt })
    }

    pub fn step<C: CoefficientSet + ?Sized>(
        &self,
        c: &C,
        a: f64,
        d_b: f64,
        boundary: BoundaryPolicy,
    ) -> Result<f64> {
        match self.scheme {
            Scheme::Milstein => milstein_step(c, a, d_b, self.dt, boundary),
            Scheme::EulerMaruyama => euler_maruyama_step(c, a, d_b, self.dt, boundary),
        }
    }
}

/// What to do when an update leaves `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BoundaryPolicy {
    #[default]
    Reflect,
    Clamp {
        margin: f64,
    },
}

impl BoundaryPolicy {
    pub fn clamp(margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin <= 1e-3) {
            return Err(Error::config(
                "sim.clamp_margin",
                format!("must lie in (0, 1e-3], got {margin}"),
            ));
        }
        Ok(BoundaryPolicy::Clamp { margin })
    }

    /// Largest activity the policy can return.
    pub fn upper_activity(&self) -> f64 {
        match *self {
            BoundaryPolicy::Reflect => 1.0 - ENDPOINT_NUDGE,
            BoundaryPolicy::Clamp { margin } => 1.0 - margin,
        }
    }
}

/// Maps a raw update back into the open unit interval.
pub fn apply_boundary(a_raw: f64, policy: BoundaryPolicy) -> Result<f64> {
    if !a_raw.is_finite() {
        return Err(Error::StepFailure(format!("non-finite activity {a_raw}")));
    }
    match policy {
        BoundaryPolicy::Clamp { margin } => Ok(a_raw.clamp(margin, 1.0 - margin)),
        BoundaryPolicy::Reflect => {
            let mut a = a_raw;
            let mut iterations = 0;
            while !(0.0..=1.0).contains(&a) {
                if iterations == MAX_REFLECTIONS {
                    return Err(Error::StepFailure(format!(
                        "reflection of {a_raw} did not settle in {MAX_REFLECTIONS} iterations"
                    )));
                }
                a = a.abs();
                if a > 1.0 {
                    a = 2.0 - a;
                }
                iterations += 1;
            }
            if a == 0.0 {
                a = ENDPOINT_NUDGE;
            } else if a == 1.0 {
                a = 1.0 - ENDPOINT_NUDGE;
            }
            Ok(a)
        }
    }
}

fn check_inputs(a: f64, d_b: f64, dt: f64) -> Result<()> {
    if !d_b.is_finite() {
        return Err(Error::InvalidInput(format!(
            "non-finite Brownian increment {d_b}"
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "time step must be > 0, got {dt}"
        )));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!("activity {a} outside (0, 1)")));
    }
    Ok(())
}

/// `a + FΔt + ΣΔB + ½ΣΣ′((ΔB)² − Δt)`, followed by the boundary policy.
#[inline]
pub fn milstein_step<C: CoefficientSet + ?Sized>(
    c: &C,
    a: f64,
    d_b: f64,
    dt: f64,
    policy: BoundaryPolicy,
) -> Result<f64> {
    check_inputs(a, d_b, dt)?;
    let t = c.sde_terms(a);
    let raw =
        a + t.drift * dt + t.noise * d_b + 0.5 * t.noise * t.noise_derivative * (d_b * d_b - dt);
    apply_boundary(raw, policy)
}

/// `a + FΔt + ΣΔB`, followed by the boundary policy.
#[inline]
pub fn euler_maruyama_step<C: CoefficientSet + ?Sized>(
    c: &C,
    a: f64,
    d_b: f64,
    dt: f64,
    policy: BoundaryPolicy,
) -> Result<f64> {
    check_inputs(a, d_b, dt)?;
    let raw = a + c.drift(a) * dt + c.noise(a) * d_b;
    apply_boundary(raw, policy)
}
