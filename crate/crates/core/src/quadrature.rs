//! Adaptive quadrature rules used by the equilibrium normalization and the
//! limit-theory constants.
//!
//! Two independent rules are provided so that every constant can be checked by
//! a second route: a globally adaptive Gauss–Kronrod (7/15) scheme and a
//! level-refined tanh–sinh (double exponential) scheme. Integrands on the unit
//! activity interval with algebraic endpoint singularities go through
//! [`integrate_activity`], which applies the substitution `a = sin²(u/2)` first.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Self::new(1e-10, 1e-12)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod_segment<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Segment {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Globally adaptive Gauss–Kronrod 7/15 quadrature on a finite interval.
///
/// The segment with the largest error estimate is bisected until the summed
/// error falls below the tolerance. Segments narrower than the local floating
/// point resolution are frozen rather than split.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    gauss_kronrod_limited(f, lo, hi, tol, 4000)
}

pub fn gauss_kronrod_limited<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
    max_segments: usize,
) -> Result<Estimate> {
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "quadrature bounds must be finite, got [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = kronrod_segment(&f, lo, hi);
    let mut evaluations = 15;
    let mut value = first.value;
    let mut error = first.error;
    let mut frozen_value = 0.0;
    let mut frozen_error = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while error + frozen_error > tol.target(value + frozen_value) {
        if heap.len() >= max_segments {
            return Err(Error::Quadrature(format!(
                "{max_segments} segments on [{lo}, {hi}], error estimate {:e}",
                error + frozen_error
            )));
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.lo + worst.hi);
        let width = worst.hi - worst.lo;
        if width.abs() <= 64.0 * f64::EPSILON * mid.abs().max(f64::MIN_POSITIVE) || mid == worst.lo
        {
            value -= worst.value;
            error -= worst.error;
            frozen_value += worst.value;
            frozen_error += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = kronrod_segment(&f, worst.lo, mid);
        let right = kronrod_segment(&f, mid, worst.hi);
        evaluations += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }

    // Re-sum to shed the drift accumulated by incremental updates.
    let value = heap.iter().map(|s| s.value).sum::<f64>() + frozen_value;
    let error = heap.iter().map(|s| s.error).sum::<f64>() + frozen_error;
    if !value.is_finite() {
        return Err(Error::Quadrature(format!(
            "non-finite integral on [{lo}, {hi}]"
        )));
    }
    Ok(Estimate {
        value,
        error,
        evaluations,
    })
}

/// Tanh–sinh quadrature on a finite interval.
///
/// Abscissae are generated from the endpoint that is closer, so points that
/// crowd an endpoint keep their full relative precision there. This makes the
/// rule robust for integrable algebraic singularities at `lo`; singularities
/// at `hi` are best handled by reflecting the integrand first.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: Tolerance) -> Result<Estimate> {
    const MAX_LEVEL: u32 = 12;
    const T_MAX: f64 = 6.5;
    let width = hi - lo;
    if width == 0.0 {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut evaluations = 0usize;

    // Contribution of the node at parameter t (without the step factor).
    let node = |t: f64, evals: &mut usize| -> f64 {
        let u = half_pi * t.sinh();
        let weight = half_pi * t.cosh() / u.cosh().powi(2);
        if weight == 0.0 || !weight.is_finite() {
            return 0.0;
        }
        let x = if u < 0.0 {
            lo + width / (1.0 + (-2.0 * u).exp())
        } else {
            hi - width / (1.0 + (2.0 * u).exp())
        };
        if x <= lo || x >= hi {
            return 0.0;
        }
        *evals += 1;
        weight * f(x)
    };

    let mut h = 1.0;
    let mut sum = node(0.0, &mut evaluations);
    let mut k = 1.0;
    while k * h <= T_MAX {
        sum += node(k * h, &mut evaluations) + node(-k * h, &mut evaluations);
        k += 1.0;
    }
    let mut previous = sum * h * 0.5 * width;

    for _level in 1..=MAX_LEVEL {
        h *= 0.5;
        let mut k = 1.0;
        while k * h <= T_MAX {
            sum += node(k * h, &mut evaluations) + node(-k * h, &mut evaluations);
            k += 2.0;
        }
        let current = sum * h * 0.5 * width;
        let error = (current - previous).abs();
        if !current.is_finite() {
            return Err(Error::Quadrature(format!(
                "non-finite tanh-sinh sum on [{lo}, {hi}]"
            )));
        }
        // The level-to-level difference overestimates the error of the finer
        // level; convergence is quadratic in the number of digits.
        if error <= tol.target(current) {
            return Ok(Estimate {
                value: current,
                error,
                evaluations,
            });
        }
        previous = current;
    }
    Err(Error::Quadrature(format!(
        "tanh-sinh did not reach tolerance on [{lo}, {hi}] after {MAX_LEVEL} levels"
    )))
}

/// Integrates `f(a, 1 - a)` over `[lo, hi] ⊂ [0, 1]` using `a = sin²(u/2)`.
///
/// The part above `a = ½` is reflected to `1 − a = sin²(w/2)`, so each
/// endpoint singularity sits at the origin of its own variable, where the
/// adaptive rule can refine down to the smallest normal number. Both
/// arguments are computed independently as a sine and a cosine square and
/// stay accurate next to their respective endpoint. The Jacobian `½ sin u`
/// cancels algebraic singularities of order up to one half.
pub fn integrate_activity<F: Fn(f64, f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    tol: Tolerance,
) -> Result<Estimate> {
    if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
        return Err(Error::Domain(format!(
            "activity bounds [{lo}, {hi}] not inside [0, 1]"
        )));
    }
    let angle = |a: f64| 2.0 * a.sqrt().asin();
    let half_tol = Tolerance::new(0.5 * tol.abs, tol.rel);
    let mut total = Estimate {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let mut add = |e: Estimate| {
        total.value += e.value;
        total.error += e.error;
        total.evaluations += e.evaluations;
    };
    if lo < 0.5 {
        add(gauss_kronrod(
            |u| {
                let (s, c) = (0.5 * u).sin_cos();
                f(s * s, c * c) * 0.5 * u.sin()
            },
            angle(lo),
            angle(hi.min(0.5)),
            half_tol,
        )?);
    }
    if hi > 0.5 {
        add(gauss_kronrod(
            |w| {
                let (s, c) = (0.5 * w).sin_cos();
                f(c * c, s * s) * 0.5 * w.sin()
            },
            angle(1.0 - hi),
            angle(1.0 - lo.max(0.5)),
            half_tol,
        )?);
    }
    Ok(total)
}
