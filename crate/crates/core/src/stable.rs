//! One-sided α-stable laws with Laplace exponent `λ^α`, the local time `L₁`,
//! mesh samples of the α-regenerative set and its tilted versions.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quad;
use crate::sampler::replica_rng;

/// Effective sample sizes below this raise [`TiltedEstimate::low_ess`].
pub const MIN_ESS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StableLaw {
    alpha: f64,
}

impl StableLaw {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0,1), got {alpha}")));
        }
        Ok(StableLaw { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `log A(u)` for Kanter's function
    /// `A(u) = sin(αu)^{α/(1-α)} sin((1-α)u) / sin(u)^{1/(1-α)}`.
    fn ln_kanter(&self, u: f64) -> f64 {
        let a = self.alpha;
        a / (1.0 - a) * (a * u).sin().ln() + ((1.0 - a) * u).sin().ln() - u.sin().ln() / (1.0 - a)
    }

    /// `log(A(U)/E)` for one pair of uniform and exponential draws.
    fn ln_ratio<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = PI * (1.0 - rng.random::<f64>());
        let e: f64 = rng.sample(Exp1);
        self.ln_kanter(u) - e.ln()
    }

    /// `σ₁ = (A(U)/E)^{(1-α)/α}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        ((1.0 - self.alpha) / self.alpha * self.ln_ratio(rng)).exp()
    }

    /// `L₁ = σ₁^{-α}`.
    pub fn sample_local_time<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        (-(1.0 - self.alpha) * self.ln_ratio(rng)).exp()
    }

    fn mixture(&self, x: f64, survival: bool) -> f64 {
        let ln_x = -(self.alpha / (1.0 - self.alpha)) * x.ln();
        let q = quad::integrate(
            |u| {
                let v = (self.ln_kanter(u) + ln_x).exp();
                if survival {
                    -(-v).exp_m1()
                } else {
                    (-v).exp()
                }
            },
            0.0,
            PI,
            1e-13,
            1e-12,
        );
        (q.value / PI).clamp(0.0, 1.0)
    }

    /// `P(σ₁ ≤ x) = (1/π) ∫_0^π exp(-A(u) x^{-α/(1-α)}) du`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x.is_infinite() {
            1.0
        } else {
            self.mixture(x, false)
        }
    }

    /// `P(σ₁ > x)`, accurate in the far tail.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else if x.is_infinite() {
            0.0
        } else {
            self.mixture(x, true)
        }
    }

    /// `P(L₁ ≤ m) = P(σ₁ ≥ m^{-1/α})`.
    pub fn local_time_cdf(&self, m: f64) -> f64 {
        if m <= 0.0 {
            0.0
        } else {
            self.sf(m.powf(-1.0 / self.alpha))
        }
    }
}

/// Mesh sample of the regenerative set up to its first passage above 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSetSample {
    /// Visited points in `[0,1)`, starting at 0; empty unless requested.
    pub points: Vec<f64>,
    /// Local time at passage above 1.
    pub l1: f64,
    /// Last visited point below 1.
    pub g: f64,
    pub weight: f64,
    /// `d_t` at each requested probe `t`, `+∞` when no point of `(t,1)` was visited.
    pub passages: Vec<f64>,
}

/// Runs the subordinator on the local-time grid of sub-steps `δ/2`, with
/// increments `(δ/2)^{1/α} σ₁`. `L₁` is read at the midpoint of the
/// sub-step whose jump crosses 1.
pub fn sample_regenerative<R: Rng + ?Sized>(
    law: &StableLaw,
    mesh: f64,
    keep_points: bool,
    probes: &[f64],
    rng: &mut R,
) -> Result<LimitSetSample> {
    if !(mesh > 0.0 && mesh <= 1e-2) {
        return Err(invalid("mesh", format!("must lie in (0, 0.01], got {mesh}")));
    }
    let h = 0.5 * mesh;
    let scale = h.powf(1.0 / law.alpha());
    let mut x = 0.0;
    let mut steps = 0usize;
    let mut points = Vec::new();
    if keep_points {
        points.push(0.0);
    }
    let mut passages = vec![f64::INFINITY; probes.len()];
    loop {
        let next = x + scale * law.sample(rng);
        if next > 1.0 {
            break;
        }
        for (d, &t) in passages.iter_mut().zip(probes) {
            if x <= t && next > t {
                *d = next;
            }
        }
        x = next;
        steps += 1;
        if keep_points {
            points.push(x);
        }
    }
    Ok(LimitSetSample {
        points,
        l1: (steps as f64 + 0.5) * h,
        g: x,
        weight: 1.0,
        passages,
    })
}

/// `n` samples, sample `i` drawn from [`replica_rng`]`(base_seed, i)`.
pub fn sample_regenerative_batch(
    alpha: f64,
    mesh: f64,
    keep_points: bool,
    probes: &[f64],
    n: usize,
    base_seed: u64,
) -> Result<Vec<LimitSetSample>> {
    let law = StableLaw::new(alpha)?;
    (0..n)
        .into_par_iter()
        .map(|i| sample_regenerative(&law, mesh, keep_points, probes, &mut replica_rng(base_seed, i as u64)))
        .collect()
}

/// Density of the tilted limit laws relative to the regenerative set, up to
/// normalization: `e^{εL₁}`, times `(απ/sin απ)(1-g)^α` in the transient case.
pub fn tilt_weight(alpha: f64, eps: f64, transient: bool, sample: &LimitSetSample) -> f64 {
    let mut w = (eps * sample.l1).exp();
    if transient {
        w *= alpha * PI / (alpha * PI).sin() * (1.0 - sample.g).powf(alpha);
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TiltedEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub ess: f64,
    pub low_ess: bool,
    /// Mean of the unnormalized weights.
    pub mean_weight: f64,
}

/// Self-normalized importance estimate of `E[φ]` under weights `w`, with
/// delta-method standard error.
pub fn weighted_estimate(values: &[f64], weights: &[f64]) -> Result<TiltedEstimate> {
    if values.is_empty() || values.len() != weights.len() {
        return Err(Error::Empty {
            op: "weighted_estimate",
        });
    }
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    let estimate = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / sw;
    let var = values
        .iter()
        .zip(weights)
        .map(|(v, w)| (w * (v - estimate)).powi(2))
        .sum::<f64>()
        / (sw * sw);
    let ess = sw * sw / sw2;
    Ok(TiltedEstimate {
        estimate,
        std_error: var.sqrt(),
        ess,
        low_ess: ess < MIN_ESS,
        mean_weight: sw / values.len() as f64,
    })
}

/// `E[φ]` under the tilted law, estimated from existing regenerative samples.
pub fn tilted_estimate<F>(alpha: f64, eps: f64, transient: bool, samples: &[LimitSetSample], functional: F) -> Result<TiltedEstimate>
where
    F: Fn(&LimitSetSample) -> f64,
{
    let weights: Vec<f64> = samples.iter().map(|s| tilt_weight(alpha, eps, transient, s)).collect();
    let values: Vec<f64> = samples.iter().map(functional).collect();
    weighted_estimate(&values, &weights)
}

/// Draws `n_samples` regenerative sets and returns the tilted estimate of `E[φ]`.
#[allow(clippy::too_many_arguments)]
pub fn tilted_expectation<F>(
    alpha: f64,
    eps: f64,
    transient: bool,
    functional: F,
    n_samples: usize,
    mesh: f64,
    keep_points: bool,
    base_seed: u64,
) -> Result<TiltedEstimate>
where
    F: Fn(&LimitSetSample) -> f64,
{
    let samples = sample_regenerative_batch(alpha, mesh, keep_points, &[], n_samples, base_seed)?;
    tilted_estimate(alpha, eps, transient, &samples, functional)
}
