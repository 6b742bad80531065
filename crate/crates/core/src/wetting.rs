//! The wetting model: simple random walk on `{0,1,…}` with reward `β` per
//! visit to 0 at times `1..=N`, and its renewal representation through the
//! excursion kernel.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::kernel::ReturnKernel;
use crate::partition::{free_log_z, Boundary};

/// `β_c = log 2`.
pub const WETTING_BETA_C: f64 = std::f64::consts::LN_2;
const CUTOFF_TOL: f64 = 1e-9;
const CROSS_CHECK_TOL: f64 = 1e-9;

/// Excursion kernel of the wetting model (`α = 1/2`, `Σ_K = 1/2`).
pub fn wetting_kernel(n_max: usize) -> Result<ReturnKernel> {
    ReturnKernel::excursion(n_max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WettingSpec {
    pub n: usize,
    pub beta: f64,
    /// Largest height tracked; `None` selects `8√N` with a doubling check.
    pub height_cutoff: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndpointDistribution {
    /// `P(S_N = x)` for `x = 0..=cutoff`.
    pub values: Vec<f64>,
    pub log_z: f64,
    pub cutoff: usize,
    /// Total variation moved by doubling the cutoff (0 when the DP is exact).
    pub cutoff_shift: f64,
}

struct HeightDp {
    values: Vec<f64>,
    log_z: f64,
}

fn height_dp(n: usize, beta: f64, cutoff: usize) -> HeightDp {
    let mut v = vec![0.0; cutoff + 2];
    let mut next = v.clone();
    v[0] = 1.0;
    let mut log_scale = 0.0;
    let e_beta = beta.exp();
    for _ in 0..n {
        next[0] = 0.5 * v[1];
        for x in 1..=cutoff {
            next[x] = 0.5 * (v[x - 1] + v[x + 1]);
        }
        next[0] *= e_beta;
        let total: f64 = next[..=cutoff].iter().sum();
        log_scale += total.ln();
        for x in 0..=cutoff {
            v[x] = next[x] / total;
        }
    }
    v.truncate(cutoff + 1);
    HeightDp { values: v, log_z: log_scale }
}

fn validate(spec: &WettingSpec) -> Result<()> {
    if spec.n == 0 || spec.n % 2 == 1 {
        return Err(invalid("N", format!("must be even and positive, got {}", spec.n)));
    }
    if !spec.beta.is_finite() {
        return Err(invalid("beta", "must be finite"));
    }
    if spec.height_cutoff == Some(0) {
        return Err(invalid("height_cutoff", "must be at least 1"));
    }
    Ok(())
}

/// Law of the endpoint `S_N` under the wetting measure.
pub fn endpoint_distribution(spec: &WettingSpec) -> Result<EndpointDistribution> {
    validate(spec)?;
    let default = (8.0 * (spec.n as f64).sqrt()).ceil() as usize;
    let cutoff = spec.height_cutoff.unwrap_or(default).min(spec.n);
    let dp = height_dp(spec.n, spec.beta, cutoff);
    let mut shift = 0.0;
    if cutoff < spec.n {
        let wide = height_dp(spec.n, spec.beta, (2 * cutoff).min(spec.n));
        shift = dp
            .values
            .iter()
            .zip(&wide.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            + wide.values[cutoff + 1..].iter().sum::<f64>();
        if shift > CUTOFF_TOL {
            return Err(Error::CutoffTooSmall { cutoff, moved: shift });
        }
    }
    Ok(EndpointDistribution {
        values: dp.values,
        log_z: dp.log_z,
        cutoff,
        cutoff_shift: shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossCheck {
    pub height: f64,
    pub renewal: f64,
}

/// `log Z_N` from the exact height DP and from the excursion renewal DP.
pub fn wetting_cross_check(n: usize, beta: f64) -> Result<CrossCheck> {
    validate(&WettingSpec {
        n,
        beta,
        height_cutoff: None,
    })?;
    let height = height_dp(n, beta, n).log_z;
    let kernel = wetting_kernel(n.max(2))?;
    let renewal = free_log_z(&kernel, beta, n, Boundary::FreeFiniteTail)?;
    let difference = (height - renewal).abs();
    if difference > CROSS_CHECK_TOL {
        return Err(Error::CrossCheck {
            height,
            renewal,
            difference,
        });
    }
    Ok(CrossCheck { height, renewal })
}

/// One curve of the endpoint figure.
#[derive(Debug, Clone, PartialEq)]
pub struct EndpointCurve {
    pub id: String,
    pub beta: f64,
    pub distribution: EndpointDistribution,
}

/// Curves at fixed `β` values and at `β = ε/√N` for each `ε`.
///
/// The `ε` curves sit at `ε/√N` around zero reward, not around `β_c`; use
/// explicit `betas` for the critical window.
pub fn endpoint_curves(n: usize, betas: &[f64], eps: &[f64]) -> Result<Vec<EndpointCurve>> {
    use rayon::prelude::*;
    let jobs: Vec<(String, f64)> = betas
        .iter()
        .map(|&b| (format!("beta={b}"), b))
        .chain(eps.iter().map(|&e| (format!("eps={e}"), e / (n as f64).sqrt())))
        .collect();
    jobs.into_par_iter()
        .map(|(id, beta)| {
            let distribution = endpoint_distribution(&WettingSpec {
                n,
                beta,
                height_cutoff: None,
            })?;
            Ok(EndpointCurve { id, beta, distribution })
        })
        .collect()
}
