//! Finite-size scaling: finite-`N` observables along `ξ(β) = qN` against the
//! Mittag-Leffler limit functions.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};
use crate::kernel::{ReturnKernel, SlowlyVarying};
use crate::mittag_leffler::ln_mittag_leffler;
use crate::partition::{correlation_length, invert_free_energy, Boundary, PartitionTable};

pub const DEFAULT_N_REF: usize = 100_000;
pub const DEFAULT_DELTA_REF: f64 = 1e-5;

/// Measured constants of a kernel: `C_K = N_ref^α / b_{N_ref}` and
/// `c_α = (β-β_c)^{1/α} ξ(β)` at `β - β_c = δ_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingConstants {
    pub alpha: f64,
    pub c_k: f64,
    pub c_alpha: f64,
    pub n_ref: usize,
    pub delta_ref: f64,
    /// Slowly varying part is not constant: `C_K` is replaced by `N^α/b_N`
    /// at each system size.
    pub general_l: bool,
}

impl ScalingConstants {
    pub fn measure(kernel: &ReturnKernel) -> Result<Self> {
        Self::with_reference(kernel, DEFAULT_N_REF, DEFAULT_DELTA_REF)
    }

    pub fn with_reference(kernel: &ReturnKernel, n_ref: usize, delta_ref: f64) -> Result<Self> {
        if !(delta_ref > 0.0) {
            return Err(invalid("delta_ref", "must be positive"));
        }
        let k = kernel.tilt_to_recurrent();
        let alpha = k.alpha();
        let c_k = (n_ref as f64).powf(alpha) / k.b_of_n(n_ref)?;
        let c_alpha = delta_ref.powf(1.0 / alpha) * correlation_length(&k, delta_ref)?;
        let general_l = !matches!(k.slowly_varying(), Some(SlowlyVarying::Constant { .. }) | None);
        Ok(ScalingConstants {
            alpha,
            c_k,
            c_alpha,
            n_ref,
            delta_ref,
            general_l,
        })
    }

    /// The `C_K` used at size `n`.
    pub fn c_k_at(&self, kernel: &ReturnKernel, n: usize) -> Result<f64> {
        if self.general_l {
            let k = kernel.tilt_to_recurrent();
            Ok((n as f64).powf(self.alpha) / k.b_of_n(n)?)
        } else {
            Ok(self.c_k)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitFunctions {
    /// Window parameter `u = q^{-α} c_α^α / C_K`.
    pub u: f64,
    /// `f(q) = 1/log E_α(u)`.
    pub f: f64,
    /// `(1/C_K) E_α'(u)/E_α(u)`.
    pub rho_hat: f64,
    /// `(1/C_K²)` times the variance of `L₁` under the `e^{uL₁}` tilt.
    pub chi_hat: f64,
    /// Same second moment centred at the untilted mean `E[L₁] = 1/Γ(1+α)`.
    pub chi_hat_untilted: f64,
}

pub fn limit_scaling_functions(consts: &ScalingConstants, q: f64) -> Result<LimitFunctions> {
    limit_with_c_k(consts, consts.c_k, q)
}

fn limit_with_c_k(consts: &ScalingConstants, c_k: f64, q: f64) -> Result<LimitFunctions> {
    if !(q > 0.0) {
        return Err(invalid("q", format!("must be positive, got {q}")));
    }
    let a = consts.alpha;
    let u = q.powf(-a) * consts.c_alpha.powf(a) / c_k;
    let ln_e = ln_mittag_leffler(a, u, 0)?;
    let r1 = (ln_mittag_leffler(a, u, 1)? - ln_e).exp();
    let r2 = (ln_mittag_leffler(a, u, 2)? - ln_e).exp();
    let m0 = 1.0 / gamma(1.0 + a);
    Ok(LimitFunctions {
        u,
        f: 1.0 / ln_e,
        rho_hat: r1 / c_k,
        chi_hat: (r2 - r1 * r1).max(0.0) / (c_k * c_k),
        chi_hat_untilted: (r2 - 2.0 * m0 * r1 + m0 * m0) / (c_k * c_k),
    })
}

/// One `(N, q)` point of the finite-size scaling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FssRow {
    pub n: usize,
    pub q: f64,
    pub beta: f64,
    pub xi_n_over_n: f64,
    pub f_limit: f64,
    pub rho_n_scaled: f64,
    pub rho_hat: f64,
    pub chi_n_scaled: f64,
    pub chi_hat: f64,
    pub chi_hat_untilted: f64,
}

/// Solves `ξ(β) = qN` and evaluates `ξ_N/N`, `ρ_N N^{1-α}`, `χ_N N^{1-2α}`.
/// Transient kernels are handled through their recurrent tilt; `beta` is
/// reported on the scale of the original kernel.
pub fn fss_point(kernel: &ReturnKernel, consts: &ScalingConstants, n: usize, q: f64) -> Result<FssRow> {
    if n == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let k = kernel.tilt_to_recurrent();
    let shifted = invert_free_energy(&k, 1.0 / (q * n as f64))?;
    let table = PartitionTable::with_moments(&k, shifted, n, Boundary::FreeWithInfinity)?;
    let a = k.alpha();
    let nf = n as f64;
    let limit = limit_with_c_k(consts, consts.c_k_at(kernel, n)?, q)?;
    Ok(FssRow {
        n,
        q,
        beta: shifted + kernel.beta_c(),
        xi_n_over_n: 1.0 / table.log_z(n),
        f_limit: limit.f,
        rho_n_scaled: table.mean(n).unwrap_or(0.0) * nf.powf(-a),
        rho_hat: limit.rho_hat,
        chi_n_scaled: table.variance(n).unwrap_or(0.0) * nf.powf(-2.0 * a),
        chi_hat: limit.chi_hat,
        chi_hat_untilted: limit.chi_hat_untilted,
    })
}

/// All `(N, q)` combinations, ordered by `N` then `q`.
pub fn fss_curve(kernel: &ReturnKernel, n_list: &[usize], q_list: &[f64]) -> Result<Vec<FssRow>> {
    let consts = ScalingConstants::measure(kernel)?;
    fss_curve_with(kernel, &consts, n_list, q_list)
}

pub fn fss_curve_with(
    kernel: &ReturnKernel,
    consts: &ScalingConstants,
    n_list: &[usize],
    q_list: &[f64],
) -> Result<Vec<FssRow>> {
    let grid: Vec<(usize, f64)> = n_list.iter().flat_map(|&n| q_list.iter().map(move |&q| (n, q))).collect();
    grid.into_par_iter().map(|(n, q)| fss_point(kernel, consts, n, q)).collect()
}

/// Least-squares slope of `log ξ(β)` against `log(β - β_c)` over `deltas`.
pub fn correlation_exponent_fit(kernel: &ReturnKernel, deltas: &[f64]) -> Result<f64> {
    if deltas.len() < 2 {
        return Err(invalid("deltas", "need at least two points"));
    }
    let pts: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| Ok((d.ln(), correlation_length(kernel, kernel.beta_c() + d)?.ln())))
        .collect::<Result<_>>()?;
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Ratio of `β - β_c` solving `ξ(β) = qN` to the one holding
/// `(β-β_c)^{1/α} N = c_α/q`.
pub fn window_delta_ratio(kernel: &ReturnKernel, consts: &ScalingConstants, n: usize, q: f64) -> Result<f64> {
    let k = kernel.tilt_to_recurrent();
    let exact = invert_free_energy(&k, 1.0 / (q * n as f64))?;
    let scaled = (consts.c_alpha / (q * n as f64)).powf(consts.alpha);
    Ok(exact / scaled)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelMode;

    fn kernel(alpha: f64, n_max: usize) -> ReturnKernel {
        ReturnKernel::build(alpha, SlowlyVarying::Constant { value: 1.0 }, KernelMode::Recurrent, n_max).unwrap()
    }

    #[test]
    fn limit_values() {
        let consts = ScalingConstants {
            alpha: 0.5,
            c_k: 1.0,
            c_alpha: 1.0,
            n_ref: 1,
            delta_ref: 1.0,
            general_l: false,
        };
        let l = limit_scaling_functions(&consts, 1.0).unwrap();
        assert_eq!(l.u, 1.0);
        assert!((l.f - 0.6207).abs() < 1e-4);
        assert!(limit_scaling_functions(&consts, 1e-8).unwrap().f < 0.1);
        assert!(limit_scaling_functions(&consts, 1e8).unwrap().f > 100.0);
        for i in 0..40 {
            let q = 10f64.powf(-2.0 + 0.1 * i as f64);
            assert!(limit_scaling_functions(&consts, q).unwrap().chi_hat >= 0.0);
        }
        assert!(limit_scaling_functions(&consts, 0.0).is_err());
    }

    #[test]
    fn constants_match_theory_for_constant_l() {
        let k = kernel(0.5, 1000);
        let c = ScalingConstants::measure(&k).unwrap();
        // both tend to Γ(1-α)A/α
        let theory = gamma(0.5) * k.amplitude() / 0.5;
        assert!((c.c_k / theory - 1.0).abs() < 0.01, "{} {theory}", c.c_k);
        assert!((c.c_alpha.powf(0.5) / theory - 1.0).abs() < 0.01);
        let c4 = ScalingConstants::with_reference(&k, 10_000, 1e-4).unwrap();
        assert!((c4.c_k / c.c_k - 1.0).abs() < 0.01);
        assert!(!c.general_l);
    }

    #[test]
    fn exponent_for_half() {
        let k = kernel(0.5, 1000);
        let deltas: Vec<f64> = (0..=8).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect();
        let slope = correlation_exponent_fit(&k, &deltas).unwrap();
        assert!((slope + 2.0).abs() < 0.04, "{slope}");
    }

    #[test]
    fn larger_q_is_closer_to_criticality() {
        let k = kernel(0.5, 2000);
        let c = ScalingConstants::measure(&k).unwrap();
        let a = fss_point(&k, &c, 1000, 1.0).unwrap();
        let b = fss_point(&k, &c, 1000, 2.0).unwrap();
        assert!(b.beta < a.beta && a.beta > 0.0);
    }

    #[test]
    fn transient_kernel_uses_its_tilt() {
        let t = ReturnKernel::build(0.5, SlowlyVarying::Constant { value: 1.0 }, KernelMode::Transient { sigma_k: 0.5 }, 2000)
            .unwrap();
        let r = t.tilt_to_recurrent();
        let ct = ScalingConstants::measure(&t).unwrap();
        let cr = ScalingConstants::measure(&r).unwrap();
        let a = fss_point(&t, &ct, 1000, 1.0).unwrap();
        let b = fss_point(&r, &cr, 1000, 1.0).unwrap();
        assert!((a.beta - b.beta - t.beta_c()).abs() < 1e-12);
        assert_eq!(a.xi_n_over_n, b.xi_n_over_n);
    }
}
