//! Inter-arrival laws `K(n) = c·L(n)/n^{1+α}` of heavy-tailed renewals, with
//! exact cached tails, the critical point and the normalizing sequences.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};
use crate::quad;

/// Gap lengths summed explicitly past the cache before switching to the
/// Euler–Maclaurin integral bracket for uncached tails.
const UNCACHED_SPAN: usize = 4096;
/// `e^{-CUTOFF}` is negligible next to one in double precision.
const EXP_CUTOFF: f64 = 40.0;

/// Slowly varying correction `L` of the power-law kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlowlyVarying {
    /// `L(n) = value`.
    Constant { value: f64 },
    /// `L(n) = (log(1+n))^exponent`.
    LogPower { exponent: f64 },
    /// `L(n) = exp(a·(log(1+n))^c)`, slowly varying only for `c < 1`.
    ExpLogPower { a: f64, c: f64 },
}

impl SlowlyVarying {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SlowlyVarying::Constant { value } => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(invalid("sv.value", format!("must be positive and finite, got {value}")));
                }
            }
            SlowlyVarying::LogPower { exponent } => {
                if !exponent.is_finite() {
                    return Err(invalid("sv.exponent", "must be finite"));
                }
            }
            SlowlyVarying::ExpLogPower { a, c } => {
                if !a.is_finite() {
                    return Err(invalid("sv.a", "must be finite"));
                }
                if !(c.is_finite() && c < 1.0) {
                    return Err(invalid("sv.c", format!("must satisfy c < 1, got {c}")));
                }
            }
        }
        Ok(())
    }

    /// `log L(x)` given `log x`; stays finite for arguments far beyond `f64::MAX`.
    pub fn ln_eval_ln(&self, ln_x: f64) -> f64 {
        let log1p_x = || {
            if ln_x < 35.0 {
                ln_x.exp().ln_1p()
            } else {
                ln_x + (-ln_x).exp().ln_1p()
            }
        };
        match *self {
            SlowlyVarying::Constant { value } => value.ln(),
            SlowlyVarying::LogPower { exponent } => exponent * log1p_x().ln(),
            SlowlyVarying::ExpLogPower { a, c } => a * log1p_x().powf(c),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            SlowlyVarying::Constant { value } => value,
            SlowlyVarying::LogPower { exponent } => x.ln_1p().powf(exponent),
            SlowlyVarying::ExpLogPower { a, c } => (a * x.ln_1p().powf(c)).exp(),
        }
    }
}

/// `amplitude · L(n) / n^{1+α}`, the unnormalized power-law formula.
pub fn power_law_mass(amplitude: f64, alpha: f64, sv: &SlowlyVarying, n: f64) -> f64 {
    amplitude * sv.eval(n) * n.powf(-1.0 - alpha)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelMode {
    Recurrent,
    /// Finite mass `sigma_k ∈ (0,1)`; the rest sits at `n = ∞`.
    Transient { sigma_k: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Recurrent,
    Transient,
}

/// JSON form of a kernel: `{alpha, sv: {variant, ...}, mode, sigma_k?, n_max}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub alpha: f64,
    pub sv: SlowlyVarying,
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_k: Option<f64>,
    pub n_max: usize,
}

impl KernelSpec {
    pub fn kernel_mode(&self) -> Result<KernelMode> {
        match (self.mode, self.sigma_k) {
            (ModeName::Recurrent, None) => Ok(KernelMode::Recurrent),
            (ModeName::Recurrent, Some(s)) if s == 1.0 => Ok(KernelMode::Recurrent),
            (ModeName::Recurrent, Some(s)) => Err(invalid(
                "sigma_k",
                format!("a recurrent kernel has sigma_k = 1, got {s}"),
            )),
            (ModeName::Transient, Some(sigma_k)) => Ok(KernelMode::Transient { sigma_k }),
            (ModeName::Transient, None) => Err(invalid("sigma_k", "required for a transient kernel")),
        }
    }

    pub fn build(&self) -> Result<ReturnKernel> {
        ReturnKernel::build(self.alpha, self.sv.clone(), self.kernel_mode()?, self.n_max)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    PowerLaw(SlowlyVarying),
    /// First-return law of the simple random walk restricted to positive
    /// excursions: `K(2k) = Catalan(k-1)·4^{-k}`, zero on odd lengths.
    Excursion,
}

/// A discrete inter-arrival law with cached masses `K(1..=n_max)` and tails
/// `K̄(0..=n_max)`, `K̄(m) = Σ_{n>m} K(n)` over finite `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnKernel {
    alpha: f64,
    shape: Shape,
    scale: f64,
    sigma_k: f64,
    recurrent: bool,
    masses: Vec<f64>,
    tails: Vec<f64>,
    tail_bracket: f64,
}

impl ReturnKernel {
    pub fn build(alpha: f64, sv: SlowlyVarying, mode: KernelMode, n_max: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("must lie in (0,1), got {alpha}")));
        }
        sv.validate()?;
        if n_max < 2 {
            return Err(invalid("n_max", format!("must be at least 2, got {n_max}")));
        }
        let (sigma_k, recurrent) = match mode {
            KernelMode::Recurrent => (1.0, true),
            KernelMode::Transient { sigma_k } => {
                if !(sigma_k > 0.0 && sigma_k < 1.0) {
                    return Err(invalid("sigma_k", format!("must lie in (0,1), got {sigma_k}")));
                }
                (sigma_k, false)
            }
        };

        let raw: Vec<f64> = (0..=n_max)
            .map(|n| if n == 0 { 0.0 } else { power_law_mass(1.0, alpha, &sv, n as f64) })
            .collect();
        let horizon = 16 * n_max;
        let mut beyond = 0.0;
        for n in (n_max + 1..=horizon).rev() {
            beyond += power_law_mass(1.0, alpha, &sv, n as f64);
        }
        let bracket = em_tail_plain(alpha, &sv, horizon);
        beyond += bracket.estimate;
        let total = raw.iter().rev().fold(beyond, |acc, x| acc + x);

        let amplitude = sigma_k / total;
        let masses: Vec<f64> = raw.iter().map(|x| amplitude * x).collect();
        let tails = tails_from(&masses, amplitude * beyond);
        Ok(ReturnKernel {
            alpha,
            shape: Shape::PowerLaw(sv),
            scale: amplitude,
            sigma_k,
            recurrent,
            masses,
            tails,
            tail_bracket: amplitude * bracket.width,
        })
    }

    /// The excursion kernel of the wetting model, `Σ_K = 1/2`, `α = 1/2`.
    pub fn excursion(n_max: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(invalid("n_max", format!("must be at least 2, got {n_max}")));
        }
        let mut masses = vec![0.0; n_max + 1];
        // r_k = binom(2k,k)/4^k
        let mut r = 1.0;
        let mut k = 1;
        while 2 * k <= n_max {
            masses[2 * k] = r / (4.0 * k as f64);
            r *= (2 * k - 1) as f64 / (2 * k) as f64;
            k += 1;
        }
        let last = central_binomial_ratio(n_max / 2);
        let tails = tails_from(&masses, 0.5 * last);
        Ok(ReturnKernel {
            alpha: 0.5,
            shape: Shape::Excursion,
            scale: 1.0,
            sigma_k: 0.5,
            recurrent: false,
            masses,
            tails,
            tail_bracket: 0.0,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Multiplicative constant `c` in front of `L(n)/n^{1+α}`.
    pub fn amplitude(&self) -> f64 {
        self.scale
    }

    /// Constant `A` with `K̄(N) ~ A·L(N)/(α N^α)`; equals the amplitude for
    /// power-law kernels.
    pub fn asymptotic_amplitude(&self) -> f64 {
        match self.shape {
            Shape::PowerLaw(_) => self.scale,
            Shape::Excursion => self.scale / (2.0 * (2.0 * PI).sqrt()),
        }
    }

    pub fn slowly_varying(&self) -> Option<&SlowlyVarying> {
        match &self.shape {
            Shape::PowerLaw(sv) => Some(sv),
            Shape::Excursion => None,
        }
    }

    pub fn is_excursion(&self) -> bool {
        matches!(self.shape, Shape::Excursion)
    }

    /// `L(x)` without the amplitude (identically one for the excursion kernel).
    pub fn slowly_varying_at(&self, x: f64) -> f64 {
        self.slowly_varying().map_or(1.0, |sv| sv.eval(x))
    }

    pub fn sigma_k(&self) -> f64 {
        self.sigma_k
    }

    pub fn mass_infinity(&self) -> f64 {
        if self.recurrent {
            0.0
        } else {
            1.0 - self.sigma_k
        }
    }

    pub fn is_recurrent(&self) -> bool {
        self.recurrent
    }

    pub fn n_max(&self) -> usize {
        self.masses.len() - 1
    }

    /// Cached masses, index `n` holds `K(n)`; index 0 is zero.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Cached tails, index `m` holds `K̄(m)`.
    pub fn tails(&self) -> &[f64] {
        &self.tails
    }

    /// Certified width of the integral bracket that closes the cached tails.
    pub fn tail_bracket(&self) -> f64 {
        self.tail_bracket
    }

    pub fn mass(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain {
                op: "mass",
                reason: "gap lengths start at 1".into(),
            });
        }
        Ok(self.mass_unchecked(n))
    }

    pub(crate) fn mass_unchecked(&self, n: usize) -> f64 {
        if let Some(&m) = self.masses.get(n) {
            return m;
        }
        match &self.shape {
            Shape::PowerLaw(sv) => power_law_mass(self.scale, self.alpha, sv, n as f64),
            Shape::Excursion => {
                if n % 2 == 1 {
                    0.0
                } else {
                    let k = n / 2;
                    self.scale * central_binomial_ratio(k - 1) / (4.0 * k as f64)
                }
            }
        }
    }

    pub fn tail(&self, m: usize) -> f64 {
        if let Some(&t) = self.tails.get(m) {
            return t;
        }
        match &self.shape {
            Shape::PowerLaw(sv) => {
                let end = m + UNCACHED_SPAN;
                let mut s = 0.0;
                for n in (m + 1..=end).rev() {
                    s += power_law_mass(1.0, self.alpha, sv, n as f64);
                }
                self.scale * (s + em_tail_plain(self.alpha, sv, end).estimate)
            }
            Shape::Excursion => 0.5 * self.scale * central_binomial_ratio(m / 2),
        }
    }

    /// `β_c = -log Σ_K`, exactly zero for recurrent kernels.
    pub fn beta_c(&self) -> f64 {
        if self.recurrent {
            0.0
        } else {
            -self.sigma_k.ln()
        }
    }

    /// `b_n = 1 / (Γ(1-α) K̄(n))`.
    pub fn b_of_n(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain {
                op: "b_of_n",
                reason: "n must be at least 1".into(),
            });
        }
        Ok(1.0 / (gamma(1.0 - self.alpha) * self.tail(n)))
    }

    /// `γ_N = (Σ_n (1 - e^{-n/N}) K(n))^{-1}`.
    pub fn gamma_of_n(&self, n: usize) -> Result<f64> {
        if !self.recurrent {
            return Err(Error::NotRecurrent { op: "gamma_of_n" });
        }
        if n == 0 {
            return Err(Error::Domain {
                op: "gamma_of_n",
                reason: "N must be at least 1".into(),
            });
        }
        Ok(1.0 / self.one_minus_laplace(1.0 / n as f64))
    }

    /// `Σ_n (1 - e^{-λn}) K(n)` over finite `n`, computed without cancellation.
    pub fn one_minus_laplace(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Excursion => 0.5 * self.scale * (-(-2.0 * lambda).exp_m1()).sqrt(),
            Shape::PowerLaw(sv) => {
                let n_max = self.n_max();
                let cut = (EXP_CUTOFF / lambda).ceil();
                if cut < n_max as f64 {
                    let cut = cut as usize;
                    let s = compensated_sum((1..=cut).map(|n| -self.masses[n] * (-lambda * n as f64).exp_m1()));
                    s + self.tails[cut]
                } else {
                    let s = compensated_sum((1..=n_max).map(|n| -self.masses[n] * (-lambda * n as f64).exp_m1()));
                    let rest = em_tail(self.alpha, sv, n_max, |x| -(-lambda * x).exp_m1());
                    s + self.scale * rest.estimate
                }
            }
        }
    }

    /// `Σ_n e^{-λn} K(n)` over finite `n`, summed directly.
    pub fn laplace_transform(&self, lambda: f64) -> f64 {
        if lambda <= 0.0 {
            return self.sigma_k;
        }
        match &self.shape {
            Shape::Excursion => {
                let q = (-2.0 * lambda).exp();
                0.5 * self.scale * q / (1.0 + (-(-2.0 * lambda).exp_m1()).sqrt())
            }
            Shape::PowerLaw(sv) => {
                let n_max = self.n_max();
                let cut = 1.0 + (EXP_CUTOFF / lambda).ceil();
                let upper = if cut < n_max as f64 { cut as usize } else { n_max };
                let s = compensated_sum((1..=upper).map(|n| self.masses[n] * (-lambda * n as f64).exp()));
                if upper < n_max {
                    s
                } else {
                    s + self.scale * em_tail(self.alpha, sv, n_max, |x| (-lambda * x).exp()).estimate
                }
            }
        }
    }

    /// `log Σ_n e^{-λn} K(n)`, accurate both for small `λ` (via the
    /// complement) and for large `λ` (direct summation).
    pub fn ln_laplace_transform(&self, lambda: f64) -> f64 {
        if lambda < 1.0 {
            return self.sigma_k.ln() + (-self.one_minus_laplace(lambda) / self.sigma_k).ln_1p();
        }
        match &self.shape {
            Shape::Excursion => {
                self.scale.ln() - 2.0 * lambda - 2f64.ln() - (-(-2.0 * lambda).exp_m1()).sqrt().ln_1p()
            }
            Shape::PowerLaw(sv) => {
                // factor out e^{-λ} so that large λ cannot underflow
                let n_max = self.n_max();
                let cut = 2.0 + (EXP_CUTOFF / lambda).ceil();
                let upper = if cut < n_max as f64 { cut as usize } else { n_max };
                let mut s = compensated_sum((1..=upper).map(|n| self.masses[n] * (-lambda * (n - 1) as f64).exp()));
                if upper == n_max {
                    s += self.scale * em_tail(self.alpha, sv, n_max, |x| (-lambda * (x - 1.0)).exp()).estimate;
                }
                -lambda + s.ln()
            }
        }
    }

    /// `-log E[e^{-λ l₁}]` of a recurrent kernel.
    pub fn laplace_exponent(&self, lambda: f64) -> Result<f64> {
        if !(lambda > 0.0) {
            return Err(Error::Domain {
                op: "laplace_exponent",
                reason: format!("lambda must be positive, got {lambda}"),
            });
        }
        if !self.recurrent {
            return Err(Error::NotRecurrent { op: "laplace_exponent" });
        }
        Ok(-self.ln_laplace_transform(lambda))
    }

    /// Small-`λ` asymptote `(Γ(1-α)/α) λ^α A L(1/λ)` of the Laplace exponent.
    pub fn laplace_exponent_asymptote(&self, lambda: f64) -> f64 {
        gamma(1.0 - self.alpha) / self.alpha
            * lambda.powf(self.alpha)
            * self.asymptotic_amplitude()
            * self.slowly_varying_at(1.0 / lambda)
    }

    pub fn laplace_exponent_ratio(&self, lambda: f64) -> Result<f64> {
        Ok(self.laplace_exponent(lambda)? / self.laplace_exponent_asymptote(lambda))
    }

    /// Tail asymptote `A·L(N)/(α N^α)`.
    pub fn tail_asymptote(&self, n: f64) -> f64 {
        self.asymptotic_amplitude() * self.slowly_varying_at(n) / (self.alpha * n.powf(self.alpha))
    }

    /// The recurrent law `K̃(n) = K(n)/Σ_K`; the identity on recurrent kernels.
    pub fn tilt_to_recurrent(&self) -> ReturnKernel {
        if self.recurrent {
            return self.clone();
        }
        let s = self.sigma_k;
        let masses: Vec<f64> = self.masses.iter().map(|m| m / s).collect();
        let tails = tails_from(&masses, self.tails[self.n_max()] / s);
        ReturnKernel {
            alpha: self.alpha,
            shape: self.shape.clone(),
            scale: self.scale / s,
            sigma_k: 1.0,
            recurrent: true,
            masses,
            tails,
            tail_bracket: self.tail_bracket / s,
        }
    }

    /// JSON specification reproducing this kernel; `None` for the excursion kernel.
    pub fn spec(&self) -> Option<KernelSpec> {
        let sv = self.slowly_varying()?.clone();
        Some(KernelSpec {
            alpha: self.alpha,
            sv,
            mode: if self.recurrent { ModeName::Recurrent } else { ModeName::Transient },
            sigma_k: if self.recurrent { None } else { Some(self.sigma_k) },
            n_max: self.n_max(),
        })
    }
}

fn tails_from(masses: &[f64], last_tail: f64) -> Vec<f64> {
    let n_max = masses.len() - 1;
    let mut tails = vec![0.0; n_max + 1];
    tails[n_max] = last_tail;
    for m in (0..n_max).rev() {
        tails[m] = tails[m + 1] + masses[m + 1];
    }
    tails
}

/// `binom(2k,k)/4^k = Γ(k+1/2)/(√π Γ(k+1))`.
pub(crate) fn central_binomial_ratio(k: usize) -> f64 {
    if k < 64 {
        let mut r = 1.0;
        for j in 1..=k {
            r *= (2 * j - 1) as f64 / (2 * j) as f64;
        }
        return r;
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let series = 1.0
        + inv * (-1.0 / 8.0
            + inv * (1.0 / 128.0
                + inv * (5.0 / 1024.0 + inv * (-21.0 / 32768.0 + inv * (-399.0 / 262144.0 + inv * (869.0 / 4194304.0))))));
    series / (PI * x).sqrt()
}

pub(crate) fn compensated_sum(iter: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for x in iter {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) struct Bracket {
    pub estimate: f64,
    pub width: f64,
}

/// `∫_a^∞ L(x) x^{-1-α} w(x) dx`, by the substitution `x = a e^t`.
fn weighted_integral<W: Fn(f64) -> f64>(alpha: f64, sv: &SlowlyVarying, a: f64, w: &W) -> f64 {
    let ln_a = a.ln();
    quad::integrate_to_infinity(
        |t| {
            let ln_x = ln_a + t;
            (sv.ln_eval_ln(ln_x) - alpha * ln_x).exp() * w(ln_x.exp())
        },
        0.0,
        1e-12,
    )
    .value
}

fn plain_integral(alpha: f64, sv: &SlowlyVarying, a: f64) -> f64 {
    match *sv {
        SlowlyVarying::Constant { value } => value * a.powf(-alpha) / alpha,
        _ => weighted_integral(alpha, sv, a, &|_| 1.0),
    }
}

/// `Σ_{n>h} f(n)` with the bracket below.
fn em_tail_plain(alpha: f64, sv: &SlowlyVarying, h: usize) -> Bracket {
    let h = h as f64;
    let upper = plain_integral(alpha, sv, h + 0.5);
    let lower = plain_integral(alpha, sv, h + 1.0) + 0.5 * power_law_mass(1.0, alpha, sv, h + 1.0);
    Bracket {
        estimate: (2.0 * upper + lower) / 3.0,
        width: (upper - lower).abs(),
    }
}

/// `Σ_{n>h} f(n) w(n)` for `f = L(n)/n^{1+α}`: midpoint and trapezoid integrals
/// bracket the sum for convex summands; their 2:1 combination cancels the
/// leading Euler–Maclaurin term.
fn em_tail<W: Fn(f64) -> f64>(alpha: f64, sv: &SlowlyVarying, h: usize, w: W) -> Bracket {
    let h = h as f64;
    let upper = weighted_integral(alpha, sv, h + 0.5, &w);
    let lower = weighted_integral(alpha, sv, h + 1.0, &w) + 0.5 * power_law_mass(1.0, alpha, sv, h + 1.0) * w(h + 1.0);
    Bracket {
        estimate: (2.0 * upper + lower) / 3.0,
        width: (upper - lower).abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ζ(s) by partial sums plus the Euler–Maclaurin remainder.
    fn zeta(s: f64) -> f64 {
        let n = 100_000.0_f64;
        let mut sum = 0.0;
        for k in (1..=100_000).rev() {
            sum += (k as f64).powf(-s);
        }
        sum + n.powf(1.0 - s) / (s - 1.0) - 0.5 * n.powf(-s) + s / 12.0 * n.powf(-s - 1.0)
    }

    fn unit() -> SlowlyVarying {
        SlowlyVarying::Constant { value: 1.0 }
    }

    #[test]
    fn recurrent_first_mass_is_inverse_zeta() {
        let k = ReturnKernel::build(0.5, unit(), KernelMode::Recurrent, 1000).unwrap();
        let z = zeta(1.5);
        assert!((k.mass(1).unwrap() - 1.0 / z).abs() < 1e-12);
        assert!((k.tail(1) - (1.0 - 1.0 / z)).abs() < 1e-12);
        assert!((k.tail(0) - 1.0).abs() < 1e-14);
        assert_eq!(k.beta_c(), 0.0);
    }

    #[test]
    fn transient_mass_at_infinity() {
        let k = ReturnKernel::build(0.5, unit(), KernelMode::Transient { sigma_k: 0.5 }, 200).unwrap();
        assert_eq!(k.mass_infinity(), 0.5);
        assert!((k.tail(0) - 0.5).abs() < 1e-14);
        assert!((k.beta_c() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn unnormalized_formula() {
        assert_eq!(power_law_mass(1.0, 0.5, &unit(), 4.0), 0.125);
    }

    #[test]
    fn construction_errors() {
        assert!(ReturnKernel::build(1.0, unit(), KernelMode::Recurrent, 10).is_err());
        assert!(ReturnKernel::build(0.0, unit(), KernelMode::Recurrent, 10).is_err());
        let bad = SlowlyVarying::ExpLogPower { a: 0.5, c: 1.0 };
        assert!(ReturnKernel::build(0.5, bad, KernelMode::Recurrent, 10).is_err());
        assert!(ReturnKernel::build(0.5, unit(), KernelMode::Transient { sigma_k: 1.0 }, 10).is_err());
        assert!(ReturnKernel::build(0.5, unit(), KernelMode::Transient { sigma_k: 0.0 }, 10).is_err());
        assert!(ReturnKernel::build(0.5, unit(), KernelMode::Recurrent, 1).is_err());
        let k = ReturnKernel::build(0.5, unit(), KernelMode::Recurrent, 10).unwrap();
        assert!(matches!(k.mass(0), Err(Error::Domain { .. })));
    }

    #[test]
    fn tail_chain_is_consistent_with_masses() {
        for sv in [
            unit(),
            SlowlyVarying::LogPower { exponent: -1.5 },
            SlowlyVarying::ExpLogPower { a: 0.7, c: 0.4 },
        ] {
            let k = ReturnKernel::build(0.3, sv, KernelMode::Transient { sigma_k: 0.7 }, 500).unwrap();
            for m in 0..500 {
                let d = k.tail(m) - k.tail(m + 1) - k.mass(m + 1).unwrap();
                assert!(d.abs() <= 4.0 * f64::EPSILON * k.tail(m), "m = {m}: {d}");
            }
            assert!((k.tail(0) - 0.7).abs() < 1e-14);
            assert!(k.tail_bracket() < 1e-10);
        }
    }

    #[test]
    fn uncached_tail_continues_the_cache() {
        let sv = SlowlyVarying::LogPower { exponent: 1.0 };
        let small = ReturnKernel::build(0.4, sv.clone(), KernelMode::Recurrent, 100).unwrap();
        let large = ReturnKernel::build(0.4, sv, KernelMode::Recurrent, 3000).unwrap();
        for m in [150, 1000, 2999] {
            let rel = (small.tail(m) / large.tail(m) - 1.0).abs();
            assert!(rel < 1e-11, "m = {m}: {rel}");
        }
    }

    #[test]
    fn b_of_n_matches_partial_sum_value() {
        let k = ReturnKernel::build(0.5, unit(), KernelMode::Recurrent, 10_000).unwrap();
        // oracle: K̄(10^4) = (1/ζ(3/2)) Σ_{n>10^4} n^{-3/2}
        let z = zeta(1.5);
        let mut partial = 0.0;
        for n in (1..=10_000).rev() {
            partial += (n as f64).powf(-1.5);
        }
        let tail = (z - partial) / z;
        assert!((k.tail(10_000) / tail - 1.0).abs() < 1e-9);
        let b = k.b_of_n(10_000).unwrap();
        assert!((b - 1.0 / (PI.sqrt() * tail)).abs() < 1e-6 * b);
        assert!((b - 73.7).abs() < 0.05, "{b}");
        let mut prev = 0.0;
        for n in 1..2000 {
            let b = k.b_of_n(n).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn tilt_divides_by_total_mass() {
        let k = ReturnKernel::build(0.5, unit(), KernelMode::Transient { sigma_k: 0.5 }, 300).unwrap();
        let t = k.tilt_to_recurrent();
        assert!(t.is_recurrent());
        assert!((t.mass(2).unwrap() - 2.0 * k.mass(2).unwrap()).abs() < 1e-16);
        assert!((t.tail(0) - 1.0).abs() < 1e-12);
        assert_eq!(t.tilt_to_recurrent(), t);
        let ratio = t.b_of_n(200).unwrap() / k.b_of_n(200).unwrap();
        assert!((ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn laplace_exponent_limits() {
        let k = ReturnKernel::build(0.5, unit(), KernelMode::Recurrent, 1000).unwrap();
        let lambda = 30.0;
        let v = k.laplace_exponent(lambda).unwrap();
        let expected = lambda - k.mass(1).unwrap().ln();
        assert!((v - expected).abs() < 1e-9);
        let mut prev = 0.0;
        for i in 1..60 {
            let l = 10f64.powf(-7.0 + 0.15 * i as f64);
            let v = k.laplace_exponent(l).unwrap();
            assert!(v > prev);
            prev = v;
        }
        assert!(k.laplace_exponent(0.0).is_err());
        let tr = ReturnKernel::build(0.5, unit(), KernelMode::Transient { sigma_k: 0.5 }, 100).unwrap();
        assert!(matches!(tr.laplace_exponent(1.0), Err(Error::NotRecurrent { .. })));
    }

    #[test]
    fn laplace_pieces_are_complementary() {
        let k = ReturnKernel::build(0.6, SlowlyVarying::LogPower { exponent: 0.5 }, KernelMode::Transient { sigma_k: 0.8 }, 2000)
            .unwrap();
        for lambda in [1e-6, 1e-3, 0.02, 0.5, 2.0] {
            let s = k.one_minus_laplace(lambda) + k.laplace_transform(lambda);
            assert!((s - 0.8).abs() < 1e-12, "{lambda}: {s}");
        }
    }

    #[test]
    fn excursion_kernel_values() {
        let k = ReturnKernel::excursion(100).unwrap();
        assert_eq!(k.mass(2).unwrap(), 0.25);
        assert_eq!(k.mass(4).unwrap(), 1.0 / 16.0);
        assert_eq!(k.mass(6).unwrap(), 1.0 / 32.0);
        assert_eq!(k.mass(5).unwrap(), 0.0);
        assert!((k.tail(1) - 0.5).abs() < 1e-15);
        assert!((k.tail(2) - 0.25).abs() < 1e-15);
        assert!((k.tail(3) - 0.25).abs() < 1e-15);
        // uncached values continue the cached ones
        let big = ReturnKernel::excursion(4000).unwrap();
        for m in [101, 500, 3999] {
            assert!((k.tail(m) / big.tail(m) - 1.0).abs() < 1e-13);
            assert!((k.mass(m + 1).unwrap() - big.mass(m + 1).unwrap()).abs() < 1e-13 * big.mass(m + 1).unwrap().max(1e-300));
        }
    }

    #[test]
    fn central_binomial_asymptotics_match_products() {
        let mut r = 1.0;
        for j in 1..=2000usize {
            r *= (2 * j - 1) as f64 / (2 * j) as f64;
            if j >= 64 {
                assert!((central_binomial_ratio(j) / r - 1.0).abs() < 1e-13, "{j}");
            }
        }
    }

    #[test]
    fn spec_json_round_trip() {
        let json = r#"{"alpha":0.5,"sv":{"variant":"log_power","exponent":2.0},"mode":"transient","sigma_k":0.5,"n_max":64}"#;
        let spec: KernelSpec = serde_json::from_str(json).unwrap();
        let k = spec.build().unwrap();
        assert_eq!(k.spec().unwrap(), spec);
        let bad = r#"{"alpha":0.5,"sv":{"variant":"constant","value":1.0},"mode":"transient","n_max":64}"#;
        let err = serde_json::from_str::<KernelSpec>(bad).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("sigma_k"));
        let typo = r#"{"alpah":0.5,"sv":{"variant":"constant","value":1.0},"mode":"recurrent","n_max":64}"#;
        assert!(serde_json::from_str::<KernelSpec>(typo).unwrap_err().to_string().contains("alpah"));
    }
}
