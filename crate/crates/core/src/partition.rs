//! Partition functions `Z_{N,β}`, free energies and exact contact-count
//! moments of the homogeneous pinning model.
//!
//! Contacts are counted in `(0,N]`; the renewal epoch at 0 is not a contact,
//! so `Z_{N,0} = 1` holds exactly for recurrent kernels.
//!
//! The recursion runs on exponentially tilted values `y(m) = Z(m) e^{-s m}`
//! with `s = max(F(β), 0)`, which keeps every entry of order one and lets the
//! convolutions run in plain (vectorizable) arithmetic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::ReturnKernel;

/// Largest size accepted by [`brute_force`].
pub const BRUTE_FORCE_LIMIT: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Free endpoint, last excursion may be infinite: `w(m) = K̄(m) + K(∞)`.
    FreeWithInfinity,
    /// Free endpoint restricted to finite gaps: `w(m) = K̄(m)`.
    FreeFiniteTail,
    /// Contact forced at `N`.
    Constrained,
}

impl Boundary {
    fn weight(self, kernel: &ReturnKernel, m: usize) -> f64 {
        if m == 0 {
            return 1.0;
        }
        match self {
            Boundary::FreeWithInfinity => kernel.tail(m) + kernel.mass_infinity(),
            Boundary::FreeFiniteTail => kernel.tail(m),
            Boundary::Constrained => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DpOptions {
    /// Propagate the first two moments of the contact count.
    pub moments: bool,
    /// Drop gaps whose tilted weight `e^β K̄(n) e^{-sn}` is below this level.
    /// Only effective when `F(β) > 0`.
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PartitionTable {
    n: usize,
    beta: f64,
    boundary: Boundary,
    shift: f64,
    gaps: Vec<f64>,
    forcing: Vec<f64>,
    scaled: Vec<f64>,
    first: Option<Vec<f64>>,
    second: Option<Vec<f64>>,
    truncation_bound: f64,
}

impl PartitionTable {
    pub fn build(kernel: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::with_options(kernel, beta, n, boundary, DpOptions::default())
    }

    pub fn with_moments(kernel: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> Result<Self> {
        Self::with_options(
            kernel,
            beta,
            n,
            boundary,
            DpOptions {
                moments: true,
                truncation: None,
            },
        )
    }

    pub fn with_options(
        kernel: &ReturnKernel,
        beta: f64,
        n: usize,
        boundary: Boundary,
        options: DpOptions,
    ) -> Result<Self> {
        if !beta.is_finite() {
            return Err(crate::error::invalid("beta", format!("must be finite, got {beta}")));
        }
        if n > kernel.n_max() {
            return Err(Error::SizeExceedsKernel {
                size: n,
                n_max: kernel.n_max(),
            });
        }
        let shift = free_energy(kernel, beta)?;
        let e_beta = beta.exp();

        let mut len = n;
        if let (Some(tol), true) = (options.truncation, shift > 0.0) {
            if let Some(cut) = (1..=n).find(|&k| e_beta * kernel.tail(k) * (-shift * k as f64).exp() < tol) {
                len = cut;
            }
        }
        let gaps: Vec<f64> = (0..=len)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    e_beta * kernel.masses()[k] * (-shift * k as f64).exp()
                }
            })
            .collect();
        let forcing: Vec<f64> = (0..=n)
            .map(|m| boundary.weight(kernel, m) * (-shift * m as f64).exp())
            .collect();

        let mut scaled = vec![0.0; n + 1];
        // rev[n - j] holds y(j), so the history needed at step m is contiguous
        let mut rev = vec![0.0; n + 1];
        scaled[0] = forcing[0];
        rev[n] = scaled[0];
        let (mut first, mut second) = if options.moments {
            (Some(vec![0.0; n + 1]), Some(vec![0.0; n + 1]))
        } else {
            (None, None)
        };
        let mut rev1 = vec![0.0; if options.moments { n + 1 } else { 0 }];
        let mut rev2 = rev1.clone();

        for m in 1..=n {
            let k = m.min(len);
            let p = &gaps[1..=k];
            let lo = n + 1 - k;
            if options.moments {
                let [d0, d1, d2] = dot3(p, &rev[lo..], &rev1[lo..], &rev2[lo..]);
                let a0 = d0 + forcing[m];
                let a1 = d1 + d0;
                let a2 = d2 + 2.0 * d1 + d0;
                scaled[m] = a0;
                rev[n - m] = a0;
                rev1[n - m] = a1;
                rev2[n - m] = a2;
            } else {
                let y = dot(p, &rev[lo..]) + forcing[m];
                scaled[m] = y;
                rev[n - m] = y;
            }
        }
        if let (Some(f), Some(s)) = (first.as_mut(), second.as_mut()) {
            for m in 0..=n {
                let y = scaled[m];
                if y > 0.0 {
                    f[m] = rev1[n - m] / y;
                    s[m] = rev2[n - m] / y;
                }
            }
        }

        let truncation_bound = if len < n {
            let positive = scaled.iter().filter(|&&y| y > 0.0);
            let max = positive.clone().fold(0.0f64, |a, &b| a.max(b));
            let min = positive.fold(f64::INFINITY, |a, &b| a.min(b));
            n as f64 * e_beta * kernel.tail(len) * (-shift * len as f64).exp() * max / min
        } else {
            0.0
        };

        Ok(PartitionTable {
            n,
            beta,
            boundary,
            shift,
            gaps,
            forcing,
            scaled,
            first,
            second,
            truncation_bound,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// The tilt `s` of the stored values.
    pub fn shift(&self) -> f64 {
        self.shift
    }

    /// Bound on the relative error of `Z(N)` introduced by gap truncation.
    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    pub fn log_z(&self, m: usize) -> f64 {
        self.scaled[m].ln() + self.shift * m as f64
    }

    pub fn log_z_all(&self) -> Vec<f64> {
        (0..=self.n).map(|m| self.log_z(m)).collect()
    }

    /// `E[count]` at size `m` (requires moments).
    pub fn mean(&self, m: usize) -> Option<f64> {
        self.first.as_ref().map(|f| f[m])
    }

    /// `Var(count)` at size `m` (requires moments).
    pub fn variance(&self, m: usize) -> Option<f64> {
        let mean = self.mean(m)?;
        self.second.as_ref().map(|s| (s[m] - mean * mean).max(0.0))
    }

    pub(crate) fn scaled(&self) -> &[f64] {
        &self.scaled
    }

    pub(crate) fn gap_weights(&self) -> &[f64] {
        &self.gaps
    }

    pub(crate) fn forcing(&self) -> &[f64] {
        &self.forcing
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

fn dot3(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> [f64; 3] {
    let k = p.len();
    let (a, b, c) = (&a[..k], &b[..k], &c[..k]);
    let mut acc = [[0.0; 4]; 3];
    let split = k - k % 4;
    for i in (0..split).step_by(4) {
        for j in 0..4 {
            acc[0][j] += p[i + j] * a[i + j];
            acc[1][j] += p[i + j] * b[i + j];
            acc[2][j] += p[i + j] * c[i + j];
        }
    }
    let mut out = acc.map(|v| (v[0] + v[1]) + (v[2] + v[3]));
    for i in split..k {
        out[0] += p[i] * a[i];
        out[1] += p[i] * b[i];
        out[2] += p[i] * c[i];
    }
    out
}

/// `log Z^c(0..=N)`, the constrained partition functions.
pub fn constrained_log_z(kernel: &ReturnKernel, beta: f64, n: usize) -> Result<Vec<f64>> {
    Ok(PartitionTable::build(kernel, beta, n, Boundary::Constrained)?.log_z_all())
}

pub fn free_log_z(kernel: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> Result<f64> {
    Ok(PartitionTable::build(kernel, beta, n, boundary)?.log_z(n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteFreeEnergy {
    pub f_n: f64,
    /// `1/F_N`, infinite when `F_N ≤ 0`.
    pub xi_n: f64,
}

pub fn finite_free_energy(kernel: &ReturnKernel, beta: f64, n: usize) -> Result<FiniteFreeEnergy> {
    if n == 0 {
        return Err(Error::Domain {
            op: "finite_free_energy",
            reason: "N must be at least 1".into(),
        });
    }
    let f_n = free_log_z(kernel, beta, n, Boundary::FreeWithInfinity)? / n as f64;
    Ok(FiniteFreeEnergy {
        f_n,
        xi_n: correlation_length_of(f_n),
    })
}

pub(crate) fn correlation_length_of(f: f64) -> f64 {
    if f > 0.0 {
        1.0 / f
    } else {
        f64::INFINITY
    }
}

/// `F(β)`: zero for `β ≤ β_c`, otherwise the root `b` of `Σ e^β K(n) e^{-bn} = 1`.
pub fn free_energy(kernel: &ReturnKernel, beta: f64) -> Result<f64> {
    let delta = beta - kernel.beta_c();
    if delta <= 0.0 {
        return Ok(0.0);
    }
    let sigma = kernel.sigma_k();
    // decreasing in b, positive at 0+ and nonpositive at b = δ
    let h = |b: f64| {
        if b < 1.0 {
            delta + (-kernel.one_minus_laplace(b) / sigma).ln_1p()
        } else {
            beta + kernel.ln_laplace_transform(b)
        }
    };
    let (mut lo, mut hi) = (1e-300f64, delta);
    if h(lo) <= 0.0 || h(hi) > 0.0 {
        return Err(Error::RootBracket {
            op: "free_energy",
            lo,
            hi,
        });
    }
    for _ in 0..400 {
        if hi <= lo * (1.0 + 1e-14) {
            break;
        }
        let mid = (lo * hi).sqrt();
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi > lo * (1.0 + 1e-12) {
        return Err(Error::RootBracket {
            op: "free_energy",
            lo,
            hi,
        });
    }
    Ok(0.5 * (lo + hi))
}

/// `ξ(β) = 1/F(β)`, infinite in the delocalized phase.
pub fn correlation_length(kernel: &ReturnKernel, beta: f64) -> Result<f64> {
    Ok(correlation_length_of(free_energy(kernel, beta)?))
}

/// The `β` with `F(β) = target`, i.e. `β = -log Σ K(n) e^{-target·n}`.
pub fn invert_free_energy(kernel: &ReturnKernel, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::Domain {
            op: "invert_free_energy",
            reason: format!("target must be positive, got {target}"),
        });
    }
    if target < 1e-300 || !target.is_finite() {
        return Err(Error::Unreachable { target });
    }
    let beta = -kernel.ln_laplace_transform(target);
    if !beta.is_finite() || beta <= kernel.beta_c() {
        return Err(Error::Unreachable { target });
    }
    Ok(beta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContactMoments {
    pub mean: f64,
    pub variance: f64,
}

pub fn contact_moments(kernel: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> Result<ContactMoments> {
    let table = PartitionTable::with_moments(kernel, beta, n, boundary)?;
    Ok(ContactMoments {
        mean: table.mean(n).unwrap_or(0.0),
        variance: table.variance(n).unwrap_or(0.0),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enumerated {
    pub log_z: f64,
    pub mean: f64,
    pub variance: f64,
}

/// Exact enumeration over all contact subsets of `{1..N}`.
pub fn brute_force(kernel: &ReturnKernel, beta: f64, n: usize, boundary: Boundary) -> Result<Enumerated> {
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::EnumerationTooLarge {
            size: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if n > kernel.n_max() {
        return Err(Error::SizeExceedsKernel {
            size: n,
            n_max: kernel.n_max(),
        });
    }
    let ln_mass: Vec<f64> = (0..=n).map(|k| if k == 0 { f64::NEG_INFINITY } else { kernel.masses()[k].ln() }).collect();
    let ln_w: Vec<f64> = (0..=n).map(|m| boundary.weight(kernel, m).ln()).collect();

    let mut terms = Vec::with_capacity(1 << n);
    for mask in 0u32..(1u32 << n) {
        let mut lw = 0.0;
        let mut last = 0;
        let count = mask.count_ones() as usize;
        for i in 1..=n {
            if mask >> (i - 1) & 1 == 1 {
                lw += beta + ln_mass[i - last];
                last = i;
            }
        }
        lw += ln_w[n - last];
        if lw > f64::NEG_INFINITY {
            terms.push((lw, count as f64));
        }
    }
    let max = terms.iter().fold(f64::NEG_INFINITY, |a, t| a.max(t.0));
    let (mut z, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &(lw, c) in &terms {
        let w = (lw - max).exp();
        z += w;
        s1 += w * c;
        s2 += w * c * c;
    }
    let mean = s1 / z;
    Ok(Enumerated {
        log_z: max + z.ln(),
        mean,
        variance: (s2 / z - mean * mean).max(0.0),
    })
}
