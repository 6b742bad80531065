use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use pinlab_core::kernel::ModeName;
use pinlab_core::partition::{correlation_length, free_energy};
use pinlab_core::sampler::{replica_rng, replicate_statistics, SearchStrategy};
use pinlab_core::scaling::{fss_curve, ScalingConstants};
use pinlab_core::setspace::{hausdorff, ks_distance, ks_two_sample, wasserstein1, ClosedSet};
use pinlab_core::stable::{sample_regenerative_batch, tilt_weight, StableLaw};
use pinlab_core::validation::{self, Mode, Status};
use pinlab_core::wetting::endpoint_curves;
use pinlab_core::{Boundary, ContactSampler, KernelSpec, PartitionTable, ReturnKernel, SlowlyVarying};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::args::{BoundaryArg, KernelArgs};
use crate::output::{Cell, Table};

const DEFAULT_N_MAX: usize = 100_000;
/// Draws per RNG stream in `stable-check`; fixed so output does not depend on threads.
const STABLE_CHUNK: usize = 10_000;
const KS_CRITICAL_95: f64 = 1.358;

pub struct Computed {
    pub table: Table,
    pub extra: Vec<(&'static str, Value)>,
}

impl From<Table> for Computed {
    fn from(table: Table) -> Self {
        Computed { table, extra: Vec::new() }
    }
}

/// Deserializes `text`, naming the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(what: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            anyhow!("malformed {what}: {}", e.inner())
        } else {
            anyhow!("malformed {what}: field `{path}`: {}", e.inner())
        }
    })
}

pub fn resolve_kernel(args: &KernelArgs) -> Result<(KernelSpec, ReturnKernel)> {
    let spec = match &args.kernel {
        Some(src) => {
            let text = if src.trim_start().starts_with('{') {
                src.clone()
            } else {
                fs::read_to_string(src).with_context(|| format!("reading kernel file {src}"))?
            };
            let mut spec: KernelSpec = parse_json("kernel JSON", &text)?;
            if let Some(sv) = &args.sv {
                spec.sv = parse_json("--sv", sv)?;
            }
            spec
        }
        None => {
            let alpha = args.alpha.ok_or_else(|| anyhow!("--alpha or --kernel is required"))?;
            let sv = match &args.sv {
                Some(s) => parse_json("--sv", s)?,
                None => SlowlyVarying::Constant { value: 1.0 },
            };
            let sigma_k = args.sigma_k.filter(|&s| s != 1.0);
            let mode = if sigma_k.is_some() {
                ModeName::Transient
            } else {
                ModeName::Recurrent
            };
            KernelSpec {
                alpha,
                sv,
                mode,
                sigma_k,
                n_max: args.n_max.unwrap_or(DEFAULT_N_MAX),
            }
        }
    };
    let kernel = spec.build().context("invalid kernel")?;
    Ok((spec, kernel))
}

fn boundary(b: BoundaryArg) -> Boundary {
    match b {
        BoundaryArg::FreeWithInfinity => Boundary::FreeWithInfinity,
        BoundaryArg::FreeFiniteTail => Boundary::FreeFiniteTail,
        BoundaryArg::Constrained => Boundary::Constrained,
    }
}

fn boundary_name(b: BoundaryArg) -> &'static str {
    match b {
        BoundaryArg::FreeWithInfinity => "free_with_infinity",
        BoundaryArg::FreeFiniteTail => "free_finite_tail",
        BoundaryArg::Constrained => "constrained",
    }
}

/// `start:stop:step`, inclusive of `stop` up to rounding.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| anyhow!("--beta-grid: `{p}` is not a number")))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        bail!("--beta-grid must have the form start:stop:step");
    };
    if !(step > 0.0) || !(stop >= start) {
        bail!("--beta-grid needs step > 0 and stop >= start");
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    if count > 1_000_000 {
        bail!("--beta-grid has {count} points");
    }
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

fn require_sizes(n: &[usize]) -> Result<usize> {
    match n.iter().max() {
        Some(&m) if n.iter().all(|&x| x >= 1) => Ok(m),
        _ => bail!("--N needs at least one size, each at least 1"),
    }
}

pub fn kernel_info(spec: &KernelSpec, k: &ReturnKernel, points: &[usize]) -> Result<Computed> {
    let points: Vec<usize> = if points.is_empty() {
        std::iter::successors(Some(1usize), |p| p.checked_mul(10))
            .take_while(|&p| p <= k.n_max())
            .collect()
    } else {
        points.to_vec()
    };
    let tilt = k.tilt_to_recurrent();
    let mut t = Table::new(&["n", "K", "Kbar", "b_n", "gamma_n"]);
    for n in points {
        t.push(vec![
            n.into(),
            k.mass(n)?.into(),
            k.tail(n).into(),
            tilt.b_of_n(n)?.into(),
            tilt.gamma_of_n(n)?.into(),
        ]);
    }
    Ok(Computed {
        table: t,
        extra: vec![
            ("kernel", serde_json::to_value(spec)?),
            (
                "summary",
                json!({
                    "amplitude": k.amplitude(),
                    "sigma_k": k.sigma_k(),
                    "mass_infinity": k.mass_infinity(),
                    "beta_c": k.beta_c(),
                    "normalizing_sequences": "b_n and gamma_n of the recurrent tilt",
                }),
            ),
        ],
    })
}

pub fn free_energy_table(spec: &KernelSpec, k: &ReturnKernel, grid: &str, sizes: &[usize]) -> Result<Computed> {
    let betas = parse_grid(grid)?;
    let n_top = require_sizes(sizes)?;
    let blocks: Vec<Vec<Vec<Cell>>> = betas
        .par_iter()
        .map(|&beta| {
            let f = free_energy(k, beta)?;
            let xi = correlation_length(k, beta)?;
            let table = PartitionTable::with_moments(k, beta, n_top, Boundary::FreeWithInfinity)?;
            Ok(sizes
                .iter()
                .map(|&n| {
                    let nf = n as f64;
                    let f_n = table.log_z(n) / nf;
                    let xi_n = if f_n > 0.0 { 1.0 / f_n } else { f64::INFINITY };
                    vec![
                        beta.into(),
                        n.into(),
                        f.into(),
                        xi.into(),
                        f_n.into(),
                        xi_n.into(),
                        (table.mean(n).unwrap_or(f64::NAN) / nf).into(),
                        (table.variance(n).unwrap_or(f64::NAN) / nf).into(),
                    ]
                })
                .collect())
        })
        .collect::<pinlab_core::Result<_>>()?;
    let mut t = Table::new(&["beta", "N", "F", "xi", "F_N", "xi_N", "rho_N", "chi_N"]);
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    Ok(Computed {
        table: t,
        extra: vec![("kernel", serde_json::to_value(spec)?)],
    })
}

pub fn observables(spec: &KernelSpec, k: &ReturnKernel, betas: &[f64], sizes: &[usize], b: BoundaryArg) -> Result<Computed> {
    let n_top = require_sizes(sizes)?;
    let blocks: Vec<Vec<Vec<Cell>>> = betas
        .par_iter()
        .map(|&beta| {
            let table = PartitionTable::with_moments(k, beta, n_top, boundary(b))?;
            Ok(sizes
                .iter()
                .map(|&n| {
                    let nf = n as f64;
                    let mean = table.mean(n).unwrap_or(f64::NAN);
                    let var = table.variance(n).unwrap_or(f64::NAN);
                    vec![
                        beta.into(),
                        n.into(),
                        boundary_name(b).into(),
                        table.log_z(n).into(),
                        mean.into(),
                        var.into(),
                        (mean / nf).into(),
                        (var / nf).into(),
                    ]
                })
                .collect())
        })
        .collect::<pinlab_core::Result<_>>()?;
    let mut t = Table::new(&["beta", "N", "boundary", "log_Z", "mean", "variance", "rho_N", "chi_N"]);
    blocks.into_iter().flatten().for_each(|r| t.push(r));
    Ok(Computed {
        table: t,
        extra: vec![("kernel", serde_json::to_value(spec)?)],
    })
}

pub struct SampleRequest {
    pub beta: f64,
    pub n: usize,
    pub replicas: usize,
    pub boundary: BoundaryArg,
    pub prefix_search: bool,
    pub seed: u64,
}

pub fn sample(spec: &KernelSpec, k: &ReturnKernel, req: &SampleRequest) -> Result<Computed> {
    let table = PartitionTable::build(k, req.beta, req.n, boundary(req.boundary))?;
    let strategy = if req.prefix_search {
        SearchStrategy::PrefixSearch
    } else {
        SearchStrategy::Linear
    };
    let sampler = ContactSampler::from_table(table, strategy)?;
    let rows = replicate_statistics(k, &sampler, req.replicas, req.seed)?;
    let mut t = Table::new(&["replica", "count", "count_over_bN", "last_over_N"]);
    for r in rows {
        t.push(vec![r.replica.into(), r.count.into(), r.count_over_bn.into(), r.last_over_n.into()]);
    }
    Ok(Computed {
        table: t,
        extra: vec![
            ("kernel", serde_json::to_value(spec)?),
            ("b_N", json!(k.tilt_to_recurrent().b_of_n(req.n.max(1))?)),
        ],
    })
}

pub fn wetting_endpoint(n: usize, betas: &[f64], eps: &[f64]) -> Result<Computed> {
    if betas.is_empty() && eps.is_empty() {
        bail!("give at least one of --beta-list and --eps-list");
    }
    let curves = endpoint_curves(n, betas, eps)?;
    let mut t = Table::new(&["x", "curve_id", "value"]);
    let mut info = Vec::new();
    for c in &curves {
        for (x, &v) in c.distribution.values.iter().enumerate() {
            t.push(vec![x.into(), c.id.clone().into(), v.into()]);
        }
        info.push(json!({
            "curve_id": c.id,
            "beta": c.beta,
            "cutoff": c.distribution.cutoff,
            "cutoff_shift": c.distribution.cutoff_shift,
        }));
    }
    Ok(Computed {
        table: t,
        extra: vec![("curves", Value::Array(info))],
    })
}

pub fn stable_check(alpha: f64, samples: usize, seed: u64) -> Result<Computed> {
    if samples < 2 {
        bail!("--samples must be at least 2");
    }
    let law = StableLaw::new(alpha)?;
    let chunks = samples.div_ceil(STABLE_CHUNK);
    let drawn: Vec<(Vec<f64>, Vec<f64>)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let m = STABLE_CHUNK.min(samples - c * STABLE_CHUNK);
            let mut rng = replica_rng(seed, c as u64);
            (0..m).map(|_| (law.sample(&mut rng), law.sample_local_time(&mut rng))).unzip()
        })
        .collect();
    let (sigma, local): (Vec<f64>, Vec<f64>) = drawn.into_iter().fold((Vec::new(), Vec::new()), |mut acc, (s, l)| {
        acc.0.extend(s);
        acc.1.extend(l);
        acc
    });
    let n = samples as f64;
    let below = sigma.iter().filter(|&&s| s <= 1.0).count() as f64 / n;
    let mean = local.iter().sum::<f64>() / n;
    let critical = KS_CRITICAL_95 / n.sqrt();
    let mut t = Table::new(&["statistic", "value", "reference"]);
    t.push(vec!["P(sigma_1<=1)".into(), below.into(), law.cdf(1.0).into()]);
    t.push(vec!["KS(sigma_1)".into(), ks_distance(&sigma, |x| law.cdf(x))?.into(), critical.into()]);
    t.push(vec!["E[L_1]".into(), mean.into(), (1.0 / statrs::function::gamma::gamma(1.0 + alpha)).into()]);
    t.push(vec!["KS(L_1)".into(), ks_distance(&local, |x| law.local_time_cdf(x))?.into(), critical.into()]);
    Ok(Computed {
        table: t,
        extra: vec![("reference", json!("exact value, or the 95% KS critical value for KS rows"))],
    })
}

pub fn limit_law(alpha: f64, eps: f64, transient: bool, mesh: f64, samples: usize, seed: u64) -> Result<Computed> {
    let draws = sample_regenerative_batch(alpha, mesh, false, &[], samples, seed)?;
    let mut t = Table::new(&["sample", "L1", "g", "weight"]);
    for (i, s) in draws.iter().enumerate() {
        t.push(vec![i.into(), s.l1.into(), s.g.into(), tilt_weight(alpha, eps, transient, s).into()]);
    }
    Ok(Computed {
        table: t,
        extra: vec![("weight", json!("unnormalized density of the tilted law against the regenerative set"))],
    })
}

pub fn fss(spec: &KernelSpec, k: &ReturnKernel, sizes: &[usize], qs: &[f64]) -> Result<Computed> {
    require_sizes(sizes)?;
    let consts = ScalingConstants::measure(k)?;
    let rows = fss_curve(k, sizes, qs)?;
    let mut t = Table::new(&[
        "N",
        "q",
        "beta",
        "xiN_over_N",
        "f_limit",
        "rhoN_scaled",
        "rho_hat",
        "chiN_scaled",
        "chi_hat",
        "chi_hat_untilted",
    ]);
    for r in rows {
        t.push(vec![
            r.n.into(),
            r.q.into(),
            r.beta.into(),
            r.xi_n_over_n.into(),
            r.f_limit.into(),
            r.rho_n_scaled.into(),
            r.rho_hat.into(),
            r.chi_n_scaled.into(),
            r.chi_hat.into(),
            r.chi_hat_untilted.into(),
        ]);
    }
    Ok(Computed {
        table: t,
        extra: vec![
            ("kernel", serde_json::to_value(spec)?),
            ("scaling_constants", serde_json::to_value(consts)?),
        ],
    })
}

/// Reads column `column` of a CSV file, skipping `#` lines and a non-numeric header.
pub fn read_column(path: &Path, column: usize) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.with_context(|| format!("reading {}", path.display()))?;
        let field = rec
            .get(column)
            .ok_or_else(|| anyhow!("{}: line {} has no column {column}", path.display(), i + 1))?;
        match field.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue,
            Err(_) => bail!("{}: `{field}` is not a number", path.display()),
        }
    }
    if out.len() < 2 {
        bail!("{}: need at least two values", path.display());
    }
    Ok(out)
}

pub fn set_compare(a: &Path, b: &Path, column: usize) -> Result<Computed> {
    let xa = read_column(a, column)?;
    let xb = read_column(b, column)?;
    let mut t = Table::new(&["statistic", "value"]);
    t.push(vec!["ks".into(), ks_two_sample(&xa, &xb, None)?.into()]);
    t.push(vec!["wasserstein1".into(), wasserstein1(&xa, &xb, None)?.into()]);
    // Set statistics only make sense for point clouds in [0,1].
    let sets = (ClosedSet::new(xa), ClosedSet::new(xb));
    let as_sets = matches!(sets, (Ok(_), Ok(_)));
    if let (Ok(sa), Ok(sb)) = sets {
        t.push(vec!["hausdorff".into(), hausdorff(sa.points(), sb.points())?.into()]);
        for i in 1..=9 {
            let s = i as f64 / 10.0;
            t.push(vec![format!("d_{s}(a)").into(), sa.d_t(s).into()]);
            t.push(vec![format!("d_{s}(b)").into(), sb.d_t(s).into()]);
        }
    }
    Ok(Computed {
        table: t,
        extra: vec![("set_statistics", json!(as_sets))],
    })
}

/// Runs the criteria, printing each line through `line`; returns the table and
/// whether every criterion passed.
pub fn validate(quick: bool, seed: u64, mut line: impl FnMut(&str)) -> (Computed, bool) {
    let mode = if quick { Mode::Quick } else { Mode::Full };
    let reports = validation::run(mode, seed, |r| line(&r.to_string()));
    let mut t = Table::new(&["criterion", "title", "status", "detail"]);
    for r in &reports {
        let status = match r.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        };
        t.push(vec![(r.id as usize).into(), r.title.into(), status.into(), r.detail.clone().into()]);
    }
    let ok = reports.iter().all(|r| r.passed());
    (t.into(), ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_inclusive_and_drift_free() {
        let g = parse_grid("-0.3:0.3:0.1").unwrap();
        assert_eq!(g.len(), 7);
        assert!((g[6] - 0.3).abs() < 1e-15);
        assert_eq!(parse_grid("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:x:1").is_err());
    }
}
