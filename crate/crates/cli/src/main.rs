mod args;
mod commands;
mod output;

use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;

use args::{Cli, Command, Format};
use commands::SampleRequest;
use output::{emit, render, Meta};

const EXIT_VALIDATION: u8 = 1;
const EXIT_CONFIG: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    if g.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(g.threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let config = serde_json::to_value(&cli.command)?;
    let seed = g.seed;

    let computed = match &cli.command {
        Command::KernelInfo { kernel, points } => {
            let (spec, k) = commands::resolve_kernel(kernel)?;
            commands::kernel_info(&spec, &k, points)?
        }
        Command::FreeEnergy { kernel, beta_grid, n } => {
            let (spec, k) = commands::resolve_kernel(kernel)?;
            commands::free_energy_table(&spec, &k, beta_grid, n)?
        }
        Command::Observables {
            kernel,
            beta,
            n,
            boundary,
        } => {
            let (spec, k) = commands::resolve_kernel(kernel)?;
            commands::observables(&spec, &k, beta, n, *boundary)?
        }
        Command::Sample {
            kernel,
            beta,
            n,
            replicas,
            boundary,
            prefix_search,
        } => {
            let (spec, k) = commands::resolve_kernel(kernel)?;
            let req = SampleRequest {
                beta: *beta,
                n: *n,
                replicas: *replicas,
                boundary: *boundary,
                prefix_search: *prefix_search,
                seed,
            };
            commands::sample(&spec, &k, &req)?
        }
        Command::WettingEndpoint { n, beta_list, eps_list } => commands::wetting_endpoint(*n, beta_list, eps_list)?,
        Command::StableCheck { alpha, samples } => commands::stable_check(*alpha, *samples, seed)?,
        Command::LimitLaw {
            alpha,
            eps,
            transient,
            mesh,
            samples,
        } => commands::limit_law(*alpha, *eps, *transient, *mesh, *samples, seed)?,
        Command::Fss { kernel, n, q } => {
            let (spec, k) = commands::resolve_kernel(kernel)?;
            commands::fss(&spec, &k, n, q)?
        }
        Command::SetCompare { a, b, column } => commands::set_compare(a, b, *column)?,
        Command::Validate { quick } => {
            // Criterion lines go to stdout unless stdout carries the JSON table.
            let lines_to_stderr = g.out.is_none() && g.format == Format::Json;
            let (computed, ok) = commands::validate(*quick, seed, |line| {
                if lines_to_stderr {
                    eprintln!("{line}");
                } else {
                    println!("{line}");
                }
            });
            if g.out.is_some() || g.format == Format::Json {
                write(&cli, config, computed)?;
            }
            return Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VALIDATION)
            });
        }
    };
    write(&cli, config, computed)?;
    Ok(ExitCode::SUCCESS)
}

fn write(cli: &Cli, config: serde_json::Value, computed: commands::Computed) -> Result<()> {
    let meta = Meta {
        command: cli.command.name(),
        config,
        seed: cli.global.seed,
        extra: computed.extra,
    };
    let bytes = render(&computed.table, &meta, cli.global.format)?;
    emit(&bytes, cli.global.out.as_deref())
}
