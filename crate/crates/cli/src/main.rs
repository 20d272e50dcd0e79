use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use qcsse::harness::{self, Axis, CampaignSpec, RunConfig};
use qcsse::model::ModelSpec;
use qcsse::{ed, oracle};

#[derive(Parser)]
#[command(name = "qcsse", version, about = "Shifted-term SSE for the anisotropic XY chain")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print or write its result.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Sweep one parameter over a grid, one CSV row per point.
    Campaign {
        /// m-joint, m-x-only, size, temperature or anisotropy.
        #[arg(long)]
        axis: Axis,
        /// Comma-separated, strictly increasing values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
        /// Concurrent grid points; 0 uses all cores.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Exact-diagonalization energy of the unshifted chain.
    Ed {
        #[arg(long, default_value_t = 3)]
        n_sites: usize,
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        #[arg(long, default_value_t = 2.0)]
        temperature: f64,
        /// Also print every eigenvalue.
        #[arg(long)]
        spectrum: bool,
    },
    /// Check contraction against dense operator products on random strings.
    ContractCheck {
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check fast weights against the ancilla-circuit emulation.
    OracleCheck {
        #[arg(long, default_value_t = 500)]
        cases: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Run-config flags. Applied in order: config file, `--set` pairs, named flags.
#[derive(Args)]
struct Overrides {
    /// key = value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra `key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    n_sites: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Sets both shift constants.
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    m_x: Option<f64>,
    #[arg(long)]
    m_z: Option<f64>,
    #[arg(long)]
    temperature: Option<f64>,
    /// z, t-hadamard or x-quarter-site0.
    #[arg(long)]
    basis: Option<String>,
    /// Sweeps per chain, warm-up included.
    #[arg(long)]
    sweeps: Option<u64>,
    #[arg(long)]
    warmup_fraction: Option<f64>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output; a JSON sidecar is written next to it.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Overrides {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)
                .with_context(|| format!("reading {}", path.display()))?,
            None => RunConfig::default(),
        };
        for pair in &self.set {
            let Some((k, v)) = pair.split_once('=') else {
                bail!("--set expects key=value, got `{pair}`");
            };
            c.set(k, v)?;
        }
        let flags: [(&str, Option<String>); 12] = [
            ("n_sites", self.n_sites.map(|v| v.to_string())),
            ("delta", self.delta.map(|v| v.to_string())),
            ("m", self.m.map(|v| v.to_string())),
            ("m_x", self.m_x.map(|v| v.to_string())),
            ("m_z", self.m_z.map(|v| v.to_string())),
            ("temperature", self.temperature.map(|v| v.to_string())),
            ("basis", self.basis.clone()),
            ("sweeps", self.sweeps.map(|v| v.to_string())),
            ("warmup_fraction", self.warmup_fraction.map(|v| v.to_string())),
            ("chains", self.chains.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                c.set(key, &v)?;
            }
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_record(r: &harness::ResultRecord) {
    let ed = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
    println!(
        "N={} delta={} m_x={} m_z={} T={} basis={}",
        r.n_sites, r.delta, r.m_x, r.m_z, r.temperature, r.basis
    );
    println!("  <sgn>   = {:.6} +- {:.6}", r.avg_sign, r.avg_sign_err);
    println!("  E       = {:.6} +- {:.6}   (ED {})", r.energy, r.energy_err, ed(r.e_ed));
    println!("  <n>     = {:.4} +- {:.4}   (max {})", r.mean_n, r.mean_n_err, r.max_n);
    println!("  |dE/E|% = {}   |E - E_ED| = {}", ed(r.percent_error), ed(r.abs_energy_diff));
    if !r.reliable {
        println!("  UNRELIABLE: average sign within 3 standard errors of zero");
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { overrides } => {
            let config = overrides.config()?;
            let record = harness::run(&config)?;
            print_record(&record);
            if let Some(path) = &config.output {
                harness::write_outputs(path, &config, None, &[harness::run_row(record)])?;
            }
        }
        Command::Campaign {
            axis,
            grid,
            workers,
            overrides,
        } => {
            let base = overrides.config()?;
            let spec = CampaignSpec {
                axis,
                grid,
                base: base.clone(),
                workers,
            };
            let rows = harness::campaign(&spec)?;
            match &base.output {
                Some(path) => harness::write_outputs(path, &base, Some(&spec), &rows)?,
                None => harness::write_csv(&rows, std::io::stdout().lock())?,
            }
            if rows.iter().any(|r| r.error.is_some()) {
                eprintln!("some grid points failed; see the error column");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Ed {
            n_sites,
            delta,
            temperature,
            spectrum,
        } => {
            let model = ModelSpec::new(n_sites, delta, 1.0, 1.0, 1.0 / temperature)?;
            let s = ed::spectrum(&model)?;
            println!("E_ED = {}", s.thermal_energy(model.beta));
            println!("ground = {}", s.eigenvalues[0]);
            if spectrum {
                for e in &s.eigenvalues {
                    println!("{e}");
                }
            }
        }
        Command::ContractCheck { cases, seed } => {
            let r = oracle::check_contraction(cases, seed);
            println!(
                "{} strings, max deviation {:e}, {} -> {} operators",
                r.cases, r.max_deviation, r.terms_before, r.terms_after
            );
            if r.max_deviation > 1e-10 {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::OracleCheck { cases, seed } => {
            let r = oracle::check_ancilla(cases, seed)?;
            println!("{} configurations, max relative deviation {:e}", r.cases, r.max_deviation);
            if r.max_deviation > 1e-10 {
                return Ok(ExitCode::FAILURE);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
