//! Run configuration, experiment campaigns and output files.
//!
//! Configs are UTF-8 `key = value` files; the same keys are accepted as
//! overrides. A run executes independent chains in parallel, one ChaCha
//! stream per chain, and merges them in chain order, so results depend only
//! on the config. Campaigns sweep one parameter over a grid and produce one
//! CSV row per grid point plus a JSON sidecar with the full provenance.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ed;
use crate::estimators::{self, Reliability, RunAccumulators, DEFAULT_BINS};
use crate::model::ModelSpec;
use crate::sampler::{Count, RngStream, Sampler, SweepPlan};
use crate::statevec::BasisChoice;
use crate::{Error, Result};

/// Exact diagonalization is attached to results up to this size.
pub const ED_AUTO_LIMIT: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisName {
    /// Computational basis.
    Z,
    /// `T H` on every site.
    THadamard,
    /// `H T H` on site 0 only.
    XQuarterSite0,
}

impl BasisName {
    pub fn build(self, n_sites: usize) -> BasisChoice {
        match self {
            BasisName::Z => BasisChoice::ZProduct,
            BasisName::THadamard => BasisChoice::t_hadamard(n_sites),
            BasisName::XQuarterSite0 => BasisChoice::x_quarter_site0(n_sites),
        }
    }
}

impl FromStr for BasisName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(BasisName::Z),
            "t-hadamard" | "rotated" => Ok(BasisName::THadamard),
            "x-quarter-site0" => Ok(BasisName::XQuarterSite0),
            _ => Err(Error::Config(format!(
                "unknown basis `{s}` (expected z, t-hadamard, x-quarter-site0)"
            ))),
        }
    }
}

impl fmt::Display for BasisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisName::Z => "z",
            BasisName::THadamard => "t-hadamard",
            BasisName::XQuarterSite0 => "x-quarter-site0",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_sites: usize,
    pub delta: f64,
    pub m_x: f64,
    pub m_z: f64,
    pub temperature: f64,
    pub basis: BasisName,
    /// Sweeps per chain, warm-up included.
    pub sweeps: u64,
    pub warmup_fraction: f64,
    pub chains: usize,
    pub seed: u64,
    pub plan: SweepPlan,
    pub bins: usize,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_sites: 3,
            delta: 1.0,
            m_x: 1.0,
            m_z: 1.0,
            temperature: 2.0,
            basis: BasisName::THadamard,
            sweeps: 20_000,
            warmup_fraction: 0.1,
            chains: 4,
            seed: 1,
            plan: SweepPlan::default(),
            bins: DEFAULT_BINS,
            output: None,
        }
    }
}

fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn parse_count(key: &str, value: &str) -> Result<Count> {
    match value {
        "sites" => Ok(Count::Sites),
        "order" => Ok(Count::Order),
        _ => Ok(Count::Fixed(parse_num(key, value)?)),
    }
}

impl RunConfig {
    /// Sets one field from its textual `key = value` form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "n_sites" | "sites" | "n" => self.n_sites = parse_num(key, value)?,
            "delta" => self.delta = parse_num(key, value)?,
            "m_x" => self.m_x = parse_num(key, value)?,
            "m_z" => self.m_z = parse_num(key, value)?,
            "m" => {
                self.m_x = parse_num(key, value)?;
                self.m_z = self.m_x;
            }
            "temperature" | "t" => self.temperature = parse_num(key, value)?,
            "beta" => self.temperature = 1.0 / parse_num::<f64>(key, value)?,
            "basis" => self.basis = value.parse()?,
            "sweeps" => self.sweeps = parse_num(key, value)?,
            "warmup_fraction" | "warmup" => self.warmup_fraction = parse_num(key, value)?,
            "chains" => self.chains = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "bins" => self.bins = parse_num(key, value)?,
            "plan_alpha" => self.plan.alpha = parse_count(key, value)?,
            "plan_replace" => self.plan.replace = parse_count(key, value)?,
            "plan_insert_remove" => self.plan.insert_remove = parse_count(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(key, value)?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut config = RunConfig::default();
        config.apply_text(&std::fs::read_to_string(path)?)?;
        Ok(config)
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn model(&self) -> Result<ModelSpec> {
        ModelSpec::new(self.n_sites, self.delta, self.m_x, self.m_z, self.beta())
    }

    pub fn warmup_sweeps(&self) -> u64 {
        (self.sweeps as f64 * self.warmup_fraction).round() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::Config(format!(
                "temperature must be positive, got {}",
                self.temperature
            )));
        }
        self.model()?;
        if self.n_sites > crate::model::DENSE_LIMIT {
            return Err(Error::TooLarge {
                sites: self.n_sites,
                limit: crate::model::DENSE_LIMIT,
            });
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Config("warmup_fraction must lie in [0, 1)".into()));
        }
        if self.chains == 0 {
            return Err(Error::Config("need at least one chain".into()));
        }
        if self.bins == 0 {
            return Err(Error::Config("need at least one bin".into()));
        }
        if self.sweeps <= self.warmup_sweeps() || self.sweeps - self.warmup_sweeps() < self.bins as u64 {
            return Err(Error::Config(format!(
                "{} sweeps leave too few measurements after warm-up for {} bins",
                self.sweeps, self.bins
            )));
        }
        self.plan.validate()
    }
}

/// Everything a run reports. Errors are one standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub n_sites: usize,
    pub delta: f64,
    pub m_x: f64,
    pub m_z: f64,
    pub temperature: f64,
    pub basis: BasisName,
    pub sweeps: u64,
    pub warmup: u64,
    pub chains: usize,
    pub seed: u64,
    pub avg_sign: f64,
    pub avg_sign_err: f64,
    pub energy: f64,
    pub energy_err: f64,
    /// Sign-reweighted `<n>`.
    pub mean_n: f64,
    pub mean_n_err: f64,
    /// `<n>` in the `|W|` ensemble.
    pub raw_mean_n: f64,
    pub raw_mean_n_err: f64,
    /// Standard deviation of `n` in the `|W|` ensemble.
    pub std_n: f64,
    pub max_n: usize,
    pub e_ed: Option<f64>,
    pub percent_error: Option<f64>,
    pub abs_energy_diff: Option<f64>,
    pub reliable: bool,
}

/// Runs all chains of `config` and merges them in chain order.
pub fn run_chains(config: &RunConfig) -> Result<RunAccumulators> {
    config.validate()?;
    let model = config.model()?;
    let sampler = Sampler::new(model, config.basis.build(config.n_sites), config.plan)?;
    let warmup = config.warmup_sweeps();
    let measure = config.sweeps - warmup;
    let accs: Vec<RunAccumulators> = (0..config.chains)
        .into_par_iter()
        .map(|chain| {
            let mut rng = RngStream::for_chain(config.seed, chain as u64);
            sampler.run_chain(&mut rng, warmup, measure, config.bins)
        })
        .collect();
    let mut iter = accs.into_iter();
    let first = iter.next().expect("at least one chain");
    Ok(iter.fold(first, |acc, next| acc.merge(&next)))
}

pub fn run(config: &RunConfig) -> Result<ResultRecord> {
    let acc = run_chains(config)?;
    summarize(config, &acc)
}

pub fn summarize(config: &RunConfig, acc: &RunAccumulators) -> Result<ResultRecord> {
    let model = config.model()?;
    let e = estimators::energy(acc, &model)?;
    let raw = estimators::raw_mean_order(acc)?;
    let e_ed = if config.n_sites <= ED_AUTO_LIMIT {
        Some(ed::thermal_energy(&model)?)
    } else {
        None
    };
    let percent_error = match e_ed {
        Some(reference) if reference != 0.0 => Some(estimators::percent_error(
            e.energy.value,
            e.energy.stderr,
            reference,
        )?),
        _ => None,
    };
    Ok(ResultRecord {
        n_sites: config.n_sites,
        delta: config.delta,
        m_x: config.m_x,
        m_z: config.m_z,
        temperature: config.temperature,
        basis: config.basis,
        sweeps: config.sweeps,
        warmup: config.warmup_sweeps(),
        chains: config.chains,
        seed: config.seed,
        avg_sign: e.average_sign.value,
        avg_sign_err: e.average_sign.stderr,
        energy: e.energy.value,
        energy_err: e.energy.stderr,
        mean_n: e.mean_order.value,
        mean_n_err: e.mean_order.stderr,
        raw_mean_n: raw.value,
        raw_mean_n_err: raw.stderr,
        std_n: estimators::order_fluctuation(acc)?,
        max_n: acc.max_order(),
        e_ed,
        percent_error,
        abs_energy_diff: e_ed.map(|r| (e.energy.value - r).abs()),
        reliable: e.reliability == Reliability::Reliable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// `M = M_x = M_z`.
    MJoint,
    /// `M_x` with `M_z` from the base config.
    MXOnly,
    Size,
    Temperature,
    Anisotropy,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "m-joint" => Ok(Axis::MJoint),
            "m-x-only" | "m-x" => Ok(Axis::MXOnly),
            "size" => Ok(Axis::Size),
            "temperature" => Ok(Axis::Temperature),
            "anisotropy" => Ok(Axis::Anisotropy),
            _ => Err(Error::Config(format!(
                "unknown axis `{s}` (expected m-joint, m-x-only, size, temperature, anisotropy)"
            ))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::MJoint => "m-joint",
            Axis::MXOnly => "m-x-only",
            Axis::Size => "size",
            Axis::Temperature => "temperature",
            Axis::Anisotropy => "anisotropy",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSpec {
    pub axis: Axis,
    pub grid: Vec<f64>,
    pub base: RunConfig,
    /// Concurrent workers; 0 uses all cores.
    pub workers: usize,
}

impl CampaignSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("campaign grid is empty".into()));
        }
        if self.grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("campaign grid must be strictly increasing".into()));
        }
        if self.axis == Axis::Size && self.grid.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::Config("size grid must hold whole numbers".into()));
        }
        Ok(())
    }

    /// Config of grid point `index`. Each point gets its own seed derived
    /// from the base seed.
    pub fn point(&self, index: usize) -> Result<RunConfig> {
        let mut config = self.base.clone();
        let v = self.grid[index];
        match self.axis {
            Axis::MJoint => {
                config.m_x = v;
                config.m_z = v;
            }
            Axis::MXOnly => config.m_x = v,
            Axis::Size => config.n_sites = v as usize,
            Axis::Temperature => config.temperature = v,
            Axis::Anisotropy => config.delta = v,
        }
        config.seed = self
            .base
            .seed
            .wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignRow {
    pub axis: Axis,
    pub axis_value: f64,
    pub record: Option<ResultRecord>,
    pub error: Option<String>,
}

/// Runs every grid point. A failing point yields a row with its error
/// message instead of aborting the campaign.
pub fn campaign(spec: &CampaignSpec) -> Result<Vec<CampaignRow>> {
    spec.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(spec.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let rows = pool.install(|| {
        (0..spec.grid.len())
            .into_par_iter()
            .map(|i| {
                let outcome = spec.point(i).and_then(|c| run(&c));
                let (record, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                CampaignRow {
                    axis: spec.axis,
                    axis_value: spec.grid[i],
                    record,
                    error,
                }
            })
            .collect()
    });
    Ok(rows)
}

pub const CSV_HEADER: [&str; 27] = [
    "axis",
    "axis_value",
    "n_sites",
    "delta",
    "m_x",
    "m_z",
    "temperature",
    "basis",
    "sweeps",
    "warmup",
    "chains",
    "seed",
    "avg_sign",
    "avg_sign_err",
    "energy",
    "energy_err",
    "mean_n",
    "mean_n_err",
    "raw_mean_n",
    "raw_mean_n_err",
    "std_n",
    "max_n",
    "e_ed",
    "percent_error",
    "abs_energy_diff",
    "reliable",
    "error",
];

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_fields(row: &CampaignRow) -> Vec<String> {
    let mut out = vec![row.axis.to_string(), num(row.axis_value)];
    match &row.record {
        Some(r) => out.extend([
            r.n_sites.to_string(),
            num(r.delta),
            num(r.m_x),
            num(r.m_z),
            num(r.temperature),
            r.basis.to_string(),
            r.sweeps.to_string(),
            r.warmup.to_string(),
            r.chains.to_string(),
            r.seed.to_string(),
            num(r.avg_sign),
            num(r.avg_sign_err),
            num(r.energy),
            num(r.energy_err),
            num(r.mean_n),
            num(r.mean_n_err),
            num(r.raw_mean_n),
            num(r.raw_mean_n_err),
            num(r.std_n),
            r.max_n.to_string(),
            opt(r.e_ed),
            opt(r.percent_error),
            opt(r.abs_energy_diff),
            r.reliable.to_string(),
        ]),
        None => out.extend(std::iter::repeat_n(String::new(), 24)),
    }
    out.push(row.error.clone().unwrap_or_default());
    out
}

/// CSV with a header row and one record per line.
pub fn write_csv<W: Write>(rows: &[CampaignRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(csv_fields(row))?;
    }
    w.flush()?;
    Ok(())
}

/// A single run as a one-row table.
pub fn run_row(record: ResultRecord) -> CampaignRow {
    CampaignRow {
        axis: Axis::MJoint,
        axis_value: record.m_z,
        record: Some(record),
        error: None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub git_revision: String,
    pub error_bars: &'static str,
    pub chain_seeding: &'static str,
    pub config: &'a RunConfig,
    pub campaign: Option<&'a CampaignSpec>,
    pub rows: &'a [CampaignRow],
}

pub fn git_revision() -> String {
    std::process::Command::new("git")
        .args(["rev-parse", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

/// Sidecar path for a CSV path: same stem, `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

/// Writes `path` (CSV) and its JSON sidecar.
pub fn write_outputs(
    path: &Path,
    config: &RunConfig,
    campaign: Option<&CampaignSpec>,
    rows: &[CampaignRow],
) -> Result<()> {
    write_csv(rows, std::fs::File::create(path)?)?;
    let provenance = Provenance {
        tool: "qcsse",
        version: env!("CARGO_PKG_VERSION"),
        git_revision: git_revision(),
        error_bars: "one standard error; 20 bins per chain, jackknife for ratios",
        chain_seeding: "chain k uses ChaCha8 stream k of the run seed",
        config,
        campaign,
        rows,
    };
    let mut f = std::fs::File::create(sidecar_path(path))?;
    serde_json::to_writer_pretty(&mut f, &provenance)?;
    writeln!(f)?;
    Ok(())
}
