use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};

use negativity::experiments::{heisenberg_quench, ising_quench_run, rmse, w_state_sweep, write_records, xx_scan, EstimateRecord, Estimators};
use negativity::mlnet::load_model;
use negativity::physmodels::{KrylovConfig, ISING_CRITICAL_FIELD};
use negativity::protocol::ShotNoiseConfig;
use negativity::Seed;

use crate::config::{parse_list, parse_pair, ConfigFile};
use crate::{Common, Outcome};

pub const KEYS: &[&str] = &[
    "experiment",
    "sites",
    "n_a",
    "n_b",
    "t_max",
    "dt",
    "critical_field",
    "delta",
    "bz_range",
    "bz_steps",
    "sizes",
    "shots",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Experiment {
    /// Neel state quenched by the Heisenberg chain.
    HeisenbergQuench,
    /// XX ground states across a transverse-field grid.
    XxScan,
    /// W state over all placements of the given party sizes.
    WState,
    /// Transverse-field Ising quench across the critical field.
    IsingQuench,
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Experiment as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long, value_enum, env = "NEGEST_EXPERIMENT")]
    experiment: Option<Experiment>,
    /// Chain length.
    #[arg(long, env = "NEGEST_SITES")]
    sites: Option<usize>,
    #[arg(long, env = "NEGEST_N_A")]
    n_a: Option<usize>,
    #[arg(long, env = "NEGEST_N_B")]
    n_b: Option<usize>,
    /// Final time of the quench, in units of 1/J.
    #[arg(long, env = "NEGEST_T_MAX")]
    t_max: Option<f64>,
    #[arg(long, env = "NEGEST_DT")]
    dt: Option<f64>,
    #[arg(long, env = "NEGEST_CRITICAL_FIELD")]
    critical_field: Option<f64>,
    /// Quench depth: prepared at b_c + delta, evolved at b_c - delta.
    #[arg(long, env = "NEGEST_DELTA")]
    delta: Option<f64>,
    /// Field range `lo:hi` of the XX scan.
    #[arg(long, env = "NEGEST_BZ_RANGE")]
    bz_range: Option<String>,
    #[arg(long, env = "NEGEST_BZ_STEPS")]
    bz_steps: Option<usize>,
    /// Party sizes `n_a:n_b,...` of the W-state sweep.
    #[arg(long, env = "NEGEST_SIZES")]
    sizes: Option<String>,
    /// Repetitions per moment; omitted means exact moments.
    #[arg(long, env = "NEGEST_SHOTS")]
    shots: Option<u64>,
}

/// `0, dt, 2dt, ...` up to `t_max` inclusive.
fn time_grid(t_max: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        bail!("need dt > 0 and t_max >= 0, got dt = {dt}, t_max = {t_max}");
    }
    let steps = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=steps).map(|k| k as f64 * dt).collect())
}

fn field_grid(lo: f64, hi: f64, steps: usize) -> Result<Vec<f64>> {
    match steps {
        0 => bail!("bz-steps must be positive"),
        1 => Ok(vec![lo]),
        _ => Ok((0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect()),
    }
}

/// Loads each model, labelled by its file stem, and rejects models that need
/// more moments than are measured.
fn load_models(list: &str, max_measured: usize) -> Result<Vec<(String, negativity::mlnet::NetworkModel)>> {
    let mut out: Vec<(String, _)> = Vec::new();
    for path in list.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let model = load_model(Path::new(path)).with_context(|| format!("loading model {path}"))?;
        let order = model.spec.max_order();
        if order > max_measured {
            bail!("model {path} needs moments up to M = {order}, but only M = {max_measured} are measured");
        }
        let stem = Path::new(path).file_stem().and_then(|s| s.to_str()).unwrap_or("model");
        let mut label: String = stem.chars().map(|c| if c == ',' { '_' } else { c }).collect();
        if out.iter().any(|(l, _)| *l == label) {
            label = format!("{label}_{}", out.len());
        }
        out.push((label, model));
    }
    Ok(out)
}

pub fn run(common: &Common, a: EvalArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let experiment: Experiment = cfg.pick(a.experiment, "experiment")?.context("--experiment is required")?;
    let seed = Seed(cfg.get_or(common.seed, "seed", 0)?);
    let cheb_orders: Vec<usize> = parse_list(&cfg.get_or(common.m_copies.clone(), "m_copies", "10,20".into())?)?;
    if cheb_orders.is_empty() {
        bail!("--m-copies lists no orders");
    }
    let max_measured = *cheb_orders.iter().max().unwrap();
    let models = match cfg.pick(common.model.clone(), "model")? {
        Some(list) => load_models(&list, max_measured)?,
        None => Vec::new(),
    };
    let noise = match cfg.pick(a.shots, "shots")? {
        Some(r) => Some(ShotNoiseConfig::new(r, seed.split_label("shots"))?),
        None => None,
    };
    let est = Estimators { cheb_orders, models, noise };

    let n_a = cfg.get_or(a.n_a, "n_a", 1)?;
    let n_b = cfg.get_or(a.n_b, "n_b", 1)?;
    let krylov = KrylovConfig::default();
    let records: Vec<EstimateRecord> = match experiment {
        Experiment::HeisenbergQuench => {
            let n = cfg.get_or(a.sites, "sites", 10)?;
            let times = time_grid(cfg.get_or(a.t_max, "t_max", 3.0)?, cfg.get_or(a.dt, "dt", 0.1)?)?;
            heisenberg_quench(n, n_a, n_b, &times, &est, &krylov)?
        }
        Experiment::IsingQuench => {
            let n = cfg.get_or(a.sites, "sites", 10)?;
            let times = time_grid(cfg.get_or(a.t_max, "t_max", 3.0)?, cfg.get_or(a.dt, "dt", 0.1)?)?;
            let b_c = cfg.get_or(a.critical_field, "critical_field", ISING_CRITICAL_FIELD)?;
            let delta = cfg.get_or(a.delta, "delta", 0.1)?;
            ising_quench_run(n, b_c, delta, n_a, n_b, &times, &est, &krylov)?
        }
        Experiment::XxScan => {
            let n = cfg.get_or(a.sites, "sites", 10)?;
            let (lo, hi) = parse_pair::<f64>(&cfg.get_or(a.bz_range, "bz_range", "0:2.5".into())?)?;
            let fields = field_grid(lo, hi, cfg.get_or(a.bz_steps, "bz_steps", 26)?)?;
            xx_scan(n, n_a, n_b, &fields, &est)?
        }
        Experiment::WState => {
            let n = cfg.get_or(a.sites, "sites", 12)?;
            let sizes = cfg
                .get_or(a.sizes, "sizes", "1:1,2:2".into())?
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(parse_pair::<usize>)
                .collect::<Result<Vec<_>>>()?;
            w_state_sweep(n, &sizes, &est)?
        }
    };

    let out: Option<PathBuf> = cfg.pick(common.out.clone(), "out")?;
    match &out {
        Some(path) => {
            let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_records(std::io::BufWriter::new(file), &records)?;
        }
        None => write_records(std::io::stdout().lock(), &records)?,
    }
    summarize(&records, &est);
    Ok(Outcome::Passed)
}

fn summarize(records: &[EstimateRecord], est: &Estimators) {
    let truth: Vec<f64> = records.iter().map(|r| r.estimates.true_logneg).collect();
    for &m in &est.cheb_orders {
        let v: Vec<f64> = records.iter().filter_map(|r| r.cheb(m)).collect();
        log::info!("Chebyshev M = {m}: RMSE {:.5} over {} points", rmse(&v, &truth), v.len());
    }
    for (label, _) in &est.models {
        let v: Vec<f64> = records.iter().filter_map(|r| r.ml(label)).collect();
        log::info!("network {label}: RMSE {:.5} over {} points", rmse(&v, &truth), v.len());
    }
}
