use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use negativity::experiments::spectrum_histogram;
use negativity::qcore::TriPartition;
use negativity::Seed;

use crate::config::ConfigFile;
use crate::{Common, Outcome};

pub const KEYS: &[&str] = &["n_a", "n_b", "n_c", "instances", "bins"];

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[arg(long, env = "NEGEST_N_A")]
    n_a: Option<usize>,
    #[arg(long, env = "NEGEST_N_B")]
    n_b: Option<usize>,
    #[arg(long, env = "NEGEST_N_C")]
    n_c: Option<usize>,
    /// Random states pooled into the histogram.
    #[arg(long, env = "NEGEST_INSTANCES")]
    instances: Option<usize>,
    #[arg(long, env = "NEGEST_BINS")]
    bins: Option<usize>,
}

#[derive(Serialize)]
struct SpectrumJson {
    n_a: usize,
    n_b: usize,
    n_c: usize,
    instances: usize,
    seed: u64,
    window_order: usize,
    d: f64,
    sigma2: f64,
    support: (f64, f64),
    ks_distance: f64,
    bin_edges: Vec<f64>,
    counts: Vec<u64>,
    empirical_density: Vec<f64>,
    semicircle_density: Vec<f64>,
    windows: Vec<f64>,
    window_violations: usize,
}

pub fn run(common: &Common, a: SpectrumArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let seed = Seed(cfg.get_or(common.seed, "seed", 0)?);
    let order: usize = cfg.get_or(common.m_copies.clone(), "m_copies", "10".into())?.parse().context("m-copies")?;
    let part = TriPartition::new(cfg.get_or(a.n_a, "n_a", 5)?, cfg.get_or(a.n_b, "n_b", 5)?, cfg.get_or(a.n_c, "n_c", 5)?)?;
    let instances = cfg.get_or(a.instances, "instances", 20)?;
    let bins = cfg.get_or(a.bins, "bins", 60)?;
    let rep = spectrum_histogram(&part, instances, bins, order, seed)?;
    let json = SpectrumJson {
        n_a: part.n_a,
        n_b: part.n_b,
        n_c: part.n_c,
        instances,
        seed: seed.0,
        window_order: order,
        d: rep.law.d,
        sigma2: rep.law.sigma2,
        support: rep.law.support(),
        ks_distance: rep.ks,
        bin_edges: rep.histogram.edges.clone(),
        counts: rep.histogram.counts.clone(),
        empirical_density: rep.empirical_density,
        semicircle_density: rep.semicircle_density,
        windows: rep.windows,
        window_violations: rep.window_violations,
    };
    let text = serde_json::to_string_pretty(&json)?;
    let out: Option<PathBuf> = cfg.pick(common.out.clone(), "out")?;
    match &out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{text}"),
    }
    log::info!("KS distance {:.4} over {} eigenvalues; {} window violations", rep.ks, rep.eigenvalues.len(), rep.window_violations);
    Ok(if rep.window_violations == 0 { Outcome::Passed } else { Outcome::ChecksFailed })
}
