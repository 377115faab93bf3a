use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::Args;

use negativity::dataset::{generate_corpus, save_dataset, CorpusConfig};
use negativity::Seed;

use crate::config::{parse_list, parse_pair, ConfigFile};
use crate::{Common, Outcome};

pub const KEYS: &[&str] = &[
    "samples",
    "gps_fraction",
    "gps_sites",
    "mps_sites",
    "bond_dims",
    "max_ab",
    "partitions_per_state",
    "n_a",
    "n_b",
];

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Number of rows.
    #[arg(long, env = "NEGEST_SAMPLES")]
    samples: Option<usize>,
    /// Share of generic pure states; the rest are random MPS.
    #[arg(long, env = "NEGEST_GPS_FRACTION")]
    gps_fraction: Option<f64>,
    /// Chain-length range `lo:hi` for generic pure states.
    #[arg(long, env = "NEGEST_GPS_SITES")]
    gps_sites: Option<String>,
    /// Chain-length range `lo:hi` for MPS.
    #[arg(long, env = "NEGEST_MPS_SITES")]
    mps_sites: Option<String>,
    /// Comma-separated MPS bond dimensions.
    #[arg(long, env = "NEGEST_BOND_DIMS")]
    bond_dims: Option<String>,
    /// Largest n_a + n_b.
    #[arg(long, env = "NEGEST_MAX_AB")]
    max_ab: Option<usize>,
    /// Tri-partitions drawn per state.
    #[arg(long, env = "NEGEST_PARTITIONS_PER_STATE")]
    partitions_per_state: Option<usize>,
    /// Fix n_a (requires --n-b).
    #[arg(long, env = "NEGEST_N_A")]
    n_a: Option<usize>,
    /// Fix n_b (requires --n-a).
    #[arg(long, env = "NEGEST_N_B")]
    n_b: Option<usize>,
}

pub fn corpus_config(common: &Common, a: GenArgs, cfg: &ConfigFile) -> Result<CorpusConfig> {
    let d = CorpusConfig::default();
    let pair = |v: Option<String>, key: &str, default: (usize, usize)| -> Result<(usize, usize)> {
        cfg.pick(v, key)?.map_or(Ok(default), |s: String| parse_pair(&s))
    };
    let fixed_ab = match (cfg.pick(a.n_a, "n_a")?, cfg.pick(a.n_b, "n_b")?) {
        (Some(x), Some(y)) => Some((x, y)),
        (None, None) => None,
        _ => bail!("n_a and n_b must be given together"),
    };
    Ok(CorpusConfig {
        n_samples: cfg.get_or(a.samples, "samples", d.n_samples)?,
        max_order: cfg.get_or(common.m_copies.clone(), "m_copies", d.max_order.to_string())?.parse().context("m-copies")?,
        gps_fraction: cfg.get_or(a.gps_fraction, "gps_fraction", d.gps_fraction)?,
        gps_sites: pair(a.gps_sites, "gps_sites", d.gps_sites)?,
        mps_sites: pair(a.mps_sites, "mps_sites", d.mps_sites)?,
        bond_dims: cfg.pick(a.bond_dims, "bond_dims")?.map_or(Ok(d.bond_dims), |s: String| parse_list(&s))?,
        max_ab: cfg.get_or(a.max_ab, "max_ab", d.max_ab)?,
        partitions_per_state: cfg.get_or(a.partitions_per_state, "partitions_per_state", d.partitions_per_state)?,
        fixed_ab,
        seed: Seed(cfg.get_or(common.seed, "seed", 0)?),
    })
}

pub fn run(common: &Common, a: GenArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let out = cfg.pick(common.out.clone(), "out")?.context("--out is required")?;
    let corpus = corpus_config(common, a, cfg)?;
    log::info!("generating {} samples up to M = {}", corpus.n_samples, corpus.max_order);
    let start = Instant::now();
    let rows = generate_corpus(&corpus)?;
    save_dataset(&out, &rows).with_context(|| format!("writing {}", out.display()))?;
    let max = rows.iter().map(|r| r.logneg).fold(0.0, f64::max);
    log::info!(
        "wrote {} rows to {} in {:.1?}; labels span [0, {max:.3}] ebits",
        rows.len(),
        out.display(),
        start.elapsed()
    );
    Ok(Outcome::Passed)
}
