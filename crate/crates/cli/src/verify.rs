use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use num_complex::Complex64;

use negativity::experiments::std_dev;
use negativity::protocol::{
    bosonic_protocol_check, build_pt_permutation, sample_moment, shot_noise_std, verify_with_operator, BosonicState,
};
use negativity::qcore::{random_gps, reduce, TriPartition};
use negativity::Seed;

use crate::config::{parse_list, ConfigFile};
use crate::{Common, Outcome};

pub const KEYS: &[&str] = &["states", "threshold", "corrupt", "trials", "repetitions", "boson_cutoff", "skip_bosonic"];

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Random mixed states per order.
    #[arg(long, env = "NEGEST_STATES")]
    states: Option<usize>,
    /// Largest allowed `|Tr[ρ^{⊗m} P] − μ_m|`.
    #[arg(long, env = "NEGEST_THRESHOLD")]
    threshold: Option<f64>,
    /// Add this much to the first permutation weight (self-test of the checker).
    #[arg(long, env = "NEGEST_CORRUPT")]
    corrupt: Option<f64>,
    /// Monte Carlo trials per shot-noise case.
    #[arg(long, env = "NEGEST_TRIALS")]
    trials: Option<usize>,
    /// Repetition counts R of the shot-noise check.
    #[arg(long, env = "NEGEST_REPETITIONS")]
    repetitions: Option<String>,
    /// Fourier-outcome cutoff of the bosonic check.
    #[arg(long, env = "NEGEST_BOSON_CUTOFF")]
    boson_cutoff: Option<usize>,
    #[arg(long, env = "NEGEST_SKIP_BOSONIC", num_args = 0..=1, default_missing_value = "true")]
    skip_bosonic: Option<bool>,
}

/// One line of the verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckRow {
    pub check: &'static str,
    pub case: String,
    pub m: usize,
    pub value: f64,
    pub expected: f64,
    pub residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

const SHOT_MUS: [f64; 3] = [0.0, 0.5, 0.9];
/// Relative band on the empirical shot-noise spread.
const SHOT_BAND: f64 = 0.1;

fn permutation_rows(max_m: usize, states: usize, threshold: f64, corrupt: Option<f64>, seed: Seed) -> Result<Vec<CheckRow>> {
    let part = TriPartition::new(1, 1, 2)?;
    let mut rows = Vec::new();
    for m in 2..=max_m {
        let mut op = build_pt_permutation(m, part.n_a, part.n_b)?;
        if let Some(delta) = corrupt {
            op = op.corrupted(delta);
        }
        for k in 0..states {
            let rho = reduce(&random_gps(part.total(), seed.split(m as u64).split(k as u64))?, &part)?;
            let residual = verify_with_operator(&rho, &op)?;
            rows.push(CheckRow {
                check: "permutation",
                case: format!("state{k}"),
                m,
                value: residual,
                expected: 0.0,
                residual,
                threshold,
                passed: residual <= threshold,
            });
        }
    }
    Ok(rows)
}

fn bosonic_rows(cutoff: usize) -> Result<Vec<CheckRow>> {
    let states = [
        ("two_mode_squeezed", BosonicState::two_mode_squeezed(0.4, 2)?),
        ("coherent_product", BosonicState::coherent_product(Complex64::new(0.3, 0.1), Complex64::new(-0.2, 0.0), 2)?),
    ];
    let mut rows = Vec::new();
    for (name, st) in &states {
        for m in 2..=3 {
            let chk = bosonic_protocol_check(st, m, cutoff)?;
            rows.push(CheckRow {
                check: "bosonic",
                case: name.to_string(),
                m,
                value: chk.expectation.re,
                expected: chk.mu,
                residual: chk.residual,
                threshold: chk.truncation_bound,
                passed: chk.passed(),
            });
        }
    }
    Ok(rows)
}

fn shot_rows(reps: &[u64], trials: usize, seed: Seed) -> Result<Vec<CheckRow>> {
    if trials < 2 {
        bail!("shot-noise check needs at least 2 trials");
    }
    let mut rows = Vec::new();
    for &r in reps {
        for (j, &mu) in SHOT_MUS.iter().enumerate() {
            let mut rng = seed.split(r).split(j as u64).rng();
            let draws = (0..trials).map(|_| sample_moment(mu, r, &mut rng)).collect::<negativity::Result<Vec<f64>>>()?;
            let predicted = shot_noise_std(mu, r)?;
            let observed = std_dev(&draws);
            let rel = (observed / predicted - 1.0).abs();
            rows.push(CheckRow {
                check: "shot_noise",
                case: format!("mu={mu},R={r}"),
                m: 0,
                value: observed,
                expected: predicted,
                residual: rel,
                threshold: SHOT_BAND,
                passed: rel <= SHOT_BAND,
            });
        }
    }
    Ok(rows)
}

pub fn write_report<W: Write>(mut out: W, rows: &[CheckRow]) -> std::io::Result<()> {
    writeln!(out, "check,case,m,value,expected,residual,threshold,passed")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6e},{:.6e},{:.6e},{:.3e},{}",
            r.check, r.case, r.m, r.value, r.expected, r.residual, r.threshold, r.passed
        )?;
    }
    out.flush()
}

pub fn run(common: &Common, a: VerifyArgs, cfg: &ConfigFile) -> Result<Outcome> {
    let seed = Seed(cfg.get_or(common.seed, "seed", 0)?);
    let max_m: usize = cfg.get_or(common.m_copies.clone(), "m_copies", "4".into())?.parse().context("m-copies")?;
    if max_m < 2 {
        bail!("m-copies must be at least 2");
    }
    let states = cfg.get_or(a.states, "states", 25)?;
    let threshold = cfg.get_or(a.threshold, "threshold", 1e-9)?;
    let corrupt = cfg.pick(a.corrupt, "corrupt")?;
    let trials = cfg.get_or(a.trials, "trials", 1000)?;
    let reps: Vec<u64> = parse_list(&cfg.get_or(a.repetitions, "repetitions", "100,10000".into())?)?;
    let cutoff = cfg.get_or(a.boson_cutoff, "boson_cutoff", 3)?;
    let skip_bosonic = cfg.get_or(a.skip_bosonic, "skip_bosonic", false)?;

    let mut rows = permutation_rows(max_m, states, threshold, corrupt, seed.split_label("permutation"))?;
    if !skip_bosonic {
        rows.extend(bosonic_rows(cutoff)?);
    }
    rows.extend(shot_rows(&reps, trials, seed.split_label("shots"))?);

    let out: Option<PathBuf> = cfg.pick(common.out.clone(), "out")?;
    match &out {
        Some(p) => write_report(std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?, &rows)?,
        None => write_report(std::io::stdout().lock(), &rows)?,
    }
    let failed: Vec<&CheckRow> = rows.iter().filter(|r| !r.passed).collect();
    for r in &failed {
        log::error!("{} {} m={}: residual {:.3e} above {:.3e}", r.check, r.case, r.m, r.residual, r.threshold);
    }
    log::info!("{} of {} checks passed", rows.len() - failed.len(), rows.len());
    Ok(if failed.is_empty() { Outcome::Passed } else { Outcome::ChecksFailed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_operator_passes_and_corrupted_fails() {
        let ok = permutation_rows(3, 3, 1e-9, None, Seed(2)).unwrap();
        assert!(ok.iter().all(|r| r.passed));
        let bad = permutation_rows(3, 3, 1e-9, Some(0.05), Seed(2)).unwrap();
        assert!(bad.iter().any(|r| !r.passed));
    }

    #[test]
    fn shot_noise_within_band() {
        let rows = shot_rows(&[100], 1000, Seed(3)).unwrap();
        assert!(rows.iter().all(|r| r.passed), "{rows:?}");
    }
}
