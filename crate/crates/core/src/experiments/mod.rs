//! Estimator comparisons on physical states and random spectra.
//!
//! A driver walks a parameter grid (time, field, or partition offset),
//! forms `ρ_AB` at every point and records the exact negativity next to the
//! Chebyshev and network estimates, optionally from shot-noisy moments.

mod spectrum;
mod stats;

pub use spectrum::{ks_distance, spectrum_histogram, SemicircleLaw, SpectrumReport};
pub use stats::{mean, median, rmse, std_dev, Histogram};

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;

use crate::chebyshev::cheb_negativity;
use crate::dataset::fmt_float;
use crate::error::{Error, Result};
use crate::mlnet::{Family, NetworkModel};
use crate::physmodels::{evolve_along, ground_state, heisenberg, ising_quench, neel_state, w_state, xx, KrylovConfig};
use crate::protocol::{noisy_from_exact, ShotNoiseConfig};
use crate::qcore::{pt_spectrum, reduce, DensityMatrix, PureState, TriPartition};

/// The estimators evaluated at every grid point.
#[derive(Clone, Debug, Default)]
pub struct Estimators {
    pub cheb_orders: Vec<usize>,
    /// `(label, model)`; the label becomes a column name.
    pub models: Vec<(String, NetworkModel)>,
    /// Replace exact moments by shot-noisy ones.
    pub noise: Option<ShotNoiseConfig>,
}

impl Estimators {
    /// Highest moment order any estimator needs.
    pub fn max_order(&self) -> usize {
        let cheb = self.cheb_orders.iter().copied().max().unwrap_or(2);
        let ml = self.models.iter().map(|(_, m)| m.spec.max_order()).max().unwrap_or(2);
        cheb.max(ml)
    }

    fn validate(&self) -> Result<()> {
        for (label, _) in &self.models {
            if label.is_empty() || label.contains([',', '\n']) {
                return Err(Error::input(format!("model label '{label}' must be non-empty without commas")));
            }
        }
        Ok(())
    }

    /// Exact negativity and all estimates for `rho`. `point` seeds the noise.
    pub fn evaluate(&self, rho: &DensityMatrix, point: u64) -> Result<Estimates> {
        let spec = pt_spectrum(rho)?;
        let exact = spec.moments(rho.n_a(), rho.n_b(), self.max_order())?;
        let moments = match &self.noise {
            None => exact,
            Some(cfg) => {
                let cfg = ShotNoiseConfig { repetitions: cfg.repetitions, seed: cfg.seed.split(point) };
                let noisy = noisy_from_exact(&exact, &cfg)?;
                noisy.moments
            }
        };
        let cheb = self
            .cheb_orders
            .iter()
            .map(|&m| Ok((m, cheb_negativity(&moments.truncated(m)?)?)))
            .collect::<Result<_>>()?;
        let ml = self
            .models
            .iter()
            .map(|(label, model)| Ok((label.clone(), model.predict(&moments.truncated(model.spec.max_order())?)?)))
            .collect::<Result<_>>()?;
        Ok(Estimates { true_logneg: spec.log_negativity(), cheb, ml })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub true_logneg: f64,
    pub cheb: Vec<(usize, f64)>,
    pub ml: Vec<(String, f64)>,
}

/// One grid point of an experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateRecord {
    pub family: Family,
    pub seed: u64,
    pub n_sites: usize,
    pub bond_dim: usize,
    pub n_a: usize,
    pub n_b: usize,
    pub n_c: usize,
    /// Time, field or partition offset, depending on the experiment.
    pub param: f64,
    pub estimates: Estimates,
    pub noisy_repetitions: Option<u64>,
}

impl EstimateRecord {
    pub fn cheb(&self, order: usize) -> Option<f64> {
        self.estimates.cheb.iter().find(|(m, _)| *m == order).map(|(_, v)| *v)
    }

    pub fn ml(&self, label: &str) -> Option<f64> {
        self.estimates.ml.iter().find(|(l, _)| l == label).map(|(_, v)| *v)
    }
}

fn record(est: &Estimators, rho: &DensityMatrix, part: &TriPartition, param: f64, point: u64) -> Result<EstimateRecord> {
    Ok(EstimateRecord {
        family: Family::Physical,
        seed: 0,
        n_sites: part.total(),
        bond_dim: 0,
        n_a: part.n_a,
        n_b: part.n_b,
        n_c: part.n_c,
        param,
        estimates: est.evaluate(rho, point)?,
        noisy_repetitions: est.noise.map(|c| c.repetitions),
    })
}

/// `e^{−iHt}` trajectory of a Hamiltonian from `psi`, evaluated on `part`.
fn trajectory(
    h: &crate::physmodels::SpinHamiltonian,
    psi: &PureState,
    part: &TriPartition,
    times: &[f64],
    est: &Estimators,
    krylov: &KrylovConfig,
) -> Result<Vec<EstimateRecord>> {
    est.validate()?;
    part.check(psi.n_qubits())?;
    let mut out = Vec::with_capacity(times.len());
    evolve_along(h, psi, times, krylov, |i, t, ev| {
        out.push(record(est, &reduce(&ev.state, part)?, part, t, i as u64)?);
        log::debug!("t = {t:.3}: E = {:.6}", out[i].estimates.true_logneg);
        Ok(())
    })?;
    Ok(out)
}

/// Neel state quenched by the `J = 1` Heisenberg chain; central partition.
pub fn heisenberg_quench(
    n: usize,
    n_a: usize,
    n_b: usize,
    times: &[f64],
    est: &Estimators,
    krylov: &KrylovConfig,
) -> Result<Vec<EstimateRecord>> {
    let part = TriPartition::centered(n_a, n_b, n.saturating_sub(n_a + n_b))?;
    trajectory(&heisenberg(n, 1.0)?, &neel_state(n)?, &part, times, est, krylov)
}

/// Ising ground state at `b_c + Δ` evolved with the Hamiltonian at `b_c − Δ`.
#[allow(clippy::too_many_arguments)]
pub fn ising_quench_run(
    l: usize,
    critical_field: f64,
    delta: f64,
    n_a: usize,
    n_b: usize,
    times: &[f64],
    est: &Estimators,
    krylov: &KrylovConfig,
) -> Result<Vec<EstimateRecord>> {
    let part = TriPartition::centered(n_a, n_b, l.saturating_sub(n_a + n_b))?;
    let (psi, h) = ising_quench(l, critical_field, delta)?;
    trajectory(&h, &psi, &part, times, est, krylov)
}

/// XX ground states across a field grid; central partition.
pub fn xx_scan(l: usize, n_a: usize, n_b: usize, fields: &[f64], est: &Estimators) -> Result<Vec<EstimateRecord>> {
    est.validate()?;
    let part = TriPartition::centered(n_a, n_b, l.saturating_sub(n_a + n_b))?;
    fields
        .par_iter()
        .enumerate()
        .map(|(i, &bz)| {
            let gs = ground_state(&xx(l, bz)?)?;
            if gs.degenerate {
                log::warn!("XX ground space at B_Z = {bz} is degenerate; using one member");
            }
            record(est, &reduce(&gs.state, &part)?, &part, bz, i as u64)
        })
        .collect()
}

/// W state over every contiguous placement of `n_a + n_b` sites, for each
/// `(n_a, n_b)` pair. The record parameter is the offset.
pub fn w_state_sweep(l: usize, sizes: &[(usize, usize)], est: &Estimators) -> Result<Vec<EstimateRecord>> {
    est.validate()?;
    let psi = w_state(l)?;
    let mut out = Vec::new();
    for &(n_a, n_b) in sizes {
        let n_c = l.checked_sub(n_a + n_b).ok_or_else(|| Error::input(format!("{n_a} + {n_b} sites exceed L = {l}")))?;
        for offset in 0..=n_c {
            let part = TriPartition::with_offset(n_a, n_b, n_c, offset)?;
            let point = out.len() as u64;
            out.push(record(est, &reduce(&psi, &part)?, &part, offset as f64, point)?);
        }
    }
    Ok(out)
}

const RECORD_FIXED: [&str; 9] = ["family", "seed", "N", "D", "n_a", "n_b", "n_c", "param", "true_logneg"];

pub fn write_records<W: Write>(mut out: W, records: &[EstimateRecord]) -> Result<()> {
    let Some(first) = records.first() else {
        writeln!(out, "{},noisy_R", RECORD_FIXED.join(","))?;
        return Ok(());
    };
    let orders: Vec<usize> = first.estimates.cheb.iter().map(|(m, _)| *m).collect();
    let labels: Vec<String> = first.estimates.ml.iter().map(|(l, _)| l.clone()).collect();
    let mut header = RECORD_FIXED.join(",");
    for m in &orders {
        let _ = write!(header, ",cheb_{m}");
    }
    for l in &labels {
        let _ = write!(header, ",ml_{l}");
    }
    writeln!(out, "{header},noisy_R")?;
    for r in records {
        let same_cols = r.estimates.cheb.iter().map(|(m, _)| *m).eq(orders.iter().copied())
            && r.estimates.ml.iter().map(|(l, _)| l).eq(labels.iter());
        if !same_cols {
            return Err(Error::Data("records carry different estimator columns".into()));
        }
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{}",
            r.family,
            r.seed,
            r.n_sites,
            r.bond_dim,
            r.n_a,
            r.n_b,
            r.n_c,
            fmt_float(r.param),
            fmt_float(r.estimates.true_logneg)
        );
        for (_, v) in &r.estimates.cheb {
            let _ = write!(line, ",{}", fmt_float(*v));
        }
        for (_, v) in &r.estimates.ml {
            let _ = write!(line, ",{}", fmt_float(*v));
        }
        let _ = write!(line, ",{}", r.noisy_repetitions.map_or(String::new(), |n| n.to_string()));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<EstimateRecord>> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty records file"))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.len() < RECORD_FIXED.len() + 1 || cols[..RECORD_FIXED.len()] != RECORD_FIXED || cols.last() != Some(&"noisy_R") {
        return Err(Error::parse(1, "unexpected records header"));
    }
    let mut orders = Vec::new();
    let mut labels = Vec::new();
    for c in &cols[RECORD_FIXED.len()..cols.len() - 1] {
        if let Some(m) = c.strip_prefix("cheb_") {
            if !labels.is_empty() {
                return Err(Error::parse(1, "Chebyshev columns must precede network columns"));
            }
            orders.push(m.parse::<usize>().map_err(|_| Error::parse(1, format!("bad column '{c}'")))?);
        } else if let Some(l) = c.strip_prefix("ml_") {
            labels.push(l.to_string());
        } else {
            return Err(Error::parse(1, format!("unknown column '{c}'")));
        }
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| Error::parse(line_no, msg);
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != cols.len() {
            return Err(err(format!("expected {} fields, found {}", cols.len(), f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| err(format!("invalid integer '{s}'")));
        let float = |s: &str| s.parse::<f64>().map_err(|_| err(format!("invalid number '{s}'")));
        let k = RECORD_FIXED.len();
        out.push(EstimateRecord {
            family: f[0].parse().map_err(|e: Error| err(e.to_string()))?,
            seed: f[1].parse().map_err(|_| err(format!("invalid seed '{}'", f[1])))?,
            n_sites: int(f[2])?,
            bond_dim: int(f[3])?,
            n_a: int(f[4])?,
            n_b: int(f[5])?,
            n_c: int(f[6])?,
            param: float(f[7])?,
            estimates: Estimates {
                true_logneg: float(f[8])?,
                cheb: orders.iter().enumerate().map(|(j, &m)| Ok((m, float(f[k + j])?))).collect::<Result<_>>()?,
                ml: labels
                    .iter()
                    .enumerate()
                    .map(|(j, l)| Ok((l.clone(), float(f[k + orders.len() + j])?)))
                    .collect::<Result<_>>()?,
            },
            noisy_repetitions: match *f.last().expect("non-empty row") {
                "" => None,
                s => Some(s.parse().map_err(|_| err(format!("invalid repetition count '{s}'")))?),
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlnet::{init_network, NetworkSpec};
    use crate::physmodels::xx_separable_threshold;
    use crate::rng::Seed;

    fn estimators() -> Estimators {
        let model = init_network(&NetworkSpec::reference(3).unwrap(), Seed(1));
        Estimators { cheb_orders: vec![4, 10], models: vec![("m3".into(), model)], noise: None }
    }

    #[test]
    fn heisenberg_trajectory_starts_unentangled() {
        let times = [0.0, 0.5, 1.0];
        let recs = heisenberg_quench(6, 2, 2, &times, &estimators(), &KrylovConfig::default()).unwrap();
        assert_eq!(recs.len(), 3);
        assert_eq!(recs[0].estimates.true_logneg, 0.0);
        assert!(recs[2].estimates.true_logneg > 0.0);
        assert_eq!((recs[1].n_a, recs[1].n_b, recs[1].n_c), (2, 2, 2));
        assert_eq!(recs[2].param, 1.0);
        assert!(recs[1].cheb(10).is_some() && recs[1].ml("m3").is_some());
    }

    #[test]
    fn xx_scan_above_threshold_is_zero() {
        let l = 8;
        let bz = xx_separable_threshold(l) + 0.5;
        let recs = xx_scan(l, 2, 2, &[bz, 3.0], &estimators()).unwrap();
        for r in &recs {
            assert!(r.estimates.true_logneg < 1e-9);
            // The M = 10 interpolant overshoots |x| at the window edge.
            assert!(r.cheb(4).unwrap() < 1e-9);
            assert!(r.cheb(10).unwrap() < 0.02);
        }
    }

    #[test]
    fn w_sweep_covers_every_offset() {
        let recs = w_state_sweep(6, &[(1, 1), (2, 2)], &estimators()).unwrap();
        assert_eq!(recs.len(), 5 + 3);
        let first = recs[0].estimates.true_logneg;
        for r in &recs[..5] {
            assert!((r.estimates.true_logneg - first).abs() < 1e-12);
        }
        assert!(w_state_sweep(4, &[(3, 2)], &estimators()).is_err());
    }

    #[test]
    fn noisy_records_are_flagged_and_reproducible() {
        let mut est = estimators();
        est.noise = Some(ShotNoiseConfig::new(10_000, Seed(5)).unwrap());
        let a = w_state_sweep(5, &[(1, 2)], &est).unwrap();
        let b = w_state_sweep(5, &[(1, 2)], &est).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|r| r.noisy_repetitions == Some(10_000)));
    }

    #[test]
    fn records_round_trip() {
        let recs = w_state_sweep(5, &[(1, 1)], &estimators()).unwrap();
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with(
            "family,seed,N,D,n_a,n_b,n_c,param,true_logneg,cheb_4,cheb_10,ml_m3,noisy_R\n"
        ));
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
        let bad = String::from_utf8(buf).unwrap().replacen("physical,0,5", "physical,x,5", 1);
        assert!(matches!(read_records(bad.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn rejects_bad_labels() {
        let mut est = estimators();
        est.models[0].0 = "a,b".into();
        assert!(w_state_sweep(4, &[(1, 1)], &est).is_err());
    }
}
