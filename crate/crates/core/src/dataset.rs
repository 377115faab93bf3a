//! Labelled corpora of random states.
//!
//! Each row holds one `(state, tri-partition)` pair: its provenance, the
//! partition sizes, the partial-transpose moments `μ_2 … μ_M` and the exact
//! logarithmic negativity. Rows are generated in parallel but depend only on
//! the row's state index, so a corpus is a pure function of its config.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mlnet::{Family, Provenance, TrainingSample};
use crate::mps::{random_mps, rho_ab_from_mps};
use crate::qcore::{pt_spectrum, random_gps, reduce, DensityMatrix, TriPartition, MAX_MOMENT_ORDER};
use crate::rng::Seed;

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusConfig {
    pub n_samples: usize,
    /// Highest moment order stored.
    pub max_order: usize,
    /// Share of states drawn as generic pure states; the rest are MPS.
    pub gps_fraction: f64,
    /// Inclusive chain-length range for generic pure states.
    pub gps_sites: (usize, usize),
    /// Inclusive chain-length range for MPS.
    pub mps_sites: (usize, usize),
    pub bond_dims: Vec<usize>,
    /// Upper bound on `n_a + n_b`.
    pub max_ab: usize,
    /// Tri-partitions drawn per state.
    pub partitions_per_state: usize,
    /// Fix `(n_a, n_b)` instead of drawing the sizes.
    pub fixed_ab: Option<(usize, usize)>,
    pub seed: Seed,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            n_samples: 20_000,
            max_order: 10,
            gps_fraction: 0.3,
            gps_sites: (3, 20),
            mps_sites: (3, 24),
            bond_dims: vec![2, 4, 8, 16, 32],
            max_ab: 10,
            partitions_per_state: 4,
            fixed_ab: None,
            seed: Seed(0),
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 || self.partitions_per_state == 0 {
            return Err(Error::input("sample and partition counts must be positive"));
        }
        if !(2..=MAX_MOMENT_ORDER).contains(&self.max_order) {
            return Err(Error::input(format!("moment order {} outside 2..={MAX_MOMENT_ORDER}", self.max_order)));
        }
        if !(0.0..=1.0).contains(&self.gps_fraction) {
            return Err(Error::input("gps_fraction must lie in [0, 1]"));
        }
        for (name, (lo, hi), cap) in [
            ("gps_sites", self.gps_sites, crate::qcore::MAX_STATE_QUBITS),
            ("mps_sites", self.mps_sites, crate::mps::MAX_MPS_SITES),
        ] {
            if lo < 2 || lo > hi || hi > cap {
                return Err(Error::input(format!("{name} range {lo}..={hi} must be non-empty within 2..={cap}")));
            }
        }
        if self.gps_fraction < 1.0 && (self.bond_dims.is_empty() || self.bond_dims.contains(&0)) {
            return Err(Error::input("bond dimensions must be a non-empty list of positive values"));
        }
        if !(2..=crate::qcore::MAX_DENSE_AB_QUBITS).contains(&self.max_ab) {
            return Err(Error::input(format!("max_ab must lie in 2..={}", crate::qcore::MAX_DENSE_AB_QUBITS)));
        }
        if let Some((a, b)) = self.fixed_ab {
            let shortest = match (self.gps_fraction > 0.0, self.gps_fraction < 1.0) {
                (true, true) => self.gps_sites.0.min(self.mps_sites.0),
                (true, false) => self.gps_sites.0,
                _ => self.mps_sites.0,
            };
            if a == 0 || b == 0 || a + b > shortest || a + b > crate::qcore::MAX_DENSE_AB_QUBITS {
                return Err(Error::input(format!("fixed sizes ({a}, {b}) do not fit chains of {shortest} sites")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetRow {
    pub provenance: Provenance,
    pub partition: TriPartition,
    /// `μ_2 … μ_M`.
    pub moments: Vec<f64>,
    pub logneg: f64,
}

impl DatasetRow {
    /// Exact moments and negativity of `rho`.
    pub fn from_density(provenance: Provenance, partition: TriPartition, rho: &DensityMatrix, max_order: usize) -> Result<Self> {
        let spec = pt_spectrum(rho)?;
        let mv = spec.moments(rho.n_a(), rho.n_b(), max_order)?;
        Ok(DatasetRow { provenance, partition, moments: mv.moments().to_vec(), logneg: spec.log_negativity() })
    }

    pub fn max_order(&self) -> usize {
        self.moments.len() + 1
    }

    /// Training sample with features `(n_a, n_b, μ_2, …, μ_order)`.
    pub fn to_sample(&self, order: usize) -> Result<TrainingSample> {
        if order < 2 || order > self.max_order() {
            return Err(Error::input(format!("row stores moments up to {}, asked for {order}", self.max_order())));
        }
        let mut features = vec![self.partition.n_a as f64, self.partition.n_b as f64];
        features.extend_from_slice(&self.moments[..order - 1]);
        Ok(TrainingSample { features, label: self.logneg, provenance: self.provenance })
    }
}

pub fn to_samples(rows: &[DatasetRow], order: usize) -> Result<Vec<TrainingSample>> {
    rows.iter().map(|r| r.to_sample(order)).collect()
}

/// Draw the corpus described by `cfg`.
pub fn generate_corpus(cfg: &CorpusConfig) -> Result<Vec<DatasetRow>> {
    cfg.validate()?;
    let n_states = cfg.n_samples.div_ceil(cfg.partitions_per_state);
    let per_state: Vec<Vec<DatasetRow>> =
        (0..n_states).into_par_iter().map(|i| state_rows(cfg, i as u64)).collect::<Result<_>>()?;
    let mut rows: Vec<DatasetRow> = per_state.into_iter().flatten().collect();
    rows.truncate(cfg.n_samples);
    Ok(rows)
}

fn state_rows(cfg: &CorpusConfig, index: u64) -> Result<Vec<DatasetRow>> {
    let seed = cfg.seed.split(index);
    let mut rng = seed.split_label("layout").rng();
    let gps = rng.gen_bool(cfg.gps_fraction);
    let (family, (lo, hi)) = if gps { (Family::Gps, cfg.gps_sites) } else { (Family::Mps, cfg.mps_sites) };
    let n = rng.gen_range(lo..=hi);
    let bond_dim = if gps { 0 } else { cfg.bond_dims[rng.gen_range(0..cfg.bond_dims.len())] };
    let parts: Vec<TriPartition> = (0..cfg.partitions_per_state)
        .map(|_| {
            let (n_a, n_ab) = match cfg.fixed_ab {
                Some((a, b)) => (a, a + b),
                None => {
                    let n_ab = rng.gen_range(2..=cfg.max_ab.min(n));
                    (rng.gen_range(1..n_ab), n_ab)
                }
            };
            let n_c = n - n_ab;
            TriPartition::with_offset(n_a, n_ab - n_a, n_c, rng.gen_range(0..=n_c))
        })
        .collect::<Result<_>>()?;
    let state_seed = seed.split_label("state");
    let provenance = Provenance { family, n_sites: n, bond_dim, seed: state_seed.0 };
    let rhos: Vec<DensityMatrix> = if gps {
        let psi = random_gps(n, state_seed)?;
        parts.iter().map(|p| reduce(&psi, p)).collect::<Result<_>>()?
    } else {
        let mps = random_mps(n, bond_dim, state_seed)?;
        parts.iter().map(|p| rho_ab_from_mps(&mps, p)).collect::<Result<_>>()?
    };
    parts.iter().zip(&rhos).map(|(p, rho)| DatasetRow::from_density(provenance, *p, rho, cfg.max_order)).collect()
}

const FIXED_COLUMNS: [&str; 7] = ["family", "seed", "N", "D", "n_a", "n_b", "n_c"];

/// Header for rows carrying moments up to `max_order`.
pub fn dataset_header(max_order: usize) -> String {
    let mut cols: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    cols.extend((2..=max_order).map(|m| format!("mu_{m}")));
    cols.push("logneg".into());
    cols.join(",")
}

/// Float with 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_dataset<W: Write>(mut out: W, rows: &[DatasetRow]) -> Result<()> {
    let order = rows.first().map_or(2, DatasetRow::max_order);
    if let Some(bad) = rows.iter().find(|r| r.max_order() != order) {
        return Err(Error::Data(format!("mixed moment orders {order} and {} in one dataset", bad.max_order())));
    }
    writeln!(out, "{}", dataset_header(order))?;
    let mut line = String::new();
    for r in rows {
        line.clear();
        let p = &r.partition;
        let _ = write!(
            line,
            "{},{},{},{},{},{},{}",
            r.provenance.family, r.provenance.seed, r.provenance.n_sites, r.provenance.bond_dim, p.n_a, p.n_b, p.n_c
        );
        for m in &r.moments {
            let _ = write!(line, ",{}", fmt_float(*m));
        }
        let _ = write!(line, ",{}", fmt_float(r.logneg));
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_dataset(path: &Path, rows: &[DatasetRow]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    write_dataset(&mut w, rows)?;
    w.flush()?;
    Ok(())
}

/// Parse a dataset; errors carry the 1-based line number. The file stores
/// block sizes only, so partitions come back with offset 0.
pub fn read_dataset<R: Read>(input: R) -> Result<Vec<DatasetRow>> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "empty dataset"))??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let n_mu = cols.len().saturating_sub(FIXED_COLUMNS.len() + 1);
    if n_mu == 0 || cols.len() - n_mu - 1 != FIXED_COLUMNS.len() || header.trim() != dataset_header(n_mu + 1) {
        return Err(Error::parse(1, format!("unexpected header '{}'", header.trim())));
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(line.trim(), n_mu).map_err(|msg| Error::parse(line_no, msg))?);
    }
    Ok(rows)
}

pub fn load_dataset(path: &Path) -> Result<Vec<DatasetRow>> {
    read_dataset(std::fs::File::open(path)?)
}

fn parse_row(line: &str, n_mu: usize) -> std::result::Result<DatasetRow, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != FIXED_COLUMNS.len() + n_mu + 1 {
        return Err(format!("expected {} fields, found {}", FIXED_COLUMNS.len() + n_mu + 1, fields.len()));
    }
    fn int<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("invalid {name} '{s}'"))
    }
    fn float(s: &str) -> std::result::Result<f64, String> {
        s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("invalid number '{s}'"))
    }
    let family: Family = fields[0].parse().map_err(|e: Error| e.to_string())?;
    let seed: u64 = int(fields[1], "seed")?;
    let n: usize = int(fields[2], "N")?;
    let bond_dim: usize = int(fields[3], "D")?;
    let (n_a, n_b, n_c): (usize, usize, usize) = (int(fields[4], "n_a")?, int(fields[5], "n_b")?, int(fields[6], "n_c")?);
    if n_a + n_b + n_c != n {
        return Err(format!("n_a + n_b + n_c = {} differs from N = {n}", n_a + n_b + n_c));
    }
    let partition = TriPartition::new(n_a, n_b, n_c).map_err(|e| e.to_string())?;
    let moments = fields[7..7 + n_mu].iter().map(|s| float(s)).collect::<std::result::Result<Vec<_>, _>>()?;
    let logneg = float(fields[7 + n_mu])?;
    if logneg < 0.0 {
        return Err(format!("negative logneg {logneg}"));
    }
    Ok(DatasetRow { provenance: Provenance { family, n_sites: n, bond_dim, seed }, partition, moments, logneg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{log_negativity, PureState};

    fn small_config(seed: u64) -> CorpusConfig {
        CorpusConfig {
            n_samples: 40,
            max_order: 6,
            gps_sites: (3, 8),
            mps_sites: (3, 10),
            bond_dims: vec![2, 4],
            max_ab: 6,
            seed: Seed(seed),
            ..CorpusConfig::default()
        }
    }

    #[test]
    fn corpus_rows_are_consistent() {
        let rows = generate_corpus(&small_config(1)).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.iter().any(|r| r.provenance.family == Family::Gps));
        assert!(rows.iter().any(|r| r.provenance.family == Family::Mps));
        for r in &rows {
            let p = &r.partition;
            assert_eq!(p.n_a + p.n_b + p.n_c, r.provenance.n_sites);
            assert!(p.n_a >= 1 && p.n_b >= 1 && p.n_ab() <= 6);
            assert_eq!(r.moments.len(), 5);
            assert!(r.moments[0] > 0.0 && r.moments[0] <= 1.0 + 1e-12);
            assert!(r.logneg >= 0.0);
            assert_eq!(r.provenance.bond_dim == 0, r.provenance.family == Family::Gps);
        }
    }

    #[test]
    fn corpus_is_deterministic() {
        assert_eq!(generate_corpus(&small_config(2)).unwrap(), generate_corpus(&small_config(2)).unwrap());
        assert_ne!(generate_corpus(&small_config(2)).unwrap(), generate_corpus(&small_config(3)).unwrap());
    }

    #[test]
    fn single_bell_like_row() {
        let psi = PureState::bell();
        let part = TriPartition::new(1, 1, 0).unwrap();
        let rho = reduce(&psi, &part).unwrap();
        let prov = Provenance { family: Family::Physical, n_sites: 2, bond_dim: 0, seed: 0 };
        let row = DatasetRow::from_density(prov, part, &rho, 4).unwrap();
        assert!((row.logneg - log_negativity(&rho).unwrap()).abs() < 1e-15);
        assert!((row.moments[0] - 1.0).abs() < 1e-12);
        let s = row.to_sample(3).unwrap();
        assert_eq!(s.features.len(), 4);
        assert!(row.to_sample(5).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let rows = generate_corpus(&small_config(4)).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("family,seed,N,D,n_a,n_b,n_c,mu_2,mu_3,mu_4,mu_5,mu_6,logneg\n"));
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in back.iter().zip(&rows) {
            assert_eq!(a.moments, b.moments);
            assert_eq!(a.logneg.to_bits(), b.logneg.to_bits());
            assert_eq!(a.provenance, b.provenance);
            assert_eq!((a.partition.n_a, a.partition.n_b, a.partition.n_c), (b.partition.n_a, b.partition.n_b, b.partition.n_c));
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let good = "family,seed,N,D,n_a,n_b,n_c,mu_2,logneg\ngps,1,3,0,1,1,1,0.5,0.1\n";
        assert_eq!(read_dataset(good.as_bytes()).unwrap().len(), 1);
        let bad_number = format!("{good}mps,2,3,2,1,1,1,abc,0.1\n");
        assert!(matches!(read_dataset(bad_number.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let bad_sizes = format!("{good}mps,2,4,2,1,1,1,0.5,0.1\n");
        assert!(matches!(read_dataset(bad_sizes.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let bad_family = format!("{good}{good}");
        assert!(matches!(read_dataset(bad_family.as_bytes()), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(read_dataset("x,y\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(read_dataset("".as_bytes()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn fixed_sizes_single_row() {
        let cfg = CorpusConfig {
            n_samples: 1,
            max_order: 3,
            gps_fraction: 1.0,
            gps_sites: (4, 4),
            fixed_ab: Some((1, 1)),
            ..CorpusConfig::default()
        };
        let rows = generate_corpus(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let p = rows[0].partition;
        assert_eq!((p.n_a, p.n_b, p.n_c), (1, 1, 2));
        assert!(rows[0].moments[0] > 0.0 && rows[0].moments[0] <= 1.0);
        let bad = CorpusConfig { fixed_ab: Some((3, 2)), ..cfg };
        assert!(generate_corpus(&bad).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        let mut c = small_config(0);
        c.gps_sites = (9, 8);
        assert!(generate_corpus(&c).is_err());
        let mut c = small_config(0);
        c.max_order = 31;
        assert!(generate_corpus(&c).is_err());
        let mut c = small_config(0);
        c.bond_dims.clear();
        assert!(generate_corpus(&c).is_err());
    }
}
