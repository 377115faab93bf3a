use crate::error::{Error, Result};

/// Equal-width histogram.
#[derive(Clone, Debug, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    /// `bins` equal bins over `range`; values outside are dropped.
    pub fn new(values: &[f64], bins: usize, range: (f64, f64)) -> Result<Self> {
        if bins == 0 || !range.0.is_finite() || !range.1.is_finite() || range.1 <= range.0 {
            return Err(Error::input("histogram needs at least one bin and a finite, non-empty range"));
        }
        let width = (range.1 - range.0) / bins as f64;
        let edges = (0..=bins).map(|i| range.0 + width * i as f64).collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            if v < range.0 || v > range.1 || !v.is_finite() {
                continue;
            }
            let k = (((v - range.0) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Ok(Histogram { edges, counts })
    }

    /// Range spanning the data (padded if all values coincide).
    pub fn auto(values: &[f64], bins: usize) -> Result<Self> {
        let finite = values.iter().copied().filter(|v| v.is_finite());
        let lo = finite.clone().fold(f64::INFINITY, f64::min);
        let hi = finite.fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            return Err(Error::input("histogram of an empty sample"));
        }
        let pad = if hi > lo { 0.0 } else { 0.5 };
        Self::new(values, bins, (lo - pad, hi + pad))
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (`n − 1` denominator).
pub fn std_dev(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub fn rmse(estimates: &[f64], truth: &[f64]) -> f64 {
    let n = estimates.len().min(truth.len());
    (estimates.iter().zip(truth).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_value_once() {
        let v = [0.0, 0.1, 0.5, 0.99, 1.0, 2.0];
        let h = Histogram::new(&v, 4, (0.0, 1.0)).unwrap();
        assert_eq!(h.counts, vec![2, 0, 1, 2]);
        assert_eq!(h.edges.len(), 5);
        assert_eq!(h.centers()[0], 0.125);
        let h = Histogram::auto(&[3.0, 3.0], 3).unwrap();
        assert_eq!(h.total(), 2);
        assert!(Histogram::new(&v, 0, (0.0, 1.0)).is_err());
    }

    #[test]
    fn summary_statistics() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mean(&v), 2.5);
        assert!((std_dev(&v) - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(median(&v), 2.5);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(rmse(&[1.0, 1.0], &[0.0, 2.0]), 1.0);
    }
}
