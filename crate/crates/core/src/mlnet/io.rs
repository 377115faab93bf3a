//! Plain-text model files.
//!
//! ```text
//! negativity-mlp
//! format_version 1
//! input_width 4
//! hidden 2
//! layer 100 relu
//! layer 56 relu
//! standardization none
//! meta <seed> <epochs> <train loss> <validation loss>
//! weights 0
//! <one row of fan_in values per output unit>
//! bias 0
//! <fan_out values>
//! …
//! end
//! ```
//!
//! Floats are written with 17 significant digits, so a save/load round trip
//! is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

use super::network::{Activation, Layer, NetworkModel, NetworkSpec, Standardization, TrainingMeta};

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "negativity-mlp";

fn fmt_row(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| format!("{v:.16e}")).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(model: &NetworkModel) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "format_version {MODEL_FORMAT_VERSION}");
    let _ = writeln!(s, "input_width {}", model.spec.input_width);
    let _ = writeln!(s, "hidden {}", model.spec.hidden.len());
    for (w, a) in &model.spec.hidden {
        let _ = writeln!(s, "layer {w} {a}");
    }
    match &model.standardization {
        None => {
            let _ = writeln!(s, "standardization none");
        }
        Some(st) => {
            let _ = writeln!(s, "standardization affine");
            let _ = writeln!(s, "{}", fmt_row(st.mean.iter().copied()));
            let _ = writeln!(s, "{}", fmt_row(st.scale.iter().copied()));
        }
    }
    let m = &model.meta;
    let _ = writeln!(s, "meta {} {} {:.16e} {:.16e}", m.seed, m.epochs, m.final_train_loss, m.final_validation_loss);
    for (k, layer) in model.layers.iter().enumerate() {
        let _ = writeln!(s, "weights {k}");
        for row in layer.weights.row_iter() {
            let _ = writeln!(s, "{}", fmt_row(row.iter().copied()));
        }
        let _ = writeln!(s, "bias {k}");
        let _ = writeln!(s, "{}", fmt_row(layer.bias.iter().copied()));
    }
    let _ = writeln!(s, "end");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok(l.trim())
            }
            None => Err(Error::parse(self.last + 1, "unexpected end of file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.last, msg)
    }

    /// `key value…` line; returns the values.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected '{key}', found '{line}'")));
        }
        Ok(parts.collect())
    }

    fn single<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        let vals = self.keyed(key)?;
        if vals.len() != 1 {
            return Err(self.err(format!("'{key}' takes one value")));
        }
        vals[0].parse().map_err(|_| self.err(format!("invalid value '{}' for '{key}'", vals[0])))
    }

    fn floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next()?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| self.err(format!("invalid number '{t}'"))))
            .collect::<Result<_>>()?;
        if vals.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", vals.len())));
        }
        Ok(vals)
    }
}

pub fn model_from_str(text: &str) -> Result<NetworkModel> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    if lines.next()? != MAGIC {
        return Err(lines.err("not a model file"));
    }
    let version: u32 = lines.single("format_version")?;
    if version != MODEL_FORMAT_VERSION {
        return Err(Error::UnsupportedVersion { found: version, expected: MODEL_FORMAT_VERSION });
    }
    let input_width: usize = lines.single("input_width")?;
    let n_hidden: usize = lines.single("hidden")?;
    let mut hidden = Vec::with_capacity(n_hidden);
    for _ in 0..n_hidden {
        let vals = lines.keyed("layer")?;
        if vals.len() != 2 {
            return Err(lines.err("'layer' takes a width and an activation"));
        }
        let w: usize = vals[0].parse().map_err(|_| lines.err(format!("invalid width '{}'", vals[0])))?;
        let a: Activation = vals[1].parse().map_err(|e: Error| lines.err(e.to_string()))?;
        hidden.push((w, a));
    }
    let spec = NetworkSpec::new(input_width, hidden).map_err(|e| lines.err(e.to_string()))?;
    let standardization = match lines.keyed("standardization")?.as_slice() {
        ["none"] => None,
        ["affine"] => {
            let mean = lines.floats(input_width)?;
            let scale = lines.floats(input_width)?;
            if scale.iter().any(|s| *s == 0.0 || !s.is_finite()) {
                return Err(lines.err("standardization scale must be finite and non-zero"));
            }
            Some(Standardization { mean, scale })
        }
        _ => return Err(lines.err("standardization must be 'none' or 'affine'")),
    };
    let meta_vals = lines.keyed("meta")?;
    if meta_vals.len() != 4 {
        return Err(lines.err("'meta' takes four values"));
    }
    let meta = TrainingMeta {
        seed: meta_vals[0].parse().map_err(|_| lines.err("invalid seed"))?,
        epochs: meta_vals[1].parse().map_err(|_| lines.err("invalid epoch count"))?,
        final_train_loss: meta_vals[2].parse().map_err(|_| lines.err("invalid loss"))?,
        final_validation_loss: meta_vals[3].parse().map_err(|_| lines.err("invalid loss"))?,
    };
    let mut layers = Vec::new();
    for (k, (fan_in, fan_out, activation)) in spec.layer_shapes().into_iter().enumerate() {
        let idx: usize = lines.single("weights")?;
        if idx != k {
            return Err(lines.err(format!("expected weights {k}, found weights {idx}")));
        }
        let mut data = Vec::with_capacity(fan_in * fan_out);
        for _ in 0..fan_out {
            data.extend(lines.floats(fan_in)?);
        }
        let idx: usize = lines.single("bias")?;
        if idx != k {
            return Err(lines.err(format!("expected bias {k}, found bias {idx}")));
        }
        let bias = lines.floats(fan_out)?;
        layers.push(Layer {
            weights: DMatrix::from_row_slice(fan_out, fan_in, &data),
            bias: DVector::from_vec(bias),
            activation,
        });
    }
    if lines.next()? != "end" {
        return Err(lines.err("expected 'end'"));
    }
    Ok(NetworkModel { spec, layers, standardization, meta })
}

pub fn save_model(model: &NetworkModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<NetworkModel> {
    model_from_str(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlnet::init_network;
    use crate::rng::Seed;

    fn model() -> NetworkModel {
        let mut m = init_network(&NetworkSpec::reference(10).unwrap(), Seed(3));
        m.layers[1].bias[4] = -0.123_456_789_012_345_68;
        m.meta = TrainingMeta { seed: 3, epochs: 7, final_train_loss: 0.01, final_validation_loss: 0.02 };
        m
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        let m = model();
        save_model(&m, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, m);
        let x = [3.0, 2.0, 0.5, 0.2, 0.1, 0.05, 0.02, 0.01, 0.005, 0.002, 0.001];
        assert_eq!(back.forward_raw(&x).unwrap().to_bits(), m.forward_raw(&x).unwrap().to_bits());
    }

    #[test]
    fn round_trip_with_standardization() {
        let mut m = model();
        m.standardization = Some(Standardization { mean: vec![0.1; 11], scale: vec![0.3; 11] });
        assert_eq!(model_from_str(&model_to_string(&m)).unwrap(), m);
    }

    #[test]
    fn shape_mismatch_is_a_located_parse_error() {
        let text = model_to_string(&model()).replacen("layer 61 elu", "layer 62 elu", 1);
        match model_from_str(&text) {
            Err(Error::Parse { line, .. }) => assert!(line > 5),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_mismatch() {
        let text = model_to_string(&model()).replacen("format_version 1", "format_version 2", 1);
        assert!(matches!(model_from_str(&text), Err(Error::UnsupportedVersion { found: 2, expected: 1 })));
    }

    #[test]
    fn truncated_and_garbled_files() {
        let text = model_to_string(&model());
        let cut: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(matches!(model_from_str(&cut), Err(Error::Parse { .. })));
        let garbled = text.replacen("weights 1\n", "weights 1\nnot numbers\n", 1);
        assert!(matches!(model_from_str(&garbled), Err(Error::Parse { .. })));
        assert!(matches!(model_from_str("hello"), Err(Error::Parse { line: 1, .. })));
    }
}
