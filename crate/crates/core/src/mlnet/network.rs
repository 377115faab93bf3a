use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::qcore::MomentVector;
use crate::rng::Seed;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    /// Exponential linear unit with `α = 1`.
    Elu,
    Linear,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Elu => {
                if z > 0.0 {
                    z
                } else {
                    z.exp_m1()
                }
            }
            Activation::Linear => z,
        }
    }

    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    z.exp()
                }
            }
            Activation::Linear => 1.0,
        }
    }

    /// Initialization variance numerator: `2` for rectifier-like units,
    /// `1` for linear ones.
    fn init_gain(self) -> f64 {
        match self {
            Activation::Relu | Activation::Elu => 2.0,
            Activation::Linear => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Elu => "elu",
            Activation::Linear => "linear",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "elu" => Ok(Activation::Elu),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::input(format!("unknown activation '{other}'"))),
        }
    }
}

/// Input width and hidden layers; the output is one linear unit followed by
/// the clamp `max(0, ·)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub hidden: Vec<(usize, Activation)>,
}

impl NetworkSpec {
    pub fn new(input_width: usize, hidden: Vec<(usize, Activation)>) -> Result<Self> {
        if input_width == 0 || hidden.is_empty() || hidden.iter().any(|(w, _)| *w == 0) {
            return Err(Error::input("network needs a non-empty input and at least one non-empty hidden layer"));
        }
        Ok(NetworkSpec { input_width, hidden })
    }

    /// Network fed with `(n_a, n_b, μ_2, …, μ_M)`.
    pub fn for_order(max_order: usize, hidden: Vec<(usize, Activation)>) -> Result<Self> {
        if max_order < 2 {
            return Err(Error::input("moment order must be at least 2"));
        }
        Self::new(max_order + 1, hidden)
    }

    /// The published layouts for `M = 3` and `M = 10`.
    pub fn reference(max_order: usize) -> Result<Self> {
        use Activation::*;
        match max_order {
            3 => Self::for_order(3, vec![(100, Relu), (56, Relu)]),
            10 => Self::for_order(10, vec![(61, Elu), (87, Relu), (47, Linear)]),
            m => Err(Error::input(format!("no reference network for M = {m} (available: 3, 10)"))),
        }
    }

    /// Moment order `M` implied by the input width.
    pub fn max_order(&self) -> usize {
        self.input_width - 1
    }

    /// `(fan_in, fan_out, activation)` for every layer including the output.
    pub fn layer_shapes(&self) -> Vec<(usize, usize, Activation)> {
        let mut fan_in = self.input_width;
        let mut out = Vec::with_capacity(self.hidden.len() + 1);
        for &(w, a) in &self.hidden {
            out.push((fan_in, w, a));
            fan_in = w;
        }
        out.push((fan_in, 1, Activation::Linear));
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o, _)| i * o + o).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `fan_out × fan_in`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

/// Per-feature affine rescaling applied before the first layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardization {
    pub fn fit(rows: &[&[f64]]) -> Self {
        let width = rows.first().map_or(0, |r| r.len());
        let n = rows.len().max(1) as f64;
        let mean: Vec<f64> = (0..width).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let scale = (0..width)
            .map(|j| {
                let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
                if var > 1e-24 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Standardization { mean, scale }
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: usize,
    pub final_train_loss: f64,
    pub final_validation_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NetworkModel {
    pub spec: NetworkSpec,
    pub layers: Vec<Layer>,
    pub standardization: Option<Standardization>,
    pub meta: TrainingMeta,
}

/// Gaussian weights with variance `gain / fan_in`, zero biases.
pub fn init_network(spec: &NetworkSpec, seed: Seed) -> NetworkModel {
    let layers = spec
        .layer_shapes()
        .into_iter()
        .enumerate()
        .map(|(k, (fan_in, fan_out, act))| {
            let mut rng = seed.split(k as u64).rng();
            let sd = (act.init_gain() / fan_in as f64).sqrt();
            let dist = Normal::new(0.0, sd).expect("positive standard deviation");
            Layer {
                weights: DMatrix::from_fn(fan_out, fan_in, |_, _| dist.sample(&mut rng)),
                bias: DVector::zeros(fan_out),
                activation: act,
            }
        })
        .collect();
    NetworkModel { spec: spec.clone(), layers, standardization: None, meta: TrainingMeta { seed: seed.0, ..Default::default() } }
}

/// Gradient of the unclamped output with respect to the raw features.
#[derive(Clone, Debug, PartialEq)]
pub struct InputGradient {
    pub gradient: Vec<f64>,
    /// Set when the clamp is active at this point; the gradient is then zero.
    pub clamped: bool,
}

impl NetworkModel {
    pub fn input_width(&self) -> usize {
        self.spec.input_width
    }

    fn check_width(&self, width: usize) -> Result<()> {
        if width != self.spec.input_width {
            return Err(Error::Shape { expected: self.spec.input_width, got: width });
        }
        Ok(())
    }

    fn prepare(&self, features: &[f64]) -> DVector<f64> {
        match &self.standardization {
            Some(st) => DVector::from_vec(st.apply(features)),
            None => DVector::from_column_slice(features),
        }
    }

    /// Output before the clamp.
    pub fn forward_raw(&self, features: &[f64]) -> Result<f64> {
        self.check_width(features.len())?;
        let mut a = self.prepare(features);
        for layer in &self.layers {
            let z = &layer.weights * &a + &layer.bias;
            a = z.map(|v| layer.activation.apply(v));
        }
        Ok(a[0])
    }

    /// `E^ML = max(0, output)`.
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        Ok(self.forward_raw(features)?.max(0.0))
    }

    pub fn predict(&self, moments: &MomentVector) -> Result<f64> {
        if moments.max_order() != self.spec.max_order() {
            return Err(Error::input(format!(
                "model expects moments up to M = {}, got M = {}",
                self.spec.max_order(),
                moments.max_order()
            )));
        }
        self.forward(&moments.features())
    }

    /// Clamped outputs for a batch of feature rows.
    pub fn forward_batch(&self, rows: &[&[f64]]) -> Result<Vec<f64>> {
        Ok(self.forward_batch_raw(rows)?.into_iter().map(|v| v.max(0.0)).collect())
    }

    pub(crate) fn forward_batch_raw(&self, rows: &[&[f64]]) -> Result<Vec<f64>> {
        if let Some(r) = rows.iter().find(|r| r.len() != self.spec.input_width) {
            return Err(Error::Shape { expected: self.spec.input_width, got: r.len() });
        }
        if rows.is_empty() {
            return Ok(Vec::new());
        }
        let x = self.input_matrix(rows);
        let mut a = x;
        for layer in &self.layers {
            let mut z = &layer.weights * &a;
            for mut col in z.column_iter_mut() {
                col += &layer.bias;
            }
            a = z.map(|v| layer.activation.apply(v));
        }
        Ok(a.row(0).iter().copied().collect())
    }

    /// Feature rows as columns of a `width × batch` matrix, standardized.
    pub(crate) fn input_matrix(&self, rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(self.spec.input_width, rows.len(), |i, j| match &self.standardization {
            Some(st) => (rows[j][i] - st.mean[i]) / st.scale[i],
            None => rows[j][i],
        })
    }
}

/// Reverse-mode `∂E/∂(feature)` of the unclamped output.
pub fn input_gradient(model: &NetworkModel, features: &[f64]) -> Result<InputGradient> {
    model.check_width(features.len())?;
    let mut a = model.prepare(features);
    let mut pre = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let z = &layer.weights * &a + &layer.bias;
        a = z.map(|v| layer.activation.apply(v));
        pre.push(z);
    }
    if a[0] < 0.0 {
        return Ok(InputGradient { gradient: vec![0.0; features.len()], clamped: true });
    }
    let mut delta = DVector::from_element(1, 1.0);
    for (layer, z) in model.layers.iter().zip(&pre).rev() {
        let dz = delta.component_mul(&z.map(|v| layer.activation.derivative(v)));
        delta = layer.weights.transpose() * dz;
    }
    let mut gradient: Vec<f64> = delta.iter().copied().collect();
    if let Some(st) = &model.standardization {
        for (g, s) in gradient.iter_mut().zip(&st.scale) {
            *g /= s;
        }
    }
    Ok(InputGradient { gradient, clamped: false })
}

/// `ΔE ≈ Σ_m Δμ_m ∂E/∂μ_m`.
///
/// `grads` is either the moment part of the gradient (same length as
/// `moment_errors`) or the full input gradient, whose leading `n_a`, `n_b`
/// entries carry no error.
pub fn propagate_error(grads: &[f64], moment_errors: &[f64]) -> Result<f64> {
    let g = if grads.len() == moment_errors.len() {
        grads
    } else if grads.len() == moment_errors.len() + 2 {
        &grads[2..]
    } else {
        return Err(Error::Shape { expected: moment_errors.len(), got: grads.len() });
    };
    Ok(g.iter().zip(moment_errors).map(|(a, b)| a * b).sum())
}
