use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::Seed;

use super::network::{init_network, Layer, NetworkModel, NetworkSpec, Standardization};

/// Origin of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Gps,
    Mps,
    Physical,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Gps => "gps",
            Family::Mps => "mps",
            Family::Physical => "physical",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gps" => Ok(Family::Gps),
            "mps" => Ok(Family::Mps),
            "physical" => Ok(Family::Physical),
            other => Err(Error::input(format!("unknown state family '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub family: Family,
    pub n_sites: usize,
    /// Bond dimension; 0 for states without one.
    pub bond_dim: usize,
    pub seed: u64,
}

/// Features `(n_a, n_b, μ_2, …, μ_M)` and the exact negativity.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub features: Vec<f64>,
    pub label: f64,
    pub provenance: Provenance,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainParams {
    pub epochs: usize,
    pub batch_size: usize,
    /// Adam step size in the first epoch.
    pub learning_rate: f64,
    /// Step size in the last epoch; the rate decays geometrically in between.
    pub final_learning_rate: f64,
    /// Per-step decay of the exponential moving average of the weights.
    pub ema_decay: f64,
    pub validation_fraction: f64,
    pub min_samples: usize,
    pub standardize: bool,
    pub seed: Seed,
}

impl Default for TrainParams {
    fn default() -> Self {
        TrainParams {
            epochs: 200,
            batch_size: 128,
            learning_rate: 1e-3,
            final_learning_rate: 1e-4,
            ema_decay: 0.99,
            validation_fraction: 0.1,
            min_samples: 1000,
            standardize: false,
            seed: Seed(0),
        }
    }
}

/// Mean-squared losses of the averaged weights after every epoch.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingHistory {
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

impl TrainingHistory {
    /// Fraction of epochs whose training loss did not increase.
    pub fn non_increasing_fraction(&self) -> f64 {
        let n = self.train_loss.len();
        if n < 2 {
            return 1.0;
        }
        let ok = self.train_loss.windows(2).filter(|w| w[1] <= w[0]).count();
        ok as f64 / (n - 1) as f64
    }
}

struct Adam {
    m_w: Vec<DMatrix<f64>>,
    v_w: Vec<DMatrix<f64>>,
    m_b: Vec<DVector<f64>>,
    v_b: Vec<DVector<f64>>,
    step: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    fn new(layers: &[Layer]) -> Self {
        Adam {
            m_w: layers.iter().map(|l| DMatrix::zeros(l.weights.nrows(), l.weights.ncols())).collect(),
            v_w: layers.iter().map(|l| DMatrix::zeros(l.weights.nrows(), l.weights.ncols())).collect(),
            m_b: layers.iter().map(|l| DVector::zeros(l.bias.len())).collect(),
            v_b: layers.iter().map(|l| DVector::zeros(l.bias.len())).collect(),
            step: 0,
        }
    }

    fn update(&mut self, layers: &mut [Layer], grads: &[(DMatrix<f64>, DVector<f64>)], lr: f64) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        for (k, (layer, (gw, gb))) in layers.iter_mut().zip(grads).enumerate() {
            self.m_w[k].zip_apply(gw, |m, g| *m = BETA1 * *m + (1.0 - BETA1) * g);
            self.v_w[k].zip_apply(gw, |v, g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
            self.m_b[k].zip_apply(gb, |m, g| *m = BETA1 * *m + (1.0 - BETA1) * g);
            self.v_b[k].zip_apply(gb, |v, g| *v = BETA2 * *v + (1.0 - BETA2) * g * g);
            let (mw, vw) = (&self.m_w[k], &self.v_w[k]);
            for ((w, m), v) in layer.weights.iter_mut().zip(mw.iter()).zip(vw.iter()) {
                *w -= lr * (m / c1) / ((v / c2).sqrt() + ADAM_EPS);
            }
            let (mb, vb) = (&self.m_b[k], &self.v_b[k]);
            for ((b, m), v) in layer.bias.iter_mut().zip(mb.iter()).zip(vb.iter()) {
                *b -= lr * (m / c1) / ((v / c2).sqrt() + ADAM_EPS);
            }
        }
    }
}

/// Gradients of the batch MSE (unclamped output) for every layer.
fn backprop(model: &NetworkModel, x: DMatrix<f64>, y: &[f64]) -> Vec<(DMatrix<f64>, DVector<f64>)> {
    let batch = y.len() as f64;
    let mut acts = vec![x];
    let mut pres = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let mut z = &layer.weights * acts.last().expect("input present");
        for mut col in z.column_iter_mut() {
            col += &layer.bias;
        }
        acts.push(z.map(|v| layer.activation.apply(v)));
        pres.push(z);
    }
    let out = acts.last().expect("output present");
    let mut delta = DMatrix::from_fn(1, y.len(), |_, j| 2.0 * (out[(0, j)] - y[j]) / batch);
    let mut grads = Vec::with_capacity(model.layers.len());
    for k in (0..model.layers.len()).rev() {
        let layer = &model.layers[k];
        let act = layer.activation;
        delta.zip_apply(&pres[k], |d, z| *d *= act.derivative(z));
        let gw = &delta * acts[k].transpose();
        let gb = DVector::from_iterator(delta.nrows(), delta.row_iter().map(|r| r.sum()));
        let next = if k > 0 { Some(layer.weights.transpose() * &delta) } else { None };
        grads.push((gw, gb));
        if let Some(n) = next {
            delta = n;
        }
    }
    grads.reverse();
    grads
}

fn mse(model: &NetworkModel, rows: &[&[f64]], labels: &[f64]) -> Result<f64> {
    if rows.is_empty() {
        return Ok(f64::NAN);
    }
    let pred = model.forward_batch_raw(rows)?;
    Ok(pred.iter().zip(labels).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / labels.len() as f64)
}

fn validate(dataset: &[TrainingSample], spec: &NetworkSpec, params: &TrainParams) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::Data("empty training set".into()));
    }
    if dataset.len() < params.min_samples {
        return Err(Error::Data(format!(
            "{} samples is below the minimum of {}",
            dataset.len(),
            params.min_samples
        )));
    }
    for (i, s) in dataset.iter().enumerate() {
        if s.features.len() != spec.input_width {
            return Err(Error::Shape { expected: spec.input_width, got: s.features.len() });
        }
        if s.features.iter().any(|x| !x.is_finite()) || !s.label.is_finite() {
            return Err(Error::Data(format!("sample {i} has non-finite entries")));
        }
        if s.label < 0.0 {
            return Err(Error::Data(format!("sample {i} has negative label {}", s.label)));
        }
    }
    if params.epochs == 0 || params.batch_size == 0 {
        return Err(Error::input("epochs and batch size must be positive"));
    }
    if !(0.0..1.0).contains(&params.validation_fraction) || !(0.0..1.0).contains(&params.ema_decay) {
        return Err(Error::input("validation fraction and EMA decay must lie in [0, 1)"));
    }
    Ok(())
}

/// Minimize the mean-squared error with mini-batch Adam.
///
/// A seeded shuffle holds out `validation_fraction` of the data. The step
/// size decays geometrically from `learning_rate` to `final_learning_rate`,
/// and the returned weights are the exponential moving average of the Adam
/// iterates, which is also what the per-epoch losses are measured on.
pub fn train(dataset: &[TrainingSample], spec: &NetworkSpec, params: &TrainParams) -> Result<(NetworkModel, TrainingHistory)> {
    validate(dataset, spec, params)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut params.seed.split_label("split").rng());
    let n_val = if dataset.len() >= 2 { ((dataset.len() as f64 * params.validation_fraction).round() as usize).max(1) } else { 0 };
    let n_val = n_val.min(dataset.len() - 1);
    let (val_idx, train_idx) = order.split_at(n_val);
    let rows = |idx: &[usize]| -> Vec<&[f64]> { idx.iter().map(|&i| dataset[i].features.as_slice()).collect() };
    let labels = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| dataset[i].label).collect() };
    let (train_rows, train_labels) = (rows(train_idx), labels(train_idx));
    let (val_rows, val_labels) = (rows(val_idx), labels(val_idx));

    let mut model = init_network(spec, params.seed.split_label("init"));
    if params.standardize {
        model.standardization = Some(Standardization::fit(&train_rows));
    }
    let mut ema = model.clone();
    let mut adam = Adam::new(&model.layers);
    let mut history = TrainingHistory::default();
    let mut perm: Vec<usize> = (0..train_rows.len()).collect();
    let epochs = params.epochs;
    for epoch in 0..epochs {
        let frac = if epochs > 1 { epoch as f64 / (epochs - 1) as f64 } else { 0.0 };
        let lr = params.learning_rate * (params.final_learning_rate / params.learning_rate).powf(frac);
        perm.shuffle(&mut params.seed.split_label("shuffle").split(epoch as u64).rng());
        for chunk in perm.chunks(params.batch_size) {
            let batch_rows: Vec<&[f64]> = chunk.iter().map(|&i| train_rows[i]).collect();
            let batch_labels: Vec<f64> = chunk.iter().map(|&i| train_labels[i]).collect();
            let grads = backprop(&model, model.input_matrix(&batch_rows), &batch_labels);
            adam.update(&mut model.layers, &grads, lr);
            let beta = params.ema_decay;
            for (e, l) in ema.layers.iter_mut().zip(&model.layers) {
                e.weights.zip_apply(&l.weights, |a, b| *a = beta * *a + (1.0 - beta) * b);
                e.bias.zip_apply(&l.bias, |a, b| *a = beta * *a + (1.0 - beta) * b);
            }
        }
        history.train_loss.push(mse(&ema, &train_rows, &train_labels)?);
        history.validation_loss.push(mse(&ema, &val_rows, &val_labels)?);
        log::debug!("epoch {epoch}: train {:.6e} val {:.6e}", history.train_loss[epoch], history.validation_loss[epoch]);
    }
    ema.meta.seed = params.seed.0;
    ema.meta.epochs = epochs;
    ema.meta.final_train_loss = *history.train_loss.last().unwrap_or(&f64::NAN);
    ema.meta.final_validation_loss = *history.validation_loss.last().unwrap_or(&f64::NAN);
    Ok((ema, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlnet::Activation;
    use rand::Rng;

    fn sample(features: Vec<f64>, label: f64) -> TrainingSample {
        TrainingSample { features, label, provenance: Provenance { family: Family::Gps, n_sites: 4, bond_dim: 0, seed: 0 } }
    }

    fn small_params(seed: u64) -> TrainParams {
        TrainParams { epochs: 30, batch_size: 32, learning_rate: 3e-3, final_learning_rate: 3e-4, seed: Seed(seed), ..TrainParams::default() }
    }

    #[test]
    fn rejects_bad_datasets() {
        let spec = NetworkSpec::reference(3).unwrap();
        let p = TrainParams::default();
        assert!(matches!(train(&[], &spec, &p), Err(Error::Data(_))));
        let few: Vec<_> = (0..10).map(|_| sample(vec![1.0, 1.0, 0.5, 0.2], 0.1)).collect();
        assert!(matches!(train(&few, &spec, &p), Err(Error::Data(_))));
        let mut bad: Vec<_> = (0..1000).map(|_| sample(vec![1.0, 1.0, 0.5, 0.2], 0.1)).collect();
        bad[3].features[2] = f64::NAN;
        assert!(matches!(train(&bad, &spec, &p), Err(Error::Data(_))));
        let wide: Vec<_> = (0..1000).map(|_| sample(vec![1.0; 5], 0.1)).collect();
        assert!(matches!(train(&wide, &spec, &p), Err(Error::Shape { .. })));
    }

    #[test]
    fn constant_labels_are_learned() {
        let mut rng = Seed(1).rng();
        let data: Vec<_> = (0..1000)
            .map(|_| {
                let mu2 = rng.gen_range(0.05..1.0);
                sample(vec![rng.gen_range(1..5) as f64, rng.gen_range(1..5) as f64, mu2, mu2 * mu2], 0.7)
            })
            .collect();
        let spec = NetworkSpec::reference(3).unwrap();
        let (model, hist) = train(&data, &spec, &TrainParams { epochs: 80, ..small_params(2) }).unwrap();
        assert!(*hist.train_loss.last().unwrap() < 5e-4);
        for s in data.iter().take(50) {
            let y = model.forward(&s.features).unwrap();
            assert!((y - 0.7).abs() < 0.04, "{y}");
        }
    }

    #[test]
    fn smooth_target_loss_decreases_monotonically() {
        let mut rng = Seed(3).rng();
        let data: Vec<_> = (0..2000)
            .map(|_| {
                let (a, b, c) = (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
                sample(vec![a, b, c], 1.0 + a - 0.5 * b * c)
            })
            .collect();
        let spec = NetworkSpec::new(3, vec![(32, Activation::Relu), (16, Activation::Elu)]).unwrap();
        let (model, hist) = train(&data, &spec, &small_params(4)).unwrap();
        assert_eq!(hist.train_loss.len(), 30);
        assert!(hist.non_increasing_fraction() >= 0.95, "{:?}", hist.train_loss);
        assert!(*hist.train_loss.last().unwrap() < 1e-3, "{:?}", hist.train_loss);
        assert!(hist.validation_loss.last().unwrap().is_finite());
        assert_eq!(model.meta.epochs, 30);
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = Seed(5).rng();
        let data: Vec<_> = (0..1000).map(|_| {
            let x: f64 = rng.gen();
            sample(vec![x, 1.0 - x], x * x)
        }).collect();
        let spec = NetworkSpec::new(2, vec![(8, Activation::Relu)]).unwrap();
        let p = TrainParams { epochs: 3, seed: Seed(6), ..TrainParams::default() };
        assert_eq!(train(&data, &spec, &p).unwrap(), train(&data, &spec, &p).unwrap());
    }

    #[test]
    fn standardization_switch_is_stored() {
        let data: Vec<_> = (0..1000).map(|i| sample(vec![i as f64, 2.0], 0.5)).collect();
        let spec = NetworkSpec::new(2, vec![(4, Activation::Relu)]).unwrap();
        let p = TrainParams { epochs: 2, standardize: true, ..TrainParams::default() };
        let (model, _) = train(&data, &spec, &p).unwrap();
        let st = model.standardization.unwrap();
        assert!((st.mean[0] - 499.5).abs() < 30.0);
        assert_eq!(st.scale[1], 1.0);
    }
}
