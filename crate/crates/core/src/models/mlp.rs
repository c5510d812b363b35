//! Fully connected regressor trained by full-batch Adam on the mean absolute
//! error.

use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::adam::{Adam, AdamConfig};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Identity => z,
        }
    }

    fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu if z > T::zero() => T::one(),
            Activation::Relu => T::zero(),
            Activation::Identity => T::one(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub epochs: usize,
    pub adam: AdamConfig,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![500, 500],
            activation: Activation::Relu,
            epochs: 700,
            adam: AdamConfig::default(),
        }
    }
}

/// Dense layer `out = in · weights + bias`; `weights` is `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Layer<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct MlpModel<T> {
    pub config: MlpConfig,
    pub layers: Vec<Layer<T>>,
}

/// Gradient of the loss with respect to one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrad<T> {
    pub weights: Array2<T>,
    pub bias: Array1<T>,
}

/// Training and validation MAE recorded before each epoch's update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpochCurve {
    pub train_mae: Vec<f64>,
    pub val_mae: Vec<f64>,
}

impl EpochCurve {
    /// `epoch,train_mae,val_mae` with 1-based epochs; `val_mae` empty when no
    /// validation set was tracked.
    pub fn to_csv_string(&self) -> String {
        let mut s = String::from("epoch,train_mae,val_mae\n");
        for (i, t) in self.train_mae.iter().enumerate() {
            let v = self.val_mae.get(i).map(|v| v.to_string()).unwrap_or_default();
            s.push_str(&format!("{},{t},{v}\n", i + 1));
        }
        s
    }
}

impl<T: Scalar> MlpModel<T> {
    /// Layers `n_inputs → hidden… → n_outputs` with weights drawn uniformly
    /// from ±√(6/(fan_in + fan_out)) and zero biases.
    pub fn init(config: &MlpConfig, n_inputs: usize, n_outputs: usize, seed: u64) -> Self {
        let mut rng = seed::rng_for(seed, "mlp.init", 0);
        let sizes: Vec<usize> = std::iter::once(n_inputs)
            .chain(config.hidden.iter().copied())
            .chain(std::iter::once(n_outputs))
            .collect();
        let layers = sizes
            .windows(2)
            .map(|w| {
                let limit = (6.0 / (w[0] + w[1]) as f64).sqrt();
                Layer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        T::lit(rng.random_range(-limit..limit))
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Self {
            config: config.clone(),
            layers,
        }
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].weights.nrows())
            .chain(self.layers.iter().map(|l| l.weights.ncols()))
            .collect()
    }

    /// Pre-activations of every layer; the last entry is the network output.
    fn forward_trace(&self, x: ArrayView2<T>) -> Vec<Array2<T>> {
        let act = self.config.activation;
        let last = self.layers.len() - 1;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut input: Array2<T> = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = input.dot(&layer.weights) + &layer.bias;
            if i < last {
                input = z.mapv(|v| act.apply(v));
            }
            pre.push(z);
        }
        pre
    }

    pub fn predict(&self, x: ArrayView2<T>) -> Array2<T> {
        self.forward_trace(x).pop().expect("at least one layer")
    }

    /// Mean absolute error over all samples and outputs, and its gradient.
    /// The subgradient of |r| at r = 0 is taken as 0.
    pub fn loss_and_gradients(&self, x: ArrayView2<T>, y: ArrayView2<T>) -> (T, Vec<LayerGrad<T>>) {
        let act = self.config.activation;
        let pre = self.forward_trace(x);
        let out = pre.last().expect("at least one layer");
        let count = T::from_usize_lossy(out.len());
        let mut loss = T::zero();
        let mut delta = Array2::<T>::zeros(out.raw_dim());
        Zip::from(&mut delta).and(out).and(y).for_each(|d, &o, &t| {
            let r = o - t;
            loss += r.abs();
            *d = if r > T::zero() {
                T::one() / count
            } else if r < T::zero() {
                -T::one() / count
            } else {
                T::zero()
            };
        });
        loss /= count;

        let mut grads = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let input = if i == 0 {
                x.to_owned()
            } else {
                pre[i - 1].mapv(|v| act.apply(v))
            };
            grads.push(LayerGrad {
                weights: input.t().dot(&delta),
                bias: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut back = delta.dot(&self.layers[i].weights.t());
                Zip::from(&mut back)
                    .and(&pre[i - 1])
                    .for_each(|b, &z| *b *= act.derivative(z));
                delta = back;
            }
        }
        grads.reverse();
        (loss, grads)
    }

    fn all_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }
}

fn mae<T: Scalar>(a: &Array2<T>, b: ArrayView2<T>) -> T {
    let n = T::from_usize_lossy(a.len());
    a.iter().zip(b.iter()).map(|(&p, &q)| (p - q).abs()).sum::<T>() / n
}

/// Train from a fresh initialisation. When `validation` is given its MAE is
/// tracked per epoch alongside the training MAE.
pub fn fit_mlp<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView2<T>,
    config: &MlpConfig,
    seed: u64,
    validation: Option<(ArrayView2<T>, ArrayView2<T>)>,
) -> Result<(MlpModel<T>, EpochCurve)> {
    if x.nrows() == 0 || x.nrows() != y.nrows() {
        return Err(Error::validation("MLP needs matching, non-empty feature and target rows"));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::validation("MLP inputs must be finite"));
    }
    let model = MlpModel::init(config, x.ncols(), y.ncols(), seed);
    train_mlp(model, x, y, validation)
}

/// Continue training an initialised model for `model.config.epochs` epochs.
pub fn train_mlp<T: Scalar>(
    mut model: MlpModel<T>,
    x: ArrayView2<T>,
    y: ArrayView2<T>,
    validation: Option<(ArrayView2<T>, ArrayView2<T>)>,
) -> Result<(MlpModel<T>, EpochCurve)> {
    let sizes: Vec<usize> = model
        .layers
        .iter()
        .flat_map(|l| [l.weights.len(), l.bias.len()])
        .collect();
    let mut adam = Adam::new(model.config.adam, &sizes);
    let mut curve = EpochCurve::default();
    for epoch in 0..model.config.epochs {
        let (loss, grads) = model.loss_and_gradients(x, y);
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch: epoch + 1 });
        }
        curve.train_mae.push(loss.as_f64());
        if let Some((vx, vy)) = validation {
            curve.val_mae.push(mae(&model.predict(vx), vy).as_f64());
        }
        adam.begin_step();
        for (i, (layer, grad)) in model.layers.iter_mut().zip(&grads).enumerate() {
            adam.update(
                2 * i,
                layer.weights.as_slice_mut().expect("standard layout"),
                grad.weights.as_slice().expect("standard layout"),
            );
            adam.update(
                2 * i + 1,
                layer.bias.as_slice_mut().expect("standard layout"),
                grad.bias.as_slice().expect("standard layout"),
            );
        }
        if !model.all_finite() {
            return Err(Error::Divergence { epoch: epoch + 1 });
        }
    }
    Ok((model, curve))
}

pub fn predict_mlp<T: Scalar>(model: &MlpModel<T>, x: ArrayView2<T>) -> Array2<T> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;

    #[test]
    fn shapes_chain() {
        let m = MlpModel::<f64>::init(&MlpConfig::default(), 3, 3, 0);
        assert_eq!(m.layer_sizes(), vec![3, 500, 500, 3]);
        let limit = (6.0f64 / 503.0).sqrt();
        assert!(m.layers[0].weights.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn zero_output_layer_predicts_zero() {
        let cfg = MlpConfig {
            hidden: vec![8, 8],
            ..MlpConfig::default()
        };
        let mut m = MlpModel::<f64>::init(&cfg, 3, 3, 1);
        let last = m.layers.last_mut().unwrap();
        last.weights.fill(0.0);
        last.bias.fill(0.0);
        let x = array![[0.5, -1.0, 2.0], [1.0, 1.0, 1.0]];
        let y = array![[1.0, -2.0, 3.0], [4.0, 0.0, -6.0]];
        assert!(m.predict(x.view()).iter().all(|&v| v == 0.0));
        let (loss, _) = m.loss_and_gradients(x.view(), y.view());
        assert!((loss - y.mapv(f64::abs).mean().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let x = Array2::from_shape_fn((30, 3), |_| rng.random_range(-1.0..1.0));
        let y = x.mapv(|v: f64| 3.0 * v.powi(2));
        let cfg = MlpConfig {
            hidden: vec![16, 16],
            epochs: 200,
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            ..MlpConfig::default()
        };
        let (a, curve) = fit_mlp(x.view(), y.view(), &cfg, 4, Some((x.view(), y.view()))).unwrap();
        let (b, _) = fit_mlp(x.view(), y.view(), &cfg, 4, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(curve.train_mae.len(), 200);
        assert_eq!(curve.train_mae, curve.val_mae);
        assert!(curve.train_mae[199] < 0.5 * curve.train_mae[0]);
    }

    #[test]
    fn divergence_reports_epoch() {
        let cfg = MlpConfig {
            hidden: vec![4],
            epochs: 5,
            adam: AdamConfig {
                learning_rate: f64::INFINITY,
                ..AdamConfig::default()
            },
            ..MlpConfig::default()
        };
        let x = array![[1.0, 2.0, 3.0], [0.0, 1.0, 0.0]];
        let y = array![[1.0, 1.0, 1.0], [0.0, 2.0, 0.0]];
        assert!(matches!(
            fit_mlp(x.view(), y.view(), &cfg, 0, None),
            Err(Error::Divergence { epoch: 1 })
        ));
    }

    #[test]
    fn epoch_csv() {
        let c = EpochCurve {
            train_mae: vec![2.0, 1.5],
            val_mae: vec![3.0, 2.5],
        };
        assert_eq!(c.to_csv_string(), "epoch,train_mae,val_mae\n1,2,3\n2,1.5,2.5\n");
    }
}
