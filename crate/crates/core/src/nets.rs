//! Mirrored fully-connected autoencoders.
//!
//! `input → e_1 → … → e_{L-1} → K → e_{L-1} → … → e_1 → input`, sigmoid on
//! every layer except the linear bottleneck. Training minimises the mean
//! squared reconstruction error with SGD and momentum.

use ndarray::{Array1, Array2, Axis, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::DataMatrix;

pub const DEFAULT_LEARNING_RATE: f64 = 0.1;
pub const DEFAULT_MOMENTUM: f64 = 0.5;
pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Linear,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        if self == Activation::Sigmoid {
            z.mapv_inplace(|v| 1.0 / (1.0 + (-v).exp()));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub input_dim: usize,
    pub encoder_widths: Vec<usize>,
    pub bottleneck: usize,
}

impl Architecture {
    /// 784 → 1000 → 500 → 250 → K, mirrored.
    pub fn mnist(bottleneck: usize) -> Self {
        Self {
            input_dim: 784,
            encoder_widths: vec![1000, 500, 250],
            bottleneck,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.bottleneck == 0 || self.encoder_widths.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "layer widths must be positive: {self:?}"
            )));
        }
        Ok(())
    }

    /// Layers per side, `L`.
    pub fn depth(&self) -> usize {
        self.encoder_widths.len() + 1
    }

    pub fn decoder_widths(&self) -> Vec<usize> {
        self.encoder_widths.iter().rev().copied().collect()
    }

    /// Widths of every layer output, input excluded, reconstruction included.
    pub fn layer_widths(&self) -> Vec<usize> {
        let mut widths = self.encoder_widths.clone();
        widths.push(self.bottleneck);
        widths.extend(self.decoder_widths());
        widths.push(self.input_dim);
        widths
    }

    /// Identifiers of the hidden layers: `E1 … E{L-1}`, `Z`, `D1 … D{L-1}`.
    /// Decoder layers are numbered from the bottleneck outwards.
    pub fn hidden_layer_ids(&self) -> Vec<String> {
        let l = self.encoder_widths.len();
        let mut ids: Vec<String> = (1..=l).map(|i| format!("E{i}")).collect();
        ids.push("Z".into());
        ids.extend((1..=l).map(|i| format!("D{i}")));
        ids
    }

    fn activations(&self) -> Vec<Activation> {
        let l = self.encoder_widths.len();
        let mut acts = vec![Activation::Sigmoid; 2 * l + 2];
        acts[l] = Activation::Linear;
        acts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    weights: Array2<f64>,
    bias: Array1<f64>,
    activation: Activation,
    weight_velocity: Option<Array2<f64>>,
    bias_velocity: Option<Array1<f64>>,
}

impl Dense {
    /// `fan_in × fan_out`.
    pub fn weights(&self) -> &Array2<f64> {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Array2<f64> {
        &mut self.weights
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut Array1<f64> {
        &mut self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward(&self, input: &Array2<f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights);
        z += &self.bias;
        self.activation.apply(&mut z);
        z
    }
}

/// Gradient of the loss with respect to one layer's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Outputs of every layer for one batch. `hidden` holds
/// `T_1^E … T_{L-1}^E, Z, T_1^D … T_{L-1}^D` (`2L − 1` entries).
#[derive(Debug, Clone)]
pub struct LayerActivations {
    pub hidden: Vec<DataMatrix>,
    pub output: DataMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    arch: Architecture,
    layers: Vec<Dense>,
    seed: u64,
}

/// Uniform fan-based initialization in `±√(6/(fan_in + fan_out))`, zero
/// biases, zero momentum.
pub fn init_autoencoder(arch: &Architecture, seed: u64) -> Result<Autoencoder> {
    arch.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fan_in = arch.input_dim;
    let mut layers = Vec::new();
    for (width, activation) in arch.layer_widths().into_iter().zip(arch.activations()) {
        let limit = (6.0 / (fan_in + width) as f64).sqrt();
        let weights = Array2::from_shape_fn((fan_in, width), |_| rng.random_range(-limit..=limit));
        layers.push(Dense {
            weights,
            bias: Array1::zeros(width),
            activation,
            weight_velocity: None,
            bias_velocity: None,
        });
        fan_in = width;
    }
    Ok(Autoencoder {
        arch: arch.clone(),
        layers,
        seed,
    })
}

impl Autoencoder {
    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, x: &DataMatrix) -> Result<()> {
        if x.cols() != self.arch.input_dim {
            return Err(Error::DimensionMismatch(format!(
                "network expects {} inputs, batch has {}",
                self.arch.input_dim,
                x.cols()
            )));
        }
        Ok(())
    }

    fn forward_arrays(&self, x: &Array2<f64>) -> Vec<Array2<f64>> {
        let mut outputs: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let next = layer.forward(outputs.last().unwrap_or(x));
            outputs.push(next);
        }
        outputs
    }

    pub fn forward(&self, x: &DataMatrix) -> Result<LayerActivations> {
        self.check_input(x)?;
        let mut outputs = self
            .forward_arrays(x.as_array())
            .into_iter()
            .map(DataMatrix::from_array)
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::Divergence("non-finite activations".into()))?;
        let output = outputs.pop().expect("at least one layer");
        Ok(LayerActivations {
            hidden: outputs,
            output,
        })
    }

    /// Reconstruction only.
    pub fn reconstruct(&self, x: &DataMatrix) -> Result<DataMatrix> {
        Ok(self.forward(x)?.output)
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn gradients(&self, x: &DataMatrix) -> Result<(f64, Vec<LayerGradient>)> {
        self.check_input(x)?;
        let input = x.as_array();
        let outputs = self.forward_arrays(input);
        let reconstruction = outputs.last().expect("at least one layer");
        let count = reconstruction.len() as f64;
        let residual = reconstruction - input;
        let loss = residual.iter().map(|r| r * r).sum::<f64>() / count;

        let mut grads = Vec::with_capacity(self.layers.len());
        let mut upstream = residual * (2.0 / count);
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            let out = &outputs[idx];
            if layer.activation == Activation::Sigmoid {
                Zip::from(&mut upstream)
                    .and(out)
                    .for_each(|g, &a| *g *= a * (1.0 - a));
            }
            let prev = if idx == 0 { input } else { &outputs[idx - 1] };
            let weights = prev.t().dot(&upstream);
            let bias = upstream.sum_axis(Axis(0));
            if idx > 0 {
                upstream = upstream.dot(&layer.weights.t());
            }
            grads.push(LayerGradient { weights, bias });
        }
        grads.reverse();
        Ok((loss, grads))
    }

    /// One SGD step with momentum: `v ← μ·v + g`, `θ ← θ − η·v`. Returns
    /// the loss before the update.
    pub fn sgd_momentum_step(&mut self, x: &DataMatrix, lr: f64, momentum: f64) -> Result<f64> {
        if x.rows() == 0 {
            return Err(Error::InvalidParameter("empty batch".into()));
        }
        let (loss, grads) = self.gradients(x)?;
        let finite = loss.is_finite()
            && grads
                .iter()
                .all(|g| g.weights.iter().chain(g.bias.iter()).all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        for (layer, grad) in self.layers.iter_mut().zip(grads) {
            let vw = layer
                .weight_velocity
                .get_or_insert_with(|| Array2::zeros(layer.weights.raw_dim()));
            Zip::from(&mut *vw)
                .and(&grad.weights)
                .for_each(|v, &g| *v = momentum * *v + g);
            layer.weights.scaled_add(-lr, vw);

            let vb = layer
                .bias_velocity
                .get_or_insert_with(|| Array1::zeros(layer.bias.raw_dim()));
            Zip::from(&mut *vb)
                .and(&grad.bias)
                .for_each(|v, &g| *v = momentum * *v + g);
            layer.bias.scaled_add(-lr, vb);
        }
        Ok(loss)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT_VERSION,
            architecture: self.arch.clone(),
            seed: self.seed,
            layers: self
                .layers
                .iter()
                .map(|l| CheckpointLayer {
                    fan_in: l.weights.nrows(),
                    fan_out: l.weights.ncols(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                    weight_velocity: l
                        .weight_velocity
                        .as_ref()
                        .map(|v| v.iter().copied().collect()),
                    bias_velocity: l.bias_velocity.as_ref().map(|v| v.to_vec()),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: Checkpoint) -> Result<Self> {
        if ckpt.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {}",
                ckpt.format_version
            )));
        }
        ckpt.architecture.validate()?;
        let widths = ckpt.architecture.layer_widths();
        let acts = ckpt.architecture.activations();
        if ckpt.layers.len() != widths.len() {
            return Err(Error::Checkpoint(format!(
                "{} layers stored, architecture has {}",
                ckpt.layers.len(),
                widths.len()
            )));
        }
        let mut fan_in = ckpt.architecture.input_dim;
        let mut layers = Vec::with_capacity(widths.len());
        for ((stored, width), act) in ckpt.layers.into_iter().zip(widths).zip(acts) {
            if stored.fan_in != fan_in || stored.fan_out != width || stored.activation != act {
                return Err(Error::Checkpoint(format!(
                    "layer {fan_in}x{width} does not match stored {}x{}",
                    stored.fan_in, stored.fan_out
                )));
            }
            let shape = (fan_in, width);
            let matrix = |values: Vec<f64>| {
                Array2::from_shape_vec(shape, values).map_err(|e| Error::Checkpoint(e.to_string()))
            };
            let vector = |values: Vec<f64>| {
                if values.len() == width {
                    Ok(Array1::from(values))
                } else {
                    Err(Error::Checkpoint("bias length mismatch".into()))
                }
            };
            layers.push(Dense {
                weights: matrix(stored.weights)?,
                bias: vector(stored.bias)?,
                activation: act,
                weight_velocity: stored.weight_velocity.map(matrix).transpose()?,
                bias_velocity: stored.bias_velocity.map(vector).transpose()?,
            });
            fan_in = width;
        }
        Ok(Self {
            arch: ckpt.architecture,
            layers,
            seed: ckpt.seed,
        })
    }

    pub fn save_json(&self, path: &std::path::Path) -> Result<()> {
        let file = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(file, &self.to_checkpoint())?;
        Ok(())
    }

    pub fn load_json(path: &std::path::Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::from_checkpoint(serde_json::from_reader(file)?)
    }
}

/// Versioned JSON parameter dump. Weights are row-major `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub architecture: Architecture,
    pub seed: u64,
    pub layers: Vec<CheckpointLayer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointLayer {
    pub fan_in: usize,
    pub fan_out: usize,
    pub activation: Activation,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_velocity: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_velocity: Option<Vec<f64>>,
}

/// Mean over all `N·d` entries of the squared error.
pub fn mse_loss(reconstruction: &DataMatrix, target: &DataMatrix) -> Result<f64> {
    if reconstruction.rows() != target.rows() || reconstruction.cols() != target.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            reconstruction.rows(),
            reconstruction.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let sum: f64 = reconstruction
        .as_slice()
        .iter()
        .zip(target.as_slice())
        .map(|(p, q)| (p - q) * (p - q))
        .sum();
    Ok(sum / reconstruction.as_slice().len() as f64)
}
