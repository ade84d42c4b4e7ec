use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Shared `2N -> 2N` affine map followed by a scalar-slope PReLU.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExtractor {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub slope: f64,
}

/// One edge-update layer; every matrix is `M_out x M_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeLayer {
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub k: DMatrix<f64>,
    pub u: DMatrix<f64>,
    pub activation: Activation,
}

impl EdgeLayer {
    pub fn zeros(output: usize, input: usize, activation: Activation) -> Self {
        let z = DMatrix::zeros(output, input);
        Self {
            s: z.clone(),
            t: z.clone(),
            q: z.clone(),
            k: z.clone(),
            u: z,
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.s.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.s.nrows()
    }

    pub(crate) fn matrices(&self) -> [&DMatrix<f64>; 5] {
        [&self.s, &self.t, &self.q, &self.k, &self.u]
    }

    pub(crate) fn matrices_mut(&mut self) -> [&mut DMatrix<f64>; 5] {
        [&mut self.s, &mut self.t, &mut self.q, &mut self.k, &mut self.u]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnnConfig {
    pub antennas: usize,
    /// Hidden widths `M_1 .. M_{L-1}`.
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    /// Defaults to `0.1 / N`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_slope")]
    pub prelu_slope: f64,
}

fn default_hidden() -> Vec<usize> {
    vec![128; 5]
}
fn default_beta() -> f64 {
    0.1
}
fn default_slope() -> f64 {
    0.25
}

impl GnnConfig {
    pub fn new(antennas: usize, hidden: Vec<usize>) -> Self {
        Self {
            antennas,
            hidden,
            alpha: None,
            beta: default_beta(),
            prelu_slope: default_slope(),
        }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.1 / self.antennas as f64)
    }
}

/// Feature extractor plus `L` edge layers with `M_0 = M_L = 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct GnnModel {
    antennas: usize,
    alpha: f64,
    beta: f64,
    pub extractor: FeatureExtractor,
    pub layers: Vec<EdgeLayer>,
}

fn glorot<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> DMatrix<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    // fill row-major so the draw order matches the documented tensor order
    let values: Vec<f64> = (0..rows * cols).map(|_| rng.random_range(-limit..limit)).collect();
    DMatrix::from_row_slice(rows, cols, &values)
}

impl GnnModel {
    /// Glorot-uniform weights, zero extractor bias, PReLU slope from config.
    pub fn new<R: Rng + ?Sized>(config: &GnnConfig, rng: &mut R) -> Result<Self> {
        let n = config.antennas;
        if n == 0 {
            return Err(Error::invalid("GNN needs at least one antenna"));
        }
        if config.hidden.contains(&0) {
            return Err(Error::invalid("hidden widths must be positive"));
        }
        let extractor = FeatureExtractor {
            weight: glorot(2 * n, 2 * n, rng),
            bias: DVector::zeros(2 * n),
            slope: config.prelu_slope,
        };
        let mut dims = vec![2];
        dims.extend(&config.hidden);
        dims.push(2);
        let last = dims.len() - 2;
        let layers = dims
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let act = if l == last { Activation::Identity } else { Activation::Relu };
                let mut layer = EdgeLayer::zeros(w[1], w[0], act);
                for m in layer.matrices_mut() {
                    *m = glorot(w[1], w[0], rng);
                }
                layer
            })
            .collect();
        Self::from_parts(n, config.alpha(), config.beta, extractor, layers)
    }

    pub fn from_parts(
        antennas: usize,
        alpha: f64,
        beta: f64,
        extractor: FeatureExtractor,
        layers: Vec<EdgeLayer>,
    ) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite() && beta >= 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("alpha and beta must be finite and >= 0, got {alpha}, {beta}")));
        }
        let two_n = 2 * antennas;
        if extractor.weight.shape() != (two_n, two_n) || extractor.bias.len() != two_n {
            return Err(Error::DimensionMismatch {
                what: "feature extractor size",
                expected: two_n,
                actual: extractor.bias.len(),
            });
        }
        if layers.is_empty() {
            return Err(Error::invalid("GNN needs at least one layer"));
        }
        let mut prev = 2;
        for layer in &layers {
            let shape = layer.s.shape();
            if layer.matrices().iter().any(|m| m.shape() != shape) {
                return Err(Error::invalid("S, T, Q, K, U of a layer must share one shape"));
            }
            if layer.input_dim() != prev {
                return Err(Error::DimensionMismatch {
                    what: "layer input width",
                    expected: prev,
                    actual: layer.input_dim(),
                });
            }
            prev = layer.output_dim();
        }
        if prev != 2 {
            return Err(Error::DimensionMismatch {
                what: "output layer width",
                expected: 2,
                actual: prev,
            });
        }
        let model = Self {
            antennas,
            alpha,
            beta,
            extractor,
            layers,
        };
        if model.parameters().iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("model parameters must be finite"));
        }
        Ok(model)
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn set_beta(&mut self, beta: f64) {
        self.beta = beta;
    }

    /// `[M_0, M_1, ..., M_L]`.
    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![2];
        dims.extend(self.layers.iter().map(EdgeLayer::output_dim));
        dims
    }

    /// Same shapes and hyperparameters, all parameters zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.extractor.weight.fill(0.0);
        z.extractor.bias.fill(0.0);
        z.extractor.slope = 0.0;
        for layer in &mut z.layers {
            for m in layer.matrices_mut() {
                m.fill(0.0);
            }
        }
        z
    }

    pub fn parameter_count(&self) -> usize {
        let n2 = 2 * self.antennas;
        n2 * n2 + n2 + 1 + self.layers.iter().map(|l| 5 * l.s.len()).sum::<usize>()
    }

    /// Flat parameters: extractor weight (row-major), bias, slope, then per
    /// layer S, T, Q, K, U (each row-major).
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        push_row_major(&mut out, &self.extractor.weight);
        out.extend(self.extractor.bias.iter());
        out.push(self.extractor.slope);
        for layer in &self.layers {
            for m in layer.matrices() {
                push_row_major(&mut out, m);
            }
        }
        out
    }

    /// Inverse of [`GnnModel::parameters`].
    pub fn set_parameters(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                what: "parameter vector length",
                expected: self.parameter_count(),
                actual: values.len(),
            });
        }
        let mut rest = values;
        take_row_major(&mut rest, &mut self.extractor.weight);
        let n2 = self.extractor.bias.len();
        self.extractor.bias.copy_from_slice(&rest[..n2]);
        self.extractor.slope = rest[n2];
        rest = &rest[n2 + 1..];
        for layer in &mut self.layers {
            for m in layer.matrices_mut() {
                take_row_major(&mut rest, m);
            }
        }
        Ok(())
    }
}

fn push_row_major(out: &mut Vec<f64>, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        out.extend(m.row(r).iter());
    }
}

fn take_row_major(rest: &mut &[f64], m: &mut DMatrix<f64>) {
    let (rows, cols) = m.shape();
    let (head, tail) = rest.split_at(rows * cols);
    *m = DMatrix::from_row_slice(rows, cols, head);
    *rest = tail;
}
