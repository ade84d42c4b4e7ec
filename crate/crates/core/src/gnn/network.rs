use nalgebra::DMatrix;
use rayon::prelude::*;

use super::layer::{EdgeFeatures, LayerCache};
use super::model::GnnModel;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, C64};
use crate::rate::{sum_rate_with_gradient, PrecoderMatrix};

fn check_rows(model: &GnnModel, rows: &[CVector]) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("at least one user is required"));
    }
    for c in rows {
        if c.len() != model.antennas() {
            return Err(Error::DimensionMismatch {
                what: "statistics vector length",
                expected: model.antennas(),
                actual: c.len(),
            });
        }
    }
    Ok(())
}

fn prelu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

struct ExtractorCache {
    /// `2N x J` stacked `[Re c_j; Im c_j]`.
    x: DMatrix<f64>,
    /// `W x + b`.
    z: DMatrix<f64>,
}

fn extract_all(model: &GnnModel, rows: &[CVector]) -> Result<(EdgeFeatures, ExtractorCache)> {
    check_rows(model, rows)?;
    let n = model.antennas();
    let users = rows.len();
    let x = DMatrix::from_fn(2 * n, users, |r, j| {
        if r < n {
            rows[j][r].re
        } else {
            rows[j][r - n].im
        }
    });
    let ext = &model.extractor;
    let mut z = &ext.weight * &x;
    for mut col in z.column_iter_mut() {
        col += &ext.bias;
    }
    let mut features = EdgeFeatures::zeros(n, users, 2);
    for j in 0..users {
        for a in 0..n {
            features.set(a, j, 0, prelu(z[(2 * a, j)], ext.slope));
            features.set(a, j, 1, prelu(z[(2 * a + 1, j)], ext.slope));
        }
    }
    if !features.is_finite() {
        return Err(Error::NonFinite {
            stage: "feature extractor",
            layer: 0,
        });
    }
    Ok((features, ExtractorCache { x, z }))
}

/// Initial `N x 2` edge features of one user: row `n` holds output entries
/// `2n` and `2n + 1` of `PReLU(W [Re c; Im c] + b)`.
pub fn extract_features(model: &GnnModel, c: &CVector) -> Result<DMatrix<f64>> {
    let (f, _) = extract_all(model, std::slice::from_ref(c))?;
    Ok(f.into_data())
}

struct ForwardPass {
    extractor: ExtractorCache,
    layers: Vec<LayerCache>,
    /// Unnormalized `V'`.
    raw: CMatrix,
}

fn run_forward(model: &GnnModel, rows: &[CVector]) -> Result<ForwardPass> {
    let (mut f, extractor) = extract_all(model, rows)?;
    let mut layers = Vec::with_capacity(model.layers.len());
    for (l, layer) in model.layers.iter().enumerate() {
        let (next, cache) = layer.forward_cached(&f, model.alpha(), model.beta())?;
        if !next.is_finite() {
            return Err(Error::NonFinite {
                stage: "edge layer forward",
                layer: l + 1,
            });
        }
        layers.push(cache);
        f = next;
    }
    let n = model.antennas();
    let raw = CMatrix::from_fn(n, rows.len(), |a, j| C64::new(f.get(a, j, 0), f.get(a, j, 1)));
    Ok(ForwardPass {
        extractor,
        layers,
        raw,
    })
}

fn normalize(raw: &CMatrix, power: f64) -> Result<(CMatrix, f64)> {
    let norm = raw.norm();
    if norm == 0.0 {
        return Err(Error::DegeneratePrecoder);
    }
    Ok((raw.unscale(norm).scale(power.sqrt()), norm))
}

/// Precoders `V = sqrt(rho) V' / |V'|_F` from per-user statistics.
pub fn forward(model: &GnnModel, rows: &[CVector], power: f64) -> Result<PrecoderMatrix> {
    if !(power > 0.0) {
        return Err(Error::invalid(format!("transmit power must be positive, got {power}")));
    }
    let pass = run_forward(model, rows)?;
    let (v, _) = normalize(&pass.raw, power)?;
    Ok(PrecoderMatrix { v, power })
}

/// One scenario presented to the network.
#[derive(Debug, Clone, Copy)]
pub struct TrainingSample<'a> {
    pub first_rows: &'a [CVector],
    pub channels: &'a [CVector],
    pub noise_variance: f64,
}

/// Sum-rate of one sample and the gradient of `-R` with respect to every
/// parameter (same layout as the model).
pub fn scenario_gradient(
    model: &GnnModel,
    sample: &TrainingSample<'_>,
    power: f64,
) -> Result<(f64, GnnModel)> {
    if sample.channels.len() != sample.first_rows.len() {
        return Err(Error::DimensionMismatch {
            what: "channel count",
            expected: sample.first_rows.len(),
            actual: sample.channels.len(),
        });
    }
    let pass = run_forward(model, sample.first_rows)?;
    let (v, norm) = normalize(&pass.raw, power)?;
    let (rate, g) = sum_rate_with_gradient(sample.channels, &v, sample.noise_variance);
    if !rate.is_finite() {
        return Err(Error::NonFinite {
            stage: "sum-rate",
            layer: model.layers.len(),
        });
    }
    // loss = -R; back through V = s V' / |V'|
    let scale = power.sqrt() / norm;
    let unit = pass.raw.unscale(norm);
    let gl = -g;
    let radial: f64 = unit.iter().zip(gl.iter()).map(|(x, d)| (x.conj() * d).re).sum();
    let d_raw = (gl - unit * C64::new(radial, 0.0)) * C64::new(scale, 0.0);

    let n = model.antennas();
    let users = sample.first_rows.len();
    let mut d = DMatrix::from_fn(n * users, 2, |r, c| {
        let z = d_raw[(r % n, r / n)];
        if c == 0 {
            z.re
        } else {
            z.im
        }
    });
    let mut grad = model.zeros_like();
    for (l, (layer, cache)) in model.layers.iter().zip(&pass.layers).enumerate().rev() {
        d = layer.backward(cache, n, &d, model.alpha(), model.beta(), &mut grad.layers[l]);
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                stage: "edge layer backward",
                layer: l + 1,
            });
        }
    }
    // feature extractor
    let ext = &model.extractor;
    let z = &pass.extractor.z;
    let mut dz = DMatrix::zeros(2 * n, users);
    let mut d_slope = 0.0;
    for j in 0..users {
        for a in 0..n {
            for c in 0..2 {
                let r = 2 * a + c;
                let up = d[(j * n + a, c)];
                let zv = z[(r, j)];
                if zv > 0.0 {
                    dz[(r, j)] = up;
                } else {
                    dz[(r, j)] = up * ext.slope;
                    d_slope += up * zv;
                }
            }
        }
    }
    grad.extractor.weight.gemm(1.0, &dz, &pass.extractor.x.transpose(), 0.0);
    grad.extractor.bias = dz.column_sum();
    grad.extractor.slope = d_slope;
    if grad.extractor.weight.iter().any(|x| !x.is_finite()) || !d_slope.is_finite() {
        return Err(Error::NonFinite {
            stage: "feature extractor backward",
            layer: 0,
        });
    }
    Ok((rate, grad))
}

#[derive(Debug, Clone)]
pub struct BatchGradient {
    /// Mean sum-rate over the batch.
    pub mean_rate: f64,
    /// Gradient of the mean negative sum-rate.
    pub gradient: Vec<f64>,
}

/// Batch-mean gradient; samples are evaluated in parallel and reduced in
/// index order so the result does not depend on the thread count.
pub fn batch_gradient(
    model: &GnnModel,
    batch: &[TrainingSample<'_>],
    power: f64,
) -> Result<BatchGradient> {
    if batch.is_empty() {
        return Err(Error::invalid("gradient batch must be nonempty"));
    }
    let parts: Vec<(f64, Vec<f64>)> = batch
        .par_iter()
        .map(|s| scenario_gradient(model, s, power).map(|(r, g)| (r, g.parameters())))
        .collect::<Result<_>>()?;
    let scale = 1.0 / batch.len() as f64;
    let mut gradient = vec![0.0; model.parameter_count()];
    let mut total = 0.0;
    for (rate, g) in &parts {
        total += rate;
        for (acc, x) in gradient.iter_mut().zip(g) {
            *acc += x;
        }
    }
    gradient.iter_mut().for_each(|x| *x *= scale);
    Ok(BatchGradient {
        mean_rate: total * scale,
        gradient,
    })
}
