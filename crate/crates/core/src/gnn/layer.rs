//! Edge-feature layer with linear attention.
//!
//! Features live on the `N x J` antenna-user edges and are stored as an
//! `(J N) x M` matrix with row `j N + n`. One layer computes
//!
//! ```text
//! q = Q f, k = K f, u = U f
//! a_jk = sum_n q_nj * k_nk / N
//! f'_nj = act(S f_nj + alpha sum_{i != n} T f_ij + beta sum_{k != j} a_jk * u_nk)
//! ```

use nalgebra::DMatrix;

use super::model::EdgeLayer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFeatures {
    antennas: usize,
    users: usize,
    data: DMatrix<f64>,
}

impl EdgeFeatures {
    pub fn new(antennas: usize, users: usize, data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() != antennas * users {
            return Err(Error::DimensionMismatch {
                what: "edge feature rows",
                expected: antennas * users,
                actual: data.nrows(),
            });
        }
        Ok(Self { antennas, users, data })
    }

    pub fn zeros(antennas: usize, users: usize, dim: usize) -> Self {
        Self {
            antennas,
            users,
            data: DMatrix::zeros(antennas * users, dim),
        }
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.data
    }

    pub fn get(&self, antenna: usize, user: usize, feature: usize) -> f64 {
        self.data[(user * self.antennas + antenna, feature)]
    }

    pub fn set(&mut self, antenna: usize, user: usize, feature: usize, value: f64) {
        self.data[(user * self.antennas + antenna, feature)] = value;
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// `sum_{i != n} x_ij` for every edge. The map is self-adjoint.
fn other_antennas(x: &DMatrix<f64>, antennas: usize, users: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows(), x.ncols());
    for m in 0..x.ncols() {
        let col = x.column(m);
        for j in 0..users {
            let block = col.rows(j * antennas, antennas);
            let total: f64 = block.sum();
            for n in 0..antennas {
                out[(j * antennas + n, m)] = total - block[n];
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub(crate) struct LayerCache {
    input: DMatrix<f64>,
    others: DMatrix<f64>,
    qm: DMatrix<f64>,
    km: DMatrix<f64>,
    um: DMatrix<f64>,
    /// `a_jk` in row `j J + k` (zero for `k = j`).
    attention: DMatrix<f64>,
    pre: DMatrix<f64>,
}

impl EdgeLayer {
    pub fn forward(&self, input: &EdgeFeatures, alpha: f64, beta: f64) -> Result<EdgeFeatures> {
        Ok(self.forward_cached(input, alpha, beta)?.0)
    }

    pub(crate) fn forward_cached(
        &self,
        input: &EdgeFeatures,
        alpha: f64,
        beta: f64,
    ) -> Result<(EdgeFeatures, LayerCache)> {
        if input.dim() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "edge feature width",
                expected: self.input_dim(),
                actual: input.dim(),
            });
        }
        let (n, users) = (input.antennas, input.users);
        let f = &input.data;
        let others = other_antennas(f, n, users);
        let qm = f * self.q.transpose();
        let km = f * self.k.transpose();
        let um = f * self.u.transpose();
        let width = self.output_dim();
        let inv_n = 1.0 / n as f64;
        let mut attention = DMatrix::zeros(users * users, width);
        let mut pre = f * self.s.transpose();
        pre.gemm(alpha, &others, &self.t.transpose(), 1.0);
        for m in 0..width {
            let (qc, kc, uc) = (qm.column(m), km.column(m), um.column(m));
            for j in 0..users {
                for k in 0..users {
                    if k == j {
                        continue;
                    }
                    let mut acc = 0.0;
                    for a in 0..n {
                        acc += qc[j * n + a] * kc[k * n + a];
                    }
                    attention[(j * users + k, m)] = acc * inv_n;
                }
            }
            for j in 0..users {
                for k in 0..users {
                    if k == j {
                        continue;
                    }
                    let w = beta * attention[(j * users + k, m)];
                    for a in 0..n {
                        pre[(j * n + a, m)] += w * uc[k * n + a];
                    }
                }
            }
        }
        let out = pre.map(|x| self.activation.apply(x));
        let cache = LayerCache {
            input: f.clone(),
            others,
            qm,
            km,
            um,
            attention,
            pre,
        };
        Ok((EdgeFeatures::new(n, users, out)?, cache))
    }

    /// Backpropagates `d_out = dL/df'` through the layer, accumulating
    /// parameter gradients into `grad` and returning `dL/df`.
    pub(crate) fn backward(
        &self,
        cache: &LayerCache,
        antennas: usize,
        d_out: &DMatrix<f64>,
        alpha: f64,
        beta: f64,
        grad: &mut EdgeLayer,
    ) -> DMatrix<f64> {
        let n = antennas;
        let users = cache.input.nrows() / n;
        let inv_n = 1.0 / n as f64;
        let width = self.output_dim();
        let act = self.activation;
        let dpre = d_out.zip_map(&cache.pre, |d, p| d * act.derivative(p));
        let f = &cache.input;

        grad.s.gemm_tr(1.0, &dpre, f, 1.0);
        let mut df = &dpre * &self.s;

        grad.t.gemm_tr(alpha, &dpre, &cache.others, 1.0);
        let d_others = (&dpre * &self.t) * alpha;
        df += other_antennas(&d_others, n, users);

        if beta != 0.0 {
            let mut dqm = DMatrix::zeros(f.nrows(), width);
            let mut dkm = DMatrix::zeros(f.nrows(), width);
            let mut dum = DMatrix::zeros(f.nrows(), width);
            for m in 0..width {
                let datt = dpre.column(m);
                for j in 0..users {
                    for k in 0..users {
                        if k == j {
                            continue;
                        }
                        let a = cache.attention[(j * users + k, m)];
                        let mut da = 0.0;
                        for i in 0..n {
                            dum[(k * n + i, m)] += beta * datt[j * n + i] * a;
                            da += datt[j * n + i] * cache.um[(k * n + i, m)];
                        }
                        da *= beta * inv_n;
                        for i in 0..n {
                            dqm[(j * n + i, m)] += da * cache.km[(k * n + i, m)];
                            dkm[(k * n + i, m)] += da * cache.qm[(j * n + i, m)];
                        }
                    }
                }
            }
            grad.q.gemm_tr(1.0, &dqm, f, 1.0);
            grad.k.gemm_tr(1.0, &dkm, f, 1.0);
            grad.u.gemm_tr(1.0, &dum, f, 1.0);
            df.gemm(1.0, &dqm, &self.q, 1.0);
            df.gemm(1.0, &dkm, &self.k, 1.0);
            df.gemm(1.0, &dum, &self.u, 1.0);
        }
        df
    }
}
