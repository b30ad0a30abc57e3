//! Layer primitives with explicit forward caches and hand-derived backward
//! passes. Everything runs in f64 so finite-difference gradient checks are
//! meaningful.

use ndarray::{s, Array1, Array2, Array3, Array4, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng, bound: f64) -> f64 {
    rng.random_range(-bound..bound)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

// ---------------------------------------------------------------------------
// Linear

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    /// `[out, in]`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

pub struct LinearCache {
    x: Array2<f64>,
}

impl Linear {
    pub fn init(rng: &mut ChaCha8Rng, out_dim: usize, in_dim: usize) -> Self {
        let bound = 1.0 / (in_dim as f64).sqrt();
        Self {
            w: Array2::from_shape_fn((out_dim, in_dim), |_| uniform(rng, bound)),
            b: Array1::zeros(out_dim),
        }
    }

    pub fn zeros(out_dim: usize, in_dim: usize) -> Self {
        Self {
            w: Array2::zeros((out_dim, in_dim)),
            b: Array1::zeros(out_dim),
        }
    }

    /// `y = x w^T + b`, `x: [T, in]`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LinearCache) {
        let y = x.dot(&self.w.t()) + &self.b;
        (y, LinearCache { x: x.clone() })
    }

    pub fn backward(
        &self,
        cache: &LinearCache,
        gy: &Array2<f64>,
        grad: &mut Linear,
    ) -> Array2<f64> {
        grad.w += &gy.t().dot(&cache.x);
        grad.b += &gy.sum_axis(Axis(0));
        gy.dot(&self.w)
    }
}

// ---------------------------------------------------------------------------
// Layer normalization (per row, over the feature dimension)

pub const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
}

pub struct LayerNormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

impl LayerNorm {
    pub fn init(dim: usize) -> Self {
        Self {
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            gamma: Array1::zeros(dim),
            beta: Array1::zeros(dim),
        }
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LayerNormCache) {
        let (t_len, d) = x.dim();
        let mut xhat = Array2::zeros((t_len, d));
        let mut inv_std = Array1::zeros(t_len);
        let mut y = Array2::zeros((t_len, d));
        for t in 0..t_len {
            let row = x.row(t);
            let mean = row.sum() / d as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d as f64;
            let istd = 1.0 / (var + LN_EPS).sqrt();
            inv_std[t] = istd;
            for k in 0..d {
                let xh = (row[k] - mean) * istd;
                xhat[(t, k)] = xh;
                y[(t, k)] = self.gamma[k] * xh + self.beta[k];
            }
        }
        (y, LayerNormCache { xhat, inv_std })
    }

    pub fn backward(
        &self,
        cache: &LayerNormCache,
        gy: &Array2<f64>,
        grad: &mut LayerNorm,
    ) -> Array2<f64> {
        let (t_len, d) = gy.dim();
        let mut gx = Array2::zeros((t_len, d));
        for t in 0..t_len {
            let mut mean_dxhat = 0.0;
            let mut mean_dxhat_xhat = 0.0;
            for k in 0..d {
                let dxhat = gy[(t, k)] * self.gamma[k];
                mean_dxhat += dxhat;
                mean_dxhat_xhat += dxhat * cache.xhat[(t, k)];
                grad.gamma[k] += gy[(t, k)] * cache.xhat[(t, k)];
                grad.beta[k] += gy[(t, k)];
            }
            mean_dxhat /= d as f64;
            mean_dxhat_xhat /= d as f64;
            for k in 0..d {
                let dxhat = gy[(t, k)] * self.gamma[k];
                gx[(t, k)] = cache.inv_std[t]
                    * (dxhat - mean_dxhat - cache.xhat[(t, k)] * mean_dxhat_xhat);
            }
        }
        gx
    }
}

// ---------------------------------------------------------------------------
// Leaky ReLU

pub struct LeakyReluCache {
    x: Array2<f64>,
}

pub fn leaky_relu(x: &Array2<f64>, slope: f64) -> (Array2<f64>, LeakyReluCache) {
    let y = x.mapv(|v| if v > 0.0 { v } else { slope * v });
    (y, LeakyReluCache { x: x.clone() })
}

impl LeakyReluCache {
    /// Sign pattern of the pre-activations; two evaluations with different
    /// patterns straddle a kink of the piecewise-linear activation.
    pub fn signs(&self) -> impl Iterator<Item = bool> + '_ {
        self.x.iter().map(|&v| v > 0.0)
    }
}

pub fn leaky_relu_backward(cache: &LeakyReluCache, gy: &Array2<f64>, slope: f64) -> Array2<f64> {
    let mut gx = gy.clone();
    gx.zip_mut_with(&cache.x, |g, &x| {
        if x <= 0.0 {
            *g *= slope;
        }
    });
    gx
}

// ---------------------------------------------------------------------------
// LSTM (unidirectional, zero initial state), gate order i, f, g, o

#[derive(Debug, Clone, PartialEq)]
pub struct Lstm {
    /// `[4h, in]`
    pub w_ih: Array2<f64>,
    /// `[4h, h]`
    pub w_hh: Array2<f64>,
    pub b: Array1<f64>,
}

pub struct LstmCache {
    x: Array2<f64>,
    gates: Array2<f64>, // [T, 4h] post-activation (i, f, g, o)
    c: Array2<f64>,
    tanh_c: Array2<f64>,
    h: Array2<f64>,
}

impl Lstm {
    pub fn init(rng: &mut ChaCha8Rng, hidden: usize, in_dim: usize) -> Self {
        let b_ih = 1.0 / (in_dim as f64).sqrt();
        let b_hh = 1.0 / (hidden as f64).sqrt();
        Self {
            w_ih: Array2::from_shape_fn((4 * hidden, in_dim), |_| uniform(rng, b_ih)),
            w_hh: Array2::from_shape_fn((4 * hidden, hidden), |_| uniform(rng, b_hh)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn zeros(hidden: usize, in_dim: usize) -> Self {
        Self {
            w_ih: Array2::zeros((4 * hidden, in_dim)),
            w_hh: Array2::zeros((4 * hidden, hidden)),
            b: Array1::zeros(4 * hidden),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.ncols()
    }

    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, LstmCache) {
        let t_len = x.nrows();
        let h_dim = self.hidden();
        let mut gates = Array2::zeros((t_len, 4 * h_dim));
        let mut c = Array2::zeros((t_len, h_dim));
        let mut tanh_c = Array2::zeros((t_len, h_dim));
        let mut h = Array2::zeros((t_len, h_dim));

        let mut h_prev = Array1::zeros(h_dim);
        let mut c_prev = Array1::<f64>::zeros(h_dim);
        for t in 0..t_len {
            let z = self.w_ih.dot(&x.row(t)) + self.w_hh.dot(&h_prev) + &self.b;
            for j in 0..h_dim {
                let i = sigmoid(z[j]);
                let f = sigmoid(z[h_dim + j]);
                let g = z[2 * h_dim + j].tanh();
                let o = sigmoid(z[3 * h_dim + j]);
                gates[(t, j)] = i;
                gates[(t, h_dim + j)] = f;
                gates[(t, 2 * h_dim + j)] = g;
                gates[(t, 3 * h_dim + j)] = o;
                let cj = f * c_prev[j] + i * g;
                c[(t, j)] = cj;
                let tc = cj.tanh();
                tanh_c[(t, j)] = tc;
                h[(t, j)] = o * tc;
            }
            h_prev = h.row(t).to_owned();
            c_prev = c.row(t).to_owned();
        }
        (
            h.clone(),
            LstmCache {
                x: x.clone(),
                gates,
                c,
                tanh_c,
                h,
            },
        )
    }

    pub fn backward(&self, cache: &LstmCache, gh: &Array2<f64>, grad: &mut Lstm) -> Array2<f64> {
        let t_len = cache.x.nrows();
        let h_dim = self.hidden();
        let mut gx = Array2::zeros(cache.x.dim());
        let mut dh_next = Array1::<f64>::zeros(h_dim);
        let mut dc_next = Array1::<f64>::zeros(h_dim);
        let mut dz = Array1::<f64>::zeros(4 * h_dim);
        for t in (0..t_len).rev() {
            for j in 0..h_dim {
                let i = cache.gates[(t, j)];
                let f = cache.gates[(t, h_dim + j)];
                let g = cache.gates[(t, 2 * h_dim + j)];
                let o = cache.gates[(t, 3 * h_dim + j)];
                let tc = cache.tanh_c[(t, j)];
                let c_prev = if t > 0 { cache.c[(t - 1, j)] } else { 0.0 };

                let dh = gh[(t, j)] + dh_next[j];
                let dtc = dh * o * (1.0 - tc * tc) + dc_next[j];
                let do_ = dh * tc;
                let di = dtc * g;
                let df = dtc * c_prev;
                let dg = dtc * i;
                dc_next[j] = dtc * f;

                dz[j] = di * i * (1.0 - i);
                dz[h_dim + j] = df * f * (1.0 - f);
                dz[2 * h_dim + j] = dg * (1.0 - g * g);
                dz[3 * h_dim + j] = do_ * o * (1.0 - o);
            }
            // parameter grads and upstream grads
            let x_t = cache.x.row(t);
            for r in 0..4 * h_dim {
                let dzr = dz[r];
                if dzr == 0.0 {
                    continue;
                }
                for k in 0..x_t.len() {
                    grad.w_ih[(r, k)] += dzr * x_t[k];
                }
                if t > 0 {
                    for k in 0..h_dim {
                        grad.w_hh[(r, k)] += dzr * cache.h[(t - 1, k)];
                    }
                }
                grad.b[r] += dzr;
            }
            for k in 0..x_t.len() {
                let mut acc = 0.0;
                for r in 0..4 * h_dim {
                    acc += self.w_ih[(r, k)] * dz[r];
                }
                gx[(t, k)] = acc;
            }
            for k in 0..h_dim {
                let mut acc = 0.0;
                for r in 0..4 * h_dim {
                    acc += self.w_hh[(r, k)] * dz[r];
                }
                dh_next[k] = acc;
            }
        }
        gx
    }
}

// ---------------------------------------------------------------------------
// Bidirectional LSTM (concatenated forward and reversed-time outputs)

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstm {
    pub fwd: Lstm,
    pub bwd: Lstm,
}

pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
}

fn reverse_rows(x: &Array2<f64>) -> Array2<f64> {
    x.slice(s![..;-1, ..]).to_owned()
}

impl BiLstm {
    pub fn init(rng: &mut ChaCha8Rng, hidden: usize, in_dim: usize) -> Self {
        Self {
            fwd: Lstm::init(rng, hidden, in_dim),
            bwd: Lstm::init(rng, hidden, in_dim),
        }
    }

    pub fn zeros(hidden: usize, in_dim: usize) -> Self {
        Self {
            fwd: Lstm::zeros(hidden, in_dim),
            bwd: Lstm::zeros(hidden, in_dim),
        }
    }

    /// `[T, in] -> [T, 2h]`
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, BiLstmCache) {
        let (hf, cf) = self.fwd.forward(x);
        let (hb_rev, cb) = self.bwd.forward(&reverse_rows(x));
        let hb = reverse_rows(&hb_rev);
        let h = ndarray::concatenate(Axis(1), &[hf.view(), hb.view()]).expect("same T");
        (h, BiLstmCache { fwd: cf, bwd: cb })
    }

    pub fn backward(&self, cache: &BiLstmCache, gy: &Array2<f64>, grad: &mut BiLstm) -> Array2<f64> {
        let h_dim = self.fwd.hidden();
        let gy_f = gy.slice(s![.., ..h_dim]).to_owned();
        let gy_b = reverse_rows(&gy.slice(s![.., h_dim..]).to_owned());
        let gx_f = self.fwd.backward(&cache.fwd, &gy_f, &mut grad.fwd);
        let gx_b_rev = self.bwd.backward(&cache.bwd, &gy_b, &mut grad.bwd);
        gx_f + reverse_rows(&gx_b_rev)
    }
}

// ---------------------------------------------------------------------------
// Conv2D, kernel 3x3, padding 1, stride (1, freq_stride), layout [C, T, F]

#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    /// `[out_c, in_c, 3, 3]`
    pub w: Array4<f64>,
    pub b: Array1<f64>,
    pub freq_stride: usize,
}

pub struct Conv2dCache {
    x: Array3<f64>,
}

pub fn conv_out_freq(f_in: usize, stride: usize) -> usize {
    (f_in + 2 - 3) / stride + 1
}

impl Conv2d {
    pub fn init(rng: &mut ChaCha8Rng, out_c: usize, in_c: usize, freq_stride: usize) -> Self {
        let bound = 1.0 / ((in_c * 9) as f64).sqrt();
        Self {
            w: Array4::from_shape_fn((out_c, in_c, 3, 3), |_| uniform(rng, bound)),
            b: Array1::zeros(out_c),
            freq_stride,
        }
    }

    pub fn zeros(out_c: usize, in_c: usize, freq_stride: usize) -> Self {
        Self {
            w: Array4::zeros((out_c, in_c, 3, 3)),
            b: Array1::zeros(out_c),
            freq_stride,
        }
    }

    pub fn forward(&self, x: &Array3<f64>) -> (Array3<f64>, Conv2dCache) {
        let (in_c, t_len, f_in) = x.dim();
        let out_c = self.w.dim().0;
        debug_assert_eq!(in_c, self.w.dim().1);
        let f_out = conv_out_freq(f_in, self.freq_stride);
        let mut y = Array3::zeros((out_c, t_len, f_out));
        for co in 0..out_c {
            for t in 0..t_len {
                for fo in 0..f_out {
                    let mut acc = self.b[co];
                    for ci in 0..in_c {
                        for kt in 0..3usize {
                            let ti = t as i64 + kt as i64 - 1;
                            if ti < 0 || ti >= t_len as i64 {
                                continue;
                            }
                            for kf in 0..3usize {
                                let fi = (fo * self.freq_stride) as i64 + kf as i64 - 1;
                                if fi < 0 || fi >= f_in as i64 {
                                    continue;
                                }
                                acc += self.w[(co, ci, kt, kf)] * x[(ci, ti as usize, fi as usize)];
                            }
                        }
                    }
                    y[(co, t, fo)] = acc;
                }
            }
        }
        (y, Conv2dCache { x: x.clone() })
    }

    pub fn backward(
        &self,
        cache: &Conv2dCache,
        gy: &Array3<f64>,
        grad: &mut Conv2d,
    ) -> Array3<f64> {
        let (in_c, t_len, f_in) = cache.x.dim();
        let (out_c, _, f_out) = gy.dim();
        let mut gx = Array3::zeros((in_c, t_len, f_in));
        for co in 0..out_c {
            for t in 0..t_len {
                for fo in 0..f_out {
                    let g = gy[(co, t, fo)];
                    if g == 0.0 {
                        continue;
                    }
                    grad.b[co] += g;
                    for ci in 0..in_c {
                        for kt in 0..3usize {
                            let ti = t as i64 + kt as i64 - 1;
                            if ti < 0 || ti >= t_len as i64 {
                                continue;
                            }
                            for kf in 0..3usize {
                                let fi = (fo * self.freq_stride) as i64 + kf as i64 - 1;
                                if fi < 0 || fi >= f_in as i64 {
                                    continue;
                                }
                                grad.w[(co, ci, kt, kf)] += g * cache.x[(ci, ti as usize, fi as usize)];
                                gx[(ci, ti as usize, fi as usize)] += g * self.w[(co, ci, kt, kf)];
                            }
                        }
                    }
                }
            }
        }
        gx
    }
}

// ---------------------------------------------------------------------------
// Adaptive average pooling over the frequency axis

pub struct PoolCache {
    f_in: usize,
}

pub const POOL_WIDTH: usize = 4;

fn pool_segment(f_in: usize, i: usize) -> (usize, usize) {
    (i * f_in / POOL_WIDTH, (i + 1) * f_in / POOL_WIDTH)
}

/// `[C, T, F] -> [C, T, POOL_WIDTH]`
pub fn adaptive_avg_pool(x: &Array3<f64>) -> (Array3<f64>, PoolCache) {
    let (c_len, t_len, f_in) = x.dim();
    let mut y = Array3::zeros((c_len, t_len, POOL_WIDTH));
    for c in 0..c_len {
        for t in 0..t_len {
            for i in 0..POOL_WIDTH {
                let (a, b) = pool_segment(f_in, i);
                let mut acc = 0.0;
                for f in a..b {
                    acc += x[(c, t, f)];
                }
                y[(c, t, i)] = acc / (b - a) as f64;
            }
        }
    }
    (y, PoolCache { f_in })
}

pub fn adaptive_avg_pool_backward(cache: &PoolCache, gy: &Array3<f64>) -> Array3<f64> {
    let (c_len, t_len, _) = gy.dim();
    let mut gx = Array3::zeros((c_len, t_len, cache.f_in));
    for c in 0..c_len {
        for t in 0..t_len {
            for i in 0..POOL_WIDTH {
                let (a, b) = pool_segment(cache.f_in, i);
                let share = gy[(c, t, i)] / (b - a) as f64;
                for f in a..b {
                    gx[(c, t, f)] += share;
                }
            }
        }
    }
    gx
}
