//! Slice-level kernels: 3×3 stride-2 convolution via im2col, dense layers,
//! ReLU and global average pooling, each with its backward pass.

use crate::Real;

pub const KERNEL: usize = 3;
pub const STRIDE: usize = 2;
pub const PAD: usize = 1;

/// Spatial output size of the stride-2 convolution.
pub fn conv_out(size: usize) -> usize {
    (size + 2 * PAD - KERNEL) / STRIDE + 1
}

/// Four-lane dot product with a fixed summation order.
#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 4];
    let chunks = n / 4;
    for i in 0..chunks {
        let j = 4 * i;
        acc[0] += a[j] * b[j];
        acc[1] += a[j + 1] * b[j + 1];
        acc[2] += a[j + 2] * b[j + 2];
        acc[3] += a[j + 3] * b[j + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for j in 4 * chunks..n {
        s += a[j] * b[j];
    }
    s
}

#[inline]
fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Unfolds `input` (`c × h × w`) into `(c·9) × (ho·wo)` patch columns.
pub fn im2col<T: Real>(input: &[T], c: usize, h: usize, w: usize, cols: &mut Vec<T>) {
    let (ho, wo) = (conv_out(h), conv_out(w));
    let n = ho * wo;
    cols.clear();
    cols.resize(c * KERNEL * KERNEL * n, T::zero());
    for ci in 0..c {
        let plane = &input[ci * h * w..(ci + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let k = (ci * KERNEL + ky) * KERNEL + kx;
                let row = &mut cols[k * n..(k + 1) * n];
                for oy in 0..ho {
                    let iy = (oy * STRIDE + ky) as isize - PAD as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let dst = &mut row[oy * wo..(oy + 1) * wo];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * STRIDE + kx) as isize - PAD as isize;
                        if ix >= 0 && ix < w as isize {
                            *d = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
}

/// Accumulates patch-column gradients back onto the input image.
pub fn col2im<T: Real>(dcols: &[T], c: usize, h: usize, w: usize, dinput: &mut [T]) {
    let (ho, wo) = (conv_out(h), conv_out(w));
    let n = ho * wo;
    for ci in 0..c {
        let plane = &mut dinput[ci * h * w..(ci + 1) * h * w];
        for ky in 0..KERNEL {
            for kx in 0..KERNEL {
                let k = (ci * KERNEL + ky) * KERNEL + kx;
                let row = &dcols[k * n..(k + 1) * n];
                for oy in 0..ho {
                    let iy = (oy * STRIDE + ky) as isize - PAD as isize;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    for ox in 0..wo {
                        let ix = (ox * STRIDE + kx) as isize - PAD as isize;
                        if ix >= 0 && ix < w as isize {
                            plane[iy as usize * w + ix as usize] += row[oy * wo + ox];
                        }
                    }
                }
            }
        }
    }
}

/// `out[m][n] = bias[m] + Σ_k weight[m][k] · cols[k][n]`.
pub fn conv_forward<T: Real>(
    weight: &[T],
    bias: &[T],
    cols: &[T],
    k_dim: usize,
    n: usize,
    out: &mut Vec<T>,
) {
    let m_dim = bias.len();
    out.clear();
    out.resize(m_dim * n, T::zero());
    for m in 0..m_dim {
        let o = &mut out[m * n..(m + 1) * n];
        o.iter_mut().for_each(|v| *v = bias[m]);
        for k in 0..k_dim {
            let wv = weight[m * k_dim + k];
            if wv != T::zero() {
                axpy(wv, &cols[k * n..(k + 1) * n], o);
            }
        }
    }
}

/// Weight/bias gradients and optionally the patch-column gradient.
#[allow(clippy::too_many_arguments)]
pub fn conv_backward<T: Real>(
    weight: &[T],
    cols: &[T],
    dout: &[T],
    k_dim: usize,
    n: usize,
    dweight: Option<(&mut [T], &mut [T])>,
    dcols: Option<&mut Vec<T>>,
) {
    let m_dim = dout.len() / n;
    if let Some((dw, db)) = dweight {
        for m in 0..m_dim {
            let d = &dout[m * n..(m + 1) * n];
            db[m] += d.iter().copied().sum::<T>();
            for k in 0..k_dim {
                dw[m * k_dim + k] += dot(d, &cols[k * n..(k + 1) * n]);
            }
        }
    }
    if let Some(dc) = dcols {
        dc.clear();
        dc.resize(k_dim * n, T::zero());
        for k in 0..k_dim {
            let row = &mut dc[k * n..(k + 1) * n];
            for m in 0..m_dim {
                let wv = weight[m * k_dim + k];
                if wv != T::zero() {
                    axpy(wv, &dout[m * n..(m + 1) * n], row);
                }
            }
        }
    }
}

/// `out = W·x + b` for `W` of shape `out × in`.
pub fn linear_forward<T: Real>(weight: &[T], bias: &[T], x: &[T], out: &mut Vec<T>) {
    let n_in = x.len();
    out.clear();
    out.extend(
        bias.iter()
            .enumerate()
            .map(|(o, &b)| b + dot(&weight[o * n_in..(o + 1) * n_in], x)),
    );
}

/// Accumulates `dW += dz ⊗ x`, `db += dz` and returns `Wᵀ·dz`.
pub fn linear_backward<T: Real>(
    weight: &[T],
    x: &[T],
    dz: &[T],
    dweight: Option<(&mut [T], &mut [T])>,
) -> Vec<T> {
    let n_in = x.len();
    if let Some((dw, db)) = dweight {
        for (o, &g) in dz.iter().enumerate() {
            db[o] += g;
            axpy(g, x, &mut dw[o * n_in..(o + 1) * n_in]);
        }
    }
    let mut dx = vec![T::zero(); n_in];
    for (o, &g) in dz.iter().enumerate() {
        axpy(g, &weight[o * n_in..(o + 1) * n_in], &mut dx);
    }
    dx
}

/// Nonlinearity applied after every hidden layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Relu,
    Identity,
}

/// How gradients cross an activation on the way back.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackwardMode {
    Standard,
    /// Only positive gradients through positive activations.
    Guided,
}

impl Activation {
    pub fn apply<T: Real>(self, z: &[T]) -> Vec<T> {
        match self {
            Activation::Relu => z.iter().map(|&v| v.max(T::zero())).collect(),
            Activation::Identity => z.to_vec(),
        }
    }

    /// Turns the gradient w.r.t. the activation output into one w.r.t. `z`.
    pub fn backward<T: Real>(self, z: &[T], grad: &mut [T], mode: BackwardMode) {
        if self == Activation::Identity {
            return;
        }
        let zero = T::zero();
        for (g, &zv) in grad.iter_mut().zip(z) {
            let pass = zv > zero && (mode == BackwardMode::Standard || *g > zero);
            if !pass {
                *g = zero;
            }
        }
    }
}

/// Channel means of a `c × n` feature map.
pub fn global_avg_pool<T: Real>(x: &[T], c: usize) -> Vec<T> {
    let n = x.len() / c;
    let inv = T::one() / T::from_usize(n).expect("pool size fits");
    (0..c)
        .map(|ci| x[ci * n..(ci + 1) * n].iter().copied().sum::<T>() * inv)
        .collect()
}

pub fn global_avg_pool_backward<T: Real>(dg: &[T], n: usize) -> Vec<T> {
    let inv = T::one() / T::from_usize(n).expect("pool size fits");
    dg.iter()
        .flat_map(|&g| std::iter::repeat(g * inv).take(n))
        .collect()
}
