use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{self, conv_out, Activation, BackwardMode, KERNEL};
use super::state::{StateNorm, STATE_DIM};
use super::tensor::Tensor;
use crate::raster::{Grid, RgbGrid};
use crate::scene::{Trajectory, HORIZON};
use crate::{Error, Real, Result};

pub const INPUT_CHANNELS: usize = 3;
pub const OUTPUT_DIM: usize = 2 * HORIZON;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    /// Side length `S` of the `3 × S × S` raster input.
    pub input_size: usize,
    /// Output channels of each 3×3 stride-2 convolution.
    pub conv_channels: Vec<usize>,
    /// Hidden widths of the fully connected head.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Fixed multiplier on the head output, meters.
    pub output_scale: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            input_size: 96,
            conv_channels: vec![8, 16, 32],
            hidden: vec![64],
            activation: Activation::Relu,
            output_scale: 10.0,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_size < 2 || self.conv_channels.is_empty() {
            return Err(Error::Config(
                "architecture needs input_size ≥ 2 and at least one conv stage".into(),
            ));
        }
        if self.conv_channels.contains(&0) || self.hidden.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        if !(self.output_scale > 0.0 && self.output_scale.is_finite()) {
            return Err(Error::Config("output_scale must be positive".into()));
        }
        Ok(())
    }

    /// Spatial sizes of the conv inputs, then the final feature map.
    fn spatial_sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_size];
        for _ in &self.conv_channels {
            s.push(conv_out(*s.last().unwrap()));
        }
        s
    }

    fn fc_dims(&self) -> Vec<usize> {
        let mut d = vec![self.conv_channels.last().unwrap() + STATE_DIM];
        d.extend(&self.hidden);
        d.push(OUTPUT_DIM);
        d
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Slot {
    w: Range<usize>,
    b: Range<usize>,
    fan_in: usize,
}

fn build_layout(arch: &ArchConfig) -> (Vec<Slot>, Vec<Slot>, usize) {
    let mut off = 0;
    let mut slot = |fan_in: usize, fan_out: usize| {
        let w = off..off + fan_in * fan_out;
        let b = w.end..w.end + fan_out;
        off = b.end;
        Slot { w, b, fan_in }
    };
    let mut convs = vec![];
    let mut cin = INPUT_CHANNELS;
    for &cout in &arch.conv_channels {
        convs.push(slot(cin * KERNEL * KERNEL, cout));
        cin = cout;
    }
    let dims = arch.fc_dims();
    let fcs = dims.windows(2).map(|d| slot(d[0], d[1])).collect();
    (convs, fcs, off)
}

/// Conv backbone → GAP → concat(state) → FC head → 12 outputs.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressorModel<T> {
    arch: ArchConfig,
    norm: StateNorm,
    params: Vec<T>,
    convs: Vec<Slot>,
    fcs: Vec<Slot>,
}

/// Intermediate activations kept by a training forward pass.
#[derive(Clone, Debug, Default)]
pub struct ForwardTape<T> {
    cached: bool,
    conv_cols: Vec<Vec<T>>,
    conv_pre: Vec<Vec<T>>,
    fc_in: Vec<Vec<T>>,
    fc_pre: Vec<Vec<T>>,
    output: Vec<T>,
}

impl<T: Real> ForwardTape<T> {
    pub fn output(&self) -> &[T] {
        &self.output
    }

    pub fn trajectory(&self) -> Trajectory {
        let flat: Vec<f64> = self.output.iter().map(|v| v.to_f64_lossy()).collect();
        Trajectory::from_flat(&flat)
    }

    pub fn is_cached(&self) -> bool {
        self.cached
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    /// Same layout as [`RegressorModel::params`]; empty when not requested.
    pub params: Vec<T>,
    /// `3 × S × S`, channel-major; empty when not requested.
    pub raster: Vec<T>,
    pub state: Vec<T>,
}

/// Which scalar guided backpropagation differentiates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "index")]
pub enum SaliencyTarget {
    #[default]
    SumOfOutputs,
    OutputIndex(usize),
}

/// Channel-major `3 × S × S` network input from an RGB raster.
pub fn rgb_to_input<T: Real>(rgb: &RgbGrid) -> Vec<T> {
    let n = rgb.rows() * rgb.cols();
    let mut out = vec![T::zero(); INPUT_CHANNELS * n];
    for (i, px) in rgb.data().iter().enumerate() {
        for ch in 0..INPUT_CHANNELS {
            out[ch * n + i] = T::from_f64_lossy(px[ch]);
        }
    }
    out
}

impl<T: Real> RegressorModel<T> {
    /// He-uniform weights (bound `√(6/fan_in)`), zero biases.
    pub fn new(arch: ArchConfig, norm: StateNorm, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(arch, norm)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for slot in m.convs.iter().chain(&m.fcs) {
            let bound = (6.0 / slot.fan_in as f64).sqrt();
            for p in &mut m.params[slot.w.clone()] {
                *p = T::from_f64_lossy(rng.gen_range(-bound..bound));
            }
        }
        Ok(m)
    }

    pub fn zeros(arch: ArchConfig, norm: StateNorm) -> Result<Self> {
        arch.validate()?;
        norm.validate()?;
        let (convs, fcs, n) = build_layout(&arch);
        Ok(RegressorModel {
            arch,
            norm,
            params: vec![T::zero(); n],
            convs,
            fcs,
        })
    }

    pub fn from_params(arch: ArchConfig, norm: StateNorm, params: Vec<T>) -> Result<Self> {
        let mut m = Self::zeros(arch, norm)?;
        if params.len() != m.params.len() {
            return Err(Error::Shape {
                expected: format!("{} parameters", m.params.len()),
                got: format!("{} parameters", params.len()),
            });
        }
        m.params = params;
        Ok(m)
    }

    pub fn arch(&self) -> &ArchConfig {
        &self.arch
    }

    pub fn norm(&self) -> &StateNorm {
        &self.norm
    }

    pub fn params(&self) -> &[T] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn input_len(&self) -> usize {
        INPUT_CHANNELS * self.arch.input_size * self.arch.input_size
    }

    fn check_inputs(&self, raster: &[T], state: &[T]) -> Result<()> {
        let s = self.arch.input_size;
        if raster.len() != self.input_len() {
            return Err(Error::Shape {
                expected: format!("raster 3×{s}×{s}"),
                got: format!("{} values", raster.len()),
            });
        }
        if state.len() != STATE_DIM {
            return Err(Error::Shape {
                expected: format!("state vector of {STATE_DIM}"),
                got: format!("{} values", state.len()),
            });
        }
        Ok(())
    }

    /// Full forward pass keeping every activation needed by [`Self::backward`].
    pub fn forward(&self, raster: &[T], state: &[T]) -> Result<ForwardTape<T>> {
        self.run(raster, state, true)
    }

    /// Forward pass that discards intermediate activations.
    pub fn infer(&self, raster: &[T], state: &[T]) -> Result<ForwardTape<T>> {
        self.run(raster, state, false)
    }

    pub fn forward_tensor(&self, raster: &Tensor<T>, state: &[T]) -> Result<ForwardTape<T>> {
        let s = self.arch.input_size;
        if raster.shape() != [INPUT_CHANNELS, s, s] {
            return Err(Error::Shape {
                expected: format!("[3, {s}, {s}]"),
                got: format!("{:?}", raster.shape()),
            });
        }
        self.forward(raster.data(), state)
    }

    pub fn predict(&self, raster: &[T], state: &[T]) -> Result<Trajectory> {
        Ok(self.infer(raster, state)?.trajectory())
    }

    fn run(&self, raster: &[T], state: &[T], keep: bool) -> Result<ForwardTape<T>> {
        self.check_inputs(raster, state)?;
        let act = self.arch.activation;
        let sizes = self.arch.spatial_sizes();
        let mut tape = ForwardTape {
            cached: keep,
            ..Default::default()
        };
        let mut x = raster.to_vec();
        let mut cin = INPUT_CHANNELS;
        let mut cols = Vec::new();
        for (j, slot) in self.convs.iter().enumerate() {
            let s = sizes[j];
            let n = sizes[j + 1] * sizes[j + 1];
            layers::im2col(&x, cin, s, s, &mut cols);
            let mut z = Vec::new();
            layers::conv_forward(
                &self.params[slot.w.clone()],
                &self.params[slot.b.clone()],
                &cols,
                slot.fan_in,
                n,
                &mut z,
            );
            x = act.apply(&z);
            cin = self.arch.conv_channels[j];
            if keep {
                tape.conv_cols.push(std::mem::take(&mut cols));
                tape.conv_pre.push(z);
            }
        }
        let mut h = layers::global_avg_pool(&x, cin);
        h.extend_from_slice(state);
        let last = self.fcs.len() - 1;
        for (i, slot) in self.fcs.iter().enumerate() {
            let mut z = Vec::new();
            layers::linear_forward(
                &self.params[slot.w.clone()],
                &self.params[slot.b.clone()],
                &h,
                &mut z,
            );
            let next = if i == last { z.clone() } else { act.apply(&z) };
            if keep {
                tape.fc_in.push(std::mem::replace(&mut h, next));
                tape.fc_pre.push(z);
            } else {
                h = next;
            }
        }
        let scale = T::from_f64_lossy(self.arch.output_scale);
        tape.output = h.into_iter().map(|v| v * scale).collect();
        Ok(tape)
    }

    /// Reverse pass from `upstream = ∂L/∂output`.
    pub fn backward(
        &self,
        tape: &ForwardTape<T>,
        upstream: &[T],
        mode: BackwardMode,
        want_params: bool,
        want_input: bool,
    ) -> Result<Gradients<T>> {
        let mut params = if want_params {
            vec![T::zero(); self.params.len()]
        } else {
            vec![]
        };
        let (raster, state) = self.backward_impl(
            tape,
            upstream,
            mode,
            want_params.then_some(&mut params[..]),
            want_input,
        )?;
        Ok(Gradients {
            params,
            raster,
            state,
        })
    }

    /// Adds this example's parameter gradient into `acc`.
    pub fn accumulate_grads(
        &self,
        tape: &ForwardTape<T>,
        upstream: &[T],
        acc: &mut [T],
    ) -> Result<()> {
        if acc.len() != self.params.len() {
            return Err(Error::Shape {
                expected: format!("{} gradient slots", self.params.len()),
                got: format!("{}", acc.len()),
            });
        }
        self.backward_impl(tape, upstream, BackwardMode::Standard, Some(acc), false)?;
        Ok(())
    }

    fn backward_impl(
        &self,
        tape: &ForwardTape<T>,
        upstream: &[T],
        mode: BackwardMode,
        mut dparams: Option<&mut [T]>,
        want_input: bool,
    ) -> Result<(Vec<T>, Vec<T>)> {
        if !tape.cached {
            return Err(Error::MissingForwardCache);
        }
        if upstream.len() != OUTPUT_DIM {
            return Err(Error::Shape {
                expected: format!("{OUTPUT_DIM} upstream values"),
                got: format!("{}", upstream.len()),
            });
        }
        let act = self.arch.activation;
        let scale = T::from_f64_lossy(self.arch.output_scale);
        let mut g: Vec<T> = upstream.iter().map(|&u| u * scale).collect();

        let last = self.fcs.len() - 1;
        for i in (0..self.fcs.len()).rev() {
            let slot = &self.fcs[i];
            if i != last {
                act.backward(&tape.fc_pre[i], &mut g, mode);
            }
            let dw = dparams.as_deref_mut().map(|p| split_slot(p, slot));
            g = layers::linear_backward(&self.params[slot.w.clone()], &tape.fc_in[i], &g, dw);
        }
        let c_last = *self.arch.conv_channels.last().unwrap();
        let state_grad = g[c_last..].to_vec();

        let sizes = self.arch.spatial_sizes();
        let n_last = sizes[sizes.len() - 1].pow(2);
        let mut da = layers::global_avg_pool_backward(&g[..c_last], n_last);
        let mut dcols = Vec::new();
        for j in (0..self.convs.len()).rev() {
            let slot = &self.convs[j];
            let s = sizes[j];
            let n = sizes[j + 1].pow(2);
            act.backward(&tape.conv_pre[j], &mut da, mode);
            let need_dx = j > 0 || want_input;
            let dw = dparams.as_deref_mut().map(|p| split_slot(p, slot));
            layers::conv_backward(
                &self.params[slot.w.clone()],
                &tape.conv_cols[j],
                &da,
                slot.fan_in,
                n,
                dw,
                need_dx.then_some(&mut dcols),
            );
            if !need_dx {
                da.clear();
                break;
            }
            let cin = if j == 0 {
                INPUT_CHANNELS
            } else {
                self.arch.conv_channels[j - 1]
            };
            let mut dx = vec![T::zero(); cin * s * s];
            layers::col2im(&dcols, cin, s, s, &mut dx);
            da = dx;
        }
        Ok((da, state_grad))
    }

    fn saliency_upstream(target: SaliencyTarget) -> Result<Vec<T>> {
        match target {
            SaliencyTarget::SumOfOutputs => Ok(vec![T::one(); OUTPUT_DIM]),
            SaliencyTarget::OutputIndex(i) if i < OUTPUT_DIM => {
                let mut u = vec![T::zero(); OUTPUT_DIM];
                u[i] = T::one();
                Ok(u)
            }
            SaliencyTarget::OutputIndex(i) => Err(Error::Config(format!(
                "saliency output index {i} out of range 0..{OUTPUT_DIM}"
            ))),
        }
    }

    /// Gradient of the saliency target w.r.t. the raster under `mode`.
    pub fn input_gradient(
        &self,
        raster: &[T],
        state: &[T],
        target: SaliencyTarget,
        mode: BackwardMode,
    ) -> Result<Vec<T>> {
        let tape = self.forward(raster, state)?;
        let up = Self::saliency_upstream(target)?;
        Ok(self.backward(&tape, &up, mode, false, true)?.raster)
    }

    /// `S × S` heatmap: per-pixel max over channels of the absolute guided
    /// gradient, normalized to unit sum. All zeros if the gradient vanishes.
    pub fn guided_backprop(
        &self,
        raster: &[T],
        state: &[T],
        target: SaliencyTarget,
    ) -> Result<Grid<f64>> {
        let g = self.input_gradient(raster, state, target, BackwardMode::Guided)?;
        Ok(heatmap_from_gradient(&g, self.arch.input_size))
    }
}

/// Max-abs channel reduction followed by L1 normalization.
pub fn heatmap_from_gradient<T: Real>(g: &[T], size: usize) -> Grid<f64> {
    let n = size * size;
    let mut h = Grid::from_fn(size, size, |r, c| {
        let i = r * size + c;
        (0..INPUT_CHANNELS)
            .map(|ch| g[ch * n + i].to_f64_lossy().abs())
            .fold(0.0, f64::max)
    });
    let total: f64 = h.data().iter().sum();
    if total > 0.0 {
        h.data_mut().iter_mut().for_each(|v| *v /= total);
    }
    h
}

fn split_slot<'a, T>(p: &'a mut [T], slot: &Slot) -> (&'a mut [T], &'a mut [T]) {
    // weights and biases are adjacent
    let (head, tail) = p[slot.w.start..slot.b.end].split_at_mut(slot.w.len());
    (head, tail)
}
