//! Layered ReLU networks on the plane with a scalar output.
//!
//! The first hidden layer is parameterized by an angle and a bias per neuron:
//! neuron `i` computes `σ(cos φᵢ·x + sin φᵢ·y − bᵢ)`, which keeps its weight on
//! the unit circle. Deeper layers are dense, `σ(W·h − b)`, and the output is
//! `ω·h − b_out` (note the subtracted bias throughout).
//!
//! Flat parameter layout: first-layer angles, first-layer biases, then for
//! every dense layer its row-major weights followed by its biases, then the
//! output weights and the output bias.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{AneError, Result};
use crate::geometry::{Affine2, Point};

/// Number of points handled per work unit in batched evaluation. Fixed so
/// that reductions happen in the same order regardless of thread count.
pub(crate) const CHUNK: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Architecture {
    hidden: Vec<usize>,
}

impl Architecture {
    pub fn new(hidden: Vec<usize>) -> Result<Self> {
        if hidden.is_empty() {
            return Err(AneError::Architecture("at least one hidden layer is required".into()));
        }
        if hidden.contains(&0) {
            return Err(AneError::Architecture("hidden widths must be positive".into()));
        }
        Ok(Self { hidden })
    }

    pub fn hidden_widths(&self) -> &[usize] {
        &self.hidden
    }

    /// Depth `L`: number of hidden layers plus the output layer.
    pub fn depth(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }
}

/// Trainable parameter count: `2·n₁ + Σ_{l≥2} n_l·(n_{l−1}+1) + n_{L−1} + 1`.
pub fn param_count(arch: &Architecture) -> usize {
    let h = &arch.hidden;
    let mut n = 2 * h[0];
    for w in h.windows(2) {
        n += w[1] * (w[0] + 1);
    }
    n + h[h.len() - 1] + 1
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "2")?;
        for n in &self.hidden {
            write!(f, "-{n}")?;
        }
        write!(f, "-1")
    }
}

impl FromStr for Architecture {
    type Err = AneError;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('-').collect();
        if parts.len() < 3 || parts[0] != "2" || parts[parts.len() - 1] != "1" {
            return Err(AneError::Architecture(format!("`{s}` is not of the form 2-n1-...-1")));
        }
        let hidden = parts[1..parts.len() - 1]
            .iter()
            .map(|p| p.parse::<usize>().map_err(|_| AneError::Architecture(format!("bad width `{p}` in `{s}`"))))
            .collect::<Result<Vec<_>>>()?;
        Architecture::new(hidden)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FirstLayerParams {
    pub angles: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Dense hidden layer; `weights` is row-major `n_out × n_in`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayerParams {
    pub n_in: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl DenseLayerParams {
    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        Self { n_in, weights: vec![0.0; n_out * n_in], biases: vec![0.0; n_out] }
    }

    pub fn n_out(&self) -> usize {
        self.biases.len()
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.weights[j * self.n_in..(j + 1) * self.n_in]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputParams {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub first: FirstLayerParams,
    pub hidden: Vec<DenseLayerParams>,
    pub output: OutputParams,
}

/// Batched forward result: network values plus the pre-activations of every
/// hidden layer, stored point-major (`pre_activations[l][q * n_l + j]`).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub values: Vec<f64>,
    pub pre_activations: Vec<Vec<f64>>,
    pub widths: Vec<usize>,
}

impl ForwardCache {
    /// Pre-activation of neuron `j` (0-based) in hidden layer `layer` (1-based) at point `q`.
    pub fn pre_activation(&self, layer: usize, q: usize, j: usize) -> f64 {
        let n = self.widths[layer - 1];
        self.pre_activations[layer - 1][q * n + j]
    }
}

impl Network {
    /// A network with every parameter zero.
    pub fn zeros(arch: &Architecture) -> Self {
        let h = arch.hidden_widths();
        Self {
            first: FirstLayerParams { angles: vec![0.0; h[0]], biases: vec![0.0; h[0]] },
            hidden: h.windows(2).map(|w| DenseLayerParams::zeros(w[1], w[0])).collect(),
            output: OutputParams { weights: vec![0.0; h[h.len() - 1]], bias: 0.0 },
        }
    }

    pub fn architecture(&self) -> Architecture {
        let mut hidden = vec![self.first.angles.len()];
        hidden.extend(self.hidden.iter().map(|l| l.n_out()));
        Architecture { hidden }
    }

    pub fn num_hidden_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    pub fn width(&self, layer: usize) -> usize {
        if layer == 1 {
            self.first.angles.len()
        } else {
            self.hidden[layer - 2].n_out()
        }
    }

    pub fn last_width(&self) -> usize {
        self.output.weights.len()
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.architecture())
    }

    pub fn from_flat(arch: &Architecture, params: &[f64]) -> Result<Self> {
        let mut net = Network::zeros(arch);
        net.set_flat(params)?;
        Ok(net)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(&self.first.angles);
        v.extend_from_slice(&self.first.biases);
        for l in &self.hidden {
            v.extend_from_slice(&l.weights);
            v.extend_from_slice(&l.biases);
        }
        v.extend_from_slice(&self.output.weights);
        v.push(self.output.bias);
        v
    }

    pub fn set_flat(&mut self, params: &[f64]) -> Result<()> {
        let expected = self.param_count();
        if params.len() != expected {
            return Err(AneError::ParamLength {
                arch: self.architecture().to_string(),
                expected,
                actual: params.len(),
            });
        }
        let mut it = params.iter().copied();
        for a in self.first.angles.iter_mut().chain(self.first.biases.iter_mut()) {
            *a = it.next().unwrap();
        }
        for l in &mut self.hidden {
            for w in l.weights.iter_mut().chain(l.biases.iter_mut()) {
                *w = it.next().unwrap();
            }
        }
        for w in &mut self.output.weights {
            *w = it.next().unwrap();
        }
        self.output.bias = it.next().unwrap();
        Ok(())
    }

    pub(crate) fn check_points(points: &[Point]) -> Result<()> {
        match points.iter().position(|p| !p.is_finite()) {
            Some(index) => Err(AneError::NonFiniteInput { index }),
            None => Ok(()),
        }
    }

    pub fn forward(&self, points: &[Point]) -> Result<ForwardCache> {
        Self::check_points(points)?;
        let kernel = Kernel::new(self);
        let widths = self.architecture().hidden;
        let parts: Vec<(Vec<f64>, Vec<Vec<f64>>)> = points
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut ws = kernel.workspace();
                let mut values = Vec::with_capacity(chunk.len());
                let mut pre: Vec<Vec<f64>> = widths.iter().map(|n| Vec::with_capacity(n * chunk.len())).collect();
                for &p in chunk {
                    values.push(kernel.forward(&mut ws, p, None).0);
                    for (l, buf) in pre.iter_mut().enumerate() {
                        buf.extend_from_slice(ws.z(l));
                    }
                }
                (values, pre)
            })
            .collect();
        let mut values = Vec::with_capacity(points.len());
        let mut pre_activations: Vec<Vec<f64>> = widths.iter().map(|n| Vec::with_capacity(n * points.len())).collect();
        for (v, pre) in parts {
            values.extend(v);
            for (dst, src) in pre_activations.iter_mut().zip(pre) {
                dst.extend(src);
            }
        }
        Ok(ForwardCache { values, pre_activations, widths })
    }

    /// Network values at `points`.
    pub fn eval(&self, points: &[Point]) -> Result<Vec<f64>> {
        Self::check_points(points)?;
        let kernel = &Kernel::new(self);
        Ok(points
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                let mut ws = kernel.workspace();
                chunk.iter().map(move |&p| kernel.forward(&mut ws, p, None).0).collect::<Vec<_>>()
            })
            .collect())
    }

    pub fn eval_point(&self, p: Point) -> f64 {
        let kernel = Kernel::new(self);
        let mut ws = kernel.workspace();
        kernel.forward(&mut ws, p, None).0
    }

    /// Gradient of `Σ_q c_q·v(x_q; θ)` with respect to the flat parameter vector.
    pub fn grad_params(&self, points: &[Point], coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != points.len() {
            return Err(AneError::LengthMismatch { expected: points.len(), actual: coeffs.len() });
        }
        Self::check_points(points)?;
        let kernel = Kernel::new(self);
        let np = self.param_count();
        let parts: Vec<Vec<f64>> = points
            .par_chunks(CHUNK)
            .zip(coeffs.par_chunks(CHUNK))
            .map(|(pts, cs)| {
                let mut ws = kernel.workspace();
                let mut g = vec![0.0; np];
                for (&p, &c) in pts.iter().zip(cs) {
                    if c != 0.0 {
                        kernel.forward(&mut ws, p, None);
                        kernel.backward(&mut ws, p, None, c, 0.0, &mut g);
                    }
                }
                g
            })
            .collect();
        Ok(sum_in_order(parts, np))
    }

    /// Exact spatial gradient `∇v` (piecewise constant, `σ'(0) = 0`).
    pub fn grad_input(&self, points: &[Point]) -> Result<Vec<[f64; 2]>> {
        Self::check_points(points)?;
        let kernel = &Kernel::new(self);
        Ok(points
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                let mut ws = kernel.workspace();
                chunk
                    .iter()
                    .map(move |&p| {
                        let gx = kernel.forward(&mut ws, p, Some([1.0, 0.0])).1;
                        let gy = kernel.forward(&mut ws, p, Some([0.0, 1.0])).1;
                        [gx, gy]
                    })
                    .collect::<Vec<_>>()
            })
            .collect())
    }

    /// Pre-activations `g_j^{(l)}` of hidden layer `layer` (1-based), one row per point.
    pub fn eval_pre_activations(&self, layer: usize, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        let max = self.num_hidden_layers();
        if layer == 0 || layer > max {
            return Err(AneError::LayerOutOfRange { layer, max });
        }
        Self::check_points(points)?;
        let kernel = Kernel::new(self);
        let mut ws = kernel.workspace();
        Ok(points
            .iter()
            .map(|&p| {
                kernel.forward(&mut ws, p, None);
                ws.z(layer - 1).to_vec()
            })
            .collect())
    }

    /// Post-activation outputs `φ^{(k)}` of hidden layer `layer` (1-based), one row per point.
    pub fn hidden_outputs(&self, layer: usize, points: &[Point]) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .eval_pre_activations(layer, points)?
            .into_iter()
            .map(|row| row.into_iter().map(relu).collect())
            .collect())
    }

    /// Hidden outputs of the last layer plus their directional derivatives
    /// along `tangent` at one point.
    pub fn last_hidden_with_tangent(&self, p: Point, tangent: [f64; 2]) -> (Vec<f64>, Vec<f64>) {
        let kernel = Kernel::new(self);
        let mut ws = kernel.workspace();
        kernel.forward(&mut ws, p, Some(tangent));
        let last = self.num_hidden_layers() - 1;
        (ws.h(last).to_vec(), ws.ht(last).to_vec())
    }

    /// Affine representations of every hidden output on the linear region
    /// containing `interior`. Entry `[l][j]` is neuron `j` of layer `l+1`,
    /// post-activation.
    pub fn affine_outputs_at(&self, interior: Point, layers: usize) -> Vec<Vec<Affine2>> {
        let mut out: Vec<Vec<Affine2>> = Vec::with_capacity(layers);
        if layers == 0 {
            return out;
        }
        let pre1 = self.first_layer_affine();
        out.push(pre1.iter().map(|g| if g.eval(interior) > 0.0 { *g } else { Affine2::ZERO }).collect());
        for l in 2..=layers {
            let pre = self.dense_pre_affine(l, &out[l - 2]);
            out.push(pre.iter().map(|g| if g.eval(interior) > 0.0 { *g } else { Affine2::ZERO }).collect());
        }
        out
    }

    /// First-layer pre-activations as affine functions of `(x, y)`.
    pub fn first_layer_affine(&self) -> Vec<Affine2> {
        self.first
            .angles
            .iter()
            .zip(&self.first.biases)
            .map(|(&phi, &b)| Affine2::new(phi.cos(), phi.sin(), -b))
            .collect()
    }

    /// Pre-activations of dense layer `layer` (≥ 2) as affine functions, given
    /// the affine post-activations of the previous layer on some region.
    pub fn dense_pre_affine(&self, layer: usize, prev: &[Affine2]) -> Vec<Affine2> {
        let l = &self.hidden[layer - 2];
        (0..l.n_out())
            .map(|j| {
                let mut g = Affine2::new(0.0, 0.0, -l.biases[j]);
                for (w, h) in l.row(j).iter().zip(prev) {
                    g.add_scaled(h, *w);
                }
                g
            })
            .collect()
    }

    /// Network truncated after hidden layer `layers`, with zero output weights.
    pub fn truncated(&self, layers: usize) -> Network {
        let hidden: Vec<DenseLayerParams> = self.hidden[..layers - 1].to_vec();
        let width = if layers == 1 { self.first.angles.len() } else { hidden[layers - 2].n_out() };
        Network {
            first: self.first.clone(),
            hidden,
            output: OutputParams { weights: vec![0.0; width], bias: 0.0 },
        }
    }

    /// Append first-layer neurons `(angle, bias)`. They feed the next layer with
    /// zero weights, so the network function is unchanged.
    pub fn add_first_layer_neurons(&mut self, neurons: &[(f64, f64)]) {
        for &(a, b) in neurons {
            self.first.angles.push(a);
            self.first.biases.push(b);
        }
        let k = neurons.len();
        if let Some(next) = self.hidden.first_mut() {
            widen_inputs(next, k);
        } else {
            self.output.weights.extend(std::iter::repeat_n(0.0, k));
        }
    }

    /// Append neurons to dense hidden layer `layer` (≥ 2). Each neuron is
    /// `(incoming weights, bias, outgoing weight)`; when `layer` is not the last
    /// hidden layer the outgoing weight is ignored and the next layer gets a
    /// zero column.
    pub fn add_dense_neurons(&mut self, layer: usize, neurons: &[(Vec<f64>, f64, f64)]) {
        let last = layer == self.num_hidden_layers();
        let l = &mut self.hidden[layer - 2];
        for (w, b, _) in neurons {
            assert_eq!(w.len(), l.n_in, "incoming weight length");
            l.weights.extend_from_slice(w);
            l.biases.push(*b);
        }
        if last {
            self.output.weights.extend(neurons.iter().map(|n| n.2));
        } else {
            widen_inputs(&mut self.hidden[layer - 1], neurons.len());
        }
    }

    /// Append a new last hidden layer built from `(incoming weights, bias)`
    /// pairs, with the given output weights and output bias.
    pub fn push_layer(&mut self, neurons: &[(Vec<f64>, f64)], output_weights: Vec<f64>, output_bias: f64) {
        let n_in = self.last_width();
        let mut layer = DenseLayerParams { n_in, weights: Vec::new(), biases: Vec::new() };
        for (w, b) in neurons {
            assert_eq!(w.len(), n_in, "incoming weight length");
            layer.weights.extend_from_slice(w);
            layer.biases.push(*b);
        }
        assert_eq!(output_weights.len(), neurons.len());
        self.hidden.push(layer);
        self.output = OutputParams { weights: output_weights, bias: output_bias };
    }

    /// Activation pattern (one bit per hidden neuron, in layer order) at `p`.
    pub fn activation_pattern(&self, p: Point) -> Vec<bool> {
        let kernel = Kernel::new(self);
        let mut ws = kernel.workspace();
        kernel.forward(&mut ws, p, None);
        ws.z.iter().map(|&z| z > 0.0).collect()
    }
}

fn widen_inputs(layer: &mut DenseLayerParams, extra: usize) {
    let n_out = layer.n_out();
    let n_in = layer.n_in;
    let mut w = Vec::with_capacity(n_out * (n_in + extra));
    for j in 0..n_out {
        w.extend_from_slice(&layer.weights[j * n_in..(j + 1) * n_in]);
        w.extend(std::iter::repeat_n(0.0, extra));
    }
    layer.weights = w;
    layer.n_in = n_in + extra;
}

#[inline]
pub fn relu(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        0.0
    }
}

pub(crate) fn sum_in_order(parts: Vec<Vec<f64>>, n: usize) -> Vec<f64> {
    let mut g = vec![0.0; n];
    for p in parts {
        for (a, b) in g.iter_mut().zip(p) {
            *a += b;
        }
    }
    g
}

/// Per-thread buffers for one point: pre-activations `z`, outputs `h` and
/// their tangents, all hidden layers concatenated.
pub(crate) struct Workspace {
    offsets: Vec<usize>,
    z: Vec<f64>,
    h: Vec<f64>,
    zt: Vec<f64>,
    ht: Vec<f64>,
    adj_h: Vec<f64>,
    adj_ht: Vec<f64>,
}

impl Workspace {
    pub(crate) fn z(&self, l: usize) -> &[f64] {
        &self.z[self.offsets[l]..self.offsets[l + 1]]
    }
    pub(crate) fn h(&self, l: usize) -> &[f64] {
        &self.h[self.offsets[l]..self.offsets[l + 1]]
    }
    pub(crate) fn ht(&self, l: usize) -> &[f64] {
        &self.ht[self.offsets[l]..self.offsets[l + 1]]
    }
}

/// Evaluation kernel with precomputed first-layer directions and flat-layout offsets.
pub(crate) struct Kernel<'a> {
    net: &'a Network,
    cos: Vec<f64>,
    sin: Vec<f64>,
    offsets: Vec<usize>,
    /// flat-parameter offset of each dense layer's weights
    dense_param_off: Vec<usize>,
    out_param_off: usize,
}

impl<'a> Kernel<'a> {
    pub(crate) fn new(net: &'a Network) -> Self {
        let n1 = net.first.angles.len();
        let mut offsets = vec![0, n1];
        for l in &net.hidden {
            offsets.push(offsets[offsets.len() - 1] + l.n_out());
        }
        let mut dense_param_off = Vec::with_capacity(net.hidden.len());
        let mut off = 2 * n1;
        for l in &net.hidden {
            dense_param_off.push(off);
            off += l.weights.len() + l.biases.len();
        }
        Self {
            net,
            cos: net.first.angles.iter().map(|a| a.cos()).collect(),
            sin: net.first.angles.iter().map(|a| a.sin()).collect(),
            offsets,
            dense_param_off,
            out_param_off: off,
        }
    }

    pub(crate) fn workspace(&self) -> Workspace {
        let n = *self.offsets.last().unwrap();
        Workspace {
            offsets: self.offsets.clone(),
            z: vec![0.0; n],
            h: vec![0.0; n],
            zt: vec![0.0; n],
            ht: vec![0.0; n],
            adj_h: vec![0.0; n],
            adj_ht: vec![0.0; n],
        }
    }

    /// Returns `(v, ∂v/∂t)` where `t` is the optional input tangent.
    #[inline]
    pub(crate) fn forward(&self, ws: &mut Workspace, p: Point, tangent: Option<[f64; 2]>) -> (f64, f64) {
        let net = self.net;
        let n1 = self.cos.len();
        let (tx, ty) = tangent.map_or((0.0, 0.0), |t| (t[0], t[1]));
        let with_t = tangent.is_some();
        for i in 0..n1 {
            let z = self.cos[i] * p.x + self.sin[i] * p.y - net.first.biases[i];
            ws.z[i] = z;
            let active = z > 0.0;
            ws.h[i] = if active { z } else { 0.0 };
            if with_t {
                let zt = self.cos[i] * tx + self.sin[i] * ty;
                ws.zt[i] = zt;
                ws.ht[i] = if active { zt } else { 0.0 };
            }
        }
        for (li, layer) in net.hidden.iter().enumerate() {
            let (prev_off, cur_off) = (self.offsets[li], self.offsets[li + 1]);
            let n_in = layer.n_in;
            for j in 0..layer.n_out() {
                let row = &layer.weights[j * n_in..(j + 1) * n_in];
                let mut z = -layer.biases[j];
                let mut zt = 0.0;
                let hp = &ws.h[prev_off..prev_off + n_in];
                for (w, h) in row.iter().zip(hp) {
                    z += w * h;
                }
                if with_t {
                    let htp = &ws.ht[prev_off..prev_off + n_in];
                    for (w, h) in row.iter().zip(htp) {
                        zt += w * h;
                    }
                }
                let k = cur_off + j;
                ws.z[k] = z;
                let active = z > 0.0;
                ws.h[k] = if active { z } else { 0.0 };
                if with_t {
                    ws.zt[k] = zt;
                    ws.ht[k] = if active { zt } else { 0.0 };
                }
            }
        }
        let last = self.offsets[self.offsets.len() - 2];
        let mut v = -net.output.bias;
        let mut vt = 0.0;
        for (i, w) in net.output.weights.iter().enumerate() {
            v += w * ws.h[last + i];
            if with_t {
                vt += w * ws.ht[last + i];
            }
        }
        (v, vt)
    }

    /// Accumulate `adj_v·∂v/∂θ + adj_t·∂v_t/∂θ` into `grad`, after `forward`
    /// was called with the same point and tangent.
    #[inline]
    pub(crate) fn backward(
        &self,
        ws: &mut Workspace,
        p: Point,
        tangent: Option<[f64; 2]>,
        adj_v: f64,
        adj_t: f64,
        grad: &mut [f64],
    ) {
        let net = self.net;
        let with_t = tangent.is_some() && adj_t != 0.0;
        let nl = self.offsets.len() - 1;
        let last = self.offsets[nl - 1];
        let n_last = self.offsets[nl] - last;
        for i in 0..n_last {
            let w = net.output.weights[i];
            grad[self.out_param_off + i] += adj_v * ws.h[last + i] + if with_t { adj_t * ws.ht[last + i] } else { 0.0 };
            ws.adj_h[last + i] = adj_v * w;
            ws.adj_ht[last + i] = if with_t { adj_t * w } else { 0.0 };
        }
        grad[self.out_param_off + n_last] -= adj_v;

        for li in (0..net.hidden.len()).rev() {
            let layer = &net.hidden[li];
            let (prev_off, cur_off) = (self.offsets[li], self.offsets[li + 1]);
            let n_in = layer.n_in;
            let poff = self.dense_param_off[li];
            let boff = poff + layer.weights.len();
            for i in 0..n_in {
                ws.adj_h[prev_off + i] = 0.0;
                ws.adj_ht[prev_off + i] = 0.0;
            }
            for j in 0..layer.n_out() {
                let k = cur_off + j;
                if ws.z[k] <= 0.0 {
                    continue;
                }
                let az = ws.adj_h[k];
                let azt = if with_t { ws.adj_ht[k] } else { 0.0 };
                if az == 0.0 && azt == 0.0 {
                    continue;
                }
                grad[boff + j] -= az;
                let row = &layer.weights[j * n_in..(j + 1) * n_in];
                let g = &mut grad[poff + j * n_in..poff + (j + 1) * n_in];
                for i in 0..n_in {
                    g[i] += az * ws.h[prev_off + i];
                    ws.adj_h[prev_off + i] += row[i] * az;
                }
                if with_t {
                    for i in 0..n_in {
                        g[i] += azt * ws.ht[prev_off + i];
                        ws.adj_ht[prev_off + i] += row[i] * azt;
                    }
                }
            }
        }

        let n1 = self.cos.len();
        let (tx, ty) = tangent.map_or((0.0, 0.0), |t| (t[0], t[1]));
        for i in 0..n1 {
            if ws.z[i] <= 0.0 {
                continue;
            }
            let az = ws.adj_h[i];
            let azt = if with_t { ws.adj_ht[i] } else { 0.0 };
            let (c, s) = (self.cos[i], self.sin[i]);
            grad[i] += az * (-s * p.x + c * p.y) + azt * (-s * tx + c * ty);
            grad[n1 + i] -= az;
        }
    }
}

/// On-disk network checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub architecture: String,
    pub seed: u64,
    pub params: Vec<f64>,
}

impl Checkpoint {
    pub fn new(net: &Network, seed: u64) -> Self {
        Self { architecture: net.architecture().to_string(), seed, params: net.to_flat() }
    }

    pub fn to_network(&self) -> Result<Network> {
        let arch: Architecture = self.architecture.parse()?;
        Network::from_flat(&arch, &self.params)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
