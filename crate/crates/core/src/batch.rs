//! Block evaluation of weighted least-squares losses and their gradients.
//!
//! Points are processed in blocks of [`BLOCK`] with neuron-major buffers so
//! that the inner loops run over points and vectorize.

use crate::network::Network;

pub(crate) const BLOCK: usize = 64;

/// Inputs of one block; slices shorter than [`BLOCK`] are allowed.
pub(crate) struct BlockData<'a> {
    pub x: &'a [f64],
    pub y: &'a [f64],
    pub tx: &'a [f64],
    pub ty: &'a [f64],
    pub coef_v: &'a [f64],
    pub coef_t: &'a [f64],
    pub target: &'a [f64],
    pub weight: &'a [f64],
}

struct Layout {
    /// start of each hidden layer in the concatenated neuron index
    offsets: Vec<usize>,
    dense_param_off: Vec<usize>,
    out_param_off: usize,
}

pub(crate) struct BlockKernel<'a> {
    net: &'a Network,
    cos: Vec<f64>,
    sin: Vec<f64>,
    layout: Layout,
    with_t: bool,
}

/// Neuron-major scratch: `buf[k * BLOCK + b]` for neuron `k`, point `b`.
pub(crate) struct BlockScratch {
    z: Vec<f64>,
    zt: Vec<f64>,
    h: Vec<f64>,
    ht: Vec<f64>,
    adj: Vec<f64>,
    adj_t: Vec<f64>,
}

impl<'a> BlockKernel<'a> {
    pub(crate) fn new(net: &'a Network, with_t: bool) -> Self {
        let n1 = net.first.angles.len();
        let mut offsets = vec![0, n1];
        let mut dense_param_off = Vec::with_capacity(net.hidden.len());
        let mut off = 2 * n1;
        for l in &net.hidden {
            offsets.push(offsets[offsets.len() - 1] + l.n_out());
            dense_param_off.push(off);
            off += l.weights.len() + l.biases.len();
        }
        Self {
            net,
            cos: net.first.angles.iter().map(|a| a.cos()).collect(),
            sin: net.first.angles.iter().map(|a| a.sin()).collect(),
            layout: Layout { offsets, dense_param_off, out_param_off: off },
            with_t,
        }
    }

    pub(crate) fn scratch(&self) -> BlockScratch {
        let n = *self.layout.offsets.last().unwrap() * BLOCK;
        let t = if self.with_t { n } else { 0 };
        BlockScratch {
            z: vec![0.0; n],
            zt: vec![0.0; t],
            h: vec![0.0; n],
            ht: vec![0.0; t],
            adj: vec![0.0; n],
            adj_t: vec![0.0; t],
        }
    }

    /// Adds the block's gradient into `grad` and returns its loss.
    pub(crate) fn loss_and_grad(&self, s: &mut BlockScratch, d: &BlockData<'_>, grad: &mut [f64]) -> f64 {
        let nb = d.x.len();
        debug_assert!(nb <= BLOCK);
        let net = self.net;
        let off = &self.layout.offsets;
        let with_t = self.with_t;

        // first layer
        for i in 0..self.cos.len() {
            let (c, sn, bias) = (self.cos[i], self.sin[i], net.first.biases[i]);
            let r = i * BLOCK..i * BLOCK + nb;
            let (z, h) = (&mut s.z[r.clone()], &mut s.h[r.clone()]);
            for b in 0..nb {
                z[b] = c * d.x[b] + sn * d.y[b] - bias;
                h[b] = z[b].max(0.0);
            }
            if with_t {
                let (zt, ht) = (&mut s.zt[r.clone()], &mut s.ht[r]);
                for b in 0..nb {
                    zt[b] = c * d.tx[b] + sn * d.ty[b];
                    ht[b] = if z[b] > 0.0 { zt[b] } else { 0.0 };
                }
            }
        }
        // dense layers
        for (li, layer) in net.hidden.iter().enumerate() {
            let (p0, c0) = (off[li], off[li + 1]);
            for j in 0..layer.n_out() {
                let k = (c0 + j) * BLOCK;
                let mut acc = [0.0; BLOCK];
                acc[..nb].iter_mut().for_each(|a| *a = -layer.biases[j]);
                for (i, &w) in layer.row(j).iter().enumerate() {
                    let hp = &s.h[(p0 + i) * BLOCK..(p0 + i) * BLOCK + nb];
                    for b in 0..nb {
                        acc[b] += w * hp[b];
                    }
                }
                s.z[k..k + nb].copy_from_slice(&acc[..nb]);
                for b in 0..nb {
                    s.h[k + b] = acc[b].max(0.0);
                }
                if with_t {
                    let mut acc_t = [0.0; BLOCK];
                    for (i, &w) in layer.row(j).iter().enumerate() {
                        let hp = &s.ht[(p0 + i) * BLOCK..(p0 + i) * BLOCK + nb];
                        for b in 0..nb {
                            acc_t[b] += w * hp[b];
                        }
                    }
                    for b in 0..nb {
                        s.zt[k + b] = acc_t[b];
                        s.ht[k + b] = if acc[b] > 0.0 { acc_t[b] } else { 0.0 };
                    }
                }
            }
        }
        // output and residual adjoints
        let last = off[off.len() - 2];
        let n_last = off[off.len() - 1] - last;
        let mut v = [0.0; BLOCK];
        let mut vt = [0.0; BLOCK];
        v[..nb].iter_mut().for_each(|a| *a = -net.output.bias);
        for (i, &w) in net.output.weights.iter().enumerate() {
            let k = (last + i) * BLOCK;
            for b in 0..nb {
                v[b] += w * s.h[k + b];
            }
            if with_t {
                for b in 0..nb {
                    vt[b] += w * s.ht[k + b];
                }
            }
        }
        let mut loss = 0.0;
        let mut av = [0.0; BLOCK];
        let mut at = [0.0; BLOCK];
        for b in 0..nb {
            let r = d.coef_v[b] * v[b] + d.coef_t[b] * vt[b] - d.target[b];
            let wr = d.weight[b] * r;
            loss += wr * r;
            av[b] = 2.0 * wr * d.coef_v[b];
            at[b] = 2.0 * wr * d.coef_t[b];
        }

        // backward: output layer
        let oo = self.layout.out_param_off;
        for i in 0..n_last {
            let k = (last + i) * BLOCK;
            let w = net.output.weights[i];
            let mut g = 0.0;
            for b in 0..nb {
                g += av[b] * s.h[k + b];
                s.adj[k + b] = av[b] * w;
            }
            if with_t {
                for b in 0..nb {
                    g += at[b] * s.ht[k + b];
                    s.adj_t[k + b] = at[b] * w;
                }
            }
            grad[oo + i] += g;
        }
        grad[oo + n_last] -= av[..nb].iter().sum::<f64>();

        // dense layers, last to first
        for li in (0..net.hidden.len()).rev() {
            let layer = &net.hidden[li];
            let (p0, c0) = (off[li], off[li + 1]);
            let n_in = layer.n_in;
            let poff = self.layout.dense_param_off[li];
            let boff = poff + layer.weights.len();
            // mask adjoints by the activation
            for j in 0..layer.n_out() {
                let k = (c0 + j) * BLOCK;
                for b in 0..nb {
                    if s.z[k + b] <= 0.0 {
                        s.adj[k + b] = 0.0;
                    }
                }
                if with_t {
                    for b in 0..nb {
                        if s.z[k + b] <= 0.0 {
                            s.adj_t[k + b] = 0.0;
                        }
                    }
                }
            }
            for i in 0..n_in {
                let k = (p0 + i) * BLOCK;
                s.adj[k..k + nb].iter_mut().for_each(|a| *a = 0.0);
                if with_t {
                    s.adj_t[k..k + nb].iter_mut().for_each(|a| *a = 0.0);
                }
            }
            for j in 0..layer.n_out() {
                let kj = (c0 + j) * BLOCK;
                let (head, tail) = s.adj.split_at_mut(kj);
                let aj = &tail[..nb];
                grad[boff + j] -= aj.iter().sum::<f64>();
                let row = layer.row(j);
                for i in 0..n_in {
                    let ki = (p0 + i) * BLOCK;
                    let hp = &s.h[ki..ki + nb];
                    let mut g = 0.0;
                    for b in 0..nb {
                        g += aj[b] * hp[b];
                    }
                    grad[poff + j * n_in + i] += g;
                    let w = row[i];
                    let dst = &mut head[ki..ki + nb];
                    for b in 0..nb {
                        dst[b] += w * aj[b];
                    }
                }
                if with_t {
                    let (head, tail) = s.adj_t.split_at_mut(kj);
                    let aj = &tail[..nb];
                    for i in 0..n_in {
                        let ki = (p0 + i) * BLOCK;
                        let hp = &s.ht[ki..ki + nb];
                        let mut g = 0.0;
                        for b in 0..nb {
                            g += aj[b] * hp[b];
                        }
                        grad[poff + j * n_in + i] += g;
                        let w = row[i];
                        let dst = &mut head[ki..ki + nb];
                        for b in 0..nb {
                            dst[b] += w * aj[b];
                        }
                    }
                }
            }
        }

        // first layer: angle and bias
        let n1 = self.cos.len();
        for i in 0..n1 {
            let k = i * BLOCK;
            let (c, sn) = (self.cos[i], self.sin[i]);
            let (mut ga, mut gb) = (0.0, 0.0);
            for b in 0..nb {
                if s.z[k + b] > 0.0 {
                    let a = s.adj[k + b];
                    ga += a * (-sn * d.x[b] + c * d.y[b]);
                    gb += a;
                }
            }
            if with_t {
                for b in 0..nb {
                    if s.z[k + b] > 0.0 {
                        ga += s.adj_t[k + b] * (-sn * d.tx[b] + c * d.ty[b]);
                    }
                }
            }
            grad[i] += ga;
            grad[n1 + i] -= gb;
        }
        loss
    }
}
