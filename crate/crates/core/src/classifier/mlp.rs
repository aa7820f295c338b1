use crate::rng::SeededRng;

/// Fully connected network with `tanh` hidden activations and a linear
/// output layer. All parameters live in one flat vector; layer `k` stores its
/// `out x in` weight matrix row-major followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    widths: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

impl Mlp {
    /// Glorot-uniform weights, zero biases and an all-zero output layer.
    pub fn new(widths: &[usize], rng: &mut SeededRng) -> Self {
        assert!(widths.len() >= 2, "need input and output widths");
        let mut net = Self::zeros(widths);
        let layers = widths.len() - 1;
        for k in 0..layers - 1 {
            let (fan_in, fan_out) = (widths[k], widths[k + 1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let (w, _) = net.layer_ranges(k);
            for p in &mut net.params[w] {
                *p = rng.uniform(-bound, bound);
            }
        }
        net
    }

    pub fn zeros(widths: &[usize]) -> Self {
        let count = (0..widths.len() - 1)
            .map(|k| widths[k] * widths[k + 1] + widths[k + 1])
            .sum();
        Self {
            widths: widths.to_vec(),
            params: vec![0.0; count],
        }
    }

    pub fn from_params(widths: &[usize], params: Vec<f64>) -> Option<Self> {
        let net = Self::zeros(widths);
        (net.params.len() == params.len()).then(|| Self {
            widths: widths.to_vec(),
            params,
        })
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn num_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().expect("nonempty")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Index ranges of the weights and the bias of layer `k`.
    pub fn layer_ranges(&self, k: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start: usize = (0..k)
            .map(|j| self.widths[j] * self.widths[j + 1] + self.widths[j + 1])
            .sum();
        let w_end = start + self.widths[k] * self.widths[k + 1];
        (start..w_end, w_end..w_end + self.widths[k + 1])
    }

    /// Mask of parameters that are weights (as opposed to biases).
    pub fn weight_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.params.len()];
        for k in 0..self.num_layers() {
            let (w, _) = self.layer_ranges(k);
            mask[w].iter_mut().for_each(|m| *m = true);
        }
        mask
    }

    /// Sum of squared weights, biases excluded.
    pub fn weight_norm_sq(&self) -> f64 {
        (0..self.num_layers())
            .map(|k| {
                let (w, _) = self.layer_ranges(k);
                self.params[w].iter().map(|p| p * p).sum::<f64>()
            })
            .sum()
    }

    pub fn forward(&self, input: &[f64], cache: &mut ForwardCache) {
        debug_assert_eq!(input.len(), self.input_dim());
        let layers = self.num_layers();
        cache.activations.resize_with(layers + 1, Vec::new);
        cache.activations[0].clear();
        cache.activations[0].extend_from_slice(input);
        for k in 0..layers {
            let (n_in, n_out) = (self.widths[k], self.widths[k + 1]);
            let (w, b) = self.layer_ranges(k);
            let (w, b) = (&self.params[w], &self.params[b]);
            let (done, rest) = cache.activations.split_at_mut(k + 1);
            let a_in = &done[k];
            let a_out = &mut rest[0];
            a_out.clear();
            for o in 0..n_out {
                let row = &w[o * n_in..(o + 1) * n_in];
                let mut z = b[o];
                for (wi, ai) in row.iter().zip(a_in) {
                    z += wi * ai;
                }
                a_out.push(if k + 1 < layers { z.tanh() } else { z });
            }
        }
    }

    /// Accumulates `d(output . d_out) / d(params)` into `grad`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grad: &mut [f64]) {
        let layers = self.num_layers();
        let mut delta = d_out.to_vec();
        let mut next = Vec::new();
        for k in (0..layers).rev() {
            let (n_in, n_out) = (self.widths[k], self.widths[k + 1]);
            let (wr, br) = self.layer_ranges(k);
            let a_in = &cache.activations[k];
            for o in 0..n_out {
                grad[br.start + o] += delta[o];
                if delta[o] == 0.0 {
                    continue;
                }
                let g_row = &mut grad[wr.start + o * n_in..wr.start + (o + 1) * n_in];
                for (g, a) in g_row.iter_mut().zip(a_in) {
                    *g += delta[o] * a;
                }
            }
            if k == 0 {
                break;
            }
            let w = &self.params[wr];
            next.clear();
            next.resize(n_in, 0.0);
            for o in 0..n_out {
                if delta[o] == 0.0 {
                    continue;
                }
                let row = &w[o * n_in..(o + 1) * n_in];
                for (acc, wi) in next.iter_mut().zip(row) {
                    *acc += delta[o] * wi;
                }
            }
            // tanh' = 1 - tanh^2, using the stored activation of layer k
            for (d, a) in next.iter_mut().zip(a_in) {
                *d *= 1.0 - a * a;
            }
            std::mem::swap(&mut delta, &mut next);
        }
    }
}
