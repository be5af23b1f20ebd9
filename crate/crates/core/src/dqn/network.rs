use rand::Rng;
use serde::{Deserialize, Serialize};

use super::DqnError;

/// Fully connected layer; `weights` is row-major `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// He-uniform weights, zero bias.
    pub fn random<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = (6.0 / inputs as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.gen_range(-bound..bound)).collect();
        Self { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn is_consistent(&self) -> bool {
        self.weights.len() == self.inputs * self.outputs && self.bias.len() == self.outputs
    }

    fn affine(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            let mut acc = self.bias[o];
            for (w, v) in row.iter().zip(x) {
                acc += w * v;
            }
            out.push(acc);
        }
    }
}

/// Multilayer perceptron with ReLU hidden layers and a linear head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub layers: Vec<Dense>,
}

/// Activations kept from a forward pass for backpropagation.
/// `acts[0]` is the input, `acts[i + 1]` the output of layer `i`
/// (post-activation for hidden layers).
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub acts: Vec<Vec<f64>>,
}

/// Gradient buffers shaped like the network's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &QNetwork) -> Self {
        Self { layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() }
    }

    pub fn scale(&mut self, k: f64) {
        for l in &mut self.layers {
            l.weights.iter_mut().chain(l.bias.iter_mut()).for_each(|g| *g *= k);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|g| g.is_finite()))
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .fold(0.0, |m, g| m.max(g.abs()))
    }
}

impl QNetwork {
    /// `dims` lists every layer width including input and output,
    /// e.g. `[11, 64, 64, 3]`.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        Self { layers: dims.windows(2).map(|w| Dense::random(w[0], w[1], rng)).collect() }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        assert!(dims.len() >= 2, "need at least input and output widths");
        Self { layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() }
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.input_dim()];
        d.extend(self.layers.iter().map(|l| l.outputs));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.inputs)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Every layer is internally consistent and feeds the next.
    pub fn check_shape(&self) -> Result<(), DqnError> {
        if self.layers.is_empty() {
            return Err(DqnError::DimensionMismatch("network has no layers".into()));
        }
        for (i, l) in self.layers.iter().enumerate() {
            if !l.is_consistent() {
                return Err(DqnError::DimensionMismatch(format!("layer {i} buffers do not match {}x{}", l.outputs, l.inputs)));
            }
        }
        for (i, w) in self.layers.windows(2).enumerate() {
            if w[0].outputs != w[1].inputs {
                return Err(DqnError::DimensionMismatch(format!(
                    "layer {i} outputs {} but layer {} takes {}",
                    w[0].outputs,
                    i + 1,
                    w[1].inputs
                )));
            }
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, DqnError> {
        Ok(self.forward_cached(x)?.acts.pop().expect("at least one layer"))
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache, DqnError> {
        if x.len() != self.input_dim() {
            return Err(DqnError::DimensionMismatch(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut out = Vec::with_capacity(layer.outputs);
            layer.affine(acts.last().expect("non-empty"), &mut out);
            if i < last {
                out.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(out);
        }
        Ok(ForwardCache { acts })
    }

    /// Accumulates into `grads` the gradient of `Σ grad_out · output`
    /// with respect to every parameter.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grads: &mut Gradients) {
        let mut delta = grad_out.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &cache.acts[i];
            let g = &mut grads.layers[i];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, v) in row.iter_mut().zip(input) {
                    *gw += d * v;
                }
            }
            if i == 0 {
                break;
            }
            let mut prev = vec![0.0; layer.inputs];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            // ReLU derivative on the previous layer's output.
            for (p, a) in prev.iter_mut().zip(input) {
                if *a <= 0.0 {
                    *p = 0.0;
                }
            }
            delta = prev;
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Flat parameter view in layer order, weights before bias.
    pub fn param_mut(&mut self, mut k: usize) -> Option<&mut f64> {
        for l in &mut self.layers {
            let n = l.weights.len();
            if k < n {
                return Some(&mut l.weights[k]);
            }
            k -= n;
            if k < l.bias.len() {
                return Some(&mut l.bias[k]);
            }
            k -= l.bias.len();
        }
        None
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(&l.bias).all(|p| p.is_finite()))
    }
}

impl Gradients {
    /// Same flat indexing as [`QNetwork::param_mut`].
    pub fn get(&self, mut k: usize) -> Option<f64> {
        for l in &self.layers {
            let n = l.weights.len();
            if k < n {
                return Some(l.weights[k]);
            }
            k -= n;
            if k < l.bias.len() {
                return Some(l.bias[k]);
            }
            k -= l.bias.len();
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = QNetwork::zeros(&[11, 64, 64, 3]);
        assert_eq!(net.forward(&[0.3; 11]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn single_linear_layer_is_affine() {
        let mut net = QNetwork::zeros(&[3, 3]);
        let l = &mut net.layers[0];
        l.weights = vec![1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -1.0];
        l.bias = vec![0.5, 0.0, 1.0];
        assert_eq!(net.forward(&[1.0, 2.0, 3.0]).unwrap(), vec![1.5, 4.0, -2.0]);
    }

    #[test]
    fn wrong_input_width() {
        let net = QNetwork::zeros(&[11, 3]);
        assert!(matches!(net.forward(&[0.0; 10]), Err(DqnError::DimensionMismatch(_))));
    }

    #[test]
    fn shape_check_catches_broken_chain() {
        let mut net = QNetwork::new(&[4, 5, 2], &mut ChaCha8Rng::seed_from_u64(0));
        assert!(net.check_shape().is_ok());
        net.layers[1] = Dense::zeros(6, 2);
        assert!(net.check_shape().is_err());
    }

    #[test]
    fn flat_indexing_covers_all_params() {
        let mut net = QNetwork::new(&[2, 3, 1], &mut ChaCha8Rng::seed_from_u64(1));
        let n = net.param_count();
        assert_eq!(n, 2 * 3 + 3 + 3 + 1);
        assert!(net.param_mut(n - 1).is_some());
        assert!(net.param_mut(n).is_none());
    }
}
