//! The tree tensor network: seven input vectors are reduced 7 -> 5 -> 3 -> 1
//! by overlapping triples of rank-4 contractions. Hidden layers apply an
//! elementwise nonlinearity; the output node is a bare contraction.

use crate::dataset::{Scaler, WINDOW};
use crate::error::{Result, TnmError};
use crate::io::to_json_string;
use crate::tensor::{
    contract3_backward_acc, contract3_into, Activation, FeatureVector, WeightTensor4,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const ARITY: usize = 3;
pub const DEPTH: usize = 3;
/// Node count per level, inputs first.
pub const LAYER_NODE_COUNTS: [usize; DEPTH + 1] = [7, 5, 3, 1];
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamMode {
    Homogeneous,
    Inhomogeneous,
}

impl ParamMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamMode::Homogeneous => "homogeneous",
            ParamMode::Inhomogeneous => "inhomogeneous",
        }
    }
}

impl std::fmt::Display for ParamMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ParamMode {
    type Err = TnmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "homogeneous" | "hom" => Ok(ParamMode::Homogeneous),
            "inhomogeneous" | "inhom" => Ok(ParamMode::Inhomogeneous),
            other => Err(TnmError::Config(format!(
                "unknown parametrization `{other}`"
            ))),
        }
    }
}

/// Feature dimension `d` and bond dimension `D`. Window, arity and depth are
/// fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Topology {
    d: usize,
    bond: usize,
}

impl Topology {
    pub fn new(d: usize, bond: usize) -> Result<Self> {
        if d == 0 || bond == 0 {
            return Err(TnmError::Config(format!(
                "feature and bond dimensions must be positive (d = {d}, D = {bond})"
            )));
        }
        Ok(Self { d, bond })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn bond(&self) -> usize {
        self.bond
    }

    pub fn window(&self) -> usize {
        WINDOW
    }

    pub fn layer_node_counts(&self) -> [usize; DEPTH + 1] {
        LAYER_NODE_COUNTS
    }

    /// Tensor shape at `layer` (1-based): `(D,d,d,d)`, `(D,D,D,D)`, `(d,D,D,D)`.
    pub fn layer_shape(&self, layer: usize) -> [usize; 4] {
        let (d, b) = (self.d, self.bond);
        match layer {
            1 => [b, d, d, d],
            2 => [b, b, b, b],
            3 => [d, b, b, b],
            _ => panic!("layer {layer} out of range 1..=3"),
        }
    }

    fn stored_tensors(&self, layer: usize, mode: ParamMode) -> usize {
        match mode {
            ParamMode::Homogeneous => 1,
            ParamMode::Inhomogeneous => LAYER_NODE_COUNTS[layer],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TnmModel {
    topology: Topology,
    mode: ParamMode,
    activation: Activation,
    seed: u64,
    /// `layers[l - 1]` holds the stored tensors of level `l`.
    layers: Vec<Vec<WeightTensor4>>,
}

/// Intermediates of one node for the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionCache {
    pub inputs: [FeatureVector; 3],
    pub pre_activation: FeatureVector,
    pub post_activation: FeatureVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `nodes[l - 1][j]` for level `l`, node `j`.
    pub nodes: Vec<Vec<ContractionCache>>,
}

/// Weight gradients laid out exactly like the model's stored tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Vec<WeightTensor4>>,
}

impl Gradients {
    pub fn zeros_like(model: &TnmModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| l.iter().map(|t| WeightTensor4::zeros(t.dims())).collect())
                .collect(),
        }
    }

    pub fn tensors(&self) -> impl Iterator<Item = &WeightTensor4> {
        self.layers.iter().flatten()
    }

    pub fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self
            .layers
            .iter_mut()
            .flatten()
            .zip(other.layers.iter().flatten())
        {
            for (x, y) in a.values_mut().iter_mut().zip(b.values()) {
                *x += y;
            }
        }
    }

    pub fn fill_zero(&mut self) {
        for t in self.layers.iter_mut().flatten() {
            t.values_mut().fill(0.0);
        }
    }
}

impl TnmModel {
    /// Weights i.i.d. uniform on `[-s, s]`, `s = fan_in^{-1/2}`, where fan_in
    /// is the product of the three contracted dimensions.
    pub fn build(d: usize, bond: usize, mode: ParamMode, seed: u64) -> Result<Self> {
        let topology = Topology::new(d, bond)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (1..=DEPTH)
            .map(|layer| {
                let dims = topology.layer_shape(layer);
                let bound = init_bound(dims);
                (0..topology.stored_tensors(layer, mode))
                    .map(|_| {
                        let n: usize = dims.iter().product();
                        let values = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
                        WeightTensor4::new(dims, values).expect("shape is consistent")
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            topology,
            mode,
            activation: Activation::default(),
            seed,
            layers,
        })
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn from_weights(
        d: usize,
        bond: usize,
        mode: ParamMode,
        seed: u64,
        layers: Vec<Vec<WeightTensor4>>,
    ) -> Result<Self> {
        let topology = Topology::new(d, bond)?;
        if layers.len() != DEPTH {
            return Err(TnmError::Invariant(format!(
                "expected {DEPTH} layers, got {}",
                layers.len()
            )));
        }
        for (i, tensors) in layers.iter().enumerate() {
            let layer = i + 1;
            let want = topology.stored_tensors(layer, mode);
            if tensors.len() != want {
                return Err(TnmError::Invariant(format!(
                    "layer {layer} stores {} tensors, {mode} mode needs {want}",
                    tensors.len()
                )));
            }
            let shape = topology.layer_shape(layer);
            if let Some(t) = tensors.iter().find(|t| t.dims() != shape) {
                return Err(TnmError::Invariant(format!(
                    "layer {layer} tensor has dims {:?}, expected {shape:?}",
                    t.dims()
                )));
            }
        }
        Ok(Self {
            topology,
            mode,
            activation: Activation::default(),
            seed,
            layers,
        })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn mode(&self) -> ParamMode {
        self.mode
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn layers(&self) -> &[Vec<WeightTensor4>] {
        &self.layers
    }

    pub fn tensors(&self) -> impl Iterator<Item = &WeightTensor4> {
        self.layers.iter().flatten()
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut WeightTensor4> {
        self.layers.iter_mut().flatten()
    }

    pub fn param_count(&self) -> usize {
        self.tensors().map(WeightTensor4::len).sum()
    }

    /// Same values with every tied tensor copied out to its own node.
    pub fn untied(&self) -> TnmModel {
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(i, tensors)| match self.mode {
                ParamMode::Homogeneous => vec![tensors[0].clone(); LAYER_NODE_COUNTS[i + 1]],
                ParamMode::Inhomogeneous => tensors.clone(),
            })
            .collect();
        TnmModel {
            mode: ParamMode::Inhomogeneous,
            layers,
            ..*self
        }
    }

    #[inline]
    fn tensor(&self, layer: usize, node: usize) -> &WeightTensor4 {
        let stored = &self.layers[layer - 1];
        match self.mode {
            ParamMode::Homogeneous => &stored[0],
            ParamMode::Inhomogeneous => &stored[node],
        }
    }

    fn check_window<T: AsRef<[f64]>>(&self, window: &[T]) -> Result<()> {
        if window.len() != WINDOW {
            return Err(TnmError::Shape {
                axis: "window",
                expected: WINDOW,
                got: window.len(),
            });
        }
        let d = self.topology.d;
        if let Some(v) = window.iter().find(|v| v.as_ref().len() != d) {
            return Err(TnmError::Shape {
                axis: "feature",
                expected: d,
                got: v.as_ref().len(),
            });
        }
        Ok(())
    }

    /// Forward pass keeping every node's intermediates.
    pub fn forward(&self, window: &[FeatureVector]) -> Result<(FeatureVector, ForwardCache)> {
        self.check_window(window)?;
        let mut level: Vec<FeatureVector> = window.to_vec();
        let mut nodes = Vec::with_capacity(DEPTH);
        for layer in 1..=DEPTH {
            let count = LAYER_NODE_COUNTS[layer];
            let mut caches = Vec::with_capacity(count);
            for j in 0..count {
                let w = self.tensor(layer, j);
                let mut pre = vec![0.0; w.dims()[0]];
                contract3_into(
                    w,
                    level[j].as_slice(),
                    level[j + 1].as_slice(),
                    level[j + 2].as_slice(),
                    &mut pre,
                );
                let post = if layer < DEPTH {
                    pre.iter().map(|&v| self.activation.apply(v)).collect()
                } else {
                    pre.clone()
                };
                caches.push(ContractionCache {
                    inputs: [level[j].clone(), level[j + 1].clone(), level[j + 2].clone()],
                    pre_activation: FeatureVector::from_raw(pre),
                    post_activation: FeatureVector::from_raw(post),
                });
            }
            level = caches.iter().map(|c| c.post_activation.clone()).collect();
            nodes.push(caches);
        }
        if level[0].as_slice().iter().any(|v| !v.is_finite()) {
            return Err(TnmError::NonFinite("model output"));
        }
        Ok((
            level.pop().expect("one output node"),
            ForwardCache { nodes },
        ))
    }

    /// Forward pass without a cache.
    pub fn predict<T: AsRef<[f64]>>(&self, window: &[T]) -> Result<Vec<f64>> {
        self.check_window(window)?;
        let mut level: Vec<Vec<f64>> = window.iter().map(|v| v.as_ref().to_vec()).collect();
        for layer in 1..=DEPTH {
            let next = (0..LAYER_NODE_COUNTS[layer])
                .map(|j| {
                    let w = self.tensor(layer, j);
                    let mut out = vec![0.0; w.dims()[0]];
                    contract3_into(w, &level[j], &level[j + 1], &level[j + 2], &mut out);
                    if layer < DEPTH {
                        out.iter_mut().for_each(|v| *v = self.activation.apply(*v));
                    }
                    out
                })
                .collect();
            level = next;
        }
        let out = level.pop().expect("one output node");
        if out.iter().any(|v| !v.is_finite()) {
            return Err(TnmError::NonFinite("model output"));
        }
        Ok(out)
    }

    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_prediction: &FeatureVector,
    ) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_into(cache, grad_prediction.as_slice(), &mut grads)?;
        Ok(grads)
    }

    /// Adds this sample's weight gradients into `grads`. In homogeneous mode
    /// every node of a layer adds into the one shared tensor, in node order.
    pub fn backward_into(
        &self,
        cache: &ForwardCache,
        grad_prediction: &[f64],
        grads: &mut Gradients,
    ) -> Result<()> {
        self.check_cache(cache)?;
        if grad_prediction.len() != self.topology.d {
            return Err(TnmError::Shape {
                axis: "prediction",
                expected: self.topology.d,
                got: grad_prediction.len(),
            });
        }
        if grads.layers.len() != DEPTH
            || grads.layers.iter().zip(&self.layers).any(|(g, w)| {
                g.len() != w.len() || g.iter().zip(w).any(|(a, b)| a.dims() != b.dims())
            })
        {
            return Err(TnmError::Invariant(
                "gradient buffers do not mirror the model".into(),
            ));
        }

        let mut upstream: Vec<Vec<f64>> = vec![grad_prediction.to_vec()];
        for layer in (1..=DEPTH).rev() {
            let count = LAYER_NODE_COUNTS[layer];
            let below_dim = if layer == 1 {
                self.topology.d
            } else {
                self.topology.bond
            };
            let mut below = vec![vec![0.0; below_dim]; count + ARITY - 1];
            for j in 0..count {
                let node = &cache.nodes[layer - 1][j];
                let mut up = upstream[j].clone();
                if layer < DEPTH {
                    for (u, t) in up.iter_mut().zip(node.post_activation.as_slice()) {
                        *u *= self.activation.derivative_from_output(*t);
                    }
                }
                let w = self.tensor(layer, j);
                let slot = match self.mode {
                    ParamMode::Homogeneous => 0,
                    ParamMode::Inhomogeneous => j,
                };
                let gw = grads.layers[layer - 1][slot].values_mut();
                let (lo, hi) = below.split_at_mut(j + 1);
                let (mid, rest) = hi.split_at_mut(1);
                contract3_backward_acc(
                    w,
                    node.inputs[0].as_slice(),
                    node.inputs[1].as_slice(),
                    node.inputs[2].as_slice(),
                    &up,
                    gw,
                    &mut lo[j],
                    &mut mid[0],
                    &mut rest[0],
                );
            }
            upstream = below;
        }
        Ok(())
    }

    fn check_cache(&self, cache: &ForwardCache) -> Result<()> {
        let ok = cache.nodes.len() == DEPTH
            && cache.nodes.iter().enumerate().all(|(i, level)| {
                let layer = i + 1;
                level.len() == LAYER_NODE_COUNTS[layer]
                    && level.iter().enumerate().all(|(j, c)| {
                        let [m, n, o, p] = self.tensor(layer, j).dims();
                        c.pre_activation.len() == m
                            && c.post_activation.len() == m
                            && c.inputs[0].len() == n
                            && c.inputs[1].len() == o
                            && c.inputs[2].len() == p
                    })
            });
        if ok {
            Ok(())
        } else {
            Err(TnmError::Invariant(
                "forward cache does not match model".into(),
            ))
        }
    }

    /// Self-contained JSON model document including the scaler.
    pub fn serialize(&self, scaler: &Scaler) -> Result<String> {
        let doc = ModelDocument {
            format_version: FORMAT_VERSION,
            kind: "tnm".into(),
            d: self.topology.d,
            bond_dim: self.topology.bond,
            mode: self.mode,
            activation: self.activation,
            seed: self.seed,
            scaler: *scaler,
            layers: self
                .layers
                .iter()
                .map(|l| {
                    l.iter()
                        .map(|t| TensorDocument {
                            dims: t.dims(),
                            values: t.values().to_vec(),
                        })
                        .collect()
                })
                .collect(),
        };
        to_json_string(&doc)
    }

    pub fn deserialize(text: &str) -> Result<(TnmModel, Scaler)> {
        let raw: serde_json::Value = serde_json::from_str(text)?;
        let version = raw
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| TnmError::Deserialize("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(TnmError::Version {
                found: u32::try_from(version).unwrap_or(u32::MAX),
                expected: FORMAT_VERSION,
            });
        }
        let doc: ModelDocument = serde_json::from_value(raw)?;
        if doc.kind != "tnm" {
            return Err(TnmError::Deserialize(format!(
                "unexpected kind `{}`",
                doc.kind
            )));
        }
        doc.scaler.validate()?;
        let layers = doc
            .layers
            .into_iter()
            .map(|l| {
                l.into_iter()
                    .map(|t| WeightTensor4::new(t.dims, t.values))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| TnmError::Deserialize(e.to_string()))?;
        let model = TnmModel::from_weights(doc.d, doc.bond_dim, doc.mode, doc.seed, layers)
            .map_err(|e| TnmError::Deserialize(e.to_string()))?
            .with_activation(doc.activation);
        Ok((model, doc.scaler))
    }
}

fn init_bound(dims: [usize; 4]) -> f64 {
    let fan_in = (dims[1] * dims[2] * dims[3]) as f64;
    fan_in.powf(-0.5)
}

/// `D d^3 + D^4 + d D^3` tied, `5 D d^3 + 3 D^4 + d D^3` untied.
pub fn param_count(d: usize, bond: usize, mode: ParamMode) -> usize {
    let (l1, l2, l3) = (bond * d.pow(3), bond.pow(4), d * bond.pow(3));
    match mode {
        ParamMode::Homogeneous => l1 + l2 + l3,
        ParamMode::Inhomogeneous => 5 * l1 + 3 * l2 + l3,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    format_version: u32,
    kind: String,
    d: usize,
    #[serde(rename = "D")]
    bond_dim: usize,
    mode: ParamMode,
    #[serde(default)]
    activation: Activation,
    seed: u64,
    scaler: Scaler,
    layers: Vec<Vec<TensorDocument>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorDocument {
    dims: [usize; 4],
    values: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn constant_model(d: usize, bond: usize, value: f64) -> TnmModel {
        let mut m = TnmModel::build(d, bond, ParamMode::Inhomogeneous, 0)
            .unwrap()
            .with_activation(Activation::Tanh);
        m.tensors_mut().for_each(|t| t.values_mut().fill(value));
        m
    }

    #[test]
    fn build_is_deterministic() {
        for mode in [ParamMode::Homogeneous, ParamMode::Inhomogeneous] {
            assert_eq!(
                TnmModel::build(3, 4, mode, 9).unwrap(),
                TnmModel::build(3, 4, mode, 9).unwrap()
            );
        }
        assert_ne!(
            TnmModel::build(3, 4, ParamMode::Homogeneous, 1).unwrap(),
            TnmModel::build(3, 4, ParamMode::Homogeneous, 2).unwrap()
        );
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let m = TnmModel::build(3, 8, ParamMode::Inhomogeneous, 5).unwrap();
        assert_eq!(m.layers()[0][0].len(), 216);
        assert!((init_bound([8, 3, 3, 3]) - 0.19245008972987526).abs() < 1e-15);
        for (i, layer) in m.layers().iter().enumerate() {
            let bound = init_bound(m.topology().layer_shape(i + 1));
            for t in layer {
                assert!(t.values().iter().all(|v| v.abs() <= bound));
            }
        }
    }

    #[test]
    fn shapes_and_counts() {
        let t = Topology::new(3, 8).unwrap();
        assert_eq!(t.layer_node_counts(), [7, 5, 3, 1]);
        for l in 1..=DEPTH {
            assert_eq!(LAYER_NODE_COUNTS[l], LAYER_NODE_COUNTS[l - 1] - (ARITY - 1));
        }
        assert_eq!(t.layer_shape(1), [8, 3, 3, 3]);
        assert_eq!(t.layer_shape(2), [8, 8, 8, 8]);
        assert_eq!(t.layer_shape(3), [3, 8, 8, 8]);
        assert!(Topology::new(0, 2).is_err());
    }

    #[test]
    fn param_counts() {
        assert_eq!(param_count(3, 8, ParamMode::Homogeneous), 5848);
        assert_eq!(param_count(3, 8, ParamMode::Inhomogeneous), 14904);
        assert_eq!(param_count(1, 1, ParamMode::Homogeneous), 3);
        for mode in [ParamMode::Homogeneous, ParamMode::Inhomogeneous] {
            for (d, b) in [(1, 1), (2, 3), (3, 8)] {
                assert_eq!(
                    TnmModel::build(d, b, mode, 0).unwrap().param_count(),
                    param_count(d, b, mode)
                );
            }
        }
    }

    #[test]
    fn zero_weights_give_zero_prediction() {
        let m = constant_model(3, 4, 0.0);
        let window = vec![fv(&[0.3, -1.0, 2.0]); 7];
        let (pred, _) = m.forward(&window).unwrap();
        assert_eq!(pred.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn scalar_model_by_hand() {
        let m = constant_model(1, 1, 1.0);
        let (pred, _) = m.forward(&vec![fv(&[0.0]); 7]).unwrap();
        assert_eq!(pred.as_slice(), &[0.0]);

        let (pred, cache) = m.forward(&vec![fv(&[1.0]); 7]).unwrap();
        let l1 = 1.0f64.tanh();
        let l2 = (l1 * l1 * l1).tanh();
        assert!(
            (cache.nodes[0][0].post_activation.as_slice()[0] - 0.7615941559557649).abs() < 1e-15
        );
        assert!((l2 - 0.415089122806911).abs() < 1e-14);
        assert!((pred.as_slice()[0] - l2.powi(3)).abs() < 1e-15);
        assert!((pred.as_slice()[0] - 0.07151943241584766).abs() < 1e-15);
        assert_eq!(m.predict(&vec![vec![1.0]; 7]).unwrap(), pred.as_slice());
    }

    #[test]
    fn forward_shape_errors() {
        let m = TnmModel::build(3, 2, ParamMode::Homogeneous, 0).unwrap();
        assert!(matches!(
            m.forward(&vec![fv(&[0.0, 0.0, 0.0]); 6]),
            Err(TnmError::Shape { axis: "window", .. })
        ));
        assert!(matches!(
            m.forward(&vec![fv(&[0.0, 0.0]); 7]),
            Err(TnmError::Shape {
                axis: "feature",
                ..
            })
        ));
    }

    #[test]
    fn backward_rejects_foreign_cache() {
        let small = TnmModel::build(2, 2, ParamMode::Homogeneous, 0).unwrap();
        let big = TnmModel::build(2, 3, ParamMode::Homogeneous, 0).unwrap();
        let (_, cache) = small.forward(&vec![fv(&[0.1, 0.2]); 7]).unwrap();
        assert!(matches!(
            big.backward(&cache, &fv(&[1.0, 1.0])),
            Err(TnmError::Invariant(_))
        ));
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let m = TnmModel::build(2, 3, ParamMode::Inhomogeneous, 4).unwrap();
        let (_, cache) = m.forward(&vec![fv(&[0.1, -0.2]); 7]).unwrap();
        let g = m.backward(&cache, &FeatureVector::zeros(2)).unwrap();
        assert!(g.tensors().all(|t| t.values().iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn untied_forward_is_bitwise_equal() {
        let hom = TnmModel::build(3, 4, ParamMode::Homogeneous, 21).unwrap();
        let inh = hom.untied();
        assert_eq!(inh.mode(), ParamMode::Inhomogeneous);
        let window: Vec<FeatureVector> = (0..7)
            .map(|k| fv(&[0.1 * k as f64, -0.3, 0.05 * k as f64]))
            .collect();
        let (a, _) = hom.forward(&window).unwrap();
        let (b, _) = inh.forward(&window).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn from_weights_validates() {
        let m = TnmModel::build(2, 2, ParamMode::Inhomogeneous, 0).unwrap();
        let layers = m.layers().to_vec();
        assert!(TnmModel::from_weights(2, 2, ParamMode::Homogeneous, 0, layers.clone()).is_err());
        assert!(TnmModel::from_weights(2, 3, ParamMode::Inhomogeneous, 0, layers.clone()).is_err());
        assert!(TnmModel::from_weights(2, 2, ParamMode::Inhomogeneous, 0, layers).is_ok());
    }

    #[test]
    fn serialization_round_trip_and_rejections() {
        let m = TnmModel::build(3, 3, ParamMode::Inhomogeneous, 77)
            .unwrap()
            .with_activation(Activation::Tanh);
        let sc = Scaler {
            mean: [0.1, -0.2, 23.5],
            std: [7.9, 9.0, 8.6],
        };
        let text = m.serialize(&sc).unwrap();
        let (back, sc2) = TnmModel::deserialize(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(sc2, sc);
        for (a, b) in back.tensors().zip(m.tensors()) {
            assert!(a
                .values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| x.to_bits() == y.to_bits()));
        }

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["format_version"] = 2.into();
        assert!(matches!(
            TnmModel::deserialize(&doc.to_string()),
            Err(TnmError::Version {
                found: 2,
                expected: 1
            })
        ));

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["layers"][0][0]["dims"][0] = 4.into();
        assert!(matches!(
            TnmModel::deserialize(&doc.to_string()),
            Err(TnmError::Deserialize(_))
        ));

        let mut doc: serde_json::Value = serde_json::from_str(&text).unwrap();
        doc["extra"] = 1.into();
        assert!(TnmModel::deserialize(&doc.to_string()).is_err());
    }
}
