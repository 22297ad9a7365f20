//! Rank-4 weight tensors and the three-input multilinear contraction that
//! every node of the tree performs.
//!
//! A node at level `l` combines three adjacent vectors from level `l - 1`:
//!
//! ```text
//! out[m] = sum_{n,o,p} w[m, n, o, p] * a[n] * b[o] * c[p]
//! ```
//!
//! Hidden nodes then apply `tanh`; the output node does not. Contraction and
//! activation are kept as separate operations for that reason.

use crate::error::{Result, TnmError};
use serde::{Deserialize, Serialize};

/// A node vector. Length is `d` at the input layer and `D` at hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(TnmError::Shape {
                axis: "feature",
                expected: 1,
                got: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TnmError::NonFinite("feature vector"));
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Dense rank-4 tensor `w[m, n, o, p]` stored row-major, so the flat index is
/// `((m * n_dim + n) * o_dim + o) * p_dim + p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightTensor4 {
    dims: [usize; 4],
    values: Vec<f64>,
}

impl WeightTensor4 {
    pub fn new(dims: [usize; 4], values: Vec<f64>) -> Result<Self> {
        if let Some(axis) = dims.iter().position(|&d| d == 0) {
            return Err(TnmError::Shape {
                axis: AXIS_NAMES[axis],
                expected: 1,
                got: 0,
            });
        }
        let expected = dims.iter().product();
        if values.len() != expected {
            return Err(TnmError::Shape {
                axis: "values",
                expected,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(TnmError::NonFinite("weight tensor"));
        }
        Ok(Self { dims, values })
    }

    pub fn zeros(dims: [usize; 4]) -> Self {
        Self {
            dims,
            values: vec![0.0; dims.iter().product()],
        }
    }

    pub fn dims(&self) -> [usize; 4] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn index(&self, m: usize, n: usize, o: usize, p: usize) -> usize {
        let [_, nd, od, pd] = self.dims;
        ((m * nd + n) * od + o) * pd + p
    }

    pub fn get(&self, m: usize, n: usize, o: usize, p: usize) -> f64 {
        self.values[self.index(m, n, o, p)]
    }

    fn check_inputs(&self, a: &[f64], b: &[f64], c: &[f64]) -> Result<()> {
        let [_, nd, od, pd] = self.dims;
        for (axis, want, got) in [("n", nd, a.len()), ("o", od, b.len()), ("p", pd, c.len())] {
            if want != got {
                return Err(TnmError::Shape {
                    axis,
                    expected: want,
                    got,
                });
            }
        }
        Ok(())
    }
}

const AXIS_NAMES: [&str; 4] = ["m", "n", "o", "p"];

/// Pre-activation output of one node: `sum_{n,o,p} w[m,n,o,p] a[n] b[o] c[p]`.
pub fn contract3(
    w: &WeightTensor4,
    a: &FeatureVector,
    b: &FeatureVector,
    c: &FeatureVector,
) -> Result<FeatureVector> {
    w.check_inputs(a.as_slice(), b.as_slice(), c.as_slice())?;
    let mut out = vec![0.0; w.dims[0]];
    contract3_into(w, a.as_slice(), b.as_slice(), c.as_slice(), &mut out);
    Ok(FeatureVector(out))
}

/// Unchecked contraction into `out`. Callers guarantee the shapes.
pub(crate) fn contract3_into(w: &WeightTensor4, a: &[f64], b: &[f64], c: &[f64], out: &mut [f64]) {
    let [md, nd, od, pd] = w.dims;
    let vals = &w.values;
    for (m, slot) in out.iter_mut().enumerate().take(md) {
        let mut acc_m = 0.0;
        for (n, &an) in a.iter().enumerate().take(nd) {
            let mut acc_n = 0.0;
            for (o, &bo) in b.iter().enumerate().take(od) {
                let base = ((m * nd + n) * od + o) * pd;
                let row = &vals[base..base + pd];
                let inner: f64 = row.iter().zip(c).map(|(wv, cv)| wv * cv).sum();
                acc_n += bo * inner;
            }
            acc_m += an * acc_n;
        }
        *slot = acc_m;
    }
}

/// Nonlinearity applied after every hidden contraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    /// Logistic sigmoid, `1 / (1 + e^{-x})`.
    #[default]
    Sigmoid,
}

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
        }
    }

    /// Derivative expressed through the activation's output `t`.
    #[inline]
    pub fn derivative_from_output(self, t: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - t * t,
            Activation::Sigmoid => t * (1.0 - t),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = TnmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" | "logistic" => Ok(Activation::Sigmoid),
            other => Err(TnmError::Config(format!("unknown activation `{other}`"))),
        }
    }
}

/// Elementwise `tanh`.
pub fn activation(x: &FeatureVector) -> Result<FeatureVector> {
    if x.0.iter().any(|v| !v.is_finite()) {
        return Err(TnmError::NonFinite("activation input"));
    }
    Ok(FeatureVector(x.0.iter().map(|v| v.tanh()).collect()))
}

/// `1 - t^2`, the derivative of `tanh` written in terms of its output `t`.
pub fn activation_derivative(post: &FeatureVector) -> FeatureVector {
    FeatureVector(post.0.iter().map(|t| 1.0 - t * t).collect())
}

/// Gradients of [`contract3`] with respect to its four operands.
#[derive(Debug, Clone, PartialEq)]
pub struct Contract3Grads {
    pub w: WeightTensor4,
    pub a: FeatureVector,
    pub b: FeatureVector,
    pub c: FeatureVector,
}

pub fn contract3_backward(
    w: &WeightTensor4,
    a: &FeatureVector,
    b: &FeatureVector,
    c: &FeatureVector,
    upstream: &FeatureVector,
) -> Result<Contract3Grads> {
    w.check_inputs(a.as_slice(), b.as_slice(), c.as_slice())?;
    if upstream.len() != w.dims[0] {
        return Err(TnmError::Shape {
            axis: "m",
            expected: w.dims[0],
            got: upstream.len(),
        });
    }
    let [_, nd, od, pd] = w.dims;
    let mut gw = WeightTensor4::zeros(w.dims);
    let mut ga = vec![0.0; nd];
    let mut gb = vec![0.0; od];
    let mut gc = vec![0.0; pd];
    contract3_backward_acc(
        w,
        a.as_slice(),
        b.as_slice(),
        c.as_slice(),
        upstream.as_slice(),
        gw.values_mut(),
        &mut ga,
        &mut gb,
        &mut gc,
    );
    Ok(Contract3Grads {
        w: gw,
        a: FeatureVector(ga),
        b: FeatureVector(gb),
        c: FeatureVector(gc),
    })
}

/// Accumulating backward pass: adds the gradient contributions into the
/// supplied buffers instead of overwriting them. Shapes are not checked.
#[allow(clippy::too_many_arguments)]
pub(crate) fn contract3_backward_acc(
    w: &WeightTensor4,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    upstream: &[f64],
    gw: &mut [f64],
    ga: &mut [f64],
    gb: &mut [f64],
    gc: &mut [f64],
) {
    let [md, nd, od, pd] = w.dims;
    let vals = &w.values;
    for m in 0..md {
        let um = upstream[m];
        if um == 0.0 {
            continue;
        }
        for n in 0..nd {
            let uan = um * a[n];
            for o in 0..od {
                let base = ((m * nd + n) * od + o) * pd;
                let row = &vals[base..base + pd];
                let grow = &mut gw[base..base + pd];
                let uabo = uan * b[o];
                let mut inner = 0.0;
                for p in 0..pd {
                    inner += row[p] * c[p];
                    grow[p] += uabo * c[p];
                    gc[p] += uabo * row[p];
                }
                ga[n] += um * b[o] * inner;
                gb[o] += uan * inner;
            }
        }
    }
}
