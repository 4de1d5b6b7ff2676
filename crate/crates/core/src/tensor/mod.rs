//! A minimal dense tensor engine with reverse-mode automatic differentiation.
//!
//! Tensors live inside a [`Graph`] tape: every operation appends a node that
//! records its parents and whatever forward context backward needs, so parents
//! always precede children and the graph is acyclic by construction.
//! [`Graph::backward`] walks the tape once in reverse creation order and
//! accumulates gradients additively into every node that requires them.
//!
//! The element type is generic: `f32` is the working precision of the
//! artifact, `f64` exists for finite-difference gradient checking. All
//! reductions run in a fixed order, so identical inputs produce bitwise
//! identical outputs.

mod conv;
mod gemm;
mod norm;

pub use norm::{BN_EPS, BN_MOMENTUM};

use crate::error::{Error, Result};
use conv::Vol;

/// Element type of the engine.
pub trait Scalar:
    num_traits::Float
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + Default
    + Send
    + Sync
    + 'static
{
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Probability clamp for BCE on raw probabilities.
    fn bce_eps() -> Self;
}

impl Scalar for f32 {
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
    fn bce_eps() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn from_f64(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
    fn bce_eps() -> Self {
        1e-12
    }
}

/// Handle to a tensor stored in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TensorId(usize);

/// Forward/normalization mode of a network pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryKind {
    Neg,
    Relu,
    Elu,
    Sigmoid,
    Log,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryKind {
    Add,
    Sub,
    Mul,
}

enum Op<T> {
    Leaf,
    Unary {
        kind: UnaryKind,
        a: TensorId,
    },
    Binary {
        kind: BinaryKind,
        a: TensorId,
        b: TensorId,
    },
    Scale {
        a: TensorId,
        c: T,
    },
    Matmul {
        a: TensorId,
        b: TensorId,
    },
    Transpose2 {
        a: TensorId,
    },
    Reshape {
        a: TensorId,
    },
    SliceRows {
        a: TensorId,
        start: usize,
    },
    ConcatChannels {
        a: TensorId,
        b: TensorId,
    },
    RowBias {
        a: TensorId,
        bias: TensorId,
    },
    ChannelBias {
        a: TensorId,
        bias: TensorId,
    },
    Sum {
        a: TensorId,
    },
    Mean {
        a: TensorId,
    },
    Conv2d {
        a: TensorId,
        kernel: TensorId,
        stride: usize,
        pad: usize,
    },
    Conv3d {
        a: TensorId,
        kernel: TensorId,
        stride: usize,
        pad: usize,
    },
    ConvTranspose3d {
        a: TensorId,
        kernel: TensorId,
        stride: usize,
        pad: usize,
    },
    BatchNorm {
        a: TensorId,
        gamma: TensorId,
        beta: TensorId,
        saved: norm::BnSaved<T>,
        train: bool,
    },
    Grl {
        a: TensorId,
        lambda: T,
    },
    BceLogits {
        z: TensorId,
        targets: Vec<T>,
    },
    BceProbs {
        p: TensorId,
        targets: Vec<T>,
    },
    CrossEntropy {
        z: TensorId,
        labels: Vec<usize>,
        softmax: Vec<T>,
    },
}

/// One tape entry: the tensor value plus the operation that produced it.
struct TensorNode<T> {
    shape: Vec<usize>,
    data: Vec<T>,
    requires_grad: bool,
    grad: Option<Vec<T>>,
    op: Op<T>,
}

/// Computation tape. Nodes are appended in topological creation order;
/// parents of node `i` always have index `< i`.
pub struct Graph<T: Scalar> {
    nodes: Vec<TensorNode<T>>,
}

impl<T: Scalar> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

impl<T: Scalar> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<T>, requires_grad: bool, op: Op<T>) -> TensorId {
        debug_assert_eq!(numel(&shape), data.len());
        let id = TensorId(self.nodes.len());
        self.nodes.push(TensorNode {
            shape,
            data,
            requires_grad,
            grad: None,
            op,
        });
        id
    }

    fn node(&self, id: TensorId) -> &TensorNode<T> {
        &self.nodes[id.0]
    }

    fn needs_grad(&self, id: TensorId) -> bool {
        self.nodes[id.0].requires_grad
    }

    /// Insert a leaf tensor.
    pub fn leaf(&mut self, data: Vec<T>, shape: &[usize], requires_grad: bool) -> Result<TensorId> {
        if shape.iter().any(|&e| e == 0) {
            return Err(Error::invalid("leaf", format!("zero extent in {shape:?}")));
        }
        if numel(shape) != data.len() {
            return Err(Error::invalid(
                "leaf",
                format!("shape {shape:?} wants {} values, got {}", numel(shape), data.len()),
            ));
        }
        Ok(self.push(shape.to_vec(), data, requires_grad, Op::Leaf))
    }

    /// Insert a non-differentiable constant.
    pub fn constant(&mut self, data: Vec<T>, shape: &[usize]) -> Result<TensorId> {
        self.leaf(data, shape, false)
    }

    /// Insert a scalar constant of shape `[1]`.
    pub fn scalar(&mut self, v: T) -> TensorId {
        self.push(vec![1], vec![v], false, Op::Leaf)
    }

    pub fn shape(&self, id: TensorId) -> &[usize] {
        &self.node(id).shape
    }

    pub fn data(&self, id: TensorId) -> &[T] {
        &self.node(id).data
    }

    pub fn grad(&self, id: TensorId) -> Option<&[T]> {
        self.node(id).grad.as_deref()
    }

    /// Value of a single-element tensor.
    pub fn value(&self, id: TensorId) -> T {
        debug_assert_eq!(self.node(id).data.len(), 1);
        self.node(id).data[0]
    }

    // ------------------------------------------------------- elementwise --

    fn unary(&mut self, kind: UnaryKind, a: TensorId) -> TensorId {
        let an = self.node(a);
        let data: Vec<T> = match kind {
            UnaryKind::Neg => an.data.iter().map(|&v| -v).collect(),
            UnaryKind::Relu => an.data.iter().map(|&v| v.max(T::zero())).collect(),
            UnaryKind::Elu => an
                .data
                .iter()
                .map(|&v| if v > T::zero() { v } else { v.exp() - T::one() })
                .collect(),
            UnaryKind::Sigmoid => an.data.iter().map(|&v| sigmoid(v)).collect(),
            UnaryKind::Log => an.data.iter().map(|&v| v.ln()).collect(),
            UnaryKind::Exp => an.data.iter().map(|&v| v.exp()).collect(),
        };
        let shape = an.shape.clone();
        let rg = an.requires_grad;
        self.push(shape, data, rg, Op::Unary { kind, a })
    }

    pub fn neg(&mut self, a: TensorId) -> TensorId {
        self.unary(UnaryKind::Neg, a)
    }
    pub fn relu(&mut self, a: TensorId) -> TensorId {
        self.unary(UnaryKind::Relu, a)
    }
    /// ELU with alpha fixed at 1.
    pub fn elu(&mut self, a: TensorId) -> TensorId {
        self.unary(UnaryKind::Elu, a)
    }
    pub fn sigmoid(&mut self, a: TensorId) -> TensorId {
        self.unary(UnaryKind::Sigmoid, a)
    }
    pub fn log(&mut self, a: TensorId) -> TensorId {
        self.unary(UnaryKind::Log, a)
    }
    pub fn exp(&mut self, a: TensorId) -> TensorId {
        self.unary(UnaryKind::Exp, a)
    }

    fn binary(&mut self, kind: BinaryKind, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (an, bn) = (self.node(a), self.node(b));
        let a_scalar = an.data.len() == 1;
        let b_scalar = bn.data.len() == 1;
        if an.shape != bn.shape && !a_scalar && !b_scalar {
            return Err(Error::ShapeMismatch {
                op: "elementwise",
                left: an.shape.clone(),
                right: bn.shape.clone(),
            });
        }
        let out_shape = if a_scalar && !b_scalar {
            bn.shape.clone()
        } else {
            an.shape.clone()
        };
        let n = numel(&out_shape);
        let mut data = Vec::with_capacity(n);
        let apply = |x: T, y: T| match kind {
            BinaryKind::Add => x + y,
            BinaryKind::Sub => x - y,
            BinaryKind::Mul => x * y,
        };
        match (a_scalar && n > 1, b_scalar && n > 1) {
            (true, _) => {
                let av = an.data[0];
                data.extend(bn.data.iter().map(|&y| apply(av, y)));
            }
            (_, true) => {
                let bv = bn.data[0];
                data.extend(an.data.iter().map(|&x| apply(x, bv)));
            }
            _ => data.extend(an.data.iter().zip(&bn.data).map(|(&x, &y)| apply(x, y))),
        }
        let rg = an.requires_grad || bn.requires_grad;
        Ok(self.push(out_shape, data, rg, Op::Binary { kind, a, b }))
    }

    pub fn add(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryKind::Add, a, b)
    }
    pub fn sub(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryKind::Sub, a, b)
    }
    pub fn mul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        self.binary(BinaryKind::Mul, a, b)
    }

    /// Multiply by a compile-time constant.
    pub fn scale(&mut self, a: TensorId, c: T) -> TensorId {
        let an = self.node(a);
        let data: Vec<T> = an.data.iter().map(|&v| v * c).collect();
        let shape = an.shape.clone();
        let rg = an.requires_grad;
        self.push(shape, data, rg, Op::Scale { a, c })
    }

    // ------------------------------------------------------ shape moves --

    pub fn matmul(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (an, bn) = (self.node(a), self.node(b));
        if an.shape.len() != 2 || bn.shape.len() != 2 || an.shape[1] != bn.shape[0] {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: an.shape.clone(),
                right: bn.shape.clone(),
            });
        }
        let (m, k, n) = (an.shape[0], an.shape[1], bn.shape[1]);
        let mut data = vec![T::zero(); m * n];
        gemm::gemm_nn(&an.data, &bn.data, &mut data, m, k, n);
        let rg = an.requires_grad || bn.requires_grad;
        Ok(self.push(vec![m, n], data, rg, Op::Matmul { a, b }))
    }

    pub fn transpose2(&mut self, a: TensorId) -> Result<TensorId> {
        let an = self.node(a);
        if an.shape.len() != 2 {
            return Err(Error::invalid(
                "transpose2",
                format!("expected rank 2, got {:?}", an.shape),
            ));
        }
        let (m, n) = (an.shape[0], an.shape[1]);
        let mut data = vec![T::zero(); m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = an.data[i * n + j];
            }
        }
        let rg = an.requires_grad;
        Ok(self.push(vec![n, m], data, rg, Op::Transpose2 { a }))
    }

    pub fn reshape(&mut self, a: TensorId, shape: &[usize]) -> Result<TensorId> {
        let an = self.node(a);
        if numel(shape) != an.data.len() {
            return Err(Error::ShapeMismatch {
                op: "reshape",
                left: an.shape.clone(),
                right: shape.to_vec(),
            });
        }
        let data = an.data.clone();
        let rg = an.requires_grad;
        Ok(self.push(shape.to_vec(), data, rg, Op::Reshape { a }))
    }

    /// Contiguous slice along axis 0.
    pub fn slice_rows(&mut self, a: TensorId, start: usize, len: usize) -> Result<TensorId> {
        let an = self.node(a);
        if an.shape.is_empty() || len == 0 || start + len > an.shape[0] {
            return Err(Error::invalid(
                "slice_rows",
                format!("rows {start}..{} out of {:?}", start + len, an.shape),
            ));
        }
        let row = numel(&an.shape[1..]);
        let data = an.data[start * row..(start + len) * row].to_vec();
        let mut shape = an.shape.clone();
        shape[0] = len;
        let rg = an.requires_grad;
        Ok(self.push(shape, data, rg, Op::SliceRows { a, start }))
    }

    /// Concatenate two [N,C,...] tensors along the channel axis.
    pub fn concat_channels(&mut self, a: TensorId, b: TensorId) -> Result<TensorId> {
        let (an, bn) = (self.node(a), self.node(b));
        let ok = an.shape.len() >= 2
            && an.shape.len() == bn.shape.len()
            && an.shape[0] == bn.shape[0]
            && an.shape[2..] == bn.shape[2..];
        if !ok {
            return Err(Error::ShapeMismatch {
                op: "concat_channels",
                left: an.shape.clone(),
                right: bn.shape.clone(),
            });
        }
        let n = an.shape[0];
        let (ca, cb) = (an.shape[1], bn.shape[1]);
        let inner = numel(&an.shape[2..]);
        let mut data = Vec::with_capacity((ca + cb) * n * inner);
        for i in 0..n {
            data.extend_from_slice(&an.data[i * ca * inner..(i + 1) * ca * inner]);
            data.extend_from_slice(&bn.data[i * cb * inner..(i + 1) * cb * inner]);
        }
        let mut shape = an.shape.clone();
        shape[1] = ca + cb;
        let rg = an.requires_grad || bn.requires_grad;
        Ok(self.push(shape, data, rg, Op::ConcatChannels { a, b }))
    }

    /// y[i,j] = x[i,j] + bias[j] for x of shape [n,m].
    pub fn add_row_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        let (an, bn) = (self.node(a), self.node(bias));
        if an.shape.len() != 2 || bn.shape != [an.shape[1]] {
            return Err(Error::ShapeMismatch {
                op: "add_row_bias",
                left: an.shape.clone(),
                right: bn.shape.clone(),
            });
        }
        let m = an.shape[1];
        let mut data = Vec::with_capacity(an.data.len());
        for row in an.data.chunks_exact(m) {
            data.extend(row.iter().zip(&bn.data).map(|(&x, &b)| x + b));
        }
        let shape = an.shape.clone();
        let rg = an.requires_grad || bn.requires_grad;
        Ok(self.push(shape, data, rg, Op::RowBias { a, bias }))
    }

    /// y[n,c,...] = x[n,c,...] + bias[c] for x of rank >= 3.
    pub fn add_channel_bias(&mut self, a: TensorId, bias: TensorId) -> Result<TensorId> {
        let (an, bn) = (self.node(a), self.node(bias));
        if an.shape.len() < 3 || bn.shape != [an.shape[1]] {
            return Err(Error::ShapeMismatch {
                op: "add_channel_bias",
                left: an.shape.clone(),
                right: bn.shape.clone(),
            });
        }
        let c = an.shape[1];
        let sp = numel(&an.shape[2..]);
        let mut data = an.data.clone();
        for chunk in data.chunks_exact_mut(c * sp) {
            for (ch, &b) in bn.data.iter().enumerate() {
                for v in &mut chunk[ch * sp..(ch + 1) * sp] {
                    *v += b;
                }
            }
        }
        let shape = an.shape.clone();
        let rg = an.requires_grad || bn.requires_grad;
        Ok(self.push(shape, data, rg, Op::ChannelBias { a, bias }))
    }

    // ------------------------------------------------------- reductions --

    pub fn sum(&mut self, a: TensorId) -> TensorId {
        let an = self.node(a);
        let s: T = an.data.iter().copied().sum();
        let rg = an.requires_grad;
        self.push(vec![1], vec![s], rg, Op::Sum { a })
    }

    pub fn mean(&mut self, a: TensorId) -> TensorId {
        let an = self.node(a);
        let s: T = an.data.iter().copied().sum();
        let m = s / T::from_f64(an.data.len() as f64);
        let rg = an.requires_grad;
        self.push(vec![1], vec![m], rg, Op::Mean { a })
    }

    // ----------------------------------------------------- convolutions --

    pub fn conv2d(
        &mut self,
        a: TensorId,
        kernel: TensorId,
        stride: usize,
        pad: usize,
    ) -> Result<TensorId> {
        let (an, kn) = (self.node(a), self.node(kernel));
        if an.shape.len() != 4 || kn.shape.len() != 4 || an.shape[1] != kn.shape[1] {
            return Err(Error::ShapeMismatch {
                op: "conv2d",
                left: an.shape.clone(),
                right: kn.shape.clone(),
            });
        }
        let (n, c, h, w) = (an.shape[0], an.shape[1], an.shape[2], an.shape[3]);
        let (f, kh, kw) = (kn.shape[0], kn.shape[2], kn.shape[3]);
        let oh = conv::conv_out_extent(h, kh, stride, pad)?;
        let ow = conv::conv_out_extent(w, kw, stride, pad)?;
        let data = conv::conv2d_forward(
            &an.data, &kn.data, n, c, h, w, f, kh, kw, stride, pad, oh, ow,
        );
        let rg = an.requires_grad || kn.requires_grad;
        Ok(self.push(
            vec![n, f, oh, ow],
            data,
            rg,
            Op::Conv2d {
                a,
                kernel,
                stride,
                pad,
            },
        ))
    }

    pub fn conv3d(
        &mut self,
        a: TensorId,
        kernel: TensorId,
        stride: usize,
        pad: usize,
    ) -> Result<TensorId> {
        let (an, kn) = (self.node(a), self.node(kernel));
        if an.shape.len() != 5 || kn.shape.len() != 5 || an.shape[1] != kn.shape[1] {
            return Err(Error::ShapeMismatch {
                op: "conv3d",
                left: an.shape.clone(),
                right: kn.shape.clone(),
            });
        }
        let (n, c) = (an.shape[0], an.shape[1]);
        let vin = Vol {
            d: an.shape[2],
            h: an.shape[3],
            w: an.shape[4],
        };
        let f = kn.shape[0];
        let k = (kn.shape[2], kn.shape[3], kn.shape[4]);
        let vout = Vol {
            d: conv::conv_out_extent(vin.d, k.0, stride, pad)?,
            h: conv::conv_out_extent(vin.h, k.1, stride, pad)?,
            w: conv::conv_out_extent(vin.w, k.2, stride, pad)?,
        };
        let data = conv::conv3d_forward(&an.data, &kn.data, n, c, vin, f, k, stride, pad, vout);
        let rg = an.requires_grad || kn.requires_grad;
        Ok(self.push(
            vec![n, f, vout.d, vout.h, vout.w],
            data,
            rg,
            Op::Conv3d {
                a,
                kernel,
                stride,
                pad,
            },
        ))
    }

    /// Transpose 3-D convolution; kernel layout is [C_in, F_out, kd, kh, kw].
    pub fn conv_transpose3d(
        &mut self,
        a: TensorId,
        kernel: TensorId,
        stride: usize,
        pad: usize,
    ) -> Result<TensorId> {
        let (an, kn) = (self.node(a), self.node(kernel));
        if an.shape.len() != 5 || kn.shape.len() != 5 || an.shape[1] != kn.shape[0] {
            return Err(Error::ShapeMismatch {
                op: "conv_transpose3d",
                left: an.shape.clone(),
                right: kn.shape.clone(),
            });
        }
        let (n, c) = (an.shape[0], an.shape[1]);
        let vin = Vol {
            d: an.shape[2],
            h: an.shape[3],
            w: an.shape[4],
        };
        let f = kn.shape[1];
        let k = (kn.shape[2], kn.shape[3], kn.shape[4]);
        let vout = Vol {
            d: conv::conv_transpose_out_extent(vin.d, k.0, stride, pad)?,
            h: conv::conv_transpose_out_extent(vin.h, k.1, stride, pad)?,
            w: conv::conv_transpose_out_extent(vin.w, k.2, stride, pad)?,
        };
        let data =
            conv::conv_transpose3d_forward(&an.data, &kn.data, n, c, vin, f, k, stride, pad, vout);
        let rg = an.requires_grad || kn.requires_grad;
        Ok(self.push(
            vec![n, f, vout.d, vout.h, vout.w],
            data,
            rg,
            Op::ConvTranspose3d {
                a,
                kernel,
                stride,
                pad,
            },
        ))
    }

    // ------------------------------------------------------------- norm --

    /// Per-channel batch normalization of a [N,C,...] tensor.
    ///
    /// Train mode normalizes with batch statistics and updates the running
    /// buffers in place; eval mode normalizes with the running buffers.
    #[allow(clippy::too_many_arguments)]
    pub fn batchnorm(
        &mut self,
        a: TensorId,
        gamma: TensorId,
        beta: TensorId,
        mode: Mode,
        running_mean: &mut [T],
        running_var: &mut [T],
    ) -> Result<TensorId> {
        let an = self.node(a);
        if an.shape.len() < 2 {
            return Err(Error::invalid(
                "batchnorm",
                format!("expected [N,C,...], got {:?}", an.shape),
            ));
        }
        let (n, c) = (an.shape[0], an.shape[1]);
        let sp = numel(&an.shape[2..]);
        let (gn, bn) = (self.node(gamma), self.node(beta));
        if gn.shape != [c] || bn.shape != [c] || running_mean.len() != c || running_var.len() != c {
            return Err(Error::ShapeMismatch {
                op: "batchnorm",
                left: an.shape.clone(),
                right: gn.shape.clone(),
            });
        }
        if mode == Mode::Train && n < 2 {
            return Err(Error::invalid(
                "batchnorm",
                format!("train mode needs a batch of at least 2, got {n}"),
            ));
        }
        let train = mode == Mode::Train;
        let (data, saved) = if train {
            norm::bn_forward_train(&an.data, &gn.data, &bn.data, n, c, sp, running_mean, running_var)
        } else {
            norm::bn_forward_eval(&an.data, &gn.data, &bn.data, n, c, sp, running_mean, running_var)
        };
        let shape = an.shape.clone();
        let rg = an.requires_grad || gn.requires_grad || bn.requires_grad;
        Ok(self.push(
            shape,
            data,
            rg,
            Op::BatchNorm {
                a,
                gamma,
                beta,
                saved,
                train,
            },
        ))
    }

    // ------------------------------------------------------- loss heads --

    /// Gradient reversal: identity forward, `-lambda * grad` backward.
    pub fn grl(&mut self, a: TensorId, lambda: T) -> TensorId {
        let an = self.node(a);
        let data = an.data.clone();
        let shape = an.shape.clone();
        let rg = an.requires_grad;
        self.push(shape, data, rg, Op::Grl { a, lambda })
    }

    /// Mean binary cross-entropy over logits, softplus-stabilized.
    pub fn bce_with_logits(&mut self, z: TensorId, targets: &[T]) -> Result<TensorId> {
        let zn = self.node(z);
        if zn.data.len() != targets.len() {
            return Err(Error::invalid(
                "bce_with_logits",
                format!("{} logits vs {} targets", zn.data.len(), targets.len()),
            ));
        }
        let n = T::from_f64(targets.len() as f64);
        let mut total = T::zero();
        for (&v, &y) in zn.data.iter().zip(targets) {
            // max(z,0) - z*y + ln(1 + exp(-|z|))
            total += v.max(T::zero()) - v * y + (T::one() + (-v.abs()).exp()).ln();
        }
        let rg = zn.requires_grad;
        Ok(self.push(
            vec![1],
            vec![total / n],
            rg,
            Op::BceLogits {
                z,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Mean binary cross-entropy over probabilities, clamped away from {0,1}.
    pub fn bce_probs(&mut self, p: TensorId, targets: &[T]) -> Result<TensorId> {
        let pn = self.node(p);
        if pn.data.len() != targets.len() {
            return Err(Error::ShapeMismatch {
                op: "bce_probs",
                left: pn.shape.clone(),
                right: vec![targets.len()],
            });
        }
        let eps = T::bce_eps();
        let hi = T::one() - eps;
        let n = T::from_f64(targets.len() as f64);
        let mut total = T::zero();
        for (&v, &y) in pn.data.iter().zip(targets) {
            let q = v.max(eps).min(hi);
            total += -(y * q.ln() + (T::one() - y) * (T::one() - q).ln());
        }
        let rg = pn.requires_grad;
        Ok(self.push(
            vec![1],
            vec![total / n],
            rg,
            Op::BceProbs {
                p,
                targets: targets.to_vec(),
            },
        ))
    }

    /// Mean negative log-softmax at the true class, log-sum-exp stabilized.
    pub fn cross_entropy(&mut self, z: TensorId, labels: &[usize]) -> Result<TensorId> {
        let zn = self.node(z);
        if zn.shape.len() != 2 || zn.shape[0] != labels.len() {
            return Err(Error::invalid(
                "cross_entropy",
                format!("logits {:?} vs {} labels", zn.shape, labels.len()),
            ));
        }
        let k = zn.shape[1];
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::invalid(
                "cross_entropy",
                format!("label {bad} out of range for {k} classes"),
            ));
        }
        let n = labels.len();
        let mut softmax = vec![T::zero(); n * k];
        let mut total = T::zero();
        for (i, &label) in labels.iter().enumerate() {
            let row = &zn.data[i * k..(i + 1) * k];
            let m = row.iter().copied().fold(T::neg_infinity(), T::max);
            let mut denom = T::zero();
            for (j, &v) in row.iter().enumerate() {
                let e = (v - m).exp();
                softmax[i * k + j] = e;
                denom += e;
            }
            for s in &mut softmax[i * k..(i + 1) * k] {
                *s = *s / denom;
            }
            total += denom.ln() + m - row[label];
        }
        let rg = zn.requires_grad;
        Ok(self.push(
            vec![1],
            vec![total / T::from_f64(n as f64)],
            rg,
            Op::CrossEntropy {
                z,
                labels: labels.to_vec(),
                softmax,
            },
        ))
    }

    // --------------------------------------------------------- backward --

    /// Reverse accumulation from a scalar loss. Populates `grad` on every
    /// node that requires gradients; fan-out adds contributions.
    pub fn backward(&mut self, loss: TensorId) -> Result<()> {
        if self.node(loss).data.len() != 1 {
            return Err(Error::invalid(
                "backward",
                format!("loss must be scalar, got shape {:?}", self.node(loss).shape),
            ));
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        if !self.node(loss).requires_grad {
            return Ok(());
        }
        self.nodes[loss.0].grad = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            if self.nodes[i].grad.is_none() || matches!(self.nodes[i].op, Op::Leaf) {
                continue;
            }
            let contribs = self.parent_contribs(i);
            for (id, c) in contribs {
                self.accum_grad(id, c);
            }
        }
        Ok(())
    }

    fn accum_grad(&mut self, id: TensorId, contrib: Vec<T>) {
        let node = &mut self.nodes[id.0];
        debug_assert_eq!(contrib.len(), node.data.len());
        match &mut node.grad {
            Some(g) => {
                for (gv, cv) in g.iter_mut().zip(contrib) {
                    *gv += cv;
                }
            }
            None => node.grad = Some(contrib),
        }
    }

    /// Gradient contributions of node `i` to each of its parents.
    fn parent_contribs(&self, i: usize) -> Vec<(TensorId, Vec<T>)> {
        let node = &self.nodes[i];
        let g = node.grad.as_deref().expect("grad present");
        let mut out: Vec<(TensorId, Vec<T>)> = Vec::with_capacity(2);
        // Reduce a full-size gradient onto a parent that may be a broadcast scalar.
        let fit = |parent: &TensorNode<T>, v: Vec<T>| -> Vec<T> {
            if parent.data.len() == 1 && v.len() > 1 {
                vec![v.iter().copied().sum()]
            } else {
                v
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::Unary { kind, a } => {
                if self.needs_grad(*a) {
                    let an = self.node(*a);
                    let v: Vec<T> = match kind {
                        UnaryKind::Neg => g.iter().map(|&gv| -gv).collect(),
                        UnaryKind::Relu => g
                            .iter()
                            .zip(&an.data)
                            .map(|(&gv, &x)| if x > T::zero() { gv } else { T::zero() })
                            .collect(),
                        UnaryKind::Elu => g
                            .iter()
                            .zip(&an.data)
                            .zip(&node.data)
                            .map(|((&gv, &x), &y)| {
                                if x > T::zero() {
                                    gv
                                } else {
                                    gv * (y + T::one())
                                }
                            })
                            .collect(),
                        UnaryKind::Sigmoid => g
                            .iter()
                            .zip(&node.data)
                            .map(|(&gv, &y)| gv * y * (T::one() - y))
                            .collect(),
                        UnaryKind::Log => g
                            .iter()
                            .zip(&an.data)
                            .map(|(&gv, &x)| gv / x)
                            .collect(),
                        UnaryKind::Exp => g
                            .iter()
                            .zip(&node.data)
                            .map(|(&gv, &y)| gv * y)
                            .collect(),
                    };
                    out.push((*a, v));
                }
            }
            Op::Binary { kind, a, b } => {
                let (an, bn) = (self.node(*a), self.node(*b));
                let broadcast = |side: &TensorNode<T>, other: &TensorNode<T>, j: usize| -> T {
                    // value of `side` aligned with flat index j of the output
                    if side.data.len() == 1 && other.data.len() > 1 {
                        side.data[0]
                    } else {
                        side.data[j]
                    }
                };
                if self.needs_grad(*a) {
                    let v: Vec<T> = match kind {
                        BinaryKind::Add => g.to_vec(),
                        BinaryKind::Sub => g.to_vec(),
                        BinaryKind::Mul => g
                            .iter()
                            .enumerate()
                            .map(|(j, &gv)| gv * broadcast(bn, an, j))
                            .collect(),
                    };
                    out.push((*a, fit(an, v)));
                }
                if self.needs_grad(*b) {
                    let v: Vec<T> = match kind {
                        BinaryKind::Add => g.to_vec(),
                        BinaryKind::Sub => g.iter().map(|&gv| -gv).collect(),
                        BinaryKind::Mul => g
                            .iter()
                            .enumerate()
                            .map(|(j, &gv)| gv * broadcast(an, bn, j))
                            .collect(),
                    };
                    out.push((*b, fit(bn, v)));
                }
            }
            Op::Scale { a, c } => {
                if self.needs_grad(*a) {
                    out.push((*a, g.iter().map(|&gv| gv * *c).collect()));
                }
            }
            Op::Matmul { a, b } => {
                let (an, bn) = (self.node(*a), self.node(*b));
                let (m, k) = (an.shape[0], an.shape[1]);
                let n = bn.shape[1];
                if self.needs_grad(*a) {
                    let mut da = vec![T::zero(); m * k];
                    gemm::gemm_abt(g, &bn.data, &mut da, m, n, k);
                    out.push((*a, da));
                }
                if self.needs_grad(*b) {
                    let mut db = vec![T::zero(); k * n];
                    gemm::gemm_atb(&an.data, g, &mut db, m, k, n);
                    out.push((*b, db));
                }
            }
            Op::Transpose2 { a } => {
                if self.needs_grad(*a) {
                    let (n, m) = (node.shape[0], node.shape[1]);
                    let mut da = vec![T::zero(); m * n];
                    for i2 in 0..n {
                        for j2 in 0..m {
                            da[j2 * n + i2] = g[i2 * m + j2];
                        }
                    }
                    out.push((*a, da));
                }
            }
            Op::Reshape { a } => {
                if self.needs_grad(*a) {
                    out.push((*a, g.to_vec()));
                }
            }
            Op::SliceRows { a, start } => {
                if self.needs_grad(*a) {
                    let an = self.node(*a);
                    let row = numel(&an.shape[1..]);
                    let mut da = vec![T::zero(); an.data.len()];
                    da[start * row..start * row + g.len()].copy_from_slice(g);
                    out.push((*a, da));
                }
            }
            Op::ConcatChannels { a, b } => {
                let (an, bn) = (self.node(*a), self.node(*b));
                let n = an.shape[0];
                let inner = numel(&an.shape[2..]);
                let (sa, sb) = (an.shape[1] * inner, bn.shape[1] * inner);
                if self.needs_grad(*a) {
                    let mut da = Vec::with_capacity(n * sa);
                    for i2 in 0..n {
                        let base = i2 * (sa + sb);
                        da.extend_from_slice(&g[base..base + sa]);
                    }
                    out.push((*a, da));
                }
                if self.needs_grad(*b) {
                    let mut db = Vec::with_capacity(n * sb);
                    for i2 in 0..n {
                        let base = i2 * (sa + sb) + sa;
                        db.extend_from_slice(&g[base..base + sb]);
                    }
                    out.push((*b, db));
                }
            }
            Op::RowBias { a, bias } => {
                if self.needs_grad(*a) {
                    out.push((*a, g.to_vec()));
                }
                if self.needs_grad(*bias) {
                    let m = self.node(*bias).data.len();
                    let mut db = vec![T::zero(); m];
                    for row in g.chunks_exact(m) {
                        for (d, &gv) in db.iter_mut().zip(row) {
                            *d += gv;
                        }
                    }
                    out.push((*bias, db));
                }
            }
            Op::ChannelBias { a, bias } => {
                if self.needs_grad(*a) {
                    out.push((*a, g.to_vec()));
                }
                if self.needs_grad(*bias) {
                    let c = node.shape[1];
                    let sp = numel(&node.shape[2..]);
                    let mut db = vec![T::zero(); c];
                    for chunk in g.chunks_exact(c * sp) {
                        for (ch, d) in db.iter_mut().enumerate() {
                            for &gv in &chunk[ch * sp..(ch + 1) * sp] {
                                *d += gv;
                            }
                        }
                    }
                    out.push((*bias, db));
                }
            }
            Op::Sum { a } => {
                if self.needs_grad(*a) {
                    let an = self.node(*a);
                    out.push((*a, vec![g[0]; an.data.len()]));
                }
            }
            Op::Mean { a } => {
                if self.needs_grad(*a) {
                    let an = self.node(*a);
                    let s = g[0] / T::from_f64(an.data.len() as f64);
                    out.push((*a, vec![s; an.data.len()]));
                }
            }
            Op::Conv2d {
                a,
                kernel,
                stride,
                pad,
            } => {
                let (an, kn) = (self.node(*a), self.node(*kernel));
                let (n, c, h, w) = (an.shape[0], an.shape[1], an.shape[2], an.shape[3]);
                let (f, kh, kw) = (kn.shape[0], kn.shape[2], kn.shape[3]);
                let (oh, ow) = (node.shape[2], node.shape[3]);
                let (dx, dk) = conv::conv2d_backward(
                    &an.data,
                    &kn.data,
                    g,
                    n,
                    c,
                    h,
                    w,
                    f,
                    kh,
                    kw,
                    *stride,
                    *pad,
                    oh,
                    ow,
                    self.needs_grad(*a),
                    self.needs_grad(*kernel),
                );
                if let Some(dx) = dx {
                    out.push((*a, dx));
                }
                if let Some(dk) = dk {
                    out.push((*kernel, dk));
                }
            }
            Op::Conv3d {
                a,
                kernel,
                stride,
                pad,
            } => {
                let (an, kn) = (self.node(*a), self.node(*kernel));
                let (n, c) = (an.shape[0], an.shape[1]);
                let vin = Vol {
                    d: an.shape[2],
                    h: an.shape[3],
                    w: an.shape[4],
                };
                let f = kn.shape[0];
                let k = (kn.shape[2], kn.shape[3], kn.shape[4]);
                let vout = Vol {
                    d: node.shape[2],
                    h: node.shape[3],
                    w: node.shape[4],
                };
                let (dx, dk) = conv::conv3d_backward(
                    &an.data,
                    &kn.data,
                    g,
                    n,
                    c,
                    vin,
                    f,
                    k,
                    *stride,
                    *pad,
                    vout,
                    self.needs_grad(*a),
                    self.needs_grad(*kernel),
                );
                if let Some(dx) = dx {
                    out.push((*a, dx));
                }
                if let Some(dk) = dk {
                    out.push((*kernel, dk));
                }
            }
            Op::ConvTranspose3d {
                a,
                kernel,
                stride,
                pad,
            } => {
                let (an, kn) = (self.node(*a), self.node(*kernel));
                let (n, c) = (an.shape[0], an.shape[1]);
                let vin = Vol {
                    d: an.shape[2],
                    h: an.shape[3],
                    w: an.shape[4],
                };
                let f = kn.shape[1];
                let k = (kn.shape[2], kn.shape[3], kn.shape[4]);
                let vout = Vol {
                    d: node.shape[2],
                    h: node.shape[3],
                    w: node.shape[4],
                };
                let (dx, dk) = conv::conv_transpose3d_backward(
                    &an.data,
                    &kn.data,
                    g,
                    n,
                    c,
                    vin,
                    f,
                    k,
                    *stride,
                    *pad,
                    vout,
                    self.needs_grad(*a),
                    self.needs_grad(*kernel),
                );
                if let Some(dx) = dx {
                    out.push((*a, dx));
                }
                if let Some(dk) = dk {
                    out.push((*kernel, dk));
                }
            }
            Op::BatchNorm {
                a,
                gamma,
                beta,
                saved,
                train,
            } => {
                let an = self.node(*a);
                let gn = self.node(*gamma);
                let (n, c) = (an.shape[0], an.shape[1]);
                let sp = numel(&an.shape[2..]);
                let (dx, dgamma, dbeta) =
                    norm::bn_backward(&an.data, &gn.data, saved, g, n, c, sp, *train);
                if self.needs_grad(*a) {
                    out.push((*a, dx));
                }
                if self.needs_grad(*gamma) {
                    out.push((*gamma, dgamma));
                }
                if self.needs_grad(*beta) {
                    out.push((*beta, dbeta));
                }
            }
            Op::Grl { a, lambda } => {
                if self.needs_grad(*a) {
                    out.push((*a, g.iter().map(|&gv| -*lambda * gv).collect()));
                }
            }
            Op::BceLogits { z, targets } => {
                if self.needs_grad(*z) {
                    let zn = self.node(*z);
                    let scale = g[0] / T::from_f64(targets.len() as f64);
                    let v: Vec<T> = zn
                        .data
                        .iter()
                        .zip(targets)
                        .map(|(&zv, &y)| scale * (sigmoid(zv) - y))
                        .collect();
                    out.push((*z, v));
                }
            }
            Op::BceProbs { p, targets } => {
                if self.needs_grad(*p) {
                    let pn = self.node(*p);
                    let eps = T::bce_eps();
                    let hi = T::one() - eps;
                    let scale = g[0] / T::from_f64(targets.len() as f64);
                    let v: Vec<T> = pn
                        .data
                        .iter()
                        .zip(targets)
                        .map(|(&pv, &y)| {
                            let q = pv.max(eps).min(hi);
                            scale * (q - y) / (q * (T::one() - q))
                        })
                        .collect();
                    out.push((*p, v));
                }
            }
            Op::CrossEntropy {
                z,
                labels,
                softmax,
            } => {
                if self.needs_grad(*z) {
                    let k = self.node(*z).shape[1];
                    let scale = g[0] / T::from_f64(labels.len() as f64);
                    let mut v = vec![T::zero(); softmax.len()];
                    for (i2, &label) in labels.iter().enumerate() {
                        for j in 0..k {
                            let one_hot = if j == label { T::one() } else { T::zero() };
                            v[i2 * k + j] = scale * (softmax[i2 * k + j] - one_hot);
                        }
                    }
                    out.push((*z, v));
                }
            }
        }
        out
    }
}

/// Numerically stable logistic function.
pub fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph() -> Graph<f64> {
        Graph::new()
    }

    #[test]
    fn relu_matches_definition() {
        let mut g = graph();
        let x = g.leaf(vec![-1.0, 0.0, 2.0], &[3], false).unwrap();
        let y = g.relu(x);
        assert_eq!(g.data(y), &[0.0, 0.0, 2.0]);
    }

    #[test]
    fn sigmoid_of_zero_is_half() {
        let mut g = graph();
        let x = g.leaf(vec![0.0], &[1], false).unwrap();
        let y = g.sigmoid(x);
        assert_eq!(g.data(y), &[0.5]);
    }

    #[test]
    fn elu_is_identity_for_positive() {
        let mut g = graph();
        let x = g.leaf(vec![1.0], &[1], false).unwrap();
        let y = g.elu(x);
        assert_eq!(g.data(y), &[1.0]);
    }

    #[test]
    fn elementwise_shape_mismatch_names_both_shapes() {
        let mut g = graph();
        let a = g.leaf(vec![0.0; 6], &[2, 3], false).unwrap();
        let b = g.leaf(vec![0.0; 6], &[3, 2], false).unwrap();
        let err = g.add(a, b).unwrap_err().to_string();
        assert!(err.contains("[2, 3]") && err.contains("[3, 2]"), "{err}");
    }

    #[test]
    fn matmul_identity_and_hand_dot() {
        let mut g = graph();
        let eye = g.leaf(vec![1.0, 0.0, 0.0, 1.0], &[2, 2], false).unwrap();
        let m = g.leaf(vec![1.0, 2.0, 3.0, 4.0], &[2, 2], false).unwrap();
        let p = g.matmul(eye, m).unwrap();
        assert_eq!(g.data(p), &[1.0, 2.0, 3.0, 4.0]);

        let a = g.leaf(vec![1.0, 2.0], &[1, 2], false).unwrap();
        let b = g.leaf(vec![3.0, 4.0], &[2, 1], false).unwrap();
        let c = g.matmul(a, b).unwrap();
        assert_eq!(g.data(c), &[11.0]);
    }

    #[test]
    fn sum_backward_is_ones() {
        let mut g = graph();
        let x = g.leaf(vec![1.0, -2.0, 3.0], &[3], true).unwrap();
        let s = g.sum(x);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[1.0, 1.0, 1.0]);
    }

    #[test]
    fn square_sum_backward_is_two_x() {
        let mut g = graph();
        let x = g.leaf(vec![1.0, 2.0], &[2], true).unwrap();
        let xx = g.mul(x, x).unwrap();
        let s = g.sum(xx);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0, 4.0]);
    }

    #[test]
    fn fanout_accumulates_additively() {
        let mut g = graph();
        let x = g.leaf(vec![5.0], &[1], true).unwrap();
        let y = g.add(x, x).unwrap();
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[2.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_loss() {
        let mut g = graph();
        let x = g.leaf(vec![1.0, 2.0], &[2], true).unwrap();
        assert!(g.backward(x).is_err());
    }

    #[test]
    fn conv2d_identity_kernel() {
        let mut g = graph();
        let x: Vec<f64> = (0..9).map(|v| v as f64).collect();
        let xs = g.leaf(x.clone(), &[1, 1, 3, 3], false).unwrap();
        let k = g.leaf(vec![1.0], &[1, 1, 1, 1], false).unwrap();
        let y = g.conv2d(xs, k, 1, 0).unwrap();
        assert_eq!(g.data(y), &x[..]);
    }

    #[test]
    fn conv2d_window_sums() {
        let mut g = graph();
        let xs = g.leaf(vec![1.0; 9], &[1, 1, 3, 3], false).unwrap();
        let k = g.leaf(vec![1.0; 4], &[1, 1, 2, 2], false).unwrap();
        let y = g.conv2d(xs, k, 1, 0).unwrap();
        assert_eq!(g.shape(y), &[1, 1, 2, 2]);
        assert_eq!(g.data(y), &[4.0, 4.0, 4.0, 4.0]);
    }

    #[test]
    fn conv2d_rejects_oversized_kernel() {
        let mut g = graph();
        let xs = g.leaf(vec![1.0; 9], &[1, 1, 3, 3], false).unwrap();
        let k = g.leaf(vec![1.0; 16], &[1, 1, 4, 4], false).unwrap();
        assert!(g.conv2d(xs, k, 1, 0).is_err());
    }

    #[test]
    fn conv_transpose3d_single_tap_spread() {
        let mut g = graph();
        let xs = g.leaf(vec![3.0], &[1, 1, 1, 1, 1], false).unwrap();
        let k = g.leaf(vec![1.0; 8], &[1, 1, 2, 2, 2], false).unwrap();
        let y = g.conv_transpose3d(xs, k, 1, 0).unwrap();
        assert_eq!(g.shape(y), &[1, 1, 2, 2, 2]);
        assert_eq!(g.data(y), &[3.0; 8]);
    }

    #[test]
    fn conv_transpose3d_non_overlapping_blocks() {
        let mut g = graph();
        let xs = g.leaf(vec![1.0; 8], &[1, 1, 2, 2, 2], false).unwrap();
        let k = g.leaf(vec![1.0; 8], &[1, 1, 2, 2, 2], false).unwrap();
        let y = g.conv_transpose3d(xs, k, 2, 0).unwrap();
        assert_eq!(g.shape(y), &[1, 1, 4, 4, 4]);
        assert!(g.data(y).iter().all(|&v| v == 1.0));
    }

    #[test]
    fn batchnorm_two_point_channel() {
        let mut g = graph();
        let x = g.leaf(vec![1.0, 3.0], &[2, 1], false).unwrap();
        let gamma = g.leaf(vec![1.0], &[1], false).unwrap();
        let beta = g.leaf(vec![0.0], &[1], false).unwrap();
        let mut rm = vec![0.0];
        let mut rv = vec![1.0];
        let y = g
            .batchnorm(x, gamma, beta, Mode::Train, &mut rm, &mut rv)
            .unwrap();
        let d = g.data(y);
        assert!((d[0] + 1.0).abs() < 1e-4 && (d[1] - 1.0).abs() < 1e-4, "{d:?}");
        // running stats moved toward the batch
        assert!((rm[0] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn batchnorm_zero_gamma_gives_beta() {
        let mut g = graph();
        let x = g.leaf(vec![1.0, 3.0, -2.0, 5.0], &[2, 2], false).unwrap();
        let gamma = g.leaf(vec![0.0, 0.0], &[2], false).unwrap();
        let beta = g.leaf(vec![0.5, -0.5], &[2], false).unwrap();
        let mut rm = vec![0.0; 2];
        let mut rv = vec![1.0; 2];
        let y = g
            .batchnorm(x, gamma, beta, Mode::Train, &mut rm, &mut rv)
            .unwrap();
        assert_eq!(g.data(y), &[0.5, -0.5, 0.5, -0.5]);
    }

    #[test]
    fn batchnorm_train_needs_batch() {
        let mut g = graph();
        let x = g.leaf(vec![1.0], &[1, 1], false).unwrap();
        let gamma = g.leaf(vec![1.0], &[1], false).unwrap();
        let beta = g.leaf(vec![0.0], &[1], false).unwrap();
        let mut rm = vec![0.0];
        let mut rv = vec![1.0];
        assert!(g
            .batchnorm(x, gamma, beta, Mode::Train, &mut rm, &mut rv)
            .is_err());
    }

    #[test]
    fn grl_forward_identity_backward_negates() {
        let mut g = graph();
        let x = g.leaf(vec![1.5, -2.0], &[2], true).unwrap();
        let y = g.grl(x, 1.0);
        assert_eq!(g.data(y), g.data(x));
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[-1.0, -1.0]);

        let mut g = graph();
        let x = g.leaf(vec![1.5, -2.0], &[2], true).unwrap();
        let y = g.grl(x, 0.0);
        let s = g.sum(y);
        g.backward(s).unwrap();
        assert_eq!(g.grad(x).unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn scalar_broadcast_add() {
        let mut g = graph();
        let x = g.leaf(vec![1.0, 2.0, 3.0], &[3], true).unwrap();
        let one = g.scalar(1.0);
        let y = g.add(x, one).unwrap();
        assert_eq!(g.data(y), &[2.0, 3.0, 4.0]);
        let z = g.sub(one, x).unwrap();
        assert_eq!(g.data(z), &[0.0, -1.0, -2.0]);
    }
}
