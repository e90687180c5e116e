use std::collections::{BTreeMap, HashMap};

use rand::Rng;

use super::kernels::{axpy, matmul_into, matmul_nt_into, matmul_tn_into};
use super::{Result, Tensor, TensorError};
use crate::params::{ParamId, ParamStore};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// The operation that produced a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Input,
    Param,
    MatMul,
    MatMulNt,
    Add,
    Mul,
    Sigmoid,
    Tanh,
    Concat,
    Slice,
    Gather,
    Dropout,
    SoftmaxXent,
    Sum,
    Scale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

enum Op<T> {
    Input,
    Param(ParamId),
    MatMul(NodeId, NodeId),
    MatMulNt(NodeId, NodeId),
    Add(NodeId, NodeId),
    AddBias(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Concat(Vec<NodeId>, Axis),
    Slice { x: NodeId, axis: Axis, start: usize },
    Gather { table: NodeId, rows: Vec<usize> },
    Dropout { x: NodeId, mask: Vec<T> },
    SoftmaxXent { logits: NodeId, targets: Vec<usize>, probs: Vec<T> },
    Sum(NodeId),
    Scale(NodeId, T),
}

struct Node<T> {
    op: Op<T>,
    /// `None` for parameter leaves, whose value lives in the store.
    value: Option<Tensor<T>>,
}

/// Gradients produced by a backward pass, keyed by parameter and by input node.
#[derive(Clone, Debug, Default)]
pub struct GradientMap<T> {
    params: BTreeMap<ParamId, Tensor<T>>,
    inputs: BTreeMap<NodeId, Tensor<T>>,
}

impl<T: Scalar> GradientMap<T> {
    pub fn new() -> Self {
        Self {
            params: BTreeMap::new(),
            inputs: BTreeMap::new(),
        }
    }

    pub fn param(&self, id: ParamId) -> Option<&Tensor<T>> {
        self.params.get(&id)
    }

    pub fn input(&self, node: NodeId) -> Option<&Tensor<T>> {
        self.inputs.get(&node)
    }

    pub fn params(&self) -> impl Iterator<Item = (ParamId, &Tensor<T>)> {
        self.params.iter().map(|(k, v)| (*k, v))
    }

    pub fn param_ids(&self) -> impl Iterator<Item = ParamId> + '_ {
        self.params.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn clear(&mut self) {
        self.params.clear();
        self.inputs.clear();
    }

    /// Global L2 norm over all parameter gradients.
    pub fn norm(&self) -> T {
        self.params
            .values()
            .flat_map(|t| t.data().iter())
            .map(|&v| v * v)
            .sum::<T>()
            .sqrt()
    }

    pub fn scale(&mut self, alpha: T) {
        for t in self.params.values_mut() {
            t.scale_in_place(alpha);
        }
    }
}

/// A dynamic computation graph recorded while evaluating a forward pass.
///
/// Nodes are appended in evaluation order, so reverse index order is a valid
/// reverse topological order. Parameters are borrowed from a [`ParamStore`]
/// and each appears as a single leaf per graph.
pub struct Graph<'p, T: Scalar> {
    params: Option<&'p ParamStore<T>>,
    nodes: Vec<Node<T>>,
    param_nodes: HashMap<ParamId, NodeId>,
}

impl<'p, T: Scalar> Graph<'p, T> {
    pub fn new(params: &'p ParamStore<T>) -> Self {
        Self {
            params: Some(params),
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    /// A graph with no parameter store; only inputs can be leaves.
    pub fn detached() -> Self {
        Self {
            params: None,
            nodes: Vec::new(),
            param_nodes: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn kind(&self, id: NodeId) -> OpKind {
        match &self.nodes[id.0].op {
            Op::Input => OpKind::Input,
            Op::Param(_) => OpKind::Param,
            Op::MatMul(..) => OpKind::MatMul,
            Op::MatMulNt(..) => OpKind::MatMulNt,
            Op::Add(..) | Op::AddBias(..) => OpKind::Add,
            Op::Mul(..) => OpKind::Mul,
            Op::Sigmoid(_) => OpKind::Sigmoid,
            Op::Tanh(_) => OpKind::Tanh,
            Op::Concat(..) => OpKind::Concat,
            Op::Slice { .. } => OpKind::Slice,
            Op::Gather { .. } => OpKind::Gather,
            Op::Dropout { .. } => OpKind::Dropout,
            Op::SoftmaxXent { .. } => OpKind::SoftmaxXent,
            Op::Sum(_) => OpKind::Sum,
            Op::Scale(..) => OpKind::Scale,
        }
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        let node = &self.nodes[id.0];
        match (&node.value, &node.op) {
            (Some(v), _) => v,
            (None, Op::Param(pid)) => self
                .params
                .expect("parameter leaf without a store")
                .get(*pid),
            (None, _) => unreachable!("non-parameter node without a value"),
        }
    }

    fn push(&mut self, op: Op<T>, value: Tensor<T>, name: &'static str) -> Result<NodeId> {
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op: name });
        }
        self.nodes.push(Node {
            op,
            value: Some(value),
        });
        Ok(NodeId(self.nodes.len() - 1))
    }

    fn dims(&self, id: NodeId) -> Result<(usize, usize)> {
        self.value(id).dims2()
    }

    pub fn input(&mut self, value: Tensor<T>) -> NodeId {
        self.nodes.push(Node {
            op: Op::Input,
            value: Some(value),
        });
        NodeId(self.nodes.len() - 1)
    }

    /// The leaf node for a stored parameter, created on first use.
    pub fn param(&mut self, id: ParamId) -> Result<NodeId> {
        if let Some(&n) = self.param_nodes.get(&id) {
            return Ok(n);
        }
        let store = self
            .params
            .ok_or_else(|| TensorError::Contract("graph has no parameter store".into()))?;
        if id.index() >= store.len() {
            return Err(TensorError::Index {
                op: "param",
                index: id.index(),
                len: store.len(),
            });
        }
        self.nodes.push(Node {
            op: Op::Param(id),
            value: None,
        });
        let n = NodeId(self.nodes.len() - 1);
        self.param_nodes.insert(id, n);
        Ok(n)
    }

    /// Matrix product `a * b`.
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.dims(a)?;
        let (k2, n) = self.dims(b)?;
        if k != k2 {
            return Err(self.shape_err("matmul", a, b));
        }
        let mut out = vec![T::zero(); m * n];
        matmul_into(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        let value = Tensor::matrix(m, n, out)?;
        self.push(Op::MatMul(a, b), value, "matmul")
    }

    /// Matrix product with the second operand transposed, `a * b^T`.
    ///
    /// Weight matrices are stored `out x in`, so `x * W^T` maps row vectors.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.dims(a)?;
        let (n, k2) = self.dims(b)?;
        if k != k2 {
            return Err(self.shape_err("matmul_nt", a, b));
        }
        let mut out = vec![T::zero(); m * n];
        matmul_nt_into(self.value(a).data(), self.value(b).data(), &mut out, m, k, n);
        let value = Tensor::matrix(m, n, out)?;
        self.push(Op::MatMulNt(a, b), value, "matmul_nt")
    }

    /// Elementwise sum. A `1 x c` (or length-`c`) right operand is added to
    /// every row of an `r x c` left operand; no other broadcasting.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (ra, ca) = self.dims(a)?;
        let (rb, cb) = self.dims(b)?;
        if (ra, ca) == (rb, cb) {
            let va = self.value(a);
            let data = va
                .data()
                .iter()
                .zip(self.value(b).data())
                .map(|(&x, &y)| x + y)
                .collect();
            let value = Tensor::new(va.shape().to_vec(), data)?;
            self.push(Op::Add(a, b), value, "add")
        } else if rb == 1 && cb == ca {
            let bias = self.value(b).data();
            let mut data = self.value(a).data().to_vec();
            for row in data.chunks_mut(ca) {
                for (x, &y) in row.iter_mut().zip(bias) {
                    *x += y;
                }
            }
            let value = Tensor::matrix(ra, ca, data)?;
            self.push(Op::AddBias(a, b), value, "add")
        } else {
            Err(self.shape_err("add", a, b))
        }
    }

    /// Elementwise (Hadamard) product of equally shaped operands.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.dims(a)? != self.dims(b)? {
            return Err(self.shape_err("mul", a, b));
        }
        let va = self.value(a);
        let data = va
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let value = Tensor::new(va.shape().to_vec(), data)?;
        self.push(Op::Mul(a, b), value, "mul")
    }

    pub fn sigmoid(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.value(x).map(sigmoid);
        self.push(Op::Sigmoid(x), value, "sigmoid")
    }

    pub fn tanh(&mut self, x: NodeId) -> Result<NodeId> {
        let value = self.value(x).map(T::tanh);
        self.push(Op::Tanh(x), value, "tanh")
    }

    /// Concatenates matrices along rows (stacking) or columns.
    pub fn concat(&mut self, parts: &[NodeId], axis: Axis) -> Result<NodeId> {
        let first = *parts
            .first()
            .ok_or_else(|| TensorError::Contract("concat of zero tensors".into()))?;
        let (r0, c0) = self.dims(first)?;
        let mut dims = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.dims(p)?;
            let ok = match axis {
                Axis::Rows => c == c0,
                Axis::Cols => r == r0,
            };
            if !ok {
                return Err(self.shape_err("concat", first, p));
            }
            dims.push((r, c));
        }
        let value = match axis {
            Axis::Rows => {
                let rows: usize = dims.iter().map(|d| d.0).sum();
                let mut data = Vec::with_capacity(rows * c0);
                for &p in parts {
                    data.extend_from_slice(self.value(p).data());
                }
                Tensor::matrix(rows, c0, data)?
            }
            Axis::Cols => {
                let cols: usize = dims.iter().map(|d| d.1).sum();
                let mut data = Vec::with_capacity(r0 * cols);
                for i in 0..r0 {
                    for (&p, &(_, c)) in parts.iter().zip(&dims) {
                        data.extend_from_slice(&self.value(p).data()[i * c..(i + 1) * c]);
                    }
                }
                Tensor::matrix(r0, cols, data)?
            }
        };
        self.push(Op::Concat(parts.to_vec(), axis), value, "concat")
    }

    /// Rows `start..start + len` of a matrix.
    pub fn slice_rows(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (r, c) = self.dims(x)?;
        if len == 0 || start + len > r {
            return Err(TensorError::Index {
                op: "slice_rows",
                index: start + len,
                len: r,
            });
        }
        let data = self.value(x).data()[start * c..(start + len) * c].to_vec();
        let value = Tensor::matrix(len, c, data)?;
        self.push(
            Op::Slice {
                x,
                axis: Axis::Rows,
                start,
            },
            value,
            "slice",
        )
    }

    /// Columns `start..start + len` of a matrix.
    pub fn slice_cols(&mut self, x: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (r, c) = self.dims(x)?;
        if len == 0 || start + len > c {
            return Err(TensorError::Index {
                op: "slice_cols",
                index: start + len,
                len: c,
            });
        }
        let src = self.value(x).data();
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&src[i * c + start..i * c + start + len]);
        }
        let value = Tensor::matrix(r, len, data)?;
        self.push(
            Op::Slice {
                x,
                axis: Axis::Cols,
                start,
            },
            value,
            "slice",
        )
    }

    /// Gathers rows of an embedding table; the backward pass scatters.
    pub fn gather_rows(&mut self, table: NodeId, rows: &[usize]) -> Result<NodeId> {
        let (r, c) = self.dims(table)?;
        if rows.is_empty() {
            return Err(TensorError::Contract("gather of zero rows".into()));
        }
        let src = self.value(table).data();
        let mut data = Vec::with_capacity(rows.len() * c);
        for &i in rows {
            if i >= r {
                return Err(TensorError::Index {
                    op: "gather_rows",
                    index: i,
                    len: r,
                });
            }
            data.extend_from_slice(&src[i * c..(i + 1) * c]);
        }
        let value = Tensor::matrix(rows.len(), c, data)?;
        self.push(
            Op::Gather {
                table,
                rows: rows.to_vec(),
            },
            value,
            "gather",
        )
    }

    /// Multiplies by a fixed mask (entries are `0` or the survivor scale).
    pub fn dropout_with_mask(&mut self, x: NodeId, mask: Vec<T>) -> Result<NodeId> {
        let vx = self.value(x);
        if mask.len() != vx.len() {
            return Err(TensorError::Shape {
                op: "dropout",
                left: vx.shape().to_vec(),
                right: vec![mask.len()],
            });
        }
        let data = vx.data().iter().zip(&mask).map(|(&v, &m)| v * m).collect();
        let value = Tensor::new(vx.shape().to_vec(), data)?;
        self.push(Op::Dropout { x, mask }, value, "dropout")
    }

    /// Inverted dropout with drop probability `p`; identity when `p == 0`.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: NodeId, p: f64, rng: &mut R) -> Result<NodeId> {
        if p == 0.0 {
            return Ok(x);
        }
        let mask = dropout_mask(self.value(x).len(), p, rng);
        self.dropout_with_mask(x, mask)
    }

    /// Summed softmax cross-entropy over the rows of `logits` (`r x L`), one
    /// target label per row. Returns a `1 x 1` loss.
    pub fn softmax_xent(&mut self, logits: NodeId, targets: &[usize]) -> Result<NodeId> {
        let (r, l) = self.dims(logits)?;
        if targets.len() != r {
            return Err(TensorError::Shape {
                op: "softmax_xent",
                left: vec![r, l],
                right: vec![targets.len()],
            });
        }
        let z = self.value(logits).data();
        let mut probs = Vec::with_capacity(r * l);
        let mut loss = T::zero();
        for (i, &t) in targets.iter().enumerate() {
            if t >= l {
                return Err(TensorError::Index {
                    op: "softmax_xent",
                    index: t,
                    len: l,
                });
            }
            let row = &z[i * l..(i + 1) * l];
            let (lse, p) = log_softmax_parts(row);
            loss += lse - row[t];
            probs.extend(p);
        }
        self.push(
            Op::SoftmaxXent {
                logits,
                targets: targets.to_vec(),
                probs,
            },
            Tensor::scalar(loss),
            "softmax_xent",
        )
    }

    /// Sum of all entries, as a `1 x 1` tensor.
    pub fn sum(&mut self, x: NodeId) -> Result<NodeId> {
        let s = self.value(x).sum();
        self.push(Op::Sum(x), Tensor::scalar(s), "sum")
    }

    /// `alpha * x` for a constant `alpha`.
    pub fn scale(&mut self, x: NodeId, alpha: T) -> Result<NodeId> {
        let value = self.value(x).map(|v| v * alpha);
        self.push(Op::Scale(x, alpha), value, "scale")
    }

    fn shape_err(&self, op: &'static str, a: NodeId, b: NodeId) -> TensorError {
        TensorError::Shape {
            op,
            left: self.value(a).shape().to_vec(),
            right: self.value(b).shape().to_vec(),
        }
    }

    pub fn backward(&self, loss: NodeId) -> Result<GradientMap<T>> {
        let mut map = GradientMap::new();
        self.backward_into(loss, &mut map)?;
        Ok(map)
    }

    /// Reverse-mode pass from a scalar `loss`, adding parameter gradients into
    /// `map` (so several graphs can accumulate into one map) and recording
    /// gradients of reachable input nodes.
    pub fn backward_into(&self, loss: NodeId, map: &mut GradientMap<T>) -> Result<()> {
        let lv = self.value(loss);
        if lv.len() != 1 {
            return Err(TensorError::Contract(format!(
                "backward requires a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor<T>>> = (0..=loss.0).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::full(lv.shape(), T::one()));
        map.inputs.clear();

        for i in (0..=loss.0).rev() {
            let node = &self.nodes[i];
            if let Op::Param(_) = node.op {
                continue;
            }
            let Some(g_owned) = grads[i].take() else { continue };
            let g = g_owned.data();
            let mut acc = Acc {
                graph: self,
                grads: &mut grads,
                map,
            };
            match &node.op {
                Op::Input => {
                    let shape = self.value(NodeId(i)).shape().to_vec();
                    acc.map
                        .inputs
                        .insert(NodeId(i), Tensor::new(shape, g.to_vec())?);
                }
                Op::Param(_) => unreachable!(),
                Op::MatMul(a, b) => {
                    let (m, k) = self.dims(*a)?;
                    let (_, n) = self.dims(*b)?;
                    let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                    matmul_nt_into(g, vb, acc.slot(*a), m, n, k);
                    matmul_tn_into(va, g, acc.slot(*b), m, k, n);
                }
                Op::MatMulNt(a, b) => {
                    let (m, k) = self.dims(*a)?;
                    let (n, _) = self.dims(*b)?;
                    let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                    matmul_into(g, vb, acc.slot(*a), m, n, k);
                    matmul_tn_into(g, va, acc.slot(*b), m, n, k);
                }
                Op::Add(a, b) => {
                    axpy(T::one(), g, acc.slot(*a));
                    axpy(T::one(), g, acc.slot(*b));
                }
                Op::AddBias(a, b) => {
                    axpy(T::one(), g, acc.slot(*a));
                    let gb = acc.slot(*b);
                    for row in g.chunks(gb.len()) {
                        axpy(T::one(), row, gb);
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.value(*a).data(), self.value(*b).data());
                    for ((s, &gi), &bi) in acc.slot(*a).iter_mut().zip(g).zip(vb) {
                        *s += gi * bi;
                    }
                    for ((s, &gi), &ai) in acc.slot(*b).iter_mut().zip(g).zip(va) {
                        *s += gi * ai;
                    }
                }
                Op::Sigmoid(x) => {
                    let y = self.value(NodeId(i)).data();
                    for ((s, &gi), &yi) in acc.slot(*x).iter_mut().zip(g).zip(y) {
                        *s += gi * yi * (T::one() - yi);
                    }
                }
                Op::Tanh(x) => {
                    let y = self.value(NodeId(i)).data();
                    for ((s, &gi), &yi) in acc.slot(*x).iter_mut().zip(g).zip(y) {
                        *s += gi * (T::one() - yi * yi);
                    }
                }
                Op::Concat(parts, axis) => match axis {
                    Axis::Rows => {
                        let mut off = 0;
                        for &p in parts {
                            let n = self.value(p).len();
                            axpy(T::one(), &g[off..off + n], acc.slot(p));
                            off += n;
                        }
                    }
                    Axis::Cols => {
                        let (r, total) = self.dims(NodeId(i))?;
                        let mut off = 0;
                        for &p in parts {
                            let (_, c) = self.dims(p)?;
                            let s = acc.slot(p);
                            for row in 0..r {
                                axpy(
                                    T::one(),
                                    &g[row * total + off..row * total + off + c],
                                    &mut s[row * c..(row + 1) * c],
                                );
                            }
                            off += c;
                        }
                    }
                },
                Op::Slice { x, axis, start } => {
                    let (_, c) = self.dims(*x)?;
                    let (r_out, c_out) = self.dims(NodeId(i))?;
                    let s = acc.slot(*x);
                    match axis {
                        Axis::Rows => axpy(T::one(), g, &mut s[start * c..(start + r_out) * c]),
                        Axis::Cols => {
                            for row in 0..r_out {
                                axpy(
                                    T::one(),
                                    &g[row * c_out..(row + 1) * c_out],
                                    &mut s[row * c + start..row * c + start + c_out],
                                );
                            }
                        }
                    }
                }
                Op::Gather { table, rows } => {
                    let (_, c) = self.dims(*table)?;
                    let s = acc.slot(*table);
                    for (k, &r) in rows.iter().enumerate() {
                        axpy(T::one(), &g[k * c..(k + 1) * c], &mut s[r * c..(r + 1) * c]);
                    }
                }
                Op::Dropout { x, mask } => {
                    for ((s, &gi), &mi) in acc.slot(*x).iter_mut().zip(g).zip(mask) {
                        *s += gi * mi;
                    }
                }
                Op::SoftmaxXent {
                    logits,
                    targets,
                    probs,
                } => {
                    let scale = g[0];
                    let l = probs.len() / targets.len();
                    let s = acc.slot(*logits);
                    for (k, (si, &pi)) in s.iter_mut().zip(probs).enumerate() {
                        let onehot = if targets[k / l] == k % l { T::one() } else { T::zero() };
                        *si += scale * (pi - onehot);
                    }
                }
                Op::Sum(x) => {
                    let scale = g[0];
                    for s in acc.slot(*x).iter_mut() {
                        *s += scale;
                    }
                }
                Op::Scale(x, alpha) => axpy(*alpha, g, acc.slot(*x)),
            }
        }
        Ok(())
    }
}

/// Routes gradient accumulation either to a node buffer or, for parameter
/// leaves, straight into the gradient map.
struct Acc<'a, 'g, 'p, T: Scalar> {
    graph: &'g Graph<'p, T>,
    grads: &'a mut Vec<Option<Tensor<T>>>,
    map: &'a mut GradientMap<T>,
}

impl<T: Scalar> Acc<'_, '_, '_, T> {
    fn slot(&mut self, id: NodeId) -> &mut [T] {
        let shape = || self.graph.value(id).shape().to_vec();
        if let Op::Param(pid) = self.graph.nodes[id.0].op {
            let shape = shape();
            return self
                .map
                .params
                .entry(pid)
                .or_insert_with(|| Tensor::zeros(&shape))
                .data_mut();
        }
        if self.grads[id.0].is_none() {
            self.grads[id.0] = Some(Tensor::zeros(&shape()));
        }
        self.grads[id.0].as_mut().unwrap().data_mut()
    }
}

#[inline]
pub(crate) fn sigmoid<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// `(logsumexp(row), softmax(row))` with max subtraction.
pub(crate) fn log_softmax_parts<T: Scalar>(row: &[T]) -> (T, Vec<T>) {
    let max = row.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = row.iter().map(|&v| (v - max).exp()).collect();
    let z: T = exps.iter().copied().sum();
    let lse = max + z.ln();
    (lse, exps.into_iter().map(|e| e / z).collect())
}

/// Softmax of a score vector, computed stably.
pub fn softmax<T: Scalar>(row: &[T]) -> Vec<T> {
    log_softmax_parts(row).1
}

/// Inverted-dropout mask: each entry is `0` with probability `p`, otherwise
/// `1 / (1 - p)`.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Vec<T> {
    let keep = T::lit(1.0 / (1.0 - p));
    (0..len)
        .map(|_| if rng.gen::<f64>() < p { T::zero() } else { keep })
        .collect()
}
