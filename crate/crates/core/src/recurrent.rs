//! Projected LSTM cells, bi-directional encoders and the character-level
//! word encoder.
//!
//! One LSTMP step, with `m` the projected recurrent output:
//!
//! ```text
//! i  = sigmoid(W_ix x + W_im m' + w_ic * c' + b_i)
//! f  = sigmoid(W_fx x + W_fm m' + w_fc * c' + b_f)
//! c  = f * c' + i * tanh(W_cx x + W_cm m' + b_c)
//! o  = sigmoid(W_ox x + W_om m' + w_oc * c + b_o)
//! m  = W_proj (o * tanh(c))
//! ```
//!
//! Without a projection `m = o * tanh(c)`. Initial states are zero.

use serde::{Deserialize, Serialize};

use crate::params::{ParamId, ParamStore, UniformInit};
use crate::scalar::Scalar;
use crate::tensor::{Axis, Graph, NodeId, Result, Tensor, TensorError};

const GATES: [&str; 4] = ["i", "f", "c", "o"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LstmpDims {
    pub input: usize,
    pub cell: usize,
    /// `None` means no projection: the output is the gated cell activation.
    pub proj: Option<usize>,
}

impl LstmpDims {
    pub fn new(input: usize, cell: usize, proj: Option<usize>) -> Self {
        Self { input, cell, proj }
    }

    pub fn output(&self) -> usize {
        self.proj.unwrap_or(self.cell)
    }

    pub fn param_count(&self, peepholes: bool) -> usize {
        let out = self.output();
        4 * self.cell * self.input
            + 4 * self.cell * out
            + if peepholes { 3 * self.cell } else { 0 }
            + 4 * self.cell
            + self.proj.map_or(0, |p| p * self.cell)
    }
}

/// Handles to the weights of one LSTMP cell inside a [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Lstmp {
    dims: LstmpDims,
    /// Input weights `W_{i,f,c,o}x`, each `cell x input`.
    w_x: [ParamId; 4],
    /// Recurrent weights `W_{i,f,c,o}m`, each `cell x output`.
    w_m: [ParamId; 4],
    /// Peepholes `w_ic, w_fc, w_oc`.
    peep: Option<[ParamId; 3]>,
    bias: [ParamId; 4],
    proj: Option<ParamId>,
}

/// Recurrent state after a step: projected output `m` and cell `c`.
#[derive(Clone, Copy, Debug)]
pub struct LstmState {
    pub m: NodeId,
    pub c: NodeId,
}

impl Lstmp {
    /// Registers the cell's parameters under `prefix/` (e.g. `encoder/fwd/W_ix`).
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        dims: LstmpDims,
        peepholes: bool,
        init: &mut UniformInit,
    ) -> Result<Self> {
        if dims.input == 0 || dims.cell == 0 || dims.proj == Some(0) {
            return Err(TensorError::Contract(format!("invalid LSTMP dims {dims:?}")));
        }
        let out = dims.output();
        let mut add = |name: String, shape: &[usize]| store.add(format!("{prefix}/{name}"), init.tensor(shape));
        let mut w_x = Vec::with_capacity(4);
        for g in GATES {
            w_x.push(add(format!("W_{g}x"), &[dims.cell, dims.input])?);
        }
        let mut w_m = Vec::with_capacity(4);
        for g in GATES {
            w_m.push(add(format!("W_{g}m"), &[dims.cell, out])?);
        }
        let peep = if peepholes {
            Some([
                add("w_ic".into(), &[dims.cell])?,
                add("w_fc".into(), &[dims.cell])?,
                add("w_oc".into(), &[dims.cell])?,
            ])
        } else {
            None
        };
        let mut bias = Vec::with_capacity(4);
        for g in GATES {
            bias.push(add(format!("b_{g}"), &[dims.cell])?);
        }
        let proj = match dims.proj {
            Some(p) => Some(add("W_proj".into(), &[p, dims.cell])?),
            None => None,
        };
        Ok(Self {
            dims,
            w_x: w_x.try_into().unwrap(),
            w_m: w_m.try_into().unwrap(),
            peep,
            bias: bias.try_into().unwrap(),
            proj,
        })
    }

    pub fn dims(&self) -> LstmpDims {
        self.dims
    }

    pub fn has_peepholes(&self) -> bool {
        self.peep.is_some()
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids: Vec<ParamId> = self.w_x.iter().chain(&self.w_m).copied().collect();
        ids.extend(self.peep.iter().flatten());
        ids.extend(self.bias);
        ids.extend(self.proj);
        ids
    }

    pub fn zero_state<T: Scalar>(&self, g: &mut Graph<'_, T>) -> LstmState {
        LstmState {
            m: g.input(Tensor::zeros(&[1, self.dims.output()])),
            c: g.input(Tensor::zeros(&[1, self.dims.cell])),
        }
    }

    /// Input contributions `x W_gx^T + b_g` for all rows of `xs` at once,
    /// one `rows x cell` node per gate.
    fn input_terms<T: Scalar>(&self, g: &mut Graph<'_, T>, xs: NodeId) -> Result<[NodeId; 4]> {
        let mut out = [xs; 4];
        for k in 0..4 {
            let w = g.param(self.w_x[k])?;
            let b = g.param(self.bias[k])?;
            let z = g.matmul_nt(xs, w)?;
            out[k] = g.add(z, b)?;
        }
        Ok(out)
    }

    fn recur<T: Scalar>(&self, g: &mut Graph<'_, T>, xg: [NodeId; 4], prev: LstmState) -> Result<LstmState> {
        let mut pre = [prev.m; 4];
        for k in 0..4 {
            let w = g.param(self.w_m[k])?;
            let r = g.matmul_nt(prev.m, w)?;
            pre[k] = g.add(xg[k], r)?;
        }
        let peep = match self.peep {
            Some(p) => Some([g.param(p[0])?, g.param(p[1])?, g.param(p[2])?]),
            None => None,
        };
        let gate = |g: &mut Graph<'_, T>, z: NodeId, cell: NodeId, w: Option<NodeId>| -> Result<NodeId> {
            let z = match w {
                Some(w) => {
                    let pc = g.mul(cell, w)?;
                    g.add(z, pc)?
                }
                None => z,
            };
            g.sigmoid(z)
        };
        let i = gate(g, pre[0], prev.c, peep.map(|p| p[0]))?;
        let f = gate(g, pre[1], prev.c, peep.map(|p| p[1]))?;
        let cand = g.tanh(pre[2])?;
        let keep = g.mul(f, prev.c)?;
        let write = g.mul(i, cand)?;
        let c = g.add(keep, write)?;
        let o = gate(g, pre[3], c, peep.map(|p| p[2]))?;
        let tc = g.tanh(c)?;
        let h = g.mul(o, tc)?;
        let m = match self.proj {
            Some(p) => {
                let w = g.param(p)?;
                g.matmul_nt(h, w)?
            }
            None => h,
        };
        Ok(LstmState { m, c })
    }

    /// One time step on a `1 x input` row.
    pub fn step<T: Scalar>(&self, g: &mut Graph<'_, T>, x: NodeId, prev: LstmState) -> Result<LstmState> {
        self.check_input(g, x)?;
        let xg = self.input_terms(g, x)?;
        self.recur(g, xg, prev)
    }

    fn check_input<T: Scalar>(&self, g: &Graph<'_, T>, xs: NodeId) -> Result<usize> {
        let (rows, cols) = g.value(xs).dims2()?;
        if cols != self.dims.input {
            return Err(TensorError::Shape {
                op: "lstmp",
                left: vec![rows, cols],
                right: vec![self.dims.cell, self.dims.input],
            });
        }
        Ok(rows)
    }

    /// Runs over the rows of `xs` (time steps) from a zero state, left to
    /// right or right to left. Returns the `m` outputs in time order.
    pub fn run<T: Scalar>(&self, g: &mut Graph<'_, T>, xs: NodeId, reverse: bool) -> Result<Vec<NodeId>> {
        let len = self.check_input(g, xs)?;
        let terms = self.input_terms(g, xs)?;
        let mut state = self.zero_state(g);
        let mut outputs = vec![state.m; len];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..len).rev())
        } else {
            Box::new(0..len)
        };
        for t in order {
            let mut xg = terms;
            if len > 1 {
                for k in 0..4 {
                    xg[k] = g.slice_rows(terms[k], t, 1)?;
                }
            }
            state = self.recur(g, xg, state)?;
            outputs[t] = state.m;
        }
        Ok(outputs)
    }
}

/// A forward and a backward LSTMP over the same inputs.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward: Lstmp,
    pub backward: Lstmp,
}

impl BiLstm {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        dims: LstmpDims,
        peepholes: bool,
        init: &mut UniformInit,
    ) -> Result<Self> {
        Ok(Self {
            forward: Lstmp::register(store, &format!("{prefix}/fwd"), dims, peepholes, init)?,
            backward: Lstmp::register(store, &format!("{prefix}/bwd"), dims, peepholes, init)?,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.forward.dims.input
    }

    pub fn output_dim(&self) -> usize {
        self.forward.dims.output() + self.backward.dims.output()
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.forward.param_ids();
        ids.extend(self.backward.param_ids());
        ids
    }

    /// `T x input` rows to `T x (fwd_out + bwd_out)`; row `t` is the forward
    /// state at `t` concatenated with the backward state at `t`.
    pub fn encode<T: Scalar>(&self, g: &mut Graph<'_, T>, xs: NodeId) -> Result<NodeId> {
        let f = self.forward.run(g, xs, false)?;
        let b = self.backward.run(g, xs, true)?;
        let (f, b) = if f.len() == 1 {
            (f[0], b[0])
        } else {
            (g.concat(&f, Axis::Rows)?, g.concat(&b, Axis::Rows)?)
        };
        g.concat(&[f, b], Axis::Cols)
    }

    /// Final outputs of each direction: forward at the last position, backward
    /// at the first position (its last step).
    pub fn final_states<T: Scalar>(&self, g: &mut Graph<'_, T>, xs: NodeId) -> Result<(NodeId, NodeId)> {
        let f = self.forward.run(g, xs, false)?;
        let b = self.backward.run(g, xs, true)?;
        Ok((*f.last().unwrap(), b[0]))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharDims {
    pub embed: usize,
    pub layer1_cell: usize,
    pub layer1_proj: usize,
    pub layer2_cell: usize,
    pub output: usize,
}

impl CharDims {
    /// 15-dim characters, 40-cell/20-proj first layer, 130-cell second
    /// layer, 40-dim word output.
    pub const PAPER: CharDims = CharDims {
        embed: 15,
        layer1_cell: 40,
        layer1_proj: 20,
        layer2_cell: 130,
        output: 40,
    };

    pub fn layer1(&self) -> LstmpDims {
        LstmpDims::new(self.embed, self.layer1_cell, Some(self.layer1_proj))
    }

    pub fn layer2(&self) -> LstmpDims {
        LstmpDims::new(2 * self.layer1_proj, self.layer2_cell, None)
    }

    pub fn param_count(&self, char_vocab: usize, peepholes: bool) -> usize {
        char_vocab * self.embed
            + 2 * self.layer1().param_count(peepholes)
            + 2 * self.layer2().param_count(peepholes)
            + self.output * 2 * self.layer2_cell
            + self.output
    }
}

/// Two-layer character bi-LSTM producing a fixed-size word vector.
#[derive(Clone, Debug)]
pub struct CharEncoder {
    dims: CharDims,
    table: ParamId,
    pub layer1: BiLstm,
    pub layer2: BiLstm,
    reduce_w: ParamId,
    reduce_b: ParamId,
}

impl CharEncoder {
    pub fn register<T: Scalar>(
        store: &mut ParamStore<T>,
        prefix: &str,
        dims: CharDims,
        char_vocab: usize,
        peepholes: bool,
        init: &mut UniformInit,
    ) -> Result<Self> {
        let table = store.add(format!("{prefix}/chars"), init.tensor(&[char_vocab, dims.embed]))?;
        let layer1 = BiLstm::register(store, &format!("{prefix}/layer1"), dims.layer1(), peepholes, init)?;
        let layer2 = BiLstm::register(store, &format!("{prefix}/layer2"), dims.layer2(), peepholes, init)?;
        let reduce_w = store.add(
            format!("{prefix}/reduce/W"),
            init.tensor(&[dims.output, 2 * dims.layer2_cell]),
        )?;
        let reduce_b = store.add(format!("{prefix}/reduce/b"), init.tensor(&[dims.output]))?;
        Ok(Self {
            dims,
            table,
            layer1,
            layer2,
            reduce_w,
            reduce_b,
        })
    }

    pub fn dims(&self) -> CharDims {
        self.dims
    }

    pub fn table(&self) -> ParamId {
        self.table
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = vec![self.table];
        ids.extend(self.layer1.param_ids());
        ids.extend(self.layer2.param_ids());
        ids.push(self.reduce_w);
        ids.push(self.reduce_b);
        ids
    }

    /// Encodes one word given its character ids; returns a `1 x output` row.
    pub fn encode_word<T: Scalar>(&self, g: &mut Graph<'_, T>, char_ids: &[usize]) -> Result<NodeId> {
        if char_ids.is_empty() {
            return Err(TensorError::Contract("cannot encode an empty word".into()));
        }
        let table = g.param(self.table)?;
        let chars = g.gather_rows(table, char_ids)?;
        let h1 = self.layer1.encode(g, chars)?;
        let (f, b) = self.layer2.final_states(g, h1)?;
        let last = g.concat(&[f, b], Axis::Cols)?;
        let w = g.param(self.reduce_w)?;
        let bias = g.param(self.reduce_b)?;
        let z = g.matmul_nt(last, w)?;
        g.add(z, bias)
    }
}

/// Evaluates one LSTMP step outside of training.
pub fn lstmp_step<T: Scalar>(
    store: &ParamStore<T>,
    cell: &Lstmp,
    x: &[T],
    m_prev: &[T],
    c_prev: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let dims = cell.dims();
    if m_prev.len() != dims.output() || c_prev.len() != dims.cell {
        return Err(TensorError::Shape {
            op: "lstmp_step",
            left: vec![m_prev.len(), c_prev.len()],
            right: vec![dims.output(), dims.cell],
        });
    }
    let mut g = Graph::new(store);
    let x = g.input(Tensor::row(x.to_vec()));
    let prev = LstmState {
        m: g.input(Tensor::row(m_prev.to_vec())),
        c: g.input(Tensor::row(c_prev.to_vec())),
    };
    let next = cell.step(&mut g, x, prev)?;
    Ok((g.value(next.m).data().to_vec(), g.value(next.c).data().to_vec()))
}

/// Runs a bi-LSTM over a sequence of vectors.
pub fn bilstm_encode<T: Scalar>(store: &ParamStore<T>, p: &BiLstm, xs: &[Vec<T>]) -> Result<Vec<Vec<T>>> {
    if xs.is_empty() {
        return Err(TensorError::Contract("cannot encode an empty sequence".into()));
    }
    let mut g = Graph::new(store);
    let x = g.input(Tensor::from_rows(xs)?);
    let out = p.encode(&mut g, x)?;
    let v = g.value(out);
    Ok((0..xs.len()).map(|t| v.row_slice(t).to_vec()).collect())
}
