use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;

use crate::error::{Error, Result};
use crate::numerics::tensor::Tensor;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_K: f64 = 0.044_715;

#[derive(Debug)]
enum Op {
    Leaf,
    Constant,
    MatMul(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    AddRow(usize, usize),
    Scale(usize, f64),
    Transpose(usize),
    SliceCols { src: usize, start: usize },
    ConcatCols(Vec<usize>),
    SliceRows { src: usize, start: usize },
    ConcatRows(Vec<usize>),
    Softmax { src: usize, axis: usize },
    LogSoftmax { src: usize, axis: usize },
    LayerNorm {
        x: usize,
        gamma: usize,
        beta: usize,
        xhat: Vec<f64>,
        rstd: Vec<f64>,
    },
    Gelu(usize),
    Gather { table: usize, ids: Vec<usize> },
    Pick { src: usize, idx: Vec<usize> },
    Sum(usize),
    Mean(usize),
    Reshape(usize),
}

#[derive(Debug)]
struct Node {
    value: Rc<Tensor>,
    op: Op,
    requires_grad: bool,
}

/// Records one forward pass and replays it in reverse.
///
/// Build a fresh tape per forward pass. Leaves created with [`Tape::leaf`]
/// accumulate gradients across [`Tape::backward`] calls until
/// [`Tape::zero_grad`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    leaf_grads: RefCell<HashMap<usize, Tensor>>,
}

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, op: Op, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value: Rc::new(value),
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    fn value(&self, id: usize) -> Rc<Tensor> {
        Rc::clone(&self.nodes.borrow()[id].value)
    }

    fn requires_grad(&self, id: usize) -> bool {
        self.nodes.borrow()[id].requires_grad
    }

    /// A differentiable input, typically a parameter.
    pub fn leaf(&self, t: Tensor) -> Var<'_> {
        self.push(t, Op::Leaf, true)
    }

    /// An input that never receives gradient.
    pub fn constant(&self, t: Tensor) -> Var<'_> {
        self.push(t, Op::Constant, false)
    }

    /// Concatenate 2-D values along columns.
    pub fn concat_cols<'t>(&'t self, parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let rows = first.value().dims2()?.0;
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            let (r, c) = p.value().dims2()?;
            if r != rows {
                return Err(Error::Shape {
                    op: "concat_cols",
                    lhs: first.shape(),
                    rhs: p.shape(),
                });
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = vec![0.0; rows * total];
        let mut off = 0;
        for (p, &w) in parts.iter().zip(&widths) {
            let v = p.value();
            for i in 0..rows {
                data[i * total + off..i * total + off + w].copy_from_slice(&v.data()[i * w..(i + 1) * w]);
            }
            off += w;
        }
        let rg = parts.iter().any(|p| p.requires_grad());
        Ok(self.push(
            Tensor::new(vec![rows, total], data)?,
            Op::ConcatCols(parts.iter().map(|p| p.id).collect()),
            rg,
        ))
    }

    /// Concatenate 2-D values along rows.
    pub fn concat_rows<'t>(&'t self, parts: &[Var<'t>]) -> Result<Var<'t>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::contract("concat of zero tensors"))?;
        let cols = first.value().dims2()?.1;
        let mut data = Vec::new();
        let mut rows = 0;
        for p in parts {
            let v = p.value();
            let (r, c) = v.dims2()?;
            if c != cols {
                return Err(Error::Shape {
                    op: "concat_rows",
                    lhs: first.shape(),
                    rhs: p.shape(),
                });
            }
            data.extend_from_slice(v.data());
            rows += r;
        }
        let rg = parts.iter().any(|p| p.requires_grad());
        Ok(self.push(
            Tensor::new(vec![rows, cols], data)?,
            Op::ConcatRows(parts.iter().map(|p| p.id).collect()),
            rg,
        ))
    }

    /// Rows `ids` of a 2-D table, as a `[ids.len(), cols]` matrix.
    pub fn gather<'t>(&'t self, table: Var<'t>, ids: &[usize]) -> Result<Var<'t>> {
        let t = table.value();
        let (n, c) = t.dims2()?;
        if ids.is_empty() {
            return Err(Error::contract("gather with no indices"));
        }
        let mut data = Vec::with_capacity(ids.len() * c);
        for &i in ids {
            if i >= n {
                return Err(Error::contract(format!("gather index {i} out of range {n}")));
            }
            data.extend_from_slice(t.row(i));
        }
        Ok(self.push(
            Tensor::new(vec![ids.len(), c], data)?,
            Op::Gather {
                table: table.id,
                ids: ids.to_vec(),
            },
            table.requires_grad(),
        ))
    }

    /// Accumulated gradient of a leaf; `None` before the first backward pass.
    pub fn grad(&self, v: Var<'_>) -> Option<Tensor> {
        self.leaf_grads.borrow().get(&v.id).cloned()
    }

    pub fn zero_grad(&self) {
        self.leaf_grads.borrow_mut().clear();
    }

    /// Reverse sweep from a scalar loss. Gradients of leaves are added to
    /// whatever previous sweeps left behind.
    pub fn backward(&self, loss: Var<'_>) -> Result<()> {
        let nodes = self.nodes.borrow();
        let lv = &nodes[loss.id].value;
        if !lv.is_scalar() {
            return Err(Error::contract(format!(
                "backward needs a scalar loss, got shape {:?}",
                lv.shape()
            )));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.id + 1];
        grads[loss.id] = Some(Tensor::full(lv.shape(), 1.0));
        let mut leaf_grads = self.leaf_grads.borrow_mut();
        for (id, node) in nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf) {
                leaf_grads
                    .entry(id)
                    .or_insert_with(|| Tensor::zeros(node.value.shape()));
            }
        }

        for id in (0..=loss.id).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &nodes[id];
            if !node.requires_grad {
                continue;
            }
            let mut send = |pid: usize, t: Tensor| {
                if !nodes[pid].requires_grad {
                    return;
                }
                match &mut grads[pid] {
                    Some(acc) => {
                        for (a, b) in acc.data_mut().iter_mut().zip(t.data()) {
                            *a += b;
                        }
                    }
                    slot @ None => *slot = Some(t),
                }
            };
            let val = |pid: usize| &nodes[pid].value;
            match &node.op {
                Op::Leaf => {
                    if let Some(acc) = leaf_grads.get_mut(&id) {
                        acc.add_assign(&g)?;
                    }
                }
                Op::Constant => {}
                Op::MatMul(a, b) => {
                    let (m, k) = val(*a).dims2()?;
                    let n = val(*b).dims2()?.1;
                    if nodes[*a].requires_grad {
                        let mut ga = vec![0.0; m * k];
                        matmul_nt(g.data(), val(*b).data(), &mut ga, m, n, k);
                        send(*a, Tensor::new(vec![m, k], ga)?);
                    }
                    if nodes[*b].requires_grad {
                        let mut gb = vec![0.0; k * n];
                        matmul_tn(val(*a).data(), g.data(), &mut gb, m, k, n);
                        send(*b, Tensor::new(vec![k, n], gb)?);
                    }
                }
                Op::Add(a, b) => {
                    send(*a, g.clone());
                    send(*b, g);
                }
                Op::Sub(a, b) => {
                    send(*b, g.map(|x| -x));
                    send(*a, g);
                }
                Op::Mul(a, b) => {
                    let ga = zip_map(&g, val(*b), |x, y| x * y);
                    let gb = zip_map(&g, val(*a), |x, y| x * y);
                    send(*a, ga);
                    send(*b, gb);
                }
                Op::AddRow(a, b) => {
                    let n = val(*b).numel();
                    let mut gb = vec![0.0; n];
                    for row in g.data().chunks(n) {
                        for (s, x) in gb.iter_mut().zip(row) {
                            *s += x;
                        }
                    }
                    send(*b, Tensor::new(val(*b).shape().to_vec(), gb)?);
                    send(*a, g);
                }
                Op::Scale(a, s) => send(*a, g.map(|x| x * s)),
                Op::Transpose(a) => send(*a, g.transpose()?),
                Op::SliceCols { src, start } => {
                    let (rows, cols) = val(*src).dims2()?;
                    let w = g.dims2()?.1;
                    let mut gs = vec![0.0; rows * cols];
                    for i in 0..rows {
                        gs[i * cols + start..i * cols + start + w]
                            .copy_from_slice(&g.data()[i * w..(i + 1) * w]);
                    }
                    send(*src, Tensor::new(vec![rows, cols], gs)?);
                }
                Op::ConcatCols(parts) => {
                    let (rows, total) = g.dims2()?;
                    let mut off = 0;
                    for &p in parts {
                        let w = val(p).dims2()?.1;
                        let mut gp = vec![0.0; rows * w];
                        for i in 0..rows {
                            gp[i * w..(i + 1) * w]
                                .copy_from_slice(&g.data()[i * total + off..i * total + off + w]);
                        }
                        send(p, Tensor::new(vec![rows, w], gp)?);
                        off += w;
                    }
                }
                Op::SliceRows { src, start } => {
                    let (rows, cols) = val(*src).dims2()?;
                    let mut gs = vec![0.0; rows * cols];
                    gs[start * cols..start * cols + g.numel()].copy_from_slice(g.data());
                    send(*src, Tensor::new(vec![rows, cols], gs)?);
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = val(p).numel();
                        let gp = g.data()[off..off + n].to_vec();
                        send(p, Tensor::new(val(p).shape().to_vec(), gp)?);
                        off += n;
                    }
                }
                Op::Softmax { src, axis } => {
                    let y = &node.value;
                    let (outer, n, inner) = axis_split(y.shape(), *axis);
                    let mut gx = vec![0.0; y.numel()];
                    for o in 0..outer {
                        for i in 0..inner {
                            let idx = |k: usize| (o * n + k) * inner + i;
                            let dot: f64 = (0..n).map(|k| g.data()[idx(k)] * y.data()[idx(k)]).sum();
                            for k in 0..n {
                                gx[idx(k)] = y.data()[idx(k)] * (g.data()[idx(k)] - dot);
                            }
                        }
                    }
                    send(*src, Tensor::new(y.shape().to_vec(), gx)?);
                }
                Op::LogSoftmax { src, axis } => {
                    let y = &node.value;
                    let (outer, n, inner) = axis_split(y.shape(), *axis);
                    let mut gx = vec![0.0; y.numel()];
                    for o in 0..outer {
                        for i in 0..inner {
                            let idx = |k: usize| (o * n + k) * inner + i;
                            let gsum: f64 = (0..n).map(|k| g.data()[idx(k)]).sum();
                            for k in 0..n {
                                gx[idx(k)] = g.data()[idx(k)] - y.data()[idx(k)].exp() * gsum;
                            }
                        }
                    }
                    send(*src, Tensor::new(y.shape().to_vec(), gx)?);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    xhat,
                    rstd,
                } => {
                    let gm = val(*gamma);
                    let d = gm.numel();
                    let mut ggamma = vec![0.0; d];
                    let mut gbeta = vec![0.0; d];
                    let mut gx = vec![0.0; g.numel()];
                    for (r, gy) in g.data().chunks(d).enumerate() {
                        let xh = &xhat[r * d..(r + 1) * d];
                        let mut mean_dxh = 0.0;
                        let mut mean_dxh_xh = 0.0;
                        for j in 0..d {
                            ggamma[j] += gy[j] * xh[j];
                            gbeta[j] += gy[j];
                            let dxh = gy[j] * gm.data()[j];
                            mean_dxh += dxh;
                            mean_dxh_xh += dxh * xh[j];
                        }
                        mean_dxh /= d as f64;
                        mean_dxh_xh /= d as f64;
                        for j in 0..d {
                            let dxh = gy[j] * gm.data()[j];
                            gx[r * d + j] = rstd[r] * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                        }
                    }
                    send(*gamma, Tensor::new(gm.shape().to_vec(), ggamma)?);
                    send(*beta, Tensor::new(val(*beta).shape().to_vec(), gbeta)?);
                    send(*x, Tensor::new(g.shape().to_vec(), gx)?);
                }
                Op::Gelu(a) => {
                    let gx = zip_map(&g, val(*a), |gy, x| gy * gelu_grad(x));
                    send(*a, gx);
                }
                Op::Gather { table, ids } => {
                    let t = val(*table);
                    let (_, c) = t.dims2()?;
                    let mut gt = vec![0.0; t.numel()];
                    for (r, &i) in ids.iter().enumerate() {
                        for j in 0..c {
                            gt[i * c + j] += g.data()[r * c + j];
                        }
                    }
                    send(*table, Tensor::new(t.shape().to_vec(), gt)?);
                }
                Op::Pick { src, idx } => {
                    let s = val(*src);
                    let (_, c) = s.dims2()?;
                    let mut gs = vec![0.0; s.numel()];
                    for (r, &j) in idx.iter().enumerate() {
                        gs[r * c + j] += g.data()[r];
                    }
                    send(*src, Tensor::new(s.shape().to_vec(), gs)?);
                }
                Op::Sum(a) => {
                    let gv = g.item();
                    send(*a, Tensor::full(val(*a).shape(), gv));
                }
                Op::Mean(a) => {
                    let n = val(*a).numel() as f64;
                    let gv = g.item() / n;
                    send(*a, Tensor::full(val(*a).shape(), gv));
                }
                Op::Reshape(a) => {
                    let shape = val(*a).shape().to_vec();
                    send(*a, g.reshape(&shape)?);
                }
            }
        }
        Ok(())
    }
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Tensor::new(a.shape().to_vec(), data).expect("same-shape operands")
}

/// `out[m,k] += g[m,n] · b[k,n]ᵀ`
fn matmul_nt(g: &[f64], b: &[f64], out: &mut [f64], m: usize, n: usize, k: usize) {
    for i in 0..m {
        let gr = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let br = &b[p * n..(p + 1) * n];
            out[i * k + p] += gr.iter().zip(br).map(|(x, y)| x * y).sum::<f64>();
        }
    }
}

/// `out[k,n] += a[m,k]ᵀ · g[m,n]`
fn matmul_tn(a: &[f64], g: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let gr = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let or = &mut out[p * n..(p + 1) * n];
            for (o, x) in or.iter_mut().zip(gr) {
                *o += av * x;
            }
        }
    }
}

fn axis_split(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    (outer, shape[axis], inner)
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

impl<'t> Var<'t> {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn value(&self) -> Rc<Tensor> {
        self.tape.value(self.id)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.value().shape().to_vec()
    }

    pub fn requires_grad(&self) -> bool {
        self.tape.requires_grad(self.id)
    }

    fn same_tape(&self, other: &Var<'t>) -> Result<()> {
        if std::ptr::eq(self.tape, other.tape) {
            Ok(())
        } else {
            Err(Error::contract("operands recorded on different tapes"))
        }
    }

    fn unary(&self, value: Tensor, op: Op) -> Var<'t> {
        self.tape.push(value, op, self.requires_grad())
    }

    fn binary(&self, other: &Var<'t>, value: Tensor, op: Op) -> Var<'t> {
        let rg = self.requires_grad() || other.requires_grad();
        self.tape.push(value, op, rg)
    }

    /// Same value, cut off from the graph.
    pub fn detach(&self) -> Var<'t> {
        self.tape.constant((*self.value()).clone())
    }

    pub fn matmul(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let v = self.value().matmul(&other.value())?;
        Ok(self.binary(other, v, Op::MatMul(self.id, other.id)))
    }

    fn elementwise(
        &self,
        other: &Var<'t>,
        name: &'static str,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
    ) -> Result<Var<'t>> {
        self.same_tape(other)?;
        let (a, b) = (self.value(), other.value());
        if a.shape() != b.shape() {
            return Err(Error::Shape {
                op: name,
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        Ok(self.binary(other, zip_map(&a, &b, f), op))
    }

    pub fn add(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.elementwise(other, "add", |x, y| x + y, Op::Add(self.id, other.id))
    }

    pub fn sub(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.elementwise(other, "sub", |x, y| x - y, Op::Sub(self.id, other.id))
    }

    pub fn mul(&self, other: &Var<'t>) -> Result<Var<'t>> {
        self.elementwise(other, "mul", |x, y| x * y, Op::Mul(self.id, other.id))
    }

    /// Adds the vector `bias[n]` to every row of `self[.., n]`.
    pub fn add_row(&self, bias: &Var<'t>) -> Result<Var<'t>> {
        self.same_tape(bias)?;
        let (a, b) = (self.value(), bias.value());
        let n = b.numel();
        if b.rank() != 1 || a.shape().last() != Some(&n) {
            return Err(Error::Shape {
                op: "add_row",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        let mut data = a.data().to_vec();
        for row in data.chunks_mut(n) {
            for (x, y) in row.iter_mut().zip(b.data()) {
                *x += y;
            }
        }
        let v = Tensor::new(a.shape().to_vec(), data)?;
        Ok(self.binary(bias, v, Op::AddRow(self.id, bias.id)))
    }

    pub fn scale(&self, s: f64) -> Var<'t> {
        self.unary(self.value().map(|x| x * s), Op::Scale(self.id, s))
    }

    pub fn transpose(&self) -> Result<Var<'t>> {
        Ok(self.unary(self.value().transpose()?, Op::Transpose(self.id)))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Var<'t>> {
        let v = (*self.value()).clone().reshape(shape)?;
        Ok(self.unary(v, Op::Reshape(self.id)))
    }

    /// Columns `start..start + len` of a matrix.
    pub fn slice_cols(&self, start: usize, len: usize) -> Result<Var<'t>> {
        let v = self.value();
        let (rows, cols) = v.dims2()?;
        if len == 0 || start + len > cols {
            return Err(Error::contract(format!(
                "column slice {start}..{} out of range {cols}",
                start + len
            )));
        }
        let mut data = Vec::with_capacity(rows * len);
        for i in 0..rows {
            data.extend_from_slice(&v.data()[i * cols + start..i * cols + start + len]);
        }
        Ok(self.unary(
            Tensor::new(vec![rows, len], data)?,
            Op::SliceCols {
                src: self.id,
                start,
            },
        ))
    }

    /// Rows `start..start + len` of a matrix.
    pub fn slice_rows(&self, start: usize, len: usize) -> Result<Var<'t>> {
        let v = self.value();
        let (rows, cols) = v.dims2()?;
        if len == 0 || start + len > rows {
            return Err(Error::contract(format!(
                "row slice {start}..{} out of range {rows}",
                start + len
            )));
        }
        let data = v.data()[start * cols..(start + len) * cols].to_vec();
        Ok(self.unary(
            Tensor::new(vec![len, cols], data)?,
            Op::SliceRows {
                src: self.id,
                start,
            },
        ))
    }

    fn check_axis(&self, axis: usize) -> Result<Rc<Tensor>> {
        let v = self.value();
        if axis >= v.rank() {
            return Err(Error::contract(format!(
                "axis {axis} out of range for shape {:?}",
                v.shape()
            )));
        }
        if let Some(bad) = v.data().iter().find(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite softmax input {bad}")));
        }
        Ok(v)
    }

    /// Softmax along `axis`, stabilised by subtracting the slice maximum.
    pub fn softmax(&self, axis: usize) -> Result<Var<'t>> {
        let v = self.check_axis(axis)?;
        let (outer, n, inner) = axis_split(v.shape(), axis);
        let mut out = vec![0.0; v.numel()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |k: usize| (o * n + k) * inner + i;
                let m = (0..n).map(|k| v.data()[idx(k)]).fold(f64::NEG_INFINITY, f64::max);
                let mut z = 0.0;
                for k in 0..n {
                    let e = (v.data()[idx(k)] - m).exp();
                    out[idx(k)] = e;
                    z += e;
                }
                for k in 0..n {
                    out[idx(k)] /= z;
                }
            }
        }
        let t = Tensor::new(v.shape().to_vec(), out)?;
        Ok(self.unary(t, Op::Softmax { src: self.id, axis }))
    }

    pub fn log_softmax(&self, axis: usize) -> Result<Var<'t>> {
        let v = self.check_axis(axis)?;
        let (outer, n, inner) = axis_split(v.shape(), axis);
        let mut out = vec![0.0; v.numel()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |k: usize| (o * n + k) * inner + i;
                let m = (0..n).map(|k| v.data()[idx(k)]).fold(f64::NEG_INFINITY, f64::max);
                let lse = m + (0..n).map(|k| (v.data()[idx(k)] - m).exp()).sum::<f64>().ln();
                for k in 0..n {
                    out[idx(k)] = v.data()[idx(k)] - lse;
                }
            }
        }
        let t = Tensor::new(v.shape().to_vec(), out)?;
        Ok(self.unary(t, Op::LogSoftmax { src: self.id, axis }))
    }

    /// Normalises over the last dimension, then applies `gamma * x + beta`.
    pub fn layer_norm(&self, gamma: &Var<'t>, beta: &Var<'t>, eps: f64) -> Result<Var<'t>> {
        self.same_tape(gamma)?;
        self.same_tape(beta)?;
        if eps <= 0.0 {
            return Err(Error::contract("layer_norm eps must be positive"));
        }
        let (x, gm, bt) = (self.value(), gamma.value(), beta.value());
        let d = *x.shape().last().ok_or_else(|| Error::contract("layer_norm of a scalar"))?;
        if gm.shape() != [d] || bt.shape() != [d] {
            return Err(Error::Shape {
                op: "layer_norm",
                lhs: x.shape().to_vec(),
                rhs: gm.shape().to_vec(),
            });
        }
        let rows = x.numel() / d;
        let mut xhat = vec![0.0; x.numel()];
        let mut rstd = vec![0.0; rows];
        let mut out = vec![0.0; x.numel()];
        for r in 0..rows {
            let row = &x.data()[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let rs = 1.0 / (var + eps).sqrt();
            rstd[r] = rs;
            for j in 0..d {
                let h = (row[j] - mean) * rs;
                xhat[r * d + j] = h;
                out[r * d + j] = gm.data()[j] * h + bt.data()[j];
            }
        }
        let rg = self.requires_grad() || gamma.requires_grad() || beta.requires_grad();
        Ok(self.tape.push(
            Tensor::new(x.shape().to_vec(), out)?,
            Op::LayerNorm {
                x: self.id,
                gamma: gamma.id,
                beta: beta.id,
                xhat,
                rstd,
            },
            rg,
        ))
    }

    /// GELU, tanh approximation.
    pub fn gelu(&self) -> Var<'t> {
        self.unary(self.value().map(gelu), Op::Gelu(self.id))
    }

    /// `out[r] = self[r, idx[r]]` for a matrix.
    pub fn pick(&self, idx: &[usize]) -> Result<Var<'t>> {
        let v = self.value();
        let (rows, cols) = v.dims2()?;
        if idx.len() != rows || idx.iter().any(|&j| j >= cols) {
            return Err(Error::contract(format!(
                "pick indices {idx:?} do not fit shape {:?}",
                v.shape()
            )));
        }
        let data = idx.iter().enumerate().map(|(r, &j)| v.data()[r * cols + j]).collect();
        Ok(self.unary(
            Tensor::vector(data),
            Op::Pick {
                src: self.id,
                idx: idx.to_vec(),
            },
        ))
    }

    pub fn sum(&self) -> Var<'t> {
        self.unary(Tensor::scalar(self.value().sum()), Op::Sum(self.id))
    }

    pub fn mean(&self) -> Var<'t> {
        let v = self.value();
        let m = v.sum() / v.numel() as f64;
        self.unary(Tensor::scalar(m), Op::Mean(self.id))
    }
}
