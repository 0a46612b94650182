use super::Tensor;
use crate::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddRowBias(Var, Var),
    MatMul(Var, Var),
    Transpose(Var),
    Reshape(Var),
    Relu(Var),
    Sigmoid(Var),
    Tanh(Var),
    Softmax {
        x: Var,
        axis: usize,
    },
    Sum(Var),
    Mse(Var, Var),
    Conv2d {
        input: Var,
        kernels: Var,
        bias: Var,
        stride: usize,
        padding: usize,
    },
    SliceCols {
        x: Var,
        start: usize,
    },
    ConcatCols(Vec<Var>),
}

#[derive(Debug, Clone)]
struct Node {
    shape: Vec<usize>,
    data: Vec<f64>,
    op: Op,
    requires_grad: bool,
}

/// Wengert list of executed operations.
///
/// Every operation appends one node whose inputs were appended earlier, so
/// the node order is already a topological order and [`Tape::backward`]
/// only has to walk it once in reverse.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    /// Gradient of the loss with respect to `var`, or `None` when `var` does
    /// not require gradients or does not influence the loss.
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }

    /// Adds the gradient of each `vars[i]` into `tensors[i].grad`.
    ///
    /// Existing gradients are summed into, never overwritten, so repeated
    /// calls accumulate over a mini-batch.
    pub fn write_into(&self, tensors: &mut [Tensor], vars: &[Var]) -> Result<()> {
        if tensors.len() != vars.len() {
            return Err(Error::contract(format!(
                "{} tensors but {} vars",
                tensors.len(),
                vars.len()
            )));
        }
        for (tensor, &var) in tensors.iter_mut().zip(vars) {
            let numel = tensor.numel();
            let acc = tensor.grad.get_or_insert_with(|| vec![0.0; numel]);
            if let Some(g) = self.get(var) {
                if g.len() != acc.len() {
                    return Err(Error::dim(format!(
                        "gradient of length {} for tensor of shape {:?}",
                        g.len(),
                        tensor.shape()
                    )));
                }
                for (a, &x) in acc.iter_mut().zip(g) {
                    *a += x;
                }
            }
        }
        Ok(())
    }
}

fn numel(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// `out[m×n] += a[m×k] · b[k×n]`
fn gemm_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

fn transpose2(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn conv_out_extent(extent: usize, kernel: usize, stride: usize, padding: usize) -> Option<usize> {
    let padded = extent + 2 * padding;
    if kernel > padded || stride == 0 {
        None
    } else {
        Some((padded - kernel) / stride + 1)
    }
}

struct ConvGeom {
    c_in: usize,
    h: usize,
    w: usize,
    c_out: usize,
    kh: usize,
    kw: usize,
    oh: usize,
    ow: usize,
    stride: usize,
    padding: usize,
}

impl ConvGeom {
    /// Visits every (input index, kernel index, output index) triple that
    /// contributes to the cross-correlation.
    fn for_each(&self, mut f: impl FnMut(usize, usize, usize)) {
        let (s, p) = (self.stride as isize, self.padding as isize);
        for o in 0..self.c_out {
            for c in 0..self.c_in {
                for i in 0..self.kh {
                    for j in 0..self.kw {
                        let k_idx = ((o * self.c_in + c) * self.kh + i) * self.kw + j;
                        for y in 0..self.oh {
                            let iy = y as isize * s + i as isize - p;
                            if iy < 0 || iy >= self.h as isize {
                                continue;
                            }
                            let in_row = (c * self.h + iy as usize) * self.w;
                            let out_row = (o * self.oh + y) * self.ow;
                            for x in 0..self.ow {
                                let ix = x as isize * s + j as isize - p;
                                if ix < 0 || ix >= self.w as isize {
                                    continue;
                                }
                                f(in_row + ix as usize, k_idx, out_row + x);
                            }
                        }
                    }
                }
            }
        }
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, shape: Vec<usize>, data: Vec<f64>, op: Op, requires_grad: bool) -> Var {
        debug_assert_eq!(numel(&shape), data.len());
        self.nodes.push(Node {
            shape,
            data,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn node(&self, v: Var) -> &Node {
        &self.nodes[v.0]
    }

    fn rg(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    /// Records a leaf. It participates in differentiation iff
    /// `tensor.requires_grad`.
    pub fn leaf(&mut self, tensor: &Tensor) -> Var {
        self.push(
            tensor.shape().to_vec(),
            tensor.data().to_vec(),
            Op::Leaf,
            tensor.requires_grad,
        )
    }

    /// Records a leaf that always receives a gradient.
    pub fn param(&mut self, tensor: &Tensor) -> Var {
        self.push(tensor.shape().to_vec(), tensor.data().to_vec(), Op::Leaf, true)
    }

    /// Records a leaf that never receives a gradient.
    pub fn constant(&mut self, shape: &[usize], data: Vec<f64>) -> Result<Var> {
        let t = Tensor::new(shape, data)?;
        Ok(self.push(t.shape().to_vec(), t.into_data(), Op::Leaf, false))
    }

    pub fn value(&self, v: Var) -> &[f64] {
        &self.node(v).data
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        &self.node(v).shape
    }

    pub fn tensor(&self, v: Var) -> Tensor {
        Tensor::new(self.shape(v), self.value(v).to_vec()).expect("tape holds valid shapes")
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim(format!(
                "{what}: shapes {:?} and {:?} differ",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    fn dims2(&self, v: Var, what: &str) -> Result<(usize, usize)> {
        match *self.shape(v) {
            [r, c] => Ok((r, c)),
            ref s => Err(Error::dim(format!("{what}: expected a matrix, got shape {s:?}"))),
        }
    }

    fn zip_map(&mut self, a: Var, b: Var, what: &str, op: Op, f: impl Fn(f64, f64) -> f64) -> Result<Var> {
        self.same_shape(a, b, what)?;
        let data = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        let rg = self.rg(&[a, b]);
        Ok(self.push(self.shape(a).to_vec(), data, op, rg))
    }

    fn map(&mut self, a: Var, op: Op, f: impl Fn(f64) -> f64) -> Var {
        let data = self.value(a).iter().map(|&x| f(x)).collect();
        let rg = self.rg(&[a]);
        self.push(self.shape(a).to_vec(), data, op, rg)
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_map(a, b, "add", Op::Add(a, b), |x, y| x + y)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_map(a, b, "sub", Op::Sub(a, b), |x, y| x - y)
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_map(a, b, "mul", Op::Mul(a, b), |x, y| x * y)
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        self.map(a, Op::Scale(a, factor), |x| x * factor)
    }

    /// Adds a length-`n` bias to every row of an `m×n` matrix.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (m, n) = self.dims2(x, "add_row_bias")?;
        if self.shape(bias) != [n] {
            return Err(Error::dim(format!(
                "add_row_bias: bias shape {:?} does not match {m}x{n} input",
                self.shape(bias)
            )));
        }
        let b = self.value(bias);
        let data = self
            .value(x)
            .chunks(n)
            .flat_map(|row| row.iter().zip(b).map(|(&v, &bv)| v + bv))
            .collect();
        let rg = self.rg(&[x, bias]);
        Ok(self.push(vec![m, n], data, Op::AddRowBias(x, bias), rg))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, k) = self.dims2(a, "matmul")?;
        let (k2, n) = self.dims2(b, "matmul")?;
        if k != k2 {
            return Err(Error::dim(format!(
                "matmul: inner dimensions differ for shapes {:?} and {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        let mut out = vec![0.0; m * n];
        gemm_acc(self.value(a), self.value(b), &mut out, m, k, n);
        let rg = self.rg(&[a, b]);
        Ok(self.push(vec![m, n], out, Op::MatMul(a, b), rg))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let (r, c) = self.dims2(a, "transpose")?;
        let data = transpose2(self.value(a), r, c);
        let rg = self.rg(&[a]);
        Ok(self.push(vec![c, r], data, Op::Transpose(a), rg))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        if shape.is_empty() || shape.contains(&0) || numel(shape) != self.value(a).len() {
            return Err(Error::dim(format!(
                "reshape: cannot view {:?} as {shape:?}",
                self.shape(a)
            )));
        }
        let data = self.value(a).to_vec();
        let rg = self.rg(&[a]);
        Ok(self.push(shape.to_vec(), data, Op::Reshape(a), rg))
    }

    /// `max(0, x)`; the subgradient at 0 is 0.
    pub fn relu(&mut self, a: Var) -> Var {
        self.map(a, Op::Relu(a), |x| if x > 0.0 { x } else { 0.0 })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.map(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.map(a, Op::Tanh(a), f64::tanh)
    }

    /// Max-subtracted softmax along `axis`.
    pub fn softmax(&mut self, a: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(a).to_vec();
        if axis >= shape.len() {
            return Err(Error::dim(format!("softmax: axis {axis} invalid for shape {shape:?}")));
        }
        let n = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        let x = self.value(a);
        let mut out = vec![0.0; x.len()];
        for o in 0..outer {
            for r in 0..inner {
                let idx = |k: usize| (o * n + k) * inner + r;
                let max = (0..n).map(|k| x[idx(k)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for k in 0..n {
                    let e = (x[idx(k)] - max).exp();
                    out[idx(k)] = e;
                    total += e;
                }
                for k in 0..n {
                    out[idx(k)] /= total;
                }
            }
        }
        let rg = self.rg(&[a]);
        Ok(self.push(shape, out, Op::Softmax { x: a, axis }, rg))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let total = self.value(a).iter().sum();
        let rg = self.rg(&[a]);
        self.push(vec![1], vec![total], Op::Sum(a), rg)
    }

    /// Mean squared error over all elements.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape(pred, target, "mse_loss")?;
        let p = self.value(pred);
        let t = self.value(target);
        let mse = p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / p.len() as f64;
        let rg = self.rg(&[pred, target]);
        Ok(self.push(vec![1], vec![mse], Op::Mse(pred, target), rg))
    }

    /// 2-D cross-correlation (no kernel flip) with zero padding.
    ///
    /// `input` is `C_in×H×W`, `kernels` is `C_out×C_in×kh×kw`, `bias` is
    /// `C_out`.
    pub fn conv2d(&mut self, input: Var, kernels: Var, bias: Var, stride: usize, padding: usize) -> Result<Var> {
        let geom = self.conv_geom(input, kernels, bias, stride, padding)?;
        let x = self.value(input);
        let k = self.value(kernels);
        let b = self.value(bias);
        let plane = geom.oh * geom.ow;
        let mut out = vec![0.0; geom.c_out * plane];
        for (o, chunk) in out.chunks_mut(plane).enumerate() {
            chunk.fill(b[o]);
        }
        geom.for_each(|xi, ki, oi| out[oi] += x[xi] * k[ki]);
        let rg = self.rg(&[input, kernels, bias]);
        Ok(self.push(
            vec![geom.c_out, geom.oh, geom.ow],
            out,
            Op::Conv2d {
                input,
                kernels,
                bias,
                stride,
                padding,
            },
            rg,
        ))
    }

    fn conv_geom(&self, input: Var, kernels: Var, bias: Var, stride: usize, padding: usize) -> Result<ConvGeom> {
        let (c_in, h, w) = match *self.shape(input) {
            [c, h, w] => (c, h, w),
            ref s => return Err(Error::dim(format!("conv2d: input must be C×H×W, got {s:?}"))),
        };
        let (c_out, kc, kh, kw) = match *self.shape(kernels) {
            [o, c, kh, kw] => (o, c, kh, kw),
            ref s => {
                return Err(Error::dim(format!(
                    "conv2d: kernels must be C_out×C_in×kh×kw, got {s:?}"
                )))
            }
        };
        if kc != c_in {
            return Err(Error::dim(format!(
                "conv2d: kernels expect {kc} input channels, input has {c_in}"
            )));
        }
        if self.shape(bias) != [c_out] {
            return Err(Error::dim(format!(
                "conv2d: bias shape {:?} does not match {c_out} output channels",
                self.shape(bias)
            )));
        }
        if stride == 0 {
            return Err(Error::dim("conv2d: stride must be positive"));
        }
        let (Some(oh), Some(ow)) = (
            conv_out_extent(h, kh, stride, padding),
            conv_out_extent(w, kw, stride, padding),
        ) else {
            return Err(Error::dim(format!(
                "conv2d: kernel {kh}x{kw} larger than padded input {}x{}",
                h + 2 * padding,
                w + 2 * padding
            )));
        };
        Ok(ConvGeom {
            c_in,
            h,
            w,
            c_out,
            kh,
            kw,
            oh,
            ow,
            stride,
            padding,
        })
    }

    /// Columns `start..start+len` of an `m×n` matrix.
    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let (m, n) = self.dims2(x, "slice_cols")?;
        if len == 0 || start + len > n {
            return Err(Error::dim(format!(
                "slice_cols: columns {start}..{} out of range for {m}x{n}",
                start + len
            )));
        }
        let data = self
            .value(x)
            .chunks(n)
            .flat_map(|row| row[start..start + len].iter().copied())
            .collect();
        let rg = self.rg(&[x]);
        Ok(self.push(vec![m, len], data, Op::SliceCols { x, start }, rg))
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::dim("concat_cols: no inputs"))?;
        let (m, _) = self.dims2(*first, "concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (r, c) = self.dims2(p, "concat_cols")?;
            if r != m {
                return Err(Error::dim(format!("concat_cols: row counts {m} and {r} differ")));
            }
            widths.push(c);
        }
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(m * total);
        for row in 0..m {
            for (&p, &w) in parts.iter().zip(&widths) {
                data.extend_from_slice(&self.value(p)[row * w..(row + 1) * w]);
            }
        }
        let rg = self.rg(parts);
        Ok(self.push(vec![m, total], data, Op::ConcatCols(parts.to_vec()), rg))
    }

    /// Smallest |x| over all inputs to `relu` recorded so far. Finite
    /// difference checks use this to stay clear of the kink.
    pub fn min_abs_relu_input(&self) -> Option<f64> {
        self.nodes
            .iter()
            .filter_map(|n| match n.op {
                Op::Relu(x) => Some(self.value(x).iter().fold(f64::INFINITY, |m, v| m.min(v.abs()))),
                _ => None,
            })
            .reduce(f64::min)
    }

    /// Reverse sweep from a scalar `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if loss.0 >= self.nodes.len() {
            return Err(Error::contract("backward: loss is not on this tape"));
        }
        if self.value(loss).len() != 1 {
            return Err(Error::contract(format!(
                "backward: loss must be scalar, got shape {:?}",
                self.shape(loss)
            )));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; loss.0 + 1];
        if self.node(loss).requires_grad {
            grads[loss.0] = Some(vec![1.0]);
        }
        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }
        grads.resize(self.nodes.len(), None);
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Vec<f64>>], v: Var, f: impl FnOnce(&mut [f64])) {
        if !self.node(v).requires_grad {
            return;
        }
        let n = self.value(v).len();
        let slot = grads[v.0].get_or_insert_with(|| vec![0.0; n]);
        f(slot);
    }

    fn propagate(&self, i: usize, g: &[f64], grads: &mut [Option<Vec<f64>>]) {
        let node = &self.nodes[i];
        match node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                self.accumulate(grads, a, |s| add_into(s, g));
                self.accumulate(grads, b, |s| add_into(s, g));
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, a, |s| add_into(s, g));
                self.accumulate(grads, b, |s| {
                    for (x, &d) in s.iter_mut().zip(g) {
                        *x -= d;
                    }
                });
            }
            Op::Mul(a, b) => {
                let (av, bv) = (self.value(a), self.value(b));
                self.accumulate(grads, a, |s| {
                    for ((x, &d), &y) in s.iter_mut().zip(g).zip(bv) {
                        *x += d * y;
                    }
                });
                self.accumulate(grads, b, |s| {
                    for ((x, &d), &y) in s.iter_mut().zip(g).zip(av) {
                        *x += d * y;
                    }
                });
            }
            Op::Scale(a, f) => self.accumulate(grads, a, |s| {
                for (x, &d) in s.iter_mut().zip(g) {
                    *x += d * f;
                }
            }),
            Op::AddRowBias(x, b) => {
                let n = node.shape[1];
                self.accumulate(grads, x, |s| add_into(s, g));
                self.accumulate(grads, b, |s| {
                    for row in g.chunks(n) {
                        add_into(s, row);
                    }
                });
            }
            Op::MatMul(a, b) => {
                let (m, k) = (self.shape(a)[0], self.shape(a)[1]);
                let n = self.shape(b)[1];
                let (av, bv) = (self.value(a), self.value(b));
                self.accumulate(grads, a, |s| {
                    let bt = transpose2(bv, k, n);
                    gemm_acc(g, &bt, s, m, n, k);
                });
                self.accumulate(grads, b, |s| {
                    let at = transpose2(av, m, k);
                    gemm_acc(&at, g, s, k, m, n);
                });
            }
            Op::Transpose(a) => {
                let (r, c) = (node.shape[0], node.shape[1]);
                self.accumulate(grads, a, |s| add_into(s, &transpose2(g, r, c)));
            }
            Op::Reshape(a) => self.accumulate(grads, a, |s| add_into(s, g)),
            Op::Relu(a) => {
                let x = self.value(a);
                self.accumulate(grads, a, |s| {
                    for ((acc, &d), &v) in s.iter_mut().zip(g).zip(x) {
                        if v > 0.0 {
                            *acc += d;
                        }
                    }
                });
            }
            Op::Sigmoid(a) => self.accumulate(grads, a, |s| {
                for ((acc, &d), &y) in s.iter_mut().zip(g).zip(&node.data) {
                    *acc += d * y * (1.0 - y);
                }
            }),
            Op::Tanh(a) => self.accumulate(grads, a, |s| {
                for ((acc, &d), &y) in s.iter_mut().zip(g).zip(&node.data) {
                    *acc += d * (1.0 - y * y);
                }
            }),
            Op::Softmax { x, axis } => {
                let shape = &node.shape;
                let n = shape[axis];
                let outer: usize = shape[..axis].iter().product();
                let inner: usize = shape[axis + 1..].iter().product();
                let y = &node.data;
                self.accumulate(grads, x, |s| {
                    for o in 0..outer {
                        for r in 0..inner {
                            let idx = |k: usize| (o * n + k) * inner + r;
                            let dot: f64 = (0..n).map(|k| g[idx(k)] * y[idx(k)]).sum();
                            for k in 0..n {
                                s[idx(k)] += y[idx(k)] * (g[idx(k)] - dot);
                            }
                        }
                    }
                });
            }
            Op::Sum(a) => self.accumulate(grads, a, |s| {
                for x in s.iter_mut() {
                    *x += g[0];
                }
            }),
            Op::Mse(p, t) => {
                let (pv, tv) = (self.value(p), self.value(t));
                let scale = 2.0 * g[0] / pv.len() as f64;
                self.accumulate(grads, p, |s| {
                    for ((acc, &a), &b) in s.iter_mut().zip(pv).zip(tv) {
                        *acc += scale * (a - b);
                    }
                });
                self.accumulate(grads, t, |s| {
                    for ((acc, &a), &b) in s.iter_mut().zip(pv).zip(tv) {
                        *acc -= scale * (a - b);
                    }
                });
            }
            Op::Conv2d {
                input,
                kernels,
                bias,
                stride,
                padding,
            } => {
                let geom = self
                    .conv_geom(input, kernels, bias, stride, padding)
                    .expect("validated in forward");
                let (xv, kv) = (self.value(input), self.value(kernels));
                self.accumulate(grads, bias, |s| {
                    let plane = geom.oh * geom.ow;
                    for (o, chunk) in g.chunks(plane).enumerate() {
                        s[o] += chunk.iter().sum::<f64>();
                    }
                });
                self.accumulate(grads, kernels, |s| {
                    geom.for_each(|xi, ki, oi| s[ki] += g[oi] * xv[xi]);
                });
                self.accumulate(grads, input, |s| {
                    geom.for_each(|xi, ki, oi| s[xi] += g[oi] * kv[ki]);
                });
            }
            Op::SliceCols { x, start } => {
                let n = self.shape(x)[1];
                let len = node.shape[1];
                self.accumulate(grads, x, |s| {
                    for (row, grow) in s.chunks_mut(n).zip(g.chunks(len)) {
                        add_into(&mut row[start..start + len], grow);
                    }
                });
            }
            Op::ConcatCols(ref parts) => {
                let total = node.shape[1];
                let mut offset = 0;
                for &p in parts {
                    let w = self.shape(p)[1];
                    self.accumulate(grads, p, |s| {
                        for (row, grow) in s.chunks_mut(w).zip(g.chunks(total)) {
                            add_into(row, &grow[offset..offset + w]);
                        }
                    });
                    offset += w;
                }
            }
        }
    }
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, &b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}
