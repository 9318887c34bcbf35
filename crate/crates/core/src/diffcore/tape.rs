//! Define-by-run reverse-mode differentiation over dense 2-D arrays.
//!
//! Every operation evaluates eagerly and appends a node to the [`Tape`].
//! Node ids are handed out in execution order, so walking the node list
//! backwards visits every node after all of its consumers.

use ndarray::{s, Array2, Axis, Zip};

use crate::error::{shape_err, Error, Result};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Value, lazily materialised gradient and the `requires_grad` flag of one node.
#[derive(Clone, Debug)]
pub struct Tensor {
    pub value: Array2<f64>,
    pub grad: Option<Array2<f64>>,
    pub requires_grad: bool,
}

impl Tensor {
    pub fn shape(&self) -> [usize; 2] {
        [self.value.nrows(), self.value.ncols()]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Sigmoid,
    Tanh,
    Relu,
    Exp,
    Neg,
}

impl Unary {
    fn name(self) -> &'static str {
        match self {
            Unary::Sigmoid => "sigmoid",
            Unary::Tanh => "tanh",
            Unary::Relu => "relu",
            Unary::Exp => "exp",
            Unary::Neg => "neg",
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Unary::Sigmoid => sigmoid(x),
            Unary::Tanh => x.tanh(),
            Unary::Relu => x.max(0.0),
            Unary::Exp => x.exp(),
            Unary::Neg => -x,
        }
    }

    /// Local derivative expressed through the forward output `y`.
    fn derivative(self, y: f64) -> f64 {
        match self {
            Unary::Sigmoid => y * (1.0 - y),
            Unary::Tanh => 1.0 - y * y,
            Unary::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Unary::Exp => y,
            Unary::Neg => -1.0,
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// User-supplied adjoint rule for operations the tape does not know natively.
pub trait CustomBackward {
    /// Returns one gradient per input, each shaped like that input.
    fn backward(
        &self,
        inputs: &[&Array2<f64>],
        output: &Array2<f64>,
        grad_output: &Array2<f64>,
    ) -> Result<Vec<Array2<f64>>>;
}

enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    MulCol(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Unary(Unary, Var),
    SumAll(Var),
    MeanAll(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    GatherRows(Var, Vec<usize>),
    GroupSumRows(Var, usize),
    SoftmaxRows(Var),
    StraightThrough(Var),
    Custom(Vec<Var>, Box<dyn CustomBackward>),
}

struct Node {
    tensor: Tensor,
    op: Op,
}

/// Ordered record of executed operations.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

fn dims(a: &Array2<f64>) -> [usize; 2] {
    [a.nrows(), a.ncols()]
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

    fn push(&mut self, value: Array2<f64>, requires_grad: bool, op: Op) -> Var {
        let id = Var(self.nodes.len());
        self.nodes.push(Node {
            tensor: Tensor {
                value,
                grad: None,
                requires_grad,
            },
            op,
        });
        id
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].tensor.requires_grad
    }

    /// Leaf node. Trainable leaves receive gradients on [`Tape::backward`].
    pub fn leaf(&mut self, value: Array2<f64>, requires_grad: bool) -> Var {
        self.push(value, requires_grad, Op::Leaf)
    }

    pub fn constant(&mut self, value: Array2<f64>) -> Var {
        self.leaf(value, false)
    }

    pub fn value(&self, v: Var) -> &Array2<f64> {
        &self.nodes[v.0].tensor.value
    }

    pub fn tensor(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].tensor
    }

    pub fn grad(&self, v: Var) -> Option<&Array2<f64>> {
        self.nodes[v.0].tensor.grad.as_ref()
    }

    pub fn shape(&self, v: Var) -> [usize; 2] {
        self.nodes[v.0].tensor.shape()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.ncols() != bv.nrows() {
            return Err(shape_err("matmul", &dims(av), &dims(bv)));
        }
        let out = av.dot(bv);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, rg, Op::MatMul(a, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (sa, sb) = (self.shape(a), self.shape(b));
        if sa != sb {
            return Err(shape_err(op, &sa, &sb));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.value(a) + self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, rg, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.value(a) - self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, rg, Op::Sub(a, b)))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.value(a) * self.value(b);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(out, rg, Op::Mul(a, b)))
    }

    /// `x (r×c) + row (1×c)` broadcast over rows.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let (sx, sr) = (self.shape(x), self.shape(row));
        if sr[0] != 1 || sr[1] != sx[1] {
            return Err(shape_err("add_row", &sx, &sr));
        }
        let out = self.value(x) + self.value(row);
        let rg = self.rg(x) || self.rg(row);
        Ok(self.push(out, rg, Op::AddRow(x, row)))
    }

    /// `x (r×c) * col (r×1)` broadcast over columns.
    pub fn mul_col(&mut self, x: Var, col: Var) -> Result<Var> {
        let (sx, sc) = (self.shape(x), self.shape(col));
        if sc[1] != 1 || sc[0] != sx[0] {
            return Err(shape_err("mul_col", &sx, &sc));
        }
        let out = self.value(x) * self.value(col);
        let rg = self.rg(x) || self.rg(col);
        Ok(self.push(out, rg, Op::MulCol(x, col)))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let out = self.value(x) * k;
        let rg = self.rg(x);
        self.push(out, rg, Op::Scale(x, k))
    }

    pub fn add_scalar(&mut self, x: Var, k: f64) -> Var {
        let out = self.value(x) + k;
        let rg = self.rg(x);
        self.push(out, rg, Op::AddScalar(x))
    }

    pub fn unary(&mut self, kind: Unary, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if let Some(index) = xv.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: kind.name(),
                index,
            });
        }
        let out = xv.mapv(|v| kind.apply(v));
        let rg = self.rg(x);
        Ok(self.push(out, rg, Op::Unary(kind, x)))
    }

    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Sigmoid, x)
    }

    pub fn tanh(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Tanh, x)
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Relu, x)
    }

    pub fn exp(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Exp, x)
    }

    pub fn neg(&mut self, x: Var) -> Result<Var> {
        self.unary(Unary::Neg, x)
    }

    /// Sum of all entries as a 1×1 node.
    pub fn sum(&mut self, x: Var) -> Var {
        let out = Array2::from_elem((1, 1), self.value(x).sum());
        let rg = self.rg(x);
        self.push(out, rg, Op::SumAll(x))
    }

    pub fn mean(&mut self, x: Var) -> Var {
        let v = self.value(x);
        let out = Array2::from_elem((1, 1), v.sum() / v.len().max(1) as f64);
        let rg = self.rg(x);
        self.push(out, rg, Op::MeanAll(x))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Parameter("concat_cols of nothing".into()))?;
        let rows = self.shape(*first)[0];
        let mut width = 0;
        for p in parts {
            let sp = self.shape(*p);
            if sp[0] != rows {
                return Err(shape_err("concat_cols", &self.shape(*first), &sp));
            }
            width += sp[1];
        }
        let mut out = Array2::zeros((rows, width));
        let mut at = 0;
        for p in parts {
            let v = self.value(*p);
            out.slice_mut(s![.., at..at + v.ncols()]).assign(v);
            at += v.ncols();
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(out, rg, Op::ConcatCols(parts.to_vec())))
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Result<Var> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Parameter("concat_rows of nothing".into()))?;
        let cols = self.shape(*first)[1];
        let mut height = 0;
        for p in parts {
            let sp = self.shape(*p);
            if sp[1] != cols {
                return Err(shape_err("concat_rows", &self.shape(*first), &sp));
            }
            height += sp[0];
        }
        let mut out = Array2::zeros((height, cols));
        let mut at = 0;
        for p in parts {
            let v = self.value(*p);
            out.slice_mut(s![at..at + v.nrows(), ..]).assign(v);
            at += v.nrows();
        }
        let rg = parts.iter().any(|p| self.rg(*p));
        Ok(self.push(out, rg, Op::ConcatRows(parts.to_vec())))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let sx = self.shape(x);
        if start + len > sx[1] {
            return Err(shape_err("slice_cols", &sx, &[start, len]));
        }
        let out = self.value(x).slice(s![.., start..start + len]).to_owned();
        let rg = self.rg(x);
        Ok(self.push(out, rg, Op::SliceCols(x, start)))
    }

    /// Row `i` of the output is row `indices[i]` of `x`; repeats are allowed.
    pub fn gather_rows(&mut self, x: Var, indices: Vec<usize>) -> Result<Var> {
        let sx = self.shape(x);
        if let Some(&bad) = indices.iter().find(|&&i| i >= sx[0]) {
            return Err(shape_err("gather_rows", &sx, &[bad]));
        }
        let out = self.value(x).select(Axis(0), &indices);
        let rg = self.rg(x);
        Ok(self.push(out, rg, Op::GatherRows(x, indices)))
    }

    /// Sums consecutive blocks of `group` rows: `(k·group)×c → k×c`.
    pub fn group_sum_rows(&mut self, x: Var, group: usize) -> Result<Var> {
        let sx = self.shape(x);
        if group == 0 || sx[0] % group != 0 {
            return Err(shape_err("group_sum_rows", &sx, &[group]));
        }
        let xv = self.value(x);
        let k = sx[0] / group;
        let mut out = Array2::zeros((k, sx[1]));
        for (i, mut row) in out.outer_iter_mut().enumerate() {
            for r in 0..group {
                row += &xv.row(i * group + r);
            }
        }
        let rg = self.rg(x);
        Ok(self.push(out, rg, Op::GroupSumRows(x, group)))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        if let Some(index) = xv.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                op: "softmax",
                index,
            });
        }
        let mut out = xv.clone();
        for mut row in out.outer_iter_mut() {
            let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            row.mapv_inplace(|v| (v - m).exp());
            let z = row.sum();
            row.mapv_inplace(|v| v / z);
        }
        let rg = self.rg(x);
        Ok(self.push(out, rg, Op::SoftmaxRows(x)))
    }

    /// Forward value `hard`, gradient routed unchanged into `soft`.
    pub fn straight_through(&mut self, soft: Var, hard: Array2<f64>) -> Result<Var> {
        let ss = self.shape(soft);
        if ss != dims(&hard) {
            return Err(shape_err("straight_through", &ss, &dims(&hard)));
        }
        let rg = self.rg(soft);
        Ok(self.push(hard, rg, Op::StraightThrough(soft)))
    }

    /// Records a node whose value was computed by the caller; `rule` supplies the adjoint.
    pub fn custom(
        &mut self,
        inputs: &[Var],
        output: Array2<f64>,
        rule: Box<dyn CustomBackward>,
    ) -> Var {
        let rg = inputs.iter().any(|v| self.rg(*v));
        self.push(output, rg, Op::Custom(inputs.to_vec(), rule))
    }

    /// Clears gradients of every node.
    pub fn zero_grad(&mut self) {
        for n in &mut self.nodes {
            n.tensor.grad = None;
        }
    }

    /// Back-propagates from a 1×1 node, accumulating into every reachable
    /// `requires_grad` node.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.shape(loss) != [1, 1] {
            return Err(shape_err("backward", &self.shape(loss), &[1, 1]));
        }
        let seed = Array2::ones((1, 1));
        self.backward_with(loss, seed)
    }

    /// Back-propagates an arbitrary upstream gradient shaped like `root`.
    pub fn backward_with(&mut self, root: Var, seed: Array2<f64>) -> Result<()> {
        if self.shape(root) != dims(&seed) {
            return Err(shape_err("backward", &self.shape(root), &dims(&seed)));
        }
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; root.0 + 1];
        grads[root.0] = Some(seed);
        for id in (0..=root.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            if !self.nodes[id].tensor.requires_grad {
                continue;
            }
            self.propagate(id, &g, &mut grads)?;
            match &mut self.nodes[id].tensor.grad {
                Some(acc) => *acc += &g,
                slot => *slot = Some(g),
            }
        }
        Ok(())
    }

    fn propagate(&self, id: usize, g: &Array2<f64>, grads: &mut [Option<Array2<f64>>]) -> Result<()> {
        let node = &self.nodes[id];
        let out = &node.tensor.value;
        let mut send = |v: Var, delta: Array2<f64>| {
            if !self.nodes[v.0].tensor.requires_grad {
                return;
            }
            match &mut grads[v.0] {
                Some(acc) => *acc += &delta,
                slot => *slot = Some(delta),
            }
        };
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.rg(*a) {
                    send(*a, g.dot(&self.value(*b).t()));
                }
                if self.rg(*b) {
                    send(*b, self.value(*a).t().dot(g));
                }
            }
            Op::Add(a, b) => {
                send(*a, g.clone());
                send(*b, g.clone());
            }
            Op::Sub(a, b) => {
                send(*a, g.clone());
                send(*b, -g);
            }
            Op::Mul(a, b) => {
                send(*a, g * self.value(*b));
                send(*b, g * self.value(*a));
            }
            Op::AddRow(x, row) => {
                send(*x, g.clone());
                if self.rg(*row) {
                    send(*row, g.sum_axis(Axis(0)).insert_axis(Axis(0)));
                }
            }
            Op::MulCol(x, col) => {
                if self.rg(*x) {
                    send(*x, g * self.value(*col));
                }
                if self.rg(*col) {
                    let gc = (g * self.value(*x)).sum_axis(Axis(1)).insert_axis(Axis(1));
                    send(*col, gc);
                }
            }
            Op::Scale(x, k) => send(*x, g * *k),
            Op::AddScalar(x) => send(*x, g.clone()),
            Op::Unary(kind, x) => {
                let mut d = g.clone();
                Zip::from(&mut d).and(out).for_each(|d, &y| *d *= kind.derivative(y));
                send(*x, d);
            }
            Op::SumAll(x) => {
                send(*x, Array2::from_elem(self.value(*x).raw_dim(), g[[0, 0]]));
            }
            Op::MeanAll(x) => {
                let xv = self.value(*x);
                let k = g[[0, 0]] / xv.len().max(1) as f64;
                send(*x, Array2::from_elem(xv.raw_dim(), k));
            }
            Op::ConcatCols(parts) => {
                let mut at = 0;
                for p in parts {
                    let w = self.value(*p).ncols();
                    if self.rg(*p) {
                        send(*p, g.slice(s![.., at..at + w]).to_owned());
                    }
                    at += w;
                }
            }
            Op::ConcatRows(parts) => {
                let mut at = 0;
                for p in parts {
                    let h = self.value(*p).nrows();
                    if self.rg(*p) {
                        send(*p, g.slice(s![at..at + h, ..]).to_owned());
                    }
                    at += h;
                }
            }
            Op::SliceCols(x, start) => {
                let xv = self.value(*x);
                let mut d = Array2::zeros(xv.raw_dim());
                d.slice_mut(s![.., *start..*start + g.ncols()]).assign(g);
                send(*x, d);
            }
            Op::GatherRows(x, indices) => {
                let mut d = Array2::zeros(self.value(*x).raw_dim());
                for (i, &src) in indices.iter().enumerate() {
                    let mut row = d.row_mut(src);
                    row += &g.row(i);
                }
                send(*x, d);
            }
            Op::GroupSumRows(x, group) => {
                let xv = self.value(*x);
                let mut d = Array2::zeros(xv.raw_dim());
                for (r, mut row) in d.outer_iter_mut().enumerate() {
                    row.assign(&g.row(r / group));
                }
                send(*x, d);
            }
            Op::SoftmaxRows(x) => {
                let mut d = Array2::zeros(out.raw_dim());
                for ((mut drow, yrow), grow) in d.outer_iter_mut().zip(out.outer_iter()).zip(g.outer_iter()) {
                    let dot: f64 = yrow.iter().zip(grow.iter()).map(|(y, g)| y * g).sum();
                    Zip::from(&mut drow)
                        .and(&yrow)
                        .and(&grow)
                        .for_each(|d, &y, &g| *d = y * (g - dot));
                }
                send(*x, d);
            }
            Op::StraightThrough(soft) => send(*soft, g.clone()),
            Op::Custom(inputs, rule) => {
                let ins: Vec<&Array2<f64>> = inputs.iter().map(|v| self.value(*v)).collect();
                let deltas = rule.backward(&ins, out, g)?;
                if deltas.len() != inputs.len() {
                    return Err(Error::Numeric(format!(
                        "custom adjoint returned {} gradients for {} inputs",
                        deltas.len(),
                        inputs.len()
                    )));
                }
                for (v, d) in inputs.iter().zip(deltas) {
                    if dims(&d) != dims(self.value(*v)) {
                        return Err(shape_err("custom backward", &dims(&d), &dims(self.value(*v))));
                    }
                    send(*v, d);
                }
            }
        }
        Ok(())
    }
}
