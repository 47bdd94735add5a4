use super::params::{Gradients, ParamId, ParamStore};
use super::tensor::{gemm_acc, gemm_nt_acc, gemm_tn_acc};
use super::{AutodiffError, Tensor};

type Result<T> = std::result::Result<T, AutodiffError>;

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementwiseKind {
    Add,
    Sub,
    Mul,
    Tanh,
    Sigmoid,
    Square,
    Sqrt,
    Abs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    Param(ParamId),
    Gather { param: ParamId, rows: Vec<usize> },
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Sigmoid(Var),
    Square(Var),
    Sqrt(Var),
    Abs(Var),
    Log { x: Var, floor: f64 },
    Softmax(Var),
    Reduce { x: Var, kind: ReduceKind, axis: Option<usize> },
    RepeatConcat(Var),
    Transpose(Var),
    Reshape(Var),
    Column(Var, usize),
    Row(Var, usize),
    Slice { x: Var, start: usize },
    StackColumns(Vec<Var>),
    StackRows(Vec<Var>),
    ConcatRows(Var, Var),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Leaf => "leaf",
            Op::Param(_) => "param",
            Op::Gather { .. } => "gather",
            Op::MatMul(..) => "matmul",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Scale(..) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Square(_) => "square",
            Op::Sqrt(_) => "sqrt",
            Op::Abs(_) => "abs",
            Op::Log { .. } => "log",
            Op::Softmax(_) => "softmax",
            Op::Reduce { .. } => "reduce",
            Op::RepeatConcat(_) => "repeat_concat",
            Op::Transpose(_) => "transpose",
            Op::Reshape(_) => "reshape",
            Op::Column(..) => "column",
            Op::Row(..) => "row",
            Op::Slice { .. } => "slice",
            Op::StackColumns(_) => "stack_columns",
            Op::StackRows(_) => "stack_rows",
            Op::ConcatRows(..) => "concat_rows",
        }
    }
}

struct Node {
    op: Op,
    value: Tensor,
}

/// Append-only record of a forward computation over a borrowed parameter store.
///
/// Nodes are appended in evaluation order, so the node list is always
/// topologically sorted. Parameters are read through the borrow and never
/// copied onto the tape except for rows gathered from lookup tables.
pub struct Tape<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
}

/// Result of a backward sweep: parameter gradients plus every node's adjoint.
pub struct Backward {
    pub params: Gradients,
    node_grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Backward {
    /// Adjoint of `v`; zeros when the root does not depend on `v`.
    pub fn grad(&self, v: Var) -> Tensor {
        self.node_grads[v.0].clone().unwrap_or_else(|| Tensor::zeros(&self.shapes[v.0]))
    }
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Self { params, nodes: Vec::new() }
    }

    pub fn params(&self) -> &'p ParamStore {
        self.params
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Tensor {
        if let Op::Param(id) = self.nodes[v.0].op {
            return self.params.value(id);
        }
        &self.nodes[v.0].value
    }

    pub fn scalar(&self, v: Var) -> Result<f64> {
        self.value(v).item()
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.value(v).shape()
    }

    fn push(&mut self, op: Op, value: Tensor) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        // value lives in the store; keep a 1-element placeholder on the tape
        self.push(Op::Param(id), Tensor::scalar(0.0))
    }

    /// Rows `rows` of a matrix parameter, as a `rows.len() × cols` matrix.
    pub fn gather(&mut self, id: ParamId, rows: &[usize]) -> Result<Var> {
        let table = self.params.value(id);
        let (n, cols) = table.dims2()?;
        if rows.is_empty() {
            return Err(AutodiffError::Shape("gather with no rows".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * cols);
        for &r in rows {
            if r >= n {
                return Err(AutodiffError::Shape(format!("row {r} out of range for table with {n} rows")));
            }
            data.extend_from_slice(table.row(r));
        }
        let value = Tensor::new(vec![rows.len(), cols], data)?;
        Ok(self.push(Op::Gather { param: id, rows: rows.to_vec() }, value))
    }

    /// Matrix product. `b` may be a vector, in which case the result is a vector.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (va, vb) = (self.value(a), self.value(b));
        let (m, k) = va.dims2()?;
        let (kb, n, out_shape) = match vb.shape() {
            &[kb, n] => (kb, n, vec![m, n]),
            &[kb] => (kb, 1, vec![m]),
            other => return Err(AutodiffError::Shape(format!("matmul rhs has shape {other:?}"))),
        };
        if k != kb {
            return Err(AutodiffError::Shape(format!(
                "matmul inner dimensions differ: {:?} x {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let mut out = vec![0.0; m * n];
        gemm_acc(va.data(), vb.data(), &mut out, m, k, n);
        let value = Tensor::new(out_shape, out)?;
        Ok(self.push(Op::MatMul(a, b), value))
    }

    fn same_shape(&self, a: Var, b: Var, what: &str) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(AutodiffError::Shape(format!(
                "{what}: operand shapes differ: {:?} vs {:?}",
                self.shape(a),
                self.shape(b)
            )));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "add")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x + y);
        Ok(self.push(Op::Add(a, b), v))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "sub")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x - y);
        Ok(self.push(Op::Sub(a, b), v))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape(a, b, "mul")?;
        let v = self.value(a).zip_map(self.value(b), |x, y| x * y);
        Ok(self.push(Op::Mul(a, b), v))
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Var {
        let v = self.value(a).map(|x| x * factor);
        self.push(Op::Scale(a, factor), v)
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let v = self.value(a).map(|x| x + c);
        self.push(Op::AddScalar(a), v)
    }

    /// `c - a`, elementwise.
    pub fn rsub_scalar(&mut self, c: f64, a: Var) -> Var {
        let neg = self.scale(a, -1.0);
        self.add_scalar(neg, c)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(Op::Tanh(a), v)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.value(a).map(sigmoid);
        self.push(Op::Sigmoid(a), v)
    }

    pub fn square(&mut self, a: Var) -> Var {
        let v = self.value(a).map(|x| x * x);
        self.push(Op::Square(a), v)
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        if let Some(&bad) = self.value(a).data().iter().find(|&&x| x < 0.0) {
            return Err(AutodiffError::Domain(format!("sqrt of negative value {bad}")));
        }
        let v = self.value(a).map(f64::sqrt);
        Ok(self.push(Op::Sqrt(a), v))
    }

    pub fn abs(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::abs);
        self.push(Op::Abs(a), v)
    }

    /// `ln(max(a, floor))`; the gradient is zero where the floor is active.
    pub fn log_clamped(&mut self, a: Var, floor: f64) -> Var {
        let v = self.value(a).map(|x| if x.is_nan() { x } else { x.max(floor).ln() });
        self.push(Op::Log { x: a, floor }, v)
    }

    /// Dispatches one of the elementwise kinds. Binary kinds take two args.
    pub fn elementwise(&mut self, kind: ElementwiseKind, args: &[Var]) -> Result<Var> {
        use ElementwiseKind::*;
        let arity = match kind {
            Add | Sub | Mul => 2,
            _ => 1,
        };
        if args.len() != arity {
            return Err(AutodiffError::Arity { op: format!("{kind:?}"), expected: arity, got: args.len() });
        }
        match kind {
            Add => self.add(args[0], args[1]),
            Sub => self.sub(args[0], args[1]),
            Mul => self.mul(args[0], args[1]),
            Tanh => Ok(self.tanh(args[0])),
            Sigmoid => Ok(self.sigmoid(args[0])),
            Square => Ok(self.square(args[0])),
            Sqrt => self.sqrt(args[0]),
            Abs => Ok(self.abs(args[0])),
        }
    }

    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let n = self.value(x).len();
        self.masked_softmax(x, &vec![true; n])
    }

    /// Softmax of a vector over the positions where `valid` is true.
    /// Masked positions receive exactly zero weight.
    pub fn masked_softmax(&mut self, x: Var, valid: &[bool]) -> Result<Var> {
        let xv = self.value(x);
        if xv.rank() != 1 {
            return Err(AutodiffError::Shape(format!("softmax expects a vector, got {:?}", xv.shape())));
        }
        if valid.len() != xv.len() {
            return Err(AutodiffError::Shape(format!(
                "mask length {} does not match input length {}",
                valid.len(),
                xv.len()
            )));
        }
        let out = softmax_values(xv.data(), valid).ok_or(AutodiffError::EmptySoftmax)?;
        let value = Tensor::vector(out);
        Ok(self.push(Op::Softmax(x), value))
    }

    pub fn reduce(&mut self, kind: ReduceKind, x: Var, axis: Option<usize>) -> Result<Var> {
        let xv = self.value(x);
        let value = match (axis, xv.shape()) {
            (None, _) => {
                let s: f64 = xv.data().iter().sum();
                let s = if kind == ReduceKind::Mean { s / xv.len() as f64 } else { s };
                Tensor::scalar(s)
            }
            (Some(0), &[_]) => {
                let s: f64 = xv.data().iter().sum();
                Tensor::scalar(if kind == ReduceKind::Mean { s / xv.len() as f64 } else { s })
            }
            (Some(0), &[rows, cols]) => {
                let mut out = vec![0.0; cols];
                for r in 0..rows {
                    for (o, v) in out.iter_mut().zip(xv.row(r)) {
                        *o += v;
                    }
                }
                if kind == ReduceKind::Mean {
                    out.iter_mut().for_each(|o| *o /= rows as f64);
                }
                Tensor::vector(out)
            }
            (Some(1), &[rows, cols]) => {
                let mut out: Vec<f64> = (0..rows).map(|r| xv.row(r).iter().sum()).collect();
                if kind == ReduceKind::Mean {
                    out.iter_mut().for_each(|o| *o /= cols as f64);
                }
                Tensor::vector(out)
            }
            (Some(a), shape) => {
                return Err(AutodiffError::Axis { axis: a, shape: shape.to_vec() });
            }
        };
        Ok(self.push(Op::Reduce { x, kind, axis }, value))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        self.reduce(ReduceKind::Sum, x, None).expect("full reduction is always valid")
    }

    pub fn mean(&mut self, x: Var) -> Var {
        self.reduce(ReduceKind::Mean, x, None).expect("full reduction is always valid")
    }

    /// `u ⊗ e_L`: a `d × L` matrix whose every column is the vector `u`.
    pub fn repeat_concat(&mut self, u: Var, count: usize) -> Result<Var> {
        if count < 1 {
            return Err(AutodiffError::Shape("repeat count must be at least 1".into()));
        }
        let uv = self.value(u);
        if uv.rank() != 1 {
            return Err(AutodiffError::Shape(format!("repeat_concat expects a vector, got {:?}", uv.shape())));
        }
        let d = uv.len();
        let mut data = Vec::with_capacity(d * count);
        for &x in uv.data() {
            data.extend(std::iter::repeat(x).take(count));
        }
        let value = Tensor::new(vec![d, count], data)?;
        Ok(self.push(Op::RepeatConcat(u), value))
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        let av = self.value(a);
        let (r, c) = av.dims2()?;
        let mut data = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                data[j * r + i] = av.data()[i * c + j];
            }
        }
        let value = Tensor::new(vec![c, r], data)?;
        Ok(self.push(Op::Transpose(a), value))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let av = self.value(a);
        if shape.iter().product::<usize>() != av.len() {
            return Err(AutodiffError::Shape(format!("cannot reshape {:?} into {shape:?}", av.shape())));
        }
        let value = av.clone().with_shape(shape.to_vec());
        Ok(self.push(Op::Reshape(a), value))
    }

    pub fn column(&mut self, a: Var, col: usize) -> Result<Var> {
        let av = self.value(a);
        let (_, c) = av.dims2()?;
        if col >= c {
            return Err(AutodiffError::Shape(format!("column {col} out of range for {:?}", av.shape())));
        }
        let value = Tensor::vector(av.column(col));
        Ok(self.push(Op::Column(a, col), value))
    }

    pub fn row(&mut self, a: Var, row: usize) -> Result<Var> {
        let av = self.value(a);
        let (r, _) = av.dims2()?;
        if row >= r {
            return Err(AutodiffError::Shape(format!("row {row} out of range for {:?}", av.shape())));
        }
        let value = Tensor::vector(av.row(row).to_vec());
        Ok(self.push(Op::Row(a, row), value))
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let av = self.value(a);
        if av.rank() != 1 || len == 0 || start + len > av.len() {
            return Err(AutodiffError::Shape(format!(
                "slice [{start}, {}) invalid for {:?}",
                start + len,
                av.shape()
            )));
        }
        let value = Tensor::vector(av.data()[start..start + len].to_vec());
        Ok(self.push(Op::Slice { x: a, start }, value))
    }

    /// Stacks equally long vectors as the columns of a matrix.
    pub fn stack_columns(&mut self, cols: &[Var]) -> Result<Var> {
        let n = cols.len();
        let d = self.stack_check(cols)?;
        let mut data = vec![0.0; d * n];
        for (j, &c) in cols.iter().enumerate() {
            for (i, &v) in self.value(c).data().iter().enumerate() {
                data[i * n + j] = v;
            }
        }
        let value = Tensor::new(vec![d, n], data)?;
        Ok(self.push(Op::StackColumns(cols.to_vec()), value))
    }

    /// Stacks equally long vectors as the rows of a matrix.
    pub fn stack_rows(&mut self, rows: &[Var]) -> Result<Var> {
        let d = self.stack_check(rows)?;
        let mut data = Vec::with_capacity(d * rows.len());
        for &r in rows {
            data.extend_from_slice(self.value(r).data());
        }
        let value = Tensor::new(vec![rows.len(), d], data)?;
        Ok(self.push(Op::StackRows(rows.to_vec()), value))
    }

    fn stack_check(&self, parts: &[Var]) -> Result<usize> {
        let first = parts.first().ok_or_else(|| AutodiffError::Shape("stack of nothing".into()))?;
        let d = self.value(*first).len();
        for &p in parts {
            let pv = self.value(p);
            if pv.rank() != 1 || pv.len() != d {
                return Err(AutodiffError::Shape(format!("stack expects vectors of length {d}, got {:?}", pv.shape())));
            }
        }
        Ok(d)
    }

    /// Vertical concatenation of two matrices with equal column counts.
    pub fn concat_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ra, ca) = self.value(a).dims2()?;
        let (rb, cb) = self.value(b).dims2()?;
        if ca != cb {
            return Err(AutodiffError::Shape(format!("concat_rows column counts differ: {ca} vs {cb}")));
        }
        let mut data = self.value(a).data().to_vec();
        data.extend_from_slice(self.value(b).data());
        let value = Tensor::new(vec![ra + rb, ca], data)?;
        Ok(self.push(Op::ConcatRows(a, b), value))
    }

    /// Reverse sweep from a scalar root. The root's own adjoint is 1.
    pub fn backward(&self, root: Var) -> Result<Backward> {
        let root_val = self.value(root);
        if root_val.len() != 1 {
            return Err(AutodiffError::NonScalar(root_val.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; self.nodes.len()];
        grads[root.0] = Some(Tensor::filled(root_val.shape(), 1.0));
        let mut param_grads = Gradients::new();

        for idx in (0..=root.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            let out = &node.value;
            match &node.op {
                Op::Leaf => {}
                Op::Param(id) => param_grads.add_dense(*id, &g),
                Op::Gather { param, rows } => {
                    let cols = out.shape()[1];
                    for (i, &r) in rows.iter().enumerate() {
                        param_grads.add_row(*param, r, &g.data()[i * cols..(i + 1) * cols]);
                    }
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (self.value(*a), self.value(*b));
                    let (m, k) = va.dims2()?;
                    let n = if vb.rank() == 2 { vb.shape()[1] } else { 1 };
                    let mut ga = vec![0.0; m * k];
                    gemm_nt_acc(g.data(), vb.data(), &mut ga, m, k, n);
                    let mut gb = vec![0.0; k * n];
                    gemm_tn_acc(va.data(), g.data(), &mut gb, m, k, n);
                    accumulate(&mut grads, *a, Tensor::new(va.shape().to_vec(), ga)?);
                    accumulate(&mut grads, *b, Tensor::new(vb.shape().to_vec(), gb)?);
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::Sub(a, b) => {
                    accumulate(&mut grads, *b, g.map(|x| -x));
                    accumulate(&mut grads, *a, g.clone());
                }
                Op::Mul(a, b) => {
                    let ga = g.zip_map(self.value(*b), |x, y| x * y);
                    let gb = g.zip_map(self.value(*a), |x, y| x * y);
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
                Op::Scale(a, f) => accumulate(&mut grads, *a, g.map(|x| x * f)),
                Op::AddScalar(a) => accumulate(&mut grads, *a, g.clone()),
                Op::Tanh(a) => accumulate(&mut grads, *a, g.zip_map(out, |x, y| x * (1.0 - y * y))),
                Op::Sigmoid(a) => accumulate(&mut grads, *a, g.zip_map(out, |x, y| x * y * (1.0 - y))),
                Op::Square(a) => {
                    accumulate(&mut grads, *a, g.zip_map(self.value(*a), |x, y| 2.0 * x * y));
                }
                Op::Sqrt(a) => {
                    // subgradient 0 at the origin
                    let ga = g.zip_map(out, |x, y| if y > 0.0 { x / (2.0 * y) } else { 0.0 });
                    accumulate(&mut grads, *a, ga);
                }
                Op::Abs(a) => {
                    let ga = g.zip_map(self.value(*a), |x, y| x * sign(y));
                    accumulate(&mut grads, *a, ga);
                }
                Op::Log { x, floor } => {
                    let floor = *floor;
                    let ga = g.zip_map(self.value(*x), |gx, v| if v > floor { gx / v } else { 0.0 });
                    accumulate(&mut grads, *x, ga);
                }
                Op::Softmax(a) => {
                    let dot: f64 = g.data().iter().zip(out.data()).map(|(x, y)| x * y).sum();
                    accumulate(&mut grads, *a, g.zip_map(out, |x, y| y * (x - dot)));
                }
                Op::Reduce { x, kind, axis } => {
                    let xv = self.value(*x);
                    let ga = reduce_backward(&g, xv.shape(), *kind, *axis);
                    accumulate(&mut grads, *x, ga);
                }
                Op::RepeatConcat(u) => {
                    let (d, count) = out.dims2()?;
                    let gu: Vec<f64> = (0..d).map(|i| g.data()[i * count..(i + 1) * count].iter().sum()).collect();
                    accumulate(&mut grads, *u, Tensor::vector(gu));
                }
                Op::Transpose(a) => {
                    let (r, c) = out.dims2()?;
                    let mut data = vec![0.0; r * c];
                    for i in 0..r {
                        for j in 0..c {
                            data[j * r + i] = g.data()[i * c + j];
                        }
                    }
                    accumulate(&mut grads, *a, Tensor::new(vec![c, r], data)?);
                }
                Op::Reshape(a) => {
                    let shape = self.value(*a).shape().to_vec();
                    accumulate(&mut grads, *a, g.clone().with_shape(shape));
                }
                Op::Column(a, col) => {
                    let mut ga = Tensor::zeros(self.value(*a).shape());
                    let cols = ga.shape()[1];
                    for (i, &v) in g.data().iter().enumerate() {
                        ga.data_mut()[i * cols + col] = v;
                    }
                    accumulate(&mut grads, *a, ga);
                }
                Op::Row(a, row) => {
                    let mut ga = Tensor::zeros(self.value(*a).shape());
                    ga.row_mut(*row).copy_from_slice(g.data());
                    accumulate(&mut grads, *a, ga);
                }
                Op::Slice { x, start } => {
                    let mut ga = Tensor::zeros(self.value(*x).shape());
                    ga.data_mut()[*start..*start + g.len()].copy_from_slice(g.data());
                    accumulate(&mut grads, *x, ga);
                }
                Op::StackColumns(cols) => {
                    let (_, n) = out.dims2()?;
                    for (j, &c) in cols.iter().enumerate() {
                        let gc: Vec<f64> = g.data().iter().skip(j).step_by(n).copied().collect();
                        accumulate(&mut grads, c, Tensor::vector(gc));
                    }
                }
                Op::StackRows(rows) => {
                    let (_, d) = out.dims2()?;
                    for (i, &r) in rows.iter().enumerate() {
                        accumulate(&mut grads, r, Tensor::vector(g.data()[i * d..(i + 1) * d].to_vec()));
                    }
                }
                Op::ConcatRows(a, b) => {
                    let split = self.value(*a).len();
                    let ga = Tensor::new(self.value(*a).shape().to_vec(), g.data()[..split].to_vec())?;
                    let gb = Tensor::new(self.value(*b).shape().to_vec(), g.data()[split..].to_vec())?;
                    accumulate(&mut grads, *a, ga);
                    accumulate(&mut grads, *b, gb);
                }
            }
            grads[idx] = Some(g);
        }

        let shapes = (0..self.nodes.len()).map(|i| self.value(Var(i)).shape().to_vec()).collect();
        Ok(Backward { params: param_grads, node_grads: grads, shapes })
    }

    /// Name of the operation that produced `v`, for diagnostics.
    pub fn op_name(&self, v: Var) -> &'static str {
        self.nodes[v.0].op.name()
    }
}

fn accumulate(grads: &mut [Option<Tensor>], v: Var, g: Tensor) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

fn reduce_backward(g: &Tensor, shape: &[usize], kind: ReduceKind, axis: Option<usize>) -> Tensor {
    let total: usize = shape.iter().product();
    match (axis, shape) {
        (None, _) | (Some(0), &[_]) => {
            let scale = if kind == ReduceKind::Mean { 1.0 / total as f64 } else { 1.0 };
            Tensor::filled(shape, g.data()[0] * scale)
        }
        (Some(0), &[rows, cols]) => {
            let scale = if kind == ReduceKind::Mean { 1.0 / rows as f64 } else { 1.0 };
            let mut out = Tensor::zeros(shape);
            for r in 0..rows {
                for c in 0..cols {
                    out.data_mut()[r * cols + c] = g.data()[c] * scale;
                }
            }
            out
        }
        (Some(1), &[rows, cols]) => {
            let scale = if kind == ReduceKind::Mean { 1.0 / cols as f64 } else { 1.0 };
            let mut out = Tensor::zeros(shape);
            for r in 0..rows {
                out.row_mut(r).iter_mut().for_each(|v| *v = g.data()[r] * scale);
            }
            out
        }
        _ => unreachable!("axis validated in forward"),
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Max-subtracted softmax over the valid positions; `None` if none are valid.
pub(crate) fn softmax_values(x: &[f64], valid: &[bool]) -> Option<Vec<f64>> {
    if x.iter().zip(valid).any(|(v, &ok)| ok && v.is_nan()) {
        return Some(vec![f64::NAN; x.len()]);
    }
    let max = x
        .iter()
        .zip(valid)
        .filter(|(_, &ok)| ok)
        .map(|(&v, _)| v)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let mut out: Vec<f64> = x
        .iter()
        .zip(valid)
        .map(|(&v, &ok)| if ok { (v - max).exp() } else { 0.0 })
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|v| *v /= total);
    Some(out)
}
