//! Reverse-mode automatic differentiation over a linear tape.
//!
//! Every operation appends a node holding its output value and enough of its
//! inputs to run the chain rule. Nodes are appended in evaluation order, so the
//! tape index order is a topological order and [`Tape::backward`] walks it in
//! reverse.
//!
//! ```
//! use hcrn::tape::Tape;
//! use hcrn::tensor::{ParamStore, Tensor};
//!
//! let mut params = ParamStore::<f64>::new();
//! let mut tape = Tape::new();
//! let x = tape.input(Tensor::vector(vec![3.0]));
//! let sq = tape.mul(x, x).unwrap();
//! let loss = tape.sum(sq);
//! tape.backward(loss, &mut params).unwrap();
//! assert_eq!(tape.grad(x).unwrap(), &[6.0]);
//! ```

use crate::error::{dim_err, Error, Result};
use crate::real::Real;
use crate::tensor::{ParamId, ParamStore, Tensor};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointwiseOp {
    Sigmoid,
    Tanh,
    Relu,
    OneMinus,
    Add,
    Sub,
    Mul,
}

impl PointwiseOp {
    pub fn arity(self) -> usize {
        match self {
            PointwiseOp::Sigmoid | PointwiseOp::Tanh | PointwiseOp::Relu | PointwiseOp::OneMinus => 1,
            PointwiseOp::Add | PointwiseOp::Sub | PointwiseOp::Mul => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Unary {
    Sigmoid,
    Tanh,
    Relu,
    OneMinus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Binary {
    Add,
    Sub,
    Mul,
}

#[derive(Debug)]
enum Op<T> {
    Leaf,
    Param(ParamId),
    MatVec(Var, Var),
    Row(Var, usize),
    Unary(Unary, Var),
    Binary(Binary, Var, Var),
    Concat(Var, Var),
    Sum(Var),
    Scale(Var, T),
    SoftmaxNll { logits: Var, target: usize, probs: Vec<T> },
}

#[derive(Debug)]
struct Node<T> {
    value: Tensor<T>,
    op: Op<T>,
    requires_grad: bool,
}

/// Operation record for one forward pass.
///
/// After [`Tape::backward`] the tape is spent; call [`Tape::reset`] to start
/// the next forward pass. A tape is confined to one thread.
#[derive(Debug)]
pub struct Tape<T> {
    nodes: Vec<Node<T>>,
    param_nodes: Vec<Option<Var>>,
    grads: Vec<Option<Vec<T>>>,
    spent: bool,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Tape { nodes: Vec::new(), param_nodes: Vec::new(), grads: Vec::new(), spent: false }
    }

    /// Clears all nodes and begins a new forward pass.
    pub fn reset(&mut self) {
        self.nodes.clear();
        self.param_nodes.clear();
        self.grads.clear();
        self.spent = false;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_spent(&self) -> bool {
        self.spent
    }

    pub fn value(&self, v: Var) -> &Tensor<T> {
        &self.nodes[v.0].value
    }

    pub fn scalar_value(&self, v: Var) -> Result<T> {
        self.nodes[v.0].value.item()
    }

    /// Gradient of the last backward pass with respect to `v`, if `v` was
    /// reached and requires a gradient.
    pub fn grad(&self, v: Var) -> Option<&[T]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    fn push(&mut self, value: Tensor<T>, op: Op<T>, requires_grad: bool) -> Var {
        self.nodes.push(Node { value, op, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    /// A constant: no gradient is tracked.
    pub fn constant(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, false)
    }

    /// A free input whose gradient is kept and readable via [`Tape::grad`].
    pub fn input(&mut self, value: Tensor<T>) -> Var {
        self.push(value, Op::Leaf, true)
    }

    /// The same value as `v` with the gradient path cut.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.constant(value)
    }

    /// Brings a parameter onto the tape. Repeated calls for the same parameter
    /// return the same node, so its gradient is accumulated once per pass.
    /// Frozen parameters enter as constants.
    pub fn param(&mut self, store: &ParamStore<T>, id: ParamId) -> Var {
        if let Some(Some(v)) = self.param_nodes.get(id.0) {
            return *v;
        }
        let p = store.get(id);
        let var = self.push(p.value.clone(), Op::Param(id), !p.frozen);
        if self.param_nodes.len() <= id.0 {
            self.param_nodes.resize(id.0 + 1, None);
        }
        self.param_nodes[id.0] = Some(var);
        var
    }

    /// `y = W x` for `W: [m, n]`, `x: [n]`.
    pub fn matvec(&mut self, w: Var, x: Var) -> Result<Var> {
        let (wt, xt) = (&self.nodes[w.0].value, &self.nodes[x.0].value);
        let (m, n) = match wt.shape() {
            &[m, n] => (m, n),
            s => return dim_err(format!("matvec: expected matrix, got shape {s:?}")),
        };
        if xt.shape() != [n] {
            return dim_err(format!("matvec: [{m}, {n}] times {:?}", xt.shape()));
        }
        let (wd, xd) = (wt.data(), xt.data());
        let out: Vec<T> = (0..m)
            .map(|i| {
                let row = &wd[i * n..(i + 1) * n];
                row.iter().zip(xd).fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect();
        let rg = self.needs(w) || self.needs(x);
        Ok(self.push(Tensor::vector(out), Op::MatVec(w, x), rg))
    }

    /// Row `i` of a matrix, e.g. an embedding lookup.
    pub fn row(&mut self, m: Var, i: usize) -> Result<Var> {
        let mt = &self.nodes[m.0].value;
        let (rows, cols) = match mt.shape() {
            &[r, c] => (r, c),
            s => return dim_err(format!("row: expected matrix, got shape {s:?}")),
        };
        if i >= rows {
            return Err(Error::Index { index: i, bound: rows });
        }
        let out = Tensor::vector(mt.data()[i * cols..(i + 1) * cols].to_vec());
        let rg = self.needs(m);
        Ok(self.push(out, Op::Row(m, i), rg))
    }

    fn unary(&mut self, kind: Unary, a: Var) -> Var {
        let at = &self.nodes[a.0].value;
        let f: fn(T) -> T = match kind {
            Unary::Sigmoid => sigmoid,
            Unary::Tanh => |x: T| x.tanh(),
            Unary::Relu => |x: T| if x > T::zero() { x } else { T::zero() },
            Unary::OneMinus => |x: T| T::one() - x,
        };
        let out = Tensor::new(at.shape().to_vec(), at.data().iter().map(|&x| f(x)).collect())
            .expect("same shape");
        let rg = self.needs(a);
        self.push(out, Op::Unary(kind, a), rg)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(Unary::Sigmoid, a)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(Unary::Tanh, a)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(Unary::Relu, a)
    }

    pub fn one_minus(&mut self, a: Var) -> Var {
        self.unary(Unary::OneMinus, a)
    }

    /// Elementwise binary op. Shapes must agree, or one side must be a scalar.
    fn binary(&mut self, kind: Binary, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        let f: fn(T, T) -> T = match kind {
            Binary::Add => |x, y| x + y,
            Binary::Sub => |x, y| x - y,
            Binary::Mul => |x, y| x * y,
        };
        let out = if at.shape() == bt.shape() {
            let d = at.data().iter().zip(bt.data()).map(|(&x, &y)| f(x, y)).collect();
            Tensor::new(at.shape().to_vec(), d)?
        } else if bt.is_scalar() {
            let y = bt.data()[0];
            Tensor::new(at.shape().to_vec(), at.data().iter().map(|&x| f(x, y)).collect())?
        } else if at.is_scalar() {
            let x = at.data()[0];
            Tensor::new(bt.shape().to_vec(), bt.data().iter().map(|&y| f(x, y)).collect())?
        } else {
            return dim_err(format!("{kind:?}: shapes {:?} and {:?}", at.shape(), bt.shape()));
        };
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(out, Op::Binary(kind, a, b), rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Add, a, b)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Sub, a, b)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.binary(Binary::Mul, a, b)
    }

    /// Dispatches a [`PointwiseOp`] over one or two operands.
    pub fn pointwise(&mut self, op: PointwiseOp, args: &[Var]) -> Result<Var> {
        if args.len() != op.arity() {
            return dim_err(format!("{op:?} takes {} operands, got {}", op.arity(), args.len()));
        }
        Ok(match op {
            PointwiseOp::Sigmoid => self.sigmoid(args[0]),
            PointwiseOp::Tanh => self.tanh(args[0]),
            PointwiseOp::Relu => self.relu(args[0]),
            PointwiseOp::OneMinus => self.one_minus(args[0]),
            PointwiseOp::Add => self.add(args[0], args[1])?,
            PointwiseOp::Sub => self.sub(args[0], args[1])?,
            PointwiseOp::Mul => self.mul(args[0], args[1])?,
        })
    }

    /// `a` followed by `b`; both must be 1-D.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (at, bt) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if at.ndim() != 1 || bt.ndim() != 1 {
            return dim_err(format!("concat needs 1-D operands, got {:?} and {:?}", at.shape(), bt.shape()));
        }
        let mut d = Vec::with_capacity(at.len() + bt.len());
        d.extend_from_slice(at.data());
        d.extend_from_slice(bt.data());
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Tensor::vector(d), Op::Concat(a, b), rg))
    }

    /// Sum of all entries, as a scalar.
    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.data().iter().copied().sum();
        let rg = self.needs(a);
        self.push(Tensor::scalar(s), Op::Sum(a), rg)
    }

    /// Sum of several scalar (or same-shape) nodes.
    pub fn add_all(&mut self, vars: &[Var]) -> Result<Var> {
        let (first, rest) = vars.split_first().ok_or_else(|| Error::Input("add_all of nothing".into()))?;
        rest.iter().try_fold(*first, |acc, &v| self.add(acc, v))
    }

    pub fn scale(&mut self, a: Var, c: T) -> Var {
        let at = &self.nodes[a.0].value;
        let out = Tensor::new(at.shape().to_vec(), at.data().iter().map(|&x| x * c).collect())
            .expect("same shape");
        let rg = self.needs(a);
        self.push(out, Op::Scale(a, c), rg)
    }

    /// `-log softmax(logits)[target]`, stabilized by max subtraction.
    pub fn softmax_nll(&mut self, logits: Var, target: usize) -> Result<Var> {
        let lt = &self.nodes[logits.0].value;
        if lt.ndim() != 1 || lt.is_empty() {
            return dim_err(format!("softmax_nll needs non-empty 1-D logits, got {:?}", lt.shape()));
        }
        if target >= lt.len() {
            return Err(Error::Index { index: target, bound: lt.len() });
        }
        let (probs, log_z) = softmax_with_logz(lt.data());
        let max = lt.data().iter().copied().fold(T::neg_infinity(), T::max);
        let loss = (max - lt.data()[target]) + log_z;
        let rg = self.needs(logits);
        Ok(self.push(Tensor::scalar(loss), Op::SoftmaxNll { logits, target, probs }, rg))
    }

    /// Accumulates `d loss / d p` into `Parameter::grad` for every non-frozen
    /// parameter reachable from `loss`.
    pub fn backward(&mut self, loss: Var, params: &mut ParamStore<T>) -> Result<()> {
        if self.spent {
            return Err(Error::State("backward called twice without a new forward pass".into()));
        }
        if loss.0 >= self.nodes.len() {
            return Err(Error::State("loss node does not belong to this forward pass".into()));
        }
        if self.nodes[loss.0].value.len() != 1 {
            return dim_err(format!("backward needs a scalar loss, got {:?}", self.nodes[loss.0].value.shape()));
        }
        self.spent = true;
        let mut grads: Vec<Option<Vec<T>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![T::one()]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = grads[i].take() else { continue };
            self.propagate(i, &g, &mut grads);
            grads[i] = Some(g);
        }

        for node_idx in 0..self.nodes.len() {
            if let Op::Param(id) = self.nodes[node_idx].op {
                if let Some(g) = &grads[node_idx] {
                    let p = params.get_mut(id);
                    for (acc, &d) in p.grad.data_mut().iter_mut().zip(g) {
                        *acc += d;
                    }
                }
            }
        }
        self.grads = grads;
        Ok(())
    }

    fn propagate(&self, i: usize, g: &[T], grads: &mut [Option<Vec<T>>]) {
        let node = &self.nodes[i];
        match &node.op {
            Op::Leaf | Op::Param(_) => {}
            Op::MatVec(w, x) => {
                let wt = &self.nodes[w.0].value;
                let xt = &self.nodes[x.0].value;
                let n = xt.len();
                if self.needs(*w) {
                    let dw = slot(grads, *w, wt.len());
                    for (row, &gi) in dw.chunks_exact_mut(n).zip(g) {
                        for (d, &xj) in row.iter_mut().zip(xt.data()) {
                            *d += gi * xj;
                        }
                    }
                }
                if self.needs(*x) {
                    let dx = slot(grads, *x, n);
                    for (row, &gi) in wt.data().chunks_exact(n).zip(g) {
                        for (d, &wij) in dx.iter_mut().zip(row) {
                            *d += wij * gi;
                        }
                    }
                }
            }
            Op::Row(m, i) => {
                let mt = &self.nodes[m.0].value;
                let cols = g.len();
                let dm = slot(grads, *m, mt.len());
                for (d, &gk) in dm[i * cols..(i + 1) * cols].iter_mut().zip(g) {
                    *d += gk;
                }
            }
            Op::Unary(kind, a) => {
                let y = node.value.data();
                let x = self.nodes[a.0].value.data();
                let da = slot(grads, *a, y.len());
                for k in 0..y.len() {
                    let local = match kind {
                        Unary::Sigmoid => y[k] * (T::one() - y[k]),
                        Unary::Tanh => T::one() - y[k] * y[k],
                        Unary::Relu => {
                            if x[k] > T::zero() {
                                T::one()
                            } else {
                                T::zero()
                            }
                        }
                        Unary::OneMinus => -T::one(),
                    };
                    da[k] += g[k] * local;
                }
            }
            Op::Binary(kind, a, b) => {
                let at = &self.nodes[a.0].value;
                let bt = &self.nodes[b.0].value;
                // a length-1 operand is broadcast (scalar) or shape-equal; index 0 either way
                let bidx = |len: usize, k: usize| if len == 1 { 0 } else { k };
                if self.needs(*a) {
                    let da = slot(grads, *a, at.len());
                    for (k, &gk) in g.iter().enumerate() {
                        let local = match kind {
                            Binary::Add | Binary::Sub => T::one(),
                            Binary::Mul => bt.data()[bidx(bt.len(), k)],
                        };
                        da[bidx(at.len(), k)] += gk * local;
                    }
                }
                if self.needs(*b) {
                    let db = slot(grads, *b, bt.len());
                    for (k, &gk) in g.iter().enumerate() {
                        let local = match kind {
                            Binary::Add => T::one(),
                            Binary::Sub => -T::one(),
                            Binary::Mul => at.data()[bidx(at.len(), k)],
                        };
                        db[bidx(bt.len(), k)] += gk * local;
                    }
                }
            }
            Op::Concat(a, b) => {
                let m = self.nodes[a.0].value.len();
                let n = self.nodes[b.0].value.len();
                if self.needs(*a) {
                    let da = slot(grads, *a, m);
                    for (d, &gk) in da.iter_mut().zip(&g[..m]) {
                        *d += gk;
                    }
                }
                if self.needs(*b) {
                    let db = slot(grads, *b, n);
                    for (d, &gk) in db.iter_mut().zip(&g[m..]) {
                        *d += gk;
                    }
                }
            }
            Op::Sum(a) => {
                let n = self.nodes[a.0].value.len();
                let da = slot(grads, *a, n);
                for d in da.iter_mut() {
                    *d += g[0];
                }
            }
            Op::Scale(a, c) => {
                let da = slot(grads, *a, g.len());
                for (d, &gk) in da.iter_mut().zip(g) {
                    *d += gk * *c;
                }
            }
            Op::SoftmaxNll { logits, target, probs } => {
                let dl = slot(grads, *logits, probs.len());
                for (k, (d, &p)) in dl.iter_mut().zip(probs).enumerate() {
                    let onehot = if k == *target { T::one() } else { T::zero() };
                    *d += g[0] * (p - onehot);
                }
            }
        }
    }
}

fn slot<T: Real>(grads: &mut [Option<Vec<T>>], v: Var, len: usize) -> &mut Vec<T> {
    grads[v.0].get_or_insert_with(|| vec![T::zero(); len])
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Softmax probabilities and `log Σ exp(l_k - max)`. The argmax term
/// contributes exactly 1, so the log is taken with `ln_1p` over the rest.
fn softmax_with_logz<T: Real>(logits: &[T]) -> (Vec<T>, T) {
    let (arg, max) = logits
        .iter()
        .copied()
        .enumerate()
        .fold((0, T::neg_infinity()), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let rest: T = exps.iter().enumerate().filter(|&(i, _)| i != arg).map(|(_, &e)| e).sum();
    let z = T::one() + rest;
    let probs = exps.into_iter().map(|e| e / z).collect();
    (probs, rest.ln_1p())
}

/// Numerically stable softmax.
pub fn softmax<T: Real>(logits: &[T]) -> Vec<T> {
    softmax_with_logz(logits).0
}
