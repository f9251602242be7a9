//! Reverse-mode automatic differentiation over matrices.
//!
//! A [`Tape`] records operations as they execute; nodes are appended in
//! topological order (inputs before outputs), so the backward pass is a
//! single reverse scan. A tape is single-writer: concurrent training needs
//! one tape per worker.
//!
//! Gradients flow only through subtrees that contain parameters
//! (`requires_grad` pruning); constants never receive adjoints.

use crate::error::{Error, Result};
use crate::numeric::Matrix;

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Collapse rows: M x C -> 1 x C.
    Rows,
    /// Collapse columns: M x C -> M x 1.
    Cols,
    /// Collapse everything: M x C -> 1 x 1.
    All,
}

/// Channel-wise symmetric aggregation used by segment reductions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Max,
    Mean,
    Add,
}

impl Aggregation {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            "add" => Ok(Self::Add),
            other => Err(Error::Config(format!("unknown aggregation '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Max => "max",
            Self::Mean => "mean",
            Self::Add => "add",
        }
    }
}

#[derive(Clone)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    LeakyRelu(NodeId, f64),
    Square(NodeId),
    Reduce(NodeId, ReduceKind, Axis),
    GatherRows(NodeId, Vec<usize>),
    SegmentReduce {
        input: NodeId,
        segments: Vec<usize>,
        n_segments: usize,
        agg: Aggregation,
    },
    Reshape(NodeId),
}

struct TapeNode {
    op: Op,
    value: Matrix,
    adjoint: Option<Matrix>,
    requires_grad: bool,
    /// Winning input indices for max-style ops, fixed at forward time so the
    /// backward routing matches the value actually produced.
    argmax: Vec<usize>,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<TapeNode>,
}

impl Tape {
    pub fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, op: Op, value: Matrix, requires_grad: bool, argmax: Vec<usize>) -> NodeId {
        self.nodes.push(TapeNode { op, value, adjoint: None, requires_grad, argmax });
        NodeId(self.nodes.len() - 1)
    }

    /// Trainable leaf: receives a gradient in `backward`.
    pub fn param(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Leaf, value, true, Vec::new())
    }

    /// Non-trainable leaf (inputs, labels, fixed adjacency).
    pub fn constant(&mut self, value: Matrix) -> NodeId {
        self.push(Op::Leaf, value, false, Vec::new())
    }

    pub fn value(&self, id: NodeId) -> &Matrix {
        &self.nodes[id.0].value
    }

    /// Adjoint of a node after `backward`; `None` for nodes off the gradient
    /// path (constants, pruned subtrees).
    pub fn adjoint(&self, id: NodeId) -> Option<&Matrix> {
        self.nodes[id.0].adjoint.as_ref()
    }

    /// Gradient per parameter, with zeros for parameters the loss ignores.
    pub fn gradients(&self, params: &[NodeId]) -> Vec<Matrix> {
        params
            .iter()
            .map(|&id| {
                self.adjoint(id).cloned().unwrap_or_else(|| {
                    let (r, c) = self.value(id).shape();
                    Matrix::zeros(r, c)
                })
            })
            .collect()
    }

    fn needs(&self, id: NodeId) -> bool {
        self.nodes[id.0].requires_grad
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).matmul(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Op::MatMul(a, b), value, rg, Vec::new()))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).add(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a, b), value, rg, Vec::new()))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).sub(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Sub(a, b), value, rg, Vec::new()))
    }

    /// Element-wise product.
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let value = self.value(a).hadamard(self.value(b))?;
        let rg = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Mul(a, b), value, rg, Vec::new()))
    }

    pub fn scale(&mut self, a: NodeId, factor: f64) -> NodeId {
        let value = self.value(a).scale(factor);
        let rg = self.needs(a);
        self.push(Op::Scale(a, factor), value, rg, Vec::new())
    }

    /// leaky_relu(x) = x for x >= 0, epsilon * x otherwise.
    pub fn leaky_relu(&mut self, a: NodeId, epsilon: f64) -> NodeId {
        let value = self.value(a).map(|x| if x >= 0.0 { x } else { epsilon * x });
        let rg = self.needs(a);
        self.push(Op::LeakyRelu(a, epsilon), value, rg, Vec::new())
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        self.leaky_relu(a, 0.0)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).map(|x| x * x);
        let rg = self.needs(a);
        self.push(Op::Square(a), value, rg, Vec::new())
    }

    pub fn reduce(&mut self, a: NodeId, kind: ReduceKind, axis: Axis) -> Result<NodeId> {
        let input = self.value(a);
        if input.is_empty() {
            return Err(Error::Domain("reduce of empty matrix".into()));
        }
        let (rows, cols) = input.shape();
        let mut argmax = Vec::new();
        let value = match (kind, axis) {
            (ReduceKind::Max, Axis::Rows) => {
                let mut best = input.row(0).to_vec();
                argmax = vec![0; cols];
                for r in 1..rows {
                    for c in 0..cols {
                        if input.get(r, c) > best[c] {
                            best[c] = input.get(r, c);
                            argmax[c] = r;
                        }
                    }
                }
                Matrix::from_parts(1, cols, best)
            }
            (ReduceKind::Max, Axis::Cols) => {
                argmax = vec![0; rows];
                let mut best = Vec::with_capacity(rows);
                for r in 0..rows {
                    let mut b = input.get(r, 0);
                    for c in 1..cols {
                        if input.get(r, c) > b {
                            b = input.get(r, c);
                            argmax[r] = c;
                        }
                    }
                    best.push(b);
                }
                Matrix::from_parts(rows, 1, best)
            }
            (ReduceKind::Max, Axis::All) => {
                let mut best = input.data()[0];
                let mut at = 0usize;
                for (i, &v) in input.data().iter().enumerate().skip(1) {
                    if v > best {
                        best = v;
                        at = i;
                    }
                }
                argmax = vec![at];
                Matrix::from_parts(1, 1, vec![best])
            }
            (k, Axis::Rows) => {
                let mut acc = vec![0.0; cols];
                for r in 0..rows {
                    for (c, v) in acc.iter_mut().enumerate() {
                        *v += input.get(r, c);
                    }
                }
                if k == ReduceKind::Mean {
                    for v in &mut acc {
                        *v /= rows as f64;
                    }
                }
                Matrix::from_parts(1, cols, acc)
            }
            (k, Axis::Cols) => {
                let mut acc = Vec::with_capacity(rows);
                for r in 0..rows {
                    let s: f64 = input.row(r).iter().sum();
                    acc.push(if k == ReduceKind::Mean { s / cols as f64 } else { s });
                }
                Matrix::from_parts(rows, 1, acc)
            }
            (k, Axis::All) => {
                let s: f64 = input.data().iter().sum();
                let v = if k == ReduceKind::Mean { s / input.len() as f64 } else { s };
                Matrix::from_parts(1, 1, vec![v])
            }
        };
        let rg = self.needs(a);
        Ok(self.push(Op::Reduce(a, kind, axis), value, rg, argmax))
    }

    pub fn sum_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.reduce(a, ReduceKind::Sum, Axis::All)
    }

    pub fn mean_all(&mut self, a: NodeId) -> Result<NodeId> {
        self.reduce(a, ReduceKind::Mean, Axis::All)
    }

    pub fn gather_rows(&mut self, a: NodeId, indices: &[usize]) -> Result<NodeId> {
        let value = self.value(a).gather_rows(indices)?;
        let rg = self.needs(a);
        Ok(self.push(Op::GatherRows(a, indices.to_vec()), value, rg, Vec::new()))
    }

    /// Reduce rows of `a` into `n_segments` buckets given per-row segment
    /// ids. Every segment must be non-empty.
    pub fn segment_reduce(
        &mut self,
        a: NodeId,
        segments: &[usize],
        n_segments: usize,
        agg: Aggregation,
    ) -> Result<NodeId> {
        let input = self.value(a);
        let (rows, cols) = input.shape();
        if segments.len() != rows {
            return Err(Error::Dimension(format!(
                "segment_reduce: {} segment ids for {} rows",
                segments.len(),
                rows
            )));
        }
        if n_segments == 0 {
            return Err(Error::Dimension("segment_reduce: zero segments".into()));
        }
        let mut counts = vec![0usize; n_segments];
        for &s in segments {
            if s >= n_segments {
                return Err(Error::Dimension(format!("segment id {s} >= {n_segments}")));
            }
            counts[s] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Contract(format!("segment {empty} is empty")));
        }

        let mut argmax = Vec::new();
        let value = match agg {
            Aggregation::Add | Aggregation::Mean => {
                let mut out = vec![0.0; n_segments * cols];
                for (e, &s) in segments.iter().enumerate() {
                    let row = input.row(e);
                    let acc = &mut out[s * cols..(s + 1) * cols];
                    for (o, &v) in acc.iter_mut().zip(row) {
                        *o += v;
                    }
                }
                if agg == Aggregation::Mean {
                    for (s, &count) in counts.iter().enumerate() {
                        for v in &mut out[s * cols..(s + 1) * cols] {
                            *v /= count as f64;
                        }
                    }
                }
                Matrix::from_parts(n_segments, cols, out)
            }
            Aggregation::Max => {
                let mut out = vec![f64::NEG_INFINITY; n_segments * cols];
                argmax = vec![usize::MAX; n_segments * cols];
                for (e, &s) in segments.iter().enumerate() {
                    let row = input.row(e);
                    for (c, &v) in row.iter().enumerate() {
                        let idx = s * cols + c;
                        // Strict '>' keeps the first (lowest row index) winner on ties.
                        if argmax[idx] == usize::MAX || v > out[idx] {
                            out[idx] = v;
                            argmax[idx] = e;
                        }
                    }
                }
                Matrix::from_parts(n_segments, cols, out)
            }
        };
        let rg = self.needs(a);
        Ok(self.push(
            Op::SegmentReduce { input: a, segments: segments.to_vec(), n_segments, agg },
            value,
            rg,
            argmax,
        ))
    }

    pub fn reshape(&mut self, a: NodeId, rows: usize, cols: usize) -> Result<NodeId> {
        let value = self.value(a).reshape(rows, cols)?;
        let rg = self.needs(a);
        Ok(self.push(Op::Reshape(a), value, rg, Vec::new()))
    }

    /// Flatten to a 1 x N row vector.
    pub fn flatten_row(&mut self, a: NodeId) -> Result<NodeId> {
        let n = self.value(a).len();
        self.reshape(a, 1, n)
    }

    fn accumulate(&mut self, id: NodeId, delta: Matrix) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match &mut self.nodes[id.0].adjoint {
            Some(a) => {
                let sum = a.add(&delta).expect("adjoint shape fixed by forward value");
                *a = sum;
            }
            None => self.nodes[id.0].adjoint = Some(delta),
        }
    }

    /// Populate adjoints for every parameter reachable from `loss`.
    ///
    /// `loss` must be scalar (1x1). Deterministic: a fixed tape always
    /// produces identical adjoints.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if !self.nodes[loss.0].value.is_scalar() {
            let (r, c) = self.nodes[loss.0].value.shape();
            return Err(Error::Contract(format!("backward needs a scalar loss, got {r}x{c}")));
        }
        for n in &mut self.nodes {
            n.adjoint = None;
        }
        self.nodes[loss.0].adjoint = Some(Matrix::filled(1, 1, 1.0));

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires_grad {
                continue;
            }
            let Some(g) = self.nodes[i].adjoint.clone() else { continue };
            let op = self.nodes[i].op.clone();
            match op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    if self.needs(a) {
                        let bt = self.value(b).transpose();
                        let da = g.matmul(&bt).expect("matmul backward shape");
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        let at = self.value(a).transpose();
                        let db = at.matmul(&g).expect("matmul backward shape");
                        self.accumulate(b, db);
                    }
                }
                Op::Add(a, b) => {
                    if self.needs(a) {
                        self.accumulate(a, g.clone());
                    }
                    if self.needs(b) {
                        self.accumulate(b, g);
                    }
                }
                Op::Sub(a, b) => {
                    if self.needs(a) {
                        self.accumulate(a, g.clone());
                    }
                    if self.needs(b) {
                        self.accumulate(b, g.scale(-1.0));
                    }
                }
                Op::Mul(a, b) => {
                    if self.needs(a) {
                        let da = g.hadamard(self.value(b)).expect("mul backward shape");
                        self.accumulate(a, da);
                    }
                    if self.needs(b) {
                        let db = g.hadamard(self.value(a)).expect("mul backward shape");
                        self.accumulate(b, db);
                    }
                }
                Op::Scale(a, factor) => {
                    self.accumulate(a, g.scale(factor));
                }
                Op::LeakyRelu(a, epsilon) => {
                    let x = self.value(a);
                    let mask = x.map(|v| if v >= 0.0 { 1.0 } else { epsilon });
                    self.accumulate(a, g.hadamard(&mask).expect("leaky backward shape"));
                }
                Op::Square(a) => {
                    let two_x = self.value(a).scale(2.0);
                    self.accumulate(a, g.hadamard(&two_x).expect("square backward shape"));
                }
                Op::Reduce(a, kind, axis) => {
                    let (rows, cols) = self.value(a).shape();
                    let argmax = self.nodes[i].argmax.clone();
                    let mut d = Matrix::zeros(rows, cols);
                    match (kind, axis) {
                        (ReduceKind::Max, Axis::Rows) => {
                            for c in 0..cols {
                                d.set(argmax[c], c, g.get(0, c));
                            }
                        }
                        (ReduceKind::Max, Axis::Cols) => {
                            for r in 0..rows {
                                d.set(r, argmax[r], g.get(r, 0));
                            }
                        }
                        (ReduceKind::Max, Axis::All) => {
                            d.data_mut()[argmax[0]] = g.get(0, 0);
                        }
                        (k, Axis::Rows) => {
                            let f = if k == ReduceKind::Mean { 1.0 / rows as f64 } else { 1.0 };
                            for r in 0..rows {
                                for c in 0..cols {
                                    d.set(r, c, g.get(0, c) * f);
                                }
                            }
                        }
                        (k, Axis::Cols) => {
                            let f = if k == ReduceKind::Mean { 1.0 / cols as f64 } else { 1.0 };
                            for r in 0..rows {
                                for c in 0..cols {
                                    d.set(r, c, g.get(r, 0) * f);
                                }
                            }
                        }
                        (k, Axis::All) => {
                            let f = if k == ReduceKind::Mean {
                                1.0 / (rows * cols) as f64
                            } else {
                                1.0
                            };
                            let gv = g.get(0, 0) * f;
                            for v in d.data_mut() {
                                *v = gv;
                            }
                        }
                    }
                    self.accumulate(a, d);
                }
                Op::GatherRows(a, indices) => {
                    let (rows, cols) = self.value(a).shape();
                    let mut d = Matrix::zeros(rows, cols);
                    for (r, &src) in indices.iter().enumerate() {
                        for c in 0..cols {
                            let v = d.get(src, c) + g.get(r, c);
                            d.set(src, c, v);
                        }
                    }
                    self.accumulate(a, d);
                }
                Op::SegmentReduce { input, segments, n_segments, agg } => {
                    let (rows, cols) = self.value(input).shape();
                    let mut d = Matrix::zeros(rows, cols);
                    match agg {
                        Aggregation::Add => {
                            for (e, &s) in segments.iter().enumerate() {
                                for c in 0..cols {
                                    d.set(e, c, g.get(s, c));
                                }
                            }
                        }
                        Aggregation::Mean => {
                            let mut counts = vec![0usize; n_segments];
                            for &s in &segments {
                                counts[s] += 1;
                            }
                            for (e, &s) in segments.iter().enumerate() {
                                let f = 1.0 / counts[s] as f64;
                                for c in 0..cols {
                                    d.set(e, c, g.get(s, c) * f);
                                }
                            }
                        }
                        Aggregation::Max => {
                            let argmax = &self.nodes[i].argmax;
                            for s in 0..n_segments {
                                for c in 0..cols {
                                    let e = argmax[s * cols + c];
                                    let v = d.get(e, c) + g.get(s, c);
                                    d.set(e, c, v);
                                }
                            }
                        }
                    }
                    self.accumulate(input, d);
                }
                Op::Reshape(a) => {
                    let (rows, cols) = self.value(a).shape();
                    let d = g.reshape(rows, cols).expect("reshape backward shape");
                    self.accumulate(a, d);
                }
            }
        }
        Ok(())
    }
}
