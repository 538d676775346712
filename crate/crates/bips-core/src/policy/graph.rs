//! Tape-based reverse-mode differentiation over f64 vectors.
//!
//! Nodes are appended in evaluation order (values are computed eagerly when
//! an op is created) and the backward pass walks the tape in reverse,
//! accumulating vector-Jacobian products. The op set is exactly what the
//! losses need: an affine tanh network, log-softmax, indexing, means, clipped
//! minima, and a stop-gradient barrier. Gradients of branches that an op does
//! not select (the saturated side of a clip, the inside of a stop-gradient)
//! are exact zeros, not small numbers.

pub type NodeId = usize;

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Const,
    /// `y = W x` with W row-major `rows x cols`.
    MatVec { w: NodeId, x: NodeId, rows: usize, cols: usize },
    Add { a: NodeId, b: NodeId },
    Sub { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Scale { x: NodeId, c: f64 },
    Tanh { x: NodeId },
    Exp { x: NodeId },
    LogSoftmax { x: NodeId },
    Index { x: NodeId, at: usize },
    Sum { x: NodeId },
    /// Mean of scalar nodes.
    Mean { xs: Vec<NodeId> },
    /// `y = min(cap, x)` for scalar x; the gradient is 0 once `x >= cap`.
    MinConst { x: NodeId, cap: f64 },
    /// Scalar minimum; ties route the gradient to the first argument.
    Min { a: NodeId, b: NodeId },
    /// Gradient passes only strictly inside `[lo, hi]`... see `backward`.
    Clamp { x: NodeId, lo: f64, hi: f64 },
    /// Identity forward; the backward edge is dropped entirely.
    StopGrad,
    Neg { x: NodeId },
}

struct Node {
    value: Vec<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    fn push(&mut self, value: Vec<f64>, op: Op) -> NodeId {
        self.nodes.push(Node { value, op });
        self.nodes.len() - 1
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        &self.nodes[id].value
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        debug_assert_eq!(self.nodes[id].value.len(), 1);
        self.nodes[id].value[0]
    }

    fn len_of(&self, id: NodeId) -> usize {
        self.nodes[id].value.len()
    }

    /// A differentiable input (parameters).
    pub fn leaf(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Leaf)
    }

    /// A non-differentiable input (features, recorded logprobs, advantages).
    pub fn constant(&mut self, value: Vec<f64>) -> NodeId {
        self.push(value, Op::Const)
    }

    pub fn scalar_const(&mut self, value: f64) -> NodeId {
        self.constant(vec![value])
    }

    pub fn matvec(&mut self, w: NodeId, x: NodeId, rows: usize, cols: usize) -> NodeId {
        assert_eq!(self.len_of(w), rows * cols, "matvec weight shape");
        assert_eq!(self.len_of(x), cols, "matvec input shape");
        let mut y = vec![0.0; rows];
        let wv = &self.nodes[w].value;
        let xv = &self.nodes[x].value;
        for i in 0..rows {
            let row = &wv[i * cols..(i + 1) * cols];
            y[i] = row.iter().zip(xv).map(|(a, b)| a * b).sum();
        }
        self.push(y, Op::MatVec { w, x, rows, cols })
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len_of(a), self.len_of(b), "add shapes");
        let v = self.nodes[a].value.iter().zip(&self.nodes[b].value).map(|(x, y)| x + y).collect();
        self.push(v, Op::Add { a, b })
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len_of(a), self.len_of(b), "sub shapes");
        let v = self.nodes[a].value.iter().zip(&self.nodes[b].value).map(|(x, y)| x - y).collect();
        self.push(v, Op::Sub { a, b })
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(self.len_of(a), self.len_of(b), "mul shapes");
        let v = self.nodes[a].value.iter().zip(&self.nodes[b].value).map(|(x, y)| x * y).collect();
        self.push(v, Op::Mul { a, b })
    }

    pub fn scale(&mut self, x: NodeId, c: f64) -> NodeId {
        let v = self.nodes[x].value.iter().map(|a| a * c).collect();
        self.push(v, Op::Scale { x, c })
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|a| a.tanh()).collect();
        self.push(v, Op::Tanh { x })
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|a| a.exp()).collect();
        self.push(v, Op::Exp { x })
    }

    /// Numerically stable `log softmax` over the whole vector.
    pub fn log_softmax(&mut self, x: NodeId) -> NodeId {
        let xs = &self.nodes[x].value;
        let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + xs.iter().map(|a| (a - m).exp()).sum::<f64>().ln();
        let v = xs.iter().map(|a| a - lse).collect();
        self.push(v, Op::LogSoftmax { x })
    }

    pub fn index(&mut self, x: NodeId, at: usize) -> NodeId {
        let v = vec![self.nodes[x].value[at]];
        self.push(v, Op::Index { x, at })
    }

    pub fn sum(&mut self, x: NodeId) -> NodeId {
        let v = vec![self.nodes[x].value.iter().sum()];
        self.push(v, Op::Sum { x })
    }

    pub fn mean(&mut self, xs: &[NodeId]) -> NodeId {
        assert!(!xs.is_empty(), "mean of nothing");
        for &x in xs {
            debug_assert_eq!(self.len_of(x), 1, "mean expects scalars");
        }
        let v = vec![xs.iter().map(|&x| self.nodes[x].value[0]).sum::<f64>() / xs.len() as f64];
        self.push(v, Op::Mean { xs: xs.to_vec() })
    }

    pub fn min_const(&mut self, cap: f64, x: NodeId) -> NodeId {
        debug_assert_eq!(self.len_of(x), 1);
        let v = vec![self.nodes[x].value[0].min(cap)];
        self.push(v, Op::MinConst { x, cap })
    }

    pub fn min(&mut self, a: NodeId, b: NodeId) -> NodeId {
        debug_assert_eq!(self.len_of(a), 1);
        debug_assert_eq!(self.len_of(b), 1);
        let v = vec![self.nodes[a].value[0].min(self.nodes[b].value[0])];
        self.push(v, Op::Min { a, b })
    }

    pub fn clamp(&mut self, x: NodeId, lo: f64, hi: f64) -> NodeId {
        debug_assert_eq!(self.len_of(x), 1);
        let v = vec![self.nodes[x].value[0].clamp(lo, hi)];
        self.push(v, Op::Clamp { x, lo, hi })
    }

    pub fn stop_grad(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.clone();
        self.push(v, Op::StopGrad)
    }

    pub fn neg(&mut self, x: NodeId) -> NodeId {
        let v = self.nodes[x].value.iter().map(|a| -a).collect();
        self.push(v, Op::Neg { x })
    }

    /// Gradients of a scalar root with respect to every node, by reverse
    /// accumulation over the tape.
    pub fn backward(&self, root: NodeId) -> Gradients {
        assert_eq!(self.len_of(root), 1, "backward needs a scalar root");
        let mut grads: Vec<Vec<f64>> = self.nodes.iter().map(|n| vec![0.0; n.value.len()]).collect();
        grads[root][0] = 1.0;
        for id in (0..self.nodes.len()).rev() {
            if grads[id].iter().all(|&g| g == 0.0) {
                continue;
            }
            let go = std::mem::take(&mut grads[id]);
            match &self.nodes[id].op {
                Op::Leaf | Op::Const => {}
                Op::MatVec { w, x, rows, cols } => {
                    let xv = self.nodes[*x].value.clone();
                    let wv = &self.nodes[*w].value;
                    let mut gx = vec![0.0; *cols];
                    for i in 0..*rows {
                        let gi = go[i];
                        if gi != 0.0 {
                            for j in 0..*cols {
                                gx[j] += gi * wv[i * cols + j];
                            }
                        }
                    }
                    for i in 0..*rows {
                        let gi = go[i];
                        if gi != 0.0 {
                            let gw = &mut grads[*w][i * cols..(i + 1) * cols];
                            for j in 0..*cols {
                                gw[j] += gi * xv[j];
                            }
                        }
                    }
                    for (g, v) in grads[*x].iter_mut().zip(&gx) {
                        *g += v;
                    }
                }
                Op::Add { a, b } => {
                    for (g, v) in grads[*a].iter_mut().zip(&go) {
                        *g += v;
                    }
                    for (g, v) in grads[*b].iter_mut().zip(&go) {
                        *g += v;
                    }
                }
                Op::Sub { a, b } => {
                    for (g, v) in grads[*a].iter_mut().zip(&go) {
                        *g += v;
                    }
                    for (g, v) in grads[*b].iter_mut().zip(&go) {
                        *g -= v;
                    }
                }
                Op::Mul { a, b } => {
                    let av = self.nodes[*a].value.clone();
                    let bv = self.nodes[*b].value.clone();
                    for ((g, v), b) in grads[*a].iter_mut().zip(&go).zip(&bv) {
                        *g += v * b;
                    }
                    for ((g, v), a) in grads[*b].iter_mut().zip(&go).zip(&av) {
                        *g += v * a;
                    }
                }
                Op::Scale { x, c } => {
                    for (g, v) in grads[*x].iter_mut().zip(&go) {
                        *g += v * c;
                    }
                }
                Op::Tanh { x } => {
                    let y = &self.nodes[id].value;
                    for ((g, v), t) in grads[*x].iter_mut().zip(&go).zip(y) {
                        *g += v * (1.0 - t * t);
                    }
                }
                Op::Exp { x } => {
                    let y = &self.nodes[id].value;
                    for ((g, v), e) in grads[*x].iter_mut().zip(&go).zip(y) {
                        *g += v * e;
                    }
                }
                Op::LogSoftmax { x } => {
                    let y = &self.nodes[id].value;
                    let total: f64 = go.iter().sum();
                    for ((g, v), lp) in grads[*x].iter_mut().zip(&go).zip(y) {
                        *g += v - lp.exp() * total;
                    }
                }
                Op::Index { x, at } => {
                    grads[*x][*at] += go[0];
                }
                Op::Sum { x } => {
                    for g in grads[*x].iter_mut() {
                        *g += go[0];
                    }
                }
                Op::Mean { xs } => {
                    let share = go[0] / xs.len() as f64;
                    for &x in xs {
                        grads[x][0] += share;
                    }
                }
                Op::MinConst { x, cap } => {
                    if self.nodes[*x].value[0] < *cap {
                        grads[*x][0] += go[0];
                    }
                }
                Op::Min { a, b } => {
                    if self.nodes[*a].value[0] <= self.nodes[*b].value[0] {
                        grads[*a][0] += go[0];
                    } else {
                        grads[*b][0] += go[0];
                    }
                }
                Op::Clamp { x, lo, hi } => {
                    let v = self.nodes[*x].value[0];
                    if v >= *lo && v <= *hi {
                        grads[*x][0] += go[0];
                    }
                }
                Op::StopGrad => {}
                Op::Neg { x } => {
                    for (g, v) in grads[*x].iter_mut().zip(&go) {
                        *g -= v;
                    }
                }
            }
            // Operands sit earlier on the tape, so this node's gradient is
            // final; put it back after the borrow-splitting take above.
            grads[id] = go;
        }
        Gradients { grads }
    }
}

pub struct Gradients {
    grads: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn of(&self, id: NodeId) -> &[f64] {
        &self.grads[id]
    }
}
